//! Simulation benchmark: random curves under four noise mechanisms, scored
//! by how well each distance recovers the noise-free distances.
//!
//! A replicate draws `series_per_cell` curves for each of the 16
//! (family, noise) cells, computes every method's matrix once over all
//! series, and scores Q and R inside each cell and over all series. Each
//! (replicate, cell) pair owns an independent ChaCha stream, so results do
//! not depend on evaluation order or thread count.

mod criteria;
mod curves;
mod noise;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::dataset::{Dataset, Subject};
use crate::distance::{
    eucl_matrix, select_all, spc_matrix, ss_matrix, DissimilarityMatrix, Method,
};
use crate::error::{Error, Result};
use crate::scalar::fmt_full;

pub use criteria::{midranks, q_criterion, r_criterion};
pub use curves::{gen_curve, unit_grid, CurveFamily};
pub use noise::{gen_noise, NoiseKind, BURN_IN};

/// Mean and standard deviation of the curve parameter `η`.
pub const ETA_MEAN: f64 = 1.0;
pub const ETA_SD: f64 = 0.3;

/// Benchmark design.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub series_per_cell: usize,
    pub grid_size: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Multiplier on every noise path; `0` gives noise-free data.
    pub noise_scale: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            series_per_cell: 10,
            grid_size: 200,
            replicates: 200,
            seed: 1,
            noise_scale: 1.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.series_per_cell < 2 {
            bad.push(format!(
                "series_per_cell = {} (need ≥ 2)",
                self.series_per_cell
            ));
        }
        if self.grid_size < crate::dataset::MIN_OBSERVATIONS {
            bad.push(format!(
                "grid_size = {} (need ≥ {})",
                self.grid_size,
                crate::dataset::MIN_OBSERVATIONS
            ));
        }
        if self.replicates == 0 {
            bad.push("replicates = 0".to_string());
        }
        if !(self.noise_scale >= 0.0) || !self.noise_scale.is_finite() {
            bad.push(format!("noise_scale = {}", self.noise_scale));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(bad.join("; ")))
        }
    }
}

/// A (family, noise) combination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub family: CurveFamily,
    pub noise: NoiseKind,
}

impl Cell {
    /// The 16 cells, family-major.
    pub fn all() -> Vec<Cell> {
        CurveFamily::ALL
            .iter()
            .flat_map(|&family| {
                NoiseKind::ALL
                    .iter()
                    .map(move |&noise| Cell { family, noise })
            })
            .collect()
    }

    /// Position in [`Cell::all`].
    pub fn index(self) -> usize {
        let f = CurveFamily::ALL
            .iter()
            .position(|&x| x == self.family)
            .unwrap();
        let e = NoiseKind::ALL
            .iter()
            .position(|&x| x == self.noise)
            .unwrap();
        f * NoiseKind::ALL.len() + e
    }
}

/// Noise-free curves and their pairwise distances `√Σ_k (f_i(t_k) - f_j(t_k))²`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthTable {
    pub curves: Vec<Vec<f64>>,
    pub distances: DissimilarityMatrix<f64>,
}

impl TruthTable {
    pub fn new(ids: Vec<String>, curves: Vec<Vec<f64>>) -> Self {
        let distances = DissimilarityMatrix::from_upper(ids, |i, j| {
            curves[i]
                .iter()
                .zip(&curves[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        });
        Self { curves, distances }
    }
}

/// One replicate's simulated series, in dataset order.
#[derive(Clone, Debug)]
pub struct Replicate {
    pub dataset: Dataset<f64>,
    pub truth: TruthTable,
    /// Dataset positions of each cell's series, indexed like [`Cell::all`].
    pub cell_members: Vec<Vec<usize>>,
}

fn series_id(cell: Cell, s: usize) -> String {
    format!("{}-{}-{:03}", cell.family, cell.noise, s)
}

/// Observed series and their true curves for one cell of one replicate.
///
/// Depends only on `(seed, replicate, cell)`, never on which other cells
/// have been drawn.
pub fn simulate_cell(
    config: &SimConfig,
    replicate: usize,
    cell: Cell,
) -> Result<Vec<(Subject<f64>, Vec<f64>)>> {
    let grid = unit_grid(config.grid_size);
    let eta_dist = Normal::new(ETA_MEAN, ETA_SD).expect("valid normal");
    let cells = NoiseKind::ALL.len() * CurveFamily::ALL.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream((replicate * cells + cell.index()) as u64);
    (0..config.series_per_cell)
        .map(|s| {
            let eta = eta_dist.sample(&mut rng);
            let truth = gen_curve(cell.family, eta, &grid);
            let eps = gen_noise(cell.noise, grid.len(), &mut rng);
            let y = truth
                .iter()
                .zip(&eps)
                .map(|(f, e)| f + config.noise_scale * e)
                .collect();
            Ok((Subject::new(series_id(cell, s), grid.clone(), y)?, truth))
        })
        .collect()
}

/// Simulates replicate `replicate` of `config`.
pub fn simulate_replicate(config: &SimConfig, replicate: usize) -> Result<Replicate> {
    config.validate()?;
    let cells = Cell::all();
    let mut subjects = Vec::with_capacity(cells.len() * config.series_per_cell);
    let mut truths = Vec::with_capacity(subjects.capacity());
    for &cell in &cells {
        for (subject, truth) in simulate_cell(config, replicate, cell)? {
            truths.push((subject.id().to_string(), truth));
            subjects.push(subject);
        }
    }
    let dataset = Dataset::new(subjects, 0.0, 1.0)?;
    let mut curves = vec![Vec::new(); dataset.len()];
    for (id, truth) in truths {
        let pos = dataset.position(&id).expect("simulated id present");
        curves[pos] = truth;
    }
    let cell_members = cells
        .iter()
        .map(|&cell| {
            (0..config.series_per_cell)
                .map(|s| {
                    dataset
                        .position(&series_id(cell, s))
                        .expect("simulated id present")
                })
                .collect()
        })
        .collect();
    let truth = TruthTable::new(dataset.ids(), curves);
    Ok(Replicate {
        dataset,
        truth,
        cell_members,
    })
}

/// Q and R of one method on one group in one replicate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Score {
    pub q: f64,
    pub r: f64,
}

/// Scores of one replicate: `scores[m][g]` for method `m` and group `g`,
/// groups being the 16 cells followed by ALL.
pub type ReplicateScores = Vec<Vec<Score>>;

/// Computes each requested matrix once and scores every group.
pub fn score_replicate(rep: &Replicate, methods: &[Method]) -> Result<ReplicateScores> {
    let lambdas: Option<Vec<f64>> = if methods.iter().any(|m| m.needs_reml()) {
        Some(
            select_all(&rep.dataset)?
                .into_iter()
                .map(|s| s.lambda_hat)
                .collect(),
        )
    } else {
        None
    };
    methods
        .iter()
        .map(|&method| {
            let matrix = match method {
                Method::Eucl => eucl_matrix(&rep.dataset)?,
                Method::Ss => ss_matrix(&rep.dataset, lambdas.as_deref().unwrap())?,
                Method::Spc => spc_matrix(&rep.dataset, lambdas.as_deref().unwrap())?,
            };
            let mut scores = Vec::with_capacity(rep.cell_members.len() + 1);
            for members in &rep.cell_members {
                let est = matrix.submatrix(members);
                let truth = rep.truth.distances.submatrix(members);
                scores.push(Score {
                    q: q_criterion(&est, &truth)?,
                    r: r_criterion(&est, &truth)?,
                });
            }
            scores.push(Score {
                q: q_criterion(&matrix, &rep.truth.distances)?,
                r: r_criterion(&matrix, &rep.truth.distances)?,
            });
            Ok(scores)
        })
        .collect()
}

/// Averages for one method over one group; `cell == None` is ALL.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupSummary {
    pub cell: Option<Cell>,
    pub method: Method,
    pub q_mean: f64,
    pub r_mean: f64,
    /// Per-replicate values, in replicate order.
    pub q_values: Vec<f64>,
    pub r_values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkReport {
    pub config: SimConfig,
    pub methods: Vec<Method>,
    /// Cells in [`Cell::all`] order then ALL, each block listing `methods` in order.
    pub groups: Vec<GroupSummary>,
}

impl BenchmarkReport {
    pub fn get(&self, cell: Option<Cell>, method: Method) -> Option<&GroupSummary> {
        self.groups
            .iter()
            .find(|g| g.cell == cell && g.method == method)
    }

    /// `family,noise,method,Q_mean,R_mean`; ALL rows use `ALL` for both labels.
    pub fn write_summary_csv<W: Write>(&self, writer: W, header: Option<&str>) -> Result<()> {
        self.write_rows(writer, header, false)
    }

    /// `replicate,family,noise,method,Q,R`, one row per replicate and group.
    pub fn write_raw_csv<W: Write>(&self, writer: W, header: Option<&str>) -> Result<()> {
        self.write_rows(writer, header, true)
    }

    fn write_rows<W: Write>(&self, mut writer: W, header: Option<&str>, raw: bool) -> Result<()> {
        if let Some(h) = header {
            writeln!(writer, "# {h}")?;
        }
        let mut wtr = csv::Writer::from_writer(writer);
        if raw {
            wtr.write_record(["replicate", "family", "noise", "method", "Q", "R"])?;
        } else {
            wtr.write_record(["family", "noise", "method", "Q_mean", "R_mean"])?;
        }
        for g in &self.groups {
            let (family, noise) = match g.cell {
                Some(c) => (c.family.to_string(), c.noise.to_string()),
                None => ("ALL".to_string(), "ALL".to_string()),
            };
            if raw {
                for (r, (q, rr)) in g.q_values.iter().zip(&g.r_values).enumerate() {
                    wtr.write_record([
                        r.to_string(),
                        family.clone(),
                        noise.clone(),
                        g.method.to_string(),
                        fmt_full(*q),
                        fmt_full(*rr),
                    ])?;
                }
            } else {
                wtr.write_record([
                    family,
                    noise,
                    g.method.to_string(),
                    fmt_full(g.q_mean),
                    fmt_full(g.r_mean),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Runs every replicate (in parallel) and averages the scores.
pub fn run_benchmark(config: &SimConfig, methods: &[Method]) -> Result<BenchmarkReport> {
    config.validate()?;
    if methods.is_empty() {
        return Err(Error::InvalidArgument(
            "no distance methods requested".into(),
        ));
    }
    let mut methods_dedup: Vec<Method> = Vec::new();
    for &m in methods {
        if !methods_dedup.contains(&m) {
            methods_dedup.push(m);
        }
    }
    let per_rep: Vec<ReplicateScores> = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            simulate_replicate(config, r).and_then(|rep| score_replicate(&rep, &methods_dedup))
        })
        .collect::<Result<_>>()?;

    let cells = Cell::all();
    let group_cells: Vec<Option<Cell>> = cells.iter().copied().map(Some).chain([None]).collect();
    let count = config.replicates as f64;
    let mut groups = Vec::new();
    for (g, &cell) in group_cells.iter().enumerate() {
        for (m, &method) in methods_dedup.iter().enumerate() {
            let q_values: Vec<f64> = per_rep.iter().map(|s| s[m][g].q).collect();
            let r_values: Vec<f64> = per_rep.iter().map(|s| s[m][g].r).collect();
            groups.push(GroupSummary {
                cell,
                method,
                q_mean: q_values.iter().sum::<f64>() / count,
                r_mean: r_values.iter().sum::<f64>() / count,
                q_values,
                r_values,
            });
        }
    }
    Ok(BenchmarkReport {
        config: config.clone(),
        methods: methods_dedup,
        groups,
    })
}

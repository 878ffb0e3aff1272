//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! The simulation criteria drive the `spcdist` binary and read its CSV
//! output; the oracle criteria call the library directly and compare with
//! the dense reference computations shared with the core integration tests.

#[path = "../../core/tests/common/mod.rs"]
mod oracles;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tempfile::TempDir;

use spcdist_core::cluster::{flag_outliers, knn_outlier_scores, pam, OutlierRule};
use spcdist_core::distance::{l2_between_fits, select_all, spc_distance, spc_matrix, ss_matrix};
use spcdist_core::simbench::{q_criterion, r_criterion, unit_grid};
use spcdist_core::spline::{
    coarse_grid, fit_given_lambda, fit_on_domain, restricted_loglik, MixedModelParts,
};
use spcdist_core::{Dataset, DissimilarityMatrix, Subject};

use oracles::*;

const SIM_SEED: &str = "2024";
const SIM_REPLICATES: &str = "20";

type Outcome = Result<String, String>;

/// Summary rows keyed by `(family, noise, method)`.
type Summary = HashMap<(String, String, String), (f64, f64)>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn spcdist(dir: &Path, threads: Option<&str>, args: &[&str]) -> Result<(), String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spcdist"));
    cmd.current_dir(dir).args(args);
    if let Some(n) = threads {
        cmd.env("SPCDIST_THREADS", n);
    }
    let out = cmd.output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn run_simulation() -> Result<Summary, String> {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    spcdist(
        dir.path(),
        None,
        &[
            "simulate",
            "--replicates",
            SIM_REPLICATES,
            "--seed",
            SIM_SEED,
            "--out",
            "summary.csv",
        ],
    )?;
    let text = fs::read_to_string(dir.path().join("summary.csv")).map_err(|e| e.to_string())?;
    let mut summary = Summary::new();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let q = f[3].parse::<f64>().map_err(|e| e.to_string())?;
        let r = f[4].parse::<f64>().map_err(|e| e.to_string())?;
        summary.insert((f[0].into(), f[1].into(), f[2].into()), (q, r));
    }
    Ok(summary)
}

fn lookup(s: &Summary, family: &str, noise: &str, method: &str) -> Result<(f64, f64), String> {
    s.get(&(family.into(), noise.into(), method.into()))
        .copied()
        .ok_or_else(|| format!("no summary row for {family},{noise},{method}"))
}

fn simulation_q_ordering(s: &Summary) -> Outcome {
    let (q_spc, _) = lookup(s, "f1", "WN", "spc")?;
    let (q_eucl, _) = lookup(s, "f1", "WN", "eucl")?;
    let ratio = q_spc / q_eucl;
    let target = 0.36;
    let within = (q_spc - target).abs() <= 0.5 * target;
    check(
        q_spc < q_eucl && ratio <= 0.5 && within,
        format!(
            "f1+WN Q(spc)={q_spc:.4} Q(eucl)={q_eucl:.4} ratio={ratio:.3} (<= 0.5: {}), |Q(spc)-0.36| <= 0.18: {within}",
            ratio <= 0.5
        ),
    )
}

fn simulation_r_ordering(s: &Summary) -> Outcome {
    let (_, r_spc) = lookup(s, "ALL", "ALL", "spc")?;
    let (_, r_ss) = lookup(s, "ALL", "ALL", "ss")?;
    let (_, r_eucl) = lookup(s, "ALL", "ALL", "eucl")?;
    check(
        r_spc < r_eucl && r_spc <= 1.05 * r_ss,
        format!("ALL R(spc)={r_spc:.6e} R(ss)={r_ss:.6e} R(eucl)={r_eucl:.6e}"),
    )
}

fn periodic_signal_advantage(s: &Summary) -> Outcome {
    let (q_spc, _) = lookup(s, "f2", "WN", "spc")?;
    let (q_eucl, _) = lookup(s, "f2", "WN", "eucl")?;
    check(
        q_spc < q_eucl,
        format!("f2+WN Q(spc)={q_spc:.4} Q(eucl)={q_eucl:.4}"),
    )
}

fn spline_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut fit_err, mut reml_err) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let k = rng.random_range(5..=30);
        let t = random_times(&mut rng, k, 0.1, 0.9);
        let y: Vec<f64> = t
            .iter()
            .map(|t| (4.0 * t).cos() + rng.random_range(-0.5..0.5))
            .collect();
        let s = Subject::new("s", t.clone(), y.clone()).map_err(|e| e.to_string())?;
        let lambda = 10f64.powf(rng.random_range(-6.0..1.0));
        let fit = fit_given_lambda(&s, lambda).map_err(|e| e.to_string())?;
        for (a, b) in fit.fitted().iter().zip(qr_smoother(&t, &y, lambda)) {
            fit_err = fit_err.max((a - b).abs());
        }
        let domain = (0.0, 1.2);
        let parts = MixedModelParts::new(&s, domain).map_err(|e| e.to_string())?;
        for x in coarse_grid() {
            let lambda = 10f64.powf(x);
            let fast = restricted_loglik(&s, &parts, lambda).map_err(|e| e.to_string())?;
            let dense = dense_restricted_loglik(&t, &y, lambda, domain.0, domain.1);
            reml_err = reml_err.max((fast - dense).abs());
        }
    }
    check(
        fit_err < 1e-8 && reml_err < 1e-8,
        format!("50 subjects: max fit diff {fit_err:.2e}, max loglik diff {reml_err:.2e} over 33 grid points each"),
    )
}

fn quadrature_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut riemann_err = 0.0f64;
    for _ in 0..100 {
        let mut subject = |id: &str| {
            let k = rng.random_range(4..15);
            let t = random_times(&mut rng, k, 0.0, 1.0);
            let phase = rng.random_range(0.0..3.0);
            let y = t
                .iter()
                .map(|t| (5.0 * t + phase).sin() + rng.random_range(-0.3..0.3))
                .collect();
            let s = Subject::new(id, t, y).unwrap();
            fit_on_domain(&s, 10f64.powf(rng.random_range(-6.0..-1.0)), (0.0, 1.0)).unwrap()
        };
        let (fa, fb) = (subject("a"), subject("b"));
        let exact = l2_between_fits(&fa, &fb, 0.0, 1.0).map_err(|e| e.to_string())?;
        let riemann = riemann_l2(
            |t| fa.evaluate(t).unwrap(),
            |t| fb.evaluate(t).unwrap(),
            0.0,
            1.0,
            1_000_000,
        );
        riemann_err = riemann_err.max((exact - riemann).abs());
    }

    let pa = [1.0, 2.0, -1.0, 0.5];
    let pb = [-0.5, 1.0, 3.0, -2.0];
    let pc = [0.3, -1.0, 4.0, 1.0];
    let diff = |p: [f64; 4], q: [f64; 4]| [p[0] - q[0], p[1] - q[1], p[2] - q[2], p[3] - q[3]];
    let cases = [
        (
            piecewise(&[0.0, 0.25, 0.6, 1.0], &[pa; 3]),
            piecewise(&[0.0, 0.5, 1.0], &[pb; 2]),
            square_integral(diff(pa, pb), 0.0, 1.0),
        ),
        (
            piecewise(&[0.0, 0.4, 1.0], &[pa, pc]),
            piecewise(&[0.0, 0.7, 1.0], &[pb, pa]),
            square_integral(diff(pa, pb), 0.0, 0.4)
                + square_integral(diff(pc, pb), 0.4, 0.7)
                + square_integral(diff(pc, pa), 0.7, 1.0),
        ),
    ];
    let mut symbolic_err = 0.0f64;
    for (a, b, sq) in &cases {
        let d = l2_between_fits(a, b, 0.0, 1.0).map_err(|e| e.to_string())?;
        symbolic_err = symbolic_err.max((d - sq.sqrt()).abs());
    }
    check(
        riemann_err < 1e-8 && symbolic_err < 1e-12,
        format!("100 pairs vs 1e6-point Riemann: max diff {riemann_err:.2e}; hand-built cubics: max diff {symbolic_err:.2e}"),
    )
}

fn random_dataset(rng: &mut ChaCha8Rng, n: usize) -> Dataset {
    let subjects = (0..n)
        .map(|i| {
            let k = rng.random_range(5..25);
            let t = random_times(rng, k, 0.0, 1.0);
            let phase = rng.random_range(0.0..3.0);
            let y = t
                .iter()
                .map(|t| (5.0 * t + phase).sin() + rng.random_range(-0.3..0.3))
                .collect();
            Subject::new(format!("s{i}"), t, y).unwrap()
        })
        .collect();
    Dataset::new(subjects, 0.0, 1.0).unwrap()
}

fn spc_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut violations = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..7);
        let data = random_dataset(&mut rng, n);
        let lambdas: Vec<f64> = (0..n)
            .map(|_| 10f64.powf(rng.random_range(-6.0..0.0)))
            .collect();
        let m = spc_matrix(&data, &lambdas).map_err(|e| e.to_string())?;
        for i in 0..n {
            violations += usize::from(m.get(i, i) != 0.0);
            for j in 0..n {
                violations +=
                    usize::from(m.get(i, j) < 0.0 || (m.get(i, j) - m.get(j, i)).abs() > 1e-12);
            }
        }
    }

    let mut shared_err = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(2..6);
        let data = random_dataset(&mut rng, n);
        let lambdas = vec![10f64.powf(rng.random_range(-6.0..0.0)); n];
        let spc = spc_matrix(&data, &lambdas).map_err(|e| e.to_string())?;
        let ss = ss_matrix(&data, &lambdas).map_err(|e| e.to_string())?;
        for (a, b) in spc.entries().iter().zip(ss.entries()) {
            shared_err = shared_err.max((a - b).abs());
        }
    }

    let t = unit_grid(500);
    let a = Subject::new("a", t.clone(), t.clone()).map_err(|e| e.to_string())?;
    let b = Subject::new("b", t.clone(), t.iter().map(|t| 2.0 * t).collect())
        .map_err(|e| e.to_string())?;
    let d = spc_distance(&a, &b, 1e-10, 1e-9, (0.0, 1.0)).map_err(|e| e.to_string())?;
    let analytic_err = (d - 1.0 / 3f64.sqrt()).abs();
    check(
        violations == 0 && shared_err <= 1e-12 && analytic_err < 1e-3,
        format!(
            "100 matrices: {violations} violations; shared-λ spc-ss max diff {shared_err:.2e}; t vs 2t: {d:.6} (|diff| {analytic_err:.2e})"
        ),
    )
}

fn noisy_copy(rng: &mut ChaCha8Rng, truth: &DissimilarityMatrix) -> DissimilarityMatrix {
    let n = truth.len();
    let noise: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.0..2.0)).collect();
    DissimilarityMatrix::from_upper(truth.ids().to_vec(), |i, j| {
        truth.get(i, j) + noise[i * n + j]
    })
}

fn q_r_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut grid_err, mut affine_err, mut rank_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let truth = random_matrix(&mut rng, 8);
        let est = noisy_copy(&mut rng, &truth);
        let q = q_criterion(&est, &truth).map_err(|e| e.to_string())?;
        grid_err = grid_err.max((q - grid_search_q(&est, &truth)).abs());

        let (a, b): (f64, f64) = (rng.random_range(0.0..5.0), rng.random_range(0.1..10.0));
        let q_affine = q_criterion(&est.map(|v| a + b * v), &truth).map_err(|e| e.to_string())?;
        affine_err = affine_err.max((q_affine - q).abs() / q.max(1.0));

        let r = r_criterion(&est, &truth).map_err(|e| e.to_string())?;
        for f in [
            |v: f64| v.exp(),
            |v: f64| v * v * v + v,
            |v: f64| (1.0 + v).ln(),
        ] {
            let r_mapped = r_criterion(&est.map(f), &truth).map_err(|e| e.to_string())?;
            rank_err = rank_err.max((r_mapped - r).abs());
        }
    }

    let mut reversed_exact = true;
    for n in [3usize, 4, 6, 9] {
        let m = n * (n - 1) / 2;
        let mut next = 0.0;
        let truth = DissimilarityMatrix::from_upper(ids(n), |_, _| {
            next += 1.0;
            next
        });
        let r = r_criterion(&truth.map(|v| 1000.0 - v), &truth).map_err(|e| e.to_string())?;
        reversed_exact &= r == 2.0 * (m * (m * m - 1)) as f64 / 3.0;
    }
    check(
        grid_err < 1e-6 && affine_err < 1e-9 && rank_err < 1e-9 && reversed_exact,
        format!(
            "Q vs grid search max diff {grid_err:.2e}; affine {affine_err:.2e}; monotone R {rank_err:.2e}; reversed ranks exact: {reversed_exact}"
        ),
    )
}

fn pam_quality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut optimal, mut worst, mut monotone) = (0, 1.0f64, true);
    for _ in 0..100 {
        let m = random_matrix(&mut rng, 12);
        let best = exhaustive_pam(&m, 3);
        let c = pam(&m, 3).map_err(|e| e.to_string())?;
        if c.total_cost <= best * (1.0 + 1e-12) {
            optimal += 1;
        }
        worst = worst.max(c.total_cost / best);
        monotone &= c.cost_trace.windows(2).all(|w| w[1] <= w[0]);
    }
    check(
        optimal >= 90 && worst <= 1.05 && monotone,
        format!(
            "optimal on {optimal}/100 (need >= 90); worst cost/optimum {worst:.4} (need <= 1.05); trace nonincreasing: {monotone}"
        ),
    )
}

fn outlier_pipeline() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let eta = Normal::new(1.0, 0.3).unwrap();
    let t = unit_grid(50);
    let (smooth_sd, wild_sd) = (0.1, 1.0);
    let subjects: Vec<Subject> = (0..31)
        .map(|i| {
            let a = eta.sample(&mut rng);
            let noise = Normal::new(0.0, if i == 30 { wild_sd } else { smooth_sd }).unwrap();
            let y = t
                .iter()
                .map(|&t| a * (2.0 * PI * t).sin() + noise.sample(&mut rng))
                .collect();
            Subject::new(format!("c{i:02}"), t.clone(), y).unwrap()
        })
        .collect();
    let data = Dataset::new(subjects, 0.0, 1.0).map_err(|e| e.to_string())?;
    let lambdas: Vec<f64> = select_all(&data)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|s| s.lambda_hat)
        .collect();
    let m = spc_matrix(&data, &lambdas).map_err(|e| e.to_string())?;
    let scores = knn_outlier_scores(&m, 3).map_err(|e| e.to_string())?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let ratio = scores[order[0]] / scores[order[1]];
    let report =
        flag_outliers(m.ids(), &scores, OutlierRule::default()).map_err(|e| e.to_string())?;
    let top = &m.ids()[order[0]];
    check(
        top == "c30" && ratio >= 3.0 && report.flagged == ["c30"],
        format!(
            "top score {top} with ratio {ratio:.2} to the next; gap mode flagged {:?}",
            report.flagged
        ),
    )
}

fn determinism() -> Outcome {
    let args = [
        "simulate",
        "--replicates",
        "4",
        "--seed",
        "11",
        "--series-per-cell",
        "3",
        "--grid-size",
        "50",
        "--out",
        "summary.csv",
        "--raw",
        "raw.csv",
    ];
    let mut outputs = Vec::new();
    for threads in ["1", "8", "8"] {
        let dir = TempDir::new().map_err(|e| e.to_string())?;
        spcdist(dir.path(), Some(threads), &args)?;
        let read = |name: &str| fs::read(dir.path().join(name)).map_err(|e| e.to_string());
        outputs.push((read("summary.csv")?, read("raw.csv")?));
    }
    let threads_match = outputs[0] == outputs[1];
    let runs_match = outputs[1] == outputs[2];
    check(
        threads_match && runs_match,
        format!("1 vs 8 threads identical: {threads_match}; repeated run identical: {runs_match}"),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let simulation = run_simulation();
    let sim = |f: fn(&Summary) -> Outcome| -> Outcome {
        match &simulation {
            Ok(s) => f(s),
            Err(e) => Err(format!("simulation failed: {e}")),
        }
    };
    let criteria: Vec<(&str, Outcome)> = vec![
        ("simulation Q ordering", sim(simulation_q_ordering)),
        ("simulation R ordering", sim(simulation_r_ordering)),
        ("periodic-signal advantage", sim(periodic_signal_advantage)),
        ("spline oracle equivalence", spline_oracles()),
        ("quadrature exactness", quadrature_exactness()),
        ("SPC property suite", spc_properties()),
        ("Q/R oracle suite", q_r_oracles()),
        ("PAM quality", pam_quality()),
        ("outlier pipeline", outlier_pipeline()),
        ("determinism", determinism()),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in criteria.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

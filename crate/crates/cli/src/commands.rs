use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use spcdist_core::cluster::{
    flag_outliers, knn_outlier_scores, pam, OutlierRule, DEFAULT_NEIGHBORS,
};
use spcdist_core::dataset::parse_long_csv;
use spcdist_core::distance::{
    eucl_matrix, select_all, spc_matrix, ss_matrix, DissimilarityMatrix, Method,
};
use spcdist_core::simbench::{run_benchmark, SimConfig};
use spcdist_core::spline::{fit_on_domain, penalty_lambda, select_for_subject};
use spcdist_core::{fmt_full, Dataset};

use crate::options::Options;
use crate::{CliError, Command, Common};

/// Smoothing-parameter choice for `fit` and `dist`.
#[derive(Clone, Copy, Debug, PartialEq)]
enum LambdaChoice {
    Reml,
    Fixed(f64),
}

fn lambda_choice(opts: &Options) -> Result<LambdaChoice, CliError> {
    match opts.get("lambda").unwrap_or("auto") {
        "auto" => Ok(LambdaChoice::Reml),
        v => match v.parse::<f64>() {
            Ok(x) if x > 0.0 && x.is_finite() => Ok(LambdaChoice::Fixed(x)),
            _ => Err(CliError::Usage(format!(
                "--lambda must be `auto` or a positive number, got `{v}`"
            ))),
        },
    }
}

fn options(common: &Common, allowed: &[&str]) -> Result<Options, CliError> {
    let mut opts = match &common.config {
        Some(path) => Options::from_config_file(path, allowed)?,
        None => Options::default(),
    };
    opts.set("out", common.out.as_ref());
    Ok(opts)
}

fn open_output(opts: &Options) -> Result<Box<dyn Write>, CliError> {
    Ok(match opts.get("out") {
        Some(path) => {
            Box::new(BufWriter::new(File::create(path).map_err(|e| {
                CliError::Usage(format!("cannot create {path}: {e}"))
            })?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn open_input(path: &str) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Usage(format!("cannot open {path}: {e}")))
}

fn read_dataset(opts: &Options) -> Result<Dataset, CliError> {
    Ok(parse_long_csv(open_input(opts.require("input")?)?, None)?)
}

fn read_matrix(opts: &Options) -> Result<DissimilarityMatrix<f64>, CliError> {
    Ok(DissimilarityMatrix::read_csv(open_input(
        opts.require("input")?,
    )?)?)
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Fit {
            input,
            lambda,
            grid,
            common,
        } => {
            let mut opts = options(&common, &["input", "lambda", "grid", "out"])?;
            opts.set("input", input);
            opts.set("lambda", lambda);
            opts.set("grid", grid);
            cmd_fit(&opts)
        }
        Command::Dist {
            input,
            method,
            lambda,
            common,
        } => {
            let mut opts = options(&common, &["input", "method", "lambda", "out"])?;
            opts.set("input", input);
            opts.set("method", method);
            opts.set("lambda", lambda);
            cmd_dist(&opts)
        }
        Command::Outliers {
            input,
            k,
            mode,
            common,
        } => {
            let mut opts = options(&common, &["input", "k", "mode", "out"])?;
            opts.set("input", input);
            opts.set("k", k);
            opts.set("mode", mode);
            cmd_outliers(&opts)
        }
        Command::Cluster {
            input,
            k,
            exclude,
            common,
        } => {
            let mut opts = options(&common, &["input", "k", "exclude", "out"])?;
            opts.set("input", input);
            opts.set("k", k);
            opts.set("exclude", exclude);
            cmd_cluster(&opts)
        }
        Command::Simulate {
            replicates,
            seed,
            methods,
            series_per_cell,
            grid_size,
            noise_scale,
            raw,
            common,
        } => {
            let mut opts = options(
                &common,
                &[
                    "replicates",
                    "seed",
                    "methods",
                    "series-per-cell",
                    "grid-size",
                    "noise-scale",
                    "raw",
                    "out",
                ],
            )?;
            opts.set("replicates", replicates);
            opts.set("seed", seed);
            opts.set("methods", methods);
            opts.set("series-per-cell", series_per_cell);
            opts.set("grid-size", grid_size);
            opts.set("noise-scale", noise_scale);
            opts.set("raw", raw);
            cmd_simulate(&opts)
        }
    }
}

fn cmd_fit(opts: &Options) -> Result<(), CliError> {
    let choice = lambda_choice(opts)?;
    let grid: Option<usize> = opts.parse("grid")?;
    let curves_path = match grid {
        Some(m) if m < 2 => return Err(CliError::Usage("--grid needs at least 2 points".into())),
        Some(_) => Some(format!(
            "{}.curves.csv",
            opts.get("out")
                .ok_or_else(|| CliError::Usage("--grid requires --out".into()))?
                .trim_end_matches(".csv")
        )),
        None => None,
    };
    let data = read_dataset(opts)?;
    let domain = data.domain();
    let mut out = open_output(opts)?;
    writeln!(out, "# {}", opts.provenance("fit"))?;
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["subject", "lambda_hat", "sigma2_hat", "sigma_u2_hat"])
        .map_err(spcdist_core::Error::from)?;

    let mut fits = Vec::with_capacity(data.len());
    for subject in data.subjects() {
        let (row, weight) = match choice {
            LambdaChoice::Reml => {
                let sel = select_for_subject(subject, domain)?;
                (
                    [
                        fmt_full(sel.lambda_hat),
                        fmt_full(sel.sigma2_hat),
                        fmt_full(sel.sigma_u2_hat),
                    ],
                    sel.penalty_lambda,
                )
            }
            LambdaChoice::Fixed(v) => (
                [fmt_full(v), String::new(), String::new()],
                penalty_lambda(v, domain),
            ),
        };
        wtr.write_record([subject.id(), &row[0], &row[1], &row[2]])
            .map_err(spcdist_core::Error::from)?;
        if grid.is_some() {
            fits.push(fit_on_domain(subject, weight, domain)?);
        }
    }
    wtr.flush()?;

    if let (Some(m), Some(path)) = (grid, curves_path) {
        let mut file = BufWriter::new(File::create(Path::new(&path))?);
        writeln!(file, "# {}", opts.provenance("fit"))?;
        let mut wtr = csv::Writer::from_writer(file);
        wtr.write_record(["subject", "time", "value"])
            .map_err(spcdist_core::Error::from)?;
        let (lo, hi) = domain;
        for fit in &fits {
            for i in 0..m {
                let t = if i + 1 == m {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (m - 1) as f64
                };
                wtr.write_record([fit.subject_id(), &fmt_full(t), &fmt_full(fit.evaluate(t)?)])
                    .map_err(spcdist_core::Error::from)?;
            }
        }
        wtr.flush()?;
    }
    Ok(())
}

fn cmd_dist(opts: &Options) -> Result<(), CliError> {
    let method: Method = opts.parse_or("method", Method::Spc)?;
    let choice = lambda_choice(opts)?;
    let data = read_dataset(opts)?;
    let matrix = match method {
        Method::Eucl => eucl_matrix(&data)?,
        Method::Ss | Method::Spc => {
            let lambdas: Vec<f64> = match choice {
                LambdaChoice::Reml => select_all(&data)?
                    .into_iter()
                    .map(|s| s.lambda_hat)
                    .collect(),
                LambdaChoice::Fixed(v) => vec![v; data.len()],
            };
            if method == Method::Spc {
                spc_matrix(&data, &lambdas)?
            } else {
                ss_matrix(&data, &lambdas)?
            }
        }
    };
    let mut out = open_output(opts)?;
    matrix.write_csv(&mut out, Some(&opts.provenance("dist")))?;
    out.flush()?;
    Ok(())
}

fn cmd_outliers(opts: &Options) -> Result<(), CliError> {
    let k = opts.parse_or("k", DEFAULT_NEIGHBORS)?;
    let rule: OutlierRule = opts.parse_or("mode", OutlierRule::default())?;
    let matrix = read_matrix(opts)?;
    let scores = knn_outlier_scores(&matrix, k)?;
    let report = flag_outliers(matrix.ids(), &scores, rule)?;
    let mut out = open_output(opts)?;
    writeln!(out, "# {}", opts.provenance("outliers"))?;
    match report.threshold_used {
        Some(t) => writeln!(out, "# threshold_used={}", fmt_full(t))?,
        None => writeln!(out, "# threshold_used=none")?,
    }
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["subject", "score", "flagged"])
        .map_err(spcdist_core::Error::from)?;
    for (id, &s) in report.ids.iter().zip(&report.scores) {
        let flagged = if report.is_flagged(id) {
            "true"
        } else {
            "false"
        };
        wtr.write_record([id.as_str(), &fmt_full(s), flagged])
            .map_err(spcdist_core::Error::from)?;
    }
    wtr.flush()?;
    Ok(())
}

fn cmd_cluster(opts: &Options) -> Result<(), CliError> {
    let k: usize = opts
        .parse("k")?
        .ok_or_else(|| CliError::Usage("missing required option --k".into()))?;
    let exclude: Vec<String> = opts
        .get("exclude")
        .map(|s| {
            s.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()
        })
        .unwrap_or_default();
    let matrix = read_matrix(opts)?.without(&exclude)?;
    let clustering = pam(&matrix, k)?;
    let mut out = open_output(opts)?;
    writeln!(out, "# {}", opts.provenance("cluster"))?;
    writeln!(out, "# total_cost={}", fmt_full(clustering.total_cost))?;
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["subject", "cluster", "medoid"])
        .map_err(spcdist_core::Error::from)?;
    for (i, id) in clustering.ids.iter().enumerate() {
        let medoid = &clustering.ids[clustering.medoid_of(i)];
        wtr.write_record([
            id.as_str(),
            &(clustering.assignment[i] + 1).to_string(),
            medoid,
        ])
        .map_err(spcdist_core::Error::from)?;
    }
    wtr.flush()?;
    Ok(())
}

fn cmd_simulate(opts: &Options) -> Result<(), CliError> {
    let defaults = SimConfig::default();
    let config = SimConfig {
        series_per_cell: opts.parse_or("series-per-cell", defaults.series_per_cell)?,
        grid_size: opts.parse_or("grid-size", defaults.grid_size)?,
        replicates: opts.parse_or("replicates", defaults.replicates)?,
        seed: opts.parse_or("seed", defaults.seed)?,
        noise_scale: opts.parse_or("noise-scale", defaults.noise_scale)?,
    };
    let methods: Vec<Method> = opts
        .get("methods")
        .unwrap_or("eucl,ss,spc")
        .split(',')
        .map(|m| m.parse::<Method>())
        .collect::<Result<_, _>>()?;
    let report = run_benchmark(&config, &methods)?;
    let header = opts.provenance("simulate");
    let mut out = open_output(opts)?;
    report.write_summary_csv(&mut out, Some(&header))?;
    out.flush()?;
    if let Some(raw) = opts.get("raw") {
        let file = BufWriter::new(File::create(raw)?);
        report.write_raw_csv(file, Some(&header))?;
    }
    Ok(())
}

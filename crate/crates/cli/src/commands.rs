//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use advreg::experiments::{
    feature_sweep, generate_isotropic, generate_latent, log_grid, regularization_path,
    standardize, IsotropicSpec, LatentSpec, SweepData, SweepRecord, SweepSpec,
};
use advreg::solvers::{fit, EstimatorSpec};
use advreg::thresholds::{exact_thresholds, interpolation_thresholds};
use advreg::{AttackBudget, Dataset, FitResult, Method, RngSeed};
use serde::Serialize;

use crate::args::{
    Command, FitArgs, GenArgs, ModelArg, ModelArgs, PathArgs, ReplayArgs, SweepArgs,
    ThresholdsArgs,
};
use crate::error::{CliError, CliResult};
use crate::io::{csv_err, dataset_csv, finish_csv, fmt_f64, read_dataset, write_atomic};
use crate::manifest::{digest, FileDigest, RunManifest};

/// What a command produced, before its manifest is written.
struct Outcome {
    inputs: Vec<FileDigest>,
    /// Reported after the output and manifest are on disk.
    warning: Option<String>,
}

/// Runs one command and writes its output and manifest. Returns the path
/// of the manifest.
pub fn run(command: &Command) -> CliResult<PathBuf> {
    if let Command::Replay(args) = command {
        return replay(args);
    }
    let command = &absolute_paths(command)?;
    let start = Instant::now();
    let outcome = match command {
        Command::Fit(a) => cmd_fit(a)?,
        Command::Path(a) => cmd_path(a)?,
        Command::Thresholds(a) => cmd_thresholds(a)?,
        Command::Gen(a) => cmd_gen(a)?,
        Command::Sweep(a) => cmd_sweep(a)?,
        Command::Replay(_) => unreachable!(),
    };
    let out = output_path(command);
    let manifest = RunManifest {
        command: command_name(command).into(),
        config: command.clone(),
        seed: command_seed(command),
        version: env!("CARGO_PKG_VERSION").into(),
        duration_secs: start.elapsed().as_secs_f64(),
        inputs: outcome.inputs,
        outputs: vec![digest(out)?],
    };
    let path = manifest.write(out)?;
    match outcome.warning {
        Some(w) => Err(CliError::NotConverged(w)),
        None => Ok(path),
    }
}

pub fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Fit(_) => "fit",
        Command::Path(_) => "path",
        Command::Thresholds(_) => "thresholds",
        Command::Gen(_) => "gen",
        Command::Sweep(_) => "sweep",
        Command::Replay(_) => "replay",
    }
}

fn command_seed(command: &Command) -> u64 {
    match command {
        Command::Fit(a) => a.solver.seed,
        Command::Path(a) => a.solver.seed,
        Command::Thresholds(a) => a.solver.seed,
        Command::Gen(a) => a.seed,
        Command::Sweep(a) => a.solver.seed,
        Command::Replay(_) => 0,
    }
}

fn output_path(command: &Command) -> &Path {
    match command {
        Command::Fit(a) => &a.out,
        Command::Path(a) => &a.out,
        Command::Thresholds(a) => &a.out,
        Command::Gen(a) => &a.out,
        Command::Sweep(a) => &a.out,
        Command::Replay(a) => a.out.as_deref().unwrap_or(&a.manifest),
    }
}

/// Manifests record absolute paths so replays work from any directory.
fn absolute_paths(command: &Command) -> CliResult<Command> {
    let abs = |p: &mut PathBuf| -> CliResult<()> {
        *p = std::path::absolute(&*p)
            .map_err(|e| CliError::Io(format!("cannot resolve {}: {e}", p.display())))?;
        Ok(())
    };
    let mut command = command.clone();
    match &mut command {
        Command::Fit(a) => {
            abs(&mut a.data.data)?;
            abs(&mut a.out)?;
        }
        Command::Path(a) => {
            abs(&mut a.data.data)?;
            abs(&mut a.out)?;
        }
        Command::Thresholds(a) => {
            abs(&mut a.data.data)?;
            abs(&mut a.out)?;
        }
        Command::Gen(a) => abs(&mut a.out)?,
        Command::Sweep(a) => abs(&mut a.out)?,
        Command::Replay(_) => {}
    }
    Ok(command)
}

fn set_output(command: &mut Command, out: PathBuf) {
    match command {
        Command::Fit(a) => a.out = out,
        Command::Path(a) => a.out = out,
        Command::Thresholds(a) => a.out = out,
        Command::Gen(a) => a.out = out,
        Command::Sweep(a) => a.out = out,
        Command::Replay(a) => a.out = Some(out),
    }
}

fn replay(args: &ReplayArgs) -> CliResult<PathBuf> {
    let manifest = RunManifest::read(&args.manifest)?;
    if matches!(manifest.config, Command::Replay(_)) {
        return Err(CliError::Invalid("a manifest cannot record a replay".into()));
    }
    manifest.verify_inputs()?;
    let mut command = manifest.config;
    if let Some(out) = &args.out {
        set_output(&mut command, out.clone());
    }
    run(&command)
}

fn load(data: &crate::args::DataArgs) -> CliResult<(Dataset, Vec<FileDigest>)> {
    let dataset = read_dataset(&data.data, &data.target_col)?;
    Ok((dataset, vec![digest(&data.data)?]))
}

fn json_bytes<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Io(format!("json: {e}")))?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn estimator_spec(a: &FitArgs) -> CliResult<EstimatorSpec> {
    let config = a.solver.config();
    let spec = match (a.method.needs_delta(), a.delta) {
        (true, None) => {
            return Err(CliError::Invalid(format!(
                "--method {} needs --delta",
                a.method.method()
            )))
        }
        (false, Some(_)) => {
            return Err(CliError::Invalid(format!(
                "--method {} takes no --delta",
                a.method.method()
            )))
        }
        (_, delta) => {
            let delta = delta.unwrap_or(0.0);
            if a.method.method() == Method::Adversarial {
                EstimatorSpec::adversarial(AttackBudget::new(delta, a.p.norm())?)
            } else {
                EstimatorSpec::penalized(a.method.method(), delta)
            }
        }
    };
    Ok(spec.with_config(config))
}

#[derive(Debug, Serialize)]
struct FitDocument {
    method: Method,
    /// Attack norm, adversarial training only.
    p: Option<&'static str>,
    delta: Option<f64>,
    n: usize,
    m: usize,
    #[serde(flatten)]
    fit: FitResult,
}

fn cmd_fit(a: &FitArgs) -> CliResult<Outcome> {
    let (data, inputs) = load(&a.data)?;
    let spec = estimator_spec(a)?;
    let result = fit(&data, &spec)?;
    let converged = result.converged;
    let residual = result.optimality_residual;
    let doc = FitDocument {
        method: spec.kind,
        p: (spec.kind == Method::Adversarial).then(|| p_label(a.p)),
        delta: a.delta,
        n: data.n(),
        m: data.m(),
        fit: result,
    };
    write_atomic(&a.out, &json_bytes(&doc)?)?;
    Ok(Outcome {
        inputs,
        warning: (!converged).then(|| {
            format!("fit did not reach tolerance {} (residual {residual:.3e})", a.solver.tol)
        }),
    })
}

fn p_label(p: crate::args::PArg) -> &'static str {
    match p {
        crate::args::PArg::Two => "2",
        crate::args::PArg::Inf => "inf",
    }
}

fn cmd_path(a: &PathArgs) -> CliResult<Outcome> {
    let (data, inputs) = load(&a.data)?;
    let config = a.solver.config();
    config.validate()?;
    let grid = match &a.deltas {
        Some(d) => d.clone(),
        None => log_grid(a.grid_min, a.grid_max, a.grid_size)?,
    };
    let mut records = regularization_path(&data, a.method.method(), a.p.norm(), &grid, &config)?;
    records.sort_by(|x, y| x.delta.total_cmp(&y.delta));

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "delta",
        "train_mse",
        "adv_objective",
        "l1_norm",
        "l2_norm",
        "nonzero_count",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((1..=data.m()).map(|j| format!("beta_{j}")));
    w.write_record(&header).map_err(csv_err)?;
    for r in &records {
        let mut row = vec![
            fmt_f64(r.delta),
            fmt_f64(r.train_mse),
            fmt_f64(r.train_adv_objective),
            fmt_f64(r.l1_norm),
            fmt_f64(r.l2_norm),
            r.nonzero_count.to_string(),
        ];
        row.extend(r.beta.iter().map(|&b| fmt_f64(b)));
        w.write_record(&row).map_err(csv_err)?;
    }
    write_atomic(&a.out, &finish_csv(w)?)?;
    let failed: Vec<String> = records
        .iter()
        .filter(|r| !r.converged)
        .map(|r| fmt_f64(r.delta))
        .collect();
    Ok(Outcome {
        inputs,
        warning: (!failed.is_empty()).then(|| {
            format!(
                "{} of {} fits did not reach tolerance (delta = {})",
                failed.len(),
                records.len(),
                failed.join(", ")
            )
        }),
    })
}

#[derive(Debug, Serialize)]
struct ThresholdDocument {
    n: usize,
    m: usize,
    gamma_min_x: f64,
    gamma_min_xqt: f64,
    /// Largest radius at which the minimum-l1 interpolator is optimal
    /// under l_inf attacks.
    exact_linf: f64,
    /// Same for l2 attacks and the minimum-l2 interpolator.
    exact_l2: f64,
}

fn cmd_thresholds(a: &ThresholdsArgs) -> CliResult<Outcome> {
    let (data, inputs) = load(&a.data)?;
    let config = a.solver.config();
    config.validate()?;
    let bounds = interpolation_thresholds(&data)?;
    let exact = exact_thresholds(&data, &config)?;
    let doc = ThresholdDocument {
        n: data.n(),
        m: data.m(),
        gamma_min_x: bounds.gamma_min_x,
        gamma_min_xqt: bounds.gamma_min_xqt,
        exact_linf: exact.linf,
        exact_l2: exact.l2,
    };
    write_atomic(&a.out, &json_bytes(&doc)?)?;
    Ok(Outcome {
        inputs,
        warning: None,
    })
}

fn generate(model: &ModelArgs, n: usize, m: usize, seed: u64) -> CliResult<Dataset> {
    let seed = RngSeed(seed);
    Ok(match model.model {
        ModelArg::Isotropic => {
            let spec = IsotropicSpec {
                r2: model.r2,
                sigma2: model.sigma2,
                ..IsotropicSpec::new(n, m, seed)
            };
            generate_isotropic(&spec)?.data
        }
        ModelArg::Latent => {
            let spec = LatentSpec {
                d: model.d,
                sigma_xi: model.sigma_xi,
                ..LatentSpec::new(n, m, seed)
            };
            generate_latent(&spec)?.data
        }
    })
}

fn cmd_gen(a: &GenArgs) -> CliResult<Outcome> {
    let mut data = generate(&a.model, a.n, a.m, a.seed)?;
    if a.standardize {
        data = standardize(&data)?;
    }
    write_atomic(&a.out, &dataset_csv(&data)?)?;
    Ok(Outcome {
        inputs: Vec::new(),
        warning: None,
    })
}

pub fn sweep_spec(a: &SweepArgs) -> SweepSpec {
    let data = match a.model.model {
        ModelArg::Isotropic => SweepData::Isotropic {
            r2: a.model.r2,
            sigma2: a.model.sigma2,
        },
        ModelArg::Latent => SweepData::Latent {
            d: a.model.d,
            sigma_xi: a.model.sigma_xi,
        },
    };
    SweepSpec {
        data,
        n: a.n,
        n_test: a.n_test,
        m_grid: a.m_grid.clone(),
        deltas: a.deltas.clone(),
        repetitions: a.reps,
        estimators: a.estimators.iter().map(|e| e.estimator()).collect(),
        seed: RngSeed(a.solver.seed),
        config: a.solver.config(),
    }
}

fn cmd_sweep(a: &SweepArgs) -> CliResult<Outcome> {
    let spec = sweep_spec(a);
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| CliError::Invalid(format!("cannot start {} workers: {e}", a.jobs)))?;
    let records = pool.install(|| feature_sweep(&spec))?;
    write_atomic(&a.out, &sweep_csv(&records)?)?;
    let failures: usize = records.iter().map(|r| r.failures).sum();
    let nonconverged: usize = records.iter().map(|r| r.nonconverged).sum();
    if failures + nonconverged > 0 {
        eprintln!(
            "warning: {failures} fits failed and {nonconverged} missed their tolerance; \
             summaries cover the remaining fits"
        );
    }
    Ok(Outcome {
        inputs: Vec::new(),
        warning: None,
    })
}

pub fn sweep_csv(records: &[SweepRecord]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "m",
        "delta",
        "estimator",
        "stat",
        "train_mse",
        "test_mse",
        "l2_norm",
    ])
    .map_err(csv_err)?;
    for r in records {
        for stat in ["median", "q25", "q75"] {
            let cell = |s: &Option<advreg::experiments::Summary>| match s {
                None => String::new(),
                Some(s) => fmt_f64(match stat {
                    "median" => s.median,
                    "q25" => s.q25,
                    _ => s.q75,
                }),
            };
            w.write_record([
                r.m.to_string(),
                fmt_f64(r.delta),
                r.estimator.clone(),
                stat.to_string(),
                cell(&r.train_mse),
                cell(&r.test_mse),
                cell(&r.l2_norm),
            ])
            .map_err(csv_err)?;
        }
    }
    finish_csv(w)
}

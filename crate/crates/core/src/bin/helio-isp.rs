use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use helio_isp::continuation::{
    continue_in_angle, continue_in_k, inscribed_half_width, AngleContinuationProblem,
    ContinuationResult, KContinuationProblem, Patch, RegularizationSpec,
};
use helio_isp::forward::sup_norm;
use helio_isp::quadrature::ChartFrame;
use helio_isp::{
    harness, init_threads, reconstruct_pipeline, reconstruct_tikhonov, synthesize_dataset, verify,
    Aperture, Error, ExperimentConfig, FarFieldDataset, Vec3,
};

/// Limited-aperture multi-frequency inverse source laboratory.
#[derive(Parser)]
#[command(name = "helio-isp", version)]
struct Cli {
    /// Experiment config (JSON). Defaults to the shipped configs/default.json.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides rng_seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory. Defaults to output_dir of the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Gauss-Legendre points per axis for the forward quadrature (default 64).
    #[arg(long = "quad-n", global = true)]
    quad_n: Option<usize>,
    /// Worker threads (default: all cores). HELIO_ISP_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Noisy far-field dataset of the config source.
    Synthesize(SynthArgs),
    /// Reconstruct a source from a dataset.
    Reconstruct(ReconArgs),
    /// Continue one direction of a dataset in the wavenumber.
    ContinueK(ContKArgs),
    /// Continue one wavenumber shell of a dataset in angle.
    ContinueAngle(ContAngleArgs),
    /// Run the (K, eps, delta) sweep of the config.
    Sweep,
    /// Run the lemma checks; exit code 2 on any violation.
    VerifyLemmas,
    /// Tables, fitted bounds and plots from a records file.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Band limit K (default: first entry of K_list).
    #[arg(long = "k-max")]
    k_max: Option<f64>,
    /// Noise level (default: first entry of eps_list).
    #[arg(long)]
    eps: Option<f64>,
    /// Aperture radius (default: first entry of delta_list).
    #[arg(long)]
    delta: Option<f64>,
    /// File stem of the written dataset.
    #[arg(long, default_value = "dataset")]
    stem: String,
}

#[derive(Args)]
struct ReconArgs {
    /// Dataset header (the .json written by `synthesize`).
    #[arg(long)]
    dataset: PathBuf,
    /// Compare against the config source.
    #[arg(long)]
    with_truth: bool,
    /// Tikhonov regularization parameter; selects the least-squares method.
    #[arg(long)]
    tikhonov: Option<f64>,
    #[arg(long, default_value = "reconstruction")]
    stem: String,
}

#[derive(Args)]
struct ContKArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Direction index (default: the direction closest to x0_hat).
    #[arg(long)]
    dir: Option<usize>,
    /// Half-width a of the target interval (default 2K).
    #[arg(long)]
    a: Option<f64>,
    /// Number of target wavenumbers in (-a, a).
    #[arg(long, default_value_t = 201)]
    points: usize,
    #[arg(long, default_value = "continue_k")]
    stem: String,
}

#[derive(Args)]
struct ContAngleArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Wavenumber index (default: the middle shell).
    #[arg(long)]
    freq: Option<usize>,
    /// Radius of the target cap; the extension covers its inscribed chart square.
    #[arg(long)]
    delta1: Option<f64>,
    /// Target points per chart axis.
    #[arg(long, default_value_t = 21)]
    points: usize,
    #[arg(long, default_value = "continue_angle")]
    stem: String,
}

#[derive(Args)]
struct ReportArgs {
    /// Records CSV (default: <out>/records.csv).
    #[arg(long)]
    records: Option<PathBuf>,
}

enum Failure {
    Certificate(String),
    Input(Error),
    Other(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::OutOfDomain(_)
            | Error::EpsTooLarge(_)
            | Error::EmptyDataset
            | Error::UnsupportedComponent { .. }
            | Error::InsufficientRecords(_)
            | Error::UnderSampled(_)
            | Error::InsufficientCoverage(_) => Failure::Input(e),
            Error::BoundViolated { .. } => Failure::Certificate(e.to_string()),
            other => Failure::Other(other),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Certificate(msg)) => {
            eprintln!("certificate violation: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Input(e)) => {
            eprintln!("input error: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default_config(),
    };
    if let Some(seed) = cli.seed {
        cfg.rng_seed = seed;
    }
    if let Some(n) = cli.quad_n {
        cfg.quadrature.points_per_axis = n;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    let out = cfg.output_dir.clone();
    match &cli.command {
        Command::Synthesize(a) => {
            let k_max = a.k_max.unwrap_or(cfg.k_list[0]);
            let eps = a.eps.unwrap_or(cfg.eps_list[0]);
            let delta = a.delta.unwrap_or(cfg.delta_list[0]);
            let aperture = Aperture::new(Vec3::from(cfg.x0_hat), delta)?;
            let ds = synthesize_dataset(
                &cfg.source,
                &aperture,
                k_max,
                cfg.n_dirs,
                cfg.n_freqs,
                eps,
                cfg.rng_seed,
                &cfg.quadrature,
            )?;
            ds.write(&out, &a.stem)?;
            println!("wrote {}", out.join(format!("{}.json", a.stem)).display());
        }
        Command::Reconstruct(a) => {
            let ds = FarFieldDataset::read(&a.dataset)?;
            let truth = a.with_truth.then_some(&cfg.source);
            std::fs::create_dir_all(&out).map_err(Error::from)?;
            match a.tikhonov {
                Some(lambda) => {
                    let grid =
                        reconstruct_tikhonov(&ds, &cfg.grid, cfg.source.support_radius(), lambda)?;
                    grid.write(&out, &a.stem)?;
                    if let Some(t) = truth {
                        let (l2, hm1) = helio_isp::reconstruct::error_metrics(&grid, t);
                        println!("err_l2 = {l2:.6e}, err_hm1 = {hm1:.6e}");
                    }
                }
                None => {
                    let mut pipe = cfg.pipeline.clone();
                    pipe.radius = cfg.source.support_radius();
                    if pipe.bound.is_none() {
                        pipe.bound = Some(cfg.bound_template()?);
                    }
                    let res = reconstruct_pipeline(&ds, &pipe, &cfg.grid, truth)?;
                    if let Some(g) = &res.grid {
                        g.write(&out, &a.stem)?;
                    }
                    let json = serde_json::to_string_pretty(&res).map_err(Error::from)?;
                    std::fs::write(out.join(format!("{}_result.json", a.stem)), &json)
                        .map_err(Error::from)?;
                    println!("{json}");
                }
            }
        }
        Command::ContinueK(a) => {
            let ds = FarFieldDataset::read(&a.dataset)?;
            let dir = a.dir.unwrap_or_else(|| nearest_direction(&ds));
            if dir >= ds.n_dirs() {
                return Err(
                    Error::InvalidInput(format!("direction index {dir} out of range")).into(),
                );
            }
            let half = a.a.unwrap_or(2.0 * ds.k_max);
            let samples = ds
                .wavenumbers
                .iter()
                .enumerate()
                .map(|(j, k)| (*k, ds.value(dir, j)))
                .collect();
            let f_l1 = cfg.pipeline.f_l1_bound.unwrap_or(2.0 * sup_norm(&ds)?);
            let problem = KContinuationProblem::new(
                ds.directions[dir],
                samples,
                ds.k_max,
                half,
                f_l1,
                cfg.source.support_radius(),
            );
            let targets: Vec<f64> = (0..a.points)
                .map(|i| -half + 2.0 * half * (i as f64 + 0.5) / a.points as f64)
                .collect();
            let res = continue_in_k(
                &problem,
                &targets,
                &RegularizationSpec::with_noise(ds.noise_level),
            )?;
            finish_continuation(&res, &out, &a.stem)?;
        }
        Command::ContinueAngle(a) => {
            let ds = FarFieldDataset::read(&a.dataset)?;
            let j = a.freq.unwrap_or(ds.n_freqs() / 2);
            if j >= ds.n_freqs() {
                return Err(
                    Error::InvalidInput(format!("wavenumber index {j} out of range")).into(),
                );
            }
            let delta1 = a.delta1.unwrap_or((2.0 * ds.aperture.delta).min(1.9));
            let h = inscribed_half_width(delta1);
            let values: Vec<_> = (0..ds.n_dirs()).map(|d| ds.value(d, j)).collect();
            let f_l1 = cfg.pipeline.f_l1_bound.unwrap_or(2.0 * sup_norm(&ds)?);
            let problem = AngleContinuationProblem::from_directions(
                ds.wavenumbers[j],
                ChartFrame::around(&ds.aperture.x0_hat),
                &ds.directions,
                &values,
                Patch::centered(h),
                f_l1,
                cfg.source.support_radius(),
            );
            let n = a.points.max(2);
            let targets: Vec<(f64, f64)> = (0..n)
                .flat_map(|p| {
                    (0..n).map(move |q| {
                        let t = |i: usize| -h + 2.0 * h * i as f64 / (n - 1) as f64;
                        (t(p), t(q))
                    })
                })
                .collect();
            let res = continue_in_angle(
                &problem,
                &targets,
                &RegularizationSpec::with_noise(ds.noise_level),
            )?;
            finish_continuation(&res, &out, &a.stem)?;
        }
        Command::Sweep => {
            let path = out.join("records.csv");
            let records = harness::run_sweep(&cfg, Some(&path))?;
            let failed = records.iter().filter(|r| r.status != "ok").count();
            println!(
                "wrote {} records to {} ({failed} failed cells)",
                records.len(),
                path.display()
            );
        }
        Command::VerifyLemmas => {
            let report = verify::verify_lemmas(&cfg)?;
            for c in &report.checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            std::fs::create_dir_all(&out).map_err(Error::from)?;
            let json = serde_json::to_string_pretty(&report).map_err(Error::from)?;
            std::fs::write(out.join("verify.json"), json).map_err(Error::from)?;
            if !report.all_passed() {
                return Err(Failure::Certificate(
                    "one or more lemma checks failed".into(),
                ));
            }
        }
        Command::Report(a) => {
            let path = a.records.clone().unwrap_or_else(|| out.join("records.csv"));
            let records = harness::read_records(&path)?;
            let template = cfg.bound_template()?;
            let summary = harness::report(&records, Some(&template), &out.join("report"))?;
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).map_err(Error::from)?
            );
        }
    }
    Ok(())
}

fn nearest_direction(ds: &FarFieldDataset) -> usize {
    let x0 = ds.aperture.x0_hat;
    (0..ds.n_dirs())
        .min_by(|&a, &b| {
            (ds.directions[a] - x0)
                .norm()
                .total_cmp(&(ds.directions[b] - x0).norm())
        })
        .unwrap_or(0)
}

fn finish_continuation(res: &ContinuationResult, out: &Path, stem: &str) -> Result<(), Failure> {
    res.write(out, stem)?;
    println!(
        "degree {}, gamma_emp {:.4}, slack {:.4e}, flags {:?}",
        res.degree, res.gamma_emp, res.certificate.slack, res.certificate.flags
    );
    if !res.certificate.passed() {
        return Err(Failure::Certificate(format!(
            "Hoelder certificate slack {:.4e}",
            res.certificate.slack
        )));
    }
    Ok(())
}

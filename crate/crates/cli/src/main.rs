use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use convex_pmf::harness::experiment::{ExperimentConfig, KnotCaptureReport};
use convex_pmf::harness::output::{self, Manifest};
use convex_pmf::harness::{convergence_experiment, knot_capture_experiment, resolve_pmf};
use convex_pmf::limit::sample_limit_distribution;
use convex_pmf::lse::{Sample, DEFAULT_BUFFER};
use convex_pmf::pmf::{mixture_decompose, KNOT_TOL};
use convex_pmf::projection::DykstraOptions;
use serde_json::json;

const DEFAULT_SEED: u64 = 20140101;

/// Least-squares estimation of convex pmfs on the integers and simulation of
/// its weak limit.
#[derive(Parser, Debug)]
#[command(name = "convex-pmf", version)]
struct Cli {
    /// Master seed. Overrides the seed in a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Dykstra stopping tolerance (sup-norm change over one cycle).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// M = 1000 replications, M' = 5000 limit draws, 100 repetitions.
    #[arg(long, global = true)]
    full_scale: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the estimator to a sample file and write diagnostics.
    Estimate {
        /// One integer per line, or {"counts": {"k": count}}.
        sample_file: PathBuf,
    },
    /// Draw from the limit of √n(p̂_n - p0).
    LimitSample {
        /// Catalog id (p0 … p5) or a {"mass": [...]} file.
        #[arg(long)]
        pmf: String,
        /// Number of draws.
        #[arg(short = 'N', long = "draws")]
        n: usize,
    },
    /// Frequency with which the estimator finds every true knot.
    KnotCapture {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sup distance between estimator and limit marginal cdfs.
    Convergence {
        #[arg(long)]
        config: PathBuf,
    },
    /// Tabulate a catalog pmf.
    Catalog { id: String },
}

impl Cli {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    fn dykstra(&self) -> Result<DykstraOptions> {
        let mut opts = DykstraOptions::default();
        if let Some(tol) = self.tol {
            if !(tol > 0.0) {
                bail!("--tol must be positive");
            }
            opts.tol = tol;
        }
        Ok(opts)
    }

    fn experiment_config(&self, path: &Path) -> Result<ExperimentConfig> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if self.full_scale {
            cfg = cfg.full_scale();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(tol) = self.tol {
            cfg.dykstra_tol = tol;
        }
        if cfg.out_dir.is_none() {
            cfg.out_dir = Some(self.out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_knot_capture(report: &KnotCaptureReport) {
    println!("pmf,n,frequency_pct,excluded");
    for r in &report.rows {
        println!(
            "{},{},{:.1},{}",
            r.pmf, r.n, r.frequency_pct, r.failed_certificates
        );
    }
}

fn run(cli: &Cli) -> Result<Manifest> {
    let start = Instant::now();
    let out = &cli.out;
    let mut manifest = match &cli.command {
        Command::Estimate { sample_file } => {
            let sample = Sample::read(sample_file)
                .with_context(|| format!("reading {}", sample_file.display()))?;
            let (res, files) = output::write_estimate(&sample, DEFAULT_BUFFER, out)?;
            println!(
                "n = {}, knots {:?}, certificate {}",
                res.n,
                res.knots,
                if res.certificate.passed() {
                    "passed"
                } else {
                    "failed"
                }
            );
            let mut m = Manifest::new(
                "estimate",
                cli.seed(),
                json!({ "sample_file": sample_file, "buffer": DEFAULT_BUFFER }),
            );
            for f in [
                &files.estimate,
                &files.h_process,
                &files.certificate,
                &files.knots,
            ] {
                m.output(f);
            }
            m
        }
        Command::LimitSample { pmf, n } => {
            let p = resolve_pmf(pmf)?;
            let knots = p.knots(KNOT_TOL);
            let opts = cli.dykstra()?;
            let draws = sample_limit_distribution(&p, &knots, *n, cli.seed(), &opts)?;
            let path = out.join("limit_samples.csv");
            output::write_limit_samples(&draws, &path)?;
            let failed = draws.iter().filter(|d| !d.certificate.passed()).count();
            println!(
                "{n} draws, knots {:?}, certificate failures {failed}",
                knots.interior()
            );
            let mut m = Manifest::new(
                "limit-sample",
                cli.seed(),
                json!({ "pmf": pmf, "draws": n, "knots": knots.interior(), "dykstra_tol": opts.tol }),
            );
            m.output(&path);
            m
        }
        Command::KnotCapture { config } => {
            let cfg = cli.experiment_config(config)?;
            let report = knot_capture_experiment(&cfg)?;
            let path = out.join("knot_capture.csv");
            output::write_knot_capture(&report, &path)?;
            print_knot_capture(&report);
            let mut m = Manifest::new("knot-capture", cfg.seed, serde_json::to_value(&cfg)?);
            m.time("experiment", report.elapsed_secs);
            m.output(&path);
            m
        }
        Command::Convergence { config } => {
            let cfg = cli.experiment_config(config)?;
            let report = convergence_experiment(&cfg)?;
            output::write_convergence(&report, out)?;
            println!("pmf,n,median_d");
            for c in &report.cells {
                println!("{},{},{:.4}", c.pmf, c.n, c.summary.median);
            }
            let mut m = Manifest::new("convergence", cfg.seed, serde_json::to_value(&cfg)?);
            m.time("experiment", report.elapsed_secs);
            m.output(&out.join("convergence_d.csv"));
            m.output(&out.join("convergence_summary.csv"));
            m
        }
        Command::Catalog { id } => {
            let p = resolve_pmf(id)?;
            let weights = mixture_decompose(&p)?;
            let path = out.join(format!("catalog_{}.csv", sanitize(id)));
            output::write_pmf_table(&p, &path)?;
            println!("{}", serde_json::to_string(&p)?);
            println!("knots {:?}", p.knots(KNOT_TOL).interior());
            let mut m = Manifest::new(
                "catalog",
                cli.seed(),
                json!({ "id": id, "weights": weights }),
            );
            m.output(&path);
            m
        }
    };
    manifest.time("total", start.elapsed().as_secs_f64());
    manifest.write(out)?;
    Ok(manifest)
}

fn sanitize(id: &str) -> String {
    Path::new(id)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "pmf".into())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    run(&cli)?;
    Ok(())
}

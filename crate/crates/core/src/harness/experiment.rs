//! Seeded Monte Carlo studies: how often the estimator recovers every knot of
//! the true pmf, and how fast the marginal laws of `√n (p̂_n - p_0)` approach
//! those of the simulated limit.
//!
//! Every replication draws from a generator derived from the master seed, a
//! stream label naming the cell `(pmf, n, …)` and the replication index, so
//! reports are identical for any thread count.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::catalog::resolve_pmf;
use crate::harness::sampling::draw_sample;
use crate::limit::sample_limit_distribution;
use crate::lse::{lse, LseResult};
use crate::pmf::{Pmf, KNOT_TOL};
use crate::projection::DykstraOptions;
use crate::seed;

pub const KNOT_CAPTURE_SIZES: [u64; 6] = [50, 200, 800, 3200, 12800, 51200];
pub const CONVERGENCE_SIZES: [u64; 7] = [50, 100, 500, 1000, 5000, 10000, 500000];

/// Real grid on which cdf distances are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lo: -3.0,
            hi: 3.0,
            step: 0.01,
        }
    }
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| self.lo + i as f64 * self.step)
            .collect()
    }
}

/// Inputs of both experiments. Empty `pmfs` or `sample_sizes` select the
/// experiment's own defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Catalog ids or paths to pmf JSON files.
    pub pmfs: Vec<String>,
    pub sample_sizes: Vec<u64>,
    /// `M`, estimator replications per cell.
    pub replications: usize,
    /// `M'`, draws from the limit.
    pub limit_draws: usize,
    /// Independent repetitions of `D_{n,M,M'}` per cell.
    pub repetitions: usize,
    pub seed: u64,
    pub grid: GridSpec,
    /// Initial grid padding of the estimator.
    pub buffer: usize,
    pub dykstra_tol: f64,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            pmfs: Vec::new(),
            sample_sizes: Vec::new(),
            replications: 200,
            limit_draws: 1000,
            repetitions: 20,
            seed: 20140101,
            grid: GridSpec::default(),
            buffer: crate::lse::DEFAULT_BUFFER,
            dykstra_tol: crate::projection::DYKSTRA_TOL,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// `M = 1000`, `M' = 5000` and 100 repetitions.
    pub fn full_scale(mut self) -> Self {
        self.replications = 1000;
        self.limit_draws = 5000;
        self.repetitions = 100;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.replications == 0 {
            return bad("replications must be at least 1");
        }
        if self.limit_draws == 0 {
            return bad("limit_draws must be at least 1");
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if !(self.grid.step > 0.0) || !(self.grid.lo < self.grid.hi) {
            return bad("grid needs lo < hi and step > 0");
        }
        if self.sample_sizes.contains(&0) {
            return bad("sample sizes must be positive");
        }
        if !(self.dykstra_tol > 0.0) {
            return bad("dykstra_tol must be positive");
        }
        Ok(())
    }

    fn pmfs_or(&self, default: &[&str]) -> Vec<String> {
        if self.pmfs.is_empty() {
            default.iter().map(|s| s.to_string()).collect()
        } else {
            self.pmfs.clone()
        }
    }

    fn sizes_or(&self, default: &[u64]) -> Vec<u64> {
        if self.sample_sizes.is_empty() {
            default.to_vec()
        } else {
            self.sample_sizes.clone()
        }
    }

    fn dykstra(&self) -> DykstraOptions {
        DykstraOptions {
            tol: self.dykstra_tol,
            ..Default::default()
        }
    }
}

fn replicate_lse(
    pmf: &Pmf,
    n: u64,
    master: u64,
    stream: u64,
    index: usize,
    buffer: usize,
) -> Result<LseResult> {
    let mut rng = seed::rng_for(master, stream, index as u64);
    let sample = draw_sample(pmf, n, &mut rng)?;
    lse(&sample, buffer)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnotCaptureRow {
    pub pmf: String,
    pub n: u64,
    pub replications: usize,
    /// Replications whose estimate certified and therefore counted.
    pub valid: usize,
    pub captured: usize,
    /// Replications excluded because no certified estimate was found.
    pub failed_certificates: usize,
    /// `100 · captured / valid`.
    pub frequency_pct: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KnotCaptureReport {
    pub seed: u64,
    pub rows: Vec<KnotCaptureRow>,
    pub elapsed_secs: f64,
}

/// Stream label of one `(pmf, n)` cell of the knot-capture study.
pub fn knot_capture_stream(pmf: &str, n: u64) -> u64 {
    seed::stream(&format!("knot-capture/{pmf}/{n}"))
}

/// Frequency, over `M` replications per `(pmf, n)`, that every interior knot
/// of the true pmf is a knot of the estimate.
pub fn knot_capture_experiment(cfg: &ExperimentConfig) -> Result<KnotCaptureReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut rows = Vec::new();
    for id in cfg.pmfs_or(&["p1", "p2", "p3", "p4"]) {
        let pmf = resolve_pmf(&id)?;
        let truth = pmf.knots(KNOT_TOL);
        for n in cfg.sizes_or(&KNOT_CAPTURE_SIZES) {
            let stream = knot_capture_stream(&id, n);
            let outcomes: Vec<Option<bool>> = (0..cfg.replications)
                .into_par_iter()
                .map(
                    |i| match replicate_lse(&pmf, n, cfg.seed, stream, i, cfg.buffer) {
                        Ok(r) => Ok(Some(r.has_knots(truth.interior()))),
                        Err(Error::CertificateFailure { .. }) => Ok(None),
                        Err(e) => Err(Error::Replication {
                            index: i,
                            source: Box::new(e),
                        }),
                    },
                )
                .collect::<Result<_>>()?;
            let valid = outcomes.iter().filter(|o| o.is_some()).count();
            let captured = outcomes.iter().filter(|o| **o == Some(true)).count();
            rows.push(KnotCaptureRow {
                pmf: id.clone(),
                n,
                replications: cfg.replications,
                valid,
                captured,
                failed_certificates: cfg.replications - valid,
                frequency_pct: if valid == 0 {
                    0.0
                } else {
                    100.0 * captured as f64 / valid as f64
                },
            });
        }
    }
    Ok(KnotCaptureReport {
        seed: cfg.seed,
        rows,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

/// Empirical cdf of a finite sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Ecdf { sorted: values }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}

/// `max_j sup_{x ∈ grid} |a_j(x) - b_j(x)|` over paired coordinates.
pub fn sup_distance(a: &[Ecdf], b: &[Ecdf], grid: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(fa, fb)| {
            grid.iter()
                .fold(0.0_f64, |m, &x| m.max((fa.eval(x) - fb.eval(x)).abs()))
        })
        .fold(0.0, f64::max)
}

/// Per-coordinate ecdfs of a set of vectors of equal length.
pub fn marginal_ecdfs(rows: &[Vec<f64>]) -> Vec<Ecdf> {
    let dim = rows.first().map_or(0, Vec::len);
    (0..dim)
        .map(|j| Ecdf::new(rows.iter().map(|r| r[j]).collect()))
        .collect()
}

/// Min, lower quartile, median, upper quartile and max (linear interpolation
/// between order statistics).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl FiveNumber {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let h = p * (v.len() - 1) as f64;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            v[lo] + (h - lo as f64) * (v[hi] - v[lo])
        };
        Some(FiveNumber {
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceCell {
    pub pmf: String,
    pub n: u64,
    /// One `D_{n,M,M'}` per repetition.
    pub d: Vec<f64>,
    pub summary: FiveNumber,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub seed: u64,
    pub replications: usize,
    pub limit_draws: usize,
    pub repetitions: usize,
    pub cells: Vec<ConvergenceCell>,
    pub elapsed_secs: f64,
}

impl ConvergenceReport {
    pub fn cell(&self, pmf: &str, n: u64) -> Option<&ConvergenceCell> {
        self.cells.iter().find(|c| c.pmf == pmf && c.n == n)
    }
}

/// Marginal ecdfs of `ĝ(0), …, ĝ(S+1)` from `M'` limit draws.
pub fn limit_ecdfs(pmf_id: &str, pmf: &Pmf, cfg: &ExperimentConfig) -> Result<Vec<Ecdf>> {
    let knots = pmf.knots(KNOT_TOL);
    let master = seed::derive_seed(
        cfg.seed,
        seed::stream(&format!("convergence-limit/{pmf_id}")),
        0,
    );
    let draws = sample_limit_distribution(pmf, &knots, cfg.limit_draws, master, &cfg.dykstra())?;
    let rows: Vec<Vec<f64>> = draws.into_iter().map(|d| d.g_hat).collect();
    Ok(marginal_ecdfs(&rows))
}

/// Marginal ecdfs of `√n (p̂_n(j) - p_0(j))`, `j = 0, …, S+1`, from `M`
/// replications of repetition `rep`.
pub fn estimator_ecdfs(
    pmf_id: &str,
    pmf: &Pmf,
    n: u64,
    rep: usize,
    cfg: &ExperimentConfig,
) -> Result<Vec<Ecdf>> {
    let stream = seed::stream(&format!("convergence/{pmf_id}/{n}/{rep}"));
    let dim = pmf.support_max() + 2;
    let scale = (n as f64).sqrt();
    let rows: Vec<Vec<f64>> = (0..cfg.replications)
        .into_par_iter()
        .map(|i| {
            let r = replicate_lse(pmf, n, cfg.seed, stream, i, cfg.buffer).map_err(|e| {
                Error::Replication {
                    index: i,
                    source: Box::new(e),
                }
            })?;
            Ok((0..dim).map(|j| scale * (r.get(j) - pmf.get(j))).collect())
        })
        .collect::<Result<_>>()?;
    Ok(marginal_ecdfs(&rows))
}

/// Distribution of `D_{n,M,M'}` over repeated estimator samples against one
/// fixed set of limit ecdfs per pmf.
pub fn convergence_experiment(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let start = Instant::now();
    let grid = cfg.grid.points();
    let mut cells = Vec::new();
    for id in cfg.pmfs_or(&["p0", "p1", "p2", "p3", "p4", "p5"]) {
        let pmf = resolve_pmf(&id)?;
        let target = limit_ecdfs(&id, &pmf, cfg)?;
        for n in cfg.sizes_or(&CONVERGENCE_SIZES) {
            let d = (0..cfg.repetitions)
                .map(|rep| {
                    let est = estimator_ecdfs(&id, &pmf, n, rep, cfg)?;
                    Ok(sup_distance(&est, &target, &grid))
                })
                .collect::<Result<Vec<f64>>>()?;
            let summary = FiveNumber::of(&d).expect("at least one repetition");
            cells.push(ConvergenceCell {
                pmf: id.clone(),
                n,
                d,
                summary,
            });
        }
    }
    Ok(ConvergenceReport {
        seed: cfg.seed,
        replications: cfg.replications,
        limit_draws: cfg.limit_draws,
        repetitions: cfg.repetitions,
        cells,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

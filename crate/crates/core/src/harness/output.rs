//! CSV tables and the JSON run manifest written by every command.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harness::experiment::{ConvergenceReport, KnotCaptureReport};
use crate::limit::LimitSample;
use crate::lse::{lse, HDiagnostic, LseResult, Sample, ESTIMATE_KNOT_TOL};
use crate::pmf::{Pmf, KNOT_TOL};

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(csv::Writer::from_path(path)?)
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = writer(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_knot_capture(report: &KnotCaptureReport, path: &Path) -> Result<()> {
    write_rows(path, &report.rows)
}

#[derive(Debug, Serialize)]
struct DRow<'a> {
    pmf: &'a str,
    n: u64,
    repetition: usize,
    d: f64,
}

#[derive(Debug, Serialize)]
struct SummaryRow<'a> {
    pmf: &'a str,
    n: u64,
    min: f64,
    q1: f64,
    median: f64,
    q3: f64,
    max: f64,
}

/// Writes `convergence_d.csv` (every repetition) and
/// `convergence_summary.csv` (five-number summaries) into `dir`.
pub fn write_convergence(report: &ConvergenceReport, dir: &Path) -> Result<()> {
    write_rows(
        &dir.join("convergence_d.csv"),
        report.cells.iter().flat_map(|c| {
            c.d.iter().enumerate().map(|(repetition, &d)| DRow {
                pmf: &c.pmf,
                n: c.n,
                repetition,
                d,
            })
        }),
    )?;
    write_rows(
        &dir.join("convergence_summary.csv"),
        report.cells.iter().map(|c| SummaryRow {
            pmf: &c.pmf,
            n: c.n,
            min: c.summary.min,
            q1: c.summary.q1,
            median: c.summary.median,
            q3: c.summary.q3,
            max: c.summary.max,
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub draw: usize,
    pub k: usize,
    pub w: Option<f64>,
    pub g_hat: Option<f64>,
    #[serde(rename = "G_hat")]
    pub g_cum: Option<f64>,
    #[serde(rename = "H_hat")]
    pub h_hat: f64,
}

/// One row per `(draw, k)`, `k = 0, …, S+2`; only `Ĥ` is defined at `S+2`.
pub fn limit_rows(samples: &[LimitSample]) -> Vec<LimitRow> {
    let mut rows = Vec::new();
    for (draw, s) in samples.iter().enumerate() {
        for (k, &h) in s.h_hat.iter().enumerate() {
            rows.push(LimitRow {
                draw,
                k,
                w: s.w.get(k).copied(),
                g_hat: s.g_hat.get(k).copied(),
                g_cum: s.g_cum.get(k).copied(),
                h_hat: h,
            });
        }
    }
    rows
}

pub fn write_limit_samples(samples: &[LimitSample], path: &Path) -> Result<()> {
    write_rows(path, limit_rows(samples))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub k: usize,
    pub p_n: f64,
    pub p_hat: f64,
    pub is_knot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HRow {
    pub z: usize,
    /// `√n (H_p̂(z) - H_{p_n}(z))`.
    pub scaled_residual: f64,
    pub is_knot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub passed: bool,
    pub feasible: bool,
    pub min_residual: f64,
    pub max_knot_gap: f64,
    pub tol: f64,
}

pub fn estimate_rows(res: &LseResult) -> Vec<EstimateRow> {
    (0..res.p_hat.len())
        .map(|k| EstimateRow {
            k,
            p_n: res.p_n.get(k),
            p_hat: res.p_hat[k],
            is_knot: res.knots.contains(&k),
        })
        .collect()
}

/// Paths of the files written by [`write_estimate`].
#[derive(Debug, Clone)]
pub struct EstimateFiles {
    pub estimate: PathBuf,
    pub h_process: PathBuf,
    pub certificate: PathBuf,
    pub knots: PathBuf,
}

/// Fits the estimator to a sample and writes `estimate.csv`,
/// `h_process.csv`, `certificate.csv` and `knots.csv` into `dir`.
pub fn write_estimate(
    sample: &Sample,
    buffer: usize,
    dir: &Path,
) -> Result<(LseResult, EstimateFiles)> {
    let res = lse(sample, buffer)?;
    let files = EstimateFiles {
        estimate: dir.join("estimate.csv"),
        h_process: dir.join("h_process.csv"),
        certificate: dir.join("certificate.csv"),
        knots: dir.join("knots.csv"),
    };
    write_rows(&files.estimate, estimate_rows(&res))?;
    let h = HDiagnostic::from_result(&res);
    write_rows(
        &files.h_process,
        (0..h.z.len()).map(|i| HRow {
            z: h.z[i],
            scaled_residual: h.value[i],
            is_knot: h.is_knot[i],
        }),
    )?;
    let c = &res.certificate;
    write_rows(
        &files.certificate,
        [CertificateRow {
            passed: c.passed(),
            feasible: c.feasible,
            min_residual: c.min_residual,
            max_knot_gap: c.max_knot_gap,
            tol: c.tol,
        }],
    )?;
    #[derive(Serialize)]
    struct KnotRow {
        knot: usize,
        laplacian: f64,
    }
    write_rows(
        &files.knots,
        res.knots.iter().map(|&k| KnotRow {
            knot: k,
            laplacian: crate::pmf::laplacian_at(&res.p_hat, k),
        }),
    )?;
    debug_assert!(res
        .knots
        .iter()
        .all(|&k| crate::pmf::laplacian_at(&res.p_hat, k) > ESTIMATE_KNOT_TOL));
    Ok((res, files))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfRow {
    pub k: usize,
    pub p: f64,
    pub cdf: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub laplacian: Option<f64>,
    pub is_knot: bool,
}

/// `p`, `F`, `H` and `Δp` on `{0, …, S+1}`.
pub fn pmf_rows(p: &Pmf) -> Vec<PmfRow> {
    let cdf = p.cdf();
    let knots = p.knots(KNOT_TOL);
    (0..=p.support_max() + 1)
        .map(|k| PmfRow {
            k,
            p: p.get(k),
            cdf: cdf[k],
            h: p.h(k),
            laplacian: (k >= 1).then(|| p.laplacian(k)),
            is_knot: knots.contains(k),
        })
        .collect()
}

pub fn write_pmf_table(p: &Pmf, path: &Path) -> Result<()> {
    write_rows(path, pmf_rows(p))
}

/// Reads back a CSV written by this module.
pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub secs: f64,
}

/// Record of one command invocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub crate_version: String,
    pub rustc_target: String,
    pub outputs: Vec<String>,
    pub timings: Vec<Timing>,
    pub config: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Manifest {
            command: command.to_string(),
            seed,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            rustc_target: format!("{}-{}", std::env::consts::ARCH, std::env::consts::OS),
            outputs: Vec::new(),
            timings: Vec::new(),
            config,
        }
    }

    pub fn time(&mut self, stage: &str, secs: f64) {
        self.timings.push(Timing {
            stage: stage.to_string(),
            secs,
        });
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Writes `manifest.json` into `dir` and returns its path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }
}

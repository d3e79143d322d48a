//! The convex least-squares estimator of a pmf on the nonnegative integers,
//! its Fenchel certificate and the localized variant on a finite window.
//!
//! The estimator minimizes `½ Σ_j (p_n(j) - p(j))²` over all convex
//! sequences. It is computed on a finite grid `{0, …, Z}` and accepted only
//! once the zero extension of the grid solution is convex and satisfies
//!
//! ```text
//! H_p̂(z) ≥ H_{p_n}(z) for all z,  with equality at every knot of p̂.
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmf::{h_values, laplacian_at, Pmf};
use crate::projection::{project_convex, ConeSpec, FEASIBILITY_TOL};

/// `z` is a knot of an estimate when `Δp̂(z)` exceeds this.
pub const ESTIMATE_KNOT_TOL: f64 = 1e-8;
/// Tolerance on Fenchel residuals and knot equalities.
pub const CERTIFICATE_TOL: f64 = 1e-8;
/// Grid padding past the largest observation.
pub const DEFAULT_BUFFER: usize = 4;
/// Largest magnitude allowed for the last grid value of an accepted estimate.
pub const TAIL_TOL: f64 = 1e-12;

const MAX_GRID_DOUBLINGS: usize = 16;

/// Multiset of nonnegative integer observations, stored as value counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    counts: Vec<u64>,
    n: u64,
}

#[derive(Serialize, Deserialize)]
struct CountsRepr {
    counts: BTreeMap<usize, u64>,
}

impl Sample {
    pub fn from_values(values: &[u64]) -> Result<Self> {
        let max = *values
            .iter()
            .max()
            .ok_or_else(|| Error::InvalidArgument("empty sample".into()))?;
        let mut counts = vec![0u64; max as usize + 1];
        for &v in values {
            counts[v as usize] += 1;
        }
        Self::from_counts(counts)
    }

    /// Observations `x - kappa`, for data supported on `{kappa, kappa + 1, …}`.
    pub fn from_values_shifted(values: &[u64], kappa: u64) -> Result<Self> {
        let shifted = values
            .iter()
            .map(|&v| {
                v.checked_sub(kappa).ok_or_else(|| {
                    Error::InvalidArgument(format!("observation {v} lies below kappa = {kappa}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_values(&shifted)
    }

    pub fn from_counts(mut counts: Vec<u64>) -> Result<Self> {
        while counts.last() == Some(&0) {
            counts.pop();
        }
        let n = counts.iter().sum();
        if n == 0 {
            return Err(Error::InvalidArgument("empty sample".into()));
        }
        Ok(Sample { counts, n })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `counts[j] = #{i : X_i = j}`.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn max_value(&self) -> usize {
        self.counts.len() - 1
    }

    /// Observations in increasing order.
    pub fn values(&self) -> Vec<u64> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(v, &c)| std::iter::repeat_n(v as u64, c as usize))
            .collect()
    }

    pub fn empirical_pmf(&self) -> Pmf {
        Pmf::from_counts(&self.counts).expect("sample has positive size")
    }

    /// Parses newline-separated integers or `{"counts": {"0": c0, …}}`.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            let repr: CountsRepr = serde_json::from_str(trimmed)?;
            let max = repr.counts.keys().copied().max().unwrap_or(0);
            let mut counts = vec![0u64; max + 1];
            for (k, c) in repr.counts {
                counts[k] = c;
            }
            return Self::from_counts(counts);
        }
        let values = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, l)| {
                l.parse::<u64>().map_err(|e| {
                    Error::Parse(format!(
                        "line {}: `{l}` is not a nonnegative integer ({e})",
                        i + 1
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_values(&values)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// JSON counts form, the inverse of the JSON branch of [`Sample::parse`].
    pub fn to_json(&self) -> String {
        let counts = self
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| (k, c))
            .collect();
        serde_json::to_string(&CountsRepr { counts }).expect("plain map serializes")
    }
}

pub fn empirical_pmf(sample: &Sample) -> Pmf {
    sample.empirical_pmf()
}

/// Evaluated Fenchel conditions for a candidate estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    /// `H_p̂(z) - H_{p_n}(z)` for `z = 0, …, grid + 1`.
    pub residuals: Vec<f64>,
    /// Points where equality is required.
    pub knots: Vec<usize>,
    /// `|residual|` at each entry of `knots`.
    pub knot_gaps: Vec<f64>,
    pub min_residual: f64,
    pub max_knot_gap: f64,
    pub tol: f64,
    /// Whether the candidate satisfies the shape constraint it is checked under.
    pub feasible: bool,
}

impl Certificate {
    pub(crate) fn from_residuals(
        residuals: Vec<f64>,
        knots: Vec<usize>,
        tol: f64,
        feasible: bool,
    ) -> Self {
        let knot_gaps: Vec<f64> = knots.iter().map(|&k| residuals[k].abs()).collect();
        let min_residual = residuals.iter().copied().fold(f64::INFINITY, f64::min);
        let max_knot_gap = knot_gaps.iter().copied().fold(0.0, f64::max);
        Certificate {
            residuals,
            knots,
            knot_gaps,
            min_residual,
            max_knot_gap,
            tol,
            feasible,
        }
    }

    pub fn passed(&self) -> bool {
        self.feasible && self.min_residual >= -self.tol && self.max_knot_gap <= self.tol
    }
}

/// Knots of a sequence read as zero past its end: `z ≥ 1` with `Δx(z) > tol`.
pub fn sequence_knots(x: &[f64], tol: f64) -> Vec<usize> {
    (1..=x.len())
        .filter(|&z| laplacian_at(x, z) > tol)
        .collect()
}

/// Fenchel check of `p_hat` against the empirical pmf `p_n` on their common grid.
pub fn fenchel_check(p_hat: &[f64], p_n: &Pmf, tol: f64) -> Certificate {
    let grid = p_hat.len().max(p_n.mass().len());
    let mut est = p_hat.to_vec();
    est.resize(grid, 0.0);
    let h_est = h_values(&est, 1);
    let h_emp = h_values(&p_n.padded(grid), 1);
    let residuals = h_est.iter().zip(&h_emp).map(|(a, b)| a - b).collect();
    let feasible = (1..=grid + 1).all(|z| laplacian_at(&est, z) >= -FEASIBILITY_TOL);
    Certificate::from_residuals(
        residuals,
        sequence_knots(&est, ESTIMATE_KNOT_TOL),
        tol,
        feasible,
    )
}

#[derive(Debug, Clone)]
pub struct LseResult {
    /// Estimate on `{0, …, Z}`; zero beyond.
    pub p_hat: Vec<f64>,
    pub p_n: Pmf,
    pub n: u64,
    /// Knots of `p̂`, including the one just past its support.
    pub knots: Vec<usize>,
    pub certificate: Certificate,
}

impl LseResult {
    /// `Z`, the last grid point.
    pub fn grid_end(&self) -> usize {
        self.p_hat.len() - 1
    }

    /// `p̂(k)`, zero past the grid.
    pub fn get(&self, k: usize) -> f64 {
        self.p_hat.get(k).copied().unwrap_or(0.0)
    }

    /// Largest `k` with `p̂(k) > tol`.
    pub fn support_end(&self, tol: f64) -> usize {
        self.p_hat.iter().rposition(|&v| v > tol).unwrap_or(0)
    }

    pub fn total_mass(&self) -> f64 {
        self.p_hat.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.p_hat
            .iter()
            .enumerate()
            .map(|(k, v)| k as f64 * v)
            .sum()
    }

    /// Whether every element of `required` is a knot of `p̂`.
    pub fn has_knots(&self, required: &[usize]) -> bool {
        required.iter().all(|k| self.knots.binary_search(k).is_ok())
    }
}

/// Convex LSE of the pmf that generated `sample`.
///
/// The grid is `{0, …, max + buffer}`; the buffer doubles until the solution
/// vanishes at the grid end, extends convexly by zeros and certifies.
pub fn lse(sample: &Sample, buffer: usize) -> Result<LseResult> {
    let p_n = sample.empirical_pmf();
    let max = sample.max_value();
    let mut buf = buffer.max(1);
    let mut last = (0, f64::NAN, f64::NAN);
    for _ in 0..MAX_GRID_DOUBLINGS {
        let z = max + buf;
        let y = p_n.padded(z + 1);
        let g = project_convex(&y, ConeSpec::new(0, z)?)?;
        let tail_ok = g[z].abs() <= TAIL_TOL
            && laplacian_at(&g, z) >= -TAIL_TOL
            && g.iter().all(|&v| v >= -TAIL_TOL);
        let certificate = fenchel_check(&g, &p_n, CERTIFICATE_TOL);
        if tail_ok && certificate.passed() {
            return Ok(LseResult {
                knots: sequence_knots(&g, ESTIMATE_KNOT_TOL),
                p_hat: g,
                p_n,
                n: sample.n(),
                certificate,
            });
        }
        last = (z + 1, certificate.min_residual, certificate.max_knot_gap);
        buf *= 2;
    }
    Err(Error::CertificateFailure {
        grid_len: last.0,
        min_residual: last.1,
        max_knot_gap: last.2,
    })
}

/// Minimizer of `½ Σ_{k=z}^{z'} (p_n(k) - p(k))²` over sequences convex on
/// `{z, …, z'}`; entry `i` of the result is the value at `z + i`.
///
/// This coincides with the full estimator on windows bounded by double knots
/// of the true pmf (or by `0` and a point past its support) once `n` is large
/// enough. Those conditions are not checked here; see [`localized_gap`].
pub fn localized_lse(sample: &Sample, z: usize, z_prime: usize) -> Result<Vec<f64>> {
    if z >= z_prime {
        return Err(Error::InvalidArgument(format!(
            "window [{z}, {z_prime}] must have z < z'"
        )));
    }
    let p_n = sample.empirical_pmf();
    let y: Vec<f64> = (z..=z_prime).map(|k| p_n.get(k)).collect();
    project_convex(&y, ConeSpec::new(0, y.len() - 1)?)
}

/// Sup-norm distance between the localized estimate on `{z, …, z'}` and the
/// full estimate restricted to the same window.
pub fn localized_gap(sample: &Sample, z: usize, z_prime: usize, full: &LseResult) -> Result<f64> {
    let local = localized_lse(sample, z, z_prime)?;
    Ok(local
        .iter()
        .enumerate()
        .fold(0.0, |m, (i, v)| m.max((v - full.get(z + i)).abs())))
}

/// The process `√n (H_p̂(z) - H_{p_n}(z))` with the knots of `p̂` marked.
#[derive(Debug, Clone, PartialEq)]
pub struct HDiagnostic {
    pub z: Vec<usize>,
    pub value: Vec<f64>,
    pub is_knot: Vec<bool>,
}

impl HDiagnostic {
    pub fn from_result(res: &LseResult) -> Self {
        let scale = (res.n as f64).sqrt();
        let value: Vec<f64> = res
            .certificate
            .residuals
            .iter()
            .map(|r| scale * r)
            .collect();
        let z: Vec<usize> = (0..value.len()).collect();
        let is_knot = z
            .iter()
            .map(|k| res.knots.binary_search(k).is_ok())
            .collect();
        HDiagnostic { z, value, is_knot }
    }
}

pub fn h_diagnostic(sample: &Sample) -> Result<HDiagnostic> {
    Ok(HDiagnostic::from_result(&lse(sample, DEFAULT_BUFFER)?))
}

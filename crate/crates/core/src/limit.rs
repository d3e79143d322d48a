//! The Gaussian weak limit of `√n (p̂_n - p_0)` for a convex `p_0` on
//! `{0, …, S}`.
//!
//! `W(k) = U(F(k)) - U(F(k-1))` for a standard Brownian bridge `U` and the
//! cdf `F` of `p_0`, so `W(S+1) = 0`. The limit `ĝ` is the projection of `W`
//! onto `C(K)`, the sequences on `{0, …, S+1}` that are convex on every
//! `{s_j, …, s_{j+1}}` between consecutive knots of `p_0`. It is computed by
//! Dykstra's algorithm over those cones and certified through
//!
//! ```text
//! Ĥ(x) ≥ H(x) on {0, …, S+2}, with equality at s_0, …, s_{m+1}, S+2
//! and at knots of ĝ strictly inside a cone,
//! ```
//!
//! where `H` and `Ĥ` are the double partial sums of `W` and `ĝ`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lse::Certificate;
use crate::pmf::{cumsum, h_values, laplacian_at, KnotSet, Pmf};
use crate::projection::{dykstra_project, is_feasible, ConeSpec, DykstraOptions, FEASIBILITY_TOL};
use crate::seed;

/// Tolerance of the limit certificate.
pub const LIMIT_CERTIFICATE_TOL: f64 = 1e-8;
/// A point inside a cone is a knot of `ĝ` when `Δĝ` exceeds this.
pub const LIMIT_KNOT_TOL: f64 = 1e-8;

/// One draw of `W` on `{0, …, S+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSample {
    pub w: Vec<f64>,
}

impl GaussianSample {
    /// `U(F(k)) = Σ_{j ≤ k} W(j)`.
    pub fn bridge_at_cdf(&self, k: usize) -> f64 {
        self.w[..=k].iter().sum()
    }
}

/// Draws `W` with covariance `p0(i) 1{i=j} - p0(i) p0(j)` on `{0, …, S}`.
///
/// With `V_k ~ N(0, p0(k))` independent, `T = Σ V_k` has unit variance and
/// `U(F(k)) = Σ_{j≤k} V_j - F(k) T` is a Brownian bridge at the cdf points.
pub fn simulate_w<R: Rng + ?Sized>(p0: &Pmf, rng: &mut R) -> GaussianSample {
    let s = p0.support_max();
    let v: Vec<f64> = p0
        .mass()
        .iter()
        .map(|&m| m.sqrt() * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let partial = cumsum(&v);
    let total = partial[s];
    let cdf = p0.cdf();
    let mut bridge: Vec<f64> = (0..=s).map(|k| partial[k] - cdf[k] * total).collect();
    // F(S) = 1 and the bridge is pinned at 1
    bridge[s] = 0.0;
    let mut w = Vec::with_capacity(s + 2);
    w.push(bridge[0]);
    w.extend(bridge.windows(2).map(|b| b[1] - b[0]));
    w.push(0.0);
    GaussianSample { w }
}

/// One draw of the limit together with its integrated processes.
#[derive(Debug, Clone)]
pub struct LimitSample {
    pub w: Vec<f64>,
    /// `ĝ` on `{0, …, S+1}`.
    pub g_hat: Vec<f64>,
    /// `Ĝ(x) = Σ_{k ≤ x} ĝ(k)` on `{0, …, S+1}`.
    pub g_cum: Vec<f64>,
    /// `Ĥ` on `{0, …, S+2}`.
    pub h_hat: Vec<f64>,
    pub certificate: Certificate,
}

/// Cones `[s_j, s_{j+1}]`, `j = 0, …, m`.
pub fn knot_cones(knots: &KnotSet) -> Vec<ConeSpec> {
    ConeSpec::partition(&knots.boundaries()).expect("knot boundaries are strictly increasing")
}

fn check_lengths(w: &GaussianSample, knots: &KnotSet) -> Result<()> {
    if w.w.len() != knots.support_max() + 2 {
        return Err(Error::InvalidArgument(format!(
            "W has length {} but the knot set is for S = {}",
            w.w.len(),
            knots.support_max()
        )));
    }
    Ok(())
}

/// `ĝ = argmin ½ Σ (g(k) - W(k))²` over `C(K)`.
pub fn limit_minimizer(
    w: &GaussianSample,
    knots: &KnotSet,
    opts: &DykstraOptions,
) -> Result<LimitSample> {
    check_lengths(w, knots)?;
    let g_hat = dykstra_project(&w.w, &knot_cones(knots), opts)?;
    let g_cum = cumsum(&g_hat);
    let h_hat = h_values(&g_hat, 0);
    let certificate = certificate_limit(&g_hat, w, knots);
    Ok(LimitSample {
        w: w.w.clone(),
        g_hat,
        g_cum,
        h_hat,
        certificate,
    })
}

/// Evaluates the characterization of the minimizer for a candidate `g`.
pub fn certificate_limit(g: &[f64], w: &GaussianSample, knots: &KnotSet) -> Certificate {
    let h_g = h_values(g, 0);
    let h_w = h_values(&w.w, 0);
    let residuals: Vec<f64> = h_g.iter().zip(&h_w).map(|(a, b)| a - b).collect();
    let bounds = knots.boundaries();
    let mut equal: Vec<usize> = bounds.clone();
    equal.push(knots.support_max() + 2);
    for pair in bounds.windows(2) {
        equal.extend((pair[0] + 1..pair[1]).filter(|&x| laplacian_at(g, x) > LIMIT_KNOT_TOL));
    }
    equal.sort_unstable();
    equal.dedup();
    let feasible = is_feasible(g, &knot_cones(knots), FEASIBILITY_TOL);
    Certificate::from_residuals(residuals, equal, LIMIT_CERTIFICATE_TOL, feasible)
}

impl LimitSample {
    /// `Ĝ(s) = U(F(s))`, the condition under which `ĝ` restricted to
    /// `{0, …, s}` solves the left-truncated problem.
    pub fn left_localized_at(&self, s: usize, tol: f64) -> bool {
        let bridge: f64 = self.w[..=s].iter().sum();
        (self.g_cum[s] - bridge).abs() <= tol
    }

    /// `Ĝ(s-1) = U(F(s-1))`, the matching condition on the right.
    pub fn right_localized_at(&self, s: usize, tol: f64) -> bool {
        if s == 0 {
            return true;
        }
        let bridge: f64 = self.w[..s].iter().sum();
        (self.g_cum[s - 1] - bridge).abs() <= tol
    }
}

fn require_interior(knots: &KnotSet, s: usize) -> Result<()> {
    if !knots.contains(s) {
        return Err(Error::NotAnInteriorKnot(s));
    }
    Ok(())
}

/// Minimizer of `½ Σ_{k ≤ s} (g(k) - W(k))²` over sequences on `{0, …, s}`
/// convex on every `{s_j, …, s_{j+1}}` with `s_{j+1} ≤ s`.
pub fn localized_left(
    w: &GaussianSample,
    knots: &KnotSet,
    s: usize,
    opts: &DykstraOptions,
) -> Result<Vec<f64>> {
    check_lengths(w, knots)?;
    require_interior(knots, s)?;
    let cones: Vec<ConeSpec> = knot_cones(knots)
        .into_iter()
        .filter(|c| c.hi <= s)
        .collect();
    dykstra_project(&w.w[..=s], &cones, opts)
}

/// Minimizer of `½ Σ_{k ≥ s} (g(k) - W(k))²` over sequences on `{s, …, S+1}`
/// convex on every `{s_j, …, s_{j+1}}` with `s_j ≥ s`. Entry `i` of the
/// result is the value at `s + i`.
pub fn localized_right(
    w: &GaussianSample,
    knots: &KnotSet,
    s: usize,
    opts: &DykstraOptions,
) -> Result<Vec<f64>> {
    check_lengths(w, knots)?;
    require_interior(knots, s)?;
    let cones: Vec<ConeSpec> = knot_cones(knots)
        .into_iter()
        .filter(|c| c.lo >= s)
        .map(|c| ConeSpec {
            lo: c.lo - s,
            hi: c.hi - s,
        })
        .collect();
    dykstra_project(&w.w[s..], &cones, opts)
}

/// Stream tag for limit draws.
pub const LIMIT_STREAM: &str = "limit-draws";

/// `n` independent limit draws; draw `i` uses the generator derived from
/// `(seed, i)`, so the result does not depend on scheduling.
pub fn sample_limit_distribution(
    p0: &Pmf,
    knots: &KnotSet,
    n: usize,
    seed: u64,
    opts: &DykstraOptions,
) -> Result<Vec<LimitSample>> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one draw".into()));
    }
    let stream = seed::stream(LIMIT_STREAM);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng_for(seed, stream, i as u64);
            let w = simulate_w(p0, &mut rng);
            limit_minimizer(&w, knots, opts).map_err(|e| Error::Draw {
                index: i,
                source: Box::new(e),
            })
        })
        .collect()
}

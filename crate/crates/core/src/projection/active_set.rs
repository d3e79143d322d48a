//! Primal active-set solver for
//!
//! ```text
//! minimize ½ Σ_i (g_i - y_i)²   subject to   Δg(k) ≥ 0 for every constrained k
//! ```
//!
//! on a finite index range `0..len`. Every constraint row is `(…, 1, -2, 1, …)`.
//! Constraints held with equality force `g` to be linear through `k`, so for
//! a working set the solution is the least-squares piecewise-linear fit whose
//! breakpoints are the endpoints, the unconstrained interior points and the
//! constrained points that are currently inactive ("knots"). That fit is a
//! tridiagonal system in the values at the breakpoints.
//!
//! The multiplier of row `k` is `μ_k = Σ_{i<k} (k - i)(g_i - y_i)`, the
//! difference of the double partial sums of `g` and `y` at `k`. Optimality is
//! `μ_k ≥ 0` on active rows together with `Δg(k) ≥ 0` at knots.

use crate::error::{Error, Result};

/// Which interior points carry a convexity constraint.
#[derive(Debug, Clone)]
pub(crate) struct Constraints {
    constrained: Vec<bool>,
}

impl Constraints {
    /// All interior points `1..len-1` constrained.
    pub(crate) fn all_interior(len: usize) -> Self {
        let mut constrained = vec![true; len];
        if let Some(first) = constrained.first_mut() {
            *first = false;
        }
        if let Some(last) = constrained.last_mut() {
            *last = false;
        }
        Constraints { constrained }
    }

    pub(crate) fn from_mask(mut constrained: Vec<bool>) -> Self {
        let len = constrained.len();
        if len > 0 {
            constrained[0] = false;
            constrained[len - 1] = false;
        }
        Constraints { constrained }
    }

    pub(crate) fn is_constrained(&self, k: usize) -> bool {
        self.constrained[k]
    }

    pub(crate) fn len(&self) -> usize {
        self.constrained.len()
    }

    pub(crate) fn any(&self) -> bool {
        self.constrained.iter().any(|&c| c)
    }
}

/// Residuals of the KKT system at a candidate point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// `max(0, -Δg(k))` over constrained `k`.
    pub primal: f64,
    /// `max(0, -μ_k)` over constrained `k`.
    pub dual: f64,
    /// `max |μ_k · Δg(k)|` over constrained `k`.
    pub complementarity: f64,
    /// `|μ|` at unconstrained points and past the right end, where it must vanish.
    pub stationarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.primal
            .max(self.dual)
            .max(self.complementarity)
            .max(self.stationarity)
    }
}

/// `μ_k` for `k = 0..=len + 1`.
pub(crate) fn multipliers(y: &[f64], g: &[f64]) -> Vec<f64> {
    let len = y.len();
    let mut mu = Vec::with_capacity(len + 2);
    let (mut f, mut h) = (0.0, 0.0);
    mu.push(0.0);
    for i in 0..=len {
        if i < len {
            f += g[i] - y[i];
        }
        h += f;
        mu.push(h);
    }
    mu
}

pub(crate) fn kkt_residuals(y: &[f64], g: &[f64], cons: &Constraints) -> KktResiduals {
    let len = y.len();
    let mu = multipliers(y, g);
    let mut r = KktResiduals {
        primal: 0.0,
        dual: 0.0,
        complementarity: 0.0,
        stationarity: 0.0,
    };
    for k in 1..len.saturating_sub(1) {
        let d = g[k + 1] - 2.0 * g[k] + g[k - 1];
        if cons.is_constrained(k) {
            r.primal = r.primal.max(-d);
            r.dual = r.dual.max(-mu[k]);
            r.complementarity = r.complementarity.max((mu[k] * d).abs());
        } else {
            r.stationarity = r.stationarity.max(mu[k].abs());
        }
    }
    if len >= 1 {
        r.stationarity = r.stationarity.max(mu[len].abs()).max(mu[len + 1].abs());
    }
    r
}

/// Least-squares fit of `y` by the piecewise-linear function with the given
/// sorted breakpoints (which must include `0` and `len - 1`).
pub(crate) fn fit_piecewise_linear(y: &[f64], breaks: &[usize]) -> Vec<f64> {
    let r = breaks.len();
    debug_assert!(r >= 2 && breaks[0] == 0 && breaks[r - 1] == y.len() - 1);
    let mut diag = vec![0.0; r];
    let mut off = vec![0.0; r - 1];
    let mut rhs = vec![0.0; r];
    for t in 0..r - 1 {
        let (a, b) = (breaks[t], breaks[t + 1]);
        let h = (b - a) as f64;
        for (i, &yi) in y.iter().enumerate().take(b).skip(a) {
            let lam = (i - a) as f64 / h;
            let mu = 1.0 - lam;
            diag[t] += mu * mu;
            diag[t + 1] += lam * lam;
            off[t] += lam * mu;
            rhs[t] += mu * yi;
            rhs[t + 1] += lam * yi;
        }
    }
    diag[r - 1] += 1.0;
    rhs[r - 1] += y[y.len() - 1];

    let values = solve_tridiagonal_spd(&diag, &off, &rhs);

    let mut g = vec![0.0; y.len()];
    for t in 0..r - 1 {
        let (a, b) = (breaks[t], breaks[t + 1]);
        let h = (b - a) as f64;
        for (i, gi) in g.iter_mut().enumerate().take(b).skip(a) {
            let lam = (i - a) as f64 / h;
            *gi = (1.0 - lam) * values[t] + lam * values[t + 1];
        }
    }
    g[y.len() - 1] = values[r - 1];
    g
}

// LDLᵀ for a symmetric positive definite tridiagonal matrix.
fn solve_tridiagonal_spd(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut d = vec![0.0; n];
    let mut l = vec![0.0; n.saturating_sub(1)];
    let mut z = vec![0.0; n];
    d[0] = diag[0];
    z[0] = rhs[0];
    for i in 1..n {
        l[i - 1] = off[i - 1] / d[i - 1];
        d[i] = diag[i] - l[i - 1] * off[i - 1];
        z[i] = rhs[i] - l[i - 1] * z[i - 1];
    }
    let mut x = vec![0.0; n];
    x[n - 1] = z[n - 1] / d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = z[i] / d[i] - l[i] * x[i + 1];
    }
    x
}

fn lap(g: &[f64], k: usize) -> f64 {
    g[k + 1] - 2.0 * g[k] + g[k - 1]
}

fn breakpoints(len: usize, cons: &Constraints, knots: &[usize]) -> Vec<usize> {
    let mut b: Vec<usize> = (0..len)
        .filter(|&k| k == 0 || k == len - 1 || !cons.is_constrained(k))
        .chain(knots.iter().copied())
        .collect();
    b.sort_unstable();
    b.dedup();
    b
}

/// Projection of `y` onto `{g : Δg(k) ≥ 0 for constrained k}`.
///
/// `knots_hint` seeds the set of inactive constraints; an empty hint starts
/// from the fully active (piecewise linear through the free points) fit.
pub(crate) fn solve(y: &[f64], cons: &Constraints, knots_hint: &[usize]) -> Result<Vec<f64>> {
    let len = y.len();
    debug_assert_eq!(len, cons.len());
    if len <= 2 || !cons.any() {
        // nothing to enforce, or only unconstrained breakpoints
        return Ok(if len <= 2 {
            y.to_vec()
        } else {
            fit_piecewise_linear(y, &breakpoints(len, cons, &[]))
        });
    }

    let scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let dual_tol = 1e-13 * scale.max(f64::MIN_POSITIVE) * (len * len) as f64;

    let mut knots: Vec<usize> = knots_hint
        .iter()
        .copied()
        .filter(|&k| k > 0 && k < len - 1 && cons.is_constrained(k))
        .collect();
    knots.sort_unstable();
    knots.dedup();

    // Feasible start: drop hinted knots whose fitted Laplacian is not positive.
    let mut g;
    loop {
        g = fit_piecewise_linear(y, &breakpoints(len, cons, &knots));
        let before = knots.len();
        knots.retain(|&k| lap(&g, k) > 0.0);
        if knots.len() == before {
            break;
        }
    }

    let max_iter = 10 * len + 100;
    let mut iter = 0;
    loop {
        iter += 1;
        if iter > max_iter {
            return Err(Error::SolverStalled {
                iterations: max_iter,
            });
        }
        let mu = multipliers(y, &g);
        // most negative multiplier on an active row; ties go to the smallest index
        let mut enter: Option<(usize, f64)> = None;
        for k in 1..len - 1 {
            if !cons.is_constrained(k) || knots.binary_search(&k).is_ok() {
                continue;
            }
            if mu[k] < -dual_tol && enter.is_none_or(|(_, m)| mu[k] < m) {
                enter = Some((k, mu[k]));
            }
        }
        let Some((k_new, _)) = enter else {
            break;
        };
        let pos = knots.binary_search(&k_new).unwrap_err();
        knots.insert(pos, k_new);

        let mut first = true;
        loop {
            let trial = fit_piecewise_linear(y, &breakpoints(len, cons, &knots));
            let blocked: Vec<usize> = knots
                .iter()
                .copied()
                .filter(|&k| lap(&trial, k) <= 0.0)
                .collect();
            if blocked.is_empty() {
                g = trial;
                break;
            }
            if first && blocked.contains(&k_new) {
                // the entering row cannot be released: its multiplier was noise
                return Ok(g);
            }
            first = false;
            let mut alpha = 1.0_f64;
            for &k in &blocked {
                let d_old = lap(&g, k);
                let d_new = lap(&trial, k);
                let denom = d_old - d_new;
                if denom > 0.0 {
                    alpha = alpha.min((d_old / denom).max(0.0));
                }
            }
            for (gi, ti) in g.iter_mut().zip(&trial) {
                *gi += alpha * (ti - *gi);
            }
            let cutoff = 1e-15 * scale.max(f64::MIN_POSITIVE);
            let before = knots.len();
            knots.retain(|&k| lap(&g, k) > cutoff);
            if knots.len() == before {
                // rounding kept every knot positive; drop the tightest one
                if let Some((idx, _)) = knots
                    .iter()
                    .enumerate()
                    .map(|(i, &k)| (i, lap(&g, k)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                {
                    knots.remove(idx);
                }
            }
            iter += 1;
            if iter > max_iter {
                return Err(Error::SolverStalled {
                    iterations: max_iter,
                });
            }
        }
    }
    Ok(g)
}

//! Exhaustive active-set enumeration, used to check the iterative solvers on
//! small grids.
//!
//! For every subset `W` of the pooled constraint rows it solves
//! `min ½‖g - y‖²` subject to `A_W g = 0`, i.e.
//! `g = y + A_Wᵀ μ` with `(A_W A_Wᵀ) μ = -A_W y`, and keeps the candidate
//! with `μ ≥ 0` and `A g ≥ 0`.

use nalgebra::{DMatrix, DVector};

use super::ConeSpec;
use crate::error::{Error, Result};

/// Largest ambient length the oracle accepts.
pub const ORACLE_MAX_LEN: usize = 12;

const ORACLE_TOL: f64 = 1e-10;

pub fn kkt_oracle(y: &[f64], cones: &[ConeSpec]) -> Result<Vec<f64>> {
    let n = y.len();
    if n > ORACLE_MAX_LEN {
        return Err(Error::DimensionTooLarge {
            len: n,
            max: ORACLE_MAX_LEN,
        });
    }
    let mut rows: Vec<usize> = Vec::new();
    for c in cones {
        if c.hi >= n {
            return Err(Error::InvalidArgument(format!(
                "cone [{}, {}] exceeds a sequence of length {n}",
                c.lo, c.hi
            )));
        }
        rows.extend(c.lo + 1..c.hi);
    }
    rows.sort_unstable();
    rows.dedup();

    let m = rows.len();
    let yv = DVector::from_column_slice(y);
    let mut a = DMatrix::<f64>::zeros(m, n);
    for (r, &k) in rows.iter().enumerate() {
        a[(r, k - 1)] = 1.0;
        a[(r, k)] = -2.0;
        a[(r, k + 1)] = 1.0;
    }
    let scale = y.iter().fold(1.0_f64, |s, v| s.max(v.abs()));
    let tol = ORACLE_TOL * scale;

    for mask in 0u32..(1u32 << m) {
        let active: Vec<usize> = (0..m).filter(|&r| mask & (1 << r) != 0).collect();
        let g = if active.is_empty() {
            yv.clone()
        } else {
            let aw = a.select_rows(active.iter());
            let gram = &aw * aw.transpose();
            let rhs = -(&aw * &yv);
            let Some(mu) = gram.lu().solve(&rhs) else {
                continue;
            };
            if mu.iter().any(|&v| v < -tol) {
                continue;
            }
            &yv + aw.transpose() * mu
        };
        let slack = &a * &g;
        if slack.iter().all(|&v| v >= -tol) {
            return Ok(g.iter().copied().collect());
        }
    }
    Err(Error::OracleNoCandidate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_bump() {
        let g = kkt_oracle(&[0.0, 1.0, 0.0], &[ConeSpec::new(0, 2).unwrap()]).unwrap();
        for v in g {
            assert!((v - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn convex_input_is_returned() {
        let y = [1.0, 0.4, 0.1, 0.0, 0.2];
        let g = kkt_oracle(&y, &[ConeSpec::new(0, 4).unwrap()]).unwrap();
        for (a, b) in g.iter().zip(&y) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_large_problems() {
        let y = vec![0.0; 13];
        assert!(matches!(
            kkt_oracle(&y, &[ConeSpec::new(0, 12).unwrap()]),
            Err(Error::DimensionTooLarge { len: 13, .. })
        ));
    }
}

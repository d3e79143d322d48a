//! Least-squares projections onto cones of sequences that are convex on an
//! integer interval, and onto intersections of such cones by Dykstra's cyclic
//! projection scheme.

mod active_set;
mod oracle;

pub use active_set::KktResiduals;
pub use oracle::{kkt_oracle, ORACLE_MAX_LEN};

use active_set::Constraints;

use crate::error::{Error, Result};

/// Default stopping tolerance on the full-cycle sup-norm change.
pub const DYKSTRA_TOL: f64 = 1e-10;
pub const DYKSTRA_MAX_CYCLES: usize = 100_000;
/// Laplacian constraints must hold to within this on every returned point.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Sequences convex on `{lo, …, hi}`: `Δg(k) ≥ 0` for `lo < k < hi`.
///
/// The endpoints carry no constraint, so a cone with `hi - lo ≤ 1` is all of
/// the ambient space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConeSpec {
    pub lo: usize,
    pub hi: usize,
}

impl ConeSpec {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo >= hi {
            return Err(Error::InvalidArgument(format!(
                "cone interval [{lo}, {hi}] is empty"
            )));
        }
        Ok(ConeSpec { lo, hi })
    }

    /// Whether the cone imposes no constraint.
    pub fn is_vacuous(&self) -> bool {
        self.hi - self.lo <= 1
    }

    /// Cones on `[b_0, b_1], [b_1, b_2], …` for sorted boundary points.
    pub fn partition(boundaries: &[usize]) -> Result<Vec<ConeSpec>> {
        boundaries
            .windows(2)
            .map(|w| ConeSpec::new(w[0], w[1]))
            .collect()
    }

    fn check(&self, len: usize) -> Result<()> {
        if self.hi >= len {
            return Err(Error::InvalidArgument(format!(
                "cone [{}, {}] exceeds a sequence of length {len}",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    fn is_feasible(&self, g: &[f64], tol: f64) -> bool {
        (self.lo + 1..self.hi).all(|k| g[k + 1] - 2.0 * g[k] + g[k - 1] >= -tol)
    }
}

fn check_finite(y: &[f64]) -> Result<()> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "input contains non-finite values".into(),
        ));
    }
    Ok(())
}

/// Euclidean projection of `y` onto the sequences convex on `[cone.lo, cone.hi]`.
/// Coordinates outside the interval pass through unchanged.
pub fn project_convex(y: &[f64], cone: ConeSpec) -> Result<Vec<f64>> {
    project_convex_hinted(y, cone, &mut Vec::new())
}

// `hint` holds the knots (local coordinates) of a previous projection onto
// the same cone and is overwritten with the knots of this one.
fn project_convex_hinted(y: &[f64], cone: ConeSpec, hint: &mut Vec<usize>) -> Result<Vec<f64>> {
    check_finite(y)?;
    cone.check(y.len())?;
    let mut out = y.to_vec();
    if cone.is_vacuous() {
        return Ok(out);
    }
    let window = &y[cone.lo..=cone.hi];
    let cons = Constraints::all_interior(window.len());
    let g = active_set::solve(window, &cons, hint)?;
    hint.clear();
    hint.extend((1..window.len() - 1).filter(|&k| g[k + 1] - 2.0 * g[k] + g[k - 1] > 0.0));
    out[cone.lo..=cone.hi].copy_from_slice(&g);
    Ok(out)
}

/// KKT residuals of `g` as a candidate projection of `y` onto the
/// intersection of `cones`.
pub fn kkt_residuals(y: &[f64], g: &[f64], cones: &[ConeSpec]) -> KktResiduals {
    let mut mask = vec![false; y.len()];
    for c in cones {
        for m in mask.iter_mut().take(c.hi).skip(c.lo + 1) {
            *m = true;
        }
    }
    active_set::kkt_residuals(y, g, &Constraints::from_mask(mask))
}

/// Whether `g` satisfies every cone's constraints to within `tol`.
pub fn is_feasible(g: &[f64], cones: &[ConeSpec], tol: f64) -> bool {
    cones.iter().all(|c| c.is_feasible(g, tol))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DykstraOptions {
    pub tol: f64,
    pub max_cycles: usize,
    pub feasibility_tol: f64,
}

impl Default for DykstraOptions {
    fn default() -> Self {
        DykstraOptions {
            tol: DYKSTRA_TOL,
            max_cycles: DYKSTRA_MAX_CYCLES,
            feasibility_tol: FEASIBILITY_TOL,
        }
    }
}

/// Iterate and increments of Dykstra's algorithm.
///
/// One cycle projects `g - u_j` onto `C_j` for `j = 0, …, m` in order and
/// sets `u_j` to the projection minus its argument.
#[derive(Debug, Clone)]
pub struct DykstraState {
    g: Vec<f64>,
    cones: Vec<ConeSpec>,
    increments: Vec<Vec<f64>>,
    hints: Vec<Vec<usize>>,
    cycles: usize,
    last_change: f64,
}

impl DykstraState {
    /// Starts at `g = y` with zero increments. Vacuous cones are dropped.
    pub fn new(y: &[f64], cones: &[ConeSpec]) -> Result<Self> {
        check_finite(y)?;
        for c in cones {
            c.check(y.len())?;
        }
        let cones: Vec<ConeSpec> = cones.iter().copied().filter(|c| !c.is_vacuous()).collect();
        let increments = cones.iter().map(|c| vec![0.0; c.hi - c.lo + 1]).collect();
        let hints = vec![Vec::new(); cones.len()];
        Ok(DykstraState {
            g: y.to_vec(),
            cones,
            increments,
            hints,
            cycles: 0,
            last_change: f64::INFINITY,
        })
    }

    /// Runs one full cycle and returns the sup-norm change of the iterate.
    pub fn cycle(&mut self) -> Result<f64> {
        let before = self.g.clone();
        for ((cone, u), hint) in self
            .cones
            .iter()
            .zip(self.increments.iter_mut())
            .zip(self.hints.iter_mut())
        {
            let mut z = self.g.clone();
            for (zi, ui) in z[cone.lo..=cone.hi].iter_mut().zip(u.iter()) {
                *zi -= ui;
            }
            let projected = project_convex_hinted(&z, *cone, hint)?;
            for (k, ui) in (cone.lo..=cone.hi).zip(u.iter_mut()) {
                *ui = projected[k] - z[k];
            }
            // outside the cone the projection returns z, which differs from g
            // only where u was subtracted, i.e. inside [lo, hi]
            self.g = projected;
        }
        self.cycles += 1;
        self.last_change = before
            .iter()
            .zip(&self.g)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()));
        Ok(self.last_change)
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn into_g(self) -> Vec<f64> {
        self.g
    }

    pub fn cycles(&self) -> usize {
        self.cycles
    }

    pub fn last_change(&self) -> f64 {
        self.last_change
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        is_feasible(&self.g, &self.cones, tol)
    }

    fn has_work(&self) -> bool {
        !self.cones.is_empty()
    }
}

/// Projection of `y` onto the intersection of `cones` by Dykstra's algorithm.
///
/// Stops once a full cycle moves the iterate by less than `opts.tol` in sup
/// norm and every constraint holds to within `opts.feasibility_tol`. With only
/// vacuous cones the input is returned unchanged.
pub fn dykstra_project(y: &[f64], cones: &[ConeSpec], opts: &DykstraOptions) -> Result<Vec<f64>> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(
            "Dykstra tolerance must be positive".into(),
        ));
    }
    let mut state = DykstraState::new(y, cones)?;
    if !state.has_work() {
        return Ok(state.into_g());
    }
    while state.cycles() < opts.max_cycles {
        let change = state.cycle()?;
        if change < opts.tol && state.is_feasible(opts.feasibility_tol) {
            return Ok(state.into_g());
        }
    }
    Err(Error::NonConvergence {
        cycles: state.cycles(),
        last_change: state.last_change(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sup(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn single_bump_projects_to_flat() {
        let g = project_convex(&[0.0, 1.0, 0.0], ConeSpec::new(0, 2).unwrap()).unwrap();
        assert!(sup(&g, &[1.0 / 3.0; 3]) < 1e-15);
        let g = project_convex(&[0.25, 0.5, 0.25], ConeSpec::new(0, 2).unwrap()).unwrap();
        assert!(sup(&g, &[1.0 / 3.0; 3]) < 1e-15);
    }

    #[test]
    fn convex_input_is_fixed() {
        let y = [0.5, 0.3, 0.15, 0.05, 0.0];
        let g = project_convex(&y, ConeSpec::new(0, 4).unwrap()).unwrap();
        assert!(sup(&g, &y) < 1e-15);
    }

    #[test]
    fn outside_coordinates_pass_through() {
        let y = [7.0, 0.0, 1.0, 0.0, -3.0];
        let g = project_convex(&y, ConeSpec::new(1, 3).unwrap()).unwrap();
        assert_eq!(g[0], 7.0);
        assert_eq!(g[4], -3.0);
        assert!(sup(&g[1..4], &[1.0 / 3.0; 3]) < 1e-15);
    }

    #[test]
    fn vacuous_cone_is_identity_bitwise() {
        let y = [0.1, -0.7, 3.3];
        let g = project_convex(&y, ConeSpec::new(1, 2).unwrap()).unwrap();
        assert_eq!(g, y);
        let cones = ConeSpec::partition(&[0, 1, 2]).unwrap();
        let g = dykstra_project(&y, &cones, &DykstraOptions::default()).unwrap();
        assert_eq!(g, y);
    }

    #[test]
    fn bad_arguments() {
        assert!(ConeSpec::new(2, 2).is_err());
        assert!(project_convex(&[0.0, 1.0], ConeSpec::new(0, 2).unwrap()).is_err());
        assert!(project_convex(&[0.0, f64::NAN, 1.0], ConeSpec::new(0, 2).unwrap()).is_err());
        let opts = DykstraOptions {
            tol: 0.0,
            ..Default::default()
        };
        assert!(dykstra_project(&[0.0, 1.0, 0.0], &[ConeSpec::new(0, 2).unwrap()], &opts).is_err());
    }

    #[test]
    fn single_cone_dykstra_equals_projection() {
        let y = [0.3, 0.9, -0.2, 0.4, 0.8, 0.1];
        let cone = ConeSpec::new(0, 5).unwrap();
        let direct = project_convex(&y, cone).unwrap();
        let dyk = dykstra_project(&y, &[cone], &DykstraOptions::default()).unwrap();
        assert_eq!(direct, dyk);
    }

    #[test]
    fn two_cones_match_oracle() {
        let y = [0.0, 1.0, 0.0, 1.0, 0.0];
        let cones = ConeSpec::partition(&[0, 2, 4]).unwrap();
        let dyk = dykstra_project(&y, &cones, &DykstraOptions::default()).unwrap();
        let oracle = kkt_oracle(&y, &cones).unwrap();
        assert!(sup(&dyk, &oracle) < 1e-6);
        assert!(is_feasible(&dyk, &cones, FEASIBILITY_TOL));
    }

    #[test]
    fn cycle_cap_reports_nonconvergence() {
        let y = [0.0, 1.0, 0.0, 1.0, 0.0, 2.0, -1.0];
        let cones = ConeSpec::partition(&[0, 3, 6]).unwrap();
        let opts = DykstraOptions {
            tol: 1e-300,
            max_cycles: 3,
            ..Default::default()
        };
        match dykstra_project(&y, &cones, &opts) {
            Err(Error::NonConvergence { cycles, .. }) => assert_eq!(cycles, 3),
            Ok(_) => {} // converged exactly within three cycles
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn kkt_residuals_of_projection_are_small() {
        let y = [0.9, 0.1, 0.5, 0.45, 0.05, 0.3, 0.0, 0.2];
        let cone = ConeSpec::new(0, 7).unwrap();
        let g = project_convex(&y, cone).unwrap();
        assert!(kkt_residuals(&y, &g, &[cone]).max() <= 1e-9);
        // y itself is infeasible
        assert!(kkt_residuals(&y, &y, &[cone]).primal > 0.1);
    }
}

//! Classical equation of motion `d/dt(M ẋ) + M w² x = F` in canonical
//! coordinates `(x, π = M ẋ)`, where the flow is area preserving and the
//! Wronskian `Ω = M(u v̇ − v u̇)` is the determinant of the fundamental matrix.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::model::Coefficients;
use crate::ode::{self, DenseSolution, StepControl};
use crate::tolerance::ToleranceSettings;
#[allow(unused_imports)]
use num_traits::Float;

/// Allowed `|det Φ − 1|` before a fundamental matrix is rejected.
pub const DET_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalState {
    pub x: f64,
    /// Canonical momentum `M ẋ`.
    pub pi: f64,
}

impl CanonicalState {
    pub fn new(x: f64, pi: f64) -> Result<Self> {
        if !x.is_finite() || !pi.is_finite() {
            return Err(Error::NonFinite("canonical state"));
        }
        Ok(Self { x, pi })
    }

    pub(crate) fn from_array([x, pi]: [f64; 2]) -> Self {
        Self { x, pi }
    }
}

/// Linear map `Φ(t0 → t1)` on canonical states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalMatrix {
    pub entries: Mat2,
    pub t0: f64,
    pub t1: f64,
}

impl FundamentalMatrix {
    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    pub fn det(&self) -> f64 {
        self.entries.det()
    }

    pub fn apply(&self, y: CanonicalState) -> CanonicalState {
        CanonicalState::from_array(self.entries.apply([y.x, y.pi]))
    }

    /// `self` followed by `next`; requires `self.t1 == next.t0`.
    pub fn then(&self, next: &FundamentalMatrix) -> FundamentalMatrix {
        FundamentalMatrix { entries: next.entries * self.entries, t0: self.t0, t1: next.t1 }
    }
}

/// Dense solution of one initial-value problem.
#[derive(Debug, Clone)]
pub struct Trajectory {
    sol: DenseSolution<2>,
}

impl Trajectory {
    /// Accepted step boundaries, strictly monotone.
    pub fn times(&self) -> Vec<f64> {
        self.sol.mesh()
    }

    pub fn states(&self) -> Vec<CanonicalState> {
        self.times().into_iter().map(|t| self.state(t)).collect()
    }

    pub fn state(&self, t: f64) -> CanonicalState {
        CanonicalState::from_array(self.sol.eval(t))
    }

    pub fn t0(&self) -> f64 {
        self.sol.t_start()
    }

    pub fn t1(&self) -> f64 {
        self.sol.t_end()
    }

    pub fn final_state(&self) -> CanonicalState {
        CanonicalState::from_array(self.sol.y_end())
    }

    pub fn error_estimate(&self) -> f64 {
        self.sol.error_estimate()
    }
}

pub(crate) fn step_control(tol: &ToleranceSettings) -> StepControl {
    StepControl::new(tol.ode_rel, tol.ode_abs)
}

fn check_tol(tol: &ToleranceSettings) -> Result<()> {
    let (lo, hi) = ToleranceSettings::ODE_REL_RANGE;
    if !(tol.ode_rel >= lo && tol.ode_rel <= hi) {
        return Err(Error::InvalidParameter("ode_rel outside [1e-13, 1e-6]"));
    }
    Ok(())
}

/// Solves the equation of motion from `y0` at `t0` to `t1 > t0`; the force is
/// included only when `forced` is set.
pub fn integrate<C: Coefficients>(
    coeffs: &C,
    y0: CanonicalState,
    t0: f64,
    t1: f64,
    tol: &ToleranceSettings,
    forced: bool,
) -> Result<Trajectory> {
    if !(t1 > t0) {
        return Err(Error::InvalidParameter("integration requires t1 > t0"));
    }
    check_tol(tol)?;
    let rhs = |t: f64, y: &[f64; 2]| {
        let m = coeffs.mass(t);
        let f = if forced { coeffs.force(t) } else { 0.0 };
        [y[1] / m, -m * coeffs.freq_sq(t) * y[0] + f]
    };
    let sol = ode::integrate(&rhs, t0, [y0.x, y0.pi], t1, &step_control(tol))?;
    Ok(Trajectory { sol })
}

/// Both columns of the homogeneous flow integrated together, with dense output.
#[derive(Debug, Clone)]
pub struct ColumnFlow {
    sol: DenseSolution<4>,
}

impl ColumnFlow {
    /// `Φ(t_start → t)`.
    pub fn matrix_at(&self, t: f64) -> Mat2 {
        let y = self.sol.eval(t);
        Mat2::from_columns([y[0], y[1]], [y[2], y[3]])
    }

    pub fn mesh(&self) -> Vec<f64> {
        self.sol.mesh()
    }

    pub fn t_start(&self) -> f64 {
        self.sol.t_start()
    }

    pub fn t_end(&self) -> f64 {
        self.sol.t_end()
    }

    pub fn error_estimate(&self) -> f64 {
        self.sol.error_estimate()
    }

    pub fn end_matrix(&self) -> FundamentalMatrix {
        let y = self.sol.y_end();
        FundamentalMatrix {
            entries: Mat2::from_columns([y[0], y[1]], [y[2], y[3]]),
            t0: self.sol.t_start(),
            t1: self.sol.t_end(),
        }
    }
}

/// Integrates the homogeneous flow's two columns from `t0` to `t1` (either direction).
pub fn column_flow<C: Coefficients>(coeffs: &C, t0: f64, t1: f64, tol: &ToleranceSettings) -> Result<ColumnFlow> {
    check_tol(tol)?;
    let rhs = |t: f64, y: &[f64; 4]| {
        let m = coeffs.mass(t);
        let k = m * coeffs.freq_sq(t);
        [y[1] / m, -k * y[0], y[3] / m, -k * y[2]]
    };
    let sol = ode::integrate(&rhs, t0, [1.0, 0.0, 0.0, 1.0], t1, &step_control(tol))?;
    Ok(ColumnFlow { sol })
}

/// `Φ(t0 → t1)` of the homogeneous equation, rejected if `|det − 1| > 1e-9`.
pub fn fundamental_matrix<C: Coefficients>(
    coeffs: &C,
    t0: f64,
    t1: f64,
    tol: &ToleranceSettings,
) -> Result<FundamentalMatrix> {
    if t1 == t0 {
        return Err(Error::InvalidParameter("fundamental matrix needs t1 != t0"));
    }
    let phi = column_flow(coeffs, t0, t1, tol)?.end_matrix();
    let det = phi.det();
    if !det.is_finite() || (det - 1.0).abs() > DET_TOLERANCE {
        return Err(Error::SymplecticityLost { det });
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FourierSeries, PeriodicCoefficients};
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn tol() -> ToleranceSettings {
        ToleranceSettings::default()
    }

    #[test]
    fn sho_quarter_period() {
        let c = PeriodicCoefficients::constant_frequency(1.0, 2.0 * PI).unwrap();
        let tr = integrate(&c, CanonicalState::new(1.0, 0.0).unwrap(), 0.0, PI / 2.0, &tol(), false).unwrap();
        let end = tr.final_state();
        assert!(end.x.abs() < 1e-9);
        assert!((end.pi + 1.0).abs() < 1e-9);
        let times = tr.times();
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(tr.states().len(), times.len());
    }

    #[test]
    fn free_particle() {
        let c = PeriodicCoefficients::constant_frequency(0.0, 1.0).unwrap();
        let tr = integrate(&c, CanonicalState::new(0.0, 1.0).unwrap(), 0.0, 2.0, &tol(), false).unwrap();
        let end = tr.final_state();
        assert!((end.x - 2.0).abs() < 1e-12);
        assert!((end.pi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_force_returns_after_full_period() {
        // x = 1 + (x0 − 1) cos t; with x0 = 1 the particle stays at the
        // equilibrium, and x0 = 3 comes back after 2π
        let c = PeriodicCoefficients::constant_frequency(1.0, 2.0 * PI)
            .unwrap()
            .with_force(Some(FourierSeries::constant(2.0 * PI, 1.0).unwrap()))
            .unwrap();
        let tr = integrate(&c, CanonicalState::new(1.0, 0.0).unwrap(), 0.0, 2.0 * PI, &tol(), true).unwrap();
        let end = tr.final_state();
        assert!((end.x - 1.0).abs() < 1e-8 && end.pi.abs() < 1e-8);
        let tr = integrate(&c, CanonicalState::new(3.0, 0.0).unwrap(), 0.0, 2.0 * PI, &tol(), true).unwrap();
        assert!((tr.final_state().x - 3.0).abs() < 1e-8);
        assert!((tr.state(PI).x + 1.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_interval_and_nan() {
        let c = PeriodicCoefficients::constant_frequency(1.0, 1.0).unwrap();
        let y = CanonicalState { x: 1.0, pi: 0.0 };
        assert!(integrate(&c, y, 1.0, 0.5, &tol(), false).is_err());
        assert!(CanonicalState::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn fundamental_matrix_examples() {
        let c = PeriodicCoefficients::constant_frequency(1.0, 2.0 * PI).unwrap();
        let full = fundamental_matrix(&c, 0.0, 2.0 * PI, &tol()).unwrap();
        assert!(full.entries.sub(&Mat2::IDENTITY).max_abs() < 1e-8);
        let half = fundamental_matrix(&c, 0.0, PI, &tol()).unwrap();
        assert!(half.entries.sub(&Mat2::IDENTITY.scale(-1.0)).max_abs() < 1e-8);
        let free = PeriodicCoefficients::constant_frequency(0.0, 3.0).unwrap();
        let shear = fundamental_matrix(&free, 0.0, 3.0, &tol()).unwrap();
        assert!(shear.entries.sub(&Mat2([[1.0, 3.0], [0.0, 1.0]])).max_abs() < 1e-12);
    }

    #[test]
    fn refinement_within_error_estimate() {
        let c = PeriodicCoefficients::mathieu(0.5, 0.1).unwrap();
        let coarse = column_flow(&c, 0.0, PI, &tol()).unwrap();
        let fine = fundamental_matrix(&c, 0.0, PI, &tol().with_ode_scaled(0.5)).unwrap();
        let change = coarse.end_matrix().entries.sub(&fine.entries).max_abs();
        assert!(change < 10.0 * coarse.error_estimate(), "{change} vs {}", coarse.error_estimate());
    }

    #[test]
    fn mathieu_is_symplectic() {
        let c = PeriodicCoefficients::mathieu(1.0, 0.2).unwrap();
        let phi = fundamental_matrix(&c, 0.0, PI, &tol()).unwrap();
        assert!((phi.det() - 1.0).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn composition_and_reversibility(s1 in 0.1..3.0f64, s2 in 0.1..3.0f64, a in 0.2..3.0f64, q in 0.0..0.6f64) {
            let c = PeriodicCoefficients::mathieu(a, q).unwrap();
            let (t0, t1, t2) = (0.0, s1, s1 + s2);
            let p01 = fundamental_matrix(&c, t0, t1, &tol()).unwrap();
            let p12 = fundamental_matrix(&c, t1, t2, &tol()).unwrap();
            let p02 = fundamental_matrix(&c, t0, t2, &tol()).unwrap();
            prop_assert!(p01.then(&p12).entries.sub(&p02.entries).max_abs() < 1e-8);
            let p10 = fundamental_matrix(&c, t1, t0, &tol()).unwrap();
            prop_assert!((p10.entries * p01.entries).sub(&Mat2::IDENTITY).max_abs() < 1e-8);
            prop_assert!((p02.det() - 1.0).abs() < 1e-9);
        }
    }
}

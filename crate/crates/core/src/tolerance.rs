use crate::error::{Error, Result};

/// Numerical tolerances shared by the integrator, quadratures and classifiers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceSettings {
    pub ode_rel: f64,
    pub ode_abs: f64,
    pub quad_abs: f64,
    /// Half-width of the band around `|trace| = 2` treated as the boundary case.
    pub boundary_eps: f64,
    pub quasi_tol: f64,
}

impl Default for ToleranceSettings {
    fn default() -> Self {
        Self { ode_rel: 1e-10, ode_abs: 1e-12, quad_abs: 1e-10, boundary_eps: 1e-9, quasi_tol: 1e-6 }
    }
}

impl ToleranceSettings {
    pub const ODE_REL_RANGE: (f64, f64) = (1e-13, 1e-6);
    pub const ODE_ABS_RANGE: (f64, f64) = (1e-16, 1e-6);
    pub const QUAD_ABS_RANGE: (f64, f64) = (1e-14, 1e-4);
    pub const BOUNDARY_EPS_RANGE: (f64, f64) = (1e-14, 1e-3);
    pub const QUASI_TOL_RANGE: (f64, f64) = (1e-14, 1e-2);

    pub fn validate(&self) -> Result<()> {
        let within = |v: f64, (lo, hi): (f64, f64)| v.is_finite() && v >= lo && v <= hi;
        if !within(self.ode_rel, Self::ODE_REL_RANGE) {
            return Err(Error::InvalidParameter("ode_rel outside [1e-13, 1e-6]"));
        }
        if !within(self.ode_abs, Self::ODE_ABS_RANGE) {
            return Err(Error::InvalidParameter("ode_abs outside [1e-16, 1e-6]"));
        }
        if !within(self.quad_abs, Self::QUAD_ABS_RANGE) {
            return Err(Error::InvalidParameter("quad_abs outside [1e-14, 1e-4]"));
        }
        if !within(self.boundary_eps, Self::BOUNDARY_EPS_RANGE) {
            return Err(Error::InvalidParameter("boundary_eps outside [1e-14, 1e-3]"));
        }
        if !within(self.quasi_tol, Self::QUASI_TOL_RANGE) {
            return Err(Error::InvalidParameter("quasi_tol outside [1e-14, 1e-2]"));
        }
        Ok(())
    }

    /// Same settings with the ODE tolerances scaled by `factor`, clamped to the admissible range.
    pub fn with_ode_scaled(&self, factor: f64) -> Self {
        let (lo, hi) = Self::ODE_REL_RANGE;
        let (alo, ahi) = Self::ODE_ABS_RANGE;
        Self {
            ode_rel: (self.ode_rel * factor).clamp(lo, hi),
            ode_abs: (self.ode_abs * factor).clamp(alo, ahi),
            ..*self
        }
    }
}

//! Overall, dynamical and geometric phases over one quasiperiod, with the
//! consistency checks that tie them together.
//!
//! Every phase is split into a part proportional to `n + ½` and an
//! ℏ-independent action part that enters divided by ℏ; see [`PhaseSplit`].

use alloc::format;
use alloc::string::String;
use core::f64::consts::PI;

use crate::driven::{ActionIntegral, ParticularSolution};
use crate::error::{Error, Result};
use crate::floquet::{ClassicalBasis, Representation, StabilityClass};
use crate::model::{gcd, Coefficients, PeriodicCoefficients};
use crate::quadrature::integrate_with_breaks;
use crate::quantum::{sample_psi, QuantumStateSpec, SpatialGrid};
#[allow(unused_imports)]
use num_traits::Float;

/// Reduces a phase to `(−π, π]`; presentation only.
pub fn wrap_phase(phi: f64) -> f64 {
    let r = phi - 2.0 * PI * (phi / (2.0 * PI)).round();
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// The common quasiperiod of the wave functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quasiperiod {
    pub value: f64,
    /// The `Nτ` (or `2Nτ`) value suggested by the particular solution's
    /// period `(p/N)τ`; equals `value` unless `p > 1`.
    pub label: f64,
}

impl Quasiperiod {
    pub fn agrees(&self) -> bool {
        (self.value - self.label).abs() <= 1e-12 * self.value
    }
}

/// Undriven: the basis span (`τ` or `2τ`). Driven: the least common multiple
/// of that span and the period of `x_p`.
pub fn quasiperiod(basis: &ClassicalBasis, particular: Option<&ParticularSolution>) -> Quasiperiod {
    let tau = basis.tau();
    let j = match basis.representation() {
        Representation::EqualAB => 1,
        Representation::PeriodicBoundary => basis.period_multiple() as usize,
    };
    match particular {
        None => Quasiperiod { value: basis.tau_prime(), label: basis.tau_prime() },
        Some(xp) => {
            // lcm(j, p/N) = lcm(j, p) when gcd(p, N) = 1
            let (p, n) = xp.minimal_period();
            let l = j * p as usize / gcd(j, p as usize);
            Quasiperiod { value: l as f64 * tau, label: (j * n as usize) as f64 * tau }
        }
    }
}

/// A phase `homogeneous + action/ℏ`, where `homogeneous` carries the whole
/// `(n + ½)` dependence and `action` does not depend on ℏ.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseSplit {
    pub homogeneous: f64,
    pub action: f64,
}

impl PhaseSplit {
    pub fn value(&self, hbar: f64) -> f64 {
        self.homogeneous + self.action / hbar
    }
}

/// Shared inputs of the phase formulas.
#[derive(Debug, Clone, Copy)]
pub struct PhaseInputs<'a> {
    pub basis: &'a ClassicalBasis,
    pub coeffs: &'a PeriodicCoefficients,
    pub drive: Option<&'a ActionIntegral<'a>>,
    pub hbar: f64,
    pub quad_abs: f64,
}

impl PhaseInputs<'_> {
    /// `∫₀^{τ′} f` for a span-periodic homogeneous integrand.
    fn homogeneous_integral(&self, tau_prime: f64, f: impl Fn(&HomPoint) -> f64) -> f64 {
        let b = self.basis;
        let span = b.tau_prime();
        let breaks = b.breakpoints(0.0, span);
        let omega = b.omega();
        let (v, _) = integrate_with_breaks(
            |t| {
                let p = b.point(t);
                f(&HomPoint { mass: p.mass, w2: self.coeffs.freq_sq(t), rho: p.rho(), rho_dot: p.rho_dot(), omega })
            },
            0.0,
            span,
            &breaks,
            self.quad_abs,
        );
        v * tau_prime / span
    }

    /// `∫₀^{τ′} g(M, w², x_p, M ẋ_p)`, zero when undriven.
    fn drive_integral(&self, tau_prime: f64, g: impl Fn(f64, f64, f64, f64) -> f64) -> f64 {
        let Some(d) = self.drive else { return 0.0 };
        let xp = d.particular();
        let breaks = xp.breakpoints(0.0, tau_prime);
        let (v, _) = integrate_with_breaks(
            |t| {
                let s = xp.state(t);
                g(self.coeffs.mass(t), self.coeffs.freq_sq(t), s.x, s.pi)
            },
            0.0,
            tau_prime,
            &breaks,
            self.quad_abs,
        );
        v
    }
}

struct HomPoint {
    mass: f64,
    w2: f64,
    rho: f64,
    rho_dot: f64,
    omega: f64,
}

impl HomPoint {
    fn kinetic(&self) -> f64 {
        self.mass * self.rho_dot * self.rho_dot / self.omega
    }
    fn rate(&self) -> f64 {
        self.omega / (self.mass * self.rho * self.rho)
    }
    fn potential(&self) -> f64 {
        self.mass * self.w2 * self.rho * self.rho / self.omega
    }
}

fn half_n(n: u32) -> f64 {
    n as f64 + 0.5
}

/// `∫₀^{τ′} Ω/(Mρ²) dt` by quadrature.
pub fn phase_rate_integral(inputs: &PhaseInputs<'_>, tau_prime: f64) -> f64 {
    inputs.homogeneous_integral(tau_prime, HomPoint::rate)
}

/// Overall phase `χₙ`.
///
/// The homogeneous part is `−(n+½)` times the advance of the angle of
/// `u + iv`: `ατ′` for equal-amplitude bases, the unwrapped (winding) angle
/// for periodic ones. [`phase_rate_integral`] gives the same quantity by
/// quadrature and is reported separately as a cross-check.
pub fn overall_phase(inputs: &PhaseInputs<'_>, n: u32, tau_prime: f64) -> PhaseSplit {
    let b = inputs.basis;
    let advance = match (b.representation(), b.alpha()) {
        (Representation::EqualAB, Some(alpha)) => alpha * tau_prime,
        _ => b.phase(tau_prime) - b.phase(0.0),
    };
    PhaseSplit { homogeneous: -half_n(n) * advance, action: inputs.drive.map_or(0.0, |d| d.delta(tau_prime)) }
}

/// Dynamical phase `δₙ = −(1/ℏ)∫⟨H⟩dt` in the symmetric three-term form.
pub fn dynamical_phase(inputs: &PhaseInputs<'_>, n: u32, tau_prime: f64) -> PhaseSplit {
    let hom = inputs.homogeneous_integral(tau_prime, |p| p.kinetic() + p.rate() + p.potential());
    let action = inputs.drive_integral(tau_prime, |m, w2, x, pi| -(1.5 * pi * pi / m - 0.5 * m * w2 * x * x));
    PhaseSplit { homogeneous: -0.5 * half_n(n) * hom, action }
}

/// The homogeneous dynamical phase in the undriven arrangement
/// `(Ω/2Mρ²)(1 + M²ρ²ρ̇²/Ω²) + ρ²Mw²/2Ω`, which must match
/// [`dynamical_phase`].
pub fn dynamical_phase_undriven_form(inputs: &PhaseInputs<'_>, n: u32, tau_prime: f64) -> f64 {
    let v = inputs.homogeneous_integral(tau_prime, |p| {
        let ratio = p.mass * p.rho * p.rho_dot / p.omega;
        p.omega / (2.0 * p.mass * p.rho * p.rho) * (1.0 + ratio * ratio)
            + p.rho * p.rho * p.mass * p.w2 / (2.0 * p.omega)
    });
    -half_n(n) * v
}

/// Berry phase `γₙ` from its own formula, not as `χ − δ`.
///
/// Periodic bases use `½(n+½)∫(Mρ̇²/Ω − Ω/Mρ² + Mw²ρ²/Ω)`. Equal-amplitude
/// bases use `−½(n+½)ατ′ + ½(n+½)∫(w²p²/Ω̃ + M q̇²/Ω̃)` with `ρ = A q`,
/// `p = √M q` and `Ω̃ = Ω/A²`. Driven systems add `(1/ℏ)∫M ẋ_p²`.
pub fn berry_phase(inputs: &PhaseInputs<'_>, n: u32, tau_prime: f64) -> PhaseSplit {
    let b = inputs.basis;
    let homogeneous = match (b.representation(), b.alpha()) {
        (Representation::EqualAB, Some(alpha)) => {
            let a = b.rho(0.0);
            let integral = inputs.homogeneous_integral(tau_prime, |h| {
                let omega_t = h.omega / (a * a);
                let q = h.rho / a;
                let q_dot = h.rho_dot / a;
                let p = h.mass.sqrt() * q;
                (h.w2 * p * p + h.mass * q_dot * q_dot) / omega_t
            });
            -0.5 * half_n(n) * alpha * tau_prime + 0.5 * half_n(n) * integral
        }
        _ => 0.5 * half_n(n) * inputs.homogeneous_integral(tau_prime, |p| p.kinetic() - p.rate() + p.potential()),
    };
    let action = inputs.drive_integral(tau_prime, |m, _, _, pi| pi * pi / m);
    PhaseSplit { homogeneous, action }
}

/// `‖ψₙ(·, τ′) − e^{iχ} ψₙ(·, 0)‖₂` over `grid`.
pub fn verify_quasiperiodicity(spec: &QuantumStateSpec<'_>, tau_prime: f64, chi: f64, grid: &SpatialGrid) -> f64 {
    let start = sample_psi(spec, 0.0, grid);
    let end = sample_psi(spec, tau_prime, grid);
    let turn = num_complex::Complex64::from_polar(1.0, chi);
    let diff: alloc::vec::Vec<f64> = end.iter().zip(&start).map(|(e, s)| (e - turn * s).norm_sqr()).collect();
    grid.integrate(&diff).sqrt()
}

/// Whether a Berry phase exists, with the reason when it does not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Defined,
    Undefined(String),
}

impl Verdict {
    pub fn is_defined(&self) -> bool {
        matches!(self, Verdict::Defined)
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            Verdict::Defined => None,
            Verdict::Undefined(r) => Some(r),
        }
    }
}

pub const REASON_UNSTABLE: &str = "unstable homogeneous solution";
pub const REASON_DIVERGENT: &str = "divergent particular solution";
pub const REASON_NO_PERIODIC: &str = "no periodic particular solution found";

/// Undefined for unstable motion or a diverging particular solution.
pub fn berry_verdict(
    classification: &StabilityClass,
    particular: Option<core::result::Result<&ParticularSolution, &Error>>,
) -> Verdict {
    if !classification.is_stable() {
        return Verdict::Undefined(REASON_UNSTABLE.into());
    }
    match particular {
        None | Some(Ok(_)) => Verdict::Defined,
        Some(Err(Error::ResonantForce)) => Verdict::Undefined(REASON_DIVERGENT.into()),
        Some(Err(Error::NoPeriodicSolutionFound { .. })) => Verdict::Undefined(REASON_NO_PERIODIC.into()),
        Some(Err(e)) => Verdict::Undefined(format!("{e}")),
    }
}

/// All phases for one quantum number over one quasiperiod.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseReport {
    pub n: u32,
    pub hbar: f64,
    pub tau_prime: f64,
    pub chi: PhaseSplit,
    pub delta_dyn: PhaseSplit,
    pub gamma: PhaseSplit,
    /// `−(n+½)∫Ω/(Mρ²)`, the quadrature form of the homogeneous `χ`.
    pub chi_quadrature: f64,
    /// Homogeneous `δ` in the undriven arrangement.
    pub delta_undriven_form: f64,
    pub closure_residual: f64,
    pub quasi_residual: f64,
}

impl PhaseReport {
    pub fn chi_value(&self) -> f64 {
        self.chi.value(self.hbar)
    }

    pub fn delta_value(&self) -> f64 {
        self.delta_dyn.value(self.hbar)
    }

    pub fn gamma_value(&self) -> f64 {
        self.gamma.value(self.hbar)
    }

    /// `|χ_hom − χ_quadrature|`.
    pub fn chi_cross_check(&self) -> f64 {
        (self.chi.homogeneous - self.chi_quadrature).abs()
    }

    /// Gap between the two arrangements of the homogeneous `δ`.
    pub fn delta_forms_gap(&self) -> f64 {
        (self.delta_dyn.homogeneous - self.delta_undriven_form).abs()
    }

    pub fn closure_ok(&self) -> bool {
        self.closure_residual < 1e-7 * (1.0 + self.chi_value().abs())
    }

    pub fn quasi_ok(&self, quasi_tol: f64) -> bool {
        self.quasi_residual < quasi_tol
    }
}

/// Settings for the quasiperiodicity check grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSettings {
    pub width_factor: f64,
    pub n_points: usize,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings { width_factor: 10.0, n_points: SpatialGrid::DEFAULT_POINTS }
    }
}

/// Computes every phase of level `n` and both consistency residuals.
pub fn phase_report(inputs: &PhaseInputs<'_>, n: u32, tau_prime: f64, grid: GridSettings) -> Result<PhaseReport> {
    let chi = overall_phase(inputs, n, tau_prime);
    let delta_dyn = dynamical_phase(inputs, n, tau_prime);
    let gamma = berry_phase(inputs, n, tau_prime);
    let hbar = inputs.hbar;
    let closure_residual = (gamma.value(hbar) - (chi.value(hbar) - delta_dyn.value(hbar))).abs();
    let spec = QuantumStateSpec::new(inputs.basis, inputs.drive, hbar, n)?;
    let grid = SpatialGrid::for_states(&spec, 0.0, n, grid.width_factor, grid.n_points)?;
    let quasi_residual = verify_quasiperiodicity(&spec, tau_prime, chi.value(hbar), &grid);
    Ok(PhaseReport {
        n,
        hbar,
        tau_prime,
        chi,
        delta_dyn,
        gamma,
        chi_quadrature: -half_n(n) * phase_rate_integral(inputs, tau_prime),
        delta_undriven_form: dynamical_phase_undriven_form(inputs, n, tau_prime),
        closure_residual,
        quasi_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driven::{periodic_particular, DEFAULT_MAX_PN};
    use crate::floquet::{build_basis_direct, classify, monodromy};
    use crate::model::FourierSeries;
    use crate::tolerance::ToleranceSettings;
    use alloc::vec;

    fn basis_for(c: &PeriodicCoefficients) -> (StabilityClass, ClassicalBasis) {
        let tol = ToleranceSettings::default();
        let m = monodromy(c, &tol).unwrap();
        let class = classify(&m, c.tau(), tol.boundary_eps);
        (class, build_basis_direct(c, class, &tol).unwrap())
    }

    fn inputs<'a>(
        b: &'a ClassicalBasis,
        c: &'a PeriodicCoefficients,
        d: Option<&'a ActionIntegral<'a>>,
    ) -> PhaseInputs<'a> {
        PhaseInputs { basis: b, coeffs: c, drive: d, hbar: c.hbar(), quad_abs: 1e-10 }
    }

    #[test]
    fn wrap_phase_range() {
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(-2.5 * PI) + 0.5 * PI).abs() < 1e-14);
    }

    #[test]
    fn sho_phases() {
        let c = PeriodicCoefficients::constant_frequency(1.0, 2.0 * PI).unwrap();
        let (_, b) = basis_for(&c);
        let q = quasiperiod(&b, None);
        assert!((q.value - 2.0 * PI).abs() < 1e-12 && q.agrees());
        let inp = inputs(&b, &c, None);
        for n in [0, 1, 2, 5] {
            let r = phase_report(&inp, n, q.value, GridSettings::default()).unwrap();
            let expect = -(n as f64 + 0.5) * 2.0 * PI;
            assert!((r.chi_value() - expect).abs() < 1e-8);
            assert!((r.delta_value() - expect).abs() < 1e-8);
            assert!(r.gamma_value().abs() < 1e-8);
            assert!(r.quasi_residual < 1e-9, "{}", r.quasi_residual);
        }
        // τ = 1 is a generic (equal-amplitude) case with α = 1
        let c1 = PeriodicCoefficients::constant_frequency(1.0, 1.0).unwrap();
        let (_, b1) = basis_for(&c1);
        let inp = inputs(&b1, &c1, None);
        assert!((overall_phase(&inp, 2, 1.0).value(1.0) + 2.5).abs() < 1e-9);
        assert!((dynamical_phase(&inp, 1, 1.0).value(1.0) + 1.5).abs() < 1e-9);
        assert!(berry_phase(&inp, 3, 1.0).value(1.0).abs() < 1e-9);
    }

    #[test]
    fn half_period_boundary_case() {
        let c = PeriodicCoefficients::constant_frequency(1.0, PI).unwrap();
        let (class, b) = basis_for(&c);
        assert_eq!(class, StabilityClass::BoundaryPeriodic { period_multiple: 2, stable: true });
        assert!((quasiperiod(&b, None).value - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn mathieu_closure_and_linearity() {
        let c = PeriodicCoefficients::mathieu(0.5, 0.1).unwrap();
        let (_, b) = basis_for(&c);
        let inp = inputs(&b, &c, None);
        let tp = quasiperiod(&b, None).value;
        let mut ratio = None;
        for n in [0, 1, 2, 5] {
            let r = phase_report(&inp, n, tp, GridSettings::default()).unwrap();
            assert!(r.closure_ok(), "closure {}", r.closure_residual);
            assert!(r.chi_cross_check() < 1e-8 * (n as f64 + 0.5));
            assert!(r.delta_forms_gap() < 1e-9);
            assert!(r.quasi_residual < 1e-6, "n {n}: {}", r.quasi_residual);
            let g = r.gamma_value() / (n as f64 + 0.5);
            let first = *ratio.get_or_insert(g);
            assert!((g - first).abs() < 1e-9);
        }
    }

    #[test]
    fn scale_invariance() {
        let c = PeriodicCoefficients::mathieu(0.5, 0.1).unwrap();
        let (_, b) = basis_for(&c);
        let b3 = b.scaled(3.0);
        let tp = quasiperiod(&b, None).value;
        let (i1, i3) = (inputs(&b, &c, None), inputs(&b3, &c, None));
        for n in [0, 3] {
            let (r1, r3) = (
                phase_report(&i1, n, tp, GridSettings::default()).unwrap(),
                phase_report(&i3, n, tp, GridSettings::default()).unwrap(),
            );
            assert!((r1.chi_value() - r3.chi_value()).abs() < 1e-9);
            assert!((r1.delta_value() - r3.delta_value()).abs() < 1e-9);
            assert!((r1.gamma_value() - r3.gamma_value()).abs() < 1e-9);
        }
    }

    #[test]
    fn driven_closed_form() {
        let f = FourierSeries::new(PI, 0.0, vec![3.0], vec![]).unwrap();
        let c = PeriodicCoefficients::constant_frequency(1.0, PI).unwrap().with_force(Some(f)).unwrap();
        let (_, b) = basis_for(&c);
        let xp = periodic_particular(&c, &ToleranceSettings::default(), DEFAULT_MAX_PN).unwrap();
        let q = quasiperiod(&b, Some(&xp));
        assert!((q.value - 2.0 * PI).abs() < 1e-12 && q.agrees());
        let act = ActionIntegral::new(&xp, &c, q.value, 1e-10);
        let inp = inputs(&b, &c, Some(&act));
        let r = phase_report(&inp, 0, q.value, GridSettings::default()).unwrap();
        assert!((r.chi_value() + 2.5 * PI).abs() < 1e-8, "{}", r.chi_value());
        assert!((r.delta_value() + 6.5 * PI).abs() < 1e-8, "{}", r.delta_value());
        assert!((r.gamma_value() - 4.0 * PI).abs() < 1e-7);
        assert!((r.gamma.action - 4.0 * PI).abs() < 1e-7 && r.gamma.homogeneous.abs() < 1e-8);
        assert!(r.closure_ok() && r.quasi_residual < 1e-6, "{}", r.quasi_residual);

        // doubling ℏ halves exactly the action terms
        let inp2 = PhaseInputs { hbar: 2.0, ..inp };
        let r2 = phase_report(&inp2, 0, q.value, GridSettings::default()).unwrap();
        assert_eq!(r2.gamma.action, r.gamma.action);
        assert_eq!(r2.gamma.value(2.0) - r2.gamma.homogeneous, 0.5 * (r.gamma.value(1.0) - r.gamma.homogeneous));
        assert!(r2.quasi_residual < 1e-6);
    }

    #[test]
    fn verdicts() {
        let unstable = StabilityClass::Unstable { lyapunov_rate: 0.1 };
        assert_eq!(berry_verdict(&unstable, None).reason(), Some(REASON_UNSTABLE));
        let stable = StabilityClass::StableGeneric { alpha: 0.7 };
        assert!(berry_verdict(&stable, None).is_defined());
        assert_eq!(berry_verdict(&stable, Some(Err(&Error::ResonantForce))).reason(), Some(REASON_DIVERGENT));
        let open = StabilityClass::BoundaryPeriodic { period_multiple: 1, stable: false };
        assert!(!berry_verdict(&open, None).is_defined());
    }
}

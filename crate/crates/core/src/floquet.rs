//! Floquet analysis of the homogeneous equation: monodromy matrix,
//! stability classification, and the real stable solution pair `{u, v}`.
//!
//! For a stable generic system the pair is built from the Floquet
//! eigensolution `f(t) = Φ(t)e`, `f(τ) = e^{iατ} f(0)`, as `u = Re f`,
//! `v = Im f`, which is the equal-amplitude (`A = B`) representation: `ρ` is
//! `τ`-periodic and the phase `φ = arg(u + iv)` advances by `ατ` per period.
//! At the band edges the monodromy is `±I` when stable and any pair of
//! solutions is `τ`- or `2τ`-periodic.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::classical::{self, ColumnFlow, FundamentalMatrix};
use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::model::{Coefficients, FourierSeries, PeriodicCoefficients};
use crate::quadrature;
use crate::tolerance::ToleranceSettings;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StabilityClass {
    /// `|tr Φ| < 2`; `alpha = arccos(tr/2)/τ ∈ (0, π/τ)`.
    StableGeneric { alpha: f64 },
    /// `|tr Φ| = 2` within `boundary_eps`. `period_multiple` is 1 for
    /// `tr = +2` and 2 for `tr = −2`; stable iff `Φ = ±I`.
    BoundaryPeriodic { period_multiple: u8, stable: bool },
    /// `|tr Φ| > 2`; `lyapunov_rate = ln(spectral radius)/τ`.
    Unstable { lyapunov_rate: f64 },
}

impl StabilityClass {
    pub fn is_stable(&self) -> bool {
        match self {
            StabilityClass::StableGeneric { .. } => true,
            StabilityClass::BoundaryPeriodic { stable, .. } => *stable,
            StabilityClass::Unstable { .. } => false,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            StabilityClass::StableGeneric { .. } => "stable",
            StabilityClass::BoundaryPeriodic { stable: true, .. } => "boundary-stable",
            StabilityClass::BoundaryPeriodic { stable: false, .. } => "boundary-unstable",
            StabilityClass::Unstable { .. } => "unstable",
        }
    }
}

/// `Φ(0 → τ)` of the homogeneous equation (any force is ignored).
pub fn monodromy<C: Coefficients>(coeffs: &C, tol: &ToleranceSettings) -> Result<FundamentalMatrix> {
    classical::fundamental_matrix(coeffs, 0.0, coeffs.tau(), tol)
}

pub fn classify(monodromy: &FundamentalMatrix, tau: f64, boundary_eps: f64) -> StabilityClass {
    let phi = &monodromy.entries;
    let tr = phi.trace();
    if tr.abs() < 2.0 - boundary_eps {
        StabilityClass::StableGeneric { alpha: (tr / 2.0).acos() / tau }
    } else if tr.abs() > 2.0 + boundary_eps {
        StabilityClass::Unstable { lyapunov_rate: phi.spectral_radius().ln() / tau }
    } else {
        let sign = if tr > 0.0 { 1.0 } else { -1.0 };
        let stable = phi.sub(&Mat2::IDENTITY.scale(sign)).norm_inf() <= boundary_eps;
        StabilityClass::BoundaryPeriodic { period_multiple: if tr > 0.0 { 1 } else { 2 }, stable }
    }
}

/// `(k, ‖Φᵏ‖₂, e^{0.9·rate·kτ})` for `k = 1, 2, 4, …, k_max`, from powers of the monodromy.
pub fn growth_table(monodromy: &FundamentalMatrix, tau: f64, k_max: u32) -> Vec<(u32, f64, f64)> {
    let rate = monodromy.entries.spectral_radius().ln().max(0.0) / tau;
    let mut rows = Vec::new();
    let mut k = 1;
    while k <= k_max {
        let norm = monodromy.entries.powi(k).spectral_norm();
        rows.push((k, norm, (0.9 * rate * k as f64 * tau).exp()));
        k *= 2;
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// Stable boundary case: `u, v` themselves are `τ′`-periodic.
    PeriodicBoundary,
    /// Stable generic case with equal amplitudes, `ρ` is `τ`-periodic.
    EqualAB,
}

/// Values of the basis pair and their time derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisPoint {
    pub u: f64,
    pub v: f64,
    pub u_dot: f64,
    pub v_dot: f64,
    /// Mass of the physical system at this instant.
    pub mass: f64,
}

impl BasisPoint {
    pub fn rho(&self) -> f64 {
        self.u.hypot(self.v)
    }

    pub fn rho_dot(&self) -> f64 {
        (self.u * self.u_dot + self.v * self.v_dot) / self.rho()
    }

    /// Instantaneous Wronskian `M(u v̇ − v u̇)`.
    pub fn omega(&self) -> f64 {
        self.mass * (self.u * self.v_dot - self.v * self.u_dot)
    }
}

#[derive(Debug, Clone)]
pub struct ClassicalBasis {
    flow: ColumnFlow,
    /// Canonical initial states of `u` (column 0) and `v` (column 1).
    initial: Mat2,
    tau: f64,
    span: f64,
    period_multiple: u8,
    /// `z(t + span) = multiplier · z(t)` with `z = u + iv`.
    multiplier: Complex64,
    phase_table: Vec<(f64, f64)>,
    phase_advance: f64,
    omega: f64,
    exponent: Option<f64>,
    representation: Representation,
    reference_mass: FourierSeries,
    rescale: Option<FourierSeries>,
    scale: f64,
}

/// Builds the stable pair for the system described by `coeffs`.
///
/// Fails with [`Error::UnstableSystem`] for unstable classifications.
pub fn build_basis<C: Coefficients>(
    coeffs: &C,
    mass: &FourierSeries,
    classification: StabilityClass,
    tol: &ToleranceSettings,
) -> Result<ClassicalBasis> {
    let tau = coeffs.tau();
    match classification {
        StabilityClass::StableGeneric { .. } => {
            let flow = classical::column_flow(coeffs, 0.0, tau, tol)?;
            let phi = flow.end_matrix().entries;
            let [lambda, _] = phi.eigenvalues();
            if lambda.im <= 0.0 {
                return Err(Error::UnstableSystem);
            }
            let [[p11, p12], [p21, p22]] = phi.0;
            let cand1 = (Complex64::new(p12, 0.0), lambda - p11);
            let cand2 = (lambda - p22, Complex64::new(p21, 0.0));
            let norm = |c: &(Complex64, Complex64)| c.0.norm_sqr() + c.1.norm_sqr();
            let (e1, e2) = if norm(&cand1) >= norm(&cand2) { cand1 } else { cand2 };
            // r(0) = 1 with u(0) = 1, v(0) = 0
            let e2 = e2 / e1;
            let mut initial = Mat2::from_columns([1.0, e2.re], [0.0, e2.im]);
            let mut multiplier = lambda / lambda.norm();
            if initial.det() < 0.0 {
                initial = Mat2::from_columns(initial.column(1), initial.column(0));
                multiplier = multiplier.conj();
            }
            let theta = (phi.trace() / 2.0).clamp(-1.0, 1.0).acos();
            let mut basis =
                ClassicalBasis::assemble(flow, initial, tau, 1, multiplier, Representation::EqualAB, mass.clone());
            // the characteristic exponent branch ±θ + 2πm consistent with the winding
            let adv = basis.phase_advance;
            let m_plus = ((adv - theta) / (2.0 * PI)).round();
            let m_minus = ((adv + theta) / (2.0 * PI)).round();
            let plus = theta + 2.0 * PI * m_plus;
            let minus = -theta + 2.0 * PI * m_minus;
            let branch = if (plus - adv).abs() <= (minus - adv).abs() { plus } else { minus };
            basis.exponent = Some(branch / tau);
            Ok(basis)
        }
        StabilityClass::BoundaryPeriodic { period_multiple, stable: true } => {
            let span = tau * period_multiple as f64;
            let flow = classical::column_flow(coeffs, 0.0, span, tol)?;
            let m0 = coeffs.mass(0.0);
            let dm0 = coeffs.mass_rate(0.0);
            let s0 = m0.sqrt();
            // image of the unit-mass pair (1, 0), (0, 1) under x -> x/√M; Ω = 1
            let initial = Mat2::from_columns([1.0 / s0, -dm0 / (2.0 * s0)], [0.0, s0]);
            Ok(ClassicalBasis::assemble(
                flow,
                initial,
                tau,
                period_multiple,
                Complex64::new(1.0, 0.0),
                Representation::PeriodicBoundary,
                mass.clone(),
            ))
        }
        _ => Err(Error::UnstableSystem),
    }
}

/// [`build_basis`] for a [`PeriodicCoefficients`] bundle (direct integration).
pub fn build_basis_direct(
    coeffs: &PeriodicCoefficients,
    classification: StabilityClass,
    tol: &ToleranceSettings,
) -> Result<ClassicalBasis> {
    build_basis(coeffs, coeffs.mass_series(), classification, tol)
}

/// Basis of the unit-mass Hill equation `ẍ + w₀² x = 0` mapped back to the
/// variable-mass system with `u = u₀/√M`, `v = v₀/√M`.
pub fn build_basis_via_transform(
    coeffs: &PeriodicCoefficients,
    tol: &ToleranceSettings,
) -> Result<(StabilityClass, ClassicalBasis)> {
    let hill = coeffs.unit_mass_reduction();
    let class = classify(&monodromy(&hill, tol)?, coeffs.tau(), tol.boundary_eps);
    let unit = FourierSeries::constant(coeffs.tau(), 1.0)?;
    let basis0 = build_basis(&hill, &unit, class, tol)?;
    Ok((class, mass_transform(&basis0, coeffs)))
}

/// Maps a unit-mass basis `{u₀, v₀}` to `{u₀/√M, v₀/√M}`; `Ω` is unchanged.
///
/// `basis0` must have been built for the unit-mass reduction of `coeffs`.
pub fn mass_transform(basis0: &ClassicalBasis, coeffs: &PeriodicCoefficients) -> ClassicalBasis {
    debug_assert!(basis0.rescale.is_none());
    ClassicalBasis { rescale: Some(coeffs.mass_series().clone()), ..basis0.clone() }
}

fn wrap_angle(a: f64) -> f64 {
    let shifted = a + PI;
    let r = shifted - (shifted / (2.0 * PI)).floor() * 2.0 * PI - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

impl ClassicalBasis {
    fn assemble(
        flow: ColumnFlow,
        initial: Mat2,
        tau: f64,
        period_multiple: u8,
        multiplier: Complex64,
        representation: Representation,
        reference_mass: FourierSeries,
    ) -> Self {
        let span = flow.t_end();
        let omega = initial.det();
        let mut basis = ClassicalBasis {
            flow,
            initial,
            tau,
            span,
            period_multiple,
            multiplier,
            phase_table: Vec::new(),
            phase_advance: 0.0,
            omega,
            exponent: None,
            representation,
            reference_mass,
            rescale: None,
            scale: 1.0,
        };
        basis.build_phase_table();
        basis
    }

    /// Canonical states of `u` and `v` for `t ∈ [0, span]` in the integrated system.
    fn canonical_in_span(&self, s: f64) -> ([f64; 2], [f64; 2]) {
        let phi = self.flow.matrix_at(s);
        (phi.apply(self.initial.column(0)), phi.apply(self.initial.column(1)))
    }

    fn reduce(&self, t: f64) -> (i64, f64) {
        if (0.0..=self.span).contains(&t) {
            return (0, t);
        }
        let k = (t / self.span).floor();
        let s = (t - k * self.span).clamp(0.0, self.span);
        (k as i64, s)
    }

    fn canonical(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        let (k, s) = self.reduce(t);
        let (uu, vv) = self.canonical_in_span(s);
        if k == 0 {
            return (uu, vv);
        }
        let beta = self.multiplier.arg() * k as f64;
        let (sb, cb) = beta.sin_cos();
        let rot = |a: f64, b: f64| (cb * a - sb * b, sb * a + cb * b);
        let (u0, v0) = rot(uu[0], vv[0]);
        let (u1, v1) = rot(uu[1], vv[1]);
        ([u0, u1], [v0, v1])
    }

    fn arg_in_span(&self, s: f64) -> f64 {
        let (uu, vv) = self.canonical_in_span(s);
        vv[0].atan2(uu[0])
    }

    fn phase_rate_in_span(&self, s: f64) -> f64 {
        let p = self.point_in_reference(s);
        p.omega() / (p.mass * (p.u * p.u + p.v * p.v))
    }

    /// Appends unwrapped phases on `(a, b]`, bisecting until each recorded
    /// increment is below π/2 and agrees with the integrated phase rate.
    fn refine_phase(&self, a: f64, arg_a: f64, b: f64, depth: u32, phi: &mut f64, table: &mut Vec<(f64, f64)>) {
        let arg_b = self.arg_in_span(b);
        let d = wrap_angle(arg_b - arg_a);
        let mid = 0.5 * (a + b);
        let est = (b - a) / 6.0
            * (self.phase_rate_in_span(a) + 4.0 * self.phase_rate_in_span(mid) + self.phase_rate_in_span(b));
        if (d.abs() >= 0.5 * PI || (d - est).abs() > 0.25 * PI) && depth < 30 {
            self.refine_phase(a, arg_a, mid, depth + 1, phi, table);
            let arg_mid = self.arg_in_span(mid);
            self.refine_phase(mid, arg_mid, b, depth + 1, phi, table);
            return;
        }
        *phi += d;
        table.push((b, *phi));
    }

    fn build_phase_table(&mut self) {
        let mesh = self.flow.mesh();
        let mut table = Vec::with_capacity(mesh.len() * 2);
        let start = self.arg_in_span(mesh[0]);
        let mut phi = start;
        table.push((mesh[0], phi));
        for w in mesh.windows(2) {
            let arg_a = self.arg_in_span(w[0]);
            self.refine_phase(w[0], arg_a, w[1], 0, &mut phi, &mut table);
        }
        self.phase_advance = phi - start;
        self.phase_table = table;
    }

    fn point_in_reference(&self, s: f64) -> BasisPoint {
        let (uu, vv) = self.canonical_in_span(s);
        let m = self.reference_mass.eval(s);
        BasisPoint { u: uu[0], v: vv[0], u_dot: uu[1] / m, v_dot: vv[1] / m, mass: m }
    }

    /// `u, v, u̇, v̇` and the physical mass at any `t` (Floquet extension outside one span).
    pub fn point(&self, t: f64) -> BasisPoint {
        let (uu, vv) = self.canonical(t);
        let m_ref = self.reference_mass.eval(t);
        let (mut u, mut v) = (uu[0], vv[0]);
        let (mut u_dot, mut v_dot) = (uu[1] / m_ref, vv[1] / m_ref);
        let mut mass = m_ref;
        if let Some(series) = &self.rescale {
            let m = series.eval(t);
            let dm = series.derivative(t, 1);
            let sm = m.sqrt();
            u_dot = u_dot / sm - u * dm / (2.0 * m * sm);
            v_dot = v_dot / sm - v * dm / (2.0 * m * sm);
            u /= sm;
            v /= sm;
            mass = m;
        }
        let c = self.scale;
        BasisPoint { u: c * u, v: c * v, u_dot: c * u_dot, v_dot: c * v_dot, mass }
    }

    pub fn u(&self, t: f64) -> f64 {
        self.point(t).u
    }

    pub fn v(&self, t: f64) -> f64 {
        self.point(t).v
    }

    pub fn rho(&self, t: f64) -> f64 {
        self.point(t).rho()
    }

    pub fn rho_dot(&self, t: f64) -> f64 {
        self.point(t).rho_dot()
    }

    /// Continuously unwrapped `φ(t) = arg(u + iv)`.
    pub fn phase(&self, t: f64) -> f64 {
        let (k, s) = self.reduce(t);
        let idx = self.phase_table.partition_point(|&(ti, _)| ti <= s).max(1) - 1;
        let (_, phi_i) = self.phase_table[idx];
        let (uu, vv) = self.canonical_in_span(s);
        let phi = phi_i + wrap_angle(vv[0].atan2(uu[0]) - phi_i);
        phi + k as f64 * self.phase_advance
    }

    /// The constant Wronskian `Ω = M(u v̇ − v u̇)`, fixed at `t = 0`.
    pub fn omega(&self) -> f64 {
        self.omega * self.scale * self.scale
    }

    /// Maximum of `|Ω(t)/Ω − 1|` over `samples` uniform points of one span.
    pub fn omega_drift(&self, samples: usize) -> f64 {
        let omega = self.omega();
        (0..=samples)
            .map(|j| {
                let t = self.span * j as f64 / samples as f64;
                (self.point(t).omega() / omega - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `τ′`: the period of `{u, v}` (boundary) or of `ρ` (generic).
    pub fn tau_prime(&self) -> f64 {
        self.span
    }

    pub fn period_multiple(&self) -> u8 {
        self.period_multiple
    }

    /// Characteristic exponent on the branch matching the winding of `u + iv`
    /// (stable generic case only).
    pub fn alpha(&self) -> Option<f64> {
        self.exponent
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    /// Unwrapped phase increment of `u + iv` over one stored span.
    pub fn phase_advance(&self) -> f64 {
        self.phase_advance
    }

    pub fn multiplier(&self) -> Complex64 {
        self.multiplier
    }

    /// Common amplitude of the pair (`A = B`), 1 after construction.
    pub fn amplitude(&self) -> f64 {
        self.scale
    }

    /// Step boundaries of the stored span, for use as quadrature breakpoints.
    pub fn mesh(&self) -> Vec<f64> {
        self.flow.mesh()
    }

    /// The same pair multiplied by a common positive constant.
    pub fn scaled(&self, c: f64) -> Self {
        ClassicalBasis { scale: self.scale * c, ..self.clone() }
    }

    /// Canonical states `(u, M u̇)` and `(v, M v̇)` at `t`.
    pub fn canonical_states(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        let p = self.point(t);
        ([p.u, p.mass * p.u_dot], [p.v, p.mass * p.v_dot])
    }

    /// `∫ Ω/(Mρ²) dt` over `[t0, t1]` by adaptive quadrature on the stored interpolant.
    pub fn phase_rate_integral(&self, t0: f64, t1: f64, quad_abs: f64) -> f64 {
        let omega = self.omega();
        let f = |t: f64| {
            let p = self.point(t);
            omega / (p.mass * (p.u * p.u + p.v * p.v))
        };
        let breaks = self.breakpoints(t0, t1);
        quadrature::integrate_with_breaks(f, t0, t1, &breaks, quad_abs).0
    }

    /// Step boundaries extended periodically over `[t0, t1]`.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mesh = self.flow.mesh();
        let mut out = Vec::new();
        let k0 = (t0 / self.span).floor() as i64;
        let k1 = (t1 / self.span).ceil() as i64;
        for k in k0..=k1 {
            let off = k as f64 * self.span;
            out.extend(mesh.iter().map(|m| m + off).filter(|&m| m > t0 && m < t1));
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
        out.dedup();
        out
    }
}

/// Unwrapped phase increment of `u + iv` over `[t0, t1]`, in turns, rounded.
pub fn winding_number(basis: &ClassicalBasis, t0: f64, t1: f64) -> i64 {
    (phase_increment(basis, t0, t1) / (2.0 * PI)).round() as i64
}

pub fn phase_increment(basis: &ClassicalBasis, t0: f64, t1: f64) -> f64 {
    basis.phase(t1) - basis.phase(t0)
}

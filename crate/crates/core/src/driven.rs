//! Periodic response of the forced oscillator and its action integral.
//!
//! A periodic particular solution is found by shooting: for a trial period
//! `T` the periodic initial state solves `(I − Φ(0→T)) y₀ = r(T)`, where
//! `r(T)` is the forced response from rest. Trial periods are the rational
//! multiples `(p/N)τ` in increasing order.

use alloc::vec;
use alloc::vec::Vec;

use crate::classical::{self, CanonicalState, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::model::{gcd, Coefficients, FourierSeries, PeriodicCoefficients};
use crate::quadrature;
use crate::tolerance::ToleranceSettings;
#[allow(unused_imports)]
use num_traits::Float;

/// Default bound on `p` and `N` in the candidate search.
pub const DEFAULT_MAX_PN: u32 = 12;

/// Condition number of `I − Φ(T)` above which a period is treated as resonant.
pub const RESONANCE_CONDITION: f64 = 1e12;

/// Condition number above which a solution is flagged as near-resonant.
pub const NEAR_RESONANCE_CONDITION: f64 = 1e8;

/// A periodic solution of the forced equation of motion.
#[derive(Debug, Clone)]
pub struct ParticularSolution {
    traj: Trajectory,
    mass: FourierSeries,
    tau: f64,
    period: f64,
    p: u32,
    n: u32,
    y0: CanonicalState,
    constant: bool,
    condition: f64,
}

impl ParticularSolution {
    fn wrap(&self, t: f64) -> f64 {
        let r = t - (t / self.period).floor() * self.period;
        r.clamp(0.0, self.period)
    }

    /// `(x_p, M ẋ_p)` at `t`, extended periodically.
    pub fn state(&self, t: f64) -> CanonicalState {
        if self.constant {
            return self.y0;
        }
        self.traj.state(self.wrap(t))
    }

    pub fn xp(&self, t: f64) -> f64 {
        self.state(t).x
    }

    pub fn xp_dot(&self, t: f64) -> f64 {
        self.state(t).pi / self.mass.eval(t)
    }

    /// Minimal period as `(p, N)`, meaning `(p/N)·τ`; a constant solution
    /// reports `(1, 1)`.
    pub fn minimal_period(&self) -> (u32, u32) {
        (self.p, self.n)
    }

    /// The verified period in time units.
    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn y0(&self) -> CanonicalState {
        self.y0
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    /// Condition number of the shooting matrix `I − Φ(T)`.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn near_resonant(&self) -> bool {
        self.condition > NEAR_RESONANCE_CONDITION
    }

    /// Integrator mesh extended periodically over `(t0, t1)`, for quadrature.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        if self.constant {
            return Vec::new();
        }
        let mesh = self.traj.times();
        let mut out = Vec::new();
        let mut k = (t0 / self.period).floor();
        loop {
            let base = k * self.period;
            if base >= t1 {
                break;
            }
            out.extend(mesh.iter().map(|&m| base + m).filter(|&s| s > t0 && s < t1));
            k += 1.0;
        }
        out.dedup();
        out
    }

    /// Largest residual of `d/dt(M ẋ_p) + M w² x_p − F` over `samples`
    /// points of one period, with the time derivative by central differences.
    pub fn residual(&self, coeffs: &PeriodicCoefficients, samples: usize) -> f64 {
        let h = 1e-3 * self.period.min(coeffs.tau());
        let pi = |t: f64| self.state(t).pi;
        (0..samples)
            .map(|j| {
                let t = self.period * (j as f64 + 0.5) / samples as f64;
                let dpi = (pi(t - 2.0 * h) - 8.0 * pi(t - h) + 8.0 * pi(t + h) - pi(t + 2.0 * h)) / (12.0 * h);
                (dpi + coeffs.mass(t) * coeffs.freq_sq(t) * self.xp(t) - coeffs.force(t)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Whether `t` is a positive integer multiple of `period` (`None` means any).
fn fits(t: f64, period: Option<f64>) -> bool {
    period.is_none_or(|p| {
        let k = (t / p).round();
        k >= 1.0 && (k * p - t).abs() <= 1e-12 * t
    })
}

/// Coprime `(p, N)` pairs up to `max_pn`, ordered by `p/N`.
fn candidates(max_pn: u32) -> Vec<(u32, u32)> {
    let mut out: Vec<(u32, u32)> = (1..=max_pn)
        .flat_map(|p| (1..=max_pn).map(move |n| (p, n)))
        .filter(|&(p, n)| gcd(p as usize, n as usize) == 1)
        .collect();
    out.sort_by(|a, b| (a.0 * b.1).cmp(&(b.0 * a.1)));
    out
}

fn coefficients_fit(coeffs: &PeriodicCoefficients, t: f64) -> bool {
    let force = coeffs.force_series().and_then(FourierSeries::minimal_period);
    fits(t, coeffs.mass_series().minimal_period())
        && fits(t, coeffs.freq_sq_series().minimal_period())
        && fits(t, force)
}

fn shooting_matrix_singular(a: &Mat2, phi_norm: f64, tol: &ToleranceSettings) -> bool {
    let (_, smin) = a.singular_values();
    a.condition() > RESONANCE_CONDITION || smin < 1e3 * tol.ode_rel * (1.0 + phi_norm)
}

/// Finds the periodic particular solution with the smallest admissible period.
pub fn periodic_particular(
    coeffs: &PeriodicCoefficients,
    tol: &ToleranceSettings,
    max_pn: u32,
) -> Result<ParticularSolution> {
    if !coeffs.is_driven() {
        return Err(Error::MissingForce);
    }
    if max_pn == 0 {
        return Err(Error::InvalidParameter("max_pn must be positive"));
    }
    let tau = coeffs.tau();
    let mut any_regular = false;
    // an admissible T = p·(τ/N) with gcd(p, N) = 1 makes τ/N a period of the
    // coefficients, so Φ(0→T) = Φ(0→τ/N)^p
    let mut base: Vec<Option<Mat2>> = vec![None; max_pn as usize + 1];
    for (p, n) in candidates(max_pn) {
        let period = tau * p as f64 / n as f64;
        if !coefficients_fit(coeffs, period) {
            continue;
        }
        let step = match base[n as usize] {
            Some(m) => m,
            None => {
                let m = classical::fundamental_matrix(coeffs, 0.0, tau / n as f64, tol)?.entries;
                base[n as usize] = Some(m);
                m
            }
        };
        let phi = step.powi(p);
        let a = Mat2::IDENTITY.sub(&phi);
        if shooting_matrix_singular(&a, phi.spectral_norm(), tol) {
            continue;
        }
        any_regular = true;
        let rest = CanonicalState::new(0.0, 0.0)?;
        let r = classical::integrate(coeffs, rest, 0.0, period, tol, true)?.final_state();
        let inv = a.inverse().ok_or(Error::ResonantForce)?;
        let y0 = CanonicalState::from_array(inv.apply([r.x, r.pi]));
        if let Some(sol) = verify(coeffs, tol, y0, period, (p, n), a.condition())? {
            return Ok(sol);
        }
    }
    if any_regular {
        Err(Error::NoPeriodicSolutionFound { max_pn })
    } else {
        Err(Error::ResonantForce)
    }
}

fn verify(
    coeffs: &PeriodicCoefficients,
    tol: &ToleranceSettings,
    y0: CanonicalState,
    period: f64,
    (p, n): (u32, u32),
    condition: f64,
) -> Result<Option<ParticularSolution>> {
    // two periods, so the shift by T can be compared against fresh integration
    let traj = classical::integrate(coeffs, y0, 0.0, 2.0 * period, tol, true)?;
    let scale = 1.0 + y0.x.abs().max(y0.pi.abs());
    let gap = 1e2 * tol.ode_rel.max(1e-10) * scale * (1.0 + condition.min(1e6));
    let mut spread: f64 = 0.0;
    for j in 0..=32 {
        let t = period * j as f64 / 32.0;
        let (a, b) = (traj.state(t), traj.state(t + period));
        if (a.x - b.x).abs().max((a.pi - b.pi).abs()) > gap {
            return Ok(None);
        }
        let s = 0.37 + 0.41 * j as f64;
        for c in [coeffs.mass(s) - coeffs.mass(s + period), coeffs.freq_sq(s) - coeffs.freq_sq(s + period)]
            .into_iter()
            .chain([coeffs.force(s) - coeffs.force(s + period)])
        {
            if c.abs() > 1e-9 * scale {
                return Ok(None);
            }
        }
        spread = spread.max((a.x - y0.x).abs()).max((a.pi - y0.pi).abs());
    }
    let constant = spread <= 1e-9 * scale;
    let (p, n) = if constant { (1, 1) } else { (p, n) };
    Ok(Some(ParticularSolution {
        traj,
        mass: coeffs.mass_series().clone(),
        tau: coeffs.tau(),
        period: if constant { coeffs.tau() } else { period },
        p,
        n,
        y0,
        constant,
        condition,
    }))
}

fn lagrangian(xp: &ParticularSolution, coeffs: &PeriodicCoefficients, t: f64) -> f64 {
    let s = xp.state(t);
    let m = coeffs.mass(t);
    0.5 * (m * coeffs.freq_sq(t) * s.x * s.x - s.pi * s.pi / m)
}

/// `δ(t) = ∫₀ᵗ (M w² x_p² − M ẋ_p²)/2 dz` by adaptive quadrature.
pub fn action_delta(xp: &ParticularSolution, coeffs: &PeriodicCoefficients, t: f64, quad_abs: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let (a, b) = if t > 0.0 { (0.0, t) } else { (t, 0.0) };
    let breaks = xp.breakpoints(a, b);
    let (v, _) = quadrature::integrate_with_breaks(|z| lagrangian(xp, coeffs, z), a, b, &breaks, quad_abs);
    if t > 0.0 {
        v
    } else {
        -v
    }
}

/// The action integral with a per-step cumulative table over one period.
#[derive(Debug, Clone)]
pub struct ActionIntegral<'a> {
    xp: &'a ParticularSolution,
    coeffs: &'a PeriodicCoefficients,
    quad_abs: f64,
    table: Vec<(f64, f64)>,
    /// `δ(T_c)` for the common quasiperiod.
    pub value_at: f64,
    pub t_c: f64,
}

impl<'a> ActionIntegral<'a> {
    pub fn new(xp: &'a ParticularSolution, coeffs: &'a PeriodicCoefficients, t_c: f64, quad_abs: f64) -> Self {
        let period = xp.period();
        let mut knots = xp.breakpoints(0.0, period);
        knots.push(period);
        let per = quad_abs / knots.len() as f64;
        let mut table = Vec::with_capacity(knots.len() + 1);
        table.push((0.0, 0.0));
        let (mut left, mut acc) = (0.0, 0.0);
        for k in knots {
            acc += quadrature::integrate(|z| lagrangian(xp, coeffs, z), left, k, per).0;
            table.push((k, acc));
            left = k;
        }
        let mut out = ActionIntegral { xp, coeffs, quad_abs, table, value_at: 0.0, t_c };
        out.value_at = out.delta(t_c);
        out
    }

    pub fn particular(&self) -> &'a ParticularSolution {
        self.xp
    }

    /// `δ` over one full period of `x_p`.
    pub fn per_period(&self) -> f64 {
        self.table.last().map_or(0.0, |e| e.1)
    }

    pub fn delta(&self, t: f64) -> f64 {
        let period = self.xp.period();
        let k = (t / period).floor();
        let r = t - k * period;
        let i = self.table.partition_point(|e| e.0 <= r).saturating_sub(1);
        let (t_i, d_i) = self.table[i];
        let tail = if r > t_i {
            quadrature::integrate(|z| lagrangian(self.xp, self.coeffs, z), t_i, r, self.quad_abs).0
        } else {
            0.0
        };
        k * self.per_period() + d_i + tail
    }

    /// The integrand `dδ/dt`.
    pub fn rate(&self, t: f64) -> f64 {
        lagrangian(self.xp, self.coeffs, t)
    }
}

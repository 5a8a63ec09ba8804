//! Periodic coefficient functions `M(t)`, `w²(t)`, `F(t)` of the oscillator
//! Hamiltonian, stored as truncated Fourier series with a common period.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// `c₀ + Σₖ aₖ cos(2πkt/P) + Σₖ bₖ sin(2πkt/P)`, harmonics numbered from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    period: f64,
    constant: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl FourierSeries {
    pub fn new(period: f64, constant: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidParameter("series period must be positive and finite"));
        }
        if !constant.is_finite() || cos.iter().chain(sin.iter()).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("Fourier coefficient"));
        }
        Ok(Self { period, constant, cos, sin })
    }

    pub fn constant(period: f64, value: f64) -> Result<Self> {
        Self::new(period, value, Vec::new(), Vec::new())
    }

    /// Projects a smooth `period`-periodic function onto its first `harmonics`
    /// Fourier modes with the trapezoidal rule, which converges geometrically
    /// for analytic periodic integrands.
    pub fn from_periodic_fn(period: f64, harmonics: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = (8 * harmonics).max(512);
        let values: Vec<f64> = (0..samples).map(|j| f(period * j as f64 / samples as f64)).collect();
        let norm = 2.0 / samples as f64;
        let constant = values.iter().sum::<f64>() / samples as f64;
        let mut cos = Vec::with_capacity(harmonics);
        let mut sin = Vec::with_capacity(harmonics);
        for k in 1..=harmonics {
            let (mut a, mut b) = (0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                // reduce k·j mod samples so the angle stays in [0, 2π)
                let angle = 2.0 * PI * ((k * j) % samples) as f64 / samples as f64;
                a += v * angle.cos();
                b += v * angle.sin();
            }
            cos.push(a * norm);
            sin.push(b * norm);
        }
        Self::new(period, constant, cos, sin)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    pub fn is_constant(&self) -> bool {
        self.cos.iter().chain(self.sin.iter()).all(|&c| c == 0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.derivative(t, 0)
    }

    /// Termwise analytic derivative of the given order.
    pub fn derivative(&self, t: f64, order: u32) -> f64 {
        // Reduce t to a phase fraction first so that t and t + P give the same angle.
        let x = t / self.period;
        let frac = x - x.floor();
        let base = 2.0 * PI / self.period;
        let mut acc = if order == 0 { self.constant } else { 0.0 };
        let n = self.cos.len().max(self.sin.len());
        for k in 1..=n {
            let a = self.cos.get(k - 1).copied().unwrap_or(0.0);
            let b = self.sin.get(k - 1).copied().unwrap_or(0.0);
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let omega = base * k as f64;
            let (s, c) = (2.0 * PI * k as f64 * frac).sin_cos();
            // d/dt of (a cos + b sin) rotates (a, b) -> ω (b, −a)
            let (mut ca, mut cb) = (a, b);
            for _ in 0..order % 4 {
                let (na, nb) = (cb, -ca);
                ca = na;
                cb = nb;
            }
            acc += omega.powi(order as i32) * (ca * c + cb * s);
        }
        acc
    }

    /// Smallest period implied by the nonzero harmonics (`P / gcd(k)`), or
    /// `None` for a constant series.
    pub fn minimal_period(&self) -> Option<f64> {
        let mut g = 0usize;
        for (i, (&a, &b)) in pad(&self.cos, &self.sin).enumerate() {
            if a != 0.0 || b != 0.0 {
                g = gcd(g, i + 1);
            }
        }
        (g > 0).then(|| self.period / g as f64)
    }

    /// Number of periods of this series in `tau`, if it is a positive integer.
    fn harmonic_multiple(&self, tau: f64) -> Option<u64> {
        let k = (tau / self.period).round();
        if k < 1.0 {
            return None;
        }
        ((k * self.period - tau).abs() <= 4.0 * f64::EPSILON * tau).then_some(k as u64)
    }
}

fn pad<'a>(a: &'a [f64], b: &'a [f64]) -> impl Iterator<Item = (&'a f64, &'a f64)> {
    const ZERO: f64 = 0.0;
    let n = a.len().max(b.len());
    (0..n).map(move |i| (a.get(i).unwrap_or(&ZERO), b.get(i).unwrap_or(&ZERO)))
}

pub(crate) fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// The time-dependent coefficients the classical integrator consumes.
pub trait Coefficients {
    fn tau(&self) -> f64;
    fn mass(&self, t: f64) -> f64;
    fn mass_rate(&self, t: f64) -> f64;
    fn freq_sq(&self, t: f64) -> f64;
    /// Zero when the system is undriven.
    fn force(&self, t: f64) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicCoefficients {
    tau: f64,
    mass: FourierSeries,
    freq_sq: FourierSeries,
    force: Option<FourierSeries>,
    hbar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub n_grid: usize,
    pub mass_min: f64,
    pub mass_max: f64,
    pub freq_sq_min: f64,
    pub freq_sq_max: f64,
}

impl PeriodicCoefficients {
    /// Builds the bundle, checking that every series period is `τ/k`.
    pub fn new(
        tau: f64,
        mass: FourierSeries,
        freq_sq: FourierSeries,
        force: Option<FourierSeries>,
        hbar: f64,
    ) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidParameter("tau must be positive and finite"));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidParameter("hbar must be positive and finite"));
        }
        let named = [("mass", Some(&mass)), ("freq_sq", Some(&freq_sq)), ("force", force.as_ref())];
        for (name, series) in named {
            if let Some(s) = series {
                if s.harmonic_multiple(tau).is_none() {
                    return Err(Error::IncommensuratePeriod { series: name, period: s.period, tau });
                }
            }
        }
        Ok(Self { tau, mass, freq_sq, force, hbar })
    }

    /// Unit mass, `w² = a + 2q cos 2t`, `τ = π`.
    pub fn mathieu(a: f64, q: f64) -> Result<Self> {
        Self::new(
            PI,
            FourierSeries::constant(PI, 1.0)?,
            FourierSeries::new(PI, a, alloc::vec![2.0 * q], Vec::new())?,
            None,
            1.0,
        )
    }

    /// Unit mass with constant `w²`; `τ` is arbitrary for a constant system.
    pub fn constant_frequency(freq_sq: f64, tau: f64) -> Result<Self> {
        Self::new(tau, FourierSeries::constant(tau, 1.0)?, FourierSeries::constant(tau, freq_sq)?, None, 1.0)
    }

    pub fn with_force(mut self, force: Option<FourierSeries>) -> Result<Self> {
        if let Some(f) = &force {
            if f.harmonic_multiple(self.tau).is_none() {
                return Err(Error::IncommensuratePeriod { series: "force", period: f.period, tau: self.tau });
            }
        }
        self.force = force;
        Ok(self)
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidParameter("hbar must be positive and finite"));
        }
        self.hbar = hbar;
        Ok(self)
    }

    pub fn mass_series(&self) -> &FourierSeries {
        &self.mass
    }

    pub fn freq_sq_series(&self) -> &FourierSeries {
        &self.freq_sq
    }

    pub fn force_series(&self) -> Option<&FourierSeries> {
        self.force.as_ref()
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn is_driven(&self) -> bool {
        self.force.is_some()
    }

    /// Samples `M` and `w²` on `n_grid` uniform points of `[0, τ)`.
    pub fn validate(&self, n_grid: usize) -> Result<ValidationReport> {
        if n_grid < 16 {
            return Err(Error::InvalidParameter("validation grid needs at least 16 points"));
        }
        let mut report = ValidationReport {
            n_grid,
            mass_min: f64::INFINITY,
            mass_max: f64::NEG_INFINITY,
            freq_sq_min: f64::INFINITY,
            freq_sq_max: f64::NEG_INFINITY,
        };
        for j in 0..n_grid {
            let t = self.tau * j as f64 / n_grid as f64;
            let m = self.mass.eval(t);
            if !(m > 0.0) {
                return Err(Error::NonPositiveMass { t, value: m });
            }
            let w2 = self.freq_sq.eval(t);
            report.mass_min = report.mass_min.min(m);
            report.mass_max = report.mass_max.max(m);
            report.freq_sq_min = report.freq_sq_min.min(w2);
            report.freq_sq_max = report.freq_sq_max.max(w2);
        }
        Ok(report)
    }

    /// Second derivative of `√M` divided by `√M`, computed analytically:
    /// `(√M)''/√M = M''/(2M) − M'²/(4M²)`.
    pub fn sqrt_mass_curvature(&self, t: f64) -> f64 {
        let m = self.mass.eval(t);
        let dm = self.mass.derivative(t, 1);
        let ddm = self.mass.derivative(t, 2);
        ddm / (2.0 * m) - dm * dm / (4.0 * m * m)
    }

    /// The unit-mass Hill equation `ẍ + w₀²(t) x = 0` with
    /// `w₀² = w² − (√M)''/√M`, whose solutions map to this system's via `x/√M`.
    pub fn unit_mass_reduction(&self) -> UnitMassHill<'_> {
        UnitMassHill { parent: self }
    }
}

impl Coefficients for PeriodicCoefficients {
    fn tau(&self) -> f64 {
        self.tau
    }
    fn mass(&self, t: f64) -> f64 {
        self.mass.eval(t)
    }
    fn mass_rate(&self, t: f64) -> f64 {
        self.mass.derivative(t, 1)
    }
    fn freq_sq(&self, t: f64) -> f64 {
        self.freq_sq.eval(t)
    }
    fn force(&self, t: f64) -> f64 {
        self.force.as_ref().map_or(0.0, |f| f.eval(t))
    }
}

/// Homogeneous unit-mass system equivalent to a variable-mass one.
#[derive(Debug, Clone, Copy)]
pub struct UnitMassHill<'a> {
    parent: &'a PeriodicCoefficients,
}

impl UnitMassHill<'_> {
    pub fn parent(&self) -> &PeriodicCoefficients {
        self.parent
    }
}

impl Coefficients for UnitMassHill<'_> {
    fn tau(&self) -> f64 {
        self.parent.tau
    }
    fn mass(&self, _t: f64) -> f64 {
        1.0
    }
    fn mass_rate(&self, _t: f64) -> f64 {
        0.0
    }
    fn freq_sq(&self, t: f64) -> f64 {
        self.parent.freq_sq.eval(t) - self.parent.sqrt_mass_curvature(t)
    }
    fn force(&self, _t: f64) -> f64 {
        0.0
    }
}

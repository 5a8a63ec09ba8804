//! Exact wave functions built from a classical basis, with moment and
//! orthonormality diagnostics.
//!
//! With `ρ = √(u² + v²)`, `ξ = √(Ω/ℏ)(x − x_p)/ρ` and the unwrapped phase `φ`,
//!
//! ```text
//! ψₙ(x, t) = (Ω/ℏ)^{1/4} ρ^{-1/2} hₙ(ξ) e^{−i(n+½)φ} e^{i(M ẋ_p x + δ)/ℏ} e^{i M ρ̇ (x − x_p)²/(2ℏρ)}
//! ```
//!
//! where `hₙ` is the L²-normalised Hermite function, which already carries
//! the real Gaussian factor.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::driven::ActionIntegral;
use crate::error::{Error, Result};
use crate::floquet::ClassicalBasis;
use crate::model::Coefficients;
use crate::quadrature::simpson;
#[allow(unused_imports)]
use num_traits::Float;

const PI_QUARTER_ROOT_INV: f64 = 0.751_125_544_464_942_5;

/// Physicists' Hermite polynomial `Hₙ(ξ)` by upward recurrence.
pub fn hermite(n: u32, xi: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * xi);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = 2.0 * xi * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Hermite functions `h₀..=h_{n+1}` at `ξ`, each normalised so that
/// `∫ hₙ² dξ = 1`. The Gaussian is folded into the recurrence so large `n`
/// and `ξ` neither overflow nor lose precision.
fn hermite_functions(n: u32, xi: f64) -> Vec<f64> {
    let len = n as usize + 2;
    let mut h = Vec::with_capacity(len);
    h.push(PI_QUARTER_ROOT_INV * (-0.5 * xi * xi).exp());
    h.push(core::f64::consts::SQRT_2 * xi * h[0]);
    for k in 1..len - 1 {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * xi * h[k] - (kf / (kf + 1.0)).sqrt() * h[k - 1];
        h.push(next);
    }
    h
}

/// `hₙ(ξ)` and its first two derivatives.
fn hermite_function_jet(n: u32, xi: f64) -> (f64, f64, f64) {
    let h = hermite_functions(n, xi);
    let k = n as usize;
    let lower = if k == 0 { 0.0 } else { h[k - 1] };
    let d1 = (k as f64 / 2.0).sqrt() * lower - ((k as f64 + 1.0) / 2.0).sqrt() * h[k + 1];
    let d2 = (xi * xi - (2.0 * k as f64 + 1.0)) * h[k];
    (h[k], d1, d2)
}

/// Everything needed to evaluate one wave function.
#[derive(Debug, Clone, Copy)]
pub struct QuantumStateSpec<'a> {
    pub basis: &'a ClassicalBasis,
    /// Action integral of the particular solution when driven.
    pub drive: Option<&'a ActionIntegral<'a>>,
    pub hbar: f64,
    pub n: u32,
}

/// Time-dependent pieces shared by every `x` at a fixed `t`.
struct Frame {
    /// `√(Ω/ℏ)/ρ`, mapping `x − x_p` to `ξ`.
    k: f64,
    xp: f64,
    /// `M ẋ_p / ℏ`.
    kick: f64,
    /// `M ρ̇ /(2ℏρ)`.
    chirp: f64,
    /// Amplitude and global phase.
    prefactor: Complex64,
}

impl<'a> QuantumStateSpec<'a> {
    pub fn new(basis: &'a ClassicalBasis, drive: Option<&'a ActionIntegral<'a>>, hbar: f64, n: u32) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidParameter("hbar must be positive"));
        }
        if !(basis.omega() > 0.0) {
            return Err(Error::InvalidParameter("basis Wronskian must be positive"));
        }
        Ok(QuantumStateSpec { basis, drive, hbar, n })
    }

    /// Same basis, drive and ℏ with a different quantum number.
    pub fn with_n(&self, n: u32) -> Self {
        QuantumStateSpec { n, ..*self }
    }

    fn xp_state(&self, t: f64) -> (f64, f64, f64) {
        match self.drive {
            Some(d) => {
                let xp = d.particular();
                (xp.xp(t), xp.state(t).pi, d.delta(t))
            }
            None => (0.0, 0.0, 0.0),
        }
    }

    fn frame(&self, t: f64) -> Frame {
        let p = self.basis.point(t);
        let (rho, rho_dot) = (p.rho(), p.rho_dot());
        let omega = self.basis.omega();
        let (xp, pi_p, delta) = self.xp_state(t);
        let amp = (omega / self.hbar).powf(0.25) / rho.sqrt();
        let global = -(self.n as f64 + 0.5) * self.basis.phase(t) + delta / self.hbar;
        Frame {
            k: (omega / self.hbar).sqrt() / rho,
            xp,
            kick: pi_p / self.hbar,
            chirp: p.mass * rho_dot / (2.0 * self.hbar * rho),
            prefactor: Complex64::from_polar(amp, global),
        }
    }

    /// Standard deviation of `|ψ|²` in `x`, used to size grids.
    pub fn width(&self, t: f64) -> f64 {
        position_moments(self, t).1.sqrt()
    }
}

/// `ψₙ(x, t)`.
pub fn eval_psi(spec: &QuantumStateSpec<'_>, x: f64, t: f64) -> Complex64 {
    let f = spec.frame(t);
    psi_in_frame(spec.n, &f, x)
}

fn psi_in_frame(n: u32, f: &Frame, x: f64) -> Complex64 {
    let y = x - f.xp;
    let h = hermite_functions(n, f.k * y)[n as usize];
    f.prefactor * Complex64::from_polar(h, f.kick * x + f.chirp * y * y)
}

/// `(ψ, ∂ₓψ, ∂ₓₓψ)` at `x`.
fn psi_jet(n: u32, f: &Frame, x: f64) -> (Complex64, Complex64, Complex64) {
    let y = x - f.xp;
    let (h, h1, h2) = hermite_function_jet(n, f.k * y);
    let g = Complex64::from_polar(1.0, f.kick * x + f.chirp * y * y) * f.prefactor;
    let g1 = Complex64::new(0.0, f.kick + 2.0 * f.chirp * y);
    let g2 = Complex64::new(0.0, 2.0 * f.chirp);
    let psi = g * h;
    let dpsi = g * (g1 * h + f.k * h1);
    let d2psi = g * ((g2 + g1 * g1) * h + g1 * (2.0 * f.k * h1) + f.k * f.k * h2);
    (psi, dpsi, d2psi)
}

/// Mean `x_p(t)` (zero undriven) and variance `(n+½)ℏρ²/Ω`.
pub fn position_moments(spec: &QuantumStateSpec<'_>, t: f64) -> (f64, f64) {
    let mean = spec.xp_state(t).0;
    let rho = spec.basis.rho(t);
    (mean, (spec.n as f64 + 0.5) * spec.hbar * rho * rho / spec.basis.omega())
}

/// `(n+½)ℏ(Ω/ρ² + M²ρ̇²/Ω)`.
pub fn momentum_variance(spec: &QuantumStateSpec<'_>, t: f64) -> f64 {
    let p = spec.basis.point(t);
    let omega = spec.basis.omega();
    let (rho, rho_dot) = (p.rho(), p.rho_dot());
    (spec.n as f64 + 0.5) * spec.hbar * (omega / (rho * rho) + p.mass * p.mass * rho_dot * rho_dot / omega)
}

/// Uniform quadrature grid centred on the classical path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub center: f64,
    pub half_width: f64,
    pub n_points: usize,
}

impl SpatialGrid {
    /// Smallest allowed width factor `c`.
    pub const MIN_WIDTH_FACTOR: f64 = 8.0;
    pub const DEFAULT_POINTS: usize = 2049;

    pub fn new(center: f64, half_width: f64, n_points: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite() && center.is_finite()) {
            return Err(Error::InvalidParameter("grid half-width must be positive"));
        }
        if n_points < 3 || !(n_points - 1).is_power_of_two() {
            return Err(Error::InvalidParameter("grid point count must be 2^k + 1"));
        }
        Ok(SpatialGrid { center, half_width, n_points })
    }

    /// Grid at time `t` wide enough for every state up to `n_max`:
    /// `half_width = c·ρ·√(ℏ(2 n_max + 1)/Ω)`.
    pub fn for_states(spec: &QuantumStateSpec<'_>, t: f64, n_max: u32, c: f64, n_points: usize) -> Result<Self> {
        if !(c >= Self::MIN_WIDTH_FACTOR) {
            return Err(Error::InvalidParameter("grid width factor must be at least 8"));
        }
        let rho = spec.basis.rho(t);
        let hw = c * rho * (spec.hbar * (2.0 * n_max as f64 + 1.0) / spec.basis.omega()).sqrt();
        Self::new(spec.xp_state(t).0, hw, n_points)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n_points - 1) as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.spacing();
        (0..self.n_points).map(move |i| self.center - self.half_width + i as f64 * h)
    }

    /// Composite Simpson integral of samples taken at [`points`](Self::points).
    pub fn integrate<T>(&self, values: &[T]) -> T
    where
        T: Copy + core::ops::Add<Output = T> + core::ops::Mul<f64, Output = T>,
    {
        simpson(values, self.spacing())
    }

    /// Same centre and width with `2(n−1)+1` points.
    pub fn refined(&self) -> Self {
        SpatialGrid { n_points: 2 * (self.n_points - 1) + 1, ..*self }
    }
}

/// `ψ` sampled on the grid.
pub fn sample_psi(spec: &QuantumStateSpec<'_>, t: f64, grid: &SpatialGrid) -> Vec<Complex64> {
    let f = spec.frame(t);
    grid.points().map(|x| psi_in_frame(spec.n, &f, x)).collect()
}

/// `∫|ψ|² dx` on the grid.
pub fn norm_squared(spec: &QuantumStateSpec<'_>, t: f64, grid: &SpatialGrid) -> f64 {
    let vals: Vec<f64> = sample_psi(spec, t, grid).iter().map(|z| z.norm_sqr()).collect();
    grid.integrate(&vals)
}

/// `(⟨x⟩, ⟨(x − x_p)²⟩)` by quadrature, for comparison with [`position_moments`].
pub fn position_moments_quadrature(spec: &QuantumStateSpec<'_>, t: f64, grid: &SpatialGrid) -> (f64, f64) {
    let xp = spec.xp_state(t).0;
    let psi = sample_psi(spec, t, grid);
    let first: Vec<f64> = grid.points().zip(&psi).map(|(x, z)| x * z.norm_sqr()).collect();
    let second: Vec<f64> = grid.points().zip(&psi).map(|(x, z)| (x - xp).powi(2) * z.norm_sqr()).collect();
    (grid.integrate(&first), grid.integrate(&second))
}

/// `⟨p²⟩ − ⟨p⟩²` by quadrature with analytic `∂ₓψ`.
pub fn momentum_variance_quadrature(spec: &QuantumStateSpec<'_>, t: f64, grid: &SpatialGrid) -> f64 {
    let f = spec.frame(t);
    let (mut mean, mut sq) = (Vec::with_capacity(grid.n_points), Vec::with_capacity(grid.n_points));
    for x in grid.points() {
        let (psi, d, _) = psi_jet(spec.n, &f, x);
        mean.push((psi.conj() * d).im * spec.hbar);
        sq.push(d.norm_sqr() * spec.hbar * spec.hbar);
    }
    let m = grid.integrate(&mean);
    grid.integrate(&sq) - m * m
}

/// Gram matrix `⟨ψₘ|ψₙ⟩` over `specs` at time `t`.
///
/// Fails with [`Error::GridTooNarrow`] when a diagonal entry is off by more
/// than `1e-6`.
pub fn orthonormality_matrix(
    specs: &[QuantumStateSpec<'_>],
    t: f64,
    grid: &SpatialGrid,
) -> Result<Vec<Vec<Complex64>>> {
    let samples: Vec<Vec<Complex64>> = specs.iter().map(|s| sample_psi(s, t, grid)).collect();
    let mut gram = Vec::with_capacity(specs.len());
    for a in &samples {
        let row: Vec<Complex64> = samples
            .iter()
            .map(|b| {
                let prod: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x.conj() * y).collect();
                grid.integrate(&prod)
            })
            .collect();
        gram.push(row);
    }
    let deviation = gram.iter().enumerate().map(|(i, r)| (r[i] - 1.0).norm()).fold(0.0, f64::max);
    if deviation > 1e-6 {
        return Err(Error::GridTooNarrow { deviation });
    }
    Ok(gram)
}

/// Largest entry of `|G − I|`.
pub fn gram_deviation(gram: &[Vec<Complex64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, row) in gram.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((z - target).norm());
        }
    }
    worst
}

/// L² norm of `iℏ∂ₜψ − Hψ` on the grid, with `∂ₜ` by fourth-order central
/// differences of step `τ·1e-5` and `∂ₓ` analytic.
pub fn schrodinger_residual<C: Coefficients>(
    spec: &QuantumStateSpec<'_>,
    coeffs: &C,
    t: f64,
    grid: &SpatialGrid,
) -> f64 {
    let h = coeffs.tau() * 1e-5;
    let frames = [-2.0, -1.0, 1.0, 2.0].map(|k| spec.frame(t + k * h));
    let here = spec.frame(t);
    let (m, w2, force) = (coeffs.mass(t), coeffs.freq_sq(t), coeffs.force(t));
    let hbar = spec.hbar;
    let vals: Vec<f64> = grid
        .points()
        .map(|x| {
            let at = |i: usize| psi_in_frame(spec.n, &frames[i], x);
            let dt = (at(0) - at(1) * 8.0 + at(2) * 8.0 - at(3)) / (12.0 * h);
            let (psi, _, d2) = psi_jet(spec.n, &here, x);
            let h_psi = d2 * (-hbar * hbar / (2.0 * m)) + psi * (0.5 * m * w2 * x * x - x * force);
            (Complex64::new(0.0, hbar) * dt - h_psi).norm_sqr()
        })
        .collect();
    grid.integrate(&vals).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driven::{periodic_particular, DEFAULT_MAX_PN};
    use crate::floquet::{build_basis_direct, classify, monodromy};
    use crate::model::{FourierSeries, PeriodicCoefficients};
    use crate::tolerance::ToleranceSettings;
    use alloc::vec;
    use core::f64::consts::PI;

    fn basis_for(c: &PeriodicCoefficients) -> ClassicalBasis {
        let tol = ToleranceSettings::default();
        let m = monodromy(c, &tol).unwrap();
        let class = classify(&m, c.tau(), tol.boundary_eps);
        build_basis_direct(c, class, &tol).unwrap()
    }

    #[test]
    fn hermite_matches_explicit_polynomials() {
        let explicit = |n: u32, x: f64| match n {
            0 => 1.0,
            1 => 2.0 * x,
            2 => 4.0 * x * x - 2.0,
            3 => 8.0 * x.powi(3) - 12.0 * x,
            _ => 16.0 * x.powi(4) - 48.0 * x * x + 12.0,
        };
        for n in 0..=4 {
            for j in 0..10 {
                let x = -2.3 + 0.51 * j as f64;
                let (a, b) = (hermite(n, x), explicit(n, x));
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "H{n}({x})");
            }
        }
    }

    #[test]
    fn hermite_functions_agree_with_polynomials() {
        let mut fact = 1.0;
        for n in 0..=12u32 {
            if n > 0 {
                fact *= n as f64;
            }
            for x in [-1.7, 0.0, 0.4, 3.1] {
                let direct =
                    hermite(n, x) * (-0.5 * x * x).exp() * PI_QUARTER_ROOT_INV / (2f64.powi(n as i32) * fact).sqrt();
                let folded = hermite_functions(n, x)[n as usize];
                assert!((direct - folded).abs() < 1e-12 * (1.0 + direct.abs()));
            }
        }
        // far in the tail nothing overflows
        let h = hermite_functions(200, 30.0);
        assert!(h.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn sho_ground_state() {
        let c = PeriodicCoefficients::constant_frequency(1.0, 2.0 * PI).unwrap();
        let b = basis_for(&c);
        let s0 = QuantumStateSpec::new(&b, None, 1.0, 0).unwrap();
        assert!((eval_psi(&s0, 0.0, 0.0).norm() - PI.powf(-0.25)).abs() < 1e-10);
        assert!((eval_psi(&s0, 1.2, 0.0).norm() - PI.powf(-0.25) * (-0.72f64).exp()).abs() < 1e-10);
        assert!(eval_psi(&s0.with_n(1), 0.0, 0.3).norm() < 1e-14);
        let (mean, var) = position_moments(&s0, 0.7);
        assert!(mean.abs() < 1e-15 && (var - 0.5).abs() < 1e-9);
        assert!((position_moments(&s0.with_n(3), 0.0).1 - 3.5).abs() < 1e-9);
        assert!((momentum_variance(&s0, 2.0) - 0.5).abs() < 1e-9);
        let grid = SpatialGrid::for_states(&s0, 0.0, 0, 8.0, 1025).unwrap();
        assert!(schrodinger_residual(&s0, &c, 0.4, &grid) < 1e-6);
    }

    #[test]
    fn sho_gram_matrix() {
        let c = PeriodicCoefficients::constant_frequency(1.0, 2.0 * PI).unwrap();
        let b = basis_for(&c);
        let base = QuantumStateSpec::new(&b, None, 1.0, 0).unwrap();
        let specs: Vec<_> = (0..=4).map(|n| base.with_n(n)).collect();
        let grid = SpatialGrid::for_states(&base, 0.0, 4, 8.0, 2049).unwrap();
        let g = orthonormality_matrix(&specs, 0.0, &grid).unwrap();
        assert!(gram_deviation(&g) < 1e-8);
    }

    #[test]
    fn narrow_grid_is_reported() {
        let c = PeriodicCoefficients::constant_frequency(1.0, 2.0 * PI).unwrap();
        let b = basis_for(&c);
        let s = QuantumStateSpec::new(&b, None, 1.0, 2).unwrap();
        let grid = SpatialGrid::new(0.0, 1.0, 257).unwrap();
        assert!(matches!(orthonormality_matrix(&[s], 0.0, &grid), Err(Error::GridTooNarrow { .. })));
        assert!(SpatialGrid::new(0.0, 1.0, 100).is_err());
        assert!(SpatialGrid::for_states(&s, 0.0, 2, 4.0, 257).is_err());
    }

    #[test]
    fn mathieu_state_diagnostics() {
        let c = PeriodicCoefficients::mathieu(0.5, 0.1).unwrap();
        let b = basis_for(&c);
        let base = QuantumStateSpec::new(&b, None, 1.0, 0).unwrap();
        for n in 0..=6 {
            let s = base.with_n(n);
            for j in 0..8 {
                let t = 0.45 * j as f64;
                let grid = SpatialGrid::for_states(&s, t, n, 10.0, 2049).unwrap();
                assert!((norm_squared(&s, t, &grid) - 1.0).abs() < 1e-8, "n {n} t {t}");
                let (_, var_q) = position_moments_quadrature(&s, t, &grid);
                assert!((var_q - position_moments(&s, t).1).abs() < 1e-7);
                let dp = momentum_variance(&s, t);
                assert!((momentum_variance_quadrature(&s, t, &grid) - dp).abs() < 1e-7);
                assert!(position_moments(&s, t).1 * dp >= 0.25 * (1.0 - 1e-12));
            }
        }
        let grid = SpatialGrid::for_states(&base, 1.3, 2, 10.0, 2049).unwrap();
        let coarse = norm_squared(&base.with_n(2), 1.3, &grid);
        let fine = norm_squared(&base.with_n(2), 1.3, &grid.refined());
        assert!((coarse - 1.0).abs() < 1e-8 && (coarse - fine).abs() < 1e-10);

        let specs: Vec<_> = (0..=4).map(|n| base.with_n(n)).collect();
        let grid = SpatialGrid::for_states(&base, 0.7, 4, 10.0, 2049).unwrap();
        assert!(gram_deviation(&orthonormality_matrix(&specs, 0.7, &grid).unwrap()) < 1e-6);

        let s2 = base.with_n(2);
        let grid = SpatialGrid::for_states(&s2, 0.9, 2, 10.0, 2049).unwrap();
        let r = schrodinger_residual(&s2, &c, 0.9, &grid);
        assert!(r < 1e-5, "residual {r}");
    }

    #[test]
    fn driven_state_diagnostics() {
        let f = FourierSeries::new(PI, 0.0, vec![3.0], vec![]).unwrap();
        let c = PeriodicCoefficients::constant_frequency(1.0, PI).unwrap().with_force(Some(f)).unwrap();
        let b = basis_for(&c);
        let xp = periodic_particular(&c, &ToleranceSettings::default(), DEFAULT_MAX_PN).unwrap();
        let act = ActionIntegral::new(&xp, &c, 2.0 * PI, 1e-10);
        let base = QuantumStateSpec::new(&b, Some(&act), 1.0, 0).unwrap();
        let (mean, var) = position_moments(&base, 0.0);
        assert!((mean + 1.0).abs() < 1e-8 && (var - 0.5).abs() < 1e-9);
        let grid = SpatialGrid::for_states(&base, 0.0, 4, 10.0, 2049).unwrap();
        let specs: Vec<_> = (0..=4).map(|n| base.with_n(n)).collect();
        assert!(gram_deviation(&orthonormality_matrix(&specs, 0.0, &grid).unwrap()) < 1e-6);
        let (m_q, _) = position_moments_quadrature(&base.with_n(3), 0.0, &grid);
        assert!((m_q + 1.0).abs() < 1e-8);
        for t in [0.3, 1.7] {
            let grid = SpatialGrid::for_states(&base, t, 0, 10.0, 2049).unwrap();
            let r = schrodinger_residual(&base, &c, t, &grid);
            assert!(r < 1e-5, "residual {r} at {t}");
        }
    }
}

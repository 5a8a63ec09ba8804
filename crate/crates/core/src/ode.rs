//! Dormand–Prince 5(4) with step-size control and the continuous extension
//! of Hairer, Nørsett & Wanner (`dopri5`), over fixed-size states.

use alloc::vec::Vec;

use crate::error::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N];
}

impl<const N: usize, F> OdeSystem<N> for F
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N] {
        self(t, y)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rel: f64,
    pub abs: f64,
    pub max_steps: usize,
    /// Upper bound on |h|; infinite by default.
    pub max_step: f64,
}

impl StepControl {
    pub fn new(rel: f64, abs: f64) -> Self {
        Self { rel, abs, max_steps: 2_000_000, max_step: f64::INFINITY }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step with its interpolation coefficients.
#[derive(Debug, Clone)]
struct DenseStep<const N: usize> {
    t: f64,
    h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t) / self.h;
        let theta1 = 1.0 - theta;
        let r = &self.rcont;
        core::array::from_fn(|i| {
            r[0][i] + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])))
        })
    }
}

/// Solution with dense output on `[t_start, t_end]` (either orientation).
#[derive(Debug, Clone)]
pub struct DenseSolution<const N: usize> {
    t_start: f64,
    t_end: f64,
    y_start: [f64; N],
    y_end: [f64; N],
    steps: Vec<DenseStep<N>>,
    rejected: usize,
    error_estimate: f64,
}

impl<const N: usize> DenseSolution<N> {
    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn y_start(&self) -> [f64; N] {
        self.y_start
    }

    pub fn y_end(&self) -> [f64; N] {
        self.y_end
    }

    pub fn accepted_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    /// Sum over accepted steps of the embedded local error (max norm).
    pub fn error_estimate(&self) -> f64 {
        self.error_estimate
    }

    /// Step boundaries `t_start, t₁, …, t_end`.
    pub fn mesh(&self) -> Vec<f64> {
        let mut m: Vec<f64> = self.steps.iter().map(|s| s.t).collect();
        m.push(self.t_end);
        m
    }

    /// Dense-output value; `t` is clamped to the integration interval.
    pub fn eval(&self, t: f64) -> [f64; N] {
        if t == self.t_end {
            return self.y_end;
        }
        if t == self.t_start {
            return self.y_start;
        }
        let forward = self.t_end > self.t_start;
        let idx =
            if forward { self.steps.partition_point(|s| s.t <= t) } else { self.steps.partition_point(|s| s.t >= t) };
        let step = &self.steps[idx.saturating_sub(1).min(self.steps.len() - 1)];
        step.eval(t)
    }
}

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])]) -> [f64; N] {
    core::array::from_fn(|i| y[i] + terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn scaled_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], ctl: &StepControl) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let sk = ctl.abs + ctl.rel * y0[i].abs().max(y1[i].abs());
            (err[i] / sk).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

fn initial_step<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    dir: f64,
    ctl: &StepControl,
) -> f64 {
    let sk = |i: usize| ctl.abs + ctl.rel * y0[i].abs();
    let dnf: f64 = (0..N).map(|i| (f0[i] / sk(i)).powi(2)).sum::<f64>() / N as f64;
    let dny: f64 = (0..N).map(|i| (y0[i] / sk(i)).powi(2)).sum::<f64>() / N as f64;
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(ctl.max_step);
    let y1: [f64; N] = core::array::from_fn(|i| y0[i] + dir * h * f0[i]);
    let f1 = sys.rhs(t0 + dir * h, &y1);
    let der2: f64 = ((0..N).map(|i| ((f1[i] - f0[i]) / sk(i)).powi(2)).sum::<f64>() / N as f64).sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(1.0 / 5.0) };
    (100.0 * h).min(h1).min(ctl.max_step)
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (`t1 < t0` integrates backward).
pub fn integrate<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    ctl: &StepControl,
) -> Result<DenseSolution<N>> {
    if !t0.is_finite() || !t1.is_finite() || y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ODE initial data"));
    }
    let mut sol = DenseSolution {
        t_start: t0,
        t_end: t1,
        y_start: y0,
        y_end: y0,
        steps: Vec::new(),
        rejected: 0,
        error_estimate: 0.0,
    };
    if t1 == t0 {
        sol.steps.push(DenseStep { t: t0, h: 1.0, rcont: [y0, [0.0; N], [0.0; N], [0.0; N], [0.0; N]] });
        return Ok(sol);
    }
    let dir = if t1 > t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = sys.rhs(t, &y);
    let mut h = initial_step(sys, t0, &y0, &k1, dir, ctl).min(span);
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;

    loop {
        if sol.steps.len() >= ctl.max_steps {
            return Err(Error::TooManySteps { t });
        }
        if h < 1e-14 * t.abs().max(span) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let last = (t + dir * h - t1) * dir >= -1e-14 * span;
        if last {
            h = (t1 - t).abs();
        }
        let hs = dir * h;
        let k2 = sys.rhs(t + C2 * hs, &axpy(&y, &[(hs * A21, &k1)]));
        let k3 = sys.rhs(t + C3 * hs, &axpy(&y, &[(hs * A31, &k1), (hs * A32, &k2)]));
        let k4 = sys.rhs(t + C4 * hs, &axpy(&y, &[(hs * A41, &k1), (hs * A42, &k2), (hs * A43, &k3)]));
        let k5 = sys.rhs(t + C5 * hs, &axpy(&y, &[(hs * A51, &k1), (hs * A52, &k2), (hs * A53, &k3), (hs * A54, &k4)]));
        let y6 = axpy(&y, &[(hs * A61, &k1), (hs * A62, &k2), (hs * A63, &k3), (hs * A64, &k4), (hs * A65, &k5)]);
        let t_new = if last { t1 } else { t + hs };
        let k6 = sys.rhs(t + hs, &y6);
        let y_new = axpy(&y, &[(hs * A71, &k1), (hs * A73, &k3), (hs * A74, &k4), (hs * A75, &k5), (hs * A76, &k6)]);
        let k7 = sys.rhs(t_new, &y_new);
        let err: [f64; N] = core::array::from_fn(|i| {
            hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
        });
        if y_new.iter().any(|v| !v.is_finite()) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let err_norm = scaled_norm(&err, &y, &y_new, ctl);

        // Lund stabilisation as in dopri5 (beta = 0.04)
        let fac11 = err_norm.powf(0.2 - 0.04 * 0.75);
        let fac = (fac11 / fac_old.powf(0.04) / 0.9).clamp(0.1, 5.0);
        let h_new = h / fac;

        if err_norm <= 1.0 {
            fac_old = err_norm.max(1e-4);
            let ydiff: [f64; N] = core::array::from_fn(|i| y_new[i] - y[i]);
            let bspl: [f64; N] = core::array::from_fn(|i| hs * k1[i] - ydiff[i]);
            let rcont = [
                y,
                ydiff,
                bspl,
                core::array::from_fn(|i| ydiff[i] - hs * k7[i] - bspl[i]),
                core::array::from_fn(|i| {
                    hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                }),
            ];
            sol.steps.push(DenseStep { t, h: hs, rcont });
            sol.error_estimate += err.iter().fold(0.0, |m: f64, e| m.max(e.abs()));
            t = t_new;
            y = y_new;
            k1 = k7;
            if last {
                sol.y_end = y;
                return Ok(sol);
            }
            h = if last_rejected { h_new.min(h) } else { h_new };
            h = h.min(ctl.max_step);
            last_rejected = false;
        } else {
            sol.rejected += 1;
            h /= (fac11 / 0.9).min(10.0);
            last_rejected = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth_and_dense_output() {
        let sys = |_t: f64, y: &[f64; 1]| [y[0]];
        let sol = integrate(&sys, 0.0, [1.0], 2.0, &StepControl::new(1e-11, 1e-13)).unwrap();
        assert!((sol.y_end()[0] - 2f64.exp()).abs() < 1e-9);
        for j in 0..=40 {
            let t = 0.05 * j as f64;
            assert!((sol.eval(t)[0] - t.exp()).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn backward_integration() {
        let sys = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let sol = integrate(&sys, 1.0, [1.0f64.cos(), -1.0f64.sin()], -2.0, &StepControl::new(1e-11, 1e-13)).unwrap();
        let end = sol.y_end();
        assert!((end[0] - (-2.0f64).cos()).abs() < 1e-9);
        let mid = sol.eval(0.3);
        assert!((mid[0] - 0.3f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn dense_output_matches_polynomial_exactly() {
        // the continuous extension is exact for cubic solutions
        let sys = |t: f64, _y: &[f64; 1]| [3.0 * t * t - 2.0 * t];
        let sol = integrate(&sys, 0.0, [0.0], 3.0, &StepControl::new(1e-8, 1e-10)).unwrap();
        for j in 0..30 {
            let t = 0.1 * j as f64;
            assert!((sol.eval(t)[0] - (t * t * t - t * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn blowup_reports_error() {
        let sys = |_t: f64, y: &[f64; 1]| [y[0] * y[0]];
        let res = integrate(&sys, 0.0, [1.0], 2.0, &StepControl::new(1e-10, 1e-12));
        assert!(matches!(res, Err(Error::StepSizeUnderflow { .. }) | Err(Error::TooManySteps { .. })));
    }
}

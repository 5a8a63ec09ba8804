//! The full analyze pipeline: classify, build the basis and particular
//! solution, compute phases and diagnostics, and decide the verdict.

use floquet_phase_core::driven::{periodic_particular, ActionIntegral, ParticularSolution};
use floquet_phase_core::floquet::{self, build_basis_direct, build_basis_via_transform, growth_table};
use floquet_phase_core::phases::{self, berry_verdict, phase_report, wrap_phase, GridSettings, PhaseInputs};
use floquet_phase_core::quantum::{self, QuantumStateSpec, SpatialGrid};
use floquet_phase_core::{
    ClassicalBasis, Coefficients, Error, PeriodicCoefficients, Representation, StabilityClass, ToleranceSettings,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Pipeline, RunConfig};

/// Largest power of the monodromy in the growth table.
pub const GROWTH_K_MAX: u32 = 64;

#[derive(Debug, Clone, Serialize)]
pub struct ValidationSummary {
    pub n_grid: usize,
    pub mass_min: f64,
    pub mass_max: f64,
    pub freq_sq_min: f64,
    pub freq_sq_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonodromySummary {
    pub entries: [[f64; 2]; 2],
    pub trace: f64,
    pub det: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassSummary {
    pub label: &'static str,
    /// Principal characteristic exponent for generic stable systems.
    pub alpha: Option<f64>,
    pub lyapunov_rate: Option<f64>,
    pub period_multiple: Option<u8>,
}

impl From<StabilityClass> for ClassSummary {
    fn from(c: StabilityClass) -> Self {
        let (alpha, lyapunov_rate, period_multiple) = match c {
            StabilityClass::StableGeneric { alpha } => (Some(alpha), None, None),
            StabilityClass::BoundaryPeriodic { period_multiple, .. } => (None, None, Some(period_multiple)),
            StabilityClass::Unstable { lyapunov_rate } => (None, Some(lyapunov_rate), None),
        };
        ClassSummary { label: c.label(), alpha, lyapunov_rate, period_multiple }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthRow {
    pub k: u32,
    pub norm: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BasisSummary {
    pub pipeline: &'static str,
    pub representation: &'static str,
    pub omega: f64,
    pub omega_drift: f64,
    /// Exponent on the branch matching the measured phase advance.
    pub alpha_branch: Option<f64>,
    pub winding: i64,
    pub tau_prime_basis: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParticularSummary {
    pub status: &'static str,
    pub message: Option<String>,
    pub p: Option<u32>,
    pub n: Option<u32>,
    pub period: Option<f64>,
    pub constant: Option<bool>,
    pub condition: Option<f64>,
    pub near_resonant: Option<bool>,
    pub residual: Option<f64>,
    pub x0: Option<f64>,
    pub pi0: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuasiperiodSummary {
    pub value: f64,
    pub label: f64,
    pub agrees: bool,
}

/// Per-level phases. Each of `chi`, `delta`, `gamma` equals
/// `*_homogeneous + *_action / hbar`.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseRow {
    pub n: u32,
    pub tau_prime: f64,
    pub chi: f64,
    pub delta_dyn: f64,
    pub gamma: f64,
    pub chi_mod_2pi: f64,
    pub delta_dyn_mod_2pi: f64,
    pub gamma_mod_2pi: f64,
    pub chi_homogeneous: f64,
    pub chi_action: f64,
    pub delta_homogeneous: f64,
    pub delta_action: f64,
    pub gamma_homogeneous: f64,
    pub gamma_action: f64,
    pub chi_quadrature: f64,
    pub chi_cross_check: f64,
    pub delta_forms_gap: f64,
    pub closure_residual: f64,
    pub quasi_residual: f64,
    pub closure_ok: bool,
    pub quasi_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub n: u32,
    pub t: f64,
    pub mean_x: f64,
    pub var_x: f64,
    pub var_x_quadrature: f64,
    pub var_p: f64,
    pub uncertainty_product: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantumDiagnostics {
    pub gram_time: f64,
    pub gram_deviation: f64,
    pub max_norm_deviation: f64,
    pub max_variance_gap: f64,
    /// `min Δx²Δp² / ℏ²`, at least 1/4.
    pub min_uncertainty_ratio: f64,
    pub schrodinger_time: f64,
    pub schrodinger_residual: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictSummary {
    pub defined: bool,
    pub reason: Option<String>,
    pub evidence: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub tau: f64,
    pub hbar: f64,
    pub validation: ValidationSummary,
    pub monodromy: MonodromySummary,
    pub classification: ClassSummary,
    pub growth: Vec<GrowthRow>,
    pub basis: Option<BasisSummary>,
    pub particular: Option<ParticularSummary>,
    pub quasiperiod: Option<QuasiperiodSummary>,
    pub phases: Vec<PhaseRow>,
    pub moments: Vec<MomentRow>,
    pub diagnostics: Option<QuantumDiagnostics>,
    pub verdict: VerdictSummary,
}

impl Analysis {
    /// 0 when the Berry phase is defined, 2 when it is not.
    pub fn exit_code(&self) -> i32 {
        if self.verdict.defined {
            0
        } else {
            2
        }
    }
}

/// Everything computed for a stable run, kept for table export.
pub struct StableState {
    pub coeffs: PeriodicCoefficients,
    pub basis: ClassicalBasis,
    pub particular: Option<ParticularSolution>,
    pub tau_prime: f64,
}

fn particular_summary(res: &Result<ParticularSolution, Error>, coeffs: &PeriodicCoefficients) -> ParticularSummary {
    match res {
        Ok(xp) => {
            let (p, n) = xp.minimal_period();
            let y0 = xp.y0();
            ParticularSummary {
                status: "periodic",
                message: None,
                p: Some(p),
                n: Some(n),
                period: Some(xp.period()),
                constant: Some(xp.is_constant()),
                condition: Some(xp.condition()),
                near_resonant: Some(xp.near_resonant()),
                residual: Some(xp.residual(coeffs, 64)),
                x0: Some(y0.x),
                pi0: Some(y0.pi),
            }
        }
        Err(e) => ParticularSummary {
            status: match e {
                Error::ResonantForce => "resonant",
                Error::NoPeriodicSolutionFound { .. } => "not-found",
                _ => "failed",
            },
            message: Some(e.to_string()),
            p: None,
            n: None,
            period: None,
            constant: None,
            condition: None,
            near_resonant: None,
            residual: None,
            x0: None,
            pi0: None,
        },
    }
}

/// Runs the analysis; operational failures are errors, an undefined Berry
/// phase is a normal outcome reported in the verdict.
pub fn analyze(cfg: &RunConfig) -> anyhow::Result<(Analysis, Option<StableState>)> {
    let coeffs = cfg.coefficients()?;
    let tol = cfg.tolerances();
    let report = coeffs.validate(256)?;
    let validation = ValidationSummary {
        n_grid: report.n_grid,
        mass_min: report.mass_min,
        mass_max: report.mass_max,
        freq_sq_min: report.freq_sq_min,
        freq_sq_max: report.freq_sq_max,
    };

    let tau = coeffs.tau();
    let (class, basis) = match cfg.pipeline {
        Pipeline::Direct => {
            let m = floquet::monodromy(&coeffs, &tol)?;
            let class = floquet::classify(&m, tau, tol.boundary_eps);
            let basis = class.is_stable().then(|| build_basis_direct(&coeffs, class, &tol)).transpose()?;
            (class, basis)
        }
        Pipeline::Transform => match build_basis_via_transform(&coeffs, &tol) {
            Ok((class, basis)) => (class, Some(basis)),
            Err(Error::UnstableSystem) => {
                let m = floquet::monodromy(&coeffs.unit_mass_reduction(), &tol)?;
                (floquet::classify(&m, tau, tol.boundary_eps), None)
            }
            Err(e) => return Err(e.into()),
        },
    };
    // the physical monodromy is reported in either pipeline
    let m = floquet::monodromy(&coeffs, &tol)?;
    let monodromy = MonodromySummary { entries: m.entries.0, trace: m.trace(), det: m.det() };
    let growth = if class.is_stable() {
        Vec::new()
    } else {
        growth_table(&m, tau, GROWTH_K_MAX).into_iter().map(|(k, norm, bound)| GrowthRow { k, norm, bound }).collect()
    };

    let particular_res = coeffs.is_driven().then(|| periodic_particular(&coeffs, &tol, cfg.max_pn));
    if let Some(Err(e)) = &particular_res {
        if !matches!(e, Error::ResonantForce | Error::NoPeriodicSolutionFound { .. }) {
            return Err(e.clone().into());
        }
    }
    let particular = particular_res.as_ref().map(|r| particular_summary(r, &coeffs));
    let verdict = berry_verdict(&class, particular_res.as_ref().map(|r| r.as_ref()));

    let mut evidence = Vec::new();
    if !class.is_stable() {
        evidence.push(format!("monodromy trace {:.17e} (|tr| vs 2 at eps {:e})", m.trace(), tol.boundary_eps));
        if let Some(last) = growth.last() {
            evidence.push(format!("||Phi^{}|| = {:.6e} >= {:.6e}", last.k, last.norm, last.bound));
        }
    }
    if let Some(Err(e)) = &particular_res {
        evidence.push(e.to_string());
    }

    let mut analysis = Analysis {
        tau,
        hbar: coeffs.hbar(),
        validation,
        monodromy,
        classification: class.into(),
        growth,
        basis: None,
        particular,
        quasiperiod: None,
        phases: Vec::new(),
        moments: Vec::new(),
        diagnostics: None,
        verdict: VerdictSummary {
            defined: verdict.is_defined(),
            reason: verdict.reason().map(str::to_string),
            evidence,
        },
    };

    let (Some(basis), true) = (basis, verdict.is_defined()) else {
        return Ok((analysis, None));
    };
    let xp = particular_res.and_then(Result::ok);
    let q = phases::quasiperiod(&basis, xp.as_ref());
    let tau_prime = q.value;
    analysis.basis = Some(BasisSummary {
        pipeline: match cfg.pipeline {
            Pipeline::Direct => "direct",
            Pipeline::Transform => "transform",
        },
        representation: match basis.representation() {
            Representation::EqualAB => "equal-amplitude",
            Representation::PeriodicBoundary => "periodic",
        },
        omega: basis.omega(),
        omega_drift: basis.omega_drift(256),
        alpha_branch: basis.alpha(),
        winding: floquet::winding_number(&basis, 0.0, basis.tau_prime()),
        tau_prime_basis: basis.tau_prime(),
    });
    analysis.quasiperiod = Some(QuasiperiodSummary { value: q.value, label: q.label, agrees: q.agrees() });
    if !q.agrees() {
        analysis
            .verdict
            .evidence
            .push(format!("verified quasiperiod {} differs from the N·tau label {}", q.value, q.label));
    }

    let state = StableState { coeffs, basis, particular: xp, tau_prime };
    compute_quantum(cfg, &tol, &state, &mut analysis)?;
    Ok((analysis, Some(state)))
}

fn compute_quantum(
    cfg: &RunConfig,
    tol: &ToleranceSettings,
    state: &StableState,
    analysis: &mut Analysis,
) -> anyhow::Result<()> {
    let StableState { coeffs, basis, particular, tau_prime } = state;
    let tau_prime = *tau_prime;
    let action = particular.as_ref().map(|xp| ActionIntegral::new(xp, coeffs, tau_prime, tol.quad_abs));
    let inputs = PhaseInputs { basis, coeffs, drive: action.as_ref(), hbar: coeffs.hbar(), quad_abs: tol.quad_abs };
    let grid = GridSettings { width_factor: cfg.grid.width_factor, n_points: cfg.grid.points };

    let reports: Vec<_> = cfg.n.par_iter().map(|&n| phase_report(&inputs, n, tau_prime, grid)).collect();
    for r in reports {
        let r = r?;
        analysis.phases.push(PhaseRow {
            n: r.n,
            tau_prime: r.tau_prime,
            chi: r.chi_value(),
            delta_dyn: r.delta_value(),
            gamma: r.gamma_value(),
            chi_mod_2pi: wrap_phase(r.chi_value()),
            delta_dyn_mod_2pi: wrap_phase(r.delta_value()),
            gamma_mod_2pi: wrap_phase(r.gamma_value()),
            chi_homogeneous: r.chi.homogeneous,
            chi_action: r.chi.action,
            delta_homogeneous: r.delta_dyn.homogeneous,
            delta_action: r.delta_dyn.action,
            gamma_homogeneous: r.gamma.homogeneous,
            gamma_action: r.gamma.action,
            chi_quadrature: r.chi_quadrature,
            chi_cross_check: r.chi_cross_check(),
            delta_forms_gap: r.delta_forms_gap(),
            closure_residual: r.closure_residual,
            quasi_residual: r.quasi_residual,
            closure_ok: r.closure_ok(),
            quasi_ok: r.quasi_ok(tol.quasi_tol),
        });
    }

    let base = QuantumStateSpec::new(basis, action.as_ref(), coeffs.hbar(), 0)?;
    let samples = cfg.grid.moment_samples;
    let rows: Vec<Vec<MomentRow>> = cfg
        .n
        .par_iter()
        .map(|&n| -> anyhow::Result<Vec<MomentRow>> {
            let spec = base.with_n(n);
            (0..samples)
                .map(|j| {
                    let t = tau_prime * j as f64 / samples as f64;
                    let g = SpatialGrid::for_states(&spec, t, n, cfg.grid.width_factor, cfg.grid.points)?;
                    let (mean_x, var_x) = quantum::position_moments(&spec, t);
                    let var_p = quantum::momentum_variance(&spec, t);
                    Ok(MomentRow {
                        n,
                        t,
                        mean_x,
                        var_x,
                        var_x_quadrature: quantum::position_moments_quadrature(&spec, t, &g).1,
                        var_p,
                        uncertainty_product: var_x * var_p,
                        norm: quantum::norm_squared(&spec, t, &g),
                    })
                })
                .collect()
        })
        .collect::<anyhow::Result<_>>()?;
    analysis.moments = rows.into_iter().flatten().collect();

    let n_max = cfg.n_max();
    let gram_time = 0.37 * tau_prime;
    let specs: Vec<_> = (0..=n_max.min(8)).map(|n| base.with_n(n)).collect();
    let g = SpatialGrid::for_states(&base, gram_time, n_max.min(8), cfg.grid.width_factor, cfg.grid.points)?;
    let gram = quantum::orthonormality_matrix(&specs, gram_time, &g)?;
    let schrodinger_time = tau_prime / 3.0;
    let schrodinger_residual = cfg
        .n
        .par_iter()
        .map(|&n| -> anyhow::Result<(u32, f64)> {
            let spec = base.with_n(n);
            let g = SpatialGrid::for_states(&spec, schrodinger_time, n, cfg.grid.width_factor, cfg.grid.points)?;
            Ok((n, quantum::schrodinger_residual(&spec, coeffs, schrodinger_time, &g)))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let hbar = coeffs.hbar();
    analysis.diagnostics = Some(QuantumDiagnostics {
        gram_time,
        gram_deviation: quantum::gram_deviation(&gram),
        max_norm_deviation: analysis.moments.iter().map(|m| (m.norm - 1.0).abs()).fold(0.0, f64::max),
        max_variance_gap: analysis.moments.iter().map(|m| (m.var_x - m.var_x_quadrature).abs()).fold(0.0, f64::max),
        min_uncertainty_ratio: analysis
            .moments
            .iter()
            .map(|m| m.uncertainty_product / (hbar * hbar))
            .fold(f64::INFINITY, f64::min),
        schrodinger_time,
        schrodinger_residual,
    });
    Ok(())
}

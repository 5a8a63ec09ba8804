//! Two-parameter stability scans written as CSV.

use std::io;

use floquet_phase_core::floquet::{classify, monodromy};
use floquet_phase_core::{Coefficients, StabilityClass};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::report::format_f64;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub param1: f64,
    pub param2: f64,
    /// `None` when the grid point could not be evaluated.
    pub trace: Option<f64>,
    pub class: String,
    /// Exponent for stable points (`arccos(tr/2)/τ`), growth rate otherwise.
    pub alpha_or_rate: Option<f64>,
}

fn evaluate(cfg: &RunConfig, a: f64, b: f64) -> ScanRow {
    let tol = cfg.tolerances();
    let outcome = cfg.scan_coefficients(a, b).and_then(|c| {
        c.validate(64)?;
        let m = monodromy(&c, &tol)?;
        Ok((m.trace(), classify(&m, c.tau(), tol.boundary_eps)))
    });
    match outcome {
        Ok((trace, class)) => {
            let tau = cfg.tau();
            let value = match class {
                StabilityClass::StableGeneric { alpha } => alpha,
                StabilityClass::Unstable { lyapunov_rate } => lyapunov_rate,
                StabilityClass::BoundaryPeriodic { .. } => (trace / 2.0).clamp(-1.0, 1.0).acos() / tau,
            };
            ScanRow {
                param1: a,
                param2: b,
                trace: Some(trace),
                class: class.label().into(),
                alpha_or_rate: Some(value),
            }
        }
        Err(_) => ScanRow { param1: a, param2: b, trace: None, class: "invalid".into(), alpha_or_rate: None },
    }
}

/// Evaluates every grid point in parallel; rows come back in grid order
/// (`param1` outer, `param2` inner) regardless of scheduling.
pub fn run_scan(cfg: &RunConfig) -> anyhow::Result<Vec<ScanRow>> {
    let scan = cfg.scan.as_ref().ok_or_else(|| anyhow::anyhow!("configuration has no [scan] block"))?;
    let (xs, ys) = (scan.param1.values(), scan.param2.values());
    let points: Vec<(f64, f64)> = xs.iter().flat_map(|&a| ys.iter().map(move |&b| (a, b))).collect();
    Ok(points.par_iter().map(|&(a, b)| evaluate(cfg, a, b)).collect())
}

pub fn write_csv<W: io::Write>(cfg: &RunConfig, rows: &[ScanRow], out: W) -> anyhow::Result<()> {
    let scan = cfg.scan.as_ref().ok_or_else(|| anyhow::anyhow!("configuration has no [scan] block"))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record([scan.param1.name.as_str(), scan.param2.name.as_str(), "trace", "class", "alpha_or_rate"])?;
    let field = |v: Option<f64>| v.map_or_else(String::new, format_f64);
    for r in rows {
        w.write_record([
            format_f64(r.param1),
            format_f64(r.param2),
            field(r.trace),
            r.class.clone(),
            field(r.alpha_or_rate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

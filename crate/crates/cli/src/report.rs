//! JSON and plain-text renderings of an [`Analysis`], and ψ table export.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use anyhow::Context;
use floquet_phase_core::driven::ActionIntegral;
use floquet_phase_core::quantum::{sample_psi, QuantumStateSpec, SpatialGrid};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::analysis::{Analysis, StableState};

/// Pretty JSON whose floats always carry 17 significant digits; non-finite
/// values become `null`.
struct FullPrecision<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{}", format_f64(value))
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate! {
        begin_array(), end_array(), begin_array_value(first: bool), end_array_value(),
        begin_object(), end_object(), begin_object_key(first: bool), end_object_key(),
        begin_object_value(), end_object_value(),
    }
}

/// `d.dddddddddddddddde±XX`: 17 significant digits, locale-free.
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

pub fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out)?)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), format_f64)
}

pub fn to_text(a: &Analysis) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "tau            {}", format_f64(a.tau));
    let _ = writeln!(s, "hbar           {}", format_f64(a.hbar));
    let v = &a.validation;
    let _ =
        writeln!(s, "mass range     [{}, {}] on {} points", format_f64(v.mass_min), format_f64(v.mass_max), v.n_grid);
    let _ = writeln!(s, "w^2 range      [{}, {}]", format_f64(v.freq_sq_min), format_f64(v.freq_sq_max));
    let m = &a.monodromy;
    let _ = writeln!(
        s,
        "monodromy      [[{}, {}], [{}, {}]]",
        format_f64(m.entries[0][0]),
        format_f64(m.entries[0][1]),
        format_f64(m.entries[1][0]),
        format_f64(m.entries[1][1])
    );
    let _ = writeln!(s, "trace          {}", format_f64(m.trace));
    let _ = writeln!(s, "det            {}", format_f64(m.det));
    let c = &a.classification;
    let _ = writeln!(s, "class          {}", c.label);
    if let Some(alpha) = c.alpha {
        let _ = writeln!(s, "alpha          {}", format_f64(alpha));
    }
    if let Some(rate) = c.lyapunov_rate {
        let _ = writeln!(s, "growth rate    {}", format_f64(rate));
    }
    if let Some(k) = c.period_multiple {
        let _ = writeln!(s, "period mult.   {k}");
    }
    if !a.growth.is_empty() {
        let _ = writeln!(s, "\n{:>4}  {:>24}  {:>24}", "k", "||Phi^k||", "exp(0.9 rate k tau)");
        for g in &a.growth {
            let _ = writeln!(s, "{:>4}  {:>24}  {:>24}", g.k, format_f64(g.norm), format_f64(g.bound));
        }
    }
    if let Some(p) = &a.particular {
        let _ = writeln!(s, "\nparticular     {}", p.status);
        if let (Some(pp), Some(nn)) = (p.p, p.n) {
            let _ = writeln!(s, "  period       ({pp}/{nn}) tau = {}", opt(p.period));
            let _ = writeln!(s, "  condition    {}", opt(p.condition));
            let _ = writeln!(s, "  residual     {}", opt(p.residual));
            if p.near_resonant == Some(true) {
                let _ = writeln!(s, "  warning      near resonance");
            }
        }
        if let Some(msg) = &p.message {
            let _ = writeln!(s, "  {msg}");
        }
    }
    if let Some(b) = &a.basis {
        let _ = writeln!(s, "\nbasis          {} ({} pipeline)", b.representation, b.pipeline);
        let _ = writeln!(s, "  Omega        {}", format_f64(b.omega));
        let _ = writeln!(s, "  Omega drift  {}", format_f64(b.omega_drift));
        let _ = writeln!(s, "  alpha branch {}", opt(b.alpha_branch));
        let _ = writeln!(s, "  winding      {}", b.winding);
    }
    if let Some(q) = &a.quasiperiod {
        let _ = writeln!(s, "tau'           {}", format_f64(q.value));
        if !q.agrees {
            let _ = writeln!(s, "  note         N tau label is {}", format_f64(q.label));
        }
    }
    if !a.phases.is_empty() {
        let _ = writeln!(
            s,
            "\n{:>3}  {:>24}  {:>24}  {:>24}  {:>10}  {:>10}",
            "n", "chi", "delta", "gamma", "closure", "quasi"
        );
        for p in &a.phases {
            let _ = writeln!(
                s,
                "{:>3}  {:>24}  {:>24}  {:>24}  {:>10.3e}  {:>10.3e}",
                p.n,
                format_f64(p.chi),
                format_f64(p.delta_dyn),
                format_f64(p.gamma),
                p.closure_residual,
                p.quasi_residual
            );
        }
        let _ = writeln!(s, "{:>3}  {:>24}  {:>24}  {:>24}", "", "(mod 2pi)", "", "");
        for p in &a.phases {
            let _ = writeln!(
                s,
                "{:>3}  {:>24}  {:>24}  {:>24}",
                p.n,
                format_f64(p.chi_mod_2pi),
                format_f64(p.delta_dyn_mod_2pi),
                format_f64(p.gamma_mod_2pi)
            );
        }
    }
    if !a.moments.is_empty() {
        let _ = writeln!(s, "\n{:>3}  {:>12}  {:>14}  {:>14}  {:>14}  {:>14}", "n", "t", "<x>", "dx^2", "dp^2", "norm");
        for m in &a.moments {
            let _ = writeln!(
                s,
                "{:>3}  {:>12.6}  {:>14.6e}  {:>14.6e}  {:>14.6e}  {:>14.10}",
                m.n, m.t, m.mean_x, m.var_x, m.var_p, m.norm
            );
        }
    }
    if let Some(d) = &a.diagnostics {
        let _ = writeln!(s, "\ngram deviation       {:.3e} (t = {:.6})", d.gram_deviation, d.gram_time);
        let _ = writeln!(s, "norm deviation       {:.3e}", d.max_norm_deviation);
        let _ = writeln!(s, "variance gap         {:.3e}", d.max_variance_gap);
        let _ = writeln!(s, "min dx^2 dp^2/hbar^2 {:.6}", d.min_uncertainty_ratio);
        for (n, r) in &d.schrodinger_residual {
            let _ = writeln!(s, "schrodinger n={n:<3}    {r:.3e} (t = {:.6})", d.schrodinger_time);
        }
    }
    let vd = &a.verdict;
    let _ = writeln!(s);
    match &vd.reason {
        None => {
            let _ = writeln!(s, "Berry phase defined");
        }
        Some(r) => {
            let _ = writeln!(s, "Berry phase undefined: {r}");
        }
    }
    for e in &vd.evidence {
        let _ = writeln!(s, "  evidence: {e}");
    }
    s
}

/// Writes `psi_n<k>.csv` (columns `t,x,re,im`) into `dir` for each level,
/// sampling `times` instants over one quasiperiod.
pub fn write_psi_tables(
    dir: &Path,
    state: &StableState,
    levels: &[u32],
    times: usize,
    points: usize,
    width_factor: f64,
    quad_abs: f64,
) -> anyhow::Result<Vec<std::path::PathBuf>> {
    let action = state.particular.as_ref().map(|xp| ActionIntegral::new(xp, &state.coeffs, state.tau_prime, quad_abs));
    let base = QuantumStateSpec::new(&state.basis, action.as_ref(), state.coeffs.hbar(), 0)?;
    let mut written = Vec::new();
    for &n in levels {
        let spec = base.with_n(n);
        let path = dir.join(format!("psi_n{n}.csv"));
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        w.write_record(["t", "x", "re", "im"])?;
        let span = if times > 1 { (times - 1) as f64 } else { 1.0 };
        for j in 0..times {
            let t = state.tau_prime * j as f64 / span;
            let grid = SpatialGrid::for_states(&spec, t, n, width_factor, points)?;
            for (x, z) in grid.points().zip(sample_psi(&spec, t, &grid)) {
                w.write_record([format_f64(t), format_f64(x), format_f64(z.re), format_f64(z.im)])?;
            }
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

//! TOML run configuration.
//!
//! ```toml
//! tau = "pi"            # number, or a multiple of pi such as "2pi", "pi/2"
//! hbar = 1.0
//! n = [0, 1, 2]
//!
//! [mass]                # omitted => M = 1
//! constant = 1.0
//!
//! [freq_sq]
//! period = "pi"         # defaults to tau
//! constant = 0.5
//! cos = [0.2]
//!
//! [force]               # optional
//! cos = [3.0]
//! ```

use std::path::Path;

use anyhow::{bail, Context};
use floquet_phase_core::{FourierSeries, PeriodicCoefficients, ToleranceSettings};
use serde::Deserialize;

/// Highest quantum number accepted in `n`.
pub const MAX_N: u32 = 32;

/// A real number written either literally or as a multiple of π.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Real {
    Number(f64),
    Expr(PiExpr),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "String")]
pub struct PiExpr(f64);

impl TryFrom<String> for PiExpr {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        parse_pi(&s).map(PiExpr).ok_or_else(|| format!("cannot read '{s}' as a number or multiple of pi"))
    }
}

/// Parses `pi`, `2pi`, `2*pi`, `pi/2`, `3pi/4`, `-pi`.
fn parse_pi(s: &str) -> Option<f64> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    let (num, den) = match compact.split_once('/') {
        Some((a, b)) => (a.to_string(), b.parse::<f64>().ok()?),
        None => (compact, 1.0),
    };
    let coeff = num.strip_suffix("pi")?.trim_end_matches('*');
    let k = match coeff {
        "" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().ok()?,
    };
    Some(k * std::f64::consts::PI / den)
}

impl Real {
    pub fn get(self) -> f64 {
        match self {
            Real::Number(x) => x,
            Real::Expr(PiExpr(x)) => x,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub period: Option<Real>,
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl SeriesConfig {
    fn build(&self, tau: f64, what: &str) -> anyhow::Result<FourierSeries> {
        let period = self.period.map_or(tau, Real::get);
        FourierSeries::new(period, self.constant, self.cos.clone(), self.sin.clone())
            .with_context(|| format!("invalid [{what}] series"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    pub ode_rel: f64,
    pub ode_abs: f64,
    pub quad_abs: f64,
    pub boundary_eps: f64,
    pub quasi_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        let t = ToleranceSettings::default();
        ToleranceConfig {
            ode_rel: t.ode_rel,
            ode_abs: t.ode_abs,
            quad_abs: t.quad_abs,
            boundary_eps: t.boundary_eps,
            quasi_tol: t.quasi_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Half-width in units of the widest requested state's spread (at least 8).
    pub width_factor: f64,
    /// Must be `2^k + 1`.
    pub points: usize,
    /// Times per quasiperiod at which moments and norms are tabulated.
    pub moment_samples: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { width_factor: 10.0, points: 2049, moment_samples: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Write `psi_n<k>.csv` tables next to the report.
    pub psi_tables: bool,
    pub psi_times: usize,
    /// Must be `2^k + 1`.
    pub psi_points: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { psi_tables: false, psi_times: 9, psi_points: 257 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    /// Integrate the variable-mass equation directly.
    #[default]
    Direct,
    /// Solve the unit-mass Hill equation and rescale by `1/√M`.
    Transform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Mass,
    FreqSq,
    Force,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Term {
    Constant,
    Cos,
    Sin,
}

/// One scanned parameter: `value·scale` replaces a single Fourier coefficient.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanParam {
    pub name: String,
    #[serde(default = "default_target")]
    pub target: Target,
    pub term: Term,
    /// 1-based harmonic index for `cos`/`sin`.
    #[serde(default = "one")]
    pub harmonic: usize,
    #[serde(default = "unit")]
    pub scale: f64,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

fn default_target() -> Target {
    Target::FreqSq
}
fn one() -> usize {
    1
}
fn unit() -> f64 {
    1.0
}

impl ScanParam {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let n = (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.start + (self.stop - self.start) * i as f64 / n).collect()
    }

    fn check(&self) -> anyhow::Result<()> {
        if self.steps == 0 {
            bail!("scan parameter '{}' needs at least one step", self.name);
        }
        if self.term != Term::Constant && self.harmonic == 0 {
            bail!("scan parameter '{}': harmonic index is 1-based", self.name);
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.scale.is_finite()) {
            bail!("scan parameter '{}' has non-finite bounds", self.name);
        }
        Ok(())
    }

    fn apply(&self, series: &mut SeriesConfig, value: f64) {
        let v = value * self.scale;
        let slot = match self.term {
            Term::Constant => {
                series.constant = v;
                return;
            }
            Term::Cos => &mut series.cos,
            Term::Sin => &mut series.sin,
        };
        if slot.len() < self.harmonic {
            slot.resize(self.harmonic, 0.0);
        }
        slot[self.harmonic - 1] = v;
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub param1: ScanParam,
    pub param2: ScanParam,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub tau: Real,
    #[serde(default = "unit")]
    pub hbar: f64,
    #[serde(default = "ground")]
    pub n: Vec<u32>,
    #[serde(default)]
    pub pipeline: Pipeline,
    #[serde(default = "max_pn")]
    pub max_pn: u32,
    pub mass: Option<SeriesConfig>,
    pub freq_sq: SeriesConfig,
    pub force: Option<SeriesConfig>,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub scan: Option<ScanConfig>,
}

fn ground() -> Vec<u32> {
    vec![0]
}
fn max_pn() -> u32 {
    floquet_phase_core::driven::DEFAULT_MAX_PN
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("malformed configuration")?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    fn check(&self) -> anyhow::Result<()> {
        if self.n.is_empty() {
            bail!("n must list at least one quantum number");
        }
        if let Some(&bad) = self.n.iter().find(|&&n| n > MAX_N) {
            bail!("quantum number {bad} exceeds the supported maximum {MAX_N}");
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            bail!("hbar must be positive");
        }
        if !(self.grid.width_factor >= 8.0) {
            bail!("grid.width_factor must be at least 8");
        }
        for (name, p) in [("grid.points", self.grid.points), ("output.psi_points", self.output.psi_points)] {
            if p < 3 || !(p - 1).is_power_of_two() {
                bail!("{name} must be 2^k + 1");
            }
        }
        if self.grid.moment_samples == 0 || self.output.psi_times == 0 {
            bail!("sample counts must be positive");
        }
        if let Some(scan) = &self.scan {
            scan.param1.check()?;
            scan.param2.check()?;
        }
        self.tolerances().validate()?;
        self.coefficients()?;
        Ok(())
    }

    pub fn tau(&self) -> f64 {
        self.tau.get()
    }

    pub fn n_max(&self) -> u32 {
        self.n.iter().copied().max().unwrap_or(0)
    }

    pub fn tolerances(&self) -> ToleranceSettings {
        let t = self.tolerances;
        ToleranceSettings {
            ode_rel: t.ode_rel,
            ode_abs: t.ode_abs,
            quad_abs: t.quad_abs,
            boundary_eps: t.boundary_eps,
            quasi_tol: t.quasi_tol,
        }
    }

    pub fn coefficients(&self) -> anyhow::Result<PeriodicCoefficients> {
        build_coefficients(self.tau(), self.hbar, self.mass.as_ref(), &self.freq_sq, self.force.as_ref())
    }

    /// Coefficients with the scan parameters set to `(a, b)`.
    pub fn scan_coefficients(&self, a: f64, b: f64) -> anyhow::Result<PeriodicCoefficients> {
        let scan = self.scan.as_ref().context("configuration has no [scan] block")?;
        let mut mass = self.mass.clone();
        let mut freq_sq = self.freq_sq.clone();
        let mut force = self.force.clone();
        for (param, value) in [(&scan.param1, a), (&scan.param2, b)] {
            let series = match param.target {
                Target::Mass => mass.get_or_insert_with(|| SeriesConfig { constant: 1.0, ..Default::default() }),
                Target::FreqSq => &mut freq_sq,
                Target::Force => force.get_or_insert_with(SeriesConfig::default),
            };
            param.apply(series, value);
        }
        build_coefficients(self.tau(), self.hbar, mass.as_ref(), &freq_sq, force.as_ref())
    }
}

fn build_coefficients(
    tau: f64,
    hbar: f64,
    mass: Option<&SeriesConfig>,
    freq_sq: &SeriesConfig,
    force: Option<&SeriesConfig>,
) -> anyhow::Result<PeriodicCoefficients> {
    let mass = match mass {
        Some(m) => m.build(tau, "mass")?,
        None => FourierSeries::constant(tau, 1.0)?,
    };
    let freq_sq = freq_sq.build(tau, "freq_sq")?;
    let force = force.map(|f| f.build(tau, "force")).transpose()?;
    Ok(PeriodicCoefficients::new(tau, mass, freq_sq, force, hbar)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pi_expressions() {
        assert_eq!(parse_pi("pi"), Some(PI));
        assert_eq!(parse_pi("2pi"), Some(2.0 * PI));
        assert_eq!(parse_pi("2 * pi"), Some(2.0 * PI));
        assert_eq!(parse_pi("3pi/4"), Some(3.0 * PI / 4.0));
        assert_eq!(parse_pi("-pi"), Some(-PI));
        assert_eq!(parse_pi("tau"), None);
    }

    #[test]
    fn minimal_config() {
        let cfg = RunConfig::from_toml("tau = \"2pi\"\n[freq_sq]\nconstant = 1.0\n").unwrap();
        assert_eq!(cfg.n, vec![0]);
        let c = cfg.coefficients().unwrap();
        assert!(!c.is_driven());
        assert_eq!(cfg.tolerances(), ToleranceSettings::default());
    }

    #[test]
    fn rejects_bad_values() {
        let base = "tau = 3.0\n[freq_sq]\nconstant = 1.0\n";
        assert!(RunConfig::from_toml(&format!("n = [40]\n{base}")).is_err());
        assert!(RunConfig::from_toml(&format!("n = []\n{base}")).is_err());
        assert!(RunConfig::from_toml(&format!("hbar = -1.0\n{base}")).is_err());
        assert!(RunConfig::from_toml(&format!("{base}[grid]\npoints = 1000\n")).is_err());
        assert!(RunConfig::from_toml(&format!("{base}[tolerances]\node_rel = 1e-3\n")).is_err());
        assert!(RunConfig::from_toml("tau = 3.0\n[freq_sq]\nconstant = 1.0\nperiod = 2.0\n").is_err());
        assert!(RunConfig::from_toml("tau = 3.0\nunknown = 1\n[freq_sq]\n").is_err());
    }

    #[test]
    fn scan_injects_mathieu_parameters() {
        let text = r#"
            tau = "pi"
            [freq_sq]
            [scan]
            param1 = { name = "a", term = "constant", start = 0.0, stop = 4.0, steps = 41 }
            param2 = { name = "q", term = "cos", harmonic = 1, scale = 2.0, start = 0.0, stop = 1.0, steps = 41 }
        "#;
        let cfg = RunConfig::from_toml(text).unwrap();
        let scan = cfg.scan.as_ref().unwrap();
        assert_eq!(scan.param1.values()[10], 1.0);
        let c = cfg.scan_coefficients(0.5, 0.1).unwrap();
        assert_eq!(c, PeriodicCoefficients::mathieu(0.5, 0.1).unwrap());
    }
}

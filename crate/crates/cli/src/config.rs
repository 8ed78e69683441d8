//! Run configuration: a TOML file with one section per concern, or a
//! previously written `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use ep_transonic::portrait::PortraitSpec;
use ep_transonic::{DopingProfile, Execution, FlowParams, Options};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    #[serde(rename = "J", alias = "j", default = "one")]
    pub current: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(rename = "L", alias = "l", default = "one")]
    pub length: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self { current: 1.0, tau: Some(1.0), alpha: None, length: 1.0 }
    }
}

impl ParamsSection {
    pub fn build(&self) -> Result<FlowParams, CliError> {
        let params = match (self.tau, self.alpha) {
            (Some(_), Some(_)) => return Err(CliError::config("[params] takes exactly one of tau and alpha, got both")),
            (None, None) => return Err(CliError::config("[params] needs one of tau and alpha")),
            (Some(tau), None) => FlowParams::with_tau(self.current, tau, self.length),
            (None, Some(alpha)) => FlowParams::new(self.current, alpha, self.length),
        };
        params.map_err(|e| CliError::config(e.to_string()))
    }
}

/// Doping `b(x)`: a constant, inline knots, or a two-column CSV `x,b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DopingSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for DopingSection {
    fn default() -> Self {
        Self { b0: Some(0.5), knots: None, values: None, file: None }
    }
}

impl DopingSection {
    /// Replace a `file` reference by its knots, relative to `base`.
    fn inline(&mut self, base: &Path) -> Result<(), CliError> {
        let Some(file) = self.file.take() else { return Ok(()) };
        let path = if file.is_absolute() { file } else { base.join(file) };
        if !path.is_file() {
            return Err(CliError::config(format!("doping file {} does not exist", path.display())));
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(&path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let (mut knots, mut values) = (Vec::new(), Vec::new());
        for record in reader.deserialize::<(f64, f64)>() {
            let (x, b) = record.map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            knots.push(x);
            values.push(b);
        }
        if self.knots.is_some() || self.values.is_some() {
            return Err(CliError::config("[doping] file cannot be combined with knots/values"));
        }
        self.knots = Some(knots);
        self.values = Some(values);
        Ok(())
    }

    pub fn build(&self) -> Result<DopingProfile, CliError> {
        let profile = match (self.b0, &self.knots, &self.values, &self.file) {
            (Some(b0), None, None, None) => DopingProfile::constant(b0),
            (None, Some(k), Some(v), None) => DopingProfile::tabulated(k.clone(), v.clone()),
            _ => return Err(CliError::config("[doping] needs either b0, or knots with values, or file")),
        };
        profile.map_err(|e| CliError::config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothSection {
    /// Supersonic `n(0)`.
    pub n0: f64,
    /// Optional `E(0)`; must lie on the trajectory.
    #[serde(alias = "E0", skip_serializing_if = "Option::is_none")]
    pub e0: Option<f64>,
    /// Target `n(L)`; switches to the boundary-pair seed with `n_l = n0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_r: Option<f64>,
}

impl Default for SmoothSection {
    fn default() -> Self {
        Self { n0: 0.7, e0: None, n_r: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShockSection {
    pub n_l: f64,
    #[serde(alias = "E_l")]
    pub e_l: f64,
    /// Subsonic boundary density. When absent, `𝔐(x_target)` is used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_r: Option<f64>,
    /// Shock position defining `n_r` when `n_r` is absent; defaults to `0.3 L`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_target: Option<f64>,
    /// Fit bracket; defaults to `[0.1 L, min(0.9 L, 0.65 reach)]` where the
    /// reach is where the supersonic branch meets the sonic line.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[f64; 2]>,
    /// Added to every post-shock density (diagnostics only).
    pub jump_offset: f64,
    pub table_size: usize,
}

impl Default for ShockSection {
    fn default() -> Self {
        Self { n_l: 0.5, e_l: 0.5, n_r: None, x_target: None, bracket: None, jump_offset: 0.0, table_size: 10 }
    }
}

impl ShockSection {
    pub fn bracket(&self, length: f64) -> (f64, f64) {
        self.bracket.map_or((0.1 * length, 0.9 * length), |[lo, hi]| (lo, hi))
    }

    pub fn x_target(&self, length: f64) -> f64 {
        self.x_target.unwrap_or(0.3 * length)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Shock,
    Smooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub kind: SweepKind,
    /// Shock sweep: amplitudes of `b = b0 + ε·delta_b`.
    pub eps_list: Vec<f64>,
    pub delta_b: f64,
    /// Half-width of the perturbed fit brackets; defaults to `0.1 L`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    /// Smooth sweep: target `δ₀` values and the `(Δb, Δn₀)` direction.
    pub deltas: Vec<f64>,
    pub direction: [f64; 2],
    /// Ratio spread above which a sweep is flagged.
    pub spread_limit: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            kind: SweepKind::Shock,
            eps_list: vec![1e-2, 1e-3, 1e-4],
            delta_b: 1.0,
            window: None,
            deltas: vec![1e-2, 1e-3, 1e-4],
            direction: [1.0, 1.0],
            spread_limit: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesSection {
    /// Normalization `U_x(x₀) = γ·U(x₀)` scale.
    pub gamma: f64,
}

impl Default for ModesSection {
    fn default() -> Self {
        Self { gamma: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<Format>>,
    pub tol_scale: f64,
    pub parallel: bool,
    /// Rows in solution CSVs.
    pub samples: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { out_dir: None, formats: None, tol_scale: 1.0, parallel: true, samples: 1000 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsSection,
    pub doping: DopingSection,
    pub portrait: PortraitSpec,
    pub smooth: SmoothSection,
    pub shock: ShockSection,
    pub sweep: SweepSection,
    pub modes: ModesSection,
    pub tolerances: Options,
    pub run: RunSection,
}

/// Manifest wrapper, accepted back as a config.
#[derive(Debug, Deserialize)]
struct ManifestIn {
    schema_version: u32,
    config: RunConfig,
}

fn one() -> f64 {
    1.0
}

impl RunConfig {
    /// Read TOML, or JSON when the file is a manifest.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg = if text.trim_start().starts_with('{') {
            let m: ManifestIn =
                serde_json::from_str(text).map_err(|e| CliError::config(format!("manifest: {e}")))?;
            if m.schema_version != crate::report::SCHEMA_VERSION {
                return Err(CliError::config(format!("unsupported manifest schema_version {}", m.schema_version)));
            }
            m.config
        } else {
            toml::from_str::<RunConfig>(text).map_err(|e| CliError::config(e.to_string()))?
        };
        cfg.doping.inline(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that need no solve.
    pub fn validate(&self) -> Result<(), CliError> {
        let p = self.params.build()?;
        self.doping.build()?;
        let bad = |msg: String| Err(CliError::config(msg));
        if !(self.run.tol_scale > 0.0 && self.run.tol_scale.is_finite()) {
            return bad(format!("tol_scale must be positive, got {}", self.run.tol_scale));
        }
        let (lo, hi) = self.shock.bracket(p.length());
        if !(0.0 <= lo && lo < hi && hi <= p.length()) {
            return bad(format!("[shock] bracket [{lo}, {hi}] must lie inside [0, L]"));
        }
        if self.sweep.eps_list.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return bad("[sweep] eps_list entries must be finite and >= 0".into());
        }
        if self.sweep.deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return bad("[sweep] deltas must be finite and >= 0".into());
        }
        if self.shock.table_size < 2 {
            return bad("[shock] table_size must be at least 2".into());
        }
        Ok(())
    }

    pub fn flow_params(&self) -> FlowParams {
        self.params.build().expect("validated")
    }

    pub fn doping_profile(&self) -> DopingProfile {
        self.doping.build().expect("validated")
    }

    pub fn options(&self) -> Options {
        let exec = if self.run.parallel { Execution::Parallel } else { Execution::Sequential };
        self.tolerances.with_tol_scale(self.run.tol_scale).with_execution(exec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        RunConfig::parse(text, Path::new("."))
    }

    #[test]
    fn empty_config_uses_defaults() {
        let c = parse("").unwrap();
        assert_eq!(c.flow_params().alpha(), 1.0);
        assert_eq!(c.doping_profile().as_constant(), Some(0.5));
    }

    #[test]
    fn tau_and_alpha_are_exclusive() {
        let err = parse("[params]\nJ = 1\ntau = 1\nalpha = 1\n").unwrap_err();
        assert!(err.to_string().contains("exactly one"));
        assert!(parse("[params]\nJ = 1\n").is_err());
        let c = parse("[params]\nalpha = 0\nL = 3\n").unwrap();
        assert_eq!(c.flow_params().alpha(), 0.0);
        assert_eq!(c.flow_params().length(), 3.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse("[shock]\nnr = 1.5\n").is_err());
        assert!(parse("[tolerances]\nrtoll = 1e-8\n").is_err());
        assert!(parse("[tolerances]\nrtol = 1e-8\n").is_ok());
    }

    #[test]
    fn missing_doping_file_is_a_config_error() {
        let err = parse("[doping]\nfile = \"no/such.csv\"\n").unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn tol_scale_applies_to_integrator_tolerances() {
        let c = parse("[run]\ntol_scale = 10\nparallel = false\n").unwrap();
        let o = c.options();
        assert_eq!(o.rtol, 1e-9);
        assert_eq!(o.execution, Execution::Sequential);
    }
}

//! JSON run configuration and its translation into validated core types.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sv_malliavin::density::{Estimator, DENSITY_ESTIMATOR};
use sv_malliavin::ensemble::{EnsembleConfig, ModelSpec};
use sv_malliavin::model::{reference_vol_family, validate_cir, validate_ou, CirParams, Contract, OuParams, ValidationError};
use sv_malliavin::pipeline::GridSpec;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ou,
    Cir,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub alpha: Option<f64>,
    pub b: Option<f64>,
    pub k: f64,
    pub y0: Option<f64>,
    pub z0: Option<f64>,
    pub s0: f64,
    pub r: f64,
    #[serde(default)]
    pub mu: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolFamily {
    pub name: String,
    pub c: f64,
    pub m: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "T")]
    pub maturity: f64,
    pub n_steps: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub n_paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub antithetic: bool,
    /// Quantile for weight winsorization; absent or null disables it.
    #[serde(default)]
    pub winsorize: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractSection {
    pub strike: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum XGrid {
    Keyword(String),
    Explicit { min: f64, max: f64, points: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    /// Enforce the density hypotheses at validation.
    #[serde(default = "yes")]
    pub mode: bool,
    #[serde(default = "auto")]
    pub x_grid: XGrid,
    #[serde(default)]
    pub estimator: Option<String>,
}

fn yes() -> bool {
    true
}

fn auto() -> XGrid {
    XGrid::Keyword("auto".into())
}

impl Default for DensitySection {
    fn default() -> Self {
        Self { mode: true, x_grid: auto(), estimator: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "dot")]
    pub directory: PathBuf,
    #[serde(default)]
    pub format: Format,
}

fn dot() -> PathBuf {
    PathBuf::from(".")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: dot(), format: Format::Csv }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    pub params: Params,
    #[serde(default)]
    pub vol_family: Option<VolFamily>,
    pub grid: GridSection,
    pub ensemble: EnsembleSection,
    pub contract: ContractSection,
    #[serde(default)]
    pub density: DensitySection,
    #[serde(default)]
    pub output: OutputSection,
}

/// A configuration that passed validation.
#[derive(Debug, Clone)]
pub struct Run {
    pub model: ModelSpec,
    pub contract: Contract,
    pub ensemble: EnsembleConfig,
    pub x_grid: GridSpec,
    pub estimator: Estimator,
    pub output: OutputSection,
}

pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
    serde_json::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))
}

fn required(v: Option<f64>, name: &str, model: &str) -> Result<f64, ConfigError> {
    v.ok_or_else(|| ConfigError::Parse(format!("params.{name} is required for model {model}")))
}

fn forbidden(v: Option<f64>, name: &str, model: &str) -> Result<(), ConfigError> {
    match v {
        Some(_) => Err(ConfigError::Parse(format!("params.{name} does not apply to model {model}"))),
        None => Ok(()),
    }
}

impl RunConfig {
    /// Validates the model. `density_mode` overrides `density.mode` when set.
    pub fn build(&self, density_mode: Option<bool>) -> Result<Run, ConfigError> {
        let density_mode = density_mode.unwrap_or(self.density.mode);
        let p = &self.params;
        let model = match self.model {
            ModelKind::Ou => {
                forbidden(p.b, "b", "ou")?;
                forbidden(p.z0, "z0", "ou")?;
                let vf = self.vol_family.as_ref().ok_or_else(|| ConfigError::Parse("vol_family is required for model ou".into()))?;
                if vf.name != "reference" {
                    return Err(ConfigError::Parse(format!("unknown vol_family {:?}; only \"reference\" is built in", vf.name)));
                }
                let vol = reference_vol_family(vf.c, vf.m)?;
                let params = OuParams {
                    alpha: required(p.alpha, "alpha", "ou")?,
                    k: p.k,
                    y0: required(p.y0, "y0", "ou")?,
                    s0: p.s0,
                    r: p.r,
                    mu: p.mu,
                    maturity: self.grid.maturity,
                };
                ModelSpec::Ou(validate_ou(params, vol, density_mode)?)
            }
            ModelKind::Cir => {
                forbidden(p.alpha, "alpha", "cir")?;
                forbidden(p.y0, "y0", "cir")?;
                if self.vol_family.is_some() {
                    return Err(ConfigError::Parse("vol_family does not apply to model cir".into()));
                }
                let params = CirParams {
                    b: required(p.b, "b", "cir")?,
                    k: p.k,
                    z0: required(p.z0, "z0", "cir")?,
                    s0: p.s0,
                    r: p.r,
                    mu: p.mu,
                    maturity: self.grid.maturity,
                };
                ModelSpec::Cir(validate_cir(params, density_mode)?)
            }
        };
        let contract = Contract::new(self.contract.strike)?;
        if self.grid.n_steps == 0 {
            return Err(ConfigError::Parse("grid.n_steps must be positive".into()));
        }
        if self.ensemble.n_paths == 0 {
            return Err(ConfigError::Parse("ensemble.n_paths must be positive".into()));
        }
        if let Some(q) = self.ensemble.winsorize {
            if !(0.0..0.5).contains(&q) {
                return Err(ConfigError::Parse(format!("ensemble.winsorize must lie in [0, 0.5), got {q}")));
            }
        }
        let x_grid = match &self.density.x_grid {
            XGrid::Keyword(k) if k == "auto" => GridSpec::Auto,
            XGrid::Keyword(k) => return Err(ConfigError::Parse(format!("density.x_grid: expected \"auto\" or an object, got {k:?}"))),
            XGrid::Explicit { min, max, points } => {
                if !(min < max) || *points < 2 {
                    return Err(ConfigError::Parse("density.x_grid needs min < max and points >= 2".into()));
                }
                GridSpec::Explicit { min: *min, max: *max, points: *points }
            }
        };
        let estimator = match self.density.estimator.as_deref() {
            None => DENSITY_ESTIMATOR,
            Some("plain") => Estimator::Plain,
            Some("centered") => Estimator::Centered,
            Some(other) => return Err(ConfigError::Parse(format!("density.estimator: unknown {other:?}"))),
        };
        let ensemble = EnsembleConfig {
            n_paths: self.ensemble.n_paths,
            n_steps: self.grid.n_steps,
            seed: self.ensemble.seed,
            antithetic: self.ensemble.antithetic,
            winsorize: self.ensemble.winsorize,
            compute_weights: true,
            sample_asset: true,
        };
        Ok(Run { model, contract, ensemble, x_grid, estimator, output: self.output.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OU: &str = r#"{
        "model": "ou",
        "params": {"alpha": 1.0, "k": 0.5, "y0": 0.0, "s0": 100.0, "r": 0.05},
        "vol_family": {"name": "reference", "c": 0.1, "m": 0.1},
        "grid": {"T": 1.0, "n_steps": 64},
        "ensemble": {"n_paths": 100, "seed": 7},
        "contract": {"strike": 100.0}
    }"#;

    fn parse(s: &str) -> RunConfig {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn minimal_ou_config_builds_with_defaults() {
        let run = parse(OU).build(None).unwrap();
        assert!(run.model.density_ready());
        assert_eq!(run.x_grid, GridSpec::Auto);
        assert_eq!(run.estimator, DENSITY_ESTIMATOR);
        assert_eq!(run.output.format, Format::Csv);
        assert_eq!(run.ensemble.seed, 7);
    }

    #[test]
    fn explicit_grid_and_estimator() {
        let s = OU.replace(
            r#""contract": {"strike": 100.0}"#,
            r#""contract": {"strike": 100.0}, "density": {"x_grid": {"min": 0.01, "max": 0.1, "points": 41}, "estimator": "centered"}"#,
        );
        let run = parse(&s).build(None).unwrap();
        assert_eq!(run.x_grid, GridSpec::Explicit { min: 0.01, max: 0.1, points: 41 });
        assert_eq!(run.estimator, Estimator::Centered);
    }

    #[test]
    fn missing_alpha_is_a_parse_error() {
        let s = OU.replace(r#""alpha": 1.0, "#, "");
        assert!(matches!(parse(&s).build(None), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn cir_density_condition_is_a_validation_error() {
        let s = r#"{
            "model": "cir",
            "params": {"b": 1.0, "k": 0.5, "z0": 1.0, "s0": 100.0, "r": 0.05},
            "grid": {"T": 1.0, "n_steps": 64},
            "ensemble": {"n_paths": 100},
            "contract": {"strike": 100.0}
        }"#;
        match parse(s).build(None) {
            Err(ConfigError::Validation(e)) => assert!(e.has("E_DENSITY_CONDITION")),
            other => panic!("{other:?}"),
        }
        assert!(parse(s).build(Some(false)).is_ok());
    }

    #[test]
    fn unknown_field_is_rejected() {
        let s = OU.replace(r#""model": "ou","#, r#""model": "ou", "colour": 1,"#);
        assert!(serde_json::from_str::<RunConfig>(&s).is_err());
    }

    #[test]
    fn bad_winsorize_quantile() {
        let s = OU.replace(r#""seed": 7"#, r#""seed": 7, "winsorize": 0.7"#);
        assert!(matches!(parse(&s).build(None), Err(ConfigError::Parse(_))));
    }
}

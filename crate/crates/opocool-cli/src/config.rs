//! TOML configuration and `--set` override handling.
//!
//! A config file carries up to three sections:
//!
//! ```toml
//! [system]            # scalar parameters, frequencies in units of omega_m
//! kappa_a = 1.0
//! delta_a = 1.0
//! omega_m_hz = 1.5e6  # optional, used only to label reports
//!
//! [sweep]
//! model = "internal"
//! method = "both"
//! axes = [{ name = "phi", min = 0.0, max = 3.141592653589793, count = 181, scale = "lin" }]
//! minimize_over = [{ name = "g_a", lo = 0.01, hi = 1.0 }]
//! seed = 7
//!
//! [optimize]
//! model = "internal"
//! free = [{ name = "delta_a", lo = 0.05, hi = 60.0 }, { name = "g_a", lo = 0.01, hi = 5.0 }]
//! ```

use opocool::{Axis, AxisScale, FreeParam, Method, ModelKind, ParamBag, SweepSpec};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub system: BTreeMap<String, f64>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub optimize: Option<OptimizeSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub model: Option<String>,
    pub method: Option<String>,
    pub axes: Vec<AxisSection>,
    #[serde(default)]
    pub minimize_over: Vec<FreeSection>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default = "default_scale")]
    pub scale: String,
}

fn default_scale() -> String {
    "lin".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeSection {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub model: Option<String>,
    pub free: Vec<FreeSection>,
    #[serde(default)]
    pub seed: u64,
}

pub fn load(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    Ok(toml::from_str(&text)?)
}

pub fn parse_model(name: &str) -> Result<ModelKind, ConfigError> {
    match name {
        "internal" => Ok(ModelKind::InternalReduced),
        "internal-full" => Ok(ModelKind::InternalFull),
        "injected" => Ok(ModelKind::Injected),
        "none" => Ok(ModelKind::NoSqueezing),
        other => Err(ConfigError::Invalid(format!(
            "unknown model `{other}` (expected internal|internal-full|injected|none)"
        ))),
    }
}

pub fn parse_method(name: &str) -> Result<Method, ConfigError> {
    match name {
        "pert" => Ok(Method::Perturbative),
        "lyap" => Ok(Method::Lyapunov),
        "both" => Ok(Method::Both),
        other => Err(ConfigError::Invalid(format!(
            "unknown method `{other}` (expected pert|lyap|both)"
        ))),
    }
}

fn parse_scale(name: &str) -> Result<AxisScale, ConfigError> {
    match name {
        "lin" => Ok(AxisScale::Linear),
        "log" => Ok(AxisScale::Log),
        other => Err(ConfigError::Invalid(format!(
            "unknown axis scale `{other}` (expected lin|log)"
        ))),
    }
}

/// Parse one `key=value` override.
pub fn parse_set(arg: &str) -> Result<(String, f64), ConfigError> {
    let (key, value) = arg
        .split_once('=')
        .ok_or_else(|| ConfigError::Invalid(format!("--set expects key=value, got `{arg}`")))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| ConfigError::Invalid(format!("--set {key}: `{value}` is not a number")))?;
    Ok((key.trim().to_string(), value))
}

/// Fold the `[system]` section and `--set` overrides (later wins) into a
/// parameter bag. `omega_m_hz` is a pure label and is returned separately.
pub fn system_bag(
    config: &FileConfig,
    sets: &[(String, f64)],
) -> Result<(ParamBag, Option<f64>), ConfigError> {
    let mut bag = ParamBag::new();
    let mut omega_m_hz = None;
    for (key, value) in config
        .system
        .iter()
        .map(|(k, v)| (k.as_str(), *v))
        .chain(sets.iter().map(|(k, v)| (k.as_str(), *v)))
    {
        if key == "omega_m_hz" {
            omega_m_hz = Some(value);
            continue;
        }
        bag.set(key, value)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    }
    Ok((bag, omega_m_hz))
}

fn build_axis(section: &AxisSection) -> Result<Axis, ConfigError> {
    Ok(Axis {
        name: section.name.clone(),
        start: section.min,
        stop: section.max,
        count: section.count,
        scale: parse_scale(&section.scale)?,
    })
}

fn build_free(section: &FreeSection) -> FreeParam {
    FreeParam {
        name: section.name.clone(),
        lo: section.lo,
        hi: section.hi,
    }
}

/// Assemble a sweep spec from the config file plus command-line overrides.
/// The `--model`/`--method` flags take precedence over the `[sweep]` keys.
pub fn sweep_spec(
    config: &FileConfig,
    bag: &ParamBag,
    model_flag: Option<ModelKind>,
    method_flag: Option<Method>,
) -> Result<SweepSpec, ConfigError> {
    let section = config.sweep.as_ref().ok_or_else(|| {
        ConfigError::Invalid("the sweep subcommand needs a [sweep] config section".into())
    })?;
    let model = match model_flag {
        Some(m) => m,
        None => parse_model(section.model.as_deref().unwrap_or("internal"))?,
    };
    let method = match method_flag {
        Some(m) => m,
        None => parse_method(section.method.as_deref().unwrap_or("both"))?,
    };
    Ok(SweepSpec {
        model,
        method,
        fixed: bag.entries(),
        axes: section
            .axes
            .iter()
            .map(build_axis)
            .collect::<Result<Vec<_>, _>>()?,
        minimize_over: section.minimize_over.iter().map(build_free).collect(),
        seed: section.seed,
    })
}

/// Free-parameter list for the optimize subcommand.
pub fn optimize_free(
    config: &FileConfig,
) -> Result<(Vec<FreeParam>, Option<ModelKind>, u64), ConfigError> {
    let section = config.optimize.as_ref().ok_or_else(|| {
        ConfigError::Invalid("the optimize subcommand needs an [optimize] config section".into())
    })?;
    let model = match &section.model {
        Some(name) => Some(parse_model(name)?),
        None => None,
    };
    Ok((
        section.free.iter().map(build_free).collect(),
        model,
        section.seed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let text = r#"
            [system]
            kappa_a = 2.0
            n_th = 100.0
            omega_m_hz = 1.5e6

            [sweep]
            model = "injected"
            method = "lyap"
            seed = 9
            axes = [{ name = "phi", min = 0.0, max = 3.14, count = 11, scale = "lin" }]
            minimize_over = [{ name = "g_a", lo = 0.01, hi = 1.0 }]

            [optimize]
            free = [{ name = "delta_a", lo = 0.1, hi = 10.0 }]
        "#;
        let config: FileConfig = toml::from_str(text).unwrap();
        let (bag, hz) = system_bag(&config, &[("n_th".into(), 50.0)]).unwrap();
        assert_eq!(bag.get("kappa_a"), Some(2.0));
        // --set wins over the file.
        assert_eq!(bag.get("n_th"), Some(50.0));
        assert_eq!(hz, Some(1.5e6));

        let spec = sweep_spec(&config, &bag, None, None).unwrap();
        assert_eq!(spec.model, ModelKind::Injected);
        assert_eq!(spec.method, Method::Lyapunov);
        assert_eq!(spec.seed, 9);
        assert_eq!(spec.axes.len(), 1);
        assert_eq!(spec.minimize_over.len(), 1);

        let (free, model, seed) = optimize_free(&config).unwrap();
        assert_eq!(free.len(), 1);
        assert!(model.is_none());
        assert_eq!(seed, 0);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_sets() {
        assert!(toml::from_str::<FileConfig>("[sweep]\naxes = []\nbogus = 1").is_err());
        assert!(parse_set("kappa_a").is_err());
        assert!(parse_set("kappa_a=fast").is_err());
        assert_eq!(parse_set(" r = 0.5").unwrap(), ("r".into(), 0.5));
        assert!(parse_model("quantum").is_err());
        assert!(parse_method("exact").is_err());
    }

    #[test]
    fn system_bag_rejects_unknown_parameters() {
        let config = FileConfig::default();
        let err = system_bag(&config, &[("bogus".into(), 1.0)]).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }
}

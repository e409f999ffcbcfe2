//! Resolution of protocol parameters from built-in defaults, an optional
//! JSON configuration file, figure presets and explicit command-line flags.
//!
//! Later sources win: `defaults < file < preset < flags`. A preset behaves
//! like flags the user did not bother to type, so anything typed explicitly
//! still overrides it.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use finkey::optimize::ConfigTemplate;
use finkey::{ChannelModel, DeltaVariant, SecurityBudget};
use serde::{Deserialize, Serialize};

pub const DEFAULT_BLOCK_SIZE: f64 = 1e8;
pub const DEFAULT_QBER: f64 = 0.03;
/// Sacrifice fraction used by commands that need a fixed one.
pub const DEFAULT_SACRIFICE: f64 = 0.01;
pub const DEFAULT_EC_EFFICIENCY: f64 = 1.0;
pub const DEFAULT_ATTENUATION: f64 = 0.2;
pub const DEFAULT_DISTANCE: f64 = 10.0;
pub const DEFAULT_EPSILON: f64 = 1e-10;

/// Hoeffding widening variant, as spelled on the command line and in
/// configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaVariantArg {
    /// Conservative widening `sqrt(ln(1/ε)/m)`.
    Main,
    /// Sharper widening `sqrt(ln(1/ε)/(2m))`.
    Appendix,
}

impl From<DeltaVariantArg> for DeltaVariant {
    fn from(arg: DeltaVariantArg) -> Self {
        match arg {
            DeltaVariantArg::Main => DeltaVariant::MainText,
            DeltaVariantArg::Appendix => DeltaVariant::Appendix,
        }
    }
}

/// Protocol parameters as they appear in a JSON configuration file.
///
/// Every field is optional; unknown keys are rejected so that a typo cannot
/// silently fall back to a default.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub block_size: Option<f64>,
    pub sacrifice_fraction: Option<f64>,
    pub observed_qber: Option<f64>,
    pub ec_efficiency: Option<f64>,
    pub attenuation_db_per_km: Option<f64>,
    pub distance_km: Option<f64>,
    /// Uniform value for all four security parameters; the specific
    /// `eps_*` keys override it component-wise.
    pub epsilon: Option<f64>,
    pub eps_pe: Option<f64>,
    pub eps_ec: Option<f64>,
    pub eps_h: Option<f64>,
    pub eps_s: Option<f64>,
    pub delta_variant: Option<DeltaVariantArg>,
}

fn load_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
}

/// Protocol flags shared by every command that evaluates rates.
#[derive(Debug, clap::Args)]
pub struct ProtocolArgs {
    /// JSON file with protocol parameters; explicit flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Number of transmitted signals N.
    #[arg(long, value_name = "N")]
    pub block_size: Option<f64>,
    /// QBER observed on the estimation sample.
    #[arg(long, value_name = "Q")]
    pub qber: Option<f64>,
    /// Fixed sacrifice fraction f. Sweeps and thresholds optimize f per
    /// point when this is absent.
    #[arg(long, value_name = "F")]
    pub sacrifice_fraction: Option<f64>,
    /// Error-correction efficiency (>= 1) multiplying the Shannon limit.
    #[arg(long, value_name = "GAMMA")]
    pub ec_efficiency: Option<f64>,
    /// Fibre attenuation in dB/km.
    #[arg(long, value_name = "DB_PER_KM")]
    pub attenuation: Option<f64>,
    /// Fibre length in km.
    #[arg(long, value_name = "KM")]
    pub distance: Option<f64>,
    /// Uniform security parameter for all four budget components.
    #[arg(long, value_name = "EPS")]
    pub epsilon: Option<f64>,
    /// Hoeffding widening variant.
    #[arg(long, value_enum, value_name = "VARIANT")]
    pub delta_variant: Option<DeltaVariantArg>,
}

/// Values a figure preset injects between the config file and explicit
/// flags.
#[derive(Debug, Default, Clone, Copy)]
pub struct PresetOverlay {
    pub block_size: Option<f64>,
    pub observed_qber: Option<f64>,
}

/// Fully resolved protocol parameters. Serialized verbatim into the
/// metadata sidecar of each output file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedProtocol {
    pub block_size: f64,
    /// `None` means optimizing commands choose f per evaluation point.
    pub sacrifice_fraction: Option<f64>,
    pub observed_qber: f64,
    pub ec_efficiency: f64,
    pub attenuation_db_per_km: f64,
    pub distance_km: f64,
    pub eps_pe: f64,
    pub eps_ec: f64,
    pub eps_h: f64,
    pub eps_s: f64,
    pub delta_variant: DeltaVariantArg,
}

impl ProtocolArgs {
    pub fn resolve(&self) -> Result<ResolvedProtocol> {
        self.resolve_with(PresetOverlay::default())
    }

    pub fn resolve_with(&self, preset: PresetOverlay) -> Result<ResolvedProtocol> {
        let file = match &self.config {
            Some(path) => load_file(path)?,
            None => FileConfig::default(),
        };
        let (eps_pe, eps_ec, eps_h, eps_s) = if let Some(eps) = self.epsilon {
            (eps, eps, eps, eps)
        } else {
            let base = file.epsilon.unwrap_or(DEFAULT_EPSILON);
            (
                file.eps_pe.unwrap_or(base),
                file.eps_ec.unwrap_or(base),
                file.eps_h.unwrap_or(base),
                file.eps_s.unwrap_or(base),
            )
        };
        Ok(ResolvedProtocol {
            block_size: self
                .block_size
                .or(preset.block_size)
                .or(file.block_size)
                .unwrap_or(DEFAULT_BLOCK_SIZE),
            sacrifice_fraction: self.sacrifice_fraction.or(file.sacrifice_fraction),
            observed_qber: self
                .qber
                .or(preset.observed_qber)
                .or(file.observed_qber)
                .unwrap_or(DEFAULT_QBER),
            ec_efficiency: self
                .ec_efficiency
                .or(file.ec_efficiency)
                .unwrap_or(DEFAULT_EC_EFFICIENCY),
            attenuation_db_per_km: self
                .attenuation
                .or(file.attenuation_db_per_km)
                .unwrap_or(DEFAULT_ATTENUATION),
            distance_km: self
                .distance
                .or(file.distance_km)
                .unwrap_or(DEFAULT_DISTANCE),
            eps_pe,
            eps_ec,
            eps_h,
            eps_s,
            delta_variant: self
                .delta_variant
                .or(file.delta_variant)
                .unwrap_or(DeltaVariantArg::Main),
        })
    }
}

impl ResolvedProtocol {
    pub fn channel(&self) -> ChannelModel {
        ChannelModel {
            attenuation_db_per_km: self.attenuation_db_per_km,
            distance_km: self.distance_km,
        }
    }

    pub fn budget(&self) -> SecurityBudget {
        SecurityBudget {
            eps_pe: self.eps_pe,
            eps_ec: self.eps_ec,
            eps_h: self.eps_h,
            eps_s: self.eps_s,
        }
    }

    pub fn template(&self) -> ConfigTemplate {
        ConfigTemplate {
            block_size: self.block_size,
            observed_qber: self.observed_qber,
            ec_efficiency: self.ec_efficiency,
            channel: self.channel(),
            budget: self.budget(),
            delta_variant: self.delta_variant.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_flags() -> ProtocolArgs {
        ProtocolArgs {
            config: None,
            block_size: None,
            qber: None,
            sacrifice_fraction: None,
            ec_efficiency: None,
            attenuation: None,
            distance: None,
            epsilon: None,
            delta_variant: None,
        }
    }

    fn write_config(contents: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().expect("tempdir");
        let path = dir.path().join("protocol.json");
        std::fs::write(&path, contents).expect("config written");
        (dir, path)
    }

    #[test]
    fn defaults_resolve_to_the_reference_configuration() {
        let resolved = no_flags().resolve().expect("defaults are valid");
        assert_eq!(resolved.block_size, DEFAULT_BLOCK_SIZE);
        assert_eq!(resolved.sacrifice_fraction, None);
        assert_eq!(resolved.observed_qber, DEFAULT_QBER);
        assert_eq!(resolved.ec_efficiency, DEFAULT_EC_EFFICIENCY);
        assert_eq!(resolved.attenuation_db_per_km, DEFAULT_ATTENUATION);
        assert_eq!(resolved.distance_km, DEFAULT_DISTANCE);
        assert_eq!(resolved.budget(), SecurityBudget::uniform(DEFAULT_EPSILON));
        assert_eq!(resolved.delta_variant, DeltaVariantArg::Main);
    }

    #[test]
    fn flags_override_presets_which_override_the_file() {
        let (_dir, path) =
            write_config(r#"{ "block_size": 1e6, "observed_qber": 0.10, "distance_km": 25 }"#);
        let args = ProtocolArgs {
            config: Some(path),
            qber: Some(0.02),
            ..no_flags()
        };
        let preset = PresetOverlay {
            block_size: Some(1e5),
            observed_qber: Some(0.07),
        };

        let resolved = args.resolve_with(preset).expect("sources merge");
        assert_eq!(resolved.block_size, 1e5, "the preset beats the file");
        assert_eq!(
            resolved.observed_qber, 0.02,
            "an explicit flag beats the preset"
        );
        assert_eq!(resolved.distance_km, 25.0, "untouched file values survive");
    }

    #[test]
    fn epsilon_merging_is_component_wise() {
        let (_dir, path) = write_config(r#"{ "epsilon": 1e-8, "eps_h": 1e-6 }"#);
        let args = ProtocolArgs {
            config: Some(path.clone()),
            ..no_flags()
        };
        let budget = args.resolve().expect("file parses").budget();
        assert_eq!(
            budget.eps_h, 1e-6,
            "a specific key overrides the uniform value"
        );
        assert_eq!(budget.eps_pe, 1e-8);
        assert_eq!(budget.eps_ec, 1e-8);
        assert_eq!(budget.eps_s, 1e-8);

        let forced = ProtocolArgs {
            config: Some(path),
            epsilon: Some(1e-5),
            ..no_flags()
        };
        let budget = forced.resolve().expect("file parses").budget();
        assert_eq!(
            budget,
            SecurityBudget::uniform(1e-5),
            "the flag overrides all four"
        );
    }

    #[test]
    fn templates_carry_every_resolved_field() {
        let args = ProtocolArgs {
            block_size: Some(1e5),
            qber: Some(0.06),
            ec_efficiency: Some(1.2),
            attenuation: Some(0.17),
            distance: Some(40.0),
            delta_variant: Some(DeltaVariantArg::Appendix),
            ..no_flags()
        };
        let template = args.resolve().expect("flags are valid").template();
        assert_eq!(template.block_size, 1e5);
        assert_eq!(template.observed_qber, 0.06);
        assert_eq!(template.ec_efficiency, 1.2);
        assert_eq!(
            template.channel,
            ChannelModel {
                attenuation_db_per_km: 0.17,
                distance_km: 40.0
            }
        );
        assert_eq!(template.delta_variant, DeltaVariant::Appendix);
    }
}

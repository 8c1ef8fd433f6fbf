//! Sensor configuration: TOML with unit-suffixed keys.
//!
//! Every numeric key carries its unit in the name (`width_nm`, `B_sat_G`,
//! `t0_us`, ...); dimensionless quantities end in `_frac`, `_ratio`,
//! `_count`, `_factor` or `_unitvec`. Missing keys take their defaults.
//! Unknown keys are rejected with the nearest valid key, and a known
//! quantity written with the wrong unit suffix gets its own error.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::deer::{DeerScenario, FitBounds};
use crate::error::{Error, Result};
use crate::fabstats::{bundled_profile, parse_profile, ApertureSpec, ImplantProfile};
use crate::magnetostatics::{find_xopt, StripeGeometry};
use crate::photonics::PhcLattice;
use crate::spin::SpinSystem;
use crate::swr::{FieldScan, SwrModel};

pub const SCHEMA_VERSION: u32 = 1;
/// Name that selects the built-in configuration when no such file exists.
pub const BUILTIN_DEFAULTS: &str = "paper-defaults";

/// Accepted unit suffixes, longest first so that stripping is unambiguous.
pub const UNIT_SUFFIXES: &[&str] = &[
    "_MHz_per_G",
    "_G_per_nm",
    "_per_cm2",
    "_per_nm2",
    "_unitvec",
    "_version",
    "_G_nm2",
    "_factor",
    "_count",
    "_ratio",
    "_frac",
    "_GHz",
    "_MHz",
    "_deg",
    "_nm",
    "_um",
    "_us",
    "_G",
    "_W",
    "_s",
];

/// Allowed deviation of the membrane thickness from `x_opt − T/2`.
pub const MEMBRANE_TOLERANCE_NM: f64 = 20.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwrSettings {
    pub model: SwrModel,
    pub scan: FieldScan,
    pub dispersion_modes_count: usize,
}

impl Default for SwrSettings {
    fn default() -> Self {
        SwrSettings {
            model: SwrModel::default(),
            scan: FieldScan::default(),
            dispersion_modes_count: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSettings {
    #[serde(rename = "freq_GHz")]
    pub freq_ghz: f64,
    #[serde(rename = "field_min_G")]
    pub field_min_g: f64,
    #[serde(rename = "field_max_G")]
    pub field_max_g: f64,
    #[serde(rename = "field_step_G")]
    pub field_step_g: f64,
    pub orientation_count: usize,
}

impl Default for SpectrumSettings {
    fn default() -> Self {
        SpectrumSettings {
            freq_ghz: 9.369,
            field_min_g: 3200.0,
            field_max_g: 3500.0,
            field_step_g: 0.1,
            orientation_count: 400,
        }
    }
}

impl SpectrumSettings {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.field_max_g > self.field_min_g && self.field_step_g > 0.0) {
            return Err(Error::Config("spectrum field range must be increasing with positive step".into()));
        }
        let n = ((self.field_max_g - self.field_min_g) / self.field_step_g).round() as usize;
        Ok((0..=n).map(|k| self.field_min_g + self.field_step_g * k as f64).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSettings {
    pub config_count: usize,
    pub spins_cap_count: usize,
}

impl Default for MonteCarloSettings {
    fn default() -> Self {
        MonteCarloSettings {
            config_count: 2000,
            spins_cap_count: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhcSettings {
    pub lattice: PhcLattice,
    pub zpl_nm: f64,
    pub planewave_count: usize,
    pub k_per_segment_count: usize,
    pub band_count: usize,
    pub nanobeam_orders_count: u32,
}

impl Default for PhcSettings {
    fn default() -> Self {
        PhcSettings {
            lattice: PhcLattice::default(),
            zpl_nm: 915.0,
            planewave_count: crate::photonics::DEFAULT_PLANEWAVES,
            k_per_segment_count: 24,
            band_count: crate::photonics::DEFAULT_BANDS,
            nanobeam_orders_count: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImplantSettings {
    /// File path (relative to the config file) or `builtin:<name>`.
    pub profile: String,
    pub aperture: ApertureSpec,
    pub devices_count: u64,
    pub window_nm: [f64; 2],
}

impl Default for ImplantSettings {
    fn default() -> Self {
        ImplantSettings {
            profile: "builtin:trilayer_30keV".into(),
            aperture: ApertureSpec::default(),
            devices_count: 100,
            window_nm: [5.0, 7.5],
        }
    }
}

impl ImplantSettings {
    pub fn load_profile(&self, base_dir: Option<&Path>) -> Result<ImplantProfile> {
        if let Some(name) = self.profile.strip_prefix("builtin:") {
            return bundled_profile(name);
        }
        let p = PathBuf::from(&self.profile);
        let p = match base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p,
        };
        parse_profile(&p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub schema_version: u32,
    /// Drive frequency of the gradient/SWR design.
    #[serde(rename = "microwave_freq_GHz")]
    pub microwave_freq_ghz: f64,
    pub membrane_thickness_nm: f64,
    /// Probe depth below the membrane's outer surface.
    pub probe_depth_nm: f64,
    pub stripe: StripeGeometry,
    pub swr: SwrSettings,
    pub spectrum: SpectrumSettings,
    pub spin_systems: Vec<SpinSystem>,
    pub deer: DeerScenario,
    pub fit: FitBounds,
    pub monte_carlo: MonteCarloSettings,
    pub snr: crate::snr::SnrBudget,
    pub phc: PhcSettings,
    pub implant: ImplantSettings,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            schema_version: SCHEMA_VERSION,
            microwave_freq_ghz: 9.7,
            membrane_thickness_nm: 100.0,
            probe_depth_nm: 6.0,
            stripe: StripeGeometry::default(),
            swr: SwrSettings::default(),
            spectrum: SpectrumSettings::default(),
            spin_systems: SpinSystem::defaults(),
            deer: DeerScenario::default(),
            fit: FitBounds::default(),
            monte_carlo: MonteCarloSettings::default(),
            snr: crate::snr::SnrBudget::default(),
            phc: PhcSettings::default(),
            implant: ImplantSettings::default(),
        }
    }
}

impl SensorConfig {
    /// SWR model bound to this config's stripe.
    pub fn swr_model(&self) -> SwrModel {
        SwrModel {
            geom: self.stripe.clone(),
            ..self.swr.model.clone()
        }
    }

    pub fn spin_system(&self, label: &str) -> Option<&SpinSystem> {
        self.spin_systems.iter().find(|s| s.label.eq_ignore_ascii_case(label))
    }

    /// Checks every section; returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.microwave_freq_ghz > 0.0) {
            return Err(Error::Config("microwave_freq_GHz must be positive".into()));
        }
        self.stripe.validate()?;
        self.swr_model().validate()?;
        self.swr.scan.grid()?;
        self.spectrum.grid()?;
        for s in &self.spin_systems {
            s.validate()?;
        }
        self.deer.validate()?;
        self.snr.validate()?;
        self.phc.lattice.validate()?;
        self.implant.aperture.validate()?;
        if !(self.probe_depth_nm >= 0.0) {
            return Err(Error::Config("probe_depth_nm must be non-negative".into()));
        }
        if !(self.probe_depth_nm < self.membrane_thickness_nm) {
            return Err(Error::Config(format!(
                "probe_depth_nm ({}) must be smaller than membrane_thickness_nm ({})",
                self.probe_depth_nm, self.membrane_thickness_nm
            )));
        }
        let [w0, w1] = self.implant.window_nm;
        if w1 < w0 {
            return Err(Error::Config("implant.window_nm must be increasing".into()));
        }
        let mut warnings = self.stripe.warnings();
        let best = find_xopt(&self.stripe)?;
        let ideal = best.x_opt_nm - 0.5 * self.stripe.thickness_nm;
        if (self.membrane_thickness_nm - ideal).abs() > MEMBRANE_TOLERANCE_NM {
            warnings.push(format!(
                "membrane thickness {} nm differs from x_opt - T/2 = {ideal:.1} nm by more than {MEMBRANE_TOLERANCE_NM} nm",
                self.membrane_thickness_nm
            ));
        }
        Ok(warnings)
    }
}

#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: SensorConfig,
    pub warnings: Vec<String>,
    /// Directory of the config file, for resolving relative paths.
    pub base_dir: Option<PathBuf>,
    pub source: String,
}

fn strip_suffix(key: &str) -> (&str, &str) {
    for s in UNIT_SUFFIXES {
        if let Some(stem) = key.strip_suffix(s) {
            return (stem, s);
        }
    }
    (key, "")
}

fn unknown_key_error(key: &str, path: &str, schema: &Table) -> Error {
    let full = if path.is_empty() { key.to_string() } else { format!("{path}.{key}") };
    let (stem, suffix) = strip_suffix(key);
    if let Some(known) = schema.keys().find(|k| {
        let (s, suf) = strip_suffix(k);
        s == stem && suf != suffix
    }) {
        let (_, expected) = strip_suffix(known);
        return Error::Config(format!(
            "unit suffix mismatch for `{full}`: this quantity is given in `{expected}`, use `{known}`"
        ));
    }
    let nearest = schema
        .keys()
        .min_by_key(|k| strsim::levenshtein(k, key))
        .map(|k| format!("; nearest valid key is `{k}`"))
        .unwrap_or_default();
    Error::Config(format!("unknown key `{full}`{nearest}"))
}

fn check_keys(user: &Table, schema: &Table, path: &str) -> Result<()> {
    for (key, value) in user {
        let Some(expected) = schema.get(key) else {
            return Err(unknown_key_error(key, path, schema));
        };
        let child = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
        match (value, expected) {
            (Value::Table(u), Value::Table(s)) => check_keys(u, s, &child)?,
            (Value::Array(items), Value::Array(proto)) => {
                if let Some(Value::Table(s)) = proto.first() {
                    for (i, item) in items.iter().enumerate() {
                        if let Value::Table(u) = item {
                            check_keys(u, s, &format!("{child}[{i}]"))?;
                        }
                    }
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// Key tree of every accepted key, including optional ones.
pub fn key_schema() -> Table {
    let mut cfg = SensorConfig::default();
    // A prototype spin system carrying every optional field.
    cfg.spin_systems = vec![SpinSystem::nitroxide()];
    cfg.snr.phi_h = Some(0.5);
    cfg.snr.phi_l = Some(0.5);
    match Value::try_from(&cfg).expect("default config serializes") {
        Value::Table(t) => t,
        _ => unreachable!("config serializes to a table"),
    }
}

/// Parse config text. `source` names the origin in messages.
pub fn parse_config(text: &str, source: &str) -> Result<SensorConfig> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(format!("{source}: {e}")))?;
    check_keys(&table, &key_schema(), "")?;
    let cfg: SensorConfig = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(format!("{source}: {e}")))?;
    Ok(cfg)
}

/// Load and validate a config file. The name `paper-defaults` selects the
/// built-in defaults unless a file of that name exists.
pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let (config, base_dir) = if path.as_os_str() == BUILTIN_DEFAULTS && !path.exists() {
        (SensorConfig::default(), None)
    } else {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = parse_config(&text, &path.display().to_string())?;
        (cfg, path.parent().map(Path::to_path_buf))
    };
    let warnings = config.validate()?;
    Ok(LoadedConfig {
        config,
        warnings,
        base_dir,
        source: path.display().to_string(),
    })
}

pub fn config_to_string(cfg: &SensorConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
}

pub fn save_config(cfg: &SensorConfig, path: &Path) -> Result<()> {
    std::fs::write(path, config_to_string(cfg)?).map_err(|e| Error::io(path, e))
}

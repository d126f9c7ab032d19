//! Experiment configuration: a versioned TOML schema with one section per
//! protocol family. Unknown keys are rejected everywhere.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use nvscope::bath::BathMode;
use nvscope::constants::{field_for_larmor, Species, GAMMA_ELECTRON};
use nvscope::model::NC60Geometry;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    PositionScan,
    PositionEstimate,
    Qnd,
    Pair,
    Labels,
    Radical,
    BathDecoupling,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::PositionScan => "position-scan",
            Protocol::PositionEstimate => "position-estimate",
            Protocol::Qnd => "qnd",
            Protocol::Pair => "pair",
            Protocol::Labels => "labels",
            Protocol::Radical => "radical",
            Protocol::BathDecoupling => "bath-decoupling",
        }
    }

    /// The configuration section this protocol reads.
    pub fn section(self) -> &'static str {
        match self {
            Protocol::PositionScan | Protocol::PositionEstimate => "position",
            Protocol::Qnd => "qnd",
            Protocol::Pair => "pair",
            Protocol::Labels => "labels",
            Protocol::Radical => "radical",
            Protocol::BathDecoupling => "bath",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Directory for result files; `--out` takes precedence.
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into() }
    }
}

/// Phosphoric acid near the NV, located by direction scans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PositionSection {
    pub distance_nm: f64,
    /// Direction of the hyperfine vector, degrees.
    pub theta0_deg: f64,
    pub phi0_deg: f64,
    /// Phosphorus-proton distance, nm.
    pub ph_distance_nm: f64,
    /// Sets the field strength through the phosphorus Larmor frequency.
    pub phosphorus_larmor_khz: f64,
    /// Proton decoupling amplitude, kHz.
    pub rf_khz: f64,
    pub with_protons: bool,
    pub include_back_action: bool,
    /// Readout time of the direction map, ms.
    pub readout_ms: f64,
    pub n_theta: usize,
    pub n_phi: usize,
    pub trace_span_ms: f64,
    pub trace_points: usize,
    /// Number of orthogonal field directions tried for the rate fit.
    pub orthogonal_directions: usize,
}

impl Default for PositionSection {
    fn default() -> Self {
        PositionSection {
            distance_nm: 5.0,
            theta0_deg: 68.233,
            phi0_deg: 93.841,
            ph_distance_nm: 0.2,
            phosphorus_larmor_khz: 500.0,
            rf_khz: 20.0,
            with_protons: true,
            include_back_action: true,
            readout_ms: 3.0,
            n_theta: 64,
            n_phi: 64,
            trace_span_ms: 12.0,
            trace_points: 241,
            orthogonal_directions: nvscope::protocols::ORTHOGONAL_DIRECTIONS,
        }
    }
}

/// Nitrogen spin readout through the cage electron of N@C60.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QndSection {
    pub field_gauss: f64,
    pub distance_nm: f64,
    pub polar_deg: f64,
    pub azimuth_deg: f64,
    pub hyperfine_khz: f64,
    pub quadrupole_khz: f64,
    pub secular_hyperfine: bool,
    /// Dressed NV frequency grid, kHz.
    pub scan_start_khz: f64,
    pub scan_stop_khz: f64,
    pub scan_step_khz: f64,
    pub readout_us: f64,
    /// Nitrogen projections to scan.
    pub nuclear_states: Vec<i32>,
    /// Dressed frequency of the repeated readout; defaults to the deepest
    /// dip of the first scanned state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monitor_omega_nv_khz: Option<f64>,
    pub readouts: usize,
    pub samples_per_readout: usize,
}

impl Default for QndSection {
    fn default() -> Self {
        let g = NC60Geometry::default();
        QndSection {
            field_gauss: 300_000.0 / GAMMA_ELECTRON,
            distance_nm: g.distance_nm,
            polar_deg: g.polar.to_degrees(),
            azimuth_deg: g.azimuth.to_degrees(),
            hyperfine_khz: g.hyperfine_khz,
            quadrupole_khz: g.quadrupole_khz,
            secular_hyperfine: g.secular_hyperfine,
            scan_start_khz: 314_000.0,
            scan_stop_khz: 318_500.0,
            scan_step_khz: 50.0,
            readout_us: 6.0,
            nuclear_states: vec![1, 0],
            monitor_omega_nv_khz: None,
            readouts: 1,
            samples_per_readout: 61,
        }
    }
}

/// A like-spin pair scanned along nine field directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairSection {
    pub species: Species,
    pub separation_nm: f64,
    pub pair_theta_deg: f64,
    pub pair_phi_deg: f64,
    pub distance_nm: f64,
    pub polar_deg: f64,
    pub azimuth_deg: f64,
    pub larmor_khz: f64,
    pub half_window_khz: f64,
    pub step_khz: f64,
    /// Fixed readout time; automatic per direction when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub readout_ms: Option<f64>,
    pub max_readout_ms: f64,
}

impl Default for PairSection {
    fn default() -> Self {
        let p = nvscope::protocols::PairConfig::default();
        PairSection {
            species: p.species,
            separation_nm: p.separation_nm,
            pair_theta_deg: p.pair_theta_deg,
            pair_phi_deg: p.pair_phi_deg,
            distance_nm: p.distance_nm,
            polar_deg: p.polar_deg,
            azimuth_deg: p.azimuth_deg,
            larmor_khz: p.larmor_khz,
            half_window_khz: p.half_window_khz,
            step_khz: p.step_khz,
            readout_ms: p.readout_ms,
            max_readout_ms: p.max_readout_ms,
        }
    }
}

impl PairSection {
    pub fn to_core(&self) -> nvscope::protocols::PairConfig {
        nvscope::protocols::PairConfig {
            species: self.species,
            separation_nm: self.separation_nm,
            pair_theta_deg: self.pair_theta_deg,
            pair_phi_deg: self.pair_phi_deg,
            distance_nm: self.distance_nm,
            polar_deg: self.polar_deg,
            azimuth_deg: self.azimuth_deg,
            larmor_khz: self.larmor_khz,
            half_window_khz: self.half_window_khz,
            step_khz: self.step_khz,
            readout_ms: self.readout_ms,
            max_readout_ms: self.max_readout_ms,
        }
    }
}

/// Two nitroxide labels under a strong common drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelsSection {
    pub distance_nm: f64,
    pub cos_theta: f64,
    pub omega_khz: f64,
    pub a1_khz: f64,
    pub a2_khz: f64,
    pub readout_us: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_window_khz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_khz: Option<f64>,
}

impl Default for LabelsSection {
    fn default() -> Self {
        let c = nvscope::protocols::LabelConfig::five_nm();
        LabelsSection {
            distance_nm: c.distance_nm,
            cos_theta: c.cos_theta,
            omega_khz: c.omega_khz,
            a1_khz: c.a1_khz,
            a2_khz: c.a2_khz,
            readout_us: c.readout_ms * 1e3,
            half_window_khz: c.half_window_khz,
            step_khz: c.step_khz,
        }
    }
}

impl LabelsSection {
    pub fn to_core(&self) -> nvscope::protocols::LabelConfig {
        nvscope::protocols::LabelConfig {
            distance_nm: self.distance_nm,
            cos_theta: self.cos_theta,
            omega_khz: self.omega_khz,
            a1_khz: self.a1_khz,
            a2_khz: self.a2_khz,
            readout_ms: self.readout_us * 1e-3,
            half_window_khz: self.half_window_khz,
            step_khz: self.step_khz,
        }
    }
}

/// A recombining radical pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadicalSection {
    pub distance_nm: f64,
    pub cos_theta: f64,
    pub omega_khz: f64,
    pub k_per_us: f64,
    pub a1_khz: f64,
    pub a2_khz: f64,
    pub readout_us: f64,
    pub half_window_khz: f64,
    pub step_khz: f64,
    pub monitor_span_us: f64,
    pub monitor_points: usize,
}

impl Default for RadicalSection {
    fn default() -> Self {
        let c = nvscope::protocols::RadicalConfig::default();
        RadicalSection {
            distance_nm: c.distance_nm,
            cos_theta: c.cos_theta,
            omega_khz: c.omega_khz,
            k_per_us: c.k_per_us,
            a1_khz: c.a1_khz,
            a2_khz: c.a2_khz,
            readout_us: c.readout_ms * 1e3,
            half_window_khz: c.half_window_khz,
            step_khz: c.step_khz,
            monitor_span_us: 8.0,
            monitor_points: 161,
        }
    }
}

impl RadicalSection {
    pub fn to_core(&self) -> nvscope::protocols::RadicalConfig {
        nvscope::protocols::RadicalConfig {
            distance_nm: self.distance_nm,
            cos_theta: self.cos_theta,
            omega_khz: self.omega_khz,
            k_per_us: self.k_per_us,
            a1_khz: self.a1_khz,
            a2_khz: self.a2_khz,
            readout_ms: self.readout_us * 1e-3,
            half_window_khz: self.half_window_khz,
            step_khz: self.step_khz,
        }
    }
}

/// Carbon-13 bath and the decoupling demonstration run on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathSection {
    pub mode: BathMode,
    pub count: usize,
    pub radius_nm: f64,
    pub exclusion_nm: f64,
    /// NV drive, kHz.
    pub omega_khz: f64,
    /// Field along the NV axis, Gauss.
    pub field_gauss: f64,
    pub span_ms: f64,
    pub points: usize,
}

impl Default for BathSection {
    fn default() -> Self {
        let b = nvscope::bath::BathConfig::default();
        BathSection {
            mode: b.mode,
            count: b.count,
            radius_nm: b.radius_nm,
            exclusion_nm: b.exclusion_nm,
            omega_khz: 500.0,
            field_gauss: field_for_larmor(Species::P31, 500.0),
            span_ms: 3.0,
            points: 301,
        }
    }
}

impl BathSection {
    pub fn to_core(&self, seed: u64) -> nvscope::bath::BathConfig {
        nvscope::bath::BathConfig {
            mode: self.mode,
            count: self.count,
            radius_nm: self.radius_nm,
            exclusion_nm: self.exclusion_nm,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub protocol: Protocol,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<PositionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qnd: Option<QndSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<LabelsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radical: Option<RadicalSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bath: Option<BathSection>,
}

/// A validated configuration with the protocol's section filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub config: ExperimentConfig,
    /// Canonical TOML of `config`.
    pub text: String,
    /// SHA-256 of `text`, hex.
    pub sha256: String,
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| schema(e.to_string()))
    }

    fn present_sections(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.position.is_some() {
            v.push("position");
        }
        if self.qnd.is_some() {
            v.push("qnd");
        }
        if self.pair.is_some() {
            v.push("pair");
        }
        if self.labels.is_some() {
            v.push("labels");
        }
        if self.radical.is_some() {
            v.push("radical");
        }
        if self.bath.is_some() {
            v.push("bath");
        }
        v
    }

    /// Checks the schema, fills the protocol section with defaults and
    /// validates every value.
    pub fn resolve(mut self) -> Result<ResolvedConfig, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema(format!(
                "unsupported schema_version {}; this build reads version {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        let wanted = self.protocol.section();
        if let Some(extra) = self.present_sections().into_iter().find(|s| *s != wanted) {
            return Err(schema(format!(
                "section [{extra}] does not apply to protocol {}",
                self.protocol.name()
            )));
        }
        match wanted {
            "position" => validate_position(self.position.get_or_insert_with(Default::default))?,
            "qnd" => validate_qnd(self.qnd.get_or_insert_with(Default::default))?,
            "pair" => validate_pair(self.pair.get_or_insert_with(Default::default))?,
            "labels" => validate_labels(self.labels.get_or_insert_with(Default::default))?,
            "radical" => validate_radical(self.radical.get_or_insert_with(Default::default))?,
            _ => validate_bath(self.bath.get_or_insert_with(Default::default))?,
        }
        if self.output.dir.is_empty() {
            return Err(schema("output.dir must not be empty"));
        }
        let text = toml::to_string(&self).map_err(|e| schema(e.to_string()))?;
        let sha256 = hex::encode(Sha256::digest(text.as_bytes()));
        Ok(ResolvedConfig {
            config: self,
            text,
            sha256,
        })
    }
}

impl ResolvedConfig {
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        ExperimentConfig::parse(text)?.resolve()
    }

    /// A copy with a different random seed.
    pub fn with_seed(&self, seed: u64) -> Result<Self, CliError> {
        let mut c = self.config.clone();
        c.seed = seed;
        c.resolve()
    }

    /// A copy with `path` (dotted, e.g. `labels.omega_khz`) set to `value`.
    /// The field must exist and hold a number.
    pub fn with_value(&self, path: &str, value: f64) -> Result<Self, CliError> {
        let missing = || {
            schema(format!(
                "sweep axis {path} names no field of the resolved config"
            ))
        };
        let mut doc: toml::Table = toml::from_str(&self.text).map_err(|e| schema(e.to_string()))?;
        let mut keys = path.split('.');
        let first = keys.next().unwrap_or_default();
        let mut slot = doc.get_mut(first).ok_or_else(missing)?;
        for key in keys {
            slot = slot.get_mut(key).ok_or_else(missing)?;
        }
        *slot = match slot {
            toml::Value::Float(_) => toml::Value::Float(value),
            toml::Value::Integer(_) => {
                if value.fract() != 0.0 || !(value.abs() < 9.0e15) {
                    return Err(schema(format!(
                        "sweep axis {path} is an integer field; {value} is not an integer"
                    )));
                }
                toml::Value::Integer(value as i64)
            }
            _ => return Err(schema(format!("sweep axis {path} is not numeric"))),
        };
        let text = toml::to_string(&doc).map_err(|e| schema(e.to_string()))?;
        Self::from_text(&text)
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(schema(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn non_negative(name: &str, v: f64) -> Result<(), CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(schema(format!(
            "{name} must be non-negative and finite, got {v}"
        )))
    }
}

fn finite(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(schema(format!("{name} must be finite, got {v}")))
    }
}

fn unit_cosine(name: &str, v: f64) -> Result<(), CliError> {
    if (-1.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(schema(format!("{name} must lie in [-1, 1], got {v}")))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Result<(), CliError> {
    if v >= min {
        Ok(())
    } else {
        Err(schema(format!("{name} must be at least {min}, got {v}")))
    }
}

fn validate_position(s: &PositionSection) -> Result<(), CliError> {
    positive("position.distance_nm", s.distance_nm)?;
    finite("position.theta0_deg", s.theta0_deg)?;
    finite("position.phi0_deg", s.phi0_deg)?;
    positive("position.ph_distance_nm", s.ph_distance_nm)?;
    positive("position.phosphorus_larmor_khz", s.phosphorus_larmor_khz)?;
    non_negative("position.rf_khz", s.rf_khz)?;
    positive("position.readout_ms", s.readout_ms)?;
    at_least("position.n_theta", s.n_theta, 3)?;
    at_least("position.n_phi", s.n_phi, 4)?;
    positive("position.trace_span_ms", s.trace_span_ms)?;
    at_least("position.trace_points", s.trace_points, 3)?;
    at_least("position.orthogonal_directions", s.orthogonal_directions, 1)
}

fn validate_qnd(s: &QndSection) -> Result<(), CliError> {
    positive("qnd.field_gauss", s.field_gauss)?;
    positive("qnd.distance_nm", s.distance_nm)?;
    finite("qnd.polar_deg", s.polar_deg)?;
    finite("qnd.azimuth_deg", s.azimuth_deg)?;
    finite("qnd.hyperfine_khz", s.hyperfine_khz)?;
    finite("qnd.quadrupole_khz", s.quadrupole_khz)?;
    positive("qnd.scan_step_khz", s.scan_step_khz)?;
    let omega_e = GAMMA_ELECTRON * s.field_gauss;
    if !(s.scan_start_khz > omega_e && s.scan_stop_khz > s.scan_start_khz) {
        return Err(schema(format!(
            "qnd scan must be increasing and lie above the electron Larmor frequency {omega_e:.1} kHz"
        )));
    }
    positive("qnd.readout_us", s.readout_us)?;
    if s.nuclear_states.is_empty() || s.nuclear_states.iter().any(|m| !(-1..=1).contains(m)) {
        return Err(schema(
            "qnd.nuclear_states must list projections among -1, 0, 1",
        ));
    }
    if (1..s.nuclear_states.len()).any(|i| s.nuclear_states[..i].contains(&s.nuclear_states[i])) {
        return Err(schema("qnd.nuclear_states must not repeat a projection"));
    }
    if let Some(w) = s.monitor_omega_nv_khz {
        if !(w > omega_e) {
            return Err(schema(
                "qnd.monitor_omega_nv_khz must exceed the electron Larmor frequency",
            ));
        }
    }
    at_least("qnd.readouts", s.readouts, 1)?;
    at_least("qnd.samples_per_readout", s.samples_per_readout, 2)
}

fn validate_pair(s: &PairSection) -> Result<(), CliError> {
    positive("pair.separation_nm", s.separation_nm)?;
    finite("pair.pair_theta_deg", s.pair_theta_deg)?;
    finite("pair.pair_phi_deg", s.pair_phi_deg)?;
    positive("pair.distance_nm", s.distance_nm)?;
    finite("pair.polar_deg", s.polar_deg)?;
    finite("pair.azimuth_deg", s.azimuth_deg)?;
    positive("pair.larmor_khz", s.larmor_khz)?;
    positive("pair.half_window_khz", s.half_window_khz)?;
    positive("pair.step_khz", s.step_khz)?;
    if let Some(t) = s.readout_ms {
        positive("pair.readout_ms", t)?;
    }
    positive("pair.max_readout_ms", s.max_readout_ms)
}

fn validate_labels(s: &LabelsSection) -> Result<(), CliError> {
    positive("labels.distance_nm", s.distance_nm)?;
    unit_cosine("labels.cos_theta", s.cos_theta)?;
    positive("labels.omega_khz", s.omega_khz)?;
    finite("labels.a1_khz", s.a1_khz)?;
    finite("labels.a2_khz", s.a2_khz)?;
    positive("labels.readout_us", s.readout_us)?;
    if let Some(h) = s.half_window_khz {
        positive("labels.half_window_khz", h)?;
    }
    if let Some(h) = s.step_khz {
        positive("labels.step_khz", h)?;
    }
    Ok(())
}

fn validate_radical(s: &RadicalSection) -> Result<(), CliError> {
    positive("radical.distance_nm", s.distance_nm)?;
    unit_cosine("radical.cos_theta", s.cos_theta)?;
    positive("radical.omega_khz", s.omega_khz)?;
    non_negative("radical.k_per_us", s.k_per_us)?;
    finite("radical.a1_khz", s.a1_khz)?;
    finite("radical.a2_khz", s.a2_khz)?;
    positive("radical.readout_us", s.readout_us)?;
    positive("radical.half_window_khz", s.half_window_khz)?;
    positive("radical.step_khz", s.step_khz)?;
    positive("radical.monitor_span_us", s.monitor_span_us)?;
    at_least("radical.monitor_points", s.monitor_points, 3)
}

fn validate_bath(s: &BathSection) -> Result<(), CliError> {
    non_negative("bath.exclusion_nm", s.exclusion_nm)?;
    positive("bath.radius_nm", s.radius_nm)?;
    if s.radius_nm <= s.exclusion_nm {
        return Err(schema("bath.radius_nm must exceed bath.exclusion_nm"));
    }
    if s.count > 10 {
        return Err(schema(format!(
            "bath.count {} exceeds the dense limit of 10 spins",
            s.count
        )));
    }
    non_negative("bath.omega_khz", s.omega_khz)?;
    positive("bath.field_gauss", s.field_gauss)?;
    positive("bath.span_ms", s.span_ms)?;
    at_least("bath.points", s.points, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_resolves_with_defaults() {
        let r = ResolvedConfig::from_text("schema_version = 1\nprotocol = \"labels\"\n").unwrap();
        assert_eq!(r.config.labels, Some(LabelsSection::default()));
        assert!(r.text.contains("[labels]"));
        assert_eq!(r.sha256.len(), 64);
        assert_eq!(ResolvedConfig::from_text(&r.text).unwrap(), r);
    }

    #[test]
    fn unknown_keys_and_foreign_sections_are_rejected() {
        let bad = "schema_version = 1\nprotocol = \"pair\"\n[pair]\nstep = 1.0\n";
        assert!(matches!(
            ResolvedConfig::from_text(bad),
            Err(CliError::Schema(_))
        ));
        let foreign = "schema_version = 1\nprotocol = \"pair\"\n[labels]\n";
        assert!(matches!(
            ResolvedConfig::from_text(foreign),
            Err(CliError::Schema(_))
        ));
        let version = "schema_version = 2\nprotocol = \"pair\"\n";
        assert!(matches!(
            ResolvedConfig::from_text(version),
            Err(CliError::Schema(_))
        ));
    }

    #[test]
    fn sweep_values_must_target_numbers() {
        let r = ResolvedConfig::from_text("schema_version = 1\nprotocol = \"labels\"\n").unwrap();
        let moved = r.with_value("labels.omega_khz", 19_000.0).unwrap();
        assert_eq!(moved.config.labels.unwrap().omega_khz, 19_000.0);
        assert!(r.with_value("labels.nope", 1.0).is_err());
        assert!(r.with_value("protocol", 1.0).is_err());
        assert!(r.with_value("seed", 1.5).is_err());
        assert_eq!(r.with_value("seed", 4.0).unwrap().config.seed, 4);
    }
}

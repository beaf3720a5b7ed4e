//! Scenario configuration.
//!
//! The file format is sectioned `key = value` lines (a TOML subset):
//!
//! ```text
//! [network]
//! nodes = 50
//! area_m = 1000.0
//!
//! [protocol]
//! name = "olsr"
//! ```
//!
//! Every key is optional and falls back to the defaults below. Unknown keys
//! are rejected with the key named in the error.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Dsdv,
    Olsr,
    Fsr,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 3] = [ProtocolKind::Dsdv, ProtocolKind::Olsr, ProtocolKind::Fsr];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::Dsdv => "dsdv",
            ProtocolKind::Olsr => "olsr",
            ProtocolKind::Fsr => "fsr",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dsdv" => Ok(ProtocolKind::Dsdv),
            "olsr" => Ok(ProtocolKind::Olsr),
            "fsr" => Ok(ProtocolKind::Fsr),
            other => Err(format!(
                "unknown protocol `{other}` (expected dsdv, olsr or fsr)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityModel {
    Static,
    RandomWaypoint,
}

/// When an OLSR node sends a TC after its MPR selector set changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TcTrigger {
    /// Right away, in the same event-time step.
    Immediate,
    /// At the next scheduled TC.
    Scheduled,
}

/// Numerator of the normalized routing load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NrlCounting {
    /// Every transmission, forwards included.
    PerHop,
    /// Originated control messages only.
    PerOrigination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub nodes: u32,
    /// Side of the square area in meters.
    pub area_m: f64,
    pub range_m: f64,
    pub bandwidth_bps: f64,
    pub propagation_s: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            nodes: 50,
            area_m: 1000.0,
            range_m: 250.0,
            bandwidth_bps: 2.0e6,
            propagation_s: 1.0e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub flows: u32,
    pub rate_pps: f64,
    pub payload_bytes: u32,
    /// Flows start at a uniform offset in `[start_s, start_s + 1/rate)`.
    pub start_s: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            flows: 10,
            rate_pps: 4.0,
            payload_bytes: 512,
            start_s: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilityConfig {
    pub model: MobilityModel,
    pub speed_min: f64,
    pub speed_max: f64,
    pub pause_s: f64,
    /// Position update granularity.
    pub step_s: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        Self {
            model: MobilityModel::RandomWaypoint,
            speed_min: 1.0,
            speed_max: 20.0,
            pause_s: 0.0,
            step_s: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub name: ProtocolKind,
    /// DSDV full-dump interval and FSR inner-scope interval.
    pub periodic_s: f64,
    pub hello_s: f64,
    /// DSDV settling time. Defaults to `1.5 * periodic_s`.
    pub settling_s: Option<f64>,
    /// FSR inner scope radius in hops.
    pub fsr_inner_hops: u32,
    /// FSR outer-scope interval as a multiple of `periodic_s`.
    pub fsr_outer_factor: f64,
    /// Missed HELLOs / updates before a neighbor is declared lost.
    pub neighbor_loss_intervals: u32,
    pub tc_trigger: TcTrigger,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            name: ProtocolKind::Dsdv,
            periodic_s: 5.0,
            hello_s: 1.0,
            settling_s: None,
            fsr_inner_hops: 2,
            fsr_outer_factor: 3.0,
            neighbor_loss_intervals: 3,
            tc_trigger: TcTrigger::Immediate,
        }
    }
}

impl ProtocolConfig {
    pub fn settling(&self) -> f64 {
        self.settling_s.unwrap_or(1.5 * self.periodic_s)
    }

    pub fn fsr_outer_interval(&self) -> f64 {
        self.fsr_outer_factor * self.periodic_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub duration_s: f64,
    pub seed: Option<u64>,
    pub nrl: NrlCounting,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            duration_s: 200.0,
            seed: None,
            nrl: NrlCounting::PerHop,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub network: NetworkConfig,
    pub traffic: TrafficConfig,
    pub mobility: MobilityConfig,
    pub protocol: ProtocolConfig,
    pub sim: SimConfig,
}

fn check(ok: bool, key: &'static str, reason: impl Into<String>) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::Invalid {
            key,
            reason: reason.into(),
        })
    }
}

fn positive(v: f64, key: &'static str) -> Result<(), ConfigError> {
    check(
        v.is_finite() && v > 0.0,
        key,
        format!("must be finite and > 0, got {v}"),
    )
}

fn non_negative(v: f64, key: &'static str) -> Result<(), ConfigError> {
    check(
        v.is_finite() && v >= 0.0,
        key,
        format!("must be finite and >= 0, got {v}"),
    )
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: ScenarioConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = &self.network;
        check(n.nodes >= 1, "network.nodes", "must be >= 1")?;
        positive(n.area_m, "network.area_m")?;
        positive(n.range_m, "network.range_m")?;
        positive(n.bandwidth_bps, "network.bandwidth_bps")?;
        non_negative(n.propagation_s, "network.propagation_s")?;

        let t = &self.traffic;
        non_negative(t.rate_pps, "traffic.rate_pps")?;
        check(t.payload_bytes > 0, "traffic.payload_bytes", "must be > 0")?;
        non_negative(t.start_s, "traffic.start_s")?;
        check(
            t.flows == 0 || n.nodes >= 2,
            "traffic.flows",
            "flows need at least two nodes",
        )?;

        let m = &self.mobility;
        non_negative(m.speed_min, "mobility.speed_min")?;
        non_negative(m.pause_s, "mobility.pause_s")?;
        positive(m.step_s, "mobility.step_s")?;
        if m.model == MobilityModel::RandomWaypoint {
            positive(m.speed_min, "mobility.speed_min")?;
            check(
                m.speed_max.is_finite() && m.speed_max >= m.speed_min,
                "mobility.speed_max",
                format!(
                    "must be >= speed_min ({}), got {}",
                    m.speed_min, m.speed_max
                ),
            )?;
        }

        let p = &self.protocol;
        positive(p.periodic_s, "protocol.periodic_s")?;
        positive(p.hello_s, "protocol.hello_s")?;
        if let Some(s) = p.settling_s {
            non_negative(s, "protocol.settling_s")?;
        }
        check(
            p.fsr_inner_hops >= 1,
            "protocol.fsr_inner_hops",
            "must be >= 1",
        )?;
        check(
            p.fsr_outer_factor.is_finite() && p.fsr_outer_factor >= 1.0,
            "protocol.fsr_outer_factor",
            "must be >= 1",
        )?;
        check(
            p.neighbor_loss_intervals >= 1,
            "protocol.neighbor_loss_intervals",
            "must be >= 1",
        )?;

        non_negative(self.sim.duration_s, "sim.duration_s")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_setup() {
        let c = ScenarioConfig::default();
        assert_eq!(c.network.nodes, 50);
        assert_eq!(c.network.bandwidth_bps, 2e6);
        assert_eq!(c.traffic.payload_bytes, 512);
        assert_eq!(c.network.area_m, 1000.0);
        assert_eq!(c.protocol.settling(), 7.5);
        c.validate().unwrap();
    }

    #[test]
    fn parses_sections_and_keeps_defaults() {
        let c = ScenarioConfig::from_toml_str(
            "[network]\nnodes = 20\n\n[protocol]\nname = \"olsr\"\nhello_s = 0.5\n",
        )
        .unwrap();
        assert_eq!(c.network.nodes, 20);
        assert_eq!(c.protocol.name, ProtocolKind::Olsr);
        assert_eq!(c.protocol.hello_s, 0.5);
        assert_eq!(c.traffic, TrafficConfig::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ScenarioConfig::from_toml_str("[network]\nnodez = 3\n").unwrap_err();
        assert!(err.to_string().contains("nodez"), "{err}");
    }

    #[test]
    fn invalid_value_is_named() {
        let err = ScenarioConfig::from_toml_str("[protocol]\nperiodic_s = -1.0\n").unwrap_err();
        assert!(err.to_string().contains("protocol.periodic_s"), "{err}");
        let err = ScenarioConfig::from_toml_str("[protocol]\nname = \"aodv\"\n").unwrap_err();
        assert!(err.to_string().contains("aodv"), "{err}");
    }

    #[test]
    fn round_trips_through_text() {
        let mut c = ScenarioConfig::default();
        c.protocol.settling_s = Some(2.0);
        c.sim.seed = Some(9);
        let back = ScenarioConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }
}

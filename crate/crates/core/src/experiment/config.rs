//! Experiment configuration: a TOML document with dotted sections.
//!
//! ```toml
//! topology_path = "data/ieee14.topo"   # omitted: built-in IEEE 14-bus graph
//! output_path = "results.csv"
//! schemes = ["OTSS-FR", "OTSS-AR5", "FG-50GHz", "FG-6.25GHz"]
//! loads_erlangs = [10, 20, 30, 40, 50, 60, 70, 80]
//! seeds = [1, 2, 3]
//! flexgrid_k = 5
//! workers = 0                          # 0: one per available core
//!
//! [workload]
//! paradigm = "random"                  # random | p2p | hub:<node>
//! request_count = 100000
//! warmup_count = 10000
//! mean_holding_s = 100.0
//! class = { name = "Teleprotection", bandwidth_bps = 500e3, latency_bound_s = 10e-3 }
//!
//! [otss]
//! frame_s = 1e-3
//! slice_s = 1e-5
//!
//! [grid]
//! grooming_delay_s = 5e-3
//! ```
//!
//! Every field is optional; omitted ones take the defaults shown.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flexgrid::{FlexGridError, GridConfig};
use crate::otss::{OtssConfig, OtssError};
use crate::sim::Scheme;
use crate::traffic::{Paradigm, TrafficClass, TrafficError};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("`{key}`: {msg}")]
    Constraint { key: String, msg: String },
}

impl ConfigError {
    fn constraint(key: impl Into<String>, msg: impl ToString) -> Self {
        ConfigError::Constraint {
            key: key.into(),
            msg: msg.to_string(),
        }
    }

    /// The offending key, when the error names one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Constraint { key, .. } => Some(key),
            ConfigError::Syntax(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadTemplate {
    pub paradigm: Paradigm,
    pub request_count: usize,
    pub warmup_count: usize,
    pub mean_holding_s: f64,
    pub class: TrafficClass,
}

impl Default for WorkloadTemplate {
    fn default() -> Self {
        WorkloadTemplate {
            paradigm: Paradigm::RandomUniform,
            request_count: 100_000,
            warmup_count: 10_000,
            mean_holding_s: 100.0,
            class: TrafficClass::teleprotection(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology_path: Option<PathBuf>,
    pub output_path: PathBuf,
    pub schemes: Vec<Scheme>,
    pub loads_erlangs: Vec<f64>,
    pub seeds: Vec<u64>,
    pub flexgrid_k: usize,
    pub workers: usize,
    pub workload: WorkloadTemplate,
    pub otss: OtssConfig,
    pub grid: GridConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            topology_path: None,
            output_path: PathBuf::from("results.csv"),
            schemes: vec![
                Scheme::OtssFixed,
                Scheme::OtssAlternate { k: 5 },
                Scheme::FlexiGrid {
                    slot_width_hz: 50e9,
                },
                Scheme::FlexiGrid {
                    slot_width_hz: 25e9,
                },
                Scheme::FlexiGrid {
                    slot_width_hz: 12.5e9,
                },
                Scheme::FlexiGrid {
                    slot_width_hz: 6.25e9,
                },
            ],
            loads_erlangs: (1..=8).map(|i| i as f64 * 10.0).collect(),
            seeds: vec![1, 2, 3],
            flexgrid_k: 5,
            workers: 0,
            workload: WorkloadTemplate::default(),
            otss: OtssConfig::default(),
            grid: GridConfig::default(),
        }
    }
}

fn otss_key(e: &OtssError) -> String {
    match e {
        OtssError::FrameNotMultiple { .. } => "otss.slice_s".into(),
        OtssError::NonPositive { field, .. } => format!("otss.{field}"),
        _ => "otss".into(),
    }
}

fn grid_key(e: &FlexGridError) -> String {
    match e {
        FlexGridError::SlotNotDivisor { .. } | FlexGridError::TooManySlots { .. } => {
            "grid.slot_width_hz".into()
        }
        FlexGridError::NonPositive { field, .. } => format!("grid.{field}"),
        FlexGridError::NegativeDelay(_) => "grid.grooming_delay_s".into(),
        _ => "grid".into(),
    }
}

impl ExperimentConfig {
    /// Parses and validates a config document; omitted fields take their
    /// defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn render(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schemes.is_empty() {
            return Err(ConfigError::constraint(
                "schemes",
                "at least one scheme is required",
            ));
        }
        if self.loads_erlangs.is_empty() {
            return Err(ConfigError::constraint(
                "loads_erlangs",
                "at least one load is required",
            ));
        }
        if let Some(l) = self
            .loads_erlangs
            .iter()
            .find(|l| !(**l > 0.0 && l.is_finite()))
        {
            return Err(ConfigError::constraint(
                "loads_erlangs",
                format!("load {l} must be positive"),
            ));
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::constraint(
                "seeds",
                "at least one seed is required",
            ));
        }
        if self.flexgrid_k == 0 {
            return Err(ConfigError::constraint("flexgrid_k", "must be at least 1"));
        }
        self.otss
            .validate()
            .map_err(|e| ConfigError::constraint(otss_key(&e), e))?;
        self.grid
            .validate()
            .map_err(|e| ConfigError::constraint(grid_key(&e), e))?;
        for s in &self.schemes {
            if let Scheme::FlexiGrid { slot_width_hz } = *s {
                GridConfig {
                    slot_width_hz,
                    ..self.grid.clone()
                }
                .validate()
                .map_err(|e| ConfigError::constraint("schemes", format!("{s}: {e}")))?;
            }
        }
        let w = &self.workload;
        if w.request_count == 0 {
            return Err(ConfigError::constraint(
                "workload.request_count",
                "must be at least 1",
            ));
        }
        if w.warmup_count >= w.request_count {
            return Err(ConfigError::constraint(
                "workload.warmup_count",
                format!("must be below request_count ({})", w.request_count),
            ));
        }
        if !(w.mean_holding_s > 0.0 && w.mean_holding_s.is_finite()) {
            return Err(ConfigError::constraint(
                "workload.mean_holding_s",
                "must be positive",
            ));
        }
        w.class.validate().map_err(|e| {
            let key = match e {
                TrafficError::NonPositive { field, .. } => format!("workload.class.{field}"),
                _ => "workload.class".into(),
            };
            ConfigError::constraint(key, e)
        })?;
        Ok(())
    }

    /// Largest route depth any configured scheme needs.
    pub fn route_depth(&self) -> usize {
        self.schemes
            .iter()
            .map(|s| s.route_depth(self.flexgrid_k))
            .max()
            .unwrap_or(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.otss.frame_s, 1e-3);
        assert_eq!(c.otss.slice_s, 1e-5);
        assert_eq!(c.otss.reserved_bandwidth_hz, 50e9);
        assert_eq!(c.workload.class.bandwidth_bps, 500e3);
        assert_eq!(c.workload.class.latency_bound_s, 10e-3);
        assert_eq!(c.flexgrid_k, 5);
        assert!(c.schemes.contains(&Scheme::OtssAlternate { k: 5 }));
        assert_eq!(
            c.loads_erlangs,
            vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0]
        );
    }

    #[test]
    fn slice_must_divide_frame() {
        let e = ExperimentConfig::parse("otss.slice_s = 3e-5").unwrap_err();
        assert_eq!(e.key(), Some("otss.slice_s"));
    }

    #[test]
    fn slot_width_must_divide_band() {
        let e = ExperimentConfig::parse("grid.slot_width_hz = 40e9").unwrap_err();
        assert_eq!(e.key(), Some("grid.slot_width_hz"));
        let e = ExperimentConfig::parse("schemes = [\"FG-40GHz\"]").unwrap_err();
        assert_eq!(e.key(), Some("schemes"));
    }

    #[test]
    fn unknown_key_and_type_mismatch_are_named() {
        let e = ExperimentConfig::parse("otss.frame_ms = 1").unwrap_err();
        assert!(e.to_string().contains("frame_ms"), "{e}");
        let e = ExperimentConfig::parse("seeds = \"one\"").unwrap_err();
        assert!(e.to_string().contains("seeds"), "{e}");
        let e = ExperimentConfig::parse("schemes = [\"OTSS-XX\"]").unwrap_err();
        assert!(e.to_string().contains("OTSS-XX"), "{e}");
    }

    #[test]
    fn workload_constraints() {
        let e = ExperimentConfig::parse("workload.warmup_count = 100000").unwrap_err();
        assert_eq!(e.key(), Some("workload.warmup_count"));
        let e = ExperimentConfig::parse("loads_erlangs = []").unwrap_err();
        assert_eq!(e.key(), Some("loads_erlangs"));
        let e = ExperimentConfig::parse(
            "[workload.class]\nname = \"x\"\nbandwidth_bps = 0\nlatency_bound_s = 1",
        )
        .unwrap_err();
        assert_eq!(e.key(), Some("workload.class.bandwidth_bps"));
    }

    #[test]
    fn render_round_trip() {
        let mut c = ExperimentConfig {
            topology_path: Some("topo/x.topo".into()),
            seeds: vec![7, 11],
            ..ExperimentConfig::default()
        };
        c.workload.paradigm = Paradigm::HubSpoke {
            hub: crate::topology::NodeId(2),
        };
        assert_eq!(ExperimentConfig::parse(&c.render()).unwrap(), c);
    }
}

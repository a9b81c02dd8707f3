//! Seeded dynamic workloads: Poisson arrivals, exponential holding times and
//! endpoint pairs drawn per communication paradigm.
//!
//! Randomness comes from ChaCha8 with one stream per concern, all keyed by
//! the same 64-bit seed:
//!
//! | stream | use                |
//! |--------|--------------------|
//! | 0      | inter-arrival gaps |
//! | 1      | holding times      |
//! | 2      | endpoint pairs     |
//!
//! Changing the paradigm therefore never moves an arrival instant.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{NodeId, Topology};

pub const STREAM_ARRIVALS: u64 = 0;
pub const STREAM_HOLDING: u64 = 1;
pub const STREAM_PAIRS: u64 = 2;

#[derive(Debug, Error, PartialEq)]
pub enum TrafficError {
    #[error("hub node {hub} is not in the topology ({nodes} nodes)")]
    InvalidHub { hub: usize, nodes: usize },
    #[error("topology needs at least 2 nodes")]
    TooFewNodes,
    #[error("{field} must be positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("warmup_count ({warmup}) must be below request_count ({count})")]
    Warmup { warmup: usize, count: usize },
    #[error("unknown traffic class `{0}`")]
    UnknownClass(String),
    #[error("cannot parse paradigm `{0}` (expected random, p2p or hub:<node>)")]
    BadParadigm(String),
}

/// Bandwidth and latency requirement of one application class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficClass {
    pub name: String,
    pub bandwidth_bps: f64,
    pub latency_bound_s: f64,
}

impl TrafficClass {
    pub fn new(name: &str, bandwidth_bps: f64, latency_bound_s: f64) -> Self {
        TrafficClass {
            name: name.to_string(),
            bandwidth_bps,
            latency_bound_s,
        }
    }

    /// Teleprotection: 500 kb/s with a 10 ms bound.
    pub fn teleprotection() -> Self {
        Self::new("Teleprotection", 500e3, 10e-3)
    }

    /// The smart-grid application table. Where the table gives a range the
    /// loosest latency and the bandwidth that fits a single time slice are
    /// used.
    pub fn catalog() -> Vec<TrafficClass> {
        vec![
            Self::teleprotection(),
            Self::new("LoadShedding", 500e3, 10e-3),
            Self::new("SCADA", 800e3, 200e-3),
            Self::new("SmartMetering", 500e3, 1.0),
            Self::new("FileTransfer", 200e6, 1.0),
        ]
    }

    pub fn by_name(name: &str) -> Result<Self, TrafficError> {
        Self::catalog()
            .into_iter()
            .find(|c| c.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| TrafficError::UnknownClass(name.to_string()))
    }

    pub fn validate(&self) -> Result<(), TrafficError> {
        if self.bandwidth_bps.is_nan() || self.bandwidth_bps <= 0.0 {
            return Err(TrafficError::NonPositive {
                field: "bandwidth_bps",
                value: self.bandwidth_bps,
            });
        }
        if self.latency_bound_s.is_nan() || self.latency_bound_s <= 0.0 {
            return Err(TrafficError::NonPositive {
                field: "latency_bound_s",
                value: self.latency_bound_s,
            });
        }
        Ok(())
    }
}

impl Default for TrafficClass {
    fn default() -> Self {
        Self::teleprotection()
    }
}

/// How request endpoints are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Paradigm {
    /// Between a hub (control center) and any other node, either direction.
    HubSpoke { hub: NodeId },
    /// Between physically adjacent nodes.
    PeerToPeer,
    /// Uniform over all ordered node pairs.
    #[default]
    RandomUniform,
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Paradigm::HubSpoke { hub } => write!(f, "hub:{}", hub.0),
            Paradigm::PeerToPeer => write!(f, "p2p"),
            Paradigm::RandomUniform => write!(f, "random"),
        }
    }
}

impl FromStr for Paradigm {
    type Err = TrafficError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TrafficError::BadParadigm(s.to_string());
        match s.trim() {
            "random" => Ok(Paradigm::RandomUniform),
            "p2p" => Ok(Paradigm::PeerToPeer),
            other => {
                let hub = other.strip_prefix("hub:").ok_or_else(bad)?;
                let hub = hub.trim().parse::<usize>().map_err(|_| bad())?;
                Ok(Paradigm::HubSpoke { hub: NodeId(hub) })
            }
        }
    }
}

impl TryFrom<String> for Paradigm {
    type Error = TrafficError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Paradigm> for String {
    fn from(p: Paradigm) -> String {
        p.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficRequest {
    pub id: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub bandwidth_bps: f64,
    pub latency_bound_s: f64,
    pub arrival_time_s: f64,
    pub holding_time_s: f64,
    pub class_name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadConfig {
    /// Network-wide offered load (arrival rate times mean holding time).
    pub load_erlangs: f64,
    pub mean_holding_s: f64,
    pub request_count: usize,
    pub warmup_count: usize,
    pub class: TrafficClass,
    pub paradigm: Paradigm,
    pub seed: u64,
}

impl WorkloadConfig {
    pub fn arrival_rate(&self) -> f64 {
        self.load_erlangs / self.mean_holding_s
    }

    pub fn validate(&self, topology: &Topology) -> Result<(), TrafficError> {
        if topology.node_count() < 2 {
            return Err(TrafficError::TooFewNodes);
        }
        if self.load_erlangs.is_nan() || self.load_erlangs <= 0.0 {
            return Err(TrafficError::NonPositive {
                field: "load_erlangs",
                value: self.load_erlangs,
            });
        }
        if self.mean_holding_s.is_nan() || self.mean_holding_s <= 0.0 {
            return Err(TrafficError::NonPositive {
                field: "mean_holding_s",
                value: self.mean_holding_s,
            });
        }
        if self.warmup_count >= self.request_count {
            return Err(TrafficError::Warmup {
                warmup: self.warmup_count,
                count: self.request_count,
            });
        }
        self.class.validate()?;
        if let Paradigm::HubSpoke { hub } = self.paradigm {
            if hub.0 >= topology.node_count() {
                return Err(TrafficError::InvalidHub {
                    hub: hub.0,
                    nodes: topology.node_count(),
                });
            }
        }
        Ok(())
    }
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws one ordered endpoint pair. The topology must have at least two
/// nodes and a `HubSpoke` hub must be one of them.
pub fn sample_pair<R: Rng + ?Sized>(
    topology: &Topology,
    paradigm: Paradigm,
    rng: &mut R,
) -> (NodeId, NodeId) {
    let n = topology.node_count();
    match paradigm {
        Paradigm::RandomUniform => {
            let src = rng.random_range(0..n);
            let mut dst = rng.random_range(0..n - 1);
            if dst >= src {
                dst += 1;
            }
            (NodeId(src), NodeId(dst))
        }
        Paradigm::HubSpoke { hub } => {
            let mut other = rng.random_range(0..n - 1);
            if other >= hub.0 {
                other += 1;
            }
            if rng.random_bool(0.5) {
                (hub, NodeId(other))
            } else {
                (NodeId(other), hub)
            }
        }
        Paradigm::PeerToPeer => {
            let link = topology.link(crate::topology::LinkId(
                rng.random_range(0..topology.link_count()),
            ));
            (link.tail, link.head)
        }
    }
}

/// Generates `request_count` requests. Identical inputs give a bitwise
/// identical sequence.
pub fn generate_workload(
    topology: &Topology,
    config: &WorkloadConfig,
) -> Result<Vec<TrafficRequest>, TrafficError> {
    config.validate(topology)?;
    let gaps = Exp::new(config.arrival_rate()).expect("rate validated positive");
    let holds = Exp::new(1.0 / config.mean_holding_s).expect("mean validated positive");
    let mut arrivals = stream_rng(config.seed, STREAM_ARRIVALS);
    let mut holding = stream_rng(config.seed, STREAM_HOLDING);
    let mut pairs = stream_rng(config.seed, STREAM_PAIRS);

    let mut now = 0.0f64;
    let mut out = Vec::with_capacity(config.request_count);
    for id in 0..config.request_count {
        let next = now + gaps.sample(&mut arrivals);
        // keep arrivals strictly increasing even for a zero draw
        now = if next > now {
            next
        } else {
            f64::from_bits(now.to_bits() + 1)
        };
        let mut hold = holds.sample(&mut holding);
        if hold <= 0.0 {
            hold = f64::MIN_POSITIVE;
        }
        let (src, dst) = sample_pair(topology, config.paradigm, &mut pairs);
        out.push(TrafficRequest {
            id,
            src,
            dst,
            bandwidth_bps: config.class.bandwidth_bps,
            latency_bound_s: config.class.latency_bound_s,
            arrival_time_s: now,
            holding_time_s: hold,
            class_name: config.class.name.clone(),
        });
    }
    Ok(out)
}

//! Event-driven loss-system simulation of one scheme over one workload.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flexgrid::{FlexGridError, FlexGridNetwork, GridConfig};
use crate::otss::{admit_otss, OtssCalendars, OtssConfig, OtssError, RoutingMode};
use crate::topology::{RouteTable, Topology};
use crate::traffic::TrafficRequest;
use crate::BlockReason;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("workload is not sorted by arrival time at request index {0}")]
    Unsorted(usize),
    #[error("route table holds {have} paths per pair but the scheme needs {need}")]
    RouteTableTooShallow { have: usize, need: usize },
    #[error("route table was built for {table} nodes, topology has {topology}")]
    RouteTableMismatch { table: usize, topology: usize },
    #[error(transparent)]
    Otss(#[from] OtssError),
    #[error(transparent)]
    Grid(#[from] FlexGridError),
    #[error("runs differ in {0}")]
    Mismatch(&'static str),
    #[error("no runs to merge")]
    NoRuns,
    #[error("cannot parse scheme `{0}` (expected OTSS-FR, OTSS-AR<k> or FG-<width>GHz)")]
    BadScheme(String),
}

/// The resource model a run is evaluated under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Scheme {
    OtssFixed,
    OtssAlternate { k: usize },
    FlexiGrid { slot_width_hz: f64 },
}

impl Scheme {
    /// Candidate paths per pair the scheme needs from the route table.
    pub fn route_depth(&self, flexgrid_k: usize) -> usize {
        match *self {
            Scheme::OtssFixed => 1,
            Scheme::OtssAlternate { k } => k,
            Scheme::FlexiGrid { .. } => flexgrid_k,
        }
    }

    pub fn is_otss(&self) -> bool {
        !matches!(self, Scheme::FlexiGrid { .. })
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Scheme::OtssFixed => write!(f, "OTSS-FR"),
            Scheme::OtssAlternate { k } => write!(f, "OTSS-AR{k}"),
            Scheme::FlexiGrid { slot_width_hz } => write!(f, "FG-{}GHz", slot_width_hz / 1e9),
        }
    }
}

impl FromStr for Scheme {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SimError::BadScheme(s.to_string());
        let upper = s.trim().to_ascii_uppercase();
        if upper == "OTSS-FR" {
            return Ok(Scheme::OtssFixed);
        }
        if let Some(k) = upper.strip_prefix("OTSS-AR") {
            let k = k.parse::<usize>().map_err(|_| bad())?;
            if k == 0 {
                return Err(bad());
            }
            return Ok(Scheme::OtssAlternate { k });
        }
        if let Some(rest) = upper.strip_prefix("FG-") {
            let ghz = rest.strip_suffix("GHZ").ok_or_else(bad)?;
            let ghz = ghz.parse::<f64>().map_err(|_| bad())?;
            if !(ghz > 0.0 && ghz.is_finite()) {
                return Err(bad());
            }
            return Ok(Scheme::FlexiGrid {
                slot_width_hz: ghz * 1e9,
            });
        }
        Err(bad())
    }
}

impl TryFrom<String> for Scheme {
    type Error = SimError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Scheme> for String {
    fn from(s: Scheme) -> String {
        s.to_string()
    }
}

/// Parameters shared by every scheme in a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub otss: OtssConfig,
    /// Flexi-grid parameters; the slot width comes from the scheme.
    pub grid: GridConfig,
    /// Candidate routes a new lightpath may try.
    pub flexgrid_k: usize,
    /// Leading requests that load the network but are not counted.
    pub warmup_count: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            otss: OtssConfig::default(),
            grid: GridConfig::default(),
            flexgrid_k: 5,
            warmup_count: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Index into the workload.
    Arrival(usize),
    Departure {
        request_id: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time_s: f64,
    pub sequence: u64,
    pub kind: EventKind,
}

impl Event {
    fn class(&self) -> u8 {
        match self.kind {
            EventKind::Departure { .. } => 0,
            EventKind::Arrival(_) => 1,
        }
    }
}

impl Eq for Event {}

impl Ord for Event {
    // departures free resources before arrivals at the same instant
    fn cmp(&self, other: &Self) -> Ordering {
        self.time_s
            .total_cmp(&other.time_s)
            .then(self.class().cmp(&other.class()))
            .then(self.sequence.cmp(&other.sequence))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub offered: u64,
    pub admitted: u64,
    pub blocked_latency: u64,
    pub blocked_resource: u64,
    /// Sum of expected latency over admitted requests.
    pub latency_sum_s: f64,
    /// Largest worst-case latency over admitted requests.
    pub latency_max_s: f64,
    /// Admitted requests that did not use their first candidate path.
    pub alternate_routed: u64,
}

impl Metrics {
    pub fn blocked(&self) -> u64 {
        self.blocked_latency + self.blocked_resource
    }

    /// Zero when nothing was offered.
    pub fn blocking_probability(&self) -> f64 {
        if self.offered == 0 {
            0.0
        } else {
            self.blocked() as f64 / self.offered as f64
        }
    }

    pub fn average_latency_s(&self) -> f64 {
        if self.admitted == 0 {
            0.0
        } else {
            self.latency_sum_s / self.admitted as f64
        }
    }

    /// Share of blocked requests refused for latency; zero with no blocking.
    pub fn blocked_latency_share(&self) -> f64 {
        if self.blocked() == 0 {
            0.0
        } else {
            self.blocked_latency as f64 / self.blocked() as f64
        }
    }

    fn absorb(&mut self, other: &Metrics) {
        self.offered += other.offered;
        self.admitted += other.admitted;
        self.blocked_latency += other.blocked_latency;
        self.blocked_resource += other.blocked_resource;
        self.latency_sum_s += other.latency_sum_s;
        self.latency_max_s = self.latency_max_s.max(other.latency_max_s);
        self.alternate_routed += other.alternate_routed;
    }
}

/// Mutable network state of one run.
#[derive(Debug, Clone)]
pub enum NetworkState {
    Otss {
        calendars: OtssCalendars,
        mode: RoutingMode,
    },
    FlexGrid(FlexGridNetwork),
}

impl NetworkState {
    pub fn is_quiescent(&self) -> bool {
        match self {
            NetworkState::Otss { calendars, .. } => calendars.is_quiescent(),
            NetworkState::FlexGrid(net) => net.is_quiescent(),
        }
    }

    pub fn audit(&self) -> Result<(), String> {
        match self {
            NetworkState::Otss { calendars, .. } => calendars.audit(),
            NetworkState::FlexGrid(net) => net.audit(),
        }
    }
}

/// Outcome of one arrival, as handed to observers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Admission {
    Admitted {
        worst_case_s: f64,
        expected_s: f64,
        alternate: bool,
    },
    Blocked(BlockReason),
}

pub struct Simulation<'a> {
    routes: &'a RouteTable,
    state: NetworkState,
    warmup_count: usize,
}

impl<'a> Simulation<'a> {
    pub fn new(
        topology: &Topology,
        routes: &'a RouteTable,
        scheme: Scheme,
        config: &SimConfig,
    ) -> Result<Self, SimError> {
        if routes.node_count() != topology.node_count() {
            return Err(SimError::RouteTableMismatch {
                table: routes.node_count(),
                topology: topology.node_count(),
            });
        }
        let need = scheme.route_depth(config.flexgrid_k);
        if routes.k() < need {
            return Err(SimError::RouteTableTooShallow {
                have: routes.k(),
                need,
            });
        }
        let state = match scheme {
            Scheme::OtssFixed | Scheme::OtssAlternate { .. } => {
                config.otss.validate()?;
                let mode = match scheme {
                    Scheme::OtssAlternate { k } => RoutingMode::Alternate { k },
                    _ => RoutingMode::Fixed,
                };
                NetworkState::Otss {
                    calendars: OtssCalendars::new(topology, config.otss.clone()),
                    mode,
                }
            }
            Scheme::FlexiGrid { slot_width_hz } => {
                let grid = GridConfig {
                    slot_width_hz,
                    ..config.grid.clone()
                };
                NetworkState::FlexGrid(FlexGridNetwork::new(topology, grid, config.flexgrid_k)?)
            }
        };
        Ok(Simulation {
            routes,
            state,
            warmup_count: config.warmup_count,
        })
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    fn admit(&mut self, request: &TrafficRequest) -> Admission {
        match &mut self.state {
            NetworkState::Otss { calendars, mode } => {
                match admit_otss(request, self.routes, calendars, *mode) {
                    Ok(c) => Admission::Admitted {
                        worst_case_s: c.worst_case_latency_s,
                        expected_s: c.expected_latency_s,
                        alternate: c.route_rank > 0,
                    },
                    Err(reason) => Admission::Blocked(reason),
                }
            }
            NetworkState::FlexGrid(net) => match net.min_thv_route(request, self.routes) {
                // grooming latency is deterministic
                Ok(g) => Admission::Admitted {
                    worst_case_s: g.latency_s,
                    expected_s: g.latency_s,
                    alternate: false,
                },
                Err(reason) => Admission::Blocked(reason),
            },
        }
    }

    fn depart(&mut self, request_id: usize) {
        match &mut self.state {
            NetworkState::Otss { calendars, .. } => {
                calendars
                    .release(request_id)
                    .expect("departing request is committed");
            }
            NetworkState::FlexGrid(net) => {
                net.release(request_id)
                    .expect("departing request is carried");
            }
        }
    }

    pub fn run(&mut self, workload: &[TrafficRequest]) -> Result<Metrics, SimError> {
        self.run_observed(workload, |_, _, _| {})
    }

    /// Runs to the last event, calling `observer` after each one with the
    /// event, the arrival outcome (if any) and the network state.
    pub fn run_observed<F>(
        &mut self,
        workload: &[TrafficRequest],
        mut observer: F,
    ) -> Result<Metrics, SimError>
    where
        F: FnMut(&Event, Option<&Admission>, &NetworkState),
    {
        if let Some(i) = workload.windows(2).position(|p| {
            p[0].arrival_time_s
                .partial_cmp(&p[1].arrival_time_s)
                .is_none_or(|o| o.is_gt())
        }) {
            return Err(SimError::Unsorted(i + 1));
        }
        let mut metrics = Metrics::default();
        let mut queue = BinaryHeap::with_capacity(workload.len() * 2);
        let mut sequence = 0u64;
        for (i, r) in workload.iter().enumerate() {
            queue.push(Reverse(Event {
                time_s: r.arrival_time_s,
                sequence,
                kind: EventKind::Arrival(i),
            }));
            sequence += 1;
        }

        while let Some(Reverse(event)) = queue.pop() {
            let outcome = match event.kind {
                EventKind::Arrival(i) => {
                    let request = &workload[i];
                    let outcome = self.admit(request);
                    let counted = i >= self.warmup_count;
                    match outcome {
                        Admission::Admitted {
                            worst_case_s,
                            expected_s,
                            alternate,
                        } => {
                            queue.push(Reverse(Event {
                                time_s: request.arrival_time_s + request.holding_time_s,
                                sequence,
                                kind: EventKind::Departure {
                                    request_id: request.id,
                                },
                            }));
                            sequence += 1;
                            if counted {
                                metrics.offered += 1;
                                metrics.admitted += 1;
                                metrics.latency_sum_s += expected_s;
                                metrics.latency_max_s = metrics.latency_max_s.max(worst_case_s);
                                metrics.alternate_routed += u64::from(alternate);
                            }
                        }
                        Admission::Blocked(reason) => {
                            if counted {
                                metrics.offered += 1;
                                match reason {
                                    BlockReason::Latency => metrics.blocked_latency += 1,
                                    BlockReason::Resource => metrics.blocked_resource += 1,
                                }
                            }
                        }
                    }
                    Some(outcome)
                }
                EventKind::Departure { request_id } => {
                    self.depart(request_id);
                    None
                }
            };
            observer(&event, outcome.as_ref(), &self.state);
        }
        Ok(metrics)
    }
}

/// Runs `scheme` over `workload` from an empty network.
pub fn run_simulation(
    topology: &Topology,
    routes: &RouteTable,
    scheme: Scheme,
    workload: &[TrafficRequest],
    config: &SimConfig,
) -> Result<Metrics, SimError> {
    Simulation::new(topology, routes, scheme, config)?.run(workload)
}

/// Erlang-B loss probability for `load_erlangs` offered to `servers`
/// servers, by the recurrence `B(c) = E B(c-1) / (c + E B(c-1))`.
pub fn erlang_b(load_erlangs: f64, servers: u32) -> f64 {
    let mut b = 1.0;
    for c in 1..=servers {
        let eb = load_erlangs * b;
        b = eb / (c as f64 + eb);
    }
    b
}

/// One finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scheme: Scheme,
    pub load_erlangs: f64,
    pub seed: u64,
    pub metrics: Metrics,
}

/// Pooled counters plus across-run dispersion.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedMetrics {
    pub scheme: Scheme,
    pub load_erlangs: f64,
    pub runs: usize,
    pub pooled: Metrics,
    pub blocking_mean: f64,
    pub blocking_std: f64,
    pub avg_latency_mean_s: f64,
    pub avg_latency_std_s: f64,
}

impl MergedMetrics {
    /// Standard error of the mean blocking across runs.
    pub fn blocking_stderr(&self) -> f64 {
        self.blocking_std / (self.runs as f64).sqrt()
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Merges runs of the same scheme and load.
pub fn merge_metrics(runs: &[RunRecord]) -> Result<MergedMetrics, SimError> {
    let first = runs.first().ok_or(SimError::NoRuns)?;
    if runs.iter().any(|r| r.scheme != first.scheme) {
        return Err(SimError::Mismatch("scheme"));
    }
    if runs.iter().any(|r| r.load_erlangs != first.load_erlangs) {
        return Err(SimError::Mismatch("load"));
    }
    let mut pooled = Metrics::default();
    for r in runs {
        pooled.absorb(&r.metrics);
    }
    let blocking: Vec<f64> = runs
        .iter()
        .map(|r| r.metrics.blocking_probability())
        .collect();
    let latency: Vec<f64> = runs
        .iter()
        .filter(|r| r.metrics.admitted > 0)
        .map(|r| r.metrics.average_latency_s())
        .collect();
    let (blocking_mean, blocking_std) = mean_std(&blocking);
    let (avg_latency_mean_s, avg_latency_std_s) = mean_std(&latency);
    Ok(MergedMetrics {
        scheme: first.scheme,
        load_erlangs: first.load_erlangs,
        runs: runs.len(),
        pooled,
        blocking_mean,
        blocking_std,
        avg_latency_mean_s,
        avg_latency_std_s,
    })
}

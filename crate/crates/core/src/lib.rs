//! Discrete-event comparison of optical time slice switching (OTSS) and
//! flexi-grid optical networking for latency-bounded smart-grid traffic.
//!
//! The crate is organised bottom-up:
//!
//! - [`topology`]: the fiber graph, propagation delays and K-shortest paths.
//! - [`traffic`]: seeded Poisson workloads over the smart-grid paradigms.
//! - [`otss`]: per-link time-slice calendars and shifting-slice admission.
//! - [`flexgrid`]: slotted spectrum, lightpaths and MinTHV grooming.
//! - [`sim`]: the event loop, metrics and the Erlang-B reference.
//! - [`experiment`]: config files, load sweeps, CSV output and summaries.
//!
//! ```
//! use otss_sim::sim::{run_simulation, Scheme, SimConfig};
//! use otss_sim::topology::{RouteTable, Topology};
//! use otss_sim::traffic::{generate_workload, Paradigm, TrafficClass, WorkloadConfig};
//!
//! let topology = Topology::ieee14();
//! let routes = RouteTable::new(&topology, 5);
//! let workload = generate_workload(&topology, &WorkloadConfig {
//!     load_erlangs: 20.0,
//!     mean_holding_s: 100.0,
//!     request_count: 2_000,
//!     warmup_count: 200,
//!     class: TrafficClass::teleprotection(),
//!     paradigm: Paradigm::RandomUniform,
//!     seed: 1,
//! })
//! .unwrap();
//! let metrics = run_simulation(
//!     &topology,
//!     &routes,
//!     Scheme::OtssAlternate { k: 5 },
//!     &workload,
//!     &SimConfig::default(),
//! )
//! .unwrap();
//! assert_eq!(metrics.blocked(), 0);
//! ```

pub mod experiment;
pub mod flexgrid;
pub mod otss;
pub mod sim;
pub mod topology;
pub mod traffic;

/// Why a request was refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockReason {
    /// Every candidate route broke the latency bound.
    Latency,
    /// Some route met the bound but had no free resource.
    Resource,
}

// The guide chapters are compiled as doctests so their snippets stay in
// sync with the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/topology.md")]
    mod topology {}
    #[doc = include_str!("../../../book/src/traffic.md")]
    mod traffic {}
    #[doc = include_str!("../../../book/src/otss.md")]
    mod otss {}
    #[doc = include_str!("../../../book/src/flexgrid.md")]
    mod flexgrid {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}

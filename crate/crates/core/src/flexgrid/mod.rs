//! Flexi-grid benchmark: slotted spectrum, lightpaths with spectrum
//! continuity and MinTHV grooming over the virtual topology.
//!
//! Each lightpath occupies one grid slot end to end. Requests ride one or
//! more lightpaths; every intermediate virtual node electrically regrooms
//! the traffic and adds `grooming_delay_s`.

mod grooming;
mod spectrum;

pub use grooming::{flexgrid_latency, GroomedRoute, Lightpath};
pub use spectrum::SpectrumState;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{NodeId, PathSpec, RouteTable, Topology};

#[derive(Debug, Error, PartialEq)]
pub enum FlexGridError {
    #[error("slot_width_hz ({slot}) does not divide total_bandwidth_hz ({total})")]
    SlotNotDivisor { slot: f64, total: f64 },
    #[error("{slots} slots per link exceed the supported 64")]
    TooManySlots { slots: usize },
    #[error("{field} must be positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("grooming_delay_s must be non-negative, got {0}")]
    NegativeDelay(f64),
    #[error("request {0} is not carried")]
    UnknownRequest(usize),
    #[error("request {0} is already carried")]
    DuplicateRequest(usize),
    #[error("empty hop list")]
    EmptyRoute,
    #[error("lightpath {0} is not live")]
    UnknownLightpath(usize),
    #[error("lightpaths {prev} and {next} are not contiguous")]
    NonContiguous { prev: usize, next: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub total_bandwidth_hz: f64,
    pub slot_width_hz: f64,
    pub spectral_efficiency_bps_per_hz: f64,
    pub grooming_delay_s: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            total_bandwidth_hz: 50e9,
            slot_width_hz: 50e9,
            spectral_efficiency_bps_per_hz: 1.0,
            grooming_delay_s: 5e-3,
        }
    }
}

impl GridConfig {
    pub fn with_slot_width(slot_width_hz: f64) -> Self {
        GridConfig {
            slot_width_hz,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), FlexGridError> {
        for (field, value) in [
            ("total_bandwidth_hz", self.total_bandwidth_hz),
            ("slot_width_hz", self.slot_width_hz),
            (
                "spectral_efficiency_bps_per_hz",
                self.spectral_efficiency_bps_per_hz,
            ),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(FlexGridError::NonPositive { field, value });
            }
        }
        if !(self.grooming_delay_s >= 0.0 && self.grooming_delay_s.is_finite()) {
            return Err(FlexGridError::NegativeDelay(self.grooming_delay_s));
        }
        let ratio = self.total_bandwidth_hz / self.slot_width_hz;
        let rounded = ratio.round();
        if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * rounded {
            return Err(FlexGridError::SlotNotDivisor {
                slot: self.slot_width_hz,
                total: self.total_bandwidth_hz,
            });
        }
        if rounded > 64.0 {
            return Err(FlexGridError::TooManySlots {
                slots: rounded as usize,
            });
        }
        Ok(())
    }

    pub fn slots_per_link(&self) -> usize {
        (self.total_bandwidth_hz / self.slot_width_hz).round() as usize
    }

    pub fn lightpath_capacity_bps(&self) -> f64 {
        self.slot_width_hz * self.spectral_efficiency_bps_per_hz
    }
}

/// Live lightpaths and the groomed routes riding them.
#[derive(Debug, Clone, Default)]
pub struct VirtualTopology {
    lightpaths: BTreeMap<usize, Lightpath>,
    routes: BTreeMap<usize, GroomedRoute>,
    next_id: usize,
}

impl VirtualTopology {
    pub fn lightpaths(&self) -> &BTreeMap<usize, Lightpath> {
        &self.lightpaths
    }

    pub fn lightpath(&self, id: usize) -> Option<&Lightpath> {
        self.lightpaths.get(&id)
    }

    pub fn routes(&self) -> &BTreeMap<usize, GroomedRoute> {
        &self.routes
    }

    pub fn route(&self, request_id: usize) -> Option<&GroomedRoute> {
        self.routes.get(&request_id)
    }

    /// Latency of a contiguous chain of live lightpaths.
    pub fn chain_latency(&self, hops: &[usize], grid: &GridConfig) -> Result<f64, FlexGridError> {
        let mut delays = Vec::with_capacity(hops.len());
        let mut prev: Option<&Lightpath> = None;
        for &id in hops {
            let lp = self
                .lightpaths
                .get(&id)
                .ok_or(FlexGridError::UnknownLightpath(id))?;
            if let Some(p) = prev {
                if p.dst != lp.src {
                    return Err(FlexGridError::NonContiguous {
                        prev: p.id,
                        next: id,
                    });
                }
            }
            delays.push(lp.route.total_delay_s);
            prev = Some(lp);
        }
        flexgrid_latency(&delays, grid)
    }
}

/// Spectrum plus virtual topology for one flexi-grid run.
#[derive(Debug, Clone)]
pub struct FlexGridNetwork {
    grid: GridConfig,
    k: usize,
    spectrum: SpectrumState,
    vtopo: VirtualTopology,
}

impl FlexGridNetwork {
    /// `k` is how many candidate routes a new lightpath may try.
    pub fn new(topology: &Topology, grid: GridConfig, k: usize) -> Result<Self, FlexGridError> {
        grid.validate()?;
        Ok(FlexGridNetwork {
            spectrum: SpectrumState::new(topology.link_count(), grid.slots_per_link()),
            grid,
            k: k.max(1),
            vtopo: VirtualTopology::default(),
        })
    }

    pub fn grid(&self) -> &GridConfig {
        &self.grid
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn spectrum(&self) -> &SpectrumState {
        &self.spectrum
    }

    pub fn virtual_topology(&self) -> &VirtualTopology {
        &self.vtopo
    }

    pub fn is_quiescent(&self) -> bool {
        self.vtopo.lightpaths.is_empty() && self.vtopo.routes.is_empty() && self.spectrum.is_clear()
    }

    /// First (route, slot) a new `src -> dst` lightpath would take: the
    /// candidate routes in order, each with its lowest continuous free slot.
    pub fn probe_lightpath<'r>(
        &self,
        src: NodeId,
        dst: NodeId,
        routes: &'r RouteTable,
    ) -> Option<(&'r PathSpec, usize)> {
        let candidates = routes.paths(src, dst);
        candidates
            .iter()
            .take(self.k)
            .find_map(|r| self.spectrum.first_free_slot(r).map(|slot| (r, slot)))
    }

    /// Establishes an idle lightpath with first-fit routing and spectrum
    /// assignment. Returns its id, or `None` when no candidate route has a
    /// continuous free slot.
    pub fn establish_lightpath(
        &mut self,
        src: NodeId,
        dst: NodeId,
        routes: &RouteTable,
    ) -> Option<usize> {
        let (route, slot) = self.probe_lightpath(src, dst, routes)?;
        let id = self.vtopo.next_id;
        self.vtopo.next_id += 1;
        self.spectrum.claim(route, slot, id);
        let capacity = self.grid.lightpath_capacity_bps();
        self.vtopo.lightpaths.insert(
            id,
            Lightpath {
                id,
                src,
                dst,
                route: route.clone(),
                slot_index: slot,
                capacity_bps: capacity,
                residual_bps: capacity,
                carried: Default::default(),
            },
        );
        Some(id)
    }

    /// Tears down a lightpath that carries nothing.
    pub(crate) fn teardown(&mut self, id: usize) {
        let lp = self.vtopo.lightpaths.remove(&id).expect("live lightpath");
        debug_assert!(lp.carried.is_empty());
        self.spectrum.clear(&lp.route, lp.slot_index, id);
    }

    /// Returns the request's bandwidth to every hop and tears down
    /// lightpaths left idle.
    pub fn release(&mut self, request_id: usize) -> Result<GroomedRoute, FlexGridError> {
        let route = self
            .vtopo
            .routes
            .remove(&request_id)
            .ok_or(FlexGridError::UnknownRequest(request_id))?;
        for &hop in &route.hops {
            let lp = self
                .vtopo
                .lightpaths
                .get_mut(&hop)
                .expect("groomed route references live lightpaths");
            lp.carried.remove(&request_id);
            lp.residual_bps += route.bandwidth_bps;
            if lp.carried.is_empty() {
                lp.residual_bps = lp.capacity_bps;
                self.teardown(hop);
            }
        }
        Ok(route)
    }

    /// Checks spectrum conservation, continuity, capacity accounting, the
    /// route registry and the idle-teardown rule.
    pub fn audit(&self) -> Result<(), String> {
        let slots = self.spectrum.slots_per_link();
        let mut claimed = vec![None; self.spectrum.link_count() * slots];
        for lp in self.vtopo.lightpaths.values() {
            if lp.carried.is_empty() {
                return Err(format!("lightpath {} is idle but alive", lp.id));
            }
            for l in &lp.route.links {
                let cell = &mut claimed[l.0 * slots + lp.slot_index];
                if let Some(other) = *cell {
                    return Err(format!(
                        "{l} slot {} claimed by {other} and {}",
                        lp.slot_index, lp.id
                    ));
                }
                *cell = Some(lp.id);
                if self.spectrum.owner(*l, lp.slot_index) != Some(lp.id) {
                    return Err(format!(
                        "{l} slot {} not marked for lightpath {}",
                        lp.slot_index, lp.id
                    ));
                }
            }
            let used: f64 = lp
                .carried
                .iter()
                .map(|r| {
                    self.vtopo
                        .routes
                        .get(r)
                        .map_or(f64::NAN, |g| g.bandwidth_bps)
                })
                .sum();
            if lp.residual_bps < 0.0 || (used + lp.residual_bps - lp.capacity_bps).abs() > 1e-6 {
                return Err(format!(
                    "lightpath {}: carried {used} + residual {} != capacity {}",
                    lp.id, lp.residual_bps, lp.capacity_bps
                ));
            }
        }
        for link in 0..self.spectrum.link_count() {
            for slot in 0..slots {
                let l = crate::topology::LinkId(link);
                if self.spectrum.owner(l, slot) != claimed[link * slots + slot]
                    || self.spectrum.is_set(l, slot) != claimed[link * slots + slot].is_some()
                {
                    return Err(format!(
                        "{l} slot {slot} occupancy does not match live lightpaths"
                    ));
                }
            }
        }
        for g in self.vtopo.routes.values() {
            for &hop in &g.hops {
                let lp = self.vtopo.lightpaths.get(&hop).ok_or_else(|| {
                    format!("request {} rides dead lightpath {hop}", g.request_id)
                })?;
                if !lp.carried.contains(&g.request_id) {
                    return Err(format!(
                        "lightpath {hop} does not list request {}",
                        g.request_id
                    ));
                }
            }
        }
        let carried: usize = self
            .vtopo
            .lightpaths
            .values()
            .map(|lp| lp.carried.len())
            .sum();
        let hops: usize = self.vtopo.routes.values().map(|g| g.hops.len()).sum();
        if carried != hops {
            return Err(format!("{carried} carried entries for {hops} route hops"));
        }
        Ok(())
    }
}

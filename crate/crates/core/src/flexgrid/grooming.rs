//! MinTHV grooming: route each request over the virtual topology with the
//! fewest lightpath hops, preferring existing lightpaths and then shorter
//! propagation.
//!
//! The auxiliary graph has one edge option per ordered node pair: the
//! shortest live lightpath with enough residual capacity, and a new
//! lightpath when one could be established and would be shorter than any
//! live one (otherwise it is dominated). Since every hop past the first
//! costs a grooming delay, only routes with at most
//! `bound / grooming_delay + 1` hops can meet the latency bound, so the
//! search enumerates simple virtual paths up to that depth.

use std::collections::BTreeSet;

use super::{FlexGridError, FlexGridNetwork, GridConfig};
use crate::topology::{NodeId, PathSpec, RouteTable};
use crate::traffic::TrafficRequest;
use crate::BlockReason;

#[derive(Debug, Clone, PartialEq)]
pub struct Lightpath {
    pub id: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub route: PathSpec,
    pub slot_index: usize,
    pub capacity_bps: f64,
    pub residual_bps: f64,
    pub carried: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroomedRoute {
    pub request_id: usize,
    /// Lightpath ids, head to tail.
    pub hops: Vec<usize>,
    pub grooming_nodes: usize,
    pub latency_s: f64,
    pub bandwidth_bps: f64,
    /// Lightpaths set up for this request.
    pub new_lightpaths: usize,
}

/// End-to-end latency of a lightpath chain: propagation of every hop plus
/// one grooming delay per intermediate virtual node.
pub fn flexgrid_latency(hop_delays_s: &[f64], grid: &GridConfig) -> Result<f64, FlexGridError> {
    if hop_delays_s.is_empty() {
        return Err(FlexGridError::EmptyRoute);
    }
    let propagation: f64 = hop_delays_s.iter().sum();
    Ok(propagation + grid.grooming_delay_s * (hop_delays_s.len() - 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum HopChoice {
    Existing { id: usize, delay_s: f64 },
    New { delay_s: f64 },
}

impl HopChoice {
    fn delay(&self) -> f64 {
        match *self {
            HopChoice::Existing { delay_s, .. } | HopChoice::New { delay_s } => delay_s,
        }
    }

    fn is_new(&self) -> bool {
        matches!(self, HopChoice::New { .. })
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    nodes: Vec<NodeId>,
    choices: Vec<HopChoice>,
    new_count: usize,
    delay_s: f64,
}

/// Lazily filled option table over ordered node pairs.
struct AuxGraph<'a> {
    net: &'a FlexGridNetwork,
    routes: &'a RouteTable,
    bandwidth: f64,
    n: usize,
    existing: Vec<Option<(f64, usize)>>,
    cache: Vec<Option<Vec<HopChoice>>>,
}

impl<'a> AuxGraph<'a> {
    fn new(net: &'a FlexGridNetwork, routes: &'a RouteTable, bandwidth: f64, n: usize) -> Self {
        let mut existing: Vec<Option<(f64, usize)>> = vec![None; n * n];
        for lp in net.vtopo.lightpaths.values() {
            if lp.residual_bps < bandwidth {
                continue;
            }
            let slot = &mut existing[lp.src.0 * n + lp.dst.0];
            let cand = (lp.route.total_delay_s, lp.id);
            if slot.is_none_or(|best| cand.0 < best.0) {
                *slot = Some(cand);
            }
        }
        AuxGraph {
            net,
            routes,
            bandwidth,
            n,
            existing,
            cache: vec![None; n * n],
        }
    }

    fn options(&mut self, u: NodeId, v: NodeId) -> &[HopChoice] {
        let idx = u.0 * self.n + v.0;
        if self.cache[idx].is_none() {
            let existing = self.existing[idx];
            let fresh = if self.bandwidth <= self.net.grid.lightpath_capacity_bps() {
                self.net
                    .probe_lightpath(u, v, self.routes)
                    .map(|(r, _)| r.total_delay_s)
            } else {
                None
            };
            let mut opts = Vec::with_capacity(2);
            if let Some((delay_s, id)) = existing {
                opts.push(HopChoice::Existing { id, delay_s });
            }
            if let Some(delay_s) = fresh {
                if existing.is_none_or(|(d, _)| delay_s < d) {
                    opts.push(HopChoice::New { delay_s });
                }
            }
            self.cache[idx] = Some(opts);
        }
        self.cache[idx].as_deref().expect("filled above")
    }

    /// Every simple virtual path with exactly `hops` edges and every
    /// combination of per-edge options along it.
    fn candidates(&mut self, src: NodeId, dst: NodeId, hops: usize) -> Vec<Candidate> {
        let mut out = Vec::new();
        let mut nodes = vec![src];
        let mut on_path = vec![false; self.n];
        on_path[src.0] = true;
        self.extend(dst, hops, &mut nodes, &mut on_path, &mut out);
        out
    }

    fn extend(
        &mut self,
        dst: NodeId,
        hops: usize,
        nodes: &mut Vec<NodeId>,
        on_path: &mut [bool],
        out: &mut Vec<Candidate>,
    ) {
        let u = *nodes.last().expect("nonempty");
        let remaining = hops + 1 - nodes.len();
        if remaining == 1 {
            if !self.options(u, dst).is_empty() {
                nodes.push(dst);
                self.expand_choices(nodes, out);
                nodes.pop();
            }
            return;
        }
        for v in 0..self.n {
            let v = NodeId(v);
            if on_path[v.0] || v == dst || self.options(u, v).is_empty() {
                continue;
            }
            on_path[v.0] = true;
            nodes.push(v);
            self.extend(dst, hops, nodes, on_path, out);
            nodes.pop();
            on_path[v.0] = false;
        }
    }

    fn expand_choices(&mut self, nodes: &[NodeId], out: &mut Vec<Candidate>) {
        let per_hop: Vec<Vec<HopChoice>> = nodes
            .windows(2)
            .map(|p| self.options(p[0], p[1]).to_vec())
            .collect();
        let mut pick = vec![0usize; per_hop.len()];
        loop {
            let choices: Vec<HopChoice> = pick.iter().zip(&per_hop).map(|(&i, o)| o[i]).collect();
            out.push(Candidate {
                nodes: nodes.to_vec(),
                new_count: choices.iter().filter(|c| c.is_new()).count(),
                delay_s: choices.iter().map(HopChoice::delay).sum(),
                choices,
            });
            // odometer over option indices
            let mut i = pick.len();
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                pick[i] += 1;
                if pick[i] < per_hop[i].len() {
                    break;
                }
                pick[i] = 0;
            }
        }
    }
}

impl FlexGridNetwork {
    /// Largest virtual hop count whose grooming delay alone fits `bound`.
    fn max_hops(&self, bound: f64, node_count: usize) -> usize {
        let g = self.grid.grooming_delay_s;
        let limit = node_count.saturating_sub(1).max(1);
        if g <= 0.0 {
            return limit;
        }
        let by_delay = (bound / g * (1.0 + 1e-12)).floor() as usize + 1;
        by_delay.min(limit)
    }

    /// Accommodates `request` by MinTHV: fewest virtual hops, then fewest
    /// new lightpaths, then least propagation. New lightpaths and capacity
    /// are committed together or not at all.
    ///
    /// A block is `Resource` when some route met the bound but could not be
    /// committed, or the request exceeds a lightpath's capacity; otherwise
    /// no admissible route existed and the block is `Latency`.
    pub fn min_thv_route(
        &mut self,
        request: &TrafficRequest,
        routes: &RouteTable,
    ) -> Result<GroomedRoute, BlockReason> {
        if self.vtopo.routes.contains_key(&request.id) {
            panic!("request {} is already carried", request.id);
        }
        let n = routes.node_count();
        let bound = request.latency_bound_s;
        let g = self.grid.grooming_delay_s;
        let mut any_within_bound = false;

        for hops in 1..=self.max_hops(bound, n) {
            let mut cands = {
                let mut aux = AuxGraph::new(self, routes, request.bandwidth_bps, n);
                aux.candidates(request.src, request.dst, hops)
            };
            cands.retain(|c| c.delay_s + g * (hops - 1) as f64 <= bound);
            if cands.is_empty() {
                continue;
            }
            any_within_bound = true;
            cands.sort_by(|a, b| {
                a.new_count
                    .cmp(&b.new_count)
                    .then(a.delay_s.total_cmp(&b.delay_s))
                    .then_with(|| a.nodes.cmp(&b.nodes))
                    .then_with(|| {
                        let key = |c: &Candidate| {
                            c.choices.iter().map(|h| h.is_new()).collect::<Vec<_>>()
                        };
                        key(a).cmp(&key(b))
                    })
            });
            for cand in &cands {
                if let Some(route) = self.try_commit(request, cand, routes) {
                    return Ok(route);
                }
            }
        }

        if any_within_bound || request.bandwidth_bps > self.grid.lightpath_capacity_bps() {
            Err(BlockReason::Resource)
        } else {
            Err(BlockReason::Latency)
        }
    }

    /// Sets up the candidate's new lightpaths in hop order and commits if
    /// everything fits and the realised latency still meets the bound.
    fn try_commit(
        &mut self,
        request: &TrafficRequest,
        cand: &Candidate,
        routes: &RouteTable,
    ) -> Option<GroomedRoute> {
        let mut hops = Vec::with_capacity(cand.choices.len());
        let mut created = Vec::new();
        for (pair, choice) in cand.nodes.windows(2).zip(&cand.choices) {
            match *choice {
                HopChoice::Existing { id, .. } => hops.push(id),
                HopChoice::New { .. } => match self.establish_lightpath(pair[0], pair[1], routes) {
                    Some(id) => {
                        created.push(id);
                        hops.push(id);
                    }
                    None => break,
                },
            }
        }
        let latency = if hops.len() == cand.choices.len() {
            self.vtopo.chain_latency(&hops, &self.grid).ok()
        } else {
            None
        };
        match latency {
            Some(latency_s) if latency_s <= request.latency_bound_s => {
                for &id in &hops {
                    let lp = self.vtopo.lightpaths.get_mut(&id).expect("live");
                    lp.carried.insert(request.id);
                    lp.residual_bps -= request.bandwidth_bps;
                }
                let route = GroomedRoute {
                    request_id: request.id,
                    grooming_nodes: hops.len() - 1,
                    hops,
                    latency_s,
                    bandwidth_bps: request.bandwidth_bps,
                    new_lightpaths: created.len(),
                };
                self.vtopo.routes.insert(request.id, route.clone());
                Some(route)
            }
            _ => {
                for id in created {
                    self.teardown(id);
                }
                None
            }
        }
    }
}

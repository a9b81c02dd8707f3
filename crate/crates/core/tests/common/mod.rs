//! Independent reference implementations used by the integration and
//! acceptance tests. None of these call the code they check beyond
//! reading topology data.
#![allow(dead_code)]

use std::collections::BTreeMap;

use otss_sim::flexgrid::{FlexGridNetwork, GridConfig};
use otss_sim::otss::{OtssCalendars, OtssConfig};
use otss_sim::topology::{LinkId, NodeId, PathSpec, RouteTable, Topology};
use otss_sim::traffic::TrafficRequest;
use rand::Rng;

/// All simple paths `src -> dst` as link sequences with their total km.
pub fn all_simple_paths(t: &Topology, src: NodeId, dst: NodeId) -> Vec<(f64, Vec<LinkId>)> {
    fn walk(
        t: &Topology,
        at: NodeId,
        dst: NodeId,
        seen: &mut Vec<bool>,
        links: &mut Vec<LinkId>,
        km: f64,
        out: &mut Vec<(f64, Vec<LinkId>)>,
    ) {
        if at == dst {
            out.push((km, links.clone()));
            return;
        }
        for l in t.links() {
            if l.tail != at || seen[l.head.0] {
                continue;
            }
            seen[l.head.0] = true;
            links.push(l.id);
            walk(t, l.head, dst, seen, links, km + l.length_km, out);
            links.pop();
            seen[l.head.0] = false;
        }
    }
    let mut out = Vec::new();
    if src == dst {
        return out;
    }
    let mut seen = vec![false; t.node_count()];
    seen[src.0] = true;
    walk(t, src, dst, &mut seen, &mut Vec::new(), 0.0, &mut out);
    out
}

/// The first `k` simple paths under (km, hops, link ids).
pub fn brute_k_shortest(t: &Topology, src: NodeId, dst: NodeId, k: usize) -> Vec<Vec<LinkId>> {
    let mut all = all_simple_paths(t, src, dst);
    all.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.len().cmp(&b.1.len()))
            .then_with(|| a.1.cmp(&b.1))
    });
    all.into_iter().take(k).map(|(_, p)| p).collect()
}

/// Connected random graph: a random spanning tree plus extra edges, with
/// small integer lengths so ties are common.
pub fn random_topology<R: Rng>(rng: &mut R, nodes: usize, extra: usize, max_km: u32) -> Topology {
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let has = |a: usize, b: usize, edges: &[(usize, usize, f64)]| {
        edges
            .iter()
            .any(|&(u, v, _)| (u, v) == (a, b) || (u, v) == (b, a))
    };
    for v in 1..nodes {
        let u = rng.random_range(0..v);
        edges.push((u, v, rng.random_range(1..=max_km) as f64));
    }
    for _ in 0..extra {
        let a = rng.random_range(0..nodes);
        let b = rng.random_range(0..nodes);
        if a != b && !has(a, b, &edges) {
            edges.push((a, b, rng.random_range(1..=max_km) as f64));
        }
    }
    let mut text = format!("nodes {nodes}\n");
    for (u, v, km) in edges {
        text.push_str(&format!("{u} {v} {km}\n"));
    }
    Topology::parse(&text).expect("generated topology is valid")
}

/// Circular distance between two frame positions.
fn circular(a: f64, b: f64, frame: f64) -> f64 {
    let d = (a - b).rem_euclid(frame);
    d.min(frame - d)
}

/// Slice reservations kept as plain start times per link.
#[derive(Debug, Clone, Default)]
pub struct SliceOracle {
    pub starts: BTreeMap<usize, Vec<(usize, f64)>>,
}

impl SliceOracle {
    pub fn free(&self, link: LinkId, start: f64, cfg: &OtssConfig) -> bool {
        let tol = cfg.slice_s * 1e-9;
        self.starts.get(&link.0).is_none_or(|v| {
            v.iter()
                .all(|&(_, s)| circular(s, start, cfg.frame_s) >= cfg.slice_s - tol)
        })
    }

    pub fn add(&mut self, link: LinkId, id: usize, start: f64) {
        self.starts.entry(link.0).or_default().push((id, start));
    }

    pub fn remove(&mut self, id: usize) {
        for v in self.starts.values_mut() {
            v.retain(|&(c, _)| c != id);
        }
    }

    /// Every offset index `s` whose shifted windows are free on the path.
    pub fn feasible_offsets(
        &self,
        links: &[LinkId],
        cumulative: &[f64],
        cfg: &OtssConfig,
    ) -> Vec<usize> {
        let slices = (cfg.frame_s / cfg.slice_s).round() as usize;
        (0..slices)
            .filter(|&s| {
                let t0 = s as f64 * cfg.slice_s;
                links
                    .iter()
                    .zip(cumulative)
                    .all(|(&l, &d)| self.free(l, (t0 + d).rem_euclid(cfg.frame_s), cfg))
            })
            .collect()
    }
}

/// Erlang-B by direct summation of the truncated Poisson distribution.
pub fn erlang_b_direct(load: f64, servers: u32) -> f64 {
    // log-space terms to keep large c finite
    let log_terms: Vec<f64> = (0..=servers)
        .map(|k| k as f64 * load.ln() - (1..=k).map(|i| (i as f64).ln()).sum::<f64>())
        .collect();
    let max = log_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let denom: f64 = log_terms.iter().map(|t| (t - max).exp()).sum();
    (log_terms[servers as usize] - max).exp() / denom
}

/// A feasible accommodation found by exhaustive search.
#[derive(Debug, Clone)]
pub struct Accommodation {
    pub nodes: Vec<NodeId>,
    pub latency_s: f64,
}

/// Minimum virtual-hop accommodation over every simple node sequence and
/// every per-hop choice (any live lightpath with room, or a new one set up
/// on a copy of the network). No depth bound.
pub fn exhaustive_min_thv(
    net: &FlexGridNetwork,
    request: &TrafficRequest,
    routes: &RouteTable,
) -> Option<Accommodation> {
    let n = routes.node_count();
    let mut best: Option<Accommodation> = None;
    let mut nodes = vec![request.src];
    let mut seen = vec![false; n];
    seen[request.src.0] = true;
    search(
        net.clone(),
        request,
        routes,
        &mut nodes,
        &mut seen,
        0.0,
        &mut best,
    );
    best
}

fn search(
    net: FlexGridNetwork,
    request: &TrafficRequest,
    routes: &RouteTable,
    nodes: &mut Vec<NodeId>,
    seen: &mut Vec<bool>,
    propagation: f64,
    best: &mut Option<Accommodation>,
) {
    let hops = nodes.len() - 1;
    let u = *nodes.last().unwrap();
    if u == request.dst {
        let latency = propagation + net.grid().grooming_delay_s * (hops as f64 - 1.0);
        let better = best.as_ref().is_none_or(|b| hops < b.nodes.len() - 1);
        if latency <= request.latency_bound_s && better {
            *best = Some(Accommodation {
                nodes: nodes.clone(),
                latency_s: latency,
            });
        }
        return;
    }
    // any extension would need more hops than the best found so far
    if best.as_ref().is_some_and(|b| hops + 1 >= b.nodes.len()) {
        return;
    }
    for v in 0..routes.node_count() {
        let v = NodeId(v);
        if seen[v.0] {
            continue;
        }
        let mut options: Vec<(FlexGridNetwork, f64)> = Vec::new();
        for lp in net.virtual_topology().lightpaths().values() {
            if lp.src == u && lp.dst == v && lp.residual_bps >= request.bandwidth_bps {
                options.push((net.clone(), lp.route.total_delay_s));
            }
        }
        if request.bandwidth_bps <= net.grid().lightpath_capacity_bps() {
            let mut copy = net.clone();
            if let Some(id) = copy.establish_lightpath(u, v, routes) {
                let d = copy
                    .virtual_topology()
                    .lightpath(id)
                    .unwrap()
                    .route
                    .total_delay_s;
                options.push((copy, d));
            }
        }
        for (state, d) in options {
            seen[v.0] = true;
            nodes.push(v);
            search(state, request, routes, nodes, seen, propagation + d, best);
            nodes.pop();
            seen[v.0] = false;
        }
    }
}

/// A random path of 1 to 4 links with fractional lengths, plus calendars
/// holding up to 30 background windows at arbitrary (non-slice-aligned)
/// positions, mirrored in a [`SliceOracle`].
pub struct OtssInstance {
    pub topology: Topology,
    pub path: PathSpec,
    pub calendars: OtssCalendars,
    pub oracle: SliceOracle,
}

pub fn random_otss_instance<R: Rng>(rng: &mut R) -> OtssInstance {
    let (frame_s, slice_s) =
        [(1e-3, 1e-5), (1e-4, 1e-5), (2e-4, 1e-5), (1e-3, 1e-4)][rng.random_range(0..4)];
    let config = OtssConfig {
        frame_s,
        slice_s,
        ..OtssConfig::default()
    };
    let hops = rng.random_range(1..=4usize);
    let mut text = format!("nodes {}\n", hops + 1);
    for i in 0..hops {
        text.push_str(&format!(
            "{} {} {}\n",
            i,
            i + 1,
            rng.random_range(0.5..400.0f64)
        ));
    }
    let topology = Topology::parse(&text).unwrap();
    // forward direction of a line uses the even link ids
    let path = topology
        .path((0..hops).map(|i| LinkId(2 * i)).collect())
        .unwrap();
    let mut calendars = OtssCalendars::new(&topology, config.clone());
    let mut oracle = SliceOracle::default();
    let background = rng.random_range(0..=30usize);
    for id in 0..background {
        let link = path.links[rng.random_range(0..hops)];
        let start = rng.random_range(0.0..frame_s);
        let expect = oracle.free(link, start, &config);
        let got = calendars.reserve_raw(link, 1_000_000 + id, start);
        assert_eq!(got, expect, "background window at {start} on {link:?}");
        if got {
            oracle.add(link, 1_000_000 + id, start);
        }
    }
    OtssInstance {
        topology,
        path,
        calendars,
        oracle,
    }
}

pub fn grid_request(id: usize, src: NodeId, dst: NodeId) -> TrafficRequest {
    TrafficRequest {
        id,
        src,
        dst,
        bandwidth_bps: 500e3,
        latency_bound_s: 10e-3,
        arrival_time_s: 0.0,
        holding_time_s: 1.0,
        class_name: "test".into(),
    }
}

pub fn random_pair<R: Rng>(rng: &mut R, n: usize) -> (NodeId, NodeId) {
    let s = rng.random_range(0..n);
    let d = (s + rng.random_range(1..n)) % n;
    (NodeId(s), NodeId(d))
}

/// A network of 3 to 6 nodes with one or two slots per link, loaded by
/// routing random requests until up to six lightpaths are live.
pub struct GroomingInstance {
    pub routes: RouteTable,
    pub net: FlexGridNetwork,
    pub next_id: usize,
}

pub fn random_grooming_instance<R: Rng>(rng: &mut R) -> GroomingInstance {
    let n = rng.random_range(3..=6usize);
    let extra = rng.random_range(0..4);
    let topology = random_topology(rng, n, extra, 500);
    let k = rng.random_range(1..=3usize);
    let routes = RouteTable::new(&topology, k);
    let slot = [50e9, 25e9][rng.random_range(0..2)];
    let mut net = FlexGridNetwork::new(&topology, GridConfig::with_slot_width(slot), k).unwrap();
    let target = rng.random_range(0..=6usize);
    let mut next_id = 0;
    for _ in 0..40 {
        if net.virtual_topology().lightpaths().len() >= target {
            break;
        }
        let (s, d) = random_pair(rng, n);
        let before = net.clone();
        if net
            .min_thv_route(&grid_request(next_id, s, d), &routes)
            .is_ok()
        {
            if net.virtual_topology().lightpaths().len() > 6 {
                net = before;
                break;
            }
            next_id += 1;
        }
    }
    GroomingInstance {
        routes,
        net,
        next_id,
    }
}

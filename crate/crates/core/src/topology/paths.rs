//! Loopless K-shortest paths (Yen) with a fully deterministic order.
//!
//! Paths are ranked by total length, then hop count, then the link-id
//! sequence compared lexicographically. The order is compatible with prefix
//! extension, so a label-setting search over full path labels yields the
//! minimum path under it, which is what the spur searches rely on.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashSet};

use super::{LinkId, NodeId, PathSpec, Topology};

/// Total order used for every ranked path list in the crate.
pub fn compare_paths(a: &PathSpec, b: &PathSpec) -> Ordering {
    a.total_km
        .total_cmp(&b.total_km)
        .then(a.links.len().cmp(&b.links.len()))
        .then_with(|| a.links.cmp(&b.links))
}

#[derive(Debug, Clone, PartialEq)]
struct Label {
    km: f64,
    links: Vec<LinkId>,
    node: NodeId,
}

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.km
            .total_cmp(&other.km)
            .then(self.links.len().cmp(&other.links.len()))
            .then_with(|| self.links.cmp(&other.links))
            .then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Candidate key for Yen's B set.
#[derive(Debug, Clone, PartialEq)]
struct Ranked(PathSpec);

impl Eq for Ranked {}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        compare_paths(&self.0, &other.0)
    }
}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Topology {
    /// Minimum path from `src` to `dst` avoiding the given nodes and links.
    fn best_path(
        &self,
        src: NodeId,
        dst: NodeId,
        banned_nodes: &[bool],
        banned_links: &HashSet<LinkId>,
    ) -> Option<Vec<LinkId>> {
        let mut settled = vec![false; self.node_count()];
        let mut heap = BinaryHeap::new();
        heap.push(Reverse(Label {
            km: 0.0,
            links: Vec::new(),
            node: src,
        }));
        while let Some(Reverse(label)) = heap.pop() {
            if settled[label.node.0] {
                continue;
            }
            settled[label.node.0] = true;
            if label.node == dst {
                return Some(label.links);
            }
            for &l in self.outgoing(label.node) {
                let link = self.link(l);
                if settled[link.head.0] || banned_nodes[link.head.0] || banned_links.contains(&l) {
                    continue;
                }
                let mut links = label.links.clone();
                links.push(l);
                heap.push(Reverse(Label {
                    km: label.km + link.length_km,
                    links,
                    node: link.head,
                }));
            }
        }
        None
    }

    /// Up to `k` loopless paths from `src` to `dst`, ascending under
    /// [`compare_paths`]. Returns an empty list when `src == dst`, `k == 0`
    /// or no path exists.
    pub fn k_shortest_paths(&self, src: NodeId, dst: NodeId, k: usize) -> Vec<PathSpec> {
        if k == 0 || src == dst || src.0 >= self.node_count() || dst.0 >= self.node_count() {
            return Vec::new();
        }
        let no_nodes = vec![false; self.node_count()];
        let Some(first) = self.best_path(src, dst, &no_nodes, &HashSet::new()) else {
            return Vec::new();
        };
        let mut accepted = vec![self.path_unchecked(first)];
        let mut seen: HashSet<Vec<LinkId>> = HashSet::new();
        seen.insert(accepted[0].links.clone());
        let mut candidates = BTreeSet::new();

        while accepted.len() < k {
            let prev = accepted.last().expect("nonempty");
            let prev_nodes = self.path_nodes(prev);
            for spur_idx in 0..prev.links.len() {
                let spur_node = prev_nodes[spur_idx];
                let root = &prev.links[..spur_idx];

                let mut banned_links = HashSet::new();
                for p in &accepted {
                    if p.links.len() > spur_idx && &p.links[..spur_idx] == root {
                        banned_links.insert(p.links[spur_idx]);
                    }
                }
                let mut banned_nodes = vec![false; self.node_count()];
                for n in &prev_nodes[..spur_idx] {
                    banned_nodes[n.0] = true;
                }

                if let Some(spur) = self.best_path(spur_node, dst, &banned_nodes, &banned_links) {
                    let mut links = root.to_vec();
                    links.extend(spur);
                    if seen.insert(links.clone()) {
                        candidates.insert(Ranked(self.path_unchecked(links)));
                    }
                }
            }
            match candidates.pop_first() {
                Some(Ranked(p)) => accepted.push(p),
                None => break,
            }
        }
        accepted
    }
}

/// Precomputed K-shortest candidate lists for every ordered node pair.
#[derive(Debug, Clone)]
pub struct RouteTable {
    k: usize,
    nodes: usize,
    table: Vec<Vec<PathSpec>>,
}

impl RouteTable {
    pub fn new(topology: &Topology, k: usize) -> Self {
        let n = topology.node_count();
        let mut table = Vec::with_capacity(n * n);
        for s in 0..n {
            for d in 0..n {
                table.push(topology.k_shortest_paths(NodeId(s), NodeId(d), k));
            }
        }
        RouteTable { k, nodes: n, table }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn paths(&self, src: NodeId, dst: NodeId) -> &[PathSpec] {
        &self.table[src.0 * self.nodes + dst.0]
    }

    /// Longest shortest path over all ordered pairs (the delay diameter).
    pub fn diameter_s(&self) -> f64 {
        self.table
            .iter()
            .filter_map(|p| p.first())
            .map(|p| p.total_delay_s)
            .fold(0.0, f64::max)
    }
}

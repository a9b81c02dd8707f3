//! Physical fiber graph: loading, propagation delays and candidate paths.
//!
//! Every undirected fiber in the input becomes two directed [`FiberLink`]s.
//! Link `2i` runs `u -> v` and link `2i + 1` runs `v -> u` for the `i`-th
//! edge line of the file, so link ids are stable across loads.

mod paths;

pub use paths::{compare_paths, RouteTable};

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

/// Default signal speed in fiber.
pub const DEFAULT_SPEED_KM_PER_MS: f64 = 200.0;

/// The calibrated IEEE 14-bus communication graph shipped with the crate.
pub const IEEE14: &str = include_str!("../../data/ieee14.topo");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberLink {
    pub id: LinkId,
    pub tail: NodeId,
    pub head: NodeId,
    pub length_km: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: usize },
    #[error("line {line}: link length must be positive, got {length}")]
    NonPositiveLength { line: usize, length: f64 },
    #[error("line {line}: duplicate edge {u}-{v}")]
    DuplicateEdge { line: usize, u: usize, v: usize },
    #[error("line {line}: node {node} out of range (nodes {count})")]
    NodeOutOfRange {
        line: usize,
        node: usize,
        count: usize,
    },
    #[error("missing `nodes N` header")]
    MissingHeader,
    #[error("graph is not connected ({reached} of {count} nodes reachable from node 0)")]
    Disconnected { reached: usize, count: usize },
    #[error("propagation speed must be positive, got {0}")]
    InvalidSpeed(f64),
    #[error("unknown link {0}")]
    UnknownLink(LinkId),
    #[error("links {prev} and {next} are not contiguous")]
    NonContiguous { prev: LinkId, next: LinkId },
    #[error("path revisits node {0}")]
    NotSimple(NodeId),
}

/// An immutable directed fiber graph.
#[derive(Debug, Clone)]
pub struct Topology {
    node_count: usize,
    links: Vec<FiberLink>,
    adjacency: Vec<Vec<LinkId>>,
    speed_km_per_ms: f64,
}

/// A simple directed path with per-link propagation offsets.
///
/// `cumulative_delay_s[i]` is the propagation delay from the path source to
/// the tail of `links[i]`. These offsets are what an OTSS connection shifts
/// its slice by on each segment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathSpec {
    pub links: Vec<LinkId>,
    pub cumulative_delay_s: Vec<f64>,
    pub total_delay_s: f64,
    /// Total fiber length; kept alongside the delay so path ordering is exact
    /// for integer lengths.
    pub total_km: f64,
}

impl PathSpec {
    pub fn hops(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }
}

impl Topology {
    /// Builds a topology from undirected `(u, v, km)` edges.
    pub fn from_edges(
        node_count: usize,
        edges: &[(usize, usize, f64)],
        speed_km_per_ms: f64,
    ) -> Result<Self, TopologyError> {
        let numbered: Vec<_> = edges
            .iter()
            .enumerate()
            .map(|(i, &(u, v, km))| (i + 1, u, v, km))
            .collect();
        Self::build(node_count, &numbered, speed_km_per_ms)
    }

    fn build(
        node_count: usize,
        edges: &[(usize, usize, usize, f64)],
        speed_km_per_ms: f64,
    ) -> Result<Self, TopologyError> {
        if !(speed_km_per_ms > 0.0 && speed_km_per_ms.is_finite()) {
            return Err(TopologyError::InvalidSpeed(speed_km_per_ms));
        }
        let mut seen = HashSet::new();
        let mut links = Vec::with_capacity(edges.len() * 2);
        let mut adjacency = vec![Vec::new(); node_count];
        for &(line, u, v, km) in edges {
            for node in [u, v] {
                if node >= node_count {
                    return Err(TopologyError::NodeOutOfRange {
                        line,
                        node,
                        count: node_count,
                    });
                }
            }
            if u == v {
                return Err(TopologyError::SelfLoop { line, node: u });
            }
            if !(km > 0.0 && km.is_finite()) {
                return Err(TopologyError::NonPositiveLength { line, length: km });
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(TopologyError::DuplicateEdge { line, u, v });
            }
            for (tail, head) in [(u, v), (v, u)] {
                let id = LinkId(links.len());
                links.push(FiberLink {
                    id,
                    tail: NodeId(tail),
                    head: NodeId(head),
                    length_km: km,
                });
                adjacency[tail].push(id);
            }
        }
        let topo = Topology {
            node_count,
            links,
            adjacency,
            speed_km_per_ms,
        };
        let reached = topo.reachable_from(NodeId(0));
        if node_count == 0 || reached != node_count {
            return Err(TopologyError::Disconnected {
                reached,
                count: node_count,
            });
        }
        Ok(topo)
    }

    /// Parses the edge-list format: `#` comments, a `nodes N` header, then
    /// one `u v length_km` line per undirected fiber.
    pub fn parse(text: &str) -> Result<Self, TopologyError> {
        Self::parse_with_speed(text, DEFAULT_SPEED_KM_PER_MS)
    }

    pub fn parse_with_speed(text: &str, speed_km_per_ms: f64) -> Result<Self, TopologyError> {
        let mut node_count = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let parse_err = |msg: String| TopologyError::Parse { line, msg };
            match node_count {
                None => {
                    if fields.len() != 2 || fields[0] != "nodes" {
                        return Err(parse_err(format!("expected `nodes N`, got `{trimmed}`")));
                    }
                    let n = fields[1]
                        .parse::<usize>()
                        .map_err(|e| parse_err(format!("node count: {e}")))?;
                    node_count = Some(n);
                }
                Some(_) => {
                    if fields.len() != 3 {
                        return Err(parse_err(format!(
                            "expected `u v length_km`, got `{trimmed}`"
                        )));
                    }
                    let u = fields[0]
                        .parse::<usize>()
                        .map_err(|e| parse_err(format!("node `{}`: {e}", fields[0])))?;
                    let v = fields[1]
                        .parse::<usize>()
                        .map_err(|e| parse_err(format!("node `{}`: {e}", fields[1])))?;
                    let km = fields[2]
                        .parse::<f64>()
                        .map_err(|e| parse_err(format!("length `{}`: {e}", fields[2])))?;
                    edges.push((line, u, v, km));
                }
            }
        }
        let node_count = node_count.ok_or(TopologyError::MissingHeader)?;
        Self::build(node_count, &edges, speed_km_per_ms)
    }

    /// The shipped IEEE 14-bus graph.
    pub fn ieee14() -> Self {
        Self::parse(IEEE14).expect("shipped topology is valid")
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn links(&self) -> &[FiberLink] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &FiberLink {
        &self.links[id.0]
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn outgoing(&self, node: NodeId) -> &[LinkId] {
        &self.adjacency[node.0]
    }

    pub fn speed_km_per_ms(&self) -> f64 {
        self.speed_km_per_ms
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count).map(NodeId)
    }

    /// Whether a fiber directly joins `a` and `b`.
    pub fn adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency[a.0]
            .iter()
            .any(|&l| self.links[l.0].head == b)
    }

    pub fn km_to_s(&self, km: f64) -> f64 {
        km / self.speed_km_per_ms * 1e-3
    }

    pub fn link_delay_s(&self, id: LinkId) -> f64 {
        self.km_to_s(self.links[id.0].length_km)
    }

    fn check_walk(&self, links: &[LinkId]) -> Result<(), TopologyError> {
        for &l in links {
            if l.0 >= self.links.len() {
                return Err(TopologyError::UnknownLink(l));
            }
        }
        for pair in links.windows(2) {
            if self.links[pair[0].0].head != self.links[pair[1].0].tail {
                return Err(TopologyError::NonContiguous {
                    prev: pair[0],
                    next: pair[1],
                });
            }
        }
        Ok(())
    }

    /// Propagation delay of a contiguous walk, in seconds.
    pub fn propagation_delay(&self, links: &[LinkId]) -> Result<f64, TopologyError> {
        self.check_walk(links)?;
        let km: f64 = links.iter().map(|l| self.links[l.0].length_km).sum();
        Ok(self.km_to_s(km))
    }

    /// Validates `links` as a simple path and computes its delay offsets.
    pub fn path(&self, links: Vec<LinkId>) -> Result<PathSpec, TopologyError> {
        self.check_walk(&links)?;
        let mut visited = HashSet::new();
        if let Some(first) = links.first() {
            visited.insert(self.links[first.0].tail);
        }
        for l in &links {
            let head = self.links[l.0].head;
            if !visited.insert(head) {
                return Err(TopologyError::NotSimple(head));
            }
        }
        Ok(self.path_unchecked(links))
    }

    pub(crate) fn path_unchecked(&self, links: Vec<LinkId>) -> PathSpec {
        let mut cumulative_delay_s = Vec::with_capacity(links.len());
        let mut km = 0.0;
        for l in &links {
            cumulative_delay_s.push(self.km_to_s(km));
            km += self.links[l.0].length_km;
        }
        PathSpec {
            links,
            cumulative_delay_s,
            total_delay_s: self.km_to_s(km),
            total_km: km,
        }
    }

    /// Node sequence visited by a path (source first).
    pub fn path_nodes(&self, path: &PathSpec) -> Vec<NodeId> {
        let mut nodes = Vec::with_capacity(path.links.len() + 1);
        if let Some(first) = path.links.first() {
            nodes.push(self.links[first.0].tail);
        }
        nodes.extend(path.links.iter().map(|l| self.links[l.0].head));
        nodes
    }

    fn reachable_from(&self, start: NodeId) -> usize {
        if self.node_count == 0 {
            return 0;
        }
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![start];
        seen[start.0] = true;
        let mut count = 1;
        while let Some(n) = stack.pop() {
            for l in &self.adjacency[n.0] {
                let h = self.links[l.0].head;
                if !seen[h.0] {
                    seen[h.0] = true;
                    count += 1;
                    stack.push(h);
                }
            }
        }
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_graph() {
        let t = Topology::parse("nodes 2\n0 1 200\n").unwrap();
        assert_eq!(t.link_count(), 2);
        assert!(t.links().iter().all(|l| l.length_km == 200.0));
        assert_eq!(t.link(LinkId(0)).tail, NodeId(0));
        assert_eq!(t.link(LinkId(1)).tail, NodeId(1));
    }

    #[test]
    fn shipped_ieee14() {
        let t = Topology::ieee14();
        assert_eq!(t.node_count(), 14);
        assert_eq!(t.link_count(), 40);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            Topology::parse("nodes 2\n0 0 100\n"),
            Err(TopologyError::SelfLoop { line: 2, .. })
        ));
        assert!(matches!(
            Topology::parse("nodes 2\n0 1 -5\n"),
            Err(TopologyError::NonPositiveLength { .. })
        ));
        assert!(matches!(
            Topology::parse("nodes 2\n0 1 5\n1 0 7\n"),
            Err(TopologyError::DuplicateEdge { line: 3, .. })
        ));
        assert!(matches!(
            Topology::parse("nodes 3\n0 1 5\n"),
            Err(TopologyError::Disconnected {
                reached: 2,
                count: 3
            })
        ));
        assert!(matches!(
            Topology::parse("# only a comment\n0 1 5\n"),
            Err(TopologyError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            Topology::parse("nodes 2\n0 1\n"),
            Err(TopologyError::Parse { .. })
        ));
        assert!(matches!(
            Topology::parse(""),
            Err(TopologyError::MissingHeader)
        ));
    }

    #[test]
    fn delays() {
        let t = Topology::parse("nodes 3\n0 1 120\n1 2 80\n").unwrap();
        assert_eq!(t.propagation_delay(&[]).unwrap(), 0.0);
        let one = Topology::parse("nodes 2\n0 1 200\n").unwrap();
        assert!((one.propagation_delay(&[LinkId(0)]).unwrap() - 1e-3).abs() < 1e-15);
        let d = t.propagation_delay(&[LinkId(0), LinkId(2)]).unwrap();
        assert!((d - 1e-3).abs() < 1e-15);
        assert!(matches!(
            t.propagation_delay(&[LinkId(0), LinkId(0)]),
            Err(TopologyError::NonContiguous { .. })
        ));
    }

    #[test]
    fn path_offsets() {
        let t = Topology::parse("nodes 3\n0 1 120\n1 2 80\n").unwrap();
        let p = t.path(vec![LinkId(0), LinkId(2)]).unwrap();
        assert_eq!(p.cumulative_delay_s[0], 0.0);
        assert!((p.cumulative_delay_s[1] - 0.6e-3).abs() < 1e-15);
        assert!((p.total_delay_s - 1e-3).abs() < 1e-15);
        assert_eq!(t.path_nodes(&p), vec![NodeId(0), NodeId(1), NodeId(2)]);
        assert!(matches!(
            t.path(vec![LinkId(0), LinkId(1)]),
            Err(TopologyError::NotSimple(NodeId(0)))
        ));
    }
}

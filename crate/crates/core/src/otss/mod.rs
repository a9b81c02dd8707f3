//! Optical time slice switching.
//!
//! A connection owns one slice per frame on every link of its path. The
//! slice it transmits in at the source (offset `t0`) is shifted on each
//! downstream link by the propagation delay accumulated so far, so the
//! window on link `l` starts at `(t0 + cumulative_delay[l]) mod frame`. That
//! keeps the connection's relative position in the frame fixed end to end
//! (time-slot continuity) while letting shifted windows straddle the
//! canonical slice grid of intermediate links.

mod calendar;

pub use calendar::LinkCalendar;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{LinkId, PathSpec, RouteTable, Topology};
use crate::traffic::TrafficRequest;
use crate::BlockReason;

#[derive(Debug, Error, PartialEq)]
pub enum OtssError {
    #[error("frame_s ({frame}) is not a positive integer multiple of slice_s ({slice})")]
    FrameNotMultiple { frame: f64, slice: f64 },
    #[error("{field} must be positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("connection {0} is not committed")]
    UnknownConnection(usize),
    #[error("connection {0} is already committed")]
    DuplicateConnection(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OtssConfig {
    pub frame_s: f64,
    pub slice_s: f64,
    pub reserved_bandwidth_hz: f64,
    pub spectral_efficiency_bps_per_hz: f64,
}

impl Default for OtssConfig {
    fn default() -> Self {
        OtssConfig {
            frame_s: 1e-3,
            slice_s: 1e-5,
            reserved_bandwidth_hz: 50e9,
            spectral_efficiency_bps_per_hz: 1.0,
        }
    }
}

impl OtssConfig {
    pub fn validate(&self) -> Result<(), OtssError> {
        for (field, value) in [
            ("frame_s", self.frame_s),
            ("slice_s", self.slice_s),
            ("reserved_bandwidth_hz", self.reserved_bandwidth_hz),
            (
                "spectral_efficiency_bps_per_hz",
                self.spectral_efficiency_bps_per_hz,
            ),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(OtssError::NonPositive { field, value });
            }
        }
        let ratio = self.frame_s / self.slice_s;
        let rounded = ratio.round();
        if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * rounded {
            return Err(OtssError::FrameNotMultiple {
                frame: self.frame_s,
                slice: self.slice_s,
            });
        }
        Ok(())
    }

    /// Slices per frame (100 with the defaults).
    pub fn slices_per_frame(&self) -> usize {
        (self.frame_s / self.slice_s).round() as usize
    }

    /// Average rate of one slice per frame.
    pub fn slice_capacity_bps(&self) -> f64 {
        self.reserved_bandwidth_hz * self.spectral_efficiency_bps_per_hz * self.slice_s
            / self.frame_s
    }

    pub(crate) fn overlap_tolerance(&self) -> f64 {
        self.slice_s * 1e-9
    }
}

/// One slice-long window, read modulo the frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceWindow {
    pub start_s: f64,
    pub duration_s: f64,
    pub wraps: bool,
}

/// Window a connection with source offset `t0` uses on a link whose tail is
/// `cumulative_delay` seconds of propagation from the source.
pub fn window_on_link(t0: f64, cumulative_delay: f64, config: &OtssConfig) -> SliceWindow {
    let frame = config.frame_s;
    let mut start = (t0 + cumulative_delay).rem_euclid(frame);
    if start >= frame - config.overlap_tolerance() {
        start = 0.0;
    }
    SliceWindow {
        start_s: start,
        duration_s: config.slice_s,
        wraps: start + config.slice_s > frame + config.overlap_tolerance(),
    }
}

/// `(worst_case, expected)` end-to-end latency over `path`.
///
/// A request may arrive just after its slice left: it waits up to
/// `frame - slice`, then serializes for one slice, then propagates. With a
/// uniform arrival phase the mean wait is `(frame - slice) / 2`.
pub fn otss_latency(path: &PathSpec, config: &OtssConfig) -> (f64, f64) {
    let worst = config.frame_s + path.total_delay_s;
    let expected = (config.frame_s + config.slice_s) / 2.0 + path.total_delay_s;
    (worst, expected)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OtssConnection {
    pub request_id: usize,
    pub path: PathSpec,
    pub source_offset_s: f64,
    /// One window per path link, in path order.
    pub windows: Vec<(LinkId, SliceWindow)>,
    pub worst_case_latency_s: f64,
    pub expected_latency_s: f64,
    /// Position of the path in the candidate list (0 = shortest).
    pub route_rank: usize,
}

/// Calendars for every directed link plus the committed connections.
#[derive(Debug, Clone)]
pub struct OtssCalendars {
    config: OtssConfig,
    links: Vec<LinkCalendar>,
    active: BTreeMap<usize, OtssConnection>,
}

impl OtssCalendars {
    pub fn new(topology: &Topology, config: OtssConfig) -> Self {
        Self::with_links(topology.link_count(), config)
    }

    pub fn with_links(link_count: usize, config: OtssConfig) -> Self {
        OtssCalendars {
            config,
            links: (0..link_count)
                .map(|i| LinkCalendar::new(LinkId(i)))
                .collect(),
            active: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &OtssConfig {
        &self.config
    }

    pub fn calendar(&self, link: LinkId) -> &LinkCalendar {
        &self.links[link.0]
    }

    pub fn calendars(&self) -> &[LinkCalendar] {
        &self.links
    }

    pub fn active(&self) -> &BTreeMap<usize, OtssConnection> {
        &self.active
    }

    pub fn is_quiescent(&self) -> bool {
        self.active.is_empty() && self.links.iter().all(LinkCalendar::is_empty)
    }

    /// Reserves a window directly, bypassing path allocation. Used to set
    /// up background occupancy.
    pub fn reserve_raw(&mut self, link: LinkId, connection: usize, start_s: f64) -> bool {
        let window = window_on_link(start_s, 0.0, &self.config);
        if !self.links[link.0].is_free(window.start_s, &self.config) {
            return false;
        }
        self.links[link.0].insert(connection, window);
        true
    }

    /// First-fit shifting allocation: tries source offsets `s * slice` for
    /// `s = 0..S` and commits the first one whose shifted window is free on
    /// every link. Leaves the calendars untouched when nothing fits.
    pub fn allocate(
        &mut self,
        request_id: usize,
        path: &PathSpec,
    ) -> Result<Option<OtssConnection>, OtssError> {
        self.allocate_ranked(request_id, path, 0)
    }

    fn allocate_ranked(
        &mut self,
        request_id: usize,
        path: &PathSpec,
        route_rank: usize,
    ) -> Result<Option<OtssConnection>, OtssError> {
        if self.active.contains_key(&request_id) {
            return Err(OtssError::DuplicateConnection(request_id));
        }
        let cfg = &self.config;
        let offset = (0..cfg.slices_per_frame())
            .map(|s| s as f64 * cfg.slice_s)
            .find(|&t0| {
                path.links
                    .iter()
                    .zip(&path.cumulative_delay_s)
                    .all(|(l, &d)| self.links[l.0].is_free(window_on_link(t0, d, cfg).start_s, cfg))
            });
        let Some(t0) = offset else {
            return Ok(None);
        };
        let windows: Vec<(LinkId, SliceWindow)> = path
            .links
            .iter()
            .zip(&path.cumulative_delay_s)
            .map(|(&l, &d)| (l, window_on_link(t0, d, cfg)))
            .collect();
        for &(l, w) in &windows {
            self.links[l.0].insert(request_id, w);
        }
        let (worst, expected) = otss_latency(path, cfg);
        let conn = OtssConnection {
            request_id,
            path: path.clone(),
            source_offset_s: t0,
            windows,
            worst_case_latency_s: worst,
            expected_latency_s: expected,
            route_rank,
        };
        self.active.insert(request_id, conn.clone());
        Ok(Some(conn))
    }

    /// Removes every window of a committed connection.
    pub fn release(&mut self, request_id: usize) -> Result<OtssConnection, OtssError> {
        let conn = self
            .active
            .remove(&request_id)
            .ok_or(OtssError::UnknownConnection(request_id))?;
        for (l, _) in &conn.windows {
            self.links[l.0].remove(request_id);
        }
        Ok(conn)
    }

    /// Checks disjointness, the continuity law and reservation
    /// conservation. Returns a description of the first violation.
    pub fn audit(&self) -> Result<(), String> {
        for cal in &self.links {
            if let Some((a, b)) = cal.find_overlap(&self.config) {
                return Err(format!("{}: windows of {a} and {b} overlap", cal.link));
            }
        }
        let mut expected = vec![0usize; self.links.len()];
        for conn in self.active.values() {
            for (l, &d) in conn.path.links.iter().zip(&conn.path.cumulative_delay_s) {
                expected[l.0] += 1;
                let w = self.links[l.0]
                    .window(conn.request_id)
                    .ok_or_else(|| format!("{l}: connection {} has no window", conn.request_id))?;
                let want = (conn.source_offset_s + d).rem_euclid(self.config.frame_s);
                let diff = (w.start_s - want).abs();
                let residual = diff.min(self.config.frame_s - diff);
                if residual > 1e-12 {
                    return Err(format!(
                        "{l}: connection {} breaks continuity by {residual:e} s",
                        conn.request_id
                    ));
                }
            }
        }
        for (cal, want) in self.links.iter().zip(expected) {
            if cal.len() != want {
                return Err(format!(
                    "{}: {} reservations for {want} connections",
                    cal.link,
                    cal.len()
                ));
            }
        }
        Ok(())
    }
}

/// Route selection for OTSS admission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoutingMode {
    /// Only the shortest path.
    Fixed,
    /// Scan up to `k` shortest paths in order.
    Alternate { k: usize },
}

impl RoutingMode {
    pub fn candidates(&self) -> usize {
        match *self {
            RoutingMode::Fixed => 1,
            RoutingMode::Alternate { k } => k,
        }
    }
}

/// Admits `request` over the candidate routes in order. A route whose
/// worst-case latency exceeds the bound is skipped; the first route with a
/// free offset wins. The block reason is `Latency` only when every
/// candidate broke the bound.
pub fn admit_otss(
    request: &TrafficRequest,
    routes: &RouteTable,
    calendars: &mut OtssCalendars,
    mode: RoutingMode,
) -> Result<OtssConnection, BlockReason> {
    let candidates = routes.paths(request.src, request.dst);
    let take = mode.candidates().min(candidates.len());
    let fits_slice = request.bandwidth_bps <= calendars.config().slice_capacity_bps();
    let mut any_within_bound = false;
    for (rank, path) in candidates[..take].iter().enumerate() {
        let (worst, _) = otss_latency(path, calendars.config());
        if worst > request.latency_bound_s {
            continue;
        }
        any_within_bound = true;
        if !fits_slice {
            break;
        }
        let conn = calendars
            .allocate_ranked(request.id, path, rank)
            .expect("request ids are unique among live connections");
        if let Some(conn) = conn {
            return Ok(conn);
        }
    }
    if any_within_bound {
        Err(BlockReason::Resource)
    } else {
        Err(BlockReason::Latency)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::NodeId;

    fn request(src: usize, dst: usize, bound: f64) -> TrafficRequest {
        TrafficRequest {
            id: 0,
            src: NodeId(src),
            dst: NodeId(dst),
            bandwidth_bps: 500e3,
            latency_bound_s: bound,
            arrival_time_s: 0.0,
            holding_time_s: 1.0,
            class_name: "t".into(),
        }
    }

    #[test]
    fn window_shifts() {
        let cfg = OtssConfig::default();
        let w = window_on_link(0.0, 0.0, &cfg);
        assert_eq!((w.start_s, w.duration_s, w.wraps), (0.0, 1e-5, false));
        let w = window_on_link(990e-6, 15e-6, &cfg);
        assert!((w.start_s - 5e-6).abs() < 1e-15);
        let w = window_on_link(0.0, 1e-3, &cfg);
        assert_eq!(w.start_s, 0.0);
        let w = window_on_link(995e-6, 0.0, &cfg);
        assert!(w.wraps);
    }

    #[test]
    fn config_rules() {
        assert_eq!(OtssConfig::default().slices_per_frame(), 100);
        assert!((OtssConfig::default().slice_capacity_bps() - 500e6).abs() < 1e-3);
        let bad = OtssConfig {
            slice_s: 3e-5,
            ..OtssConfig::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(OtssError::FrameNotMultiple { .. })
        ));
        let ok = OtssConfig {
            slice_s: 2.5e-5,
            ..OtssConfig::default()
        };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn latency_model() {
        let cfg = OtssConfig::default();
        let (w, e) = otss_latency(&PathSpec::default(), &cfg);
        assert!((w - 1e-3).abs() < 1e-15);
        assert!((e - 0.505e-3).abs() < 1e-15);
        let t = Topology::parse("nodes 3\n0 1 600\n1 2 480\n").unwrap();
        let p = t.path(vec![LinkId(0)]).unwrap();
        assert!((otss_latency(&p, &cfg).0 - 4.0e-3).abs() < 1e-12);
        let p = t.path(vec![LinkId(0), LinkId(2)]).unwrap();
        assert!((otss_latency(&p, &cfg).0 - 6.4e-3).abs() < 1e-12);
    }

    #[test]
    fn allocate_and_release() {
        let t = Topology::parse("nodes 3\n0 1 3\n1 2 7\n").unwrap();
        let p = t.path(vec![LinkId(0), LinkId(2)]).unwrap();
        let mut cal = OtssCalendars::new(&t, OtssConfig::default());
        let c = cal.allocate(9, &p).unwrap().unwrap();
        assert_eq!(c.source_offset_s, 0.0);
        assert!((c.windows[1].1.start_s - 15e-6).abs() < 1e-15);
        cal.audit().unwrap();
        assert!(matches!(
            cal.allocate(9, &p),
            Err(OtssError::DuplicateConnection(9))
        ));
        cal.release(9).unwrap();
        assert!(cal.is_quiescent());
        assert_eq!(cal.release(9), Err(OtssError::UnknownConnection(9)));
    }

    #[test]
    fn full_link_is_infeasible() {
        let t = Topology::parse("nodes 2\n0 1 10\n").unwrap();
        let p = t.path(vec![LinkId(0)]).unwrap();
        let mut cal = OtssCalendars::new(&t, OtssConfig::default());
        for id in 0..100 {
            assert!(cal.allocate(id, &p).unwrap().is_some());
        }
        assert!(cal.allocate(100, &p).unwrap().is_none());
        cal.audit().unwrap();
    }

    #[test]
    fn fixed_routing_latency_block() {
        let t = Topology::parse("nodes 2\n0 1 2000\n").unwrap();
        let routes = RouteTable::new(&t, 1);
        let mut cal = OtssCalendars::new(&t, OtssConfig::default());
        // 10 ms propagation + 1 ms frame
        assert_eq!(
            admit_otss(&request(0, 1, 10e-3), &routes, &mut cal, RoutingMode::Fixed),
            Err(BlockReason::Latency)
        );
        assert!(cal.is_quiescent());
    }

    #[test]
    fn fixed_routing_empty_network() {
        let t = Topology::ieee14();
        let routes = RouteTable::new(&t, 5);
        let mut cal = OtssCalendars::new(&t, OtssConfig::default());
        let c = admit_otss(
            &request(11, 7, 10e-3),
            &routes,
            &mut cal,
            RoutingMode::Fixed,
        )
        .unwrap();
        assert_eq!(c.source_offset_s, 0.0);
        assert_eq!(c.route_rank, 0);
        assert!((c.worst_case_latency_s - 4e-3).abs() < 1e-12);
    }

    #[test]
    fn oversized_request_is_resource_blocked() {
        let t = Topology::ieee14();
        let routes = RouteTable::new(&t, 5);
        let mut cal = OtssCalendars::new(&t, OtssConfig::default());
        let mut r = request(0, 1, 10e-3);
        r.bandwidth_bps = 1e9;
        assert_eq!(
            admit_otss(&r, &routes, &mut cal, RoutingMode::Alternate { k: 5 }),
            Err(BlockReason::Resource)
        );
    }
}

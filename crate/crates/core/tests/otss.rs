mod common;

use common::{random_otss_instance, SliceOracle};
use otss_sim::otss::{admit_otss, OtssCalendars, OtssConfig, RoutingMode};
use otss_sim::topology::{NodeId, RouteTable, Topology};
use otss_sim::traffic::TrafficRequest;
use otss_sim::BlockReason;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn request(id: usize, src: usize, dst: usize, bound: f64) -> TrafficRequest {
    TrafficRequest {
        id,
        src: NodeId(src),
        dst: NodeId(dst),
        bandwidth_bps: 500e3,
        latency_bound_s: bound,
        arrival_time_s: 0.0,
        holding_time_s: 1.0,
        class_name: "test".into(),
    }
}

// background windows are not connections, so the full audit does not apply
fn assert_disjoint(cal: &OtssCalendars) {
    for c in cal.calendars() {
        assert_eq!(c.find_overlap(cal.config()), None, "{:?}", c.link);
    }
}

#[test]
fn allocation_matches_offset_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..300 {
        let mut inst = random_otss_instance(&mut rng);
        let cfg = inst.calendars.config().clone();
        let feasible =
            inst.oracle
                .feasible_offsets(&inst.path.links, &inst.path.cumulative_delay_s, &cfg);
        let got = inst.calendars.allocate(0, &inst.path).unwrap();
        match (feasible.first(), got) {
            (None, None) => {}
            (Some(&s), Some(conn)) => {
                assert_eq!(conn.source_offset_s, s as f64 * cfg.slice_s, "case {case}");
                assert_disjoint(&inst.calendars);
            }
            (want, got) => panic!("case {case}: oracle {want:?}, allocate {got:?}"),
        }
    }
}

/// Diamond 0-1-3 / 0-2-3 with the upper branch fully booked on 0->1.
fn diamond() -> (Topology, RouteTable, OtssCalendars) {
    let t = Topology::parse("nodes 4\n0 1 100\n1 3 100\n0 2 150\n2 3 150\n").unwrap();
    let routes = RouteTable::new(&t, 2);
    let mut cal = OtssCalendars::new(&t, OtssConfig::default());
    let upper = routes.paths(NodeId(0), NodeId(3))[0].links[0];
    let cfg = cal.config().clone();
    for s in 0..cfg.slices_per_frame() {
        assert!(cal.reserve_raw(upper, 10_000 + s, s as f64 * cfg.slice_s));
    }
    (t, routes, cal)
}

#[test]
fn alternate_routing_takes_the_free_branch() {
    let (t, routes, mut cal) = diamond();
    let r = request(1, 0, 3, 10e-3);
    assert_eq!(
        admit_otss(&r, &routes, &mut cal, RoutingMode::Fixed),
        Err(BlockReason::Resource)
    );
    let conn = admit_otss(&r, &routes, &mut cal, RoutingMode::Alternate { k: 2 }).unwrap();
    assert_eq!(conn.route_rank, 1);
    assert_eq!(conn.path.total_km, 300.0);
    assert_eq!(conn.source_offset_s, 0.0);
    assert!((conn.worst_case_latency_s - (1e-3 + t.km_to_s(300.0))).abs() < 1e-15);
    assert_disjoint(&cal);
}

#[test]
fn bound_below_every_candidate_is_latency_blocking() {
    let (_, routes, mut cal) = diamond();
    // both branches need frame + at least 1 ms of propagation
    let r = request(1, 0, 3, 1.5e-3);
    assert_eq!(
        admit_otss(&r, &routes, &mut cal, RoutingMode::Alternate { k: 2 }),
        Err(BlockReason::Latency)
    );
    assert!(cal.active().is_empty());
}

#[test]
fn random_allocate_release_interleavings_track_the_oracle() {
    let t = Topology::parse(
        "nodes 5\n0 1 37.3\n1 2 81.9\n2 3 12.4\n3 4 55.5\n0 2 140.2\n1 3 99.1\n2 4 61.7\n",
    )
    .unwrap();
    let routes = RouteTable::new(&t, 3);
    let cfg = OtssConfig {
        frame_s: 1e-4,
        ..OtssConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut cal = OtssCalendars::new(&t, cfg.clone());
    let mut oracle = SliceOracle::default();
    let mut live: Vec<usize> = Vec::new();
    for id in 0..1000 {
        if !live.is_empty() && rng.random_bool(0.45) {
            let victim = live.swap_remove(rng.random_range(0..live.len()));
            cal.release(victim).unwrap();
            oracle.remove(victim);
        } else {
            let s = rng.random_range(0..5);
            let d = (s + rng.random_range(1..5)) % 5;
            let options = routes.paths(NodeId(s), NodeId(d));
            let path = &options[rng.random_range(0..options.len())];
            let feasible = oracle.feasible_offsets(&path.links, &path.cumulative_delay_s, &cfg);
            match (feasible.first(), cal.allocate(id, path).unwrap()) {
                (None, None) => {}
                (Some(&s0), Some(conn)) => {
                    assert_eq!(conn.source_offset_s, s0 as f64 * cfg.slice_s);
                    for (&l, &d) in path.links.iter().zip(&path.cumulative_delay_s) {
                        oracle.add(l, id, (conn.source_offset_s + d).rem_euclid(cfg.frame_s));
                    }
                    live.push(id);
                }
                (want, got) => panic!("step {id}: oracle {want:?}, allocate {got:?}"),
            }
        }
        cal.audit().unwrap();
    }
    for id in live {
        cal.release(id).unwrap();
    }
    assert!(cal.is_quiescent());
}

//! Deterministic desk-scale worlds used by tests, benchmarks, and the CLI
//! presets: a 4-intersection square, a 3x3 grid with eight labeled routes,
//! and a 13-intersection area with 35 road segments (three of them one-way)
//! plus four long test tracks covering almost all segments.

use std::collections::BTreeMap;

use crate::model::{
    haversine_distance, IntersectionId, LatLon, LocalFrame, RoadGraph, Route, Segment,
};
use crate::synth::{BaseStation, World, WorldConfig};

const ORIGIN: (f64, f64) = (37.0, -122.0);

fn build_graph(nodes: &[(u32, f64, f64)], bidir: &[(u32, u32)], oneway: &[(u32, u32)]) -> RoadGraph {
    let frame = LocalFrame::new(LatLon::new(ORIGIN.0, ORIGIN.1).unwrap());
    let mut intersections = BTreeMap::new();
    for &(id, x, y) in nodes {
        intersections.insert(IntersectionId(id), frame.to_latlon(x, y));
    }
    let mut segments = Vec::new();
    let mut push = |a: u32, b: u32| {
        let pa = intersections[&IntersectionId(a)];
        let pb = intersections[&IntersectionId(b)];
        segments.push(Segment {
            from: IntersectionId(a),
            to: IntersectionId(b),
            length_m: haversine_distance(pa, pb),
            polyline: vec![pa, pb],
        });
    };
    for &(a, b) in bidir {
        push(a, b);
        push(b, a);
    }
    for &(a, b) in oneway {
        push(a, b);
    }
    RoadGraph::new(intersections, segments).expect("fixture graph is valid")
}

fn stations(frame: &LocalFrame, list: &[(f64, f64, f64)]) -> Vec<BaseStation> {
    list.iter()
        .map(|&(x, y, tx)| {
            let p = frame.to_latlon(x, y);
            BaseStation {
                lat: p.lat,
                lon: p.lon,
                tx_power_dbm: tx,
            }
        })
        .collect()
}

fn world_with(seed: u64, bs: &[(f64, f64, f64)]) -> World {
    let frame = LocalFrame::new(LatLon::new(ORIGIN.0, ORIGIN.1).unwrap());
    let config = WorldConfig {
        seed,
        origin_lat: ORIGIN.0,
        origin_lon: ORIGIN.1,
        base_stations: stations(&frame, bs),
        shadowing_sigma_db: 12.0,
        shadow_grid_m: 35.0,
        power: crate::synth::PowerModel {
            best_signal_dbm: -55.0,
            worst_signal_dbm: -95.0,
            ..Default::default()
        },
        ..Default::default()
    };
    World::new(config).expect("fixture world is valid")
}

/// Four intersections on a square with one diagonal; six feasible
/// three-segment routes leave intersection 1. Small enough for exhaustive
/// route enumeration.
pub fn tiny4() -> (World, RoadGraph) {
    let graph = build_graph(
        &[(1, 0.0, 400.0), (2, 400.0, 400.0), (3, 400.0, 0.0), (4, 0.0, 0.0)],
        &[(1, 2), (2, 3), (3, 4), (4, 1), (2, 4)],
        &[],
    );
    let world = world_with(
        411,
        &[(-200.0, 600.0, 40.0), (700.0, 300.0, 39.0), (100.0, -300.0, 38.0)],
    );
    (world, graph)
}

/// 3x3 grid with eight labeled routes, including one forward/reverse pair
/// (A and B): driving the same roads in opposite directions is two classes.
pub fn routes8() -> (World, RoadGraph, BTreeMap<String, Route>) {
    let nodes = [
        (1, 0.0, 800.0),
        (2, 400.0, 800.0),
        (3, 800.0, 800.0),
        (4, 0.0, 400.0),
        (5, 400.0, 400.0),
        (6, 800.0, 400.0),
        (7, 0.0, 0.0),
        (8, 400.0, 0.0),
        (9, 800.0, 0.0),
    ];
    let bidir = [
        (1, 2),
        (2, 3),
        (4, 5),
        (5, 6),
        (7, 8),
        (8, 9),
        (1, 4),
        (4, 7),
        (2, 5),
        (5, 8),
        (3, 6),
        (6, 9),
    ];
    let graph = build_graph(&nodes, &bidir, &[]);
    let world = world_with(
        88,
        &[
            (-300.0, 1000.0, 40.0),
            (1100.0, 900.0, 39.0),
            (900.0, -200.0, 40.0),
            (-150.0, -250.0, 38.0),
            (420.0, 380.0, 36.0),
        ],
    );
    let routes: BTreeMap<String, Route> = [
        ("A", "1-2-3-6-9"),
        ("B", "9-6-3-2-1"),
        ("C", "1-4-7-8-9"),
        ("D", "3-2-5-8-7"),
        ("E", "7-4-5-6-3"),
        ("F", "1-2-5-8-9"),
        ("G", "3-6-5-4-1"),
        ("H", "7-8-5-6-9"),
    ]
    .into_iter()
    .map(|(label, spec)| (label.to_string(), Route::parse(spec).unwrap()))
    .collect();
    (world, graph, routes)
}

/// 13 intersections joined by 35 directed road segments, three of which are
/// one-way (the 10->12->11->9 loop). Average segment length a bit over
/// 400 m.
pub fn grid13() -> (World, RoadGraph) {
    let nodes = [
        (1, 0.0, 800.0),
        (2, 400.0, 800.0),
        (3, 800.0, 800.0),
        (4, 800.0, 400.0),
        (5, 400.0, 0.0),
        (6, 400.0, 400.0),
        (7, 0.0, 400.0),
        (8, 0.0, 0.0),
        (9, 1200.0, 400.0),
        (10, 1600.0, 400.0),
        (11, 1200.0, 0.0),
        (12, 1600.0, 0.0),
        (13, 800.0, -300.0),
    ];
    let bidir = [
        (1, 2),
        (1, 7),
        (2, 3),
        (2, 4),
        (3, 4),
        (4, 5),
        (4, 9),
        (5, 6),
        (5, 8),
        (6, 7),
        (7, 8),
        (4, 6),
        (9, 10),
        (5, 13),
        (11, 13),
        (3, 9),
    ];
    let oneway = [(10, 12), (12, 11), (11, 9)];
    let graph = build_graph(&nodes, &bidir, &oneway);
    let world = world_with(
        613,
        &[
            (-200.0, 900.0, 40.0),
            (900.0, 1150.0, 38.0),
            (1800.0, 700.0, 41.0),
            (500.0, -450.0, 39.0),
            (1500.0, -350.0, 40.0),
            (850.0, 250.0, 36.0),
        ],
    );
    (world, graph)
}

/// The four long test tracks over [`grid13`]; combined they cover almost all
/// road segments.
pub fn grid13_tracks() -> Vec<Route> {
    [
        "8-5-6-7-1-2-3-4-5-6-4-3-2-1-7-8",
        "7-1-2-3-4-5-8-7-6-5-4-2-1-7-8",
        "3-2-4-9-10-12-11-9-4-5-6-4-3-2-1-7-6-5-8-7",
        "10-12-11-9-4-2-1-7-6-5-8",
    ]
    .iter()
    .map(|s| Route::parse(s).unwrap())
    .collect()
}

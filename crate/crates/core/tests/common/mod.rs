//! Fixtures shared by the integration test targets.
#![allow(dead_code)]

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use hosgns::seed::Rng;
use hosgns::temporal_graph::{parse_contact_lines, TimeVaryingGraph};
use rand::Rng as _;

pub fn hospital_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/hospital_ward_contacts.dat")
}

/// Bundled hospital-ward contact log aggregated on 600-second windows.
pub fn hospital() -> TimeVaryingGraph {
    let file = File::open(hospital_path()).expect("bundled data file");
    parse_contact_lines(BufReader::new(file), 600).expect("bundled data parses")
}

/// Random graph with up to `max_nodes` nodes and `max_times` slices, each pair present
/// at each slice with probability `density`, and at most `max_active` active pairs.
pub fn random_graph(rng: &mut Rng, max_nodes: usize, max_times: usize, density: f64, max_active: usize) -> TimeVaryingGraph {
    loop {
        let n = rng.random_range(2..=max_nodes);
        let t = rng.random_range(1..=max_times);
        let mut events = Vec::new();
        for k in 0..t {
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random_bool(density) {
                        events.push((i, j, k, f64::from(rng.random_range(1u8..=4))));
                    }
                }
            }
        }
        if let Ok(g) = TimeVaryingGraph::from_events(events) {
            if g.num_active() <= max_active {
                return g;
            }
        }
    }
}

//! Discrete-time weighted time-varying graphs.
//!
//! Raw contact logs (`timestamp id1 id2`) are binned into fixed windows; repeated
//! contacts between the same pair inside one window collapse into a single event
//! whose weight is the contact count. Windows without contacts are dropped and the
//! remaining ones re-indexed contiguously. Raw node ids are remapped to dense
//! indices in ascending raw-id order.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("graph has no events")]
    Empty,
    #[error("window length must be positive")]
    ZeroWindow,
    #[error("invalid event {0:?}: {1}")]
    InvalidEvent((u64, u64, i64), String),
    #[error("inconsistent graph document: {0}")]
    Document(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One undirected weighted event, stored with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub weight: f64,
}

/// A contact before re-indexing: raw window index and raw node ids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawContact {
    pub window: i64,
    pub a: u64,
    pub b: u64,
    pub weight: f64,
}

impl RawContact {
    pub fn new(window: i64, a: u64, b: u64, weight: f64) -> Self {
        Self { window, a, b, weight }
    }
}

/// The event set of a time-varying graph together with its index maps.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeVaryingGraph {
    num_nodes: usize,
    num_times: usize,
    /// Sorted by `(k, i, j)`.
    events: Vec<Event>,
    /// `slice_offsets[k]..slice_offsets[k + 1]` are the events of slice `k`.
    slice_offsets: Vec<usize>,
    /// Sorted activation times of every node.
    activity: Vec<Vec<usize>>,
    node_ids: Vec<u64>,
    time_windows: Vec<i64>,
    window_seconds: Option<u64>,
    node_labels: Option<Vec<String>>,
}

/// Summary statistics of a time-varying graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub num_nodes: usize,
    pub num_times: usize,
    pub num_events: usize,
    pub num_active: usize,
    pub avg_weight: f64,
    pub node_density: f64,
    pub link_density: f64,
}

/// JSON form of a graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphDocument {
    pub num_nodes: usize,
    pub num_times: usize,
    pub events: Vec<(usize, usize, usize, f64)>,
    pub id_map: Vec<u64>,
    pub time_map: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_seconds: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_labels: Option<Vec<String>>,
}

/// Reads `timestamp id1 id2` lines and bins them into `window_seconds` windows.
///
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_contact_lines<R: BufRead>(
    reader: R,
    window_seconds: u64,
) -> Result<TimeVaryingGraph, GraphError> {
    if window_seconds == 0 {
        return Err(GraphError::ZeroWindow);
    }
    let mut contacts = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = n + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(GraphError::Parse {
                line: line_no,
                reason: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let parse_err = |what: &str, tok: &str| GraphError::Parse {
            line: line_no,
            reason: format!("invalid {what} '{tok}'"),
        };
        let t: i64 = fields[0].parse().map_err(|_| parse_err("timestamp", fields[0]))?;
        let a: u64 = fields[1].parse().map_err(|_| parse_err("node id", fields[1]))?;
        let b: u64 = fields[2].parse().map_err(|_| parse_err("node id", fields[2]))?;
        if a == b {
            return Err(GraphError::Parse {
                line: line_no,
                reason: format!("self-contact of node {a}"),
            });
        }
        contacts.push(RawContact::new(t.div_euclid(window_seconds as i64), a, b, 1.0));
    }
    let mut g = TimeVaryingGraph::from_contacts(contacts)?;
    g.window_seconds = Some(window_seconds);
    Ok(g)
}

impl TimeVaryingGraph {
    /// Builds a graph from raw contacts, merging repeats and re-indexing nodes and windows.
    pub fn from_contacts<I>(contacts: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = RawContact>,
    {
        let mut merged: BTreeMap<(i64, u64, u64), f64> = BTreeMap::new();
        for c in contacts {
            if c.a == c.b {
                return Err(GraphError::InvalidEvent((c.a, c.b, c.window), "self-loop".into()));
            }
            if !(c.weight.is_finite() && c.weight > 0.0) {
                return Err(GraphError::InvalidEvent(
                    (c.a, c.b, c.window),
                    format!("weight {} is not positive", c.weight),
                ));
            }
            let (a, b) = if c.a < c.b { (c.a, c.b) } else { (c.b, c.a) };
            *merged.entry((c.window, a, b)).or_insert(0.0) += c.weight;
        }
        if merged.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut node_ids: Vec<u64> = merged.keys().flat_map(|&(_, a, b)| [a, b]).collect();
        node_ids.sort_unstable();
        node_ids.dedup();
        let mut time_windows: Vec<i64> = merged.keys().map(|&(w, _, _)| w).collect();
        time_windows.dedup();

        let node_of = |raw: u64| node_ids.binary_search(&raw).expect("collected above");
        let time_of = |raw: i64| time_windows.binary_search(&raw).expect("collected above");
        let events = merged
            .into_iter()
            .map(|((w, a, b), weight)| Event { i: node_of(a), j: node_of(b), k: time_of(w), weight })
            .collect();
        Ok(Self::assemble(node_ids, time_windows, events, None, None))
    }

    /// Builds a graph from already dense events, for fixtures.
    ///
    /// Node and time indices are treated as raw ids, so unused indices are squeezed out.
    pub fn from_events<I>(events: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize, usize, f64)>,
    {
        Self::from_contacts(
            events.into_iter().map(|(i, j, k, w)| RawContact::new(k as i64, i as u64, j as u64, w)),
        )
    }

    fn assemble(
        node_ids: Vec<u64>,
        time_windows: Vec<i64>,
        mut events: Vec<Event>,
        window_seconds: Option<u64>,
        node_labels: Option<Vec<String>>,
    ) -> Self {
        events.sort_by(|x, y| (x.k, x.i, x.j).cmp(&(y.k, y.i, y.j)));
        let num_nodes = node_ids.len();
        let num_times = time_windows.len();
        let mut slice_offsets = vec![0usize; num_times + 1];
        for e in &events {
            slice_offsets[e.k + 1] += 1;
        }
        for k in 0..num_times {
            slice_offsets[k + 1] += slice_offsets[k];
        }
        let mut activity = vec![Vec::new(); num_nodes];
        for e in &events {
            activity[e.i].push(e.k);
            activity[e.j].push(e.k);
        }
        for a in &mut activity {
            a.sort_unstable();
            a.dedup();
        }
        Self {
            num_nodes,
            num_times,
            events,
            slice_offsets,
            activity,
            node_ids,
            time_windows,
            window_seconds,
            node_labels,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_times(&self) -> usize {
        self.num_times
    }

    pub fn num_events(&self) -> usize {
        self.events.len()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Events of time slice `k`.
    pub fn events_at(&self, k: usize) -> &[Event] {
        &self.events[self.slice_offsets[k]..self.slice_offsets[k + 1]]
    }

    /// Raw id of every dense node index.
    pub fn node_ids(&self) -> &[u64] {
        &self.node_ids
    }

    /// Raw window index of every dense time index.
    pub fn time_windows(&self) -> &[i64] {
        &self.time_windows
    }

    pub fn window_seconds(&self) -> Option<u64> {
        self.window_seconds
    }

    pub fn node_labels(&self) -> Option<&[String]> {
        self.node_labels.as_deref()
    }

    pub fn set_node_labels(&mut self, labels: Vec<String>) -> Result<(), GraphError> {
        if labels.len() != self.num_nodes {
            return Err(GraphError::Document(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.num_nodes
            )));
        }
        self.node_labels = Some(labels);
        Ok(())
    }

    /// Sorted slices in which `node` takes part in at least one event.
    pub fn activity(&self, node: usize) -> &[usize] {
        &self.activity[node]
    }

    pub fn is_active(&self, node: usize, time: usize) -> bool {
        self.activity[node].binary_search(&time).is_ok()
    }

    /// First slice strictly after `time` in which `node` is active.
    pub fn next_active(&self, node: usize, time: usize) -> Option<usize> {
        let acts = &self.activity[node];
        let pos = acts.partition_point(|&t| t <= time);
        acts.get(pos).copied()
    }

    /// Active `(node, time)` pairs, ordered by node then time.
    pub fn active_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.activity
            .iter()
            .enumerate()
            .flat_map(|(i, ts)| ts.iter().map(move |&t| (i, t)))
    }

    pub fn num_active(&self) -> usize {
        self.activity.iter().map(Vec::len).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.events.iter().map(|e| e.weight).sum()
    }

    /// Total interaction weight summed over ordered node pairs, i.e. twice the event weight.
    pub fn volume(&self) -> f64 {
        2.0 * self.total_weight()
    }

    pub fn stats(&self) -> GraphStats {
        let n = self.num_nodes as f64;
        let t = self.num_times as f64;
        let e = self.events.len() as f64;
        let active = self.num_active();
        GraphStats {
            num_nodes: self.num_nodes,
            num_times: self.num_times,
            num_events: self.events.len(),
            num_active: active,
            avg_weight: self.total_weight() / e,
            node_density: active as f64 / (n * t),
            link_density: 2.0 * e / (n * (n - 1.0) * t),
        }
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            num_nodes: self.num_nodes,
            num_times: self.num_times,
            events: self.events.iter().map(|e| (e.i, e.j, e.k, e.weight)).collect(),
            id_map: self.node_ids.clone(),
            time_map: self.time_windows.clone(),
            window_seconds: self.window_seconds,
            node_labels: self.node_labels.clone(),
        }
    }

    pub fn from_document(doc: GraphDocument) -> Result<Self, GraphError> {
        let bad = |m: String| Err(GraphError::Document(m));
        if doc.events.is_empty() {
            return Err(GraphError::Empty);
        }
        if doc.id_map.len() != doc.num_nodes || doc.time_map.len() != doc.num_times {
            return bad("index maps do not match declared sizes".into());
        }
        let mut node_seen = vec![false; doc.num_nodes];
        let mut time_seen = vec![false; doc.num_times];
        let mut events = Vec::with_capacity(doc.events.len());
        for &(i, j, k, weight) in &doc.events {
            if i >= j || j >= doc.num_nodes || k >= doc.num_times {
                return bad(format!("event ({i},{j},{k}) out of range or not canonical"));
            }
            if !(weight.is_finite() && weight > 0.0) {
                return bad(format!("event ({i},{j},{k}) has weight {weight}"));
            }
            node_seen[i] = true;
            node_seen[j] = true;
            time_seen[k] = true;
            events.push(Event { i, j, k, weight });
        }
        if node_seen.iter().any(|s| !s) || time_seen.iter().any(|s| !s) {
            return bad("every node and time slice must host an event".into());
        }
        if let Some(labels) = &doc.node_labels {
            if labels.len() != doc.num_nodes {
                return bad("node label count mismatch".into());
            }
        }
        let mut sorted = events.clone();
        sorted.sort_by(|x, y| (x.k, x.i, x.j).cmp(&(y.k, y.i, y.j)));
        if sorted.windows(2).any(|w| (w[0].k, w[0].i, w[0].j) == (w[1].k, w[1].i, w[1].j)) {
            return bad("duplicate events".into());
        }
        Ok(Self::assemble(doc.id_map, doc.time_map, events, doc.window_seconds, doc.node_labels))
    }

    pub fn to_json(&self) -> Result<String, GraphError> {
        Ok(serde_json::to_string(&self.to_document())?)
    }

    pub fn from_json(s: &str) -> Result<Self, GraphError> {
        Self::from_document(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str, w: u64) -> Result<TimeVaryingGraph, GraphError> {
        parse_contact_lines(s.as_bytes(), w)
    }

    #[test]
    fn window_binning_hand_count() {
        let g = parse("0 5 7\n20 5 7\n900 7 9\n", 600).unwrap();
        assert_eq!(g.num_times(), 2);
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.node_ids(), &[5, 7, 9]);
        assert_eq!(g.time_windows(), &[0, 1]);
        assert_eq!(
            g.events(),
            &[
                Event { i: 0, j: 1, k: 0, weight: 2.0 },
                Event { i: 1, j: 2, k: 1, weight: 1.0 }
            ]
        );
    }

    #[test]
    fn empty_windows_are_dropped() {
        let g = parse("0 1 2\n5000 1 2\n", 600).unwrap();
        assert_eq!(g.num_times(), 2);
        assert_eq!(g.time_windows(), &[0, 8]);
    }

    #[test]
    fn empty_stream_is_an_error() {
        assert!(matches!(parse("", 600), Err(GraphError::Empty)));
        assert!(matches!(parse("# only a comment\n\n", 600), Err(GraphError::Empty)));
    }

    #[test]
    fn malformed_lines_report_line_number() {
        match parse("0 1 2\n10 x 3\n", 600) {
            Err(GraphError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("0 1\n", 600), Err(GraphError::Parse { line: 1, .. })));
        assert!(matches!(parse("0 3 3\n", 600), Err(GraphError::Parse { line: 1, .. })));
        assert!(matches!(parse("0 1 2\n", 0), Err(GraphError::ZeroWindow)));
    }

    #[test]
    fn single_event_stats() {
        let g = TimeVaryingGraph::from_events([(0, 1, 0, 3.5)]).unwrap();
        let s = g.stats();
        assert_eq!(s.avg_weight, 3.5);
        assert_eq!(s.node_density, 1.0);
        assert_eq!(s.num_active, 2);
        assert_eq!(g.volume(), 7.0);
    }

    #[test]
    fn volume_uses_ordered_pairs() {
        let g = TimeVaryingGraph::from_events([(0, 1, 0, 1.0)]).unwrap();
        assert_eq!(g.volume(), 2.0);
        let g = TimeVaryingGraph::from_events([(0, 1, 0, 2.0), (1, 2, 1, 3.0)]).unwrap();
        assert_eq!(g.volume(), 10.0);
    }

    #[test]
    fn next_active_and_activity() {
        let g = TimeVaryingGraph::from_events([(0, 1, 0, 1.0), (0, 2, 1, 1.0), (0, 1, 3, 1.0)])
            .unwrap();
        assert_eq!(g.activity(0), &[0, 1, 2]);
        assert_eq!(g.next_active(0, 0), Some(1));
        assert_eq!(g.next_active(1, 0), Some(2));
        assert_eq!(g.next_active(2, 1), None);
        assert!(g.is_active(2, 1));
        assert!(!g.is_active(2, 0));
    }

    #[test]
    fn duplicate_contacts_merge_and_canonicalize() {
        let g = TimeVaryingGraph::from_contacts([
            RawContact::new(0, 9, 4, 1.0),
            RawContact::new(0, 4, 9, 0.5),
        ])
        .unwrap();
        assert_eq!(g.events(), &[Event { i: 0, j: 1, k: 0, weight: 1.5 }]);
    }

    #[test]
    fn document_rejects_gaps() {
        let doc = GraphDocument {
            num_nodes: 2,
            num_times: 2,
            events: vec![(0, 1, 0, 1.0)],
            id_map: vec![0, 1],
            time_map: vec![0, 1],
            window_seconds: None,
            node_labels: None,
        };
        assert!(matches!(TimeVaryingGraph::from_document(doc), Err(GraphError::Document(_))));
    }
}

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::dataset::Dataset;
use crate::graph::{EdgeId, End, PathGraph, VertexId};
use crate::kkt::{Costs, Event, Label};

pub const FORMAT: &str = "acpath-path/1";

/// Exported path: the graph plus what is needed to map sample indices back
/// to the input file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathDocument {
    pub format: String,
    pub b_const: Option<f64>,
    /// `permutation[i]` is the input position of sample `i`.
    pub permutation: Vec<usize>,
    #[serde(flatten)]
    pub graph: PathGraph,
}

/// JSON document of `graph`. Numbers are written in shortest round-trip form.
pub fn export_json(graph: &PathGraph, data: Option<&Dataset>) -> Result<String, IoError> {
    let doc = PathDocument {
        format: FORMAT.to_string(),
        b_const: data.map(Dataset::b_const),
        permutation: data.map_or_else(|| (0..graph.n).collect(), |d| d.permutation().to_vec()),
        graph: graph.clone(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Reads a document written by [`export_json`] and rebuilds the lookups.
pub fn import_json(text: &str) -> Result<PathDocument, IoError> {
    let mut doc: PathDocument = serde_json::from_str(text)?;
    if doc.format != FORMAT {
        return Err(IoError::Format(doc.format));
    }
    doc.graph.reindex()?;
    Ok(doc)
}

/// Connected run of edges carrying one event.
#[derive(Debug, Clone, PartialEq)]
pub struct EventPolyline {
    pub event: Event,
    pub points: Vec<Costs>,
}

/// Event paths of all samples, chained through shared vertices. Rays are cut
/// `reach` away from their finite end; open edges are left out.
pub fn event_polylines(graph: &PathGraph, reach: f64) -> Vec<EventPolyline> {
    let mut groups: BTreeMap<Event, Vec<EdgeId>> = BTreeMap::new();
    for e in &graph.edges {
        if let (Label::Event(ev), None) = (e.label, &e.special) {
            if graph.edge_points(e.id, reach).is_some() {
                groups.entry(ev).or_default().push(e.id);
            }
        }
    }
    let mut out = Vec::new();
    for (event, edges) in groups {
        let vertex_of = |e: EdgeId, k: usize| match graph.edges[e].ends[k] {
            End::Vertex(v) => Some(v),
            _ => None,
        };
        let degree = |v: VertexId| edges.iter().filter(|&&e| (0..2).any(|k| vertex_of(e, k) == Some(v))).count();
        let mut used: HashSet<EdgeId> = HashSet::new();
        // start at path ends first so that each path comes out in one piece
        let mut starts: Vec<EdgeId> = edges
            .iter()
            .copied()
            .filter(|&e| (0..2).any(|k| vertex_of(e, k).is_none_or(|v| degree(v) == 1)))
            .collect();
        starts.extend(edges.iter().copied());
        for start in starts {
            if used.contains(&start) {
                continue;
            }
            let [a, b] = graph.edge_points(start, reach).expect("filtered above");
            let forward = vertex_of(start, 0).is_none_or(|v| degree(v) == 1);
            let (mut points, mut tip) = if forward {
                (vec![a, b], vertex_of(start, 1))
            } else {
                (vec![b, a], vertex_of(start, 0))
            };
            used.insert(start);
            while let Some(v) = tip {
                let next = edges.iter().copied().find(|&e| {
                    !used.contains(&e) && (0..2).any(|k| vertex_of(e, k) == Some(v))
                });
                let Some(e) = next else { break };
                used.insert(e);
                let [p, q] = graph.edge_points(e, reach).expect("filtered above");
                if vertex_of(e, 0) == Some(v) {
                    points.push(q);
                    tip = vertex_of(e, 1);
                } else {
                    points.push(p);
                    tip = vertex_of(e, 0);
                }
            }
            out.push(EventPolyline { event, points });
        }
    }
    out
}

/// CSV of the event paths, one row per polyline point:
/// `sample,t,polyline,seq,c_plus,c_minus`.
pub fn write_event_csv(graph: &PathGraph, reach: f64) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sample", "t", "polyline", "seq", "c_plus", "c_minus"])?;
    for (id, line) in event_polylines(graph, reach).iter().enumerate() {
        for (seq, p) in line.points.iter().enumerate() {
            w.write_record([
                line.event.sample.to_string(),
                line.event.t.as_u8().to_string(),
                id.to_string(),
                seq.to_string(),
                p.plus.to_string(),
                p.minus.to_string(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| IoError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

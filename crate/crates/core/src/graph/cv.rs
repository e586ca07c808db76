//! Closing open vertices through the vertex loop.

use super::{Cause, EdgeKey, End, FacetId, PathGraph, Unexplored, VertexId, VertexKind};
use crate::kkt::{self, Degeneracy, Label};

/// For every open interior vertex, creates the facet diagonally across it
/// (both joint events applied) and the two edges that continue the event
/// lines past the vertex. New objects go to layer `m + 1`. Vertices next to
/// a special facet are skipped; vertices whose loop does not close are
/// quarantined. Returns the facets created.
pub fn cv(graph: &mut PathGraph, m: usize, touched: &[VertexId]) -> Vec<FacetId> {
    let mut created = Vec::new();
    for &v in touched {
        let Some(vx) = graph.vertex(v) else { continue };
        let VertexKind::Interior { base, e_in, e_out } = vx.kind.clone() else {
            continue;
        };
        if vx.edges.len() >= 4 {
            continue;
        }
        if graph.vertex_facets(v).iter().any(|&f| graph.facets[f].special.is_some()) {
            continue;
        }
        let sets = graph.facets[base].sets.clone();
        let loop_sets = (|| {
            if e_in.sample == e_out.sample {
                return None;
            }
            let s1 = kkt::apply_event(&sets, e_in).ok()?;
            let s2 = kkt::apply_event(&sets, e_out).ok()?;
            let a = kkt::joint_update(&sets, e_in, e_out).ok()?;
            let b = kkt::joint_update(&sets, e_out, e_in).ok()?;
            let back = kkt::joint_update(&a, e_in, e_out).ok()?;
            (a == b && back == sets).then_some((s1, s2, a))
        })();
        let found = loop_sets.and_then(|(s1, s2, s12)| {
            let f1 = graph.facet_by_key(&s1.canonical_key())?;
            let f2 = graph.facet_by_key(&s2.canonical_key())?;
            Some((f1, f2, s12))
        });
        let Some((f1, f2, s12)) = found else {
            quarantine(graph, v, base);
            continue;
        };
        let (f12, new) = graph.facet_or_insert(s12, m + 1);
        if new {
            created.push(f12);
        }
        let k2 = graph.facets[f2].key.clone();
        let k12 = graph.facets[f12].key.clone();
        // continuation of the incoming event line: walked away from v by f2
        // continuation of the outgoing event line: walked away from v by f12
        for (a, b, label, walker) in [
            (f2, f12, Label::Event(e_in), &k2),
            (f1, f12, Label::Event(e_out), &k12),
        ] {
            let key = EdgeKey::between(graph.facets[a].key.clone(), graph.facets[b].key.clone());
            let e = graph.edge_or_insert(key, label, m + 1);
            graph.link_edge_facet(e, a);
            graph.link_edge_facet(e, b);
            let slot = if graph.edges[e].key.forward_for(walker) { 0 } else { 1 };
            if let Some(other) = graph.set_end(e, slot, End::Vertex(v)) {
                log::warn!("vertex {v}: spawned edge {e} already ends at vertex {other}");
                graph.merge_vertices(other.min(v), other.max(v));
                if graph.vertex(v).is_none() {
                    break;
                }
            }
            graph.link_vertex_edge(v, e);
        }
    }
    created
}

fn quarantine(graph: &mut PathGraph, v: VertexId, base: FacetId) {
    let key = graph.vertex(v).expect("live vertex").key.clone();
    if graph.vertex_index.get(&key) == Some(&v) {
        graph.vertex_index.remove(&key);
    }
    let coords = {
        let vx = graph.vertex_mut(v);
        vx.kind = VertexKind::Special {
            degeneracy: Degeneracy::Generic,
        };
        vx.coords
    };
    let facets: Vec<FacetId> = graph.vertex_facets(v).into_iter().collect();
    let constraints = graph
        .vertex(v)
        .map(|vx| {
            vx.edges
                .iter()
                .filter_map(|&e| graph.edges[e].constraints.first().map(|c| c.1))
                .collect()
        })
        .unwrap_or_default();
    graph.record(Unexplored {
        kind: Degeneracy::Generic,
        cause: Cause::LoopViolation { vertex: v },
        facets: if facets.is_empty() { vec![base] } else { facets },
        constraints,
        anchor: Some(coords),
    });
}

//! Merging open edges and facets, status updates and cache pruning.

use super::{PathGraph, Status, VertexId};

/// Updates statuses after a layer and drops lookup entries that can no
/// longer be hit: closed edges and vertices whose facets are all
/// processed. Facet keys stay indexed for the whole run.
pub fn mef(graph: &mut PathGraph, touched: &[VertexId]) {
    for e in graph.edges.iter_mut() {
        if e.status == Status::Open && e.is_complete() {
            e.status = Status::Closed;
        }
    }
    for &v in touched {
        let Some(vx) = graph.vertices[v].as_mut() else { continue };
        if vx.kind.required_edges() == Some(vx.edges.len()) {
            vx.status = Status::Closed;
        }
    }
    for f in graph.facets.iter_mut() {
        if f.bounded() {
            f.status = Status::Closed;
        }
    }

    let processed = |graph: &PathGraph, fs: &[usize]| fs.iter().all(|&f| graph.facets[f].processed());
    let stale_edges: Vec<_> = graph
        .edge_index
        .iter()
        .filter(|(_, &e)| {
            let edge = &graph.edges[e];
            edge.status == Status::Closed && processed(graph, &edge.facets)
        })
        .map(|(k, _)| k.clone())
        .collect();
    for k in stale_edges {
        graph.edge_index.remove(&k);
    }
    let stale_vertices: Vec<_> = graph
        .vertex_index
        .iter()
        .filter(|(_, &v)| {
            graph.vertex(v).is_some_and(|vx| {
                vx.status == Status::Closed && {
                    let fs: Vec<usize> = graph.vertex_facets(v).into_iter().collect();
                    processed(graph, &fs)
                }
            })
        })
        .map(|(k, _)| k.clone())
        .collect();
    for k in stale_vertices {
        graph.vertex_index.remove(&k);
    }
}

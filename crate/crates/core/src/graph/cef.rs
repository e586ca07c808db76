//! Closing edges and facets: the boundary of every facet of a layer.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::{End, FacetId, PathGraph};
use crate::dataset::Dataset;
use crate::kkt::{self, FacetSystem};
use crate::polytope::{self, FacetBoundary};
use crate::Tolerances;

#[derive(Debug, Clone)]
pub struct CefData {
    pub system: FacetSystem,
    pub boundary: FacetBoundary,
    /// The boundary was read off the already closed edge cycle.
    pub via_graph: bool,
}

#[derive(Debug, Clone)]
pub struct CefOutcome {
    pub facet: FacetId,
    pub result: Result<CefData, String>,
}

/// Computes the boundary of every listed facet. The facets' known edges
/// enter the halfplane intersection as mandatory constraints. Results are
/// ordered like `facets`.
pub fn cef(
    graph: &PathGraph,
    facets: &[FacetId],
    data: &Dataset,
    tol: &Tolerances,
    parallel: bool,
) -> Vec<CefOutcome> {
    let work = |&f: &FacetId| CefOutcome {
        facet: f,
        result: close_facet(graph, f, data, tol),
    };
    #[cfg(feature = "parallel")]
    if parallel {
        return facets.par_iter().map(work).collect();
    }
    let _ = parallel;
    facets.iter().map(work).collect()
}

fn close_facet(graph: &PathGraph, f: FacetId, data: &Dataset, tol: &Tolerances) -> Result<CefData, String> {
    let facet = &graph.facets[f];
    let system = kkt::build_system(&facet.sets, data, tol.rank).map_err(|e| e.to_string())?;
    let mut mandatory = Vec::with_capacity(facet.edges.len());
    for &e in &facet.edges {
        let label = graph.edges[e].label;
        let idx = system
            .constraints
            .iter()
            .position(|c| c.label() == label)
            .ok_or_else(|| format!("known edge {e} has no constraint in this facet"))?;
        mandatory.push(idx);
    }
    if let Some(boundary) = boundary_from_graph(graph, f, &system, tol.feas) {
        return Ok(CefData {
            system,
            boundary,
            via_graph: true,
        });
    }
    let boundary = polytope::intersect_halfplanes(&system.constraints, &mandatory, tol.feas)
        .map_err(|e| e.to_string())?;
    Ok(CefData {
        system,
        boundary,
        via_graph: false,
    })
}

/// Boundary of a facet whose known edges already close into a cycle.
fn boundary_from_graph(graph: &PathGraph, f: FacetId, system: &FacetSystem, tol: f64) -> Option<FacetBoundary> {
    let facet = &graph.facets[f];
    if facet.edges.len() < 3 {
        return None;
    }
    // (start, end, constraint index) of every edge in this facet's walk
    let mut walk = Vec::with_capacity(facet.edges.len());
    for &e in &facet.edges {
        let edge = &graph.edges[e];
        let (a, b) = match edge.ends {
            [End::Vertex(a), End::Vertex(b)] => (a, b),
            _ => return None,
        };
        let (start, end) = if edge.key.forward_for(&facet.key) { (a, b) } else { (b, a) };
        let idx = system.constraints.iter().position(|c| c.label() == edge.label)?;
        walk.push((start, end, idx));
    }
    let n = walk.len();
    let mut order = Vec::with_capacity(n);
    let mut cur = 0;
    for _ in 0..n {
        order.push(cur);
        let end = walk[cur].1;
        cur = walk.iter().position(|w| w.0 == end)?;
    }
    if cur != 0 || {
        let mut seen = order.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len() != n
    } {
        return None;
    }
    let sides: Vec<usize> = order.iter().map(|&k| walk[k].2).collect();
    let vertices = order
        .iter()
        .map(|&k| graph.vertex(walk[k].1).map(|v| v.coords))
        .collect::<Option<Vec<_>>>()?;
    polytope::boundary_from_cycle(&system.constraints, &sides, vertices, tol)
}

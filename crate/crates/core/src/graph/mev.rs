//! Merging closed edges and open vertices after a layer's boundaries are
//! known.

use std::collections::HashMap;

use super::{
    index_group, Cause, CefOutcome, EdgeKey, End, FacetId, GroupLabel, PathGraph, Unexplored, Uniqueness,
    VertexId, VertexKey, VertexKind,
};
use crate::dataset::Dataset;
use crate::kkt::{self, ActiveSets, AffineConstraint, Axis, Degeneracy, Event, Family, FacetSystem, Label, Membership};
use crate::polytope::FacetBoundary;

struct TentEdge {
    facet: FacetId,
    key: EdgeKey,
    label: Label,
    neighbor: Option<FacetId>,
    constraint: AffineConstraint,
    special: Option<(Degeneracy, Vec<AffineConstraint>)>,
}

struct TentVertex {
    key: VertexKey,
    kind: VertexKind,
    coords: kkt::Costs,
    special: Option<Vec<AffineConstraint>>,
    facet: FacetId,
}

/// Integrates the boundaries of layer `m` into the graph: creates the
/// neighbouring facets across every event edge (new ones go to layer
/// `m + 1`), then edges and vertices, merging replicas by key. Returns the
/// vertices touched.
pub fn mev(graph: &mut PathGraph, m: usize, outcomes: Vec<crate::graph::CefOutcome>, data: &Dataset) -> Vec<VertexId> {
    let mut done: Vec<(FacetId, FacetSystem, FacetBoundary)> = Vec::new();
    for CefOutcome { facet, result } in outcomes {
        match result {
            Ok(d) => {
                if d.via_graph {
                    log::trace!("facet {facet} closed from its edge cycle");
                }
                done.push((facet, d.system, d.boundary));
            }
            Err(reason) => fail_facet(graph, facet, reason),
        }
    }

    // (a) neighbouring facets across event sides
    let mut cands: Vec<(usize, usize, ActiveSets)> = Vec::new();
    let mut side_special: HashMap<(usize, usize), (Degeneracy, Vec<AffineConstraint>)> = HashMap::new();
    for (k, (f, sys, fb)) in done.iter().enumerate() {
        let sets = &graph.facets[*f].sets;
        for (s, side) in fb.sides.iter().enumerate() {
            let Label::Event(e) = side.constraint.label() else {
                continue;
            };
            if !side.coincident.is_empty() {
                let mut group = vec![side.constraint];
                group.extend(side.coincident.iter().map(|&i| sys.constraints[i]));
                let kind = match kkt::detect_degeneracy(&group, 1e-9) {
                    Degeneracy::Generic => Degeneracy::MultiEventEdge,
                    d => d,
                };
                side_special.insert((k, s), (kind, group));
                continue;
            }
            match kkt::apply_event(sets, e) {
                Ok(next) => cands.push((k, s, next)),
                Err(err) => {
                    side_special.insert((k, s), (Degeneracy::Generic, vec![side.constraint]));
                    log::warn!("facet {f}: {err}");
                }
            }
        }
    }
    let labels = index_group(&graph.key_index, &cands, |c| c.2.canonical_key());
    let mut fresh_ids: HashMap<usize, FacetId> = HashMap::new();
    let mut neighbor: HashMap<(usize, usize), FacetId> = HashMap::new();
    for ((k, s, sets), label) in cands.into_iter().zip(labels) {
        let id = match label {
            GroupLabel::Existing(id) => id,
            GroupLabel::Fresh(j) => *fresh_ids
                .entry(j)
                .or_insert_with(|| graph.facet_or_insert(sets, m + 1).0),
        };
        neighbor.insert((k, s), id);
    }

    // (b) edges
    let mut tent_edges: Vec<(usize, usize, TentEdge)> = Vec::new();
    for (k, (f, _, fb)) in done.iter().enumerate() {
        let fkey = graph.facets[*f].key.clone();
        for (s, side) in fb.sides.iter().enumerate() {
            let label = side.constraint.label();
            let special = side_special.remove(&(k, s));
            let nb = neighbor.get(&(k, s)).copied();
            let key = match (label, &special, nb) {
                (_, Some(_), _) => EdgeKey::Multi(graph.fresh_special()),
                (Label::Axis(a), None, _) => EdgeKey::Axis(a, fkey.clone()),
                (Label::Event(_), None, Some(n)) => EdgeKey::between(fkey.clone(), graph.facets[n].key.clone()),
                (Label::Event(_), None, None) => unreachable!("event side without neighbour"),
            };
            tent_edges.push((
                k,
                s,
                TentEdge {
                    facet: *f,
                    key,
                    label,
                    neighbor: nb,
                    constraint: side.constraint,
                    special,
                },
            ));
        }
    }
    let labels = index_group(&graph.edge_index, &tent_edges, |t| t.2.key.clone());
    let mut fresh_edges: HashMap<usize, usize> = HashMap::new();
    let mut edge_of: HashMap<(usize, usize), usize> = HashMap::new();
    for ((k, s, t), label) in tent_edges.into_iter().zip(labels) {
        let e = match label {
            GroupLabel::Existing(id) => {
                graph.edges[id].uniqueness = Uniqueness::Replicated;
                id
            }
            GroupLabel::Fresh(j) => {
                *fresh_edges.entry(j).or_insert_with(|| graph.edge_or_insert(t.key.clone(), t.label, m))
            }
        };
        graph.link_edge_facet(e, t.facet);
        if let Some(n) = t.neighbor {
            graph.link_edge_facet(e, n);
        }
        if graph.edges[e].constraint_from(t.facet).is_none() {
            graph.edges[e].constraints.push((t.facet, t.constraint));
        }
        if let Some((kind, group)) = t.special {
            graph.edges[e].special = Some(kind);
            graph.facets[t.facet].special.get_or_insert(kind);
            let anchor = done[k].2.side_ends(s).1.or(done[k].2.side_ends(s).0).map(|v| done[k].2.vertices[v]);
            graph.record(Unexplored {
                kind,
                cause: Cause::MultiEventEdge { edge: e },
                facets: vec![t.facet],
                constraints: group,
                anchor,
            });
        }
        edge_of.insert((k, s), e);
    }

    // (c) vertices
    let mut tent_vertices: Vec<(usize, usize, TentVertex)> = Vec::new();
    for (k, (f, sys, fb)) in done.iter().enumerate() {
        for v in 0..fb.vertices.len() {
            let tv = classify_vertex(graph, *f, sys, fb, v, data);
            tent_vertices.push((k, v, tv));
        }
    }
    for (_, _, tv) in tent_vertices.iter_mut() {
        if tv.special.is_some() {
            tv.key = VertexKey::Special(graph.fresh_special());
        }
    }
    let labels = index_group(&graph.vertex_index, &tent_vertices, |t| t.2.key.clone());
    let mut fresh_vertices: HashMap<usize, VertexId> = HashMap::new();
    let mut vertex_of: HashMap<(usize, usize), VertexId> = HashMap::new();
    for ((k, v, tv), label) in tent_vertices.into_iter().zip(labels) {
        let id = match label {
            GroupLabel::Existing(id) => {
                graph.vertex_mut(id).uniqueness = Uniqueness::Replicated;
                id
            }
            GroupLabel::Fresh(j) => *fresh_vertices.entry(j).or_insert_with(|| {
                let id = graph.new_vertex(tv.key.clone(), tv.kind.clone(), tv.coords, m);
                if let (VertexKind::Special { degeneracy }, Some(group)) = (&tv.kind, &tv.special) {
                    graph.facets[tv.facet].special.get_or_insert(*degeneracy);
                    graph.record(Unexplored {
                        kind: *degeneracy,
                        cause: Cause::DegenerateVertex { vertex: id },
                        facets: vec![tv.facet],
                        constraints: group.clone(),
                        anchor: Some(tv.coords),
                    });
                }
                id
            }),
        };
        vertex_of.insert((k, v), id);
    }

    // (d) edge ends and facet edge order
    let mut merges: Vec<(VertexId, VertexId)> = Vec::new();
    let mut touched: Vec<VertexId> = vertex_of.values().copied().collect();
    for (k, (f, _, fb)) in done.iter().enumerate() {
        let fkey = graph.facets[*f].key.clone();
        let mut order = Vec::with_capacity(fb.sides.len());
        for s in 0..fb.sides.len() {
            let e = edge_of[&(k, s)];
            order.push(e);
            let (a, b) = fb.side_ends(s);
            let start = a.map_or(End::Infinity, |v| End::Vertex(vertex_of[&(k, v)]));
            let end = b.map_or(End::Infinity, |v| End::Vertex(vertex_of[&(k, v)]));
            let (s0, s1) = if graph.edges[e].key.forward_for(&fkey) { (0, 1) } else { (1, 0) };
            for (slot, at) in [(s0, start), (s1, end)] {
                if let Some(other) = graph.set_end(e, slot, at) {
                    if let End::Vertex(v) = at {
                        merges.push((other, v));
                    }
                }
                if let End::Vertex(v) = at {
                    graph.link_vertex_edge(v, e);
                }
            }
        }
        let facet = &mut graph.facets[*f];
        for &e in &facet.edges {
            if !order.contains(&e) {
                log::warn!("facet {f}: known edge {e} missing from its boundary");
                order.push(e);
            }
        }
        facet.edges = order;
    }

    // (e) merge replicated vertices met at the same edge end
    let mut alias: HashMap<VertexId, VertexId> = HashMap::new();
    let find = |alias: &HashMap<VertexId, VertexId>, mut v: VertexId| {
        while let Some(&w) = alias.get(&v) {
            v = w;
        }
        v
    };
    for (a, b) in merges {
        let (a, b) = (find(&alias, a), find(&alias, b));
        if a == b {
            continue;
        }
        let (keep, gone) = (a.min(b), a.max(b));
        graph.merge_vertices(keep, gone);
        alias.insert(gone, keep);
    }
    for v in touched.iter_mut() {
        *v = find(&alias, *v);
    }
    touched.sort_unstable();
    touched.dedup();

    for (f, sys, fb) in done {
        let facet = &mut graph.facets[f];
        facet.alpha = sys.alpha;
        facet.boundary = Some(fb);
    }
    touched
}

fn fail_facet(graph: &mut PathGraph, f: FacetId, reason: String) {
    log::debug!("facet {f} ({}) failed: {reason}", graph.facets[f].key);
    graph.facets[f].failure = Some(reason.clone());
    graph.facets[f].special = Some(Degeneracy::Generic);
    let anchor = graph.facets[f]
        .edges
        .iter()
        .flat_map(|&e| graph.edges[e].vertex_ids().collect::<Vec<_>>())
        .find_map(|v| graph.vertex(v).map(|x| x.coords));
    let mut facets: Vec<FacetId> = vec![f];
    let mut constraints = Vec::new();
    for &e in &graph.facets[f].edges {
        for (g, c) in &graph.edges[e].constraints {
            facets.push(*g);
            constraints.push(*c);
        }
    }
    facets.sort_unstable();
    facets.dedup();
    graph.record(Unexplored {
        kind: Degeneracy::Generic,
        cause: Cause::FacetFailure { facet: f, reason },
        facets,
        constraints,
        anchor,
    });
}

/// Discrete identity of boundary vertex `v` of facet `f`.
fn classify_vertex(
    graph: &PathGraph,
    f: FacetId,
    sys: &FacetSystem,
    fb: &FacetBoundary,
    v: usize,
    data: &Dataset,
) -> TentVertex {
    let facet = &graph.facets[f];
    let sets = &facet.sets;
    let coords = fb.vertices[v];
    let s_in = fb.side_in(v);
    let s_out = fb.side_out(v);
    let mut expected = vec![s_in.index, s_out.index];
    let axis_index = |a: Axis| {
        let fam = match a {
            Axis::CPlus => Family::AxisCPlus,
            Axis::CMinus => Family::AxisCMinus,
        };
        sys.constraints.iter().position(|c| c.family == fam).expect("axis constraints present")
    };
    let special = |group: Vec<AffineConstraint>| {
        let degeneracy = match kkt::detect_degeneracy(&group, 1e-9) {
            Degeneracy::MultiEventEdge => Degeneracy::MultiEventEdge,
            Degeneracy::MultiJointEventVertex => Degeneracy::MultiJointEventVertex,
            Degeneracy::Generic if group.len() >= 3 => Degeneracy::MultiJointEventVertex,
            Degeneracy::Generic => Degeneracy::Generic,
        };
        TentVertex {
            key: VertexKey::Special(0),
            kind: VertexKind::Special { degeneracy },
            coords,
            special: Some(group),
            facet: f,
        }
    };
    let on_group = || fb.vertex_on[v].iter().map(|&i| sys.constraints[i]).collect::<Vec<_>>();
    if !s_in.coincident.is_empty() || !s_out.coincident.is_empty() {
        return special(on_group());
    }
    let key_after = |e: Event| kkt::apply_event(sets, e).map(|s| s.canonical_key());

    let resolved: Option<(VertexKey, VertexKind)> = match (s_in.constraint.label(), s_out.constraint.label()) {
        (Label::Axis(_), Label::Axis(_)) => Some((VertexKey::Origin, VertexKind::Origin)),
        (Label::Axis(a), Label::Event(e)) | (Label::Event(e), Label::Axis(a)) => {
            let i = e.sample;
            if data.class(i) == a.pinned_class() {
                if sets.state(i) == Membership::Margin {
                    None
                } else {
                    key_after(e).ok().map(|mk| {
                        (
                            VertexKey::Pinch {
                                axis: a,
                                facet: mk,
                                sample: i,
                            },
                            VertexKind::Pinch { axis: a },
                        )
                    })
                }
            } else {
                key_after(e).ok().map(|nk| {
                    let fk = facet.key.clone();
                    let facets = if fk <= nk { (fk, nk) } else { (nk, fk) };
                    (VertexKey::Transversal { axis: a, facets }, VertexKind::Transversal { axis: a })
                })
            }
        }
        (Label::Event(e1), Label::Event(e2)) if e1.sample == e2.sample => {
            let a = Axis::for_class(data.class(e1.sample));
            let on_axis = match a {
                Axis::CPlus => coords.plus,
                Axis::CMinus => coords.minus,
            }
            .abs()
                <= 1e-6 * (1.0 + coords.norm_inf());
            if sets.state(e1.sample) == Membership::Margin && e1.t != e2.t && on_axis {
                expected.push(axis_index(a));
                Some((
                    VertexKey::Pinch {
                        axis: a,
                        facet: facet.key.clone(),
                        sample: e1.sample,
                    },
                    VertexKind::Pinch { axis: a },
                ))
            } else {
                None
            }
        }
        (Label::Event(e1), Label::Event(e2)) => {
            let s1 = kkt::apply_event(sets, e1);
            let s2 = kkt::apply_event(sets, e2);
            let s12 = kkt::joint_update(sets, e1, e2);
            match (s1, s2, s12) {
                (Ok(s1), Ok(s2), Ok(s12)) => {
                    let mut keys = [facet.key.clone(), s1.canonical_key(), s2.canonical_key(), s12.canonical_key()];
                    keys.sort();
                    Some((
                        VertexKey::Interior(keys),
                        VertexKind::Interior {
                            base: f,
                            e_in: e1,
                            e_out: e2,
                        },
                    ))
                }
                _ => None,
            }
        }
    };
    let extra = fb.vertex_on[v].iter().any(|i| !expected.contains(i));
    match resolved {
        Some((key, kind)) if !extra => TentVertex {
            key,
            kind,
            coords,
            special: None,
            facet: f,
        },
        _ => special(on_group()),
    }
}

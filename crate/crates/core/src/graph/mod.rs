//! Layered vertex/edge/facet store of the regularization path.
//!
//! Objects are identified by discrete keys derived from active sets and
//! events. Replicas produced independently by neighbouring facets are
//! merged through these keys, never through coordinates.

mod cef;
mod cv;
mod mef;
mod mev;

use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kkt::{
    self, ActiveSets, AffineConstraint, AffineFunctional, Axis, Costs, Degeneracy, Event, Label, SetKey,
};
use crate::polytope::{FacetBoundary, Location};

pub use cef::{cef, CefData, CefOutcome};
pub use cv::cv;
pub use mef::mef;
pub use mev::mev;

pub type FacetId = usize;
pub type EdgeId = usize;
pub type VertexId = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("{kind} {from} links to missing {target_kind} {target}")]
    DanglingReference {
        kind: &'static str,
        from: usize,
        target_kind: &'static str,
        target: usize,
    },
    #[error("duplicate facet key {0}")]
    DuplicateKey(SetKey),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Uniqueness {
    Single,
    Replicated,
}

/// Discrete identity of an edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKey {
    /// Shared by two facets; keys sorted.
    Between(SetKey, SetKey),
    /// Piece of a quadrant axis bounding one facet.
    Axis(Axis, SetKey),
    /// Several coincident events; never merged.
    Multi(usize),
}

impl EdgeKey {
    pub fn between(a: SetKey, b: SetKey) -> Self {
        if a <= b {
            EdgeKey::Between(a, b)
        } else {
            EdgeKey::Between(b, a)
        }
    }

    /// Whether `facet` walks this edge in its stored direction (slot 0 to
    /// slot 1) when traversing its own boundary counterclockwise.
    pub fn forward_for(&self, facet: &SetKey) -> bool {
        match self {
            EdgeKey::Between(a, _) => a == facet,
            _ => true,
        }
    }
}

/// Discrete identity of a vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKey {
    Origin,
    /// An event edge crossing an axis between two facets.
    Transversal { axis: Axis, facets: (SetKey, SetKey) },
    /// Tip of a margin facet pinched onto an axis by one sample.
    Pinch {
        axis: Axis,
        facet: SetKey,
        sample: usize,
    },
    /// Crossing of two events; the four surrounding facet keys, sorted.
    Interior([SetKey; 4]),
    /// Quarantined; never merged.
    Special(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum VertexKind {
    Origin,
    Transversal { axis: Axis },
    Pinch { axis: Axis },
    /// Seen first from `base` with boundary events `e_in` then `e_out`.
    Interior {
        base: FacetId,
        e_in: Event,
        e_out: Event,
    },
    Special { degeneracy: Degeneracy },
}

impl VertexKind {
    /// Number of incident edges of a complete vertex.
    pub fn required_edges(&self) -> Option<usize> {
        match self {
            VertexKind::Origin => Some(2),
            VertexKind::Transversal { .. } => Some(3),
            VertexKind::Pinch { .. } | VertexKind::Interior { .. } => Some(4),
            VertexKind::Special { .. } => None,
        }
    }

    pub fn on_axis(&self) -> bool {
        matches!(
            self,
            VertexKind::Origin | VertexKind::Transversal { .. } | VertexKind::Pinch { .. }
        )
    }

    pub fn is_special(&self) -> bool {
        matches!(self, VertexKind::Special { .. })
    }
}

/// One end of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    Unknown,
    Vertex(VertexId),
    Infinity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vertex {
    pub id: VertexId,
    pub key: VertexKey,
    pub kind: VertexKind,
    pub coords: Costs,
    pub edges: Vec<EdgeId>,
    pub status: Status,
    pub uniqueness: Uniqueness,
    pub layer: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub key: EdgeKey,
    pub label: Label,
    /// Slot 0 is where the walk of the first facet in the key starts.
    pub ends: [End; 2],
    pub facets: Vec<FacetId>,
    /// The boundary functional as built by each adjacent facet.
    pub constraints: Vec<(FacetId, AffineConstraint)>,
    pub status: Status,
    pub uniqueness: Uniqueness,
    pub layer: usize,
    pub special: Option<Degeneracy>,
}

impl Edge {
    pub fn event(&self) -> Option<Event> {
        match self.label {
            Label::Event(e) => Some(e),
            Label::Axis(_) => None,
        }
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.ends.iter().filter_map(|e| match e {
            End::Vertex(v) => Some(*v),
            _ => None,
        })
    }

    pub fn constraint_from(&self, f: FacetId) -> Option<&AffineConstraint> {
        self.constraints.iter().find(|(g, _)| *g == f).map(|(_, c)| c)
    }

    fn is_complete(&self) -> bool {
        !self.ends.contains(&End::Unknown)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Facet {
    pub id: FacetId,
    pub key: SetKey,
    pub sets: ActiveSets,
    /// Boundary edges, counterclockwise once the facet is processed.
    pub edges: Vec<EdgeId>,
    pub status: Status,
    pub layer: usize,
    pub special: Option<Degeneracy>,
    pub boundary: Option<FacetBoundary>,
    pub alpha: Vec<(usize, AffineFunctional)>,
    /// Why the boundary could not be built, if it could not.
    pub failure: Option<String>,
}

impl Facet {
    pub fn processed(&self) -> bool {
        self.boundary.is_some() || self.failure.is_some()
    }

    pub fn bounded(&self) -> bool {
        self.boundary.as_ref().is_some_and(|b| b.bounded)
    }

    /// Full dual vector at `c` from this facet's affine path.
    pub fn alpha_at(&self, c: Costs) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .sets
            .states()
            .iter()
            .enumerate()
            .map(|(i, s)| match s {
                kkt::Membership::Inside => {
                    if i < self.sets.n_plus() {
                        c.plus
                    } else {
                        c.minus
                    }
                }
                _ => 0.0,
            })
            .collect();
        for &(i, a) in &self.alpha {
            out[i] = a.eval(c);
        }
        out
    }
}

/// What made part of the plane unexplorable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "cause")]
pub enum Cause {
    /// Several events share one boundary line.
    MultiEventEdge { edge: EdgeId },
    /// More than two breakpoints meet at one vertex.
    DegenerateVertex { vertex: VertexId },
    /// The joint events at a vertex do not close the loop.
    LoopViolation { vertex: VertexId },
    /// The facet's boundary could not be built.
    FacetFailure { facet: FacetId, reason: String },
}

/// Descriptor of a region the layered sweep skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unexplored {
    pub kind: Degeneracy,
    #[serde(flatten)]
    pub cause: Cause,
    /// Facets bordering the region.
    pub facets: Vec<FacetId>,
    /// Boundary functionals involved.
    pub constraints: Vec<AffineConstraint>,
    /// A point on the region's border.
    pub anchor: Option<Costs>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Layer {
    pub facets: Vec<FacetId>,
    pub edges: Vec<EdgeId>,
    pub vertices: Vec<VertexId>,
}

/// Result of [`index_group`] for one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupLabel<I> {
    Existing(I),
    /// Candidates with equal attributes share a fresh label.
    Fresh(usize),
}

/// Labels every candidate with the reference item of equal attribute, or a
/// fresh label shared by all candidates with that attribute.
pub fn index_group<K, I, T>(
    reference: &HashMap<K, I>,
    candidates: &[T],
    attribute: impl Fn(&T) -> K,
) -> Vec<GroupLabel<I>>
where
    K: Hash + Eq,
    I: Copy,
{
    let mut fresh: HashMap<K, usize> = HashMap::new();
    candidates
        .iter()
        .map(|c| {
            let k = attribute(c);
            if let Some(&id) = reference.get(&k) {
                GroupLabel::Existing(id)
            } else {
                let next = fresh.len();
                GroupLabel::Fresh(*fresh.entry(k).or_insert(next))
            }
        })
        .collect()
}

/// Rewrites every reference in `targets` through `map`. References absent
/// from `map` are kept if `live` accepts them.
pub fn relabel<T>(
    targets: &mut [T],
    map: &HashMap<usize, usize>,
    links: impl Fn(&mut T) -> Vec<&mut usize>,
    live: impl Fn(usize) -> bool,
) -> Result<(), usize> {
    for t in targets.iter_mut() {
        for r in links(t) {
            if let Some(&to) = map.get(r) {
                *r = to;
            }
            if !live(*r) {
                return Err(*r);
            }
        }
    }
    Ok(())
}

/// The vertex/edge/facet graph with its lookup indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathGraph {
    pub n: usize,
    pub n_plus: usize,
    pub facets: Vec<Facet>,
    pub edges: Vec<Edge>,
    /// Merged vertices leave `None` behind.
    pub vertices: Vec<Option<Vertex>>,
    pub layers: Vec<Layer>,
    pub unexplored: Vec<Unexplored>,
    #[serde(skip)]
    key_index: HashMap<SetKey, FacetId>,
    #[serde(skip)]
    edge_index: HashMap<EdgeKey, EdgeId>,
    #[serde(skip)]
    vertex_index: HashMap<VertexKey, VertexId>,
    #[serde(skip)]
    next_special: usize,
}

impl PathGraph {
    pub fn new(n: usize, n_plus: usize) -> Self {
        PathGraph {
            n,
            n_plus,
            facets: Vec::new(),
            edges: Vec::new(),
            vertices: Vec::new(),
            layers: Vec::new(),
            unexplored: Vec::new(),
            key_index: HashMap::new(),
            edge_index: HashMap::new(),
            vertex_index: HashMap::new(),
            next_special: 0,
        }
    }

    /// Rebuilds the lookup indices after deserialization.
    pub fn reindex(&mut self) -> Result<(), GraphError> {
        self.key_index.clear();
        for f in &self.facets {
            if self.key_index.insert(f.key.clone(), f.id).is_some() {
                return Err(GraphError::DuplicateKey(f.key.clone()));
            }
        }
        self.edge_index = self.edges.iter().map(|e| (e.key.clone(), e.id)).collect();
        self.vertex_index = self.live_vertices().map(|v| (v.key.clone(), v.id)).collect();
        let specials = self.vertices.iter().flatten().filter_map(|v| match v.key {
            VertexKey::Special(k) => Some(k + 1),
            _ => None,
        });
        let multis = self.edges.iter().filter_map(|e| match e.key {
            EdgeKey::Multi(k) => Some(k + 1),
            _ => None,
        });
        self.next_special = specials.chain(multis).max().unwrap_or(0);
        Ok(())
    }

    pub fn facet_by_key(&self, key: &SetKey) -> Option<FacetId> {
        self.key_index.get(key).copied()
    }

    pub fn vertex(&self, id: VertexId) -> Option<&Vertex> {
        self.vertices.get(id).and_then(Option::as_ref)
    }

    fn vertex_mut(&mut self, id: VertexId) -> &mut Vertex {
        self.vertices[id].as_mut().expect("live vertex")
    }

    pub fn live_vertices(&self) -> impl Iterator<Item = &Vertex> {
        self.vertices.iter().flatten()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    fn layer_mut(&mut self, m: usize) -> &mut Layer {
        while self.layers.len() < m {
            self.layers.push(Layer::default());
        }
        &mut self.layers[m - 1]
    }

    fn fresh_special(&mut self) -> usize {
        self.next_special += 1;
        self.next_special - 1
    }

    /// Facet with the given sets, created in layer `m` if absent.
    pub fn facet_or_insert(&mut self, sets: ActiveSets, m: usize) -> (FacetId, bool) {
        let key = sets.canonical_key();
        if let Some(&id) = self.key_index.get(&key) {
            return (id, false);
        }
        let id = self.facets.len();
        self.facets.push(Facet {
            id,
            key: key.clone(),
            sets,
            edges: Vec::new(),
            status: Status::Open,
            layer: m,
            special: None,
            boundary: None,
            alpha: Vec::new(),
            failure: None,
        });
        self.key_index.insert(key, id);
        self.layer_mut(m).facets.push(id);
        (id, true)
    }

    /// Edge with the given key, created in layer `m` if absent.
    fn edge_or_insert(&mut self, key: EdgeKey, label: Label, m: usize) -> EdgeId {
        if let Some(&id) = self.edge_index.get(&key) {
            let e = &mut self.edges[id];
            e.uniqueness = Uniqueness::Replicated;
            return id;
        }
        let id = self.edges.len();
        self.edges.push(Edge {
            id,
            key: key.clone(),
            label,
            ends: [End::Unknown; 2],
            facets: Vec::new(),
            constraints: Vec::new(),
            status: Status::Open,
            uniqueness: Uniqueness::Single,
            layer: m,
            special: None,
        });
        self.edge_index.insert(key, id);
        self.layer_mut(m).edges.push(id);
        id
    }

    fn new_vertex(&mut self, key: VertexKey, kind: VertexKind, coords: Costs, m: usize) -> VertexId {
        let id = self.vertices.len();
        self.vertices.push(Some(Vertex {
            id,
            key: key.clone(),
            kind,
            coords,
            edges: Vec::new(),
            status: Status::Open,
            uniqueness: Uniqueness::Single,
            layer: m,
        }));
        if !matches!(key, VertexKey::Special(_)) {
            self.vertex_index.insert(key, id);
        }
        self.layer_mut(m).vertices.push(id);
        id
    }

    fn link_edge_facet(&mut self, e: EdgeId, f: FacetId) {
        if !self.edges[e].facets.contains(&f) {
            self.edges[e].facets.push(f);
        }
        if !self.facets[f].edges.contains(&e) {
            self.facets[f].edges.push(e);
        }
    }

    fn link_vertex_edge(&mut self, v: VertexId, e: EdgeId) {
        let vx = self.vertex_mut(v);
        if !vx.edges.contains(&e) {
            vx.edges.push(e);
        }
    }

    /// Puts `v` at `slot` of edge `e`. Returns the vertex already there if
    /// it differs.
    fn set_end(&mut self, e: EdgeId, slot: usize, end: End) -> Option<VertexId> {
        let cur = self.edges[e].ends[slot];
        match (cur, end) {
            (End::Unknown, _) => {
                self.edges[e].ends[slot] = end;
                None
            }
            (End::Vertex(a), End::Vertex(b)) if a != b => Some(a),
            _ => None,
        }
    }

    /// Merges vertex `gone` into `keep`, moving its edge links.
    fn merge_vertices(&mut self, keep: VertexId, gone: VertexId) {
        if keep == gone {
            return;
        }
        let old = self.vertices[gone].take().expect("live vertex");
        if self.vertex_index.get(&old.key) == Some(&gone) {
            self.vertex_index.remove(&old.key);
        }
        let map: HashMap<usize, usize> = [(gone, keep)].into_iter().collect();
        let vertices = &self.vertices;
        let touched: Vec<EdgeId> = old.edges.clone();
        let mut subset: Vec<Edge> = touched.iter().map(|&e| self.edges[e].clone()).collect();
        relabel(
            &mut subset,
            &map,
            |e| {
                e.ends
                    .iter_mut()
                    .filter_map(|x| match x {
                        End::Vertex(v) => Some(v),
                        _ => None,
                    })
                    .collect()
            },
            |id| id == keep || vertices.get(id).is_some_and(Option::is_some),
        )
        .expect("merged vertex links resolve");
        for e in subset {
            let id = e.id;
            self.edges[id] = e;
        }
        let mut kind = old.kind.clone();
        let survivor = self.vertex_mut(keep);
        for e in old.edges {
            if !survivor.edges.contains(&e) {
                survivor.edges.push(e);
            }
        }
        survivor.uniqueness = Uniqueness::Replicated;
        if survivor.kind.is_special() {
            kind = survivor.kind.clone();
        } else if !kind.is_special() && survivor.key != old.key {
            log::warn!("merging vertices with keys {:?} and {:?}", survivor.key, old.key);
            kind = VertexKind::Special {
                degeneracy: Degeneracy::Generic,
            };
        }
        if kind.is_special() {
            survivor.kind = kind;
        }
    }

    /// Facets incident to a vertex through its edges.
    pub fn vertex_facets(&self, v: VertexId) -> BTreeSet<FacetId> {
        self.vertex(v)
            .map(|vx| {
                vx.edges
                    .iter()
                    .flat_map(|&e| self.edges[e].facets.iter().copied())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Processed facets whose boundary contains `c`.
    pub fn facets_at(&self, c: Costs, tol: f64) -> Vec<(FacetId, Location)> {
        self.facets
            .iter()
            .filter_map(|f| {
                let b = f.boundary.as_ref()?;
                match b.contains(c, tol) {
                    Location::Outside => None,
                    loc => Some((f.id, loc)),
                }
            })
            .collect()
    }

    /// End points of edge `e`. An infinite end is placed `reach` along the
    /// ray from the finite one. `None` for open ends or two infinite ends.
    pub fn edge_points(&self, e: EdgeId, reach: f64) -> Option<[Costs; 2]> {
        let edge = &self.edges[e];
        let at = |end: &End| match end {
            End::Vertex(v) => self.vertex(*v).map(|x| x.coords),
            _ => None,
        };
        match (at(&edge.ends[0]), at(&edge.ends[1])) {
            (Some(a), Some(b)) => Some([a, b]),
            (Some(a), None) | (None, Some(a)) => {
                if edge.ends.contains(&End::Unknown) {
                    return None;
                }
                let d = edge.facets.iter().find_map(|&f| {
                    let b = self.facets[f].boundary.as_ref()?;
                    let (d_in, d_out) = b.rays?;
                    let side = b.sides.iter().position(|sd| sd.constraint.label() == edge.label)?;
                    Some(if side == 0 { d_in } else { d_out })
                })?;
                let far = Costs::new(a.plus + reach * d[0], a.minus + reach * d[1]);
                Some(if matches!(edge.ends[0], End::Infinity) { [far, a] } else { [a, far] })
            }
            _ => None,
        }
    }

    /// Bounding box `(max C+, max C-)` of all finite vertices.
    pub fn extent(&self) -> (f64, f64) {
        self.live_vertices().fold((0.0, 0.0), |(a, b), v| {
            (f64::max(a, v.coords.plus), f64::max(b, v.coords.minus))
        })
    }

    /// Checks that every link resolves to a live object.
    pub fn check_integrity(&self) -> Result<(), GraphError> {
        let dangling = |kind, from, target_kind, target| GraphError::DanglingReference {
            kind,
            from,
            target_kind,
            target,
        };
        for f in &self.facets {
            for &e in &f.edges {
                if e >= self.edges.len() {
                    return Err(dangling("facet", f.id, "edge", e));
                }
            }
        }
        for e in &self.edges {
            for &f in &e.facets {
                if f >= self.facets.len() {
                    return Err(dangling("edge", e.id, "facet", f));
                }
            }
            for v in e.vertex_ids() {
                if self.vertex(v).is_none() {
                    return Err(dangling("edge", e.id, "vertex", v));
                }
            }
        }
        for v in self.live_vertices() {
            for &e in &v.edges {
                if e >= self.edges.len() {
                    return Err(dangling("vertex", v.id, "edge", e));
                }
            }
        }
        Ok(())
    }

    fn record(&mut self, u: Unexplored) {
        log::debug!("unexplored: {:?}", u.cause);
        self.unexplored.push(u);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_group_examples() {
        let reference: HashMap<&str, usize> = [("A", 7)].into_iter().collect();
        let labels = index_group(&reference, &["A", "B", "A"], |s| *s);
        assert_eq!(
            labels,
            vec![GroupLabel::Existing(7), GroupLabel::Fresh(0), GroupLabel::Existing(7)]
        );
        let empty: [&str; 0] = [];
        assert!(index_group(&reference, &empty, |s| *s).is_empty());
        let labels = index_group(&reference, &["C", "B", "C"], |s| *s);
        assert_eq!(labels, vec![GroupLabel::Fresh(0), GroupLabel::Fresh(1), GroupLabel::Fresh(0)]);
    }

    #[test]
    fn relabel_rewrites_and_guards() {
        let mut links = vec![vec![1usize, 2], vec![3]];
        let map: HashMap<usize, usize> = [(2, 1)].into_iter().collect();
        relabel(&mut links, &map, |v| v.iter_mut().collect(), |id| id != 2).unwrap();
        assert_eq!(links, vec![vec![1, 1], vec![3]]);
        let before = links.clone();
        relabel(&mut links, &HashMap::new(), |v| v.iter_mut().collect(), |_| true).unwrap();
        assert_eq!(links, before);
        let mut bad = vec![vec![5usize]];
        assert_eq!(
            relabel(&mut bad, &HashMap::new(), |v| v.iter_mut().collect(), |id| id < 5),
            Err(5)
        );
    }

    #[test]
    fn edge_key_orientation() {
        let a = ActiveSets::from_key("IM", 1).unwrap().canonical_key();
        let b = ActiveSets::all_inside(2, 1).canonical_key();
        let k = EdgeKey::between(a.clone(), b.clone());
        assert_eq!(k, EdgeKey::Between(b.clone(), a.clone()));
        assert!(k.forward_for(&b));
        assert!(!k.forward_for(&a));
    }
}

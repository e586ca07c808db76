//! Invariant suites over an explored path: referential integrity, vertex
//! loops, flip identity, continuity, affineness, agreement with the direct
//! solver and tiling of the cost plane.

use std::collections::{BTreeSet, HashSet};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::graph::{End, FacetId, PathGraph, Status, VertexKey, VertexKind};
use crate::kkt::{self, Costs};
use crate::oracle::{self, OracleConfig};
use crate::polytope::Location;

/// Thresholds and sample counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidateConfig {
    pub seed: u64,
    /// Random points for the oracle comparison.
    pub oracle_samples: usize,
    /// Random window points for the tiling check.
    pub tiling_samples: usize,
    /// Random edges for continuity and random segments for affineness.
    pub segment_samples: usize,
    /// Sampling window; defaults to the explored extent, enlarged by a quarter.
    pub window: Option<(f64, f64)>,
    pub flip_tol: f64,
    pub continuity_tol: f64,
    pub affine_tol: f64,
    pub beta_tol: f64,
    pub objective_tol: f64,
    /// Largest unexplored fraction of the window the tiling suite accepts.
    pub max_unexplored: f64,
    pub oracle: OracleConfig,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            seed: 0,
            oracle_samples: 200,
            tiling_samples: 1000,
            segment_samples: 100,
            window: None,
            flip_tol: 1e-7,
            continuity_tol: 1e-8,
            affine_tol: 1e-10,
            beta_tol: 1e-5,
            objective_tol: 1e-7,
            max_unexplored: 0.05,
            oracle: OracleConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub checked: usize,
    pub failures: usize,
    /// Worst deviation seen, in the suite's own units.
    pub worst: f64,
    pub notes: Vec<String>,
}

impl SuiteResult {
    fn new(name: &str) -> Self {
        SuiteResult {
            name: name.to_string(),
            passed: true,
            checked: 0,
            failures: 0,
            worst: 0.0,
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, note: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures += 1;
            if self.notes.len() < 10 {
                self.notes.push(note());
            }
        }
    }

    fn deviation(&mut self, d: f64) {
        if d > self.worst || d.is_nan() {
            self.worst = d;
        }
    }

    fn finish(mut self) -> Self {
        self.passed = self.failures == 0;
        self
    }
}

/// Tiling statistics over the sampled window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TilingStats {
    pub window: (f64, f64),
    pub samples: usize,
    pub inside_one: usize,
    pub boundary: usize,
    pub unexplored: usize,
    pub overlapping: usize,
    pub unexplored_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suites: Vec<SuiteResult>,
    pub tiling: Option<TilingStats>,
    pub facets: usize,
    pub edges: usize,
    pub vertices: usize,
    pub layers: usize,
    pub unexplored_descriptors: usize,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }
}

impl std::fmt::Display for Report {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{} facets, {} edges, {} vertices, {} layers, {} unexplored descriptors",
            self.facets, self.edges, self.vertices, self.layers, self.unexplored_descriptors
        )?;
        for s in &self.suites {
            writeln!(
                f,
                "{:<20} {}  checked {:>6}  failures {:>4}  worst {:.3e}",
                s.name,
                if s.passed { "PASS" } else { "FAIL" },
                s.checked,
                s.failures,
                s.worst
            )?;
            for n in &s.notes {
                writeln!(f, "    {n}")?;
            }
        }
        if let Some(t) = &self.tiling {
            writeln!(
                f,
                "tiling window ({:.4e}, {:.4e}): {} inside one facet, {} on boundaries, {} overlapping, unexplored fraction {:.4}",
                t.window.0, t.window.1, t.inside_one, t.boundary, t.overlapping, t.unexplored_fraction
            )?;
        }
        Ok(())
    }
}

/// Runs every suite.
pub fn validate(graph: &PathGraph, data: &Dataset, cfg: &ValidateConfig) -> Report {
    let window = cfg.window.unwrap_or_else(|| crate::explorer::default_window(graph));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (tiling, tiling_stats) = tiling(graph, window, cfg, &mut rng);
    let suites = vec![
        integrity(graph),
        vertex_loop(graph),
        flip_identity(graph, cfg.flip_tol),
        continuity(graph, cfg, &mut rng),
        affineness(graph, data, cfg, &mut rng),
        vertex_feasibility(graph, data),
        oracle_equivalence(graph, data, window, cfg, &mut rng),
        tiling,
    ];
    Report {
        suites,
        tiling: Some(tiling_stats),
        facets: graph.facets.len(),
        edges: graph.edges.len(),
        vertices: graph.live_vertices().count(),
        layers: graph.num_layers(),
        unexplored_descriptors: graph.unexplored.len(),
    }
}

/// Links resolve and keys are unique.
pub fn integrity(graph: &PathGraph) -> SuiteResult {
    let mut s = SuiteResult::new("integrity");
    let r = graph.check_integrity();
    s.check(r.is_ok(), || format!("{:?}", r.err()));
    let mut keys = HashSet::new();
    for f in &graph.facets {
        s.check(keys.insert(f.key.clone()), || format!("facet key {} repeated", f.key));
        s.check(f.sets.canonical_key() == f.key, || format!("facet {} key does not match its sets", f.id));
        for &e in &f.edges {
            let linked = graph.edges.get(e).is_some_and(|ed| ed.facets.contains(&f.id));
            s.check(linked, || format!("facet {} lists edge {e} which does not list it", f.id));
        }
    }
    let mut ekeys = HashSet::new();
    for e in &graph.edges {
        s.check(ekeys.insert(e.key.clone()), || format!("edge key {:?} repeated", e.key));
        for &f in &e.facets {
            let linked = graph.facets.get(f).is_some_and(|fc| fc.edges.contains(&e.id));
            s.check(linked, || format!("edge {} lists facet {f} which does not list it", e.id));
        }
        for v in e.vertex_ids() {
            let linked = graph.vertex(v).is_some_and(|vx| vx.edges.contains(&e.id));
            s.check(linked, || format!("edge {} ends at vertex {v} which does not list it", e.id));
        }
    }
    let mut vkeys = HashSet::new();
    for v in graph.live_vertices() {
        if !matches!(v.key, VertexKey::Special(_)) {
            s.check(vkeys.insert(v.key.clone()), || format!("vertex key {:?} repeated", v.key));
        }
        for &e in &v.edges {
            let linked = graph.edges.get(e).is_some_and(|ed| ed.vertex_ids().any(|x| x == v.id));
            s.check(linked, || format!("vertex {} lists edge {e} which does not end there", v.id));
        }
    }
    s.finish()
}

/// Closed off-axis vertices have four edges and four facets closed by the
/// two joint events in either order; closed transversal axis vertices have
/// three edges, pinch vertices three facets.
pub fn vertex_loop(graph: &PathGraph) -> SuiteResult {
    let mut s = SuiteResult::new("vertex_loop");
    for v in graph.live_vertices().filter(|v| v.status == Status::Closed) {
        let facets: BTreeSet<FacetId> = graph.vertex_facets(v.id);
        match &v.kind {
            VertexKind::Interior { base, e_in, e_out } => {
                let sets = &graph.facets[*base].sets;
                let ok = match (
                    kkt::joint_update(sets, *e_in, *e_out),
                    kkt::joint_update(sets, *e_out, *e_in),
                    kkt::apply_event(sets, *e_in),
                    kkt::apply_event(sets, *e_out),
                ) {
                    (Ok(a), Ok(b), Ok(s1), Ok(s2)) if a == b => {
                        let mut want: Vec<_> = [sets.clone(), s1, s2, a].iter().map(|x| x.canonical_key()).collect();
                        want.sort();
                        let mut have: Vec<_> = facets.iter().map(|&f| graph.facets[f].key.clone()).collect();
                        have.sort();
                        have == want
                    }
                    _ => false,
                };
                s.check(v.edges.len() == 4 && facets.len() == 4 && ok, || {
                    format!(
                        "interior vertex {} at ({:.6e}, {:.6e}): {} edges, {} facets, loop {}",
                        v.id,
                        v.coords.plus,
                        v.coords.minus,
                        v.edges.len(),
                        facets.len(),
                        if ok { "closes" } else { "open" }
                    )
                });
            }
            VertexKind::Transversal { .. } => {
                s.check(v.edges.len() == 3 && facets.len() == 2, || {
                    format!("axis vertex {}: {} edges, {} facets", v.id, v.edges.len(), facets.len())
                });
            }
            VertexKind::Pinch { .. } => {
                s.check(v.edges.len() == 4 && facets.len() == 3, || {
                    format!("pinch vertex {}: {} edges, {} facets", v.id, v.edges.len(), facets.len())
                });
            }
            VertexKind::Origin => {
                s.check(v.edges.len() == 2 && facets.len() == 1, || {
                    format!("origin: {} edges, {} facets", v.edges.len(), facets.len())
                });
            }
            VertexKind::Special { .. } => {}
        }
    }
    s.finish()
}

/// The constraint of a closed edge, as built from its two facets, flips sign.
pub fn flip_identity(graph: &PathGraph, tol: f64) -> SuiteResult {
    let mut s = SuiteResult::new("flip_identity");
    for e in graph.edges.iter().filter(|e| e.status == Status::Closed && e.constraints.len() == 2) {
        let u = unit(e.constraints[0].1.functional.as_array());
        let v = unit(e.constraints[1].1.functional.as_array());
        let d = (0..3).map(|k| (u[k] + v[k]).abs()).fold(0.0, f64::max);
        s.deviation(d);
        s.check(d <= tol, || format!("edge {} ({:?}): |u + v| = {d:.3e}", e.id, e.label));
    }
    s.finish()
}

fn unit(a: [f64; 3]) -> [f64; 3] {
    let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    if n == 0.0 {
        a
    } else {
        a.map(|x| x / n)
    }
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(1.0, |m: f64, x| m.max(x.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

/// A point on edge `e`, or `None` when it has no finite end.
fn point_on_edge(graph: &PathGraph, e: usize, t: f64) -> Option<Costs> {
    let edge = &graph.edges[e];
    let finite = edge.ends.iter().find_map(|end| match end {
        End::Vertex(v) => graph.vertex(*v),
        _ => None,
    })?;
    let [a, b] = graph.edge_points(e, 1.0 + finite.coords.norm_inf())?;
    Some(a.lerp(&b, t))
}

/// Dual values computed from either facet of a closed edge agree on it.
pub fn continuity(graph: &PathGraph, cfg: &ValidateConfig, rng: &mut ChaCha8Rng) -> SuiteResult {
    let mut s = SuiteResult::new("continuity");
    let pool: Vec<usize> = graph
        .edges
        .iter()
        .filter(|e| {
            e.status == Status::Closed
                && e.facets.len() == 2
                && e.special.is_none()
                && e.facets.iter().all(|&f| graph.facets[f].boundary.is_some())
        })
        .map(|e| e.id)
        .collect();
    if pool.is_empty() {
        return s.finish();
    }
    for _ in 0..cfg.segment_samples {
        let e = pool[rng.random_range(0..pool.len())];
        let Some(c) = point_on_edge(graph, e, rng.random::<f64>()) else { continue };
        let [f1, f2] = [graph.edges[e].facets[0], graph.edges[e].facets[1]];
        let d = rel_diff(&graph.facets[f1].alpha_at(c), &graph.facets[f2].alpha_at(c));
        s.deviation(d);
        s.check(d <= cfg.continuity_tol, || format!("edge {e} at ({:.6e}, {:.6e}): {d:.3e}", c.plus, c.minus));
    }
    s.finish()
}

/// Random point of a processed facet with a boundary.
fn point_in_facet(graph: &PathGraph, f: FacetId, rng: &mut ChaCha8Rng) -> Option<Costs> {
    let b = graph.facets[f].boundary.as_ref()?;
    let mut pts: Vec<Costs> = b.vertices.clone();
    if let Some((d_in, d_out)) = b.rays {
        let base = pts.first().copied().unwrap_or(Costs::ORIGIN);
        let len = 1.0 + b.vertices.iter().fold(0.0, |m: f64, v| m.max(v.norm_inf()));
        for d in [d_in, d_out] {
            pts.push(Costs::new(base.plus + len * d[0], base.minus + len * d[1]));
        }
    }
    if pts.is_empty() {
        return None;
    }
    let w: Vec<f64> = pts.iter().map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = w.iter().sum();
    let (p, m) = pts.iter().zip(&w).fold((0.0, 0.0), |(p, m), (c, wi)| (p + c.plus * wi, m + c.minus * wi));
    Some(Costs::new(p / total, m / total))
}

/// Dual and primal values are affine inside a facet.
pub fn affineness(graph: &PathGraph, data: &Dataset, cfg: &ValidateConfig, rng: &mut ChaCha8Rng) -> SuiteResult {
    let mut s = SuiteResult::new("affineness");
    let pool: Vec<FacetId> = graph
        .facets
        .iter()
        .filter(|f| f.boundary.is_some() && f.special.is_none())
        .map(|f| f.id)
        .collect();
    if pool.is_empty() {
        return s.finish();
    }
    for _ in 0..cfg.segment_samples {
        let f = pool[rng.random_range(0..pool.len())];
        let (Some(a), Some(b)) = (point_in_facet(graph, f, rng), point_in_facet(graph, f, rng)) else { continue };
        let facet = &graph.facets[f];
        let mid = facet.alpha_at(a.lerp(&b, 0.5));
        let (xa, xb) = (facet.alpha_at(a), facet.alpha_at(b));
        let avg: Vec<f64> = xa.iter().zip(&xb).map(|(x, y)| 0.5 * (x + y)).collect();
        let beta = |al: &[f64]| (data.x() * DVector::from_column_slice(al)).iter().copied().collect::<Vec<_>>();
        let d = rel_diff(&mid, &avg).max(rel_diff(&beta(&mid), &beta(&avg)));
        s.deviation(d);
        s.check(d <= cfg.affine_tol, || format!("facet {f}: {d:.3e}"));
    }
    s.finish()
}

/// Every finite vertex satisfies the constraints of its facets.
pub fn vertex_feasibility(graph: &PathGraph, data: &Dataset) -> SuiteResult {
    let mut s = SuiteResult::new("vertex_feasibility");
    for v in graph.live_vertices().filter(|v| !v.kind.is_special()) {
        for f in graph.vertex_facets(v.id) {
            let facet = &graph.facets[f];
            if facet.boundary.is_none() || facet.special.is_some() {
                continue;
            }
            let Ok(sys) = kkt::build_system(&facet.sets, data, crate::linalg::DEFAULT_RANK_TOL) else { continue };
            let worst = sys
                .constraints
                .iter()
                .map(|c| {
                    let n = c.functional.a_plus.hypot(c.functional.a_minus).max(f64::MIN_POSITIVE);
                    -c.eval(v.coords) / n
                })
                .fold(0.0, f64::max)
                / (1.0 + v.coords.norm_inf());
            s.deviation(worst);
            s.check(worst <= 1e-6, || format!("vertex {} in facet {f}: violation {worst:.3e}", v.id));
        }
    }
    s.finish()
}

fn dual_objective(data: &Dataset, alpha: &[f64]) -> f64 {
    let beta = data.x() * DVector::from_column_slice(alpha);
    0.5 * beta.norm_squared() - alpha.iter().sum::<f64>()
}

/// The path agrees with the direct solver at random covered points.
pub fn oracle_equivalence(
    graph: &PathGraph,
    data: &Dataset,
    window: (f64, f64),
    cfg: &ValidateConfig,
    rng: &mut ChaCha8Rng,
) -> SuiteResult {
    let mut s = SuiteResult::new("oracle_equivalence");
    let locator = crate::query::Locator::new(graph);
    let mut skipped = 0;
    let mut drawn = 0;
    while s.checked < cfg.oracle_samples && drawn < 50 * cfg.oracle_samples.max(1) {
        drawn += 1;
        let c = Costs::new(rng.random::<f64>() * window.0, rng.random::<f64>() * window.1);
        let hits = locator.facets_at(c, 1e-9);
        let [(f, Location::Inside)] = hits[..] else { continue };
        if graph.facets[f].special.is_some() {
            continue;
        }
        let Ok(sol) = oracle::solve_dual(data, c, &cfg.oracle) else {
            skipped += 1;
            if skipped > cfg.oracle_samples {
                break;
            }
            continue;
        };
        let alpha = graph.facets[f].alpha_at(c);
        let beta = data.x() * DVector::from_column_slice(&alpha);
        let db = beta
            .iter()
            .zip(&sol.beta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let obj = dual_objective(data, &alpha);
        let gap = (obj - sol.objective).abs() / sol.objective.abs().max(1.0);
        s.deviation(db);
        s.check(db <= cfg.beta_tol && gap <= cfg.objective_tol, || {
            format!("facet {f} at ({:.6e}, {:.6e}): |dβ| {db:.3e}, gap {gap:.3e}", c.plus, c.minus)
        });
    }
    if skipped > 0 {
        s.notes.push(format!("{skipped} points skipped: direct solver did not converge"));
    }
    let mut s = s.finish();
    if s.checked == 0 && cfg.oracle_samples > 0 {
        s.passed = false;
        s.notes.push("no covered points could be compared".into());
    }
    s
}

/// Random window points lie in exactly one facet unless on a boundary or
/// in an unexplored region.
fn tiling(
    graph: &PathGraph,
    window: (f64, f64),
    cfg: &ValidateConfig,
    rng: &mut ChaCha8Rng,
) -> (SuiteResult, TilingStats) {
    let mut s = SuiteResult::new("tiling");
    let locator = crate::query::Locator::new(graph);
    let mut st = TilingStats {
        window,
        samples: cfg.tiling_samples,
        inside_one: 0,
        boundary: 0,
        unexplored: 0,
        overlapping: 0,
        unexplored_fraction: 0.0,
    };
    for _ in 0..cfg.tiling_samples {
        let c = Costs::new(rng.random::<f64>() * window.0, rng.random::<f64>() * window.1);
        let hits = locator.facets_at(c, 1e-9);
        let inside = hits.iter().filter(|h| h.1 == Location::Inside).count();
        if hits.is_empty() {
            st.unexplored += 1;
        } else if inside == 1 && hits.len() == 1 {
            st.inside_one += 1;
        } else if inside <= 1 {
            st.boundary += 1;
        } else {
            st.overlapping += 1;
            s.check(false, || format!("({:.6e}, {:.6e}) lies inside {inside} facets", c.plus, c.minus));
            continue;
        }
        s.check(true, String::new);
    }
    st.unexplored_fraction = st.unexplored as f64 / cfg.tiling_samples.max(1) as f64;
    s.worst = st.unexplored_fraction;
    let mut s = s.finish();
    if st.unexplored_fraction >= cfg.max_unexplored {
        s.passed = false;
        s.notes.push(format!(
            "unexplored fraction {:.4} is not below {}",
            st.unexplored_fraction, cfg.max_unexplored
        ));
    }
    (s, st)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explorer::{self, ExploreConfig};

    fn small() -> (Dataset, PathGraph) {
        let data = crate::dataset::gaussian_classes(5, 5, 2, 0.7, 0.01, 4);
        let cfg = ExploreConfig {
            parallel: false,
            ..ExploreConfig::default()
        };
        let g = explorer::run(&data, &cfg).unwrap();
        (data, g)
    }

    #[test]
    fn fresh_graph_passes() {
        let (data, g) = small();
        let cfg = ValidateConfig {
            oracle_samples: 40,
            ..ValidateConfig::default()
        };
        let r = validate(&g, &data, &cfg);
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn corrupted_link_is_reported() {
        let (_, mut g) = small();
        let e = g.facets[0].edges[0];
        g.edges[e].facets.retain(|&f| f != 0);
        let s = integrity(&g);
        assert!(!s.passed);
    }
}

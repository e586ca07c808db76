//! Layer loop driving the path-graph construction, with restarts into
//! regions the loop could not reach.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::graph::{self, FacetId, PathGraph};
use crate::kkt::{self, ActiveSets, Costs, SetKey};
use crate::oracle::{self, OracleConfig};
use crate::polytope::{self, Location};
use crate::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Init {
    Origin,
    Point(Costs),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreConfig {
    pub init: Init,
    pub tol: Tolerances,
    /// Defaults to `50 · N`.
    pub max_layers: Option<usize>,
    pub parallel: bool,
    pub restart_on_halt: bool,
    /// Probe grid resolution per axis for restarts.
    pub restart_grid: usize,
    /// Cap on direct solves spent on restarts.
    pub restart_budget: usize,
    /// Restart window; defaults to the explored extent.
    pub window: Option<(f64, f64)>,
    pub oracle: OracleConfig,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig {
            init: Init::Origin,
            tol: Tolerances::default(),
            max_layers: None,
            parallel: cfg!(feature = "parallel"),
            restart_on_halt: true,
            restart_grid: 24,
            restart_budget: 64,
            window: None,
            oracle: OracleConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("layer budget of {limit} exceeded")]
    LayerBudgetExceeded { limit: usize, graph: Box<PathGraph> },
    #[error("seed point ({c_plus}, {c_minus}) is within the band of a breakpoint (samples {samples:?})")]
    AmbiguousSeed {
        c_plus: f64,
        c_minus: f64,
        samples: Vec<usize>,
    },
    #[error("cannot seed at ({c_plus}, {c_minus}): {reason}")]
    Seed { c_plus: f64, c_minus: f64, reason: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Graph whose first layer is the facet around the origin, where every
/// sample is at its upper bound.
pub fn init_origin(data: &Dataset) -> PathGraph {
    let mut g = PathGraph::new(data.n(), data.n_plus());
    g.facet_or_insert(ActiveSets::all_inside(data.n(), data.n_plus()), 1);
    g
}

/// Graph whose first layer is the facet containing `c`, found by solving
/// the dual directly.
pub fn init_point(data: &Dataset, c: Costs, cfg: &ExploreConfig) -> Result<PathGraph, ExploreError> {
    let mut g = PathGraph::new(data.n(), data.n_plus());
    seed_at(&mut g, data, c, cfg, 1)?;
    Ok(g)
}

fn seed_error(c: Costs, reason: impl ToString) -> ExploreError {
    ExploreError::Seed {
        c_plus: c.plus,
        c_minus: c.minus,
        reason: reason.to_string(),
    }
}

/// Sets of the facet containing `c`, checked to build a facet that
/// actually contains `c`.
pub fn seed_sets(data: &Dataset, c: Costs, cfg: &ExploreConfig) -> Result<ActiveSets, ExploreError> {
    if !(c.plus > 0.0 && c.minus > 0.0) {
        return Err(seed_error(c, "seed costs must be strictly positive"));
    }
    let sol = oracle::solve_dual(data, c, &cfg.oracle).map_err(|e| seed_error(c, e))?;
    let cls = oracle::kkt_classify(data, &sol, c, cfg.tol.kkt);
    if !cls.ambiguous.is_empty() {
        return Err(ExploreError::AmbiguousSeed {
            c_plus: c.plus,
            c_minus: c.minus,
            samples: cls.ambiguous,
        });
    }
    let sys = kkt::build_system(&cls.sets, data, cfg.tol.rank).map_err(|e| seed_error(c, e))?;
    let fb = polytope::intersect_halfplanes(&sys.constraints, &[], cfg.tol.feas).map_err(|e| seed_error(c, e))?;
    if fb.contains(c, 1e-7 * (1.0 + c.norm_inf())) == Location::Outside {
        return Err(seed_error(c, "facet of the direct solution does not contain the point"));
    }
    Ok(cls.sets)
}

fn seed_at(g: &mut PathGraph, data: &Dataset, c: Costs, cfg: &ExploreConfig, m: usize) -> Result<FacetId, ExploreError> {
    let sets = seed_sets(data, c, cfg)?;
    Ok(g.facet_or_insert(sets, m).0)
}

/// Runs the layer loop from layer `m` until no unprocessed facet remains.
/// Returns the last layer processed.
fn sweep(g: &mut PathGraph, data: &Dataset, cfg: &ExploreConfig, mut m: usize, limit: usize) -> Result<usize, usize> {
    loop {
        let pending: Vec<FacetId> = g.facets.iter().filter(|f| !f.processed()).map(|f| f.id).collect();
        if pending.is_empty() {
            return Ok(m - 1);
        }
        if m > limit {
            return Err(m);
        }
        let outcomes = graph::cef(g, &pending, data, &cfg.tol, cfg.parallel);
        let touched = graph::mev(g, m, outcomes, data);
        graph::cv(g, m, &touched);
        graph::mef(g, &touched);
        log::debug!(
            "layer {m}: {} facets processed, {} facets, {} edges",
            pending.len(),
            g.facets.len(),
            g.edges.len()
        );
        m += 1;
    }
}

/// Explores the whole path.
pub fn run(data: &Dataset, cfg: &ExploreConfig) -> Result<PathGraph, ExploreError> {
    if data.n() == 0 {
        return Err(ExploreError::InvalidConfig("empty dataset".into()));
    }
    let t = &cfg.tol;
    if !(t.feas > 0.0 && t.rank > 0.0 && t.kkt > 0.0) {
        return Err(ExploreError::InvalidConfig("tolerances must be positive".into()));
    }
    let limit = cfg.max_layers.unwrap_or(50 * data.n());
    if limit == 0 {
        return Err(ExploreError::InvalidConfig("max_layers must be at least 1".into()));
    }
    let mut g = match cfg.init {
        Init::Origin => init_origin(data),
        Init::Point(c) => init_point(data, c, cfg)?,
    };
    let exceeded = |g: PathGraph| ExploreError::LayerBudgetExceeded {
        limit,
        graph: Box::new(g),
    };
    let mut last = match sweep(&mut g, data, cfg, 1, limit) {
        Ok(m) => m,
        Err(_) => return Err(exceeded(g)),
    };
    if cfg.restart_on_halt {
        let mut spent = 0;
        let mut tried: HashSet<(u64, u64)> = HashSet::new();
        let mut failed_keys: HashSet<SetKey> = HashSet::new();
        while spent < cfg.restart_budget {
            let Some(seed) = next_restart(&g, data, cfg, &mut spent, &mut tried, &mut failed_keys) else {
                break;
            };
            log::info!("restarting at ({:.6e}, {:.6e})", seed.plus, seed.minus);
            match seed_at(&mut g, data, seed, cfg, last + 1) {
                Ok(_) => {}
                Err(e) => {
                    log::debug!("restart failed: {e}");
                    continue;
                }
            }
            last = match sweep(&mut g, data, cfg, last + 1, limit) {
                Ok(m) => m,
                Err(_) => return Err(exceeded(g)),
            };
        }
    }
    log::info!(
        "explored {} facets, {} edges in {} layers; {} unexplored descriptors",
        g.facets.len(),
        g.edges.len(),
        g.num_layers(),
        g.unexplored.len()
    );
    Ok(g)
}

/// Default window: the explored vertex extent, enlarged by a quarter.
pub fn default_window(g: &PathGraph) -> (f64, f64) {
    let (p, m) = g.extent();
    let s = p.max(m).max(1e-12);
    (1.25 * p.max(0.05 * s), 1.25 * m.max(0.05 * s))
}

/// First grid point not covered by any facet whose direct solution gives a
/// new, unambiguous facet.
fn next_restart(
    g: &PathGraph,
    data: &Dataset,
    cfg: &ExploreConfig,
    spent: &mut usize,
    tried: &mut HashSet<(u64, u64)>,
    failed_keys: &mut HashSet<SetKey>,
) -> Option<Costs> {
    let (wp, wm) = cfg.window.unwrap_or_else(|| default_window(g));
    let res = cfg.restart_grid.max(1);
    for a in 0..res {
        for b in 0..res {
            let c = Costs::new(wp * (a as f64 + 0.5) / res as f64, wm * (b as f64 + 0.5) / res as f64);
            let id = (c.plus.to_bits(), c.minus.to_bits());
            if tried.contains(&id) {
                continue;
            }
            if !g.facets_at(c, 1e-9 * (1.0 + c.norm_inf())).is_empty() {
                continue;
            }
            tried.insert(id);
            if *spent >= cfg.restart_budget {
                return None;
            }
            *spent += 1;
            let Ok(sol) = oracle::solve_dual(data, c, &cfg.oracle) else { continue };
            let cls = oracle::kkt_classify(data, &sol, c, cfg.tol.kkt);
            let key = cls.sets.canonical_key();
            if !cls.ambiguous.is_empty() || g.facet_by_key(&key).is_some() || failed_keys.contains(&key) {
                continue;
            }
            if kkt::build_system(&cls.sets, data, cfg.tol.rank).is_err() {
                failed_keys.insert(key);
                continue;
            }
            return Some(c);
        }
    }
    None
}

/// Whether every facet of the last layer is unbounded, not counting facets
/// that border a special case left unexplored or whose edges all lead to
/// known facets.
pub fn frontier_open(g: &PathGraph) -> bool {
    g.layers
        .iter()
        .rev()
        .find(|l| !l.facets.is_empty())
        .is_some_and(|l| {
            l.facets.iter().all(|&f| {
                let facet = &g.facets[f];
                borders_special(g, f)
                    || facet.boundary.as_ref().is_some_and(|b| !b.bounded)
                    || facet.edges.iter().all(|&e| {
                        let edge = &g.edges[e];
                        matches!(edge.label, crate::kkt::Label::Axis(_)) || edge.facets.len() == 2
                    })
            })
        })
}

/// Whether facet `f` is special, failed, or touches a special edge or vertex.
pub fn borders_special(g: &PathGraph, f: FacetId) -> bool {
    let facet = &g.facets[f];
    if facet.special.is_some() || facet.failure.is_some() {
        return true;
    }
    facet.edges.iter().any(|&e| {
        let edge = &g.edges[e];
        edge.special.is_some()
            || edge.ends.iter().any(|end| match end {
                graph::End::Vertex(v) => g.vertex(*v).is_some_and(|vx| vx.kind.is_special()),
                _ => false,
            })
    })
}

//! Explored paths of tiny instances against brute-force grid probes of the
//! direct solver.

use std::collections::{BTreeSet, HashSet};

use acpath::explorer::{default_window, init_point, ExploreError};
use acpath::graph::{Status, VertexKind};
use acpath::kkt::apply_event;
use acpath::oracle::{grid_probe, kkt_classify, solve_dual, OracleConfig, DEFAULT_KKT_BAND};
use acpath::query::{self, locate_facet, Located};
use acpath::{ActiveSets, Costs, Dataset, ExploreConfig, Init, PathGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn two_point() -> Dataset {
    Dataset::from_samples(&[vec![1.0], vec![-0.5]], &[true, false], 0.01)
}

fn micro() -> Dataset {
    acpath::dataset::gaussian_classes(3, 3, 2, 0.8, 0.01, 7)
}

fn explore(data: &Dataset) -> PathGraph {
    let cfg = ExploreConfig {
        parallel: false,
        ..Default::default()
    };
    acpath::run(data, &cfg).unwrap()
}

/// Every unambiguous probe lands in the facet carrying the probe's sets,
/// so the probed regions and the facets they hit correspond one to one.
fn check_against_grid(data: &Dataset, res: usize) {
    let g = explore(data);
    let (wp, wm) = default_window(&g);
    let probes = grid_probe(data, wp, wm, res, &OracleConfig::default(), DEFAULT_KKT_BAND);
    let mut regions = BTreeSet::new();
    let mut hit = BTreeSet::new();
    let mut clean = 0;
    for p in &probes {
        let cls = p.classification.as_ref().expect("direct solve converges");
        if !cls.ambiguous.is_empty() {
            continue;
        }
        clean += 1;
        let key = cls.sets.canonical_key();
        match locate_facet(&g, p.c).unwrap() {
            Located::Facet(f) => {
                assert_eq!(g.facets[f].key, key, "at {:?}", p.c);
                hit.insert(f);
            }
            Located::OnBoundary(fs) => assert!(fs.iter().any(|&f| g.facets[f].key == key)),
            Located::Unexplored => panic!("{:?} unexplored", p.c),
        }
        regions.insert(key);
    }
    assert!(clean > res * res * 9 / 10);
    assert_eq!(regions.len(), hit.len());
    assert!(hit.len() * 2 >= g.facets.len(), "{} of {} facets probed", hit.len(), g.facets.len());
}

#[test]
fn two_point_path_matches_grid() {
    check_against_grid(&two_point(), 200);
}

#[test]
fn micro_path_matches_grid() {
    check_against_grid(&micro(), 120);
}

#[test]
fn two_point_duals_match_solver() {
    let data = two_point();
    let g = explore(&data);
    let (wp, wm) = default_window(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut n = 0;
    while n < 5 {
        let c = Costs::new(rng.random::<f64>() * wp, rng.random::<f64>() * wm);
        let Ok(Located::Facet(f)) = locate_facet(&g, c) else { continue };
        let alpha = g.facets[f].alpha_at(c);
        let sol = solve_dual(&data, c, &OracleConfig::default()).unwrap();
        for (a, b) in alpha.iter().zip(&sol.alpha) {
            assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()), "{alpha:?} vs {:?}", sol.alpha);
        }
        n += 1;
    }
}

#[test]
fn micro_models_match_solver() {
    let data = micro();
    let g = explore(&data);
    let (wp, wm) = default_window(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let held_out = [[0.3, 1.1], [-0.9, 0.2]];
    let mut n = 0;
    while n < 20 {
        let c = Costs::new(rng.random::<f64>() * wp, rng.random::<f64>() * wm);
        let Ok(Located::Facet(_)) = locate_facet(&g, c) else { continue };
        let model = query::evaluate(&g, &data, c).unwrap();
        let sol = solve_dual(&data, c, &OracleConfig::default()).unwrap();
        let db = model.beta.iter().zip(&sol.beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(db <= 1e-6, "|dβ| = {db:e} at {c:?}");
        for x in &held_out {
            let (mine, s1) = query::predict(&model.beta, x, data.b_const()).unwrap();
            let (theirs, s2) = query::predict(&sol.beta, x, data.b_const()).unwrap();
            if s1.abs().min(s2.abs()) > 1e-6 {
                assert_eq!(mine, theirs);
            }
        }
        n += 1;
    }
}

/// The four facets around each interior vertex are joined by the two
/// events at that vertex.
#[test]
fn vertex_loops_close_in_few_updates() {
    for data in [two_point(), micro()] {
        let g = explore(&data);
        let mut checked = 0;
        for v in g.live_vertices().filter(|v| v.status == Status::Closed) {
            let VertexKind::Interior { base, e_in, e_out } = v.kind else { continue };
            let around: HashSet<ActiveSets> = g.vertex_facets(v.id).iter().map(|&f| g.facets[f].sets.clone()).collect();
            assert_eq!(around.len(), 4);
            let mut reach: HashSet<ActiveSets> = HashSet::from([g.facets[base].sets.clone()]);
            for _ in 0..3 {
                let next: Vec<ActiveSets> = reach
                    .iter()
                    .flat_map(|s| [e_in, e_out].into_iter().filter_map(|e| apply_event(s, e).ok()))
                    .collect();
                reach.extend(next);
            }
            assert!(around.is_subset(&reach), "vertex {}", v.id);
            checked += 1;
        }
        assert!(checked > 0 || data.n() == 2);
    }
}

#[test]
fn seeding_at_a_point() {
    let data = acpath::dataset::gaussian_classes(3, 9, 2, 0.8, 0.01, 13);
    let c = Costs::new(0.004, 0.002);
    let cfg = ExploreConfig {
        init: Init::Point(c),
        parallel: false,
        ..Default::default()
    };
    let g = init_point(&data, c, &cfg).unwrap();
    let sol = solve_dual(&data, c, &OracleConfig::default()).unwrap();
    let cls = kkt_classify(&data, &sol, c, DEFAULT_KKT_BAND);
    assert!(cls.ambiguous.is_empty());
    assert_eq!(g.facets[0].sets, cls.sets);
    let full = acpath::run(&data, &cfg).unwrap();
    assert_eq!(full.facets[0].sets, cls.sets);
    assert_eq!(locate_facet(&full, c), Ok(Located::Facet(0)));
}

#[test]
fn seeding_on_a_breakpoint_is_refused() {
    let data = Dataset::from_samples(&[vec![2.0]], &[true], 0.01);
    let q = data.column(0).norm_squared();
    let c = Costs::new(1.0 / q, 0.5);
    let cfg = ExploreConfig {
        parallel: false,
        ..Default::default()
    };
    assert!(matches!(init_point(&data, c, &cfg), Err(ExploreError::AmbiguousSeed { .. })));
}

#[test]
fn single_point_exports() {
    let data = Dataset::from_samples(&[vec![2.0]], &[true], 0.01);
    let q = data.column(0).norm_squared();
    let g = explore(&data);
    let v: serde_json::Value = serde_json::from_str(&acpath::io::export_json(&g, Some(&data)).unwrap()).unwrap();
    assert_eq!(v["facets"].as_array().unwrap().len(), 2);
    let events: BTreeSet<String> = v["edges"]
        .as_array()
        .unwrap()
        .iter()
        .filter_map(|e| e["label"].get("Event").map(|ev| ev.to_string()))
        .collect();
    assert_eq!(events.len(), 1, "{events:?}");
    assert!(g.edges.iter().all(|e| e.status == Status::Closed));
    let svg = acpath::io::render_svg(&g, (2.0 / q, 1.0), &Default::default());
    assert_eq!(svg.matches("<polygon").count(), 2);
}

#[test]
fn duplicated_point_facets_stay_exact() {
    let data = acpath::dataset::gaussian_classes(10, 10, 2, 0.7, 0.01, 42).with_duplicate(0);
    let g = explore(&data);
    assert!(g.unexplored.iter().any(|u| matches!(u.cause, acpath::graph::Cause::MultiEventEdge { .. })));
    let flagged: Vec<_> = g.facets.iter().filter(|f| f.special.is_some()).collect();
    assert!(!flagged.is_empty());
    for f in flagged {
        let c = f.boundary.as_ref().expect("flagged facets keep their boundary").interior_point();
        let sol = solve_dual(&data, c, &OracleConfig::default()).unwrap();
        assert_eq!(kkt_classify(&data, &sol, c, DEFAULT_KKT_BAND).sets, f.sets);
        let model = query::evaluate_in(&g, &data, f.id, c);
        let db = model.beta.iter().zip(&sol.beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(db < 1e-9);
    }
}

#[test]
fn points_past_a_truncated_sweep_are_unexplored() {
    let data = micro();
    let cfg = ExploreConfig {
        max_layers: Some(2),
        restart_on_halt: false,
        parallel: false,
        ..Default::default()
    };
    let Err(ExploreError::LayerBudgetExceeded { graph, .. }) = acpath::run(&data, &cfg) else {
        panic!("budget of two layers is too small for this instance");
    };
    let far = Costs::new(1e3, 1e3);
    assert_eq!(locate_facet(&graph, far), Ok(Located::Unexplored));
    assert!(matches!(query::evaluate(&graph, &data, far), Err(query::QueryError::Unexplored(..))));
    let report = acpath::validate::validate(
        &graph,
        &data,
        &acpath::validate::ValidateConfig {
            oracle_samples: 0,
            window: Some((10.0, 10.0)),
            ..Default::default()
        },
    );
    assert!(report.tiling.unwrap().unexplored > 0);
}

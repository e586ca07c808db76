//! Point queries against an explored path: which facet, which model.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::graph::{FacetId, PathGraph};
use crate::kkt::Costs;
use crate::polytope::Location;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("costs must be non-negative, got ({0}, {1})")]
    NegativeCosts(f64, f64),
    #[error("({0}, {1}) is not covered by an explored facet")]
    Unexplored(f64, f64),
    #[error("sample has {got} features, the model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Where a point falls.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Located {
    Facet(FacetId),
    /// On the shared boundary of these facets.
    OnBoundary(Vec<FacetId>),
    Unexplored,
}

impl Located {
    /// A facet to evaluate in: the containing one, or the first of the
    /// boundary facets (all agree there by continuity).
    pub fn any_facet(&self) -> Option<FacetId> {
        match self {
            Located::Facet(f) => Some(*f),
            Located::OnBoundary(fs) => fs.first().copied(),
            Located::Unexplored => None,
        }
    }
}

/// Dual and primal solution at one cost pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAt {
    pub c: Costs,
    pub facet: FacetId,
    pub alpha: Vec<f64>,
    /// Augmented weights; the last entry multiplies the bias constant.
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Bbox {
    lo: [f64; 2],
    hi: [f64; 2],
}

/// Facet lookup with bounding-box prefiltering.
pub struct Locator<'g> {
    graph: &'g PathGraph,
    boxes: Vec<Option<Bbox>>,
}

impl<'g> Locator<'g> {
    pub fn new(graph: &'g PathGraph) -> Self {
        let boxes = graph
            .facets
            .iter()
            .map(|f| {
                let b = f.boundary.as_ref()?;
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in &b.vertices {
                    lo = [lo[0].min(v.plus), lo[1].min(v.minus)];
                    hi = [hi[0].max(v.plus), hi[1].max(v.minus)];
                }
                if let Some((d_in, d_out)) = b.rays {
                    for d in [d_in, d_out] {
                        for k in 0..2 {
                            if d[k] > 0.0 {
                                hi[k] = f64::INFINITY;
                            }
                        }
                    }
                }
                Some(Bbox { lo, hi })
            })
            .collect();
        Locator { graph, boxes }
    }

    /// Every facet whose closure contains `c`, with its location.
    pub fn facets_at(&self, c: Costs, tol: f64) -> Vec<(FacetId, Location)> {
        let pad = tol * (1.0 + c.norm_inf());
        let mut out = Vec::new();
        for (id, bb) in self.boxes.iter().enumerate() {
            let Some(bb) = bb else { continue };
            if c.plus < bb.lo[0] - pad || c.plus > bb.hi[0] + pad || c.minus < bb.lo[1] - pad || c.minus > bb.hi[1] + pad
            {
                continue;
            }
            let b = self.graph.facets[id].boundary.as_ref().expect("boxed facets have boundaries");
            match b.contains(c, tol) {
                Location::Outside => {}
                loc => out.push((id, loc)),
            }
        }
        out
    }

    /// Facet containing `c`. Points on a facet boundary list every facet
    /// whose closure contains them.
    pub fn locate(&self, c: Costs, tol: f64) -> Result<Located, QueryError> {
        if c.plus < 0.0 || c.minus < 0.0 {
            return Err(QueryError::NegativeCosts(c.plus, c.minus));
        }
        let hits = self.facets_at(c, tol);
        Ok(match hits.as_slice() {
            [] => Located::Unexplored,
            [(f, Location::Inside)] => Located::Facet(*f),
            _ => {
                let mut fs: Vec<FacetId> = hits.iter().map(|h| h.0).collect();
                fs.sort_unstable();
                Located::OnBoundary(fs)
            }
        })
    }
}

/// Where `c` falls in the explored path.
pub fn locate_facet(graph: &PathGraph, c: Costs) -> Result<Located, QueryError> {
    Locator::new(graph).locate(c, 1e-9)
}

/// Model at `c` from a known facet.
pub fn evaluate_in(graph: &PathGraph, data: &Dataset, facet: FacetId, c: Costs) -> ModelAt {
    let alpha = graph.facets[facet].alpha_at(c);
    let beta = data.x() * DVector::from_column_slice(&alpha);
    ModelAt {
        c,
        facet,
        alpha,
        beta: beta.iter().copied().collect(),
    }
}

/// Model at `c`. On a boundary, the lowest-numbered adjacent facet is used.
pub fn evaluate(graph: &PathGraph, data: &Dataset, c: Costs) -> Result<ModelAt, QueryError> {
    let f = locate_facet(graph, c)?
        .any_facet()
        .ok_or(QueryError::Unexplored(c.plus, c.minus))?;
    Ok(evaluate_in(graph, data, f, c))
}

/// Label (+1/-1) and score `βᵀ[x; B]` of a raw feature vector. Ties go to +1.
pub fn predict(beta: &[f64], x: &[f64], b_const: f64) -> Result<(i8, f64), QueryError> {
    let d = beta.len().saturating_sub(1);
    if x.len() != d || beta.is_empty() {
        return Err(QueryError::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    let score: f64 = x.iter().zip(&beta[..d]).map(|(a, b)| a * b).sum::<f64>() + b_const * beta[d];
    Ok((if score >= 0.0 { 1 } else { -1 }, score))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predict_ties_go_positive() {
        assert_eq!(predict(&[0.0, 0.0], &[3.0], 0.01), Ok((1, 0.0)));
        let (label, score) = predict(&[-1.0, 100.0], &[2.0], 0.01).unwrap();
        assert_eq!(label, -1);
        assert!((score + 1.0).abs() < 1e-15);
        assert!(matches!(
            predict(&[1.0, 0.0], &[1.0, 2.0], 0.01),
            Err(QueryError::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn pure_bias_model_scores_one() {
        let b = 0.01;
        for x in [[0.0, 0.0], [3.0, -7.5]] {
            let (label, score) = predict(&[0.0, 0.0, 1.0 / b], &x, b).unwrap();
            assert_eq!(label, 1);
            assert!((score - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn origin_facet_is_all_at_bound() {
        let data = crate::dataset::gaussian_classes(3, 2, 2, 1.0, 0.01, 2);
        let cfg = crate::explorer::ExploreConfig {
            parallel: false,
            ..Default::default()
        };
        let g = crate::explorer::run(&data, &cfg).unwrap();
        assert!(matches!(locate_facet(&g, Costs::ORIGIN), Ok(Located::OnBoundary(fs)) if fs.contains(&0)));
        let c = Costs::new(1e-4, 2e-4);
        assert_eq!(locate_facet(&g, c), Ok(Located::Facet(0)));
        let m = evaluate(&g, &data, c).unwrap();
        let expect: Vec<f64> = (0..5).map(|i| if i < 3 { c.plus } else { c.minus }).collect();
        assert_eq!(m.alpha, expect);
        let s = data.column_sum(&[0, 1, 2]) * c.plus + data.column_sum(&[3, 4]) * c.minus;
        for k in 0..3 {
            assert!((m.beta[k] - s[k]).abs() < 1e-15);
        }
        assert!(locate_facet(&g, Costs::new(-1.0, 0.0)).is_err());
    }
}

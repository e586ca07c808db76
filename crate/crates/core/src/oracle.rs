//! Direct solver of the box-constrained dual at a single cost pair.
//!
//! Used to seed exploration away from the origin and as ground truth in
//! validation. Coordinate descent over a seeded random permutation finds the
//! active sets; the free variables are then solved exactly.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::kkt::{ActiveSets, Costs, Membership};

/// Default band around the margin when reading active sets off a solution.
pub const DEFAULT_KKT_BAND: f64 = 1e-6;

/// Residual accepted when the target cannot be reached in floating point.
const ACCEPT_RESIDUAL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Target projected-gradient residual.
    pub tol: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            tol: 1e-10,
            max_epochs: 50_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// `½‖β‖² − Σα`.
    pub objective: f64,
    /// Largest projected-gradient entry.
    pub kkt_residual: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("costs must be non-negative and finite, got ({0}, {1})")]
    BadCosts(f64, f64),
    #[error("no convergence after {} epochs (residual {:e})", best.epochs, best.kkt_residual)]
    MaxIterExceeded { best: Box<QpSolution> },
}

/// Active sets read off a solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub sets: ActiveSets,
    /// Samples too close to a set boundary to classify reliably.
    pub ambiguous: Vec<usize>,
}

struct Problem<'a> {
    x: &'a DMatrix<f64>,
    upper: Vec<f64>,
    diag: Vec<f64>,
}

impl Problem<'_> {
    fn projected_gradient(&self, alpha: &[f64], beta: &DVector<f64>) -> f64 {
        (0..alpha.len())
            .map(|i| {
                let g = self.x.column(i).dot(beta) - 1.0;
                pg(g, alpha[i], self.upper[i]).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn objective(beta: &DVector<f64>, alpha: &[f64]) -> f64 {
    0.5 * beta.norm_squared() - alpha.iter().sum::<f64>()
}

fn pg(grad: f64, a: f64, u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if a <= 0.0 {
        grad.min(0.0)
    } else if a >= u {
        grad.max(0.0)
    } else {
        grad
    }
}

/// Minimizes `½‖Xα‖² − 1ᵀα` subject to `0 ≤ α_i ≤ C_i`.
pub fn solve_dual(data: &Dataset, c: Costs, cfg: &OracleConfig) -> Result<QpSolution, OracleError> {
    if !(c.plus >= 0.0 && c.minus >= 0.0 && c.plus.is_finite() && c.minus.is_finite()) {
        return Err(OracleError::BadCosts(c.plus, c.minus));
    }
    let n = data.n();
    let x = data.x();
    let prob = Problem {
        x,
        upper: (0..n).map(|i| data.upper(i, c.plus, c.minus)).collect(),
        diag: (0..n).map(|i| x.column(i).norm_squared()).collect(),
    };
    let mut alpha = vec![0.0; n];
    let mut beta = DVector::zeros(data.dim());
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut epoch = 0;
    // stop once the residual has not halved over several checks
    let mut best = (f64::INFINITY, alpha.clone());
    let mut stale = 0;
    while epoch < cfg.max_epochs {
        epoch += 1;
        order.shuffle(&mut rng);
        for &i in &order {
            if prob.diag[i] == 0.0 {
                alpha[i] = prob.upper[i];
                continue;
            }
            let g = x.column(i).dot(&beta) - 1.0;
            if pg(g, alpha[i], prob.upper[i]) == 0.0 {
                continue;
            }
            let new = (alpha[i] - g / prob.diag[i]).clamp(0.0, prob.upper[i]);
            let delta = new - alpha[i];
            if delta != 0.0 {
                beta.axpy(delta, &x.column(i), 1.0);
                alpha[i] = new;
            }
        }
        if epoch % 16 != 0 && epoch >= 16 {
            continue;
        }
        beta = x * DVector::from_column_slice(&alpha);
        let mut residual = prob.projected_gradient(&alpha, &beta);
        if epoch % 16 == 0 && residual > cfg.tol {
            if let Some((a, b, r)) = polish(&prob, &alpha, cfg.tol) {
                if objective(&b, &a) <= objective(&beta, &alpha) {
                    alpha = a;
                    beta = b;
                    residual = r;
                }
            }
        }
        if residual < 0.5 * best.0 {
            stale = 0;
        } else {
            stale += 1;
        }
        if residual < best.0 {
            best = (residual, alpha.clone());
        }
        if best.0 <= cfg.tol || (stale > 16 && best.0 <= ACCEPT_RESIDUAL) {
            break;
        }
    }
    if best.0 < f64::INFINITY {
        alpha = best.1;
    }
    beta = x * DVector::from_column_slice(&alpha);
    let residual = prob.projected_gradient(&alpha, &beta);
    let sol = QpSolution {
        objective: objective(&beta, &alpha),
        alpha,
        beta: beta.iter().copied().collect(),
        kkt_residual: residual,
        epochs: epoch,
    };
    if residual > cfg.tol.max(ACCEPT_RESIDUAL) {
        return Err(OracleError::MaxIterExceeded { best: Box::new(sol) });
    }
    Ok(sol)
}

/// Primal active-set refinement started from a coordinate-descent iterate.
///
/// The free variables move towards the minimizer over their subspace, or
/// along a null direction of a singular sub-Gram matrix, until a bound
/// blocks; blocked variables are fixed at the bound. At a subspace optimum
/// the bounded variable with the largest projected gradient is freed.
fn polish(prob: &Problem<'_>, alpha: &[f64], tol: f64) -> Option<(Vec<f64>, DVector<f64>, f64)> {
    let n = alpha.len();
    let mut out = alpha.to_vec();
    let mut free: Vec<usize> = (0..n).filter(|&i| out[i] > 0.0 && out[i] < prob.upper[i]).collect();
    let mut beta = prob.x * DVector::from_column_slice(&out);
    for _ in 0..20 * n + 50 {
        if !free.is_empty() {
            let xf = prob.x.select_columns(&free);
            let af = DVector::from_iterator(free.len(), free.iter().map(|&i| out[i]));
            let base = &beta - &xf * &af;
            let rhs = DVector::from_element(free.len(), 1.0) - xf.tr_mul(&base);
            let eig = xf.tr_mul(&xf).symmetric_eigen();
            let lmax = eig.eigenvalues.iter().fold(0.0, |m: f64, l| m.max(l.abs()));
            let mut target = DVector::zeros(free.len());
            let mut null = DVector::zeros(free.len());
            for (k, &l) in eig.eigenvalues.iter().enumerate() {
                let v = eig.eigenvectors.column(k);
                let p = v.dot(&rhs);
                if l > 1e-12 * lmax && lmax > 0.0 {
                    target.axpy(p / l, &v, 1.0);
                } else {
                    null.axpy(p, &v, 1.0);
                }
            }
            let unbounded = null.norm() > 1e-9 * rhs.norm().max(1.0);
            let dir = if unbounded { null } else { target - &af };
            let mut step = if unbounded { f64::INFINITY } else { 1.0 };
            let mut blocking = None;
            for (k, &i) in free.iter().enumerate() {
                let d = dir[k];
                if d == 0.0 {
                    continue;
                }
                let room = if d < 0.0 { -out[i] } else { prob.upper[i] - out[i] };
                if room / d < step {
                    step = (room / d).max(0.0);
                    blocking = Some((k, if d < 0.0 { 0.0 } else { prob.upper[i] }));
                }
            }
            if !step.is_finite() {
                return None;
            }
            for (k, &i) in free.iter().enumerate() {
                out[i] = (out[i] + step * dir[k]).clamp(0.0, prob.upper[i]);
            }
            if let Some((k, bound)) = blocking {
                let i = free.remove(k);
                out[i] = bound;
            }
            beta = prob.x * DVector::from_column_slice(&out);
            if blocking.is_some() {
                continue;
            }
        }
        // subspace optimum: free the worst bounded violator
        let mut worst = (tol, None);
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            if free.contains(&i) || prob.upper[i] <= 0.0 {
                continue;
            }
            let v = pg(prob.x.column(i).dot(&beta) - 1.0, out[i], prob.upper[i]).abs();
            if v > worst.0 {
                worst = (v, Some(i));
            }
        }
        match worst.1 {
            Some(i) => free.push(i),
            None => break,
        }
    }
    let r = prob.projected_gradient(&out, &beta);
    Some((out, beta, r))
}

/// Reads the active sets off a solution: margin points have `|g − 1| ≤
/// band`, inside points `g < 1 − band` with the dual at its upper bound,
/// outside points `g > 1 + band` with the dual at zero. Samples meeting
/// none of these, and margin points whose dual sits at a bound, are
/// reported as ambiguous. Dual bounds are compared within `band` relative
/// to `max(1, C)`.
pub fn kkt_classify(data: &Dataset, sol: &QpSolution, c: Costs, band: f64) -> Classification {
    let beta = DVector::from_column_slice(&sol.beta);
    let mut states = Vec::with_capacity(data.n());
    let mut ambiguous = Vec::new();
    for i in 0..data.n() {
        let g = data.x().column(i).dot(&beta);
        let u = data.upper(i, c.plus, c.minus);
        let a = sol.alpha[i];
        let slack = band * u.max(1.0);
        let (st, clean) = if (g - 1.0).abs() <= band {
            (Membership::Margin, a > slack && a < u - slack)
        } else if g < 1.0 {
            (Membership::Inside, a >= u - slack)
        } else {
            (Membership::Outside, a <= slack)
        };
        if !clean {
            ambiguous.push(i);
        }
        states.push(st);
    }
    Classification {
        sets: ActiveSets::from_states(states, data.n_plus()),
        ambiguous,
    }
}

/// One point of a grid probe.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub c: Costs,
    pub classification: Option<Classification>,
}

/// Solves and classifies on a `res x res` grid of cell centres covering
/// `[0, max_plus] x [0, max_minus]`.
pub fn grid_probe(
    data: &Dataset,
    max_plus: f64,
    max_minus: f64,
    res: usize,
    cfg: &OracleConfig,
    band: f64,
) -> Vec<Probe> {
    let mut out = Vec::with_capacity(res * res);
    for a in 0..res {
        for b in 0..res {
            let c = Costs::new(
                max_plus * (a as f64 + 0.5) / res as f64,
                max_minus * (b as f64 + 0.5) / res as f64,
            );
            let classification = solve_dual(data, c, cfg).ok().map(|s| kkt_classify(data, &s, c, band));
            out.push(Probe { c, classification });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_closed_form() {
        // alpha = min(C, 1/|x|^2)
        let data = Dataset::from_samples(&[vec![2.0]], &[true], 0.0);
        for (cp, expect) in [(0.1, 0.1), (0.25, 0.25), (3.0, 0.25)] {
            let sol = solve_dual(&data, Costs::new(cp, 1.0), &OracleConfig::default()).unwrap();
            assert!((sol.alpha[0] - expect).abs() < 1e-12, "{cp}");
            assert!((sol.objective - (0.5 * 4.0 * expect * expect - expect)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_costs_give_zero() {
        let data = crate::dataset::gaussian_classes(3, 3, 2, 1.0, 0.01, 1);
        let sol = solve_dual(&data, Costs::ORIGIN, &OracleConfig::default()).unwrap();
        assert!(sol.alpha.iter().all(|&a| a == 0.0));
        let cls = kkt_classify(&data, &sol, Costs::ORIGIN, DEFAULT_KKT_BAND);
        assert_eq!(cls.sets, ActiveSets::all_inside(6, 3));
    }

    #[test]
    fn rejects_negative_costs() {
        let data = Dataset::from_samples(&[vec![1.0]], &[true], 0.01);
        assert!(matches!(
            solve_dual(&data, Costs::new(-1.0, 0.0), &OracleConfig::default()),
            Err(OracleError::BadCosts(..))
        ));
    }

    #[test]
    fn kkt_conditions_hold() {
        let data = crate::dataset::gaussian_classes(10, 10, 2, 0.7, 0.01, 5);
        let c = Costs::new(0.8, 0.3);
        let sol = solve_dual(&data, c, &OracleConfig::default()).unwrap();
        let beta = DVector::from_column_slice(&sol.beta);
        for i in 0..data.n() {
            let g = data.x().column(i).dot(&beta);
            let u = data.upper(i, c.plus, c.minus);
            let a = sol.alpha[i];
            assert!((0.0..=u).contains(&a));
            if a > 1e-9 && a < u - 1e-9 {
                assert!((g - 1.0).abs() < 1e-8);
            } else if a <= 1e-9 {
                assert!(g >= 1.0 - 1e-8);
            } else {
                assert!(g <= 1.0 + 1e-8);
            }
        }
    }

    #[test]
    fn grid_probe_shape() {
        let data = Dataset::from_samples(&[vec![1.0], vec![-1.0]], &[true, false], 0.01);
        let probes = grid_probe(&data, 2.0, 2.0, 3, &OracleConfig::default(), DEFAULT_KKT_BAND);
        assert_eq!(probes.len(), 9);
        assert!(probes.iter().all(|p| p.classification.is_some()));
    }
}

//! Active-set configurations and the affine constraint system they induce
//! over the cost plane `(C+, C-)`.
//!
//! For a fixed partition of the samples into margin (M), inside (I) and
//! outside (O) sets, the dual variables of the margin points and the scores
//! of all other points are affine functions of the two costs. Requiring the
//! partition to stay KKT-consistent gives one halfplane per sample plus the
//! two axis constraints; their intersection is the facet of that partition.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Class, Dataset};
use crate::linalg::{self, LinalgError, MarginFactorization};

/// A point of the cost plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Costs {
    pub plus: f64,
    pub minus: f64,
}

impl Costs {
    pub const ORIGIN: Costs = Costs {
        plus: 0.0,
        minus: 0.0,
    };

    pub fn new(plus: f64, minus: f64) -> Self {
        Costs { plus, minus }
    }

    pub fn norm_inf(&self) -> f64 {
        self.plus.abs().max(self.minus.abs())
    }

    pub fn lerp(&self, other: &Costs, t: f64) -> Costs {
        Costs::new(
            self.plus + t * (other.plus - self.plus),
            self.minus + t * (other.minus - self.minus),
        )
    }

    pub fn dist(&self, other: &Costs) -> f64 {
        (self.plus - other.plus).hypot(self.minus - other.minus)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KktError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("event ({sample}, t={t}) is not admissible for a sample in {state:?}")]
    InconsistentEvent {
        sample: usize,
        t: u8,
        state: Membership,
    },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
}

/// Set membership of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Membership {
    /// On the margin, `g_i = 1`, `0 <= alpha_i <= C`.
    Margin,
    /// Left of the margin, `g_i < 1`, `alpha_i = C`.
    Inside,
    /// Right of the margin, `g_i > 1`, `alpha_i = 0`.
    Outside,
}

impl Membership {
    fn code(self) -> char {
        match self {
            Membership::Margin => 'M',
            Membership::Inside => 'I',
            Membership::Outside => 'O',
        }
    }
}

/// Canonical identity of a partition: one character per sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SetKey(String);

impl SetKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SetKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Partition `{M+, M-, I+, I-, O}` of the sample indices.
///
/// Stored as one membership per sample; the class of a sample follows from
/// its index (positives first), so the five sets are disjoint and cover all
/// samples by construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "SetsRepr", try_from = "SetsRepr")]
pub struct ActiveSets {
    states: Vec<Membership>,
    n_plus: usize,
}

impl ActiveSets {
    /// Every sample at its upper bound: the configuration around the origin.
    pub fn all_inside(n: usize, n_plus: usize) -> Self {
        assert!(n_plus <= n);
        ActiveSets {
            states: vec![Membership::Inside; n],
            n_plus,
        }
    }

    pub fn from_states(states: Vec<Membership>, n_plus: usize) -> Self {
        assert!(n_plus <= states.len());
        ActiveSets { states, n_plus }
    }

    /// Builds a partition from explicit index lists, checking disjointness,
    /// coverage and class consistency.
    pub fn from_parts(
        n: usize,
        n_plus: usize,
        m_plus: &[usize],
        m_minus: &[usize],
        i_plus: &[usize],
        i_minus: &[usize],
        o: &[usize],
    ) -> Result<Self, KktError> {
        let mut states: Vec<Option<Membership>> = vec![None; n];
        let mut put = |idx: &[usize], st: Membership, pos: Option<bool>| -> Result<(), KktError> {
            for &i in idx {
                if i >= n {
                    return Err(KktError::InvalidPartition(format!("index {i} out of range")));
                }
                if let Some(p) = pos {
                    if (i < n_plus) != p {
                        return Err(KktError::InvalidPartition(format!(
                            "sample {i} listed in a set of the other class"
                        )));
                    }
                }
                if states[i].replace(st).is_some() {
                    return Err(KktError::InvalidPartition(format!("sample {i} listed twice")));
                }
            }
            Ok(())
        };
        put(m_plus, Membership::Margin, Some(true))?;
        put(m_minus, Membership::Margin, Some(false))?;
        put(i_plus, Membership::Inside, Some(true))?;
        put(i_minus, Membership::Inside, Some(false))?;
        put(o, Membership::Outside, None)?;
        let states = states
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| KktError::InvalidPartition(format!("sample {i} unassigned"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ActiveSets { states, n_plus })
    }

    /// Parses a canonical key back into a partition.
    pub fn from_key(key: &str, n_plus: usize) -> Result<Self, KktError> {
        let states = key
            .chars()
            .map(|c| match c {
                'M' => Ok(Membership::Margin),
                'I' => Ok(Membership::Inside),
                'O' => Ok(Membership::Outside),
                other => Err(KktError::InvalidPartition(format!("bad key character {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if n_plus > states.len() {
            return Err(KktError::InvalidPartition("n_plus exceeds key length".into()));
        }
        Ok(ActiveSets { states, n_plus })
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn n_plus(&self) -> usize {
        self.n_plus
    }

    pub fn state(&self, i: usize) -> Membership {
        self.states[i]
    }

    pub fn states(&self) -> &[Membership] {
        &self.states
    }

    fn select(&self, st: Membership, positive: Option<bool>) -> Vec<usize> {
        (0..self.states.len())
            .filter(|&i| self.states[i] == st && positive.is_none_or(|p| (i < self.n_plus) == p))
            .collect()
    }

    pub fn m_plus(&self) -> Vec<usize> {
        self.select(Membership::Margin, Some(true))
    }

    pub fn m_minus(&self) -> Vec<usize> {
        self.select(Membership::Margin, Some(false))
    }

    pub fn i_plus(&self) -> Vec<usize> {
        self.select(Membership::Inside, Some(true))
    }

    pub fn i_minus(&self) -> Vec<usize> {
        self.select(Membership::Inside, Some(false))
    }

    pub fn o(&self) -> Vec<usize> {
        self.select(Membership::Outside, None)
    }

    /// Margin set in ascending index order.
    pub fn margin(&self) -> Vec<usize> {
        self.select(Membership::Margin, None)
    }

    pub fn canonical_key(&self) -> SetKey {
        SetKey(self.states.iter().map(|s| s.code()).collect())
    }
}

#[derive(Serialize, Deserialize)]
struct SetsRepr {
    key: String,
    n_plus: usize,
    // Written for readers of exported documents; the key alone is read back.
    #[serde(default, skip_deserializing)]
    m_plus: Vec<usize>,
    #[serde(default, skip_deserializing)]
    m_minus: Vec<usize>,
    #[serde(default, skip_deserializing)]
    i_plus: Vec<usize>,
    #[serde(default, skip_deserializing)]
    i_minus: Vec<usize>,
    #[serde(default, skip_deserializing)]
    o: Vec<usize>,
}

impl From<ActiveSets> for SetsRepr {
    fn from(s: ActiveSets) -> Self {
        SetsRepr {
            key: s.canonical_key().0,
            n_plus: s.n_plus,
            m_plus: s.m_plus(),
            m_minus: s.m_minus(),
            i_plus: s.i_plus(),
            i_minus: s.i_minus(),
            o: s.o(),
        }
    }
}

impl TryFrom<SetsRepr> for ActiveSets {
    type Error = KktError;
    fn try_from(r: SetsRepr) -> Result<Self, KktError> {
        ActiveSets::from_key(&r.key, r.n_plus)
    }
}

/// Transition type of an event: `t = 0` moves a sample between M and O,
/// `t = 1` between M and I.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum EventType {
    MarginOutside,
    MarginInside,
}

impl EventType {
    pub fn as_u8(self) -> u8 {
        match self {
            EventType::MarginOutside => 0,
            EventType::MarginInside => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            EventType::MarginOutside => EventType::MarginInside,
            EventType::MarginInside => EventType::MarginOutside,
        }
    }
}

impl From<EventType> for u8 {
    fn from(t: EventType) -> u8 {
        t.as_u8()
    }
}

impl TryFrom<u8> for EventType {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            0 => Ok(EventType::MarginOutside),
            1 => Ok(EventType::MarginInside),
            other => Err(format!("event type must be 0 or 1, got {other}")),
        }
    }
}

/// A set transition `(i, t)` of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Event {
    pub sample: usize,
    pub t: EventType,
}

impl Event {
    pub fn new(sample: usize, t: EventType) -> Self {
        Event { sample, t }
    }
}

/// `a_plus * C+ + a_minus * C- + b`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AffineFunctional {
    pub a_plus: f64,
    pub a_minus: f64,
    pub b: f64,
}

impl AffineFunctional {
    pub fn new(a_plus: f64, a_minus: f64, b: f64) -> Self {
        AffineFunctional { a_plus, a_minus, b }
    }

    pub fn eval(&self, c: Costs) -> f64 {
        self.a_plus * c.plus + self.a_minus * c.minus + self.b
    }

    pub fn neg(&self) -> Self {
        AffineFunctional::new(-self.a_plus, -self.a_minus, -self.b)
    }

    pub fn norm(&self) -> f64 {
        (self.a_plus * self.a_plus + self.a_minus * self.a_minus + self.b * self.b).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.a_plus, self.a_minus, self.b]
    }
}

/// Constraint family; fixes both the sample's set and the event type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    /// `alpha_i(c) >= 0` for a margin point.
    AlphaLower,
    /// `C± - alpha_i(c) >= 0` for a margin point.
    AlphaUpper,
    /// `1 - g_i(c) >= 0` for a point in I.
    ScoreI,
    /// `g_i(c) - 1 >= 0` for a point in O.
    ScoreO,
    /// `C+ >= 0`.
    AxisCPlus,
    /// `C- >= 0`.
    AxisCMinus,
}

impl Family {
    pub fn event_type(self) -> Option<EventType> {
        match self {
            Family::AlphaLower | Family::ScoreO => Some(EventType::MarginOutside),
            Family::AlphaUpper | Family::ScoreI => Some(EventType::MarginInside),
            Family::AxisCPlus | Family::AxisCMinus => None,
        }
    }
}

/// One of the two boundary lines of the positive quadrant.
///
/// `CPlus` is the line `C+ = 0` (where positive samples are pinned to
/// `alpha = 0`); `CMinus` is the line `C- = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    CPlus,
    CMinus,
}

impl Axis {
    /// The class whose box collapses to `[0, 0]` on this axis.
    pub fn pinned_class(self) -> Class {
        match self {
            Axis::CPlus => Class::Positive,
            Axis::CMinus => Class::Negative,
        }
    }

    pub fn for_class(class: Class) -> Axis {
        match class {
            Class::Positive => Axis::CPlus,
            Class::Negative => Axis::CMinus,
        }
    }

    pub fn constraint(self) -> AffineConstraint {
        match self {
            Axis::CPlus => AffineConstraint::axis(Family::AxisCPlus),
            Axis::CMinus => AffineConstraint::axis(Family::AxisCMinus),
        }
    }
}

/// Discrete identity of a boundary piece within one facet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Event(Event),
    Axis(Axis),
}

/// `functional(c) >= 0`, with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineConstraint {
    pub functional: AffineFunctional,
    pub family: Family,
    pub sample: Option<usize>,
}

impl AffineConstraint {
    pub fn sample(functional: AffineFunctional, family: Family, sample: usize) -> Self {
        AffineConstraint {
            functional,
            family,
            sample: Some(sample),
        }
    }

    pub fn axis(family: Family) -> Self {
        let functional = match family {
            Family::AxisCPlus => AffineFunctional::new(1.0, 0.0, 0.0),
            Family::AxisCMinus => AffineFunctional::new(0.0, 1.0, 0.0),
            _ => panic!("not an axis family"),
        };
        AffineConstraint {
            functional,
            family,
            sample: None,
        }
    }

    pub fn event(&self) -> Option<Event> {
        Some(Event::new(self.sample?, self.family.event_type()?))
    }

    pub fn label(&self) -> Label {
        match self.family {
            Family::AxisCPlus => Label::Axis(Axis::CPlus),
            Family::AxisCMinus => Label::Axis(Axis::CMinus),
            _ => Label::Event(self.event().expect("sample constraints carry an event")),
        }
    }

    pub fn is_axis(&self) -> bool {
        matches!(self.family, Family::AxisCPlus | Family::AxisCMinus)
    }

    pub fn eval(&self, c: Costs) -> f64 {
        self.functional.eval(c)
    }
}

/// Everything computed for one partition: the affine alpha path of the
/// margin points and the full constraint list.
#[derive(Debug, Clone)]
pub struct FacetSystem {
    pub alpha: Vec<(usize, AffineFunctional)>,
    pub constraints: Vec<AffineConstraint>,
}

impl FacetSystem {
    pub fn find(&self, label: Label) -> Option<&AffineConstraint> {
        self.constraints.iter().find(|c| c.label() == label)
    }
}

/// Projection data shared by the alpha and score paths.
struct PathTerms {
    /// `-X_M^* X_{I+} 1`, `-X_M^* X_{I-} 1`, `(X_M^T X_M)^{-1} 1` per margin point.
    alpha: Vec<(usize, AffineFunctional)>,
    /// `P^⊥ X_{I+} 1`, `P^⊥ X_{I-} 1`, `X_M^{*T} 1`.
    r_plus: DVector<f64>,
    r_minus: DVector<f64>,
    w: DVector<f64>,
}

fn factor_for(sets: &ActiveSets, data: &Dataset, tol_rank: f64) -> Result<Option<MarginFactorization>, LinalgError> {
    let margin = sets.margin();
    if margin.is_empty() {
        return Ok(None);
    }
    let x_m = data.columns(&margin);
    linalg::gram_factorize_with(&x_m, margin, tol_rank).map(Some)
}

fn path_terms(sets: &ActiveSets, data: &Dataset, f: Option<&MarginFactorization>) -> PathTerms {
    let s_plus = data.column_sum(&sets.i_plus());
    let s_minus = data.column_sum(&sets.i_minus());
    match f {
        None => PathTerms {
            alpha: Vec::new(),
            r_plus: s_plus,
            r_minus: s_minus,
            w: DVector::zeros(data.dim()),
        },
        Some(f) => {
            let m = f.size();
            let p_plus = f.pinv_apply(&s_plus);
            let p_minus = f.pinv_apply(&s_minus);
            let u = linalg::gram_solve(f, &DVector::from_element(m, 1.0));
            let alpha = f
                .margin_indices()
                .iter()
                .enumerate()
                .map(|(k, &i)| (i, AffineFunctional::new(-p_plus[k], -p_minus[k], u[k])))
                .collect();
            let x_m = data.columns(f.margin_indices());
            PathTerms {
                alpha,
                r_plus: f.project_out(&s_plus),
                r_minus: f.project_out(&s_minus),
                w: x_m * u,
            }
        }
    }
}

/// Affine maps `c -> alpha_i(c)` for every margin point.
pub fn alpha_path(
    sets: &ActiveSets,
    data: &Dataset,
    f: &MarginFactorization,
) -> Vec<(usize, AffineFunctional)> {
    path_terms(sets, data, Some(f)).alpha
}

/// Affine map `c -> g_i(c)` of a point outside the margin. Pass `None` for
/// an empty margin set.
pub fn score_path(
    i: usize,
    sets: &ActiveSets,
    data: &Dataset,
    f: Option<&MarginFactorization>,
) -> AffineFunctional {
    debug_assert_ne!(sets.state(i), Membership::Margin);
    let t = path_terms(sets, data, f);
    let x = data.x().column(i);
    AffineFunctional::new(x.dot(&t.r_plus), x.dot(&t.r_minus), x.dot(&t.w))
}

/// Factorizes the margin set and builds the alpha path and all constraints.
pub fn build_system(sets: &ActiveSets, data: &Dataset, tol_rank: f64) -> Result<FacetSystem, KktError> {
    assert_eq!(sets.n(), data.n());
    assert_eq!(sets.n_plus(), data.n_plus());
    let f = factor_for(sets, data, tol_rank)?;
    let terms = path_terms(sets, data, f.as_ref());
    let x = data.x();
    // all scores at once: X^T r+, X^T r-, X^T w
    let g_plus = x.tr_mul(&terms.r_plus);
    let g_minus = x.tr_mul(&terms.r_minus);
    let g_const = x.tr_mul(&terms.w);

    let mut constraints = Vec::with_capacity(data.n() + terms.alpha.len() + 2);
    let mut alpha_iter = terms.alpha.iter().peekable();
    for i in 0..data.n() {
        match sets.state(i) {
            Membership::Margin => {
                let &(k, a) = alpha_iter.next().expect("alpha for every margin point");
                debug_assert_eq!(k, i);
                constraints.push(AffineConstraint::sample(a, Family::AlphaLower, i));
                let upper = match data.class(i) {
                    Class::Positive => AffineFunctional::new(1.0 - a.a_plus, -a.a_minus, -a.b),
                    Class::Negative => AffineFunctional::new(-a.a_plus, 1.0 - a.a_minus, -a.b),
                };
                constraints.push(AffineConstraint::sample(upper, Family::AlphaUpper, i));
            }
            Membership::Inside => {
                let g = AffineFunctional::new(-g_plus[i], -g_minus[i], 1.0 - g_const[i]);
                constraints.push(AffineConstraint::sample(g, Family::ScoreI, i));
            }
            Membership::Outside => {
                let g = AffineFunctional::new(g_plus[i], g_minus[i], g_const[i] - 1.0);
                constraints.push(AffineConstraint::sample(g, Family::ScoreO, i));
            }
        }
    }
    constraints.push(AffineConstraint::axis(Family::AxisCPlus));
    constraints.push(AffineConstraint::axis(Family::AxisCMinus));
    Ok(FacetSystem {
        alpha: terms.alpha,
        constraints,
    })
}

/// Constraint list of a partition (see [`build_system`]).
pub fn build_constraints(sets: &ActiveSets, data: &Dataset, tol_rank: f64) -> Result<Vec<AffineConstraint>, KktError> {
    build_system(sets, data, tol_rank).map(|s| s.constraints)
}

/// Full dual vector at `c` for a partition with the given alpha path.
pub fn assemble_alpha(
    sets: &ActiveSets,
    alpha: &[(usize, AffineFunctional)],
    data: &Dataset,
    c: Costs,
) -> DVector<f64> {
    let mut out = DVector::zeros(data.n());
    for i in 0..data.n() {
        out[i] = match sets.state(i) {
            Membership::Inside => data.upper(i, c.plus, c.minus),
            _ => 0.0,
        };
    }
    for &(i, a) in alpha {
        out[i] = a.eval(c);
    }
    out
}

/// Applies one event; the direction follows from the current membership.
pub fn apply_event(sets: &ActiveSets, e: Event) -> Result<ActiveSets, KktError> {
    let state = sets.state(e.sample);
    let next = match (state, e.t) {
        (Membership::Margin, EventType::MarginOutside) => Membership::Outside,
        (Membership::Margin, EventType::MarginInside) => Membership::Inside,
        (Membership::Outside, EventType::MarginOutside) => Membership::Margin,
        (Membership::Inside, EventType::MarginInside) => Membership::Margin,
        _ => {
            return Err(KktError::InconsistentEvent {
                sample: e.sample,
                t: e.t.as_u8(),
                state,
            })
        }
    };
    let mut out = sets.clone();
    out.states[e.sample] = next;
    Ok(out)
}

/// Two successive updates across a vertex.
pub fn joint_update(sets: &ActiveSets, e1: Event, e2: Event) -> Result<ActiveSets, KktError> {
    apply_event(&apply_event(sets, e1)?, e2)
}

/// Classification of concurrently active breakpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Degeneracy {
    Generic,
    /// Several events along one edge: constraints equal up to positive scale.
    MultiEventEdge,
    /// Several joint events at one vertex: a rank-2 pencil through a point.
    MultiJointEventVertex,
}

/// Classifies breakpoints active at a common locus by the rank of the stacked
/// `n x 3` matrix of their (row-normalized) functionals.
pub fn detect_degeneracy(constraints: &[AffineConstraint], tol: f64) -> Degeneracy {
    let rows: Vec<[f64; 3]> = constraints
        .iter()
        .filter_map(|c| {
            let n = c.functional.norm();
            (n > 0.0).then(|| {
                let a = c.functional.as_array();
                [a[0] / n, a[1] / n, a[2] / n]
            })
        })
        .collect();
    if rows.len() < 2 {
        return Degeneracy::Generic;
    }
    let h = DMatrix::from_fn(rows.len(), 3, |r, k| rows[r][k]);
    match linalg::rank_of(&h, tol) {
        1 => {
            let same_orientation = rows
                .iter()
                .all(|r| r[0] * rows[0][0] + r[1] * rows[0][1] + r[2] * rows[0][2] > 0.0);
            if same_orientation {
                Degeneracy::MultiEventEdge
            } else {
                Degeneracy::Generic
            }
        }
        2 if rows.len() >= 3 => {
            // common point iff the null vector is not at infinity
            let svd = h.svd(false, true);
            let v_t = svd.v_t.expect("requested V^T");
            let (imin, _) = svd
                .singular_values
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (k, &s)| if s < acc.1 { (k, s) } else { acc });
            let null = v_t.row(imin);
            if null[2].abs() > tol.sqrt() * null.norm() {
                Degeneracy::MultiJointEventVertex
            } else {
                Degeneracy::Generic
            }
        }
        _ => Degeneracy::Generic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_RANK_TOL;

    fn two_point() -> Dataset {
        Dataset::from_samples(&[vec![1.0, 0.5], vec![-0.8, 0.3]], &[true, false], 0.01)
    }

    #[test]
    fn set_accessors_and_key() {
        let s = ActiveSets::from_parts(5, 2, &[0], &[3], &[1], &[], &[2, 4]).unwrap();
        assert_eq!(s.m_plus(), vec![0]);
        assert_eq!(s.m_minus(), vec![3]);
        assert_eq!(s.i_plus(), vec![1]);
        assert!(s.i_minus().is_empty());
        assert_eq!(s.o(), vec![2, 4]);
        assert_eq!(s.canonical_key().as_str(), "MIOMO");
        assert_eq!(ActiveSets::from_key("MIOMO", 2).unwrap(), s);
    }

    #[test]
    fn from_parts_rejects_bad_partitions() {
        assert!(ActiveSets::from_parts(3, 1, &[1], &[], &[0], &[2], &[]).is_err());
        assert!(ActiveSets::from_parts(3, 1, &[0], &[], &[], &[2], &[]).is_err());
        assert!(ActiveSets::from_parts(3, 1, &[0], &[], &[0], &[1, 2], &[]).is_err());
    }

    #[test]
    fn single_margin_point_alpha_is_constant() {
        let data = Dataset::from_samples(&[vec![2.0]], &[true], 0.0);
        let sets = ActiveSets::from_parts(1, 1, &[0], &[], &[], &[], &[]).unwrap();
        let sys = build_system(&sets, &data, DEFAULT_RANK_TOL).unwrap();
        let (i, a) = sys.alpha[0];
        assert_eq!(i, 0);
        assert_eq!((a.a_plus, a.a_minus), (0.0, 0.0));
        assert!((a.b - 0.25).abs() < 1e-15);
    }

    #[test]
    fn no_inside_points_means_constant_alpha() {
        let data = two_point();
        let sets = ActiveSets::from_parts(2, 1, &[0], &[], &[], &[], &[1]).unwrap();
        let sys = build_system(&sets, &data, DEFAULT_RANK_TOL).unwrap();
        for (_, a) in &sys.alpha {
            assert!(a.a_plus.abs() < 1e-15 && a.a_minus.abs() < 1e-15);
        }
    }

    #[test]
    fn single_inside_point_gives_strip() {
        let data = Dataset::from_samples(&[vec![1.0, 2.0]], &[true], 0.01);
        let q = data.column(0).norm_squared();
        let sets = ActiveSets::all_inside(1, 1);
        let cons = build_constraints(&sets, &data, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(cons.len(), 3);
        let g = cons[0].functional;
        assert_eq!(cons[0].family, Family::ScoreI);
        assert!((g.a_plus + q).abs() < 1e-14 && g.a_minus == 0.0 && g.b == 1.0);
        assert_eq!(cons[1].family, Family::AxisCPlus);
        assert_eq!(cons[2].family, Family::AxisCMinus);
    }

    #[test]
    fn empty_margin_score_path() {
        let data = two_point();
        let sets = ActiveSets::all_inside(2, 1);
        let x0 = data.column(0);
        let x1 = data.column(1);
        let g = score_path(1, &sets, &data, None);
        assert!((g.a_plus - x1.dot(&x0)).abs() < 1e-15);
        assert!((g.a_minus - x1.dot(&x1)).abs() < 1e-15);
        assert_eq!(g.b, 0.0);
        // origin membership
        for c in build_constraints(&sets, &data, DEFAULT_RANK_TOL).unwrap() {
            if c.family == Family::ScoreI {
                assert_eq!(c.eval(Costs::ORIGIN), 1.0);
            }
        }
    }

    #[test]
    fn score_path_matches_direct_assembly() {
        // d = 3 raw (4 augmented), N = 8; margin {0, 5}, inside {1, 2, 6}, outside rest
        let data = crate::dataset::gaussian_classes(4, 4, 3, 0.5, 0.01, 11);
        let sets = ActiveSets::from_parts(8, 4, &[0], &[5], &[1, 2], &[6], &[3, 4, 7]).unwrap();
        let sys = build_system(&sets, &data, DEFAULT_RANK_TOL).unwrap();
        let f = factor_for(&sets, &data, DEFAULT_RANK_TOL).unwrap();
        for c in [Costs::new(0.1, 0.2), Costs::new(1.3, 0.05), Costs::new(2.0, 3.0)] {
            let alpha = assemble_alpha(&sets, &sys.alpha, &data, c);
            let beta = data.x() * &alpha;
            for i in [1, 2, 3, 4, 6, 7] {
                let g = score_path(i, &sets, &data, f.as_ref());
                let direct = data.x().column(i).dot(&beta);
                assert!((g.eval(c) - direct).abs() < 1e-10, "sample {i}");
            }
            // margin points sit exactly on the margin
            for i in [0, 5] {
                assert!((data.x().column(i).dot(&beta) - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn apply_event_cases() {
        let s = ActiveSets::from_parts(3, 2, &[0], &[], &[1], &[], &[2]).unwrap();
        let a = apply_event(&s, Event::new(0, EventType::MarginInside)).unwrap();
        assert_eq!(a.i_plus(), vec![0, 1]);
        let b = apply_event(&s, Event::new(2, EventType::MarginOutside)).unwrap();
        assert_eq!(b.m_minus(), vec![2]);
        assert!(matches!(
            apply_event(&s, Event::new(2, EventType::MarginInside)),
            Err(KktError::InconsistentEvent { sample: 2, t: 1, .. })
        ));
    }

    #[test]
    fn apply_event_is_an_involution() {
        let s = ActiveSets::from_parts(4, 2, &[0], &[3], &[1], &[], &[2]).unwrap();
        for i in 0..4 {
            for t in [EventType::MarginOutside, EventType::MarginInside] {
                let e = Event::new(i, t);
                if let Ok(once) = apply_event(&s, e) {
                    assert_eq!(apply_event(&once, e).unwrap(), s);
                }
            }
        }
    }

    #[test]
    fn joint_update_commutes_for_distinct_samples() {
        let s = ActiveSets::from_parts(3, 2, &[0], &[], &[1], &[], &[2]).unwrap();
        let e1 = Event::new(0, EventType::MarginInside);
        let e2 = Event::new(2, EventType::MarginOutside);
        let a = joint_update(&s, e1, e2).unwrap();
        let b = joint_update(&s, e2, e1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.state(0), Membership::Inside);
        assert_eq!(a.state(2), Membership::Margin);
        assert!(joint_update(&s, e1, Event::new(2, EventType::MarginInside)).is_err());
    }

    #[test]
    fn degeneracy_classes() {
        let mk = |a, b, c| AffineConstraint::sample(AffineFunctional::new(a, b, c), Family::ScoreI, 0);
        assert_eq!(
            detect_degeneracy(&[mk(1.0, 2.0, -1.0), mk(2.0, 4.0, -2.0)], DEFAULT_RANK_TOL),
            Degeneracy::MultiEventEdge
        );
        // three lines through (1, 1)
        assert_eq!(
            detect_degeneracy(
                &[mk(1.0, 0.0, -1.0), mk(0.0, 1.0, -1.0), mk(1.0, 1.0, -2.0)],
                DEFAULT_RANK_TOL
            ),
            Degeneracy::MultiJointEventVertex
        );
        assert_eq!(
            detect_degeneracy(
                &[mk(1.0, 0.0, -1.0), mk(0.0, 1.0, -1.0), mk(1.0, 1.0, -3.0)],
                DEFAULT_RANK_TOL
            ),
            Degeneracy::Generic
        );
    }

    #[test]
    fn duplicated_points_have_identical_constraints() {
        let d = two_point().with_duplicate(0);
        let sets = ActiveSets::all_inside(3, 2);
        let cons = build_constraints(&sets, &d, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(
            detect_degeneracy(&cons[0..2], DEFAULT_RANK_TOL),
            Degeneracy::MultiEventEdge
        );
        let both = ActiveSets::from_parts(3, 2, &[0, 1], &[], &[], &[2], &[]).unwrap();
        assert!(matches!(
            build_system(&both, &d, DEFAULT_RANK_TOL),
            Err(KktError::Linalg(LinalgError::SingularGram { .. }))
        ));
    }
}

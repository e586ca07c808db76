//! Halfplane intersection in the positive quadrant of the cost plane.
//!
//! Regions are clipped in homogeneous coordinates, starting from the
//! quadrant `C+ >= 0, C- >= 0` with its two ideal points. Vertices with
//! `w = 0` are directions at infinity, so unbounded facets need no
//! artificial bounding box.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kkt::{AffineConstraint, Costs, Family};

/// Default feasibility band, relative to `1 + ‖c‖∞`.
pub const DEFAULT_TOL_FEAS: f64 = 1e-9;
/// Default relative determinant threshold for parallel lines.
pub const DEFAULT_TOL_PAR: f64 = 1e-9;

const TOL_ANGLE: f64 = 1e-9;
const TOL_CONST: f64 = 1e-12;
/// Normals of coincident lines may differ by this much in angle.
const TOL_COINCIDENT: f64 = 1e-7;

/// Region `functional(c) >= 0` of one constraint.
pub type HalfPlane = AffineConstraint;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolytopeError {
    #[error("region is empty (constraint {constraint})")]
    Infeasible { constraint: usize },
    #[error("region has empty interior (constraint {constraint})")]
    EmptyInterior { constraint: usize },
    #[error("mandatory constraint {constraint} does not bound the region")]
    MandatoryInactive { constraint: usize },
}

/// Where a point lies relative to a facet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

/// One boundary piece of a facet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySide {
    /// Position in the constraint list passed to [`intersect_halfplanes`].
    /// Indices past the end denote the implicit axis constraints.
    pub index: usize,
    pub constraint: AffineConstraint,
    /// Other constraints whose zero line contains this whole side.
    pub coincident: Vec<usize>,
}

/// Boundary of a convex facet, counterclockwise.
///
/// Side `k` ends at vertex `k`. A bounded facet has as many sides as
/// vertices and side `k + 1` leaves vertex `k` (cyclically). An unbounded
/// facet has one more side than vertices: side 0 comes in from infinity
/// along `-rays.0`, side `n` leaves the last vertex along `rays.1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetBoundary {
    pub vertices: Vec<Costs>,
    pub sides: Vec<BoundarySide>,
    pub bounded: bool,
    /// Unit directions `(d_in, d_out)` of the two rays of an unbounded facet.
    pub rays: Option<([f64; 2], [f64; 2])>,
    /// Indices of all constraints passing through each vertex.
    pub vertex_on: Vec<Vec<usize>>,
}

impl FacetBoundary {
    /// Side ending at vertex `k`.
    pub fn side_in(&self, k: usize) -> &BoundarySide {
        &self.sides[k]
    }

    /// Side leaving vertex `k`.
    pub fn side_out(&self, k: usize) -> &BoundarySide {
        if self.bounded {
            &self.sides[(k + 1) % self.vertices.len()]
        } else {
            &self.sides[k + 1]
        }
    }

    /// Vertex indices `(start, end)` of side `s`; `None` marks infinity.
    pub fn side_ends(&self, s: usize) -> (Option<usize>, Option<usize>) {
        let n = self.vertices.len();
        if self.bounded {
            (Some((s + n - 1) % n), Some(s))
        } else if s == 0 {
            (None, Some(0))
        } else if s == n {
            (Some(n - 1), None)
        } else {
            (Some(s - 1), Some(s))
        }
    }

    pub fn contains(&self, c: Costs, tol: f64) -> Location {
        contains(self, c, tol)
    }

    /// A point strictly inside the facet.
    pub fn interior_point(&self) -> Costs {
        let pts = self.finite_outline(self.scale());
        let n = pts.len() as f64;
        let (sp, sm) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.plus, b + p.minus));
        Costs::new(sp / n, sm / n)
    }

    /// Largest vertex coordinate, at least 1.
    pub fn scale(&self) -> f64 {
        self.vertices.iter().map(Costs::norm_inf).fold(1.0, f64::max)
    }

    /// Vertices of a bounded facet, or the finite vertices followed by
    /// points at distance `reach` along the rays.
    pub fn finite_outline(&self, reach: f64) -> Vec<Costs> {
        let mut pts = self.vertices.clone();
        if let Some((d_in, d_out)) = self.rays {
            let last = *pts.last().expect("at least one finite vertex");
            let first = pts[0];
            pts.push(Costs::new(last.plus + reach * d_out[0], last.minus + reach * d_out[1]));
            pts.push(Costs::new(first.plus + reach * d_in[0], first.minus + reach * d_in[1]));
        }
        pts
    }

    /// Polygon of the facet clipped to `[0, max_plus] x [0, max_minus]`.
    pub fn clip_to_box(&self, max_plus: f64, max_minus: f64) -> Vec<Costs> {
        let reach = 4.0 * (self.scale() + max_plus + max_minus);
        let mut poly = self.finite_outline(reach);
        let box_sides = [
            (1.0, 0.0, 0.0),
            (0.0, 1.0, 0.0),
            (-1.0, 0.0, max_plus),
            (0.0, -1.0, max_minus),
        ];
        for (a, b, c) in box_sides {
            if poly.is_empty() {
                break;
            }
            let h = |p: &Costs| a * p.plus + b * p.minus + c;
            let mut out = Vec::with_capacity(poly.len() + 1);
            for k in 0..poly.len() {
                let p = poly[k];
                let q = poly[(k + 1) % poly.len()];
                let (hp, hq) = (h(&p), h(&q));
                if hp >= 0.0 {
                    out.push(p);
                }
                if (hp >= 0.0) != (hq >= 0.0) {
                    out.push(p.lerp(&q, hp / (hp - hq)));
                }
            }
            poly = out;
        }
        poly
    }

    /// Area of a bounded facet (infinite otherwise).
    pub fn area(&self) -> f64 {
        if !self.bounded {
            return f64::INFINITY;
        }
        polygon_area(&self.vertices)
    }
}

/// Shoelace area of a simple polygon.
pub fn polygon_area(pts: &[Costs]) -> f64 {
    polygon_signed_area(pts).abs()
}

/// Point where the zero lines of two constraints meet; `None` when parallel.
pub fn constraint_intersection(h1: &HalfPlane, h2: &HalfPlane, tol_par: f64) -> Option<Costs> {
    let f1 = h1.functional;
    let f2 = h2.functional;
    let det = f1.a_plus * f2.a_minus - f2.a_plus * f1.a_minus;
    let scale = f1.a_plus.hypot(f1.a_minus) * f2.a_plus.hypot(f2.a_minus);
    if det.abs() <= tol_par * scale || scale == 0.0 {
        return None;
    }
    Some(Costs::new(
        (f1.a_minus * f2.b - f2.a_minus * f1.b) / det,
        (f2.a_plus * f1.b - f1.a_plus * f2.b) / det,
    ))
}

/// Classifies `c` against the sides of a facet using normalized distances.
pub fn contains(fb: &FacetBoundary, c: Costs, tol: f64) -> Location {
    let mut on = false;
    for s in &fb.sides {
        let f = s.constraint.functional;
        let d = f.eval(c) / f.a_plus.hypot(f.a_minus);
        if d < -tol {
            return Location::Outside;
        }
        if d <= tol {
            on = true;
        }
    }
    if on {
        Location::Boundary
    } else {
        Location::Inside
    }
}

#[derive(Debug, Clone, Copy)]
struct HPoint {
    x: f64,
    y: f64,
    w: f64,
}

impl HPoint {
    fn finite(x: f64, y: f64) -> Self {
        HPoint { x, y, w: 1.0 }
    }

    fn ideal(x: f64, y: f64) -> Self {
        let n = x.hypot(y);
        HPoint {
            x: x / n,
            y: y / n,
            w: 0.0,
        }
    }

    fn from_homogeneous(x: f64, y: f64, w: f64) -> Self {
        if w <= TOL_ANGLE * x.abs().max(y.abs()) {
            HPoint::ideal(x, y)
        } else {
            HPoint::finite(x / w, y / w)
        }
    }

    fn is_ideal(&self) -> bool {
        self.w == 0.0
    }

    fn costs(&self) -> Costs {
        Costs::new(self.x, self.y)
    }

    fn near(&self, other: &HPoint, tol: f64) -> bool {
        match (self.is_ideal(), other.is_ideal()) {
            (true, true) => {
                (self.x * other.y - self.y * other.x).abs() <= TOL_ANGLE
                    && self.x * other.x + self.y * other.y > 0.0
            }
            (false, false) => {
                let band = tol * (1.0 + self.x.abs().max(self.y.abs()));
                (self.x - other.x).abs() <= band && (self.y - other.y).abs() <= band
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Label {
    Con(usize),
    Infinity,
}

/// Constraint scaled to a unit normal.
#[derive(Debug, Clone, Copy)]
struct Line {
    idx: usize,
    a: f64,
    b: f64,
    c: f64,
}

impl Line {
    fn value(&self, p: &HPoint) -> f64 {
        self.a * p.x + self.b * p.y + self.c * p.w
    }

    fn parallel_to(&self, other: &Line) -> bool {
        let (n1, n2) = (self.a.hypot(self.b), other.a.hypot(other.b));
        let cross = (self.a * other.b - self.b * other.a).abs();
        cross <= TOL_COINCIDENT * n1 * n2 && self.a * other.a + self.b * other.b > 0.0
    }

    fn classify(&self, p: &HPoint, tol: f64) -> Cls {
        let v = self.value(p);
        let band = if p.is_ideal() {
            TOL_ANGLE
        } else {
            tol * (1.0 + p.x.abs().max(p.y.abs()))
        };
        if v > band {
            Cls::In
        } else if v < -band {
            Cls::Out
        } else {
            Cls::On
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cls {
    In,
    On,
    Out,
}

type Poly = Vec<(HPoint, Label)>;

fn cut(p: &HPoint, q: &HPoint, line: &Line) -> HPoint {
    // p and q lie on opposite sides; this combination keeps w >= 0
    let vp = line.value(p).abs();
    let vq = line.value(q).abs();
    HPoint::from_homogeneous(vp * q.x + vq * p.x, vp * q.y + vq * p.y, vp * q.w + vq * p.w)
}

fn clip(poly: &Poly, line: &Line, tol: f64) -> Result<Option<Poly>, PolytopeError> {
    let cls: Vec<Cls> = poly.iter().map(|(p, _)| line.classify(p, tol)).collect();
    if cls.iter().all(|&c| c == Cls::Out) {
        return Err(PolytopeError::Infeasible {
            constraint: line.idx,
        });
    }
    if !cls.contains(&Cls::In) {
        return Err(PolytopeError::EmptyInterior {
            constraint: line.idx,
        });
    }
    if !cls.contains(&Cls::Out) {
        return Ok(None);
    }
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..n {
        let (p, lab) = poly[k];
        let q = poly[(k + 1) % n].0;
        match (cls[k], cls[(k + 1) % n]) {
            (Cls::In, Cls::Out) => {
                out.push((p, lab));
                out.push((cut(&p, &q, line), Label::Con(line.idx)));
            }
            (Cls::On, Cls::Out) => out.push((p, Label::Con(line.idx))),
            (Cls::In | Cls::On, _) => out.push((p, lab)),
            (Cls::Out, Cls::In) => out.push((cut(&p, &q, line), lab)),
            (Cls::Out, _) => {}
        }
    }
    Ok(Some(tidy(out, tol)))
}

/// Drops near-duplicate neighbours and vertices between two pieces of the
/// same line.
fn tidy(mut poly: Poly, tol: f64) -> Poly {
    loop {
        let n = poly.len();
        if n < 3 {
            return poly;
        }
        let mut removed = false;
        for k in 0..n {
            let next = (k + 1) % n;
            if poly[k].0.near(&poly[next].0, tol) {
                poly[k].1 = poly[next].1;
                poly.remove(next);
                removed = true;
                break;
            }
            let prev = (k + n - 1) % n;
            if poly[prev].1 == poly[k].1 {
                poly.remove(k);
                removed = true;
                break;
            }
        }
        if !removed {
            return poly;
        }
    }
}

/// Intersects halfplanes within the positive quadrant.
///
/// `mandatory` lists indices into `constraints` that are known to bound the
/// region; they are clipped first and must appear on the boundary. The two
/// axis constraints are implied; if they are absent from `constraints` they
/// are reported with indices `constraints.len()` (for `C- >= 0`) and
/// `constraints.len() + 1` (for `C+ >= 0`).
pub fn intersect_halfplanes(
    constraints: &[HalfPlane],
    mandatory: &[usize],
    tol: f64,
) -> Result<FacetBoundary, PolytopeError> {
    let mut all: Vec<HalfPlane> = constraints.to_vec();
    let axis_index = |fam: Family, all: &mut Vec<HalfPlane>| {
        constraints.iter().position(|c| c.family == fam).unwrap_or_else(|| {
            all.push(AffineConstraint::axis(fam));
            all.len() - 1
        })
    };
    let i_cm = axis_index(Family::AxisCMinus, &mut all);
    let i_cp = axis_index(Family::AxisCPlus, &mut all);

    let mut lines = prepare_lines(&all, i_cm, i_cp)?;
    lines.sort_by(|l1, l2| {
        let m1 = mandatory.iter().position(|&m| m == l1.idx);
        let m2 = mandatory.iter().position(|&m| m == l2.idx);
        match (m1, m2) {
            (Some(a), Some(b)) => a.cmp(&b),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => l1
                .b
                .atan2(l1.a)
                .total_cmp(&l2.b.atan2(l2.a))
                .then(l1.idx.cmp(&l2.idx)),
        }
    });

    let mut poly: Poly = vec![
        (HPoint::finite(0.0, 0.0), Label::Con(i_cm)),
        (HPoint::ideal(1.0, 0.0), Label::Infinity),
        (HPoint::ideal(0.0, 1.0), Label::Con(i_cp)),
    ];
    for line in &lines {
        if let Some(next) = clip(&poly, line, tol)? {
            poly = next;
        }
    }
    if poly.len() < 3 {
        return Err(PolytopeError::EmptyInterior {
            constraint: lines.last().map_or(i_cm, |l| l.idx),
        });
    }
    let fb = assemble(poly, &all, &lines, i_cm, i_cp, tol)?;
    for &m in mandatory {
        if !fb.sides.iter().any(|s| s.index == m || s.coincident.contains(&m)) {
            return Err(PolytopeError::MandatoryInactive { constraint: m });
        }
    }
    Ok(fb)
}

/// Unit-normal lines of all non-constant constraints except the axes.
fn prepare_lines(all: &[HalfPlane], i_cm: usize, i_cp: usize) -> Result<Vec<Line>, PolytopeError> {
    let mut lines = Vec::with_capacity(all.len());
    for (idx, h) in all.iter().enumerate() {
        if idx == i_cm || idx == i_cp {
            continue;
        }
        let f = h.functional;
        let n = f.a_plus.hypot(f.a_minus);
        if n <= TOL_CONST * (f.b.abs() + n) {
            if f.b < 0.0 && f.b.abs() > TOL_CONST {
                return Err(PolytopeError::Infeasible { constraint: idx });
            }
            continue;
        }
        lines.push(Line {
            idx,
            a: f.a_plus / n,
            b: f.a_minus / n,
            c: f.b / n,
        });
    }
    Ok(lines)
}

fn axis_lines(all: &[HalfPlane], i_cm: usize, i_cp: usize) -> [Line; 2] {
    [i_cm, i_cp].map(|idx| {
        let f = all[idx].functional;
        Line {
            idx,
            a: f.a_plus,
            b: f.a_minus,
            c: f.b,
        }
    })
}

/// Builds a bounded boundary from a known cycle of sides, checking that the
/// given vertices lie on their two sides and satisfy every constraint.
///
/// `sides[k]` indexes the constraint ending at `vertices[k]`. Returns `None`
/// if the check fails.
pub fn boundary_from_cycle(
    constraints: &[HalfPlane],
    sides: &[usize],
    vertices: Vec<Costs>,
    tol: f64,
) -> Option<FacetBoundary> {
    let n = vertices.len();
    if n < 3 || sides.len() != n || polygon_signed_area(&vertices) <= 0.0 {
        return None;
    }
    let i_cm = constraints.iter().position(|c| c.family == Family::AxisCMinus)?;
    let i_cp = constraints.iter().position(|c| c.family == Family::AxisCPlus)?;
    let mut every = prepare_lines(constraints, i_cm, i_cp).ok()?;
    every.extend(axis_lines(constraints, i_cm, i_cp));
    let line_of = |idx: usize| every.iter().find(|l| l.idx == idx);
    for k in 0..n {
        let p = HPoint::finite(vertices[k].plus, vertices[k].minus);
        if every.iter().any(|l| l.classify(&p, tol) == Cls::Out) {
            return None;
        }
        for idx in [sides[k], sides[(k + 1) % n]] {
            if line_of(idx)?.classify(&p, tol) != Cls::On {
                return None;
            }
        }
    }
    Some(finish(constraints, &every, vertices, sides.to_vec(), true, None, tol))
}

fn polygon_signed_area(pts: &[Costs]) -> f64 {
    let n = pts.len();
    0.5 * (0..n)
        .map(|k| {
            let p = pts[k];
            let q = pts[(k + 1) % n];
            p.plus * q.minus - q.plus * p.minus
        })
        .sum::<f64>()
}

fn assemble(
    mut poly: Poly,
    all: &[HalfPlane],
    lines: &[Line],
    i_cm: usize,
    i_cp: usize,
    tol: f64,
) -> Result<FacetBoundary, PolytopeError> {
    let n = poly.len();
    let first_ideal = poly.iter().position(|(p, _)| p.is_ideal());
    let bounded = first_ideal.is_none();
    if let Some(fi) = first_ideal {
        // rotate so the ideal run comes first
        let start = (0..n)
            .map(|k| (fi + n - k) % n)
            .find(|&k| !poly[(k + n - 1) % n].0.is_ideal())
            .unwrap_or(fi);
        poly.rotate_left(start);
    }
    let n_ideal = poly.iter().filter(|(p, _)| p.is_ideal()).count();
    if poly[..n_ideal].iter().any(|(p, _)| !p.is_ideal()) {
        return Err(PolytopeError::EmptyInterior { constraint: i_cm });
    }
    let finite: Vec<(HPoint, Label)> = poly[n_ideal..].to_vec();
    let nf = finite.len();
    if nf == 0 || (bounded && nf < 3) {
        return Err(PolytopeError::EmptyInterior { constraint: i_cm });
    }

    let mut labels: Vec<usize> = Vec::with_capacity(nf + 1);
    let con = |l: Label| match l {
        Label::Con(i) => Ok(i),
        Label::Infinity => Err(PolytopeError::EmptyInterior { constraint: i_cm }),
    };
    if bounded {
        for k in 0..nf {
            labels.push(con(finite[(k + nf - 1) % nf].1)?);
        }
    } else {
        labels.push(con(poly[n_ideal - 1].1)?);
        for (_, lab) in &finite {
            labels.push(con(*lab)?);
        }
    }

    let mut vertices: Vec<Costs> = finite.iter().map(|(p, _)| p.costs()).collect();
    // sharpen each vertex onto its two defining lines
    for k in 0..nf {
        let (s_in, s_out) = if bounded {
            (labels[k], labels[(k + 1) % nf])
        } else {
            (labels[k], labels[k + 1])
        };
        if let Some(p) = constraint_intersection(&all[s_in], &all[s_out], DEFAULT_TOL_PAR) {
            let band = 1e-6 * (1.0 + vertices[k].norm_inf());
            if (p.plus - vertices[k].plus).abs() <= band && (p.minus - vertices[k].minus).abs() <= band {
                vertices[k] = p;
            }
        }
    }
    for v in &mut vertices {
        v.plus = v.plus.max(0.0);
        v.minus = v.minus.max(0.0);
    }

    let rays = (!bounded).then(|| {
        let d_in = poly[n_ideal - 1].0;
        let d_out = poly[0].0;
        ([d_in.x, d_in.y], [d_out.x, d_out.y])
    });

    let mut every: Vec<Line> = lines.to_vec();
    every.extend(axis_lines(all, i_cm, i_cp));
    Ok(finish(all, &every, vertices, labels, bounded, rays, tol))
}

fn finish(
    all: &[HalfPlane],
    every: &[Line],
    vertices: Vec<Costs>,
    labels: Vec<usize>,
    bounded: bool,
    rays: Option<([f64; 2], [f64; 2])>,
    tol: f64,
) -> FacetBoundary {
    let nf = vertices.len();
    let hp: Vec<HPoint> = vertices.iter().map(|v| HPoint::finite(v.plus, v.minus)).collect();
    let vertex_on: Vec<Vec<usize>> = hp
        .iter()
        .map(|p| {
            let mut on: Vec<usize> = every
                .iter()
                .filter(|l| l.classify(p, tol) == Cls::On)
                .map(|l| l.idx)
                .collect();
            on.sort_unstable();
            on
        })
        .collect();

    let mut sides = Vec::with_capacity(labels.len());
    for (s, &idx) in labels.iter().enumerate() {
        let ends: [HPoint; 2] = if bounded {
            [hp[(s + nf - 1) % nf], hp[s]]
        } else if s == 0 {
            let (d, _) = rays.expect("unbounded");
            [HPoint::ideal(d[0], d[1]), hp[0]]
        } else if s == nf {
            let (_, d) = rays.expect("unbounded");
            [hp[nf - 1], HPoint::ideal(d[0], d[1])]
        } else {
            [hp[s - 1], hp[s]]
        };
        let own = every.iter().find(|l| l.idx == idx).copied();
        let mut coincident: Vec<usize> = every
            .iter()
            .filter(|l| l.idx != idx)
            .filter(|l| own.is_none_or(|o| o.parallel_to(l)))
            .filter(|l| ends.iter().all(|p| l.classify(p, tol) == Cls::On))
            .map(|l| l.idx)
            .collect();
        coincident.sort_unstable();
        sides.push(BoundarySide {
            index: idx,
            constraint: all[idx],
            coincident,
        });
    }
    FacetBoundary {
        vertices,
        sides,
        bounded,
        rays,
        vertex_on,
    }
}

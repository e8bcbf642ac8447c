//! Bounded, convex, down-closed rate regions in the non-negative quadrant.
//!
//! A [`RateRegion`] is stored both as canonical half-spaces (redundant
//! constraints removed, weights scaled so `max(a1, a2) = 1`) and as its
//! vertex list. Every containment and redundancy test uses the absolute
//! tolerance [`TOL`].

use std::cmp::Ordering;
use std::io::Write;

use serde::Serialize;

use crate::error::{Axis, CoopError, Result};
use crate::model::RatePair;

/// Absolute tolerance, in bits, for containment and nesting tests.
pub const TOL: f64 = 1e-9;

/// Vertices closer than this to the chord through their neighbours are dropped.
const COLLINEAR_TOL: f64 = 1e-12;

/// `a1·R1 + a2·R2 <= c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfSpace {
    pub a1: f64,
    pub a2: f64,
    pub c: f64,
}

impl HalfSpace {
    pub fn new(a1: f64, a2: f64, c: f64) -> Result<Self> {
        if !(a1.is_finite() && a2.is_finite() && c.is_finite()) {
            return Err(CoopError::invalid("half-space coefficients must be finite"));
        }
        if a1 < 0.0 || a2 < 0.0 || (a1 == 0.0 && a2 == 0.0) {
            return Err(CoopError::invalid(format!(
                "half-space weights must be non-negative and not both zero, got ({a1}, {a2})"
            )));
        }
        if c < 0.0 {
            return Err(CoopError::invalid(format!(
                "half-space bound must be >= 0, got {c}"
            )));
        }
        Ok(HalfSpace { a1, a2, c })
    }

    /// `R1 <= c`, with `c` clamped at zero.
    pub fn r1(c: f64) -> Self {
        HalfSpace {
            a1: 1.0,
            a2: 0.0,
            c: c.max(0.0),
        }
    }

    /// `R2 <= c`, with `c` clamped at zero.
    pub fn r2(c: f64) -> Self {
        HalfSpace {
            a1: 0.0,
            a2: 1.0,
            c: c.max(0.0),
        }
    }

    /// `R1 + R2 <= c`, with `c` clamped at zero.
    pub fn sum(c: f64) -> Self {
        HalfSpace {
            a1: 1.0,
            a2: 1.0,
            c: c.max(0.0),
        }
    }

    pub fn eval(&self, p: RatePair) -> f64 {
        self.a1 * p.r1 + self.a2 * p.r2
    }

    /// Amount by which `p` violates the constraint (negative when strictly inside).
    pub fn excess(&self, p: RatePair) -> f64 {
        self.eval(p) - self.c
    }

    /// Support direction `mu = a1 / (a1 + a2)` of the facet normal.
    pub fn direction(&self) -> f64 {
        self.a1 / (self.a1 + self.a2)
    }

    fn normalized(&self) -> Self {
        let m = self.a1.max(self.a2);
        HalfSpace {
            a1: self.a1 / m,
            a2: self.a2 / m,
            c: self.c / m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRegion {
    halfspaces: Vec<HalfSpace>,
    /// Sorted by `(r1, r2)` ascending; always contains the origin.
    vertices: Vec<RatePair>,
    /// Vertices in boundary order: origin, up the R2 axis, along the
    /// Pareto frontier, down to the R1 axis.
    #[serde(skip)]
    boundary: Vec<RatePair>,
}

fn cross(o: RatePair, a: RatePair, b: RatePair) -> f64 {
    (a.r1 - o.r1) * (b.r2 - o.r2) - (a.r2 - o.r2) * (b.r1 - o.r1)
}

fn near(a: RatePair, b: RatePair) -> bool {
    a.dist(&b) <= COLLINEAR_TOL
}

impl RateRegion {
    /// Down-closed convex hull of `points` and the origin.
    pub fn down_hull<I: IntoIterator<Item = RatePair>>(points: I) -> Self {
        let mut pts: Vec<RatePair> = points
            .into_iter()
            .filter(|p| p.r1.is_finite() && p.r2.is_finite())
            .map(|p| RatePair::new(p.r1.max(0.0), p.r2.max(0.0)))
            .collect();
        let max_x = pts.iter().map(|p| p.r1).fold(0.0, f64::max);
        let max_y = pts.iter().map(|p| p.r2).fold(0.0, f64::max);
        pts.push(RatePair::ORIGIN);
        pts.push(RatePair::new(0.0, max_y));
        pts.push(RatePair::new(max_x, 0.0));
        pts.sort_by(|a, b| a.r1.total_cmp(&b.r1).then_with(|| b.r2.total_cmp(&a.r2)));

        let mut hull: Vec<RatePair> = Vec::with_capacity(pts.len());
        for p in pts {
            if hull.last().is_some_and(|&l| near(l, p)) {
                continue;
            }
            while hull.len() >= 2 {
                let o = hull[hull.len() - 2];
                let a = hull[hull.len() - 1];
                if cross(o, a, p) < -COLLINEAR_TOL * o.dist(&p) {
                    break;
                }
                hull.pop();
            }
            hull.push(p);
        }

        let mut boundary = vec![RatePair::ORIGIN];
        for p in hull {
            if !near(*boundary.last().unwrap(), p) {
                boundary.push(p);
            }
        }
        while boundary.len() > 1 && near(*boundary.last().unwrap(), boundary[0]) {
            boundary.pop();
        }

        let mut halfspaces = Vec::new();
        let n = boundary.len();
        for i in 0..n {
            let p = boundary[i];
            let q = boundary[(i + 1) % n];
            if n < 2 || (p.r1 == 0.0 && q.r1 == 0.0) || (p.r2 == 0.0 && q.r2 == 0.0) {
                continue;
            }
            let a1 = (p.r2 - q.r2).max(0.0);
            let a2 = (q.r1 - p.r1).max(0.0);
            if a1 == 0.0 && a2 == 0.0 {
                continue;
            }
            let h = HalfSpace {
                a1,
                a2,
                c: a1 * p.r1 + a2 * p.r2,
            }
            .normalized();
            halfspaces.push(h);
        }
        if !halfspaces.iter().any(|h| h.a1 > 0.0) {
            halfspaces.push(HalfSpace::r1(max_x));
        }
        if !halfspaces.iter().any(|h| h.a2 > 0.0) {
            halfspaces.push(HalfSpace::r2(max_y));
        }

        let mut vertices = boundary.clone();
        vertices.sort_by(|a, b| a.r1.total_cmp(&b.r1).then_with(|| a.r2.total_cmp(&b.r2)));

        RateRegion {
            halfspaces,
            vertices,
            boundary,
        }
    }

    pub fn from_halfspaces(halfspaces: &[HalfSpace]) -> Result<Self> {
        make_region(halfspaces)
    }

    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    pub fn vertices(&self) -> &[RatePair] {
        &self.vertices
    }

    pub fn boundary(&self) -> &[RatePair] {
        &self.boundary
    }

    pub fn max_r1(&self) -> f64 {
        self.vertices.iter().map(|v| v.r1).fold(0.0, f64::max)
    }

    pub fn max_r2(&self) -> f64 {
        self.vertices.iter().map(|v| v.r2).fold(0.0, f64::max)
    }

    /// `max mu·R1 + (1-mu)·R2` and the lowest-`(r1, r2)` maximizing vertex.
    pub fn support(&self, mu: f64) -> (f64, RatePair) {
        let mut best = f64::NEG_INFINITY;
        let mut arg = RatePair::ORIGIN;
        for v in &self.vertices {
            let s = v.weighted(mu);
            if s > best + 1e-12 {
                best = s;
                arg = *v;
            }
        }
        (best, arg)
    }

    pub fn contains(&self, p: RatePair) -> bool {
        p.r1 >= -TOL && p.r2 >= -TOL && self.halfspaces.iter().all(|h| h.excess(p) <= TOL)
    }

    /// Vertices not dominated by another vertex, sorted by increasing `r1`.
    pub fn pareto_vertices(&self) -> Vec<RatePair> {
        let eps = COLLINEAR_TOL;
        self.vertices
            .iter()
            .filter(|v| {
                !self.vertices.iter().any(|w| {
                    w.r1 >= v.r1 - eps
                        && w.r2 >= v.r2 - eps
                        && (w.r1 > v.r1 + eps || w.r2 > v.r2 + eps)
                })
            })
            .copied()
            .collect()
    }

    /// Region with every rate multiplied by `k >= 0`.
    pub fn scaled(&self, k: f64) -> Self {
        RateRegion::down_hull(self.vertices.iter().map(|v| v.scaled(k)))
    }

    /// Euclidean distance from `p` to the region.
    pub fn distance_to(&self, p: RatePair) -> f64 {
        let inside =
            p.r1 >= 0.0 && p.r2 >= 0.0 && self.halfspaces.iter().all(|h| h.excess(p) <= 0.0);
        if inside {
            return 0.0;
        }
        let n = self.boundary.len();
        if n == 1 {
            return p.dist(&self.boundary[0]);
        }
        (0..n)
            .map(|i| segment_distance(p, self.boundary[i], self.boundary[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    /// CSV vertex dump with header `r1_bits,r2_bits`.
    pub fn write_vertex_csv<W: Write>(&self, w: W, fmt: impl Fn(f64) -> String) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["r1_bits", "r2_bits"])?;
        for v in &self.vertices {
            wtr.write_record([fmt(v.r1), fmt(v.r2)])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn segment_distance(p: RatePair, a: RatePair, b: RatePair) -> f64 {
    let (dx, dy) = (b.r1 - a.r1, b.r2 - a.r2);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.dist(&a);
    }
    let t = (((p.r1 - a.r1) * dx + (p.r2 - a.r2) * dy) / len2).clamp(0.0, 1.0);
    p.dist(&RatePair::new(a.r1 + t * dx, a.r2 + t * dy))
}

/// Canonical region `{R >= 0 : a·R <= c for every half-space}`.
pub fn make_region(halfspaces: &[HalfSpace]) -> Result<RateRegion> {
    if halfspaces.is_empty() {
        return Err(CoopError::invalid("at least one half-space is required"));
    }
    let hs: Vec<HalfSpace> = halfspaces
        .iter()
        .map(|h| HalfSpace::new(h.a1, h.a2, h.c).map(|h| h.normalized()))
        .collect::<Result<_>>()?;
    if !hs.iter().any(|h| h.a1 > 0.0) {
        return Err(CoopError::Unbounded(Axis::R1));
    }
    if !hs.iter().any(|h| h.a2 > 0.0) {
        return Err(CoopError::Unbounded(Axis::R2));
    }

    let mut cand = vec![RatePair::ORIGIN];
    for h in &hs {
        if h.a2 > 0.0 {
            cand.push(RatePair::new(0.0, h.c / h.a2));
        }
        if h.a1 > 0.0 {
            cand.push(RatePair::new(h.c / h.a1, 0.0));
        }
    }
    for (i, p) in hs.iter().enumerate() {
        for q in &hs[i + 1..] {
            let det = p.a1 * q.a2 - p.a2 * q.a1;
            if det.abs() < 1e-15 {
                continue;
            }
            let x = (p.c * q.a2 - p.a2 * q.c) / det;
            let y = (p.a1 * q.c - p.c * q.a1) / det;
            if x >= -TOL && y >= -TOL {
                cand.push(RatePair::new(x.max(0.0), y.max(0.0)));
            }
        }
    }
    let feasible = cand
        .into_iter()
        .filter(|p| hs.iter().all(|h| h.excess(*p) <= TOL));
    Ok(RateRegion::down_hull(feasible))
}

pub fn support_value(region: &RateRegion, mu: f64) -> (f64, RatePair) {
    region.support(mu)
}

/// Convex closure of the union of `regions` and the down-sets of `points`.
pub fn convex_union(regions: &[&RateRegion], points: &[RatePair]) -> Result<RateRegion> {
    if regions.is_empty() && points.is_empty() {
        return Err(CoopError::invalid("convex_union needs at least one input"));
    }
    let all = regions
        .iter()
        .flat_map(|r| r.vertices().iter().copied())
        .chain(points.iter().copied());
    Ok(RateRegion::down_hull(all))
}

pub fn contains_point(region: &RateRegion, p: RatePair) -> bool {
    region.contains(p)
}

fn check_nested(inner: &RateRegion, outer: &RateRegion) -> Result<()> {
    for v in inner.vertices() {
        for h in outer.halfspaces() {
            let excess = h.excess(*v);
            if excess > TOL {
                return Err(CoopError::NotNested { vertex: *v, excess });
            }
        }
    }
    Ok(())
}

/// Candidate support directions where a support-function difference can peak.
pub fn critical_directions(regions: &[&RateRegion]) -> Vec<f64> {
    let mut mus = vec![0.0, 1.0];
    for r in regions {
        mus.extend(r.halfspaces().iter().map(|h| h.direction()));
    }
    mus.sort_by(f64::total_cmp);
    mus.dedup();
    mus
}

/// Largest support-function shortfall of `inner` against `outer` and its direction.
///
/// Both support functions are piecewise linear in `mu` with breakpoints at
/// facet normals, so evaluating every facet direction of both regions (and
/// the axes) is exact.
pub fn region_gap_detail(inner: &RateRegion, outer: &RateRegion) -> Result<(f64, f64)> {
    check_nested(inner, outer)?;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for mu in critical_directions(&[inner, outer]) {
        let d = outer.support(mu).0 - inner.support(mu).0;
        if d > best.0 {
            best = (d, mu);
        }
    }
    Ok(best)
}

/// Least `b` such that `outer` lies in the down-closure of `inner + (b, b)`.
pub fn region_gap(inner: &RateRegion, outer: &RateRegion) -> Result<f64> {
    region_gap_detail(inner, outer).map(|(g, _)| g)
}

/// Literal diagonal-shift certificate: every point on the Pareto frontier of
/// `inner`, shifted by `(b, b)`, lies outside `outer`.
///
/// Frontier vertices and the segments between consecutive frontier vertices
/// are both checked; a segment passes only if no point on it lands inside.
pub fn check_shifted_frontier_gap(inner: &RateRegion, outer: &RateRegion, b: f64) -> bool {
    let pareto = inner.pareto_vertices();
    let shift = |p: RatePair| RatePair::new(p.r1 + b, p.r2 + b);
    let exits = |v: RatePair, w: RatePair| -> bool {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let dir = RatePair::new(w.r1 - v.r1, w.r2 - v.r2);
        for h in outer.halfspaces() {
            let alpha = h.excess(shift(v)) - TOL;
            let beta = h.eval(dir);
            if beta.abs() < 1e-15 {
                if alpha > 0.0 {
                    return true;
                }
                continue;
            }
            let t = -alpha / beta;
            if beta > 0.0 {
                hi = hi.min(t);
            } else {
                lo = lo.max(t);
            }
        }
        lo > hi
    };
    match pareto.len() {
        0 => true,
        1 => exits(pareto[0], pareto[0]),
        _ => pareto.windows(2).all(|w| exits(w[0], w[1])),
    }
}

/// Hausdorff distance between two regions.
///
/// The distance from a point to a convex set is convex, so the directed
/// distance from a polygon is attained at one of its vertices.
pub fn hausdorff_distance(a: &RateRegion, b: &RateRegion) -> f64 {
    let directed = |x: &RateRegion, y: &RateRegion| {
        x.vertices()
            .iter()
            .map(|v| y.distance_to(*v))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Total order helper for callers sorting rate pairs.
pub fn lex_cmp(a: &RatePair, b: &RatePair) -> Ordering {
    a.r1.total_cmp(&b.r1).then_with(|| a.r2.total_cmp(&b.r2))
}

//! Closed convex bodies with exact projection and distance, the hull of the
//! nodes' zero sets, and sampled checks of the projection inequalities used by
//! the Lyapunov arguments.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::potentials::PotentialSpec;
use crate::report::CheckReport;
use crate::vector::{dist, dot, norm, norm_sq, sub};

/// Tolerance for the inequality checks in this module.
pub const INEQUALITY_TOL: f64 = 1e-10;

const CERT_TOL: f64 = 1e-10;
const WOLFE_MAX_ITER: usize = 1000;

/// A nonempty, closed, bounded convex set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case")]
pub enum ConvexBody {
    Point(Vec<f64>),
    Interval { lo: f64, hi: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Hull { vertices: Vec<Vec<f64>> },
}

impl ConvexBody {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvalidInput(format!("interval requires lo <= hi, got [{lo}, {hi}]")));
        }
        Ok(ConvexBody::Interval { lo, hi })
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.is_empty() || lo.iter().zip(&hi).any(|(l, h)| !(l <= h)) {
            return Err(Error::InvalidInput("box requires lo <= hi componentwise".into()));
        }
        Ok(ConvexBody::Box { lo, hi })
    }

    pub fn hull(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let first = vertices
            .first()
            .ok_or_else(|| Error::InvalidInput("hull needs at least one vertex".into()))?;
        let m = first.len();
        if m == 0 {
            return Err(Error::InvalidInput("hull vertices must be nonempty".into()));
        }
        for v in &vertices {
            check_dim(m, v.len())?;
        }
        Ok(ConvexBody::Hull { vertices })
    }

    pub fn dimension(&self) -> usize {
        match self {
            ConvexBody::Point(p) => p.len(),
            ConvexBody::Interval { .. } => 1,
            ConvexBody::Box { lo, .. } => lo.len(),
            ConvexBody::Hull { vertices } => vertices[0].len(),
        }
    }

    /// Points whose convex hull is the body (box corners, hull vertices).
    pub fn extreme_points(&self) -> Vec<Vec<f64>> {
        match self {
            ConvexBody::Point(p) => vec![p.clone()],
            ConvexBody::Interval { lo, hi } => {
                if lo == hi {
                    vec![vec![*lo]]
                } else {
                    vec![vec![*lo], vec![*hi]]
                }
            }
            ConvexBody::Box { lo, hi } => box_corners(lo, hi),
            ConvexBody::Hull { vertices } => vertices.clone(),
        }
    }

    pub fn centroid(&self) -> Vec<f64> {
        match self {
            ConvexBody::Point(p) => p.clone(),
            ConvexBody::Interval { lo, hi } => vec![0.5 * (lo + hi)],
            ConvexBody::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
            ConvexBody::Hull { vertices } => {
                let n = vertices.len() as f64;
                let mut c = vec![0.0; vertices[0].len()];
                for v in vertices {
                    for (ci, vi) in c.iter_mut().zip(v) {
                        *ci += vi / n;
                    }
                }
                c
            }
        }
    }

    /// Axis-aligned bounds `(lo, hi)` enclosing the body.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let pts = self.extreme_points();
        let m = self.dimension();
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![f64::NEG_INFINITY; m];
        for p in &pts {
            for k in 0..m {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Nearest point of the body to `x`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dimension(), x.len())?;
        match self {
            ConvexBody::Point(p) => Ok(p.clone()),
            ConvexBody::Interval { lo, hi } => Ok(vec![x[0].clamp(*lo, *hi)]),
            ConvexBody::Box { lo, hi } => Ok(x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| v.clamp(*l, *h))
                .collect()),
            ConvexBody::Hull { vertices } => project_hull(vertices, x),
        }
    }

    /// `|x|_K`, the Euclidean distance from `x` to the body.
    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        let p = self.project(x)?;
        Ok(dist(x, &p))
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        Ok(self.distance(x)? <= tol)
    }
}

fn box_corners(lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let mut corners: Vec<Vec<f64>> = vec![Vec::with_capacity(lo.len())];
    for (l, h) in lo.iter().zip(hi) {
        let mut next = Vec::with_capacity(corners.len() * 2);
        for c in &corners {
            let mut a = c.clone();
            a.push(*l);
            next.push(a);
            if h != l {
                let mut b = c.clone();
                b.push(*h);
                next.push(b);
            }
        }
        corners = next;
    }
    corners
}

/// Projection onto `co{vertices}` by Wolfe's minimum-norm-point active-set
/// method on the translated vertices `v_k - x`, followed by a certificate:
/// `<x - p, v_k - p> <= 0` at every vertex characterizes the projection.
fn project_hull(vertices: &[Vec<f64>], x: &[f64]) -> Result<Vec<f64>> {
    for v in vertices {
        check_dim(x.len(), v.len())?;
    }
    if vertices.len() == 1 {
        return Ok(vertices[0].clone());
    }
    let shifted: Vec<Vec<f64>> = vertices.iter().map(|v| sub(v, x)).collect();
    let w = min_norm_point(&shifted)?;
    let scale = shifted.iter().map(|p| norm(p)).fold(0.0, f64::max);
    if norm(&w) <= 1e-14 * (1.0 + scale) {
        return Ok(x.to_vec());
    }
    let p: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a + b).collect();

    let residual = hull_certificate(vertices, x, &p);
    let reach = vertices.iter().map(|v| dist(v, &p)).fold(0.0, f64::max);
    let allowed = CERT_TOL * (norm(&w) * reach).max(1.0);
    if residual > allowed {
        return Err(Error::Numerical {
            message: "hull projection failed its optimality certificate".into(),
            residual,
        });
    }
    Ok(p)
}

/// Largest violation of `<x - p, v - p> <= 0` over the vertices.
pub fn hull_certificate(vertices: &[Vec<f64>], x: &[f64], p: &[f64]) -> f64 {
    let normal = sub(x, p);
    vertices
        .iter()
        .map(|v| dot(&normal, &sub(v, p)))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn min_norm_point(points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let max_sq = points.iter().map(|p| norm_sq(p)).fold(0.0, f64::max);
    let start = (0..points.len())
        .min_by(|&a, &b| norm_sq(&points[a]).total_cmp(&norm_sq(&points[b])))
        .expect("nonempty");
    let mut support = vec![start];
    let mut weights = vec![1.0];
    let mut w = points[start].clone();

    for _ in 0..WOLFE_MAX_ITER {
        let w_sq = norm_sq(&w);
        let (j, wp) = (0..points.len())
            .map(|j| (j, dot(&w, &points[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if w_sq - wp <= 1e-15 * max_sq || support.contains(&j) {
            return Ok(w);
        }
        support.push(j);
        weights.push(0.0);

        // Minor cycles: move toward the affine minimizer of the support while
        // keeping the weights nonnegative, dropping points that hit zero.
        loop {
            let alpha = affine_minimizer(points, &support)?;
            if alpha.iter().all(|a| *a > 1e-14) {
                weights = alpha;
                break;
            }
            let mut theta = 1.0_f64;
            for (l, a) in weights.iter().zip(&alpha) {
                if *a <= 1e-14 && l - a > 0.0 {
                    theta = theta.min(l / (l - a));
                }
            }
            for (l, a) in weights.iter_mut().zip(&alpha) {
                *l += theta * (a - *l);
            }
            let mut k = 0;
            while k < support.len() {
                if weights[k] <= 1e-14 {
                    support.remove(k);
                    weights.remove(k);
                } else {
                    k += 1;
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|l| *l /= total);
            if support.len() == 1 {
                break;
            }
        }
        w = combine(points, &support, &weights);
    }
    Err(Error::Numerical {
        message: "minimum-norm-point iteration budget exhausted".into(),
        residual: norm(&w),
    })
}

fn combine(points: &[Vec<f64>], support: &[usize], weights: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; points[0].len()];
    for (&k, l) in support.iter().zip(weights) {
        for (wi, pi) in w.iter_mut().zip(&points[k]) {
            *wi += l * pi;
        }
    }
    w
}

/// Weights (summing to one) of the point of smallest norm in the affine hull
/// of the supported points.
fn affine_minimizer(points: &[Vec<f64>], support: &[usize]) -> Result<Vec<f64>> {
    let s = support.len();
    let mut a = DMatrix::<f64>::zeros(s + 1, s + 1);
    let mut b = DVector::<f64>::zeros(s + 1);
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            a[(r, c)] = dot(&points[i], &points[j]);
        }
        a[(r, s)] = 1.0;
        a[(s, r)] = 1.0;
    }
    b[s] = 1.0;
    let sol = match a.clone().lu().solve(&b) {
        Some(sol) if sol.iter().all(|v| v.is_finite()) => sol,
        _ => a
            .svd(true, true)
            .solve(&b, 1e-14)
            .map_err(|e| Error::Numerical { message: e.into(), residual: f64::NAN })?,
    };
    Ok(sol.iter().take(s).copied().collect())
}

/// Intersection of points, intervals and boxes. `None` when empty.
pub fn intersect(bodies: &[ConvexBody]) -> Result<Option<ConvexBody>> {
    let first = bodies
        .first()
        .ok_or_else(|| Error::InvalidInput("nothing to intersect".into()))?;
    let m = first.dimension();
    let mut lo = vec![f64::NEG_INFINITY; m];
    let mut hi = vec![f64::INFINITY; m];
    for b in bodies {
        check_dim(m, b.dimension())?;
        if matches!(b, ConvexBody::Hull { .. }) {
            return Err(Error::Unsupported("intersection with a hull body".into()));
        }
        let (blo, bhi) = b.bounding_box();
        for k in 0..m {
            lo[k] = lo[k].max(blo[k]);
            hi[k] = hi[k].min(bhi[k]);
        }
    }
    if lo.iter().zip(&hi).any(|(l, h)| l > h) {
        return Ok(None);
    }
    Ok(Some(body_from_bounds(lo, hi)))
}

fn body_from_bounds(lo: Vec<f64>, hi: Vec<f64>) -> ConvexBody {
    if lo == hi {
        ConvexBody::Point(lo)
    } else if lo.len() == 1 {
        ConvexBody::Interval { lo: lo[0], hi: hi[0] }
    } else {
        ConvexBody::Box { lo, hi }
    }
}

/// `Theta_* = co(union of zero sets)`.
pub fn theta_star(potentials: &[PotentialSpec]) -> Result<ConvexBody> {
    let first = potentials
        .first()
        .ok_or_else(|| Error::InvalidInput("no potentials".into()))?;
    let m = first.dimension();
    let mut sets = Vec::with_capacity(potentials.len());
    for p in potentials {
        check_dim(m, p.dimension())?;
        let z = p.zero_set()?;
        let (lo, hi) = z.bounding_box();
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return Err(Error::Precondition("unbounded zero set violates A2".into()));
        }
        sets.push(z);
    }
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    for z in &sets {
        let (zl, zh) = z.bounding_box();
        for k in 0..m {
            lo[k] = lo[k].min(zl[k]);
            hi[k] = hi[k].max(zh[k]);
        }
    }
    if m == 1 || lo == hi {
        return Ok(body_from_bounds(lo, hi));
    }
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for z in &sets {
        for v in z.extreme_points() {
            if !vertices.contains(&v) {
                vertices.push(v);
            }
        }
    }
    ConvexBody::hull(vertices)
}

/// Samples `<x - P(x), f_i(x)> <= 0` for every node at every sample.
pub fn check_a2(potentials: &[PotentialSpec], samples: &[Vec<f64>]) -> Result<CheckReport> {
    let body = theta_star(potentials)?;
    let mut worst = f64::NEG_INFINITY;
    let mut location = None;
    for x in samples {
        let p = body.project(x)?;
        let normal = sub(x, &p);
        for (i, spec) in potentials.iter().enumerate() {
            let value = dot(&normal, &spec.self_dynamics(x)?);
            if value > worst {
                worst = value;
                location = Some(format!("node {i}, x = {x:?}"));
            }
        }
    }
    let mut report = CheckReport::new("a2", worst <= INEQUALITY_TOL, worst).with_params(
        serde_json::json!({ "samples": samples.len(), "nodes": potentials.len(), "tol": INEQUALITY_TOL }),
    );
    if let Some(l) = location {
        report = report.with_location(l);
    }
    Ok(report)
}

/// Checks both inequalities relating `<x_a - P(x_a), x_b - x_a>` to the
/// distances `|x_a|_K`, `|x_b|_K`. The worst value is the largest excess of
/// the left side over the bound.
pub fn check_lemma4(body: &ConvexBody, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<CheckReport> {
    let mut worst = f64::NEG_INFINITY;
    let mut location = None;
    for (idx, (xa, xb)) in pairs.iter().enumerate() {
        let pa = body.project(xa)?;
        let da = dist(xa, &pa);
        let db = body.distance(xb)?;
        let lhs = dot(&sub(xa, &pa), &sub(xb, xa));
        let mut excess = lhs - da * (da - db).abs();
        if da > db {
            excess = excess.max(lhs + da * (da - db));
        }
        if excess > worst {
            worst = excess;
            location = Some(format!("pair {idx}"));
        }
    }
    let mut report = CheckReport::new("lemma4", worst <= INEQUALITY_TOL, worst)
        .with_params(serde_json::json!({ "pairs": pairs.len(), "tol": INEQUALITY_TOL }));
    if let Some(l) = location {
        report = report.with_location(l);
    }
    Ok(report)
}

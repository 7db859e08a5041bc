//! Catalog of convex node potentials `F_i` and their self-dynamics
//! `f_i = -grad F_i`.
//!
//! Every catalog kind is separable across coordinates, so values, gradients
//! and argmin sets are assembled coordinate by coordinate.

use serde::{Deserialize, Serialize};

use crate::convex_geometry::ConvexBody;
use crate::error::{check_dim, Error, Result};
use crate::report::CheckReport;

/// Serialized form of a potential, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    /// `F(x) = w/2 |x - center|^2`.
    Quadratic {
        center: Vec<f64>,
        #[serde(default = "unit_weight")]
        weight: f64,
    },
    /// `F(x) = sum_k (x_k - center_k)^4 / 4`, so `f(x) = -(x - center)^3`.
    #[serde(rename = "quartic")]
    QuarticWell { center: Vec<f64> },
    /// One-dimensional, zero on `[left, right]` with quadratic halves outside.
    FlatBottom { left: f64, right: f64 },
    Sum { terms: Vec<PotentialSpec> },
}

fn unit_weight() -> f64 {
    1.0
}

/// A validated convex potential from the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialKind", into = "PotentialKind")]
pub struct PotentialSpec {
    kind: PotentialKind,
    dimension: usize,
}

impl From<PotentialSpec> for PotentialKind {
    fn from(spec: PotentialSpec) -> Self {
        spec.kind
    }
}

impl TryFrom<PotentialKind> for PotentialSpec {
    type Error = Error;

    fn try_from(kind: PotentialKind) -> Result<Self> {
        let dimension = match &kind {
            PotentialKind::Quadratic { center, weight } => {
                check_center(center)?;
                if !(weight.is_finite() && *weight > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "quadratic weight must be positive and finite, got {weight}"
                    )));
                }
                center.len()
            }
            PotentialKind::QuarticWell { center } => {
                check_center(center)?;
                center.len()
            }
            PotentialKind::FlatBottom { left, right } => {
                if !(left.is_finite() && right.is_finite()) {
                    return Err(Error::InvalidInput("flat_bottom bounds must be finite".into()));
                }
                if left > right {
                    return Err(Error::InvalidInput(format!(
                        "flat_bottom requires left <= right, got [{left}, {right}]"
                    )));
                }
                1
            }
            PotentialKind::Sum { terms } => {
                let first = terms
                    .first()
                    .ok_or_else(|| Error::InvalidInput("sum needs at least one term".into()))?;
                let dim = first.dimension;
                for t in terms {
                    check_dim(dim, t.dimension)?;
                }
                dim
            }
        };
        Ok(PotentialSpec { kind, dimension })
    }
}

fn check_center(center: &[f64]) -> Result<()> {
    if center.is_empty() {
        return Err(Error::InvalidInput("center must have at least one coordinate".into()));
    }
    if center.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("center must be finite".into()));
    }
    Ok(())
}

impl PotentialSpec {
    pub fn quadratic(center: Vec<f64>, weight: f64) -> Result<Self> {
        PotentialKind::Quadratic { center, weight }.try_into()
    }

    pub fn quartic(center: Vec<f64>) -> Result<Self> {
        PotentialKind::QuarticWell { center }.try_into()
    }

    pub fn flat_bottom(left: f64, right: f64) -> Result<Self> {
        PotentialKind::FlatBottom { left, right }.try_into()
    }

    pub fn sum(terms: Vec<PotentialSpec>) -> Result<Self> {
        PotentialKind::Sum { terms }.try_into()
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// `F(x)`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dimension, x.len())?;
        Ok((0..self.dimension).map(|k| self.coord_value(k, x[k])).sum())
    }

    /// `f(x) = -grad F(x)`.
    pub fn self_dynamics(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dimension, x.len())?;
        Ok((0..self.dimension).map(|k| self.coord_dynamics(k, x[k])).collect())
    }

    /// Writes `f(x)` into `out` without allocating. Lengths are not checked.
    pub(crate) fn self_dynamics_into(&self, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.coord_dynamics(k, x[k]);
        }
    }

    fn coord_value(&self, k: usize, y: f64) -> f64 {
        match &self.kind {
            PotentialKind::Quadratic { center, weight } => {
                let d = y - center[k];
                0.5 * weight * d * d
            }
            PotentialKind::QuarticWell { center } => {
                let d = y - center[k];
                let d2 = d * d;
                0.25 * d2 * d2
            }
            PotentialKind::FlatBottom { left, right } => {
                if y < *left {
                    0.5 * (left - y) * (left - y)
                } else if y > *right {
                    0.5 * (y - right) * (y - right)
                } else {
                    0.0
                }
            }
            PotentialKind::Sum { terms } => terms.iter().map(|t| t.coord_value(k, y)).sum(),
        }
    }

    fn coord_dynamics(&self, k: usize, y: f64) -> f64 {
        match &self.kind {
            PotentialKind::Quadratic { center, weight } => -weight * (y - center[k]),
            PotentialKind::QuarticWell { center } => {
                let d = y - center[k];
                -(d * d * d)
            }
            PotentialKind::FlatBottom { left, right } => {
                if y < *left {
                    left - y
                } else if y > *right {
                    right - y
                } else {
                    0.0
                }
            }
            PotentialKind::Sum { terms } => terms.iter().map(|t| t.coord_dynamics(k, y)).sum(),
        }
    }

    /// Per-coordinate argmin intervals `[lo_k, hi_k]`.
    fn coord_argmin(&self, k: usize) -> (f64, f64) {
        match &self.kind {
            PotentialKind::Quadratic { center, .. } | PotentialKind::QuarticWell { center } => {
                (center[k], center[k])
            }
            PotentialKind::FlatBottom { left, right } => (*left, *right),
            PotentialKind::Sum { terms } => {
                let parts: Vec<(f64, f64)> = terms.iter().map(|t| t.coord_argmin(k)).collect();
                let lo = parts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
                let hi = parts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
                if lo <= hi {
                    return (lo, hi);
                }
                // Term minimizers are disjoint: the sum has a unique minimizer
                // inside the hull of the term argmins, where its derivative
                // (nondecreasing in y) changes sign.
                let mut a = parts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
                let mut b = parts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
                let slope = |y: f64| -self.coord_dynamics(k, y);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    if slope(mid) < 0.0 {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                let z = 0.5 * (a + b);
                (z, z)
            }
        }
    }

    /// The exact argmin set `{z : f(z) = 0}`.
    ///
    /// Separability makes every catalog argmin a product of intervals, so the
    /// result is always a point, an interval or a box.
    pub fn zero_set(&self) -> Result<ConvexBody> {
        let (lo, hi): (Vec<f64>, Vec<f64>) =
            (0..self.dimension).map(|k| self.coord_argmin(k)).unzip();
        if lo.iter().zip(&hi).all(|(l, h)| l == h) {
            return Ok(ConvexBody::Point(lo));
        }
        if self.dimension == 1 {
            return Ok(ConvexBody::Interval { lo: lo[0], hi: hi[0] });
        }
        Ok(ConvexBody::Box { lo, hi })
    }

    /// Every catalog kind is coercive: each coordinate grows at least
    /// quadratically or quartically away from a bounded argmin.
    pub fn is_coercive(&self) -> bool {
        true
    }
}

/// Evaluates `F_i(x)`.
pub fn eval_potential(spec: &PotentialSpec, x: &[f64]) -> Result<f64> {
    spec.value(x)
}

/// Evaluates `f_i(x) = -grad F_i(x)`.
pub fn eval_self_dynamics(spec: &PotentialSpec, x: &[f64]) -> Result<Vec<f64>> {
    spec.self_dynamics(x)
}

/// Argmin set of `F_i` as a convex body.
pub fn zero_set(spec: &PotentialSpec) -> Result<ConvexBody> {
    spec.zero_set()
}

/// Compares central finite differences of `value` with `-dynamics` at each
/// sample. The worst absolute deviation is reported.
pub fn gradient_consistency_check_with<V, D>(
    dimension: usize,
    value: V,
    dynamics: D,
    samples: &[Vec<f64>],
    h: f64,
    tol: f64,
) -> Result<CheckReport>
where
    V: Fn(&[f64]) -> Result<f64>,
    D: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if !(h > 0.0 && tol > 0.0) {
        return Err(Error::InvalidInput("h and tol must be positive".into()));
    }
    let mut worst = 0.0_f64;
    let mut worst_at: Option<Vec<f64>> = None;
    for x in samples {
        check_dim(dimension, x.len())?;
        let f = dynamics(x)?;
        let mut probe = x.clone();
        for k in 0..dimension {
            probe[k] = x[k] + h;
            let up = value(&probe)?;
            probe[k] = x[k] - h;
            let down = value(&probe)?;
            probe[k] = x[k];
            let fd = (up - down) / (2.0 * h);
            let dev = (fd + f[k]).abs();
            if dev > worst || dev.is_nan() {
                worst = dev;
                worst_at = Some(x.clone());
            }
        }
    }
    let pass = worst <= tol;
    let mut report = CheckReport::new("gradient_consistency", pass, worst).with_params(
        serde_json::json!({ "h": h, "tol": tol, "samples": samples.len() }),
    );
    if let Some(at) = worst_at {
        report = report.with_location(format!("x = {at:?}"));
    }
    Ok(report)
}

/// Finite-difference check of `eval_self_dynamics` against `eval_potential`.
pub fn gradient_consistency_check(
    spec: &PotentialSpec,
    samples: &[Vec<f64>],
    h: f64,
    tol: f64,
) -> Result<CheckReport> {
    gradient_consistency_check_with(
        spec.dimension(),
        |x| spec.value(x),
        |x| spec.self_dynamics(x),
        samples,
        h,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| vec![lo + (hi - lo) * i as f64 / (n - 1) as f64])
            .collect()
    }

    #[test]
    fn values() {
        let q = PotentialSpec::quadratic(vec![2.0], 1.0).unwrap();
        assert_eq!(q.value(&[5.0]).unwrap(), 4.5);
        let w = PotentialSpec::quartic(vec![0.0]).unwrap();
        assert_eq!(w.value(&[0.0]).unwrap(), 0.0);
        let fb = PotentialSpec::flat_bottom(0.0, 1.0).unwrap();
        assert_eq!(fb.value(&[0.5]).unwrap(), 0.0);
        assert_eq!(fb.value(&[3.0]).unwrap(), 2.0);
        assert_eq!(fb.value(&[-1.0]).unwrap(), 0.5);
    }

    #[test]
    fn self_dynamics_examples() {
        let w = PotentialSpec::quartic(vec![1.5]).unwrap();
        assert_eq!(w.self_dynamics(&[2.5]).unwrap(), vec![-1.0]);
        assert_eq!(w.self_dynamics(&[0.5]).unwrap(), vec![1.0]);
        let q = PotentialSpec::quadratic(vec![2.0], 1.0).unwrap();
        assert_eq!(q.self_dynamics(&[5.0]).unwrap(), vec![-3.0]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let q = PotentialSpec::quadratic(vec![0.0, 1.0], 1.0).unwrap();
        assert!(matches!(
            q.value(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, actual: 1 })
        ));
        assert!(q.self_dynamics(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn construction_invariants() {
        assert!(PotentialSpec::flat_bottom(1.0, 0.0).is_err());
        assert!(PotentialSpec::quadratic(vec![0.0], 0.0).is_err());
        assert!(PotentialSpec::quadratic(vec![], 1.0).is_err());
        assert!(PotentialSpec::sum(vec![]).is_err());
        let a = PotentialSpec::quadratic(vec![0.0], 1.0).unwrap();
        let b = PotentialSpec::quadratic(vec![0.0, 0.0], 1.0).unwrap();
        assert!(PotentialSpec::sum(vec![a, b]).is_err());
    }

    #[test]
    fn zero_sets() {
        let q = PotentialSpec::quadratic(vec![2.0], 1.0).unwrap();
        assert_eq!(q.zero_set().unwrap(), ConvexBody::Point(vec![2.0]));
        let fb = PotentialSpec::flat_bottom(0.0, 1.0).unwrap();
        assert_eq!(fb.zero_set().unwrap(), ConvexBody::Interval { lo: 0.0, hi: 1.0 });
        let degenerate = PotentialSpec::flat_bottom(0.3, 0.3).unwrap();
        assert_eq!(degenerate.zero_set().unwrap(), ConvexBody::Point(vec![0.3]));
    }

    #[test]
    fn distinct_singletons_do_not_intersect() {
        let a = PotentialSpec::quadratic(vec![1.0], 1.0).unwrap().zero_set().unwrap();
        let b = PotentialSpec::quadratic(vec![2.0], 1.0).unwrap().zero_set().unwrap();
        assert!(crate::convex_geometry::intersect(&[a, b]).unwrap().is_none());
    }

    #[test]
    fn sum_zero_set_with_common_minimizer() {
        let s = PotentialSpec::sum(vec![
            PotentialSpec::flat_bottom(0.0, 1.0).unwrap(),
            PotentialSpec::flat_bottom(0.5, 2.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(s.zero_set().unwrap(), ConvexBody::Interval { lo: 0.5, hi: 1.0 });
        let s = PotentialSpec::sum(vec![
            PotentialSpec::flat_bottom(0.0, 1.0).unwrap(),
            PotentialSpec::quadratic(vec![0.25], 3.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(s.zero_set().unwrap(), ConvexBody::Point(vec![0.25]));
    }

    #[test]
    fn sum_zero_set_by_bisection() {
        // (x-0)^2/2 + (x-1)^2/2 is minimized at 0.5; the second coordinate
        // has w=1 at 0 and w=3 at 4, minimized at 3.
        let s = PotentialSpec::sum(vec![
            PotentialSpec::quadratic(vec![0.0, 0.0], 1.0).unwrap(),
            PotentialSpec::quadratic(vec![1.0, 0.0], 1.0).unwrap(),
            PotentialSpec::quadratic(vec![0.0, 4.0], 2.0).unwrap(),
        ])
        .unwrap();
        let ConvexBody::Point(z) = s.zero_set().unwrap() else {
            panic!("expected a point");
        };
        // Weighted mean per coordinate: (0 + 1 + 0)/4 and (0 + 0 + 8)/4.
        assert!((z[0] - 0.25).abs() < 1e-12);
        assert!((z[1] - 2.0).abs() < 1e-12);
        assert!(s.self_dynamics(&z).unwrap().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn dynamics_vanish_on_zero_set() {
        let specs = [
            PotentialSpec::quadratic(vec![1.0, -2.0], 2.0).unwrap(),
            PotentialSpec::quartic(vec![0.5]).unwrap(),
            PotentialSpec::flat_bottom(-1.0, 3.0).unwrap(),
        ];
        for s in &specs {
            let body = s.zero_set().unwrap();
            let mut pts = body.extreme_points();
            pts.push(body.centroid());
            for p in pts {
                assert!(s.self_dynamics(&p).unwrap().iter().all(|v| *v == 0.0));
            }
        }
    }

    #[test]
    fn gradient_check_quadratic() {
        let q = PotentialSpec::quadratic(vec![0.0], 1.0).unwrap();
        let r = gradient_consistency_check(&q, &grid(-1.0, 1.0, 3), 1e-5, 1e-6).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn gradient_check_quartic() {
        let w = PotentialSpec::quartic(vec![0.0]).unwrap();
        let r = gradient_consistency_check(&w, &grid(-2.0, 2.0, 41), 1e-5, 1e-5).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn gradient_check_detects_corruption() {
        let q = PotentialSpec::quadratic(vec![0.0], 1.0).unwrap();
        let r = gradient_consistency_check_with(
            1,
            |x| q.value(x),
            |x| Ok(q.self_dynamics(x)?.into_iter().map(|v| v + 0.1).collect()),
            &grid(-1.0, 1.0, 5),
            1e-5,
            1e-6,
        )
        .unwrap();
        assert!(!r.pass);
        assert!((r.worst_value - 0.1).abs() < 1e-6);
    }

    #[test]
    fn serde_schema() {
        let s: PotentialSpec =
            serde_json::from_str(r#"{"kind":"quadratic","center":[2.0]}"#).unwrap();
        assert_eq!(s, PotentialSpec::quadratic(vec![2.0], 1.0).unwrap());
        let s: PotentialSpec =
            serde_json::from_str(r#"{"kind":"flat_bottom","left":0,"right":1}"#).unwrap();
        assert_eq!(s.dimension(), 1);
        let s: PotentialSpec = serde_json::from_str(
            r#"{"kind":"sum","terms":[{"kind":"quartic","center":[1]},{"kind":"quadratic","center":[0],"weight":2}]}"#,
        )
        .unwrap();
        let back = serde_json::to_value(&s).unwrap();
        assert_eq!(back["kind"], "sum");
        assert_eq!(back["terms"][0]["kind"], "quartic");
        assert!(serde_json::from_str::<PotentialSpec>(
            r#"{"kind":"flat_bottom","left":2,"right":1}"#
        )
        .is_err());
    }
}

//! Unbounded metric spaces with a base point, given by exact oracles.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{LogValue, Sign};
use crate::porosity::{perturbed_point, RayRule, RaySet, DEFAULT_BUDGET};
use crate::sequence::{PointSequence, ScalingSequence};

/// Largest annulus listed exhaustively by default.
pub const ANNULUS_LIMIT: usize = DEFAULT_BUDGET / 16;

/// A point of a model: a real (possibly astronomically large) or a vector in `R^d`, `d <= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Point {
    Real(LogValue),
    Vector([f64; 3]),
}

impl Point {
    pub fn real(x: f64) -> Self {
        Point::Real(LogValue::from_f64(x))
    }

    fn as_real(&self) -> LogValue {
        match self {
            Point::Real(v) => *v,
            Point::Vector(v) => LogValue::from_f64(v[0]),
        }
    }

    fn as_vector(&self) -> [f64; 3] {
        match self {
            Point::Vector(v) => *v,
            Point::Real(x) => [x.to_f64(), 0.0, 0.0],
        }
    }
}

/// Points with `d(x, p)` in a window, sorted by that distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Annulus {
    pub points: Vec<Point>,
    pub norms: Vec<LogValue>,
    /// The window holds more points than returned (or a continuum).
    pub overflow: bool,
}

impl Annulus {
    fn from_unsorted(mut pairs: Vec<(LogValue, Point)>, overflow: bool) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| order_points(&a.1, &b.1)));
        pairs.dedup_by(|a, b| a.1 == b.1);
        let (norms, points) = pairs.into_iter().unzip();
        Annulus { points, norms, overflow }
    }
}

fn order_points(a: &Point, b: &Point) -> std::cmp::Ordering {
    match (a, b) {
        (Point::Real(x), Point::Real(y)) => x.total_cmp(y),
        _ => {
            let (x, y) = (a.as_vector(), b.as_vector());
            x.iter().zip(&y).map(|(p, q)| p.total_cmp(q)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        }
    }
}

/// An unbounded metric space `(X, d)` with base point `p`.
pub trait MetricModel: Send + Sync + Debug {
    fn name(&self) -> String;

    /// Dimension of the coefficient vectors accepted by [`MetricModel::nearest`].
    fn dim(&self) -> usize;

    fn base_point(&self) -> Point;

    fn distance(&self, x: &Point, y: &Point) -> LogValue;

    /// `d(x, p)`.
    fn norm(&self, x: &Point) -> LogValue {
        self.distance(x, &self.base_point())
    }

    /// The point of `X` nearest to `coeff * scale` in the ambient space.
    fn nearest(&self, coeff: &[f64], scale: LogValue) -> Result<Point>;

    /// The `j`-th point along a fixed escaping ray (its reflection when `negate`).
    fn element(&self, j: u128, negate: bool) -> Result<Option<Point>>;

    /// Points with `d(x, p)` in `[lo, hi]`, at most `limit` of them.
    fn annulus(&self, lo: LogValue, hi: LogValue, limit: usize) -> Result<Annulus>;

    /// Up to `count` points spread log-uniformly over the window `[lo, hi]`.
    fn sample(&self, lo: LogValue, hi: LogValue, count: usize) -> Result<Annulus>;

    /// `S_p(X) = {d(x, p) : x in X}`.
    fn distance_set(&self) -> RaySet;

    /// An escaping sequence `x_n` with a scaling `r_n` equal (or
    /// asymptotically equal) to `d(x_n, p)`.
    fn escape(&self) -> (PointSequence, ScalingSequence);
}

/// Targets `lo (hi/lo)^(j/(count-1))`.
fn log_targets(lo: LogValue, hi: LogValue, count: usize) -> Vec<LogValue> {
    let (a, b) = (lo.max(LogValue::ONE).log2mag(), hi.log2mag());
    let count = count.max(2);
    (0..count).map(|j| LogValue::pow2(a + (b - a) * j as f64 / (count - 1) as f64)).collect()
}

/// A closed subset of the real line: `E` or `E ∪ -E` for `E ⊆ [0, inf)`, base point 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LineModel {
    set: RaySet,
    symmetric: bool,
    label: String,
}

impl LineModel {
    pub fn new(set: RaySet, symmetric: bool, label: impl Into<String>) -> Result<Self> {
        if set.is_bounded() {
            return Err(Error::input("the model must be unbounded"));
        }
        Ok(LineModel { set, symmetric, label: label.into() })
    }

    /// `Z` with the metric `|x - y|`.
    pub fn integers() -> Self {
        LineModel { set: RaySet::integers(), symmetric: true, label: "integers".into() }
    }

    pub fn set(&self) -> &RaySet {
        &self.set
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}

impl MetricModel for LineModel {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn dim(&self) -> usize {
        1
    }

    fn base_point(&self) -> Point {
        Point::Real(LogValue::ZERO)
    }

    fn distance(&self, x: &Point, y: &Point) -> LogValue {
        x.as_real().sub(y.as_real()).abs()
    }

    fn nearest(&self, coeff: &[f64], scale: LogValue) -> Result<Point> {
        let c = *coeff.first().ok_or_else(|| Error::input("empty coefficient"))?;
        let t = scale.scale(c);
        let (neg, mag) = (t.sign() == Sign::Neg, t.abs());
        let pick = if neg && !self.symmetric {
            self.set.nearest(LogValue::ZERO)?
        } else {
            self.set.nearest(mag)?
        };
        let v = pick.ok_or_else(|| Error::input("empty set"))?;
        Ok(Point::Real(if neg && self.symmetric { v.neg() } else { v }))
    }

    fn element(&self, j: u128, negate: bool) -> Result<Option<Point>> {
        let v = self.set.element(j)?;
        Ok(v.map(|v| Point::Real(if negate && self.symmetric { v.neg() } else { v })))
    }

    fn annulus(&self, lo: LogValue, hi: LogValue, limit: usize) -> Result<Annulus> {
        let mut pairs = Vec::new();
        let mut overflow = false;
        let mut cur = self.set.at_or_after(lo)?;
        while let Some(c) = cur {
            if hi.lt(&c.lo) {
                break;
            }
            if pairs.len() >= limit {
                overflow = true;
                break;
            }
            let mut push = |v: LogValue| {
                pairs.push((v, Point::Real(v)));
                if self.symmetric && v.is_positive() {
                    pairs.push((v, Point::Real(v.neg())));
                }
            };
            if c.lo == c.hi {
                push(c.lo);
            } else {
                // a continuum: report the clipped ends and flag it
                overflow = true;
                push(c.lo.max(lo));
                push(c.hi.min(hi));
            }
            if !c.hi.is_finite() {
                break;
            }
            cur = self.set.after(c.hi)?;
        }
        Ok(Annulus::from_unsorted(pairs, overflow))
    }

    fn sample(&self, lo: LogValue, hi: LogValue, count: usize) -> Result<Annulus> {
        let mut pairs = Vec::new();
        for t in log_targets(lo, hi, count) {
            for c in [1.0, -1.0] {
                let x = self.nearest(&[c], t)?;
                let n = self.norm(&x);
                if lo.le(&n) && n.le(&hi) {
                    pairs.push((n, x));
                }
            }
        }
        Ok(Annulus::from_unsorted(pairs, true))
    }

    fn distance_set(&self) -> RaySet {
        self.set.clone()
    }

    fn escape(&self) -> (PointSequence, ScalingSequence) {
        let r = ScalingSequence::SetElement { set: self.set.rule().clone(), slope: 1, offset: 1 };
        (PointSequence::element(1, 1), r)
    }
}

/// `Z^d` with the Euclidean metric, `d <= 3`; in dimension 1 points may be
/// moved by a seeded perturbation of size at most `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeModel {
    dim: usize,
    delta: f64,
    seed: u64,
}

impl LatticeModel {
    pub fn new(dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::input(format!("lattice dimension must be 1, 2 or 3, got {dim}")));
        }
        Ok(LatticeModel { dim, delta: 0.0, seed: 0 })
    }

    /// `{j + delta u_j : j in Z}` with seeded `u_j in [-1, 1]`, `u_0 = 0`.
    pub fn perturbed(delta: f64, seed: u64) -> Result<Self> {
        if !(0.0..0.5).contains(&delta) {
            return Err(Error::input("perturbation delta must lie in [0, 0.5)"));
        }
        Ok(LatticeModel { dim: 1, delta, seed })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn site(&self, z: [i64; 3]) -> Point {
        let mut v = [0.0; 3];
        for i in 0..self.dim {
            v[i] = z[i] as f64;
        }
        if self.delta > 0.0 {
            v[0] = perturbed_point(self.delta, self.seed, z[0]);
        }
        Point::Vector(v)
    }

    fn length(v: &[f64; 3]) -> LogValue {
        LogValue::from_f64((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
    }
}

impl MetricModel for LatticeModel {
    fn name(&self) -> String {
        if self.delta > 0.0 {
            format!("perturbed_lattice(delta={})", self.delta)
        } else {
            format!("lattice(d={})", self.dim)
        }
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn base_point(&self) -> Point {
        Point::Vector([0.0; 3])
    }

    fn distance(&self, x: &Point, y: &Point) -> LogValue {
        let (a, b) = (x.as_vector(), y.as_vector());
        Self::length(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]])
    }

    /// Exact for the unperturbed lattice; with a perturbation the rounded
    /// site is within `delta` of optimal.
    fn nearest(&self, coeff: &[f64], scale: LogValue) -> Result<Point> {
        if coeff.len() != self.dim {
            return Err(Error::input(format!("coefficient must have {} entries", self.dim)));
        }
        let s = scale.to_f64();
        if !s.is_finite() || s > 2f64.powi(62) {
            return Err(Error::resource("lattice coordinates beyond 2^62"));
        }
        let mut z = [0i64; 3];
        for i in 0..self.dim {
            z[i] = (coeff[i] * s).round() as i64;
        }
        Ok(self.site(z))
    }

    fn element(&self, j: u128, negate: bool) -> Result<Option<Point>> {
        let j = i64::try_from(j).map_err(|_| Error::resource("lattice index beyond 2^63"))?;
        Ok(Some(self.site([if negate { -j } else { j }, 0, 0])))
    }

    fn annulus(&self, lo: LogValue, hi: LogValue, limit: usize) -> Result<Annulus> {
        let h = hi.to_f64();
        let side = 2.0 * (h + 1.0) + 1.0;
        if !h.is_finite() || side.powi(self.dim as i32) > (limit.max(1) as f64) * 64.0 || h > 1e7 {
            return Ok(Annulus { points: vec![], norms: vec![], overflow: true });
        }
        let m = h.ceil() as i64 + 1;
        let r = |i: usize| if i < self.dim { -m..=m } else { 0..=0 };
        let mut pairs = Vec::new();
        for a in r(0) {
            for b in r(1) {
                for c in r(2) {
                    let x = self.site([a, b, c]);
                    let n = self.norm(&x);
                    if lo.le(&n) && n.le(&hi) {
                        pairs.push((n, x));
                    }
                }
            }
        }
        let mut ann = Annulus::from_unsorted(pairs, false);
        if ann.points.len() > limit {
            ann.points.truncate(limit);
            ann.norms.truncate(limit);
            ann.overflow = true;
        }
        Ok(ann)
    }

    fn sample(&self, lo: LogValue, hi: LogValue, count: usize) -> Result<Annulus> {
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        for i in 0..self.dim {
            let mut e = vec![0.0; self.dim];
            e[i] = 1.0;
            dirs.push(e.clone());
            e[i] = -1.0;
            dirs.push(e);
        }
        if self.dim >= 2 {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            dirs.push([vec![s, s], vec![0.0; self.dim - 2]].concat());
            dirs.push([vec![-s, s], vec![0.0; self.dim - 2]].concat());
        }
        let mut pairs = Vec::new();
        for t in log_targets(lo, hi, count) {
            for d in &dirs {
                let x = self.nearest(d, t)?;
                let n = self.norm(&x);
                if lo.le(&n) && n.le(&hi) {
                    pairs.push((n, x));
                }
            }
        }
        Ok(Annulus::from_unsorted(pairs, true))
    }

    fn escape(&self) -> (PointSequence, ScalingSequence) {
        (PointSequence::element(1, 0), ScalingSequence::linear())
    }

    fn distance_set(&self) -> RaySet {
        let rule = match (self.dim, self.delta > 0.0) {
            (1, true) => RayRule::PerturbedIntegers { delta: self.delta, seed: self.seed },
            (1, false) => RayRule::Integers,
            (d, _) => RayRule::LatticeNorms { dim: d as u32 },
        };
        RaySet::new(rule).expect("lattice distance sets are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_line_distances() {
        let z = LineModel::integers();
        let d = z.distance(&Point::real(-3.0), &Point::real(4.0));
        assert_eq!(d.to_f64(), 7.0);
        assert!(z.distance(&Point::real(5.0), &Point::real(5.0)).is_zero());
        let x = z.nearest(&[-2.4], LogValue::from_f64(3.0)).unwrap();
        assert_eq!(x, Point::real(-7.0));
    }

    #[test]
    fn annulus_is_sorted_and_symmetric() {
        let z = LineModel::integers();
        let a = z.annulus(LogValue::from_f64(2.0), LogValue::from_f64(4.0), 100).unwrap();
        assert_eq!(a.points.len(), 6);
        assert!(!a.overflow);
        assert!(a.norms.windows(2).all(|w| w[0].le(&w[1])));
        let a = z.annulus(LogValue::from_f64(1.0), LogValue::from_f64(1e6), 10).unwrap();
        assert!(a.overflow);
    }

    #[test]
    fn lattice_distance_and_nearest() {
        let l = LatticeModel::new(2).unwrap();
        let x = l.nearest(&[0.6, -0.6], LogValue::from_f64(10.0)).unwrap();
        assert_eq!(x, Point::Vector([6.0, -6.0, 0.0]));
        assert!((l.norm(&Point::Vector([3.0, 4.0, 0.0])).to_f64() - 5.0).abs() < 1e-12);
        let a = l.annulus(LogValue::from_f64(4.9), LogValue::from_f64(5.1), 100).unwrap();
        // norms 5 and sqrt(26)
        assert_eq!(a.points.len(), 20);
    }

    #[test]
    fn perturbed_lattice_matches_distance_set() {
        let l = LatticeModel::perturbed(0.3, 5).unwrap();
        let s = l.distance_set();
        for j in 1..200u128 {
            let x = l.element(j, j % 3 == 0).unwrap().unwrap();
            let n = l.norm(&x);
            assert!(s.contains_approx(n, 1e-12).unwrap(), "j={j}");
            assert!((n.to_f64() - j as f64).abs() <= 0.3);
        }
    }

    #[test]
    fn superexponential_line_points() {
        let m = LineModel::new(RaySet::superexp(1.0).unwrap(), false, "superexp").unwrap();
        let x = m.element(40, false).unwrap().unwrap();
        assert_eq!(m.norm(&x).log2mag(), 39.0 * 39.0);
        let y = m.nearest(&[3.0], LogValue::pow2(1521.0)).unwrap();
        assert_eq!(y, x);
    }
}

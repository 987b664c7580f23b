//! Subsets of the half-line `[0, inf)` described by rules, with a gap oracle.
//!
//! A set is a sorted, disjoint union of closed components (isolated points
//! are degenerate components). Every query is answered from the rule without
//! materializing the set, so horizons far beyond `f64` range stay cheap for
//! the closed-form kinds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::ntheory::{is_sum_of_three_squares, is_sum_of_two_squares};
use crate::numeric::{log2_factorial, LogValue};

/// Largest horizon (as `log2`) served by the lattice-norm gap oracle.
pub const LATTICE_NORM_LOG2_CAP: f64 = 26.0;

/// Largest horizon (as `log2`) for perturbed integers, whose gaps are enumerated.
pub const PERTURBED_LOG2_CAP: f64 = 20.0;

/// Enumeration budget for components or gaps listed explicitly.
pub const DEFAULT_BUDGET: usize = 4_000_000;

/// Closed component `[lo, hi]` of the set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub lo: LogValue,
    pub hi: LogValue,
}

impl Component {
    fn point(v: LogValue) -> Self {
        Component { lo: v, hi: v }
    }

    fn scaled(self, t: LogValue) -> Self {
        Component { lo: self.lo.mul(t), hi: self.hi.mul(t) }
    }
}

/// Open complement interval `(a, b)`; `complete` is false when cut at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub a: LogValue,
    pub b: LogValue,
    pub complete: bool,
}

impl Gap {
    pub fn length(&self) -> LogValue {
        self.b.sub(self.a)
    }

    /// `(b - a) / b`.
    pub fn ratio(&self) -> f64 {
        if self.b.is_zero() {
            return 0.0;
        }
        if !self.b.is_finite() {
            return 1.0;
        }
        self.length().ratio(self.b)
    }
}

/// Rule grammar for sets. Every closed-form kind contains `0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RayRule {
    /// `{0} ∪ {q^j : j >= 0}`
    Geometric { q: f64 },
    /// `{0} ∪ {n! : n >= 1}`
    Factorial,
    /// `{0} ∪ {mult * 2^(c (step j)^2) : j >= 0}`
    Superexp {
        c: f64,
        #[serde(default = "one")]
        mult: f64,
        #[serde(default = "one_u64")]
        step: u64,
    },
    /// `{0, 1, 2, ...}`
    Integers,
    /// `[0, inf)`
    Reals,
    /// `{0} ∪ ⋃_k [(2k)!, (2k+1)!]`
    IntervalUnion,
    /// A finite set of nonnegative reals.
    Explicit { values: Vec<f64> },
    /// `{|z| : z ∈ Z^dim}` for `dim` in `{2, 3}`.
    LatticeNorms { dim: u32 },
    /// `{|j + delta u_j| : j ∈ Z}` with seeded `u_j ∈ [-1, 1]`, `u_0 = 0`.
    PerturbedIntegers { delta: f64, seed: u64 },
    /// Union of sets with pairwise disjoint components.
    Union { members: Vec<RayRule> },
    /// `{t x : x ∈ inner}`
    Scaled { factor: f64, inner: Box<RayRule> },
}

fn one() -> f64 {
    1.0
}

fn one_u64() -> u64 {
    1
}

/// How the lengths of consecutive gaps behave; selects the `longest_gap` path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapShape {
    /// Gap lengths are nondecreasing after the first gap.
    Monotone,
    /// `(0, u)` is a gap and no gap is longer than `u` (see [`RaySet::unit_gap`]).
    UnitBounded,
    /// No structure; gaps are enumerated.
    Irregular,
}

/// A subset of `[0, inf)` given by a [`RayRule`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RaySet {
    rule: RayRule,
}

impl RaySet {
    pub fn new(rule: RayRule) -> Result<Self> {
        validate(&rule)?;
        let rule = match rule {
            RayRule::Explicit { mut values } => {
                values.sort_by(f64::total_cmp);
                values.dedup();
                RayRule::Explicit { values }
            }
            r => r,
        };
        Ok(RaySet { rule })
    }

    pub fn geometric(q: f64) -> Result<Self> {
        Self::new(RayRule::Geometric { q })
    }

    pub fn factorial() -> Self {
        RaySet { rule: RayRule::Factorial }
    }

    pub fn superexp(c: f64) -> Result<Self> {
        Self::new(RayRule::Superexp { c, mult: 1.0, step: 1 })
    }

    pub fn integers() -> Self {
        RaySet { rule: RayRule::Integers }
    }

    pub fn reals() -> Self {
        RaySet { rule: RayRule::Reals }
    }

    pub fn interval_union() -> Self {
        RaySet { rule: RayRule::IntervalUnion }
    }

    pub fn empty() -> Self {
        RaySet { rule: RayRule::Explicit { values: vec![] } }
    }

    pub fn rule(&self) -> &RayRule {
        &self.rule
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(RayRule::Scaled { factor, inner: Box::new(self.rule.clone()) })
    }

    pub fn gap_shape(&self) -> GapShape {
        shape(&self.rule)
    }

    /// Longest gap length of a [`GapShape::UnitBounded`] set.
    pub fn unit_gap(&self) -> LogValue {
        fn unit(rule: &RayRule) -> LogValue {
            match rule {
                RayRule::Scaled { factor, inner } => unit(inner).scale(*factor),
                _ => LogValue::ONE,
            }
        }
        unit(&self.rule)
    }

    /// `log2` of the largest horizon the gap oracle serves, if bounded.
    pub fn horizon_cap_log2(&self) -> Option<f64> {
        cap(&self.rule)
    }

    /// Whether the set is bounded (finitely many bounded components).
    pub fn is_bounded(&self) -> bool {
        bounded(&self.rule)
    }

    /// Last component with `lo <= v`.
    pub fn at_or_before(&self, v: LogValue) -> Result<Option<Component>> {
        at_or_before(&self.rule, v)
    }

    /// First component with `lo > v`.
    pub fn after(&self, v: LogValue) -> Result<Option<Component>> {
        after(&self.rule, v)
    }

    /// First component with `hi >= v`.
    pub fn at_or_after(&self, v: LogValue) -> Result<Option<Component>> {
        match self.at_or_before(v)? {
            Some(c) if v.le(&c.hi) => Ok(Some(c)),
            _ => self.after(v),
        }
    }

    /// Last component with `hi < v`.
    pub fn before(&self, v: LogValue) -> Result<Option<Component>> {
        before(&self.rule, v)
    }

    pub fn contains(&self, v: LogValue) -> Result<bool> {
        if v.sign() == crate::numeric::Sign::Neg {
            return Ok(false);
        }
        Ok(matches!(self.at_or_before(v)?, Some(c) if v.le(&c.hi)))
    }

    /// Membership up to a relative error of `2^rel_log2 - 1` (rounding in `log2`).
    pub fn contains_approx(&self, v: LogValue, rel_log2: f64) -> Result<bool> {
        if self.contains(v)? {
            return Ok(true);
        }
        Ok(self.nearest_in_ratio(v)?.is_some_and(|x| x.log2_distance(v) <= rel_log2))
    }

    /// Element of the set nearest to `v` (ties toward the lower one).
    pub fn nearest(&self, v: LogValue) -> Result<Option<LogValue>> {
        let v = v.max(LogValue::ZERO);
        if unit_spaced_at(&self.rule, v) {
            return Ok(Some(v));
        }
        let below = self.at_or_before(v)?;
        if let Some(c) = below {
            if v.le(&c.hi) {
                return Ok(Some(v));
            }
        }
        let above = self.after(v)?;
        Ok(match (below, above) {
            (Some(b), Some(a)) => {
                if a.lo.sub(v).total_cmp(&v.sub(b.hi)) == std::cmp::Ordering::Less {
                    Some(a.lo)
                } else {
                    Some(b.hi)
                }
            }
            (Some(b), None) => Some(b.hi),
            (None, Some(a)) => Some(a.lo),
            (None, None) => None,
        })
    }

    /// Element nearest to `v` in log distance; used when matching scales.
    pub fn nearest_in_ratio(&self, v: LogValue) -> Result<Option<LogValue>> {
        if unit_spaced_at(&self.rule, v) {
            return Ok(Some(v));
        }
        let below = self.at_or_before(v)?;
        if let Some(c) = below {
            if v.le(&c.hi) {
                return Ok(Some(v));
            }
        }
        let above = self.after(v)?;
        let below = below.map(|c| c.hi).filter(|x| x.is_positive());
        Ok(match (below, above.map(|c| c.lo)) {
            (Some(b), Some(a)) => {
                if a.log2_distance(v) < b.log2_distance(v) {
                    Some(a)
                } else {
                    Some(b)
                }
            }
            (b, a) => a.or(b),
        })
    }

    /// First `count` components in increasing order.
    pub fn components_from_start(&self, count: usize) -> Result<Vec<Component>> {
        let mut out = Vec::with_capacity(count.min(1 << 16));
        let mut cur = self.at_or_after(LogValue::ZERO)?;
        while let Some(c) = cur {
            if out.len() >= count {
                break;
            }
            out.push(c);
            if !c.hi.is_finite() {
                break;
            }
            cur = self.after(c.hi)?;
        }
        Ok(out)
    }

    /// Components meeting `[lo, hi]`, in order.
    pub fn components_in(&self, lo: LogValue, hi: LogValue, budget: usize) -> Result<Vec<Component>> {
        let mut out = Vec::new();
        if indexed(&self.rule) {
            // walk the index directly instead of searching for every successor
            let mut k = count_le(&self.rule, lo)?;
            if k > 0 && comp(&self.rule, k - 1)?.is_some_and(|c| lo.le(&c.hi)) {
                k -= 1;
            }
            while let Some(c) = comp(&self.rule, k)? {
                if hi.lt(&c.lo) {
                    break;
                }
                if out.len() >= budget {
                    return Err(Error::resource(format!("more than {budget} components in window")));
                }
                out.push(c);
                if !c.hi.is_finite() {
                    break;
                }
                k += 1;
            }
            return Ok(out);
        }
        let mut cur = self.at_or_after(lo)?;
        while let Some(c) = cur {
            if hi.lt(&c.lo) {
                break;
            }
            if out.len() >= budget {
                return Err(Error::resource(format!("more than {budget} components in window")));
            }
            out.push(c);
            if !c.hi.is_finite() {
                break;
            }
            cur = self.after(c.hi)?;
        }
        Ok(out)
    }

    /// Complement component straddling `v`, or `None` when `v ∈ E`.
    pub fn gap_around(&self, v: LogValue) -> Result<Option<Gap>> {
        let below = self.at_or_before(v)?;
        if let Some(c) = below {
            if v.le(&c.hi) {
                return Ok(None);
            }
        }
        let a = below.map_or(LogValue::ZERO, |c| c.hi);
        let b = self.after(v)?.map_or(LogValue::INFINITY, |c| c.lo);
        Ok(Some(Gap { a, b, complete: b.is_finite() }))
    }

    /// Gap immediately to the left of the component `c`.
    pub fn gap_before(&self, c: &Component) -> Result<Option<Gap>> {
        if c.lo.is_zero() {
            return Ok(None);
        }
        let a = self.before(c.lo)?.map_or(LogValue::ZERO, |p| p.hi);
        Ok(Some(Gap { a, b: c.lo, complete: true }))
    }

    /// Gap immediately to the right of the component `c`.
    pub fn gap_after(&self, c: &Component) -> Result<Option<Gap>> {
        if !c.hi.is_finite() {
            return Ok(None);
        }
        let b = self.after(c.hi)?.map_or(LogValue::INFINITY, |n| n.lo);
        Ok(Some(Gap { a: c.hi, b, complete: b.is_finite() }))
    }

    /// Integer points of the set in increasing order, indexed from 0.
    ///
    /// Point components contribute their value; interval components every
    /// integer they contain. Returns `None` past the end of a bounded set.
    pub fn element(&self, j: u128) -> Result<Option<LogValue>> {
        match &self.rule {
            RayRule::Reals => Ok(Some(LogValue::from_f64(j as f64))),
            RayRule::IntervalUnion => interval_union_element(j),
            RayRule::Scaled { factor, inner } => {
                let inner = RaySet { rule: (**inner).clone() };
                if shape_has_intervals(&inner.rule) {
                    return Err(Error::input("element enumeration of scaled interval sets"));
                }
                Ok(inner.element(j)?.map(|v| v.scale(*factor)))
            }
            r if indexed(r) && !shape_has_intervals(r) => Ok(comp(r, j)?.map(|c| c.lo)),
            _ => {
                if j > DEFAULT_BUDGET as u128 {
                    return Err(Error::resource("element index beyond enumeration budget"));
                }
                let comps = self.components_from_start(j as usize + 1)?;
                if comps.iter().any(|c| c.lo != c.hi) {
                    return Err(Error::input("element enumeration through interval components"));
                }
                Ok(comps.get(j as usize).map(|c| c.lo))
            }
        }
    }

    /// Whether `element` is O(1) per call (random access).
    pub fn elements_random_access(&self) -> bool {
        match &self.rule {
            RayRule::Reals | RayRule::IntervalUnion => true,
            RayRule::Scaled { inner, .. } => {
                let r: &RayRule = inner;
                indexed(r) && !shape_has_intervals(r)
            }
            r => indexed(r) && !shape_has_intervals(r),
        }
    }

    /// Whether `component` is O(1) per call.
    pub fn component_random_access(&self) -> bool {
        indexed(&self.rule)
    }

    /// Component at index `k` for indexed kinds; enumerates otherwise.
    pub fn component(&self, k: u64) -> Result<Option<Component>> {
        if indexed(&self.rule) {
            comp(&self.rule, k as u128)
        } else {
            if k >= DEFAULT_BUDGET as u64 {
                return Err(Error::resource("component index beyond enumeration budget"));
            }
            Ok(self.components_from_start(k as usize + 1)?.get(k as usize).copied())
        }
    }
}

fn validate(rule: &RayRule) -> Result<()> {
    match rule {
        RayRule::Geometric { q } if !(*q > 1.0) => Err(Error::input(format!("geometric ratio q={q} must exceed 1"))),
        RayRule::Superexp { c, mult, step } if !(*c > 0.0) || !(*mult > 0.0) || *step == 0 => {
            Err(Error::input("superexp needs c > 0, mult > 0, step >= 1"))
        }
        RayRule::Explicit { values } if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) => {
            Err(Error::input("explicit values must be finite and nonnegative"))
        }
        RayRule::LatticeNorms { dim } if !(2..=3).contains(dim) => {
            Err(Error::input(format!("lattice norms need dim 2 or 3, got {dim}")))
        }
        RayRule::PerturbedIntegers { delta, .. } if !(*delta >= 0.0 && *delta < 0.5) => {
            Err(Error::input("perturbation delta must lie in [0, 0.5)"))
        }
        RayRule::Union { members } => {
            if members.is_empty() {
                return Err(Error::input("union needs at least one member"));
            }
            members.iter().try_for_each(validate)
        }
        RayRule::Scaled { factor, inner } => {
            if !(*factor > 0.0 && factor.is_finite()) {
                return Err(Error::input("scale factor must be positive"));
            }
            validate(inner)
        }
        _ => Ok(()),
    }
}

fn shape(rule: &RayRule) -> GapShape {
    match rule {
        RayRule::Geometric { .. }
        | RayRule::Factorial
        | RayRule::Superexp { .. }
        | RayRule::Integers
        | RayRule::Reals
        | RayRule::IntervalUnion => GapShape::Monotone,
        RayRule::LatticeNorms { .. } => GapShape::UnitBounded,
        RayRule::Scaled { inner, .. } => shape(inner),
        _ => GapShape::Irregular,
    }
}

fn cap(rule: &RayRule) -> Option<f64> {
    match rule {
        RayRule::LatticeNorms { .. } => Some(LATTICE_NORM_LOG2_CAP),
        RayRule::PerturbedIntegers { .. } => Some(PERTURBED_LOG2_CAP),
        RayRule::Scaled { factor, inner } => cap(inner).map(|c| c + factor.log2()),
        RayRule::Union { members } => members.iter().filter_map(cap).reduce(f64::min),
        _ => None,
    }
}

fn bounded(rule: &RayRule) -> bool {
    match rule {
        RayRule::Explicit { .. } => true,
        RayRule::Union { members } => members.iter().all(bounded),
        RayRule::Scaled { inner, .. } => bounded(inner),
        _ => false,
    }
}

fn shape_has_intervals(rule: &RayRule) -> bool {
    match rule {
        RayRule::Reals | RayRule::IntervalUnion => true,
        RayRule::Union { members } => members.iter().any(shape_has_intervals),
        RayRule::Scaled { inner, .. } => shape_has_intervals(inner),
        _ => false,
    }
}

fn indexed(rule: &RayRule) -> bool {
    match rule {
        RayRule::LatticeNorms { .. } | RayRule::Union { .. } => false,
        RayRule::Scaled { inner, .. } => indexed(inner),
        _ => true,
    }
}

fn perturbation(seed: u64, j: i64) -> f64 {
    if j == 0 {
        return 0.0;
    }
    // slots only collide for |j| > 2^62, far past any reachable index
    let slot = j.unsigned_abs().wrapping_mul(2) + u64::from(j < 0);
    (mix64(mix64(seed) ^ slot) >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

/// SplitMix64 finalizer: a cheap bijective hash, so perturbations are random
/// access by index.
fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Value of perturbed integer `j` (signed position on the line).
pub(crate) fn perturbed_point(delta: f64, seed: u64, j: i64) -> f64 {
    j as f64 + delta * perturbation(seed, j)
}

/// Component `k` of an indexed rule.
fn comp(rule: &RayRule, k: u128) -> Result<Option<Component>> {
    let kf = k as f64;
    let pt = |v: LogValue| Ok(Some(Component::point(v)));
    match rule {
        RayRule::Geometric { q } => match k {
            0 => pt(LogValue::ZERO),
            _ => pt(LogValue::pow2((kf - 1.0) * q.log2())),
        },
        RayRule::Factorial => match k {
            0 => pt(LogValue::ZERO),
            _ => pt(LogValue::pow2(log2_factorial(kf))),
        },
        RayRule::Superexp { c, mult, step } => match k {
            0 => pt(LogValue::ZERO),
            _ => {
                let j = (kf - 1.0) * *step as f64;
                pt(LogValue::pow2(c * j * j + mult.log2()))
            }
        },
        RayRule::Integers => pt(LogValue::from_f64(kf)),
        RayRule::Reals => Ok((k == 0).then_some(Component { lo: LogValue::ZERO, hi: LogValue::INFINITY })),
        RayRule::IntervalUnion => match k {
            0 => pt(LogValue::ZERO),
            _ => {
                let m = 2.0 * (kf - 1.0);
                Ok(Some(Component {
                    lo: LogValue::pow2(log2_factorial(m)),
                    hi: LogValue::pow2(log2_factorial(m + 1.0)),
                }))
            }
        },
        RayRule::Explicit { values } => {
            Ok(usize::try_from(k).ok().and_then(|i| values.get(i)).map(|&v| Component::point(LogValue::from_f64(v))))
        }
        RayRule::PerturbedIntegers { delta, seed } => {
            if k == 0 {
                return pt(LogValue::ZERO);
            }
            if k as f64 > (PERTURBED_LOG2_CAP + 4.0).exp2() {
                return Err(Error::resource(format!("perturbed integers are enumerated up to 2^{PERTURBED_LOG2_CAP}")));
            }
            let block = k.div_ceil(2) as i64;
            let x = perturbed_point(*delta, *seed, block).abs();
            let y = perturbed_point(*delta, *seed, -block).abs();
            let v = if k % 2 == 1 { x.min(y) } else { x.max(y) };
            pt(LogValue::from_f64(v))
        }
        RayRule::Scaled { factor, inner } => Ok(comp(inner, k)?.map(|c| c.scaled(LogValue::from_f64(*factor)))),
        RayRule::LatticeNorms { .. } | RayRule::Union { .. } => {
            Err(Error::input("component index on a non-indexed rule"))
        }
    }
}

const MAX_INDEX: u128 = 1 << 100;

/// Number of components with `lo <= v` for indexed rules.
/// Whether elements near `v` are at most 1 apart while `v` is too large for
/// that spacing to show in a `LogValue`, so `v` is its own nearest element.
fn unit_spaced_at(rule: &RayRule, v: LogValue) -> bool {
    match rule {
        RayRule::Integers => v.log2mag() > 64.0,
        RayRule::Scaled { factor, inner } => unit_spaced_at(inner, v.scale(1.0 / factor)),
        RayRule::Union { members } => members.iter().any(|m| unit_spaced_at(m, v)),
        _ => false,
    }
}

fn count_le(rule: &RayRule, v: LogValue) -> Result<u128> {
    if v.sign() == crate::numeric::Sign::Neg {
        return Ok(0);
    }
    if let RayRule::Explicit { values } = rule {
        let x = v.to_f64();
        return Ok(values.partition_point(|&e| e <= x) as u128);
    }
    let lo_le = |k: u128| -> Result<bool> { Ok(comp(rule, k)?.is_some_and(|c| c.lo.le(&v))) };
    if !lo_le(0)? {
        return Ok(0);
    }
    if let Some(mut k) = index_guess(rule, v) {
        // the guess is off only by rounding; settle it with a few steps
        for _ in 0..64 {
            if lo_le(k)? {
                k += 1;
            } else if k > 1 && !lo_le(k - 1)? {
                k -= 1;
            } else {
                return Ok(k);
            }
        }
    }
    // gallop for an index whose component starts beyond v
    let mut hi: u128 = 1;
    while lo_le(hi)? {
        if hi >= MAX_INDEX {
            return Err(Error::resource("component index beyond 2^100"));
        }
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if lo_le(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + 1)
}

/// Approximate count of components starting at or below `v`, from the
/// closed form of the rule.
fn index_guess(rule: &RayRule, v: LogValue) -> Option<u128> {
    let l = v.log2mag();
    let g = match rule {
        RayRule::Integers => v.to_f64().floor() + 1.0,
        RayRule::PerturbedIntegers { .. } => 2.0 * v.to_f64().round() + 1.0,
        RayRule::Geometric { q } => (l / q.log2()).floor() + 2.0,
        RayRule::Superexp { c, mult, step } => (((l - mult.log2()) / c).max(0.0).sqrt() / *step as f64).floor() + 2.0,
        RayRule::IntervalUnion | RayRule::Factorial => {
            // invert log2(n!) by bisection on n
            let (mut lo, mut hi) = (1.0f64, 2.0f64);
            while log2_factorial(hi) <= l {
                hi *= 2.0;
                if hi > 1e30 {
                    return None;
                }
            }
            while hi - lo > 0.5 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if log2_factorial(mid) <= l {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let n = lo.floor() + 1.0;
            match rule {
                RayRule::Factorial => n,
                _ => (n / 2.0).floor() + 1.0,
            }
        }
        _ => return None,
    };
    (g.is_finite() && g >= 1.0 && g < MAX_INDEX as f64).then_some(g as u128)
}

fn lattice_test(dim: u32, m: u128) -> bool {
    match dim {
        2 => is_sum_of_two_squares(m as u64),
        _ => is_sum_of_three_squares(m),
    }
}

fn lattice_m(v: LogValue) -> Result<f64> {
    if v.log2mag() > LATTICE_NORM_LOG2_CAP {
        return Err(Error::resource(format!(
            "lattice norm oracle serves horizons up to 2^{LATTICE_NORM_LOG2_CAP}"
        )));
    }
    let x = v.to_f64();
    Ok(x * x)
}

fn norm_component(m: u128) -> Component {
    Component::point(LogValue::pow2((m as f64).log2() / 2.0))
}

fn at_or_before(rule: &RayRule, v: LogValue) -> Result<Option<Component>> {
    match rule {
        RayRule::LatticeNorms { dim } => {
            if v.sign() == crate::numeric::Sign::Neg {
                return Ok(None);
            }
            let mut m = lattice_m(v)?.floor() as u128;
            // the square is rounded; settle m so that sqrt(m) <= v < sqrt(m + 1)
            while m > 0 && v.lt(&norm_component(m).lo) {
                m -= 1;
            }
            while norm_component(m + 1).lo.le(&v) {
                m += 1;
            }
            loop {
                if lattice_test(*dim, m) {
                    return Ok(Some(norm_component(m)));
                }
                m -= 1;
            }
        }
        RayRule::Scaled { factor, inner } if !indexed(inner) => {
            let t = LogValue::from_f64(*factor);
            Ok(at_or_before(inner, v.div(t))?.map(|c| c.scaled(t)))
        }
        RayRule::Union { members } => {
            let mut best: Option<Component> = None;
            for r in members {
                if let Some(c) = at_or_before(r, v)? {
                    if best.is_none_or(|b| b.lo.lt(&c.lo)) {
                        best = Some(c);
                    }
                }
            }
            Ok(best)
        }
        r => {
            let n = count_le(r, v)?;
            if n == 0 {
                Ok(None)
            } else {
                comp(r, n - 1)
            }
        }
    }
}

fn after(rule: &RayRule, v: LogValue) -> Result<Option<Component>> {
    match rule {
        RayRule::LatticeNorms { dim } => {
            if v.sign() == crate::numeric::Sign::Neg {
                return Ok(Some(norm_component(0)));
            }
            let mut m = lattice_m(v)?.floor() as u128;
            while !v.lt(&norm_component(m).lo) {
                m += 1;
            }
            loop {
                if lattice_test(*dim, m) {
                    return Ok(Some(norm_component(m)));
                }
                m += 1;
            }
        }
        RayRule::Scaled { factor, inner } if !indexed(inner) => {
            let t = LogValue::from_f64(*factor);
            Ok(after(inner, v.div(t))?.map(|c| c.scaled(t)))
        }
        RayRule::Union { members } => {
            let mut best: Option<Component> = None;
            for r in members {
                if let Some(c) = after(r, v)? {
                    if best.is_none_or(|b| c.lo.lt(&b.lo)) {
                        best = Some(c);
                    }
                }
            }
            Ok(best)
        }
        r => {
            let n = count_le(r, v)?;
            comp(r, n)
        }
    }
}

fn before(rule: &RayRule, v: LogValue) -> Result<Option<Component>> {
    if !v.is_positive() {
        return Ok(None);
    }
    match rule {
        RayRule::LatticeNorms { dim } => {
            let Some(c) = at_or_before(rule, v)? else { return Ok(None) };
            if c.hi.lt(&v) {
                return Ok(Some(c));
            }
            let mut m = (c.lo.to_f64() * c.lo.to_f64()).round() as u128;
            while m > 0 {
                m -= 1;
                if lattice_test(*dim, m) {
                    return Ok(Some(norm_component(m)));
                }
            }
            Ok(None)
        }
        RayRule::Scaled { factor, inner } if !indexed(inner) => {
            let t = LogValue::from_f64(*factor);
            Ok(before(inner, v.div(t))?.map(|c| c.scaled(t)))
        }
        RayRule::Union { members } => {
            let mut best: Option<Component> = None;
            for r in members {
                if let Some(c) = before(r, v)? {
                    if best.is_none_or(|b| b.hi.lt(&c.hi)) {
                        best = Some(c);
                    }
                }
            }
            Ok(best)
        }
        r => {
            let n = count_le(r, v)?;
            if n == 0 {
                return Ok(None);
            }
            match comp(r, n - 1)? {
                Some(c) if c.hi.lt(&v) => Ok(Some(c)),
                _ if n >= 2 => comp(r, n - 2),
                _ => Ok(None),
            }
        }
    }
}

/// Integer points of `{0} ∪ ⋃ [(2k)!, (2k+1)!]` by index.
fn interval_union_element(j: u128) -> Result<Option<LogValue>> {
    if j == 0 {
        return Ok(Some(LogValue::ZERO));
    }
    let mut remaining = j - 1;
    let mut k = 0u32;
    loop {
        let lo = factorial_u128(2 * k);
        let hi = factorial_u128(2 * k + 1);
        let (Some(lo), Some(hi)) = (lo, hi) else {
            return Err(Error::resource("interval-union element index too large"));
        };
        // [0!, 1!] = [1, 1] contributes a single point
        let count = hi - lo + 1;
        if remaining < count {
            return Ok(Some(LogValue::from_f64((lo + remaining) as f64)));
        }
        remaining -= count;
        k += 1;
    }
}

fn factorial_u128(n: u32) -> Option<u128> {
    (1..=n as u128).try_fold(1u128, |acc, k| acc.checked_mul(k))
}

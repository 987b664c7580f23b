//! Scaling sequences `r_n` and point sequences `x_n`, given by rules and
//! evaluated at term positions.
//!
//! Position `i` (1-based) is evaluated at index `i * stride`, where the stride
//! comes from the [`ToleranceProfile`]; subsequence rules remap positions
//! before the stride is applied.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MetricModel, Point};
use crate::numeric::{detect_limit, eventually_increasing, log2_factorial, LogValue, Selector, ToleranceProfile};
use crate::porosity::{Component, RayRule, RaySet, DEFAULT_BUDGET};
use crate::Verdict;

/// Closed-form rules `n -> r_n > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalingSequence {
    /// `coeff * n^exponent`
    Power { coeff: f64, exponent: f64 },
    /// `2^(a n^2 + b n + c)`
    Exp2Poly { a: f64, b: f64, c: f64 },
    /// `q^n`
    Geometric { q: f64 },
    /// `n!`
    Factorial,
    /// `s_(slope n + offset)`, the points of a set in increasing order.
    SetElement { set: RayRule, slope: u64, offset: u64 },
    /// `sqrt(s_m s_(m+1))` for consecutive components `m = slope n + offset`.
    SetMidGap { set: RayRule, slope: u64, offset: u64 },
    /// `r_(n_k)`
    Subsequence { inner: Box<ScalingSequence>, selector: Selector },
}

impl ScalingSequence {
    pub fn linear() -> Self {
        ScalingSequence::Power { coeff: 1.0, exponent: 1.0 }
    }

    pub fn name(&self) -> String {
        match self {
            ScalingSequence::Power { coeff, exponent } => format!("{coeff}*n^{exponent}"),
            ScalingSequence::Exp2Poly { a, b, c } => format!("2^({a}n^2+{b}n+{c})"),
            ScalingSequence::Geometric { q } => format!("{q}^n"),
            ScalingSequence::Factorial => "n!".into(),
            ScalingSequence::SetElement { slope, offset, .. } => format!("s_({slope}n+{offset})"),
            ScalingSequence::SetMidGap { slope, offset, .. } => format!("midgap_({slope}n+{offset})"),
            ScalingSequence::Subsequence { inner, selector } => format!("{}|{}", inner.name(), selector.name()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScalingSequence::Power { coeff, exponent } if !(*coeff > 0.0 && *exponent > 0.0) => {
                Err(Error::input("power scaling needs coeff > 0 and exponent > 0"))
            }
            ScalingSequence::Geometric { q } if !(*q > 1.0) => Err(Error::input("geometric scaling needs q > 1")),
            ScalingSequence::Exp2Poly { a, b, .. } if *a < 0.0 || (*a == 0.0 && *b <= 0.0) => {
                Err(Error::input("exp2 scaling must grow"))
            }
            ScalingSequence::SetElement { set, slope, .. } | ScalingSequence::SetMidGap { set, slope, .. } => {
                if *slope == 0 {
                    return Err(Error::input("set scaling needs slope >= 1"));
                }
                let s = RaySet::new(set.clone())?;
                if s.is_bounded() {
                    return Err(Error::input("set scaling needs an unbounded set"));
                }
                Ok(())
            }
            ScalingSequence::Subsequence { inner, selector } => {
                selector.validate()?;
                inner.validate()
            }
            _ => Ok(()),
        }
    }

    /// `r` at term position `pos >= 1`.
    pub fn at(&self, pos: u128, stride: u128) -> Result<LogValue> {
        self.at_cached(pos, stride, &mut SetCache::default())
    }

    fn at_cached(&self, pos: u128, stride: u128, cache: &mut SetCache) -> Result<LogValue> {
        let idx = || pos * stride;
        let n = || idx() as f64;
        let v = match self {
            ScalingSequence::Power { coeff, exponent } => LogValue::pow2(coeff.log2() + exponent * n().log2()),
            ScalingSequence::Exp2Poly { a, b, c } => {
                let n = n();
                LogValue::pow2(a * n * n + b * n + c)
            }
            ScalingSequence::Geometric { q } => LogValue::pow2(n() * q.log2()),
            ScalingSequence::Factorial => LogValue::pow2(log2_factorial(n())),
            ScalingSequence::SetElement { set, slope, offset } => {
                let j = *slope as u128 * idx() + *offset as u128;
                let s = cache.set(set)?;
                if s.elements_random_access() {
                    s.element(j)?.ok_or_else(|| Error::input("set scaling ran past the set"))?
                } else {
                    let c = cache.component(j)?;
                    if c.lo != c.hi {
                        return Err(Error::input("element enumeration through interval components"));
                    }
                    c.lo
                }
            }
            ScalingSequence::SetMidGap { set, slope, offset } => {
                let m = *slope as u128 * idx() + *offset as u128;
                cache.set(set)?;
                let c = cache.component(m)?;
                let d = cache.component(m + 1)?;
                c.hi.mul(d.lo).powf(0.5)
            }
            ScalingSequence::Subsequence { inner, selector } => {
                let p = selector.index(pos).ok_or_else(|| Error::input("selector exhausted"))?;
                return inner.at_cached(p, stride, cache);
            }
        };
        Ok(v)
    }

    /// Terms at positions `1..=prefix_length`.
    pub fn terms(&self, profile: &ToleranceProfile) -> Result<Vec<LogValue>> {
        let s = profile.index_stride as u128;
        let mut cache = SetCache::default();
        (1..=profile.prefix_length as u128).map(|i| self.at_cached(i, s, &mut cache)).collect()
    }

    pub fn subsequence(&self, selector: &Selector) -> Result<Self> {
        selector.validate()?;
        Ok(ScalingSequence::Subsequence { inner: Box::new(self.clone()), selector: selector.clone() })
    }

    /// Certifies `r_n -> inf` (last term above the divergence threshold) and
    /// reports eventual monotonicity.
    pub fn certify(&self, profile: &ToleranceProfile) -> Result<ScalingCertificate> {
        let t = self.terms(profile)?;
        if t.iter().any(|v| !v.is_positive()) {
            return Err(Error::input("scaling terms must be positive"));
        }
        let logs: Vec<f64> = t.iter().map(|v| v.log2mag()).collect();
        let divergent = *logs.last().unwrap() > profile.divergence_threshold.log2();
        Ok(ScalingCertificate {
            divergent,
            eventually_increasing: Verdict::from_bool(eventually_increasing(&logs)),
        })
    }
}

/// Components of the set behind a set-driven scaling, enumerated once per
/// prefix for sets without random access.
#[derive(Default)]
struct SetCache {
    set: Option<RaySet>,
    comps: Vec<Component>,
}

impl SetCache {
    fn set(&mut self, rule: &RayRule) -> Result<&RaySet> {
        if self.set.as_ref().map(|s| s.rule()) != Some(rule) {
            self.set = Some(RaySet::new(rule.clone())?);
            self.comps.clear();
        }
        Ok(self.set.as_ref().unwrap())
    }

    fn component(&mut self, k: u128) -> Result<Component> {
        let s = self.set.as_ref().expect("set selected");
        let k64 = u64::try_from(k).map_err(|_| Error::resource("component index overflow"))?;
        if s.component_random_access() {
            return s.component(k64)?.ok_or_else(|| Error::input("set scaling ran past the set"));
        }
        if k >= DEFAULT_BUDGET as u128 {
            return Err(Error::resource("component index beyond enumeration budget"));
        }
        while self.comps.len() as u128 <= k {
            let next = match self.comps.last() {
                None => s.at_or_after(LogValue::ZERO)?,
                Some(c) if !c.hi.is_finite() => None,
                Some(c) => s.after(c.hi)?,
            };
            match next {
                Some(c) => self.comps.push(c),
                None => return Err(Error::input("set scaling ran past the set")),
            }
        }
        Ok(self.comps[k as usize])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalingCertificate {
    pub divergent: bool,
    pub eventually_increasing: Verdict,
}

/// Rules `n -> x_n` in a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointSequence {
    /// The constant sequence at the base point.
    Base,
    /// The point nearest to `coeff * r_n`.
    NearestTo { coeff: Vec<f64>, scale: ScalingSequence },
    /// The model's escaping point number `slope n + offset + root floor(sqrt n)`.
    Element {
        slope: u64,
        offset: u64,
        #[serde(default)]
        negate: bool,
        #[serde(default)]
        root: u64,
    },
    /// `even` at even positions, `odd` at odd ones.
    Alternating { even: Box<PointSequence>, odd: Box<PointSequence> },
    /// `x_(n_k)`
    Subsequence { inner: Box<PointSequence>, selector: Selector },
}

impl PointSequence {
    pub fn element(slope: u64, offset: u64) -> Self {
        PointSequence::Element { slope, offset, negate: false, root: 0 }
    }

    pub fn nearest(coeff: &[f64], scale: &ScalingSequence) -> Self {
        PointSequence::NearestTo { coeff: coeff.to_vec(), scale: scale.clone() }
    }

    pub fn name(&self) -> String {
        match self {
            PointSequence::Base => "p".into(),
            PointSequence::NearestTo { coeff, .. } => {
                let c: Vec<String> = coeff.iter().map(|c| format!("{c}")).collect();
                format!("near({})", c.join(","))
            }
            PointSequence::Element { slope, offset, negate, root } => {
                let r = if *root > 0 { format!("+{root}isqrt(n)") } else { String::new() };
                format!("{}elem({slope}n+{offset}{r})", if *negate { "-" } else { "" })
            }
            PointSequence::Alternating { even, odd } => format!("alt({},{})", even.name(), odd.name()),
            PointSequence::Subsequence { inner, selector } => format!("{}|{}", inner.name(), selector.name()),
        }
    }

    /// `x` at term position `pos >= 1`.
    pub fn at(&self, model: &dyn MetricModel, pos: u128, stride: u128) -> Result<Point> {
        self.at_cached(model, pos, stride, &mut SetCache::default())
    }

    fn at_cached(&self, model: &dyn MetricModel, pos: u128, stride: u128, cache: &mut SetCache) -> Result<Point> {
        match self {
            PointSequence::Base => Ok(model.base_point()),
            PointSequence::NearestTo { coeff, scale } => model.nearest(coeff, scale.at_cached(pos, stride, cache)?),
            PointSequence::Element { slope, offset, negate, root } => {
                let n = pos * stride;
                let j = *slope as u128 * n + *offset as u128 + *root as u128 * n.isqrt();
                model.element(j, *negate)?.ok_or_else(|| Error::input("element sequence ran past the model"))
            }
            PointSequence::Alternating { even, odd } => {
                if (pos * stride) % 2 == 0 {
                    even.at_cached(model, pos, stride, cache)
                } else {
                    odd.at_cached(model, pos, stride, cache)
                }
            }
            PointSequence::Subsequence { inner, selector } => {
                let p = selector.index(pos).ok_or_else(|| Error::input("selector exhausted"))?;
                inner.at_cached(model, p, stride, cache)
            }
        }
    }

    pub fn points(&self, model: &dyn MetricModel, profile: &ToleranceProfile) -> Result<Vec<Point>> {
        let s = profile.index_stride as u128;
        let mut cache = SetCache::default();
        (1..=profile.prefix_length as u128).map(|i| self.at_cached(model, i, s, &mut cache)).collect()
    }

    pub fn subsequence(&self, selector: &Selector) -> Result<Self> {
        selector.validate()?;
        Ok(PointSequence::Subsequence { inner: Box::new(self.clone()), selector: selector.clone() })
    }
}

/// Limit of `d(x_n, y_n) / r_n` over the prefix.
pub(crate) fn ratio_limit(
    model: &dyn MetricModel,
    xs: &[Point],
    ys: &[Point],
    r: &[LogValue],
    profile: &ToleranceProfile,
) -> Result<crate::numeric::LimitVerdict> {
    let terms: Vec<f64> = xs
        .iter()
        .zip(ys)
        .zip(r)
        .map(|((x, y), r)| model.distance(x, y).ratio(*r))
        .collect();
    detect_limit(&terms, profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LineModel;

    #[test]
    fn scaling_terms() {
        let p = ToleranceProfile { prefix_length: 8, ..Default::default() };
        let t = ScalingSequence::linear().terms(&p).unwrap();
        assert_eq!(t[7].to_f64(), 8.0);
        let t = ScalingSequence::Exp2Poly { a: 1.0, b: 1.0, c: 0.0 }.terms(&p).unwrap();
        assert_eq!(t[2].log2mag(), 12.0);
        let f = ScalingSequence::Factorial.terms(&p).unwrap();
        assert!((f[4].to_f64() - 120.0).abs() < 1e-9);
    }

    #[test]
    fn subsequence_positions() {
        let p = ToleranceProfile { prefix_length: 8, ..Default::default() };
        let r = ScalingSequence::linear().subsequence(&Selector::Squares).unwrap();
        let t: Vec<f64> = r.terms(&p).unwrap().iter().map(|v| v.to_f64().round()).collect();
        assert_eq!(t, vec![1.0, 4.0, 9.0, 16.0, 25.0, 36.0, 49.0, 64.0]);
    }

    #[test]
    fn set_scalings() {
        let p = ToleranceProfile { prefix_length: 8, ..Default::default() };
        let set = RayRule::Superexp { c: 1.0, mult: 1.0, step: 1 };
        let r = ScalingSequence::SetElement { set: set.clone(), slope: 1, offset: 1 };
        assert_eq!(r.terms(&p).unwrap()[2].log2mag(), 9.0);
        let m = ScalingSequence::SetMidGap { set, slope: 1, offset: 1 };
        // sqrt(2^(n^2) 2^((n+1)^2)) = 2^(n^2 + n + 1/2)
        assert_eq!(m.terms(&p).unwrap()[2].log2mag(), 12.5);
    }

    #[test]
    fn point_sequences() {
        let z = LineModel::integers();
        let p = ToleranceProfile { prefix_length: 8, ..Default::default() };
        let x = PointSequence::nearest(&[-1.5], &ScalingSequence::linear()).points(&z, &p).unwrap();
        assert_eq!(x[3], Point::real(-6.0));
        let alt = PointSequence::Alternating {
            even: Box::new(PointSequence::Base),
            odd: Box::new(PointSequence::element(1, 0)),
        };
        let y = alt.points(&z, &p).unwrap();
        assert_eq!(y[0], Point::real(1.0));
        assert_eq!(y[1], Point::real(0.0));
    }

    #[test]
    fn invalid_scalings() {
        assert!(ScalingSequence::Geometric { q: 1.0 }.validate().is_err());
        assert!(ScalingSequence::Power { coeff: -1.0, exponent: 1.0 }.validate().is_err());
        let bounded = RayRule::Explicit { values: vec![1.0] };
        assert!(ScalingSequence::SetElement { set: bounded, slope: 1, offset: 0 }.validate().is_err());
    }
}

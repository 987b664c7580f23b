//! Porosity at infinity of subsets of `[0, inf)`.
//!
//! `p(E, inf)` is evaluated two ways: a direct scan of `l(h)/h` over a
//! horizon schedule refined by gap endpoints, and the tail-limsup of
//! `(b - a) / b` over completed gaps. The two must agree.

mod classify;
mod rayset;

pub use classify::{
    asymp_equivalent, battery_verdicts, completely_strongly_porous, default_battery, omega_strongly_porous, tau_strong_porosity,
    AsympMatch, BatteryVerdict, MemberEvidence, TauGenerator, TauMatch, DEFAULT_RATIO_CAP,
};
pub(crate) use rayset::perturbed_point;
pub use rayset::{
    Component, Gap, GapShape, RayRule, RaySet, DEFAULT_BUDGET, LATTICE_NORM_LOG2_CAP, PERTURBED_LOG2_CAP,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{detect_limit, tail_window, LimitVerdict, LogValue, ToleranceProfile};
use crate::Verdict;

/// The maximal open intervals of `[0, h] \ E`, in order.
pub fn gap_components(set: &RaySet, h: LogValue) -> Result<Vec<Gap>> {
    gap_components_budget(set, h, DEFAULT_BUDGET)
}

fn gap_components_budget(set: &RaySet, h: LogValue, budget: usize) -> Result<Vec<Gap>> {
    if !h.is_positive() {
        return Err(Error::input("horizon must be positive"));
    }
    let comps = set.components_in(LogValue::ZERO, h, budget)?;
    let mut gaps = Vec::new();
    let mut cursor = LogValue::ZERO;
    for c in &comps {
        if cursor.lt(&c.lo) {
            gaps.push(Gap { a: cursor, b: c.lo, complete: true });
        }
        cursor = c.hi;
    }
    if cursor.lt(&h) {
        gaps.push(Gap { a: cursor, b: h, complete: false });
    }
    Ok(gaps)
}

/// `l(inf, h, E)`: length of the longest interval in `[0, h] \ E`.
pub fn longest_gap(set: &RaySet, h: LogValue) -> Result<LogValue> {
    if !h.is_positive() {
        return Err(Error::input("horizon must be positive"));
    }
    match set.gap_shape() {
        GapShape::UnitBounded => Ok(h.min(set.unit_gap())),
        GapShape::Monotone => {
            let Some(last) = set.at_or_before(h)? else { return Ok(h) };
            let mut best = LogValue::ZERO;
            if last.hi.lt(&h) {
                best = h.sub(last.hi);
            }
            if let Some(g) = set.gap_before(&last)? {
                best = best.max(g.length());
            }
            // the first gap may exceed its successors
            for c in set.components_from_start(2)? {
                if h.lt(&c.lo) {
                    break;
                }
                if let Some(g) = set.gap_before(&c)? {
                    best = best.max(g.length());
                }
            }
            Ok(best)
        }
        GapShape::Irregular => Ok(gap_components(set, h)?
            .iter()
            .map(Gap::length)
            .fold(LogValue::ZERO, LogValue::max)),
    }
}

/// One row of the `h,l,ratio` series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub h: LogValue,
    pub l: LogValue,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PorosityEstimate {
    pub value_by_scan: f64,
    pub value_by_gap_formula: f64,
    pub schedule_len: usize,
    pub horizon_min_log2: f64,
    pub horizon_max_log2: f64,
    /// `log2` of the first horizon in the tail window.
    pub tail_start_log2: f64,
    pub achieving_gap: Option<Gap>,
    pub gaps_considered: usize,
    #[serde(skip)]
    pub series: Vec<ScanPoint>,
}

/// Horizons `2^(j/8)` for `j = 0 ..= 8 * log2_max`.
pub fn default_schedule(log2_max: f64) -> Vec<LogValue> {
    let steps = (log2_max * 8.0).ceil() as usize;
    (0..=steps).map(|j| LogValue::pow2(j as f64 / 8.0)).collect()
}

/// Sweeps all components once; answers `l(h)` for irregular sets.
struct GapSweep {
    // (b, running max length up to and including this gap)
    prefix: Vec<(LogValue, LogValue)>,
    comps: Vec<Component>,
}

impl GapSweep {
    fn new(set: &RaySet, h_max: LogValue) -> Result<Self> {
        let comps = set.components_in(LogValue::ZERO, h_max, DEFAULT_BUDGET)?;
        let mut prefix = Vec::new();
        let mut cursor = LogValue::ZERO;
        let mut best = LogValue::ZERO;
        for c in &comps {
            if cursor.lt(&c.lo) {
                best = best.max(c.lo.sub(cursor));
                prefix.push((c.lo, best));
            }
            cursor = c.hi;
        }
        Ok(GapSweep { prefix, comps })
    }

    fn longest(&self, h: LogValue) -> LogValue {
        let i = self.prefix.partition_point(|(b, _)| b.le(&h));
        let done = if i == 0 { LogValue::ZERO } else { self.prefix[i - 1].1 };
        let j = self.comps.partition_point(|c| c.lo.le(&h));
        let trailing = if j == 0 { h } else { h.sub(self.comps[j - 1].hi).max(LogValue::ZERO) };
        done.max(trailing)
    }

    fn gaps_from(&self, from: LogValue) -> Vec<Gap> {
        let mut out = Vec::new();
        let mut cursor = LogValue::ZERO;
        for c in &self.comps {
            if cursor.lt(&c.lo) && from.le(&c.lo) {
                out.push(Gap { a: cursor, b: c.lo, complete: true });
            }
            cursor = c.hi;
        }
        out
    }
}

/// `p(E, inf) = limsup l(h)/h`, by refined scan and by the gap formula.
pub fn porosity_at_infinity(
    set: &RaySet,
    schedule: &[LogValue],
    profile: &ToleranceProfile,
) -> Result<PorosityEstimate> {
    if schedule.is_empty() {
        return Err(Error::input("empty horizon schedule"));
    }
    if schedule.windows(2).any(|w| !w[0].lt(&w[1])) || !schedule[0].is_positive() {
        return Err(Error::input("schedule must be positive and strictly increasing"));
    }
    let h_max = *schedule.last().unwrap();
    let required = set.horizon_cap_log2().map_or(40.0, |c| c.min(40.0));
    if h_max.log2mag() < required - 1e-9 {
        return Err(Error::input(format!("last horizon must reach 2^{required}")));
    }
    let tail = &schedule[schedule.len() - tail_window(schedule.len(), profile.tail_fraction)..];
    let tail_start = tail[0];

    let sweep = match set.gap_shape() {
        GapShape::Irregular => Some(GapSweep::new(set, h_max)?),
        _ => None,
    };
    let l_at = |h: LogValue| -> Result<LogValue> {
        match &sweep {
            Some(s) => Ok(s.longest(h)),
            None => longest_gap(set, h),
        }
    };

    // completed gaps whose right endpoint lies in the tail window
    let mut gaps: Vec<Gap> = match &sweep {
        Some(s) => s.gaps_from(tail_start),
        None => {
            let mut v = Vec::new();
            for &h in tail {
                if let Some(g) = set.gap_around(h)? {
                    v.push(g);
                }
                if let Some(c) = set.at_or_before(h)? {
                    if let Some(g) = set.gap_before(&c)? {
                        v.push(g);
                    }
                }
            }
            v
        }
    };
    let unbounded_tail = set.is_bounded() && matches!(set.gap_around(h_max)?, Some(g) if !g.b.is_finite());
    gaps.retain(|g| g.complete && g.b.le(&h_max) && tail_start.le(&g.b) && g.a.lt(&g.b));
    gaps.sort_by(|x, y| x.b.total_cmp(&y.b));
    gaps.dedup_by(|x, y| x.a == y.a && x.b == y.b);

    let mut achieving: Option<Gap> = None;
    let mut formula = 0.0f64;
    for g in &gaps {
        let r = g.ratio();
        if r > formula || achieving.is_none() {
            formula = formula.max(r);
            achieving = Some(*g);
        }
    }
    if unbounded_tail {
        formula = 1.0;
        achieving = set.gap_around(h_max)?;
    }

    // horizons past the last completed gap are undecided unless E is bounded
    let scan_limit = if unbounded_tail { h_max } else { gaps.last().map_or(h_max, |g| g.b) };
    let mut series = Vec::with_capacity(schedule.len() + gaps.len());
    for &h in schedule {
        let l = l_at(h)?;
        series.push(ScanPoint { h, l, ratio: l.ratio(h) });
    }
    for g in &gaps {
        let l = l_at(g.b)?;
        series.push(ScanPoint { h: g.b, l, ratio: l.ratio(g.b) });
    }
    series.sort_by(|x, y| x.h.total_cmp(&y.h));
    series.dedup_by(|x, y| x.h == y.h);
    let scan = series
        .iter()
        .filter(|p| tail_start.le(&p.h) && (p.h.le(&scan_limit) || gaps.is_empty()))
        .map(|p| p.ratio)
        .fold(0.0f64, f64::max);

    Ok(PorosityEstimate {
        value_by_scan: scan.clamp(0.0, 1.0),
        value_by_gap_formula: formula.clamp(0.0, 1.0),
        schedule_len: schedule.len(),
        horizon_min_log2: schedule[0].log2mag(),
        horizon_max_log2: h_max.log2mag(),
        tail_start_log2: tail_start.log2mag(),
        achieving_gap: achieving,
        gaps_considered: gaps.len(),
        series,
    })
}

/// Ratios `(b - a) / b` of the first `count` gaps, in order.
pub fn gap_ratio_sequence(set: &RaySet, count: usize) -> Result<Vec<f64>> {
    let comps = set.components_from_start(count + 1)?;
    let mut out = Vec::with_capacity(count);
    let mut cursor = LogValue::ZERO;
    for c in &comps {
        if cursor.lt(&c.lo) {
            out.push(Gap { a: cursor, b: c.lo, complete: true }.ratio());
        }
        cursor = c.hi;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongPorosityVerdict {
    pub verdict: Verdict,
    /// Limit of the tail-sup sequence of gap ratios, when it settled.
    pub limsup: Option<f64>,
    pub gaps_used: usize,
    pub limit: Option<LimitVerdict>,
    pub note: Option<String>,
}

/// `p(E, inf) = 1`, decided from the tail-limsup of the first gap ratios.
pub fn is_strongly_porous(set: &RaySet, profile: &ToleranceProfile) -> Result<StrongPorosityVerdict> {
    let mk = |verdict, limsup, gaps_used, limit, note: &str| StrongPorosityVerdict {
        verdict,
        limsup,
        gaps_used,
        limit,
        note: Some(note.to_owned()).filter(|s| !s.is_empty()),
    };
    if set.is_bounded() {
        return Ok(mk(Verdict::True, Some(1.0), 0, None, "bounded set: trailing gap is unbounded"));
    }
    let n = profile.prefix_length;
    let comps = set.components_from_start(n + 1)?;
    if comps.last().is_some_and(|c| !c.hi.is_finite()) {
        return Ok(mk(Verdict::False, Some(0.0), 0, None, "set contains a ray"));
    }
    let ratios = gap_ratio_sequence(set, n)?;
    if ratios.len() < 8 {
        return Ok(mk(Verdict::Undetermined, None, ratios.len(), None, "too few gaps"));
    }
    let mut suffix_max = ratios.clone();
    for i in (0..suffix_max.len() - 1).rev() {
        suffix_max[i] = suffix_max[i].max(suffix_max[i + 1]);
    }
    let limit = detect_limit(&suffix_max, profile)?;
    let verdict = match limit.converged() {
        Some(v) if v >= 1.0 - profile.eps_rel => Verdict::True,
        Some(v) if v <= 1.0 - 10.0 * profile.eps_rel => Verdict::False,
        _ => Verdict::Undetermined,
    };
    Ok(mk(verdict, limit.converged(), ratios.len(), Some(limit), ""))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(x: f64) -> LogValue {
        LogValue::from_f64(x)
    }

    /// Gaps of `[0, h] \ E` found by scanning a grid with a membership test.
    fn grid_gaps(set: &RaySet, h: f64, steps: usize) -> Vec<(f64, f64)> {
        let dx = h / steps as f64;
        let mut out = Vec::new();
        let mut open: Option<f64> = None;
        let mut last_member = 0.0;
        for i in 0..=steps {
            let x = i as f64 * dx;
            let inside = set.contains(lv(x)).unwrap();
            match (inside, open) {
                (true, Some(a)) => {
                    out.push((a, x));
                    open = None;
                }
                (false, None) => open = Some(last_member),
                _ => {}
            }
            if inside {
                last_member = x;
            }
        }
        if let Some(a) = open {
            out.push((a, h));
        }
        out
    }

    #[test]
    fn geometric_gaps_match_grid_scan() {
        let e = RaySet::geometric(2.0).unwrap();
        let gaps = gap_components(&e, lv(8.0)).unwrap();
        let got: Vec<(f64, f64, bool)> = gaps.iter().map(|g| (g.a.to_f64(), g.b.to_f64(), g.complete)).collect();
        let oracle = grid_gaps(&e, 8.0, 8000);
        assert_eq!(got.len(), oracle.len());
        for ((a, b, complete), (oa, ob)) in got.iter().zip(&oracle) {
            assert!((a - oa).abs() < 1e-9 && (b - ob).abs() < 1e-9);
            assert!(complete);
        }
        assert_eq!(oracle[1..], [(1.0, 2.0), (2.0, 4.0), (4.0, 8.0)]);
    }

    #[test]
    fn ray_and_empty_sets() {
        assert!(gap_components(&RaySet::reals(), lv(10.0)).unwrap().is_empty());
        let g = gap_components(&RaySet::empty(), lv(10.0)).unwrap();
        assert_eq!(g.len(), 1);
        assert!(!g[0].complete);
        assert!((g[0].b.to_f64() - 10.0).abs() < 1e-12);
        assert!(gap_components(&RaySet::reals(), LogValue::ZERO).is_err());
    }

    #[test]
    fn longest_gap_examples() {
        let e = RaySet::geometric(2.0).unwrap();
        assert!((longest_gap(&e, lv(8.0)).unwrap().to_f64() - 4.0).abs() < 1e-12);
        assert!((longest_gap(&RaySet::empty(), lv(7.0)).unwrap().to_f64() - 7.0).abs() < 1e-12);
        assert!(longest_gap(&RaySet::reals(), lv(123.0)).unwrap().is_zero());
    }

    #[test]
    fn monotone_path_matches_enumeration() {
        for set in [RaySet::geometric(1.5).unwrap(), RaySet::factorial(), RaySet::interval_union(), RaySet::integers()] {
            for h in [0.5, 1.0, 3.7, 20.0, 700.0, 5040.5, 1e5] {
                let fast = longest_gap(&set, lv(h)).unwrap().to_f64();
                let slow = gap_components(&set, lv(h)).unwrap().iter().map(|g| g.length().to_f64()).fold(0.0, f64::max);
                assert!((fast - slow).abs() <= 1e-9 * slow.max(1.0), "{set:?} h={h}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn geometric_porosity() {
        let p = ToleranceProfile::default();
        let e = RaySet::geometric(2.0).unwrap();
        let est = porosity_at_infinity(&e, &default_schedule(40.0), &p).unwrap();
        assert!((est.value_by_gap_formula - 0.5).abs() < 1e-3);
        assert!((est.value_by_scan - 0.5).abs() < 5e-3);
    }

    #[test]
    fn integers_and_reals_have_zero_porosity() {
        let p = ToleranceProfile::default();
        for e in [RaySet::integers(), RaySet::reals()] {
            let est = porosity_at_infinity(&e, &default_schedule(40.0), &p).unwrap();
            assert!(est.value_by_scan < 1e-6 && est.value_by_gap_formula < 1e-6, "{est:?}");
        }
    }

    #[test]
    fn factorial_trend() {
        let p = ToleranceProfile::default();
        let twenty = LogValue::pow2(crate::numeric::log2_factorial(20.0));
        let mut sched = default_schedule(61.0);
        sched.retain(|h| h.lt(&twenty));
        sched.push(twenty);
        let est = porosity_at_infinity(&RaySet::factorial(), &sched, &p).unwrap();
        assert!(est.value_by_gap_formula >= 0.95 - 1e-12, "{}", est.value_by_gap_formula);
    }

    #[test]
    fn schedule_errors() {
        let p = ToleranceProfile::default();
        assert!(porosity_at_infinity(&RaySet::integers(), &[], &p).is_err());
        assert!(porosity_at_infinity(&RaySet::integers(), &default_schedule(10.0), &p).is_err());
    }

    #[test]
    fn strong_porosity_verdicts() {
        let p = ToleranceProfile::default();
        assert_eq!(is_strongly_porous(&RaySet::factorial(), &p).unwrap().verdict, Verdict::True);
        assert_eq!(is_strongly_porous(&RaySet::geometric(2.0).unwrap(), &p).unwrap().verdict, Verdict::False);
        assert_eq!(is_strongly_porous(&RaySet::integers(), &p).unwrap().verdict, Verdict::False);
        assert_eq!(is_strongly_porous(&RaySet::reals(), &p).unwrap().verdict, Verdict::False);
        assert_eq!(
            is_strongly_porous(&RaySet::superexp(1.0).unwrap(), &ToleranceProfile::superexponential()).unwrap().verdict,
            Verdict::True
        );
    }
}

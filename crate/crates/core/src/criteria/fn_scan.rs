//! The functional `F_n` and its windowed suprema at growing radii.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MetricModel, Point};
use crate::numeric::{LogValue, ToleranceProfile};
use crate::pretangent::{build_stability_graph, is_star, maximal_cliques};
use crate::sequence::ScalingSequence;
use crate::Verdict;

use super::coefficient_pool;

/// Largest number of tuples evaluated per window.
pub const TUPLE_BUDGET: usize = 200_000;
/// Annulus size above which a window is sampled instead of enumerated.
pub const WINDOW_POINT_LIMIT: usize = 256;

fn pair_exponent(n: usize) -> f64 {
    (n * (n - 1) / 2) as f64
}

/// `F_n` from the norms `d(x_k, p)` and the pairwise distances, as `log2`.
/// Returns `-inf` when the value is zero.
pub fn f_n_log2(norms: &[LogValue], pairs: &[LogValue]) -> f64 {
    if norms.iter().chain(pairs).any(|v| v.is_zero()) {
        return f64::NEG_INFINITY;
    }
    let lo = norms.iter().map(|v| v.log2mag()).fold(f64::INFINITY, f64::min);
    let hi = norms.iter().map(|v| v.log2mag()).fold(f64::NEG_INFINITY, f64::max);
    let n = norms.len();
    lo + pairs.iter().map(|v| v.log2mag()).sum::<f64>() - (pair_exponent(n) + 1.0) * hi
}

/// `min_k d(x_k,p) prod_{k<l} d(x_k,x_l) / (max_k d(x_k,p))^(n(n-1)/2 + 1)`,
/// zero when every point is the base point.
pub fn eval_f_n(model: &dyn MetricModel, tuple: &[Point]) -> Result<f64> {
    if tuple.len() < 2 {
        return Err(Error::input("F_n needs n >= 2"));
    }
    let p = model.base_point();
    let norms: Vec<LogValue> = tuple.iter().map(|x| model.distance(x, &p)).collect();
    let mut pairs = Vec::new();
    for (k, x) in tuple.iter().enumerate() {
        for y in &tuple[k + 1..] {
            pairs.push(model.distance(x, y));
        }
    }
    Ok(f_n_log2(&norms, &pairs).exp2())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnScanConfig {
    pub n: usize,
    pub radius_log2_min: f64,
    pub radius_log2_max: f64,
    pub windows: usize,
    /// Tuples with `max/min` spread above `lambda` are left to the
    /// truncation bound.
    pub lambda: f64,
    pub theta: f64,
    /// Log-spaced sample size for windows that are too large to enumerate.
    pub samples: usize,
}

impl Default for FnScanConfig {
    fn default() -> Self {
        FnScanConfig {
            n: 2,
            radius_log2_min: 0.0,
            radius_log2_max: 40.0,
            windows: 64,
            lambda: 1024.0,
            theta: 0.01,
            samples: 48,
        }
    }
}

impl FnScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::input("F_n needs n >= 2"));
        }
        if !(self.lambda >= 4.0) {
            return Err(Error::input("window factor must be at least 4"));
        }
        if self.windows == 0 || !(self.radius_log2_max >= self.radius_log2_min) {
            return Err(Error::input("empty radius schedule"));
        }
        if !(self.theta > 0.0) || self.samples < 2 {
            return Err(Error::input("theta must be positive and samples at least 2"));
        }
        Ok(())
    }

    pub fn radii_log2(&self) -> Vec<f64> {
        let w = self.windows;
        if w == 1 {
            return vec![self.radius_log2_max];
        }
        let step = (self.radius_log2_max - self.radius_log2_min) / (w - 1) as f64;
        (0..w).map(|j| self.radius_log2_min + step * j as f64).collect()
    }

    /// `2^(n(n-1)/2) / lambda`, the most a tuple of spread above `lambda` can reach.
    pub fn truncation(&self) -> f64 {
        pair_exponent(self.n).exp2() / self.lambda
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum FnVerdict {
    LimitZero,
    /// Sups at least `c` keep recurring along the tail, so the upper limit is
    /// positive.
    BoundedAway { c: f64 },
    Undetermined { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnScanReport {
    pub n: usize,
    pub lambda: f64,
    pub theta: f64,
    pub radii_log2: Vec<f64>,
    pub sups: Vec<f64>,
    /// Whether each window was sampled rather than enumerated.
    pub sampled: Vec<bool>,
    pub tuples: Vec<usize>,
    pub truncation: f64,
    pub verdict: FnVerdict,
}

/// Evenly thins `m` points so that `C(m, n)` stays within the budget.
fn thin<T: Clone>(pts: Vec<T>, n: usize) -> (Vec<T>, bool) {
    let mut m = pts.len();
    while m > n && binomial(m, n) > TUPLE_BUDGET as f64 {
        m -= 1;
    }
    if m == pts.len() {
        return (pts, false);
    }
    let len = pts.len();
    let out = (0..m).map(|i| pts[i * (len - 1) / (m - 1).max(1)].clone()).collect();
    (out, true)
}

fn binomial(m: usize, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

/// Supremum of `F_n` over `n`-subsets of the points (sorted by norm).
fn window_sup(model: &dyn MetricModel, pts: &[(LogValue, Point)], n: usize) -> (f64, usize) {
    let m = pts.len();
    if m < n {
        return (0.0, 0);
    }
    let dist: Vec<Vec<LogValue>> =
        (0..m).map(|i| (0..m).map(|j| model.distance(&pts[i].1, &pts[j].1)).collect()).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    let mut best = f64::NEG_INFINITY;
    let mut count = 0;
    let mut norms = Vec::with_capacity(n);
    let mut pairs = Vec::with_capacity(n * n);
    loop {
        norms.clear();
        pairs.clear();
        for (a, &i) in idx.iter().enumerate() {
            norms.push(pts[i].0);
            for &j in &idx[a + 1..] {
                pairs.push(dist[i][j]);
            }
        }
        best = best.max(f_n_log2(&norms, &pairs));
        count += 1;
        // next combination
        let mut k = n;
        while k > 0 && idx[k - 1] == m - n + k - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        idx[k - 1] += 1;
        for t in k..n {
            idx[t] = idx[t - 1] + 1;
        }
    }
    (best.exp2(), count)
}

/// Suprema of `F_n` over tuples in the windows `[R_j, 2 lambda R_j]`.
pub fn scan_f_n_sup(model: &dyn MetricModel, config: &FnScanConfig, profile: &ToleranceProfile) -> Result<FnScanReport> {
    config.validate()?;
    let radii = config.radii_log2();
    let windows: Vec<Result<(f64, bool, usize)>> = radii
        .par_iter()
        .map(|&l| {
            let lo = LogValue::pow2(l);
            let hi = LogValue::pow2(l + 1.0 + config.lambda.log2());
            let a = model.annulus(lo, hi, WINDOW_POINT_LIMIT)?;
            let mut pts: Vec<(LogValue, Point)> = a.norms.into_iter().zip(a.points).collect();
            let mut sampled = a.overflow;
            if a.overflow {
                let s = model.sample(lo, hi, config.samples)?;
                pts.extend(s.norms.into_iter().zip(s.points));
                pts.sort_by(|x, y| x.0.total_cmp(&y.0));
            }
            let (pts, thinned) = thin(pts, config.n);
            sampled |= thinned;
            let (sup, count) = window_sup(model, &pts, config.n);
            Ok((sup, sampled, count))
        })
        .collect();
    let windows = windows.into_iter().collect::<Result<Vec<_>>>()?;
    let sups: Vec<f64> = windows.iter().map(|w| w.0).collect();
    let sampled: Vec<bool> = windows.iter().map(|w| w.1).collect();
    let truncation = config.truncation();
    let tail = profile.tail_window(sups.len());
    let last = *sups.last().unwrap();
    // the limit fails as soon as large sups keep recurring up to the end
    let tail_sups = &sups[sups.len() - tail..];
    let recurring = tail_sups[tail_sups.len() * 3 / 4..].iter().any(|&v| v > config.theta);
    let high_min = tail_sups.iter().copied().filter(|&v| v > config.theta).fold(f64::INFINITY, f64::min);
    let verdict = if last + truncation <= config.theta {
        if *sampled.last().unwrap() {
            FnVerdict::Undetermined { reason: "last window was sampled".into() }
        } else {
            FnVerdict::LimitZero
        }
    } else if recurring {
        FnVerdict::BoundedAway { c: high_min }
    } else {
        FnVerdict::Undetermined { reason: format!("last sup {last} with truncation {truncation} exceeds theta") }
    };
    Ok(FnScanReport {
        n: config.n,
        lambda: config.lambda,
        theta: config.theta,
        radii_log2: radii,
        sups,
        sampled,
        tuples: windows.iter().map(|w| w.2).collect(),
        truncation,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinitenessReport {
    pub n: usize,
    /// Every pretangent space has at most `n` points.
    pub bound_holds: Verdict,
    pub scan: FnScanReport,
}

pub fn finiteness_verdict(
    model: &dyn MetricModel,
    config: &FnScanConfig,
    profile: &ToleranceProfile,
) -> Result<FinitenessReport> {
    let scan = scan_f_n_sup(model, config, profile)?;
    let bound_holds = match scan.verdict {
        FnVerdict::LimitZero => Verdict::True,
        FnVerdict::BoundedAway { .. } => Verdict::False,
        FnVerdict::Undetermined { .. } => Verdict::Undetermined,
    };
    Ok(FinitenessReport { n: config.n, bound_holds, scan })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarObservation {
    pub scaling: String,
    pub vertices: usize,
    pub edges: usize,
    pub star: bool,
    pub largest_clique: usize,
    /// Set when the scaling could not be evaluated within resource caps.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarReport {
    pub scan: FnScanReport,
    /// Every stability graph is a star centered at `α₀`.
    pub predicted_star: Verdict,
    pub observations: Vec<StarObservation>,
    /// Observations agree with the prediction.
    pub matches: bool,
    /// A star was predicted and a non-star graph was built.
    pub contradiction: bool,
}

/// Runs the `n = 2` scan and compares with the graphs built over a battery
/// of scaling sequences.
pub fn star_criterion(
    model: &dyn MetricModel,
    scalings: &[ScalingSequence],
    grid: &[Vec<f64>],
    config: &FnScanConfig,
    profile: &ToleranceProfile,
) -> Result<StarReport> {
    let config = FnScanConfig { n: 2, ..config.clone() };
    let scan = scan_f_n_sup(model, &config, profile)?;
    let predicted_star = match scan.verdict {
        FnVerdict::LimitZero => Verdict::True,
        FnVerdict::BoundedAway { .. } => Verdict::False,
        FnVerdict::Undetermined { .. } => Verdict::Undetermined,
    };
    let mut observations = Vec::new();
    for r in scalings {
        let built = build_stability_graph(model, &coefficient_pool(grid, r), r, profile)
            .and_then(|g| Ok((maximal_cliques(&g)?.iter().map(|c| c.len()).max().unwrap_or(0), g)));
        observations.push(match built {
            Ok((largest, g)) => StarObservation {
                scaling: r.name(),
                vertices: g.len(),
                edges: g.edges().len(),
                star: is_star(&g),
                largest_clique: largest,
                skipped: None,
            },
            Err(e) => StarObservation {
                scaling: r.name(),
                vertices: 0,
                edges: 0,
                star: true,
                largest_clique: 0,
                skipped: Some(e.to_string()),
            },
        });
    }
    let all_star = observations.iter().filter(|o| o.skipped.is_none()).all(|o| o.star);
    let matches = match predicted_star {
        Verdict::True => all_star,
        Verdict::False => !all_star,
        Verdict::Undetermined => false,
    };
    Ok(StarReport {
        scan,
        predicted_star,
        contradiction: predicted_star == Verdict::True && !all_star,
        observations,
        matches,
    })
}

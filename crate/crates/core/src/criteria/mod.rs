//! Executable cross-checks between porosity of the distance set and the
//! shape of sampled pretangent spaces.

mod fn_scan;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MetricModel;
use crate::numeric::{detect_limit, eventually_increasing, LogValue, Selector, ToleranceProfile};
use crate::porosity::{
    battery_verdicts, default_battery, default_schedule, is_strongly_porous, porosity_at_infinity, BatteryVerdict,
    PorosityEstimate, RaySet, StrongPorosityVerdict, DEFAULT_RATIO_CAP,
};
use crate::pretangent::{build_stability_graph, maximal_cliques, tangency_probe, TangencyVerdict};
use crate::sequence::{PointSequence, ScalingSequence};
use crate::Verdict;

pub use fn_scan::{
    eval_f_n, f_n_log2, finiteness_verdict, scan_f_n_sup, star_criterion, FinitenessReport, FnScanConfig,
    FnScanReport, FnVerdict, StarObservation, StarReport, TUPLE_BUDGET, WINDOW_POINT_LIMIT,
};

/// `x_n` nearest to `c r_n` for every coefficient vector `c` of the grid.
pub fn coefficient_pool(grid: &[Vec<f64>], r: &ScalingSequence) -> Vec<PointSequence> {
    grid.iter().map(|c| PointSequence::nearest(c, r)).collect()
}

/// Whether `r` is eventually increasing and shadowed by the distance set at
/// ratio tending to 1.
pub fn is_normal_scaling(model: &dyn MetricModel, r: &ScalingSequence, profile: &ToleranceProfile) -> Result<Verdict> {
    r.validate()?;
    let terms = r.terms(profile)?;
    let logs: Vec<f64> = terms.iter().map(|v| v.log2mag()).collect();
    if !eventually_increasing(&logs) {
        return Ok(Verdict::False);
    }
    if !r.certify(profile)?.divergent {
        return Ok(Verdict::Undetermined);
    }
    let s = model.distance_set();
    let mut ratios = Vec::with_capacity(terms.len());
    for t in &terms {
        match s.nearest_in_ratio(*t) {
            Ok(Some(v)) => ratios.push(v.ratio(*t)),
            Ok(None) => return Ok(Verdict::False),
            // the set oracle is capped; a shadowing sequence can still confirm
            Err(Error::Resource(_)) => {
                let w = axis_witness(model, 1.0, &terms)?;
                let q: Vec<f64> = w.iter().zip(&terms).map(|(a, t)| a.ratio(*t)).collect();
                let hit = detect_limit(&q, profile)?.converged().is_some_and(|v| (v - 1.0).abs() <= 10.0 * profile.eps_rel);
                return Ok(if hit { Verdict::True } else { Verdict::Undetermined });
            }
            Err(e) => return Err(e),
        }
    }
    let lim = detect_limit(&ratios, profile)?;
    if let Some(v) = lim.converged() {
        return Ok(Verdict::from_bool((v - 1.0).abs() <= 10.0 * profile.eps_rel));
    }
    // the nearest point in ratio is optimal, so a tail staying away from 1
    // rules out every other shadowing sequence
    let tail = &ratios[ratios.len() - profile.tail_window(ratios.len())..];
    let off = tail.iter().all(|q| (q - 1.0).abs() > 10.0 * profile.eps_rel);
    Ok(if off { Verdict::False } else { Verdict::Undetermined })
}

/// `d(x_n, p)` for `x_n` the point nearest to `y r_n` along the first axis.
fn axis_witness(model: &dyn MetricModel, y: f64, terms: &[LogValue]) -> Result<Vec<LogValue>> {
    let mut c = vec![0.0; model.dim()];
    c[0] = y;
    terms.iter().map(|t| Ok(model.norm(&model.nearest(&c, *t)?))).collect()
}

/// [`liminf_probe`] on the distance set of a model; probes the set oracle
/// cannot reach are retried with the distances realized along the first axis,
/// which bound `dist(y r_n, S)` from above and so can only accept.
pub fn liminf_probe_model(
    model: &dyn MetricModel,
    r: &ScalingSequence,
    probes: &[f64],
    profile: &ToleranceProfile,
) -> Result<Vec<ProbeResult>> {
    let mut out = liminf_probe(&model.distance_set(), r, probes, profile)?;
    let terms = r.terms(profile)?;
    for p in out.iter_mut().filter(|p| !p.accepted && p.tail_distance.is_none()) {
        let w = match axis_witness(model, p.y, &terms) {
            Ok(w) => w,
            Err(Error::Resource(_)) => continue,
            Err(e) => return Err(e),
        };
        let d: Vec<f64> = w.iter().zip(&terms).map(|(a, t)| a.sub(t.scale(p.y)).abs().ratio(*t)).collect();
        if detect_limit(&d, profile)?.is_zero(profile) {
            p.accepted = true;
            p.tail_distance = Some(0.0);
            p.note = Some("accepted through a realized distance".into());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub y: f64,
    pub accepted: bool,
    /// Limit of `dist(y, S / r_n)` when it converged.
    pub tail_distance: Option<f64>,
    pub note: Option<String>,
}

/// Which `y` lie in the lower limit of the rescaled sets `S / r_n`.
pub fn liminf_probe(
    set: &RaySet,
    r: &ScalingSequence,
    probes: &[f64],
    profile: &ToleranceProfile,
) -> Result<Vec<ProbeResult>> {
    if probes.iter().any(|y| !(*y >= 0.0)) {
        return Err(Error::input("probes must be nonnegative"));
    }
    r.validate()?;
    let terms = r.terms(profile)?;
    probes
        .iter()
        .map(|&y| {
            let mut d = Vec::with_capacity(terms.len());
            for t in &terms {
                let target = t.scale(y);
                let near = match set.nearest(target) {
                    Ok(Some(v)) => v,
                    Ok(None) => return Err(Error::input("empty set")),
                    Err(Error::Resource(m)) => {
                        return Ok(ProbeResult { y, accepted: false, tail_distance: None, note: Some(m) })
                    }
                    Err(e) => return Err(e),
                };
                d.push(near.sub(target).abs().ratio(*t));
            }
            let lim = detect_limit(&d, profile)?;
            Ok(ProbeResult {
                y,
                accepted: lim.is_zero(profile),
                tail_distance: lim.converged(),
                note: lim.note,
            })
        })
        .collect()
}

/// Facts predicted from porosity of the distance set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fact {
    /// Some tangent space is a single point (equivalently finite, compact,
    /// or bounded and separable; at sample scale these coincide).
    SmallTangentExists,
    /// The family of pretangent spaces over normal scalings is uniformly
    /// bounded and uniformly discrete.
    NormalFamilyUniform,
    AllPretangentBounded,
    UnboundedPretangentExists,
}

/// The equivalence a prediction rests on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// single-point tangent space iff strongly porous
    SinglePointTangent,
    /// uniform boundedness and discreteness iff completely strongly porous
    UniformNormalFamily,
    /// all pretangent spaces bounded iff omega strongly porous
    BoundedPretangent,
    /// an unbounded pretangent space iff not omega strongly porous
    UnboundedPretangent,
    /// zero porosity makes every iterated pretangent space unbounded
    IteratedUnbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub fact: Fact,
    pub criterion: Criterion,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub fact: Fact,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub criterion: Criterion,
    pub message: String,
}

/// Settings for [`classify_space`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    pub profile: ToleranceProfile,
    /// Profile for the porosity classifiers of the distance set.
    pub porosity_profile: ToleranceProfile,
    pub porosity_log2_max: f64,
    pub seed: u64,
    /// Scaling battery for graphs, normality and probes.
    pub scalings: Vec<ScalingSequence>,
    /// A scaling expected to give a single-point tangent space, if any.
    pub midgap: Option<ScalingSequence>,
    pub grid: Vec<Vec<f64>>,
    pub probes: Vec<f64>,
}

impl ClassifyConfig {
    /// Defaults for a model of the given dimension.
    pub fn new(model: &dyn MetricModel, profile: ToleranceProfile) -> Self {
        let set = model.distance_set();
        ClassifyConfig {
            porosity_profile: profile.clone(),
            profile,
            porosity_log2_max: set.horizon_cap_log2().unwrap_or(40.0).min(40.0),
            seed: 0,
            scalings: default_scalings(&set),
            midgap: None,
            grid: default_grid(model.dim()),
            probes: vec![0.5, 3.0, 7.3, 123.4, 1024.0, 10_000.0 * std::f64::consts::PI],
        }
    }
}

/// Linear, `2^n`, the set's own points at indices `n` and `2n`, and the
/// midpoints (in ratio) of its gaps.
pub fn default_scalings(set: &RaySet) -> Vec<ScalingSequence> {
    let rule = set.rule().clone();
    vec![
        ScalingSequence::linear(),
        ScalingSequence::Geometric { q: 2.0 },
        ScalingSequence::SetElement { set: rule.clone(), slope: 1, offset: 1 },
        ScalingSequence::SetElement { set: rule.clone(), slope: 2, offset: 1 },
        ScalingSequence::SetMidGap { set: rule, slope: 1, offset: 1 },
    ]
}

/// Eight coefficient vectors: `±1/2, ±1, ±2, ±3` along the first axis in
/// dimension 1, unit directions at radii 1 and 2 otherwise.
pub fn default_grid(dim: usize) -> Vec<Vec<f64>> {
    if dim <= 1 {
        return [-3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0].iter().map(|&c| vec![c]).collect();
    }
    let mut out = Vec::new();
    for axis in 0..dim.min(2) {
        for s in [-2.0, -1.0, 1.0, 2.0] {
            let mut c = vec![0.0; dim];
            c[axis] = s;
            out.push(c);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingEvidence {
    pub scaling: String,
    pub normal: Verdict,
    pub vertices: usize,
    pub largest_clique: usize,
    pub diameter: f64,
    pub accepted_probes: Vec<f64>,
    /// Set when the scaling could not be evaluated within resource caps.
    pub skipped: Option<String>,
}

/// Adds `lim r_{n+m} / r_n` for the shifts m = 1, 2, 4, ..., 64 whenever that
/// limit is finite.
fn with_shift_probes(r: &ScalingSequence, probes: &[f64], profile: &ToleranceProfile) -> Result<Vec<f64>> {
    let terms = r.terms(profile)?;
    let mut out = probes.to_vec();
    for m in (0..7).map(|k| 1usize << k) {
        if terms.len() <= 4 * m {
            break;
        }
        let q: Vec<f64> = (0..terms.len() - m).map(|n| terms[n + m].ratio(terms[n])).collect();
        if let Some(y) = detect_limit(&q, profile)?.converged() {
            if y.is_finite() && (y - 1.0).abs() > 0.01 && !out.iter().any(|p| (p - y).abs() <= profile.eps_rel * y) {
                out.push(y);
            }
        }
    }
    Ok(out)
}

fn scaling_evidence(
    model: &dyn MetricModel,
    r: &ScalingSequence,
    config: &ClassifyConfig,
) -> Result<ScalingEvidence> {
    let profile = &config.profile;
    let normal = is_normal_scaling(model, r, profile)?;
    let g = build_stability_graph(model, &coefficient_pool(&config.grid, r), r, profile)?;
    let cliques = maximal_cliques(&g)?;
    let accepted = if normal == Verdict::True {
        let probes = with_shift_probes(r, &config.probes, profile)?;
        liminf_probe_model(model, r, &probes, profile)?.into_iter().filter(|p| p.accepted).map(|p| p.y).collect()
    } else {
        vec![]
    };
    Ok(ScalingEvidence {
        scaling: r.name(),
        normal,
        vertices: g.len(),
        largest_clique: cliques.iter().map(|c| c.len()).max().unwrap_or(0),
        diameter: cliques.iter().map(|c| c.diameter()).fold(0.0, f64::max),
        accepted_probes: accepted,
        skipped: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub model: String,
    pub porosity: PorosityEstimate,
    pub strongly_porous: StrongPorosityVerdict,
    pub completely_strongly_porous: BatteryVerdict,
    pub omega_strongly_porous: BatteryVerdict,
    pub predictions: Vec<Prediction>,
    pub observations: Vec<Observation>,
    pub scalings: Vec<ScalingEvidence>,
    pub midgap: Option<TangencyVerdict>,
    pub flags: Vec<Flag>,
    pub notes: Vec<String>,
}

impl ClassificationReport {
    pub fn prediction(&self, fact: Fact) -> Option<Verdict> {
        self.predictions.iter().find(|p| p.fact == fact).map(|p| p.verdict)
    }

    pub fn observation(&self, fact: Fact) -> Option<Verdict> {
        self.observations.iter().find(|o| o.fact == fact).map(|o| o.verdict)
    }
}

fn not(v: Verdict) -> Verdict {
    match v {
        Verdict::True => Verdict::False,
        Verdict::False => Verdict::True,
        Verdict::Undetermined => Verdict::Undetermined,
    }
}

fn scaled_grid(grid: &[Vec<f64>], t: f64) -> Vec<Vec<f64>> {
    grid.iter().map(|c| c.iter().map(|x| x * t).collect()).collect()
}

/// Largest clique diameter and smallest positive `d̃` of the graph over the grid.
fn grid_extent(model: &dyn MetricModel, grid: &[Vec<f64>], r: &ScalingSequence, profile: &ToleranceProfile) -> Result<(f64, f64)> {
    let g = build_stability_graph(model, &coefficient_pool(grid, r), r, profile)?;
    let diam = maximal_cliques(&g)?.iter().map(|c| c.diameter()).fold(0.0, f64::max);
    let min_d = g.vertices.iter().filter(|c| !c.alpha0).map(|c| c.d_tilde).fold(f64::INFINITY, f64::min);
    Ok((diam, min_d))
}

/// Porosity verdicts of the distance set, predictions derived from them, and
/// observations from sampled constructions; disagreements are flagged.
pub fn classify_space(model: &dyn MetricModel, config: &ClassifyConfig) -> Result<ClassificationReport> {
    let profile = &config.profile;
    let set = model.distance_set();
    let porosity = porosity_at_infinity(&set, &default_schedule(config.porosity_log2_max), &config.porosity_profile)?;
    let strongly_porous = is_strongly_porous(&set, &config.porosity_profile)?;
    let (csp, omega) = battery_verdicts(&set, &default_battery(config.seed), &config.porosity_profile, DEFAULT_RATIO_CAP)?;
    let mut notes = vec!["finite, compact and bounded-separable tangent spaces are folded into one fact: \
                          every sample is finite"
        .to_string()];

    let sp = strongly_porous.verdict;
    let mut predictions = vec![
        Prediction { fact: Fact::SmallTangentExists, criterion: Criterion::SinglePointTangent, verdict: sp },
        Prediction { fact: Fact::NormalFamilyUniform, criterion: Criterion::UniformNormalFamily, verdict: csp.verdict },
        Prediction { fact: Fact::AllPretangentBounded, criterion: Criterion::BoundedPretangent, verdict: omega.verdict },
        Prediction {
            fact: Fact::UnboundedPretangentExists,
            criterion: Criterion::UnboundedPretangent,
            verdict: not(omega.verdict),
        },
    ];
    if porosity.value_by_gap_formula <= profile.eps_rel && porosity.value_by_scan <= profile.eps_rel {
        notes.push("porosity is zero: every iterated pretangent space is predicted unbounded (not constructed)".into());
        predictions.push(Prediction {
            fact: Fact::UnboundedPretangentExists,
            criterion: Criterion::IteratedUnbounded,
            verdict: Verdict::True,
        });
    }

    // per-scaling constructions
    let battery = Selector::battery(config.seed);
    let mut scalings = Vec::new();
    for r in &config.scalings {
        let ev = scaling_evidence(model, r, config);
        scalings.push(match ev {
            Err(e) => ScalingEvidence {
                scaling: r.name(),
                normal: Verdict::Undetermined,
                vertices: 0,
                largest_clique: 0,
                diameter: 0.0,
                accepted_probes: vec![],
                skipped: Some(e.to_string()),
            },
            Ok(e) => e,
        });
    }
    let normal: Vec<(&ScalingSequence, &ScalingEvidence)> =
        config.scalings.iter().zip(&scalings).filter(|(_, e)| e.normal == Verdict::True).collect();

    let mut observations = Vec::new();

    // single-point tangent space
    let mut midgap = None;
    let small = match &config.midgap {
        Some(r) => {
            let pool = coefficient_pool(&config.grid, r);
            let g = build_stability_graph(model, &pool, r, profile)?;
            if g.len() == 1 {
                let t = tangency_probe(model, &pool, r, &[0], &battery, &[], profile)?;
                let v = match t {
                    TangencyVerdict::NoCounterexample { .. } => Verdict::True,
                    _ => Verdict::Undetermined,
                };
                let why = match &t {
                    TangencyVerdict::Undetermined { reason } => format!(" ({reason})"),
                    TangencyVerdict::Witness { selector, d_tilde, .. } => format!(" (witness on {selector:?}, d̃ {d_tilde})"),
                    _ => String::new(),
                };
                midgap = Some(t);
                (v, format!("{} gives the single vertex α₀{why}", r.name()))
            } else {
                (Verdict::False, format!("{} gives {} classes", r.name(), g.len()))
            }
        }
        None if !normal.is_empty() && normal.iter().all(|(_, e)| e.vertices >= 2) => {
            (Verdict::False, "every normal scaling gives at least two classes".into())
        }
        None => (Verdict::Undetermined, "no normal scaling in the battery".into()),
    };
    observations.push(Observation { fact: Fact::SmallTangentExists, verdict: small.0, detail: small.1 });

    // boundedness through lower limits of rescaled distance sets
    let cap = config.probes.iter().copied().fold(0.0, f64::max);
    let big = normal.iter().find(|(_, e)| e.accepted_probes.iter().any(|&y| y >= 1000.0 && y >= cap / 64.0));
    let small_only = !normal.is_empty() && normal.iter().all(|(_, e)| e.accepted_probes.iter().all(|&y| y <= 2.0));
    let unbounded = if let Some((r, e)) = big {
        (Verdict::True, format!("{} accepts probes {:?}", r.name(), e.accepted_probes))
    } else if small_only {
        (Verdict::False, "no normal scaling accepts a probe above 2".into())
    } else {
        (Verdict::Undetermined, "probes inconclusive".into())
    };

    // uniform boundedness and discreteness: dilate the grid along a normal scaling
    let uniform = match normal.first() {
        Some((r, _)) => {
            let (d1, m1) = grid_extent(model, &config.grid, r, profile)?;
            let (d4, _) = grid_extent(model, &scaled_grid(&config.grid, 4.0), r, profile)?;
            let (_, m4) = grid_extent(model, &scaled_grid(&config.grid, 0.25), r, profile)?;
            let grows = d4 > 1.5 * d1 + profile.eps_rel;
            let shrinks = m1.is_finite() && m4 < 0.75 * m1;
            let stable = d1 > 0.0 && m1.is_finite() && !grows && !shrinks;
            let detail = format!(
                "{}: clique diameter {d1:.6} -> {d4:.6} for the grid times 4, min d̃ {m1:.6} -> {m4:.6} for the grid / 4",
                r.name()
            );
            if grows || shrinks || unbounded.0 == Verdict::True {
                (Verdict::False, detail)
            } else if stable && small_only {
                (Verdict::True, detail)
            } else {
                (Verdict::Undetermined, detail)
            }
        }
        None => (Verdict::Undetermined, "no normal scaling in the battery".into()),
    };
    observations.push(Observation { fact: Fact::NormalFamilyUniform, verdict: uniform.0, detail: uniform.1 });
    observations.push(Observation { fact: Fact::UnboundedPretangentExists, verdict: unbounded.0, detail: unbounded.1.clone() });
    observations.push(Observation { fact: Fact::AllPretangentBounded, verdict: not(unbounded.0), detail: unbounded.1 });

    let mut flags = Vec::new();
    for p in &predictions {
        if p.criterion == Criterion::IteratedUnbounded {
            continue;
        }
        let Some(o) = observations.iter().find(|o| o.fact == p.fact) else { continue };
        if p.verdict.is_definite() && o.verdict.is_definite() && p.verdict != o.verdict {
            flags.push(Flag {
                criterion: p.criterion,
                message: format!("{:?} predicted {:?} but observed {:?}: {}", p.fact, p.verdict, o.verdict, o.detail),
            });
        }
    }
    if sp == Verdict::False && porosity.value_by_gap_formula >= 1.0 - profile.eps_rel {
        notes.push("gap formula near 1 while strong porosity failed".into());
    }
    // the porosity hierarchy itself
    let implies = |a: Verdict, b: Verdict| !(a == Verdict::True && b == Verdict::False);
    if !implies(csp.verdict, omega.verdict) || !implies(omega.verdict, sp) {
        flags.push(Flag {
            criterion: Criterion::BoundedPretangent,
            message: format!("porosity hierarchy broken: CSP {:?}, ω-SP {:?}, SP {:?}", csp.verdict, omega.verdict, sp),
        });
    }

    Ok(ClassificationReport {
        model: model.name(),
        porosity,
        strongly_porous,
        completely_strongly_porous: csp,
        omega_strongly_porous: omega,
        predictions,
        observations,
        scalings,
        midgap,
        flags,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LineModel;

    fn ray(set: RaySet) -> LineModel {
        LineModel::new(set, false, "ray").unwrap()
    }

    #[test]
    fn normal_scaling_examples() {
        let poly = ToleranceProfile::polynomial();
        assert_eq!(is_normal_scaling(&LineModel::integers(), &ScalingSequence::linear(), &poly).unwrap(), Verdict::True);
        let p = ToleranceProfile::superexponential();
        let r = ScalingSequence::Exp2Poly { a: 1.0, b: 1.0, c: 0.0 };
        assert_eq!(is_normal_scaling(&ray(RaySet::superexp(1.0).unwrap()), &r, &p).unwrap(), Verdict::False);
        let f = ray(RaySet::factorial());
        assert_eq!(is_normal_scaling(&f, &ScalingSequence::Factorial, &Default::default()).unwrap(), Verdict::True);
    }

    #[test]
    fn liminf_examples() {
        let poly = ToleranceProfile::polynomial();
        let probes = [0.5, 7.3, 123.4, 10_000.0 * std::f64::consts::PI, 0.0];
        let r = liminf_probe(&RaySet::integers(), &ScalingSequence::linear(), &probes, &poly).unwrap();
        assert!(r.iter().all(|p| p.accepted), "{r:?}");
        let p = ToleranceProfile::superexponential();
        let s = RaySet::superexp(1.0).unwrap();
        let r = liminf_probe(&s, &ScalingSequence::Exp2Poly { a: 1.0, b: 0.0, c: 0.0 }, &[3.0, 0.0], &p).unwrap();
        assert!(!r[0].accepted);
        assert!((r[0].tail_distance.unwrap() - 2.0).abs() < 1e-3);
        assert!(r[1].accepted);
        assert!(liminf_probe(&s, &ScalingSequence::linear(), &[-1.0], &p).is_err());
    }
}

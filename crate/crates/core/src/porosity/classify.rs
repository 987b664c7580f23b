//! Strong porosity along sequences: asymptotic matching of gap endpoints,
//! complete strong porosity (every sequence) and omega strong porosity
//! (a subsequence of every sequence).

use serde::{Deserialize, Serialize};

use super::{Gap, RaySet};
use crate::error::{Error, Result};
use crate::numeric::{detect_limit, eventually_increasing, tail_window, LimitVerdict, LogValue, Selector, ToleranceProfile};
use crate::Verdict;

/// Default bound on `c2 / c1` for asymptotic equivalence.
pub const DEFAULT_RATIO_CAP: f64 = 1e3;

/// Gaps examined on each side of a sequence point when matching.
const WALK: usize = 16;

/// Result of testing `a_n ≍ g_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsympMatch {
    /// `inf` of `a_n / g_n` over the tail window.
    pub c1: f64,
    /// `sup` of `a_n / g_n` over the tail window.
    pub c2: f64,
    /// The tail ratio moves monotonically by more than the tolerance.
    pub drift: bool,
    pub verdict: bool,
}

/// Tests `c1 g_n <= a_n <= c2 g_n` on the tail with `c2 / c1 <= ratio_cap`.
pub fn asymp_equivalent(
    a: &[LogValue],
    g: &[LogValue],
    profile: &ToleranceProfile,
    ratio_cap: f64,
) -> Result<AsympMatch> {
    if a.len() != g.len() || a.is_empty() {
        return Err(Error::input("sequences must be nonempty and of equal length"));
    }
    if a.iter().chain(g).any(|x| !x.is_positive() || !x.is_finite()) {
        return Err(Error::input("asymptotic matching needs positive finite terms"));
    }
    let w = tail_window(a.len(), profile.tail_fraction);
    // log2 of a_n / g_n
    let logs: Vec<f64> = a[a.len() - w..]
        .iter()
        .zip(&g[g.len() - w..])
        .map(|(x, y)| x.log2mag() - y.log2mag())
        .collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let drift = monotone_drift(&logs, (1.0 + 10.0 * profile.eps_rel).log2());
    let (c1, c2) = (lo.exp2(), hi.exp2());
    let verdict = c1 > 0.0 && c2.is_finite() && hi - lo <= ratio_cap.log2() && !drift;
    Ok(AsympMatch { c1, c2, drift, verdict })
}

/// Eight block means strictly monotone with total change above `tol`.
fn monotone_drift(logs: &[f64], tol: f64) -> bool {
    if logs.len() < 8 {
        return false;
    }
    let block = logs.len() / 8;
    let means: Vec<f64> = logs.chunks(block).take(8).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    let change = means[means.len() - 1] - means[0];
    let up = means.windows(2).all(|w| w[1] > w[0]);
    let down = means.windows(2).all(|w| w[1] < w[0]);
    (up || down) && change.abs() > tol
}

/// Gaps `(a, b)` with `a` within a factor `window` of `t`, nearest first.
fn candidate_gaps(set: &RaySet, t: LogValue, window: f64) -> Result<Vec<Gap>> {
    let lw = window.log2();
    let in_window = |g: &Gap| g.a.is_positive() && (g.a.log2mag() - t.log2mag()).abs() <= lw;
    let mut out = Vec::new();
    let Some(home) = set.at_or_before(t)? else { return Ok(out) };
    let mut c = home;
    for _ in 0..WALK {
        let Some(g) = set.gap_after(&c)? else { break };
        if !g.complete || g.a.log2mag() - t.log2mag() > lw {
            break;
        }
        if in_window(&g) {
            out.push(g);
        }
        match set.after(g.a)? {
            Some(n) => c = n,
            None => break,
        }
    }
    let mut c = home;
    for _ in 0..WALK {
        let Some(g) = set.gap_before(&c)? else { break };
        if !g.a.is_positive() || t.log2mag() - g.a.log2mag() > lw {
            break;
        }
        out.push(g);
        match set.at_or_before(g.a)? {
            Some(p) if p.lo.lt(&c.lo) => c = p,
            _ => break,
        }
    }
    Ok(out)
}

/// Best candidate: largest `(b - a) / b`, ties broken by log distance to `t`.
fn best_gap<'a>(cands: impl Iterator<Item = &'a Gap>, t: LogValue) -> Option<Gap> {
    let mut best: Option<(f64, f64, Gap)> = None;
    for g in cands {
        let r = g.ratio();
        let d = g.a.log2_distance(t);
        let better = match best {
            None => true,
            Some((br, bd, _)) => r > br + 1e-12 || ((r - br).abs() <= 1e-12 && d < bd),
        };
        if better {
            best = Some((r, d, *g));
        }
    }
    best.map(|(_, _, g)| g)
}

/// Outcome of matching a sequence against gap left endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauMatch {
    pub verdict: Verdict,
    pub asymp: Option<AsympMatch>,
    /// Limit of `(b_n - a_n) / b_n` along the matched gaps.
    pub ratio_limit: Option<LimitVerdict>,
    /// Terms for which a gap was found.
    pub matched: usize,
    /// The last few matched gaps.
    pub tail_gaps: Vec<Gap>,
    pub note: Option<String>,
}

impl TauMatch {
    fn without_match(verdict: Verdict, note: &str) -> Self {
        TauMatch {
            verdict,
            asymp: None,
            ratio_limit: None,
            matched: 0,
            tail_gaps: vec![],
            note: Some(note.to_owned()),
        }
    }
}

/// Matches each `tau_n` to a gap `(a_n, b_n)` with `a_n ≍ tau_n`.
fn match_gaps(set: &RaySet, tau: &[LogValue], ratio_cap: f64) -> Result<Vec<Vec<Gap>>> {
    let window = ratio_cap.sqrt();
    tau.iter().map(|&t| candidate_gaps(set, t, window)).collect()
}

/// Strong porosity of `E` along `tau`.
pub fn tau_strong_porosity(
    set: &RaySet,
    tau: &[LogValue],
    profile: &ToleranceProfile,
    ratio_cap: f64,
) -> Result<TauMatch> {
    if tau.len() < 8 {
        return Err(Error::input("tau needs at least 8 terms"));
    }
    for t in tau {
        if !set.contains_approx(*t, 1e-9)? {
            return Err(Error::input(format!("tau term 2^{:.6} is not in E", t.log2mag())));
        }
    }
    let logs: Vec<f64> = tau.iter().map(|t| t.log2mag()).collect();
    if !eventually_increasing(&logs) {
        return Ok(TauMatch::without_match(Verdict::Undetermined, "tau is not eventually increasing"));
    }
    let cands = match_gaps(set, tau, ratio_cap)?;
    Ok(escape_guard(tau_from_candidates(tau, &cands, profile, ratio_cap)?, tau, profile))
}

fn tau_from_candidates(
    tau: &[LogValue],
    cands: &[Vec<Gap>],
    profile: &ToleranceProfile,
    ratio_cap: f64,
) -> Result<TauMatch> {
    let n = tau.len();
    let w = tail_window(n, profile.tail_fraction);
    let missing_tail = cands[n - w..].iter().filter(|c| c.is_empty()).count();
    if missing_tail > 0 {
        return Ok(TauMatch::without_match(
            Verdict::False,
            &format!("{missing_tail} tail terms have no gap with comparable left endpoint"),
        ));
    }
    // keep only the terms that matched, then repair monotonicity of a_n
    let mut chosen: Vec<(LogValue, Gap)> = Vec::new();
    for (t, c) in tau.iter().zip(cands) {
        let Some(mut g) = best_gap(c.iter(), *t) else { continue };
        if let Some((_, prev)) = chosen.last() {
            if g.a.lt(&prev.a) {
                if let Some(alt) = best_gap(c.iter().filter(|x| prev.a.le(&x.a)), *t) {
                    g = alt;
                }
            }
        }
        chosen.push((*t, g));
    }
    let ts: Vec<LogValue> = chosen.iter().map(|(t, _)| *t).collect();
    let a_s: Vec<LogValue> = chosen.iter().map(|(_, g)| g.a).collect();
    let ratios: Vec<f64> = chosen.iter().map(|(_, g)| g.ratio()).collect();
    let asymp = asymp_equivalent(&a_s, &ts, profile, ratio_cap)?;
    let ratio_limit = detect_limit(&ratios, profile)?;
    let a_logs: Vec<f64> = a_s.iter().map(|a| a.log2mag()).collect();
    let a_escapes = *a_logs.last().unwrap() > profile.divergence_threshold.log2();
    let a_increasing = eventually_increasing(&a_logs);
    let ratio_ok = ratio_limit.converged().is_some_and(|v| v >= 1.0 - profile.eps_rel);
    let ratio_bad = ratio_limit.converged().is_some_and(|v| v <= 1.0 - 10.0 * profile.eps_rel)
        || ratios[ratios.len() - tail_window(ratios.len(), profile.tail_fraction)..]
            .iter()
            .all(|&r| r <= 1.0 - 10.0 * profile.eps_rel);
    let verdict = if asymp.verdict && ratio_ok && a_escapes && a_increasing {
        Verdict::True
    } else if ratio_bad || asymp.drift || asymp.c2 / asymp.c1 > ratio_cap {
        Verdict::False
    } else {
        Verdict::Undetermined
    };
    let mut note = Vec::new();
    if !a_increasing {
        note.push("matched left endpoints are not eventually increasing");
    }
    if !a_escapes {
        note.push("matched left endpoints stay below the divergence threshold");
    }
    Ok(TauMatch {
        verdict,
        asymp: Some(asymp),
        ratio_limit: Some(ratio_limit),
        matched: chosen.len(),
        tail_gaps: chosen.iter().rev().take(4).rev().map(|(_, g)| *g).collect(),
        note: (!note.is_empty()).then(|| note.join("; ")),
    })
}

/// Generators of test sequences drawn from `E`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TauGenerator {
    /// `tau_i = element(i * stride)`
    AllElements,
    /// `tau_i = element(c * i * stride)`
    EveryCth { c: u64 },
    /// Element nearest (in ratio) to `2^(i L / N)`, `L` the top of the element range.
    NearestPowersOfTwo,
    /// Left endpoints of gaps: right ends of components.
    GapLeftEndpoints,
    /// `element(n_i * stride)` for the seeded random selector.
    Random { seed: u64 },
}

impl TauGenerator {
    pub fn name(&self) -> String {
        match self {
            TauGenerator::AllElements => "all_elements".into(),
            TauGenerator::EveryCth { c } => format!("every_{c}th"),
            TauGenerator::NearestPowersOfTwo => "nearest_powers_of_two".into(),
            TauGenerator::GapLeftEndpoints => "gap_left_endpoints".into(),
            TauGenerator::Random { seed } => format!("random({seed})"),
        }
    }

    /// The first `profile.prefix_length` terms, positive and in `E`.
    pub fn generate(&self, set: &RaySet, profile: &ToleranceProfile) -> Result<Vec<LogValue>> {
        let n = profile.prefix_length as u128;
        let stride = effective_stride(set, profile)?;
        let fetch = |idx: &[u128]| fetch_elements(set, idx);
        match self {
            TauGenerator::AllElements => fetch(&(1..=n).map(|i| i * stride).collect::<Vec<_>>()),
            TauGenerator::EveryCth { c } => fetch(&(1..=n).map(|i| *c as u128 * i * stride).collect::<Vec<_>>()),
            TauGenerator::Random { seed } => {
                let s = Selector::Random { seed: *seed };
                fetch(&(1..=n).map(|i| s.index(i).unwrap() * stride).collect::<Vec<_>>())
            }
            TauGenerator::NearestPowersOfTwo => {
                let top = fetch(&[n * stride])?[0].log2mag();
                (1..=n)
                    .map(|i| {
                        let target = LogValue::pow2(i as f64 * top / n as f64);
                        match set.nearest_in_ratio(target)? {
                            Some(v) if v.is_positive() => Ok(v),
                            _ => Err(Error::input("no positive element near target")),
                        }
                    })
                    .collect()
            }
            TauGenerator::GapLeftEndpoints => {
                let his: Vec<LogValue> = if set.elements_random_access() {
                    (1..=n)
                        .map(|i| {
                            let k = u64::try_from(i * stride).map_err(|_| Error::resource("component index overflow"))?;
                            set.component(k)?.map(|c| c.hi).ok_or_else(|| Error::input("too few components"))
                        })
                        .collect::<Result<_>>()?
                } else {
                    set.components_from_start(n as usize + 1)?.iter().skip(1).map(|c| c.hi).collect()
                };
                if his.len() < n as usize || his.iter().any(|h| !h.is_finite()) {
                    return Err(Error::input("set has too few bounded components"));
                }
                Ok(his)
            }
        }
    }
}

/// `element(j)` for each index; enumerates components once when the set
/// has no random access.
fn fetch_elements(set: &RaySet, idx: &[u128]) -> Result<Vec<LogValue>> {
    let missing = || Error::input("set has too few elements for the prefix");
    if set.elements_random_access() {
        return idx.iter().map(|&j| set.element(j)?.ok_or_else(missing)).collect();
    }
    let top = idx.iter().copied().max().unwrap_or(0);
    if top >= super::DEFAULT_BUDGET as u128 {
        return Err(Error::resource("element index beyond enumeration budget"));
    }
    let comps = set.components_from_start(top as usize + 1)?;
    if comps.iter().any(|c| c.lo != c.hi) {
        return Err(Error::input("element enumeration through interval components"));
    }
    idx.iter().map(|&j| comps.get(j as usize).map(|c| c.lo).ok_or_else(missing)).collect()
}

/// The profile's stride when element magnitudes stay moderate, else 1.
fn effective_stride(set: &RaySet, profile: &ToleranceProfile) -> Result<u128> {
    let s = profile.index_stride as u128;
    if s <= 1 || !set.elements_random_access() {
        return Ok(1);
    }
    let top = profile.prefix_length as u128 * s;
    match set.element(top) {
        Ok(Some(v)) if v.log2mag() <= (1u64 << 30) as f64 => Ok(s),
        _ => Ok(1),
    }
}

/// The standard battery: all elements, every 2nd/3rd/5th, nearest to powers
/// of two, gap left endpoints and a seeded random selection.
pub fn default_battery(seed: u64) -> Vec<TauGenerator> {
    vec![
        TauGenerator::AllElements,
        TauGenerator::EveryCth { c: 2 },
        TauGenerator::EveryCth { c: 3 },
        TauGenerator::EveryCth { c: 5 },
        TauGenerator::NearestPowersOfTwo,
        TauGenerator::GapLeftEndpoints,
        TauGenerator::Random { seed },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberEvidence {
    pub name: String,
    pub verdict: Verdict,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub ratio_limit: Option<f64>,
    pub note: Option<String>,
}

impl MemberEvidence {
    fn from_match(name: String, m: &TauMatch) -> Self {
        MemberEvidence {
            name,
            verdict: m.verdict,
            c1: m.asymp.as_ref().map(|a| a.c1),
            c2: m.asymp.as_ref().map(|a| a.c2),
            ratio_limit: m.ratio_limit.as_ref().and_then(|l| l.converged()),
            note: m.note.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryVerdict {
    pub verdict: Verdict,
    pub members: Vec<MemberEvidence>,
    /// First member that failed definitively.
    pub witness: Option<String>,
}

fn run_member(
    set: &RaySet,
    gen: &TauGenerator,
    profile: &ToleranceProfile,
    ratio_cap: f64,
) -> Result<Option<(Vec<LogValue>, Vec<Vec<Gap>>)>> {
    let tau = match gen.generate(set, profile) {
        Ok(t) => t,
        Err(Error::Input(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    for t in &tau {
        if !set.contains_approx(*t, 1e-9)? {
            return Err(Error::input(format!("generator {} left E", gen.name())));
        }
    }
    let cands = match_gaps(set, &tau, ratio_cap)?;
    Ok(Some((tau, cands)))
}

fn not_applicable(name: String) -> MemberEvidence {
    MemberEvidence {
        name,
        verdict: Verdict::Undetermined,
        c1: None,
        c2: None,
        ratio_limit: None,
        note: Some("generator not applicable to this set".into()),
    }
}

/// Evidence of one battery member for complete strong porosity.
fn complete_member(
    tau: &[LogValue],
    cands: &[Vec<Gap>],
    name: String,
    profile: &ToleranceProfile,
    ratio_cap: f64,
) -> Result<MemberEvidence> {
    let logs: Vec<f64> = tau.iter().map(|t| t.log2mag()).collect();
    if !eventually_increasing(&logs) {
        let m = TauMatch::without_match(Verdict::Undetermined, "tau is not eventually increasing");
        return Ok(MemberEvidence::from_match(name, &m));
    }
    let m = escape_guard(tau_from_candidates(tau, cands, profile, ratio_cap)?, tau, profile);
    Ok(MemberEvidence::from_match(name, &m))
}

/// Evidence of one battery member for omega strong porosity: the member is
/// restricted to terms whose best gap ratio is within `10 eps_rel` of 1.
fn omega_member(
    tau: &[LogValue],
    cands: Vec<Vec<Gap>>,
    name: String,
    profile: &ToleranceProfile,
    ratio_cap: f64,
) -> Result<MemberEvidence> {
    let floor = 1.0 - 10.0 * profile.eps_rel;
    let min_keep = (profile.prefix_length / 8).max(8);
    let keep: Vec<bool> = tau
        .iter()
        .zip(&cands)
        .map(|(t, c)| best_gap(c.iter(), *t).is_some_and(|g| g.ratio() >= floor))
        .collect();
    let kept_late = keep[tau.len() / 2..].iter().filter(|&&k| k).count();
    let (kept_tau, kept_cands): (Vec<LogValue>, Vec<Vec<Gap>>) =
        tau.iter().zip(cands).zip(&keep).filter(|(_, &k)| k).map(|((t, c), _)| (*t, c)).unzip();
    let name = format!("{name}|retained");
    if kept_tau.len() < min_keep {
        let verdict = if kept_late == 0 { Verdict::False } else { Verdict::Undetermined };
        return Ok(MemberEvidence {
            name,
            verdict,
            c1: None,
            c2: None,
            ratio_limit: None,
            note: Some(format!("{} of {} terms retained", kept_tau.len(), tau.len())),
        });
    }
    complete_member(&kept_tau, &kept_cands, name, profile, ratio_cap)
}

fn escape_guard(mut m: TauMatch, tau: &[LogValue], profile: &ToleranceProfile) -> TauMatch {
    if tau.last().is_some_and(|t| t.log2mag() <= profile.divergence_threshold.log2()) {
        // only a definite failure survives a sequence that has not escaped
        if m.verdict == Verdict::True {
            m.verdict = Verdict::Undetermined;
        }
        let note = "tau stays below the divergence threshold";
        m.note = Some(m.note.map_or(note.to_owned(), |n| format!("{n}; {note}")));
    }
    m
}

fn aggregate(members: Vec<MemberEvidence>) -> BatteryVerdict {
    let witness = members.iter().find(|m| m.verdict == Verdict::False).map(|m| m.name.clone());
    let verdict = if witness.is_some() {
        Verdict::False
    } else if !members.is_empty() && members.iter().all(|m| m.verdict == Verdict::True) {
        Verdict::True
    } else {
        Verdict::Undetermined
    };
    BatteryVerdict { verdict, members, witness }
}

/// Complete and omega strong porosity from one pass over the battery.
pub fn battery_verdicts(
    set: &RaySet,
    battery: &[TauGenerator],
    profile: &ToleranceProfile,
    ratio_cap: f64,
) -> Result<(BatteryVerdict, BatteryVerdict)> {
    let mut complete = Vec::new();
    let mut omega = Vec::new();
    for gen in battery {
        match run_member(set, gen, profile, ratio_cap)? {
            None => complete.push(not_applicable(gen.name())),
            Some((tau, cands)) => {
                complete.push(complete_member(&tau, &cands, gen.name(), profile, ratio_cap)?);
                omega.push(omega_member(&tau, cands, gen.name(), profile, ratio_cap)?);
            }
        }
    }
    Ok((aggregate(complete), aggregate(omega)))
}

/// `E` is strongly porous along every sequence of the battery.
pub fn completely_strongly_porous(
    set: &RaySet,
    battery: &[TauGenerator],
    profile: &ToleranceProfile,
    ratio_cap: f64,
) -> Result<BatteryVerdict> {
    Ok(battery_verdicts(set, battery, profile, ratio_cap)?.0)
}

/// Every battery member has a subsequence along which `E` is strongly porous.
pub fn omega_strongly_porous(
    set: &RaySet,
    battery: &[TauGenerator],
    profile: &ToleranceProfile,
    ratio_cap: f64,
) -> Result<BatteryVerdict> {
    Ok(battery_verdicts(set, battery, profile, ratio_cap)?.1)
}

//! Normalized limits, mutual stability, the quotient of a sequence pool, the
//! stability graph and its maximal cliques (sampled pretangent spaces).

mod clique;

use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MetricModel, Point};
use crate::numeric::{detect_limit, LimitKind, LimitVerdict, LogValue, Selector, ToleranceProfile};
use crate::sequence::{ratio_limit, PointSequence, ScalingSequence};
use crate::Verdict;

pub use clique::maximal_cliques_of;

/// Largest graph handed to clique enumeration.
pub const VERTEX_CAP: usize = 2000;
/// Largest accepted pool.
pub const POOL_CAP: usize = 10_000;

/// A class of pool sequences identified by `lim d(x_n, y_n)/r_n = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqClass {
    pub representative: PointSequence,
    pub label: String,
    pub d_tilde: f64,
    /// Pool indices merged into this class.
    pub members: Vec<usize>,
    pub alpha0: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PairStatus {
    Edge { weight: f64 },
    NotStable,
    Undetermined,
}

impl PairStatus {
    pub fn weight(&self) -> Option<f64> {
        match self {
            PairStatus::Edge { weight } => Some(*weight),
            _ => None,
        }
    }
}

/// A pool sequence left out of the quotient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dropped {
    pub index: usize,
    pub label: String,
    pub reason: String,
}

/// The weighted graph on sequence classes; vertex 0 is always `α₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityGraph {
    pub scaling: String,
    pub pool: Vec<String>,
    pub vertices: Vec<SeqClass>,
    /// Symmetric; `None` on the diagonal.
    pub status: Vec<Vec<Option<PairStatus>>>,
    pub dropped: Vec<Dropped>,
}

impl StabilityGraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.status[i][j].and_then(|s| s.weight())
    }

    pub fn adjacency(&self) -> Vec<Vec<bool>> {
        self.status.iter().map(|row| row.iter().map(|s| s.and_then(|s| s.weight()).is_some()).collect()).collect()
    }

    /// `(i, j, weight)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.len();
        (0..n).flat_map(|i| (i + 1..n).filter_map(move |j| self.weight(i, j).map(|w| (i, j, w)))).collect()
    }

    /// The vertex whose class contains pool sequence `index`.
    pub fn class_of(&self, index: usize) -> Option<usize> {
        self.vertices.iter().position(|c| c.members.contains(&index))
    }
}

/// A maximal clique with its metric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretangentSample {
    pub vertices: Vec<usize>,
    pub labels: Vec<String>,
    pub d_tilde: Vec<f64>,
    pub metric: Vec<Vec<f64>>,
    pub contains_alpha0: bool,
}

impl PretangentSample {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn diameter(&self) -> f64 {
        self.metric.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// First violated metric axiom, if any; triangle slack `4 eps_rel (1 + max)`.
    pub fn metric_violation(&self, eps_rel: f64) -> Option<String> {
        let m = &self.metric;
        let n = m.len();
        let slack = 4.0 * eps_rel * (1.0 + self.diameter());
        for i in 0..n {
            if m[i][i] != 0.0 {
                return Some(format!("nonzero diagonal at {i}"));
            }
            for j in 0..n {
                if m[i][j] != m[j][i] {
                    return Some(format!("asymmetric at ({i},{j})"));
                }
                if i != j && !(m[i][j] > 0.0) {
                    return Some(format!("nonpositive distance at ({i},{j})"));
                }
                for k in 0..n {
                    if m[i][k] > m[i][j] + m[j][k] + slack {
                        return Some(format!("triangle inequality fails at ({i},{j},{k})"));
                    }
                }
            }
        }
        None
    }
}

fn norms_escape(model: &dyn MetricModel, xs: &[Point], profile: &ToleranceProfile) -> Result<bool> {
    let p = model.base_point();
    let norms: Vec<f64> = xs.iter().map(|x| model.distance(x, &p).to_f64()).collect();
    Ok(detect_limit(&norms, profile)?.is_diverged())
}

fn d_tilde_of(model: &dyn MetricModel, xs: &[Point], rs: &[LogValue], profile: &ToleranceProfile) -> Result<LimitVerdict> {
    if !norms_escape(model, xs, profile)? {
        return Ok(LimitVerdict::undetermined("not escaping to infinity"));
    }
    let base = vec![model.base_point(); xs.len()];
    ratio_limit(model, xs, &base, rs, profile)
}

/// `lim d(x_n, p)/r_n`, reported as converged only when `d(x_n, p)` is
/// certified to diverge.
pub fn d_tilde(
    model: &dyn MetricModel,
    x: &PointSequence,
    r: &ScalingSequence,
    profile: &ToleranceProfile,
) -> Result<LimitVerdict> {
    profile.validate()?;
    r.validate()?;
    d_tilde_of(model, &x.points(model, profile)?, &r.terms(profile)?, profile)
}

/// `lim d(x_n, y_n)/r_n` without checking that either sequence has a
/// normalized limit.
pub fn pair_limit(
    model: &dyn MetricModel,
    x: &PointSequence,
    y: &PointSequence,
    r: &ScalingSequence,
    profile: &ToleranceProfile,
) -> Result<LimitVerdict> {
    profile.validate()?;
    r.validate()?;
    ratio_limit(model, &x.points(model, profile)?, &y.points(model, profile)?, &r.terms(profile)?, profile)
}

/// Mutual stability `ρ(x, y)`; both sequences must have converged `d̃`.
pub fn mutual_stability(
    model: &dyn MetricModel,
    x: &PointSequence,
    y: &PointSequence,
    r: &ScalingSequence,
    profile: &ToleranceProfile,
) -> Result<LimitVerdict> {
    for s in [x, y] {
        if d_tilde(model, s, r, profile)?.converged().is_none() {
            return Err(Error::input(format!("{} has no normalized limit", s.name())));
        }
    }
    pair_limit(model, x, y, r, profile)
}

struct Quotient {
    classes: Vec<SeqClass>,
    /// Pair limits between class representatives, by vertex.
    limits: Vec<Vec<Option<LimitVerdict>>>,
    dropped: Vec<Dropped>,
}

fn quotient(
    model: &dyn MetricModel,
    pool: &[PointSequence],
    r: &ScalingSequence,
    profile: &ToleranceProfile,
) -> Result<Quotient> {
    profile.validate()?;
    r.validate()?;
    if pool.len() > POOL_CAP {
        return Err(Error::resource(format!("pool of {} sequences exceeds the cap {POOL_CAP}", pool.len())));
    }
    let rs = r.terms(profile)?;
    let evaluated: Vec<Result<(Vec<Point>, LimitVerdict)>> = pool
        .par_iter()
        .map(|x| {
            let xs = x.points(model, profile)?;
            let d = d_tilde_of(model, &xs, &rs, profile)?;
            Ok((xs, d))
        })
        .collect();

    // node 0 is the base-point sequence; node k + 1 is kept[k]
    let mut dropped = Vec::new();
    let mut nodes: Vec<(usize, Vec<Point>, f64)> = Vec::new();
    for (i, e) in evaluated.into_iter().enumerate() {
        let label = pool[i].name();
        match e {
            Ok((xs, d)) => match d.converged() {
                Some(v) => nodes.push((i, xs, v)),
                None => {
                    let reason = d.note.unwrap_or_else(|| format!("normalized limit {:?}", d.kind));
                    dropped.push(Dropped { index: i, label, reason });
                }
            },
            Err(Error::Resource(m)) => return Err(Error::Resource(m)),
            Err(e) => dropped.push(Dropped { index: i, label, reason: e.to_string() }),
        }
    }
    for d in &dropped {
        log::debug!("dropped {}: {}", d.label, d.reason);
    }

    let n = nodes.len() + 1;
    let pairs: Vec<(usize, usize)> = (1..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let computed: Vec<Result<LimitVerdict>> = pairs
        .par_iter()
        .map(|&(a, b)| ratio_limit(model, &nodes[a - 1].1, &nodes[b - 1].1, &rs, profile))
        .collect();
    let mut lim: Vec<Vec<Option<LimitVerdict>>> = vec![vec![None; n]; n];
    for a in 1..n {
        let v = nodes[a - 1].2;
        let l = LimitVerdict { kind: LimitKind::Converged, value: Some(v), oscillation: 0.0, window: 0, note: None };
        lim[0][a] = Some(l.clone());
        lim[a][0] = Some(l);
    }
    for (&(a, b), l) in pairs.iter().zip(computed) {
        let l = l?;
        lim[a][b] = Some(l.clone());
        lim[b][a] = Some(l);
    }

    // merge every pair whose limit is zero; representatives of the result are
    // therefore pairwise non-equivalent
    let mut uf = UnionFind::<usize>::new(n);
    for a in 0..n {
        for b in a + 1..n {
            if lim[a][b].as_ref().is_some_and(|l| l.is_zero(profile)) {
                uf.union(a, b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of = std::collections::HashMap::new();
    for a in 0..n {
        let g = *root_of.entry(uf.find(a)).or_insert_with(|| {
            groups.push(vec![]);
            groups.len() - 1
        });
        groups[g].push(a);
    }
    // α₀ first, then by (d̃, insertion)
    groups.sort_by(|x, y| {
        let key = |g: &Vec<usize>| if g[0] == 0 { -1.0 } else { nodes[g[0] - 1].2 };
        key(x).total_cmp(&key(y)).then(x[0].cmp(&y[0]))
    });
    let classes: Vec<SeqClass> = groups
        .iter()
        .map(|g| {
            let members: Vec<usize> = g.iter().filter(|&&a| a > 0).map(|&a| nodes[a - 1].0).collect();
            if g[0] == 0 {
                SeqClass {
                    representative: PointSequence::Base,
                    label: "α₀".into(),
                    d_tilde: 0.0,
                    members,
                    alpha0: true,
                }
            } else {
                let (i, _, v) = &nodes[g[0] - 1];
                SeqClass {
                    representative: pool[*i].clone(),
                    label: pool[*i].name(),
                    d_tilde: *v,
                    members,
                    alpha0: false,
                }
            }
        })
        .collect();
    let limits = groups
        .iter()
        .map(|g| groups.iter().map(|h| if g[0] == h[0] { None } else { lim[g[0]][h[0]].clone() }).collect())
        .collect();
    Ok(Quotient { classes, limits, dropped })
}

/// Classes of the pool under `≡`, `α₀` first.
pub fn quotient_pool(
    model: &dyn MetricModel,
    pool: &[PointSequence],
    r: &ScalingSequence,
    profile: &ToleranceProfile,
) -> Result<Vec<SeqClass>> {
    Ok(quotient(model, pool, r, profile)?.classes)
}

pub fn build_stability_graph(
    model: &dyn MetricModel,
    pool: &[PointSequence],
    r: &ScalingSequence,
    profile: &ToleranceProfile,
) -> Result<StabilityGraph> {
    let q = quotient(model, pool, r, profile)?;
    let status = q
        .limits
        .iter()
        .map(|row| {
            row.iter()
                .map(|l| {
                    l.as_ref().map(|l| match l.kind {
                        LimitKind::Converged => PairStatus::Edge { weight: l.value.unwrap_or(f64::NAN) },
                        LimitKind::DivergedToInfinity => PairStatus::NotStable,
                        LimitKind::Undetermined => PairStatus::Undetermined,
                    })
                })
                .collect()
        })
        .collect();
    Ok(StabilityGraph {
        scaling: r.name(),
        pool: pool.iter().map(PointSequence::name).collect(),
        vertices: q.classes,
        status,
        dropped: q.dropped,
    })
}

/// Every maximal clique of `g` with its metric matrix.
pub fn maximal_cliques(g: &StabilityGraph) -> Result<Vec<PretangentSample>> {
    if g.len() > VERTEX_CAP {
        return Err(Error::resource(format!("{} vertices exceed the clique cap {VERTEX_CAP}", g.len())));
    }
    Ok(maximal_cliques_of(&g.adjacency()).into_iter().map(|c| sample_of(g, c)).collect())
}

fn sample_of(g: &StabilityGraph, vertices: Vec<usize>) -> PretangentSample {
    let metric = vertices
        .iter()
        .map(|&i| vertices.iter().map(|&j| if i == j { 0.0 } else { g.weight(i, j).unwrap_or(f64::NAN) }).collect())
        .collect();
    PretangentSample {
        labels: vertices.iter().map(|&i| g.vertices[i].label.clone()).collect(),
        d_tilde: vertices.iter().map(|&i| g.vertices[i].d_tilde).collect(),
        contains_alpha0: vertices.contains(&0),
        metric,
        vertices,
    }
}

/// True iff every edge is incident to `α₀`.
pub fn is_star(g: &StabilityGraph) -> bool {
    g.edges().iter().all(|&(i, _, _)| i == 0)
}

/// The graph of a pool before and after passing to a subsequence, with the
/// induced embedding of classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub selector: Selector,
    pub original: StabilityGraph,
    pub refined: StabilityGraph,
    /// Original vertex `->` refined vertex.
    pub embedding: Vec<Option<usize>>,
    pub commutes: bool,
    pub weights_preserved: bool,
    pub max_weight_error: f64,
    pub notes: Vec<String>,
}

fn subsequenced(pool: &[PointSequence], selector: &Selector) -> Result<Vec<PointSequence>> {
    pool.iter().map(|x| x.subsequence(selector)).collect()
}

fn embed(original: &StabilityGraph, refined: &StabilityGraph) -> Vec<Option<usize>> {
    original
        .vertices
        .iter()
        .map(|c| if c.alpha0 { Some(0) } else { c.members.first().and_then(|&i| refined.class_of(i)) })
        .collect()
}

pub fn refine_by_subsequence(
    model: &dyn MetricModel,
    pool: &[PointSequence],
    r: &ScalingSequence,
    selector: &Selector,
    profile: &ToleranceProfile,
) -> Result<Refinement> {
    selector.validate()?;
    let original = build_stability_graph(model, pool, r, profile)?;
    let refined = build_stability_graph(model, &subsequenced(pool, selector)?, &r.subsequence(selector)?, profile)?;
    let embedding = embed(&original, &refined);
    let mut notes = Vec::new();

    let mut commutes = true;
    for (v, c) in original.vertices.iter().enumerate() {
        for &i in &c.members {
            let got = refined.class_of(i);
            if got != embedding[v] {
                commutes = false;
                notes.push(format!("{} lands in {:?}, its class in {:?}", pool[i].name(), got, embedding[v]));
            }
        }
    }

    let mut weights_preserved = true;
    let mut max_weight_error: f64 = 0.0;
    for (a, b, w) in original.edges() {
        let w2 = match (embedding[a], embedding[b]) {
            (Some(x), Some(y)) if x != y => refined.weight(x, y),
            _ => None,
        };
        match w2 {
            Some(w2) => {
                let err = (w - w2).abs();
                max_weight_error = max_weight_error.max(err);
                if err > 2.0 * profile.eps_rel * w.abs().max(1.0) {
                    weights_preserved = false;
                    notes.push(format!("edge ({a},{b}) weight {w} becomes {w2}"));
                }
            }
            None => {
                weights_preserved = false;
                notes.push(format!("edge ({a},{b}) lost"));
            }
        }
    }
    Ok(Refinement {
        selector: selector.clone(),
        original,
        refined,
        embedding,
        commutes,
        weights_preserved,
        max_weight_error,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum TangencyVerdict {
    NoCounterexample { selectors: Vec<String> },
    Witness { selector: Selector, vertex: String, d_tilde: f64 },
    Undetermined { reason: String },
}

/// Tries to extend the image of `clique` (vertices of the pool's graph) after
/// each battery selector, using the pool and the extra probes.
pub fn tangency_probe(
    model: &dyn MetricModel,
    pool: &[PointSequence],
    r: &ScalingSequence,
    clique: &[usize],
    battery: &[Selector],
    extra: &[PointSequence],
    profile: &ToleranceProfile,
) -> Result<TangencyVerdict> {
    let original = build_stability_graph(model, pool, r, profile)?;
    if clique.iter().any(|&v| v >= original.len()) {
        return Err(Error::input("clique vertex outside the graph"));
    }
    let full: Vec<PointSequence> = pool.iter().chain(extra).cloned().collect();
    let mut undecided = Vec::new();
    for sel in battery {
        let refined = build_stability_graph(model, &subsequenced(&full, sel)?, &r.subsequence(sel)?, profile)?;
        let em = embed(&original, &refined);
        let Some(image) = clique.iter().map(|&v| em[v]).collect::<Option<Vec<usize>>>() else {
            undecided.push(format!("{}: a clique class has no image", sel.name()));
            continue;
        };
        let is_clique = image.iter().all(|&a| image.iter().all(|&b| a == b || refined.weight(a, b).is_some()));
        if !is_clique {
            undecided.push(format!("{}: image is not a clique", sel.name()));
            continue;
        }
        let ext = (0..refined.len()).find(|v| !image.contains(v) && image.iter().all(|&u| refined.weight(u, *v).is_some()));
        if let Some(v) = ext {
            let c = &refined.vertices[v];
            return Ok(TangencyVerdict::Witness { selector: sel.clone(), vertex: c.label.clone(), d_tilde: c.d_tilde });
        }
    }
    if !undecided.is_empty() {
        return Ok(TangencyVerdict::Undetermined { reason: undecided.join("; ") });
    }
    Ok(TangencyVerdict::NoCounterexample { selectors: battery.iter().map(Selector::name).collect() })
}

/// An escaping sequence scaled by its own norm, giving a pretangent space
/// with at least two points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPointWitness {
    pub scaling: ScalingSequence,
    pub sequence: PointSequence,
    pub sample: PretangentSample,
    pub normal: Verdict,
}

pub fn two_point_witness(model: &dyn MetricModel, profile: &ToleranceProfile) -> Result<TwoPointWitness> {
    if model.distance_set().is_bounded() {
        return Err(Error::input("the model is bounded"));
    }
    let (x, r) = model.escape();
    let g = build_stability_graph(model, std::slice::from_ref(&x), &r, profile)?;
    if let Some(d) = g.dropped.first() {
        return Err(Error::input(format!("escaping sequence {} rejected: {}", d.label, d.reason)));
    }
    let sample = maximal_cliques(&g)?
        .into_iter()
        .find(|s| s.len() >= 2)
        .ok_or_else(|| Error::input("the escaping sequence fell into α₀"))?;
    let normal = crate::criteria::is_normal_scaling(model, &r, profile)?;
    Ok(TwoPointWitness { scaling: r, sequence: x, sample, normal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LineModel;
    use crate::porosity::RaySet;

    fn z() -> LineModel {
        LineModel::integers()
    }

    fn poly() -> ToleranceProfile {
        ToleranceProfile::polynomial()
    }

    fn lin(c: f64) -> PointSequence {
        PointSequence::nearest(&[c], &ScalingSequence::linear())
    }

    fn superexp() -> LineModel {
        LineModel::new(RaySet::superexp(1.0).unwrap(), false, "superexp").unwrap()
    }

    #[test]
    fn d_tilde_examples() {
        let d = d_tilde(&z(), &lin(3.0), &ScalingSequence::linear(), &poly()).unwrap();
        assert!((d.converged().unwrap() - 3.0).abs() < 1e-9);
        let d = d_tilde(&z(), &PointSequence::Base, &ScalingSequence::linear(), &poly()).unwrap();
        assert_eq!(d.kind, LimitKind::Undetermined);
        assert!(d.note.unwrap().contains("escaping"));
        let p = ToleranceProfile::superexponential();
        let r = ScalingSequence::Exp2Poly { a: 1.0, b: 1.0, c: 0.0 };
        let x = PointSequence::nearest(&[1.0], &ScalingSequence::Exp2Poly { a: 1.0, b: 0.0, c: 0.0 });
        assert!(d_tilde(&superexp(), &x, &r, &p).unwrap().is_zero(&p));
    }

    #[test]
    fn mutual_stability_examples() {
        let r = ScalingSequence::linear();
        let m = mutual_stability(&z(), &lin(2.0), &lin(-1.0), &r, &poly()).unwrap();
        assert!((m.converged().unwrap() - 3.0).abs() < 1e-9);
        assert!(mutual_stability(&z(), &lin(2.0), &lin(2.0), &r, &poly()).unwrap().is_zero(&poly()));
        assert!(mutual_stability(&z(), &PointSequence::Base, &lin(2.0), &r, &poly()).is_err());
    }

    #[test]
    fn quotient_merges_sublinear_shift() {
        let y = PointSequence::Element { slope: 1, offset: 0, negate: false, root: 1 };
        let c = quotient_pool(&z(), &[PointSequence::element(1, 0), y], &ScalingSequence::linear(), &poly()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[1].members, vec![0, 1]);
        assert!((c[1].d_tilde - 1.0).abs() < 1e-9);
        let c = quotient_pool(&z(), &[lin(1.0), lin(2.0)], &ScalingSequence::linear(), &poly()).unwrap();
        assert_eq!(c.len(), 3);
        let c = quotient_pool(&z(), &[PointSequence::Base], &ScalingSequence::linear(), &poly()).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c[0].alpha0);
    }

    #[test]
    fn integer_pool_gives_k5() {
        let pool: Vec<_> = [-2.0, -1.0, 1.0, 2.0].iter().map(|&c| lin(c)).collect();
        let g = build_stability_graph(&z(), &pool, &ScalingSequence::linear(), &poly()).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.edges().len(), 10);
        for (a, b, w) in g.edges() {
            let c = |v: usize| -> f64 { if v == 0 { 0.0 } else { [-1.0, 1.0, -2.0, 2.0][v - 1] } };
            assert!((w - (c(a) - c(b)).abs()).abs() < 1e-9, "{a} {b} {w}");
        }
        let cl = maximal_cliques(&g).unwrap();
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].len(), 5);
        assert!(cl[0].metric_violation(1e-3).is_none());
        assert!(!is_star(&g));
    }

    #[test]
    fn superexponential_pool_collapses_to_alpha0() {
        let p = ToleranceProfile::superexponential();
        let r = ScalingSequence::Exp2Poly { a: 1.0, b: 1.0, c: 0.0 };
        let pool: Vec<_> = (0..4).map(|o| PointSequence::element(1, o)).collect();
        let g = build_stability_graph(&superexp(), &pool, &r, &p).unwrap();
        assert_eq!(g.len(), 1);
        assert!(g.edges().is_empty());
        assert!(is_star(&g));
        let cl = maximal_cliques(&g).unwrap();
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].len(), 1);
    }

    #[test]
    fn two_point_witness_on_integers() {
        let w = two_point_witness(&z(), &poly()).unwrap();
        assert_eq!(w.sample.len(), 2);
        assert!((w.sample.metric[0][1] - 1.0).abs() < 1e-9);
    }
}

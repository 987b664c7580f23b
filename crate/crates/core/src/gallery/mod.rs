//! Example spaces with known answers.

use std::sync::Arc;

mod verify;

pub use verify::{verify_gallery, FamilyCheck, Overrides, VerifyReport, POROSITY_TOLERANCE};

use serde::{Deserialize, Serialize};

use crate::criteria::{coefficient_pool, default_scalings, ClassifyConfig, FnScanConfig};
use crate::error::{Error, Result};
use crate::model::{LatticeModel, LineModel, MetricModel};
use crate::numeric::{Selector, ToleranceProfile};
use crate::porosity::{RayRule, RaySet};
use crate::pretangent::{build_stability_graph, maximal_cliques, refine_by_subsequence, tangency_probe, TangencyVerdict};
use crate::sequence::ScalingSequence;
use crate::Verdict;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    /// `Z` with `|x - y|`.
    Integers,
    /// `Z^dim` with the Euclidean metric.
    Lattice { dim: usize },
    /// `[0, inf)`.
    RealsHalfline,
    /// `{0} ∪ {q^j}`.
    Geometric { q: f64 },
    /// `{0} ∪ {n!}`.
    Factorial,
    /// `{0} ∪ {2^(c n^2)}`.
    Superexp { c: f64 },
    /// `{0} ∪ ⋃ [(2k)!, (2k+1)!]`.
    IntervalUnion,
    /// `{j + delta u_j : j ∈ Z}`.
    PerturbedLattice {
        delta: f64,
        #[serde(default)]
        seed: u64,
    },
    /// `{0} ∪ {2^(n^2)} ∪ {3 2^(n^2) : n even}`: a pretangent space that is
    /// not tangent.
    NontangentUnion,
}

impl FamilySpec {
    pub fn name(&self) -> String {
        match self {
            FamilySpec::Integers => "integers".into(),
            FamilySpec::Lattice { dim } => format!("lattice(d={dim})"),
            FamilySpec::RealsHalfline => "reals_halfline".into(),
            FamilySpec::Geometric { q } => format!("geometric({q})"),
            FamilySpec::Factorial => "factorial".into(),
            FamilySpec::Superexp { c } => format!("superexp({c})"),
            FamilySpec::IntervalUnion => "interval_union".into(),
            FamilySpec::PerturbedLattice { delta, seed } => format!("perturbed_lattice({delta},{seed})"),
            FamilySpec::NontangentUnion => "nontangent_union".into(),
        }
    }
}

/// The families every cross-check runs over.
pub fn default_gallery() -> Vec<FamilySpec> {
    vec![
        FamilySpec::Integers,
        FamilySpec::Lattice { dim: 2 },
        FamilySpec::RealsHalfline,
        FamilySpec::Geometric { q: 2.0 },
        FamilySpec::Geometric { q: 10.0 },
        FamilySpec::Factorial,
        FamilySpec::Superexp { c: 1.0 },
        FamilySpec::IntervalUnion,
        FamilySpec::PerturbedLattice { delta: 0.25, seed: 7 },
        FamilySpec::NontangentUnion,
    ]
}

/// Expected answers, each with how it is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub porosity: f64,
    pub porosity_source: String,
    pub strongly_porous: Verdict,
    pub completely_strongly_porous: Verdict,
    pub omega_strongly_porous: Verdict,
    pub verdict_source: String,
    /// Every stability graph is a star centered at `α₀`.
    pub star: Verdict,
    pub star_source: String,
    pub pretangent: String,
}

/// A model together with its distance set, ground truth and the settings
/// under which the truth is reproduced.
#[derive(Debug, Clone)]
pub struct Family {
    pub spec: FamilySpec,
    pub model: Arc<dyn MetricModel>,
    pub set: RaySet,
    pub truth: GroundTruth,
    /// Profile for sequence and graph constructions.
    pub profile: ToleranceProfile,
    pub porosity_log2_max: f64,
    /// Scaling expected to give a single-point tangent space.
    pub midgap: Option<ScalingSequence>,
    pub fn_scan: FnScanConfig,
}

impl Family {
    /// Scalings for the star cross-check: the default battery, plus the even
    /// squares for the union whose second member only lives there.
    pub fn star_scalings(&self) -> Vec<ScalingSequence> {
        let mut out = default_scalings(&self.set);
        if self.spec == FamilySpec::NontangentUnion {
            out.push(ScalingSequence::Exp2Poly { a: 4.0, b: 0.0, c: 0.0 });
        }
        out
    }

    pub fn name(&self) -> String {
        self.spec.name()
    }

    pub fn classify_config(&self, seed: u64) -> ClassifyConfig {
        let mut c = ClassifyConfig::new(self.model.as_ref(), self.profile.clone());
        c.porosity_log2_max = self.porosity_log2_max;
        c.seed = seed;
        c.midgap = self.midgap.clone();
        c
    }
}

struct Truth {
    p: f64,
    p_src: &'static str,
    v: [bool; 3],
    v_src: &'static str,
    star: bool,
    star_src: &'static str,
    pre: &'static str,
}

impl Truth {
    fn build(self) -> GroundTruth {
        GroundTruth {
            porosity: self.p,
            porosity_source: self.p_src.into(),
            strongly_porous: Verdict::from_bool(self.v[0]),
            completely_strongly_porous: Verdict::from_bool(self.v[1]),
            omega_strongly_porous: Verdict::from_bool(self.v[2]),
            verdict_source: self.v_src.into(),
            star: Verdict::from_bool(self.star),
            star_source: self.star_src.into(),
            pretangent: self.pre.into(),
        }
    }
}

const DENSE: &str = "gaps of length at most 1 below h, so l(h)/h -> 0";
const NOT_POROUS: &str = "porosity 0 rules out strong porosity along any sequence";
const PAIR_QUARTER: &str = "the pair (R, 2R) gives F_2 = 1/4 at every radius";
const EUCLIDEAN: &str = "pretangent spaces along c r_n are isometric to a Euclidean space";

/// Neighbour ratios in factorial-type sets decay like 1/n and mid-gap ratios
/// like 1/sqrt(n): push the tail out and accept 1e-4 as zero.
fn factorial_profile() -> ToleranceProfile {
    ToleranceProfile { index_stride: 1 + 2520 * 400, eps_zero: 1e-4, ..ToleranceProfile::default() }
}

pub fn make_family(spec: &FamilySpec) -> Result<Family> {
    let line = |set: RaySet, symmetric: bool| -> Result<Arc<dyn MetricModel>> {
        Ok(Arc::new(LineModel::new(set, symmetric, spec.name())?))
    };
    let poly = ToleranceProfile::polynomial();
    let fn_at = |max: f64| FnScanConfig { radius_log2_max: max, ..FnScanConfig::default() };
    let (model, truth, profile, porosity_log2_max, midgap, fn_scan) = match spec {
        FamilySpec::Integers => (
            Arc::new(LineModel::integers()) as Arc<dyn MetricModel>,
            Truth { p: 0.0, p_src: DENSE, v: [false; 3], v_src: NOT_POROUS, star: false, star_src: PAIR_QUARTER, pre: EUCLIDEAN },
            poly,
            40.0,
            None,
            fn_at(40.0),
        ),
        FamilySpec::Lattice { dim } => {
            let m = LatticeModel::new(*dim)?;
            let cap = m.distance_set().horizon_cap_log2().unwrap_or(40.0).min(40.0);
            (
                Arc::new(m) as Arc<dyn MetricModel>,
                Truth {
                    p: 0.0,
                    p_src: "consecutive lattice norms differ by at most 1",
                    v: [false; 3],
                    v_src: NOT_POROUS,
                    star: false,
                    star_src: PAIR_QUARTER,
                    pre: EUCLIDEAN,
                },
                poly,
                cap,
                None,
                fn_at(40.0),
            )
        }
        FamilySpec::RealsHalfline => (
            line(RaySet::reals(), false)?,
            Truth {
                p: 0.0,
                p_src: "no gaps",
                v: [false; 3],
                v_src: NOT_POROUS,
                star: false,
                star_src: PAIR_QUARTER,
                pre: "pretangent spaces along c r_n are subsets of the half-line",
            },
            poly,
            40.0,
            None,
            fn_at(40.0),
        ),
        FamilySpec::Geometric { q } => {
            if !(*q > 1.0) {
                return Err(Error::input("geometric family needs q > 1"));
            }
            (
                line(RaySet::geometric(*q)?, false)?,
                Truth {
                    p: 1.0 - 1.0 / q,
                    p_src: "every gap (q^j, q^(j+1)) has ratio 1 - 1/q",
                    v: [false; 3],
                    v_src: "gap ratios are constant below 1",
                    star: false,
                    star_src: "the pair (q^j, q^(j+1)) gives F_2 = (q-1)/q^2",
                    pre: "along r_n = q^n pretangent spaces contain the points q^k, k in Z",
                },
                ToleranceProfile::default(),
                40.0,
                None,
                fn_at(40.0),
            )
        }
        FamilySpec::Factorial => (
            line(RaySet::factorial(), false)?,
            Truth {
                p: 1.0,
                p_src: "gap (n!, (n+1)!) has ratio n/(n+1)",
                v: [true; 3],
                v_src: "every escaping tau lies in some gap (n!, (n+1)!) or at its ends",
                star: true,
                star_src: "consecutive points differ by a factor n + 1",
                pre: "along r_n = n! samples are {α₀, 1}; along mid-gap scalings a single point",
            },
            factorial_profile(),
            40.0,
            Some(ScalingSequence::SetMidGap { set: RayRule::Factorial, slope: 1, offset: 1 }),
            fn_at(1200.0),
        ),
        FamilySpec::Superexp { c } => {
            if !(*c > 0.0) {
                return Err(Error::input("superexponential family needs c > 0"));
            }
            (
                line(RaySet::superexp(*c)?, false)?,
                Truth {
                    p: 1.0,
                    p_src: "gap ratios 1 - 2^(-c(2n+1))",
                    v: [true; 3],
                    v_src: "gap ratios tend to 1 and every point is a gap endpoint",
                    star: true,
                    star_src: "consecutive points differ by a factor 2^(c(2n+1))",
                    pre: "along 2^(c(n^2+n)) the single point α₀",
                },
                ToleranceProfile::superexponential(),
                40.0,
                Some(ScalingSequence::Exp2Poly { a: *c, b: *c, c: 0.0 }),
                fn_at(400.0),
            )
        }
        FamilySpec::IntervalUnion => (
            line(RaySet::interval_union(), false)?,
            Truth {
                p: 1.0,
                p_src: "gap ((2k+1)!, (2k+2)!) has ratio (2k+1)/(2k+2)",
                v: [true, false, false],
                v_src: "tau running through the integer points of the intervals meets no comparable gap",
                star: false,
                star_src: PAIR_QUARTER,
                pre: "along points inside the intervals, samples contain long segments",
            },
            factorial_profile(),
            40.0,
            Some(ScalingSequence::SetMidGap { set: RayRule::IntervalUnion, slope: 1, offset: 1 }),
            fn_at(200.0),
        ),
        FamilySpec::PerturbedLattice { delta, seed } => {
            let m = LatticeModel::perturbed(*delta, *seed)?;
            let cap = m.distance_set().horizon_cap_log2().unwrap_or(40.0).min(40.0);
            (
                Arc::new(m) as Arc<dyn MetricModel>,
                Truth {
                    p: 0.0,
                    p_src: "gaps of length at most 1 + 2 delta",
                    v: [false; 3],
                    v_src: NOT_POROUS,
                    star: false,
                    star_src: "pairs near (R, 2R) give F_2 near 1/4",
                    pre: "within Hausdorff distance delta of Z, so pretangent spaces are those of Z",
                },
                poly,
                cap,
                None,
                fn_at(40.0),
            )
        }
        FamilySpec::NontangentUnion => {
            let set = RaySet::new(RayRule::Union {
                members: vec![
                    RayRule::Superexp { c: 1.0, mult: 1.0, step: 1 },
                    RayRule::Superexp { c: 1.0, mult: 3.0, step: 2 },
                ],
            })?;
            (
                line(set, false)?,
                Truth {
                    p: 1.0,
                    p_src: "gaps (3 2^(n^2), 2^((n+1)^2)) have ratio tending to 1",
                    v: [true; 3],
                    v_src: "every escaping tau sits at the left end of a gap of ratio tending to 1",
                    star: false,
                    star_src: "the pair (2^(n^2), 3 2^(n^2)) gives F_2 = 2/9",
                    pre: "along 2^(n^2), the sample {α₀, 1} extends to {α₀, 1, 3} on even n",
                },
                ToleranceProfile::superexponential(),
                40.0,
                Some(ScalingSequence::Exp2Poly { a: 1.0, b: 1.0, c: 0.0 }),
                fn_at(400.0),
            )
        }
    };
    Ok(Family {
        spec: spec.clone(),
        set: model.distance_set(),
        model,
        truth: truth.build(),
        profile,
        porosity_log2_max,
        midgap,
        fn_scan,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementCheck {
    pub selector: String,
    pub weights_preserved: bool,
    pub commutes: bool,
    pub max_weight_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryReport {
    pub dim: usize,
    pub vertices: usize,
    pub complete: bool,
    pub cliques: usize,
    /// Largest `|ρ(c, c') - |c - c'||` over the grid, `α₀` as the origin.
    pub max_weight_error: f64,
    pub metric_violation: Option<String>,
    pub refinements: Vec<RefinementCheck>,
    pub tangency: TangencyVerdict,
    pub passed: bool,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Builds the pool `x_n` nearest to `c r_n` in `Z^dim` and compares the
/// stability graph with the Euclidean distances of the grid.
pub fn euclidean_isometry_check(
    dim: usize,
    r: &ScalingSequence,
    grid: &[Vec<f64>],
    profile: &ToleranceProfile,
    seed: u64,
) -> Result<IsometryReport> {
    if grid.len() > 50 {
        return Err(Error::input("coefficient grid larger than 50"));
    }
    if grid.iter().any(|c| c.len() != dim || c.iter().all(|x| *x == 0.0)) {
        return Err(Error::input(format!("grid vectors must be nonzero with {dim} entries")));
    }
    let model = LatticeModel::new(dim)?;
    let pool = coefficient_pool(grid, r);
    let g = build_stability_graph(&model, &pool, r, profile)?;
    let cliques = maximal_cliques(&g)?;
    let complete = g.edges().len() == g.len() * (g.len() - 1) / 2 && g.len() == grid.len() + 1;

    let origin = vec![0.0; dim];
    let coeff = |v: usize| -> Option<&Vec<f64>> {
        let c = &g.vertices[v];
        if c.alpha0 {
            Some(&origin)
        } else {
            c.members.first().map(|&i| &grid[i])
        }
    };
    let mut max_err: f64 = 0.0;
    for (a, b, w) in g.edges() {
        if let (Some(x), Some(y)) = (coeff(a), coeff(b)) {
            max_err = max_err.max((w - euclid(x, y)).abs());
        }
    }
    let metric_violation = cliques.iter().find_map(|c| c.metric_violation(profile.eps_rel));

    let battery = Selector::battery(seed);
    let mut refinements = Vec::new();
    for sel in &battery[..3] {
        let f = refine_by_subsequence(&model, &pool, r, sel, profile)?;
        refinements.push(RefinementCheck {
            selector: sel.name(),
            weights_preserved: f.weights_preserved,
            commutes: f.commutes,
            max_weight_error: f.max_weight_error,
        });
    }
    let clique: Vec<usize> = cliques.first().map(|c| c.vertices.clone()).unwrap_or_default();
    let tangency = tangency_probe(&model, &pool, r, &clique, &battery, &[], profile)?;
    let passed = complete
        && cliques.len() == 1
        && max_err <= 2.0 * profile.eps_rel
        && metric_violation.is_none()
        && refinements.iter().all(|f| f.weights_preserved && f.commutes)
        && matches!(tangency, TangencyVerdict::NoCounterexample { .. });
    Ok(IsometryReport {
        dim,
        vertices: g.len(),
        complete,
        cliques: cliques.len(),
        max_weight_error: max_err,
        metric_violation,
        refinements,
        tangency,
        passed,
    })
}

/// Eight directions on the unit circle.
pub fn circle_grid() -> Vec<Vec<f64>> {
    (0..8)
        .map(|k| {
            let t = std::f64::consts::FRAC_PI_4 * k as f64;
            vec![t.cos(), t.sin()]
        })
        .collect()
}

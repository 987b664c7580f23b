//! The full cross-check suite over the gallery.

use serde::{Deserialize, Serialize};

use super::{circle_grid, default_gallery, euclidean_isometry_check, make_family, GroundTruth, IsometryReport};
use crate::criteria::{classify_space, star_criterion, ClassificationReport, StarReport};
use crate::error::Result;
use crate::numeric::ToleranceProfile;
use crate::sequence::ScalingSequence;

/// Tolerance overrides shared by the CLI and the suite. `None` keeps the
/// family's own setting.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub eps_rel: Option<f64>,
    pub prefix_length: Option<usize>,
    /// `log2` of the largest porosity horizon.
    pub horizon_log2_max: Option<f64>,
    pub lambda: Option<f64>,
}

impl Overrides {
    pub fn apply_profile(&self, p: &mut ToleranceProfile) {
        if let Some(e) = self.eps_rel {
            p.eps_rel = e;
        }
        if let Some(n) = self.prefix_length {
            p.prefix_length = n;
        }
    }

    pub fn apply(&self, f: &mut super::Family) {
        self.apply_profile(&mut f.profile);
        if let Some(h) = self.horizon_log2_max {
            f.porosity_log2_max = h;
        }
        if let Some(l) = self.lambda {
            f.fn_scan.lambda = l;
        }
    }
}

/// Allowed distance between computed porosity and ground truth.
pub const POROSITY_TOLERANCE: f64 = 5e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyCheck {
    pub family: String,
    pub truth: GroundTruth,
    /// Error of the horizon-scan gap formula against the truth.
    pub porosity_error_schedule: f64,
    /// Error of the component-indexed tail limsup, when it settled.
    pub porosity_error_components: Option<f64>,
    pub classification: ClassificationReport,
    pub star: StarReport,
    pub problems: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub overrides: Overrides,
    pub families: Vec<FamilyCheck>,
    pub isometry: Vec<IsometryReport>,
    /// Every problem found, prefixed with its source.
    pub flags: Vec<String>,
    pub consistent: bool,
}

fn check_family(f: &super::Family, seed: u64) -> Result<FamilyCheck> {
    let c = classify_space(f.model.as_ref(), &f.classify_config(seed))?;
    let star = star_criterion(
        f.model.as_ref(),
        &f.star_scalings(),
        &crate::criteria::default_grid(f.model.dim()),
        &f.fn_scan,
        &f.profile,
    )?;
    let t = &f.truth;
    let mut problems: Vec<String> = c.flags.iter().map(|fl| fl.message.clone()).collect();

    let by_schedule = (c.porosity.value_by_gap_formula - t.porosity).abs();
    let by_components = c.strongly_porous.limsup.map(|v| (v - t.porosity).abs());
    if by_schedule > POROSITY_TOLERANCE && by_components.is_none_or(|e| e > POROSITY_TOLERANCE) {
        problems.push(format!(
            "porosity {} (components {:?}) against ground truth {}",
            c.porosity.value_by_gap_formula, c.strongly_porous.limsup, t.porosity
        ));
    }
    let verdicts = [
        ("strong porosity", c.strongly_porous.verdict, t.strongly_porous),
        ("complete strong porosity", c.completely_strongly_porous.verdict, t.completely_strongly_porous),
        ("omega strong porosity", c.omega_strongly_porous.verdict, t.omega_strongly_porous),
        ("star graphs", star.predicted_star, t.star),
    ];
    for (what, got, want) in verdicts {
        if got != want {
            problems.push(format!("{what}: computed {got:?}, ground truth {want:?}"));
        }
    }
    if star.contradiction {
        problems.push("a star was predicted but a non-star graph was built".into());
    }
    if star.predicted_star.is_definite() && !star.matches {
        problems.push("star observations disagree with the prediction".into());
    }
    Ok(FamilyCheck {
        family: f.name(),
        truth: t.clone(),
        porosity_error_schedule: by_schedule,
        porosity_error_components: by_components,
        classification: c,
        star,
        problems,
    })
}

/// Classification, star criterion and ground truth for every gallery family,
/// plus the Euclidean isometry checks on `Z` and `Z^2`.
pub fn verify_gallery(seed: u64, overrides: &Overrides) -> Result<VerifyReport> {
    let mut families = Vec::new();
    let mut flags = Vec::new();
    for spec in default_gallery() {
        let mut f = make_family(&spec)?;
        overrides.apply(&mut f);
        let check = check_family(&f, seed)?;
        flags.extend(check.problems.iter().map(|p| format!("{}: {p}", check.family)));
        families.push(check);
    }

    let mut profile = ToleranceProfile::polynomial();
    overrides.apply_profile(&mut profile);
    let line: Vec<Vec<f64>> = [-3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0].iter().map(|&c| vec![c]).collect();
    let mut isometry = Vec::new();
    for (dim, grid) in [(1, line), (2, circle_grid())] {
        let rep = euclidean_isometry_check(dim, &ScalingSequence::linear(), &grid, &profile, seed)?;
        if !rep.passed {
            flags.push(format!("isometry on Z^{dim} failed"));
        }
        isometry.push(rep);
    }
    Ok(VerifyReport { seed, overrides: overrides.clone(), families, isometry, consistent: flags.is_empty(), flags })
}

impl VerifyReport {
    pub fn flag_count(&self) -> usize {
        self.flags.len()
    }

    /// Families whose classification and ground truth agree on every verdict.
    pub fn clean_families(&self) -> Vec<&str> {
        self.families.iter().filter(|f| f.problems.is_empty()).map(|f| f.family.as_str()).collect()
    }
}

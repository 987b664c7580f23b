//! Batch front end shared by the `asymptolab` binary and the C bindings.
//!
//! A run reads a [`RunConfig`] (usually a JSON file), runs one command and
//! writes its report into an output directory. Wall-clock timings go to a
//! separate `timings.json` so that reports are byte-identical across runs.

pub mod output;

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::criteria::{
    classify_space, coefficient_pool, default_grid, scan_f_n_sup, ClassificationReport, ClassifyConfig, FnScanConfig,
    FnScanReport,
};
use crate::error::{Error, Result};
use crate::gallery::{make_family, verify_gallery, FamilySpec, Overrides, VerifyReport};
use crate::model::{LineModel, MetricModel};
use crate::numeric::ToleranceProfile;
use crate::porosity::{
    battery_verdicts, default_battery, default_schedule, is_strongly_porous, porosity_at_infinity, BatteryVerdict,
    PorosityEstimate, RayRule, RaySet, StrongPorosityVerdict, DEFAULT_RATIO_CAP,
};
use crate::pretangent::{build_stability_graph, maximal_cliques, PretangentSample, StabilityGraph};
use crate::sequence::ScalingSequence;
use output::{pow2_decimal, sig17, write_csv, write_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Porosity,
    Classify,
    Graph,
    FnScan,
    Verify,
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileName {
    #[default]
    Default,
    Polynomial,
    Superexponential,
}

impl ProfileName {
    pub fn profile(self) -> ToleranceProfile {
        match self {
            ProfileName::Default => ToleranceProfile::default(),
            ProfileName::Polynomial => ToleranceProfile::polynomial(),
            ProfileName::Superexponential => ToleranceProfile::superexponential(),
        }
    }
}

/// Everything a run depends on. The seed and this record fully determine the
/// report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    #[serde(default)]
    pub seed: u64,
    /// A gallery family ...
    pub family: Option<FamilySpec>,
    /// ... or an explicit distance-set rule, read as a subset of the line.
    pub rule: Option<RayRule>,
    /// With `rule`: the space is `E ∪ -E` instead of `E`.
    #[serde(default)]
    pub symmetric: bool,
    /// With `rule`: the tolerance profile to start from.
    #[serde(default)]
    pub profile: ProfileName,
    #[serde(default)]
    pub overrides: Overrides,
    /// Scaling for `graph` (default `r_n = n`).
    pub scaling: Option<ScalingSequence>,
    /// Coefficient grid for `graph`.
    pub grid: Option<Vec<Vec<f64>>>,
    /// Tuple size for `fn-scan` (default 2).
    pub fn_n: Option<usize>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// A model with the settings every command needs.
struct Input {
    model: Arc<dyn MetricModel>,
    profile: ToleranceProfile,
    classify: ClassifyConfig,
    fn_scan: FnScanConfig,
}

fn resolve(config: &RunConfig) -> Result<Input> {
    let o = &config.overrides;
    match (&config.family, &config.rule) {
        (Some(spec), None) => {
            let mut f = make_family(spec)?;
            o.apply(&mut f);
            let mut classify = f.classify_config(config.seed);
            o.apply_profile(&mut classify.porosity_profile);
            Ok(Input { classify, profile: f.profile.clone(), fn_scan: f.fn_scan.clone(), model: f.model })
        }
        (None, Some(rule)) => {
            let set = RaySet::new(rule.clone())?;
            let model: Arc<dyn MetricModel> = Arc::new(LineModel::new(set, config.symmetric, "rule")?);
            let mut profile = config.profile.profile();
            o.apply_profile(&mut profile);
            let mut classify = ClassifyConfig::new(model.as_ref(), profile.clone());
            classify.seed = config.seed;
            if let Some(h) = o.horizon_log2_max {
                classify.porosity_log2_max = h;
            }
            let mut fn_scan = FnScanConfig::default();
            if let Some(l) = o.lambda {
                fn_scan.lambda = l;
            }
            Ok(Input { model, profile, classify, fn_scan })
        }
        (Some(_), Some(_)) => Err(Error::Parse("give either `family` or `rule`, not both".into())),
        (None, None) => Err(Error::Parse("the spec needs a `family` or a `rule`".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PorosityReport {
    pub estimate: PorosityEstimate,
    pub strongly_porous: StrongPorosityVerdict,
    pub completely_strongly_porous: BatteryVerdict,
    pub omega_strongly_porous: BatteryVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphReport {
    pub graph: StabilityGraph,
    /// `(i, j, weight)` for every edge, `i < j`.
    pub edges: Vec<(usize, usize, f64)>,
    pub cliques: Vec<PretangentSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub porosity: PorosityReport,
    pub classification: ClassificationReport,
    pub graph: GraphReport,
    pub fn_scan: FnScanReport,
}

/// What a run produced, for the caller to pick an exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub command: Command,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
    /// Inconsistency flags (only `verify` raises them).
    pub flags: Vec<String>,
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    command: Command,
    config: &'a RunConfig,
    result: &'a T,
}

fn porosity(input: &Input) -> Result<PorosityReport> {
    let set = input.model.distance_set();
    let p = &input.classify.porosity_profile;
    let estimate = porosity_at_infinity(&set, &default_schedule(input.classify.porosity_log2_max), p)?;
    let strongly_porous = is_strongly_porous(&set, p)?;
    let (csp, omega) = battery_verdicts(&set, &default_battery(input.classify.seed), p, DEFAULT_RATIO_CAP)?;
    Ok(PorosityReport { estimate, strongly_porous, completely_strongly_porous: csp, omega_strongly_porous: omega })
}

fn graph(input: &Input, config: &RunConfig) -> Result<GraphReport> {
    let r = config.scaling.clone().unwrap_or_else(ScalingSequence::linear);
    let grid = config.grid.clone().unwrap_or_else(|| default_grid(input.model.dim()));
    if grid.iter().any(|c| c.len() != input.model.dim()) {
        return Err(Error::Parse(format!("grid vectors must have {} entries", input.model.dim())));
    }
    let g = build_stability_graph(input.model.as_ref(), &coefficient_pool(&grid, &r), &r, &input.profile)?;
    let cliques = maximal_cliques(&g)?;
    Ok(GraphReport { edges: g.edges(), graph: g, cliques })
}

fn fn_scan(input: &Input, config: &RunConfig) -> Result<FnScanReport> {
    let c = FnScanConfig { n: config.fn_n.unwrap_or(2), ..input.fn_scan.clone() };
    scan_f_n_sup(input.model.as_ref(), &c, &input.profile)
}

fn io_err(e: std::io::Error) -> Error {
    Error::Input(format!("writing reports: {e}"))
}

fn porosity_csv(dir: &Path, p: &PorosityReport) -> Result<()> {
    let rows: Vec<Vec<String>> = p
        .estimate
        .series
        .iter()
        .map(|s| vec![pow2_decimal(s.h.log2mag()), pow2_decimal(s.l.log2mag()), sig17(s.ratio)])
        .collect();
    write_csv(dir, "porosity.csv", &["h", "l", "ratio"], &rows).map_err(io_err)
}

fn fn_scan_csv(dir: &Path, r: &FnScanReport) -> Result<()> {
    let rows: Vec<Vec<String>> =
        r.radii_log2.iter().zip(&r.sups).map(|(l, s)| vec![pow2_decimal(*l), sig17(*s)]).collect();
    write_csv(dir, "fn_scan.csv", &["R", "sup_Fn"], &rows).map_err(io_err)
}

fn emit<T: Serialize>(dir: &Path, name: &str, command: Command, config: &RunConfig, result: &T) -> Result<()> {
    write_json(dir, name, &Envelope { command, config, result }).map_err(io_err)
}

/// Runs `config` and writes the report files into `out`.
pub fn run(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let command = config.command.ok_or_else(|| Error::Parse("no command given".into()))?;
    std::fs::create_dir_all(out).map_err(io_err)?;
    let start = Instant::now();
    let mut files = Vec::new();
    let mut flags = Vec::new();
    match command {
        Command::Verify => {
            let r: VerifyReport = verify_gallery(config.seed, &config.overrides)?;
            flags = r.flags.clone();
            emit(out, "verify.json", command, config, &r)?;
            files.push("verify.json".into());
        }
        _ => {
            let input = resolve(config)?;
            match command {
                Command::Porosity => {
                    let p = porosity(&input)?;
                    emit(out, "porosity.json", command, config, &p)?;
                    porosity_csv(out, &p)?;
                    files.extend(["porosity.json".into(), "porosity.csv".into()]);
                }
                Command::Classify => {
                    let c = classify_space(input.model.as_ref(), &input.classify)?;
                    emit(out, "classify.json", command, config, &c)?;
                    files.push("classify.json".into());
                }
                Command::Graph => {
                    emit(out, "graph.json", command, config, &graph(&input, config)?)?;
                    files.push("graph.json".into());
                }
                Command::FnScan => {
                    let r = fn_scan(&input, config)?;
                    emit(out, "fn_scan.json", command, config, &r)?;
                    fn_scan_csv(out, &r)?;
                    files.extend(["fn_scan.json".into(), "fn_scan.csv".into()]);
                }
                Command::Report => {
                    let b = Bundle {
                        porosity: porosity(&input)?,
                        classification: classify_space(input.model.as_ref(), &input.classify)?,
                        graph: graph(&input, config)?,
                        fn_scan: fn_scan(&input, config)?,
                    };
                    emit(out, "report.json", command, config, &b)?;
                    porosity_csv(out, &b.porosity)?;
                    fn_scan_csv(out, &b.fn_scan)?;
                    files.extend(["report.json".into(), "porosity.csv".into(), "fn_scan.csv".into()]);
                }
                Command::Verify => unreachable!(),
            }
        }
    }
    let timings = serde_json::json!({ "command": command, "seconds": start.elapsed().as_secs_f64() });
    write_json(out, "timings.json", &timings).map_err(io_err)?;
    log::info!("{command:?} finished in {:.3}s", start.elapsed().as_secs_f64());
    Ok(Outcome { command, files, flags })
}

/// Exit status for a finished or failed run: 0 ok, 1 inconsistency, 2 parse
/// or input error, 3 resource cap.
pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) if o.flags.is_empty() => 0,
        Ok(_) => 1,
        Err(Error::Resource(_)) => 3,
        Err(_) => 2,
    }
}

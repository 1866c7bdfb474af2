//! Experiment config: JSON schema, defaults and validation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bounds::TheoremId;
use crate::oracle::DEFAULT_ENUMERATION_CAP;
use crate::simulators::{
    BranchingSpec, CsbpSpec, GbmSpec, IncrementGenerator, LevyTriple, OffspringLaw, ProcessSpec,
    RandomWalkSpec, StepLaw, TimeGrid, TimeSeriesSpec, DEFAULT_POPULATION_CAP,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub estimation: Estimation,
    #[serde(default)]
    pub output: Output,
    pub instances: Vec<InstanceConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Estimation {
    pub paths: usize,
    pub seed: u64,
    pub grid_depth: u32,
    pub enumeration_cap: u64,
    pub population_cap: u64,
}

impl Default for Estimation {
    fn default() -> Self {
        Self {
            paths: 10_000,
            seed: 0,
            grid_depth: 8,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            population_cap: DEFAULT_POPULATION_CAP,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub dir: String,
    pub csv: String,
    pub json: String,
}

impl Default for Output {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            csv: "report.csv".into(),
            json: "summary.json".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub id: String,
    pub process: ProcessConfig,
    /// Required for continuous-time families.
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub alphas: Vec<f64>,
    pub theorems: Vec<String>,
    /// Exponent for `LP` rows.
    #[serde(default)]
    pub p: Option<f64>,
    /// Adds an `A_classical` row (`a = 1`) next to each `A` or `B` row.
    #[serde(default)]
    pub compare_classical: bool,
    /// Slope floor for `T2_slope`.
    #[serde(default)]
    pub ell: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub paths: Option<usize>,
    #[serde(default)]
    pub grid_depth: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub support: Vec<f64>,
    pub probs: Vec<f64>,
}

impl StepConfig {
    fn law(&self) -> crate::Result<StepLaw> {
        StepLaw::new(self.support.clone(), self.probs.clone())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorConfig {
    ShiftedExponential {
        rate: f64,
    },
    SelfExciting {
        rate: f64,
        excitation: f64,
        decay: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessConfig {
    /// Either `step` repeated `n_steps` times, or the list `steps`.
    RandomWalk {
        #[serde(default)]
        step: Option<StepConfig>,
        #[serde(default)]
        n_steps: Option<usize>,
        #[serde(default)]
        steps: Option<Vec<StepConfig>>,
        #[serde(default)]
        start: f64,
    },
    TimeSeries {
        ell: f64,
        n_steps: usize,
        #[serde(default)]
        start: f64,
        generator: GeneratorConfig,
    },
    GaltonWatson {
        offspring: Vec<f64>,
        generations: usize,
        #[serde(default = "one")]
        initial: u64,
    },
    Levy {
        #[serde(default)]
        sigma: f64,
        #[serde(default)]
        drift: f64,
        #[serde(default)]
        jump_rate: f64,
        #[serde(default)]
        jumps: Option<StepConfig>,
    },
    Branching {
        offspring: Vec<f64>,
        clock_rate: f64,
        #[serde(default = "one")]
        initial: u64,
    },
    Gbm {
        mu: f64,
        sigma: f64,
        #[serde(default = "one_f")]
        z: f64,
    },
    Csbp {
        beta: f64,
        k: f64,
        x0: f64,
    },
}

fn one() -> u64 {
    1
}

fn one_f() -> f64 {
    1.0
}

impl ProcessConfig {
    pub fn build(&self) -> crate::Result<ProcessSpec> {
        use crate::error::invalid;
        Ok(match self {
            Self::RandomWalk {
                step,
                n_steps,
                steps,
                start,
            } => match (step, n_steps, steps) {
                (Some(s), Some(n), None) => {
                    ProcessSpec::RandomWalk(RandomWalkSpec::homogeneous(s.law()?, *n, *start)?)
                }
                (None, None, Some(list)) => ProcessSpec::RandomWalk(RandomWalkSpec::new(
                    list.iter()
                        .map(StepConfig::law)
                        .collect::<crate::Result<_>>()?,
                    *start,
                )?),
                _ => {
                    return Err(invalid(
                        "random_walk needs either `step` with `n_steps`, or `steps`",
                    ))
                }
            },
            Self::TimeSeries {
                ell,
                n_steps,
                start,
                generator,
            } => {
                let generator = match *generator {
                    GeneratorConfig::ShiftedExponential { rate } => {
                        IncrementGenerator::ShiftedExponential { rate }
                    }
                    GeneratorConfig::SelfExciting {
                        rate,
                        excitation,
                        decay,
                    } => IncrementGenerator::SelfExciting {
                        rate,
                        excitation,
                        decay,
                    },
                };
                ProcessSpec::TimeSeries(TimeSeriesSpec::new(*ell, *n_steps, *start, generator)?)
            }
            Self::GaltonWatson {
                offspring,
                generations,
                initial,
            } => ProcessSpec::GaltonWatson {
                offspring: OffspringLaw::new(offspring.clone())?,
                generations: *generations,
                initial: *initial,
            },
            Self::Levy {
                sigma,
                drift,
                jump_rate,
                jumps,
            } => ProcessSpec::Levy(LevyTriple::new(
                *sigma,
                *drift,
                *jump_rate,
                jumps.as_ref().map(StepConfig::law).transpose()?,
            )?),
            Self::Branching {
                offspring,
                clock_rate,
                initial,
            } => ProcessSpec::Branching(BranchingSpec::new(
                OffspringLaw::new(offspring.clone())?,
                *clock_rate,
                *initial,
            )?),
            Self::Gbm { mu, sigma, z } => ProcessSpec::Gbm(GbmSpec::new(*mu, *sigma, *z)?),
            Self::Csbp { beta, k, x0 } => ProcessSpec::Csbp(CsbpSpec::new(*beta, *k, *x0)?),
        })
    }
}

/// One instance after validation, with every default resolved.
#[derive(Debug, Clone)]
pub struct Instance {
    pub id: String,
    pub spec: ProcessSpec,
    pub grid: TimeGrid,
    pub alphas: Vec<f64>,
    pub theorems: Vec<TheoremId>,
    pub p: f64,
    pub compare_classical: bool,
    pub ell: Option<f64>,
    pub seed: u64,
    pub paths: usize,
    pub enumeration_cap: u64,
    pub population_cap: u64,
}

/// Overrides given on the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub grid_depth: Option<u32>,
}

pub fn load(path: &Path) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<ExperimentConfig, String> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| format!("config: {e}"))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(format!(
            "config: unsupported schema_version {} (expected {SCHEMA_VERSION})",
            cfg.schema_version
        ));
    }
    Ok(cfg)
}

fn family_allows(spec: &ProcessSpec, theorem: TheoremId) -> bool {
    use TheoremId::*;
    match spec {
        ProcessSpec::RandomWalk(_) => matches!(theorem, A | RandomWalk | Lp),
        ProcessSpec::TimeSeries(_) => matches!(theorem, TimeSeries | Lp),
        ProcessSpec::GaltonWatson { .. } => matches!(theorem, A | Lp),
        ProcessSpec::Levy(_) => {
            matches!(theorem, B | Slope | IndepIncrements | Levy | LevyMax | Lp)
        }
        ProcessSpec::Branching(_) => matches!(theorem, B | Branching | Lp),
        ProcessSpec::Gbm(_) => matches!(theorem, B | Gbm | Lp),
        ProcessSpec::Csbp(_) => matches!(theorem, B | Csbp | Lp),
    }
}

/// Thresholds for `A`, `B`, `T5_branching`, `CSBP` and `GBM` are levels of
/// the process itself and must be positive; the exponential-transform
/// theorems take thresholds on the log scale.
fn needs_positive_alpha(theorem: TheoremId) -> bool {
    use TheoremId::*;
    matches!(theorem, A | B | Branching | Csbp | Gbm)
}

/// Theorem-specific preconditions beyond the family check.
fn check_theorem(inst: &Instance, theorem: TheoremId) -> Result<(), String> {
    use TheoremId::*;
    match (theorem, &inst.spec) {
        (Slope, ProcessSpec::Levy(t)) => {
            let ell = inst.ell.ok_or("T2_slope needs `ell`")?;
            if !(ell < 0.0) {
                return Err(format!("T2_slope needs ell < 0, got {ell}"));
            }
            if t.sigma() != 0.0 {
                return Err("T2_slope needs sigma = 0 (paths of bounded-below slope)".into());
            }
            if t.jump_rate() > 0.0 && t.jump_law().support().iter().any(|j| *j < 0.0) {
                return Err("T2_slope needs nonnegative jumps".into());
            }
            if !(t.drift() >= ell) {
                return Err(format!(
                    "T2_slope needs drift >= ell, got drift {} and ell {ell}",
                    t.drift()
                ));
            }
        }
        (Branching, ProcessSpec::Branching(b)) => {
            let mu = b.offspring().mean();
            if !(mu > 0.0 && mu < 1.0) {
                return Err(format!("T5_branching needs 0 < mu < 1, got mu = {mu}"));
            }
        }
        (Csbp, ProcessSpec::Csbp(c)) if !(c.beta() < 0.0) => {
            return Err(format!("CSBP needs beta < 0, got {}", c.beta()));
        }
        (Gbm, ProcessSpec::Gbm(g)) => {
            if !(g.mu() < 0.0) {
                return Err(format!("GBM needs mu < 0, got {}", g.mu()));
            }
            if let Some(a) = inst.alphas.iter().find(|a| !(**a > g.z())) {
                return Err(format!("GBM needs alpha > z = {}, got {a}", g.z()));
            }
        }
        (Lp, _) if !(inst.p > 1.0) => return Err(format!("LP needs p > 1, got {}", inst.p)),
        _ => {}
    }
    if theorem != Lp {
        if inst.alphas.is_empty() {
            return Err(format!("{theorem} needs at least one alpha"));
        }
        if let Some(a) = inst.alphas.iter().find(|a| !a.is_finite()) {
            return Err(format!("alpha must be finite, got {a}"));
        }
        if needs_positive_alpha(theorem) {
            if let Some(a) = inst.alphas.iter().find(|a| !(**a > 0.0)) {
                return Err(format!("{theorem} needs alpha > 0, got {a}"));
            }
        }
    }
    Ok(())
}

/// Resolves defaults and checks every instance. Errors name the instance.
pub fn validate(cfg: &ExperimentConfig, ov: Overrides) -> Result<Vec<Instance>, String> {
    if cfg.instances.is_empty() {
        return Err("config has no instances".into());
    }
    let base_seed = ov.seed.unwrap_or(cfg.estimation.seed);
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(cfg.instances.len());
    for (index, ic) in cfg.instances.iter().enumerate() {
        let fail = |msg: String| format!("instance {:?}: {msg}", ic.id);
        if !seen.insert(ic.id.clone()) {
            return Err(fail("duplicate instance id".into()));
        }
        let spec = ic.process.build().map_err(|e| fail(e.to_string()))?;
        let horizon = match (spec.steps(), ic.horizon) {
            (Some(n), _) => n as f64,
            (None, Some(h)) if h > 0.0 && h.is_finite() => h,
            (None, Some(h)) => return Err(fail(format!("horizon must be positive, got {h}"))),
            (None, None) => return Err(fail(format!("{} needs a horizon", spec.family()))),
        };
        let depth = ov
            .grid_depth
            .or(ic.grid_depth)
            .unwrap_or(cfg.estimation.grid_depth);
        if depth > 24 {
            return Err(fail(format!("grid depth {depth} exceeds 24")));
        }
        let paths = ov.paths.or(ic.paths).unwrap_or(cfg.estimation.paths);
        if paths < 100 {
            return Err(fail(format!(
                "at least 100 paths are required, got {paths}"
            )));
        }
        let theorems = ic
            .theorems
            .iter()
            .map(|t| t.parse::<TheoremId>().map_err(|e| fail(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        if theorems.is_empty() {
            return Err(fail("no theorems listed".into()));
        }
        let inst = Instance {
            id: ic.id.clone(),
            grid: TimeGrid::new(horizon, depth),
            spec,
            alphas: ic.alphas.clone(),
            p: ic.p.unwrap_or(2.0),
            compare_classical: ic.compare_classical,
            ell: ic.ell,
            seed: ic
                .seed
                .unwrap_or_else(|| base_seed.wrapping_add(index as u64)),
            paths,
            enumeration_cap: cfg.estimation.enumeration_cap,
            population_cap: cfg.estimation.population_cap,
            theorems: theorems.clone(),
        };
        for &t in &theorems {
            if t == TheoremId::ClassicalDoob {
                return Err(fail(
                    "A_classical is emitted through `compare_classical`, not listed".into(),
                ));
            }
            if !family_allows(&inst.spec, t) {
                return Err(fail(format!(
                    "theorem {t} does not apply to the {} family",
                    inst.spec.family()
                )));
            }
            check_theorem(&inst, t).map_err(fail)?;
        }
        out.push(inst);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_instance(process: &str, theorems: &str, alphas: &str) -> String {
        format!(
            r#"{{"schema_version": 1, "instances": [{{"id": "x", "process": {process},
                "horizon": 1.0, "alphas": {alphas}, "theorems": {theorems}}}]}}"#
        )
    }

    #[test]
    fn parses_and_resolves_defaults() {
        let text = one_instance(
            r#"{"family": "random_walk", "step": {"support": [1, -1], "probs": [0.2, 0.8]}, "n_steps": 2}"#,
            r#"["A"]"#,
            "[2.718281828459045]",
        );
        let cfg = parse(&text).unwrap();
        let inst = validate(&cfg, Overrides::default()).unwrap();
        assert_eq!(inst[0].grid.horizon, 2.0);
        assert_eq!(inst[0].seed, 0);
        assert_eq!(inst[0].p, 2.0);
        let inst = validate(
            &cfg,
            Overrides {
                seed: Some(9),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(inst[0].seed, 9);
    }

    #[test]
    fn mismatch_names_instance() {
        let text = one_instance(
            r#"{"family": "gbm", "mu": -0.5, "sigma": 1.0}"#,
            r#"["T5_branching"]"#,
            "[2.0]",
        );
        let err = validate(&parse(&text).unwrap(), Overrides::default()).unwrap_err();
        assert!(err.contains("\"x\""), "{err}");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(parse(r#"{"schema_version": 2, "instances": []}"#).is_err());
        assert!(parse(r#"{"schema_version": 1, "instances": [], "extra": 1}"#).is_err());
        let supercritical = one_instance(
            r#"{"family": "branching", "offspring": [0.2, 0.0, 0.8], "clock_rate": 1.0}"#,
            r#"["T5_branching"]"#,
            "[2.0]",
        );
        assert!(validate(&parse(&supercritical).unwrap(), Overrides::default()).is_err());
        let low_alpha = one_instance(
            r#"{"family": "gbm", "mu": -0.5, "sigma": 1.0}"#,
            r#"["GBM"]"#,
            "[0.5]",
        );
        assert!(validate(&parse(&low_alpha).unwrap(), Overrides::default()).is_err());
        let no_ell = one_instance(
            r#"{"family": "levy", "drift": 0.1, "jump_rate": 1.0, "jumps": {"support": [0.5], "probs": [1.0]}}"#,
            r#"["T2_slope"]"#,
            "[1.0]",
        );
        assert!(validate(&parse(&no_ell).unwrap(), Overrides::default()).is_err());
    }
}

//! Experiment configuration. JSON with a published schema; unknown keys are rejected.

use std::path::Path;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::equivariance::EquivarianceSpec;
use crate::error::{Error, Result};
use crate::flow::FlowConfig;
use crate::grid::{DomainGrid, GridSpec};
use crate::lie::{AbelianStrategy, AlgebraId};
use crate::map::{MapSpec, RANK_TOL};
use crate::metric::MetricSpec;
use crate::stencil::StencilOrder;
use crate::target::TargetSpace;
use crate::weyl::{GauduchonConfig, HiggsSpec};

fn flat() -> MetricSpec {
    MetricSpec::Flat
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub grid: GridSpec,
    #[serde(default = "flat")]
    pub metric: MetricSpec,
    #[serde(default)]
    pub stencil: StencilOrder,
}

fn rank_tol() -> f64 {
    RANK_TOL
}
fn ricci_tol() -> f64 {
    1e-10
}
fn shift() -> f64 {
    0.1
}
fn detector_iterations() -> usize {
    500
}

/// Residuals and monitors run after the fields are built (and after the flow, if any).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum Verification {
    BochnerGeneral,
    /// Both elliptic Weyl identities.
    BochnerWeyl,
    /// Parabolic identities at the last flow state; needs a flow.
    BochnerParabolic,
    /// Distance inequality between `u(t)` and `u0` at every monitor step; needs a flow.
    Syineq,
    Sampson,
    HermitianTension,
    Pluriharmonic,
    RicciCond {
        #[serde(default = "ricci_tol")]
        rank_tolerance: f64,
    },
    ParallelSection {
        #[serde(default = "shift")]
        shift: f64,
        #[serde(default = "detector_iterations")]
        max_iterations: usize,
    },
    RankProfile {
        #[serde(default = "rank_tol")]
        tolerance: f64,
    },
    WeylClass,
    /// Harmonic flow for `exp(-V) g` from the same initial map, compared with the
    /// Weyl flow; needs an exact Higgs field and a flow.
    ExactEquivalence,
}

impl Verification {
    pub fn name(&self) -> &'static str {
        match self {
            Verification::BochnerGeneral => "bochner_general",
            Verification::BochnerWeyl => "bochner_weyl",
            Verification::BochnerParabolic => "bochner_parabolic",
            Verification::Syineq => "syineq",
            Verification::Sampson => "sampson",
            Verification::HermitianTension => "hermitian_tension",
            Verification::Pluriharmonic => "pluriharmonic",
            Verification::RicciCond { .. } => "ricci_cond",
            Verification::ParallelSection { .. } => "parallel_section",
            Verification::RankProfile { .. } => "rank_profile",
            Verification::WeylClass => "weyl_class",
            Verification::ExactEquivalence => "exact_equivalence",
        }
    }

    pub fn needs_flow(&self) -> bool {
        matches!(
            self,
            Verification::BochnerParabolic | Verification::Syineq | Verification::ExactEquivalence
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AlgebraEntry {
    pub algebra: AlgebraId,
    pub sizes: Vec<usize>,
}

fn trials() -> usize {
    256
}
fn certified() -> AbelianStrategy {
    AbelianStrategy::Certified
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AbelianSuite {
    pub algebras: Vec<AlgebraEntry>,
    #[serde(default = "certified")]
    pub strategy: AbelianStrategy,
    #[serde(default = "trials")]
    pub trials: usize,
}

impl Default for AbelianSuite {
    fn default() -> Self {
        AbelianSuite {
            algebras: vec![
                AlgebraEntry {
                    algebra: AlgebraId::So,
                    sizes: vec![3, 4, 5],
                },
                AlgebraEntry {
                    algebra: AlgebraId::Su,
                    sizes: vec![2, 3],
                },
                AlgebraEntry {
                    algebra: AlgebraId::Sp,
                    sizes: vec![1, 2],
                },
            ],
            strategy: certified(),
            trials: trials(),
        }
    }
}

fn out_dir() -> String {
    "out".into()
}
fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "out_dir")]
    pub dir: String,
    /// Write the final map as `final_map.csv` after a flow.
    #[serde(default = "yes")]
    pub write_map: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: out_dir(),
            write_map: true,
        }
    }
}

/// One experiment. Sections a subcommand does not use may be omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub domain: Option<DomainConfig>,
    #[serde(default)]
    pub higgs: HiggsSpec,
    #[serde(default)]
    pub target: Option<TargetSpace>,
    #[serde(default)]
    pub equivariance: EquivarianceSpec,
    #[serde(default)]
    pub initial_map: Option<MapSpec>,
    #[serde(default)]
    pub flow: FlowConfig,
    /// Replace `(g, Theta)` by its Gauduchon gauge before anything else runs.
    #[serde(default)]
    pub gauduchon: Option<GauduchonConfig>,
    #[serde(default)]
    pub verify: Vec<Verification>,
    #[serde(default)]
    pub abelian: Option<AbelianSuite>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// The published JSON schema.
    pub fn schema() -> String {
        let schema = schemars::schema_for!(ExperimentConfig);
        serde_json::to_string_pretty(&schema).expect("schema serializes")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn domain(&self) -> Result<&DomainConfig> {
        self.domain
            .as_ref()
            .ok_or_else(|| Error::Config("missing 'domain' section".into()))
    }

    pub fn grid(&self) -> Result<DomainGrid> {
        DomainGrid::try_from(self.domain()?.grid.clone())
    }

    /// `"N"` sets every axis to `N`; `"N1,N2,..."` sets each axis.
    pub fn override_grid(&mut self, spec: &str) -> Result<()> {
        let sizes: Vec<usize> = spec
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("grid override '{spec}': {e}")))?;
        let domain = self
            .domain
            .as_mut()
            .ok_or_else(|| Error::Config("grid override needs a 'domain' section".into()))?;
        let dim = domain.grid.sizes.len();
        domain.grid.sizes = match sizes.len() {
            1 => vec![sizes[0]; dim],
            k if k == dim => sizes,
            k => return Err(Error::Config(format!("grid override has {k} sizes for a {dim}-dimensional grid"))),
        };
        Ok(())
    }

    /// Checks that the sections a subcommand needs are present, before any computation.
    pub fn validate_for(&self, command: Command) -> Result<()> {
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("'{}' needs a '{what}' section", command.name())))
            }
        };
        match command {
            Command::Abelian => return Ok(()),
            Command::Report => return Err(Error::Config("'report' re-emits an existing report".into())),
            _ => {}
        }
        need(self.domain.is_some(), "domain")?;
        if matches!(command, Command::Flow | Command::Verify | Command::Classify) {
            need(self.target.is_some(), "target")?;
            need(self.initial_map.is_some(), "initial_map")?;
        }
        if command == Command::Flow {
            self.flow.validate()?;
        }
        if command != Command::Flow {
            if let Some(v) = self.verify.iter().find(|v| v.needs_flow()) {
                return Err(Error::Config(format!("check '{}' needs a flow run", v.name())));
            }
        }
        if self.verify.contains(&Verification::ExactEquivalence) && self.higgs.potential().is_none() {
            return Err(Error::Config("check 'exact_equivalence' needs an exact Higgs field".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Flow,
    Verify,
    Gauduchon,
    Classify,
    Abelian,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Flow => "flow",
            Command::Verify => "verify",
            Command::Gauduchon => "gauduchon",
            Command::Classify => "classify",
            Command::Abelian => "abelian",
            Command::Report => "report",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "domain": {"grid": {"sizes": [8, 8], "lengths": [6.283185307179586, 6.283185307179586]}},
        "target": {"kind": "circle", "radius": 1.0},
        "initial_map": {"family": "linear", "winding": [[1.0, 0.0]]}
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.domain.as_ref().unwrap().metric, MetricSpec::Flat);
        assert_eq!(c.higgs, HiggsSpec::Zero);
        assert!(c.verify.is_empty());
        assert_eq!(c.output.dir, "out");
        c.validate_for(Command::Flow).unwrap();
    }

    #[test]
    fn unknown_keys_and_kinds_are_rejected() {
        let bad_kind = MINIMAL.replace("\"circle\"", "\"klein_bottle\"");
        assert!(matches!(ExperimentConfig::from_json(&bad_kind), Err(Error::Config(_))));
        let extra = MINIMAL.replacen('{', "{\"colour\": 3,", 1);
        assert!(ExperimentConfig::from_json(&extra).is_err());
        let nested = MINIMAL.replace("\"radius\": 1.0", "\"radius\": 1.0, \"m\": 1");
        assert!(ExperimentConfig::from_json(&nested).is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::from_json(MINIMAL).unwrap();
        let b = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let mut c = a.clone();
        c.seed = 1;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn grid_override_forms() {
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        c.override_grid("16").unwrap();
        assert_eq!(c.domain.as_ref().unwrap().grid.sizes, vec![16, 16]);
        c.override_grid("12,4").unwrap();
        assert_eq!(c.domain.as_ref().unwrap().grid.sizes, vec![12, 4]);
        assert!(c.override_grid("1,2,3").is_err());
        assert!(c.override_grid("x").is_err());
    }

    #[test]
    fn flow_only_checks_are_refused_elsewhere() {
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        c.verify.push(Verification::Syineq);
        assert!(c.validate_for(Command::Verify).is_err());
        assert!(c.validate_for(Command::Flow).is_ok());
        c.verify.push(Verification::ExactEquivalence);
        assert!(c.validate_for(Command::Flow).is_err());
    }

    #[test]
    fn schema_lists_the_sections() {
        let s = ExperimentConfig::schema();
        for key in ["domain", "higgs", "target", "initial_map", "flow", "verify", "seed"] {
            assert!(s.contains(&format!("\"{key}\"")), "{key}");
        }
    }
}

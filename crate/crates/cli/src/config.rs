//! Experiment configuration: one TOML file per run, unknown keys rejected.

use std::path::{Path, PathBuf};

use orbtrace::profinite::ExplicitAction;
use orbtrace::shadowing::GenerationMode;
use orbtrace::toral::ToralActionSpec;
use orbtrace::{
    build_heisenberg_example, catalog, Alphabet, Dyadic, GroupFamily, GroupSpec, IntegerMatrix, Pattern, SftSpec,
    ShiftSpace,
};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SftTrace,
    SftSynthesize,
    ExpansivenessWindow,
    ToralStability,
    CantorTrace,
    GeneratingSetCompare,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SftTrace => "sft-trace",
            ExperimentKind::SftSynthesize => "sft-synthesize",
            ExperimentKind::ExpansivenessWindow => "expansiveness-window",
            ExperimentKind::ToralStability => "toral-stability",
            ExperimentKind::CantorTrace => "cantor-trace",
            ExperimentKind::GeneratingSetCompare => "generating-set-compare",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    pub group: GroupBlock,
    #[serde(default)]
    pub output: OutputBlock,
    pub sft: Option<SftBlock>,
    pub tolerance: Option<ToleranceBlock>,
    pub trace: Option<TraceBlock>,
    pub uniqueness: Option<UniquenessBlock>,
    pub synthesize: Option<SynthesizeBlock>,
    pub expansiveness: Option<ExpansivenessBlock>,
    pub toral: Option<ToralBlock>,
    pub compare: Option<CompareBlock>,
    pub chain: Option<ChainBlock>,
    pub cantor: Option<CantorBlock>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    IntegerLattice,
    FreeGroup,
    Heisenberg,
    Cyclic,
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GroupBlock {
    pub family: FamilyName,
    /// Dimension, rank or modulus; unused for the Heisenberg group.
    pub parameter: Option<u64>,
    /// Generators in normal-form syntax; inverses are added. Defaults to the
    /// family's canonical generators.
    pub generators: Option<Vec<String>>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// Report path, relative to the config file. Defaults to `report.json`.
    pub report: Option<PathBuf>,
    /// Optional per-point CSV (toral-stability only).
    pub grid_csv: Option<PathBuf>,
    /// Records elapsed seconds; off by default so reports are reproducible.
    #[serde(default)]
    pub wall_clock: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SftBlock {
    /// Alphabet symbols in order. Defaults to `01`.
    pub alphabet: Option<String>,
    /// A catalog name: full, golden-mean, even-window, hard-square,
    /// free-one-forbidden.
    pub catalog: Option<String>,
    /// Window radius `M` for `full` and for explicit forbidden patterns.
    pub window_radius: Option<u32>,
    /// Forbidden partial patterns on `ball(M)`: lists of
    /// `[ball position, symbol index]` pairs.
    pub forbidden: Option<Vec<Vec<(usize, u8)>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ToleranceBlock {
    /// Tracing level `m`; `delta = 2^-(m+1)`.
    pub level: Option<u32>,
    /// Target `epsilon` as a dyadic (`2^-3`, `1/8`, `0.125`).
    pub epsilon: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    PerturbedOrbit,
    RandomFlip,
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TraceBlock {
    /// Radius `R` of the ball indexing the field.
    pub outer_radius: u32,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_mode")]
    pub mode: ModeName,
    /// Radius of every field entry; defaults to `m + 4`.
    pub inner_radius: Option<u32>,
    /// Probability that an entry is perturbed.
    pub perturb_fraction: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct UniquenessBlock {
    /// Expansive constant `eta`.
    pub eta: String,
    pub candidate_radius: u32,
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Number of fields checked (seeds `seed..seed + fields`).
    #[serde(default = "default_one")]
    pub fields: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SynthesizeBlock {
    /// Level `m`; forbidden words live on `ball(m + 1)`.
    pub level: u32,
    #[serde(default = "default_slack")]
    pub slack: u32,
    /// Block radius at which the source and synthesized languages are compared.
    pub compare_radius: u32,
    /// Enumerated ball radius; defaults to `max(compare_radius, m + 1 + slack) + m + 2`.
    pub space_radius: Option<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExpansivenessBlock {
    pub eta: String,
    pub epsilons: Vec<String>,
    #[serde(default = "default_max_k")]
    pub max_k: u32,
    #[serde(default)]
    pub slack: u32,
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Enumerated ball radius; defaults to `max_k + t + j + slack + 2`
    /// with `t`, `j` the agreement radii `eta` and the smallest epsilon demand.
    pub space_radius: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum ScalarName {
    F64,
    F32,
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct HeisenbergBlock {
    pub x: Vec<Vec<i64>>,
    pub y: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ToralBlock {
    /// One integer matrix per canonical generator of the group.
    pub matrices: Option<Vec<Vec<Vec<i64>>>>,
    /// Heisenberg action assembled from the integer matrices `x` and `y`.
    pub heisenberg: Option<HeisenbergBlock>,
    #[serde(default)]
    pub amplitude: f64,
    /// Orbit window `W`.
    #[serde(default = "default_word_budget")]
    pub word_budget: usize,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_scalar")]
    pub scalar: ScalarName,
    /// Passing requires `sup |f - Id| <= bound_factor * C * delta`.
    #[serde(default = "default_bound_factor")]
    pub bound_factor: f64,
    /// Passing requires the hyperbolic generator's equivariance residual
    /// below this; other generators pass below it or within a factor 10 of
    /// the perturbation's relation defect.
    #[serde(default = "default_equivariance_tolerance")]
    pub equivariance_tolerance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CompareBlock {
    /// The second generating set `B`; `A` comes from the group block.
    pub generators_b: Vec<String>,
    #[serde(default = "default_delta_prime")]
    pub delta_prime: f64,
    #[serde(default = "default_compare_samples")]
    pub samples: usize,
    #[serde(default = "default_compare_grid")]
    pub grid: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum ChainKindName {
    Odometer,
    Lattice,
    Table,
    Explicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum ActionName {
    Identity,
    Flip,
    Shift,
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ChainBlock {
    pub kind: ChainKindName,
    /// Index base for odometer and lattice chains.
    pub base: Option<u64>,
    pub depth: Option<u32>,
    /// Coset table CSV, relative to the config file.
    pub table: Option<PathBuf>,
    /// Action on `{0,1}^G` for the explicit kind.
    pub action: Option<ActionName>,
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CantorBlock {
    /// Target level `m`: `epsilon = 2^-m`.
    pub level: u32,
    /// Field agreement level; defaults to the certified modulus.
    pub k: Option<u32>,
    /// Radius of the ball indexing the field.
    pub radius: u32,
    /// Radius of the symbol configurations (explicit kind).
    #[serde(default)]
    pub config_radius: u32,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Checks cylinder preservation through this level.
    pub cylinder_level: Option<u32>,
}

fn default_samples() -> usize {
    100
}
fn default_mode() -> ModeName {
    ModeName::PerturbedOrbit
}
fn default_budget() -> u64 {
    1 << 22
}
fn default_one() -> usize {
    1
}
fn default_slack() -> u32 {
    6
}
fn default_max_k() -> u32 {
    10
}
fn default_word_budget() -> usize {
    30
}
fn default_grid() -> usize {
    32
}
fn default_scalar() -> ScalarName {
    ScalarName::F64
}
fn default_bound_factor() -> f64 {
    1.25
}
fn default_equivariance_tolerance() -> f64 {
    1e-6
}
fn default_delta_prime() -> f64 {
    1e-2
}
fn default_compare_samples() -> usize {
    100
}
fn default_compare_grid() -> usize {
    16
}

pub fn schema() -> schemars::schema::RootSchema {
    schemars::schema_for!(ExperimentConfig)
}

pub fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// A parsed config plus the directory relative paths resolve against.
pub struct Loaded {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    let config: ExperimentConfig = toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    config.check_sections()?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, base_dir })
}

pub fn parse_dyadic(what: &str, s: &str) -> Result<Dyadic, CliError> {
    s.parse().map_err(|e| config_error(format!("{what}: {e}")))
}

impl ExperimentConfig {
    fn check_sections(&self) -> Result<(), CliError> {
        use ExperimentKind::*;
        let present: [(&str, bool); 10] = [
            ("sft", self.sft.is_some()),
            ("tolerance", self.tolerance.is_some()),
            ("trace", self.trace.is_some()),
            ("uniqueness", self.uniqueness.is_some()),
            ("synthesize", self.synthesize.is_some()),
            ("expansiveness", self.expansiveness.is_some()),
            ("toral", self.toral.is_some()),
            ("compare", self.compare.is_some()),
            ("chain", self.chain.is_some()),
            ("cantor", self.cantor.is_some()),
        ];
        let (required, optional): (&[&str], &[&str]) = match self.experiment {
            SftTrace => (&["sft", "tolerance", "trace"], &["uniqueness"]),
            SftSynthesize => (&["sft", "synthesize"], &[]),
            ExpansivenessWindow => (&["sft", "expansiveness"], &[]),
            ToralStability => (&["toral"], &[]),
            CantorTrace => (&["chain", "cantor"], &[]),
            GeneratingSetCompare => (&["toral", "compare"], &[]),
        };
        for (name, is_present) in present {
            if required.contains(&name) && !is_present {
                return Err(config_error(format!("{} requires a [{name}] section", self.experiment.name())));
            }
            if is_present && !required.contains(&name) && !optional.contains(&name) {
                return Err(config_error(format!("[{name}] is not used by {}", self.experiment.name())));
            }
        }
        if self.output.grid_csv.is_some() && self.experiment != ToralStability {
            return Err(config_error("grid_csv is only produced by toral-stability"));
        }
        Ok(())
    }

    pub fn family(&self) -> Result<GroupFamily, CliError> {
        let g = &self.group;
        let param = |what: &str| {
            g.parameter
                .filter(|&p| p >= 1)
                .ok_or_else(|| config_error(format!("group parameter ({what}) must be a positive integer")))
        };
        Ok(match g.family {
            FamilyName::IntegerLattice => GroupFamily::IntegerLattice(param("dimension")? as usize),
            FamilyName::FreeGroup => GroupFamily::FreeGroup(param("rank")? as usize),
            FamilyName::Cyclic => GroupFamily::CyclicFinite(param("modulus")?),
            FamilyName::Heisenberg => {
                if g.parameter.is_some() {
                    return Err(config_error("the Heisenberg group takes no parameter"));
                }
                GroupFamily::HeisenbergZ
            }
        })
    }

    pub fn group_spec(&self) -> Result<GroupSpec, CliError> {
        let family = self.family()?;
        match &self.group.generators {
            None => Ok(GroupSpec::standard(family)),
            Some(list) => generators(family, list),
        }
    }

    pub fn shift_space(&self, radius: u32) -> Result<ShiftSpace, CliError> {
        let alphabet = match self.sft.as_ref().and_then(|s| s.alphabet.as_ref()) {
            None => Alphabet::binary(),
            Some(s) => Alphabet::new(s.chars().collect()).map_err(CliError::from_config)?,
        };
        ShiftSpace::new(self.group_spec()?, alphabet, radius).map_err(CliError::from_lib)
    }

    /// Window radius of the SFT, known before the space is built.
    pub fn sft_window(&self) -> Result<u32, CliError> {
        let s = self.sft.as_ref().expect("checked");
        match (&s.catalog, s.window_radius) {
            (Some(name), w) if name == "full" => Ok(w.unwrap_or(0)),
            (Some(_), Some(_)) => Err(config_error("window_radius is only set for the full shift or explicit patterns")),
            (Some(_), None) => Ok(1),
            (None, Some(w)) => Ok(w),
            (None, None) => Err(config_error("[sft] needs a catalog name or window_radius with forbidden patterns")),
        }
    }

    pub fn sft(&self, space: &ShiftSpace) -> Result<SftSpec, CliError> {
        let s = self.sft.as_ref().expect("checked");
        let window = self.sft_window()?;
        match (&s.catalog, &s.forbidden) {
            (Some(_), Some(_)) => Err(config_error("[sft] takes either catalog or forbidden, not both")),
            (Some(name), None) => catalog::by_name(space, name, window).map_err(CliError::from_config),
            (None, forbidden) => {
                let patterns = forbidden
                    .iter()
                    .flatten()
                    .map(|cells| Pattern::new(cells.clone()))
                    .collect::<orbtrace::Result<Vec<_>>>()
                    .map_err(CliError::from_config)?;
                SftSpec::from_forbidden_partials(space, window, &patterns).map_err(CliError::from_config)
            }
        }
    }

    pub fn toral_spec(&self) -> Result<ToralActionSpec, CliError> {
        let t = self.toral.as_ref().expect("checked");
        let family = self.family()?;
        let matrix = |rows: &Vec<Vec<i64>>| IntegerMatrix::unimodular(rows.clone()).map_err(CliError::from_config);
        match (&t.matrices, &t.heisenberg) {
            (Some(_), Some(_)) => Err(config_error("[toral] takes either matrices or heisenberg, not both")),
            (None, None) => Err(config_error("[toral] needs matrices or a heisenberg block")),
            (Some(list), None) => {
                let ms = list.iter().map(matrix).collect::<Result<Vec<_>, _>>()?;
                ToralActionSpec::new(family, ms).map_err(CliError::from_config)
            }
            (None, Some(h)) => {
                if family != GroupFamily::HeisenbergZ {
                    return Err(config_error("the heisenberg block needs the heisenberg group family"));
                }
                build_heisenberg_example(&matrix(&h.x)?, &matrix(&h.y)?).map_err(CliError::from_config)
            }
        }
    }

    pub fn generation_mode(&self) -> GenerationMode {
        match self.trace.as_ref().map(|t| t.mode) {
            Some(ModeName::RandomFlip) => GenerationMode::RandomFlip,
            _ => GenerationMode::PerturbedOrbit,
        }
    }
}

pub fn generators(family: GroupFamily, list: &[String]) -> Result<GroupSpec, CliError> {
    let parsed = list
        .iter()
        .map(|s| family.parse(s))
        .collect::<orbtrace::Result<Vec<_>>>()
        .map_err(CliError::from_config)?;
    GroupSpec::new(family, parsed).map_err(CliError::from_config)
}

pub fn explicit_action(a: ActionName) -> ExplicitAction {
    match a {
        ActionName::Identity => ExplicitAction::Identity,
        ActionName::Flip => ExplicitAction::Flip,
        ActionName::Shift => ExplicitAction::Shift,
    }
}

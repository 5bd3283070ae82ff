//! Experiment configuration: one TOML document fully determines a run.
//!
//! Defaults cover every section, so a minimal spec is just
//! `[experiment]\nkind = "..."` plus whichever detectors/attacks the kind
//! needs. Unknown keys are rejected everywhere to catch typos.

use serde::{Deserialize, Serialize};

use super::landscapes::Family;
use super::HarnessError;
use crate::attack::{
    AttackConfig, AttackKind, SignConvention, DEFAULT_ALPHA_MAX, DEFAULT_ALPHA_MIN,
    DEFAULT_DIFFERENCE_STEP, DEFAULT_MAX_QUERIES,
};
use crate::imageproc::{DefenseSpec, QualityTier};
use crate::renderer::{
    RenderConfig, DEFAULT_DEGRADATION_GAIN, DEFAULT_LIGHT_DIRECTION, DEFAULT_RESOLUTION,
};
use crate::viewpath::{
    ViewPath, DEFAULT_CENTER, DEFAULT_PITCH_AMPLITUDE, DEFAULT_VIEW_COUNT, DEFAULT_YAW_AMPLITUDE,
};

pub const DEFAULT_QUERY_CHECKPOINTS: [u64; 6] = [10, 25, 50, 100, 200, 360];
pub const DEFAULT_ABLATION_VIEW_COUNTS: [u32; 6] = [12, 36, 90, 180, 360, 720];

// ---------------------------------------------------------------------------
// Experiment kind and oracle flavor
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SuccessMatrix,
    QueryCurve,
    TransferMatrix,
    DefenseEval,
    KAblation,
    AngleHeatmap,
    ViewHistogram,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::SuccessMatrix,
        ExperimentKind::QueryCurve,
        ExperimentKind::TransferMatrix,
        ExperimentKind::DefenseEval,
        ExperimentKind::KAblation,
        ExperimentKind::AngleHeatmap,
        ExperimentKind::ViewHistogram,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::SuccessMatrix => "success_matrix",
            ExperimentKind::QueryCurve => "query_curve",
            ExperimentKind::TransferMatrix => "transfer_matrix",
            ExperimentKind::DefenseEval => "defense_eval",
            ExperimentKind::KAblation => "k_ablation",
            ExperimentKind::AngleHeatmap => "angle_heatmap",
            ExperimentKind::ViewHistogram => "view_histogram",
        }
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What the attacks query: trained detectors over renders, or scripted
/// loss landscapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleFlavor {
    Rendered,
    Scripted,
}

impl OracleFlavor {
    pub fn as_str(&self) -> &'static str {
        match self {
            OracleFlavor::Rendered => "rendered",
            OracleFlavor::Scripted => "scripted",
        }
    }
}

impl std::fmt::Display for OracleFlavor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

// ---------------------------------------------------------------------------
// Sections
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_oracle")]
    pub oracle: OracleFlavor,
}

fn default_seed() -> u64 {
    42
}

fn default_oracle() -> OracleFlavor {
    OracleFlavor::Rendered
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathSection {
    pub view_count: u32,
    pub yaw_amplitude: f64,
    pub pitch_amplitude: f64,
    pub center: f64,
}

impl Default for PathSection {
    fn default() -> Self {
        Self {
            view_count: DEFAULT_VIEW_COUNT,
            yaw_amplitude: DEFAULT_YAW_AMPLITUDE,
            pitch_amplitude: DEFAULT_PITCH_AMPLITUDE,
            center: DEFAULT_CENTER,
        }
    }
}

impl PathSection {
    pub fn build(&self) -> Result<ViewPath, HarnessError> {
        Ok(ViewPath::new(self.view_count, self.yaw_amplitude, self.pitch_amplitude, self.center)?)
    }

    /// Same angle family on a different ring size.
    pub fn build_with_view_count(&self, view_count: u32) -> Result<ViewPath, HarnessError> {
        Ok(ViewPath::new(view_count, self.yaw_amplitude, self.pitch_amplitude, self.center)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderSection {
    pub resolution: u32,
    pub degradation_gain: f64,
    pub color: bool,
    pub camera_radius: f64,
}

impl Default for RenderSection {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            degradation_gain: DEFAULT_DEGRADATION_GAIN,
            color: false,
            camera_radius: 1.0,
        }
    }
}

impl RenderSection {
    pub fn build(&self) -> Result<RenderConfig, HarnessError> {
        Ok(RenderConfig::new(
            self.resolution,
            self.degradation_gain,
            DEFAULT_LIGHT_DIRECTION,
            self.color,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PopulationSection {
    /// Real/fake identities rendered for detector training.
    pub train_real: u32,
    pub train_fake: u32,
    /// Fake identities the attacks run against.
    pub attack_fake: u32,
    pub artifact_strength: f64,
}

impl Default for PopulationSection {
    fn default() -> Self {
        Self { train_real: 40, train_fake: 40, attack_fake: 20, artifact_strength: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub epochs: u32,
    pub learning_rate: f64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        Self { epochs: 150, learning_rate: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub tier: QualityTier,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    crate::detector::DEFAULT_DECISION_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    pub kind: AttackKind,
    #[serde(default = "default_max_queries")]
    pub max_queries: u64,
    #[serde(default = "default_difference_step")]
    pub difference_step: u32,
    #[serde(default = "default_alpha_max")]
    pub alpha_max: f64,
    #[serde(default = "default_alpha_min")]
    pub alpha_min: f64,
    #[serde(default)]
    pub sign_convention: SignConvention,
}

fn default_max_queries() -> u64 {
    DEFAULT_MAX_QUERIES
}

fn default_difference_step() -> u32 {
    DEFAULT_DIFFERENCE_STEP
}

fn default_alpha_max() -> f64 {
    DEFAULT_ALPHA_MAX
}

fn default_alpha_min() -> f64 {
    DEFAULT_ALPHA_MIN
}

impl AttackSection {
    pub fn to_config(&self, seed: u64) -> AttackConfig {
        AttackConfig {
            max_queries: self.max_queries,
            difference_step: self.difference_step,
            alpha_max: self.alpha_max,
            alpha_min: self.alpha_min,
            seed,
            sign_convention: self.sign_convention,
        }
    }

    /// Same parameters with the budget replaced (query curves run once at
    /// the largest checkpoint).
    pub fn to_config_with_budget(&self, seed: u64, max_queries: u64) -> AttackConfig {
        AttackConfig { max_queries, ..self.to_config(seed) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandscapesSection {
    pub count: u32,
    pub family: Family,
    pub view_count: u32,
}

impl Default for LandscapesSection {
    fn default() -> Self {
        Self { count: 200, family: Family::Basin, view_count: DEFAULT_VIEW_COUNT }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QueryCurveSection {
    pub checkpoints: Vec<u64>,
}

impl Default for QueryCurveSection {
    fn default() -> Self {
        Self { checkpoints: DEFAULT_QUERY_CHECKPOINTS.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KAblationSection {
    pub view_counts: Vec<u32>,
}

impl Default for KAblationSection {
    fn default() -> Self {
        Self { view_counts: DEFAULT_ABLATION_VIEW_COUNTS.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AngleHeatmapSection {
    pub yaw_bins: u32,
    pub pitch_bins: u32,
}

impl Default for AngleHeatmapSection {
    fn default() -> Self {
        Self { yaw_bins: 12, pitch_bins: 5 }
    }
}

// ---------------------------------------------------------------------------
// The spec
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub path: PathSection,
    #[serde(default)]
    pub render: RenderSection,
    #[serde(default)]
    pub population: PopulationSection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub detectors: Vec<DetectorSection>,
    #[serde(default)]
    pub attacks: Vec<AttackSection>,
    #[serde(default)]
    pub defenses: Vec<DefenseSpec>,
    #[serde(default)]
    pub landscapes: LandscapesSection,
    #[serde(default)]
    pub query_curve: QueryCurveSection,
    #[serde(default)]
    pub k_ablation: KAblationSection,
    #[serde(default)]
    pub angle_heatmap: AngleHeatmapSection,
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let spec: ExperimentSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn label(&self) -> String {
        self.experiment
            .name
            .clone()
            .unwrap_or_else(|| self.experiment.kind.as_str().to_string())
    }

    fn needs_attacks(&self) -> bool {
        matches!(
            self.experiment.kind,
            ExperimentKind::SuccessMatrix
                | ExperimentKind::QueryCurve
                | ExperimentKind::DefenseEval
                | ExperimentKind::KAblation
        )
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let kind = self.experiment.kind;
        let invalid = |msg: String| Err(HarnessError::InvalidSpec(msg));

        // Structural checks shared by constructors.
        self.path.build()?;
        self.render.build()?;
        if !(self.render.camera_radius.is_finite() && self.render.camera_radius > 0.0) {
            return invalid(format!("camera_radius {} must be positive", self.render.camera_radius));
        }
        for (i, d) in self.defenses.iter().enumerate() {
            d.validate().map_err(|e| HarnessError::InvalidSpec(format!("defense {i}: {e}")))?;
        }
        // Attacks must be valid on the ring they will actually query.
        let effective_view_count = match self.experiment.oracle {
            OracleFlavor::Rendered => self.path.view_count,
            OracleFlavor::Scripted => self.landscapes.view_count,
        };
        for (i, a) in self.attacks.iter().enumerate() {
            a.to_config(0)
                .validate(effective_view_count)
                .map_err(|e| HarnessError::InvalidSpec(format!("attack {i}: {e}")))?;
        }
        for d in &self.detectors {
            if !(d.threshold > 0.0 && d.threshold < 1.0) {
                return invalid(format!("detector threshold {} outside (0, 1)", d.threshold));
            }
        }

        match self.experiment.oracle {
            OracleFlavor::Scripted => {
                if matches!(kind, ExperimentKind::TransferMatrix | ExperimentKind::DefenseEval) {
                    return invalid(format!("{kind} requires rendered oracles"));
                }
                if self.landscapes.count == 0 {
                    return invalid("landscapes.count must be at least 1".into());
                }
                if self.landscapes.view_count < 2 {
                    return invalid("landscapes.view_count must be at least 2".into());
                }
            }
            OracleFlavor::Rendered => {
                if self.detectors.is_empty() {
                    return invalid(format!("{kind} with rendered oracles needs [[detectors]]"));
                }
                if self.population.attack_fake == 0 {
                    return invalid("population.attack_fake must be at least 1".into());
                }
                if self.population.train_real == 0 || self.population.train_fake == 0 {
                    return invalid("training corpus needs both classes".into());
                }
                if !(self.population.artifact_strength > 0.0
                    && self.population.artifact_strength <= 1.0)
                {
                    return invalid(format!(
                        "artifact_strength {} outside (0, 1]",
                        self.population.artifact_strength
                    ));
                }
                if self.training.epochs == 0 {
                    return invalid("training.epochs must be at least 1".into());
                }
            }
        }

        if self.needs_attacks() && self.attacks.is_empty() {
            return invalid(format!("{kind} needs at least one [[attacks]] entry"));
        }

        match kind {
            ExperimentKind::QueryCurve => {
                let cps = &self.query_curve.checkpoints;
                if cps.is_empty() {
                    return invalid("query_curve.checkpoints must be non-empty".into());
                }
                if cps.windows(2).any(|w| w[0] >= w[1]) || cps[0] == 0 {
                    return invalid("query_curve.checkpoints must be strictly increasing and positive".into());
                }
            }
            ExperimentKind::KAblation => {
                let ks = &self.k_ablation.view_counts;
                if ks.is_empty() || ks.iter().any(|&k| k < 2) {
                    return invalid("k_ablation.view_counts must list sizes of at least 2".into());
                }
                if self.experiment.oracle == OracleFlavor::Rendered && self.detectors.len() != 1 {
                    return invalid(
                        "rendered k_ablation reports a single oracle column; configure exactly one detector".into(),
                    );
                }
                for (i, a) in self.attacks.iter().enumerate() {
                    for &k in ks {
                        a.to_config(0).validate(k).map_err(|e| {
                            HarnessError::InvalidSpec(format!("attack {i} at K={k}: {e}"))
                        })?;
                    }
                }
            }
            ExperimentKind::DefenseEval => {
                if self.defenses.is_empty() {
                    return invalid("defense_eval needs at least one [[defenses]] entry".into());
                }
            }
            ExperimentKind::AngleHeatmap => {
                if self.angle_heatmap.yaw_bins == 0 || self.angle_heatmap.pitch_bins == 0 {
                    return invalid("angle_heatmap bins must be at least 1".into());
                }
            }
            _ => {}
        }
        Ok(())
    }
}

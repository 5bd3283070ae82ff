//! Experiment harness: the render→detect pipeline as a queryable oracle,
//! ground-truth brute force, corpus construction, experiment execution,
//! and report emission.

pub mod config;
pub mod experiment;
pub mod landscapes;
pub mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::detector::{
    extract_features, train_detector, Detector, DetectorError, Label, QueryLedger, ViewOracle,
};
use crate::imageproc::{quality_transform, DefenseError, DefenseSpec, QualityTier};
use crate::renderer::{render, IdentitySpec, Image, ImageError, RenderConfig, RenderError};
use crate::rng::{hash_str, hash_words};
use crate::viewpath::{pose_for_angles, ViewIndex, ViewPath, ViewPathError};

pub use config::{ExperimentKind, ExperimentSpec, OracleFlavor};
pub use experiment::{run_experiment, ExperimentRun};
pub use landscapes::Family;
pub use report::{write_report, Cell, Table};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Path(#[from] ViewPathError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Defense(#[from] DefenseError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Attack(#[from] crate::attack::AttackError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

// ---------------------------------------------------------------------------
// The rendered pipeline as an oracle
// ---------------------------------------------------------------------------

/// Full probability pipeline a deployed detector exposes: optional input
/// defense, then the quality transform the detector was trained on, then
/// feature extraction and the logistic score. No queries are metered.
pub fn pipeline_probability(
    detector: &Detector,
    raw: &Image,
    defense: Option<&DefenseSpec>,
) -> f64 {
    let defended = match defense {
        Some(d) => d.apply(raw),
        None => raw.clone(),
    };
    let tiered = quality_transform(&defended, detector.trained_tier());
    detector.probability(&extract_features(&tiered))
}

/// A detector attached to one identity on one view path. Each queried
/// index is rendered, pushed through the pipeline, and cached, so repeat
/// queries at an index meter the ledger without re-rendering.
pub struct RenderedOracle {
    detector: Arc<Detector>,
    identity: IdentitySpec,
    path: ViewPath,
    render_cfg: RenderConfig,
    camera_radius: f64,
    defense: Option<DefenseSpec>,
    probabilities: BTreeMap<u32, f64>,
    ledger: QueryLedger,
}

impl RenderedOracle {
    pub fn new(
        detector: Arc<Detector>,
        identity: IdentitySpec,
        path: ViewPath,
        render_cfg: RenderConfig,
        camera_radius: f64,
        defense: Option<DefenseSpec>,
    ) -> Result<Self, HarnessError> {
        // Radius problems surface here once instead of at every view.
        pose_for_angles(&path.angles_for_index(path.wrap_index(0)), camera_radius)?;
        if let Some(d) = &defense {
            d.validate()?;
        }
        Ok(Self {
            detector,
            identity,
            path,
            render_cfg,
            camera_radius,
            defense,
            probabilities: BTreeMap::new(),
            ledger: QueryLedger::new(),
        })
    }

    /// The raw render at a view, before defense and quality transform.
    pub fn render_view(&self, index: ViewIndex) -> Image {
        let angles = self.path.angles_for_index(index);
        let pose = pose_for_angles(&angles, self.camera_radius).expect("radius validated");
        render(&self.identity, &pose, &self.render_cfg)
    }

    fn probability_at(&mut self, index: ViewIndex) -> f64 {
        let key = index.get();
        if let Some(&p) = self.probabilities.get(&key) {
            return p;
        }
        let raw = self.render_view(index);
        let p = pipeline_probability(&self.detector, &raw, self.defense.as_ref());
        self.probabilities.insert(key, p);
        p
    }
}

impl ViewOracle for RenderedOracle {
    fn view_count(&self) -> u32 {
        self.path.view_count()
    }

    fn decide(&mut self, index: ViewIndex) -> Label {
        self.ledger.record_decision();
        let p = self.probability_at(index);
        self.detector.label_for_probability(p)
    }

    fn score(&mut self, index: ViewIndex) -> f64 {
        self.ledger.record_score();
        self.probability_at(index)
    }

    fn ledger(&self) -> QueryLedger {
        self.ledger
    }
}

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

/// Exhaustively query `decide` at every view index and return the indices
/// classified real. Ground truth, not an attack: run it on a dedicated
/// oracle handle so attack ledgers stay untouched.
pub fn brute_force_adversarial_set(oracle: &mut dyn ViewOracle) -> BTreeSet<ViewIndex> {
    let k = oracle.view_count();
    let mut set = BTreeSet::new();
    for i in 0..k {
        let index = ViewIndex::wrapped(i64::from(i), k);
        if oracle.decide(index) == Label::Real {
            set.insert(index);
        }
    }
    set
}

// ---------------------------------------------------------------------------
// Populations and corpora
// ---------------------------------------------------------------------------

/// Stable per-identity seed stream: independent of iteration order and of
/// the other groups.
pub fn identity_seed(base_seed: u64, group: &str, index: u64) -> u64 {
    hash_words(&[base_seed, hash_str(group), index])
}

pub const GROUP_TRAIN_REAL: &str = "train-real";
pub const GROUP_TRAIN_FAKE: &str = "train-fake";
pub const GROUP_ATTACK_FAKE: &str = "attack-fake";
pub const GROUP_HOLDOUT_REAL: &str = "holdout-real";
pub const GROUP_HOLDOUT_FAKE: &str = "holdout-fake";

/// Render the labeled front-view (index 0) training images, untransformed.
/// Tier transforms are applied per detector afterwards so the same renders
/// serve every tier.
pub fn render_training_images(
    base_seed: u64,
    train_real: u32,
    train_fake: u32,
    artifact_strength: f64,
    path: &ViewPath,
    render_cfg: &RenderConfig,
    camera_radius: f64,
) -> Result<Vec<(Image, Label)>, HarnessError> {
    let front = path.wrap_index(0);
    let pose = pose_for_angles(&path.angles_for_index(front), camera_radius)?;
    let mut corpus = Vec::with_capacity((train_real + train_fake) as usize);
    for j in 0..train_real {
        let id = IdentitySpec::real(identity_seed(base_seed, GROUP_TRAIN_REAL, u64::from(j)));
        corpus.push((render(&id, &pose, render_cfg), Label::Real));
    }
    for j in 0..train_fake {
        let id = IdentitySpec::fake(
            identity_seed(base_seed, GROUP_TRAIN_FAKE, u64::from(j)),
            artifact_strength,
        )?;
        corpus.push((render(&id, &pose, render_cfg), Label::Fake));
    }
    Ok(corpus)
}

/// Transform a raw corpus to a tier and train a detector on it.
pub fn train_tier_detector(
    raw_corpus: &[(Image, Label)],
    tier: QualityTier,
    epochs: u32,
    learning_rate: f64,
    train_seed: u64,
    threshold: f64,
) -> Result<(Detector, f64), HarnessError> {
    let corpus: Vec<(Image, Label)> = raw_corpus
        .iter()
        .map(|(img, label)| (quality_transform(img, tier), *label))
        .collect();
    let trained = train_detector(&corpus, tier, epochs, learning_rate, train_seed)?;
    let detector = Detector::new(
        trained.detector.weights().to_vec(),
        trained.detector.bias(),
        tier,
        threshold,
    )?;
    Ok((detector, trained.train_accuracy))
}

//! Real/fake detector over fixed image statistics, plus the oracle
//! interface attacks query.
//!
//! The detector is a logistic regression over ten named statistics chosen
//! to expose synthesis artifacts (high-frequency energy, gradients,
//! blockiness, left/right asymmetry, contrast in the blend-band annulus,
//! luminance moments). `score` returns the probability of the "real" class
//! and meters a score query; `decide` thresholds the same probability and
//! meters a decision query. Attacks talk to detectors through the
//! index-based [`ViewOracle`] trait, which is also implemented by scripted
//! loss landscapes so search behavior can be tested without a renderer.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imageproc::QualityTier;
use crate::renderer::Image;
use crate::rng::{hash_str, unit_sample, Prng};
use crate::viewpath::ViewIndex;

#[derive(Debug, Error, PartialEq)]
pub enum DetectorError {
    #[error("expected {want} weights, got {got}")]
    WeightCount { got: usize, want: usize },
    #[error("detector parameters must be finite")]
    NonFinite,
    #[error("decision threshold must lie in (0, 1) (got {0})")]
    Threshold(f64),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("training corpus contains a single class")]
    SingleClass,
    #[error("learning rate must be positive (got {0})")]
    LearningRate(f64),
    #[error("landscape needs at least 2 views (got {0})")]
    ViewCount(u32),
    #[error("landscape loss {0} outside [0, {1}]")]
    LossOutOfRange(f64, f64),
    #[error("detector file parse error: {0}")]
    Parse(String),
}

// ---------------------------------------------------------------------------
// Labels and query accounting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Real,
    Fake,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Real => "real",
            Label::Fake => "fake",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Monotone counters for the two query kinds an attacker spends.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    decision_queries: u64,
    score_queries: u64,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_decision(&mut self) {
        self.decision_queries += 1;
    }

    pub fn record_score(&mut self) {
        self.score_queries += 1;
    }

    pub fn decision_queries(&self) -> u64 {
        self.decision_queries
    }

    pub fn score_queries(&self) -> u64 {
        self.score_queries
    }

    pub fn total(&self) -> u64 {
        self.decision_queries + self.score_queries
    }

    /// Queries spent since an earlier snapshot of the same ledger.
    pub fn since(&self, start: &QueryLedger) -> QueryLedger {
        QueryLedger {
            decision_queries: self.decision_queries - start.decision_queries,
            score_queries: self.score_queries - start.score_queries,
        }
    }
}

// ---------------------------------------------------------------------------
// Feature extraction
// ---------------------------------------------------------------------------

pub const FEATURE_COUNT: usize = 10;

/// Canonical feature order; serialized detector files name each weight.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "hf_energy",
    "grad_h_mean",
    "grad_h_var",
    "grad_v_mean",
    "grad_v_var",
    "blockiness",
    "asymmetry",
    "band_contrast",
    "lum_mean",
    "lum_var",
];

/// Annulus (relative to half the short image side) used for the
/// blend-band contrast statistic.
const BAND_ANNULUS: (f64, f64) = (0.50, 0.95);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Compute the fixed statistics on an image's luminance plane.
///
/// All statistics except `asymmetry` are invariant under left-right
/// mirroring (up to float summation order); `asymmetry` is negated.
pub fn extract_features(img: &Image) -> FeatureVector {
    let (w, h) = (img.width(), img.height());
    let n = (w * h) as f64;
    let mut lum = vec![0.0f64; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            lum[(y * w + x) as usize] = img.luminance_at(x, y);
        }
    }
    let at = |x: u32, y: u32| lum[(y * w + x) as usize];

    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for &v in &lum {
        sum += v;
        sum2 += v * v;
    }
    let lum_mean = sum / n;
    let lum_var = (sum2 / n - lum_mean * lum_mean).max(0.0);

    // Absolute forward differences; split into 8-block boundary and
    // interior populations for the blockiness score.
    let mut gh = OnlineMoments::new();
    let mut gv = OnlineMoments::new();
    let mut boundary = OnlineMoments::new();
    let mut interior = OnlineMoments::new();
    for y in 0..h {
        for x in 0..w - 1 {
            let d = (at(x + 1, y) - at(x, y)).abs();
            gh.push(d);
            if x % 8 == 7 {
                boundary.push(d);
            } else {
                interior.push(d);
            }
        }
    }
    for y in 0..h - 1 {
        for x in 0..w {
            let d = (at(x, y + 1) - at(x, y)).abs();
            gv.push(d);
            if y % 8 == 7 {
                boundary.push(d);
            } else {
                interior.push(d);
            }
        }
    }
    let blockiness = boundary.mean() - interior.mean();

    // Interior Laplacian mean square, normalized to [0, 1].
    let mut hf = 0.0;
    let mut hf_n = 0usize;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let lap = 4.0 * at(x, y) - at(x - 1, y) - at(x + 1, y) - at(x, y - 1) - at(x, y + 1);
            hf += lap * lap;
            hf_n += 1;
        }
    }
    let hf_energy = if hf_n > 0 { hf / (16.0 * hf_n as f64) } else { 0.0 };

    // Left-half minus right-half mean (odd widths skip the middle column).
    let half = w / 2;
    let mut left = 0.0;
    let mut right = 0.0;
    for y in 0..h {
        for x in 0..half {
            left += at(x, y);
            right += at(w - 1 - x, y);
        }
    }
    let half_n = (half * h).max(1) as f64;
    let asymmetry = (left - right) / half_n;

    // Mean absolute Laplacian inside the centered annulus where a blend
    // band would project for a frontal subject: local texture roughness,
    // insensitive to the smooth silhouette step that dominates raw
    // variance there.
    let rmax = 0.5 * f64::from(w.min(h));
    let (r_lo, r_hi) = (BAND_ANNULUS.0 * rmax, BAND_ANNULUS.1 * rmax);
    let mut band = OnlineMoments::new();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let dx = f64::from(x) + 0.5 - f64::from(w) / 2.0;
            let dy = f64::from(y) + 0.5 - f64::from(h) / 2.0;
            let r = (dx * dx + dy * dy).sqrt();
            if r >= r_lo && r < r_hi {
                let lap =
                    4.0 * at(x, y) - at(x - 1, y) - at(x + 1, y) - at(x, y - 1) - at(x, y + 1);
                band.push(lap.abs() / 8.0);
            }
        }
    }
    let band_contrast = band.mean();

    FeatureVector([
        hf_energy,
        gh.mean(),
        gh.variance(),
        gv.mean(),
        gv.variance(),
        blockiness,
        asymmetry,
        band_contrast,
        lum_mean,
        lum_var,
    ])
}

/// Population mean/variance accumulator.
struct OnlineMoments {
    n: f64,
    sum: f64,
    sum2: f64,
}

impl OnlineMoments {
    fn new() -> Self {
        Self { n: 0.0, sum: 0.0, sum2: 0.0 }
    }

    fn push(&mut self, v: f64) {
        self.n += 1.0;
        self.sum += v;
        self.sum2 += v * v;
    }

    fn mean(&self) -> f64 {
        if self.n > 0.0 {
            self.sum / self.n
        } else {
            0.0
        }
    }

    fn variance(&self) -> f64 {
        if self.n > 0.0 {
            let m = self.mean();
            (self.sum2 / self.n - m * m).max(0.0)
        } else {
            0.0
        }
    }
}

// ---------------------------------------------------------------------------
// Detector
// ---------------------------------------------------------------------------

/// Logistic real/fake classifier: `P(real) = sigmoid(weights . features + bias)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DetectorRecord")]
pub struct Detector {
    weights: Vec<f64>,
    bias: f64,
    trained_tier: QualityTier,
    threshold: f64,
}

/// On-disk form of a detector; loading revalidates through `Detector::new`.
#[derive(Deserialize)]
struct DetectorRecord {
    weights: Vec<f64>,
    bias: f64,
    trained_tier: QualityTier,
    threshold: f64,
}

impl TryFrom<DetectorRecord> for Detector {
    type Error = DetectorError;

    fn try_from(r: DetectorRecord) -> Result<Self, Self::Error> {
        Detector::new(r.weights, r.bias, r.trained_tier, r.threshold)
    }
}

pub const DEFAULT_DECISION_THRESHOLD: f64 = 0.5;

impl Detector {
    pub fn new(
        weights: Vec<f64>,
        bias: f64,
        trained_tier: QualityTier,
        threshold: f64,
    ) -> Result<Self, DetectorError> {
        if weights.len() != FEATURE_COUNT {
            return Err(DetectorError::WeightCount { got: weights.len(), want: FEATURE_COUNT });
        }
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(DetectorError::NonFinite);
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(DetectorError::Threshold(threshold));
        }
        Ok(Self { weights, bias, trained_tier, threshold })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn trained_tier(&self) -> QualityTier {
        self.trained_tier
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Real-class probability for a feature vector. Does not meter queries.
    pub fn probability(&self, features: &FeatureVector) -> f64 {
        let z: f64 = self
            .weights
            .iter()
            .zip(features.as_slice())
            .map(|(w, f)| w * f)
            .sum::<f64>()
            + self.bias;
        sigmoid(z)
    }

    /// Soft real-class score for an image; meters one score query.
    pub fn score(&self, img: &Image, ledger: &mut QueryLedger) -> f64 {
        ledger.record_score();
        self.probability(&extract_features(img))
    }

    /// Hard label for an image; meters one decision query only (the
    /// internal probability is not double-counted as a score query).
    /// Ties at the threshold classify as real.
    pub fn decide(&self, img: &Image, ledger: &mut QueryLedger) -> Label {
        ledger.record_decision();
        self.label_for_probability(self.probability(&extract_features(img)))
    }

    /// Threshold rule shared by `decide` and the rendered oracle.
    pub fn label_for_probability(&self, p: f64) -> Label {
        if p >= self.threshold {
            Label::Real
        } else {
            Label::Fake
        }
    }

    // --- serialization: versioned flat text -------------------------------

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("advheat-detector v1\n");
        s.push_str(&format!("tier {}\n", self.trained_tier));
        s.push_str(&format!("threshold {}\n", self.threshold));
        s.push_str(&format!("bias {}\n", self.bias));
        for (name, w) in FEATURE_NAMES.iter().zip(&self.weights) {
            s.push_str(&format!("weight {name} {w}\n"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, DetectorError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| DetectorError::Parse("empty file".into()))?;
        if header != "advheat-detector v1" {
            return Err(DetectorError::Parse(format!("unsupported header {header:?}")));
        }
        let mut tier = None;
        let mut threshold = None;
        let mut bias = None;
        let mut weights = vec![f64::NAN; FEATURE_COUNT];
        let mut seen = [false; FEATURE_COUNT];
        let parse_f64 = |s: &str| -> Result<f64, DetectorError> {
            s.parse::<f64>().map_err(|_| DetectorError::Parse(format!("bad float {s:?}")))
        };
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("tier") => {
                    let t = parts.next().ok_or_else(|| DetectorError::Parse("missing tier".into()))?;
                    tier = Some(
                        QualityTier::parse(t)
                            .ok_or_else(|| DetectorError::Parse(format!("unknown tier {t:?}")))?,
                    );
                }
                Some("threshold") => {
                    threshold = Some(parse_f64(
                        parts.next().ok_or_else(|| DetectorError::Parse("missing threshold".into()))?,
                    )?);
                }
                Some("bias") => {
                    bias = Some(parse_f64(
                        parts.next().ok_or_else(|| DetectorError::Parse("missing bias".into()))?,
                    )?);
                }
                Some("weight") => {
                    let name = parts.next().ok_or_else(|| DetectorError::Parse("missing weight name".into()))?;
                    let idx = FEATURE_NAMES
                        .iter()
                        .position(|n| *n == name)
                        .ok_or_else(|| DetectorError::Parse(format!("unknown feature {name:?}")))?;
                    let v = parse_f64(
                        parts.next().ok_or_else(|| DetectorError::Parse("missing weight value".into()))?,
                    )?;
                    weights[idx] = v;
                    seen[idx] = true;
                }
                Some(other) => {
                    return Err(DetectorError::Parse(format!("unknown directive {other:?}")));
                }
                None => {}
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(DetectorError::Parse("missing feature weights".into()));
        }
        let tier = tier.ok_or_else(|| DetectorError::Parse("missing tier".into()))?;
        let threshold = threshold.ok_or_else(|| DetectorError::Parse("missing threshold".into()))?;
        let bias = bias.ok_or_else(|| DetectorError::Parse("missing bias".into()))?;
        Detector::new(weights, bias, tier, threshold)
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct TrainedDetector {
    pub detector: Detector,
    /// Accuracy on the training corpus after the final epoch.
    pub train_accuracy: f64,
}

const BATCH_SIZE: usize = 32;
const TAG_TRAIN: &str = "train-shuffle";

/// Train a logistic detector with seeded mini-batch gradient descent on the
/// cross-entropy loss. The corpus must already be transformed to `tier`.
/// Features are standardized internally; the returned weights act on raw
/// features. Deterministic given the seed.
pub fn train_detector(
    corpus: &[(Image, Label)],
    tier: QualityTier,
    epochs: u32,
    learning_rate: f64,
    seed: u64,
) -> Result<TrainedDetector, DetectorError> {
    if corpus.is_empty() {
        return Err(DetectorError::EmptyCorpus);
    }
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(DetectorError::LearningRate(learning_rate));
    }
    let n_real = corpus.iter().filter(|(_, l)| *l == Label::Real).count();
    if n_real == 0 || n_real == corpus.len() {
        return Err(DetectorError::SingleClass);
    }

    let feats: Vec<FeatureVector> = corpus.iter().map(|(img, _)| extract_features(img)).collect();
    let ys: Vec<f64> = corpus
        .iter()
        .map(|(_, l)| if *l == Label::Real { 1.0 } else { 0.0 })
        .collect();

    // Per-dimension standardization; constant features pass through.
    let n = feats.len() as f64;
    let mut mean = [0.0f64; FEATURE_COUNT];
    let mut var = [0.0f64; FEATURE_COUNT];
    for f in &feats {
        for (i, v) in f.as_slice().iter().enumerate() {
            mean[i] += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    for f in &feats {
        for (i, v) in f.as_slice().iter().enumerate() {
            var[i] += (v - mean[i]) * (v - mean[i]);
        }
    }
    let mut sd = [0.0f64; FEATURE_COUNT];
    for i in 0..FEATURE_COUNT {
        let s = (var[i] / n).sqrt();
        sd[i] = if s > 1e-12 { s } else { 1.0 };
    }
    let std_feats: Vec<[f64; FEATURE_COUNT]> = feats
        .iter()
        .map(|f| {
            let mut out = [0.0; FEATURE_COUNT];
            for i in 0..FEATURE_COUNT {
                out[i] = (f.0[i] - mean[i]) / sd[i];
            }
            out
        })
        .collect();

    let mut w = [0.0f64; FEATURE_COUNT];
    let mut b = 0.0f64;
    let mut order: Vec<usize> = (0..feats.len()).collect();
    for epoch in 0..epochs {
        let mut rng = Prng::from_words(&[seed, hash_str(TAG_TRAIN), u64::from(epoch)]);
        rng.shuffle(&mut order);
        for batch in order.chunks(BATCH_SIZE) {
            let mut gw = [0.0f64; FEATURE_COUNT];
            let mut gb = 0.0f64;
            for &j in batch {
                let x = &std_feats[j];
                let z = w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
                let err = sigmoid(z) - ys[j];
                for i in 0..FEATURE_COUNT {
                    gw[i] += err * x[i];
                }
                gb += err;
            }
            let inv = 1.0 / batch.len() as f64;
            for i in 0..FEATURE_COUNT {
                w[i] -= learning_rate * gw[i] * inv;
            }
            b -= learning_rate * gb * inv;
        }
    }

    // Fold the standardization into raw-feature weights.
    let mut raw_w = vec![0.0f64; FEATURE_COUNT];
    let mut raw_b = b;
    for i in 0..FEATURE_COUNT {
        raw_w[i] = w[i] / sd[i];
        raw_b -= w[i] * mean[i] / sd[i];
    }
    let detector = Detector::new(raw_w, raw_b, tier, DEFAULT_DECISION_THRESHOLD)?;

    let correct = feats
        .iter()
        .zip(&ys)
        .filter(|(f, &y)| {
            let p = detector.probability(f);
            (p >= detector.threshold) == (y == 1.0)
        })
        .count();
    let train_accuracy = correct as f64 / n;
    Ok(TrainedDetector { detector, train_accuracy })
}

// ---------------------------------------------------------------------------
// Loss and oracles
// ---------------------------------------------------------------------------

/// Probability clamp applied before taking logs.
pub const CROSS_ENTROPY_CLAMP: f64 = 1e-12;

/// Cross-entropy of a real-class probability against a target label.
pub fn cross_entropy(p_real: f64, target: Label) -> f64 {
    let p = p_real.clamp(CROSS_ENTROPY_CLAMP, 1.0 - CROSS_ENTROPY_CLAMP);
    match target {
        Label::Real => -p.ln(),
        Label::Fake => -(1.0 - p).ln(),
    }
}

/// Index-addressed black-box oracle. Both the rendered-detector pipeline
/// and scripted loss landscapes implement this; attacks only see it.
pub trait ViewOracle {
    /// Number of views on the underlying path.
    fn view_count(&self) -> u32;
    /// Hard label at a view; meters one decision query.
    fn decide(&mut self, index: ViewIndex) -> Label;
    /// Soft real-class score at a view; meters one score query.
    fn score(&mut self, index: ViewIndex) -> f64;
    /// Snapshot of the queries spent so far on this oracle handle.
    fn ledger(&self) -> QueryLedger;
}

// ---------------------------------------------------------------------------
// Scripted landscapes
// ---------------------------------------------------------------------------

/// Upper bound on scripted losses; keeps `exp(-loss)` above the
/// cross-entropy clamp so `cross_entropy(score(i), Real)` reproduces the
/// scripted loss to within float round-off.
pub const MAX_SCRIPTED_LOSS: f64 = 25.0;
const MIN_SCRIPTED_LOSS: f64 = 1e-6;
const TAG_LANDSCAPE_NOISE: &str = "landscape-noise";

/// One sinusoidal component of a generated loss landscape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub amplitude: f64,
    /// Whole cycles around the view ring.
    pub cycles: u32,
    pub phase: f64,
}

/// A scripted per-view loss landscape: either an explicit table or a
/// sum-of-sinusoids generator with seeded per-index noise. The adversarial
/// set is every index with loss strictly below the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LandscapeSpec {
    Explicit {
        losses: Vec<f64>,
        adversarial_threshold: f64,
    },
    Sinusoids {
        view_count: u32,
        components: Vec<Sinusoid>,
        offset: f64,
        noise_seed: u64,
        noise_amplitude: f64,
        adversarial_threshold: f64,
    },
}

impl LandscapeSpec {
    pub fn view_count(&self) -> u32 {
        match self {
            LandscapeSpec::Explicit { losses, .. } => losses.len() as u32,
            LandscapeSpec::Sinusoids { view_count, .. } => *view_count,
        }
    }

    pub fn adversarial_threshold(&self) -> f64 {
        match self {
            LandscapeSpec::Explicit { adversarial_threshold, .. }
            | LandscapeSpec::Sinusoids { adversarial_threshold, .. } => *adversarial_threshold,
        }
    }

    /// Losses as an attacker reconstructs them: each scripted loss mapped
    /// through the oracle's score encoding (`exp`) and back through
    /// `cross_entropy`. Differs from [`Self::loss_table`] only by float
    /// round-off, and is the table all decision semantics use, so oracle
    /// behavior is bitwise consistent with what score queries reveal.
    pub fn effective_loss_table(&self) -> Vec<f64> {
        self.loss_table()
            .iter()
            .map(|&l| cross_entropy((-l).exp(), Label::Real))
            .collect()
    }

    /// Materialize the per-index loss table. Generated losses are clamped
    /// into `[1e-6, MAX_SCRIPTED_LOSS]`.
    pub fn loss_table(&self) -> Vec<f64> {
        match self {
            LandscapeSpec::Explicit { losses, .. } => losses.clone(),
            LandscapeSpec::Sinusoids {
                view_count,
                components,
                offset,
                noise_seed,
                noise_amplitude,
                ..
            } => {
                let k = f64::from(*view_count);
                let tag = hash_str(TAG_LANDSCAPE_NOISE);
                (0..*view_count)
                    .map(|i| {
                        let s = 2.0 * std::f64::consts::PI * f64::from(i) / k;
                        let mut v = *offset;
                        for c in components {
                            v += c.amplitude * (f64::from(c.cycles) * s + c.phase).sin();
                        }
                        if *noise_amplitude > 0.0 {
                            v += noise_amplitude
                                * (2.0 * unit_sample(*noise_seed, tag, &[u64::from(i)]) - 1.0);
                        }
                        v.clamp(MIN_SCRIPTED_LOSS, MAX_SCRIPTED_LOSS)
                    })
                    .collect()
            }
        }
    }

    /// Ground-truth adversarial set: indices whose effective loss is
    /// strictly below the threshold.
    pub fn adversarial_set(&self) -> BTreeSet<u32> {
        let thr = self.adversarial_threshold();
        self.effective_loss_table()
            .iter()
            .enumerate()
            .filter(|(_, &l)| l < thr)
            .map(|(i, _)| i as u32)
            .collect()
    }
}

/// Oracle over a scripted landscape. `score(i) = exp(-loss(i))`, and the
/// oracle's stored losses are pre-quantized through that encoding, so
/// `cross_entropy(score(i), Real)` reproduces `loss_table()[i]` bitwise;
/// `decide(i)` is real exactly when that loss is strictly below the
/// adversarial threshold.
#[derive(Debug, Clone)]
pub struct ScriptedOracle {
    scores: Vec<f64>,
    losses: Vec<f64>,
    adversarial_threshold: f64,
    ledger: QueryLedger,
}

impl ScriptedOracle {
    pub fn from_spec(spec: &LandscapeSpec) -> Result<Self, DetectorError> {
        let raw = spec.loss_table();
        if raw.len() < 2 {
            return Err(DetectorError::ViewCount(raw.len() as u32));
        }
        for &l in &raw {
            if !(0.0..=MAX_SCRIPTED_LOSS).contains(&l) || !l.is_finite() {
                return Err(DetectorError::LossOutOfRange(l, MAX_SCRIPTED_LOSS));
            }
        }
        let scores: Vec<f64> = raw.iter().map(|&l| (-l).exp()).collect();
        let losses: Vec<f64> = scores.iter().map(|&s| cross_entropy(s, Label::Real)).collect();
        Ok(Self {
            scores,
            losses,
            adversarial_threshold: spec.adversarial_threshold(),
            ledger: QueryLedger::new(),
        })
    }

    /// The losses a score-querying attacker can reconstruct, which is also
    /// the table `decide` thresholds against.
    pub fn loss_table(&self) -> &[f64] {
        &self.losses
    }

    pub fn adversarial_threshold(&self) -> f64 {
        self.adversarial_threshold
    }
}

impl ViewOracle for ScriptedOracle {
    fn view_count(&self) -> u32 {
        self.losses.len() as u32
    }

    fn decide(&mut self, index: ViewIndex) -> Label {
        self.ledger.record_decision();
        if self.losses[index.get() as usize] < self.adversarial_threshold {
            Label::Real
        } else {
            Label::Fake
        }
    }

    fn score(&mut self, index: ViewIndex) -> f64 {
        self.ledger.record_score();
        self.scores[index.get() as usize]
    }

    fn ledger(&self) -> QueryLedger {
        self.ledger
    }
}

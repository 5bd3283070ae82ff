//! Black-box search for misclassified views on the cyclic camera path.
//!
//! Three strategies share one oracle interface and one query budget:
//!
//! * [`advheat_rand`] — exhaustive random search: a seeded permutation of
//!   all view indices is fixed before the first query, then visited with
//!   decision queries until a view classifies as real or the budget runs
//!   out. With a budget of at least one full ring this search is complete.
//! * [`advheat_score`] — zeroth-order sign descent: each step spends one
//!   decision query at the current index, then estimates the loss slope
//!   from (at most) two score queries and moves by a cosine-scheduled
//!   integer step against the slope's sign.
//! * [`baseline_score`] — the same loop, but the step is the rounded
//!   product of schedule and raw slope magnitude, which overreacts to
//!   steep noise and stalls on shallow slopes.
//!
//! Every oracle call is budgeted, metered on the oracle's ledger, and
//! recorded in the attack trace, so `queries_used` always equals the
//! trace length.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::{
    cross_entropy, extract_features, Detector, Label, QueryLedger, ViewOracle,
};
use crate::renderer::Image;
use crate::rng::{hash_str, Prng};
use crate::viewpath::ViewIndex;

#[derive(Debug, Error, PartialEq)]
pub enum AttackError {
    #[error("query budget must be at least 1")]
    Budget,
    #[error("difference step {step} must lie in [1, {views})")]
    DifferenceStep { step: u32, views: u32 },
    #[error("step sizes must satisfy max >= min > 0 (got {max} >= {min})")]
    StepSizes { max: f64, min: f64 },
}

pub const DEFAULT_MAX_QUERIES: u64 = 360;
pub const DEFAULT_DIFFERENCE_STEP: u32 = 1;
pub const DEFAULT_ALPHA_MAX: f64 = 10.0;
pub const DEFAULT_ALPHA_MIN: f64 = 3.0;

const TAG_RAND_PERMUTATION: &str = "rand-permutation";
const TAG_GUIDED_START: &str = "guided-start";

/// Direction the guided attacks move relative to the estimated slope of
/// the real-class loss.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// Move against the slope: toward lower real-class loss, i.e. toward
    /// views the detector is more likely to call real.
    #[default]
    DescendRealLoss,
    /// Move with the slope (kept selectable for comparison runs).
    Ascend,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    /// Shared budget for decision and score queries together.
    pub max_queries: u64,
    /// Ring offset `h` used by the finite difference.
    pub difference_step: u32,
    /// Cosine step-size schedule endpoints, in index units.
    pub alpha_max: f64,
    pub alpha_min: f64,
    pub seed: u64,
    pub sign_convention: SignConvention,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            max_queries: DEFAULT_MAX_QUERIES,
            difference_step: DEFAULT_DIFFERENCE_STEP,
            alpha_max: DEFAULT_ALPHA_MAX,
            alpha_min: DEFAULT_ALPHA_MIN,
            seed: 0,
            sign_convention: SignConvention::default(),
        }
    }
}

impl AttackConfig {
    pub fn validate(&self, view_count: u32) -> Result<(), AttackError> {
        if self.max_queries == 0 {
            return Err(AttackError::Budget);
        }
        if self.difference_step == 0 || self.difference_step >= view_count {
            return Err(AttackError::DifferenceStep {
                step: self.difference_step,
                views: view_count,
            });
        }
        let (max, min) = (self.alpha_max, self.alpha_min);
        if !(max.is_finite() && min.is_finite() && min > 0.0 && max >= min) {
            return Err(AttackError::StepSizes { max, min });
        }
        Ok(())
    }
}

/// What a single oracle call asked and learned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "probe", rename_all = "snake_case")]
pub enum Probe {
    Decision { label: Label },
    Loss { loss: f64 },
}

/// One oracle call in issue order; `step` is the 0-based call ordinal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: u64,
    pub index: u32,
    #[serde(flatten)]
    pub probe: Probe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub success: bool,
    /// First view the oracle labeled real, if any.
    pub adversarial_index: Option<ViewIndex>,
    /// Queries this attack spent on the oracle (delta, not lifetime total).
    pub queries_used: QueryLedger,
    pub trace: Vec<TraceStep>,
    /// Times the guided walk abandoned an oscillating position pair.
    pub restarts: u32,
}

impl AttackResult {
    fn failure(queries_used: QueryLedger, trace: Vec<TraceStep>, restarts: u32) -> Self {
        Self { success: false, adversarial_index: None, queries_used, trace, restarts }
    }

    fn success(
        index: ViewIndex,
        queries_used: QueryLedger,
        trace: Vec<TraceStep>,
        restarts: u32,
    ) -> Self {
        Self { success: true, adversarial_index: Some(index), queries_used, trace, restarts }
    }
}

/// Which search strategy to run; used by experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    Rand,
    Score,
    Baseline,
}

impl AttackKind {
    pub const ALL: [AttackKind; 3] = [AttackKind::Rand, AttackKind::Score, AttackKind::Baseline];

    pub fn as_str(&self) -> &'static str {
        match self {
            AttackKind::Rand => "rand",
            AttackKind::Score => "score",
            AttackKind::Baseline => "baseline",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rand" => Some(AttackKind::Rand),
            "score" => Some(AttackKind::Score),
            "baseline" => Some(AttackKind::Baseline),
            _ => None,
        }
    }
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn run_attack(
    kind: AttackKind,
    oracle: &mut dyn ViewOracle,
    cfg: &AttackConfig,
) -> Result<AttackResult, AttackError> {
    match kind {
        AttackKind::Rand => advheat_rand(oracle, cfg),
        AttackKind::Score => advheat_score(oracle, cfg),
        AttackKind::Baseline => baseline_score(oracle, cfg),
    }
}

// ---------------------------------------------------------------------------
// Step schedule and gradient estimation
// ---------------------------------------------------------------------------

/// Cosine-annealed step size: starts at `alpha_max`, ends at `alpha_min`
/// after `total - 1` steps. Returned unrounded; the sign attack rounds it
/// to an integer step of at least 1, the magnitude baseline multiplies it
/// into the raw slope first.
pub fn cosine_step_size(t: u64, total: u64, alpha_max: f64, alpha_min: f64) -> f64 {
    if total <= 1 {
        return alpha_max;
    }
    let ratio = (t as f64 / (total - 1) as f64).min(1.0);
    alpha_min + (alpha_max - alpha_min) * (1.0 + (std::f64::consts::PI * ratio).cos()) / 2.0
}

/// Finite-difference slope of the real-class loss at a view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientEstimate {
    pub value: f64,
    pub at_index: ViewIndex,
}

/// Memoized per-index real-class losses for one attack run. Cache hits
/// cost no queries, so a step whose trailing sample was already visited
/// needs a single new score query.
#[derive(Debug, Default, Clone)]
pub struct LossCache(std::collections::BTreeMap<u32, f64>);

impl LossCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, index: u32) -> Option<f64> {
        self.0.get(&index).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Fetch the loss at `index`, querying the oracle only on a cache miss and
/// only while the budget allows. `None` means the budget is exhausted.
fn budgeted_loss(
    oracle: &mut dyn ViewOracle,
    cache: &mut LossCache,
    index: u32,
    start: &QueryLedger,
    max_queries: u64,
    trace: &mut Vec<TraceStep>,
) -> Option<f64> {
    if let Some(l) = cache.get(index) {
        return Some(l);
    }
    if oracle.ledger().since(start).total() >= max_queries {
        return None;
    }
    let k = oracle.view_count();
    let s = oracle.score(ViewIndex::wrapped(i64::from(index), k));
    let l = cross_entropy(s, Label::Real);
    trace.push(TraceStep { step: trace.len() as u64, index, probe: Probe::Loss { loss: l } });
    cache.0.insert(index, l);
    Some(l)
}

/// Backward finite difference of the real-class loss over the ring:
/// `(loss(at) - loss(at - h)) / h`. Uses (and fills) the cache, so it
/// costs two score queries cold and fewer when samples repeat.
pub fn estimate_gradient(
    oracle: &mut dyn ViewOracle,
    at: ViewIndex,
    difference_step: u32,
    cache: &mut LossCache,
) -> GradientEstimate {
    let start = oracle.ledger();
    let mut scratch = Vec::new();
    let k = oracle.view_count();
    let behind = ViewIndex::wrapped(i64::from(at.get()) - i64::from(difference_step), k);
    let l_now = budgeted_loss(oracle, cache, at.get(), &start, u64::MAX, &mut scratch)
        .expect("unbudgeted loss");
    let l_behind = budgeted_loss(oracle, cache, behind.get(), &start, u64::MAX, &mut scratch)
        .expect("unbudgeted loss");
    GradientEstimate { value: (l_now - l_behind) / f64::from(difference_step), at_index: at }
}

fn sign_of(g: f64) -> i64 {
    if g > 0.0 {
        1
    } else if g < 0.0 {
        -1
    } else {
        0
    }
}

// ---------------------------------------------------------------------------
// Attacks
// ---------------------------------------------------------------------------

/// Exhaustive seeded random search over the view ring, decision queries
/// only. The full visiting order is drawn before the first query; with
/// `max_queries >= view_count` every view is visited, so the search
/// succeeds exactly when an adversarial view exists.
pub fn advheat_rand(
    oracle: &mut dyn ViewOracle,
    cfg: &AttackConfig,
) -> Result<AttackResult, AttackError> {
    let k = oracle.view_count();
    cfg.validate(k)?;
    let start = oracle.ledger();
    let mut order: Vec<u32> = (0..k).collect();
    Prng::from_words(&[cfg.seed, hash_str(TAG_RAND_PERMUTATION)]).shuffle(&mut order);
    let mut trace = Vec::new();
    for &i in &order {
        if oracle.ledger().since(&start).total() >= cfg.max_queries {
            break;
        }
        let index = ViewIndex::wrapped(i64::from(i), k);
        let label = oracle.decide(index);
        trace.push(TraceStep {
            step: trace.len() as u64,
            index: i,
            probe: Probe::Decision { label },
        });
        if label == Label::Real {
            return Ok(AttackResult::success(index, oracle.ledger().since(&start), trace, 0));
        }
    }
    Ok(AttackResult::failure(oracle.ledger().since(&start), trace, 0))
}

/// Score-guided sign descent (the guided attack of the testbed).
pub fn advheat_score(
    oracle: &mut dyn ViewOracle,
    cfg: &AttackConfig,
) -> Result<AttackResult, AttackError> {
    guided_attack(oracle, cfg, false)
}

/// Magnitude-step baseline: identical loop, but steps by the rounded
/// product of schedule and raw slope instead of the slope's sign.
pub fn baseline_score(
    oracle: &mut dyn ViewOracle,
    cfg: &AttackConfig,
) -> Result<AttackResult, AttackError> {
    guided_attack(oracle, cfg, true)
}

fn guided_attack(
    oracle: &mut dyn ViewOracle,
    cfg: &AttackConfig,
    magnitude_steps: bool,
) -> Result<AttackResult, AttackError> {
    let view_count = oracle.view_count();
    cfg.validate(view_count)?;
    let start = oracle.ledger();
    let mut rng = Prng::from_words(&[cfg.seed, hash_str(TAG_GUIDED_START)]);
    let mut cache = LossCache::new();
    let mut trace: Vec<TraceStep> = Vec::new();
    let mut restarts = 0u32;
    let mut k = rng.below(u64::from(view_count)) as u32;
    // Position one move back, for the oscillation check.
    let mut prev: Option<u32> = None;
    // Schedule index; global, so restarts keep shrinking the step.
    let mut t: u64 = 0;

    loop {
        if oracle.ledger().since(&start).total() >= cfg.max_queries {
            break;
        }
        let index = ViewIndex::wrapped(i64::from(k), view_count);
        let label = oracle.decide(index);
        trace.push(TraceStep {
            step: trace.len() as u64,
            index: k,
            probe: Probe::Decision { label },
        });
        if label == Label::Real {
            return Ok(AttackResult::success(
                index,
                oracle.ledger().since(&start),
                trace,
                restarts,
            ));
        }

        let behind =
            ViewIndex::wrapped(i64::from(k) - i64::from(cfg.difference_step), view_count).get();
        let Some(l_now) = budgeted_loss(oracle, &mut cache, k, &start, cfg.max_queries, &mut trace)
        else {
            break;
        };
        let Some(l_behind) =
            budgeted_loss(oracle, &mut cache, behind, &start, cfg.max_queries, &mut trace)
        else {
            break;
        };
        let g = (l_now - l_behind) / f64::from(cfg.difference_step);

        let alpha = cosine_step_size(t, cfg.max_queries, cfg.alpha_max, cfg.alpha_min);
        t += 1;
        let step: i64 = if magnitude_steps {
            let raw = (alpha * g).round();
            if raw == 0.0 && g != 0.0 {
                sign_of(g)
            } else {
                raw as i64
            }
        } else {
            (alpha.round().max(1.0) as i64) * sign_of(g)
        };
        let moved = match cfg.sign_convention {
            SignConvention::DescendRealLoss => i64::from(k) - step,
            SignConvention::Ascend => i64::from(k) + step,
        };
        let next = ViewIndex::wrapped(moved, view_count).get();

        if prev == Some(next) && next != k {
            // Two-cycle detected: abandon the pair for a fresh random start.
            restarts += 1;
            k = rng.below(u64::from(view_count)) as u32;
            prev = None;
        } else {
            prev = Some(k);
            k = next;
        }
    }
    Ok(AttackResult::failure(oracle.ledger().since(&start), trace, restarts))
}

// ---------------------------------------------------------------------------
// Transfer-view selection
// ---------------------------------------------------------------------------

/// Pick the view a source detector considers most real: argmax of the
/// real-class probability, ties resolved to the lowest index. Runs on the
/// detector's weights directly, without metering oracle queries.
pub fn select_transfer_view(detector: &Detector, views: &[Image]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, img) in views.iter().enumerate() {
        let p = detector.probability(&extract_features(img));
        match best {
            Some((_, bp)) if p <= bp => {}
            _ => best = Some((i, p)),
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{LandscapeSpec, ScriptedOracle, Sinusoid, FEATURE_COUNT, FEATURE_NAMES};
    use crate::imageproc::QualityTier;
    use crate::rng::unit_sample;

    fn oracle_from_losses(losses: Vec<f64>, threshold: f64) -> ScriptedOracle {
        ScriptedOracle::from_spec(&LandscapeSpec::Explicit {
            losses,
            adversarial_threshold: threshold,
        })
        .unwrap()
    }

    /// Ring distance between two indices.
    fn ring_distance(a: u32, b: u32, k: u32) -> u32 {
        let d = a.abs_diff(b) % k;
        d.min(k - d)
    }

    /// V-shaped loss basin centered on `target`.
    fn basin_losses(k: u32, target: u32, slope: f64) -> Vec<f64> {
        (0..k).map(|i| 0.1 + slope * f64::from(ring_distance(i, target, k))).collect()
    }

    /// Mildly noisy multi-sinusoid landscape for bulk trials. A percentile
    /// of 0 makes the adversarial set empty; positive percentiles place
    /// the threshold mid-gap so round-off cannot flip membership.
    fn fluctuating_spec(seed: u64, view_count: u32, percentile: f64) -> LandscapeSpec {
        let mut rng = Prng::from_words(&[seed, 0xF1]);
        let components = (0..3)
            .map(|_| Sinusoid {
                amplitude: rng.range_f64(0.2, 0.9),
                cycles: 1 + rng.below(6) as u32,
                phase: rng.range_f64(0.0, std::f64::consts::TAU),
            })
            .collect();
        let base = LandscapeSpec::Sinusoids {
            view_count,
            components,
            offset: rng.range_f64(0.8, 2.2),
            noise_seed: seed ^ 0xABCD,
            noise_amplitude: 0.05,
            adversarial_threshold: 0.0,
        };
        let mut sorted = base.effective_loss_table();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let thr = if percentile <= 0.0 {
            0.5 * sorted[0]
        } else {
            let idx = ((percentile * (sorted.len() - 1) as f64).round() as usize)
                .clamp(1, sorted.len() - 1);
            0.5 * (sorted[idx - 1] + sorted[idx])
        };
        match base {
            LandscapeSpec::Sinusoids { view_count, components, offset, noise_seed, noise_amplitude, .. } => {
                LandscapeSpec::Sinusoids {
                    view_count,
                    components,
                    offset,
                    noise_seed,
                    noise_amplitude,
                    adversarial_threshold: thr,
                }
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn cosine_schedule_endpoints_and_midpoint() {
        assert_eq!(cosine_step_size(0, 101, 10.0, 3.0), 10.0);
        assert!((cosine_step_size(100, 101, 10.0, 3.0) - 3.0).abs() < 1e-12);
        assert!((cosine_step_size(50, 101, 10.0, 3.0) - 6.5).abs() < 1e-12);
        // Degenerate totals pin to the initial step.
        assert_eq!(cosine_step_size(0, 1, 10.0, 3.0), 10.0);
        assert_eq!(cosine_step_size(5, 1, 10.0, 3.0), 10.0);
        // Monotone non-increasing across the whole schedule.
        let mut last = f64::INFINITY;
        for t in 0..200 {
            let a = cosine_step_size(t, 200, 10.0, 3.0);
            assert!(a <= last + 1e-12);
            assert!((3.0..=10.0).contains(&a));
            last = a;
        }
    }

    #[test]
    fn gradient_matches_table_differences() {
        let k = 48u32;
        // Constant landscape: slope exactly zero everywhere.
        let mut flat = oracle_from_losses(vec![1.25; k as usize], 0.5);
        let mut cache = LossCache::new();
        for at in [0u32, 7, 47] {
            let g = estimate_gradient(&mut flat, ViewIndex::wrapped(at.into(), k), 1, &mut cache);
            assert_eq!(g.value, 0.0);
        }

        // Linear-in-index landscape: interior slope equals the increment.
        let losses: Vec<f64> = (0..k).map(|i| 0.5 + 0.02 * f64::from(i)).collect();
        let mut lin = oracle_from_losses(losses.clone(), 0.0);
        let mut cache = LossCache::new();
        for at in 5..15u32 {
            let g = estimate_gradient(&mut lin, ViewIndex::wrapped(at.into(), k), 1, &mut cache);
            assert!((g.value - 0.02).abs() < 1e-9, "slope {} at {at}", g.value);
        }

        // Sinusoid: bitwise agreement with the same computation done on
        // the table through the oracle's score transform, for assorted
        // (index, offset) pairs including ring wraps.
        let spec = LandscapeSpec::Sinusoids {
            view_count: k,
            components: vec![
                Sinusoid { amplitude: 1.1, cycles: 2, phase: 0.4 },
                Sinusoid { amplitude: 0.3, cycles: 5, phase: 1.9 },
            ],
            offset: 2.0,
            noise_seed: 3,
            noise_amplitude: 0.04,
            adversarial_threshold: 0.5,
        };
        let table = spec.loss_table();
        let mut oracle = ScriptedOracle::from_spec(&spec).unwrap();
        let mut cache = LossCache::new();
        let mut pair_rng = Prng::new(99);
        for _ in 0..20 {
            let at = pair_rng.below(u64::from(k)) as u32;
            let h = 1 + pair_rng.below(u64::from(k) - 1) as u32;
            let g = estimate_gradient(&mut oracle, ViewIndex::wrapped(at.into(), k), h, &mut cache);
            let behind = ViewIndex::wrapped(i64::from(at) - i64::from(h), k).get() as usize;
            let through = |l: f64| cross_entropy((-l).exp(), Label::Real);
            let expected = (through(table[at as usize]) - through(table[behind])) / f64::from(h);
            assert_eq!(g.value, expected, "at {at} h {h}");
            // The score transform is lossless to well below test tolerance.
            assert!((through(table[at as usize]) - table[at as usize]).abs() < 1e-9);
        }
    }

    #[test]
    fn gradient_reuses_cached_losses() {
        let k = 30u32;
        let losses: Vec<f64> = (0..k).map(|i| 1.0 + 0.01 * f64::from(i)).collect();
        let mut oracle = oracle_from_losses(losses, 0.0);
        let mut cache = LossCache::new();
        estimate_gradient(&mut oracle, ViewIndex::wrapped(10, k), 1, &mut cache);
        assert_eq!(oracle.ledger().score_queries(), 2);
        // Overlapping pair: only the new index is queried.
        estimate_gradient(&mut oracle, ViewIndex::wrapped(11, k), 1, &mut cache);
        assert_eq!(oracle.ledger().score_queries(), 3);
        // Fully cached pair: free.
        estimate_gradient(&mut oracle, ViewIndex::wrapped(11, k), 1, &mut cache);
        assert_eq!(oracle.ledger().score_queries(), 3);
        assert_eq!(cache.len(), 3);
        assert_eq!(oracle.ledger().decision_queries(), 0);
    }

    #[test]
    fn config_validation_rejects_bad_parameters() {
        let k = 360;
        let ok = AttackConfig::default();
        assert!(ok.validate(k).is_ok());
        assert_eq!(
            AttackConfig { max_queries: 0, ..ok }.validate(k).unwrap_err(),
            AttackError::Budget
        );
        assert!(matches!(
            AttackConfig { difference_step: 0, ..ok }.validate(k).unwrap_err(),
            AttackError::DifferenceStep { .. }
        ));
        assert!(AttackConfig { difference_step: 360, ..ok }.validate(k).is_err());
        assert!(AttackConfig { alpha_min: 0.0, ..ok }.validate(k).is_err());
        assert!(AttackConfig { alpha_max: 2.0, alpha_min: 3.0, ..ok }.validate(k).is_err());
        assert!(AttackConfig { alpha_max: f64::NAN, ..ok }.validate(k).is_err());
    }

    #[test]
    fn rand_is_complete_at_full_budget() {
        let k = 90u32;
        let mut with_set = 0;
        for trial in 0..200u64 {
            // Every third trial has an empty adversarial set.
            let spec = fluctuating_spec(trial, k, if trial % 3 == 0 { 0.0 } else { 0.1 });
            let truth = spec.adversarial_set();
            let mut oracle = ScriptedOracle::from_spec(&spec).unwrap();
            let cfg = AttackConfig {
                max_queries: u64::from(k),
                seed: trial,
                ..AttackConfig::default()
            };
            let res = advheat_rand(&mut oracle, &cfg).unwrap();
            assert_eq!(res.success, !truth.is_empty(), "trial {trial}");
            if res.success {
                with_set += 1;
                let found = res.adversarial_index.unwrap().get();
                assert!(truth.contains(&found), "non-adversarial index reported");
            } else {
                // Exhaustive failure: every view got exactly one decision.
                assert_eq!(res.queries_used.decision_queries(), u64::from(k));
                assert_eq!(res.queries_used.score_queries(), 0);
            }
        }
        assert!(with_set > 100, "too few non-empty trials: {with_set}");
    }

    #[test]
    fn rand_follows_its_seeded_permutation() {
        let k = 60u32;
        // No adversarial views, so the walk never stops early.
        let mut oracle = oracle_from_losses(vec![2.0; k as usize], 0.5);
        let cfg = AttackConfig { max_queries: 37, seed: 1234, ..AttackConfig::default() };
        let res = advheat_rand(&mut oracle, &cfg).unwrap();
        assert!(!res.success);
        assert_eq!(res.trace.len(), 37);
        assert_eq!(res.queries_used.total(), 37);

        let mut expected: Vec<u32> = (0..k).collect();
        Prng::from_words(&[cfg.seed, hash_str("rand-permutation")]).shuffle(&mut expected);
        for (step, got) in res.trace.iter().enumerate() {
            assert_eq!(got.index, expected[step], "step {step}");
            assert_eq!(got.step, step as u64);
            assert!(matches!(got.probe, Probe::Decision { label: Label::Fake }));
        }
    }

    #[test]
    fn score_attack_finds_the_basin_from_any_seed() {
        let k = 360u32;
        let target = 141u32;
        let losses = basin_losses(k, target, 0.05);
        let threshold = 0.1 + 0.05 * 12.5; // adversarial iff within 12 of target
        for seed in 0..24u64 {
            let mut oracle = oracle_from_losses(losses.clone(), threshold);
            let cfg = AttackConfig { max_queries: 360, seed, ..AttackConfig::default() };
            let res = advheat_score(&mut oracle, &cfg).unwrap();
            assert!(res.success, "seed {seed} failed");
            let found = res.adversarial_index.unwrap().get();
            assert!(ring_distance(found, target, k) <= 12);
            assert!(
                res.queries_used.total() < u64::from(k),
                "seed {seed} used {} queries",
                res.queries_used.total()
            );
            // On a clean V-shape the walk closes in monotonically.
            let decisions: Vec<u32> = res
                .trace
                .iter()
                .filter(|s| matches!(s.probe, Probe::Decision { .. }))
                .map(|s| s.index)
                .collect();
            for pair in decisions.windows(2) {
                assert!(
                    ring_distance(pair[1], target, k) < ring_distance(pair[0], target, k),
                    "seed {seed}: walk moved away from the basin"
                );
            }
        }
    }

    #[test]
    fn guided_attacks_exhaust_exact_budget_on_hopeless_landscapes() {
        let k = 72u32;
        for seed in 0..8u64 {
            let spec = fluctuating_spec(seed.wrapping_mul(31) ^ 5, k, 0.0);
            assert!(spec.adversarial_set().is_empty());
            for budget in [1u64, 2, 3, 10, 77, 200] {
                for magnitude in [false, true] {
                    let mut oracle = ScriptedOracle::from_spec(&spec).unwrap();
                    let cfg =
                        AttackConfig { max_queries: budget, seed, ..AttackConfig::default() };
                    let res = if magnitude {
                        baseline_score(&mut oracle, &cfg).unwrap()
                    } else {
                        advheat_score(&mut oracle, &cfg).unwrap()
                    };
                    assert!(!res.success);
                    assert_eq!(
                        res.queries_used.total(),
                        budget,
                        "seed {seed} budget {budget} magnitude {magnitude}"
                    );
                    assert_eq!(res.trace.len() as u64, budget);
                }
            }
        }
    }

    #[test]
    fn sign_steps_are_invariant_under_loss_scaling() {
        let k = 180u32;
        let spec = fluctuating_spec(77, k, 0.0);
        let table = spec.loss_table();
        let max = table.iter().cloned().fold(0.0, f64::max);
        let scale = 6.0;
        assert!(max * scale < 25.0, "scaled table would clamp");
        let scaled: Vec<f64> = table.iter().map(|l| l * scale).collect();

        let cfg = AttackConfig { max_queries: 150, seed: 4, ..AttackConfig::default() };
        let mut a = oracle_from_losses(table, 0.0);
        let mut b = oracle_from_losses(scaled, 0.0);
        let ra = advheat_score(&mut a, &cfg).unwrap();
        let rb = advheat_score(&mut b, &cfg).unwrap();
        let seq = |r: &AttackResult| -> Vec<u32> { r.trace.iter().map(|s| s.index).collect() };
        // Sign steps see only the slope's sign, which scaling preserves.
        assert_eq!(seq(&ra), seq(&rb));
        assert_eq!(ra.restarts, rb.restarts);

        // The magnitude baseline is *not* scale-invariant on this data.
        let spec2 = fluctuating_spec(77, k, 0.0);
        let t2 = spec2.loss_table();
        let s2: Vec<f64> = t2.iter().map(|l| l * scale).collect();
        let mut c = oracle_from_losses(t2, 0.0);
        let mut d = oracle_from_losses(s2, 0.0);
        let rc = baseline_score(&mut c, &cfg).unwrap();
        let rd = baseline_score(&mut d, &cfg).unwrap();
        assert_ne!(seq(&rc), seq(&rd), "baseline unexpectedly scale-invariant");
    }

    #[test]
    fn oscillation_triggers_restarts_on_a_hopeless_basin() {
        // A pure V with no adversarial views: sign descent reaches the
        // valley floor and ping-pongs across it until the restart rule
        // fires, every time, for every seed.
        let k = 90u32;
        let losses = basin_losses(k, 30, 0.2);
        let mut any_restarts = 0u32;
        for seed in 0..6u64 {
            let mut oracle = oracle_from_losses(losses.clone(), 0.05);
            let cfg = AttackConfig { max_queries: 360, seed, ..AttackConfig::default() };
            let res = advheat_score(&mut oracle, &cfg).unwrap();
            assert!(!res.success);
            assert_eq!(res.queries_used.total(), 360);
            any_restarts += res.restarts;
        }
        assert!(any_restarts > 0, "oscillation rule never fired");
    }

    #[test]
    fn baseline_never_moves_on_flat_landscapes() {
        let k = 48u32;
        // Flat loss above threshold: slope is exactly zero, so the
        // magnitude step stays zero and the walk is stuck.
        let mut oracle = oracle_from_losses(vec![3.0; k as usize], 0.5);
        let cfg = AttackConfig { max_queries: 96, seed: 9, ..AttackConfig::default() };
        let res = baseline_score(&mut oracle, &cfg).unwrap();
        assert!(!res.success);
        assert_eq!(res.queries_used.total(), 96);
        let decision_indexes: std::collections::BTreeSet<u32> = res
            .trace
            .iter()
            .filter(|s| matches!(s.probe, Probe::Decision { .. }))
            .map(|s| s.index)
            .collect();
        assert_eq!(decision_indexes.len(), 1, "flat-landscape baseline moved");
        assert_eq!(res.restarts, 0);
    }

    #[test]
    fn baseline_hops_by_rounded_gradient_steps() {
        // Loss falls by 1 per index, so the raw slope is -1 and a pinned
        // schedule of 10 makes every hop exactly +10 around the ring.
        let k = 24u32;
        let losses: Vec<f64> = (0..k).map(|i| 24.0 - f64::from(i)).collect();
        let threshold = 4.5; // adversarial set {20, 21, 22, 23}
        for seed in 0..10u64 {
            let mut oracle = oracle_from_losses(losses.clone(), threshold);
            let cfg = AttackConfig {
                max_queries: 60,
                alpha_max: 10.0,
                alpha_min: 10.0,
                seed,
                ..AttackConfig::default()
            };
            let res = baseline_score(&mut oracle, &cfg).unwrap();
            assert!(res.success, "seed {seed}");
            let decisions: Vec<u32> = res
                .trace
                .iter()
                .filter(|s| matches!(s.probe, Probe::Decision { .. }))
                .map(|s| s.index)
                .collect();
            for pair in decisions.windows(2) {
                assert_eq!(pair[1], (pair[0] + 10) % k, "seed {seed}: hop not +10");
            }
        }
    }

    #[test]
    fn sign_descent_beats_magnitude_steps_on_basins() {
        let k = 360u32;
        let mut score_wins = 0u32;
        let mut baseline_wins = 0u32;
        for trial in 0..300u64 {
            let mut rng = Prng::from_words(&[trial, 0xBA51]);
            let target = rng.below(u64::from(k)) as u32;
            // Dominant basin with ripple and per-index noise.
            let ripple_amp = rng.range_f64(0.05, 0.25);
            let ripple_cycles = 3.0 + rng.below(5) as f64;
            let losses: Vec<f64> = (0..k)
                .map(|i| {
                    let d = f64::from(ring_distance(i, target, k));
                    let s = 2.0 * std::f64::consts::PI * f64::from(i) / f64::from(k);
                    let noise =
                        0.05 * (2.0 * unit_sample(trial, 0xD00F, &[u64::from(i)]) - 1.0);
                    (0.2 + 0.011 * d + ripple_amp * (ripple_cycles * s).sin() + noise)
                        .clamp(1e-6, 25.0)
                })
                .collect();
            let threshold = 0.2 + 0.011 * 10.0; // a narrow arc near the target
            let cfg = AttackConfig { max_queries: 60, seed: trial, ..AttackConfig::default() };
            let mut o1 = oracle_from_losses(losses.clone(), threshold);
            let mut o2 = oracle_from_losses(losses, threshold);
            if advheat_score(&mut o1, &cfg).unwrap().success {
                score_wins += 1;
            }
            if baseline_score(&mut o2, &cfg).unwrap().success {
                baseline_wins += 1;
            }
        }
        assert!(
            score_wins > baseline_wins,
            "sign descent {score_wins} vs baseline {baseline_wins}"
        );
    }

    #[test]
    fn attacks_respect_budget_and_trace_matches_ledger() {
        let mut rng = Prng::new(2024);
        for trial in 0..300u64 {
            let k = 12 + rng.below(120) as u32;
            let spec = fluctuating_spec(trial ^ 0x51ED, k, rng.range_f64(0.0, 0.2));
            let budget = 1 + rng.below(2 * u64::from(k));
            let kind = AttackKind::ALL[rng.below(3) as usize];
            let mut oracle = ScriptedOracle::from_spec(&spec).unwrap();
            let cfg = AttackConfig { max_queries: budget, seed: trial, ..AttackConfig::default() };
            let res = run_attack(kind, &mut oracle, &cfg).unwrap();
            assert!(res.queries_used.total() <= budget, "{kind} exceeded budget");
            // The trace records exactly the metered calls, in order.
            let decisions = res
                .trace
                .iter()
                .filter(|s| matches!(s.probe, Probe::Decision { .. }))
                .count() as u64;
            let scores =
                res.trace.iter().filter(|s| matches!(s.probe, Probe::Loss { .. })).count() as u64;
            assert_eq!(decisions, res.queries_used.decision_queries());
            assert_eq!(scores, res.queries_used.score_queries());
            for (i, s) in res.trace.iter().enumerate() {
                assert_eq!(s.step, i as u64);
                assert!(s.index < k);
            }
            if res.success {
                let last = res.trace.last().unwrap();
                assert_eq!(last.index, res.adversarial_index.unwrap().get());
                assert!(matches!(last.probe, Probe::Decision { label: Label::Real }));
            }
        }
    }

    #[test]
    fn transfer_selection_prefers_the_most_real_view() {
        // A detector keyed on mean luminance alone ranks constant images
        // by their level.
        let mut weights = vec![0.0; FEATURE_COUNT];
        let lum = FEATURE_NAMES.iter().position(|n| *n == "lum_mean").unwrap();
        weights[lum] = 1.0;
        let det = Detector::new(weights.clone(), 0.0, QualityTier::Raw, 0.5).unwrap();
        let views = vec![
            Image::constant(16, 16, 1, 0.1).unwrap(),
            Image::constant(16, 16, 1, 0.9).unwrap(),
            Image::constant(16, 16, 1, 0.4).unwrap(),
        ];
        assert_eq!(select_transfer_view(&det, &views), Some(1));
        assert_eq!(select_transfer_view(&det, &[]), None);

        // Ties go to the lowest index.
        let tied = vec![
            Image::constant(16, 16, 1, 0.7).unwrap(),
            Image::constant(16, 16, 1, 0.7).unwrap(),
        ];
        assert_eq!(select_transfer_view(&det, &tied), Some(0));

        // Any positive rescaling of the weights keeps the ordering.
        let mut w3 = weights;
        w3[lum] = 3.0;
        let det3 = Detector::new(w3, 0.0, QualityTier::Raw, 0.5).unwrap();
        assert_eq!(select_transfer_view(&det3, &views), Some(1));
    }
}

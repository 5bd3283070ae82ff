//! Seeded generators for scripted loss landscapes.
//!
//! Two families cover the two evaluation regimes:
//!
//! * `fluctuating` — several mid-frequency sinusoids with an absolute
//!   threshold draw, yielding a mix of empty and non-empty adversarial
//!   sets. Used wherever exhaustive search is compared against ground
//!   truth.
//! * `basin` — one dominant full-ring sinusoid plus a small ripple and
//!   per-index noise, thresholded so the adversarial set is a single
//!   contiguous arc covering a few percent of the ring. Used for
//!   query-efficiency comparisons, where gradient guidance should pay off.
//!
//! Generation is a pure function of (family, base seed, landscape index),
//! so any landscape can be regenerated independently of the others.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::detector::{LandscapeSpec, Sinusoid};
use crate::rng::{hash_str, hash_words, Prng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Fluctuating,
    Basin,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Fluctuating => "fluctuating",
            Family::Basin => "basin",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fraction-of-ring bounds for a basin's adversarial arc. Narrow arcs are
/// what make guided descent pay off: blind sampling rarely lands in them,
/// while descent walks down the dominant valley. The lower bound keeps the
/// arc about as wide as one annealed descent step, so a walk that reaches
/// the valley floor actually lands instead of orbiting it.
const BASIN_ARC_FRACTION: (f64, f64) = (0.018, 0.032);
/// Attempts at drawing a basin whose arc is contiguous before accepting
/// the last draw as-is.
const BASIN_MAX_TRIES: u64 = 50;
const NOISE_AMPLITUDE: f64 = 0.05;
/// Basin noise is tie-breaking jitter only. Near a narrow arc's rim the
/// smooth landscape varies by ~1e-4 per index; noise must sit far below
/// that or it punches holes in the arc.
const BASIN_NOISE_AMPLITUDE: f64 = 1e-6;

pub fn generate_landscape(
    family: Family,
    base_seed: u64,
    index: u64,
    view_count: u32,
) -> LandscapeSpec {
    match family {
        Family::Fluctuating => fluctuating(base_seed, index, view_count),
        Family::Basin => basin(base_seed, index, view_count),
    }
}

fn fluctuating(base_seed: u64, index: u64, view_count: u32) -> LandscapeSpec {
    let tag = hash_str("landscape-fluctuating");
    let mut rng = Prng::from_words(&[base_seed, tag, index]);
    let components = (0..3)
        .map(|_| Sinusoid {
            amplitude: rng.range_f64(0.2, 0.9),
            cycles: 1 + rng.below(6) as u32,
            phase: rng.range_f64(0.0, TAU),
        })
        .collect();
    LandscapeSpec::Sinusoids {
        view_count,
        components,
        offset: rng.range_f64(0.8, 2.2),
        noise_seed: hash_words(&[base_seed, tag, index, 1]),
        noise_amplitude: NOISE_AMPLITUDE,
        // Absolute threshold: sometimes below every loss (empty set),
        // sometimes cutting into the valleys.
        adversarial_threshold: rng.range_f64(0.2, 1.2),
    }
}

fn basin(base_seed: u64, index: u64, view_count: u32) -> LandscapeSpec {
    let tag = hash_str("landscape-basin");
    let mut last = None;
    for attempt in 0..BASIN_MAX_TRIES {
        let mut rng = Prng::from_words(&[base_seed, tag, index, attempt]);
        let main = Sinusoid {
            amplitude: rng.range_f64(0.9, 1.3),
            cycles: 1,
            phase: rng.range_f64(0.0, TAU),
        };
        // The ripple keeps the landscape from being a bare sinusoid without
        // drowning the main slope's sign anywhere: its slope bound
        // (amplitude x cycles) is well under the main amplitude, so sign
        // descent reads the valley direction correctly except in a narrow
        // band at the extremes, and its curvature bound (amplitude x
        // cycles^2) stays below the main curvature, so the basin floor
        // keeps a single minimum and the sub-threshold arc cannot split.
        let ripple = Sinusoid {
            amplitude: rng.range_f64(0.01, 0.03),
            cycles: 2 + rng.below(2) as u32,
            phase: rng.range_f64(0.0, TAU),
        };
        let offset = rng.range_f64(1.5, 2.1);
        let arc_fraction = rng.range_f64(BASIN_ARC_FRACTION.0, BASIN_ARC_FRACTION.1);
        let mut spec = LandscapeSpec::Sinusoids {
            view_count,
            components: vec![main, ripple],
            offset,
            noise_seed: hash_words(&[base_seed, tag, index, attempt, 1]),
            noise_amplitude: BASIN_NOISE_AMPLITUDE,
            adversarial_threshold: 0.0,
        };
        let thr = arc_threshold(&spec, arc_fraction);
        if let LandscapeSpec::Sinusoids { adversarial_threshold, .. } = &mut spec {
            *adversarial_threshold = thr;
        }
        if is_contiguous_arc(&spec.adversarial_set(), view_count) {
            return spec;
        }
        last = Some(spec);
    }
    last.expect("at least one basin draw")
}

/// Mid-gap threshold that puts `round(fraction * K)` (at least 1) indices
/// strictly below it.
fn arc_threshold(spec: &LandscapeSpec, fraction: f64) -> f64 {
    let mut sorted = spec.effective_loss_table();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = ((fraction * sorted.len() as f64).round() as usize).clamp(1, sorted.len() - 1);
    0.5 * (sorted[m - 1] + sorted[m])
}

/// True when the set forms one circular run of consecutive indices.
pub fn is_contiguous_arc(set: &BTreeSet<u32>, view_count: u32) -> bool {
    if set.is_empty() {
        return false;
    }
    if set.len() as u32 == view_count {
        return true;
    }
    let mut boundaries = 0;
    for &i in set {
        if !set.contains(&((i + 1) % view_count)) {
            boundaries += 1;
        }
    }
    boundaries == 1
}

//! Experiment execution: turns a validated spec into a sorted result table
//! plus a manifest describing exactly what ran. Everything is derived from
//! the spec's seed, so re-running a spec reproduces the output byte for byte.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::attack::{run_attack, select_transfer_view};
use crate::detector::{extract_features, Detector, Label, ScriptedOracle};
use crate::imageproc::QualityTier;
use crate::renderer::{render, IdentitySpec, Image, RenderConfig};
use crate::rng::{hash_str, hash_words};
use crate::viewpath::{pose_for_angles, ViewPath};

use super::config::{ExperimentKind, ExperimentSpec, OracleFlavor};
use super::landscapes::generate_landscape;
use super::report::{to_json, Cell, Table};
use super::{
    identity_seed, pipeline_probability, render_training_images, train_tier_detector,
    HarnessError, RenderedOracle, GROUP_ATTACK_FAKE,
};

/// A finished experiment: the result table (rows already in canonical
/// order) and the manifest to write beside it.
pub struct ExperimentRun {
    pub table: Table,
    pub manifest: Value,
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentRun, HarnessError> {
    spec.validate()?;
    let (mut table, provenance) = match spec.experiment.kind {
        ExperimentKind::SuccessMatrix => success_matrix(spec)?,
        ExperimentKind::QueryCurve => query_curve(spec)?,
        ExperimentKind::TransferMatrix => transfer_matrix(spec)?,
        ExperimentKind::DefenseEval => defense_eval(spec)?,
        ExperimentKind::KAblation => k_ablation(spec)?,
        ExperimentKind::AngleHeatmap => angle_heatmap(spec)?,
        ExperimentKind::ViewHistogram => view_histogram(spec)?,
    };
    table.sort_rows();
    let manifest = json!({
        "format_version": 1,
        "kind": spec.experiment.kind.as_str(),
        "name": spec.label(),
        "seed": spec.experiment.seed,
        "oracle": spec.experiment.oracle.as_str(),
        "config": to_json(spec)?,
        "provenance": provenance,
        "table": {
            "name": table.name,
            "columns": table.columns,
            "rows": table.rows.len(),
        },
    });
    Ok(ExperimentRun { table, manifest })
}

// ---------------------------------------------------------------------------
// Shared setup
// ---------------------------------------------------------------------------

struct BenchDetector {
    label: String,
    tier: QualityTier,
    detector: Arc<Detector>,
    train_accuracy: f64,
    threshold: f64,
}

struct Bench {
    path: ViewPath,
    render_cfg: RenderConfig,
    camera_radius: f64,
    detectors: Vec<BenchDetector>,
}

/// Train every configured detector on one shared front-view corpus
/// (transformed per tier). Training order never matters: each detector's
/// shuffle seed is derived from its slot.
fn build_bench(spec: &ExperimentSpec) -> Result<Bench, HarnessError> {
    let path = spec.path.build()?;
    let render_cfg = spec.render.build()?;
    let camera_radius = spec.render.camera_radius;
    let raw_corpus = render_training_images(
        spec.experiment.seed,
        spec.population.train_real,
        spec.population.train_fake,
        spec.population.artifact_strength,
        &path,
        &render_cfg,
        camera_radius,
    )?;
    let mut detectors = Vec::with_capacity(spec.detectors.len());
    for (slot, section) in spec.detectors.iter().enumerate() {
        let train_seed =
            hash_words(&[spec.experiment.seed, hash_str("train-detector"), slot as u64]);
        let (detector, train_accuracy) = train_tier_detector(
            &raw_corpus,
            section.tier,
            spec.training.epochs,
            spec.training.learning_rate,
            train_seed,
            section.threshold,
        )?;
        detectors.push(BenchDetector {
            label: format!("detector-{slot}"),
            tier: section.tier,
            detector: Arc::new(detector),
            train_accuracy,
            threshold: section.threshold,
        });
    }
    Ok(Bench { path, render_cfg, camera_radius, detectors })
}

fn attack_identity(spec: &ExperimentSpec, unit: u64) -> Result<IdentitySpec, HarnessError> {
    Ok(IdentitySpec::fake(
        identity_seed(spec.experiment.seed, GROUP_ATTACK_FAKE, unit),
        spec.population.artifact_strength,
    )?)
}

/// Per-run attack seed: stable under reordering of detectors, attacks,
/// units, and ring sizes.
fn attack_seed(base: u64, detector_slot: u64, attack_slot: u64, unit: u64, ring: u64) -> u64 {
    hash_words(&[base, hash_str("attack-run"), detector_slot, attack_slot, unit, ring])
}

/// Detector slot used in attack seeds when the oracle is scripted.
const SCRIPTED_SLOT: u64 = u64::MAX;

fn scripted_oracle(spec: &ExperimentSpec, unit: u64, ring: u32) -> Result<ScriptedOracle, HarnessError> {
    let landscape =
        generate_landscape(spec.landscapes.family, spec.experiment.seed, unit, ring);
    Ok(ScriptedOracle::from_spec(&landscape)?)
}

fn rate(successes: u32, units: u32) -> f64 {
    100.0 * f64::from(successes) / f64::from(units)
}

fn rendered_provenance(bench: &Bench, units: u32) -> Value {
    let detectors: Vec<Value> = bench
        .detectors
        .iter()
        .map(|d| {
            json!({
                "label": d.label,
                "tier": d.tier.as_str(),
                "threshold": d.threshold,
                "train_accuracy": d.train_accuracy,
            })
        })
        .collect();
    json!({ "detectors": detectors, "units": units })
}

fn scripted_provenance(spec: &ExperimentSpec) -> Value {
    json!({
        "landscapes": {
            "count": spec.landscapes.count,
            "family": spec.landscapes.family.as_str(),
            "view_count": spec.landscapes.view_count,
        },
        "units": spec.landscapes.count,
    })
}

/// Render every view on the ring once; callers reuse the images across
/// detectors and tiers.
fn render_ring(
    identity: &IdentitySpec,
    path: &ViewPath,
    render_cfg: &RenderConfig,
    camera_radius: f64,
) -> Result<Vec<Image>, HarnessError> {
    let mut views = Vec::with_capacity(path.view_count() as usize);
    for i in 0..path.view_count() {
        let index = path.wrap_index(i64::from(i));
        let pose = pose_for_angles(&path.angles_for_index(index), camera_radius)?;
        views.push(render(identity, &pose, render_cfg));
    }
    Ok(views)
}

/// Ground-truth adversarial views of a rendered ring under one detector:
/// indices the full pipeline classifies real.
fn adversarial_indices(detector: &Detector, raw_views: &[Image]) -> Vec<u32> {
    raw_views
        .iter()
        .enumerate()
        .filter(|(_, img)| {
            let p = pipeline_probability(detector, img, None);
            detector.label_for_probability(p) == Label::Real
        })
        .map(|(i, _)| i as u32)
        .collect()
}

// ---------------------------------------------------------------------------
// success_matrix
// ---------------------------------------------------------------------------

fn success_matrix(spec: &ExperimentSpec) -> Result<(Table, Value), HarnessError> {
    let mut table =
        Table::new("success_matrix", &["detector", "tier", "attack", "units", "asr"]);
    match spec.experiment.oracle {
        OracleFlavor::Rendered => {
            let bench = build_bench(spec)?;
            let units = spec.population.attack_fake;
            for (slot, bdet) in bench.detectors.iter().enumerate() {
                for (aslot, attack) in spec.attacks.iter().enumerate() {
                    let mut wins = 0u32;
                    for unit in 0..units {
                        let identity = attack_identity(spec, u64::from(unit))?;
                        let mut oracle = RenderedOracle::new(
                            bdet.detector.clone(),
                            identity,
                            bench.path,
                            bench.render_cfg,
                            bench.camera_radius,
                            None,
                        )?;
                        let cfg = attack.to_config(attack_seed(
                            spec.experiment.seed,
                            slot as u64,
                            aslot as u64,
                            u64::from(unit),
                            u64::from(bench.path.view_count()),
                        ));
                        let result = run_attack(attack.kind, &mut oracle, &cfg)?;
                        wins += u32::from(result.success);
                    }
                    table.push(vec![
                        Cell::text(&bdet.label),
                        Cell::text(bdet.tier.as_str()),
                        Cell::text(attack.kind.as_str()),
                        Cell::Int(i64::from(units)),
                        Cell::Real(rate(wins, units)),
                    ]);
                }
            }
            Ok((table, rendered_provenance(&bench, units)))
        }
        OracleFlavor::Scripted => {
            let units = spec.landscapes.count;
            let ring = spec.landscapes.view_count;
            for (aslot, attack) in spec.attacks.iter().enumerate() {
                let mut wins = 0u32;
                for unit in 0..units {
                    let mut oracle = scripted_oracle(spec, u64::from(unit), ring)?;
                    let cfg = attack.to_config(attack_seed(
                        spec.experiment.seed,
                        SCRIPTED_SLOT,
                        aslot as u64,
                        u64::from(unit),
                        u64::from(ring),
                    ));
                    let result = run_attack(attack.kind, &mut oracle, &cfg)?;
                    wins += u32::from(result.success);
                }
                table.push(vec![
                    Cell::text("scripted"),
                    Cell::text("none"),
                    Cell::text(attack.kind.as_str()),
                    Cell::Int(i64::from(units)),
                    Cell::Real(rate(wins, units)),
                ]);
            }
            Ok((table, scripted_provenance(spec)))
        }
    }
}

// ---------------------------------------------------------------------------
// query_curve
// ---------------------------------------------------------------------------

/// One attack run per unit at the largest checkpoint; a run that succeeded
/// within `b` total queries would have unfolded identically under budget
/// `b`, so every checkpoint is read off the same trace.
fn query_curve(spec: &ExperimentSpec) -> Result<(Table, Value), HarnessError> {
    let mut table = Table::new(
        "query_curve",
        &["detector", "tier", "attack", "budget", "units", "asr"],
    );
    let checkpoints = &spec.query_curve.checkpoints;
    let max_budget = *checkpoints.last().expect("validated non-empty");

    // (detector label, tier label, attack slot) -> per-unit (success, total).
    let push_rows = |table: &mut Table,
                         detector_label: &str,
                         tier_label: &str,
                         attack_name: &str,
                         outcomes: &[(bool, u64)]| {
        let units = outcomes.len() as u32;
        for &budget in checkpoints {
            let wins =
                outcomes.iter().filter(|(ok, total)| *ok && *total <= budget).count() as u32;
            table.push(vec![
                Cell::text(detector_label),
                Cell::text(tier_label),
                Cell::text(attack_name),
                Cell::Int(budget as i64),
                Cell::Int(i64::from(units)),
                Cell::Real(rate(wins, units)),
            ]);
        }
    };

    match spec.experiment.oracle {
        OracleFlavor::Rendered => {
            let bench = build_bench(spec)?;
            let units = spec.population.attack_fake;
            for (slot, bdet) in bench.detectors.iter().enumerate() {
                for (aslot, attack) in spec.attacks.iter().enumerate() {
                    let mut outcomes = Vec::with_capacity(units as usize);
                    for unit in 0..units {
                        let identity = attack_identity(spec, u64::from(unit))?;
                        let mut oracle = RenderedOracle::new(
                            bdet.detector.clone(),
                            identity,
                            bench.path,
                            bench.render_cfg,
                            bench.camera_radius,
                            None,
                        )?;
                        let cfg = attack.to_config_with_budget(
                            attack_seed(
                                spec.experiment.seed,
                                slot as u64,
                                aslot as u64,
                                u64::from(unit),
                                u64::from(bench.path.view_count()),
                            ),
                            max_budget,
                        );
                        let result = run_attack(attack.kind, &mut oracle, &cfg)?;
                        outcomes.push((result.success, result.queries_used.total()));
                    }
                    push_rows(
                        &mut table,
                        &bdet.label,
                        bdet.tier.as_str(),
                        attack.kind.as_str(),
                        &outcomes,
                    );
                }
            }
            Ok((table, rendered_provenance(&bench, units)))
        }
        OracleFlavor::Scripted => {
            let units = spec.landscapes.count;
            let ring = spec.landscapes.view_count;
            for (aslot, attack) in spec.attacks.iter().enumerate() {
                let mut outcomes = Vec::with_capacity(units as usize);
                for unit in 0..units {
                    let mut oracle = scripted_oracle(spec, u64::from(unit), ring)?;
                    let cfg = attack.to_config_with_budget(
                        attack_seed(
                            spec.experiment.seed,
                            SCRIPTED_SLOT,
                            aslot as u64,
                            u64::from(unit),
                            u64::from(ring),
                        ),
                        max_budget,
                    );
                    let result = run_attack(attack.kind, &mut oracle, &cfg)?;
                    outcomes.push((result.success, result.queries_used.total()));
                }
                push_rows(&mut table, "scripted", "none", attack.kind.as_str(), &outcomes);
            }
            Ok((table, scripted_provenance(spec)))
        }
    }
}

// ---------------------------------------------------------------------------
// transfer_matrix
// ---------------------------------------------------------------------------

/// For every identity, each source detector picks its most-real-looking
/// view from the tier it operates at; every target detector then judges
/// that same view at its own tier. Rendered oracles only.
fn transfer_matrix(spec: &ExperimentSpec) -> Result<(Table, Value), HarnessError> {
    let bench = build_bench(spec)?;
    let units = spec.population.attack_fake;
    let n = bench.detectors.len();
    let mut wins = vec![vec![0u32; n]; n];

    for unit in 0..units {
        let identity = attack_identity(spec, u64::from(unit))?;
        let raw_views =
            render_ring(&identity, &bench.path, &bench.render_cfg, bench.camera_radius)?;
        // One transformed copy of the ring per distinct tier in play.
        let mut tier_views: BTreeMap<QualityTier, Vec<Image>> = BTreeMap::new();
        for bdet in &bench.detectors {
            tier_views.entry(bdet.tier).or_insert_with(|| {
                raw_views
                    .iter()
                    .map(|img| crate::imageproc::quality_transform(img, bdet.tier))
                    .collect()
            });
        }
        for (si, source) in bench.detectors.iter().enumerate() {
            let views = &tier_views[&source.tier];
            let chosen = select_transfer_view(&source.detector, views)
                .expect("ring is never empty");
            for (ti, target) in bench.detectors.iter().enumerate() {
                let img = &tier_views[&target.tier][chosen];
                let p = target.detector.probability(&extract_features(img));
                if target.detector.label_for_probability(p) == Label::Real {
                    wins[si][ti] += 1;
                }
            }
        }
    }

    let mut table = Table::new(
        "transfer_matrix",
        &["source", "source_tier", "target", "target_tier", "identities", "asr"],
    );
    for (si, source) in bench.detectors.iter().enumerate() {
        for (ti, target) in bench.detectors.iter().enumerate() {
            table.push(vec![
                Cell::text(&source.label),
                Cell::text(source.tier.as_str()),
                Cell::text(&target.label),
                Cell::text(target.tier.as_str()),
                Cell::Int(i64::from(units)),
                Cell::Real(rate(wins[si][ti], units)),
            ]);
        }
    }
    let provenance = rendered_provenance(&bench, units);
    Ok((table, provenance))
}

// ---------------------------------------------------------------------------
// defense_eval
// ---------------------------------------------------------------------------

/// Attacks run against the undefended pipeline; each found view is then
/// re-rendered and judged with the defense inserted ahead of the detector.
/// The "none" row is the undefended attack success rate, so every defense
/// row is bounded above by it.
fn defense_eval(spec: &ExperimentSpec) -> Result<(Table, Value), HarnessError> {
    let bench = build_bench(spec)?;
    let units = spec.population.attack_fake;
    let mut table = Table::new(
        "defense_eval",
        &["detector", "tier", "attack", "defense", "units", "asr"],
    );

    for (slot, bdet) in bench.detectors.iter().enumerate() {
        for (aslot, attack) in spec.attacks.iter().enumerate() {
            let mut none_wins = 0u32;
            let mut defended_wins = vec![0u32; spec.defenses.len()];
            for unit in 0..units {
                let identity = attack_identity(spec, u64::from(unit))?;
                let mut oracle = RenderedOracle::new(
                    bdet.detector.clone(),
                    identity,
                    bench.path,
                    bench.render_cfg,
                    bench.camera_radius,
                    None,
                )?;
                let cfg = attack.to_config(attack_seed(
                    spec.experiment.seed,
                    slot as u64,
                    aslot as u64,
                    u64::from(unit),
                    u64::from(bench.path.view_count()),
                ));
                let result = run_attack(attack.kind, &mut oracle, &cfg)?;
                if !result.success {
                    continue;
                }
                none_wins += 1;
                let found = result.adversarial_index.expect("success carries an index");
                let raw = oracle.render_view(found);
                for (di, defense) in spec.defenses.iter().enumerate() {
                    let p = pipeline_probability(&bdet.detector, &raw, Some(defense));
                    if bdet.detector.label_for_probability(p) == Label::Real {
                        defended_wins[di] += 1;
                    }
                }
            }
            let mut push = |defense_label: &str, wins: u32| {
                table.push(vec![
                    Cell::text(&bdet.label),
                    Cell::text(bdet.tier.as_str()),
                    Cell::text(attack.kind.as_str()),
                    Cell::text(defense_label),
                    Cell::Int(i64::from(units)),
                    Cell::Real(rate(wins, units)),
                ]);
            };
            push("none", none_wins);
            for (di, defense) in spec.defenses.iter().enumerate() {
                push(&defense.label(), defended_wins[di]);
            }
        }
    }
    let provenance = rendered_provenance(&bench, units);
    Ok((table, provenance))
}

// ---------------------------------------------------------------------------
// k_ablation
// ---------------------------------------------------------------------------

/// Same attacks, same detector or landscape family, different ring
/// resolutions. Scripted landscapes reuse the same parameter draws at every
/// size, so each size is a finer or coarser sampling of the same terrain.
fn k_ablation(spec: &ExperimentSpec) -> Result<(Table, Value), HarnessError> {
    let mut table = Table::new("k_ablation", &["oracle", "attack", "k", "units", "asr"]);
    match spec.experiment.oracle {
        OracleFlavor::Rendered => {
            // Exactly one detector (validated); the front-view training pose
            // is identical for every ring size, so one bench serves all.
            let bench = build_bench(spec)?;
            let bdet = &bench.detectors[0];
            let units = spec.population.attack_fake;
            for &k in &spec.k_ablation.view_counts {
                let path_k = spec.path.build_with_view_count(k)?;
                for (aslot, attack) in spec.attacks.iter().enumerate() {
                    let mut wins = 0u32;
                    for unit in 0..units {
                        let identity = attack_identity(spec, u64::from(unit))?;
                        let mut oracle = RenderedOracle::new(
                            bdet.detector.clone(),
                            identity,
                            path_k,
                            bench.render_cfg,
                            bench.camera_radius,
                            None,
                        )?;
                        let cfg = attack.to_config(attack_seed(
                            spec.experiment.seed,
                            0,
                            aslot as u64,
                            u64::from(unit),
                            u64::from(k),
                        ));
                        let result = run_attack(attack.kind, &mut oracle, &cfg)?;
                        wins += u32::from(result.success);
                    }
                    table.push(vec![
                        Cell::text("rendered"),
                        Cell::text(attack.kind.as_str()),
                        Cell::Int(i64::from(k)),
                        Cell::Int(i64::from(units)),
                        Cell::Real(rate(wins, units)),
                    ]);
                }
            }
            Ok((table, rendered_provenance(&bench, units)))
        }
        OracleFlavor::Scripted => {
            let units = spec.landscapes.count;
            for &k in &spec.k_ablation.view_counts {
                for (aslot, attack) in spec.attacks.iter().enumerate() {
                    let mut wins = 0u32;
                    for unit in 0..units {
                        let mut oracle = scripted_oracle(spec, u64::from(unit), k)?;
                        let cfg = attack.to_config(attack_seed(
                            spec.experiment.seed,
                            SCRIPTED_SLOT,
                            aslot as u64,
                            u64::from(unit),
                            u64::from(k),
                        ));
                        let result = run_attack(attack.kind, &mut oracle, &cfg)?;
                        wins += u32::from(result.success);
                    }
                    table.push(vec![
                        Cell::text("scripted"),
                        Cell::text(attack.kind.as_str()),
                        Cell::Int(i64::from(k)),
                        Cell::Int(i64::from(units)),
                        Cell::Real(rate(wins, units)),
                    ]);
                }
            }
            Ok((table, scripted_provenance(spec)))
        }
    }
}

// ---------------------------------------------------------------------------
// angle_heatmap
// ---------------------------------------------------------------------------

fn bin_of(value: f64, lo: f64, hi: f64, bins: u32) -> usize {
    if hi <= lo {
        return 0;
    }
    let t = (value - lo) / (hi - lo);
    let b = (t * f64::from(bins)).floor();
    (b.max(0.0) as usize).min(bins as usize - 1)
}

/// Census of where adversarial views sit in (yaw, pitch) space, pooled
/// across units, with every bin emitted (including empty ones).
fn angle_heatmap(spec: &ExperimentSpec) -> Result<(Table, Value), HarnessError> {
    let yaw_bins = spec.angle_heatmap.yaw_bins;
    let pitch_bins = spec.angle_heatmap.pitch_bins;
    let mut table = Table::new(
        "angle_heatmap",
        &["detector", "yaw_center", "pitch_center", "count", "share_pct"],
    );

    // One grid per detector label, counted over that detector's units.
    let mut grids: Vec<(String, Vec<u64>)> = Vec::new();

    // Angle ranges covered by the sweep; shared by HUD and binning.
    let heat_path;
    match spec.experiment.oracle {
        OracleFlavor::Rendered => {
            heat_path = spec.path.build()?;
            let bench = build_bench(spec)?;
            let units = spec.population.attack_fake;
            for bdet in &bench.detectors {
                let mut grid = vec![0u64; (yaw_bins * pitch_bins) as usize];
                for unit in 0..units {
                    let identity = attack_identity(spec, u64::from(unit))?;
                    let raw_views = render_ring(
                        &identity,
                        &bench.path,
                        &bench.render_cfg,
                        bench.camera_radius,
                    )?;
                    for idx in adversarial_indices(&bdet.detector, &raw_views) {
                        let angles = heat_path.angles_for_index(heat_path.wrap_index(i64::from(idx)));
                        let yb = bin_of(
                            angles.phi,
                            heat_path.center() - heat_path.yaw_amplitude(),
                            heat_path.center() + heat_path.yaw_amplitude(),
                            yaw_bins,
                        );
                        let pb = bin_of(
                            angles.theta,
                            heat_path.center() - heat_path.pitch_amplitude(),
                            heat_path.center() + heat_path.pitch_amplitude(),
                            pitch_bins,
                        );
                        grid[yb * pitch_bins as usize + pb] += 1;
                    }
                }
                grids.push((bdet.label.clone(), grid));
            }
            let provenance = rendered_provenance(&bench, units);
            emit_heatmap(&mut table, &grids, &heat_path, yaw_bins, pitch_bins);
            return Ok((table, provenance));
        }
        OracleFlavor::Scripted => {
            heat_path = spec.path.build_with_view_count(spec.landscapes.view_count)?;
            let units = spec.landscapes.count;
            let mut grid = vec![0u64; (yaw_bins * pitch_bins) as usize];
            for unit in 0..units {
                let mut oracle = scripted_oracle(spec, u64::from(unit), spec.landscapes.view_count)?;
                for idx in super::brute_force_adversarial_set(&mut oracle) {
                    let angles = heat_path.angles_for_index(idx);
                    let yb = bin_of(
                        angles.phi,
                        heat_path.center() - heat_path.yaw_amplitude(),
                        heat_path.center() + heat_path.yaw_amplitude(),
                        yaw_bins,
                    );
                    let pb = bin_of(
                        angles.theta,
                        heat_path.center() - heat_path.pitch_amplitude(),
                        heat_path.center() + heat_path.pitch_amplitude(),
                        pitch_bins,
                    );
                    grid[yb * pitch_bins as usize + pb] += 1;
                }
            }
            grids.push(("scripted".to_string(), grid));
            emit_heatmap(&mut table, &grids, &heat_path, yaw_bins, pitch_bins);
            Ok((table, scripted_provenance(spec)))
        }
    }
}

fn emit_heatmap(
    table: &mut Table,
    grids: &[(String, Vec<u64>)],
    path: &ViewPath,
    yaw_bins: u32,
    pitch_bins: u32,
) {
    let yaw_lo = path.center() - path.yaw_amplitude();
    let yaw_w = 2.0 * path.yaw_amplitude() / f64::from(yaw_bins);
    let pitch_lo = path.center() - path.pitch_amplitude();
    let pitch_w = 2.0 * path.pitch_amplitude() / f64::from(pitch_bins);
    for (label, grid) in grids {
        let total: u64 = grid.iter().sum();
        for yb in 0..yaw_bins as usize {
            for pb in 0..pitch_bins as usize {
                let count = grid[yb * pitch_bins as usize + pb];
                let share = if total > 0 {
                    100.0 * count as f64 / total as f64
                } else {
                    0.0
                };
                table.push(vec![
                    Cell::text(label),
                    Cell::Real(yaw_lo + (yb as f64 + 0.5) * yaw_w),
                    Cell::Real(pitch_lo + (pb as f64 + 0.5) * pitch_w),
                    Cell::Int(count as i64),
                    Cell::Real(share),
                ]);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// view_histogram
// ---------------------------------------------------------------------------

/// Distribution of adversarial-set sizes across units. Only sizes that
/// occur appear as rows.
fn view_histogram(spec: &ExperimentSpec) -> Result<(Table, Value), HarnessError> {
    let mut table =
        Table::new("view_histogram", &["detector", "adversarial_views", "identities"]);
    match spec.experiment.oracle {
        OracleFlavor::Rendered => {
            let bench = build_bench(spec)?;
            let units = spec.population.attack_fake;
            for bdet in &bench.detectors {
                let mut sizes: BTreeMap<usize, u32> = BTreeMap::new();
                for unit in 0..units {
                    let identity = attack_identity(spec, u64::from(unit))?;
                    let raw_views = render_ring(
                        &identity,
                        &bench.path,
                        &bench.render_cfg,
                        bench.camera_radius,
                    )?;
                    let size = adversarial_indices(&bdet.detector, &raw_views).len();
                    *sizes.entry(size).or_insert(0) += 1;
                }
                for (size, identities) in &sizes {
                    table.push(vec![
                        Cell::text(&bdet.label),
                        Cell::Int(*size as i64),
                        Cell::Int(i64::from(*identities)),
                    ]);
                }
            }
            let provenance = rendered_provenance(&bench, units);
            Ok((table, provenance))
        }
        OracleFlavor::Scripted => {
            let units = spec.landscapes.count;
            let ring = spec.landscapes.view_count;
            let mut sizes: BTreeMap<usize, u32> = BTreeMap::new();
            for unit in 0..units {
                let mut oracle = scripted_oracle(spec, u64::from(unit), ring)?;
                let size = super::brute_force_adversarial_set(&mut oracle).len();
                *sizes.entry(size).or_insert(0) += 1;
            }
            for (size, identities) in &sizes {
                table.push(vec![
                    Cell::text("scripted"),
                    Cell::Int(*size as i64),
                    Cell::Int(i64::from(*identities)),
                ]);
            }
            Ok((table, scripted_provenance(spec)))
        }
    }
}

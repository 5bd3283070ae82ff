//! Command-line front end: rendering, corpus construction, detector
//! training, single attacks, brute-force ground truth, full experiments,
//! input defenses, and report inspection. Every input is an explicit flag
//! or config key; reruns with identical arguments produce identical bytes.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use advheat::attack::{
    run_attack, AttackKind, SignConvention, DEFAULT_ALPHA_MAX, DEFAULT_ALPHA_MIN,
    DEFAULT_DIFFERENCE_STEP, DEFAULT_MAX_QUERIES,
};
use advheat::detector::{Detector, ScriptedOracle, ViewOracle};
use advheat::harness::landscapes::generate_landscape;
use advheat::harness::{
    brute_force_adversarial_set, render_training_images, run_experiment, train_tier_detector,
    write_report, ExperimentSpec, Family, RenderedOracle,
};
use advheat::imageproc::{
    DefenseKind, DefenseSpec, QualityTier, DEFAULT_RESIZE_SCALE_MAX, DEFAULT_RESIZE_SCALE_MIN,
};
use advheat::renderer::{
    render, IdentitySpec, Image, RenderConfig, DEFAULT_DEGRADATION_GAIN, DEFAULT_LIGHT_DIRECTION,
    DEFAULT_RESOLUTION,
};
use advheat::rng::{hash_str, hash_words};
use advheat::viewpath::{
    pose_for_angles, ViewPath, DEFAULT_CENTER, DEFAULT_PITCH_AMPLITUDE, DEFAULT_VIEW_COUNT,
    DEFAULT_YAW_AMPLITUDE,
};

fn main() -> ExitCode {
    match Cli::parse().command.run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[derive(Parser)]
#[command(
    name = "advheat",
    version,
    about = "Deterministic testbed for black-box adversarial viewpoint attacks \
             on real/fake image detectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render one identity at one view-path index to a binary PPM image
    Render(RenderCmd),
    /// Render the labeled frontal training corpus into a directory
    MakeCorpus(MakeCorpusCmd),
    /// Train a quality-tier detector on freshly rendered frontal images
    TrainDetector(TrainDetectorCmd),
    /// Run one black-box attack against a rendered or scripted oracle
    Attack(AttackCmd),
    /// Exhaustively scan every view and report the adversarial set
    BruteForce(BruteForceCmd),
    /// Run a full experiment from a TOML spec and write its report files
    Experiment(ExperimentCmd),
    /// Apply an input defense to a PPM image
    Defend(DefendCmd),
    /// Validate and print the report written by a previous experiment run
    Report(ReportCmd),
}

impl Command {
    fn run(self) -> Result<()> {
        match self {
            Command::Render(c) => c.run(),
            Command::MakeCorpus(c) => c.run(),
            Command::TrainDetector(c) => c.run(),
            Command::Attack(c) => c.run(),
            Command::BruteForce(c) => c.run(),
            Command::Experiment(c) => c.run(),
            Command::Defend(c) => c.run(),
            Command::Report(c) => c.run(),
        }
    }
}

// ---------------------------------------------------------------------------
// Shared flag groups
// ---------------------------------------------------------------------------

#[derive(Args)]
struct PathArgs {
    /// Number of views on the cyclic camera path
    #[arg(long, default_value_t = DEFAULT_VIEW_COUNT)]
    view_count: u32,
    /// Yaw swing around the path center, radians
    #[arg(long, default_value_t = DEFAULT_YAW_AMPLITUDE)]
    yaw_amplitude: f64,
    /// Pitch swing around the path center, radians
    #[arg(long, default_value_t = DEFAULT_PITCH_AMPLITUDE)]
    pitch_amplitude: f64,
    /// Angle the path orbits around, radians
    #[arg(long, default_value_t = DEFAULT_CENTER)]
    center: f64,
}

impl PathArgs {
    fn build(&self) -> Result<ViewPath> {
        Ok(ViewPath::new(self.view_count, self.yaw_amplitude, self.pitch_amplitude, self.center)?)
    }
}

#[derive(Args)]
struct RenderArgs {
    /// Square image resolution in pixels
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: u32,
    /// Strength of the view-dependent blur/noise degradation
    #[arg(long, default_value_t = DEFAULT_DEGRADATION_GAIN)]
    degradation_gain: f64,
    /// Render three-channel color instead of replicated luminance
    #[arg(long)]
    color: bool,
    /// Camera distance from the head center
    #[arg(long, default_value_t = 1.0)]
    camera_radius: f64,
}

impl RenderArgs {
    fn build(&self) -> Result<RenderConfig> {
        Ok(RenderConfig::new(
            self.resolution,
            self.degradation_gain,
            DEFAULT_LIGHT_DIRECTION,
            self.color,
        )?)
    }
}

// ---------------------------------------------------------------------------
// Flag value parsers
// ---------------------------------------------------------------------------

fn parse_tier(s: &str) -> Result<QualityTier, String> {
    QualityTier::ALL
        .into_iter()
        .find(|t| t.as_str() == s)
        .ok_or_else(|| format!("unknown tier {s:?}; expected raw, hq, or lq"))
}

fn parse_attack_kind(s: &str) -> Result<AttackKind, String> {
    AttackKind::parse(s)
        .ok_or_else(|| format!("unknown attack kind {s:?}; expected rand, score, or baseline"))
}

fn parse_family(s: &str) -> Result<Family, String> {
    match s {
        "basin" => Ok(Family::Basin),
        "fluctuating" => Ok(Family::Fluctuating),
        _ => Err(format!("unknown landscape family {s:?}; expected basin or fluctuating")),
    }
}

fn parse_sign(s: &str) -> Result<SignConvention, String> {
    match s {
        "descend" => Ok(SignConvention::DescendRealLoss),
        "ascend" => Ok(SignConvention::Ascend),
        _ => Err(format!("unknown sign convention {s:?}; expected descend or ascend")),
    }
}

// ---------------------------------------------------------------------------
// render
// ---------------------------------------------------------------------------

#[derive(Args)]
struct RenderCmd {
    /// Texture seed of the identity to render
    #[arg(long)]
    identity_seed: u64,
    /// Render the manipulated variant of the identity
    #[arg(long)]
    fake: bool,
    /// Artifact strength for --fake renders, in (0, 1]
    #[arg(long, default_value_t = 0.5)]
    strength: f64,
    /// View-path index to render from (wrapped into range)
    #[arg(long, default_value_t = 0)]
    view_index: i64,
    #[command(flatten)]
    path: PathArgs,
    #[command(flatten)]
    render: RenderArgs,
    /// Output PPM file
    #[arg(long)]
    out: PathBuf,
}

impl RenderCmd {
    fn run(self) -> Result<()> {
        let path = self.path.build()?;
        let cfg = self.render.build()?;
        let identity = if self.fake {
            IdentitySpec::fake(self.identity_seed, self.strength)?
        } else {
            IdentitySpec::real(self.identity_seed)
        };
        let index = path.wrap_index(self.view_index);
        let pose = pose_for_angles(&path.angles_for_index(index), self.render.camera_radius)?;
        let img = render(&identity, &pose, &cfg);
        fs::write(&self.out, img.to_ppm_bytes())
            .with_context(|| format!("writing {}", self.out.display()))?;
        println!(
            "wrote {} ({}x{}, view {} of {})",
            self.out.display(),
            img.width(),
            img.height(),
            index,
            path.view_count()
        );
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// make-corpus
// ---------------------------------------------------------------------------

#[derive(Args)]
struct MakeCorpusCmd {
    /// Base seed deriving every identity in the corpus
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Number of real identities
    #[arg(long, default_value_t = 40)]
    real: u32,
    /// Number of manipulated identities
    #[arg(long, default_value_t = 40)]
    fake: u32,
    /// Artifact strength of the manipulated identities
    #[arg(long, default_value_t = 0.5)]
    strength: f64,
    #[command(flatten)]
    path: PathArgs,
    #[command(flatten)]
    render: RenderArgs,
    /// Directory the PPM files and labels.csv are written into
    #[arg(long)]
    out_dir: PathBuf,
}

impl MakeCorpusCmd {
    fn run(self) -> Result<()> {
        let path = self.path.build()?;
        let cfg = self.render.build()?;
        let corpus = render_training_images(
            self.seed,
            self.real,
            self.fake,
            self.strength,
            &path,
            &cfg,
            self.render.camera_radius,
        )?;
        fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating {}", self.out_dir.display()))?;
        let mut labels = String::from("file,label\n");
        for (j, (img, label)) in corpus.iter().enumerate() {
            let name = if (j as u32) < self.real {
                format!("real_{j:04}.ppm")
            } else {
                format!("fake_{:04}.ppm", j as u32 - self.real)
            };
            fs::write(self.out_dir.join(&name), img.to_ppm_bytes())?;
            labels.push_str(&format!("{name},{label:?}\n").to_lowercase());
        }
        fs::write(self.out_dir.join("labels.csv"), labels)?;
        println!(
            "wrote {} images and labels.csv to {}",
            corpus.len(),
            self.out_dir.display()
        );
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// train-detector
// ---------------------------------------------------------------------------

/// On-disk bundle produced by `train-detector` and consumed by `attack`
/// and `brute-force`.
#[derive(Serialize, Deserialize)]
struct DetectorFile {
    detector: Detector,
    train_accuracy: f64,
    seed: u64,
}

#[derive(Args)]
struct TrainDetectorCmd {
    /// Base seed deriving the training identities
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Quality tier applied before feature extraction: raw, hq, or lq
    #[arg(long, value_parser = parse_tier)]
    tier: QualityTier,
    /// Number of real training identities
    #[arg(long, default_value_t = 40)]
    train_real: u32,
    /// Number of manipulated training identities
    #[arg(long, default_value_t = 40)]
    train_fake: u32,
    /// Artifact strength of manipulated training identities
    #[arg(long, default_value_t = 0.5)]
    strength: f64,
    /// Gradient-descent epochs
    #[arg(long, default_value_t = 150)]
    epochs: u32,
    /// Gradient-descent learning rate
    #[arg(long, default_value_t = 0.5)]
    learning_rate: f64,
    /// Real-class decision threshold in (0, 1)
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[command(flatten)]
    path: PathArgs,
    #[command(flatten)]
    render: RenderArgs,
    /// Output detector JSON file
    #[arg(long)]
    out: PathBuf,
}

impl TrainDetectorCmd {
    fn run(self) -> Result<()> {
        let path = self.path.build()?;
        let cfg = self.render.build()?;
        let corpus = render_training_images(
            self.seed,
            self.train_real,
            self.train_fake,
            self.strength,
            &path,
            &cfg,
            self.render.camera_radius,
        )?;
        let train_seed = hash_words(&[self.seed, hash_str("train-detector"), self.tier as u64]);
        let (detector, train_accuracy) = train_tier_detector(
            &corpus,
            self.tier,
            self.epochs,
            self.learning_rate,
            train_seed,
            self.threshold,
        )?;
        let file = DetectorFile { detector, train_accuracy, seed: self.seed };
        write_json(&self.out, &file)?;
        println!(
            "trained {} detector: train accuracy {:.3}, wrote {}",
            self.tier.as_str(),
            train_accuracy,
            self.out.display()
        );
        Ok(())
    }
}

fn write_json<T: Serialize>(path: &PathBuf, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_detector(path: &PathBuf) -> Result<Detector> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: DetectorFile = serde_json::from_str(&text)
        .with_context(|| format!("parsing detector file {}", path.display()))?;
    Ok(file.detector)
}

// ---------------------------------------------------------------------------
// Oracle selection shared by attack and brute-force
// ---------------------------------------------------------------------------

#[derive(Args)]
struct OracleArgs {
    /// Detector JSON from train-detector (selects the rendered oracle)
    #[arg(long)]
    detector: Option<PathBuf>,
    /// Texture seed of the manipulated identity under attack (rendered)
    #[arg(long)]
    identity_seed: Option<u64>,
    /// Artifact strength of the identity under attack (rendered)
    #[arg(long, default_value_t = 0.5)]
    strength: f64,
    /// Landscape family: basin or fluctuating (selects the scripted oracle)
    #[arg(long, value_parser = parse_family)]
    family: Option<Family>,
    /// Base seed of the scripted landscape generator
    #[arg(long, default_value_t = 42)]
    landscape_seed: u64,
    /// Landscape index under the base seed
    #[arg(long, default_value_t = 0)]
    unit: u64,
    #[command(flatten)]
    path: PathArgs,
    #[command(flatten)]
    render: RenderArgs,
}

impl OracleArgs {
    fn build(&self) -> Result<(Box<dyn ViewOracle>, serde_json::Value)> {
        match (&self.detector, self.family) {
            (Some(detector_path), None) => {
                let Some(identity) = self.identity_seed else {
                    bail!("--identity-seed is required with --detector");
                };
                let detector = Arc::new(load_detector(detector_path)?);
                let tier = detector.trained_tier();
                let id = IdentitySpec::fake(identity, self.strength)?;
                let path = self.path.build()?;
                let cfg = self.render.build()?;
                let oracle = RenderedOracle::new(
                    detector,
                    id,
                    path,
                    cfg,
                    self.render.camera_radius,
                    None,
                )?;
                let provenance = json!({
                    "oracle": "rendered",
                    "detector": detector_path.display().to_string(),
                    "tier": tier.as_str(),
                    "identity_seed": identity,
                    "strength": self.strength,
                    "view_count": path.view_count(),
                });
                Ok((Box::new(oracle), provenance))
            }
            (None, Some(family)) => {
                let spec =
                    generate_landscape(family, self.landscape_seed, self.unit, self.path.view_count);
                let oracle = ScriptedOracle::from_spec(&spec)?;
                let provenance = json!({
                    "oracle": "scripted",
                    "family": family.as_str(),
                    "landscape_seed": self.landscape_seed,
                    "unit": self.unit,
                    "view_count": self.path.view_count,
                });
                Ok((Box::new(oracle), provenance))
            }
            _ => bail!("select exactly one oracle: --detector FILE or --family NAME"),
        }
    }
}

// ---------------------------------------------------------------------------
// attack
// ---------------------------------------------------------------------------

#[derive(Args)]
struct AttackCmd {
    /// Attack kind: rand, score, or baseline
    #[arg(long, value_parser = parse_attack_kind)]
    kind: AttackKind,
    /// Total oracle-query budget for the run
    #[arg(long, visible_alias = "T", default_value_t = DEFAULT_MAX_QUERIES)]
    max_queries: u64,
    /// Seed of the attack's own randomness
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Index offset h used by the finite-difference gradient
    #[arg(long, default_value_t = DEFAULT_DIFFERENCE_STEP)]
    difference_step: u32,
    /// Step-size schedule start (largest step)
    #[arg(long, default_value_t = DEFAULT_ALPHA_MAX)]
    alpha_max: f64,
    /// Step-size schedule end (smallest step)
    #[arg(long, default_value_t = DEFAULT_ALPHA_MIN)]
    alpha_min: f64,
    /// descend (toward views read as real) or ascend
    #[arg(long, default_value = "descend", value_parser = parse_sign)]
    sign_convention: SignConvention,
    #[command(flatten)]
    oracle: OracleArgs,
    /// Output JSON file holding the config, provenance, and full result
    #[arg(long)]
    out: PathBuf,
}

impl AttackCmd {
    fn run(self) -> Result<()> {
        let (mut oracle, provenance) = self.oracle.build()?;
        let cfg = advheat::attack::AttackConfig {
            max_queries: self.max_queries,
            difference_step: self.difference_step,
            alpha_max: self.alpha_max,
            alpha_min: self.alpha_min,
            seed: self.seed,
            sign_convention: self.sign_convention,
        };
        let result = run_attack(self.kind, oracle.as_mut(), &cfg)?;
        let record = json!({
            "kind": self.kind.as_str(),
            "config": cfg,
            "oracle": provenance,
            "result": result,
        });
        write_json(&self.out, &record)?;
        match result.adversarial_index {
            Some(i) => println!(
                "success at view {} after {} queries; wrote {}",
                i,
                result.queries_used.total(),
                self.out.display()
            ),
            None => println!(
                "no adversarial view within {} queries; wrote {}",
                result.queries_used.total(),
                self.out.display()
            ),
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// brute-force
// ---------------------------------------------------------------------------

#[derive(Args)]
struct BruteForceCmd {
    #[command(flatten)]
    oracle: OracleArgs,
    /// Optional output JSON file listing the adversarial indices
    #[arg(long)]
    out: Option<PathBuf>,
}

impl BruteForceCmd {
    fn run(self) -> Result<()> {
        let (mut oracle, provenance) = self.oracle.build()?;
        let set = brute_force_adversarial_set(oracle.as_mut());
        let view_count = oracle.view_count();
        let indices: Vec<u32> = set.iter().map(|i| i.get()).collect();
        println!("adversarial views: {} of {}", indices.len(), view_count);
        if let Some(out) = &self.out {
            let record = json!({
                "oracle": provenance,
                "view_count": view_count,
                "adversarial_count": indices.len(),
                "adversarial_indices": indices,
            });
            write_json(out, &record)?;
            println!("wrote {}", out.display());
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

#[derive(Args)]
struct ExperimentCmd {
    /// TOML experiment spec
    #[arg(long)]
    spec: PathBuf,
    /// Directory results.csv and manifest.json are written into
    #[arg(long)]
    out_dir: PathBuf,
    /// Override the spec's base seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the spec's experiment name
    #[arg(long)]
    name: Option<String>,
}

impl ExperimentCmd {
    fn run(self) -> Result<()> {
        let text = fs::read_to_string(&self.spec)
            .with_context(|| format!("reading {}", self.spec.display()))?;
        let mut spec = ExperimentSpec::from_toml_str(&text)
            .with_context(|| format!("parsing {}", self.spec.display()))?;
        if let Some(seed) = self.seed {
            spec.experiment.seed = seed;
        }
        if let Some(name) = self.name {
            spec.experiment.name = Some(name);
        }
        spec.validate()?;
        let run = run_experiment(&spec)?;
        let (csv_path, manifest_path) = write_report(&self.out_dir, &run.table, &run.manifest)?;
        println!(
            "{}: {} rows; wrote {} and {}",
            run.table.name,
            run.table.rows.len(),
            csv_path.display(),
            manifest_path.display()
        );
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// defend
// ---------------------------------------------------------------------------

#[derive(Args)]
struct DefendCmd {
    /// Input PPM image
    #[arg(long)]
    input: PathBuf,
    /// Defense kind: jpeg, resize-pad, or bit-depth
    #[arg(long)]
    defense: String,
    /// JPEG quality in [1, 100] (jpeg)
    #[arg(long, default_value_t = 75)]
    quality: u8,
    /// Smallest resize scale in (0, 1] (resize-pad)
    #[arg(long, default_value_t = DEFAULT_RESIZE_SCALE_MIN)]
    scale_min: f64,
    /// Largest resize scale in (0, 1] (resize-pad)
    #[arg(long, default_value_t = DEFAULT_RESIZE_SCALE_MAX)]
    scale_max: f64,
    /// Bits kept per channel in [1, 8] (bit-depth)
    #[arg(long, default_value_t = 5)]
    bits: u8,
    /// Seed for the randomized resize-pad placement
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output PPM file
    #[arg(long)]
    out: PathBuf,
}

impl DefendCmd {
    fn run(self) -> Result<()> {
        let kind = match self.defense.as_str() {
            "jpeg" => DefenseKind::Jpeg { quality: self.quality },
            "resize-pad" => {
                DefenseKind::ResizePad { scale_min: self.scale_min, scale_max: self.scale_max }
            }
            "bit-depth" => DefenseKind::BitDepth { bits: self.bits },
            other => bail!("unknown defense {other:?}; expected jpeg, resize-pad, or bit-depth"),
        };
        let spec = DefenseSpec { kind, seed: self.seed };
        spec.validate()?;
        let bytes = fs::read(&self.input)
            .with_context(|| format!("reading {}", self.input.display()))?;
        let img = Image::from_ppm_bytes(&bytes)
            .with_context(|| format!("parsing {}", self.input.display()))?;
        let defended = spec.apply(&img);
        fs::write(&self.out, defended.to_ppm_bytes())
            .with_context(|| format!("writing {}", self.out.display()))?;
        println!("applied {} to {}; wrote {}", spec.label(), self.input.display(), self.out.display());
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

#[derive(Args)]
struct ReportCmd {
    /// Directory holding results.csv and manifest.json from `experiment`
    #[arg(long)]
    dir: PathBuf,
}

impl ReportCmd {
    fn run(self) -> Result<()> {
        let manifest_path = self.dir.join("manifest.json");
        let csv_path = self.dir.join("results.csv");
        let manifest: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(&manifest_path)
                .with_context(|| format!("reading {}", manifest_path.display()))?,
        )
        .with_context(|| format!("parsing {}", manifest_path.display()))?;
        let csv = fs::read_to_string(&csv_path)
            .with_context(|| format!("reading {}", csv_path.display()))?;
        validate_rates(&csv)?;
        for key in ["kind", "name", "seed", "oracle", "format_version"] {
            if let Some(v) = manifest.get(key) {
                println!("{key}: {v}");
            }
        }
        println!();
        print!("{csv}");
        Ok(())
    }
}

/// Every value under a rate-valued column must be a real in [0, 100].
fn validate_rates(csv: &str) -> Result<()> {
    let mut lines = csv.lines();
    let Some(header) = lines.next() else {
        bail!("results.csv is empty");
    };
    let rate_cols: Vec<usize> = header
        .split(',')
        .enumerate()
        .filter(|(_, name)| *name == "asr" || *name == "share_pct")
        .map(|(i, _)| i)
        .collect();
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        for &col in &rate_cols {
            let field = fields.get(col).copied().unwrap_or("");
            let value: f64 = field
                .parse()
                .with_context(|| format!("row {}: rate column holds {field:?}", row + 1))?;
            if !(0.0..=100.0).contains(&value) {
                bail!("row {}: rate {value} outside [0, 100]", row + 1);
            }
        }
    }
    Ok(())
}

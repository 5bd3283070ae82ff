//! Procedural subject renderer.
//!
//! Renders a shaded convex head proxy (an ellipsoid with seeded surface
//! texture and three planar feature markers) from an arbitrary camera pose.
//! Fake identities add a boundary-blend artifact band plus a swapped-in
//! face texture, both scaled by `artifact_strength`. The artifact pattern
//! lives in the face texture, so its rendered amplitude fades as the camera
//! leaves the frontal cone (the projected pattern compresses below the
//! pixel pitch); past `ARTIFACT_FADE_END` of yaw offset a fake renders
//! identically to the matching real identity. Synthesis quality also
//! degrades with yaw offset (additive noise and blur). Together these make
//! off-frontal views the interesting place to attack a frontally trained
//! detector. All stochastic detail comes from the counter-based hash PRNG,
//! so renders are bitwise deterministic for fixed inputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{hash_str, hash_words, unit_from_hash, unit_sample};
use crate::viewpath::{add, dot, normalize, scale, CameraPose};

// ---------------------------------------------------------------------------
// Image
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq)]
pub enum ImageError {
    #[error("channel count must be 1 or 3 (got {0})")]
    Channels(u32),
    #[error("pixel buffer has {got} samples, expected {want}")]
    BufferSize { got: usize, want: usize },
    #[error("pixel value {0} outside [0, 1]")]
    PixelRange(f64),
    #[error("image dimensions must be nonzero")]
    EmptyImage,
    #[error("PPM parse error: {0}")]
    PpmParse(String),
}

/// Dense row-major image with interleaved channels and values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: u32,
    height: u32,
    channels: u32,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: u32, height: u32, channels: u32, pixels: Vec<f64>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyImage);
        }
        if channels != 1 && channels != 3 {
            return Err(ImageError::Channels(channels));
        }
        let want = (width * height * channels) as usize;
        if pixels.len() != want {
            return Err(ImageError::BufferSize { got: pixels.len(), want });
        }
        if let Some(&bad) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(ImageError::PixelRange(bad));
        }
        Ok(Self { width, height, channels, pixels })
    }

    pub fn constant(width: u32, height: u32, channels: u32, value: f64) -> Result<Self, ImageError> {
        let n = (width * height * channels) as usize;
        Self::new(width, height, channels, vec![value; n])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u32 {
        self.channels
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32, c: u32) -> f64 {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        self.pixels[((y * self.width + x) * self.channels + c) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, c: u32, v: f64) {
        debug_assert!((0.0..=1.0).contains(&v), "pixel {v} outside [0,1]");
        let i = ((y * self.width + x) * self.channels + c) as usize;
        self.pixels[i] = v;
    }

    /// Channel mean at a pixel; identity for single-channel images.
    #[inline]
    pub fn luminance_at(&self, x: u32, y: u32) -> f64 {
        if self.channels == 1 {
            self.get(x, y, 0)
        } else {
            (self.get(x, y, 0) + self.get(x, y, 1) + self.get(x, y, 2)) / 3.0
        }
    }

    pub fn mean_abs_diff(&self, other: &Image) -> f64 {
        assert_eq!(self.pixels.len(), other.pixels.len(), "image shapes differ");
        let s: f64 = self
            .pixels
            .iter()
            .zip(&other.pixels)
            .map(|(a, b)| (a - b).abs())
            .sum();
        s / self.pixels.len() as f64
    }

    /// Encode as binary 8-bit P6 PPM. Quantization rounds half to even so
    /// the byte stream is a stable function of the float image alone.
    pub fn to_ppm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve((self.width * self.height * 3) as usize);
        for y in 0..self.height {
            for x in 0..self.width {
                for c in 0..3 {
                    let v = if self.channels == 1 { self.get(x, y, 0) } else { self.get(x, y, c) };
                    out.push((v * 255.0).round_ties_even() as u8);
                }
            }
        }
        out
    }

    /// Decode a binary P6 PPM with max value 255. Always yields 3 channels.
    pub fn from_ppm_bytes(bytes: &[u8]) -> Result<Self, ImageError> {
        let mut pos = 0usize;
        let mut next_token = |bytes: &[u8]| -> Result<String, ImageError> {
            // Skip whitespace and '#' comments.
            loop {
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(ImageError::PpmParse("unexpected end of header".into()));
            }
            Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
        };

        let magic = next_token(bytes)?;
        if magic != "P6" {
            return Err(ImageError::PpmParse(format!("bad magic {magic:?}")));
        }
        let parse_u32 = |s: String| -> Result<u32, ImageError> {
            s.parse::<u32>().map_err(|_| ImageError::PpmParse(format!("bad integer {s:?}")))
        };
        let width = parse_u32(next_token(bytes)?)?;
        let height = parse_u32(next_token(bytes)?)?;
        let maxval = parse_u32(next_token(bytes)?)?;
        if maxval != 255 {
            return Err(ImageError::PpmParse(format!("unsupported max value {maxval}")));
        }
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        let want = (width as usize) * (height as usize) * 3;
        let raster = bytes
            .get(pos..pos + want)
            .ok_or_else(|| ImageError::PpmParse("truncated raster".into()))?;
        let pixels: Vec<f64> = raster.iter().map(|&b| f64::from(b) / 255.0).collect();
        Image::new(width, height, 3, pixels)
    }
}

// ---------------------------------------------------------------------------
// Identity and render configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("artifact strength must lie in (0, 1] for fake identities (got {0})")]
    ArtifactStrength(f64),
    #[error("resolution must be at least 16 (got {0})")]
    Resolution(u32),
    #[error("degradation gain must be finite and non-negative (got {0})")]
    DegradationGain(f64),
    #[error("light direction must be a nonzero vector")]
    LightDirection,
}

/// A rendered subject: a texture seed plus real/fake provenance. Real
/// identities carry zero artifact strength by construction; fake identities
/// a strictly positive one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentitySpec {
    seed: u64,
    is_fake: bool,
    artifact_strength: f64,
}

impl IdentitySpec {
    pub fn real(seed: u64) -> Self {
        Self { seed, is_fake: false, artifact_strength: 0.0 }
    }

    pub fn fake(seed: u64, artifact_strength: f64) -> Result<Self, RenderError> {
        if !(artifact_strength > 0.0 && artifact_strength <= 1.0) {
            return Err(RenderError::ArtifactStrength(artifact_strength));
        }
        Ok(Self { seed, is_fake: true, artifact_strength })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_fake(&self) -> bool {
        self.is_fake
    }

    pub fn artifact_strength(&self) -> f64 {
        self.artifact_strength
    }
}

/// Renderer knobs. `degradation_gain` is the amount of synthesis noise/blur
/// per radian of yaw offset from the frontal axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    resolution: u32,
    degradation_gain: f64,
    light_direction: [f64; 3],
    color: bool,
}

pub const DEFAULT_RESOLUTION: u32 = 64;
pub const DEFAULT_DEGRADATION_GAIN: f64 = 0.15;
pub const DEFAULT_LIGHT_DIRECTION: [f64; 3] = [0.3, 0.6, 0.74];
pub const MIN_RESOLUTION: u32 = 16;

impl RenderConfig {
    pub fn new(
        resolution: u32,
        degradation_gain: f64,
        light_direction: [f64; 3],
        color: bool,
    ) -> Result<Self, RenderError> {
        if resolution < MIN_RESOLUTION {
            return Err(RenderError::Resolution(resolution));
        }
        if !(degradation_gain >= 0.0 && degradation_gain.is_finite()) {
            return Err(RenderError::DegradationGain(degradation_gain));
        }
        if dot(light_direction, light_direction) < 1e-18 {
            return Err(RenderError::LightDirection);
        }
        Ok(Self {
            resolution,
            degradation_gain,
            light_direction: normalize(light_direction),
            color,
        })
    }

    pub fn with_resolution(resolution: u32) -> Result<Self, RenderError> {
        Self::new(resolution, DEFAULT_DEGRADATION_GAIN, DEFAULT_LIGHT_DIRECTION, false)
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn degradation_gain(&self) -> f64 {
        self.degradation_gain
    }

    pub fn light_direction(&self) -> [f64; 3] {
        self.light_direction
    }

    pub fn color(&self) -> bool {
        self.color
    }
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self::new(DEFAULT_RESOLUTION, DEFAULT_DEGRADATION_GAIN, DEFAULT_LIGHT_DIRECTION, false)
            .expect("defaults are valid")
    }
}

// ---------------------------------------------------------------------------
// Scene constants
// ---------------------------------------------------------------------------

/// Head proxy semi-axes; the face looks toward +y.
const HEAD_SEMI_AXES: [f64; 3] = [0.45, 0.50, 0.58];
/// Tangent of the camera's half field of view.
const FOV_HALF_TAN: f64 = 0.75;
const AMBIENT: f64 = 0.30;
const DIFFUSE: f64 = 0.62;
/// Face-center direction in normalized (unit-sphere) surface coordinates.
const FACE_DIR: [f64; 3] = [0.0, 1.0, 0.0];
/// Blend band: angular shell around the face where a swapped face would be
/// stitched onto the host head, in radians from `FACE_DIR`.
const BAND_INNER: f64 = 0.55;
const BAND_OUTER: f64 = 0.85;
/// Artifact amplitudes, multiplied by `artifact_strength`.
const BAND_LIFT: f64 = 0.10;
const BAND_PATTERN_AMP: f64 = 0.24;
const FACE_SWAP_AMP: f64 = 0.38;
/// Degradation shape: noise sigma and blur blend per (gain * radian).
const NOISE_SIGMA_COEF: f64 = 0.35;
const BLUR_BLEND_COEF: f64 = 1.10;
const BLUR_BLEND_MAX: f64 = 0.85;
/// Yaw offset (radians) past which a fake's artifacts are no longer
/// resolvable; see `artifact_visibility`.
const ARTIFACT_FADE_END: f64 = 0.60;
/// Frontal azimuth of the canonical subject (it faces +y).
const FRONTAL_AZIMUTH: f64 = std::f64::consts::FRAC_PI_2;

// Feature markers: spherical caps in normalized surface coordinates.
// Deliberately left/right asymmetric so mirrored yaws are distinguishable.
const MARKERS: [([f64; 3], f64, f64); 3] = [
    ([-0.36, 0.82, 0.26], 0.170, 0.35), // left eye: larger
    ([0.36, 0.82, 0.26], 0.115, 0.42),  // right eye: smaller, lighter
    ([0.0, 0.86, -0.40], 0.150, 0.50),  // mouth
];

// ---------------------------------------------------------------------------
// Degradation model
// ---------------------------------------------------------------------------

/// Absolute angular deviation of the camera from the frontal direction in
/// the yaw plane, in `[0, pi]`. The canonical subject faces `+y`, so the
/// offset is measured against azimuth `pi/2`; poses directly above or below
/// the subject have no defined azimuth and count as frontal.
pub fn yaw_offset(pose: &CameraPose) -> f64 {
    let x = pose.position[0];
    let y = pose.position[1];
    if x * x + y * y < 1e-24 {
        return 0.0;
    }
    let az = y.atan2(x);
    let mut d = (az - FRONTAL_AZIMUTH).abs() % (2.0 * std::f64::consts::PI);
    if d > std::f64::consts::PI {
        d = 2.0 * std::f64::consts::PI - d;
    }
    d
}

/// Standard deviation of the additive synthesis noise at a yaw offset.
/// Non-decreasing in the offset; zero for frontal views.
pub fn degradation_noise_sigma(gain: f64, yaw_offset: f64) -> f64 {
    gain * yaw_offset.abs() * NOISE_SIGMA_COEF
}

/// How much of a fake identity's artifact amplitude survives at a yaw
/// offset: 1 on the frontal axis, smoothly falling to 0 at
/// `ARTIFACT_FADE_END`, and 0 beyond. Past the fade the projected pattern
/// is finer than the render can resolve, so a fake is indistinguishable
/// from the matching real identity.
pub fn artifact_visibility(yaw_offset: f64) -> f64 {
    let t = 1.0 - yaw_offset.abs() / ARTIFACT_FADE_END;
    let t = t.clamp(0.0, 1.0);
    t * t
}

/// Box-blur blend weight at a yaw offset, clamped to `BLUR_BLEND_MAX`.
pub fn degradation_blur_blend(gain: f64, yaw_offset: f64) -> f64 {
    (gain * yaw_offset.abs() * BLUR_BLEND_COEF).min(BLUR_BLEND_MAX)
}

// ---------------------------------------------------------------------------
// Procedural texture
// ---------------------------------------------------------------------------

/// Trilinearly interpolated lattice value noise in `[0, 1)`.
fn value_noise3(seed: u64, tag: u64, p: [f64; 3]) -> f64 {
    let fx = p[0].floor();
    let fy = p[1].floor();
    let fz = p[2].floor();
    let tx = smooth(p[0] - fx);
    let ty = smooth(p[1] - fy);
    let tz = smooth(p[2] - fz);
    let (ix, iy, iz) = (fx as i64, fy as i64, fz as i64);
    let corner = |dx: i64, dy: i64, dz: i64| -> f64 {
        let h = hash_words(&[
            seed,
            tag,
            (ix + dx) as u64,
            (iy + dy) as u64,
            (iz + dz) as u64,
        ]);
        unit_from_hash(h)
    };
    let c000 = corner(0, 0, 0);
    let c100 = corner(1, 0, 0);
    let c010 = corner(0, 1, 0);
    let c110 = corner(1, 1, 0);
    let c001 = corner(0, 0, 1);
    let c101 = corner(1, 0, 1);
    let c011 = corner(0, 1, 1);
    let c111 = corner(1, 1, 1);
    let x00 = lerp(c000, c100, tx);
    let x10 = lerp(c010, c110, tx);
    let x01 = lerp(c001, c101, tx);
    let x11 = lerp(c011, c111, tx);
    let y0 = lerp(x00, x10, ty);
    let y1 = lerp(x01, x11, ty);
    lerp(y0, y1, tz)
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Two-octave fractal value noise in `[0, 1)`.
fn fbm(seed: u64, tag: u64, p: [f64; 3]) -> f64 {
    let a = value_noise3(seed, tag, scale(p, 3.0));
    let b = value_noise3(seed, tag ^ 0x5bd1, [p[0] * 6.1 + 17.3, p[1] * 6.1 + 9.2, p[2] * 6.1 + 4.7]);
    0.65 * a + 0.35 * b
}

// ---------------------------------------------------------------------------
// Render
// ---------------------------------------------------------------------------

/// Render an identity from a camera pose. Bitwise deterministic in its
/// inputs; a fake identity with its artifact terms scaled to zero would
/// reproduce the real render of the same seed exactly.
pub fn render(id: &IdentitySpec, pose: &CameraPose, cfg: &RenderConfig) -> Image {
    render_with_strength(id.seed, id.artifact_strength, pose, cfg)
}

/// Boolean per-pixel mask of the region a fake identity's artifacts can
/// touch (the blended face disc plus the surrounding band), for the given
/// pose. Diagnostic helper used to check that artifacts stay local.
pub fn artifact_region_mask(pose: &CameraPose, cfg: &RenderConfig) -> Vec<bool> {
    let res = cfg.resolution;
    let mut mask = vec![false; (res * res) as usize];
    for y in 0..res {
        for x in 0..res {
            if let Some(hit) = trace(pose, cfg, x, y) {
                mask[(y * res + x) as usize] = hit.face_angle < BAND_OUTER;
            }
        }
    }
    mask
}

struct Hit {
    /// Normalized surface coordinates (point mapped onto the unit sphere).
    unit: [f64; 3],
    /// World-space surface normal.
    normal: [f64; 3],
    /// Angle from the face-center direction, radians.
    face_angle: f64,
}

fn trace(pose: &CameraPose, cfg: &RenderConfig, x: u32, y: u32) -> Option<Hit> {
    let res = f64::from(cfg.resolution);
    let u = ((f64::from(x) + 0.5) / res) * 2.0 - 1.0;
    let v = 1.0 - ((f64::from(y) + 0.5) / res) * 2.0;
    // Camera looks along -z of its own frame.
    let d_cam = [u * FOV_HALF_TAN, v * FOV_HALF_TAN, -1.0];
    let r = &pose.rotation;
    let d = normalize([
        r[0][0] * d_cam[0] + r[0][1] * d_cam[1] + r[0][2] * d_cam[2],
        r[1][0] * d_cam[0] + r[1][1] * d_cam[1] + r[1][2] * d_cam[2],
        r[2][0] * d_cam[0] + r[2][1] * d_cam[1] + r[2][2] * d_cam[2],
    ]);
    let o = pose.position;

    let inv = [
        1.0 / HEAD_SEMI_AXES[0],
        1.0 / HEAD_SEMI_AXES[1],
        1.0 / HEAD_SEMI_AXES[2],
    ];
    let os = [o[0] * inv[0], o[1] * inv[1], o[2] * inv[2]];
    let ds = [d[0] * inv[0], d[1] * inv[1], d[2] * inv[2]];
    let a = dot(ds, ds);
    let b = 2.0 * dot(os, ds);
    let c = dot(os, os) - 1.0;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let t = (-b - disc.sqrt()) / (2.0 * a);
    if t <= 0.0 {
        return None;
    }
    let q = add(o, scale(d, t));
    let unit = [q[0] * inv[0], q[1] * inv[1], q[2] * inv[2]];
    let normal = normalize([unit[0] * inv[0], unit[1] * inv[1], unit[2] * inv[2]]);
    let face_angle = dot(unit, FACE_DIR).clamp(-1.0, 1.0).acos();
    Some(Hit { unit, normal, face_angle })
}

const TAG_TEXTURE: &str = "texture";
const TAG_SWAP: &str = "swap-texture";
const TAG_BAND: &str = "band-pattern";
const TAG_DEGRADE: &str = "degrade-noise";

fn render_with_strength(seed: u64, strength: f64, pose: &CameraPose, cfg: &RenderConfig) -> Image {
    let res = cfg.resolution;
    let ch: u32 = if cfg.color { 3 } else { 1 };
    let tag_texture = hash_str(TAG_TEXTURE);
    let tag_swap = hash_str(TAG_SWAP);
    let tag_band = hash_str(TAG_BAND);
    let light = cfg.light_direction;
    // Artifacts are a texture-domain pattern; off-frontal projection
    // shrinks them below the pixel pitch, fading their amplitude.
    let strength = strength * artifact_visibility(yaw_offset(pose));

    let mut px = vec![0.0f64; (res * res * ch) as usize];
    for y in 0..res {
        for x in 0..res {
            let shade = match trace(pose, cfg, x, y) {
                None => {
                    // Plain vertical background gradient; no seed dependence.
                    0.85 - 0.20 * ((f64::from(y) + 0.5) / f64::from(res))
                }
                Some(hit) => {
                    let mut albedo = 0.40 + 0.35 * fbm(seed, tag_texture, hit.unit);
                    if strength > 0.0 {
                        if hit.face_angle < BAND_INNER {
                            // Swapped-in face: texture sampled from a
                            // different stream, blended by strength.
                            let swap = fbm(seed, tag_swap, hit.unit);
                            albedo += strength * FACE_SWAP_AMP * (swap - 0.5);
                        } else if hit.face_angle < BAND_OUTER {
                            // Blend boundary: brightness lift plus a
                            // high-frequency +-1 cell pattern.
                            let cell = [
                                (hit.unit[0] * 11.0).floor() as i64 as u64,
                                (hit.unit[1] * 11.0).floor() as i64 as u64,
                                (hit.unit[2] * 11.0).floor() as i64 as u64,
                            ];
                            let h = hash_words(&[seed, tag_band, cell[0], cell[1], cell[2]]);
                            let sign = if h & 1 == 0 { 1.0 } else { -1.0 };
                            albedo += strength * (BAND_LIFT + BAND_PATTERN_AMP * sign);
                        }
                    }
                    for (dir, radius, factor) in MARKERS {
                        let m = normalize(dir);
                        let ang = dot(hit.unit, m).clamp(-1.0, 1.0).acos();
                        if ang < radius {
                            albedo *= factor;
                        }
                    }
                    let lambert = dot(hit.normal, light).max(0.0);
                    (albedo.clamp(0.02, 0.98)) * (AMBIENT + DIFFUSE * lambert)
                }
            };
            let base = ((y * res + x) * ch) as usize;
            if cfg.color {
                px[base] = shade;
                px[base + 1] = shade * 0.86;
                px[base + 2] = shade * 0.72;
            } else {
                px[base] = shade;
            }
        }
    }

    let yaw = yaw_offset(pose);
    let blur = degradation_blur_blend(cfg.degradation_gain, yaw);
    if blur > 0.0 {
        px = box_blur_blend(&px, res, ch, blur);
    }
    let sigma = degradation_noise_sigma(cfg.degradation_gain, yaw);
    if sigma > 0.0 {
        let tag_degrade = hash_str(TAG_DEGRADE);
        // Key on the pose bits so every view gets its own noise field while
        // staying a pure function of (seed, pose, pixel).
        let pose_key = hash_words(&[
            pose.position[0].to_bits(),
            pose.position[1].to_bits(),
            pose.position[2].to_bits(),
        ]);
        for y in 0..res {
            for x in 0..res {
                for c in 0..ch {
                    let i = ((y * res + x) * ch + c) as usize;
                    let n = 2.0 * unit_sample(seed, tag_degrade, &[pose_key, y.into(), x.into(), c.into()]) - 1.0;
                    px[i] += sigma * n;
                }
            }
        }
    }
    for p in &mut px {
        *p = p.clamp(0.0, 1.0);
    }
    Image::new(res, res, ch, px).expect("renderer produced a valid buffer")
}

/// `(1 - w) * img + w * box3(img)` with edge-clamped sampling.
fn box_blur_blend(px: &[f64], res: u32, ch: u32, w: f64) -> Vec<f64> {
    let mut out = vec![0.0f64; px.len()];
    let r = res as i64;
    for y in 0..r {
        for x in 0..r {
            for c in 0..ch as i64 {
                let mut acc = 0.0;
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let sx = (x + dx).clamp(0, r - 1);
                        let sy = (y + dy).clamp(0, r - 1);
                        acc += px[((sy * r + sx) * ch as i64 + c) as usize];
                    }
                }
                let i = ((y * r + x) * ch as i64 + c) as usize;
                out[i] = (1.0 - w) * px[i] + w * acc / 9.0;
            }
        }
    }
    out
}

//! Image quality tiers and input-transformation defenses.
//!
//! The quality tiers model the raw/light/strong compression regimes a
//! detector might be trained under; both lossy tiers are block-DCT
//! quantization at fixed quality settings. The defenses are the standard
//! input-purification trio: JPEG-style recompression, random downscale and
//! zero-pad, and bit-depth reduction. Everything here is deterministic:
//! the only randomness is the defense seed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::renderer::Image;
use crate::rng::{hash_str, Prng};

#[derive(Debug, Error, PartialEq)]
pub enum DefenseError {
    #[error("jpeg quality must lie in 1..=100 (got {0})")]
    JpegQuality(u8),
    #[error("resize scales must satisfy 0 < min <= max <= 1 (got {0}..{1})")]
    ResizeScales(f64, f64),
    #[error("bit depth must lie in 1..=8 (got {0})")]
    BitDepth(u8),
}

/// Compression regime an image (or a detector's training corpus) lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityTier {
    Raw,
    Hq,
    Lq,
}

impl QualityTier {
    pub const ALL: [QualityTier; 3] = [QualityTier::Raw, QualityTier::Hq, QualityTier::Lq];

    pub fn as_str(&self) -> &'static str {
        match self {
            QualityTier::Raw => "raw",
            QualityTier::Hq => "hq",
            QualityTier::Lq => "lq",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "raw" => Some(QualityTier::Raw),
            "hq" => Some(QualityTier::Hq),
            "lq" => Some(QualityTier::Lq),
            _ => None,
        }
    }
}

impl std::fmt::Display for QualityTier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Quality settings backing the lossy tiers. Chosen so the high tier stays
/// comfortably above the low tier in reconstruction fidelity (>= 3 dB PSNR
/// on rendered corpora; see the tier-ordering test).
pub const HQ_JPEG_QUALITY: u8 = 85;
pub const LQ_JPEG_QUALITY: u8 = 40;

/// Apply a quality tier. `Raw` is the bitwise identity.
pub fn quality_transform(img: &Image, tier: QualityTier) -> Image {
    match tier {
        QualityTier::Raw => img.clone(),
        QualityTier::Hq => jpeg_defense(img, HQ_JPEG_QUALITY),
        QualityTier::Lq => jpeg_defense(img, LQ_JPEG_QUALITY),
    }
}

// ---------------------------------------------------------------------------
// Defense specification
// ---------------------------------------------------------------------------

/// An input defense with its seed. The seed only matters for `ResizePad`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefenseSpec {
    #[serde(flatten)]
    pub kind: DefenseKind,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DefenseKind {
    Jpeg { quality: u8 },
    ResizePad { scale_min: f64, scale_max: f64 },
    BitDepth { bits: u8 },
}

pub const DEFAULT_RESIZE_SCALE_MIN: f64 = 0.85;
pub const DEFAULT_RESIZE_SCALE_MAX: f64 = 1.0;

impl DefenseSpec {
    pub fn validate(&self) -> Result<(), DefenseError> {
        match self.kind {
            DefenseKind::Jpeg { quality } => {
                if !(1..=100).contains(&quality) {
                    return Err(DefenseError::JpegQuality(quality));
                }
            }
            DefenseKind::ResizePad { scale_min, scale_max } => {
                if !(scale_min > 0.0 && scale_min <= scale_max && scale_max <= 1.0) {
                    return Err(DefenseError::ResizeScales(scale_min, scale_max));
                }
            }
            DefenseKind::BitDepth { bits } => {
                if !(1..=8).contains(&bits) {
                    return Err(DefenseError::BitDepth(bits));
                }
            }
        }
        Ok(())
    }

    /// Apply the defense. Panics if the spec fails `validate`; callers are
    /// expected to validate at construction/parse time.
    pub fn apply(&self, img: &Image) -> Image {
        self.validate().expect("invalid defense spec");
        match self.kind {
            DefenseKind::Jpeg { quality } => jpeg_defense(img, quality),
            DefenseKind::ResizePad { scale_min, scale_max } => {
                resize_pad_defense(img, scale_min, scale_max, self.seed)
            }
            DefenseKind::BitDepth { bits } => bit_depth_defense(img, bits),
        }
    }

    /// Stable label used in report tables.
    pub fn label(&self) -> String {
        match self.kind {
            DefenseKind::Jpeg { quality } => format!("jpeg-q{quality}"),
            DefenseKind::ResizePad { scale_min, scale_max } => {
                format!("resize-pad-{scale_min:.2}-{scale_max:.2}")
            }
            DefenseKind::BitDepth { bits } => format!("bit-depth-{bits}"),
        }
    }
}

// ---------------------------------------------------------------------------
// JPEG-style block DCT quantization
// ---------------------------------------------------------------------------

const BLOCK: usize = 8;

/// Standard luminance quantization table (row-major, 8x8).
#[rustfmt::skip]
const BASE_QUANT: [i32; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61,
    12, 12, 14, 19, 26, 58, 60, 55,
    14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62,
    18, 22, 37, 56, 68,109,103, 77,
    24, 35, 55, 64, 81,104,113, 92,
    49, 64, 78, 87,103,121,120,101,
    72, 92, 95, 98,112,100,103, 99,
];

/// Scale the base table for a quality in 1..=100. Quality 100 maps every
/// divisor to 1, making the transform a pure DCT round/inverse round trip.
pub fn quant_table(quality: u8) -> [i32; 64] {
    assert!((1..=100).contains(&quality), "quality {quality} outside 1..=100");
    let q = i64::from(quality);
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    let mut out = [0i32; 64];
    for (i, &base) in BASE_QUANT.iter().enumerate() {
        let v = (i64::from(base) * scale + 50) / 100;
        out[i] = v.clamp(1, 255) as i32;
    }
    out
}

/// Orthonormal 1-D DCT-II basis: `basis[k][n]`.
fn dct_basis() -> [[f64; BLOCK]; BLOCK] {
    let mut b = [[0.0; BLOCK]; BLOCK];
    let n = BLOCK as f64;
    for k in 0..BLOCK {
        let c = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
        for x in 0..BLOCK {
            b[k][x] = c * (std::f64::consts::PI * (2.0 * x as f64 + 1.0) * k as f64 / (2.0 * n)).cos();
        }
    }
    b
}

/// Block-DCT recompression at a JPEG-style quality setting. Operates per
/// channel in the 0..255 domain with edge replication for partial blocks;
/// output is clamped back to `[0, 1]`. Dimensions are preserved.
pub fn jpeg_defense(img: &Image, quality: u8) -> Image {
    let q = quant_table(quality);
    let basis = dct_basis();
    let (w, h, ch) = (img.width() as usize, img.height() as usize, img.channels() as usize);
    let mut out = vec![0.0f64; w * h * ch];

    let blocks_x = w.div_ceil(BLOCK);
    let blocks_y = h.div_ceil(BLOCK);
    let mut block = [[0.0f64; BLOCK]; BLOCK];
    let mut tmp = [[0.0f64; BLOCK]; BLOCK];
    let mut coef = [[0.0f64; BLOCK]; BLOCK];

    for c in 0..ch {
        for by in 0..blocks_y {
            for bx in 0..blocks_x {
                // Gather with edge replication, shifted to -128..127.
                for y in 0..BLOCK {
                    let sy = (by * BLOCK + y).min(h - 1);
                    for x in 0..BLOCK {
                        let sx = (bx * BLOCK + x).min(w - 1);
                        block[y][x] = img.get(sx as u32, sy as u32, c as u32) * 255.0 - 128.0;
                    }
                }
                // coef = B * block * B^T (separable orthonormal DCT).
                for k in 0..BLOCK {
                    for x in 0..BLOCK {
                        let mut acc = 0.0;
                        for y in 0..BLOCK {
                            acc += basis[k][y] * block[y][x];
                        }
                        tmp[k][x] = acc;
                    }
                }
                for k in 0..BLOCK {
                    for l in 0..BLOCK {
                        let mut acc = 0.0;
                        for x in 0..BLOCK {
                            acc += tmp[k][x] * basis[l][x];
                        }
                        let qv = f64::from(q[k * BLOCK + l]);
                        coef[k][l] = (acc / qv).round() * qv;
                    }
                }
                // block = B^T * coef * B.
                for y in 0..BLOCK {
                    for l in 0..BLOCK {
                        let mut acc = 0.0;
                        for k in 0..BLOCK {
                            acc += basis[k][y] * coef[k][l];
                        }
                        tmp[y][l] = acc;
                    }
                }
                for y in 0..BLOCK {
                    let sy = by * BLOCK + y;
                    if sy >= h {
                        break;
                    }
                    for x in 0..BLOCK {
                        let sx = bx * BLOCK + x;
                        if sx >= w {
                            continue;
                        }
                        let mut acc = 0.0;
                        for l in 0..BLOCK {
                            acc += tmp[y][l] * basis[l][x];
                        }
                        let v = ((acc + 128.0) / 255.0).clamp(0.0, 1.0);
                        out[(sy * w + sx) * ch + c] = v;
                    }
                }
            }
        }
    }
    Image::new(img.width(), img.height(), img.channels(), out).expect("dct output in range")
}

// ---------------------------------------------------------------------------
// Resize-and-pad defense
// ---------------------------------------------------------------------------

const TAG_RESIZE: &str = "resize-pad";

/// Seeded parameters of the resize-and-pad defense for an image shape:
/// `(new_width, new_height, offset_x, offset_y)`. Exposed so tests can
/// check the seed actually moves the geometry.
pub fn resize_pad_params(
    width: u32,
    height: u32,
    scale_min: f64,
    scale_max: f64,
    seed: u64,
) -> (u32, u32, u32, u32) {
    let mut rng = Prng::from_words(&[seed, hash_str(TAG_RESIZE), width.into(), height.into()]);
    let s = rng.range_f64(scale_min, scale_max);
    let nw = ((f64::from(width) * s).round() as u32).clamp(1, width);
    let nh = ((f64::from(height) * s).round() as u32).clamp(1, height);
    let ox = if nw < width { rng.below(u64::from(width - nw) + 1) as u32 } else { 0 };
    let oy = if nh < height { rng.below(u64::from(height - nh) + 1) as u32 } else { 0 };
    (nw, nh, ox, oy)
}

/// Downscale by a seeded random factor in `[scale_min, scale_max]`, then
/// zero-pad back to the original dimensions at a seeded random offset.
pub fn resize_pad_defense(img: &Image, scale_min: f64, scale_max: f64, seed: u64) -> Image {
    assert!(
        scale_min > 0.0 && scale_min <= scale_max && scale_max <= 1.0,
        "invalid resize scales {scale_min}..{scale_max}"
    );
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let (nw, nh, ox, oy) = resize_pad_params(w, h, scale_min, scale_max, seed);
    if nw == w && nh == h {
        return img.clone();
    }
    let small = bilinear_resize(img, nw, nh);
    let mut out = vec![0.0f64; (w * h * ch) as usize];
    for y in 0..nh {
        for x in 0..nw {
            for c in 0..ch {
                let i = (((y + oy) * w + (x + ox)) * ch + c) as usize;
                out[i] = small.get(x, y, c);
            }
        }
    }
    Image::new(w, h, ch, out).expect("padded output in range")
}

fn bilinear_resize(img: &Image, nw: u32, nh: u32) -> Image {
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let mut out = vec![0.0f64; (nw * nh * ch) as usize];
    for y in 0..nh {
        let sy = ((f64::from(y) + 0.5) * f64::from(h) / f64::from(nh) - 0.5).clamp(0.0, f64::from(h - 1));
        let y0 = sy.floor() as u32;
        let y1 = (y0 + 1).min(h - 1);
        let ty = sy - f64::from(y0);
        for x in 0..nw {
            let sx = ((f64::from(x) + 0.5) * f64::from(w) / f64::from(nw) - 0.5).clamp(0.0, f64::from(w - 1));
            let x0 = sx.floor() as u32;
            let x1 = (x0 + 1).min(w - 1);
            let tx = sx - f64::from(x0);
            for c in 0..ch {
                let a = img.get(x0, y0, c) * (1.0 - tx) + img.get(x1, y0, c) * tx;
                let b = img.get(x0, y1, c) * (1.0 - tx) + img.get(x1, y1, c) * tx;
                out[((y * nw + x) * ch + c) as usize] = a * (1.0 - ty) + b * ty;
            }
        }
    }
    Image::new(nw, nh, ch, out).expect("resize output in range")
}

// ---------------------------------------------------------------------------
// Bit-depth reduction defense
// ---------------------------------------------------------------------------

/// Quantize every pixel to `2^bits` uniform levels on `[0, 1]`. Idempotent.
pub fn bit_depth_defense(img: &Image, bits: u8) -> Image {
    assert!((1..=8).contains(&bits), "bit depth {bits} outside 1..=8");
    let levels = f64::from((1u32 << bits) - 1);
    let out: Vec<f64> = img.pixels().iter().map(|&p| (p * levels).round() / levels).collect();
    Image::new(img.width(), img.height(), img.channels(), out).expect("quantized output in range")
}

// ---------------------------------------------------------------------------
// Fidelity metric
// ---------------------------------------------------------------------------

/// Peak signal-to-noise ratio in dB between same-shape images (peak 1.0).
/// Identical images give `f64::INFINITY`.
pub fn psnr(a: &Image, b: &Image) -> f64 {
    assert_eq!(a.pixels().len(), b.pixels().len(), "image shapes differ");
    let mse: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.pixels().len() as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

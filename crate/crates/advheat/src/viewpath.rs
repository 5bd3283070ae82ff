//! Cyclic camera-view path around the subject.
//!
//! Views live on a closed curve parameterized by an integer index `i` in
//! `[0, K)`. Yaw and pitch trace one period of a sine/cosine pair around a
//! common center, so consecutive indices are adjacent viewpoints and the
//! path wraps: index arithmetic is always modulo `K`. Distances along the
//! curve are measured in index steps, which is what the attacks operate on.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default number of views on the path.
pub const DEFAULT_VIEW_COUNT: u32 = 360;
/// Default yaw amplitude: full profile-to-profile sweep.
pub const DEFAULT_YAW_AMPLITUDE: f64 = FRAC_PI_2;
/// Default pitch amplitude: a modest nod, 15 degrees.
pub const DEFAULT_PITCH_AMPLITUDE: f64 = PI / 12.0;
/// Default center for both angles; the frontal view sits here.
pub const DEFAULT_CENTER: f64 = FRAC_PI_2;

#[derive(Debug, Error, PartialEq)]
pub enum ViewPathError {
    #[error("view count must be at least 2 (got {0})")]
    ViewCount(u32),
    #[error("yaw amplitude must lie in [0, pi/2] (got {0})")]
    YawAmplitude(f64),
    #[error("pitch amplitude must lie in [0, pi/2] (got {0})")]
    PitchAmplitude(f64),
    #[error("camera radius must be positive (got {0})")]
    Radius(f64),
}

/// Position on the path: an integer index already reduced modulo `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ViewIndex(u32);

impl ViewIndex {
    /// Reduce an arbitrary signed index into `[0, modulus)`.
    pub fn wrapped(i: i64, modulus: u32) -> Self {
        debug_assert!(modulus >= 2);
        Self(i.rem_euclid(modulus as i64) as u32)
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl std::fmt::Display for ViewIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Camera orientation in radians. Roll is fixed at zero: the head-turn
/// family of views never tilts the camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    /// Yaw angle (azimuth around the vertical axis).
    pub phi: f64,
    /// Pitch angle (polar angle from the vertical axis).
    pub theta: f64,
    /// Always zero on this path.
    pub roll: f64,
}

/// Closed view path: `K` samples of one sine/cosine cycle.
///
/// `phi(i)   = center + yaw_amplitude   * sin(2*pi*i/K)`
/// `theta(i) = center + pitch_amplitude * cos(2*pi*i/K)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewPath {
    k: u32,
    yaw_amplitude: f64,
    pitch_amplitude: f64,
    center: f64,
}

impl ViewPath {
    pub fn new(
        k: u32,
        yaw_amplitude: f64,
        pitch_amplitude: f64,
        center: f64,
    ) -> Result<Self, ViewPathError> {
        if k < 2 {
            return Err(ViewPathError::ViewCount(k));
        }
        if !(0.0..=FRAC_PI_2).contains(&yaw_amplitude) {
            return Err(ViewPathError::YawAmplitude(yaw_amplitude));
        }
        if !(0.0..=FRAC_PI_2).contains(&pitch_amplitude) {
            return Err(ViewPathError::PitchAmplitude(pitch_amplitude));
        }
        Ok(Self { k, yaw_amplitude, pitch_amplitude, center })
    }

    /// Default amplitudes and center with a caller-chosen view count.
    pub fn with_view_count(k: u32) -> Result<Self, ViewPathError> {
        Self::new(k, DEFAULT_YAW_AMPLITUDE, DEFAULT_PITCH_AMPLITUDE, DEFAULT_CENTER)
    }

    pub fn view_count(&self) -> u32 {
        self.k
    }

    pub fn yaw_amplitude(&self) -> f64 {
        self.yaw_amplitude
    }

    pub fn pitch_amplitude(&self) -> f64 {
        self.pitch_amplitude
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    /// Reduce an arbitrary signed index onto this path.
    pub fn wrap_index(&self, i: i64) -> ViewIndex {
        ViewIndex::wrapped(i, self.k)
    }

    /// Angles for a view index. Exactly periodic: wrapped indices give the
    /// identical (bitwise) angles because they reduce to the same `i`.
    pub fn angles_for_index(&self, i: ViewIndex) -> EulerAngles {
        debug_assert!(i.get() < self.k);
        let s = 2.0 * PI * f64::from(i.get()) / f64::from(self.k);
        EulerAngles {
            phi: self.center + self.yaw_amplitude * s.sin(),
            theta: self.center + self.pitch_amplitude * s.cos(),
            roll: 0.0,
        }
    }

    /// All indices in order, `0..K`.
    pub fn indices(&self) -> impl Iterator<Item = ViewIndex> {
        (0..self.k).map(ViewIndex)
    }
}

impl Default for ViewPath {
    fn default() -> Self {
        Self::with_view_count(DEFAULT_VIEW_COUNT).expect("defaults are valid")
    }
}

// ---------------------------------------------------------------------------
// Camera pose
// ---------------------------------------------------------------------------

/// Rigid camera pose: world-from-camera rotation (columns are the camera's
/// right, up, and backward axes) plus a position on the view sphere. The
/// camera looks along `-z` of its own frame, which is aimed at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub rotation: [[f64; 3]; 3],
    pub position: [f64; 3],
}

impl CameraPose {
    /// Unit vector from the camera toward the origin.
    pub fn forward(&self) -> [f64; 3] {
        // Third rotation column is the camera's backward axis.
        [-self.rotation[0][2], -self.rotation[1][2], -self.rotation[2][2]]
    }

    pub fn right(&self) -> [f64; 3] {
        [self.rotation[0][0], self.rotation[1][0], self.rotation[2][0]]
    }

    pub fn up(&self) -> [f64; 3] {
        [self.rotation[0][1], self.rotation[1][1], self.rotation[2][1]]
    }
}

/// Place a camera on the sphere of the given radius at spherical angles
/// `(phi, theta)` (azimuth from `+x`, polar from `+z`), looking at the
/// origin with zero roll (world `+z` is "up" in the image).
pub fn pose_for_angles(angles: &EulerAngles, radius: f64) -> Result<CameraPose, ViewPathError> {
    if !(radius > 0.0) {
        return Err(ViewPathError::Radius(radius));
    }
    let (sp, cp) = angles.phi.sin_cos();
    let (st, ct) = angles.theta.sin_cos();
    let position = [radius * st * cp, radius * st * sp, radius * ct];

    let f = normalize(neg(position));
    // Right-handed look-at frame; fall back to +y when looking along +-z.
    let mut s = cross(f, [0.0, 0.0, 1.0]);
    if dot(s, s) < 1e-18 {
        s = cross(f, [0.0, 1.0, 0.0]);
    }
    let s = normalize(s);
    let u = cross(s, f);
    let b = neg(f);
    Ok(CameraPose {
        rotation: [
            [s[0], u[0], b[0]],
            [s[1], u[1], b[1]],
            [s[2], u[2], b[2]],
        ],
        position,
    })
}

// Small fixed-size vector helpers shared with the renderer.

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn neg(a: [f64; 3]) -> [f64; 3] {
    [-a[0], -a[1], -a[2]]
}

pub(crate) fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = dot(a, a).sqrt();
    debug_assert!(n > 0.0, "normalize of zero vector");
    scale(a, 1.0 / n)
}

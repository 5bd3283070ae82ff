//! Deterministic testbed for black-box adversarial viewpoint attacks on
//! real/fake image detectors.
//!
//! The crate renders a procedural head from camera poses on a cyclic
//! view path, classifies renders with a trainable statistics-based
//! detector, and searches the path for views the detector mislabels —
//! by exhaustive seeded random search or by score-guided sign descent.
//! Everything is seeded and bitwise reproducible.

pub mod rng;
pub mod viewpath;
pub mod renderer;
pub mod imageproc;
pub mod detector;
pub mod attack;
pub mod harness;

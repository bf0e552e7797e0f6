//! Precomputed radiance transfer textures.
//!
//! Transfer (visibility times clamped cosine) is projected to real spherical
//! harmonics per texel of a UV-space texture, optionally followed by a
//! one-bounce inter-reflection texture, and rendered per pixel with either the
//! sparse triple-product tensor or a fixed-light product matrix.

pub mod error;
pub mod baker;
pub mod envlight;
pub mod geom;
pub mod image;
pub mod interreflect;
pub mod oracle;
pub mod render;
pub mod sampling;
pub mod scene;
pub mod scenes;
pub mod sh;
pub mod texture;

pub use error::{Error, Result};

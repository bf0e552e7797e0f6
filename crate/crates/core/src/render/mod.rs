//! Image synthesis from baked transfer: per-pixel texture fetches or the
//! per-vertex baseline, each with either triple-product method.

mod camera;
mod fragment;
pub(crate) mod material;
mod shade;
mod vertex;

pub use camera::Camera;
pub use fragment::{check_texture_set, render_fragment, Indirect, Output, RenderStats, Rendered};
pub(crate) use fragment::shade_hit;
pub use material::{Albedo, Exponent, Material, KERNEL_TABLE_MAX, KERNEL_TABLE_SIZE};
pub use shade::{shade_point, Lighting, Method, ShadeScratch, Shaded, SurfaceShading};
pub use vertex::render_vertex;

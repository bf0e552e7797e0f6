//! Precomputation of transfer in texture space and at vertices.

mod dilate;
mod gbuffer;
mod transfer;
mod vertex;

pub use dilate::{dilate, Dilate};
pub use gbuffer::{rasterize_gbuffer, GBuffer, SurfaceInput};
pub(crate) use gbuffer::normal_mapped;
pub use transfer::{bake_transfer, BakeSettings, MIN_SAMPLES};
pub(crate) use transfer::spawn_ray;
pub use vertex::{bake_vertex_transfer, VertexTransfer};

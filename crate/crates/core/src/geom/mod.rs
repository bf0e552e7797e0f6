//! Triangle meshes, OBJ ingestion and ray queries.

mod bvh;
mod mesh;
mod obj;

pub use bvh::{Bvh, Hit, Ray, Triangle};
pub use mesh::{Aabb, Mesh};
pub use obj::{load_obj, parse_obj, write_obj};

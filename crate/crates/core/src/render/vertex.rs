//! Per-vertex shading with colour interpolation, the baseline the
//! fragment path improves on.

use glam::DVec3;
use rayon::prelude::*;

use super::fragment::{RenderStats, Rendered};
use super::shade::{shade_transfer, Lighting, ShadeScratch, SurfaceShading};
use super::Camera;
use crate::baker::VertexTransfer;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::scene::Scene;
use crate::sh::Direction;

/// Shades every vertex once from its own transfer, then fills each pixel by
/// barycentric interpolation of the hit triangle's vertex colours.
pub fn render_vertex(scene: &Scene, camera: &Camera, vt: &VertexTransfer, lighting: &Lighting) -> Result<Rendered> {
    camera.validate()?;
    if vt.band() != lighting.band() || lighting.band() != scene.band() {
        return Err(Error::BandMismatch(vt.band(), lighting.band()));
    }
    let meshes = scene.meshes();
    if vt.meshes().len() != meshes.len() || meshes.iter().zip(vt.meshes()).any(|(m, v)| m.vertex_count() != v.len()) {
        return Err(Error::InvalidInput("vertex transfer does not match the scene meshes".into()));
    }

    let mut stats = RenderStats::default();
    let colors: Vec<(Vec<DVec3>, u64)> = meshes
        .par_iter()
        .zip(vt.meshes())
        .map(|(mesh, transfer)| {
            let mut s = ShadeScratch::new(scene.band(), vt.band() * vt.band());
            let m = scene.material(mesh.object_id);
            let mut clamped = 0;
            let c = (0..mesh.vertex_count())
                .map(|v| {
                    let p = mesh.positions[v];
                    let uv = mesh.uvs[v];
                    let surf = SurfaceShading {
                        diffuse: m.diffuse.at(uv),
                        specular: m.specular,
                        kernel: scene.kernel(mesh.object_id, uv),
                    };
                    let view = Direction::normalize(camera.position - p).unwrap_or(Direction::Z);
                    let n = Direction::new_unchecked(mesh.normals[v]);
                    let sh = shade_transfer(transfer[v].coeffs(), lighting, &surf, n, view, &mut s);
                    clamped += sh.clamped as u64;
                    sh.color
                })
                .collect();
            (c, clamped)
        })
        .collect();
    for (c, clamped) in &colors {
        stats.shades += c.len() as u64;
        stats.clamped += clamped;
    }

    let rows: Vec<(Vec<DVec3>, RenderStats)> = (0..camera.height)
        .into_par_iter()
        .map(|y| {
            let mut st = RenderStats::default();
            let row = (0..camera.width)
                .map(|x| {
                    st.pixels += 1;
                    let ray = camera.ray(x, y);
                    match scene.bvh().intersect(&ray) {
                        Some(hit) => {
                            st.covered += 1;
                            let c = &colors[hit.mesh as usize].0;
                            let tri = meshes[hit.mesh as usize].triangles[hit.triangle as usize];
                            (0..3).map(|i| hit.bary[i] * c[tri[i] as usize]).sum()
                        }
                        None => scene.env().sample(ray.dir),
                    }
                })
                .collect();
            (row, st)
        })
        .collect();
    for (_, s) in &rows {
        stats.pixels += s.pixels;
        stats.covered += s.covered;
    }
    let pixels = rows.into_iter().flat_map(|(r, _)| r).collect();
    Ok(Rendered { image: Image::from_pixels(camera.width, camera.height, pixels)?, stats })
}

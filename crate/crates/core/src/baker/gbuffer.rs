//! Software UV-space G-buffer pass: triangles are rasterized at their UV
//! coordinates and carry interpolated world positions and normals.

use glam::{DVec2, DVec3};
use log::warn;

use super::dilate::Dilate;
use crate::error::{Error, Result};
use crate::geom::Mesh;
use crate::image::Image;
use crate::texture::texel_center_uv;

/// One mesh of a texture set plus its optional tangent-space normal map
/// (RGB in `[0, 1]` encoding `(n + 1) / 2`).
#[derive(Clone, Copy, Debug)]
pub struct SurfaceInput<'a> {
    pub mesh: &'a Mesh,
    pub normal_map: Option<&'a Image>,
}

impl<'a> SurfaceInput<'a> {
    pub fn plain(mesh: &'a Mesh) -> Self {
        SurfaceInput { mesh, normal_map: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GBuffer {
    width: usize,
    height: usize,
    position: Vec<DVec3>,
    normal: Vec<DVec3>,
    geometric_normal: Vec<DVec3>,
    object: Vec<u32>,
    valid: Vec<bool>,
    overlaps: usize,
}

impl GBuffer {
    pub fn empty(width: usize, height: usize) -> Self {
        let n = width * height;
        GBuffer {
            width,
            height,
            position: vec![DVec3::ZERO; n],
            normal: vec![DVec3::ZERO; n],
            geometric_normal: vec![DVec3::ZERO; n],
            object: vec![0; n],
            valid: vec![false; n],
            overlaps: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn texel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn is_valid(&self, t: usize) -> bool {
        self.valid[t]
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn position(&self, t: usize) -> DVec3 {
        self.position[t]
    }

    /// Shading normal (normal-mapped when a map was supplied).
    pub fn normal(&self, t: usize) -> DVec3 {
        self.normal[t]
    }

    pub fn geometric_normal(&self, t: usize) -> DVec3 {
        self.geometric_normal[t]
    }

    pub fn object(&self, t: usize) -> u32 {
        self.object[t]
    }

    /// Texels claimed by two triangles with different interpolants.
    pub fn overlaps(&self) -> usize {
        self.overlaps
    }
}

impl Dilate for GBuffer {
    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn is_valid(&self, texel: usize) -> bool {
        self.valid[texel]
    }

    fn copy_texel(&mut self, from: usize, to: usize) {
        self.position[to] = self.position[from];
        self.normal[to] = self.normal[from];
        self.geometric_normal[to] = self.geometric_normal[from];
        self.object[to] = self.object[from];
        self.valid[to] = self.valid[from];
    }
}

/// Signed edge function of `p` against the directed edge `a → b`.
#[inline]
fn edge(a: DVec2, b: DVec2, p: DVec2) -> f64 {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}

/// Tie rule for texel centres exactly on an edge. For two positively
/// oriented triangles sharing an edge exactly one of the two directions owns
/// it, so a shared edge is rasterized once.
#[inline]
fn owns_edge(a: DVec2, b: DVec2) -> bool {
    let d = b - a;
    d.y > 0.0 || (d.y == 0.0 && d.x < 0.0)
}

/// Per-triangle tangent and bitangent from UV derivatives.
fn tangent_frame(p: [DVec3; 3], uv: [DVec2; 3]) -> Option<(DVec3, DVec3)> {
    let (dp1, dp2) = (p[1] - p[0], p[2] - p[0]);
    let (du1, du2) = (uv[1] - uv[0], uv[2] - uv[0]);
    let det = du1.x * du2.y - du2.x * du1.y;
    if det.abs() < 1e-20 {
        return None;
    }
    let r = 1.0 / det;
    Some(((dp1 * du2.y - dp2 * du1.y) * r, (dp2 * du1.x - dp1 * du2.x) * r))
}

/// Rescales to unit length, leaving already-unit vectors bit-identical.
#[inline]
fn renormalize(v: DVec3) -> DVec3 {
    let l2 = v.length_squared();
    if (l2 - 1.0).abs() <= 4.0 * f64::EPSILON {
        v
    } else {
        v / l2.sqrt()
    }
}

/// Applies a tangent-space normal-map texel to the interpolated normal.
fn perturb(n: DVec3, frame: Option<(DVec3, DVec3)>, encoded: DVec3) -> DVec3 {
    let Some((t, b)) = frame else { return n };
    let m = 2.0 * encoded - DVec3::ONE;
    let t = (t - n * n.dot(t)).try_normalize().unwrap_or_else(|| crate::sampling::orthonormal_basis(n).0);
    let handed = if n.cross(t).dot(b) < 0.0 { -1.0 } else { 1.0 };
    let b = handed * n.cross(t);
    let out = t * m.x + b * m.y + n * m.z;
    if out.length_squared() < 1e-20 {
        n
    } else {
        renormalize(out)
    }
}

/// Shading normal at a point of `mesh`'s triangle `tri` with interpolated
/// normal `n`, perturbed by a tangent-space normal map sampled at `uv`.
pub(crate) fn normal_mapped(mesh: &Mesh, tri: usize, n: DVec3, uv: DVec2, map: &Image) -> DVec3 {
    let v = mesh.triangles[tri].map(|i| i as usize);
    let frame = tangent_frame(v.map(|i| mesh.positions[i]), v.map(|i| mesh.uvs[i]));
    perturb(n, frame, map.sample_uv(uv))
}

/// Rasterizes every triangle of one texture set into a `width × height`
/// UV-space G-buffer. A texel is covered iff its centre lies inside a
/// triangle's UV footprint (top-left rule on shared edges). Overlapping
/// islands are counted and resolved last-writer-wins.
pub fn rasterize_gbuffer(surfaces: &[SurfaceInput<'_>], width: usize, height: usize) -> Result<GBuffer> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput("G-buffer needs a non-empty resolution".into()));
    }
    if let Some(first) = surfaces.first() {
        if let Some(other) = surfaces.iter().find(|s| s.mesh.texture_set != first.mesh.texture_set) {
            return Err(Error::InvalidInput(format!(
                "meshes {} and {} belong to different texture sets",
                first.mesh.name, other.mesh.name
            )));
        }
    }
    const UV_SLACK: f64 = 1e-9;
    for s in surfaces {
        if let Some(uv) = s.mesh.uvs.iter().find(|uv| uv.min_element() < -UV_SLACK || uv.max_element() > 1.0 + UV_SLACK) {
            return Err(Error::InvalidInput(format!("mesh {}: UV {uv:?} outside [0,1]²", s.mesh.name)));
        }
    }

    let mut g = GBuffer::empty(width, height);
    let mut owner: Vec<Option<(usize, usize)>> = vec![None; width * height];
    let to_px = |uv: DVec2| DVec2::new(uv.x * width as f64, (1.0 - uv.y) * height as f64);

    for (si, s) in surfaces.iter().enumerate() {
        let mesh = s.mesh;
        for (ti, tri) in mesh.triangles.iter().enumerate() {
            let idx = tri.map(|i| i as usize);
            let mut v = idx;
            let mut px = idx.map(|i| to_px(mesh.uvs[i]));
            let mut area = edge(px[0], px[1], px[2]);
            if area == 0.0 {
                continue;
            }
            if area < 0.0 {
                v.swap(1, 2);
                px.swap(1, 2);
                area = -area;
            }
            let pos = v.map(|i| mesh.positions[i]);
            let nrm = v.map(|i| mesh.normals[i]);
            let geo = (pos[1] - pos[0]).cross(pos[2] - pos[0]).try_normalize().unwrap_or(nrm[0]);
            let frame = s.normal_map.and_then(|_| tangent_frame(pos, v.map(|i| mesh.uvs[i])));
            let owns = [owns_edge(px[1], px[2]), owns_edge(px[2], px[0]), owns_edge(px[0], px[1])];

            let lo = px[0].min(px[1]).min(px[2]);
            let hi = px[0].max(px[1]).max(px[2]);
            let x0 = (lo.x - 0.5).ceil().max(0.0) as usize;
            let y0 = (lo.y - 0.5).ceil().max(0.0) as usize;
            let x1 = ((hi.x - 0.5).floor() as i64).min(width as i64 - 1);
            let y1 = ((hi.y - 0.5).floor() as i64).min(height as i64 - 1);
            if x1 < 0 || y1 < 0 {
                continue;
            }
            for y in y0..=y1 as usize {
                for x in x0..=x1 as usize {
                    let p = DVec2::new(x as f64 + 0.5, y as f64 + 0.5);
                    let e = [edge(px[1], px[2], p), edge(px[2], px[0], p), edge(px[0], px[1], p)];
                    let inside = e.iter().zip(owns).all(|(&e, own)| e > 0.0 || (e == 0.0 && own));
                    if !inside {
                        continue;
                    }
                    let w = e.map(|e| e / area);
                    let t = y * width + x;
                    let position = w[0] * pos[0] + w[1] * pos[1] + w[2] * pos[2];
                    let mut normal = renormalize(
                        (w[0] * nrm[0] + w[1] * nrm[1] + w[2] * nrm[2]).try_normalize().unwrap_or(geo),
                    );
                    if let Some(map) = s.normal_map {
                        normal = perturb(normal, frame, map.sample_uv(texel_center_uv(width, height, x, y)));
                    }
                    if let Some(prev) = owner[t] {
                        if prev != (si, ti)
                            && ((g.position[t] - position).length() > 1e-9 || (g.normal[t] - normal).length() > 1e-9)
                        {
                            g.overlaps += 1;
                        }
                    }
                    owner[t] = Some((si, ti));
                    g.position[t] = position;
                    g.normal[t] = normal;
                    g.geometric_normal[t] = geo;
                    g.object[t] = mesh.object_id;
                    g.valid[t] = true;
                }
            }
        }
    }
    if g.overlaps > 0 {
        warn!("UV islands overlap on {} texels; last writer wins", g.overlaps);
    }
    Ok(g)
}

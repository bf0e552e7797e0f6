//! Median-split bounding volume hierarchy over world-space triangles.

use glam::{DVec2, DVec3};

use super::{Aabb, Mesh};
use crate::error::{Error, Result};
use crate::sh::Direction;

const LEAF_SIZE: usize = 4;

#[derive(Clone, Copy, Debug)]
pub struct Ray {
    pub origin: DVec3,
    pub dir: Direction,
    pub t_min: f64,
    pub t_max: f64,
}

impl Ray {
    pub fn new(origin: DVec3, dir: Direction, t_min: f64, t_max: f64) -> Result<Self> {
        if !(t_min >= 0.0 && t_min < t_max) || !origin.is_finite() {
            return Err(Error::InvalidInput(format!("invalid ray interval ({t_min}, {t_max})")));
        }
        Ok(Ray { origin, dir, t_min, t_max })
    }

    /// Secondary ray leaving a surface, starting `eps` along the ray.
    pub fn offset(origin: DVec3, dir: Direction, eps: f64) -> Self {
        Ray { origin, dir, t_min: eps, t_max: f64::INFINITY }
    }

    pub fn at(&self, t: f64) -> DVec3 {
        self.origin + t * self.dir.vec()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Hit {
    pub t: f64,
    /// Index of the mesh in the slice the BVH was built from.
    pub mesh: u32,
    pub object_id: u32,
    pub texture_set: u32,
    /// Triangle index within its mesh.
    pub triangle: u32,
    /// Weights of the triangle's three vertices.
    pub bary: [f64; 3],
    pub position: DVec3,
    /// Interpolated shading normal.
    pub normal: Direction,
    pub geometric_normal: Direction,
    pub uv: DVec2,
}

/// World-space triangle as stored in the BVH.
#[derive(Clone, Copy, Debug)]
pub struct Triangle {
    pub p0: DVec3,
    pub e1: DVec3,
    pub e2: DVec3,
    pub mesh: u32,
    pub index: u32,
}

impl Triangle {
    /// Two-sided Möller-Trumbore test; returns `(t, u, v)` with `t` strictly
    /// inside the ray interval.
    #[inline]
    pub fn intersect(&self, ray: &Ray) -> Option<(f64, f64, f64)> {
        let d = ray.dir.vec();
        let p = d.cross(self.e2);
        let det = self.e1.dot(p);
        if det.abs() < 1e-14 {
            return None;
        }
        let inv = 1.0 / det;
        let s = ray.origin - self.p0;
        let u = s.dot(p) * inv;
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        let q = s.cross(self.e1);
        let v = d.dot(q) * inv;
        if v < 0.0 || u + v > 1.0 {
            return None;
        }
        let t = self.e2.dot(q) * inv;
        (t > ray.t_min && t < ray.t_max).then_some((t, u, v))
    }

    pub fn bounds(&self) -> Aabb {
        let mut b = Aabb::EMPTY;
        b.grow(self.p0);
        b.grow(self.p0 + self.e1);
        b.grow(self.p0 + self.e2);
        b
    }

    fn centroid(&self) -> DVec3 {
        self.p0 + (self.e1 + self.e2) / 3.0
    }

    #[inline]
    fn key(&self) -> (u32, u32) {
        (self.mesh, self.index)
    }
}

#[derive(Clone, Copy, Debug)]
struct Node {
    bounds: Aabb,
    /// Leaf: first triangle. Interior: index of the second child (the first
    /// child directly follows its parent).
    offset: u32,
    /// Triangle count, zero for interior nodes.
    count: u32,
}

/// Immutable acceleration structure owning the scene meshes.
#[derive(Clone, Debug)]
pub struct Bvh {
    meshes: Vec<Mesh>,
    triangles: Vec<Triangle>,
    nodes: Vec<Node>,
}

impl Bvh {
    pub fn build(meshes: Vec<Mesh>) -> Result<Self> {
        let mut triangles = Vec::new();
        for (mi, mesh) in meshes.iter().enumerate() {
            for (ti, tri) in mesh.triangles.iter().enumerate() {
                let [a, b, c] = tri.map(|i| mesh.positions[i as usize]);
                triangles.push(Triangle { p0: a, e1: b - a, e2: c - a, mesh: mi as u32, index: ti as u32 });
            }
        }
        if triangles.is_empty() {
            return Err(Error::EmptyScene);
        }
        let mut nodes = Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1);
        let len = triangles.len();
        build_node(&mut triangles, 0, len, &mut nodes);
        Ok(Bvh { meshes, triangles, nodes })
    }

    pub fn meshes(&self) -> &[Mesh] {
        &self.meshes
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    /// Offset for secondary rays: `1e-4` times the scene diagonal.
    pub fn ray_epsilon(&self) -> f64 {
        1e-4 * self.bounds().diagonal()
    }

    /// Nearest hit strictly inside the ray interval. Ties in `t` go to the
    /// lowest `(mesh, triangle)` so the result is independent of traversal
    /// order.
    pub fn intersect(&self, ray: &Ray) -> Option<Hit> {
        let inv = ray.dir.vec().recip();
        let mut best: Option<(f64, f64, f64, usize)> = None;
        let mut t_max = ray.t_max;
        let mut stack = [0u32; 64];
        let mut sp = 1;
        while sp > 0 {
            sp -= 1;
            let node = &self.nodes[stack[sp] as usize];
            if !slab(&node.bounds, ray.origin, inv, ray.t_min, t_max) {
                continue;
            }
            if node.count > 0 {
                let start = node.offset as usize;
                for idx in start..start + node.count as usize {
                    let tri = &self.triangles[idx];
                    // widen the interval by one ulp-ish step so equal-t ties are seen
                    let probe = Ray { t_max: next_up(t_max), ..*ray };
                    if let Some((t, u, v)) = tri.intersect(&probe) {
                        let better = match best {
                            None => t < ray.t_max,
                            Some((bt, _, _, bi)) => t < bt || (t == bt && tri.key() < self.triangles[bi].key()),
                        };
                        if better {
                            best = Some((t, u, v, idx));
                            t_max = t;
                        }
                    }
                }
            } else {
                let here = stack[sp] + 1;
                stack[sp] = node.offset;
                stack[sp + 1] = here;
                sp += 2;
            }
        }
        best.map(|(t, u, v, idx)| self.make_hit(ray, idx, t, u, v))
    }

    /// True iff any triangle is hit strictly inside the ray interval.
    pub fn occluded(&self, ray: &Ray) -> bool {
        let inv = ray.dir.vec().recip();
        let mut stack = [0u32; 64];
        let mut sp = 1;
        while sp > 0 {
            sp -= 1;
            let node = &self.nodes[stack[sp] as usize];
            if !slab(&node.bounds, ray.origin, inv, ray.t_min, ray.t_max) {
                continue;
            }
            if node.count > 0 {
                let start = node.offset as usize;
                if self.triangles[start..start + node.count as usize].iter().any(|t| t.intersect(ray).is_some()) {
                    return true;
                }
            } else {
                let here = stack[sp] + 1;
                stack[sp] = node.offset;
                stack[sp + 1] = here;
                sp += 2;
            }
        }
        false
    }

    /// Builds the hit record for triangle slot `idx` at parameters `(t, u, v)`.
    pub fn make_hit(&self, ray: &Ray, idx: usize, t: f64, u: f64, v: f64) -> Hit {
        let tri = &self.triangles[idx];
        let mesh = &self.meshes[tri.mesh as usize];
        let [a, b, c] = mesh.triangles[tri.index as usize].map(|i| i as usize);
        let bary = [1.0 - u - v, u, v];
        let normal = bary[0] * mesh.normals[a] + bary[1] * mesh.normals[b] + bary[2] * mesh.normals[c];
        let geometric = tri.e1.cross(tri.e2);
        let geometric_normal = Direction::normalize(geometric).unwrap_or(Direction::Z);
        Hit {
            t,
            mesh: tri.mesh,
            object_id: mesh.object_id,
            texture_set: mesh.texture_set,
            triangle: tri.index,
            bary,
            position: ray.at(t),
            normal: Direction::normalize(normal).unwrap_or(geometric_normal),
            geometric_normal,
            uv: bary[0] * mesh.uvs[a] + bary[1] * mesh.uvs[b] + bary[2] * mesh.uvs[c],
        }
    }
}

fn next_up(x: f64) -> f64 {
    if x.is_finite() {
        f64::from_bits(x.to_bits() + 1)
    } else {
        x
    }
}

#[inline]
fn slab(b: &Aabb, origin: DVec3, inv: DVec3, t_min: f64, t_max: f64) -> bool {
    let t0 = (b.min - origin) * inv;
    let t1 = (b.max - origin) * inv;
    // NaN (0 * inf) on an axis-parallel ray through a slab face: treat as
    // unbounded on that axis
    let lo = t0.min(t1);
    let hi = t0.max(t1);
    let near = [lo.x, lo.y, lo.z].into_iter().filter(|v| !v.is_nan()).fold(t_min, f64::max);
    let far = [hi.x, hi.y, hi.z].into_iter().filter(|v| !v.is_nan()).fold(t_max, f64::min);
    near <= far * (1.0 + 4.0 * f64::EPSILON)
}

fn build_node(tris: &mut [Triangle], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let slice = &mut tris[start..end];
    let bounds = slice.iter().fold(Aabb::EMPTY, |b, t| b.union(t.bounds()));
    let idx = nodes.len();
    if slice.len() <= LEAF_SIZE {
        nodes.push(Node { bounds, offset: start as u32, count: slice.len() as u32 });
        return idx;
    }
    let mut cb = Aabb::EMPTY;
    for t in slice.iter() {
        cb.grow(t.centroid());
    }
    let extent = cb.max - cb.min;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |a, b| {
        a.centroid()[axis].total_cmp(&b.centroid()[axis]).then(a.key().cmp(&b.key()))
    });
    nodes.push(Node { bounds, offset: 0, count: 0 });
    build_node(tris, start, start + mid, nodes);
    let second = build_node(tris, start + mid, end, nodes);
    nodes[idx].offset = second as u32;
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_bvh() -> Bvh {
        Bvh::build(vec![Mesh::ground_plane(1.0, 0.0, 1)]).unwrap()
    }

    #[test]
    fn single_triangle_center_ray() {
        let m = Mesh::new(
            "tri",
            vec![DVec3::new(0.0, 0.0, 0.0), DVec3::new(1.0, 0.0, 0.0), DVec3::new(0.0, 1.0, 0.0)],
            vec![DVec3::Z; 3],
            vec![DVec2::new(0.0, 0.0), DVec2::new(1.0, 0.0), DVec2::new(0.0, 1.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let bvh = Bvh::build(vec![m]).unwrap();
        let ray = Ray::new(DVec3::new(0.25, 0.25, 2.0), Direction::new(0.0, 0.0, -1.0).unwrap(), 0.0, f64::INFINITY)
            .unwrap();
        let hit = bvh.intersect(&ray).unwrap();
        assert_eq!(hit.triangle, 0);
        assert!((hit.t - 2.0).abs() < 1e-12);
        assert!((hit.uv - DVec2::new(0.25, 0.25)).length() < 1e-12);
        assert!((hit.bary.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn miss_and_exclusive_t_max() {
        let bvh = quad_bvh();
        let down = Direction::new(0.0, 0.0, -1.0).unwrap();
        let away = Ray::new(DVec3::new(5.0, 5.0, 1.0), down, 0.0, f64::INFINITY).unwrap();
        assert!(bvh.intersect(&away).is_none());
        let short = Ray::new(DVec3::new(0.2, 0.1, 1.0), down, 0.0, 1.0).unwrap();
        assert!(bvh.intersect(&short).is_none());
        assert!(!bvh.occluded(&short));
        let long = Ray::new(DVec3::new(0.2, 0.1, 1.0), down, 0.0, 1.0 + 1e-9).unwrap();
        assert!((bvh.intersect(&long).unwrap().t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn occluded_under_plane() {
        let bvh = quad_bvh();
        let p = DVec3::new(0.1, 0.2, -0.5);
        assert!(bvh.occluded(&Ray::offset(p, Direction::Z, 1e-4)));
        assert!(!bvh.occluded(&Ray::offset(p, Direction::new(0.0, 0.0, -1.0).unwrap(), 1e-4)));
    }

    #[test]
    fn empty_scene_rejected() {
        assert!(matches!(Bvh::build(vec![]), Err(Error::EmptyScene)));
    }

    #[test]
    fn invalid_ray_interval() {
        assert!(Ray::new(DVec3::ZERO, Direction::Z, 1.0, 1.0).is_err());
        assert!(Ray::new(DVec3::ZERO, Direction::Z, -1.0, 1.0).is_err());
    }
}

use glam::{DVec2, DVec3};

use crate::error::{Error, Result};

/// Indexed triangle mesh with per-vertex shading normals and UVs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mesh {
    pub name: String,
    pub positions: Vec<DVec3>,
    pub normals: Vec<DVec3>,
    pub uvs: Vec<DVec2>,
    pub triangles: Vec<[u32; 3]>,
    pub object_id: u32,
    pub texture_set: u32,
}

impl Mesh {
    /// Validates and normalizes the vertex normals.
    pub fn new(
        name: impl Into<String>,
        positions: Vec<DVec3>,
        normals: Vec<DVec3>,
        uvs: Vec<DVec2>,
        triangles: Vec<[u32; 3]>,
    ) -> Result<Self> {
        let name = name.into();
        let n = positions.len();
        if normals.len() != n || uvs.len() != n {
            return Err(Error::InvalidInput(format!(
                "mesh {name}: {n} positions but {} normals and {} uvs",
                normals.len(),
                uvs.len()
            )));
        }
        if let Some((t, _)) = triangles.iter().enumerate().find(|(_, tri)| tri.iter().any(|&v| v as usize >= n)) {
            return Err(Error::InvalidInput(format!("mesh {name}: triangle {t} references a missing vertex")));
        }
        let normals = normals
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.try_normalize()
                    .ok_or_else(|| Error::InvalidInput(format!("mesh {name}: vertex {i} has a degenerate normal")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Mesh { name, positions, normals, uvs, triangles, object_id: 0, texture_set: 0 })
    }

    pub fn with_ids(mut self, object_id: u32, texture_set: u32) -> Self {
        self.object_id = object_id;
        self.texture_set = texture_set;
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Applies `f` to every position (normals are left untouched, so only
    /// translations and uniform scales keep them valid).
    pub fn map_positions(mut self, f: impl Fn(DVec3) -> DVec3) -> Self {
        for p in &mut self.positions {
            *p = f(*p);
        }
        self
    }

    /// Rectangular grid spanning `origin + s·edge_u + t·edge_v` for
    /// `s, t ∈ [0, 1]`, with `cells_u × cells_v` quads split into two
    /// triangles each. UVs are `(s, t)`; the normal is `edge_u × edge_v`.
    pub fn grid(
        name: impl Into<String>,
        origin: DVec3,
        edge_u: DVec3,
        edge_v: DVec3,
        cells_u: u32,
        cells_v: u32,
    ) -> Self {
        assert!(cells_u > 0 && cells_v > 0);
        let normal = edge_u.cross(edge_v).normalize();
        let mut positions = Vec::new();
        let mut uvs = Vec::new();
        for j in 0..=cells_v {
            for i in 0..=cells_u {
                let s = i as f64 / cells_u as f64;
                let t = j as f64 / cells_v as f64;
                positions.push(origin + s * edge_u + t * edge_v);
                uvs.push(DVec2::new(s, t));
            }
        }
        let row = cells_u + 1;
        let mut triangles = Vec::new();
        for j in 0..cells_v {
            for i in 0..cells_u {
                let a = j * row + i;
                let b = a + 1;
                let c = a + row;
                let d = c + 1;
                triangles.push([a, b, d]);
                triangles.push([a, d, c]);
            }
        }
        let normals = vec![normal; positions.len()];
        Mesh::new(name, positions, normals, uvs, triangles).expect("grid construction is valid")
    }

    /// Axis-aligned square in the plane `z = height`, centred on the z axis,
    /// facing `+z`.
    pub fn ground_plane(half_size: f64, height: f64, cells: u32) -> Self {
        Mesh::grid(
            "plane",
            DVec3::new(-half_size, -half_size, height),
            DVec3::new(2.0 * half_size, 0.0, 0.0),
            DVec3::new(0.0, 2.0 * half_size, 0.0),
            cells,
            cells,
        )
    }
}

impl Mesh {
    /// Faces of an axis-aligned box between `min` and `max`, in the order
    /// `-x, +x, -y, +y, -z, +z`; `faces[i]` selects which ones are emitted.
    /// Each face is a `cells × cells` grid packed into its own tile of a 3×2
    /// UV atlas with a small gutter. Normals point outward unless `inward`.
    pub fn cuboid(name: impl Into<String>, min: DVec3, max: DVec3, cells: u32, inward: bool, faces: [bool; 6]) -> Self {
        let d = max - min;
        let (dx, dy, dz) = (DVec3::new(d.x, 0.0, 0.0), DVec3::new(0.0, d.y, 0.0), DVec3::new(0.0, 0.0, d.z));
        let specs = [
            (min, dz, dy),
            (DVec3::new(max.x, min.y, min.z), dy, dz),
            (min, dx, dz),
            (DVec3::new(min.x, max.y, min.z), dz, dx),
            (min, dy, dx),
            (DVec3::new(min.x, min.y, max.z), dx, dy),
        ];
        const GUTTER: f64 = 1.0 / 32.0;
        let (tile_w, tile_h) = (1.0 / 3.0, 0.5);
        let mut out = Mesh { name: name.into(), ..Mesh::default() };
        for (f, &(origin, eu, ev)) in specs.iter().enumerate() {
            if !faces[f] {
                continue;
            }
            let face = if inward { Mesh::grid("", origin, ev, eu, cells, cells) } else { Mesh::grid("", origin, eu, ev, cells, cells) };
            let base = out.positions.len() as u32;
            let corner = DVec2::new((f % 3) as f64 * tile_w, (f / 3) as f64 * tile_h);
            let span = DVec2::new(tile_w, tile_h) * (1.0 - 2.0 * GUTTER);
            out.positions.extend(&face.positions);
            out.normals.extend(&face.normals);
            out.uvs.extend(face.uvs.iter().map(|uv| corner + DVec2::new(tile_w, tile_h) * GUTTER + *uv * span));
            out.triangles.extend(face.triangles.iter().map(|t| t.map(|i| i + base)));
        }
        out
    }
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: DVec3,
    pub max: DVec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb { min: DVec3::splat(f64::INFINITY), max: DVec3::splat(f64::NEG_INFINITY) };

    pub fn grow(&mut self, p: DVec3) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    pub fn union(self, other: Aabb) -> Aabb {
        Aabb { min: self.min.min(other.min), max: self.max.max(other.max) }
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).length()
    }

    pub fn center(&self) -> DVec3 {
        0.5 * (self.min + self.max)
    }

    pub fn is_empty(&self) -> bool {
        self.min.cmpgt(self.max).any()
    }
}

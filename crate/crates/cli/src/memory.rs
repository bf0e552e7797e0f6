//! Storage cost of transfer textures versus per-vertex schemes.

use serde::{Deserialize, Serialize};

use prtt::sh::coeff_count;

const F32: u64 = 4;

/// Scalar or RGB transfer texture: one float per coefficient per channel.
pub fn texture_bytes(width: usize, height: usize, band: usize, channels: usize) -> u64 {
    (width * height) as u64 * coeff_count(band) as u64 * channels as u64 * F32
}

/// A full `k × k` transfer matrix per texel.
pub fn texel_matrix_bytes(width: usize, height: usize, band: usize) -> u64 {
    let k = coeff_count(band) as u64;
    (width * height) as u64 * k * k * F32
}

pub fn vertex_vector_bytes(vertices: usize, band: usize) -> u64 {
    vertices as u64 * coeff_count(band) as u64 * F32
}

pub fn vertex_matrix_bytes(vertices: usize, band: usize) -> u64 {
    let k = coeff_count(band) as u64;
    vertices as u64 * k * k * F32
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextureCost {
    pub texture_set: u32,
    pub width: usize,
    pub height: usize,
    /// Scalar transfer texture as baked.
    pub bytes: u64,
    /// The same texture holding a `k × k` matrix per texel.
    pub matrix_bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshCost {
    pub name: String,
    pub vertices: usize,
    pub vector_bytes: u64,
    pub matrix_bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryReport {
    pub band: usize,
    pub coefficients: usize,
    pub textures: Vec<TextureCost>,
    pub meshes: Vec<MeshCost>,
    pub texture_total: u64,
    pub texture_matrix_total: u64,
    pub vertex_vector_total: u64,
    pub vertex_matrix_total: u64,
}

impl MemoryReport {
    pub fn new(texture_sets: usize, resolution: usize, band: usize, meshes: &[(String, usize)]) -> Self {
        let textures: Vec<TextureCost> = (0..texture_sets as u32)
            .map(|s| TextureCost {
                texture_set: s,
                width: resolution,
                height: resolution,
                bytes: texture_bytes(resolution, resolution, band, 1),
                matrix_bytes: texel_matrix_bytes(resolution, resolution, band),
            })
            .collect();
        let meshes: Vec<MeshCost> = meshes
            .iter()
            .map(|(name, v)| MeshCost {
                name: name.clone(),
                vertices: *v,
                vector_bytes: vertex_vector_bytes(*v, band),
                matrix_bytes: vertex_matrix_bytes(*v, band),
            })
            .collect();
        MemoryReport {
            band,
            coefficients: coeff_count(band),
            texture_total: textures.iter().map(|t| t.bytes).sum(),
            texture_matrix_total: textures.iter().map(|t| t.matrix_bytes).sum(),
            vertex_vector_total: meshes.iter().map(|m| m.vector_bytes).sum(),
            vertex_matrix_total: meshes.iter().map(|m| m.matrix_bytes).sum(),
            textures,
            meshes,
        }
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("band {} ({} coefficients)\n", self.band, self.coefficients);
        for t in &self.textures {
            s += &format!(
                "texture set {:>3} {:>5}x{:<5} transfer {:>14}  k*k per texel {:>14}\n",
                t.texture_set,
                t.width,
                t.height,
                human(t.bytes),
                human(t.matrix_bytes)
            );
        }
        for m in &self.meshes {
            s += &format!(
                "mesh {:<20} {:>9} verts  k-vector {:>14}  k*k {:>14}\n",
                m.name,
                m.vertices,
                human(m.vector_bytes),
                human(m.matrix_bytes)
            );
        }
        s += &format!(
            "total: textures {} (k*k texels {}), vertices k-vector {} (k*k {})\n",
            human(self.texture_total),
            human(self.texture_matrix_total),
            human(self.vertex_vector_total),
            human(self.vertex_matrix_total)
        );
        s
    }
}

/// Byte count with a binary-prefixed approximation.
pub fn human(bytes: u64) -> String {
    const UNITS: [&str; 5] = ["B", "KiB", "MiB", "GiB", "TiB"];
    let mut v = bytes as f64;
    let mut u = 0;
    while v >= 1024.0 && u + 1 < UNITS.len() {
        v /= 1024.0;
        u += 1;
    }
    format!("{bytes} B ({v:.2} {})", UNITS[u])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formulas() {
        assert_eq!(texture_bytes(2, 3, 2, 3), 6 * 4 * 3 * 4);
        assert_eq!(texel_matrix_bytes(2, 3, 2), 6 * 16 * 4);
        assert_eq!(vertex_vector_bytes(10, 3), 10 * 9 * 4);
        assert_eq!(vertex_matrix_bytes(10, 3), 10 * 81 * 4);
    }

    #[test]
    fn report_totals() {
        let r = MemoryReport::new(2, 64, 5, &[("a".into(), 100), ("b".into(), 50)]);
        assert_eq!(r.texture_total, 2 * 64 * 64 * 25 * 4);
        assert_eq!(r.vertex_vector_total, 150 * 25 * 4);
        assert_eq!(r.vertex_matrix_total, 150 * 625 * 4);
        assert!(r.to_table().contains("k-vector"));
    }

    #[test]
    fn human_units() {
        assert_eq!(human(104_857_600), "104857600 B (100.00 MiB)");
        assert_eq!(human(512), "512 B (512.00 B)");
    }
}

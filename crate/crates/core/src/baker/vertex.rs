//! Per-vertex transfer, the classic baseline the texture bake is compared
//! against.

use log::info;
use rayon::prelude::*;

use super::transfer::{estimate_transfer, BakeSettings};
use crate::error::{Error, Result};
use crate::geom::{Bvh, Mesh};
use crate::sampling::{substream, Domain, StratifiedSphere};
use crate::sh::{coeff_count, SHVector};

/// Transfer vectors for every vertex of every mesh, indexed like the mesh
/// list the bake was run on.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexTransfer {
    band: usize,
    meshes: Vec<Vec<SHVector>>,
}

impl VertexTransfer {
    /// Wraps previously baked vectors; every vector must be of `band`.
    pub fn new(band: usize, meshes: Vec<Vec<SHVector>>) -> Result<Self> {
        if let Some(v) = meshes.iter().flatten().find(|v| v.band() != band) {
            return Err(Error::BandMismatch(v.band(), band));
        }
        Ok(VertexTransfer { band, meshes })
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn mesh(&self, index: usize) -> &[SHVector] {
        &self.meshes[index]
    }

    pub fn meshes(&self) -> &[Vec<SHVector>] {
        &self.meshes
    }

    pub fn vertex_count(&self) -> usize {
        self.meshes.iter().map(Vec::len).sum()
    }
}

/// Same estimator as the texture bake, evaluated at vertex positions and
/// normals. Vertex `v` of mesh `m` draws from the substream of its global
/// vertex index.
pub fn bake_vertex_transfer(meshes: &[Mesh], bvh: &Bvh, settings: &BakeSettings) -> Result<VertexTransfer> {
    settings.validate()?;
    let k = coeff_count(settings.band);
    let sampler = StratifiedSphere::new(settings.samples);
    let jobs: Vec<(usize, usize)> =
        meshes.iter().enumerate().flat_map(|(m, mesh)| (0..mesh.vertex_count()).map(move |v| (m, v))).collect();
    info!("baking vertex transfer: {} vertices, {} samples", jobs.len(), sampler.len());
    let flat: Vec<SHVector> = jobs
        .par_iter()
        .enumerate()
        .map(|(global, &(m, v))| {
            let mesh = &meshes[m];
            let n = mesh.normals[v];
            let mut rng = substream(settings.seed, Domain::Vertex, global as u64);
            let mut out = vec![0.0; k];
            estimate_transfer(bvh, mesh.positions[v], n, n, &sampler, &mut rng, settings.band, &mut out);
            SHVector::from_coeffs(settings.band, out)
        })
        .collect::<Result<_>>()?;
    let mut it = flat.into_iter();
    let meshes = meshes.iter().map(|m| it.by_ref().take(m.vertex_count()).collect()).collect();
    Ok(VertexTransfer { band: settings.band, meshes })
}

//! Implementations of the CLI verbs.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use log::info;
use serde::{Deserialize, Serialize};

use prtt::baker::{bake_transfer, bake_vertex_transfer, rasterize_gbuffer, VertexTransfer};
use prtt::envlight::SHLight;
use prtt::image::Image;
use prtt::interreflect::{bake_one_bounce, bounce_sidecar};
use prtt::oracle::{image_metrics, mc_direct, mc_one_bounce, ImageMetrics};
use prtt::render::{render_fragment, render_vertex, Indirect, Lighting, Method, Output, RenderStats};
use prtt::scene::Scene;
use prtt::sh::{SHVector, TriplingTensor};
use prtt::texture::{Sidecar, TransferTexture};

use crate::config::{light_from_pfm, LoadedConfig};
use crate::memory::MemoryReport;

pub fn t0_path(out: &Path, set: u32) -> PathBuf {
    out.join(format!("t0_set{set}.prtt"))
}

pub fn t1_path(out: &Path, set: u32) -> PathBuf {
    out.join(format!("t1_set{set}.prtt"))
}

pub fn vertex_path(out: &Path) -> PathBuf {
    out.join("vertex_transfer.json")
}

/// Files written so far by a command; removed unless the command succeeds.
#[derive(Default)]
struct Outputs(Vec<PathBuf>);

impl Outputs {
    fn add(&mut self, p: PathBuf) {
        self.0.push(p);
    }

    fn commit(mut self) {
        self.0.clear();
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        for p in &self.0 {
            let _ = std::fs::remove_file(p);
        }
    }
}

fn write_texture(tex: &TransferTexture, sidecar: &Sidecar, path: PathBuf, outputs: &mut Outputs) -> Result<()> {
    outputs.add(path.clone());
    outputs.add(Sidecar::path_for(&path));
    tex.write(&path)?;
    sidecar.write(&path)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetSummary {
    pub texture_set: u32,
    pub valid_texels: usize,
    pub overlapping_texels: usize,
    pub gbuffer_seconds: f64,
    pub bake_seconds: f64,
    pub path: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BakeSummary {
    pub sets: Vec<SetSummary>,
    pub vertices: usize,
    pub vertex_seconds: f64,
}

#[derive(Serialize, Deserialize)]
struct VertexFile {
    band: usize,
    meshes: Vec<Vec<Vec<f64>>>,
}

fn write_vertex_transfer(vt: &VertexTransfer, path: &Path) -> Result<()> {
    let file = VertexFile {
        band: vt.band(),
        meshes: vt.meshes().iter().map(|m| m.iter().map(|v| v.coeffs().to_vec()).collect()).collect(),
    };
    std::fs::write(path, serde_json::to_vec(&file)?).with_context(|| format!("writing {}", path.display()))
}

pub fn read_vertex_transfer(path: &Path) -> Result<VertexTransfer> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let file: VertexFile = serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))?;
    let meshes = file
        .meshes
        .into_iter()
        .map(|m| m.into_iter().map(|c| SHVector::from_coeffs(file.band, c)).collect::<prtt::Result<Vec<_>>>())
        .collect::<prtt::Result<Vec<_>>>()?;
    Ok(VertexTransfer::new(file.band, meshes)?)
}

/// G-buffer, transfer bake, dilation and write for every texture set, plus
/// the per-vertex baseline.
pub fn cmd_bake(cfg: &LoadedConfig) -> Result<BakeSummary> {
    let (scene, _) = cfg.scene()?;
    let out = cfg.output_dir();
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let bake = &cfg.config.bake;
    let settings = bake.settings();
    let mut outputs = Outputs::default();
    let mut sets = Vec::new();
    for set in 0..scene.texture_set_count() as u32 {
        let t = Instant::now();
        let g = rasterize_gbuffer(&scene.surfaces(set), bake.resolution, bake.resolution)?;
        let gbuffer_seconds = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let tex = bake_transfer(&g, scene.bvh(), &settings)?;
        let bake_seconds = t.elapsed().as_secs_f64();
        let path = t0_path(&out, set);
        let sidecar = Sidecar { light_hash: None, brdf_description: scene.brdf_description(), bounce_index: 0 };
        write_texture(&tex, &sidecar, path.clone(), &mut outputs)?;
        info!("set {set}: {} valid texels, G-buffer {gbuffer_seconds:.2}s, bake {bake_seconds:.2}s", g.valid_count());
        sets.push(SetSummary {
            texture_set: set,
            valid_texels: g.valid_count(),
            overlapping_texels: g.overlaps(),
            gbuffer_seconds,
            bake_seconds,
            path,
        });
    }
    let t = Instant::now();
    let vt = bake_vertex_transfer(scene.meshes(), scene.bvh(), &settings)?;
    let vpath = vertex_path(&out);
    outputs.add(vpath.clone());
    write_vertex_transfer(&vt, &vpath)?;
    let summary = BakeSummary { sets, vertices: vt.vertex_count(), vertex_seconds: t.elapsed().as_secs_f64() };
    outputs.commit();
    Ok(summary)
}

fn read_t0(scene: &Scene, out: &Path) -> Result<Vec<TransferTexture>> {
    (0..scene.texture_set_count() as u32)
        .map(|set| {
            let p = t0_path(out, set);
            ensure!(p.is_file(), "missing zero-bounce texture {}; run `bake` first", p.display());
            TransferTexture::read(&p).with_context(|| format!("reading {}", p.display()))
        })
        .collect()
}

fn active_light(cfg: &LoadedConfig, configured: SHLight, light: Option<&Path>) -> Result<SHLight> {
    match light {
        Some(p) => light_from_pfm(p, cfg.band()),
        None => Ok(configured),
    }
}

fn lighting(light: SHLight, method: Method) -> Result<Lighting> {
    let tau = Arc::new(TriplingTensor::compute(light.band())?);
    Ok(Lighting::new(light, tau, method)?)
}

/// One-bounce textures for every texture set under the configured light,
/// or under `light` when given.
pub fn cmd_bake_indirect(cfg: &LoadedConfig, light: Option<&Path>) -> Result<Vec<PathBuf>> {
    let (scene, configured) = cfg.scene()?;
    let out = cfg.output_dir();
    let t0 = read_t0(&scene, &out)?;
    let lighting = lighting(active_light(cfg, configured, light)?, Method::Tpfl)?;
    let bake = &cfg.config.bake;
    let mut outputs = Outputs::default();
    let mut written = Vec::new();
    for set in 0..scene.texture_set_count() as u32 {
        let g = rasterize_gbuffer(&scene.surfaces(set), bake.resolution, bake.resolution)?;
        ensure!(
            t0[set as usize].width() == g.width() && t0[set as usize].height() == g.height(),
            "zero-bounce texture for set {set} is {}x{}, config resolution is {}",
            t0[set as usize].width(),
            t0[set as usize].height(),
            bake.resolution
        );
        let t = Instant::now();
        let tex = bake_one_bounce(&g, &scene, &t0, &lighting, &bake.bounce_settings())?;
        info!("set {set}: one bounce baked in {:.2}s", t.elapsed().as_secs_f64());
        let path = t1_path(&out, set);
        write_texture(&tex, &bounce_sidecar(&scene, &lighting, 1), path.clone(), &mut outputs)?;
        written.push(path);
    }
    outputs.commit();
    Ok(written)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Fragment,
    Vertex,
}

#[derive(Clone, Debug)]
pub struct RenderArgs {
    pub mode: Mode,
    pub method: Method,
    pub indirect: bool,
    pub indirect_only: bool,
    pub out: PathBuf,
    pub light: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderSummary {
    pub stats: RenderStats,
    pub vertices: usize,
    pub pfm: PathBuf,
    pub ppm: PathBuf,
}

fn write_image(img: &Image, out: &Path) -> Result<(PathBuf, PathBuf)> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let pfm = out.with_extension("pfm");
    let ppm = out.with_extension("ppm");
    img.write_pfm(&pfm)?;
    img.write_ppm(&ppm)?;
    Ok((pfm, ppm))
}

pub fn cmd_render(cfg: &LoadedConfig, args: &RenderArgs) -> Result<RenderSummary> {
    let (scene, configured) = cfg.scene()?;
    let out = cfg.output_dir();
    let lighting = lighting(active_light(cfg, configured, args.light.as_deref())?, args.method)?;
    let vertices = scene.meshes().iter().map(|m| m.vertex_count()).sum();
    let rendered = match args.mode {
        Mode::Fragment => {
            let t0 = read_t0(&scene, &out)?;
            let bounce = if args.indirect || args.indirect_only {
                let mut textures = Vec::new();
                let mut sidecars = Vec::new();
                for set in 0..scene.texture_set_count() as u32 {
                    let p = t1_path(&out, set);
                    ensure!(p.is_file(), "missing bounce texture {}; run `bake-indirect` first", p.display());
                    textures.push(TransferTexture::read(&p)?);
                    sidecars.push(Sidecar::read(&p)?);
                }
                Some((textures, sidecars))
            } else {
                None
            };
            let indirect = bounce.as_ref().map(|(t, s)| Indirect { textures: t, sidecars: s });
            let output = if args.indirect_only { Output::IndirectOnly } else { Output::Full };
            render_fragment(&scene, &cfg.config.camera, &t0, &lighting, indirect, output)?
        }
        Mode::Vertex => {
            if args.indirect || args.indirect_only {
                bail!("vertex mode has no inter-reflection term");
            }
            let vp = vertex_path(&out);
            ensure!(vp.is_file(), "missing vertex transfer {}; run `bake` first", vp.display());
            render_vertex(&scene, &cfg.config.camera, &read_vertex_transfer(&vp)?, &lighting)?
        }
    };
    let (pfm, ppm) = write_image(&rendered.image, &args.out)?;
    Ok(RenderSummary { stats: rendered.stats, vertices, pfm, ppm })
}

/// Monte Carlo reference image: direct lighting, or the one-bounce
/// indirect term alone.
pub fn cmd_reference(cfg: &LoadedConfig, spp: usize, seed: u64, one_bounce: bool, out: &Path) -> Result<PathBuf> {
    let (scene, _) = cfg.scene()?;
    let img = if one_bounce {
        mc_one_bounce(&scene, &cfg.config.camera, spp, seed)?
    } else {
        mc_direct(&scene, &cfg.config.camera, spp, seed)?
    };
    Ok(write_image(&img, out)?.0)
}

pub fn cmd_compare(test: &Path, reference: &Path) -> Result<ImageMetrics> {
    let a = Image::read_pfm(test).with_context(|| format!("reading {}", test.display()))?;
    let b = Image::read_pfm(reference).with_context(|| format!("reading {}", reference.display()))?;
    Ok(image_metrics(&a, &b, None)?)
}

pub fn cmd_mem_report(cfg: &LoadedConfig) -> Result<MemoryReport> {
    let meshes = cfg.meshes()?;
    let sets = meshes.iter().map(|m| m.texture_set as usize + 1).max().unwrap_or(0);
    let counts: Vec<(String, usize)> = meshes.iter().map(|m| (m.name.clone(), m.vertex_count())).collect();
    Ok(MemoryReport::new(sets, cfg.config.bake.resolution, cfg.band(), &counts))
}

/// Every stored tripling coefficient as `i j k value` lines.
pub fn cmd_tensor(band: usize) -> Result<String> {
    let tau = TriplingTensor::compute(band)?;
    let mut s = String::with_capacity(tau.nnz() * 32);
    for e in tau.entries() {
        s += &format!("{} {} {} {:.9e}\n", e.i, e.j, e.k, e.value);
    }
    Ok(s)
}

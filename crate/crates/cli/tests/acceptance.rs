//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use glam::DVec3;
use rand::Rng;

use prtt::baker::{bake_transfer, bake_vertex_transfer, rasterize_gbuffer, BakeSettings, SurfaceInput};
use prtt::envlight::SHLight;
use prtt::geom::{Bvh, Mesh};
use prtt::image::Image;
use prtt::interreflect::{bake_one_bounce, bounce_sidecar};
use prtt::oracle::{coverage_mask, image_metrics, mc_direct, mc_one_bounce, quadrature_project_product};
use prtt::render::{render_fragment, render_vertex, Indirect, Lighting, Method, Output, Rendered};
use prtt::sampling::{substream, Domain};
use prtt::scene::Scene;
use prtt::scenes::{box_interior, occluder_scene, Demo};
use prtt::sh::{
    clamped_cosine_zonal, coeff_count, eval_basis, reconstruct, zh_expand, Direction, SHVector, SphereRule,
    TriplingTensor,
};
use prtt::texture::TransferTexture;
use prtt_cli::bench::run_bench;
use prtt_cli::memory::MemoryReport;

const BAND: usize = 5;
const IMAGE: usize = 256;
const TEXTURE: usize = 128;
const SAMPLES: usize = 4096;
const REFERENCE_SPP: usize = 4096;

// Pinned tolerances.
const PRODUCT_TOL: f64 = 1e-5;
const PRODUCT_SECONDS: f64 = 10.0;
const TP_TPFL_VECTOR_TOL: f64 = 1e-6;
const TP_TPFL_IMAGE_TOL: f64 = 1e-5;
const TP_TPFL_SECONDS: f64 = 60.0;
const GRAM_TOL: f64 = 1e-6;
const TENSOR_TOL: f64 = 1e-7;
const COSINE_REL_TOL: f64 = 0.03;
const COSINE_ABS_TOL: f64 = 0.02;
const FRAGMENT_VS_VERTEX: f64 = 0.5;
const DENSE_VERTEX_VS_FRAGMENT: f64 = 1.5;
const COMPARISON_SECONDS: f64 = 600.0;
const TESSELLATION_TOL: f64 = 1e-3;
const BOUNCE_REL_RMSE: f64 = 0.10;
const BOUNCE_SAMPLES: usize = 1024;
const LINEARITY_TOL: f64 = 1e-6;
const SLOPE_RANGE: (f64, f64) = (1.8, 2.2);
const BENCH_ITERATIONS: usize = 50_000;
const ARGMAX_DEGREES: f64 = 5.0;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn settings(samples: usize) -> BakeSettings {
    BakeSettings { band: BAND, samples, seed: 0, dilation: 3 }
}

fn tau() -> Arc<TriplingTensor> {
    Arc::new(TriplingTensor::compute(BAND).unwrap())
}

fn lighting(light: &SHLight, method: Method) -> Lighting {
    Lighting::new(light.clone(), tau(), method).unwrap()
}

fn bake_sets(scene: &Scene, res: usize, samples: usize) -> Vec<TransferTexture> {
    (0..scene.texture_set_count() as u32)
        .map(|s| {
            let g = rasterize_gbuffer(&scene.surfaces(s), res, res).unwrap();
            bake_transfer(&g, scene.bvh(), &settings(samples)).unwrap()
        })
        .collect()
}

fn fragment(d: &Demo, t0: &[TransferTexture], method: Method) -> Rendered {
    render_fragment(&d.scene, &d.camera, t0, &lighting(&d.light, method), None, Output::Full).unwrap()
}

fn random_sh(rng: &mut impl Rng) -> SHVector {
    SHVector::from_coeffs(BAND, (0..coeff_count(BAND)).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn criterion_product() -> Outcome {
    let start = Instant::now();
    let tau = TriplingTensor::compute(BAND).unwrap();
    let mut rng = substream(11, Domain::Bench, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (a, b) = (random_sh(&mut rng), random_sh(&mut rng));
        let fast = tau.triple_product(&a, &b).unwrap();
        let slow = quadrature_project_product(&a, &b).unwrap();
        worst = worst.max(max_diff(fast.coeffs(), slow.coeffs()));
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst < PRODUCT_TOL && secs < PRODUCT_SECONDS,
        format!("max coefficient diff {worst:.2e} (< {PRODUCT_TOL:.0e}), {secs:.2}s (< {PRODUCT_SECONDS}s)"),
    )
}

fn criterion_tp_tpfl(d: &Demo, t0: &[TransferTexture]) -> Outcome {
    let tau = tau();
    let mut rng = substream(12, Domain::Bench, 2);
    let mut worst_vec: f64 = 0.0;
    for _ in 0..50 {
        let (t, l) = (random_sh(&mut rng), random_sh(&mut rng));
        let m = prtt::sh::ProductMatrix::new(&l, &tau).unwrap();
        let a = tau.triple_product(&t, &l).unwrap();
        let b = m.apply(&t).unwrap();
        worst_vec = worst_vec.max(max_diff(a.coeffs(), b.coeffs()));
    }
    let start = Instant::now();
    let tp = fragment(d, t0, Method::Tp);
    let tpfl = fragment(d, t0, Method::Tpfl);
    let secs = start.elapsed().as_secs_f64();
    let img = image_metrics(&tp.image, &tpfl.image, None).unwrap().max_abs;
    check(
        worst_vec < TP_TPFL_VECTOR_TOL && img < TP_TPFL_IMAGE_TOL && secs < TP_TPFL_SECONDS,
        format!("vector diff {worst_vec:.2e}, image max_abs {img:.2e}, both renders {secs:.2}s at {IMAGE}x{IMAGE}"),
    )
}

fn criterion_orthonormality() -> Outcome {
    let k = coeff_count(BAND);
    let rule = SphereRule::for_degree(2 * (BAND - 1));
    let mut gram = vec![0.0; k * k];
    for (&p, &w) in rule.points().iter().zip(rule.weights()) {
        let y = eval_basis(Direction::from_vec(p).unwrap(), BAND).unwrap();
        for i in 0..k {
            for j in 0..k {
                gram[i * k + j] += w * y.coeffs()[i] * y.coeffs()[j];
            }
        }
    }
    let gram_err = (0..k * k).map(|ij| (gram[ij] - f64::from(u8::from(ij / k == ij % k))).abs()).fold(0.0, f64::max);

    let tau = TriplingTensor::compute(BAND).unwrap();
    let c = 0.5 / std::f64::consts::PI.sqrt();
    let mut dc_err: f64 = 0.0;
    let mut sym_err: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let want = if i == j { c } else { 0.0 };
            dc_err = dc_err.max((tau.get(i, j, 0) - want).abs());
            for l in 0..k {
                let v = tau.get(i, j, l);
                for w in [tau.get(i, l, j), tau.get(j, i, l), tau.get(j, l, i), tau.get(l, i, j), tau.get(l, j, i)] {
                    sym_err = sym_err.max((v - w).abs());
                }
            }
        }
    }
    check(
        gram_err < GRAM_TOL && dc_err < TENSOR_TOL && sym_err == 0.0,
        format!("Gram error {gram_err:.2e}, tau_ij0 error {dc_err:.2e}, asymmetry {sym_err:.2e}"),
    )
}

fn criterion_clamped_cosine() -> Outcome {
    let plane = Mesh::ground_plane(1.0, 0.0, 1);
    let g = rasterize_gbuffer(&[SurfaceInput::plain(&plane)], 8, 8).unwrap();
    let bvh = Bvh::build(vec![plane]).unwrap();
    let tex = bake_transfer(&g, &bvh, &settings(SAMPLES)).unwrap();
    let zonal = clamped_cosine_zonal(BAND);
    let printed = [0.8862, 1.0233, 0.4954, 0.0, -0.1108];
    let table_err = zonal.iter().zip(printed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let want = zh_expand(&zonal, Direction::Z, BAND).unwrap();
    let mut worst_rel: f64 = 0.0;
    let mut worst_abs: f64 = 0.0;
    for t in 0..tex.texel_count() {
        for (a, b) in tex.texel_sh(t, 0).coeffs().iter().zip(want.coeffs()) {
            if b.abs() > 1e-6 {
                worst_rel = worst_rel.max((a - b).abs() / b.abs());
            } else {
                worst_abs = worst_abs.max(a.abs());
            }
        }
    }
    check(
        table_err < 1e-4 && worst_rel < COSINE_REL_TOL && worst_abs < COSINE_ABS_TOL,
        format!("analytic zonal vs printed {table_err:.1e}; worst relative error {worst_rel:.4}, worst zero-coefficient {worst_abs:.4}"),
    )
}

struct Comparison {
    fragment: f64,
    vertex: f64,
    dense_vertex: f64,
    secs: f64,
}

fn comparison(d: &Demo, t0: &[TransferTexture], reference: &Image, start: Instant) -> Comparison {
    let mask = coverage_mask(&d.scene, &d.camera);
    let rel = |img: &Image| image_metrics(img, reference, Some(&mask)).unwrap().rel_rmse;
    let frag = fragment(d, t0, Method::Tpfl);
    let vt = bake_vertex_transfer(d.scene.meshes(), d.scene.bvh(), &settings(SAMPLES)).unwrap();
    let vert = render_vertex(&d.scene, &d.camera, &vt, &lighting(&d.light, Method::Tpfl)).unwrap();
    let dense = occluder_scene(64, IMAGE, BAND).unwrap();
    let dvt = bake_vertex_transfer(dense.scene.meshes(), dense.scene.bvh(), &settings(SAMPLES)).unwrap();
    let dvert = render_vertex(&dense.scene, &dense.camera, &dvt, &lighting(&dense.light, Method::Tpfl)).unwrap();
    Comparison {
        fragment: rel(&frag.image),
        vertex: rel(&vert.image),
        dense_vertex: rel(&dvert.image),
        secs: start.elapsed().as_secs_f64(),
    }
}

fn criterion_fragment_vs_vertex(c: &Comparison) -> Outcome {
    check(
        c.fragment <= FRAGMENT_VS_VERTEX * c.vertex
            && c.dense_vertex <= DENSE_VERTEX_VS_FRAGMENT * c.fragment
            && c.secs < COMPARISON_SECONDS,
        format!(
            "relRMSE fragment {:.5}, vertex (2 tris) {:.5}, vertex (64x64) {:.5}; {:.0}s",
            c.fragment, c.vertex, c.dense_vertex, c.secs
        ),
    )
}

fn criterion_tessellation(d: &Demo, t0: &[TransferTexture], coarse: &Image) -> Outcome {
    let fine = occluder_scene(32, IMAGE, BAND).unwrap();
    let tris = fine.scene.meshes()[0].triangle_count();
    let g = rasterize_gbuffer(&fine.scene.surfaces(0), TEXTURE, TEXTURE).unwrap();
    let plane = bake_transfer(&g, fine.scene.bvh(), &settings(SAMPLES)).unwrap();
    // the occluder is identical in both scenes
    let textures = vec![plane, t0[1].clone()];
    let img = fragment(&fine, &textures, Method::Tpfl).image;
    let mask = coverage_mask(&d.scene, &d.camera);
    let rel = image_metrics(&img, coarse, Some(&mask)).unwrap().rel_rmse;
    check(
        tris == 2048 && rel < TESSELLATION_TOL,
        format!("2 vs {tris} plane triangles: relRMSE {rel:.2e} (< {TESSELLATION_TOL:.0e})"),
    )
}

fn criterion_interreflection() -> Outcome {
    let d = box_interior(IMAGE / 2, BAND).unwrap();
    let g = rasterize_gbuffer(&d.scene.surfaces(0), TEXTURE, TEXTURE).unwrap();
    let t0 = vec![bake_transfer(&g, d.scene.bvh(), &settings(SAMPLES)).unwrap()];
    let lit = lighting(&d.light, Method::Tpfl);
    let t1 = vec![bake_one_bounce(&g, &d.scene, &t0, &lit, &settings(BOUNCE_SAMPLES)).unwrap()];
    let sidecars = vec![bounce_sidecar(&d.scene, &lit, 1)];
    let indirect = Indirect { textures: &t1, sidecars: &sidecars };
    let img = render_fragment(&d.scene, &d.camera, &t0, &lit, Some(indirect), Output::IndirectOnly).unwrap().image;
    let reference = mc_one_bounce(&d.scene, &d.camera, REFERENCE_SPP, 7).unwrap();
    let mask = coverage_mask(&d.scene, &d.camera);
    let rel = image_metrics(&img, &reference, Some(&mask)).unwrap().rel_rmse;

    // linearity, on a cheaper bake
    let small = rasterize_gbuffer(&d.scene.surfaces(0), 32, 32).unwrap();
    let s0 = vec![bake_transfer(&small, d.scene.bvh(), &settings(256)).unwrap()];
    let other = SHLight::constant(BAND, DVec3::new(0.3, 0.6, 0.2));
    let bake = |l: &SHLight| bake_one_bounce(&small, &d.scene, &s0, &lighting(l, Method::Tpfl), &settings(256)).unwrap();
    let combined = {
        let [r, g, b] = std::array::from_fn(|c| {
            let mut v = d.light.channel(c).scaled(2.0);
            v.add_scaled(other.channel(c), -0.5);
            v
        });
        SHLight::new(r, g, b).unwrap()
    };
    let (a, b, ab) = (bake(&d.light), bake(&other), bake(&combined));
    // residual relative to the magnitude of the terms being combined
    let mut lin_rel: f64 = 0.0;
    for p in 0..ab.plane_count() {
        for ((x, y), z) in a.plane(p).iter().zip(b.plane(p)).zip(ab.plane(p)) {
            let (x, y, z) = (f64::from(*x), f64::from(*y), f64::from(*z));
            let err = (z - (2.0 * x - 0.5 * y)).abs();
            lin_rel = lin_rel.max(err / (2.0 * x.abs() + 0.5 * y.abs() + 1e-12));
        }
    }

    let wrong = lighting(&d.light.scaled(2.0), Method::Tpfl);
    let indirect = Indirect { textures: &t1, sidecars: &sidecars };
    let rejected = matches!(
        render_fragment(&d.scene, &d.camera, &t0, &wrong, Some(indirect), Output::Full),
        Err(prtt::Error::LightMismatch { .. })
    );
    check(
        rel < BOUNCE_REL_RMSE && lin_rel < LINEARITY_TOL && rejected,
        format!(
            "one-bounce relRMSE {rel:.4} (< {BOUNCE_REL_RMSE}), linearity residual {lin_rel:.2e}, light mismatch rejected: {rejected}"
        ),
    )
}

fn criterion_memory() -> Outcome {
    // the room row implies 2.5 MB / (25 * 4 B) vertices
    let room = 26_214;
    let r = MemoryReport::new(1, 1024, BAND, &[("room".into(), room)]);
    let mib = |b: u64| b as f64 / (1024.0 * 1024.0);
    let gib = |b: u64| mib(b) / 1024.0;
    let ours = r.texture_total;
    let full = r.texture_matrix_total;
    let (vec_b, mat_b) = (r.vertex_vector_total, r.vertex_matrix_total);
    check(
        ours == 104_857_600
            && full == 2_621_440_000
            && mib(ours) == 100.0
            && (gib(full) - 2.5).abs() < 0.1
            && (mib(vec_b) - 2.5).abs() < 0.05
            && (mat_b as f64 / 1e6 - 64.0).abs() / 64.0 < 0.05,
        format!(
            "ours {ours} B = {:.2} MiB, k*k texels {full} B = {:.2} GiB, room ({room} verts, approximate) {:.2} MiB / {:.1} MB",
            mib(ours),
            gib(full),
            mib(vec_b),
            mat_b as f64 / 1e6
        ),
    )
}

fn criterion_bench() -> Outcome {
    let r = run_bench(2..=6, BENCH_ITERATIONS, 0).unwrap();
    let b5 = r.rows.iter().find(|row| row.band == 5).unwrap();
    check(
        b5.tpfl_ns < b5.tp_ns && (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(&r.tpfl_slope),
        format!(
            "band 5: TP {:.1} ns, TPFL {:.1} ns per product; TPFL slope {:.3} in [{}, {}]",
            b5.tp_ns, b5.tpfl_ns, r.tpfl_slope, SLOPE_RANGE.0, SLOPE_RANGE.1
        ),
    )
}

fn criterion_normal_map() -> Outcome {
    let plane = Mesh::ground_plane(1.0, 0.0, 1);
    let a = 30f64.to_radians();
    let tilted = DVec3::new(a.sin(), 0.0, a.cos());
    let map = Image::from_fn(8, 8, |_, _| (tilted + DVec3::ONE) * 0.5);
    let g = rasterize_gbuffer(&[SurfaceInput { mesh: &plane, normal_map: Some(&map) }], 8, 8).unwrap();
    let bvh = Bvh::build(vec![plane.clone()]).unwrap();
    let tex = bake_transfer(&g, &bvh, &settings(SAMPLES)).unwrap();
    let mut worst: f64 = 0.0;
    for t in [0, 9, 27, 36, 63] {
        let sh = tex.texel_sh(t, 0);
        let mut best = (f64::MIN, DVec3::ZERO);
        for i in 0..180 {
            for j in 0..720 {
                let (th, ph) = ((i as f64 + 0.5).to_radians() * 0.5, (j as f64 + 0.5).to_radians() * 0.5);
                let d = DVec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
                let v = reconstruct(&sh, Direction::from_vec(d).unwrap());
                if v > best.0 {
                    best = (v, d);
                }
            }
        }
        worst = worst.max(best.1.dot(g.normal(t)).clamp(-1.0, 1.0).acos().to_degrees());
    }
    let flat = Image::from_fn(8, 8, |_, _| DVec3::new(0.5, 0.5, 1.0));
    let gf = rasterize_gbuffer(&[SurfaceInput { mesh: &plane, normal_map: Some(&flat) }], 8, 8).unwrap();
    let gp = rasterize_gbuffer(&[SurfaceInput::plain(&plane)], 8, 8).unwrap();
    let s = settings(256);
    let same = bake_transfer(&gf, &bvh, &s).unwrap() == bake_transfer(&gp, &bvh, &s).unwrap();
    check(
        worst < ARGMAX_DEGREES && same,
        format!("lobe argmax within {worst:.2} deg of the mapped normal; flat map bitwise equal to plain bake: {same}"),
    )
}

fn criterion_determinism(d: &Demo, t0: &[TransferTexture], reference: &Image) -> Outcome {
    let again = bake_sets(&d.scene, TEXTURE, SAMPLES);
    let bakes = again == t0;
    let renders = fragment(d, t0, Method::Tp) == fragment(d, t0, Method::Tp)
        && fragment(d, t0, Method::Tpfl) == fragment(d, t0, Method::Tpfl);
    let v = |seed| {
        let s = BakeSettings { seed, ..settings(256) };
        let vt = bake_vertex_transfer(d.scene.meshes(), d.scene.bvh(), &s).unwrap();
        render_vertex(&d.scene, &d.camera, &vt, &lighting(&d.light, Method::Tpfl)).unwrap()
    };
    let vertex = v(0) == v(0);
    let mc = mc_direct(&d.scene, &d.camera, 16, 5).unwrap() == mc_direct(&d.scene, &d.camera, 16, 5).unwrap();
    let reference_again = mc_direct(&d.scene, &d.camera, REFERENCE_SPP, 1).unwrap() == *reference;

    let b = box_interior(32, BAND).unwrap();
    let g = rasterize_gbuffer(&b.scene.surfaces(0), 32, 32).unwrap();
    let s = settings(256);
    let lit = lighting(&b.light, Method::Tpfl);
    let bounce = || {
        let t0 = vec![bake_transfer(&g, b.scene.bvh(), &s).unwrap()];
        let t1 = bake_one_bounce(&g, &b.scene, &t0, &lit, &s).unwrap();
        let mc = mc_one_bounce(&b.scene, &b.camera, 16, 3).unwrap();
        (t1, mc)
    };
    let bounces = bounce() == bounce();
    check(
        bakes && renders && vertex && mc && reference_again && bounces,
        format!(
            "texel bakes {bakes}, fragment renders {renders}, vertex bake+render {vertex}, references {}, one-bounce bake+reference {bounces}",
            mc && reference_again
        ),
    )
}

fn run(results: &mut Vec<bool>, id: usize, name: &str, f: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    let (tag, detail) = match &outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("{tag} [{id:>2}] {name}: {detail} [{secs:.1}s]");
    results.push(outcome.is_ok());
}

fn main() {
    let mut results = Vec::new();
    run(&mut results, 1, "triple product vs quadrature", criterion_product);

    let start = Instant::now();
    let demo = occluder_scene(1, IMAGE, BAND).unwrap();
    let t0 = bake_sets(&demo.scene, TEXTURE, SAMPLES);
    let reference = mc_direct(&demo.scene, &demo.camera, REFERENCE_SPP, 1).unwrap();

    run(&mut results, 2, "TP/TPFL equivalence", || criterion_tp_tpfl(&demo, &t0));
    run(&mut results, 3, "orthonormality and tensor symmetry", criterion_orthonormality);
    run(&mut results, 4, "unoccluded bake is a clamped cosine", criterion_clamped_cosine);
    run(&mut results, 5, "fragment vs vertex transfer", || {
        criterion_fragment_vs_vertex(&comparison(&demo, &t0, &reference, start))
    });
    let coarse = fragment(&demo, &t0, Method::Tpfl).image;
    run(&mut results, 6, "tessellation independence", || criterion_tessellation(&demo, &t0, &coarse));
    run(&mut results, 7, "one-bounce inter-reflection", criterion_interreflection);
    run(&mut results, 8, "memory report", criterion_memory);
    run(&mut results, 9, "per-shade cost", criterion_bench);
    run(&mut results, 10, "normal-mapped bake", criterion_normal_map);
    run(&mut results, 11, "determinism", || criterion_determinism(&demo, &t0, &reference));

    let passed = results.iter().filter(|r| **r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}

//! Small built-in scenes used by the tests, benchmarks and CLI demos.

use glam::DVec3;

use crate::envlight::{synthesize_bandlimited, SHLight};
use crate::error::Result;
use crate::geom::Mesh;
use crate::render::{Camera, Material};
use crate::scene::Scene;
use crate::sh::{project, Direction, QuadratureRule};

/// Resolution of environment maps synthesized for the built-in scenes.
pub const ENV_HEIGHT: usize = 128;

/// Sky with a soft sun: `ambient + ((1 + ω·d)/2)⁴·sun`. The lobe is a
/// degree-4 polynomial, so at band 5 or more the light is exactly
/// band-limited and non-negative everywhere.
pub fn sky_light(band: usize) -> Result<SHLight> {
    let d = Direction::normalize(DVec3::new(0.35, 0.2, 1.0)).expect("non-zero");
    let lobe = project(
        |w| ((1.0 + w.vec().dot(d.vec())) / 2.0).powi(4),
        band,
        QuadratureRule::Product { degree: 4 + 2 * band },
    )?;
    let ambient = project(|_| 1.0, band, QuadratureRule::Product { degree: 2 * band })?;
    let (sky, sun) = (DVec3::new(0.15, 0.18, 0.25), DVec3::new(1.2, 1.1, 0.95));
    let ch = |c: usize| {
        let mut v = ambient.scaled(sky[c]);
        v.add_scaled(&lobe, sun[c]);
        v
    };
    SHLight::new(ch(0), ch(1), ch(2))
}

/// A built-in scene with its camera and light.
pub struct Demo {
    pub scene: Scene,
    pub camera: Camera,
    pub light: SHLight,
}

/// Ground plane `[-1,1]²` at `z = 0` tessellated into `cells × cells`
/// quads, with a small quad floating above its centre. The plane and the
/// occluder are separate objects with their own texture sets.
pub fn occluder_scene(plane_cells: u32, image: usize, band: usize) -> Result<Demo> {
    let plane = Mesh::ground_plane(1.0, 0.0, plane_cells).with_ids(0, 0);
    let occluder = Mesh::grid(
        "occluder",
        DVec3::new(-0.3, -0.3, 0.35),
        DVec3::new(0.6, 0.0, 0.0),
        DVec3::new(0.0, 0.6, 0.0),
        1,
        1,
    )
    .with_ids(1, 1);
    let light = sky_light(band)?;
    let env = synthesize_bandlimited(&light, 2 * ENV_HEIGHT, ENV_HEIGHT)?.env;
    let materials = vec![Material::diffuse(DVec3::splat(0.8)), Material::diffuse(DVec3::new(0.7, 0.5, 0.4))];
    let scene = Scene::new(vec![plane, occluder], env, materials, band)?;
    let camera = Camera::new(DVec3::new(0.0, -2.2, 2.4), DVec3::new(0.0, 0.0, 0.0), DVec3::Z, 40.0, image, image)?;
    Ok(Demo { scene, camera, light })
}

/// Open-topped white box seen from above; all five inner faces share one
/// atlas texture set.
pub fn box_interior(image: usize, band: usize) -> Result<Demo> {
    let walls = Mesh::cuboid(
        "box",
        DVec3::new(-1.0, -1.0, 0.0),
        DVec3::new(1.0, 1.0, 1.2),
        4,
        true,
        [true, true, true, true, true, false],
    );
    let light = sky_light(band)?;
    let env = synthesize_bandlimited(&light, 2 * ENV_HEIGHT, ENV_HEIGHT)?.env;
    let scene = Scene::new(vec![walls], env, vec![Material::diffuse(DVec3::splat(0.8))], band)?;
    let camera = Camera::new(DVec3::new(0.3, -0.5, 3.4), DVec3::new(0.0, 0.0, 0.3), DVec3::Y, 45.0, image, image)?;
    Ok(Demo { scene, camera, light })
}

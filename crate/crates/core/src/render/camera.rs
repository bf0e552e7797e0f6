use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Ray;
use crate::sh::Direction;

/// Pinhole camera.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: DVec3,
    pub look_at: DVec3,
    pub up: DVec3,
    /// Vertical field of view in degrees.
    pub fov: f64,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    pub fn new(position: DVec3, look_at: DVec3, up: DVec3, fov: f64, width: usize, height: usize) -> Result<Self> {
        let cam = Camera { position, look_at, up, fov, width, height };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fov > 0.0 && self.fov < 180.0) {
            return Err(Error::InvalidInput(format!("field of view {} outside (0, 180)", self.fov)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidInput("camera image is empty".into()));
        }
        let fwd = (self.look_at - self.position).try_normalize();
        match fwd {
            Some(f) if f.cross(self.up).length_squared() > 1e-12 => Ok(()),
            _ => Err(Error::InvalidInput("camera up is parallel to the view direction".into())),
        }
    }

    /// Primary ray through the centre of pixel `(x, y)`, row 0 at the top.
    pub fn ray(&self, x: usize, y: usize) -> Ray {
        let fwd = (self.look_at - self.position).normalize();
        let right = fwd.cross(self.up).normalize();
        let up = right.cross(fwd);
        let half_h = (self.fov.to_radians() * 0.5).tan();
        let half_w = half_h * self.width as f64 / self.height as f64;
        let sx = (2.0 * (x as f64 + 0.5) / self.width as f64 - 1.0) * half_w;
        let sy = (1.0 - 2.0 * (y as f64 + 0.5) / self.height as f64) * half_h;
        let dir = Direction::new_unchecked((fwd + sx * right + sy * up).normalize());
        Ray::offset(self.position, dir, 0.0)
    }
}

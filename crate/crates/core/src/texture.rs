//! SH coefficient textures and the PRTT container.
//!
//! Layout on disk (all little-endian):
//!
//! ```text
//! "PRTT"  version:u32=1  width:u32  height:u32  band:u32  channels:u32
//! band²·channels planes of width·height f32, row-major, top-down
//! width·height validity bytes (0 or 1)
//! ```
//!
//! Plane `c·band² + i` holds coefficient `i` of channel `c`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use glam::DVec2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sh::{coeff_count, SHVector};

pub const PRTT_MAGIC: &[u8; 4] = b"PRTT";
pub const PRTT_VERSION: u32 = 1;

/// Texel grid of SH coefficient vectors with a validity mask.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferTexture {
    width: usize,
    height: usize,
    band: usize,
    channels: usize,
    planes: Vec<f32>,
    valid: Vec<bool>,
}

impl TransferTexture {
    pub fn new(width: usize, height: usize, band: usize, channels: usize) -> Self {
        TransferTexture {
            width,
            height,
            band,
            channels,
            planes: vec![0.0; width * height * coeff_count(band) * channels],
            valid: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn texel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn plane_count(&self) -> usize {
        coeff_count(self.band) * self.channels
    }

    /// Coefficient values per texel (`band² · channels`).
    pub fn stride(&self) -> usize {
        self.plane_count()
    }

    /// Bytes of coefficient payload, as kept in memory and on disk.
    pub fn payload_bytes(&self) -> usize {
        self.planes.len() * std::mem::size_of::<f32>()
    }

    pub fn plane(&self, p: usize) -> &[f32] {
        let n = self.texel_count();
        &self.planes[p * n..(p + 1) * n]
    }

    pub fn is_valid(&self, texel: usize) -> bool {
        self.valid[texel]
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Stores all `band²·channels` coefficients of one texel and marks it
    /// valid.
    pub fn set_texel(&mut self, texel: usize, coeffs: &[f64]) {
        debug_assert_eq!(coeffs.len(), self.stride());
        let n = self.texel_count();
        for (p, c) in coeffs.iter().enumerate() {
            self.planes[p * n + texel] = *c as f32;
        }
        self.valid[texel] = true;
    }

    /// Reads all coefficients of one texel into `out`.
    pub fn texel_into(&self, texel: usize, out: &mut [f64]) {
        let n = self.texel_count();
        for (p, o) in out.iter_mut().enumerate().take(self.stride()) {
            *o = self.planes[p * n + texel] as f64;
        }
    }

    /// One channel of one texel.
    pub fn texel_sh(&self, texel: usize, channel: usize) -> SHVector {
        let k = coeff_count(self.band);
        let n = self.texel_count();
        let c = (0..k).map(|i| self.planes[(channel * k + i) * n + texel] as f64).collect();
        SHVector::from_coeffs(self.band, c).expect("finite texture")
    }

    pub(crate) fn copy_texel(&mut self, from: usize, to: usize) {
        let n = self.texel_count();
        for p in 0..self.plane_count() {
            self.planes[p * n + to] = self.planes[p * n + from];
        }
        self.valid[to] = self.valid[from];
    }

    /// Texel containing the UV point, with `v = 0` at the bottom row.
    pub fn texel_at(&self, uv: DVec2) -> usize {
        texel_at(self.width, self.height, uv)
    }

    /// Bilinear fetch over the valid taps at `uv` (clamp-to-edge), with the
    /// weights renormalized over valid taps. Returns `false` when none of the
    /// four taps is valid.
    pub fn sample_into(&self, uv: DVec2, out: &mut [f64]) -> bool {
        let taps = bilinear_taps(self.width, self.height, uv);
        let n = self.texel_count();
        let stride = self.stride();
        out[..stride].fill(0.0);
        let mut total = 0.0;
        for (texel, w) in taps {
            if w == 0.0 || !self.valid[texel] {
                continue;
            }
            total += w;
            for (p, o) in out.iter_mut().enumerate().take(stride) {
                *o += w * self.planes[p * n + texel] as f64;
            }
        }
        if total == 0.0 {
            return false;
        }
        if total != 1.0 {
            for o in &mut out[..stride] {
                *o /= total;
            }
        }
        true
    }

    /// Checks the invariants: invalid texels are zero, values are finite.
    pub fn validate(&self) -> Result<()> {
        let n = self.texel_count();
        for p in 0..self.plane_count() {
            for t in 0..n {
                let v = self.planes[p * n + t];
                if !v.is_finite() {
                    return Err(Error::format("PRTT", format!("non-finite value in plane {p}, texel {t}")));
                }
                if !self.valid[t] && v != 0.0 {
                    return Err(Error::format("PRTT", format!("invalid texel {t} carries data")));
                }
            }
        }
        Ok(())
    }

    pub fn encode(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(PRTT_MAGIC)?;
        for v in [PRTT_VERSION, self.width as u32, self.height as u32, self.band as u32, self.channels as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.planes {
            w.write_all(&v.to_le_bytes())?;
        }
        let mask: Vec<u8> = self.valid.iter().map(|&v| v as u8).collect();
        w.write_all(&mask)
    }

    pub fn decode(r: &mut impl Read) -> Result<Self> {
        let bad = |msg: String| Error::format("PRTT", msg);
        let mut head = [0u8; 24];
        r.read_exact(&mut head).map_err(|_| bad("truncated header".into()))?;
        if &head[..4] != PRTT_MAGIC {
            return Err(bad("bad magic".into()));
        }
        let field = |i: usize| u32::from_le_bytes(head[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
        let (version, width, height, band, channels) = (field(0), field(1), field(2), field(3), field(4));
        if version != PRTT_VERSION as usize {
            return Err(bad(format!("unsupported version {version}")));
        }
        if width == 0 || height == 0 || band == 0 || channels == 0 || band > crate::sh::MAX_BAND {
            return Err(bad(format!("bad dimensions {width}x{height}, band {band}, channels {channels}")));
        }
        let mut tex = TransferTexture::new(width, height, band, channels);
        let mut buf = vec![0u8; tex.planes.len() * 4];
        r.read_exact(&mut buf).map_err(|_| bad("truncated payload".into()))?;
        for (v, b) in tex.planes.iter_mut().zip(buf.chunks_exact(4)) {
            *v = f32::from_le_bytes(b.try_into().unwrap());
        }
        let mut mask = vec![0u8; width * height];
        r.read_exact(&mut mask).map_err(|_| bad("truncated validity mask".into()))?;
        for (v, m) in tex.valid.iter_mut().zip(mask) {
            *v = match m {
                0 => false,
                1 => true,
                other => return Err(bad(format!("validity byte {other}"))),
            };
        }
        tex.validate()?;
        Ok(tex)
    }

    /// Writes through a temporary file so a failed write leaves nothing at
    /// `path`.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        write_atomically(path, |w| self.encode(w))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&mut BufReader::new(file))
    }
}

pub(crate) fn write_atomically(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        body(&mut w)?;
        w.flush()?;
        drop(w);
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

/// Texel index containing `uv` in a `width × height` grid (`v` up).
pub fn texel_at(width: usize, height: usize, uv: DVec2) -> usize {
    let x = ((uv.x * width as f64).floor() as i64).clamp(0, width as i64 - 1) as usize;
    let y = (((1.0 - uv.y) * height as f64).floor() as i64).clamp(0, height as i64 - 1) as usize;
    y * width + x
}

/// UV coordinate of the centre of texel `(x, y)`.
pub fn texel_center_uv(width: usize, height: usize, x: usize, y: usize) -> DVec2 {
    DVec2::new((x as f64 + 0.5) / width as f64, 1.0 - (y as f64 + 0.5) / height as f64)
}

/// The four clamp-to-edge bilinear taps and weights at `uv`.
pub fn bilinear_taps(width: usize, height: usize, uv: DVec2) -> [(usize, f64); 4] {
    let fx = uv.x * width as f64 - 0.5;
    let fy = (1.0 - uv.y) * height as f64 - 0.5;
    let x0 = fx.floor();
    let y0 = fy.floor();
    let tx = fx - x0;
    let ty = fy - y0;
    let cx = |x: f64| (x as i64).clamp(0, width as i64 - 1) as usize;
    let cy = |y: f64| (y as i64).clamp(0, height as i64 - 1) as usize;
    let (xa, xb, ya, yb) = (cx(x0), cx(x0 + 1.0), cy(y0), cy(y0 + 1.0));
    [
        (ya * width + xa, (1.0 - tx) * (1.0 - ty)),
        (ya * width + xb, tx * (1.0 - ty)),
        (yb * width + xa, (1.0 - tx) * ty),
        (yb * width + xb, tx * ty),
    ]
}

/// JSON metadata stored next to a PRTT file (same basename, `.json`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    /// Hash of the light baked into the texture; `None` for pure transfer.
    pub light_hash: Option<String>,
    pub brdf_description: String,
    pub bounce_index: u32,
}

impl Sidecar {
    pub fn path_for(texture: impl AsRef<Path>) -> PathBuf {
        texture.as_ref().with_extension("json")
    }

    pub fn write(&self, texture: impl AsRef<Path>) -> Result<()> {
        let path = Self::path_for(texture);
        let json = serde_json::to_vec_pretty(self)?;
        write_atomically(&path, |w| w.write_all(&json))
    }

    pub fn read(texture: impl AsRef<Path>) -> Result<Self> {
        let path = Self::path_for(texture);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

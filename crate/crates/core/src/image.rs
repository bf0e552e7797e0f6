//! Linear RGB float images with PFM and 8-bit PPM I/O.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use glam::DVec3;

use crate::error::{Error, Result};

/// Row-major, top-down linear RGB image.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<DVec3>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Image { width, height, pixels: vec![DVec3::ZERO; width * height] }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<DVec3>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{}x{} image needs {} pixels, got {}",
                width,
                height,
                width * height,
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("image contains non-finite values".into()));
        }
        Ok(Image { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> DVec3) -> Self {
        let pixels = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Image { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[DVec3] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [DVec3] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> DVec3 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: DVec3) {
        self.pixels[y * self.width + x] = v;
    }

    /// Bilinear lookup at a UV coordinate (`v = 0` is the bottom row),
    /// clamp-to-edge.
    pub fn sample_uv(&self, uv: glam::DVec2) -> DVec3 {
        crate::texture::bilinear_taps(self.width, self.height, uv)
            .iter()
            .map(|&(texel, w)| w * self.pixels[texel])
            .sum()
    }

    pub fn map(&self, f: impl Fn(DVec3) -> DVec3) -> Image {
        Image { width: self.width, height: self.height, pixels: self.pixels.iter().map(|&p| f(p)).collect() }
    }

    pub fn read_pfm(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::decode_pfm(&mut BufReader::new(file))
    }

    /// Decodes a color ("PF") portable float map; grayscale is rejected.
    pub fn decode_pfm(reader: &mut impl BufRead) -> Result<Self> {
        let bad = |msg: &str| Error::format("PFM", msg);
        let mut tokens = Vec::new();
        // header: magic, width, height, scale; whitespace separated, then a
        // single whitespace byte before the payload
        while tokens.len() < 4 {
            let mut tok = Vec::new();
            loop {
                let mut b = [0u8];
                if reader.read(&mut b).map_err(|e| bad(&e.to_string()))? == 0 {
                    return Err(bad("truncated header"));
                }
                if b[0].is_ascii_whitespace() {
                    if tok.is_empty() {
                        continue;
                    }
                    break;
                }
                tok.push(b[0]);
                if tok.len() > 64 {
                    return Err(bad("header token too long"));
                }
            }
            tokens.push(String::from_utf8(tok).map_err(|_| bad("non-ASCII header"))?);
        }
        match tokens[0].as_str() {
            "PF" => {}
            "Pf" => return Err(bad("color PFM required")),
            other => return Err(bad(&format!("unknown magic {other:?}"))),
        }
        let width: usize = tokens[1].parse().map_err(|_| bad("bad width"))?;
        let height: usize = tokens[2].parse().map_err(|_| bad("bad height"))?;
        let scale: f64 = tokens[3].parse().map_err(|_| bad("bad scale"))?;
        if width == 0 || height == 0 || scale == 0.0 || !scale.is_finite() {
            return Err(bad("invalid dimensions or scale"));
        }
        let little = scale < 0.0;
        let mut payload = vec![0u8; width * height * 12];
        reader.read_exact(&mut payload).map_err(|_| bad("truncated payload"))?;

        let mut pixels = vec![DVec3::ZERO; width * height];
        for (i, chunk) in payload.chunks_exact(12).enumerate() {
            let f = |o: usize| {
                let b = [chunk[o], chunk[o + 1], chunk[o + 2], chunk[o + 3]];
                if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) }
            };
            // stored bottom-to-top
            let (x, row) = (i % width, i / width);
            let y = height - 1 - row;
            pixels[y * width + x] = DVec3::new(f(0) as f64, f(4) as f64, f(8) as f64);
        }
        Image::from_pixels(width, height, pixels).map_err(|e| bad(&e.to_string()))
    }

    /// Little-endian PFM with values rounded to `f32`.
    pub fn write_pfm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.encode_pfm(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn encode_pfm(&self, w: &mut impl Write) -> std::io::Result<()> {
        write!(w, "PF\n{} {}\n-1.0\n", self.width, self.height)?;
        for y in (0..self.height).rev() {
            for x in 0..self.width {
                let p = self.get(x, y);
                for c in [p.x, p.y, p.z] {
                    w.write_all(&(c as f32).to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    /// 8-bit binary PPM after clamping to `[0, 1]` and gamma 2.2.
    pub fn write_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        write!(w, "P6\n{} {}\n255\n", self.width, self.height).map_err(io)?;
        for p in &self.pixels {
            let bytes = [p.x, p.y, p.z].map(|c| (c.clamp(0.0, 1.0).powf(1.0 / 2.2) * 255.0 + 0.5) as u8);
            w.write_all(&bytes).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Rec. 709 luminance of a linear RGB value.
#[inline]
pub fn luminance(c: DVec3) -> f64 {
    0.2126 * c.x + 0.7152 * c.y + 0.0722 * c.z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Image {
        Image::from_fn(3, 2, |x, y| DVec3::new(x as f64 * 0.25, y as f64 + 0.125, -1.5))
    }

    #[test]
    fn pfm_round_trip() {
        let img = sample();
        let mut buf = Vec::new();
        img.encode_pfm(&mut buf).unwrap();
        let back = Image::decode_pfm(&mut &buf[..]).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn big_endian_accepted() {
        let mut buf = b"PF\n2 1\n1.0\n".to_vec();
        for v in [1.0f32, 0.0, 0.0, 0.0, 1.0, 0.0] {
            buf.extend(v.to_be_bytes());
        }
        let img = Image::decode_pfm(&mut &buf[..]).unwrap();
        assert_eq!(img.get(0, 0), DVec3::X);
        assert_eq!(img.get(1, 0), DVec3::Y);
    }

    #[test]
    fn grayscale_and_truncation_rejected() {
        let gray = b"Pf\n1 1\n-1.0\n\0\0\0\0".to_vec();
        let e = Image::decode_pfm(&mut &gray[..]).unwrap_err().to_string();
        assert!(e.contains("color PFM required"), "{e}");
        let short = b"PF\n2 2\n-1.0\n\0\0\0\0".to_vec();
        assert!(Image::decode_pfm(&mut &short[..]).unwrap_err().to_string().contains("truncated"));
        assert!(Image::decode_pfm(&mut &b"PF\n2"[..]).is_err());
    }
}

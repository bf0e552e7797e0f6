//! Edge padding: grows the valid region of a texture outward so bilinear
//! fetches near island borders never read unbaked texels.

use crate::texture::TransferTexture;

/// Textures that can be padded texel-by-texel.
pub trait Dilate {
    fn dims(&self) -> (usize, usize);
    fn is_valid(&self, texel: usize) -> bool;
    /// Copies every payload of `from` to `to`, including validity.
    fn copy_texel(&mut self, from: usize, to: usize);
}

impl Dilate for TransferTexture {
    fn dims(&self) -> (usize, usize) {
        (self.width(), self.height())
    }

    fn is_valid(&self, texel: usize) -> bool {
        TransferTexture::is_valid(self, texel)
    }

    fn copy_texel(&mut self, from: usize, to: usize) {
        TransferTexture::copy_texel(self, from, to)
    }
}

// Orthogonal neighbours first (nearest), then diagonals; each group is in
// scan order so ties resolve to the smallest row, then column.
const NEIGHBOURS: [(i64, i64); 8] = [(0, -1), (-1, 0), (1, 0), (0, 1), (-1, -1), (1, -1), (-1, 1), (1, 1)];

/// Runs `radius` passes of 8-neighbourhood dilation. Each pass only reads
/// texels that were valid before it started. Valid texels are never touched.
pub fn dilate<T: Dilate + ?Sized>(tex: &mut T, radius: usize) {
    let (w, h) = tex.dims();
    for _ in 0..radius {
        let snapshot: Vec<bool> = (0..w * h).map(|t| tex.is_valid(t)).collect();
        let mut grew = false;
        for y in 0..h {
            for x in 0..w {
                let t = y * w + x;
                if snapshot[t] {
                    continue;
                }
                let source = NEIGHBOURS.iter().find_map(|&(dx, dy)| {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        return None;
                    }
                    let n = ny as usize * w + nx as usize;
                    snapshot[n].then_some(n)
                });
                if let Some(s) = source {
                    tex.copy_texel(s, t);
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(w: usize, h: usize, at: usize) -> TransferTexture {
        let mut t = TransferTexture::new(w, h, 1, 1);
        t.set_texel(at, &[7.0]);
        t
    }

    fn chebyshev(a: usize, b: usize, w: usize) -> usize {
        let (ax, ay, bx, by) = (a % w, a / w, b % w, b / w);
        ax.abs_diff(bx).max(ay.abs_diff(by))
    }

    #[test]
    fn single_texel_radius_one() {
        let mut t = single(5, 5, 12);
        dilate(&mut t, 1);
        assert_eq!(t.valid_count(), 9);
        for i in 0..25 {
            let want = chebyshev(i, 12, 5) <= 1;
            assert_eq!(t.is_valid(i), want, "{i}");
            if want {
                assert_eq!(t.plane(0)[i], 7.0);
            } else {
                assert_eq!(t.plane(0)[i], 0.0);
            }
        }
    }

    #[test]
    fn radius_zero_is_identity() {
        let mut t = single(4, 4, 5);
        let before = t.clone();
        dilate(&mut t, 0);
        assert_eq!(t, before);
    }

    #[test]
    fn all_valid_unchanged() {
        let mut t = TransferTexture::new(4, 4, 1, 1);
        for i in 0..16 {
            t.set_texel(i, &[i as f64]);
        }
        let before = t.clone();
        dilate(&mut t, 3);
        assert_eq!(t, before);
    }

    #[test]
    fn ties_prefer_orthogonal_then_scan_order() {
        // valid texels at (1,0) and (0,1); (1,1) sees both orthogonally and
        // must take the one above it
        let mut t = TransferTexture::new(3, 3, 1, 1);
        t.set_texel(1, &[1.0]);
        t.set_texel(3, &[2.0]);
        dilate(&mut t, 1);
        assert_eq!(t.plane(0)[4], 1.0);
        // (0,0) also sees both orthogonally: above is out of range, left is
        // out of range, so right (1,0) wins over below (0,1)
        assert_eq!(t.plane(0)[0], 1.0);
    }

    #[test]
    fn closure_radius_three() {
        let (w, h) = (16, 12);
        let seeds = [3usize, 70, 150];
        let mut t = TransferTexture::new(w, h, 1, 1);
        for &s in &seeds {
            t.set_texel(s, &[s as f64]);
        }
        dilate(&mut t, 3);
        for i in 0..w * h {
            let near = seeds.iter().map(|&s| chebyshev(i, s, w)).min().unwrap();
            assert_eq!(t.is_valid(i), near <= 3, "texel {i}");
        }
    }
}

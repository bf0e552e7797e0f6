//! Tripling coefficients `τ_ijk = ∫ y_i y_j y_k dω` and the fixed-light
//! product matrix built from them.

use super::{basis_into, check_band, coeff_count, SHVector, SphereRule};
use crate::error::{Error, Result};

/// Entries with `|τ|` below this are dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TensorEntry {
    pub i: u16,
    pub j: u16,
    pub k: u16,
    pub value: f64,
}

/// Sparse, symmetric-complete tripling tensor.
///
/// `entries` holds every stored permutation sorted lexicographically by
/// `(i, j, k)`. Contraction runs over a per-output compressed list of
/// unordered pairs `i <= j`, which makes [`TriplingTensor::triple_product`]
/// exactly symmetric in its two arguments.
#[derive(Clone, Debug)]
pub struct TriplingTensor {
    band: usize,
    entries: Vec<TensorEntry>,
    /// CSR offsets into `pairs`, one row per output index `k`.
    row_start: Vec<usize>,
    pairs: Vec<(u16, u16, f64)>,
}

impl TriplingTensor {
    /// Builds the tensor with the product rule exact for degree `3(band-1)`.
    pub fn compute(band: usize) -> Result<Self> {
        check_band(band)?;
        let rule = SphereRule::for_degree(3 * (band - 1));
        Self::compute_with_rule(band, &rule)
    }

    /// Builds the tensor with a caller-supplied rule, which must integrate
    /// triple products of band-`band` functions exactly.
    pub fn compute_with_rule(band: usize, rule: &SphereRule) -> Result<Self> {
        check_band(band)?;
        let need = 3 * (band - 1);
        if rule.degree() < need {
            return Err(Error::InsufficientQuadrature { have: rule.degree(), need });
        }
        let k = coeff_count(band);

        // basis values at every node, node-major
        let n = rule.len();
        let mut basis = vec![0.0; n * k];
        for (row, p) in basis.chunks_exact_mut(k).zip(rule.points()) {
            basis_into(*p, band, row);
        }

        let mut unique = Vec::new();
        for i in 0..k {
            for j in i..k {
                for kk in j..k {
                    let mut v = 0.0;
                    for (row, w) in basis.chunks_exact(k).zip(rule.weights()) {
                        v += w * row[i] * row[j] * row[kk];
                    }
                    if v.abs() >= PRUNE_THRESHOLD {
                        unique.push((i, j, kk, v));
                    }
                }
            }
        }
        Ok(Self::from_unique(band, &unique))
    }

    fn from_unique(band: usize, unique: &[(usize, usize, usize, f64)]) -> Self {
        let k = coeff_count(band);
        let mut entries = Vec::with_capacity(unique.len() * 6);
        for &(i, j, kk, value) in unique {
            let mut perms = [(i, j, kk), (i, kk, j), (j, i, kk), (j, kk, i), (kk, i, j), (kk, j, i)];
            perms.sort_unstable();
            let mut last = None;
            for p in perms {
                if last == Some(p) {
                    continue;
                }
                last = Some(p);
                entries.push(TensorEntry { i: p.0 as u16, j: p.1 as u16, k: p.2 as u16, value });
            }
        }
        entries.sort_unstable_by_key(|e| (e.i, e.j, e.k));

        let mut rows: Vec<Vec<(u16, u16, f64)>> = vec![Vec::new(); k];
        for e in &entries {
            if e.i <= e.j {
                rows[e.k as usize].push((e.i, e.j, e.value));
            }
        }
        let mut row_start = Vec::with_capacity(k + 1);
        let mut pairs = Vec::new();
        row_start.push(0);
        for row in rows {
            pairs.extend(row);
            row_start.push(pairs.len());
        }
        TriplingTensor { band, entries, row_start, pairs }
    }

    pub fn band(&self) -> usize {
        self.band
    }

    /// Every stored entry, all permutations included, sorted by `(i, j, k)`.
    pub fn entries(&self) -> &[TensorEntry] {
        &self.entries
    }

    /// Number of stored (permutation-complete) entries.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// `τ_ijk`, zero if pruned.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let key = (i as u16, j as u16, k as u16);
        self.entries
            .binary_search_by_key(&key, |e| (e.i, e.j, e.k))
            .map(|idx| self.entries[idx].value)
            .unwrap_or(0.0)
    }

    /// `L_k = Σ_ij τ_ijk t_i l_j`.
    pub fn triple_product(&self, t: &SHVector, light: &SHVector) -> Result<SHVector> {
        t.check_same_band(light)?;
        if t.band() != self.band {
            return Err(Error::BandMismatch(t.band(), self.band));
        }
        let mut out = SHVector::zeros(self.band);
        self.triple_product_into(t.coeffs(), light.coeffs(), out.coeffs_mut());
        Ok(out)
    }

    /// Unchecked contraction into a caller-owned buffer.
    #[inline]
    pub fn triple_product_into(&self, t: &[f64], light: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate().take(coeff_count(self.band)) {
            let mut acc = 0.0;
            for &(i, j, v) in &self.pairs[self.row_start[k]..self.row_start[k + 1]] {
                let (i, j) = (i as usize, j as usize);
                acc += if i == j { v * (t[i] * light[i]) } else { v * (t[i] * light[j] + t[j] * light[i]) };
            }
            *o = acc;
        }
    }

    /// Multiply-adds performed by one [`TriplingTensor::triple_product`].
    pub fn contraction_cost(&self) -> usize {
        self.pairs.len()
    }
}

/// Fixed-light product matrix `M_ik = Σ_j τ_ijk L_j`, row-major `k × k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductMatrix {
    band: usize,
    data: Vec<f64>,
}

impl ProductMatrix {
    pub fn new(light: &SHVector, tau: &TriplingTensor) -> Result<Self> {
        if light.band() != tau.band() {
            return Err(Error::BandMismatch(light.band(), tau.band()));
        }
        let k = coeff_count(tau.band());
        let l = light.coeffs();
        let mut data = vec![0.0; k * k];
        for e in tau.entries() {
            data[e.i as usize * k + e.k as usize] += e.value * l[e.j as usize];
        }
        Ok(ProductMatrix { band: tau.band(), data })
    }

    pub fn identity(band: usize) -> Self {
        let k = coeff_count(band);
        let mut data = vec![0.0; k * k];
        for i in 0..k {
            data[i * k + i] = 1.0;
        }
        ProductMatrix { band, data }
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn dim(&self) -> usize {
        coeff_count(self.band)
    }

    /// Entry `(i, k)`.
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.dim() + k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `out_k = Σ_i M_ik t_i`.
    pub fn apply(&self, t: &SHVector) -> Result<SHVector> {
        if t.band() != self.band {
            return Err(Error::BandMismatch(t.band(), self.band));
        }
        let mut out = SHVector::zeros(self.band);
        self.apply_into(t.coeffs(), out.coeffs_mut());
        Ok(out)
    }

    /// Unchecked `k²` multiply-add application into a caller-owned buffer.
    #[inline]
    pub fn apply_into(&self, t: &[f64], out: &mut [f64]) {
        // Fixed sizes let the compiler unroll and keep the accumulators in
        // registers, which dominates at small k.
        match self.band {
            1 => apply_fixed::<1>(&self.data, t, out),
            2 => apply_fixed::<4>(&self.data, t, out),
            3 => apply_fixed::<9>(&self.data, t, out),
            4 => apply_fixed::<16>(&self.data, t, out),
            5 => apply_fixed::<25>(&self.data, t, out),
            6 => apply_fixed::<36>(&self.data, t, out),
            _ => apply_dyn(&self.data, self.dim(), t, out),
        }
    }
}

// Plain indexing over known lengths: the bounds checks fold away and the
// loops vectorize in every build profile. Slice helpers such as
// `copy_from_slice` carry extra checks in debug-assertion builds that
// defeat this.
#[inline(always)]
#[allow(clippy::needless_range_loop, clippy::manual_memcpy)]
fn apply_fixed<const K: usize>(m: &[f64], t: &[f64], out: &mut [f64]) {
    let (m, t, out) = (&m[..K * K], &t[..K], &mut out[..K]);
    let mut acc = [0.0; K];
    for i in 0..K {
        let ti = t[i];
        for j in 0..K {
            acc[j] += m[i * K + j] * ti;
        }
    }
    for j in 0..K {
        out[j] = acc[j];
    }
}

fn apply_dyn(m: &[f64], k: usize, t: &[f64], out: &mut [f64]) {
    out[..k].fill(0.0);
    for (row, &ti) in m.chunks_exact(k).zip(t) {
        for (o, m) in out.iter_mut().zip(row) {
            *o += m * ti;
        }
    }
}

/// Free-function form of [`TriplingTensor::compute`].
pub fn compute_tripling_tensor(band: usize) -> Result<TriplingTensor> {
    TriplingTensor::compute(band)
}

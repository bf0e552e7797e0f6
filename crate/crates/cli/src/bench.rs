//! Per-shade cost of the two triple-product methods.

use std::hint::black_box;
use std::time::Instant;

use anyhow::{ensure, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

use prtt::sampling::{substream, Domain};
use prtt::sh::{coeff_count, ProductMatrix, SHVector, TriplingTensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub band: usize,
    pub coefficients: usize,
    /// Nanoseconds per single-channel product, net of the timing
    /// loop's own cost.
    pub tp_ns: f64,
    pub tpfl_ns: f64,
    /// `tp_ns / tpfl_ns`.
    pub ratio: f64,
    pub tensor_nnz: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub iterations: usize,
    /// Cost of one iteration of the timing loop with a trivial body,
    /// subtracted from every timing.
    pub overhead_ns: f64,
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of `ln tpfl_ns` against `ln k`.
    pub tpfl_slope: f64,
}

impl BenchReport {
    pub fn to_table(&self) -> String {
        let mut s = format!("{:>4} {:>4} {:>8} {:>12} {:>12} {:>8}\n", "band", "k", "nnz", "TP ns", "TPFL ns", "TP/TPFL");
        for r in &self.rows {
            s += &format!(
                "{:>4} {:>4} {:>8} {:>12.2} {:>12.2} {:>8.2}\n",
                r.band, r.coefficients, r.tensor_nnz, r.tp_ns, r.tpfl_ns, r.ratio
            );
        }
        s += &format!("loop overhead subtracted: {:.2} ns\n", self.overhead_ns);
        s += &format!("TPFL log-log slope vs k: {:.3}\n", self.tpfl_slope);
        s
    }
}

/// Distinct random inputs cycled through so timings are not a single
/// cached vector.
const POOL: usize = 64;
/// Timing repeats; the fastest is kept.
const REPEATS: usize = 7;
/// Independent products per loop iteration, spreading the loop's own cost.
const BATCH: usize = 8;

/// Nanoseconds per product, where `f(i, b)` performs product `b` of
/// iteration `i` into output slot `b`.
fn time_per_call(iterations: usize, outs: &mut [Vec<f64>], mut f: impl FnMut(usize, &mut [f64])) -> f64 {
    (0..REPEATS)
        .map(|_| {
            let start = Instant::now();
            for i in 0..iterations {
                for (b, out) in outs.iter_mut().enumerate() {
                    f((i * BATCH + b) % POOL, out);
                }
                black_box(&mut *outs);
            }
            start.elapsed().as_nanos() as f64 / (iterations * BATCH) as f64
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn run_bench(bands: std::ops::RangeInclusive<usize>, iterations: usize, seed: u64) -> Result<BenchReport> {
    ensure!(*bands.start() >= 2 && *bands.end() <= 6 && !bands.is_empty(), "bench bands must lie in [2, 6]");
    ensure!(iterations > 0, "iterations must be positive");
    let overhead_ns = loop_overhead(iterations, seed);
    let mut rows = Vec::new();
    for band in bands {
        let k = coeff_count(band);
        let mut rng = substream(seed, Domain::Bench, band as u64);
        let tau = TriplingTensor::compute(band)?;
        let light = random(&mut rng, k);
        let inputs: Vec<Vec<f64>> = (0..POOL).map(|_| random(&mut rng, k)).collect();
        let m = ProductMatrix::new(&SHVector::from_coeffs(band, light.clone())?, &tau)?;
        let mut outs = vec![vec![0.0; k]; BATCH];
        let tp_ns = time_per_call(iterations, &mut outs, |i, out| {
            tau.triple_product_into(black_box(&inputs[i]), black_box(&light), out)
        });
        let tpfl_ns = time_per_call(iterations, &mut outs, |i, out| m.apply_into(black_box(&inputs[i]), out));
        let (tp_ns, tpfl_ns) = (net(tp_ns, overhead_ns), net(tpfl_ns, overhead_ns));
        rows.push(BenchRow { band, coefficients: k, tp_ns, tpfl_ns, ratio: tp_ns / tpfl_ns, tensor_nnz: tau.nnz() });
    }
    let tpfl_slope = slope(rows.iter().map(|r| ((r.coefficients as f64).ln(), r.tpfl_ns.ln())));
    Ok(BenchReport { iterations, overhead_ns, rows, tpfl_slope })
}

/// Same loop, pool indexing and sinks as the real timings, with each
/// product replaced by a single copy.
fn loop_overhead(iterations: usize, seed: u64) -> f64 {
    let mut rng = substream(seed, Domain::Bench, 0);
    let inputs: Vec<Vec<f64>> = (0..POOL).map(|_| random(&mut rng, 4)).collect();
    let mut outs = vec![vec![0.0; 4]; BATCH];
    time_per_call(iterations, &mut outs, |i, out| out[0] = black_box(&inputs[i])[0])
}

/// Overhead-corrected time, kept positive so the log fit stays defined.
fn net(raw: f64, overhead: f64) -> f64 {
    (raw - overhead).max(raw * 0.05)
}

fn random(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn slope(points: impl Iterator<Item = (f64, f64)>) -> f64 {
    let pts: Vec<(f64, f64)> = points.collect();
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

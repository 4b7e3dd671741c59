//! Order-fixed parallel reduction.
//!
//! The index range is cut into chunks of [`CHUNK_SIZE`]. Each chunk is summed
//! sequentially, chunks may run on any worker, and the partials are added in
//! chunk order. The floating-point reduction tree therefore depends only on
//! the range, never on the thread count.

use std::ops::Range;

use num_complex::Complex64;
use rayon::prelude::*;

pub const CHUNK_SIZE: u64 = 65_536;

/// Sum `body` over `0..total`, returning the total and the summed counts.
pub fn deterministic_sum<F>(total: u64, body: F) -> (Complex64, u64)
where
    F: Fn(Range<u64>) -> (Complex64, u64) + Sync,
{
    let chunks = total.div_ceil(CHUNK_SIZE);
    let partials: Vec<(Complex64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| body(c * CHUNK_SIZE..((c + 1) * CHUNK_SIZE).min(total)))
        .collect();
    partials.into_iter().fold((Complex64::new(0.0, 0.0), 0), |(s, n), (v, k)| (s + v, n + k))
}

/// Same contract for real-valued sums.
pub fn deterministic_sum_f64<F>(total: u64, body: F) -> f64
where
    F: Fn(Range<u64>) -> f64 + Sync,
{
    let chunks = total.div_ceil(CHUNK_SIZE);
    let partials: Vec<f64> =
        (0..chunks).into_par_iter().map(|c| body(c * CHUNK_SIZE..((c + 1) * CHUNK_SIZE).min(total))).collect();
    partials.into_iter().fold(0.0, |a, b| a + b)
}

/// Odometer over `(Z/q)^n` in lexicographic order, first coordinate most significant.
#[derive(Clone, Debug)]
pub struct PointIter {
    q: u64,
    point: Vec<u64>,
    remaining: u64,
    started: bool,
}

impl PointIter {
    pub fn new(q: u64, n: usize, range: Range<u64>) -> Self {
        let mut point = vec![0; n];
        let mut idx = range.start;
        for slot in point.iter_mut().rev() {
            *slot = idx % q;
            idx /= q;
        }
        Self { q, point, remaining: range.end.saturating_sub(range.start), started: false }
    }

    /// Advance and return the next point, or `None` when the range is done.
    #[inline]
    pub fn next_point(&mut self) -> Option<&[u64]> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        if self.started {
            for slot in self.point.iter_mut().rev() {
                *slot += 1;
                if *slot < self.q {
                    break;
                }
                *slot = 0;
            }
        }
        self.started = true;
        Some(&self.point)
    }
}

/// Index of `x` in lexicographic order.
pub fn point_index(x: &[u64], q: u64) -> u64 {
    x.iter().fold(0, |acc, &v| acc * q + v)
}

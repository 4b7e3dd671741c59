//! `S(L)` for every `L` at once.
//!
//! The map `L -> sum_x a(x) e(L.x / q)` is a multidimensional DFT of the
//! array `a(x) = chi(f(x))`, computed axis by axis with `rustfft`. Each
//! one-dimensional line transform is independent of scheduling, so the
//! output does not depend on the worker count.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::reduce::{deterministic_sum_f64, PointIter, CHUNK_SIZE};
use crate::characters::{CharacterTables, MultChar};
use crate::error::{Error, Result};
use crate::multipoly::MultiPoly;
use crate::residue::ResidueRing;

const NO_LOG: u32 = u32::MAX;

/// `log_g f(x)` for every `x` in `(Z/p^m)^n`, shared across characters.
#[derive(Debug, Clone)]
pub struct DlogGrid {
    ring: ResidueRing,
    nvars: usize,
    logs: Vec<u32>,
    units: u64,
}

impl DlogGrid {
    pub fn new(f: &MultiPoly, ring: ResidueRing, budget: u64) -> Result<Self> {
        let q = ring.modulus();
        let n = f.nvars();
        let total = (q as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if total > u128::from(budget) {
            return Err(Error::BudgetExceeded { needed: total, budget });
        }
        let total = total as u64;
        let tables = CharacterTables::for_ring(ring);
        let dlog = tables.dlog_table();
        let fc = f.reduce(ring).compile();
        let chunks: Vec<Vec<u32>> = (0..total.div_ceil(CHUNK_SIZE))
            .into_par_iter()
            .map(|c| {
                let range = c * CHUNK_SIZE..((c + 1) * CHUNK_SIZE).min(total);
                let mut out = Vec::with_capacity((range.end - range.start) as usize);
                let mut it = PointIter::new(q, n, range);
                while let Some(x) = it.next_point() {
                    out.push(dlog[fc.eval(x) as usize]);
                }
                out
            })
            .collect();
        let logs: Vec<u32> = chunks.concat();
        let units = logs.iter().filter(|&&v| v != NO_LOG).count() as u64;
        Ok(Self { ring, nvars: n, logs, units })
    }

    pub fn ring(&self) -> ResidueRing {
        self.ring
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Number of points where `f` is a unit.
    pub fn unit_count(&self) -> u64 {
        self.units
    }

    pub fn len(&self) -> usize {
        self.logs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logs.is_empty()
    }

    /// `S_chi(L)` under `psi_t` for every `L`, in lexicographic order of `L`.
    pub fn transform(&self, chi: &MultChar, twist: u64) -> Result<FullTransform> {
        self.transform_with(chi, twist, &mut BufferPool::default())
    }

    /// [`Self::transform`] drawing its arrays from `pool`.
    pub fn transform_with(&self, chi: &MultChar, twist: u64, pool: &mut BufferPool) -> Result<FullTransform> {
        if chi.ring() != self.ring {
            return Err(Error::RingMismatch { left: self.ring.to_string(), right: chi.ring().to_string() });
        }
        let q = self.ring.modulus();
        let phi = self.ring.phi();
        let k = chi.index();
        let tables = chi.tables();
        let zero = Complex64::new(0.0, 0.0);
        let roots: Vec<Complex64> = (0..phi).map(|j| tables.unit_root(k * j % phi)).collect();
        let mut data = pool.take(self.logs.len());
        data.par_iter_mut().zip(self.logs.par_iter()).for_each(|(slot, &j)| {
            *slot = if j == NO_LOG { zero } else { roots[j as usize] };
        });
        let mut tmp = if self.nvars > 1 { pool.take(data.len()) } else { Vec::new() };
        dft_all_axes(&mut data, &mut tmp, q as usize, self.nvars);
        let twist = twist % q;
        let values = if twist == 1 {
            pool.give(tmp);
            data
        } else {
            // S_t(L) = S_1(tL)
            let n = self.nvars;
            let mut it = PointIter::new(q, n, 0..data.len() as u64);
            tmp.clear();
            while let Some(l) = it.next_point() {
                let idx = l.iter().fold(0u64, |acc, &v| acc * q + v * twist % q);
                tmp.push(data[idx as usize]);
            }
            pool.give(data);
            tmp
        };
        Ok(FullTransform { q, nvars: self.nvars, values })
    }
}

/// Spare arrays for repeated transforms, so large grids are not reallocated per character.
#[derive(Debug, Default)]
pub struct BufferPool {
    spare: Vec<Vec<Complex64>>,
}

impl BufferPool {
    /// A buffer of length `len` with unspecified contents.
    fn take(&mut self, len: usize) -> Vec<Complex64> {
        let mut v = self.spare.pop().unwrap_or_default();
        v.resize(len, Complex64::new(0.0, 0.0));
        v
    }

    fn give(&mut self, v: Vec<Complex64>) {
        if v.capacity() > 0 {
            self.spare.push(v);
        }
    }
}

/// In-place unnormalized DFT with kernel `e(+xi.x / q)` along every axis.
///
/// Each round transforms the contiguous last axis and then transposes the
/// `(q^(n-1), q)` array into `(q, q^(n-1))`, which rotates the axes by one.
/// After `n` rounds they are back in the original order.
fn dft_all_axes(data: &mut Vec<Complex64>, tmp: &mut Vec<Complex64>, q: usize, n: usize) {
    if n == 0 {
        return;
    }
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_inverse(q);
    let scratch_len = fft.get_inplace_scratch_len();
    let rows_per_task = (CHUNK_SIZE as usize / q).max(1);
    for _ in 0..n {
        data.par_chunks_mut(q * rows_per_task).for_each_init(
            || vec![Complex64::new(0.0, 0.0); scratch_len],
            |scratch, chunk| fft.process_with_scratch(chunk, scratch),
        );
        if n > 1 {
            transpose(data, tmp, data.len() / q, q);
            std::mem::swap(data, tmp);
        }
    }
}

/// `dst[c * rows + r] = src[r * cols + c]`, tile by tile.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const TILE: usize = 32;
    dst.par_chunks_mut(rows * TILE).enumerate().for_each(|(b, chunk)| {
        let c0 = b * TILE;
        let width = chunk.len() / rows;
        for r0 in (0..rows).step_by(TILE) {
            for r in r0..(r0 + TILE).min(rows) {
                let row = &src[r * cols + c0..r * cols + c0 + width];
                for (c, &v) in row.iter().enumerate() {
                    chunk[c * rows + r] = v;
                }
            }
        }
    });
}

/// `S(L)` for all `L` of `(Z/q)^n`, lexicographic order.
#[derive(Debug, Clone)]
pub struct FullTransform {
    q: u64,
    nvars: usize,
    values: Vec<Complex64>,
}

impl FullTransform {
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn at(&self, l: &[u64]) -> Complex64 {
        debug_assert_eq!(l.len(), self.nvars);
        let idx = l.iter().fold(0u64, |acc, &v| acc * self.q + v % self.q);
        self.values[idx as usize]
    }

    /// `sum_L |S(L)|^2` with the deterministic chunked reduction.
    pub fn energy(&self) -> f64 {
        deterministic_sum_f64(self.values.len() as u64, |r| {
            self.values[r.start as usize..r.end as usize].iter().map(|z| z.norm_sqr()).sum()
        })
    }

    /// The transform for the conjugate character: `S_conj(L) = conj(S(-L))`.
    pub fn conjugate_character(&self) -> FullTransform {
        self.conjugate_character_with(&mut BufferPool::default())
    }

    /// [`Self::conjugate_character`] drawing its array from `pool`.
    pub fn conjugate_character_with(&self, pool: &mut BufferPool) -> FullTransform {
        let q = self.q as usize;
        let n = self.nvars;
        if n == 0 {
            return FullTransform { q: self.q, nvars: 0, values: self.values.iter().map(|z| z.conj()).collect() };
        }
        let rows = self.values.len() / q;
        let mut values = pool.take(self.values.len());
        values.par_chunks_mut(q).enumerate().for_each(|(r, out)| {
            // -L on the leading n - 1 coordinates, digit by digit
            let (mut rest, mut neg, mut place) = (r, 0, 1);
            for _ in 1..n {
                neg += (q - rest % q) % q * place;
                rest /= q;
                place *= q;
            }
            debug_assert!(neg < rows);
            let src = &self.values[neg * q..neg * q + q];
            out[0] = src[0].conj();
            for c in 1..q {
                out[c] = src[q - c].conj();
            }
        });
        FullTransform { q: self.q, nvars: n, values }
    }

    /// Hand the value array back to `pool`.
    pub fn recycle(self, pool: &mut BufferPool) {
        pool.give(self.values);
    }
}

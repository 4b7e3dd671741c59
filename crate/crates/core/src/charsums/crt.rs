//! Sums modulo a composite odd `N`, assembled from prime-power components.

use num_complex::Complex64;

use super::{SumEngine, SumMethod, SumValue};
use crate::characters::{AddChar, MultChar};
use crate::error::{Error, Result};
use crate::multipoly::MultiPoly;
use crate::residue::{prime_factors, ResidueRing};

/// A character pair mod `N = prod p^m(p)`, defined by its local components.
#[derive(Debug, Clone)]
pub struct CompositeChar {
    modulus: u64,
    locals: Vec<(MultChar, AddChar)>,
}

impl CompositeChar {
    /// Each pair must live on one ring `Z/p^m`, with distinct primes and primitive characters.
    pub fn new(locals: Vec<(MultChar, AddChar)>) -> Result<Self> {
        if locals.is_empty() {
            return Err(Error::Invalid("composite character needs at least one component".into()));
        }
        let mut modulus = 1u64;
        let mut primes = Vec::new();
        for (chi, psi) in &locals {
            if chi.ring() != psi.ring() {
                return Err(Error::RingMismatch { left: chi.ring().to_string(), right: psi.ring().to_string() });
            }
            if !chi.is_primitive() || !psi.is_primitive() {
                return Err(Error::NotPrimitive);
            }
            let p = chi.ring().p();
            if primes.contains(&p) {
                return Err(Error::Invalid(format!("prime {p} appears twice")));
            }
            primes.push(p);
            modulus = modulus
                .checked_mul(chi.ring().modulus())
                .filter(|&n| n <= u64::from(u32::MAX))
                .ok_or_else(|| Error::Invalid("composite modulus too large".into()))?;
        }
        Ok(Self { modulus, locals })
    }

    /// Factor `n` and pick `chi_k` (index from `chi_indices`, default 1) and `psi_1` on each factor.
    pub fn from_modulus(n: u64, chi_indices: Option<&[u64]>) -> Result<Self> {
        if n.is_multiple_of(2) {
            return Err(Error::EvenModulus(n));
        }
        if n <= 1 {
            return Err(Error::Invalid(format!("modulus {n} must exceed 1")));
        }
        let primes = prime_factors(n);
        if let Some(ks) = chi_indices {
            if ks.len() != primes.len() {
                return Err(Error::ArityMismatch { expected: primes.len(), got: ks.len() });
            }
        }
        let mut locals = Vec::new();
        for (i, &p) in primes.iter().enumerate() {
            let mut m = 0u32;
            let mut rest = n;
            while rest.is_multiple_of(p) {
                rest /= p;
                m += 1;
            }
            let ring = ResidueRing::new(p, m)?;
            let k = chi_indices.map_or(1, |ks| ks[i]);
            locals.push((MultChar::new(ring, k)?, AddChar::new(ring, 1)));
        }
        Self::new(locals)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn locals(&self) -> &[(MultChar, AddChar)] {
        &self.locals
    }

    /// `chi(v) = prod_p chi_p(v mod p^m)`.
    pub fn eval_mult(&self, v: u64) -> Complex64 {
        self.locals.iter().map(|(chi, _)| chi.eval(v % chi.ring().modulus())).product()
    }

    /// `psi(w) = prod_p psi_p(w mod p^m)`.
    pub fn eval_add(&self, w: u64) -> Complex64 {
        self.locals.iter().map(|(_, psi)| psi.eval(w % psi.ring().modulus())).product()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrtComparison {
    /// Enumeration of `(Z/N)^n` with the global characters.
    pub direct: SumValue,
    /// Product of the local transforms.
    pub product: SumValue,
    pub local_values: Vec<Complex64>,
}

impl CrtComparison {
    pub fn abs_diff(&self) -> f64 {
        (self.direct.value - self.product.value).norm()
    }
}

/// Both sides of `sum_{x mod N} chi(f(x)) psi(L.x) = prod_p S_p(L)`.
pub fn crt_composite_sum(
    engine: &SumEngine,
    f: &MultiPoly,
    gchar: &CompositeChar,
    l: &[u64],
) -> Result<CrtComparison> {
    let n = f.nvars();
    if l.len() != n {
        return Err(Error::ArityMismatch { expected: n, got: l.len() });
    }
    let modulus = gchar.modulus();
    let total = (modulus as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > u128::from(engine.budget) {
        return Err(Error::BudgetExceeded { needed: total, budget: engine.budget });
    }
    let chi_table: Vec<Complex64> = (0..modulus).map(|v| gchar.eval_mult(v)).collect();
    let psi_table: Vec<Complex64> = (0..modulus).map(|v| gchar.eval_add(v)).collect();
    let fc = f.compile_mod(modulus);
    let l_mod: Vec<u64> = l.iter().map(|v| v % modulus).collect();
    let (direct, count) = super::deterministic_sum(total as u64, |range| {
        let mut it = super::PointIter::new(modulus, n, range);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut count = 0;
        while let Some(x) = it.next_point() {
            let lx = l_mod.iter().zip(x).fold(0u64, |a, (&li, &xi)| (a + li * xi) % modulus);
            acc += chi_table[fc.eval(x) as usize] * psi_table[lx as usize];
            count += 1;
        }
        (acc, count)
    });
    let mut local_values = Vec::new();
    let mut product = Complex64::new(1.0, 0.0);
    let mut local_terms = 0;
    for (chi, psi) in gchar.locals() {
        let s = engine.fourier_sum(f, chi, psi, l)?;
        local_terms += s.terms_counted;
        local_values.push(s.value);
        product *= s.value;
    }
    Ok(CrtComparison {
        direct: SumValue::new(direct, count, SumMethod::BruteForce),
        product: SumValue::new(product, local_terms, SumMethod::CRTProduct),
        local_values,
    })
}

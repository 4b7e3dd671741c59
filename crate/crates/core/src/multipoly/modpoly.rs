use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;

use super::{fmt_terms, Monomial};
use crate::error::{Error, Result};
use crate::residue::ResidueRing;

/// Sparse polynomial with coefficients in `Z/p^m`, optionally used as a
/// truncated power series (see the `*_trunc` methods).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModPoly {
    ring: ResidueRing,
    nvars: usize,
    terms: BTreeMap<Monomial, u64>,
}

impl ModPoly {
    pub fn zero(ring: ResidueRing, nvars: usize) -> Self {
        Self { ring, nvars, terms: BTreeMap::new() }
    }

    pub fn constant(ring: ResidueRing, nvars: usize, c: u64) -> Self {
        let mut p = Self::zero(ring, nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn var(ring: ResidueRing, nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(ring, nvars);
        p.add_term(e, 1);
        p
    }

    pub fn from_terms(ring: ResidueRing, nvars: usize, terms: impl IntoIterator<Item = (Monomial, u64)>) -> Self {
        let mut p = Self::zero(ring, nvars);
        for (e, c) in terms {
            debug_assert_eq!(e.len(), nvars);
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, e: Monomial, c: u64) {
        let c = c % self.ring.modulus();
        if c == 0 {
            return;
        }
        let r = self.ring;
        let slot = self.terms.entry(e.clone()).or_insert(0);
        *slot = r.add(*slot, c);
        if *slot == 0 {
            self.terms.remove(&e);
        }
    }

    pub fn ring(&self) -> ResidueRing {
        self.ring
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &u64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn constant_term(&self) -> u64 {
        self.terms.get(&vec![0; self.nvars]).copied().unwrap_or(0)
    }

    pub fn coefficient(&self, e: &[u32]) -> u64 {
        self.terms.get(e).copied().unwrap_or(0)
    }

    pub fn add(&self, other: &ModPoly) -> ModPoly {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.add_term(e.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &ModPoly) -> ModPoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ModPoly {
        self.scale(self.ring.neg(1))
    }

    pub fn scale(&self, c: u64) -> ModPoly {
        let r = self.ring;
        ModPoly::from_terms(r, self.nvars, self.terms.iter().map(|(e, &v)| (e.clone(), r.mul(v, c % r.modulus()))))
    }

    pub fn add_constant(&self, c: u64) -> ModPoly {
        let mut out = self.clone();
        out.add_term(vec![0; self.nvars], c);
        out
    }

    pub fn mul(&self, other: &ModPoly) -> ModPoly {
        self.mul_trunc(other, u32::MAX)
    }

    /// Product with every monomial of total degree `>= deg` dropped.
    pub fn mul_trunc(&self, other: &ModPoly, deg: u32) -> ModPoly {
        debug_assert_eq!(self.nvars, other.nvars);
        let r = self.ring;
        let mut out = ModPoly::zero(r, self.nvars);
        for (ea, &ca) in &self.terms {
            let da: u32 = ea.iter().sum();
            for (eb, &cb) in &other.terms {
                if da + eb.iter().sum::<u32>() >= deg {
                    continue;
                }
                let e: Monomial = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, r.mul(ca, cb));
            }
        }
        out
    }

    /// Drop every monomial of total degree `>= deg`.
    pub fn truncate(&self, deg: u32) -> ModPoly {
        let mut out = self.clone();
        out.terms.retain(|e, _| e.iter().sum::<u32>() < deg);
        out
    }

    /// Multiplicative inverse as a power series modulo degree `deg`.
    pub fn inverse_trunc(&self, deg: u32) -> Result<ModPoly> {
        let r = self.ring;
        let a0 = self.constant_term();
        let inv0 = r.inverse_of(a0)?;
        // 1/(a0 (1 + u)) = inv0 * sum (-u)^k, u has no constant term
        let u = self.scale(inv0).add_constant(r.neg(1)).neg();
        let mut acc = ModPoly::constant(r, self.nvars, 1);
        let mut power = ModPoly::constant(r, self.nvars, 1);
        for _ in 1..deg {
            power = power.mul_trunc(&u, deg);
            if power.is_zero() {
                break;
            }
            acc = acc.add(&power);
        }
        Ok(acc.scale(inv0))
    }

    /// Square root `s` with `s(0) = root0`, modulo degree `deg`.
    ///
    /// Needs `root0^2 = self(0)` and a unit constant term.
    pub fn sqrt_trunc(&self, root0: u64, deg: u32) -> Result<ModPoly> {
        let r = self.ring;
        let a0 = self.constant_term();
        if !r.is_unit(a0) || r.mul(root0, root0) != a0 {
            return Err(Error::NotASquare { value: a0, modulus: r.modulus() });
        }
        // Newton s <- (s + a/s)/2 doubles the number of correct degrees per step.
        let inv2 = r.inverse_of(2)?;
        let mut s = ModPoly::constant(r, self.nvars, root0);
        let mut prec = 1u32;
        while prec < deg {
            prec = prec.saturating_mul(2).min(deg);
            let q = self.mul_trunc(&s.inverse_trunc(prec)?, prec);
            s = s.add(&q).truncate(prec).scale(inv2);
        }
        Ok(s)
    }

    /// Reduce the coefficients into a coarser ring `Z/p^k`, `k <= m`.
    pub fn reduce_to(&self, ring: ResidueRing) -> Result<ModPoly> {
        if ring.p() != self.ring.p() || ring.m() > self.ring.m() {
            return Err(Error::RingMismatch { left: self.ring.to_string(), right: ring.to_string() });
        }
        Ok(ModPoly::from_terms(ring, self.nvars, self.terms.iter().map(|(e, &c)| (e.clone(), c % ring.modulus()))))
    }

    pub fn derivative(&self, i: usize) -> ModPoly {
        let r = self.ring;
        let mut out = ModPoly::zero(r, self.nvars);
        for (e, &c) in &self.terms {
            if e[i] > 0 {
                let mut de = e.clone();
                de[i] -= 1;
                out.add_term(de, r.mul(c, u64::from(e[i]) % r.modulus()));
            }
        }
        out
    }

    pub fn gradient(&self) -> Vec<ModPoly> {
        (0..self.nvars).map(|i| self.derivative(i)).collect()
    }

    pub fn hessian(&self) -> Vec<Vec<ModPoly>> {
        self.gradient().iter().map(|g| (0..self.nvars).map(|j| g.derivative(j)).collect()).collect()
    }

    /// Evaluate at raw representatives.
    pub fn eval(&self, x: &[u64]) -> u64 {
        debug_assert_eq!(x.len(), self.nvars);
        let r = self.ring;
        let mut acc = 0u64;
        for (e, &c) in &self.terms {
            let mut t = c;
            for (&xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    t = r.mul(t, xi);
                }
            }
            acc = r.add(acc, t);
        }
        acc
    }

    /// Substitute `x_i -> subs[i]`, dropping monomials of total degree `>= deg`.
    pub fn substitute_trunc(&self, subs: &[ModPoly], deg: u32) -> ModPoly {
        debug_assert_eq!(subs.len(), self.nvars);
        let r = self.ring;
        let nv = subs.first().map_or(0, |s| s.nvars);
        let mut powers: Vec<Vec<ModPoly>> = subs.iter().map(|s| vec![ModPoly::constant(r, nv, 1), s.truncate(deg)]).collect();
        let mut out = ModPoly::zero(r, nv);
        for (e, &c) in &self.terms {
            let mut t = ModPoly::constant(r, nv, c);
            for (i, &k) in e.iter().enumerate() {
                while powers[i].len() <= k as usize {
                    let next = powers[i].last().unwrap().mul_trunc(&powers[i][1], deg);
                    powers[i].push(next);
                }
                if k > 0 {
                    t = t.mul_trunc(&powers[i][k as usize], deg);
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// `f(c + x)` as a polynomial in `x`.
    pub fn shift(&self, c: &[u64]) -> ModPoly {
        let r = self.ring;
        let subs: Vec<ModPoly> =
            (0..self.nvars).map(|i| ModPoly::var(r, self.nvars, i).add_constant(c[i])).collect();
        self.substitute_trunc(&subs, u32::MAX)
    }

    /// Flattened form for fast repeated evaluation.
    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly::from_terms(
            self.ring.modulus(),
            self.terms.iter().map(|(e, &c)| {
                let factors = e.iter().enumerate().filter(|(_, &k)| k > 0).map(|(i, &k)| (i as u32, k)).collect();
                (c, factors)
            }),
        )
    }
}

impl fmt::Display for ModPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_terms(f, self.terms.iter().rev().map(|(e, &c)| (e, BigInt::from(c))), 'x')?;
        write!(f, " (mod {})", self.ring.modulus())
    }
}

/// A [`ModPoly`] flattened into `(coefficient, [(var, exponent)])` lists.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    modulus: u64,
    terms: Vec<(u64, Vec<(u32, u32)>)>,
}

impl CompiledPoly {
    pub(crate) fn from_terms(modulus: u64, terms: impl IntoIterator<Item = (u64, Vec<(u32, u32)>)>) -> Self {
        Self { modulus, terms: terms.into_iter().filter(|(c, _)| *c != 0).collect() }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    #[inline]
    pub fn eval(&self, x: &[u64]) -> u64 {
        let n = self.modulus;
        let mut acc = 0u64;
        for (c, factors) in &self.terms {
            let mut t = *c;
            for &(i, k) in factors {
                let xi = x[i as usize];
                for _ in 0..k {
                    t = t * xi % n;
                }
            }
            acc += t;
            if acc >= n {
                acc -= n;
            }
        }
        acc
    }
}

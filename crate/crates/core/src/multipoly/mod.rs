//! Sparse multivariate polynomials with exact integer coefficients.
//!
//! [`MultiPoly`] carries arbitrary-precision coefficients and is used for the
//! symbolic side (derivatives, differential operators). Everything that runs
//! inside a residue ring goes through [`ModPoly`], whose coefficients are
//! canonical residues mod `p^m`.

mod modpoly;
mod parse;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use modpoly::{CompiledPoly, ModPoly};
pub use parse::{parse_poly, parse_poly_with_nvars};

use crate::error::{Error, Result};
use crate::residue::{diagonalize_symmetric, ResidueElem, ResidueRing, SquareClass};

/// Exponent vector of a monomial.
pub type Monomial = Vec<u32>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Monomial, BigInt>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: impl Into<BigInt>) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c.into());
        p
    }

    /// The variable `x_{i+1}` (0-based `i`).
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable index out of range");
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, BigInt::one());
        p
    }

    pub fn from_terms<C: Into<BigInt>>(nvars: usize, terms: impl IntoIterator<Item = (Monomial, C)>) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::ArityMismatch { expected: nvars, got: e.len() });
            }
            p.add_term(e, c.into());
        }
        Ok(p)
    }

    fn add_term(&mut self, e: Monomial, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e).or_insert_with(BigInt::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximum total degree; `0` for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// The common total degree of all terms, if there is one.
    pub fn is_homogeneous(&self) -> Option<u32> {
        let mut degrees = self.terms.keys().map(|e| e.iter().sum::<u32>());
        let d = degrees.next()?;
        degrees.all(|x| x == d).then_some(d)
    }

    /// Returns the constant value if the polynomial has no non-constant terms.
    pub fn as_constant(&self) -> Option<BigInt> {
        match self.terms.len() {
            0 => Some(BigInt::zero()),
            1 => self.terms.get(&vec![0; self.nvars]).cloned(),
            _ => None,
        }
    }

    fn check_arity(&self, other: &MultiPoly) -> Result<()> {
        if self.nvars == other.nvars {
            Ok(())
        } else {
            Err(Error::ArityMismatch { expected: self.nvars, got: other.nvars })
        }
    }

    pub fn add(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.check_arity(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> MultiPoly {
        self.scale(&BigInt::from(-1))
    }

    pub fn scale(&self, c: &BigInt) -> MultiPoly {
        let mut out = MultiPoly::zero(self.nvars);
        for (e, v) in &self.terms {
            out.add_term(e.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.check_arity(other)?;
        let mut out = MultiPoly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Monomial = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> MultiPoly {
        let mut acc = MultiPoly::constant(self.nvars, 1);
        for _ in 0..k {
            acc = acc.mul(self).expect("same arity");
        }
        acc
    }

    /// Formal partial derivative in variable `i` (0-based).
    pub fn derivative(&self, i: usize) -> MultiPoly {
        let mut out = MultiPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut de = e.clone();
                de[i] -= 1;
                out.add_term(de, c * BigInt::from(e[i]));
            }
        }
        out
    }

    pub fn gradient(&self) -> Vec<MultiPoly> {
        (0..self.nvars).map(|i| self.derivative(i)).collect()
    }

    pub fn hessian(&self) -> Vec<Vec<MultiPoly>> {
        let grad = self.gradient();
        grad.iter().map(|g| (0..self.nvars).map(|j| g.derivative(j)).collect()).collect()
    }

    /// Exact quotient `self / other` when `other` divides `self` by a rational
    /// constant `c`, i.e. `self = c * other`. Returns `(num, den)` of `c`.
    pub fn constant_ratio(&self, other: &MultiPoly) -> Option<(BigInt, BigInt)> {
        if other.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some((BigInt::zero(), BigInt::one()));
        }
        let (e0, c0) = other.terms.iter().next()?;
        let s0 = self.terms.get(e0)?;
        let g = s0.gcd(c0);
        let (mut num, mut den) = (s0 / &g, c0 / &g);
        if den.is_negative() {
            num = -num;
            den = -den;
        }
        // self * den == other * num, term by term
        if self.terms.len() != other.terms.len() {
            return None;
        }
        for (e, c) in &other.terms {
            let s = self.terms.get(e)?;
            if s * &den != c * &num {
                return None;
            }
        }
        Some((num, den))
    }

    /// Evaluate at a point of `(Z/p^m)^n`.
    pub fn eval(&self, x: &[ResidueElem]) -> Result<ResidueElem> {
        if x.len() != self.nvars {
            return Err(Error::ArityMismatch { expected: self.nvars, got: x.len() });
        }
        let ring = match x.first() {
            Some(e) => e.ring(),
            None => {
                return Err(Error::Invalid("cannot infer the ring of an empty point; use eval_in".into()))
            }
        };
        for e in x {
            if e.ring() != ring {
                return Err(Error::RingMismatch { left: ring.to_string(), right: e.ring().to_string() });
            }
        }
        let raw: Vec<u64> = x.iter().map(|e| e.value()).collect();
        Ok(ring.from_raw(self.eval_mod(&raw, ring.modulus())))
    }

    /// Evaluate in `ring` at raw representatives (works for `nvars = 0`).
    pub fn eval_in(&self, ring: ResidueRing, x: &[u64]) -> Result<ResidueElem> {
        if x.len() != self.nvars {
            return Err(Error::ArityMismatch { expected: self.nvars, got: x.len() });
        }
        Ok(ring.from_raw(self.eval_mod(x, ring.modulus())))
    }

    /// Evaluate modulo an arbitrary modulus `n < 2^32`.
    pub fn eval_mod(&self, x: &[u64], n: u64) -> u64 {
        debug_assert_eq!(x.len(), self.nvars);
        let mut acc = 0u64;
        for (e, c) in &self.terms {
            let mut t = bigint_mod(c, n);
            for (xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    t = t * (xi % n) % n;
                }
            }
            acc = (acc + t) % n;
        }
        acc
    }

    /// Evaluate over the integers.
    pub fn eval_int(&self, x: &[BigInt]) -> BigInt {
        let mut acc = BigInt::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    t *= xi;
                }
            }
            acc += t;
        }
        acc
    }

    /// Reduce the coefficients into `ring`.
    pub fn reduce(&self, ring: ResidueRing) -> ModPoly {
        ModPoly::from_terms(
            ring,
            self.nvars,
            self.terms.iter().map(|(e, c)| (e.clone(), bigint_mod(c, ring.modulus()))),
        )
    }

    /// Flattened evaluator modulo an arbitrary modulus `n < 2^32`.
    pub fn compile_mod(&self, n: u64) -> CompiledPoly {
        CompiledPoly::from_terms(
            n,
            self.terms.iter().map(|(e, c)| {
                let factors = e.iter().enumerate().filter(|(_, &k)| k > 0).map(|(i, &k)| (i as u32, k)).collect();
                (bigint_mod(c, n), factors)
            }),
        )
    }

    /// Largest absolute coefficient, if it fits an `i64`.
    pub fn max_abs_coefficient(&self) -> Option<i64> {
        self.terms.values().map(|c| c.abs().to_i64()).try_fold(0i64, |m, c| c.map(|c| m.max(c)))
    }
}

pub(crate) fn bigint_mod(c: &BigInt, n: u64) -> u64 {
    let r = c.mod_floor(&BigInt::from(n));
    r.to_u64().expect("reduced value fits u64")
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_terms(f, self.terms.iter().rev().map(|(e, c)| (e, c.clone())), 'x')
    }
}

pub(crate) fn fmt_terms<'a>(
    f: &mut fmt::Formatter<'_>,
    terms: impl Iterator<Item = (&'a Monomial, BigInt)>,
    var: char,
) -> fmt::Result {
    let mut first = true;
    for (e, c) in terms {
        let neg = c.is_negative();
        let abs = c.abs();
        if first {
            if neg {
                write!(f, "-")?;
            }
        } else {
            write!(f, " {} ", if neg { '-' } else { '+' })?;
        }
        first = false;
        let vars: Vec<String> = e
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(i, &k)| if k == 1 { format!("{var}{}", i + 1) } else { format!("{var}{}^{k}", i + 1) })
            .collect();
        if vars.is_empty() {
            write!(f, "{abs}")?;
        } else if abs.is_one() {
            write!(f, "{}", vars.join("*"))?;
        } else {
            write!(f, "{abs}*{}", vars.join("*"))?;
        }
    }
    if first {
        write!(f, "0")?;
    }
    Ok(())
}

fn falling_factorial(b: u32, a: u32) -> BigInt {
    (0..a).fold(BigInt::one(), |acc, i| acc * BigInt::from(b - i))
}

/// Apply the constant-coefficient operator `g(d/dx_1, ..., d/dx_n)` to `h`.
pub fn apply_diff_operator(g: &MultiPoly, h: &MultiPoly) -> Result<MultiPoly> {
    g.check_arity(h)?;
    let mut out = MultiPoly::zero(h.nvars);
    for (a, ga) in &g.terms {
        for (b, hb) in &h.terms {
            if a.iter().zip(b).any(|(ai, bi)| ai > bi) {
                continue;
            }
            let mut coeff = ga * hb;
            for (&ai, &bi) in a.iter().zip(b) {
                coeff *= falling_factorial(bi, ai);
            }
            let e: Monomial = b.iter().zip(a).map(|(bi, ai)| bi - ai).collect();
            out.add_term(e, coeff);
        }
    }
    Ok(out)
}

/// Square class of the discriminant of `(d^2 log f / dy_i dy_j)(L)` over `F_p`.
///
/// The matrix is `(f Hess f - grad f (x) grad f) / f^2`, evaluated at `L mod p`.
pub fn loghessian_disc(f_dual: &MultiPoly, point: &[u64], p: u64) -> Result<SquareClass> {
    let field = ResidueRing::new(p, 1)?;
    let n = f_dual.nvars();
    if point.len() != n {
        return Err(Error::ArityMismatch { expected: n, got: point.len() });
    }
    let matrix = loghessian_matrix(f_dual, point, field)?;
    let diag = diagonalize_symmetric(&matrix, p)?;
    if diag.rank() < n {
        return Err(Error::SingularHessian { p, rank: diag.rank(), n });
    }
    Ok(diag.disc)
}

/// The matrix `(d^2 log f / dy_i dy_j)(L)` reduced into `ring`.
pub fn loghessian_matrix(f: &MultiPoly, point: &[u64], ring: ResidueRing) -> Result<Vec<Vec<u64>>> {
    let n = f.nvars();
    let fl = ring.from_raw(f.eval_mod(point, ring.modulus()));
    if !fl.is_unit() {
        return Err(Error::NonUnitValue);
    }
    let inv = fl.inverse()?.value();
    let inv2 = ring.mul(inv, inv);
    let grad: Vec<u64> = f.gradient().iter().map(|g| g.eval_mod(point, ring.modulus())).collect();
    let hess = f.hessian();
    let mut h = vec![vec![0u64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let hij = hess[i][j].eval_mod(point, ring.modulus());
            let num = ring.sub(ring.mul(fl.value(), hij), ring.mul(grad[i], grad[j]));
            h[i][j] = ring.mul(num, inv2);
        }
    }
    Ok(h)
}

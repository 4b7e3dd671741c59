//! Exact arithmetic in `Z/p^m` for odd primes `p`.
//!
//! Representatives are canonical in `[0, p^m)`. The modulus is capped at
//! `2^31` so that every product of two representatives fits in a `u64`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest modulus accepted by [`ResidueRing::new`].
pub const MAX_MODULUS: u64 = 1 << 31;

/// Trial-division primality test; moduli here are tiny.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Distinct prime factors in increasing order.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// The ring `Z/p^m` with `p` an odd prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ResidueRing {
    p: u64,
    m: u32,
    modulus: u64,
}

impl ResidueRing {
    pub fn new(p: u64, m: u32) -> Result<Self> {
        if p == 2 {
            return Err(Error::InvalidRing("p = 2 is not supported".into()));
        }
        if !is_prime(p) {
            return Err(Error::InvalidRing(format!("{p} is not prime")));
        }
        if m == 0 {
            return Err(Error::InvalidRing("exponent m must be at least 1".into()));
        }
        let mut modulus: u64 = 1;
        for _ in 0..m {
            modulus = modulus
                .checked_mul(p)
                .filter(|&q| q <= MAX_MODULUS)
                .ok_or_else(|| Error::InvalidRing(format!("{p}^{m} exceeds 2^31")))?;
        }
        Ok(Self { p, m, modulus })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn m(&self) -> u32 {
        self.m
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Order of the unit group, `p^(m-1) (p-1)`.
    pub fn phi(&self) -> u64 {
        self.modulus / self.p * (self.p - 1)
    }

    /// The residue field `Z/p`.
    pub fn residue_field(&self) -> ResidueRing {
        ResidueRing { p: self.p, m: 1, modulus: self.p }
    }

    /// `p^k` as an integer, `k <= m`.
    pub fn p_pow(&self, k: u32) -> u64 {
        self.p.pow(k)
    }

    #[inline]
    pub fn reduce(&self, v: i128) -> u64 {
        v.rem_euclid(self.modulus as i128) as u64
    }

    #[inline]
    pub fn reduce_i64(&self, v: i64) -> u64 {
        v.rem_euclid(self.modulus as i64) as u64
    }

    pub fn elem(&self, v: i64) -> ResidueElem {
        ResidueElem { value: self.reduce_i64(v), ring: *self }
    }

    pub fn from_raw(&self, v: u64) -> ResidueElem {
        ResidueElem { value: v % self.modulus, ring: *self }
    }

    pub fn zero(&self) -> ResidueElem {
        self.from_raw(0)
    }

    pub fn one(&self) -> ResidueElem {
        self.from_raw(1)
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.modulus {
            s - self.modulus
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.modulus - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.modulus - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.modulus
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.modulus;
        base %= self.modulus;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// `v_p` of a representative, with `m` standing in for `+inf` at zero.
    pub fn valuation_of(&self, v: u64) -> u32 {
        let mut v = v % self.modulus;
        if v == 0 {
            return self.m;
        }
        let mut k = 0;
        while v.is_multiple_of(self.p) {
            v /= self.p;
            k += 1;
        }
        k
    }

    #[inline]
    pub fn is_unit(&self, v: u64) -> bool {
        !v.is_multiple_of(self.p)
    }

    pub fn inverse_of(&self, v: u64) -> Result<u64> {
        let v = v % self.modulus;
        if !self.is_unit(v) {
            return Err(Error::NonUnit { value: v, modulus: self.modulus });
        }
        let (mut old_r, mut r) = (v as i64, self.modulus as i64);
        let (mut old_s, mut s) = (1i64, 0i64);
        while r != 0 {
            let q = old_r / r;
            (old_r, r) = (r, old_r - q * r);
            (old_s, s) = (s, old_s - q * s);
        }
        debug_assert_eq!(old_r, 1);
        Ok(self.reduce_i64(old_s))
    }
}

impl fmt::Display for ResidueRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z/{}^{}", self.p, self.m)
    }
}

/// An element of a [`ResidueRing`].
///
/// Operators panic when the operands belong to different rings; use the
/// `checked_*` methods to get a [`Error::RingMismatch`] instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ResidueElem {
    value: u64,
    ring: ResidueRing,
}

impl ResidueElem {
    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn ring(&self) -> ResidueRing {
        self.ring
    }

    pub fn valuation(&self) -> u32 {
        self.ring.valuation_of(self.value)
    }

    pub fn is_unit(&self) -> bool {
        self.ring.is_unit(self.value)
    }

    pub fn inverse(&self) -> Result<ResidueElem> {
        Ok(ResidueElem { value: self.ring.inverse_of(self.value)?, ring: self.ring })
    }

    pub fn pow(&self, exp: u64) -> ResidueElem {
        ResidueElem { value: self.ring.pow(self.value, exp), ring: self.ring }
    }

    fn same_ring(&self, other: &ResidueElem) -> Result<()> {
        if self.ring == other.ring {
            Ok(())
        } else {
            Err(Error::RingMismatch { left: self.ring.to_string(), right: other.ring.to_string() })
        }
    }

    pub fn checked_add(&self, other: &ResidueElem) -> Result<ResidueElem> {
        self.same_ring(other)?;
        Ok(self.ring.from_raw(self.ring.add(self.value, other.value)))
    }

    pub fn checked_sub(&self, other: &ResidueElem) -> Result<ResidueElem> {
        self.same_ring(other)?;
        Ok(self.ring.from_raw(self.ring.sub(self.value, other.value)))
    }

    pub fn checked_mul(&self, other: &ResidueElem) -> Result<ResidueElem> {
        self.same_ring(other)?;
        Ok(self.ring.from_raw(self.ring.mul(self.value, other.value)))
    }
}

impl fmt::Display for ResidueElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.value, self.ring.modulus)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr for ResidueElem {
            type Output = ResidueElem;
            fn $method(self, rhs: ResidueElem) -> ResidueElem {
                self.$checked(&rhs).expect("residue ring mismatch")
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl Neg for ResidueElem {
    type Output = ResidueElem;
    fn neg(self) -> ResidueElem {
        self.ring.from_raw(self.ring.neg(self.value))
    }
}

/// Class of a residue in `F_p^x / (F_p^x)^2`, plus zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SquareClass {
    Square,
    NonSquare,
    Zero,
}

impl SquareClass {
    pub fn from_sign(s: i64) -> SquareClass {
        match s.signum() {
            1 => SquareClass::Square,
            -1 => SquareClass::NonSquare,
            _ => SquareClass::Zero,
        }
    }

    pub fn sign(self) -> i64 {
        match self {
            SquareClass::Square => 1,
            SquareClass::NonSquare => -1,
            SquareClass::Zero => 0,
        }
    }

    pub fn times(self, other: SquareClass) -> SquareClass {
        SquareClass::from_sign(self.sign() * other.sign())
    }

    /// `self^e`, with `Zero^0 = Square`.
    pub fn pow(self, e: u32) -> SquareClass {
        if e == 0 || (self == SquareClass::NonSquare && e.is_multiple_of(2)) {
            SquareClass::Square
        } else {
            self
        }
    }
}

/// Legendre symbol of `a` modulo the odd prime `p` (Euler's criterion).
pub fn legendre(a: i64, p: u64) -> SquareClass {
    let a = a.rem_euclid(p as i64) as u64;
    if a == 0 {
        return SquareClass::Zero;
    }
    let mut acc = 1u64;
    let mut base = a;
    let mut e = (p - 1) / 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    if acc == 1 {
        SquareClass::Square
    } else {
        SquareClass::NonSquare
    }
}

/// The square root of the unit `x` that reduces to `base_root` mod `p`.
pub fn hensel_sqrt(x: ResidueElem, base_root: u64) -> Result<ResidueElem> {
    let ring = x.ring();
    let p = ring.p();
    let not_square = Error::NotASquare { value: x.value(), modulus: ring.modulus() };
    if !x.is_unit() || base_root.is_multiple_of(p) || (base_root % p) * (base_root % p) % p != x.value() % p {
        return Err(not_square);
    }
    let mut r = base_root % p;
    // Newton on r^2 - x; correct digits double each step.
    for _ in 0..=ring.m() {
        let err = ring.sub(ring.mul(r, r), x.value());
        if err == 0 {
            return Ok(ring.from_raw(r));
        }
        let step = ring.mul(err, ring.inverse_of(ring.mul(2, r))?);
        r = ring.sub(r, step);
    }
    if ring.mul(r, r) == x.value() {
        Ok(ring.from_raw(r))
    } else {
        Err(not_square)
    }
}

/// Result of a congruence diagonalization `X^T A X = diag(a_1..a_r, 0..0)` over `F_p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagonalization {
    /// The nonzero diagonal entries, in pivot order.
    pub entries: Vec<u64>,
    /// The congruence matrix `X` (columns are the new basis vectors).
    pub transform: Vec<Vec<u64>>,
    pub disc: SquareClass,
}

impl Diagonalization {
    pub fn rank(&self) -> usize {
        self.entries.len()
    }
}

/// Diagonalize a symmetric matrix over `F_p` by congruence and return its discriminant class.
pub fn diagonalize_symmetric(a: &[Vec<u64>], p: u64) -> Result<Diagonalization> {
    let n = a.len();
    let f = ResidueRing::new(p, 1)?;
    let mut a: Vec<Vec<u64>> = a
        .iter()
        .map(|row| {
            if row.len() != n {
                return Err(Error::Invalid("matrix is not square".into()));
            }
            Ok(row.iter().map(|&v| v % p).collect())
        })
        .collect::<Result<_>>()?;
    for i in 0..n {
        for j in 0..i {
            if a[i][j] != a[j][i] {
                return Err(Error::Invalid("matrix is not symmetric".into()));
            }
        }
    }
    let mut x: Vec<Vec<u64>> = (0..n).map(|i| (0..n).map(|j| u64::from(i == j)).collect()).collect();

    // Congruence moves: A <- E^T A E, X <- X E.
    let swap = |a: &mut Vec<Vec<u64>>, x: &mut Vec<Vec<u64>>, i: usize, j: usize| {
        a.swap(i, j);
        for row in a.iter_mut() {
            row.swap(i, j);
        }
        for row in x.iter_mut() {
            row.swap(i, j);
        }
    };
    // Basis vector i <- e_i + c e_j.
    let add = |a: &mut Vec<Vec<u64>>, x: &mut Vec<Vec<u64>>, i: usize, j: usize, c: u64| {
        for row in a.iter_mut() {
            row[i] = f.add(row[i], f.mul(c, row[j]));
        }
        for col in 0..n {
            let v = f.add(a[i][col], f.mul(c, a[j][col]));
            a[i][col] = v;
        }
        for row in x.iter_mut() {
            row[i] = f.add(row[i], f.mul(c, row[j]));
        }
    };

    let mut entries = Vec::new();
    for k in 0..n {
        let pivot = (k..n).find(|&i| a[i][i] != 0);
        let pivot = match pivot {
            Some(i) => i,
            None => {
                let off = (k..n).flat_map(|i| (k..n).map(move |j| (i, j))).find(|&(i, j)| i != j && a[i][j] != 0);
                match off {
                    // a_ii + 2 a_ij + a_jj = 2 a_ij != 0 since p is odd
                    Some((i, j)) => {
                        add(&mut a, &mut x, i, j, 1);
                        i
                    }
                    None => break,
                }
            }
        };
        if pivot != k {
            swap(&mut a, &mut x, k, pivot);
        }
        let inv = f.inverse_of(a[k][k])?;
        for r in k + 1..n {
            if a[r][k] != 0 {
                let c = f.neg(f.mul(a[r][k], inv));
                add(&mut a, &mut x, r, k, c);
            }
        }
        entries.push(a[k][k]);
    }
    let prod = entries.iter().fold(1u64, |acc, &e| f.mul(acc, e));
    Ok(Diagonalization { entries, transform: x, disc: legendre(prod as i64, p) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(p: u64, m: u32) -> ResidueRing {
        ResidueRing::new(p, m).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ResidueRing::new(2, 3).is_err());
        assert!(ResidueRing::new(9, 1).is_err());
        assert!(ResidueRing::new(5, 0).is_err());
        assert!(ResidueRing::new(3, 20).is_err());
        assert!(ResidueRing::new(3, 19).is_ok());
    }

    #[test]
    fn negative_inputs_normalize() {
        assert_eq!(ring(5, 2).elem(-1).value(), 24);
        assert_eq!(ring(5, 2).elem(-26).value(), 24);
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(ring(5, 3).elem(50).valuation(), 2);
        assert_eq!(ring(5, 3).elem(0).valuation(), 3);
        assert_eq!(ring(7, 2).elem(3).valuation(), 0);
    }

    #[test]
    fn inverse_examples() {
        let r = ring(5, 2);
        assert_eq!(r.elem(2).inverse().unwrap().value(), 13);
        assert_eq!(r.elem(2).value() * 13 % 25, 1);
        assert_eq!(r.elem(1).inverse().unwrap().value(), 1);
        assert!(matches!(r.elem(10).inverse(), Err(Error::NonUnit { .. })));
    }

    #[test]
    fn ring_mismatch_is_an_error() {
        let a = ring(5, 2).elem(3);
        let b = ring(5, 3).elem(3);
        assert!(matches!(a.checked_add(&b), Err(Error::RingMismatch { .. })));
    }

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre(4, 5), SquareClass::Square);
        assert_eq!(legendre(2, 5), SquareClass::NonSquare);
        assert_eq!(legendre(0, 5), SquareClass::Zero);
        // squares mod 5 are {1, 4}
        let squares: Vec<u64> = (1..5).map(|x| x * x % 5).collect();
        for a in 1..5 {
            assert_eq!(legendre(a as i64, 5) == SquareClass::Square, squares.contains(&a));
        }
    }

    #[test]
    fn hensel_sqrt_examples() {
        assert_eq!(hensel_sqrt(ring(5, 2).elem(6), 1).unwrap().value(), 16);
        assert_eq!(hensel_sqrt(ring(5, 2).elem(1), 1).unwrap().value(), 1);
        let r = hensel_sqrt(ring(7, 3).elem(2), 3).unwrap();
        assert_eq!(r.value() * r.value() % 343, 2);
        assert_eq!(r.value() % 7, 3);
        assert!(matches!(hensel_sqrt(ring(5, 2).elem(2), 1), Err(Error::NotASquare { .. })));
        assert!(hensel_sqrt(ring(5, 2).elem(10), 0).is_err());
    }

    #[test]
    fn diagonalize_examples() {
        let id = vec![vec![1, 0], vec![0, 1]];
        assert_eq!(diagonalize_symmetric(&id, 5).unwrap().disc, SquareClass::Square);
        let hyp = vec![vec![0, 1], vec![1, 0]];
        let d = diagonalize_symmetric(&hyp, 5).unwrap();
        assert_eq!(d.rank(), 2);
        assert_eq!(d.disc, legendre(-1, 5));
        let deg = vec![vec![2, 0], vec![0, 0]];
        let d = diagonalize_symmetric(&deg, 5).unwrap();
        assert_eq!(d.entries, vec![2]);
        assert_eq!(d.disc, SquareClass::NonSquare);
        let zero = vec![vec![0, 0], vec![0, 0]];
        let d = diagonalize_symmetric(&zero, 7).unwrap();
        assert_eq!(d.rank(), 0);
        assert_eq!(d.disc, SquareClass::Square);
    }

    #[test]
    fn non_symmetric_rejected() {
        assert!(diagonalize_symmetric(&[vec![1, 2], vec![3, 1]], 5).is_err());
    }
}

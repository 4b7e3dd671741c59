//! Multiplicative and additive characters of `Z/p^m`.
//!
//! A multiplicative character is fixed by an index `k` relative to the
//! smallest generator `g` of the cyclic group `(Z/p^m)^x`:
//! `chi_k(g^j) = exp(2 pi i k j / phi)`, and `chi_k` vanishes on non-units.
//! An additive character is `psi_t(x) = exp(2 pi i t x / p^m)`.
//!
//! Values are read from per-ring tables of roots of unity and discrete
//! logarithms, built once and shared.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::residue::{prime_factors, ResidueRing};

pub type ComplexValue = Complex64;

const NO_LOG: u32 = u32::MAX;

/// Tolerance used when asserting that `alpha(chi, m)` is a 4th root of unity.
pub const ALPHA_UNIT_TOL: f64 = 1e-10;

/// Smallest `g` in `[2, p^m)` generating `(Z/p^m)^x`.
pub fn find_generator(ring: ResidueRing) -> u64 {
    let q = ring.modulus();
    let phi = ring.phi();
    if phi == 1 {
        return 1;
    }
    let ells = prime_factors(phi);
    (2..q)
        .find(|&g| ring.is_unit(g) && ells.iter().all(|&l| ring.pow(g, phi / l) != 1))
        .expect("cyclic unit group has a generator for odd p")
}

/// Discrete-log and root-of-unity tables for one ring.
#[derive(Debug)]
pub struct CharacterTables {
    ring: ResidueRing,
    generator: u64,
    dlog: Vec<u32>,
    unit_roots: Vec<Complex64>,
    additive_roots: Vec<Complex64>,
}

fn roots_of_unity(order: u64) -> Vec<Complex64> {
    (0..order)
        .map(|j| {
            let t = TAU * j as f64 / order as f64;
            Complex64::new(t.cos(), t.sin())
        })
        .collect()
}

impl CharacterTables {
    fn build(ring: ResidueRing) -> Self {
        let q = ring.modulus();
        let phi = ring.phi();
        let generator = find_generator(ring);
        let mut dlog = vec![NO_LOG; q as usize];
        let mut x = 1u64;
        for j in 0..phi {
            dlog[x as usize] = j as u32;
            x = ring.mul(x, generator);
        }
        debug_assert_eq!(x, 1);
        Self {
            ring,
            generator,
            dlog,
            unit_roots: roots_of_unity(phi),
            additive_roots: roots_of_unity(q),
        }
    }

    /// Shared tables for `ring`; built on first use.
    pub fn for_ring(ring: ResidueRing) -> Arc<CharacterTables> {
        static CACHE: OnceLock<Mutex<HashMap<ResidueRing, Arc<CharacterTables>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("character table cache poisoned");
        guard.entry(ring).or_insert_with(|| Arc::new(CharacterTables::build(ring))).clone()
    }

    pub fn ring(&self) -> ResidueRing {
        self.ring
    }

    pub fn generator(&self) -> u64 {
        self.generator
    }

    /// `log_g(x)` for units, `None` otherwise.
    #[inline]
    pub fn dlog(&self, x: u64) -> Option<u64> {
        match self.dlog[(x % self.ring.modulus()) as usize] {
            NO_LOG => None,
            j => Some(u64::from(j)),
        }
    }

    /// Raw table, `u32::MAX` marking non-units.
    pub fn dlog_table(&self) -> &[u32] {
        &self.dlog
    }

    /// `exp(2 pi i j / phi)`.
    #[inline]
    pub fn unit_root(&self, j: u64) -> Complex64 {
        self.unit_roots[(j % self.ring.phi()) as usize]
    }

    /// `exp(2 pi i j / p^m)`.
    #[inline]
    pub fn additive_root(&self, j: u64) -> Complex64 {
        self.additive_roots[(j % self.ring.modulus()) as usize]
    }
}

/// Multiplicative character of `Z/p^m`, extended by zero off the units.
#[derive(Debug, Clone)]
pub struct MultChar {
    tables: Arc<CharacterTables>,
    index: u64,
}

impl MultChar {
    pub fn new(ring: ResidueRing, index: u64) -> Result<Self> {
        if index >= ring.phi() {
            return Err(Error::Invalid(format!("character index {index} out of range [0, {})", ring.phi())));
        }
        Ok(Self { tables: CharacterTables::for_ring(ring), index })
    }

    /// The Legendre symbol as a character of `Z/p`.
    pub fn legendre(p: u64) -> Result<Self> {
        let field = ResidueRing::new(p, 1)?;
        Self::new(field, (p - 1) / 2)
    }

    /// Every character with `p` not dividing its index (all nontrivial ones when `m = 1`).
    pub fn primitive_characters(ring: ResidueRing) -> Vec<MultChar> {
        let tables = CharacterTables::for_ring(ring);
        (0..ring.phi())
            .map(|index| MultChar { tables: tables.clone(), index })
            .filter(MultChar::is_primitive)
            .collect()
    }

    pub fn ring(&self) -> ResidueRing {
        self.tables.ring
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn tables(&self) -> &Arc<CharacterTables> {
        &self.tables
    }

    /// Exponent `j` with `chi(x) = exp(2 pi i j / phi)`, or `None` off the units.
    #[inline]
    pub fn phase_index(&self, x: u64) -> Option<u64> {
        self.tables.dlog(x).map(|l| (l * self.index) % self.ring().phi())
    }

    #[inline]
    pub fn eval(&self, x: u64) -> Complex64 {
        match self.phase_index(x) {
            Some(j) => self.tables.unit_roots[j as usize],
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.index == 0
    }

    /// Not induced from any modulus `p^n`, `n < m`.
    pub fn is_primitive(&self) -> bool {
        let ring = self.ring();
        if ring.m() == 1 {
            self.index != 0
        } else {
            !self.index.is_multiple_of(ring.p())
        }
    }

    /// `chi^e`.
    pub fn pow(&self, e: u64) -> MultChar {
        let phi = self.ring().phi();
        MultChar { tables: self.tables.clone(), index: (self.index % phi) * (e % phi) % phi }
    }

    pub fn conj(&self) -> MultChar {
        let phi = self.ring().phi();
        MultChar { tables: self.tables.clone(), index: (phi - self.index) % phi }
    }
}

/// Additive character `x -> exp(2 pi i t x / p^m)`.
#[derive(Debug, Clone)]
pub struct AddChar {
    tables: Arc<CharacterTables>,
    twist: u64,
}

impl AddChar {
    pub fn new(ring: ResidueRing, twist: i64) -> Self {
        Self { tables: CharacterTables::for_ring(ring), twist: ring.reduce_i64(twist) }
    }

    pub fn ring(&self) -> ResidueRing {
        self.tables.ring
    }

    pub fn twist(&self) -> u64 {
        self.twist
    }

    pub fn tables(&self) -> &Arc<CharacterTables> {
        &self.tables
    }

    #[inline]
    pub fn eval(&self, x: u64) -> Complex64 {
        let ring = self.ring();
        self.tables.additive_roots[ring.mul(self.twist, x % ring.modulus()) as usize]
    }

    pub fn is_primitive(&self) -> bool {
        !self.twist.is_multiple_of(self.ring().p())
    }
}

fn check_ring(a: ResidueRing, b: ResidueRing) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::RingMismatch { left: a.to_string(), right: b.to_string() })
    }
}

/// `sum_x chi(x) psi(x)` over the common ring (the classical Gauss sum when `m = 1`).
pub fn gauss_sum(chi: &MultChar, psi: &AddChar) -> Result<ComplexValue> {
    check_ring(chi.ring(), psi.ring())?;
    Ok((0..chi.ring().modulus()).map(|x| chi.eval(x) * psi.eval(x)).sum())
}

/// The additive character `y -> chi(1 + p^(m-1) y)` of `Z/p`, as a twist.
pub fn derived_psi_prime(chi: &MultChar) -> Result<AddChar> {
    let ring = chi.ring();
    if ring.m() < 2 || !chi.is_primitive() {
        return Err(Error::NotPrimitive);
    }
    let p = ring.p();
    let base = 1 + ring.p_pow(ring.m() - 1);
    // 1 + p^(m-1) has order p, so chi of it is a p-th root of unity.
    let j = chi.phase_index(base).expect("1 + p^(m-1) is a unit");
    let step = ring.phi() / p;
    debug_assert_eq!(j % step, 0);
    let twist = j / step;
    debug_assert!(twist != 0, "primitive character must be nontrivial on 1 + p^(m-1) Z");
    Ok(AddChar::new(ring.residue_field(), twist as i64))
}

/// Brute-force `sum_{x mod p^m} chi(1 + x^2)`.
pub fn alpha_tilde_mult_brute(chi: &MultChar) -> Result<ComplexValue> {
    let ring = chi.ring();
    if ring.m() < 2 || !chi.is_primitive() {
        return Err(Error::NotPrimitive);
    }
    Ok((0..ring.modulus()).map(|x| chi.eval(ring.add(1, ring.mul(x, x)))).sum())
}

/// Closed form of `sum chi(1 + x^2)`: `p^(m/2)` for even `m`,
/// `p^((m-1)/2) G(legendre, psi')` for odd `m`.
pub fn alpha_tilde_mult_closed(chi: &MultChar) -> Result<ComplexValue> {
    let ring = chi.ring();
    if ring.m() < 2 || !chi.is_primitive() {
        return Err(Error::NotPrimitive);
    }
    let p = ring.p() as f64;
    let m = ring.m();
    if m.is_multiple_of(2) {
        Ok(Complex64::new(p.powi(m as i32 / 2), 0.0))
    } else {
        let g = gauss_sum(&MultChar::legendre(ring.p())?, &derived_psi_prime(chi)?)?;
        Ok(g * p.powi((m as i32 - 1) / 2))
    }
}

/// `sum_{x mod p^m} chi(1 + x^2)`, checked against its closed form.
pub fn alpha_tilde_mult(chi: &MultChar) -> Result<ComplexValue> {
    let brute = alpha_tilde_mult_brute(chi)?;
    let closed = alpha_tilde_mult_closed(chi)?;
    let ring = chi.ring();
    let scale = (ring.p() as f64).powf(ring.m() as f64 / 2.0);
    assert!(
        (brute - closed).norm() <= 1e-9 * scale,
        "alpha~(chi, m) mismatch for chi_{} on {}: brute {brute}, closed {closed}",
        chi.index(),
        ring
    );
    Ok(brute)
}

/// Brute-force `sum_{x mod p^m} psi(x^2)`.
pub fn alpha_tilde_add(psi: &AddChar) -> Result<ComplexValue> {
    let ring = psi.ring();
    if ring.m() < 2 || !psi.is_primitive() {
        return Err(Error::NotPrimitive);
    }
    Ok((0..ring.modulus()).map(|x| psi.eval(ring.mul(x, x))).sum())
}

/// The unit constant `alpha(chi, m)`: `1` for even `m`, `G(legendre, psi') / sqrt(p)` for odd `m`.
///
/// For odd `m` this is `+-1` when `p = 1 mod 4` and `+-i` when `p = 3 mod 4`.
/// Panics if the computed value is not a 4th root of unity within [`ALPHA_UNIT_TOL`].
pub fn alpha_factor(chi: &MultChar) -> Result<ComplexValue> {
    let ring = chi.ring();
    if ring.m() < 2 || !chi.is_primitive() {
        return Err(Error::NotPrimitive);
    }
    if ring.m().is_multiple_of(2) {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let g = gauss_sum(&MultChar::legendre(ring.p())?, &derived_psi_prime(chi)?)?;
    let alpha = g / (ring.p() as f64).sqrt();
    let snapped = snap_to_fourth_root(alpha);
    assert!(
        (alpha - snapped).norm() <= ALPHA_UNIT_TOL,
        "alpha(chi_{}, {}) = {alpha} is not a 4th root of unity",
        chi.index(),
        ring.m()
    );
    Ok(snapped)
}

fn snap_to_fourth_root(z: Complex64) -> Complex64 {
    if z.re.abs() >= z.im.abs() {
        Complex64::new(z.re.signum(), 0.0)
    } else {
        Complex64::new(0.0, z.im.signum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(p: u64, m: u32) -> ResidueRing {
        ResidueRing::new(p, m).unwrap()
    }

    #[test]
    fn generators() {
        assert_eq!(find_generator(ring(5, 2)), 2);
        let r = ring(5, 2);
        assert_eq!(r.pow(2, 20), 1);
        assert_eq!(r.pow(2, 10), 24);
        assert_eq!(r.pow(2, 4), 16);
        assert_eq!(find_generator(ring(3, 1)), 2);
        assert_eq!(find_generator(ring(7, 1)), 3);
    }

    #[test]
    fn primitivity() {
        let r = ring(5, 2);
        assert!(MultChar::new(r, 1).unwrap().is_primitive());
        assert!(!MultChar::new(r, 5).unwrap().is_primitive());
        assert!(!MultChar::new(r, 0).unwrap().is_primitive());
        assert!(AddChar::new(r, 1).is_primitive());
        assert!(!AddChar::new(r, 5).is_primitive());
        assert!(!AddChar::new(r, 0).is_primitive());
        assert_eq!(MultChar::primitive_characters(r).len(), 16);
    }

    #[test]
    fn primitivity_matches_induction_definition() {
        // chi is induced from Z/5 iff it is constant on each class mod 5.
        let r = ring(5, 2);
        for k in 0..r.phi() {
            let chi = MultChar::new(r, k).unwrap();
            let induced = (0..25).all(|x| (chi.eval(x) - chi.eval((x + 5) % 25)).norm() < 1e-12);
            assert_eq!(chi.is_primitive(), !induced, "k = {k}");
        }
    }

    #[test]
    fn gauss_sum_examples() {
        let f = ring(5, 1);
        let trivial = MultChar::new(f, 0).unwrap();
        let psi = AddChar::new(f, 1);
        assert!((gauss_sum(&trivial, &psi).unwrap() - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        let g = gauss_sum(&MultChar::legendre(5).unwrap(), &psi).unwrap();
        assert!((g.re - 2.2360679).abs() < 1e-7 && g.im.abs() < 1e-12);
        for p in [5, 7, 13] {
            let f = ring(p, 1);
            for k in 1..p - 1 {
                let g = gauss_sum(&MultChar::new(f, k).unwrap(), &AddChar::new(f, 1)).unwrap();
                assert!((g.norm() - (p as f64).sqrt()).abs() < 1e-12);
            }
        }
        assert!(gauss_sum(&MultChar::new(ring(5, 2), 1).unwrap(), &psi).is_err());
    }

    #[test]
    fn psi_prime_is_an_additive_character() {
        let r = ring(5, 2);
        for chi in MultChar::primitive_characters(r) {
            let psi = derived_psi_prime(&chi).unwrap();
            assert!((1..5).contains(&psi.twist()));
            for y in 0..5 {
                let direct = chi.eval(1 + 5 * y);
                assert!((direct - psi.eval(y)).norm() < 1e-12);
                let next = chi.eval(1 + 5 * ((y + 1) % 5));
                assert!((next - direct * chi.eval(6)).norm() < 1e-12);
            }
        }
        assert!(matches!(derived_psi_prime(&MultChar::new(r, 5).unwrap()), Err(Error::NotPrimitive)));
    }

    #[test]
    fn alpha_tilde_examples() {
        for chi in MultChar::primitive_characters(ring(5, 2)) {
            assert!((alpha_tilde_mult(&chi).unwrap() - Complex64::new(5.0, 0.0)).norm() < 1e-9);
        }
        for chi in MultChar::primitive_characters(ring(7, 2)) {
            assert!((alpha_tilde_mult(&chi).unwrap() - Complex64::new(7.0, 0.0)).norm() < 1e-9);
        }
        for chi in MultChar::primitive_characters(ring(5, 3)) {
            assert!((alpha_tilde_mult(&chi).unwrap().norm() - 5f64.powf(1.5)).abs() < 1e-9);
        }
        assert!((alpha_tilde_add(&AddChar::new(ring(5, 2), 1)).unwrap().norm() - 5.0).abs() < 1e-9);
        assert!((alpha_tilde_add(&AddChar::new(ring(7, 2), 1)).unwrap().norm() - 7.0).abs() < 1e-9);
        assert!((alpha_tilde_add(&AddChar::new(ring(5, 3), 1)).unwrap().norm() - 5f64.powf(1.5)).abs() < 1e-9);
    }

    #[test]
    fn alpha_factor_values() {
        for chi in MultChar::primitive_characters(ring(5, 2)) {
            assert_eq!(alpha_factor(&chi).unwrap(), Complex64::new(1.0, 0.0));
        }
        for chi in MultChar::primitive_characters(ring(5, 3)) {
            let a = alpha_factor(&chi).unwrap();
            assert!(a.im == 0.0 && a.re.abs() == 1.0);
        }
        for chi in MultChar::primitive_characters(ring(7, 3)) {
            let a = alpha_factor(&chi).unwrap();
            assert!(a.re == 0.0 && a.im.abs() == 1.0, "p = 3 mod 4 gives +-i");
        }
        assert_eq!(alpha_factor(&MultChar::new(ring(13, 4), 1).unwrap()).unwrap(), Complex64::new(1.0, 0.0));
        assert!(alpha_factor(&MultChar::new(ring(5, 3), 5).unwrap()).is_err());
    }
}

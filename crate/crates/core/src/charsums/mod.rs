//! Character-sum engines over `(Z/p^m)^n`.
//!
//! Every enumerating engine runs through [`deterministic_sum`], so results
//! are bit-identical for any worker count.

mod crt;
mod reduce;
mod transform;

use num_complex::Complex64;
use serde::Serialize;

pub use crt::{crt_composite_sum, CompositeChar, CrtComparison};
pub use reduce::{deterministic_sum, deterministic_sum_f64, point_index, PointIter, CHUNK_SIZE};
pub use transform::{BufferPool, DlogGrid, FullTransform};

use crate::characters::{alpha_tilde_mult_closed, AddChar, ComplexValue, MultChar};
use crate::error::{Error, Result};
use crate::multipoly::{CompiledPoly, MultiPoly};
use crate::residue::{legendre, ResidueRing};

/// Default cap on enumerated terms.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SumMethod {
    BruteForce,
    Filtered,
    ClosedForm,
    Factorized,
    CRTProduct,
    /// Full transform over the dual group.
    Transform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumValue {
    pub value: ComplexValue,
    pub terms_counted: u64,
    pub method: SumMethod,
}

impl SumValue {
    fn new(value: ComplexValue, terms_counted: u64, method: SumMethod) -> Self {
        Self { value, terms_counted, method }
    }
}

/// `p^(e/2)` as a float; the natural magnitude of most sums here.
pub fn half_power(p: u64, e: u32) -> f64 {
    (p as f64).powf(f64::from(e) / 2.0)
}

/// Output of [`SumEngine::prop41_factorize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factorization {
    /// `min_i v(L_i)`.
    pub k: u32,
    /// `sum_y chi^d(y) psi(y)`; `None` in the vanishing case.
    pub gauss_like: Option<ComplexValue>,
    /// `sum_{L(x) = 1} chi(f(x))`; `None` in the vanishing case.
    pub hyperplane_sum: Option<ComplexValue>,
    pub product: SumValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParsevalRecord {
    pub lhs: f64,
    pub rhs: f64,
    /// Number of `x` with `f(x)` a unit.
    pub n1: u64,
}

impl ParsevalRecord {
    pub fn relative_error(&self) -> f64 {
        if self.rhs == 0.0 {
            self.lhs.abs()
        } else {
            (self.lhs - self.rhs).abs() / self.rhs
        }
    }
}

/// Runs the enumerating sums under a term budget.
#[derive(Debug, Clone, Copy)]
pub struct SumEngine {
    pub budget: u64,
}

impl Default for SumEngine {
    fn default() -> Self {
        Self { budget: DEFAULT_BUDGET }
    }
}

/// The values `w(v)` for every residue `v`, so the hot loops are table lookups.
pub fn mult_table(chi: &MultChar) -> Vec<Complex64> {
    (0..chi.ring().modulus()).map(|v| chi.eval(v)).collect()
}

pub fn add_table(psi: &AddChar) -> Vec<Complex64> {
    (0..psi.ring().modulus()).map(|v| psi.eval(v)).collect()
}

fn same_ring(a: ResidueRing, b: ResidueRing) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::RingMismatch { left: a.to_string(), right: b.to_string() })
    }
}

/// A summand `weight[f(x)] * psi[L.x]` with an optional critical-point filter.
struct Summand<'a> {
    f: CompiledPoly,
    weight: &'a [Complex64],
    linear: Option<(&'a [u64], &'a [Complex64])>,
    /// Gradient components and the modulus `p^t` they must vanish under.
    filter: Option<(Vec<CompiledPoly>, u64)>,
}

impl SumEngine {
    pub fn new(budget: u64) -> Self {
        Self { budget }
    }

    fn check_budget(&self, q: u64, n: usize) -> Result<u64> {
        let needed = (q as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        // tables of size q are built alongside, so q itself must also fit
        if needed > u128::from(self.budget) || q > self.budget.max(1 << 20) {
            return Err(Error::BudgetExceeded { needed, budget: self.budget });
        }
        Ok(needed as u64)
    }

    fn enumerate(&self, ring: ResidueRing, n: usize, s: &Summand<'_>) -> Result<(Complex64, u64)> {
        let q = ring.modulus();
        let total = self.check_budget(q, n)?;
        Ok(deterministic_sum(total, |range| {
            let mut it = PointIter::new(q, n, range);
            let mut acc = Complex64::new(0.0, 0.0);
            let mut count = 0u64;
            while let Some(x) = it.next_point() {
                if let Some((grad, pt)) = &s.filter {
                    if grad.iter().any(|g| g.eval(x) % pt != 0) {
                        continue;
                    }
                }
                let mut term = s.weight[s.f.eval(x) as usize];
                if let Some((l, psi)) = s.linear {
                    let lx = l.iter().zip(x).fold(0u64, |a, (&li, &xi)| (a + li * xi) % q);
                    term *= psi[lx as usize];
                }
                acc += term;
                count += 1;
            }
            (acc, count)
        }))
    }

    fn require_vars(f: &MultiPoly) -> Result<()> {
        if f.nvars() == 0 {
            return Err(Error::Invalid("polynomial needs at least one variable".into()));
        }
        Ok(())
    }

    /// `sum_x chi(f(x))` by full enumeration.
    pub fn brute_sum(&self, f: &MultiPoly, chi: &MultChar) -> Result<SumValue> {
        Self::require_vars(f)?;
        let ring = chi.ring();
        self.check_budget(ring.modulus(), f.nvars())?;
        let table = mult_table(chi);
        let s = Summand { f: f.reduce(ring).compile(), weight: &table, linear: None, filter: None };
        let (v, n) = self.enumerate(ring, f.nvars(), &s)?;
        Ok(SumValue::new(v, n, SumMethod::BruteForce))
    }

    /// `sum_x psi(f(x))` by full enumeration.
    pub fn brute_sum_additive(&self, f: &MultiPoly, psi: &AddChar) -> Result<SumValue> {
        Self::require_vars(f)?;
        let ring = psi.ring();
        self.check_budget(ring.modulus(), f.nvars())?;
        let table = add_table(psi);
        let s = Summand { f: f.reduce(ring).compile(), weight: &table, linear: None, filter: None };
        let (v, n) = self.enumerate(ring, f.nvars(), &s)?;
        Ok(SumValue::new(v, n, SumMethod::BruteForce))
    }

    /// Gradient filter: keep `x` iff every partial derivative has valuation
    /// at least `ceil((m - 1) / 2)`.
    fn gradient_filter(f: &MultiPoly, ring: ResidueRing) -> (Vec<CompiledPoly>, u64) {
        let threshold = ring.m() / 2;
        let grads = f.gradient().iter().map(|g| g.reduce(ring).compile()).collect();
        (grads, ring.p_pow(threshold))
    }

    /// `sum chi(f(x))` restricted to the near-critical `x`; equals [`Self::brute_sum`].
    pub fn filtered_sum(&self, f: &MultiPoly, chi: &MultChar) -> Result<SumValue> {
        Self::require_vars(f)?;
        let ring = chi.ring();
        if ring.m() < 2 || !chi.is_primitive() {
            return Err(Error::NotPrimitive);
        }
        self.check_budget(ring.modulus(), f.nvars())?;
        let table = mult_table(chi);
        let s = Summand {
            f: f.reduce(ring).compile(),
            weight: &table,
            linear: None,
            filter: Some(Self::gradient_filter(f, ring)),
        };
        let (v, n) = self.enumerate(ring, f.nvars(), &s)?;
        Ok(SumValue::new(v, n, SumMethod::Filtered))
    }

    /// Additive counterpart of [`Self::filtered_sum`].
    pub fn filtered_sum_additive(&self, f: &MultiPoly, psi: &AddChar) -> Result<SumValue> {
        Self::require_vars(f)?;
        let ring = psi.ring();
        if ring.m() < 2 || !psi.is_primitive() {
            return Err(Error::NotPrimitive);
        }
        self.check_budget(ring.modulus(), f.nvars())?;
        let table = add_table(psi);
        let s = Summand {
            f: f.reduce(ring).compile(),
            weight: &table,
            linear: None,
            filter: Some(Self::gradient_filter(f, ring)),
        };
        let (v, n) = self.enumerate(ring, f.nvars(), &s)?;
        Ok(SumValue::new(v, n, SumMethod::Filtered))
    }

    /// `S(L) = sum_x chi(f(x)) psi(L.x)` by full enumeration.
    pub fn fourier_sum(&self, f: &MultiPoly, chi: &MultChar, psi: &AddChar, l: &[u64]) -> Result<SumValue> {
        Self::require_vars(f)?;
        let ring = chi.ring();
        same_ring(ring, psi.ring())?;
        if !chi.is_primitive() || !psi.is_primitive() {
            return Err(Error::NotPrimitive);
        }
        if l.len() != f.nvars() {
            return Err(Error::ArityMismatch { expected: f.nvars(), got: l.len() });
        }
        self.check_budget(ring.modulus(), f.nvars())?;
        let q = ring.modulus();
        let l: Vec<u64> = l.iter().map(|v| v % q).collect();
        let table = mult_table(chi);
        let psi_table = add_table(psi);
        let s = Summand { f: f.reduce(ring).compile(), weight: &table, linear: Some((&l, &psi_table)), filter: None };
        let (v, n) = self.enumerate(ring, f.nvars(), &s)?;
        Ok(SumValue::new(v, n, SumMethod::BruteForce))
    }

    /// `sum_{L(x) = 1} chi(f(x))`, solving for the smallest-index unit coefficient of `L`.
    pub fn hyperplane_sum(&self, f: &MultiPoly, chi: &MultChar, l: &[u64]) -> Result<SumValue> {
        let ring = chi.ring();
        let i0 = first_unit_coordinate(ring, l)?;
        self.hyperplane_sum_on(f, chi, l, i0)
    }

    /// [`Self::hyperplane_sum`] with an explicit solved coordinate `i0` (`L_i0` must be a unit).
    pub fn hyperplane_sum_on(&self, f: &MultiPoly, chi: &MultChar, l: &[u64], i0: usize) -> Result<SumValue> {
        Self::require_vars(f)?;
        let ring = chi.ring();
        let n = f.nvars();
        if l.len() != n {
            return Err(Error::ArityMismatch { expected: n, got: l.len() });
        }
        if i0 >= n || !ring.is_unit(l[i0] % ring.modulus()) {
            return Err(Error::NoUnitCoefficient);
        }
        let q = ring.modulus();
        let total = self.check_budget(q, n - 1)?;
        let inv = ring.inverse_of(l[i0] % q)?;
        let neg_l: Vec<u64> = l.iter().map(|&v| ring.neg(v % q)).collect();
        let table = mult_table(chi);
        let fc = f.reduce(ring).compile();
        let (v, count) = deterministic_sum(total, |range| {
            let mut it = PointIter::new(q, n - 1, range);
            let mut x = vec![0u64; n];
            let mut acc = Complex64::new(0.0, 0.0);
            let mut count = 0;
            while let Some(free) = it.next_point() {
                let mut rhs = 1u64;
                let mut k = 0;
                for (j, slot) in x.iter_mut().enumerate() {
                    if j != i0 {
                        *slot = free[k];
                        k += 1;
                        rhs = ring.add(rhs, ring.mul(neg_l[j], *slot));
                    }
                }
                x[i0] = ring.mul(rhs, inv);
                acc += table[fc.eval(&x) as usize];
                count += 1;
            }
            (acc, count)
        });
        Ok(SumValue::new(v, count, SumMethod::BruteForce))
    }

    /// Split `S(L)` for homogeneous `f` into a Gauss-type sum and a hyperplane sum.
    pub fn prop41_factorize(
        &self,
        f: &MultiPoly,
        chi: &MultChar,
        psi: &AddChar,
        l: &[u64],
    ) -> Result<Factorization> {
        let ring = chi.ring();
        same_ring(ring, psi.ring())?;
        if !chi.is_primitive() || !psi.is_primitive() {
            return Err(Error::NotPrimitive);
        }
        let d = f.is_homogeneous().ok_or_else(|| Error::Invalid("polynomial is not homogeneous".into()))?;
        if u64::from(d) % ring.p() == 0 {
            return Err(Error::DegreeDivisible { p: ring.p(), d });
        }
        if l.len() != f.nvars() {
            return Err(Error::ArityMismatch { expected: f.nvars(), got: l.len() });
        }
        let k = l.iter().map(|&v| ring.valuation_of(v % ring.modulus())).min().unwrap_or(ring.m());
        if k != 0 {
            return Ok(Factorization {
                k,
                gauss_like: None,
                hyperplane_sum: None,
                product: SumValue::new(Complex64::new(0.0, 0.0), 0, SumMethod::Factorized),
            });
        }
        let chi_d = chi.pow(u64::from(d));
        let gauss_like: Complex64 = (0..ring.modulus()).map(|y| chi_d.eval(y) * psi.eval(y)).sum();
        let hyper = self.hyperplane_sum(f, chi, l)?;
        Ok(Factorization {
            k,
            gauss_like: Some(gauss_like),
            hyperplane_sum: Some(hyper.value),
            product: SumValue::new(gauss_like * hyper.value, hyper.terms_counted + ring.modulus(), SumMethod::Factorized),
        })
    }

    /// `sum_L |S(L)|^2` by a direct double loop, against `p^(mn) N_1`.
    pub fn parseval_check(&self, f: &MultiPoly, chi: &MultChar, psi: &AddChar) -> Result<ParsevalRecord> {
        Self::require_vars(f)?;
        let ring = chi.ring();
        same_ring(ring, psi.ring())?;
        let q = ring.modulus();
        let n = f.nvars();
        let points = self.check_budget(q, n)?;
        let pairs = u128::from(points) * u128::from(points);
        if pairs > u128::from(self.budget) {
            return Err(Error::BudgetExceeded { needed: pairs, budget: self.budget });
        }
        let table = mult_table(chi);
        let psi_table = add_table(psi);
        let fc = f.reduce(ring).compile();
        // chi(f(x)) once, then one pass per L
        let values: Vec<Complex64> = {
            let mut it = PointIter::new(q, n, 0..points);
            let mut v = Vec::with_capacity(points as usize);
            while let Some(x) = it.next_point() {
                v.push(table[fc.eval(x) as usize]);
            }
            v
        };
        let n1 = values.iter().filter(|z| z.norm_sqr() > 0.5).count() as u64;
        let lhs = deterministic_sum_f64(points, |range| {
            let mut it = PointIter::new(q, n, range);
            let mut acc = 0.0;
            while let Some(l) = it.next_point() {
                let mut xs = PointIter::new(q, n, 0..points);
                let mut s = Complex64::new(0.0, 0.0);
                let mut idx = 0;
                while let Some(x) = xs.next_point() {
                    let lx = l.iter().zip(x).fold(0u64, |a, (&li, &xi)| (a + li * xi) % q);
                    s += values[idx] * psi_table[lx as usize];
                    idx += 1;
                }
                acc += s.norm_sqr();
            }
            acc
        });
        Ok(ParsevalRecord { lhs, rhs: points as f64 * n1 as f64, n1 })
    }
}

/// Smallest `i` with `L_i` a unit.
pub fn first_unit_coordinate(ring: ResidueRing, l: &[u64]) -> Result<usize> {
    l.iter().position(|&v| ring.is_unit(v % ring.modulus())).ok_or(Error::NoUnitCoefficient)
}

/// Closed form of `sum_x chi(a0 + a1 x1^2 + ... + an xn^2)` for units `a_i` and primitive `chi`.
pub fn quadratic_closed_form(a: &[u64], chi: &MultChar) -> Result<SumValue> {
    let ring = chi.ring();
    if ring.m() < 2 || !chi.is_primitive() {
        return Err(Error::NotPrimitive);
    }
    let (a0, rest) = a.split_first().ok_or_else(|| Error::Invalid("need at least a0".into()))?;
    for &ai in a {
        if !ring.is_unit(ai % ring.modulus()) {
            return Err(Error::NonUnit { value: ai % ring.modulus(), modulus: ring.modulus() });
        }
    }
    let n = rest.len() as u64;
    let p = ring.p();
    let field = ring.residue_field();
    let disc = rest.iter().fold(field.pow(a0 % p, n), |acc, &ai| field.mul(acc, ai % p));
    let sign = legendre(disc as i64, p).pow(ring.m()).sign() as f64;
    let alpha = alpha_tilde_mult_closed(chi)?;
    let value = chi.eval(*a0) * sign * alpha.powu(n as u32);
    Ok(SumValue::new(value, 0, SumMethod::ClosedForm))
}

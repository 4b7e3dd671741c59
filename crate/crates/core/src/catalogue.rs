//! Relative-invariant data `(n, d, f, f_dual, b0)` for the checked instances.
//!
//! `b0` is always re-derived from `f` and `f_dual` when an instance is built,
//! and a stored value that disagrees is rejected.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::charsums::PointIter;
use crate::error::{Error, Result};
use crate::morse::{find_degenerate_critical, Chart};
use crate::multipoly::{apply_diff_operator, loghessian_disc, parse_poly_with_nvars, MultiPoly};
use crate::residue::ResidueRing;

#[derive(Debug, Clone, PartialEq)]
pub struct PvsInstance {
    pub name: String,
    pub n: usize,
    pub d: u32,
    pub f: MultiPoly,
    pub f_dual: MultiPoly,
    pub b0: BigRational,
}

/// `b0` as the leading coefficient of `b(s)` with `f_dual(d/dx) f^(s+1) = b(s) f^s`.
pub fn compute_b0(f: &MultiPoly, f_dual: &MultiPoly, d: u32) -> Result<BigRational> {
    Ok(bernstein_sato(f, f_dual, d)?.last().cloned().unwrap_or_else(BigRational::zero))
}

/// Coefficients of `b(s)`, constant term first, from exact operator applications at `s = 0..=d`.
pub fn bernstein_sato(f: &MultiPoly, f_dual: &MultiPoly, d: u32) -> Result<Vec<BigRational>> {
    if f.nvars() != f_dual.nvars() {
        return Err(Error::ArityMismatch { expected: f.nvars(), got: f_dual.nvars() });
    }
    for (label, g) in [("f", f), ("f_dual", f_dual)] {
        if g.is_homogeneous() != Some(d) {
            return Err(Error::NotBernsteinPair(format!("{label} is not homogeneous of degree {d}")));
        }
    }
    let mut values = Vec::new();
    let mut f_pow = MultiPoly::constant(f.nvars(), 1);
    for s in 0..=d {
        let next = f_pow.mul(f)?;
        let g = apply_diff_operator(f_dual, &next)?;
        let (num, den) = g.constant_ratio(&f_pow).ok_or_else(|| {
            Error::NotBernsteinPair(format!("f_dual(d/dx) f^{} is not a constant multiple of f^{s}", s + 1))
        })?;
        values.push(BigRational::new(num, den));
        f_pow = next;
    }
    let coeffs = interpolate(&values);
    if coeffs.last().is_none_or(|c| c.is_zero()) {
        return Err(Error::NotBernsteinPair(format!("b(s) has degree below {d}")));
    }
    Ok(coeffs)
}

/// Coefficients of the polynomial through `(s, values[s])`, `s = 0..k`.
fn interpolate(values: &[BigRational]) -> Vec<BigRational> {
    let k = values.len();
    let mut out = vec![BigRational::zero(); k];
    for (s, ys) in values.iter().enumerate() {
        // basis polynomial prod_{t != s} (X - t) / (s - t)
        let mut basis = vec![BigRational::one()];
        let mut denom = BigRational::one();
        for t in 0..k {
            if t == s {
                continue;
            }
            let mut next = vec![BigRational::zero(); basis.len() + 1];
            for (i, c) in basis.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * BigRational::from_integer(BigInt::from(t));
            }
            basis = next;
            denom *= BigRational::from_integer(BigInt::from(s as i64 - t as i64));
        }
        for (i, c) in basis.iter().enumerate() {
            out[i] += c * ys / &denom;
        }
    }
    out
}

fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Catalogue(format!("bad rational {s:?}"));
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s.trim(), "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(num, den))
}

impl PvsInstance {
    /// Build an instance, deriving `b0`.
    pub fn new(name: &str, f: MultiPoly, f_dual: MultiPoly) -> Result<Self> {
        let d = f.is_homogeneous().ok_or_else(|| Error::Catalogue(format!("{name}: f is not homogeneous")))?;
        let b0 = compute_b0(&f, &f_dual, d)?;
        Ok(Self { name: name.to_string(), n: f.nvars(), d, f, f_dual, b0 })
    }

    /// Build an instance and require the derived `b0` to equal `stored`.
    pub fn with_stored_b0(name: &str, f: MultiPoly, f_dual: MultiPoly, stored: BigRational) -> Result<Self> {
        let inst = Self::new(name, f, f_dual)?;
        if inst.b0 != stored {
            return Err(Error::Catalogue(format!(
                "{name}: stored b0 = {} but the operator identity gives {}",
                format_rational(&stored),
                format_rational(&inst.b0)
            )));
        }
        Ok(inst)
    }

    /// `b0 mod p^m`; fails if `p` divides its numerator or denominator.
    pub fn b0_mod(&self, ring: ResidueRing) -> Result<u64> {
        let q = BigInt::from(ring.modulus());
        let num = self.b0.numer().mod_floor(&q).to_u64().expect("reduced");
        let den = self.b0.denom().mod_floor(&q).to_u64().expect("reduced");
        if !ring.is_unit(num) {
            return Err(Error::NonUnit { value: num, modulus: ring.modulus() });
        }
        Ok(ring.mul(num, ring.inverse_of(den)?))
    }

    fn arithmetic_bad(&self, p: u64) -> bool {
        let pb = BigInt::from(p);
        p == 2
            || u64::from(self.d) % p == 0
            || (self.b0.numer() % &pb).is_zero()
            || (self.b0.denom() % &pb).is_zero()
    }

    /// Conservative bad-prime flag: divisibility of `2 d b0`, plus structural failures
    /// (singular log-Hessian, degenerate chart critical point) on up to 32 unit points `L`.
    pub fn is_bad_prime(&self, p: u64) -> bool {
        if self.arithmetic_bad(p) {
            return true;
        }
        let Ok(field) = ResidueRing::new(p, 1) else {
            return true;
        };
        let Ok(r2) = ResidueRing::new(p, 2) else {
            return true;
        };
        self.sample_unit_points(field, 32, 0).into_iter().any(|l| {
            if loghessian_disc(&self.f_dual, &l, p).is_err() {
                return true;
            }
            match Chart::Hyperplane(l).restrict(&self.f, r2) {
                Ok(cp) => find_degenerate_critical(&cp).is_some(),
                Err(_) => true,
            }
        })
    }

    /// Up to `k` points of `(Z/p^m)^n` with `f_dual(L)` a unit: all of them when few, else a seeded sample.
    pub fn sample_unit_points(&self, ring: ResidueRing, k: usize, seed: u64) -> Vec<Vec<u64>> {
        let q = ring.modulus();
        let total = (q as u128).pow(self.n as u32);
        let fd = self.f_dual.reduce(ring).compile();
        let mut out = Vec::new();
        if total <= 4 * k as u128 {
            let mut it = PointIter::new(q, self.n, 0..total as u64);
            while let Some(l) = it.next_point() {
                if ring.is_unit(fd.eval(l)) && out.len() < k {
                    out.push(l.to_vec());
                }
            }
            return out;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tries = 0;
        while out.len() < k && tries < 100 * k {
            tries += 1;
            let l: Vec<u64> = (0..self.n).map(|_| rng.gen_range(0..q)).collect();
            if ring.is_unit(fd.eval(&l)) {
                out.push(l);
            }
        }
        out
    }

    /// `c = d^{-1} grad f_dual(L) / f_dual(L)` mod `p^m`.
    pub fn dual_gradient_point(&self, l: &[u64], ring: ResidueRing) -> Result<Vec<u64>> {
        if l.len() != self.n {
            return Err(Error::ArityMismatch { expected: self.n, got: l.len() });
        }
        if u64::from(self.d) % ring.p() == 0 {
            return Err(Error::DegreeDivisible { p: ring.p(), d: self.d });
        }
        let fd = self.f_dual.eval_in(ring, l)?;
        if !fd.is_unit() {
            return Err(Error::NonUnitValue);
        }
        let scale = ring.mul(fd.inverse()?.value(), ring.inverse_of(u64::from(self.d) % ring.modulus())?);
        Ok(self.f_dual.gradient().iter().map(|g| ring.mul(scale, g.eval_mod(l, ring.modulus()))).collect())
    }

    /// `d^{-d} b0 f_dual(L)^{-1}` mod `p^m`.
    pub fn predicted_critical_value(&self, l: &[u64], ring: ResidueRing) -> Result<u64> {
        let fd = self.f_dual.eval_in(ring, l)?;
        if !fd.is_unit() {
            return Err(Error::NonUnitValue);
        }
        let d_inv = ring.inverse_of(u64::from(self.d) % ring.modulus())?;
        Ok(ring.mul(ring.mul(ring.pow(d_inv, u64::from(self.d)), self.b0_mod(ring)?), fd.inverse()?.value()))
    }

    /// Checks `f(c) = d^{-d} b0 f_dual(L)^{-1}` mod `p^m` at the dual gradient point.
    pub fn critical_value_identity_check(&self, l: &[u64], ring: ResidueRing) -> Result<bool> {
        if self.is_bad_prime(ring.p()) {
            return Err(Error::BadPrime { instance: self.name.clone(), p: ring.p() });
        }
        let c = self.dual_gradient_point(l, ring)?;
        let fc = self.f.eval_mod(&c, ring.modulus());
        Ok(fc == self.predicted_critical_value(l, ring)?)
    }

    pub fn to_text(&self) -> String {
        let fdual = self.f_dual.to_string().replace('x', "y");
        format!(
            "name={}\nn={}\nd={}\nf={}\nfdual={}\nb0={}\n",
            self.name,
            self.n,
            self.d,
            self.f,
            fdual,
            format_rational(&self.b0)
        )
    }
}

impl fmt::Display for PvsInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (n={}, d={}, f={}, fdual={}, b0={})",
            self.name,
            self.n,
            self.d,
            self.f,
            self.f_dual.to_string().replace('x', "y"),
            format_rational(&self.b0)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalogue {
    pub instances: Vec<PvsInstance>,
}

const BUILTIN: &str = "\
name=linear
n=1
d=1
f=x1
fdual=y1
b0=1

name=square
n=1
d=2
f=x1^2
fdual=y1^2
b0=4

name=hyperbola
n=2
d=2
f=x1*x2
fdual=y1*y2
b0=1

name=quadric-2
n=2
d=2
f=x1^2 + x2^2
fdual=y1^2 + y2^2
b0=4

name=quadric-3
n=3
d=2
f=x1^2 + x2^2 + x3^2
fdual=y1^2 + y2^2 + y3^2
b0=4

name=quadric-4
n=4
d=2
f=x1^2 + x2^2 + x3^2 + x4^2
fdual=y1^2 + y2^2 + y3^2 + y4^2
b0=4

# 2x2 determinant, variables ordered x11, x12, x21, x22
name=det2
n=4
d=2
f=x1*x4 - x2*x3
fdual=y1*y4 - y2*y3
b0=1
";

impl Catalogue {
    pub fn builtin() -> Self {
        Self::from_text(BUILTIN).expect("builtin catalogue is consistent")
    }

    /// Parse blank-line separated blocks of `key=value` lines; `#` starts a comment line.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut instances = Vec::new();
        let mut block: Vec<(usize, &str)> = Vec::new();
        let lines: Vec<&str> = text.lines().collect();
        for (i, line) in lines.iter().enumerate() {
            let t = line.trim();
            if t.starts_with('#') {
                continue;
            }
            if t.is_empty() {
                if !block.is_empty() {
                    instances.push(Self::parse_block(&block)?);
                    block.clear();
                }
            } else {
                block.push((i + 1, t));
            }
        }
        if !block.is_empty() {
            instances.push(Self::parse_block(&block)?);
        }
        let mut names: Vec<&str> = instances.iter().map(|i: &PvsInstance| i.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Catalogue(format!("duplicate instance name {}", w[0])));
        }
        Ok(Self { instances })
    }

    fn parse_block(block: &[(usize, &str)]) -> Result<PvsInstance> {
        let mut fields = std::collections::BTreeMap::new();
        for &(lineno, line) in block {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Catalogue(format!("line {lineno}: expected key=value")))?;
            let k = k.trim();
            if !["name", "n", "d", "f", "fdual", "b0"].contains(&k) {
                return Err(Error::Catalogue(format!("line {lineno}: unknown field {k:?}")));
            }
            if fields.insert(k, v.trim()).is_some() {
                return Err(Error::Catalogue(format!("line {lineno}: repeated field {k:?}")));
            }
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| Error::Catalogue(format!("missing field {k:?}")));
        let name = get("name")?;
        let n: usize = get("n")?.parse().map_err(|_| Error::Catalogue(format!("{name}: bad n")))?;
        let d: u32 = get("d")?.parse().map_err(|_| Error::Catalogue(format!("{name}: bad d")))?;
        let f = parse_poly_with_nvars(get("f")?, n)?;
        let f_dual = parse_poly_with_nvars(get("fdual")?, n)?;
        let b0 = parse_rational(get("b0")?)?;
        let inst = PvsInstance::with_stored_b0(name, f, f_dual, b0)?;
        if inst.d != d {
            return Err(Error::Catalogue(format!("{name}: declared d = {d} but f has degree {}", inst.d)));
        }
        Ok(inst)
    }

    pub fn to_text(&self) -> String {
        self.instances.iter().map(|i| i.to_text()).collect::<Vec<_>>().join("\n")
    }

    pub fn get(&self, name: &str) -> Option<&PvsInstance> {
        self.instances.iter().find(|i| i.name == name)
    }
}

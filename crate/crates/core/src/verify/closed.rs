//! The closed form of `S(L)` for a catalogue instance.

use num_complex::Complex64;

use crate::catalogue::PvsInstance;
use crate::characters::{alpha_factor, AddChar, MultChar};
use crate::charsums::half_power;
use crate::error::{Error, Result};
use crate::multipoly::{loghessian_disc, CompiledPoly};
use crate::residue::{legendre, ResidueRing, SquareClass};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormParts {
    /// `sum_y chi^d(y) psi(y) / p^(m/2)`.
    pub gauss_like_normalized: Complex64,
    /// `b0 f_dual(L)^{-1} d^{-d}` mod `p^m`.
    pub chi_arg: u64,
    pub alpha: Complex64,
    pub kappa: i64,
    /// Square class of the log-Hessian discriminant of `f_dual` at `L`.
    pub h_class: SquareClass,
    /// `p^(mn/2)`.
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    Value { value: Complex64, parts: ClosedFormParts },
    /// `f_dual(L) = 0 mod p`, where the predicted value is 0.
    Vanishing,
}

impl ClosedForm {
    pub fn value(&self) -> Complex64 {
        match self {
            ClosedForm::Value { value, .. } => *value,
            ClosedForm::Vanishing => Complex64::new(0.0, 0.0),
        }
    }
}

/// Per-`(instance, chi, psi)` constants of the closed form.
#[derive(Debug, Clone)]
pub struct ClosedFormContext<'a> {
    pub inst: &'a PvsInstance,
    pub chi: MultChar,
    pub ring: ResidueRing,
    pub scale: f64,
    pub gauss_like_normalized: Complex64,
    pub alpha: Complex64,
    /// `d^{-d} b0` mod `p^m`.
    pub arg_const: u64,
    f_dual: CompiledPoly,
}

impl<'a> ClosedFormContext<'a> {
    /// Checks primitivity and `m >= 2`; the caller decides what to do about bad primes.
    pub fn new(inst: &'a PvsInstance, chi: &MultChar, psi: &AddChar) -> Result<Self> {
        let ring = chi.ring();
        if ring != psi.ring() {
            return Err(Error::RingMismatch { left: ring.to_string(), right: psi.ring().to_string() });
        }
        if ring.m() < 2 || !chi.is_primitive() || !psi.is_primitive() {
            return Err(Error::NotPrimitive);
        }
        if u64::from(inst.d) % ring.p() == 0 {
            return Err(Error::DegreeDivisible { p: ring.p(), d: inst.d });
        }
        let chi_d = chi.pow(u64::from(inst.d));
        let g: Complex64 = (0..ring.modulus()).map(|y| chi_d.eval(y) * psi.eval(y)).sum();
        let d_inv = ring.inverse_of(u64::from(inst.d) % ring.modulus())?;
        let arg_const = ring.mul(ring.pow(d_inv, u64::from(inst.d)), inst.b0_mod(ring)?);
        Ok(Self {
            inst,
            chi: chi.clone(),
            ring,
            scale: half_power(ring.p(), ring.m() * inst.n as u32),
            gauss_like_normalized: g / half_power(ring.p(), ring.m()),
            alpha: alpha_factor(chi)?,
            arg_const,
            f_dual: inst.f_dual.reduce(ring).compile(),
        })
    }

    /// `scale * G * alpha^(n-1)`, the part of the closed form that does not depend on `L`.
    pub fn constant_factor(&self) -> Complex64 {
        self.gauss_like_normalized * self.alpha.powu(self.inst.n as u32 - 1) * self.scale
    }

    /// `legendre(-d 2^(n-1) h)^m` for the class `h` of the log-Hessian at `L`.
    pub fn kappa_from_class(&self, h: SquareClass) -> i64 {
        let p = self.ring.p();
        let field = self.ring.residue_field();
        let c = field.mul(field.neg(u64::from(self.inst.d) % p), field.pow(2, self.inst.n as u64 - 1));
        legendre(c as i64, p).times(h).pow(self.ring.m()).sign()
    }

    pub fn eval(&self, l: &[u64]) -> Result<ClosedForm> {
        let ring = self.ring;
        if l.len() != self.inst.n {
            return Err(Error::ArityMismatch { expected: self.inst.n, got: l.len() });
        }
        let l: Vec<u64> = l.iter().map(|v| v % ring.modulus()).collect();
        let fd = self.f_dual.eval(&l);
        if !ring.is_unit(fd) {
            return Ok(ClosedForm::Vanishing);
        }
        let l_mod_p: Vec<u64> = l.iter().map(|v| v % ring.p()).collect();
        let h_class = loghessian_disc(&self.inst.f_dual, &l_mod_p, ring.p())?;
        let kappa = self.kappa_from_class(h_class);
        let chi_arg = ring.mul(self.arg_const, ring.inverse_of(fd)?);
        let value = self.constant_factor() * self.chi.eval(chi_arg) * kappa as f64;
        Ok(ClosedForm::Value {
            value,
            parts: ClosedFormParts {
                gauss_like_normalized: self.gauss_like_normalized,
                chi_arg,
                alpha: self.alpha,
                kappa,
                h_class,
                scale: self.scale,
            },
        })
    }
}

/// The closed form of `S(L)`; fails with `BadPrime` when the instance flags `p`.
pub fn closed_form_s(inst: &PvsInstance, chi: &MultChar, psi: &AddChar, l: &[u64]) -> Result<ClosedForm> {
    if inst.is_bad_prime(chi.ring().p()) {
        return Err(Error::BadPrime { instance: inst.name.clone(), p: chi.ring().p() });
    }
    ClosedFormContext::new(inst, chi, psi)?.eval(l)
}

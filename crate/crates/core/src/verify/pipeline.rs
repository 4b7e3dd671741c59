//! `S(L)` through three successive forms, for debugging a mismatch.

use num_complex::Complex64;

use super::closed::ClosedFormContext;
use crate::catalogue::PvsInstance;
use crate::characters::{AddChar, MultChar};
use crate::charsums::{first_unit_coordinate, SumEngine};
use crate::error::{Error, Result};
use crate::morse::{critical_points_sum_on, Chart};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineTrace {
    pub l: Vec<u64>,
    pub scale: f64,
    /// `sum_y chi^d(y) psi(y)`; `None` when no coordinate of `L` is a unit.
    pub gauss_like: Option<Complex64>,
    /// Gauss-type sum times the enumerated hyperplane sum.
    pub factorized: Complex64,
    /// Gauss-type sum times the critical-point evaluation of the hyperplane sum.
    pub critical: Complex64,
    /// Critical points on the hyperplane chart, in ambient coordinates mod `p^m`.
    pub critical_points: Vec<Vec<u64>>,
    /// `d^{-1} grad f_dual(L) / f_dual(L)` when `f_dual(L)` is a unit.
    pub dual_point: Option<Vec<u64>>,
    pub closed: Complex64,
}

impl PipelineTrace {
    /// `|factorized - critical|`, `|critical - closed|`, `|factorized - closed|`, divided by `p^(mn/2)`.
    pub fn deltas(&self) -> [f64; 3] {
        [
            (self.factorized - self.critical).norm() / self.scale,
            (self.critical - self.closed).norm() / self.scale,
            (self.factorized - self.closed).norm() / self.scale,
        ]
    }

    pub fn consistent(&self, tol: f64) -> bool {
        self.deltas().iter().all(|&d| d <= tol)
    }
}

pub fn pipeline_trace(inst: &PvsInstance, chi: &MultChar, psi: &AddChar, l: &[u64]) -> Result<PipelineTrace> {
    let ring = chi.ring();
    if inst.is_bad_prime(ring.p()) {
        return Err(Error::BadPrime { instance: inst.name.clone(), p: ring.p() });
    }
    let ctx = ClosedFormContext::new(inst, chi, psi)?;
    let closed = ctx.eval(l)?.value();
    let l: Vec<u64> = l.iter().map(|v| v % ring.modulus()).collect();
    let engine = SumEngine::default();
    let fact = engine.prop41_factorize(&inst.f, chi, psi, &l)?;
    let zero = Complex64::new(0.0, 0.0);
    let (critical, critical_points) = match (fact.gauss_like, first_unit_coordinate(ring, &l)) {
        (Some(g), Ok(_)) => {
            let cp = Chart::Hyperplane(l.clone()).restrict(&inst.f, ring)?;
            let cs = critical_points_sum_on(&cp, chi)?;
            let points = cs.points.iter().map(|pt| cp.to_ambient(&pt.cert.c)).collect();
            (g * cs.sum.value, points)
        }
        _ => (zero, Vec::new()),
    };
    let dual_point = inst.dual_gradient_point(&l, ring).ok();
    Ok(PipelineTrace {
        l,
        scale: ctx.scale,
        gauss_like: fact.gauss_like,
        factorized: fact.product.value,
        critical,
        critical_points,
        dual_point,
        closed,
    })
}

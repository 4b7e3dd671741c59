//! Nondegenerate critical points modulo `p^m`: Newton lifting, the
//! completing-the-square normal form `f(c) + sum a_i u_i^2`, and the
//! critical-point evaluation of `sum chi(f(x))` over a chart.

use num_complex::Complex64;
use serde::Serialize;

use crate::characters::{alpha_tilde_mult_closed, MultChar};
use crate::charsums::{first_unit_coordinate, PointIter, SumMethod, SumValue};
use crate::error::{Error, Result};
use crate::multipoly::{ModPoly, MultiPoly};
use crate::residue::{diagonalize_symmetric, legendre, ResidueRing, SquareClass};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriticalPointCert {
    pub ring: ResidueRing,
    /// The lifted critical point, canonical residues mod `p^m`.
    pub c: Vec<u64>,
    /// `v(d_i f(c))`, all equal to `m`.
    pub grad_valuations: Vec<u32>,
    /// `Delta(Hess f(c))` over `F_p`.
    pub hess_disc: SquareClass,
    pub f_at_c: u64,
    /// Newton steps taken.
    pub iterations: u32,
    /// Minimum gradient valuation before each step and after the last one.
    pub valuation_history: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MorseNormalForm {
    pub cert: CriticalPointCert,
    /// Diagonal units `a_i`.
    pub a: Vec<u64>,
    /// `u_i = T_i(y)` with `y = x - c`, truncated at total degree `m`.
    pub transform: Vec<ModPoly>,
}

impl MorseNormalForm {
    /// `f(x) - f(c) - sum a_i T_i(x - c)^2` at a point `x`.
    pub fn residual(&self, f: &ModPoly, x: &[u64]) -> u64 {
        let r = self.cert.ring;
        let y: Vec<u64> = x.iter().zip(&self.cert.c).map(|(&xi, &ci)| r.sub(xi % r.modulus(), ci)).collect();
        let quad = self.a.iter().zip(&self.transform).fold(0u64, |acc, (&ai, t)| {
            let u = t.eval(&y);
            r.add(acc, r.mul(ai, r.mul(u, u)))
        });
        r.sub(r.sub(f.eval(x), self.cert.f_at_c), quad)
    }

    /// Square class of `prod a_i`.
    pub fn diagonal_class(&self) -> SquareClass {
        let r = self.cert.ring;
        let prod = self.a.iter().fold(1u64, |acc, &a| r.mul(acc, a));
        legendre((prod % r.p()) as i64, r.p())
    }
}

fn min_valuation(ring: ResidueRing, v: &[u64]) -> u32 {
    v.iter().map(|&x| ring.valuation_of(x)).min().unwrap_or(ring.m())
}

fn eval_matrix(h: &[Vec<ModPoly>], x: &[u64]) -> Vec<Vec<u64>> {
    h.iter().map(|row| row.iter().map(|e| e.eval(x)).collect()).collect()
}

/// Solve `A z = b` mod `p^m` for `A` invertible mod `p`.
fn solve_unit_pivot(ring: ResidueRing, mut a: Vec<Vec<u64>>, mut b: Vec<u64>) -> Result<Vec<u64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| ring.is_unit(a[r][col])).ok_or(Error::DegenerateCritical)?;
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = ring.inverse_of(a[col][col])?;
        for r in 0..n {
            if r != col && a[r][col] != 0 {
                let factor = ring.mul(a[r][col], inv);
                for k in col..n {
                    a[r][k] = ring.sub(a[r][k], ring.mul(factor, a[col][k]));
                }
                b[r] = ring.sub(b[r], ring.mul(factor, b[col]));
            }
        }
    }
    Ok((0..n).map(|i| ring.mul(b[i], ring.inverse_of(a[i][i]).expect("unit pivot"))).collect())
}

fn hessian_disc_mod_p(h: &[Vec<ModPoly>], x: &[u64], p: u64) -> Result<(SquareClass, usize)> {
    let m = eval_matrix(h, x);
    let diag = diagonalize_symmetric(&m, p)?;
    Ok((diag.disc, diag.rank()))
}

/// Newton-lift the critical residue `cbar` of `g` to a critical point mod `p^m`.
pub fn lift_critical_point_mod(g: &ModPoly, cbar: &[u64]) -> Result<CriticalPointCert> {
    let ring = g.ring();
    let n = g.nvars();
    if cbar.len() != n {
        return Err(Error::ArityMismatch { expected: n, got: cbar.len() });
    }
    let grad = g.gradient();
    let hess = g.hessian();
    let mut c: Vec<u64> = cbar.iter().map(|&v| v % ring.modulus()).collect();
    let gv: Vec<u64> = grad.iter().map(|d| d.eval(&c)).collect();
    if gv.iter().any(|&v| v % ring.p() != 0) {
        return Err(Error::Invalid(format!("{cbar:?} is not a critical residue modulo {}", ring.p())));
    }
    let (hess_disc, rank) = hessian_disc_mod_p(&hess, &c, ring.p())?;
    if rank < n {
        return Err(Error::DegenerateCritical);
    }
    let mut history = vec![min_valuation(ring, &gv)];
    let mut iterations = 0;
    let mut gv = gv;
    while *history.last().unwrap() < ring.m() {
        let step = solve_unit_pivot(ring, eval_matrix(&hess, &c), gv)?;
        for (ci, si) in c.iter_mut().zip(step) {
            *ci = ring.sub(*ci, si);
        }
        iterations += 1;
        gv = grad.iter().map(|d| d.eval(&c)).collect();
        history.push(min_valuation(ring, &gv));
        if iterations > 64 {
            return Err(Error::Invalid("Newton iteration did not converge".into()));
        }
    }
    Ok(CriticalPointCert {
        ring,
        grad_valuations: gv.iter().map(|&v| ring.valuation_of(v)).collect(),
        f_at_c: g.eval(&c),
        c,
        hess_disc,
        iterations,
        valuation_history: history,
    })
}

/// [`lift_critical_point_mod`] for an integer polynomial reduced into `ring`.
pub fn lift_critical_point(f: &MultiPoly, cbar: &[u64], ring: ResidueRing) -> Result<CriticalPointCert> {
    lift_critical_point_mod(&f.reduce(ring), cbar)
}

/// Split `g = sum_{i,j} y_i y_j h_ij(y)` with `h` symmetric; `g` has no terms of degree < 2.
fn symmetric_split(g: &ModPoly) -> Vec<Vec<ModPoly>> {
    let ring = g.ring();
    let n = g.nvars();
    let half = ring.inverse_of(2).expect("p is odd");
    let mut h = vec![vec![ModPoly::zero(ring, n); n]; n];
    for (e, &coef) in g.terms() {
        let mut rest = e.clone();
        let i = rest.iter().position(|&k| k > 0).expect("degree >= 2");
        rest[i] -= 1;
        let j = rest.iter().position(|&k| k > 0).expect("degree >= 2");
        rest[j] -= 1;
        let mono = ModPoly::from_terms(ring, n, [(rest, 1)]);
        if i == j {
            h[i][i] = h[i][i].add(&mono.scale(coef));
        } else {
            let t = mono.scale(ring.mul(coef, half));
            h[i][j] = h[i][j].add(&t);
            h[j][i] = h[j][i].add(&t);
        }
    }
    h
}

/// Normal form of `g` near the critical residue `cbar`: `g(c + y) = g(c) + sum a_i T_i(y)^2`
/// for all `y` in `(pZ/p^m)^n`.
pub fn morse_normal_form_mod(g: &ModPoly, cbar: &[u64]) -> Result<MorseNormalForm> {
    let cert = lift_critical_point_mod(g, cbar)?;
    let ring = g.ring();
    let n = g.nvars();
    // Degrees >= m vanish on (pZ)^n, but the quadratic part must survive even for m = 2.
    let deg = ring.m().max(3);
    let shifted = g.shift(&cert.c).add_constant(ring.neg(cert.f_at_c)).truncate(deg);
    let mut h = symmetric_split(&shifted);
    let mut u: Vec<ModPoly> = (0..n).map(|i| ModPoly::var(ring, n, i)).collect();
    let mut a = Vec::with_capacity(n);
    for r in 0..n {
        // pivot with a unit constant term
        let pivot = (r..n).find(|&i| ring.is_unit(h[i][i].constant_term()));
        let pivot = match pivot {
            Some(i) => i,
            None => {
                let (i, j) = (r..n)
                    .flat_map(|i| (r..n).map(move |j| (i, j)))
                    .find(|&(i, j)| i != j && ring.is_unit(h[i][j].constant_term()))
                    .ok_or(Error::DegenerateCritical)?;
                // u'_j = u_j - u_i; H <- M^T H M with M e_i = e_i + e_j
                u[j] = u[j].sub(&u[i]);
                for row in h.iter_mut() {
                    row[i] = row[i].add(&row[j]);
                }
                let row_j = h[j].clone();
                for (k, entry) in h[i].iter_mut().enumerate() {
                    *entry = entry.add(&row_j[k]);
                }
                i
            }
        };
        if pivot != r {
            u.swap(r, pivot);
            h.swap(r, pivot);
            for row in h.iter_mut() {
                row.swap(r, pivot);
            }
        }
        let hrr = h[r][r].clone();
        let ar = hrr.constant_term();
        let inv_hrr = hrr.inverse_trunc(deg)?;
        let scale = hrr.scale(ring.inverse_of(ar)?).sqrt_trunc(1, deg)?;
        let mut lin = u[r].clone();
        for i in r + 1..n {
            lin = lin.add(&u[i].mul_trunc(&h[i][r].mul_trunc(&inv_hrr, deg), deg));
        }
        let v = scale.mul_trunc(&lin, deg);
        let col: Vec<ModPoly> = (0..n).map(|i| h[i][r].clone()).collect();
        for i in r + 1..n {
            for j in r + 1..n {
                let corr = col[i].mul_trunc(&col[j], deg).mul_trunc(&inv_hrr, deg);
                h[i][j] = h[i][j].sub(&corr).truncate(deg);
            }
        }
        u[r] = v;
        a.push(ar);
    }
    Ok(MorseNormalForm { cert, a, transform: u })
}

pub fn morse_normal_form(f: &MultiPoly, cbar: &[u64], ring: ResidueRing) -> Result<MorseNormalForm> {
    morse_normal_form_mod(&f.reduce(ring), cbar)
}

/// Points of `(Z/p^2)^n` above `cbar` where the gradient vanishes mod `p^2`.
pub fn critical_points_mod_p2(g: &ModPoly, cbar: &[u64]) -> Result<Vec<Vec<u64>>> {
    let ring = g.ring();
    let p = ring.p();
    let r2 = ResidueRing::new(p, 2)?;
    let g2 = g.reduce_to(r2)?;
    let grad: Vec<_> = g2.gradient().iter().map(|d| d.compile()).collect();
    let n = g.nvars();
    let mut out = Vec::new();
    let mut it = PointIter::new(p, n, 0..p.pow(n as u32));
    while let Some(t) = it.next_point() {
        let x: Vec<u64> = cbar.iter().zip(t).map(|(&c, &ti)| (c % p + p * ti) % r2.modulus()).collect();
        if grad.iter().all(|d| d.eval(&x) == 0) {
            out.push(x);
        }
    }
    Ok(out)
}

/// The domain on which a critical-point sum is taken.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Chart {
    AffineSpace,
    /// `{x : L(x) = 1}`, parametrized by solving for the first unit coefficient of `L`.
    Hyperplane(Vec<u64>),
}

impl Chart {
    /// `f` pulled back to chart coordinates, with the chart map.
    pub fn restrict(&self, f: &MultiPoly, ring: ResidueRing) -> Result<ChartPoly> {
        let fr = f.reduce(ring);
        match self {
            Chart::AffineSpace => {
                let n = f.nvars();
                let embedding = (0..n).map(|i| ModPoly::var(ring, n, i)).collect();
                Ok(ChartPoly { g: fr, embedding })
            }
            Chart::Hyperplane(l) => {
                let i0 = first_unit_coordinate(ring, l)?;
                Self::hyperplane_on(f, ring, l, i0)
            }
        }
    }

    /// Hyperplane chart solved for coordinate `i0`.
    pub fn hyperplane_on(f: &MultiPoly, ring: ResidueRing, l: &[u64], i0: usize) -> Result<ChartPoly> {
        let n = f.nvars();
        if l.len() != n {
            return Err(Error::ArityMismatch { expected: n, got: l.len() });
        }
        if i0 >= n || !ring.is_unit(l[i0] % ring.modulus()) {
            return Err(Error::NoUnitCoefficient);
        }
        let d = n - 1;
        let inv = ring.inverse_of(l[i0] % ring.modulus())?;
        let mut embedding = Vec::with_capacity(n);
        let mut k = 0;
        let free: Vec<usize> = (0..n).filter(|&j| j != i0).collect();
        for j in 0..n {
            if j == i0 {
                // x_i0 = L_i0^{-1} (1 - sum_{j != i0} L_j y_j)
                let mut e = ModPoly::constant(ring, d, 1);
                for (slot, &jj) in free.iter().enumerate() {
                    e = e.sub(&ModPoly::var(ring, d, slot).scale(l[jj] % ring.modulus()));
                }
                embedding.push(e.scale(inv));
            } else {
                embedding.push(ModPoly::var(ring, d, k));
                k += 1;
            }
        }
        let g = f.reduce(ring).substitute_trunc(&embedding, u32::MAX);
        Ok(ChartPoly { g, embedding })
    }
}

/// A polynomial in chart coordinates with the map back to `x`.
#[derive(Debug, Clone)]
pub struct ChartPoly {
    pub g: ModPoly,
    pub embedding: Vec<ModPoly>,
}

impl ChartPoly {
    pub fn dim(&self) -> usize {
        self.g.nvars()
    }

    pub fn to_ambient(&self, y: &[u64]) -> Vec<u64> {
        self.embedding.iter().map(|e| e.eval(y)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalContribution {
    pub residue: Vec<u64>,
    pub cert: CriticalPointCert,
    /// `2^{-d} Delta(Hess)` at the critical point.
    pub h_class: SquareClass,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalSum {
    pub sum: SumValue,
    pub dim: usize,
    pub points: Vec<CriticalContribution>,
}

/// `sum_{x in chart} chi(f(x))` from the critical points of `f` on the chart.
pub fn critical_points_sum(f: &MultiPoly, chi: &MultChar, chart: &Chart) -> Result<CriticalSum> {
    let ring = chi.ring();
    if ring.m() < 2 || !chi.is_primitive() {
        return Err(Error::NotPrimitive);
    }
    let cp = chart.restrict(f, ring)?;
    critical_points_sum_on(&cp, chi)
}

/// [`critical_points_sum`] for an already restricted chart polynomial.
pub fn critical_points_sum_on(cp: &ChartPoly, chi: &MultChar) -> Result<CriticalSum> {
    let ring = chi.ring();
    let p = ring.p();
    let g = &cp.g;
    let d = g.nvars();
    let grad: Vec<_> = g.gradient().iter().map(|x| x.compile()).collect();
    let alpha = alpha_tilde_mult_closed(chi)?;
    let two_inv_class = legendre(ring.residue_field().inverse_of(2)? as i64, p).pow(d as u32);
    let mut points = Vec::new();
    let mut total = Complex64::new(0.0, 0.0);
    let mut it = PointIter::new(p, d, 0..p.pow(d as u32));
    let gc = g.compile();
    while let Some(y) = it.next_point() {
        if !grad.iter().all(|dg| dg.eval(y) % p == 0) || gc.eval(y).is_multiple_of(p) {
            continue;
        }
        let cert = match lift_critical_point_mod(g, y) {
            Ok(c) => c,
            Err(Error::DegenerateCritical) => {
                return Err(Error::DegenerateCriticalFound { p, point: cp.to_ambient(y) })
            }
            Err(e) => return Err(e),
        };
        let h_class = two_inv_class.times(cert.hess_disc);
        let fc = cert.f_at_c;
        let sign = legendre(ring.residue_field().pow(fc % p, d as u64) as i64, p).times(h_class).pow(ring.m());
        let value = chi.eval(fc) * sign.sign() as f64 * alpha.powu(d as u32);
        total += value;
        points.push(CriticalContribution { residue: y.to_vec(), cert, h_class, value });
    }
    let n_points = points.len() as u64;
    Ok(CriticalSum { sum: SumValue { value: total, terms_counted: n_points, method: SumMethod::ClosedForm }, dim: d, points })
}

/// First critical residue mod `p` with `g` a unit there and a singular Hessian mod `p`.
pub fn find_degenerate_critical(cp: &ChartPoly) -> Option<Vec<u64>> {
    let g = &cp.g;
    let p = g.ring().p();
    let d = g.nvars();
    let grad: Vec<_> = g.gradient().iter().map(|x| x.compile()).collect();
    let hess = g.hessian();
    let gc = g.compile();
    let mut it = PointIter::new(p, d, 0..p.pow(d as u32));
    while let Some(y) = it.next_point() {
        if !grad.iter().all(|dg| dg.eval(y) % p == 0) || gc.eval(y).is_multiple_of(p) {
            continue;
        }
        match hessian_disc_mod_p(&hess, y, p) {
            Ok((_, rank)) if rank == d => {}
            _ => return Some(cp.to_ambient(y)),
        }
    }
    None
}

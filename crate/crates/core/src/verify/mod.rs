//! End-to-end comparison of brute-force `S(L)` against the closed form.
//!
//! Sampled and listed `L` are summed directly, one task per `(chi, L)`.
//! The `all` policy transforms the whole grid per character, and derives
//! the transform of `conj(chi)` from that of `chi`.

mod closed;
mod pipeline;
mod report;

use std::collections::BTreeSet;
use std::time::Instant;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use closed::{closed_form_s, ClosedForm, ClosedFormContext, ClosedFormParts};
pub use pipeline::{pipeline_trace, PipelineTrace};
pub use report::{fmt_sig, LRecord, ParsevalEntry, Status, Summary, VerifyReport};

use crate::catalogue::PvsInstance;
use crate::characters::{AddChar, MultChar};
use crate::charsums::{BufferPool, DlogGrid, FullTransform, PointIter, SumEngine, CHUNK_SIZE, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::multipoly::loghessian_disc;
use crate::residue::ResidueRing;

/// Default relative tolerance, against `p^(mn/2)`.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Records kept for the `all` policy (mismatches only).
pub const DEFAULT_RECORD_CAP: usize = 1000;

/// Largest grid on which a sampled run still computes the Parseval record.
const PARSEVAL_GRID_LIMIT: u64 = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LPolicy {
    All,
    Sample(usize),
    List(Vec<Vec<u64>>),
}

impl LPolicy {
    /// `all`, `sample:K`, or `list:1,2;3,4`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "all" {
            return Ok(LPolicy::All);
        }
        if let Some(k) = s.strip_prefix("sample:") {
            let k = k.parse().map_err(|_| Error::Parse(format!("bad sample size {k:?}")))?;
            return Ok(LPolicy::Sample(k));
        }
        if let Some(list) = s.strip_prefix("list:") {
            let points = list
                .split(';')
                .filter(|p| !p.trim().is_empty())
                .map(|p| p.split(',').map(|v| v.trim().parse::<u64>()).collect::<std::result::Result<Vec<_>, _>>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("bad point list {list:?}: {e}")))?;
            return Ok(LPolicy::List(points));
        }
        Err(Error::Parse(format!("unknown L policy {s:?} (expected all, sample:K or list:...)")))
    }

    pub fn describe(&self) -> String {
        match self {
            LPolicy::All => "all".into(),
            LPolicy::Sample(k) => format!("sample:{k}"),
            LPolicy::List(ls) => format!("list:{}", format_points(ls)),
        }
    }
}

fn format_points(ls: &[Vec<u64>]) -> String {
    ls.iter()
        .map(|l| l.iter().map(u64::to_string).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChiPolicy {
    /// Every primitive character.
    All,
    /// `K` distinct primitive characters chosen with the run seed.
    Sample(usize),
    List(Vec<u64>),
}

impl ChiPolicy {
    /// `all`, `sample:K`, or a comma-separated list of indices.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "all" {
            return Ok(ChiPolicy::All);
        }
        if let Some(k) = s.strip_prefix("sample:") {
            let k = k.parse().map_err(|_| Error::Parse(format!("bad sample size {k:?}")))?;
            return Ok(ChiPolicy::Sample(k));
        }
        let ks = s
            .split(',')
            .map(|v| v.trim().parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("bad character list {s:?}: {e}")))?;
        Ok(ChiPolicy::List(ks))
    }

    fn resolve(&self, ring: ResidueRing, seed: u64) -> Result<Vec<MultChar>> {
        let all = MultChar::primitive_characters(ring);
        match self {
            ChiPolicy::All => Ok(all),
            ChiPolicy::Sample(k) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x63686973);
                let mut picked: Vec<MultChar> = all.choose_multiple(&mut rng, *k).cloned().collect();
                picked.sort_by_key(MultChar::index);
                Ok(picked)
            }
            ChiPolicy::List(ks) => ks
                .iter()
                .map(|&k| {
                    let chi = MultChar::new(ring, k)?;
                    if chi.is_primitive() {
                        Ok(chi)
                    } else {
                        Err(Error::NotPrimitive)
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub p: u64,
    pub m: u32,
    pub l_policy: LPolicy,
    pub chi_policy: ChiPolicy,
    pub psi_twist: u64,
    pub seed: u64,
    pub budget: u64,
    pub tol: f64,
    /// Worker count; falls back to `PHVS_THREADS`, then to the global pool.
    pub threads: Option<usize>,
    pub record_cap: usize,
    /// How to name the instance in replay commands (a catalogue name or a file).
    pub instance_source: Option<String>,
}

impl VerifyConfig {
    pub fn new(p: u64, m: u32) -> Self {
        Self {
            p,
            m,
            l_policy: LPolicy::Sample(16),
            chi_policy: ChiPolicy::All,
            psi_twist: 1,
            seed: 0,
            budget: DEFAULT_BUDGET,
            tol: DEFAULT_TOL,
            threads: None,
            record_cap: DEFAULT_RECORD_CAP,
            instance_source: None,
        }
    }
}

/// Worker count from `PHVS_THREADS`, if set to a positive integer.
pub fn env_threads() -> Option<usize> {
    std::env::var("PHVS_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs `f` on a pool of `threads` workers, or on the global pool when `None`.
pub fn with_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Invalid(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn point_at(mut idx: u64, q: u64, n: usize) -> Vec<u64> {
    let mut l = vec![0; n];
    for slot in l.iter_mut().rev() {
        *slot = idx % q;
        idx /= q;
    }
    l
}

fn classify(brute: Complex64, closed: &ClosedForm, bound: f64) -> Status {
    match closed {
        ClosedForm::Vanishing if brute.norm() <= bound => Status::VanishMatch,
        ClosedForm::Value { value, .. } if (brute - value).norm() <= bound => Status::Match,
        _ => Status::Mismatch,
    }
}

/// Angle between `a` and `b` in `[0, pi]`.
fn phase_between(a: Complex64, b: Complex64) -> f64 {
    let z = a * b.conj();
    z.im.abs().atan2(z.re)
}

pub fn verify_instance(inst: &PvsInstance, cfg: &VerifyConfig) -> Result<VerifyReport> {
    let threads = cfg.threads.or_else(env_threads);
    with_pool(threads, || verify_in_pool(inst, cfg))?
}

fn verify_in_pool(inst: &PvsInstance, cfg: &VerifyConfig) -> Result<VerifyReport> {
    let start = Instant::now();
    let ring = ResidueRing::new(cfg.p, cfg.m)?;
    if cfg.m < 2 {
        return Err(Error::NotPrimitive);
    }
    let chis = cfg.chi_policy.resolve(ring, cfg.seed)?;
    let psi = AddChar::new(ring, (cfg.psi_twist % ring.modulus()) as i64);
    if !psi.is_primitive() {
        return Err(Error::NotPrimitive);
    }
    let scale = crate::charsums::half_power(cfg.p, cfg.m * inst.n as u32);
    let mut report = VerifyReport::new(inst, cfg, &chis, scale);
    report.bad_prime = inst.is_bad_prime(cfg.p);

    let q = ring.modulus();
    let grid_size = (q as u128).checked_pow(inst.n as u32).unwrap_or(u128::MAX);
    if grid_size > u128::from(cfg.budget) {
        report.error = Some(Error::BudgetExceeded { needed: grid_size, budget: cfg.budget }.to_string());
        report.finish(start);
        return Ok(report);
    }

    let result = match &cfg.l_policy {
        LPolicy::All => verify_all(inst, cfg, ring, &chis, &psi, &mut report),
        LPolicy::Sample(k) => {
            let ls = sample_points(q, inst.n, *k, cfg.seed);
            verify_points(inst, cfg, ring, &chis, &psi, &ls, &mut report)
        }
        LPolicy::List(ls) => {
            for l in ls {
                if l.len() != inst.n {
                    return Err(Error::ArityMismatch { expected: inst.n, got: l.len() });
                }
            }
            let ls: Vec<Vec<u64>> = ls.iter().map(|l| l.iter().map(|v| v % q).collect()).collect();
            verify_points(inst, cfg, ring, &chis, &psi, &ls, &mut report)
        }
    };
    if let Err(e) = result {
        match e {
            Error::BudgetExceeded { .. } => report.error = Some(e.to_string()),
            e => return Err(e),
        }
    }
    if report.parseval.is_none() && !report.bad_prime && grid_size <= u128::from(PARSEVAL_GRID_LIMIT.min(cfg.budget)) {
        if let Some(chi) = chis.first() {
            let grid = DlogGrid::new(&inst.f, ring, cfg.budget)?;
            let full = grid.transform(chi, psi.twist())?;
            report.parseval = Some(ParsevalEntry::from_transform(chi.index(), &full, &grid, cfg.p, cfg.m, inst.n));
        }
    }
    report.summary.candidate_bad_prime = report.summary.mismatched > 0 && !report.bad_prime;
    report.finish(start);
    Ok(report)
}

/// `k` distinct points of `(Z/q)^n`, or all of them when there are at most `k`.
fn sample_points(q: u64, n: usize, k: usize, seed: u64) -> Vec<Vec<u64>> {
    let total = (q as u128).pow(n as u32);
    if total <= k as u128 {
        return (0..total as u64).map(|i| point_at(i, q, n)).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let l: Vec<u64> = (0..n).map(|_| rng.gen_range(0..q)).collect();
        if seen.insert(l.clone()) {
            out.push(l);
        }
    }
    out
}

fn verify_points(
    inst: &PvsInstance,
    cfg: &VerifyConfig,
    ring: ResidueRing,
    chis: &[MultChar],
    psi: &AddChar,
    ls: &[Vec<u64>],
    report: &mut VerifyReport,
) -> Result<()> {
    let bound = cfg.tol * report.scale;
    let fd = inst.f_dual.reduce(ring).compile();
    if report.bad_prime {
        for chi in chis {
            for l in ls {
                report.push_record(LRecord::skipped(chi.index(), l.clone(), ring.valuation_of(fd.eval(l))));
            }
        }
        return Ok(());
    }
    let contexts: Vec<ClosedFormContext> =
        chis.iter().map(|chi| ClosedFormContext::new(inst, chi, psi)).collect::<Result<_>>()?;
    let engine = SumEngine::new(cfg.budget);
    let tasks: Vec<(usize, &Vec<u64>)> = (0..chis.len()).flat_map(|i| ls.iter().map(move |l| (i, l))).collect();
    let records: Vec<LRecord> = tasks
        .par_iter()
        .map(|&(i, l)| -> Result<LRecord> {
            let chi = &chis[i];
            let brute = engine.fourier_sum(&inst.f, chi, psi, l)?.value;
            let fdual_valuation = ring.valuation_of(fd.eval(l));
            Ok(match contexts[i].eval(l) {
                Ok(closed) => LRecord::compared(chi.index(), l.clone(), fdual_valuation, brute, &closed, bound),
                Err(e) => LRecord::failed(chi.index(), l.clone(), fdual_valuation, brute, e.to_string()),
            })
        })
        .collect::<Result<_>>()?;
    for r in records {
        report.push_record(r);
    }
    Ok(())
}

/// Closed-form data that depends on `L` but not on `chi`.
struct GridClosedData {
    /// `log_g(d^-d b0 f_dual(L)^{-1})`, or `NO_LOG` when `f_dual(L)` is not a unit.
    arg_log: Vec<u32>,
    /// `legendre(-d 2^(n-1) h(L))^m` as `+-1`; `0` when the log-Hessian is singular at a unit `L`.
    kappa_sign: Vec<i8>,
    fdual_valuation: Vec<u8>,
}

const NO_LOG: u32 = u32::MAX;

fn grid_closed_data(inst: &PvsInstance, ctx: &ClosedFormContext) -> GridClosedData {
    let ring = ctx.ring;
    let p = ring.p();
    let q = ring.modulus();
    let n = inst.n;
    let phi = ring.phi();
    // the log-Hessian class only depends on L mod p
    let field_points = p.pow(n as u32);
    let kappa_mod_p: Vec<i8> = (0..field_points)
        .into_par_iter()
        .map(|i| {
            let l = point_at(i, p, n);
            match loghessian_disc(&inst.f_dual, &l, p) {
                Ok(h) => ctx.kappa_from_class(h) as i8,
                Err(_) => 0,
            }
        })
        .collect();
    let tables = ctx.chi.tables().clone();
    let const_log = tables.dlog(ctx.arg_const).expect("d^{-d} b0 is a unit at a good prime");
    let fd = inst.f_dual.reduce(ring).compile();
    let total = q.pow(n as u32);
    let chunks: Vec<(Vec<u32>, Vec<i8>, Vec<u8>)> = (0..total.div_ceil(CHUNK_SIZE))
        .into_par_iter()
        .map(|c| {
            let range = c * CHUNK_SIZE..((c + 1) * CHUNK_SIZE).min(total);
            let len = (range.end - range.start) as usize;
            let (mut logs, mut kap, mut val) = (Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len));
            let mut it = PointIter::new(q, n, range);
            while let Some(l) = it.next_point() {
                let v = fd.eval(l);
                let valuation = ring.valuation_of(v);
                val.push(valuation as u8);
                if valuation == 0 {
                    let j = tables.dlog(v).expect("unit");
                    logs.push(((phi - j + const_log) % phi) as u32);
                    let idx_p = l.iter().fold(0u64, |acc, &x| acc * p + x % p);
                    kap.push(kappa_mod_p[idx_p as usize]);
                } else {
                    logs.push(NO_LOG);
                    kap.push(0);
                }
            }
            (logs, kap, val)
        })
        .collect();
    let mut data = GridClosedData { arg_log: Vec::new(), kappa_sign: Vec::new(), fdual_valuation: Vec::new() };
    for (a, b, c) in chunks {
        data.arg_log.extend(a);
        data.kappa_sign.extend(b);
        data.fdual_valuation.extend(c);
    }
    data
}

/// Per-chunk tallies of the all-`L` comparison.
#[derive(Default)]
struct Tally {
    matched: u64,
    vanish_matched: u64,
    mismatched: Vec<u64>,
    max_err_sq: f64,
    max_sin_sq: f64,
    phase_flipped: bool,
    max_mag_dev: f64,
}

fn compare_all(
    ctx: &ClosedFormContext,
    data: &GridClosedData,
    full: &FullTransform,
    bound: f64,
) -> Tally {
    let ring = ctx.ring;
    let phi = ring.phi();
    let k = ctx.chi.index();
    let tables = ctx.chi.tables().clone();
    let constant = ctx.constant_factor();
    // closed form before kappa, indexed by the log of its character argument
    let closed_by_log: Vec<Complex64> = (0..phi).map(|j| constant * tables.unit_root(k * j % phi)).collect();
    let scale = ctx.scale;
    let values = full.values();
    let bound_sq = bound * bound;
    let inv_scale_sq = 1.0 / (scale * scale);
    let total = values.len() as u64;
    let chunks: Vec<Tally> = (0..total.div_ceil(CHUNK_SIZE))
        .into_par_iter()
        .map(|c| {
            let mut t = Tally::default();
            for i in c * CHUNK_SIZE..((c + 1) * CHUNK_SIZE).min(total) {
                let brute = values[i as usize];
                let log = data.arg_log[i as usize];
                if log == NO_LOG {
                    if brute.norm_sqr() <= bound_sq {
                        t.vanish_matched += 1;
                    } else {
                        t.mismatched.push(i);
                    }
                    continue;
                }
                let kappa = data.kappa_sign[i as usize];
                if kappa == 0 {
                    t.mismatched.push(i);
                    continue;
                }
                let closed = closed_by_log[log as usize] * f64::from(kappa);
                let err_sq = (brute - closed).norm_sqr();
                t.max_err_sq = t.max_err_sq.max(err_sq);
                if err_sq <= bound_sq {
                    t.matched += 1;
                } else {
                    t.mismatched.push(i);
                }
                let z = brute * closed.conj();
                let nz = z.norm_sqr();
                if nz > 0.0 {
                    if z.re <= 0.0 {
                        t.phase_flipped = true;
                    }
                    // divide only when the running maximum moves
                    if z.im * z.im > t.max_sin_sq * nz {
                        t.max_sin_sq = z.im * z.im / nz;
                    }
                }
                let mag = brute.norm_sqr() * inv_scale_sq;
                t.max_mag_dev = t.max_mag_dev.max((mag - 1.0).abs());
            }
            t
        })
        .collect();
    let mut out = Tally::default();
    for t in chunks {
        out.matched += t.matched;
        out.vanish_matched += t.vanish_matched;
        out.mismatched.extend(t.mismatched);
        out.max_err_sq = out.max_err_sq.max(t.max_err_sq);
        out.max_sin_sq = out.max_sin_sq.max(t.max_sin_sq);
        out.phase_flipped |= t.phase_flipped;
        out.max_mag_dev = out.max_mag_dev.max(t.max_mag_dev);
    }
    out
}

fn verify_all(
    inst: &PvsInstance,
    cfg: &VerifyConfig,
    ring: ResidueRing,
    chis: &[MultChar],
    psi: &AddChar,
    report: &mut VerifyReport,
) -> Result<()> {
    let q = ring.modulus();
    let total = q.pow(inst.n as u32);
    if report.bad_prime {
        report.summary.total += total * chis.len() as u64;
        report.summary.skipped += total * chis.len() as u64;
        return Ok(());
    }
    let grid = DlogGrid::new(&inst.f, ring, cfg.budget)?;
    let Some(first) = chis.first() else { return Ok(()) };
    let data = grid_closed_data(inst, &ClosedFormContext::new(inst, first, psi)?);
    let bound = cfg.tol * report.scale;
    let wanted: BTreeSet<u64> = chis.iter().map(MultChar::index).collect();
    let mut done = BTreeSet::new();
    let mut pool = BufferPool::default();
    for chi in chis {
        if done.contains(&chi.index()) {
            continue;
        }
        let full = grid.transform_with(chi, psi.twist(), &mut pool)?;
        if report.parseval.is_none() {
            report.parseval = Some(ParsevalEntry::from_transform(chi.index(), &full, &grid, cfg.p, cfg.m, inst.n));
        }
        let conj = chi.conj();
        let mut batch = vec![(chi.clone(), full)];
        if conj.index() != chi.index() && wanted.contains(&conj.index()) {
            let derived = batch[0].1.conjugate_character_with(&mut pool);
            batch.push((conj, derived));
        }
        for (c, full) in batch {
            done.insert(c.index());
            let ctx = ClosedFormContext::new(inst, &c, psi)?;
            let tally = compare_all(&ctx, &data, &full, bound);
            report.absorb_tally(
                total,
                tally.matched,
                tally.vanish_matched,
                tally.max_err_sq.sqrt(),
                if tally.phase_flipped { std::f64::consts::PI } else { tally.max_sin_sq.sqrt().asin() },
                tally.max_mag_dev,
            );
            for &i in &tally.mismatched {
                let l = point_at(i, q, inst.n);
                let brute = full.values()[i as usize];
                let valuation = u32::from(data.fdual_valuation[i as usize]);
                let record = match ctx.eval(&l) {
                    Ok(closed) => LRecord::compared(c.index(), l, valuation, brute, &closed, bound),
                    Err(e) => LRecord::failed(c.index(), l, valuation, brute, e.to_string()),
                };
                report.summary.mismatched += 1;
                report.keep_record(record, cfg.record_cap);
            }
            full.recycle(&mut pool);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalogue::Catalogue;

    #[test]
    fn policies_parse() {
        assert_eq!(LPolicy::parse("all").unwrap(), LPolicy::All);
        assert_eq!(LPolicy::parse("sample:12").unwrap(), LPolicy::Sample(12));
        assert_eq!(LPolicy::parse("list:1,2;3,4").unwrap(), LPolicy::List(vec![vec![1, 2], vec![3, 4]]));
        assert_eq!(LPolicy::parse("list:1,2;3,4").unwrap().describe(), "list:1,2;3,4");
        assert!(LPolicy::parse("some").is_err());
        assert_eq!(ChiPolicy::parse("1,3").unwrap(), ChiPolicy::List(vec![1, 3]));
        assert_eq!(ChiPolicy::parse("sample:4").unwrap(), ChiPolicy::Sample(4));
    }

    #[test]
    fn hyperbola_all_and_sampled_agree() {
        let cat = Catalogue::builtin();
        let inst = cat.get("hyperbola").unwrap();
        let mut cfg = VerifyConfig::new(5, 2);
        cfg.l_policy = LPolicy::All;
        let all = verify_instance(inst, &cfg).unwrap();
        assert_eq!(all.summary.total, 625 * 16);
        assert_eq!(all.summary.mismatched, 0);
        assert_eq!(all.summary.matched + all.summary.vanish_matched, all.summary.total);
        let pv = all.parseval.as_ref().unwrap();
        assert!((pv.lhs - 250_000.0).abs() < 1e-6 && pv.rhs == 250_000.0 && pv.n1 == 400);

        cfg.l_policy = LPolicy::Sample(10);
        cfg.chi_policy = ChiPolicy::List(vec![1, 19]);
        let sampled = verify_instance(inst, &cfg).unwrap();
        assert_eq!(sampled.records.len(), 20);
        assert_eq!(sampled.summary.mismatched, 0);
        assert!(sampled.exit_ok());
    }

    #[test]
    fn odd_level_and_p_3_mod_4() {
        let cat = Catalogue::builtin();
        for name in ["quadric-2", "quadric-3", "square", "det2"] {
            let inst = cat.get(name).unwrap();
            let mut cfg = VerifyConfig::new(7, 3);
            cfg.chi_policy = ChiPolicy::Sample(2);
            cfg.l_policy = LPolicy::Sample(3);
            if inst.n > 2 {
                cfg.m = 2;
            }
            let r = verify_instance(inst, &cfg).unwrap();
            assert_eq!(r.summary.mismatched, 0, "{name}: {}", r.to_json(false));
        }
    }

    #[test]
    fn bad_prime_is_skipped() {
        let cube = PvsInstance::new(
            "cube",
            crate::multipoly::parse_poly("x^3").unwrap(),
            crate::multipoly::parse_poly("y^3").unwrap(),
        )
        .unwrap();
        let mut cfg = VerifyConfig::new(3, 2);
        cfg.l_policy = LPolicy::Sample(4);
        let r = verify_instance(&cube, &cfg).unwrap();
        assert!(r.bad_prime);
        assert!(r.records.iter().all(|rec| rec.status == Status::SkippedBadPrime));
        assert!(r.exit_ok());
    }

    #[test]
    fn budget_is_reported() {
        let cat = Catalogue::builtin();
        let mut cfg = VerifyConfig::new(5, 2);
        cfg.budget = 100;
        let r = verify_instance(cat.get("hyperbola").unwrap(), &cfg).unwrap();
        assert!(r.error.as_deref().unwrap().contains("budget"));
        assert!(!r.exit_ok());
    }

    #[test]
    fn report_is_thread_count_independent() {
        let cat = Catalogue::builtin();
        let inst = cat.get("quadric-2").unwrap();
        let mut cfg = VerifyConfig::new(5, 2);
        cfg.chi_policy = ChiPolicy::List(vec![1, 3]);
        cfg.threads = Some(1);
        let a = verify_instance(inst, &cfg).unwrap().to_json(false);
        cfg.threads = Some(3);
        let b = verify_instance(inst, &cfg).unwrap().to_json(false);
        assert_eq!(a, b);
        cfg.l_policy = LPolicy::All;
        let a = verify_instance(inst, &cfg).unwrap().to_json(false);
        cfg.threads = Some(1);
        let b = verify_instance(inst, &cfg).unwrap().to_json(false);
        assert_eq!(a, b);
    }
}

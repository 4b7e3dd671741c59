//! Verification records and their JSON / CSV renderings.
//!
//! Floats are written as decimal strings with 15 significant digits and
//! object keys keep a fixed order, so two runs compare byte for byte.

use std::fmt::Write as _;
use std::time::Instant;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use super::{format_points, phase_between, ClosedForm, VerifyConfig};
use crate::catalogue::PvsInstance;
use crate::characters::MultChar;
use crate::charsums::{half_power, DlogGrid, FullTransform};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Match,
    VanishMatch,
    Mismatch,
    SkippedBadPrime,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Match => "MATCH",
            Status::VanishMatch => "VANISH_MATCH",
            Status::Mismatch => "MISMATCH",
            Status::SkippedBadPrime => "SKIPPED_BAD_PRIME",
        }
    }
}

/// `x` as a decimal string with 15 significant digits.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (14 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new leading digit
    if s.chars().filter(char::is_ascii_digit).skip_while(|&c| c == '0').count() > 15 && decimals > 0 {
        return format!("{x:.*}", decimals.saturating_sub(1));
    }
    s
}

fn num(x: f64) -> Value {
    Value::String(fmt_sig(x))
}

fn cnum(z: Complex64) -> Value {
    json!({ "re": fmt_sig(z.re), "im": fmt_sig(z.im) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LRecord {
    pub chi: u64,
    pub l: Vec<u64>,
    /// `v_p(f_dual(L))`, capped at `m`.
    pub fdual_valuation: u32,
    pub brute: Option<Complex64>,
    /// `None` when the closed form predicts 0 or could not be evaluated.
    pub closed: Option<Complex64>,
    pub abs_err: Option<f64>,
    pub phase_residual: Option<f64>,
    pub status: Status,
    pub note: Option<String>,
}

impl LRecord {
    pub(super) fn compared(
        chi: u64,
        l: Vec<u64>,
        fdual_valuation: u32,
        brute: Complex64,
        closed: &ClosedForm,
        bound: f64,
    ) -> Self {
        let status = super::classify(brute, closed, bound);
        let (closed_value, phase) = match closed {
            ClosedForm::Value { value, .. } => (Some(*value), Some(phase_between(brute, *value))),
            ClosedForm::Vanishing => (None, None),
        };
        LRecord {
            chi,
            l,
            fdual_valuation,
            brute: Some(brute),
            closed: closed_value,
            abs_err: Some((brute - closed.value()).norm()),
            phase_residual: phase,
            status,
            note: None,
        }
    }

    pub(super) fn failed(chi: u64, l: Vec<u64>, fdual_valuation: u32, brute: Complex64, why: String) -> Self {
        LRecord {
            chi,
            l,
            fdual_valuation,
            brute: Some(brute),
            closed: None,
            abs_err: None,
            phase_residual: None,
            status: Status::Mismatch,
            note: Some(why),
        }
    }

    pub(super) fn skipped(chi: u64, l: Vec<u64>, fdual_valuation: u32) -> Self {
        LRecord {
            chi,
            l,
            fdual_valuation,
            brute: None,
            closed: None,
            abs_err: None,
            phase_residual: None,
            status: Status::SkippedBadPrime,
            note: None,
        }
    }

    fn to_json(&self) -> Value {
        let mut o = Map::new();
        o.insert("chi".into(), json!(self.chi));
        o.insert("L".into(), json!(self.l));
        o.insert("fdual_valuation".into(), json!(self.fdual_valuation));
        o.insert("brute".into(), self.brute.map_or(Value::Null, cnum));
        o.insert("closed".into(), self.closed.map_or(Value::Null, cnum));
        o.insert("abs_err".into(), self.abs_err.map_or(Value::Null, num));
        o.insert("phase_residual".into(), self.phase_residual.map_or(Value::Null, num));
        o.insert("status".into(), json!(self.status.as_str()));
        if let Some(note) = &self.note {
            o.insert("note".into(), json!(note));
        }
        Value::Object(o)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub total: u64,
    pub matched: u64,
    pub vanish_matched: u64,
    pub mismatched: u64,
    pub skipped: u64,
    /// Largest `|brute - closed| / p^(mn/2)` over compared `L` with a unit `f_dual(L)`.
    pub max_rel_err: f64,
    /// Largest angle between brute and closed values.
    pub max_phase_residual: f64,
    /// Largest `| |S(L)|^2 / p^(mn) - 1 |` over `L` with a unit `f_dual(L)`.
    pub max_magnitude_dev: f64,
    /// Mismatches at a prime the instance does not flag.
    pub candidate_bad_prime: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsevalEntry {
    pub chi: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub n1: u64,
    pub method: &'static str,
}

impl ParsevalEntry {
    pub(super) fn from_transform(chi: u64, full: &FullTransform, grid: &DlogGrid, p: u64, m: u32, n: usize) -> Self {
        let n1 = grid.unit_count();
        ParsevalEntry { chi, lhs: full.energy(), rhs: half_power(p, 2 * m * n as u32) * n1 as f64, n1, method: "transform" }
    }

    pub fn relative_error(&self) -> f64 {
        if self.rhs == 0.0 {
            self.lhs.abs()
        } else {
            (self.lhs - self.rhs).abs() / self.rhs
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub instance: String,
    pub instance_source: String,
    pub p: u64,
    pub m: u32,
    pub n: usize,
    pub psi_twist: u64,
    pub l_policy: String,
    pub seed: u64,
    pub chi: Vec<u64>,
    pub tolerance: f64,
    pub scale: f64,
    pub bad_prime: bool,
    pub summary: Summary,
    pub records: Vec<LRecord>,
    pub records_truncated: bool,
    pub parseval: Option<ParsevalEntry>,
    pub replay: Vec<String>,
    pub error: Option<String>,
    pub timing_ms: f64,
}

impl VerifyReport {
    pub(super) fn new(inst: &PvsInstance, cfg: &VerifyConfig, chis: &[MultChar], scale: f64) -> Self {
        VerifyReport {
            instance: inst.name.clone(),
            instance_source: cfg.instance_source.clone().unwrap_or_else(|| inst.name.clone()),
            p: cfg.p,
            m: cfg.m,
            n: inst.n,
            psi_twist: cfg.psi_twist,
            l_policy: cfg.l_policy.describe(),
            seed: cfg.seed,
            chi: chis.iter().map(MultChar::index).collect(),
            tolerance: cfg.tol,
            scale,
            bad_prime: false,
            summary: Summary::default(),
            records: Vec::new(),
            records_truncated: false,
            parseval: None,
            replay: Vec::new(),
            error: None,
            timing_ms: 0.0,
        }
    }

    fn count(&mut self, r: &LRecord) {
        let s = &mut self.summary;
        s.total += 1;
        match r.status {
            Status::Match => s.matched += 1,
            Status::VanishMatch => s.vanish_matched += 1,
            Status::Mismatch => s.mismatched += 1,
            Status::SkippedBadPrime => s.skipped += 1,
        }
        if let (Some(b), Some(c)) = (r.brute, r.closed) {
            s.max_rel_err = s.max_rel_err.max((b - c).norm() / self.scale);
            s.max_phase_residual = s.max_phase_residual.max(phase_between(b, c));
            s.max_magnitude_dev = s.max_magnitude_dev.max((b.norm_sqr() / (self.scale * self.scale) - 1.0).abs());
        }
    }

    /// Counts a record and keeps it.
    pub(super) fn push_record(&mut self, r: LRecord) {
        self.count(&r);
        self.add_replay(&r);
        self.records.push(r);
    }

    /// Keeps an already counted mismatch, up to `cap` records.
    pub(super) fn keep_record(&mut self, r: LRecord, cap: usize) {
        if self.records.len() >= cap {
            self.records_truncated = true;
            return;
        }
        self.add_replay(&r);
        self.records.push(r);
    }

    fn add_replay(&mut self, r: &LRecord) {
        if r.status == Status::Mismatch && self.replay.len() < 32 {
            self.replay.push(format!(
                "phvs verify --instance {} --p {} --m {} --chi {} --psi {} --L-policy list:{}",
                self.instance_source,
                self.p,
                self.m,
                r.chi,
                self.psi_twist,
                format_points(std::slice::from_ref(&r.l))
            ));
        }
    }

    pub(super) fn absorb_tally(
        &mut self,
        total: u64,
        matched: u64,
        vanish_matched: u64,
        max_abs_err: f64,
        max_phase: f64,
        max_mag_dev: f64,
    ) {
        let s = &mut self.summary;
        s.total += total;
        s.matched += matched;
        s.vanish_matched += vanish_matched;
        s.max_rel_err = s.max_rel_err.max(max_abs_err / self.scale);
        s.max_phase_residual = s.max_phase_residual.max(max_phase);
        s.max_magnitude_dev = s.max_magnitude_dev.max(max_mag_dev);
    }

    pub(super) fn finish(&mut self, start: Instant) {
        self.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    }

    /// No mismatches and no error.
    pub fn exit_ok(&self) -> bool {
        self.summary.mismatched == 0 && self.error.is_none()
    }

    /// Two-space indented JSON; `include_timing = false` gives a reproducible document.
    pub fn to_json(&self, include_timing: bool) -> String {
        let mut o = Map::new();
        o.insert("instance".into(), json!(self.instance));
        o.insert("p".into(), json!(self.p));
        o.insert("m".into(), json!(self.m));
        o.insert("n".into(), json!(self.n));
        o.insert("chi".into(), json!(self.chi));
        o.insert("psi_twist".into(), json!(self.psi_twist));
        o.insert("L_policy".into(), json!(self.l_policy));
        o.insert("seed".into(), json!(self.seed));
        o.insert("tolerance".into(), num(self.tolerance));
        o.insert("scale".into(), num(self.scale));
        o.insert("bad_prime".into(), json!(self.bad_prime));
        let s = &self.summary;
        let mut sm = Map::new();
        sm.insert("total".into(), json!(s.total));
        sm.insert("match".into(), json!(s.matched));
        sm.insert("vanish_match".into(), json!(s.vanish_matched));
        sm.insert("mismatch".into(), json!(s.mismatched));
        sm.insert("skipped_bad_prime".into(), json!(s.skipped));
        sm.insert("max_rel_err".into(), num(s.max_rel_err));
        sm.insert("max_phase_residual".into(), num(s.max_phase_residual));
        sm.insert("max_magnitude_dev".into(), num(s.max_magnitude_dev));
        sm.insert("candidate_bad_prime".into(), json!(s.candidate_bad_prime));
        o.insert("summary".into(), Value::Object(sm));
        o.insert("records".into(), Value::Array(self.records.iter().map(LRecord::to_json).collect()));
        o.insert("records_truncated".into(), json!(self.records_truncated));
        o.insert(
            "parseval".into(),
            self.parseval.as_ref().map_or(Value::Null, |pv| {
                let mut m = Map::new();
                m.insert("chi".into(), json!(pv.chi));
                m.insert("lhs".into(), num(pv.lhs));
                m.insert("rhs".into(), num(pv.rhs));
                m.insert("n1".into(), json!(pv.n1));
                m.insert("rel_err".into(), num(pv.relative_error()));
                m.insert("method".into(), json!(pv.method));
                Value::Object(m)
            }),
        );
        o.insert("replay".into(), json!(self.replay));
        o.insert("error".into(), self.error.as_ref().map_or(Value::Null, |e| json!(e)));
        if include_timing {
            o.insert("timing_ms".into(), num(self.timing_ms));
        }
        let mut out = serde_json::to_string_pretty(&Value::Object(o)).expect("report serializes");
        out.push('\n');
        out
    }

    /// One line per kept record.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("instance,p,m,chi,psi_twist,L,fdual_valuation,brute_re,brute_im,closed_re,closed_im,abs_err,phase_residual,status\n");
        let opt = |x: Option<f64>| x.map_or(String::new(), fmt_sig);
        for r in &self.records {
            let l = r.l.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                self.instance,
                self.p,
                self.m,
                r.chi,
                self.psi_twist,
                l,
                r.fdual_valuation,
                opt(r.brute.map(|z| z.re)),
                opt(r.brute.map(|z| z.im)),
                opt(r.closed.map(|z| z.re)),
                opt(r.closed.map(|z| z.im)),
                opt(r.abs_err),
                opt(r.phase_residual),
                r.status.as_str()
            );
        }
        out
    }
}

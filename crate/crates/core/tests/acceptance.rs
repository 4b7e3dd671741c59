//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with a plain `main` so the lines print without `--nocapture`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phvs_core::catalogue::{Catalogue, PvsInstance};
use phvs_core::characters::{alpha_tilde_mult_brute, alpha_tilde_mult_closed, AddChar, MultChar};
use phvs_core::charsums::{crt_composite_sum, half_power, quadratic_closed_form, CompositeChar, SumEngine};
use phvs_core::morse::{critical_points_mod_p2, morse_normal_form_mod, Chart, ChartPoly};
use phvs_core::multipoly::{parse_poly, MultiPoly};
use phvs_core::residue::{legendre, ResidueRing};
use phvs_core::verify::{pipeline_trace, verify_instance, ChiPolicy, LPolicy, Status, VerifyConfig, VerifyReport};

struct Outcome {
    pass: bool,
    detail: String,
    /// Stated time budget for the criterion, if any.
    budget: Option<Duration>,
}

fn ring(p: u64, m: u32) -> ResidueRing {
    ResidueRing::new(p, m).unwrap()
}

fn unit_l(ring: ResidueRing, n: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    loop {
        let l: Vec<u64> = (0..n).map(|_| rng.gen_range(0..ring.modulus())).collect();
        if l.iter().any(|&v| ring.is_unit(v)) {
            return l;
        }
    }
}

/// Full sweep over every `L` and every primitive character.
fn criterion_1(cat: &Catalogue, reports: &mut Vec<VerifyReport>) -> Outcome {
    let mut failures = Vec::new();
    let mut records = 0u64;
    let engine = SumEngine::default();
    for name in ["linear", "square", "hyperbola"] {
        let inst = cat.get(name).unwrap();
        for p in [5u64, 7, 13] {
            for m in [2u32, 3] {
                let mut cfg = VerifyConfig::new(p, m);
                cfg.l_policy = LPolicy::All;
                cfg.chi_policy = ChiPolicy::All;
                let r = verify_instance(inst, &cfg).unwrap();
                let r_ring = ring(p, m);
                let expected = r_ring.modulus().pow(inst.n as u32) * MultChar::primitive_characters(r_ring).len() as u64;
                records += r.summary.total;
                if r.bad_prime || r.summary.mismatched > 0 || r.error.is_some() || r.summary.total != expected {
                    failures.push(format!("{name} p={p} m={m}: {} mismatches", r.summary.mismatched));
                }
                // the grid route against direct enumeration at a few L
                let mut rng = ChaCha8Rng::seed_from_u64(p * 10 + u64::from(m));
                let chis = MultChar::primitive_characters(r_ring);
                let psi = AddChar::new(r_ring, 1);
                for _ in 0..3 {
                    let l = unit_l(r_ring, inst.n, &mut rng);
                    let chi = &chis[rng.gen_range(0..chis.len())];
                    let direct = engine.fourier_sum(&inst.f, chi, &psi, &l).unwrap().value;
                    let mut one = VerifyConfig::new(p, m);
                    one.l_policy = LPolicy::List(vec![l.clone()]);
                    one.chi_policy = ChiPolicy::List(vec![chi.index()]);
                    let rec = &verify_instance(inst, &one).unwrap().records[0];
                    let via_closed = rec.closed.unwrap_or_default();
                    if (direct - via_closed).norm() > 1e-9 * r.scale {
                        failures.push(format!("{name} p={p} m={m} L={l:?}: direct sum disagrees"));
                    }
                }
                reports.push(r);
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() { format!("{records} (chi, L) records, all MATCH/VANISH_MATCH") } else { failures.join("; ") },
        budget: Some(Duration::from_secs(120)),
    }
}

fn criterion_2_config(inst: &PvsInstance, p: u64, threads: Option<usize>) -> VerifyConfig {
    let mut cfg = VerifyConfig::new(p, 2);
    cfg.l_policy = LPolicy::Sample(50);
    cfg.chi_policy = ChiPolicy::Sample(8);
    cfg.seed = 2024;
    cfg.threads = threads;
    cfg.instance_source = Some(inst.name.clone());
    cfg
}

fn criterion_2_runs(cat: &Catalogue, threads: Option<usize>) -> Vec<VerifyReport> {
    let mut out = Vec::new();
    for name in ["quadric-2", "quadric-3", "det2"] {
        let inst = cat.get(name).unwrap();
        for p in [3u64, 5] {
            out.push(verify_instance(inst, &criterion_2_config(inst, p, threads)).unwrap());
        }
    }
    out
}

fn criterion_2(cat: &Catalogue, reports: &mut Vec<VerifyReport>) -> Outcome {
    let runs = criterion_2_runs(cat, None);
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    for r in &runs {
        let tag = format!("{} p={}", r.instance, r.p);
        if r.error.is_some() {
            failures.push(format!("{tag}: {}", r.error.as_deref().unwrap()));
        } else if r.bad_prime {
            notes.push(format!("{tag} flagged bad"));
        } else if r.summary.mismatched > 0 {
            if r.p == 3 && r.summary.candidate_bad_prime {
                notes.push(format!("{tag} candidate bad prime ({} mismatches)", r.summary.mismatched));
            } else {
                failures.push(format!("{tag}: {} mismatches", r.summary.mismatched));
            }
        }
    }
    let total: u64 = runs.iter().map(|r| r.summary.total).sum();
    reports.extend(runs);
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            let extra = if notes.is_empty() { String::new() } else { format!(" [{}]", notes.join("; ")) };
            format!("{total} records over 6 configurations{extra}")
        } else {
            failures.join("; ")
        },
        budget: Some(Duration::from_secs(600)),
    }
}

fn criterion_3(reports: &[VerifyReport]) -> Outcome {
    let matched: u64 = reports.iter().map(|r| r.summary.matched).sum();
    let worst = reports.iter().map(|r| r.summary.max_phase_residual).fold(0.0, f64::max);
    let per_record_ok = reports
        .iter()
        .flat_map(|r| &r.records)
        .filter(|rec| rec.status == Status::Match)
        .all(|rec| rec.phase_residual.unwrap_or(f64::INFINITY) <= 1e-8);
    let magnitude = reports.iter().map(|r| r.summary.max_magnitude_dev).fold(0.0, f64::max);
    Outcome {
        pass: matched > 0 && worst <= 1e-8 && per_record_ok && magnitude <= 2e-6,
        detail: format!("{matched} MATCH records, max phase residual {worst:.3e} rad, max |S|^2 deviation {magnitude:.3e}"),
        budget: None,
    }
}

/// Random polynomial with `nvars <= 3`, total degree `<= 4`, coefficients in `[-9, 9]`.
fn random_poly(rng: &mut ChaCha8Rng) -> MultiPoly {
    let n = rng.gen_range(1..=3usize);
    loop {
        let nterms = rng.gen_range(1..=6);
        let terms: Vec<(Vec<u32>, BigInt)> = (0..nterms)
            .map(|_| {
                let deg = rng.gen_range(0..=4u32);
                let mut e = vec![0u32; n];
                for _ in 0..deg {
                    e[rng.gen_range(0..n)] += 1;
                }
                (e, BigInt::from(rng.gen_range(-9..=9i64)))
            })
            .collect();
        let f = MultiPoly::from_terms(n, terms).unwrap();
        if !f.is_zero() {
            return f;
        }
    }
}

fn criterion_4() -> Outcome {
    let engine = SumEngine::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let corpus: Vec<MultiPoly> = (0..100).map(|_| random_poly(&mut rng)).collect();
    let mut failures = Vec::new();
    let mut checks = 0;
    for (i, f) in corpus.iter().enumerate() {
        for (p, m) in [(5u64, 2u32), (5, 3), (7, 2), (7, 3)] {
            let r = ring(p, m);
            let tol = 1e-9 * half_power(p, m * f.nvars() as u32);
            let chis = MultChar::primitive_characters(r);
            let chi = &chis[i % chis.len()];
            let psi = AddChar::new(r, 1 + (i as i64 % (p as i64 - 1)));
            let mult = (engine.brute_sum(f, chi).unwrap().value - engine.filtered_sum(f, chi).unwrap().value).norm();
            let add = (engine.brute_sum_additive(f, &psi).unwrap().value
                - engine.filtered_sum_additive(f, &psi).unwrap().value)
                .norm();
            checks += 2;
            if mult > tol || add > tol {
                failures.push(format!("poly #{i} ({f}) p={p} m={m}"));
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() { format!("{checks} filtered/brute comparisons") } else { failures.join("; ") },
        budget: Some(Duration::from_secs(120)),
    }
}

fn criterion_5() -> Outcome {
    let mut failures = Vec::new();
    let mut count = 0;
    for p in [5u64, 7, 13] {
        for m in [2u32, 3, 4] {
            let r = ring(p, m);
            let tol = 1e-10 * half_power(p, m);
            for chi in MultChar::primitive_characters(r) {
                let brute = alpha_tilde_mult_brute(&chi).unwrap();
                let closed = alpha_tilde_mult_closed(&chi).unwrap();
                // the stated values: p^(m/2), or p^((m-1)/2) times a Gauss sum of modulus sqrt(p)
                let magnitude_ok = (closed.norm() - half_power(p, m)).abs() <= tol;
                let even_ok = m % 2 == 1 || (closed - Complex64::new(half_power(p, m), 0.0)).norm() <= tol;
                count += 1;
                if (brute - closed).norm() > tol || !magnitude_ok || !even_ok {
                    failures.push(format!("p={p} m={m} chi_{}", chi.index()));
                }
            }
        }
    }
    let engine = SumEngine::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for t in 0..200 {
        let (p, m) = [(5u64, 2u32), (7, 2), (5, 3), (7, 3)][t % 4];
        let r = ring(p, m);
        let n = if m == 2 { rng.gen_range(1..=3usize) } else { rng.gen_range(1..=2usize) };
        let a: Vec<u64> = (0..=n)
            .map(|_| loop {
                let v = rng.gen_range(1..r.modulus());
                if r.is_unit(v) {
                    break v;
                }
            })
            .collect();
        let chis = MultChar::primitive_characters(r);
        let chi = &chis[rng.gen_range(0..chis.len())];
        let mut f = MultiPoly::constant(n, BigInt::from(a[0]));
        for (i, &ai) in a[1..].iter().enumerate() {
            let term = MultiPoly::var(n, i).pow(2).scale(&BigInt::from(ai));
            f = f.add(&term).unwrap();
        }
        let closed = quadratic_closed_form(&a, chi).unwrap().value;
        let brute = engine.brute_sum(&f, chi).unwrap().value;
        if (closed - brute).norm() > 1e-9 * half_power(p, m * n as u32) {
            failures.push(format!("quadratic a={a:?} p={p} m={m}"));
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{count} characters, 200 quadratic tuples")
        } else {
            failures.iter().take(10).cloned().collect::<Vec<_>>().join("; ")
        },
        budget: None,
    }
}

/// Normal forms at every unit-valued critical point of the chart; returns
/// (normal forms, points tested, failures).
fn morse_checks(label: &str, cp: &ChartPoly, ring: ResidueRing, rng: &mut ChaCha8Rng, failures: &mut Vec<String>) -> (usize, usize) {
    let p = ring.p();
    let g = &cp.g;
    let d = g.nvars();
    let mut forms = 0;
    let mut points = 0;
    let grad: Vec<_> = g.gradient();
    let budget = m_log2_ceil(ring.m()) + 1;
    for idx in 0..p.pow(d as u32) {
        let y: Vec<u64> = (0..d).rev().map(|k| idx / p.pow(k as u32) % p).collect();
        if grad.iter().any(|dg| dg.eval(&y) % p != 0) || g.eval(&y).is_multiple_of(p) {
            continue;
        }
        let nf = match morse_normal_form_mod(g, &y) {
            Ok(nf) => nf,
            Err(e) => {
                failures.push(format!("{label} at {y:?}: {e}"));
                continue;
            }
        };
        forms += 1;
        if nf.cert.iterations > budget {
            failures.push(format!("{label}: {} Newton steps", nf.cert.iterations));
        }
        let two_inv = legendre(ring.residue_field().inverse_of(2).unwrap() as i64, p).pow(d as u32);
        if nf.diagonal_class() != two_inv.times(nf.cert.hess_disc) {
            failures.push(format!("{label}: sign coherence at {y:?}"));
        }
        for _ in 0..500 {
            let x: Vec<u64> = nf.cert.c.iter().map(|&c| ring.add(c, p * rng.gen_range(0..ring.p_pow(ring.m() - 1)))).collect();
            points += 1;
            if nf.residual(g, &x) != 0 {
                failures.push(format!("{label}: residual at {x:?}"));
                break;
            }
        }
        if p == 5 {
            match critical_points_mod_p2(g, &y) {
                Ok(v) if v.len() == 1 => {}
                other => failures.push(format!("{label}: {:?} critical points mod p^2 in the disc of {y:?}", other.map(|v| v.len()))),
            }
        }
    }
    (forms, points)
}

fn m_log2_ceil(m: u32) -> u32 {
    32 - (m.max(1) - 1).leading_zeros()
}

fn criterion_6(cat: &Catalogue) -> Outcome {
    let mut failures = Vec::new();
    let mut forms = 0;
    let mut points = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (p, m) in [(5u64, 2u32), (5, 3), (7, 2), (7, 3)] {
        let r = ring(p, m);
        for inst in &cat.instances {
            if inst.n < 2 {
                continue;
            }
            for l in inst.sample_unit_points(r, 3, 6) {
                let cp = Chart::Hyperplane(l.clone()).restrict(&inst.f, r).unwrap();
                let (f, pt) = morse_checks(&format!("{} p={p} m={m} L={l:?}", inst.name), &cp, r, &mut rng, &mut failures);
                forms += f;
                points += pt;
            }
        }
        for s in ["x^2 + x^3", "2*x1*x2", "x1^2 + x2^2 + 5*x1", "x1^2 - 3*x1*x2 + 2*x2^2 + x1^3 + x3^2 + 1"] {
            let f = parse_poly(s).unwrap();
            let cp = Chart::AffineSpace.restrict(&f.add(&MultiPoly::constant(f.nvars(), BigInt::from(1))).unwrap(), r).unwrap();
            let (f, pt) = morse_checks(&format!("{s} p={p} m={m}"), &cp, r, &mut rng, &mut failures);
            forms += f;
            points += pt;
        }
    }
    Outcome {
        pass: failures.is_empty() && forms > 0,
        detail: if failures.is_empty() {
            format!("{forms} normal forms, {points} residual points, all exact")
        } else {
            failures.iter().take(10).cloned().collect::<Vec<_>>().join("; ")
        },
        budget: None,
    }
}

fn criterion_7(cat: &Catalogue) -> Outcome {
    let engine = SumEngine::default();
    let mut failures = Vec::new();
    let mut traces = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for name in ["hyperbola", "quadric-2"] {
        let inst = cat.get(name).unwrap();
        for p in [5u64, 7] {
            let r = ring(p, 2);
            let tol = 1e-9 * half_power(p, 2 * inst.n as u32);
            let psi = AddChar::new(r, 1);
            let chis = MultChar::primitive_characters(r);
            for _ in 0..12 {
                let chi = &chis[rng.gen_range(0..chis.len())];
                let l = unit_l(r, inst.n, &mut rng);
                let fact = engine.prop41_factorize(&inst.f, chi, &psi, &l).unwrap().product.value;
                let direct = engine.fourier_sum(&inst.f, chi, &psi, &l).unwrap().value;
                if (fact - direct).norm() > tol {
                    failures.push(format!("{name} p={p} L={l:?}: factorization"));
                }
            }
            for l in inst.sample_unit_points(r, 12, 7) {
                let chi = &chis[rng.gen_range(0..chis.len())];
                let t = pipeline_trace(inst, chi, &psi, &l).unwrap();
                traces += 1;
                if !t.consistent(1e-9) {
                    failures.push(format!("{name} p={p} L={l:?}: stages {:?}", t.deltas()));
                }
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() { format!("48 factorizations, {traces} three-stage traces") } else { failures.join("; ") },
        budget: None,
    }
}

fn criterion_8(cat: &Catalogue) -> Outcome {
    let engine = SumEngine::default();
    let r = ring(5, 2);
    let psi = AddChar::new(r, 1);
    let mut worst = 0.0f64;
    let mut count = 0;
    for name in ["linear", "hyperbola"] {
        let inst = cat.get(name).unwrap();
        for chi in MultChar::primitive_characters(r) {
            let rec = engine.parseval_check(&inst.f, &chi, &psi).unwrap();
            worst = worst.max(rec.relative_error());
            count += 1;
        }
    }
    Outcome {
        pass: worst <= 1e-6,
        detail: format!("{count} direct double loops, max relative error {worst:.3e}"),
        budget: Some(Duration::from_secs(60)),
    }
}

fn criterion_9() -> Outcome {
    let engine = SumEngine::default();
    let mut failures = Vec::new();
    for n in [15u64, 45, 175] {
        for (s, l) in [("x", vec![1u64]), ("x^2", vec![2]), ("x1*x2", vec![1, 3])] {
            let f = parse_poly(s).unwrap();
            let g = CompositeChar::from_modulus(n, None).unwrap();
            let cmp = crt_composite_sum(&engine, &f, &g, &l).unwrap();
            if cmp.abs_diff() > 1e-10 * (n as f64).powi(f.nvars() as i32) {
                failures.push(format!("N={n} f={s}: {:.3e}", cmp.abs_diff()));
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() { "9 composite sums equal their local products".into() } else { failures.join("; ") },
        budget: Some(Duration::from_secs(10)),
    }
}

fn criterion_10(cat: &Catalogue) -> Outcome {
    let render = |threads| criterion_2_runs(cat, Some(threads)).iter().map(|r| r.to_json(false)).collect::<Vec<_>>();
    let one = render(1);
    let four = render(4);
    let eight = render(8);
    let same = one == four && one == eight;
    Outcome {
        pass: same,
        detail: format!("{} reports compared across 1, 4 and 8 workers", one.len()),
        budget: None,
    }
}

fn main() -> ExitCode {
    let cat = Catalogue::builtin();
    let mut reports = Vec::new();
    let mut all_pass = true;
    let mut run = |id: u32, title: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let out = f();
        let elapsed = start.elapsed();
        let timing = match out.budget {
            Some(b) if elapsed > b => format!("{:.1}s, over the {}s target", elapsed.as_secs_f64(), b.as_secs()),
            _ => format!("{:.1}s", elapsed.as_secs_f64()),
        };
        println!("criterion {id:>2} {} {title}: {} ({timing})", if out.pass { "PASS" } else { "FAIL" }, out.detail);
        all_pass &= out.pass;
    };
    run(1, "full sweep", &mut || criterion_1(&cat, &mut reports));
    run(2, "sampled sweep", &mut || criterion_2(&cat, &mut reports));
    run(3, "phase law", &mut || criterion_3(&reports));
    run(4, "gradient filter", &mut criterion_4);
    run(5, "quadratic sums", &mut criterion_5);
    run(6, "Morse suite", &mut || criterion_6(&cat));
    run(7, "factorization pipeline", &mut || criterion_7(&cat));
    run(8, "Parseval", &mut || criterion_8(&cat));
    run(9, "CRT", &mut criterion_9);
    run(10, "determinism", &mut || criterion_10(&cat));
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

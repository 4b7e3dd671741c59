use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use phvs_core::catalogue::{compute_b0, Catalogue, PvsInstance};
use phvs_core::characters::{AddChar, MultChar};
use phvs_core::charsums::{crt_composite_sum, CompositeChar, SumEngine, SumValue, DEFAULT_BUDGET};
use phvs_core::morse::morse_normal_form;
use phvs_core::multipoly::parse_poly;
use phvs_core::residue::ResidueRing;
use phvs_core::verify::{
    env_threads, fmt_sig, pipeline_trace, verify_instance, with_pool, ChiPolicy, LPolicy, VerifyConfig,
};

#[derive(Parser)]
#[command(name = "phvs", version, about = "Character sums over Z/p^m and their closed forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one character sum by enumeration.
    Sum {
        #[arg(long)]
        f: String,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        m: u32,
        /// Multiplicative character index; omit for the additive sum of psi(f(x)).
        #[arg(long)]
        chi: Option<u64>,
        /// Additive twist t.
        #[arg(long, default_value_t = 1)]
        psi: i64,
        /// Linear form `c1,..,cn`; gives `sum chi(f(x)) psi(L.x)`.
        #[arg(long = "L", value_name = "C1,..,CN")]
        l: Option<String>,
        /// Restrict to near-critical points.
        #[arg(long)]
        filtered: bool,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Compare brute-force sums with the closed form for a catalogue instance.
    Verify {
        /// Catalogue name, or a file in catalogue format.
        #[arg(long)]
        instance: String,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        m: u32,
        #[arg(long = "L-policy", default_value = "sample:16")]
        l_policy: String,
        /// `all`, `sample:K`, or indices `k1,k2,..`.
        #[arg(long, default_value = "all")]
        chi: String,
        #[arg(long, default_value_t = 1)]
        psi: u64,
        /// Same as `--L-policy list:...`.
        #[arg(long = "L", value_name = "POINTS")]
        l: Option<String>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = phvs_core::verify::DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Lift a critical residue and put the polynomial in Morse normal form.
    Morse {
        #[arg(long)]
        f: String,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        m: u32,
        /// Critical residue mod p, `c1,..,cn`.
        #[arg(long)]
        at: String,
    },
    /// List or check the instance catalogue.
    Catalogue {
        #[command(subcommand)]
        action: CatalogueAction,
    },
    /// Compare a sum mod odd N with the product of its prime-power parts.
    Crt {
        #[arg(long = "N")]
        n: u64,
        #[arg(long)]
        f: String,
        /// One character index per prime factor.
        #[arg(long)]
        chi: Option<String>,
        #[arg(long = "L", value_name = "C1,..,CN")]
        l: Option<String>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Show the factorized, critical-point and closed forms of one S(L).
    Trace {
        #[arg(long)]
        instance: String,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        chi: u64,
        #[arg(long, default_value_t = 1)]
        psi: i64,
        #[arg(long = "L", value_name = "C1,..,CN")]
        l: String,
    },
}

#[derive(Subcommand)]
enum CatalogueAction {
    /// Print every instance.
    List {
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Re-derive b0, flag bad primes and check the critical-value identity.
    Check {
        #[arg(long)]
        file: Option<PathBuf>,
        /// Primes to examine.
        #[arg(long, default_value = "3,5,7,11,13")]
        primes: String,
    },
}

fn parse_list(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .filter(|v| !v.trim().is_empty())
        .map(|v| v.trim().parse::<u64>().with_context(|| format!("bad integer {v:?}")))
        .collect()
}

fn print_value(label: &str, v: &SumValue) {
    println!(
        "{label} = ({}, {})  |S| = {}, terms = {}, method = {:?}",
        fmt_sig(v.value.re),
        fmt_sig(v.value.im),
        fmt_sig(v.value.norm()),
        v.terms_counted,
        v.method
    );
}

fn load_catalogue(file: Option<&Path>) -> Result<Catalogue> {
    match file {
        None => Ok(Catalogue::builtin()),
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(Catalogue::from_text(&text)?)
        }
    }
}

/// A builtin name, or the single (or first) instance of a catalogue file.
fn resolve_instance(name: &str) -> Result<PvsInstance> {
    if let Some(inst) = Catalogue::builtin().get(name) {
        return Ok(inst.clone());
    }
    let path = Path::new(name);
    if !path.is_file() {
        bail!("no builtin instance or file named {name:?}");
    }
    let cat = load_catalogue(Some(path))?;
    cat.instances.into_iter().next().with_context(|| format!("{name} holds no instances"))
}

#[allow(clippy::too_many_arguments)]
fn cmd_sum(
    f: &str,
    p: u64,
    m: u32,
    chi: Option<u64>,
    psi: i64,
    l: Option<&str>,
    filtered: bool,
    budget: u64,
) -> Result<()> {
    let f = parse_poly(f)?;
    let ring = ResidueRing::new(p, m)?;
    let engine = SumEngine::new(budget);
    let psi = AddChar::new(ring, psi);
    let value = match (chi, l) {
        (Some(k), Some(l)) => engine.fourier_sum(&f, &MultChar::new(ring, k)?, &psi, &parse_list(l)?)?,
        (Some(k), None) if filtered => engine.filtered_sum(&f, &MultChar::new(ring, k)?)?,
        (Some(k), None) => engine.brute_sum(&f, &MultChar::new(ring, k)?)?,
        (None, None) if filtered => engine.filtered_sum_additive(&f, &psi)?,
        (None, None) => engine.brute_sum_additive(&f, &psi)?,
        (None, Some(_)) => bail!("--L needs --chi"),
    };
    print_value("S", &value);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    instance: &str,
    p: u64,
    m: u32,
    l_policy: &str,
    chi: &str,
    psi: u64,
    l: Option<&str>,
    json: Option<&Path>,
    csv: Option<&Path>,
    seed: u64,
    budget: u64,
    tol: f64,
    threads: Option<usize>,
) -> Result<bool> {
    let inst = resolve_instance(instance)?;
    let mut cfg = VerifyConfig::new(p, m);
    cfg.l_policy = match l {
        Some(points) => LPolicy::parse(&format!("list:{points}"))?,
        None => LPolicy::parse(l_policy)?,
    };
    cfg.chi_policy = ChiPolicy::parse(chi)?;
    cfg.psi_twist = psi;
    cfg.seed = seed;
    cfg.budget = budget;
    cfg.tol = tol;
    cfg.threads = threads;
    cfg.instance_source = Some(instance.to_string());
    let report = verify_instance(&inst, &cfg)?;
    if let Some(path) = json {
        std::fs::write(path, report.to_json(true)).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = csv {
        std::fs::write(path, report.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    }
    let s = &report.summary;
    println!("instance {} at p = {}, m = {} ({} characters, L policy {})", report.instance, p, m, report.chi.len(), report.l_policy);
    if report.bad_prime {
        println!("p = {p} is flagged bad for this instance; all records skipped");
    }
    println!(
        "records {}: MATCH {}, VANISH_MATCH {}, MISMATCH {}, SKIPPED_BAD_PRIME {}",
        s.total, s.matched, s.vanish_matched, s.mismatched, s.skipped
    );
    println!(
        "max relative error {}, max phase residual {}, max magnitude deviation {}",
        fmt_sig(s.max_rel_err),
        fmt_sig(s.max_phase_residual),
        fmt_sig(s.max_magnitude_dev)
    );
    if let Some(pv) = &report.parseval {
        println!(
            "Parseval (chi_{}): {} vs {} (relative error {})",
            pv.chi,
            fmt_sig(pv.lhs),
            fmt_sig(pv.rhs),
            fmt_sig(pv.relative_error())
        );
    }
    if s.candidate_bad_prime {
        println!("mismatches at an unflagged prime: p = {p} is a candidate bad prime");
    }
    for cmd in &report.replay {
        println!("replay: {cmd}");
    }
    if let Some(e) = &report.error {
        println!("error: {e}");
    }
    println!("time {:.1} ms", report.timing_ms);
    Ok(report.exit_ok())
}

fn cmd_morse(f: &str, p: u64, m: u32, at: &str) -> Result<()> {
    let f = parse_poly(f)?;
    let ring = ResidueRing::new(p, m)?;
    let nf = morse_normal_form(&f, &parse_list(at)?, ring)?;
    let c = &nf.cert;
    println!("critical point c = {:?} mod {}", c.c, ring.modulus());
    println!("f(c) = {}", c.f_at_c);
    println!("gradient valuations {:?}", c.grad_valuations);
    println!("Newton steps {} (valuations {:?})", c.iterations, c.valuation_history);
    println!("Hessian discriminant class {:?}", c.hess_disc);
    println!("diagonal a = {:?} (class {:?})", nf.a, nf.diagonal_class());
    for (i, t) in nf.transform.iter().enumerate() {
        println!("u{} = {t}", i + 1);
    }
    Ok(())
}

fn cmd_catalogue_check(file: Option<&Path>, primes: &str) -> Result<bool> {
    let cat = load_catalogue(file)?;
    let primes = parse_list(primes)?;
    let mut ok = true;
    for inst in &cat.instances {
        let b0 = compute_b0(&inst.f, &inst.f_dual, inst.d)?;
        let b0_ok = b0 == inst.b0;
        ok &= b0_ok;
        let bad: Vec<u64> = primes.iter().copied().filter(|&p| inst.is_bad_prime(p)).collect();
        let mut identity = (0usize, 0usize);
        for &p in primes.iter().filter(|&&p| !bad.contains(&p)) {
            let ring = ResidueRing::new(p, 2)?;
            for l in inst.sample_unit_points(ring, 8, 0) {
                identity.1 += 1;
                if inst.critical_value_identity_check(&l, ring)? {
                    identity.0 += 1;
                }
            }
        }
        ok &= identity.0 == identity.1;
        println!(
            "{}: b0 {} ({}), bad primes {:?}, critical value identity {}/{}",
            inst.name,
            inst.b0,
            if b0_ok { "ok" } else { "MISMATCH" },
            bad,
            identity.0,
            identity.1
        );
    }
    Ok(ok)
}

fn cmd_crt(n: u64, f: &str, chi: Option<&str>, l: Option<&str>, budget: u64) -> Result<()> {
    let f = parse_poly(f)?;
    let ks = chi.map(parse_list).transpose()?;
    let g = CompositeChar::from_modulus(n, ks.as_deref())?;
    let l = match l {
        Some(l) => parse_list(l)?,
        None => vec![1; f.nvars()],
    };
    let cmp = crt_composite_sum(&SumEngine::new(budget), &f, &g, &l)?;
    print_value("direct", &cmp.direct);
    print_value("product", &cmp.product);
    for ((chi, _), v) in g.locals().iter().zip(&cmp.local_values) {
        println!("  {} chi_{}: ({}, {})", chi.ring(), chi.index(), fmt_sig(v.re), fmt_sig(v.im));
    }
    println!("|direct - product| = {}", fmt_sig(cmp.abs_diff()));
    Ok(())
}

fn cmd_trace(instance: &str, p: u64, m: u32, chi: u64, psi: i64, l: &str) -> Result<()> {
    let inst = resolve_instance(instance)?;
    let ring = ResidueRing::new(p, m)?;
    let t = pipeline_trace(&inst, &MultChar::new(ring, chi)?, &AddChar::new(ring, psi), &parse_list(l)?)?;
    let show = |re: f64, im: f64| format!("({}, {})", fmt_sig(re), fmt_sig(im));
    println!("factorized  {}", show(t.factorized.re, t.factorized.im));
    println!("critical    {}", show(t.critical.re, t.critical.im));
    println!("closed      {}", show(t.closed.re, t.closed.im));
    println!("critical points {:?}, dual point {:?}", t.critical_points, t.dual_point);
    let d = t.deltas();
    println!("relative deltas {} {} {}", fmt_sig(d[0]), fmt_sig(d[1]), fmt_sig(d[2]));
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Sum { f, p, m, chi, psi, l, filtered, budget } => {
            cmd_sum(&f, p, m, chi, psi, l.as_deref(), filtered, budget)?;
            Ok(true)
        }
        Command::Verify { instance, p, m, l_policy, chi, psi, l, json, csv, seed, budget, tol, threads } => cmd_verify(
            &instance,
            p,
            m,
            &l_policy,
            &chi,
            psi,
            l.as_deref(),
            json.as_deref(),
            csv.as_deref(),
            seed,
            budget,
            tol,
            threads,
        ),
        Command::Morse { f, p, m, at } => {
            cmd_morse(&f, p, m, &at)?;
            Ok(true)
        }
        Command::Catalogue { action: CatalogueAction::List { file } } => {
            for inst in &load_catalogue(file.as_deref())?.instances {
                println!("{inst}");
            }
            Ok(true)
        }
        Command::Catalogue { action: CatalogueAction::Check { file, primes } } => cmd_catalogue_check(file.as_deref(), &primes),
        Command::Crt { n, f, chi, l, budget } => {
            cmd_crt(n, &f, chi.as_deref(), l.as_deref(), budget)?;
            Ok(true)
        }
        Command::Trace { instance, p, m, chi, psi, l } => {
            cmd_trace(&instance, p, m, chi, psi, &l)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // sums outside `verify` also honour PHVS_THREADS
    match with_pool(env_threads(), || run(cli)).map_err(anyhow::Error::from).and_then(|r| r) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

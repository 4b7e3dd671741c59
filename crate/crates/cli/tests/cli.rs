use std::process::{Command, Output};

fn phvs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phvs")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn sum_prints_value() {
    let o = phvs(&["sum", "--f", "x1*x2", "--p", "5", "--m", "2", "--chi", "1", "--L", "1,1"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("|S| = 25.0000000000000"), "{out}");
    assert!(out.contains("terms = 625"));
}

#[test]
fn additive_and_filtered_sums() {
    let brute = stdout(&phvs(&["sum", "--f", "x^2 + x^3", "--p", "5", "--m", "3", "--psi", "2"]));
    let filtered = stdout(&phvs(&["sum", "--f", "x^2 + x^3", "--p", "5", "--m", "3", "--psi", "2", "--filtered"]));
    let value = |s: &str| s.split("  ").next().unwrap().to_string();
    assert_eq!(value(&brute).replace("S = ", ""), value(&filtered).replace("S = ", ""));
}

#[test]
fn verify_writes_reproducible_json() {
    let dir = std::env::temp_dir().join(format!("phvs-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let a = dir.join("a.json");
    let b = dir.join("b.json");
    let csv = dir.join("a.csv");
    let common = ["verify", "--instance", "hyperbola", "--p", "5", "--m", "2", "--L-policy", "sample:6", "--chi", "1,3"];
    let o = phvs(&[&common[..], &["--json", a.to_str().unwrap(), "--csv", csv.to_str().unwrap(), "--threads", "1"]].concat());
    assert!(o.status.success(), "{}", stdout(&o));
    let o = phvs(&[&common[..], &["--json", b.to_str().unwrap(), "--threads", "2"]].concat());
    assert!(o.status.success());
    let strip = |p: &std::path::Path| {
        let text = std::fs::read_to_string(p).unwrap();
        text.lines().filter(|l| !l.contains("timing_ms")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip(&a), strip(&b));
    assert!(strip(&a).contains("\"status\": \"MATCH\"") || strip(&a).contains("\"status\": \"VANISH_MATCH\""));
    let csv = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(csv.lines().count(), 1 + 12);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_exit_status_follows_mismatches() {
    let dir = std::env::temp_dir().join(format!("phvs-cli-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("cat.txt");
    std::fs::write(&file, "name=h\nn=2\nd=2\nf=x1*x2\nfdual=y1*y2\nb0=1\n").unwrap();
    let o = phvs(&["verify", "--instance", file.to_str().unwrap(), "--p", "5", "--m", "2", "--L-policy", "list:1,1", "--chi", "1"]);
    assert!(o.status.success(), "{}", stdout(&o));
    // b0 is re-derived on load, so a wrong stored value is an error, not a mismatch
    std::fs::write(&file, "name=h\nn=2\nd=2\nf=x1*x2\nfdual=y1*y2\nb0=3\n").unwrap();
    let o = phvs(&["verify", "--instance", file.to_str().unwrap(), "--p", "5", "--m", "2"]);
    assert_eq!(o.status.code(), Some(2));
    // a bad prime is skipped and does not fail the run
    std::fs::write(&file, "name=cube\nn=1\nd=3\nf=x^3\nfdual=y^3\nb0=27\n").unwrap();
    let o = phvs(&["verify", "--instance", file.to_str().unwrap(), "--p", "3", "--m", "2"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("flagged bad"));
    // tolerance 0 turns float noise into mismatches, which must fail with a replay line
    let o = phvs(&["verify", "--instance", "quadric-2", "--p", "7", "--m", "2", "--L-policy", "sample:4", "--chi", "1", "--tol", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("replay: phvs verify --instance quadric-2"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn morse_reports_normal_form() {
    let o = phvs(&["morse", "--f", "x^2 + 5*x", "--p", "5", "--m", "3", "--at", "0"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("critical point c = [60] mod 125"), "{out}");
}

#[test]
fn catalogue_list_and_check() {
    let out = stdout(&phvs(&["catalogue", "list"]));
    for name in ["linear", "square", "hyperbola", "quadric-2", "quadric-3", "quadric-4", "det2"] {
        assert!(out.contains(name), "{name}");
    }
    let o = phvs(&["catalogue", "check", "--primes", "5,7"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("det2: b0 1 (ok)"));
}

#[test]
fn crt_compares_direct_and_product() {
    let o = phvs(&["crt", "--N", "45", "--f", "x^2"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("direct") && out.contains("product") && out.contains("Z/3^2") && out.contains("Z/5^1"));
    let o = phvs(&["crt", "--N", "30", "--f", "x"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn trace_stages_agree() {
    let o = phvs(&["trace", "--instance", "hyperbola", "--p", "5", "--m", "2", "--chi", "1", "--L", "1,1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("critical points [[13, 13]]"), "{}", stdout(&o));
}

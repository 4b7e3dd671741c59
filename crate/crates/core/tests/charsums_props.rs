use proptest::prelude::*;
use rand::{Rng, SeedableRng};

use phvs_core::catalogue::Catalogue;
use phvs_core::characters::{AddChar, MultChar};
use phvs_core::charsums::{quadratic_closed_form, DlogGrid, SumEngine};
use phvs_core::multipoly::{Monomial, MultiPoly};
use phvs_core::residue::ResidueRing;
use phvs_core::verify::with_pool;

fn small_poly() -> impl Strategy<Value = MultiPoly> {
    (1usize..=2)
        .prop_flat_map(|n| prop::collection::vec((prop::collection::vec(0u32..=3, n), -9i64..=9), 1..5).prop_map(move |t| (n, t)))
        .prop_map(|(n, terms)| MultiPoly::from_terms(n, terms.into_iter().map(|(e, c)| (e as Monomial, c))).unwrap())
}

fn config() -> impl Strategy<Value = (ResidueRing, u64)> {
    prop::sample::select(vec![(3u64, 2u32), (5, 2), (3, 3), (7, 2), (5, 3)])
        .prop_map(|(p, m)| ResidueRing::new(p, m).unwrap())
        .prop_flat_map(|r| (Just(r), 0u64..10_000))
}

fn primitive(ring: ResidueRing, k: u64) -> MultChar {
    let all = MultChar::primitive_characters(ring);
    all[(k as usize) % all.len()].clone()
}

fn close(a: num_complex::Complex64, b: num_complex::Complex64, ring: ResidueRing, n: usize) -> bool {
    (a - b).norm() <= 1e-9 * (ring.modulus() as f64).powf(n as f64 / 2.0).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn critical_filter_preserves_mult_sums(f in small_poly(), (ring, k) in config()) {
        let chi = primitive(ring, k);
        let e = SumEngine::default();
        let brute = e.brute_sum(&f, &chi).unwrap();
        let filtered = e.filtered_sum(&f, &chi).unwrap();
        prop_assert!(close(brute.value, filtered.value, ring, f.nvars()), "{} vs {}", brute.value, filtered.value);
        prop_assert!(filtered.terms_counted <= brute.terms_counted);
    }

    #[test]
    fn critical_filter_preserves_additive_sums(f in small_poly(), (ring, t) in config()) {
        let twist = 1 + (t % (ring.p() - 1));
        let psi = AddChar::new(ring, twist as i64);
        let e = SumEngine::default();
        let brute = e.brute_sum_additive(&f, &psi).unwrap();
        let filtered = e.filtered_sum_additive(&f, &psi).unwrap();
        prop_assert!(close(brute.value, filtered.value, ring, f.nvars()));
    }

    #[test]
    fn quadratic_closed_form_matches(
        (ring, k) in config(),
        coeffs in prop::collection::vec(1u64..1000, 2..=3),
    ) {
        let n = coeffs.len() - 1;
        prop_assume!(ring.modulus().pow(n as u32) <= 20_000);
        let a: Vec<u64> = coeffs.iter().map(|&c| if c % ring.p() == 0 { c + 1 } else { c } % ring.modulus()).collect();
        let mut terms: Vec<(Monomial, i64)> = vec![(vec![0; n], a[0] as i64)];
        for (i, &ai) in a[1..].iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 2;
            terms.push((e, ai as i64));
        }
        let f = MultiPoly::from_terms(n, terms).unwrap();
        let chi = primitive(ring, k);
        let brute = SumEngine::default().brute_sum(&f, &chi).unwrap();
        let closed = quadratic_closed_form(&a, &chi).unwrap();
        prop_assert!(close(brute.value, closed.value, ring, n));
    }

    #[test]
    fn factorization_matches_direct_sum(
        idx in 0usize..4,
        (ring, k) in config(),
        t in 1u64..100,
        l in prop::collection::vec(0u64..10_000, 3),
    ) {
        prop_assume!(ring.p() != 2);
        let cat = Catalogue::builtin();
        let inst = &cat.instances[idx];
        prop_assume!(u64::from(inst.d) % ring.p() != 0 && ring.modulus().pow(inst.n as u32) <= 20_000);
        prop_assume!(t % ring.p() != 0);
        let chi = primitive(ring, k);
        let psi = AddChar::new(ring, t as i64);
        let l: Vec<u64> = l[..inst.n].iter().map(|v| v % ring.modulus()).collect();
        let e = SumEngine::default();
        let direct = e.fourier_sum(&inst.f, &chi, &psi, &l).unwrap();
        let fact = e.prop41_factorize(&inst.f, &chi, &psi, &l).unwrap();
        prop_assert!(close(direct.value, fact.product.value, ring, inst.n), "{} vs {}", direct.value, fact.product.value);
    }

    #[test]
    fn twist_acts_linearly_on_l(
        (ring, k) in config(),
        t in 1u64..100,
        l in prop::collection::vec(0u64..10_000, 2),
    ) {
        prop_assume!(t % ring.p() != 0);
        let f = MultiPoly::from_terms(2, [(vec![1u32, 1u32], 1i64), (vec![0, 3], 2)]).unwrap();
        let chi = primitive(ring, k);
        let q = ring.modulus();
        let tl: Vec<u64> = l.iter().map(|&v| ring.mul(v % q, t % q)).collect();
        let e = SumEngine::default();
        let twisted = e.fourier_sum(&f, &chi, &AddChar::new(ring, t as i64), &l).unwrap();
        let moved = e.fourier_sum(&f, &chi, &AddChar::new(ring, 1), &tl).unwrap();
        prop_assert_eq!(twisted.value, moved.value);
    }
}

#[test]
fn parseval_holds_for_catalogue_at_5_2() {
    let ring = ResidueRing::new(5, 2).unwrap();
    let psi = AddChar::new(ring, 1);
    let e = SumEngine::default();
    for inst in &Catalogue::builtin().instances {
        let points = ring.modulus().pow(inst.n as u32);
        for chi in MultChar::primitive_characters(ring).iter().step_by(5) {
            let n1 = {
                let fc = inst.f.reduce(ring).compile();
                let mut it = phvs_core::charsums::PointIter::new(ring.modulus(), inst.n, 0..points);
                let mut c = 0u64;
                while let Some(x) = it.next_point() {
                    c += u64::from(ring.is_unit(fc.eval(x)));
                }
                c
            };
            let rhs = points as f64 * n1 as f64;
            let lhs = if points * points <= 50_000_000 {
                let rec = e.parseval_check(&inst.f, chi, &psi).unwrap();
                assert_eq!(rec.n1, n1);
                rec.lhs
            } else {
                DlogGrid::new(&inst.f, ring, u64::MAX).unwrap().transform(chi, 1).unwrap().energy()
            };
            assert!((lhs - rhs).abs() <= 1e-9 * rhs, "{} chi_{}: {lhs} vs {rhs}", inst.name, chi.index());
        }
    }
}

#[test]
fn factorization_holds_for_fifty_l_per_configuration() {
    let cat = Catalogue::builtin();
    let e = SumEngine::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
    for (p, m) in [(5u64, 2u32), (7, 2), (5, 3)] {
        let ring = ResidueRing::new(p, m).unwrap();
        let chis = MultChar::primitive_characters(ring);
        let psi = AddChar::new(ring, 1);
        for inst in &cat.instances {
            if ring.modulus().pow(inst.n as u32) > 2_000_000 {
                continue;
            }
            let tol = 1e-9 * (ring.modulus() as f64).powf(inst.n as f64 / 2.0);
            for _ in 0..50 {
                let l: Vec<u64> = (0..inst.n).map(|_| rng.gen_range(0..ring.modulus())).collect();
                let chi = &chis[rng.gen_range(0..chis.len())];
                let direct = e.fourier_sum(&inst.f, chi, &psi, &l).unwrap().value;
                let fact = e.prop41_factorize(&inst.f, chi, &psi, &l).unwrap().product.value;
                assert!((direct - fact).norm() <= tol, "{} p={p} m={m} L={l:?}", inst.name);
            }
        }
    }
}

#[test]
fn sums_do_not_depend_on_thread_count() {
    let ring = ResidueRing::new(5, 3).unwrap();
    let f = MultiPoly::from_terms(2, [(vec![2u32, 1u32], 3i64), (vec![0, 4], -1), (vec![1, 0], 2)]).unwrap();
    let chi = MultChar::primitive_characters(ring)[7].clone();
    let psi = AddChar::new(ring, 2);
    let run = || SumEngine::new(1 << 30).fourier_sum(&f, &chi, &psi, &[3, 17]).unwrap().value;
    let one = with_pool(Some(1), run).unwrap();
    for threads in [2, 3, 4] {
        let v = with_pool(Some(threads), run).unwrap();
        assert_eq!(v.re.to_bits(), one.re.to_bits());
        assert_eq!(v.im.to_bits(), one.im.to_bits());
    }
}

//! End-to-end gate. Each test exercises one published behavior bundle at its
//! stated tolerance, asserts the documented time budget, and prints a single
//! PASS line with the measured wall time.

use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use decaykit::backend::{backend_for, CableGroup, Eq3};
use decaykit::cable::{
    cable_peripherals, lo_window, satellite_quotient, torus_knot_genus, CableParams, LoVerdict,
};
use decaykit::cert::{
    builtin_cable_certificate, conclude_decay, verify_certificate, Certificate, Verdict,
    VerifyOptions,
};
use decaykit::presentation::Presentation;
use decaykit::rational::gcd;
use decaykit::registry::Registry;
use decaykit::search::{cone_search, enumerate_ball, verify_assignment, SearchOutcome};
use decaykit::slope::cramer_decompose;
use decaykit::{Rational, Sign, Slope, WindowVerdict, Word, ZZOrder};

fn pass(name: &str, detail: &str, t0: Instant, budget: Duration) {
    let dt = t0.elapsed();
    assert!(dt < budget, "{name} took {dt:?}, budget {budget:?}");
    println!("PASS {name}: {detail} [{dt:?} < {budget:?}]");
}

#[test]
fn c01_interleaved_slope_decomposition() {
    let t0 = Instant::now();
    let r1 = Slope::reduce(1, 3).unwrap();
    let r2 = Slope::reduce(1, 1).unwrap();
    let target = Slope::reduce(1, 2).unwrap();
    assert_eq!(cramer_decompose(&r1, &r2, &target).unwrap(), (1, 1, 2));

    let mut rng = StdRng::seed_from_u64(0xD001);
    let mut done = 0usize;
    while done < 1000 {
        let mut raw: Vec<Slope> = (0..3)
            .map(|_| {
                let m = rng.random_range(-40..=40i64);
                let n = rng.random_range(1..=40i64);
                Slope::reduce(m, n).unwrap()
            })
            .collect();
        raw.sort_by_key(Slope::value);
        if raw[0].value() == raw[1].value() || raw[1].value() == raw[2].value() {
            continue;
        }
        let (a, b, c) = cramer_decompose(&raw[0], &raw[2], &raw[1]).unwrap();
        assert!(a > 0 && b > 0 && c > 0, "nonpositive coefficients ({a},{b},{c})");
        let (p1, q1) = raw[0].vector();
        let (p2, q2) = raw[2].vector();
        let (m, n) = raw[1].vector();
        assert_eq!((a * p1 + b * p2, a * q1 + b * q2), (c * m, c * n));
        done += 1;
    }
    pass(
        "slope decomposition",
        "worked triple gives (1,1,2); 1000 random interleaved triples decompose positively",
        t0,
        Duration::from_secs(1),
    );
}

#[test]
fn c02_meridian_recovery_identity() {
    let t0 = Instant::now();
    let mut checked = 0usize;
    for p in 2..=12i64 {
        for q in (p + 1)..=12 {
            if gcd(p, q) != 1 {
                continue;
            }
            for (a, b) in [(p, q), (q, p)] {
                let g = CableGroup::new(a, b).unwrap();
                let base = Word::gen_power("m", g.u).concat(&Word::gen_power("l", g.v));
                let lhs = Word::gen_power("t", -g.v).repeat(a).concat(&base.repeat(a));
                assert!(
                    g.equal(&lhs, &Word::gen_power("m", 1)).unwrap(),
                    "recovery fails for ({a},{b})"
                );
                checked += 1;
            }
        }
    }
    assert!(checked >= 60, "only {checked} pairs checked");
    pass(
        "meridian recovery",
        "fiber and companion blocks recover m for all coprime pairs through 12, both orientations",
        t0,
        Duration::from_secs(5),
    );
}

#[test]
fn c03_builtin_certificates_accept() {
    let t0 = Instant::now();
    let cases = [(2i64, 3i64, 1i64), (2, 5, 1), (3, 4, 1), (3, 5, 1), (2, 11, 5)];
    for (p, q, r) in cases {
        let cert = builtin_cable_certificate(p, q, Rational::integer(r)).unwrap();
        let report = verify_certificate(&cert, &VerifyOptions::default());
        assert_eq!(
            report.verdict,
            Verdict::Accept,
            "({p},{q},{r}) rejected: {:?}",
            report.failures
        );
        let msg = conclude_decay(&report).unwrap();
        assert!(
            msg.contains(&format!("{}-decayed", p * q)),
            "conclusion for ({p},{q},{r}) reads: {msg}"
        );
    }
    pass(
        "builtin certificates",
        "five generated certificates verify at grid bound 5 and conclude the product bound",
        t0,
        Duration::from_secs(60),
    );
}

fn string_sites(
    v: &serde_json::Value,
    path: String,
    keys: &[&str],
    digits_only: bool,
    out: &mut Vec<String>,
) {
    match v {
        serde_json::Value::Object(map) => {
            for (k, child) in map {
                let cp = format!("{path}/{k}");
                if keys.contains(&k.as_str()) {
                    if let serde_json::Value::String(s) = child {
                        if !digits_only || s.bytes().any(|b| b.is_ascii_digit()) {
                            out.push(cp.clone());
                        }
                    }
                }
                string_sites(child, cp, keys, digits_only, out);
            }
        }
        serde_json::Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                string_sites(child, format!("{path}/{i}"), keys, digits_only, out);
            }
        }
        _ => {}
    }
}

fn premise_sites(v: &serde_json::Value, path: String, out: &mut Vec<String>) {
    match v {
        serde_json::Value::Object(map) => {
            for (k, child) in map {
                let cp = format!("{path}/{k}");
                if k == "premises" {
                    if let serde_json::Value::Array(items) = child {
                        if !items.is_empty() {
                            out.push(cp.clone());
                        }
                    }
                }
                premise_sites(child, cp, out);
            }
        }
        serde_json::Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                premise_sites(child, format!("{path}/{i}"), out);
            }
        }
        _ => {}
    }
}

fn bump_digit_run(s: &str, rng: &mut StdRng) -> String {
    let bytes = s.as_bytes();
    let mut runs = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            runs.push((start, i));
        } else {
            i += 1;
        }
    }
    let (a, b) = runs[rng.random_range(0..runs.len())];
    let val: i64 = s[a..b].parse().unwrap();
    let delta = if val == 0 || rng.random_bool(0.5) { 1 } else { -1 };
    format!("{}{}{}", &s[..a], val + delta, &s[b..])
}

#[test]
fn c04_mutated_certificates_reject() {
    let t0 = Instant::now();
    let cert = builtin_cable_certificate(3, 4, Rational::integer(1)).unwrap();
    assert_eq!(
        verify_certificate(&cert, &VerifyOptions::default()).verdict,
        Verdict::Accept,
        "baseline certificate must verify before mutation"
    );
    let base: serde_json::Value = serde_json::from_str(&cert.to_json_string().unwrap()).unwrap();

    let mut words = Vec::new();
    string_sites(
        &base,
        String::new(),
        &["word", "pivot", "template", "lhs", "rhs"],
        true,
        &mut words,
    );
    let mut rules = Vec::new();
    string_sites(&base, String::new(), &["rule"], false, &mut rules);
    let mut premises = Vec::new();
    premise_sites(&base, String::new(), &mut premises);
    assert!(words.len() > 30 && rules.len() > 30 && premises.len() > 15);

    let all_rules = ["HYP", "DECAY", "PROD", "POWER_ROOT", "INV", "EQ"];
    let mut rng = StdRng::seed_from_u64(0xDECA1);
    for trial in 0..50 {
        let mut v = base.clone();
        let what = match rng.random_range(0..3u32) {
            0 => {
                let site = &words[rng.random_range(0..words.len())];
                let slot = v.pointer_mut(site).unwrap();
                let s = slot.as_str().unwrap().to_string();
                *slot = serde_json::Value::String(bump_digit_run(&s, &mut rng));
                format!("exponent bump at {site}")
            }
            1 => {
                let site = &rules[rng.random_range(0..rules.len())];
                let slot = v.pointer_mut(site).unwrap();
                let current = slot.as_str().unwrap().to_string();
                let swapped = loop {
                    let cand = all_rules[rng.random_range(0..all_rules.len())];
                    if cand != current {
                        break cand;
                    }
                };
                *slot = serde_json::Value::String(swapped.to_string());
                format!("rule swap {current}->{swapped} at {site}")
            }
            _ => {
                let site = &premises[rng.random_range(0..premises.len())];
                let slot = v.pointer_mut(site).unwrap();
                let items = slot.as_array_mut().unwrap();
                let idx = rng.random_range(0..items.len());
                items.remove(idx);
                format!("premise drop at {site}[{idx}]")
            }
        };
        let text = serde_json::to_string(&v).unwrap();
        match Certificate::from_json_str(&text) {
            Err(_) => {}
            Ok(mutant) => {
                let report = verify_certificate(&mutant, &VerifyOptions::default());
                assert_eq!(
                    report.verdict,
                    Verdict::Reject,
                    "trial {trial} accepted a mutant: {what}"
                );
            }
        }
    }
    pass(
        "mutation rejection",
        "50 seeded single-token mutations all fail to parse or fail verification",
        t0,
        Duration::from_secs(120),
    );
}

#[test]
fn c05_registry_decay_numbers() {
    let t0 = Instant::now();
    let reg = Registry::embedded();
    let expect = [
        ("torus:2,3", 5),
        ("torus:3,4", 11),
        ("torus:2,5", 9),
        ("pretzel:-2,3,5", 15),
        ("pretzel:-2,3,7", 17),
        ("twisted-torus:3,5", 17),
    ];
    for (id, n) in expect {
        assert_eq!(
            reg.lookup(id).unwrap(),
            Some(Rational::integer(n)),
            "registry bound for {id}"
        );
    }
    pass(
        "registry numbers",
        "six rule-derived decay bounds match their frozen values",
        t0,
        Duration::from_secs(1),
    );
}

#[test]
fn c06_surgery_window_and_genus() {
    let t0 = Instant::now();
    let reg = Registry::embedded();
    let companion = reg.lookup("torus:2,3").unwrap().unwrap();
    let params = CableParams::new(2, 11).unwrap();
    let win = lo_window(params, Some(&companion)).unwrap();
    assert_eq!(win.lo_below, Rational::integer(9));
    assert_eq!(win.nlo_from, Some(Rational::integer(22)));
    for num in -8..=60 {
        let r = Rational::new(num, 2).unwrap();
        let expect = if r < Rational::integer(9) {
            LoVerdict::LeftOrderable
        } else if r < Rational::integer(22) {
            LoVerdict::Unknown
        } else {
            LoVerdict::NotLeftOrderable
        };
        assert_eq!(win.classify(&r), expect, "classification at r={r}");
    }
    assert_eq!(torus_knot_genus(2, 3).unwrap(), 1);
    assert_eq!(2 * torus_knot_genus(2, 3).unwrap() - 1, 1);
    assert_eq!(
        Rational::integer(2 * torus_knot_genus(2, 11).unwrap() - 1),
        win.lo_below,
        "orderable range ends at twice genus minus one"
    );
    pass(
        "surgery window",
        "(2,11) cable of the (2,3) torus knot: orderable below 9, open on [9,22), obstructed from 22",
        t0,
        Duration::from_secs(1),
    );
}

fn random_peripheral_word(rng: &mut StdRng) -> Word {
    let gens = ["m", "l", "t"];
    let len = rng.random_range(0..=8usize);
    let mut w = Word::empty();
    for _ in 0..len {
        let g = gens[rng.random_range(0..gens.len())];
        let e = loop {
            let e = rng.random_range(-3..=3i64);
            if e != 0 {
                break e;
            }
        };
        w = w.concat(&Word::gen_power(g, e));
    }
    w
}

#[test]
fn c07_satellite_quotient_homomorphism() {
    let t0 = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5A7);
    let mut pairs_checked = 0usize;
    for p in 2..=8i64 {
        for q in 1..=8i64 {
            if gcd(p, q) != 1 {
                continue;
            }
            let params = CableParams::new(p, q).unwrap();
            let sq = satellite_quotient(params);
            let backend = backend_for(&sq.target).unwrap();
            let img_l = sq.apply(&Word::gen_power("l", 1)).unwrap();
            assert_eq!(
                backend.words_equal(&img_l, &Word::empty()).unwrap(),
                Eq3::Equal,
                "longitude survives the quotient for ({p},{q})"
            );
            let periph = cable_peripherals(params);
            assert_eq!(sq.abelian_image(&periph.meridian).unwrap(), 1);
            assert_eq!(sq.abelian_image(&periph.longitude).unwrap(), 0);
            for _ in 0..15 {
                let w1 = random_peripheral_word(&mut rng);
                let w2 = random_peripheral_word(&mut rng);
                let joint = sq.apply(&w1.concat(&w2)).unwrap();
                let split = sq.apply(&w1).unwrap().concat(&sq.apply(&w2).unwrap());
                assert_eq!(backend.words_equal(&joint, &split).unwrap(), Eq3::Equal);
                assert_eq!(
                    sq.abelian_image(&w1.concat(&w2)).unwrap(),
                    sq.abelian_image(&w1).unwrap() + sq.abelian_image(&w2).unwrap()
                );
                pairs_checked += 1;
            }
        }
    }
    assert!(pairs_checked >= 500, "only {pairs_checked} pairs checked");
    pass(
        "satellite quotient",
        "longitude dies, peripheral images abelianize to (1,0), homomorphism on 500+ random pairs",
        t0,
        Duration::from_secs(10),
    );
}

#[test]
fn c08_cone_search_oracle() {
    let t0 = Instant::now();
    let build = |gens: &[&str], rels: &[&str], radius: usize| {
        let pres = Presentation::new(gens, rels).unwrap();
        let backend = backend_for(&pres).unwrap();
        enumerate_ball(&pres, radius, &backend).unwrap()
    };
    for n in 2..=6 {
        let rel = format!("a^{n}");
        let inst = build(&["a"], &[rel.as_str()], 3);
        assert!(
            matches!(cone_search(&inst), SearchOutcome::Contradiction { .. }),
            "no refutation for the cyclic group of order {n}"
        );
    }
    let inst = build(&["a", "b"], &["a^2", "b^3"], 3);
    assert!(matches!(cone_search(&inst), SearchOutcome::Contradiction { .. }));

    for (gens, rels) in [
        (["m", "l"], ["m^1 l^1 m^-1 l^-1"]),
        (["a", "b"], ["a^1 b^1 a^1 b^-1"]),
    ] {
        let inst = build(&gens, &rels, 4);
        assert!(!inst.heuristic);
        let SearchOutcome::Assignment { signs } = cone_search(&inst) else {
            panic!("expected an assignment for {rels:?}");
        };
        assert!(verify_assignment(&inst, &signs));
        let reversed: Vec<Sign> = signs.iter().map(|s| s.flip()).collect();
        assert!(verify_assignment(&inst, &reversed), "reversal fails for {rels:?}");
    }
    pass(
        "cone search",
        "torsion refuted at radius 3; rank-2 lattice and Klein-type group assigned at radius 4 with valid reversals",
        t0,
        Duration::from_secs(30),
    );
}

#[test]
fn c09_lattice_order_laws() {
    let t0 = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x99);
    fn random_order(rng: &mut StdRng) -> ZZOrder {
        loop {
            let f1 = (rng.random_range(-9..=9), rng.random_range(-9..=9));
            let f2 = (rng.random_range(-9..=9), rng.random_range(-9..=9));
            if let Ok(o) = ZZOrder::new(f1, f2) {
                return o;
            }
        }
    }

    // Uniform sign on the closed ray of slopes at or above the threshold.
    let mut cases = 0usize;
    while cases < 1000 {
        let o = random_order(&mut rng);
        let r = Rational::new(rng.random_range(-12..=12), rng.random_range(1..=6)).unwrap();
        let den = rng.random_range(1..=6i64);
        let num_floor = {
            let nm = r.num() as i128 * den as i128;
            let dm = r.den() as i128;
            ((nm + dm - 1).div_euclid(dm)) as i64
        };
        let num = num_floor + rng.random_range(0..=8i64);
        let s = Slope::reduce(num, den).unwrap();
        match o.decayed_window_check(&r) {
            WindowVerdict::AllPositive => {
                assert_eq!(o.slope_sign(&s).unwrap(), Sign::Positive);
                cases += 1;
            }
            WindowVerdict::AllNegative => {
                assert_eq!(o.slope_sign(&s).unwrap(), Sign::Negative);
                cases += 1;
            }
            WindowVerdict::Mixed => {}
        }
    }

    // The window verdict flips with the order and is blind to reversal pairs.
    for _ in 0..1000 {
        let o = random_order(&mut rng);
        let r = Rational::new(rng.random_range(-12..=12), rng.random_range(1..=6)).unwrap();
        let direct = o.decayed_window_check(&r);
        let reversed = o.reverse().decayed_window_check(&r);
        let expect = match direct {
            WindowVerdict::AllPositive => WindowVerdict::AllNegative,
            WindowVerdict::AllNegative => WindowVerdict::AllPositive,
            WindowVerdict::Mixed => WindowVerdict::Mixed,
        };
        assert_eq!(reversed, expect);
    }

    // Sign of a lattice vector depends only on its primitive class.
    for _ in 0..1000 {
        let o = random_order(&mut rng);
        let (m, n) = loop {
            let m = rng.random_range(-9..=9i64);
            let n = rng.random_range(-9..=9i64);
            if (m, n) != (0, 0) {
                break (m, n);
            }
        };
        let k = rng.random_range(1..=5i64);
        assert_eq!(
            o.vector_sign(k * m, k * n).unwrap(),
            o.vector_sign(m, n).unwrap()
        );
    }
    pass(
        "lattice order laws",
        "closed-ray uniformity, reversal symmetry, and weight invariance over 1000 cases each",
        t0,
        Duration::from_secs(5),
    );
}

//! Certificate checker. Every judgment is replayed at every grid point; the
//! report is deterministic (leaves in tree order, grid points in sorted
//! parameter order) so repeated runs are byte-identical.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::backend::CableGroup;
use crate::cable::{cable_peripherals, CableParams};
use crate::rational::Rational;
use crate::slope::{Sign, WindowVerdict, ZZOrder};
use crate::word::Word;

use super::{
    Certificate, CertError, FinalRef, Judgment, Leaf, Node, Rule, Scan, Side, WordTemplate,
};

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    /// Inclusive upper bound for every grid parameter (lower bounds come from
    /// the certificate's parameter declarations).
    pub grid_bound: i64,
    /// Cap on the search for the auxiliary exponent s.
    pub s_cap: i64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            grid_bound: 5,
            s_cap: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafStatus {
    Ok,
    Vacuous,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafResult {
    pub name: String,
    pub status: LeafStatus,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub judgment: u32,
    pub grid_point: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub p: i64,
    pub q: i64,
    pub r: Rational,
    pub grid_bound: i64,
    /// Acceptance is always relative to the finite grid: witnesses beyond the
    /// bound are not examined.
    pub grid_limited: bool,
    pub leaves: Vec<LeafResult>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObserverMismatch {
    pub judgment: u32,
    pub grid_point: String,
    pub lattice: (i64, i64),
    pub claimed: Sign,
}

/// Cross-check of the kernel against a concrete lattice order: every checked
/// judgment whose instantiated word lies in the peripheral lattice must get
/// the sign the order assigns, provided the order is consistent with the
/// lattice-visible hypotheses (its window above r is all positive).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObserverReport {
    pub consistent: bool,
    pub checked: u64,
    pub mismatches: Vec<ObserverMismatch>,
}

pub fn verify_certificate(cert: &Certificate, opts: &VerifyOptions) -> VerificationReport {
    run(cert, opts, None).0
}

pub fn verify_with_observer(
    cert: &Certificate,
    opts: &VerifyOptions,
    order: &ZZOrder,
) -> ObserverReport {
    if order.decayed_window_check(&cert.r) != WindowVerdict::AllPositive {
        return ObserverReport {
            consistent: false,
            checked: 0,
            mismatches: vec![],
        };
    }
    run(cert, opts, Some(order)).1
}

/// Format the conclusion an accepted report licenses.
pub fn conclude_decay(report: &VerificationReport) -> Result<String, CertError> {
    if report.verdict != Verdict::Accept {
        return Err(CertError::NotAccepted(format!(
            "verification rejected with {} failure(s)",
            report.failures.len()
        )));
    }
    if report.leaves.is_empty() {
        return Err(CertError::NotAccepted("no leaves were verified".into()));
    }
    Ok(format!(
        "cable({},{}) of a {}-decayed companion is {}-decayed (checked at grid bound {})",
        report.p,
        report.q,
        report.r,
        report.p * report.q,
        report.grid_bound
    ))
}

#[derive(Clone)]
struct HypDef<'a> {
    word: &'a WordTemplate,
    sign: Sign,
    binder: Option<&'a str>,
    /// Schema hypotheses (the all-negative side) hold for every binder value
    /// and must be instantiated through `at`; exists hypotheses fix one free
    /// binder symbol.
    schema: bool,
}

struct LeafCtx<'a> {
    leaf: &'a Leaf,
    hyps: BTreeMap<&'a str, HypDef<'a>>,
}

struct Observer<'a> {
    order: &'a ZZOrder,
    report: ObserverReport,
}

fn run(
    cert: &Certificate,
    opts: &VerifyOptions,
    order: Option<&ZZOrder>,
) -> (VerificationReport, ObserverReport) {
    let mut failures: Vec<Failure> = Vec::new();
    let mut leaves: Vec<LeafResult> = Vec::new();
    let mut observer = order.map(|o| Observer {
        order: o,
        report: ObserverReport {
            consistent: true,
            checked: 0,
            mismatches: vec![],
        },
    });

    let group = match structural_check(cert, &mut failures) {
        Some(g) => g,
        None => return finish(cert, opts, leaves, failures, observer),
    };

    let mut leaf_ctxs = Vec::new();
    match cert.branches.as_slice() {
        [node @ Node::Branch(_)] => {
            if let Err(reason) = collect_leaves(node, &BTreeMap::new(), cert, &mut leaf_ctxs) {
                failures.push(Failure {
                    judgment: 0,
                    grid_point: "-".into(),
                    reason,
                });
                return finish(cert, opts, leaves, failures, observer);
            }
        }
        _ => {
            failures.push(Failure {
                judgment: 0,
                grid_point: "-".into(),
                reason: "certificate must contain exactly one root branch".into(),
            });
            return finish(cert, opts, leaves, failures, observer);
        }
    }

    for ctx in &leaf_ctxs {
        let (result, mut fs) = verify_leaf(cert, opts, &group, ctx, observer.as_mut());
        leaves.push(result);
        failures.append(&mut fs);
    }

    verify_audits(cert, opts, &group, &mut failures);

    finish(cert, opts, leaves, failures, observer)
}

fn finish(
    cert: &Certificate,
    opts: &VerifyOptions,
    leaves: Vec<LeafResult>,
    failures: Vec<Failure>,
    observer: Option<Observer<'_>>,
) -> (VerificationReport, ObserverReport) {
    let verdict = if failures.is_empty() && !leaves.is_empty() {
        Verdict::Accept
    } else {
        Verdict::Reject
    };
    let report = VerificationReport {
        verdict,
        p: cert.p,
        q: cert.q,
        r: cert.r,
        grid_bound: opts.grid_bound,
        grid_limited: true,
        leaves,
        failures,
    };
    let obs = observer.map(|o| o.report).unwrap_or(ObserverReport {
        consistent: true,
        checked: 0,
        mismatches: vec![],
    });
    (report, obs)
}

fn structural_check(cert: &Certificate, failures: &mut Vec<Failure>) -> Option<CableGroup> {
    let mut bad = |reason: String| {
        failures.push(Failure {
            judgment: 0,
            grid_point: "-".into(),
            reason,
        });
    };
    if cert.p < 2 || cert.q < 1 {
        bad(format!("cable parameters ({}, {}) out of range", cert.p, cert.q));
        return None;
    }
    if crate::rational::gcd(cert.p, cert.q) != 1 {
        bad(format!("cable parameters ({}, {}) not coprime", cert.p, cert.q));
        return None;
    }
    if cert.r.cmp_fraction(cert.q, cert.p) != std::cmp::Ordering::Less {
        bad(format!(
            "threshold {} must be below the cabling slope {}/{}",
            cert.r, cert.q, cert.p
        ));
        return None;
    }
    let group = match CableGroup::new(cert.p, cert.q) {
        Ok(g) => g,
        Err(e) => {
            bad(e.to_string());
            return None;
        }
    };
    let mut seen = BTreeSet::new();
    let mut ok = true;
    for j in &cert.judgments {
        if !seen.insert(j.id) {
            bad(format!("duplicate judgment id {}", j.id));
            ok = false;
        }
        for &p in &j.premises {
            if p >= j.id {
                bad(format!("judgment {} cites a premise {} that does not precede it", j.id, p));
                ok = false;
            }
        }
    }
    if ok {
        Some(group)
    } else {
        None
    }
}

fn collect_leaves<'a>(
    node: &'a Node,
    hyps: &BTreeMap<&'a str, HypDef<'a>>,
    cert: &'a Certificate,
    out: &mut Vec<LeafCtx<'a>>,
) -> Result<(), String> {
    match node {
        Node::Branch(b) => {
            let exists = b
                .exists_positive
                .as_deref()
                .ok_or_else(|| format!("branch '{}' is missing its EXISTS_POSITIVE child", b.name))?;
            let all_neg = b
                .all_negative
                .as_deref()
                .ok_or_else(|| format!("branch '{}' is missing its ALL_NEGATIVE child", b.name))?;
            if let Some(binder) = &b.binder {
                if cert.param_min(binder).is_none() {
                    return Err(format!(
                        "branch '{}' binder '{}' is not a declared parameter",
                        b.name, binder
                    ));
                }
            }
            let mut h = hyps.clone();
            h.insert(
                b.name.as_str(),
                HypDef {
                    word: &b.pivot,
                    sign: Sign::Positive,
                    binder: b.binder.as_deref(),
                    schema: false,
                },
            );
            collect_leaves(exists, &h, cert, out)?;
            let mut h = hyps.clone();
            h.insert(
                b.name.as_str(),
                HypDef {
                    word: &b.pivot,
                    sign: Sign::Negative,
                    binder: b.binder.as_deref(),
                    schema: true,
                },
            );
            collect_leaves(all_neg, &h, cert, out)
        }
        Node::Leaf(l) => {
            out.push(LeafCtx {
                leaf: l,
                hyps: hyps.clone(),
            });
            Ok(())
        }
    }
}

type Env = BTreeMap<String, i64>;

fn point_string(env: &Env) -> String {
    if env.is_empty() {
        return "-".into();
    }
    env.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn gates_pass(j: &Judgment, env: &Env) -> Result<bool, String> {
    for g in &j.when {
        let v = env
            .get(&g.param)
            .ok_or_else(|| format!("gate parameter '{}' is unbound", g.param))?;
        if *v < g.min {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Smallest s >= min with den(s) >= 1 and num(s)/den(s) >= r.
fn resolve_s(
    chosen: &super::ChosenS,
    env: &Env,
    r: &Rational,
    s_cap: i64,
) -> Result<i64, String> {
    let mut e = env.clone();
    for s in chosen.min..=s_cap {
        e.insert("s".into(), s);
        let den = chosen.den.eval(&e).map_err(|er| er.to_string())?;
        if den < 1 {
            continue;
        }
        let num = chosen.num.eval(&e).map_err(|er| er.to_string())?;
        if r.cmp_fraction(num, den) != std::cmp::Ordering::Greater {
            return Ok(s);
        }
    }
    Err(format!(
        "no auxiliary exponent s in [{}, {}] satisfies the side condition",
        chosen.min, s_cap
    ))
}

/// Every parameter a judgment's check touches: its own word, its rule
/// payload, its gates, and the declared words of its premises.
fn judgment_symbols(cert: &Certificate, ctx: &LeafCtx<'_>, j: &Judgment) -> BTreeSet<String> {
    let mut syms = j.word.symbols();
    for g in &j.when {
        syms.insert(g.param.clone());
    }
    match &j.side {
        Some(Side::Hyp { hyp, at }) => {
            if let Some(a) = at {
                syms.extend(a.symbols().map(str::to_string));
            }
            if let Some(def) = ctx.hyps.get(hyp.as_str()) {
                let mut ws = def.word.symbols();
                if def.schema {
                    if let Some(b) = def.binder {
                        ws.remove(b);
                    }
                }
                syms.extend(ws);
            }
            if let Some(sc) = &ctx.leaf.scan {
                if hyp == "scan_pos" || hyp == "scan_prev_neg" {
                    syms.extend(sc.template.symbols());
                    syms.insert(sc.param.clone());
                }
            }
        }
        Some(Side::Power { power }) => syms.extend(power.symbols().map(str::to_string)),
        Some(Side::Root { root }) => syms.extend(root.symbols().map(str::to_string)),
        Some(Side::Iter { iter }) => {
            syms.extend(iter.from.symbols().map(str::to_string));
            syms.extend(iter.downto.symbols().map(str::to_string));
        }
        None => {}
    }
    let mut bound = None;
    if let Some(Side::Iter { iter }) = &j.side {
        bound = Some(iter.bind.clone());
    }
    for &pid in &j.premises {
        if let Some(pj) = cert.judgment(pid) {
            syms.extend(pj.word.symbols());
        }
    }
    if let Some(b) = bound {
        syms.remove(&b);
    }
    // resolving s evaluates the chosen numerator and denominator, so their
    // free symbols must be gridded too
    if template_needs_s(cert, j) {
        if let Some(chosen) = &ctx.leaf.chosen {
            syms.extend(chosen.num.symbols().map(str::to_string));
            syms.extend(chosen.den.symbols().map(str::to_string));
        }
    }
    syms.remove("s");
    syms
}

/// Iterate the grid for a symbol set; scan parameters range over the scan,
/// everything else over [declared min, grid bound].
fn grid_ranges(
    cert: &Certificate,
    scan: Option<&Scan>,
    syms: &BTreeSet<String>,
    bound: i64,
) -> Result<Vec<(String, Vec<i64>)>, String> {
    let mut out = Vec::new();
    for s in syms {
        if let Some(sc) = scan {
            if *s == sc.param {
                out.push((s.clone(), (sc.min..=sc.max).collect()));
                continue;
            }
        }
        let min = cert
            .param_min(s)
            .ok_or_else(|| format!("parameter '{s}' is not declared"))?;
        out.push((s.clone(), (min..=bound).collect()));
    }
    Ok(out)
}

fn for_each_point(ranges: &[(String, Vec<i64>)], mut f: impl FnMut(&Env)) {
    if ranges.iter().any(|(_, vs)| vs.is_empty()) {
        return;
    }
    let mut idx = vec![0usize; ranges.len()];
    loop {
        let env: Env = ranges
            .iter()
            .zip(&idx)
            .map(|((name, vs), &i)| (name.clone(), vs[i]))
            .collect();
        f(&env);
        let mut carry = idx.len();
        while carry > 0 {
            let k = carry - 1;
            idx[k] += 1;
            if idx[k] < ranges[k].1.len() {
                break;
            }
            idx[k] = 0;
            carry -= 1;
        }
        if carry == 0 {
            break;
        }
    }
}

fn verify_leaf(
    cert: &Certificate,
    opts: &VerifyOptions,
    group: &CableGroup,
    ctx: &LeafCtx<'_>,
    mut observer: Option<&mut Observer<'_>>,
) -> (LeafResult, Vec<Failure>) {
    let leaf = ctx.leaf;
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    let leaf_ids: BTreeSet<u32> = leaf.judgments.iter().copied().collect();
    let scan = leaf.scan.as_ref();
    let vacuous = scan.map(|s| s.max < s.min).unwrap_or(false);

    for &id in &leaf.judgments {
        let j = match cert.judgment(id) {
            Some(j) => j,
            None => {
                failures.push(Failure {
                    judgment: id,
                    grid_point: "-".into(),
                    reason: "leaf lists an undefined judgment".into(),
                });
                continue;
            }
        };
        let syms = judgment_symbols(cert, ctx, j);
        let needs_s = template_needs_s(cert, j);
        if needs_s && leaf.chosen.is_none() {
            failures.push(Failure {
                judgment: id,
                grid_point: "-".into(),
                reason: "judgment uses the auxiliary exponent s but the leaf declares no side condition".into(),
            });
            continue;
        }
        let ranges = match grid_ranges(cert, scan, &syms, opts.grid_bound) {
            Ok(r) => r,
            Err(reason) => {
                failures.push(Failure {
                    judgment: id,
                    grid_point: "-".into(),
                    reason,
                });
                continue;
            }
        };
        for_each_point(&ranges, |env| {
            match gates_pass(j, env) {
                Ok(true) => {}
                Ok(false) => return,
                Err(reason) => {
                    failures.push(Failure {
                        judgment: id,
                        grid_point: point_string(env),
                        reason,
                    });
                    return;
                }
            }
            let mut env = env.clone();
            if needs_s {
                let chosen = leaf.chosen.as_ref().expect("checked above");
                match resolve_s(chosen, &env, &cert.r, opts.s_cap) {
                    Ok(s) => {
                        env.insert("s".into(), s);
                    }
                    Err(reason) => {
                        failures.push(Failure {
                            judgment: id,
                            grid_point: point_string(&env),
                            reason,
                        });
                        return;
                    }
                }
            }
            if let Err(reason) = check_rule(cert, group, ctx, leaf, &leaf_ids, j, &env, opts) {
                failures.push(Failure {
                    judgment: id,
                    grid_point: point_string(&env),
                    reason,
                });
                return;
            }
            if let Some(obs) = observer.as_deref_mut() {
                observe(obs, group, j, &env);
            }
        });
    }

    if let Some(sc) = scan {
        check_scan(cert, opts, group, sc, &leaf_ids, &mut failures, &mut notes, vacuous);
    }

    check_formula(cert, leaf, &mut failures);
    if !vacuous {
        check_finals(cert, opts, group, ctx, leaf, &leaf_ids, &mut failures);
    } else {
        notes.push("scan range empty: branch hypotheses are contradictory, leaf holds vacuously".into());
    }

    let status = if !failures.is_empty() {
        LeafStatus::Failed
    } else if vacuous {
        LeafStatus::Vacuous
    } else {
        LeafStatus::Ok
    };
    (
        LeafResult {
            name: leaf.name.clone(),
            status,
            notes,
        },
        failures,
    )
}

/// Does checking this judgment require the resolved auxiliary exponent?
fn template_needs_s(cert: &Certificate, j: &Judgment) -> bool {
    let mut syms = j.word.symbols();
    for &pid in &j.premises {
        if let Some(pj) = cert.judgment(pid) {
            syms.extend(pj.word.symbols());
        }
    }
    if let Some(Side::Power { power }) = &j.side {
        syms.extend(power.symbols().map(str::to_string));
    }
    if let Some(Side::Root { root }) = &j.side {
        syms.extend(root.symbols().map(str::to_string));
    }
    syms.contains("s")
}

fn observe(obs: &mut Observer<'_>, group: &CableGroup, j: &Judgment, env: &Env) {
    let word = match j.word.expand(env) {
        Ok(w) => w,
        Err(_) => return,
    };
    let nf = match group.normal_form(&word) {
        Ok(nf) => nf,
        Err(_) => return,
    };
    if let Some((a, b)) = group.lattice_class(&nf) {
        if (a, b) == (0, 0) {
            return;
        }
        obs.report.checked += 1;
        if let Ok(observed) = obs.order.vector_sign(a, b) {
            if observed != j.sign {
                obs.report.mismatches.push(ObserverMismatch {
                    judgment: j.id,
                    grid_point: point_string(env),
                    lattice: (a, b),
                    claimed: j.sign,
                });
            }
        }
    }
}

fn premise<'a>(
    cert: &'a Certificate,
    leaf_ids: &BTreeSet<u32>,
    id: u32,
) -> Result<&'a Judgment, String> {
    let j = cert
        .judgment(id)
        .ok_or_else(|| format!("premise {id} is not defined"))?;
    if !leaf_ids.contains(&id) {
        return Err(format!("premise {id} is not available in this leaf"));
    }
    Ok(j)
}

#[allow(clippy::too_many_arguments)]
fn check_rule(
    cert: &Certificate,
    group: &CableGroup,
    ctx: &LeafCtx<'_>,
    leaf: &Leaf,
    leaf_ids: &BTreeSet<u32>,
    j: &Judgment,
    env: &Env,
    opts: &VerifyOptions,
) -> Result<(), String> {
    let decl = j.word.expand(env).map_err(|e| e.to_string())?;
    match j.rule {
        Rule::Hyp => {
            if !j.premises.is_empty() {
                return Err("hypotheses take no premises".into());
            }
            let (expected, sign) = resolve_hyp(cert, ctx, leaf, j, env)?;
            if expected != decl {
                return Err(format!(
                    "hypothesis word mismatch: expected {expected}, declared {decl}"
                ));
            }
            if j.sign != sign {
                return Err("hypothesis sign mismatch".into());
            }
            Ok(())
        }
        Rule::Decay => {
            if j.premises != [0] {
                return Err("window positivity must cite the fiber-power hypothesis".into());
            }
            if j.sign != Sign::Positive {
                return Err("window positivity is a positive judgment".into());
            }
            for (gen, _) in decl.concrete_syllables().map_err(|e| e.to_string())? {
                if gen != "m" && gen != "l" {
                    return Err(format!(
                        "window word must lie in the peripheral lattice, found generator '{gen}'"
                    ));
                }
            }
            let em = decl
                .exponent_sum("m")
                .as_constant()
                .ok_or("window word not concrete")?;
            let el = decl
                .exponent_sum("l")
                .as_constant()
                .ok_or("window word not concrete")?;
            if el < 1 {
                return Err(format!("window word needs positive l-exponent, got {el}"));
            }
            if cert.r.cmp_fraction(em, el) == std::cmp::Ordering::Greater {
                return Err(format!(
                    "window slope {em}/{el} is below the threshold {}",
                    cert.r
                ));
            }
            Ok(())
        }
        Rule::Prod => {
            if let Some(Side::Iter { iter }) = &j.side {
                if j.premises.len() != 1 {
                    return Err("iterated product takes exactly one premise".into());
                }
                let pj = premise(cert, leaf_ids, j.premises[0])?;
                if pj.sign != j.sign {
                    return Err("iterated product changes sign".into());
                }
                let from = iter.from.eval(env).map_err(|e| e.to_string())?;
                let down = iter.downto.eval(env).map_err(|e| e.to_string())?;
                let bind_min = cert
                    .param_min(&iter.bind)
                    .ok_or_else(|| format!("iteration binder '{}' is not declared", iter.bind))?;
                let mut acc = Word::empty();
                if from >= down {
                    for jv in (down..=from).rev() {
                        if jv < bind_min || jv > opts.grid_bound {
                            return Err(format!(
                                "iterated instantiation {}={} escapes the checked grid",
                                iter.bind, jv
                            ));
                        }
                        let mut e2 = env.clone();
                        e2.insert(iter.bind.clone(), jv);
                        if !gates_pass(pj, &e2)? {
                            return Err(format!(
                                "premise is gated out at {}={}",
                                iter.bind, jv
                            ));
                        }
                        acc = acc.concat(&pj.word.expand(&e2).map_err(|e| e.to_string())?);
                    }
                }
                if acc != decl {
                    return Err(format!(
                        "iterated product mismatch: computed {acc}, declared {decl}"
                    ));
                }
                Ok(())
            } else {
                if j.premises.len() < 2 {
                    return Err("product needs at least two premises".into());
                }
                let mut acc = Word::empty();
                for &pid in &j.premises {
                    let pj = premise(cert, leaf_ids, pid)?;
                    if pj.sign != j.sign {
                        return Err(format!("premise {pid} has the wrong sign for this product"));
                    }
                    if !gates_pass(pj, env)? {
                        return Err(format!("premise {pid} is gated out at this instantiation"));
                    }
                    acc = acc.concat(&pj.word.expand(env).map_err(|e| e.to_string())?);
                }
                if acc != decl {
                    return Err(format!(
                        "product mismatch: computed {acc}, declared {decl}"
                    ));
                }
                Ok(())
            }
        }
        Rule::PowerRoot => {
            if j.premises.len() != 1 {
                return Err("power/root takes exactly one premise".into());
            }
            let pj = premise(cert, leaf_ids, j.premises[0])?;
            if !gates_pass(pj, env)? {
                return Err("premise is gated out at this instantiation".into());
            }
            if pj.sign != j.sign {
                return Err("power and root preserve sign".into());
            }
            let pw = pj.word.expand(env).map_err(|e| e.to_string())?;
            match &j.side {
                Some(Side::Power { power }) => {
                    let c = power.eval(env).map_err(|e| e.to_string())?;
                    if c < 0 {
                        return Err(format!("power exponent {c} must be nonnegative"));
                    }
                    if pw.repeat(c) != decl {
                        return Err("declared word is not the stated power of the premise".into());
                    }
                    Ok(())
                }
                Some(Side::Root { root }) => {
                    let c = root.eval(env).map_err(|e| e.to_string())?;
                    if c < 1 {
                        return Err(format!("root index {c} must be positive"));
                    }
                    if decl.repeat(c) != pw {
                        return Err("premise is not the stated power of the declared word".into());
                    }
                    Ok(())
                }
                _ => Err("power/root needs a power or root payload".into()),
            }
        }
        Rule::Inv => {
            if j.premises.len() != 1 {
                return Err("inversion takes exactly one premise".into());
            }
            let pj = premise(cert, leaf_ids, j.premises[0])?;
            if !gates_pass(pj, env)? {
                return Err("premise is gated out at this instantiation".into());
            }
            if pj.sign.flip() != j.sign {
                return Err("inversion must flip the sign".into());
            }
            let pw = pj.word.expand(env).map_err(|e| e.to_string())?;
            if pw.inverse() != decl {
                return Err("declared word is not the inverse of the premise".into());
            }
            Ok(())
        }
        Rule::Eq => {
            if j.premises.len() != 1 {
                return Err("equality transport takes exactly one premise".into());
            }
            let pj = premise(cert, leaf_ids, j.premises[0])?;
            if !gates_pass(pj, env)? {
                return Err("premise is gated out at this instantiation".into());
            }
            if pj.sign != j.sign {
                return Err("equality transport preserves sign".into());
            }
            let pw = pj.word.expand(env).map_err(|e| e.to_string())?;
            if !group.equal(&decl, &pw).map_err(|e| e.to_string())? {
                return Err(format!(
                    "declared word is not the same cable-space element as its premise ({decl} vs {pw})"
                ));
            }
            Ok(())
        }
    }
}

fn resolve_hyp(
    cert: &Certificate,
    ctx: &LeafCtx<'_>,
    leaf: &Leaf,
    j: &Judgment,
    env: &Env,
) -> Result<(Word, Sign), String> {
    let (name, at) = match &j.side {
        Some(Side::Hyp { hyp, at }) => (hyp.as_str(), at.as_ref()),
        _ => return Err("hypothesis needs a hyp payload".into()),
    };
    if name == "root" {
        if at.is_some() {
            return Err("the fiber-power hypothesis takes no binder".into());
        }
        let w = Word::gen_power("t", cert.p);
        return Ok((w, Sign::Positive));
    }
    if let Some(sc) = &leaf.scan {
        if name == "scan_pos" || name == "scan_prev_neg" {
            if at.is_some() {
                return Err("scan hypotheses take no binder".into());
            }
            let n = *env
                .get(&sc.param)
                .ok_or_else(|| format!("scan parameter '{}' is unbound", sc.param))?;
            let mut e2 = env.clone();
            let (val, sign) = if name == "scan_pos" {
                (n, Sign::Positive)
            } else {
                (n - 1, Sign::Negative)
            };
            e2.insert(sc.param.clone(), val);
            let w = sc.template.expand(&e2).map_err(|e| e.to_string())?;
            return Ok((w, sign));
        }
    }
    let def = ctx
        .hyps
        .get(name)
        .ok_or_else(|| format!("unknown hypothesis '{name}'"))?;
    if def.schema {
        match (def.binder, at) {
            (Some(b), Some(expr)) => {
                let val = expr.eval(env).map_err(|e| e.to_string())?;
                let mut e2 = env.clone();
                e2.insert(b.to_string(), val);
                let w = def.word.expand(&e2).map_err(|e| e.to_string())?;
                Ok((w, def.sign))
            }
            (Some(_), None) => Err(format!(
                "hypothesis '{name}' is a schema and needs an 'at' instantiation"
            )),
            (None, Some(_)) => Err(format!("hypothesis '{name}' has no binder to instantiate")),
            (None, None) => {
                let w = def.word.expand(env).map_err(|e| e.to_string())?;
                Ok((w, def.sign))
            }
        }
    } else {
        if at.is_some() {
            return Err(format!(
                "hypothesis '{name}' fixes its own witness and takes no 'at'"
            ));
        }
        let w = def.word.expand(env).map_err(|e| e.to_string())?;
        Ok((w, def.sign))
    }
}

#[allow(clippy::too_many_arguments)]
fn check_scan(
    cert: &Certificate,
    opts: &VerifyOptions,
    group: &CableGroup,
    sc: &Scan,
    leaf_ids: &BTreeSet<u32>,
    failures: &mut Vec<Failure>,
    notes: &mut Vec<String>,
    vacuous: bool,
) {
    let anchor = match premise_any(cert, leaf_ids, sc.anchor_neg) {
        Ok(j) => j,
        Err(reason) => {
            failures.push(Failure {
                judgment: sc.anchor_neg,
                grid_point: "-".into(),
                reason,
            });
            return;
        }
    };
    let top = match premise_any(cert, leaf_ids, sc.top_pos) {
        Ok(j) => j,
        Err(reason) => {
            failures.push(Failure {
                judgment: sc.top_pos,
                grid_point: "-".into(),
                reason,
            });
            return;
        }
    };
    if anchor.sign != Sign::Negative {
        failures.push(Failure {
            judgment: anchor.id,
            grid_point: "-".into(),
            reason: "scan anchor must be negative".into(),
        });
    }
    if top.sign != Sign::Positive {
        failures.push(Failure {
            judgment: top.id,
            grid_point: "-".into(),
            reason: "scan top must be positive".into(),
        });
    }
    let mut syms = sc.template.symbols();
    syms.remove(&sc.param);
    syms.extend(anchor.word.symbols());
    syms.extend(top.word.symbols());
    syms.remove("s");
    let ranges = match grid_ranges(cert, None, &syms, opts.grid_bound) {
        Ok(r) => r,
        Err(reason) => {
            failures.push(Failure {
                judgment: anchor.id,
                grid_point: "-".into(),
                reason,
            });
            return;
        }
    };
    // The last template point the scan covers; an empty scan pins both
    // boundary words to the same point, making the hypotheses contradictory.
    let top_at = if vacuous { sc.min - 1 } else { sc.max };
    for_each_point(&ranges, |env| {
        let mut check = |jj: &Judgment, n_at: i64, label: &str| {
            let mut e2 = env.clone();
            e2.insert(sc.param.clone(), n_at);
            let expected = match sc.template.expand(&e2) {
                Ok(w) => w,
                Err(e) => {
                    failures.push(Failure {
                        judgment: jj.id,
                        grid_point: point_string(env),
                        reason: e.to_string(),
                    });
                    return;
                }
            };
            let actual = match jj.word.expand(env) {
                Ok(w) => w,
                Err(e) => {
                    failures.push(Failure {
                        judgment: jj.id,
                        grid_point: point_string(env),
                        reason: e.to_string(),
                    });
                    return;
                }
            };
            match group.equal(&actual, &expected) {
                Ok(true) => {}
                Ok(false) => failures.push(Failure {
                    judgment: jj.id,
                    grid_point: point_string(env),
                    reason: format!("{label} does not match the scan template at {}={}", sc.param, n_at),
                }),
                Err(e) => failures.push(Failure {
                    judgment: jj.id,
                    grid_point: point_string(env),
                    reason: e.to_string(),
                }),
            }
        };
        check(anchor, sc.min - 1, "scan anchor");
        check(top, top_at, "scan top");
    });
    if !vacuous {
        for n in sc.min..=sc.max {
            notes.push(format!(
                "scan {}={}: within p-1 bound ({}): {}, within q-1 bound ({}): {}",
                sc.param,
                n,
                cert.p - 1,
                if n < cert.p { "yes" } else { "no" },
                cert.q - 1,
                if n < cert.q { "yes" } else { "no" },
            ));
        }
    }
}

fn premise_any<'a>(
    cert: &'a Certificate,
    leaf_ids: &BTreeSet<u32>,
    id: u32,
) -> Result<&'a Judgment, String> {
    let j = cert
        .judgment(id)
        .ok_or_else(|| format!("judgment {id} is not defined"))?;
    if !leaf_ids.contains(&id) {
        return Err(format!("judgment {id} is not part of this leaf"));
    }
    Ok(j)
}

fn check_formula(cert: &Certificate, leaf: &Leaf, failures: &mut Vec<Failure>) {
    let seq = &leaf.sequence;
    for expr in [&seq.a, &seq.b, &seq.d] {
        for s in expr.symbols() {
            if s != "s" {
                failures.push(Failure {
                    judgment: 0,
                    grid_point: "-".into(),
                    reason: format!(
                        "sequence formula in leaf '{}' may only depend on s, found '{s}'",
                        leaf.name
                    ),
                });
            }
        }
    }
    let pq = cert.p * cert.q;
    if !seq.b.add(&seq.d.scale(-pq)).is_zero() {
        failures.push(Failure {
            judgment: 0,
            grid_point: "-".into(),
            reason: format!(
                "leaf '{}': sequence start b/d must equal p*q = {pq}",
                leaf.name
            ),
        });
    }
}

#[allow(clippy::too_many_arguments)]
fn check_finals(
    cert: &Certificate,
    opts: &VerifyOptions,
    group: &CableGroup,
    ctx: &LeafCtx<'_>,
    leaf: &Leaf,
    leaf_ids: &BTreeSet<u32>,
    failures: &mut Vec<Failure>,
) {
    let params = match CableParams::new(cert.p, cert.q) {
        Ok(p) => p,
        Err(e) => {
            failures.push(Failure {
                judgment: 0,
                grid_point: "-".into(),
                reason: e.to_string(),
            });
            return;
        }
    };
    let periph = cable_peripherals(params);
    let i_min = cert.param_min("i").unwrap_or(0).max(0);
    for i_v in i_min..=opts.grid_bound {
        let covering: Vec<&FinalRef> = leaf
            .finals
            .iter()
            .filter(|fr| fr.min_i <= i_v && fr.max_i.map(|m| i_v <= m).unwrap_or(true))
            .collect();
        if covering.is_empty() {
            failures.push(Failure {
                judgment: 0,
                grid_point: format!("i={i_v}"),
                reason: format!("leaf '{}' has no final judgment covering this index", leaf.name),
            });
            continue;
        }
        for fr in covering {
            let fj = match premise_any(cert, leaf_ids, fr.judgment) {
                Ok(j) => j,
                Err(reason) => {
                    failures.push(Failure {
                        judgment: fr.judgment,
                        grid_point: format!("i={i_v}"),
                        reason,
                    });
                    continue;
                }
            };
            if fj.sign != Sign::Positive {
                failures.push(Failure {
                    judgment: fj.id,
                    grid_point: format!("i={i_v}"),
                    reason: "final judgments must be positive".into(),
                });
                continue;
            }
            let mut syms = judgment_symbols(cert, ctx, fj);
            let seq = &leaf.sequence;
            let seq_uses_s = [&seq.a, &seq.b, &seq.d]
                .iter()
                .any(|e| e.symbols().any(|s| s == "s"));
            let needs_s = template_needs_s(cert, fj) || seq_uses_s;
            if needs_s {
                if let Some(chosen) = &leaf.chosen {
                    syms.extend(chosen.num.symbols().map(str::to_string));
                    syms.extend(chosen.den.symbols().map(str::to_string));
                }
            }
            syms.remove("s");
            syms.remove("i");
            let ranges = match grid_ranges(cert, leaf.scan.as_ref(), &syms, opts.grid_bound) {
                Ok(r) => r,
                Err(reason) => {
                    failures.push(Failure {
                        judgment: fj.id,
                        grid_point: format!("i={i_v}"),
                        reason,
                    });
                    continue;
                }
            };
            for_each_point(&ranges, |rest| {
                let mut env = rest.clone();
                env.insert("i".into(), i_v);
                match gates_pass(fj, &env) {
                    Ok(true) => {}
                    Ok(false) => {
                        failures.push(Failure {
                            judgment: fj.id,
                            grid_point: point_string(&env),
                            reason: "final judgment is gated out at a covered index".into(),
                        });
                        return;
                    }
                    Err(reason) => {
                        failures.push(Failure {
                            judgment: fj.id,
                            grid_point: point_string(&env),
                            reason,
                        });
                        return;
                    }
                }
                if needs_s {
                    let chosen = match leaf.chosen.as_ref() {
                        Some(c) => c,
                        None => {
                            failures.push(Failure {
                                judgment: fj.id,
                                grid_point: point_string(&env),
                                reason: "sequence depends on s but the leaf declares no side condition".into(),
                            });
                            return;
                        }
                    };
                    match resolve_s(chosen, &env, &cert.r, opts.s_cap) {
                        Ok(s) => {
                            env.insert("s".into(), s);
                        }
                        Err(reason) => {
                            failures.push(Failure {
                                judgment: fj.id,
                                grid_point: point_string(&env),
                                reason,
                            });
                            return;
                        }
                    }
                }
                let seq = &leaf.sequence;
                let (a, b, d) = match (seq.a.eval(&env), seq.b.eval(&env), seq.d.eval(&env)) {
                    (Ok(a), Ok(b), Ok(d)) => (a, b, d),
                    _ => {
                        failures.push(Failure {
                            judgment: fj.id,
                            grid_point: point_string(&env),
                            reason: "sequence formula does not evaluate".into(),
                        });
                        return;
                    }
                };
                if a < 1 || d < 1 {
                    failures.push(Failure {
                        judgment: fj.id,
                        grid_point: point_string(&env),
                        reason: format!("sequence needs a >= 1 and d >= 1, got a={a}, d={d}"),
                    });
                    return;
                }
                let exp = a.checked_mul(i_v).and_then(|x| x.checked_add(b));
                let exp = match exp {
                    Some(e) => e,
                    None => {
                        failures.push(Failure {
                            judgment: fj.id,
                            grid_point: point_string(&env),
                            reason: "sequence exponent overflows".into(),
                        });
                        return;
                    }
                };
                let reference = periph.meridian.repeat(exp).concat(&periph.longitude.repeat(d));
                let decl = match fj.word.expand(&env) {
                    Ok(w) => w,
                    Err(e) => {
                        failures.push(Failure {
                            judgment: fj.id,
                            grid_point: point_string(&env),
                            reason: e.to_string(),
                        });
                        return;
                    }
                };
                match group.equal(&decl, &reference) {
                    Ok(true) => {}
                    Ok(false) => {
                        failures.push(Failure {
                            judgment: fj.id,
                            grid_point: point_string(&env),
                            reason: format!(
                                "final word is not the peripheral power mu_C^{exp} la_C^{d}"
                            ),
                        });
                        return;
                    }
                    Err(e) => {
                        failures.push(Failure {
                            judgment: fj.id,
                            grid_point: point_string(&env),
                            reason: e.to_string(),
                        });
                        return;
                    }
                }
                match group.is_identity(&reference) {
                    Ok(false) => {}
                    Ok(true) => failures.push(Failure {
                        judgment: fj.id,
                        grid_point: point_string(&env),
                        reason: "final peripheral power is trivial".into(),
                    }),
                    Err(e) => failures.push(Failure {
                        judgment: fj.id,
                        grid_point: point_string(&env),
                        reason: e.to_string(),
                    }),
                }
            });
        }
    }
}

fn verify_audits(
    cert: &Certificate,
    opts: &VerifyOptions,
    group: &CableGroup,
    failures: &mut Vec<Failure>,
) {
    for audit in &cert.identity_audits {
        let mut syms = audit.lhs.symbols();
        syms.extend(audit.rhs.symbols());
        let mut ranges = Vec::new();
        let mut ok = true;
        for s in &syms {
            let decl = audit.params.iter().find(|p| p.name == *s);
            match decl {
                Some(p) => {
                    let max = p.max.unwrap_or(opts.grid_bound).min(opts.grid_bound.max(p.min));
                    ranges.push((s.clone(), (p.min..=max).collect::<Vec<i64>>()));
                }
                None => {
                    failures.push(Failure {
                        judgment: 0,
                        grid_point: "-".into(),
                        reason: format!(
                            "identity audit '{}' uses undeclared parameter '{s}'",
                            audit.name
                        ),
                    });
                    ok = false;
                }
            }
        }
        if !ok {
            continue;
        }
        for_each_point(&ranges, |env| {
            let lhs = audit.lhs.expand(env);
            let rhs = audit.rhs.expand(env);
            match (lhs, rhs) {
                (Ok(l), Ok(r)) => match group.equal(&l, &r) {
                    Ok(true) => {}
                    Ok(false) => failures.push(Failure {
                        judgment: 0,
                        grid_point: point_string(env),
                        reason: format!("identity audit '{}' fails", audit.name),
                    }),
                    Err(e) => failures.push(Failure {
                        judgment: 0,
                        grid_point: point_string(env),
                        reason: format!("identity audit '{}': {e}", audit.name),
                    }),
                },
                _ => failures.push(Failure {
                    judgment: 0,
                    grid_point: point_string(env),
                    reason: format!("identity audit '{}' does not evaluate", audit.name),
                }),
            }
        });
    }
}

//! Finite positive-cone consistency search.
//!
//! A ball in the Cayley graph is enumerated through a word-problem
//! backend, producing elements with a total inverse map and a partial
//! product map. A positive cone restricted to the ball must put opposite
//! signs on inverse pairs and be closed under products, so a backtracking
//! sign search either exhibits a consistent assignment or a contradiction
//! trace that replays step by step against the instance.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

use crate::backend::{Backend, BackendError, Eq3};
use crate::presentation::Presentation;
use crate::slope::Sign;
use crate::word::{Word, WordError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("replay failed at event {0}: {1}")]
    Replay(usize, String),
}

/// Finite window of a group: nontrivial elements with inverse and
/// (partial) product data certified by the backend.
#[derive(Debug, Clone)]
pub struct ConeSearchInstance {
    pub elements: Vec<Word>,
    pub inverse: Vec<usize>,
    pub products: BTreeMap<(usize, usize), usize>,
    /// Pairs whose product is the identity; includes (i, i) for
    /// self-inverse elements, which no sign assignment can satisfy.
    pub identity_pairs: BTreeSet<(usize, usize)>,
    pub radius: usize,
    /// Set when bounded-backend UNKNOWN answers forced conservative
    /// choices; assignments on such windows prove nothing.
    pub heuristic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    InversePair { a: usize, b: usize },
    IdentityProduct { a: usize, b: usize },
    ProductClosure { a: usize, b: usize, c: usize },
    SelfInverse { a: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Decide { var: usize, sign: Sign },
    Imply { var: usize, sign: Sign, by: Constraint },
    Conflict { by: Constraint },
    Flip { var: usize, sign: Sign },
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SearchOutcome {
    Assignment { signs: Vec<Sign> },
    Contradiction { trace: Vec<TraceEvent> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Assignment,
    Contradiction,
    NoObstruction,
}

/// All elements representable by words of length at most `radius`,
/// breadth first over sorted generators (g then g^-1), first-seen word
/// as display unless the backend rebuilds a canonical one.
pub fn enumerate_ball(
    pres: &Presentation,
    radius: usize,
    backend: &Backend,
) -> Result<ConeSearchInstance, SearchError> {
    let mut gens: Vec<String> = pres.generators.clone();
    gens.sort();
    let mut letters: Vec<Word> = Vec::new();
    for g in &gens {
        letters.push(Word::gen_power(g, 1));
        letters.push(Word::gen_power(g, -1));
    }

    let mut heuristic = false;
    let mut elements: Vec<Word> = Vec::new();
    let mut keys: BTreeMap<String, usize> = BTreeMap::new();
    let empty_key = if backend.is_exact() {
        Some(backend.canonical_key(&Word::empty())?)
    } else {
        None
    };

    let mut frontier: Vec<Word> = vec![Word::empty()];
    for _depth in 1..=radius {
        let mut next: Vec<Word> = Vec::new();
        for w in &frontier {
            for letter in &letters {
                let cand = w.concat(letter);
                if cand.is_empty() {
                    continue;
                }
                if let Some(empty_key) = &empty_key {
                    let key = backend.canonical_key(&cand)?;
                    if key == *empty_key || keys.contains_key(&key) {
                        continue;
                    }
                    keys.insert(key, elements.len());
                    let display = backend.canonical_word(&cand)?.unwrap_or_else(|| cand.clone());
                    elements.push(display);
                    next.push(cand.clone());
                } else {
                    match backend.is_identity(&cand)? {
                        Eq3::Equal => continue,
                        Eq3::Unknown => heuristic = true,
                        Eq3::Distinct => {}
                    }
                    let mut duplicate = false;
                    for e in &elements {
                        match backend.words_equal(&cand, e)? {
                            Eq3::Equal => {
                                duplicate = true;
                                break;
                            }
                            Eq3::Unknown => heuristic = true,
                            Eq3::Distinct => {}
                        }
                    }
                    if duplicate {
                        continue;
                    }
                    elements.push(cand.clone());
                    next.push(cand);
                }
            }
        }
        frontier = next;
    }

    // Total inverse map; a bounded backend that cannot recognize an
    // inverse in the window gets it adjoined so closure holds.
    let mut inverse: Vec<usize> = vec![usize::MAX; elements.len()];
    let mut i = 0;
    while i < elements.len() {
        if inverse[i] != usize::MAX {
            i += 1;
            continue;
        }
        let inv_word = elements[i].inverse();
        let found = if let Some(_key) = &empty_key {
            keys.get(&backend.canonical_key(&inv_word)?).copied()
        } else {
            let mut found = None;
            for (j, e) in elements.iter().enumerate() {
                match backend.words_equal(&inv_word, e)? {
                    Eq3::Equal => {
                        found = Some(j);
                        break;
                    }
                    Eq3::Unknown => heuristic = true,
                    Eq3::Distinct => {}
                }
            }
            found
        };
        match found {
            Some(j) => {
                inverse[i] = j;
                inverse[j] = i;
            }
            None => {
                elements.push(inv_word);
                inverse.push(usize::MAX);
                let j = elements.len() - 1;
                inverse[i] = j;
                inverse[j] = i;
                heuristic = true;
            }
        }
        i += 1;
    }

    let mut products: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut identity_pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 0..elements.len() {
        for j in 0..elements.len() {
            let prod = elements[i].concat(&elements[j]);
            if let Some(empty_key) = &empty_key {
                let key = backend.canonical_key(&prod)?;
                if key == *empty_key {
                    identity_pairs.insert((i, j));
                } else if let Some(&k) = keys.get(&key) {
                    products.insert((i, j), k);
                }
            } else {
                match backend.is_identity(&prod)? {
                    Eq3::Equal => {
                        identity_pairs.insert((i, j));
                        continue;
                    }
                    Eq3::Unknown | Eq3::Distinct => {}
                }
                for (k, e) in elements.iter().enumerate() {
                    if backend.words_equal(&prod, e)? == Eq3::Equal {
                        products.insert((i, j), k);
                        break;
                    }
                }
            }
        }
    }

    Ok(ConeSearchInstance {
        elements,
        inverse,
        products,
        identity_pairs,
        radius,
        heuristic,
    })
}

/// First element of finite order at most max_power, scanning elements in
/// window order and exponents in increasing order.
pub fn torsion_scan(
    inst: &ConeSearchInstance,
    backend: &Backend,
    max_power: u32,
) -> Result<Option<(usize, u32)>, SearchError> {
    for (i, e) in inst.elements.iter().enumerate() {
        for d in 2..=max_power {
            if backend.is_identity(&e.repeat(d as i64))? == Eq3::Equal {
                return Ok(Some((i, d)));
            }
        }
    }
    Ok(None)
}

struct Solver<'a> {
    inst: &'a ConeSearchInstance,
    assign: Vec<Option<Sign>>,
    /// (var, flipped) for decisions, in order; implied vars ride on the
    /// implication trail below.
    decisions: Vec<(usize, bool)>,
    /// All assigned vars in chronological order with their decision depth.
    trail: Vec<(usize, usize)>,
    trace: Vec<TraceEvent>,
}

impl<'a> Solver<'a> {
    fn new(inst: &'a ConeSearchInstance) -> Solver<'a> {
        Solver {
            inst,
            assign: vec![None; inst.elements.len()],
            decisions: Vec::new(),
            trail: Vec::new(),
            trace: Vec::new(),
        }
    }

    fn set(&mut self, var: usize, sign: Sign) {
        self.assign[var] = Some(sign);
        self.trail.push((var, self.decisions.len()));
    }

    /// Scan constraints to fixpoint; Some(conflict) if one is violated.
    fn propagate(&mut self) -> Option<Constraint> {
        loop {
            let mut changed = false;
            for (i, &inv) in self.inst.inverse.iter().enumerate() {
                let Some(s) = self.assign[i] else { continue };
                if inv == i {
                    return Some(Constraint::SelfInverse { a: i });
                }
                match self.assign[inv] {
                    None => {
                        let by = Constraint::InversePair { a: i, b: inv };
                        self.set(inv, s.flip());
                        self.trace.push(TraceEvent::Imply {
                            var: inv,
                            sign: s.flip(),
                            by,
                        });
                        changed = true;
                    }
                    Some(t) if t == s => {
                        return Some(Constraint::InversePair { a: i, b: inv });
                    }
                    Some(_) => {}
                }
            }
            for &(a, b) in &self.inst.identity_pairs {
                if a == b {
                    if self.assign[a].is_some() {
                        return Some(Constraint::IdentityProduct { a, b });
                    }
                    continue;
                }
                match (self.assign[a], self.assign[b]) {
                    (Some(sa), Some(sb)) if sa == sb => {
                        return Some(Constraint::IdentityProduct { a, b });
                    }
                    (Some(sa), None) => {
                        let by = Constraint::IdentityProduct { a, b };
                        self.set(b, sa.flip());
                        self.trace.push(TraceEvent::Imply {
                            var: b,
                            sign: sa.flip(),
                            by,
                        });
                        changed = true;
                    }
                    (None, Some(sb)) => {
                        let by = Constraint::IdentityProduct { a, b };
                        self.set(a, sb.flip());
                        self.trace.push(TraceEvent::Imply {
                            var: a,
                            sign: sb.flip(),
                            by,
                        });
                        changed = true;
                    }
                    _ => {}
                }
            }
            for (&(a, b), &c) in &self.inst.products {
                let (Some(sa), Some(sb)) = (self.assign[a], self.assign[b]) else {
                    continue;
                };
                if sa != sb {
                    continue;
                }
                match self.assign[c] {
                    None => {
                        let by = Constraint::ProductClosure { a, b, c };
                        self.set(c, sa);
                        self.trace.push(TraceEvent::Imply { var: c, sign: sa, by });
                        changed = true;
                    }
                    Some(sc) if sc != sa => {
                        return Some(Constraint::ProductClosure { a, b, c });
                    }
                    Some(_) => {}
                }
            }
            if !changed {
                return None;
            }
        }
    }

    /// Unwind to the most recent unflipped decision and take its other
    /// branch; false when the tree is exhausted.
    fn backtrack(&mut self) -> bool {
        while let Some(&(var, flipped)) = self.decisions.last() {
            let depth = self.decisions.len();
            while let Some(&(v, d)) = self.trail.last() {
                if d < depth {
                    break;
                }
                self.assign[v] = None;
                self.trail.pop();
            }
            self.decisions.pop();
            if flipped {
                continue;
            }
            self.decisions.push((var, true));
            self.set(var, Sign::Negative);
            self.trace.push(TraceEvent::Flip {
                var,
                sign: Sign::Negative,
            });
            return true;
        }
        false
    }

    fn run(mut self) -> SearchOutcome {
        loop {
            if let Some(conflict) = self.propagate() {
                self.trace.push(TraceEvent::Conflict { by: conflict });
                if !self.backtrack() {
                    self.trace.push(TraceEvent::Exhausted);
                    return SearchOutcome::Contradiction { trace: self.trace };
                }
                continue;
            }
            let Some(var) = self.assign.iter().position(Option::is_none) else {
                let signs = self.assign.iter().map(|s| s.unwrap()).collect();
                return SearchOutcome::Assignment { signs };
            };
            self.decisions.push((var, false));
            self.set(var, Sign::Positive);
            self.trace.push(TraceEvent::Decide {
                var,
                sign: Sign::Positive,
            });
        }
    }
}

pub fn cone_search(inst: &ConeSearchInstance) -> SearchOutcome {
    Solver::new(inst).run()
}

pub fn classify(outcome: &SearchOutcome, inst: &ConeSearchInstance) -> Classification {
    match outcome {
        SearchOutcome::Contradiction { .. } => Classification::Contradiction,
        SearchOutcome::Assignment { .. } if inst.heuristic => Classification::NoObstruction,
        SearchOutcome::Assignment { .. } => Classification::Assignment,
    }
}

/// Check a full assignment against every constraint of the instance.
pub fn verify_assignment(inst: &ConeSearchInstance, signs: &[Sign]) -> bool {
    if signs.len() != inst.elements.len() {
        return false;
    }
    for (i, &inv) in inst.inverse.iter().enumerate() {
        if inv == i || signs[i] == signs[inv] {
            return false;
        }
    }
    for &(a, b) in &inst.identity_pairs {
        if a == b || signs[a] == signs[b] {
            return false;
        }
    }
    for (&(a, b), &c) in &inst.products {
        if signs[a] == signs[b] && signs[c] != signs[a] {
            return false;
        }
    }
    true
}

/// Independently re-verify a contradiction trace: each implication must
/// be forced by a constraint present in the instance, each conflict must
/// be real under the replayed assignment, each flip must target the most
/// recent unflipped decision, and the trace must end exhausted.
pub fn replay_refutation(
    inst: &ConeSearchInstance,
    trace: &[TraceEvent],
) -> Result<(), SearchError> {
    let n = inst.elements.len();
    let mut assign: Vec<Option<Sign>> = vec![None; n];
    let mut decisions: Vec<(usize, bool)> = Vec::new();
    let mut trail: Vec<(usize, usize)> = Vec::new();
    let fail = |idx: usize, msg: &str| Err(SearchError::Replay(idx, msg.to_string()));

    let check_constraint = |by: &Constraint| -> bool {
        match by {
            Constraint::InversePair { a, b } => {
                *a < n && *b < n && inst.inverse[*a] == *b
            }
            Constraint::IdentityProduct { a, b } => inst.identity_pairs.contains(&(*a, *b)),
            Constraint::ProductClosure { a, b, c } => {
                inst.products.get(&(*a, *b)) == Some(c)
            }
            Constraint::SelfInverse { a } => *a < n && inst.inverse[*a] == *a,
        }
    };

    let mut ended = false;
    for (idx, event) in trace.iter().enumerate() {
        if ended {
            return fail(idx, "events after exhaustion");
        }
        match event {
            TraceEvent::Decide { var, sign } => {
                if *var >= n || assign[*var].is_some() {
                    return fail(idx, "decide on assigned or missing var");
                }
                decisions.push((*var, false));
                assign[*var] = Some(*sign);
                trail.push((*var, decisions.len()));
            }
            TraceEvent::Imply { var, sign, by } => {
                if *var >= n || assign[*var].is_some() {
                    return fail(idx, "imply on assigned or missing var");
                }
                if !check_constraint(by) {
                    return fail(idx, "cited constraint absent from instance");
                }
                let forced = match by {
                    Constraint::InversePair { a, b } | Constraint::IdentityProduct { a, b } => {
                        let other = if a == var { *b } else if b == var { *a } else {
                            return fail(idx, "implied var not part of constraint");
                        };
                        match assign[other] {
                            Some(s) => s.flip() == *sign,
                            None => false,
                        }
                    }
                    Constraint::ProductClosure { a, b, c } => {
                        if c != var {
                            return fail(idx, "implied var not the product");
                        }
                        matches!((assign[*a], assign[*b]), (Some(sa), Some(sb))
                            if sa == sb && sa == *sign)
                    }
                    Constraint::SelfInverse { .. } => false,
                };
                if !forced {
                    return fail(idx, "implication not forced");
                }
                assign[*var] = Some(*sign);
                trail.push((*var, decisions.len()));
            }
            TraceEvent::Conflict { by } => {
                if !check_constraint(by) {
                    return fail(idx, "cited constraint absent from instance");
                }
                let violated = match by {
                    Constraint::InversePair { a, b } | Constraint::IdentityProduct { a, b } => {
                        if a == b {
                            assign[*a].is_some()
                        } else {
                            matches!((assign[*a], assign[*b]), (Some(sa), Some(sb)) if sa == sb)
                        }
                    }
                    Constraint::ProductClosure { a, b, c } => {
                        matches!(
                            (assign[*a], assign[*b], assign[*c]),
                            (Some(sa), Some(sb), Some(sc)) if sa == sb && sc != sa
                        )
                    }
                    Constraint::SelfInverse { a } => assign[*a].is_some(),
                };
                if !violated {
                    return fail(idx, "conflict not violated");
                }
            }
            TraceEvent::Flip { var, sign } => {
                loop {
                    let Some(&(v, flipped)) = decisions.last() else {
                        return fail(idx, "flip with no open decision");
                    };
                    let depth = decisions.len();
                    while let Some(&(tv, td)) = trail.last() {
                        if td < depth {
                            break;
                        }
                        assign[tv] = None;
                        trail.pop();
                    }
                    decisions.pop();
                    if flipped {
                        continue;
                    }
                    if v != *var {
                        return fail(idx, "flip skipped an unflipped decision");
                    }
                    if *sign != Sign::Negative {
                        return fail(idx, "flip must take the negative branch");
                    }
                    decisions.push((v, true));
                    assign[v] = Some(*sign);
                    trail.push((v, decisions.len()));
                    break;
                }
            }
            TraceEvent::Exhausted => {
                if decisions.iter().any(|&(_, flipped)| !flipped) {
                    return fail(idx, "exhausted with open branches");
                }
                ended = true;
            }
        }
    }
    if !ended {
        return fail(trace.len(), "trace does not end exhausted");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::backend_for;

    fn instance(gens: &[&str], rels: &[&str], radius: usize) -> ConeSearchInstance {
        let pres = Presentation::new(gens, rels).unwrap();
        let backend = backend_for(&pres).unwrap();
        enumerate_ball(&pres, radius, &backend).unwrap()
    }

    #[test]
    fn z2_ball_counts() {
        let inst = instance(&["m", "l"], &["m^1 l^1 m^-1 l^-1"], 2);
        assert_eq!(inst.elements.len(), 12);
        assert!(!inst.heuristic);
        let inst = instance(&["m", "l"], &["m^1 l^1 m^-1 l^-1"], 4);
        assert_eq!(inst.elements.len(), 40);
    }

    #[test]
    fn cyclic_ball_frozen() {
        let inst = instance(&["a"], &["a^3"], 3);
        let displays: Vec<String> = inst.elements.iter().map(|w| w.to_string()).collect();
        assert_eq!(displays, vec!["a^1", "a^2"]);
        assert_eq!(inst.inverse, vec![1, 0]);
        assert!(inst.identity_pairs.contains(&(0, 1)));
        assert_eq!(inst.products.get(&(0, 0)), Some(&1));
    }

    #[test]
    fn free_product_ball_frozen() {
        let inst = instance(&["a", "b"], &["a^2", "b^3"], 2);
        assert_eq!(inst.elements.len(), 7);
        let displays: Vec<String> = inst.elements.iter().map(|w| w.to_string()).collect();
        assert!(displays.contains(&"a^1".to_string()));
        assert!(displays.contains(&"b^2".to_string()));
        assert!(displays.contains(&"a^1 b^2".to_string()));
    }

    #[test]
    fn torsion_scan_examples() {
        let inst = instance(&["a"], &["a^3"], 3);
        let pres = Presentation::new(&["a"], &["a^3"]).unwrap();
        let backend = backend_for(&pres).unwrap();
        assert_eq!(torsion_scan(&inst, &backend, 6).unwrap(), Some((0, 3)));

        let inst = instance(&["a", "b"], &["a^2", "b^3"], 2);
        let pres = Presentation::new(&["a", "b"], &["a^2", "b^3"]).unwrap();
        let backend = backend_for(&pres).unwrap();
        assert_eq!(torsion_scan(&inst, &backend, 6).unwrap(), Some((0, 2)));

        let inst = instance(&["m", "l"], &["m^1 l^1 m^-1 l^-1"], 3);
        let pres = Presentation::new(&["m", "l"], &["m^1 l^1 m^-1 l^-1"]).unwrap();
        let backend = backend_for(&pres).unwrap();
        assert_eq!(torsion_scan(&inst, &backend, 8).unwrap(), None);
    }

    #[test]
    fn cyclic_contradiction_replays() {
        let inst = instance(&["a"], &["a^3"], 3);
        let outcome = cone_search(&inst);
        let SearchOutcome::Contradiction { trace } = &outcome else {
            panic!("expected contradiction");
        };
        replay_refutation(&inst, trace).unwrap();
        assert_eq!(classify(&outcome, &inst), Classification::Contradiction);

        // Tampering breaks the replay.
        let mut bad = trace.clone();
        bad.pop();
        assert!(replay_refutation(&inst, &bad).is_err());
        let mut bad = trace.clone();
        bad.remove(0);
        assert!(replay_refutation(&inst, &bad).is_err());
    }

    #[test]
    fn free_product_contradiction() {
        let inst = instance(&["a", "b"], &["a^2", "b^3"], 3);
        let outcome = cone_search(&inst);
        let SearchOutcome::Contradiction { trace } = &outcome else {
            panic!("expected contradiction");
        };
        replay_refutation(&inst, trace).unwrap();
    }

    #[test]
    fn z2_assignment_and_reversal() {
        let inst = instance(&["m", "l"], &["m^1 l^1 m^-1 l^-1"], 4);
        let outcome = cone_search(&inst);
        let SearchOutcome::Assignment { signs } = &outcome else {
            panic!("expected assignment");
        };
        assert!(verify_assignment(&inst, signs));
        let reversed: Vec<Sign> = signs.iter().map(|s| s.flip()).collect();
        assert!(verify_assignment(&inst, &reversed));
        assert_eq!(classify(&outcome, &inst), Classification::Assignment);
    }

    #[test]
    fn klein_bottle_assignment() {
        let inst = instance(&["a", "b"], &["a^1 b^1 a^1 b^-1"], 4);
        assert!(!inst.heuristic);
        let outcome = cone_search(&inst);
        let SearchOutcome::Assignment { signs } = outcome else {
            panic!("expected assignment");
        };
        assert!(verify_assignment(&inst, &signs));
    }

    #[test]
    fn trefoil_assignment() {
        let inst = instance(&["x", "y"], &["x^2 y^-3"], 3);
        assert!(!inst.heuristic);
        let outcome = cone_search(&inst);
        let SearchOutcome::Assignment { signs } = outcome else {
            panic!("expected assignment");
        };
        assert!(verify_assignment(&inst, &signs));
    }

    #[test]
    fn heuristic_window_classifies_no_obstruction() {
        let mut pres = Presentation::new(&["x", "y"], &["x^2 y^-3"]).unwrap();
        pres.backend = Some("generic".to_string());
        let backend = crate::backend::backend_for_with_budget(&pres, 1_000).unwrap();
        let inst = enumerate_ball(&pres, 1, &backend).unwrap();
        let outcome = cone_search(&inst);
        if let SearchOutcome::Assignment { .. } = &outcome {
            assert!(inst.heuristic);
            assert_eq!(classify(&outcome, &inst), Classification::NoObstruction);
        }
    }
}

//! Word-problem backends.
//!
//! Exact backends (free abelian, free products of cyclics, two-generator
//! edge amalgams, the cable amalgam, quotients onto Z) decide equality by
//! canonical form. The generic backend does bounded relator rewriting and
//! answers EQUAL or UNKNOWN, never DISTINCT.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::presentation::Presentation;
use crate::rational::gcd;
use crate::word::{Word, WordError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BackendError {
    #[error("word uses generator {0} unknown to the backend")]
    UnknownGenerator(String),
    #[error("backend requires concrete words: {0}")]
    NotConcrete(String),
    #[error("invalid amalgam parameters p={0}, q={1}")]
    BadAmalgamParams(i64, i64),
    #[error("unsupported backend hint {0}")]
    BadHint(String),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// Three-valued equality: bounded backends cannot certify distinctness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eq3 {
    Equal,
    Distinct,
    Unknown,
}

/// (u, v) with p*u - q*v = 1, v minimal in [1, p-1].
pub fn euclid_uv(p: i64, q: i64) -> Result<(i64, i64), BackendError> {
    if p < 2 || q < 1 || gcd(p, q) != 1 {
        return Err(BackendError::BadAmalgamParams(p, q));
    }
    for v in 1..p {
        if (1 + q * v) % p == 0 {
            return Ok(((1 + q * v) / p, v));
        }
    }
    Err(BackendError::BadAmalgamParams(p, q))
}

/// The cable-space group <m, l, t | [m, l] = 1, t^p = m^q l^p>, an
/// amalgam of Z^2 and Z over the central edge t^p = m^q l^p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CableGroup {
    pub p: i64,
    pub q: i64,
    pub u: i64,
    pub v: i64,
}

/// Normal form: central exponent z (units of t^p) followed by alternating
/// syllables from the two factors, each a nontrivial coset representative:
/// Lattice(y) stands for (m^u l^v)^y, Turn(c) for t^c with 0 < c < p.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GpqNormalForm {
    pub z: i64,
    pub syls: Vec<GpqSyl>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GpqSyl {
    Lattice { y: i64 },
    Turn { c: i64 },
}

impl CableGroup {
    pub fn new(p: i64, q: i64) -> Result<CableGroup, BackendError> {
        let (u, v) = euclid_uv(p, q)?;
        Ok(CableGroup { p, q, u, v })
    }

    /// Split a lattice element (a, b) = x * (q, p) + y * (u, v) over the
    /// basis {edge generator, coset direction}; pu - qv = 1 makes the
    /// change of basis unimodular.
    fn split_lattice(&self, a: i64, b: i64) -> (i64, i64) {
        let x = b * self.u - a * self.v;
        let y = self.p * a - self.q * b;
        (x, y)
    }

    fn push_lattice(&self, nf: &mut GpqNormalForm, a: i64, b: i64) {
        let (mut a, mut b) = (a, b);
        if let Some(GpqSyl::Lattice { y }) = nf.syls.last().copied() {
            nf.syls.pop();
            a += self.u * y;
            b += self.v * y;
        }
        let (x, y) = self.split_lattice(a, b);
        nf.z += x;
        if y != 0 {
            nf.syls.push(GpqSyl::Lattice { y });
        }
    }

    fn push_turn(&self, nf: &mut GpqNormalForm, c: i64) {
        let mut total = c;
        if let Some(GpqSyl::Turn { c: c0 }) = nf.syls.last().copied() {
            nf.syls.pop();
            total += c0;
        }
        nf.z += total.div_euclid(self.p);
        let rem = total.rem_euclid(self.p);
        if rem != 0 {
            nf.syls.push(GpqSyl::Turn { c: rem });
        }
    }

    pub fn normal_form(&self, w: &Word) -> Result<GpqNormalForm, BackendError> {
        let mut nf = GpqNormalForm { z: 0, syls: vec![] };
        for (gen, e) in w.concrete_syllables()? {
            match gen.as_str() {
                "m" => self.push_lattice(&mut nf, e, 0),
                "l" => self.push_lattice(&mut nf, 0, e),
                "t" => self.push_turn(&mut nf, e),
                other => return Err(BackendError::UnknownGenerator(other.to_string())),
            }
        }
        Ok(nf)
    }

    pub fn equal(&self, w1: &Word, w2: &Word) -> Result<bool, BackendError> {
        Ok(self.normal_form(w1)? == self.normal_form(w2)?)
    }

    pub fn is_identity(&self, w: &Word) -> Result<bool, BackendError> {
        let nf = self.normal_form(w)?;
        Ok(nf.z == 0 && nf.syls.is_empty())
    }

    /// If the element lies in the peripheral lattice <m, l>, its (a, b)
    /// exponent pair; None for genuinely mixed elements.
    pub fn lattice_class(&self, nf: &GpqNormalForm) -> Option<(i64, i64)> {
        match nf.syls.as_slice() {
            [] => Some((nf.z * self.q, nf.z * self.p)),
            [GpqSyl::Lattice { y }] => {
                Some((nf.z * self.q + y * self.u, nf.z * self.p + y * self.v))
            }
            _ => None,
        }
    }

    pub fn canonical_key(&self, w: &Word) -> Result<String, BackendError> {
        Ok(self.normal_form(w)?.to_string())
    }
}

impl fmt::Display for GpqNormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z{}", self.z)?;
        for syl in &self.syls {
            match syl {
                GpqSyl::Lattice { y } => write!(f, "|L{y}")?,
                GpqSyl::Turn { c } => write!(f, "|T{c}")?,
            }
        }
        Ok(())
    }
}

/// The edge amalgam <x, y | x^p = y^q> with p, q >= 2 (torus-knot groups
/// and the x^2 = y^2 form of the Klein-bottle group).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeGroup {
    pub xg: String,
    pub yg: String,
    pub p: i64,
    pub q: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgeNormalForm {
    pub z: i64,
    pub syls: Vec<EdgeSyl>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeSyl {
    X { c: i64 },
    Y { c: i64 },
}

impl EdgeGroup {
    pub fn new(xg: &str, p: i64, yg: &str, q: i64) -> Result<EdgeGroup, BackendError> {
        if p < 2 || q < 2 || xg == yg {
            return Err(BackendError::BadAmalgamParams(p, q));
        }
        Ok(EdgeGroup {
            xg: xg.to_string(),
            yg: yg.to_string(),
            p,
            q,
        })
    }

    fn push(&self, nf: &mut EdgeNormalForm, is_x: bool, e: i64) {
        let modulus = if is_x { self.p } else { self.q };
        let mut total = e;
        match (nf.syls.last().copied(), is_x) {
            (Some(EdgeSyl::X { c }), true) => {
                nf.syls.pop();
                total += c;
            }
            (Some(EdgeSyl::Y { c }), false) => {
                nf.syls.pop();
                total += c;
            }
            _ => {}
        }
        nf.z += total.div_euclid(modulus);
        let rem = total.rem_euclid(modulus);
        if rem != 0 {
            nf.syls.push(if is_x {
                EdgeSyl::X { c: rem }
            } else {
                EdgeSyl::Y { c: rem }
            });
        }
    }

    pub fn normal_form(&self, w: &Word) -> Result<EdgeNormalForm, BackendError> {
        let mut nf = EdgeNormalForm { z: 0, syls: vec![] };
        for (gen, e) in w.concrete_syllables()? {
            if gen == self.xg {
                self.push(&mut nf, true, e);
            } else if gen == self.yg {
                self.push(&mut nf, false, e);
            } else {
                return Err(BackendError::UnknownGenerator(gen));
            }
        }
        Ok(nf)
    }

    pub fn equal(&self, w1: &Word, w2: &Word) -> Result<bool, BackendError> {
        Ok(self.normal_form(w1)? == self.normal_form(w2)?)
    }

    pub fn canonical_key(&self, w: &Word) -> Result<String, BackendError> {
        let nf = self.normal_form(w)?;
        let mut s = format!("z{}", nf.z);
        for syl in nf.syls {
            match syl {
                EdgeSyl::X { c } => s.push_str(&format!("|x{c}")),
                EdgeSyl::Y { c } => s.push_str(&format!("|y{c}")),
            }
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    /// Z^gens; every relator is a commutator.
    FreeAbelian { generators: Vec<String> },
    /// Free product of cyclic groups; order 0 means an infinite factor.
    CyclicProduct { orders: BTreeMap<String, u64> },
    Cable(CableGroup),
    Edge(EdgeGroup),
    /// Quotient onto Z: each generator maps to an integer weight.
    WeightedCyclic { weights: BTreeMap<String, i64> },
    /// Words are rewritten through `map` into the inner backend (an
    /// isomorphism onto it, so equality transfers both ways).
    Translated {
        label: String,
        map: BTreeMap<String, Word>,
        inner: Box<Backend>,
    },
    Generic {
        presentation: Presentation,
        budget: usize,
    },
}

impl Backend {
    pub fn name(&self) -> String {
        match self {
            Backend::FreeAbelian { .. } => "free-abelian".to_string(),
            Backend::CyclicProduct { .. } => "cyclic-product".to_string(),
            Backend::Cable(_) => "cable-amalgam".to_string(),
            Backend::Edge(_) => "edge-amalgam".to_string(),
            Backend::WeightedCyclic { .. } => "weighted-cyclic".to_string(),
            Backend::Translated { label, .. } => label.clone(),
            Backend::Generic { .. } => "generic".to_string(),
        }
    }

    /// Exact backends decide equality; the generic backend only bounds it.
    pub fn is_exact(&self) -> bool {
        !matches!(self, Backend::Generic { .. })
    }

    pub fn words_equal(&self, w1: &Word, w2: &Word) -> Result<Eq3, BackendError> {
        match self {
            Backend::Generic { presentation, budget } => {
                generic_equal(presentation, *budget, w1, w2)
            }
            _ => {
                let k1 = self.canonical_key(w1)?;
                let k2 = self.canonical_key(w2)?;
                Ok(if k1 == k2 { Eq3::Equal } else { Eq3::Distinct })
            }
        }
    }

    pub fn is_identity(&self, w: &Word) -> Result<Eq3, BackendError> {
        self.words_equal(w, &Word::empty())
    }

    /// Rebuild a display word from the canonical form, where one exists
    /// in the backend's own alphabet.
    pub fn canonical_word(&self, w: &Word) -> Result<Option<Word>, BackendError> {
        match self {
            Backend::FreeAbelian { generators } => {
                let mut sums: BTreeMap<String, i64> = BTreeMap::new();
                for (gen, e) in w.concrete_syllables()? {
                    if !generators.contains(&gen) {
                        return Err(BackendError::UnknownGenerator(gen));
                    }
                    *sums.entry(gen).or_insert(0) += e;
                }
                let mut out = Word::empty();
                for (g, e) in sums {
                    out = out.concat(&Word::gen_power(&g, e));
                }
                Ok(Some(out))
            }
            Backend::CyclicProduct { orders } => {
                let mut stack: Vec<(String, i64)> = vec![];
                for (gen, e) in w.concrete_syllables()? {
                    let order = *orders
                        .get(&gen)
                        .ok_or_else(|| BackendError::UnknownGenerator(gen.clone()))?;
                    push_cyclic(&mut stack, gen, e, order);
                }
                let mut out = Word::empty();
                for (g, e) in stack {
                    out = out.concat(&Word::gen_power(&g, e));
                }
                Ok(Some(out))
            }
            Backend::Cable(g) => {
                let nf = g.normal_form(w)?;
                let mut out = Word::gen_power("t", g.p * nf.z);
                for syl in &nf.syls {
                    match syl {
                        GpqSyl::Lattice { y } => {
                            out = out
                                .concat(&Word::gen_power("m", g.u * y))
                                .concat(&Word::gen_power("l", g.v * y));
                        }
                        GpqSyl::Turn { c } => out = out.concat(&Word::gen_power("t", *c)),
                    }
                }
                Ok(Some(out))
            }
            Backend::Edge(g) => {
                let nf = g.normal_form(w)?;
                let mut out = Word::gen_power(&g.xg, g.p * nf.z);
                for syl in &nf.syls {
                    match syl {
                        EdgeSyl::X { c } => out = out.concat(&Word::gen_power(&g.xg, *c)),
                        EdgeSyl::Y { c } => out = out.concat(&Word::gen_power(&g.yg, *c)),
                    }
                }
                Ok(Some(out))
            }
            _ => Ok(None),
        }
    }

    /// Canonical form as a string key; None when the backend has none.
    pub fn canonical_key(&self, w: &Word) -> Result<String, BackendError> {
        match self {
            Backend::FreeAbelian { generators } => {
                let mut sums: BTreeMap<String, i64> = BTreeMap::new();
                for (gen, e) in w.concrete_syllables()? {
                    if !generators.contains(&gen) {
                        return Err(BackendError::UnknownGenerator(gen));
                    }
                    *sums.entry(gen).or_insert(0) += e;
                }
                Ok(sums
                    .into_iter()
                    .filter(|(_, e)| *e != 0)
                    .map(|(g, e)| format!("{g}{e}"))
                    .collect::<Vec<_>>()
                    .join("|"))
            }
            Backend::CyclicProduct { orders } => {
                let mut stack: Vec<(String, i64)> = vec![];
                for (gen, e) in w.concrete_syllables()? {
                    let order = *orders
                        .get(&gen)
                        .ok_or_else(|| BackendError::UnknownGenerator(gen.clone()))?;
                    push_cyclic(&mut stack, gen, e, order);
                }
                Ok(stack
                    .into_iter()
                    .map(|(g, e)| format!("{g}{e}"))
                    .collect::<Vec<_>>()
                    .join("|"))
            }
            Backend::Cable(g) => g.canonical_key(w),
            Backend::Edge(g) => g.canonical_key(w),
            Backend::WeightedCyclic { weights } => {
                let mut total: i64 = 0;
                for (gen, e) in w.concrete_syllables()? {
                    let wt = weights
                        .get(&gen)
                        .ok_or_else(|| BackendError::UnknownGenerator(gen.clone()))?;
                    total += wt * e;
                }
                Ok(format!("n{total}"))
            }
            Backend::Translated { map, inner, .. } => {
                inner.canonical_key(&translate(map, w)?)
            }
            Backend::Generic { .. } => Err(BackendError::BadHint(
                "generic backend has no canonical form".to_string(),
            )),
        }
    }
}

fn push_cyclic(stack: &mut Vec<(String, i64)>, gen: String, e: i64, order: u64) {
    let mut total = e;
    if let Some((top_gen, top_e)) = stack.last() {
        if *top_gen == gen {
            total += top_e;
            stack.pop();
        }
    }
    let reduced = if order == 0 {
        total
    } else {
        total.rem_euclid(order as i64)
    };
    if reduced != 0 {
        stack.push((gen, reduced));
    }
}

pub fn translate(map: &BTreeMap<String, Word>, w: &Word) -> Result<Word, BackendError> {
    let mut out = Word::empty();
    for (gen, e) in w.concrete_syllables()? {
        let image = map
            .get(&gen)
            .ok_or_else(|| BackendError::UnknownGenerator(gen.clone()))?;
        out = out.concat(&image.repeat(e));
    }
    Ok(out)
}

/// Bounded search for a rewriting of w1 * w2^-1 to the empty word using
/// cyclic relator variants. EQUAL is certain; UNKNOWN is a budget answer.
fn generic_equal(
    pres: &Presentation,
    budget: usize,
    w1: &Word,
    w2: &Word,
) -> Result<Eq3, BackendError> {
    let gens: Vec<String> = pres.generators.clone();
    let gen_index = |g: &str| -> Result<u16, BackendError> {
        gens.iter()
            .position(|x| x == g)
            .map(|i| i as u16)
            .ok_or_else(|| BackendError::UnknownGenerator(g.to_string()))
    };
    let to_letters = |w: &Word| -> Result<Vec<(u16, i8)>, BackendError> {
        let mut out = Vec::new();
        for (gen, e) in w.concrete_syllables()? {
            let gi = gen_index(&gen)?;
            let sign: i8 = if e < 0 { -1 } else { 1 };
            for _ in 0..e.unsigned_abs() {
                out.push((gi, sign));
            }
        }
        Ok(out)
    };
    let reduce = |letters: &[(u16, i8)]| -> Vec<(u16, i8)> {
        let mut out: Vec<(u16, i8)> = Vec::with_capacity(letters.len());
        for &l in letters {
            if let Some(&(g, s)) = out.last() {
                if g == l.0 && s == -l.1 {
                    out.pop();
                    continue;
                }
            }
            out.push(l);
        }
        out
    };

    let start = {
        let mut letters = to_letters(w1)?;
        letters.extend(to_letters(&w2.inverse())?);
        reduce(&letters)
    };
    if start.is_empty() {
        return Ok(Eq3::Equal);
    }

    // All cyclic rotations of each relator and of its inverse.
    let mut variants: Vec<Vec<(u16, i8)>> = Vec::new();
    let mut max_rel = 0usize;
    for r in &pres.relators {
        let base = reduce(&to_letters(r)?);
        max_rel = max_rel.max(base.len());
        for word in [base.clone(), {
            let mut inv: Vec<(u16, i8)> = base.iter().rev().map(|&(g, s)| (g, -s)).collect();
            inv = reduce(&inv);
            inv
        }] {
            for rot in 0..word.len().max(1) {
                let mut v = word.clone();
                v.rotate_left(rot);
                if !variants.contains(&v) {
                    variants.push(v);
                }
            }
        }
    }
    if variants.is_empty() {
        // Free group: only free reduction, already done.
        return Ok(Eq3::Unknown);
    }

    // The budget counts insertion attempts, the unit of work.
    let cap = start.len() + 2 * max_rel + 2;
    let mut seen: HashSet<Vec<(u16, i8)>> = HashSet::new();
    let mut queue: VecDeque<Vec<(u16, i8)>> = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back(start);
    let mut attempts = 0usize;
    while let Some(state) = queue.pop_front() {
        for variant in &variants {
            for pos in 0..=state.len() {
                attempts += 1;
                if attempts > budget {
                    return Ok(Eq3::Unknown);
                }
                let mut next: Vec<(u16, i8)> = Vec::with_capacity(state.len() + variant.len());
                next.extend_from_slice(&state[..pos]);
                next.extend_from_slice(variant);
                next.extend_from_slice(&state[pos..]);
                let next = reduce(&next);
                if next.is_empty() {
                    return Ok(Eq3::Equal);
                }
                if next.len() <= cap && !seen.contains(&next) {
                    seen.insert(next.clone());
                    queue.push_back(next);
                }
            }
        }
    }
    Ok(Eq3::Unknown)
}

/// Choose a backend for a presentation: honor an explicit hint, then try
/// structural recognition, then fall back to bounded generic rewriting.
pub fn backend_for(pres: &Presentation) -> Result<Backend, BackendError> {
    backend_for_with_budget(pres, 100_000)
}

pub fn backend_for_with_budget(
    pres: &Presentation,
    budget: usize,
) -> Result<Backend, BackendError> {
    if let Some(hint) = &pres.backend {
        return backend_from_hint(pres, hint, budget);
    }
    if let Some(b) = detect_backend(pres, budget)? {
        return Ok(b);
    }
    Ok(Backend::Generic {
        presentation: pres.clone(),
        budget,
    })
}

fn backend_from_hint(
    pres: &Presentation,
    hint: &str,
    budget: usize,
) -> Result<Backend, BackendError> {
    match hint {
        "free-abelian" => Ok(Backend::FreeAbelian {
            generators: pres.generators.clone(),
        }),
        "cyclic-product" => detect_cyclic_product(pres)
            .ok_or_else(|| BackendError::BadHint(hint.to_string())),
        "edge-amalgam" => detect_two_generator(pres)?
            .ok_or_else(|| BackendError::BadHint(hint.to_string())),
        "generic" => Ok(Backend::Generic {
            presentation: pres.clone(),
            budget,
        }),
        other => {
            if let Some(rest) = other.strip_prefix("cable:") {
                let parts: Vec<&str> = rest.split(',').collect();
                if let [p, q] = parts.as_slice() {
                    let p = p.parse().map_err(|_| BackendError::BadHint(other.to_string()))?;
                    let q = q.parse().map_err(|_| BackendError::BadHint(other.to_string()))?;
                    return Ok(Backend::Cable(CableGroup::new(p, q)?));
                }
            }
            Err(BackendError::BadHint(other.to_string()))
        }
    }
}

fn detect_backend(pres: &Presentation, _budget: usize) -> Result<Option<Backend>, BackendError> {
    if let Some(b) = detect_free_abelian(pres) {
        return Ok(Some(b));
    }
    if let Some(b) = detect_cyclic_product(pres) {
        return Ok(Some(b));
    }
    detect_two_generator(pres)
}

/// All pairwise commutators present (trivially true for one generator).
fn detect_free_abelian(pres: &Presentation) -> Option<Backend> {
    let gens = &pres.generators;
    let mut covered: HashSet<(String, String)> = HashSet::new();
    for r in &pres.relators {
        let syls = r.concrete_syllables().ok()?;
        match syls.as_slice() {
            [(g1, a), (g2, b), (g3, c), (g4, d)]
                if g1 == g3
                    && g2 == g4
                    && g1 != g2
                    && *a == -*c
                    && *b == -*d
                    && a.abs() == 1
                    && b.abs() == 1 =>
            {
                let pair = if g1 < g2 {
                    (g1.clone(), g2.clone())
                } else {
                    (g2.clone(), g1.clone())
                };
                covered.insert(pair);
            }
            _ => return None,
        }
    }
    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            let pair = if gens[i] < gens[j] {
                (gens[i].clone(), gens[j].clone())
            } else {
                (gens[j].clone(), gens[i].clone())
            };
            if !covered.contains(&pair) {
                return None;
            }
        }
    }
    Some(Backend::FreeAbelian {
        generators: gens.clone(),
    })
}

/// Every relator a power of a single generator.
fn detect_cyclic_product(pres: &Presentation) -> Option<Backend> {
    let mut orders: BTreeMap<String, u64> =
        pres.generators.iter().map(|g| (g.clone(), 0)).collect();
    for r in &pres.relators {
        let syls = r.concrete_syllables().ok()?;
        match syls.as_slice() {
            [(g, e)] if *e != 0 => {
                let entry = orders.get_mut(g)?;
                *entry = gcd(*entry as i64, *e) as u64;
            }
            _ => return None,
        }
    }
    Some(Backend::CyclicProduct { orders })
}

/// Two generators, one relator: edge amalgams x^p = y^q, quotients onto Z,
/// and the surface relator g h g h^-1 recognized up to rotation, inversion,
/// and generator swap.
fn detect_two_generator(pres: &Presentation) -> Result<Option<Backend>, BackendError> {
    if pres.generators.len() != 2 || pres.relators.len() != 1 {
        return Ok(None);
    }
    let r = &pres.relators[0];
    let syls = r.concrete_syllables()?;
    if let [(g1, a), (g2, b)] = syls.as_slice() {
        if g1 != g2 {
            let (a, b) = (*a, *b);
            // Relator g1^a g2^b = 1, i.e. g1^a = g2^-b.
            if a.abs() >= 2 && b.abs() >= 2 {
                if a.signum() != b.signum() {
                    return Ok(Some(Backend::Edge(EdgeGroup::new(
                        g1,
                        a.abs(),
                        g2,
                        b.abs(),
                    )?)));
                }
                // Same signs: send g2 to its inverse and reuse the amalgam.
                let inner = EdgeGroup::new(g1, a.abs(), g2, b.abs())?;
                let mut map = BTreeMap::new();
                map.insert(g1.clone(), Word::gen_power(g1, 1));
                map.insert(g2.clone(), Word::gen_power(g2, -1));
                return Ok(Some(Backend::Translated {
                    label: "edge-amalgam".to_string(),
                    map,
                    inner: Box::new(Backend::Edge(inner)),
                }));
            }
            if a.abs() == 1 {
                // g1 = g2^(-b * sign(a)): infinite cyclic on g2.
                let mut weights = BTreeMap::new();
                weights.insert(g2.clone(), 1i64);
                weights.insert(g1.clone(), if a > 0 { -b } else { b });
                return Ok(Some(Backend::WeightedCyclic { weights }));
            }
            if b.abs() == 1 {
                let mut weights = BTreeMap::new();
                weights.insert(g1.clone(), 1i64);
                weights.insert(g2.clone(), if b > 0 { -a } else { a });
                return Ok(Some(Backend::WeightedCyclic { weights }));
            }
        }
    }
    // Surface relator: expand to letters and match g^s h^t g^s h^-t.
    let mut letters: Vec<(String, i8)> = Vec::new();
    for (g, e) in &syls {
        let sign: i8 = if *e < 0 { -1 } else { 1 };
        for _ in 0..e.unsigned_abs() {
            letters.push((g.clone(), sign));
        }
    }
    if letters.len() == 4 {
        let inverse: Vec<(String, i8)> =
            letters.iter().rev().map(|(g, s)| (g.clone(), -s)).collect();
        for base in [letters, inverse] {
            for rot in 0..4 {
                let mut w = base.clone();
                w.rotate_left(rot);
                let (ref ga, sa) = w[0];
                let (ref gb, sb) = w[1];
                if ga != gb
                    && w[2] == (ga.clone(), sa)
                    && w[3] == (gb.clone(), -sb)
                {
                    // g^s h^t g^s h^-t = 1: with G = g^s, H = h^t this is
                    // the surface relator G H G H^-1; G -> x y^-1, H -> y
                    // lands it in <x, y | x^2 = y^2>.
                    let inner = EdgeGroup::new("x", 2, "y", 2)?;
                    let g_image = {
                        let xy: Word = "x^1 y^-1".parse().expect("literal");
                        if sa > 0 {
                            xy
                        } else {
                            xy.inverse()
                        }
                    };
                    let h_image = Word::gen_power("y", if sb > 0 { 1 } else { -1 });
                    let mut map = BTreeMap::new();
                    map.insert(ga.clone(), g_image);
                    map.insert(gb.clone(), h_image);
                    return Ok(Some(Backend::Translated {
                        label: "surface-to-edge-amalgam".to_string(),
                        map,
                        inner: Box::new(Backend::Edge(inner)),
                    }));
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn euclid_uv_examples() {
        assert_eq!(euclid_uv(2, 3).unwrap(), (2, 1));
        assert_eq!(euclid_uv(5, 3).unwrap(), (2, 3));
        assert_eq!(euclid_uv(2, 11).unwrap(), (6, 1));
        assert_eq!(euclid_uv(3, 4).unwrap(), (3, 2));
        assert_eq!(euclid_uv(3, 5).unwrap(), (2, 1));
        assert_eq!(euclid_uv(7, 1).unwrap(), (1, 6));
        assert!(euclid_uv(4, 2).is_err());
        assert!(euclid_uv(1, 5).is_err());
    }

    #[test]
    fn euclid_uv_is_bezout_minimal() {
        for p in 2..=12i64 {
            for q in 1..=12i64 {
                if gcd(p, q) != 1 {
                    continue;
                }
                let (u, v) = euclid_uv(p, q).unwrap();
                assert_eq!(p * u - q * v, 1, "p={p} q={q}");
                assert!(1 <= v && v < p);
                assert!(u >= 1);
                // Minimality: no smaller positive v works.
                for v2 in 1..v {
                    assert_ne!((1 + q * v2) % p, 0);
                }
            }
        }
    }

    #[test]
    fn cable_relator_is_identity() {
        let g = CableGroup::new(2, 3).unwrap();
        assert!(g.is_identity(&w("m^3 l^2 t^-2")).unwrap());
        assert!(g.is_identity(&w("t^-2 m^3 l^2")).unwrap());
        assert!(g.is_identity(&w("m^1 l^1 m^-1 l^-1")).unwrap());
        assert!(!g.is_identity(&w("m^1")).unwrap());
        assert!(!g.is_identity(&w("t^1")).unwrap());
    }

    #[test]
    fn cable_normal_form_of_meridian() {
        // With (p, q) = (2, 3), (u, v) = (2, 1): m = (t^2)^-1 (m^2 l^1)^2.
        let g = CableGroup::new(2, 3).unwrap();
        let nf = g.normal_form(&w("m^1")).unwrap();
        assert_eq!(nf.z, -1);
        assert_eq!(nf.syls, vec![GpqSyl::Lattice { y: 2 }]);
        assert_eq!(g.lattice_class(&nf), Some((1, 0)));
    }

    #[test]
    fn cable_crucial_identity_sample() {
        let g = CableGroup::new(2, 3).unwrap();
        assert!(g.equal(&w("t^-1 t^-1 m^2 l^1 m^2 l^1"), &w("m^1")).unwrap());
        // Commuted form: central t^p passes across the lattice.
        assert!(g.equal(&w("m^2 l^1 m^2 l^1 t^-1 t^-1"), &w("m^1")).unwrap());
    }

    #[test]
    fn cable_centrality_of_edge() {
        let g = CableGroup::new(3, 5).unwrap();
        for word in ["m^1", "l^-2", "t^1", "m^2 t^1 l^1"] {
            let lhs = w("t^3").concat(&w(word));
            let rhs = w(word).concat(&w("t^3"));
            assert!(g.equal(&lhs, &rhs).unwrap(), "t^p central vs {word}");
        }
        // t itself is not central.
        assert!(!g.equal(&w("t^1 m^1"), &w("m^1 t^1")).unwrap());
    }

    #[test]
    fn cable_lattice_class() {
        let g = CableGroup::new(2, 3).unwrap();
        let nf = g.normal_form(&w("m^4 l^-1")).unwrap();
        assert_eq!(g.lattice_class(&nf), Some((4, -1)));
        let nf = g.normal_form(&w("t^2")).unwrap();
        assert_eq!(g.lattice_class(&nf), Some((3, 2)));
        let nf = g.normal_form(&w("t^1")).unwrap();
        assert_eq!(g.lattice_class(&nf), None);
    }

    #[test]
    fn edge_amalgam_trefoil() {
        let g = EdgeGroup::new("x", 2, "y", 3).unwrap();
        assert!(g.equal(&w("x^2"), &w("y^3")).unwrap());
        assert!(g.equal(&w("x^2 y^-3"), &w("1")).unwrap());
        assert!(!g.equal(&w("x^1"), &w("y^1")).unwrap());
        assert!(!g.equal(&w("x^1 y^1"), &w("y^1 x^1")).unwrap());
    }

    #[test]
    fn free_abelian_backend() {
        let b = Backend::FreeAbelian {
            generators: vec!["m".to_string(), "l".to_string()],
        };
        assert_eq!(b.words_equal(&w("m^1 l^1"), &w("l^1 m^1")).unwrap(), Eq3::Equal);
        assert_eq!(b.words_equal(&w("m^1"), &w("l^1")).unwrap(), Eq3::Distinct);
        assert_eq!(b.is_identity(&w("m^1 l^1 m^-1 l^-1")).unwrap(), Eq3::Equal);
    }

    #[test]
    fn cyclic_product_backend() {
        let b = Backend::CyclicProduct {
            orders: [("a".to_string(), 2u64), ("b".to_string(), 3u64)]
                .into_iter()
                .collect(),
        };
        assert_eq!(b.is_identity(&w("a^2")).unwrap(), Eq3::Equal);
        assert_eq!(b.is_identity(&w("b^3")).unwrap(), Eq3::Equal);
        assert_eq!(b.words_equal(&w("a^1 b^1 a^1"), &w("a^1 b^-2 a^-1")).unwrap(), Eq3::Equal);
        assert_eq!(b.words_equal(&w("a^1 b^1"), &w("b^1 a^1")).unwrap(), Eq3::Distinct);
        // Cancellation must cascade through vanished syllables.
        assert_eq!(b.words_equal(&w("a^1 b^2 b^1 a^1"), &w("1")).unwrap(), Eq3::Equal);
    }

    #[test]
    fn weighted_cyclic_backend() {
        let b = Backend::WeightedCyclic {
            weights: [("m".to_string(), 2i64), ("t".to_string(), 1i64)]
                .into_iter()
                .collect(),
        };
        assert_eq!(b.words_equal(&w("t^2"), &w("m^1")).unwrap(), Eq3::Equal);
        assert_eq!(b.words_equal(&w("t^1"), &w("m^1")).unwrap(), Eq3::Distinct);
    }

    #[test]
    fn generic_backend_equal_and_unknown() {
        let pres = Presentation::new(&["x", "y"], &["x^2 y^-3"]).unwrap();
        let b = Backend::Generic {
            presentation: pres,
            budget: 20_000,
        };
        assert_eq!(b.words_equal(&w("x^2"), &w("y^3")).unwrap(), Eq3::Equal);
        // x^2 is central; showing it needs two relator insertions.
        assert_eq!(b.words_equal(&w("y^1 x^2 y^-1"), &w("x^2")).unwrap(), Eq3::Equal);
        // Distinct elements come back UNKNOWN, never DISTINCT.
        assert_eq!(b.words_equal(&w("x^1"), &w("y^1")).unwrap(), Eq3::Unknown);
    }

    #[test]
    fn detect_free_abelian_two_gens() {
        let pres = Presentation::new(&["m", "l"], &["m^1 l^1 m^-1 l^-1"]).unwrap();
        let b = backend_for(&pres).unwrap();
        assert_eq!(b.name(), "free-abelian");
        assert!(b.is_exact());
    }

    #[test]
    fn detect_cyclic_products() {
        let pres = Presentation::new(&["a"], &["a^3"]).unwrap();
        assert_eq!(backend_for(&pres).unwrap().name(), "cyclic-product");
        let pres = Presentation::new(&["a", "b"], &["a^2", "b^3"]).unwrap();
        let b = backend_for(&pres).unwrap();
        assert_eq!(b.name(), "cyclic-product");
        assert_eq!(b.is_identity(&w("a^2")).unwrap(), Eq3::Equal);
    }

    #[test]
    fn detect_torus_knot_group() {
        let pres = Presentation::new(&["x", "y"], &["x^2 y^-3"]).unwrap();
        let b = backend_for(&pres).unwrap();
        assert_eq!(b.name(), "edge-amalgam");
        assert_eq!(b.words_equal(&w("x^2"), &w("y^3")).unwrap(), Eq3::Equal);
    }

    #[test]
    fn detect_klein_bottle_and_translate() {
        let pres = Presentation::new(&["a", "b"], &["a^1 b^1 a^1 b^-1"]).unwrap();
        let b = backend_for(&pres).unwrap();
        assert_eq!(b.name(), "surface-to-edge-amalgam");
        assert!(b.is_exact());
        // The relator maps to the identity.
        assert_eq!(b.is_identity(&w("a^1 b^1 a^1 b^-1")).unwrap(), Eq3::Equal);
        // b a b^-1 = a^-1 in the Klein-bottle group.
        assert_eq!(
            b.words_equal(&w("b^1 a^1 b^-1"), &w("a^-1")).unwrap(),
            Eq3::Equal
        );
        // a and b have infinite order and do not commute.
        assert_eq!(b.is_identity(&w("a^2")).unwrap(), Eq3::Distinct);
        assert_eq!(
            b.words_equal(&w("a^1 b^1"), &w("b^1 a^1")).unwrap(),
            Eq3::Distinct
        );
    }

    #[test]
    fn detect_z_quotient() {
        // <x, y | x y^-2> is infinite cyclic generated by y.
        let pres = Presentation::new(&["x", "y"], &["x^1 y^-2"]).unwrap();
        let b = backend_for(&pres).unwrap();
        assert_eq!(b.name(), "weighted-cyclic");
        assert_eq!(b.words_equal(&w("x^1"), &w("y^2")).unwrap(), Eq3::Equal);
    }

    #[test]
    fn hint_overrides_detection() {
        let mut pres = Presentation::new(&["x", "y"], &["x^2 y^-3"]).unwrap();
        pres.backend = Some("generic".to_string());
        let b = backend_for(&pres).unwrap();
        assert_eq!(b.name(), "generic");
        assert!(!b.is_exact());
        let mut bad = Presentation::new(&["x"], &[]).unwrap();
        bad.backend = Some("no-such-backend".to_string());
        assert!(matches!(backend_for(&bad), Err(BackendError::BadHint(_))));
    }
}

//! Words over named generators with affine symbolic exponents.
//!
//! A word is a syllable list g1^e1 g2^e2 ... where each exponent is an
//! affine expression c0 + c1*x1 + ... over named integer parameters.
//! Instantiation substitutes parameter values and free-reduces; all exact
//! group-theoretic checking happens on instantiated (concrete) words.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WordError {
    #[error("malformed word or exponent: {0}")]
    Parse(String),
    #[error("unbound parameter {0}")]
    UnboundParameter(String),
    #[error("arithmetic overflow while evaluating an exponent")]
    Overflow,
    #[error("word is not concrete (symbolic exponent {0})")]
    NotConcrete(String),
}

/// c0 + sum(ci * xi); zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct AffineExpr {
    constant: i64,
    terms: BTreeMap<String, i64>,
}

impl AffineExpr {
    pub fn constant(c: i64) -> AffineExpr {
        AffineExpr {
            constant: c,
            terms: BTreeMap::new(),
        }
    }

    pub fn var(name: &str) -> AffineExpr {
        let mut terms = BTreeMap::new();
        terms.insert(name.to_string(), 1);
        AffineExpr { constant: 0, terms }
    }

    pub fn term(coeff: i64, name: &str) -> AffineExpr {
        let mut e = AffineExpr::constant(0);
        if coeff != 0 {
            e.terms.insert(name.to_string(), coeff);
        }
        e
    }

    pub fn add(&self, other: &AffineExpr) -> AffineExpr {
        let mut out = self.clone();
        out.constant += other.constant;
        for (name, c) in &other.terms {
            let e = out.terms.entry(name.clone()).or_insert(0);
            *e += c;
            if *e == 0 {
                out.terms.remove(name);
            }
        }
        out
    }

    pub fn sub(&self, other: &AffineExpr) -> AffineExpr {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> AffineExpr {
        AffineExpr {
            constant: -self.constant,
            terms: self.terms.iter().map(|(n, c)| (n.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, k: i64) -> AffineExpr {
        if k == 0 {
            return AffineExpr::constant(0);
        }
        AffineExpr {
            constant: self.constant * k,
            terms: self.terms.iter().map(|(n, c)| (n.clone(), c * k)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0 && self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<i64> {
        if self.terms.is_empty() {
            Some(self.constant)
        } else {
            None
        }
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(String::as_str)
    }

    pub fn eval(&self, env: &BTreeMap<String, i64>) -> Result<i64, WordError> {
        let mut acc: i128 = self.constant as i128;
        for (name, c) in &self.terms {
            let v = env
                .get(name)
                .ok_or_else(|| WordError::UnboundParameter(name.clone()))?;
            acc += (*c as i128) * (*v as i128);
        }
        i64::try_from(acc).map_err(|_| WordError::Overflow)
    }
}

impl fmt::Display for AffineExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, c) in &self.terms {
            if first {
                match *c {
                    1 => write!(f, "{name}")?,
                    -1 => write!(f, "-{name}")?,
                    c => write!(f, "{c}{name}")?,
                }
                first = false;
            } else {
                let sign = if *c < 0 { '-' } else { '+' };
                match c.abs() {
                    1 => write!(f, "{sign}{name}")?,
                    a => write!(f, "{sign}{a}{name}")?,
                }
            }
        }
        if first {
            write!(f, "{}", self.constant)?;
        } else if self.constant != 0 {
            let sign = if self.constant < 0 { '-' } else { '+' };
            write!(f, "{sign}{}", self.constant.abs())?;
        }
        Ok(())
    }
}

impl FromStr for AffineExpr {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(WordError::Parse(s.to_string()));
        }
        let bytes = compact.as_bytes();
        let mut i = 0;
        let mut out = AffineExpr::constant(0);
        while i < bytes.len() {
            let mut sign: i64 = 1;
            match bytes[i] {
                b'+' => i += 1,
                b'-' => {
                    sign = -1;
                    i += 1;
                }
                _ => {}
            }
            let digit_start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let coeff: Option<i64> = if i > digit_start {
                Some(
                    compact[digit_start..i]
                        .parse()
                        .map_err(|_| WordError::Parse(s.to_string()))?,
                )
            } else {
                None
            };
            if i < bytes.len() && bytes[i] == b'*' {
                i += 1;
            }
            let ident_start = i;
            if i < bytes.len() && (bytes[i].is_ascii_alphabetic() || bytes[i] == b'_') {
                i += 1;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
            }
            let ident = &compact[ident_start..i];
            match (coeff, ident.is_empty()) {
                (Some(c), true) => out = out.add(&AffineExpr::constant(sign * c)),
                (Some(c), false) => out = out.add(&AffineExpr::term(sign * c, ident)),
                (None, false) => out = out.add(&AffineExpr::term(sign, ident)),
                (None, true) => return Err(WordError::Parse(s.to_string())),
            }
        }
        Ok(out)
    }
}

impl Serialize for AffineExpr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for AffineExpr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Flat word: generator syllables with affine exponents.
///
/// Text syntax: whitespace-separated syllables `gen^exp` where `exp` is an
/// integer, `{affine}`, or omitted (meaning 1); the lone token `1` is the
/// empty word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    syllables: Vec<(String, AffineExpr)>,
}

impl Word {
    pub fn empty() -> Word {
        Word::default()
    }

    pub fn new(syllables: Vec<(String, AffineExpr)>) -> Word {
        Word { syllables }.free_reduce()
    }

    pub fn syllable(gen: &str, exp: AffineExpr) -> Word {
        Word::new(vec![(gen.to_string(), exp)])
    }

    pub fn gen_power(gen: &str, exp: i64) -> Word {
        Word::syllable(gen, AffineExpr::constant(exp))
    }

    pub fn syllables(&self) -> &[(String, AffineExpr)] {
        &self.syllables
    }

    pub fn is_empty(&self) -> bool {
        self.syllables.is_empty()
    }

    /// Merge adjacent equal-generator syllables and drop literal zeros,
    /// cascading. Symbolic exponents merge formally; exponents that only
    /// vanish at particular parameter values are kept (instantiation
    /// re-reduces).
    pub fn free_reduce(mut self) -> Word {
        let mut out: Vec<(String, AffineExpr)> = Vec::with_capacity(self.syllables.len());
        for (gen, exp) in self.syllables.drain(..) {
            if exp.is_zero() {
                continue;
            }
            if let Some((top_gen, top_exp)) = out.last_mut() {
                if *top_gen == gen {
                    *top_exp = top_exp.add(&exp);
                    if top_exp.is_zero() {
                        out.pop();
                    }
                    continue;
                }
            }
            out.push((gen, exp));
        }
        Word { syllables: out }
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut syl = self.syllables.clone();
        syl.extend(other.syllables.iter().cloned());
        Word { syllables: syl }.free_reduce()
    }

    pub fn inverse(&self) -> Word {
        Word {
            syllables: self
                .syllables
                .iter()
                .rev()
                .map(|(g, e)| (g.clone(), e.neg()))
                .collect(),
        }
    }

    /// self repeated k times (inverse for negative k). Concrete use only.
    pub fn repeat(&self, k: i64) -> Word {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = Word::empty();
        for _ in 0..k.unsigned_abs() {
            out = out.concat(&base);
        }
        out
    }

    pub fn instantiate(&self, env: &BTreeMap<String, i64>) -> Result<Word, WordError> {
        let mut syl = Vec::with_capacity(self.syllables.len());
        for (gen, exp) in &self.syllables {
            syl.push((gen.clone(), AffineExpr::constant(exp.eval(env)?)));
        }
        Ok(Word { syllables: syl }.free_reduce())
    }

    pub fn symbols(&self) -> BTreeSet<String> {
        self.syllables
            .iter()
            .flat_map(|(_, e)| e.symbols().map(str::to_string))
            .collect()
    }

    pub fn generators(&self) -> BTreeSet<String> {
        self.syllables.iter().map(|(g, _)| g.clone()).collect()
    }

    pub fn is_concrete(&self) -> bool {
        self.syllables.iter().all(|(_, e)| e.as_constant().is_some())
    }

    pub fn concrete_syllables(&self) -> Result<Vec<(String, i64)>, WordError> {
        self.syllables
            .iter()
            .map(|(g, e)| {
                e.as_constant()
                    .map(|c| (g.clone(), c))
                    .ok_or_else(|| WordError::NotConcrete(e.to_string()))
            })
            .collect()
    }

    /// Total letter count |e1| + |e2| + ... of a concrete word.
    pub fn letter_len(&self) -> Result<u64, WordError> {
        Ok(self
            .concrete_syllables()?
            .iter()
            .map(|(_, e)| e.unsigned_abs())
            .sum())
    }

    pub fn exponent_sum(&self, gen: &str) -> AffineExpr {
        let mut acc = AffineExpr::constant(0);
        for (g, e) in &self.syllables {
            if g == gen {
                acc = acc.add(e);
            }
        }
        acc
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.syllables.is_empty() {
            return write!(f, "1");
        }
        for (i, (gen, exp)) in self.syllables.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            match exp.as_constant() {
                Some(c) => write!(f, "{gen}^{c}")?,
                None => write!(f, "{gen}^{{{exp}}}")?,
            }
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut syllables = Vec::new();
        for token in s.split_whitespace() {
            if token == "1" {
                continue;
            }
            let (gen, exp) = parse_syllable(token)?;
            syllables.push((gen, exp));
        }
        Ok(Word { syllables }.free_reduce())
    }
}

pub(crate) fn parse_syllable(token: &str) -> Result<(String, AffineExpr), WordError> {
    let bad = || WordError::Parse(token.to_string());
    let (gen, exp_text) = match token.split_once('^') {
        Some((g, e)) => (g, Some(e)),
        None => (token, None),
    };
    if gen.is_empty()
        || !gen
            .chars()
            .next()
            .map(|c| c.is_ascii_alphabetic() || c == '_')
            .unwrap_or(false)
        || !gen.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
    {
        return Err(bad());
    }
    let exp = match exp_text {
        None => AffineExpr::constant(1),
        Some(e) => {
            let inner = e
                .strip_prefix('{')
                .and_then(|rest| rest.strip_suffix('}'))
                .unwrap_or(e);
            if inner.is_empty() {
                return Err(bad());
            }
            inner.parse()?
        }
    };
    Ok((gen.to_string(), exp))
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn env(pairs: &[(&str, i64)]) -> BTreeMap<String, i64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn affine_parse_display() {
        for s in ["0", "6", "-k", "i+6s", "2k+3", "2s-1", "-3k+2"] {
            let e: AffineExpr = s.parse().unwrap();
            assert_eq!(e.to_string(), s);
        }
        assert_eq!("3s-2-k".parse::<AffineExpr>().unwrap().to_string(), "-k+3s-2");
        assert_eq!("2*k".parse::<AffineExpr>().unwrap().to_string(), "2k");
        assert_eq!("k+k".parse::<AffineExpr>().unwrap().to_string(), "2k");
        assert_eq!("k-k".parse::<AffineExpr>().unwrap().to_string(), "0");
        assert!("".parse::<AffineExpr>().is_err());
        assert!("+".parse::<AffineExpr>().is_err());
    }

    #[test]
    fn affine_eval() {
        let e: AffineExpr = "3s-2-k".parse().unwrap();
        assert_eq!(e.eval(&env(&[("s", 2), ("k", 1)])).unwrap(), 3);
        assert_eq!(
            e.eval(&env(&[("s", 2)])),
            Err(WordError::UnboundParameter("k".to_string()))
        );
    }

    #[test]
    fn word_parse_display() {
        let w: Word = "m^-3 l^2 t^1".parse().unwrap();
        assert_eq!(w.to_string(), "m^-3 l^2 t^1");
        let w: Word = "m^{-k} t l^{3s-2}".parse().unwrap();
        assert_eq!(w.to_string(), "m^{-k} t^1 l^{3s-2}");
        assert_eq!("1".parse::<Word>().unwrap(), Word::empty());
        assert_eq!(Word::empty().to_string(), "1");
        assert!("2m".parse::<Word>().is_err());
        assert!("m^".parse::<Word>().is_err());
    }

    #[test]
    fn free_reduce_cascades() {
        let w: Word = "m^2 l^3 l^-3 m^-2 t^5".parse().unwrap();
        assert_eq!(w.to_string(), "t^5");
        let w: Word = "m^{k} m^{-k} t^1".parse().unwrap();
        assert_eq!(w.to_string(), "t^1");
        // A symbolic exponent that may vanish is kept until instantiation.
        let w: Word = "m^{k-1} t^1".parse().unwrap();
        assert_eq!(w.syllables().len(), 2);
        assert_eq!(w.instantiate(&env(&[("k", 1)])).unwrap().to_string(), "t^1");
    }

    #[test]
    fn inverse_and_concat() {
        let w: Word = "m^2 t^-1 l^{k}".parse().unwrap();
        let inv = w.inverse();
        assert_eq!(inv.to_string(), "l^{-k} t^1 m^-2");
        assert!(w.concat(&inv).is_empty());
        assert!(inv.concat(&w).is_empty());
    }

    #[test]
    fn repeat_words() {
        let w: Word = "m^1 t^-1".parse().unwrap();
        assert_eq!(w.repeat(3).to_string(), "m^1 t^-1 m^1 t^-1 m^1 t^-1");
        assert_eq!(w.repeat(-2).to_string(), "t^1 m^-1 t^1 m^-1");
        assert!(w.repeat(0).is_empty());
    }

    #[test]
    fn exponent_sums() {
        let w: Word = "m^2 l^1 m^{k} t^-2".parse().unwrap();
        assert_eq!(w.exponent_sum("m").to_string(), "k+2");
        assert_eq!(w.exponent_sum("l").to_string(), "1");
        assert_eq!(w.exponent_sum("x").to_string(), "0");
    }

    prop_compose! {
        fn arb_concrete_word()(syls in prop::collection::vec(("[mlt]", -5i64..=5), 0..8)) -> Word {
            Word::new(syls.into_iter().map(|(g, e)| (g, AffineExpr::constant(e))).collect())
        }
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(w in arb_concrete_word()) {
            let back: Word = w.to_string().parse().unwrap();
            prop_assert_eq!(w, back);
        }

        #[test]
        fn reduce_is_idempotent(w in arb_concrete_word()) {
            prop_assert_eq!(w.clone().free_reduce(), w);
        }

        #[test]
        fn word_times_inverse_cancels(w in arb_concrete_word()) {
            prop_assert!(w.concat(&w.inverse()).is_empty());
        }

        #[test]
        fn letter_len_additive_under_repeat(w in arb_concrete_word(), k in 0i64..5) {
            let n = w.letter_len().unwrap();
            prop_assert!(w.repeat(k).letter_len().unwrap() <= n * k as u64);
        }
    }
}

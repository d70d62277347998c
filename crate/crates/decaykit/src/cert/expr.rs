//! Word templates: flat words extended with grouped powers `( ... )^{expr}`.
//!
//! Derivation steps quote words whose shape depends on parameters, e.g.
//! `( m^2 l^1 t^-1 )^{i+6}`. A template expands to a flat [`Word`] once every
//! parameter is bound.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::word::{parse_syllable, AffineExpr, Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemplateItem {
    Syllable { gen: String, exp: AffineExpr },
    Group { body: Vec<TemplateItem>, exp: AffineExpr },
}

/// A word with parameter-dependent structure. Text syntax extends the flat
/// word syntax with whitespace-separated group delimiters: `(` opens a group
/// and `)`, `)^3`, or `)^{n-1}` closes it (a bare `)` means exponent 1).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WordTemplate {
    items: Vec<TemplateItem>,
}

impl WordTemplate {
    pub fn empty() -> WordTemplate {
        WordTemplate::default()
    }

    pub fn items(&self) -> &[TemplateItem] {
        &self.items
    }

    /// Bind every parameter and flatten to a free-reduced word.
    pub fn expand(&self, env: &std::collections::BTreeMap<String, i64>) -> Result<Word, WordError> {
        expand_items(&self.items, env)
    }

    /// Formal inverse: reverse item order and negate exponents. Group bodies
    /// are kept intact since (B^e)^-1 = B^-e.
    pub fn inverse(&self) -> WordTemplate {
        WordTemplate {
            items: invert_items(&self.items),
        }
    }

    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        collect_symbols(&self.items, &mut out);
        out
    }
}

fn expand_items(
    items: &[TemplateItem],
    env: &std::collections::BTreeMap<String, i64>,
) -> Result<Word, WordError> {
    let mut out = Word::empty();
    for item in items {
        match item {
            TemplateItem::Syllable { gen, exp } => {
                out = out.concat(&Word::gen_power(gen, exp.eval(env)?));
            }
            TemplateItem::Group { body, exp } => {
                let inner = expand_items(body, env)?;
                out = out.concat(&inner.repeat(exp.eval(env)?));
            }
        }
    }
    Ok(out)
}

fn invert_items(items: &[TemplateItem]) -> Vec<TemplateItem> {
    items
        .iter()
        .rev()
        .map(|item| match item {
            TemplateItem::Syllable { gen, exp } => TemplateItem::Syllable {
                gen: gen.clone(),
                exp: exp.neg(),
            },
            TemplateItem::Group { body, exp } => TemplateItem::Group {
                body: body.clone(),
                exp: exp.neg(),
            },
        })
        .collect()
}

fn collect_symbols(items: &[TemplateItem], out: &mut BTreeSet<String>) {
    for item in items {
        match item {
            TemplateItem::Syllable { exp, .. } => {
                out.extend(exp.symbols().map(str::to_string));
            }
            TemplateItem::Group { body, exp } => {
                out.extend(exp.symbols().map(str::to_string));
                collect_symbols(body, out);
            }
        }
    }
}

impl From<Word> for WordTemplate {
    fn from(w: Word) -> WordTemplate {
        WordTemplate {
            items: w
                .syllables()
                .iter()
                .map(|(gen, exp)| TemplateItem::Syllable {
                    gen: gen.clone(),
                    exp: exp.clone(),
                })
                .collect(),
        }
    }
}

impl fmt::Display for WordTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.items.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        write_items(&self.items, f, &mut first)
    }
}

fn write_items(
    items: &[TemplateItem],
    f: &mut fmt::Formatter<'_>,
    first: &mut bool,
) -> fmt::Result {
    for item in items {
        if !*first {
            write!(f, " ")?;
        }
        *first = false;
        match item {
            TemplateItem::Syllable { gen, exp } => match exp.as_constant() {
                Some(c) => write!(f, "{gen}^{c}")?,
                None => write!(f, "{gen}^{{{exp}}}")?,
            },
            TemplateItem::Group { body, exp } => {
                write!(f, "(")?;
                write_items(body, f, first)?;
                match exp.as_constant() {
                    Some(c) => write!(f, " )^{c}")?,
                    None => write!(f, " )^{{{exp}}}")?,
                }
            }
        }
    }
    Ok(())
}

impl FromStr for WordTemplate {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut stack: Vec<Vec<TemplateItem>> = vec![Vec::new()];
        for token in s.split_whitespace() {
            if token == "1" {
                continue;
            }
            if token == "(" {
                stack.push(Vec::new());
                continue;
            }
            if let Some(rest) = token.strip_prefix(')') {
                let exp = if rest.is_empty() {
                    AffineExpr::constant(1)
                } else {
                    let inner = rest
                        .strip_prefix('^')
                        .ok_or_else(|| WordError::Parse(token.to_string()))?;
                    let text = inner
                        .strip_prefix('{')
                        .and_then(|t| t.strip_suffix('}'))
                        .unwrap_or(inner);
                    text.parse()?
                };
                let body = stack.pop().ok_or_else(|| WordError::Parse(s.to_string()))?;
                if stack.is_empty() {
                    return Err(WordError::Parse(s.to_string()));
                }
                stack
                    .last_mut()
                    .expect("nonempty")
                    .push(TemplateItem::Group { body, exp });
                continue;
            }
            let (gen, exp) = parse_syllable(token)?;
            stack
                .last_mut()
                .expect("nonempty")
                .push(TemplateItem::Syllable { gen, exp });
        }
        if stack.len() != 1 {
            return Err(WordError::Parse(s.to_string()));
        }
        Ok(WordTemplate {
            items: stack.pop().expect("nonempty"),
        })
    }
}

impl Serialize for WordTemplate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for WordTemplate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn env(pairs: &[(&str, i64)]) -> BTreeMap<String, i64> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect()
    }

    #[test]
    fn parses_flat_and_grouped() {
        let t: WordTemplate = "m^-2 ( t^-1 m^2 l^1 )^{i} m^2".parse().unwrap();
        assert_eq!(t.items().len(), 3);
        assert_eq!(t.to_string(), "m^-2 ( t^-1 m^2 l^1 )^{i} m^2");
    }

    #[test]
    fn expand_repeats_group() {
        let t: WordTemplate = "( m^1 l^1 )^{n}".parse().unwrap();
        let w = t.expand(&env(&[("n", 3)])).unwrap();
        assert_eq!(w.to_string(), "m^1 l^1 m^1 l^1 m^1 l^1");
        let w0 = t.expand(&env(&[("n", 0)])).unwrap();
        assert!(w0.is_empty());
        let wneg = t.expand(&env(&[("n", -2)])).unwrap();
        assert_eq!(wneg.to_string(), "l^-1 m^-1 l^-1 m^-1");
    }

    #[test]
    fn expand_cancels_across_group_boundary() {
        let t: WordTemplate = "m^{-k} ( t^-1 m^2 l^1 )^{i} m^{k}".parse().unwrap();
        let w = t.expand(&env(&[("k", 2), ("i", 0)])).unwrap();
        assert!(w.is_empty());
        let w1 = t.expand(&env(&[("k", 1), ("i", 2)])).unwrap();
        assert_eq!(
            w1.to_string(),
            "m^-1 t^-1 m^2 l^1 t^-1 m^2 l^1 m^1"
        );
    }

    #[test]
    fn inverse_negates_group_exponent() {
        let t: WordTemplate = "m^2 ( t^-1 l^1 )^{n}".parse().unwrap();
        let inv = t.inverse();
        assert_eq!(inv.to_string(), "( t^-1 l^1 )^{-n} m^-2");
        let e = env(&[("n", 2)]);
        let prod = t.expand(&e).unwrap().concat(&inv.expand(&e).unwrap());
        assert!(prod.is_empty());
    }

    #[test]
    fn nested_groups_expand() {
        let t: WordTemplate = "( ( m^1 )^2 l^1 )^{n}".parse().unwrap();
        let w = t.expand(&env(&[("n", 2)])).unwrap();
        assert_eq!(w.to_string(), "m^2 l^1 m^2 l^1");
    }

    #[test]
    fn symbols_are_collected() {
        let t: WordTemplate = "m^{u+k} ( t^-1 )^{n-1} l^{3}".parse().unwrap();
        let syms: Vec<String> = t.symbols().into_iter().collect();
        assert_eq!(syms, vec!["k", "n", "u"]);
    }

    #[test]
    fn unbalanced_groups_rejected() {
        assert!("( m^1".parse::<WordTemplate>().is_err());
        assert!("m^1 )".parse::<WordTemplate>().is_err());
        assert!(") m^1 (".parse::<WordTemplate>().is_err());
    }

    #[test]
    fn round_trips_through_serde() {
        let t: WordTemplate = "m^{-k} ( t^-2 m^3 )^{i+1} 1".parse().unwrap();
        let json = serde_json::to_string(&t).unwrap();
        let back: WordTemplate = serde_json::from_str(&json).unwrap();
        assert_eq!(t, back);
    }
}

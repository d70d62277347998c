//! Catalog of knots with known decay bounds.
//!
//! Base families carry closed-form bounds; cable entries never store one,
//! because the bound for a cable is computed from its companion: pq when
//! q/p exceeds the companion bound, absent otherwise. Lookup works for any
//! well-formed identifier; the shipped catalog is validated against the
//! same rules at load time.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{gcd, Rational};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegistryError {
    #[error("unparseable knot id {0}")]
    Parse(String),
    #[error("registry record {0}: {1}")]
    Record(String, String),
    #[error("registry JSON: {0}")]
    Json(String),
}

/// Identifier grammar:
/// `torus:p,q` | `pretzel:-2,3,q` | `twisted-torus:3,q` | `cable:p,q:of:<id>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KnotId {
    Torus { p: i64, q: i64 },
    Pretzel { q: i64 },
    TwistedTorus { q: i64 },
    Cable { p: i64, q: i64, companion: Box<KnotId> },
}

impl KnotId {
    pub fn kind(&self) -> &'static str {
        match self {
            KnotId::Torus { .. } => "torus",
            KnotId::Pretzel { .. } => "pretzel",
            KnotId::TwistedTorus { .. } => "twisted-torus",
            KnotId::Cable { .. } => "cable",
        }
    }

    /// Leading numeric parameters, companion excluded.
    pub fn params(&self) -> Vec<i64> {
        match self {
            KnotId::Torus { p, q } => vec![*p, *q],
            KnotId::Pretzel { q } => vec![-2, 3, *q],
            KnotId::TwistedTorus { q } => vec![3, *q],
            KnotId::Cable { p, q, .. } => vec![*p, *q],
        }
    }

    /// Decay bound by the closed-form rules; None when no rule applies.
    pub fn decay(&self) -> Option<Rational> {
        match self {
            KnotId::Torus { p, q } => {
                if *p >= 2 && *q >= 2 && gcd(*p, *q) == 1 {
                    Some(Rational::integer(p * q - 1))
                } else {
                    None
                }
            }
            KnotId::Pretzel { q } => {
                if *q >= 5 && q % 2 == 1 {
                    Some(Rational::integer(10 + q))
                } else {
                    None
                }
            }
            KnotId::TwistedTorus { q } => {
                if *q > 0 && q % 3 == 2 {
                    Some(Rational::integer(3 * q + 2))
                } else {
                    None
                }
            }
            KnotId::Cable { p, q, companion } => {
                if *p < 2 || *q < 1 || gcd(*p, *q) != 1 {
                    return None;
                }
                let bound = companion.decay()?;
                if bound.cmp_fraction(*q, *p) == std::cmp::Ordering::Less {
                    Some(Rational::integer(p * q))
                } else {
                    None
                }
            }
        }
    }
}

impl fmt::Display for KnotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KnotId::Torus { p, q } => write!(f, "torus:{p},{q}"),
            KnotId::Pretzel { q } => write!(f, "pretzel:-2,3,{q}"),
            KnotId::TwistedTorus { q } => write!(f, "twisted-torus:3,{q}"),
            KnotId::Cable { p, q, companion } => write!(f, "cable:{p},{q}:of:{companion}"),
        }
    }
}

impl FromStr for KnotId {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<KnotId, RegistryError> {
        let err = || RegistryError::Parse(s.to_string());
        let (kind, rest) = s.split_once(':').ok_or_else(err)?;
        let ints = |text: &str| -> Result<Vec<i64>, RegistryError> {
            text.split(',')
                .map(|t| t.parse::<i64>().map_err(|_| err()))
                .collect()
        };
        match kind {
            "torus" => match ints(rest)?.as_slice() {
                [p, q] => Ok(KnotId::Torus { p: *p, q: *q }),
                _ => Err(err()),
            },
            "pretzel" => match ints(rest)?.as_slice() {
                [-2, 3, q] => Ok(KnotId::Pretzel { q: *q }),
                _ => Err(err()),
            },
            "twisted-torus" => match ints(rest)?.as_slice() {
                [3, q] => Ok(KnotId::TwistedTorus { q: *q }),
                _ => Err(err()),
            },
            "cable" => {
                let (head, companion) = rest.split_once(":of:").ok_or_else(err)?;
                match ints(head)?.as_slice() {
                    [p, q] => Ok(KnotId::Cable {
                        p: *p,
                        q: *q,
                        companion: Box::new(companion.parse()?),
                    }),
                    _ => Err(err()),
                }
            }
            _ => Err(err()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryRecord {
    pub id: String,
    pub kind: String,
    pub params: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registry {
    records: Vec<RegistryRecord>,
}

const EMBEDDED: &str = include_str!("../data/registry.json");

impl Registry {
    pub fn from_json(text: &str) -> Result<Registry, RegistryError> {
        let records: Vec<RegistryRecord> =
            serde_json::from_str(text).map_err(|e| RegistryError::Json(e.to_string()))?;
        let reg = Registry { records };
        reg.validate()?;
        Ok(reg)
    }

    pub fn embedded() -> Registry {
        Registry::from_json(EMBEDDED).expect("embedded registry is valid")
    }

    fn validate(&self) -> Result<(), RegistryError> {
        for rec in &self.records {
            let rerr = |msg: &str| RegistryError::Record(rec.id.clone(), msg.to_string());
            let id: KnotId = rec.id.parse()?;
            if id.kind() != rec.kind {
                return Err(rerr("kind does not match id"));
            }
            if id.params() != rec.params {
                return Err(rerr("params do not match id"));
            }
            match &id {
                KnotId::Cable { .. } => {
                    if rec.decay.is_some() {
                        return Err(rerr("cable decay is computed, never stored"));
                    }
                }
                _ => {
                    let expected = id.decay().ok_or_else(|| rerr("no rule applies"))?;
                    match &rec.decay {
                        Some(d) if *d == expected => {}
                        Some(_) => return Err(rerr("stored decay contradicts the rule")),
                        None => return Err(rerr("base record must store its decay")),
                    }
                }
            }
        }
        Ok(())
    }

    pub fn records(&self) -> &[RegistryRecord] {
        &self.records
    }

    pub fn contains(&self, id: &str) -> bool {
        self.records.iter().any(|r| r.id == id)
    }

    /// Decay bound for any well-formed id; Ok(None) when no rule applies.
    pub fn lookup(&self, id: &str) -> Result<Option<Rational>, RegistryError> {
        let id: KnotId = id.parse()?;
        Ok(id.decay())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn id_round_trip() {
        for s in [
            "torus:2,3",
            "pretzel:-2,3,7",
            "twisted-torus:3,5",
            "cable:2,11:of:torus:2,3",
            "cable:2,3:of:cable:2,11:of:torus:2,3",
        ] {
            let id: KnotId = s.parse().unwrap();
            assert_eq!(id.to_string(), s);
        }
        assert!("torus:2".parse::<KnotId>().is_err());
        assert!("pretzel:-2,4,7".parse::<KnotId>().is_err());
        assert!("cable:2,11".parse::<KnotId>().is_err());
        assert!("figure-eight:1".parse::<KnotId>().is_err());
    }

    #[test]
    fn decay_rule_numbers() {
        let reg = Registry::embedded();
        let check = |id: &str, n: i64| {
            assert_eq!(reg.lookup(id).unwrap(), Some(Rational::integer(n)), "{id}");
        };
        check("torus:2,3", 5);
        check("torus:3,4", 11);
        check("torus:2,5", 9);
        check("pretzel:-2,3,5", 15);
        check("pretzel:-2,3,7", 17);
        check("twisted-torus:3,5", 17);
        check("cable:2,11:of:torus:2,3", 22);
    }

    #[test]
    fn rule_inapplicable_is_absent() {
        let reg = Registry::embedded();
        assert_eq!(reg.lookup("torus:2,4").unwrap(), None);
        assert_eq!(reg.lookup("pretzel:-2,3,4").unwrap(), None);
        assert_eq!(reg.lookup("pretzel:-2,3,3").unwrap(), None);
        assert_eq!(reg.lookup("twisted-torus:3,4").unwrap(), None);
        // 3/2 does not exceed the trefoil bound 5.
        assert_eq!(reg.lookup("cable:2,3:of:torus:2,3").unwrap(), None);
        // Iterated cable: inner bound 22, 3/2 still too small.
        assert_eq!(
            reg.lookup("cable:2,3:of:cable:2,11:of:torus:2,3").unwrap(),
            None
        );
        // Iterated cable with a steep enough slope: 45/2 > 22.
        assert_eq!(
            reg.lookup("cable:2,45:of:cable:2,11:of:torus:2,3").unwrap(),
            Some(Rational::integer(90))
        );
        assert!(reg.lookup("nonsense").is_err());
    }

    #[test]
    fn embedded_catalog_is_validated() {
        let reg = Registry::embedded();
        assert!(reg.contains("torus:2,3"));
        assert!(reg.contains("pretzel:-2,3,7"));
        // The unknown window below each cable bound is nonempty.
        for rec in reg.records() {
            if rec.kind == "cable" {
                let id: KnotId = rec.id.parse().unwrap();
                if let KnotId::Cable { p, q, .. } = id {
                    assert!(p * q - p - q < p * q);
                }
            }
        }
    }

    #[test]
    fn tampered_records_rejected() {
        let bad = r#"[{"id": "torus:2,3", "kind": "torus", "params": [2, 3], "decay": "6"}]"#;
        assert!(matches!(
            Registry::from_json(bad),
            Err(RegistryError::Record(_, _))
        ));
        let bad = r#"[{"id": "torus:2,3", "kind": "pretzel", "params": [2, 3], "decay": "5"}]"#;
        assert!(Registry::from_json(bad).is_err());
        let bad = r#"[{"id": "cable:2,11:of:torus:2,3", "kind": "cable", "params": [2, 11], "decay": "22"}]"#;
        assert!(Registry::from_json(bad).is_err());
        let ok = r#"[{"id": "cable:2,11:of:torus:2,3", "kind": "cable", "params": [2, 11]}]"#;
        assert!(Registry::from_json(ok).is_ok());
    }
}

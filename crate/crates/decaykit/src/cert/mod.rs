//! Decay certificates: machine-checkable derivations that a cable space's
//! peripheral slopes above a threshold are forced positive by any left order
//! whose positive cone contains the fiber power and the companion window.
//!
//! A certificate fixes cable parameters (p, q), a companion threshold r, and
//! a case tree over the sign of a few pivot elements. Every tree path must be
//! covered: each branch splits into an `EXISTS_POSITIVE` child (with an
//! optional fresh binder for the witnessing conjugation depth) and an
//! `ALL_NEGATIVE` child. Leaves carry sign derivations whose final judgments
//! exhibit the peripheral powers mu_C^(a*i+b) la_C^d for every index i, with
//! b = p*q*d, so the slope sequence (a*i + b)/d starts at p*q and increases.
//!
//! The checker ([`verify_certificate`]) re-derives every judgment at every
//! grid point; nothing in the certificate is trusted beyond naming which rule
//! to replay.

pub mod expr;

mod builtin;
mod verify;

pub use builtin::builtin_cable_certificate;
pub use expr::{TemplateItem, WordTemplate};
pub use verify::{
    conclude_decay, verify_certificate, verify_with_observer, Failure, LeafResult, LeafStatus,
    ObserverMismatch, ObserverReport, VerificationReport, Verdict, VerifyOptions,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::BackendError;
use crate::rational::Rational;
use crate::slope::Sign;
use crate::word::{AffineExpr, WordError};

#[derive(Debug, Error)]
pub enum CertError {
    #[error("certificate structure: {0}")]
    Structure(String),
    #[error("cable parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot conclude decay: {0}")]
    NotAccepted(String),
}

/// Inference rules for sign judgments. Signs are read inclusively: a
/// `positive` judgment asserts membership in P or triviality, `negative` in
/// P^-1 or triviality. Branch hypotheses on the exists side are strict; final
/// judgments recover strictness because their words are visibly nontrivial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    /// Assume a hypothesis visible at this leaf: the distinguished fiber
    /// power, an ancestor branch pivot, or a scan case.
    #[serde(rename = "HYP")]
    Hyp,
    /// A peripheral lattice word m^a l^b with b >= 1 and a/b >= r is positive
    /// (the companion window, boundary included).
    #[serde(rename = "DECAY")]
    Decay,
    /// Concatenation of same-sign premises, either listed or iterated over a
    /// binder range.
    #[serde(rename = "PROD")]
    Prod,
    /// w^c keeps the sign of w (c >= 0); conversely a c-th root keeps the
    /// sign of its power (c >= 1), which is sound for inclusive signs.
    #[serde(rename = "POWER_ROOT")]
    PowerRoot,
    /// Inversion flips the sign.
    #[serde(rename = "INV")]
    Inv,
    /// Replace a word by an equal element of the cable-space group, keeping
    /// the sign; equality is decided by normal forms.
    #[serde(rename = "EQ")]
    Eq,
}

/// Rule-specific payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Side {
    Hyp {
        hyp: String,
        /// Instantiation of a schema binder (required exactly when the cited
        /// hypothesis is an all-negative schema with a binder).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        at: Option<AffineExpr>,
    },
    Power { power: AffineExpr },
    Root { root: AffineExpr },
    Iter { iter: IterSpec },
}

/// Iterated product: premise instantiated at bind = from, from-1, ..., downto
/// and concatenated left to right. An empty range is the empty word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterSpec {
    pub bind: String,
    pub from: AffineExpr,
    pub downto: AffineExpr,
}

/// Restrict a judgment to instantiations with param >= min.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub param: String,
    pub min: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub id: u32,
    pub word: WordTemplate,
    pub sign: Sign,
    pub rule: Rule,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub premises: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub when: Vec<Gate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamDecl {
    pub name: String,
    pub min: i64,
}

/// Witness scan of a minimal sign change. The scan hypotheses `scan_pos`
/// (template at n, strictly positive) and `scan_prev_neg` (template at n-1,
/// negative) are justified by the anchor judgment (template at min-1 is
/// negative) and the top judgment (template at max is positive): some minimal
/// n in [min, max] must separate them. An empty range forces anchor and top
/// onto the same word with opposite strictness, so the leaf's hypotheses are
/// contradictory and it verifies vacuously.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scan {
    pub param: String,
    pub min: i64,
    pub max: i64,
    pub template: WordTemplate,
    pub anchor_neg: u32,
    pub top_pos: u32,
}

/// Slope sequence (a*i + b)/d produced by a leaf; affine in the resolved
/// auxiliary exponent s.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeqFormula {
    pub a: AffineExpr,
    pub b: AffineExpr,
    pub d: AffineExpr,
}

/// Side condition electing the auxiliary exponent: the smallest s >= min
/// with den(s) >= 1 and num(s)/den(s) >= r, re-resolved at every grid point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChosenS {
    pub num: AffineExpr,
    pub den: AffineExpr,
    pub min: i64,
}

/// A final judgment covers indices i in [min_i, max_i] (unbounded above when
/// max_i is absent).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalRef {
    pub judgment: u32,
    pub min_i: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_i: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leaf {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<Scan>,
    pub sequence: SeqFormula,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen: Option<ChosenS>,
    pub judgments: Vec<u32>,
    pub finals: Vec<FinalRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchNode {
    pub name: String,
    pub pivot: WordTemplate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binder: Option<String>,
    #[serde(rename = "EXISTS_POSITIVE", default, skip_serializing_if = "Option::is_none")]
    pub exists_positive: Option<Box<Node>>,
    #[serde(rename = "ALL_NEGATIVE", default, skip_serializing_if = "Option::is_none")]
    pub all_negative: Option<Box<Node>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Branch(BranchNode),
    Leaf(Box<Leaf>),
}

/// Self-test identity checked over its own parameter grid: lhs and rhs must
/// be the same cable-space element at every instantiation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityAudit {
    pub name: String,
    pub lhs: WordTemplate,
    pub rhs: WordTemplate,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<AuditParam>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditParam {
    pub name: String,
    pub min: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub p: i64,
    pub q: i64,
    pub r: Rational,
    pub parameters: Vec<ParamDecl>,
    pub branches: Vec<Node>,
    pub judgments: Vec<Judgment>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub identity_audits: Vec<IdentityAudit>,
}

impl Certificate {
    pub fn from_json_str(s: &str) -> Result<Certificate, CertError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> Result<String, CertError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub(crate) fn judgment(&self, id: u32) -> Option<&Judgment> {
        self.judgments.iter().find(|j| j.id == id)
    }

    pub(crate) fn param_min(&self, name: &str) -> Option<i64> {
        self.parameters
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.min)
    }
}

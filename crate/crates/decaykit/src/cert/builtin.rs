//! Built-in certificate for cable spaces: the full case tree over the signs
//! of the cable meridian, its conjugated twists, and the split power pair,
//! with one sign derivation per leaf.
//!
//! The tree covers every left order whose cone contains the fiber power t^p
//! and the companion window above r:
//!
//! - `cable_meridian` positive: mu_C^i t^p exhibits the slope sequence
//!   (i + pq)/1 directly.
//! - otherwise, some conjugated twist m^-k (t^-v m^u l^v) m^k positive:
//!   conjugation collapse plus two window words reach (i + pq*s)/s.
//! - otherwise, the split power pair positive at some k: a minimal sign
//!   change n in [2, p-1] splits off a commuting bracket whose p-th powers
//!   are fiber powers, reaching (i + pq(v+s))/(v+s). For p = 2 the scan
//!   range is empty and the leaf's hypotheses are contradictory.
//! - otherwise everything is negative: inverting the twist schema telescopes
//!   into m^-i mu_C^i, and one window word closes the sequence (i + pq)/1.

use super::{
    AuditParam, BranchNode, Certificate, CertError, ChosenS, FinalRef, Gate, IdentityAudit,
    Judgment, Leaf, Node, ParamDecl, Rule, Scan, SeqFormula, Side, WordTemplate,
};
use crate::cable::CableParams;
use crate::rational::Rational;
use crate::slope::Sign;
use crate::word::AffineExpr;

fn tpl(text: &str) -> WordTemplate {
    text.parse().expect("builtin template parses")
}

fn aff(text: &str) -> AffineExpr {
    text.parse().expect("builtin affine expression parses")
}

/// Generate the certificate for the (p, q) cable of an r-decayed companion.
/// Requires q/p > r; the tree is vacuous otherwise and refused here.
pub fn builtin_cable_certificate(p: i64, q: i64, r: Rational) -> Result<Certificate, CertError> {
    let params = CableParams::new(p, q).map_err(|e| CertError::Params(e.to_string()))?;
    if r.cmp_fraction(q, p) != std::cmp::Ordering::Less {
        return Err(CertError::Params(format!(
            "threshold {r} must be below the cabling slope {q}/{p}"
        )));
    }
    let (u, v) = (params.u, params.v);
    let pq = p * q;
    let pm1 = p - 1;
    let pv = p * v;
    let vp = v * p;
    let pvp = p * v * p;
    let pqv = pq * v;

    let mu = format!("m^{u} l^{v} t^-{v}");
    let la = format!("( {mu} )^-{pq} t^{p}");
    let pivot1 = format!("m^{{-k}} t^-{v} m^{u} l^{v} m^{{k}}");
    let pivot2 = format!("( m^{{-k}} t^-{v} m^{{k}} )^{pm1} ( m^{u} l^{v} )^{pm1}");
    let scan_template = format!("( m^{{-k}} t^-{v} m^{{k}} )^{{n}} ( m^{u} l^{v} )^{{n}}");
    let bracket = format!("m^{{-k}} t^{{-{v}n}} m^{u} l^{v} t^{{{v}n-{v}}} m^{{k}}");

    let hyp = |name: &str| Side::Hyp {
        hyp: name.into(),
        at: None,
    };
    let hyp_at = |name: &str, at: &str| Side::Hyp {
        hyp: name.into(),
        at: Some(aff(at)),
    };
    let power = |e: &str| Side::Power { power: aff(e) };
    let root = |e: &str| Side::Root { root: aff(e) };
    let j = |id: u32, word: String, sign: Sign, rule: Rule, premises: Vec<u32>, side: Option<Side>| {
        Judgment {
            id,
            word: tpl(&word),
            sign,
            rule,
            premises,
            side,
            when: vec![],
        }
    };
    let gated = |mut jd: Judgment, param: &str, min: i64| {
        jd.when.push(Gate {
            param: param.into(),
            min,
        });
        jd
    };
    use Rule::*;
    use Sign::{Negative as Neg, Positive as Pos};

    let judgments = vec![
        j(0, format!("t^{p}"), Pos, Hyp, vec![], Some(hyp("root"))),
        // meridian_positive
        j(1, mu.clone(), Pos, Hyp, vec![], Some(hyp("cable_meridian"))),
        j(2, format!("( {mu} )^{{i}}"), Pos, PowerRoot, vec![1], Some(power("i"))),
        j(3, format!("( {mu} )^{{i}} t^{p}"), Pos, Prod, vec![2, 0], None),
        j(4, format!("( {mu} )^{{i+{pq}}} ( {la} )^1"), Pos, Eq, vec![3], None),
        // twisted_meridian_positive
        j(5, pivot1.clone(), Pos, Hyp, vec![], Some(hyp("twisted_meridian"))),
        j(
            6,
            format!("m^{{-k}} ( t^-{v} m^{u} l^{v} )^{{i}} m^{{k}}"),
            Pos,
            PowerRoot,
            vec![5],
            Some(power("i")),
        ),
        j(7, format!("m^{{{u}+k}} l^{v}"), Pos, Decay, vec![0], None),
        j(
            8,
            format!("m^{{{q}s-{u}-k}} l^{{{p}s-{v}}}"),
            Pos,
            Decay,
            vec![0],
            None,
        ),
        j(
            9,
            format!(
                "m^{{{u}+k}} l^{v} m^{{-k}} ( t^-{v} m^{u} l^{v} )^{{i}} m^{{k}} m^{{{q}s-{u}-k}} l^{{{p}s-{v}}}"
            ),
            Pos,
            Prod,
            vec![7, 6, 8],
            None,
        ),
        j(
            10,
            format!("( {mu} )^{{i+{pq}s}} ( {la} )^{{s}}"),
            Pos,
            Eq,
            vec![9],
            None,
        ),
        // minimal_split
        j(11, pivot1.clone(), Neg, Hyp, vec![], Some(hyp_at("twisted_meridian", "k"))),
        j(
            12,
            format!("( m^{{-k}} t^-{v} m^{{k}} )^1 ( m^{u} l^{v} )^1"),
            Neg,
            Eq,
            vec![11],
            None,
        ),
        j(13, pivot2.clone(), Pos, Hyp, vec![], Some(hyp("split_power_pair"))),
        j(14, scan_template.clone(), Pos, Hyp, vec![], Some(hyp("scan_pos"))),
        j(
            15,
            format!("m^{{-k}} t^{{-{v}n}} ( m^{u} l^{v} )^{{n}} m^{{k}}"),
            Pos,
            Eq,
            vec![14],
            None,
        ),
        j(
            16,
            format!("( m^{{-k}} t^-{v} m^{{k}} )^{{n-1}} ( m^{u} l^{v} )^{{n-1}}"),
            Neg,
            Hyp,
            vec![],
            Some(hyp("scan_prev_neg")),
        ),
        j(
            17,
            format!("( m^{u} l^{v} )^{{1-n}} ( m^{{-k}} t^{v} m^{{k}} )^{{n-1}}"),
            Pos,
            Inv,
            vec![16],
            None,
        ),
        j(
            18,
            format!("m^{{-k}} ( m^{u} l^{v} )^{{1-n}} t^{{{v}n-{v}}} m^{{k}}"),
            Pos,
            Eq,
            vec![17],
            None,
        ),
        j(19, bracket.clone(), Pos, Prod, vec![15, 18], None),
        j(
            20,
            format!("t^{{{pv}n-{pv}}}"),
            Pos,
            PowerRoot,
            vec![0],
            Some(power(&format!("{v}n-{v}"))),
        ),
        j(
            21,
            format!("( m^{{-k}} t^{{{v}n-{v}}} m^{{k}} )^{p}"),
            Pos,
            Eq,
            vec![20],
            None,
        ),
        j(
            22,
            format!("m^{{-k}} t^{{{v}n-{v}}} m^{{k}}"),
            Pos,
            PowerRoot,
            vec![21],
            Some(root(&p.to_string())),
        ),
        j(23, format!("m^{{{u}+k}} l^{v}"), Pos, Decay, vec![0], None),
        j(24, format!("m^{{{q}s-k}} l^{{{p}s}}"), Pos, Decay, vec![0], None),
        j(
            25,
            format!("t^{{{pvp}-{pv}n}}"),
            Pos,
            PowerRoot,
            vec![0],
            Some(power(&format!("{vp}-{v}n"))),
        ),
        j(
            26,
            format!("t^{{{vp}-{v}n}}"),
            Pos,
            PowerRoot,
            vec![25],
            Some(root(&p.to_string())),
        ),
        gated(
            j(
                27,
                format!("( {bracket} )^{{i-1}}"),
                Pos,
                PowerRoot,
                vec![19],
                Some(power("i-1")),
            ),
            "i",
            1,
        ),
        gated(
            j(
                28,
                format!(
                    "m^{{{u}+k}} l^{v} m^{{-k}} t^{{{v}n-{v}}} m^{{k}} ( {bracket} )^{{i-1}} m^{{{q}s-k}} l^{{{p}s}} t^{{{vp}-{v}n}}"
                ),
                Pos,
                Prod,
                vec![23, 22, 27, 24, 26],
                None,
            ),
            "i",
            1,
        ),
        gated(
            j(
                29,
                format!("( {mu} )^{{i+{pqv}+{pq}s}} ( {la} )^{{{v}+s}}"),
                Pos,
                Eq,
                vec![28],
                None,
            ),
            "i",
            1,
        ),
        j(
            30,
            format!("t^{{{pv}+{p}s}}"),
            Pos,
            PowerRoot,
            vec![0],
            Some(power(&format!("{v}+s"))),
        ),
        j(
            31,
            format!("( {mu} )^{{{pqv}+{pq}s}} ( {la} )^{{{v}+s}}"),
            Pos,
            Eq,
            vec![30],
            None,
        ),
        // all_negative
        j(
            32,
            format!("( m^{{-j}} t^-{v} m^{{j}} )^{pm1} ( m^{u} l^{v} )^{pm1}"),
            Neg,
            Hyp,
            vec![],
            Some(hyp_at("split_power_pair", "j")),
        ),
        j(
            33,
            format!("m^{{-j}} t^{v} l^-{v} m^{{j+1-{u}}}"),
            Neg,
            Eq,
            vec![32],
            None,
        ),
        j(
            34,
            format!("m^{{{u}-1-j}} l^{v} t^-{v} m^{{j}}"),
            Pos,
            Inv,
            vec![33],
            None,
        ),
        j(
            35,
            format!("m^{{-i}} ( m^{u} l^{v} t^-{v} )^{{i}}"),
            Pos,
            Prod,
            vec![34],
            Some(Side::Iter {
                iter: super::IterSpec {
                    bind: "j".into(),
                    from: aff("i-1"),
                    downto: aff("0"),
                },
            }),
        ),
        j(36, format!("m^{{i+{q}}} l^{p}"), Pos, Decay, vec![0], None),
        j(
            37,
            format!("m^{{i+{q}}} l^{p} m^{{-i}} ( m^{u} l^{v} t^-{v} )^{{i}}"),
            Pos,
            Prod,
            vec![36, 35],
            None,
        ),
        j(
            38,
            format!("( {mu} )^{{i+{pq}}} ( {la} )^1"),
            Pos,
            Eq,
            vec![37],
            None,
        ),
    ];

    let meridian_positive = Leaf {
        name: "meridian_positive".into(),
        scan: None,
        sequence: SeqFormula {
            a: aff("1"),
            b: aff(&pq.to_string()),
            d: aff("1"),
        },
        chosen: None,
        judgments: vec![0, 1, 2, 3, 4],
        finals: vec![FinalRef {
            judgment: 4,
            min_i: 0,
            max_i: None,
        }],
    };
    let twisted_positive = Leaf {
        name: "twisted_meridian_positive".into(),
        scan: None,
        sequence: SeqFormula {
            a: aff("1"),
            b: aff(&format!("{pq}s")),
            d: aff("s"),
        },
        chosen: Some(ChosenS {
            num: aff(&format!("{q}s-{u}-k")),
            den: aff(&format!("{p}s-{v}")),
            min: 1,
        }),
        judgments: vec![0, 5, 6, 7, 8, 9, 10],
        finals: vec![FinalRef {
            judgment: 10,
            min_i: 0,
            max_i: None,
        }],
    };
    let minimal_split = Leaf {
        name: "minimal_split".into(),
        scan: Some(Scan {
            param: "n".into(),
            min: 2,
            max: p - 1,
            template: tpl(&scan_template),
            anchor_neg: 12,
            top_pos: 13,
        }),
        sequence: SeqFormula {
            a: aff("1"),
            b: aff(&format!("{pqv}+{pq}s")),
            d: aff(&format!("{v}+s")),
        },
        chosen: Some(ChosenS {
            num: aff(&format!("{q}s-k")),
            den: aff(&format!("{p}s")),
            min: 1,
        }),
        judgments: std::iter::once(0).chain(11..=31).collect::<Vec<u32>>(),
        finals: vec![
            FinalRef {
                judgment: 31,
                min_i: 0,
                max_i: Some(0),
            },
            FinalRef {
                judgment: 29,
                min_i: 1,
                max_i: None,
            },
        ],
    };
    let all_negative = Leaf {
        name: "all_negative".into(),
        scan: None,
        sequence: SeqFormula {
            a: aff("1"),
            b: aff(&pq.to_string()),
            d: aff("1"),
        },
        chosen: None,
        judgments: vec![0, 32, 33, 34, 35, 36, 37, 38],
        finals: vec![FinalRef {
            judgment: 38,
            min_i: 0,
            max_i: None,
        }],
    };

    let tree = Node::Branch(BranchNode {
        name: "cable_meridian".into(),
        pivot: tpl(&mu),
        binder: None,
        exists_positive: Some(Box::new(Node::Leaf(Box::new(meridian_positive)))),
        all_negative: Some(Box::new(Node::Branch(BranchNode {
            name: "twisted_meridian".into(),
            pivot: tpl(&pivot1),
            binder: Some("k".into()),
            exists_positive: Some(Box::new(Node::Leaf(Box::new(twisted_positive)))),
            all_negative: Some(Box::new(Node::Branch(BranchNode {
                name: "split_power_pair".into(),
                pivot: tpl(&pivot2),
                binder: Some("k".into()),
                exists_positive: Some(Box::new(Node::Leaf(Box::new(minimal_split)))),
                all_negative: Some(Box::new(Node::Leaf(Box::new(all_negative)))),
            }))),
        }))),
    });

    let identity_audits = vec![
        IdentityAudit {
            name: "mu_recovery".into(),
            lhs: tpl(&format!("( t^-{v} )^{p} ( m^{u} l^{v} )^{p}")),
            rhs: tpl("m^1"),
            params: vec![],
        },
        IdentityAudit {
            name: "mu_recovery_commuted".into(),
            lhs: tpl(&format!("( m^{u} l^{v} )^{p} ( t^-{v} )^{p}")),
            rhs: tpl("m^1"),
            params: vec![],
        },
        IdentityAudit {
            name: "cable_longitude_definition".into(),
            lhs: tpl(&format!("( {la} )^1 ( {mu} )^{pq}")),
            rhs: tpl(&format!("t^{p}")),
            params: vec![],
        },
        IdentityAudit {
            name: "meridian_power_split".into(),
            lhs: tpl(&format!("( {mu} )^{{N}}")),
            rhs: tpl(&format!(
                "m^{u} l^{v} m^{{k}} ( m^{{-k}} ( t^-{v} m^{u} l^{v} )^{{N}} m^{{k}} ) m^{{-{u}-k}} l^-{v}"
            )),
            params: vec![
                AuditParam {
                    name: "N".into(),
                    min: 0,
                    max: None,
                },
                AuditParam {
                    name: "k".into(),
                    min: 0,
                    max: None,
                },
            ],
        },
        IdentityAudit {
            name: "fiber_power_central".into(),
            lhs: tpl(&format!("t^{p} ( {mu} )^1 m^1 l^1")),
            rhs: tpl(&format!("( {mu} )^1 m^1 l^1 t^{p}")),
            params: vec![],
        },
    ];

    Ok(Certificate {
        p,
        q,
        r,
        parameters: vec![
            ParamDecl {
                name: "i".into(),
                min: 0,
            },
            ParamDecl {
                name: "k".into(),
                min: 0,
            },
            ParamDecl {
                name: "j".into(),
                min: 0,
            },
            ParamDecl {
                name: "N".into(),
                min: 0,
            },
        ],
        branches: vec![tree],
        judgments,
        identity_audits,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{
        conclude_decay, verify_certificate, LeafStatus, Verdict, VerifyOptions,
    };
    use super::*;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    #[test]
    fn trefoil_cable_accepts() {
        let cert = builtin_cable_certificate(2, 3, rat(1, 1)).unwrap();
        let report = verify_certificate(&cert, &VerifyOptions::default());
        assert_eq!(report.failures, vec![]);
        assert_eq!(report.verdict, Verdict::Accept);
        assert_eq!(report.leaves.len(), 4);
        assert!(report.grid_limited);
        let statuses: Vec<LeafStatus> = report.leaves.iter().map(|l| l.status).collect();
        assert_eq!(
            statuses,
            vec![
                LeafStatus::Ok,
                LeafStatus::Ok,
                LeafStatus::Vacuous,
                LeafStatus::Ok
            ]
        );
    }

    #[test]
    fn odd_p_scan_is_single_case() {
        let cert = builtin_cable_certificate(3, 5, rat(1, 1)).unwrap();
        let report = verify_certificate(&cert, &VerifyOptions::default());
        assert_eq!(report.failures, vec![]);
        assert_eq!(report.verdict, Verdict::Accept);
        let split = report
            .leaves
            .iter()
            .find(|l| l.name == "minimal_split")
            .unwrap();
        assert_eq!(split.status, LeafStatus::Ok);
        assert!(split.notes.iter().any(|n| n.contains("n=2")));
        assert!(!split.notes.iter().any(|n| n.contains("n=3")));
    }

    #[test]
    fn conclusion_names_the_cable_slope() {
        let cert = builtin_cable_certificate(2, 11, rat(5, 1)).unwrap();
        let report = verify_certificate(&cert, &VerifyOptions::default());
        assert_eq!(report.verdict, Verdict::Accept);
        let line = conclude_decay(&report).unwrap();
        assert!(line.contains("cable(2,11) of a 5-decayed companion is 22-decayed"));
    }

    #[test]
    fn threshold_at_or_above_slope_is_refused() {
        assert!(builtin_cable_certificate(2, 3, rat(3, 2)).is_err());
        assert!(builtin_cable_certificate(2, 3, rat(2, 1)).is_err());
        assert!(builtin_cable_certificate(2, 3, rat(4, 3)).is_ok());
    }

    #[test]
    fn tampered_word_is_rejected() {
        let mut cert = builtin_cable_certificate(2, 3, rat(1, 1)).unwrap();
        let jd = cert.judgments.iter_mut().find(|j| j.id == 7).unwrap();
        jd.word = "m^{1+k} l^9".parse().unwrap();
        let report = verify_certificate(&cert, &VerifyOptions::default());
        assert_eq!(report.verdict, Verdict::Reject);
        assert!(!report.failures.is_empty());
    }
}

//! Cable-space groups and their peripheral structure.
//!
//! The cable space with winding data (p, q) has fundamental group
//! <m, l, t | [m, l] = 1, t^p = m^q l^p>. Gluing it to a companion knot
//! exterior along (m, l) -> (mu, lambda) presents a cable-knot group.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::backend::{euclid_uv, translate, BackendError};
use crate::presentation::{PeripheralPair, Presentation, PresentationError};
use crate::rational::{gcd, Rational};
use crate::word::Word;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CableError {
    #[error("invalid cable parameters p={0}, q={1}: need p >= 2, q >= 1, coprime")]
    BadParams(i64, i64),
    #[error("companion presentation has no peripheral pair")]
    MissingPeripheral,
    #[error("companion presentation already uses generator {0}")]
    GeneratorCollision(String),
    #[error(transparent)]
    Presentation(#[from] PresentationError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Winding data for a (p, q) cable: p strands, q twists, with the Bezout
/// pair (u, v) fixed by p*u - q*v = 1 and 1 <= v < p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CableParams {
    pub p: i64,
    pub q: i64,
    pub u: i64,
    pub v: i64,
}

impl CableParams {
    pub fn new(p: i64, q: i64) -> Result<CableParams, CableError> {
        if p < 2 || q < 1 || gcd(p, q) != 1 {
            return Err(CableError::BadParams(p, q));
        }
        let (u, v) = euclid_uv(p, q).map_err(|_| CableError::BadParams(p, q))?;
        Ok(CableParams { p, q, u, v })
    }
}

/// Meridian and longitude of the cable knot, as words over {m, l, t}:
/// mu = m^u l^v t^-v and lambda = mu^-pq t^p.
pub fn cable_peripherals(params: CableParams) -> PeripheralPair {
    let CableParams { p, q, u, v } = params;
    let meridian = Word::gen_power("m", u)
        .concat(&Word::gen_power("l", v))
        .concat(&Word::gen_power("t", -v));
    let longitude = meridian.repeat(-p * q).concat(&Word::gen_power("t", p));
    PeripheralPair {
        meridian,
        longitude,
    }
}

/// The cable-space group itself, peripheral words included.
pub fn cable_space_presentation(params: CableParams) -> Presentation {
    let CableParams { p, q, .. } = params;
    let commutator: Word = "m^1 l^1 m^-1 l^-1".parse().expect("literal");
    let edge = Word::gen_power("t", -p)
        .concat(&Word::gen_power("m", q))
        .concat(&Word::gen_power("l", p));
    let mut pres = Presentation::new(&["m", "l", "t"], &[]).expect("static generators");
    pres.relators = vec![commutator, edge];
    pres.peripheral = Some(cable_peripherals(params));
    pres.backend = Some(format!("cable:{p},{q}"));
    pres
}

/// Group of the (p, q) torus knot as the edge amalgam <x, y | x^p = y^q>,
/// with meridian x^a y^b (a the least positive solution of a*q + b*p = 1)
/// and longitude x^p mu^-pq.
pub fn torus_knot_presentation(p: i64, q: i64) -> Result<Presentation, CableError> {
    if p < 2 || q < 2 || gcd(p, q) != 1 {
        return Err(CableError::BadParams(p, q));
    }
    let (mut a, mut b) = (0i64, 0i64);
    for cand in 1..=p {
        if (1 - cand * q) % p == 0 {
            a = cand;
            b = (1 - cand * q) / p;
            break;
        }
    }
    debug_assert_eq!(a * q + b * p, 1);
    let meridian = Word::gen_power("x", a).concat(&Word::gen_power("y", b));
    let longitude = Word::gen_power("x", p).concat(&meridian.repeat(-p * q));
    let mut pres = Presentation::new(&["x", "y"], &[]).expect("static generators");
    pres.relators = vec![Word::gen_power("x", p).concat(&Word::gen_power("y", -q))];
    pres.peripheral = Some(PeripheralPair {
        meridian,
        longitude,
    });
    pres.backend = Some("edge-amalgam".to_string());
    pres.validate()?;
    Ok(pres)
}

/// Present the (p, q) cable of a companion knot: adjoin t, impose
/// t^p = mu^q lambda^p over the companion peripheral pair, and install
/// the cable peripheral words with (m, l) replaced by (mu, lambda).
pub fn cable_group(
    companion: &Presentation,
    params: CableParams,
) -> Result<Presentation, CableError> {
    let peripheral = companion
        .peripheral
        .as_ref()
        .ok_or(CableError::MissingPeripheral)?;
    if companion.generators.iter().any(|g| g == "t") {
        return Err(CableError::GeneratorCollision("t".to_string()));
    }
    let CableParams { p, q, .. } = params;
    let mut map: BTreeMap<String, Word> = BTreeMap::new();
    map.insert("m".to_string(), peripheral.meridian.clone());
    map.insert("l".to_string(), peripheral.longitude.clone());
    map.insert("t".to_string(), Word::gen_power("t", 1));

    let mut generators: Vec<String> = companion.generators.clone();
    generators.push("t".to_string());
    let mut relators = companion.relators.clone();
    let edge = Word::gen_power("t", -p)
        .concat(&peripheral.meridian.repeat(q))
        .concat(&peripheral.longitude.repeat(p));
    relators.push(edge);

    let cable_pair = cable_peripherals(params);
    let meridian = translate(&map, &cable_pair.meridian)?;
    let longitude = translate(&map, &cable_pair.longitude)?;

    let mut pres = Presentation {
        generators,
        relators,
        peripheral: Some(PeripheralPair {
            meridian,
            longitude,
        }),
        backend: None,
    };
    pres.backend = None;
    pres.validate()?;
    Ok(pres)
}

/// The quotient of the cable-space group by the normal closure of l:
/// the target <m, t | t^p = m^q> together with the quotient map and the
/// weights of its infinite-cyclic abelianization (m -> p, t -> q).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatelliteQuotient {
    pub target: Presentation,
    pub map: BTreeMap<String, Word>,
    pub weights: BTreeMap<String, i64>,
}

impl SatelliteQuotient {
    /// Image of a word over {m, l, t} in the target group.
    pub fn apply(&self, w: &Word) -> Result<Word, CableError> {
        Ok(translate(&self.map, w)?)
    }

    /// Integer the image represents in H1(target) = Z.
    pub fn abelian_image(&self, w: &Word) -> Result<i64, CableError> {
        let image = self.apply(w)?;
        let mut total = 0i64;
        for (gen, e) in image.concrete_syllables().map_err(BackendError::from)? {
            total += self.weights.get(&gen).copied().unwrap_or(0) * e;
        }
        Ok(total)
    }
}

pub fn satellite_quotient(params: CableParams) -> SatelliteQuotient {
    let CableParams { p, q, .. } = params;
    let mut target = Presentation::new(&["m", "t"], &[]).expect("static generators");
    target.relators = vec![Word::gen_power("t", -p).concat(&Word::gen_power("m", q))];
    target.validate().expect("valid by construction");
    let mut map = BTreeMap::new();
    map.insert("m".to_string(), Word::gen_power("m", 1));
    map.insert("l".to_string(), Word::empty());
    map.insert("t".to_string(), Word::gen_power("t", 1));
    let mut weights = BTreeMap::new();
    weights.insert("m".to_string(), p);
    weights.insert("t".to_string(), q);
    SatelliteQuotient {
        target,
        map,
        weights,
    }
}

/// Seifert genus of the (p, q) torus knot.
pub fn torus_knot_genus(p: i64, q: i64) -> Result<i64, CableError> {
    if p < 2 || q < 2 || gcd(p, q) != 1 {
        return Err(CableError::BadParams(p, q));
    }
    Ok((p - 1) * (q - 1) / 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoVerdict {
    LeftOrderable,
    NotLeftOrderable,
    Unknown,
}

/// Slope window classification for surgery on a (p, q) cable knot whose
/// companion carries the given decay bound (if any).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoWindow {
    /// Surgeries with r strictly below this yield left-orderable fillings.
    pub lo_below: Rational,
    /// When set, surgeries with r at or above this are obstructed.
    pub nlo_from: Option<Rational>,
}

pub fn cable_decay_applicable(params: CableParams, companion_decay: &Rational) -> bool {
    companion_decay.cmp_fraction(params.q, params.p) == std::cmp::Ordering::Less
}

pub fn lo_window(
    params: CableParams,
    companion_decay: Option<&Rational>,
) -> Result<LoWindow, CableError> {
    let CableParams { p, q, .. } = params;
    let lo_below = Rational::integer(p * q - p - q);
    let nlo_from = match companion_decay {
        Some(d) if cable_decay_applicable(params, d) => Some(Rational::integer(p * q)),
        _ => None,
    };
    Ok(LoWindow { lo_below, nlo_from })
}

impl LoWindow {
    pub fn classify(&self, r: &Rational) -> LoVerdict {
        if *r < self.lo_below {
            return LoVerdict::LeftOrderable;
        }
        if let Some(from) = &self.nlo_from {
            if *r >= *from {
                return LoVerdict::NotLeftOrderable;
            }
        }
        LoVerdict::Unknown
    }
}

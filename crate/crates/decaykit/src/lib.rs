//! Exact peripheral-slope arithmetic, normal forms in cable-knot groups,
//! machine-checked positivity derivations, and a finite positive-cone
//! search oracle.
//!
//! The crate is organized bottom-up:
//!
//! - [`rational`] / [`slope`]: exact fractions, surgery slopes on the Z^2
//!   peripheral lattice, lexicographic lattice orders, and the decayed-window
//!   decision procedure.
//! - [`word`]: words with affine symbolic exponents over named generators.
//! - [`presentation`] / [`backend`]: finitely presented groups, integer
//!   homology, and word-problem backends (abelian, cyclic free products,
//!   two-generator amalgams, the cable amalgam, bounded generic rewriting).
//! - [`cable`]: cable-group construction, peripheral elements, the satellite
//!   quotient, and the orderability window.
//! - [`registry`]: a small knot table with rule-derived decay bounds.
//! - [`cert`]: the positivity-derivation checker and the builtin certificate
//!   generator for cables.
//! - [`search`]: ball enumeration and sign-assignment search for positive
//!   cones on a finite window.

pub mod backend;
pub mod cable;
pub mod cert;
pub mod presentation;
pub mod rational;
pub mod registry;
pub mod search;
pub mod slope;
pub mod word;

pub use rational::Rational;
pub use slope::{Sign, Slope, SlopeValue, WindowVerdict, ZZOrder};
pub use word::{AffineExpr, Word};

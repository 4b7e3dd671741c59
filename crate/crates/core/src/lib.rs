//! Exact and closed-form evaluation of multiplicative character sums over
//! `Z/p^m`, with a catalogue of prehomogeneous instances to check them on.

pub mod catalogue;
pub mod characters;
pub mod charsums;
pub mod error;
pub mod morse;
pub mod multipoly;
pub mod residue;
pub mod verify;

pub use error::{Error, Result};

//! Invariants of open subgroups of GL2(Z_l) given by generators mod l^n: level,
//! index, genus of the modular curve X_G, closed-point degrees on X1(l^k) and
//! X0(l^k), and the filter deciding which (level, degree) pairs can carry
//! isolated points.
//!
//! Matrices act on column vectors from the left throughout.

pub mod error;
pub mod gl2;
pub mod isolated;
pub mod labelio;
pub mod lattice;
pub mod linalg;
pub mod modarith;
pub mod modcurves;
pub mod orbits;

mod fasthash;

use std::fmt;
use std::str::FromStr;

pub use error::{Error, Result};
pub use gl2::{CartanKind, CartanSpec, MatrixGroup};
pub use modarith::{PrimePowerModulus, ResidueMatrix};

/// Default cap on the number of elements any single enumeration may produce.
pub const DEFAULT_ENUM_CAP: u64 = 10_000_000;

/// Which family of modular curves a computation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Gamma1,
    Gamma0,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Gamma1 => "gamma1",
            Family::Gamma0 => "gamma0",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gamma1" | "g1" | "x1" => Ok(Family::Gamma1),
            "gamma0" | "g0" | "x0" => Ok(Family::Gamma0),
            other => Err(Error::Invalid(format!("unknown family {other:?}"))),
        }
    }
}

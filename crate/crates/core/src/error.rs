//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("inexact division: remainder {0} is nonzero")]
    InexactDivision(String),
    #[error("gcd of two zero polynomials is undefined")]
    UndefinedGcd,
    #[error("resultant undefined: both inputs constant in {0}")]
    DegenerateResultant(String),
    #[error("denominator magnitude {0:e} is below the pole threshold")]
    PoleProximity(f64),
    #[error("place is not on the curve: {0}")]
    InvalidPlace(String),
    #[error("order of the zero function is undefined")]
    ZeroFunction,
    #[error("place enumeration inconsistency: order sum {got} but expected {expected}")]
    ConsistencyFailure { got: i64, expected: i64 },
    #[error("degenerate map: {0}")]
    DegenerateMap(String),
    #[error("invalid accessory data: {0}")]
    InvalidAccessoryData(String),
    #[error("potential is identically zero")]
    DegeneratePotential,
    #[error("pole of order {order} at {point}: not a regular singular point")]
    IrregularSingularity { point: String, order: usize },
    #[error("all c_j vanish: the connection keeps the excessive elliptic automorphism")]
    ExcessiveAutomorphismRisk,
    #[error("coordinate density R' vanishes identically")]
    DegenerateCoordinate,
    #[error("S or T identity is identically zero")]
    DegenerateIdentity,
    #[error("elimination degenerated to zero; common factor: {0}")]
    EliminationDegeneracy(String),
    #[error("degree {got} exceeds the configured cap {cap}")]
    DegreeOverflow { got: usize, cap: usize },
    #[error("integration step underflow near singularity at {0}")]
    SingularityEncounter(String),
    #[error("|Psi1| = {0:e} too small to define the coordinate map")]
    CoordinateDegeneracy(f64),
    #[error("tau outside the oracle domain: {0}")]
    OracleDomain(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

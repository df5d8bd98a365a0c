//! Symbolic-numeric toolkit for uniformization-flavoured calculus:
//! exact rational/polynomial arithmetic, Schwarzian-bracket machinery,
//! Fuchsian potentials, connections on hyperelliptic curves, jet-variable
//! elimination into autonomous third-order ODEs, and the floating-point
//! verification layer (path integration, monodromy, q-series oracles).

pub mod error;
pub mod poly;
pub mod rational;
pub mod ratfunc;
pub mod series;
pub mod curve;
pub mod fuchsian;
pub mod connection;
pub mod jets;
pub mod qseries;
pub mod numerics;

pub use error::{Error, Result};

//! Spectral toolkit for the step-field magnetic Schrödinger operator near a
//! curved edge: fiber band functions, the spectral invariants entering the
//! three-term eigenvalue asymptotics, WKB quasimodes, and a direct 2D solver
//! in Frenet coordinates.

pub mod error;
pub mod fiber1d;
pub mod invariants;
pub mod quasimode;
pub mod verify;
pub mod edge2d;

pub use error::{Error, Result};

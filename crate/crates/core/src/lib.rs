//! Truncated-Fock-space simulation of photon subtraction from a two-mode
//! squeezed vacuum routed through a three-waveguide coupler.
//!
//! The squeezed source feeds the outer guides of a waveguide trimer; photons
//! hopping into the center guide are counted by a photon-number-resolving
//! detector, heralding a photon-subtracted state of the outer modes without
//! revealing which guide the photons left. The library computes the
//! propagated state two independent ways (a multinomial operator expansion
//! and a per-block generator exponential), conditions on the detector
//! outcome, and evaluates joint photon-number statistics, moment-matrix
//! nonclassicality witnesses, and Schmidt-spectrum entanglement measures.

pub mod analysis;
pub mod detect;
pub mod error;
pub mod evolve;
pub mod fock;
pub mod linalg;
pub mod trimer;

pub use error::{Error, Result};

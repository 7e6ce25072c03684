//! Giant atoms chirally coupled to a one-dimensional waveguide.
//!
//! Layouts of connection points are turned into a Lindblad master equation
//! either through SLH network composition ([`slh`]) or through closed-form
//! coefficients ([`coefficients`]); [`dynamics`] integrates it and
//! [`analysis`] looks for decoherence-free interactions and dark states.

pub mod hilbert;
pub mod slh;
pub mod topology;
pub mod coefficients;
pub mod dynamics;
pub mod analysis;
pub mod cli;

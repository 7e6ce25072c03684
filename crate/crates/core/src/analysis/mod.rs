//! Physics verdicts on a layout: decoherence-free interaction, dark states
//! with and without a drive, the rates that go with them, and the
//! reference tables for two atoms.

mod dark;
mod fit;
mod multi;
mod rates;
pub mod tables;

pub use dark::{driven_dark_state, find_dark_states, DarkClass, DarkStateReport, DarkStateSearch};
pub use fit::{exponential_rate, oscillation_frequency, populating_rate_fit, TransientFit};
pub use multi::{
    multi_atom_dark_conditions, splitting_fidelity_drop, verify_splitting_invariance, ConditionReport, SplitSpec,
};
pub use rates::{rate_comparison, RateComparison, RateSample};

use thiserror::Error;

use crate::coefficients::CoefficientSet;
use crate::dynamics::DynamicsError;
use crate::hilbert::C64;
use crate::topology::{DriveSpec, TopologyError};

/// Default relative tolerance for kernel and eigen residuals.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Fidelity above which a state is given a named class.
pub const CLASS_FIDELITY: f64 = 1.0 - 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("operation needs exactly two atoms, got {0}")]
    NotTwoAtoms(usize),
    #[error("no driven dark state: {0}")]
    NoDrivenDarkState(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfiReport {
    pub is_dfi: bool,
    /// `g_{j,k}` for every pair `j < k`, reported whether or not the layout
    /// is decoherence free.
    pub residual_g: Vec<((usize, usize), C64)>,
    pub max_individual_decay: f64,
    pub max_collective_decay: f64,
    pub tol: f64,
}

pub fn check_dfi(coeffs: &CoefficientSet, tol: f64) -> DfiReport {
    let n = coeffs.n_atoms();
    let mut residual_g = Vec::new();
    let mut max_coll = 0.0f64;
    for j in 0..n {
        for k in j + 1..n {
            residual_g.push(((j, k), coeffs.g(j, k)));
            max_coll = max_coll.max(coeffs.gamma_coll(j, k).norm());
        }
    }
    let max_ind = coeffs.decay.iter().cloned().fold(0.0, f64::max);
    let interacting = residual_g.iter().any(|(_, g)| g.norm() > tol);
    DfiReport {
        is_dfi: max_ind <= tol && max_coll <= tol && interacting,
        residual_g,
        max_individual_decay: max_ind,
        max_collective_decay: max_coll,
        tol,
    }
}

/// `ξ = (ω_b′ − ω_a′ + g − g*)/2`, the singlet–triplet coupling, with bare
/// frequencies.
pub fn xi_coupling(coeffs: &CoefficientSet) -> Result<C64, AnalysisError> {
    xi_in_frame(coeffs, false)
}

/// As [`xi_coupling`], optionally in the frame of a drive (detunings
/// instead of bare frequencies).
pub fn xi_in_frame(coeffs: &CoefficientSet, rotating: bool) -> Result<C64, AnalysisError> {
    two_atoms(coeffs)?;
    let w = coeffs.shifted_frequency(rotating);
    let g = coeffs.g(0, 1);
    Ok((C64::from(w[1] - w[0]) + g - g.conj()) / 2.0)
}

/// `(Γ_S, Γ_T)`, the decay rates of the singlet and the triplet.
pub fn bright_decay_rates(coeffs: &CoefficientSet) -> Result<(f64, f64), AnalysisError> {
    two_atoms(coeffs)?;
    let sum = coeffs.decay[0] + coeffs.decay[1];
    let coll = 2.0 * coeffs.gamma_coll(0, 1).re;
    Ok(((sum - coll) / 2.0, (sum + coll) / 2.0))
}

/// Drive amplitude `β` that gives atom `atom` the Rabi frequency `omega`.
///
/// Returns `None` when the atom does not couple to right-moving light.
pub fn beta_for_rabi(coeffs: &CoefficientSet, atom: usize, omega: C64) -> Option<DriveSpec> {
    let s_r = C64::from_polar(1.0, coeffs.total_phase);
    let a = coeffs.amp_right[atom];
    if a.norm() < 1e-12 {
        return None;
    }
    Some(DriveSpec::new(omega / (2.0 * s_r * a.conj())))
}

fn two_atoms(coeffs: &CoefficientSet) -> Result<(), AnalysisError> {
    match coeffs.n_atoms() {
        2 => Ok(()),
        n => Err(AnalysisError::NotTwoAtoms(n)),
    }
}

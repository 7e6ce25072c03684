use crate::coefficients::{assemble_model, compute_coefficients, CoefficientSet};
use crate::hilbert::{StateVector, C64};
use crate::topology::ValidatedLayout;

use super::{find_dark_states, AnalysisError, DarkClass, DEFAULT_TOL};

/// The four sufficient conditions for a dark state of many atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    /// Right- and left-moving amplitude vectors are proportional.
    pub amplitude_ratio: bool,
    /// No atom couples to the waveguide at all; every state is dark.
    pub all_decoupled: bool,
    /// Some nontrivial state in the common kernel is an eigenstate of `H`.
    pub eigenstate: bool,
    /// `ω′_j = ω′_k` for all pairs.
    pub equal_frequencies: bool,
    /// `g_{j,k}` real for all pairs.
    pub real_exchange: bool,
}

impl ConditionReport {
    pub fn all_hold(&self) -> bool {
        self.amplitude_ratio && self.eigenstate && self.equal_frequencies && self.real_exchange
    }
}

pub fn multi_atom_dark_conditions(coeffs: &CoefficientSet) -> ConditionReport {
    let n = coeffs.n_atoms();
    let (ar, al) = (&coeffs.amp_right, &coeffs.amp_left);
    let zero = |a: C64| a.norm() <= DEFAULT_TOL;
    let all_decoupled = ar.iter().chain(al).all(|&a| zero(a));
    // A_jR/A_kR = A_jL/A_kL wherever defined. A denominator that vanishes
    // in one direction only leaves the ratio undefined, which fails.
    let amplitude_ratio = (0..n).all(|j| {
        (0..n).filter(|&k| k != j).all(|k| match (zero(ar[k]), zero(al[k])) {
            (true, true) => true,
            (false, false) => (ar[j] / ar[k] - al[j] / al[k]).norm() <= DEFAULT_TOL * (ar[j] / ar[k]).norm().max(1.0),
            _ => false,
        })
    });
    let w = coeffs.shifted_frequency(false);
    let w_scale = w.iter().map(|x| x.abs()).fold(1.0, f64::max);
    let equal_frequencies = w.iter().all(|x| (x - w[0]).abs() <= DEFAULT_TOL * w_scale);
    let g_scale = coeffs.exchange.iter().map(|g| g.norm()).fold(1.0, f64::max);
    let real_exchange = coeffs.exchange.iter().all(|g| g.im.abs() <= DEFAULT_TOL * g_scale);
    let search = find_dark_states(&assemble_model(coeffs, None), DEFAULT_TOL);
    let eigenstate = search.fully_decoupled || search.nontrivial().next().is_some();
    ConditionReport {
        amplitude_ratio,
        all_decoupled,
        eigenstate,
        equal_frequencies,
        real_exchange,
    }
}

/// Replacement of one connection point by consecutive sub-points.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub point: usize,
    pub sub_rates: Vec<(f64, f64)>,
    pub sub_phases: Vec<f64>,
}

/// Whether the undriven nontrivial dark states survive a split: both
/// layouts must have dark subspaces of equal dimension, and every original
/// dark state must lie in the split layout's dark subspace to within
/// `1 − tol` in fidelity.
pub fn verify_splitting_invariance(
    layout: &ValidatedLayout,
    split: &SplitSpec,
    tol: f64,
) -> Result<bool, AnalysisError> {
    let after = layout.split_point(split.point, &split.sub_rates, &split.sub_phases)?;
    let dark = |l: &ValidatedLayout| -> Vec<StateVector> {
        let me = assemble_model(&compute_coefficients(l), None);
        find_dark_states(&me, DEFAULT_TOL)
            .states
            .into_iter()
            .filter(|r| r.class != DarkClass::Trivial)
            .map(|r| r.state)
            .collect()
    };
    let before = dark(layout);
    let split_states = dark(&after.layout);
    if before.len() != split_states.len() {
        return Ok(false);
    }
    Ok(before.iter().all(|v| {
        let captured: f64 = split_states.iter().map(|w| w.dotc(v).norm_sqr()).sum();
        captured > 1.0 - tol
    }))
}

/// Largest fidelity drop of an original dark state after a split, measured
/// against the split layout's dark subspace (`1` if it has none).
pub fn splitting_fidelity_drop(layout: &ValidatedLayout, split: &SplitSpec) -> Result<f64, AnalysisError> {
    let after = layout.split_point(split.point, &split.sub_rates, &split.sub_phases)?;
    let states = |l: &ValidatedLayout| -> Vec<StateVector> {
        let me = assemble_model(&compute_coefficients(l), None);
        find_dark_states(&me, DEFAULT_TOL).nontrivial().map(|r| r.state.clone()).collect()
    };
    let split_states = states(&after.layout);
    Ok(states(layout)
        .iter()
        .map(|v| 1.0 - split_states.iter().map(|w| w.dotc(v).norm_sqr()).sum::<f64>())
        .fold(0.0, f64::max))
}

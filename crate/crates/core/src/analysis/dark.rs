use std::fmt;

use crate::coefficients::{assemble_model, CoefficientSet};
use crate::dynamics::MasterEquation;
use crate::hilbert::{
    basis_vector, eigh, fidelity, fix_phase, ground, null_space_below, singlet, triplet, ComplexMatrix,
    StateVector, C64,
};
use crate::topology::DriveSpec;

use super::{AnalysisError, CLASS_FIDELITY, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DarkClass {
    Trivial,
    Singlet,
    Triplet,
    DrivenDS,
    DrivenDT,
    Other,
}

impl fmt::Display for DarkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DarkClass::Trivial => "trivial",
            DarkClass::Singlet => "S",
            DarkClass::Triplet => "T",
            DarkClass::DrivenDS => "D_S",
            DarkClass::DrivenDT => "D_T",
            DarkClass::Other => "other",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DarkStateReport {
    pub state: StateVector,
    pub eigenvalue: f64,
    pub class: DarkClass,
    /// Weight of `|S/T⟩` relative to `|gg⟩` in a driven dark state.
    pub alpha: Option<C64>,
    /// Rate `Γ_D` at which a driven dark state is populated.
    pub populating_rate: Option<f64>,
    /// `(Γ_S, Γ_T)` for two atoms.
    pub singlet_triplet_rates: Option<(f64, f64)>,
    /// `⟨S|H|T⟩` for two atoms.
    pub xi: Option<C64>,
    /// `max_k ‖𝕃_k v‖`.
    pub collapse_residual: f64,
    /// `‖Hv − μv‖`.
    pub eigen_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DarkStateSearch {
    pub states: Vec<DarkStateReport>,
    /// Dimension of the common kernel of the collapse operators.
    pub kernel_dim: usize,
    /// Every state is dark: the atoms do not couple to the waveguide.
    pub fully_decoupled: bool,
}

impl DarkStateSearch {
    pub fn nontrivial(&self) -> impl Iterator<Item = &DarkStateReport> {
        self.states.iter().filter(|r| r.class != DarkClass::Trivial)
    }

    pub fn has_class(&self, class: DarkClass) -> bool {
        self.states.iter().any(|r| r.class == class)
    }
}

/// Pure states annihilated by every collapse operator that are also
/// eigenstates of the Hamiltonian.
///
/// Degenerate dark subspaces get a deterministic basis: canonical kets are
/// projected onto the subspace from `|g…g⟩` backwards and orthogonalized.
pub fn find_dark_states(me: &MasterEquation, tol: f64) -> DarkStateSearch {
    let d = me.dim();
    let ops = me.collapse_ops();
    let mut stacked = ComplexMatrix::zeros(d * ops.len().max(1), d);
    for (i, l) in ops.iter().enumerate() {
        stacked.view_mut((i * d, 0), (d, d)).copy_from(l);
    }
    // Rates and frequencies are in units where O(1) is typical, so operators
    // that vanish up to rounding count as zero.
    let kernel = null_space_below(&stacked, tol * stacked.norm().max(1.0));
    let kernel_dim = kernel.len();
    let h = me.hamiltonian();
    let h_scale = h.norm().max(1.0);
    let mut states = Vec::new();

    if kernel_dim > 0 {
        let q = ComplexMatrix::from_columns(&kernel);
        let compressed = q.adjoint() * h * &q;
        let (vals, vecs) = eigh(&((&compressed + compressed.adjoint()).unscale(2.0))).expect("Hermitian by construction");
        let cluster_tol = 1e-6 * h_scale;
        let mut start = 0;
        while start < vals.len() {
            let mut end = start + 1;
            while end < vals.len() && vals[end] - vals[end - 1] <= cluster_tol {
                end += 1;
            }
            let mu = vals[start..end].iter().sum::<f64>() / (end - start) as f64;
            let w = &q * vecs.columns(start, end - start);
            // Part of the cluster that H maps into itself.
            let shifted = (h - ComplexMatrix::identity(d, d) * C64::from(mu)) * &w;
            let coeffs = null_space_below(&shifted, tol * h_scale);
            if !coeffs.is_empty() {
                let sub: Vec<StateVector> = coeffs.iter().map(|c| &w * c).collect();
                for v in canonical_basis(&sub) {
                    states.push(report_for(me, v));
                }
            }
            start = end;
        }
    }

    DarkStateSearch {
        states,
        kernel_dim,
        fully_decoupled: kernel_dim == d,
    }
}

// Orthonormal basis of span(sub) built from the canonical kets, visited from
// the last index to the first.
fn canonical_basis(sub: &[StateVector]) -> Vec<StateVector> {
    let d = sub[0].len();
    let mut out: Vec<StateVector> = Vec::with_capacity(sub.len());
    for idx in (0..d).rev() {
        if out.len() == sub.len() {
            break;
        }
        let e = basis_vector(d, idx);
        let mut v = StateVector::zeros(d);
        for s in sub {
            v += s * s.dotc(&e);
        }
        for b in &out {
            v -= b * b.dotc(&v);
        }
        if v.norm() > 1e-6 {
            out.push(fix_phase(&v.unscale(v.norm())));
        }
    }
    out
}

fn report_for(me: &MasterEquation, v: StateVector) -> DarkStateReport {
    let h = me.hamiltonian();
    let hv = h * &v;
    let mu = v.dotc(&hv).re;
    let eigen_residual = (&hv - &v * C64::from(mu)).norm();
    let collapse_residual = me.collapse_ops().iter().map(|l| (l * &v).norm()).fold(0.0, f64::max);
    let n = me.n_atoms();
    let mut report = DarkStateReport {
        class: DarkClass::Other,
        eigenvalue: mu,
        alpha: None,
        populating_rate: None,
        singlet_triplet_rates: None,
        xi: None,
        collapse_residual,
        eigen_residual,
        state: v,
    };
    if fidelity(&report.state, &ground(n)) > CLASS_FIDELITY {
        report.class = DarkClass::Trivial;
    }
    if n != 2 {
        return report;
    }
    let (s, t, gg) = (singlet(), triplet(), ground(2));
    let rate = |x: &StateVector| me.collapse_ops().iter().map(|l| (l * x).norm_squared()).sum::<f64>();
    let (gamma_s, gamma_t) = (rate(&s), rate(&t));
    report.singlet_triplet_rates = Some((gamma_s, gamma_t));
    report.xi = Some(s.dotc(&(h * &t)));
    if report.class == DarkClass::Trivial {
        return report;
    }
    let v = &report.state;
    if fidelity(v, &s) > CLASS_FIDELITY {
        report.class = DarkClass::Singlet;
        return report;
    }
    if fidelity(v, &t) > CLASS_FIDELITY {
        report.class = DarkClass::Triplet;
        return report;
    }
    let w_gg = gg.dotc(v);
    for (member, class) in [(&s, DarkClass::DrivenDS), (&t, DarkClass::DrivenDT)] {
        let w = member.dotc(v);
        if w_gg.norm_sqr() + w.norm_sqr() > CLASS_FIDELITY && w.norm_sqr() > 1e-8 {
            let alpha = w / w_gg;
            report.class = class;
            report.alpha = Some(alpha);
            report.populating_rate = Some((gamma_s + gamma_t) / (1.0 + alpha.norm_sqr()));
        }
    }
    report
}

/// The driven dark state `|D_{S/T}⟩ ∝ α|S/T⟩ + |gg⟩` of two atoms.
///
/// The dark member `Y ∈ {S, T}` is the one both collapse operators
/// annihilate. `α` then follows from requiring that `H` not leak `|D⟩` into
/// the bright partner `X`: `α = −⟨X|H|gg⟩ / ⟨X|H|Y⟩`. The result is checked
/// against both dark-state conditions before it is returned.
pub fn driven_dark_state(coeffs: &CoefficientSet, drive: &DriveSpec) -> Result<DarkStateReport, AnalysisError> {
    if coeffs.n_atoms() != 2 {
        return Err(AnalysisError::NotTwoAtoms(coeffs.n_atoms()));
    }
    let me = assemble_model(coeffs, Some(drive));
    let (s, t, gg) = (singlet(), triplet(), ground(2));
    let scale = coeffs.decay.iter().sum::<f64>().max(1e-300);
    let leak = |x: &StateVector| me.collapse_ops().iter().map(|l| (l * x).norm_squared()).sum::<f64>();
    let (dark, bright, class) = if leak(&s) <= DEFAULT_TOL * scale {
        (s, t, DarkClass::DrivenDS)
    } else if leak(&t) <= DEFAULT_TOL * scale {
        (t, s, DarkClass::DrivenDT)
    } else {
        return Err(AnalysisError::NoDrivenDarkState(
            "neither singlet nor triplet is annihilated by the collapse operators".into(),
        ));
    };
    let h = me.hamiltonian();
    let coupling = bright.dotc(&(h * &dark));
    let drive_term = bright.dotc(&(h * &gg));
    if coupling.norm() <= DEFAULT_TOL * h.norm().max(1.0) {
        return Err(AnalysisError::NoDrivenDarkState(
            "dark and bright states are uncoupled, so α diverges".into(),
        ));
    }
    let alpha = -drive_term / coupling;
    let v = (&dark * alpha + &gg).unscale((1.0 + alpha.norm_sqr()).sqrt());
    let report = report_for(&me, fix_phase(&v));
    let h_scale = h.norm().max(1e-300);
    if report.collapse_residual > DEFAULT_TOL * scale.sqrt().max(1.0) || report.eigen_residual > DEFAULT_TOL * h_scale {
        return Err(AnalysisError::NoDrivenDarkState(format!(
            "candidate is not stationary (eigen residual {:.3e})",
            report.eigen_residual
        )));
    }
    let mut report = report;
    report.class = class;
    report.alpha = Some(alpha);
    report.populating_rate = Some((coeffs.decay[0] + coeffs.decay[1]) / (1.0 + alpha.norm_sqr()));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::beta_for_rabi;
    use crate::coefficients::compute_coefficients;
    use crate::hilbert::{c, ket};
    use crate::topology::Layout;
    use std::f64::consts::PI;

    fn model(pattern: &str, gr: f64, gl: f64, phases: &[f64]) -> MasterEquation {
        let l = Layout::from_pattern(pattern, gr, gl, phases).validate().unwrap();
        assemble_model(&compute_coefficients(&l), None)
    }

    #[test]
    fn nested_chiral_singlet() {
        let search = find_dark_states(&model("abba", 0.2, 0.8, &[0.0, 2.0 * PI / 3.0, 0.0]), DEFAULT_TOL);
        let non: Vec<_> = search.nontrivial().collect();
        assert_eq!(non.len(), 1);
        assert_eq!(non[0].class, DarkClass::Singlet);
        assert!(non[0].collapse_residual < 1e-9 && non[0].eigen_residual < 1e-9);
        assert!(search.has_class(DarkClass::Trivial));
        assert!(!search.fully_decoupled);
    }

    #[test]
    fn unidirectional_small_atoms_have_no_dark_state() {
        let search = find_dark_states(&model("ab", 1.0, 0.0, &[0.3]), DEFAULT_TOL);
        assert_eq!(search.nontrivial().count(), 0);
        assert_eq!(search.states.len(), 1);
    }

    #[test]
    fn matryoshka_state() {
        let search = find_dark_states(&model("abccba", 0.5, 0.5, &[0.0; 5]), DEFAULT_TOL);
        let expect = (ket("egg").unwrap() + ket("geg").unwrap() - ket("gge").unwrap() * c(2.0, 0.0)).unscale(6f64.sqrt());
        assert!(search.states.iter().any(|r| fidelity(&r.state, &expect) > 1.0 - 1e-9));
        let hit = search.states.iter().find(|r| fidelity(&r.state, &expect) > 1.0 - 1e-9).unwrap();
        assert!((&hit.state - &expect).norm() < 1e-9);
    }

    #[test]
    fn enclosed_braided_state() {
        let search = find_dark_states(&model("ababa", 0.5, 0.5, &[0.0; 4]), DEFAULT_TOL);
        let expect = (ket("eg").unwrap() * c(2.0, 0.0) - ket("ge").unwrap() * c(3.0, 0.0)).unscale(13f64.sqrt());
        let non: Vec<_> = search.nontrivial().collect();
        assert_eq!(non.len(), 1);
        assert!((&non[0].state - &expect).norm() < 1e-9);
        assert_eq!(non[0].class, DarkClass::Other);
    }

    #[test]
    fn decoupled_layout_flags_everything_dark() {
        let search = find_dark_states(&model("aabb", 0.5, 0.5, &[PI, 0.3, PI]), DEFAULT_TOL);
        assert!(search.fully_decoupled);
        assert_eq!(search.kernel_dim, 4);
        assert_eq!(search.states.len(), 4);
    }

    #[test]
    fn small_driven_dark_state() {
        let (gr, gl, delta, omega) = (0.25, 0.75, 0.5, 1.0);
        let mut layout = Layout::from_pattern("ab", gr, gl, &[0.0]);
        layout.atoms[0].detuning = delta;
        layout.atoms[1].detuning = -delta;
        let k = compute_coefficients(&layout.validate().unwrap());
        let drive = beta_for_rabi(&k, 0, c(omega, 0.0)).unwrap();
        let r = driven_dark_state(&k, &drive).unwrap();
        assert_eq!(r.class, DarkClass::DrivenDS);
        let dg: f64 = gl - gr;
        let expect = 2.0 * (gr + gl) * (dg * dg + 4.0 * delta * delta) / (2.0 * omega * omega + dg * dg + 4.0 * delta * delta);
        assert!((r.populating_rate.unwrap() - expect).abs() < 1e-12);
        assert!((expect - 0.769_230_769_230_769_2).abs() < 1e-12);
        // The finder sees the same state.
        let search = find_dark_states(&assemble_model(&k, Some(&drive)), DEFAULT_TOL);
        assert!(search.states.iter().any(|s| fidelity(&s.state, &r.state) > 1.0 - 1e-12));
    }

    #[test]
    fn vanishing_drive_gives_ground_state() {
        let mut layout = Layout::from_pattern("ab", 0.25, 0.75, &[0.0]);
        layout.atoms[0].detuning = 0.5;
        layout.atoms[1].detuning = -0.5;
        let k = compute_coefficients(&layout.validate().unwrap());
        let r = driven_dark_state(&k, &DriveSpec::new(c(1e-9, 0.0))).unwrap();
        assert!(r.alpha.unwrap().norm() < 1e-8);
        assert!((r.populating_rate.unwrap() - k.decay[0] - k.decay[1]).abs() < 1e-12);
    }

    #[test]
    fn nested_needs_detuning() {
        let l = Layout::from_pattern("abba", 0.3, 0.7, &[0.0, 1.0, 0.0]).validate().unwrap();
        let k = compute_coefficients(&l);
        let drive = beta_for_rabi(&k, 0, c(1.0, 0.0)).unwrap();
        assert!(matches!(driven_dark_state(&k, &drive), Err(AnalysisError::NoDrivenDarkState(_))));
    }

    #[test]
    fn unequal_detunings_break_driven_state() {
        let mut layout = Layout::from_pattern("ab", 0.25, 0.75, &[0.0]);
        layout.atoms[0].detuning = 0.5;
        layout.atoms[1].detuning = -0.2;
        let k = compute_coefficients(&layout.validate().unwrap());
        let drive = beta_for_rabi(&k, 0, c(1.0, 0.0)).unwrap();
        assert!(matches!(driven_dark_state(&k, &drive), Err(AnalysisError::NoDrivenDarkState(_))));
    }
}

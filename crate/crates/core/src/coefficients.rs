//! Closed-form master-equation coefficients for any number of giant atoms.
//!
//! Every quantity is a double sum over pairs of connection points, weighted
//! by square roots of the directional rates and the phase accumulated
//! between the two points.

use nalgebra::DMatrix;

use crate::dynamics::MasterEquation;
use crate::hilbert::{c, embed_operator, sigma_minus, sigma_plus, sigma_z, ComplexMatrix, C64};
use crate::topology::{DriveSpec, ValidatedLayout};

/// Relative ordering of two connection points along the waveguide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsilonSign {
    Minus,
    Zero,
    Plus,
}

impl EpsilonSign {
    pub fn value(self) -> f64 {
        match self {
            EpsilonSign::Minus => -1.0,
            EpsilonSign::Zero => 0.0,
            EpsilonSign::Plus => 1.0,
        }
    }
}

/// `+1` if the first point lies to the left of the second, `0` if they
/// coincide, `−1` otherwise.
pub fn epsilon_sign(rank_a: i64, rank_b: i64) -> EpsilonSign {
    match rank_a.cmp(&rank_b) {
        std::cmp::Ordering::Less => EpsilonSign::Plus,
        std::cmp::Ordering::Equal => EpsilonSign::Zero,
        std::cmp::Ordering::Greater => EpsilonSign::Minus,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    /// Bare atomic frequencies `ω_j`.
    pub frequency: Vec<f64>,
    /// Detunings from a drive, used in the rotating frame.
    pub detuning: Vec<f64>,
    /// Lamb shifts `δω_j` from self-interference between an atom's own points.
    pub frequency_shift: Vec<f64>,
    /// Individual decay rates `Γ_j`.
    pub decay: Vec<f64>,
    /// Exchange couplings; `g[(j, k)]` multiplies `σ_−^j σ_+^k`. Only
    /// `j < k` enters the Hamiltonian; the lower triangle holds conjugates.
    pub exchange: DMatrix<C64>,
    /// Collective decay `Γ_coll,j,k = A_jR A_kR* + A_jL A_kL*`.
    pub collective_decay: DMatrix<C64>,
    /// Coefficient of `σ_−^j` in the right-moving collapse operator.
    pub amp_right: Vec<C64>,
    /// Coefficient of `σ_−^j` in the left-moving collapse operator.
    pub amp_left: Vec<C64>,
    /// Phase accumulated across the whole layout; the right-moving
    /// scattering coefficient is `e^{i·total_phase}`.
    pub total_phase: f64,
}

impl CoefficientSet {
    pub fn n_atoms(&self) -> usize {
        self.frequency.len()
    }

    /// `ω′_j = ω_j + δω_j`, or `δ_j + δω_j` in the frame of a drive.
    pub fn shifted_frequency(&self, rotating: bool) -> Vec<f64> {
        let base = if rotating { &self.detuning } else { &self.frequency };
        base.iter().zip(&self.frequency_shift).map(|(w, d)| w + d).collect()
    }

    pub fn g(&self, j: usize, k: usize) -> C64 {
        self.exchange[(j, k)]
    }

    pub fn gamma_coll(&self, j: usize, k: usize) -> C64 {
        self.collective_decay[(j, k)]
    }

    /// Rabi frequency `Ω_j = 2β e^{iΣφ} A_jR*` seen by atom `j`.
    pub fn rabi(&self, drive: &DriveSpec) -> Vec<C64> {
        let s_r = C64::from_polar(1.0, self.total_phase);
        self.amp_right.iter().map(|a| 2.0 * drive.beta * s_r * a.conj()).collect()
    }
}

pub fn compute_coefficients(layout: &ValidatedLayout) -> CoefficientSet {
    let n = layout.n_atoms();
    let pts = layout.points();
    let last = layout.n_points() - 1;
    let mut shift = vec![0.0; n];
    let mut exchange = DMatrix::<C64>::zeros(n, n);
    let mut amp_right = vec![C64::new(0.0, 0.0); n];
    let mut amp_left = vec![C64::new(0.0, 0.0); n];

    for (p, point) in pts.iter().enumerate() {
        let j = layout.owner(p);
        amp_right[j] += C64::from_polar(point.gamma_right.sqrt(), layout.phase_between(p, last));
        amp_left[j] += C64::from_polar(point.gamma_left.sqrt(), layout.phase_between(0, p));
    }

    for (p, a) in pts.iter().enumerate() {
        let j = layout.owner(p);
        for (q, b) in pts.iter().enumerate().skip(p + 1) {
            let k = layout.owner(q);
            let cr = (a.gamma_right * b.gamma_right).sqrt();
            let cl = (a.gamma_left * b.gamma_left).sqrt();
            let phi = layout.phase_between(p, q);
            if j == k {
                shift[j] += (cr + cl) * phi.sin();
                continue;
            }
            // Orient the pair so the first index is the lower atom.
            let (lo, hi, eps) = if j < k {
                (j, k, epsilon_sign(a.rank, b.rank).value())
            } else {
                (k, j, epsilon_sign(b.rank, a.rank).value())
            };
            let term = (C64::from_polar(cr, eps * phi) - C64::from_polar(cl, -eps * phi)) * eps / c(0.0, 2.0);
            exchange[(lo, hi)] += term;
        }
    }
    for j in 0..n {
        for k in 0..j {
            exchange[(j, k)] = exchange[(k, j)].conj();
        }
    }

    let collective_decay = DMatrix::from_fn(n, n, |j, k| {
        amp_right[j] * amp_right[k].conj() + amp_left[j] * amp_left[k].conj()
    });
    let decay = (0..n).map(|j| collective_decay[(j, j)].re).collect();

    CoefficientSet {
        frequency: layout.frame_frequencies(false),
        detuning: layout.frame_frequencies(true),
        frequency_shift: shift,
        decay,
        exchange,
        collective_decay,
        amp_right,
        amp_left,
        total_phase: layout.total_phase(),
    }
}

/// Hamiltonian and the two collapse operators `[𝕃_R, 𝕃_L]`. With a drive,
/// frequencies are taken relative to the drive.
pub fn assemble_model(coeffs: &CoefficientSet, drive: Option<&DriveSpec>) -> MasterEquation {
    let n = coeffs.n_atoms();
    let dim = 1usize << n;
    let lower: Vec<ComplexMatrix> = (0..n).map(|j| embed_operator(&sigma_minus(), j, n).unwrap()).collect();
    let raise: Vec<ComplexMatrix> = (0..n).map(|j| embed_operator(&sigma_plus(), j, n).unwrap()).collect();

    let mut h = ComplexMatrix::zeros(dim, dim);
    for (j, w) in coeffs.shifted_frequency(drive.is_some()).into_iter().enumerate() {
        h += embed_operator(&sigma_z(), j, n).unwrap() * c(w / 2.0, 0.0);
    }
    for j in 0..n {
        for k in j + 1..n {
            let term = &lower[j] * &raise[k] * coeffs.g(j, k);
            h += term.adjoint() + term;
        }
    }
    let mut l_r = ComplexMatrix::zeros(dim, dim);
    let mut l_l = ComplexMatrix::zeros(dim, dim);
    for j in 0..n {
        l_r += &lower[j] * coeffs.amp_right[j];
        l_l += &lower[j] * coeffs.amp_left[j];
    }
    if let Some(drive) = drive {
        for (j, omega) in coeffs.rabi(drive).into_iter().enumerate() {
            let term = &raise[j] * omega;
            h += (term.adjoint() - term) * c(0.0, 0.5);
        }
    }
    MasterEquation::new(h, vec![l_r, l_l]).expect("assembled operators are consistent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::traceless;
    use crate::slh::compose_layout;
    use crate::topology::{Atom, Layout};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon_sign(1, 3), EpsilonSign::Plus);
        assert_eq!(epsilon_sign(2, 2), EpsilonSign::Zero);
        assert_eq!(epsilon_sign(5, 4), EpsilonSign::Minus);
    }

    #[test]
    fn small_pair_chiral() {
        let l = Layout::from_pattern("ab", 0.7, 0.3, &[0.0]).validate().unwrap();
        let k = compute_coefficients(&l);
        assert!(close(k.gamma_coll(0, 1), c(1.0, 0.0)));
        assert!(close(k.g(0, 1), c(0.0, -0.2)));
        assert!((k.decay[0] - 1.0).abs() < 1e-12 && (k.decay[1] - 1.0).abs() < 1e-12);
        assert_eq!(k.frequency_shift, vec![0.0, 0.0]);
    }

    #[test]
    fn braided_decoherence_free() {
        let l = Layout::from_pattern("abab", 0.5, 0.5, &[FRAC_PI_2; 3]).validate().unwrap();
        let k = compute_coefficients(&l);
        assert!(k.decay[0].abs() < 1e-12 && k.decay[1].abs() < 1e-12);
        assert!(close(k.gamma_coll(0, 1), c(0.0, 0.0)));
        assert!(close(k.g(0, 1), c(1.0, 0.0)));
        assert!(k.frequency_shift.iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn uncoupled_layout_is_zero() {
        let l = Layout::from_pattern("abba", 0.0, 0.0, &[0.3, 1.1, 2.0]).validate().unwrap();
        let k = compute_coefficients(&l);
        assert!(k.exchange.norm() == 0.0 && k.collective_decay.norm() == 0.0);
        assert!(k.frequency_shift.iter().chain(&k.decay).all(|&x| x == 0.0));
    }

    #[test]
    fn separate_giant_atom_shift() {
        // Two points of one atom separated by φ: δω = (γR + γL) sin φ.
        let l = Layout::from_pattern("aabb", 0.4, 0.2, &[1.0, 0.5, 0.7]).validate().unwrap();
        let k = compute_coefficients(&l);
        assert!((k.frequency_shift[0] - 0.6 * 1.0f64.sin()).abs() < 1e-14);
        assert!((k.frequency_shift[1] - 0.6 * 0.7f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn nested_exchange_cancels_for_pi_phases() {
        // Inner atom sees the outer atom's two points with opposite ε.
        let l = Layout::from_pattern("abba", 0.5, 0.5, &[PI, 0.0, PI]).validate().unwrap();
        let k = compute_coefficients(&l);
        assert!(k.g(0, 1).norm() < 1e-12);
    }

    #[test]
    fn single_atom_model() {
        let mut layout = Layout::from_pattern("a", 0.6, 0.2, &[]);
        layout.atoms[0] = Atom::new("a", 1.3, 0.0);
        let k = compute_coefficients(&layout.validate().unwrap());
        let me = assemble_model(&k, None);
        let sz = embed_operator(&sigma_z(), 0, 1).unwrap();
        let sm = embed_operator(&sigma_minus(), 0, 1).unwrap();
        assert!((me.hamiltonian() - sz * c(0.65, 0.0)).norm() < 1e-15);
        assert!((&me.collapse_ops()[0] - &sm * c(0.6f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!((&me.collapse_ops()[1] - &sm * c(0.2f64.sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn driven_small_atom_rabi_term() {
        let beta = 0.3;
        let gamma: f64 = 0.8;
        let l = Layout::from_pattern("a", gamma, 0.0, &[]).validate().unwrap();
        let k = compute_coefficients(&l);
        let me = assemble_model(&k, Some(&DriveSpec::new(c(beta, 0.0))));
        let omega = 2.0 * beta * gamma.sqrt();
        let sp = embed_operator(&sigma_plus(), 0, 1).unwrap();
        let expect = (&sp - sp.adjoint()) * c(0.0, -omega / 2.0);
        assert!((me.hamiltonian() - expect).norm() < 1e-14);
    }

    #[test]
    fn two_atom_topologies_match_network_composition() {
        let phases = [0.37, 1.9, 4.1];
        for pattern in ["ab", "aabb", "abba", "abab"] {
            let mut layout = Layout::from_pattern(pattern, 0.0, 0.0, &phases[..pattern.len() - 1]);
            for (i, p) in layout.points.iter_mut().enumerate() {
                p.gamma_right = 0.1 + 0.2 * i as f64;
                p.gamma_left = 0.9 - 0.15 * i as f64;
            }
            layout.atoms[0].frequency = 0.4;
            layout.atoms[1].detuning = -0.3;
            let l = layout.validate().unwrap();
            let k = compute_coefficients(&l);
            for drive in [None, Some(DriveSpec::new(c(0.2, -0.1)))] {
                let me = assemble_model(&k, drive.as_ref());
                let slh = compose_layout(&l, drive.as_ref());
                let scale = 1.0 + slh.h.norm();
                assert!((traceless(me.hamiltonian()) - traceless(&slh.h)).norm() < 1e-10 * scale, "{pattern}");
                for (a, b) in me.collapse_ops().iter().zip(&slh.l) {
                    assert!((a - b).norm() < 1e-10 * (1.0 + b.norm()), "{pattern}");
                }
            }
        }
    }
}

//! SLH triplets for cascaded open systems: series product, concatenation,
//! and the assembly of a waveguide layout into `(S, L, H)`.
//!
//! This is the network-composition route to the master equation. It shares
//! no formulas with [`crate::coefficients`], which makes it usable as an
//! oracle for the closed-form coefficients.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::hilbert::{c, embed_operator, is_hermitian, sigma_minus, sigma_z, ComplexMatrix, C64};
use crate::topology::{DriveSpec, ValidatedLayout};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SlhError {
    #[error("port count mismatch: {0} vs {1}")]
    PortMismatch(usize, usize),
    #[error("Hilbert-space dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Right,
    Left,
}

/// `(S, L, H)`: scattering matrix over ports, one coupling operator per
/// port and the system Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct SlhTriplet {
    pub s: DMatrix<C64>,
    pub l: Vec<ComplexMatrix>,
    pub h: ComplexMatrix,
}

impl SlhTriplet {
    /// Zero-port triplet over a space of dimension `dim`.
    pub fn vacuum(dim: usize) -> Self {
        Self {
            s: DMatrix::zeros(0, 0),
            l: Vec::new(),
            h: ComplexMatrix::zeros(dim, dim),
        }
    }

    /// One-port identity `(1, 0, 0)`.
    pub fn identity(dim: usize) -> Self {
        Self::phase(0.0, dim)
    }

    /// One-port phase shifter `(e^{iφ}, 0, 0)`.
    pub fn phase(phi: f64, dim: usize) -> Self {
        Self {
            s: DMatrix::from_element(1, 1, C64::from_polar(1.0, phi)),
            l: vec![ComplexMatrix::zeros(dim, dim)],
            h: ComplexMatrix::zeros(dim, dim),
        }
    }

    /// One-port component `(1, L, H)`.
    pub fn component(l: ComplexMatrix, h: ComplexMatrix) -> Self {
        Self {
            s: DMatrix::from_element(1, 1, c(1.0, 0.0)),
            l: vec![l],
            h,
        }
    }

    pub fn ports(&self) -> usize {
        self.l.len()
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// Scattering matrix unitary and Hamiltonian Hermitian within `tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        let n = self.ports();
        let unitary = (self.s.adjoint() * &self.s - DMatrix::<C64>::identity(n, n)).norm() <= tol;
        unitary && is_hermitian(&self.h, tol)
    }
}

/// Series product `g2 ◁ g1`: the output of `g1` feeds `g2`.
pub fn series(g2: &SlhTriplet, g1: &SlhTriplet) -> Result<SlhTriplet, SlhError> {
    if g2.ports() != g1.ports() {
        return Err(SlhError::PortMismatch(g2.ports(), g1.ports()));
    }
    if g2.dim() != g1.dim() {
        return Err(SlhError::DimMismatch(g2.dim(), g1.dim()));
    }
    let n = g1.ports();
    let dim = g1.dim();
    let s = &g2.s * &g1.s;
    let mut l = Vec::with_capacity(n);
    // X = L2† S2 L1, so the coupling term is (X − X†)/(2i).
    let mut x = ComplexMatrix::zeros(dim, dim);
    for i in 0..n {
        let mut li = g2.l[i].clone();
        for j in 0..n {
            li += &g1.l[j] * g2.s[(i, j)];
        }
        l.push(li);
    }
    for i in 0..n {
        let l2_dag = g2.l[i].adjoint();
        for j in 0..n {
            x += &l2_dag * &g1.l[j] * g2.s[(i, j)];
        }
    }
    let coupling = (&x - x.adjoint()) / c(0.0, 2.0);
    let h = &g1.h + &g2.h + coupling;
    Ok(SlhTriplet { s, l, h })
}

/// Concatenation `g1 ⊞ g2`: independent channels side by side.
pub fn concat(g1: &SlhTriplet, g2: &SlhTriplet) -> Result<SlhTriplet, SlhError> {
    if g1.dim() != g2.dim() {
        return Err(SlhError::DimMismatch(g1.dim(), g2.dim()));
    }
    let (n1, n2) = (g1.ports(), g2.ports());
    let mut s = DMatrix::zeros(n1 + n2, n1 + n2);
    s.view_mut((0, 0), (n1, n1)).copy_from(&g1.s);
    s.view_mut((n1, n1), (n2, n2)).copy_from(&g2.s);
    let l = g1.l.iter().chain(g2.l.iter()).cloned().collect();
    Ok(SlhTriplet {
        s,
        l,
        h: &g1.h + &g2.h,
    })
}

/// Cascade over all points in one propagation direction, in the lab frame
/// (bare atomic frequencies).
pub fn compose_direction(layout: &ValidatedLayout, direction: Direction) -> SlhTriplet {
    let freqs = layout.frame_frequencies(false);
    cascade(layout, direction, Some(&freqs))
}

/// The full two-port triplet: right- and left-propagating cascades,
/// concatenated, with an optional coherent drive from the left.
///
/// The drive enters only the Hamiltonian,
/// `H_d = −i(β S_R L_R† − β* S_R* L_R)`; the atoms are then described in
/// the frame rotating at the drive frequency.
pub fn compose_layout(layout: &ValidatedLayout, drive: Option<&DriveSpec>) -> SlhTriplet {
    let freqs = layout.frame_frequencies(drive.is_some());
    let right = cascade(layout, Direction::Right, Some(&freqs));
    // Bare terms go in once; the left cascade carries only the couplings.
    let left = cascade(layout, Direction::Left, None);
    let mut total = concat(&right, &left).expect("same dimension");
    if let Some(drive) = drive {
        let s_r = total.s[(0, 0)];
        let l_r = &total.l[0];
        let term = l_r.adjoint() * (drive.beta * s_r) - l_r * (drive.beta * s_r).conj();
        total.h += term * c(0.0, -1.0);
    }
    total
}

fn cascade(layout: &ValidatedLayout, direction: Direction, bare: Option<&[f64]>) -> SlhTriplet {
    let n = layout.n_atoms();
    let dim = 1usize << n;
    let lowering: Vec<ComplexMatrix> = (0..n)
        .map(|j| embed_operator(&sigma_minus(), j, n).expect("validated atom count"))
        .collect();
    let point_triplet = |k: usize| {
        let p = &layout.points()[k];
        let j = layout.owner(k);
        let rate = match direction {
            Direction::Right => p.gamma_right,
            Direction::Left => p.gamma_left,
        };
        let l = &lowering[j] * c(rate.sqrt(), 0.0);
        let h = match bare {
            Some(freqs) if layout.first_point_of(j) == k => {
                embed_operator(&sigma_z(), j, n).expect("validated atom count") * c(freqs[j] / 2.0, 0.0)
            }
            _ => ComplexMatrix::zeros(dim, dim),
        };
        SlhTriplet::component(l, h)
    };
    let p = layout.n_points();
    let order: Vec<usize> = match direction {
        Direction::Right => (0..p).collect(),
        Direction::Left => (0..p).rev().collect(),
    };
    let mut acc = point_triplet(order[0]);
    for w in order.windows(2) {
        let (prev, next) = (w[0], w[1]);
        let phi = layout.phases()[prev.min(next)];
        acc = series(&SlhTriplet::phase(phi, dim), &acc).expect("one-port cascade");
        acc = series(&point_triplet(next), &acc).expect("one-port cascade");
    }
    acc
}

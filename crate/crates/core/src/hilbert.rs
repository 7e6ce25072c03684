//! Dense complex linear algebra over the `2^N` multi-qubit space.
//!
//! Per-atom basis ordering is `|e⟩ = 0`, `|g⟩ = 1`, with atom 0 as the
//! leftmost tensor factor. A canonical ket index therefore has its most
//! significant bit on atom 0, and a set bit means that atom is in `|g⟩`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type StateVector = DVector<C64>;

/// Largest supported number of atoms (dimension 1024).
pub const MAX_ATOMS: usize = 10;

/// Relative Hermiticity tolerance accepted by [`eigh`].
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HilbertError {
    #[error("site {site} out of range for {n_atoms} atoms")]
    SiteOutOfRange { site: usize, n_atoms: usize },
    #[error("{0} atoms exceeds the dense limit of {MAX_ATOMS}")]
    TooManyAtoms(usize),
    #[error("local operator must be 2x2, got {0}x{1}")]
    NotLocal(usize, usize),
    #[error("matrix is not Hermitian (relative deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("invalid ket label {0:?}")]
    BadKet(String),
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity2() -> ComplexMatrix {
    ComplexMatrix::identity(2, 2)
}

/// `σ_- = |g⟩⟨e|`.
pub fn sigma_minus() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2, 2);
    m[(1, 0)] = c(1.0, 0.0);
    m
}

/// `σ_+ = |e⟩⟨g|`.
pub fn sigma_plus() -> ComplexMatrix {
    sigma_minus().adjoint()
}

/// `σ_z = |e⟩⟨e| − |g⟩⟨g|`.
pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)]))
}

pub fn sigma_x() -> ComplexMatrix {
    sigma_minus() + sigma_plus()
}

pub fn dim_for(n_atoms: usize) -> usize {
    1usize << n_atoms
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Places `local_op` on `site` with identities on every other atom.
pub fn embed_operator(
    local_op: &ComplexMatrix,
    site: usize,
    n_atoms: usize,
) -> Result<ComplexMatrix, HilbertError> {
    if local_op.nrows() != 2 || local_op.ncols() != 2 {
        return Err(HilbertError::NotLocal(local_op.nrows(), local_op.ncols()));
    }
    if n_atoms > MAX_ATOMS {
        return Err(HilbertError::TooManyAtoms(n_atoms));
    }
    if site >= n_atoms {
        return Err(HilbertError::SiteOutOfRange { site, n_atoms });
    }
    let left = ComplexMatrix::identity(dim_for(site), dim_for(site));
    let right_n = n_atoms - site - 1;
    let right = ComplexMatrix::identity(dim_for(right_n), dim_for(right_n));
    Ok(kron(&kron(&left, local_op), &right))
}

/// Number of excited atoms in canonical ket `index`.
pub fn excitation_number(index: usize, n_atoms: usize) -> usize {
    n_atoms - (index & (dim_for(n_atoms) - 1)).count_ones() as usize
}

/// Canonical ket from a label such as `"egg"` (one letter per atom).
pub fn ket(label: &str) -> Result<StateVector, HilbertError> {
    let n = label.len();
    if n == 0 || n > MAX_ATOMS {
        return Err(HilbertError::BadKet(label.to_string()));
    }
    let mut index = 0usize;
    for ch in label.chars() {
        index <<= 1;
        match ch {
            'e' => {}
            'g' => index |= 1,
            _ => return Err(HilbertError::BadKet(label.to_string())),
        }
    }
    Ok(basis_vector(dim_for(n), index))
}

/// Label of canonical ket `index`, e.g. `3 -> "egg"` for three atoms.
pub fn ket_label(index: usize, n_atoms: usize) -> String {
    (0..n_atoms)
        .map(|site| {
            if index >> (n_atoms - 1 - site) & 1 == 1 {
                'g'
            } else {
                'e'
            }
        })
        .collect()
}

pub fn basis_vector(dim: usize, index: usize) -> StateVector {
    let mut v = StateVector::zeros(dim);
    v[index] = c(1.0, 0.0);
    v
}

/// Returns `v / ‖v‖`; zero vectors are returned unchanged.
pub fn normalize(v: &StateVector) -> StateVector {
    let n = v.norm();
    if n == 0.0 {
        v.clone()
    } else {
        v.unscale(n)
    }
}

/// Rotates the global phase so the first amplitude with modulus above
/// `1e-8` is real and positive.
pub fn fix_phase(v: &StateVector) -> StateVector {
    match v.iter().find(|z| z.norm() > 1e-8) {
        Some(z) => {
            let phase = z.conj() / z.norm();
            v * phase
        }
        None => v.clone(),
    }
}

/// `|⟨a|b⟩|²` for normalized inputs.
pub fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
    a.dotc(b).norm_sqr()
}

/// Projector `|v⟩⟨v|`.
pub fn projector(v: &StateVector) -> ComplexMatrix {
    v * v.adjoint()
}

pub fn expectation(op: &ComplexMatrix, rho: &ComplexMatrix) -> C64 {
    (op * rho).trace()
}

pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn is_hermitian(m: &ComplexMatrix, rel_tol: f64) -> bool {
    hermitian_deviation(m) <= rel_tol * m.norm().max(f64::MIN_POSITIVE)
}

/// `m − tr(m)/d · I`; removes an energy offset before comparing Hamiltonians.
pub fn traceless(m: &ComplexMatrix) -> ComplexMatrix {
    let d = m.nrows();
    if d == 0 {
        return m.clone();
    }
    let shift = m.trace() / d as f64;
    m - ComplexMatrix::identity(d, d) * shift
}

/// Orthonormal basis of the numerical kernel of `m`.
///
/// Singular values `s ≤ tol·s_max` span the kernel. Wide matrices are padded
/// with zero rows so every right-singular vector is available.
pub fn null_space(m: &ComplexMatrix, tol: f64) -> Vec<StateVector> {
    let s_max = m.norm();
    if s_max == 0.0 {
        return (0..m.ncols()).map(|i| basis_vector(m.ncols(), i)).collect();
    }
    let (vals, vecs) = singular_pairs(m);
    let largest = vals.iter().cloned().fold(0.0, f64::max);
    vals.into_iter().zip(vecs).filter(|(s, _)| *s <= tol * largest).map(|(_, v)| v).collect()
}

/// Right-singular vectors whose singular value is at most `threshold`.
pub fn null_space_below(m: &ComplexMatrix, threshold: f64) -> Vec<StateVector> {
    let (vals, vecs) = singular_pairs(m);
    vals.into_iter().zip(vecs).filter(|(s, _)| *s <= threshold).map(|(_, v)| v).collect()
}

// All `cols` right-singular pairs; wide inputs get implicit zero singular values.
fn singular_pairs(m: &ComplexMatrix) -> (Vec<f64>, Vec<StateVector>) {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return (Vec::new(), Vec::new());
    }
    let work = if rows < cols {
        let mut padded = ComplexMatrix::zeros(cols, cols);
        padded.view_mut((0, 0), (rows, cols)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = work.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let vals = svd.singular_values.iter().cloned().collect();
    let vecs = (0..cols).map(|i| v_t.row(i).adjoint()).collect();
    (vals, vecs)
}

/// Hermitian eigendecomposition with eigenvalues in ascending order.
///
/// Eigenvectors are the columns of the returned matrix.
pub fn eigh(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix), HilbertError> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(HilbertError::NotSquare(rows, cols));
    }
    let scale = m.norm();
    let dev = hermitian_deviation(m);
    if dev > HERMITIAN_TOL * scale {
        return Err(HilbertError::NotHermitian(dev / scale));
    }
    if rows == 0 {
        return Ok((Vec::new(), m.clone()));
    }
    let sym = (m + m.adjoint()).unscale(2.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = ComplexMatrix::zeros(rows, rows);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Singlet `(|ge⟩ − |eg⟩)/√2`.
pub fn singlet() -> StateVector {
    (ket("ge").unwrap() - ket("eg").unwrap()).unscale(2f64.sqrt())
}

/// Triplet `(|ge⟩ + |eg⟩)/√2`.
pub fn triplet() -> StateVector {
    (ket("ge").unwrap() + ket("eg").unwrap()).unscale(2f64.sqrt())
}

/// Ground state `|g…g⟩`.
pub fn ground(n_atoms: usize) -> StateVector {
    let dim = dim_for(n_atoms);
    basis_vector(dim, dim - 1)
}

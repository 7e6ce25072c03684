//! Lindblad master equation: right-hand side, adaptive Dormand–Prince
//! integration and the Liouvillian steady state.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::hilbert::{c, eigh, is_hermitian, ket_label, kron, null_space, ComplexMatrix, HERMITIAN_TOL};
use crate::slh::SlhTriplet;

pub type DensityMatrix = ComplexMatrix;

/// Largest atom count for which the Liouvillian is materialized.
pub const STEADY_STATE_MAX_ATOMS: usize = 6;
pub const TRACE_TOL: f64 = 1e-8;
pub const POSITIVITY_TOL: f64 = 1e-8;
pub const PURITY_TOL: f64 = 1e-10;
/// Relative singular-value threshold for the Liouvillian kernel.
pub const KERNEL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Hamiltonian is not Hermitian")]
    NotHermitian,
    #[error("invalid solver input: {0}")]
    InvalidInput(String),
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("{what} violated at t = {t}: {value:e}")]
    InvariantViolated { what: &'static str, t: f64, value: f64 },
    #[error("steady state is degenerate: kernel dimension {dim}")]
    DegenerateSteadyState { dim: usize, basis: Vec<DensityMatrix> },
    #[error("steady-state solver is limited to {max} atoms, got {got}")]
    TooLarge { max: usize, got: usize },
}

/// Hamiltonian plus collapse operators.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterEquation {
    hamiltonian: ComplexMatrix,
    collapse_ops: Vec<ComplexMatrix>,
    // H − (i/2) Σ L†L, so the RHS is −i(H_eff ρ − ρ H_eff†) + Σ L ρ L†.
    h_eff: ComplexMatrix,
}

impl MasterEquation {
    pub fn new(hamiltonian: ComplexMatrix, collapse_ops: Vec<ComplexMatrix>) -> Result<Self, DynamicsError> {
        let d = hamiltonian.nrows();
        if hamiltonian.ncols() != d {
            return Err(DynamicsError::DimensionMismatch { expected: d, got: hamiltonian.ncols() });
        }
        for l in &collapse_ops {
            if l.shape() != (d, d) {
                return Err(DynamicsError::DimensionMismatch { expected: d, got: l.nrows() });
            }
        }
        if !is_hermitian(&hamiltonian, HERMITIAN_TOL) {
            return Err(DynamicsError::NotHermitian);
        }
        let mut h_eff = hamiltonian.clone();
        for l in &collapse_ops {
            h_eff -= l.adjoint() * l * c(0.0, 0.5);
        }
        Ok(Self { hamiltonian, collapse_ops, h_eff })
    }

    /// Takes `H` and the port coupling operators of a network triplet.
    pub fn from_slh(triplet: &SlhTriplet) -> Result<Self, DynamicsError> {
        Self::new(triplet.h.clone(), triplet.l.clone())
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn collapse_ops(&self) -> &[ComplexMatrix] {
        &self.collapse_ops
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn n_atoms(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    /// Matrix of `ρ ↦ dρ/dt` acting on column-stacked `vec(ρ)`.
    pub fn liouvillian(&self) -> ComplexMatrix {
        let d = self.dim();
        let id = ComplexMatrix::identity(d, d);
        let mut out = (kron(&id, &self.hamiltonian) - kron(&self.hamiltonian.transpose(), &id)) * c(0.0, -1.0);
        for l in &self.collapse_ops {
            let ldl = l.adjoint() * l;
            out += kron(&l.conjugate(), l);
            out -= (kron(&id, &ldl) + kron(&ldl.transpose(), &id)) * c(0.5, 0.0);
        }
        out
    }

    fn rhs_unchecked(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let a = &self.h_eff * rho;
        let mut out = (&a - a.adjoint()) * c(0.0, -1.0);
        for l in &self.collapse_ops {
            out += l * rho * l.adjoint();
        }
        out
    }
}

pub fn lindblad_rhs(me: &MasterEquation, rho: &DensityMatrix) -> Result<ComplexMatrix, DynamicsError> {
    if rho.shape() != (me.dim(), me.dim()) {
        return Err(DynamicsError::DimensionMismatch { expected: me.dim(), got: rho.nrows() });
    }
    // The Hermitian form above assumes ρ = ρ†.
    let herm = (rho + rho.adjoint()).unscale(2.0);
    Ok(me.rhs_unchecked(&herm))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12 }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Basis-state populations keyed by ket label (`"eg"`, …) plus `"purity"`.
    pub observables: BTreeMap<String, Vec<f64>>,
    /// Sum of the accepted local error estimates (max-norm); a bound on
    /// the global error for contractive dynamics.
    pub error_estimate: f64,
    pub steps: usize,
    pub rejected: usize,
}

impl Trajectory {
    pub fn population(&self, label: &str) -> Option<&[f64]> {
        self.observables.get(label).map(|v| v.as_slice())
    }
}

// Dormand–Prince 5(4) tableau. The system is autonomous, so the nodes
// c_i are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order weights are the last row of A; E = b5 − b4.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// `n` evenly spaced times from `0` to `t_final`, both ends included
/// exactly.
pub fn uniform_times(t_final: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t_final],
        _ => (0..n)
            .map(|i| if i + 1 == n { t_final } else { t_final * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Integrates from `t = 0` to `t_final`, recording the state at each of
/// `sample_times` (ascending, within `[0, t_final]`).
pub fn evolve(
    me: &MasterEquation,
    rho0: &DensityMatrix,
    t_final: f64,
    opts: &SolverOptions,
    sample_times: &[f64],
) -> Result<Trajectory, DynamicsError> {
    let d = me.dim();
    if rho0.shape() != (d, d) {
        return Err(DynamicsError::DimensionMismatch { expected: d, got: rho0.nrows() });
    }
    if !(opts.rel_tol > 0.0 && opts.abs_tol > 0.0) {
        return Err(DynamicsError::InvalidInput("tolerances must be positive".into()));
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(DynamicsError::InvalidInput("t_final must be positive".into()));
    }
    if sample_times.windows(2).any(|w| w[1] < w[0])
        || sample_times.iter().any(|&t| !(0.0..=t_final).contains(&t))
    {
        return Err(DynamicsError::InvalidInput("sample times must ascend within [0, t_final]".into()));
    }

    let n_atoms = me.n_atoms();
    let labels: Vec<String> = (0..d).map(|i| ket_label(i, n_atoms)).collect();
    let mut traj = Trajectory {
        times: Vec::with_capacity(sample_times.len()),
        states: Vec::with_capacity(sample_times.len()),
        observables: BTreeMap::new(),
        error_estimate: 0.0,
        steps: 0,
        rejected: 0,
    };
    let record = |t: f64, rho: &ComplexMatrix, traj: &mut Trajectory| -> Result<(), DynamicsError> {
        let herm = (rho + rho.adjoint()).unscale(2.0);
        check_state(&herm, t)?;
        for (i, label) in labels.iter().enumerate() {
            traj.observables.entry(label.clone()).or_default().push(herm[(i, i)].re);
        }
        let purity = (&herm * &herm).trace().re;
        traj.observables.entry("purity".into()).or_default().push(purity);
        traj.times.push(t);
        traj.states.push(herm);
        Ok(())
    };

    let mut rho = (rho0 + rho0.adjoint()).unscale(2.0);
    let mut t = 0.0;
    let mut next_sample = 0;
    while next_sample < sample_times.len() && sample_times[next_sample] <= 0.0 {
        record(0.0, &rho, &mut traj)?;
        next_sample += 1;
    }

    let mut k1 = me.rhs_unchecked(&rho);
    let mut h = initial_step(&rho, &k1, opts, t_final);
    let mut stages: Vec<ComplexMatrix> = Vec::with_capacity(7);
    while t < t_final {
        // Land exactly on the next sample time or on t_final.
        let target = sample_times.get(next_sample).copied().unwrap_or(t_final).min(t_final);
        let mut step = h.min(target - t);
        let hit = step >= target - t;
        if step <= 1e-14 * t.abs().max(1.0) && !hit {
            return Err(DynamicsError::StepSizeUnderflow { t, h: step });
        }
        if hit {
            step = target - t;
        }

        stages.clear();
        stages.push(k1.clone());
        for s in 1..7 {
            let mut y = rho.clone();
            for (j, kj) in stages.iter().enumerate() {
                if A[s][j] != 0.0 {
                    y += kj * c(step * A[s][j], 0.0);
                }
            }
            stages.push(me.rhs_unchecked(&y));
        }
        let mut y_new = rho.clone();
        for (j, kj) in stages.iter().take(6).enumerate() {
            if A[6][j] != 0.0 {
                y_new += kj * c(step * A[6][j], 0.0);
            }
        }
        let mut err_vec = ComplexMatrix::zeros(d, d);
        for (j, kj) in stages.iter().enumerate() {
            if E[j] != 0.0 {
                err_vec += kj * c(step * E[j], 0.0);
            }
        }
        let mut err = 0.0f64;
        let mut err_abs = 0.0f64;
        for ((e, y0), y1) in err_vec.iter().zip(rho.iter()).zip(y_new.iter()) {
            let scale = opts.abs_tol + opts.rel_tol * y0.norm().max(y1.norm());
            err = err.max(e.norm() / scale);
            err_abs = err_abs.max(e.norm());
        }
        if !err.is_finite() {
            return Err(DynamicsError::StepSizeUnderflow { t, h: step });
        }

        if err <= 1.0 {
            t = if hit { target } else { t + step };
            rho = y_new;
            // FSAL: the last stage is the derivative at the new point.
            k1 = stages[6].clone();
            traj.steps += 1;
            traj.error_estimate += err_abs;
            if hit && next_sample < sample_times.len() {
                while next_sample < sample_times.len() && sample_times[next_sample] <= t {
                    record(t, &rho, &mut traj)?;
                    next_sample += 1;
                }
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            // A step shortened to hit a sample says nothing about the scale.
            h = if hit { h.max(step * factor) } else { step * factor };
        } else {
            traj.rejected += 1;
            h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err(DynamicsError::StepSizeUnderflow { t, h });
            }
        }
    }
    Ok(traj)
}

fn initial_step(rho: &ComplexMatrix, f0: &ComplexMatrix, opts: &SolverOptions, t_final: f64) -> f64 {
    let scaled = |m: &ComplexMatrix| {
        m.iter()
            .zip(rho.iter())
            .map(|(x, y)| x.norm() / (opts.abs_tol + opts.rel_tol * y.norm()))
            .fold(0.0, f64::max)
    };
    let d0 = scaled(rho);
    let d1 = scaled(f0);
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(t_final).min(0.1)
}

/// Trace, positivity and purity checks on a Hermitian state.
pub fn check_state(rho: &DensityMatrix, t: f64) -> Result<(), DynamicsError> {
    let tr = rho.trace();
    let drift = (tr - c(1.0, 0.0)).norm();
    if drift > TRACE_TOL {
        return Err(DynamicsError::InvariantViolated { what: "trace", t, value: drift });
    }
    let (vals, _) = eigh(rho).map_err(|_| DynamicsError::NotHermitian)?;
    let min = vals.first().copied().unwrap_or(0.0);
    if min < -POSITIVITY_TOL {
        return Err(DynamicsError::InvariantViolated { what: "positivity", t, value: min });
    }
    let purity = (rho * rho).trace().re;
    if purity > 1.0 + PURITY_TOL {
        return Err(DynamicsError::InvariantViolated { what: "purity", t, value: purity });
    }
    Ok(())
}

/// Unique stationary state, from the kernel of the materialized Liouvillian.
pub fn steady_state(me: &MasterEquation) -> Result<DensityMatrix, DynamicsError> {
    let n = me.n_atoms();
    if n > STEADY_STATE_MAX_ATOMS {
        return Err(DynamicsError::TooLarge { max: STEADY_STATE_MAX_ATOMS, got: n });
    }
    let d = me.dim();
    let kernel = null_space(&me.liouvillian(), KERNEL_TOL);
    let to_matrix = |v: &crate::hilbert::StateVector| ComplexMatrix::from_column_slice(d, d, v.as_slice());
    match kernel.len() {
        1 => {
            let rho = to_matrix(&kernel[0]);
            let rho = &rho / rho.trace();
            Ok((&rho + rho.adjoint()).unscale(2.0))
        }
        0 => Err(DynamicsError::InvalidInput("Liouvillian has no kernel".into())),
        dim => Err(DynamicsError::DegenerateSteadyState {
            dim,
            basis: kernel.iter().map(to_matrix).collect(),
        }),
    }
}

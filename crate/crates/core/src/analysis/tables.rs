//! Two-atom reference formulas, transcribed row by row, and the checks that
//! hold the numerical engine against them.
//!
//! All rows assume the same rates `γ_R`, `γ_L` at every connection point.
//! Layouts are `"ab"`, `"aabb"`, `"abba"` and `"abab"` with phases
//! `φ` or `(φ1, φ2, φ3)`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coefficients::{assemble_model, compute_coefficients, CoefficientSet};
use crate::hilbert::{c, C64};
use crate::topology::{Layout, TopologyClass, ValidatedLayout};

use super::{beta_for_rabi, driven_dark_state, find_dark_states, DarkClass, DEFAULT_TOL};

pub const TOPOLOGIES: [TopologyClass; 4] = [
    TopologyClass::SmallPair,
    TopologyClass::Separate,
    TopologyClass::Nested,
    TopologyClass::Braided,
];

/// Which member of `{S, T}` is dark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DarkKind {
    Singlet,
    Triplet,
}

pub fn pattern(topology: TopologyClass) -> &'static str {
    match topology {
        TopologyClass::SmallPair => "ab",
        TopologyClass::Separate => "aabb",
        TopologyClass::Nested => "abba",
        TopologyClass::Braided => "abab",
    }
}

/// Two-atom layout with uniform rates; `phases` has one entry for small
/// atoms and three otherwise.
pub fn two_atom_layout(topology: TopologyClass, gamma_right: f64, gamma_left: f64, phases: &[f64]) -> Layout {
    Layout::from_pattern(pattern(topology), gamma_right, gamma_left, phases)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientRow {
    pub shift: [f64; 2],
    pub decay: [f64; 2],
    pub coll: C64,
    pub g: C64,
}

fn e(x: f64) -> C64 {
    C64::from_polar(1.0, x)
}

/// Frequency shifts, decay rates, collective decay and exchange for two
/// atoms with uniform rates.
pub fn coefficient_row(topology: TopologyClass, gr: f64, gl: f64, phases: &[f64]) -> CoefficientRow {
    let s = gr + gl;
    let two_i = c(0.0, 2.0);
    match topology {
        TopologyClass::SmallPair => {
            let p = phases[0];
            CoefficientRow {
                shift: [0.0, 0.0],
                decay: [s, s],
                coll: gr * e(p) + gl * e(-p),
                g: (gr * e(p) - gl * e(-p)) / two_i,
            }
        }
        TopologyClass::Separate => {
            let (p1, p2, p3) = (phases[0], phases[1], phases[2]);
            let right = e(p1 + p2) + e(p1 + p2 + p3) + e(p2) + e(p2 + p3);
            let left = e(-(p1 + p2)) + e(-(p1 + p2 + p3)) + e(-p2) + e(-(p2 + p3));
            CoefficientRow {
                shift: [s * p1.sin(), s * p3.sin()],
                decay: [2.0 * s * (1.0 + p1.cos()), 2.0 * s * (1.0 + p3.cos())],
                coll: gr * right + gl * left,
                g: (gr * right - gl * left) / two_i,
            }
        }
        TopologyClass::Nested => {
            let (p1, p2, p3) = (phases[0], phases[1], phases[2]);
            let coll_r = e(p1) + e(p1 + p2) + e(-(p2 + p3)) + e(-p3);
            let coll_l = e(-p1) + e(-(p1 + p2)) + e(p2 + p3) + e(p3);
            let g_r = e(p1) + e(p1 + p2) - e(-(p2 + p3)) - e(-p3);
            let g_l = e(-p1) + e(-(p1 + p2)) - e(p2 + p3) - e(p3);
            CoefficientRow {
                shift: [s * (p1 + p2 + p3).sin(), s * p2.sin()],
                decay: [2.0 * s * (1.0 + (p1 + p2 + p3).cos()), 2.0 * s * (1.0 + p2.cos())],
                coll: gr * coll_r + gl * coll_l,
                g: (gr * g_r - gl * g_l) / two_i,
            }
        }
        TopologyClass::Braided => {
            let (p1, p2, p3) = (phases[0], phases[1], phases[2]);
            let coll_r = e(p1) + e(p1 + p2 + p3) + e(-p2) + e(p3);
            let coll_l = e(-p1) + e(-(p1 + p2 + p3)) + e(p2) + e(-p3);
            let g_r = e(p1) + e(p1 + p2 + p3) - e(-p2) + e(p3);
            let g_l = e(-p1) + e(-(p1 + p2 + p3)) - e(p2) + e(-p3);
            CoefficientRow {
                shift: [s * (p1 + p2).sin(), s * (p2 + p3).sin()],
                decay: [2.0 * s * (1.0 + (p1 + p2).cos()), 2.0 * s * (1.0 + (p2 + p3).cos())],
                coll: gr * coll_r + gl * coll_l,
                g: (gr * g_r - gl * g_l) / two_i,
            }
        }
    }
}

/// Largest absolute difference between the engine and [`coefficient_row`].
pub fn coefficient_row_deviation(row: &CoefficientRow, k: &CoefficientSet) -> f64 {
    let mut dev = (row.coll - k.gamma_coll(0, 1)).norm().max((row.g - k.g(0, 1)).norm());
    for j in 0..2 {
        dev = dev.max((row.shift[j] - k.frequency_shift[j]).abs());
        dev = dev.max((row.decay[j] - k.decay[j]).abs());
    }
    dev
}

/// Equality of angles modulo 2π.
pub fn same_angle(a: f64, b: f64) -> bool {
    let r = (a - b).rem_euclid(TAU);
    r.min(TAU - r) < 1e-9
}

/// Undriven nontrivial dark state predicted for two atoms with equal
/// frequencies (`None` for unequal frequencies).
pub fn undriven_dark_condition(
    topology: TopologyClass,
    gr: f64,
    gl: f64,
    phases: &[f64],
    equal_frequencies: bool,
) -> Option<DarkKind> {
    if !equal_frequencies {
        return None;
    }
    let bidirectional = (gr - gl).abs() < 1e-12;
    match topology {
        TopologyClass::SmallPair => {
            let p = phases[0];
            match () {
                _ if bidirectional && same_angle(p, 0.0) => Some(DarkKind::Singlet),
                _ if bidirectional && same_angle(p, PI) => Some(DarkKind::Triplet),
                _ => None,
            }
        }
        TopologyClass::Separate => {
            let (p1, p2, p3) = (phases[0], phases[1], phases[2]);
            if !bidirectional || !same_angle(p1, p3) || same_angle(p1, PI) {
                return None;
            }
            if same_angle(p1, -p2) {
                Some(DarkKind::Singlet)
            } else if same_angle(p1 + p2, PI) {
                Some(DarkKind::Triplet)
            } else {
                None
            }
        }
        TopologyClass::Nested => {
            let (p1, p2, p3) = (phases[0], phases[1], phases[2]);
            if same_angle(p2, PI) {
                None
            } else if same_angle(p1, 0.0) && same_angle(p3, 0.0) {
                Some(DarkKind::Singlet)
            } else if same_angle(p1, PI) && same_angle(p3, PI) {
                Some(DarkKind::Triplet)
            } else {
                None
            }
        }
        TopologyClass::Braided => {
            let (p1, p2, p3) = (phases[0], phases[1], phases[2]);
            if !bidirectional {
                None
            } else if same_angle(p1, 0.0) && same_angle(p3, 0.0) && !same_angle(p2, PI) {
                Some(DarkKind::Singlet)
            } else if same_angle(p1, PI) && same_angle(p3, PI) && !same_angle(p2, 0.0) {
                Some(DarkKind::Triplet)
            } else {
                None
            }
        }
    }
}

/// Phases under which the driven dark state `|D_S⟩` or `|D_T⟩` exists.
/// `phi2` is free for nested and braided atoms.
///
/// For separate atoms `|D_S⟩` needs `(0, 0, 0)`; `(0, π, 0)` gives `|D_T⟩`.
pub fn driven_phases(topology: TopologyClass, kind: DarkKind, phi2: f64) -> Vec<f64> {
    match (topology, kind) {
        (TopologyClass::SmallPair, DarkKind::Singlet) => vec![0.0],
        (TopologyClass::SmallPair, DarkKind::Triplet) => vec![PI],
        (TopologyClass::Separate, DarkKind::Singlet) => vec![0.0, 0.0, 0.0],
        (TopologyClass::Separate, DarkKind::Triplet) => vec![0.0, PI, 0.0],
        (_, DarkKind::Singlet) => vec![0.0, phi2, 0.0],
        (_, DarkKind::Triplet) => vec![PI, phi2, PI],
    }
}

/// `α(Ω)` for the driven dark state, with `Δγ = γ_L − γ_R` and `δ = δ_a`.
///
/// The drive couples `|gg⟩` to `|S⟩` with the opposite sign to `|T⟩`, so
/// `α` for `|D_S⟩` is the negative of the common closed form
/// `i√2Ω/(2ξ)`.
pub fn alpha_of_omega(topology: TopologyClass, kind: DarkKind, gr: f64, gl: f64, delta: f64, omega: f64) -> C64 {
    let dg = gl - gr;
    let num = C64::from(2f64.sqrt() * omega);
    let den = match topology {
        TopologyClass::SmallPair => c(dg, -2.0 * delta),
        TopologyClass::Separate => c(4.0 * dg, -2.0 * delta),
        TopologyClass::Nested => c(0.0, -2.0 * delta),
        TopologyClass::Braided => c(2.0 * dg, -2.0 * delta),
    };
    match kind {
        DarkKind::Singlet => -num / den,
        DarkKind::Triplet => num / den,
    }
}

/// `Γ_D(Ω)`, the populating rate at fixed Rabi frequency `Ω = Ω_a`.
pub fn populating_rate_omega(
    topology: TopologyClass,
    kind: DarkKind,
    gr: f64,
    gl: f64,
    delta: f64,
    omega: f64,
    phi2: f64,
) -> f64 {
    let (s, dg2, d2, o2) = (gr + gl, (gl - gr).powi(2), delta * delta, omega * omega);
    let pm = if kind == DarkKind::Singlet { 1.0 } else { -1.0 };
    match topology {
        TopologyClass::SmallPair => 2.0 * s * (dg2 + 4.0 * d2) / (2.0 * o2 + dg2 + 4.0 * d2),
        TopologyClass::Separate => 16.0 * s * (4.0 * dg2 + d2) / (o2 + 8.0 * dg2 + 2.0 * d2),
        TopologyClass::Nested => 8.0 * s * (1.0 + phi2.cos()) * d2 / (o2 + 2.0 * d2),
        TopologyClass::Braided => 8.0 * s * (1.0 + pm * phi2.cos()) * (dg2 + d2) / (o2 + 2.0 * dg2 + 2.0 * d2),
    }
}

/// `Γ_D(β)`, the populating rate at fixed photon flux `|β|²`.
pub fn populating_rate_beta(
    topology: TopologyClass,
    kind: DarkKind,
    gr: f64,
    gl: f64,
    delta: f64,
    beta: f64,
    phi2: f64,
) -> f64 {
    let (s, dg2, d2) = (gr + gl, (gl - gr).powi(2), delta * delta);
    let x = gr * beta * beta;
    let pm = if kind == DarkKind::Singlet { 1.0 } else { -1.0 };
    match topology {
        TopologyClass::SmallPair => 2.0 * s * (dg2 + 4.0 * d2) / (8.0 * x + dg2 + 4.0 * d2),
        TopologyClass::Separate => 8.0 * s * (4.0 * dg2 + d2) / (8.0 * x + 4.0 * dg2 + d2),
        TopologyClass::Nested => {
            let f = 1.0 + phi2.cos();
            4.0 * s * f * d2 / (4.0 * x * f + d2)
        }
        TopologyClass::Braided => {
            let f = 1.0 + pm * phi2.cos();
            4.0 * s * f * (dg2 + d2) / (4.0 * x * f + dg2 + d2)
        }
    }
}

/// Driven two-atom layout with `δ_a = −δ_b = delta`.
pub fn driven_layout(topology: TopologyClass, kind: DarkKind, gr: f64, gl: f64, delta: f64, phi2: f64) -> ValidatedLayout {
    let mut layout = two_atom_layout(topology, gr, gl, &driven_phases(topology, kind, phi2));
    layout.atoms[0].detuning = delta;
    layout.atoms[1].detuning = -delta;
    layout.validate().expect("reference layout is valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableCheck {
    pub table: &'static str,
    pub row: String,
    pub deviation: f64,
    pub tol: f64,
    pub pass: bool,
}

impl TableCheck {
    fn new(table: &'static str, row: String, deviation: f64, tol: f64) -> Self {
        Self { table, row, deviation, tol, pass: deviation <= tol }
    }
}

/// Coefficients against the transcribed formulas on random phases.
pub fn check_coefficient_table(seed: u64, samples: usize) -> Vec<TableCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    TOPOLOGIES
        .iter()
        .map(|&topology| {
            let mut worst = 0.0f64;
            for _ in 0..samples {
                let (gr, gl) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
                let n = if topology == TopologyClass::SmallPair { 1 } else { 3 };
                let phases: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
                let l = two_atom_layout(topology, gr, gl, &phases).validate().unwrap();
                let dev = coefficient_row_deviation(&coefficient_row(topology, gr, gl, &phases), &compute_coefficients(&l));
                worst = worst.max(dev);
            }
            TableCheck::new("coefficients", topology.to_string(), worst, 1e-12)
        })
        .collect()
}

pub const CHIRALITIES: [(f64, f64); 3] = [(0.5, 0.5), (0.2, 0.8), (1.0, 0.0)];

/// One point of the undriven dark-state grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub topology: TopologyClass,
    pub chirality: (f64, f64),
    pub phases: Vec<f64>,
    pub equal_frequencies: bool,
    pub predicted: Option<DarkKind>,
    pub found: Option<DarkKind>,
    /// Every state is dark (no emission at all); excluded from comparison.
    pub fully_decoupled: bool,
    /// Nontrivial dark states that are neither `|S⟩` nor `|T⟩`.
    pub other_states: usize,
}

impl GridPoint {
    pub fn agrees(&self) -> bool {
        self.fully_decoupled || self.predicted == self.found
    }
}

/// Scan phases on multiples of π/6 for every topology and chirality.
pub fn dark_state_grid() -> Vec<GridPoint> {
    let steps: Vec<f64> = (0..12).map(|k| k as f64 * PI / 6.0).collect();
    let mut out = Vec::new();
    for &topology in &TOPOLOGIES {
        let phase_sets: Vec<Vec<f64>> = if topology == TopologyClass::SmallPair {
            steps.iter().map(|&p| vec![p]).collect()
        } else {
            let mut v = Vec::with_capacity(steps.len().pow(3));
            for &a in &steps {
                for &b in &steps {
                    for &cc in &steps {
                        v.push(vec![a, b, cc]);
                    }
                }
            }
            v
        };
        for &(gr, gl) in &CHIRALITIES {
            for phases in &phase_sets {
                for equal in [true, false] {
                    let mut layout = two_atom_layout(topology, gr, gl, phases);
                    if !equal {
                        layout.atoms[1].frequency = 0.37;
                    }
                    let l = layout.validate().unwrap();
                    let me = assemble_model(&compute_coefficients(&l), None);
                    let search = find_dark_states(&me, DEFAULT_TOL);
                    let found = if search.has_class(DarkClass::Singlet) {
                        Some(DarkKind::Singlet)
                    } else if search.has_class(DarkClass::Triplet) {
                        Some(DarkKind::Triplet)
                    } else {
                        None
                    };
                    out.push(GridPoint {
                        topology,
                        chirality: (gr, gl),
                        phases: phases.clone(),
                        equal_frequencies: equal,
                        predicted: undriven_dark_condition(topology, gr, gl, phases, equal),
                        found,
                        fully_decoupled: search.fully_decoupled,
                        other_states: search.nontrivial().filter(|r| r.class == DarkClass::Other).count(),
                    });
                }
            }
        }
    }
    out
}

/// Grid agreement per topology: the deviation is the number of
/// disagreeing grid points.
pub fn check_dark_state_table() -> Vec<TableCheck> {
    let grid = dark_state_grid();
    TOPOLOGIES
        .iter()
        .map(|&t| {
            let bad = grid.iter().filter(|p| p.topology == t && !p.agrees()).count();
            TableCheck::new("dark-states", t.to_string(), bad as f64, 0.0)
        })
        .collect()
}

/// Populating rates and `α` from the engine against the closed forms.
pub fn check_populating_rate_table() -> Vec<TableCheck> {
    let points = [(0.25, 0.75, 0.5, 1.0, 0.7), (0.6, 0.1, -0.3, 0.4, 2.1), (0.5, 0.5, 0.8, 2.0, 1.0)];
    let mut out = Vec::new();
    for &topology in &TOPOLOGIES {
        for kind in [DarkKind::Singlet, DarkKind::Triplet] {
            let mut worst_rate = 0.0f64;
            let mut worst_beta = 0.0f64;
            let mut worst_alpha = 0.0f64;
            let mut failure = false;
            for &(gr, gl, delta, omega, phi2) in &points {
                let l = driven_layout(topology, kind, gr, gl, delta, phi2);
                let k = compute_coefficients(&l);
                let Some(drive) = beta_for_rabi(&k, 0, c(omega, 0.0)) else {
                    failure = true;
                    continue;
                };
                match driven_dark_state(&k, &drive) {
                    Ok(r) => {
                        let rate = r.populating_rate.unwrap();
                        let expect = populating_rate_omega(topology, kind, gr, gl, delta, omega, phi2);
                        worst_rate = worst_rate.max((rate - expect).abs() / expect.abs().max(1e-300));
                        let beta = drive.beta.norm();
                        let expect_b = populating_rate_beta(topology, kind, gr, gl, delta, beta, phi2);
                        worst_beta = worst_beta.max((rate - expect_b).abs() / expect_b.abs().max(1e-300));
                        let a = alpha_of_omega(topology, kind, gr, gl, delta, omega);
                        worst_alpha = worst_alpha.max((r.alpha.unwrap() - a).norm() / a.norm().max(1e-300));
                    }
                    Err(_) => failure = true,
                }
            }
            let tag = |what: &str| format!("{topology} {} {what}", if kind == DarkKind::Singlet { "D_S" } else { "D_T" });
            let dev = |w: f64| if failure { f64::INFINITY } else { w };
            out.push(TableCheck::new("populating-rate", tag("Γ_D(Ω)"), dev(worst_rate), 1e-10));
            out.push(TableCheck::new("populating-rate", tag("Γ_D(β)"), dev(worst_beta), 1e-10));
            out.push(TableCheck::new("populating-rate", tag("α"), dev(worst_alpha), 1e-10));
        }
    }
    out
}

/// Every reference check, in table order.
pub fn verify_tables() -> Vec<TableCheck> {
    let mut out = check_coefficient_table(2024, 50);
    out.extend(check_dark_state_table());
    out.extend(check_populating_rate_table());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_rows_match_engine() {
        for check in check_coefficient_table(7, 20) {
            assert!(check.pass, "{check:?}");
        }
    }

    #[test]
    fn populating_rows_match_engine() {
        for check in check_populating_rate_table() {
            assert!(check.pass, "{check:?}");
        }
    }

    #[test]
    fn angle_comparison() {
        assert!(same_angle(0.0, TAU));
        assert!(same_angle(-PI, PI));
        assert!(!same_angle(0.1, 0.0));
    }
}

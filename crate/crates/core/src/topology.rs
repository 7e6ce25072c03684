//! Physical layouts: atoms, their connection points along the waveguide and
//! the phases accumulated between neighbouring points.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{C64, MAX_ATOMS};

/// Tolerance for "phase ≡ 0 (mod 2π)" and for the splitting sum rule.
pub const PHASE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("connection point {point} names unknown atom {atom:?}")]
    UnknownAtom { point: usize, atom: String },
    #[error("connection point {point} has negative or non-finite {field}: {value}")]
    NegativeRate {
        point: usize,
        field: &'static str,
        value: f64,
    },
    #[error("{points} connection points need {} phases, got {phases}", points.saturating_sub(1))]
    PhaseCountMismatch { points: usize, phases: usize },
    #[error("atom {0:?} owns no connection point")]
    EmptyAtom(String),
    #[error("atom name {0:?} declared twice")]
    DuplicateAtom(String),
    #[error("layout has no atoms")]
    NoAtoms,
    #[error("{0} atoms exceeds the dense limit of {MAX_ATOMS}")]
    TooManyAtoms(usize),
    #[error("connection point {point} has rank {rank} below the preceding rank {previous}")]
    RankOrder { point: usize, rank: i64, previous: i64 },
    #[error("non-finite value for {0}")]
    NonFinite(String),
    #[error("the same atom was passed twice")]
    SameAtom,
    #[error("atom index {0} out of range")]
    AtomOutOfRange(usize),
    #[error("point index {0} out of range")]
    PointOutOfRange(usize),
    #[error("point range {0}..={1} is reversed")]
    ReversedRange(usize, usize),
    #[error("split needs at least one sub-point")]
    EmptySplit,
    #[error("split of {rates} sub-points needs {} sub-phases, got {phases}", rates.saturating_sub(1))]
    SplitPhaseCount { rates: usize, phases: usize },
    #[error("sub-phase {0} is not a multiple of 2π")]
    SplitPhaseNotTrivial(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub name: String,
    /// Bare transition frequency; used when no drive is present.
    pub frequency: f64,
    /// Detuning from the drive; used in the rotating frame when driven.
    pub detuning: f64,
}

impl Atom {
    pub fn new(name: impl Into<String>, frequency: f64, detuning: f64) -> Self {
        Self {
            name: name.into(),
            frequency,
            detuning,
        }
    }

    pub fn resonant(name: impl Into<String>) -> Self {
        Self::new(name, 0.0, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionPoint {
    pub owner: String,
    pub rank: i64,
    pub gamma_right: f64,
    pub gamma_left: f64,
}

impl ConnectionPoint {
    pub fn new(owner: impl Into<String>, rank: i64, gamma_right: f64, gamma_left: f64) -> Self {
        Self {
            owner: owner.into(),
            rank,
            gamma_right,
            gamma_left,
        }
    }
}

/// Coherent drive injected from the left end of the waveguide, with
/// amplitude `β` (`|β|²` is the photon flux).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    pub beta: C64,
}

impl DriveSpec {
    pub fn new(beta: C64) -> Self {
        Self { beta }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub atoms: Vec<Atom>,
    pub points: Vec<ConnectionPoint>,
    /// `phases[k]` is acquired between points `k` and `k + 1`.
    pub phases: Vec<f64>,
}

impl Layout {
    /// Builds a layout from an owner sequence such as `"abab"`, assigning
    /// ranks `0, 1, …`, the same rates to every point and resonant atoms
    /// named after the characters in order of first appearance.
    pub fn from_pattern(pattern: &str, gamma_right: f64, gamma_left: f64, phases: &[f64]) -> Self {
        let mut atoms: Vec<Atom> = Vec::new();
        let mut points = Vec::new();
        for (rank, ch) in pattern.chars().enumerate() {
            let name = ch.to_string();
            if !atoms.iter().any(|a| a.name == name) {
                atoms.push(Atom::resonant(name.clone()));
            }
            points.push(ConnectionPoint::new(name, rank as i64, gamma_right, gamma_left));
        }
        Self {
            atoms,
            points,
            phases: phases.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<ValidatedLayout, TopologyError> {
        ValidatedLayout::new(self.clone())
    }
}

/// A layout whose invariants have been checked. Points are in waveguide
/// order and every point knows the index of its owning atom.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedLayout {
    layout: Layout,
    owners: Vec<usize>,
}

impl ValidatedLayout {
    fn new(layout: Layout) -> Result<Self, TopologyError> {
        if layout.atoms.is_empty() {
            return Err(TopologyError::NoAtoms);
        }
        if layout.atoms.len() > MAX_ATOMS {
            return Err(TopologyError::TooManyAtoms(layout.atoms.len()));
        }
        for (i, atom) in layout.atoms.iter().enumerate() {
            if layout.atoms[..i].iter().any(|a| a.name == atom.name) {
                return Err(TopologyError::DuplicateAtom(atom.name.clone()));
            }
            if !atom.frequency.is_finite() || !atom.detuning.is_finite() {
                return Err(TopologyError::NonFinite(format!("atom {}", atom.name)));
            }
        }
        let mut owners = Vec::with_capacity(layout.points.len());
        for (i, p) in layout.points.iter().enumerate() {
            let owner = layout
                .atoms
                .iter()
                .position(|a| a.name == p.owner)
                .ok_or_else(|| TopologyError::UnknownAtom {
                    point: i,
                    atom: p.owner.clone(),
                })?;
            for (field, value) in [("gamma_right", p.gamma_right), ("gamma_left", p.gamma_left)] {
                if value < 0.0 || !value.is_finite() {
                    return Err(TopologyError::NegativeRate {
                        point: i,
                        field,
                        value,
                    });
                }
            }
            if i > 0 && p.rank < layout.points[i - 1].rank {
                return Err(TopologyError::RankOrder {
                    point: i,
                    rank: p.rank,
                    previous: layout.points[i - 1].rank,
                });
            }
            owners.push(owner);
        }
        if layout.phases.len() + 1 != layout.points.len() {
            return Err(TopologyError::PhaseCountMismatch {
                points: layout.points.len(),
                phases: layout.phases.len(),
            });
        }
        if let Some(k) = layout.phases.iter().position(|p| !p.is_finite()) {
            return Err(TopologyError::NonFinite(format!("phases[{k}]")));
        }
        for (j, atom) in layout.atoms.iter().enumerate() {
            if !owners.contains(&j) {
                return Err(TopologyError::EmptyAtom(atom.name.clone()));
            }
        }
        Ok(Self { layout, owners })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.layout.atoms
    }

    pub fn points(&self) -> &[ConnectionPoint] {
        &self.layout.points
    }

    pub fn phases(&self) -> &[f64] {
        &self.layout.phases
    }

    pub fn n_atoms(&self) -> usize {
        self.layout.atoms.len()
    }

    pub fn n_points(&self) -> usize {
        self.layout.points.len()
    }

    /// Index of the atom owning point `p`.
    pub fn owner(&self, p: usize) -> usize {
        self.owners[p]
    }

    pub fn atom_index(&self, name: &str) -> Option<usize> {
        self.layout.atoms.iter().position(|a| a.name == name)
    }

    /// Indices of the points of atom `j`, left to right.
    pub fn points_of(&self, j: usize) -> Vec<usize> {
        (0..self.n_points()).filter(|&p| self.owners[p] == j).collect()
    }

    pub fn first_point_of(&self, j: usize) -> usize {
        self.owners.iter().position(|&o| o == j).expect("validated atom owns a point")
    }

    /// Phase accumulated from point `m` to point `n` (`m ≤ n`).
    pub fn cumulative_phase(&self, m: usize, n: usize) -> Result<f64, TopologyError> {
        if m >= self.n_points() {
            return Err(TopologyError::PointOutOfRange(m));
        }
        if n >= self.n_points() {
            return Err(TopologyError::PointOutOfRange(n));
        }
        if m > n {
            return Err(TopologyError::ReversedRange(m, n));
        }
        Ok(self.layout.phases[m..n].iter().sum())
    }

    /// Unchecked variant of [`cumulative_phase`](Self::cumulative_phase) that
    /// accepts the endpoints in either order.
    pub(crate) fn phase_between(&self, m: usize, n: usize) -> f64 {
        let (lo, hi) = if m <= n { (m, n) } else { (n, m) };
        self.layout.phases[lo..hi].iter().sum()
    }

    /// Per-atom frequency entering `ω σ_z / 2`: the bare frequency, or the
    /// detuning from the drive when working in the rotating frame.
    pub fn frame_frequencies(&self, rotating: bool) -> Vec<f64> {
        self.atoms()
            .iter()
            .map(|a| if rotating { a.detuning } else { a.frequency })
            .collect()
    }

    /// Sum of all phases between the outermost points.
    pub fn total_phase(&self) -> f64 {
        self.layout.phases.iter().sum()
    }

    pub fn classify_pair(&self, j: usize, k: usize) -> Result<TopologyClass, TopologyError> {
        for idx in [j, k] {
            if idx >= self.n_atoms() {
                return Err(TopologyError::AtomOutOfRange(idx));
            }
        }
        if j == k {
            return Err(TopologyError::SameAtom);
        }
        let pj = self.points_of(j);
        let pk = self.points_of(k);
        Ok(classify_positions(&pj, &pk))
    }

    /// Replaces point `point` with consecutive sub-points owned by the same
    /// atom. The splitting sum rule is recorded, not enforced.
    pub fn split_point(
        &self,
        point: usize,
        sub_rates: &[(f64, f64)],
        sub_phases: &[f64],
    ) -> Result<Split, TopologyError> {
        if point >= self.n_points() {
            return Err(TopologyError::PointOutOfRange(point));
        }
        if sub_rates.is_empty() {
            return Err(TopologyError::EmptySplit);
        }
        if sub_phases.len() + 1 != sub_rates.len() {
            return Err(TopologyError::SplitPhaseCount {
                rates: sub_rates.len(),
                phases: sub_phases.len(),
            });
        }
        if let Some(&bad) = sub_phases.iter().find(|&&p| !is_multiple_of_tau(p)) {
            return Err(TopologyError::SplitPhaseNotTrivial(bad));
        }

        let original = &self.layout.points[point];
        let mut points = Vec::with_capacity(self.n_points() + sub_rates.len() - 1);
        let mut phases = Vec::with_capacity(self.n_points() + sub_rates.len() - 2);
        // Dense re-ranking keeps coincident points coincident.
        let mut next_rank = 0i64;
        let mut last_rank: Option<i64> = None;
        let mut rank_for = |r: i64, fresh: bool| {
            if fresh || last_rank != Some(r) {
                if last_rank.is_some() {
                    next_rank += 1;
                }
                last_rank = Some(r);
            }
            next_rank
        };
        for (i, p) in self.layout.points.iter().enumerate() {
            if i > 0 {
                phases.push(self.layout.phases[i - 1]);
            }
            if i == point {
                for (s, &(gr, gl)) in sub_rates.iter().enumerate() {
                    if s > 0 {
                        phases.push(sub_phases[s - 1]);
                    }
                    let rank = rank_for(p.rank, s > 0);
                    points.push(ConnectionPoint::new(p.owner.clone(), rank, gr, gl));
                }
            } else {
                let rank = rank_for(p.rank, false);
                points.push(ConnectionPoint::new(p.owner.clone(), rank, p.gamma_right, p.gamma_left));
            }
        }
        let layout = Layout {
            atoms: self.layout.atoms.clone(),
            points,
            phases,
        }
        .validate()?;
        let sum_rule = SumRule::evaluate(original.gamma_right, original.gamma_left, sub_rates);
        Ok(Split { layout, sum_rule })
    }
}

fn is_multiple_of_tau(p: f64) -> bool {
    let r = p.rem_euclid(TAU);
    r.min(TAU - r) <= PHASE_TOL
}

fn classify_positions(pj: &[usize], pk: &[usize]) -> TopologyClass {
    if pj.len() == 1 && pk.len() == 1 {
        return TopologyClass::SmallPair;
    }
    let (jmin, jmax) = (pj[0], pj[pj.len() - 1]);
    let (kmin, kmax) = (pk[0], pk[pk.len() - 1]);
    if jmax < kmin || kmax < jmin {
        return TopologyClass::Separate;
    }
    let nested_in = |outer: &[usize], inner: &[usize]| {
        let (lo, hi) = (inner[0], inner[inner.len() - 1]);
        outer.windows(2).any(|w| w[0] < lo && hi < w[1])
    };
    if nested_in(pj, pk) || nested_in(pk, pj) {
        TopologyClass::Nested
    } else {
        TopologyClass::Braided
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TopologyClass {
    SmallPair,
    Separate,
    Nested,
    Braided,
}

impl fmt::Display for TopologyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TopologyClass::SmallPair => "small",
            TopologyClass::Separate => "separate",
            TopologyClass::Nested => "nested",
            TopologyClass::Braided => "braided",
        };
        f.write_str(s)
    }
}

/// `(Σ_j √γ_j)²` against the original rate, per direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumRule {
    pub original_right: f64,
    pub original_left: f64,
    pub recombined_right: f64,
    pub recombined_left: f64,
}

impl SumRule {
    pub fn evaluate(gamma_right: f64, gamma_left: f64, sub_rates: &[(f64, f64)]) -> Self {
        let recombine = |f: fn(&(f64, f64)) -> f64| {
            let s: f64 = sub_rates.iter().map(|r| f(r).sqrt()).sum();
            s * s
        };
        Self {
            original_right: gamma_right,
            original_left: gamma_left,
            recombined_right: recombine(|r| r.0),
            recombined_left: recombine(|r| r.1),
        }
    }

    pub fn satisfied(&self) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= PHASE_TOL * a.abs().max(b.abs()).max(1.0);
        close(self.original_right, self.recombined_right)
            && close(self.original_left, self.recombined_left)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub layout: ValidatedLayout,
    pub sum_rule: SumRule,
}

/// `n` equal sub-rates `γ/n²` per direction, which satisfy the sum rule.
pub fn equal_split(gamma_right: f64, gamma_left: f64, n: usize) -> Vec<(f64, f64)> {
    let n2 = (n * n) as f64;
    vec![(gamma_right / n2, gamma_left / n2); n]
}

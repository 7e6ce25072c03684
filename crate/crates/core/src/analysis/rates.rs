//! How much faster giant atoms populate a driven dark state than small ones.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::coefficients::compute_coefficients;
use crate::hilbert::C64;
use crate::topology::{DriveSpec, TopologyClass};

use super::tables::{driven_layout, DarkKind};
use super::{beta_for_rabi, driven_dark_state};

/// One random parameter point and the populating rates it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSample {
    pub gamma_right: f64,
    pub gamma_left: f64,
    pub delta: f64,
    pub phi2: f64,
    pub kind: DarkKind,
    /// Common drive strength: `Ω` for the fixed-Rabi comparison, `|β|` for
    /// the fixed-flux one.
    pub drive: f64,
    /// Giant-to-small ratios at fixed `Ω`, per giant topology (`None` where
    /// no driven dark state exists).
    pub ratio_omega: [Option<f64>; 3],
    /// Giant-to-small ratios at fixed `β`.
    pub ratio_beta: [Option<f64>; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateComparison {
    pub samples: Vec<RateSample>,
    /// Largest fixed-`Ω` ratio per giant topology (separate, nested, braided).
    pub max_ratio_omega: [f64; 3],
    pub max_ratio_beta: [f64; 3],
    /// Points with a fixed-`Ω` ratio above 64.
    pub omega_bound_violations: usize,
    /// Sample index with the largest separate-to-small ratio at fixed `β`.
    pub best_separate_beta: Option<usize>,
}

pub const GIANTS: [TopologyClass; 3] = [TopologyClass::Separate, TopologyClass::Nested, TopologyClass::Braided];
pub const OMEGA_BOUND: f64 = 64.0;

fn rate_at(topology: TopologyClass, sample: &RateSample, drive: Drive) -> Option<f64> {
    let l = driven_layout(topology, sample.kind, sample.gamma_right, sample.gamma_left, sample.delta, sample.phi2);
    let k = compute_coefficients(&l);
    let spec = match drive {
        Drive::Rabi(omega) => beta_for_rabi(&k, 0, C64::from(omega))?,
        Drive::Flux(beta) => DriveSpec::new(C64::from(beta)),
    };
    driven_dark_state(&k, &spec).ok()?.populating_rate
}

#[derive(Clone, Copy)]
enum Drive {
    Rabi(f64),
    Flux(f64),
}

/// Random sweep over chirality, detuning, drive strength, the free middle
/// phase and the dark-state kind. Deterministic for a given seed; points
/// are evaluated in parallel.
pub fn rate_comparison(n: usize, seed: u64) -> RateComparison {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples: Vec<RateSample> = (0..n)
        .map(|_| {
            let gamma_right: f64 = rng.gen_range(0.01..1.0);
            let gamma_left: f64 = rng.gen_range(0.01..1.0);
            let mut delta: f64 = rng.gen_range(-1.0..1.0);
            // Half the points sit close to resonance, where the ratios peak.
            if rng.gen_bool(0.5) {
                delta *= 0.05 * (gamma_left - gamma_right).abs();
            }
            let mut phi2 = rng.gen_range(0.0..TAU);
            if (phi2 - PI).abs() < 1e-3 {
                phi2 += 0.01;
            }
            RateSample {
                gamma_right,
                gamma_left,
                delta,
                phi2,
                kind: if rng.gen_bool(0.5) { DarkKind::Singlet } else { DarkKind::Triplet },
                drive: rng.gen_range(0.01..10.0),
                ratio_omega: [None; 3],
                ratio_beta: [None; 3],
            }
        })
        .collect();

    samples.par_iter_mut().for_each(|s| {
        let small_o = rate_at(TopologyClass::SmallPair, s, Drive::Rabi(s.drive));
        let small_b = rate_at(TopologyClass::SmallPair, s, Drive::Flux(s.drive));
        for (i, &t) in GIANTS.iter().enumerate() {
            s.ratio_omega[i] = small_o.zip(rate_at(t, s, Drive::Rabi(s.drive))).map(|(a, b)| b / a);
            s.ratio_beta[i] = small_b.zip(rate_at(t, s, Drive::Flux(s.drive))).map(|(a, b)| b / a);
        }
    });

    let mut max_ratio_omega = [0.0f64; 3];
    let mut max_ratio_beta = [0.0f64; 3];
    let mut omega_bound_violations = 0;
    let mut best_separate_beta = None;
    let mut best = 0.0;
    for (idx, s) in samples.iter().enumerate() {
        for i in 0..3 {
            if let Some(r) = s.ratio_omega[i] {
                max_ratio_omega[i] = max_ratio_omega[i].max(r);
                if r > OMEGA_BOUND * (1.0 + 1e-9) {
                    omega_bound_violations += 1;
                }
            }
            if let Some(r) = s.ratio_beta[i] {
                max_ratio_beta[i] = max_ratio_beta[i].max(r);
            }
        }
        if let Some(r) = s.ratio_beta[0] {
            if r > best {
                best = r;
                best_separate_beta = Some(idx);
            }
        }
    }
    RateComparison {
        samples,
        max_ratio_omega,
        max_ratio_beta,
        omega_bound_violations,
        best_separate_beta,
    }
}

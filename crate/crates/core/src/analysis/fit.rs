use crate::dynamics::{evolve, uniform_times, MasterEquation, SolverOptions, Trajectory};
use crate::hilbert::{ground, projector, singlet, triplet, StateVector};

use super::{AnalysisError, DarkClass, DarkStateReport};

/// Decay rate from a least-squares fit of `ln p(t)` against `t`.
pub fn exponential_rate(times: &[f64], pops: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(pops)
        .filter(|(_, p)| **p > 1e-12)
        .map(|(t, p)| (*t, p.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / n, sy / n);
    let (num, den) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (t, y)| (a + (t - mt) * (y - my), b + (t - mt) * (t - mt)));
    if den == 0.0 {
        return None;
    }
    Some(-num / den)
}

/// Angular frequency of `p(t) = level + A cos(ωt + θ)` from the times at
/// which the series crosses `level`: successive crossings are `π/ω` apart.
pub fn oscillation_frequency(times: &[f64], series: &[f64], level: f64) -> Option<f64> {
    let mut crossings = Vec::new();
    for i in 1..series.len() {
        let (a, b) = (series[i - 1] - level, series[i] - level);
        if a == 0.0 {
            crossings.push(times[i - 1]);
        } else if a * b < 0.0 {
            let f = a / (a - b);
            crossings.push(times[i - 1] + f * (times[i] - times[i - 1]));
        }
    }
    crossings.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if crossings.len() < 2 {
        return None;
    }
    // Least-squares slope of crossing time against crossing index.
    let n = crossings.len() as f64;
    let mi = (n - 1.0) / 2.0;
    let mt = crossings.iter().sum::<f64>() / n;
    let (num, den) = crossings.iter().enumerate().fold((0.0, 0.0), |(a, b), (i, t)| {
        let di = i as f64 - mi;
        (a + di * (t - mt), b + di * di)
    });
    Some(std::f64::consts::PI / (num / den))
}

#[derive(Debug, Clone)]
pub struct TransientFit {
    /// Fitted populating rate.
    pub rate: f64,
    /// Analytic `Γ_D` the fit window was based on.
    pub expected: f64,
    pub window: f64,
    pub trajectory: Trajectory,
}

/// Populating rate of a driven dark state from the transient out of `|gg⟩`.
///
/// Over `t ∈ [0, 0.2/Γ_D]` the dark-state population grows as
/// `dp_D/dt = Γ_D · p_X + …`, with `X` the bright member of `{S, T}`; the
/// rate is the growth of `p_D` divided by the time integral of `p_X`.
pub fn populating_rate_fit(
    me: &MasterEquation,
    dark: &DarkStateReport,
    opts: &SolverOptions,
    samples: usize,
) -> Result<TransientFit, AnalysisError> {
    let (expected, partner) = match (dark.class, dark.populating_rate) {
        (DarkClass::DrivenDS, Some(r)) => (r, triplet()),
        (DarkClass::DrivenDT, Some(r)) => (r, singlet()),
        _ => return Err(AnalysisError::NoDrivenDarkState("report is not a driven dark state".into())),
    };
    let window = 0.2 / expected;
    let samples = samples.max(3);
    let times = uniform_times(window, samples);
    let rho0 = projector(&ground(2));
    let traj = evolve(me, &rho0, window, opts, &times)?;
    let pop = |v: &StateVector, i: usize| v.dotc(&(&traj.states[i] * v)).re;
    let p_d: Vec<f64> = (0..samples).map(|i| pop(&dark.state, i)).collect();
    let p_x: Vec<f64> = (0..samples).map(|i| pop(&partner, i)).collect();
    let integral = simpson(&traj.times, &p_x);
    let rate = (p_d[samples - 1] - p_d[0]) / integral;
    Ok(TransientFit {
        rate,
        expected,
        window,
        trajectory: traj,
    })
}

// Composite Simpson on uniform samples, trapezoid for a trailing interval.
fn simpson(t: &[f64], y: &[f64]) -> f64 {
    let n = y.len();
    if n < 2 {
        return 0.0;
    }
    let h = t[1] - t[0];
    let pairs = (n - 1) / 2;
    let mut acc = 0.0;
    for k in 0..pairs {
        let i = 2 * k;
        acc += h / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
    }
    if (n - 1) % 2 == 1 {
        acc += 0.5 * h * (y[n - 2] + y[n - 1]);
    }
    acc
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::process::ExitCode;

use chiralwg::analysis::tables::{
    alpha_of_omega, dark_state_grid, driven_layout, populating_rate_omega, DarkKind, TOPOLOGIES,
};
use chiralwg::analysis::{
    beta_for_rabi, check_dfi, driven_dark_state, find_dark_states, oscillation_frequency, populating_rate_fit,
    rate_comparison, splitting_fidelity_drop, verify_splitting_invariance, exponential_rate, DarkClass, SplitSpec,
    DEFAULT_TOL,
};
use chiralwg::coefficients::{assemble_model, compute_coefficients};
use chiralwg::dynamics::{check_state, evolve, uniform_times, lindblad_rhs, steady_state, MasterEquation, SolverOptions, Trajectory};
use chiralwg::hilbert::{c, dim_for, fidelity, ground, ket, normalize, projector, singlet, traceless, triplet, ComplexMatrix, StateVector};
use chiralwg::slh::compose_layout;
use chiralwg::topology::{equal_split, DriveSpec, Layout, TopologyClass, ValidatedLayout};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Every trajectory produced by the suite, for the hygiene criterion.
#[derive(Default)]
struct Ledger {
    trajectories: usize,
    violations: Vec<String>,
}

impl Ledger {
    fn run(&mut self, me: &MasterEquation, rho0: &ComplexMatrix, t: f64, samples: usize) -> Option<Trajectory> {
        let times = uniform_times(t, samples);
        self.trajectories += 1;
        match evolve(me, rho0, t, &SolverOptions::default(), &times) {
            Ok(traj) => {
                for (s, &t) in traj.states.iter().zip(&traj.times) {
                    if let Err(e) = check_state(s, t) {
                        self.violations.push(e.to_string());
                    }
                }
                Some(traj)
            }
            Err(e) => {
                self.violations.push(e.to_string());
                None
            }
        }
    }
}

fn rel(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

fn random_layout(rng: &mut ChaCha8Rng, pattern: &str) -> ValidatedLayout {
    let phases: Vec<f64> = (0..pattern.len() - 1).map(|_| rng.gen_range(0.0..TAU)).collect();
    let mut layout = Layout::from_pattern(pattern, 0.0, 0.0, &phases);
    for p in &mut layout.points {
        p.gamma_right = rng.gen_range(0.0..1.0);
        p.gamma_left = rng.gen_range(0.0..1.0);
    }
    layout.validate().unwrap()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let patterns = ["ab", "aabb", "abba", "abab", "abcabc"];
    let mut worst = [0.0f64; 3];
    for i in 0..200 {
        let l = random_layout(&mut rng, patterns[i % patterns.len()]);
        let drive = (i % 2 == 1).then(|| DriveSpec::new(c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
        let me = assemble_model(&compute_coefficients(&l), drive.as_ref());
        let slh = compose_layout(&l, drive.as_ref());
        // The two routes differ by a multiple of the identity in H.
        worst[0] = worst[0].max(rel(&traceless(me.hamiltonian()), &traceless(&slh.h)));
        worst[1] = worst[1].max(rel(&me.collapse_ops()[0], &slh.l[0]));
        worst[2] = worst[2].max(rel(&me.collapse_ops()[1], &slh.l[1]));
    }
    outcome(
        worst.iter().all(|w| *w <= 1e-10),
        format!("200 layouts, max rel dev H {:.2e}, L_R {:.2e}, L_L {:.2e} (tol 1e-10)", worst[0], worst[1], worst[2]),
    )
}

fn table_spot_checks() -> Outcome {
    let b = compute_coefficients(&Layout::from_pattern("abab", 0.5, 0.5, &[FRAC_PI_2; 3]).validate().unwrap());
    let s = compute_coefficients(&Layout::from_pattern("ab", 0.7, 0.3, &[0.0]).validate().unwrap());
    let dev_b = [b.decay[0], b.decay[1], b.gamma_coll(0, 1).norm(), (b.g(0, 1) - c(1.0, 0.0)).norm()]
        .into_iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let dev_s = [(s.gamma_coll(0, 1) - c(1.0, 0.0)).norm(), (s.g(0, 1) - c(0.0, -0.2)).norm()]
        .into_iter()
        .fold(0.0f64, f64::max);
    outcome(
        dev_b <= 1e-12 && dev_s <= 1e-12,
        format!("braided dev {dev_b:.2e}, small dev {dev_s:.2e} (tol 1e-12)"),
    )
}

fn dark_state_table() -> Outcome {
    let grid = dark_state_grid();
    let compared: Vec<_> = grid.iter().filter(|p| !p.fully_decoupled).collect();
    let bad: Vec<_> = compared.iter().filter(|p| !p.agrees()).collect();
    let chiral_leak = grid
        .iter()
        .filter(|p| p.topology != TopologyClass::Nested && p.chirality.0 != p.chirality.1 && !p.fully_decoupled)
        .filter(|p| p.found.is_some())
        .count();
    for p in bad.iter().take(5) {
        eprintln!("  grid mismatch: {p:?}");
    }
    let l = Layout::from_pattern("abba", 0.2, 0.8, &[0.0, 2.0 * PI / 3.0, 0.0]).validate().unwrap();
    let search = find_dark_states(&assemble_model(&compute_coefficients(&l), None), DEFAULT_TOL);
    let nested = search.nontrivial().find(|r| r.class == DarkClass::Singlet);
    let nested_ok = nested.is_some_and(|r| r.collapse_residual <= 1e-9 && r.eigen_residual <= 1e-9);
    let (cr, er) = nested.map_or((f64::NAN, f64::NAN), |r| (r.collapse_residual, r.eigen_residual));
    outcome(
        bad.is_empty() && chiral_leak == 0 && nested_ok,
        format!(
            "{} grid points compared ({} fully decoupled skipped), {} mismatches, {} chiral false positives; nested chiral |S⟩ residuals {cr:.1e}/{er:.1e}",
            compared.len(),
            grid.len() - compared.len(),
            bad.len(),
            chiral_leak
        ),
    )
}

fn dfi_dynamics(ledger: &mut Ledger) -> Outcome {
    let l = Layout::from_pattern("abab", 0.9, 0.1, &[FRAC_PI_2; 3]).validate().unwrap();
    let k = compute_coefficients(&l);
    let dfi = check_dfi(&k, 1e-10);
    let g = k.g(0, 1).norm();
    let me = assemble_model(&k, None);
    let Some(traj) = ledger.run(&me, &projector(&ket("eg").unwrap()), 10.0, 2001) else {
        return outcome(false, "integration failed".into());
    };
    let (eg, ge) = (traj.population("eg").unwrap(), traj.population("ge").unwrap());
    let leak = eg.iter().zip(ge).map(|(a, b)| (1.0 - a - b).abs()).fold(0.0, f64::max);
    let freq = oscillation_frequency(&traj.times, eg, 0.5).unwrap_or(f64::NAN);
    let freq_err = (freq - 2.0 * g).abs() / (2.0 * g);
    outcome(
        dfi.is_dfi && leak <= 1e-6 && freq_err <= 0.01,
        format!("leakage {leak:.2e} (tol 1e-6), fitted {freq:.6} vs 2|g| = {:.6}, rel err {freq_err:.2e} (tol 1e-2)", 2.0 * g),
    )
}

fn driven_dark_states(ledger: &mut Ledger) -> Outcome {
    let (delta, omega, phi2) = (0.5, 1.0, 1.0);
    let chiralities = [(0.25, 0.75), (0.6, 0.3)];
    let mut worst_fid = 0.0f64;
    let mut worst_fit = 0.0f64;
    let mut failures = Vec::new();
    for &topology in &TOPOLOGIES {
        for kind in [DarkKind::Singlet, DarkKind::Triplet] {
            for &(gr, gl) in &chiralities {
                let tag = format!("{topology} {kind:?} ({gr},{gl})");
                let l = driven_layout(topology, kind, gr, gl, delta, phi2);
                let k = compute_coefficients(&l);
                let drive = beta_for_rabi(&k, 0, c(omega, 0.0)).unwrap();
                let report = match driven_dark_state(&k, &drive) {
                    Ok(r) => r,
                    Err(e) => {
                        failures.push(format!("{tag}: {e}"));
                        continue;
                    }
                };
                let y = if kind == DarkKind::Singlet { singlet() } else { triplet() };
                let a = alpha_of_omega(topology, kind, gr, gl, delta, omega);
                if (report.alpha.unwrap() - a).norm() > 1e-10 * a.norm() {
                    failures.push(format!("{tag}: α mismatch"));
                }
                let me = assemble_model(&k, Some(&drive));
                match steady_state(&me) {
                    Ok(rho) => {
                        let analytic = normalize(&(&y * a + ground(2)));
                        worst_fid = worst_fid.max(1.0 - analytic.dotc(&(&rho * &analytic)).re);
                    }
                    Err(e) => failures.push(format!("{tag}: steady state {e}")),
                }
                let expect = populating_rate_omega(topology, kind, gr, gl, delta, omega, phi2);
                let samples = 401;
                ledger.trajectories += 1;
                match populating_rate_fit(&me, &report, &SolverOptions::default(), samples) {
                    Ok(fit) => {
                        for (s, &t) in fit.trajectory.states.iter().zip(&fit.trajectory.times) {
                            if let Err(e) = check_state(s, t) {
                                ledger.violations.push(e.to_string());
                            }
                        }
                        worst_fit = worst_fit.max((fit.rate - expect).abs() / expect);
                    }
                    Err(e) => {
                        ledger.violations.push(e.to_string());
                        failures.push(format!("{tag}: fit {e}"));
                    }
                }
            }
        }
    }
    let mut small = Layout::from_pattern("ab", 0.25, 0.75, &[0.0]);
    small.atoms[0].detuning = 0.5;
    small.atoms[1].detuning = -0.5;
    let k = compute_coefficients(&small.validate().unwrap());
    let small_rate = driven_dark_state(&k, &beta_for_rabi(&k, 0, c(1.0, 0.0)).unwrap())
        .ok()
        .and_then(|r| r.populating_rate)
        .unwrap_or(f64::NAN);
    let small_ok = (small_rate - 10.0 / 13.0).abs() < 1e-10;
    for f in failures.iter().take(5) {
        eprintln!("  {f}");
    }
    outcome(
        failures.is_empty() && worst_fid <= 1e-6 && worst_fit <= 0.02 && small_ok,
        format!(
            "16 cases, max 1−F {worst_fid:.2e} (tol 1e-6), max fit err {:.3}% (tol 2%), small Γ_D {small_rate:.5}, {} failures",
            100.0 * worst_fit,
            failures.len()
        ),
    )
}

fn superradiance(ledger: &mut Ledger) -> Outcome {
    let grid = dark_state_grid();
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut failed = 0;
    for p in grid.iter().filter(|p| p.predicted.is_some() && p.equal_frequencies && !p.fully_decoupled) {
        let l = chiralwg::analysis::tables::two_atom_layout(p.topology, p.chirality.0, p.chirality.1, &p.phases)
            .validate()
            .unwrap();
        let k = compute_coefficients(&l);
        let rate = k.decay[0] + k.decay[1];
        if rate < 1e-6 {
            continue;
        }
        let bright = if p.predicted == Some(DarkKind::Singlet) { triplet() } else { singlet() };
        let me = assemble_model(&k, None);
        let t = 3.0 / rate;
        let Some(traj) = ledger.run(&me, &projector(&bright), t, 61) else {
            failed += 1;
            continue;
        };
        let pops: Vec<f64> = traj.states.iter().map(|r| bright.dotc(&(r * &bright)).re).collect();
        match exponential_rate(&traj.times, &pops) {
            Some(fit) => worst = worst.max((fit - rate).abs() / rate),
            None => failed += 1,
        }
        checked += 1;
    }
    outcome(
        failed == 0 && worst <= 0.01 && checked > 0,
        format!("{checked} dark-state conditions, max rel err of bright decay vs Γ_a+Γ_b {worst:.2e} (tol 1e-2)"),
    )
}

fn golden_states() -> Outcome {
    let model = |pattern: &str, n: usize| {
        let l = Layout::from_pattern(pattern, 0.5, 0.5, &vec![0.0; n]).validate().unwrap();
        find_dark_states(&assemble_model(&compute_coefficients(&l), None), DEFAULT_TOL)
    };
    let best = |states: &[chiralwg::analysis::DarkStateReport], v: &StateVector| {
        states.iter().map(|r| fidelity(&r.state, v)).fold(0.0, f64::max)
    };
    let matryoshka = normalize(&(ket("egg").unwrap() + ket("geg").unwrap() - ket("gge").unwrap() * c(2.0, 0.0)));
    let enclosed = normalize(&(ket("eg").unwrap() * c(2.0, 0.0) - ket("ge").unwrap() * c(3.0, 0.0)));
    let fm = best(&model("abccba", 5).states, &matryoshka);
    let fe = best(&model("ababa", 4).states, &enclosed);
    outcome(
        fm > 1.0 - 1e-9 && fe > 1.0 - 1e-9,
        format!("matryoshka 1−F {:.1e}, enclosed braided 1−F {:.1e} (tol 1e-9)", 1.0 - fm, 1.0 - fe),
    )
}

fn splitting() -> Outcome {
    let (gr, gl) = (0.5, 0.5);
    let l = Layout::from_pattern("abab", gr, gl, &[0.0; 3]).validate().unwrap();
    let last = l.n_points() - 1;
    let ninths = SplitSpec { point: last, sub_rates: equal_split(gr, gl, 3), sub_phases: vec![0.0; 2] };
    // Two parts of γ/2 each: (2·√(γ/2))² = 2γ, so the sum rule is violated.
    let broken = SplitSpec { point: last, sub_rates: vec![(gr / 2.0, gl / 2.0); 2], sub_phases: vec![0.0] };
    let kept = verify_splitting_invariance(&l, &ninths, 1e-9).unwrap();
    let keep_drop = splitting_fidelity_drop(&l, &ninths).unwrap();
    let drop = splitting_fidelity_drop(&l, &broken).unwrap();
    outcome(
        kept && keep_drop < 1e-9 && drop > 1e-3,
        format!("γ/9 split drop {keep_drop:.1e} (tol 1e-9), violating split drop {drop:.3} (needs > 1e-3)"),
    )
}

fn rate_sweep() -> Outcome {
    let r = rate_comparison(10_000, 42);
    let best = r.max_ratio_beta[0];
    let evaluated = r.samples.iter().filter(|s| s.ratio_omega.iter().any(Option::is_some)).count();
    outcome(
        r.omega_bound_violations == 0 && best >= 15.0,
        format!(
            "{} points ({evaluated} evaluated), max Γ_D(Ω) ratio sep/nest/braid {:.2}/{:.2}/{:.2} (bound 64), best separate Γ_D(β) ratio {best:.2} (needs ≥ 15)",
            r.samples.len(),
            r.max_ratio_omega[0],
            r.max_ratio_omega[1],
            r.max_ratio_omega[2]
        ),
    )
}

fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(d, d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    (&a + a.adjoint()).unscale(2.0)
}

fn hygiene(ledger: &Ledger) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for i in 0..300 {
        let pattern = ["ab", "abab", "abcabc"][i % 3];
        let l = random_layout(&mut rng, pattern);
        let me = assemble_model(&compute_coefficients(&l), Some(&DriveSpec::new(c(0.3, 0.1))));
        let rho = random_hermitian(&mut rng, dim_for(l.n_atoms()));
        let tr = lindblad_rhs(&me, &rho).unwrap().trace();
        worst = worst.max(tr.norm());
    }
    for v in ledger.violations.iter().take(5) {
        eprintln!("  {v}");
    }
    outcome(
        ledger.violations.is_empty() && worst <= 1e-12,
        format!(
            "{} integrations, {} invariant violations; max |tr rhs| {worst:.1e} on random Hermitian inputs (tol 1e-12)",
            ledger.trajectories,
            ledger.violations.len()
        ),
    )
}

fn main() -> ExitCode {
    let mut ledger = Ledger::default();
    let results: Vec<(&str, Outcome)> = vec![
        ("1 oracle equivalence", oracle_equivalence()),
        ("2 coefficient spot checks", table_spot_checks()),
        ("3 undriven dark-state grid", dark_state_table()),
        ("4 decoherence-free dynamics", dfi_dynamics(&mut ledger)),
        ("5 driven dark states", driven_dark_states(&mut ledger)),
        ("6 superradiant partner", superradiance(&mut ledger)),
        ("7 multi-atom dark states", golden_states()),
        ("8 splitting invariance", splitting()),
        ("9 populating-rate sweep", rate_sweep()),
        ("10 numerical hygiene", hygiene(&ledger)),
    ];
    let mut all = true;
    for (name, o) in &results {
        all &= o.pass;
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

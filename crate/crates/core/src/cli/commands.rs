//! The commands. Each builds a table and says whether its checks passed.

use rayon::prelude::*;
use serde_json::{Number, Value};
use thiserror::Error;

use crate::analysis::tables::{coefficient_row, coefficient_row_deviation, verify_tables, TableCheck};
use crate::analysis::{
    check_dfi, driven_dark_state, find_dark_states, multi_atom_dark_conditions, xi_in_frame, DarkStateReport,
    DEFAULT_TOL,
};
use crate::coefficients::{assemble_model, compute_coefficients, CoefficientSet};
use crate::dynamics::{evolve, steady_state, uniform_times, DynamicsError, MasterEquation};
use crate::hilbert::{c, fidelity, ket_label, projector, singlet, traceless, triplet, ComplexMatrix, StateVector, C64};
use crate::slh::compose_layout;
use crate::topology::TopologyClass;

use super::config::{from_document, parse_scalar, set_path, ConfigError, ParsedConfig};
use super::output::{Cell, ResultTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Closed-form master-equation coefficients.
    Coeffs,
    /// Deviation between the cascaded network and the closed form.
    Compose,
    /// Time evolution from the configured initial state.
    Evolve,
    /// Stationary state of the Liouvillian.
    Steady,
    /// Dark states of the layout.
    Dark,
    /// Decoherence-free interaction check.
    Dfi,
    /// Scan of one or two config values.
    Sweep,
    /// Reference tables for two atoms.
    VerifyTables,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Coeffs => "coeffs",
            Command::Compose => "compose",
            Command::Evolve => "evolve",
            Command::Steady => "steady",
            Command::Dark => "dark",
            Command::Dfi => "dfi",
            Command::Sweep => "sweep",
            Command::VerifyTables => "verify-tables",
        }
    }
}

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Physics(String),
}

impl CommandError {
    /// 1 for a failed physics check, 2 for bad input.
    pub fn exit_code(&self) -> u8 {
        match self {
            CommandError::Physics(_) => 1,
            _ => 2,
        }
    }
}

impl From<DynamicsError> for CommandError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::InvariantViolated { .. } | DynamicsError::StepSizeUnderflow { .. } => {
                CommandError::Physics(e.to_string())
            }
            _ => CommandError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub table: ResultTable,
    pub passed: bool,
}

impl Report {
    fn ok(table: ResultTable) -> Self {
        Self { table, passed: true }
    }
}

/// One swept config value.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<f64>,
}

/// Parses `key=start:stop:n` (`n ≥ 1` evenly spaced values, ends included).
pub fn parse_sweep(spec: &str) -> Result<Sweep, CommandError> {
    let bad = |m: &str| CommandError::Input(format!("bad sweep {spec:?}: {m}"));
    let (key, range) = spec.split_once('=').ok_or_else(|| bad("expected key=start:stop:n"))?;
    let parts: Vec<&str> = range.split(':').collect();
    let [start, stop, n] = parts[..] else {
        return Err(bad("expected start:stop:n"));
    };
    let start = parse_scalar(start).ok_or_else(|| bad("start is not a number"))?;
    let stop = parse_scalar(stop).ok_or_else(|| bad("stop is not a number"))?;
    let n: usize = n.trim().parse().map_err(|_| bad("n is not a count"))?;
    if n == 0 {
        return Err(bad("n must be at least 1"));
    }
    let values = if n == 1 {
        vec![start]
    } else {
        (0..n).map(|i| if i + 1 == n { stop } else { start + (stop - start) * i as f64 / (n - 1) as f64 }).collect()
    };
    Ok(Sweep { key: key.trim().to_string(), values })
}

pub fn run_command(cmd: Command, config: Option<&ParsedConfig>, sweeps: &[Sweep]) -> Result<Report, CommandError> {
    if cmd == Command::VerifyTables {
        return Ok(tables(config));
    }
    let p = config.ok_or_else(|| CommandError::Input(format!("`{}` needs --config", cmd.name())))?;
    match cmd {
        Command::Coeffs => Ok(Report::ok(coeffs(p))),
        Command::Compose => Ok(compose(p)),
        Command::Evolve => evolution(p),
        Command::Steady => steady(p),
        Command::Dark => Ok(Report::ok(dark(p))),
        Command::Dfi => Ok(Report::ok(dfi(p))),
        Command::Sweep => sweep(p, sweeps),
        Command::VerifyTables => unreachable!(),
    }
}

fn atom_names(p: &ParsedConfig) -> Vec<String> {
    p.layout.atoms().iter().map(|a| a.name.clone()).collect()
}

fn model(p: &ParsedConfig) -> (CoefficientSet, MasterEquation) {
    let k = compute_coefficients(&p.layout);
    let me = assemble_model(&k, p.config.drive_spec().as_ref());
    (k, me)
}

fn complex_row(t: &mut ResultTable, quantity: &str, j: &str, k: &str, z: C64) {
    t.push(vec![quantity.into(), j.into(), k.into(), z.re.into(), z.im.into()]);
}

fn coeffs(p: &ParsedConfig) -> ResultTable {
    let k = compute_coefficients(&p.layout);
    let drive = p.config.drive_spec();
    let names = atom_names(p);
    let n = names.len();
    let mut t = ResultTable::new(["quantity", "j", "k", "re", "im"]);
    t.note(if drive.is_some() { "frame: rotating with the drive" } else { "frame: lab" });
    let shifted = k.shifted_frequency(drive.is_some());
    let rabi = drive.map(|d| k.rabi(&d));
    for j in 0..n {
        let a = names[j].as_str();
        complex_row(&mut t, "frequency", a, "", c(k.frequency[j], 0.0));
        complex_row(&mut t, "detuning", a, "", c(k.detuning[j], 0.0));
        complex_row(&mut t, "frequency_shift", a, "", c(k.frequency_shift[j], 0.0));
        complex_row(&mut t, "shifted_frequency", a, "", c(shifted[j], 0.0));
        complex_row(&mut t, "decay", a, "", c(k.decay[j], 0.0));
        complex_row(&mut t, "amp_right", a, "", k.amp_right[j]);
        complex_row(&mut t, "amp_left", a, "", k.amp_left[j]);
        if let Some(r) = &rabi {
            complex_row(&mut t, "rabi", a, "", r[j]);
        }
    }
    for j in 0..n {
        for l in j + 1..n {
            complex_row(&mut t, "g", &names[j], &names[l], k.g(j, l));
            complex_row(&mut t, "gamma_coll", &names[j], &names[l], k.gamma_coll(j, l));
        }
    }
    complex_row(&mut t, "total_phase", "", "", c(k.total_phase, 0.0));
    t
}

const COMPOSE_TOL: f64 = 1e-10;

fn compose(p: &ParsedConfig) -> Report {
    let (_, me) = model(p);
    let slh = compose_layout(&p.layout, p.config.drive_spec().as_ref());
    let mut t = ResultTable::new(["operator", "max_abs_deviation", "relative_deviation", "tol", "pass"]);
    t.note("H is compared after removing its trace");
    let pairs = [
        ("H", traceless(me.hamiltonian()), traceless(&slh.h)),
        ("L_R", me.collapse_ops()[0].clone(), slh.l[0].clone()),
        ("L_L", me.collapse_ops()[1].clone(), slh.l[1].clone()),
    ];
    let mut passed = true;
    for (name, a, b) in &pairs {
        let diff = a - b;
        let max_abs = diff.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let scale = a.norm().max(b.norm());
        let rel = if scale == 0.0 { 0.0 } else { diff.norm() / scale };
        passed &= rel <= COMPOSE_TOL;
        t.push(vec![(*name).into(), max_abs.into(), rel.into(), COMPOSE_TOL.into(), (rel <= COMPOSE_TOL).into()]);
    }
    Report { table: t, passed }
}

/// Named dark states worth tracking in a time series.
fn tracked_states(p: &ParsedConfig, k: &CoefficientSet, me: &MasterEquation) -> Vec<(String, StateVector)> {
    let mut out = Vec::new();
    let n = k.n_atoms();
    if n == 2 {
        out.push(("p_S".to_string(), singlet()));
        out.push(("p_T".to_string(), triplet()));
    }
    match (p.config.drive_spec(), n) {
        (Some(d), 2) => {
            if let Ok(r) = driven_dark_state(k, &d) {
                out.push((format!("p_{}", r.class), r.state));
            }
        }
        _ => {
            let search = find_dark_states(me, DEFAULT_TOL);
            if !search.fully_decoupled {
                for (i, r) in search.nontrivial().enumerate() {
                    out.push((format!("p_dark{i}"), r.state.clone()));
                }
            }
        }
    }
    out
}

fn evolution(p: &ParsedConfig) -> Result<Report, CommandError> {
    let (k, me) = model(p);
    let n = k.n_atoms();
    let s = &p.config.solver;
    let psi0 = p.config.initial_state(n)?;
    let traj = evolve(&me, &projector(&psi0), s.t_final, &p.config.solver_options(), &uniform_times(s.t_final, s.samples))?;
    let labels: Vec<String> = (0..me.dim()).map(|i| ket_label(i, n)).collect();
    let tracked = tracked_states(p, &k, &me);
    let mut columns = vec!["t".to_string()];
    columns.extend(labels.iter().map(|l| format!("p_{l}")));
    columns.push("purity".into());
    columns.extend(tracked.iter().map(|(name, _)| name.clone()));
    let mut t = ResultTable::new(columns);
    t.note(format!("initial {}", p.config.initial.clone().unwrap_or_else(|| ket_label(0, n))));
    t.note(format!("error_estimate {:.3e}", traj.error_estimate));
    t.note(format!("steps {} rejected {}", traj.steps, traj.rejected));
    for (i, &time) in traj.times.iter().enumerate() {
        let mut row: Vec<Cell> = vec![time.into()];
        row.extend(labels.iter().map(|l| Cell::Real(traj.population(l).unwrap()[i])));
        row.push(traj.population("purity").unwrap()[i].into());
        let rho = &traj.states[i];
        row.extend(tracked.iter().map(|(_, v)| Cell::Real(v.dotc(&(rho * v)).re)));
        t.push(row);
    }
    Ok(Report::ok(t))
}

/// Fidelity below which `steady` reports a failed check.
const STEADY_FIDELITY: f64 = 1.0 - 1e-6;

fn steady(p: &ParsedConfig) -> Result<Report, CommandError> {
    let (k, me) = model(p);
    let n = k.n_atoms();
    let mut t = ResultTable::new(["basis", "row", "col", "re", "im"]);
    let push_matrix = |t: &mut ResultTable, b: usize, m: &ComplexMatrix| {
        for r in 0..m.nrows() {
            for col in 0..m.ncols() {
                let z = m[(r, col)];
                t.push(vec![b.into(), ket_label(r, n).into(), ket_label(col, n).into(), z.re.into(), z.im.into()]);
            }
        }
    };
    let mut passed = true;
    match steady_state(&me) {
        Ok(rho) => {
            t.note("unique stationary state");
            push_matrix(&mut t, 0, &rho);
            if let (Some(d), 2) = (p.config.drive_spec(), n) {
                if let Ok(r) = driven_dark_state(&k, &d) {
                    let f = r.state.dotc(&(&rho * &r.state)).re;
                    t.note(format!("fidelity_to_{} {f:.16e}", r.class));
                    passed = f > STEADY_FIDELITY;
                }
            }
        }
        Err(DynamicsError::DegenerateSteadyState { dim, basis }) => {
            t.note(format!("degenerate stationary subspace of dimension {dim}; rows are a kernel basis"));
            for (b, m) in basis.iter().enumerate() {
                push_matrix(&mut t, b, m);
            }
        }
        Err(e) => return Err(e.into()),
    }
    Ok(Report { table: t, passed })
}

fn dark_reports(p: &ParsedConfig, k: &CoefficientSet, me: &MasterEquation) -> (Vec<DarkStateReport>, Vec<String>) {
    let search = find_dark_states(me, DEFAULT_TOL);
    let mut notes = vec![
        format!("kernel_dim {}", search.kernel_dim),
        format!("fully_decoupled {}", search.fully_decoupled),
    ];
    let mut reports = search.states;
    if let (Some(d), 2) = (p.config.drive_spec(), k.n_atoms()) {
        match driven_dark_state(k, &d) {
            Ok(r) => match reports.iter_mut().find(|s| fidelity(&s.state, &r.state) > 1.0 - 1e-9) {
                Some(slot) => *slot = r,
                None => reports.push(r),
            },
            Err(e) => notes.push(e.to_string()),
        }
    }
    (reports, notes)
}

fn dark(p: &ParsedConfig) -> ResultTable {
    let (k, me) = model(p);
    let n = k.n_atoms();
    let labels: Vec<String> = (0..me.dim()).map(|i| ket_label(i, n)).collect();
    let mut columns: Vec<String> = [
        "index",
        "class",
        "eigenvalue",
        "collapse_residual",
        "eigen_residual",
        "alpha_re",
        "alpha_im",
        "populating_rate",
    ]
    .map(String::from)
    .to_vec();
    for l in &labels {
        columns.push(format!("amp_{l}_re"));
        columns.push(format!("amp_{l}_im"));
    }
    let mut t = ResultTable::new(columns);
    let (reports, notes) = dark_reports(p, &k, &me);
    for note in notes {
        t.note(note);
    }
    if n >= 2 && p.config.drive.is_none() {
        let r = multi_atom_dark_conditions(&k);
        t.note(format!(
            "conditions amplitude_ratio {} eigenstate {} equal_frequencies {} real_exchange {}",
            r.amplitude_ratio, r.eigenstate, r.equal_frequencies, r.real_exchange
        ));
    }
    if let Ok(xi) = xi_in_frame(&k, p.config.drive.is_some()) {
        t.note(format!("xi {:.16e} {:.16e}", xi.re, xi.im));
    }
    for (i, r) in reports.iter().enumerate() {
        let alpha = r.alpha.unwrap_or(c(f64::NAN, f64::NAN));
        let mut row: Vec<Cell> = vec![
            i.into(),
            r.class.to_string().into(),
            r.eigenvalue.into(),
            r.collapse_residual.into(),
            r.eigen_residual.into(),
            alpha.re.into(),
            alpha.im.into(),
            r.populating_rate.unwrap_or(f64::NAN).into(),
        ];
        for z in r.state.iter() {
            row.push(z.re.into());
            row.push(z.im.into());
        }
        t.push(row);
    }
    t
}

const DFI_TOL: f64 = 1e-10;

fn dfi(p: &ParsedConfig) -> ResultTable {
    let k = compute_coefficients(&p.layout);
    let r = check_dfi(&k, DFI_TOL);
    let names = atom_names(p);
    let mut t = ResultTable::new(["quantity", "j", "k", "re", "im"]);
    t.note(format!("tol {DFI_TOL:e}"));
    complex_row(&mut t, "is_dfi", "", "", c(r.is_dfi as u8 as f64, 0.0));
    complex_row(&mut t, "max_individual_decay", "", "", c(r.max_individual_decay, 0.0));
    complex_row(&mut t, "max_collective_decay", "", "", c(r.max_collective_decay, 0.0));
    for ((j, l), g) in &r.residual_g {
        complex_row(&mut t, "g", &names[*j], &names[*l], *g);
    }
    t
}

fn sweep_columns(names: &[String], driven: bool) -> Vec<String> {
    let n = names.len();
    let mut cols: Vec<String> = names.iter().map(|a| format!("decay_{a}")).collect();
    for j in 0..n {
        for l in j + 1..n {
            for q in ["g", "gamma_coll"] {
                cols.push(format!("{q}_{}_{}_re", names[j], names[l]));
                cols.push(format!("{q}_{}_{}_im", names[j], names[l]));
            }
        }
    }
    cols.push("dark_states".into());
    cols.push("is_dfi".into());
    if driven && n == 2 {
        cols.push("populating_rate".into());
        cols.push("alpha_abs".into());
    }
    cols
}

fn sweep_point(p: &ParsedConfig) -> Vec<Cell> {
    let (k, me) = model(p);
    let n = k.n_atoms();
    let mut row: Vec<Cell> = k.decay.iter().map(|&d| Cell::Real(d)).collect();
    for j in 0..n {
        for l in j + 1..n {
            for z in [k.g(j, l), k.gamma_coll(j, l)] {
                row.push(z.re.into());
                row.push(z.im.into());
            }
        }
    }
    let search = find_dark_states(&me, DEFAULT_TOL);
    row.push(search.nontrivial().count().into());
    row.push(check_dfi(&k, DFI_TOL).is_dfi.into());
    if let (Some(d), 2) = (p.config.drive_spec(), n) {
        let r = driven_dark_state(&k, &d).ok();
        row.push(r.as_ref().and_then(|r| r.populating_rate).unwrap_or(f64::NAN).into());
        row.push(r.and_then(|r| r.alpha).map_or(f64::NAN, |a| a.norm()).into());
    }
    row
}

/// Worker count for sweeps: `CHIRALWG_THREADS` if set to a positive
/// integer, otherwise the rayon default.
pub fn sweep_threads() -> usize {
    std::env::var("CHIRALWG_THREADS").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}

fn sweep(p: &ParsedConfig, sweeps: &[Sweep]) -> Result<Report, CommandError> {
    if sweeps.is_empty() || sweeps.len() > 2 {
        return Err(CommandError::Input("`sweep` needs one or two --sweep key=start:stop:n".into()));
    }
    let mut grid: Vec<Vec<f64>> = vec![Vec::new()];
    for s in sweeps {
        grid = grid
            .into_iter()
            .flat_map(|prefix| {
                s.values.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    let names = atom_names(p);
    let driven = p.config.drive.is_some();
    let evaluate = |values: &Vec<f64>| -> Result<Vec<Cell>, CommandError> {
        let mut doc = p.document.clone();
        for (s, &v) in sweeps.iter().zip(values) {
            let num = Number::from_f64(v).ok_or_else(|| CommandError::Input(format!("{} is not finite", s.key)))?;
            set_path(&mut doc, &s.key, Value::Number(num))
                .map_err(|m| CommandError::Input(format!("bad sweep key {:?}: {m}", s.key)))?;
        }
        let point = from_document(doc)?;
        if atom_names(&point) != names || point.config.drive.is_some() != driven {
            return Err(CommandError::Input("a sweep may only change numeric values".into()));
        }
        let mut row: Vec<Cell> = values.iter().map(|&v| Cell::Real(v)).collect();
        row.extend(sweep_point(&point));
        Ok(row)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep_threads())
        .build()
        .map_err(|e| CommandError::Input(e.to_string()))?;
    let rows: Vec<Result<Vec<Cell>, CommandError>> = pool.install(|| grid.par_iter().map(evaluate).collect());

    let mut columns: Vec<String> = sweeps.iter().map(|s| s.key.clone()).collect();
    columns.extend(sweep_columns(&names, driven));
    let mut t = ResultTable::new(columns);
    for s in sweeps {
        t.note(format!("sweep {} over {} values", s.key, s.values.len()));
    }
    for row in rows {
        t.push(row?);
    }
    Ok(Report::ok(t))
}

/// Coefficient row for a configured layout of two atoms with uniform rates,
/// when it is one of the reference topologies.
fn config_check(p: &ParsedConfig) -> Option<TableCheck> {
    let l = &p.layout;
    if l.n_atoms() != 2 || l.owner(0) != 0 {
        return None;
    }
    let first = &l.points()[0];
    let uniform = l.points().iter().all(|q| q.gamma_right == first.gamma_right && q.gamma_left == first.gamma_left);
    let counts = (l.points_of(0).len(), l.points_of(1).len());
    let topology = l.classify_pair(0, 1).ok()?;
    let expected = if topology == TopologyClass::SmallPair { (1, 1) } else { (2, 2) };
    if !uniform || counts != expected {
        return None;
    }
    let row = coefficient_row(topology, first.gamma_right, first.gamma_left, l.phases());
    let deviation = coefficient_row_deviation(&row, &compute_coefficients(l));
    let tol = 1e-12;
    Some(TableCheck { table: "coefficients", row: format!("config ({topology})"), deviation, tol, pass: deviation <= tol })
}

fn tables(config: Option<&ParsedConfig>) -> Report {
    let mut checks = verify_tables();
    let mut t = ResultTable::new(["table", "row", "deviation", "tol", "pass"]);
    match config.map(|p| (p, config_check(p))) {
        Some((_, Some(check))) => checks.push(check),
        Some((_, None)) => t.note("config is not a uniform two-atom reference layout; no config row"),
        None => {}
    }
    let passed = checks.iter().all(|c| c.pass);
    for c in checks {
        t.push(vec![c.table.into(), c.row.into(), c.deviation.into(), c.tol.into(), c.pass.into()]);
    }
    Report { table: t, passed }
}

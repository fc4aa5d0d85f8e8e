use std::path::{Path, PathBuf};

use mcac_core::acsolver::prepare_initial;
use mcac_core::analysis::{convergence_study_with, deterministic_probe, inequality_search, StudyConfig};
use mcac_core::frontflow::{evolve_front_until, radial_integrate, radial_rhs, FrontCurve, RadialState};
use mcac_core::io::{fmt_f64, fmt_opt, CsvTable};
use mcac_core::spectrum::{cell_grid, sweep_with, SweepOptions};
use mcac_core::{
    compute_theta0, compute_theta1, run, signed_distance, LinearSolver, ScalarField, SimConfig,
};
use serde_json::json;

use crate::config::{
    well, ConvergeConfig, FrontConfig, IneqConfig, ProfileConfig, RadialConfig, SimulateConfig, SolverName,
    SpectrumConfig,
};
use crate::error::{CliError, CliResult};

/// Files written by one command, relative to its output directory.
pub struct Outputs {
    dir: PathBuf,
    pub files: Vec<String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn text(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn csv(&mut self, name: &str, table: &CsvTable) -> CliResult<()> {
        self.text(name, &table.to_csv_string())
    }
}

fn profiles(well_name: &str) -> CliResult<(mcac_core::WaveProfile, mcac_core::CorrectorProfile)> {
    let w = well(well_name)?;
    let p = compute_theta0(&w, mcac_core::profile::DEFAULT_RHO_MAX, mcac_core::profile::DEFAULT_POINTS)?;
    let c = compute_theta1(&p)?;
    Ok((p, c))
}

pub fn profile(cfg: &ProfileConfig, out: &mut Outputs) -> CliResult<()> {
    cfg.validate()?;
    let w = well(&cfg.well)?;
    let p = compute_theta0(&w, cfg.rho_max, cfg.n_points)?;
    let c = compute_theta1(&p)?;
    let mut t0 = CsvTable::new(&["rho", "theta0"]);
    let mut t1 = CsvTable::new(&["rho", "theta1"]);
    for i in 0..p.grid.len {
        let rho = p.grid.point(i);
        t0.push_numbers(&[rho, p.theta0[i]])?;
        t1.push_numbers(&[rho, c.theta1[i]])?;
    }
    out.csv("theta0.csv", &t0)?;
    out.csv("theta1.csv", &t1)?;
    let constants = json!({ "sigma": p.sigma, "alpha": p.alpha });
    out.text("constants.json", &(serde_json::to_string_pretty(&constants).expect("serializes") + "\n"))
}

fn field_csv(u: &ScalarField) -> String {
    let g = u.grid;
    let mut s = format!("nx,ny,hx,hy\n{},{},{},{}\n", g.nx, g.ny, fmt_f64(g.hx()), fmt_f64(g.hy()));
    for v in &u.values {
        s.push_str(&fmt_f64(*v));
        s.push('\n');
    }
    s
}

pub fn simulate(cfg: &SimulateConfig, out: &mut Outputs) -> CliResult<()> {
    let grid = cfg.grid.build()?;
    let shape = cfg.shape.build()?;
    let (p, c) = profiles(&cfg.well)?;
    let lf = signed_distance(&shape, &grid)?;
    let u0 = prepare_initial(&lf, &p, &c, cfg.eps, cfg.order)?;

    let mut sim = SimConfig::new(cfg.eps, cfg.t_end, grid);
    sim.well = well(&cfg.well)?;
    if let Some(dt) = cfg.dt {
        sim.dt = dt;
    }
    sim.record_every = cfg.record_every;
    sim.solver = match cfg.solver {
        SolverName::Dct => LinearSolver::Dct,
        SolverName::Cg => LinearSolver::ConjugateGradient,
    };
    sim.keep_fields = cfg.snapshot_fields;
    let traj = run(&sim, &u0)?;

    let mut level = CsvTable::new(&["x", "y", "d"]);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let [x, y] = grid.point(i, j);
            level.push_numbers(&[x, y, lf.at(i, j)])?;
        }
    }
    out.csv("level.csv", &level)?;

    let mut diag = CsvTable::new(&["t", "mass", "energy", "lambda"]);
    for r in &traj.rows {
        diag.push_numbers(&[r.t, r.mass, r.energy, r.lambda])?;
    }
    out.csv("diag.csv", &diag)?;

    for (k, (_, lines)) in traj.fronts.iter().enumerate() {
        let mut t = CsvTable::new(&["idx", "x", "y"]);
        for (idx, p) in lines.iter().flat_map(|l| l.points.iter()).enumerate() {
            t.push(vec![idx.to_string(), fmt_f64(p[0]), fmt_f64(p[1])])?;
        }
        out.csv(&format!("front_{k:04}.csv"), &t)?;
    }
    for (k, (_, u)) in traj.fields.iter().enumerate() {
        out.text(&format!("field_{k:04}.csv"), &field_csv(u))?;
    }
    out.text("field_final.csv", &field_csv(&traj.final_field))
}

pub fn front(cfg: &FrontConfig, out: &mut Outputs) -> CliResult<()> {
    let shape = cfg.shape.build()?;
    let curve = FrontCurve::from_shape(&shape, cfg.markers)?;
    let h = curve.min_spacing();
    let dt = cfg.dt.unwrap_or(0.2 * h * h);
    let sigma = profiles("cubic")?.0.sigma;
    let times: Vec<f64> = (0..=cfg.snapshots).map(|k| cfg.t_end * k as f64 / cfg.snapshots.max(1) as f64).collect();
    let run = evolve_front_until(&curve, dt, cfg.t_end, cfg.record_every, sigma, &times)?;

    let mut traj = CsvTable::new(&["t", "area", "length", "kbar", "lambda0"]);
    for r in &run.diagnostics.rows {
        traj.push_numbers(&[r.t, r.area, r.length, r.kbar, r.lambda0])?;
    }
    out.csv("trajectory.csv", &traj)?;

    let mut fronts = CsvTable::new(&["t", "idx", "x", "y"]);
    for snap in &run.snapshots {
        for (idx, p) in snap.components.iter().flatten().enumerate() {
            fronts.push(vec![fmt_f64(snap.t), idx.to_string(), fmt_f64(p[0]), fmt_f64(p[1])])?;
        }
    }
    out.csv("fronts.csv", &fronts)
}

pub fn radial(cfg: &RadialConfig, out: &mut Outputs) -> CliResult<()> {
    let signs = cfg
        .signs
        .clone()
        .unwrap_or_else(|| (0..cfg.radii.len()).map(|k| if k % 2 == 0 { -1 } else { 1 }).collect());
    let state = RadialState::new(cfg.n, cfg.radii.clone(), signs)?;
    let sigma = profiles("cubic")?.0.sigma;
    let run = radial_integrate(&state, cfg.t_end, cfg.dt, sigma)?;

    let m = state.radii.len();
    let names: Vec<String> =
        (0..m).map(|k| format!("r{k}")).chain((0..m).map(|k| format!("dr{k}"))).collect();
    let mut header = vec!["t"];
    header.extend(names.iter().map(String::as_str));
    let mut table = CsvTable::new(&header);
    for (s, rate) in run.trajectory.iter().zip(&run.rates) {
        let mut row = vec![s.t];
        row.extend(&s.radii);
        row.extend(rate);
        table.push_numbers(&row)?;
    }
    out.csv("radial.csv", &table)?;

    let mut diag = CsvTable::new(&["t", "area", "length", "kbar", "lambda0"]);
    for r in &run.diagnostics.rows {
        diag.push_numbers(&[r.t, r.area, r.length, r.kbar, r.lambda0])?;
    }
    out.csv("trajectory.csv", &diag)?;

    if let Some(ev) = run.collapse {
        let mut col = CsvTable::new(&["t", "index"]);
        col.push(vec![fmt_f64(ev.time), ev.index.to_string()])?;
        out.csv("collapse.csv", &col)?;
    }
    debug_assert_eq!(run.rates[0], radial_rhs(&state));
    Ok(())
}

pub fn spectrum(cfg: &SpectrumConfig, out: &mut Outputs) -> CliResult<()> {
    let mut opts = SweepOptions { h_ratio: cfg.h_ratio, h1: cfg.h1, well: well(&cfg.well)?, ..SweepOptions::default() };
    if let Some(g) = cfg.geometry {
        opts.geometry = g.build();
    }
    let reports = sweep_with(&cfg.eps_list, cfg.p_eps, &opts)?;
    let mut table = CsvTable::new(&["eps", "lam_min_all", "lam_min_zero_mean"]);
    for (k, r) in reports.iter().enumerate() {
        table.push_numbers(&[r.eps, r.lam_min_all, r.lam_min_zero_mean])?;
        let grid = cell_grid(r.eigvec.len());
        let mut vec = CsvTable::new(&["x", "phi"]);
        for (x, v) in grid.points().into_iter().zip(&r.eigvec) {
            vec.push_numbers(&[x, *v])?;
        }
        out.csv(&format!("eigvec_{k}.csv"), &vec)?;
    }
    out.csv("spectrum.csv", &table)
}

pub fn ineq(cfg: &IneqConfig, seed: Option<u64>, out: &mut Outputs) -> CliResult<()> {
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let probe = deterministic_probe(cfg.n)?;
    let search = inequality_search(cfg.n, cfg.trials, seed)?;
    let mut table =
        CsvTable::new(&["n", "trials", "seed", "probe_ratio", "c_emp", "c_emp_doubled", "stable"]);
    table.push(vec![
        cfg.n.to_string(),
        cfg.trials.to_string(),
        seed.to_string(),
        fmt_f64(probe.ratio),
        fmt_f64(search.c_emp),
        fmt_f64(search.c_emp_doubled),
        search.stable.to_string(),
    ])?;
    out.csv("ineq.csv", &table)?;
    out.text("witness.txt", &format!("{}\n", search.witness))
}

pub fn converge(cfg: &ConvergeConfig, out: &mut Outputs) -> CliResult<()> {
    let shape = cfg.shape.build()?;
    let mut study = StudyConfig::new(shape, cfg.eps_list.clone(), cfg.t_end, cfg.order);
    study.well = well(&cfg.well)?;
    if let Some(h) = cfg.h_ratio {
        study.h_ratio = h;
    }
    if cfg.half_width.is_some() {
        study.half_width = cfg.half_width;
    }
    if let Some(m) = cfg.markers {
        study.markers = m;
    }
    if let Some(r) = cfg.records {
        study.records = r;
    }
    if let Some(rule) = cfg.dt_rule {
        study.dt_rule = rule.build();
    }
    let (rows, cells) = convergence_study_with(&study)?;

    let mut table = CsvTable::new(&["eps", "front_err", "front_order", "lambda_err", "lambda_order"]);
    for r in &rows {
        table.push(vec![
            fmt_f64(r.eps),
            fmt_f64(r.front_err),
            fmt_opt(r.front_order),
            fmt_f64(r.lambda_err),
            fmt_opt(r.lambda_order),
        ])?;
    }
    out.csv("study.csv", &table)?;

    let mut records = CsvTable::new(&["eps", "t", "front_err", "lambda_eps", "lambda0"]);
    for cell in &cells {
        for &(t, err, le, l0) in &cell.records {
            records.push_numbers(&[cell.eps, t, err, le, l0])?;
        }
    }
    out.csv("records.csv", &records)
}

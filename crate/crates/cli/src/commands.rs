//! Subcommand implementations. Each writes its artifacts into the output
//! directory and a short report to stdout.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use abspec_core::almgren;
use abspec_core::assembly::assemble;
use abspec_core::asymptotics::{
    self, default_f_radii, limit_constant, pole_sweep_with_reference, predicted_h_ratio, profile_difference,
    reference_solution, solve_limit_profile_at, ProfileParams, SweepConfig, SweepReport,
};
use abspec_core::eigensolve::{solve_lowest, write_eigenpair, SolverOptions};
use abspec_core::fields::Field;
use abspec_core::gauge::PoleConfig;
use abspec_core::geometry::{mesh_domain_with, norm, write_mesh, MeshParams};
use abspec_core::locate::Locator;
use abspec_core::oracle::disk_spectrum;
use abspec_core::spectral::{self, fmt12, FourierTrace, TraceOptions};
use abspec_core::{Error, Execution, Result};
use serde_json::{json, Value};

use crate::checks::{sweep_checks, Check, ProfileSummary};
use crate::config::RunConfig;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out)?;
    Ok(&cfg.out)
}

/// Two-column whitespace-separated data for gnuplot.
pub fn write_dat(dir: &Path, name: &str, header: &str, rows: &[(f64, f64)]) -> Result<()> {
    let mut w = create(dir, name)?;
    writeln!(w, "# {header}")?;
    for (x, y) in rows {
        writeln!(w, "{} {}", fmt12(*x), fmt12(*y))?;
    }
    w.flush()?;
    Ok(())
}

fn num(x: f64) -> Value {
    fmt12(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64).map(Value::Number).unwrap_or(Value::Null)
}

fn mesh_params(cfg: &RunConfig) -> Result<MeshParams> {
    Ok(MeshParams::new(cfg.build_domain()?, cfg.h_max, cfg.grading))
}

fn solver(cfg: &RunConfig, exec: Execution) -> SolverOptions {
    SolverOptions { tol: cfg.tol, seed: cfg.seed, exec, ..Default::default() }
}

pub fn cmd_oracle(alpha: f64, count: usize, mut w: impl Write) -> Result<()> {
    let table = disk_spectrum(alpha, count)?;
    writeln!(w, "j,m,nu,zero,lambda")?;
    for e in &table.entries {
        writeln!(w, "{},{},{},{},{}", e.j, e.m, fmt12(e.nu), fmt12(e.zero), fmt12(e.lambda))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SolveFlags {
    pub emit_plots: bool,
    pub dump_matrices: bool,
}

pub fn cmd_solve(cfg: &RunConfig, flags: SolveFlags, exec: Execution, mut log: impl Write) -> Result<()> {
    let dir = out_dir(cfg)?;
    let params = mesh_params(cfg)?;
    let mesh = mesh_domain_with(&params, cfg.pole)?;
    let pc = PoleConfig::new(cfg.alpha, cfg.pole)?;
    let sys = assemble(&mesh, &pc, 4, exec)?;
    let m = cfg.count.max(cfg.n0 + 1);
    let mut slice = solve_lowest(&sys, m, &solver(cfg, exec))?;
    slice.set_target(cfg.n0, 1e-3);
    {
        let mut w = create(dir, "mesh.abmesh")?;
        write_mesh(&mesh, &mut w)?;
        w.flush()?;
    }
    if flags.dump_matrices {
        let mut w = create(dir, "stiffness.txt")?;
        sys.dump_stiffness(&mut w)?;
        w.flush()?;
        let mut w = create(dir, "mass.txt")?;
        sys.dump_mass(&mut w)?;
        w.flush()?;
    }
    let mut w = create(dir, "eigenvalues.csv")?;
    writeln!(w, "n,lambda,residual")?;
    for (i, p) in slice.pairs.iter().enumerate() {
        writeln!(w, "{},{},{}", i + 1, fmt12(p.lambda), fmt12(p.residual))?;
        let mut e = create(dir, &format!("eigenpair_{}.txt", i + 1))?;
        write_eigenpair(p, &mut e)?;
        e.flush()?;
    }
    w.flush()?;
    writeln!(log, "vertices {} dofs {}", mesh.n_vertices(), sys.dim())?;
    for (i, p) in slice.pairs.iter().enumerate() {
        writeln!(log, "lambda_{} = {} (residual {})", i + 1, fmt12(p.lambda), fmt12(p.residual))?;
    }
    if let (Some(radius), true) = (cfg.is_disk(), pc.is_centered()) {
        let table = disk_spectrum(cfg.alpha, slice.pairs.len())?;
        for (i, (p, e)) in slice.pairs.iter().zip(&table.entries).enumerate() {
            let exact = e.lambda / (radius * radius);
            writeln!(log, "oracle_{} = {} (relative error {})", i + 1, fmt12(exact), fmt12((p.lambda - exact) / exact))?;
        }
    }
    if !slice.simple {
        let lam = slice.pairs[cfg.n0 - 1].lambda;
        let gap = slice.gap_below_target.min(slice.gap_above_target) / lam;
        writeln!(log, "eigenvalue {} is not simple: relative gap {}", cfg.n0, fmt12(gap))?;
        return Err(Error::NotSimple { index: cfg.n0, gap });
    }

    let target = &slice.pairs[cfg.n0 - 1];
    let loc = Locator::new(&mesh);
    let field = Field::new(&mesh, &loc, &target.nodal);
    let d = mesh.boundary_distance(cfg.pole);
    let r_grid: Vec<f64> = [0.2, 0.3, 0.4, 0.5].iter().map(|f| f * d).collect();
    let grid = spectral::beta_grid(0.01 * d, 0.0025 * d, &r_grid);
    let ft = FourierTrace::new(&field, cfg.alpha, cfg.pole, pc.direction_angle, &grid, TraceOptions { exec, ..Default::default() })?;
    let betas = spectral::beta_table(&ft, 3, target.lambda, &r_grid)?;
    let vo = spectral::vanishing_order(&ft, &betas, 0.05)?;
    let mut w = create(dir, "trace.csv")?;
    ft.write_csv(&mut w, 3)?;
    w.flush()?;
    let mut w = create(dir, "beta.csv")?;
    spectral::write_beta_csv(&betas, &mut w)?;
    w.flush()?;
    writeln!(
        log,
        "vanishing order {} (mode {}, log-log slope {}), parseval defect {}",
        fmt12(vo.order),
        vo.k,
        fmt12(vo.slope),
        fmt12(ft.parseval_defect)
    )?;
    if flags.emit_plots {
        let rows: Vec<(f64, f64)> = ft.radii.iter().enumerate().map(|(i, r)| (*r, ft.v(i, vo.k).norm())).collect();
        write_dat(dir, "mode.dat", "r |v_k(r)|", &rows)?;
    }

    let d0 = mesh.boundary_distance([0.0, 0.0]);
    let lo = (0.05 * d0).max(4.0 * norm(cfg.pole));
    let hi = 0.5 * d0;
    if params.domain.contains_origin && lo < hi {
        let radii: Vec<f64> = (0..=20).map(|i| lo * (hi / lo).powf(i as f64 / 20.0)).collect();
        let curve = almgren::frequency_curve(&field, target.lambda, &pc, &radii, exec)?;
        let mut w = create(dir, "almgren.csv")?;
        curve.write_csv(&mut w)?;
        w.flush()?;
        let ineq = almgren::inequality_check(&field, &pc, 0.5 * d, hi, exec)?;
        writeln!(
            log,
            "N({}) = {}, hardy ratio {}, poincare ratio {}",
            fmt12(radii[0]),
            fmt12(curve.n[0]),
            fmt12(ineq.hardy_ratio),
            fmt12(ineq.poincare_ratio)
        )?;
        if flags.emit_plots {
            let rows: Vec<(f64, f64)> = curve.radii.iter().copied().zip(curve.n.iter().copied()).collect();
            write_dat(dir, "frequency.dat", "r N", &rows)?;
        }
    }
    Ok(())
}

fn profile_params(cfg: &RunConfig, s: f64, exec: Execution) -> ProfileParams {
    ProfileParams { h_max: Some(cfg.profile_h * s), exec, ..Default::default() }
}

/// Profile at S and 2S with the derived diagnostics.
pub fn profile_summary(cfg: &RunConfig, k: i32, beta: num_complex::Complex64, exec: Execution) -> Result<ProfileSummary> {
    let s = cfg.profile_s;
    let p = [cfg.direction.cos(), cfg.direction.sin()];
    let profile = solve_limit_profile_at(cfg.alpha, k, s, p, &profile_params(cfg, s, exec))?;
    let doubled = solve_limit_profile_at(cfg.alpha, k, 2.0 * s, p, &profile_params(cfg, 2.0 * s, exec))?;
    if doubled.tail >= profile.tail {
        return Err(Error::Truncation(format!(
            "tail energy did not decrease under doubling ({} -> {})",
            fmt12(profile.tail),
            fmt12(doubled.tail)
        )));
    }
    let doubling = profile_difference(&profile, &doubled, 2.0, exec)?;
    let limit = limit_constant(&profile, &default_f_radii(s), exec)?;
    let predicted = predicted_h_ratio(&profile, beta, cfg.k_scale)?;
    Ok(ProfileSummary { profile, limit, doubling, predicted_h_ratio: predicted })
}

pub fn cmd_profile(cfg: &RunConfig, check_doubling: bool, exec: Execution, mut log: impl Write) -> Result<()> {
    if cfg.profile_s == 0.0 {
        return Err(Error::InvalidInput("profile_s must be at least 8".into()));
    }
    let dir = out_dir(cfg)?;
    let k = cfg.mode();
    let s = cfg.profile_s;
    let p = [cfg.direction.cos(), cfg.direction.sin()];
    let profile = solve_limit_profile_at(cfg.alpha, k, s, p, &profile_params(cfg, s, exec))?;
    let limit = limit_constant(&profile, &default_f_radii(s), exec)?;
    let mut w = create(dir, "profile_mesh.abmesh")?;
    write_mesh(&profile.mesh, &mut w)?;
    w.flush()?;
    let mut w = create(dir, "profile.txt")?;
    writeln!(w, "# alpha {} k {} S {}", fmt12(cfg.alpha), k, fmt12(s))?;
    for (i, z) in profile.values.iter().enumerate() {
        writeln!(w, "{i} {:.16e} {:.16e}", z.re, z.im)?;
    }
    w.flush()?;
    let mut w = create(dir, "limit.csv")?;
    limit.write_csv(&mut w)?;
    w.flush()?;
    writeln!(log, "vertices {}", profile.mesh.n_vertices())?;
    writeln!(log, "tail energy {}", fmt12(profile.tail))?;
    writeln!(log, "far-field defect {}", fmt12(profile.far_field_defect))?;
    writeln!(
        log,
        "L = {} (gamma {}, F(R_max) - F(R_max/2) = {})",
        fmt12(limit.l),
        fmt12(limit.gamma),
        fmt12(limit.tail)
    )?;
    if check_doubling {
        let doubled = solve_limit_profile_at(cfg.alpha, k, 2.0 * s, p, &profile_params(cfg, 2.0 * s, exec))?;
        let d = profile_difference(&profile, &doubled, 2.0, exec)?;
        writeln!(log, "doubling self-error on D_2 {}", fmt12(d))?;
        if doubled.tail >= profile.tail {
            return Err(Error::Truncation("tail energy did not decrease under doubling".into()));
        }
    }
    Ok(())
}

pub fn cmd_mesh(cfg: &RunConfig, log: impl Write) -> Result<()> {
    let dir = out_dir(cfg)?;
    let mesh = mesh_domain_with(&mesh_params(cfg)?, cfg.pole)?;
    let mut w = create(dir, "mesh.abmesh")?;
    write_mesh(&mesh, &mut w)?;
    w.flush()?;
    let mut log = log;
    writeln!(log, "vertices {} triangles {} min quality {}", mesh.n_vertices(), mesh.triangles.len(), fmt12(mesh.min_quality()))?;
    Ok(())
}

pub fn sweep_config(cfg: &RunConfig, exec: Execution) -> SweepConfig {
    let mut s = SweepConfig::new(cfg.alpha, cfg.direction, cfg.a_list.clone());
    s.n0 = cfg.n0;
    s.k_scale = cfg.k_scale;
    s.solver = solver(cfg, exec);
    s.exec = exec;
    s
}

pub struct SweepOutcome {
    pub report: SweepReport,
    pub profile: Option<ProfileSummary>,
    pub checks: Vec<Check>,
}

/// Sweep plus profile, without writing anything.
pub fn run_sweep(cfg: &RunConfig, exec: Execution) -> Result<SweepOutcome> {
    if cfg.a_list.len() < 4 {
        return Err(Error::InvalidInput(format!("the rate fit needs at least 4 values of |a|, got {}", cfg.a_list.len())));
    }
    let scfg = sweep_config(cfg, exec);
    let params = mesh_params(cfg)?;
    let reference = reference_solution(&params, &scfg).map_err(|e| Error::Sample { abs_a: 0.0, source: Box::new(e) })?;
    let profile = if cfg.profile_s > 0.0 {
        let k = reference.order.k;
        Some(profile_summary(cfg, k, reference.beta(k), exec)?)
    } else {
        None
    };
    let report = pole_sweep_with_reference(reference, &scfg, profile.as_ref().map(|p| &p.profile))?;
    let checks = sweep_checks(&report, profile.as_ref());
    Ok(SweepOutcome { report, profile, checks })
}

pub fn cmd_sweep(cfg: &RunConfig, emit_plots: bool, exec: Execution, mut log: impl Write) -> Result<SweepOutcome> {
    let dir = out_dir(cfg)?.to_path_buf();
    let outcome = run_sweep(cfg, exec)?;
    let rep = &outcome.report;
    let mut w = create(&dir, "sweep.csv")?;
    rep.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&dir, "reference_beta.csv")?;
    spectral::write_beta_csv(&rep.reference.betas, &mut w)?;
    w.flush()?;
    let mut w = create(&dir, "frequency.csv")?;
    writeln!(w, "abs_a,r,H,E,N")?;
    for (a, s) in std::iter::once((0.0, &rep.reference)).chain(rep.samples.iter().map(|s| (s.abs_a, &s.solution))) {
        let c = &s.frequency;
        for i in 0..c.radii.len() {
            writeln!(w, "{},{},{},{},{}", fmt12(a), fmt12(c.radii[i]), fmt12(c.h[i]), fmt12(c.e[i]), fmt12(c.n[i]))?;
        }
    }
    w.flush()?;
    let mut w = create(&dir, "samples.csv")?;
    writeln!(w, "abs_a,h_ratio,reference_blowup,blowup_re_c,blowup_im_c,order,pole_term,pole_bound,hardy,poincare")?;
    for s in &rep.samples {
        let c = s.blowup.map(|b| b.c).unwrap_or(num_complex::Complex64::new(f64::NAN, f64::NAN));
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt12(s.abs_a),
            fmt12(s.h_ratio),
            fmt12(s.reference_blowup),
            fmt12(c.re),
            fmt12(c.im),
            fmt12(s.solution.order.order),
            fmt12(s.pole_term.value),
            fmt12(s.pole_term.bound(rep.alpha)),
            fmt12(s.solution.inequality.hardy_ratio),
            fmt12(s.solution.inequality.poincare_ratio)
        )?;
    }
    w.flush()?;
    if let Some(p) = &outcome.profile {
        let mut w = create(&dir, "limit.csv")?;
        p.limit.write_csv(&mut w)?;
        w.flush()?;
    }
    let mut w = create(&dir, "checks.txt")?;
    for c in &outcome.checks {
        writeln!(w, "{}", c.line())?;
        writeln!(log, "{}", c.line())?;
    }
    w.flush()?;

    let summary = json!({
        "alpha": num(rep.alpha),
        "direction": [num(rep.direction[0]), num(rep.direction[1])],
        "n0": rep.n0,
        "k": rep.k,
        "order": num(rep.order),
        "K": num(rep.k_scale),
        "lambda_0": num(rep.reference.pair.lambda),
        "noise_floor": num(rep.noise_floor),
        "fitted_slope": rep.fit.as_ref().map(|f| num(f.slope)).unwrap_or(Value::Null),
        "r2": rep.fit.as_ref().map(|f| num(f.r2)).unwrap_or(Value::Null),
        "quotient_spread": rep.quotient_spread.map(num).unwrap_or(Value::Null),
        "limit_constant": outcome.profile.as_ref().map(|p| num(p.limit.l)).unwrap_or(Value::Null),
        "invariants": outcome.checks.iter().map(|c| json!({"name": c.name, "pass": c.pass, "detail": c.detail})).collect::<Vec<_>>(),
    });
    let mut w = create(&dir, "summary.json")?;
    writeln!(w, "{}", serde_json::to_string_pretty(&summary).expect("serializable"))?;
    w.flush()?;

    if emit_plots {
        let rows = |f: &dyn Fn(&asymptotics::SweepSample) -> f64| -> Vec<(f64, f64)> {
            rep.samples.iter().map(|s| (s.abs_a, f(s))).collect()
        };
        write_dat(&dir, "diff.dat", "abs_a |lambda_0 - lambda_a|", &rows(&|s| s.diff.abs()))?;
        write_dat(&dir, "h_ratio.dat", "abs_a |a|^order/sqrt(H)", &rows(&|s| s.h_ratio))?;
        write_dat(&dir, "gap.dat", "abs_a gap", &rows(&|s| s.gap))?;
        if outcome.profile.is_some() {
            write_dat(&dir, "blowup.dat", "abs_a distance", &rows(&|s| s.blowup.map(|b| b.distance).unwrap_or(f64::NAN)))?;
        }
        if let Some(p) = &outcome.profile {
            let f: Vec<(f64, f64)> = p.limit.radii.iter().copied().zip(p.limit.f.iter().copied()).collect();
            write_dat(&dir, "limit.dat", "R F(R)", &f)?;
        }
    }
    Ok(outcome)
}

//! Subcommand bodies. Each writes its CSVs (and optional SVGs) into the
//! output directory.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use tfp_core::corrections::{CorrectionSet, Dim};
use tfp_core::groundstate::{
    remainder_study, solve_many, write_profile_csv, write_remainder_csv, GroundState, RemainderRow,
};
use tfp_core::painleve::{solve_hastings_mcleod, w0_min, PainleveSolution};
use tfp_core::semiclassics::{bs_rule_x, bs_table, write_bs_csv, BsRow, PotentialProfile};
use tfp_core::spectrum::{m0_spectrum, scaling_study, write_scaling_csv, ScalingRow};

use crate::config::StudyConfig;
use crate::error::{CliError, StageExt};
use crate::plot::{line_plot, thin, Axes, Series};

pub struct Context {
    pub cfg: StudyConfig,
    pub plots: bool,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    fn write(&self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
        let path = self.path(name);
        let io = |source| CliError::Io { path: path.clone(), source };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        body(&mut w).and_then(|_| w.flush()).map_err(io)?;
        info!("wrote {}", path.display());
        Ok(())
    }

    fn plot(&self, name: &str, svg: impl FnOnce() -> String) -> Result<(), CliError> {
        if self.plots {
            self.write(name, |w| w.write_all(svg().as_bytes()))?;
        }
        Ok(())
    }
}

pub fn prepare_output(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn painleve_stage(ctx: &Context) -> Result<PainleveSolution, CliError> {
    let sol = solve_hastings_mcleod(&ctx.cfg.hm).stage("painleve")?;
    info!("Hastings–McLeod: {} Newton steps, residual {:.2e}", sol.iterations(), sol.residual_max());
    Ok(sol)
}

fn write_painleve(ctx: &Context, sol: &PainleveSolution) -> Result<(), CliError> {
    let (loc, wmin) = w0_min(sol).stage("painleve")?;
    ctx.write("painleve.csv", |w| sol.write_csv(w))?;
    ctx.write("summary.txt", |w| {
        writeln!(w, "nu0(0) = {:.16e}", sol.nu0_at(0.0))?;
        writeln!(w, "W_min = {wmin:.16e}")?;
        writeln!(w, "W_min_location = {loc:.16e}")?;
        writeln!(w, "residual = {:.16e}", sol.residual_max())?;
        writeln!(w, "iterations = {}", sol.iterations())
    })?;
    ctx.plot("painleve.svg", || {
        let y = sol.grid().nodes();
        let nu: Vec<(f64, f64)> = y.iter().copied().zip(sol.nu0().iter().copied()).collect();
        let w0: Vec<(f64, f64)> = y.iter().copied().zip(sol.w0()).filter(|(y, _)| *y <= 10.0).collect();
        line_plot(
            "Hastings–McLeod profile",
            "y",
            "value",
            &[Series::new("nu0", thin(nu, 600)), Series::new("W0 (y <= 10)", thin(w0, 600))],
            Axes::default(),
        )
    })
}

pub fn cmd_painleve(ctx: &Context) -> Result<(), CliError> {
    let sol = painleve_stage(ctx)?;
    write_painleve(ctx, &sol)
}

fn ground_states(ctx: &Context, d: Dim) -> Result<Vec<GroundState>, CliError> {
    let states = solve_many(&ctx.cfg.eps_sorted(), d, &ctx.cfg.gs).stage("groundstate")?;
    for g in &states {
        info!(
            "ground state d={} eps={}: {} steps, residual {:.2e}{}",
            d.value(),
            g.eps(),
            g.iterations(),
            g.residual_max(),
            if g.continued() { " (continuation)" } else { "" }
        );
    }
    Ok(states)
}

fn groundstate_outputs(ctx: &Context, sol: &PainleveSolution) -> Result<(Vec<RemainderRow>, Vec<GroundState>), CliError> {
    let d = ctx.cfg.dim;
    let set = CorrectionSet::build(sol, d, ctx.cfg.order).stage("corrections")?;
    ctx.write("corrections.csv", |w| set.write_csv(w))?;
    let states = ground_states(ctx, d)?;
    for g in &states {
        ctx.write(&format!("profile_eps{}.csv", g.eps()), |w| write_profile_csv(g, sol, &set, w))?;
    }
    let rows = remainder_study(&states, sol, &set, ctx.cfg.order);
    ctx.write("remainder.csv", |w| write_remainder_csv(&rows, w))?;
    ctx.plot("profiles.svg", || {
        let series: Vec<Series> = states
            .iter()
            .map(|g| {
                let pts = g.grid().nodes().iter().copied().zip(g.eta().iter().copied()).collect();
                Series::new(format!("eps={}", g.eps()), thin(pts, 600))
            })
            .collect();
        line_plot("Ground-state profiles", "r", "eta", &series, Axes::default())
    })?;
    ctx.plot("remainder.svg", || {
        let pts = rows.iter().map(|r| (r.eps, r.err)).collect();
        line_plot(
            &format!("Composite remainder, d={}, N={}", d.value(), ctx.cfg.order),
            "eps",
            "sup error",
            &[Series::new("sup |eta - composite|", pts)],
            Axes { log_x: true, log_y: true },
        )
    })?;
    Ok((rows, states))
}

pub fn cmd_groundstate(ctx: &Context) -> Result<(), CliError> {
    let sol = painleve_stage(ctx)?;
    groundstate_outputs(ctx, &sol)?;
    Ok(())
}

fn m0_eigenvalues(ctx: &Context, sol: &PainleveSolution) -> Result<Vec<f64>, CliError> {
    let rep = m0_spectrum(sol, ctx.cfg.n_eigen, false).stage("spectrum")?;
    ctx.write("m0.csv", |w| {
        writeln!(w, "n,mu")?;
        for (i, m) in rep.eigenvalues.iter().enumerate() {
            writeln!(w, "{},{m:.16e}", i + 1)?;
        }
        Ok(())
    })?;
    Ok(rep.eigenvalues)
}

fn scaling_outputs(ctx: &Context, states: &[GroundState], mu: &[f64]) -> Result<Vec<ScalingRow>, CliError> {
    let rows = scaling_study(states, mu, ctx.cfg.n_pairs).stage("spectrum")?;
    ctx.write("scaling.csv", |w| write_scaling_csv(&rows, w))?;
    ctx.plot("scaling.svg", || {
        let mut series = Vec::new();
        for n in 1..=ctx.cfg.n_pairs {
            let pts = rows.iter().filter(|r| r.n == n).map(|r| (r.eps, r.scaled_odd)).collect();
            series.push(Series::new(format!("lambda_{}/eps^(2/3)", 2 * n - 1), pts));
            let flat = rows.iter().filter(|r| r.n == n).map(|r| (r.eps, r.mu_n)).collect();
            series.push(Series::new(format!("mu_{n}"), flat));
        }
        line_plot("Scaled L+ eigenvalues", "eps", "scaled eigenvalue", &series, Axes { log_x: true, log_y: false })
    })?;
    Ok(rows)
}

/// `L₊` is one-dimensional: reuse states solved for d=1, otherwise solve them.
fn one_dim_states(ctx: &Context, have: Option<Vec<GroundState>>) -> Result<Vec<GroundState>, CliError> {
    match have {
        Some(s) if ctx.cfg.dim == Dim::One => Ok(s),
        _ => ground_states(ctx, Dim::One),
    }
}

pub fn cmd_spectrum(ctx: &Context) -> Result<(), CliError> {
    if ctx.cfg.dim != Dim::One {
        return Err(CliError::Config("the spectrum study uses d=1 ground states; set d=1".into()));
    }
    let sol = painleve_stage(ctx)?;
    let mu = m0_eigenvalues(ctx, &sol)?;
    let states = one_dim_states(ctx, None)?;
    scaling_outputs(ctx, &states, &mu)?;
    Ok(())
}

fn bs_outputs(ctx: &Context, sol: &PainleveSolution, mu: &[f64], states: &[GroundState]) -> Result<Vec<BsRow>, CliError> {
    let w0 = PotentialProfile::from_solution(sol).stage("semiclassics")?;
    let rows = bs_table(&w0, &mu[..ctx.cfg.bs_levels]).stage("semiclassics")?;
    ctx.write("bs.csv", |w| write_bs_csv(&rows, w))?;
    let mut xrule = Vec::new();
    for g in states {
        for n in 1..=ctx.cfg.n_pairs {
            xrule.push((g.eps(), n, bs_rule_x(g, n).stage("semiclassics")?));
        }
    }
    ctx.write("xrule.csv", |w| {
        writeln!(w, "eps,n,lambda,scaled")?;
        for (e, n, r) in &xrule {
            writeln!(w, "{e:.16e},{n},{:.16e},{:.16e}", r.lambda, r.scaled)?;
        }
        Ok(())
    })?;
    ctx.plot("bs.svg", || {
        let bs = rows.iter().map(|r| (r.n as f64, r.rel_err)).collect();
        line_plot(
            "Bohr–Sommerfeld vs M0",
            "n",
            "relative error",
            &[Series::new("|mu_bs - mu_n| / mu_n", bs)],
            Axes { log_x: true, log_y: true },
        )
    })?;
    Ok(rows)
}

pub fn cmd_bs(ctx: &Context) -> Result<(), CliError> {
    let sol = painleve_stage(ctx)?;
    let mu = m0_eigenvalues(ctx, &sol)?;
    let states = one_dim_states(ctx, None)?;
    bs_outputs(ctx, &sol, &mu, &states)?;
    Ok(())
}

/// Painlevé → corrections → ground states → remainder → scaling → BS.
pub fn cmd_study(ctx: &Context) -> Result<(), CliError> {
    let sol = painleve_stage(ctx)?;
    write_painleve(ctx, &sol)?;
    let (rows, states) = groundstate_outputs(ctx, &sol)?;
    for r in &rows {
        if let Some(p) = r.order {
            info!("remainder eps={} err={:.3e} order={p:.3}", r.eps, r.err);
        }
    }
    let mu = m0_eigenvalues(ctx, &sol)?;
    let states = one_dim_states(ctx, Some(states))?;
    scaling_outputs(ctx, &states, &mu)?;
    bs_outputs(ctx, &sol, &mu, &states)?;
    Ok(())
}

//! Scenario execution: every scenario writes frames, tables, metrics and plots through an
//! [`OutputSet`] and returns its metrics.

use std::path::PathBuf;

use num_complex::Complex64;
use serde_json::{json, Value};

use wpb_core::brigade::{generate_trajectory_basis, thin, BrigadeConfig, BrigadePropagator};
use wpb_core::linalg::CVector;
use wpb_core::oracle::{evolve_real_time, lowest_eigenpairs, GridSpec, GridState, MAX_DENSE_POINTS};
use wpb_core::packets::GeneralizedGaussian;
use wpb_core::potentials::{effective_quadratic, PotentialSpec};
use wpb_core::propagators::{coherent_trajectory, free_evolve, harmonic_evolve};
use wpb_core::tunneling::{
    augmented_basis, find_stationary_gaussians, instanton_trajectory, smoothed_hamiltonian, splitting_and_transfer,
    MomentumMode, StationaryWell,
};

use crate::config::{MomentumChoice, PotentialKind, Scenario, ScenarioConfig};
use crate::error::CliError;
use crate::output::{sha256_hex, Manifest, OutputSet, Table};
use crate::plot::{line_plot, Series};

/// Output directory used when neither `--out` nor the config sets one.
pub const OUT_DIR_ENV: &str = "WPB_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "wpb_out";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub frames_every: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub metrics: Value,
    pub manifest: Manifest,
}

/// Precedence: explicit option, then the environment variable, then the config, then the
/// built-in default.
pub fn resolve_out_dir(cfg: &ScenarioConfig, opts: &RunOptions) -> PathBuf {
    opts.out_dir
        .clone()
        .or_else(|| {
            std::env::var_os(OUT_DIR_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        })
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

pub fn config_digest(cfg: &ScenarioConfig) -> String {
    sha256_hex(cfg.canonical_json().as_bytes())
}

/// Run a scenario. On failure the manifest is still written, flagged incomplete, and the
/// original error is returned.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunReport, CliError> {
    let out_dir = resolve_out_dir(cfg, opts);
    let mut out = OutputSet::create(&out_dir)?;
    let digest = config_digest(cfg);
    let frames_every = opts.frames_every.unwrap_or(cfg.time.frames_every).max(1);
    let ctx = Context::new(cfg, frames_every)?;
    match execute(&ctx, &mut out) {
        Ok(metrics) => {
            out.write_json("metrics.json", &metrics)?;
            let metadata = ctx.metadata(&digest, &out);
            out.write_json("metadata.json", &metadata)?;
            let manifest = out.finish(cfg.scenario.name(), &digest, None)?;
            Ok(RunReport {
                out_dir,
                metrics,
                manifest,
            })
        }
        Err(err) => {
            out.finish(cfg.scenario.name(), &digest, Some(err.to_string()))?;
            Err(err)
        }
    }
}

struct Context<'a> {
    cfg: &'a ScenarioConfig,
    pot: PotentialSpec,
    spec: GridSpec,
    frames_every: usize,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a ScenarioConfig, frames_every: usize) -> Result<Self, CliError> {
        let p = &cfg.potential;
        let pot = match cfg.scenario.potential_kind() {
            PotentialKind::Free => PotentialSpec::free(p.m),
            PotentialKind::Harmonic => PotentialSpec::harmonic(p.m, p.omega),
            PotentialKind::Quartic => PotentialSpec::quartic(p.m, p.lambda),
            PotentialKind::DoubleWell => PotentialSpec::double_well(p.m, p.lambda, p.f),
        }?;
        let g = &cfg.grid;
        let spec = GridSpec::new(g.x_min, g.x_max, g.n_points, g.dt)?;
        Ok(Self {
            cfg,
            pot,
            spec,
            frames_every,
        })
    }

    fn packet(&self) -> Result<GeneralizedGaussian, CliError> {
        let p = &self.cfg.packet;
        Ok(GeneralizedGaussian::new(p.center, p.momentum, Complex64::new(p.gamma_re, p.gamma_im))?.normalize())
    }

    fn brigade_config(&self) -> BrigadeConfig {
        let b = &self.cfg.brigade;
        BrigadeConfig {
            dt: b.dt,
            n_steps: b.n_steps,
            significance_eps: b.significance_eps,
            renormalize_each_step: false,
        }
    }

    fn times(&self) -> Vec<f64> {
        let n = self.cfg.time.n_frames;
        (0..=n).map(|k| self.cfg.time.t_end * k as f64 / n as f64).collect()
    }

    fn is_frame(&self, k: usize) -> bool {
        k.is_multiple_of(self.frames_every)
    }

    fn frame_times(&self) -> Vec<f64> {
        self.times()
            .into_iter()
            .enumerate()
            .filter(|(k, _)| self.is_frame(*k))
            .map(|(_, t)| t)
            .collect()
    }

    fn metadata(&self, digest: &str, out: &OutputSet) -> Value {
        let frame_dirs: Vec<&str> = ["frames", "oracle_frames"]
            .into_iter()
            .filter(|d| out.entries().iter().any(|e| e.path.starts_with(&format!("{d}/"))))
            .collect();
        json!({
            "scenario": self.cfg.scenario.name(),
            "config": serde_json::to_value(self.cfg).expect("config serializes"),
            "config_sha256": digest,
            "potential": self.pot.kind(),
            "grid": {
                "x_min": self.spec.x_min,
                "x_max": self.spec.x_max,
                "n_points": self.spec.n_points,
                "dx": self.spec.dx(),
                "dt": self.spec.dt,
            },
            "frames": {
                "directories": frame_dirs,
                "every": self.frames_every,
                "format": "t,x,re_psi,im_psi",
                "times": if frame_dirs.is_empty() { Vec::new() } else { self.frame_times() },
            },
        })
    }
}

fn execute(ctx: &Context, out: &mut OutputSet) -> Result<Value, CliError> {
    match ctx.cfg.scenario {
        Scenario::Free | Scenario::Harmonic => closed_form(ctx, out),
        Scenario::Coherent => coherent(ctx, out),
        Scenario::Anharmonic => anharmonic(ctx, out, false),
        Scenario::Compare => anharmonic(ctx, out, true),
        Scenario::DoubleWellStationary => stationary(ctx, out),
        Scenario::Instanton => instanton(ctx, out),
        Scenario::TunnelingDynamics => tunneling(ctx, out),
    }
}

fn samples(g: &GeneralizedGaussian, xs: &[f64]) -> Vec<Complex64> {
    xs.iter().map(|&x| g.amplitude(x)).collect()
}

fn wavefunction_plot(title: &str, xs: &[f64], psi: &[Complex64], reference: Option<&[Complex64]>) -> String {
    let mut series = vec![
        Series::new("Re psi", xs.to_vec(), psi.iter().map(|z| z.re).collect()),
        Series::new("Im psi", xs.to_vec(), psi.iter().map(|z| z.im).collect()),
        Series::new("|psi|^2", xs.to_vec(), psi.iter().map(|z| z.norm_sqr()).collect()),
    ];
    if let Some(r) = reference {
        series.push(Series::new("|psi|^2 grid", xs.to_vec(), r.iter().map(|z| z.norm_sqr()).collect()).dashed());
    }
    line_plot(title, "x", "amplitude", &series, false)
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// `min_φ ‖ψ − e^{iφ} ψ_0‖` on the grid.
fn phase_rotated_deviation(psi: &GridState, psi0: &GridState) -> Result<f64, CliError> {
    let ov = psi0.inner(psi)?;
    let phase = if ov.norm() > 0.0 {
        ov / ov.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let rotated = GridState::new(psi0.spec, psi0.amplitudes.iter().map(|z| z * phase).collect())?;
    Ok(psi.l2_error(&rotated)?)
}

/// Free or harmonic: closed-form packet against the grid oracle.
fn closed_form(ctx: &Context, out: &mut OutputSet) -> Result<Value, CliError> {
    let g0 = ctx.packet()?;
    let (m, omega) = (ctx.cfg.potential.m, ctx.cfg.potential.omega);
    let harmonic = ctx.cfg.scenario == Scenario::Harmonic;
    let evolve = |t: f64| {
        if harmonic {
            harmonic_evolve(&g0, m, omega, t)
        } else {
            free_evolve(&g0, m, t)
        }
    };
    let xs = ctx.spec.points();
    let psi0 = GridState::sample_packet(&g0, ctx.spec)?;
    let mut grid = psi0.clone();
    let mut table = Table::new(&[
        "t",
        "center",
        "momentum",
        "gamma_re",
        "gamma_im",
        "norm",
        "l2_vs_grid",
        "phase_rotated_deviation",
    ]);
    let times = ctx.times();
    let mut last = (Vec::new(), Vec::new());
    for (k, &t) in times.iter().enumerate() {
        if k > 0 {
            grid = evolve_real_time(&grid, &ctx.pot, t - times[k - 1])?;
        }
        let g = evolve(t)?;
        let exact = GridState::sample_packet(&g, ctx.spec)?;
        let l2 = exact.l2_error(&grid)?;
        let dev = phase_rotated_deviation(&exact, &psi0)?;
        table.push(vec![
            t,
            g.center,
            g.momentum,
            g.width.re,
            g.width.im,
            g.norm_sq().sqrt(),
            l2,
            dev,
        ]);
        if ctx.is_frame(k) {
            out.write_frame("frames", k, t, &xs, &exact.amplitudes)?;
        }
        last = (exact.amplitudes, grid.amplitudes.clone());
    }
    out.write_table("trajectory.csv", &table)?;
    let ts = table.column("t");
    let errs = table.column("l2_vs_grid");
    out.write(
        "plots/final_frame.svg",
        wavefunction_plot(
            &format!("{} packet at t = {:.3}", ctx.pot.kind(), ctx.cfg.time.t_end),
            &xs,
            &last.0,
            Some(&last.1),
        )
        .as_bytes(),
    )?;
    out.write(
        "plots/l2_vs_grid.svg",
        line_plot(
            "closed form vs grid",
            "t",
            "L2 error",
            &[Series::new("L2", ts, errs.clone())],
            true,
        )
        .as_bytes(),
    )?;
    let norms = table.column("norm");
    let mut metrics = json!({
        "max_l2_vs_grid": max_abs(&errs),
        "max_norm_drift": norms.iter().fold(0.0f64, |a, n| a.max((n - 1.0).abs())),
        "max_phase_rotated_deviation": max_abs(&table.column("phase_rotated_deviation")),
        "final_gamma": [table.rows.last().map(|r| r[3]), table.rows.last().map(|r| r[4])],
    });
    if harmonic {
        metrics["gamma_fixed_point"] = json!((g0.width - Complex64::new(m * omega, 0.0)).norm() < 1e-12);
    }
    Ok(metrics)
}

fn coherent(ctx: &Context, out: &mut OutputSet) -> Result<Value, CliError> {
    let g0 = ctx.packet()?;
    let (m, omega) = (ctx.cfg.potential.m, ctx.cfg.potential.omega);
    let xs = ctx.spec.points();
    let mut table = Table::new(&[
        "t",
        "x_classical",
        "p_classical",
        "center",
        "momentum",
        "gamma_re",
        "gamma_im",
        "deviation",
    ]);
    for (k, &t) in ctx.times().iter().enumerate() {
        let cp = coherent_trajectory(g0.center, g0.momentum, m, omega, t)?;
        let g = harmonic_evolve(&g0, m, omega, t)?;
        let dev = (g.center - cp.x).abs().max((g.momentum - cp.p).abs());
        table.push(vec![t, cp.x, cp.p, g.center, g.momentum, g.width.re, g.width.im, dev]);
        if ctx.is_frame(k) {
            out.write_frame("frames", k, t, &xs, &samples(&g, &xs))?;
        }
    }
    out.write_table("trajectory.csv", &table)?;
    let ts = table.column("t");
    out.write(
        "plots/trajectory.svg",
        line_plot(
            "packet center vs classical orbit",
            "t",
            "x",
            &[
                Series::new("classical", ts.clone(), table.column("x_classical")),
                Series::new("packet center", ts, table.column("center")).dashed(),
            ],
            false,
        )
        .as_bytes(),
    )?;
    let widths = table.column("gamma_re");
    Ok(json!({
        "max_center_deviation": max_abs(&table.column("deviation")),
        "width_range": [widths.iter().cloned().fold(f64::INFINITY, f64::min), widths.iter().cloned().fold(f64::NEG_INFINITY, f64::max)],
        "is_coherent_state": (g0.width - Complex64::new(m * omega, 0.0)).norm() < 1e-12,
    }))
}

fn brigade_state(prop: &BrigadePropagator, modes: &CVector, spec: GridSpec, xs: &[f64]) -> Result<GridState, CliError> {
    let coeffs = prop.transform().packet_coeffs_from_modes(modes)?;
    Ok(GridState::new(spec, prop.sample(&coeffs, xs)?)?)
}

/// Quartic brigade run; with `compare` the grid oracle runs alongside.
fn anharmonic(ctx: &Context, out: &mut OutputSet, compare: bool) -> Result<Value, CliError> {
    let g0 = ctx.packet()?;
    let bcfg = ctx.brigade_config();
    let trajectory = generate_trajectory_basis(&g0, &ctx.pot, &bcfg)?;
    let packets = thin(&trajectory, ctx.cfg.brigade.thin);
    let prop = BrigadePropagator::new(&packets, &ctx.pot, bcfg.significance_eps)?;
    let h = &prop.hamiltonian;
    let xs = ctx.spec.points();
    let modes0 = prop.modes_of(&g0)?;
    let (n0, e0) = (modes0.norm(), h.expectation(&modes0));
    let mut grid = GridState::from_packet(&g0, ctx.spec)?;

    let mut table = Table::new(&["t", "coefficient_norm", "energy", "mean_x", "l2_vs_grid", "grid_mean_x"]);
    let times = ctx.times();
    let mut last = (Vec::new(), Vec::new());
    for (k, &t) in times.iter().enumerate() {
        let modes = h.evolve_modes(&modes0, t)?;
        let state = brigade_state(&prop, &modes, ctx.spec, &xs)?;
        let (l2, grid_x) = if compare {
            if k > 0 {
                grid = evolve_real_time(&grid, &ctx.pot, t - times[k - 1])?;
            }
            (state.l2_error(&grid)?, grid.expectation_x())
        } else {
            (f64::NAN, f64::NAN)
        };
        table.push(vec![
            t,
            modes.norm(),
            h.expectation(&modes),
            state.expectation_x(),
            l2,
            grid_x,
        ]);
        if ctx.is_frame(k) {
            out.write_frame("frames", k, t, &xs, &state.amplitudes)?;
            if compare {
                out.write_frame("oracle_frames", k, t, &xs, &grid.amplitudes)?;
            }
        }
        last = (state.amplitudes, grid.amplitudes.clone());
    }
    if !compare {
        table.headers.truncate(4);
        for row in &mut table.rows {
            row.truncate(4);
        }
    }
    out.write_table("trajectory.csv", &table)?;

    let ts = table.column("t");
    let mut center_series = vec![Series::new("brigade <x>", ts.clone(), table.column("mean_x"))];
    if compare {
        center_series.push(Series::new("grid <x>", ts.clone(), table.column("grid_mean_x")).dashed());
    }
    out.write(
        "plots/mean_x.svg",
        line_plot("packet center", "t", "<x>", &center_series, false).as_bytes(),
    )?;
    out.write(
        "plots/final_frame.svg",
        wavefunction_plot(
            &format!("brigade state at t = {:.3}", ctx.cfg.time.t_end),
            &xs,
            &last.0,
            compare.then_some(last.1.as_slice()),
        )
        .as_bytes(),
    )?;

    let norm_drift = table
        .column("coefficient_norm")
        .iter()
        .fold(0.0f64, |a, n| a.max((n - n0).abs()));
    let energy_drift = table.column("energy").iter().fold(0.0f64, |a, e| a.max((e - e0).abs()));
    let mut metrics = json!({
        "trajectory_packets": trajectory.len(),
        "basis_packets": packets.len(),
        "retained_modes": h.retained_modes(),
        "discarded_modes": prop.transform().discarded_eigenvalues.len(),
        "initial_energy": e0,
        "coefficient_norm_drift": norm_drift,
        "energy_drift": energy_drift,
        "lowest_energies": h.energies.iter().take(6).collect::<Vec<_>>(),
    });
    if compare {
        let errs = table.column("l2_vs_grid");
        out.write(
            "plots/l2_vs_grid.svg",
            line_plot(
                "brigade vs grid",
                "t",
                "L2 error",
                &[Series::new("L2", ts.clone(), errs.clone())],
                true,
            )
            .as_bytes(),
        )?;
        metrics["max_l2_vs_grid"] = json!(max_abs(&errs));
        metrics["l2_vs_grid"] = json!(ts.iter().zip(&errs).map(|(t, e)| [*t, *e]).collect::<Vec<_>>());
    }
    Ok(metrics)
}

fn wells(ctx: &Context) -> Result<(StationaryWell, StationaryWell), CliError> {
    Ok(find_stationary_gaussians(&ctx.pot)?)
}

fn stationary(ctx: &Context, out: &mut OutputSet) -> Result<Value, CliError> {
    let (left, right) = wells(ctx)?;
    let mut table = Table::new(&["side", "center", "width", "force_residual", "width_residual"]);
    for (side, w) in [(-1.0, left), (1.0, right)] {
        table.push(vec![
            side,
            w.center,
            w.width,
            w.force_residual(&ctx.pot),
            w.width_residual(&ctx.pot),
        ]);
    }
    out.write_table("wells.csv", &table)?;

    // The left packet under repeated local-quadratic steps should stay put.
    let bcfg = ctx.brigade_config();
    let steps = generate_trajectory_basis(&left.packet(), &ctx.pot, &bcfg)?;
    let xs = ctx.spec.points();
    let mut traj = Table::new(&["t", "center", "momentum", "gamma_re", "gamma_im", "mean_force"]);
    for (k, g) in steps.iter().enumerate() {
        let t = k as f64 * bcfg.dt;
        let params = effective_quadratic(&ctx.pot, g)?;
        traj.push(vec![t, g.center, g.momentum, g.width.re, g.width.im, -params.f_n]);
        if ctx.is_frame(k) {
            out.write_frame("frames", k, t, &xs, &samples(g, &xs))?;
        }
    }
    out.write_table("trajectory.csv", &traj)?;
    let potential: Vec<f64> = xs.iter().map(|&x| ctx.pot.value(x)).collect();
    let vmax = ctx.pot.value(0.0) * 2.0;
    let shown: Vec<usize> = (0..xs.len()).filter(|&j| potential[j] <= vmax).collect();
    let px: Vec<f64> = shown.iter().map(|&j| xs[j]).collect();
    let scale = ctx.pot.value(0.0);
    let density = |w: &StationaryWell| {
        shown
            .iter()
            .map(|&j| w.packet().amplitude(xs[j]).norm_sqr() * scale)
            .collect::<Vec<_>>()
    };
    out.write(
        "plots/wells.svg",
        line_plot(
            "stationary Gaussians in the double well",
            "x",
            "V(x), scaled |psi|^2",
            &[
                Series::new("V(x)", px.clone(), shown.iter().map(|&j| potential[j]).collect()),
                Series::new("left |psi|^2", px.clone(), density(&left)).dashed(),
                Series::new("right |psi|^2", px, density(&right)).dashed(),
            ],
            false,
        )
        .as_bytes(),
    )?;
    let centers = traj.column("center");
    let widths = traj.column("gamma_re");
    Ok(json!({
        "center": right.center,
        "width": right.width,
        "max_force_residual": max_abs(&table.column("force_residual")),
        "max_width_residual": max_abs(&table.column("width_residual")),
        "max_center_drift": centers.iter().fold(0.0f64, |a, c| a.max((c - left.center).abs())),
        "max_relative_width_change": widths.iter().fold(0.0f64, |a, w| a.max((w - left.width).abs() / left.width)),
    }))
}

fn instanton(ctx: &Context, out: &mut OutputSet) -> Result<Value, CliError> {
    let (left, _) = wells(ctx)?;
    let path = instanton_trajectory(&ctx.pot, &left, ctx.cfg.tunneling.instanton_samples)?;
    let energy = path.energy_residuals(1e-3);
    let ode = path.ode_residuals(1e-2);
    let mut table = Table::new(&["tau", "x", "p", "energy_residual", "ode_residual"]);
    for ((s, e), r) in path.samples.iter().zip(&energy).zip(&ode) {
        table.push(vec![s.tau, s.x, s.p, *e, *r]);
    }
    out.write_table("instanton.csv", &table)?;

    let n = 400;
    let span = 1.5 * path.tau_total;
    let taus: Vec<f64> = (0..=n)
        .map(|k| -0.25 * path.tau_total + span * k as f64 / n as f64)
        .collect();
    let curve: Vec<f64> = taus.iter().map(|&t| path.position_at(t)).collect();
    out.write(
        "plots/instanton.svg",
        line_plot(
            "bounce between the wells",
            "tau",
            "x",
            &[
                Series::new("x(tau)", taus, curve),
                Series::new("samples", table.column("tau"), table.column("x")).dashed(),
            ],
            false,
        )
        .as_bytes(),
    )?;
    let (m, lambda, f) = (ctx.cfg.potential.m, ctx.cfg.potential.lambda, ctx.cfg.potential.f);
    let mid = path.position_at(0.5 * path.tau_total);
    let h = 1e-4;
    let mid_slope =
        (path.position_at(0.5 * path.tau_total + h) - path.position_at(0.5 * path.tau_total - h)) / (2.0 * h);
    Ok(json!({
        "c_min": path.c_min,
        "tau_total": path.tau_total,
        "endpoint_offset": path.endpoint_offset,
        "euclidean_energy": path.euclidean_energy(),
        "max_abs_energy_residual": max_abs(&energy),
        "max_abs_ode_residual": max_abs(&ode),
        "mid_position": mid,
        "mid_slope": mid_slope,
        "kink_slope": f * f * (2.0 * lambda / m).sqrt(),
    }))
}

fn tunneling(ctx: &Context, out: &mut OutputSet) -> Result<Value, CliError> {
    let wells = wells(ctx)?;
    let tcfg = &ctx.cfg.tunneling;
    let path = instanton_trajectory(&ctx.pot, &wells.0, tcfg.instanton_samples)?;
    let mode = match tcfg.momentum_mode {
        MomentumChoice::Frozen => MomentumMode::Frozen,
        MomentumChoice::WithMomentum => MomentumMode::WithMomentum,
    };
    let packets = augmented_basis(&wells, &path, mode)?;
    let n = packets.len();
    let eps = ctx.cfg.brigade.significance_eps;
    let prop = BrigadePropagator::new(&packets, &ctx.pot, eps)?;
    let left: Vec<usize> = (0..n / 2).collect();
    let right: Vec<usize> = (n / 2..n).collect();
    let summary = splitting_and_transfer(&prop.hamiltonian, &left, &right)?;
    let pair = BrigadePropagator::new(&[wells.0.packet(), wells.1.packet()], &ctx.pot, eps)?;
    let pair_delta = splitting_and_transfer(&pair.hamiltonian, &[0], &[1])?.delta_e;

    let oracle = if ctx.spec.n_points <= MAX_DENSE_POINTS {
        let levels = lowest_eigenpairs(&ctx.pot, &ctx.spec, 2)?;
        Some((levels[0].0, levels[1].0))
    } else {
        None
    };
    let smoothed = if tcfg.smoothing_tau > 0.0 {
        let s = smoothed_hamiltonian(&packets, &ctx.pot, tcfg.smoothing_tau, &ctx.spec, eps)?;
        Some(s.energies.iter().take(2).copied().collect::<Vec<_>>())
    } else {
        None
    };

    let xs = ctx.spec.points();
    let modes0 = prop.modes_of(&wells.0.packet())?;
    let n0 = modes0.norm();
    let mut table = Table::new(&["t", "p_left", "p_right", "coefficient_norm", "energy"]);
    for (k, &t) in ctx.times().iter().enumerate() {
        let modes = prop.hamiltonian.evolve_modes(&modes0, t)?;
        let state = brigade_state(&prop, &modes, ctx.spec, &xs)?;
        let total = state.norm().powi(2);
        let p_left = state.probability_where(|x| x < 0.0) / total;
        table.push(vec![
            t,
            p_left,
            1.0 - p_left,
            modes.norm(),
            prop.hamiltonian.expectation(&modes),
        ]);
        if ctx.is_frame(k) {
            out.write_frame("frames", k, t, &xs, &state.amplitudes)?;
        }
    }
    out.write_table("populations.csv", &table)?;
    let ts = table.column("t");
    let p_left = table.column("p_left");
    out.write(
        "plots/populations.svg",
        line_plot(
            "well populations",
            "t",
            "probability",
            &[
                Series::new("left", ts.clone(), p_left.clone()),
                Series::new("right", ts.clone(), table.column("p_right")).dashed(),
            ],
            false,
        )
        .as_bytes(),
    )?;

    // Time of the lowest left-well population within the first transfer period.
    let window = (2.0 * summary.transfer_time).min(ctx.cfg.time.t_end);
    let observed = ts
        .iter()
        .zip(&p_left)
        .filter(|(t, _)| **t <= window)
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(t, _)| *t);
    let mut metrics = json!({
        "basis_packets": n,
        "retained_modes": prop.hamiltonian.retained_modes(),
        "ground_energy": summary.ground_energy,
        "delta_e": summary.delta_e,
        "transfer_time": summary.transfer_time,
        "rate": summary.rate,
        "transfer_probability": summary.transfer_probability,
        "two_gaussian_delta_e": pair_delta,
        "observed_half_period": observed,
        "coefficient_norm_drift": table.column("coefficient_norm").iter().fold(0.0f64, |a, v| a.max((v - n0).abs())),
        "well_center": wells.1.center,
        "well_width": wells.1.width,
    });
    if let Some((e0, e1)) = oracle {
        metrics["oracle_energies"] = json!([e0, e1]);
        metrics["oracle_delta_e"] = json!(e1 - e0);
        metrics["delta_e_ratio"] = json!(summary.delta_e / (e1 - e0));
        metrics["two_gaussian_ratio"] = json!(pair_delta / (e1 - e0));
    }
    if let Some(s) = smoothed {
        metrics["smoothing_tau"] = json!(tcfg.smoothing_tau);
        metrics["smoothed_energies"] = json!(s);
    }
    Ok(metrics)
}

/// Lowest grid levels and, where a natural basis exists, the projected brigade levels.
pub fn spectrum(cfg: &ScenarioConfig, levels: usize) -> Result<Value, CliError> {
    let ctx = Context::new(cfg, 1)?;
    let oracle: Vec<f64> = lowest_eigenpairs(&ctx.pot, &ctx.spec, levels)?
        .into_iter()
        .map(|(e, _)| e)
        .collect();
    let eps = cfg.brigade.significance_eps;
    let (basis, prop) = if cfg.scenario.potential_kind() == PotentialKind::DoubleWell {
        let wells = wells(&ctx)?;
        let path = instanton_trajectory(&ctx.pot, &wells.0, cfg.tunneling.instanton_samples)?;
        let packets = augmented_basis(&wells, &path, MomentumMode::Frozen)?;
        ("wells+instanton", BrigadePropagator::new(&packets, &ctx.pot, eps)?)
    } else {
        let packets = generate_trajectory_basis(&ctx.packet()?, &ctx.pot, &ctx.brigade_config())?;
        (
            "trajectory",
            BrigadePropagator::new(&thin(&packets, cfg.brigade.thin), &ctx.pot, eps)?,
        )
    };
    Ok(json!({
        "scenario": cfg.scenario.name(),
        "potential": ctx.pot.kind(),
        "oracle": oracle,
        "brigade": {
            "basis": basis,
            "retained_modes": prop.hamiltonian.retained_modes(),
            "energies": prop.hamiltonian.energies.iter().take(levels).collect::<Vec<_>>(),
        },
    }))
}

//! Parameter sweeps: the vanishing-dissipation limit and its rate, the uniform
//! H1 bound, scaling covariance, plus the benchmark initial data they use.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::evolve::{solve_spectral, SolverConfig, Trajectory};
use crate::fit::{log_log, LineFit};
use crate::norms::{homogeneous_sq, sobolev_norm};
use crate::propagator::ModelParams;
use crate::spectral::{dealias, forward_transform, GridSpec, RealField, SpectralField};

/// Lowest Sobolev index reached by the bilinear estimate: `-3/4` up to
/// `alpha = 1/2`, then `-3 / (5 - 2 alpha)`.
pub fn critical_index(alpha: f64) -> Result<f64> {
    check_range(
        "alpha",
        alpha,
        alpha > 0.0 && alpha <= 1.0,
        "0 < alpha <= 1",
    )?;
    Ok(if alpha <= 0.5 {
        -0.75
    } else {
        -3.0 / (5.0 - 2.0 * alpha)
    })
}

fn periodic_offset(x: f64, x0: f64, l: f64) -> f64 {
    let d = (x - x0).rem_euclid(l);
    if d > l / 2.0 {
        d - l
    } else {
        d
    }
}

/// KdV soliton `(3c/2) sech^2(sqrt(c)/2 (x - x0))`, measured from the nearest
/// periodic image of `x0`.
pub fn soliton_initial_data(c: f64, x0: f64, grid: &GridSpec) -> Result<RealField> {
    check_range("c", c, c > 0.0, "c > 0")?;
    let l = grid.box_length();
    let edge = 1.5 * c / (0.25 * c.sqrt() * l).cosh().powi(2);
    if edge > 1e-12 {
        return Err(Error::Config(format!(
            "box of length {l} is too short for speed {c}: profile is {edge:e} at the edge"
        )));
    }
    Ok(RealField::from_fn(*grid, |x| {
        let z = 0.5 * c.sqrt() * periodic_offset(x, x0, l);
        1.5 * c / z.cosh().powi(2)
    }))
}

/// Soliton translated to time `t`.
pub fn soliton_at(c: f64, x0: f64, t: f64, grid: &GridSpec) -> Result<RealField> {
    soliton_initial_data(c, x0 + c * t, grid)
}

/// Periodized Gaussian of the given width centred at `L/2`, scaled to the
/// requested L2 norm.
pub fn smooth_initial_data(grid: &GridSpec, width: f64, l2_norm: f64) -> Result<RealField> {
    check_range("width", width, width > 0.0, "width > 0")?;
    let l = grid.box_length();
    let images = (6.0 * width / l).ceil() as i32 + 1;
    let raw = RealField::from_fn(*grid, |x| {
        (-images..=images)
            .map(|j| {
                let d = x - l / 2.0 + j as f64 * l;
                (-0.5 * d * d / (width * width)).exp()
            })
            .sum()
    });
    let scale = l2_norm / raw.l2_norm();
    RealField::new(*grid, raw.values().iter().map(|v| v * scale).collect())
}

/// Zero-mean data with `|c_k| = <xi_k>^(-decay)` and seeded uniform phases on
/// the dealiased band, scaled to the requested L2 norm.
pub fn rough_initial_data(
    grid: &GridSpec,
    decay: f64,
    l2_norm: f64,
    seed: u64,
) -> Result<SpectralField> {
    check_range("decay", decay, decay > 0.0, "decay > 0")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cutoff = grid.dealias_cutoff();
    let phases: Vec<f64> = (0..=cutoff).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    let dxi = grid.dxi();
    let raw = SpectralField::from_modes(*grid, |k| {
        if k == 0 || k.abs() > cutoff {
            return Complex64::new(0.0, 0.0);
        }
        let xi = k as f64 * dxi;
        let c = Complex64::from_polar(
            (1.0 + xi * xi).powf(-0.5 * decay),
            phases[k.unsigned_abs() as usize],
        );
        if k > 0 {
            c
        } else {
            c.conj()
        }
    });
    Ok(raw.scaled(l2_norm / raw.l2_norm()))
}

/// One sweep over a parameter ladder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub experiment: String,
    pub parameter: String,
    pub alpha: f64,
    /// Sobolev index of the observable, when it has one.
    pub s: Option<f64>,
    pub ladder: Vec<f64>,
    pub observables: Vec<f64>,
    pub fit: Option<LineFit>,
    /// Reference error levels the observables are compared against.
    pub floors: Vec<f64>,
    pub seed: Option<u64>,
    pub grid: GridSpec,
    pub dt: f64,
    pub t_final: f64,
}

impl SweepReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.observables.windows(2).all(|w| w[1] < w[0])
    }

    /// `max / min` of the observables.
    pub fn spread(&self) -> f64 {
        let max = self
            .observables
            .iter()
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let min = self
            .observables
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        max / min
    }

    pub fn to_csv(&self) -> String {
        use crate::output::fmt17;
        let mut out = format!("{},observable\n", self.parameter);
        for (p, o) in self.ladder.iter().zip(&self.observables) {
            out.push_str(&format!("{},{}\n", fmt17(*p), fmt17(*o)));
        }
        out
    }
}

fn strictly_monotone(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0]) || values.windows(2).all(|w| w[1] > w[0])
}

fn sup_distance(a: &Trajectory, b: &Trajectory, s: f64) -> Result<f64> {
    if a.times.len() != b.times.len() {
        return Err(Error::Contract(
            "trajectories have different snapshot counts".into(),
        ));
    }
    let mut sup = 0.0f64;
    for (u, v) in a.states.iter().zip(&b.states) {
        sup = sup.max(sobolev_norm(&u.difference(v)?, s));
    }
    Ok(sup)
}

fn run(u0: &SpectralField, cfg: &SolverConfig, params: ModelParams) -> Result<Trajectory> {
    solve_spectral(u0, &cfg.with_params(params))
}

/// `sup_t ||u^{dt} - u^{dt/2}||_{H^s}` for the undamped flow, at the snapshot times of `cfg`.
pub fn self_convergence_floor(
    u0: &SpectralField,
    alpha: f64,
    s: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    let kdv = ModelParams::kdv(alpha)?;
    let coarse = run(u0, cfg, kdv)?;
    let mut fine_cfg = *cfg;
    fine_cfg.dt = cfg.dt / 2.0;
    fine_cfg.snapshot_stride = 2 * cfg.snapshot_stride;
    let fine = run(u0, &fine_cfg, kdv)?;
    sup_distance(&coarse, &fine, s)
}

/// Inviscid-limit sweeps for several Sobolev indices sharing the same solves.
///
/// For each `eps` the observable is `sup_t ||u_eps(t) - u_0(t)||_{H^s}` over
/// the snapshot times; `floors` holds the undamped dt-halving difference.
pub fn inviscid_sweeps(
    u0: &SpectralField,
    alpha: f64,
    eps_ladder: &[f64],
    s_list: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<SweepReport>> {
    if eps_ladder.is_empty() || !strictly_monotone(eps_ladder) {
        return Err(Error::Config(
            "epsilon ladder must be strictly monotone".into(),
        ));
    }
    for &e in eps_ladder {
        check_range("epsilon", e, e > 0.0 && e <= 1.0, "0 < epsilon <= 1")?;
    }
    for &s in s_list {
        check_range("s", s, s <= 0.0, "s <= 0")?;
    }
    let reference = run(u0, cfg, ModelParams::kdv(alpha)?)?;
    let damped = eps_ladder
        .par_iter()
        .map(|&e| run(u0, cfg, ModelParams::new(e, alpha)?))
        .collect::<Result<Vec<_>>>()?;
    let floors = s_list
        .par_iter()
        .map(|&s| self_convergence_floor(u0, alpha, s, cfg))
        .collect::<Result<Vec<_>>>()?;
    s_list
        .iter()
        .zip(floors)
        .map(|(&s, floor)| {
            let observables = damped
                .iter()
                .map(|traj| sup_distance(traj, &reference, s))
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepReport {
                experiment: "inviscid".into(),
                parameter: "epsilon".into(),
                alpha,
                s: Some(s),
                ladder: eps_ladder.to_vec(),
                observables,
                fit: None,
                floors: vec![floor],
                seed: None,
                grid: cfg.grid,
                dt: cfg.dt,
                t_final: cfg.t_final,
            })
        })
        .collect()
}

pub fn inviscid_sweep(
    phi: &RealField,
    alpha: f64,
    eps_ladder: &[f64],
    s: f64,
    cfg: &SolverConfig,
) -> Result<SweepReport> {
    let u0 = dealias(&forward_transform(phi)?);
    let mut reports = inviscid_sweeps(&u0, alpha, eps_ladder, &[s], cfg)?;
    Ok(reports.remove(0))
}

/// Least-squares slope of `ln observable` against `ln epsilon`.
pub fn rate_fit(report: &SweepReport) -> Result<LineFit> {
    if report.ladder.len() < 2 {
        return Err(Error::Config(
            "rate fit needs at least two ladder points".into(),
        ));
    }
    if report
        .observables
        .iter()
        .any(|o| !(*o > 0.0 && o.is_finite()))
    {
        return Err(Error::Range(
            "rate fit needs positive finite observables".into(),
        ));
    }
    Ok(log_log(&report.ladder, &report.observables))
}

/// Sup-in-time L2 distance across an epsilon ladder, fitted against epsilon.
pub fn rate_sweep(
    u0: &SpectralField,
    alpha: f64,
    eps_ladder: &[f64],
    seed: Option<u64>,
    cfg: &SolverConfig,
) -> Result<SweepReport> {
    let mut report = inviscid_sweeps(u0, alpha, eps_ladder, &[0.0], cfg)?.remove(0);
    report.experiment = "rate".into();
    report.seed = seed;
    report.fit = Some(rate_fit(&report)?);
    Ok(report)
}

/// Relative L2 distance at `t_final` between the base solution and the
/// rescaled solution `lambda^2 v(lambda x, lambda^3 t)` with `lambda = 2^-m`.
///
/// The rescaled problem lives on a box `2^m` times longer with `2^m` times as
/// many modes, time step `dt / lambda^3`, damping `lambda^(3 - 2 alpha) eps` and
/// a dealiasing fraction shrunk by `lambda`, so it retains exactly the base
/// band. Fourier coefficients map as `c'_k = lambda^(3/2) c_k`.
pub fn scaling_check(
    phi: &RealField,
    params: &ModelParams,
    lambda_exp: u32,
    cfg: &SolverConfig,
) -> Result<f64> {
    let base_grid = cfg.grid;
    if phi.grid() != &base_grid {
        return Err(Error::Config(
            "initial data is not on the solver grid".into(),
        ));
    }
    if lambda_exp > 6 {
        return Err(Error::Config(format!(
            "lambda = 2^-{lambda_exp} is too small"
        )));
    }
    let factor = 1usize << lambda_exp;
    let lambda = 1.0 / factor as f64;
    let scaled_grid = GridSpec::with_dealias(
        base_grid.box_length() * factor as f64,
        base_grid.modes() * factor,
        base_grid.dealias_fraction() * lambda,
    )?;
    if scaled_grid.dealias_cutoff() != base_grid.dealias_cutoff() {
        return Err(Error::Config(
            "scaled grid does not retain the base band".into(),
        ));
    }
    let u0 = dealias(&forward_transform(phi)?);
    let base = solve_spectral(&u0, &cfg.with_params(*params))?;

    let amp = lambda.powf(1.5);
    let v0 = SpectralField::from_modes(scaled_grid, |k| u0.coeff(k) * amp);
    let scaled_params = ModelParams::new(
        params.epsilon() * lambda.powf(3.0 - 2.0 * params.alpha()),
        params.alpha(),
    )?;
    let mut scaled_cfg = *cfg;
    scaled_cfg.grid = scaled_grid;
    scaled_cfg.params = scaled_params;
    scaled_cfg.dt = cfg.dt / lambda.powi(3);
    scaled_cfg.t_final = cfg.t_final / lambda.powi(3);
    scaled_cfg.snapshot_stride = usize::MAX;
    let scaled = solve_spectral(&v0, &scaled_cfg)?;

    let back = SpectralField::from_modes(base_grid, |k| scaled.last().coeff(k) / amp);
    let target = base.last();
    Ok(back.difference(target)?.l2_norm() / target.l2_norm())
}

/// `sup_t ||u||_{H^1} + eps^(1/2) (int_0^T ||Lambda^(2 alpha) u||^2)^(1/2)` per epsilon.
pub fn h1_bound_check(
    phi: &RealField,
    alpha: f64,
    eps_ladder: &[f64],
    cfg: &SolverConfig,
) -> Result<SweepReport> {
    if eps_ladder.is_empty() || !strictly_monotone(eps_ladder) {
        return Err(Error::Config(
            "epsilon ladder must be strictly monotone".into(),
        ));
    }
    let u0 = dealias(&forward_transform(phi)?);
    let observables = eps_ladder
        .par_iter()
        .map(|&e| {
            let traj = run(&u0, cfg, ModelParams::new(e, alpha)?)?;
            let sup = traj
                .states
                .iter()
                .map(|u| sobolev_norm(u, 1.0))
                .fold(0.0f64, f64::max);
            let rates: Vec<f64> = traj
                .states
                .iter()
                .map(|u| homogeneous_sq(u, 2.0 * alpha))
                .collect();
            let integral: f64 = traj
                .times
                .windows(2)
                .zip(rates.windows(2))
                .map(|(t, r)| 0.5 * (t[1] - t[0]) * (r[0] + r[1]))
                .sum();
            Ok(sup + (e * integral).sqrt())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        experiment: "h1-bound".into(),
        parameter: "epsilon".into(),
        alpha,
        s: Some(1.0),
        ladder: eps_ladder.to_vec(),
        observables,
        fit: None,
        floors: Vec::new(),
        seed: None,
        grid: cfg.grid,
        dt: cfg.dt,
        t_final: cfg.t_final,
    })
}

/// `sup_t ||u_1 - u_2||_{L2} / ||phi_1 - phi_2||_{L2}` for two nearby data.
pub fn lipschitz_ratio(
    phi1: &SpectralField,
    phi2: &SpectralField,
    params: &ModelParams,
    cfg: &SolverConfig,
) -> Result<f64> {
    let a = dealias(phi1);
    let b = dealias(phi2);
    let input = a.difference(&b)?.l2_norm();
    if input == 0.0 {
        return Err(Error::Config("perturbation has zero size".into()));
    }
    let (ta, tb) = rayon::join(|| run(&a, cfg, *params), || run(&b, cfg, *params));
    Ok(sup_distance(&ta?, &tb?, 0.0)? / input)
}

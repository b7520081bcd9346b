//! Time integration of `u_t = -u_xxx - eps |d/dx|^(2 alpha) u - (u^2)_x`.
//!
//! The linear part is absorbed exactly by the propagator (integrating factor)
//! and the remaining quadratic term is advanced with classical RK4 in the
//! rotating frame (Lawson's scheme).

use std::io::{Read, Write};

use num_complex::Complex64;
use rustfft::Fft;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{check_range, Error, Result};
use crate::propagator::ModelParams;
use crate::snapshot::{
    read_prefixed_json, read_snapshot, write_prefixed_json, write_snapshot, SnapshotHeader,
};
use crate::spectral::{
    dealias, fft_plans, forward_transform, inverse_transform, same_grid, GridSpec, RealField,
    SpectralField,
};

/// Whether the quadratic flux is integrated. `Off` leaves the exact linear flow
/// and exists for verification runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    #[default]
    Quadratic,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub params: ModelParams,
    pub grid: GridSpec,
    pub dt: f64,
    pub t_final: f64,
    pub snapshot_stride: usize,
    #[serde(default)]
    pub nonlinearity: Nonlinearity,
}

impl SolverConfig {
    pub fn new(
        params: ModelParams,
        grid: GridSpec,
        dt: f64,
        t_final: f64,
        snapshot_stride: usize,
    ) -> Result<Self> {
        let cfg = Self {
            params,
            grid,
            dt,
            t_final,
            snapshot_stride,
            nonlinearity: Nonlinearity::Quadratic,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("dt", self.dt, self.dt > 0.0, "dt > 0")?;
        check_range("t_final", self.t_final, self.t_final > 0.0, "t_final > 0")?;
        check_range(
            "dt",
            self.dt,
            self.dt <= self.t_final * (1.0 + 1e-12),
            "dt <= t_final",
        )?;
        check_range(
            "snapshot_stride",
            self.snapshot_stride as f64,
            self.snapshot_stride >= 1,
            "stride >= 1",
        )?;
        Ok(())
    }

    pub fn with_nonlinearity(mut self, n: Nonlinearity) -> Self {
        self.nonlinearity = n;
        self
    }

    pub fn with_params(mut self, params: ModelParams) -> Self {
        self.params = params;
        self
    }

    /// Number of steps; the last one is shortened to land on `t_final`.
    pub fn step_count(&self) -> usize {
        ((self.t_final / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    /// Spacing of stored snapshots.
    pub fn snapshot_interval(&self) -> f64 {
        self.dt * self.snapshot_stride as f64
    }
}

/// Stored solution states, one per snapshot time.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    pub config: SolverConfig,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial(&self) -> &SpectralField {
        &self.states[0]
    }

    pub fn last(&self) -> &SpectralField {
        self.states
            .last()
            .expect("trajectory holds at least the initial state")
    }
}

/// Preplanned buffers for repeated stepping on one grid.
struct Stepper {
    grid: GridSpec,
    params: ModelParams,
    nonlinearity: Nonlinearity,
    h: f64,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    /// `-i xi` on retained modes, zero on truncated ones.
    flux: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    product_scale: f64,
    k: [Vec<Complex64>; 4],
    stage: Vec<Complex64>,
}

impl Stepper {
    fn new(grid: GridSpec, params: ModelParams, nonlinearity: Nonlinearity) -> Self {
        let m = grid.modes();
        let cutoff = grid.dealias_cutoff();
        let flux = (0..m)
            .map(|i| {
                if grid.mode_at(i).abs() > cutoff || i == grid.modes() / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -grid.wavenumber(i))
                }
            })
            .collect();
        let (fwd, inv) = fft_plans(m);
        let zeros = vec![Complex64::new(0.0, 0.0); m];
        Self {
            grid,
            params,
            nonlinearity,
            h: f64::NAN,
            half: zeros.clone(),
            full: zeros.clone(),
            flux,
            fwd,
            inv,
            scratch: zeros.clone(),
            product_scale: 1.0 / (m as f64 * grid.box_length().sqrt()),
            k: [zeros.clone(), zeros.clone(), zeros.clone(), zeros.clone()],
            stage: zeros,
        }
    }

    fn set_step(&mut self, h: f64) {
        if self.h == h {
            return;
        }
        self.h = h;
        for i in 0..self.grid.modes() {
            let xi = self.grid.wavenumber(i);
            self.half[i] = self.params.multiplier(xi, 0.5 * h);
            self.full[i] = self.params.multiplier(xi, h);
        }
        let n = self.grid.modes() / 2;
        self.half[n] = Complex64::new(0.0, 0.0);
        self.full[n] = Complex64::new(0.0, 0.0);
    }

    /// `out = -d/dx (u^2)`, dealiased.
    fn flux_into(
        inv: &dyn Fft<f64>,
        fwd: &dyn Fft<f64>,
        flux: &[Complex64],
        scale: f64,
        scratch: &mut [Complex64],
        u: &[Complex64],
        out: &mut [Complex64],
    ) {
        scratch.copy_from_slice(u);
        inv.process(scratch);
        for z in scratch.iter_mut() {
            *z = Complex64::new(z.re * z.re, 0.0);
        }
        fwd.process(scratch);
        for ((o, s), f) in out.iter_mut().zip(scratch.iter()).zip(flux) {
            *o = s * scale * f;
        }
    }

    fn nonlinear(&mut self, which: usize, input_is_stage: bool, u: &[Complex64]) {
        if self.nonlinearity == Nonlinearity::Off {
            self.k[which]
                .iter_mut()
                .for_each(|z| *z = Complex64::new(0.0, 0.0));
            return;
        }
        let src: &[Complex64] = if input_is_stage { &self.stage } else { u };
        let mut out = std::mem::take(&mut self.k[which]);
        Self::flux_into(
            self.inv.as_ref(),
            self.fwd.as_ref(),
            &self.flux,
            self.product_scale,
            &mut self.scratch,
            src,
            &mut out,
        );
        self.k[which] = out;
    }

    fn step(&mut self, u: &mut [Complex64], h: f64) {
        self.set_step(h);
        let m = u.len();
        self.nonlinear(0, false, u);
        for i in 0..m {
            self.stage[i] = self.half[i] * (u[i] + 0.5 * h * self.k[0][i]);
        }
        self.nonlinear(1, true, u);
        for i in 0..m {
            self.stage[i] = self.half[i] * u[i] + 0.5 * h * self.k[1][i];
        }
        self.nonlinear(2, true, u);
        for i in 0..m {
            self.stage[i] = self.full[i] * u[i] + h * self.half[i] * self.k[2][i];
        }
        self.nonlinear(3, true, u);
        for i in 0..m {
            u[i] = self.full[i] * u[i]
                + h / 6.0
                    * (self.full[i] * self.k[0][i]
                        + 2.0 * self.half[i] * (self.k[1][i] + self.k[2][i])
                        + self.k[3][i]);
        }
    }
}

/// `-d/dx (u^2)`, dealiased.
pub fn nonlinear_term(u: &SpectralField) -> SpectralField {
    let grid = *u.grid();
    let mut st = Stepper::new(
        grid,
        ModelParams::kdv(1.0).expect("valid"),
        Nonlinearity::Quadratic,
    );
    let mut out = vec![Complex64::new(0.0, 0.0); grid.modes()];
    Stepper::flux_into(
        st.inv.as_ref(),
        st.fwd.as_ref(),
        &st.flux,
        st.product_scale,
        &mut st.scratch,
        u.coeffs(),
        &mut out,
    );
    SpectralField::new(grid, out).expect("length preserved")
}

/// One integrating-factor RK4 step of the full equation.
pub fn step(u: &SpectralField, dt: f64, p: &ModelParams) -> Result<SpectralField> {
    step_with(u, dt, p, Nonlinearity::Quadratic)
}

pub fn step_with(
    u: &SpectralField,
    dt: f64,
    p: &ModelParams,
    nonlinearity: Nonlinearity,
) -> Result<SpectralField> {
    check_range("dt", dt, dt > 0.0, "dt > 0")?;
    let mut st = Stepper::new(*u.grid(), *p, nonlinearity);
    let mut c = u.coeffs().to_vec();
    st.step(&mut c, dt);
    SpectralField::new(*u.grid(), c)
}

/// Integrates from `phi` to `cfg.t_final`, storing every `snapshot_stride`-th
/// state plus the final one.
pub fn solve(phi: &RealField, cfg: &SolverConfig) -> Result<Trajectory> {
    same_grid(phi.grid(), &cfg.grid)?;
    let u0 = dealias(&forward_transform(phi)?);
    solve_spectral(&u0, cfg)
}

pub fn solve_spectral(u0: &SpectralField, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    same_grid(u0.grid(), &cfg.grid)?;
    let grid = cfg.grid;
    let mut u = dealias(u0).coeffs().to_vec();
    let mut st = Stepper::new(grid, cfg.params, cfg.nonlinearity);
    let steps = cfg.step_count();
    let mut times = vec![0.0];
    let mut states = vec![SpectralField::new(grid, u.clone())?];
    for n in 1..=steps {
        let t_prev = (n - 1) as f64 * cfg.dt;
        let h = if n == steps {
            cfg.t_final - t_prev
        } else {
            cfg.dt
        };
        st.step(&mut u, h);
        if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Divergence {
                step: n,
                time: t_prev + h,
            });
        }
        if n % cfg.snapshot_stride == 0 || n == steps {
            times.push(if n == steps {
                cfg.t_final
            } else {
                n as f64 * cfg.dt
            });
            states.push(SpectralField::new(grid, u.clone())?);
        }
    }
    Ok(Trajectory {
        times,
        states,
        config: *cfg,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub count: usize,
    pub dt: f64,
    pub snapshot_stride: usize,
    pub params: ModelParams,
}

/// Writes the manifest followed by one snapshot record per stored state.
pub fn write_trajectory<W: Write>(w: &mut W, traj: &Trajectory) -> Result<()> {
    let manifest = TrajectoryManifest {
        count: traj.len(),
        dt: traj.config.dt,
        snapshot_stride: traj.config.snapshot_stride,
        params: traj.config.params,
    };
    write_prefixed_json(w, &manifest)?;
    let p = traj.config.params;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let header = SnapshotHeader::new(&traj.config.grid, *t, p.epsilon(), p.alpha());
        write_snapshot(w, &header, &inverse_transform(s))?;
    }
    Ok(())
}

pub fn read_trajectory<R: Read>(
    r: &mut R,
) -> Result<(TrajectoryManifest, Vec<(SnapshotHeader, RealField)>)> {
    let manifest: TrajectoryManifest = read_prefixed_json(r)?;
    let records = (0..manifest.count)
        .map(|_| read_snapshot(r))
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, records))
}

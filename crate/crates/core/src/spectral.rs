//! Periodic-box discretization and the Fourier-side operators of the equation.
//!
//! A field on the box `[0, L)` with `M` collocation points `x_j = j L / M` is
//! represented by coefficients `c_k`, `k = -M/2 .. M/2 - 1`, related to the
//! samples by
//!
//! ```text
//! c_k = sqrt(L) / M * sum_j u(x_j) exp(-i xi_k x_j),    xi_k = 2 pi k / L
//! u(x_j) = 1 / sqrt(L) * sum_k c_k exp(i xi_k x_j)
//! ```
//!
//! This is the unitary convention: `sum_j |u(x_j)|^2 L / M = sum_k |c_k|^2`,
//! so the L2 norm can be read off either side without extra factors.
//! Coefficients are stored in FFT order (non-negative modes first).

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

/// Name of the normalization written into snapshot headers.
pub const NORMALIZATION: &str = "unitary: c_k = sqrt(L)/M * sum_j u_j exp(-i xi_k x_j)";

pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn fft_plans(len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(len), p.plan_fft_inverse(len))
    })
}

/// Periodic box of length `L` sampled at `M` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    box_length: f64,
    modes: usize,
    dealias_fraction: f64,
}

impl GridSpec {
    pub fn new(box_length: f64, modes: usize) -> Result<Self> {
        Self::with_dealias(box_length, modes, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias(box_length: f64, modes: usize, dealias_fraction: f64) -> Result<Self> {
        check_range("box_length", box_length, box_length > 0.0, "L > 0")?;
        check_range(
            "modes",
            modes as f64,
            modes >= 8 && modes.is_multiple_of(2),
            "M even and M >= 8",
        )?;
        check_range(
            "dealias_fraction",
            dealias_fraction,
            dealias_fraction > 0.0 && dealias_fraction <= 1.0,
            "0 < fraction <= 1",
        )?;
        Ok(Self {
            box_length,
            modes,
            dealias_fraction,
        })
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    pub fn dx(&self) -> f64 {
        self.box_length / self.modes as f64
    }

    /// Spacing of the wavenumber lattice, `2 pi / L`.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    /// Integer mode number stored at FFT index `i`.
    pub fn mode_at(&self, i: usize) -> i64 {
        let m = self.modes as i64;
        let i = i as i64;
        if i < m / 2 {
            i
        } else {
            i - m
        }
    }

    /// FFT index of mode `k`, if `k` lies in `-M/2 .. M/2 - 1`.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let m = self.modes as i64;
        if k < -m / 2 || k >= m / 2 {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((k + m) as usize)
        }
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        self.mode_at(i) as f64 * self.dxi()
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.modes).map(|i| self.wavenumber(i)).collect()
    }

    pub fn points(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.modes).map(|j| j as f64 * dx).collect()
    }

    /// Largest `|k|` retained by [`dealias`].
    pub fn dealias_cutoff(&self) -> i64 {
        (self.dealias_fraction * self.modes as f64 / 2.0 + 1e-9).floor() as i64
    }

    pub(crate) fn nyquist_index(&self) -> usize {
        self.modes / 2
    }
}

/// Collocation samples of a real field.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.modes() {
            return Err(Error::Contract(format!(
                "field has {} samples but grid has {} modes",
                values.len(),
                grid.modes()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.modes()],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Collocation L2 norm, `(sum |u_j|^2 L/M)^(1/2)`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.dx()).sqrt()
    }
}

/// Fourier coefficients of a real field in the unitary convention.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.modes() {
            return Err(Error::Contract(format!(
                "{} coefficients for a grid with {} modes",
                coeffs.len(),
                grid.modes()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.modes()],
        }
    }

    /// Builds a field from a function of the integer mode number. The
    /// caller is responsible for Hermitian symmetry.
    pub fn from_modes(grid: GridSpec, f: impl Fn(i64) -> Complex64) -> Self {
        let coeffs = (0..grid.modes()).map(|i| f(grid.mode_at(i))).collect();
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of mode `k`; zero outside the lattice.
    pub fn coeff(&self, k: i64) -> Complex64 {
        self.grid
            .index_of(k)
            .map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    /// L2 norm via Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest violation of `c(-k) = conj(c(k))`, relative to the largest
    /// coefficient. The unpaired Nyquist mode must be real.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let m = self.grid.modes();
        let mut worst = self.coeffs[0].im.abs();
        for i in 1..m {
            let j = m - i;
            let d = if i == j {
                self.coeffs[i].im.abs()
            } else {
                (self.coeffs[i] - self.coeffs[j].conj()).norm()
            };
            worst = worst.max(d);
        }
        worst / scale
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Multiplies every coefficient by `symbol(xi_k)`.
    pub fn apply_symbol(&self, symbol: impl Fn(f64) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * symbol(self.grid.wavenumber(i)))
            .collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    /// Drops the unpaired `k = -M/2` coefficient; needed after any
    /// multiplier that is not conjugation-even at the Nyquist mode.
    pub(crate) fn clear_nyquist(&mut self) {
        let n = self.grid.nyquist_index();
        self.coeffs[n] = Complex64::new(0.0, 0.0);
    }
}

pub(crate) fn same_grid(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::Contract(format!("grid mismatch: {a:?} vs {b:?}")))
    }
}

/// Relative L2 distance `|a - b| / |b|`, or the absolute distance when `b = 0`.
pub fn relative_l2_distance(a: &SpectralField, b: &SpectralField) -> Result<f64> {
    let diff = a.difference(b)?.l2_norm();
    let reference = b.l2_norm();
    Ok(if reference > 0.0 {
        diff / reference
    } else {
        diff
    })
}

pub fn forward_transform(f: &RealField) -> Result<SpectralField> {
    let grid = f.grid;
    if f.values.len() != grid.modes() {
        return Err(Error::Contract("sample count differs from grid".into()));
    }
    if f.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("non-finite sample in field".into()));
    }
    let (fwd, _) = fft_plans(grid.modes());
    let mut buf: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    let scale = grid.box_length().sqrt() / grid.modes() as f64;
    for c in &mut buf {
        *c *= scale;
    }
    Ok(SpectralField { grid, coeffs: buf })
}

/// Collocation values of `u`; imaginary parts (roundoff for Hermitian input)
/// are discarded.
pub fn inverse_transform(u: &SpectralField) -> RealField {
    let grid = u.grid;
    let (_, inv) = fft_plans(grid.modes());
    let mut buf = u.coeffs.clone();
    inv.process(&mut buf);
    let scale = 1.0 / grid.box_length().sqrt();
    RealField {
        grid,
        values: buf.into_iter().map(|c| c.re * scale).collect(),
    }
}

/// Multiplies by `(i xi)^order`.
pub fn spatial_derivative(u: &SpectralField, order: u32) -> Result<SpectralField> {
    if !(1..=3).contains(&order) {
        return Err(Error::Parameter {
            name: "order",
            value: order as f64,
            constraint: "order in {1, 2, 3}",
        });
    }
    let mut out = u.apply_symbol(|xi| Complex64::new(0.0, xi).powu(order));
    if order % 2 == 1 {
        out.clear_nyquist();
    }
    Ok(out)
}

/// `|xi|^(2 alpha)` evaluated as `exp(2 alpha ln|xi|)`, zero at the origin.
pub fn dissipation_symbol(xi: f64, alpha: f64) -> f64 {
    if xi == 0.0 {
        0.0
    } else {
        (2.0 * alpha * xi.abs().ln()).exp()
    }
}

/// Applies `|d/dx|^(2 alpha)`.
pub fn fractional_dissipation(u: &SpectralField, alpha: f64) -> Result<SpectralField> {
    check_range(
        "alpha",
        alpha,
        alpha > 0.0 && alpha <= 1.0,
        "0 < alpha <= 1",
    )?;
    Ok(u.apply_symbol(|xi| Complex64::new(dissipation_symbol(xi, alpha), 0.0)))
}

/// Zeroes every coefficient with `|k|` above the dealiasing cutoff.
pub fn dealias(u: &SpectralField) -> SpectralField {
    let mut out = u.clone();
    dealias_in_place(&mut out);
    out
}

pub(crate) fn dealias_in_place(u: &mut SpectralField) {
    let cutoff = u.grid.dealias_cutoff();
    for i in 0..u.grid.modes() {
        if u.grid.mode_at(i).abs() > cutoff {
            u.coeffs[i] = Complex64::new(0.0, 0.0);
        }
    }
}

/// Samples `u` on a grid with `factor` times as many points (zero padding),
/// returning the padded-grid collocation values.
pub(crate) fn padded_values(u: &SpectralField, factor: usize) -> Vec<f64> {
    let grid = u.grid;
    let m = grid.modes();
    let big = m * factor;
    let mut buf = vec![Complex64::new(0.0, 0.0); big];
    for i in 0..m {
        let k = grid.mode_at(i);
        // Nyquist has no partner on the padded grid; split it symmetrically.
        if i == grid.nyquist_index() {
            let half = u.coeffs[i] * 0.5;
            buf[(big as i64 + k) as usize] += half;
            buf[(-k) as usize] += half;
            continue;
        }
        let j = if k >= 0 {
            k as usize
        } else {
            (big as i64 + k) as usize
        };
        buf[j] = u.coeffs[i];
    }
    let (_, inv) = fft_plans(big);
    inv.process(&mut buf);
    let scale = 1.0 / grid.box_length().sqrt();
    buf.into_iter().map(|c| c.re * scale).collect()
}

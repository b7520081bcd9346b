//! Counterexamples to the bilinear estimate below the critical regularity.
//!
//! The data are indicator functions of thin boxes hugging the cubic surface
//! `tau = xi^3` at frequency `N`, together with their reflections. All
//! computations use the sheared coordinates `(xi, lambda = tau - xi^3)`, whose
//! Jacobian is one, so the boxes become rectangles. Two factors at `(xi_1,
//! lambda_1)` and `(xi_2, lambda_2)` meet at output modulation
//! `mu = lambda_1 + lambda_2 - 3 xi xi_1 xi_2` with `xi = xi_1 + xi_2`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::fit::log_log;
use crate::output::fmt17;

/// Which of the two box families is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Width 1, modulation `[N, 2N]`; meaningful for `alpha <= 1/2`.
    LowAlpha,
    /// Width `N^(alpha - 1/2)`, modulation `[N^(2 alpha), 2 N^(2 alpha)]`; for `alpha >= 1/2`.
    HighAlpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSpec {
    pub regime: Regime,
    pub scale_n: f64,
    pub s_test: f64,
    pub alpha: f64,
}

impl CounterexampleSpec {
    pub fn new(regime: Regime, scale_n: f64, s_test: f64, alpha: f64) -> Result<Self> {
        let dyadic = scale_n >= 16.0 && scale_n.log2().fract() == 0.0;
        check_range("scale_n", scale_n, dyadic, "dyadic N >= 16")?;
        check_range("s_test", s_test, s_test.is_finite(), "finite s")?;
        let ok = match regime {
            Regime::LowAlpha => alpha > 0.0 && alpha <= 0.5,
            Regime::HighAlpha => (0.5..=1.0).contains(&alpha),
        };
        check_range(
            "alpha",
            alpha,
            ok,
            "0 < alpha <= 1/2 (low regime) or 1/2 <= alpha <= 1 (high regime)",
        )?;
        Ok(Self {
            regime,
            scale_n,
            s_test,
            alpha,
        })
    }

    /// Frequency width of the box.
    pub fn width(&self) -> f64 {
        match self.regime {
            Regime::LowAlpha => 1.0,
            Regime::HighAlpha => self.scale_n.powf(self.alpha - 0.5),
        }
    }

    /// Lower edge of the modulation slab `h <= |lambda| <= 2h`.
    pub fn height(&self) -> f64 {
        match self.regime {
            Regime::LowAlpha => self.scale_n,
            Regime::HighAlpha => self.scale_n.powf(2.0 * self.alpha),
        }
    }

    /// Exact `||f||^2 = 2 |box| = 4 w h`.
    pub fn exact_norm_sq(&self) -> f64 {
        4.0 * self.width() * self.height()
    }
}

/// Cell-centred lattice in `(xi, lambda)`: nodes sit at `(i + 1/2) d_xi` and
/// `(k + 1/2) d_modulation`, so the lattice is symmetric under reflection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub xi_range: (f64, f64),
    pub modulation_range: (f64, f64),
    pub d_xi: f64,
    pub d_modulation: f64,
}

impl PhaseSpaceGrid {
    /// Grid with at least `cells` cells across the box width and height. The
    /// frequency step divides `N`, so the inner box edge is a cell boundary.
    pub fn resolving(spec: &CounterexampleSpec, cells: usize) -> Result<Self> {
        let n = spec.scale_n;
        let w = spec.width();
        let h = spec.height();
        let d_xi = n / (n * cells as f64 / w).ceil();
        let d_modulation = h / cells as f64;
        Ok(Self {
            xi_range: (-(n + w), n + w),
            modulation_range: (-2.0 * h, 2.0 * h),
            d_xi,
            d_modulation,
        })
    }

    pub fn xi_node(&self, i: i64) -> f64 {
        (i as f64 + 0.5) * self.d_xi
    }

    pub fn modulation_node(&self, k: i64) -> f64 {
        (k as f64 + 0.5) * self.d_modulation
    }

    /// Index of the modulation cell containing `lambda`.
    pub fn modulation_cell(&self, lambda: f64) -> i64 {
        (lambda / self.d_modulation).floor() as i64
    }
}

/// `f = c (chi_box + chi_{-box})` sampled at cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    spec: CounterexampleSpec,
    grid: PhaseSpaceGrid,
    amplitude: f64,
    xi_cells: (i64, i64),
    modulation_cells: (i64, i64),
}

pub fn build_counterexample(
    spec: &CounterexampleSpec,
    grid: &PhaseSpaceGrid,
) -> Result<Counterexample> {
    let n = spec.scale_n;
    let w = spec.width();
    let h = spec.height();
    let covers = grid.xi_range.0 <= -(n + w)
        && grid.xi_range.1 >= n + w
        && grid.modulation_range.0 <= -2.0 * h
        && grid.modulation_range.1 >= 2.0 * h;
    if !covers {
        return Err(Error::Resolution(
            "phase-space grid does not cover the box".into(),
        ));
    }
    if w / grid.d_xi < 8.0 || h / grid.d_modulation < 8.0 {
        return Err(Error::Resolution(format!(
            "box spans {:.2} x {:.2} cells; at least 8 are needed in each direction",
            w / grid.d_xi,
            h / grid.d_modulation
        )));
    }
    // Cells whose centres fall inside [N, N + w] and [h, 2h].
    let first = |lo: f64, d: f64| (lo / d - 0.5).ceil() as i64;
    let last = |hi: f64, d: f64| (hi / d - 0.5).floor() as i64;
    Ok(Counterexample {
        spec: *spec,
        grid: *grid,
        amplitude: 1.0,
        xi_cells: (first(n, grid.d_xi), last(n + w, grid.d_xi)),
        modulation_cells: (
            first(h, grid.d_modulation),
            last(2.0 * h, grid.d_modulation),
        ),
    })
}

impl Counterexample {
    pub fn spec(&self) -> &CounterexampleSpec {
        &self.spec
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.amplitude *= c;
        out
    }

    fn in_box_xi(&self, i: i64) -> bool {
        i >= self.xi_cells.0 && i <= self.xi_cells.1
    }

    fn in_slab(&self, k: i64) -> bool {
        let k = if k < 0 { -k - 1 } else { k };
        k >= self.modulation_cells.0 && k <= self.modulation_cells.1
    }

    /// Value on cell `(i, k)`.
    pub fn value(&self, i: i64, k: i64) -> f64 {
        if (self.in_box_xi(i) || self.in_box_xi(-i - 1)) && self.in_slab(k) {
            self.amplitude
        } else {
            0.0
        }
    }

    /// Frequency cells carrying the box and its reflection.
    pub fn xi_support(&self) -> Vec<i64> {
        let (a, b) = self.xi_cells;
        (a..=b).map(|i| -i - 1).rev().chain(a..=b).collect()
    }

    /// Modulation cells of both slabs.
    pub fn modulation_support(&self) -> Vec<i64> {
        let (a, b) = self.modulation_cells;
        (a..=b).map(|k| -k - 1).rev().chain(a..=b).collect()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        let nx = (self.xi_cells.1 - self.xi_cells.0 + 1) as f64;
        let nl = (self.modulation_cells.1 - self.modulation_cells.0 + 1) as f64;
        4.0 * nx * nl * self.amplitude * self.amplitude * self.grid.d_xi * self.grid.d_modulation
    }
}

/// Knobs of the weighted bilinear functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilinearOptions {
    /// Small exponent in the output weight `(1 + |xi|^(2a) + |mu|)^(-1/2 + delta)`.
    pub delta: f64,
    /// Output frequencies kept, as fractions of the box width.
    pub window: (f64, f64),
    /// Cells across the thin box directions.
    pub cells: usize,
}

impl Default for BilinearOptions {
    fn default() -> Self {
        Self {
            delta: 0.01,
            window: (1.0 / 3.0, 2.0 / 3.0),
            cells: 16,
        }
    }
}

/// Weighted bilinear norm and the normalising `||f||^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BilinearValue {
    pub norm: f64,
    pub f_norm_sq: f64,
    pub ratio: f64,
}

/// `|| W (g * g) ||_{L^2(window)} / ||f||^2` where
/// `g = f (1 + |xi|)^(-s) (1 + |xi|^(2a) + |lambda|)^(-1/2)` and
/// `W = |xi| (1 + |xi|)^s (1 + |xi|^(2a) + |mu|)^(-1/2 + delta)`.
pub fn bilinear_functional(f: &Counterexample, opts: &BilinearOptions) -> Result<f64> {
    Ok(bilinear_parts(f, opts)?.ratio)
}

pub fn bilinear_parts(f: &Counterexample, opts: &BilinearOptions) -> Result<BilinearValue> {
    let spec = f.spec;
    let grid = f.grid;
    let (s, a) = (spec.s_test, spec.alpha);
    let (dx, dl) = (grid.d_xi, grid.d_modulation);
    let inner = |xi: f64, lambda: f64| {
        (1.0 + xi.abs()).powf(-s) * (1.0 + xi.abs().powf(2.0 * a) + lambda.abs()).powf(-0.5)
    };
    let xs = f.xi_support();
    let ks = f.modulation_support();
    let (k_lo, k_hi) = (ks[0], ks[ks.len() - 1]);
    // g on the support, indexed by (position in xs, k - k_lo).
    let width_k = (k_hi - k_lo + 1) as usize;
    let mut g = vec![0.0; xs.len() * width_k];
    for (p, &i) in xs.iter().enumerate() {
        for &k in &ks {
            g[p * width_k + (k - k_lo) as usize] =
                f.value(i, k) * inner(grid.xi_node(i), grid.modulation_node(k));
        }
    }
    let position = |i: i64| xs.iter().position(|&j| j == i);

    let w = spec.width();
    let h = spec.height();
    let lo = (opts.window.0 * w / dx).ceil() as i64;
    let hi = (opts.window.1 * w / dx).floor() as i64;
    let outputs: Vec<i64> = (lo..=hi)
        .flat_map(|n| [-n, n])
        .filter(|&n| n != 0)
        .collect();

    let mut total = 0.0;
    for &n in &outputs {
        let xi = n as f64 * dx;
        let pairs: Vec<(usize, usize, f64)> = xs
            .iter()
            .enumerate()
            .filter_map(|(p1, &i1)| {
                let i2 = n - i1 - 1;
                position(i2).map(|p2| {
                    let shift = -3.0 * xi * grid.xi_node(i1) * grid.xi_node(i2);
                    (p1, p2, shift)
                })
            })
            .collect();
        if pairs.is_empty() {
            continue;
        }
        let smin = pairs.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
        let smax = pairs.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
        let m_lo = ((smin - 4.0 * h) / dl).floor() as i64 - 1;
        let m_hi = ((smax + 4.0 * h) / dl).ceil() as i64 + 1;
        let outer_xi = xi.abs() * (1.0 + xi.abs()).powf(s);
        let xi_pow = xi.abs().powf(2.0 * a);
        for m in m_lo..=m_hi {
            let mu = m as f64 * dl;
            let mut conv = 0.0;
            for &(p1, p2, shift) in &pairs {
                let row1 = &g[p1 * width_k..(p1 + 1) * width_k];
                let row2 = &g[p2 * width_k..(p2 + 1) * width_k];
                for (kk, &g1) in row1.iter().enumerate() {
                    if g1 == 0.0 {
                        continue;
                    }
                    let lambda1 = grid.modulation_node(k_lo + kk as i64);
                    let k2 = grid.modulation_cell(mu - lambda1 - shift) - k_lo;
                    if k2 >= 0 && (k2 as usize) < width_k {
                        conv += g1 * row2[k2 as usize];
                    }
                }
            }
            if conv == 0.0 {
                continue;
            }
            let weight = outer_xi * (1.0 + xi_pow + mu.abs()).powf(-0.5 + opts.delta);
            let v = weight * conv * dx * dl;
            total += v * v * dx * dl;
        }
    }
    let norm = total.sqrt();
    let f_norm_sq = f.l2_norm_sq();
    if !norm.is_finite() || !f_norm_sq.is_finite() {
        return Err(Error::Range(format!(
            "bilinear functional overflowed at N = {}",
            spec.scale_n
        )));
    }
    let ratio = if f_norm_sq == 0.0 {
        0.0
    } else {
        norm / f_norm_sq
    };
    Ok(BilinearValue {
        norm,
        f_norm_sq,
        ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub s: f64,
    pub n: f64,
    pub ratio: f64,
    pub slope: f64,
}

/// Growth exponents of the bilinear ratio over an `N` ladder for each `s`.
#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub regime: Regime,
    pub alpha: f64,
    pub options: BilinearOptions,
    pub rows: Vec<SweepRow>,
    /// `(s, fitted slope of ln ratio against ln N)`, sorted by `s`.
    pub slopes: Vec<(f64, f64)>,
    /// Where the slope changes sign, by linear interpolation in `s`.
    pub crossover: Option<f64>,
}

impl SweepReport {
    /// Columns `alpha,s,N,ratio,slope,crossover_estimate`; a missing crossover is written as `nan`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "alpha,s,N,ratio,slope,crossover_estimate")?;
        let cross = self.crossover.map_or("nan".to_string(), fmt17);
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt17(r.alpha),
                fmt17(r.s),
                fmt17(r.n),
                fmt17(r.ratio),
                fmt17(r.slope),
                cross
            )?;
        }
        Ok(())
    }
}

/// First sign change of `slope(s)` from positive to nonpositive.
pub fn locate_crossover(slopes: &[(f64, f64)]) -> Option<f64> {
    slopes.windows(2).find_map(|w| {
        let ((s0, y0), (s1, y1)) = (w[0], w[1]);
        (y0 > 0.0 && y1 <= 0.0).then(|| s0 + (0.0 - y0) * (s1 - s0) / (y1 - y0))
    })
}

pub fn exponent_sweep(
    regime: Regime,
    alpha: f64,
    s_list: &[f64],
    n_ladder: &[f64],
    opts: &BilinearOptions,
) -> Result<SweepReport> {
    if n_ladder.len() < 4 {
        return Err(Error::Config(
            "exponent sweep needs at least 4 ladder points".into(),
        ));
    }
    if s_list.is_empty() {
        return Err(Error::Config("exponent sweep needs at least one s".into()));
    }
    let mut s_sorted = s_list.to_vec();
    s_sorted.sort_by(f64::total_cmp);
    let jobs: Vec<(f64, f64)> = s_sorted
        .iter()
        .flat_map(|&s| n_ladder.iter().map(move |&n| (s, n)))
        .collect();
    let ratios = jobs
        .par_iter()
        .map(|&(s, n)| {
            let spec = CounterexampleSpec::new(regime, n, s, alpha)?;
            let grid = PhaseSpaceGrid::resolving(&spec, opts.cells)?;
            bilinear_functional(&build_counterexample(&spec, &grid)?, opts)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut rows = Vec::with_capacity(jobs.len());
    let mut slopes = Vec::with_capacity(s_sorted.len());
    for (j, &s) in s_sorted.iter().enumerate() {
        let chunk = &ratios[j * n_ladder.len()..(j + 1) * n_ladder.len()];
        let slope = log_log(n_ladder, chunk).slope;
        slopes.push((s, slope));
        for (&n, &ratio) in n_ladder.iter().zip(chunk) {
            rows.push(SweepRow {
                alpha,
                s,
                n,
                ratio,
                slope,
            });
        }
    }
    Ok(SweepReport {
        regime,
        alpha,
        options: *opts,
        crossover: locate_crossover(&slopes),
        rows,
        slopes,
    })
}

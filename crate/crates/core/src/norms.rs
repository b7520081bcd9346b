//! Sobolev and dyadic diagnostics, the discrete `X_k` modulation norm, and the
//! L2 / Hamiltonian energy ledgers.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{check_range, Error, Result};
use crate::evolve::Trajectory;
use crate::output::fmt17;
use crate::spectral::{dissipation_symbol, fft_plans, padded_values, SpectralField};

/// `(sum_k (1 + xi_k^2)^s |c_k|^2)^(1/2)`.
pub fn sobolev_norm(u: &SpectralField, s: f64) -> f64 {
    let g = u.grid();
    u.coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let xi = g.wavenumber(i);
            (1.0 + xi * xi).powf(s) * c.norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// `||Lambda^a u||_2^2 = sum |xi|^(2a) |c|^2`.
pub fn homogeneous_sq(u: &SpectralField, a: f64) -> f64 {
    let g = u.grid();
    u.coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| dissipation_symbol(g.wavenumber(i), a) * c.norm_sqr())
        .sum()
}

/// Sharp dyadic band of `x >= 0`: 0 for `x < 1`, else `k` with `x in [2^(k-1), 2^k)`.
pub fn dyadic_band(x: f64) -> usize {
    let x = x.abs();
    if x < 1.0 {
        return 0;
    }
    let mut k = 1;
    let mut upper = 2.0;
    while x >= upper {
        k += 1;
        upper *= 2.0;
    }
    k
}

/// Per-band L2 norms under the sharp Littlewood-Paley partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicProfile {
    pub k_indices: Vec<usize>,
    pub band_energies: Vec<f64>,
}

pub fn dyadic_profile(u: &SpectralField) -> DyadicProfile {
    let g = u.grid();
    let mut sums: Vec<f64> = Vec::new();
    for (i, c) in u.coeffs().iter().enumerate() {
        let k = dyadic_band(g.wavenumber(i));
        if sums.len() <= k {
            sums.resize(k + 1, 0.0);
        }
        sums[k] += c.norm_sqr();
    }
    DyadicProfile {
        k_indices: (0..sums.len()).collect(),
        band_energies: sums.into_iter().map(f64::sqrt).collect(),
    }
}

/// `P_k u` with the sharp band.
pub fn band_projection(u: &SpectralField, k: usize) -> SpectralField {
    let g = *u.grid();
    let mut out = u.clone();
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        if dyadic_band(g.wavenumber(i)) != k {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    out
}

/// Value of the discrete `X_k` norm with its resolution limits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XkNorm {
    pub value: f64,
    /// `2^(j/2) ||eta_j f||` for each modulation band `j`.
    pub band_terms: Vec<f64>,
    /// Largest resolvable modulation, `pi / dt_snap`.
    pub max_modulation: f64,
    pub snapshots: usize,
}

fn taper(t: f64, width: f64) -> f64 {
    let edge = 0.1 * width;
    if t < edge {
        0.5 * (1.0 - (std::f64::consts::PI * t / edge).cos())
    } else if t > width - edge {
        0.5 * (1.0 - (std::f64::consts::PI * (width - t) / edge).cos())
    } else {
        1.0
    }
}

/// Space-time norm `sum_j 2^(j/2) || eta_j(tau - xi^3) F[taper * P_k u] ||`
/// over the snapshots in `[0, window]`.
///
/// Each Fourier mode is demodulated by `exp(-i xi^3 t)` before the time
/// transform, so the transform variable is the modulation `tau - xi^3`
/// directly and no cubic frequencies need to be resolved.
pub fn xk_norm(traj: &Trajectory, k: usize, window: f64) -> Result<XkNorm> {
    check_range("window", window, window > 0.0, "window > 0")?;
    let t_end = *traj.times.last().unwrap_or(&0.0);
    check_range(
        "window",
        window,
        window <= t_end * (1.0 + 1e-12),
        "window <= t_final",
    )?;
    let dt = traj.config.snapshot_interval();
    let count = traj
        .times
        .iter()
        .enumerate()
        .take_while(|(n, t)| {
            **t <= window * (1.0 + 1e-12) && (**t - *n as f64 * dt).abs() <= 1e-9 * dt.max(**t)
        })
        .count();
    if count < 16 {
        return Err(Error::Resolution(format!(
            "{count} uniformly spaced snapshots in window {window}; need at least 16"
        )));
    }
    let width = (count - 1) as f64 * dt;
    let padded = (8 * count).next_power_of_two();
    let (fwd, _) = fft_plans(padded);
    let dlambda = 2.0 * std::f64::consts::PI / (padded as f64 * dt);
    let norm = dt / (2.0 * std::f64::consts::PI).sqrt();

    let grid = *traj.initial().grid();
    let mut bands: Vec<f64> = Vec::new();
    let mut buf = vec![Complex64::new(0.0, 0.0); padded];
    for i in 0..grid.modes() {
        let xi = grid.wavenumber(i);
        if dyadic_band(xi) != k {
            continue;
        }
        buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        let mut any = false;
        for n in 0..count {
            let t = traj.times[n];
            let c = traj.states[n].coeffs()[i];
            if c.norm_sqr() > 0.0 {
                any = true;
            }
            buf[n] = c * taper(t, width) * Complex64::from_polar(1.0, -xi * xi * xi * t);
        }
        if !any {
            continue;
        }
        fwd.process(&mut buf);
        for (m, z) in buf.iter().enumerate() {
            let m = if m < padded / 2 {
                m as f64
            } else {
                m as f64 - padded as f64
            };
            let j = dyadic_band(m * dlambda);
            if bands.len() <= j {
                bands.resize(j + 1, 0.0);
            }
            bands[j] += (z * norm).norm_sqr() * dlambda;
        }
    }
    let band_terms: Vec<f64> = bands
        .iter()
        .enumerate()
        .map(|(j, e)| 2f64.powf(j as f64 / 2.0) * e.sqrt())
        .collect();
    Ok(XkNorm {
        value: band_terms.iter().sum(),
        band_terms,
        max_modulation: std::f64::consts::PI / dt,
        snapshots: count,
    })
}

/// `H[u] = int u_x^2 - (2/3) u^3 + u^2 dx`, with the cubic term computed on a
/// twice-refined grid (exact for dealiased fields).
pub fn hamiltonian(u: &SpectralField) -> f64 {
    let g = u.grid();
    let grad_sq = homogeneous_sq(u, 1.0);
    let mass_sq: f64 = u.coeffs().iter().map(|c| c.norm_sqr()).sum();
    let fine = padded_values(u, 2);
    let cubic = fine.iter().map(|v| v * v * v).sum::<f64>() * g.box_length() / fine.len() as f64;
    grad_sq - 2.0 / 3.0 * cubic + mass_sq
}

/// Time series of the L2 balance and the Hamiltonian along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyLedger {
    pub times: Vec<f64>,
    pub l2_half_sq: Vec<f64>,
    /// Trapezoid quadrature of `eps ||Lambda^alpha u||^2` from 0 to each time.
    pub dissipated: Vec<f64>,
    pub residual: Vec<f64>,
    pub hamiltonian: Vec<f64>,
    pub h1_norm: Vec<f64>,
}

pub fn energy_ledger(traj: &Trajectory) -> EnergyLedger {
    let p = traj.config.params;
    let rate: Vec<f64> = traj
        .states
        .iter()
        .map(|s| p.epsilon() * homogeneous_sq(s, p.alpha()))
        .collect();
    let l2_half_sq: Vec<f64> = traj
        .states
        .iter()
        .map(|s| 0.5 * s.l2_norm().powi(2))
        .collect();
    let mut dissipated = Vec::with_capacity(traj.len());
    let mut acc = 0.0;
    for n in 0..traj.len() {
        if n > 0 {
            acc += 0.5 * (traj.times[n] - traj.times[n - 1]) * (rate[n] + rate[n - 1]);
        }
        dissipated.push(acc);
    }
    let initial = l2_half_sq[0];
    let residual = l2_half_sq
        .iter()
        .zip(&dissipated)
        .map(|(e, d)| {
            let r = (e + d - initial).abs();
            if initial > 0.0 {
                r / initial
            } else {
                r
            }
        })
        .collect();
    EnergyLedger {
        times: traj.times.clone(),
        l2_half_sq,
        dissipated,
        residual,
        hamiltonian: traj.states.iter().map(hamiltonian).collect(),
        h1_norm: traj.states.iter().map(|s| sobolev_norm(s, 1.0)).collect(),
    }
}

/// Largest relative defect of `1/2 |u(t)|^2 + D(t) = 1/2 |phi|^2`.
pub fn l2_dissipation_residual(traj: &Trajectory) -> f64 {
    energy_ledger(traj).residual.into_iter().fold(0.0, f64::max)
}

impl EnergyLedger {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "t,half_l2_sq,dissipated,residual,hamiltonian,h1_norm")?;
        for n in 0..self.times.len() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt17(self.times[n]),
                fmt17(self.l2_half_sq[n]),
                fmt17(self.dissipated[n]),
                fmt17(self.residual[n]),
                fmt17(self.hamiltonian[n]),
                fmt17(self.h1_norm[n]),
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{solve, solve_spectral, Nonlinearity, SolverConfig};
    use crate::propagator::{propagate, ModelParams};
    use crate::spectral::{dealias, forward_transform, GridSpec, RealField};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn unit_mode(grid: GridSpec, k: i64) -> SpectralField {
        SpectralField::from_modes(grid, |j| {
            if j == k {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    fn random(grid: GridSpec, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..grid.modes())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        forward_transform(&RealField::new(grid, v).unwrap()).unwrap()
    }

    #[test]
    fn sobolev_cases() {
        let g = GridSpec::new(2.0 * PI, 16).unwrap();
        let one = unit_mode(g, 1);
        assert!((sobolev_norm(&one, 1.0) - 2f64.sqrt()).abs() < 1e-15);
        let u = random(g, 1);
        assert!((sobolev_norm(&u, 0.0) - u.l2_norm()).abs() < 1e-14);
        let mut last = 0.0;
        for s in [-1.0, -0.5, 0.0, 0.3, 1.0, 2.0] {
            let n = sobolev_norm(&u, s);
            assert!(n >= last);
            last = n;
        }
    }

    #[test]
    fn dyadic_bands() {
        assert_eq!(dyadic_band(0.0), 0);
        assert_eq!(dyadic_band(0.99), 0);
        assert_eq!(dyadic_band(1.0), 1);
        assert_eq!(dyadic_band(3.99), 2);
        assert_eq!(dyadic_band(4.0), 3);
        let g = GridSpec::new(2.0 * PI, 32).unwrap();
        let p = dyadic_profile(&unit_mode(g, 4));
        for (k, e) in p.k_indices.iter().zip(&p.band_energies) {
            if *k == 3 {
                assert_eq!(*e, 1.0);
            } else {
                assert_eq!(*e, 0.0);
            }
        }
        let z = dyadic_profile(&SpectralField::zeros(g));
        assert!(z.band_energies.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn dyadic_pythagoras() {
        let g = GridSpec::new(13.0, 256).unwrap();
        let u = random(g, 2);
        let p = dyadic_profile(&u);
        let total: f64 = p.band_energies.iter().map(|e| e * e).sum();
        assert!((total - u.l2_norm().powi(2)).abs() <= 1e-12 * total);
    }

    #[test]
    fn hamiltonian_of_sine() {
        let g = GridSpec::new(2.0 * PI, 32).unwrap();
        let u = forward_transform(&RealField::from_fn(g, f64::sin)).unwrap();
        assert!((hamiltonian(&u) - 2.0 * PI).abs() < 1e-12);
        assert_eq!(hamiltonian(&SpectralField::zeros(g)), 0.0);
    }

    #[test]
    fn hamiltonian_cubic_term_matches_fine_quadrature() {
        let g = GridSpec::new(4.0, 32).unwrap();
        let u = dealias(&random(g, 3));
        let direct = {
            // brute-force cubic integral by direct synthesis on a 6x grid
            let n = 6 * g.modes();
            let l = g.box_length();
            (0..n)
                .map(|j| {
                    let x = j as f64 * l / n as f64;
                    let mut v = 0.0;
                    for i in 0..g.modes() {
                        let xi = g.wavenumber(i);
                        v += (u.coeffs()[i] * Complex64::from_polar(1.0, xi * x)).re;
                    }
                    (v / l.sqrt()).powi(3)
                })
                .sum::<f64>()
                * l
                / n as f64
        };
        let grad = homogeneous_sq(&u, 1.0);
        let mass: f64 = u.coeffs().iter().map(|c| c.norm_sqr()).sum();
        let expect = grad - 2.0 / 3.0 * direct + mass;
        assert!((hamiltonian(&u) - expect).abs() < 1e-11 * expect.abs().max(1.0));
    }

    fn free_trajectory(u0: &SpectralField, p: ModelParams, dt: f64, count: usize) -> Trajectory {
        let cfg = SolverConfig::new(p, *u0.grid(), dt, dt * (count - 1) as f64, 1)
            .unwrap()
            .with_nonlinearity(Nonlinearity::Off);
        Trajectory {
            times: (0..count).map(|n| n as f64 * dt).collect(),
            states: (0..count)
                .map(|n| propagate(u0, n as f64 * dt, &p))
                .collect(),
            config: cfg,
        }
    }

    #[test]
    fn xk_of_free_airy_sits_on_the_cubic() {
        let g = GridSpec::new(2.0 * PI, 64).unwrap();
        let mut u0 = SpectralField::zeros(g);
        for k in [4i64, 5, 6, 7] {
            let c = Complex64::new(1.0 / k as f64, 0.3);
            u0.coeffs_mut()[g.index_of(k).unwrap()] = c;
            u0.coeffs_mut()[g.index_of(-k).unwrap()] = c.conj();
        }
        let tr = free_trajectory(&u0, ModelParams::kdv(1.0).unwrap(), 0.05, 801);
        let x = xk_norm(&tr, 3, 40.0).unwrap();
        let tail: f64 = x.band_terms.iter().skip(1).sum();
        assert!(tail <= 0.2 * x.value, "tail {tail} of {}", x.value);
        assert!((x.max_modulation - PI / 0.05).abs() < 1e-9);

        let scaled = Trajectory {
            states: tr.states.iter().map(|s| s.scaled(2.5)).collect(),
            ..tr.clone()
        };
        let y = xk_norm(&scaled, 3, 40.0).unwrap();
        assert!((y.value - 2.5 * x.value).abs() < 1e-12 * y.value);

        let zero = Trajectory {
            states: tr.states.iter().map(|s| s.scaled(0.0)).collect(),
            ..tr.clone()
        };
        assert_eq!(xk_norm(&zero, 3, 40.0).unwrap().value, 0.0);
        assert!(matches!(xk_norm(&tr, 3, 0.5), Err(Error::Resolution(_))));
    }

    #[test]
    fn ledger_for_kdv_is_conservation() {
        let g = GridSpec::new(20.0, 128).unwrap();
        let phi = RealField::from_fn(g, |x| 0.5 * (-(x - 10.0).powi(2)).exp());
        let cfg = SolverConfig::new(ModelParams::kdv(1.0).unwrap(), g, 1e-3, 1.0, 10).unwrap();
        let tr = solve(&phi, &cfg).unwrap();
        let ledger = energy_ledger(&tr);
        assert!(ledger.dissipated.iter().all(|d| *d == 0.0));
        assert!(l2_dissipation_residual(&tr) <= 1e-8);
        let h0 = ledger.hamiltonian[0];
        assert!(ledger
            .hamiltonian
            .iter()
            .all(|h| (h - h0).abs() <= 1e-6 * h0.abs()));
    }

    #[test]
    fn linear_ledger_residual_is_quadrature_error() {
        let g = GridSpec::new(20.0, 128).unwrap();
        let phi = RealField::from_fn(g, |x| (-(x - 10.0).powi(2)).exp());
        let p = ModelParams::new(0.5, 1.0).unwrap();
        let run = |stride| {
            let cfg = SolverConfig::new(p, g, 1e-3, 1.0, stride)
                .unwrap()
                .with_nonlinearity(Nonlinearity::Off);
            l2_dissipation_residual(&solve(&phi, &cfg).unwrap())
        };
        let coarse = run(20);
        let fine = run(10);
        // Trapezoid error of a smooth integrand: second order in the snapshot spacing.
        assert!(coarse < 1e-3);
        assert!((coarse / fine - 4.0).abs() < 0.2, "{coarse} {fine}");

        // per-mode closed form: d/dt |c|^2 = -2 eps |xi|^2 |c|^2 exactly
        let u0 = dealias(&forward_transform(&phi).unwrap());
        let cfg = SolverConfig::new(p, g, 1e-3, 1.0, 1000)
            .unwrap()
            .with_nonlinearity(Nonlinearity::Off);
        let tr = solve_spectral(&u0, &cfg).unwrap();
        let exact_loss: f64 = u0
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let xi = g.wavenumber(i);
                0.5 * c.norm_sqr() * (1.0 - (-2.0 * 0.5 * xi * xi).exp())
            })
            .sum();
        let observed = 0.5 * (u0.l2_norm().powi(2) - tr.last().l2_norm().powi(2));
        assert!((exact_loss - observed).abs() < 1e-13);
    }

    #[test]
    fn ledger_csv_shape() {
        let g = GridSpec::new(20.0, 32).unwrap();
        let phi = RealField::from_fn(g, |x| (-(x - 10.0).powi(2)).exp());
        let cfg = SolverConfig::new(ModelParams::new(0.1, 0.5).unwrap(), g, 0.01, 0.05, 1).unwrap();
        let ledger = energy_ledger(&solve(&phi, &cfg).unwrap());
        let mut out = Vec::new();
        ledger.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(
            lines[0],
            "t,half_l2_sq,dissipated,residual,hamiltonian,h1_norm"
        );
        assert_eq!(lines.len(), 7);
        assert!(ledger.dissipated.windows(2).all(|w| w[1] >= w[0]));
    }
}

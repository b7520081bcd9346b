//! The free evolution `exp(-eps |xi|^(2 alpha) |t| + i xi^3 t)` as a Fourier multiplier.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Result};
use crate::spectral::{dissipation_symbol, relative_l2_distance, SpectralField};

/// Dissipation strength `epsilon` and order `alpha`. `epsilon = 0` is pure KdV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    epsilon: f64,
    alpha: f64,
}

impl ModelParams {
    pub fn new(epsilon: f64, alpha: f64) -> Result<Self> {
        check_range(
            "epsilon",
            epsilon,
            (0.0..=1.0).contains(&epsilon),
            "0 <= epsilon <= 1",
        )?;
        check_range(
            "alpha",
            alpha,
            alpha > 0.0 && alpha <= 1.0,
            "0 < alpha <= 1",
        )?;
        Ok(Self { epsilon, alpha })
    }

    /// KdV reference (no dissipation) with the given nominal order.
    pub fn kdv(alpha: f64) -> Result<Self> {
        Self::new(0.0, alpha)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Same order, different strength. Used by ladders over epsilon.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(epsilon, self.alpha)
    }

    /// Multiplier at wavenumber `xi` for time `t`.
    pub fn multiplier(&self, xi: f64, t: f64) -> Complex64 {
        let decay = -self.epsilon * dissipation_symbol(xi, self.alpha) * t.abs();
        Complex64::from_polar(decay.exp(), xi * xi * xi * t)
    }
}

/// Applies the free semigroup for time `t`; negative `t` uses `|t|` in the
/// damping factor.
pub fn propagate(u: &SpectralField, t: f64, p: &ModelParams) -> SpectralField {
    let mut out = u.apply_symbol(|xi| p.multiplier(xi, t));
    if t != 0.0 {
        out.clear_nyquist();
    }
    out
}

/// Relative distance between `W(t2) W(t1) u` and `W(t1 + t2) u`.
pub fn semigroup_residual(u: &SpectralField, t1: f64, t2: f64, p: &ModelParams) -> Result<f64> {
    if p.epsilon() > 0.0 {
        check_range("t1", t1, t1 >= 0.0, "t1 >= 0 when epsilon > 0")?;
        check_range("t2", t2, t2 >= 0.0, "t2 >= 0 when epsilon > 0")?;
    }
    let composed = propagate(&propagate(u, t1, p), t2, p);
    let direct = propagate(u, t1 + t2, p);
    relative_l2_distance(&composed, &direct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{dealias, forward_transform, GridSpec, RealField};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_spectral(grid: GridSpec, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.modes())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        dealias(&forward_transform(&RealField::new(grid, values).unwrap()).unwrap())
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(-0.1, 0.5).is_err());
        assert!(ModelParams::new(1.1, 0.5).is_err());
        assert!(ModelParams::new(0.5, 0.0).is_err());
        assert!(ModelParams::new(0.5, 1.01).is_err());
        assert!(ModelParams::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn zero_time_is_identity() {
        let g = GridSpec::new(10.0, 32).unwrap();
        let u = random_spectral(g, 1);
        let p = ModelParams::new(0.7, 0.4).unwrap();
        assert_eq!(propagate(&u, 0.0, &p), u);
    }

    #[test]
    fn airy_is_pure_phase() {
        let g = GridSpec::new(10.0, 64).unwrap();
        let u = random_spectral(g, 2);
        let p = ModelParams::kdv(1.0).unwrap();
        let v = propagate(&u, 0.37, &p);
        for (a, b) in u.coeffs().iter().zip(v.coeffs()) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn unit_mode_decays_and_rotates() {
        // L = 2 pi makes mode k = 1 sit at xi = 1.
        let g = GridSpec::new(2.0 * PI, 16).unwrap();
        let p = ModelParams::new(1.0, 1.0).unwrap();
        let u = SpectralField::from_modes(g, |k| {
            if k == 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let v = propagate(&u, 1.0, &p).coeff(1);
        assert!((v.norm() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v.arg() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn semigroup_law() {
        let g = GridSpec::new(12.0, 64).unwrap();
        let u = random_spectral(g, 4);
        let p = ModelParams::new(0.5, 0.7).unwrap();
        assert_eq!(semigroup_residual(&u, 0.0, 0.0, &p).unwrap(), 0.0);
        assert!(semigroup_residual(&u, 0.3, 0.9, &p).unwrap() <= 1e-12);
        assert!(semigroup_residual(&u, -0.3, 0.9, &p).is_err());

        let kdv = ModelParams::kdv(0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let t1 = rng.gen_range(-2.0..2.0);
            let t2 = rng.gen_range(-2.0..2.0);
            assert!(semigroup_residual(&u, t1, t2, &kdv).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn semigroup_matches_multiplier_product() {
        let g = GridSpec::new(12.0, 64).unwrap();
        let u = random_spectral(g, 5);
        let p = ModelParams::new(0.5, 0.7).unwrap();
        let out = propagate(&propagate(&u, 0.3, &p), 0.9, &p);
        for i in 0..g.modes() {
            let xi = g.wavenumber(i);
            if i == g.modes() / 2 {
                continue;
            }
            let expect = u.coeffs()[i]
                * Complex64::from_polar((-0.5 * xi.abs().powf(1.4) * 1.2).exp(), xi.powi(3) * 1.2);
            assert!((out.coeffs()[i] - expect).norm() <= 1e-13 * u.l2_norm());
        }
    }

    #[test]
    fn mass_and_norm_properties() {
        let g = GridSpec::new(8.0, 32).unwrap();
        let mut u = random_spectral(g, 6);
        u.coeffs_mut()[0] = Complex64::new(0.8, 0.0);
        let p = ModelParams::new(0.2, 0.9).unwrap();
        let v = propagate(&u, 1.5, &p);
        assert_eq!(v.coeff(0), u.coeff(0));
        assert!(v.l2_norm() < u.l2_norm());
        assert!(v.is_hermitian(1e-13));
    }
}

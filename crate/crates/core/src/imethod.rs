//! Multiplier calculus for the I-method: the smoothing weight `m`, resonance
//! functions, the symmetrized multipliers `M3, sigma3, M4, sigma4, M5`, discrete
//! hyperplane functionals, modified energies and sampled pointwise bounds.
//!
//! Multipliers act on tuples `(xi_1, ..., xi_k)` with zero sum. Lattice
//! functionals use the measure `L^(-(k-2)/2)`, so `lambda_k(1; u, ..., u)`
//! equals `int u^k dx`.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::evolve::Trajectory;
use crate::fit::log_log;
use crate::propagator::ModelParams;
use crate::spectral::{dissipation_symbol, same_grid, SpectralField};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative size below which a frequency counts as zero in a denominator.
const RESONANT_ZERO: f64 = 1e-12;

/// Relative distance to a resonant zero below which sampled tuples are
/// rejected. Resonant zeros (some `xi_i` or `xi_i + xi_j` vanishing) only exist
/// for `eps = 0`; with damping the floor drops to [`ROUNDOFF_TOL`].
pub const DEGENERATE_TOL: f64 = 1e-9;

/// Relative floor under which sums of sampled frequencies are dominated by rounding.
pub const ROUNDOFF_TOL: f64 = 1e-14;

fn degeneracy_floor(p: &ModelParams) -> f64 {
    if p.epsilon() == 0.0 {
        DEGENERATE_TOL
    } else {
        ROUNDOFF_TOL
    }
}

/// Cutoff `N` and exponent `s` of `m(xi) = min(1, (|xi| / N)^s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IMultiplierSpec {
    cutoff_n: f64,
    s_exp: f64,
}

impl IMultiplierSpec {
    pub fn new(cutoff_n: f64, s_exp: f64) -> Result<Self> {
        check_range("cutoff_n", cutoff_n, cutoff_n > 0.0, "cutoff_n > 0")?;
        check_range(
            "s_exp",
            s_exp,
            s_exp > -0.75 && s_exp <= 0.0,
            "-3/4 < s <= 0",
        )?;
        Ok(Self { cutoff_n, s_exp })
    }

    pub fn cutoff_n(&self) -> f64 {
        self.cutoff_n
    }

    pub fn s_exp(&self) -> f64 {
        self.s_exp
    }

    pub fn with_cutoff(&self, cutoff_n: f64) -> Result<Self> {
        Self::new(cutoff_n, self.s_exp)
    }

    pub fn m(&self, xi: f64) -> f64 {
        let a = xi.abs();
        if a <= self.cutoff_n {
            1.0
        } else {
            (a / self.cutoff_n).powf(self.s_exp)
        }
    }

    pub fn m_sq(&self, xi: f64) -> f64 {
        let m = self.m(xi);
        m * m
    }
}

pub fn m_weight(xi: f64, spec: &IMultiplierSpec) -> f64 {
    spec.m(xi)
}

/// Applies the I-operator `m(D)`.
pub fn apply_i(u: &SpectralField, spec: &IMultiplierSpec) -> SpectralField {
    u.apply_symbol(|xi| Complex64::new(spec.m(xi), 0.0))
}

/// A point `(xi_1, ..., xi_k)` with `2 <= k <= 5` and zero sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneTuple {
    xis: Vec<f64>,
}

impl HyperplaneTuple {
    pub fn new(xis: Vec<f64>) -> Result<Self> {
        if !(2..=5).contains(&xis.len()) {
            return Err(Error::Contract(format!(
                "tuple length {} outside 2..=5",
                xis.len()
            )));
        }
        if xis.iter().any(|x| !x.is_finite()) {
            return Err(Error::Contract("tuple entries must be finite".into()));
        }
        let max = xis.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let sum: f64 = xis.iter().sum();
        if sum.abs() > 1e-9 * max {
            return Err(Error::Contract(format!("tuple sum {sum} is not zero")));
        }
        Ok(Self { xis })
    }

    pub fn xis(&self) -> &[f64] {
        &self.xis
    }

    pub fn k(&self) -> usize {
        self.xis.len()
    }

    fn expect<const K: usize>(&self) -> Result<[f64; K]> {
        self.xis
            .as_slice()
            .try_into()
            .map_err(|_| Error::Contract(format!("expected {K} frequencies, got {}", self.k())))
    }
}

/// Which sign the damping term takes in a `sigma` denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DampingSign {
    /// `h - eps * beta`, the multiplier that solves the modified-energy equation.
    Minus,
    /// `h + eps * beta`, its time-reversed partner.
    Plus,
}

/// `h_k = i * sum xi_j^3`.
pub fn resonance_h(t: &HyperplaneTuple) -> Complex64 {
    I * t.xis.iter().map(|x| x * x * x).sum::<f64>()
}

/// Factored resonance function, `3i xi1 xi2 xi3` or `3i (xi1+xi2)(xi1+xi3)(xi1+xi4)`.
pub fn resonance_h_factored(t: &HyperplaneTuple) -> Result<Complex64> {
    match t.k() {
        3 => Ok(h3(&t.expect::<3>()?)),
        4 => Ok(h4(&t.expect::<4>()?)),
        k => Err(Error::Contract(format!("no factored form for k = {k}"))),
    }
}

/// `beta_{alpha,k} = sum |xi_j|^(2 alpha)`.
pub fn beta_alpha(t: &HyperplaneTuple, alpha: f64) -> f64 {
    beta(&t.xis, alpha)
}

pub fn big_m3(t: &HyperplaneTuple, spec: &IMultiplierSpec) -> Result<Complex64> {
    Ok(m3(&t.expect::<3>()?, spec))
}

pub fn sigma3(
    t: &HyperplaneTuple,
    spec: &IMultiplierSpec,
    params: &ModelParams,
    sign: DampingSign,
) -> Result<Complex64> {
    sigma3_at(&t.expect::<3>()?, spec, params, sign)
}

pub fn big_m4(
    t: &HyperplaneTuple,
    spec: &IMultiplierSpec,
    params: &ModelParams,
) -> Result<Complex64> {
    m4(&t.expect::<4>()?, spec, params)
}

pub fn sigma4(
    t: &HyperplaneTuple,
    spec: &IMultiplierSpec,
    params: &ModelParams,
) -> Result<Complex64> {
    sigma4_at(&t.expect::<4>()?, spec, params)
}

pub fn big_m5(
    t: &HyperplaneTuple,
    spec: &IMultiplierSpec,
    params: &ModelParams,
) -> Result<Complex64> {
    m5(&t.expect::<5>()?, spec, params)
}

fn h3(x: &[f64; 3]) -> Complex64 {
    I * (3.0 * x[0] * x[1] * x[2])
}

fn h4(x: &[f64; 4]) -> Complex64 {
    I * (3.0 * (x[0] + x[1]) * (x[0] + x[2]) * (x[0] + x[3]))
}

fn beta(x: &[f64], alpha: f64) -> f64 {
    x.iter().map(|&v| dissipation_symbol(v, alpha)).sum()
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn has_resonant_zero(x: &[f64]) -> bool {
    let tol = RESONANT_ZERO * max_abs(x);
    x.iter().any(|v| v.abs() <= tol)
}

// i * sum (m^2 - 1) xi equals i * sum m^2 xi on the hyperplane and is exactly
// zero wherever m = 1.
fn m3(x: &[f64; 3], spec: &IMultiplierSpec) -> Complex64 {
    I * x.iter().map(|&v| (spec.m_sq(v) - 1.0) * v).sum::<f64>()
}

fn quotient(num: Complex64, den: Complex64, x: &[f64]) -> Result<Complex64> {
    if num == ZERO {
        return Ok(ZERO);
    }
    if den.norm() <= 1e-30 {
        return Err(Error::Resonance(x.to_vec()));
    }
    Ok(-num / den)
}

fn sigma3_at(
    x: &[f64; 3],
    spec: &IMultiplierSpec,
    p: &ModelParams,
    sign: DampingSign,
) -> Result<Complex64> {
    if p.epsilon() == 0.0 && has_resonant_zero(x) {
        return Err(Error::Resonance(x.to_vec()));
    }
    let damping = p.epsilon() * beta(x, p.alpha());
    let den = match sign {
        DampingSign::Minus => h3(x) - damping,
        DampingSign::Plus => h3(x) + damping,
    };
    quotient(m3(x, spec), den, x)
}

const PAIRS4: [(usize, usize, usize, usize); 6] = [
    (0, 1, 2, 3),
    (0, 2, 1, 3),
    (0, 3, 1, 2),
    (1, 2, 0, 3),
    (1, 3, 0, 2),
    (2, 3, 0, 1),
];

fn m4(x: &[f64; 4], spec: &IMultiplierSpec, p: &ModelParams) -> Result<Complex64> {
    let mut sum = ZERO;
    for &(c, d, a, b) in &PAIRS4 {
        let merged = x[c] + x[d];
        sum += sigma3_at(&[x[a], x[b], merged], spec, p, DampingSign::Minus)? * merged;
    }
    Ok(-I * 1.5 * sum / 6.0)
}

fn sigma4_at(x: &[f64; 4], spec: &IMultiplierSpec, p: &ModelParams) -> Result<Complex64> {
    let num = m4(x, spec, p)?;
    quotient(num, h4(x) - p.epsilon() * beta(x, p.alpha()), x)
}

fn m5(x: &[f64; 5], spec: &IMultiplierSpec, p: &ModelParams) -> Result<Complex64> {
    let mut sum = ZERO;
    for d in 0..5 {
        for e in d + 1..5 {
            let mut rest = [0.0; 4];
            let mut n = 0;
            for (j, &v) in x.iter().enumerate() {
                if j != d && j != e {
                    rest[n] = v;
                    n += 1;
                }
            }
            let merged = x[d] + x[e];
            rest[3] = merged;
            sum += sigma4_at(&rest, spec, p)? * merged;
        }
    }
    Ok(-I * 2.0 * sum / 10.0)
}

/// Discrete hyperplane sum
/// `L^(-(k-2)/2) * sum_{k_1 + ... + k_k = 0} m(xi) c_1(k_1) ... c_k(k_k)`.
///
/// The multiplier is evaluated only where every coefficient is nonzero.
pub fn lambda_k<F>(fields: &[&SpectralField], mut multiplier: F) -> Result<Complex64>
where
    F: FnMut(&[f64]) -> Result<Complex64>,
{
    let k = fields.len();
    if !(2..=5).contains(&k) {
        return Err(Error::Contract(format!(
            "lambda_k needs 2..=5 fields, got {k}"
        )));
    }
    let grid = *fields[0].grid();
    for f in &fields[1..] {
        same_grid(&grid, f.grid())?;
    }
    let limit = if k <= 3 { 256 } else { 64 };
    if grid.modes() > limit {
        return Err(Error::Config(format!(
            "lambda_k with k = {k} supports at most {limit} modes, got {}",
            grid.modes()
        )));
    }
    let support: Vec<Vec<(i64, Complex64)>> = fields[..k - 1]
        .iter()
        .map(|f| {
            f.coeffs()
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != ZERO)
                .map(|(i, c)| (grid.mode_at(i), *c))
                .collect()
        })
        .collect();
    let dxi = grid.dxi();
    let last = fields[k - 1];
    let mut xis = vec![0.0; k];
    let mut total = ZERO;
    let mut idx = vec![0usize; k - 1];
    if support.iter().any(|s| s.is_empty()) {
        return Ok(ZERO);
    }
    'outer: loop {
        let mut ksum = 0i64;
        let mut prod = Complex64::new(1.0, 0.0);
        for (j, &i) in idx.iter().enumerate() {
            let (mode, c) = support[j][i];
            ksum += mode;
            prod *= c;
            xis[j] = mode as f64 * dxi;
        }
        let c_last = last.coeff(-ksum);
        if c_last != ZERO {
            xis[k - 1] = -ksum as f64 * dxi;
            total += multiplier(&xis)? * prod * c_last;
        }
        for j in (0..k - 1).rev() {
            idx[j] += 1;
            if idx[j] < support[j].len() {
                continue 'outer;
            }
            idx[j] = 0;
        }
        break;
    }
    Ok(total * grid.box_length().powf(-((k as f64) - 2.0) / 2.0))
}

/// `E_I^2 = ||I u||^2`, `E_I^3 = E_I^2 + Lambda_3(sigma3)`, `E_I^4 = E_I^3 + Lambda_4(sigma4)`.
pub fn modified_energy(
    order: u32,
    u: &SpectralField,
    spec: &IMultiplierSpec,
    params: &ModelParams,
) -> Result<f64> {
    if !(2..=4).contains(&order) {
        return Err(Error::Contract(format!(
            "modified energy order {order} outside 2..=4"
        )));
    }
    let g = u.grid();
    let mut energy: f64 = u
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| spec.m_sq(g.wavenumber(i)) * c.norm_sqr())
        .sum();
    if order >= 3 {
        let l3 = lambda_k(&[u, u, u], |x| {
            sigma3_at(&[x[0], x[1], x[2]], spec, params, DampingSign::Minus)
        })?;
        energy += real_part(l3, energy)?;
    }
    if order >= 4 {
        let l4 = lambda_k(&[u, u, u, u], |x| {
            sigma4_at(&[x[0], x[1], x[2], x[3]], spec, params)
        })?;
        energy += real_part(l4, energy)?;
    }
    Ok(energy)
}

fn real_part(z: Complex64, scale: f64) -> Result<f64> {
    if z.im.abs() > 1e-10 * z.norm().max(scale).max(f64::MIN_POSITIVE) {
        return Err(Error::Contract(format!(
            "hyperplane sum has imaginary part {} (field not real?)",
            z.im
        )));
    }
    Ok(z.re)
}

/// Result of comparing the centred difference of `E_I^2` with its predicted rate.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityResidual {
    /// `max |dE/dt - rhs| / scale` over interior snapshots.
    pub residual: f64,
    pub max_abs_error: f64,
    /// Largest `|dissipative term| + |flux term|`; 1 if both vanish.
    pub scale: f64,
    pub snapshot_interval: f64,
    pub interior_points: usize,
}

/// Rate of change of `E_I^2` along the flow: `-eps Lambda_2(m m beta) + (2/3) Lambda_3(M3)`.
pub fn denergy_rate(
    u: &SpectralField,
    spec: &IMultiplierSpec,
    params: &ModelParams,
) -> Result<(f64, f64)> {
    let g = u.grid();
    let dissipative = -params.epsilon()
        * u.coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let xi = g.wavenumber(i);
                spec.m_sq(xi) * 2.0 * dissipation_symbol(xi, params.alpha()) * c.norm_sqr()
            })
            .sum::<f64>();
    let flux = lambda_k(&[u, u, u], |x| Ok(m3(&[x[0], x[1], x[2]], spec)))?;
    Ok((dissipative, 2.0 / 3.0 * real_part(flux, dissipative.abs())?))
}

pub fn denergy_identity_residual(
    traj: &Trajectory,
    spec: &IMultiplierSpec,
) -> Result<IdentityResidual> {
    let n = traj.len();
    if n < 3 {
        return Err(Error::Config(format!(
            "energy identity needs at least 3 snapshots, got {n}"
        )));
    }
    let params = traj.config.params;
    let energies: Vec<f64> = traj
        .states
        .iter()
        .map(|u| modified_energy(2, u, spec, &params))
        .collect::<Result<_>>()?;
    let mut scale = 0.0f64;
    let mut max_abs = 0.0f64;
    let mut interior = 0;
    let h = traj.times[1] - traj.times[0];
    for j in 1..n - 1 {
        let left = traj.times[j] - traj.times[j - 1];
        let right = traj.times[j + 1] - traj.times[j];
        if (left - right).abs() > 1e-9 * left {
            continue;
        }
        let (diss, flux) = denergy_rate(&traj.states[j], spec, &params)?;
        let derivative = (energies[j + 1] - energies[j - 1]) / (left + right);
        scale = scale.max(diss.abs() + flux.abs());
        max_abs = max_abs.max((derivative - diss - flux).abs());
        interior += 1;
    }
    if interior == 0 {
        return Err(Error::Config(
            "no uniformly spaced interior snapshots".into(),
        ));
    }
    let scale = if scale > 0.0 { scale } else { 1.0 };
    Ok(IdentityResidual {
        residual: max_abs / scale,
        max_abs_error: max_abs,
        scale,
        snapshot_interval: h,
        interior_points: interior,
    })
}

/// `(prod (a_i + b_i), prod (A_i + B_i))` with `A`, `B` the ascending rearrangements.
pub fn rearrangement_check(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() {
        return Err(Error::Contract(
            "rearrangement arrays differ in length".into(),
        ));
    }
    for &v in a.iter().chain(b) {
        check_range("entry", v, v >= 0.0, "entries >= 0")?;
    }
    let lhs = a.iter().zip(b).map(|(x, y)| x + y).product();
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let rhs = sa.iter().zip(&sb).map(|(x, y)| x + y).product();
    Ok((lhs, rhs))
}

/// Dyadic magnitudes of a quartic configuration, as multiples of the cutoff `N`.
///
/// `magnitudes` are the lower ends of the annuli `|xi_i| in [N_i, 2 N_i)`;
/// `pair_12` and `pair_13`, when present, constrain `|xi_1 + xi_2|` and
/// `|xi_1 + xi_3|` the same way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicConfig {
    pub label: String,
    pub magnitudes: [f64; 4],
    #[serde(default)]
    pub pair_12: Option<f64>,
    #[serde(default)]
    pub pair_13: Option<f64>,
}

impl DyadicConfig {
    pub fn new(label: &str, magnitudes: [f64; 4]) -> Self {
        Self {
            label: label.to_string(),
            magnitudes,
            pair_12: None,
            pair_13: None,
        }
    }

    pub fn with_pair_12(mut self, r: f64) -> Self {
        self.pair_12 = Some(r);
        self
    }

    pub fn with_pair_13(mut self, r: f64) -> Self {
        self.pair_13 = Some(r);
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.magnitudes;
        if n.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("dyadic magnitudes must be positive".into()));
        }
        if n.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Config(
                "dyadic magnitudes must be nonincreasing".into(),
            ));
        }
        // |xi_1| = |xi_2 + xi_3 + xi_4| < 2 (N_2 + N_3 + N_4)
        if n[0] >= 2.0 * (n[1] + n[2] + n[3]) {
            return Err(Error::Config(format!(
                "{}: N1 too large for the zero-sum hyperplane",
                self.label
            )));
        }
        if let Some(p) = self.pair_12 {
            if !(p > 0.0) || p >= 2.0 * (n[2] + n[3]) || p >= 2.0 * (n[0] + n[1]) {
                return Err(Error::Config(format!("{}: unrealizable N12", self.label)));
            }
        }
        if let Some(q) = self.pair_13 {
            if !(q > 0.0) || q >= 2.0 * (n[1] + n[3]) || q >= 2.0 * (n[0] + n[2]) {
                return Err(Error::Config(format!("{}: unrealizable N13", self.label)));
            }
        }
        if self.pair_12.is_some() && self.pair_13.is_some() {
            return Err(Error::Config(format!(
                "{}: at most one pairing constraint is supported",
                self.label
            )));
        }
        Ok(())
    }
}

/// Which pointwise bound a report concerns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundConfig {
    /// `|M4| / |h4 - eps beta4|` against `m^2(min(N_i, N_jk)) / prod (N + N_i)`.
    Quartic(DyadicConfig),
    /// `|sigma3|` against `m^2(lambda) mu^(-2)`.
    Cubic { lambda: f64, mu: f64 },
    /// `|sigma3 - sigma3^-|` against
    /// `eps |xi|_max^(2a) m^2(|xi|_min) |xi|_min / ((xi1 xi2 xi3)^2 + eps^2 |xi|_max^(4a))`.
    CubicDifference { lambda: f64, mu: f64 },
}

/// Sampled supremum of a bound ratio along a ladder of cutoffs `N`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub config: BoundConfig,
    pub epsilon: f64,
    pub alpha: f64,
    pub s_exp: f64,
    #[serde(rename = "N_ladder")]
    pub n_ladder: Vec<f64>,
    pub max_ratios: Vec<f64>,
    /// Least-squares slope of `ln max_ratio` against `ln N`.
    pub slope: f64,
    pub seed: u64,
    pub samples: usize,
}

impl BoundReport {
    pub fn max_ratio(&self) -> f64 {
        self.max_ratios.iter().fold(0.0f64, |a, &b| a.max(b))
    }
}

/// Dyadic ladder `2^lo, ..., 2^hi`.
pub fn dyadic_ladder(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|j| 2f64.powi(j)).collect()
}

fn dyadic_floor(x: f64) -> f64 {
    2f64.powi(x.abs().log2().floor() as i32)
}

fn annulus(rng: &mut ChaCha8Rng, lower: f64) -> f64 {
    let r = lower * (1.0 + rng.gen::<f64>());
    if rng.gen::<bool>() {
        r
    } else {
        -r
    }
}

fn in_annulus(x: f64, lower: f64) -> bool {
    let a = x.abs();
    a >= lower && a < 2.0 * lower
}

fn degenerate(x: &[f64], floor: f64) -> bool {
    let tol = floor * max_abs(x);
    for i in 0..x.len() {
        if x[i].abs() < tol {
            return true;
        }
        for j in i + 1..x.len() {
            if (x[i] + x[j]).abs() < tol {
                return true;
            }
        }
    }
    false
}

// Draws xi_1 and two further coordinates, each either a frequency in its
// annulus or a pair sum xi_1 + xi_j in a dyadic annulus; the remaining
// frequency closes the zero sum. Every such map has unit Jacobian. Besides the
// configured pairings, one draw in four is left unconstrained and the others
// stratify a free pair sum over dyadic levels down to the degeneracy floor, so
// thin near-resonant strips are visited at every scale.
fn quartic_sample(
    rng: &mut ChaCha8Rng,
    cfg: &DyadicConfig,
    n: f64,
    floor: f64,
) -> Option<[f64; 4]> {
    let r = cfg.magnitudes.map(|v| v * n);
    let mut pairs: [Option<f64>; 3] =
        [cfg.pair_12.map(|p| p * n), cfg.pair_13.map(|q| q * n), None];
    let fixed = pairs.iter().filter(|p| p.is_some()).count();
    let choice = rng.gen_range(0..4usize);
    if choice > 0 && fixed < 2 && pairs[choice - 1].is_none() {
        let others: f64 = (1..4).filter(|&j| j != choice).map(|j| r[j]).sum();
        let hi = (2.0 * (r[0] + r[choice]).min(others)).log2().floor() as i32;
        let lo = (floor * r[0]).log2().floor() as i32 + 1;
        pairs[choice - 1] = Some(2f64.powi(rng.gen_range(lo..hi)));
    }
    let x1 = annulus(rng, r[0]);
    let mut x = [x1, f64::NAN, f64::NAN, f64::NAN];
    let mut drawn = 0;
    for j in 1..4 {
        if let Some(lower) = pairs[j - 1] {
            x[j] = annulus(rng, lower) - x1;
            drawn += 1;
        }
    }
    let mut last = 0;
    for j in 1..4 {
        if x[j].is_nan() {
            if drawn < 2 {
                x[j] = annulus(rng, r[j]);
                drawn += 1;
            } else {
                last = j;
            }
        }
    }
    x[last] = 0.0;
    x[last] = -x.iter().sum::<f64>();
    let ok = x.iter().zip(&r).all(|(v, lo)| in_annulus(*v, *lo))
        && cfg.pair_12.is_none_or(|p| in_annulus(x[0] + x[1], p * n))
        && cfg.pair_13.is_none_or(|q| in_annulus(x[0] + x[2], q * n))
        && !degenerate(&x, floor);
    ok.then_some(x)
}

fn quartic_ratio(x: &[f64; 4], spec: &IMultiplierSpec, p: &ModelParams) -> Result<f64> {
    let lhs = sigma4_at(x, spec, p)?.norm();
    let n = spec.cutoff_n();
    let mut smallest = f64::INFINITY;
    let mut denom = 1.0;
    for &v in x {
        let d = dyadic_floor(v);
        smallest = smallest.min(d);
        denom *= n + d;
    }
    for (a, b) in [(0, 1), (0, 2), (0, 3)] {
        smallest = smallest.min(dyadic_floor(x[a] + x[b]));
    }
    Ok(lhs * denom / spec.m_sq(smallest))
}

fn cubic_sample(rng: &mut ChaCha8Rng, lambda: f64, mu: f64, floor: f64) -> Option<[f64; 3]> {
    let x1 = annulus(rng, lambda);
    let x2 = annulus(rng, mu);
    let x = [x1, x2, -x1 - x2];
    let mut mags = x.map(f64::abs);
    mags.sort_by(f64::total_cmp);
    let ok = in_annulus(mags[0], lambda) && in_annulus(mags[2], mu) && !degenerate(&x, floor);
    ok.then_some(x)
}

fn cubic_ratio(x: &[f64; 3], spec: &IMultiplierSpec, p: &ModelParams) -> Result<f64> {
    let mut mags = x.map(f64::abs);
    mags.sort_by(f64::total_cmp);
    let lhs = sigma3_at(x, spec, p, DampingSign::Minus)?.norm();
    let mu = dyadic_floor(mags[2]);
    Ok(lhs * mu * mu / spec.m_sq(dyadic_floor(mags[0])))
}

fn cubic_difference_ratio(x: &[f64; 3], spec: &IMultiplierSpec, p: &ModelParams) -> Result<f64> {
    let mut mags = x.map(f64::abs);
    mags.sort_by(f64::total_cmp);
    let lhs = (sigma3_at(x, spec, p, DampingSign::Minus)?
        - sigma3_at(x, spec, p, DampingSign::Plus)?)
    .norm();
    let eps = p.epsilon();
    let top = dissipation_symbol(mags[2], p.alpha());
    let prod = x[0] * x[1] * x[2];
    let envelope = eps * top * spec.m_sq(mags[0]) * mags[0] / (prod * prod + eps * eps * top * top);
    Ok(lhs / envelope)
}

/// Samples the chosen bound at every cutoff in `n_ladder`.
///
/// Each ladder point draws from its own ChaCha stream of `seed`, so reports
/// are reproducible regardless of thread count. Cubic magnitudes are multiples
/// of `N` like the quartic ones.
pub fn sample_bound(
    config: &BoundConfig,
    s_exp: f64,
    params: &ModelParams,
    n_ladder: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<BoundReport> {
    if n_samples == 0 {
        return Err(Error::Config("n_samples must be positive".into()));
    }
    if n_ladder.len() < 2 {
        return Err(Error::Config(
            "bound ladder needs at least two cutoffs".into(),
        ));
    }
    match config {
        BoundConfig::Quartic(c) => c.validate()?,
        BoundConfig::Cubic { lambda, mu } | BoundConfig::CubicDifference { lambda, mu } => {
            if !(*lambda > 0.0 && lambda <= mu) {
                return Err(Error::Config("cubic bound needs 0 < lambda <= mu".into()));
            }
        }
    }
    if matches!(config, BoundConfig::CubicDifference { .. }) && params.epsilon() == 0.0 {
        return Err(Error::Config(
            "difference envelope vanishes at epsilon = 0".into(),
        ));
    }
    let max_ratios = n_ladder
        .par_iter()
        .enumerate()
        .map(|(idx, &n)| {
            let spec = IMultiplierSpec::new(n, s_exp)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64);
            ladder_point(config, &spec, params, n, n_samples, &mut rng)
        })
        .collect::<Result<Vec<f64>>>()?;
    let slope = log_log(n_ladder, &max_ratios).slope;
    Ok(BoundReport {
        config: config.clone(),
        epsilon: params.epsilon(),
        alpha: params.alpha(),
        s_exp,
        n_ladder: n_ladder.to_vec(),
        max_ratios,
        slope,
        seed,
        samples: n_samples,
    })
}

/// Quartic bound `|M4| / |h4 - eps beta4| <~ m^2(min(N_i, N_jk)) / prod (N + N_i)`.
pub fn m4_bound_sample(
    config: &DyadicConfig,
    s_exp: f64,
    params: &ModelParams,
    n_ladder: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<BoundReport> {
    sample_bound(
        &BoundConfig::Quartic(config.clone()),
        s_exp,
        params,
        n_ladder,
        n_samples,
        seed,
    )
}

fn ladder_point(
    config: &BoundConfig,
    spec: &IMultiplierSpec,
    params: &ModelParams,
    n: f64,
    n_samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let max_draws = 5000 * n_samples;
    let floor = degeneracy_floor(params);
    let mut accepted = 0;
    let mut best = 0.0f64;
    for _ in 0..max_draws {
        let ratio = match config {
            BoundConfig::Quartic(c) => match quartic_sample(rng, c, n, floor) {
                Some(x) => quartic_ratio(&x, spec, params)?,
                None => continue,
            },
            BoundConfig::Cubic { lambda, mu } => match cubic_sample(rng, lambda * n, mu * n, floor)
            {
                Some(x) => cubic_ratio(&x, spec, params)?,
                None => continue,
            },
            BoundConfig::CubicDifference { lambda, mu } => {
                match cubic_sample(rng, lambda * n, mu * n, floor) {
                    Some(x) => cubic_difference_ratio(&x, spec, params)?,
                    None => continue,
                }
            }
        };
        if !ratio.is_finite() {
            return Err(Error::Range(format!("bound ratio {ratio} at N = {n}")));
        }
        best = best.max(ratio);
        accepted += 1;
        if accepted == n_samples {
            return Ok(best);
        }
    }
    Err(Error::Config(format!(
        "only {accepted} of {n_samples} samples accepted at N = {n}; configuration is unrealizable or too thin"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{dealias, forward_transform, GridSpec, RealField};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn spec(n: f64, s: f64) -> IMultiplierSpec {
        IMultiplierSpec::new(n, s).unwrap()
    }

    fn params(eps: f64, alpha: f64) -> ModelParams {
        ModelParams::new(eps, alpha).unwrap()
    }

    fn tuple(x: &[f64]) -> HyperplaneTuple {
        HyperplaneTuple::new(x.to_vec()).unwrap()
    }

    fn random_tuple(rng: &mut ChaCha8Rng, k: usize, scale: f64) -> Vec<f64> {
        let mut x: Vec<f64> = (0..k - 1).map(|_| rng.gen_range(-scale..scale)).collect();
        x.push(-x.iter().sum::<f64>());
        x
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..n {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn weight_values() {
        // s = -3/4 is excluded from the admissible range; approach it from inside.
        let sp = spec(10.0, -0.75 + 1e-12);
        assert_eq!(m_weight(5.0, &sp), 1.0);
        assert_eq!(m_weight(-10.0, &sp), 1.0);
        assert_relative_eq!(m_weight(40.0, &sp), 4f64.powf(-0.75), max_relative = 1e-11);
        assert_relative_eq!(m_weight(40.0, &sp), 0.35355, epsilon = 1e-5);
        assert!(IMultiplierSpec::new(10.0, -0.75).is_err());
        assert!(IMultiplierSpec::new(0.0, -0.5).is_err());
        assert!(IMultiplierSpec::new(1.0, 0.1).is_err());
    }

    proptest! {
        #[test]
        fn weight_even_and_monotone(a in 0.0f64..1e4, b in 0.0f64..1e4, s in -0.74f64..0.0) {
            let sp = spec(7.0, s);
            prop_assert_eq!(sp.m(a), sp.m(-a));
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(sp.m(hi) <= sp.m(lo));
        }

        #[test]
        fn rearrangement_never_violated(
            a in prop::collection::vec(0.0f64..10.0, 6),
            b in prop::collection::vec(0.0f64..10.0, 6),
        ) {
            let (lhs, rhs) = rearrangement_check(&a, &b).unwrap();
            prop_assert!(lhs >= rhs * (1.0 - 1e-12));
        }
    }

    #[test]
    fn tuple_validation() {
        assert!(HyperplaneTuple::new(vec![1.0]).is_err());
        assert!(HyperplaneTuple::new(vec![1.0; 6]).is_err());
        assert!(HyperplaneTuple::new(vec![1.0, 1.0, -1.0]).is_err());
        assert!(HyperplaneTuple::new(vec![1.0, 1.0, -2.0]).is_ok());
    }

    #[test]
    fn resonance_functions() {
        let t = tuple(&[1.0, 1.0, -2.0]);
        assert_eq!(resonance_h(&t), Complex64::new(0.0, -6.0));
        assert_eq!(resonance_h_factored(&t).unwrap(), Complex64::new(0.0, -6.0));
        assert_eq!(resonance_h(&tuple(&[3.7, -3.7])), ZERO);
        assert_eq!(beta_alpha(&t, 1.0), 6.0);
        assert_eq!(beta_alpha(&tuple(&[0.0, 0.0, 0.0]), 0.4), 0.0);
        assert_relative_eq!(beta_alpha(&tuple(&[1.0, -1.0]), 0.5), 2.0);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            for k in [3, 4] {
                let t = tuple(&random_tuple(&mut rng, k, 50.0));
                let direct = resonance_h(&t);
                let factored = resonance_h_factored(&t).unwrap();
                assert!((direct - factored).norm() <= 1e-10 * direct.norm().max(1e-300) + 1e-9);
            }
        }
    }

    #[test]
    fn m3_values_and_symmetry() {
        let n = 5.0;
        let sp = spec(n, -0.7);
        assert_eq!(big_m3(&tuple(&[1.0, 2.0, -3.0]), &sp).unwrap(), ZERO);
        assert_eq!(
            big_m3(&tuple(&[4.0 * n, -4.0 * n, 0.0]), &sp)
                .unwrap()
                .norm(),
            0.0
        );
        let x = [13.0, -40.0, 27.0];
        let direct: f64 = x.iter().map(|v| sp.m_sq(*v) * v).sum();
        let got = big_m3(&tuple(&x), &sp).unwrap();
        assert_relative_eq!(got.im, direct, max_relative = 1e-12);
        for p in permutations(3) {
            let y: Vec<f64> = p.iter().map(|&i| x[i]).collect();
            assert_relative_eq!(
                big_m3(&tuple(&y), &sp).unwrap().im,
                got.im,
                max_relative = 1e-14
            );
        }
        // The literal symmetrization -i[m(xi1) m(xi2+xi3)(xi2+xi3)]_sym is a third of M3.
        let sym: f64 = permutations(3)
            .iter()
            .map(|p| {
                let s = x[p[1]] + x[p[2]];
                sp.m(x[p[0]]) * sp.m(s) * s
            })
            .sum::<f64>()
            / 6.0;
        assert_relative_eq!(-sym, got.im / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn sigma3_cases() {
        let sp = spec(4.0, -0.5);
        for eps in [0.0, 0.3, 1.0] {
            let v = sigma3(
                &tuple(&[1.0, 2.0, -3.0]),
                &sp,
                &params(eps, 0.7),
                DampingSign::Minus,
            );
            assert_eq!(v.unwrap(), ZERO);
        }
        let kdv = params(0.0, 1.0);
        let x = tuple(&[9.0, -30.0, 21.0]);
        assert_eq!(
            sigma3(&x, &sp, &kdv, DampingSign::Minus).unwrap(),
            sigma3(&x, &sp, &kdv, DampingSign::Plus).unwrap()
        );
        assert!(matches!(
            sigma3(&tuple(&[20.0, -20.0, 0.0]), &sp, &kdv, DampingSign::Minus),
            Err(Error::Resonance(_))
        ));

        let p = params(0.5, 1.0);
        let xs = [9.0, -30.0, 21.0];
        let m3: f64 = xs.iter().map(|v| sp.m_sq(*v) * v).sum();
        let expect = -(I * m3) / (I * (3.0 * xs[0] * xs[1] * xs[2]) - 0.5 * (81.0 + 900.0 + 441.0));
        let got = sigma3(&x, &sp, &p, DampingSign::Minus).unwrap();
        assert!((got - expect).norm() <= 1e-13 * expect.norm());
    }

    #[test]
    fn m4_matches_full_symmetrization() {
        let sp = spec(3.0, -0.6);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for eps in [0.0, 0.4] {
            let p = params(eps, 0.8);
            for _ in 0..20 {
                let x = random_tuple(&mut rng, 4, 40.0);
                let mut brute = ZERO;
                for perm in permutations(4) {
                    let y: Vec<f64> = perm.iter().map(|&i| x[i]).collect();
                    let s = y[2] + y[3];
                    let t = tuple(&[y[0], y[1], s]);
                    brute += sigma3(&t, &sp, &p, DampingSign::Minus).unwrap() * s;
                }
                let brute = -I * 1.5 * brute / 24.0;
                let got = big_m4(&tuple(&x), &sp, &p).unwrap();
                assert!((got - brute).norm() <= 1e-12 * brute.norm());
                for perm in permutations(4).iter().step_by(5) {
                    let y: Vec<f64> = perm.iter().map(|&i| x[i]).collect();
                    let again = big_m4(&tuple(&y), &sp, &p).unwrap();
                    assert!((again - got).norm() <= 1e-12 * got.norm());
                }
                let s4 = sigma4(&tuple(&x), &sp, &p).unwrap();
                let den = h4(&[x[0], x[1], x[2], x[3]]) - eps * beta(&x, 0.8);
                assert_relative_eq!(s4.norm() * den.norm(), got.norm(), max_relative = 1e-12);
                assert!((s4 + got / den).norm() <= 1e-12 * s4.norm());
            }
        }
    }

    #[test]
    fn low_frequency_multipliers_vanish() {
        let n = 64.0;
        let sp = spec(n, -0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for eps in [0.0, 0.2] {
            let p = params(eps, 0.9);
            for _ in 0..50 {
                let x4 = random_tuple(&mut rng, 4, n / 16.0);
                assert_eq!(big_m4(&tuple(&x4), &sp, &p).unwrap(), ZERO);
                assert_eq!(sigma4(&tuple(&x4), &sp, &p).unwrap(), ZERO);
                let x5 = random_tuple(&mut rng, 5, n / 32.0);
                assert_eq!(big_m5(&tuple(&x5), &sp, &p).unwrap(), ZERO);
            }
        }
        let kdv = params(0.0, 1.0);
        let generic = tuple(&[30.0, 100.0, 5.0, -135.0]);
        assert!(big_m4(&generic, &sp, &kdv).is_ok());
        let paired = tuple(&[100.0, -100.0, 7.0, -7.0]);
        assert!(matches!(
            big_m4(&paired, &sp, &kdv),
            Err(Error::Resonance(_))
        ));
    }

    #[test]
    fn m5_matches_full_symmetrization() {
        let sp = spec(2.0, -0.5);
        let p = params(0.3, 0.6);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let perms = permutations(5);
        for _ in 0..4 {
            let x = random_tuple(&mut rng, 5, 30.0);
            let mut brute = ZERO;
            for perm in &perms {
                let y: Vec<f64> = perm.iter().map(|&i| x[i]).collect();
                let s = y[3] + y[4];
                let t = tuple(&[y[0], y[1], y[2], s]);
                brute += sigma4(&t, &sp, &p).unwrap() * s;
            }
            let brute = -I * 2.0 * brute / 120.0;
            let got = big_m5(&tuple(&x), &sp, &p).unwrap();
            assert!((got - brute).norm() <= 1e-11 * brute.norm());
            let rev: Vec<f64> = x.iter().rev().copied().collect();
            let again = big_m5(&tuple(&rev), &sp, &p).unwrap();
            assert!((again - got).norm() <= 1e-11 * got.norm());
        }
    }

    fn smooth_field(grid: GridSpec, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phases: Vec<(f64, f64)> = (0..6)
            .map(|_| {
                (
                    rng.gen_range(0.0..std::f64::consts::TAU),
                    rng.gen_range(0.2..1.0),
                )
            })
            .collect();
        let l = grid.box_length();
        let f = RealField::from_fn(grid, |x| {
            phases
                .iter()
                .enumerate()
                .map(|(j, (ph, a))| {
                    a * (2.0 * std::f64::consts::PI * (j + 1) as f64 * x / l + ph).cos()
                })
                .sum()
        });
        dealias(&forward_transform(&f).unwrap())
    }

    #[test]
    fn lambda_k_oracles() {
        let g = GridSpec::new(2.0 * std::f64::consts::PI, 32).unwrap();
        let u = smooth_field(g, 3);
        let sp = spec(2.5, -0.4);
        let l2 = lambda_k(&[&u, &u], |x| {
            Ok(Complex64::new(sp.m(x[0]) * sp.m(x[1]), 0.0))
        })
        .unwrap();
        let ei2 = modified_energy(2, &u, &sp, &params(0.0, 1.0)).unwrap();
        assert_relative_eq!(l2.re, ei2, max_relative = 1e-13);
        assert!(l2.im.abs() < 1e-13);
        assert_relative_eq!(
            ei2,
            apply_i(&u, &sp).l2_norm().powi(2),
            max_relative = 1e-13
        );

        let one = lambda_k(&[&u, &u], |_| Ok(Complex64::new(1.0, 0.0))).unwrap();
        assert_relative_eq!(one.re, u.l2_norm().powi(2), max_relative = 1e-13);

        // u = cos x on [0, 2 pi): int cos^3 = 0, int cos^4 = 3 pi / 4.
        let c = forward_transform(&RealField::from_fn(g, f64::cos)).unwrap();
        let unit = |_: &[f64]| Ok(Complex64::new(1.0, 0.0));
        assert!(lambda_k(&[&c, &c, &c], unit).unwrap().norm() < 1e-13);
        assert_relative_eq!(
            lambda_k(&[&c, &c, &c, &c], unit).unwrap().re,
            0.75 * std::f64::consts::PI,
            max_relative = 1e-13
        );
        // 1 + cos x: int (1 + cos)^3 = 2 pi (1 + 3/2).
        let d = forward_transform(&RealField::from_fn(g, |x| 1.0 + x.cos())).unwrap();
        assert_relative_eq!(
            lambda_k(&[&d, &d, &d], unit).unwrap().re,
            5.0 * std::f64::consts::PI,
            max_relative = 1e-13
        );

        let other = GridSpec::new(3.0, 32).unwrap();
        assert!(lambda_k(&[&u, &SpectralField::zeros(other)], unit).is_err());
        assert!(lambda_k(&[&u], unit).is_err());
        let big = SpectralField::zeros(GridSpec::new(1.0, 128).unwrap());
        assert!(lambda_k(&[&big, &big, &big, &big], unit).is_err());
    }

    #[test]
    fn modified_energies() {
        let g = GridSpec::new(2.0 * std::f64::consts::PI, 32).unwrap();
        let u = smooth_field(g, 9);
        let p = params(0.4, 0.8);
        let high = spec(1e6, -0.5);
        assert_relative_eq!(
            modified_energy(2, &u, &high, &p).unwrap(),
            u.l2_norm().powi(2),
            max_relative = 1e-14
        );
        let z = SpectralField::zeros(g);
        let sp = spec(2.0, -0.5);
        for order in 2..=4 {
            assert_eq!(modified_energy(order, &z, &sp, &p).unwrap(), 0.0);
        }
        assert!(modified_energy(5, &u, &sp, &p).is_err());

        // Cubic correction scales like the cube of the amplitude.
        let mut ratios = Vec::new();
        for amp in [1e-2, 1e-1, 1.0] {
            let v = u.scaled(amp);
            let e2 = modified_energy(2, &v, &sp, &p).unwrap();
            let e3 = modified_energy(3, &v, &sp, &p).unwrap();
            let e4 = modified_energy(4, &v, &sp, &p).unwrap();
            assert!(e4.is_finite());
            let iu = e2.sqrt();
            ratios.push((e3 - e2).abs() / (iu.powi(3) + iu.powi(4)));
        }
        assert!(ratios[0] > 0.0);
        assert!(ratios.iter().all(|r| *r <= 2.0 * ratios[0]));
    }

    #[test]
    fn rearrangement_examples() {
        assert_eq!(
            rearrangement_check(&[1.0, 2.0], &[2.0, 1.0]).unwrap(),
            (9.0, 8.0)
        );
        let (l, r) = rearrangement_check(&[1.0, 3.0, 4.0], &[0.5, 2.0, 9.0]).unwrap();
        assert_eq!(l, r);
        assert!(rearrangement_check(&[-1.0], &[1.0]).is_err());
        assert!(rearrangement_check(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn bound_report_shape_and_errors() {
        let p = params(0.0, 1.0);
        let cfg = DyadicConfig::new("hhhh", [4.0, 4.0, 4.0, 4.0]);
        let rep = m4_bound_sample(&cfg, -0.5, &p, &dyadic_ladder(4, 6), 500, 7).unwrap();
        assert_eq!(rep.max_ratios.len(), 3);
        assert!(rep.max_ratios.iter().all(|r| r.is_finite() && *r > 0.0));
        let again = m4_bound_sample(&cfg, -0.5, &p, &dyadic_ladder(4, 6), 500, 7).unwrap();
        assert_eq!(rep.max_ratios, again.max_ratios);
        let json = serde_json::to_value(&rep).unwrap();
        assert!(json.get("N_ladder").is_some());

        let bad = DyadicConfig::new("bad", [64.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            m4_bound_sample(&bad, -0.5, &p, &dyadic_ladder(4, 5), 10, 1),
            Err(Error::Config(_))
        ));
        let bad_pair = DyadicConfig::new("bad", [4.0, 4.0, 1.0, 1.0]).with_pair_12(8.0);
        assert!(m4_bound_sample(&bad_pair, -0.5, &p, &dyadic_ladder(4, 5), 10, 1).is_err());
    }

    #[test]
    fn cubic_envelopes_are_scale_free() {
        for eps in [0.0, 1e-3, 1.0] {
            let p = params(eps, 1.0);
            for (lambda, mu) in [(0.25, 4.0), (1.0, 4.0), (2.0, 4.0)] {
                let rep = sample_bound(
                    &BoundConfig::Cubic { lambda, mu },
                    -0.5,
                    &p,
                    &dyadic_ladder(4, 10),
                    4000,
                    3,
                )
                .unwrap();
                assert!(
                    rep.slope.abs() <= 0.1,
                    "eps {eps} ({lambda},{mu}) slope {}",
                    rep.slope
                );
            }
        }
        let p = params(1.0, 1.0);
        for (lambda, mu) in [(0.25, 4.0), (2.0, 4.0)] {
            let rep = sample_bound(
                &BoundConfig::CubicDifference { lambda, mu },
                -0.5,
                &p,
                &dyadic_ladder(4, 10),
                4000,
                3,
            )
            .unwrap();
            assert!(
                rep.slope.abs() <= 0.1,
                "diff ({lambda},{mu}) slope {}",
                rep.slope
            );
        }
    }
}

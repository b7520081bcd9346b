use std::path::PathBuf;

use kdvb_core::evolve::SolverConfig;
use kdvb_core::imethod::{BoundConfig, DyadicConfig};
use kdvb_core::propagator::ModelParams;
use kdvb_core::sharpness::Regime;
use kdvb_core::spectral::GridSpec;
use kdvb_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Solve,
    Inviscid,
    Rate,
    Scaling,
    Sharpness,
    ImethodBounds,
    Energy,
    H1Bound,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Inviscid => "inviscid",
            Self::Rate => "rate",
            Self::Scaling => "scaling",
            Self::Sharpness => "sharpness",
            Self::ImethodBounds => "imethod-bounds",
            Self::Energy => "energy",
            Self::H1Bound => "h1-bound",
        }
    }

    fn needs_solver(self) -> bool {
        !matches!(self, Self::Sharpness | Self::ImethodBounds)
    }

    /// Extension of the primary output file.
    pub fn extension(self) -> &'static str {
        match self {
            Self::Solve | Self::Energy | Self::Sharpness => "csv",
            _ => "json",
        }
    }
}

/// Initial datum on the solver grid. Rough data draws its phases from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Gaussian {
        #[serde(default = "one")]
        width: f64,
        #[serde(default = "one")]
        l2_norm: f64,
    },
    Soliton {
        c: f64,
        /// Defaults to the box centre.
        #[serde(default)]
        x0: Option<f64>,
    },
    Rough {
        #[serde(default = "rough_decay")]
        decay: f64,
        #[serde(default = "one")]
        l2_norm: f64,
    },
}

impl Default for InitialData {
    fn default() -> Self {
        Self::Gaussian {
            width: 1.0,
            l2_norm: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InviscidBlock {
    #[serde(default = "inviscid_ladder")]
    pub epsilons: Vec<f64>,
    #[serde(default = "inviscid_indices")]
    pub s: Vec<f64>,
}

impl Default for InviscidBlock {
    fn default() -> Self {
        Self {
            epsilons: inviscid_ladder(),
            s: inviscid_indices(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderBlock {
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingBlock {
    #[serde(default = "one_u32")]
    pub lambda_exp: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharpnessBlock {
    /// Defaults to `low_alpha` for `alpha <= 1/2`.
    #[serde(default)]
    pub regime: Option<Regime>,
    #[serde(default = "sharpness_s")]
    pub s_values: Vec<f64>,
    #[serde(default = "sharpness_ladder")]
    pub n_ladder: Vec<f64>,
    #[serde(default = "delta")]
    pub delta: f64,
    #[serde(default = "cells")]
    pub cells: usize,
}

impl Default for SharpnessBlock {
    fn default() -> Self {
        Self {
            regime: None,
            s_values: sharpness_s(),
            n_ladder: sharpness_ladder(),
            delta: delta(),
            cells: cells(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsBlock {
    #[serde(default = "default_bound_configs")]
    pub configs: Vec<BoundConfig>,
    #[serde(default = "bounds_s")]
    pub s: f64,
    /// `N` runs over `2^lo ..= 2^hi`.
    #[serde(default = "bounds_exponents")]
    pub ladder_exponents: (i32, i32),
    #[serde(default = "bounds_samples")]
    pub samples: usize,
    #[serde(default = "bounds_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "bounds_alphas")]
    pub alphas: Vec<f64>,
}

impl Default for BoundsBlock {
    fn default() -> Self {
        Self {
            configs: default_bound_configs(),
            s: bounds_s(),
            ladder_exponents: bounds_exponents(),
            samples: bounds_samples(),
            epsilons: bounds_epsilons(),
            alphas: bounds_alphas(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyBlock {
    #[serde(default = "energy_cutoff")]
    pub cutoff_n: f64,
    #[serde(default = "bounds_s")]
    pub s: f64,
    /// Also evaluate the modified-energy derivative identity (needs `modes <= 256`).
    #[serde(default = "yes")]
    pub identity: bool,
}

impl Default for EnergyBlock {
    fn default() -> Self {
        Self {
            cutoff_n: energy_cutoff(),
            s: bounds_s(),
            identity: true,
        }
    }
}

/// Everything one invocation needs. After [`parse_config`] every block used by
/// the subcommand is filled in, so serializing it echoes the resolved run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_length: Option<f64>,
    #[serde(default = "two_thirds")]
    pub dealias: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "one")]
    pub t_final: f64,
    #[serde(default = "stride")]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inviscid: Option<InviscidBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<LadderBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1_bound: Option<LadderBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sharpness: Option<SharpnessBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imethod_bounds: Option<BoundsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergyBlock>,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn one_u32() -> u32 {
    1
}
fn two_thirds() -> f64 {
    2.0 / 3.0
}
fn stride() -> usize {
    10
}
fn rough_decay() -> f64 {
    1.51
}
fn inviscid_ladder() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}
fn inviscid_indices() -> Vec<f64> {
    vec![0.0, -0.5]
}
fn h1_ladder() -> Vec<f64> {
    vec![1.0, 1e-1, 1e-2, 1e-3]
}
fn sharpness_s() -> Vec<f64> {
    (0..=16).map(|j| -1.3 + 0.05 * j as f64).collect()
}
fn sharpness_ladder() -> Vec<f64> {
    vec![16.0, 32.0, 64.0, 128.0]
}
fn delta() -> f64 {
    0.01
}
fn cells() -> usize {
    16
}
fn bounds_s() -> f64 {
    -0.5
}
fn bounds_exponents() -> (i32, i32) {
    (4, 10)
}
fn bounds_samples() -> usize {
    10_000
}
fn bounds_epsilons() -> Vec<f64> {
    vec![0.0, 1e-3, 1.0]
}
fn bounds_alphas() -> Vec<f64> {
    vec![0.5, 1.0]
}
fn energy_cutoff() -> f64 {
    8.0
}

/// Quartic frequency configurations probed by `imethod-bounds` by default:
/// all high, two high two low, two high two very low, and all high with a
/// small pair sum.
pub fn default_bound_configs() -> Vec<BoundConfig> {
    vec![
        BoundConfig::Quartic(DyadicConfig::new("hhhh", [4.0, 4.0, 4.0, 4.0])),
        BoundConfig::Quartic(DyadicConfig::new("hhll", [4.0, 4.0, 1.0, 0.125])),
        BoundConfig::Quartic(DyadicConfig::new("hh-small", [8.0, 8.0, 0.125, 0.125])),
        BoundConfig::Quartic(
            DyadicConfig::new("hhhh-p12", [4.0, 4.0, 4.0, 4.0]).with_pair_12(0.25),
        ),
    ]
}

fn require<T: Copy>(v: Option<T>, key: &str, sub: Subcommand) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("`{key}` is required for `{}`", sub.name())))
}

impl RunConfig {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.epsilon, self.alpha)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::with_dealias(
            require(self.box_length, "box_length", self.subcommand)?,
            require(self.modes, "modes", self.subcommand)?,
            self.dealias,
        )
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        SolverConfig::new(
            self.params()?,
            self.grid()?,
            require(self.dt, "dt", self.subcommand)?,
            self.t_final,
            self.snapshot_stride,
        )
    }

    /// Output path: explicit, else `<subcommand>.<ext>` in the working directory.
    pub fn out_path(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            PathBuf::from(format!(
                "{}.{}",
                self.subcommand.name(),
                self.subcommand.extension()
            ))
        })
    }

    /// Fills in the block of the active subcommand and validates ranges.
    pub fn resolve(mut self) -> Result<Self> {
        self.params()?;
        if self.subcommand.needs_solver() {
            self.solver()?;
            if self.subcommand == Subcommand::Rate && self.initial.is_none() {
                self.initial = Some(InitialData::Rough {
                    decay: rough_decay(),
                    l2_norm: 1.0,
                });
            }
            self.initial.get_or_insert_with(InitialData::default);
        }
        match self.subcommand {
            Subcommand::Inviscid => {
                self.inviscid.get_or_insert_with(InviscidBlock::default);
            }
            Subcommand::Rate => {
                self.rate.get_or_insert_with(|| LadderBlock {
                    epsilons: inviscid_ladder(),
                });
            }
            Subcommand::H1Bound => {
                self.h1_bound.get_or_insert_with(|| LadderBlock {
                    epsilons: h1_ladder(),
                });
            }
            Subcommand::Scaling => {
                self.scaling.get_or_insert(ScalingBlock { lambda_exp: 1 });
            }
            Subcommand::Sharpness => {
                let alpha = self.alpha;
                let block = self.sharpness.get_or_insert_with(SharpnessBlock::default);
                block.regime.get_or_insert(if alpha <= 0.5 {
                    Regime::LowAlpha
                } else {
                    Regime::HighAlpha
                });
            }
            Subcommand::ImethodBounds => {
                let block = self.imethod_bounds.get_or_insert_with(BoundsBlock::default);
                for &e in &block.epsilons {
                    ModelParams::new(e, 1.0)?;
                }
                for &a in &block.alphas {
                    ModelParams::new(0.0, a)?;
                }
            }
            Subcommand::Energy => {
                self.energy.get_or_insert_with(EnergyBlock::default);
            }
            Subcommand::Solve => {}
        }
        Ok(self)
    }
}

/// Parses and resolves a JSON configuration. Unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.resolve()
}

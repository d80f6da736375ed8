//! Experiment specifications read from TOML.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::eikonal::{EikonalOptions, Lattice};
use crate::error::{param_err, Result};
use crate::norms::NormSpec;
use crate::penrose::{PenroseKind, PenroseOptions, SearchBox};
use crate::potential::{Epsilon, PairPotential};
use crate::profiles::{PhaseProfile, VelocityProfile};
use crate::quadrature::QuadSettings;
use crate::spectral::PhaseGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    EvolveWigner,
    EvolveVlasov,
    Converge,
    Penrose,
    Eikonal,
}

/// Numerical tolerance presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TolProfile {
    Fast,
    #[default]
    Strict,
}

impl TolProfile {
    pub fn penrose_options(self) -> PenroseOptions {
        match self {
            Self::Strict => PenroseOptions::default(),
            Self::Fast => PenroseOptions {
                tail_tol: 1e-12,
                quad: QuadSettings {
                    abs_tol: 1e-10,
                    rel_tol: 1e-9,
                    ..QuadSettings::default()
                },
                ..PenroseOptions::default()
            },
        }
    }

    pub fn eikonal_options(self) -> EikonalOptions {
        match self {
            Self::Strict => EikonalOptions::default(),
            Self::Fast => EikonalOptions {
                dt_ode: 4e-3,
                newton_tol: 1e-10,
                ..EikonalOptions::default()
            },
        }
    }

    /// Tail tolerance of the evolution diagnostics.
    pub fn tail_tol(self) -> f64 {
        match self {
            Self::Strict => 1e-8,
            Self::Fast => 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub lx: f64,
    pub x0: f64,
    pub nv: usize,
    pub lv: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<PhaseGrid> {
        PhaseGrid::build(self.nx, self.lx, self.x0, self.nv, self.lv)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Contact { strength: f64 },
    ScreenedCoulomb { strength: f64 },
    Lorentzian { strength: f64, width: f64 },
}

impl PotentialSpec {
    pub fn build(&self) -> PairPotential {
        match *self {
            Self::Contact { strength } => PairPotential::Contact { strength },
            Self::ScreenedCoulomb { strength } => PairPotential::ScreenedCoulomb { strength },
            Self::Lorentzian { strength, width } => PairPotential::Lorentzian { strength, width },
        }
    }
}

fn one() -> f64 {
    1.0
}

/// Phase-space initial data. Gas densities are `rho (1 + alpha cos(k x))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseProfileSpec {
    ModulatedMaxwellian {
        alpha: f64,
        k: f64,
    },
    Boltzmann {
        rho: f64,
        u: f64,
        mu: f64,
        temperature: f64,
        #[serde(default)]
        alpha: f64,
        #[serde(default = "one")]
        k: f64,
    },
    Fermi {
        rho: f64,
        u: f64,
        mu: f64,
        temperature: f64,
        #[serde(default)]
        alpha: f64,
        #[serde(default = "one")]
        k: f64,
    },
    Bose {
        rho: f64,
        u: f64,
        mu: f64,
        temperature: f64,
        #[serde(default)]
        alpha: f64,
        #[serde(default = "one")]
        k: f64,
    },
}

impl PhaseProfileSpec {
    pub fn build(&self) -> Result<PhaseProfile> {
        let gas = |rho: f64, alpha: f64, k: f64| {
            if !(0.0..1.0).contains(&alpha) {
                return Err(param_err("alpha", format!("{alpha} is outside [0, 1)")));
            }
            Ok(move |x: f64| rho * (1.0 + alpha * (k * x).cos()))
        };
        Ok(match *self {
            Self::ModulatedMaxwellian { alpha, k } => PhaseProfile::modulated_maxwellian(alpha, k)?,
            Self::Boltzmann { rho, u, mu, temperature, alpha, k } => {
                PhaseProfile::boltzmann(gas(rho, alpha, k)?, move |_| u, move |_| mu, move |_| temperature)
            }
            Self::Fermi { rho, u, mu, temperature, alpha, k } => {
                PhaseProfile::fermi(gas(rho, alpha, k)?, move |_| u, move |_| mu, move |_| temperature)
            }
            Self::Bose { rho, u, mu, temperature, alpha, k } => {
                PhaseProfile::bose(gas(rho, alpha, k)?, move |_| u, move |_| mu, move |_| temperature)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityProfileSpec {
    Maxwellian { sigma: f64 },
    TwoStream { u: f64, sigma: f64 },
    Bump { center: f64, width: f64 },
    Scaled { factor: f64, profile: Box<VelocityProfileSpec> },
}

impl VelocityProfileSpec {
    pub fn build(&self) -> Result<VelocityProfile> {
        match self {
            Self::Maxwellian { sigma } => VelocityProfile::maxwellian(*sigma),
            Self::TwoStream { u, sigma } => VelocityProfile::two_stream(*u, *sigma),
            Self::Bump { center, width } => VelocityProfile::bump(*center, *width),
            Self::Scaled { factor, profile } => Ok(profile.build()?.scaled(*factor)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "one_usize")]
    pub diag_every: usize,
    #[serde(default)]
    pub snapshot_every: usize,
}

fn one_usize() -> usize {
    1
}

fn three() -> usize {
    3
}

/// A Penrose scan; `profile` takes precedence over the phase-space profile,
/// which is otherwise scanned on the x grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenroseSpec {
    pub kind: PenroseKind,
    #[serde(default)]
    pub profile: Option<VelocityProfileSpec>,
    #[serde(default, rename = "box")]
    pub search: SearchBox,
    #[serde(default = "three")]
    pub refine_levels: usize,
}

/// Source of `V_rho` for the eikonal experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum VrhoSpec {
    /// `V_rho(t, x) = amplitude (1 + growth t) cos(mode x)`.
    Cosine { amplitude: f64, mode: f64, growth: f64 },
    /// Density history of a Vlasov-Benney run on the configured grid.
    Vlasov,
    /// Density history of a Wigner run.
    Wigner { eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EikonalSpec {
    pub source: VrhoSpec,
    pub s: f64,
    pub t: f64,
    pub lattice: Lattice,
    /// Largest window probed for the empirical validity window.
    pub window_max: f64,
    pub window_samples: usize,
}

/// A complete experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub profile: Option<PhaseProfileSpec>,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub time: Option<TimeSpec>,
    /// Strictly decreasing, each in `(0, 1]`.
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub norms: Vec<NormSpec>,
    #[serde(default)]
    pub penrose: Option<PenroseSpec>,
    #[serde(default)]
    pub eikonal: Option<EikonalSpec>,
    #[serde(default)]
    pub tol_profile: TolProfile,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(Self::from_toml(&text)?)
    }

    pub fn grid(&self) -> Result<PhaseGrid> {
        self.grid
            .ok_or_else(|| param_err("grid", format!("{:?} needs a [grid] table", self.kind)))?
            .build()
    }

    pub fn phase_profile(&self) -> Result<PhaseProfile> {
        self.profile
            .ok_or_else(|| param_err("profile", format!("{:?} needs a [profile] table", self.kind)))?
            .build()
    }

    pub fn time(&self) -> Result<TimeSpec> {
        self.time
            .ok_or_else(|| param_err("time", format!("{:?} needs a [time] table", self.kind)))
    }

    pub fn epsilons(&self) -> Result<Vec<Epsilon>> {
        if self.eps.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(param_err("eps", "list must be strictly decreasing"));
        }
        self.eps.iter().map(|&e| Epsilon::new(e)).collect()
    }

    /// Checks that every table the experiment kind needs is present.
    pub fn validate(&self) -> Result<()> {
        self.epsilons()?;
        match self.kind {
            ExperimentKind::EvolveWigner | ExperimentKind::EvolveVlasov | ExperimentKind::Converge => {
                self.grid()?;
                self.phase_profile()?;
                self.time()?;
                if self.kind != ExperimentKind::EvolveVlasov && self.eps.is_empty() {
                    return Err(param_err("eps", "at least one value is required"));
                }
            }
            ExperimentKind::Penrose => {
                let p = self
                    .penrose
                    .as_ref()
                    .ok_or_else(|| param_err("penrose", "missing [penrose] table"))?;
                if p.profile.is_none() {
                    self.grid()?;
                    self.phase_profile()?;
                }
            }
            ExperimentKind::Eikonal => {
                let e = self
                    .eikonal
                    .as_ref()
                    .ok_or_else(|| param_err("eikonal", "missing [eikonal] table"))?;
                if !matches!(e.source, VrhoSpec::Cosine { .. }) {
                    self.grid()?;
                    self.phase_profile()?;
                    self.time()?;
                }
            }
        }
        Ok(())
    }

    /// Built-in configuration of the `converge` experiment.
    pub fn example_converge() -> Self {
        Self {
            kind: ExperimentKind::Converge,
            seed: 0,
            grid: Some(GridSpec {
                nx: 64,
                lx: 2.0 * PI,
                x0: 0.0,
                nv: 128,
                lv: 20.0,
            }),
            profile: Some(PhaseProfileSpec::ModulatedMaxwellian { alpha: 0.1, k: 1.0 }),
            potential: PotentialSpec::Contact { strength: 1.0 },
            time: Some(TimeSpec {
                dt: 0.005,
                t_end: 0.25,
                diag_every: 5,
                snapshot_every: 5,
            }),
            eps: vec![0.2, 0.1, 0.05],
            norms: Vec::new(),
            penrose: None,
            eikonal: None,
            tol_profile: TolProfile::Strict,
        }
    }
}

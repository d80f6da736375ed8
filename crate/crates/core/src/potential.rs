use std::fmt;
use std::sync::Arc;

use crate::error::{param_err, Result};

/// Fourier transform `V_hat(xi)` of a real, even pair potential.
///
/// The semiclassical interaction is `V_eps = eps^{-1} V(./eps)`, so the
/// solvers evaluate `V_hat(eps k)` on the spatial frequency lattice.
#[derive(Clone)]
pub enum PairPotential {
    /// `V_hat = strength`: contact interaction (cubic NLS). `+1` is
    /// defocusing, `-1` focusing, `0` switches the nonlinearity off.
    Contact { strength: f64 },
    /// `V_hat(xi) = strength / (1 + xi^2)`.
    ScreenedCoulomb { strength: f64 },
    /// `V_hat(xi) = strength * exp(-width |xi|)`, the transform of a
    /// Lorentzian potential. Lipschitz but not differentiable at 0.
    Lorentzian { strength: f64, width: f64 },
    /// User supplied transform; `sup` must bound `|V_hat|`.
    Custom {
        name: String,
        vhat: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        sup: f64,
    },
}

impl fmt::Debug for PairPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Contact { strength } => write!(f, "Contact({strength})"),
            Self::ScreenedCoulomb { strength } => write!(f, "ScreenedCoulomb({strength})"),
            Self::Lorentzian { strength, width } => write!(f, "Lorentzian({strength}, {width})"),
            Self::Custom { name, sup, .. } => write!(f, "Custom({name}, sup={sup})"),
        }
    }
}

impl PairPotential {
    pub fn defocusing_cubic() -> Self {
        Self::Contact { strength: 1.0 }
    }

    pub fn focusing_cubic() -> Self {
        Self::Contact { strength: -1.0 }
    }

    pub fn free() -> Self {
        Self::Contact { strength: 0.0 }
    }

    pub fn vhat(&self, xi: f64) -> f64 {
        match self {
            Self::Contact { strength } => *strength,
            Self::ScreenedCoulomb { strength } => strength / (1.0 + xi * xi),
            Self::Lorentzian { strength, width } => strength * (-width * xi.abs()).exp(),
            Self::Custom { vhat, .. } => vhat(xi),
        }
    }

    /// `c_V = <V, 1> = V_hat(0)`.
    pub fn c_v(&self) -> f64 {
        self.vhat(0.0)
    }

    /// `sup |V_hat|`.
    pub fn sup_norm(&self) -> f64 {
        match self {
            Self::Contact { strength }
            | Self::ScreenedCoulomb { strength }
            | Self::Lorentzian { strength, .. } => strength.abs(),
            Self::Custom { sup, .. } => *sup,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Custom { .. } => false,
            _ => self.sup_norm() == 0.0,
        }
    }
}

/// Semiclassical parameter, `0 < eps <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Epsilon(f64);

impl Epsilon {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value <= 1.0 {
            Ok(Self(value))
        } else {
            Err(param_err("eps", format!("{value} is outside (0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

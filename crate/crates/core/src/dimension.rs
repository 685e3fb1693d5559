use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{NlwError, Result};

/// Spatial dimension N of the energy-critical problem, restricted to {3, 4, 5}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Dimension(u32);

impl Dimension {
    pub const THREE: Dimension = Dimension(3);
    pub const FOUR: Dimension = Dimension(4);
    pub const FIVE: Dimension = Dimension(5);

    pub const ALL: [Dimension; 3] = [Self::THREE, Self::FOUR, Self::FIVE];

    pub fn new(n: u32) -> Result<Self> {
        match n {
            3..=5 => Ok(Dimension(n)),
            _ => Err(NlwError::UnsupportedDimension(n)),
        }
    }

    pub fn n(self) -> u32 {
        self.0
    }

    pub fn nf(self) -> f64 {
        self.0 as f64
    }

    /// (N-2)/2, the scaling weight of the field.
    pub fn scaling_exponent(self) -> f64 {
        (self.nf() - 2.0) / 2.0
    }

    /// 4/(N-2), so that the nonlinearity is |u|^{4/(N-2)} u.
    pub fn nonlinear_power(self) -> f64 {
        4.0 / (self.nf() - 2.0)
    }

    /// 2N/(N-2), the critical Sobolev exponent.
    pub fn critical_exponent(self) -> f64 {
        2.0 * self.nf() / (self.nf() - 2.0)
    }

    /// 2(N+1)/(N-2), the space-time Strichartz exponent of S(I).
    pub fn strichartz_exponent(self) -> f64 {
        2.0 * (self.nf() + 1.0) / (self.nf() - 2.0)
    }

    /// (N-2)/(2N), the weight of the potential term in the energy.
    pub fn potential_weight(self) -> f64 {
        (self.nf() - 2.0) / (2.0 * self.nf())
    }

    /// N(N-2), the squared length scale inside W.
    pub fn w_scale_sq(self) -> f64 {
        self.nf() * (self.nf() - 2.0)
    }

    /// Area of the unit sphere S^{N-1}.
    pub fn sphere_area(self) -> f64 {
        match self.0 {
            3 => 4.0 * PI,
            4 => 2.0 * PI * PI,
            5 => 8.0 * PI * PI / 3.0,
            _ => unreachable!("dimension validated at construction"),
        }
    }

    /// Area of the unit sphere S^{N-2} (cross-sections orthogonal to an axis).
    pub fn subsphere_area(self) -> f64 {
        match self.0 {
            3 => 2.0 * PI,
            4 => 4.0 * PI,
            5 => 2.0 * PI * PI,
            _ => unreachable!("dimension validated at construction"),
        }
    }

    /// r^{N-1}
    pub fn radial_weight(self, r: f64) -> f64 {
        r.powi(self.0 as i32 - 1)
    }
}

impl TryFrom<u32> for Dimension {
    type Error = NlwError;
    fn try_from(n: u32) -> Result<Self> {
        Dimension::new(n)
    }
}

impl From<Dimension> for u32 {
    fn from(d: Dimension) -> u32 {
        d.0
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N={}", self.0)
    }
}

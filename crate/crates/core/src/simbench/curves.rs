use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Random true-curve families on `[0, 1]`, each driven by one scalar `η`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CurveFamily {
    /// `η`
    Constant,
    /// `sin(2πt) - t + 2η cos(4πt)`
    Periodic,
    /// `3t + 2ηt`
    Linear,
    /// `5η {(t - 0.5)² - 2t(1 - t)}`
    Nonlinear,
}

impl CurveFamily {
    pub const ALL: [CurveFamily; 4] = [
        CurveFamily::Constant,
        CurveFamily::Periodic,
        CurveFamily::Linear,
        CurveFamily::Nonlinear,
    ];

    /// Short label `f1`..`f4`.
    pub fn label(self) -> &'static str {
        match self {
            CurveFamily::Constant => "f1",
            CurveFamily::Periodic => "f2",
            CurveFamily::Linear => "f3",
            CurveFamily::Nonlinear => "f4",
        }
    }

    pub fn value(self, eta: f64, t: f64) -> f64 {
        use std::f64::consts::PI;
        match self {
            CurveFamily::Constant => eta,
            CurveFamily::Periodic => (2.0 * PI * t).sin() - t + 2.0 * eta * (4.0 * PI * t).cos(),
            CurveFamily::Linear => 3.0 * t + 2.0 * eta * t,
            CurveFamily::Nonlinear => 5.0 * eta * ((t - 0.5).powi(2) - 2.0 * t * (1.0 - t)),
        }
    }
}

impl fmt::Display for CurveFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CurveFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f1" | "constant" => Ok(CurveFamily::Constant),
            "f2" | "periodic" => Ok(CurveFamily::Periodic),
            "f3" | "linear" => Ok(CurveFamily::Linear),
            "f4" | "nonlinear" => Ok(CurveFamily::Nonlinear),
            other => Err(Error::InvalidArgument(format!(
                "unknown curve family `{other}`"
            ))),
        }
    }
}

/// Equispaced grid `t_k = k / (size - 1)`, `k = 0..size`.
pub fn unit_grid(size: usize) -> Vec<f64> {
    match size {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let last = (size - 1) as f64;
            (0..size).map(|k| k as f64 / last).collect()
        }
    }
}

/// True curve values of `family` with parameter `eta` on `grid`.
pub fn gen_curve(family: CurveFamily, eta: f64, grid: &[f64]) -> Vec<f64> {
    grid.iter().map(|&t| family.value(eta, t)).collect()
}

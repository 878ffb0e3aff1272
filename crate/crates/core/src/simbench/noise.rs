use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Samples discarded before a recursive noise path is emitted.
pub const BURN_IN: usize = 500;

/// Noise mechanisms driven by i.i.d. standard normal innovations `ξ_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoiseKind {
    /// `ε_k = ξ_k`
    White,
    /// `ε_k = 0.8 ε_{k-1} + ξ_k`
    Ar,
    /// `ε_k = 0.8 ε_{k-10} + 0.8 ξ_{k-10} + ξ_k`
    Sarma,
    /// `ε_k = 0.8 ε_{k-1} + 0.2 ξ_{k-1} - 0.2 ε_{k-1} ξ_{k-1} + ξ_k`
    Bilinear,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 4] = [
        NoiseKind::White,
        NoiseKind::Ar,
        NoiseKind::Sarma,
        NoiseKind::Bilinear,
    ];

    pub fn label(self) -> &'static str {
        match self {
            NoiseKind::White => "WN",
            NoiseKind::Ar => "AR",
            NoiseKind::Sarma => "SARMA",
            NoiseKind::Bilinear => "BILR",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "WN" => Ok(NoiseKind::White),
            "AR" => Ok(NoiseKind::Ar),
            "SARMA" => Ok(NoiseKind::Sarma),
            "BILR" => Ok(NoiseKind::Bilinear),
            other => Err(Error::InvalidArgument(format!(
                "unknown noise mechanism `{other}`"
            ))),
        }
    }
}

/// `length` noise values. Recursive mechanisms start from zero lags and
/// drop the first [`BURN_IN`] samples.
pub fn gen_noise<R: Rng + ?Sized>(kind: NoiseKind, length: usize, rng: &mut R) -> Vec<f64> {
    let mut xi = || -> f64 { rng.sample(StandardNormal) };
    if kind == NoiseKind::White {
        return (0..length).map(|_| xi()).collect();
    }
    let total = BURN_IN + length;
    let mut eps = vec![0.0; total];
    let mut innov = vec![0.0; total];
    for k in 0..total {
        let x = xi();
        innov[k] = x;
        eps[k] = match kind {
            NoiseKind::White => unreachable!(),
            NoiseKind::Ar => 0.8 * lag(&eps, k, 1) + x,
            NoiseKind::Sarma => 0.8 * lag(&eps, k, 10) + 0.8 * lag(&innov, k, 10) + x,
            NoiseKind::Bilinear => {
                let (e1, x1) = (lag(&eps, k, 1), lag(&innov, k, 1));
                0.8 * e1 + 0.2 * x1 - 0.2 * e1 * x1 + x
            }
        };
    }
    eps.split_off(BURN_IN)
}

#[inline]
fn lag(v: &[f64], k: usize, by: usize) -> f64 {
    if k >= by {
        v[k - by]
    } else {
        0.0
    }
}

//! Mixed-model view of the smoothing spline: `y = Xβ + u + ε` with
//! `cov(u) = σ_u² R` and `cov(ε) = σ² I`.

use crate::dataset::Subject;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `(T_U - T_L)⁻² ∫_{T_L}^{T_U} (s - τ)₊ (t - τ)₊ dτ`, in closed form.
pub fn kernel_entry<T: Real>(s: T, t: T, t_lower: T, t_upper: T) -> Result<T> {
    if !(t_lower < t_upper) {
        return Err(Error::InvalidArgument(format!(
            "domain [{t_lower}, {t_upper}] is empty"
        )));
    }
    for x in [s, t] {
        if !(t_lower <= x && x <= t_upper) {
            return Err(Error::OutsideDomain {
                time: x.to_f64_lossy(),
                lower: t_lower.to_f64_lossy(),
                upper: t_upper.to_f64_lossy(),
            });
        }
    }
    Ok(kernel_unchecked(s, t, t_lower, t_upper))
}

pub(crate) fn kernel_unchecked<T: Real>(s: T, t: T, t_lower: T, t_upper: T) -> T {
    let a = s - t_lower;
    let b = t - t_lower;
    let (m, big) = if a < b { (a, b) } else { (b, a) };
    let width = t_upper - t_lower;
    m * m * (T::lit(3.0) * big - m) / (T::lit(6.0) * width * width)
}

/// Design pieces of the mixed-model representation for one subject.
///
/// Holds only the times and domain; the dense `K × 2` fixed-effect design and
/// `K × K` kernel matrix are built on request.
#[derive(Clone, Debug)]
pub struct MixedModelParts<T> {
    times: Vec<T>,
    t_lower: T,
    t_upper: T,
}

impl<T: Real> MixedModelParts<T> {
    pub fn new(subject: &Subject<T>, domain: (T, T)) -> Result<Self> {
        let (t_lower, t_upper) = domain;
        if !(t_lower < t_upper) {
            return Err(Error::InvalidArgument(format!(
                "domain [{t_lower}, {t_upper}] is empty"
            )));
        }
        if let Some(&t) = subject
            .times()
            .iter()
            .find(|&&t| !(t_lower <= t && t <= t_upper))
        {
            return Err(Error::OutsideDomain {
                time: t.to_f64_lossy(),
                lower: t_lower.to_f64_lossy(),
                upper: t_upper.to_f64_lossy(),
            });
        }
        Ok(Self {
            times: subject.times().to_vec(),
            t_lower,
            t_upper,
        })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn domain(&self) -> (T, T) {
        (self.t_lower, self.t_upper)
    }

    pub fn width(&self) -> T {
        self.t_upper - self.t_lower
    }

    /// Rows `[1, t_k]`.
    pub fn design_fixed(&self) -> Vec<[T; 2]> {
        self.times.iter().map(|&t| [T::one(), t]).collect()
    }

    /// Dense kernel matrix, row major.
    pub fn kernel_matrix(&self) -> Vec<Vec<T>> {
        self.times
            .iter()
            .map(|&s| {
                self.times
                    .iter()
                    .map(|&t| kernel_unchecked(s, t, self.t_lower, self.t_upper))
                    .collect()
            })
            .collect()
    }
}

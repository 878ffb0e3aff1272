//! Natural cubic smoothing splines via the Reinsch band formulation.
//!
//! For knots `t_1 < … < t_K` with spacings `h_k`, the roughness penalty of the
//! natural interpolant through `g` is `gᵀ Q R⁻¹ Qᵀ g`, where `Q` is `K × (K-2)`
//! with three nonzeros per column and `R` is tridiagonal. Minimising
//! `‖y - g‖² + α gᵀ Q R⁻¹ Qᵀ g` gives `(R + α QᵀQ) γ = Qᵀ y` and
//! `g = y - α Q γ`, where `γ` holds the second derivatives at the interior
//! knots. Everything is banded, so a fit costs `O(K)`.

use crate::dataset::Subject;
use crate::error::{Error, Result};
use crate::scalar::Real;

use super::band::{BandLdl, Pentadiagonal};

/// Banded pieces of the Reinsch system for one set of knots.
#[derive(Clone, Debug)]
pub(crate) struct ReinschBands<T> {
    pub h: Vec<T>,
    pub qtq: Pentadiagonal<T>,
    pub r: Pentadiagonal<T>,
}

impl<T: Real> ReinschBands<T> {
    pub fn new(times: &[T]) -> Self {
        let n = times.len();
        debug_assert!(n >= 3);
        let h: Vec<T> = times.windows(2).map(|w| w[1] - w[0]).collect();
        let m = n - 2;
        let mut qtq = Pentadiagonal::zeros(m);
        let mut r = Pentadiagonal::zeros(m);
        let three = T::lit(3.0);
        let six = T::lit(6.0);
        for j in 0..m {
            let (a, b) = (h[j].recip(), h[j + 1].recip());
            qtq.diag[j] = a * a + (a + b) * (a + b) + b * b;
            r.diag[j] = (h[j] + h[j + 1]) / three;
            if j + 1 < m {
                let c = h[j + 2].recip();
                qtq.off1[j] = -(a + b) * b - b * (b + c);
                r.off1[j] = h[j + 1] / six;
            }
            if j + 2 < m {
                qtq.off2[j] = b * h[j + 2].recip();
            }
        }
        Self { h, qtq, r }
    }

    pub fn interior(&self) -> usize {
        self.h.len() - 1
    }

    pub fn qt_mul(&self, y: &[T]) -> Vec<T> {
        (0..self.interior())
            .map(|j| (y[j] - y[j + 1]) / self.h[j] + (y[j + 2] - y[j + 1]) / self.h[j + 1])
            .collect()
    }

    pub fn q_mul(&self, v: &[T]) -> Vec<T> {
        let n = self.h.len() + 1;
        let mut out = vec![T::zero(); n];
        for (j, &vj) in v.iter().enumerate() {
            let (a, b) = (self.h[j].recip(), self.h[j + 1].recip());
            out[j] += a * vj;
            out[j + 1] -= (a + b) * vj;
            out[j + 2] += b * vj;
        }
        out
    }

    /// Factors `R / α + QᵀQ`, the Reinsch matrix divided by `α`.
    pub fn factor_scaled(&self, alpha: T) -> Result<BandLdl<T>, usize> {
        self.r.scaled_add(alpha.recip(), &self.qtq).factor()
    }
}

/// A fitted natural cubic smoothing spline.
///
/// On interval `[t_k, t_{k+1}]` the curve is `a + b·x + c·x² + d·x³` with
/// `x = t - t_k`; outside the knot range it continues linearly.
#[derive(Clone, Debug, PartialEq)]
pub struct SplineFit<T> {
    subject_id: String,
    knots: Vec<T>,
    fitted: Vec<T>,
    coefficients: Vec<[T; 4]>,
    lambda: T,
    domain: (T, T),
}

/// Fits `argmin (1/K)‖y - f‖² + λ ∫ f''²` over natural cubic splines.
///
/// The returned fit may be evaluated on the subject's own knot range; use
/// [`fit_on_domain`] to widen that.
pub fn fit_given_lambda<T: Real>(subject: &Subject<T>, lambda: T) -> Result<SplineFit<T>> {
    let times = subject.times();
    let domain = match (times.first(), times.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::InvalidArgument("subject has no observations".into())),
    };
    fit_on_domain(subject, lambda, domain)
}

/// As [`fit_given_lambda`], with evaluation allowed anywhere in `domain`.
pub fn fit_on_domain<T: Real>(
    subject: &Subject<T>,
    lambda: T,
    domain: (T, T),
) -> Result<SplineFit<T>> {
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "smoothing parameter must be positive and finite, got {lambda}"
        )));
    }
    let times = subject.times();
    let y = subject.values();
    let n = times.len();
    if n < 3 || y.len() != n || times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(format!(
            "subject {}: needs at least 3 strictly increasing times with matching values",
            subject.id()
        )));
    }
    let (lo, hi) = domain;
    if !(lo <= times[0] && times[n - 1] <= hi) {
        return Err(Error::OutsideDomain {
            time: if times[0] < lo {
                times[0]
            } else {
                times[n - 1]
            }
            .to_f64_lossy(),
            lower: lo.to_f64_lossy(),
            upper: hi.to_f64_lossy(),
        });
    }

    let bands = ReinschBands::new(times);
    let alpha = T::from_usize_lossy(n) * lambda;
    let fac = bands
        .factor_scaled(alpha)
        .map_err(|pivot| singular(subject, pivot))?;
    // delta = alpha * gamma
    let delta = fac.solve(&bands.qt_mul(y));
    let correction = bands.q_mul(&delta);
    let fitted: Vec<T> = y.iter().zip(&correction).map(|(&a, &b)| a - b).collect();

    let mut gamma = Vec::with_capacity(n);
    gamma.push(T::zero());
    gamma.extend(delta.iter().map(|&d| d / alpha));
    gamma.push(T::zero());

    if fitted.iter().chain(&gamma).any(|x| !x.is_finite()) {
        return Err(singular(subject, 0));
    }

    Ok(SplineFit::from_values_and_curvature(
        subject.id().to_string(),
        times.to_vec(),
        fitted,
        &gamma,
        lambda,
        domain,
    ))
}

fn singular<T: Real>(subject: &Subject<T>, pivot: usize) -> Error {
    let t = subject.times();
    let lo = pivot;
    let hi = (pivot + 3).min(t.len());
    Error::SingularSystem {
        subject: subject.id().to_string(),
        knots: t[lo..hi].iter().map(|x| x.to_f64_lossy()).collect(),
    }
}

impl<T: Real> SplineFit<T> {
    /// Assembles the piecewise cubic from knot values and second derivatives.
    pub(crate) fn from_values_and_curvature(
        subject_id: String,
        knots: Vec<T>,
        fitted: Vec<T>,
        gamma: &[T],
        lambda: T,
        domain: (T, T),
    ) -> Self {
        let two = T::lit(2.0);
        let six = T::lit(6.0);
        let coefficients = knots
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let h = w[1] - w[0];
                let (g0, g1) = (fitted[k], fitted[k + 1]);
                let (c0, c1) = (gamma[k], gamma[k + 1]);
                [
                    g0,
                    (g1 - g0) / h - h * (two * c0 + c1) / six,
                    c0 / two,
                    (c1 - c0) / (six * h),
                ]
            })
            .collect();
        Self {
            subject_id,
            knots,
            fitted,
            coefficients,
            lambda,
            domain,
        }
    }

    /// A piecewise cubic given directly by its per-interval coefficients,
    /// e.g. a curve fitted elsewhere. `lambda()` reports zero for such fits.
    pub fn from_pieces(
        subject_id: impl Into<String>,
        knots: Vec<T>,
        coefficients: Vec<[T; 4]>,
        domain: (T, T),
    ) -> Result<Self> {
        let n = knots.len();
        if n < 2
            || coefficients.len() != n - 1
            || knots.windows(2).any(|w| !(w[0] < w[1]))
            || !(domain.0 <= knots[0] && knots[n - 1] <= domain.1)
        {
            return Err(Error::InvalidArgument(
                "pieces need increasing knots inside the domain and one cubic per interval".into(),
            ));
        }
        let mut fitted: Vec<T> = coefficients.iter().map(|c| c[0]).collect();
        let [a, b, c, d] = coefficients[n - 2];
        let h = knots[n - 1] - knots[n - 2];
        fitted.push(a + h * (b + h * (c + h * d)));
        Ok(Self {
            subject_id: subject_id.into(),
            knots,
            fitted,
            coefficients,
            lambda: T::zero(),
            domain,
        })
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    /// Fitted values at the knots.
    pub fn fitted(&self) -> &[T] {
        &self.fitted
    }

    /// Per-interval `[a, b, c, d]` power-basis coefficients about the left knot.
    pub fn coefficients(&self) -> &[[T; 4]] {
        &self.coefficients
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn domain(&self) -> (T, T) {
        self.domain
    }

    /// Residual sum of squares against `values` observed at the knots.
    pub fn rss(&self, values: &[T]) -> T {
        self.fitted
            .iter()
            .zip(values)
            .map(|(&f, &y)| (y - f) * (y - f))
            .sum()
    }

    /// Value at `t`, which must lie in the fit's domain.
    pub fn evaluate(&self, t: T) -> Result<T> {
        let (lo, hi) = self.domain;
        if !(lo <= t && t <= hi) {
            return Err(Error::OutsideDomain {
                time: t.to_f64_lossy(),
                lower: lo.to_f64_lossy(),
                upper: hi.to_f64_lossy(),
            });
        }
        Ok(self.eval_unchecked(t))
    }

    /// Value, first and second derivative at `t`, extrapolating linearly.
    pub fn derivatives(&self, t: T) -> [T; 3] {
        let n = self.knots.len();
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        if t < self.knots[0] {
            let [a, b, _, _] = self.coefficients[0];
            return [a + b * (t - self.knots[0]), b, T::zero()];
        }
        if t > self.knots[n - 1] {
            let (v, s) = self.right_end();
            return [v + s * (t - self.knots[n - 1]), s, T::zero()];
        }
        let k = self.interval(t);
        let [a, b, c, d] = self.coefficients[k];
        let x = t - self.knots[k];
        [
            a + x * (b + x * (c + x * d)),
            b + x * (two * c + x * three * d),
            two * c + T::lit(6.0) * d * x,
        ]
    }

    pub(crate) fn eval_unchecked(&self, t: T) -> T {
        let n = self.knots.len();
        if t < self.knots[0] {
            let [a, b, _, _] = self.coefficients[0];
            return a + b * (t - self.knots[0]);
        }
        if t > self.knots[n - 1] {
            let (v, s) = self.right_end();
            return v + s * (t - self.knots[n - 1]);
        }
        let k = self.interval(t);
        let [a, b, c, d] = self.coefficients[k];
        let x = t - self.knots[k];
        a + x * (b + x * (c + x * d))
    }

    /// Index of the interval containing `t`, assuming `t` is inside the knot range.
    pub(crate) fn interval(&self, t: T) -> usize {
        let p = self.knots.partition_point(|&k| k <= t);
        p.saturating_sub(1).min(self.coefficients.len() - 1)
    }

    fn right_end(&self) -> (T, T) {
        let n = self.knots.len();
        let [_, b, c, d] = self.coefficients[n - 2];
        let h = self.knots[n - 1] - self.knots[n - 2];
        (
            self.fitted[n - 1],
            b + h * (T::lit(2.0) * c + T::lit(3.0) * d * h),
        )
    }
}

//! Smoothing-parameter selection by restricted maximum likelihood.
//!
//! With `σ_u² = σ² / (K λ)` the marginal covariance is `σ² (I + R / (K λ))`.
//! Profiling `σ²` out, the restricted log-likelihood is
//!
//! ```text
//! ℓ(λ) = -½ [ (K-2) (ln(2π σ̂²) + 1) - ln det⁺(I - A) ],   σ̂² = yᵀ(I - A)y / (K-2)
//! ```
//!
//! where `A` is the hat matrix of the spline smoother whose penalty weight on
//! `∫ f''²` is `α = K λ (T_U - T_L)²`. Through the Reinsch bands,
//! `yᵀ(I - A)y = (Qᵀy)ᵀ δ` with `(R/α + QᵀQ) δ = Qᵀy`, and
//! `det⁺(I - A) = det(QᵀQ) / det(R/α + QᵀQ)`, so every evaluation is `O(K)`.

use crate::dataset::Subject;
use crate::error::{Error, Result};
use crate::scalar::Real;

use super::fit::ReinschBands;
use super::kernel::MixedModelParts;

/// Search bounds on `log10 λ`.
pub const LOG10_LAMBDA_MIN: f64 = -8.0;
pub const LOG10_LAMBDA_MAX: f64 = 8.0;
/// Points on the coarse `log10 λ` grid, endpoints included.
pub const COARSE_GRID_POINTS: usize = 33;
/// Final bracket width of the golden-section refinement, in `log10 λ`.
pub const REFINE_TOLERANCE: f64 = 1e-3;

/// Outcome of REML smoothing-parameter selection for one subject.
#[derive(Clone, Debug, PartialEq)]
pub struct RemlSelection<T> {
    /// Mixed-model smoothing parameter; `K λ̂ = σ̂² / σ̂_u²`.
    pub lambda_hat: T,
    pub sigma2_hat: T,
    pub sigma_u2_hat: T,
    /// Restricted log-likelihood at `lambda_hat`.
    pub reml_value: T,
    /// Weight on `∫ f''²` in the `(1/K)`-scaled least-squares objective that
    /// reproduces the mixed-model BLUP: `λ̂ (T_U - T_L)²`.
    pub penalty_lambda: T,
}

/// Converts a mixed-model smoothing parameter to the weight used by
/// [`fit_on_domain`](super::fit_on_domain) over a domain of the given width.
pub fn penalty_lambda<T: Real>(lambda: T, domain: (T, T)) -> T {
    let w = domain.1 - domain.0;
    lambda * w * w
}

/// Per-subject state reused across every `λ` the search visits.
pub(crate) struct RemlProfile<'a, T> {
    id: &'a str,
    bands: ReinschBands<T>,
    qty: Vec<T>,
    log_det_qtq: T,
    k: usize,
    width2: T,
}

impl<'a, T: Real> RemlProfile<'a, T> {
    pub fn new(subject: &'a Subject<T>, parts: &MixedModelParts<T>) -> Result<Self> {
        let times = subject.times();
        let y = subject.values();
        let k = times.len();
        if k < 4 || y.len() != k || parts.times() != times {
            return Err(Error::InvalidArgument(format!(
                "subject {}: mixed-model parts do not match the subject's {} times",
                subject.id(),
                k
            )));
        }
        if residual_after_line(times, y) {
            return Err(Error::DegenerateSubject(subject.id().to_string()));
        }
        let bands = ReinschBands::new(times);
        let log_det_qtq = bands
            .qtq
            .factor()
            .map_err(|p| singular(subject, p))?
            .log_det();
        let qty = bands.qt_mul(y);
        let w = parts.width();
        Ok(Self {
            id: subject.id(),
            bands,
            qty,
            log_det_qtq,
            k,
            width2: w * w,
        })
    }

    /// Returns `(ℓ(λ), σ̂²)`.
    pub fn evaluate(&self, lambda: T) -> Result<(T, T)> {
        let alpha = T::from_usize_lossy(self.k) * lambda * self.width2;
        let fac = self
            .bands
            .factor_scaled(alpha)
            .map_err(|p| Error::SingularSystem {
                subject: self.id.to_string(),
                knots: vec![p as f64],
            })?;
        let delta = fac.solve(&self.qty);
        let quad: T = self.qty.iter().zip(&delta).map(|(&a, &b)| a * b).sum();
        let dof = T::from_usize_lossy(self.k - 2);
        let sigma2 = quad / dof;
        if !(sigma2 > T::zero()) || !sigma2.is_finite() {
            return Err(Error::DegenerateSubject(self.id.to_string()));
        }
        let log_det_plus = self.log_det_qtq - fac.log_det();
        let two_pi = T::lit(2.0) * T::PI();
        let ll = -(dof * ((two_pi * sigma2).ln() + T::one()) - log_det_plus) / T::lit(2.0);
        Ok((ll, sigma2))
    }
}

fn singular<T: Real>(subject: &Subject<T>, pivot: usize) -> Error {
    let t = subject.times();
    Error::SingularSystem {
        subject: subject.id().to_string(),
        knots: t[pivot..(pivot + 3).min(t.len())]
            .iter()
            .map(|x| x.to_f64_lossy())
            .collect(),
    }
}

/// True when `y` is (numerically) an exact straight line in `t`.
fn residual_after_line<T: Real>(t: &[T], y: &[T]) -> bool {
    let n = T::from_usize_lossy(t.len());
    let tm = t.iter().copied().sum::<T>() / n;
    let ym = y.iter().copied().sum::<T>() / n;
    let (mut stt, mut sty, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&ti, &yi) in t.iter().zip(y) {
        let (dt, dy) = (ti - tm, yi - ym);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    let rss = if stt > T::zero() {
        syy - sty * sty / stt
    } else {
        syy
    };
    let scale: T = y.iter().map(|&v| v * v).sum();
    let tol = T::epsilon() * T::lit(64.0);
    !(rss > tol * tol * scale) || syy == T::zero()
}

/// Restricted log-likelihood at a single `λ` on the mixed-model scale.
pub fn restricted_loglik<T: Real>(
    subject: &Subject<T>,
    parts: &MixedModelParts<T>,
    lambda: T,
) -> Result<T> {
    RemlProfile::new(subject, parts)?
        .evaluate(lambda)
        .map(|(ll, _)| ll)
}

/// The coarse `log10 λ` grid the search starts from.
pub fn coarse_grid() -> Vec<f64> {
    let step = (LOG10_LAMBDA_MAX - LOG10_LAMBDA_MIN) / (COARSE_GRID_POINTS - 1) as f64;
    (0..COARSE_GRID_POINTS)
        .map(|i| LOG10_LAMBDA_MIN + step * i as f64)
        .collect()
}

/// Maximises the restricted likelihood over `log10 λ ∈ [-8, 8]`: a 33-point
/// grid locates the basin, golden-section search refines it to `1e-3`.
pub fn select_lambda_reml<T: Real>(
    subject: &Subject<T>,
    parts: &MixedModelParts<T>,
) -> Result<RemlSelection<T>> {
    let profile = RemlProfile::new(subject, parts)?;
    let eval = |log10_lambda: f64| -> Result<(T, T)> {
        profile.evaluate(T::lit(10f64.powf(log10_lambda)))
    };

    let grid = coarse_grid();
    let mut best = (grid[0], eval(grid[0])?);
    let mut best_idx = 0;
    for (i, &x) in grid.iter().enumerate().skip(1) {
        let v = eval(x)?;
        if v.0 > best.1 .0 {
            best = (x, v);
            best_idx = i;
        }
    }

    let mut lo = grid[best_idx.saturating_sub(1)];
    let mut hi = grid[(best_idx + 1).min(grid.len() - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while hi - lo > REFINE_TOLERANCE {
        if f1.0 >= f2.0 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2)?;
        }
    }
    for cand in [(x1, f1), (x2, f2)] {
        if cand.1 .0 > best.1 .0 {
            best = cand;
        }
    }

    let (log10_lambda, (reml_value, sigma2_hat)) = best;
    let lambda_hat = T::lit(10f64.powf(log10_lambda));
    let k = T::from_usize_lossy(subject.len());
    Ok(RemlSelection {
        lambda_hat,
        sigma2_hat,
        sigma_u2_hat: sigma2_hat / (k * lambda_hat),
        reml_value,
        penalty_lambda: penalty_lambda(lambda_hat, parts.domain()),
    })
}

/// REML selection for a subject on the given domain, with errors tagged by subject.
pub fn select_for_subject<T: Real>(
    subject: &Subject<T>,
    domain: (T, T),
) -> Result<RemlSelection<T>> {
    MixedModelParts::new(subject, domain)
        .and_then(|parts| select_lambda_reml(subject, &parts))
        .map_err(|e| Error::Reml {
            subject: subject.id().to_string(),
            source: Box::new(e),
        })
}

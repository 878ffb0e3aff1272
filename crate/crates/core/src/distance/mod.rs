//! Distances between subjects: the smoothing-parameter-commutation (SPC)
//! distance, the fixed-curve spline distance (SS) and the pointwise Euclidean
//! distance, plus full dissimilarity matrices.
//!
//! Smoothing parameters passed here are on the mixed-model scale returned by
//! REML; they are converted to penalty weights using the shared domain.

mod matrix;
mod quadrature;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::dataset::{Dataset, Subject};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spline::{fit_on_domain, penalty_lambda, select_for_subject, RemlSelection, SplineFit};

pub use matrix::DissimilarityMatrix;
use quadrature::gauss_legendre_4;

/// `√∫_{t_lower}^{t_upper} (a - b)² dt`, exact up to rounding.
///
/// Between consecutive points of the merged knot sequences both fits are
/// single cubics, so the integrand is a degree-6 polynomial there and a
/// four-point Gauss–Legendre rule integrates it exactly.
pub fn l2_between_fits<T: Real>(
    a: &SplineFit<T>,
    b: &SplineFit<T>,
    t_lower: T,
    t_upper: T,
) -> Result<T> {
    for fit in [a, b] {
        let (lo, hi) = fit.domain();
        if !(lo <= t_lower && t_upper <= hi && t_lower < t_upper) {
            return Err(Error::InvalidArgument(format!(
                "fit for {} covers [{lo}, {hi}], cannot integrate over [{t_lower}, {t_upper}]",
                fit.subject_id()
            )));
        }
    }
    Ok(l2_unchecked(a, b, t_lower, t_upper).sqrt())
}

fn l2_unchecked<T: Real>(a: &SplineFit<T>, b: &SplineFit<T>, t_lower: T, t_upper: T) -> T {
    let (ka, kb) = (a.knots(), b.knots());
    let (mut ia, mut ib) = (0, 0);
    let mut left = t_lower;
    let mut total = T::zero();
    loop {
        while ia < ka.len() && ka[ia] <= left {
            ia += 1;
        }
        while ib < kb.len() && kb[ib] <= left {
            ib += 1;
        }
        let mut right = t_upper;
        if ia < ka.len() && ka[ia] < right {
            right = ka[ia];
        }
        if ib < kb.len() && kb[ib] < right {
            right = kb[ib];
        }
        for (t, w) in gauss_legendre_4(left, right) {
            let d = a.eval_unchecked(t) - b.eval_unchecked(t);
            total += w * d * d;
        }
        if right >= t_upper {
            break;
        }
        left = right;
    }
    total
}

fn fit_pair<T: Real>(subject: &Subject<T>, lambda: T, domain: (T, T)) -> Result<SplineFit<T>> {
    fit_on_domain(subject, penalty_lambda(lambda, domain), domain)
}

/// SPC distance: the mean of the two L2 distances obtained when both subjects
/// are smoothed with `lambda_i`, and again with `lambda_j`.
pub fn spc_distance<T: Real>(
    subject_i: &Subject<T>,
    subject_j: &Subject<T>,
    lambda_i: T,
    lambda_j: T,
    domain: (T, T),
) -> Result<T> {
    let (lo, hi) = domain;
    let under_i = l2_between_fits(
        &fit_pair(subject_i, lambda_i, domain)?,
        &fit_pair(subject_j, lambda_i, domain)?,
        lo,
        hi,
    )?;
    let under_j = l2_between_fits(
        &fit_pair(subject_i, lambda_j, domain)?,
        &fit_pair(subject_j, lambda_j, domain)?,
        lo,
        hi,
    )?;
    Ok((under_i + under_j) / T::lit(2.0))
}

/// L2 distance between the two curves, each smoothed with its own parameter.
pub fn ss_distance<T: Real>(
    subject_i: &Subject<T>,
    subject_j: &Subject<T>,
    lambda_i: T,
    lambda_j: T,
    domain: (T, T),
) -> Result<T> {
    l2_between_fits(
        &fit_pair(subject_i, lambda_i, domain)?,
        &fit_pair(subject_j, lambda_j, domain)?,
        domain.0,
        domain.1,
    )
}

/// `√Σ_k (y_ik - y_jk)²` for two subjects on an identical grid.
pub fn eucl_distance<T: Real>(subject_i: &Subject<T>, subject_j: &Subject<T>) -> Result<T> {
    if subject_i.times() != subject_j.times() {
        return Err(Error::GridMismatch(
            subject_i.id().to_string(),
            subject_j.id().to_string(),
        ));
    }
    Ok(subject_i
        .values()
        .iter()
        .zip(subject_j.values())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<T>()
        .sqrt())
}

/// Fits shared by the SPC computations of a whole dataset.
///
/// Self-fits `f̂_i(·; λ̂_i)` are stored once. Each cross-fit `f̂_j(·; λ̂_i)`
/// enters exactly one term of one pair, so it is produced on demand by
/// [`FitCache::cross_fit`] and never kept; the counter records how many were made.
pub struct FitCache<T> {
    domain: (T, T),
    lambdas: Vec<T>,
    self_fits: Vec<SplineFit<T>>,
    cross_fits: AtomicUsize,
}

impl<T: Real> FitCache<T> {
    pub fn new(dataset: &Dataset<T>, lambdas: &[T]) -> Result<Self> {
        if lambdas.len() != dataset.len() {
            return Err(Error::InvalidArgument(format!(
                "{} smoothing parameters for {} subjects",
                lambdas.len(),
                dataset.len()
            )));
        }
        let domain = dataset.domain();
        let self_fits = dataset
            .subjects()
            .par_iter()
            .zip(lambdas.par_iter())
            .map(|(s, &l)| fit_pair(s, l, domain))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            domain,
            lambdas: lambdas.to_vec(),
            self_fits,
            cross_fits: AtomicUsize::new(0),
        })
    }

    pub fn len(&self) -> usize {
        self.self_fits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.self_fits.is_empty()
    }

    pub fn self_fit(&self, i: usize) -> &SplineFit<T> {
        &self.self_fits[i]
    }

    pub fn self_fit_count(&self) -> usize {
        self.self_fits.len()
    }

    pub fn cross_fit_count(&self) -> usize {
        self.cross_fits.load(Ordering::Relaxed)
    }

    /// `f̂_data(·; λ̂_lambda_source)`.
    pub fn cross_fit(
        &self,
        dataset: &Dataset<T>,
        data: usize,
        lambda_source: usize,
    ) -> Result<SplineFit<T>> {
        if data == lambda_source {
            return Ok(self.self_fits[data].clone());
        }
        self.cross_fits.fetch_add(1, Ordering::Relaxed);
        fit_pair(
            &dataset.subjects()[data],
            self.lambdas[lambda_source],
            self.domain,
        )
    }

    /// `‖f̂_source(·; λ̂_source) − f̂_data(·; λ̂_source)‖`, one term of the SPC average.
    fn commuted_term(&self, dataset: &Dataset<T>, source: usize, data: usize) -> Result<T> {
        let cross = self.cross_fit(dataset, data, source)?;
        Ok(l2_unchecked(
            &self.self_fits[source],
            &cross,
            self.domain.0,
            self.domain.1,
        )
        .sqrt())
    }

    /// SPC distance between subjects `i` and `j` reusing the stored self-fits.
    pub fn spc(&self, dataset: &Dataset<T>, i: usize, j: usize) -> Result<T> {
        if i == j {
            return Ok(T::zero());
        }
        let a = self.commuted_term(dataset, i, j)?;
        let b = self.commuted_term(dataset, j, i)?;
        Ok((a + b) / T::lit(2.0))
    }
}

/// Which distance a matrix is built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Spc,
    Ss,
    Eucl,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Eucl, Method::Ss, Method::Spc];

    pub fn name(self) -> &'static str {
        match self {
            Method::Spc => "spc",
            Method::Ss => "ss",
            Method::Eucl => "eucl",
        }
    }

    pub fn needs_reml(self) -> bool {
        !matches!(self, Method::Eucl)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spc" => Ok(Method::Spc),
            "ss" => Ok(Method::Ss),
            "eucl" => Ok(Method::Eucl),
            other => Err(Error::InvalidArgument(format!(
                "unknown method `{other}` (expected spc, ss or eucl)"
            ))),
        }
    }
}

/// REML selection for every subject, in dataset order.
pub fn select_all<T: Real>(dataset: &Dataset<T>) -> Result<Vec<RemlSelection<T>>> {
    let domain = dataset.domain();
    dataset
        .subjects()
        .par_iter()
        .map(|s| select_for_subject(s, domain))
        .collect()
}

/// SPC matrix from given smoothing parameters. Every self-fit is computed
/// once and every ordered-pair cross-fit exactly once.
pub fn spc_matrix<T: Real>(dataset: &Dataset<T>, lambdas: &[T]) -> Result<DissimilarityMatrix<T>> {
    let cache = FitCache::new(dataset, lambdas)?;
    spc_matrix_with_cache(dataset, &cache)
}

pub fn spc_matrix_with_cache<T: Real>(
    dataset: &Dataset<T>,
    cache: &FitCache<T>,
) -> Result<DissimilarityMatrix<T>> {
    let n = dataset.len();
    // terms[s][x] = ‖f̂_s(λ̂_s) − f̂_x(λ̂_s)‖
    let terms = (0..n)
        .into_par_iter()
        .map(|s| {
            (0..n)
                .map(|x| {
                    if x == s {
                        Ok(T::zero())
                    } else {
                        cache.commuted_term(dataset, s, x)
                    }
                })
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let half = T::lit(0.5);
    Ok(DissimilarityMatrix::from_upper(dataset.ids(), |i, j| {
        half * (terms[i][j] + terms[j][i])
    }))
}

/// SS matrix from given smoothing parameters.
pub fn ss_matrix<T: Real>(dataset: &Dataset<T>, lambdas: &[T]) -> Result<DissimilarityMatrix<T>> {
    let cache = FitCache::new(dataset, lambdas)?;
    let (lo, hi) = dataset.domain();
    let n = dataset.len();
    let rows: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| l2_unchecked(cache.self_fit(i), cache.self_fit(j), lo, hi).sqrt())
                .collect()
        })
        .collect();
    Ok(DissimilarityMatrix::from_upper(dataset.ids(), |i, j| {
        rows[i][j - i - 1]
    }))
}

/// Pointwise Euclidean matrix; all subjects must share one grid.
pub fn eucl_matrix<T: Real>(dataset: &Dataset<T>) -> Result<DissimilarityMatrix<T>> {
    let subjects = dataset.subjects();
    if let Some(first) = subjects.first() {
        if let Some(other) = subjects.iter().find(|s| s.times() != first.times()) {
            return Err(Error::GridMismatch(
                first.id().to_string(),
                other.id().to_string(),
            ));
        }
    }
    let n = subjects.len();
    let rows: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| eucl_distance(&subjects[i], &subjects[j]))
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<_>>()?;
    Ok(DissimilarityMatrix::from_upper(dataset.ids(), |i, j| {
        rows[i][j - i - 1]
    }))
}

/// Full pipeline: REML once per subject (for `spc`/`ss`), then the matrix.
pub fn distance_matrix<T: Real>(
    dataset: &Dataset<T>,
    method: Method,
) -> Result<DissimilarityMatrix<T>> {
    match method {
        Method::Eucl => eucl_matrix(dataset),
        Method::Ss | Method::Spc => {
            let lambdas: Vec<T> = select_all(dataset)?
                .into_iter()
                .map(|s| s.lambda_hat)
                .collect();
            if method == Method::Spc {
                spc_matrix(dataset, &lambdas)
            } else {
                ss_matrix(dataset, &lambdas)
            }
        }
    }
}

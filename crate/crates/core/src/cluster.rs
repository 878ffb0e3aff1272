//! Dissimilarity-based outlier scoring and k-medoids clustering.

use std::fmt;
use std::str::FromStr;

use crate::distance::DissimilarityMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Neighbours averaged by the default outlier score.
pub const DEFAULT_NEIGHBORS: usize = 3;
/// Default smallest ratio between consecutive sorted scores that counts as a gap.
pub const DEFAULT_GAP_RATIO: f64 = 1.5;

/// Mean dissimilarity of each subject to its `k_neighbors` nearest others.
pub fn knn_outlier_scores<T: Real>(
    matrix: &DissimilarityMatrix<T>,
    k_neighbors: usize,
) -> Result<Vec<T>> {
    let n = matrix.len();
    if k_neighbors == 0 || n <= k_neighbors {
        return Err(Error::InvalidArgument(format!(
            "{n} subjects cannot supply {k_neighbors} neighbours each"
        )));
    }
    let kk = T::from_usize_lossy(k_neighbors);
    Ok((0..n)
        .map(|i| {
            let mut row: Vec<T> = (0..n)
                .filter(|&j| j != i)
                .map(|j| matrix.get(i, j))
                .collect();
            row.select_nth_unstable_by(k_neighbors - 1, |a, b| a.partial_cmp(b).unwrap());
            row[..k_neighbors].iter().copied().sum::<T>() / kk
        })
        .collect())
}

/// How scores are split into regular and flagged subjects.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OutlierRule {
    /// Flag every score strictly above the threshold.
    Threshold(f64),
    /// Flag everything above the first large jump among the sorted scores.
    Gap { min_ratio: f64 },
}

impl Default for OutlierRule {
    fn default() -> Self {
        OutlierRule::Gap {
            min_ratio: DEFAULT_GAP_RATIO,
        }
    }
}

impl fmt::Display for OutlierRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutlierRule::Threshold(t) => write!(f, "threshold:{t}"),
            OutlierRule::Gap { min_ratio } => write!(f, "gap:{min_ratio}"),
        }
    }
}

impl FromStr for OutlierRule {
    type Err = Error;

    /// `gap`, `gap:<ratio>` or `threshold:<t>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("invalid outlier mode `{s}`"));
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let num = |a: &str| a.trim().parse::<f64>().map_err(|_| bad());
        match (kind.trim(), arg) {
            ("gap", None) => Ok(OutlierRule::default()),
            ("gap", Some(a)) => Ok(OutlierRule::Gap { min_ratio: num(a)? }),
            ("threshold", Some(a)) => Ok(OutlierRule::Threshold(num(a)?)),
            _ => Err(bad()),
        }
    }
}

/// Scores with the subset of ids judged to be outliers.
#[derive(Clone, Debug, PartialEq)]
pub struct OutlierReport<T> {
    pub ids: Vec<String>,
    pub scores: Vec<T>,
    pub flagged: Vec<String>,
    /// Threshold in force, or `None` when the gap rule found no gap.
    pub threshold_used: Option<T>,
    pub rule: OutlierRule,
}

impl<T: Real> OutlierReport<T> {
    pub fn is_flagged(&self, id: &str) -> bool {
        self.flagged.iter().any(|f| f == id)
    }
}

/// Applies `rule` to `scores` (aligned with `ids`).
///
/// The gap rule sorts the scores and scans the ratios `s₍ₘ₊₁₎ / s₍ₘ₎` for
/// positions `m` in the top quartile, lowest first. The first ratio of at
/// least `min_ratio` marks the gap and everything above it is flagged; when
/// no ratio qualifies nothing is flagged.
pub fn flag_outliers<T: Real>(
    ids: &[String],
    scores: &[T],
    rule: OutlierRule,
) -> Result<OutlierReport<T>> {
    if ids.len() != scores.len() {
        return Err(Error::InvalidArgument(format!(
            "{} ids for {} scores",
            ids.len(),
            scores.len()
        )));
    }
    let threshold = match rule {
        OutlierRule::Threshold(t) => {
            if !(t > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "outlier threshold must be positive, got {t}"
                )));
            }
            Some(T::lit(t))
        }
        OutlierRule::Gap { min_ratio } => {
            if !(min_ratio > 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "gap ratio must exceed 1, got {min_ratio}"
                )));
            }
            let n = scores.len();
            if n < 3 {
                return Err(Error::InvalidArgument(
                    "gap mode needs at least 3 subjects".into(),
                ));
            }
            let mut sorted = scores.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            // 1-based positions m with m >= ceil(3n/4) and m < n
            let first = (3 * n).div_ceil(4).max(1);
            let ratio = T::lit(min_ratio);
            (first..n)
                .find(|&m| {
                    let (lo, hi) = (sorted[m - 1], sorted[m]);
                    hi > lo && (lo <= T::zero() || hi / lo >= ratio)
                })
                .map(|m| sorted[m - 1])
        }
    };
    let flagged = match threshold {
        Some(t) => ids
            .iter()
            .zip(scores)
            .filter(|(_, &s)| s > t)
            .map(|(id, _)| id.clone())
            .collect(),
        None => Vec::new(),
    };
    Ok(OutlierReport {
        ids: ids.to_vec(),
        scores: scores.to_vec(),
        flagged,
        threshold_used: threshold,
        rule,
    })
}

/// k-medoids partition.
#[derive(Clone, Debug, PartialEq)]
pub struct Clustering<T> {
    pub ids: Vec<String>,
    /// Medoid indices into `ids`, sorted ascending.
    pub medoids: Vec<usize>,
    /// For each subject, the position in `medoids` of its medoid.
    pub assignment: Vec<usize>,
    pub total_cost: T,
    /// Total cost after BUILD and after every accepted swap.
    pub cost_trace: Vec<T>,
}

impl<T: Real> Clustering<T> {
    pub fn medoid_ids(&self) -> Vec<&str> {
        self.medoids.iter().map(|&m| self.ids[m].as_str()).collect()
    }

    pub fn medoid_of(&self, i: usize) -> usize {
        self.medoids[self.assignment[i]]
    }
}

/// Sum over subjects of the dissimilarity to the nearest medoid.
pub fn medoid_cost<T: Real>(matrix: &DissimilarityMatrix<T>, medoids: &[usize]) -> T {
    (0..matrix.len())
        .map(|j| {
            medoids
                .iter()
                .map(|&m| matrix.get(j, m))
                .fold(T::infinity(), T::min)
        })
        .sum()
}

/// Partitioning around medoids: greedy BUILD, then steepest-descent SWAP
/// until no swap lowers the cost. Ties go to the lowest subject index.
pub fn pam<T: Real>(matrix: &DissimilarityMatrix<T>, k: usize) -> Result<Clustering<T>> {
    let n = matrix.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "cannot form {k} clusters from {n} subjects"
        )));
    }
    let d = |i: usize, j: usize| matrix.get(i, j);

    // BUILD
    let ids = matrix.ids();
    let scale = (0..n * n)
        .map(|idx| d(idx / n, idx % n))
        .fold(T::zero(), T::max);
    let tol =
        T::epsilon() * T::lit(64.0) * scale.max(T::min_positive_value()) * T::from_usize_lossy(n);
    // Values within `tol` tie; ties go to the lexicographically smaller id so
    // the result does not depend on row order.
    let beats =
        |v: T, best: T, c: &str, c_best: &str| v > best + tol || (v >= best - tol && c < c_best);
    let mut is_medoid = vec![false; n];
    let mut medoids = Vec::with_capacity(k);
    let mut nearest = vec![T::infinity(); n];
    {
        let mut best: Option<(T, usize)> = None;
        for c in 0..n {
            let cost: T = (0..n).map(|j| d(j, c)).sum();
            if best.is_none_or(|(b, bc)| beats(-cost, -b, &ids[c], &ids[bc])) {
                best = Some((cost, c));
            }
        }
        let (_, c) = best.expect("n >= 1");
        add_medoid(c, &mut medoids, &mut is_medoid, &mut nearest, &d);
    }
    while medoids.len() < k {
        let mut best: Option<(T, usize)> = None;
        for c in (0..n).filter(|&c| !is_medoid[c]) {
            let gain: T = (0..n).map(|j| (nearest[j] - d(j, c)).max(T::zero())).sum();
            if best.is_none_or(|(g, bc)| beats(gain, g, &ids[c], &ids[bc])) {
                best = Some((gain, c));
            }
        }
        let (_, c) = best.expect("k <= n leaves a candidate");
        add_medoid(c, &mut medoids, &mut is_medoid, &mut nearest, &d);
    }

    let mut cost: T = nearest.iter().copied().sum();
    let mut trace = vec![cost];

    // SWAP
    loop {
        let (near, second) = nearest_two(&medoids, n, &d);
        let mut best: Option<(T, usize, usize)> = None;
        for p in 0..medoids.len() {
            for h in (0..n).filter(|&h| !is_medoid[h]) {
                let mut delta = T::zero();
                for j in 0..n {
                    let dj = d(j, h);
                    let (np, dn) = near[j];
                    if np == p {
                        delta += dj.min(second[j]) - dn;
                    } else if dj < dn {
                        delta += dj - dn;
                    }
                }
                let wins = match best {
                    None => true,
                    Some((b, bp, bh)) => {
                        let key = (&ids[medoids[p]], &ids[h]);
                        let best_key = (&ids[medoids[bp]], &ids[bh]);
                        delta < b - tol || (delta <= b + tol && key < best_key)
                    }
                };
                if wins {
                    best = Some((delta, p, h));
                }
            }
        }
        match best {
            Some((delta, p, h)) if delta < -tol => {
                let mut candidate = medoids.clone();
                candidate[p] = h;
                let next = medoid_cost(matrix, &candidate);
                if !(next < cost) {
                    break;
                }
                is_medoid[medoids[p]] = false;
                is_medoid[h] = true;
                medoids = candidate;
                cost = next;
                trace.push(cost);
            }
            _ => break,
        }
    }

    medoids.sort_unstable();
    let assignment: Vec<usize> = (0..n)
        .map(|j| {
            if let Some(p) = medoids.iter().position(|&m| m == j) {
                return p;
            }
            let mut best = 0;
            for (p, &m) in medoids.iter().enumerate() {
                if d(j, m) < d(j, medoids[best]) {
                    best = p;
                }
            }
            best
        })
        .collect();
    let total_cost = medoid_cost(matrix, &medoids);
    Ok(Clustering {
        ids: matrix.ids().to_vec(),
        medoids,
        assignment,
        total_cost,
        cost_trace: trace,
    })
}

fn add_medoid<T: Real, D: Fn(usize, usize) -> T>(
    c: usize,
    medoids: &mut Vec<usize>,
    is_medoid: &mut [bool],
    nearest: &mut [T],
    d: &D,
) {
    medoids.push(c);
    is_medoid[c] = true;
    for (j, v) in nearest.iter_mut().enumerate() {
        *v = v.min(d(j, c));
    }
}

/// For each subject: (position of nearest medoid, its distance) and the
/// distance to the second nearest medoid (infinite when `k = 1`).
fn nearest_two<T: Real, D: Fn(usize, usize) -> T>(
    medoids: &[usize],
    n: usize,
    d: &D,
) -> (Vec<(usize, T)>, Vec<T>) {
    let mut near = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    for j in 0..n {
        let mut best = (usize::MAX, T::infinity());
        let mut next = T::infinity();
        for (p, &m) in medoids.iter().enumerate() {
            let v = d(j, m);
            if v < best.1 || (v == best.1 && m == j) {
                next = best.1;
                best = (p, v);
            } else if v < next {
                next = v;
            }
        }
        near.push(best);
        second.push(next);
    }
    (near, second)
}

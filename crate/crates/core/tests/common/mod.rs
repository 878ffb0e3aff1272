//! Dense, brute-force reference computations used by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use spcdist_core::distance::DissimilarityMatrix;
use spcdist_core::SplineFit;

/// Roughness matrix `Ω` with `∫ f''² = gᵀ Ω g` for the natural cubic
/// interpolant through values `g`, assembled column by column from dense
/// interpolation solves and the exact integral of a piecewise-linear `f''`.
pub fn dense_roughness(times: &[f64]) -> DMatrix<f64> {
    let (curv, gram) = curvature_and_gram(times);
    curv.transpose() * gram * curv
}

/// Second derivatives at the knots of every cardinal natural interpolant
/// (one column each) and the Gram matrix of the knot hat functions.
fn curvature_and_gram(times: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = times.len();
    let h: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    // second derivatives of every cardinal interpolant, one column each
    let mut curv = DMatrix::<f64>::zeros(k, k);
    let m = k - 2;
    let mut sys = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        sys[(j, j)] = 2.0 * (h[j] + h[j + 1]);
        if j + 1 < m {
            sys[(j, j + 1)] = h[j + 1];
            sys[(j + 1, j)] = h[j + 1];
        }
    }
    let lu = sys.lu();
    for col in 0..k {
        let g: Vec<f64> = (0..k).map(|i| if i == col { 1.0 } else { 0.0 }).collect();
        let rhs = DVector::from_fn(m, |j, _| {
            let i = j + 1;
            6.0 * ((g[i + 1] - g[i]) / h[i] - (g[i] - g[i - 1]) / h[i - 1])
        });
        let sol = lu.solve(&rhs).expect("interpolation system is nonsingular");
        for j in 0..m {
            curv[(j + 1, col)] = sol[j];
        }
    }
    let mut gram = DMatrix::<f64>::zeros(k, k);
    for (i, &hi) in h.iter().enumerate() {
        gram[(i, i)] += hi / 3.0;
        gram[(i + 1, i + 1)] += hi / 3.0;
        gram[(i, i + 1)] += hi / 6.0;
        gram[(i + 1, i)] += hi / 6.0;
    }
    (curv, gram)
}

/// Minimiser of `(1/K)‖y - f‖² + λ fᵀ Ω f` by a dense solve.
pub fn dense_smoother(times: &[f64], y: &[f64], lambda: f64) -> Vec<f64> {
    let k = times.len();
    let a = DMatrix::<f64>::identity(k, k) + dense_roughness(times) * (k as f64 * lambda);
    a.lu()
        .solve(&DVector::from_column_slice(y))
        .expect("smoother system is nonsingular")
        .iter()
        .copied()
        .collect()
}

/// The smoother as the stacked least-squares problem
/// `min ‖y - g‖² + Kλ ‖Lᵀ C g‖²` (`G = L Lᵀ`, `C` the cardinal curvatures)
/// solved by dense Householder QR. Avoiding the normal matrix `I + KλΩ`
/// keeps the reference accurate when close knots make that matrix
/// ill-conditioned.
pub fn qr_smoother(times: &[f64], y: &[f64], lambda: f64) -> Vec<f64> {
    let k = times.len();
    let (curv, gram) = curvature_and_gram(times);
    let l = gram
        .cholesky()
        .expect("Gram matrix is positive definite")
        .l();
    let penalty = l.transpose() * curv * (k as f64 * lambda).sqrt();
    let mut stacked = DMatrix::<f64>::zeros(2 * k, k);
    stacked
        .view_mut((0, 0), (k, k))
        .copy_from(&DMatrix::identity(k, k));
    stacked.view_mut((k, 0), (k, k)).copy_from(&penalty);
    let mut rhs = DVector::<f64>::zeros(2 * k);
    rhs.rows_mut(0, k).copy_from_slice(y);
    let qr = stacked.qr();
    let qty = qr.q().transpose() * rhs;
    qr.r()
        .solve_upper_triangular(&qty)
        .expect("stacked matrix has full column rank")
        .iter()
        .copied()
        .collect()
}

/// Dense hat matrix of the smoother.
pub fn dense_hat(times: &[f64], lambda: f64) -> DMatrix<f64> {
    let k = times.len();
    let a = DMatrix::<f64>::identity(k, k) + dense_roughness(times) * (k as f64 * lambda);
    a.try_inverse().expect("invertible")
}

/// Cubic-spline covariance kernel on `[lo, hi]` written out directly.
pub fn dense_kernel(times: &[f64], lo: f64, hi: f64) -> DMatrix<f64> {
    let w = hi - lo;
    DMatrix::from_fn(times.len(), times.len(), |i, j| {
        let (a, b) = (times[i] - lo, times[j] - lo);
        let (m, mx) = (a.min(b), a.max(b));
        m * m * (3.0 * mx - m) / 6.0 / (w * w)
    })
}

/// Profiled restricted log-likelihood of `y = Xβ + u + ε`, `cov(u) = σ²/(Kλ) Σ`,
/// from dense determinants.
pub fn dense_restricted_loglik(times: &[f64], y: &[f64], lambda: f64, lo: f64, hi: f64) -> f64 {
    let k = times.len();
    let kf = k as f64;
    let x = DMatrix::from_fn(k, 2, |i, j| if j == 0 { 1.0 } else { times[i] });
    let h = DMatrix::<f64>::identity(k, k) + dense_kernel(times, lo, hi) / (kf * lambda);
    let chol = h.clone().cholesky().expect("H is positive definite");
    let hinv = chol.inverse();
    let log_det_h: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let xthx = x.transpose() * &hinv * &x;
    let xtx = x.transpose() * &x;
    let yv = DVector::from_column_slice(y);
    let p = &hinv - &hinv * &x * xthx.clone().try_inverse().unwrap() * x.transpose() * &hinv;
    let quad = (yv.transpose() * p * &yv)[(0, 0)];
    let dof = kf - 2.0;
    let sigma2 = quad / dof;
    -0.5 * (dof * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0)
        + log_det_h
        + xthx.determinant().ln()
        - xtx.determinant().ln())
}

/// Midpoint rule for `√∫ (f - g)²` with `n` cells.
pub fn riemann_l2(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let t = a + (i as f64 + 0.5) * h;
        let d = f(t) - g(t);
        acc += d * d;
    }
    (acc * h).sqrt()
}

/// Best medoid set by enumerating every `k`-subset.
pub fn exhaustive_pam(m: &DissimilarityMatrix<f64>, k: usize) -> f64 {
    let n = m.len();
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let cost: f64 = (0..n)
            .map(|j| {
                idx.iter()
                    .map(|&c| m.get(j, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        best = best.min(cost);
        // next combination
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn q_at(est: &DissimilarityMatrix<f64>, truth: &DissimilarityMatrix<f64>, a: f64, b: f64) -> f64 {
    let n = truth.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = truth.get(i, j);
                let r = a + b * est.get(i, j) - d;
                s += r * r / d;
            }
        }
    }
    s
}

/// Zooming 2-D grid search for `min_{a,b} Σ (a + b d̂ - d)² / d`.
pub fn grid_search_q(est: &DissimilarityMatrix<f64>, truth: &DissimilarityMatrix<f64>) -> f64 {
    let (mut ca, mut cb) = (0.0, 1.0);
    let (mut wa, mut wb) = (100.0, 100.0);
    let steps = 20;
    let mut best = q_at(est, truth, ca, cb);
    while wa > 1e-9 || wb > 1e-9 {
        let (mut na, mut nb) = (ca, cb);
        for i in 0..=steps {
            for j in 0..=steps {
                let a = ca - wa + 2.0 * wa * i as f64 / steps as f64;
                let b = cb - wb + 2.0 * wb * j as f64 / steps as f64;
                let q = q_at(est, truth, a, b);
                if q < best {
                    best = q;
                    na = a;
                    nb = b;
                }
            }
        }
        ca = na;
        cb = nb;
        wa *= 0.25;
        wb *= 0.25;
    }
    best
}

/// Rank by counting smaller and equal entries among the pairs `i < j`, then
/// count each pair twice.
pub fn naive_r(est: &DissimilarityMatrix<f64>, truth: &DissimilarityMatrix<f64>) -> f64 {
    let n = truth.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let rank = |m: &DissimilarityMatrix<f64>, p: (usize, usize)| -> f64 {
        let v = m.get(p.0, p.1);
        let less = pairs.iter().filter(|&&q| m.get(q.0, q.1) < v).count() as f64;
        let equal = pairs.iter().filter(|&&q| m.get(q.0, q.1) == v).count() as f64;
        less + (equal + 1.0) / 2.0
    };
    pairs
        .iter()
        .map(|&p| {
            let d = rank(est, p) - rank(truth, p);
            2.0 * d * d
        })
        .sum()
}

pub fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{i:02}")).collect()
}

/// `n` strictly increasing times in `[lo, hi]` with spacing at least `gap`.
pub fn random_times<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    loop {
        let mut t: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
        t.sort_by(f64::total_cmp);
        let min_gap = t
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        if min_gap > (hi - lo) * 1e-3 {
            return t;
        }
    }
}

/// Random matrix of points on a line with some jitter, all distances positive.
pub fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> DissimilarityMatrix<f64> {
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)))
        .collect();
    DissimilarityMatrix::from_upper(ids(n), |i, j| {
        ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt()
    })
}

/// Power-basis coefficients of `p` re-expanded about `x0`.
pub fn taylor(p: [f64; 4], x0: f64) -> [f64; 4] {
    [
        p[0] + x0 * (p[1] + x0 * (p[2] + x0 * p[3])),
        p[1] + x0 * (2.0 * p[2] + 3.0 * x0 * p[3]),
        p[2] + 3.0 * x0 * p[3],
        p[3],
    ]
}

/// `∫_lo^hi (Σ c_i t^i)² dt` from the expanded degree-6 polynomial.
pub fn square_integral(c: [f64; 4], lo: f64, hi: f64) -> f64 {
    let mut sq = [0.0; 7];
    for i in 0..4 {
        for j in 0..4 {
            sq[i + j] += c[i] * c[j];
        }
    }
    sq.iter()
        .enumerate()
        .map(|(p, a)| a * (hi.powi(p as i32 + 1) - lo.powi(p as i32 + 1)) / (p + 1) as f64)
        .sum()
}

/// Fit on `[0, 1]` whose piece `i` is the power-basis cubic `pieces[i]`.
pub fn piecewise(knots: &[f64], pieces: &[[f64; 4]]) -> SplineFit {
    let coefs = knots
        .windows(2)
        .zip(pieces)
        .map(|(w, &p)| taylor(p, w[0]))
        .collect();
    SplineFit::from_pieces("hand", knots.to_vec(), coefs, (0.0, 1.0)).unwrap()
}

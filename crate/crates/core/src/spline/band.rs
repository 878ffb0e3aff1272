//! Symmetric pentadiagonal systems, factored as `L D Lᵀ` in linear time.

use crate::scalar::Real;

/// Symmetric matrix with bandwidth 2, stored by diagonals.
#[derive(Clone, Debug)]
pub(crate) struct Pentadiagonal<T> {
    pub diag: Vec<T>,
    pub off1: Vec<T>,
    pub off2: Vec<T>,
}

impl<T: Real> Pentadiagonal<T> {
    pub fn zeros(m: usize) -> Self {
        Self {
            diag: vec![T::zero(); m],
            off1: vec![T::zero(); m.saturating_sub(1)],
            off2: vec![T::zero(); m.saturating_sub(2)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `self * s + other`, entrywise.
    pub fn scaled_add(&self, s: T, other: &Self) -> Self {
        let f = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| x * s + y).collect();
        Self {
            diag: f(&self.diag, &other.diag),
            off1: f(&self.off1, &other.off1),
            off2: f(&self.off2, &other.off2),
        }
    }

    /// Factors the matrix. Returns the index of the first non-positive pivot on failure.
    pub fn factor(&self) -> Result<BandLdl<T>, usize> {
        let m = self.dim();
        let mut d = vec![T::zero(); m];
        let mut l1 = vec![T::zero(); m.saturating_sub(1)];
        let mut l2 = vec![T::zero(); m.saturating_sub(2)];
        let scale = self.diag.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
        let tiny = scale * T::epsilon() * T::lit(16.0);
        for i in 0..m {
            let mut di = self.diag[i];
            if i >= 1 {
                di -= l1[i - 1] * l1[i - 1] * d[i - 1];
            }
            if i >= 2 {
                di -= l2[i - 2] * l2[i - 2] * d[i - 2];
            }
            if !(di > tiny) || !di.is_finite() {
                return Err(i);
            }
            d[i] = di;
            if i + 1 < m {
                let mut v = self.off1[i];
                if i >= 1 {
                    v -= l2[i - 1] * l1[i - 1] * d[i - 1];
                }
                l1[i] = v / di;
            }
            if i + 2 < m {
                l2[i] = self.off2[i] / di;
            }
        }
        Ok(BandLdl { d, l1, l2 })
    }
}

/// `L D Lᵀ` factors of a [`Pentadiagonal`] matrix; `L` is unit lower triangular.
#[derive(Clone, Debug)]
pub(crate) struct BandLdl<T> {
    d: Vec<T>,
    l1: Vec<T>,
    l2: Vec<T>,
}

impl<T: Real> BandLdl<T> {
    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let m = self.d.len();
        debug_assert_eq!(rhs.len(), m);
        let mut x = rhs.to_vec();
        for i in 0..m {
            if i >= 1 {
                let v = self.l1[i - 1] * x[i - 1];
                x[i] -= v;
            }
            if i >= 2 {
                let v = self.l2[i - 2] * x[i - 2];
                x[i] -= v;
            }
        }
        for i in 0..m {
            x[i] /= self.d[i];
        }
        for i in (0..m).rev() {
            if i + 1 < m {
                let v = self.l1[i] * x[i + 1];
                x[i] -= v;
            }
            if i + 2 < m {
                let v = self.l2[i] * x[i + 2];
                x[i] -= v;
            }
        }
        x
    }

    pub fn log_det(&self) -> T {
        self.d.iter().map(|d| d.ln()).sum()
    }
}

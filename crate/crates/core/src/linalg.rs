//! Banded linear solves.

/// Solves a tridiagonal system with sub-diagonal `lower` (`lower[i]` couples
/// rows `i + 1` and `i`), diagonal `diag` and super-diagonal `upper` by the
/// Thomas algorithm. Returns `None` on a vanishing pivot.
pub(crate) fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Option<Vec<f64>> {
    let n = diag.len();
    debug_assert!(lower.len() + 1 == n && upper.len() + 1 == n && rhs.len() == n);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return None;
    }
    if n > 1 {
        c[0] = upper[0] / pivot;
    }
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i - 1] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return None;
        }
        if i + 1 < n {
            c[i] = upper[i] / pivot;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

/// Symmetric positive-definite banded matrix stored by diagonals:
/// `bands[k][i]` is entry `(i, i + k)`.
#[derive(Debug, Clone)]
pub(crate) struct SymBanded {
    bands: Vec<Vec<f64>>,
}

impl SymBanded {
    pub(crate) fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            bands: (0..=bandwidth).map(|k| vec![0.0; n.saturating_sub(k)]).collect(),
        }
    }

    pub(crate) fn n(&self) -> usize {
        self.bands[0].len()
    }

    /// Adds `v` to entry `(i, j)` (and its mirror).
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        self.bands[c - r][r] += v;
    }

    pub(crate) fn diagonal(&self) -> &[f64] {
        &self.bands[0]
    }

    /// Cholesky solve; `None` if the matrix is not numerically positive
    /// definite.
    pub(crate) fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.n();
        let p = self.bands.len() - 1;
        // l[k][i] = L(i + k, i)
        let mut l: Vec<Vec<f64>> = self.bands.clone();
        for j in 0..n {
            let mut d = l[0][j];
            for k in 1..=p.min(j) {
                let v = l[k][j - k];
                d -= v * v;
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[0][j] = d;
            for k in 1..=p {
                let i = j + k;
                if i >= n {
                    break;
                }
                let mut s = self.bands[k][j];
                for q in 1..=p {
                    if q > j || k + q > p {
                        break;
                    }
                    s -= l[k + q][j - q] * l[q][j - q];
                }
                l[k][j] = s / d;
            }
        }
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 1..=p.min(i) {
                s -= l[k][i - k] * y[i - k];
            }
            y[i] = s / l[0][i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in 1..=p {
                if i + k >= n {
                    break;
                }
                s -= l[k][i] * y[i + k];
            }
            y[i] = s / l[0][i];
        }
        Some(y)
    }

    #[cfg(test)]
    pub(crate) fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut y = vec![0.0; n];
        for (k, band) in self.bands.iter().enumerate() {
            for (i, &a) in band.iter().enumerate() {
                y[i] += a * x[i + k];
                if k > 0 {
                    y[i + k] += a * x[i];
                }
            }
        }
        y
    }
}

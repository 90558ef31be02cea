use nalgebra::DMatrix;

/// Pivots below this fraction of the largest diagonal entry are treated as
/// zero (the matrix is singular in that direction).
const PIVOT_TOL: f64 = 1e-13;
/// Pivots more negative than this fraction mean the input was not PSD.
const NEGATIVE_PIVOT_TOL: f64 = 1e-8;

/// Lower-triangular factor stored row by row: row `i` holds the `i + 1`
/// entries `L[i][0..=i]` contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerFactor {
    n: usize,
    data: Vec<f64>,
    dropped_pivots: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl LowerFactor {
    /// Cholesky factorization tolerant of positive *semi*definite input:
    /// a vanishing pivot zeroes its column instead of failing.
    pub fn cholesky_semidefinite(a: &DMatrix<f64>) -> Result<Self, String> {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        let max_diag = (0..n).map(|i| a[(i, i)]).fold(0.0f64, f64::max);
        let tol = PIVOT_TOL * max_diag;
        let mut data = vec![0.0; n * (n + 1) / 2];
        let mut dropped_pivots = 0;
        for i in 0..n {
            let start = i * (i + 1) / 2;
            let (done, rest) = data.split_at_mut(start);
            let row_i = &mut rest[..=i];
            for j in 0..i {
                let row_j = &done[j * (j + 1) / 2..j * (j + 1) / 2 + j + 1];
                let s = a[(i, j)] - dot(&row_i[..j], &row_j[..j]);
                row_i[j] = if row_j[j] > 0.0 { s / row_j[j] } else { 0.0 };
            }
            let pivot = a[(i, i)] - dot(&row_i[..i], &row_i[..i]);
            if pivot > tol {
                row_i[i] = pivot.sqrt();
            } else if pivot >= -NEGATIVE_PIVOT_TOL * max_diag.max(f64::MIN_POSITIVE) {
                row_i[i] = 0.0;
                dropped_pivots += 1;
            } else {
                return Err(format!("pivot {pivot:e} at row {i} is negative"));
            }
        }
        Ok(Self { n, data, dropped_pivots })
    }

    /// Lower-triangular `L` with `L Lᵀ = B Bᵀ`, from a square root `B` of any
    /// PSD matrix. `Bᵀ = Q R` gives `B Bᵀ = Rᵀ R`; this stays stable when the
    /// matrix is rank deficient, where pivoted elimination loses accuracy.
    pub fn from_square_root(b: &DMatrix<f64>) -> Self {
        let n = b.nrows();
        assert_eq!(n, b.ncols());
        let r = b.transpose().qr().r();
        let sign: Vec<f64> = (0..n).map(|j| if r[(j, j)] < 0.0 { -1.0 } else { 1.0 }).collect();
        let max_diag = (0..n).map(|j| r[(j, j)].abs()).fold(0.0f64, f64::max);
        let dropped_pivots = (0..n).filter(|&j| r[(j, j)].abs() <= PIVOT_TOL.sqrt() * max_diag).count();
        let data = (0..n).flat_map(|i| (0..=i).map(move |j| (i, j))).map(|(i, j)| r[(j, i)] * sign[j]).collect();
        Self { n, data, dropped_pivots }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.data[start..start + i + 1]
    }

    /// Number of zero diagonal entries of the factor.
    pub fn dropped_pivots(&self) -> usize {
        self.dropped_pivots
    }

    /// `out = L z`.
    pub fn mul_vec(&self, z: &[f64], out: &mut [f64]) {
        assert_eq!(z.len(), self.n);
        assert_eq!(out.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), &z[..=i]);
        }
    }

    /// `L Lᵀ` as a dense matrix.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = dot(&self.row(i)[..=j], self.row(j));
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// Diagonal of `L Lᵀ`: the exact variances of `L z` for standard normal `z`.
    pub fn row_norms_squared(&self) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), self.row(i))).collect()
    }
}

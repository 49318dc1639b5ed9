//! Dense row-major matrices and LU with partial pivoting.

use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    /// `‖M‖_∞`, the maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows).map(|i| self.row(i).iter().map(|a| a.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// `I − s·M`.
    pub fn identity_minus_scaled(&self, s: f64) -> Self {
        assert_eq!(self.rows, self.cols);
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= -s;
        }
        for i in 0..self.rows {
            out[(i, i)] += 1.0;
        }
        out
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves `M x = b` by Gaussian elimination with partial pivoting.
///
/// Fails when a pivot falls below `1e-14·‖M‖_∞`.
pub fn solve_linear(m: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, Error> {
    let n = m.rows();
    if m.cols() != n || b.len() != n {
        return Err(Error::Invalid(format!(
            "dimension mismatch: {}x{} matrix, rhs of length {}",
            m.rows(),
            m.cols(),
            b.len()
        )));
    }
    let threshold = 1e-14 * m.norm_inf();
    let mut a = m.data.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let (piv_row, piv) =
            (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(piv > threshold) {
            return Err(Error::Singular { column: col, pivot: piv, threshold });
        }
        if piv_row != col {
            for j in 0..n {
                a.swap(col * n + j, piv_row * n + j);
            }
            x.swap(col, piv_row);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            a[r * n + col] = 0.0;
            for j in col + 1..n {
                a[r * n + j] -= f * a[col * n + j];
            }
            x[r] -= f * x[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= a[i * n + j] * x[j];
        }
        x[i] = s / a[i * n + i];
    }
    Ok(x)
}

/// Solves a tridiagonal system with partial pivoting.
///
/// `lower[i]` couples row `i + 1` to column `i`, `upper[i]` couples row `i`
/// to column `i + 1`.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>, Error> {
    let n = diag.len();
    assert!(lower.len() + 1 == n.max(1) && upper.len() + 1 == n.max(1) && rhs.len() == n);
    let scale = (0..n)
        .map(|i| {
            diag[i].abs() + if i > 0 { lower[i - 1].abs() } else { 0.0 } + if i + 1 < n { upper[i].abs() } else { 0.0 }
        })
        .fold(0.0, f64::max);
    let threshold = 1e-14 * scale;
    // Row i of the factor keeps entries at columns i, i+1, i+2.
    let mut d = diag.to_vec();
    let mut du = upper.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut dl = lower.to_vec();
    let mut b = rhs.to_vec();
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            if !(d[i].abs() > threshold) {
                return Err(Error::Singular { column: i, pivot: d[i].abs(), threshold });
            }
            let f = dl[i] / d[i];
            dl[i] = 0.0;
            d[i + 1] -= f * du[i];
            b[i + 1] -= f * b[i];
        } else {
            let f = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = 0.0;
            let tmp = d[i + 1];
            d[i + 1] = du[i] - f * tmp;
            du[i] = tmp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] *= -f;
            }
            b.swap(i, i + 1);
            b[i + 1] -= f * b[i];
        }
    }
    if n > 0 && !(d[n - 1].abs() > threshold) {
        return Err(Error::Singular { column: n - 1, pivot: d[n - 1].abs(), threshold });
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        if i + 1 < n {
            s -= du[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= du2[i] * x[i + 2];
        }
        x[i] = s / d[i];
    }
    Ok(x)
}

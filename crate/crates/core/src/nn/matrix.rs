use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Horizontal concatenation `[a | b]`.
    pub fn hcat(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
        assert_eq!(a.rows, b.rows, "hcat row mismatch");
        let mut out = Matrix::zeros(a.rows, a.cols + b.cols);
        for r in 0..a.rows {
            let row = out.row_mut(r);
            row[..a.cols].copy_from_slice(a.row(r));
            row[a.cols..].copy_from_slice(b.row(r));
        }
        out
    }

    /// Columns `[from, to)` as a new matrix.
    pub fn col_slice(&self, from: usize, to: usize) -> Matrix<T> {
        let mut out = Matrix::zeros(self.rows, to - from);
        for r in 0..self.rows {
            out.row_mut(r).copy_from_slice(&self.row(r)[from..to]);
        }
        out
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| U::from_f64_lossy(x.to_f64_lossy())).collect(),
        }
    }
}

const MR: usize = 4;
const NR: usize = 8;

/// `out (m x n) += a (m x k) * b (k x n)`.
pub fn gemm_acc<T: Scalar>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    tiled(a, (k, 1), b, out, m, k, n);
}

/// `out (k x n) += a^T * b` with `a (m x k)`, `b (m x n)`.
pub fn gemm_at_b_acc<T: Scalar>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), m * n);
    debug_assert_eq!(out.len(), k * n);
    tiled(a, (1, k), b, out, k, m, n);
}

/// `out (m x k) += a (m x n) * b^T` with `b (k x n)`.
pub fn gemm_a_bt_acc<T: Scalar>(a: &[T], b: &[T], out: &mut [T], m: usize, n: usize, k: usize) {
    debug_assert_eq!(a.len(), m * n);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * k);
    tiled(a, (n, 1), &transpose(b, k, n), out, m, n, k);
}

/// Row-major `rows x cols` to row-major `cols x rows`.
pub fn transpose<T: Scalar>(w: &[T], rows: usize, cols: usize) -> Vec<T> {
    debug_assert_eq!(w.len(), rows * cols);
    let mut t = vec![T::zero(); rows * cols];
    for (i, row) in w.chunks_exact(cols.max(1)).enumerate() {
        for (j, &v) in row.iter().enumerate() {
            t[j * rows + i] = v;
        }
    }
    t
}

/// `out (rows x cols) += L * R` where `L(i, q) = lhs[i * stride.0 + q * stride.1]`
/// and `R` is row-major `depth x cols`.
///
/// Full 4 x 8 tiles of `out` are summed over `depth` in registers and added
/// once; leftover rows use row-wise axpy, leftover columns plain dots.
#[inline(always)]
fn tiled<T: Scalar>(
    lhs: &[T],
    stride: (usize, usize),
    rhs: &[T],
    out: &mut [T],
    rows: usize,
    depth: usize,
    cols: usize,
) {
    let zero = T::zero();
    let (rs, qs) = stride;
    let full_rows = rows - rows % MR;
    let full_cols = cols - cols % NR;
    for i0 in (0..full_rows).step_by(MR) {
        for j0 in (0..full_cols).step_by(NR) {
            let mut acc = [[zero; NR]; MR];
            for q in 0..depth {
                let bv: &[T; NR] = rhs[q * cols + j0..q * cols + j0 + NR].try_into().unwrap();
                let base = i0 * rs + q * qs;
                let av = [lhs[base], lhs[base + rs], lhs[base + 2 * rs], lhs[base + 3 * rs]];
                for r in 0..MR {
                    for c in 0..NR {
                        acc[r][c] += av[r] * bv[c];
                    }
                }
            }
            for (r, acc_r) in acc.iter().enumerate() {
                let o = &mut out[(i0 + r) * cols + j0..(i0 + r) * cols + j0 + NR];
                for (ov, &v) in o.iter_mut().zip(acc_r) {
                    *ov += v;
                }
            }
        }
        for j in full_cols..cols {
            let mut acc = [zero; MR];
            for q in 0..depth {
                let bv = rhs[q * cols + j];
                for (r, s) in acc.iter_mut().enumerate() {
                    *s += lhs[(i0 + r) * rs + q * qs] * bv;
                }
            }
            for (r, &v) in acc.iter().enumerate() {
                out[(i0 + r) * cols + j] += v;
            }
        }
    }
    for i in full_rows..rows {
        let o = &mut out[i * cols..(i + 1) * cols];
        for q in 0..depth {
            let av = lhs[i * rs + q * qs];
            if av == zero {
                continue;
            }
            for (ov, &bv) in o.iter_mut().zip(&rhs[q * cols..(q + 1) * cols]) {
                *ov += av * bv;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &Matrix<f64>, b: &Matrix<f64>) -> Matrix<f64> {
        Matrix::from_fn(a.rows, b.cols, |i, j| (0..a.cols).map(|p| a.get(i, p) * b.get(p, j)).sum())
    }

    fn transpose(a: &Matrix<f64>) -> Matrix<f64> {
        Matrix::from_fn(a.cols, a.rows, |i, j| a.get(j, i))
    }

    fn sample(rows: usize, cols: usize, seed: f64) -> Matrix<f64> {
        Matrix::from_fn(rows, cols, |i, j| ((i * 7 + j * 3) as f64 * 0.37 + seed).sin())
    }

    fn assert_close(x: &Matrix<f64>, y: &Matrix<f64>) {
        for (u, v) in x.data.iter().zip(&y.data) {
            assert!((u - v).abs() < 1e-12, "{u} vs {v}");
        }
    }

    #[test]
    fn kernels_agree_with_naive_products() {
        // 9 rows and 19 columns exercise full tiles plus both remainders.
        for (m, k, n) in [(9, 7, 19), (4, 8, 8), (1, 3, 1), (5, 1, 9)] {
            let a = sample(m, k, 0.1);
            let b = sample(k, n, 0.4);
            let c = sample(m, n, 0.9);
            let init = sample(m, n, 2.0);

            let mut out = init.clone();
            gemm_acc(&a.data, &b.data, &mut out.data, m, k, n);
            let mut expect = naive(&a, &b);
            expect.data.iter_mut().zip(&init.data).for_each(|(e, i)| *e += i);
            assert_close(&out, &expect);

            let mut out = Matrix::zeros(k, n);
            gemm_at_b_acc(&a.data, &c.data, &mut out.data, m, k, n);
            assert_close(&out, &naive(&transpose(&a), &c));

            let d = sample(k, n, 1.3);
            let mut out = Matrix::zeros(m, k);
            gemm_a_bt_acc(&c.data, &d.data, &mut out.data, m, n, k);
            assert_close(&out, &naive(&c, &transpose(&d)));
        }
    }

    #[test]
    fn hcat_and_slice_invert() {
        let a = sample(3, 2, 0.0);
        let b = sample(3, 4, 1.0);
        let ab = Matrix::hcat(&a, &b);
        assert_eq!(ab.col_slice(0, 2), a);
        assert_eq!(ab.col_slice(2, 6), b);
    }
}

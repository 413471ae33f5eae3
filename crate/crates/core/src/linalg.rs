//! Minimal dense linear algebra for symmetric positive-definite systems.

use crate::scalar::Scalar;

/// Row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct SquareMatrix<T> {
    pub dim: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn at(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.data[i * self.dim + j]
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
pub(crate) struct Cholesky<T> {
    l: SquareMatrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Returns `None` if `a` is not numerically positive definite.
    pub fn factor(a: &SquareMatrix<T>) -> Option<Self> {
        let n = a.dim;
        let mut l = SquareMatrix::zeros(n);
        for j in 0..n {
            let row_j = &l.data[j * n..j * n + j];
            let mut d = a.get(j, j) - row_j.iter().map(|&x| x * x).sum::<T>();
            if d.is_nan() || d <= T::zero() {
                return None;
            }
            d = d.sqrt();
            *l.at(j, j) = d;
            for i in j + 1..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l.data[i * n + k] * l.data[j * n + k];
                }
                *l.at(i, j) = s / d;
            }
        }
        Some(Self { l })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.dim;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l.get(i, k) * y[k];
            }
            y[i] = s / self.l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l.get(k, i) * y[k];
            }
            y[i] = s / self.l.get(i, i);
        }
        y
    }

    pub fn inverse(&self) -> SquareMatrix<T> {
        let n = self.l.dim;
        let mut inv = SquareMatrix::zeros(n);
        let mut e = vec![T::zero(); n];
        for c in 0..n {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[c] = T::one();
            let col = self.solve(&e);
            for r in 0..n {
                *inv.at(r, c) = col[r];
            }
        }
        // symmetrize rounding noise
        for i in 0..n {
            for j in i + 1..n {
                let v = (inv.get(i, j) + inv.get(j, i)) * T::half();
                *inv.at(i, j) = v;
                *inv.at(j, i) = v;
            }
        }
        inv
    }
}

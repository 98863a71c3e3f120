//! Dense row-major matrices and the small LU solver used by the gradient
//! computation. Networks here are a few hundred neurons at most, so a plain
//! partial-pivoting LU is all that is needed.

use crate::{Result, RnnError, Scalar};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a square matrix from a flat row-major slice.
    pub fn from_flat(n: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n * n {
            return Err(RnnError::InvalidArgument(format!(
                "flat matrix data has {} entries, expected {}",
                data.len(),
                n * n
            )));
        }
        Ok(Self {
            rows: n,
            cols: n,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    /// Row `i` as a slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Flat row-major view of all entries.
    pub fn as_flat(&self) -> &[T] {
        &self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves `A x = b` in place by LU decomposition with partial pivoting.
///
/// Returns `Err(SingularGradientSystem)` when a pivot is exactly zero or not
/// finite; near-singular systems are the caller's concern.
pub fn lu_solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "lu_solve requires a square matrix");
    assert_eq!(n, b.len(), "right-hand side length mismatch");

    let mut lu = a.clone();
    let mut x: Vec<T> = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();

    for col in 0..n {
        // Pivot search on the current column.
        let mut pivot_row = col;
        let mut pivot_mag = lu.get(col, col).abs();
        for row in col + 1..n {
            let mag = lu.get(row, col).abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        if pivot_mag == T::zero() || !pivot_mag.is_finite() {
            return Err(RnnError::SingularGradientSystem);
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = lu.get(col, j);
                lu.set(col, j, lu.get(pivot_row, j));
                lu.set(pivot_row, j, tmp);
            }
            perm.swap(col, pivot_row);
            x.swap(col, pivot_row);
        }

        let pivot = lu.get(col, col);
        for row in col + 1..n {
            let factor = lu.get(row, col) / pivot;
            lu.set(row, col, factor);
            if factor != T::zero() {
                for j in col + 1..n {
                    let v = lu.get(row, j) - factor * lu.get(col, j);
                    lu.set(row, j, v);
                }
            }
        }
    }

    // Forward substitution with the unit-lower factor.
    for i in 1..n {
        let mut sum = x[i];
        for j in 0..i {
            sum = sum - lu.get(i, j) * x[j];
        }
        x[i] = sum;
    }
    // Back substitution with the upper factor.
    for i in (0..n).rev() {
        let mut sum = x[i];
        for j in i + 1..n {
            sum = sum - lu.get(i, j) * x[j];
        }
        x[i] = sum / lu.get(i, i);
    }

    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn solves_identity() {
        let a = Matrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        let x = lu_solve(&a, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn solves_requiring_pivot() {
        // First pivot is zero; partial pivoting must swap rows.
        let a = Matrix::from_flat(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let x = lu_solve(&a, &[2.0, 3.0]).unwrap();
        assert_eq!(x, vec![3.0, 2.0]);
    }

    #[test]
    fn rejects_singular() {
        let a = Matrix::from_flat(2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(
            lu_solve(&a, &[1.0, 1.0]),
            Err(RnnError::SingularGradientSystem)
        ));
    }

    proptest! {
        // A x = b solved then multiplied back must reproduce b.
        #[test]
        fn solve_then_multiply_back(
            entries in proptest::collection::vec(-10.0f64..10.0, 16),
            b in proptest::collection::vec(-10.0f64..10.0, 4),
        ) {
            let mut a = Matrix::from_flat(4, entries).unwrap();
            // Make the matrix safely non-singular by diagonal dominance.
            for i in 0..4 {
                let v = a.get(i, i) + 50.0;
                a.set(i, i, v);
            }
            let x = lu_solve(&a, &b).unwrap();
            for i in 0..4 {
                let mut acc = 0.0;
                for j in 0..4 {
                    acc += a.get(i, j) * x[j];
                }
                prop_assert!((acc - b[i]).abs() < 1e-9, "row {i}: {acc} vs {}", b[i]);
            }
        }
    }
}

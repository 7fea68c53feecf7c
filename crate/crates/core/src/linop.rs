//! Matrix-free linear operators.

use nalgebra::DMatrix;

/// A real linear map given only by its action and the action of its adjoint.
pub trait LinearOperator: Sync {
    fn input_len(&self) -> usize;
    fn output_len(&self) -> usize;

    /// `y = B x`; `y` is overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// `x = B* y`; `x` is overwritten.
    fn apply_adjoint(&self, y: &[f64], x: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.output_len()];
        self.apply(x, &mut y);
        y
    }

    fn apply_adjoint_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.input_len()];
        self.apply_adjoint(y, &mut x);
        x
    }
}

/// The identity on `R^n`.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn input_len(&self) -> usize {
        self.0
    }

    fn output_len(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }

    fn apply_adjoint(&self, y: &[f64], x: &mut [f64]) {
        x.copy_from_slice(y);
    }
}

impl LinearOperator for DMatrix<f64> {
    fn input_len(&self) -> usize {
        self.ncols()
    }

    fn output_len(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            *out = (0..self.ncols()).map(|c| self[(r, c)] * x[c]).sum();
        }
    }

    fn apply_adjoint(&self, y: &[f64], x: &mut [f64]) {
        for (c, out) in x.iter_mut().enumerate() {
            *out = (0..self.nrows()).map(|r| self[(r, c)] * y[r]).sum();
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_adjoint_is_transpose() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -1.0, 0.5, 4.0]);
        let x = [1.0, -2.0, 0.5];
        let y = [3.0, 1.5];
        assert_eq!(m.apply_vec(&x), vec![-1.5, 0.0]);
        let lhs = dot(&m.apply_vec(&x), &y);
        let rhs = dot(&x, &m.apply_adjoint_vec(&y));
        assert!((lhs - rhs).abs() < 1e-12);
    }
}

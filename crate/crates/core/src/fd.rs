//! Fourth-order central differences, used to verify differentials numerically.

use crate::scalar::Real;
use nalgebra::{DMatrix, DVector};

/// d/dt f(t) at t = 0 with the 4th-order five-point stencil.
pub fn central_diff4<R: Real, F>(f: F, step: R) -> DVector<R>
where
    F: Fn(R) -> DVector<R>,
{
    let two = R::of(2.0);
    let eight = R::of(8.0);
    let twelve = R::of(12.0);
    let fp2 = f(step * two);
    let fp1 = f(step);
    let fm1 = f(-step);
    let fm2 = f(-(step * two));
    (fp1 * eight - fm1 * eight - fp2 + fm2) / (twelve * step)
}

/// Scalar version of [`central_diff4`].
pub fn central_diff4_scalar<R: Real, F>(f: F, step: R) -> R
where
    F: Fn(R) -> R,
{
    central_diff4(|t| DVector::from_element(1, f(t)), step)[0]
}

/// Jacobian of `f` at `x`, columnwise central differences.
pub fn jacobian4<R: Real, F>(f: F, x: &DVector<R>, step: R) -> DMatrix<R>
where
    F: Fn(&DVector<R>) -> DVector<R>,
{
    let rows = f(x).len();
    let cols = x.len();
    let mut jac = DMatrix::zeros(rows, cols);
    for c in 0..cols {
        let col = central_diff4(
            |t| {
                let mut y = x.clone();
                y[c] += t;
                f(&y)
            },
            step,
        );
        jac.set_column(c, &col);
    }
    jac
}

//! Small dense solvers over fixed-size nalgebra storage.
//!
//! Only what the dynamics layer needs: a pivoted LU solve for square systems and the
//! right pseudo-inverse solve `x = Aᵀ(AAᵀ)⁻¹b` for full-row-rank underdetermined systems.

use nalgebra::{SMatrix, SVector};

use crate::scalar::Real;

/// Pivot magnitude (relative to the largest entry of the matrix) below which a matrix is
/// treated as singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularMatrix {
    /// Elimination column at which the pivot vanished.
    pub column: usize,
}

/// Solves `a · x = b` by Gaussian elimination with partial pivoting.
pub fn lu_solve<T: Real, const N: usize>(
    a: &SMatrix<T, N, N>,
    b: &SVector<T, N>,
) -> Result<SVector<T, N>, SingularMatrix> {
    let mut m = *a;
    let mut x = *b;
    let scale = m.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    if scale == T::zero() {
        return Err(SingularMatrix { column: 0 });
    }
    let tol = scale * T::lit(SINGULAR_PIVOT_RATIO);

    for col in 0..N {
        let mut pivot_row = col;
        let mut pivot_mag = m[(col, col)].abs();
        for row in col + 1..N {
            let mag = m[(row, col)].abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        if !(pivot_mag > tol) {
            return Err(SingularMatrix { column: col });
        }
        if pivot_row != col {
            m.swap_rows(col, pivot_row);
            x.swap_rows(col, pivot_row);
        }
        let pivot = m[(col, col)];
        for row in col + 1..N {
            let factor = m[(row, col)] / pivot;
            if factor == T::zero() {
                continue;
            }
            m[(row, col)] = T::zero();
            for k in col + 1..N {
                let upper = m[(col, k)];
                m[(row, k)] -= factor * upper;
            }
            let xc = x[col];
            x[row] -= factor * xc;
        }
    }

    for col in (0..N).rev() {
        let mut acc = x[col];
        for k in col + 1..N {
            acc -= m[(col, k)] * x[k];
        }
        x[col] = acc / m[(col, col)];
    }
    Ok(x)
}

/// LU solve followed by one step of iterative refinement.
pub fn lu_solve_refined<T: Real, const N: usize>(
    a: &SMatrix<T, N, N>,
    b: &SVector<T, N>,
) -> Result<SVector<T, N>, SingularMatrix> {
    let x = lu_solve(a, b)?;
    let r = b - a * x;
    let dx = lu_solve(a, &r)?;
    Ok(x + dx)
}

/// Minimum-Euclidean-norm solution of the underdetermined system `a · x = b`
/// (`M` equations, `N ≥ M` unknowns), via the right pseudo-inverse `x = aᵀ(a aᵀ)⁻¹ b`.
pub fn min_norm_solve<T: Real, const M: usize, const N: usize>(
    a: &SMatrix<T, M, N>,
    b: &SVector<T, M>,
) -> Result<SVector<T, N>, SingularMatrix> {
    let gram: SMatrix<T, M, M> = a * a.transpose();
    let y = lu_solve_refined(&gram, b)?;
    let x = a.transpose() * y;
    // One refinement pass on the residual keeps the result on the row space of `a`.
    let r = b - a * x;
    let dy = lu_solve(&gram, &r)?;
    Ok(x + a.transpose() * dy)
}

/// Euclidean norm without requiring nalgebra's `ComplexField`.
pub fn norm<T: Real, const R: usize, const C: usize>(m: &SMatrix<T, R, C>) -> T {
    m.iter().fold(T::zero(), |acc, v| acc + *v * *v).sqrt()
}

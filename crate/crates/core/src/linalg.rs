//! Dense solves shared by the kriging and GLS paths.
//!
//! Both factorizations return a 1-norm condition estimate so callers can
//! reject near-singular systems before trusting the solution.

use nalgebra::{DMatrix, DVector};

use crate::policy::NumericPolicy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Singular {
    pub condition: f64,
}

/// Estimate ‖A⁻¹‖₁ for symmetric A given a solver for A x = b
/// (Hager's method with Higham's alternating-sign fallback).
fn inverse_norm1_estimate(n: usize, solve: impl Fn(&DVector<f64>) -> DVector<f64>) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut estimate = 0.0_f64;
    let mut last_j = usize::MAX;
    for _ in 0..5 {
        let y = solve(&x);
        estimate = estimate.max(y.lp_norm(1));
        let signs = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        // A is symmetric so A⁻ᵀ = A⁻¹.
        let z = solve(&signs);
        let (j, zmax) = z
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| {
                if v.abs() > acc.1 {
                    (i, v.abs())
                } else {
                    acc
                }
            });
        if zmax <= z.dot(&x) || j == last_j {
            break;
        }
        last_j = j;
        x = DVector::zeros(n);
        x[j] = 1.0;
    }
    let alt = DVector::from_fn(n, |i, _| {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
        sign * (1.0 + t)
    });
    let alt_est = 2.0 * solve(&alt).lp_norm(1) / (3.0 * n as f64);
    estimate.max(alt_est)
}

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn residual_ok(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>, tol: f64) -> bool {
    let r = a * x - b;
    r.amax() <= tol * (1.0 + b.amax())
}

/// Solve a symmetric, possibly indefinite system by LU with partial
/// pivoting, followed by one step of iterative refinement.
pub(crate) fn solve_pivoted(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    policy: &NumericPolicy,
) -> Result<DVector<f64>, Singular> {
    let n = a.nrows();
    let lu = a.clone().lu();
    let infinite = Singular {
        condition: f64::INFINITY,
    };
    if !lu.is_invertible() {
        return Err(infinite);
    }
    let solve = |rhs: &DVector<f64>| lu.solve(rhs).unwrap_or_else(|| DVector::from_element(n, f64::NAN));
    let condition = norm1(a) * inverse_norm1_estimate(n, solve);
    if !condition.is_finite() || condition > policy.condition_threshold {
        return Err(Singular {
            condition: if condition.is_nan() { f64::INFINITY } else { condition },
        });
    }
    let mut x = lu.solve(b).ok_or(infinite)?;
    let r = b - a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    if !x.iter().all(|v| v.is_finite()) || !residual_ok(a, &x, b, policy.residual_tolerance) {
        return Err(Singular { condition });
    }
    Ok(x)
}

/// Cholesky factor of a symmetric positive definite matrix, reusable across
/// right-hand sides.
pub(crate) struct SpdFactor {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl SpdFactor {
    pub fn new(a: &DMatrix<f64>, policy: &NumericPolicy) -> Result<Self, Singular> {
        let chol = a.clone().cholesky().ok_or(Singular {
            condition: f64::INFINITY,
        })?;
        let condition = norm1(a) * inverse_norm1_estimate(a.nrows(), |b| chol.solve(b));
        if !condition.is_finite() || condition > policy.condition_threshold {
            return Err(Singular { condition });
        }
        Ok(Self { chol })
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_condition(a: &DMatrix<f64>) -> f64 {
        norm1(a) * norm1(&a.clone().try_inverse().unwrap())
    }

    #[test]
    fn condition_estimate_is_close_on_small_matrices() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[4.0, 1.0, 0.5, 1.0, 1.0, 3.0, 0.2, 1.0, 0.5, 0.2, 2.0, 1.0, 1.0, 1.0, 1.0, 0.0],
        );
        let lu = a.clone().lu();
        let est = norm1(&a) * inverse_norm1_estimate(4, |b| lu.solve(b).unwrap());
        let exact = exact_condition(&a);
        assert!(est <= exact * (1.0 + 1e-12));
        assert!(est >= exact / 3.0, "est {est} exact {exact}");
    }

    #[test]
    fn pivoted_solve_handles_zero_diagonal() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.0]);
        let b = DVector::from_vec(vec![0.5, 1.0]);
        let x = solve_pivoted(&a, &b, &NumericPolicy::default()).unwrap();
        assert_eq!(x.as_slice(), &[1.0, -0.5]);
    }

    #[test]
    fn singular_is_rejected() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0]);
        let b = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        assert!(solve_pivoted(&a, &b, &NumericPolicy::default()).is_err());
        let spd = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(SpdFactor::new(&spd, &NumericPolicy::default()).is_err());
    }
}

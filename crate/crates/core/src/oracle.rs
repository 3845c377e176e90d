//! Ground truth for linear-quadratic scenarios.
//!
//! When the plant and desired-trajectory generator are linear and the
//! matching condition holds, the error dynamics decouple as `ė = Ae + Bμ`
//! and the optimal value function is the quadratic `V*(ζ) = eᵀPe` with `P`
//! solving the continuous-time algebraic Riccati equation. Mapping `P` onto
//! the quadratic monomial basis yields the ideal critic/actor weights, which
//! the learning loop can then be checked against.

use nalgebra::{DMatrix, DVector};

use crate::adp::{monomial_pairs, ValueBasis, ValueBasisKind};
use crate::error::{Error, Result};

/// Linear-quadratic error dynamics `ė = Ae + Bμ` with cost `eᵀQ_e e + μᵀRμ`.
#[derive(Clone, Debug)]
pub struct LqSpec {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q_e: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

/// Solution of the Riccati equation: value matrix and optimal gain.
#[derive(Clone, Debug)]
pub struct RiccatiSolution {
    pub p: DMatrix<f64>,
    /// `K = R⁻¹BᵀP`; the optimal policy is `μ* = −Ke`.
    pub k: DMatrix<f64>,
}

const ARE_RESIDUAL_TOL: f64 = 1e-12;
const MAX_NEWTON_ITERS: usize = 60;

/// Residual `AᵀP + PA − PBR⁻¹BᵀP + Q` of the Riccati equation.
pub fn are_residual(spec: &LqSpec, p: &DMatrix<f64>) -> f64 {
    let r_inv = spec.r.clone().try_inverse().expect("R invertible");
    (spec.a.transpose() * p + p * &spec.a - p * &spec.b * r_inv * spec.b.transpose() * p
        + &spec.q_e)
        .norm()
}

/// Solve the Lyapunov equation `AᵀX + XA = −C` by the Kronecker linear
/// system; fine for the small state dimensions handled here.
fn solve_lyapunov(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    // vec(AᵀX) = (I ⊗ Aᵀ) vec(X); vec(XA) = (Aᵀ ⊗ I) vec(X)
    let coeff = eye.kronecker(&a.transpose()) + a.transpose().kronecker(&eye);
    let rhs = DVector::from_column_slice((-c).as_slice());
    let sol = coeff.lu().solve(&rhs).ok_or(Error::NoConvergence {
        iterations: 0,
        residual: f64::INFINITY,
    })?;
    Ok(DMatrix::from_column_slice(n, n, sol.as_slice()))
}

fn is_hurwitz(a: &DMatrix<f64>) -> bool {
    a.complex_eigenvalues().iter().all(|l| l.re < 0.0)
}

/// Stabilizing initial gain: zero if `A` is already Hurwitz, otherwise a
/// Bass-shift gain `K₀ = BᵀX⁻¹` with `(A+βI)X + X(A+βI)ᵀ = 2BBᵀ` for a
/// shift β exceeding the spectral abscissa of A.
fn initial_stabilizing_gain(spec: &LqSpec) -> Result<DMatrix<f64>> {
    let n = spec.a.nrows();
    let m = spec.b.ncols();
    if is_hurwitz(&spec.a) {
        return Ok(DMatrix::zeros(m, n));
    }
    let beta = spec.a.norm() + 0.5;
    let shifted = &spec.a + DMatrix::<f64>::identity(n, n) * beta;
    // (A+βI)X + X(A+βI)ᵀ = 2BBᵀ  ⇔  (−(A+βI))ᵀ Xᵀ + Xᵀ(−(A+βI)) = −2BBᵀ
    let c = &spec.b * spec.b.transpose() * 2.0;
    let x = solve_lyapunov(&(-&shifted).transpose(), &c)?;
    let x_inv = x.try_inverse().ok_or(Error::NoConvergence {
        iterations: 0,
        residual: f64::INFINITY,
    })?;
    let k0 = spec.b.transpose() * x_inv;
    if !is_hurwitz(&(&spec.a - &spec.b * &k0)) {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: f64::INFINITY,
        });
    }
    Ok(k0)
}

fn validate_spec(spec: &LqSpec) -> Result<()> {
    let n = spec.a.nrows();
    if spec.a.ncols() != n || spec.b.nrows() != n {
        return Err(Error::ConfigError("A must be square and B conformable".into()));
    }
    for (name, mat) in [("Q_e", &spec.q_e), ("R", &spec.r)] {
        if (mat - mat.transpose()).norm() > 1e-12 {
            return Err(Error::ConfigError(format!("{name} must be symmetric")));
        }
    }
    let q_eigs = spec.q_e.clone().symmetric_eigen().eigenvalues;
    if q_eigs.iter().any(|&l| l < -1e-12) {
        return Err(Error::ConfigError("Q_e must be positive semidefinite".into()));
    }
    let r_eigs = spec.r.clone().symmetric_eigen().eigenvalues;
    if r_eigs.iter().any(|&l| l <= 0.0) {
        return Err(Error::ConfigError("R must be positive definite".into()));
    }
    Ok(())
}

/// Solve the continuous-time algebraic Riccati equation by Newton–Kleinman
/// iteration: starting from a stabilizing gain, each step solves the
/// closed-loop Lyapunov equation
/// `(A−BK_k)ᵀP_k + P_k(A−BK_k) = −(Q_e + K_kᵀRK_k)` and refreshes
/// `K_{k+1} = R⁻¹BᵀP_k`. The iterates decrease monotonically to the
/// stabilizing solution.
pub fn solve_are(spec: &LqSpec) -> Result<RiccatiSolution> {
    validate_spec(spec)?;
    let r_inv = spec.r.clone().try_inverse().expect("validated R");
    let mut k = initial_stabilizing_gain(spec)?;
    let mut residual = f64::INFINITY;

    for iter in 0..MAX_NEWTON_ITERS {
        let a_cl = &spec.a - &spec.b * &k;
        let c = &spec.q_e + k.transpose() * &spec.r * &k;
        let p = solve_lyapunov(&a_cl, &c)?;
        let p = (&p + p.transpose()) * 0.5;
        k = &r_inv * spec.b.transpose() * &p;
        residual = are_residual(spec, &p);
        if residual <= ARE_RESIDUAL_TOL {
            return Ok(RiccatiSolution { p, k });
        }
        let _ = iter;
    }
    Err(Error::NoConvergence {
        iterations: MAX_NEWTON_ITERS,
        residual,
    })
}

/// Map a quadratic value matrix onto the error-only degree-2 monomial basis:
/// `Wᵀσ(ζ) = eᵀPe` with `W_k = P_ii` for squares and `2P_ij` for cross
/// terms, in the basis's lexicographic monomial order.
pub fn ideal_quadratic_weights(p: &DMatrix<f64>, basis: &ValueBasis) -> Result<DVector<f64>> {
    let n = p.nrows();
    if basis.kind != ValueBasisKind::ErrorQuadratic {
        return Err(Error::BasisMismatch(format!(
            "ideal quadratic weights need the error-quadratic family, got {:?}",
            basis.kind
        )));
    }
    let pairs = monomial_pairs(n);
    if basis.l != pairs.len() {
        return Err(Error::BasisMismatch(format!(
            "basis has {} functions but the quadratic family for n = {n} needs {}",
            basis.l,
            pairs.len()
        )));
    }
    Ok(DVector::from_iterator(
        pairs.len(),
        pairs.iter().map(|&(i, j)| {
            if i == j {
                p[(i, i)]
            } else {
                p[(i, j)] + p[(j, i)]
            }
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConcatState;
    use approx::assert_relative_eq;

    fn scalar_spec(a: f64, b: f64, q: f64, r: f64) -> LqSpec {
        LqSpec {
            a: DMatrix::from_element(1, 1, a),
            b: DMatrix::from_element(1, 1, b),
            q_e: DMatrix::from_element(1, 1, q),
            r: DMatrix::from_element(1, 1, r),
        }
    }

    #[test]
    fn scalar_riccati_closed_form() {
        // p = ar/b² + √(a²r²/b⁴ + qr/b²) at a=−1, b=q=r=1: √2 − 1
        let sol = solve_are(&scalar_spec(-1.0, 1.0, 1.0, 1.0)).unwrap();
        assert_relative_eq!(sol.p[(0, 0)], std::f64::consts::SQRT_2 - 1.0, epsilon = 1e-12);
        assert_relative_eq!(sol.k[(0, 0)], sol.p[(0, 0)], epsilon = 1e-12);
    }

    #[test]
    fn scalar_integrator() {
        // a = 0: p² = qr/b² → p = 1
        let sol = solve_are(&scalar_spec(0.0, 1.0, 1.0, 1.0)).unwrap();
        assert_relative_eq!(sol.p[(0, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn hurwitz_zero_cost() {
        let sol = solve_are(&scalar_spec(-2.0, 1.0, 0.0, 1.0)).unwrap();
        assert_relative_eq!(sol.p[(0, 0)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn two_state_residual_and_stability() {
        let spec = LqSpec {
            a: DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, -0.5, -0.5]),
            b: DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
            q_e: DMatrix::identity(2, 2),
            r: DMatrix::from_element(1, 1, 1.0),
        };
        let sol = solve_are(&spec).unwrap();
        assert!(are_residual(&spec, &sol.p) <= 1e-10);
        // P is PSD
        let eigs = sol.p.clone().symmetric_eigen().eigenvalues;
        assert!(eigs.iter().all(|&l| l >= -1e-12));
        assert!(is_hurwitz(&(&spec.a - &spec.b * &sol.k)));
    }

    #[test]
    fn unstable_plant_needs_bass_init() {
        let spec = LqSpec {
            a: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.5]),
            b: DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
            q_e: DMatrix::identity(2, 2),
            r: DMatrix::from_element(1, 1, 1.0),
        };
        let sol = solve_are(&spec).unwrap();
        assert!(are_residual(&spec, &sol.p) <= 1e-10);
    }

    #[test]
    fn uncontrollable_unstable_pair_fails() {
        // unstable mode invisible to B
        let spec = LqSpec {
            a: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            b: DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
            q_e: DMatrix::identity(2, 2),
            r: DMatrix::from_element(1, 1, 1.0),
        };
        assert!(matches!(solve_are(&spec), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn newton_residual_decreases_monotonically() {
        // re-run the iteration by hand and watch the residual after the
        // first stabilizing iterate
        let spec = LqSpec {
            a: DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, -0.5, -0.5]),
            b: DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
            q_e: DMatrix::identity(2, 2),
            r: DMatrix::from_element(1, 1, 1.0),
        };
        let r_inv = spec.r.clone().try_inverse().unwrap();
        let mut k = DMatrix::zeros(1, 2);
        let mut residuals = Vec::new();
        for _ in 0..12 {
            let a_cl = &spec.a - &spec.b * &k;
            let c = &spec.q_e + k.transpose() * &spec.r * &k;
            let p = solve_lyapunov(&a_cl, &c).unwrap();
            k = &r_inv * spec.b.transpose() * &p;
            residuals.push(are_residual(&spec, &p));
        }
        for w in residuals.windows(2) {
            assert!(w[1] <= w[0] + 1e-13, "residuals {:?}", residuals);
        }
    }

    #[test]
    fn quadratic_weights_examples() {
        let basis1 = ValueBasis::error_quadratic(1);
        let w = ideal_quadratic_weights(&DMatrix::from_element(1, 1, 0.7), &basis1).unwrap();
        assert_eq!(w, DVector::from_vec(vec![0.7]));

        let basis2 = ValueBasis::error_quadratic(2);
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]);
        let w = ideal_quadratic_weights(&p, &basis2).unwrap();
        assert_eq!(w, DVector::from_vec(vec![1.0, 1.0, 2.0]));

        let w = ideal_quadratic_weights(&DMatrix::identity(2, 2), &basis2).unwrap();
        assert_eq!(w, DVector::from_vec(vec![1.0, 0.0, 1.0]));
    }

    #[test]
    fn quadratic_weights_reproduce_value_function() {
        let basis = ValueBasis::error_quadratic(2);
        let p = DMatrix::from_row_slice(2, 2, &[1.3, -0.4, -0.4, 0.9]);
        let w = ideal_quadratic_weights(&p, &basis).unwrap();
        for (e1, e2) in [(0.5, -1.0), (2.0, 0.3), (-0.7, -0.2)] {
            let e = DVector::from_vec(vec![e1, e2]);
            let zeta = ConcatState::new(e.clone(), DVector::zeros(2));
            let via_basis = w.dot(&basis.sigma(&zeta));
            let direct = (e.transpose() * &p * &e)[(0, 0)];
            assert_relative_eq!(via_basis, direct, epsilon = 1e-13);
        }
    }

    #[test]
    fn quadratic_weights_reject_wrong_family() {
        let basis = ValueBasis::zeta_quadratic(1);
        assert!(matches!(
            ideal_quadratic_weights(&DMatrix::identity(1, 1), &basis),
            Err(Error::BasisMismatch(_))
        ));
    }
}

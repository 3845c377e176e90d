//! Tracking problem definition: plant, desired trajectory, cost, and the
//! concatenated autonomous reformulation.
//!
//! The plant is control affine, `ẋ = f(x) + g(x)u`, and the goal is to track
//! a desired trajectory generated by `ẋ_d = h_d(x_d)`. Stacking the tracking
//! error `e = x − x_d` with `x_d` gives the concatenated state
//! `ζ = [eᵀ, x_dᵀ]ᵀ`, whose dynamics `ζ̇ = F(ζ) + G(ζ)μ` are autonomous in
//! the control error `μ = u − u_d(x_d)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Vector-valued evaluator ℝⁿ → ℝᵏ.
pub type VecFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
/// Matrix-valued evaluator ℝⁿ → ℝᵏˣᵐ.
pub type MatFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
/// Scalar-valued evaluator ℝⁿ → ℝ.
pub type ScalarFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;

/// Smallest singular value below which `g(x)` is treated as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Plant: drift `f`, control effectiveness `g`, and dimensions.
///
/// `f` is unknown to the controller; only the simulator and oracle-side
/// diagnostics may evaluate it. Controller-side code works through the
/// identifier estimate instead (see [`crate::sysid`] and [`crate::adp`]).
#[derive(Clone)]
pub struct SystemModel {
    pub n: usize,
    pub m: usize,
    pub f: VecFn,
    pub g: MatFn,
    /// Ideal identifier weights when the drift is exactly representable in
    /// the configured basis; `None` for plants outside the basis span.
    pub true_theta: Option<DMatrix<f64>>,
}

impl SystemModel {
    pub fn f_at(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.f)(x)
    }

    pub fn g_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.g)(x)
    }
}

/// Desired trajectory generator `ẋ_d = h_d(x_d)` with norm bound `d`.
#[derive(Clone)]
pub struct DesiredTrajectory {
    pub h_d: VecFn,
    pub x_d0: DVector<f64>,
    /// Known bound on ‖x_d(t)‖ along the desired orbit.
    pub d: f64,
}

impl DesiredTrajectory {
    pub fn h_d_at(&self, x_d: &DVector<f64>) -> DVector<f64> {
        (self.h_d)(x_d)
    }
}

/// Local cost `r(ζ, μ) = Q(e) + μᵀRμ`.
#[derive(Clone)]
pub struct CostSpec {
    pub q: ScalarFn,
    pub r: DMatrix<f64>,
    r_inv: DMatrix<f64>,
}

impl CostSpec {
    /// Build a cost; `r` must be symmetric positive definite.
    pub fn new(q: ScalarFn, r: DMatrix<f64>) -> Result<Self> {
        let sym_err = (&r - r.transpose()).norm();
        if sym_err > 1e-12 {
            return Err(Error::ConfigError(format!(
                "R is not symmetric (asymmetry {sym_err:.3e})"
            )));
        }
        let eig = r.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::ConfigError(
                "R must be positive definite".to_string(),
            ));
        }
        let r_inv = r
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::ConfigError("R is not invertible".to_string()))?;
        Ok(Self { q, r, r_inv })
    }

    pub fn q_at(&self, e: &DVector<f64>) -> f64 {
        (self.q)(e)
    }

    pub fn r_inv(&self) -> &DMatrix<f64> {
        &self.r_inv
    }
}

/// Concatenated state ζ = [eᵀ, x_dᵀ]ᵀ, error block first.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcatState {
    pub e: DVector<f64>,
    pub x_d: DVector<f64>,
}

impl ConcatState {
    pub fn new(e: DVector<f64>, x_d: DVector<f64>) -> Self {
        assert_eq!(e.len(), x_d.len(), "error and desired state dimensions differ");
        Self { e, x_d }
    }

    /// Reassemble ζ from a stacked 2n-vector.
    pub fn from_zeta(zeta: &DVector<f64>) -> Self {
        assert!(zeta.len().is_multiple_of(2), "zeta must have even dimension");
        let n = zeta.len() / 2;
        Self {
            e: zeta.rows(0, n).into_owned(),
            x_d: zeta.rows(n, n).into_owned(),
        }
    }

    pub fn n(&self) -> usize {
        self.e.len()
    }

    /// Plant state x = e + x_d.
    pub fn x(&self) -> DVector<f64> {
        &self.e + &self.x_d
    }

    /// Stacked [eᵀ, x_dᵀ]ᵀ vector.
    pub fn zeta(&self) -> DVector<f64> {
        let n = self.n();
        let mut z = DVector::zeros(2 * n);
        z.rows_mut(0, n).copy_from(&self.e);
        z.rows_mut(n, n).copy_from(&self.x_d);
        z
    }
}

/// Left Moore–Penrose pseudoinverse `g⁺ = (gᵀg)⁻¹gᵀ` of a full-column-rank
/// matrix. Fails with [`Error::RankDeficient`] when the smallest singular
/// value (√λ_min(gᵀg)) is at or below [`RANK_TOL`].
pub fn pseudoinverse(g_mat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if g_mat.nrows() < g_mat.ncols() {
        return Err(Error::RankDeficient {
            sigma_min: 0.0,
            tol: RANK_TOL,
        });
    }
    let gtg = g_mat.transpose() * g_mat;
    let sigma_min = crate::linalg::sym_min_eig(&gtg).max(0.0).sqrt();
    if sigma_min <= RANK_TOL {
        return Err(Error::RankDeficient {
            sigma_min,
            tol: RANK_TOL,
        });
    }
    let inv = gtg.try_inverse().ok_or(Error::RankDeficient {
        sigma_min,
        tol: RANK_TOL,
    })?;
    Ok(inv * g_mat.transpose())
}

/// Steady-state control `u_d(x_d) = g⁺(x_d)(h_d(x_d) − f(x_d))` that holds
/// the plant on the desired trajectory when the matching condition holds.
pub fn steady_state_control(
    model: &SystemModel,
    desired: &DesiredTrajectory,
    x_d: &DVector<f64>,
) -> Result<DVector<f64>> {
    let g_pinv = pseudoinverse(&model.g_at(x_d))?;
    Ok(g_pinv * (desired.h_d_at(x_d) - model.f_at(x_d)))
}

/// Residual `‖(g g⁺ − I)(h_d − f_d)‖` of the matching condition at `x_d`.
/// Zero exactly when the desired-trajectory mismatch lies in the range of
/// `g(x_d)`, i.e. perfect tracking is feasible there.
pub fn matching_residual(
    model: &SystemModel,
    desired: &DesiredTrajectory,
    x_d: &DVector<f64>,
) -> Result<f64> {
    let g = model.g_at(x_d);
    let g_pinv = pseudoinverse(&g)?;
    let mismatch = desired.h_d_at(x_d) - model.f_at(x_d);
    let projected = &g * (g_pinv * &mismatch);
    Ok((projected - mismatch).norm())
}

/// True concatenated dynamics `(F(ζ), G(ζ))` of the reformulated problem:
///
/// F = [f(e+x_d) − h_d + g(e+x_d)u_d(x_d); h_d],  G = [g(e+x_d); 0].
///
/// Simulator/oracle side only: evaluates the true drift.
pub fn concat_dynamics(
    model: &SystemModel,
    desired: &DesiredTrajectory,
    zeta: &ConcatState,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = model.n;
    let x = zeta.x();
    let g_x = model.g_at(&x);
    let h_d = desired.h_d_at(&zeta.x_d);
    let u_d = steady_state_control(model, desired, &zeta.x_d)?;

    let mut f_cat = DVector::zeros(2 * n);
    f_cat
        .rows_mut(0, n)
        .copy_from(&(model.f_at(&x) - &h_d + &g_x * u_d));
    f_cat.rows_mut(n, n).copy_from(&h_d);

    let mut g_cat = DMatrix::zeros(2 * n, model.m);
    g_cat.rows_mut(0, n).copy_from(&g_x);
    Ok((f_cat, g_cat))
}

/// Local cost `r(ζ, μ) = Q(e) + μᵀRμ`.
pub fn local_cost(cost: &CostSpec, zeta: &ConcatState, mu: &DVector<f64>) -> f64 {
    cost.q_at(&zeta.e) + (mu.transpose() * &cost.r * mu)[(0, 0)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scalar_model(a: f64) -> (SystemModel, DesiredTrajectory) {
        let model = SystemModel {
            n: 1,
            m: 1,
            f: Arc::new(move |x: &DVector<f64>| x * a),
            g: Arc::new(|_x: &DVector<f64>| DMatrix::identity(1, 1)),
            true_theta: None,
        };
        let desired = DesiredTrajectory {
            h_d: Arc::new(|_x: &DVector<f64>| DVector::zeros(1)),
            x_d0: DVector::from_vec(vec![2.0]),
            d: 2.0,
        };
        (model, desired)
    }

    #[test]
    fn pseudoinverse_identity() {
        let g = DMatrix::<f64>::identity(2, 2);
        let pinv = pseudoinverse(&g).unwrap();
        assert_relative_eq!(pinv, DMatrix::identity(2, 2), epsilon = 1e-12);
    }

    #[test]
    fn pseudoinverse_orthonormal_column() {
        let g = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let pinv = pseudoinverse(&g).unwrap();
        assert_relative_eq!(pinv, DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), epsilon = 1e-12);
    }

    #[test]
    fn pseudoinverse_ones_column() {
        // (gᵀg)⁻¹gᵀ = (2)⁻¹[1 1] = [0.5 0.5]
        let g = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let pinv = pseudoinverse(&g).unwrap();
        assert_relative_eq!(pinv, DMatrix::from_row_slice(1, 2, &[0.5, 0.5]), epsilon = 1e-12);
    }

    #[test]
    fn pseudoinverse_rejects_rank_deficient() {
        let g = DMatrix::from_column_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            pseudoinverse(&g),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn steady_state_at_equilibrium() {
        let (model, desired) = scalar_model(-1.0);
        let u = steady_state_control(&model, &desired, &DVector::from_vec(vec![0.0])).unwrap();
        assert_relative_eq!(u[0], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn steady_state_scalar_formula() {
        // u_d = g⁺(h_d − f) = 1·(0 − (−2)) = 2
        let (model, desired) = scalar_model(-1.0);
        let u = steady_state_control(&model, &desired, &DVector::from_vec(vec![2.0])).unwrap();
        assert_relative_eq!(u[0], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn steady_state_twostate_origin() {
        let sc = scenarios::twostate_nl_default();
        let u = steady_state_control(&sc.model, &sc.desired, &DVector::zeros(2)).unwrap();
        assert_relative_eq!(u.norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn matching_square_invertible_is_zero() {
        let (model, desired) = scalar_model(-1.0);
        for xd in [-3.0, 0.5, 2.0] {
            let r = matching_residual(&model, &desired, &DVector::from_vec(vec![xd])).unwrap();
            assert!(r <= 1e-12, "residual {r} at x_d={xd}");
        }
    }

    #[test]
    fn matching_twostate_by_construction() {
        let sc = scenarios::twostate_nl_default();
        for xd in [
            DVector::from_vec(vec![0.0, 1.0]),
            DVector::from_vec(vec![0.7, -0.3]),
            DVector::from_vec(vec![-1.0, 1.2]),
        ] {
            let r = matching_residual(&sc.model, &sc.desired, &xd).unwrap();
            assert!(r <= 1e-12, "residual {r}");
        }
    }

    #[test]
    fn matching_detects_unmatched_mismatch() {
        // g = [0,1]ᵀ, h_d − f_d = [1,0]ᵀ: projector diag(0,1) kills nothing of
        // the first component, so the residual is exactly 1.
        let model = SystemModel {
            n: 2,
            m: 1,
            f: Arc::new(|_x: &DVector<f64>| DVector::zeros(2)),
            g: Arc::new(|_x: &DVector<f64>| DMatrix::from_column_slice(2, 1, &[0.0, 1.0])),
            true_theta: None,
        };
        let desired = DesiredTrajectory {
            h_d: Arc::new(|_x: &DVector<f64>| DVector::from_vec(vec![1.0, 0.0])),
            x_d0: DVector::zeros(2),
            d: 1.0,
        };
        let r = matching_residual(&model, &desired, &DVector::zeros(2)).unwrap();
        assert_relative_eq!(r, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn concat_dynamics_scalar_lq() {
        // e=1, x_d=2: F = [−(1+2) − 0 + 1·2, 0]ᵀ = [−1, 0]ᵀ, G = [1, 0]ᵀ
        let (model, desired) = scalar_model(-1.0);
        let zeta = ConcatState::new(DVector::from_vec(vec![1.0]), DVector::from_vec(vec![2.0]));
        let (f_cat, g_cat) = concat_dynamics(&model, &desired, &zeta).unwrap();
        assert_relative_eq!(f_cat, DVector::from_vec(vec![-1.0, 0.0]), epsilon = 1e-14);
        assert_relative_eq!(g_cat, DMatrix::from_column_slice(2, 1, &[1.0, 0.0]), epsilon = 1e-14);
    }

    #[test]
    fn concat_dynamics_zero_error_drift_under_matching() {
        let sc = scenarios::twostate_nl_default();
        for xd in [
            DVector::from_vec(vec![0.0, 1.0]),
            DVector::from_vec(vec![0.4, 0.9]),
        ] {
            let zeta = ConcatState::new(DVector::zeros(2), xd.clone());
            let (f_cat, g_cat) = concat_dynamics(&sc.model, &sc.desired, &zeta).unwrap();
            assert!(f_cat.rows(0, 2).norm() <= 1e-12);
            assert_relative_eq!(
                f_cat.rows(2, 2).into_owned(),
                sc.desired.h_d_at(&xd),
                epsilon = 1e-14
            );
            // second block of G is always zero by construction
            assert_eq!(g_cat.rows(2, 2).into_owned(), DMatrix::zeros(2, 1));
        }
    }

    #[test]
    fn local_cost_examples() {
        let cost = CostSpec::new(
            Arc::new(|e: &DVector<f64>| e[0] * e[0]),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        let zeta0 = ConcatState::new(DVector::zeros(1), DVector::zeros(1));
        assert_eq!(local_cost(&cost, &zeta0, &DVector::zeros(1)), 0.0);

        let zeta1 = ConcatState::new(DVector::from_vec(vec![1.0]), DVector::zeros(1));
        assert_relative_eq!(
            local_cost(&cost, &zeta1, &DVector::from_vec(vec![1.0])),
            2.0,
            epsilon = 1e-14
        );

        let cost2 = CostSpec::new(
            Arc::new(|e: &DVector<f64>| e[0] * e[0]),
            DMatrix::from_element(1, 1, 2.0),
        )
        .unwrap();
        let zeta3 = ConcatState::new(DVector::from_vec(vec![3.0]), DVector::zeros(1));
        assert_relative_eq!(
            local_cost(&cost2, &zeta3, &DVector::from_vec(vec![-1.0])),
            11.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn cost_rejects_asymmetric_r() {
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(CostSpec::new(Arc::new(|_e: &DVector<f64>| 0.0), r).is_err());
    }

    proptest! {
        #[test]
        fn pinv_is_left_inverse(entries in proptest::collection::vec(-5.0f64..5.0, 6)) {
            let g = DMatrix::from_column_slice(3, 2, &entries);
            if let Ok(pinv) = pseudoinverse(&g) {
                let prod = pinv * &g;
                prop_assert!((prod - DMatrix::<f64>::identity(2, 2)).norm() < 1e-10);
            }
        }

        #[test]
        fn local_cost_nonnegative(e in -3.0f64..3.0, mu in -3.0f64..3.0) {
            let cost = CostSpec::new(
                Arc::new(|e: &DVector<f64>| e[0] * e[0]),
                DMatrix::from_element(1, 1, 2.0),
            ).unwrap();
            let zeta = ConcatState::new(DVector::from_vec(vec![e]), DVector::zeros(1));
            let c = local_cost(&cost, &zeta, &DVector::from_vec(vec![mu]));
            prop_assert!(c >= 0.0);
            if e != 0.0 || mu != 0.0 {
                prop_assert!(c > 0.0);
            }
        }
    }
}

//! Value-function approximation, approximate Bellman error, control law, and
//! the actor/critic/least-squares update laws with Bellman-error
//! extrapolation.
//!
//! The optimal value function is approximated as `V̂(ζ) = Ŵ_cᵀσ(ζ)` and the
//! policy as `μ̂(ζ) = −½R⁻¹Gᵀ∇σᵀŴ_a`. Substituting both into the
//! Hamilton-Jacobi-Bellman equation, with the identifier standing in for the
//! unknown drift, leaves a measurable residual `δ̂` — the approximate Bellman
//! error — which can be evaluated at arbitrary off-trajectory points. The
//! update laws descend the squared residual at the current state and at a
//! fixed grid of extrapolation points simultaneously, so no probing signal
//! is needed.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{halton_point, scale_to_box, sym_min_eig, sym_spectral_norm};
use crate::model::{pseudoinverse, ConcatState, CostSpec, MatFn, VecFn};
use crate::sysid::IdentifierBasis;

/// Named value-basis family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueBasisKind {
    /// Degree-2 monomials in the tracking error; `V̂(e = 0) = 0` holds by
    /// construction. `L = n(n+1)/2`.
    ErrorQuadratic,
    /// Degree-2 monomials in the full concatenated state. `L = n(2n+1)`.
    ZetaQuadratic,
    Custom,
}

type BasisFn = Arc<dyn Fn(&ConcatState) -> DVector<f64> + Send + Sync>;
type BasisGradFn = Arc<dyn Fn(&ConcatState) -> DMatrix<f64> + Send + Sync>;

/// Value-function basis `σ: ℝ²ⁿ → ℝᴸ` with its analytic gradient.
#[derive(Clone)]
pub struct ValueBasis {
    pub l: usize,
    pub kind: ValueBasisKind,
    sigma: BasisFn,
    grad_sigma: BasisGradFn,
}

/// Index pairs (i, j), i ≤ j, in lexicographic order for the quadratic
/// monomial families.
pub(crate) fn monomial_pairs(dim: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(dim * (dim + 1) / 2);
    for i in 0..dim {
        for j in i..dim {
            pairs.push((i, j));
        }
    }
    pairs
}

impl ValueBasis {
    /// Degree-2 monomials `{e_i e_j : i ≤ j}` over the error block.
    pub fn error_quadratic(n: usize) -> Self {
        let pairs = monomial_pairs(n);
        let l = pairs.len();
        let pairs_grad = pairs.clone();
        let sigma: BasisFn = Arc::new(move |zeta: &ConcatState| {
            DVector::from_iterator(l, pairs.iter().map(|&(i, j)| zeta.e[i] * zeta.e[j]))
        });
        let grad_sigma: BasisGradFn = Arc::new(move |zeta: &ConcatState| {
            let n = zeta.n();
            let mut grad = DMatrix::zeros(pairs_grad.len(), 2 * n);
            for (row, &(i, j)) in pairs_grad.iter().enumerate() {
                // d(e_i e_j)/de_k = δ_ki e_j + δ_kj e_i; zero in the x_d block
                grad[(row, i)] += zeta.e[j];
                grad[(row, j)] += zeta.e[i];
            }
            grad
        });
        Self {
            l,
            kind: ValueBasisKind::ErrorQuadratic,
            sigma,
            grad_sigma,
        }
    }

    /// Degree-2 monomials over the full concatenated state.
    pub fn zeta_quadratic(n: usize) -> Self {
        let pairs = monomial_pairs(2 * n);
        let l = pairs.len();
        let pairs_grad = pairs.clone();
        let sigma: BasisFn = Arc::new(move |zeta: &ConcatState| {
            let z = zeta.zeta();
            DVector::from_iterator(l, pairs.iter().map(|&(i, j)| z[i] * z[j]))
        });
        let grad_sigma: BasisGradFn = Arc::new(move |zeta: &ConcatState| {
            let z = zeta.zeta();
            let mut grad = DMatrix::zeros(pairs_grad.len(), z.len());
            for (row, &(i, j)) in pairs_grad.iter().enumerate() {
                grad[(row, i)] += z[j];
                grad[(row, j)] += z[i];
            }
            grad
        });
        Self {
            l,
            kind: ValueBasisKind::ZetaQuadratic,
            sigma,
            grad_sigma,
        }
    }

    pub fn custom(l: usize, sigma: BasisFn, grad_sigma: BasisGradFn) -> Self {
        Self {
            l,
            kind: ValueBasisKind::Custom,
            sigma,
            grad_sigma,
        }
    }

    pub fn sigma(&self, zeta: &ConcatState) -> DVector<f64> {
        (self.sigma)(zeta)
    }

    /// `∇_ζ σ(ζ)`, an `L × 2n` matrix.
    pub fn grad_sigma(&self, zeta: &ConcatState) -> DMatrix<f64> {
        (self.grad_sigma)(zeta)
    }

    /// Max relative error between the analytic gradient and central finite
    /// differences of `σ` over the given sample points.
    pub fn gradient_check(&self, samples: &[ConcatState]) -> f64 {
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for zeta in samples {
            let analytic = self.grad_sigma(zeta);
            let dim = 2 * zeta.n();
            let mut numeric = DMatrix::zeros(self.l, dim);
            for k in 0..dim {
                let mut fwd = zeta.zeta();
                let mut bwd = zeta.zeta();
                fwd[k] += h;
                bwd[k] -= h;
                let df = self.sigma(&ConcatState::from_zeta(&fwd));
                let db = self.sigma(&ConcatState::from_zeta(&bwd));
                numeric.set_column(k, &((df - db) / (2.0 * h)));
            }
            let scale = analytic.norm().max(1.0);
            worst = worst.max((&analytic - &numeric).norm() / scale);
        }
        worst
    }
}

/// Critic weights and the least-squares gain matrix.
#[derive(Clone, Debug)]
pub struct CriticState {
    pub w_c_hat: DVector<f64>,
    pub gamma: DMatrix<f64>,
}

/// Actor weights.
#[derive(Clone, Debug)]
pub struct ActorState {
    pub w_a_hat: DVector<f64>,
}

/// Adaptation gains of the actor/critic/least-squares update laws.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct AdpGains {
    pub eta_c1: f64,
    pub eta_c2: f64,
    pub eta_a1: f64,
    pub eta_a2: f64,
    /// Normalization constant in `ρ = 1 + ν ωᵀΓω`.
    pub nu: f64,
    /// Forgetting factor (may be zero).
    pub beta: f64,
    /// Saturation bound on ‖Γ‖.
    pub gamma_bar: f64,
}

impl AdpGains {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eta_c1", self.eta_c1),
            ("eta_c2", self.eta_c2),
            ("eta_a1", self.eta_a1),
            ("eta_a2", self.eta_a2),
            ("nu", self.nu),
            ("gamma_bar", self.gamma_bar),
        ];
        for (name, v) in positive {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::ConfigError(format!(
                    "adp.gains.{name} must be positive (got {v})"
                )));
            }
        }
        if self.beta < 0.0 || !self.beta.is_finite() {
            return Err(Error::ConfigError(format!(
                "adp.gains.beta must be >= 0 (got {})",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Everything the controller is allowed to know about the problem: the
/// control effectiveness, the desired-trajectory generator, the cost, and
/// the two bases. The true drift `f` is deliberately absent; controller-side
/// computations reach the drift only through an identifier weight estimate.
#[derive(Clone)]
pub struct ControllerContext {
    pub n: usize,
    pub m: usize,
    pub g: MatFn,
    pub h_d: VecFn,
    pub cost: CostSpec,
    pub value_basis: ValueBasis,
    pub id_basis: IdentifierBasis,
}

/// Bellman-error evaluation at one point: regressor, normalization, residual,
/// and the policy-curvature matrix used by the actor law.
#[derive(Clone, Debug)]
pub struct BePoint {
    pub omega: DVector<f64>,
    pub rho: f64,
    pub delta: f64,
    pub g_sigma: DMatrix<f64>,
}

/// Per-step evaluations at the current state and the extrapolation grid.
#[derive(Clone, Debug)]
pub struct GridEvals {
    pub current: BePoint,
    pub points: Vec<BePoint>,
}

/// Quantities that depend only on the desired state, shared across the
/// extrapolation grid under the tracking strategy.
struct DesiredCache {
    g_d_pinv: DMatrix<f64>,
    h_d: DVector<f64>,
    /// θ̂ᵀσ_θd for the θ̂ the cache was built with.
    theta_sigma_d: DVector<f64>,
}

impl ControllerContext {
    /// `G(ζ) = [g(e+x_d); 0]`.
    pub fn g_concat(&self, zeta: &ConcatState) -> DMatrix<f64> {
        let g_x = (self.g)(&zeta.x());
        let mut g_cat = DMatrix::zeros(2 * self.n, self.m);
        g_cat.rows_mut(0, self.n).copy_from(&g_x);
        g_cat
    }

    fn desired_cache(&self, x_d: &DVector<f64>, theta_hat: &DMatrix<f64>) -> Result<DesiredCache> {
        let g_d_pinv = pseudoinverse(&(self.g)(x_d))?;
        let sigma_d = self.id_basis.sigma_theta_d(x_d);
        let theta_sigma_d = theta_hat.transpose() * sigma_d;
        Ok(DesiredCache {
            g_d_pinv,
            h_d: (self.h_d)(x_d),
            theta_sigma_d,
        })
    }

    /// Single-point Bellman evaluation against a prebuilt desired-state
    /// cache; the workhorse behind [`Self::bellman_error`] and
    /// [`Self::evaluate_grid`].
    fn eval_point(
        &self,
        zeta: &ConcatState,
        theta_hat: &DMatrix<f64>,
        critic: &CriticState,
        actor: &ActorState,
        gains: &AdpGains,
        cache: &DesiredCache,
    ) -> BePoint {
        let n = self.n;
        let x = zeta.x();
        let g_x = (self.g)(&x);
        let grad = self.value_basis.grad_sigma(zeta);

        // error-block drift of F_θ + F_1:
        //   θ̂ᵀσ_θ(ζ) − g(x)g_d⁺(θ̂ᵀσ_θd − h_d) − h_d
        let sigma = self.id_basis.sigma_theta(zeta);
        let proj_vec = &g_x * (&cache.g_d_pinv * (&cache.theta_sigma_d - &cache.h_d));
        let drift_e = theta_hat.transpose() * sigma - proj_vec - &cache.h_d;

        // ∇σ G collapses to (∇_e σ) g(x) since the lower block of G is zero
        let gg = grad.columns(0, n) * &g_x;
        let mu = -0.5 * self.cost.r_inv() * gg.transpose() * &actor.w_a_hat;
        let g_sigma = &gg * self.cost.r_inv() * gg.transpose();

        // ω = ∇σ(F_θ + F_1 + Gμ̂), split over the two blocks of ζ
        let omega = grad.columns(0, n) * (&drift_e + &g_x * &mu) + grad.columns(n, n) * &cache.h_d;
        let rho = 1.0 + gains.nu * (omega.transpose() * &critic.gamma * &omega)[(0, 0)];
        let delta = self.cost.q_at(&zeta.e)
            + (mu.transpose() * &self.cost.r * &mu)[(0, 0)]
            + critic.w_c_hat.dot(&omega);

        BePoint {
            omega,
            rho,
            delta,
            g_sigma,
        }
    }

    /// Policy `μ̂(ζ) = −½ R⁻¹ Gᵀ(ζ) ∇σᵀ(ζ) Ŵ_a`.
    pub fn policy(&self, zeta: &ConcatState, actor: &ActorState) -> DVector<f64> {
        let g_cat = self.g_concat(zeta);
        let grad = self.value_basis.grad_sigma(zeta);
        -0.5 * self.cost.r_inv() * g_cat.transpose() * grad.transpose() * &actor.w_a_hat
    }

    /// Estimated steady-state control `û_d = g⁺(x_d)(h_d(x_d) − θ̂ᵀσ_θd)`.
    pub fn desired_input_estimate(
        &self,
        x_d: &DVector<f64>,
        theta_hat: &DMatrix<f64>,
    ) -> Result<DVector<f64>> {
        let g_pinv = pseudoinverse(&(self.g)(x_d))?;
        let sigma_d = self.id_basis.sigma_theta_d(x_d);
        Ok(g_pinv * ((self.h_d)(x_d) - theta_hat.transpose() * sigma_d))
    }

    /// Applied control `u = μ̂(ζ) + û_d(x_d, θ̂)`.
    pub fn applied_control(
        &self,
        zeta: &ConcatState,
        actor: &ActorState,
        theta_hat: &DMatrix<f64>,
    ) -> Result<DVector<f64>> {
        Ok(self.policy(zeta, actor) + self.desired_input_estimate(&zeta.x_d, theta_hat)?)
    }

    /// Model-based split of the concatenated drift:
    ///
    /// F_θ(ζ, θ̂) = [θ̂ᵀσ_θ(ζ) − g(x)g⁺(x_d)θ̂ᵀσ_θd; 0]
    /// F_1(ζ)    = [−h_d + g(e+x_d)g⁺(x_d)h_d; h_d]
    ///
    /// Under exact parameterization, `F_θ(ζ, θ) + F_1(ζ)` equals the true
    /// concatenated drift `F(ζ)`.
    pub fn extrapolation_dynamics(
        &self,
        zeta: &ConcatState,
        theta_hat: &DMatrix<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        let n = self.n;
        let x = zeta.x();
        let g_x = (self.g)(&x);
        let g_d_pinv = pseudoinverse(&(self.g)(&zeta.x_d))?;
        let h_d = (self.h_d)(&zeta.x_d);

        let sigma = self.id_basis.sigma_theta(zeta);
        let sigma_d = self.id_basis.sigma_theta_d(&zeta.x_d);
        let proj = &g_x * &g_d_pinv;

        let mut f_theta = DVector::zeros(2 * n);
        f_theta
            .rows_mut(0, n)
            .copy_from(&(theta_hat.transpose() * sigma - &proj * (theta_hat.transpose() * sigma_d)));

        let mut f_one = DVector::zeros(2 * n);
        f_one.rows_mut(0, n).copy_from(&(&proj * &h_d - &h_d));
        f_one.rows_mut(n, n).copy_from(&h_d);
        Ok((f_theta, f_one))
    }

    /// `G_σ(ζ) = ∇σ G R⁻¹ Gᵀ ∇σᵀ`.
    pub fn g_sigma(&self, zeta: &ConcatState) -> DMatrix<f64> {
        let grad = self.value_basis.grad_sigma(zeta);
        let g_cat = self.g_concat(zeta);
        let gg = &grad * &g_cat;
        &gg * self.cost.r_inv() * gg.transpose()
    }

    /// Approximate Bellman error at `ζ`:
    ///
    /// ω = ∇σ(F_θ + F_1 + Gμ̂),  ρ = 1 + ν ωᵀΓω,
    /// δ̂ = Q̄(ζ) + μ̂ᵀRμ̂ + Ŵ_cᵀω.
    pub fn bellman_error(
        &self,
        zeta: &ConcatState,
        theta_hat: &DMatrix<f64>,
        critic: &CriticState,
        actor: &ActorState,
        gains: &AdpGains,
    ) -> Result<BePoint> {
        let cache = self.desired_cache(&zeta.x_d, theta_hat)?;
        Ok(self.eval_point(zeta, theta_hat, critic, actor, gains, &cache))
    }

    /// Evaluate the Bellman error at the current state and at every grid
    /// point (fixed iteration order, so reductions are reproducible). Under
    /// the tracking strategy all points share the current desired state, so
    /// the x_d-dependent quantities are computed once.
    pub fn evaluate_grid(
        &self,
        zeta: &ConcatState,
        grid: &ExtrapolationGrid,
        theta_hat: &DMatrix<f64>,
        critic: &CriticState,
        actor: &ActorState,
        gains: &AdpGains,
    ) -> Result<GridEvals> {
        let cache = self.desired_cache(&zeta.x_d, theta_hat)?;
        let current = self.eval_point(zeta, theta_hat, critic, actor, gains, &cache);
        let mut points = Vec::with_capacity(grid.len());
        match grid.strategy {
            GridStrategy::Tracking => {
                for i in 0..grid.len() {
                    let zeta_i = grid.zeta_point(i, &zeta.x_d);
                    points.push(self.eval_point(&zeta_i, theta_hat, critic, actor, gains, &cache));
                }
            }
            GridStrategy::FixedZeta => {
                for i in 0..grid.len() {
                    let zeta_i = grid.zeta_point(i, &zeta.x_d);
                    let cache_i = self.desired_cache(&zeta_i.x_d, theta_hat)?;
                    points.push(self.eval_point(&zeta_i, theta_hat, critic, actor, gains, &cache_i));
                }
            }
        }
        Ok(GridEvals { current, points })
    }

    /// Control error equivalent to the applied control law, for the
    /// reformulated dynamics: `μ = μ̂ + g_d⁺ θ̃ᵀ σ_θd` (the reconstruction
    /// error term vanishes under exact parameterization). Simulator-side:
    /// requires the true weights.
    pub fn mu_equivalent(
        &self,
        zeta: &ConcatState,
        actor: &ActorState,
        theta_true: &DMatrix<f64>,
        theta_hat: &DMatrix<f64>,
    ) -> Result<DVector<f64>> {
        let g_d_pinv = pseudoinverse(&(self.g)(&zeta.x_d))?;
        let sigma_d = self.id_basis.sigma_theta_d(&zeta.x_d);
        let theta_tilde = theta_true - theta_hat;
        Ok(self.policy(zeta, actor) + g_d_pinv * (theta_tilde.transpose() * sigma_d))
    }
}

/// Critic update `Ŵ̇_c = −η_c1 Γ (ω/ρ) δ̂_t − (η_c2/N) Γ Σ_i (ω_i/ρ_i) δ̂_ti`.
pub fn critic_dot(gains: &AdpGains, critic: &CriticState, evals: &GridEvals) -> DVector<f64> {
    let cur = &evals.current;
    let mut acc = &cur.omega * (gains.eta_c1 * cur.delta / cur.rho);
    if !evals.points.is_empty() {
        let scale = gains.eta_c2 / evals.points.len() as f64;
        for p in &evals.points {
            acc += &p.omega * (scale * p.delta / p.rho);
        }
    }
    -(&critic.gamma * acc)
}

/// Saturated least-squares gain update
/// `Γ̇ = (βΓ − η_c1 Γ ωωᵀ/ρ² Γ)·𝟙{‖Γ‖ ≤ Γ̄}` (spectral norm).
pub fn gamma_dot(
    gains: &AdpGains,
    critic: &CriticState,
    omega: &DVector<f64>,
    rho: f64,
) -> DMatrix<f64> {
    let l = critic.gamma.nrows();
    if sym_spectral_norm(&critic.gamma) > gains.gamma_bar {
        return DMatrix::zeros(l, l);
    }
    let gw = &critic.gamma * omega;
    &critic.gamma * gains.beta - (&gw * gw.transpose()) * (gains.eta_c1 / (rho * rho))
}

/// Actor update
/// `Ŵ̇_a = −η_a1(Ŵ_a − Ŵ_c) − η_a2 Ŵ_a
///        + (η_c1 G_σᵀ Ŵ_a ωᵀ/(4ρ) + Σ_i η_c2 G_σiᵀ Ŵ_a ω_iᵀ/(4Nρ_i)) Ŵ_c`.
pub fn actor_dot(
    gains: &AdpGains,
    actor: &ActorState,
    critic: &CriticState,
    evals: &GridEvals,
) -> DVector<f64> {
    let l = actor.w_a_hat.len();
    let cur = &evals.current;
    let mut correction = DMatrix::zeros(l, l);
    correction += (cur.g_sigma.transpose() * &actor.w_a_hat) * cur.omega.transpose()
        * (gains.eta_c1 / (4.0 * cur.rho));
    if !evals.points.is_empty() {
        let n_points = evals.points.len() as f64;
        for p in &evals.points {
            correction += (p.g_sigma.transpose() * &actor.w_a_hat) * p.omega.transpose()
                * (gains.eta_c2 / (4.0 * n_points * p.rho));
        }
    }
    (&critic.w_c_hat - &actor.w_a_hat) * gains.eta_a1 - &actor.w_a_hat * gains.eta_a2
        + correction * &critic.w_c_hat
}

/// Grid placement strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridStrategy {
    /// Points fixed in error space, paired with the current `x_d(t)`.
    Tracking,
    /// Points fixed in the full concatenated space.
    FixedZeta,
}

/// Point-set construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// Uniform tensor lattice (endpoints included; a single point per axis
    /// sits at the interval midpoint). Requires `N = k^d`.
    Lattice,
    /// Halton low-discrepancy sequence scaled to the box.
    Halton,
}

/// Configuration for [`make_grid`].
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct GridConfig {
    pub n_points: usize,
    /// Per-coordinate [lo, hi] bounds: error coordinates for the tracking
    /// strategy, full ζ coordinates for the fixed strategy.
    pub bounds: Vec<[f64; 2]>,
    pub strategy: GridStrategy,
    pub kind: GridKind,
}

/// The points ζ_i where the Bellman error is extrapolated.
#[derive(Clone, Debug)]
pub struct ExtrapolationGrid {
    pub strategy: GridStrategy,
    points: Vec<DVector<f64>>,
}

impl ExtrapolationGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    /// Resolve grid point `i` to a concatenated state, pairing error-space
    /// points with the supplied `x_d` under the tracking strategy.
    pub fn zeta_point(&self, i: usize, x_d: &DVector<f64>) -> ConcatState {
        match self.strategy {
            GridStrategy::Tracking => ConcatState::new(self.points[i].clone(), x_d.clone()),
            GridStrategy::FixedZeta => ConcatState::from_zeta(&self.points[i]),
        }
    }
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Build a deterministic extrapolation point set from its configuration.
pub fn make_grid(config: &GridConfig) -> Result<ExtrapolationGrid> {
    let dim = config.bounds.len();
    if dim == 0 {
        return Err(Error::ConfigError("grid bounds are empty".to_string()));
    }
    if config.n_points == 0 {
        return Err(Error::ConfigError("grid needs at least one point".to_string()));
    }
    for (i, b) in config.bounds.iter().enumerate() {
        if b[0] > b[1] || b[0].is_nan() || b[1].is_nan() {
            return Err(Error::ConfigError(format!(
                "grid bounds[{i}] has lo > hi ({} > {})",
                b[0], b[1]
            )));
        }
    }

    let points = match config.kind {
        GridKind::Lattice => {
            let per_axis = (config.n_points as f64).powf(1.0 / dim as f64).round() as usize;
            if per_axis.pow(dim as u32) != config.n_points {
                return Err(Error::ConfigError(format!(
                    "lattice grid needs n_points = k^{dim}; got {}",
                    config.n_points
                )));
            }
            let axes: Vec<Vec<f64>> = config
                .bounds
                .iter()
                .map(|b| linspace(b[0], b[1], per_axis))
                .collect();
            let mut pts = Vec::with_capacity(config.n_points);
            let mut idx = vec![0usize; dim];
            loop {
                pts.push(DVector::from_iterator(
                    dim,
                    idx.iter().enumerate().map(|(d, &i)| axes[d][i]),
                ));
                // odometer increment, last axis fastest
                let mut d = dim;
                loop {
                    if d == 0 {
                        return Ok(ExtrapolationGrid {
                            strategy: config.strategy,
                            points: pts,
                        });
                    }
                    d -= 1;
                    idx[d] += 1;
                    if idx[d] < per_axis {
                        break;
                    }
                    idx[d] = 0;
                }
            }
        }
        GridKind::Halton => (0..config.n_points)
            .map(|i| scale_to_box(&halton_point(dim, i), &config.bounds))
            .collect(),
    };
    Ok(ExtrapolationGrid {
        strategy: config.strategy,
        points,
    })
}

/// Instantaneous excitation of the extrapolation grid,
/// `(1/N) λ_min(Σ_i ω_i ω_iᵀ / ρ_i)`. The running minimum over a simulation
/// is the grid-richness constant that the convergence analysis needs to stay
/// positive.
pub fn cbar(points: &[BePoint]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let l = points[0].omega.len();
    let mut sum = DMatrix::zeros(l, l);
    for p in points {
        sum += (&p.omega * p.omega.transpose()) / p.rho;
    }
    sym_min_eig(&sum) / points.len() as f64
}

//! Concurrent-learning identifier for the unknown drift dynamics.
//!
//! The drift is modeled as `f(x) ≈ θᵀσ_f(Yᵀ[1, xᵀ]ᵀ)` with fixed inner
//! weights `Y` and unknown output weights `θ`. A state observer drives the
//! instantaneous part of the weight update; a history stack of recorded
//! `(x_j, u_j, ẋ̄_j)` triples with numerically differentiated state
//! derivatives drives the concurrent-learning part, replacing persistent
//! excitation with a rank condition on `Σ_j σ_fj σ_fjᵀ`.
//!
//! The same control law runs from the start of a simulation; while the
//! stack is still below its excitation threshold the convergence guarantees
//! do not yet apply, and the trace flags that phase through the recorded
//! excitation level.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::sym_min_eig;
use crate::model::{ConcatState, MatFn};

/// Scalar nonlinearity applied elementwise to the hidden-layer output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Tanh,
    Gaussian,
}

impl Activation {
    fn apply(self, s: f64) -> f64 {
        match self {
            Activation::Identity => s,
            Activation::Tanh => s.tanh(),
            Activation::Gaussian => (-s * s).exp(),
        }
    }
}

/// Fixed single-layer basis `σ_f(Yᵀ[1, xᵀ]ᵀ)` for the drift model.
///
/// With `bias` set (the default), a constant 1 is prepended so the output
/// dimension is `p + 1`; without it the output dimension is `p`.
#[derive(Clone)]
pub struct IdentifierBasis {
    /// Neuron count (columns of `Y`).
    pub p: usize,
    /// Inner weights, `(n+1) × p`.
    pub y: DMatrix<f64>,
    pub activation: Activation,
    pub bias: bool,
}

impl IdentifierBasis {
    pub fn new(y: DMatrix<f64>, activation: Activation, bias: bool) -> Self {
        Self {
            p: y.ncols(),
            y,
            activation,
            bias,
        }
    }

    /// Pass-through basis: `Y` selects the state so `σ_f = [1, xᵀ]ᵀ` under
    /// the identity activation. Used by exactly parameterized scenarios.
    pub fn passthrough(n: usize, bias: bool) -> Self {
        let mut y = DMatrix::zeros(n + 1, n);
        for i in 0..n {
            y[(i + 1, i)] = 1.0;
        }
        Self::new(y, Activation::Identity, bias)
    }

    /// Output dimension of `σ_f`.
    pub fn dim(&self) -> usize {
        self.p + usize::from(self.bias)
    }

    /// State dimension the basis expects.
    pub fn state_dim(&self) -> usize {
        self.y.nrows() - 1
    }

    /// Evaluate `σ_f(Yᵀ[1, xᵀ]ᵀ)` at a plant state.
    pub fn sigma_f(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.state_dim();
        assert_eq!(x.len(), n, "state dimension mismatch");
        let mut x1 = DVector::zeros(n + 1);
        x1[0] = 1.0;
        x1.rows_mut(1, n).copy_from(x);
        let s = self.y.transpose() * x1;
        let mut out = DVector::zeros(self.dim());
        let offset = usize::from(self.bias);
        if self.bias {
            out[0] = 1.0;
        }
        for j in 0..self.p {
            out[offset + j] = self.activation.apply(s[j]);
        }
        out
    }

    /// `σ_θ(ζ) = σ_f` evaluated at the reconstructed plant state `e + x_d`.
    pub fn sigma_theta(&self, zeta: &ConcatState) -> DVector<f64> {
        self.sigma_f(&zeta.x())
    }

    /// `σ_θd = σ_θ([0; x_d])`, the regressor on the desired trajectory.
    pub fn sigma_theta_d(&self, x_d: &DVector<f64>) -> DVector<f64> {
        self.sigma_f(x_d)
    }
}

/// Observer and weight-adaptation state of the identifier.
#[derive(Clone)]
pub struct IdentifierState {
    pub x_hat: DVector<f64>,
    /// Output-weight estimate, `dim × n`.
    pub theta_hat: DMatrix<f64>,
    /// Observer gain, > 0.
    pub k: f64,
    /// Concurrent-learning gain, > 0.
    pub k_theta: f64,
    /// Diagonal adaptation gain (diagonal entries, all > 0).
    pub gamma_theta: DVector<f64>,
}

impl IdentifierState {
    /// `½ tr(θ̃ᵀ Γ_θ⁻¹ θ̃)` for a given weight error.
    pub fn weight_error_energy(&self, theta_tilde: &DMatrix<f64>) -> f64 {
        let mut acc = 0.0;
        for i in 0..theta_tilde.nrows() {
            let row_sq: f64 = theta_tilde.row(i).iter().map(|v| v * v).sum();
            acc += row_sq / self.gamma_theta[i];
        }
        0.5 * acc
    }
}

/// One recorded experience: state, input, and differentiated derivative,
/// with the regressor `σ_fj` and the known-input term `g(x_j)u_j` frozen at
/// record time (entries never change after insertion).
#[derive(Clone, Debug)]
pub struct StackEntry {
    pub x: DVector<f64>,
    pub u: DVector<f64>,
    pub xdot_bar: DVector<f64>,
    pub sigma: DVector<f64>,
    pub g_u: DVector<f64>,
}

impl StackEntry {
    pub fn new(
        basis: &IdentifierBasis,
        g: &MatFn,
        x: DVector<f64>,
        u: DVector<f64>,
        xdot_bar: DVector<f64>,
    ) -> Self {
        let sigma = basis.sigma_f(&x);
        let g_u = g(&x) * &u;
        Self {
            x,
            u,
            xdot_bar,
            sigma,
            g_u,
        }
    }
}

/// Finite memory of recorded experiences with a minimum-eigenvalue
/// maximizing replacement policy: once full, a candidate replaces an entry
/// only if the swap strictly increases `λ_min(Σ σ_fj σ_fjᵀ)`, so the
/// excitation level never decreases.
#[derive(Clone)]
pub struct HistoryStack {
    pub capacity: usize,
    pub entries: Vec<StackEntry>,
    /// Assumed bound on the numeric-derivative error.
    pub d_bar: f64,
    /// Cached Σ σ_fj σ_fjᵀ over the current entries.
    outer_sum: DMatrix<f64>,
    excitation: f64,
}

impl HistoryStack {
    pub fn new(capacity: usize, basis_dim: usize, d_bar: f64) -> Self {
        Self {
            capacity,
            entries: Vec::with_capacity(capacity),
            d_bar,
            outer_sum: DMatrix::zeros(basis_dim, basis_dim),
            excitation: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    /// `λ_min(Σ_j σ_fj σ_fjᵀ)`; zero for an empty stack.
    pub fn excitation_level(&self) -> f64 {
        self.excitation
    }

    pub fn outer_sum(&self) -> &DMatrix<f64> {
        &self.outer_sum
    }

    /// Offer a candidate experience. Inserts while below capacity; once full,
    /// performs the λ_min-maximizing replacement (or rejects the candidate if
    /// no swap improves the excitation level). Returns true if the stack
    /// changed.
    pub fn offer(&mut self, entry: StackEntry) -> bool {
        let outer_new = &entry.sigma * entry.sigma.transpose();
        if !self.is_full() {
            self.outer_sum += &outer_new;
            self.excitation = sym_min_eig(&self.outer_sum);
            self.entries.push(entry);
            return true;
        }

        // Find the replacement that maximizes λ_min after the swap.
        let mut best: Option<(usize, f64, DMatrix<f64>)> = None;
        for (j, old) in self.entries.iter().enumerate() {
            let candidate_sum = &self.outer_sum - &old.sigma * old.sigma.transpose() + &outer_new;
            let lam = sym_min_eig(&candidate_sum);
            if best.as_ref().is_none_or(|(_, l, _)| lam > *l) {
                best = Some((j, lam, candidate_sum));
            }
        }
        match best {
            Some((j, lam, sum)) if lam > self.excitation => {
                self.entries[j] = entry;
                self.outer_sum = sum;
                self.excitation = lam;
                true
            }
            _ => false,
        }
    }
}

/// Ring buffer of timestamped state samples feeding the central-difference
/// derivative estimate. Window length `w` must be odd so the derivative is
/// taken at the middle sample.
#[derive(Clone)]
pub struct DerivativeBuffer {
    window: usize,
    samples: VecDeque<(f64, DVector<f64>)>,
}

impl DerivativeBuffer {
    pub fn new(window: usize) -> Self {
        assert!(window >= 3 && !window.is_multiple_of(2), "window must be odd and >= 3");
        Self {
            window,
            samples: VecDeque::with_capacity(window),
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn is_full(&self) -> bool {
        self.samples.len() == self.window
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Push a sample; timestamps must be strictly increasing.
    pub fn push(&mut self, t: f64, x: DVector<f64>) {
        if let Some((t_last, _)) = self.samples.back() {
            assert!(t > *t_last, "timestamps must be strictly increasing");
        }
        if self.samples.len() == self.window {
            self.samples.pop_front();
        }
        self.samples.push_back((t, x));
    }

    /// The middle sample of a full window.
    pub fn center(&self) -> Result<(f64, &DVector<f64>)> {
        if !self.is_full() {
            return Err(Error::BufferNotReady {
                have: self.samples.len(),
                need: self.window,
            });
        }
        let (t, x) = &self.samples[self.window / 2];
        Ok((*t, x))
    }

    /// Central finite difference of order `w − 1` at the middle sample.
    /// Exact for polynomials of degree < `w`; requires uniform spacing.
    pub fn numeric_derivative(&self) -> Result<DVector<f64>> {
        if !self.is_full() {
            return Err(Error::BufferNotReady {
                have: self.samples.len(),
                need: self.window,
            });
        }
        let w = self.window;
        let dt = (self.samples[w - 1].0 - self.samples[0].0) / (w - 1) as f64;
        let max_dev = (1..w)
            .map(|i| ((self.samples[i].0 - self.samples[i - 1].0) - dt).abs())
            .fold(0.0, f64::max);
        if max_dev > 1e-9 {
            return Err(Error::NonuniformSpacing { deviation: max_dev });
        }

        let weights = central_diff_weights(w, dt);
        let dim = self.samples[0].1.len();
        let mut deriv = DVector::zeros(dim);
        for (i, (_, x)) in self.samples.iter().enumerate() {
            deriv += x * weights[i];
        }
        Ok(deriv)
    }
}

/// First-derivative stencil weights at the center of `w` uniform samples,
/// from the Vandermonde moment conditions Σ c_i (iΔt − t_c)^k = δ_{k,1} k!.
fn central_diff_weights(w: usize, dt: f64) -> Vec<f64> {
    let center = (w - 1) as f64 / 2.0;
    let mut v = DMatrix::zeros(w, w);
    let mut rhs = DVector::zeros(w);
    for k in 0..w {
        for i in 0..w {
            v[(k, i)] = ((i as f64 - center) * dt).powi(k as i32);
        }
    }
    rhs[1] = 1.0;
    let lu = v.lu();
    let sol = lu.solve(&rhs).expect("stencil system is nonsingular");
    sol.iter().copied().collect()
}

/// Observer dynamics `x̂̇ = θ̂ᵀσ_θ(ζ) + g(x)u + k(x − x̂)`. Only the known
/// control effectiveness is needed, never the drift.
pub fn identifier_xdot(
    basis: &IdentifierBasis,
    state: &IdentifierState,
    g: &MatFn,
    x: &DVector<f64>,
    zeta: &ConcatState,
    u: &DVector<f64>,
) -> DVector<f64> {
    let sigma = basis.sigma_theta(zeta);
    state.theta_hat.transpose() * sigma + g(x) * u + (x - &state.x_hat) * state.k
}

/// Concurrent-learning weight update
/// `θ̂̇ = Γ_θ σ_f(Yᵀx₁) x̃ᵀ + k_θ Γ_θ Σ_j σ_fj (ẋ̄_j − g_j u_j − θ̂ᵀσ_fj)ᵀ`.
///
/// The stack residuals use the known control effectiveness at the recorded
/// states (frozen into each entry); an empty stack contributes nothing.
pub fn theta_dot(
    basis: &IdentifierBasis,
    state: &IdentifierState,
    x: &DVector<f64>,
    stack: &HistoryStack,
) -> DMatrix<f64> {
    let n = x.len();
    let dim = basis.dim();
    let x_tilde = x - &state.x_hat;

    let sigma = basis.sigma_f(x);
    let mut update = &sigma * x_tilde.transpose();

    if !stack.is_empty() {
        let mut cl_sum = DMatrix::zeros(dim, n);
        let mut residual = DVector::zeros(n);
        for entry in &stack.entries {
            residual.copy_from(&entry.xdot_bar);
            residual -= &entry.g_u;
            residual.gemv_tr(-1.0, &state.theta_hat, &entry.sigma, 1.0);
            cl_sum.ger(1.0, &entry.sigma, &residual, 1.0);
        }
        update += cl_sum * state.k_theta;
    }

    // Γ_θ is diagonal: scale rows.
    for i in 0..dim {
        let gi = state.gamma_theta[i];
        for j in 0..n {
            update[(i, j)] *= gi;
        }
    }
    update
}

/// Build a candidate experience from a full derivative buffer and offer it
/// to the stack. `u_center` is the input applied at the buffer's middle
/// sample time. Returns true if the stack changed.
pub fn record_experience(
    stack: &mut HistoryStack,
    basis: &IdentifierBasis,
    g: &MatFn,
    buffer: &DerivativeBuffer,
    u_center: &DVector<f64>,
) -> Result<bool> {
    let xdot_bar = buffer.numeric_derivative()?;
    let (_, x_center) = buffer.center()?;
    Ok(stack.offer(StackEntry::new(
        basis,
        g,
        x_center.clone(),
        u_center.clone(),
        xdot_bar,
    )))
}

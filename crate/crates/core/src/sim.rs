//! Closed-loop simulation: plant, identifier, critic, actor, least-squares
//! gain, and desired trajectory integrated as one ODE with classical
//! fixed-step RK4.
//!
//! History-stack recording and derivative-buffer pushes are discrete
//! per-step events, applied after each integration step, so the right-hand
//! side is time invariant within a step. The Γ block is symmetrized after
//! every step and projected back onto ‖Γ‖ ≤ Γ̄ whenever a step overshoots
//! the saturation boundary.

use nalgebra::{DMatrix, DVector};

use crate::adp::{
    actor_dot, cbar, critic_dot, gamma_dot, ActorState, AdpGains, ControllerContext, CriticState,
    ExtrapolationGrid, GridEvals, ValueBasis,
};
use crate::error::{Error, Result};
use crate::linalg::{sym_min_eig, sym_spectral_norm, symmetrize};
use crate::model::{concat_dynamics, ConcatState, CostSpec, DesiredTrajectory, SystemModel};
use crate::oracle::LqSpec;
use crate::sysid::{
    identifier_xdot, record_experience, theta_dot, DerivativeBuffer, HistoryStack,
    IdentifierBasis, IdentifierState,
};

/// Identifier loop configuration: gains plus the history-stack and
/// derivative-buffer bookkeeping.
#[derive(Clone, Debug)]
pub struct IdentifierGains {
    /// Observer gain k.
    pub k: f64,
    /// Concurrent-learning gain k_θ.
    pub k_theta: f64,
    /// Diagonal entries of Γ_θ.
    pub gamma_theta: DVector<f64>,
    /// History-stack capacity M.
    pub capacity: usize,
    /// Derivative window w (odd).
    pub window: usize,
    /// Offer a recorded experience every this many steps.
    pub record_interval: usize,
    /// Excitation level treated as "stack informative".
    pub excitation_threshold: f64,
    /// Assumed derivative-error bound for the recorded stack.
    pub d_bar: f64,
}

/// Initial conditions of the coupled state.
#[derive(Clone, Debug)]
pub struct InitState {
    pub x0: DVector<f64>,
    pub x_hat0: DVector<f64>,
    pub theta_hat0: DMatrix<f64>,
    pub w_c0: DVector<f64>,
    pub w_a0: DVector<f64>,
    pub gamma0: DMatrix<f64>,
}

/// A fully assembled closed-loop problem.
#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub model: SystemModel,
    pub desired: DesiredTrajectory,
    pub cost: CostSpec,
    pub id_basis: IdentifierBasis,
    pub id_gains: IdentifierGains,
    pub value_basis: ValueBasis,
    pub adp_gains: AdpGains,
    pub grid: ExtrapolationGrid,
    pub init: InitState,
    /// The decoupled linear error dynamics, when the scenario is LQ under
    /// the matching condition; enables the Riccati ground truth.
    pub lq: Option<LqSpec>,
    pub seed: u64,
}

impl Scenario {
    pub fn n(&self) -> usize {
        self.model.n
    }

    pub fn m(&self) -> usize {
        self.model.m
    }

    /// Basis output dimension of the identifier.
    pub fn q_dim(&self) -> usize {
        self.id_basis.dim()
    }

    pub fn l_dim(&self) -> usize {
        self.value_basis.l
    }

    /// The controller-visible side of the problem (no drift access).
    pub fn controller_context(&self) -> ControllerContext {
        ControllerContext {
            n: self.model.n,
            m: self.model.m,
            g: self.model.g.clone(),
            h_d: self.desired.h_d.clone(),
            cost: self.cost.clone(),
            value_basis: self.value_basis.clone(),
            id_basis: self.id_basis.clone(),
        }
    }

    fn identifier_state(&self, x_hat: DVector<f64>, theta_hat: DMatrix<f64>) -> IdentifierState {
        IdentifierState {
            x_hat,
            theta_hat,
            k: self.id_gains.k,
            k_theta: self.id_gains.k_theta,
            gamma_theta: self.id_gains.gamma_theta.clone(),
        }
    }
}

/// The coupled simulation state, packed as
/// `[x, x̂, x_d, vec_row(θ̂), Ŵ_c, Ŵ_a, vec_row(Γ)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedLoopState {
    pub x: DVector<f64>,
    pub x_hat: DVector<f64>,
    pub x_d: DVector<f64>,
    pub theta_hat: DMatrix<f64>,
    pub w_c: DVector<f64>,
    pub w_a: DVector<f64>,
    pub gamma: DMatrix<f64>,
}

impl ClosedLoopState {
    pub fn packed_dim(n: usize, q: usize, l: usize) -> usize {
        3 * n + q * n + 2 * l + l * l
    }

    pub fn pack(&self) -> DVector<f64> {
        let n = self.x.len();
        let q = self.theta_hat.nrows();
        let l = self.w_c.len();
        let mut z = DVector::zeros(Self::packed_dim(n, q, l));
        let mut at = 0;
        z.rows_mut(at, n).copy_from(&self.x);
        at += n;
        z.rows_mut(at, n).copy_from(&self.x_hat);
        at += n;
        z.rows_mut(at, n).copy_from(&self.x_d);
        at += n;
        for i in 0..q {
            for j in 0..n {
                z[at] = self.theta_hat[(i, j)];
                at += 1;
            }
        }
        z.rows_mut(at, l).copy_from(&self.w_c);
        at += l;
        z.rows_mut(at, l).copy_from(&self.w_a);
        at += l;
        for i in 0..l {
            for j in 0..l {
                z[at] = self.gamma[(i, j)];
                at += 1;
            }
        }
        z
    }

    pub fn unpack(z: &DVector<f64>, n: usize, q: usize, l: usize) -> Self {
        assert_eq!(z.len(), Self::packed_dim(n, q, l), "packed dimension mismatch");
        let mut at = 0;
        let x = z.rows(at, n).into_owned();
        at += n;
        let x_hat = z.rows(at, n).into_owned();
        at += n;
        let x_d = z.rows(at, n).into_owned();
        at += n;
        let mut theta_hat = DMatrix::zeros(q, n);
        for i in 0..q {
            for j in 0..n {
                theta_hat[(i, j)] = z[at];
                at += 1;
            }
        }
        let w_c = z.rows(at, l).into_owned();
        at += l;
        let w_a = z.rows(at, l).into_owned();
        at += l;
        let mut gamma = DMatrix::zeros(l, l);
        for i in 0..l {
            for j in 0..l {
                gamma[(i, j)] = z[at];
                at += 1;
            }
        }
        Self {
            x,
            x_hat,
            x_d,
            theta_hat,
            w_c,
            w_a,
            gamma,
        }
    }

    pub fn initial(scenario: &Scenario) -> Self {
        Self {
            x: scenario.init.x0.clone(),
            x_hat: scenario.init.x_hat0.clone(),
            x_d: scenario.desired.x_d0.clone(),
            theta_hat: scenario.init.theta_hat0.clone(),
            w_c: scenario.init.w_c0.clone(),
            w_a: scenario.init.w_a0.clone(),
            gamma: scenario.init.gamma0.clone(),
        }
    }
}

const STATE_NORM_GUARD: f64 = 1e9;

/// ⌊T/dt⌋ robust to the binary representation of the quotient.
fn step_count(t_final: f64, dt: f64) -> usize {
    (t_final / dt + 1e-9).floor() as usize
}

fn guard_finite(t: f64, z: &DVector<f64>, what: &str) -> Result<()> {
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalDivergence {
            t,
            reason: format!("non-finite value in {what}"),
        });
    }
    if z.norm() > STATE_NORM_GUARD {
        return Err(Error::NumericalDivergence {
            t,
            reason: format!("{what} norm exceeds {STATE_NORM_GUARD:.0e}"),
        });
    }
    Ok(())
}

/// Time derivative of the packed closed-loop state. The history stack is a
/// frozen snapshot; it mutates between steps, never within one.
pub fn rhs(
    t: f64,
    z: &DVector<f64>,
    scenario: &Scenario,
    ctx: &ControllerContext,
    stack: &HistoryStack,
) -> Result<DVector<f64>> {
    let (n, q, l) = (scenario.n(), scenario.q_dim(), scenario.l_dim());
    let state = ClosedLoopState::unpack(z, n, q, l);
    let zeta = ConcatState::new(&state.x - &state.x_d, state.x_d.clone());

    let critic = CriticState {
        w_c_hat: state.w_c.clone(),
        gamma: state.gamma.clone(),
    };
    let actor = ActorState {
        w_a_hat: state.w_a.clone(),
    };

    let u = ctx.applied_control(&zeta, &actor, &state.theta_hat)?;
    let evals = ctx.evaluate_grid(
        &zeta,
        &scenario.grid,
        &state.theta_hat,
        &critic,
        &actor,
        &scenario.adp_gains,
    )?;

    let id_state = scenario.identifier_state(state.x_hat.clone(), state.theta_hat.clone());

    let deriv = ClosedLoopState {
        x: scenario.model.f_at(&state.x) + scenario.model.g_at(&state.x) * &u,
        x_hat: identifier_xdot(&scenario.id_basis, &id_state, &ctx.g, &state.x, &zeta, &u),
        x_d: scenario.desired.h_d_at(&state.x_d),
        theta_hat: theta_dot(&scenario.id_basis, &id_state, &state.x, stack),
        w_c: critic_dot(&scenario.adp_gains, &critic, &evals),
        w_a: actor_dot(&scenario.adp_gains, &actor, &critic, &evals),
        gamma: gamma_dot(
            &scenario.adp_gains,
            &critic,
            &evals.current.omega,
            evals.current.rho,
        ),
    };
    let dz = deriv.pack();
    guard_finite(t, &dz, "state derivative")?;
    Ok(dz)
}

/// One classical RK4 step of a generic first-order system.
pub fn rk4_step<F>(f: &mut F, t: f64, y: &DVector<f64>, dt: f64) -> Result<DVector<f64>>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * dt, &(y + &k1 * (0.5 * dt)))?;
    let k3 = f(t + 0.5 * dt, &(y + &k2 * (0.5 * dt)))?;
    let k4 = f(t + dt, &(y + &k3 * dt))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// One closed-loop step: RK4 against a frozen stack snapshot, then Γ
/// symmetrization and saturation projection.
pub fn step(
    t: f64,
    z: &DVector<f64>,
    dt: f64,
    scenario: &Scenario,
    ctx: &ControllerContext,
    stack: &HistoryStack,
) -> Result<DVector<f64>> {
    assert!(dt > 0.0, "dt must be positive");
    let mut f = |t: f64, y: &DVector<f64>| rhs(t, y, scenario, ctx, stack);
    let z_next = rk4_step(&mut f, t, z, dt)?;
    guard_finite(t + dt, &z_next, "state")?;

    let (n, q, l) = (scenario.n(), scenario.q_dim(), scenario.l_dim());
    let mut state = ClosedLoopState::unpack(&z_next, n, q, l);
    state.gamma = symmetrize(&state.gamma);
    let norm = sym_spectral_norm(&state.gamma);
    if norm > scenario.adp_gains.gamma_bar {
        state.gamma *= scenario.adp_gains.gamma_bar / norm;
    }
    Ok(state.pack())
}

/// One retained sample of the closed-loop trajectory.
#[derive(Clone, Debug)]
pub struct TraceRow {
    pub t: f64,
    pub state: ClosedLoopState,
    pub u: DVector<f64>,
    pub mu_hat: DVector<f64>,
    pub delta_t: f64,
    pub mean_abs_delta_i: f64,
    pub excitation: f64,
    pub cbar: f64,
    pub gamma_norm: f64,
    pub gamma_min_eig: f64,
    pub v0: f64,
    pub e_norm: f64,
}

/// Uniformly sampled record of a run.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub dt: f64,
}

/// A finished (or aborted) simulation: the trace, the final history stack
/// (for post-hoc rank audits), and the divergence that ended the run early,
/// if any.
pub struct RunOutcome {
    pub trace: Trace,
    pub stack: HistoryStack,
    pub divergence: Option<Error>,
}

fn diagnostics_row(
    t: f64,
    state: &ClosedLoopState,
    scenario: &Scenario,
    ctx: &ControllerContext,
    stack: &HistoryStack,
) -> Result<TraceRow> {
    let zeta = ConcatState::new(&state.x - &state.x_d, state.x_d.clone());
    let critic = CriticState {
        w_c_hat: state.w_c.clone(),
        gamma: state.gamma.clone(),
    };
    let actor = ActorState {
        w_a_hat: state.w_a.clone(),
    };
    let mu_hat = ctx.policy(&zeta, &actor);
    let u = ctx.applied_control(&zeta, &actor, &state.theta_hat)?;
    let evals: GridEvals = ctx.evaluate_grid(
        &zeta,
        &scenario.grid,
        &state.theta_hat,
        &critic,
        &actor,
        &scenario.adp_gains,
    )?;
    let mean_abs = if evals.points.is_empty() {
        0.0
    } else {
        evals.points.iter().map(|p| p.delta.abs()).sum::<f64>() / evals.points.len() as f64
    };

    let x_tilde = &state.x - &state.x_hat;
    let mut v0 = 0.5 * x_tilde.norm_squared();
    if let Some(theta_true) = &scenario.model.true_theta {
        let theta_tilde = theta_true - &state.theta_hat;
        let id_state = scenario.identifier_state(state.x_hat.clone(), state.theta_hat.clone());
        v0 += id_state.weight_error_energy(&theta_tilde);
    }

    Ok(TraceRow {
        t,
        e_norm: zeta.e.norm(),
        u,
        mu_hat,
        delta_t: evals.current.delta,
        mean_abs_delta_i: mean_abs,
        excitation: stack.excitation_level(),
        cbar: cbar(&evals.points),
        gamma_norm: sym_spectral_norm(&state.gamma),
        gamma_min_eig: sym_min_eig(&state.gamma),
        v0,
        state: state.clone(),
    })
}

/// Run the closed loop for `⌊T/dt⌋` steps, recording every step. On
/// divergence the partial trace up to the last valid row is returned
/// together with the error.
pub fn run(scenario: &Scenario, t_final: f64, dt: f64) -> Result<RunOutcome> {
    if t_final <= 0.0 || dt <= 0.0 || t_final.is_nan() || dt.is_nan() {
        return Err(Error::ConfigError("T and dt must be positive".to_string()));
    }
    let ctx = scenario.controller_context();
    let steps = step_count(t_final, dt);

    let mut stack = HistoryStack::new(
        scenario.id_gains.capacity,
        scenario.q_dim(),
        scenario.id_gains.d_bar,
    );
    let mut buffer = DerivativeBuffer::new(scenario.id_gains.window);
    let mut u_hist: Vec<DVector<f64>> = Vec::new();

    let mut z = ClosedLoopState::initial(scenario).pack();
    let mut trace = Trace {
        rows: Vec::with_capacity(steps + 1),
        dt,
    };

    let record_events = |t: f64,
                             state: &ClosedLoopState,
                             row_u: &DVector<f64>,
                             step_index: usize,
                             stack: &mut HistoryStack,
                             buffer: &mut DerivativeBuffer,
                             u_hist: &mut Vec<DVector<f64>>|
     -> Result<()> {
        buffer.push(t, state.x.clone());
        u_hist.push(row_u.clone());
        if u_hist.len() > scenario.id_gains.window {
            u_hist.remove(0);
        }
        if buffer.is_full() && step_index.is_multiple_of(scenario.id_gains.record_interval) {
            let u_center = u_hist[u_hist.len() - 1 - scenario.id_gains.window / 2].clone();
            record_experience(stack, &scenario.id_basis, &scenario.model.g, buffer, &u_center)?;
        }
        Ok(())
    };

    // initial row + initial discrete events
    let state0 = ClosedLoopState::initial(scenario);
    let row0 = diagnostics_row(0.0, &state0, scenario, &ctx, &stack)?;
    let u0 = row0.u.clone();
    trace.rows.push(row0);
    record_events(0.0, &state0, &u0, 0, &mut stack, &mut buffer, &mut u_hist)?;

    for i in 0..steps {
        let t = i as f64 * dt;
        let z_next = match step(t, &z, dt, scenario, &ctx, &stack) {
            Ok(z_next) => z_next,
            Err(err) => {
                return Ok(RunOutcome {
                    trace,
                    stack,
                    divergence: Some(err),
                })
            }
        };
        z = z_next;
        let t_next = (i + 1) as f64 * dt;
        let state = ClosedLoopState::unpack(&z, scenario.n(), scenario.q_dim(), scenario.l_dim());
        let row = match diagnostics_row(t_next, &state, scenario, &ctx, &stack) {
            Ok(row) => row,
            Err(err) => {
                return Ok(RunOutcome {
                    trace,
                    stack,
                    divergence: Some(err),
                })
            }
        };
        let row_u = row.u.clone();
        trace.rows.push(row);
        record_events(t_next, &state, &row_u, i + 1, &mut stack, &mut buffer, &mut u_hist)?;
    }

    Ok(RunOutcome {
        trace,
        stack,
        divergence: None,
    })
}

/// Root-mean-square distance between the error trajectories of the applied
/// control law and of the reformulated dynamics driven by the equivalent
/// control error, co-integrated with shared weight trajectories.
pub struct EquivalenceOutcome {
    pub rms: f64,
    pub max_abs: f64,
}

/// Integrate the closed loop together with an auxiliary copy of the
/// concatenated state driven by `ζ̇ = F(ζ) + G(ζ)μ` under the equivalent
/// control error. Both copies see identical weight trajectories, so any gap
/// between the error blocks is purely the difference between the two control
/// formulations; under exact parameterization it is zero.
pub fn run_equivalence(scenario: &Scenario, t_final: f64, dt: f64) -> Result<EquivalenceOutcome> {
    let theta_true = scenario.model.true_theta.clone().ok_or_else(|| {
        Error::ConfigError("equivalence check needs an exactly parameterized scenario".to_string())
    })?;
    let ctx = scenario.controller_context();
    let (n, q, l) = (scenario.n(), scenario.q_dim(), scenario.l_dim());
    let base_dim = ClosedLoopState::packed_dim(n, q, l);

    let mut stack = HistoryStack::new(
        scenario.id_gains.capacity,
        scenario.q_dim(),
        scenario.id_gains.d_bar,
    );
    let mut buffer = DerivativeBuffer::new(scenario.id_gains.window);
    let mut u_hist: Vec<DVector<f64>> = Vec::new();

    let state0 = ClosedLoopState::initial(scenario);
    let mut z_aug = DVector::zeros(base_dim + 2 * n);
    z_aug.rows_mut(0, base_dim).copy_from(&state0.pack());
    z_aug
        .rows_mut(base_dim, n)
        .copy_from(&(&state0.x - &state0.x_d));
    z_aug.rows_mut(base_dim + n, n).copy_from(&state0.x_d);

    let steps = step_count(t_final, dt);
    let mut sum_sq = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut count = 0usize;

    for i in 0..=steps {
        let t = i as f64 * dt;
        let state = ClosedLoopState::unpack(&z_aug.rows(0, base_dim).into_owned(), n, q, l);
        let e_alt = z_aug.rows(base_dim, n).into_owned();
        let gap = (&state.x - &state.x_d - &e_alt).norm();
        sum_sq += gap * gap;
        max_abs = max_abs.max(gap);
        count += 1;

        // discrete events as in `run`
        let zeta = ConcatState::new(&state.x - &state.x_d, state.x_d.clone());
        let actor = ActorState {
            w_a_hat: state.w_a.clone(),
        };
        let u = ctx.applied_control(&zeta, &actor, &state.theta_hat)?;
        buffer.push(t, state.x.clone());
        u_hist.push(u);
        if u_hist.len() > scenario.id_gains.window {
            u_hist.remove(0);
        }
        if buffer.is_full() && i.is_multiple_of(scenario.id_gains.record_interval) {
            let u_center = u_hist[u_hist.len() - 1 - scenario.id_gains.window / 2].clone();
            record_experience(&mut stack, &scenario.id_basis, &scenario.model.g, &buffer, &u_center)?;
        }

        if i == steps {
            break;
        }

        let stack_ref = &stack;
        let mut f_aug = |t: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
            let base = y.rows(0, base_dim).into_owned();
            let mut dz = DVector::zeros(base_dim + 2 * n);
            dz.rows_mut(0, base_dim)
                .copy_from(&rhs(t, &base, scenario, &ctx, stack_ref)?);

            let st = ClosedLoopState::unpack(&base, n, q, l);
            let zeta_alt = ConcatState::new(
                y.rows(base_dim, n).into_owned(),
                y.rows(base_dim + n, n).into_owned(),
            );
            let actor = ActorState {
                w_a_hat: st.w_a.clone(),
            };
            let mu = ctx.mu_equivalent(&zeta_alt, &actor, &theta_true, &st.theta_hat)?;
            let (f_cat, g_cat) = concat_dynamics(&scenario.model, &scenario.desired, &zeta_alt)?;
            dz.rows_mut(base_dim, 2 * n).copy_from(&(f_cat + g_cat * mu));
            Ok(dz)
        };
        z_aug = rk4_step(&mut f_aug, t, &z_aug, dt)?;
        guard_finite(t + dt, &z_aug, "augmented state")?;

        // post-step Γ handling on the base block
        let mut st = ClosedLoopState::unpack(&z_aug.rows(0, base_dim).into_owned(), n, q, l);
        st.gamma = symmetrize(&st.gamma);
        let norm = sym_spectral_norm(&st.gamma);
        if norm > scenario.adp_gains.gamma_bar {
            st.gamma *= scenario.adp_gains.gamma_bar / norm;
        }
        z_aug.rows_mut(0, base_dim).copy_from(&st.pack());
    }

    Ok(EquivalenceOutcome {
        rms: (sum_sq / count as f64).sqrt(),
        max_abs,
    })
}

/// Summary statistics of a finished run.
#[derive(Clone, Debug, serde::Serialize)]
pub struct Metrics {
    pub rows: usize,
    pub t_final: f64,
    /// RMS of ‖e‖ over the last 20% of the trace.
    pub tail_rms_e: f64,
    pub terminal_e_norm: f64,
    /// ‖θ − θ̂(T)‖_F when the true weights are known.
    pub terminal_theta_err: Option<f64>,
    /// ‖Ŵ_c(T) − W‖ and ‖Ŵ_a(T) − W‖ when the oracle weights are known.
    pub terminal_wc_err: Option<f64>,
    pub terminal_wa_err: Option<f64>,
    pub max_gamma_norm: f64,
    pub min_gamma_eig: f64,
    pub min_cbar: f64,
    /// Running minimum of cbar over the post-transient window (t ≥ 0.2 T).
    pub min_cbar_post_transient: f64,
    /// First time the stack excitation reached the configured threshold.
    pub excitation_time: Option<f64>,
    pub final_excitation: f64,
    pub max_abs_delta_tail: f64,
}

/// Extract metrics from a trace. `w_ideal` supplies the oracle weights when
/// available.
pub fn metrics(
    trace: &Trace,
    scenario: &Scenario,
    w_ideal: Option<&DVector<f64>>,
) -> Result<Metrics> {
    if trace.rows.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let rows = &trace.rows;
    let last = rows.last().expect("nonempty");
    let tail_start = rows.len() - (rows.len() as f64 * 0.2).ceil().max(1.0) as usize;
    let tail = &rows[tail_start..];

    let tail_rms_e =
        (tail.iter().map(|r| r.e_norm * r.e_norm).sum::<f64>() / tail.len() as f64).sqrt();
    let t_transient = 0.2 * last.t;

    let terminal_theta_err = scenario
        .model
        .true_theta
        .as_ref()
        .map(|theta| (theta - &last.state.theta_hat).norm());
    let terminal_wc_err = w_ideal.map(|w| (w - &last.state.w_c).norm());
    let terminal_wa_err = w_ideal.map(|w| (w - &last.state.w_a).norm());

    Ok(Metrics {
        rows: rows.len(),
        t_final: last.t,
        tail_rms_e,
        terminal_e_norm: last.e_norm,
        terminal_theta_err,
        terminal_wc_err,
        terminal_wa_err,
        max_gamma_norm: rows.iter().map(|r| r.gamma_norm).fold(0.0, f64::max),
        min_gamma_eig: rows
            .iter()
            .map(|r| r.gamma_min_eig)
            .fold(f64::INFINITY, f64::min),
        min_cbar: rows.iter().map(|r| r.cbar).fold(f64::INFINITY, f64::min),
        min_cbar_post_transient: rows
            .iter()
            .filter(|r| r.t >= t_transient)
            .map(|r| r.cbar)
            .fold(f64::INFINITY, f64::min),
        excitation_time: rows
            .iter()
            .find(|r| r.excitation >= scenario.id_gains.excitation_threshold)
            .map(|r| r.t),
        final_excitation: last.excitation,
        max_abs_delta_tail: tail.iter().map(|r| r.delta_t.abs()).fold(0.0, f64::max),
    })
}

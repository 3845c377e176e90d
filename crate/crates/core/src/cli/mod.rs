//! Command-line front end: config parsing, scenario registry, subcommand
//! dispatch, and trace/report serialization.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical divergence,
//! 3 hard gain-condition failure.

pub mod config;
pub mod registry;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use nalgebra::DVector;

use crate::adp::ValueBasisKind;
use crate::error::{Error, Result};
use crate::gains::{
    check_sufficient_conditions, estimate_iota, estimate_sup_norms, heuristic_set_size_check,
    ChiBounds, GainAssumptions, LyapunovSurrogate,
};
use crate::model::ConcatState;
use crate::oracle::{are_residual, ideal_quadratic_weights, solve_are};
use crate::sim::{self, Scenario, Trace};
use config::{parse_config, EffectiveConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DIVERGENCE: i32 = 2;
pub const EXIT_GAIN_FAIL: i32 = 3;

/// Environment variable overriding the configured RNG seed.
pub const SEED_ENV: &str = "ADPTRACK_SEED";

#[derive(Parser)]
#[command(
    name = "adptrack",
    about = "Online approximate optimal tracking with concurrent-learning identification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a closed-loop simulation and write trace.csv / metrics.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to the config's output_dir, then "out").
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the sufficient gain conditions and the ultimate-bound
    /// constant for a scenario.
    CheckGains {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the Riccati ground truth (P, K, W) for an LQ scenario.
    Oracle {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run built-in numerical sanity checks.
    Selftest,
}

/// Parse arguments and run the requested subcommand, returning the process
/// exit code.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            let _ = err.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Simulate { config, out } => cmd_simulate(&config, out.as_deref()),
        Command::CheckGains { config } => cmd_check_gains(&config),
        Command::Oracle { config } => cmd_oracle(&config),
        Command::Selftest => cmd_selftest(),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::NumericalDivergence { .. } => EXIT_DIVERGENCE,
                _ => EXIT_CONFIG,
            }
        }
    }
}

fn load(path: &Path) -> Result<(EffectiveConfig, Option<String>)> {
    let (mut cfg, out) = parse_config(path)?;
    if let Ok(seed) = std::env::var(SEED_ENV) {
        let seed: u64 = seed.parse().map_err(|_| {
            Error::ConfigError(format!("{SEED_ENV} must be an unsigned integer (got `{seed}`)"))
        })?;
        cfg.sim.seed = seed;
    }
    Ok((cfg, out))
}

/// Oracle weights for the scenario's value basis, when an LQ ground truth
/// exists and the basis is the quadratic error family.
pub fn oracle_weights(scenario: &Scenario) -> Option<DVector<f64>> {
    let lq = scenario.lq.as_ref()?;
    if scenario.value_basis.kind != ValueBasisKind::ErrorQuadratic {
        return None;
    }
    let sol = solve_are(lq).ok()?;
    ideal_quadratic_weights(&sol.p, &scenario.value_basis).ok()
}

fn cmd_simulate(config_path: &Path, out_flag: Option<&Path>) -> Result<i32> {
    let (cfg, cfg_out) = load(config_path)?;
    let scenario = registry::build_scenario(&cfg)?;
    let out_dir = out_flag
        .map(Path::to_path_buf)
        .or_else(|| cfg_out.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out_dir)?;

    fs::write(
        out_dir.join("effective_config.json"),
        serde_json::to_string_pretty(&cfg)? + "\n",
    )?;

    let outcome = sim::run(&scenario, cfg.sim.t_final, cfg.sim.dt)?;
    write_trace_csv(&out_dir.join("trace.csv"), &outcome.trace, &scenario)?;

    let w_ideal = oracle_weights(&scenario);
    let metrics = sim::metrics(&outcome.trace, &scenario, w_ideal.as_ref())?;
    fs::write(
        out_dir.join("metrics.json"),
        serde_json::to_string_pretty(&metrics)? + "\n",
    )?;
    fs::write(out_dir.join("stack.json"), stack_dump(&outcome.stack)? + "\n")?;

    println!(
        "simulated `{}` for {:.3} s ({} rows) -> {}",
        scenario.name,
        metrics.t_final,
        metrics.rows,
        out_dir.display()
    );
    println!("  tail RMS |e|      : {:.6e}", metrics.tail_rms_e);
    if let Some(err) = metrics.terminal_theta_err {
        println!("  terminal |theta~| : {err:.6e}");
    }
    if let (Some(wc), Some(wa)) = (metrics.terminal_wc_err, metrics.terminal_wa_err) {
        println!("  terminal |Wc - W| : {wc:.6e}");
        println!("  terminal |Wa - W| : {wa:.6e}");
    }
    println!("  max |Gamma|       : {:.6e}", metrics.max_gamma_norm);
    println!("  min cbar (post-transient): {:.6e}", metrics.min_cbar_post_transient);
    match metrics.excitation_time {
        Some(t) => println!("  excitation >= {:.3} at t = {t:.3} s", scenario.id_gains.excitation_threshold),
        None => println!("  excitation threshold never reached"),
    }

    if let Some(err) = outcome.divergence {
        eprintln!("divergence: {err}");
        return Ok(EXIT_DIVERGENCE);
    }
    Ok(EXIT_OK)
}

fn cmd_check_gains(config_path: &Path) -> Result<i32> {
    let (cfg, _) = load(config_path)?;
    let scenario = registry::build_scenario(&cfg)?;
    let ctx = scenario.controller_context();

    let w_ideal = oracle_weights(&scenario).ok_or_else(|| {
        Error::ConfigError(
            "check-gains needs an LQ scenario with the quadratic error basis (no oracle weights available)"
                .to_string(),
        )
    })?;

    let gc = &cfg.gains_check;
    let chi = ChiBounds {
        e_bounds: gc.chi_e_bounds.clone(),
        x_d_bounds: gc.chi_xd_bounds.clone(),
    };

    // Grid-excitation floor: configured, or evaluated at the oracle weights
    // on the initial desired state.
    let c_lb = match gc.c_lb {
        Some(c) => c,
        None => {
            let theta_true = scenario.model.true_theta.clone().ok_or_else(|| {
                Error::ConfigError(
                    "gains_check.c_lb must be set for scenarios without true weights".to_string(),
                )
            })?;
            let critic = crate::adp::CriticState {
                w_c_hat: w_ideal.clone(),
                gamma: scenario.init.gamma0.clone(),
            };
            let actor = crate::adp::ActorState {
                w_a_hat: w_ideal.clone(),
            };
            let zeta0 = ConcatState::new(
                DVector::zeros(scenario.n()),
                scenario.desired.x_d0.clone(),
            );
            let evals = ctx.evaluate_grid(
                &zeta0,
                &scenario.grid,
                &theta_true,
                &critic,
                &actor,
                &scenario.adp_gains,
            )?;
            crate::adp::cbar(&evals.points)
        }
    };

    let assumptions = GainAssumptions {
        gamma_lb: gc.gamma_lb,
        sigma_theta_lb: gc.sigma_theta_lb,
        c_lb,
        rho_ball: gc.rho_ball,
        stack_capacity: scenario.id_gains.capacity,
    };
    let est = estimate_sup_norms(&ctx, &w_ideal, &chi, gc.n_samples, &gc.epsilon, &assumptions)?;
    let report = check_sufficient_conditions(
        &scenario.adp_gains,
        &est,
        scenario.id_gains.k_theta,
        gc.sigma_theta_lb,
    );
    let iota = estimate_iota(
        &scenario.adp_gains,
        &est,
        scenario.id_gains.k,
        scenario.id_gains.k_theta,
        gc.sigma_theta_lb,
    );

    let lq = scenario.lq.as_ref().expect("oracle weights imply LQ");
    let sol = solve_are(lq)?;
    let p_eigs = sol.p.clone().symmetric_eigen().eigenvalues;
    let lyap = LyapunovSurrogate {
        value_min: p_eigs.iter().copied().fold(f64::INFINITY, f64::min),
        value_max: p_eigs.iter().copied().fold(0.0, f64::max),
        q_lb: cfg.cost.q_diag.iter().copied().fold(f64::INFINITY, f64::min),
        k: scenario.id_gains.k,
        gamma_theta_min: cfg.identifier.gamma_theta,
        gamma_theta_max: cfg.identifier.gamma_theta,
    };
    let set_size = heuristic_set_size_check(
        &scenario.adp_gains,
        &est,
        scenario.id_gains.k_theta,
        gc.sigma_theta_lb,
        iota,
        &lyap,
    );

    println!("gain conditions for `{}`", scenario.name);
    println!(
        "  assumptions: sigma_theta_lb = {:.4e}, gamma_lb = {:.4e}, c_lb = {:.4e}, {} chi samples",
        gc.sigma_theta_lb, gc.gamma_lb, c_lb, est.n_samples
    );
    let fmt = |c: &crate::gains::ConditionResult, name: &str, sense: &str| {
        println!(
            "  {name}: lhs {:.6e} {sense} rhs {:.6e}  {}",
            c.lhs,
            c.rhs,
            if c.pass { "PASS" } else { "FAIL" }
        );
    };
    fmt(&report.critic_condition, "critic excitation condition   ", ">");
    fmt(&report.actor_condition, "actor gain condition          ", ">");
    println!("  ultimate-bound constant iota  : {iota:.6e}");
    fmt(&set_size, "set-size condition (heuristic)", "<");

    if report.all_hard_pass {
        println!("result: all hard conditions hold");
        Ok(EXIT_OK)
    } else {
        println!("result: hard condition failed");
        Ok(EXIT_GAIN_FAIL)
    }
}

fn cmd_oracle(config_path: &Path) -> Result<i32> {
    let (cfg, _) = load(config_path)?;
    let scenario = registry::build_scenario(&cfg)?;
    let lq = scenario.lq.as_ref().ok_or_else(|| {
        Error::ConfigError(format!(
            "scenario `{}` has no linear-quadratic ground truth",
            scenario.name
        ))
    })?;
    let sol = solve_are(lq)?;
    println!("Riccati ground truth for `{}`", scenario.name);
    print_matrix("P", &sol.p);
    print_matrix("K", &sol.k);
    if scenario.value_basis.kind == ValueBasisKind::ErrorQuadratic {
        let w = ideal_quadratic_weights(&sol.p, &scenario.value_basis)?;
        let entries: Vec<String> = w.iter().map(|v| format!("{v:.12e}")).collect();
        println!("W = [{}]", entries.join(", "));
    }
    println!("residual = {:.3e}", are_residual(lq, &sol.p));
    Ok(EXIT_OK)
}

fn print_matrix(name: &str, m: &nalgebra::DMatrix<f64>) {
    println!("{name} =");
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.12e}", m[(i, j)])).collect();
        println!("  [{}]", row.join(", "));
    }
}

fn cmd_selftest() -> Result<i32> {
    let mut all_ok = true;
    let mut check = |name: &str, ok: bool, detail: String| {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        all_ok &= ok;
    };

    // pseudoinverse is a left inverse
    {
        let g = nalgebra::DMatrix::from_column_slice(3, 2, &[1.0, 0.5, -0.2, 0.1, 2.0, 0.7]);
        let pinv = crate::model::pseudoinverse(&g)?;
        let err = (pinv * &g - nalgebra::DMatrix::<f64>::identity(2, 2)).norm();
        check("pseudoinverse left-inverse", err < 1e-10, format!("residual {err:.3e}"));
    }

    // RK4 order on the scalar decay problem
    {
        let integrate = |dt: f64| -> Result<f64> {
            let mut f = |_t: f64, y: &DVector<f64>| Ok(-y.clone());
            let mut y = DVector::from_vec(vec![1.0]);
            let steps = (1.0 / dt).round() as usize;
            for i in 0..steps {
                y = sim::rk4_step(&mut f, i as f64 * dt, &y, dt)?;
            }
            Ok((y[0] - (-1.0f64).exp()).abs())
        };
        let ratio = integrate(0.02)? / integrate(0.01)?;
        check(
            "integrator order (Richardson ratio)",
            (12.0..=20.0).contains(&ratio),
            format!("ratio {ratio:.2}"),
        );
    }

    // Riccati residual on the registered LQ scenarios
    for name in ["scalar_lq", "twostate_lq"] {
        let cfg = registry::baseline(name)?;
        let sc = registry::build_scenario(&cfg)?;
        let lq = sc.lq.as_ref().expect("LQ scenario");
        let sol = solve_are(lq)?;
        let res = are_residual(lq, &sol.p);
        check(
            &format!("ARE residual ({name})"),
            res <= 1e-10,
            format!("{res:.3e}"),
        );
    }

    // value-basis gradient check
    {
        let basis = crate::adp::ValueBasis::error_quadratic(2);
        let samples: Vec<ConcatState> = (0..100)
            .map(|i| {
                let u = crate::linalg::halton_point(4, i);
                ConcatState::new(
                    DVector::from_vec(vec![4.0 * u[0] - 2.0, 4.0 * u[1] - 2.0]),
                    DVector::from_vec(vec![4.0 * u[2] - 2.0, 4.0 * u[3] - 2.0]),
                )
            })
            .collect();
        let err = basis.gradient_check(&samples);
        check("value-basis gradient", err <= 1e-6, format!("rel err {err:.3e}"));
    }

    // derivative stencil exactness on a cubic (w = 5)
    {
        let mut buf = crate::sysid::DerivativeBuffer::new(5);
        for i in 0..5 {
            let t = 0.05 * i as f64;
            buf.push(t, DVector::from_vec(vec![t * t * t - 2.0 * t]));
        }
        let d = buf.numeric_derivative()?;
        let t_c: f64 = 0.1;
        let expected = 3.0 * t_c * t_c - 2.0;
        check(
            "derivative stencil exactness",
            (d[0] - expected).abs() < 1e-10,
            format!("err {:.3e}", (d[0] - expected).abs()),
        );
    }

    Ok(if all_ok { EXIT_OK } else { EXIT_CONFIG })
}

/// Serialize the final history stack for post-hoc rank audits.
fn stack_dump(stack: &crate::sysid::HistoryStack) -> Result<String> {
    let entries: Vec<serde_json::Value> = stack
        .entries
        .iter()
        .map(|e| {
            serde_json::json!({
                "x": e.x.as_slice(),
                "u": e.u.as_slice(),
                "xdot_bar": e.xdot_bar.as_slice(),
            })
        })
        .collect();
    Ok(serde_json::to_string_pretty(&serde_json::json!({
        "excitation_level": stack.excitation_level(),
        "capacity": stack.capacity,
        "entries": entries,
    }))?)
}

/// Write a trace in the fixed column order with 17 significant digits:
/// t, e, x, x_d, u, mu_hat, W_c, W_a, theta_hat (row-major), delta_t,
/// mean_abs_delta_i, excitation_level, cbar, gamma_norm, V0, e_norm.
pub fn write_trace_csv(path: &Path, trace: &Trace, scenario: &Scenario) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    let (n, m, l, q) = (scenario.n(), scenario.m(), scenario.l_dim(), scenario.q_dim());

    let mut header: Vec<String> = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("e{i}")));
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|i| format!("x_d{i}")));
    header.extend((1..=m).map(|i| format!("u{i}")));
    header.extend((1..=m).map(|i| format!("mu_hat{i}")));
    header.extend((1..=l).map(|i| format!("W_c{i}")));
    header.extend((1..=l).map(|i| format!("W_a{i}")));
    for i in 1..=q {
        for j in 1..=n {
            header.push(format!("theta_hat_{i}_{j}"));
        }
    }
    header.extend(
        [
            "delta_t",
            "mean_abs_delta_i",
            "excitation_level",
            "cbar",
            "gamma_norm",
            "V0",
            "e_norm",
        ]
        .map(str::to_string),
    );
    writeln!(w, "{}", header.join(","))?;

    for row in &trace.rows {
        let s = &row.state;
        let mut fields: Vec<String> = Vec::with_capacity(header.len());
        let push = |fields: &mut Vec<String>, v: f64| fields.push(format!("{v:.16e}"));
        push(&mut fields, row.t);
        for i in 0..n {
            push(&mut fields, s.x[i] - s.x_d[i]);
        }
        for i in 0..n {
            push(&mut fields, s.x[i]);
        }
        for i in 0..n {
            push(&mut fields, s.x_d[i]);
        }
        for i in 0..m {
            push(&mut fields, row.u[i]);
        }
        for i in 0..m {
            push(&mut fields, row.mu_hat[i]);
        }
        for i in 0..l {
            push(&mut fields, s.w_c[i]);
        }
        for i in 0..l {
            push(&mut fields, s.w_a[i]);
        }
        for i in 0..q {
            for j in 0..n {
                push(&mut fields, s.theta_hat[(i, j)]);
            }
        }
        push(&mut fields, row.delta_t);
        push(&mut fields, row.mean_abs_delta_i);
        push(&mut fields, row.excitation);
        push(&mut fields, row.cbar);
        push(&mut fields, row.gamma_norm);
        push(&mut fields, row.v0);
        push(&mut fields, row.e_norm);
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}

use std::thread;

use blowup_core::analysis::{
    compare_gradient_effect, estimate_t, fit_rate_window, verify_monotonicity, verify_pointwise,
    verify_rate, BoundReport, RateCheck,
};
use blowup_core::estimates::{
    alpha_validity, linspace, margin_condition_02, margin_condition_poa,
    margin_condition_poa_pairs, CutoffInequality, CutoffSpec, FFamily, MarginReport,
};
use blowup_core::problem::{check_compatibility, check_h_hypotheses, check_radial_conditions};
use blowup_core::report::{KvBlock, ToKv};
use blowup_core::transform::{approach_times, find_blowup, oracle_trace, sample_fields};
use blowup_core::{solve, GradientTerm, OracleResult, ProblemSpec, Trace};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{summary, Check, OutDir};

/// Largest relative gap between the extrapolated and the oracle blow-up time.
pub const T_AGREEMENT: f64 = 1e-2;
/// Allowed distance of the fitted rate slope from 1.
pub const SLOPE_TOL: f64 = 0.05;
/// Largest gradient sampled for the product-grid inequality checks.
pub const GRADIENT_MAX: f64 = 1e3;
/// Oracle samples per decade of `T − t` and closest approach.
const PER_DECADE: usize = 20;
const MIN_GAP: f64 = 1e-9;

pub enum Outcome {
    Ok,
    ChecksFailed,
}

fn write_trace(out: &OutDir, trace: &Trace) -> Result<(), CliError> {
    out.csv(
        "trace.csv",
        &[],
        &["t", "U", "dt"],
        trace
            .times
            .iter()
            .zip(&trace.center_values)
            .zip(&trace.dts)
            .map(|((&t, &u), &dt)| [t, u, dt]),
    )?;
    let snaps = out.subdir("snapshots")?;
    for (k, s) in trace.snapshots.iter().enumerate() {
        snaps.csv(
            &format!("snapshot_{k:05}.csv"),
            &[format!("t={}", blowup_core::report::fmt_f64(s.t))],
            &["r", "u"],
            s.profile
                .grid()
                .nodes()
                .zip(s.profile.values())
                .map(|(r, &u)| [r, u]),
        )?;
    }
    Ok(())
}

fn problem_report(problem: &ProblemSpec) -> KvBlock {
    KvBlock::new()
        .nested("radial", check_radial_conditions(problem).to_kv())
        .real("compatibility_min", check_compatibility(problem))
        .nested(
            "growth",
            check_h_hypotheses(&problem.gradient, GRADIENT_MAX, 1000).to_kv(),
        )
}

fn run_summary(trace: &Trace) -> KvBlock {
    KvBlock::new()
        .text("blew_up", trace.blew_up)
        .real("t_end", trace.t_end)
        .text("step_count", trace.step_count)
        .real("u_cutoff", trace.u_cutoff)
        .text("snapshots", trace.snapshots.len())
}

pub fn solve_cmd(cfg: &RunConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let problem = cfg.problem()?;
    let trace = solve(&problem, &cfg.solver)?;
    write_trace(out, &trace)?;
    let mut report = run_summary(&trace).nested("problem", problem_report(&problem));
    if trace.blew_up {
        if let Ok(t_hat) = estimate_t(&trace) {
            report = report.real("T_hat", t_hat);
        }
    }
    out.kv("report.txt", &report)?;
    Ok(Outcome::Ok)
}

/// Sample times for the oracle: the approach sequence before a finite `T`,
/// or a uniform grid up to the settling time of a global solution.
fn oracle_times(result: &OracleResult, dt: f64) -> Vec<f64> {
    if result.global {
        let settle = (result.steps as f64 * dt).max(dt);
        linspace(0.0, settle, 201)
    } else {
        approach_times(result.blowup_time, 200, PER_DECADE, MIN_GAP)
    }
}

struct OracleRun {
    result: OracleResult,
    trace: Trace,
}

fn run_oracle(cfg: &RunConfig, problem: &ProblemSpec) -> Result<OracleRun, CliError> {
    let opts = cfg.oracle_options(problem);
    let result = find_blowup(problem, &opts)?;
    let times = oracle_times(&result, opts.dt);
    let trace = oracle_trace(problem, &opts, &times, cfg.solver.u_cutoff)?;
    Ok(OracleRun { result, trace })
}

pub fn oracle_cmd(cfg: &RunConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let problem = cfg.problem()?;
    let opts = cfg.oracle_options(&problem);
    let run = run_oracle(cfg, &problem)?;
    out.kv("result.txt", &run.result.to_kv())?;
    out.csv(
        "center_trace.csv",
        &[],
        &["t", "U"],
        run.trace
            .times
            .iter()
            .zip(&run.trace.center_values)
            .map(|(&t, &u)| [t, u]),
    )?;
    let horizon = if run.result.global {
        run.trace.t_end
    } else {
        run.result.blowup_time
    };
    let times: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999]
        .iter()
        .map(|f| f * horizon)
        .collect();
    let snaps = out.subdir("fields")?;
    for (k, f) in sample_fields(&problem, &opts, &times)?.iter().enumerate() {
        snaps.csv(
            &format!("v_{k:02}.csv"),
            &[format!("t={}", blowup_core::report::fmt_f64(f.t))],
            &["r", "v"],
            f.values
                .grid()
                .nodes()
                .zip(f.values.values())
                .map(|(r, &v)| [r, v]),
        )?;
    }
    Ok(Outcome::Ok)
}

fn bound_check(name: &str, rep: &BoundReport) -> Check {
    Check::new(
        name,
        rep.passed(),
        rep.worst_gap,
        format!("violations={}", rep.violations),
    )
}

fn margin_check(rep: &MarginReport, tol: f64) -> Check {
    Check::new(
        &rep.name,
        rep.min >= -tol,
        rep.min,
        format!("points={} at=({},{})", rep.points, rep.at.0, rep.at.1),
    )
}

fn write_rate(out: &OutDir, name: &str, rate: &RateCheck) -> Result<(), CliError> {
    out.csv(
        name,
        &[],
        &["t", "U", "lower_gap", "upper_k"],
        rate.rows.iter(),
    )
}

/// Inequality checks that need no solution: the cutoff-weighted inequality at
/// the certified α, the gradient inequality at α = 1 and the growth bound.
fn condition_checks(
    cfg: &RunConfig,
    problem: &ProblemSpec,
    out: &OutDir,
) -> Result<Vec<Check>, CliError> {
    let est = &cfg.estimates;
    let u_grid = linspace(0.0, est.u_max, est.grid_density);
    let r_grid = linspace(
        cfg.radius / est.grid_density as f64,
        cfg.radius,
        est.grid_density,
    );
    let (q, k) = match problem.gradient {
        GradientTerm::None => (2.0, 0.0),
        GradientTerm::Power { q, k } => (q, k),
    };
    let mut checks = Vec::new();

    let eps = est
        .epsilon_list
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let cutoff = CutoffSpec::new(eps, est.exponent_delta, cfg.radius)?;
    let alpha = alpha_validity(&cutoff);
    let ineq = CutoffInequality {
        family: FFamily::exp2_alpha(alpha)?,
        cutoff,
        reaction: problem.reaction,
        k,
        q,
        n: problem.n,
    };
    let rep02 = margin_condition_02(&ineq, &u_grid, &r_grid);
    out.kv(
        "margin_02.txt",
        &rep02.to_kv().real("epsilon", eps).real("alpha", alpha),
    )?;
    checks.push(margin_check(&rep02, 1e-9));

    let g_grid = linspace(0.0, GRADIENT_MAX, est.grid_density);
    let unit = margin_condition_poa(
        &FFamily::exp_alpha(1.0)?,
        &problem.reaction,
        &problem.gradient,
        &u_grid,
        &g_grid,
    );
    out.kv("margin_poa_alpha1.txt", &unit.to_kv())?;
    let mut c = margin_check(&unit, 1e-12);
    c.name = "condition_poa_alpha1".into();
    checks.push(c);

    let growth = check_h_hypotheses(&problem.gradient, GRADIENT_MAX, 1000);
    out.kv("margin_m2.txt", &growth.to_kv())?;
    checks.push(Check::new(
        "condition_m2",
        growth.m2_margin >= -1e-12,
        growth.m2_margin,
        format!("quadratic_growth_ok={}", growth.quadratic_growth_ok),
    ));
    Ok(checks)
}

pub fn conditions_cmd(cfg: &RunConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let problem = cfg.problem()?;
    let checks = condition_checks(cfg, &problem, out)?;
    finish(out, &checks)
}

fn finish(out: &OutDir, checks: &[Check]) -> Result<Outcome, CliError> {
    let text = summary(checks);
    out.text("summary.txt", &text)?;
    print!("{text}");
    Ok(if checks.iter().any(Check::blocks) {
        Outcome::ChecksFailed
    } else {
        Outcome::Ok
    })
}

pub fn verify_cmd(cfg: &RunConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let problem = cfg.problem()?;
    let model = problem.is_model_case();
    let (trace, oracle) = thread::scope(|s| {
        let oracle = s.spawn(|| model.then(|| run_oracle(cfg, &problem)));
        let trace = solve(&problem, &cfg.solver);
        (trace, oracle.join().expect("oracle thread panicked"))
    });
    let trace = trace?;
    let oracle = oracle.transpose()?;
    write_trace(out, &trace)?;
    let est = &cfg.estimates;
    let mut checks = Vec::new();

    let time_monotone = check_compatibility(&problem) >= 0.0;
    let mono = verify_monotonicity(&trace, time_monotone);
    out.kv("monotonicity_solver.txt", &mono.to_kv())?;
    checks.push(bound_check("monotonicity_solver", &mono));

    let t_hat = if trace.blew_up {
        estimate_t(&trace).ok()
    } else {
        None
    };
    let mut report = run_summary(&trace);
    if let Some(t) = t_hat {
        report = report.real("T_hat", t);
    }

    if let Some(run) = &oracle {
        out.kv("oracle.txt", &run.result.to_kv())?;
        let mono = verify_monotonicity(&run.trace, time_monotone);
        out.kv("monotonicity_oracle.txt", &mono.to_kv())?;
        checks.push(bound_check("monotonicity_oracle", &mono));
        let t = run.result.blowup_time;
        match (run.result.global, t_hat) {
            (false, Some(t_hat)) => {
                let rel = (t_hat - t).abs() / t;
                checks.push(Check::new(
                    "t_agreement",
                    rel <= T_AGREEMENT,
                    rel,
                    format!("T_hat={t_hat} T={t}"),
                ));
            }
            (true, None) if !trace.blew_up => {
                checks.push(Check::new("t_agreement", true, 0.0, "both global"));
            }
            _ => checks.push(Check::new(
                "t_agreement",
                false,
                f64::NAN,
                format!(
                    "solver blew_up={} oracle global={}",
                    trace.blew_up, run.result.global
                ),
            )),
        }
    } else {
        checks.push(Check::skipped(
            "monotonicity_oracle",
            "no exact transform for this problem",
        ));
        checks.push(Check::skipped(
            "t_agreement",
            "no exact transform for this problem",
        ));
    }

    // rate checks use the oracle trace and T when available, else the solver trace and T_hat
    let rate_input = match &oracle {
        Some(run) if !run.result.global => Some((&run.trace, run.result.blowup_time)),
        Some(_) => None,
        None => t_hat.map(|t| (&trace, t)),
    };
    if let Some((rate_trace, t)) = rate_input {
        let rate = verify_rate(rate_trace, t, 1.0);
        write_rate(out, "rate.csv", &rate)?;
        out.kv("rate.txt", &rate.to_kv())?;
        checks.push(bound_check("rate_lower", &rate.lower));
        checks.push(Check::new(
            "rate_bounded",
            rate.bounded,
            rate.k_oscillation,
            format!("c_hat={}", rate.c_hat),
        ));
        let (lo, hi) = cfg.fit_window();
        match fit_rate_window(rate_trace, t, lo, hi) {
            Ok(fit) => {
                out.kv("fit.txt", &fit.to_kv())?;
                let dev = (fit.slope_m - 1.0).abs();
                checks.push(Check::new(
                    "rate_slope",
                    dev <= SLOPE_TOL,
                    dev,
                    format!("m={}", fit.slope_m),
                ));
            }
            Err(e) => checks.push(Check::new("rate_slope", false, f64::NAN, e.to_string())),
        }
    } else {
        for name in ["rate_lower", "rate_bounded", "rate_slope"] {
            checks.push(Check::skipped(name, "no blow-up"));
        }
    }

    let pw = verify_pointwise(
        &trace.snapshots,
        est.alpha,
        est.exponent_delta,
        &est.epsilon_list,
        cfg.r_min(),
    );
    out.kv("pointwise.txt", &pw.to_kv())?;
    checks.push(Check::new(
        "pointwise_epsilon",
        pw.epsilon_star.is_some(),
        pw.report.worst_gap,
        format!(
            "epsilon_star={:?} alpha_certified={}",
            pw.epsilon_star, pw.alpha_certified
        ),
    ));

    checks.extend(condition_checks(cfg, &problem, out)?);

    if let Some(run) = &oracle {
        // |u_r| = |v_r| / (1 − v) from the transformed field, which stays resolved near blow-up
        let fields = sample_fields(&problem, &cfg.oracle_options(&problem), &run.trace.times)?;
        let mut pairs = Vec::new();
        for f in &fields {
            let u = f.to_u()?;
            let dv = f.values.radial_derivative();
            for ((&u, &v), d) in u.values().iter().zip(f.values.values()).zip(dv) {
                pairs.push((u, d.abs() / (1.0 - v)));
            }
        }
        let fam = FFamily::exp_alpha(est.alpha)?;
        let rep = margin_condition_poa_pairs(&fam, &problem.reaction, &problem.gradient, pairs);
        out.kv(
            "margin_poa_states.txt",
            &rep.to_kv().real("alpha", est.alpha),
        )?;
        checks.push(margin_check(&rep, 0.0));
    } else {
        checks.push(Check::skipped(
            "condition_poa_on_states",
            "no exact transform for this problem",
        ));
    }

    out.kv(
        "report.txt",
        &report.nested("problem", problem_report(&problem)),
    )?;
    finish(out, &checks)
}

pub fn compare_cmd(cfg: &RunConfig, out: &OutDir) -> Result<Outcome, CliError> {
    let problem = cfg.problem()?;
    let cmp = compare_gradient_effect(&problem, &cfg.solver)?;
    out.kv("compare.txt", &cmp.to_kv())?;
    let check = Check::new(
        "dominance",
        cmp.dominance_ok,
        cmp.worst_excess,
        format!("lockstep_steps={}", cmp.lockstep_steps),
    );
    finish(out, &[check])
}

//! Acceptance suite. Prints one `criterion N: PASS|FAIL` line per criterion and
//! exits nonzero if any criterion fails.

use std::io::Write;
use std::time::Instant;

use blowup_core::analysis::{
    compare_gradient_effect, estimate_t, fit_rate, fit_rate_window, verify_monotonicity,
    verify_pointwise, verify_rate,
};
use blowup_core::estimates::{
    alpha_validity, linspace, margin_condition_02, margin_condition_poa,
    margin_condition_poa_pairs, CutoffInequality, CutoffSpec, FFamily,
};
use blowup_core::transform::{
    approach_times, find_blowup, oracle_trace, sample_fields, OracleOptions,
};
use blowup_core::{
    make_problem, solve, GradientTerm, ProblemSpec, Profile, RadialGrid, Reaction, Snapshot,
    SolverConfig, Trace,
};

const U_CUTOFF: f64 = 20.0;

fn model(radius: f64, intervals: usize) -> ProblemSpec {
    let g = RadialGrid::new(radius, intervals).unwrap();
    make_problem(
        1,
        radius,
        Reaction::Exponential,
        GradientTerm::quadratic(),
        |_| 0.0,
        g,
    )
    .unwrap()
}

fn config(stride: usize) -> SolverConfig {
    SolverConfig {
        u_cutoff: U_CUTOFF,
        snapshot_stride: stride,
        ..SolverConfig::default()
    }
}

/// Oracle options with the bisection run to machine precision.
fn exact_opts(p: &ProblemSpec) -> OracleOptions {
    OracleOptions::for_problem(p).with_tol(0.0)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Shared runs of the model scenario `n = 1, R = 2, u0 ≡ 0`.
struct Model {
    p400: ProblemSpec,
    solver400: Trace,
    solver400_secs: f64,
    oracle_t400: f64,
    oracle_t800: f64,
    oracle_trace: Trace,
}

impl Model {
    fn build() -> Self {
        let p400 = model(2.0, 400);
        let start = Instant::now();
        let solver400 = solve(&p400, &config(20)).unwrap();
        let solver400_secs = start.elapsed().as_secs_f64();
        let oracle_t400 = find_blowup(&p400, &exact_opts(&p400)).unwrap().blowup_time;
        let p800 = model(2.0, 800);
        let oracle_t800 = find_blowup(&p800, &exact_opts(&p800)).unwrap().blowup_time;
        let times = approach_times(oracle_t400, 200, 20, 1e-9);
        let oracle_trace = oracle_trace(&p400, &exact_opts(&p400), &times, U_CUTOFF).unwrap();
        Self {
            p400,
            solver400,
            solver400_secs,
            oracle_t400,
            oracle_t800,
            oracle_trace,
        }
    }
}

/// `sup |u_solver − u_oracle| / sup |u_oracle|` over snapshots with `max u ≤ 8`.
fn oracle_deviation(p: &ProblemSpec, trace: &Trace) -> (f64, usize) {
    let snaps: Vec<&Snapshot> = trace
        .snapshots
        .iter()
        .filter(|s| s.profile.max() <= 8.0)
        .collect();
    let times: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    let fields = sample_fields(p, &OracleOptions::for_problem(p), &times).unwrap();
    let mut worst: f64 = 0.0;
    for (s, f) in snaps.iter().zip(&fields) {
        let reference = f.to_u().unwrap();
        let scale = reference
            .values()
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        if scale > 0.0 {
            worst = worst.max(s.profile.sup_distance(&reference) / scale);
        }
    }
    (worst, snaps.len())
}

fn criterion_1(m: &Model) -> Outcome {
    let (dev400, count400) = oracle_deviation(&m.p400, &m.solver400);
    let p800 = model(2.0, 800);
    let start = Instant::now();
    let solver800 = solve(&p800, &config(40)).unwrap();
    let secs800 = start.elapsed().as_secs_f64();
    let (dev800, _) = oracle_deviation(&p800, &solver800);
    let ratio = dev400 / dev800;
    let runtime = m.solver400_secs.max(secs800);
    outcome(
        dev400 <= 1e-3 && ratio >= 3.0 && runtime <= 30.0,
        format!(
            "deviation N=400 {dev400:.3e} over {count400} snapshots, N=800 {dev800:.3e}, ratio {ratio:.2}, solve {runtime:.2}s"
        ),
    )
}

fn criterion_2(m: &Model) -> Outcome {
    let t_hat = estimate_t(&m.solver400).unwrap();
    let rel = (t_hat - m.oracle_t400).abs() / m.oracle_t400;
    let drift = (m.oracle_t400 - m.oracle_t800).abs() / m.oracle_t800;
    outcome(
        rel <= 1e-2 && drift <= 1e-3,
        format!(
            "T_hat {t_hat:.9} T_oracle {:.9} rel {rel:.3e}; oracle T N=800 {:.9} drift {drift:.3e}",
            m.oracle_t400, m.oracle_t800
        ),
    )
}

fn criterion_3(m: &Model) -> Outcome {
    let fit = fit_rate_window(&m.oracle_trace, m.oracle_t400, 10.0, 18.0).unwrap();
    let rate = verify_rate(&m.oracle_trace, m.oracle_t400, 1.0);
    outcome(
        (fit.slope_m - 1.0).abs() <= 0.05 && rate.k_oscillation <= 0.2,
        format!(
            "slope {:.6} intercept {:.6} over {} points; k oscillation over last decade {:.3e}",
            fit.slope_m, fit.intercept_k, fit.points, rate.k_oscillation
        ),
    )
}

fn criterion_4(m: &Model) -> Outcome {
    let rate = verify_rate(&m.oracle_trace, m.oracle_t400, 1.0);
    outcome(
        rate.lower.violations == 0,
        format!(
            "{} violations in {} times, min U + log(T - t) = {:.3e}",
            rate.lower.violations, rate.lower.points_checked, rate.lower.worst_gap
        ),
    )
}

fn criterion_5(m: &Model) -> Outcome {
    let eps: Vec<f64> = (0..=12).map(|k| 10f64.powi(-k)).collect();
    let check = verify_pointwise(&m.solver400.snapshots, 0.5, 0.5, &eps, 0.05 * 2.0);
    outcome(
        check.epsilon_star.is_some_and(|e| e > 0.0) && check.report.violations == 0,
        format!(
            "eps* {:?}, worst gap {:.4e}, {} points, r <= {:.3}, alpha certified {}",
            check.epsilon_star,
            check.report.worst_gap,
            check.report.points_checked,
            check.r_max_checked,
            check.alpha_certified
        ),
    )
}

fn criterion_6(m: &Model) -> Outcome {
    let start = Instant::now();
    let radius = 2.0;
    let u_grid = linspace(0.0, 30.0, 200);
    let r_grid = linspace(radius / 200.0, radius, 200);
    let mut ok = true;
    let mut parts = Vec::new();
    for (eps, delta) in [(0.01, 0.5), (0.1, 1.0)] {
        let cutoff = CutoffSpec::new(eps, delta, radius).unwrap();
        let alpha = alpha_validity(&cutoff);
        let ineq = CutoffInequality {
            family: FFamily::exp2_alpha(alpha).unwrap(),
            cutoff,
            reaction: Reaction::Exponential,
            k: 1.0,
            q: 2.0,
            n: 1,
        };
        let rep = margin_condition_02(&ineq, &u_grid, &r_grid);
        ok &= rep.min >= -1e-9;
        parts.push(format!(
            "02(eps={eps},delta={delta},alpha={alpha:.4}) min {:.3e} at u={:.2} r={:.3}",
            rep.min, rep.at.0, rep.at.1
        ));
    }

    let h = GradientTerm::quadratic();
    let f = Reaction::Exponential;
    let unit = margin_condition_poa(
        &FFamily::exp_alpha(1.0).unwrap(),
        &f,
        &h,
        &u_grid,
        &linspace(0.0, 1e3, 200),
    );
    ok &= unit.min.abs() <= 1e-12;
    parts.push(format!("poa(alpha=1) min {:.1e}", unit.min));

    // (u, |u_r|) pairs of the model scenario, with |u_r| = |v_r| / (1 − v)
    // taken from the resolved transformed field rather than from the spike in u
    let fields = sample_fields(&m.p400, &exact_opts(&m.p400), &m.oracle_trace.times).unwrap();
    let pairs: Vec<(f64, f64)> = fields
        .iter()
        .flat_map(|f| {
            let dv = f.values.radial_derivative();
            let u = f.to_u().unwrap();
            u.values()
                .iter()
                .zip(f.values.values())
                .zip(dv)
                .map(|((&u, &v), dv)| (u, dv.abs() / (1.0 - v)))
                .collect::<Vec<_>>()
        })
        .collect();
    for alpha in [0.25, 0.5, 0.75] {
        let fam = FFamily::exp_alpha(alpha).unwrap();
        let rep = margin_condition_poa_pairs(&fam, &f, &h, pairs.iter().copied());
        let grid = margin_condition_poa(
            &fam,
            &f,
            &h,
            &linspace(0.0, 30.0, 200),
            &linspace(0.0, 10.0, 200),
        );
        ok &= rep.min >= 0.0;
        parts.push(format!(
            "poa(alpha={alpha}) on {} states min {:.3e} at u={:.3} |u_r|={:.3} (product grid min {:.3e})",
            rep.points, rep.min, rep.at.0, rep.at.1, grid.min
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs <= 5.0;
    parts.push(format!("{secs:.2}s"));
    outcome(ok, parts.join("; "))
}

fn criterion_7() -> Outcome {
    let p = model(2.0, 200);
    let cmp = compare_gradient_effect(&p, &config(100)).unwrap();
    let slope_ok = |s: Option<f64>| s.is_some_and(|m| (m - 1.0).abs() <= 0.05);
    outcome(
        cmp.dominance_ok && slope_ok(cmp.with.slope) && slope_ok(cmp.without.slope),
        format!(
            "worst excess {:.3e} over {} steps; T with {:?} without {:?}; slopes {:?} / {:?}",
            cmp.worst_excess,
            cmp.lockstep_steps,
            cmp.with.t_hat,
            cmp.without.t_hat,
            cmp.with.slope,
            cmp.without.slope
        ),
    )
}

fn criterion_8() -> Outcome {
    let p = model(0.5, 50);
    let oracle = find_blowup(&p, &OracleOptions::for_problem(&p)).unwrap();
    let cfg = SolverConfig {
        t_max: 50.0,
        ..config(10_000)
    };
    let trace = solve(&p, &cfg).unwrap();
    outcome(
        oracle.global && oracle.max_steady < 1.0 && !trace.blew_up && trace.t_end >= 50.0,
        format!(
            "oracle global {} max steady {:.6}; solver blew up {} at t_end {} with max u {:.6}",
            oracle.global,
            oracle.max_steady,
            trace.blew_up,
            trace.t_end,
            trace
                .final_snapshot()
                .map(|s| s.profile.max())
                .unwrap_or(f64::NAN)
        ),
    )
}

/// Closed-form trace `U = k − m log(T − t)` at evenly spaced levels of `U`.
fn synthetic(blowup_time: f64, m: f64, k: f64, u_cutoff: f64) -> Trace {
    let u_start = (k - m * blowup_time.ln()).max(0.0) + 0.01;
    let u_top = u_cutoff + 0.5;
    let mut times: Vec<f64> = Vec::new();
    let mut values = Vec::new();
    for j in 0..=400 {
        let level = u_start + (u_top - u_start) * j as f64 / 400.0;
        let t = blowup_time - ((k - level) / m).exp();
        if times.last().is_some_and(|&last| t <= last) {
            continue;
        }
        times.push(t);
        values.push(k - m * (blowup_time - t).ln());
    }
    let t_end = *times.last().unwrap();
    Trace {
        dts: std::iter::once(0.0)
            .chain(times.windows(2).map(|w| w[1] - w[0]))
            .collect(),
        center_values: values,
        snapshots: vec![Snapshot {
            t: t_end,
            profile: Profile::zeros(RadialGrid::new(1.0, 4).unwrap()),
        }],
        blew_up: true,
        t_end,
        step_count: times.len() - 1,
        u_cutoff,
        times,
    }
}

fn criterion_9() -> Outcome {
    let mut worst: (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut failures = Vec::new();
    for t in [0.5, 1.0, 5.0] {
        for m in [1.0, 2.0] {
            for k in [-1.0, 0.0, 2.0] {
                let trace = synthetic(t, m, k, 12.0);
                let t_hat = match estimate_t(&trace) {
                    Ok(x) => x,
                    Err(e) => {
                        failures.push(format!("({t},{m},{k}): {e}"));
                        continue;
                    }
                };
                let fit = fit_rate(&trace, t_hat).unwrap();
                let errs = (
                    (t_hat - t).abs(),
                    (fit.slope_m - m).abs(),
                    (fit.intercept_k - k).abs(),
                );
                worst = (
                    worst.0.max(errs.0),
                    worst.1.max(errs.1),
                    worst.2.max(errs.2),
                );
                if errs.0 > 1e-9 || errs.1 > 1e-9 || errs.2 > 1e-9 {
                    failures.push(format!("({t},{m},{k}): {errs:?}"));
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "18 traces, worst |dT| {:.2e} |dm| {:.2e} |dk| {:.2e}{}",
            worst.0,
            worst.1,
            worst.2,
            if failures.is_empty() {
                String::new()
            } else {
                format!("; failed {}", failures.join(", "))
            }
        ),
    )
}

fn criterion_10(m: &Model) -> Outcome {
    let mut total = 0;
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    let mut add = |trace: &Trace| {
        let rep = verify_monotonicity(trace, true);
        total += rep.points_checked;
        violations += rep.violations;
        worst = worst.min(rep.worst_gap);
    };
    add(&m.oracle_trace);
    // global case: uniform samples up to t = 50
    let small = model(0.5, 50);
    let times = linspace(0.0, 50.0, 501);
    add(&oracle_trace(
        &small,
        &OracleOptions::for_problem(&small),
        &times,
        U_CUTOFF,
    )
    .unwrap());
    // a second blow-up case with nonzero, nonincreasing data
    let g = RadialGrid::new(2.5, 250).unwrap();
    let bump = make_problem(
        2,
        2.5,
        Reaction::Exponential,
        GradientTerm::quadratic(),
        |r| 0.05 * (6.25 - r * r),
        g,
    )
    .unwrap();
    let res = find_blowup(&bump, &exact_opts(&bump)).unwrap();
    assert!(!res.global);
    let times = approach_times(res.blowup_time, 100, 10, 1e-9);
    add(&oracle_trace(&bump, &exact_opts(&bump), &times, U_CUTOFF).unwrap());
    outcome(
        violations == 0,
        format!("{violations} violations in {total} checks, smallest slack {worst:.3e}"),
    )
}

fn main() {
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let wanted = |n: usize| filter.is_empty() || filter.iter().any(|f| f == &n.to_string());
    let model_start = Instant::now();
    let model = Model::build();
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "model scenario runs built in {:.2}s",
        model_start.elapsed().as_secs_f64()
    )
    .unwrap();

    let criteria: Vec<(usize, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, Box::new(|| criterion_1(&model))),
        (2, Box::new(|| criterion_2(&model))),
        (3, Box::new(|| criterion_3(&model))),
        (4, Box::new(|| criterion_4(&model))),
        (5, Box::new(|| criterion_5(&model))),
        (6, Box::new(|| criterion_6(&model))),
        (7, Box::new(criterion_7)),
        (8, Box::new(criterion_8)),
        (9, Box::new(criterion_9)),
        (10, Box::new(|| criterion_10(&model))),
    ];
    let mut failed = Vec::new();
    for (n, run) in criteria {
        if !wanted(n) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        writeln!(
            out,
            "criterion {n}: {verdict} ({:.2}s) {}",
            start.elapsed().as_secs_f64(),
            o.detail
        )
        .unwrap();
        out.flush().unwrap();
        if !o.pass {
            failed.push(n);
        }
    }
    if !failed.is_empty() {
        writeln!(out, "failed criteria: {failed:?}").unwrap();
        std::process::exit(1);
    }
}

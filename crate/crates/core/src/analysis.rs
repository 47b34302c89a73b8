//! Blow-up time and rate extraction from traces, bound verification, and the
//! damped-vs-undamped comparison.

use crate::error::{Error, Result};
use crate::estimates::{alpha_validity, pointwise_bound_formula, BoundParams, CutoffSpec};
use crate::problem::{GradientTerm, ProblemSpec};
use crate::report::{KvBlock, ToKv};
use crate::solver::{self, Snapshot, SolverConfig, Trace, MIN_STEP};

/// Minimum |correlation| accepted by [`estimate_t`].
pub const MIN_CORRELATION: f64 = 0.999;
/// Fit windows, in units of `U` below the trace cutoff.
pub const T_WINDOW_DEPTH: f64 = 4.0;
pub const RATE_WINDOW: (f64, f64) = (10.0, 2.0);

/// Ordinary least squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub correlation: f64,
    /// Root mean square residual.
    pub rms: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let correlation = if syy == 0.0 {
        1.0
    } else {
        sxy / (sxx * syy).sqrt()
    };
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    Some(LineFit {
        slope,
        intercept,
        correlation,
        rms: (sse / nf).sqrt(),
    })
}

fn window(trace: &Trace, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    trace
        .times
        .iter()
        .zip(&trace.center_values)
        .filter(|&(_, &u)| u >= lo && u <= hi)
        .map(|(&t, &u)| (t, u))
        .unzip()
}

/// Linear fit of `U` against `−log(T − t)`.
fn log_fit(ts: &[f64], us: &[f64], blowup_time: f64) -> Option<LineFit> {
    let xs: Vec<f64> = ts.iter().map(|&t| -(blowup_time - t).ln()).collect();
    fit_line(&xs, us)
}

/// Derivative of the profiled cost `min_{k,m} Σ (U − k − m x)²`, `x = −log(T−t)`,
/// with respect to `T` (up to a positive factor).
fn profile_slope(ts: &[f64], us: &[f64], blowup_time: f64) -> Option<f64> {
    let fit = log_fit(ts, us, blowup_time)?;
    Some(
        ts.iter()
            .zip(us)
            .map(|(&t, &u)| {
                let gap = blowup_time - t;
                let r = u - fit.intercept + fit.slope * gap.ln();
                r * fit.slope / gap
            })
            .sum(),
    )
}

/// Blow-up time from the final part of a blown-up trace.
///
/// A straight line through `(t, e^{−U})` over `U ≥ u_cutoff − 4` gives the
/// first estimate; it is exact for `U = k − log(T − t)`. The estimate is then
/// refined by locating the root of the profiled least-squares derivative for
/// `U = k − m log(T − t)`, which keeps power-law traces with `m ≠ 1` exact.
pub fn estimate_t(trace: &Trace) -> Result<f64> {
    if !trace.blew_up {
        return Err(Error::NoBlowup);
    }
    let lo = trace.u_cutoff - T_WINDOW_DEPTH;
    let (ts, us) = window(trace, lo, f64::INFINITY);
    if ts.len() < 3 {
        return Err(Error::WindowEmpty {
            lo,
            hi: f64::INFINITY,
        });
    }
    let ws: Vec<f64> = us.iter().map(|&u| (-u).exp()).collect();
    let line = fit_line(&ts, &ws).ok_or(Error::WindowEmpty {
        lo,
        hi: f64::INFINITY,
    })?;
    let t_last = ts[ts.len() - 1];
    let span = t_last - ts[0];
    let mut guess = -line.intercept / line.slope;
    if !(guess > t_last) {
        guess = t_last + span.max(MIN_STEP);
    }

    let refined = refine_power_law(&ts, &us, guess).unwrap_or(guess);
    let fit = log_fit(&ts, &us, refined).ok_or(Error::PoorFit(f64::NAN))?;
    if !(fit.correlation.abs() >= MIN_CORRELATION) {
        return Err(Error::PoorFit(fit.correlation));
    }
    Ok(refined)
}

fn refine_power_law(ts: &[f64], us: &[f64], guess: f64) -> Option<f64> {
    let t_last = *ts.last()?;
    let phi = |t: f64| profile_slope(ts, us, t);
    let gap0 = guess - t_last;
    let at_guess = phi(guess)?;
    if at_guess == 0.0 {
        return Some(guess);
    }
    // walk outwards geometrically in T − t_last for a sign change
    let mut bracket = None;
    for k in 1..=60 {
        let factor = 1.5f64.powi(k);
        for gap in [gap0 / factor, gap0 * factor] {
            let t = t_last + gap;
            if t <= t_last {
                continue;
            }
            if let Some(v) = phi(t) {
                if v.signum() != at_guess.signum() {
                    bracket = Some(if t < guess { (t, guess) } else { (guess, t) });
                    break;
                }
            }
        }
        if bracket.is_some() {
            break;
        }
    }
    let (mut a, mut b) = bracket?;
    let mut fa = phi(a)?;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = phi(mid)?;
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    // both ends agree to the last bit or so; take the one with the smaller cost
    let cost = |t: f64| log_fit(ts, us, t).map(|f| f.rms).unwrap_or(f64::INFINITY);
    Some(if cost(a) <= cost(b) { a } else { b })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub t_hat: f64,
    pub slope_m: f64,
    pub intercept_k: f64,
    pub residual: f64,
    pub window: (f64, f64),
    pub points: usize,
    /// `|m̂ − round(m̂)| > 0.1`.
    pub non_integer_slope: bool,
}

impl ToKv for FitResult {
    fn to_kv(&self) -> KvBlock {
        KvBlock::new()
            .real("T_hat", self.t_hat)
            .real("slope_m", self.slope_m)
            .real("intercept_k", self.intercept_k)
            .real("residual", self.residual)
            .real("window.t_lo", self.window.0)
            .real("window.t_hi", self.window.1)
            .text("points", self.points)
            .text("non_integer_slope", self.non_integer_slope)
    }
}

/// Least squares of `U` against `−log(T − t)` over
/// `U ∈ [u_cutoff − 10, u_cutoff − 2]`.
pub fn fit_rate(trace: &Trace, blowup_time: f64) -> Result<FitResult> {
    let (depth_lo, depth_hi) = RATE_WINDOW;
    fit_rate_window(
        trace,
        blowup_time,
        trace.u_cutoff - depth_lo,
        trace.u_cutoff - depth_hi,
    )
}

pub fn fit_rate_window(trace: &Trace, blowup_time: f64, u_lo: f64, u_hi: f64) -> Result<FitResult> {
    let (ts, us) = window(trace, u_lo, u_hi);
    let (ts, us): (Vec<f64>, Vec<f64>) = ts
        .into_iter()
        .zip(us)
        .filter(|&(t, _)| t < blowup_time)
        .unzip();
    let fit = log_fit(&ts, &us, blowup_time).ok_or(Error::WindowEmpty { lo: u_lo, hi: u_hi })?;
    Ok(FitResult {
        t_hat: blowup_time,
        slope_m: fit.slope,
        intercept_k: fit.intercept,
        residual: fit.rms,
        window: (ts[0], ts[ts.len() - 1]),
        points: ts.len(),
        non_integer_slope: (fit.slope - fit.slope.round()).abs() > 0.1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub bound_name: String,
    pub violations: usize,
    /// Minimum over checked points of `bound − value`.
    pub worst_gap: f64,
    pub points_checked: usize,
}

impl BoundReport {
    fn new(name: &str) -> Self {
        Self {
            bound_name: name.to_string(),
            violations: 0,
            worst_gap: f64::INFINITY,
            points_checked: 0,
        }
    }

    fn record(&mut self, gap: f64, tol: f64) {
        self.points_checked += 1;
        self.worst_gap = self.worst_gap.min(gap);
        if gap < -tol || gap.is_nan() {
            self.violations += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

impl ToKv for BoundReport {
    fn to_kv(&self) -> KvBlock {
        KvBlock::new()
            .text("bound_name", &self.bound_name)
            .text("violations", self.violations)
            .real("worst_gap", self.worst_gap)
            .text("points_checked", self.points_checked)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseCheck {
    pub report: BoundReport,
    pub epsilon_star: Option<f64>,
    /// Largest radius compared, `min(R, C^{1/m})` for the reported ε.
    pub r_max_checked: f64,
    /// Whether α is within the certified range for the reported ε.
    pub alpha_certified: bool,
    /// `(ε, violations, worst_gap)` for each scanned ε.
    pub scan: Vec<(f64, usize, f64)>,
}

impl ToKv for PointwiseCheck {
    fn to_kv(&self) -> KvBlock {
        KvBlock::new()
            .nested("report", self.report.to_kv())
            .real("epsilon_star", self.epsilon_star.unwrap_or(f64::NAN))
            .text("admissible_epsilon_found", self.epsilon_star.is_some())
            .real("r_max_checked", self.r_max_checked)
            .text("alpha_certified", self.alpha_certified)
    }
}

/// Scans ε in descending order and returns the first (largest) one for which
/// `u(r,t) ≤ (1/2α)[log C − m log r]` holds at every snapshot node with
/// `r ∈ [r_min, min(R, C^{1/m})]`.
pub fn verify_pointwise(
    snapshots: &[Snapshot],
    alpha: f64,
    exponent_delta: f64,
    epsilon_list: &[f64],
    r_min: f64,
) -> PointwiseCheck {
    let mut eps: Vec<f64> = epsilon_list.iter().copied().filter(|e| *e > 0.0).collect();
    eps.sort_by(|a, b| b.total_cmp(a));
    let radius = snapshots
        .first()
        .map(|s| s.profile.grid().radius())
        .unwrap_or(0.0);
    let mut scan = Vec::with_capacity(eps.len());
    let mut last = None;
    for &e in &eps {
        let params = BoundParams::pointwise(e, exponent_delta, alpha);
        let r_cap = radius.min(params.zero_radius());
        let mut report = BoundReport::new("pointwise");
        for snap in snapshots {
            for (r, &u) in snap.profile.grid().nodes().zip(snap.profile.values()) {
                if r < r_min || r > r_cap {
                    continue;
                }
                report.record(
                    pointwise_bound_formula(r, e, exponent_delta, alpha) - u,
                    0.0,
                );
            }
        }
        scan.push((e, report.violations, report.worst_gap));
        let certified = CutoffSpec::new(e, exponent_delta, radius)
            .map(|c| alpha <= alpha_validity(&c))
            .unwrap_or(false);
        let passed = report.passed();
        last = Some((e, report, r_cap, certified));
        if passed {
            break;
        }
    }
    match last {
        Some((e, report, r_cap, certified)) => PointwiseCheck {
            epsilon_star: report.passed().then_some(e),
            report,
            r_max_checked: r_cap,
            alpha_certified: certified,
            scan,
        },
        None => PointwiseCheck {
            report: BoundReport::new("pointwise"),
            epsilon_star: None,
            r_max_checked: 0.0,
            alpha_certified: false,
            scan,
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateCheck {
    /// `U(t) + log(T − t) − log c` with `c = 1`.
    pub lower: BoundReport,
    /// Gap to the fitted upper bound `(1/α)[log Ĉ − log(T − t)]`.
    pub upper: BoundReport,
    pub c_hat: f64,
    /// Spread of `αU(t) + log(T − t)` over the last decade of `T − t`.
    pub k_oscillation: f64,
    pub bounded: bool,
    /// Rows `(t, U, lower_gap, upper_k)` for plotting.
    pub rows: Vec<[f64; 4]>,
}

impl ToKv for RateCheck {
    fn to_kv(&self) -> KvBlock {
        KvBlock::new()
            .nested("lower", self.lower.to_kv())
            .nested("upper", self.upper.to_kv())
            .real("C_hat", self.c_hat)
            .real("k_oscillation", self.k_oscillation)
            .text("bounded", self.bounded)
    }
}

/// Tolerance for the lower rate bound.
pub const LOWER_RATE_TOL: f64 = 1e-6;
/// Largest accepted spread of `k(t)` over the last decade.
pub const MAX_K_OSCILLATION: f64 = 0.2;

/// Checks `U(t) ≥ −log(T − t)` (lower bound with `c = 1`) and measures the
/// constant of the upper bound, `Ĉ = exp sup_t [αU(t) + log(T − t)]`.
pub fn verify_rate(trace: &Trace, blowup_time: f64, alpha: f64) -> RateCheck {
    let mut lower = BoundReport::new("rate_lower");
    let mut upper = BoundReport::new("rate_upper");
    let mut rows = Vec::new();
    let mut ks = Vec::new();
    for (&t, &u) in trace.times.iter().zip(&trace.center_values) {
        if !(t < blowup_time) {
            continue;
        }
        let log_gap = (blowup_time - t).ln();
        let lower_gap = u + log_gap;
        lower.record(lower_gap, LOWER_RATE_TOL);
        let k = alpha * u + log_gap;
        ks.push((blowup_time - t, k));
        rows.push([t, u, lower_gap, k]);
    }
    let k_sup = ks.iter().map(|&(_, k)| k).fold(f64::NEG_INFINITY, f64::max);
    for &(_, k) in &ks {
        upper.record((k_sup - k) / alpha, 0.0);
    }
    let min_gap = ks.iter().map(|&(g, _)| g).fold(f64::INFINITY, f64::min);
    let (k_lo, k_hi) = ks
        .iter()
        .filter(|&&(g, _)| g <= 10.0 * min_gap)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, k)| {
            (lo.min(k), hi.max(k))
        });
    let k_oscillation = k_hi - k_lo;
    RateCheck {
        lower,
        upper,
        c_hat: k_sup.exp(),
        k_oscillation,
        bounded: k_oscillation.is_finite() && k_oscillation <= MAX_K_OSCILLATION,
        rows,
    }
}

pub const NONNEG_TOL: f64 = 1e-10;
pub const SPACE_MONO_TOL: f64 = 1e-8;
pub const TIME_MONO_TOL: f64 = 1e-8;

/// Counts violations of `u ≥ 0`, radial nonincrease, and (when `check_time`)
/// `U` nondecreasing. `worst_gap` is the smallest slack among all checks.
pub fn verify_monotonicity(trace: &Trace, check_time: bool) -> BoundReport {
    let mut report = BoundReport::new("monotonicity");
    for snap in &trace.snapshots {
        let p = &snap.profile;
        let scale = 1.0 + p.max().max(0.0);
        for &u in p.values() {
            report.record(u, NONNEG_TOL);
        }
        for d in p.forward_differences() {
            report.record(-d, SPACE_MONO_TOL * scale);
        }
    }
    if check_time {
        for w in trace.center_values.windows(2) {
            report.record(w[1] - w[0], TIME_MONO_TOL);
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub blew_up: bool,
    pub t_end: f64,
    pub t_hat: Option<f64>,
    pub slope: Option<f64>,
}

impl ToKv for RunSummary {
    fn to_kv(&self) -> KvBlock {
        KvBlock::new()
            .text("blew_up", self.blew_up)
            .real("t_end", self.t_end)
            .real("T_hat", self.t_hat.unwrap_or(f64::NAN))
            .real("slope", self.slope.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientComparison {
    pub with: RunSummary,
    pub without: RunSummary,
    /// `max (u_with − u_without) / (1 + max u_without)` over lockstep states.
    pub worst_excess: f64,
    pub lockstep_steps: usize,
    pub dominance_ok: bool,
}

impl ToKv for GradientComparison {
    fn to_kv(&self) -> KvBlock {
        KvBlock::new()
            .nested("with", self.with.to_kv())
            .nested("without", self.without.to_kv())
            .real("worst_excess", self.worst_excess)
            .text("lockstep_steps", self.lockstep_steps)
            .text("dominance_ok", self.dominance_ok)
    }
}

pub const DOMINANCE_TOL: f64 = 1e-6;

fn summarize(trace: &Trace) -> RunSummary {
    let t_hat = trace.blew_up.then(|| estimate_t(trace).ok()).flatten();
    let slope = t_hat
        .and_then(|t| fit_rate(trace, t).ok())
        .map(|f| f.slope_m);
    RunSummary {
        blew_up: trace.blew_up,
        t_end: trace.t_end,
        t_hat,
        slope,
    }
}

/// Runs `damped` and `reference` on a shared time grid and checks
/// `u_damped ≤ u_reference` nodewise, then solves each separately to fit
/// blow-up time and rate.
pub fn compare_runs(
    damped: &ProblemSpec,
    reference: &ProblemSpec,
    config: &SolverConfig,
) -> Result<GradientComparison> {
    let dr = damped.grid().dr();
    let mut a = solver::Stepper::new(damped.u0().values().len());
    let mut b = solver::Stepper::new(reference.u0().values().len());
    let mut ua = damped.u0().values().to_vec();
    let mut ub = reference.u0().values().to_vec();
    let mut t = 0.0;
    let mut steps = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    let max_of = |u: &[f64]| u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    loop {
        let scale = 1.0 + max_of(&ub);
        let excess = ua
            .iter()
            .zip(&ub)
            .map(|(x, y)| x - y)
            .fold(f64::NEG_INFINITY, f64::max);
        worst_excess = worst_excess.max(excess / scale);
        if max_of(&ua) >= config.u_cutoff || max_of(&ub) >= config.u_cutoff || t >= config.t_max {
            break;
        }
        let mut dt = solver::stable_dt(&ua, config, damped, dr)
            .min(solver::stable_dt(&ub, config, reference, dr));
        if t + dt > config.t_max {
            dt = config.t_max - t;
        }
        if dt < MIN_STEP {
            return Err(Error::StepUnderflow { t, dt });
        }
        if !a.advance(&mut ua, dt, damped, dr) || !b.advance(&mut ub, dt, reference, dr) {
            return Err(Error::NonFiniteState { t: t + dt });
        }
        t += dt;
        steps += 1;
    }

    let with = summarize(&solver::solve(damped, config)?);
    let without = summarize(&solver::solve(reference, config)?);
    let order_ok = match (with.blew_up, without.blew_up) {
        (true, true) => {
            with.t_end >= without.t_end
                && with.t_hat.unwrap_or(f64::INFINITY) >= without.t_hat.unwrap_or(0.0)
        }
        (true, false) => false,
        _ => true,
    };
    Ok(GradientComparison {
        dominance_ok: worst_excess <= DOMINANCE_TOL && order_ok,
        with,
        without,
        worst_excess,
        lockstep_steps: steps,
    })
}

/// Damped problem as given against the same problem with `h ≡ 0`.
pub fn compare_gradient_effect(
    problem: &ProblemSpec,
    config: &SolverConfig,
) -> Result<GradientComparison> {
    let damped = if problem.gradient == GradientTerm::None {
        problem.with_gradient(GradientTerm::quadratic())
    } else {
        problem.clone()
    };
    compare_runs(&damped, &problem.with_gradient(GradientTerm::None), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Profile, RadialGrid};

    /// `U = k − m log(T − t)` sampled at evenly spaced `U` levels up to
    /// `u_top`; `T − t` is formed by exact subtraction.
    pub(crate) fn synthetic(blowup_time: f64, m: f64, k: f64, u_cutoff: f64) -> Trace {
        let u_start = (k - m * blowup_time.ln()).max(0.0) + 0.01;
        let u_top = u_cutoff + 0.5;
        let count = 400;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for j in 0..=count {
            let level = u_start + (u_top - u_start) * j as f64 / count as f64;
            let t = blowup_time - ((k - level) / m).exp();
            if times.last().is_some_and(|&last| t <= last) {
                continue;
            }
            times.push(t);
            values.push(k - m * (blowup_time - t).ln());
        }
        let g = RadialGrid::new(1.0, 4).unwrap();
        let t_end = *times.last().unwrap();
        Trace {
            dts: std::iter::once(0.0)
                .chain(times.windows(2).map(|w| w[1] - w[0]))
                .collect(),
            center_values: values,
            snapshots: vec![Snapshot {
                t: t_end,
                profile: Profile::zeros(g),
            }],
            blew_up: true,
            t_end,
            step_count: times.len() - 1,
            u_cutoff,
            times,
        }
    }

    #[test]
    fn line_fit_is_exact_on_lines() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-15 && (f.intercept - 2.0).abs() < 1e-15);
        assert!((f.correlation + 1.0).abs() < 1e-15);
        assert!(fit_line(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn estimate_t_on_pure_log() {
        let trace = synthetic(1.0, 1.0, 0.0, 12.0);
        assert!((estimate_t(&trace).unwrap() - 1.0).abs() < 1e-10);
        let trace = synthetic(2.0, 1.0, 0.3, 12.0);
        assert!((estimate_t(&trace).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn estimate_t_requires_blowup() {
        let mut trace = synthetic(1.0, 1.0, 0.0, 12.0);
        trace.blew_up = false;
        assert_eq!(estimate_t(&trace), Err(Error::NoBlowup));
    }

    #[test]
    fn estimate_t_rejects_non_blowup_shape() {
        let mut trace = synthetic(1.0, 1.0, 0.0, 12.0);
        // oscillating tail: not a logarithmic singularity
        for (j, u) in trace.center_values.iter_mut().enumerate() {
            if *u > 8.0 {
                *u = 10.0 + 3.0 * ((j as f64) * 1.7).sin();
            }
        }
        assert!(matches!(
            estimate_t(&trace),
            Err(Error::PoorFit(_)) | Err(Error::WindowEmpty { .. })
        ));
    }

    #[test]
    fn fit_rate_examples() {
        let trace = synthetic(1.0, 1.0, 0.0, 12.0);
        let fit = fit_rate(&trace, 1.0).unwrap();
        assert!((fit.slope_m - 1.0).abs() < 1e-10);
        assert!(fit.intercept_k.abs() < 1e-9);
        assert!(fit.residual < 1e-10);
        assert!(fit.t_hat > fit.window.1);
        assert!(!fit.non_integer_slope);

        let trace = synthetic(1.0, 2.0, 3.0, 12.0);
        let fit = fit_rate(&trace, 1.0).unwrap();
        assert!((fit.slope_m - 2.0).abs() < 1e-10);
        assert!((fit.intercept_k - 3.0).abs() < 1e-9);
    }

    #[test]
    fn fit_rate_empty_window() {
        let trace = synthetic(1.0, 1.0, 0.0, 12.0);
        assert!(matches!(
            fit_rate_window(&trace, 1.0, 100.0, 200.0),
            Err(Error::WindowEmpty { .. })
        ));
    }

    #[test]
    fn rate_check_on_exact_trace() {
        let trace = synthetic(1.0, 1.0, 0.0, 12.0);
        let check = verify_rate(&trace, 1.0, 1.0);
        assert_eq!(check.lower.violations, 0);
        assert!(check.lower.worst_gap.abs() < 1e-12);
        assert!((check.c_hat - 1.0).abs() < 1e-12);
        assert!(check.bounded);
        assert_eq!(check.rows.len(), trace.times.len());
    }

    #[test]
    fn rate_check_flags_shifted_trace() {
        let mut trace = synthetic(1.0, 1.0, 0.0, 12.0);
        for u in trace.center_values.iter_mut() {
            *u -= 0.1;
        }
        let check = verify_rate(&trace, 1.0, 1.0);
        assert_eq!(check.lower.violations, trace.times.len());
        assert!((check.lower.worst_gap + 0.1).abs() < 1e-12);
    }

    fn trace_of(profiles: Vec<Vec<f64>>, radius: f64) -> Trace {
        let g = RadialGrid::new(radius, profiles[0].len() - 1).unwrap();
        let snaps: Vec<Snapshot> = profiles
            .into_iter()
            .enumerate()
            .map(|(k, v)| Snapshot {
                t: k as f64,
                profile: Profile::new(g, v).unwrap(),
            })
            .collect();
        Trace {
            times: snaps.iter().map(|s| s.t).collect(),
            center_values: snaps.iter().map(|s| s.profile.center()).collect(),
            dts: vec![0.0; snaps.len()],
            blew_up: false,
            t_end: snaps.last().unwrap().t,
            step_count: snaps.len() - 1,
            u_cutoff: 20.0,
            snapshots: snaps,
        }
    }

    #[test]
    fn monotonicity_examples() {
        let zero = trace_of(vec![vec![0.0; 5], vec![0.0; 5]], 1.0);
        let rep = verify_monotonicity(&zero, true);
        assert_eq!(rep.violations, 0);
        assert_eq!(rep.points_checked, 2 * (5 + 4) + 1);

        let bump = trace_of(vec![vec![1.0, 0.5, 0.8, 0.2, 0.0]], 1.0);
        assert_eq!(verify_monotonicity(&bump, false).violations, 1);

        let dropping = trace_of(
            vec![vec![1.0, 0.5, 0.3, 0.1, 0.0], vec![0.9, 0.5, 0.3, 0.1, 0.0]],
            1.0,
        );
        assert_eq!(verify_monotonicity(&dropping, false).violations, 0);
        assert_eq!(verify_monotonicity(&dropping, true).violations, 1);
    }

    #[test]
    fn pointwise_on_zero_profile_takes_largest_epsilon() {
        let trace = trace_of(vec![vec![0.0; 41]], 2.0);
        let check = verify_pointwise(&trace.snapshots, 0.5, 0.5, &[0.01, 0.5, 0.1], 0.1);
        assert_eq!(check.epsilon_star, Some(0.5));
        assert_eq!(check.report.violations, 0);
        assert!(check.report.points_checked > 0);
        // C^{1/m} = (2.5/0.5)^{1/2.5} < R restricts the radii
        assert!((check.r_max_checked - 5f64.powf(0.4)).abs() < 1e-12);
        assert!(!check.alpha_certified);
    }

    #[test]
    fn pointwise_admits_epsilon_dominating_the_data() {
        // the bound holds iff log C ≥ max_r [2αu(r) + m log r]
        let g = RadialGrid::new(1.0, 20).unwrap();
        let profile: Vec<f64> = g.nodes().map(|r| 6.0 * (1.0 - r)).collect();
        let trace = trace_of(vec![profile.clone()], 1.0);
        let (alpha, delta, r_min): (f64, f64, f64) = (0.5, 0.5, 0.05);
        let m = 2.0 + delta;
        let needed_log_c = g
            .nodes()
            .zip(&profile)
            .filter(|&(r, _)| r >= r_min)
            .map(|(r, u)| 2.0 * alpha * u + m * r.ln())
            .fold(f64::NEG_INFINITY, f64::max);
        let eps_ok = (2.0 + delta) / (2.0 * alpha) / needed_log_c.exp() * (1.0 - 1e-9);
        let check = verify_pointwise(
            &trace.snapshots,
            alpha,
            delta,
            &[10.0 * eps_ok, eps_ok],
            r_min,
        );
        assert_eq!(check.epsilon_star, Some(eps_ok));
        assert_eq!(check.scan.len(), 2);
        assert!(check.scan[0].1 > 0);
    }

    #[test]
    fn pointwise_reports_no_admissible_epsilon() {
        let g = RadialGrid::new(1.0, 20).unwrap();
        let profile: Vec<f64> = g.nodes().map(|r| 100.0 * (1.0 - r)).collect();
        let trace = trace_of(vec![profile], 1.0);
        let check = verify_pointwise(&trace.snapshots, 0.5, 0.5, &[1.0, 0.1], 0.05);
        assert_eq!(check.epsilon_star, None);
        assert!(check.report.violations > 0);
    }

    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn fit_rate_exact_on_synthetic(t in 0.5f64..5.0, m in 1.0f64..3.0, k in -1.0f64..2.0) {
            let trace = synthetic(t, m, k, 12.0);
            let fit = fit_rate(&trace, t).unwrap();
            prop_assert!(fit.residual < 1e-10);
            prop_assert!((fit.slope_m - m).abs() < 1e-9);
        }
    }
}

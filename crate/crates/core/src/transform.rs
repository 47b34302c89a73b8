//! Exact reference for `f(u) = e^u`, `h(s) = s²`.
//!
//! With `v = 1 − e^{−u}` the nonlinear problem becomes the linear
//! `v_t = Δv + 1`, `v(R) = 0`, and `u` blows up at `(x0, T)` exactly when
//! `v(x0, T) = 1`. The linear problem is advanced with Crank–Nicolson on the
//! same radial stencil the nonlinear solver uses, and the blow-up time is
//! located by bisecting the sub-step length inside the crossing step.

use crate::error::{Error, Result};
use crate::grid::{Profile, RadialGrid};
use crate::problem::{check_compatibility, ProblemSpec};
use crate::report::{KvBlock, ToKv};
use crate::solver::{Snapshot, Trace};
use crate::tridiag::solve_tridiagonal;

/// Values within this distance of 1 are treated as already singular.
pub const SINGULAR_GAP: f64 = 1e-15;

/// `v = 1 − e^{−u}`.
pub fn transform_forward(u: f64) -> f64 {
    -(-u).exp_m1()
}

/// `u = −log(1 − v)`.
pub fn transform_inverse(v: f64) -> Result<f64> {
    if v >= 1.0 - SINGULAR_GAP || v.is_nan() {
        return Err(Error::AtBlowup(v));
    }
    Ok(-(-v).ln_1p())
}

pub fn profile_forward(u: &Profile) -> Profile {
    u.map(transform_forward)
        .expect("forward transform of a finite profile")
}

pub fn profile_inverse(v: &Profile) -> Result<Profile> {
    let values = v
        .values()
        .iter()
        .map(|&x| transform_inverse(x))
        .collect::<Result<Vec<_>>>()?;
    Profile::new(*v.grid(), values)
}

/// `v` on the grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformField {
    pub values: Profile,
    pub t: f64,
}

impl TransformField {
    pub fn to_u(&self) -> Result<Profile> {
        profile_inverse(&self.values)
    }
}

/// Coefficients of the radial Laplacian restricted to the unknown nodes
/// `0..N` (the Dirichlet node `N` is dropped).
#[derive(Debug, Clone)]
struct RadialOperator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl RadialOperator {
    fn new(grid: &RadialGrid, n: usize) -> Self {
        let m = grid.intervals();
        let inv_dr2 = 1.0 / (grid.dr() * grid.dr());
        let nf = n as f64;
        let mut lower = vec![0.0; m];
        let mut diag = vec![-2.0 * inv_dr2; m];
        let mut upper = vec![0.0; m];
        diag[0] = -2.0 * nf * inv_dr2;
        upper[0] = 2.0 * nf * inv_dr2;
        for i in 1..m {
            let drift = (nf - 1.0) / (2.0 * i as f64) * inv_dr2;
            lower[i] = inv_dr2 - drift;
            upper[i] = inv_dr2 + drift;
        }
        upper[m - 1] = 0.0;
        Self { lower, diag, upper }
    }

    fn len(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, v: &[f64], i: usize) -> f64 {
        let mut s = self.diag[i] * v[i] + self.upper[i] * v[i + 1];
        if i > 0 {
            s += self.lower[i] * v[i - 1];
        }
        s
    }
}

/// Crank–Nicolson integrator for `v_t = Δ_h v + 1`.
#[derive(Debug, Clone)]
struct CrankNicolson {
    op: RadialOperator,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
}

impl CrankNicolson {
    fn new(grid: &RadialGrid, n: usize) -> Self {
        let op = RadialOperator::new(grid, n);
        let m = op.len();
        Self {
            op,
            lower: vec![0.0; m],
            diag: vec![0.0; m],
            upper: vec![0.0; m],
            rhs: vec![0.0; m],
            scratch: vec![0.0; m],
        }
    }

    /// Writes the state after a step of length `tau` from `v` into `out`.
    /// Both slices hold all `N + 1` nodes; the last stays zero.
    fn step_into(&mut self, v: &[f64], tau: f64, out: &mut [f64]) -> Result<()> {
        let m = self.op.len();
        let half = 0.5 * tau;
        for i in 0..m {
            self.lower[i] = -half * self.op.lower[i];
            self.diag[i] = 1.0 - half * self.op.diag[i];
            self.upper[i] = -half * self.op.upper[i];
            self.rhs[i] = v[i] + half * self.op.apply(v, i) + tau;
        }
        solve_tridiagonal(
            &self.lower,
            &self.diag,
            &self.upper,
            &self.rhs,
            &mut out[..m],
            &mut self.scratch,
        )?;
        out[m] = 0.0;
        Ok(())
    }
}

/// One Crank–Nicolson step of `v_t = Δ_h v + 1` with `v(R) = 0`.
pub fn linear_step(field: &TransformField, n: usize, dt: f64) -> Result<TransformField> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must be positive, got {dt}"),
        });
    }
    let grid = *field.values.grid();
    let mut cn = CrankNicolson::new(&grid, n);
    let mut out = vec![0.0; grid.len()];
    cn.step_into(field.values.values(), dt, &mut out)?;
    Ok(TransformField {
        values: Profile::new(grid, out)?,
        t: field.t + dt,
    })
}

/// Solution of `Δ_h w + 1 = 0`, `w(R) = 0`.
pub fn discrete_steady_state(grid: &RadialGrid, n: usize) -> Result<Profile> {
    let op = RadialOperator::new(grid, n);
    let m = op.len();
    let rhs = vec![-1.0; m];
    let mut w = vec![0.0; grid.len()];
    let mut scratch = vec![0.0; m];
    solve_tridiagonal(
        &op.lower,
        &op.diag,
        &op.upper,
        &rhs,
        &mut w[..m],
        &mut scratch,
    )?;
    Profile::new(*grid, w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    /// Crank–Nicolson step.
    pub dt: f64,
    /// Bisection tolerance on the blow-up time; `None` means `1e-10 (1 + T)`.
    pub tol_t: Option<f64>,
    /// Give up past this time.
    pub horizon: f64,
    /// Relative change of `max v` per step below which `v` counts as settled.
    pub steady_tol: f64,
}

impl OracleOptions {
    /// Step `dr² / (2n)`, where the Crank–Nicolson update is still monotone.
    pub fn for_problem(problem: &ProblemSpec) -> Self {
        let dr = problem.grid().dr();
        Self {
            dt: dr * dr / (2.0 * problem.n as f64),
            tol_t: None,
            horizon: 1e3,
            steady_tol: 1e-12,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol_t = Some(tol);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// `+∞` when the solution is global.
    pub blowup_time: f64,
    pub r_blow: f64,
    pub global: bool,
    pub grid_intervals: usize,
    pub tol: f64,
    pub max_steady: f64,
    /// Largest nodewise decrease of `v` over one step (0 when monotone).
    pub worst_decrease: f64,
    /// Largest `max v − v(0)` seen at step boundaries.
    pub worst_off_center: f64,
    pub steps: usize,
}

impl ToKv for OracleResult {
    fn to_kv(&self) -> KvBlock {
        KvBlock::new()
            .real("T", self.blowup_time)
            .real("r_blow", self.r_blow)
            .text("global", self.global)
            .text("grid.N", self.grid_intervals)
            .real("tol", self.tol)
            .real("max_steady", self.max_steady)
            .real("worst_decrease", self.worst_decrease)
            .real("worst_off_center", self.worst_off_center)
            .text("steps", self.steps)
    }
}

/// The Crank–Nicolson march from `v0` on a fixed step. Sub-step states are
/// taken from the last full step so that sampling never perturbs the march.
struct LinearMarch {
    grid: RadialGrid,
    cn: CrankNicolson,
    dt: f64,
    v: Vec<f64>,
    next: Vec<f64>,
    steps: usize,
}

impl LinearMarch {
    fn new(problem: &ProblemSpec, dt: f64) -> Result<Self> {
        if !problem.is_model_case() {
            return Err(Error::NotModelCase);
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "oracle.dt",
                reason: format!("must be positive, got {dt}"),
            });
        }
        let grid = *problem.grid();
        let v0 = profile_forward(problem.u0());
        let top = v0.max();
        if top >= 1.0 - SINGULAR_GAP {
            return Err(Error::AtBlowup(top));
        }
        Ok(Self {
            grid,
            cn: CrankNicolson::new(&grid, problem.n),
            dt,
            v: v0.into_values(),
            next: vec![0.0; grid.len()],
            steps: 0,
        })
    }

    fn t(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Computes the next full step into `self.next` without committing it.
    fn propose(&mut self) -> Result<()> {
        self.cn.step_into(&self.v, self.dt, &mut self.next)
    }

    fn commit(&mut self) {
        std::mem::swap(&mut self.v, &mut self.next);
        self.steps += 1;
    }

    fn peek(&mut self, tau: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.grid.len()];
        if tau == 0.0 {
            out.copy_from_slice(&self.v);
        } else {
            self.cn.step_into(&self.v, tau, &mut out)?;
        }
        Ok(out)
    }
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Locates the first time at which `max v` reaches 1, or decides that the
/// solution is global.
pub fn find_blowup(problem: &ProblemSpec, opts: &OracleOptions) -> Result<OracleResult> {
    let mut march = LinearMarch::new(problem, opts.dt)?;
    let grid = march.grid;
    let steady = discrete_steady_state(&grid, problem.n)?;
    let max_steady = steady.max();
    let mut result = OracleResult {
        blowup_time: f64::INFINITY,
        r_blow: f64::NAN,
        global: true,
        grid_intervals: grid.intervals(),
        tol: opts.tol_t.unwrap_or(f64::NAN),
        max_steady,
        worst_decrease: 0.0,
        worst_off_center: 0.0,
        steps: 0,
    };

    let below_steady = march
        .v
        .iter()
        .zip(steady.values())
        .all(|(&v, &w)| v <= w + SINGULAR_GAP);
    if max_steady < 1.0 && below_steady {
        return Ok(result);
    }

    let track_monotone = check_compatibility(problem) >= 0.0;
    let mut last_max = max_of(&march.v);
    loop {
        march.propose()?;
        let new_max = max_of(&march.next);
        if track_monotone {
            for (a, b) in march.v.iter().zip(&march.next) {
                result.worst_decrease = result.worst_decrease.max(a - b);
            }
        }
        if new_max >= 1.0 {
            let t0 = march.t();
            let (lo, hi) = bisect_crossing(&mut march, opts.tol_t)?;
            let crossing = march.peek(hi)?;
            let blowup_time = t0 + 0.5 * (lo + hi);
            let at_blow = Profile::new(grid, crossing)?;
            result.blowup_time = blowup_time;
            result.r_blow = grid.node(at_blow.argmax());
            result.global = false;
            result.tol = opts.tol_t.unwrap_or(1e-10 * (1.0 + blowup_time));
            result.steps = march.steps;
            return Ok(result);
        }
        march.commit();
        result.worst_off_center = result.worst_off_center.max(new_max - march.v[0]);
        result.steps = march.steps;

        let settled =
            (new_max - last_max).abs() <= opts.steady_tol * new_max.abs().max(f64::MIN_POSITIVE);
        if settled && max_steady < 1.0 {
            return Ok(result);
        }
        last_max = new_max;
        if march.t() > opts.horizon {
            return Err(Error::Inconclusive {
                t: march.t(),
                max_v: new_max,
            });
        }
    }
}

/// Bisection on the sub-step length `tau ∈ (0, dt]` of the crossing step.
fn bisect_crossing(march: &mut LinearMarch, tol: Option<f64>) -> Result<(f64, f64)> {
    let t0 = march.t();
    let (mut lo, mut hi) = (0.0, march.dt);
    loop {
        let width_tol = tol.unwrap_or(1e-10 * (1.0 + t0 + hi));
        let mid = 0.5 * (lo + hi);
        if hi - lo <= width_tol || mid <= lo || mid >= hi {
            return Ok((lo, hi));
        }
        if max_of(&march.peek(mid)?) >= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// `v` at each of the (sorted, nonnegative) `times`.
pub fn sample_fields(
    problem: &ProblemSpec,
    opts: &OracleOptions,
    times: &[f64],
) -> Result<Vec<TransformField>> {
    let mut march = LinearMarch::new(problem, opts.dt)?;
    let grid = march.grid;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if t < march.t() {
            return Err(Error::InvalidParameter {
                name: "times",
                reason: "sample times must be sorted and nonnegative".into(),
            });
        }
        while march.t() + march.dt <= t {
            march.propose()?;
            march.commit();
        }
        let tau = t - march.t();
        let values = march.peek(tau)?;
        out.push(TransformField {
            values: Profile::new(grid, values)?,
            t,
        });
    }
    Ok(out)
}

/// Reference `u(·, t)` for `t < T`.
pub fn oracle_profile(problem: &ProblemSpec, opts: &OracleOptions, t: f64) -> Result<Profile> {
    let fields = sample_fields(problem, opts, &[t])?;
    fields[0].to_u()
}

/// Times at which [`oracle_trace`] samples: `bulk` uniform points on
/// `[0, T(1 − 10^{-2})]`, then `per_decade` points per decade of `T − t`
/// down to `T − min_gap`. Empty when `T` is not a positive finite time.
pub fn approach_times(blowup_time: f64, bulk: usize, per_decade: usize, min_gap: f64) -> Vec<f64> {
    if !(blowup_time > 0.0 && blowup_time.is_finite()) {
        return Vec::new();
    }
    let t_switch = blowup_time * (1.0 - 1e-2);
    let mut times: Vec<f64> = (0..bulk.max(1))
        .map(|k| t_switch * k as f64 / bulk.max(1) as f64)
        .collect();
    let start = (blowup_time * 1e-2).log10();
    let stop = min_gap.log10();
    let count = ((start - stop) * per_decade as f64).ceil() as usize;
    for j in 0..=count {
        let gap = 10f64
            .powf(start - j as f64 / per_decade as f64)
            .max(min_gap);
        let t = blowup_time - gap;
        if times.last().is_none_or(|&last| t > last) {
            times.push(t);
        }
    }
    times
}

/// Oracle-generated trace of `u = −log(1 − v)` at `times` (all before `T`).
pub fn oracle_trace(
    problem: &ProblemSpec,
    opts: &OracleOptions,
    times: &[f64],
    u_cutoff: f64,
) -> Result<Trace> {
    let fields = sample_fields(problem, opts, times)?;
    let mut snapshots = Vec::with_capacity(fields.len());
    for f in &fields {
        snapshots.push(Snapshot {
            t: f.t,
            profile: f.to_u()?,
        });
    }
    let center_values: Vec<f64> = snapshots.iter().map(|s| s.profile.center()).collect();
    let mut dts = vec![0.0];
    dts.extend(times.windows(2).map(|w| w[1] - w[0]));
    let top = snapshots
        .last()
        .map(|s| s.profile.max())
        .unwrap_or(f64::NEG_INFINITY);
    Ok(Trace {
        times: times.to_vec(),
        center_values,
        dts,
        blew_up: top >= u_cutoff,
        t_end: times.last().copied().unwrap_or(0.0),
        step_count: times.len().saturating_sub(1),
        u_cutoff,
        snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{make_problem, GradientTerm, Reaction};

    fn model(n: usize, radius: f64, intervals: usize, u0: impl Fn(f64) -> f64) -> ProblemSpec {
        let g = RadialGrid::new(radius, intervals).unwrap();
        make_problem(
            n,
            radius,
            Reaction::Exponential,
            GradientTerm::quadratic(),
            u0,
            g,
        )
        .unwrap()
    }

    #[test]
    fn forward_examples() {
        assert_eq!(transform_forward(0.0), 0.0);
        assert!((transform_forward(2f64.ln()) - 0.5).abs() < 1e-16);
        assert!((transform_forward(20.0) - (1.0 - (-20f64).exp())).abs() <= f64::EPSILON);
        assert!((transform_forward(1e-20) - 1e-20).abs() < 1e-35);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(transform_inverse(0.0).unwrap(), 0.0);
        assert!((transform_inverse(0.5).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(transform_inverse(1.0), Err(Error::AtBlowup(1.0)));
    }

    #[test]
    fn steady_state_is_fixed_point_of_step() {
        let g = RadialGrid::new(1.0, 50).unwrap();
        for n in 1..4 {
            let w = discrete_steady_state(&g, n).unwrap();
            // the stencil is exact on quadratics
            for (r, x) in g.nodes().zip(w.values()) {
                assert!((x - (1.0 - r * r) / (2.0 * n as f64)).abs() < 1e-12);
            }
            let field = TransformField {
                values: w.clone(),
                t: 0.0,
            };
            let next = linear_step(&field, n, 0.01).unwrap();
            assert!(next.values.sup_distance(&w) < 1e-12);
        }
    }

    #[test]
    fn one_step_from_rest_is_bounded_by_dt() {
        let g = RadialGrid::new(2.0, 40).unwrap();
        let field = TransformField {
            values: Profile::zeros(g),
            t: 0.0,
        };
        let dt = 0.01;
        let next = linear_step(&field, 1, dt).unwrap();
        assert!(next.values.max() > 0.0 && next.values.max() <= dt);
        assert_eq!(next.t, dt);
    }

    #[test]
    fn step_halving_is_third_order_locally() {
        // coarse grid keeps dt·|λ_max| small so the stiff modes do not mask the order
        let g = RadialGrid::new(1.0, 10).unwrap();
        let start = TransformField {
            values: Profile::from_fn(g, |r| 0.3 * (std::f64::consts::FRAC_PI_2 * r).cos()).unwrap(),
            t: 0.0,
        };
        let gap = |dt: f64| {
            let one = linear_step(&start, 2, dt).unwrap();
            let half =
                linear_step(&linear_step(&start, 2, dt / 2.0).unwrap(), 2, dt / 2.0).unwrap();
            one.values.sup_distance(&half.values)
        };
        let (a, b) = (gap(2e-4), gap(1e-4));
        let ratio = a / b;
        assert!(ratio > 7.0 && ratio < 9.0, "ratio {ratio}");
    }

    #[test]
    fn small_ball_is_global() {
        let p = model(1, 0.5, 100, |_| 0.0);
        let res = find_blowup(&p, &OracleOptions::for_problem(&p)).unwrap();
        assert!(res.global);
        assert!(res.blowup_time.is_infinite());
        let w = discrete_steady_state(p.grid(), 1).unwrap();
        assert!((res.max_steady - w.max()).abs() < 1e-15);
        assert!((res.max_steady - 0.125).abs() < 1e-12);
    }

    #[test]
    fn large_ball_blows_up_at_center() {
        let p = model(1, 2.0, 100, |_| 0.0);
        let opts = OracleOptions::for_problem(&p);
        let res = find_blowup(&p, &opts).unwrap();
        assert!(!res.global);
        assert_eq!(res.r_blow, 0.0);
        assert!(
            res.blowup_time > 1.0 && res.blowup_time < 1.5,
            "{}",
            res.blowup_time
        );
        assert!(res.worst_decrease <= 1e-15);
        assert!(res.worst_off_center <= 1e-15);
        // max v at T is 1 to within the bisection width
        let at_t = sample_fields(&p, &opts, &[res.blowup_time]).unwrap();
        assert!((at_t[0].values.max() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn data_at_singularity_is_rejected() {
        let p = model(1, 1.0, 20, |r| 40.0 * (1.0 - r));
        let err = find_blowup(&p, &OracleOptions::for_problem(&p)).unwrap_err();
        assert!(matches!(err, Error::AtBlowup(_)));
    }

    #[test]
    fn non_model_case_is_rejected() {
        let g = RadialGrid::new(1.0, 20).unwrap();
        let p = make_problem(
            1,
            1.0,
            Reaction::Exponential,
            GradientTerm::None,
            |_| 0.0,
            g,
        )
        .unwrap();
        assert_eq!(
            find_blowup(&p, &OracleOptions::for_problem(&p)),
            Err(Error::NotModelCase)
        );
    }

    #[test]
    fn horizon_is_enforced() {
        let p = model(1, 2.0, 20, |_| 0.0);
        let opts = OracleOptions {
            horizon: 0.1,
            ..OracleOptions::for_problem(&p)
        };
        assert!(matches!(
            find_blowup(&p, &opts),
            Err(Error::Inconclusive { .. })
        ));
    }

    #[test]
    fn approach_times_for_global_solution_is_empty() {
        assert!(approach_times(f64::INFINITY, 10, 5, 1e-9).is_empty());
    }

    #[test]
    fn approach_times_are_sorted_and_end_near_t() {
        let times = approach_times(1.3, 50, 10, 1e-10);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        assert!((1.3 - times.last().unwrap() - 1e-10).abs() < 1e-15);
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_exact_to_1e12(u in 0.0f64..10.0) {
            let back = transform_inverse(transform_forward(u)).unwrap();
            prop_assert!((back - u).abs() <= 1e-12 * u);
        }

        // v is stored with absolute spacing ~ε near 1, so u = −log(1 − v)
        // cannot be recovered better than ~ε·e^u.
        #[test]
        fn round_trip_within_conditioning(u in 10.0f64..30.0) {
            let back = transform_inverse(transform_forward(u)).unwrap();
            prop_assert!((back - u).abs() <= 2.0 * f64::EPSILON * u.exp());
        }
    }
}

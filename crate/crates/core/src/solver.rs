//! Method-of-lines solver for the radial problem
//!
//! ```text
//! u_t = u_rr + (n-1)/r u_r − h(|u_r|) + f(u),   u_r(0,t) = 0,   u(R,t) = 0
//! ```
//!
//! Second-order central differences in `r`, explicit midpoint in `t`, and a
//! step size limited by both diffusion and the reaction stiffness so that the
//! approach to blow-up is resolved.

use crate::error::{Error, Result};
use crate::grid::Profile;
use crate::problem::ProblemSpec;

/// Steps below this size are treated as a stalled run.
pub const MIN_STEP: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Upper bound on the time step.
    pub dt0: f64,
    /// The run counts as blown up once `max u` reaches this value.
    pub u_cutoff: f64,
    pub safety: f64,
    pub t_max: f64,
    /// Keep every `snapshot_stride`-th state as a full profile.
    pub snapshot_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt0: 1e-3,
            u_cutoff: 20.0,
            safety: 0.5,
            t_max: 50.0,
            snapshot_stride: 100,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.dt0 > 0.0) {
            return bad("solver.dt0", "must be positive");
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return bad("solver.safety", "must lie in (0, 1]");
        }
        if !(self.t_max > 0.0) {
            return bad("solver.t_max", "must be positive");
        }
        if self.snapshot_stride == 0 {
            return bad("solver.snapshot_stride", "must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub profile: Profile,
}

/// Time history of a run. `center_values[k]` is `U(t) = u(0, t)` at
/// `times[k]`, and `dts[k]` is the step that led there (0 for the first entry).
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub times: Vec<f64>,
    pub center_values: Vec<f64>,
    pub dts: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub blew_up: bool,
    pub t_end: f64,
    pub step_count: usize,
    pub u_cutoff: f64,
}

impl Trace {
    pub fn final_snapshot(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }
}

/// Discrete radial Laplacian. The origin uses the symmetric limit
/// `2n (u_1 − u_0) / dr²`; the boundary entry is left at zero.
pub fn radial_laplacian(p: &Profile, n: usize) -> Profile {
    let mut out = vec![0.0; p.values().len()];
    laplacian_into(p.values(), n, p.grid().dr(), &mut out);
    Profile::new(*p.grid(), out).expect("laplacian of a finite profile")
}

fn laplacian_into(u: &[f64], n: usize, dr: f64, out: &mut [f64]) {
    let m = u.len() - 1;
    let inv_dr2 = 1.0 / (dr * dr);
    let drift = (n as f64 - 1.0) / (2.0 * dr * dr);
    out[0] = 2.0 * n as f64 * (u[1] - u[0]) * inv_dr2;
    for i in 1..m {
        // (n-1)/r_i * (u_{i+1} - u_{i-1}) / (2 dr) with r_i = i dr
        out[i] =
            (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_dr2 + drift * (u[i + 1] - u[i - 1]) / i as f64;
    }
    out[m] = 0.0;
}

fn rhs_into(u: &[f64], problem: &ProblemSpec, dr: f64, out: &mut [f64]) {
    laplacian_into(u, problem.n, dr, out);
    let m = u.len() - 1;
    out[0] += problem.reaction.value(u[0]);
    let inv_2dr = 1.0 / (2.0 * dr);
    for i in 1..m {
        let slope = (u[i + 1] - u[i - 1]) * inv_2dr;
        out[i] += problem.reaction.value(u[i]) - problem.gradient.value(slope.abs());
    }
    out[m] = 0.0;
}

/// Right-hand side `Δ_h u − h(|u_r|) + f(u)`; zero at `r = R`.
pub fn rhs(p: &Profile, problem: &ProblemSpec) -> Profile {
    let mut out = vec![0.0; p.values().len()];
    rhs_into(p.values(), problem, p.grid().dr(), &mut out);
    Profile::new(*p.grid(), out).expect("rhs of a finite profile")
}

/// Reusable buffers for the midpoint step.
pub(crate) struct Stepper {
    k: Vec<f64>,
    mid: Vec<f64>,
}

impl Stepper {
    pub(crate) fn new(len: usize) -> Self {
        Self {
            k: vec![0.0; len],
            mid: vec![0.0; len],
        }
    }

    pub(crate) fn advance(
        &mut self,
        u: &mut [f64],
        dt: f64,
        problem: &ProblemSpec,
        dr: f64,
    ) -> bool {
        let m = u.len() - 1;
        rhs_into(u, problem, dr, &mut self.k);
        for ((mid, &ui), &ki) in self.mid[..m].iter_mut().zip(&u[..m]).zip(&self.k) {
            *mid = ui + 0.5 * dt * ki;
        }
        self.mid[m] = 0.0;
        rhs_into(&self.mid, problem, dr, &mut self.k);
        let mut finite = true;
        for (ui, &ki) in u[..m].iter_mut().zip(&self.k) {
            *ui += dt * ki;
            finite &= ui.is_finite();
        }
        u[m] = 0.0;
        finite
    }
}

/// One explicit midpoint step with the boundary node pinned to zero.
pub fn step(p: &Profile, dt: f64, problem: &ProblemSpec) -> Result<Profile> {
    let mut u = p.values().to_vec();
    let mut stepper = Stepper::new(u.len());
    if !stepper.advance(&mut u, dt, problem, p.grid().dr()) {
        return Err(Error::NonFiniteState { t: f64::NAN });
    }
    Profile::new(*p.grid(), u)
}

pub(crate) fn stable_dt(u: &[f64], config: &SolverConfig, problem: &ProblemSpec, dr: f64) -> f64 {
    let n = problem.n as f64;
    // max_i (n-1)/r_i is attained at r_1 = dr
    let drift = (n - 1.0) / dr;
    let diffusion = dr * dr / (2.0 * n + dr * drift);
    let stiffness = u
        .iter()
        .map(|&x| problem.reaction.derivative(x))
        .fold(0.0, f64::max);
    let reaction = 1.0 / (1.0 + stiffness);
    config.safety * diffusion.min(reaction).min(config.dt0)
}

/// `safety · min(dr²/(2n + dr·max (n−1)/r_i), 1/(1 + max f'(u)), dt0)`.
/// Independent of the gradient term.
pub fn adaptive_dt(p: &Profile, config: &SolverConfig, problem: &ProblemSpec) -> f64 {
    stable_dt(p.values(), config, problem, p.grid().dr())
}

/// Integrates from `u0` until `max u ≥ u_cutoff` or `t ≥ t_max`.
pub fn solve(problem: &ProblemSpec, config: &SolverConfig) -> Result<Trace> {
    config.validate()?;
    let grid = *problem.grid();
    let dr = grid.dr();
    let max_u0 = problem.u0().max();
    if !(config.u_cutoff > max_u0) {
        return Err(Error::CutoffBelowData {
            cutoff: config.u_cutoff,
            max_u0,
        });
    }

    let mut u = problem.u0().values().to_vec();
    let mut stepper = Stepper::new(u.len());
    let mut t = 0.0;
    let mut times = vec![t];
    let mut center_values = vec![u[0]];
    let mut dts = vec![0.0];
    let mut snapshots = vec![Snapshot {
        t,
        profile: problem.u0().clone(),
    }];
    let mut steps = 0usize;
    let max_of = |u: &[f64]| u.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let blew_up = loop {
        if max_of(&u) >= config.u_cutoff {
            break true;
        }
        if t >= config.t_max {
            break false;
        }
        let mut dt = stable_dt(&u, config, problem, dr);
        if t + dt > config.t_max {
            dt = config.t_max - t;
        }
        if dt < MIN_STEP {
            return Err(Error::StepUnderflow { t, dt });
        }
        if !stepper.advance(&mut u, dt, problem, dr) {
            return Err(Error::NonFiniteState { t: t + dt });
        }
        t += dt;
        steps += 1;
        times.push(t);
        center_values.push(u[0]);
        dts.push(dt);
        if steps.is_multiple_of(config.snapshot_stride) {
            snapshots.push(Snapshot {
                t,
                profile: Profile::new(grid, u.clone())?,
            });
        }
    };
    if snapshots.last().map(|s| s.t) != Some(t) {
        snapshots.push(Snapshot {
            t,
            profile: Profile::new(grid, u)?,
        });
    }
    Ok(Trace {
        times,
        center_values,
        dts,
        snapshots,
        blew_up,
        t_end: t,
        step_count: steps,
        u_cutoff: config.u_cutoff,
    })
}

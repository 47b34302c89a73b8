//! Problem description for `u_t = Δu − h(|∇u|) + f(u)` on a ball, plus the
//! hypothesis checks on `f`, `h` and `u0`.
//!
//! Construction rejects data that is not admissible at all (negative, not
//! vanishing at `r = R`, increasing in `r`). The finer hypotheses (strict
//! slope, compatibility, growth of `h`) are only reported, since a run may
//! proceed with them violated.

use crate::error::{Error, Result};
use crate::grid::{Profile, RadialGrid};
use crate::report::{KvBlock, ToKv};
use crate::solver::radial_laplacian;

/// Tolerance used when validating sampled initial data.
pub const DATA_TOL: f64 = 1e-12;

/// Reaction term `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reaction {
    /// `f(u) = e^u`
    Exponential,
    /// `f(u) = u |u|^{p-1}`, `p > 1`
    Power { p: f64 },
}

impl Reaction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::InvalidParameter {
                name: "reaction.p",
                reason: format!("must exceed 1, got {p}"),
            });
        }
        Ok(Reaction::Power { p })
    }

    pub fn value(&self, u: f64) -> f64 {
        match *self {
            Reaction::Exponential => u.exp(),
            Reaction::Power { p } => u * u.abs().powf(p - 1.0),
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match *self {
            Reaction::Exponential => u.exp(),
            Reaction::Power { p } => p * u.abs().powf(p - 1.0),
        }
    }
}

/// Gradient damping term `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradientTerm {
    None,
    /// `h(s) = s^q` with the constant `k` claimed for `s h'(s) − h(s) ≤ k s^q`.
    Power {
        q: f64,
        k: f64,
    },
}

impl GradientTerm {
    pub fn power(q: f64, k: f64) -> Result<Self> {
        if !(q > 1.0) {
            return Err(Error::InvalidParameter {
                name: "gradient.q",
                reason: format!("must exceed 1, got {q}"),
            });
        }
        if !(k >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "gradient.K",
                reason: format!("must be nonnegative, got {k}"),
            });
        }
        Ok(GradientTerm::Power { q, k })
    }

    /// The model damping `h(s) = s^2` with `K = 1`.
    pub fn quadratic() -> Self {
        GradientTerm::Power { q: 2.0, k: 1.0 }
    }

    pub fn value(&self, s: f64) -> f64 {
        match *self {
            GradientTerm::None => 0.0,
            GradientTerm::Power { q: 2.0, .. } => s * s,
            GradientTerm::Power { q, .. } => s.powf(q),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match *self {
            GradientTerm::None => 0.0,
            GradientTerm::Power { q, .. } => q * s.powf(q - 1.0),
        }
    }
}

/// Sampled `u0` together with the parameters of the strict-slope condition.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub values: Profile,
    /// Required decrease `u0_r ≤ -slope_delta`.
    pub slope_delta: f64,
    /// Inner radius from which the slope condition is enforced.
    pub r_min_slope: f64,
}

impl InitialData {
    pub fn new(values: Profile) -> Self {
        let r_min_slope = values.grid().dr();
        Self {
            values,
            slope_delta: 0.0,
            r_min_slope,
        }
    }

    pub fn with_slope_condition(mut self, slope_delta: f64, r_min_slope: f64) -> Self {
        self.slope_delta = slope_delta;
        self.r_min_slope = r_min_slope;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub n: usize,
    pub radius: f64,
    pub reaction: Reaction,
    pub gradient: GradientTerm,
    pub initial: InitialData,
}

impl ProblemSpec {
    pub fn grid(&self) -> &RadialGrid {
        self.initial.values.grid()
    }

    pub fn u0(&self) -> &Profile {
        &self.initial.values
    }

    /// `f(u) = e^u` with `h(s) = s^2`, the case with an exact linearization.
    pub fn is_model_case(&self) -> bool {
        self.reaction == Reaction::Exponential
            && matches!(self.gradient, GradientTerm::Power { q, .. } if q == 2.0)
    }

    pub fn with_gradient(&self, gradient: GradientTerm) -> Self {
        Self {
            gradient,
            ..self.clone()
        }
    }

    /// Same problem resampled on another grid of the same radius.
    pub fn resampled(&self, grid: RadialGrid, u0: impl Fn(f64) -> f64) -> Result<Self> {
        let initial = InitialData::new(Profile::from_fn(grid, u0)?)
            .with_slope_condition(self.initial.slope_delta, self.initial.r_min_slope);
        Self::from_initial(self.n, self.radius, self.reaction, self.gradient, initial)
    }

    pub fn from_initial(
        n: usize,
        radius: f64,
        reaction: Reaction,
        gradient: GradientTerm,
        initial: InitialData,
    ) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::NonpositiveRadius(radius));
        }
        if n < 1 {
            return Err(Error::BadDimension(n));
        }
        let grid = initial.values.grid();
        if (grid.radius() - radius).abs() > DATA_TOL * radius {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!("grid radius {} differs from R = {radius}", grid.radius()),
            });
        }
        let u = initial.values.values();
        for (r, &value) in grid.nodes().zip(u) {
            if value < -DATA_TOL {
                return Err(Error::NegativeInitialData { r, value });
            }
        }
        let last = u[u.len() - 1];
        if last.abs() > DATA_TOL {
            return Err(Error::BoundaryNonzero(last));
        }
        for (r, diff) in grid.nodes().zip(initial.values.forward_differences()) {
            if diff > DATA_TOL {
                return Err(Error::NotNonincreasing { r, diff });
            }
        }
        Ok(Self {
            n,
            radius,
            reaction,
            gradient,
            initial,
        })
    }
}

/// Samples `u0` on `grid` and validates the result.
pub fn make_problem(
    n: usize,
    radius: f64,
    reaction: Reaction,
    gradient: GradientTerm,
    u0: impl Fn(f64) -> f64,
    grid: RadialGrid,
) -> Result<ProblemSpec> {
    if !(radius > 0.0) {
        return Err(Error::NonpositiveRadius(radius));
    }
    if n < 1 {
        return Err(Error::BadDimension(n));
    }
    let initial = InitialData::new(Profile::from_fn(grid, u0)?);
    ProblemSpec::from_initial(n, radius, reaction, gradient, initial)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialReport {
    pub nonincreasing: bool,
    pub boundary_zero: bool,
    pub slope_ok: bool,
    /// Largest radial derivative on `[r_min_slope, R]`.
    pub worst_slope: f64,
}

impl ToKv for RadialReport {
    fn to_kv(&self) -> KvBlock {
        KvBlock::new()
            .text("nonincreasing", self.nonincreasing)
            .text("boundary_zero", self.boundary_zero)
            .text("slope_ok", self.slope_ok)
            .real("worst_slope", self.worst_slope)
    }
}

pub fn check_radial_conditions(problem: &ProblemSpec) -> RadialReport {
    check_radial_conditions_tol(problem, DATA_TOL)
}

pub fn check_radial_conditions_tol(problem: &ProblemSpec, tol: f64) -> RadialReport {
    let u0 = problem.u0();
    let grid = u0.grid();
    let nonincreasing = u0.forward_differences().all(|d| d <= tol);
    let last = u0.values()[grid.intervals()];
    let boundary_zero = last.abs() <= tol;

    let r_min = problem.initial.r_min_slope;
    let worst_slope = grid
        .nodes()
        .zip(u0.radial_derivative())
        .filter(|&(r, _)| r >= r_min - tol)
        .map(|(_, d)| d)
        .fold(f64::NEG_INFINITY, f64::max);
    let slope_ok = worst_slope <= -problem.initial.slope_delta + tol;
    RadialReport {
        nonincreasing,
        boundary_zero,
        slope_ok,
        worst_slope,
    }
}

/// Minimum of `Δ_h u0 + f(u0) − h(|u0_r|)` over the origin and interior nodes.
pub fn check_compatibility(problem: &ProblemSpec) -> f64 {
    let u0 = problem.u0();
    let lap = radial_laplacian(u0, problem.n);
    let du = u0.radial_derivative();
    let u = u0.values();
    (0..u.len() - 1)
        .map(|i| {
            let slope = if i == 0 { 0.0 } else { du[i].abs() };
            lap.values()[i] + problem.reaction.value(u[i]) - problem.gradient.value(slope)
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    /// `min K s^q − (s h'(s) − h(s))` over the samples.
    pub m2_margin: f64,
    /// Largest sampled `h(s)/s^2` with `s ≥ 1`.
    pub max_quadratic_ratio: f64,
    pub quadratic_growth_ok: bool,
}

impl ToKv for GrowthReport {
    fn to_kv(&self) -> KvBlock {
        KvBlock::new()
            .real("m2_margin", self.m2_margin)
            .real("max_quadratic_ratio", self.max_quadratic_ratio)
            .text("quadratic_growth_ok", self.quadratic_growth_ok)
    }
}

/// Samples `s_j = j * s_max / samples`, `j = 1..=samples`.
///
/// For `h(s) = s^q` the ratio `h(s)/s^2 = s^{q-2}` stays bounded as
/// `s → ∞` exactly when `q ≤ 2`; that is what `quadratic_growth_ok` reports.
pub fn check_h_hypotheses(gradient: &GradientTerm, s_max: f64, samples: usize) -> GrowthReport {
    let samples = samples.max(1);
    let (q, k) = match *gradient {
        GradientTerm::None => (2.0, 0.0),
        GradientTerm::Power { q, k } => (q, k),
    };
    let mut m2_margin = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    for j in 1..=samples {
        let s = s_max * j as f64 / samples as f64;
        let h = gradient.value(s);
        let excess = s * gradient.derivative(s) - h;
        m2_margin = m2_margin.min(k * s.powf(q) - excess);
        if s >= 1.0 {
            max_ratio = max_ratio.max(h / (s * s));
        }
    }
    let quadratic_growth_ok = match gradient {
        GradientTerm::None => true,
        GradientTerm::Power { q, .. } => *q <= 2.0,
    };
    GrowthReport {
        m2_margin,
        max_quadratic_ratio: max_ratio,
        quadratic_growth_ok,
    }
}

//! Closed-form pointwise and rate bounds, and sampled margins of the
//! structural inequalities behind them.
//!
//! Two auxiliary families are used: `F(u) = e^{2αu}` (α ∈ (0, 1/2]) for the
//! pointwise bound and `F(u) = e^{αu}` (α ∈ (0, 1]) for the rate bound. The
//! radial cutoff is `c_ε(r) = ε r^{1+δ}`.

use crate::error::{Error, Result};
use crate::problem::{GradientTerm, Reaction};
use crate::report::{KvBlock, ToKv};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FKind {
    /// `F(u) = e^{2αu}`
    Exp2Alpha,
    /// `F(u) = e^{αu}`
    ExpAlpha,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FFamily {
    kind: FKind,
    alpha: f64,
}

impl FFamily {
    pub fn new(kind: FKind, alpha: f64) -> Result<Self> {
        let (ok, range) = match kind {
            FKind::Exp2Alpha => (alpha > 0.0 && alpha <= 0.5, "(0, 1/2]"),
            FKind::ExpAlpha => (alpha > 0.0 && alpha <= 1.0, "(0, 1]"),
        };
        if !ok {
            return Err(Error::BadAlpha { alpha, range });
        }
        Ok(Self { kind, alpha })
    }

    pub fn exp2_alpha(alpha: f64) -> Result<Self> {
        Self::new(FKind::Exp2Alpha, alpha)
    }

    pub fn exp_alpha(alpha: f64) -> Result<Self> {
        Self::new(FKind::ExpAlpha, alpha)
    }

    pub fn kind(&self) -> FKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Exponent rate `a` with `F(u) = e^{a u}`.
    fn rate(&self) -> f64 {
        match self.kind {
            FKind::Exp2Alpha => 2.0 * self.alpha,
            FKind::ExpAlpha => self.alpha,
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        (self.rate() * u).exp()
    }

    pub fn d1(&self, u: f64) -> f64 {
        self.rate() * self.value(u)
    }

    pub fn d2(&self, u: f64) -> f64 {
        let a = self.rate();
        a * a * self.value(u)
    }
}

/// `G(s) = ∫_s^∞ du / F(u)`.
pub fn g_of(family: &FFamily, s: f64) -> Result<f64> {
    if s.is_nan() {
        return Err(Error::NonpositiveArgument(s));
    }
    let a = family.rate();
    Ok((-a * s).exp() / a)
}

/// Inverse of [`g_of`]: `−log(a y) / a` for `F = e^{a u}`.
pub fn g_inverse(family: &FFamily, y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::NonpositiveArgument(y));
    }
    let a = family.rate();
    Ok(-(a * y).ln() / a)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    pub epsilon: f64,
    pub exponent_delta: f64,
    pub radius: f64,
}

impl CutoffSpec {
    pub fn new(epsilon: f64, exponent_delta: f64, radius: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("must be positive, got {epsilon}"),
            });
        }
        if !(exponent_delta > 0.0) {
            return Err(Error::InvalidParameter {
                name: "exponent_delta",
                reason: format!("must be positive, got {exponent_delta}"),
            });
        }
        if !(radius > 0.0) {
            return Err(Error::NonpositiveRadius(radius));
        }
        Ok(Self {
            epsilon,
            exponent_delta,
            radius,
        })
    }

    /// `c_ε(r) = ε r^{1+δ}`
    pub fn c(&self, r: f64) -> f64 {
        self.epsilon * r.powf(1.0 + self.exponent_delta)
    }

    pub fn c_prime(&self, r: f64) -> f64 {
        let d = self.exponent_delta;
        self.epsilon * (1.0 + d) * r.powf(d)
    }

    pub fn c_second(&self, r: f64) -> f64 {
        let d = self.exponent_delta;
        self.epsilon * d * (1.0 + d) * r.powf(d - 1.0)
    }

    /// `∫_0^r c_ε = ε r^{2+δ} / (2+δ)`
    pub fn integral(&self, r: f64) -> f64 {
        let d = self.exponent_delta;
        self.epsilon * r.powf(2.0 + d) / (2.0 + d)
    }

    /// `c''/c + (n−1)/r · c'/c − (n−1)/r²`, which for the power cutoff is
    /// `δ(n+δ)/r²`.
    pub fn a_coefficient(&self, r: f64, n: usize) -> f64 {
        let d = self.exponent_delta;
        d * (n as f64 + d) / (r * r)
    }
}

/// Largest α for which the pointwise bound is certified:
/// `1 / (2 + 4 ε R^δ (1+δ))`.
pub fn alpha_validity(cutoff: &CutoffSpec) -> f64 {
    let d = cutoff.exponent_delta;
    1.0 / (2.0 + 4.0 * cutoff.epsilon * cutoff.radius.powf(d) * (1.0 + d))
}

/// Constants of the pointwise and rate bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub alpha: f64,
    /// `C` of the pointwise bound, `(2+δ)/(2εα)`.
    pub c_upper: f64,
    /// `m = 2 + δ`.
    pub m: f64,
    /// `c = 1/λ` of the lower rate bound.
    pub c_lower: f64,
}

impl BoundParams {
    pub fn pointwise(epsilon: f64, exponent_delta: f64, alpha: f64) -> Self {
        Self {
            alpha,
            c_upper: (2.0 + exponent_delta) / (2.0 * epsilon * alpha),
            m: 2.0 + exponent_delta,
            c_lower: 1.0,
        }
    }

    /// Radius where the pointwise bound crosses zero, `C^{1/m}`.
    pub fn zero_radius(&self) -> f64 {
        self.c_upper.powf(1.0 / self.m)
    }
}

/// `(1/2α)[log C − m log r]` without any validity checks.
pub fn pointwise_bound_formula(r: f64, epsilon: f64, exponent_delta: f64, alpha: f64) -> f64 {
    let p = BoundParams::pointwise(epsilon, exponent_delta, alpha);
    (p.c_upper.ln() - p.m * r.ln()) / (2.0 * alpha)
}

/// Pointwise bound `u(r,t) ≤ (1/2α)[log C − m log r]` for certified α.
pub fn pointwise_bound(r: f64, cutoff: &CutoffSpec, alpha: f64) -> Result<f64> {
    FFamily::exp2_alpha(alpha)?;
    let limit = alpha_validity(cutoff);
    if alpha > limit * (1.0 + 1e-15) {
        return Err(Error::AlphaOutOfValidity { alpha, limit });
    }
    if !(r > 0.0 && r <= cutoff.radius) {
        return Err(Error::RadiusOutOfRange {
            r,
            max: cutoff.radius,
        });
    }
    Ok(pointwise_bound_formula(
        r,
        cutoff.epsilon,
        cutoff.exponent_delta,
        alpha,
    ))
}

fn check_time(t: f64, blowup_time: f64) -> Result<f64> {
    if !(t < blowup_time) {
        return Err(Error::TimeAtOrPastT { t, blowup_time });
    }
    Ok(blowup_time - t)
}

/// `(1/α)[log C − log(T − t)]`
pub fn upper_rate_bound(t: f64, blowup_time: f64, alpha: f64, c: f64) -> Result<f64> {
    FFamily::exp_alpha(alpha)?;
    if !(c > 0.0) {
        return Err(Error::NonpositiveArgument(c));
    }
    let gap = check_time(t, blowup_time)?;
    Ok((c.ln() - gap.ln()) / alpha)
}

/// `log c − log(T − t)`
pub fn lower_rate_bound(t: f64, blowup_time: f64, c_lower: f64) -> Result<f64> {
    if !(c_lower > 0.0) {
        return Err(Error::NonpositiveArgument(c_lower));
    }
    let gap = check_time(t, blowup_time)?;
    Ok(c_lower.ln() - gap.ln())
}

/// `count` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count)
            .map(|k| {
                if k == count - 1 {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

/// Minimum of a sampled inequality left-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginReport {
    pub name: String,
    pub min: f64,
    /// Sample coordinates where the minimum occurs (`(u, r)` or `(u, |∇u|)`).
    pub at: (f64, f64),
    pub points: usize,
}

impl MarginReport {
    fn scan(name: &str, samples: impl Iterator<Item = (f64, f64, f64)>) -> Self {
        let mut report = MarginReport {
            name: name.to_string(),
            min: f64::INFINITY,
            at: (f64::NAN, f64::NAN),
            points: 0,
        };
        for (x, y, value) in samples {
            report.points += 1;
            if value < report.min || value.is_nan() {
                report.min = value;
                report.at = (x, y);
            }
        }
        report
    }
}

impl ToKv for MarginReport {
    fn to_kv(&self) -> KvBlock {
        KvBlock::new()
            .text("name", &self.name)
            .real("min", self.min)
            .real("at.x", self.at.0)
            .real("at.y", self.at.1)
            .text("points", self.points)
    }
}

/// Parameters of the cutoff-weighted inequality
/// `f'F − fF' − 2c'F'F + c²F''F² − 2^{q−1}K c^q F^q F' + A F ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffInequality {
    pub family: FFamily,
    pub cutoff: CutoffSpec,
    pub reaction: Reaction,
    pub k: f64,
    pub q: f64,
    pub n: usize,
}

impl CutoffInequality {
    pub fn lhs(&self, u: f64, r: f64) -> f64 {
        let (ff, c) = (&self.family, &self.cutoff);
        let f = self.reaction.value(u);
        let df = self.reaction.derivative(u);
        let big_f = ff.value(u);
        let d1 = ff.d1(u);
        let d2 = ff.d2(u);
        let cr = c.c(r);
        df * big_f - f * d1 - 2.0 * c.c_prime(r) * d1 * big_f + cr * cr * d2 * big_f * big_f
            - 2f64.powf(self.q - 1.0) * self.k * cr.powf(self.q) * big_f.powf(self.q) * d1
            + c.a_coefficient(r, self.n) * big_f
    }
}

/// Minimum of the cutoff-weighted inequality over the product grid.
pub fn margin_condition_02(
    ineq: &CutoffInequality,
    u_grid: &[f64],
    r_grid: &[f64],
) -> MarginReport {
    MarginReport::scan(
        "condition_02",
        u_grid
            .iter()
            .flat_map(|&u| r_grid.iter().map(move |&r| (u, r, ineq.lhs(u, r)))),
    )
}

/// `f'F − F'f + F''g² − F'[h'(g) g − h(g)]` at `(u, g = |∇u|)`.
pub fn poa_lhs(
    family: &FFamily,
    reaction: &Reaction,
    gradient: &GradientTerm,
    u: f64,
    g: f64,
) -> f64 {
    let big_f = family.value(u);
    let d1 = family.d1(u);
    let g2 = g * g;
    reaction.derivative(u) * big_f - d1 * reaction.value(u) + family.d2(u) * g2
        - d1 * (gradient.derivative(g) * g - gradient.value(g))
}

/// Minimum of the gradient inequality over the product grid `u_grid × g_grid`.
pub fn margin_condition_poa(
    family: &FFamily,
    reaction: &Reaction,
    gradient: &GradientTerm,
    u_grid: &[f64],
    g_grid: &[f64],
) -> MarginReport {
    MarginReport::scan(
        "condition_poa",
        u_grid.iter().flat_map(|&u| {
            g_grid
                .iter()
                .map(move |&g| (u, g, poa_lhs(family, reaction, gradient, u, g)))
        }),
    )
}

/// Minimum of the gradient inequality over `(u, |∇u|)` pairs taken from
/// solution states.
pub fn margin_condition_poa_pairs(
    family: &FFamily,
    reaction: &Reaction,
    gradient: &GradientTerm,
    pairs: impl IntoIterator<Item = (f64, f64)>,
) -> MarginReport {
    MarginReport::scan(
        "condition_poa_on_states",
        pairs
            .into_iter()
            .map(|(u, g)| (u, g, poa_lhs(family, reaction, gradient, u, g))),
    )
}

//! Run configuration loaded from a TOML file.
//!
//! Keys are read by dotted path so that errors name the offending key
//! (`grid.N`, `u0.kind`, ...). Problem keys and `grid.N` are required; the
//! solver, oracle, estimates and analysis sections fall back to defaults.

use std::path::{Path, PathBuf};

use blowup_core::transform::OracleOptions;
use blowup_core::{
    GradientTerm, InitialData, ProblemSpec, Profile, RadialGrid, Reaction, SolverConfig,
};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialKind {
    Zero,
    /// `a (R² − r²)`
    Parabolic(f64),
    /// `a (R − r)`
    Linear(f64),
    /// piecewise linear through `(r_j, u_j)`
    Table(Vec<f64>, Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatesConfig {
    pub alpha: f64,
    pub exponent_delta: f64,
    pub epsilon_list: Vec<f64>,
    pub u_max: f64,
    pub grid_density: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub r_min: Option<f64>,
    /// `(U_lo, U_hi)` for the rate fit; `None` means `[u_cutoff − 10, u_cutoff − 2]`.
    pub fit_window: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub tol_t: Option<f64>,
    pub dt: Option<f64>,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub radius: f64,
    pub reaction: Reaction,
    pub gradient: GradientTerm,
    pub initial: InitialKind,
    pub intervals: usize,
    pub solver: SolverConfig,
    pub oracle: OracleConfig,
    pub estimates: EstimatesConfig,
    pub analysis: AnalysisConfig,
    pub output_dir: Option<PathBuf>,
    /// SHA-256 of the raw configuration bytes.
    pub hash: String,
    pub refine: u32,
}

fn lookup<'a>(table: &'a Table, key: &str) -> Option<&'a Value> {
    let mut parts = key.split('.');
    let mut current = table.get(parts.next()?)?;
    for part in parts {
        current = current.as_table()?.get(part)?;
    }
    Some(current)
}

fn bad(key: &str, reason: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn as_f64(key: &str, v: &Value) -> Result<f64, CliError> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(bad(key, "expected a number")),
    }
}

fn req<'a>(table: &'a Table, key: &str) -> Result<&'a Value, CliError> {
    lookup(table, key).ok_or_else(|| CliError::MissingKey(key.to_string()))
}

fn req_f64(table: &Table, key: &str) -> Result<f64, CliError> {
    as_f64(key, req(table, key)?)
}

fn opt_f64(table: &Table, key: &str) -> Result<Option<f64>, CliError> {
    lookup(table, key).map(|v| as_f64(key, v)).transpose()
}

fn req_usize(table: &Table, key: &str) -> Result<usize, CliError> {
    match req(table, key)? {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(bad(key, "expected a nonnegative integer")),
    }
}

fn opt_usize(table: &Table, key: &str) -> Result<Option<usize>, CliError> {
    if lookup(table, key).is_none() {
        return Ok(None);
    }
    req_usize(table, key).map(Some)
}

fn req_str<'a>(table: &'a Table, key: &str) -> Result<&'a str, CliError> {
    req(table, key)?
        .as_str()
        .ok_or_else(|| bad(key, "expected a string"))
}

fn opt_f64_list(table: &Table, key: &str) -> Result<Option<Vec<f64>>, CliError> {
    match lookup(table, key) {
        None => Ok(None),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| as_f64(key, v))
            .collect::<Result<_, _>>()
            .map(Some),
        Some(_) => Err(bad(key, "expected an array of numbers")),
    }
}

fn reaction(table: &Table) -> Result<Reaction, CliError> {
    match req_str(table, "reaction.kind")? {
        "exponential" => Ok(Reaction::Exponential),
        "power" => {
            let p = req_f64(table, "reaction.p")?;
            Reaction::power(p).map_err(|e| bad("reaction.p", e.to_string()))
        }
        other => Err(bad(
            "reaction.kind",
            format!("unknown kind `{other}` (exponential, power)"),
        )),
    }
}

fn gradient(table: &Table) -> Result<GradientTerm, CliError> {
    match req_str(table, "gradient.kind")? {
        "none" => Ok(GradientTerm::None),
        "power" => {
            let q = req_f64(table, "gradient.q")?;
            let k = req_f64(table, "gradient.K")?;
            GradientTerm::power(q, k).map_err(|e| bad("gradient", e.to_string()))
        }
        other => Err(bad(
            "gradient.kind",
            format!("unknown kind `{other}` (none, power)"),
        )),
    }
}

fn initial(table: &Table) -> Result<InitialKind, CliError> {
    match req_str(table, "u0.kind")? {
        "zero" => Ok(InitialKind::Zero),
        "parabolic" => Ok(InitialKind::Parabolic(req_f64(table, "u0.a")?)),
        "linear" => Ok(InitialKind::Linear(req_f64(table, "u0.a")?)),
        "table" => {
            let r =
                opt_f64_list(table, "u0.r")?.ok_or_else(|| CliError::MissingKey("u0.r".into()))?;
            let u =
                opt_f64_list(table, "u0.u")?.ok_or_else(|| CliError::MissingKey("u0.u".into()))?;
            if r.len() != u.len() || r.len() < 2 {
                return Err(bad(
                    "u0.u",
                    "u0.r and u0.u need the same length, at least 2",
                ));
            }
            if r.windows(2).any(|w| w[1] <= w[0]) {
                return Err(bad("u0.r", "must be strictly increasing"));
            }
            Ok(InitialKind::Table(r, u))
        }
        other => Err(bad(
            "u0.kind",
            format!("unknown kind `{other}` (zero, parabolic, linear, table)"),
        )),
    }
}

impl InitialKind {
    pub fn eval(&self, r: f64, radius: f64) -> f64 {
        match self {
            InitialKind::Zero => 0.0,
            InitialKind::Parabolic(a) => a * (radius * radius - r * r),
            InitialKind::Linear(a) => a * (radius - r),
            InitialKind::Table(rs, us) => {
                let j = rs.partition_point(|&x| x <= r).clamp(1, rs.len() - 1);
                let (r0, r1) = (rs[j - 1], rs[j]);
                let w = ((r - r0) / (r1 - r0)).clamp(0.0, 1.0);
                us[j - 1] + w * (us[j] - us[j - 1])
            }
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path, refine: u32) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let text = String::from_utf8(bytes).map_err(|_| bad("<file>", "not valid UTF-8"))?;
        Self::parse(&text, refine)
    }

    pub fn parse(text: &str, refine: u32) -> Result<Self, CliError> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Parse(e.to_string()))?;
        let n = req_usize(&table, "n")?;
        let radius = req_f64(&table, "R")?;
        let scale = 1u64 << refine;
        let intervals = req_usize(&table, "grid.N")? * scale as usize;
        let halve = |dt: f64| dt / scale as f64;

        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            dt0: halve(opt_f64(&table, "solver.dt0")?.unwrap_or(defaults.dt0)),
            u_cutoff: opt_f64(&table, "solver.u_cutoff")?.unwrap_or(defaults.u_cutoff),
            safety: opt_f64(&table, "solver.safety")?.unwrap_or(defaults.safety),
            t_max: opt_f64(&table, "solver.t_max")?.unwrap_or(defaults.t_max),
            snapshot_stride: opt_usize(&table, "solver.snapshot_stride")?
                .unwrap_or(defaults.snapshot_stride),
        };
        solver
            .validate()
            .map_err(|e| bad("solver", e.to_string()))?;

        let oracle = OracleConfig {
            tol_t: opt_f64(&table, "oracle.tol_T")?,
            dt: opt_f64(&table, "oracle.dt")?.map(halve),
            horizon: opt_f64(&table, "oracle.horizon")?.unwrap_or(1e3),
        };

        let epsilon_list = opt_f64_list(&table, "estimates.epsilon_list")?
            .unwrap_or_else(|| (0..=12).map(|k| 10f64.powi(-k)).collect());
        if epsilon_list.iter().any(|&e| !(e > 0.0)) {
            return Err(bad("estimates.epsilon_list", "entries must be positive"));
        }
        let estimates = EstimatesConfig {
            alpha: opt_f64(&table, "estimates.alpha")?.unwrap_or(0.5),
            exponent_delta: opt_f64(&table, "estimates.exponent_delta")?.unwrap_or(0.5),
            epsilon_list,
            u_max: opt_f64(&table, "estimates.u_max")?.unwrap_or(30.0),
            grid_density: opt_usize(&table, "estimates.grid_density")?.unwrap_or(200),
        };
        if estimates.grid_density < 2 {
            return Err(bad("estimates.grid_density", "must be at least 2"));
        }

        let fit_window = match opt_f64_list(&table, "analysis.fit_window")? {
            None => None,
            Some(w) if w.len() == 2 && w[0] < w[1] => Some((w[0], w[1])),
            Some(_) => {
                return Err(bad(
                    "analysis.fit_window",
                    "expected [U_lo, U_hi] with U_lo < U_hi",
                ))
            }
        };
        let analysis = AnalysisConfig {
            r_min: opt_f64(&table, "analysis.r_min")?,
            fit_window,
        };

        let output_dir = match lookup(&table, "output.dir") {
            None => None,
            Some(v) => Some(PathBuf::from(
                v.as_str()
                    .ok_or_else(|| bad("output.dir", "expected a string"))?,
            )),
        };

        Ok(Self {
            n,
            radius,
            reaction: reaction(&table)?,
            gradient: gradient(&table)?,
            initial: initial(&table)?,
            intervals,
            solver,
            oracle,
            estimates,
            analysis,
            output_dir,
            hash: hex::encode(Sha256::digest(text.as_bytes())),
            refine,
        })
    }

    pub fn grid(&self) -> Result<RadialGrid, CliError> {
        RadialGrid::new(self.radius, self.intervals).map_err(|e| bad("grid.N", e.to_string()))
    }

    pub fn problem(&self) -> Result<ProblemSpec, CliError> {
        let grid = self.grid()?;
        let radius = self.radius;
        let values = Profile::from_fn(grid, |r| self.initial.eval(r, radius))
            .map_err(|e| bad("u0", e.to_string()))?;
        Ok(ProblemSpec::from_initial(
            self.n,
            self.radius,
            self.reaction,
            self.gradient,
            InitialData::new(values),
        )?)
    }

    pub fn oracle_options(&self, problem: &ProblemSpec) -> OracleOptions {
        let mut opts = OracleOptions::for_problem(problem);
        if let Some(dt) = self.oracle.dt {
            opts = opts.with_dt(dt);
        }
        if let Some(tol) = self.oracle.tol_t {
            opts = opts.with_tol(tol);
        }
        opts.horizon = self.oracle.horizon;
        opts
    }

    pub fn r_min(&self) -> f64 {
        self.analysis.r_min.unwrap_or(0.05 * self.radius)
    }

    pub fn fit_window(&self) -> (f64, f64) {
        self.analysis
            .fit_window
            .unwrap_or((self.solver.u_cutoff - 10.0, self.solver.u_cutoff - 2.0))
    }

    /// Comment lines written at the top of every output file.
    pub fn header(&self, command: &str) -> Vec<String> {
        vec![
            format!("blowup {command}"),
            format!("config_sha256={}", self.hash),
            format!(
                "n={} R={} grid.N={} dr={} refine={}",
                self.n,
                self.radius,
                self.intervals,
                blowup_core::report::fmt_f64(self.radius / self.intervals as f64),
                self.refine
            ),
        ]
    }
}

//! Uniform radial mesh on `[0, R]` and nodal profiles living on it.

use crate::error::{Error, Result};

/// Uniform mesh `r_i = i * dr`, `i = 0..=N`, with `dr = R / N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    radius: f64,
    intervals: usize,
}

impl RadialGrid {
    pub fn new(radius: f64, intervals: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::NonpositiveRadius(radius));
        }
        if intervals < 3 {
            return Err(Error::GridTooCoarse(intervals));
        }
        Ok(Self { radius, intervals })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Number of intervals `N`.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dr(&self) -> f64 {
        self.radius / self.intervals as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.intervals {
            self.radius
        } else {
            i as f64 * self.dr()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.node(i))
    }

    /// Same radius with `2^k` times as many intervals.
    pub fn refined(&self, k: u32) -> Self {
        Self {
            radius: self.radius,
            intervals: self.intervals << k,
        }
    }
}

/// Values of a radial function at the nodes of a [`RadialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    grid: RadialGrid,
    values: Vec<f64>,
}

impl Profile {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteValue { node, value });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    pub fn zeros(grid: RadialGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn center(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Index of the first node attaining the maximum.
    pub fn argmax(&self) -> usize {
        let max = self.max();
        self.values.iter().position(|&v| v == max).unwrap_or(0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// `u_{i+1} - u_i` for `i = 0..N`.
    pub fn forward_differences(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }

    /// First radial derivative: central differences inside, one-sided second
    /// order at both endpoints.
    pub fn radial_derivative(&self) -> Vec<f64> {
        let u = &self.values;
        let n = u.len();
        let h = self.grid.dr();
        let mut d = vec![0.0; n];
        d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
        for i in 1..n - 1 {
            d[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
        }
        d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
        d
    }

    pub fn sup_distance(&self, other: &Profile) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

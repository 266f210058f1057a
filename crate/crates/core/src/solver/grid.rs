use crate::error::{Error, Result};

/// Uniform discretization of `[0, T] x [s_min, s_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub t_steps: usize,
    pub dt: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub s_steps: usize,
    pub ds: f64,
}

impl Grid {
    pub fn new(
        maturity: f64,
        t_steps: usize,
        s_min: f64,
        s_max: f64,
        s_steps: usize,
    ) -> Result<Self> {
        if !(maturity > 0.0 && maturity.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "maturity must be positive, got {maturity}"
            )));
        }
        if t_steps < 1 {
            return Err(Error::InvalidParameter(
                "grid needs at least one time step".to_string(),
            ));
        }
        if s_steps < 2 {
            return Err(Error::InvalidParameter(
                "grid needs at least two price intervals".to_string(),
            ));
        }
        if !(s_min >= 0.0 && s_max > s_min && s_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "price range [{s_min}, {s_max}] is invalid"
            )));
        }
        Ok(Self {
            t_steps,
            dt: maturity / t_steps as f64,
            s_min,
            s_max,
            s_steps,
            ds: (s_max - s_min) / s_steps as f64,
        })
    }

    /// Builds a grid from step sizes, which must divide the ranges evenly.
    pub fn from_step_sizes(
        maturity: f64,
        dt: f64,
        s_min: f64,
        s_max: f64,
        ds: f64,
    ) -> Result<Self> {
        if !(dt > 0.0 && ds > 0.0) {
            return Err(Error::InvalidParameter(
                "step sizes must be positive".to_string(),
            ));
        }
        let t_steps = (maturity / dt).round();
        let s_steps = ((s_max - s_min) / ds).round();
        if (t_steps * dt - maturity).abs() > 1e-9 * maturity.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "time step {dt} does not divide maturity {maturity}"
            )));
        }
        if (s_steps * ds - (s_max - s_min)).abs() > 1e-9 * s_max.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "price step {ds} does not divide [{s_min}, {s_max}]"
            )));
        }
        Self::new(maturity, t_steps as usize, s_min, s_max, s_steps as usize)
    }

    /// Same ranges with both step sizes halved.
    pub fn refined(&self) -> Self {
        Self::new(
            self.maturity(),
            self.t_steps * 2,
            self.s_min,
            self.s_max,
            self.s_steps * 2,
        )
        .expect("refining a valid grid")
    }

    pub fn maturity(&self) -> f64 {
        self.dt * self.t_steps as f64
    }

    pub fn nodes(&self) -> usize {
        self.s_steps + 1
    }

    pub fn price(&self, m: usize) -> f64 {
        if m == self.s_steps {
            self.s_max
        } else {
            self.s_min + m as f64 * self.ds
        }
    }

    pub fn prices(&self) -> Vec<f64> {
        (0..self.nodes()).map(|m| self.price(m)).collect()
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.t_steps {
            self.maturity()
        } else {
            k as f64 * self.dt
        }
    }

    /// Bracketing nodes and weight of `x` for linear interpolation.
    pub fn locate(&self, x: f64) -> Result<(usize, f64)> {
        if !(x >= self.s_min && x <= self.s_max) {
            return Err(Error::Domain(format!(
                "price {x} outside grid range [{}, {}]",
                self.s_min, self.s_max
            )));
        }
        let pos = (x - self.s_min) / self.ds;
        let m = (pos.floor() as usize).min(self.s_steps - 1);
        let w = (pos - m as f64).clamp(0.0, 1.0);
        Ok((m, w))
    }
}

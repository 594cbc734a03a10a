//! Fixed-step classical Runge–Kutta integration with sampled output.

use crate::error::{Error, Result};
use crate::linalg::DenseVector;

/// Default RK4 step.
pub const DEFAULT_DT: f64 = 1e-4;
/// Default output sampling interval.
pub const DEFAULT_SAMPLE_EVERY: f64 = 0.01;

/// Time grid of a fixed-step run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_end: f64,
    pub dt: f64,
    pub sample_every: f64,
}

impl TimeGrid {
    pub fn new(t_end: f64, dt: f64, sample_every: f64) -> Self {
        Self { t_end, dt, sample_every }
    }

    /// Grid with the default step and sampling interval.
    pub fn with_defaults(t_end: f64) -> Self {
        Self::new(t_end, DEFAULT_DT, DEFAULT_SAMPLE_EVERY)
    }

    /// `(number of steps, steps per sample)`.
    pub fn resolve(&self) -> Result<(usize, usize)> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::InvalidArgument(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        let steps = (self.t_end / self.dt).round();
        if (steps * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(Error::InvalidArgument(format!(
                "t_end {} is not a multiple of dt {}",
                self.t_end, self.dt
            )));
        }
        let stride = (self.sample_every / self.dt).round();
        if stride < 1.0 || (stride * self.dt - self.sample_every).abs() > 1e-9 * self.sample_every {
            return Err(Error::InvalidArgument(format!(
                "sample interval {} is not an integer multiple of dt {}",
                self.sample_every, self.dt
            )));
        }
        Ok((steps as usize, stride as usize))
    }

    /// Sample times `0, Δ, 2Δ, …` up to `t_end`.
    pub fn sample_times(&self) -> Result<Vec<f64>> {
        let (steps, stride) = self.resolve()?;
        Ok((0..=steps).step_by(stride).map(|s| s as f64 * self.dt).collect())
    }
}

/// Integrate `ẋ = f(t, x)` with classical RK4. `f` writes the derivative
/// into its third argument. `on_sample` sees the state at `t = 0` and every
/// `sample_every` thereafter. Aborts with [`Error::Diverged`] on the first
/// non-finite state.
pub fn rk4<F, S>(mut f: F, x0: &[f64], grid: TimeGrid, mut on_sample: S) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    S: FnMut(f64, &[f64]),
{
    let (steps, stride) = grid.resolve()?;
    let dt = grid.dt;
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    on_sample(0.0, &x);
    for step in 0..steps {
        let t = step as f64 * dt;
        f(t, &x, &mut k1);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        f(t + 0.5 * dt, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        f(t + 0.5 * dt, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = x[i] + dt * k3[i];
        }
        f(t + dt, &tmp, &mut k4);
        let mut finite = true;
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            finite &= x[i].is_finite();
        }
        let t_next = (step + 1) as f64 * dt;
        if !finite {
            return Err(Error::Diverged { time: t_next });
        }
        if (step + 1) % stride == 0 {
            on_sample(t_next, &x);
        }
    }
    Ok(x)
}

/// Sampled states and outputs of a simulation.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DenseVector>,
    pub outputs: Vec<DenseVector>,
}

impl Trajectory {
    /// First output channel over all samples.
    pub fn output_series(&self, channel: usize) -> Vec<f64> {
        self.outputs.iter().map(|y| y[channel]).collect()
    }

    pub fn final_state(&self) -> Option<&DenseVector> {
        self.states.last()
    }
}

use serde::Serialize;

use super::{norm, LagrangianSpec};
use crate::error::{Error, Result};
use crate::extended::ExtReal;

/// Piecewise-linear path on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    t0: f64,
    step: f64,
    states: Vec<Vec<f64>>,
}

impl Trajectory {
    /// Nodes `t0 + i*step`, `i = 0..states.len()`.
    pub fn new(t0: f64, step: f64, states: Vec<Vec<f64>>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "time step {step} must be positive"
            )));
        }
        if states.len() < 2 {
            return Err(Error::InvalidConfig(
                "trajectory needs at least two nodes".into(),
            ));
        }
        let dim = states[0].len();
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        for (i, y) in states.iter().enumerate() {
            if y.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: y.len(),
                });
            }
            if y.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFiniteState { node: i });
            }
        }
        Ok(Trajectory { t0, step, states })
    }

    /// Uniform grid on `[a, b]` with `states.len() - 1` intervals.
    pub fn on_interval(a: f64, b: f64, states: Vec<Vec<f64>>) -> Result<Self> {
        let n = states.len().saturating_sub(1).max(1);
        Self::new(a, (b - a) / n as f64, states)
    }

    /// Scalar path from a closure.
    pub fn from_fn(a: f64, b: f64, intervals: usize, y: impl Fn(f64) -> f64) -> Result<Self> {
        let h = (b - a) / intervals as f64;
        let states = (0..=intervals).map(|i| vec![y(a + i as f64 * h)]).collect();
        Self::new(a, h, states)
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.states.len() - 1
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn start_time(&self) -> f64 {
        self.t0
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.intervals())
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.step
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i]
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn states_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.states
    }

    /// `(y_{i+1} - y_i) / h`.
    pub fn slope(&self, i: usize) -> Vec<f64> {
        self.states[i + 1]
            .iter()
            .zip(&self.states[i])
            .map(|(b, a)| (b - a) / self.step)
            .collect()
    }

    pub fn slopes(&self) -> Vec<Vec<f64>> {
        (0..self.intervals()).map(|i| self.slope(i)).collect()
    }

    /// `max_i |u_i|`.
    pub fn empirical_lipschitz(&self) -> f64 {
        (0..self.intervals())
            .map(|i| norm(&self.slope(i)))
            .fold(0.0, f64::max)
    }

    /// Joins `other` onto the end of `self`; the shared node must coincide.
    pub fn concat(&self, other: &Trajectory) -> Result<Trajectory> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        if other.step != self.step || other.states[0] != *self.states.last().unwrap() {
            return Err(Error::InvalidConfig(
                "trajectories do not share an endpoint node".into(),
            ));
        }
        let mut states = self.states.clone();
        states.extend(other.states[1..].iter().cloned());
        Trajectory::new(self.t0, self.step, states)
    }
}

/// `sum_i h * L(y_i, u_i)`, accumulated left to right.
///
/// The summation order matches the lattice solvers, so the action of a
/// lattice path equals the optimal label bit for bit.
pub fn evaluate_action(traj: &Trajectory, lagrangian: &LagrangianSpec) -> Result<ExtReal> {
    if traj.dim() != lagrangian.dim() {
        return Err(Error::DimensionMismatch {
            expected: lagrangian.dim(),
            got: traj.dim(),
        });
    }
    let h = traj.step();
    let mut acc = 0.0;
    for i in 0..traj.intervals() {
        let u = traj.slope(i);
        acc += h * lagrangian.eval(traj.state(i), &u);
    }
    Ok(ExtReal::new(acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::catalog::lagrangian;
    use std::sync::Arc;

    #[test]
    fn straight_line_quadratic_action() {
        let l = lagrangian("quadratic", 1).unwrap();
        let traj = Trajectory::from_fn(0.0, 1.0, 8, |t| t).unwrap();
        assert_eq!(evaluate_action(&traj, &l).unwrap().value(), 1.0);
    }

    #[test]
    fn zero_lagrangian_has_zero_action() {
        let zero = LagrangianSpec::new(
            "zero",
            1,
            Arc::new(|_: &[f64], _: &[f64]| 0.0),
            crate::lagrangian::GrowthGauge::radial(1, |s| s * s),
            Arc::new(|_| 0.0),
            Default::default(),
        );
        let traj = Trajectory::from_fn(0.0, 1.0, 10, |t| (7.0 * t).sin()).unwrap();
        assert_eq!(evaluate_action(&traj, &zero).unwrap().value(), 0.0);
    }

    #[test]
    fn infinite_term_gives_infinite_action() {
        let boxed = LagrangianSpec::new(
            "boxed",
            1,
            Arc::new(|_: &[f64], u: &[f64]| if u[0].abs() > 1.0 { f64::INFINITY } else { 0.0 }),
            crate::lagrangian::GrowthGauge::radial(1, |_| 0.0),
            Arc::new(|_| f64::INFINITY),
            Default::default(),
        );
        let traj = Trajectory::from_fn(0.0, 1.0, 4, |t| 3.0 * t).unwrap();
        assert!(evaluate_action(&traj, &boxed).unwrap().is_infinite());
    }

    #[test]
    fn rejects_non_finite_states_and_dimension_mismatch() {
        let err = Trajectory::new(0.0, 0.1, vec![vec![0.0], vec![f64::NAN]]).unwrap_err();
        assert_eq!(err, Error::NonFiniteState { node: 1 });
        let traj = Trajectory::new(0.0, 0.1, vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let l = lagrangian("quadratic", 1).unwrap();
        assert!(matches!(
            evaluate_action(&traj, &l),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    /// Sawtooth with slopes +-1 and peak 1/8 on [0,1], N = 64.
    #[test]
    fn sawtooth_double_well_x2_matches_direct_summation() {
        let l = lagrangian("double_well_x2", 1).unwrap();
        let n = 64;
        let h = 1.0 / n as f64;
        let states: Vec<Vec<f64>> = (0..=n)
            .map(|i| {
                let k = i % 16;
                let y = if k <= 8 {
                    k as f64 * h
                } else {
                    (16 - k) as f64 * h
                };
                vec![y]
            })
            .collect();
        let traj = Trajectory::new(0.0, h, states.clone()).unwrap();
        assert!((traj.empirical_lipschitz() - 1.0).abs() < 1e-12);
        // the well term vanishes (slopes are exactly +-1), leaving sum h*x_i^2
        let mut oracle = 0.0;
        for y in &states[..n] {
            oracle += h * (0.0 + y[0] * y[0]);
        }
        assert_eq!(evaluate_action(&traj, &l).unwrap().value(), oracle);
    }

    #[test]
    fn action_is_additive_over_concatenation() {
        let l = lagrangian("double_well_x2", 1).unwrap();
        let left = Trajectory::from_fn(0.0, 0.5, 16, |t| t * t).unwrap();
        let right = Trajectory::new(0.5, left.step(), {
            (0..=16)
                .map(|i| vec![0.25 - 0.5 * (i as f64 / 32.0)])
                .collect()
        })
        .unwrap();
        let joined = left.concat(&right).unwrap();
        let whole = evaluate_action(&joined, &l).unwrap().value();
        let parts = evaluate_action(&left, &l).unwrap().value()
            + evaluate_action(&right, &l).unwrap().value();
        assert!((whole - parts).abs() <= 1e-14 * whole.abs().max(1.0));
    }
}

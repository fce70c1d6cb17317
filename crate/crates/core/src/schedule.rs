//! Per-timestep privacy budgets.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Finite(usize),
    Unbounded,
}

/// Budgets `eps_1..eps_T`, described by their first, middle and last values.
///
/// Allocation produces either a uniform schedule (possibly for an unbounded
/// horizon) or one with larger budgets at both ends. Schedules read from
/// disk may be arbitrary; `eps_mid` is then the smallest interior budget.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetSchedule {
    horizon: Horizon,
    eps_first: f64,
    eps_mid: f64,
    eps_last: f64,
    steps: Vec<f64>,
}

fn check(index: usize, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonPositiveEpsilon { index, value })
    }
}

impl BudgetSchedule {
    /// The same budget at every step.
    pub fn uniform(epsilon: f64, horizon: Horizon) -> Result<Self> {
        check(0, epsilon)?;
        let steps = match horizon {
            Horizon::Finite(0) => return Err(Error::EmptySchedule),
            Horizon::Finite(t) => vec![epsilon; t],
            Horizon::Unbounded => Vec::new(),
        };
        Ok(Self { horizon, eps_first: epsilon, eps_mid: epsilon, eps_last: epsilon, steps })
    }

    /// `(first, mid, ..., mid, last)` over `t >= 2` steps.
    pub fn endpoints(first: f64, mid: f64, last: f64, t: usize) -> Result<Self> {
        if t < 2 {
            return Err(Error::HorizonTooShort(t));
        }
        check(0, first)?;
        check(1, mid)?;
        check(t - 1, last)?;
        let mut steps = vec![mid; t];
        steps[0] = first;
        steps[t - 1] = last;
        Ok(Self { horizon: Horizon::Finite(t), eps_first: first, eps_mid: mid, eps_last: last, steps })
    }

    pub fn from_steps(steps: Vec<f64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::EmptySchedule);
        }
        for (i, &e) in steps.iter().enumerate() {
            check(i, e)?;
        }
        let t = steps.len();
        let eps_mid = if t > 2 {
            steps[1..t - 1].iter().copied().fold(f64::INFINITY, f64::min)
        } else {
            steps[0].min(steps[t - 1])
        };
        Ok(Self { horizon: Horizon::Finite(t), eps_first: steps[0], eps_mid, eps_last: steps[t - 1], steps })
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn eps_first(&self) -> f64 {
        self.eps_first
    }

    pub fn eps_mid(&self) -> f64 {
        self.eps_mid
    }

    pub fn eps_last(&self) -> f64 {
        self.eps_last
    }

    /// Materialized budgets; empty for an unbounded horizon.
    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    /// Budgets for the first `t` steps. An unbounded uniform schedule can be
    /// cut at any length; a finite one only up to its horizon.
    pub fn materialize(&self, t: usize) -> Result<Vec<f64>> {
        match self.horizon {
            Horizon::Unbounded => Ok(vec![self.eps_mid; t]),
            Horizon::Finite(len) if t <= len => Ok(self.steps[..t].to_vec()),
            Horizon::Finite(len) => Err(Error::ScheduleTooShort { schedule: len, needed: t }),
        }
    }
}

//! Per-timestep leakage records.

use crate::error::{Error, Result};

/// Relative slack for the sandwich bounds checked on construction.
const BOUND_SLACK: f64 = 1e-9;

/// Leakage at one timestep, all values in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageEntry {
    /// 1-based timestep.
    pub t: usize,
    pub epsilon: f64,
    pub bpl: f64,
    pub fpl: f64,
    pub tpl: f64,
}

/// Backward, forward and total leakage of one user over a finite horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageTrace {
    pub user_id: String,
    entries: Vec<LeakageEntry>,
}

impl LeakageTrace {
    /// Assembles a trace from its backward and forward series; the total is
    /// `bpl + fpl - epsilon` since the current release is counted twice.
    pub fn from_series(user_id: impl Into<String>, eps: &[f64], bpl: &[f64], fpl: &[f64]) -> Result<Self> {
        if eps.len() != bpl.len() || eps.len() != fpl.len() {
            return Err(Error::LengthMismatch(format!("eps {}, bpl {}, fpl {}", eps.len(), bpl.len(), fpl.len())));
        }
        let entries = (0..eps.len())
            .map(|i| LeakageEntry {
                t: i + 1,
                epsilon: eps[i],
                bpl: bpl[i],
                fpl: fpl[i],
                tpl: bpl[i] + fpl[i] - eps[i],
            })
            .collect();
        Self::from_entries(user_id, entries)
    }

    /// Validates explicit entries, e.g. ones read back from CSV.
    pub fn from_entries(user_id: impl Into<String>, entries: Vec<LeakageEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptySchedule);
        }
        let horizon = entries.len();
        let mut prefix = 0.0;
        let total: f64 = entries.iter().map(|e| e.epsilon).sum();
        for (i, e) in entries.iter().enumerate() {
            let bad = |message: String| Error::TraceInvariant { t: i + 1, message };
            if e.t != i + 1 {
                return Err(bad(format!("timestep recorded as {}", e.t)));
            }
            if !(e.epsilon > 0.0 && e.epsilon.is_finite()) {
                return Err(Error::NonPositiveEpsilon { index: i, value: e.epsilon });
            }
            let expected_tpl = e.bpl + e.fpl - e.epsilon;
            if (e.tpl - expected_tpl).abs() > BOUND_SLACK * expected_tpl.abs().max(1.0) {
                return Err(bad(format!("tpl {} != bpl + fpl - epsilon = {expected_tpl}", e.tpl)));
            }
            prefix += e.epsilon;
            let suffix = total - prefix + e.epsilon;
            let slack = |x: f64| BOUND_SLACK * x.abs().max(1.0);
            if e.bpl < e.epsilon - slack(e.epsilon) || e.bpl > prefix + slack(prefix) {
                return Err(bad(format!("bpl {} outside [{}, {prefix}]", e.bpl, e.epsilon)));
            }
            if e.fpl < e.epsilon - slack(e.epsilon) || e.fpl > suffix + slack(suffix) {
                return Err(bad(format!("fpl {} outside [{}, {suffix}]", e.fpl, e.epsilon)));
            }
        }
        let first = &entries[0];
        if (first.bpl - first.epsilon).abs() > BOUND_SLACK * first.epsilon.max(1.0) {
            return Err(Error::TraceInvariant { t: 1, message: "bpl_1 != epsilon_1".into() });
        }
        let last = &entries[horizon - 1];
        if (last.fpl - last.epsilon).abs() > BOUND_SLACK * last.epsilon.max(1.0) {
            return Err(Error::TraceInvariant { t: horizon, message: "fpl_T != epsilon_T".into() });
        }
        Ok(Self { user_id: user_id.into(), entries })
    }

    pub fn horizon(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[LeakageEntry] {
        &self.entries
    }

    /// Entry at 1-based timestep `t`.
    pub fn at(&self, t: usize) -> Option<&LeakageEntry> {
        t.checked_sub(1).and_then(|i| self.entries.get(i))
    }

    pub fn epsilon(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.epsilon).collect()
    }

    pub fn bpl(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.bpl).collect()
    }

    pub fn fpl(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.fpl).collect()
    }

    pub fn tpl(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.tpl).collect()
    }

    pub fn max_tpl(&self) -> f64 {
        self.entries.iter().map(|e| e.tpl).fold(f64::NEG_INFINITY, f64::max)
    }
}

//! Backward, forward and total temporal privacy leakage over a horizon.
//!
//! ```text
//! BPL_1 = eps_1,   BPL_t = L_B(BPL_{t-1}) + eps_t
//! FPL_T = eps_T,   FPL_t = L_F(FPL_{t+1}) + eps_t
//! TPL_t = BPL_t + FPL_t - eps_t
//! ```
//!
//! `L` is [`crate::lfp::loss_increment`], evaluated afresh at every step since
//! the maximizing row pair may change as leakage grows.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::lfp::{self, LossIncrement};
use crate::matrix::{AdversaryModel, TransitionMatrix};
use crate::trace::LeakageTrace;

/// Memo of loss increments keyed on the matrix fingerprint and `alpha`
/// rounded to 12 decimals. The rounding only affects lookup; stored values
/// are the exact results for the first `alpha` seen in each bucket.
#[derive(Debug, Default)]
pub struct LossCache {
    map: Mutex<HashMap<(u64, i64), LossIncrement>>,
}

impl LossCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn loss_increment(&self, p: &TransitionMatrix, alpha: f64) -> Result<LossIncrement> {
        let scaled = (alpha * 1e12).round();
        if scaled.is_nan() || scaled.abs() >= i64::MAX as f64 {
            return lfp::loss_increment(p, alpha);
        }
        let key = (p.fingerprint(), scaled as i64);
        if let Some(hit) = self.map.lock().expect("cache lock poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let value = lfp::loss_increment(p, alpha)?;
        self.map.lock().expect("cache lock poisoned").insert(key, value.clone());
        Ok(value)
    }
}

fn check_eps(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::EmptySchedule);
    }
    for (index, &value) in eps.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositiveEpsilon { index, value });
        }
    }
    Ok(())
}

fn accumulate<'a>(
    p: Option<&TransitionMatrix>,
    eps: impl Iterator<Item = &'a f64>,
    cache: &LossCache,
) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = Vec::new();
    for &e in eps {
        let next = match (p, out.last()) {
            (Some(p), Some(&prev)) => cache.loss_increment(p, prev)?.value + e,
            _ => e,
        };
        out.push(next);
    }
    Ok(out)
}

/// Backward privacy leakage at every step. `None` means no backward
/// correlation, giving `BPL_t = eps_t`.
pub fn bpl_trace(p_b: Option<&TransitionMatrix>, eps: &[f64]) -> Result<Vec<f64>> {
    bpl_trace_cached(p_b, eps, &LossCache::new())
}

pub fn bpl_trace_cached(p_b: Option<&TransitionMatrix>, eps: &[f64], cache: &LossCache) -> Result<Vec<f64>> {
    check_eps(eps)?;
    accumulate(p_b, eps.iter(), cache)
}

/// Forward privacy leakage at every step, computed backwards from `T`.
/// Extending the horizon changes every earlier value, so callers re-run this
/// whenever a release is appended.
pub fn fpl_trace(p_f: Option<&TransitionMatrix>, eps: &[f64]) -> Result<Vec<f64>> {
    fpl_trace_cached(p_f, eps, &LossCache::new())
}

pub fn fpl_trace_cached(p_f: Option<&TransitionMatrix>, eps: &[f64], cache: &LossCache) -> Result<Vec<f64>> {
    check_eps(eps)?;
    let mut out = accumulate(p_f, eps.iter().rev(), cache)?;
    out.reverse();
    Ok(out)
}

pub fn tpl_trace(model: &AdversaryModel, eps: &[f64]) -> Result<LeakageTrace> {
    tpl_trace_cached(model, eps, &LossCache::new())
}

pub fn tpl_trace_cached(model: &AdversaryModel, eps: &[f64], cache: &LossCache) -> Result<LeakageTrace> {
    let bpl = bpl_trace_cached(model.backward(), eps, cache)?;
    let fpl = fpl_trace_cached(model.forward(), eps, cache)?;
    LeakageTrace::from_series(model.user_id.clone(), eps, &bpl, &fpl)
}

/// Worst case over users, plus which user attains it at each step.
#[derive(Debug, Clone, PartialEq)]
pub struct UserMaxTrace {
    /// Per step, the bpl/fpl/tpl of the user with the largest tpl.
    pub trace: LeakageTrace,
    /// Index into the model list of that user; ties go to the lowest index.
    pub argmax: Vec<usize>,
}

impl UserMaxTrace {
    pub fn argmax_user_ids<'a>(&self, models: &'a [AdversaryModel]) -> Vec<&'a str> {
        self.argmax.iter().map(|&i| models[i].user_id.as_str()).collect()
    }
}

pub fn max_tpl_over_users(models: &[AdversaryModel], eps: &[f64]) -> Result<UserMaxTrace> {
    if models.is_empty() {
        return Err(Error::EmptyUserSet);
    }
    let cache = LossCache::new();
    let traces = models.iter().map(|m| tpl_trace_cached(m, eps, &cache)).collect::<Result<Vec<_>>>()?;
    let horizon = eps.len();
    let mut argmax = vec![0usize; horizon];
    for (t, slot) in argmax.iter_mut().enumerate() {
        for (u, tr) in traces.iter().enumerate().skip(1) {
            if tr.entries()[t].tpl > traces[*slot].entries()[t].tpl {
                *slot = u;
            }
        }
    }
    let pick = |f: fn(&crate::trace::LeakageEntry) -> f64| -> Vec<f64> {
        argmax.iter().enumerate().map(|(t, &u)| f(&traces[u].entries()[t])).collect()
    };
    let trace = LeakageTrace::from_series("max", eps, &pick(|e| e.bpl), &pick(|e| e.fpl))?;
    Ok(UserMaxTrace { trace, argmax })
}

/// Leakage of the combined releases at steps `t..=t+j` (1-based).
///
/// `j = 0` is the event-level `TPL_t`; otherwise the backward leakage at the
/// first step, the forward leakage at the last, and the plain budgets in
/// between.
pub fn sequence_tpl(trace: &LeakageTrace, t: usize, j: usize) -> Result<f64> {
    let horizon = trace.horizon();
    let out_of_range = || Error::IndexOutOfRange { t, j, horizon };
    let end = t.checked_add(j).ok_or_else(out_of_range)?;
    if t == 0 || end > horizon {
        return Err(out_of_range());
    }
    let entries = trace.entries();
    if j == 0 {
        return Ok(entries[t - 1].tpl);
    }
    let middle: f64 = entries[t..end - 1].iter().map(|e| e.epsilon).sum();
    Ok(entries[t - 1].bpl + entries[end - 1].fpl + middle)
}

//! Supremum of backward (or forward) leakage over an unbounded horizon when
//! every release spends the same `eps`, and the inverse map from a target
//! supremum back to `eps`.
//!
//! The supremum is the fixed point `a = ln((q(e^a-1)+1)/(d(e^a-1)+1)) + eps`
//! where `(q, d)` must be the maximizing sums *at* `a`. Writing `y = e^a`
//! gives `d y^2 - (d + q e^eps - 1) y - e^eps (1 - q) = 0`:
//!
//! | case | condition                         | supremum                                   |
//! |------|-----------------------------------|--------------------------------------------|
//! | 1    | `d != 0`                          | `ln` of the positive root                  |
//! | 2    | `d = 0`, `q != 1`, `q e^eps < 1`  | `ln((1-q) e^eps / (1 - q e^eps))`          |
//! | 3    | `d = 0`, `q != 1`, `q e^eps >= 1` | does not exist                             |
//! | 4    | `d = 0`, `q = 1`                  | does not exist                             |
//!
//! `q = d` (no useful column) is reported as case 1 with supremum `eps`.

use crate::error::{Error, Result};
use crate::lfp::{self, loss_value};
use crate::matrix::TransitionMatrix;

pub const MAX_STABILIZATION_ROUNDS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Supremum {
    Finite(f64),
    NotExist,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupremumResult {
    pub kind: Supremum,
    pub case_id: u8,
    pub q: f64,
    pub d: f64,
}

impl SupremumResult {
    pub fn value(&self) -> Option<f64> {
        match self.kind {
            Supremum::Finite(v) => Some(v),
            Supremum::NotExist => None,
        }
    }
}

/// Closed-form supremum for fixed selection sums `(q, d)`.
pub fn closed_form(q: f64, d: f64, eps: f64) -> SupremumResult {
    let result = |kind, case_id| SupremumResult { kind, case_id, q, d };
    if q == d {
        return result(Supremum::Finite(eps), 1);
    }
    let e = eps.exp();
    if d > 0.0 {
        let b = d + q * e - 1.0;
        let c = e * (1.0 - q);
        let s = b.mul_add(b, 4.0 * d * c).sqrt();
        // Positive root of d y^2 - b y - c, picking the form without
        // cancellation.
        let y = if b >= 0.0 { (b + s) / (2.0 * d) } else { 2.0 * c / (s - b) };
        return result(Supremum::Finite(y.ln().max(eps)), 1);
    }
    if q >= 1.0 {
        return result(Supremum::NotExist, 4);
    }
    let denom = 1.0 - q * e;
    if denom <= 0.0 {
        return result(Supremum::NotExist, 3);
    }
    let value = ((1.0 - q) * e / denom).ln();
    result(Supremum::Finite(value.max(eps)), 2)
}

/// Supremum of the leakage recursion driven by `p` with constant `eps`.
///
/// Starting at `a = eps`, takes the maximizing `(q, d)` at `a`, jumps to the
/// closed-form fixed point for that selection, and repeats until the
/// selection stops changing. Each jump lands at or below the true supremum,
/// so a selection whose own fixed point does not exist proves divergence.
pub fn leakage_supremum(p: &TransitionMatrix, eps: f64) -> Result<SupremumResult> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::NonPositiveEpsilon { index: 0, value: eps });
    }
    let mut alpha = eps;
    let mut previous: Option<(f64, f64)> = None;
    for _ in 0..MAX_STABILIZATION_ROUNDS {
        let inc = lfp::loss_increment(p, alpha)?;
        let qd = (inc.q, inc.d);
        let step = closed_form(inc.q, inc.d, eps);
        if previous == Some(qd) {
            return Ok(step);
        }
        match step.kind {
            Supremum::NotExist => return Ok(step),
            Supremum::Finite(next) => alpha = next,
        }
        previous = Some(qd);
    }
    Err(Error::StabilizationFailure { rounds: MAX_STABILIZATION_ROUNDS })
}

/// Budget whose constant-`eps` supremum equals `alpha_target`, given the
/// maximizing sums `(q, d)` at `alpha_target`.
pub fn epsilon_for_supremum(q: f64, d: f64, alpha_target: f64) -> Result<f64> {
    if !(alpha_target > 0.0 && alpha_target.is_finite()) {
        return Err(Error::NonPositiveAlpha(alpha_target));
    }
    const SLACK: f64 = 1e-9;
    if !(d >= 0.0 && q <= 1.0 + SLACK && q >= d) {
        return Err(Error::InvalidCoefficients { q, d });
    }
    if d == 0.0 && q >= 1.0 {
        return Err(Error::StrongestCorrelation { user: None });
    }
    Ok(alpha_target - loss_value(q, d, alpha_target))
}

/// `epsilon_for_supremum` with `(q, d)` taken from the matrix at the target.
pub fn epsilon_for_matrix(p: &TransitionMatrix, alpha_target: f64) -> Result<f64> {
    if !(alpha_target > 0.0 && alpha_target.is_finite()) {
        return Err(Error::NonPositiveAlpha(alpha_target));
    }
    let inc = lfp::loss_increment(p, alpha_target)?;
    epsilon_for_supremum(inc.q, inc.d, alpha_target)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> TransitionMatrix {
        TransitionMatrix::new(vec![vec![0.8, 0.2], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn identity_has_no_supremum() {
        for eps in [0.01, 0.1, 1.0] {
            let r = leakage_supremum(&TransitionMatrix::identity(2), eps).unwrap();
            assert_eq!((r.kind, r.case_id), (Supremum::NotExist, 4));
        }
    }

    #[test]
    fn uniform_rows_supremum_is_eps() {
        let r = leakage_supremum(&TransitionMatrix::uniform(2), 1.0).unwrap();
        assert_eq!(r.kind, Supremum::Finite(1.0));
        assert_eq!(r.case_id, 1);
    }

    #[test]
    fn example_case_two() {
        let r = leakage_supremum(&example(), 0.1).unwrap();
        assert_eq!(r.case_id, 2);
        let e = 0.1f64.exp();
        let expected = (0.2 * e / (1.0 - 0.8 * e)).ln();
        let v = r.value().unwrap();
        assert!((v - expected).abs() < 1e-14);
        assert!((v - 0.6458).abs() < 1e-3);
    }

    #[test]
    fn example_case_three() {
        let r = leakage_supremum(&example(), 0.3).unwrap();
        assert_eq!((r.kind, r.case_id), (Supremum::NotExist, 3));
    }

    #[test]
    fn closed_form_matches_fixed_point() {
        let p = TransitionMatrix::new(vec![vec![0.6, 0.3, 0.1], vec![0.2, 0.5, 0.3], vec![0.1, 0.2, 0.7]]).unwrap();
        let r = leakage_supremum(&p, 1.0).unwrap();
        assert_eq!(r.case_id, 1);
        let a = r.value().unwrap();
        let inc = lfp::loss_increment(&p, a).unwrap();
        assert!((inc.value + 1.0 - a).abs() < 1e-9);
    }

    #[test]
    fn case_one_quadratic_branches() {
        // b >= 0 and b < 0 both satisfy the quadratic.
        for (q, d, eps) in [(0.9, 0.05, 1.0), (0.3, 0.1, 0.01), (0.5, 0.4999, 0.2)] {
            let r = closed_form(q, d, eps);
            let y = r.value().unwrap().exp();
            let e = f64::exp(eps);
            let resid = d * y * y - (d + q * e - 1.0) * y - e * (1.0 - q);
            assert!(resid.abs() < 1e-12, "{q} {d} {eps}: {resid}");
        }
    }

    #[test]
    fn diverges_toward_case_two_boundary() {
        let boundary = (1.0f64 / 0.8).ln();
        let mut last = 0.0;
        for gap in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            let v = leakage_supremum(&example(), boundary - gap).unwrap().value().unwrap();
            assert!(v > last);
            last = v;
        }
        assert!(last > 10.0);
    }

    #[test]
    fn inversion() {
        assert_eq!(epsilon_for_supremum(0.4, 0.4, 0.7).unwrap(), 0.7);
        let target = leakage_supremum(&example(), 0.1).unwrap().value().unwrap();
        assert!((epsilon_for_supremum(0.8, 0.0, target).unwrap() - 0.1).abs() < 1e-12);
        assert!(matches!(epsilon_for_supremum(1.0, 0.0, 1.0), Err(Error::StrongestCorrelation { .. })));
        assert!(matches!(epsilon_for_supremum(0.2, 0.5, 1.0), Err(Error::InvalidCoefficients { .. })));
        assert!(matches!(epsilon_for_supremum(0.5, 0.2, 0.0), Err(Error::NonPositiveAlpha(_))));
    }

    #[test]
    fn rejects_non_positive_eps() {
        assert!(leakage_supremum(&example(), 0.0).is_err());
        assert!(leakage_supremum(&example(), f64::NAN).is_err());
    }
}

//! Exponential-time reference solver for the per-pair linear-fractional
//! program
//!
//! ```text
//! maximize  q.x / d.x   subject to  e^-alpha <= x_j / x_k <= e^alpha
//! ```
//!
//! Some optimum has every coordinate at one of two levels, `m` or
//! `e^alpha * m`, so enumerating all `2^n` two-level vectors (with `m = 1`)
//! is exhaustive. This deliberately shares no code with [`crate::lfp`].

use crate::error::{Error, Result};

/// Largest dimension the enumeration accepts.
pub const MAX_ORACLE_N: usize = 20;

/// Slack used when checking feasibility and optimality of candidates.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LfpInstance {
    q: Vec<f64>,
    d: Vec<f64>,
    alpha: f64,
}

impl LfpInstance {
    pub fn new(q: Vec<f64>, d: Vec<f64>, alpha: f64) -> Result<Self> {
        if q.len() != d.len() || q.is_empty() {
            return Err(Error::InvalidInstance(format!("coefficient lengths {} and {}", q.len(), d.len())));
        }
        if !(alpha.is_finite() && alpha >= 0.0 && alpha.exp().is_finite()) {
            return Err(Error::InvalidAlpha(alpha));
        }
        for (name, v) in [("q", &q), ("d", &d)] {
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidInstance(format!("{name} has a negative or non-finite entry")));
            }
            let s: f64 = v.iter().sum();
            if (s - 1.0).abs() > ORACLE_TOLERANCE {
                return Err(Error::InvalidInstance(format!("{name} sums to {s}")));
            }
        }
        Ok(Self { q, d, alpha })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn numerator(&self, x: &[f64]) -> f64 {
        self.q.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    fn denominator(&self, x: &[f64]) -> f64 {
        self.d.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Two-level vector for subset `mask`: `e^alpha` inside, 1 outside.
    fn vertex(&self, mask: u32) -> Vec<f64> {
        let hi = self.alpha.exp();
        (0..self.n()).map(|j| if mask >> j & 1 == 1 { hi } else { 1.0 }).collect()
    }
}

/// Optimum found by enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    /// `ln(q.x / d.x)` at the optimum.
    pub value: f64,
    /// Bitmask of coordinates at the high level.
    pub subset: u32,
    pub x: Vec<f64>,
}

impl OracleSolution {
    pub fn subset_indices(&self) -> Vec<usize> {
        (0..self.x.len()).filter(|j| self.subset >> j & 1 == 1).collect()
    }
}

/// Enumerates every two-level vertex and returns the best log-ratio.
///
/// The first subset (in mask order) attaining the maximum is reported.
pub fn solve_pair_bruteforce(inst: &LfpInstance) -> Result<OracleSolution> {
    let n = inst.n();
    if n > MAX_ORACLE_N {
        return Err(Error::TooLarge { n, max: MAX_ORACLE_N });
    }
    let hi = inst.alpha.exp();
    let mut best_mask = 0u32;
    let mut best_ratio = f64::NEG_INFINITY;
    for mask in 0u32..(1u32 << n) {
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..n {
            let x = if mask >> j & 1 == 1 { hi } else { 1.0 };
            num += inst.q[j] * x;
            den += inst.d[j] * x;
        }
        let ratio = num / den;
        if ratio > best_ratio {
            best_ratio = ratio;
            best_mask = mask;
        }
    }
    Ok(OracleSolution { value: best_ratio.ln(), subset: best_mask, x: inst.vertex(best_mask) })
}

/// Convenience wrapper returning only the optimal value.
pub fn bruteforce_value(q: &[f64], d: &[f64], alpha: f64) -> Result<f64> {
    let inst = LfpInstance::new(q.to_vec(), d.to_vec(), alpha)?;
    Ok(solve_pair_bruteforce(&inst)?.value)
}

/// Dinkelbach's optimality test: `x` with `lambda = Q(x)/D(x)` is optimal iff
/// `max_y Q(y) - lambda D(y) = 0`. The maximum is taken over the two-level
/// vertex family, scaled to `x`'s smallest coordinate so the comparison is
/// made at the candidate's own scale.
pub fn verify_dinkelbach(inst: &LfpInstance, candidate_x: &[f64], lambda: f64) -> Result<bool> {
    let n = inst.n();
    if n > MAX_ORACLE_N {
        return Err(Error::TooLarge { n, max: MAX_ORACLE_N });
    }
    if candidate_x.len() != n {
        return Err(Error::InfeasibleCandidate(format!("length {} != {n}", candidate_x.len())));
    }
    if candidate_x.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return Err(Error::InfeasibleCandidate("entries must be positive".into()));
    }
    let lo = candidate_x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = candidate_x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bound = inst.alpha.exp();
    if hi / lo > bound * (1.0 + ORACLE_TOLERANCE) {
        return Err(Error::InfeasibleCandidate(format!("max/min ratio {} exceeds e^alpha = {bound}", hi / lo)));
    }
    let scale = |v: f64| v / lo;
    let at_x = scale(inst.numerator(candidate_x)) - lambda * scale(inst.denominator(candidate_x));
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1u32 << n) {
        let y = inst.vertex(mask);
        best = best.max(inst.numerator(&y) - lambda * inst.denominator(&y));
    }
    // The candidate itself must reach the maximum, and the maximum must be 0.
    Ok(best.abs() <= ORACLE_TOLERANCE && at_x.abs() <= ORACLE_TOLERANCE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(q: &[f64], d: &[f64], alpha: f64) -> LfpInstance {
        LfpInstance::new(q.to_vec(), d.to_vec(), alpha).unwrap()
    }

    #[test]
    fn strongest_pair() {
        let s = solve_pair_bruteforce(&inst(&[1.0, 0.0], &[0.0, 1.0], 0.5)).unwrap();
        assert!((s.value - 0.5).abs() < 1e-15);
        assert_eq!(s.subset_indices(), vec![0]);
    }

    #[test]
    fn symmetric_pair_is_zero() {
        for alpha in [0.0, 0.3, 5.0] {
            let s = solve_pair_bruteforce(&inst(&[0.5, 0.5], &[0.5, 0.5], alpha)).unwrap();
            assert_eq!(s.value, 0.0);
        }
    }

    #[test]
    fn example_pair_by_hand() {
        let s = solve_pair_bruteforce(&inst(&[0.8, 0.2], &[0.0, 1.0], 0.1)).unwrap();
        // subset {0}: (0.8 e^0.1 + 0.2) / 1
        let hand = (0.8 * 0.1f64.exp() + 0.2).ln();
        assert!((s.value - hand).abs() < 1e-15);
        assert!((s.value - 0.0808).abs() < 1e-4);
        assert_eq!(s.subset_indices(), vec![0]);
    }

    #[test]
    fn rejects_oversized_instances() {
        let n = 21;
        let v = vec![1.0 / n as f64; n];
        assert!(matches!(solve_pair_bruteforce(&inst(&v, &v, 1.0)), Err(Error::TooLarge { n: 21, max: 20 })));
    }

    #[test]
    fn rejects_malformed_instances() {
        assert!(LfpInstance::new(vec![0.5, 0.5], vec![1.0], 1.0).is_err());
        assert!(LfpInstance::new(vec![0.5, 0.6], vec![0.5, 0.5], 1.0).is_err());
        assert!(LfpInstance::new(vec![1.5, -0.5], vec![0.5, 0.5], 1.0).is_err());
        assert!(LfpInstance::new(vec![0.5, 0.5], vec![0.5, 0.5], -1.0).is_err());
    }

    #[test]
    fn dinkelbach_accepts_bruteforce_optimum() {
        let i = inst(&[0.6, 0.3, 0.1], &[0.1, 0.3, 0.6], 1.2);
        let s = solve_pair_bruteforce(&i).unwrap();
        let lambda = s.value.exp();
        assert!(verify_dinkelbach(&i, &s.x, lambda).unwrap());
    }

    #[test]
    fn dinkelbach_rejects_suboptimal_all_ones() {
        let i = inst(&[0.6, 0.3, 0.1], &[0.1, 0.3, 0.6], 1.2);
        assert!(solve_pair_bruteforce(&i).unwrap().value > 0.0);
        let ones = vec![1.0; 3];
        let lambda = 1.0; // q.1 / d.1
        assert!(!verify_dinkelbach(&i, &ones, lambda).unwrap());
    }

    #[test]
    fn dinkelbach_constant_objective() {
        let i = inst(&[0.25, 0.75], &[0.25, 0.75], 2.0);
        assert!(verify_dinkelbach(&i, &[1.0, 1.0], 1.0).unwrap());
    }

    #[test]
    fn dinkelbach_rejects_infeasible_candidate() {
        let i = inst(&[0.6, 0.4], &[0.4, 0.6], 0.5);
        assert!(matches!(verify_dinkelbach(&i, &[1.0, 3.0], 1.0), Err(Error::InfeasibleCandidate(_))));
        assert!(matches!(verify_dinkelbach(&i, &[1.0, 0.0], 1.0), Err(Error::InfeasibleCandidate(_))));
    }
}

//! Polynomial-time evaluation of the temporal privacy loss function.
//!
//! Given the previous backward leakage (or next forward leakage) `alpha`, the
//! increment contributed by a transition matrix is the maximum, over ordered
//! pairs of distinct rows `(q, d)`, of
//!
//! ```text
//! ln( (q_S (e^alpha - 1) + 1) / (d_S (e^alpha - 1) + 1) )
//! ```
//!
//! where `q_S`, `d_S` sum the row entries over a column set `S`. For one row
//! pair the optimal `S` is found by starting from every column with
//! `q_j > d_j` and repeatedly discarding columns whose ratio `q_j / d_j` does
//! not exceed the current objective, until nothing changes. A discarded column
//! can never qualify again because discarding only raises the objective, so
//! all failing columns are dropped in one sweep.

use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;

/// Optimum for one ordered row pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSolution {
    pub value: f64,
    pub q: f64,
    pub d: f64,
    /// Columns kept in the final selection, ascending.
    pub plus_set: Vec<usize>,
    /// Number of ratio tests performed.
    pub iterations: usize,
}

/// Maximum over all ordered row pairs of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LossIncrement {
    pub value: f64,
    pub q: f64,
    pub d: f64,
    /// `(q-row, d-row)`; `None` when the matrix has a single row or `alpha == 0`.
    pub row_pair: Option<(usize, usize)>,
    pub plus_set: Vec<usize>,
    /// Largest per-pair ratio-test count seen.
    pub max_pair_iterations: usize,
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Loss value for selection sums `q`, `d`, clamped to `[0, alpha]`.
pub fn loss_value(q: f64, d: f64, alpha: f64) -> f64 {
    let em1 = alpha.exp_m1();
    let v = if em1.is_finite() {
        (q * em1).ln_1p() - (d * em1).ln_1p()
    } else {
        // Divide through by e^alpha; w underflows to 0 here.
        let w = (-alpha).exp();
        let num = q + (1.0 - q) * w;
        if d > 0.0 {
            num.ln() - (d + (1.0 - d) * w).ln()
        } else if q > 0.0 {
            alpha + num.ln()
        } else {
            0.0
        }
    };
    v.clamp(0.0, alpha)
}

/// Whether column `(qj, dj)` beats the objective at sums `(q, d)`, i.e.
/// `qj / dj > (q (e^alpha - 1) + 1) / (d (e^alpha - 1) + 1)`.
fn beats_objective(qj: f64, dj: f64, q: f64, d: f64, em1: f64) -> bool {
    if dj == 0.0 {
        // Infinite ratio.
        return true;
    }
    if em1.is_finite() {
        qj / dj > (q * em1 + 1.0) / (d * em1 + 1.0)
    } else {
        // Cross-multiplied: e^alpha (qj d - dj q) + (qj - dj) > 0 with the
        // first term dominating unless it vanishes.
        let lead = qj * d - dj * q;
        if lead != 0.0 {
            lead > 0.0
        } else {
            qj > dj
        }
    }
}

/// Drops every column of `plus_set` whose ratio does not beat the objective
/// at the current sums. Returns the number of ratio tests and of removals.
fn sweep(q_row: &[f64], d_row: &[f64], plus_set: &mut Vec<usize>, em1: f64) -> (usize, usize) {
    let q: f64 = plus_set.iter().map(|&j| q_row[j]).sum();
    let d: f64 = plus_set.iter().map(|&j| d_row[j]).sum();
    let before = plus_set.len();
    plus_set.retain(|&j| beats_objective(q_row[j], d_row[j], q, d, em1));
    (before, before - plus_set.len())
}

/// Solves the linear-fractional problem for one ordered row pair.
pub fn solve_pair(q_row: &[f64], d_row: &[f64], alpha: f64) -> Result<PairSolution> {
    check_alpha(alpha)?;
    if q_row.len() != d_row.len() {
        return Err(Error::LengthMismatch(format!("rows of length {} and {}", q_row.len(), d_row.len())));
    }
    Ok(solve_pair_unchecked(q_row, d_row, alpha))
}

fn solve_pair_unchecked(q_row: &[f64], d_row: &[f64], alpha: f64) -> PairSolution {
    let em1 = alpha.exp_m1();
    let mut plus_set: Vec<usize> = (0..q_row.len()).filter(|&j| q_row[j] > d_row[j]).collect();
    let mut iterations = 0;
    loop {
        let (tests, removed) = sweep(q_row, d_row, &mut plus_set, em1);
        iterations += tests;
        if removed == 0 {
            break;
        }
    }
    let q: f64 = plus_set.iter().map(|&j| q_row[j]).sum();
    let d: f64 = plus_set.iter().map(|&j| d_row[j]).sum();
    PairSolution { value: loss_value(q, d, alpha), q, d, plus_set, iterations }
}

/// Number of columns a further sweep would remove from `plus_set`. Zero for
/// every selection returned by [`solve_pair`].
pub fn removals_on_resweep(q_row: &[f64], d_row: &[f64], plus_set: &[usize], alpha: f64) -> usize {
    let mut set = plus_set.to_vec();
    sweep(q_row, d_row, &mut set, alpha.exp_m1()).1
}

/// Increment of the temporal privacy loss for matrix `p` at previous
/// leakage `alpha` (the value excludes the current step's own epsilon).
///
/// Ties between row pairs keep the lexicographically smallest `(j, k)`.
pub fn loss_increment(p: &TransitionMatrix, alpha: f64) -> Result<LossIncrement> {
    check_alpha(alpha)?;
    let mut best =
        LossIncrement { value: 0.0, q: 0.0, d: 0.0, row_pair: None, plus_set: Vec::new(), max_pair_iterations: 0 };
    if alpha == 0.0 {
        return Ok(best);
    }
    let n = p.n();
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let sol = solve_pair_unchecked(p.row(j), p.row(k), alpha);
            best.max_pair_iterations = best.max_pair_iterations.max(sol.iterations);
            if best.row_pair.is_none() || sol.value > best.value {
                best.value = sol.value;
                best.q = sol.q;
                best.d = sol.d;
                best.row_pair = Some((j, k));
                best.plus_set = sol.plus_set;
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> TransitionMatrix {
        TransitionMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn identity_reproduces_alpha() {
        let r = loss_increment(&TransitionMatrix::identity(2), 0.5).unwrap();
        assert!((r.value - 0.5).abs() < 1e-15);
        assert_eq!((r.q, r.d), (1.0, 0.0));
        assert_eq!(r.row_pair, Some((0, 1)));
        assert_eq!(r.plus_set, vec![0]);
    }

    #[test]
    fn uniform_rows_give_zero() {
        let r = loss_increment(&m(&[&[0.5, 0.5], &[0.5, 0.5]]), 3.0).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.plus_set.is_empty());
        assert_eq!((r.q, r.d), (0.0, 0.0));
    }

    #[test]
    fn example_matrix_increment() {
        // q = 0.8, d = 0 from the pair (row 0, row 1), column 0.
        let r = loss_increment(&m(&[&[0.8, 0.2], &[0.0, 1.0]]), 0.1).unwrap();
        let expected = (0.8 * 0.1f64.exp_m1()).ln_1p();
        assert!((r.value - expected).abs() < 1e-15);
        assert!((r.value - 0.0808).abs() < 1e-4);
        assert_eq!(r.row_pair, Some((0, 1)));
        assert_eq!((r.q, r.d), (0.8, 0.0));
    }

    #[test]
    fn zero_alpha_short_circuits() {
        let r = loss_increment(&TransitionMatrix::identity(3), 0.0).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.row_pair, None);
    }

    #[test]
    fn single_state_has_no_pairs() {
        let r = loss_increment(&TransitionMatrix::identity(1), 2.0).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn rejects_bad_alpha() {
        let p = TransitionMatrix::identity(2);
        assert!(matches!(loss_increment(&p, -0.1), Err(Error::InvalidAlpha(_))));
        assert!(matches!(loss_increment(&p, f64::NAN), Err(Error::InvalidAlpha(_))));
        assert!(matches!(loss_increment(&p, f64::INFINITY), Err(Error::InvalidAlpha(_))));
    }

    #[test]
    fn boundary_ratio_is_removed() {
        // With columns {0, 1}: q = 0.75, d = 0.125 and at e^alpha - 1 = 2 the
        // objective is 2.5 / 1.25 = 2, exactly the ratio of column 1.
        let q = [0.5, 0.25, 0.25];
        let d = [0.0, 0.125, 0.875];
        let mut set = vec![0, 1];
        let (tests, removed) = sweep(&q, &d, &mut set, 2.0);
        assert_eq!((tests, removed), (2, 1));
        assert_eq!(set, vec![0]);
    }

    #[test]
    fn large_alpha_stays_finite() {
        let p = m(&[&[0.7, 0.2, 0.1], &[0.1, 0.3, 0.6], &[0.3, 0.3, 0.4]]);
        let r = loss_increment(&p, 800.0).unwrap();
        assert!(r.value.is_finite());
        // Tends to ln(q_j/d_j) of the best single ratio: ln(0.7/0.1).
        assert!((r.value - (7.0f64).ln()).abs() < 1e-9);
        let id = loss_increment(&TransitionMatrix::identity(2), 800.0).unwrap();
        assert_eq!(id.value, 800.0);
    }

    fn stochastic(n: usize) -> impl Strategy<Value = TransitionMatrix> {
        proptest::collection::vec(0.0f64..1.0, n * n).prop_map(move |raw| {
            let rows = raw
                .chunks(n)
                .map(|r| {
                    let s: f64 = r.iter().sum::<f64>() + 1e-12;
                    r.iter().map(|x| (x + 1e-12 / n as f64) / s).collect()
                })
                .collect();
            TransitionMatrix::new(rows).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn monotone_in_alpha(p in (2usize..8).prop_flat_map(stochastic), a in 0.0f64..10.0, b in 0.0f64..10.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let vlo = loss_increment(&p, lo).unwrap().value;
            let vhi = loss_increment(&p, hi).unwrap().value;
            prop_assert!(vlo <= vhi + 1e-12, "L({lo})={vlo} > L({hi})={vhi}");
        }

        #[test]
        fn bounded_by_alpha(p in (2usize..8).prop_flat_map(stochastic), a in 0.0f64..20.0) {
            let r = loss_increment(&p, a).unwrap();
            prop_assert!(r.value >= 0.0 && r.value <= a);
            prop_assert!(r.q >= r.d);
            if a > 0.0 {
                prop_assert!((r.value - loss_value(r.q, r.d, a)).abs() <= 1e-15);
            }
        }

        #[test]
        fn selections_are_fixed_points(p in (2usize..10).prop_flat_map(stochastic), a in 0.01f64..15.0) {
            let n = p.n();
            for j in 0..n {
                for k in 0..n {
                    if j == k { continue; }
                    let sol = solve_pair(p.row(j), p.row(k), a).unwrap();
                    prop_assert_eq!(removals_on_resweep(p.row(j), p.row(k), &sol.plus_set, a), 0);
                    prop_assert!(sol.iterations <= n * (n - 1));
                }
            }
        }
    }
}

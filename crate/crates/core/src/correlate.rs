//! Generators for transition matrices of controllable correlation strength.
//!
//! Smoothing strength is only comparable between matrices of the same size.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;

/// Permutation matrix: row `j` puts all its mass on column `perm[j]`.
pub fn strongest_matrix(n: usize, perm: &[usize]) -> Result<TransitionMatrix> {
    let invalid = || Error::InvalidPermutation { n, perm: perm.to_vec() };
    if n == 0 || perm.len() != n {
        return Err(invalid());
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(invalid());
        }
    }
    let mut data = vec![0.0; n * n];
    for (j, &p) in perm.iter().enumerate() {
        data[j * n + p] = 1.0;
    }
    TransitionMatrix::from_row_major(n, data)
}

/// Single `n`-cycle `j -> j+1 mod n`, the default strongest correlation.
pub fn cycle_permutation(n: usize) -> Vec<usize> {
    (0..n).map(|j| (j + 1) % n).collect()
}

/// Laplacian smoothing `(p_jk + s) / sum_u (p_ju + s)`. Smaller `s` keeps
/// more of the original correlation; `s -> inf` tends to uniform rows.
pub fn smooth(p: &TransitionMatrix, s: f64) -> Result<TransitionMatrix> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::NonPositiveS(s));
    }
    let rows = p
        .rows()
        .map(|row| {
            let total: f64 = row.iter().map(|x| x + s).sum();
            row.iter().map(|x| (x + s) / total).collect()
        })
        .collect();
    TransitionMatrix::new(rows)
}

/// Entries drawn uniformly from `[0, 1)` then row-normalized. Uses ChaCha8
/// seeded with `seed`, so the result is reproducible across platforms.
pub fn random_stochastic(n: usize, seed: u64) -> Result<TransitionMatrix> {
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| loop {
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            if total > 0.0 {
                break raw.into_iter().map(|x| x / total).collect();
            }
        })
        .collect();
    TransitionMatrix::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lfp::loss_increment;
    use proptest::prelude::*;

    #[test]
    fn permutation_matrices() {
        assert_eq!(strongest_matrix(2, &[0, 1]).unwrap(), TransitionMatrix::identity(2));
        let c = strongest_matrix(3, &[1, 2, 0]).unwrap();
        assert_eq!(c.to_rows(), vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]);
        assert_eq!(cycle_permutation(3), vec![1, 2, 0]);
        for bad in [&[0usize, 0][..], &[0, 2], &[0]] {
            assert!(matches!(strongest_matrix(2, bad), Err(Error::InvalidPermutation { .. })));
        }
    }

    #[test]
    fn strongest_matrix_reproduces_alpha() {
        let m = strongest_matrix(5, &cycle_permutation(5)).unwrap();
        for alpha in [0.1, 1.0, 7.5] {
            let r = loss_increment(&m, alpha).unwrap();
            assert!((r.value - alpha).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothing_identity() {
        let m = smooth(&TransitionMatrix::identity(2), 1.0).unwrap();
        let r = m.to_rows();
        assert!((r[0][0] - 2.0 / 3.0).abs() < 1e-15 && (r[0][1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((r[1][0] - 1.0 / 3.0).abs() < 1e-15 && (r[1][1] - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(smooth(&m, 0.0), Err(Error::NonPositiveS(_))));
        assert!(matches!(smooth(&m, -1.0), Err(Error::NonPositiveS(_))));
    }

    #[test]
    fn heavy_smoothing_is_uniform() {
        let p = random_stochastic(7, 3).unwrap();
        let m = smooth(&p, 1e6).unwrap();
        assert!(m.rows().flatten().all(|&x| (x - 1.0 / 7.0).abs() < 1e-6));
    }

    #[test]
    fn random_is_deterministic() {
        assert_eq!(random_stochastic(6, 11).unwrap(), random_stochastic(6, 11).unwrap());
        assert_ne!(random_stochastic(6, 11).unwrap(), random_stochastic(6, 12).unwrap());
        assert_eq!(random_stochastic(1, 0).unwrap().to_rows(), vec![vec![1.0]]);
    }

    #[test]
    fn random_matrices_validate() {
        for seed in 0..1000 {
            let m = random_stochastic(12, seed).unwrap();
            let again = TransitionMatrix::new(m.to_rows()).unwrap();
            assert_eq!(again, m);
        }
    }

    fn tv_from_uniform(row: &[f64]) -> f64 {
        let u = 1.0 / row.len() as f64;
        0.5 * row.iter().map(|x| (x - u).abs()).sum::<f64>()
    }

    proptest! {
        #[test]
        fn smoothing_moves_toward_uniform(seed in 0u64..500, n in 2usize..8, s1 in 1e-3f64..10.0, ds in 0.0f64..10.0) {
            let p = random_stochastic(n, seed).unwrap();
            let a = smooth(&p, s1).unwrap();
            let b = smooth(&p, s1 + ds).unwrap();
            for (ra, rb) in a.rows().zip(b.rows()) {
                prop_assert!(tv_from_uniform(rb) <= tv_from_uniform(ra) + 1e-12);
                let sum: f64 = ra.iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
            }
        }
    }
}

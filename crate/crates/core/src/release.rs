//! Laplace-mechanism release of per-timestep location histograms.
//!
//! Each user sits at exactly one location per step, so the count vector has
//! L1 sensitivity 1 and budget `eps_t` calls for `Lap(1/eps_t)` noise on every
//! cell.

use std::io::{Read, Write};

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::{csv_error, fmt_f64, parse_field, reader};
use crate::schedule::BudgetSchedule;

/// Independent generator for `(seed, stream)`: ChaCha8 keyed by the seed,
/// with the stream id selecting one of its 2^64 streams.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One `Lap(scale)` draw by inverting the CDF of a single open-interval
/// uniform.
pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
    -scale * u.signum() * (-2.0 * u.abs()).ln_1p()
}

/// True counts at one timestep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountRow {
    pub t: usize,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReleaseSnapshot {
    pub t: usize,
    pub true_counts: Vec<u64>,
    pub noisy_counts: Vec<f64>,
    pub epsilon_used: f64,
}

/// Reads a counts CSV with header `t,loc_1,...,loc_n`.
pub fn ingest_counts<R: Read>(input: R) -> Result<Vec<CountRow>> {
    let mut rdr = reader(input, true);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.get(0) != Some("t") {
        return Err(Error::Parse { line: 1, column: 1, message: "counts header must start with t".into() });
    }
    let width = headers.len() - 1;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let r = record.map_err(csv_error)?;
        let t: usize = parse_field(&r, 0)?;
        if r.len() - 1 != width {
            return Err(Error::InconsistentWidth { t, len: r.len() - 1, expected: width });
        }
        let counts = (1..r.len())
            .map(|c| {
                let v: i64 = parse_field(&r, c)?;
                u64::try_from(v).map_err(|_| Error::NegativeCount { t, loc: c, value: v })
            })
            .collect::<Result<Vec<u64>>>()?;
        rows.push(CountRow { t, counts });
    }
    Ok(rows)
}

/// Adds `Lap(1/eps_t)` to every cell, using the `t`-th step of `schedule`
/// for the `t`-th row. Noise for a row depends only on `(seed, t)`.
pub fn release_sequence(rows: &[CountRow], schedule: &BudgetSchedule, seed: u64) -> Result<Vec<ReleaseSnapshot>> {
    let eps = schedule.materialize(rows.len())?;
    Ok(rows
        .iter()
        .zip(eps)
        .map(|(row, eps)| {
            let mut rng = substream(seed, row.t as u64);
            let scale = 1.0 / eps;
            let noisy_counts = row.counts.iter().map(|&c| c as f64 + sample_laplace(&mut rng, scale)).collect();
            ReleaseSnapshot { t: row.t, true_counts: row.counts.clone(), noisy_counts, epsilon_used: eps }
        })
        .collect())
}

/// Writes `t,loc_1,...,loc_n,epsilon_used` with noisy cells.
pub fn write_release<W: Write>(snapshots: &[ReleaseSnapshot], mut out: W) -> std::io::Result<()> {
    let n = snapshots.first().map_or(0, |s| s.noisy_counts.len());
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|k| format!("loc_{k}")));
    header.push("epsilon_used".into());
    writeln!(out, "{}", header.join(","))?;
    for s in snapshots {
        let mut line = vec![s.t.to_string()];
        line.extend(s.noisy_counts.iter().map(|&x| fmt_f64(x)));
        line.push(fmt_f64(s.epsilon_used));
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Horizon;

    #[test]
    fn ingests_rows() {
        let rows = ingest_counts("t,loc_1,loc_2\n1,3,5\n2,4,4\n".as_bytes()).unwrap();
        assert_eq!(rows, vec![CountRow { t: 1, counts: vec![3, 5] }, CountRow { t: 2, counts: vec![4, 4] }]);
        assert!(ingest_counts("t,loc_1,loc_2\n".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn ingest_errors() {
        assert!(matches!(
            ingest_counts("t,loc_1,loc_2\n1,-1,5\n".as_bytes()),
            Err(Error::NegativeCount { t: 1, loc: 1, value: -1 })
        ));
        assert!(matches!(
            ingest_counts("t,loc_1,loc_2\n1,3\n".as_bytes()),
            Err(Error::InconsistentWidth { t: 1, len: 1, expected: 2 })
        ));
        assert!(matches!(ingest_counts("time,a\n1,2\n".as_bytes()), Err(Error::Parse { .. })));
    }

    #[test]
    fn vanishing_noise() {
        let rows = vec![CountRow { t: 1, counts: vec![3, 5, 0] }];
        let s = BudgetSchedule::uniform(1e9, Horizon::Unbounded).unwrap();
        let out = release_sequence(&rows, &s, 42).unwrap();
        for (noisy, &truth) in out[0].noisy_counts.iter().zip(&rows[0].counts) {
            assert!((noisy - truth as f64).abs() < 1e-6);
        }
        assert_eq!(out[0].true_counts, rows[0].counts);
        assert_eq!(out[0].epsilon_used, 1e9);
    }

    #[test]
    fn deterministic_under_seed() {
        let rows = vec![CountRow { t: 1, counts: vec![1, 2] }, CountRow { t: 2, counts: vec![3, 4] }];
        let s = BudgetSchedule::uniform(0.5, Horizon::Unbounded).unwrap();
        let a = release_sequence(&rows, &s, 9).unwrap();
        assert_eq!(a, release_sequence(&rows, &s, 9).unwrap());
        assert_ne!(a, release_sequence(&rows, &s, 10).unwrap());
        // A row's noise depends on its own timestep only.
        let tail = release_sequence(&rows[1..], &s, 9).unwrap();
        assert_eq!(tail[0].noisy_counts, a[1].noisy_counts);
    }

    #[test]
    fn schedule_too_short() {
        let rows = vec![CountRow { t: 1, counts: vec![1] }; 3];
        let s = BudgetSchedule::from_steps(vec![1.0, 1.0]).unwrap();
        assert!(matches!(release_sequence(&rows, &s, 1), Err(Error::ScheduleTooShort { schedule: 2, needed: 3 })));
    }

    #[test]
    fn laplace_is_symmetric_and_scaled() {
        let mut rng = substream(5, 0);
        let n = 200_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_laplace(&mut rng, 2.0)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let mean_abs = draws.iter().map(|x| x.abs()).sum::<f64>() / n as f64;
        // sd of Lap(2) is 2*sqrt(2); sd of |Lap(2)| is 2.
        assert!(mean.abs() < 4.0 * 2.0 * 2f64.sqrt() / (n as f64).sqrt());
        assert!((mean_abs - 2.0).abs() < 4.0 * 2.0 / (n as f64).sqrt());
    }

    #[test]
    fn release_csv_layout() {
        let snaps =
            vec![ReleaseSnapshot { t: 1, true_counts: vec![1, 2], noisy_counts: vec![1.5, 2.0], epsilon_used: 0.5 }];
        let mut buf = Vec::new();
        write_release(&snaps, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,loc_1,loc_2,epsilon_used\n1,"));
    }
}

//! Seeded sampling and Monte Carlo estimation.
//!
//! Replicate `r` of seed `s` draws from ChaCha8 keyed by `s` on stream `r`; variable `j`
//! consumes the `j`-th 64-bit word of that stream. Per-replicate values are gathered in
//! replicate order and reduced with a fixed pairwise tree, so estimates do not depend on
//! the number of worker threads.

use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::chaos::Realization;
use crate::dist::{DistFamily, Model};
use crate::error::{Error, Result};

/// Uniform in `(0, 1)` from the top 53 bits, never hitting either end.
fn open_unit(word: u64) -> f64 {
    ((word >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn draw(family: DistFamily, word: u64, normal: &Normal) -> f64 {
    let u = open_unit(word);
    match family {
        DistFamily::Gaussian => normal.inverse_cdf(u),
        DistFamily::Rademacher => {
            if u < 0.5 {
                1.0
            } else {
                -1.0
            }
        }
        DistFamily::Uniform => 3f64.sqrt() * (2.0 * u - 1.0),
        DistFamily::CenteredExponential => -(-u).ln_1p() - 1.0,
        DistFamily::TwoPoint(p) => {
            if u < p {
                ((1.0 - p) / p).sqrt()
            } else {
                -(p / (1.0 - p)).sqrt()
            }
        }
    }
}

/// `X_0..X_{n-1}` for replicate `replicate` of `seed`.
pub fn sample(model: &Model, n: usize, seed: u64, replicate: u64) -> Result<Realization> {
    let mut values = Vec::with_capacity(n);
    sample_into(model, n, seed, replicate, &mut values)?;
    Ok(Realization {
        values,
        seed,
        replicate,
        model_tag: model.tag(),
    })
}

/// As [`sample`], reusing `out`.
pub fn sample_into(model: &Model, n: usize, seed: u64, replicate: u64, out: &mut Vec<f64>) -> Result<()> {
    let normal = Normal::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    out.clear();
    for j in 0..n {
        let family = model.family(j)?;
        out.push(draw(family, rng.next_u64(), &normal));
    }
    Ok(())
}

/// Sum with a split tree fixed by the slice length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(M)`.
    pub se: f64,
    pub replicates: u64,
    pub seed: u64,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl MCEstimate {
    fn from_values(values: &[f64], seed: u64, elapsed: Duration) -> Self {
        let m = values.len() as f64;
        let mean = pairwise_sum(values) / m;
        let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = pairwise_sum(&dev) / (m - 1.0);
        Self {
            mean,
            se: (var / m).sqrt(),
            replicates: values.len() as u64,
            seed,
            elapsed,
        }
    }

    /// Half-width of the two-sided 95% normal interval.
    pub fn ci95(&self) -> f64 {
        crate::tolerances::Z95 * self.se
    }

    pub fn within_sigmas(&self, target: f64, sigmas: f64) -> bool {
        (self.mean - target).abs() <= sigmas * self.se
    }
}

fn check_replicates(m: u64) -> Result<()> {
    if m < 2 {
        Err(Error::InvalidArgument(format!(
            "at least two replicates are required, got {m}"
        )))
    } else {
        Ok(())
    }
}

/// Mean and standard error of `functional` over `m` replicates of `n` variables.
pub fn estimate<F>(functional: F, model: &Model, n: usize, m: u64, seed: u64) -> Result<MCEstimate>
where
    F: Fn(&Realization) -> f64 + Sync,
{
    let est = estimate_vec(|omega| vec![functional(omega)], 1, model, n, m, seed)?;
    Ok(est[0])
}

/// Componentwise estimates for a functional returning `width` values per replicate.
pub fn estimate_vec<F>(
    functional: F,
    width: usize,
    model: &Model,
    n: usize,
    m: u64,
    seed: u64,
) -> Result<Vec<MCEstimate>>
where
    F: Fn(&Realization) -> Vec<f64> + Sync,
{
    check_replicates(m)?;
    let start = Instant::now();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let omega = sample(model, n, seed, r)?;
            let row = functional(&omega);
            if row.len() != width {
                return Err(Error::InvalidArgument(format!(
                    "functional returned {} values, expected {width}",
                    row.len()
                )));
            }
            if let Some(&bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    replicate: r,
                    value: bad,
                });
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let elapsed = start.elapsed();
    Ok((0..width)
        .map(|c| {
            let column: Vec<f64> = rows.iter().map(|row| row[c]).collect();
            MCEstimate::from_values(&column, seed, elapsed)
        })
        .collect())
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(f: DistFamily) -> std::sync::Arc<Model> {
        Model::homogeneous(f).unwrap()
    }

    #[test]
    fn rademacher_draws_are_signs() {
        let m = model(DistFamily::Rademacher);
        for r in 0..50 {
            let w = sample(&m, 16, 3, r).unwrap();
            assert!(w.values.iter().all(|&v| v == 1.0 || v == -1.0));
        }
    }

    #[test]
    fn sampling_is_deterministic_and_streams_differ() {
        let m = model(DistFamily::Gaussian);
        let a = sample(&m, 8, 11, 4).unwrap();
        assert_eq!(a, sample(&m, 8, 11, 4).unwrap());
        assert_ne!(a.values, sample(&m, 8, 11, 5).unwrap().values);
        assert_ne!(a.values, sample(&m, 8, 12, 4).unwrap().values);
        // A longer draw extends the shorter one.
        assert_eq!(&sample(&m, 16, 11, 4).unwrap().values[..8], &a.values[..]);
    }

    #[test]
    fn constant_functional() {
        let m = model(DistFamily::Uniform);
        let e = estimate(|_| 2.5, &m, 1, 100, 1).unwrap();
        assert_eq!(e.mean, 2.5);
        assert_eq!(e.se, 0.0);
        assert!(estimate(|_| 1.0, &m, 1, 1, 1).is_err());
    }

    #[test]
    fn non_finite_value_reports_replicate() {
        let m = model(DistFamily::Gaussian);
        let err = estimate(
            |w| if w.replicate == 7 { f64::NAN } else { 0.0 },
            &m,
            1,
            20,
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite { replicate: 7, .. }));
    }

    #[test]
    fn exponential_fourth_moment() {
        let m = model(DistFamily::CenteredExponential);
        let e = estimate(|w| w.values[0].powi(4), &m, 1, 100_000, 5).unwrap();
        assert!(e.within_sigmas(9.0, 3.0), "{e:?}");
    }

    #[test]
    fn worker_count_does_not_change_estimates() {
        let m = model(DistFamily::CenteredExponential);
        let f = |w: &Realization| w.values.iter().map(|v| v * v).sum::<f64>();
        let one = with_threads(1, || estimate(f, &m, 4, 5000, 9).unwrap()).unwrap();
        let many = with_threads(8, || estimate(f, &m, 4, 5000, 9).unwrap()).unwrap();
        assert_eq!(one.mean.to_bits(), many.mean.to_bits());
        assert_eq!(one.se.to_bits(), many.se.to_bits());
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}

//! k-nearest-neighbor mutual information estimator (Kraskov algorithm 1).
//!
//! MI = psi(k) + psi(n) - <psi(n_x + 1) + psi(n_y + 1)> with max-norm
//! neighborhoods, converted from nats to bits. Marginal counts n_x, n_y use a
//! strict radius, so exact ties would collapse the neighborhoods on discrete
//! data; a deterministic per-sample jitter far below any real value gap
//! breaks ties while leaving continuous inputs effectively untouched.

use super::{DependencyEstimate, Measure, MeasureError, PairedSamples};

pub const DEFAULT_KNN_K: usize = 3;
/// Below this many samples the estimate is reported as undefined.
pub const MIN_KNN_SAMPLES: usize = 10;

const JITTER_SCALE: f64 = 1e-10;

pub fn continuous_mi_knn(
    p: &PairedSamples,
    k: usize,
) -> Result<DependencyEstimate, MeasureError> {
    if p.is_empty() {
        return Err(MeasureError::Empty);
    }
    let n = p.len();
    if n < MIN_KNN_SAMPLES {
        return Ok(DependencyEstimate::undefined(Measure::ContinuousMi, n));
    }
    if k == 0 || k >= n {
        return Err(MeasureError::BadNeighborCount { k, n });
    }

    let x = jitter(&p.x.values);
    let y = jitter(&p.y.values);

    let mut psi_sum = 0.0;
    let mut kth = vec![f64::INFINITY; k];
    for i in 0..n {
        // k-th smallest max-norm distance to the other points.
        kth.fill(f64::INFINITY);
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = (x[i] - x[j]).abs().max((y[i] - y[j]).abs());
            if d < kth[k - 1] {
                let mut pos = k - 1;
                while pos > 0 && kth[pos - 1] > d {
                    kth[pos] = kth[pos - 1];
                    pos -= 1;
                }
                kth[pos] = d;
            }
        }
        let eps = kth[k - 1];
        let mut n_x = 0usize;
        let mut n_y = 0usize;
        for j in 0..n {
            if j == i {
                continue;
            }
            if (x[i] - x[j]).abs() < eps {
                n_x += 1;
            }
            if (y[i] - y[j]).abs() < eps {
                n_y += 1;
            }
        }
        psi_sum += digamma((n_x + 1) as f64) + digamma((n_y + 1) as f64);
    }

    let nats = digamma(k as f64) + digamma(n as f64) - psi_sum / n as f64;
    let bits = nats / std::f64::consts::LN_2;
    Ok(DependencyEstimate {
        measure: Measure::ContinuousMi,
        value: bits.max(0.0),
        raw_value: bits,
        sample_count: n,
        defined: true,
    })
}

/// Adds a deterministic sub-resolution offset per (index, value) pair.
///
/// The offset depends only on the series' own content, so swapping x and y
/// swaps the offsets with them and the estimator stays exactly symmetric.
fn jitter(values: &[f64]) -> Vec<f64> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let scale = ((hi - lo).max(1.0)) * JITTER_SCALE;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| v + scale * (hash01(i as u64, v.to_bits()) - 0.5))
        .collect()
}

fn hash01(index: u64, value_bits: u64) -> f64 {
    let mut z = index
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(value_bits.rotate_left(17));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

/// Digamma function via upward recurrence and the asymptotic series. The
/// recurrence threshold keeps the truncation error below 1e-13.
pub fn digamma(mut x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut acc = 0.0;
    while x < 14.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + x.ln() - 0.5 * inv
        - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 / 240.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depmeasures::SampleSeries;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn digamma_known_values() {
        assert!((digamma(1.0) + EULER_GAMMA).abs() < 1e-12);
        assert!((digamma(2.0) - (1.0 - EULER_GAMMA)).abs() < 1e-12);
        // psi(1/2) = -gamma - 2 ln 2
        assert!((digamma(0.5) + EULER_GAMMA + 2.0 * std::f64::consts::LN_2).abs() < 1e-10);
        // recurrence psi(x+1) = psi(x) + 1/x on a non-integer point
        assert!((digamma(4.7) - digamma(3.7) - 1.0 / 3.7).abs() < 1e-12);
    }

    #[test]
    fn tiny_samples_are_undefined_not_errors() {
        let p = PairedSamples::new(
            SampleSeries::continuous((0..8).map(f64::from).collect()),
            SampleSeries::continuous((0..8).map(f64::from).collect()),
        )
        .unwrap();
        let est = continuous_mi_knn(&p, 3).unwrap();
        assert!(!est.defined);
    }

    #[test]
    fn bad_k_is_an_error() {
        let p = PairedSamples::new(
            SampleSeries::continuous((0..12).map(f64::from).collect()),
            SampleSeries::continuous((0..12).map(f64::from).collect()),
        )
        .unwrap();
        assert!(matches!(
            continuous_mi_knn(&p, 0),
            Err(MeasureError::BadNeighborCount { .. })
        ));
        assert!(matches!(
            continuous_mi_knn(&p, 12),
            Err(MeasureError::BadNeighborCount { .. })
        ));
    }

    #[test]
    fn identity_beats_shuffle_on_smooth_data() {
        let n = 200;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let identical = PairedSamples::new(
            SampleSeries::continuous(xs.clone()),
            SampleSeries::continuous(xs.clone()),
        )
        .unwrap();
        // Fixed odd-stride permutation decorrelates the pairing.
        let shuffled: Vec<f64> = (0..n).map(|i| xs[(i * 73) % n]).collect();
        let independent = PairedSamples::new(
            SampleSeries::continuous(xs.clone()),
            SampleSeries::continuous(shuffled),
        )
        .unwrap();
        let hi = continuous_mi_knn(&identical, 3).unwrap();
        let lo = continuous_mi_knn(&independent, 3).unwrap();
        assert!(hi.value > 2.0, "identity MI {} should be large", hi.value);
        assert!(hi.value > lo.value + 1.0);
        assert!(lo.value < 0.5, "shuffled MI {} should be near zero", lo.value);
    }
}

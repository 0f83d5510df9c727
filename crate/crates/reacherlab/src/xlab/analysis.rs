//! Signal analyses: lag cross-correlation and paired bootstrap
//! significance over seeds.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("series too short ({len}) for max lag {max_lag}")]
    TooShort { len: usize, max_lag: usize },
    #[error("non-finite sample in series")]
    NonFinite,
}

/// Pearson correlation of `(x_t, y_{t+k})` for each lag `k`, using
/// overlapping samples only. `None` marks lags whose overlap has zero
/// variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlogram {
    pub lags: Vec<i64>,
    pub values: Vec<Option<f64>>,
}

impl Correlogram {
    /// Lag of the largest defined correlation value.
    pub fn argmax(&self) -> Option<(i64, f64)> {
        let mut best: Option<(i64, f64)> = None;
        for (lag, v) in self.lags.iter().zip(&self.values) {
            if let Some(v) = v {
                if best.map_or(true, |(_, bv)| *v > bv) {
                    best = Some((*lag, *v));
                }
            }
        }
        best
    }

    pub fn value_at(&self, lag: i64) -> Option<f64> {
        self.lags.iter().position(|l| *l == lag).and_then(|i| self.values[i])
    }
}

/// Mean of several correlograms over the same lag axis; a lag is defined
/// when it is defined in every input.
pub fn average_correlograms(grams: &[Correlogram]) -> Correlogram {
    assert!(!grams.is_empty());
    let lags = grams[0].lags.clone();
    let mut values = Vec::with_capacity(lags.len());
    for i in 0..lags.len() {
        let mut acc = 0.0;
        let mut ok = true;
        for g in grams {
            match g.values[i] {
                Some(v) => acc += v,
                None => ok = false,
            }
        }
        values.push(if ok { Some(acc / grams.len() as f64) } else { None });
    }
    Correlogram { lags, values }
}

/// Cross-correlation with per-overlap means and variances.
pub fn cross_correlation(
    x: &[f64],
    y: &[f64],
    max_lag: usize,
) -> Result<Correlogram, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() <= max_lag {
        return Err(AnalysisError::TooShort { len: x.len(), max_lag });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let n = x.len() as i64;
    let ml = max_lag as i64;
    let mut lags = Vec::with_capacity(2 * max_lag + 1);
    let mut values = Vec::with_capacity(2 * max_lag + 1);
    for k in -ml..=ml {
        let t0 = (-k).max(0);
        let t1 = (n - 1 - k.max(0)) + 1;
        let count = (t1 - t0) as f64;
        let xs = &x[t0 as usize..t1 as usize];
        let ys_start = (t0 + k) as usize;
        let ys = &y[ys_start..ys_start + xs.len()];

        let mx = xs.iter().sum::<f64>() / count;
        let my = ys.iter().sum::<f64>() / count;
        let mut cov = 0.0;
        let mut vx = 0.0;
        let mut vy = 0.0;
        for (a, b) in xs.iter().zip(ys) {
            let dx = a - mx;
            let dy = b - my;
            cov += dx * dy;
            vx += dx * dx;
            vy += dy * dy;
        }
        lags.push(k);
        if vx <= 1e-24 || vy <= 1e-24 {
            values.push(None);
        } else {
            values.push(Some(cov / (vx.sqrt() * vy.sqrt())));
        }
    }
    Ok(Correlogram { lags, values })
}

/// One-sided paired bootstrap: probability that the mean paired
/// difference is `<= 0` under resampling (add-one smoothed). Small values
/// support "first condition greater than second".
pub fn paired_bootstrap_p(diffs: &[f64], resamples: usize, rng: &mut ChaCha12Rng) -> f64 {
    assert!(!diffs.is_empty());
    let n = diffs.len();
    let mut at_or_below = 0usize;
    for _ in 0..resamples {
        let mut acc = 0.0;
        for _ in 0..n {
            acc += diffs[rng.gen_range(0..n)];
        }
        if acc / n as f64 <= 0.0 {
            at_or_below += 1;
        }
    }
    (at_or_below + 1) as f64 / (resamples + 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    /// Textbook oracle using raw moments, no shared code with the
    /// two-pass implementation.
    fn xcorr_oracle(x: &[f64], y: &[f64], max_lag: i64) -> Vec<(i64, Option<f64>)> {
        let n = x.len() as i64;
        let mut out = Vec::new();
        for k in -max_lag..=max_lag {
            let mut sx = 0.0;
            let mut sy = 0.0;
            let mut sxx = 0.0;
            let mut syy = 0.0;
            let mut sxy = 0.0;
            let mut c = 0.0;
            for t in 0..n {
                let u = t + k;
                if u < 0 || u >= n {
                    continue;
                }
                let (a, b) = (x[t as usize], y[u as usize]);
                sx += a;
                sy += b;
                sxx += a * a;
                syy += b * b;
                sxy += a * b;
                c += 1.0;
            }
            let vx = sxx - sx * sx / c;
            let vy = syy - sy * sy / c;
            let cov = sxy - sx * sy / c;
            out.push((k, if vx <= 1e-24 || vy <= 1e-24 { None } else { Some(cov / (vx * vy).sqrt()) }));
        }
        out
    }

    #[test]
    fn identical_series_peak_at_zero() {
        let x: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64).collect();
        let g = cross_correlation(&x, &x, 5).unwrap();
        let (lag, v) = g.argmax().unwrap();
        assert_eq!(lag, 0);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_series_peak_at_shift() {
        let mut r = rng(1);
        let n = 4000;
        let x: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        // y_t = x_{t-2}
        let y: Vec<f64> = (0..n).map(|t| if t >= 2 { x[t - 2] } else { 0.0 }).collect();
        let g = cross_correlation(&x, &y, 6).unwrap();
        let (lag, v) = g.argmax().unwrap();
        assert_eq!(lag, 2);
        assert!(v > 0.99);
        // Cross-check against the independent oracle at every lag.
        for (k, want) in xcorr_oracle(&x, &y, 6) {
            let got = g.value_at(k);
            match (got, want) {
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12, "lag {k}: {a} vs {b}"),
                (a, b) => assert_eq!(a, b),
            }
        }
    }

    #[test]
    fn constant_series_is_undefined_everywhere() {
        let x = vec![3.25; 50];
        let y: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let g = cross_correlation(&x, &y, 4).unwrap();
        assert!(g.values.iter().all(Option::is_none));
        assert!(g.argmax().is_none());
    }

    #[test]
    fn oracle_agreement_on_random_series() {
        let mut r = rng(2);
        for trial in 0..10 {
            let n = 500 + trial * 700;
            let x: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
            let g = cross_correlation(&x, &y, 10).unwrap();
            for (k, want) in xcorr_oracle(&x, &y, 10) {
                let got = g.value_at(k).unwrap();
                let want = want.unwrap();
                assert!((got - want).abs() < 1e-12, "n {n} lag {k}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn mismatched_or_short_series_error() {
        assert!(matches!(
            cross_correlation(&[1.0, 2.0], &[1.0], 0),
            Err(AnalysisError::LengthMismatch(2, 1))
        ));
        assert!(matches!(
            cross_correlation(&[1.0, 2.0], &[1.0, 2.0], 5),
            Err(AnalysisError::TooShort { .. })
        ));
    }

    #[test]
    fn bootstrap_all_positive_is_significant() {
        let p = paired_bootstrap_p(&[1.0, 2.0, 0.5, 1.5, 0.8], 10_000, &mut rng(3));
        assert!(p < 0.05, "p {p}");
    }

    #[test]
    fn bootstrap_centered_is_insignificant() {
        let p = paired_bootstrap_p(&[1.0, -1.0, 0.5, -0.5, 0.0], 10_000, &mut rng(4));
        assert!(p > 0.05, "p {p}");
    }

    #[test]
    fn bootstrap_is_deterministic_for_fixed_stream() {
        let d = [0.3, 0.1, 0.2, 0.4, 0.05];
        let a = paired_bootstrap_p(&d, 5000, &mut rng(5));
        let b = paired_bootstrap_p(&d, 5000, &mut rng(5));
        assert_eq!(a, b);
    }
}

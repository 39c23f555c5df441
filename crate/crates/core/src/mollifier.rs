//! Closed-form smoothing of a Haar expansion with the killed heat
//! semigroup.
//!
//! Convolving an indicator with the kernel
//! `p(t, x) = e^{-t} (2 pi t)^{-1/2} exp(-x^2 / 2t)` has the closed form
//! `e^{-t} Phi((x2 - x) t^{-1/2}) - e^{-t} Phi((x1 - x) t^{-1/2})` in terms
//! of the standard normal CDF, so smoothing a finite Haar sum costs one CDF
//! evaluation per dyadic endpoint and nothing else.

use crate::error::{Error, Result};
use crate::wavelet::{exp2i, HaarExpansion};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.3989422804014327; // 1 / sqrt(2 pi)

/// Standard normal CDF via the complementary error function,
/// `Phi(x) = erfc(-x / sqrt(2)) / 2`. Absolute error below 1e-14 over the
/// whole line; saturates exactly to 0 and 1 in the tails.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal density.
fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0) {
        return Err(Error::Parameter(format!(
            "mollification parameter eta must be strictly positive, got {eta}"
        )));
    }
    Ok(())
}

/// Killed-heat-semigroup smoothing of the indicator of `[x1, x2)`,
/// evaluated at `x`:
/// `e^{-eta} Phi((x2 - x) eta^{-1/2}) - e^{-eta} Phi((x1 - x) eta^{-1/2})`.
pub fn mollified_indicator(x1: f64, x2: f64, eta: f64, x: f64) -> Result<f64> {
    if !(x1 < x2) {
        return Err(Error::Argument(format!(
            "interval endpoints must satisfy x1 < x2, got [{x1}, {x2})"
        )));
    }
    check_eta(eta)?;
    Ok(mollified_indicator_unchecked(
        x1,
        x2,
        eta.sqrt(),
        (-eta).exp(),
        x,
    ))
}

/// Same expression with `sqrt(eta)` and `e^{-eta}` precomputed. All
/// callers, including the cached path in [`drift_eval`], round exactly as
/// this function does.
#[inline]
fn mollified_indicator_unchecked(x1: f64, x2: f64, sqrt_eta: f64, kill: f64, x: f64) -> f64 {
    kill * std_normal_cdf((x2 - x) / sqrt_eta) - kill * std_normal_cdf((x1 - x) / sqrt_eta)
}

/// Spatial derivative of [`mollified_indicator`] in `x`.
pub fn mollified_indicator_grad(x1: f64, x2: f64, eta: f64, x: f64) -> Result<f64> {
    if !(x1 < x2) {
        return Err(Error::Argument(format!(
            "interval endpoints must satisfy x1 < x2, got [{x1}, {x2})"
        )));
    }
    check_eta(eta)?;
    Ok(mollified_indicator_grad_unchecked(
        x1,
        x2,
        eta.sqrt(),
        (-eta).exp(),
        x,
    ))
}

#[inline]
fn mollified_indicator_grad_unchecked(x1: f64, x2: f64, sqrt_eta: f64, kill: f64, x: f64) -> f64 {
    (kill / sqrt_eta) * std_normal_pdf((x1 - x) / sqrt_eta)
        - (kill / sqrt_eta) * std_normal_pdf((x2 - x) / sqrt_eta)
}

/// Terms whose support lies farther than this many standard deviations
/// `sqrt(eta)` from the evaluation point are skipped. At 40 sigma the
/// normal CDF has already saturated in f64, so the skipped terms are
/// exactly zero and pruning does not change the result.
const SUPPORT_PRUNE_SIGMAS: f64 = 40.0;

/// A Haar expansion together with a strictly positive mollification
/// parameter; evaluates the smoothed drift and its gradient in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifiedDrift {
    expansion: HaarExpansion,
    eta: f64,
}

impl MollifiedDrift {
    /// `eta = 0` is rejected: the closed form degenerates and pointwise
    /// evaluation of the raw expansion is served by `haar_sum_eval`.
    pub fn new(expansion: HaarExpansion, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        Ok(Self { expansion, eta })
    }

    pub fn expansion(&self) -> &HaarExpansion {
        &self.expansion
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// The expansion CSV preceded by an `# eta=` comment line.
    pub fn to_csv(&self) -> String {
        format!("# eta={}\n{}", self.eta, self.expansion.to_csv())
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut eta: Option<f64> = None;
        for line in text.lines() {
            if let Some(rest) = line.trim().strip_prefix('#') {
                if let Some(e) = rest.trim().strip_prefix("eta=") {
                    eta = Some(
                        e.parse()
                            .map_err(|_| Error::Parse(format!("bad eta value '{e}'")))?,
                    );
                }
            }
        }
        let eta = eta.ok_or_else(|| Error::Parse("missing '# eta=' line".into()))?;
        Self::new(HaarExpansion::from_csv(text)?, eta)
    }
}

/// Pass over every stored term of the expansion near `x`, in a fixed order
/// (the `h0` term, then levels ascending, positions ascending), applying
/// `term` to the endpoint pair of each wavelet half-interval combination.
///
/// `eval` maps a dyadic endpoint `p` to `e^{-eta} f((p - x)/sqrt(eta))`
/// for the CDF or the density; values are cached per endpoint of the finest
/// grid so each is computed once.
fn accumulate_terms(drift: &MollifiedDrift, x: f64, eval: impl Fn(f64) -> f64) -> f64 {
    let exp = &drift.expansion;
    let radius = SUPPORT_PRUNE_SIGMAS * drift.eta.sqrt();
    let fine = exp2i(exp.level() + 1);
    let mut cache = vec![f64::NAN; fine as usize + 1];
    let at = |k: usize, cache: &mut Vec<f64>| -> f64 {
        if cache[k].is_nan() {
            cache[k] = eval(k as f64 / fine);
        }
        cache[k]
    };

    let mut acc = 0.0;
    // h0 term over (0, 1).
    if x + radius >= 0.0 && x - radius <= 1.0 {
        let lo = at(0, &mut cache);
        let hi = at(cache.len() - 1, &mut cache);
        acc += exp.scaling_coeff() * (hi - lo);
    }
    for j in 0..=exp.level() {
        let count = 1u64 << j;
        let scale = exp2i(j);
        // Positions whose support [m/2^j, (m+1)/2^j] meets the pruning
        // window around x.
        let lo = ((x - radius) * scale).floor().max(0.0) as u64;
        let hi_f = (x + radius) * scale;
        if hi_f < 0.0 || lo >= count {
            continue;
        }
        let hi = (hi_f.floor() as u64).min(count - 1);
        let stride = 1usize << (exp.level() + 1 - j);
        let half = stride / 2;
        for m in lo..=hi {
            let base = m as usize * stride;
            let e_left = at(base, &mut cache);
            let e_mid = at(base + half, &mut cache);
            let e_right = at(base + stride, &mut cache);
            // Positive half minus negative half of the wavelet, each a
            // smoothed indicator.
            let idx = crate::wavelet::DyadicIndex::new(j, m as u32).expect("in range");
            acc += exp.detail(idx) * ((e_mid - e_left) - (e_right - e_mid));
        }
    }
    acc
}

/// Evaluate the smoothed drift at `x`: the `h0` term plus, for every
/// stored detail coefficient, the smoothed positive half-interval minus
/// the smoothed negative half-interval.
pub fn drift_eval(drift: &MollifiedDrift, x: f64) -> f64 {
    let sqrt_eta = drift.eta.sqrt();
    let kill = (-drift.eta).exp();
    accumulate_terms(drift, x, |p| kill * std_normal_cdf((p - x) / sqrt_eta))
}

/// Exact spatial derivative of [`drift_eval`], obtained by differentiating
/// every CDF into a Gaussian density.
pub fn drift_grad_eval(drift: &MollifiedDrift, x: f64) -> f64 {
    let sqrt_eta = drift.eta.sqrt();
    let kill = (-drift.eta).exp();
    accumulate_terms(drift, x, |p| {
        -(kill / sqrt_eta) * std_normal_pdf((p - x) / sqrt_eta)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::{haar_coefficients_from_samples, DyadicIndex};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cdf_reference_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert_eq!(std_normal_cdf(40.0), 1.0);
        assert_eq!(std_normal_cdf(f64::INFINITY), 1.0);
        assert!((std_normal_cdf(1.0) - 0.8413447460685429).abs() <= 1e-14);
        assert!((std_normal_cdf(-1.0) - 0.15865525393145705).abs() <= 1e-14);
        assert!((std_normal_cdf(2.0) - 0.9772498680518208).abs() <= 1e-14);
    }

    #[test]
    fn cdf_is_monotone() {
        let mut prev = 0.0;
        for k in 0..=20_000 {
            let x = -10.0 + k as f64 * 1e-3;
            let v = std_normal_cdf(x);
            assert!(v >= prev, "CDF decreased at x = {x}");
            prev = v;
        }
    }

    #[test]
    fn indicator_midpoint_value() {
        // Symmetric interval: e^{-eta} (2 Phi(w / 2 sqrt(eta)) - 1).
        let v = mollified_indicator(0.0, 1.0, 0.01, 0.5).unwrap();
        let expected = (-0.01f64).exp() * (2.0 * std_normal_cdf(5.0) - 1.0);
        assert_relative_eq!(v, expected, max_relative = 1e-15);
        assert_relative_eq!(v, 0.990049, max_relative = 1e-5);
    }

    #[test]
    fn indicator_limits() {
        // Tiny eta in the interior: the mollifier concentrates.
        let v = mollified_indicator(0.0, 1.0, 1e-10, 0.5).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-9);
        // Far outside the interval: Gaussian tail.
        let far = mollified_indicator(0.0, 1.0, 1e-4, 1.0 + 41.0 * 1e-2).unwrap();
        assert!(far.abs() <= 1e-14);
    }

    #[test]
    fn indicator_argument_checks() {
        assert!(matches!(
            mollified_indicator(1.0, 1.0, 0.1, 0.0),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            mollified_indicator(0.0, 1.0, 0.0, 0.0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            mollified_indicator(0.0, 1.0, -0.5, 0.0),
            Err(Error::Parameter(_))
        ));
        assert!(MollifiedDrift::new(HaarExpansion::zero(0), 0.0).is_err());
    }

    fn single_detail(level: u32, pos: u32, value: f64) -> HaarExpansion {
        let mut details = vec![0.0; (1usize << (level + 1)) - 1];
        details[(1usize << level) - 1 + pos as usize] = value;
        HaarExpansion::from_parts(level, 0.0, details).unwrap()
    }

    #[test]
    fn drift_single_h0_term_matches_indicator() {
        let drift =
            MollifiedDrift::new(HaarExpansion::from_parts(0, 1.0, vec![0.0]).unwrap(), 0.02)
                .unwrap();
        for x in [-0.3, 0.0, 0.2, 0.5, 0.9, 1.4] {
            assert_eq!(
                drift_eval(&drift, x),
                mollified_indicator(0.0, 1.0, 0.02, x).unwrap()
            );
        }
    }

    #[test]
    fn drift_single_wavelet_matches_indicator_difference() {
        let drift = MollifiedDrift::new(single_detail(2, 1, 1.0), 0.005).unwrap();
        let idx = DyadicIndex::new(2, 1).unwrap();
        for x in [-0.1, 0.25, 0.3, 0.3125, 0.4, 0.8] {
            let lhs = drift_eval(&drift, x);
            let rhs = mollified_indicator(idx.support_left(), idx.support_mid(), 0.005, x).unwrap()
                - mollified_indicator(idx.support_mid(), idx.support_right(), 0.005, x).unwrap();
            assert_eq!(lhs, rhs, "x = {x}");
        }
    }

    #[test]
    fn drift_odd_symmetry_about_half() {
        // The level-0 wavelet is odd about 1/2 and the kernel is even, so
        // the smoothed value at the centre vanishes up to the rounding of
        // the two CDF tails.
        let drift = MollifiedDrift::new(single_detail(0, 0, 1.0), 0.03).unwrap();
        assert!(drift_eval(&drift, 0.5).abs() <= 1e-15);
    }

    #[test]
    fn grad_of_symmetric_term_vanishes_at_centre() {
        let drift =
            MollifiedDrift::new(HaarExpansion::from_parts(0, 1.0, vec![0.0]).unwrap(), 0.04)
                .unwrap();
        assert!(drift_grad_eval(&drift, 0.5).abs() <= 1e-16);
        let zero = MollifiedDrift::new(HaarExpansion::zero(3), 0.04).unwrap();
        for x in [-1.0, 0.1, 0.6, 2.0] {
            assert_eq!(drift_grad_eval(&zero, x), 0.0);
            assert_eq!(drift_eval(&zero, x), 0.0);
        }
    }

    #[test]
    fn grad_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let samples: Vec<f64> = (0..33).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let exp = haar_coefficients_from_samples(&samples, 4).unwrap();
        for &eta in &[1e-1, 1e-2, 1e-3] {
            let drift = MollifiedDrift::new(exp.clone(), eta).unwrap();
            for _ in 0..100 {
                let x = rng.gen_range(-0.5..1.5);
                let h = 1e-6;
                let fd = (drift_eval(&drift, x + h) - drift_eval(&drift, x - h)) / (2.0 * h);
                let grad = drift_grad_eval(&drift, x);
                assert!(
                    (fd - grad).abs() <= 1e-5,
                    "eta {eta}, x {x}: fd {fd} vs grad {grad}"
                );
            }
        }
    }

    #[test]
    fn drift_is_linear_in_the_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let a: Vec<f64> = (0..17).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..17).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(u, v)| u + v).collect();
        let ea = haar_coefficients_from_samples(&a, 3).unwrap();
        let eb = haar_coefficients_from_samples(&b, 3).unwrap();
        let es = haar_coefficients_from_samples(&sum, 3).unwrap();
        let eta = 0.01;
        let da = MollifiedDrift::new(ea, eta).unwrap();
        let db = MollifiedDrift::new(eb, eta).unwrap();
        let ds = MollifiedDrift::new(es, eta).unwrap();
        for _ in 0..200 {
            let x = rng.gen_range(-0.5..1.5);
            let lhs = drift_eval(&ds, x);
            let rhs = drift_eval(&da, x) + drift_eval(&db, x);
            assert!((lhs - rhs).abs() <= 1e-12, "x = {x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn sup_norm_shrinks_with_more_smoothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for case in 0..20 {
            let samples: Vec<f64> = (0..65).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let exp = haar_coefficients_from_samples(&samples, 5).unwrap();
            let sup = |eta: f64| {
                let d = MollifiedDrift::new(exp.clone(), eta).unwrap();
                (0..=10_000)
                    .map(|k| drift_eval(&d, k as f64 * 1e-4).abs())
                    .fold(0.0f64, f64::max)
            };
            let (s1, s2, s3) = (sup(1e-1), sup(1e-2), sup(1e-3));
            assert!(
                s1 <= s2 && s2 <= s3,
                "case {case}: sup profile not monotone ({s1}, {s2}, {s3})"
            );
        }
    }

    #[test]
    fn csv_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let samples: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let exp = haar_coefficients_from_samples(&samples, 2).unwrap();
        let drift = MollifiedDrift::new(exp, 0.015625).unwrap();
        let text = drift.to_csv();
        let back = MollifiedDrift::from_csv(&text).unwrap();
        assert_eq!(drift, back);
        assert_eq!(text, back.to_csv());
    }
}

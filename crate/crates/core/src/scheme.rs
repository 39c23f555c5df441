//! Euler-Maruyama integration with Brownian increments shared across step
//! resolutions.
//!
//! Strong-error estimation compares paths driven by the *same* Brownian
//! motion at different step counts, so increments are always drawn once on
//! a fine dyadic grid and coarsened by block summation.

use crate::error::{Error, Result};
use crate::mollifier::{drift_eval, MollifiedDrift};
use crate::wavelet::{haar_sum_eval, HaarExpansion};
use rand::Rng;
use rand_distr::StandardNormal;

/// Anything the integrator can use as a drift coefficient.
///
/// The scheme itself runs on the mollified drift; the raw truncated
/// expansion is also a bounded function and serves as the drift of the
/// proxy ("truth") run in the convergence studies.
pub trait DriftFunction {
    fn value_at(&self, x: f64) -> f64;
}

impl DriftFunction for MollifiedDrift {
    fn value_at(&self, x: f64) -> f64 {
        drift_eval(self, x)
    }
}

impl DriftFunction for HaarExpansion {
    fn value_at(&self, x: f64) -> f64 {
        haar_sum_eval(self, x)
    }
}

/// Time horizon, initial condition and step count of one Euler run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub horizon: f64,
    pub x0: f64,
    pub steps: usize,
}

impl SchemeConfig {
    pub fn new(horizon: f64, x0: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::Parameter(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(Error::Parameter("step count must be at least 1".into()));
        }
        Ok(Self { horizon, x0, steps })
    }

    /// Horizon 1, start at the origin, as used by the convergence studies.
    pub fn unit(steps: usize) -> Result<Self> {
        Self::new(1.0, 0.0, steps)
    }
}

/// Independent `N(0, T/m)` increments of one Brownian path on the finest
/// resolution used by a study.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianGrid {
    horizon: f64,
    increments: Vec<f64>,
}

impl BrownianGrid {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn fine_steps(&self) -> usize {
        self.increments.len()
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }
}

/// Draw `m_fine` independent `N(0, T/m_fine)` increments.
pub fn sample_brownian_grid<R: Rng + ?Sized>(
    horizon: f64,
    m_fine: usize,
    rng: &mut R,
) -> Result<BrownianGrid> {
    if !(horizon > 0.0) {
        return Err(Error::Parameter(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if m_fine == 0 || !m_fine.is_power_of_two() {
        return Err(Error::Precondition(format!(
            "fine step count must be a power of two, got {m_fine}"
        )));
    }
    let std = (horizon / m_fine as f64).sqrt();
    let increments = (0..m_fine)
        .map(|_| std * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(BrownianGrid {
        horizon,
        increments,
    })
}

/// Sum the fine increments into `m` coarse increments, left to right within
/// each block. Requires `m` to divide the fine step count.
pub fn coarsen(bg: &BrownianGrid, m: usize) -> Result<Vec<f64>> {
    let fine = bg.increments.len();
    if m == 0 || !fine.is_multiple_of(m) {
        return Err(Error::Precondition(format!(
            "coarse step count {m} does not divide the fine step count {fine}"
        )));
    }
    let block = fine / m;
    Ok(bg
        .increments
        .chunks_exact(block)
        .map(|chunk| chunk.iter().fold(0.0, |acc, dw| acc + dw))
        .collect())
}

/// One discrete trajectory: states at the uniform grid times `k T / m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    times: Vec<f64>,
    states: Vec<f64>,
}

impl SamplePath {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    /// CSV with header `t,x`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x\n");
        for (t, x) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{t},{x}\n"));
        }
        out
    }
}

/// Left-point Euler-Maruyama update driven by the given increments:
/// `X_{k+1} = X_k + a(X_k) T/m + dW_k`, with the drift evaluated only at
/// grid points.
pub fn euler_maruyama<D: DriftFunction + ?Sized>(
    drift: &D,
    cfg: &SchemeConfig,
    increments: &[f64],
) -> Result<SamplePath> {
    if increments.len() != cfg.steps {
        return Err(Error::Dimension {
            expected: cfg.steps,
            actual: increments.len(),
        });
    }
    let m = cfg.steps;
    let dt = cfg.horizon / m as f64;
    let mut states = Vec::with_capacity(m + 1);
    let mut x = cfg.x0;
    states.push(x);
    for &dw in increments {
        x = x + drift.value_at(x) * dt + dw;
        states.push(x);
    }
    let times = (0..=m).map(|k| k as f64 * cfg.horizon / m as f64).collect();
    Ok(SamplePath { times, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::HaarExpansion;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_drift() -> MollifiedDrift {
        MollifiedDrift::new(HaarExpansion::zero(2), 0.01).unwrap()
    }

    #[test]
    fn brownian_grid_is_deterministic() {
        let a = sample_brownian_grid(1.0, 16, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = sample_brownian_grid(1.0, 16, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert!(sample_brownian_grid(1.0, 12, &mut ChaCha8Rng::seed_from_u64(3)).is_err());
        assert!(sample_brownian_grid(0.0, 16, &mut ChaCha8Rng::seed_from_u64(3)).is_err());
    }

    #[test]
    fn increment_moments() {
        // Per-slot variance T/m and total variance T, both at 3 sigma over
        // 100k draws.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 100_000usize;
        let m = 8usize;
        let mut slot_sq = vec![0.0f64; m];
        let mut total_sq = 0.0f64;
        for _ in 0..n {
            let bg = sample_brownian_grid(1.0, m, &mut rng).unwrap();
            let mut total = 0.0;
            for (k, &dw) in bg.increments().iter().enumerate() {
                slot_sq[k] += dw * dw;
                total += dw;
            }
            total_sq += total * total;
        }
        let nf = n as f64;
        for (k, &sq) in slot_sq.iter().enumerate() {
            let var = sq / nf;
            let sigma = (2.0 / nf).sqrt() * 0.125; // Var(chi^2 mean) = 2 var^2 / n
            assert!(
                (var - 0.125).abs() <= 3.0 * sigma,
                "slot {k}: {var} vs 0.125"
            );
        }
        let var = total_sq / nf;
        let sigma = (2.0 / nf).sqrt();
        assert!((var - 1.0).abs() <= 3.0 * sigma, "total variance {var}");
    }

    #[test]
    fn coarsen_identity_and_total() {
        let bg = sample_brownian_grid(1.0, 16, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(coarsen(&bg, 16).unwrap(), bg.increments());
        let total = coarsen(&bg, 1).unwrap();
        assert_eq!(total.len(), 1);
        let direct: f64 = bg.increments().iter().fold(0.0, |a, b| a + b);
        assert_eq!(total[0], direct);
        assert!(coarsen(&bg, 3).is_err());
        assert!(coarsen(&bg, 0).is_err());
    }

    #[test]
    fn coarsen_blocks_are_direct_sums() {
        let bg = sample_brownian_grid(1.0, 16, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        let coarse = coarsen(&bg, 4).unwrap();
        for (i, &c) in coarse.iter().enumerate() {
            let manual = bg.increments()[4 * i..4 * (i + 1)]
                .iter()
                .fold(0.0, |a, b| a + b);
            assert_eq!(c, manual);
        }
    }

    #[test]
    fn coupling_telescopes_total_noise() {
        let bg = sample_brownian_grid(1.0, 256, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let fine_total: f64 = bg.increments().iter().sum();
        for m in [2usize, 8, 32, 128] {
            let total: f64 = coarsen(&bg, m).unwrap().iter().sum();
            assert!(
                (total - fine_total).abs() <= 1e-12,
                "m = {m}: {total} vs {fine_total}"
            );
        }
    }

    #[test]
    fn zero_drift_path_is_exact_brownian_sum() {
        let bg = sample_brownian_grid(1.0, 64, &mut ChaCha8Rng::seed_from_u64(13)).unwrap();
        let cfg = SchemeConfig::unit(64).unwrap();
        let path = euler_maruyama(&zero_drift(), &cfg, bg.increments()).unwrap();
        let mut s = 0.0f64;
        assert_eq!(path.states()[0], 0.0);
        for (k, &dw) in bg.increments().iter().enumerate() {
            s += dw;
            assert_eq!(path.states()[k + 1], s, "state {k} differs from cumsum");
        }
    }

    #[test]
    fn single_step_update() {
        let exp = HaarExpansion::from_parts(0, 1.0, vec![0.0]).unwrap();
        let drift = MollifiedDrift::new(exp, 0.01).unwrap();
        let v = drift_eval(&drift, 0.0);
        let cfg = SchemeConfig::new(1.0, 0.0, 1).unwrap();
        let path = euler_maruyama(&drift, &cfg, &[0.3]).unwrap();
        assert_eq!(path.states()[1], v * 1.0 + 0.3);
        let cfg2 = SchemeConfig::new(2.0, 0.0, 1).unwrap();
        let path2 = euler_maruyama(&drift, &cfg2, &[0.3]).unwrap();
        assert_eq!(path2.states()[1], v * 2.0 + 0.3);
    }

    #[test]
    fn drift_vanishes_far_from_support() {
        // Start far from (0,1) with no noise: the drift is Gaussian-tail
        // small there, so the state stays put.
        let exp = HaarExpansion::from_parts(0, 1.0, vec![0.5]).unwrap();
        let drift = MollifiedDrift::new(exp, 0.01).unwrap();
        let cfg = SchemeConfig::new(1.0, 5.0, 8).unwrap();
        let path = euler_maruyama(&drift, &cfg, &[0.0; 8]).unwrap();
        for &x in path.states() {
            assert!((x - 5.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn shift_equivariance_with_zero_drift() {
        // Adding a constant to x0 shifts every state by that constant, up
        // to the reordering of the floating-point sums.
        let bg = sample_brownian_grid(1.0, 32, &mut ChaCha8Rng::seed_from_u64(17)).unwrap();
        let drift = zero_drift();
        let base = euler_maruyama(
            &drift,
            &SchemeConfig::new(1.0, 0.0, 32).unwrap(),
            bg.increments(),
        )
        .unwrap();
        let shifted = euler_maruyama(
            &drift,
            &SchemeConfig::new(1.0, 2.5, 32).unwrap(),
            bg.increments(),
        )
        .unwrap();
        for (a, b) in base.states().iter().zip(shifted.states()) {
            assert!((b - a - 2.5).abs() <= 1e-12);
        }
    }

    #[test]
    fn determinism_and_length_checks() {
        let bg = sample_brownian_grid(1.0, 8, &mut ChaCha8Rng::seed_from_u64(19)).unwrap();
        let cfg = SchemeConfig::unit(8).unwrap();
        let drift = zero_drift();
        let a = euler_maruyama(&drift, &cfg, bg.increments()).unwrap();
        let b = euler_maruyama(&drift, &cfg, bg.increments()).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            euler_maruyama(&drift, &cfg, &bg.increments()[..4]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn sample_path_csv() {
        let cfg = SchemeConfig::unit(2).unwrap();
        let path = euler_maruyama(&zero_drift(), &cfg, &[0.5, -0.25]).unwrap();
        assert_eq!(path.to_csv(), "t,x\n0,0\n0.5,0.5\n1,0.25\n");
    }
}

//! Convergence-rate schedules, Monte-Carlo strong-error estimation against
//! a fine-grid proxy, and log-log rate fitting.
//!
//! A study fixes one random drift realization (quenched: the same drift is
//! shared by every Monte-Carlo path) and varies only the Brownian noise.
//! Each path is integrated once at the proxy resolution `m0` with the
//! *raw* truncated drift, standing in for the true solution, and, driven
//! by block-summed increments of the same Brownian grid, with the
//! mollified drift at every coarse resolution in the study's list (each
//! with its scheduled smoothing parameter). The reported error per `m` is
//! the maximum over that resolution's grid times of the mean absolute gap
//! to the proxy.

use crate::error::{Error, Result};
use crate::fbm::{sample_fbm, Grid};
use crate::mollifier::MollifiedDrift;
use crate::scheme::{coarsen, euler_maruyama, sample_brownian_grid, DriftFunction, SchemeConfig};
use crate::wavelet::{haar_coefficients_from_samples, HaarExpansion, MAX_LEVEL};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Time horizon of every study integration.
pub const HORIZON: f64 = 1.0;
/// Initial condition of every study integration.
pub const X0: f64 = 0.0;
/// Hurst indices are capped here by the drift-construction rule. A larger
/// cap makes the sampled drift so regular that the proxy comparison
/// degenerates into a smooth-drift Euler study and the fitted rates climb
/// toward 1 regardless of `beta0`.
pub const HURST_CAP: f64 = 0.85;
/// Mean absolute errors at or below this are treated as a degenerate
/// (effectively zero) error: coupled paths that agree exactly in real
/// arithmetic still differ by reordered floating-point sums, which stay
/// under 1e-13 at the resolutions used here.
pub const DEGENERATE_ERROR_FLOOR: f64 = 1e-13;

/// Rate-schedule constants derived from a regularity pair `(beta0, q0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    pub beta0: f64,
    /// Integrability index; `f64::INFINITY` encodes the limiting case.
    pub q0: f64,
    pub gamma0: f64,
    pub theta_star: f64,
    pub predicted_rate: f64,
}

/// Evaluate the rate-schedule constants:
/// `gamma0 = 1 - beta0 - 1/q0`,
/// `theta_star = 1/2 * (3/4 - beta0 (gamma0 - 1/2))^{-1}`,
/// `predicted_rate = theta_star (1/2 - beta0) (gamma0 - 1/2)`.
///
/// The arbitrarily small epsilon that the rate formally carries is reported
/// as zero (the supremal rate).
pub fn theoretical_rate(beta0: f64, q0: f64) -> Result<RateParams> {
    if !(0.0..0.25).contains(&beta0) {
        return Err(Error::Parameter(format!(
            "beta0 must lie in [0, 1/4), got {beta0}"
        )));
    }
    if !(q0 > 4.0) {
        return Err(Error::Parameter(format!(
            "q0 must exceed 4 (or be infinite), got {q0}"
        )));
    }
    let gamma0 = 1.0 - beta0 - 1.0 / q0;
    if !(gamma0 > 0.5) {
        return Err(Error::Parameter(format!(
            "gamma0 = 1 - beta0 - 1/q0 = {gamma0} must exceed 1/2"
        )));
    }
    let theta_star = 0.5 / (0.75 - beta0 * (gamma0 - 0.5));
    let predicted_rate = theta_star * (0.5 - beta0) * (gamma0 - 0.5);
    Ok(RateParams {
        beta0,
        q0,
        gamma0,
        theta_star,
        predicted_rate,
    })
}

/// The largest admissible integrability index for a given `beta0`:
/// `1/beta0`, or infinite at `beta0 = 0`. This is the choice that the
/// theoretical column of the rate table uses.
pub fn supremal_q0(beta0: f64) -> f64 {
    if beta0 == 0.0 {
        f64::INFINITY
    } else {
        1.0 / beta0
    }
}

/// Mollification parameter and truncation level coupled to a step count:
/// `eta = m^{-theta_star}` and `N = ceil(2 theta_star log2 m)`.
pub fn schedule(m: usize, theta_star: f64) -> Result<(f64, u32)> {
    if m < 2 {
        return Err(Error::Parameter(format!(
            "step count must be at least 2, got {m}"
        )));
    }
    if !(theta_star > 0.0) {
        return Err(Error::Parameter(format!(
            "theta_star must be positive, got {theta_star}"
        )));
    }
    let mf = m as f64;
    let eta = mf.powf(-theta_star);
    let level = (2.0 * theta_star * mf.log2()).ceil() as u32;
    Ok((eta, level))
}

/// Hurst index used for a given regularity:
/// `min(1 - beta0 + 0.01, 0.85)`.
///
/// For `beta0 >= 0.16` this satisfies the strict regularity inequality
/// `hurst > 1 - beta0`; smaller `beta0` clamps to the cap, where the
/// sampled drift is rougher than the regularity label and `beta0` acts
/// purely as the schedule parameter. Keeping one roughness across the
/// small-`beta0` rows is what makes their fitted rates comparable.
pub fn hurst_rule(beta0: f64) -> f64 {
    (1.0 - beta0 + 0.01).min(HURST_CAP)
}

/// Reserved ChaCha stream for drift construction, separate from the path
/// streams so a shared seed value cannot correlate drift and noise.
const DRIFT_STREAM: u64 = u64::MAX;

/// Random source for the drift construction of a study.
pub fn drift_rng(drift_seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(drift_seed);
    rng.set_stream(DRIFT_STREAM);
    rng
}

/// Random source of Monte-Carlo path `i`: ChaCha8 seeded with
/// `master_seed` on stream `i`. A pure function of `(master_seed, i)`, so
/// results do not depend on path count, thread count or scheduling order.
pub fn path_rng(master_seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(path_index);
    rng
}

/// Build the rough drift for a study: sample one fractional Brownian path
/// on the `2^(level+1) + 1`-point dyadic grid (with the implicit zero at
/// the origin prepended) and take Haar coefficients of its derivative.
///
/// Requires `hurst > 3/4` and `hurst > 1 - beta0`; where the latter
/// exceeds [`HURST_CAP`] (all `beta0 <= 0.15`), the requirement relaxes to
/// `hurst >= 0.85` to match [`hurst_rule`].
pub fn build_drift(beta0: f64, hurst: f64, level: u32, drift_seed: u64) -> Result<HaarExpansion> {
    if !(0.0..0.25).contains(&beta0) {
        return Err(Error::Parameter(format!(
            "beta0 must lie in [0, 1/4), got {beta0}"
        )));
    }
    if !(hurst > 0.75) {
        return Err(Error::Parameter(format!(
            "hurst must exceed 3/4, got {hurst}"
        )));
    }
    let lower = 1.0 - beta0;
    if lower < HURST_CAP {
        if !(hurst > lower) {
            return Err(Error::Parameter(format!(
                "hurst must exceed 1 - beta0 = {lower}, got {hurst}"
            )));
        }
    } else if !(hurst >= HURST_CAP) {
        return Err(Error::Parameter(format!(
            "hurst must be at least {HURST_CAP} for beta0 = {beta0} (clamped rule), got {hurst}"
        )));
    }
    if level >= MAX_LEVEL {
        return Err(Error::Parameter(format!(
            "level {level} too large; must stay below {MAX_LEVEL}"
        )));
    }
    let n = 1usize << (level + 1);
    let grid = Grid::dyadic(n)?;
    let mut rng = drift_rng(drift_seed);
    let path = sample_fbm(&grid, hurst, &mut rng)?;
    haar_coefficients_from_samples(&path.values_with_origin(), level)
}

/// How a study picks the mollification parameter of its coarse runs.
/// The proxy run always integrates the raw truncated drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaRule {
    /// Rate-optimal coupling: the run at resolution `m` uses
    /// `eta = m^{-theta_star}`, with `theta_star` from the supremal `q0`.
    /// The coarse-versus-proxy error then contains the mollification error
    /// alongside the time discretization; `theta_star` is the exponent
    /// that balances the two.
    Schedule,
    /// One fixed value for every coarse resolution.
    Fixed(f64),
}

/// Full parameter set of one Monte-Carlo convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub beta0: f64,
    pub hurst: f64,
    pub level: u32,
    pub m_list: Vec<usize>,
    pub m0: usize,
    pub n_paths: usize,
    pub master_seed: u64,
    pub drift_seed: u64,
    pub eta_rule: EtaRule,
}

impl StudyConfig {
    /// Default study: level 9, proxy at `2^9` steps, coarse runs at
    /// `2^4..2^8`, 200 paths, Hurst from [`hurst_rule`].
    pub fn defaults(beta0: f64, master_seed: u64, drift_seed: u64) -> Self {
        Self {
            beta0,
            hurst: hurst_rule(beta0),
            level: 9,
            m_list: vec![16, 32, 64, 128, 256],
            m0: 512,
            n_paths: 200,
            master_seed,
            drift_seed,
            eta_rule: EtaRule::Schedule,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m0 == 0 || !self.m0.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "proxy resolution m0 must be a power of two, got {}",
                self.m0
            )));
        }
        if self.m_list.is_empty() {
            return Err(Error::Parameter("m_list must not be empty".into()));
        }
        let mut prev = 0usize;
        for &m in &self.m_list {
            if m <= prev {
                return Err(Error::Parameter(
                    "m_list must be strictly increasing".into(),
                ));
            }
            if !self.m0.is_multiple_of(m) {
                return Err(Error::Parameter(format!(
                    "every m in m_list must divide m0 = {}, got {m}",
                    self.m0
                )));
            }
            prev = m;
        }
        if *self.m_list.last().expect("non-empty") >= self.m0 {
            return Err(Error::Parameter(format!(
                "max(m_list) must be strictly below m0 = {}",
                self.m0
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::Parameter("n_paths must be positive".into()));
        }
        if let EtaRule::Fixed(eta) = self.eta_rule {
            if !(eta > 0.0) {
                return Err(Error::Parameter(format!(
                    "fixed eta must be positive, got {eta}"
                )));
            }
        }
        Ok(())
    }

    /// The mollification parameter of a coarse run at resolution `m`.
    pub fn eta_for(&self, m: usize) -> Result<f64> {
        match self.eta_rule {
            EtaRule::Fixed(eta) => Ok(eta),
            EtaRule::Schedule => {
                let params = theoretical_rate(self.beta0, supremal_q0(self.beta0))?;
                Ok((m as f64).powf(-params.theta_star))
            }
        }
    }

    /// The schedule evaluated at the proxy resolution. The proxy itself
    /// runs unmollified; this value is reported as the study's `eta`
    /// metadata.
    pub fn proxy_eta(&self) -> Result<f64> {
        self.eta_for(self.m0)
    }
}

/// Monte-Carlo L1 errors per coarse step count, with the configuration
/// that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    entries: Vec<(usize, f64)>,
    config: StudyConfig,
    eta: f64,
    degenerate: bool,
}

impl ErrorCurve {
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn config(&self) -> &StudyConfig {
        &self.config
    }

    /// The mollification parameter of the proxy run.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// True when some error came out at the floating-point noise floor,
    /// which happens for degenerate (e.g. all-zero) drifts; such a curve
    /// carries no rate information.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// CSV with header `m,error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,error\n");
        for (m, e) in &self.entries {
            out.push_str(&format!("{m},{e}\n"));
        }
        out
    }
}

/// Absolute gaps to the proxy for one path: `out[mi][k]` is
/// `|X^{m_list[mi]}_{t_k} - X^{m0}_{t_k}|` at the coarse grid time `t_k`.
/// `coarse` holds one mollified drift per entry of `m_list`.
fn path_gaps<P: DriftFunction>(
    proxy_drift: &P,
    coarse: &[MollifiedDrift],
    study: &StudyConfig,
    index: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut rng = path_rng(study.master_seed, index as u64);
    let grid = sample_brownian_grid(HORIZON, study.m0, &mut rng)?;
    let proxy = euler_maruyama(
        proxy_drift,
        &SchemeConfig::new(HORIZON, X0, study.m0)?,
        grid.increments(),
    )?;
    study
        .m_list
        .iter()
        .zip(coarse)
        .map(|(&m, drift)| {
            let coarse_increments = coarsen(&grid, m)?;
            let path = euler_maruyama(
                drift,
                &SchemeConfig::new(HORIZON, X0, m)?,
                &coarse_increments,
            )?;
            let ratio = study.m0 / m;
            Ok((0..=m)
                .map(|k| (path.states()[k] - proxy.states()[k * ratio]).abs())
                .collect())
        })
        .collect()
}

/// Monte-Carlo error estimation with explicit drifts per resolution.
///
/// Paths are independent work units and run in parallel; accumulation is
/// by path index in a fixed order, so the result is bit-identical for any
/// thread count.
fn mc_error_core<P: DriftFunction + Sync>(
    proxy_drift: &P,
    coarse: &[MollifiedDrift],
    study: &StudyConfig,
    eta_metadata: f64,
) -> Result<ErrorCurve> {
    study.validate()?;
    if coarse.len() != study.m_list.len() {
        return Err(Error::Dimension {
            expected: study.m_list.len(),
            actual: coarse.len(),
        });
    }
    let gaps: Vec<Result<Vec<Vec<f64>>>> = (0..study.n_paths)
        .into_par_iter()
        .map(|i| path_gaps(proxy_drift, coarse, study, i))
        .collect();
    let mut sums: Vec<Vec<f64>> = study.m_list.iter().map(|&m| vec![0.0; m + 1]).collect();
    for per_path in gaps {
        let per_path = per_path?;
        for (acc, gap) in sums.iter_mut().zip(per_path) {
            for (a, g) in acc.iter_mut().zip(gap) {
                *a += g;
            }
        }
    }
    let n = study.n_paths as f64;
    let entries: Vec<(usize, f64)> = study
        .m_list
        .iter()
        .zip(&sums)
        .map(|(&m, acc)| {
            let sup = acc.iter().map(|s| s / n).fold(0.0f64, f64::max);
            (m, sup)
        })
        .collect();
    let degenerate = entries.iter().any(|(_, e)| *e <= DEGENERATE_ERROR_FLOOR);
    if degenerate {
        log::warn!("error curve is at the floating-point noise floor; drift is degenerate");
    }
    Ok(ErrorCurve {
        entries,
        config: study.clone(),
        eta: eta_metadata,
        degenerate,
    })
}

/// Run the Monte-Carlo error estimation with one drift shared by every
/// resolution, proxy included. This isolates pure time-discretization
/// error; zero-drift control studies go through here.
pub fn mc_error_with_drift(drift: &MollifiedDrift, study: &StudyConfig) -> Result<ErrorCurve> {
    let coarse = vec![drift.clone(); study.m_list.len()];
    mc_error_core(drift, &coarse, study, drift.eta())
}

/// Build the quenched drift from the study seeds and run the Monte-Carlo
/// error estimation: the proxy integrates the raw truncated drift, the
/// coarse resolutions integrate the mollified drift with the smoothing
/// parameter the eta rule assigns to each of them.
pub fn mc_error(study: &StudyConfig) -> Result<ErrorCurve> {
    study.validate()?;
    let expansion = build_drift(study.beta0, study.hurst, study.level, study.drift_seed)?;
    let coarse: Vec<MollifiedDrift> = study
        .m_list
        .iter()
        .map(|&m| MollifiedDrift::new(expansion.clone(), study.eta_for(m)?))
        .collect::<Result<_>>()?;
    mc_error_core(&expansion, &coarse, study, study.proxy_eta()?)
}

/// Least-squares line through `(log2 m, log2 error)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Slope with its sign: negative for a converging scheme.
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square of the fit residuals.
    pub residual: f64,
}

/// Ordinary least squares of `log2(error)` on `log2(m)`. The base of the
/// logarithm does not change the slope; base two matches the dyadic step
/// counts.
pub fn fit_rate(curve: &ErrorCurve) -> Result<RateFit> {
    let entries = curve.entries();
    if entries.len() < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 points, got {}",
            entries.len()
        )));
    }
    if let Some((m, e)) = entries.iter().find(|(_, e)| !(*e > 0.0)) {
        return Err(Error::Fit(format!(
            "non-positive error {e} at m = {m}; cannot take logarithms"
        )));
    }
    let pts: Vec<(f64, f64)> = entries
        .iter()
        .map(|&(m, e)| ((m as f64).log2(), e.log2()))
        .collect();
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual = (pts
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(RateFit {
        slope,
        intercept,
        residual,
    })
}

/// One row of the convergence-rate table.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub beta0: f64,
    pub hurst: f64,
    /// Positive empirical convergence rate, `-slope` of the fit.
    pub empirical_rate: f64,
    pub theoretical: RateParams,
    pub curve: ErrorCurve,
    pub fit: RateFit,
}

/// Header of the rate-table CSV.
pub const TABLE_CSV_HEADER: &str =
    "beta0,hurst,empirical_rate,theoretical_rate,n_paths,m0,N,eta,master_seed,drift_seed";

impl TableRow {
    pub fn to_csv_row(&self) -> String {
        let cfg = self.curve.config();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.beta0,
            self.hurst,
            self.empirical_rate,
            self.theoretical.predicted_rate,
            cfg.n_paths,
            cfg.m0,
            cfg.level,
            self.curve.eta(),
            cfg.master_seed,
            cfg.drift_seed,
        )
    }
}

/// Run one table row: rebuild the drift for this `beta0` with the Hurst
/// rule, estimate the error curve, fit the empirical rate and evaluate the
/// theoretical one at the supremal `q0`.
pub fn run_table_row(beta0: f64, base: &StudyConfig) -> Result<TableRow> {
    let study = StudyConfig {
        beta0,
        hurst: hurst_rule(beta0),
        ..base.clone()
    };
    let curve = mc_error(&study)?;
    let fit = fit_rate(&curve)?;
    let theoretical = theoretical_rate(beta0, supremal_q0(beta0))?;
    Ok(TableRow {
        beta0,
        hurst: study.hurst,
        empirical_rate: -fit.slope,
        theoretical,
        curve,
        fit,
    })
}

/// Replicate the rate table over a list of regularities.
pub fn run_table(beta0_list: &[f64], base: &StudyConfig) -> Result<Vec<TableRow>> {
    beta0_list
        .iter()
        .map(|&beta0| run_table_row(beta0, base))
        .collect()
}

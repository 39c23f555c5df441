//! Exact simulation of fractional Brownian motion on finite grids.
//!
//! A path on grid points `x_1 < ... < x_n` is `B = M G` where `M` is the
//! lower Cholesky factor of the covariance matrix and `G` a vector of
//! independent standard normals. Mesh doubling conditions on the existing
//! values: with the joint covariance over (old, new) points written in
//! blocks, the new midpoint values are `N G + P G~` where `[[M, 0], [N, P]]`
//! is the block Cholesky factor and `G~` is fresh noise, so the old values
//! are kept verbatim.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// Covariance of fractional Brownian motion,
/// `(x^(2H) + y^(2H) - |x-y|^(2H)) / 2`.
///
/// This is the standard fBm covariance with a minus sign on the increment
/// term, which is what makes `B(0) = 0` hold and the matrix positive
/// definite.
pub fn fbm_covariance(x: f64, y: f64, hurst: f64) -> Result<f64> {
    check_hurst(hurst)?;
    let two_h = 2.0 * hurst;
    Ok(0.5 * (x.powf(two_h) + y.powf(two_h) - (x - y).abs().powf(two_h)))
}

fn check_hurst(hurst: f64) -> Result<()> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::Parameter(format!(
            "hurst index must lie in (0,1), got {hurst}"
        )));
    }
    Ok(())
}

/// Strictly increasing grid of evaluation points in `(0, 1]`.
/// The origin is not stored; `B(0) = 0` is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Parameter(
                "grid must contain at least one point".into(),
            ));
        }
        let mut prev = 0.0;
        for (k, &p) in points.iter().enumerate() {
            if !(p > prev) {
                return Err(Error::Parameter(format!(
                    "grid points must be strictly increasing and positive, \
                     violated at index {k} (value {p}, previous {prev})"
                )));
            }
            prev = p;
        }
        if prev > 1.0 {
            return Err(Error::Parameter(format!(
                "grid points must lie in (0, 1], got {prev}"
            )));
        }
        Ok(Self { points })
    }

    /// The uniform dyadic grid `{k/n}` for `k = 1..=n`.
    pub fn dyadic(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "dyadic grid size must be a positive power of two, got {n}"
            )));
        }
        let nf = n as f64;
        Ok(Self {
            points: (1..=n).map(|k| k as f64 / nf).collect(),
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn is_dyadic(&self) -> bool {
        let n = self.points.len();
        if !n.is_power_of_two() {
            return false;
        }
        let nf = n as f64;
        self.points
            .iter()
            .enumerate()
            .all(|(k, &p)| p == (k + 1) as f64 / nf)
    }
}

/// Lower-triangular Cholesky factor, packed row-major.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    /// Row `i` occupies entries `i(i+1)/2 .. i(i+1)/2 + i + 1`.
    data: Vec<f64>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry `(i, j)`; zero above the diagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.data[i * (i + 1) / 2 + j]
        }
    }

    /// `L v` for a vector of length `dim`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| {
                let row = &self.data[i * (i + 1) / 2..i * (i + 1) / 2 + i + 1];
                row.iter().zip(v).map(|(l, g)| l * g).sum()
            })
            .collect()
    }

    /// Solve `L y = b` by forward substitution.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * (i + 1) / 2..i * (i + 1) / 2 + i + 1];
            let mut acc = b[i];
            for j in 0..i {
                acc -= row[j] * y[j];
            }
            y[i] = acc / row[i];
        }
        y
    }

    /// Relative Frobenius residual `||L L^T - C||_F / ||C||_F` against a
    /// symmetric matrix given as full row-major storage.
    pub fn residual(&self, matrix: &[f64]) -> f64 {
        let n = self.n;
        assert_eq!(matrix.len(), n * n);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut rec = 0.0;
                for k in 0..=i.min(j) {
                    rec += self.get(i, k) * self.get(j, k);
                }
                let c = matrix[i * n + j];
                num += (rec - c) * (rec - c);
                den += c * c;
            }
        }
        (num / den).sqrt()
    }
}

/// Base jitter, relative to the largest diagonal entry, applied when a
/// pivot fails; escalated by factors of ten.
const JITTER_BASE: f64 = 1e-12;
/// Number of tenfold escalations tried after the base jitter.
const JITTER_ESCALATIONS: u32 = 3;

/// Dense Cholesky factorization of a symmetric matrix in full row-major
/// storage.
///
/// If a pivot comes out non-positive the whole factorization is retried
/// with `1e-12 * max_diagonal` added to the diagonal, escalating tenfold at
/// most three times before giving up. Each retry is logged.
pub fn cholesky_factor(matrix: &[f64], n: usize) -> Result<CholeskyFactor> {
    if matrix.len() != n * n {
        return Err(Error::Dimension {
            expected: n * n,
            actual: matrix.len(),
        });
    }
    let max_diag = (0..n).fold(0.0f64, |acc, i| acc.max(matrix[i * n + i].abs()));
    let mut jitter = 0.0;
    let mut last_failure = (0usize, 0.0f64);
    for attempt in 0..=(JITTER_ESCALATIONS + 1) {
        match try_cholesky(matrix, n, jitter) {
            Ok(factor) => return Ok(factor),
            Err((pivot, value)) => {
                last_failure = (pivot, value);
                jitter = if attempt == 0 {
                    JITTER_BASE * max_diag
                } else {
                    jitter * 10.0
                };
                if attempt <= JITTER_ESCALATIONS {
                    log::warn!(
                        "cholesky pivot {pivot} non-positive ({value:e}); retrying with \
                         diagonal jitter {jitter:e}"
                    );
                }
            }
        }
    }
    Err(Error::Factorization {
        pivot: last_failure.0,
        value: last_failure.1,
    })
}

fn try_cholesky(
    matrix: &[f64],
    n: usize,
    jitter: f64,
) -> std::result::Result<CholeskyFactor, (usize, f64)> {
    let mut data = vec![0.0; n * (n + 1) / 2];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = matrix[i * n + j];
            if i == j {
                acc += jitter;
            }
            for k in 0..j {
                acc -= data[i * (i + 1) / 2 + k] * data[j * (j + 1) / 2 + k];
            }
            if i == j {
                if acc <= 0.0 {
                    return Err((i, acc));
                }
                data[i * (i + 1) / 2 + j] = acc.sqrt();
            } else {
                data[i * (i + 1) / 2 + j] = acc / data[j * (j + 1) / 2 + j];
            }
        }
    }
    Ok(CholeskyFactor { n, data })
}

/// Full row-major fBm covariance matrix over two point sets.
fn covariance_block(xs: &[f64], ys: &[f64], hurst: f64) -> Vec<f64> {
    let two_h = 2.0 * hurst;
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &x in xs {
        for &y in ys {
            out.push(0.5 * (x.powf(two_h) + y.powf(two_h) - (x - y).abs().powf(two_h)));
        }
    }
    out
}

/// One fractional Brownian sample path on a grid, together with the Hurst
/// index and the standard-normal vector it was generated from.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmPath {
    grid: Grid,
    values: Vec<f64>,
    hurst: f64,
    /// Generating noise: `values = L * gaussians` where `L` is the Cholesky
    /// factor of the covariance over `grid`. Kept so refinement can reuse
    /// the conditional mean without re-deriving it, and serialized with the
    /// path.
    gaussians: Vec<f64>,
}

impl FbmPath {
    pub fn new(grid: Grid, values: Vec<f64>, hurst: f64, gaussians: Vec<f64>) -> Result<Self> {
        check_hurst(hurst)?;
        if values.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if gaussians.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                actual: gaussians.len(),
            });
        }
        Ok(Self {
            grid,
            values,
            hurst,
            gaussians,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn gaussians(&self) -> &[f64] {
        &self.gaussians
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Path values prefixed with the implicit `B(0) = 0`.
    pub fn values_with_origin(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len() + 1);
        out.push(0.0);
        out.extend_from_slice(&self.values);
        out
    }

    /// CSV with `# hurst=` / `# gaussians=` comment lines and `x,value`
    /// rows; round-trips bit-exactly.
    pub fn to_csv(&self) -> String {
        let gauss: Vec<String> = self.gaussians.iter().map(|g| format!("{g}")).collect();
        let mut out = format!(
            "# hurst={}\n# gaussians={}\nx,value\n",
            self.hurst,
            gauss.join(",")
        );
        for (x, v) in self.grid.points().iter().zip(&self.values) {
            out.push_str(&format!("{x},{v}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut hurst: Option<f64> = None;
        let mut gaussians: Option<Vec<f64>> = None;
        let mut points = Vec::new();
        let mut values = Vec::new();
        let mut saw_header = false;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(h) = rest.strip_prefix("hurst=") {
                    hurst = Some(
                        h.parse()
                            .map_err(|_| Error::Parse(format!("bad hurst value '{h}'")))?,
                    );
                } else if let Some(g) = rest.strip_prefix("gaussians=") {
                    let parsed: std::result::Result<Vec<f64>, _> =
                        g.split(',').map(str::parse).collect();
                    gaussians =
                        Some(parsed.map_err(|_| Error::Parse("bad gaussians list".into()))?);
                }
                continue;
            }
            if !saw_header {
                if line != "x,value" {
                    return Err(Error::Parse(format!(
                        "expected header 'x,value', got '{line}'"
                    )));
                }
                saw_header = true;
                continue;
            }
            let mut parts = line.split(',');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(x), Some(v), None) => {
                    points.push(
                        x.parse()
                            .map_err(|_| Error::Parse(format!("bad x value '{x}'")))?,
                    );
                    values.push(
                        v.parse()
                            .map_err(|_| Error::Parse(format!("bad value '{v}'")))?,
                    );
                }
                _ => return Err(Error::Parse(format!("malformed row '{line}'"))),
            }
        }
        let hurst = hurst.ok_or_else(|| Error::Parse("missing '# hurst=' line".into()))?;
        let gaussians =
            gaussians.ok_or_else(|| Error::Parse("missing '# gaussians=' line".into()))?;
        Self::new(Grid::new(points)?, values, hurst, gaussians)
    }
}

/// Sample one fBm path on `grid`: draw `G` from `rng` and return `L G`
/// where `L` is the Cholesky factor of the covariance matrix.
pub fn sample_fbm<R: Rng + ?Sized>(grid: &Grid, hurst: f64, rng: &mut R) -> Result<FbmPath> {
    check_hurst(hurst)?;
    let n = grid.len();
    let cov = covariance_block(grid.points(), grid.points(), hurst);
    let factor = cholesky_factor(&cov, n)?;
    let gaussians: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let values = factor.mul_vec(&gaussians);
    FbmPath::new(grid.clone(), values, hurst, gaussians)
}

/// Refine a dyadic-grid path to twice the resolution, keeping every
/// existing value bit-for-bit and drawing the midpoint values from the
/// conditional law given the path so far.
///
/// Requires `path.grid` to be `{k/n}` with `n` a power of two. The output
/// path's stored Gaussian vector is re-expressed in the refined grid's own
/// factor basis (`values = L' * gaussians'`), so refinement can be applied
/// repeatedly.
pub fn refine_fbm<R: Rng + ?Sized>(path: &FbmPath, rng: &mut R) -> Result<FbmPath> {
    if !path.grid.is_dyadic() {
        return Err(Error::Precondition(
            "refine_fbm requires the dyadic grid {k/n} with n a power of two".into(),
        ));
    }
    let n = path.len();
    let hurst = path.hurst;
    let old: &[f64] = path.grid.points();
    let new: Vec<f64> = (0..n)
        .map(|k| (2 * k + 1) as f64 / (2 * n) as f64)
        .collect();

    let cov_old = covariance_block(old, old, hurst);
    let factor_old = cholesky_factor(&cov_old, n)?;
    let cross = covariance_block(old, &new, hurst); // A, n x n
    let cov_new = covariance_block(&new, &new, hurst); // C~, n x n

    // Columns of Y = M^{-1} A; then N = Y^T and the Schur complement is
    // C~ - Y^T Y.
    let mut y_cols = Vec::with_capacity(n);
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| cross[i * n + j]).collect();
        y_cols.push(factor_old.solve_lower(&col));
    }
    let mut schur = cov_new;
    for i in 0..n {
        for j in 0..n {
            let dot: f64 = y_cols[i].iter().zip(&y_cols[j]).map(|(a, b)| a * b).sum();
            schur[i * n + j] -= dot;
        }
    }
    let factor_schur = cholesky_factor(&schur, n)?;
    let fresh: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let noise = factor_schur.mul_vec(&fresh);
    // Midpoint values: conditional mean N G plus conditional noise P G~.
    let mid_values: Vec<f64> = (0..n)
        .map(|i| {
            let mean: f64 = (0..n).map(|k| y_cols[i][k] * path.gaussians[k]).sum();
            mean + noise[i]
        })
        .collect();

    let mut points = Vec::with_capacity(2 * n);
    let mut values = Vec::with_capacity(2 * n);
    for k in 0..n {
        points.push(new[k]);
        values.push(mid_values[k]);
        points.push(old[k]);
        values.push(path.values[k]);
    }
    let grid = Grid::new(points)?;
    let cov_fine = covariance_block(grid.points(), grid.points(), hurst);
    let factor_fine = cholesky_factor(&cov_fine, 2 * n)?;
    let gaussians = factor_fine.solve_lower(&values);
    FbmPath::new(grid, values, hurst, gaussians)
}

/// Conditional mean of the midpoint values given the existing path, i.e.
/// the `N G` part of the refinement without fresh noise. Exposed for
/// diagnostics such as the Brownian-bridge check at `H = 1/2`.
pub fn refine_conditional_mean(path: &FbmPath) -> Result<Vec<f64>> {
    if !path.grid.is_dyadic() {
        return Err(Error::Precondition(
            "refine_conditional_mean requires the dyadic grid {k/n}".into(),
        ));
    }
    let n = path.len();
    let old: &[f64] = path.grid.points();
    let new: Vec<f64> = (0..n)
        .map(|k| (2 * k + 1) as f64 / (2 * n) as f64)
        .collect();
    let cov_old = covariance_block(old, old, path.hurst);
    let factor_old = cholesky_factor(&cov_old, n)?;
    let cross = covariance_block(old, &new, path.hurst);
    let mut out = vec![0.0; n];
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| cross[i * n + j]).collect();
        let y = factor_old.solve_lower(&col);
        out[j] = y.iter().zip(&path.gaussians).map(|(a, b)| a * b).sum();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn covariance_basics() {
        assert_eq!(fbm_covariance(1.0, 1.0, 0.3).unwrap(), 1.0);
        assert_eq!(fbm_covariance(0.0, 0.7, 0.6).unwrap(), 0.0);
        assert_eq!(fbm_covariance(0.5, 1.0, 0.85).unwrap(), 0.5);
        assert!(fbm_covariance(0.5, 0.5, 1.0).is_err());
        assert!(fbm_covariance(0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn cholesky_identity_and_scalar() {
        let id = vec![1.0, 0.0, 0.0, 1.0];
        let f = cholesky_factor(&id, 2).unwrap();
        assert_eq!(f.get(0, 0), 1.0);
        assert_eq!(f.get(1, 0), 0.0);
        assert_eq!(f.get(1, 1), 1.0);
        let f = cholesky_factor(&[4.0], 1).unwrap();
        assert_eq!(f.get(0, 0), 2.0);
    }

    #[test]
    fn cholesky_reconstructs_fbm_covariance() {
        let grid = Grid::dyadic(4).unwrap();
        let cov = covariance_block(grid.points(), grid.points(), 0.85);
        let f = cholesky_factor(&cov, 4).unwrap();
        assert!(f.residual(&cov) <= 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        // Eigenvalues 1 and -1: no jitter at the 1e-9 scale can fix it.
        let m = vec![0.0, 1.0, 1.0, 0.0];
        match cholesky_factor(&m, 2) {
            Err(Error::Factorization { pivot, .. }) => assert_eq!(pivot, 0),
            other => panic!("expected factorization error, got {other:?}"),
        }
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(vec![0.5, 0.25]).is_err());
        assert!(Grid::new(vec![0.0, 0.5]).is_err());
        assert!(Grid::new(vec![0.5, 1.5]).is_err());
        assert!(Grid::new(vec![]).is_err());
        assert!(Grid::new(vec![0.25, 0.5, 1.0]).is_ok());
        assert!(Grid::dyadic(6).is_err());
        assert_eq!(Grid::dyadic(4).unwrap().points(), &[0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn sampling_is_deterministic() {
        let grid = Grid::dyadic(4).unwrap();
        let a = sample_fbm(&grid, 0.85, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = sample_fbm(&grid, 0.85, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
    }

    #[test]
    fn refinement_keeps_old_values() {
        let grid = Grid::dyadic(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let path = sample_fbm(&grid, 0.85, &mut rng).unwrap();
        let refined = refine_fbm(&path, &mut rng).unwrap();
        assert_eq!(refined.len(), 16);
        for (k, &v) in path.values().iter().enumerate() {
            assert_eq!(refined.values()[2 * k + 1], v, "old value {k} changed");
            assert_eq!(refined.grid().points()[2 * k + 1], path.grid().points()[k]);
        }
    }

    #[test]
    fn refinement_requires_dyadic_grid() {
        let grid = Grid::new(vec![0.3, 0.7, 1.0]).unwrap();
        let path = sample_fbm(&grid, 0.6, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(matches!(
            refine_fbm(&path, &mut ChaCha8Rng::seed_from_u64(2)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn brownian_midpoint_mean_is_average_of_neighbours() {
        // For H = 1/2 the process is Brownian motion and the conditional
        // mean at each midpoint is the average of the surrounding values.
        let grid = Grid::dyadic(8).unwrap();
        let path = sample_fbm(&grid, 0.5, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let mean = refine_conditional_mean(&path).unwrap();
        let with_origin = path.values_with_origin();
        for k in 0..8 {
            let avg = 0.5 * (with_origin[k] + with_origin[k + 1]);
            assert_relative_eq!(mean[k], avg, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn refined_path_can_be_refined_again() {
        let grid = Grid::dyadic(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let path = sample_fbm(&grid, 0.8, &mut rng).unwrap();
        let once = refine_fbm(&path, &mut rng).unwrap();
        // The stored gaussians satisfy values = L * gaussians on the sorted
        // grid, so a second refinement keeps the first one's values.
        let cov = covariance_block(once.grid().points(), once.grid().points(), 0.8);
        let f = cholesky_factor(&cov, 8).unwrap();
        let rebuilt = f.mul_vec(once.gaussians());
        for (a, b) in rebuilt.iter().zip(once.values()) {
            assert_relative_eq!(a, b, max_relative = 1e-9, epsilon = 1e-12);
        }
        let twice = refine_fbm(&once, &mut rng).unwrap();
        assert_eq!(twice.len(), 16);
        for (k, &v) in once.values().iter().enumerate() {
            assert_eq!(twice.values()[2 * k + 1], v);
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let grid = Grid::dyadic(8).unwrap();
        let path = sample_fbm(&grid, 0.85, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
        let text = path.to_csv();
        let back = FbmPath::from_csv(&text).unwrap();
        assert_eq!(path, back);
        assert_eq!(text, back.to_csv());
    }

    #[test]
    fn brownian_increment_variance() {
        // H = 1/2 increments over equal intervals have variance equal to
        // the interval length; check the Monte-Carlo estimate at 3 sigma.
        let grid = Grid::dyadic(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n_paths = 20_000usize;
        let mut sums = [0.0f64; 4];
        let mut sq = [0.0f64; 4];
        for _ in 0..n_paths {
            let path = sample_fbm(&grid, 0.5, &mut rng).unwrap();
            let vals = path.values_with_origin();
            for k in 0..4 {
                let inc = vals[k + 1] - vals[k];
                sums[k] += inc;
                sq[k] += inc * inc;
            }
        }
        for k in 0..4 {
            let var = sq[k] / n_paths as f64 - (sums[k] / n_paths as f64).powi(2);
            // Var of the variance estimator for Gaussians: 2 var^2 / (n-1).
            let sigma = (2.0 * var * var / (n_paths as f64 - 1.0)).sqrt();
            assert!(
                (var - 0.25).abs() <= 3.0 * sigma,
                "interval {k}: variance {var} vs 0.25 (3 sigma = {})",
                3.0 * sigma
            );
        }
    }

    proptest! {
        #[test]
        fn prop_covariance_symmetry(x in 0.0f64..2.0, y in 0.0f64..2.0, h in 0.05f64..0.95) {
            prop_assert_eq!(
                fbm_covariance(x, y, h).unwrap(),
                fbm_covariance(y, x, h).unwrap()
            );
        }

        #[test]
        fn prop_covariance_zero_at_origin(y in 0.0f64..2.0, h in 0.05f64..0.95) {
            prop_assert_eq!(fbm_covariance(0.0, y, h).unwrap(), 0.0);
        }

        #[test]
        fn prop_covariance_self_similarity(
            x in 0.01f64..1.0,
            y in 0.01f64..1.0,
            h in 0.1f64..0.9,
            c in 0.1f64..4.0,
        ) {
            let lhs = fbm_covariance(c * x, c * y, h).unwrap();
            let rhs = c.powf(2.0 * h) * fbm_covariance(x, y, h).unwrap();
            let scale = lhs.abs().max(rhs.abs()).max(1e-300);
            prop_assert!((lhs - rhs).abs() / scale <= 1e-12);
        }
    }
}

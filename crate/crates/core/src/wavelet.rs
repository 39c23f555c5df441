//! Haar and Faber function systems on the unit interval.
//!
//! The Haar system used here is `{h0, h_{j,m}}` where `h0` is the indicator
//! of `(0,1)` and `h_{j,m}` takes the value `+1` on `[m/2^j, (m+1/2)/2^j)`,
//! `-1` on `[(m+1/2)/2^j, (m+1)/2^j)` and `0` elsewhere. The Faber system
//! `{v0, v1, v_{j,m}}` consists of the boundary ramps `v0(x) = 1-x`,
//! `v1(x) = x` and the hat functions obtained by integrating the Haar
//! wavelets. Intervals are half-open throughout, so every function vanishes
//! at `x = 1` except `v1`.
//!
//! Coefficients of both systems come from second differences of function
//! samples on a dyadic grid. Both extraction routines share the same
//! second-difference subroutine and differ only by an exact power-of-two
//! scaling, so the identity `detail_haar = 2^(j+1) * detail_faber` holds
//! bit-for-bit.

use crate::error::{Error, Result};

/// Highest supported wavelet level; sample vectors grow as `2^(level+1)+1`.
pub const MAX_LEVEL: u32 = 30;

/// Index `(j, m)` of a dyadic wavelet: level `j` and position `m < 2^j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicIndex {
    level: u32,
    pos: u32,
}

impl DyadicIndex {
    pub fn new(level: u32, pos: u32) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::Parameter(format!(
                "level {level} exceeds maximum supported level {MAX_LEVEL}"
            )));
        }
        if u64::from(pos) >= 1u64 << level {
            return Err(Error::Parameter(format!(
                "position {pos} out of range for level {level} (must be < 2^{level})"
            )));
        }
        Ok(Self { level, pos })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn pos(&self) -> u32 {
        self.pos
    }

    /// Left endpoint `m/2^j` of the support. Exact: dyadic rationals of
    /// these magnitudes are representable in f64.
    pub fn support_left(&self) -> f64 {
        f64::from(self.pos) / exp2i(self.level)
    }

    /// Midpoint `(m + 1/2)/2^j` of the support.
    pub fn support_mid(&self) -> f64 {
        (f64::from(self.pos) + 0.5) / exp2i(self.level)
    }

    /// Right endpoint `(m+1)/2^j` of the support.
    pub fn support_right(&self) -> f64 {
        (f64::from(self.pos) + 1.0) / exp2i(self.level)
    }
}

/// `2^e` as f64, exact for the level range supported here.
pub(crate) fn exp2i(e: u32) -> f64 {
    (1u64 << e) as f64
}

/// Evaluate the Haar wavelet `h_{j,m}` at `x`.
///
/// Multiplication and division by powers of two are exact in IEEE-754, so
/// the branch decisions below are exact at every dyadic boundary.
pub fn haar_eval(idx: DyadicIndex, x: f64) -> f64 {
    let left = idx.support_left();
    let mid = idx.support_mid();
    let right = idx.support_right();
    if x >= left && x < mid {
        1.0
    } else if x >= mid && x < right {
        -1.0
    } else {
        0.0
    }
}

/// Evaluate the Faber hat function `v_{j,m}` at `x`.
pub fn faber_eval(idx: DyadicIndex, x: f64) -> f64 {
    let left = idx.support_left();
    let mid = idx.support_mid();
    let right = idx.support_right();
    let scale = 2.0 * exp2i(idx.level);
    if x >= left && x < mid {
        scale * (x - left)
    } else if x >= mid && x < right {
        scale * (right - x)
    } else {
        0.0
    }
}

/// Truncated Haar expansion of a drift on `(0,1)`: the coefficient of the
/// constant function `h0` plus detail coefficients for levels `0..=level`.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarExpansion {
    level: u32,
    scaling_coeff: f64,
    /// Detail coefficients in a flat layout, level-major then position:
    /// entry for `(j, m)` lives at `2^j - 1 + m`.
    details: Vec<f64>,
}

/// Number of detail coefficients for levels `0..=level`.
fn detail_len(level: u32) -> usize {
    (1usize << (level + 1)) - 1
}

fn detail_offset(idx: DyadicIndex) -> usize {
    (1usize << idx.level) - 1 + idx.pos as usize
}

impl HaarExpansion {
    /// Build from raw parts; `details` must hold exactly the coefficients
    /// for all `(j, m)` with `j <= level`, level-major.
    pub fn from_parts(level: u32, scaling_coeff: f64, details: Vec<f64>) -> Result<Self> {
        check_level(level)?;
        if details.len() != detail_len(level) {
            return Err(Error::Dimension {
                expected: detail_len(level),
                actual: details.len(),
            });
        }
        Ok(Self {
            level,
            scaling_coeff,
            details,
        })
    }

    /// Expansion with every coefficient zero. Useful as a no-drift control.
    pub fn zero(level: u32) -> Self {
        Self {
            level,
            scaling_coeff: 0.0,
            details: vec![0.0; detail_len(level)],
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Coefficient of `h0` (the indicator of `(0,1)`).
    pub fn scaling_coeff(&self) -> f64 {
        self.scaling_coeff
    }

    pub fn detail(&self, idx: DyadicIndex) -> f64 {
        self.details[detail_offset(idx)]
    }

    pub fn details(&self) -> &[f64] {
        &self.details
    }

    /// All indices `(j, m)` with `j <= level`, level-major ascending.
    pub fn indices(&self) -> impl Iterator<Item = DyadicIndex> + '_ {
        (0..=self.level).flat_map(|j| (0..1u32 << j).map(move |m| DyadicIndex { level: j, pos: m }))
    }

    /// Largest absolute detail coefficient per level.
    pub fn max_abs_detail_per_level(&self) -> Vec<f64> {
        (0..=self.level)
            .map(|j| {
                let start = (1usize << j) - 1;
                let end = (1usize << (j + 1)) - 1;
                self.details[start..end]
                    .iter()
                    .fold(0.0f64, |acc, c| acc.max(c.abs()))
            })
            .collect()
    }

    /// Serialize as CSV with header `j,m,coeff`; the `h0` coefficient is
    /// written as a leading row with `j = -1`. Values use the shortest
    /// decimal representation that round-trips the exact f64 bits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,m,coeff\n");
        out.push_str(&format!("-1,0,{}\n", self.scaling_coeff));
        for idx in self.indices() {
            out.push_str(&format!("{},{},{}\n", idx.level, idx.pos, self.detail(idx)));
        }
        out
    }

    /// Parse the CSV produced by [`Self::to_csv`]. Comment lines starting
    /// with `#` are skipped so mollified-drift files parse with the same
    /// reader. Rows may appear in any order but must cover every index of
    /// the inferred level exactly once.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut scaling: Option<f64> = None;
        let mut rows: Vec<(u32, u32, f64)> = Vec::new();
        let mut saw_header = false;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !saw_header {
                if line != "j,m,coeff" {
                    return Err(Error::Parse(format!(
                        "expected header 'j,m,coeff', got '{line}'"
                    )));
                }
                saw_header = true;
                continue;
            }
            let mut parts = line.split(',');
            let (j, m, c) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
                (Some(j), Some(m), Some(c), None) => (j, m, c),
                _ => return Err(Error::Parse(format!("malformed row '{line}'"))),
            };
            let coeff: f64 = c
                .parse()
                .map_err(|_| Error::Parse(format!("bad coefficient '{c}'")))?;
            if j == "-1" {
                if scaling.replace(coeff).is_some() {
                    return Err(Error::Parse("duplicate j=-1 row".into()));
                }
                continue;
            }
            let j: u32 = j
                .parse()
                .map_err(|_| Error::Parse(format!("bad level '{j}'")))?;
            let m: u32 = m
                .parse()
                .map_err(|_| Error::Parse(format!("bad position '{m}'")))?;
            rows.push((j, m, coeff));
        }
        let scaling = scaling.ok_or_else(|| Error::Parse("missing j=-1 row".into()))?;
        let level = rows
            .iter()
            .map(|r| r.0)
            .max()
            .ok_or_else(|| Error::Parse("no detail rows".into()))?;
        check_level(level)?;
        let mut details = vec![f64::NAN; detail_len(level)];
        let mut filled = vec![false; detail_len(level)];
        for (j, m, c) in rows {
            let idx =
                DyadicIndex::new(j, m).map_err(|e| Error::Parse(format!("row ({j},{m}): {e}")))?;
            let off = detail_offset(idx);
            if filled[off] {
                return Err(Error::Parse(format!("duplicate row for ({j},{m})")));
            }
            filled[off] = true;
            details[off] = c;
        }
        if let Some(missing) = filled.iter().position(|f| !f) {
            return Err(Error::Parse(format!(
                "incomplete coefficient set: {} of {} rows present (first gap at flat index {missing})",
                filled.iter().filter(|f| **f).count(),
                filled.len()
            )));
        }
        Ok(Self {
            level,
            scaling_coeff: scaling,
            details,
        })
    }
}

/// Faber-series coefficients of a continuous function on `[0,1]`:
/// boundary values plus hat coefficients for levels `0..=level`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaberCoefficients {
    level: u32,
    boundary_left: f64,
    boundary_right: f64,
    details: Vec<f64>,
}

impl FaberCoefficients {
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Coefficient of `v0(x) = 1-x`, i.e. the sample at 0.
    pub fn boundary_left(&self) -> f64 {
        self.boundary_left
    }

    /// Coefficient of `v1(x) = x`, i.e. the sample at 1.
    pub fn boundary_right(&self) -> f64 {
        self.boundary_right
    }

    pub fn detail(&self, idx: DyadicIndex) -> f64 {
        self.details[detail_offset(idx)]
    }
}

fn check_level(level: u32) -> Result<()> {
    if level > MAX_LEVEL {
        return Err(Error::Parameter(format!(
            "level {level} exceeds maximum supported level {MAX_LEVEL}"
        )));
    }
    Ok(())
}

fn check_sample_len(samples: &[f64], level: u32) -> Result<usize> {
    let expected = (1usize << (level + 1)) + 1;
    if samples.len() != expected {
        return Err(Error::Dimension {
            expected,
            actual: samples.len(),
        });
    }
    Ok(expected)
}

/// Second difference `g(right) - 2 g(mid) + g(left)` with a fixed rounding
/// order. Both coefficient extractors go through this function so their
/// outputs differ only by exact power-of-two factors.
#[inline]
fn second_diff(left: f64, mid: f64, right: f64) -> f64 {
    right - 2.0 * mid + left
}

/// Haar coefficients of the distributional derivative `g'` from samples of
/// `g` at the `2^(level+1) + 1` dyadic nodes `k / 2^(level+1)`.
///
/// The `h0` coefficient is `g(1) - g(0)` and the detail coefficient at
/// `(j, m)` is `-2^j` times the second difference of `g` over the support
/// of `h_{j,m}`.
pub fn haar_coefficients_from_samples(samples: &[f64], level: u32) -> Result<HaarExpansion> {
    check_level(level)?;
    check_sample_len(samples, level)?;
    let scaling_coeff = samples[samples.len() - 1] - samples[0];
    let mut details = Vec::with_capacity(detail_len(level));
    for j in 0..=level {
        // Node stride of one wavelet at level j on the level-(level+1) grid.
        let stride = 1usize << (level + 1 - j);
        let half = stride / 2;
        let scale = exp2i(j);
        for m in 0..1usize << j {
            let base = m * stride;
            let d = second_diff(samples[base], samples[base + half], samples[base + stride]);
            details.push(-scale * d);
        }
    }
    Ok(HaarExpansion {
        level,
        scaling_coeff,
        details,
    })
}

/// Faber coefficients of `g` from the same dyadic samples. The detail
/// coefficient at `(j, m)` is `-1/2` times the second difference used by
/// [`haar_coefficients_from_samples`], so `2^(j+1) * faber = haar` exactly.
pub fn faber_coefficients_from_samples(samples: &[f64], level: u32) -> Result<FaberCoefficients> {
    check_level(level)?;
    check_sample_len(samples, level)?;
    let mut details = Vec::with_capacity(detail_len(level));
    for j in 0..=level {
        let stride = 1usize << (level + 1 - j);
        let half = stride / 2;
        for m in 0..1usize << j {
            let base = m * stride;
            let d = second_diff(samples[base], samples[base + half], samples[base + stride]);
            details.push(-0.5 * d);
        }
    }
    Ok(FaberCoefficients {
        level,
        boundary_left: samples[0],
        boundary_right: samples[samples.len() - 1],
        details,
    })
}

/// Position of the single wavelet at `level` whose support contains `x`,
/// or `None` when `x` is outside `[0,1)`. `x * 2^level` is exact, so this
/// agrees with the support comparisons in [`haar_eval`] at every boundary.
fn support_pos(level: u32, x: f64) -> Option<u32> {
    if !(0.0..1.0).contains(&x) {
        return None;
    }
    let m = (x * exp2i(level)).floor();
    debug_assert!(m >= 0.0 && m < exp2i(level));
    Some(m as u32)
}

/// Evaluate the Haar series at `x` in `O(level)` time: at most one wavelet
/// per level has `x` in its support.
pub fn haar_sum_eval(exp: &HaarExpansion, x: f64) -> f64 {
    let mut acc = if x > 0.0 && x < 1.0 {
        exp.scaling_coeff
    } else {
        0.0
    };
    for j in 0..=exp.level {
        if let Some(m) = support_pos(j, x) {
            let idx = DyadicIndex { level: j, pos: m };
            acc += exp.detail(idx) * haar_eval(idx, x);
        }
    }
    acc
}

/// Evaluate the Faber series at `x in [0,1]`.
///
/// At every node `k / 2^(level+1)` the partial series reproduces the sample
/// that generated the coefficients: the Faber series is the piecewise-linear
/// interpolant at that resolution.
pub fn faber_sum_eval(fc: &FaberCoefficients, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!(
            "faber series is defined on [0,1], got x = {x}"
        )));
    }
    let mut acc = fc.boundary_left * (1.0 - x) + fc.boundary_right * x;
    for j in 0..=fc.level {
        if let Some(m) = support_pos(j, x) {
            let idx = DyadicIndex { level: j, pos: m };
            acc += fc.detail(idx) * faber_eval(idx, x);
        }
    }
    Ok(acc)
}

/// Refine an expansion by one level using only the function values at the
/// midpoints of the finer grid.
///
/// `old_samples` must be the `2^(level+1) + 1` values that produced `exp`;
/// `new_midpoint_samples` holds the `2^(level+1)` values at the midpoints of
/// the level-`(level+1)` grid. Existing coefficients are carried over
/// unchanged and only the finest level is computed, which matches a
/// from-scratch build on the interleaved sample sequence bit-for-bit.
pub fn refine_expansion(
    exp: &HaarExpansion,
    new_midpoint_samples: &[f64],
    old_samples: &[f64],
) -> Result<HaarExpansion> {
    let n = check_sample_len(old_samples, exp.level)?;
    check_level(exp.level + 1)?;
    if new_midpoint_samples.len() != n - 1 {
        return Err(Error::Dimension {
            expected: n - 1,
            actual: new_midpoint_samples.len(),
        });
    }
    let scaling = old_samples[n - 1] - old_samples[0];
    if scaling != exp.scaling_coeff {
        return Err(Error::Precondition(
            "old_samples do not reproduce the expansion's h0 coefficient; \
             refine requires the exact samples the expansion was built from"
                .into(),
        ));
    }
    let new_level = exp.level + 1;
    let scale = exp2i(new_level);
    let mut details = exp.details.clone();
    details.reserve(n - 1);
    for m in 0..n - 1 {
        let d = second_diff(old_samples[m], new_midpoint_samples[m], old_samples[m + 1]);
        details.push(-scale * d);
    }
    Ok(HaarExpansion {
        level: new_level,
        scaling_coeff: exp.scaling_coeff,
        details,
    })
}

/// Interleave base samples with midpoint samples into the finer grid order.
pub fn interleave_samples(old_samples: &[f64], midpoints: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(old_samples.len() + midpoints.len());
    for (k, &m) in midpoints.iter().enumerate() {
        out.push(old_samples[k]);
        out.push(m);
    }
    out.push(old_samples[old_samples.len() - 1]);
    out
}

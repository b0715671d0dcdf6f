//! Dithered and uniform quantization onto a slotted time grid.
//!
//! The grid holds `levels` points spaced `delta` apart. The dithered
//! quantizer adds a uniform perturbation from `(-delta/2, delta/2)` before
//! rounding to the nearest grid point, which lands the input on one of its
//! two grid neighbors with probabilities proportional to proximity:
//!
//! ```text
//! tau_j <= x < tau_{j+1}:
//!     P(tau_j)     = 1 - (x - tau_j) / delta
//!     P(tau_{j+1}) =     (x - tau_j) / delta
//! ```
//!
//! so the quantizer is unbiased (`E[Q(x)] = x`) for inputs inside the grid.
//! The plain uniform quantizer rounds to the nearest point deterministically
//! and is kept around to demonstrate how the protocol stalls without dither.
//!
//! [`InteractionDistribution`] is the same law specialized to the protocol
//! update: for an integer slot difference `d` between two interacting gap
//! values, the updated offset `k = Q((1+alpha)/2 * d)` in slot units takes
//! one of two integer values. All simulation state stays integral; the real
//! line only appears here.

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Renormalization slack for the two-point law (alpha arrives as an `f64`).
const PROB_SUM_TOLERANCE: f64 = 1e-12;

/// The finite time grid `{0, delta, ..., (levels-1) * delta}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotGrid {
    delta: f64,
    levels: u32,
}

impl SlotGrid {
    pub fn new(delta: f64, levels: u32) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) || levels == 0 {
            return Err(Error::InvalidGrid { delta, levels });
        }
        Ok(Self { delta, levels })
    }

    /// Grid with unit slot length.
    pub fn unit(levels: u32) -> Result<Self> {
        Self::new(1.0, levels)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// The grid point at `level`.
    pub fn point(&self, level: u32) -> f64 {
        assert!(level < self.levels, "level {level} outside grid");
        f64::from(level) * self.delta
    }
}

/// One draw of the dithered quantizer, with the perturbation that produced it.
#[derive(Debug, Clone, Copy)]
pub struct DitherSample {
    pub input: f64,
    pub output_level: u32,
    pub dither: f64,
}

/// Round to the nearest integer, halfway cases toward positive infinity.
#[inline]
pub(crate) fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

fn clamp_level(raw: i64, grid: &SlotGrid) -> u32 {
    raw.clamp(0, i64::from(grid.levels - 1)) as u32
}

/// Dithered quantization of `x` onto `grid`, returning the full sample.
///
/// Consumes exactly one uniform variate. Inputs outside the grid saturate at
/// the boundary levels.
pub fn dither_sample(x: f64, grid: &SlotGrid, rng: &mut SimRng) -> Result<DitherSample> {
    if !x.is_finite() {
        return Err(Error::NonFiniteInput(x));
    }
    let dither = (rng.next_f64() - 0.5) * grid.delta;
    let level = clamp_level(round_half_up((x + dither) / grid.delta), grid);
    Ok(DitherSample {
        input: x,
        output_level: level,
        dither,
    })
}

/// Dithered quantization of `x` onto `grid`, returning the level index.
pub fn dither_quantize(x: f64, grid: &SlotGrid, rng: &mut SimRng) -> Result<u32> {
    dither_sample(x, grid, rng).map(|s| s.output_level)
}

/// Deterministic nearest-level quantization; halfway ties round toward the
/// higher level. The protocol never produces a tie for alpha in (0, 1), so
/// any fixed rule works, but it has to be pinned down.
pub fn uniform_quantize(x: f64, grid: &SlotGrid) -> Result<u32> {
    if !x.is_finite() {
        return Err(Error::NonFiniteInput(x));
    }
    Ok(clamp_level(round_half_up(x / grid.delta), grid))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && 0.0 < alpha && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    Ok(())
}

/// Exact outcome law of one gap interaction, in integer slot units.
///
/// For a slot difference `d = g_i - g_j > 0` between the active pair, the
/// update offset is `k = Q((1+alpha)/2 * d)`: with `c = (1+alpha)/2 * d`,
/// `m = floor(c)` and `p = c - m`, the offset is `m` with probability `1 - p`
/// and `m + 1` with probability `p`. Negative differences mirror through
/// `Q(-x) = -Q(x)`; `d = 0` is a sure null. The updated pair is
/// `(g_j + k, g_i - k)`, so the new difference `2k - d` never exceeds `|d|`
/// in magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionDistribution {
    outcomes: Vec<(i64, f64)>,
}

impl InteractionDistribution {
    pub fn new(diff: i64, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if diff == 0 {
            return Ok(Self {
                outcomes: vec![(0, 1.0)],
            });
        }
        let sign = diff.signum();
        let magnitude = diff.abs();
        let scaled = 0.5 * (1.0 + alpha) * magnitude as f64;
        let base = scaled.floor();
        let p_upper = (scaled - base).clamp(0.0, 1.0);
        let base = base as i64;

        let mut outcomes = Vec::with_capacity(2);
        if p_upper < 1.0 {
            outcomes.push((sign * base, 1.0 - p_upper));
        }
        if p_upper > 0.0 {
            outcomes.push((sign * (base + 1), p_upper));
        }

        let sum: f64 = outcomes.iter().map(|&(_, p)| p).sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::ContractViolation(format!(
                "interaction law probabilities sum to {sum}"
            )));
        }
        if sum != 1.0 {
            for (_, p) in &mut outcomes {
                *p /= sum;
            }
        }

        debug_assert!(outcomes
            .iter()
            .all(|&(k, _)| (2 * k - diff).abs() <= diff.abs()));
        Ok(Self { outcomes })
    }

    /// The support as `(offset, probability)` pairs; one or two entries.
    pub fn outcomes(&self) -> &[(i64, f64)] {
        &self.outcomes
    }

    /// Probability assigned to offset `k`.
    pub fn prob_of(&self, k: i64) -> f64 {
        self.outcomes
            .iter()
            .find(|&&(o, _)| o == k)
            .map_or(0.0, |&(_, p)| p)
    }

    /// Draw one offset. Always consumes exactly one uniform variate so that
    /// coupled runs sharing a stream stay aligned event for event.
    pub fn sample(&self, rng: &mut SimRng) -> i64 {
        let u = rng.next_f64();
        let mut acc = 0.0;
        for &(k, p) in &self.outcomes {
            acc += p;
            if u < acc {
                return k;
            }
        }
        self.outcomes[self.outcomes.len() - 1].0
    }
}

/// The same offset drawn by literally adding a uniform dither and rounding,
/// instead of sampling the closed-form two-point law. Slower; exists so the
/// exact law can be cross-checked against the mechanism it summarizes.
pub fn literal_dither_outcome(diff: i64, alpha: f64, rng: &mut SimRng) -> Result<i64> {
    check_alpha(alpha)?;
    let scaled = 0.5 * (1.0 + alpha) * diff as f64;
    let dither = rng.next_f64() - 0.5;
    Ok(round_half_up(scaled + dither))
}

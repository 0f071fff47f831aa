//! Liminf-based tail indices on hazard scales.
//!
//! Every estimator reduces to the same windowed surrogate: evaluate a
//! ratio curve on a geometric grid, take the minimum over the top window
//! fraction, and report the curve alongside so the asymptote can be
//! judged. A value above [`DIVERGENCE_CAP`] across the whole window raises
//! an explicit infinity flag rather than a float infinity, keeping reports
//! serializable.
//!
//! The moment-side estimate classifies finiteness of E e^(s·h(X)) from
//! batch-mean stability. That is a heuristic (finiteness of an expectation
//! is not decidable from finitely many draws), so the result is always an
//! interval around the classification flip, never a point.

use crate::dist::TailModel;
use crate::empirical::{EmpiricalHazard, EvalGrid};
use crate::error::{Error, Result};
use crate::rng::RandomSource;
use crate::scale::{validate_window, window_start, ScaleFunction};
use serde::{Deserialize, Serialize};

/// Windowed ratios above this cap across the whole window raise the
/// infinity flag.
pub const DIVERGENCE_CAP: f64 = 1e6;

/// Number of doubling batches in the moment-side classifier.
const MGF_BATCHES: u32 = 8;

/// Batch means whose max/min ratio stays below this count as "finite".
const MGF_SPREAD_LIMIT: f64 = 2.0;

/// Bisection steps for the moment-side bracket: width = s_max/64.
const MGF_BISECTIONS: usize = 6;

/// A windowed liminf surrogate with its audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiminfEstimate {
    /// Minimum of the ratio curve over the window.
    pub value: f64,
    /// Set when every windowed ratio exceeds the divergence cap.
    pub infinite: bool,
    /// (x, ratio) at every grid point where the ratio is defined.
    pub ratio_curve: Vec<(f64, f64)>,
    /// Tail fraction of the grid the minimum was taken over.
    pub window: f64,
    /// Spread of the running infimum across the window: first windowed
    /// ratio minus the final minimum. 0 means the window is flat.
    pub stability: f64,
    /// Grid point attaining the minimum.
    pub argmin_x: f64,
}

/// Uniform hazard-evaluation view over analytic and sample-based sources.
#[derive(Debug, Clone)]
pub enum HazardSource {
    Analytic(TailModel),
    Empirical(EmpiricalHazard),
}

impl HazardSource {
    pub fn hazard_at(&self, x: f64) -> Result<f64> {
        match self {
            HazardSource::Analytic(m) => m.hazard(x),
            HazardSource::Empirical(e) => e.hazard_at(x),
        }
    }
}

/// Windowed minimum plus audit fields over an already-built curve. The
/// `skipped` count says how many leading grid points were dropped before
/// the curve started; the window always refers to the full grid length.
pub(crate) fn windowed_liminf(
    curve: Vec<(f64, f64)>,
    grid_len: usize,
    window: f64,
) -> Result<LiminfEstimate> {
    let start_grid = window_start(grid_len, window);
    let in_curve = curve.len() as isize - (grid_len - start_grid) as isize;
    if in_curve < 0 {
        return Err(Error::InsufficientTailData(
            "ratio curve does not cover the evaluation window".into(),
        ));
    }
    let start = in_curve as usize;
    let mut value = f64::INFINITY;
    let mut argmin_x = f64::NAN;
    for &(x, r) in &curve[start..] {
        if r < value {
            value = r;
            argmin_x = x;
        }
    }
    if !value.is_finite() {
        return Err(Error::DegenerateHazard(
            "no finite ratio in the evaluation window".into(),
        ));
    }
    Ok(LiminfEstimate {
        value,
        infinite: value > DIVERGENCE_CAP,
        stability: curve[start].1 - value,
        ratio_curve: curve,
        window,
        argmin_x,
    })
}

/// Windowed liminf of R(x)/h(x) for an arbitrary hazard evaluator.
pub(crate) fn h_order_with(
    hazard_at: &dyn Fn(f64) -> Result<f64>,
    h: &ScaleFunction,
    grid: &EvalGrid,
    window: f64,
) -> Result<LiminfEstimate> {
    validate_window(window)?;
    if !h.is_unbounded() {
        return Err(Error::NotAScaleFunction(
            "comparison scale must tend to infinity".into(),
        ));
    }
    let start = window_start(grid.len(), window);
    let mut curve = Vec::with_capacity(grid.len());
    for (i, &x) in grid.points().iter().enumerate() {
        let hv = h.eval(x);
        if hv <= 0.0 {
            if i >= start {
                return Err(Error::InvalidParameter(format!(
                    "scale function vanishes at x = {x} inside the window"
                )));
            }
            continue;
        }
        let r = hazard_at(x)?;
        curve.push((x, r / hv));
    }
    windowed_liminf(curve, grid.len(), window)
}

/// 𝕀_h: windowed liminf of R(x)/h(x) over the grid.
///
/// Points below the window where h vanishes are omitted from the curve; a
/// vanishing h inside the window is a parameter error. Hazard evaluation
/// errors (saturation, untrusted empirical range) propagate.
pub fn h_order(
    src: &HazardSource,
    h: &ScaleFunction,
    grid: &EvalGrid,
    window: f64,
) -> Result<LiminfEstimate> {
    h_order_with(&|x| src.hazard_at(x), h, grid, window)
}

/// 𝓔: windowed liminf of R(x)/x.
pub fn exponential_index(
    src: &HazardSource,
    grid: &EvalGrid,
    window: f64,
) -> Result<LiminfEstimate> {
    let last = *grid.points().last().unwrap();
    h_order(src, &ScaleFunction::identity(last), grid, window)
}

/// 𝕀: windowed liminf of R(x)/log x. Needs x_min > 1 so the divisor is
/// positive; log is admitted here although it is not a scale function.
pub fn moment_index(
    src: &HazardSource,
    grid: &EvalGrid,
    window: f64,
) -> Result<LiminfEstimate> {
    if grid.points()[0] <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "moment index needs grid above 1, got x_min = {}",
            grid.points()[0]
        )));
    }
    let h = ScaleFunction::sampled(0.0, |x| x.ln(), grid)?;
    h_order(src, &h, grid, window)
}

/// Windowed liminf of R_X(x)/R_Y(x), the direct hazard comparison.
pub fn ratio_liminf(
    src_x: &HazardSource,
    src_y: &HazardSource,
    grid: &EvalGrid,
    window: f64,
) -> Result<LiminfEstimate> {
    validate_window(window)?;
    let start = window_start(grid.len(), window);
    let mut curve = Vec::with_capacity(grid.len());
    for (i, &x) in grid.points().iter().enumerate() {
        let ry = src_y.hazard_at(x)?;
        if ry <= 0.0 {
            if i >= start {
                return Err(Error::DegenerateHazard(format!(
                    "comparison hazard vanishes at x = {x} inside the window"
                )));
            }
            continue;
        }
        let rx = src_x.hazard_at(x)?;
        curve.push((x, rx / ry));
    }
    windowed_liminf(curve, grid.len(), window)
}

/// Verified region for the tail-domination consequence of a hazard-ratio
/// liminf `a`: returns the smallest grid point from which
/// F̄_X(x) ≤ F̄_Y(x)^(a−ε) holds at every later grid point, i.e.
/// R_X(x) ≥ (a−ε)·R_Y(x) in log space. None when the last point fails.
pub fn ratio_bound_region(
    src_x: &HazardSource,
    src_y: &HazardSource,
    grid: &EvalGrid,
    a: f64,
    epsilon: f64,
) -> Result<Option<f64>> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let exponent = a - epsilon;
    if exponent < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon} exceeds the ratio value {a}"
        )));
    }
    let mut region_start = None;
    for &x in grid.points().iter().rev() {
        let rx = src_x.hazard_at(x)?;
        let ry = src_y.hazard_at(x)?;
        // tiny relative slack for roundoff in the closed forms
        if rx >= exponent * ry * (1.0 - 1e-12) - 1e-12 {
            region_start = Some(x);
        } else {
            break;
        }
    }
    Ok(region_start)
}

/// Interval bracket for sup{s : E e^(s·h(X)) < ∞}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgfBracket {
    pub lo: f64,
    pub hi: f64,
    /// Every probed s looked finite; the true boundary is at or above
    /// s_max.
    pub saturated: bool,
}

impl MgfBracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, s: f64) -> bool {
        self.lo <= s && s <= self.hi
    }
}

/// Bracket the moment boundary sup{s : E e^(s·h(X)) < ∞} by bisection.
///
/// A probe s counts as finite when the means of e^(s·h(Xᵢ)) across 8
/// doubling batches (consecutive disjoint slices of one unsorted draw
/// stream, reused for every probe) stay within a factor 2. Six bisection
/// steps on [0, s_max] leave a bracket of width s_max/64. All probes
/// divergent collapses to [0, 0]; all finite returns [s_max, s_max] with
/// the saturation flag.
pub fn mgf_sup_order(
    model: &TailModel,
    h: &ScaleFunction,
    s_max: f64,
    mc_n: usize,
    src: RandomSource,
) -> Result<MgfBracket> {
    if !(s_max.is_finite() && s_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "s_max must be positive, got {s_max}"
        )));
    }
    if mc_n < 100_000 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100000 draws for batch classification, got {mc_n}"
        )));
    }
    if !h.is_unbounded() {
        return Err(Error::NotAScaleFunction(
            "moment scale must tend to infinity".into(),
        ));
    }
    let draws = model.sample_stream(mc_n, src)?;
    let scaled: Vec<f64> = draws.iter().map(|&x| h.eval(x)).collect();
    let n0 = mc_n / ((1usize << MGF_BATCHES) - 1);

    let finite = |s: f64| -> bool {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        let mut begin = 0usize;
        for k in 0..MGF_BATCHES {
            let len = n0 << k;
            let sum: f64 = scaled[begin..begin + len].iter().map(|&v| (s * v).exp()).sum();
            let mean = sum / len as f64;
            lo = lo.min(mean);
            hi = hi.max(mean);
            begin += len;
        }
        hi / lo < MGF_SPREAD_LIMIT // NaN (all-overflow) counts as divergent
    };

    if finite(s_max) {
        return Ok(MgfBracket {
            lo: s_max,
            hi: s_max,
            saturated: true,
        });
    }
    let mut lo = 0.0f64;
    let mut hi = s_max;
    let mut any_finite = false;
    for _ in 0..MGF_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if finite(mid) {
            lo = mid;
            any_finite = true;
        } else {
            hi = mid;
        }
    }
    if !any_finite {
        return Ok(MgfBracket {
            lo: 0.0,
            hi: 0.0,
            saturated: false,
        });
    }
    Ok(MgfBracket {
        lo,
        hi,
        saturated: false,
    })
}

//! Piecewise-linear scale functions and the constructions built on them.
//!
//! A [`ScaleFunction`] is a non-decreasing piecewise-linear function given
//! by knots starting at 0, with linear extrapolation beyond the last knot.
//! It serves both as a candidate scale h (the yardstick a hazard is
//! measured against) and as a tabulated hazard R itself.
//!
//! Conventions that matter for the verdict operations:
//!  - verdicts (concavity, subadditivity, envelopes) are statements about
//!    the piecewise-linear object itself, extrapolation included, not about
//!    whatever formula it was sampled from;
//!  - probe pairs for the subadditivity checks are log-uniform and, for the
//!    product check, kept inside the tabulated domain so that linear
//!    extrapolation of a sublinear function cannot manufacture verdicts.

use crate::empirical::EvalGrid;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tolerance on chord-slope comparisons (concavity checks).
pub const SLOPE_TOL: f64 = 1e-10;

/// Additive slack accepted by envelope band checks.
pub const BAND_TOL: f64 = 1e-9;

/// Additive slack accepted by subadditivity checks.
pub const SUBADD_TOL: f64 = 1e-9;

/// First two coordinates of the R2 low-discrepancy sequence.
const KRONECKER_A1: f64 = 0.754_877_666_246_692_7;
const KRONECKER_A2: f64 = 0.569_840_290_998_053_2;

/// Window start index: the windowed region is the last ⌈w·len⌉ entries.
pub(crate) fn window_start(len: usize, window: f64) -> usize {
    let n_win = ((window * len as f64).ceil() as usize).clamp(1, len);
    len - n_win
}

pub(crate) fn validate_window(window: f64) -> Result<()> {
    if !(window.is_finite() && window > 0.0 && window < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "window must lie in (0, 1), got {window}"
        )));
    }
    Ok(())
}

// ---------- the type ----------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScaleFunctionRepr", into = "ScaleFunctionRepr")]
pub struct ScaleFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
    final_slope: f64,
}

/// Serialized form: [knot, value] pairs plus an extrapolation slope.
#[derive(Serialize, Deserialize)]
struct ScaleFunctionRepr {
    knots: Vec<(f64, f64)>,
    extrapolation_slope: f64,
}

impl From<ScaleFunction> for ScaleFunctionRepr {
    fn from(s: ScaleFunction) -> Self {
        ScaleFunctionRepr {
            knots: s.knots.iter().copied().zip(s.values.iter().copied()).collect(),
            extrapolation_slope: s.final_slope,
        }
    }
}

impl TryFrom<ScaleFunctionRepr> for ScaleFunction {
    type Error = Error;
    fn try_from(r: ScaleFunctionRepr) -> Result<Self> {
        let (knots, values) = r.knots.into_iter().unzip();
        ScaleFunction::with_slope(knots, values, r.extrapolation_slope)
    }
}

impl ScaleFunction {
    /// Build from knots/values; extrapolation continues the last chord.
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = knots.len();
        if n < 2 {
            return Err(Error::InvalidParameter(
                "a scale function needs at least 2 knots".into(),
            ));
        }
        let last = (values[n - 1] - values[n - 2]) / (knots[n - 1] - knots[n - 2]);
        Self::with_slope(knots, values, last)
    }

    /// Build with an explicit extrapolation slope.
    pub fn with_slope(knots: Vec<f64>, values: Vec<f64>, final_slope: f64) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "{} knots vs {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.len() < 2 {
            return Err(Error::InvalidParameter(
                "a scale function needs at least 2 knots".into(),
            ));
        }
        if knots[0] != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "first knot must be 0, got {}",
                knots[0]
            )));
        }
        for w in knots.windows(2) {
            if !(w[1].is_finite() && w[1] > w[0]) {
                return Err(Error::InvalidParameter(format!(
                    "knots must be finite and strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        for w in values.windows(2) {
            if !(w[0].is_finite() && w[1].is_finite() && w[1] >= w[0]) {
                return Err(Error::InvalidParameter(format!(
                    "values must be finite and non-decreasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if !(final_slope.is_finite() && final_slope >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "extrapolation slope must be finite and non-negative, got {final_slope}"
            )));
        }
        Ok(ScaleFunction {
            knots,
            values,
            final_slope,
        })
    }

    /// Sample `f` on a grid, with an explicit value at the mandatory 0 knot.
    pub fn sampled(value_at_zero: f64, f: impl Fn(f64) -> f64, grid: &EvalGrid) -> Result<Self> {
        let mut knots = Vec::with_capacity(grid.len() + 1);
        let mut values = Vec::with_capacity(grid.len() + 1);
        knots.push(0.0);
        values.push(value_at_zero);
        for &x in grid.points() {
            knots.push(x);
            values.push(f(x));
        }
        ScaleFunction::new(knots, values)
    }

    /// The identity map on [0, x_max], slope 1 beyond.
    pub fn identity(x_max: f64) -> Self {
        ScaleFunction::with_slope(vec![0.0, x_max], vec![0.0, x_max], 1.0)
            .expect("identity knots are valid")
    }

    /// Pointwise multiple c·h, c > 0.
    pub fn scale_by(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scale factor must be positive, got {c}"
            )));
        }
        ScaleFunction::with_slope(
            self.knots.clone(),
            self.values.iter().map(|v| c * v).collect(),
            c * self.final_slope,
        )
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn final_slope(&self) -> f64 {
        self.final_slope
    }

    pub fn last_knot(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub fn last_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn value_at_zero(&self) -> f64 {
        self.values[0]
    }

    /// True when the function tends to infinity (positive final slope), the
    /// defining property of a scale function.
    pub fn is_unbounded(&self) -> bool {
        self.final_slope > 0.0
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] > w[0])
    }

    /// Evaluate at `x ≥ 0` (negative x clamps to the 0 knot).
    pub fn eval(&self, x: f64) -> f64 {
        let idx = self.knots.partition_point(|k| *k <= x);
        if idx == 0 {
            return self.values[0];
        }
        if idx == self.knots.len() {
            let lk = self.last_knot();
            return self.last_value() + self.final_slope * (x - lk);
        }
        let (x0, x1) = (self.knots[idx - 1], self.knots[idx]);
        let (v0, v1) = (self.values[idx - 1], self.values[idx]);
        // slope first: exact on segments with representable slope, and no
        // overflow when both knots and values are near the float ceiling
        v0 + (x - x0) * ((v1 - v0) / (x1 - x0))
    }

    /// Inverse. Requires strictly increasing values; y below value(0) is a
    /// range error, y above the last value inverts the extrapolation when
    /// the final slope is positive.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !self.is_strictly_increasing() {
            return Err(Error::NotInvertible(
                "values are not strictly increasing".into(),
            ));
        }
        if y < self.values[0] {
            return Err(Error::OutOfRange(format!(
                "y = {y} below value(0) = {}",
                self.values[0]
            )));
        }
        if y > self.last_value() {
            if self.final_slope > 0.0 {
                return Ok(self.last_knot() + (y - self.last_value()) / self.final_slope);
            }
            return Err(Error::OutOfRange(format!(
                "y = {y} above range maximum {} (flat extrapolation)",
                self.last_value()
            )));
        }
        let idx = self.values.partition_point(|v| *v < y);
        if idx == 0 {
            return Ok(self.knots[0]);
        }
        let (v0, v1) = (self.values[idx - 1], self.values[idx]);
        let (x0, x1) = (self.knots[idx - 1], self.knots[idx]);
        if v1 == v0 {
            return Ok(x0);
        }
        Ok(x0 + (y - v0) * (x1 - x0) / (v1 - v0))
    }

    /// Smallest x with h(x) ≥ level (extrapolating when allowed).
    fn first_crossing(&self, level: f64) -> Result<f64> {
        if level <= self.values[0] {
            return Ok(self.knots[0]);
        }
        if level > self.last_value() {
            if self.final_slope > 0.0 {
                return Ok(self.last_knot() + (level - self.last_value()) / self.final_slope);
            }
            return Err(Error::OutOfRange(format!(
                "level {level} above range maximum {}",
                self.last_value()
            )));
        }
        let idx = self.values.partition_point(|v| *v < level);
        // values[idx] >= level > values[idx-1], idx >= 1
        let (v0, v1) = (self.values[idx - 1], self.values[idx]);
        let (x0, x1) = (self.knots[idx - 1], self.knots[idx]);
        Ok(x0 + (level - v0) * (x1 - x0) / (v1 - v0))
    }
}

// ---------- verdicts ----------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ConcavityVerdict {
    Concave,
    /// Chord slopes increase across this knot triple.
    NotConcave { witness: (f64, f64, f64) },
}

impl ConcavityVerdict {
    pub fn is_concave(&self) -> bool {
        matches!(self, ConcavityVerdict::Concave)
    }
}

/// Chord slopes must be non-increasing within [`SLOPE_TOL`].
pub fn check_concave(h: &ScaleFunction) -> ConcavityVerdict {
    let k = h.knots();
    let v = h.values();
    for i in 0..k.len() - 2 {
        let s01 = (v[i + 1] - v[i]) / (k[i + 1] - k[i]);
        let s12 = (v[i + 2] - v[i + 1]) / (k[i + 2] - k[i + 1]);
        if s12 > s01 + SLOPE_TOL {
            return ConcavityVerdict::NotConcave {
                witness: (k[i], k[i + 1], k[i + 2]),
            };
        }
    }
    ConcavityVerdict::Concave
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SubadditivityVerdict {
    Holds,
    Fails { witness: (f64, f64) },
}

impl SubadditivityVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, SubadditivityVerdict::Holds)
    }
}

fn probe_range(h: &ScaleFunction) -> (f64, f64) {
    let hi = h.last_knot();
    // a 2-knot scale leaves no interior anchor; span six decades instead
    let lo = if h.knots()[1] < hi {
        h.knots()[1]
    } else {
        hi / 1e6
    };
    (lo, hi)
}

/// h(a+b) ≤ h(a) + h(b) + tolerance on a deterministic log-uniform probe
/// set of at least 100 pairs spanning the tabulated domain.
pub fn check_subadditive_sum(h: &ScaleFunction, probe_pairs: usize) -> Result<SubadditivityVerdict> {
    if probe_pairs < 100 {
        return Err(Error::InvalidParameter(format!(
            "at least 100 probe pairs required, got {probe_pairs}"
        )));
    }
    let (lo, hi) = probe_range(h);
    let (llo, lhi) = (lo.ln(), hi.ln());
    let check = |a: f64, b: f64| -> Option<(f64, f64)> {
        if h.eval(a + b) > h.eval(a) + h.eval(b) + SUBADD_TOL {
            Some((a, b))
        } else {
            None
        }
    };
    for i in 1..=probe_pairs {
        let la = llo + ((i as f64 * KRONECKER_A1).fract()) * (lhi - llo);
        let lb = llo + ((i as f64 * KRONECKER_A2).fract()) * (lhi - llo);
        if let Some(w) = check(la.exp(), lb.exp()) {
            return Ok(SubadditivityVerdict::Fails { witness: w });
        }
    }
    for (a, b) in [(lo, lo), (lo, hi), (hi, lo), (hi, hi)] {
        if let Some(w) = check(a, b) {
            return Ok(SubadditivityVerdict::Fails { witness: w });
        }
    }
    Ok(SubadditivityVerdict::Holds)
}

/// h(a·b) ≤ h(a) + h(b) + tolerance on a deterministic log-uniform probe
/// set whose products stay inside the tabulated domain.
pub fn check_subadditive_product(
    h: &ScaleFunction,
    probe_pairs: usize,
) -> Result<SubadditivityVerdict> {
    if probe_pairs < 100 {
        return Err(Error::InvalidParameter(format!(
            "at least 100 probe pairs required, got {probe_pairs}"
        )));
    }
    let (lo, hi) = probe_range(h);
    let (llo, lhi) = (lo.ln(), hi.ln());
    let check = |a: f64, b: f64| -> Option<(f64, f64)> {
        if h.eval(a * b) > h.eval(a) + h.eval(b) + SUBADD_TOL {
            Some((a, b))
        } else {
            None
        }
    };
    for i in 1..=probe_pairs {
        let la = llo + ((i as f64 * KRONECKER_A1).fract()) * (lhi - llo);
        let lb_raw = llo + ((i as f64 * KRONECKER_A2).fract()) * (lhi - llo);
        let lb = lb_raw.min(lhi - la); // keep a·b ≤ last knot
        if let Some(w) = check(la.exp(), lb.exp()) {
            return Ok(SubadditivityVerdict::Fails { witness: w });
        }
    }
    let mid = (llo + lhi) / 2.0;
    for (a, b) in [(lo, lo), (lo, hi), (mid.exp(), mid.exp())] {
        if a * b <= hi {
            if let Some(w) = check(a, b) {
                return Ok(SubadditivityVerdict::Fails { witness: w });
            }
        }
    }
    Ok(SubadditivityVerdict::Holds)
}

// ---------- least concave majorant ----------

/// Least concave majorant of h over its knot set: same knots, hull values,
/// extrapolation slope preserved.
pub fn concave_majorant(h: &ScaleFunction) -> ScaleFunction {
    let k = h.knots();
    let v = h.values();
    // Upper hull by monotone chain; slopes (not cross products) so that
    // huge coordinates cannot overflow.
    let mut hull: Vec<usize> = Vec::with_capacity(k.len());
    for i in 0..k.len() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let s_ab = (v[b] - v[a]) / (k[b] - k[a]);
            let s_bi = (v[i] - v[b]) / (k[i] - k[b]);
            if s_ab <= s_bi {
                hull.pop(); // b lies on or below chord a→i
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut values = Vec::with_capacity(k.len());
    let mut seg = 0usize;
    for (i, &x) in k.iter().enumerate() {
        while seg + 1 < hull.len() && k[hull[seg + 1]] < x {
            seg += 1;
        }
        if hull[seg] == i || hull.get(seg + 1) == Some(&i) {
            values.push(v[i]);
            continue;
        }
        let (a, b) = (hull[seg], hull[seg + 1]);
        let t = (x - k[a]) / (k[b] - k[a]);
        values.push(v[a] + t * (v[b] - v[a]));
    }
    ScaleFunction::with_slope(k.to_vec(), values, h.final_slope())
        .expect("hull of a valid scale function is valid")
}

// ---------- strict envelope ----------

/// Strictly increasing envelope h_η with h ≤ h_η ≤ h + η.
///
/// Level crossings y_k (smallest x with h(x) ≥ kη) cut the domain into
/// intervals; on each one the envelope is the least concave majorant of h
/// pinned to the exact endpoint values, which removes plateaus while
/// touching h at every anchor.
pub fn strict_envelope(h: &ScaleFunction, eta: f64) -> Result<ScaleFunction> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eta must be positive, got {eta}"
        )));
    }
    if !h.is_unbounded() {
        return Err(Error::NotAScaleFunction(
            "flat extrapolation: the function does not tend to infinity".into(),
        ));
    }
    let levels_in_range = ((h.last_value() - h.value_at_zero()) / eta).ceil();
    if !(levels_in_range.is_finite() && levels_in_range < 1e7) {
        return Err(Error::InvalidParameter(format!(
            "eta = {eta} would require {levels_in_range} envelope levels"
        )));
    }

    // Segment boundaries: 0, every level crossing in range, the last knot.
    let k_first = (h.value_at_zero() / eta).floor() as i64 + 1;
    let mut bounds = vec![(0.0, h.value_at_zero())];
    let mut k = k_first;
    loop {
        let level = k as f64 * eta;
        if level > h.last_value() {
            break;
        }
        let x = h.first_crossing(level)?;
        if x > bounds.last().unwrap().0 {
            bounds.push((x, level));
        }
        k += 1;
    }
    let lk = h.last_knot();
    if lk > bounds.last().unwrap().0 {
        bounds.push((lk, h.last_value()));
    }

    let mut knots = vec![bounds[0].0];
    let mut values = vec![bounds[0].1];
    for w in bounds.windows(2) {
        let ((xa, va), (xb, vb)) = (w[0], w[1]);
        // Points of h strictly inside, plus pinned endpoints.
        let mut px = vec![xa];
        let mut pv = vec![va];
        let start = h.knots().partition_point(|x| *x <= xa);
        for i in start..h.knots().len() {
            if h.knots()[i] >= xb {
                break;
            }
            px.push(h.knots()[i]);
            pv.push(h.values()[i]);
        }
        px.push(xb);
        pv.push(vb);
        // Upper hull of the pinned points.
        let mut hull: Vec<usize> = Vec::new();
        for i in 0..px.len() {
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                let s_ab = (pv[b] - pv[a]) / (px[b] - px[a]);
                let s_bi = (pv[i] - pv[b]) / (px[i] - px[b]);
                if s_ab <= s_bi {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(i);
        }
        for &i in &hull[1..] {
            knots.push(px[i]);
            values.push(pv[i]);
        }
    }
    let env = ScaleFunction::with_slope(knots, values, h.final_slope())?;
    if !env.is_strictly_increasing() {
        return Err(Error::DegenerateHazard(
            "envelope failed to remove a plateau".into(),
        ));
    }
    Ok(env)
}

// ---------- little-o companion ----------

/// A function g with g(0) = 0, g → ∞ and g(x)/R(x) → 0, anchored at the
/// level-crossing points of R: g(xₙ) = √(n−1) where xₙ = min{x : R(x) ≥ n}.
pub fn little_o_of_hazard(hazard: &ScaleFunction, n_levels: usize) -> Result<ScaleFunction> {
    if n_levels < 2 {
        return Err(Error::InvalidParameter(
            "need at least 2 levels for an unbounded companion".into(),
        ));
    }
    let mut knots = vec![0.0];
    let mut values = vec![0.0];
    for n in 1..=n_levels {
        let x = match hazard.first_crossing(n as f64) {
            Ok(x) => x,
            Err(_) => {
                return Err(Error::RangeExhausted {
                    constructed: n - 1,
                    reason: format!("hazard never reaches level {n}"),
                })
            }
        };
        if x <= *knots.last().unwrap() {
            return Err(Error::DegenerateHazard(format!(
                "level {n} crossed at x = {x}, not beyond the previous anchor"
            )));
        }
        knots.push(x);
        values.push(((n - 1) as f64).sqrt());
    }
    ScaleFunction::new(knots, values)
}

// ---------- natural scale fit ----------

/// Result of fitting a concave scale to a tabulated hazard.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    /// Concave fitted scale h = β·(ĥ − ĥ(0)); h(0) = 0.
    pub scale: ScaleFunction,
    /// Windowed infimum of R/ĥ, the rescaling that pins the ratio at 1.
    pub beta: f64,
    /// Knot where the windowed ratio attains its minimum.
    pub argmin_x: f64,
    /// The least concave majorant ĥ of the hazard.
    pub hull: ScaleFunction,
}

/// Fit a concave scale with h(0) = 0 and windowed liminf R/h = 1.
///
/// ĥ is the least concave majorant of the tabulated hazard, β the minimum
/// of R/ĥ over the top `window` fraction of knots, and the fitted scale is
/// β·(ĥ − ĥ(0)).
pub fn natural_scale_fit(hazard: &ScaleFunction, window: f64) -> Result<FitResult> {
    validate_window(window)?;
    let hull = concave_majorant(hazard);
    let n = hazard.knots().len();
    let start = window_start(n, window);
    let mut beta = f64::INFINITY;
    let mut argmin_x = f64::NAN;
    for i in start..n {
        let hv = hull.values()[i];
        if hv <= 0.0 {
            continue;
        }
        let r = hazard.values()[i] / hv;
        if r < beta {
            beta = r;
            argmin_x = hazard.knots()[i];
        }
    }
    if !beta.is_finite() {
        return Err(Error::DegenerateHazard(
            "hazard is zero across the whole window".into(),
        ));
    }
    let h0 = hull.value_at_zero();
    let values: Vec<f64> = hull.values().iter().map(|v| beta * (v - h0)).collect();
    let scale = ScaleFunction::with_slope(
        hull.knots().to_vec(),
        values,
        beta * hull.final_slope(),
    )?;
    Ok(FitResult {
        scale,
        beta,
        argmin_x,
        hull,
    })
}

// ---------- composition with an inverse diagonal ----------

/// Tabulate R ∘ g_d⁻¹ without explicit inversion: the output knot at
/// g_d(x) carries the value R(x), exact at every knot of R.
///
/// Requires g_d strictly increasing with g_d(0) = 0 and positive final
/// slope (so the image covers the whole range).
pub fn compose_with_inverse_diagonal(
    hazard: &ScaleFunction,
    g_d: &ScaleFunction,
) -> Result<ScaleFunction> {
    if !g_d.is_strictly_increasing() || !g_d.is_unbounded() {
        return Err(Error::NotInvertible(
            "diagonal must be strictly increasing and unbounded".into(),
        ));
    }
    if g_d.value_at_zero() != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "diagonal must map 0 to 0, got {}",
            g_d.value_at_zero()
        )));
    }
    let knots: Vec<f64> = hazard.knots().iter().map(|&x| g_d.eval(x)).collect();
    let final_slope = hazard.final_slope() / g_d.final_slope();
    ScaleFunction::with_slope(knots, hazard.values().to_vec(), final_slope)
}

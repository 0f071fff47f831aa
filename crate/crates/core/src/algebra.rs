//! Composition rules for scales of sums, products, maxima, and monotone
//! transformations of IID variables.
//!
//! Each rule is gated: the hypotheses behind it are checked numerically
//! (subadditivity probes, ratio divergence, concavity) before any
//! conclusion is asserted, and the result records which conditions were
//! verified and which were taken on trust. A failed hypothesis yields an
//! explicit verdict with a witness, never a silently wrong scale.
//!
//! The implications only run one way, so a `hypothesis_failed` result
//! means "this rule does not apply", not "the conclusion is false".

use crate::dist::TailModel;
use crate::empirical::EvalGrid;
use crate::error::{Error, Result};
use crate::indices::{h_order, h_order_with, HazardSource, LiminfEstimate, DIVERGENCE_CAP};
use crate::rng::RandomSource;
use crate::scale::{
    check_concave, check_subadditive_product, check_subadditive_sum,
    compose_with_inverse_diagonal, ConcavityVerdict, ScaleFunction, SubadditivityVerdict,
};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Probe pairs handed to the subadditivity checkers.
const RULE_PROBE_PAIRS: usize = 256;

/// Points on the scale-ratio curve used to test divergence.
const RATIO_PROBE_POINTS: usize = 256;

/// Tail fraction of the ratio curve that must clear the divergence cap.
const RATIO_WINDOW: f64 = 0.25;

/// Grid points with fewer exceedances than this carry no evidence.
const MIN_EXCEEDANCES: usize = 10;

// ---------- transform specification ----------

/// Componentwise-increasing transform families with a usable diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TransformKind {
    Sum,
    Product,
    Max,
    /// x₁^a₁ ··· xₙ^aₙ with aᵢ ≥ 0 and Σaᵢ = 1.
    PowerProduct { exponents: Vec<f64> },
    /// Transform known only through its tabulated diagonal; cannot be
    /// simulated, only composed.
    Custom { description: String },
}

/// A transform of n IID variables together with its diagonal
/// g_d(x) = g(x, ..., x) and the diagonal's inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    arity: usize,
    kind: TransformKind,
    diagonal: ScaleFunction,
    diagonal_inverse: ScaleFunction,
}

impl TransformSpec {
    fn build(arity: usize, kind: TransformKind, diagonal: ScaleFunction) -> Result<Self> {
        if arity < 2 {
            return Err(Error::InvalidParameter(format!(
                "transform arity must be at least 2, got {arity}"
            )));
        }
        if !diagonal.is_strictly_increasing() || !diagonal.is_unbounded() {
            return Err(Error::NotInvertible(
                "diagonal must be strictly increasing and unbounded".into(),
            ));
        }
        if diagonal.value_at_zero() != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "diagonal must map 0 to 0, got {}",
                diagonal.value_at_zero()
            )));
        }
        // exact inverse of a piecewise-linear bijection: swap axes
        let diagonal_inverse = ScaleFunction::with_slope(
            diagonal.values().to_vec(),
            diagonal.knots().to_vec(),
            1.0 / diagonal.final_slope(),
        )?;
        Ok(TransformSpec {
            arity,
            kind,
            diagonal,
            diagonal_inverse,
        })
    }

    /// x₁ + ... + xₙ, diagonal n·x.
    pub fn sum(arity: usize, x_max: f64) -> Result<Self> {
        let n = arity as f64;
        let d = ScaleFunction::with_slope(vec![0.0, x_max], vec![0.0, n * x_max], n)?;
        Self::build(arity, TransformKind::Sum, d)
    }

    /// x₁ ··· xₙ, diagonal xⁿ tabulated on the grid.
    pub fn product(arity: usize, grid: &EvalGrid) -> Result<Self> {
        if arity < 2 {
            return Err(Error::InvalidParameter(format!(
                "transform arity must be at least 2, got {arity}"
            )));
        }
        let d = ScaleFunction::sampled(0.0, |x| x.powi(arity as i32), grid)?;
        Self::build(arity, TransformKind::Product, d)
    }

    /// max(x₁, ..., xₙ), diagonal the identity.
    pub fn max(arity: usize, x_max: f64) -> Result<Self> {
        Self::build(arity, TransformKind::Max, ScaleFunction::identity(x_max))
    }

    /// x₁^a₁ ··· xₙ^aₙ with aᵢ ≥ 0 and Σaᵢ = 1; diagonal the identity.
    pub fn power_product(exponents: Vec<f64>, x_max: f64) -> Result<Self> {
        if exponents.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "transform arity must be at least 2, got {}",
                exponents.len()
            )));
        }
        if exponents.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidParameter(
                "power-product exponents must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = exponents.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "power-product exponents must sum to 1, got {total}"
            )));
        }
        let arity = exponents.len();
        Self::build(
            arity,
            TransformKind::PowerProduct { exponents },
            ScaleFunction::identity(x_max),
        )
    }

    /// A transform known only through its tabulated diagonal.
    pub fn custom(arity: usize, description: impl Into<String>, diagonal: ScaleFunction) -> Result<Self> {
        Self::build(
            arity,
            TransformKind::Custom {
                description: description.into(),
            },
            diagonal,
        )
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn kind(&self) -> &TransformKind {
        &self.kind
    }

    pub fn diagonal(&self) -> &ScaleFunction {
        &self.diagonal
    }

    pub fn diagonal_inverse(&self) -> &ScaleFunction {
        &self.diagonal_inverse
    }

    /// Evaluate the transform on one realization of its arguments.
    pub fn apply(&self, xs: &[f64]) -> Result<f64> {
        if xs.len() != self.arity {
            return Err(Error::InvalidParameter(format!(
                "expected {} arguments, got {}",
                self.arity,
                xs.len()
            )));
        }
        match &self.kind {
            TransformKind::Sum => Ok(xs.iter().sum()),
            TransformKind::Product => Ok(xs.iter().product()),
            TransformKind::Max => Ok(xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            TransformKind::PowerProduct { exponents } => Ok(xs
                .iter()
                .zip(exponents)
                .map(|(x, a)| x.powf(*a))
                .product()),
            TransformKind::Custom { .. } => Err(Error::InvalidParameter(
                "custom transforms carry only a diagonal and cannot be evaluated".into(),
            )),
        }
    }

    /// Whether every component of the transform is increasing and
    /// unbounded. A zero power-product exponent makes that component
    /// constant, which breaks the composition rule's hypothesis.
    fn components_unbounded(&self) -> Option<bool> {
        match &self.kind {
            TransformKind::Sum | TransformKind::Product | TransformKind::Max => Some(true),
            TransformKind::PowerProduct { exponents } => Some(exponents.iter().all(|a| *a > 0.0)),
            TransformKind::Custom { .. } => None, // not checkable from the diagonal
        }
    }
}

// ---------- rule results ----------

/// Which calculation rule produced the result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleTag {
    /// One hazard scale outgrows the other; the slower scale survives.
    DominatedSum,
    /// Shared subadditive scale: the order of the combination is the
    /// minimum of the individual orders under that same scale.
    SharedScaleMin,
    /// Scale of a transform via composition with the inverse diagonal.
    DiagonalComposition,
    /// No rule applies; see the hypothesis record.
    HypothesisFailed,
}

/// One hypothesis behind a rule: verified numerically or assumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    /// False when the condition is taken on trust from the caller.
    pub checked: bool,
    pub witness: Option<(f64, f64)>,
}

impl HypothesisCheck {
    fn checked(name: &str, passed: bool) -> Self {
        HypothesisCheck {
            name: name.into(),
            passed,
            checked: true,
            witness: None,
        }
    }

    fn with_witness(name: &str, passed: bool, witness: Option<(f64, f64)>) -> Self {
        HypothesisCheck {
            name: name.into(),
            passed,
            checked: true,
            witness,
        }
    }

    fn assumed(name: &str) -> Self {
        HypothesisCheck {
            name: name.into(),
            passed: true,
            checked: false,
            witness: None,
        }
    }
}

/// Outcome of a composition rule. `scale` is present only when every
/// required hypothesis passed; `constant_range` locates the undetermined
/// positive constant multiplying the scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleResult {
    pub rule: RuleTag,
    pub scale: Option<ScaleFunction>,
    pub constant_range: (f64, f64),
    pub hypotheses: Vec<HypothesisCheck>,
}

impl RuleResult {
    fn failed(hypotheses: Vec<HypothesisCheck>) -> Self {
        RuleResult {
            rule: RuleTag::HypothesisFailed,
            scale: None,
            constant_range: (1.0, 1.0),
            hypotheses,
        }
    }
}

// ---------- scale of a sum ----------

/// Deterministic total order on scale functions so that rule derivation
/// treats its two arguments symmetrically.
fn cmp_scales(p: &ScaleFunction, q: &ScaleFunction) -> Ordering {
    let by = |a: &[f64], b: &[f64]| -> Ordering {
        for (x, y) in a.iter().zip(b) {
            match x.total_cmp(y) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        a.len().cmp(&b.len())
    };
    by(p.knots(), q.knots())
        .then_with(|| by(p.values(), q.values()))
        .then_with(|| p.final_slope().total_cmp(&q.final_slope()))
}

/// Windowed surrogate for num/den → ∞ on the shared tabulated domain:
/// the ratio exceeds the divergence cap throughout the top window
/// fraction and still increases across the top half of that window.
/// Returns the verdict and the last probed (x, ratio).
fn ratio_diverges(num: &ScaleFunction, den: &ScaleFunction) -> (bool, Option<(f64, f64)>) {
    let lo = num.knots()[1].max(den.knots()[1]);
    let hi = num.last_knot().min(den.last_knot());
    if !(hi > lo && lo > 0.0) {
        return (false, None);
    }
    let step = (hi / lo).powf(1.0 / (RATIO_PROBE_POINTS - 1) as f64);
    let mut curve = Vec::with_capacity(RATIO_PROBE_POINTS);
    let mut x = lo;
    for _ in 0..RATIO_PROBE_POINTS {
        let d = den.eval(x);
        if d > 0.0 {
            curve.push((x, num.eval(x) / d));
        }
        x *= step;
    }
    let last = curve.last().copied();
    let w = ((curve.len() as f64 * RATIO_WINDOW) as usize).max(1);
    let start = curve.len() - w;
    let window = &curve[start..];
    if window.iter().any(|(_, r)| *r <= DIVERGENCE_CAP) {
        return (false, last);
    }
    let half = window.len() / 2;
    let increasing = window[half..].windows(2).all(|w| w[1].1 > w[0].1);
    (increasing, last)
}

/// Scale of X + Y from the scales of X and Y.
///
/// If one scale outgrows the other beyond the divergence cap, the slower
/// scale survives with an undetermined constant in [1/2, 1], provided
/// both scales are concave and the survivor vanishes at 0. If the scales
/// coincide and are sum-subadditive on probes, the shared scale itself is
/// returned and the order of the sum is the minimum of the individual
/// orders. Otherwise no rule is asserted. Symmetric in its arguments.
pub fn scale_of_sum(hx: &ScaleFunction, hy: &ScaleFunction) -> RuleResult {
    let (a, b) = match cmp_scales(hx, hy) {
        Ordering::Greater => (hy, hx),
        _ => (hx, hy),
    };
    let (a_over_b, ab_last) = ratio_diverges(a, b);
    let (b_over_a, ba_last) = ratio_diverges(b, a);
    if a_over_b || b_over_a {
        let (fast, slow, last) = if a_over_b {
            (a, b, ab_last)
        } else {
            (b, a, ba_last)
        };
        let mut checks = vec![HypothesisCheck::with_witness(
            "scale ratio diverges on the probe window",
            true,
            last,
        )];
        let slow_concave = check_concave(slow);
        checks.push(HypothesisCheck::with_witness(
            "surviving scale is concave",
            slow_concave == ConcavityVerdict::Concave,
            concavity_witness(&slow_concave),
        ));
        checks.push(HypothesisCheck::checked(
            "surviving scale vanishes at zero",
            slow.value_at_zero() == 0.0,
        ));
        let fast_concave = check_concave(fast);
        checks.push(HypothesisCheck::with_witness(
            "dominated scale is concave",
            fast_concave == ConcavityVerdict::Concave,
            concavity_witness(&fast_concave),
        ));
        if checks.iter().all(|c| c.passed) {
            return RuleResult {
                rule: RuleTag::DominatedSum,
                scale: Some(slow.clone()),
                constant_range: (0.5, 1.0),
                hypotheses: checks,
            };
        }
        return RuleResult::failed(checks);
    }

    let mut checks = vec![HypothesisCheck::with_witness(
        "scale ratio diverges on the probe window",
        false,
        ab_last,
    )];
    let coincide = a == b;
    checks.push(HypothesisCheck::checked(
        "scales coincide for the shared-scale rule",
        coincide,
    ));
    if !coincide {
        return RuleResult::failed(checks);
    }
    let sub = check_subadditive_sum(a, RULE_PROBE_PAIRS)
        .expect("probe count is fixed above the minimum");
    match sub {
        SubadditivityVerdict::Holds => {
            checks.push(HypothesisCheck::checked(
                "shared scale is sum-subadditive on probes",
                true,
            ));
            RuleResult {
                rule: RuleTag::SharedScaleMin,
                scale: Some(a.clone()),
                constant_range: (1.0, 1.0),
                hypotheses: checks,
            }
        }
        SubadditivityVerdict::Fails { witness } => {
            checks.push(HypothesisCheck::with_witness(
                "shared scale is sum-subadditive on probes",
                false,
                Some(witness),
            ));
            RuleResult::failed(checks)
        }
    }
}

fn concavity_witness(v: &ConcavityVerdict) -> Option<(f64, f64)> {
    match v {
        ConcavityVerdict::Concave => None,
        ConcavityVerdict::NotConcave { witness } => Some((witness.0, witness.2)),
    }
}

// ---------- scale of a product ----------

/// Order rule for X·Y (X, Y positive) under a shared test scale: asserted
/// only when the scale is product-subadditive on probes. The input scales
/// are recorded for the report; the rule itself needs only the test
/// scale.
pub fn scale_of_product(
    hx: &ScaleFunction,
    hy: &ScaleFunction,
    h_test: &ScaleFunction,
) -> RuleResult {
    let mut checks = vec![
        HypothesisCheck::assumed("variables are positive and independent"),
        HypothesisCheck::checked(
            "input scales are unbounded",
            hx.is_unbounded() && hy.is_unbounded(),
        ),
        HypothesisCheck::checked("test scale is unbounded", h_test.is_unbounded()),
    ];
    if !checks.iter().all(|c| c.passed) {
        return RuleResult::failed(checks);
    }
    let sub = check_subadditive_product(h_test, RULE_PROBE_PAIRS)
        .expect("probe count is fixed above the minimum");
    match sub {
        SubadditivityVerdict::Holds => {
            checks.push(HypothesisCheck::checked(
                "test scale is product-subadditive on probes",
                true,
            ));
            RuleResult {
                rule: RuleTag::SharedScaleMin,
                scale: Some(h_test.clone()),
                constant_range: (1.0, 1.0),
                hypotheses: checks,
            }
        }
        SubadditivityVerdict::Fails { witness } => {
            checks.push(HypothesisCheck::with_witness(
                "test scale is product-subadditive on probes",
                false,
                Some(witness),
            ));
            RuleResult::failed(checks)
        }
    }
}

// ---------- scale of a maximum ----------

/// h-order of a maximum measured two ways: directly from the hazard of
/// the max variable, and as the minimum of the individual h-orders. The
/// two agree within the reported stabilities when the window is honest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxOrder {
    pub direct: LiminfEstimate,
    pub individual: Vec<LiminfEstimate>,
    pub min_individual: f64,
}

/// Hazard of max(X₁, ..., Xₙ) for independent sources:
/// R = −log(1 − Π(1 − F̄ᵢ)), evaluated through log1p/expm1 so that one
/// vanishing tail cannot swamp the others.
fn max_hazard(sources: &[HazardSource], x: f64) -> Result<f64> {
    let mut log_prod = 0.0f64;
    for s in sources {
        let tail = (-s.hazard_at(x)?).exp();
        log_prod += (-tail).ln_1p();
    }
    Ok(-(-log_prod.exp_m1()).ln())
}

/// h-order of the max of independent sources, both directly and by the
/// minimum rule.
pub fn scale_of_max(
    sources: &[HazardSource],
    h: &ScaleFunction,
    grid: &EvalGrid,
    window: f64,
) -> Result<MaxOrder> {
    if sources.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "max rule needs at least 2 sources, got {}",
            sources.len()
        )));
    }
    let direct = h_order_with(&|x| max_hazard(sources, x), h, grid, window)?;
    let individual: Vec<LiminfEstimate> = sources
        .iter()
        .map(|s| h_order(s, h, grid, window))
        .collect::<Result<_>>()?;
    let min_individual = individual
        .iter()
        .map(|e| e.value)
        .fold(f64::INFINITY, f64::min);
    Ok(MaxOrder {
        direct,
        individual,
        min_individual,
    })
}

// ---------- scale of a transform ----------

/// Scale of g(X₁, ..., Xₙ) for IID positive Xᵢ: the base hazard composed
/// with the inverse diagonal, with the undetermined constant located in
/// [1, n].
pub fn transform_scale(t: &TransformSpec, base_hazard: &ScaleFunction) -> Result<RuleResult> {
    let mut checks = Vec::new();
    match t.components_unbounded() {
        Some(ok) => checks.push(HypothesisCheck::checked(
            "every component is increasing and unbounded",
            ok,
        )),
        None => checks.push(HypothesisCheck::assumed(
            "every component is increasing and unbounded",
        )),
    }
    checks.push(HypothesisCheck::checked(
        "diagonal is strictly increasing with an inverse",
        true, // enforced at construction
    ));
    checks.push(HypothesisCheck::assumed(
        "variables are IID, positive, with a continuous distribution",
    ));
    if !checks.iter().all(|c| c.passed) {
        return Ok(RuleResult::failed(checks));
    }
    let scale = compose_with_inverse_diagonal(base_hazard, &t.diagonal)?;
    Ok(RuleResult {
        rule: RuleTag::DiagonalComposition,
        scale: Some(scale),
        constant_range: (1.0, t.arity as f64),
        hypotheses: checks,
    })
}

// ---------- Monte Carlo verification of the transform bound ----------

/// One grid point of a tail-bound comparison. `margin` is bound minus
/// empirical tail; negative means the inequality failed at this point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub x: f64,
    pub empirical: f64,
    pub bound: f64,
    pub margin: f64,
    pub std_error: f64,
    pub exceedances: usize,
    pub conclusive: bool,
}

/// Verdict of a bound verification over the probed grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum BoundVerdict {
    Consistent,
    Violated { x: f64, margin: f64 },
}

/// Report of [`verify_transform_bound`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub epsilon: f64,
    pub mc_n: usize,
    pub points: Vec<BoundPoint>,
    /// Smallest grid x from which every later conclusive point clears the
    /// bound by more than 3 binomial standard errors.
    pub holds_from: Option<f64>,
    pub verdict: BoundVerdict,
}

/// Check P(g(X₁..Xₙ) > x) ≤ P(X₁ > g_d⁻¹(x))^(1−ε) by simulation.
///
/// The bound is an eventual statement, so early grid points may fail it
/// legitimately; `violated` is raised only when the failure persists at
/// the top of the conclusive range. Points with fewer than 10 exceedances
/// are marked inconclusive and carry no evidence either way.
pub fn verify_transform_bound(
    t: &TransformSpec,
    model: &TailModel,
    epsilon: f64,
    mc_n: usize,
    grid: &EvalGrid,
    src: RandomSource,
) -> Result<BoundReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if mc_n < 100_000 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100000 transform draws, got {mc_n}"
        )));
    }
    if matches!(model, TailModel::OscillatingDiscrete { .. }) {
        return Err(Error::InvalidParameter(
            "bound verification needs a continuous base distribution".into(),
        ));
    }
    let draws = model.sample_stream(t.arity * mc_n, src)?;
    let mut transformed: Vec<f64> = draws
        .chunks_exact(t.arity)
        .map(|row| t.apply(row))
        .collect::<Result<_>>()?;
    transformed.sort_unstable_by(f64::total_cmp);

    let n = mc_n as f64;
    let mut points = Vec::with_capacity(grid.len());
    for &x in grid.points() {
        let exceedances = transformed.len() - transformed.partition_point(|v| *v <= x);
        let empirical = exceedances as f64 / n;
        let bound = model.tail(t.diagonal_inverse.eval(x))?.powf(1.0 - epsilon);
        points.push(BoundPoint {
            x,
            empirical,
            bound,
            margin: bound - empirical,
            std_error: (empirical * (1.0 - empirical) / n).sqrt(),
            exceedances,
            conclusive: exceedances >= MIN_EXCEEDANCES,
        });
    }

    let mut holds_from = None;
    let mut breaker: Option<&BoundPoint> = None;
    for p in points.iter().rev() {
        if !p.conclusive {
            continue;
        }
        if p.margin > 3.0 * p.std_error {
            holds_from = Some(p.x);
        } else {
            breaker = Some(p);
            break;
        }
    }
    let verdict = match breaker {
        // statistically solid failure at the top of the conclusive range
        Some(p) if holds_from.is_none() && -p.margin > 3.0 * p.std_error => {
            BoundVerdict::Violated {
                x: p.x,
                margin: p.margin,
            }
        }
        _ => BoundVerdict::Consistent,
    };
    Ok(BoundReport {
        epsilon,
        mc_n,
        points,
        holds_from,
        verdict,
    })
}

// ---------- discounted products ----------

/// Scale of the discounted sum 1 + A₁ + A₁A₂ + ... + A₁···A_{n−1} for
/// IID positive continuous Aᵢ with hazard scale `h_a`: the heaviest
/// summand is the full product, so the scale is x ↦ h_a(x^(1/(n−1))),
/// tabulated exactly at the transformed knots.
pub fn discounted_scale(h_a: &ScaleFunction, n: usize) -> Result<ScaleFunction> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "discounted scale is defined for n >= 3, got {n}"
        )));
    }
    let m = (n - 1) as i32;
    let knots: Vec<f64> = h_a.knots().iter().map(|k| k.powi(m)).collect();
    let last = h_a.last_knot();
    // continuation derivative of h_a(x^(1/m)) at the last knot image
    let slope = h_a.final_slope() / (m as f64 * last.powi(m - 1));
    ScaleFunction::with_slope(knots, h_a.values().to_vec(), slope)
}

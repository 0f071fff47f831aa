//! Monte Carlo engines for composite processes: IID sums and products,
//! power products, discounted sums and their running maxima.
//!
//! Streams are split deterministically from the caller's seed: the
//! discount sequence (A) draws from split index 0 and the flow sequence
//! (B) from split index 1, with realization i consuming consecutive
//! blocks of each stream. This layout is part of the reproducibility
//! contract: identical spec and seed give the identical sample.
//!
//! Realizations can overflow for heavy discount factors over long
//! horizons; those are clamped to a large finite cap and counted rather
//! than aborting the run, since tail diagnostics must know how many
//! points were censored.

use crate::dist::TailModel;
use crate::empirical::{empirical_hazard, EvalGrid, SampleSet};
use crate::error::{Error, Result};
use crate::indices::{h_order, HazardSource, LiminfEstimate};
use crate::rng::RandomSource;
use crate::scale::{check_subadditive_product, check_subadditive_sum, ScaleFunction, SubadditivityVerdict};
use serde::{Deserialize, Serialize};

/// Realizations above this cap are censored and counted.
pub const OVERFLOW_CLAMP: f64 = 1e300;

/// Exceedance floor for empirical hazards built inside this module.
const MIN_RULE_K_MIN: usize = 20;

/// Composite process families.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    IidSum,
    IidProduct,
    PowerProduct,
    DiscountedSum,
    RunningMaxDiscounted,
}

/// A simulable process over a horizon of n steps. The flow variable B
/// drives the single-sequence kinds; the discount variable A enters only
/// the discounted kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    pub n: usize,
    pub a_model: TailModel,
    pub b_model: TailModel,
    /// Power-product exponents, one per factor; unused otherwise.
    pub weights: Option<Vec<f64>>,
}

impl ProcessSpec {
    /// B₁ + ... + Bₙ.
    pub fn iid_sum(b_model: TailModel, n: usize) -> Self {
        ProcessSpec {
            kind: ProcessKind::IidSum,
            n,
            a_model: TailModel::point_mass(1.0),
            b_model,
            weights: None,
        }
    }

    /// B₁ ··· Bₙ.
    pub fn iid_product(b_model: TailModel, n: usize) -> Self {
        ProcessSpec {
            kind: ProcessKind::IidProduct,
            n,
            a_model: TailModel::point_mass(1.0),
            b_model,
            weights: None,
        }
    }

    /// B₁^w₁ ··· Bₙ^wₙ with wᵢ ≥ 0 and Σwᵢ = 1.
    pub fn power_product(b_model: TailModel, weights: Vec<f64>) -> Self {
        ProcessSpec {
            kind: ProcessKind::PowerProduct,
            n: weights.len(),
            a_model: TailModel::point_mass(1.0),
            b_model,
            weights: Some(weights),
        }
    }

    /// Yₙ = B₁ + A₁B₂ + A₁A₂B₃ + ... + A₁···A₍ₙ₋₁₎Bₙ.
    pub fn discounted_sum(a_model: TailModel, b_model: TailModel, n: usize) -> Self {
        ProcessSpec {
            kind: ProcessKind::DiscountedSum,
            n,
            a_model,
            b_model,
            weights: None,
        }
    }

    /// Ȳₙ = max(Y₁, ..., Yₙ), realized through the recursion
    /// U₀ = 0, U₍ₖ₊₁₎ = B₍ₖ₊₁₎ + A₍ₖ₊₁₎Uₖ with Ȳₙ =d Uₙ.
    pub fn running_max(a_model: TailModel, b_model: TailModel, n: usize) -> Self {
        ProcessSpec {
            kind: ProcessKind::RunningMaxDiscounted,
            n,
            a_model,
            b_model,
            weights: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParameter(
                "process horizon must be at least 1".into(),
            ));
        }
        self.a_model.validate()?;
        self.b_model.validate()?;
        match (&self.kind, &self.weights) {
            (ProcessKind::PowerProduct, Some(w)) => {
                if w.len() != self.n {
                    return Err(Error::InvalidParameter(format!(
                        "{} weights for horizon {}",
                        w.len(),
                        self.n
                    )));
                }
                if w.iter().any(|a| !a.is_finite() || *a < 0.0) {
                    return Err(Error::InvalidParameter(
                        "power-product weights must be finite and nonnegative".into(),
                    ));
                }
                let total: f64 = w.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "power-product weights must sum to 1, got {total}"
                    )));
                }
            }
            (ProcessKind::PowerProduct, None) => {
                return Err(Error::InvalidParameter(
                    "power product needs a weight vector".into(),
                ));
            }
            (_, Some(_)) => {
                return Err(Error::InvalidParameter(
                    "weights are only meaningful for power products".into(),
                ));
            }
            _ => {}
        }
        // the unit-flow discounted construction is stated for n >= 3
        let discounted = matches!(
            self.kind,
            ProcessKind::DiscountedSum | ProcessKind::RunningMaxDiscounted
        );
        if discounted && self.b_model == TailModel::point_mass(1.0) && self.n < 3 {
            return Err(Error::InvalidParameter(format!(
                "constant unit flows need a horizon of at least 3, got {}",
                self.n
            )));
        }
        Ok(())
    }
}

/// A simulated sample plus the number of realizations censored at the
/// overflow cap.
#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub sample: SampleSet,
    pub clamped: usize,
}

fn clamp_overflow(values: &mut [f64]) -> usize {
    let mut clamped = 0;
    for v in values.iter_mut() {
        if !(*v <= OVERFLOW_CLAMP) {
            *v = OVERFLOW_CLAMP;
            clamped += 1;
        }
    }
    clamped
}

/// Draw mc_n independent realizations of the spec's terminal variable.
/// Output is sorted; overflowed realizations are clamped and counted.
pub fn simulate_process(
    spec: &ProcessSpec,
    mc_n: usize,
    src: RandomSource,
) -> Result<SimulationResult> {
    spec.validate()?;
    if mc_n < 1_000 {
        return Err(Error::InvalidParameter(format!(
            "need at least 1000 realizations, got {mc_n}"
        )));
    }
    let n = spec.n;
    let mut values: Vec<f64> = match spec.kind {
        ProcessKind::IidSum => {
            let b = spec.b_model.sample_stream(n * mc_n, src.split(1))?;
            b.chunks_exact(n).map(|row| row.iter().sum()).collect()
        }
        ProcessKind::IidProduct => {
            let b = spec.b_model.sample_stream(n * mc_n, src.split(1))?;
            b.chunks_exact(n).map(|row| row.iter().product()).collect()
        }
        ProcessKind::PowerProduct => {
            let w = spec.weights.as_ref().expect("validated above");
            let b = spec.b_model.sample_stream(n * mc_n, src.split(1))?;
            b.chunks_exact(n)
                .map(|row| {
                    row.iter()
                        .zip(w)
                        .map(|(x, a)| x.powf(*a))
                        .product()
                })
                .collect()
        }
        ProcessKind::DiscountedSum => {
            let b = spec.b_model.sample_stream(n * mc_n, src.split(1))?;
            let a = if n > 1 {
                spec.a_model.sample_stream((n - 1) * mc_n, src.split(0))?
            } else {
                Vec::new()
            };
            (0..mc_n)
                .map(|i| {
                    let bs = &b[i * n..(i + 1) * n];
                    let ds = &a[i * (n - 1)..(i + 1) * (n - 1)];
                    let mut disc = 1.0;
                    let mut y = bs[0];
                    for j in 1..n {
                        disc *= ds[j - 1];
                        y += disc * bs[j];
                    }
                    y
                })
                .collect()
        }
        ProcessKind::RunningMaxDiscounted => {
            let b = spec.b_model.sample_stream(n * mc_n, src.split(1))?;
            let a = spec.a_model.sample_stream(n * mc_n, src.split(0))?;
            (0..mc_n)
                .map(|i| {
                    let bs = &b[i * n..(i + 1) * n];
                    let ds = &a[i * n..(i + 1) * n];
                    let mut u = 0.0;
                    for j in 0..n {
                        u = bs[j] + ds[j] * u;
                    }
                    u
                })
                .collect()
        }
    };
    let clamped = clamp_overflow(&mut values);
    let provenance = format!(
        "simulated {:?} n={} mc_n={} seed={} clamped={}",
        spec.kind, spec.n, mc_n, src.seed, clamped
    );
    Ok(SimulationResult {
        sample: SampleSet::from_values(values, provenance)?,
        clamped,
    })
}

// ---------- min-rule verification ----------

/// Which combination the min rule is tested on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinRuleKind {
    /// A + B under a sum-subadditive scale.
    Sum,
    /// A · B under a product-subadditive scale.
    Product,
    /// Running max of the discounted sum over n steps; needs both gates.
    RunningMax { n: usize },
}

/// Comparison of the h-order of a simulated combination against the
/// minimum of the individual analytic h-orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinRuleReport {
    pub rule: MinRuleKind,
    /// Empirical h-order of the combination, restricted to the trusted
    /// range of the simulated sample.
    pub combined: LiminfEstimate,
    /// Analytic h-orders of the two inputs on the full grid.
    pub individual: Vec<LiminfEstimate>,
    pub expected_min: f64,
    /// combined minus expected, signed.
    pub margin: f64,
}

fn gate_sum(h: &ScaleFunction) -> Result<()> {
    match check_subadditive_sum(h, 256).expect("probe count is fixed above the minimum") {
        SubadditivityVerdict::Holds => Ok(()),
        SubadditivityVerdict::Fails { witness } => Err(Error::HypothesisFailed {
            reason: "scale is not sum-subadditive; the sum rule does not apply".into(),
            witness: Some(witness),
        }),
    }
}

fn gate_product(h: &ScaleFunction) -> Result<()> {
    match check_subadditive_product(h, 256).expect("probe count is fixed above the minimum") {
        SubadditivityVerdict::Holds => Ok(()),
        SubadditivityVerdict::Fails { witness } => Err(Error::HypothesisFailed {
            reason: "scale is not product-subadditive; the product rule does not apply".into(),
            witness: Some(witness),
        }),
    }
}

/// Check 𝕀_h(combination) = min(𝕀_h(A), 𝕀_h(B)) by simulation.
///
/// Refuses to run when the scale fails the subadditivity gate of the
/// requested rule; the running-max rule needs both gates. The combined
/// estimate uses the caller's grid clipped to the range where the
/// simulated sample keeps at least 20 exceedances per point.
pub fn verify_min_rule(
    a: &TailModel,
    b: &TailModel,
    h: &ScaleFunction,
    rule: MinRuleKind,
    mc_n: usize,
    grid: &EvalGrid,
    window: f64,
    src: RandomSource,
) -> Result<MinRuleReport> {
    match rule {
        MinRuleKind::Sum => gate_sum(h)?,
        MinRuleKind::Product => gate_product(h)?,
        MinRuleKind::RunningMax { .. } => {
            gate_sum(h)?;
            gate_product(h)?;
        }
    }
    if mc_n < 10_000 {
        return Err(Error::InvalidParameter(format!(
            "need at least 10000 realizations, got {mc_n}"
        )));
    }

    let values: Vec<f64> = match rule {
        MinRuleKind::Sum | MinRuleKind::Product => {
            let xs = a.sample_stream(mc_n, src.split(0))?;
            let ys = b.sample_stream(mc_n, src.split(1))?;
            match rule {
                MinRuleKind::Sum => xs.iter().zip(&ys).map(|(x, y)| x + y).collect(),
                _ => xs.iter().zip(&ys).map(|(x, y)| x * y).collect(),
            }
        }
        MinRuleKind::RunningMax { n } => {
            let spec = ProcessSpec::running_max(a.clone(), b.clone(), n);
            let sim = simulate_process(&spec, mc_n, src)?;
            return finish_min_rule(rule, a, b, h, sim.sample, grid, window);
        }
    };
    let mut values = values;
    clamp_overflow(&mut values);
    let sample = SampleSet::from_values(values, "min-rule combination")?;
    finish_min_rule(rule, a, b, h, sample, grid, window)
}

fn finish_min_rule(
    rule: MinRuleKind,
    a: &TailModel,
    b: &TailModel,
    h: &ScaleFunction,
    sample: SampleSet,
    grid: &EvalGrid,
    window: f64,
) -> Result<MinRuleReport> {
    let emp = empirical_hazard(&sample, grid, MIN_RULE_K_MIN)?;
    let trusted = EvalGrid::new(grid.policy.x_min, emp.effective_max, grid.policy.ratio)?;
    let combined = h_order(&HazardSource::Empirical(emp), h, &trusted, window)?;
    let individual = vec![
        h_order(&HazardSource::Analytic(a.clone()), h, grid, window)?,
        h_order(&HazardSource::Analytic(b.clone()), h, grid, window)?,
    ];
    let expected_min = individual
        .iter()
        .map(|e| e.value)
        .fold(f64::INFINITY, f64::min);
    let margin = combined.value - expected_min;
    Ok(MinRuleReport {
        rule,
        combined,
        individual,
        expected_min,
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weibull(lambda: f64, alpha: f64) -> TailModel {
        TailModel::Weibull { lambda, alpha }
    }

    fn ks_distance_to_cdf(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
        let n = sorted.len() as f64;
        let mut d: f64 = 0.0;
        for (i, &v) in sorted.iter().enumerate() {
            let f = cdf(v);
            d = d.max((f - i as f64 / n).abs());
            d = d.max(((i + 1) as f64 / n - f).abs());
        }
        d
    }

    fn two_sample_ks(a: &[f64], b: &[f64]) -> f64 {
        // both sorted; sweep the pooled points
        let mut d: f64 = 0.0;
        let (mut i, mut j) = (0usize, 0usize);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            let fa = i as f64 / a.len() as f64;
            let fb = j as f64 / b.len() as f64;
            d = d.max((fa - fb).abs());
        }
        d
    }

    // -- simulate_process basics --

    #[test]
    fn sum_of_one_matches_the_base_model() {
        let m = weibull(1.0, 0.5);
        let spec = ProcessSpec::iid_sum(m.clone(), 1);
        let sim = simulate_process(&spec, 100_000, RandomSource::new(50)).unwrap();
        assert_eq!(sim.clamped, 0);
        let d = ks_distance_to_cdf(sim.sample.values(), |x| 1.0 - m.tail(x).unwrap());
        assert!(d <= 1.63 / (100_000f64).sqrt(), "KS distance {d}");
    }

    #[test]
    fn zero_discount_collapses_to_the_first_flow() {
        let spec = ProcessSpec::discounted_sum(
            TailModel::point_mass(0.0),
            TailModel::Exponential { lambda: 1.0 },
            5,
        );
        let sim = simulate_process(&spec, 2_000, RandomSource::new(51)).unwrap();
        // Yₙ = B₁ exactly: compare with the B stream it consumed
        let b = TailModel::Exponential { lambda: 1.0 }
            .sample_stream(5 * 2_000, RandomSource::new(51).split(1))
            .unwrap();
        let mut first: Vec<f64> = b.chunks_exact(5).map(|r| r[0]).collect();
        first.sort_unstable_by(f64::total_cmp);
        assert_eq!(sim.sample.values(), first.as_slice());
    }

    #[test]
    fn degenerate_power_product_weight_is_the_base_draw() {
        let m = TailModel::Pareto {
            alpha: 2.0,
            x_m: 1.0,
        };
        let spec = ProcessSpec::power_product(m.clone(), vec![1.0, 0.0, 0.0]);
        let sim = simulate_process(&spec, 2_000, RandomSource::new(52)).unwrap();
        let b = m
            .sample_stream(3 * 2_000, RandomSource::new(52).split(1))
            .unwrap();
        let mut first: Vec<f64> = b.chunks_exact(3).map(|r| r[0]).collect();
        first.sort_unstable_by(f64::total_cmp);
        assert_eq!(sim.sample.values(), first.as_slice());
    }

    #[test]
    fn horizon_one_discounted_sum_is_the_flow_variable() {
        let m = weibull(1.0, 0.5);
        let spec = ProcessSpec::discounted_sum(TailModel::point_mass(0.5), m.clone(), 1);
        let sim = simulate_process(&spec, 50_000, RandomSource::new(53)).unwrap();
        let d = ks_distance_to_cdf(sim.sample.values(), |x| 1.0 - m.tail(x).unwrap());
        assert!(d <= 1.63 / (50_000f64).sqrt(), "KS distance {d}");
    }

    #[test]
    fn identical_seed_reproduces_the_sample() {
        let spec = ProcessSpec::running_max(
            TailModel::Pareto {
                alpha: 3.0,
                x_m: 1.0,
            },
            weibull(1.0, 0.5),
            6,
        );
        let s1 = simulate_process(&spec, 5_000, RandomSource::new(54)).unwrap();
        let s2 = simulate_process(&spec, 5_000, RandomSource::new(54)).unwrap();
        assert_eq!(s1.sample.values(), s2.sample.values());
        let s3 = simulate_process(&spec, 5_000, RandomSource::new(55)).unwrap();
        assert_ne!(s1.sample.values(), s3.sample.values());
    }

    #[test]
    fn running_max_recursion_matches_direct_path_maximum() {
        let a = TailModel::Pareto {
            alpha: 4.0,
            x_m: 0.5,
        };
        let b = weibull(1.0, 0.5);
        let n = 5usize;
        let mc = 100_000usize;
        let spec = ProcessSpec::running_max(a.clone(), b.clone(), n);
        let rec = simulate_process(&spec, mc, RandomSource::new(56)).unwrap();

        // direct: track every partial sum Y_k and its running max
        let bs = b.sample_stream(n * mc, RandomSource::new(57).split(1)).unwrap();
        let as_ = a.sample_stream((n - 1) * mc, RandomSource::new(57).split(0)).unwrap();
        let mut direct: Vec<f64> = (0..mc)
            .map(|i| {
                let brow = &bs[i * n..(i + 1) * n];
                let arow = &as_[i * (n - 1)..(i + 1) * (n - 1)];
                let mut disc = 1.0;
                let mut y = brow[0];
                let mut best = y;
                for j in 1..n {
                    disc *= arow[j - 1];
                    y += disc * brow[j];
                    best = best.max(y);
                }
                best
            })
            .collect();
        direct.sort_unstable_by(f64::total_cmp);

        let d = two_sample_ks(rec.sample.values(), &direct);
        let bound = 1.63 * (2.0 / mc as f64).sqrt();
        assert!(d <= bound, "two-sample KS {d} > {bound}");
    }

    #[test]
    fn heavy_discounts_over_long_horizons_clamp_and_report() {
        let spec = ProcessSpec::discounted_sum(
            TailModel::Pareto {
                alpha: 0.1,
                x_m: 1.0,
            },
            TailModel::Exponential { lambda: 1.0 },
            300,
        );
        let sim = simulate_process(&spec, 1_000, RandomSource::new(58)).unwrap();
        assert!(sim.clamped > 0);
        assert!(sim.sample.max() == OVERFLOW_CLAMP);
        assert!(sim.sample.provenance.contains(&format!("clamped={}", sim.clamped)));
    }

    #[test]
    fn spec_validation_rejects_bad_inputs() {
        let m = weibull(1.0, 0.5);
        assert!(ProcessSpec::iid_sum(m.clone(), 0).validate().is_err());
        assert!(ProcessSpec::power_product(m.clone(), vec![0.5, 0.6])
            .validate()
            .is_err());
        assert!(ProcessSpec::power_product(m.clone(), vec![]).validate().is_err());
        // unit flows need n >= 3
        let unit = ProcessSpec::discounted_sum(m.clone(), TailModel::point_mass(1.0), 2);
        assert!(unit.validate().is_err());
        let ok = ProcessSpec::discounted_sum(m.clone(), TailModel::point_mass(1.0), 3);
        assert!(ok.validate().is_ok());
        // weights on a non-power-product kind
        let mut stray = ProcessSpec::iid_sum(m, 2);
        stray.weights = Some(vec![0.5, 0.5]);
        assert!(stray.validate().is_err());
    }

    #[test]
    fn process_spec_serde_roundtrip() {
        let spec = ProcessSpec::power_product(weibull(1.0, 0.5), vec![0.25, 0.75]);
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"kind\":\"power_product\""));
        let back: ProcessSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn unit_flow_discounted_sum_has_composed_scale_order() {
        // Y₄ = 1 + A₁ + A₁A₂ + A₁A₂A₃ with Weibull discounts: the scale
        // of the dominant product term is h_A(x^(1/3)) = x^(1/6), and the
        // order under it sits within the undetermined-constant band.
        let a = weibull(1.0, 0.5);
        let spec = ProcessSpec::discounted_sum(a, TailModel::point_mass(1.0), 4);
        let sim = simulate_process(&spec, 1_000_000, RandomSource::new(59)).unwrap();
        assert_eq!(sim.clamped, 0);
        let g = EvalGrid::default_for_sample(&sim.sample, 20).unwrap();
        let emp = empirical_hazard(&sim.sample, &g, 20).unwrap();
        let h = ScaleFunction::sampled(0.0, |x| x.powf(1.0 / 6.0), &g).unwrap();
        let est = h_order(&HazardSource::Empirical(emp), &h, &g, 0.5).unwrap();
        assert!(
            est.value >= 0.5 && est.value <= 2.5,
            "discounted order = {}",
            est.value
        );
    }

    // -- verify_min_rule --

    #[test]
    fn identical_weibull_sum_degenerates_to_single_order() {
        // P(X+Y > x) is 2·exp(-sqrt(x)) to first order, so the combined
        // ratio runs (sqrt(x) - log 2)/sqrt(x); the window has to sit deep
        // enough that the log 2 transient stays inside the tolerance
        let m = weibull(1.0, 0.5);
        let g = EvalGrid::new(4.0, 400.0, 1.05).unwrap();
        let h = ScaleFunction::sampled(0.0, |x| x.powf(0.5), &g).unwrap();
        let rep = verify_min_rule(
            &m,
            &m,
            &h,
            MinRuleKind::Sum,
            1_000_000,
            &g,
            0.25,
            RandomSource::new(60),
        )
        .unwrap();
        assert_eq!(rep.expected_min, 1.0);
        assert!(
            rep.margin.abs() <= 0.2,
            "sum order = {} vs min = {}",
            rep.combined.value,
            rep.expected_min
        );
    }

    #[test]
    fn pareto_product_under_log_scale_matches_min_order() {
        // P(XY > x) behaves like E[Y^2]·x^{-2} when Y's exponent exceeds
        // X's, so the heavier factor's order survives the product
        let a = TailModel::Pareto {
            alpha: 2.0,
            x_m: 1.0,
        };
        let b = TailModel::Pareto {
            alpha: 6.0,
            x_m: 1.0,
        };
        let g = EvalGrid::new(4.0, 2_000.0, 1.05).unwrap();
        let h = ScaleFunction::sampled(0.0, |x| (1.0 + x).ln(), &g).unwrap();
        let rep = verify_min_rule(
            &a,
            &b,
            &h,
            MinRuleKind::Product,
            1_000_000,
            &g,
            0.5,
            RandomSource::new(61),
        )
        .unwrap();
        assert!(
            (rep.expected_min - 2.0).abs() <= 0.05,
            "expected min = {}",
            rep.expected_min
        );
        assert!(
            rep.margin.abs() <= 0.3,
            "product order = {} vs min = {}",
            rep.combined.value,
            rep.expected_min
        );
    }

    #[test]
    fn weibull_product_under_weibull_scale_is_refused() {
        let m = weibull(1.0, 0.5);
        let g = EvalGrid::new(1.0, 1e4, 1.1).unwrap();
        let h = ScaleFunction::sampled(0.0, |x| x.powf(0.5), &g).unwrap();
        let err = verify_min_rule(
            &m,
            &m,
            &h,
            MinRuleKind::Product,
            100_000,
            &g,
            0.5,
            RandomSource::new(62),
        )
        .unwrap_err();
        match err {
            Error::HypothesisFailed { witness, .. } => {
                let (a, b) = witness.unwrap();
                assert!(h.eval(a * b) > h.eval(a) + h.eval(b));
            }
            other => panic!("expected a gate refusal, got {other:?}"),
        }
    }

    #[test]
    fn squared_log_scale_is_refused_for_products() {
        // h(ab) = (log ab)² exceeds h(a) + h(b): the cross term breaks
        // product subadditivity however slowly the scale grows
        let g = EvalGrid::new(1.5, 1e8, 1.05).unwrap();
        let h = ScaleFunction::sampled(0.0, |x| x.ln().powi(2), &g).unwrap();
        let lnt = TailModel::LogNormalType {
            c: 1.2,
            beta: 0.5,
            lambda: 1.0,
            gamma: 2.0,
        };
        let err = verify_min_rule(
            &lnt,
            &lnt,
            &h,
            MinRuleKind::Product,
            100_000,
            &g,
            0.5,
            RandomSource::new(63),
        )
        .unwrap_err();
        assert!(matches!(err, Error::HypothesisFailed { .. }));
    }

    #[test]
    fn log_normal_type_product_order_is_one_half_not_one() {
        // the refusal above is substantive: in log space the product is a
        // sum of two near-Gaussian tails whose exceedances split evenly,
        // so R(x) grows like (log x)^2/2 - beta·log x - log log x and the
        // order under (log x)^2 is 1/2, not the min rule's 1. beta is set
        // to cancel most of the finite-depth transient.
        let lnt = TailModel::LogNormalType {
            c: 1.2,
            beta: -0.45,
            lambda: 1.0,
            gamma: 2.0,
        };
        let draws = lnt.sample_stream(2_000_000, RandomSource::new(64)).unwrap();
        let prods: Vec<f64> = draws.chunks_exact(2).map(|r| r[0] * r[1]).collect();
        let sample = SampleSet::from_values(prods, "lnt products").unwrap();
        let g = EvalGrid::default_for_sample(&sample, 20).unwrap();
        let emp = empirical_hazard(&sample, &g, 20).unwrap();
        let h = ScaleFunction::sampled(0.0, |x| x.ln().powi(2), &g).unwrap();
        let est = h_order(&HazardSource::Empirical(emp), &h, &g, 0.5).unwrap();
        assert!(
            (est.value - 0.5).abs() <= 0.15,
            "product order = {}",
            est.value
        );
    }

    #[test]
    fn running_max_order_is_min_of_discount_and_flow() {
        // contracting discounts (E[A^2] < 1) keep the recursion stable, so
        // the running maximum inherits the flow variable's tail: the
        // largest single flow dominates every later discounted echo
        let a = TailModel::Pareto {
            alpha: 3.0,
            x_m: 0.25,
        };
        let b = TailModel::Pareto {
            alpha: 2.0,
            x_m: 1.0,
        };
        let g = EvalGrid::new(4.0, 500.0, 1.05).unwrap();
        let h = ScaleFunction::sampled(0.0, |x| (1.0 + x).ln(), &g).unwrap();
        let rep = verify_min_rule(
            &a,
            &b,
            &h,
            MinRuleKind::RunningMax { n: 6 },
            300_000,
            &g,
            0.5,
            RandomSource::new(65),
        )
        .unwrap();
        assert!(
            (rep.expected_min - 2.0).abs() <= 0.05,
            "expected min = {}",
            rep.expected_min
        );
        assert!(
            rep.margin.abs() <= 0.3,
            "running-max order = {} vs min = {}",
            rep.combined.value,
            rep.expected_min
        );
    }
}

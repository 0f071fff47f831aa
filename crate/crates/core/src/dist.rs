//! Analytic tail models: exact tails, hazards, quantiles and sampling.
//!
//! Hazards are evaluated in closed form, so they stay exact far beyond the
//! point where the tail itself underflows to zero; a saturation error can
//! only arise for the discrete model, whose tail is exactly zero past the
//! last atom. All samplers are inverse-transform on a single uniform
//! stream, drawn through the chunked engine so results are bit-identical
//! across thread counts.

use crate::empirical::SampleSet;
use crate::error::{Error, Result};
use crate::rng::{chunked_collect, uniform_open01, RandomSource};
use crate::scale::ScaleFunction;
use serde::{Deserialize, Serialize};

/// Atom masses must sum to 1 within this absolute tolerance.
pub const MASS_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TailModel {
    /// F̄(x) = e^(−λxᵅ), stretched exponential with α in (0,1).
    Weibull { lambda: f64, alpha: f64 },
    /// F̄(x) = c·xᵝ·e^(−λ(log x)^γ) for x ≥ x₀, 1 below; γ > 1. The cutoff
    /// x₀ is the smallest point where the formula is ≤ 1 and non-increasing.
    LogNormalType {
        c: f64,
        beta: f64,
        lambda: f64,
        gamma: f64,
    },
    /// F̄(x) = (x_m/x)ᵅ for x ≥ x_m.
    Pareto { alpha: f64, x_m: f64 },
    /// F̄(x) = e^(−λx).
    Exponential { lambda: f64 },
    /// Finite list of (location, mass) atoms, strictly increasing
    /// locations, masses summing to 1.
    OscillatingDiscrete { atoms: Vec<(f64, f64)> },
}

impl TailModel {
    /// Degenerate distribution concentrated at one point, as a one-atom
    /// discrete model. Used for constant discount or flow sequences.
    pub fn point_mass(x: f64) -> TailModel {
        TailModel::OscillatingDiscrete {
            atoms: vec![(x, 1.0)],
        }
    }

    /// Largest x with P(X > x') = 1 for every x' < x: the point below
    /// which the tail formula is pinned at 1. Zero for the unbounded
    /// continuous families, the formula cutoff for the log-normal type,
    /// the scale floor for Pareto, the first atom for discrete models.
    pub fn support_floor(&self) -> f64 {
        match self {
            TailModel::Weibull { .. } | TailModel::Exponential { .. } => 0.0,
            TailModel::Pareto { x_m, .. } => *x_m,
            TailModel::LogNormalType {
                c,
                beta,
                lambda,
                gamma,
            } => lnt_cutoff_t(*c, *beta, *lambda, *gamma).exp(),
            TailModel::OscillatingDiscrete { atoms } => {
                atoms.first().map(|(loc, _)| *loc).unwrap_or(0.0)
            }
        }
    }

    /// Check parameter domains; every operation calls this first.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            TailModel::Weibull { lambda, alpha } => {
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return bad(format!("weibull lambda must be positive, got {lambda}"));
                }
                if !(alpha.is_finite() && *alpha > 0.0 && *alpha < 1.0) {
                    return bad(format!("weibull alpha must lie in (0,1), got {alpha}"));
                }
            }
            TailModel::LogNormalType {
                c,
                beta,
                lambda,
                gamma,
            } => {
                if !(c.is_finite() && *c > 0.0) {
                    return bad(format!("log-normal-type c must be positive, got {c}"));
                }
                if !beta.is_finite() {
                    return bad(format!("log-normal-type beta must be finite, got {beta}"));
                }
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return bad(format!(
                        "log-normal-type lambda must be positive, got {lambda}"
                    ));
                }
                if !(gamma.is_finite() && *gamma > 1.0) {
                    return bad(format!(
                        "log-normal-type gamma must exceed 1, got {gamma}"
                    ));
                }
            }
            TailModel::Pareto { alpha, x_m } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return bad(format!("pareto alpha must be positive, got {alpha}"));
                }
                if !(x_m.is_finite() && *x_m > 0.0) {
                    return bad(format!("pareto x_m must be positive, got {x_m}"));
                }
            }
            TailModel::Exponential { lambda } => {
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return bad(format!("exponential lambda must be positive, got {lambda}"));
                }
            }
            TailModel::OscillatingDiscrete { atoms } => {
                if atoms.is_empty() {
                    return bad("atom list must not be empty".into());
                }
                let mut sum = 0.0;
                let mut prev = f64::NEG_INFINITY;
                for &(loc, mass) in atoms {
                    if !(loc.is_finite() && loc >= 0.0 && loc > prev) {
                        return bad(format!(
                            "atom locations must be non-negative and strictly increasing, got {loc} after {prev}"
                        ));
                    }
                    if !(mass.is_finite() && mass > 0.0 && mass <= 1.0) {
                        return bad(format!("atom mass must lie in (0,1], got {mass}"));
                    }
                    prev = loc;
                    sum += mass;
                }
                if (sum - 1.0).abs() > MASS_SUM_TOL {
                    return bad(format!("atom masses sum to {sum}, not 1"));
                }
            }
        }
        Ok(())
    }

    /// P(X > x), exact per the model's closed form.
    pub fn tail(&self, x: f64) -> Result<f64> {
        self.validate()?;
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tail argument must be finite and non-negative, got {x}"
            )));
        }
        Ok(self.tail_raw(x))
    }

    fn tail_raw(&self, x: f64) -> f64 {
        match self {
            TailModel::Weibull { lambda, alpha } => (-lambda * x.powf(*alpha)).exp(),
            TailModel::LogNormalType {
                c,
                beta,
                lambda,
                gamma,
            } => {
                let t0 = lnt_cutoff_t(*c, *beta, *lambda, *gamma);
                if x < t0.exp() {
                    1.0
                } else {
                    lnt_log_tail(*c, *beta, *lambda, *gamma, x.ln()).exp().min(1.0)
                }
            }
            TailModel::Pareto { alpha, x_m } => {
                if x < *x_m {
                    1.0
                } else {
                    (x_m / x).powf(*alpha)
                }
            }
            TailModel::Exponential { lambda } => (-lambda * x).exp(),
            TailModel::OscillatingDiscrete { atoms } => atoms
                .iter()
                .rev()
                .take_while(|(loc, _)| *loc > x)
                .map(|(_, m)| m)
                .sum(),
        }
    }

    /// R(x) = −log P(X > x), evaluated in closed form.
    pub fn hazard(&self, x: f64) -> Result<f64> {
        self.validate()?;
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "hazard argument must be finite and non-negative, got {x}"
            )));
        }
        match self {
            TailModel::Weibull { lambda, alpha } => Ok(lambda * x.powf(*alpha)),
            TailModel::LogNormalType {
                c,
                beta,
                lambda,
                gamma,
            } => {
                let t0 = lnt_cutoff_t(*c, *beta, *lambda, *gamma);
                if x < t0.exp() {
                    Ok(0.0)
                } else {
                    Ok((-lnt_log_tail(*c, *beta, *lambda, *gamma, x.ln())).max(0.0))
                }
            }
            TailModel::Pareto { alpha, x_m } => {
                if x < *x_m {
                    Ok(0.0)
                } else {
                    Ok(alpha * (x / x_m).ln())
                }
            }
            TailModel::Exponential { lambda } => Ok(lambda * x),
            TailModel::OscillatingDiscrete { atoms } => {
                let t: f64 = self.tail_raw(x);
                if t > 0.0 {
                    Ok(-t.ln())
                } else {
                    let last_mass = atoms.last().unwrap().1;
                    Err(Error::HazardSaturated {
                        last_hazard: -last_mass.ln(),
                    })
                }
            }
        }
    }

    /// Generalized inverse: inf{x : F(x) ≥ u}, right-continuous.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        self.validate()?;
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quantile argument must lie in (0,1), got {u}"
            )));
        }
        Ok(self.quantile_raw(u))
    }

    fn quantile_raw(&self, u: f64) -> f64 {
        match self {
            TailModel::Weibull { lambda, alpha } => {
                (-(-u).ln_1p() / lambda).powf(1.0 / alpha)
            }
            TailModel::LogNormalType {
                c,
                beta,
                lambda,
                gamma,
            } => {
                let t0 = lnt_cutoff_t(*c, *beta, *lambda, *gamma);
                let target = (1.0 - u).ln();
                if lnt_log_tail(*c, *beta, *lambda, *gamma, t0) <= target {
                    return t0.exp(); // u within the cutoff atom (or exactly at it)
                }
                // log-tail is strictly decreasing beyond t0: bisect.
                let mut lo = t0;
                let mut hi = (t0.abs() + 1.0) * 2.0;
                while lnt_log_tail(*c, *beta, *lambda, *gamma, hi) > target {
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if lnt_log_tail(*c, *beta, *lambda, *gamma, mid) > target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi.exp()
            }
            TailModel::Pareto { alpha, x_m } => x_m * (1.0 - u).powf(-1.0 / alpha),
            TailModel::Exponential { lambda } => -(-u).ln_1p() / lambda,
            TailModel::OscillatingDiscrete { atoms } => {
                let mut cum = 0.0;
                for (i, &(loc, mass)) in atoms.iter().enumerate() {
                    cum += mass;
                    if u <= cum || i == atoms.len() - 1 {
                        return loc;
                    }
                }
                unreachable!("atom list is non-empty")
            }
        }
    }

    /// n inverse-transform draws in draw order, bit-identical for a given
    /// seed regardless of thread count.
    pub fn sample_stream(&self, n: usize, src: RandomSource) -> Result<Vec<f64>> {
        self.validate()?;
        if n == 0 {
            return Err(Error::InvalidParameter(
                "sample size must be at least 1".into(),
            ));
        }
        Ok(chunked_collect(n, src, |rng, _start, len| {
            (0..len)
                .map(|_| self.quantile_raw(uniform_open01(rng)))
                .collect()
        }))
    }

    /// Like [`sample_stream`](Self::sample_stream), but packaged as a
    /// sorted sample set.
    pub fn sample_n(&self, n: usize, src: RandomSource) -> Result<SampleSet> {
        let values = self.sample_stream(n, src)?;
        SampleSet::from_values(values, &format!("{self:?} n={n} seed={}", src.seed))
    }
}

/// log F̄ of the log-normal-type formula at t = log x.
fn lnt_log_tail(c: f64, beta: f64, lambda: f64, gamma: f64, t: f64) -> f64 {
    c.ln() + beta * t - lambda * t.powf(gamma)
}

/// t₀ = log x₀: smallest t ≥ 0 where the formula is non-increasing and ≤ 1.
fn lnt_cutoff_t(c: f64, beta: f64, lambda: f64, gamma: f64) -> f64 {
    // non-increasing in t from t_mono on: d/dt log F̄ = β − λγ t^(γ−1) ≤ 0
    let t_mono = if beta > 0.0 {
        (beta / (lambda * gamma)).powf(1.0 / (gamma - 1.0))
    } else {
        0.0
    };
    if lnt_log_tail(c, beta, lambda, gamma, t_mono) <= 0.0 {
        return t_mono;
    }
    // formula still exceeds 1 at t_mono: bisect the decreasing part to
    // the smallest t with log F̄ ≤ 0.
    let mut lo = t_mono;
    let mut hi = (t_mono.abs() + 1.0) * 2.0;
    while lnt_log_tail(c, beta, lambda, gamma, hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if lnt_log_tail(c, beta, lambda, gamma, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Discrete distribution whose hazard oscillates between h₂ and h₁.
///
/// Locations follow x₀ = 1, xₙ₊₁ = h₂⁻¹(h₁(xₙ)); the atom at xₙ carries
/// e^(−h₂(xₙ)) − e^(−h₁(xₙ)). The masses telescope to e^(−h₂(x₀)), so a
/// deficit atom below x₀ tops the total up to 1, and a final atom at the
/// truncation point x_N carries the residual e^(−h₂(x_N)). The resulting
/// hazard hits h₂(xₙ) just below each constructed atom and h₁(xₙ) at it.
pub fn build_oscillating(
    h1: &ScaleFunction,
    h2: &ScaleFunction,
    n_atoms: usize,
) -> Result<TailModel> {
    if n_atoms < 2 {
        return Err(Error::InvalidParameter(
            "need at least 2 oscillation atoms".into(),
        ));
    }
    for h in [h1, h2] {
        if !h.is_strictly_increasing() {
            return Err(Error::InvalidParameter(
                "both bounding functions must be strictly increasing".into(),
            ));
        }
    }
    if !h2.is_unbounded() {
        return Err(Error::NotAScaleFunction(
            "lower bounding function must tend to infinity".into(),
        ));
    }
    // strict ordering h₂ < h₁ on the union of knot sets
    for &x in h1.knots().iter().chain(h2.knots()).filter(|x| **x > 0.0) {
        if h2.eval(x) >= h1.eval(x) {
            return Err(Error::InvalidParameter(format!(
                "lower bounding function must stay strictly below the upper one; violated at x = {x}"
            )));
        }
    }

    let exhausted = |constructed: usize, reason: String| {
        Err(Error::RangeExhausted {
            constructed,
            reason,
        })
    };

    let mut atoms = Vec::with_capacity(n_atoms + 2);
    let deficit = -(-h2.eval(1.0)).exp_m1(); // 1 − e^(−h₂(x₀))
    if deficit > 0.0 {
        atoms.push((0.5, deficit));
    }
    let mut x = 1.0f64;
    for n in 0..n_atoms {
        let mass = (-h2.eval(x)).exp() - (-h1.eval(x)).exp();
        if !(mass > 0.0) {
            return exhausted(n, format!("atom mass underflowed at x = {x}"));
        }
        atoms.push((x, mass));
        let next = match h2.inverse(h1.eval(x)) {
            Ok(v) => v,
            Err(e) => {
                return exhausted(n + 1, format!("recursion left the invertible range: {e}"))
            }
        };
        if !next.is_finite() {
            return exhausted(n + 1, format!("location after x = {x} is not representable"));
        }
        if next <= x {
            return Err(Error::DegenerateHazard(format!(
                "recursion stalled at x = {x}: bounding functions too close"
            )));
        }
        x = next;
    }
    let tail_mass = (-h2.eval(x)).exp();
    if !(tail_mass > 0.0) {
        return exhausted(
            n_atoms,
            format!("residual mass underflowed at truncation point x = {x}"),
        );
    }
    atoms.push((x, tail_mass));

    let model = TailModel::OscillatingDiscrete { atoms };
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::EvalGrid;
    use std::f64::consts::E;

    fn weibull(lambda: f64, alpha: f64) -> TailModel {
        TailModel::Weibull { lambda, alpha }
    }

    fn lnt(c: f64, beta: f64, lambda: f64, gamma: f64) -> TailModel {
        TailModel::LogNormalType {
            c,
            beta,
            lambda,
            gamma,
        }
    }

    fn pareto(alpha: f64, x_m: f64) -> TailModel {
        TailModel::Pareto { alpha, x_m }
    }

    fn exponential(lambda: f64) -> TailModel {
        TailModel::Exponential { lambda }
    }

    // -- closed forms --

    #[test]
    fn tail_closed_forms() {
        assert!((weibull(1.0, 0.5).tail(4.0).unwrap() - (-2.0f64).exp()).abs() <= 1e-15);
        assert_eq!(pareto(2.0, 1.0).tail(1.0).unwrap(), 1.0);
        assert!((exponential(2.0).tail(3.0).unwrap() - (-6.0f64).exp()).abs() <= 1e-15);
    }

    #[test]
    fn hazard_closed_forms() {
        assert!((weibull(2.0, 0.5).hazard(9.0).unwrap() - 6.0).abs() <= 1e-12);
        assert!((pareto(3.0, 1.0).hazard(E).unwrap() - 3.0).abs() <= 1e-12);
        assert!((exponential(2.0).hazard(3.0).unwrap() - 6.0).abs() <= 1e-12);
    }

    #[test]
    fn hazard_stays_exact_where_tail_underflows() {
        // tail e^(−2e6) is far below the smallest subnormal, the closed
        // form is unaffected.
        let m = weibull(2.0, 0.5);
        assert_eq!(m.tail(1e12).unwrap(), 0.0);
        assert!((m.hazard(1e12).unwrap() - 2e6).abs() <= 1e-6);
    }

    #[test]
    fn parameter_domains_are_enforced() {
        assert!(weibull(0.0, 0.5).tail(1.0).is_err());
        assert!(weibull(1.0, 1.0).tail(1.0).is_err()); // alpha must be < 1
        assert!(lnt(1.0, 0.0, 1.0, 1.0).tail(1.0).is_err()); // gamma must exceed 1
        assert!(pareto(1.0, 0.0).tail(1.0).is_err());
        assert!(exponential(-1.0).tail(1.0).is_err());
        assert!(exponential(1.0).tail(-2.0).is_err());
        assert!(exponential(1.0).quantile(0.0).is_err());
        assert!(exponential(1.0).quantile(1.0).is_err());
        let unbalanced = TailModel::OscillatingDiscrete {
            atoms: vec![(1.0, 0.5), (2.0, 0.4)],
        };
        assert!(unbalanced.tail(0.5).is_err()); // masses sum to 0.9
    }

    // -- log-normal type cutoff --

    #[test]
    fn lnt_is_one_below_cutoff_and_decreasing_after() {
        let m = lnt(1.2, 0.5, 1.0, 2.0);
        let t0 = lnt_cutoff_t(1.2, 0.5, 1.0, 2.0);
        let x0 = t0.exp();
        // continuous at the cutoff: the formula equals 1 there
        assert!((m.tail(x0).unwrap() - 1.0).abs() <= 1e-9);
        assert_eq!(m.tail(x0 * 0.99).unwrap(), 1.0);
        assert_eq!(m.hazard(x0 * 0.99).unwrap(), 0.0);
        let mut prev = 1.0;
        for i in 0..200 {
            let x = x0 * 1.05f64.powi(i);
            let t = m.tail(x).unwrap();
            assert!(t <= prev + 1e-15, "tail increased at x = {x}");
            prev = t;
        }
    }

    #[test]
    fn lnt_monotonicity_cutoff_creates_an_atom() {
        // c < 1 with β = 0: formula ≤ 1 from t = 0 on, cutoff at x = 1,
        // atom of mass 1 − c there.
        let m = lnt(0.5, 0.0, 1.0, 2.0);
        assert_eq!(m.tail(0.999).unwrap(), 1.0);
        assert!((m.tail(1.0).unwrap() - 0.5).abs() <= 1e-15);
        // quantile lands on the atom for u inside its mass
        assert!((m.quantile(0.3).unwrap() - 1.0).abs() <= 1e-12);
        // beyond the atom the tail is continuous again
        let x = m.quantile(0.7).unwrap();
        assert!((m.tail(x).unwrap() - 0.3).abs() <= 1e-9);
    }

    #[test]
    fn support_floor_marks_where_the_tail_leaves_one() {
        assert_eq!(weibull(1.0, 0.5).support_floor(), 0.0);
        assert_eq!(exponential(2.0).support_floor(), 0.0);
        assert_eq!(pareto(2.0, 3.0).support_floor(), 3.0);
        let m = lnt(1.2, 0.5, 1.0, 2.0);
        let x0 = m.support_floor();
        assert_eq!(m.tail(x0 * 0.999).unwrap(), 1.0);
        assert!(m.tail(x0 * 1.01).unwrap() < 1.0);
        let d = TailModel::OscillatingDiscrete {
            atoms: vec![(1.5, 0.7), (4.0, 0.3)],
        };
        assert_eq!(d.support_floor(), 1.5);
    }

    #[test]
    fn lnt_hazard_matches_minus_log_tail_in_overlap() {
        let m = lnt(1.2, 0.5, 1.0, 2.0);
        for x in [2.0, 5.0, 20.0, 100.0, 1e4] {
            let t = m.tail(x).unwrap();
            if t > 1e-300 && t < 1.0 {
                let r = m.hazard(x).unwrap();
                assert!(
                    (r - (-t.ln())).abs() <= 1e-9 * r.max(1.0),
                    "hazard mismatch at x = {x}"
                );
            }
        }
    }

    // -- quantiles --

    #[test]
    fn quantile_closed_form_examples() {
        let u = 1.0 - (-1.0f64).exp();
        assert!((exponential(1.0).quantile(u).unwrap() - 1.0).abs() <= 1e-12);
        let u = 1.0 - (-2.0f64).exp();
        assert!((weibull(1.0, 0.5).quantile(u).unwrap() - 4.0).abs() <= 1e-11);
    }

    #[test]
    fn tail_quantile_roundtrip_on_continuous_models() {
        let models = [
            exponential(2.0),
            weibull(1.0, 0.5),
            weibull(2.5, 0.8),
            pareto(2.0, 1.0),
            pareto(0.5, 3.0),
            lnt(1.2, 0.5, 1.0, 2.0),
            lnt(1.0, -1.0, 0.5, 3.0),
        ];
        for m in &models {
            for i in 1..100 {
                let u = i as f64 / 100.0;
                let x = m.quantile(u).unwrap();
                let t = m.tail(x).unwrap();
                assert!(
                    (t - (1.0 - u)).abs() <= 1e-9,
                    "roundtrip off for {m:?} at u = {u}: tail = {t}"
                );
            }
        }
    }

    #[test]
    fn quantile_of_discrete_walks_the_atoms() {
        let m = TailModel::OscillatingDiscrete {
            atoms: vec![(1.0, 0.25), (2.0, 0.5), (4.0, 0.25)],
        };
        assert_eq!(m.quantile(0.1).unwrap(), 1.0);
        assert_eq!(m.quantile(0.25).unwrap(), 1.0);
        assert_eq!(m.quantile(0.26).unwrap(), 2.0);
        assert_eq!(m.quantile(0.75).unwrap(), 2.0);
        assert_eq!(m.quantile(0.9999).unwrap(), 4.0);
        // tail/quantile consistency: tail(quantile(u)) ≤ 1 − u
        for i in 1..100 {
            let u = i as f64 / 100.0;
            let x = m.quantile(u).unwrap();
            assert!(m.tail(x).unwrap() <= 1.0 - u + 1e-12);
        }
    }

    // -- monotonicity across the catalogue --

    #[test]
    fn tails_decrease_and_hazards_increase() {
        let models = [
            exponential(1.0),
            weibull(1.0, 0.3),
            pareto(2.5, 0.5),
            lnt(1.2, 0.5, 1.0, 2.0),
            TailModel::OscillatingDiscrete {
                atoms: vec![(0.5, 0.5), (1.0, 0.25), (3.0, 0.125), (9.0, 0.125)],
            },
        ];
        for m in &models {
            let mut prev_t = 1.0f64;
            let mut prev_r = 0.0f64;
            for i in 0..300 {
                let x = 0.01 * 1.05f64.powi(i);
                let t = m.tail(x).unwrap();
                assert!(t <= prev_t + 1e-15, "{m:?}: tail rose at x = {x}");
                prev_t = t;
                match m.hazard(x) {
                    Ok(r) => {
                        assert!(r >= prev_r - 1e-12, "{m:?}: hazard fell at x = {x}");
                        assert!(r >= 0.0);
                        prev_r = r;
                    }
                    Err(Error::HazardSaturated { last_hazard }) => {
                        assert!(last_hazard >= prev_r - 1e-12);
                    }
                    Err(e) => panic!("unexpected error {e}"),
                }
            }
        }
    }

    #[test]
    fn discrete_hazard_saturates_past_the_last_atom() {
        let m = TailModel::OscillatingDiscrete {
            atoms: vec![(1.0, 0.75), (2.0, 0.25)],
        };
        match m.hazard(2.0) {
            Err(Error::HazardSaturated { last_hazard }) => {
                assert!((last_hazard - (-0.25f64.ln())).abs() <= 1e-12);
            }
            other => panic!("expected saturation, got {other:?}"),
        }
        assert!((m.hazard(1.5).unwrap() - (-0.25f64.ln())).abs() <= 1e-12);
    }

    // -- sampling --

    #[test]
    fn sampling_is_reproducible_and_sorted() {
        let m = weibull(1.0, 0.5);
        let a = m.sample_n(5000, RandomSource::new(42)).unwrap();
        let b = m.sample_n(5000, RandomSource::new(42)).unwrap();
        assert_eq!(a.values(), b.values());
        let c = m.sample_n(5000, RandomSource::new(43)).unwrap();
        assert_ne!(a.values(), c.values());
        assert!(a.values().windows(2).all(|w| w[0] <= w[1]));
        let single = m.sample_n(1, RandomSource::new(7)).unwrap();
        let single2 = m.sample_n(1, RandomSource::new(7)).unwrap();
        assert_eq!(single.values(), single2.values());
    }

    #[test]
    fn exponential_sample_mean_obeys_lln() {
        // mean 1, standard error 1/√n = 0.001; 0.01 is a 10-sigma band.
        let m = exponential(1.0);
        let s = m.sample_n(1_000_000, RandomSource::new(1)).unwrap();
        let mean: f64 = s.values().iter().sum::<f64>() / s.len() as f64;
        assert!((mean - 1.0).abs() <= 0.01, "mean = {mean}");
    }

    #[test]
    fn pareto_empirical_tail_within_binomial_error() {
        // P(X > 100) = 100^(−1/2) = 0.1; 3 binomial standard errors at
        // n = 10⁴ give ±0.009.
        let m = pareto(0.5, 1.0);
        let s = m.sample_n(10_000, RandomSource::new(2)).unwrap();
        let frac = s.exceedances(100.0) as f64 / s.len() as f64;
        let se = (0.1f64 * 0.9 / 10_000.0).sqrt();
        assert!((frac - 0.1).abs() <= 3.0 * se, "frac = {frac}");
    }

    #[test]
    fn kolmogorov_smirnov_on_continuous_models() {
        // DKW-style bound at roughly the 1% level: D_n ≤ 1.63/√n.
        let n = 100_000usize;
        let bound = 1.63 / (n as f64).sqrt();
        let models = [
            exponential(2.0),
            weibull(1.0, 0.5),
            pareto(2.0, 1.0),
            lnt(1.2, 0.5, 1.0, 2.0),
        ];
        for (i, m) in models.iter().enumerate() {
            let s = m.sample_n(n, RandomSource::new(100 + i as u64)).unwrap();
            let mut d: f64 = 0.0;
            for (k, &x) in s.values().iter().enumerate() {
                let f = 1.0 - m.tail(x).unwrap();
                d = d.max((f - k as f64 / n as f64).abs());
                d = d.max(((k + 1) as f64 / n as f64 - f).abs());
            }
            assert!(d <= bound, "{m:?}: KS distance {d} exceeds {bound}");
        }
    }

    #[test]
    fn discrete_sampling_frequencies_match_masses() {
        let m = TailModel::OscillatingDiscrete {
            atoms: vec![(0.5, 0.5), (1.0, 0.3), (2.0, 0.2)],
        };
        let n = 100_000usize;
        let s = m.sample_n(n, RandomSource::new(3)).unwrap();
        for &(loc, mass) in match &m {
            TailModel::OscillatingDiscrete { atoms } => atoms,
            _ => unreachable!(),
        } {
            let freq = s.values().iter().filter(|v| **v == loc).count() as f64 / n as f64;
            let se = (mass * (1.0 - mass) / n as f64).sqrt();
            assert!(
                (freq - mass).abs() <= 4.0 * se,
                "atom at {loc}: freq {freq} vs mass {mass}"
            );
        }
    }

    // -- serialization --

    #[test]
    fn model_json_uses_family_tag() {
        let m = weibull(1.0, 0.5);
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains(r#""family":"weibull""#), "json was {json}");
        let back: TailModel = serde_json::from_str(&json).unwrap();
        assert_eq!(m, back);
        let parsed: TailModel = serde_json::from_str(
            r#"{"family":"pareto","alpha":2.0,"x_m":1.0}"#,
        )
        .unwrap();
        assert_eq!(parsed, pareto(2.0, 1.0));
        assert!(serde_json::from_str::<TailModel>(r#"{"family":"cauchy"}"#).is_err());
    }

    // -- the oscillating construction --

    fn canonical_bounds() -> (ScaleFunction, ScaleFunction) {
        let h1 = ScaleFunction::identity(1e6);
        let grid = EvalGrid::new(1e-3, 1e6, 1.01).unwrap();
        let h2 = ScaleFunction::sampled(0.0, |x| (1.0 + x).ln(), &grid).unwrap();
        (h1, h2)
    }

    #[test]
    fn recursion_matches_hand_iteration() {
        // x₁ = h₂⁻¹(h₁(1)) = e − 1, x₂ = h₂⁻¹(e − 1) = e^(e−1) − 1.
        let (h1, h2) = canonical_bounds();
        let m = build_oscillating(&h1, &h2, 3).unwrap();
        let atoms = match &m {
            TailModel::OscillatingDiscrete { atoms } => atoms,
            _ => unreachable!(),
        };
        // deficit atom below x₀, then x₀ = 1
        assert!(atoms[0].0 < 1.0);
        assert_eq!(atoms[1].0, 1.0);
        let x1 = atoms[2].0;
        let x2 = atoms[3].0;
        assert!(
            (x1 - (E - 1.0)).abs() <= 1e-3,
            "x₁ = {x1}, want e−1 ≈ {}",
            E - 1.0
        );
        let want_x2 = (E - 1.0f64).exp() - 1.0;
        assert!(
            (x2 - want_x2).abs() <= 5e-3 * want_x2,
            "x₂ = {x2}, want {want_x2}"
        );
    }

    #[test]
    fn oscillating_masses_sum_to_one() {
        let (h1, h2) = canonical_bounds();
        let m = build_oscillating(&h1, &h2, 4).unwrap();
        let atoms = match &m {
            TailModel::OscillatingDiscrete { atoms } => atoms,
            _ => unreachable!(),
        };
        let sum: f64 = atoms.iter().map(|(_, m)| m).sum();
        assert!((sum - 1.0).abs() <= MASS_SUM_TOL);
        assert!(atoms.iter().all(|(_, m)| *m > 0.0));
        assert!(atoms.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn oscillating_hazard_hits_both_bounding_functions() {
        let (h1, h2) = canonical_bounds();
        let n_atoms = 4;
        let m = build_oscillating(&h1, &h2, n_atoms).unwrap();
        let atoms = match &m {
            TailModel::OscillatingDiscrete { atoms } => atoms,
            _ => unreachable!(),
        };
        // constructed atoms sit after the deficit atom
        let constructed: Vec<f64> = atoms[1..1 + n_atoms].iter().map(|a| a.0).collect();
        let mut lower_ratios = Vec::new();
        let mut upper_ratios = Vec::new();
        for &x in &constructed {
            let just_below = m.hazard(x * (1.0 - 1e-12)).unwrap();
            let at = m.hazard(x).unwrap();
            let want_lo = h2.eval(x);
            let want_hi = h1.eval(x);
            assert!(
                (just_below - want_lo).abs() <= 1e-9 * want_lo.max(1.0),
                "R(x⁻) at {x}: {just_below} vs h₂ = {want_lo}"
            );
            assert!(
                (at - want_hi).abs() <= 1e-9 * want_hi.max(1.0),
                "R(x) at {x}: {at} vs h₁ = {want_hi}"
            );
            lower_ratios.push(just_below / want_lo);
            upper_ratios.push(at / want_hi);
        }
        // liminf R/h₂ and limsup R/h₁ over the atom set are both 1
        let liminf = lower_ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let limsup = upper_ratios.iter().cloned().fold(0.0f64, f64::max);
        assert!((liminf - 1.0).abs() <= 1e-9, "liminf R/h₂ = {liminf}");
        assert!((limsup - 1.0).abs() <= 1e-9, "limsup R/h₁ = {limsup}");
    }

    #[test]
    fn oscillating_recursion_exhausts_range() {
        // The recursion grows geometrically once it leaves the tabulated
        // region of h₂; masses underflow shortly after.
        let (h1, h2) = canonical_bounds();
        match build_oscillating(&h1, &h2, 300) {
            Err(Error::RangeExhausted { constructed, .. }) => {
                assert!(
                    (4..20).contains(&constructed),
                    "constructed = {constructed}"
                );
            }
            other => panic!("expected range exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn oscillating_rejects_crossed_bounds() {
        let h1 = ScaleFunction::identity(100.0);
        let h2 = ScaleFunction::identity(100.0).scale_by(2.0).unwrap();
        assert!(build_oscillating(&h1, &h2, 3).is_err());
    }
}

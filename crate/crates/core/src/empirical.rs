//! Samples, evaluation grids, and plug-in tail/hazard estimators.
//!
//! The empirical hazard is R̂(x) = −log(#{i : Xᵢ > x} / n). It is only
//! trusted while at least `k_min` observations exceed x; the largest grid
//! point satisfying that is the `effective_max` and everything beyond it is
//! reported as unavailable rather than extrapolated.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;

/// Exceedance floor below which tail estimates are considered unusable.
pub const K_MIN_DEFAULT: usize = 20;

/// Default geometric spacing for grids derived from a sample.
pub const GRID_RATIO_DEFAULT: f64 = 1.05;

/// Quantile at which sample-derived grids start.
pub const GRID_QUANTILE_DEFAULT: f64 = 0.90;

// ---------- samples ----------

/// A sorted batch of finite observations plus a note on where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    values: Vec<f64>,
    pub provenance: String,
}

impl SampleSet {
    /// Sorts and validates. Every value must be finite; the set must be
    /// non-empty.
    pub fn from_values(mut values: Vec<f64>, provenance: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("sample set is empty".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sample contains non-finite value {bad}"
            )));
        }
        values.sort_by(|a, b| a.total_cmp(b));
        Ok(SampleSet {
            values,
            provenance: provenance.into(),
        })
    }

    /// Parse a one-value-per-line CSV. A single leading non-numeric line is
    /// accepted as a header; any later non-numeric or non-finite line is an
    /// error carrying its 1-based line number.
    pub fn from_csv_reader<R: BufRead>(reader: R, provenance: impl Into<String>) -> Result<Self> {
        let mut values = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse {
                line: Some(i + 1),
                msg: e.to_string(),
            })?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            match t.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                Ok(v) => {
                    return Err(Error::Parse {
                        line: Some(i + 1),
                        msg: format!("non-finite value {v}"),
                    })
                }
                Err(_) if i == 0 => continue, // header
                Err(e) => {
                    return Err(Error::Parse {
                        line: Some(i + 1),
                        msg: e.to_string(),
                    })
                }
            }
        }
        SampleSet::from_values(values, provenance)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Parse {
            line: None,
            msg: format!("{}: {e}", path.display()),
        })?;
        Self::from_csv_reader(
            std::io::BufReader::new(file),
            path.display().to_string(),
        )
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "value")?;
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Empirical quantile (inf{x : F̂(x) ≥ q} for q in (0,1)).
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.values.len();
        let k = ((q * n as f64).ceil() as usize).clamp(1, n);
        self.values[k - 1]
    }

    /// Number of observations strictly greater than `x`.
    pub fn exceedances(&self, x: f64) -> usize {
        let idx = self.values.partition_point(|v| *v <= x);
        self.values.len() - idx
    }
}

/// Empirical tail F̄̂(x) = #{i : Xᵢ > x} / n.
pub fn empirical_tail(sample: &SampleSet, x: f64) -> f64 {
    sample.exceedances(x) as f64 / sample.len() as f64
}

// ---------- grids ----------

/// Policy from which a geometric grid is materialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPolicy {
    pub x_min: f64,
    pub x_max: f64,
    pub ratio: f64,
}

/// Geometric evaluation grid: xᵢ = x_min · ratioⁱ, truncated at x_max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalGrid {
    points: Vec<f64>,
    pub policy: GridPolicy,
}

impl EvalGrid {
    /// Build the grid. Requires 0 < x_min < x_max, ratio > 1, and at least
    /// 8 resulting points.
    pub fn new(x_min: f64, x_max: f64, ratio: f64) -> Result<Self> {
        if !(x_min.is_finite() && x_min > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid x_min must be positive and finite, got {x_min}"
            )));
        }
        if !(x_max.is_finite() && x_max > x_min) {
            return Err(Error::InvalidParameter(format!(
                "grid x_max must exceed x_min, got {x_max}"
            )));
        }
        if !(ratio.is_finite() && ratio > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "grid ratio must exceed 1, got {ratio}"
            )));
        }
        let mut points = Vec::new();
        let mut x = x_min;
        let mut i = 0u32;
        while x <= x_max && x.is_finite() {
            points.push(x);
            i += 1;
            x = x_min * ratio.powi(i as i32);
        }
        if points.len() < 8 {
            return Err(Error::InvalidParameter(format!(
                "grid has only {} points; at least 8 required",
                points.len()
            )));
        }
        Ok(EvalGrid {
            points,
            policy: GridPolicy {
                x_min,
                x_max,
                ratio,
            },
        })
    }

    /// Default grid for a sample: start at its 0.90-quantile, stop at the
    /// largest value still exceeded by `k_min` observations, spacing 1.05.
    pub fn default_for_sample(sample: &SampleSet, k_min: usize) -> Result<Self> {
        let n = sample.len();
        if n <= k_min {
            return Err(Error::InsufficientTailData(format!(
                "sample of size {n} cannot support k_min = {k_min}"
            )));
        }
        let x_min = sample.quantile(GRID_QUANTILE_DEFAULT);
        let x_max = sample.values()[n - 1 - k_min];
        if !(x_min > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "0.90-quantile must be positive for a geometric grid, got {x_min}"
            )));
        }
        if x_max <= x_min * GRID_RATIO_DEFAULT.powi(8) {
            return Err(Error::InsufficientTailData(format!(
                "tail region [{x_min}, {x_max}] is too short for a grid"
            )));
        }
        EvalGrid::new(x_min, x_max, GRID_RATIO_DEFAULT)
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
}

// ---------- empirical hazard ----------

/// Plug-in hazard tabulated on a grid prefix where it is trustworthy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalHazard {
    pub grid: EvalGrid,
    /// R̂ at grid points up to and including `effective_max`.
    pub hazard_values: Vec<f64>,
    /// Largest grid point with at least `k_min` exceedances.
    pub effective_max: f64,
    pub k_min: usize,
    pub sample_size: usize,
}

impl EmpiricalHazard {
    /// Hazard at `x` for first-grid-point ≤ x ≤ effective_max, linearly
    /// interpolated between grid points.
    pub fn hazard_at(&self, x: f64) -> Result<f64> {
        let pts = &self.grid.points()[..self.hazard_values.len()];
        if x < pts[0] || x > self.effective_max {
            return Err(Error::InsufficientTailData(format!(
                "x = {x} outside trusted hazard range [{}, {}]",
                pts[0], self.effective_max
            )));
        }
        let idx = pts.partition_point(|p| *p <= x);
        if idx == 0 {
            return Ok(self.hazard_values[0]);
        }
        if idx >= pts.len() {
            return Ok(*self.hazard_values.last().unwrap());
        }
        let (x0, x1) = (pts[idx - 1], pts[idx]);
        let (v0, v1) = (self.hazard_values[idx - 1], self.hazard_values[idx]);
        Ok(v0 + (x - x0) * (v1 - v0) / (x1 - x0))
    }
}

/// Compute the plug-in hazard on `grid`, truncated at the last point with
/// at least `k_min` exceedances.
pub fn empirical_hazard(sample: &SampleSet, grid: &EvalGrid, k_min: usize) -> Result<EmpiricalHazard> {
    if k_min == 0 {
        return Err(Error::InvalidParameter("k_min must be positive".into()));
    }
    let n = sample.len() as f64;
    let mut hazard_values = Vec::new();
    let mut effective_max = None;
    for &x in grid.points() {
        let k = sample.exceedances(x);
        if k < k_min {
            break;
        }
        hazard_values.push(-((k as f64 / n).ln()));
        effective_max = Some(x);
    }
    match effective_max {
        Some(effective_max) => Ok(EmpiricalHazard {
            grid: grid.clone(),
            hazard_values,
            effective_max,
            k_min,
            sample_size: sample.len(),
        }),
        None => Err(Error::InsufficientTailData(format!(
            "no grid point has {k_min} exceedances (sample max {}, grid starts at {})",
            sample.max(),
            grid.points()[0]
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(x_min: f64, x_max: f64, ratio: f64) -> EvalGrid {
        EvalGrid::new(x_min, x_max, ratio).unwrap()
    }

    #[test]
    fn tail_counts_strict_exceedances() {
        let s = SampleSet::from_values(vec![1.0, 2.0, 3.0], "t").unwrap();
        assert_eq!(empirical_tail(&s, 2.0), 1.0 / 3.0);
        assert_eq!(empirical_tail(&s, 0.5), 1.0);
        assert_eq!(empirical_tail(&s, 3.0), 0.0);
    }

    #[test]
    fn tail_is_a_right_continuous_step_function() {
        let s = SampleSet::from_values(vec![1.0, 1.0, 2.0, 5.0], "t").unwrap();
        // Non-increasing in x, jumps only at sample points.
        let xs = [0.0, 0.9999, 1.0, 1.5, 2.0, 4.9, 5.0, 6.0];
        let mut last = f64::INFINITY;
        for x in xs {
            let t = empirical_tail(&s, x);
            assert!(t <= last, "tail must be non-increasing");
            last = t;
        }
        assert_eq!(empirical_tail(&s, 1.0), 0.5);
    }

    #[test]
    fn quantile_matches_order_statistics() {
        let s = SampleSet::from_values((1..=100).map(f64::from).collect(), "t").unwrap();
        assert_eq!(s.quantile(0.90), 90.0);
        assert_eq!(s.quantile(0.5), 50.0);
    }

    #[test]
    fn grid_is_geometric_and_truncated() {
        let g = grid(1.0, 10.0, 1.25);
        let pts = g.points();
        assert!(pts.len() >= 8);
        assert_eq!(pts[0], 1.0);
        for w in pts.windows(2) {
            assert!((w[1] / w[0] - 1.25).abs() < 1e-12);
        }
        assert!(*pts.last().unwrap() <= 10.0);
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(EvalGrid::new(0.0, 10.0, 1.5).is_err());
        assert!(EvalGrid::new(1.0, 0.5, 1.5).is_err());
        assert!(EvalGrid::new(1.0, 10.0, 1.0).is_err());
        // ratio so coarse that fewer than 8 points fit
        assert!(EvalGrid::new(1.0, 10.0, 3.0).is_err());
    }

    #[test]
    fn hazard_truncates_at_k_min() {
        // 0..1000: exactly k values exceed 999 - k.
        let s = SampleSet::from_values((0..1000).map(f64::from).collect(), "t").unwrap();
        let g = grid(500.0, 999.0, 1.05);
        let h = empirical_hazard(&s, &g, 20).unwrap();
        assert!(h.effective_max <= 979.0, "at most 20 exceedances beyond 979");
        assert!(s.exceedances(h.effective_max) >= 20);
        let last = h.hazard_values.len();
        assert!(last < g.len(), "grid beyond effective_max must be dropped");
        // Values are the exact plug-in hazard.
        for (i, &x) in g.points()[..last].iter().enumerate() {
            let k = s.exceedances(x) as f64;
            assert_eq!(h.hazard_values[i], -(k / 1000.0).ln());
        }
    }

    #[test]
    fn hazard_errors_when_tail_unreachable() {
        let s = SampleSet::from_values(vec![1.0; 50], "t").unwrap();
        let g = grid(2.0, 100.0, 1.5);
        match empirical_hazard(&s, &g, 20) {
            Err(Error::InsufficientTailData(_)) => {}
            other => panic!("expected insufficient tail data, got {other:?}"),
        }
    }

    #[test]
    fn hazard_is_nondecreasing_on_grid() {
        let mut rng = crate::rng::RandomSource::new(5).rng();
        let vals: Vec<f64> = (0..20_000)
            .map(|_| -crate::rng::uniform_open01(&mut rng).ln())
            .collect();
        let s = SampleSet::from_values(vals, "t").unwrap();
        let g = EvalGrid::default_for_sample(&s, 20).unwrap();
        let h = empirical_hazard(&s, &g, 20).unwrap();
        for w in h.hazard_values.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn default_sample_grid_follows_policy() {
        // Geometric sample: wide enough between the 0.90 quantile and the
        // k_min-th largest value for the default ratio.
        let vals: Vec<f64> = (0..10_000).map(|i| 1.001f64.powi(i)).collect();
        let s = SampleSet::from_values(vals.clone(), "t").unwrap();
        let g = EvalGrid::default_for_sample(&s, 20).unwrap();
        assert_eq!(g.policy.x_min, vals[8999]); // 0.90 quantile
        assert_eq!(g.policy.x_max, vals[9979]); // largest value with 20 above it
        assert_eq!(g.policy.ratio, GRID_RATIO_DEFAULT);

        // A near-uniform sample leaves too narrow a tail region.
        let flat: Vec<f64> = (1..=10_000).map(f64::from).collect();
        let s = SampleSet::from_values(flat, "t").unwrap();
        assert!(matches!(
            EvalGrid::default_for_sample(&s, 20),
            Err(Error::InsufficientTailData(_))
        ));
    }

    #[test]
    fn csv_roundtrip_and_errors() {
        let text = "value\n1.5\n2.5\n0.5\n";
        let s = SampleSet::from_csv_reader(text.as_bytes(), "mem").unwrap();
        assert_eq!(s.values(), &[0.5, 1.5, 2.5]);

        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        let s2 = SampleSet::from_csv_reader(out.as_slice(), "mem").unwrap();
        assert_eq!(s.values(), s2.values());

        match SampleSet::from_csv_reader("1.0\noops\n".as_bytes(), "mem") {
            Err(Error::Parse { line: Some(2), .. }) => {}
            other => panic!("expected parse error with line 2, got {other:?}"),
        }
        match SampleSet::from_csv_reader("1.0\ninf\n".as_bytes(), "mem") {
            Err(Error::Parse { line: Some(2), .. }) => {}
            other => panic!("expected non-finite rejection, got {other:?}"),
        }
        assert!(SampleSet::from_csv_reader("".as_bytes(), "mem").is_err());
    }

    #[test]
    fn empirical_hazard_interpolates_and_guards_range() {
        let s = SampleSet::from_values((0..1000).map(f64::from).collect(), "t").unwrap();
        let g = grid(500.0, 970.0, 1.05);
        let h = empirical_hazard(&s, &g, 20).unwrap();
        // Exact at grid points.
        let x = g.points()[3];
        assert_eq!(h.hazard_at(x).unwrap(), h.hazard_values[3]);
        // Monotone between points.
        let mid = (g.points()[3] + g.points()[4]) / 2.0;
        let v = h.hazard_at(mid).unwrap();
        assert!(v >= h.hazard_values[3] && v <= h.hazard_values[4]);
        assert!(h.hazard_at(h.effective_max * 1.01).is_err());
        assert!(h.hazard_at(400.0).is_err());
    }
}

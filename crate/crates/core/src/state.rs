//! Shared domain types: coupling parameters, joint amplitude grids and
//! their marginals.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ|c|² ≤ 1` accepted when building a grid.
pub const PROBABILITY_SLACK: f64 = 1e-9;

/// Largest grid (cells) that [`JointAmplitudeGrid::from_fn`] will allocate.
pub const MAX_GRID_CELLS: usize = 20_000_000;

/// Interaction strengths and the initial coherent amplitude.
///
/// Nothing forces `α = −α*` on storage; see [`is_pure_imaginary`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub alpha: Complex64,
    pub alpha1: Complex64,
    pub alpha2: Complex64,
    pub beta: Complex64,
}

impl CouplingParams {
    pub fn new(alpha: Complex64, alpha1: Complex64, alpha2: Complex64, beta: Complex64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("alpha1", alpha1), ("alpha2", alpha2), ("beta", beta)] {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(CouplingParams {
            alpha,
            alpha1,
            alpha2,
            beta,
        })
    }

    /// Single-interaction parameters; the two-electron slots are zero.
    pub fn single(alpha: Complex64, beta: Complex64) -> Result<Self> {
        Self::new(alpha, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), beta)
    }

    pub fn two_electron(alpha1: Complex64, alpha2: Complex64) -> Result<Self> {
        Self::new(Complex64::new(0.0, 0.0), alpha1, alpha2, Complex64::new(0.0, 0.0))
    }

    /// Classical coupling `g = α|β|`.
    pub fn g(&self) -> Complex64 {
        self.alpha * self.beta.norm()
    }
}

/// `true` when `α = −α*` holds to within `1e-12`, the convention under which
/// the interaction is a pure momentum kick.
pub fn is_pure_imaginary(alpha: Complex64) -> bool {
    (alpha + alpha.conj()).norm() <= 1e-12
}

/// Complex number from magnitude and phase.
pub fn polar(magnitude: f64, phase: f64) -> Complex64 {
    Complex64::from_polar(magnitude, phase)
}

/// Closed upper bound `mean + 10√mean`, padded by a fixed margin so that
/// tiny means still capture the Poisson tail below `1e-20`.
pub fn suggest_range(mean: f64) -> i64 {
    let mean = mean.max(0.0);
    (mean + 10.0 * mean.sqrt() + 12.0).ceil() as i64
}

/// What an axis of a grid counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    /// Electron energy index `k` in units of the photon energy (gain > 0).
    ElectronGain,
    /// Loss index `s` of the first electron in a two-electron run.
    Electron1Loss,
    /// Photon number `n`.
    PhotonNumber,
}

impl AxisKind {
    pub fn name(&self) -> &'static str {
        match self {
            AxisKind::ElectronGain => "electron_gain",
            AxisKind::Electron1Loss => "electron1_loss",
            AxisKind::PhotonNumber => "photon_number",
        }
    }
}

impl fmt::Display for AxisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AxisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "electron_gain" => Ok(AxisKind::ElectronGain),
            "electron1_loss" => Ok(AxisKind::Electron1Loss),
            "photon_number" => Ok(AxisKind::PhotonNumber),
            other => Err(Error::Parse(format!("unknown axis kind '{other}'"))),
        }
    }
}

/// Closed integer interval `[min, max]`; empty when `max < min`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisRange {
    pub min: i64,
    pub max: i64,
}

impl AxisRange {
    pub fn new(min: i64, max: i64) -> Self {
        AxisRange { min, max }
    }

    pub fn len(&self) -> usize {
        if self.max < self.min {
            0
        } else {
            (self.max - self.min + 1) as usize
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, v: i64) -> bool {
        v >= self.min && v <= self.max
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> + Clone {
        self.min..=self.max
    }

    fn index_of(&self, v: i64) -> Option<usize> {
        self.contains(v).then(|| (v - self.min) as usize)
    }
}

impl fmt::Display for AxisRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.min, self.max)
    }
}

impl FromStr for AxisRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| Error::Parse(format!("range '{s}' is not of the form a..b")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<i64>()
                .map_err(|e| Error::Parse(format!("range bound '{t}': {e}")))
        };
        Ok(AxisRange::new(parse(a)?, parse(b)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Axis {
    pub kind: AxisKind,
    pub range: AxisRange,
}

impl Axis {
    pub fn new(kind: AxisKind, min: i64, max: i64) -> Self {
        Axis {
            kind,
            range: AxisRange::new(min, max),
        }
    }
}

/// Which axis of a grid to keep when marginalizing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAxis {
    First,
    Second,
}

/// Generation parameters, kept as ordered `key=value` text.
pub type Metadata = BTreeMap<String, String>;

/// Dense complex amplitude table over two integer axes.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAmplitudeGrid {
    axis1: Axis,
    axis2: Axis,
    /// Row-major, `axis1` is the slow index.
    amplitudes: Vec<Complex64>,
    metadata: Metadata,
}

impl JointAmplitudeGrid {
    pub fn new(axis1: Axis, axis2: Axis, amplitudes: Vec<Complex64>, metadata: Metadata) -> Result<Self> {
        let expected = axis1.range.len() * axis2.range.len();
        if amplitudes.len() != expected {
            return Err(Error::InvalidGrid(format!(
                "{} amplitudes for a {}x{} grid",
                amplitudes.len(),
                axis1.range.len(),
                axis2.range.len()
            )));
        }
        if amplitudes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidGrid("non-finite amplitude".into()));
        }
        let grid = JointAmplitudeGrid {
            axis1,
            axis2,
            amplitudes,
            metadata,
        };
        let total = grid.total_probability();
        if total > 1.0 + PROBABILITY_SLACK {
            return Err(Error::InvalidGrid(format!("total probability {total} exceeds 1")));
        }
        Ok(grid)
    }

    /// Fill a grid cell by cell (in parallel) from a fallible closure.
    pub fn from_fn<F>(axis1: Axis, axis2: Axis, metadata: Metadata, f: F) -> Result<Self>
    where
        F: Fn(i64, i64) -> Result<Complex64> + Sync,
    {
        let n2 = axis2.range.len();
        let cells = axis1.range.len().saturating_mul(n2);
        if cells > MAX_GRID_CELLS {
            return Err(Error::InvalidGrid(format!(
                "{}x{} grid exceeds {MAX_GRID_CELLS} cells; narrow the ranges",
                axis1.range.len(),
                n2
            )));
        }
        let amplitudes = (0..cells)
            .into_par_iter()
            .map(|idx| {
                let a = axis1.range.min + (idx / n2) as i64;
                let b = axis2.range.min + (idx % n2) as i64;
                f(a, b)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(axis1, axis2, amplitudes, metadata)
    }

    pub fn axis1(&self) -> Axis {
        self.axis1
    }

    pub fn axis2(&self) -> Axis {
        self.axis2
    }

    pub fn metadata(&self) -> &Metadata {
        &self.metadata
    }

    pub fn metadata_mut(&mut self) -> &mut Metadata {
        &mut self.metadata
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.axis1.range.len(), self.axis2.range.len())
    }

    /// Amplitude at axis values `(a, b)`; zero outside the declared ranges.
    pub fn get(&self, a: i64, b: i64) -> Complex64 {
        match (self.axis1.range.index_of(a), self.axis2.range.index_of(b)) {
            (Some(i), Some(j)) => self.amplitudes[i * self.axis2.range.len() + j],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// `(a, b, amplitude)` for every cell, in storage order.
    pub fn cells(&self) -> impl Iterator<Item = (i64, i64, Complex64)> + '_ {
        let n2 = self.axis2.range.len();
        self.amplitudes.iter().enumerate().map(move |(idx, c)| {
            (
                self.axis1.range.min + (idx / n2) as i64,
                self.axis2.range.min + (idx % n2) as i64,
                *c,
            )
        })
    }

    pub fn total_probability(&self) -> f64 {
        total_probability(self)
    }

    pub fn marginalize(&self, keep: GridAxis) -> Marginal {
        marginalize(self, keep)
    }

    /// Largest `|c|` difference against another grid over the union of both
    /// supports, counting only cells where either amplitude exceeds `floor`.
    pub fn max_abs_difference(&self, other: &JointAmplitudeGrid, floor: f64) -> f64 {
        let lo1 = self.axis1.range.min.min(other.axis1.range.min);
        let hi1 = self.axis1.range.max.max(other.axis1.range.max);
        let lo2 = self.axis2.range.min.min(other.axis2.range.min);
        let hi2 = self.axis2.range.max.max(other.axis2.range.max);
        let mut worst = 0.0f64;
        for a in lo1..=hi1 {
            for b in lo2..=hi2 {
                let x = self.get(a, b);
                let y = other.get(a, b);
                if x.norm() > floor || y.norm() > floor {
                    worst = worst.max((x - y).norm());
                }
            }
        }
        worst
    }
}

/// Probability distribution along one axis of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub kind: AxisKind,
    pub range: AxisRange,
    pub values: Vec<f64>,
}

impl Marginal {
    pub fn get(&self, v: i64) -> f64 {
        self.range.index_of(v).map_or(0.0, |i| self.values[i])
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `Σ v P(v)`.
    pub fn mean(&self) -> f64 {
        self.range.iter().zip(&self.values).map(|(v, p)| v as f64 * p).sum()
    }
}

/// `Σ |c|²` over the grid.
pub fn total_probability(grid: &JointAmplitudeGrid) -> f64 {
    grid.amplitudes.iter().map(|c| c.norm_sqr()).sum()
}

/// Sum `|c|²` over the axis not kept.
pub fn marginalize(grid: &JointAmplitudeGrid, keep: GridAxis) -> Marginal {
    let (n1, n2) = grid.shape();
    let (axis, values) = match keep {
        GridAxis::First => {
            let values = (0..n1)
                .map(|i| grid.amplitudes[i * n2..(i + 1) * n2].iter().map(|c| c.norm_sqr()).sum())
                .collect();
            (grid.axis1, values)
        }
        GridAxis::Second => {
            let mut values = vec![0.0; n2];
            for i in 0..n1 {
                for (v, c) in values.iter_mut().zip(&grid.amplitudes[i * n2..(i + 1) * n2]) {
                    *v += c.norm_sqr();
                }
            }
            (grid.axis2, values)
        }
    };
    Marginal {
        kind: axis.kind,
        range: axis.range,
        values,
    }
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Seventeen significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl JointAmplitudeGrid {
    /// `#`-commented `key=value` header, then `axis1,axis2,re,im,prob` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# axis1_kind={}\n", self.axis1.kind));
        out.push_str(&format!("# axis1_range={}\n", self.axis1.range));
        out.push_str(&format!("# axis2_kind={}\n", self.axis2.kind));
        out.push_str(&format!("# axis2_range={}\n", self.axis2.range));
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str("axis1,axis2,re,im,prob\n");
        for (a, b, c) in self.cells() {
            out.push_str(&format!(
                "{a},{b},{},{},{}\n",
                fmt_f64(c.re),
                fmt_f64(c.im),
                fmt_f64(c.norm_sqr())
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut header = Metadata::new();
        let mut rows = Vec::new();
        let mut saw_columns = false;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("header line without '=': {line}")))?;
                header.insert(k.trim().to_string(), v.trim().to_string());
                continue;
            }
            if !saw_columns {
                if line != "axis1,axis2,re,im,prob" {
                    return Err(Error::Parse(format!("unexpected column header '{line}'")));
                }
                saw_columns = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::Parse(format!("row with {} fields: {line}", fields.len())));
            }
            let int = |s: &str| s.parse::<i64>().map_err(|e| Error::Parse(format!("'{s}': {e}")));
            let float = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("'{s}': {e}")));
            rows.push((
                int(fields[0])?,
                int(fields[1])?,
                Complex64::new(float(fields[2])?, float(fields[3])?),
            ));
        }
        let mut take = |key: &str| {
            header
                .remove(key)
                .ok_or_else(|| Error::Parse(format!("missing header '{key}'")))
        };
        let axis1 = Axis {
            kind: take("axis1_kind")?.parse()?,
            range: take("axis1_range")?.parse()?,
        };
        let axis2 = Axis {
            kind: take("axis2_kind")?.parse()?,
            range: take("axis2_range")?.parse()?,
        };
        let n2 = axis2.range.len();
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); axis1.range.len() * n2];
        for (a, b, c) in rows {
            let (Some(i), Some(j)) = (axis1.range.index_of(a), axis2.range.index_of(b)) else {
                return Err(Error::Parse(format!("cell ({a},{b}) outside declared ranges")));
            };
            amplitudes[i * n2 + j] = c;
        }
        Self::new(axis1, axis2, amplitudes, header)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .cells()
            .map(|(a, b, c)| {
                serde_json::json!({
                    "axis1": a,
                    "axis2": b,
                    "re": c.re,
                    "im": c.im,
                    "prob": c.norm_sqr(),
                })
            })
            .collect();
        serde_json::json!({
            "axis1_kind": self.axis1.kind,
            "axis1_range": self.axis1.range,
            "axis2_kind": self.axis2.kind,
            "axis2_range": self.axis2.range,
            "metadata": self.metadata,
            "rows": rows,
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            axis1: i64,
            axis2: i64,
            re: f64,
            im: f64,
        }
        #[derive(Deserialize)]
        struct Doc {
            axis1_kind: AxisKind,
            axis1_range: AxisRange,
            axis2_kind: AxisKind,
            axis2_range: AxisRange,
            metadata: Metadata,
            rows: Vec<Row>,
        }
        let doc: Doc = serde_json::from_value(value.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let axis1 = Axis {
            kind: doc.axis1_kind,
            range: doc.axis1_range,
        };
        let axis2 = Axis {
            kind: doc.axis2_kind,
            range: doc.axis2_range,
        };
        let n2 = axis2.range.len();
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); axis1.range.len() * n2];
        for r in doc.rows {
            let (Some(i), Some(j)) = (axis1.range.index_of(r.axis1), axis2.range.index_of(r.axis2)) else {
                return Err(Error::Parse(format!(
                    "cell ({},{}) outside declared ranges",
                    r.axis1, r.axis2
                )));
            };
            amplitudes[i * n2 + j] = Complex64::new(r.re, r.im);
        }
        Self::new(axis1, axis2, amplitudes, doc.metadata)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta_grid() -> JointAmplitudeGrid {
        let a1 = Axis::new(AxisKind::PhotonNumber, 0, 3);
        let a2 = Axis::new(AxisKind::ElectronGain, -2, 2);
        JointAmplitudeGrid::from_fn(a1, a2, Metadata::new(), |n, k| {
            Ok(if n == 0 && k == 0 {
                Complex64::new(0.0, 1.0)
            } else {
                Complex64::new(0.0, 0.0)
            })
        })
        .unwrap()
    }

    #[test]
    fn delta_state_marginals() {
        let g = delta_grid();
        let m1 = g.marginalize(GridAxis::First);
        assert_eq!(m1.values, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(m1.kind, AxisKind::PhotonNumber);
        let m2 = g.marginalize(GridAxis::Second);
        assert_eq!(m2.values, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(m2.range, AxisRange::new(-2, 2));
    }

    #[test]
    fn empty_support_has_zero_probability() {
        let a1 = Axis::new(AxisKind::PhotonNumber, 0, 3);
        let a2 = Axis::new(AxisKind::ElectronGain, 0, -1);
        let g = JointAmplitudeGrid::new(a1, a2, vec![], Metadata::new()).unwrap();
        assert_eq!(g.total_probability(), 0.0);
        let zeros =
            JointAmplitudeGrid::from_fn(a1, Axis::new(AxisKind::ElectronGain, 0, 0), Metadata::new(), |_, _| {
                Ok(Complex64::new(0.0, 0.0))
            })
            .unwrap();
        assert_eq!(zeros.total_probability(), 0.0);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a1 = Axis::new(AxisKind::PhotonNumber, 0, 1);
        let a2 = Axis::new(AxisKind::ElectronGain, 0, 1);
        let err = JointAmplitudeGrid::new(a1, a2, vec![Complex64::new(0.0, 0.0); 3], Metadata::new());
        assert!(matches!(err, Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn overfull_grid_rejected() {
        let a1 = Axis::new(AxisKind::PhotonNumber, 0, 1);
        let a2 = Axis::new(AxisKind::ElectronGain, 0, 0);
        let err = JointAmplitudeGrid::new(a1, a2, vec![Complex64::new(1.0, 0.0); 2], Metadata::new());
        assert!(matches!(err, Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn pure_imaginary_helper() {
        assert!(is_pure_imaginary(Complex64::new(0.0, -0.8)));
        assert!(is_pure_imaginary(polar(1.0, -std::f64::consts::FRAC_PI_2)));
        assert!(!is_pure_imaginary(Complex64::new(1e-6, 1.0)));
    }

    #[test]
    fn nonfinite_params_rejected() {
        let z = Complex64::new(0.0, 0.0);
        assert!(CouplingParams::new(Complex64::new(f64::NAN, 0.0), z, z, z).is_err());
        let p = CouplingParams::single(Complex64::new(0.0, -0.2), Complex64::new(10.0, 0.0)).unwrap();
        assert!((p.g().norm() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn suggest_range_grows_with_mean() {
        assert_eq!(suggest_range(0.0), 12);
        assert_eq!(suggest_range(100.0), 212);
        assert!(suggest_range(2.0) < suggest_range(3.0));
    }

    #[test]
    fn csv_and_json_round_trip() {
        let mut meta = Metadata::new();
        meta.insert("family".into(), "test".into());
        let a1 = Axis::new(AxisKind::Electron1Loss, 0, 2);
        let a2 = Axis::new(AxisKind::ElectronGain, -1, 1);
        let g = JointAmplitudeGrid::from_fn(a1, a2, meta, |s, k| {
            Ok(Complex64::new(0.1 * s as f64, -0.07 * k as f64 + 1.0 / 3.0) * 0.5)
        })
        .unwrap();
        let back = JointAmplitudeGrid::from_csv(&g.to_csv()).unwrap();
        assert_eq!(back, g);
        let back = JointAmplitudeGrid::from_json(&g.to_json()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(JointAmplitudeGrid::from_csv("a,b\n1,2\n").is_err());
        assert!(JointAmplitudeGrid::from_csv("# axis1_kind=photon_number\naxis1,axis2,re,im,prob\n").is_err());
    }
}

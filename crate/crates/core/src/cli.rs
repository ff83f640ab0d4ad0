//! Run configurations, presets and output rendering behind the `qew` binary.
//!
//! A [`RunConfig`] names a subcommand and carries its parameters as a loose
//! key/value map; [`RunConfig::job`] checks them against the typed schema
//! (unknown keys are rejected) before anything is computed. Every rendered
//! output embeds the config it came from, so a file can be re-run from its
//! own header.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fiber::{self, AngularFactor, FiberSpec};
use crate::interactions;
use crate::kinematics::{self, BandwidthConvention};
use crate::oracle;
use crate::state::{fmt_f64, polar, AxisRange, GridAxis, JointAmplitudeGrid, PROBABILITY_SLACK};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Eels,
    Pinem,
    TwoElectron,
    ClassicalLimit,
    OracleCheck,
    Kinematics,
    FiberSolve,
    FiberSweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format '{other}'"))),
        }
    }
}

pub type Parameters = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    #[serde(default)]
    pub parameters: Parameters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

// ---------------------------------------------------------------------------
// Parameter schemas
// ---------------------------------------------------------------------------

fn default_phase() -> f64 {
    -FRAC_PI_2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EelsParams {
    pub alpha_mag: f64,
    #[serde(default = "default_phase")]
    pub alpha_phase: f64,
    #[serde(default)]
    pub k_max: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinemParams {
    /// One grid per entry.
    pub alpha_mag: Vec<f64>,
    #[serde(default = "default_phase")]
    pub alpha_phase: f64,
    pub beta_mag: f64,
    #[serde(default)]
    pub beta_phase: f64,
    #[serde(default)]
    pub n_range: Option<String>,
    #[serde(default)]
    pub k_range: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoElectronParams {
    pub alpha1_mag: Vec<f64>,
    /// Same length as `alpha1_mag`; omitted means equal couplings.
    #[serde(default)]
    pub alpha2_mag: Option<Vec<f64>>,
    #[serde(default = "default_phase")]
    pub alpha1_phase: f64,
    #[serde(default = "default_phase")]
    pub alpha2_phase: f64,
    #[serde(default)]
    pub s_range: Option<String>,
    #[serde(default)]
    pub k_range: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalLimitParams {
    pub alpha_mag: f64,
    #[serde(default = "default_phase")]
    pub alpha_phase: f64,
    pub beta_mag: f64,
    #[serde(default)]
    pub beta_phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    Eels,
    Pinem,
    TwoElectron,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCheckParams {
    pub mode: OracleMode,
    #[serde(default)]
    pub alpha_mag: Option<f64>,
    #[serde(default = "default_phase")]
    pub alpha_phase: f64,
    #[serde(default)]
    pub beta_mag: Option<f64>,
    #[serde(default)]
    pub beta_phase: f64,
    #[serde(default)]
    pub alpha1_mag: Option<f64>,
    #[serde(default)]
    pub alpha2_mag: Option<f64>,
    #[serde(default = "default_phase")]
    pub alpha1_phase: f64,
    #[serde(default = "default_phase")]
    pub alpha2_phase: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicsParams {
    #[serde(default = "default_kev")]
    pub kinetic_kev: f64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_ev: f64,
    #[serde(default)]
    pub bandwidth_convention: BandwidthConvention,
    #[serde(default = "one")]
    pub alpha_mag: f64,
    #[serde(default = "default_photon_ev")]
    pub photon_energy_ev: f64,
    #[serde(default = "default_length")]
    pub length_um: f64,
}

fn default_kev() -> f64 {
    200.0
}
fn default_bandwidth() -> f64 {
    5.825
}
fn one() -> f64 {
    1.0
}
fn default_photon_ev() -> f64 {
    1.1
}
fn default_length() -> f64 {
    100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSolveParams {
    #[serde(default = "default_wavelength")]
    pub wavelength_nm: f64,
    #[serde(default = "default_core")]
    pub core_index: f64,
    #[serde(default = "one")]
    pub clad_index: f64,
    #[serde(default = "default_diameter")]
    pub diameter_nm: f64,
    #[serde(default = "default_length")]
    pub length_um: f64,
    #[serde(default)]
    pub angular: AngularFactor,
    #[serde(default)]
    pub standing_wave: bool,
}

fn default_wavelength() -> f64 {
    1064.0
}
fn default_core() -> f64 {
    2.0
}
fn default_diameter() -> f64 {
    463.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSweepParams {
    #[serde(default = "default_wavelength")]
    pub wavelength_nm: f64,
    #[serde(default = "default_core")]
    pub core_index: f64,
    #[serde(default = "one")]
    pub clad_index: f64,
    #[serde(default = "default_length")]
    pub length_um: f64,
    #[serde(default)]
    pub angular: AngularFactor,
    #[serde(default)]
    pub standing_wave: bool,
    /// Explicit list; overrides the start/stop/step grid.
    #[serde(default)]
    pub diameters_nm: Option<Vec<f64>>,
    #[serde(default = "default_start")]
    pub diameter_start_nm: f64,
    #[serde(default = "default_stop")]
    pub diameter_stop_nm: f64,
    #[serde(default = "default_step")]
    pub diameter_step_nm: f64,
}

fn default_start() -> f64 {
    300.0
}
fn default_stop() -> f64 {
    800.0
}
fn default_step() -> f64 {
    5.0
}

/// A config that passed schema validation.
#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    Eels(EelsParams),
    Pinem(PinemParams),
    TwoElectron(TwoElectronParams),
    ClassicalLimit(ClassicalLimitParams),
    OracleCheck(OracleCheckParams),
    Kinematics(KinematicsParams),
    FiberSolve(FiberSolveParams),
    FiberSweep(FiberSweepParams),
}

fn typed<T: DeserializeOwned>(params: &Parameters) -> Result<T> {
    let obj: serde_json::Map<String, Value> = params.clone().into_iter().collect();
    serde_json::from_value(Value::Object(obj)).map_err(|e| Error::Config(e.to_string()))
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be finite")))
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{name} must be a finite nonnegative number, got {v}"
        )))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

fn parse_range(name: &str, text: &Option<String>) -> Result<Option<AxisRange>> {
    match text {
        None => Ok(None),
        Some(t) => {
            let r: AxisRange = t.parse().map_err(|e: Error| Error::Config(format!("{name}: {e}")))?;
            if r.is_empty() {
                return Err(Error::Config(format!("{name} '{t}' is empty")));
            }
            Ok(Some(r))
        }
    }
}

fn fiber_spec(
    wavelength: f64,
    core: f64,
    clad: f64,
    diameter: f64,
    length: f64,
    angular: AngularFactor,
    standing: bool,
) -> Result<FiberSpec> {
    let mut spec =
        FiberSpec::new(wavelength, core, clad, 0.5 * diameter, length).map_err(|e| Error::Config(e.to_string()))?;
    spec.angular = angular;
    spec.standing_wave = standing;
    Ok(spec)
}

impl FiberSweepParams {
    pub fn diameters(&self) -> Result<Vec<f64>> {
        if let Some(list) = &self.diameters_nm {
            if list.is_empty() {
                return Err(Error::Config("diameters_nm is empty".into()));
            }
            return Ok(list.clone());
        }
        let (a, b, h) = (self.diameter_start_nm, self.diameter_stop_nm, self.diameter_step_nm);
        check_positive("diameter_step_nm", h)?;
        check_positive("diameter_start_nm", a)?;
        if b < a {
            return Err(Error::Config(format!("diameter range {a}..{b} is empty")));
        }
        let count = ((b - a) / h + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| a + i as f64 * h).collect())
    }
}

impl RunConfig {
    pub fn new(subcommand: Subcommand, parameters: Parameters) -> Self {
        RunConfig {
            subcommand,
            parameters,
            output_path: None,
            format: Format::Csv,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Validate parameters against the subcommand's schema.
    pub fn job(&self) -> Result<Job> {
        let p = &self.parameters;
        let job = match self.subcommand {
            Subcommand::Eels => {
                let q: EelsParams = typed(p)?;
                check_nonneg("alpha_mag", q.alpha_mag)?;
                check_finite("alpha_phase", q.alpha_phase)?;
                if let Some(k) = q.k_max {
                    if k < 0 {
                        return Err(Error::Config("k_max must be >= 0".into()));
                    }
                }
                Job::Eels(q)
            }
            Subcommand::Pinem => {
                let q: PinemParams = typed(p)?;
                if q.alpha_mag.is_empty() {
                    return Err(Error::Config("alpha_mag list is empty".into()));
                }
                for a in &q.alpha_mag {
                    check_nonneg("alpha_mag", *a)?;
                }
                check_nonneg("beta_mag", q.beta_mag)?;
                check_finite("alpha_phase", q.alpha_phase)?;
                check_finite("beta_phase", q.beta_phase)?;
                if let Some(r) = parse_range("n_range", &q.n_range)? {
                    if r.min < 0 {
                        return Err(Error::Config("n_range must start at 0 or above".into()));
                    }
                }
                parse_range("k_range", &q.k_range)?;
                Job::Pinem(q)
            }
            Subcommand::TwoElectron => {
                let q: TwoElectronParams = typed(p)?;
                if q.alpha1_mag.is_empty() {
                    return Err(Error::Config("alpha1_mag list is empty".into()));
                }
                if let Some(a2) = &q.alpha2_mag {
                    if a2.len() != q.alpha1_mag.len() {
                        return Err(Error::Config("alpha1_mag and alpha2_mag differ in length".into()));
                    }
                    for a in a2 {
                        check_nonneg("alpha2_mag", *a)?;
                    }
                }
                for a in &q.alpha1_mag {
                    check_nonneg("alpha1_mag", *a)?;
                }
                if let Some(r) = parse_range("s_range", &q.s_range)? {
                    if r.min < 0 {
                        return Err(Error::Config("s_range must start at 0 or above".into()));
                    }
                }
                parse_range("k_range", &q.k_range)?;
                Job::TwoElectron(q)
            }
            Subcommand::ClassicalLimit => {
                let q: ClassicalLimitParams = typed(p)?;
                check_nonneg("alpha_mag", q.alpha_mag)?;
                check_positive("beta_mag", q.beta_mag)?;
                Job::ClassicalLimit(q)
            }
            Subcommand::OracleCheck => {
                let q: OracleCheckParams = typed(p)?;
                match q.mode {
                    OracleMode::Eels => {
                        check_nonneg(
                            "alpha_mag",
                            q.alpha_mag
                                .ok_or_else(|| Error::Config("eels mode needs alpha_mag".into()))?,
                        )?;
                    }
                    OracleMode::Pinem => {
                        check_nonneg(
                            "alpha_mag",
                            q.alpha_mag
                                .ok_or_else(|| Error::Config("pinem mode needs alpha_mag".into()))?,
                        )?;
                        check_nonneg(
                            "beta_mag",
                            q.beta_mag
                                .ok_or_else(|| Error::Config("pinem mode needs beta_mag".into()))?,
                        )?;
                    }
                    OracleMode::TwoElectron => {
                        check_nonneg(
                            "alpha1_mag",
                            q.alpha1_mag
                                .ok_or_else(|| Error::Config("two-electron mode needs alpha1_mag".into()))?,
                        )?;
                        check_nonneg(
                            "alpha2_mag",
                            q.alpha2_mag
                                .ok_or_else(|| Error::Config("two-electron mode needs alpha2_mag".into()))?,
                        )?;
                    }
                }
                check_positive("tolerance", q.tolerance)?;
                Job::OracleCheck(q)
            }
            Subcommand::Kinematics => {
                let q: KinematicsParams = typed(p)?;
                check_positive("kinetic_kev", q.kinetic_kev)?;
                check_nonneg("bandwidth_ev", q.bandwidth_ev)?;
                check_nonneg("alpha_mag", q.alpha_mag)?;
                check_positive("photon_energy_ev", q.photon_energy_ev)?;
                check_positive("length_um", q.length_um)?;
                Job::Kinematics(q)
            }
            Subcommand::FiberSolve => {
                let q: FiberSolveParams = typed(p)?;
                fiber_spec(
                    q.wavelength_nm,
                    q.core_index,
                    q.clad_index,
                    q.diameter_nm,
                    q.length_um,
                    q.angular,
                    q.standing_wave,
                )?;
                Job::FiberSolve(q)
            }
            Subcommand::FiberSweep => {
                let q: FiberSweepParams = typed(p)?;
                for d in q.diameters()? {
                    fiber_spec(
                        q.wavelength_nm,
                        q.core_index,
                        q.clad_index,
                        d,
                        q.length_um,
                        q.angular,
                        q.standing_wave,
                    )?;
                }
                Job::FiberSweep(q)
            }
        };
        Ok(job)
    }
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

pub const PRESETS: &[&str] = &["pinem-beta10", "two-electron", "fiber-si3n4-1064", "fiber-si-1064"];

fn params(v: Value) -> Parameters {
    match v {
        Value::Object(m) => m.into_iter().collect(),
        _ => unreachable!("preset parameters are objects"),
    }
}

/// Figure-family configurations.
pub fn preset(name: &str) -> Result<RunConfig> {
    let cfg = match name {
        "pinem-beta10" => RunConfig::new(
            Subcommand::Pinem,
            params(json!({ "alpha_mag": [0.05, 0.1, 0.2, 0.5, 1.0], "beta_mag": 10.0 })),
        ),
        "two-electron" => RunConfig::new(
            Subcommand::TwoElectron,
            params(json!({ "alpha1_mag": [0.5, 1.0, 1.5, 2.0, 3.0, 4.0] })),
        ),
        "fiber-si3n4-1064" => RunConfig::new(
            Subcommand::FiberSweep,
            params(json!({
                "wavelength_nm": 1064.0, "core_index": 2.0,
                "diameter_start_nm": 300.0, "diameter_stop_nm": 800.0, "diameter_step_nm": 5.0,
            })),
        ),
        "fiber-si-1064" => RunConfig::new(
            Subcommand::FiberSweep,
            params(json!({
                "wavelength_nm": 1064.0, "core_index": 3.5,
                "diameter_start_nm": 150.0, "diameter_stop_nm": 400.0, "diameter_step_nm": 2.0,
            })),
        ),
        other => {
            return Err(Error::Config(format!(
                "unknown preset '{other}' (known: {})",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(cfg)
}

/// Preset to start from when a subcommand is given `--preset figure`.
pub fn figure_preset(subcommand: Subcommand) -> Result<RunConfig> {
    match subcommand {
        Subcommand::Pinem => preset("pinem-beta10"),
        Subcommand::TwoElectron => preset("two-electron"),
        Subcommand::FiberSweep => preset("fiber-si3n4-1064"),
        other => Err(Error::Config(format!("no figure preset for {other:?}"))),
    }
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_f64(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(v) => json!(v.to_string()),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Missing => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map(Cell::Float).unwrap_or(Cell::Missing)
    }
}

/// Result data: a table, or a single record.
#[derive(Debug, Clone, PartialEq)]
pub enum Data {
    Table { columns: Vec<String>, rows: Vec<Vec<Cell>> },
    Record(Vec<(String, Cell)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub config: RunConfig,
    pub metadata: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    pub data: Data,
}

impl RunOutput {
    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        match &self.data {
            Data::Table { columns, rows } => {
                let i = columns.iter().position(|c| c == name)?;
                Some(rows.iter().map(|r| r[i].clone()).collect())
            }
            Data::Record(fields) => fields.iter().find(|(k, _)| k == name).map(|(_, c)| vec![c.clone()]),
        }
    }

    fn header_config(&self) -> RunConfig {
        RunConfig {
            output_path: None,
            ..self.config.clone()
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# qew_version={VERSION}");
        let _ = writeln!(out, "# config={}", self.header_config().to_json());
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}={}", v.replace('\n', " "));
        }
        for w in &self.warnings {
            let _ = writeln!(out, "# warning={}", w.replace('\n', " "));
        }
        match &self.data {
            Data::Table { columns, rows } => {
                out.push_str(&columns.join(","));
                out.push('\n');
                for row in rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
            }
            Data::Record(fields) => {
                out.push_str("key,value\n");
                for (k, v) in fields {
                    let _ = writeln!(out, "{k},{}", v.csv());
                }
            }
        }
        out
    }

    fn render_json(&self) -> String {
        let data = match &self.data {
            Data::Table { columns, rows } => Value::Array(
                rows.iter()
                    .map(|row| Value::Object(columns.iter().cloned().zip(row.iter().map(Cell::json)).collect()))
                    .collect(),
            ),
            Data::Record(fields) => Value::Object(fields.iter().map(|(k, v)| (k.clone(), v.json())).collect()),
        };
        let doc = json!({
            "metadata": {
                "qew_version": VERSION,
                "config": serde_json::to_value(self.header_config()).expect("config serializes"),
                "info": self.metadata,
                "warnings": self.warnings,
            },
            "data": data,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("json");
        s.push('\n');
        s
    }

    /// The data section alone, for determinism comparisons.
    pub fn data_section(text: &str) -> String {
        if text.trim_start().starts_with('{') {
            let v: Value = serde_json::from_str(text).unwrap_or(Value::Null);
            v.get("data").map(|d| d.to_string()).unwrap_or_default()
        } else {
            text.lines()
                .filter(|l| !l.starts_with('#'))
                .collect::<Vec<_>>()
                .join("\n")
        }
    }
}

/// Recover the config embedded in a rendered output (CSV or JSON).
pub fn config_from_output(text: &str) -> Result<RunConfig> {
    if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let cfg = v
            .pointer("/metadata/config")
            .ok_or_else(|| Error::Parse("no metadata.config in JSON output".into()))?;
        return serde_json::from_value(cfg.clone()).map_err(|e| Error::Parse(e.to_string()));
    }
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# config=") {
            return RunConfig::from_json(rest).map_err(|e| Error::Parse(e.to_string()));
        }
    }
    Err(Error::Parse("no '# config=' line in CSV output".into()))
}

fn missing_probability_warning(label: &str, total: f64, warnings: &mut Vec<String>) {
    if total < 1.0 - PROBABILITY_SLACK {
        warnings.push(format!(
            "{label}: grid holds probability {total:.12}, range truncates the support"
        ));
    }
}

fn grid_rows(grid: &JointAmplitudeGrid, prefix: &[Cell], rows: &mut Vec<Vec<Cell>>) {
    for (a, b, c) in grid.cells() {
        let mut row = prefix.to_vec();
        row.extend([
            Cell::Int(a),
            Cell::Int(b),
            Cell::Float(c.re),
            Cell::Float(c.im),
            Cell::Float(c.norm_sqr()),
        ]);
        rows.push(row);
    }
}

fn merge_metadata(meta: &mut BTreeMap<String, String>, grid: &JointAmplitudeGrid, suffix: &str) {
    meta.insert(
        format!("axis1{suffix}"),
        format!("{}={}", grid.axis1().kind, grid.axis1().range),
    );
    meta.insert(
        format!("axis2{suffix}"),
        format!("{}={}", grid.axis2().kind, grid.axis2().range),
    );
    for (k, v) in grid.metadata() {
        meta.insert(format!("{k}{suffix}"), v.clone());
    }
}

/// Execute a validated config.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let job = config.job()?;
    let mut metadata = BTreeMap::new();
    let mut warnings = Vec::new();
    let data = match job {
        Job::Eels(q) => {
            let alpha = polar(q.alpha_mag, q.alpha_phase);
            let k_max = q.k_max.unwrap_or_else(|| interactions::eels_ranges(alpha).0.max);
            let grid = interactions::eels_grid(alpha, k_max)?;
            missing_probability_warning("eels", grid.total_probability(), &mut warnings);
            merge_metadata(&mut metadata, &grid, "");
            let mut rows = Vec::new();
            grid_rows(&grid, &[], &mut rows);
            Data::Table {
                columns: cols(&["n", "k", "re", "im", "prob"]),
                rows,
            }
        }
        Job::Pinem(q) => {
            let beta = polar(q.beta_mag, q.beta_phase);
            let mut rows = Vec::new();
            for (i, &mag) in q.alpha_mag.iter().enumerate() {
                let alpha = polar(mag, q.alpha_phase);
                let (n_auto, k_auto) = interactions::pinem_ranges(alpha, beta);
                let n_range = parse_range("n_range", &q.n_range)?.unwrap_or(n_auto);
                let k_range = parse_range("k_range", &q.k_range)?.unwrap_or(k_auto);
                let grid = interactions::pinem_grid(alpha, beta, n_range, k_range)?;
                missing_probability_warning(
                    &format!("pinem alpha_mag={mag}"),
                    grid.total_probability(),
                    &mut warnings,
                );
                merge_metadata(&mut metadata, &grid, &format!("[{i}]"));
                grid_rows(&grid, &[Cell::Float(mag)], &mut rows);
            }
            Data::Table {
                columns: cols(&["alpha_mag", "n", "k", "re", "im", "prob"]),
                rows,
            }
        }
        Job::TwoElectron(q) => {
            let a2s = q.alpha2_mag.clone().unwrap_or_else(|| q.alpha1_mag.clone());
            let mut rows = Vec::new();
            for (i, (&m1, &m2)) in q.alpha1_mag.iter().zip(a2s.iter()).enumerate() {
                let a1 = polar(m1, q.alpha1_phase);
                let a2 = polar(m2, q.alpha2_phase);
                let (s_auto, k_auto) = interactions::two_electron_ranges(a1, a2);
                let s_range = parse_range("s_range", &q.s_range)?.unwrap_or(s_auto);
                let k_range = parse_range("k_range", &q.k_range)?.unwrap_or(k_auto);
                let grid = interactions::two_electron_grid(a1, a2, s_range, k_range)?;
                missing_probability_warning(
                    &format!("two-electron alpha1_mag={m1} alpha2_mag={m2}"),
                    grid.total_probability(),
                    &mut warnings,
                );
                merge_metadata(&mut metadata, &grid, &format!("[{i}]"));
                grid_rows(&grid, &[Cell::Float(m1), Cell::Float(m2)], &mut rows);
            }
            Data::Table {
                columns: cols(&["alpha1_mag", "alpha2_mag", "s", "k", "re", "im", "prob"]),
                rows,
            }
        }
        Job::ClassicalLimit(q) => {
            let alpha = polar(q.alpha_mag, q.alpha_phase);
            let beta = polar(q.beta_mag, q.beta_phase);
            let classical = interactions::PinemClassicalParams::from_alpha_beta(alpha, beta);
            let (n_range, k_range) = interactions::pinem_ranges(alpha, beta);
            let grid = interactions::pinem_grid(alpha, beta, n_range, k_range)?;
            let marginal = grid.marginalize(GridAxis::Second);
            metadata.insert("g_abs".into(), classical.g.norm().to_string());
            metadata.insert("locking_phase".into(), classical.locking_phase.to_string());
            let mut rows = Vec::new();
            let mut worst = 0.0f64;
            for k in k_range.iter() {
                let c = classical.amplitude(k);
                let exact = marginal.get(k);
                let diff = (c.norm_sqr() - exact).abs();
                worst = worst.max(diff);
                rows.push(vec![
                    Cell::Int(k),
                    Cell::Float(c.re),
                    Cell::Float(c.im),
                    Cell::Float(c.norm_sqr()),
                    Cell::Float(exact),
                    Cell::Float(diff),
                ]);
            }
            metadata.insert("max_abs_difference".into(), fmt_f64(worst));
            Data::Table {
                columns: cols(&[
                    "k",
                    "classical_re",
                    "classical_im",
                    "classical_prob",
                    "exact_prob",
                    "abs_diff",
                ]),
                rows,
            }
        }
        Job::OracleCheck(q) => {
            let report = match q.mode {
                OracleMode::Eels => oracle::check_eels(polar(q.alpha_mag.unwrap_or(0.0), q.alpha_phase))?,
                OracleMode::Pinem => oracle::check_pinem(
                    polar(q.alpha_mag.unwrap_or(0.0), q.alpha_phase),
                    polar(q.beta_mag.unwrap_or(0.0), q.beta_phase),
                )?,
                OracleMode::TwoElectron => oracle::check_two_electron(
                    polar(q.alpha1_mag.unwrap_or(0.0), q.alpha1_phase),
                    polar(q.alpha2_mag.unwrap_or(0.0), q.alpha2_phase),
                )?,
            };
            warnings.extend(report.warnings.iter().cloned());
            Data::Record(vec![
                ("family".into(), Cell::Text(report.family.clone())),
                ("basis_states".into(), Cell::Int(report.basis_states as i64)),
                ("cells_compared".into(), Cell::Int(report.cells_compared as i64)),
                ("max_abs_error".into(), Cell::Float(report.max_abs_error)),
                ("norm_leak".into(), Cell::Float(report.norm_leak)),
                ("edge_weight".into(), Cell::Float(report.edge_weight)),
                ("off_shell_weight".into(), Cell::Float(report.off_shell_weight)),
                ("tolerance".into(), Cell::Float(q.tolerance)),
                ("passed".into(), Cell::Bool(report.passed(q.tolerance))),
            ])
        }
        Job::Kinematics(q) => {
            let e = kinematics::electron_from_voltage(q.kinetic_kev)?;
            let z = kinematics::dispersion_distance_with(&e, q.bandwidth_ev, q.bandwidth_convention);
            let d = kinematics::deflection(&e, q.alpha_mag, q.photon_energy_ev, q.length_um);
            let conv = serde_json::to_value(q.bandwidth_convention).expect("enum");
            Data::Record(vec![
                ("kinetic_kev".into(), Cell::Float(e.kinetic_energy)),
                ("rest_kev".into(), Cell::Float(e.rest_energy)),
                ("gamma".into(), Cell::Float(e.gamma)),
                ("velocity_fraction".into(), Cell::Float(e.velocity_fraction)),
                ("momentum_times_c_kev".into(), Cell::Float(e.momentum_times_c)),
                ("bandwidth_ev".into(), Cell::Float(q.bandwidth_ev)),
                (
                    "bandwidth_convention".into(),
                    Cell::Text(conv.as_str().unwrap_or_default().to_string()),
                ),
                ("dispersion_distance_mm".into(), Cell::Float(z)),
                ("alpha_mag".into(), Cell::Float(q.alpha_mag)),
                ("photon_energy_ev".into(), Cell::Float(q.photon_energy_ev)),
                ("theta_f_rad".into(), Cell::Float(d.theta_f)),
                ("length_um".into(), Cell::Float(q.length_um)),
                ("displacement_nm".into(), Cell::Float(d.displacement)),
            ])
        }
        Job::FiberSolve(q) => {
            let spec = fiber_spec(
                q.wavelength_nm,
                q.core_index,
                q.clad_index,
                q.diameter_nm,
                q.length_um,
                q.angular,
                q.standing_wave,
            )?;
            let (mode, coupling) = fiber::analyze(&spec)?;
            metadata.insert("residual".into(), fmt_f64(mode.residual));
            metadata.insert("phase_velocity_fraction".into(), fmt_f64(mode.phase_velocity_fraction));
            metadata.insert(
                "surface_field_per_photon_v_per_m".into(),
                fmt_f64(coupling.surface_field_per_photon),
            );
            metadata.insert("a1_v_per_m".into(), fmt_f64(mode.a1));
            metadata.insert("photon_energy_ev".into(), fmt_f64(spec.photon_energy()));
            capped_warnings(q.diameter_nm, &coupling, &mut warnings);
            Data::Table {
                columns: fiber_columns(),
                rows: vec![fiber_row(q.diameter_nm, &mode, &coupling)],
            }
        }
        Job::FiberSweep(q) => {
            let diameters = q.diameters()?;
            let template = fiber_spec(
                q.wavelength_nm,
                q.core_index,
                q.clad_index,
                diameters[0],
                q.length_um,
                q.angular,
                q.standing_wave,
            )?;
            let rows = fiber::sweep_diameter(&template, &diameters)?
                .into_iter()
                .map(|row| match row.result {
                    Ok((mode, coupling)) => {
                        capped_warnings(row.diameter, &coupling, &mut warnings);
                        fiber_row(row.diameter, &mode, &coupling)
                    }
                    Err(e) => {
                        warnings.push(format!("diameter {} nm: {e}", row.diameter));
                        let mut r = vec![Cell::Float(row.diameter)];
                        r.extend(std::iter::repeat_n(Cell::Missing, 8));
                        r
                    }
                })
                .collect();
            Data::Table {
                columns: fiber_columns(),
                rows,
            }
        }
    };
    Ok(RunOutput {
        config: config.clone(),
        metadata,
        warnings,
        data,
    })
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn fiber_columns() -> Vec<String> {
    cols(&[
        "diameter_nm",
        "beta_per_nm",
        "u",
        "w",
        "alpha_max",
        "decay_nm",
        "match_kV",
        "Lc200_um",
        "Lc300_um",
    ])
}

fn fiber_row(diameter: f64, mode: &fiber::FiberMode, c: &fiber::CouplingResult) -> Vec<Cell> {
    vec![
        Cell::Float(diameter),
        Cell::Float(mode.beta_prop),
        Cell::Float(mode.u),
        Cell::Float(mode.w),
        Cell::Float(c.alpha_max),
        Cell::Float(c.decay_length),
        c.phase_matched_voltage.into(),
        Cell::Float(c.coherence_length_200kev.value_um),
        Cell::Float(c.coherence_length_300kev.value_um),
    ]
}

fn capped_warnings(diameter: f64, c: &fiber::CouplingResult, warnings: &mut Vec<String>) {
    for (kev, lc) in [(200, c.coherence_length_200kev), (300, c.coherence_length_300kev)] {
        if lc.capped {
            warnings.push(format!(
                "diameter {diameter} nm: coherence length at {kev} keV diverges, capped"
            ));
        }
    }
}

/// Exit status for an error: 1 for bad input, 2 for numerical failure.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_validation() {
        1
    } else {
        2
    }
}

/// Cap the global rayon pool from `QEW_THREADS`, if set.
pub fn configure_threads() -> Result<()> {
    match std::env::var("QEW_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("QEW_THREADS must be a positive integer, got '{v}'")))?;
            if n == 0 {
                return Err(Error::Config("QEW_THREADS must be at least 1".into()));
            }
            // a pool that already exists is left alone
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            Ok(())
        }
        Err(_) => Ok(()),
    }
}

/// Run a config and write its output to `output_path` or return it.
pub fn execute(config: &RunConfig) -> Result<String> {
    let out = run(config)?;
    let text = out.render(config.format);
    if let Some(path) = &config.output_path {
        std::fs::write(path, &text)?;
    }
    Ok(text)
}

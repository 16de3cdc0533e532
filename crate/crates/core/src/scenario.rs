//! Scenario configuration, azimuth sweeps, sensitivity tables, the combined
//! linear/Monte Carlo validation, and the finite-difference gradient check.
//!
//! # Configuration format
//!
//! Flat `key = value` lines; `#` starts a comment. Angles are in degrees,
//! everything else in SI units. Omitted keys take the defaults below.
//!
//! ```text
//! radar.p_rn = 0            # radar NED position (m)
//! radar.p_re = 0
//! radar.p_rd = 0
//! radar.c_r = 167.4         # radar constant
//! radar.p_fa = 1.7e-4       # probability of false alarm
//!
//! rcs.models = constant, ellipsoid, spikeball
//! rcs.constant.c_c = 0.2
//! rcs.ellipsoid.a = 0.25
//! rcs.ellipsoid.b = 0.15
//! rcs.ellipsoid.c = 0.17
//! rcs.spikeball.a_s = 0.2
//! rcs.spikeball.b_s = 0.15
//! rcs.spikeball.n = 4       # even, >= 2
//!
//! sweep.theta_start_deg = 0
//! sweep.theta_end_deg = 180
//! sweep.theta_step_deg = 0.5
//! sweep.range_m = 650000
//! sweep.down_m = -3000
//! sweep.heading_deg = 0
//!
//! uncertainty.levels = low, medium, high      # any of low, medium, high, custom
//! uncertainty.medium.sigma_pa = 10            # per-level overrides (m)
//! uncertainty.medium.sigma_ang_deg = 1
//!
//! montecarlo.runs = 1000
//! montecarlo.seed = 1
//! ```

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{Vector3, Vector6};
use rand_chacha::rand_core::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::detection::{self, DetectionPoint};
use crate::error::{Error, Result};
use crate::geometry::{self, wrap_angle, AircraftState, AspectAngles, RadarSite};
use crate::jacobians::{self, PdJacobian, PdVariance, PoseCovariance};
use crate::montecarlo::{
    self, coverage_check, csv_error, histogram_vs_gaussian, CoverageReport, EnsembleResult,
    HistogramComparison, LevelLabel, UncertaintyLevel,
};
use crate::rcs::RcsModel;

/// Azimuths at which ensemble histograms are exported.
pub const HISTOGRAM_THETAS_DEG: [f64; 2] = [2.0, 20.0];

/// Nominal flight sweep: the aircraft sits at horizontal distance `range_m`
/// from the origin at azimuth `θ_r` (north component `R·sin θ_r`, east
/// component `R·cos θ_r`), altitude `down_m`, level, with fixed heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSpec {
    theta_start_deg: f64,
    theta_end_deg: f64,
    theta_step_deg: f64,
    range_m: f64,
    down_m: f64,
    heading_rad: f64,
}

impl SweepSpec {
    pub fn new(
        theta_start_deg: f64,
        theta_end_deg: f64,
        theta_step_deg: f64,
        range_m: f64,
        down_m: f64,
        heading_rad: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("theta start", theta_start_deg),
            ("theta end", theta_end_deg),
            ("theta step", theta_step_deg),
            ("range", range_m),
            ("down", down_m),
            ("heading", heading_rad),
        ] {
            if !v.is_finite() {
                return Err(Error::Validation(format!("sweep {name} must be finite")));
            }
        }
        if theta_step_deg <= 0.0 {
            return Err(Error::Validation(format!(
                "sweep step must be positive, got {theta_step_deg}"
            )));
        }
        if theta_end_deg < theta_start_deg {
            return Err(Error::Validation(format!(
                "sweep end {theta_end_deg} is before start {theta_start_deg}"
            )));
        }
        if range_m <= 0.0 {
            return Err(Error::Validation(format!("sweep range must be positive, got {range_m}")));
        }
        let spec = Self {
            theta_start_deg,
            theta_end_deg,
            theta_step_deg,
            range_m,
            down_m,
            heading_rad,
        };
        if spec.point_count() > 10_000_000 {
            return Err(Error::Validation("sweep has more than 10^7 points".into()));
        }
        Ok(spec)
    }

    /// 0–180° in 0.5° steps at 650 km, 3 km altitude, heading north.
    pub fn table_default() -> Self {
        Self {
            theta_start_deg: 0.0,
            theta_end_deg: 180.0,
            theta_step_deg: 0.5,
            range_m: 650_000.0,
            down_m: -3000.0,
            heading_rad: 0.0,
        }
    }

    /// Single-point sweep at `theta_deg` with the same geometry.
    pub fn at_theta(&self, theta_deg: f64) -> Result<Self> {
        Self::new(theta_deg, theta_deg, 1.0, self.range_m, self.down_m, self.heading_rad)
    }

    pub fn point_count(&self) -> usize {
        ((self.theta_end_deg - self.theta_start_deg) / self.theta_step_deg + 1e-9).floor() as usize + 1
    }

    pub fn theta_deg(&self, k: usize) -> f64 {
        self.theta_start_deg + k as f64 * self.theta_step_deg
    }

    /// Sweep index within half a step of `theta_deg`.
    pub fn index_of(&self, theta_deg: f64) -> Option<usize> {
        let k = ((theta_deg - self.theta_start_deg) / self.theta_step_deg).round();
        if k < 0.0 || k as usize >= self.point_count() {
            return None;
        }
        let k = k as usize;
        ((self.theta_deg(k) - theta_deg).abs() <= 0.5 * self.theta_step_deg).then_some(k)
    }

    pub fn nominal_state_at(&self, k: usize) -> Result<AircraftState> {
        let len = self.point_count();
        if k >= len {
            return Err(Error::IndexOutOfRange { index: k, len });
        }
        self.nominal_state_at_theta(self.theta_deg(k))
    }

    pub fn nominal_state_at_theta(&self, theta_deg: f64) -> Result<AircraftState> {
        let (s, c) = theta_deg.to_radians().sin_cos();
        AircraftState::new(
            Vector3::new(self.range_m * s, self.range_m * c, self.down_m),
            0.0,
            0.0,
            self.heading_rad,
        )
    }

    pub fn theta_start_deg(&self) -> f64 {
        self.theta_start_deg
    }

    pub fn theta_end_deg(&self) -> f64 {
        self.theta_end_deg
    }

    pub fn theta_step_deg(&self) -> f64 {
        self.theta_step_deg
    }

    pub fn range_m(&self) -> f64 {
        self.range_m
    }

    pub fn down_m(&self) -> f64 {
        self.down_m
    }

    pub fn heading_rad(&self) -> f64 {
        self.heading_rad
    }
}

/// Complete scenario. Every model is analysed at every level.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub radar: RadarSite,
    pub models: Vec<RcsModel>,
    pub sweep: SweepSpec,
    pub levels: Vec<UncertaintyLevel>,
    pub mc_runs: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            radar: RadarSite::new(Vector3::zeros(), 167.4, 1.7e-4).expect("default radar is valid"),
            models: vec![
                RcsModel::default_constant(),
                RcsModel::default_ellipsoid(),
                RcsModel::default_spikeball(),
            ],
            sweep: SweepSpec::table_default(),
            levels: vec![UncertaintyLevel::low(), UncertaintyLevel::medium(), UncertaintyLevel::high()],
            mc_runs: 1000,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn model(&self, name: &str) -> Option<&RcsModel> {
        self.models.iter().find(|m| m.name() == name)
    }

    pub fn level(&self, label: LevelLabel) -> Option<&UncertaintyLevel> {
        self.levels.iter().find(|l| l.label == label)
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

const FIXED_KEYS: &[&str] = &[
    "radar.p_rn",
    "radar.p_re",
    "radar.p_rd",
    "radar.c_r",
    "radar.p_fa",
    "rcs.models",
    "rcs.constant.c_c",
    "rcs.ellipsoid.a",
    "rcs.ellipsoid.b",
    "rcs.ellipsoid.c",
    "rcs.spikeball.a_s",
    "rcs.spikeball.b_s",
    "rcs.spikeball.n",
    "sweep.theta_start_deg",
    "sweep.theta_end_deg",
    "sweep.theta_step_deg",
    "sweep.range_m",
    "sweep.down_m",
    "sweep.heading_deg",
    "uncertainty.levels",
    "montecarlo.runs",
    "montecarlo.seed",
];

fn is_known_key(key: &str) -> bool {
    if FIXED_KEYS.contains(&key) {
        return true;
    }
    let mut parts = key.split('.');
    matches!(
        (parts.next(), parts.next().and_then(LevelLabel::parse), parts.next(), parts.next()),
        (Some("uncertainty"), Some(_), Some("sigma_pa" | "sigma_ang_deg"), None)
    )
}

struct Entries(HashMap<String, (usize, String)>);

impl Entries {
    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.0.get(key) {
            None => Ok(default),
            Some((line, raw)) => raw.parse().map_err(|_| Error::Parse {
                line: *line,
                message: format!("`{key}`: cannot parse `{raw}`"),
            }),
        }
    }

    fn list(&self, key: &str) -> Option<(usize, Vec<String>)> {
        self.0.get(key).map(|(line, raw)| {
            (
                *line,
                raw.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
            )
        })
    }
}

fn validation(e: Error) -> Error {
    match e {
        Error::Validation(_) => e,
        other => Error::Validation(other.to_string()),
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut map = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Parse {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            });
        };
        let key = key.trim();
        if !is_known_key(key) {
            return Err(Error::Parse {
                line,
                message: format!("unknown key `{key}`"),
            });
        }
        if let Some((first, _)) = map.insert(key.to_string(), (line, value.trim().to_string())) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate key `{key}` (first set on line {first})"),
            });
        }
    }
    let e = Entries(map);
    let d = ScenarioConfig::default();

    let radar = RadarSite::new(
        Vector3::new(
            e.parse("radar.p_rn", 0.0)?,
            e.parse("radar.p_re", 0.0)?,
            e.parse("radar.p_rd", 0.0)?,
        ),
        e.parse("radar.c_r", d.radar.c_r())?,
        e.parse("radar.p_fa", d.radar.p_fa())?,
    )
    .map_err(validation)?;

    let constant = RcsModel::constant(e.parse("rcs.constant.c_c", 0.2)?).map_err(validation)?;
    let ellipsoid = RcsModel::ellipsoid(
        e.parse("rcs.ellipsoid.a", 0.25)?,
        e.parse("rcs.ellipsoid.b", 0.15)?,
        e.parse("rcs.ellipsoid.c", 0.17)?,
    )
    .map_err(validation)?;
    let n: u32 = e.parse("rcs.spikeball.n", 4)?;
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::Validation(format!("spikeball lobe count must be even and >= 2, got {n}")));
    }
    let spikeball = RcsModel::spikeball(e.parse("rcs.spikeball.a_s", 0.2)?, e.parse("rcs.spikeball.b_s", 0.15)?, n)
        .map_err(validation)?;

    let models = match e.list("rcs.models") {
        None => vec![constant, ellipsoid, spikeball],
        Some((line, names)) => {
            let mut models = Vec::new();
            for name in names {
                let m = match name.as_str() {
                    "constant" => constant,
                    "ellipsoid" => ellipsoid,
                    "spikeball" => spikeball,
                    other => {
                        return Err(Error::Parse {
                            line,
                            message: format!("unknown RCS model `{other}`"),
                        })
                    }
                };
                if models.contains(&m) {
                    return Err(Error::Validation(format!("RCS model `{name}` listed twice")));
                }
                models.push(m);
            }
            models
        }
    };
    if models.is_empty() {
        return Err(Error::Validation("at least one RCS model is required".into()));
    }

    let sweep = SweepSpec::new(
        e.parse("sweep.theta_start_deg", 0.0)?,
        e.parse("sweep.theta_end_deg", 180.0)?,
        e.parse("sweep.theta_step_deg", 0.5)?,
        e.parse("sweep.range_m", 650_000.0)?,
        e.parse("sweep.down_m", -3000.0)?,
        e.parse::<f64>("sweep.heading_deg", 0.0)?.to_radians(),
    )?;

    let labels = match e.list("uncertainty.levels") {
        None => vec![LevelLabel::Low, LevelLabel::Medium, LevelLabel::High],
        Some((line, names)) => names
            .iter()
            .map(|n| {
                LevelLabel::parse(n).ok_or_else(|| Error::Parse {
                    line,
                    message: format!("unknown uncertainty level `{n}`"),
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    if labels.is_empty() {
        return Err(Error::Validation("at least one uncertainty level is required".into()));
    }
    let mut levels = Vec::new();
    for label in labels {
        if levels.iter().any(|l: &UncertaintyLevel| l.label == label) {
            return Err(Error::Validation(format!("uncertainty level `{label}` listed twice")));
        }
        let preset = UncertaintyLevel::preset(label);
        let sigma_pa = e.parse(&format!("uncertainty.{label}.sigma_pa"), preset.sigma_pa())?;
        let sigma_ang_deg = e.parse(
            &format!("uncertainty.{label}.sigma_ang_deg"),
            preset.sigma_ang().to_degrees(),
        )?;
        levels.push(UncertaintyLevel::new(label, sigma_pa, sigma_ang_deg.to_radians()).map_err(validation)?);
    }

    let mc_runs: usize = e.parse("montecarlo.runs", d.mc_runs)?;
    if mc_runs == 0 {
        return Err(Error::Validation("montecarlo.runs must be at least 1".into()));
    }
    let seed = e.parse("montecarlo.seed", d.seed)?;

    Ok(ScenarioConfig {
        radar,
        models,
        sweep,
        levels,
        mc_runs,
        seed,
    })
}

/// Nominal detection, its gradient and the propagated variance at one pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionAnalysis {
    pub point: DetectionPoint,
    pub jacobian: PdJacobian,
    pub variance: PdVariance,
}

impl DetectionAnalysis {
    pub fn three_sigma_pd(&self) -> f64 {
        3.0 * self.variance.sigma_pd
    }
}

pub fn analyze(
    state: &AircraftState,
    radar: &RadarSite,
    model: &RcsModel,
    covariance: &PoseCovariance,
) -> Result<DetectionAnalysis> {
    let point = detection::evaluate_point(state, radar, model)?;
    let jacobian = jacobians::assemble_a_p(state, radar, model)?;
    let variance = jacobians::propagate_variance(&jacobian, covariance)?;
    Ok(DetectionAnalysis {
        point,
        jacobian,
        variance,
    })
}

/// Flat output record for one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisRecord {
    pub model: String,
    pub level: String,
    pub theta_r_deg: f64,
    pub range_m: f64,
    pub lambda_deg: Option<f64>,
    pub phi_deg: Option<f64>,
    pub sigma_r: f64,
    pub snr: f64,
    pub p_d: f64,
    pub dpd_dpn: f64,
    pub dpd_dpe: f64,
    pub dpd_dpd: f64,
    pub dpd_droll: f64,
    pub dpd_dpitch: f64,
    pub dpd_dyaw: f64,
    pub sigma_pd: f64,
    pub three_sigma_pd: f64,
    pub near_nadir: bool,
    pub near_gimbal_lock: bool,
    pub near_rcs_corner: bool,
}

impl AnalysisRecord {
    pub fn new(model: &RcsModel, level: &UncertaintyLevel, theta_r_deg: f64, a: &DetectionAnalysis) -> Self {
        let p = &a.jacobian.partials;
        let flags = a.jacobian.flags;
        Self {
            model: model.name().to_string(),
            level: level.label.to_string(),
            theta_r_deg,
            range_m: a.point.range_m,
            lambda_deg: a.point.angles.map(|x| x.lambda.to_degrees()),
            phi_deg: a.point.angles.map(|x| x.phi.to_degrees()),
            sigma_r: a.point.sigma_r,
            snr: a.point.snr,
            p_d: a.point.p_d,
            dpd_dpn: p[0],
            dpd_dpe: p[1],
            dpd_dpd: p[2],
            dpd_droll: p[3],
            dpd_dpitch: p[4],
            dpd_dyaw: p[5],
            sigma_pd: a.variance.sigma_pd,
            three_sigma_pd: a.three_sigma_pd(),
            near_nadir: flags.near_nadir,
            near_gimbal_lock: flags.near_gimbal_lock,
            near_rcs_corner: flags.near_rcs_corner,
        }
    }
}

/// Linearised analysis of one model at one level along the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub model: RcsModel,
    pub level: UncertaintyLevel,
    pub theta_r_deg: Vec<f64>,
    pub rows: Vec<DetectionAnalysis>,
}

impl SweepTable {
    pub fn sigma_pd(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.variance.sigma_pd).collect()
    }

    pub fn nominal_pd(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.point.p_d).collect()
    }

    /// Largest `3σ_pd` and its sweep index.
    pub fn max_three_sigma(&self) -> (f64, usize) {
        self.rows
            .iter()
            .enumerate()
            .fold((0.0, 0), |acc, (k, r)| if r.three_sigma_pd() > acc.0 { (r.three_sigma_pd(), k) } else { acc })
    }

    pub fn records(&self) -> Vec<AnalysisRecord> {
        self.rows
            .iter()
            .zip(&self.theta_r_deg)
            .map(|(r, &t)| AnalysisRecord::new(&self.model, &self.level, t, r))
            .collect()
    }

    pub fn file_stem(&self) -> String {
        format!("{}_{}", self.model.name(), self.level.label)
    }
}

/// Linearised sweep of one model at one level.
pub fn sweep_table(
    sweep: &SweepSpec,
    radar: &RadarSite,
    model: &RcsModel,
    level: &UncertaintyLevel,
) -> Result<SweepTable> {
    let covariance = level.covariance();
    let rows = (0..sweep.point_count())
        .into_par_iter()
        .map(|k| analyze(&sweep.nominal_state_at(k)?, radar, model, &covariance))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        model: *model,
        level: *level,
        theta_r_deg: (0..sweep.point_count()).map(|k| sweep.theta_deg(k)).collect(),
        rows,
    })
}

/// Every model at every level, model-major.
pub fn linear_sweep(config: &ScenarioConfig) -> Result<Vec<SweepTable>> {
    let mut tables = Vec::new();
    for model in &config.models {
        for level in &config.levels {
            tables.push(sweep_table(&config.sweep, &config.radar, model, level)?);
        }
    }
    Ok(tables)
}

/// Linear prediction, ensemble, coverage and histograms for one model/level.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationEntry {
    pub table: SweepTable,
    pub ensemble: EnsembleResult,
    pub coverage: CoverageReport,
    pub histograms: Vec<HistogramComparison>,
}

impl ValidationEntry {
    pub fn file_stem(&self) -> String {
        self.table.file_stem()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub runs: usize,
    pub seed: u64,
    pub entries: Vec<ValidationEntry>,
}

/// Runs one model/level through the linear sweep and the Monte Carlo oracle.
pub fn validate_entry(
    config: &ScenarioConfig,
    model: &RcsModel,
    level: &UncertaintyLevel,
) -> Result<ValidationEntry> {
    let table = sweep_table(&config.sweep, &config.radar, model, level)?;
    let ensemble = montecarlo::run_ensemble(&config.sweep, &config.radar, model, level, config.mc_runs, config.seed)?;
    let sigma = table.sigma_pd();
    let coverage = coverage_check(&ensemble, &sigma)?;
    let mut histograms = Vec::new();
    if ensemble.run_count >= montecarlo::MIN_HISTOGRAM_SAMPLES {
        for theta in HISTOGRAM_THETAS_DEG {
            if let Some(k) = config.sweep.index_of(theta) {
                histograms.push(histogram_vs_gaussian(&ensemble, k, sigma[k])?);
            }
        }
    }
    Ok(ValidationEntry {
        table,
        ensemble,
        coverage,
        histograms,
    })
}

/// Every model at every level. All entries share the configured seed.
pub fn validate_sweep(config: &ScenarioConfig) -> Result<ValidationReport> {
    let mut entries = Vec::new();
    for model in &config.models {
        for level in &config.levels {
            entries.push(validate_entry(config, model, level)?);
        }
    }
    Ok(ValidationReport {
        runs: config.mc_runs,
        seed: config.seed,
        entries,
    })
}

fn create_file(dir: &Path, name: &str) -> Result<(PathBuf, fs::File)> {
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(|e| Error::Io(format!("cannot create {}: {e}", path.display())))?;
    Ok((path, file))
}

fn write_records<T: Serialize, W: Write>(records: &[T], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize + ?Sized>(value: &T, writer: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(writer, value).map_err(|e| Error::Io(e.to_string()))
}

/// Writes `sweep_<model>_<level>.csv` (and `.json` when asked) per table.
pub fn write_sweep_outputs(dir: &Path, tables: &[SweepTable], json: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for t in tables {
        let records = t.records();
        let (path, file) = create_file(dir, &format!("sweep_{}.csv", t.file_stem()))?;
        write_records(&records, file)?;
        written.push(path);
        if json {
            let (path, file) = create_file(dir, &format!("sweep_{}.json", t.file_stem()))?;
            write_json(&records, file)?;
            written.push(path);
        }
    }
    written.push(write_readme(dir)?);
    Ok(written)
}

/// Per-point linear and ensemble statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandRecord {
    pub theta_r_deg: f64,
    pub nominal_pd: f64,
    pub sigma_pd: f64,
    pub three_sigma_pd: f64,
    pub mc_mean: f64,
    pub mc_std: f64,
    pub mc_min: f64,
    pub mc_max: f64,
    pub coverage: f64,
}

/// One line per model/level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageSummaryRecord {
    pub model: String,
    pub level: String,
    pub runs: usize,
    pub seed: u64,
    pub aggregate_coverage: f64,
    pub worst_theta_r_deg: f64,
    pub worst_coverage: f64,
    pub max_abs_deviation: f64,
    pub max_deviation_theta_r_deg: f64,
    pub max_three_sigma_pd: f64,
    pub resamples: usize,
}

/// One line per exported histogram.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramSummaryRecord {
    pub model: String,
    pub level: String,
    pub theta_r_deg: f64,
    pub nominal_pd: f64,
    pub sigma_pd: f64,
    pub mc_mean: f64,
    pub mc_std: f64,
    pub skewness: f64,
    pub mean_bias: f64,
    pub bins: usize,
}

impl ValidationEntry {
    pub fn band_records(&self) -> Vec<BandRecord> {
        let e = &self.ensemble;
        (0..e.points())
            .map(|k| BandRecord {
                theta_r_deg: e.theta_r_deg[k],
                nominal_pd: e.nominal_pd[k],
                sigma_pd: self.table.rows[k].variance.sigma_pd,
                three_sigma_pd: self.table.rows[k].three_sigma_pd(),
                mc_mean: e.mean[k],
                mc_std: e.std[k],
                mc_min: e.min[k],
                mc_max: e.max[k],
                coverage: self.coverage.per_k[k],
            })
            .collect()
    }

    pub fn summary(&self) -> CoverageSummaryRecord {
        let e = &self.ensemble;
        let (dev, dev_k) = e.max_abs_deviation();
        CoverageSummaryRecord {
            model: e.model.clone(),
            level: e.level.to_string(),
            runs: e.run_count,
            seed: e.rng_seed,
            aggregate_coverage: self.coverage.aggregate,
            worst_theta_r_deg: e.theta_r_deg[self.coverage.worst_k],
            worst_coverage: self.coverage.worst_fraction,
            max_abs_deviation: dev,
            max_deviation_theta_r_deg: e.theta_r_deg[dev_k],
            max_three_sigma_pd: self.table.max_three_sigma().0,
            resamples: e.resample_count,
        }
    }

    pub fn histogram_summaries(&self) -> Vec<HistogramSummaryRecord> {
        self.histograms
            .iter()
            .map(|h| HistogramSummaryRecord {
                model: self.ensemble.model.clone(),
                level: self.ensemble.level.to_string(),
                theta_r_deg: h.theta_r_deg,
                nominal_pd: h.nominal_pd,
                sigma_pd: h.sigma_pd,
                mc_mean: h.ensemble_mean,
                mc_std: h.ensemble_std,
                skewness: h.skewness,
                mean_bias: h.mean_bias,
                bins: h.counts.len(),
            })
            .collect()
    }
}

fn theta_tag(theta: f64) -> String {
    format!("{theta}").replace('.', "p").replace('-', "m")
}

/// Writes ensemble, band, coverage and histogram files for a validation run.
pub fn write_validation_outputs(dir: &Path, report: &ValidationReport, json: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut summaries = Vec::new();
    let mut hist_summaries = Vec::new();
    for entry in &report.entries {
        let stem = entry.file_stem();
        let (path, file) = create_file(dir, &format!("ensemble_{stem}.csv"))?;
        entry.ensemble.write_csv(std::io::BufWriter::new(file))?;
        written.push(path);

        let bands = entry.band_records();
        let (path, file) = create_file(dir, &format!("band_{stem}.csv"))?;
        write_records(&bands, file)?;
        written.push(path);
        if json {
            let (path, file) = create_file(dir, &format!("band_{stem}.json"))?;
            write_json(&bands, file)?;
            written.push(path);
        }

        for h in &entry.histograms {
            let (path, file) = create_file(dir, &format!("histogram_{stem}_theta{}.csv", theta_tag(h.theta_r_deg)))?;
            h.write_csv(file)?;
            written.push(path);
        }
        summaries.push(entry.summary());
        hist_summaries.extend(entry.histogram_summaries());
    }
    let (path, file) = create_file(dir, "coverage_summary.csv")?;
    write_records(&summaries, file)?;
    written.push(path);
    let (path, file) = create_file(dir, "histogram_summary.csv")?;
    write_records(&hist_summaries, file)?;
    written.push(path);
    if json {
        let (path, file) = create_file(dir, "coverage_summary.json")?;
        write_json(&summaries, file)?;
        written.push(path);
        let (path, file) = create_file(dir, "histogram_summary.json")?;
        write_json(&hist_summaries, file)?;
        written.push(path);
    }
    written.push(write_readme(dir)?);
    Ok(written)
}

const OUTPUT_README: &str = "\
Output files

sweep_<model>_<level>.csv
    Linearised analysis along the azimuth sweep. Columns: model, level,
    theta_r_deg, range_m, lambda_deg, phi_deg, sigma_r, snr, p_d, the six
    gradient entries dpd_dpn .. dpd_dyaw, sigma_pd, three_sigma_pd and the
    near_nadir / near_gimbal_lock / near_rcs_corner flags.
    Plot three_sigma_pd against theta_r_deg, one curve per level, for the
    sensitivity figures.

ensemble_<model>_<level>.csv
    Raw Monte Carlo samples. Columns: run, theta_r_deg, p_d.
    Plot p_d - nominal p_d per run as thin grey lines.

band_<model>_<level>.csv
    theta_r_deg, nominal_pd, sigma_pd, three_sigma_pd, mc_mean, mc_std,
    mc_min, mc_max and the per-point 3-sigma coverage fraction.
    Overlay +/- three_sigma_pd as dashed lines on the ensemble plot, and
    nominal_pd alone for the nominal detection curves.

histogram_<model>_<level>_theta<deg>.csv
    Freedman-Diaconis histogram of the ensemble at one azimuth. Columns:
    bin_lo, bin_hi, count, density (unit area) and gaussian_pdf, the
    linearised Gaussian N(nominal_pd, sigma_pd^2) at the bin centre.

coverage_summary.csv
    Aggregate and worst-point coverage, largest ensemble deviation and
    largest three_sigma_pd for each model/level.

histogram_summary.csv
    Skewness and mean bias (ensemble mean - nominal p_d) per histogram.

Files ending in .json mirror the CSV of the same name record for record.
";

fn write_readme(dir: &Path) -> Result<PathBuf> {
    let (path, mut file) = create_file(dir, "README.txt")?;
    file.write_all(OUTPUT_README.as_bytes())?;
    Ok(path)
}

/// Finite-difference steps and tolerances for the gradient check.
pub mod gradcheck_params {
    /// Position step (m).
    pub const POSITION_STEP: f64 = 1e-2;
    /// Attitude and aspect-angle step (rad).
    pub const ANGLE_STEP: f64 = 1e-6;
    /// Relative step for SNR, RCS, range and body-vector inputs.
    pub const RELATIVE_STEP: f64 = 1e-6;
    /// Each block and the assembled gradient pass if
    /// `|a - f| <= max(TOLERANCE·|f|, ABS_FLOOR)`.
    pub const TOLERANCE: f64 = 1e-6;
    pub const ABS_FLOOR: f64 = 1e-8;
    /// Within a block, entries smaller than this fraction of the largest
    /// finite-difference entry are compared against that fraction instead.
    pub const BLOCK_FLOOR: f64 = 1e-2;
    /// Spikeball samples with `|sin(n·λ/2)|` below this are excluded.
    pub const CORNER_EXCLUSION: f64 = 1e-4;
    /// Samples with horizontal/total body distance below this are excluded.
    pub const NADIR_EXCLUSION: f64 = 1e-3;
    /// Samples with `|cos θ|` below this are excluded.
    pub const GIMBAL_EXCLUSION: f64 = 1e-3;
}

use gradcheck_params as gp;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockError {
    pub block: &'static str,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelGradcheck {
    pub model: String,
    pub evaluated: usize,
    pub excluded_rcs_corner: usize,
    pub excluded_nadir: usize,
    pub excluded_gimbal: usize,
    pub blocks: Vec<BlockError>,
    /// Largest `|a - f| / max(|f|, ABS_FLOOR/TOLERANCE)` over the assembled gradient.
    pub a_p_max_error: f64,
    /// Largest `|a - f|` over the attitude entries of the assembled gradient.
    pub attitude_max_abs_diff: f64,
    pub worst_pose: Option<[f64; 6]>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub models: Vec<ModelGradcheck>,
    pub pass: bool,
}

fn uniform<R: RngCore>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + (hi - lo) * u
}

/// Random pose: range 10–1000 km, any azimuth, line-of-sight elevation
/// within ±30°, roll and pitch within ±60°, any heading.
pub fn random_pose<R: RngCore>(radar: &RadarSite, rng: &mut R) -> AircraftState {
    use std::f64::consts::PI;
    let r = uniform(rng, 10e3, 1000e3);
    let az = uniform(rng, 0.0, 2.0 * PI);
    let el = uniform(rng, -30f64.to_radians(), 30f64.to_radians());
    let roll = uniform(rng, -60f64.to_radians(), 60f64.to_radians());
    let pitch = uniform(rng, -60f64.to_radians(), 60f64.to_radians());
    let yaw = uniform(rng, -PI, PI);
    let offset = Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), -el.sin()) * r;
    AircraftState::new(radar.position() + offset, roll, pitch, yaw).expect("finite pose")
}

fn central(f: impl Fn(f64) -> Result<f64>, h: f64) -> Result<f64> {
    Ok((f(h)? - f(-h)?) / (2.0 * h))
}

/// Normalised error of analytic entries `a` against finite differences `f`:
/// `|a - f| / max(|f|, BLOCK_FLOOR·max|f|, abs_floor/TOLERANCE)`.
/// Exact zeros compare as absolute differences.
fn block_error(a: &[f64], f: &[f64], abs_floor: f64) -> f64 {
    let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (gp::BLOCK_FLOOR * scale).max(abs_floor / gp::TOLERANCE);
    a.iter()
        .zip(f)
        .map(|(&a, &f)| {
            let denom = f.abs().max(floor);
            if denom > 0.0 {
                (a - f).abs() / denom
            } else {
                (a - f).abs()
            }
        })
        .fold(0.0, f64::max)
}

fn state_step(k: usize) -> f64 {
    if k < 3 {
        gp::POSITION_STEP
    } else {
        gp::ANGLE_STEP
    }
}

fn shifted(state: &AircraftState, k: usize, delta: f64) -> Result<AircraftState> {
    let mut x = state.to_vector();
    x[k] += delta;
    AircraftState::from_vector(&x)
}

#[derive(Default)]
struct BlockMax([f64; 7]);

const BLOCK_NAMES: [&str; 7] = [
    "dpd_dsnr",
    "dsnr_drange",
    "drange_dstate",
    "dsnr_drcs",
    "drcs_dangles",
    "dangles_dbody",
    "dbody_dstate",
];

/// Block-by-block and assembled finite-difference errors at one pose.
fn check_pose(
    state: &AircraftState,
    radar: &RadarSite,
    model: &RcsModel,
    blocks: &mut BlockMax,
) -> Result<(f64, f64)> {
    let p_fa = radar.p_fa();
    let point = detection::evaluate_point(state, radar, model)?;
    let body = geometry::radar_in_body(state, radar);
    let mut errs = [0.0; 7];

    let s = point.snr;
    let h = gp::RELATIVE_STEP * s.max(f64::MIN_POSITIVE);
    let f = central(|d| detection::probability_of_detection(s + d, p_fa), h)?;
    errs[0] = block_error(&[jacobians::d_pd_d_snr(s, p_fa)?], &[f], gp::ABS_FLOOR);

    let (sigma, r) = (point.sigma_r, point.range_m);
    let h = gp::RELATIVE_STEP * r;
    let f = central(|d| detection::snr(radar, sigma, r + d), h)?;
    errs[1] = block_error(&[jacobians::d_snr_d_range(radar, sigma, r)?], &[f], gp::ABS_FLOOR);

    let a = jacobians::d_range_d_state(state, radar)?;
    let mut f = [0.0; 6];
    for (k, fk) in f.iter_mut().enumerate() {
        *fk = central(|d| Ok(geometry::range(&shifted(state, k, d)?, radar)), state_step(k))?;
    }
    errs[2] = block_error(a.as_slice(), &f, gp::ABS_FLOOR);

    let h = gp::RELATIVE_STEP * sigma;
    let f = central(|d| detection::snr(radar, sigma + d, r), h)?;
    errs[3] = block_error(&[jacobians::d_snr_d_sigma(radar, r)?], &[f], gp::ABS_FLOOR);

    if let Some(angles) = point.angles {
        let a = jacobians::d_rcs_d_angles(model, &angles)?.gradient;
        let at = |l: f64, p: f64| model.value(&AspectAngles { lambda: l, phi: p });
        let f = [
            central(|d| at(angles.lambda + d, angles.phi), gp::ANGLE_STEP)?,
            central(|d| at(angles.lambda, angles.phi + d), gp::ANGLE_STEP)?,
        ];
        errs[4] = block_error(a.as_slice(), &f, gp::ABS_FLOOR);

        let a = jacobians::d_angles_d_body(&body)?;
        let h = gp::RELATIVE_STEP * body.as_vector().norm();
        let mut worst: f64 = 0.0;
        for row in 0..2 {
            let mut f = [0.0; 3];
            for (j, fj) in f.iter_mut().enumerate() {
                let eval = |d: f64| {
                    let mut v = body.as_vector();
                    v[j] += d;
                    geometry::aspect_angles(&v.into())
                };
                let (plus, minus) = (eval(h)?, eval(-h)?);
                let diff = if row == 0 {
                    wrap_angle(plus.lambda - minus.lambda)
                } else {
                    plus.phi - minus.phi
                };
                *fj = diff / (2.0 * h);
            }
            let a_row: Vec<f64> = (0..3).map(|j| a[(row, j)]).collect();
            worst = worst.max(block_error(&a_row, &f, gp::ABS_FLOOR));
        }
        errs[5] = worst;
    }

    let a = jacobians::d_body_d_state(state, radar);
    let mut worst: f64 = 0.0;
    for k in 0..6 {
        let eval = |d: f64| Ok::<_, Error>(geometry::radar_in_body(&shifted(state, k, d)?, radar).as_vector());
        let f = (eval(state_step(k))? - eval(-state_step(k))?) / (2.0 * state_step(k));
        let a_col: Vec<f64> = (0..3).map(|i| a[(i, k)]).collect();
        worst = worst.max(block_error(&a_col, f.as_slice(), gp::ABS_FLOOR));
    }
    errs[6] = worst;

    for (m, e) in blocks.0.iter_mut().zip(errs) {
        *m = m.max(e);
    }

    let a_p = jacobians::assemble_a_p(state, radar, model)?.partials;
    let mut a_err: f64 = 0.0;
    let mut attitude_diff: f64 = 0.0;
    for k in 0..6 {
        let f = central(
            |d| Ok(detection::evaluate_point(&shifted(state, k, d)?, radar, model)?.p_d),
            state_step(k),
        )?;
        a_err = a_err.max((a_p[k] - f).abs() / f.abs().max(gp::ABS_FLOOR / gp::TOLERANCE));
        if k >= 3 {
            attitude_diff = attitude_diff.max((a_p[k] - f).abs());
        }
    }
    Ok((a_err, attitude_diff))
}

/// Exclusion reason for a pose, if any.
fn excluded(state: &AircraftState, radar: &RadarSite, model: &RcsModel) -> Option<&'static str> {
    if state.pitch().cos().abs() < gp::GIMBAL_EXCLUSION {
        return Some("gimbal");
    }
    let body = geometry::radar_in_body(state, radar);
    if body.horizontal_norm() < gp::NADIR_EXCLUSION * body.as_vector().norm() {
        return Some("nadir");
    }
    if let RcsModel::SimpleSpikeball { n, .. } = model {
        let lambda = body.y.atan2(body.x);
        if (0.5 * f64::from(*n) * lambda).sin().abs() < gp::CORNER_EXCLUSION {
            return Some("corner");
        }
    }
    None
}

/// Compares every analytic block and the assembled gradient against central
/// differences at `samples` random poses per model.
pub fn gradcheck(config: &ScenarioConfig, samples: usize, seed: u64) -> Result<GradcheckReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter("gradcheck needs at least one sample".into()));
    }
    let mut rng = montecarlo::run_rng(seed, 0);
    let poses: Vec<AircraftState> = (0..samples).map(|_| random_pose(&config.radar, &mut rng)).collect();

    let mut models = Vec::new();
    for model in &config.models {
        let mut blocks = BlockMax::default();
        let (mut corner, mut nadir, mut gimbal, mut evaluated) = (0, 0, 0, 0);
        let mut a_p_max: f64 = 0.0;
        let mut attitude_max: f64 = 0.0;
        let mut worst_pose = None;
        for pose in &poses {
            match excluded(pose, &config.radar, model) {
                Some("corner") => corner += 1,
                Some("nadir") => nadir += 1,
                Some(_) => gimbal += 1,
                None => {
                    let (e, att) = check_pose(pose, &config.radar, model, &mut blocks)?;
                    evaluated += 1;
                    attitude_max = attitude_max.max(att);
                    if e > a_p_max || worst_pose.is_none() {
                        a_p_max = a_p_max.max(e);
                        let v: Vector6<f64> = pose.to_vector();
                        worst_pose = Some([v[0], v[1], v[2], v[3], v[4], v[5]]);
                    }
                }
            }
        }
        if corner > 0 {
            log::info!("{}: {corner} samples excluded near RCS corners", model.name());
        }
        let blocks: Vec<BlockError> = BLOCK_NAMES
            .iter()
            .zip(blocks.0)
            .map(|(&block, max_error)| BlockError { block, max_error })
            .collect();
        let pass = a_p_max < gp::TOLERANCE && blocks.iter().all(|b| b.max_error < gp::TOLERANCE);
        models.push(ModelGradcheck {
            model: model.name().to_string(),
            evaluated,
            excluded_rcs_corner: corner,
            excluded_nadir: nadir,
            excluded_gimbal: gimbal,
            blocks,
            a_p_max_error: a_p_max,
            attitude_max_abs_diff: attitude_max,
            worst_pose,
            pass,
        });
    }
    let pass = models.iter().all(|m| m.pass);
    Ok(GradcheckReport {
        samples,
        seed,
        tolerance: gp::TOLERANCE,
        models,
        pass,
    })
}

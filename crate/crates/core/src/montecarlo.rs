//! Monte Carlo oracle for the linearised detection-probability variance.
//!
//! Each run perturbs the nominal pose at every sweep point with an
//! independent zero-mean Gaussian draw and evaluates the nonlinear `P_D`.
//!
//! # Random numbers
//!
//! Run `i` of an ensemble seeded with `s` draws from ChaCha8 (the
//! `rand_chacha` stream cipher generator) created by `seed_from_u64(s)` and
//! then moved to stream `i` with `set_stream(i)`. Runs are therefore
//! independent of scheduling and may execute in parallel.
//!
//! Standard normals come from the Box–Muller transform. Each pair consumes
//! two `u64` words `w1, w2`, mapped to `u = 1 - (w >> 11)·2⁻⁵³ ∈ (0, 1]`:
//!
//! ```text
//! z0 = √(-2 ln u1)·cos(2π·u2)
//! z1 = √(-2 ln u1)·sin(2π·u2)
//! ```
//!
//! A six-state perturbation uses three pairs in state order
//! `(p_n, p_e, p_d, roll, pitch, yaw)`, scaled by `σ_pa` and `σ_ang`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use nalgebra::Vector6;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::detection;
use crate::error::{Error, Result};
use crate::geometry::{AircraftState, RadarSite};
use crate::jacobians::PoseCovariance;
use crate::rcs::RcsModel;
use crate::scenario::SweepSpec;

/// Consecutive nadir rejections tolerated before a sample is abandoned.
const MAX_RESAMPLES: usize = 10_000;
/// Minimum ensemble size for a histogram comparison.
pub const MIN_HISTOGRAM_SAMPLES: usize = 100;
const MAX_HISTOGRAM_BINS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelLabel {
    Low,
    Medium,
    High,
    Custom,
}

impl LevelLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::Medium => "medium",
            Self::High => "high",
            Self::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "low" => Some(Self::Low),
            "medium" => Some(Self::Medium),
            "high" => Some(Self::High),
            "custom" => Some(Self::Custom),
            _ => None,
        }
    }
}

impl fmt::Display for LevelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pose standard deviations: `sigma_pa` in metres, `sigma_ang` in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UncertaintyLevel {
    pub label: LevelLabel,
    sigma_pa: f64,
    sigma_ang: f64,
}

impl UncertaintyLevel {
    pub fn new(label: LevelLabel, sigma_pa: f64, sigma_ang: f64) -> Result<Self> {
        if !(sigma_pa.is_finite() && sigma_pa >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "position standard deviation must be non-negative, got {sigma_pa}"
            )));
        }
        if !(sigma_ang.is_finite() && sigma_ang >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "angle standard deviation must be non-negative, got {sigma_ang}"
            )));
        }
        Ok(Self {
            label,
            sigma_pa,
            sigma_ang,
        })
    }

    /// 0.1 m, 0.1°
    pub fn low() -> Self {
        Self::preset(LevelLabel::Low)
    }

    /// 10 m, 1°
    pub fn medium() -> Self {
        Self::preset(LevelLabel::Medium)
    }

    /// 100 m, 2°
    pub fn high() -> Self {
        Self::preset(LevelLabel::High)
    }

    /// Table defaults for the named levels; `Custom` defaults to zero.
    pub fn preset(label: LevelLabel) -> Self {
        let (sigma_pa, sigma_ang_deg) = match label {
            LevelLabel::Low => (0.1, 0.1),
            LevelLabel::Medium => (10.0, 1.0),
            LevelLabel::High => (100.0, 2.0),
            LevelLabel::Custom => (0.0, 0.0),
        };
        Self {
            label,
            sigma_pa,
            sigma_ang: f64::to_radians(sigma_ang_deg),
        }
    }

    pub fn sigma_pa(&self) -> f64 {
        self.sigma_pa
    }

    pub fn sigma_ang(&self) -> f64 {
        self.sigma_ang
    }

    /// `σ_pa²·I₃ ⊕ σ_ang²·I₃`
    pub fn covariance(&self) -> PoseCovariance {
        PoseCovariance::block_diagonal(self.sigma_pa, self.sigma_ang)
            .expect("level standard deviations are validated non-negative")
    }
}

/// Maps the top 53 bits of a word to `(0, 1]`.
fn unit_open_closed(word: u64) -> f64 {
    1.0 - (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One Box–Muller pair of independent standard normals.
pub fn standard_normal_pair<R: RngCore>(rng: &mut R) -> (f64, f64) {
    let u1 = unit_open_closed(rng.next_u64());
    let u2 = unit_open_closed(rng.next_u64());
    let radius = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (2.0 * PI * u2).sin_cos();
    (radius * c, radius * s)
}

/// Pose perturbation `w ~ N(0, σ_pa²·I₃ ⊕ σ_ang²·I₃)`.
pub fn sample_perturbation<R: RngCore>(level: &UncertaintyLevel, rng: &mut R) -> Vector6<f64> {
    let mut w = Vector6::zeros();
    for pair in 0..3 {
        let (z0, z1) = standard_normal_pair(rng);
        w[2 * pair] = z0;
        w[2 * pair + 1] = z1;
    }
    for i in 0..3 {
        w[i] *= level.sigma_pa;
        w[i + 3] *= level.sigma_ang;
    }
    w
}

pub fn sample_perturbed_state<R: RngCore>(
    nominal: &AircraftState,
    level: &UncertaintyLevel,
    rng: &mut R,
) -> Result<AircraftState> {
    nominal.perturbed(&sample_perturbation(level, rng))
}

/// Generator for run `run` of an ensemble seeded with `seed`.
pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// Monte Carlo ensemble over a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub model: String,
    pub level: LevelLabel,
    pub theta_r_deg: Vec<f64>,
    pub nominal_pd: Vec<f64>,
    /// Row-major `run_count × points`.
    pub mc_pd: Vec<f64>,
    pub mean: Vec<f64>,
    /// Sample standard deviation (`n - 1` denominator; zero for one run).
    pub std: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub run_count: usize,
    pub rng_seed: u64,
    /// Perturbed samples rejected at the nadir singularity and redrawn.
    pub resample_count: usize,
}

impl EnsembleResult {
    pub fn points(&self) -> usize {
        self.theta_r_deg.len()
    }

    pub fn sample(&self, run: usize, k: usize) -> f64 {
        self.mc_pd[run * self.points() + k]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.run_count).map(|i| self.sample(i, k)).collect()
    }

    /// Largest `|P_D - P̄_D|` over runs and sweep points, with its sweep index.
    pub fn max_abs_deviation(&self) -> (f64, usize) {
        let mut best = (0.0, 0);
        for k in 0..self.points() {
            let d = self.max_abs_deviation_at(k);
            if d > best.0 {
                best = (d, k);
            }
        }
        best
    }

    pub fn max_abs_deviation_at(&self, k: usize) -> f64 {
        (0..self.run_count)
            .map(|i| (self.sample(i, k) - self.nominal_pd[k]).abs())
            .fold(0.0, f64::max)
    }

    /// Raw samples as CSV with columns `run,theta_r_deg,p_d`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            run: usize,
            theta_r_deg: f64,
            p_d: f64,
        }
        let mut w = csv::Writer::from_writer(writer);
        for run in 0..self.run_count {
            for (k, &theta) in self.theta_r_deg.iter().enumerate() {
                w.serialize(Row {
                    run,
                    theta_r_deg: theta,
                    p_d: self.sample(run, k),
                })
                .map_err(csv_error)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn perturbed_pd<R: RngCore>(
    nominal: &AircraftState,
    radar: &RadarSite,
    model: &RcsModel,
    level: &UncertaintyLevel,
    rng: &mut R,
    resamples: &mut usize,
) -> Result<f64> {
    for _ in 0..MAX_RESAMPLES {
        let state = sample_perturbed_state(nominal, level, rng)?;
        match detection::evaluate_point(&state, radar, model) {
            Ok(p) => return Ok(p.p_d),
            Err(Error::NadirSingularity) => *resamples += 1,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NadirSingularity)
}

/// Runs `runs` perturbed sweeps and collects the nonlinear `P_D`.
pub fn run_ensemble(
    sweep: &SweepSpec,
    radar: &RadarSite,
    model: &RcsModel,
    level: &UncertaintyLevel,
    runs: usize,
    seed: u64,
) -> Result<EnsembleResult> {
    if runs == 0 {
        return Err(Error::InvalidParameter("ensemble needs at least one run".into()));
    }
    let points = sweep.point_count();
    let nominal_states = (0..points)
        .map(|k| sweep.nominal_state_at(k))
        .collect::<Result<Vec<_>>>()?;
    let nominal_pd = nominal_states
        .iter()
        .map(|s| detection::evaluate_point(s, radar, model).map(|p| p.p_d))
        .collect::<Result<Vec<_>>>()?;

    let per_run = (0..runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = run_rng(seed, run as u64);
            let mut resamples = 0;
            let row = nominal_states
                .iter()
                .map(|s| perturbed_pd(s, radar, model, level, &mut rng, &mut resamples))
                .collect::<Result<Vec<_>>>()?;
            Ok((row, resamples))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut mc_pd = Vec::with_capacity(runs * points);
    let mut resample_count = 0;
    for (row, r) in per_run {
        mc_pd.extend(row);
        resample_count += r;
    }
    if resample_count > 0 {
        log::warn!("{resample_count} perturbed samples hit the nadir singularity and were redrawn");
    }

    let mut mean = vec![0.0; points];
    let mut std = vec![0.0; points];
    let mut min = vec![f64::INFINITY; points];
    let mut max = vec![f64::NEG_INFINITY; points];
    for k in 0..points {
        let column = (0..runs).map(|i| mc_pd[i * points + k]);
        let m = column.clone().sum::<f64>() / runs as f64;
        mean[k] = m;
        if runs > 1 {
            let ss: f64 = column.clone().map(|v| (v - m) * (v - m)).sum();
            std[k] = (ss / (runs - 1) as f64).sqrt();
        }
        for v in column {
            min[k] = min[k].min(v);
            max[k] = max[k].max(v);
        }
    }

    Ok(EnsembleResult {
        model: model.name().to_string(),
        level: level.label,
        theta_r_deg: (0..points).map(|k| sweep.theta_deg(k)).collect(),
        nominal_pd,
        mc_pd,
        mean,
        std,
        min,
        max,
        run_count: runs,
        rng_seed: seed,
        resample_count,
    })
}

/// Fraction of ensemble samples inside `P̄_D ± 3σ_pd`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub per_k: Vec<f64>,
    pub aggregate: f64,
    pub worst_k: usize,
    pub worst_fraction: f64,
}

pub fn coverage_check(result: &EnsembleResult, sigma_pd: &[f64]) -> Result<CoverageReport> {
    if sigma_pd.len() != result.points() {
        return Err(Error::DimensionMismatch {
            expected: result.points(),
            actual: sigma_pd.len(),
        });
    }
    let mut per_k = Vec::with_capacity(result.points());
    let mut inside_total = 0usize;
    for (k, &s) in sigma_pd.iter().enumerate() {
        let bound = 3.0 * s;
        let inside = (0..result.run_count)
            .filter(|&i| (result.sample(i, k) - result.nominal_pd[k]).abs() <= bound)
            .count();
        inside_total += inside;
        per_k.push(inside as f64 / result.run_count as f64);
    }
    let (worst_k, worst_fraction) = per_k
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, f)| if f < acc.1 { (k, f) } else { acc });
    Ok(CoverageReport {
        aggregate: inside_total as f64 / (result.run_count * result.points()) as f64,
        per_k,
        worst_k,
        worst_fraction,
    })
}

/// Ensemble histogram at one sweep point next to the linearised Gaussian.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramComparison {
    pub k_index: usize,
    pub theta_r_deg: f64,
    pub nominal_pd: f64,
    pub sigma_pd: f64,
    pub ensemble_mean: f64,
    pub ensemble_std: f64,
    /// `bins + 1` edges.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Counts normalised to unit area.
    pub density: Vec<f64>,
    /// `N(P̄_D, σ_pd²)` at the bin centres.
    pub gaussian_pdf: Vec<f64>,
    /// Adjusted Fisher–Pearson sample skewness.
    pub skewness: f64,
    /// Ensemble mean minus `P̄_D`.
    pub mean_bias: f64,
}

impl HistogramComparison {
    /// CSV with columns `bin_lo,bin_hi,count,density,gaussian_pdf`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            bin_lo: f64,
            bin_hi: f64,
            count: usize,
            density: f64,
            gaussian_pdf: f64,
        }
        let mut w = csv::Writer::from_writer(writer);
        for i in 0..self.counts.len() {
            w.serialize(Row {
                bin_lo: self.bin_edges[i],
                bin_hi: self.bin_edges[i + 1],
                count: self.counts[i],
                density: self.density[i],
                gaussian_pdf: self.gaussian_pdf[i],
            })
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Type-7 (linear interpolation) quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Adjusted Fisher–Pearson skewness `G1 = √(n(n-1))/(n-2)·m3/m2^{3/2}`;
/// zero for constant data.
pub fn sample_skewness(data: &[f64]) -> f64 {
    let n = data.len() as f64;
    if data.len() < 3 {
        return 0.0;
    }
    let mean = data.iter().sum::<f64>() / n;
    let (m2, m3) = data.iter().fold((0.0, 0.0), |(m2, m3), &x| {
        let d = x - mean;
        (m2 + d * d, m3 + d * d * d)
    });
    let (m2, m3) = (m2 / n, m3 / n);
    if m2 <= 0.0 {
        return 0.0;
    }
    (n * (n - 1.0)).sqrt() / (n - 2.0) * m3 / m2.powf(1.5)
}

/// Freedman–Diaconis bin edges over the data range clipped to `[0, 1]`.
pub fn freedman_diaconis_edges(sorted: &[f64]) -> Vec<f64> {
    let lo = sorted[0].max(0.0);
    let hi = sorted[sorted.len() - 1].min(1.0);
    let span = hi - lo;
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    let bins = if span <= 0.0 || iqr <= 0.0 {
        1
    } else {
        let width = 2.0 * iqr * (sorted.len() as f64).powf(-1.0 / 3.0);
        ((span / width).ceil() as usize).clamp(1, MAX_HISTOGRAM_BINS)
    };
    let width = span / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + i as f64 * width).collect();
    edges.push(hi);
    edges
}

pub fn histogram_vs_gaussian(
    result: &EnsembleResult,
    k_index: usize,
    sigma_pd: f64,
) -> Result<HistogramComparison> {
    if k_index >= result.points() {
        return Err(Error::IndexOutOfRange {
            index: k_index,
            len: result.points(),
        });
    }
    if result.run_count < MIN_HISTOGRAM_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_HISTOGRAM_SAMPLES,
            actual: result.run_count,
        });
    }
    let data = result.column(k_index);
    let mut sorted = data.clone();
    sorted.sort_by(f64::total_cmp);
    let edges = freedman_diaconis_edges(&sorted);
    let bins = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[bins]);

    let mut counts = vec![0usize; bins];
    for &x in &data {
        let i = if hi > lo {
            (((x - lo) / (hi - lo)) * bins as f64).floor() as isize
        } else {
            0
        };
        counts[i.clamp(0, bins as isize - 1) as usize] += 1;
    }
    let n = data.len() as f64;
    let density = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let w = edges[i + 1] - edges[i];
            if w > 0.0 {
                c as f64 / (n * w)
            } else {
                0.0
            }
        })
        .collect();
    let nominal = result.nominal_pd[k_index];
    let gaussian_pdf = (0..bins)
        .map(|i| {
            let x = 0.5 * (edges[i] + edges[i + 1]);
            if sigma_pd > 0.0 {
                let z = (x - nominal) / sigma_pd;
                (-0.5 * z * z).exp() / (sigma_pd * (2.0 * PI).sqrt())
            } else {
                0.0
            }
        })
        .collect();
    let mean = result.mean[k_index];

    Ok(HistogramComparison {
        k_index,
        theta_r_deg: result.theta_r_deg[k_index],
        nominal_pd: nominal,
        sigma_pd,
        ensemble_mean: mean,
        ensemble_std: result.std[k_index],
        bin_edges: edges,
        counts,
        density,
        gaussian_pdf,
        skewness: sample_skewness(&data),
        mean_bias: mean - nominal,
    })
}

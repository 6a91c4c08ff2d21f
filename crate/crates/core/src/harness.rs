//! Experiment orchestration: trial batches, SNR sweeps and result export.
//!
//! Every trial draws its library, demands, codebooks and noise from streams
//! derived from `(master_seed, trial)`, and results are folded in trial
//! order, so reports do not depend on the worker count.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::model::{random_library, seed, DemandVector, LibraryPolicy, NetworkConfig, Variant};
use crate::schemes::engine::{
    payload_bits_for, round_robin_soft, run_full_with, run_soft_with, Backend, RunOptions,
    SimResult,
};
use crate::schemes::rates::half_log;
use crate::schemes::schedule::ScheduleKind;
use crate::tradeoff::{empirical_mg, TradeoffCurve};
use crate::{Error, Result};

/// Largest demand space enumerated by the exhaustive policy.
pub const MAX_EXHAUSTIVE: u64 = 1_000_000;

/// Baseline MG without caches, used as the time-sharing partner.
pub const BASELINE_MG: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum SchemeSelector {
    /// The base scheme of the configured model.
    Base,
    /// Soft-handoff scheme with round-robin relabeling.
    RoundRobin,
    /// Base scheme plus a universally cached part of `extra_bits` per file.
    Prop1 { extra_bits: usize },
    /// Cache-free baseline for a fraction `lambda` of the time, base scheme
    /// for the rest. Only the base scheme is simulated.
    TimeShare { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "backend", rename_all = "kebab-case")]
pub enum BackendSpec {
    Ideal,
    MonteCarlo { n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemandPolicy {
    AllDistinct,
    AllEqual,
    UniformRandom,
    Explicit(DemandVector),
    /// Every vector in `{1..D}^K` once; overrides the trial count.
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub config: NetworkConfig,
    pub scheme: SchemeSelector,
    pub backend: BackendSpec,
    /// Bits per submessage.
    pub part_bits: usize,
    pub files: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub demands: DemandPolicy,
    pub allow_small_library: bool,
    /// Worker threads; `None` uses the global pool.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl ExperimentSpec {
    pub fn new(config: NetworkConfig, files: usize, part_bits: usize) -> Self {
        ExperimentSpec {
            config,
            scheme: SchemeSelector::Base,
            backend: BackendSpec::Ideal,
            part_bits,
            files,
            trials: 1,
            master_seed: 0,
            demands: DemandPolicy::UniformRandom,
            allow_small_library: false,
            workers: None,
        }
    }

    pub fn schedule_kind(&self) -> ScheduleKind {
        match (self.config.variant, self.scheme) {
            (Variant::SoftHandoff, SchemeSelector::RoundRobin) => ScheduleKind::SoftRoundRobin,
            (Variant::SoftHandoff, _) => ScheduleKind::Soft,
            (Variant::Full, _) => ScheduleKind::Full,
        }
    }

    fn extra_bits(&self) -> usize {
        match self.scheme {
            SchemeSelector::Prop1 { extra_bits } => extra_bits,
            _ => 0,
        }
    }

    pub fn payload_bits(&self) -> usize {
        payload_bits_for(self.schedule_kind(), self.config.k, self.part_bits) + self.extra_bits()
    }

    /// Number of trials actually run.
    pub fn trial_count(&self) -> Result<usize> {
        match self.demands {
            DemandPolicy::Exhaustive => {
                let total = (self.files as u64)
                    .checked_pow(self.config.k as u32)
                    .filter(|t| *t <= MAX_EXHAUSTIVE)
                    .ok_or_else(|| {
                        Error::BadParameter(format!(
                            "exhaustive demands need D^K <= {MAX_EXHAUSTIVE}, got {}^{}",
                            self.files, self.config.k
                        ))
                    })?;
                Ok(total as usize)
            }
            _ => Ok(self.trials),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        LibraryPolicy {
            allow_small: self.allow_small_library,
        }
        .check(self.files)?;
        if self.trials == 0 {
            return Err(Error::BadParameter("trials must be at least 1".into()));
        }
        if self.part_bits == 0 {
            return Err(Error::BadParameter(
                "bits per submessage must be positive".into(),
            ));
        }
        if self.scheme == SchemeSelector::RoundRobin && self.config.variant != Variant::SoftHandoff
        {
            return Err(Error::ConfigMismatch(
                "round-robin applies to the soft-handoff model".into(),
            ));
        }
        if let SchemeSelector::TimeShare { lambda } = self.scheme {
            if !(0.0..=1.0).contains(&lambda) {
                return Err(Error::BadParameter(format!(
                    "time-sharing fraction {lambda} outside [0, 1]"
                )));
            }
        }
        if let DemandPolicy::Explicit(d) = &self.demands {
            d.check_len(self.config.k)?;
            if d.demands.iter().any(|f| *f == 0 || *f > self.files) {
                return Err(Error::BadDemand(format!(
                    "demands must lie in 1..={}",
                    self.files
                )));
            }
        }
        if let BackendSpec::MonteCarlo { n } = self.backend {
            if n == 0 {
                return Err(Error::BadParameter("block length must be positive".into()));
            }
        }
        self.trial_count()?;
        Ok(())
    }

    fn demands_for(&self, trial: usize) -> DemandVector {
        let k = self.config.k;
        match &self.demands {
            DemandPolicy::AllDistinct => DemandVector::cyclic(k, self.files),
            DemandPolicy::AllEqual => DemandVector::all_equal(k),
            DemandPolicy::UniformRandom => {
                let mut rng = seed::rng(seed::derive(
                    self.master_seed,
                    &[seed::ROLE_DEMANDS, trial as u64],
                ));
                DemandVector::random(k, self.files, &mut rng)
            }
            DemandPolicy::Explicit(d) => d.clone(),
            DemandPolicy::Exhaustive => DemandVector::nth_of_all(trial as u64, k, self.files),
        }
    }

    /// Runs trial `trial` alone.
    pub fn run_trial(&self, trial: usize) -> Result<SimResult> {
        let library = random_library(
            self.files,
            self.payload_bits(),
            seed::derive(self.master_seed, &[seed::ROLE_LIBRARY, trial as u64]),
        )?;
        let demands = self.demands_for(trial);
        let backend = match self.backend {
            BackendSpec::Ideal => Backend::Ideal,
            BackendSpec::MonteCarlo { n } => Backend::MonteCarlo {
                n,
                seed: seed::derive(self.master_seed, &[trial as u64]),
            },
        };
        let opts = RunOptions {
            extra_bits: self.extra_bits(),
        };
        match self.schedule_kind() {
            ScheduleKind::Soft => run_soft_with(&self.config, &library, &demands, backend, opts),
            ScheduleKind::Full => run_full_with(&self.config, &library, &demands, backend, opts),
            ScheduleKind::SoftRoundRobin => {
                round_robin_soft(&self.config, &library, &demands, backend)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub trials: usize,
    /// `success_rate[rx - 1]`.
    pub success_rate: Vec<f64>,
    pub guaranteed: Vec<bool>,
    /// Success rate over receivers 2..K-1.
    pub interior_success: f64,
    /// Success rate over receivers 1 and K.
    pub edge_success: f64,
    /// Fraction of trials in which every guaranteed receiver succeeded.
    pub guaranteed_block_success: f64,
    pub link_error_rate: f64,
    /// Per-user rate in bits per channel use.
    pub rate: f64,
    pub memory_bits: usize,
    /// Cache size in bits per channel use.
    pub memory: f64,
    pub mg: f64,
    pub wall_clock_secs: f64,
}

impl ExperimentReport {
    pub fn guaranteed_success(&self) -> f64 {
        let (sum, count) = self
            .success_rate
            .iter()
            .zip(&self.guaranteed)
            .filter(|(_, g)| **g)
            .fold((0.0, 0usize), |(s, c), (r, _)| (s + r, c + 1));
        if count == 0 {
            1.0
        } else {
            sum / count as f64
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Runs all trials and aggregates them in trial order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let start = Instant::now();
    let trials = spec.trial_count()?;
    let run = || -> Vec<Result<SimResult>> {
        (0..trials)
            .into_par_iter()
            .map(|t| spec.run_trial(t))
            .collect()
    };
    let results = match spec.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::BadParameter(format!("worker pool: {e}")))?
            .install(run),
        None => run(),
    };
    let results: Vec<SimResult> = results
        .into_iter()
        .enumerate()
        .map(|(trial, r)| {
            r.map_err(|e| Error::Trial {
                trial,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    Ok(aggregate(spec, &results, start.elapsed().as_secs_f64()))
}

fn aggregate(
    spec: &ExperimentSpec,
    results: &[SimResult],
    wall_clock_secs: f64,
) -> ExperimentReport {
    let k = spec.config.k;
    let n = results.len() as f64;
    let success_rate: Vec<f64> = (0..k)
        .map(|i| results.iter().filter(|r| r.success[i]).count() as f64 / n)
        .collect();
    let interior_success = mean(success_rate[1..k - 1].iter().copied());
    let edge_success = mean([success_rate[0], success_rate[k - 1]].into_iter());
    let guaranteed_block_success =
        results.iter().filter(|r| r.guaranteed_success()).count() as f64 / n;
    let links: usize = results.iter().map(|r| r.links).sum();
    let failures: usize = results.iter().map(|r| r.link_failures).sum();
    let mut rate = mean(results.iter().map(|r| r.rate));
    let mut memory = mean(results.iter().map(|r| r.memory));
    let memory_bits = results[0].memory_bits;
    if let SchemeSelector::TimeShare { lambda } = spec.scheme {
        rate = lambda * BASELINE_MG * half_log(spec.config.power) + (1.0 - lambda) * rate;
        memory *= 1.0 - lambda;
    }
    ExperimentReport {
        spec: spec.clone(),
        trials: results.len(),
        success_rate,
        guaranteed: results[0].guaranteed.clone(),
        interior_success,
        edge_success,
        guaranteed_block_success,
        link_error_rate: if links == 0 {
            0.0
        } else {
            failures as f64 / links as f64
        },
        rate,
        memory_bits,
        memory,
        mg: empirical_mg(rate, spec.config.power).unwrap_or(f64::NAN),
        wall_clock_secs,
    }
}

/// `P = 10^(dB / 10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub power: f64,
    pub rate: f64,
    pub mg: f64,
    pub success: f64,
    pub link_error_rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

/// One experiment per SNR point, with the spec's power replaced.
pub fn sweep_snr(spec: &ExperimentSpec, snr_db: &[f64]) -> Result<SweepTable> {
    if snr_db.windows(2).any(|w| w[1] <= w[0]) || snr_db.iter().any(|v| !v.is_finite()) {
        return Err(Error::BadParameter(
            "SNR list must be finite and strictly increasing".into(),
        ));
    }
    let rows = snr_db
        .iter()
        .map(|db| {
            let mut point = spec.clone();
            point.config.power = db_to_linear(*db);
            let report = run_experiment(&point)?;
            Ok(SweepRow {
                snr_db: *db,
                power: point.config.power,
                rate: report.rate,
                mg: report.mg,
                success: report.guaranteed_success(),
                link_error_rate: report.link_error_rate,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepTable { rows })
}

/// Tabular output with a header row.
pub trait CsvExport {
    fn write_csv<W: Write>(&self, out: W) -> Result<()>;
}

impl CsvExport for TradeoffCurve {
    fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        TradeoffCurve::write_csv(self, out)
    }
}

impl CsvExport for SweepTable {
    fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "snr_db,power,rate,mg,success,link_error_rate")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.snr_db, r.power, r.rate, r.mg, r.success, r.link_error_rate
            )?;
        }
        Ok(())
    }
}

/// One row per receiver; wall-clock time is left out so replays are
/// byte-identical.
impl CsvExport for ExperimentReport {
    fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "rx,success_rate,guaranteed,rate,memory_bits,mg,seed")?;
        for (i, s) in self.success_rate.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                i + 1,
                s,
                self.guaranteed[i],
                self.rate,
                self.memory_bits,
                self.mg,
                self.spec.master_seed
            )?;
        }
        Ok(())
    }
}

pub fn export_csv<T: CsvExport>(table: &T, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    table.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

/// Writes a JSON mirror of any serializable result.
pub fn export_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Columns `x, s_ach, s_ub`.
    Tradeoff,
    /// Columns `snr_db, mg`.
    Sweep,
}

/// Writes a matplotlib script that reads `csv_path` and saves a PNG next to
/// `out_path` with the same stem.
pub fn emit_plot_script(csv_path: &Path, out_path: &Path, kind: PlotKind) -> Result<()> {
    let png = out_path.with_extension("png");
    let mut s = String::new();
    s.push_str("import csv\nimport matplotlib\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n\n");
    let _ = writeln!(
        s,
        "rows = list(csv.DictReader(open({:?})))",
        csv_path.display().to_string()
    );
    s.push_str("col = lambda name: [float(r[name]) for r in rows]\n");
    s.push_str("fig, ax = plt.subplots()\n");
    match kind {
        PlotKind::Tradeoff => {
            s.push_str("ax.plot(col(\"x\"), col(\"s_ach\"), label=\"achievable\")\n");
            s.push_str("ax.plot(col(\"x\"), col(\"s_ub\"), \"--\", label=\"upper bound\")\n");
            s.push_str("ax.set_xlabel(\"cache size per file (mu / D)\")\n");
            s.push_str("ax.set_ylabel(\"per-user multiplexing gain\")\n");
        }
        PlotKind::Sweep => {
            s.push_str("ax.plot(col(\"snr_db\"), col(\"mg\"), \"o-\", label=\"empirical\")\n");
            s.push_str("ax.set_xlabel(\"SNR (dB)\")\n");
            s.push_str("ax.set_ylabel(\"per-user multiplexing gain\")\n");
        }
    }
    s.push_str("ax.grid(True)\nax.legend()\n");
    let _ = writeln!(s, "fig.savefig({:?})", png.display().to_string());
    std::fs::write(out_path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soft_spec(k: usize) -> ExperimentSpec {
        let mut spec = ExperimentSpec::new(NetworkConfig::soft_uniform(k, 1.0, 1e4, 0.05), 6, 8);
        spec.trials = 20;
        spec.master_seed = 9;
        spec
    }

    #[test]
    fn base_soft_has_edge_effect() {
        let mut spec = soft_spec(7);
        spec.demands = DemandPolicy::AllDistinct;
        let r = run_experiment(&spec).unwrap();
        assert_eq!(r.interior_success, 1.0);
        assert_eq!(r.success_rate[0], 0.0);
        assert_eq!(r.success_rate[6], 0.0);
        assert_eq!(r.guaranteed_block_success, 1.0);
    }

    #[test]
    fn worker_count_does_not_change_reports() {
        let mut spec = soft_spec(6);
        spec.backend = BackendSpec::MonteCarlo { n: 48 };
        spec.config.power = 3.0;
        spec.part_bits = 4;
        spec.workers = Some(1);
        let mut a = run_experiment(&spec).unwrap();
        spec.workers = Some(4);
        let mut b = run_experiment(&spec).unwrap();
        a.wall_clock_secs = 0.0;
        b.wall_clock_secs = 0.0;
        a.spec.workers = None;
        b.spec.workers = None;
        assert_eq!(a, b);
    }

    #[test]
    fn exhaustive_limit() {
        let mut spec = soft_spec(8);
        spec.files = 6;
        spec.demands = DemandPolicy::Exhaustive;
        assert!(spec.validate().is_err());
        spec.files = 2;
        spec.allow_small_library = true;
        assert_eq!(spec.trial_count().unwrap(), 256);
    }

    #[test]
    fn trial_errors_carry_index() {
        let mut spec = soft_spec(6);
        spec.backend = BackendSpec::MonteCarlo { n: 96 };
        spec.part_bits = 21;
        match run_experiment(&spec).unwrap_err() {
            Error::Trial { trial, source } => {
                assert_eq!(trial, 0);
                assert_eq!(*source, Error::TooManyWords(21));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let mut buf = Vec::new();
        SweepTable::default().write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "snr_db,power,rate,mg,success,link_error_rate\n"
        );
    }
}

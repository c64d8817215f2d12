//! Experiment configuration and the data behind each figure.
//!
//! Every simulation here draws from its own ChaCha stream, numbered by what
//! it is for and which phase it serves, so outputs depend on the seed and
//! the configuration only. Thread count and scheduling do not matter.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{intercept_resend, ChannelParams, EveBasis, QuantumChannel};
use crate::error::{Error, Result};
use crate::estimation::{circular_distance, estimate_phase, estimate_phase_corrected};
use crate::fisher::{
    cfi_empirical, crb, eve_cfi_from_ratio, write_fisher_csv, FisherResult, FisherRow,
    ProbabilityTriplet, DEFAULT_NEIGHBOR_SPAN,
};
use crate::protocol::{
    calibration_table, eve_ratio, write_alice_jsonl, CalibrationTable, Encoding, EveView,
    OutcomeCounts, QberReport, SensingRun, Simulator,
};
use crate::qubit::{Outcome, PreparedStateLabel, TableCell};

/// Phase where an eavesdropper's information was singled out.
pub const PHI_8: f64 = 5.515;
pub const PHI_9: f64 = 6.013;
/// Largest tolerated check-path error rate.
pub const QBER_THRESHOLD: f64 = 0.06;

/// `2πk/9` for `k = 0..9`.
pub fn default_phases() -> Vec<f64> {
    (0..9).map(|k| TAU * k as f64 / 9.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub channel: ChannelParams,
    /// Phases swept by `simulate` and the phase-resolved figures.
    pub phases: Vec<f64>,
    /// Phases whose Fisher information is charted.
    pub named_phases: Vec<f64>,
    pub pulses_per_phase: u64,
    /// Pulses per calibration phase; θ is drawn per pulse, so the
    /// calibration run emits four times this many.
    pub calibration_pulses: u64,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Parallel shards per simulation.
    pub shards: usize,
    /// Distance to each neighbour in finite-difference Fisher estimates.
    pub neighbor_span: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            channel: ChannelParams::field_noise(),
            phases: default_phases(),
            named_phases: vec![PHI_8, PHI_9],
            // about 2.1e4 sensing events per prepared state
            pulses_per_phase: 75_000_000,
            // about 2.1e4 calibration events in total
            calibration_pulses: 4_650_000,
            seed: 20_240_601,
            output_dir: PathBuf::from("out"),
            shards: 8,
            neighbor_span: DEFAULT_NEIGHBOR_SPAN,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if self.phases.is_empty() {
            return bad("phases must not be empty");
        }
        if self
            .phases
            .iter()
            .chain(&self.named_phases)
            .any(|p| !p.is_finite())
        {
            return bad("phases must be finite");
        }
        if self.pulses_per_phase == 0 || self.calibration_pulses == 0 {
            return bad("pulse counts must be positive");
        }
        if self.shards == 0 {
            return bad("shards must be positive");
        }
        if !(self.neighbor_span > 0.0 && self.neighbor_span < PI) {
            return bad("neighbor_span must lie in (0, π)");
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig4,
    Fig5,
    Fig6,
    All,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::All => "all",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Figure::Fig2,
            Figure::Fig4,
            Figure::Fig5,
            Figure::Fig6,
            Figure::All,
        ]
        .into_iter()
        .find(|f| f.name() == s)
        .ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

#[derive(Clone, Copy)]
enum Purpose {
    Sensing = 1,
    Calibration = 2,
    Check = 3,
    Pathology = 4,
    Neighbors = 5,
}

/// Base stream of a sharded run. Shards add their index, so up to 2^20
/// shards never collide with the next slot.
fn stream_id(purpose: Purpose, index: u64) -> u64 {
    ((purpose as u64) << 40) | (index << 20)
}

fn sensing_run<C: QuantumChannel>(
    sim: &Simulator<C>,
    cfg: &ExperimentConfig,
    phi: f64,
    purpose: Purpose,
    index: u64,
) -> Result<SensingRun> {
    sim.run_sharded(
        Encoding::Fixed(phi),
        cfg.pulses_per_phase,
        cfg.seed,
        stream_id(purpose, index),
        cfg.shards,
    )
}

/// Pre-calibration table for the configured channel.
pub fn calibrate(cfg: &ExperimentConfig) -> Result<CalibrationTable> {
    let sim = Simulator::new(cfg.channel)?;
    let total = cfg
        .calibration_pulses
        .checked_mul(4)
        .ok_or(Error::NoPulses)?;
    let run = sim.run_sharded(
        Encoding::Calibration,
        total,
        cfg.seed,
        stream_id(Purpose::Calibration, 0),
        cfg.shards,
    )?;
    calibration_table(&run.counts)
}

fn create_out(dir: &FsPath, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    let file = File::create(&path)?;
    Ok((path, BufWriter::new(file)))
}

/// Contents of one `counts_XX.json` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCounts {
    pub phase_index: usize,
    pub phi: f64,
    pub pulses: u64,
    /// `n1..n8`.
    pub counts: [u64; 8],
    pub sensing_events: u64,
    pub check: QberReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSummary {
    pub files: Vec<PathBuf>,
    pub per_phase: Vec<PhaseCounts>,
}

/// Simulates every configured phase and writes the per-phase counts, the
/// calibration table, and both sides' click logs. Phase `k` occupies slots
/// `k·pulses_per_phase ..` in the logs.
pub fn cmd_simulate(cfg: &ExperimentConfig, attack: bool) -> Result<SimulateSummary> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let runs = if attack {
        let sim = Simulator::with_channel(cfg.channel, intercept_resend(EveBasis::Uniform))?;
        sweep(&sim, cfg)?
    } else {
        sweep(&Simulator::new(cfg.channel)?, cfg)?
    };

    let mut files = Vec::new();
    let mut per_phase = Vec::new();
    let mut views = Vec::new();
    let mut alice = Vec::new();
    for (k, (phi, mut run)) in runs.into_iter().enumerate() {
        let record = PhaseCounts {
            phase_index: k,
            phi,
            pulses: run.pulses,
            counts: *run.counts[0].cells(),
            sensing_events: run.sensing_events(),
            check: run.check,
        };
        let (path, mut w) = create_out(&cfg.output_dir, &format!("counts_{k:02}.json"))?;
        serde_json::to_writer_pretty(&mut w, &record)?;
        w.write_all(b"\n")?;
        w.flush()?;
        files.push(path);
        per_phase.push(record);

        let offset = k as u64 * cfg.pulses_per_phase;
        for e in &mut run.eve_view.events {
            e.time_slot += offset;
        }
        for r in &mut run.alice_log {
            r.slot += offset;
        }
        views.push(run.eve_view);
        alice.extend(run.alice_log);
    }

    let table = calibrate(cfg)?;
    let (path, mut w) = create_out(&cfg.output_dir, "calibration.json")?;
    serde_json::to_writer_pretty(&mut w, &table)?;
    w.write_all(b"\n")?;
    w.flush()?;
    files.push(path);

    let (path, mut w) = create_out(&cfg.output_dir, "eve_view.jsonl")?;
    EveView::merge(views).write_jsonl(&mut w)?;
    w.flush()?;
    files.push(path);

    let (path, mut w) = create_out(&cfg.output_dir, "alice_view.jsonl")?;
    write_alice_jsonl(&alice, &mut w)?;
    w.flush()?;
    files.push(path);

    Ok(SimulateSummary { files, per_phase })
}

fn sweep<C: QuantumChannel>(
    sim: &Simulator<C>,
    cfg: &ExperimentConfig,
) -> Result<Vec<(f64, SensingRun)>> {
    cfg.phases
        .iter()
        .enumerate()
        .map(|(k, &phi)| Ok((phi, sensing_run(sim, cfg, phi, Purpose::Sensing, k as u64)?)))
        .collect()
}

/// Runs the requested figure(s) and returns the written files.
pub fn cmd_reproduce(cfg: &ExperimentConfig, figure: Figure) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let mut files = Vec::new();
    let wants = |f: Figure| figure == f || figure == Figure::All;
    if wants(Figure::Fig2) {
        files.extend(reproduce_fig2(cfg)?);
    }
    if wants(Figure::Fig4) {
        files.push(reproduce_fig4(cfg)?);
    }
    if wants(Figure::Fig5) {
        files.push(reproduce_fig5(cfg)?);
    }
    if wants(Figure::Fig6) {
        files.push(reproduce_fig6(cfg)?);
    }
    Ok(files)
}

#[derive(Serialize)]
struct Fig2Row {
    phi: f64,
    uncorrected: f64,
    corrected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Summary {
    pub estimator: String,
    pub phi_hat: f64,
    pub num_maxima: usize,
}

fn reproduce_fig2(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let sim = Simulator::new(cfg.channel)?;
    let counts = sensing_run(&sim, cfg, PI, Purpose::Pathology, 0)?.counts[0];
    let table = calibrate(cfg)?;
    let raw = estimate_phase(&counts)?;
    let fixed = estimate_phase_corrected(&counts, &table)?;

    let (curve_path, w) = create_out(&cfg.output_dir, "fig2.csv")?;
    let mut out = csv::Writer::from_writer(w);
    for ((&phi, &u), &c) in raw
        .curve
        .grid
        .iter()
        .zip(&raw.curve.log_values)
        .zip(&fixed.curve.log_values)
    {
        out.serialize(Fig2Row {
            phi,
            uncorrected: u,
            corrected: c,
        })?;
    }
    out.flush()?;

    let (summary_path, w) = create_out(&cfg.output_dir, "fig2_maxima.csv")?;
    let mut out = csv::Writer::from_writer(w);
    for (name, est) in [("uncorrected", &raw), ("corrected", &fixed)] {
        out.serialize(Fig2Summary {
            estimator: name.to_string(),
            phi_hat: est.phi_hat,
            num_maxima: est.num_maxima,
        })?;
    }
    out.flush()?;
    Ok(vec![curve_path, summary_path])
}

/// Fraction of a state's sensing events that hit detector 1.
fn spd1_probability(counts: &OutcomeCounts, label: PreparedStateLabel) -> Result<f64> {
    counts
        .frequency(TableCell::new(label, Outcome::Zero))
        .ok_or(Error::EmptyLabel(label))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig4Row {
    pub phi: f64,
    pub spd1_x0: f64,
    pub spd1_x1: f64,
    pub spd1_y0: f64,
    pub spd1_y1: f64,
    pub eve_ratio: f64,
    pub eve_ratio_stderr: f64,
}

fn reproduce_fig4(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let sim = Simulator::new(cfg.channel)?;
    let (path, w) = create_out(&cfg.output_dir, "fig4.csv")?;
    let mut out = csv::Writer::from_writer(w);
    for (phi, run) in sweep(&sim, cfg)? {
        let c = &run.counts[0];
        let r = eve_ratio(&run.eve_view)?;
        let n = run.eve_view.sensing_clicks().count() as f64;
        out.serialize(Fig4Row {
            phi,
            spd1_x0: spd1_probability(c, PreparedStateLabel::X0)?,
            spd1_x1: spd1_probability(c, PreparedStateLabel::X1)?,
            spd1_y0: spd1_probability(c, PreparedStateLabel::Y0)?,
            spd1_y1: spd1_probability(c, PreparedStateLabel::Y1)?,
            eve_ratio: r,
            eve_ratio_stderr: (r * (1.0 - r) / n).sqrt(),
        })?;
    }
    out.flush()?;
    Ok(path)
}

/// Alice's four per-state CFIs and Eve's CFI at `phi`, each from a
/// finite-difference slope over simulated neighbours `phi ± span`.
pub fn fisher_bars(cfg: &ExperimentConfig, phi: f64, index: u64) -> Result<Vec<FisherRow>> {
    let sim = Simulator::new(cfg.channel)?;
    let h = cfg.neighbor_span;
    let phis = [phi - h, phi, phi + h];
    let runs = phis
        .iter()
        .enumerate()
        .map(|(i, &p)| sensing_run(&sim, cfg, p, Purpose::Neighbors, 3 * index + i as u64))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(5);
    for label in PreparedStateLabel::ALL {
        let mut pts = [(0.0, 0.0); 3];
        for (pt, (&p, run)) in pts.iter_mut().zip(phis.iter().zip(&runs)) {
            *pt = (p, spd1_probability(&run.counts[0], label)?);
        }
        let t = ProbabilityTriplet::new(pts[0], pts[1], pts[2])?;
        let n = runs[1].counts[0].label_total(label);
        rows.push(FisherRow::new(
            label.as_str(),
            phi,
            &FisherResult::new(cfi_empirical(&t), n)?,
        ));
    }

    let curve = phis
        .iter()
        .zip(&runs)
        .map(|(&p, run)| Ok((p, eve_ratio(&run.eve_view)?)))
        .collect::<Result<Vec<_>>>()?;
    let n = runs[1].eve_view.sensing_clicks().count() as u64;
    rows.push(FisherRow::new(
        "eve",
        phi,
        &eve_cfi_from_ratio(&curve, 1, n)?,
    ));
    Ok(rows)
}

fn reproduce_fig5(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let mut rows = Vec::new();
    for (j, &phi) in cfg.named_phases.iter().enumerate() {
        rows.extend(fisher_bars(cfg, phi, j as u64)?);
    }
    let (path, w) = create_out(&cfg.output_dir, "fig5.csv")?;
    write_fisher_csv(&rows, w)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig6Row {
    pub phi: f64,
    pub phi_hat: f64,
    pub deviation: f64,
    pub crb: f64,
}

/// Calibrated estimates over the phase sweep with their Cramér–Rao bounds.
/// The bound uses the ideal total CFI of 4 with `N = m/4` measurements per
/// state, i.e. `1/√m`.
pub fn precision_sweep(cfg: &ExperimentConfig) -> Result<Vec<Fig6Row>> {
    let sim = Simulator::new(cfg.channel)?;
    let table = calibrate(cfg)?;
    sweep(&sim, cfg)?
        .into_iter()
        .map(|(phi, run)| {
            let counts = run.counts[0];
            let est = estimate_phase_corrected(&counts, &table)?;
            Ok(Fig6Row {
                phi,
                phi_hat: est.phi_hat,
                deviation: circular_distance(est.phi_hat, phi),
                crb: crb(1.0, counts.m())?,
            })
        })
        .collect()
}

fn reproduce_fig6(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let rows = precision_sweep(cfg)?;
    let (path, w) = create_out(&cfg.output_dir, "fig6.csv")?;
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QberLine {
    pub sifted_count: u64,
    pub error_count: u64,
    pub qber: Option<f64>,
    pub pass: bool,
}

impl From<QberReport> for QberLine {
    fn from(r: QberReport) -> Self {
        let qber = r.qber();
        QberLine {
            sifted_count: r.sifted_count,
            error_count: r.error_count,
            qber,
            pass: qber.is_some_and(|q| q < QBER_THRESHOLD),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QberSummary {
    pub threshold: f64,
    pub clean: QberLine,
    pub attacked: QberLine,
}

/// Check-path QBER over all configured phases, without and with a full
/// intercept-resend attack.
pub fn cmd_qber(cfg: &ExperimentConfig) -> Result<QberSummary> {
    cfg.validate()?;
    let total = cfg
        .pulses_per_phase
        .checked_mul(cfg.phases.len() as u64)
        .ok_or(Error::Config("pulse budget overflows".into()))?;
    let run = |attack: bool| -> Result<QberReport> {
        let stream = stream_id(Purpose::Check, u64::from(attack));
        let encoding = Encoding::Fixed(cfg.phases[0]);
        if attack {
            let sim = Simulator::with_channel(cfg.channel, intercept_resend(EveBasis::Uniform))?;
            Ok(sim
                .run_sharded(encoding, total, cfg.seed, stream, cfg.shards)?
                .check)
        } else {
            let sim = Simulator::new(cfg.channel)?;
            Ok(sim
                .run_sharded(encoding, total, cfg.seed, stream, cfg.shards)?
                .check)
        }
    };
    Ok(QberSummary {
        threshold: QBER_THRESHOLD,
        clean: run(false)?.into(),
        attacked: run(true)?.into(),
    })
}

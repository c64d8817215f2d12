//! The three-step sensing protocol as a Monte-Carlo engine.
//!
//! Every emitted pulse gets a uniformly random prepared state. It then passes
//! through a [`QuantumChannel`] (a faithful fiber, or one with an
//! eavesdropper), and Bob's beam splitter routes it to the sensing or the
//! check arm. Sensing-arm clicks are binned into the eight cells of
//! [`OutcomeCounts`]. Check-arm clicks feed the QBER estimate. Bob publishes
//! only `(slot, detector, path)`, which is all [`EveView`] holds.
//!
//! Whether a pulse clicks is independent of its polarization, so the engine
//! draws the gap to the next non-empty slot from a geometric distribution
//! and only simulates pulses that produce an event. This is exact, and its
//! cost scales with detections rather than emitted pulses.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;
use std::ops::{Add, AddAssign};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    detector_reading, pick, ArmResponse, ChannelParams, DetectionEvent, Fiber, Path, QuantumChannel,
};
use crate::error::{Error, Result};
use crate::qubit::{
    apply_phase, born_probability, prepare, Basis, MeasurementBasis, Outcome, PreparedStateLabel,
    TableCell,
};

/// The four phases Bob encodes during pre-calibration.
pub const CALIBRATION_PHASES: [f64; 4] = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];

/// The eight sensing-arm counters `n1..n8`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    n: [u64; 8],
}

impl OutcomeCounts {
    /// Counters in cell order `n1..n8`.
    pub fn from_cells(n: [u64; 8]) -> Self {
        Self { n }
    }

    pub fn cells(&self) -> &[u64; 8] {
        &self.n
    }

    pub fn get(&self, cell: TableCell) -> u64 {
        self.n[cell.slot()]
    }

    pub fn record(&mut self, cell: TableCell) {
        self.n[cell.slot()] += 1;
    }

    /// Total sensing-arm events.
    pub fn m(&self) -> u64 {
        self.n.iter().sum()
    }

    /// Events recorded for a prepared state (both outcomes).
    pub fn label_total(&self, label: PreparedStateLabel) -> u64 {
        Outcome::BOTH
            .iter()
            .map(|&o| self.get(TableCell::new(label, o)))
            .sum()
    }

    /// `n_i / m_label`, or `None` when the label has no events.
    pub fn frequency(&self, cell: TableCell) -> Option<f64> {
        let total = self.label_total(cell.label);
        (total > 0).then(|| self.get(cell) as f64 / total as f64)
    }

    /// Clicks on SPD-1, i.e. σy outcome 0, over all prepared states.
    pub fn detector1_total(&self) -> u64 {
        TableCell::ALL
            .iter()
            .filter(|c| c.outcome == Outcome::Zero)
            .map(|&c| self.get(c))
            .sum()
    }

    pub fn as_f64(&self) -> [f64; 8] {
        self.n.map(|v| v as f64)
    }
}

impl Add for OutcomeCounts {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for OutcomeCounts {
    fn add_assign(&mut self, rhs: Self) {
        for (a, b) in self.n.iter_mut().zip(rhs.n) {
            *a += b;
        }
    }
}

/// Background probabilities `p_i^θ`, each measured at the calibration phase
/// where cell `i` ideally never fires (see [`TableCell::calibration_phase`]).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    p_bg: [f64; 8],
}

impl CalibrationTable {
    pub fn new(p_bg: [f64; 8]) -> Result<Self> {
        if let Some((i, p)) = p_bg
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..1.0).contains(*p))
        {
            return Err(Error::InvalidParams {
                field: "p_bg",
                reason: format!("n{} background {p} is outside [0, 1)", i + 1),
            });
        }
        Ok(Self { p_bg })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn get(&self, cell: TableCell) -> f64 {
        self.p_bg[cell.slot()]
    }

    pub fn values(&self) -> &[f64; 8] {
        &self.p_bg
    }

    pub fn theta(&self, cell: TableCell) -> f64 {
        cell.calibration_phase()
    }

    pub fn is_zero(&self) -> bool {
        self.p_bg.iter().all(|&p| p == 0.0)
    }
}

/// What an eavesdropper on the classical channel learns: one record per
/// click, with no prepared-state or basis information.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EveView {
    pub events: Vec<DetectionEvent>,
}

impl EveView {
    pub fn sensing_clicks(&self) -> impl Iterator<Item = &DetectionEvent> {
        self.events.iter().filter(|e| e.path == Path::Sensing)
    }

    /// Merges shard views, keeping slot order (stable for equal slots).
    pub fn merge(views: impl IntoIterator<Item = EveView>) -> EveView {
        let mut events: Vec<DetectionEvent> = views.into_iter().flat_map(|v| v.events).collect();
        events.sort_by_key(|e| e.time_slot);
        EveView { events }
    }

    /// Writes one JSON object per line: `{"slot":..,"detector":..,"path":..}`.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// A click as Alice sees it after combining Bob's report with her own
/// record of what she sent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AliceRecord {
    pub slot: u64,
    pub label: PreparedStateLabel,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta: Option<f64>,
    pub detector: u8,
}

pub fn write_alice_jsonl<W: Write>(records: &[AliceRecord], mut w: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Sifted check-arm statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QberReport {
    pub sifted_count: u64,
    pub error_count: u64,
}

impl QberReport {
    pub fn qber(&self) -> Option<f64> {
        (self.sifted_count > 0).then(|| self.error_count as f64 / self.sifted_count as f64)
    }
}

impl AddAssign for QberReport {
    fn add_assign(&mut self, rhs: Self) {
        self.sifted_count += rhs.sifted_count;
        self.error_count += rhs.error_count;
    }
}

/// Everything one simulation run produced.
#[derive(Debug, Clone, Default)]
pub struct SensingRun {
    pub pulses: u64,
    /// Sensing-arm counts, one entry per encoded phase (a single entry for
    /// fixed-phase runs, four for calibration runs in
    /// [`CALIBRATION_PHASES`] order).
    pub counts: Vec<OutcomeCounts>,
    pub eve_view: EveView,
    pub alice_log: Vec<AliceRecord>,
    pub check: QberReport,
    pub check_events: u64,
}

impl SensingRun {
    pub fn sensing_events(&self) -> u64 {
        self.counts.iter().map(OutcomeCounts::m).sum()
    }

    pub fn lost(&self) -> u64 {
        self.pulses - self.sensing_events() - self.check_events
    }

    /// Sensing-arm counts pooled over all encoded phases.
    pub fn total_counts(&self) -> OutcomeCounts {
        self.counts
            .iter()
            .copied()
            .fold(OutcomeCounts::default(), Add::add)
    }
}

/// What Bob's phase gate does during a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Encoding {
    Fixed(f64),
    /// Uniformly random θ from [`CALIBRATION_PHASES`], announced afterwards.
    Calibration,
}

/// Protocol simulator over a given channel.
#[derive(Debug, Clone)]
pub struct Simulator<C = Fiber> {
    params: ChannelParams,
    channel: C,
    alphabet: Vec<PreparedStateLabel>,
}

impl Simulator<Fiber> {
    pub fn new(params: ChannelParams) -> Result<Self> {
        Self::with_channel(params, Fiber)
    }
}

impl<C: QuantumChannel> Simulator<C> {
    pub fn with_channel(params: ChannelParams, channel: C) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            channel,
            alphabet: PreparedStateLabel::ALL.to_vec(),
        })
    }

    /// Restricts Alice to a subset of the four states (uniform over it).
    pub fn with_alphabet(mut self, labels: &[PreparedStateLabel]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidParams {
                field: "alphabet",
                reason: "at least one prepared state is required".into(),
            });
        }
        self.alphabet = labels.to_vec();
        Ok(self)
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    /// Runs `num_pulses` pulses on the random stream `(seed, stream)`.
    pub fn run(
        &self,
        encoding: Encoding,
        num_pulses: u64,
        seed: u64,
        stream: u64,
    ) -> Result<SensingRun> {
        if num_pulses == 0 {
            return Err(Error::NoPulses);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);

        let slots = match encoding {
            Encoding::Fixed(_) => 1,
            Encoding::Calibration => CALIBRATION_PHASES.len(),
        };
        let mut run = SensingRun {
            pulses: num_pulses,
            counts: vec![OutcomeCounts::default(); slots],
            ..SensingRun::default()
        };

        let p = &self.params;
        let q_sensing = p.sensing_event_probability();
        let q_check = p.check_event_probability();
        let q = q_sensing + q_check;
        if q <= 0.0 {
            return Ok(run);
        }
        let gaps = Geometric::new(q.min(1.0)).expect("q is a probability");
        let sensing_arm = ArmResponse::new(Path::Sensing, p);
        let check_arm = ArmResponse::new(Path::Check, p);

        let mut slot = 0u64;
        loop {
            slot = match slot.checked_add(gaps.sample(&mut rng)) {
                Some(s) if s < num_pulses => s,
                _ => break,
            };
            let label = self.alphabet[rng.random_range(0..self.alphabet.len())];
            let state = self.channel.transmit(prepare(label), &mut rng);

            if rng.random::<f64>() * q < q_sensing {
                let (theta_index, theta) = match encoding {
                    Encoding::Fixed(phi) => (0, phi),
                    Encoding::Calibration => {
                        let k = rng.random_range(0..CALIBRATION_PHASES.len());
                        (k, CALIBRATION_PHASES[k])
                    }
                };
                let encoded = apply_phase(state, theta);
                let p0 = born_probability(encoded, MeasurementBasis::sigma_y(Outcome::Zero));
                let ideal = p.sensing_bias.apply(label, [p0, 1.0 - p0]);
                let mut dist = [0.0; 2];
                sensing_arm.fill(&ideal, &mut dist);
                let k = pick(&dist, sensing_arm.total, &mut rng);
                let detector = Path::Sensing.first_detector() + k as u8;
                let outcome = Outcome::from_index(k).expect("two sensing detectors");

                run.counts[theta_index].record(TableCell::new(label, outcome));
                run.eve_view.events.push(DetectionEvent {
                    time_slot: slot,
                    detector_id: detector,
                    path: Path::Sensing,
                });
                run.alice_log.push(AliceRecord {
                    slot,
                    label,
                    theta: matches!(encoding, Encoding::Calibration).then_some(theta),
                    detector,
                });
            } else {
                let mut ideal = [0.0; 4];
                for (i, basis) in Basis::BOTH.into_iter().enumerate() {
                    for o in Outcome::BOTH {
                        ideal[2 * i + o.index()] =
                            0.5 * born_probability(state, MeasurementBasis::new(basis, o));
                    }
                }
                let mut dist = [0.0; 4];
                check_arm.fill(&ideal, &mut dist);
                let k = pick(&dist, check_arm.total, &mut rng);
                let detector = Path::Check.first_detector() + k as u8;
                let (basis, outcome) = detector_reading(Path::Check, detector);
                if basis == label.basis() {
                    run.check.sifted_count += 1;
                    if outcome != label.bit() {
                        run.check.error_count += 1;
                    }
                }
                run.check_events += 1;
                run.eve_view.events.push(DetectionEvent {
                    time_slot: slot,
                    detector_id: detector,
                    path: Path::Check,
                });
                run.alice_log.push(AliceRecord {
                    slot,
                    label,
                    theta: None,
                    detector,
                });
            }
            slot += 1;
        }
        Ok(run)
    }

    /// Splits `num_pulses` into `shards` contiguous slot ranges, simulates
    /// them in parallel on streams `stream_base + shard`, and merges.
    pub fn run_sharded(
        &self,
        encoding: Encoding,
        num_pulses: u64,
        seed: u64,
        stream_base: u64,
        shards: usize,
    ) -> Result<SensingRun> {
        if num_pulses == 0 {
            return Err(Error::NoPulses);
        }
        let shards = (shards.max(1) as u64).min(num_pulses);
        let per = num_pulses / shards;
        let ranges: Vec<(u64, u64)> = (0..shards)
            .map(|k| {
                let start = k * per;
                let end = if k + 1 == shards {
                    num_pulses
                } else {
                    start + per
                };
                (start, end - start)
            })
            .collect();

        let parts: Vec<(u64, SensingRun)> = ranges
            .par_iter()
            .enumerate()
            .map(|(k, &(start, len))| {
                Ok((
                    start,
                    self.run(encoding, len, seed, stream_base + k as u64)?,
                ))
            })
            .collect::<Result<_>>()?;

        let mut merged = SensingRun {
            pulses: num_pulses,
            counts: vec![OutcomeCounts::default(); parts[0].1.counts.len()],
            ..SensingRun::default()
        };
        let mut views = Vec::with_capacity(parts.len());
        for (start, mut part) in parts {
            for (acc, c) in merged.counts.iter_mut().zip(&part.counts) {
                *acc += *c;
            }
            merged.check += part.check;
            merged.check_events += part.check_events;
            for e in &mut part.eve_view.events {
                e.time_slot += start;
            }
            for r in &mut part.alice_log {
                r.slot += start;
            }
            merged.alice_log.extend(part.alice_log);
            views.push(part.eve_view);
        }
        merged.eve_view = EveView::merge(views);
        merged.alice_log.sort_by_key(|r| r.slot);
        Ok(merged)
    }

    pub fn sensing(&self, phi: f64, num_pulses: u64, seed: u64) -> Result<SensingRun> {
        self.run(Encoding::Fixed(phi), num_pulses, seed, 0)
    }

    /// Pre-calibration: `4 × pulses_per_phase` pulses with θ drawn per pulse.
    pub fn calibration(&self, pulses_per_phase: u64, seed: u64) -> Result<CalibrationTable> {
        let total = pulses_per_phase.checked_mul(4).ok_or(Error::NoPulses)?;
        let run = self.run(Encoding::Calibration, total, seed, 0)?;
        calibration_table(&run.counts)
    }

    pub fn check_path(&self, num_pulses: u64, seed: u64) -> Result<QberReport> {
        Ok(self.run(Encoding::Fixed(0.0), num_pulses, seed, 0)?.check)
    }
}

/// Builds the background table from per-θ counts (in [`CALIBRATION_PHASES`]
/// order): cell `i` is read off at its own calibration phase.
pub fn calibration_table(per_theta: &[OutcomeCounts]) -> Result<CalibrationTable> {
    assert_eq!(
        per_theta.len(),
        CALIBRATION_PHASES.len(),
        "one count set per calibration phase"
    );
    let mut p_bg = [0.0; 8];
    for cell in TableCell::ALL {
        let theta = cell.calibration_phase();
        let k = CALIBRATION_PHASES
            .iter()
            .position(|&t| t == theta)
            .expect("calibration phase is one of the four");
        p_bg[cell.slot()] = per_theta[k]
            .frequency(cell)
            .ok_or(Error::InsufficientCalibration {
                index: cell.index(),
                theta,
            })?;
    }
    // A cell that only ever fires is indistinguishable from a dead partner;
    // the table type rejects p = 1.
    CalibrationTable::new(p_bg)
}

/// Runs the sensing protocol at phase `phi` over a faithful fiber.
pub fn run_sensing(
    params: &ChannelParams,
    phi: f64,
    num_pulses: u64,
    seed: u64,
) -> Result<(OutcomeCounts, EveView)> {
    let run = Simulator::new(*params)?.sensing(phi, num_pulses, seed)?;
    Ok((run.counts[0], run.eve_view))
}

pub fn run_calibration(
    params: &ChannelParams,
    pulses_per_phase: u64,
    seed: u64,
) -> Result<CalibrationTable> {
    Simulator::new(*params)?.calibration(pulses_per_phase, seed)
}

pub fn run_check_path(params: &ChannelParams, num_pulses: u64, seed: u64) -> Result<QberReport> {
    Simulator::new(*params)?.check_path(num_pulses, seed)
}

/// Fraction of sensing-arm clicks that hit detector 1: the only
/// phase-relevant statistic visible on the classical channel.
pub fn eve_ratio(view: &EveView) -> Result<f64> {
    let (ones, total) = view.sensing_clicks().fold((0u64, 0u64), |(o, t), e| {
        (o + u64::from(e.detector_id == 1), t + 1)
    });
    if total == 0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(ones as f64 / total as f64)
}

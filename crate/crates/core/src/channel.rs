//! Stochastic model of everything between Alice's source and Bob's detectors.
//!
//! A pulse either reaches Bob's sensing arm (detectors 1, 2; σy measurement)
//! or his check arm (detectors 3..=6; passive σx/σy analyser), decided by the
//! beam-splitter ratio [`ChannelParams::path1_split`]. Whether anything clicks
//! does not depend on the polarization state: a signal photon is detected
//! with [`survival_probability`], and every detector of the arm independently
//! dark-fires with `dark_count_prob`. Misalignment flips the signal between
//! the two detectors of a pair; coincident clicks are resolved uniformly.
//!
//! Two routes compute the same thing. [`sample_detection`] runs the physical
//! procedure pulse by pulse with independent coin flips, while
//! [`click_distribution`] gives the exact per-detector click probabilities in
//! closed form. The protocol engine samples from the latter, which lets it
//! skip empty pulses in bulk.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::{
    born_probability, eigenstate, Basis, MeasurementBasis, Outcome, PreparedStateLabel, QubitState,
};

const SUM_TOL: f64 = 1e-9;

/// Which of Bob's two arms a pulse took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Path {
    /// Path 1: phase encoding followed by σy measurement on SPD-1/SPD-2.
    Sensing,
    /// Path 2: BB84-style analyser on SPD-3..SPD-6.
    Check,
}

impl Path {
    pub fn detectors(self) -> std::ops::RangeInclusive<u8> {
        match self {
            Path::Sensing => 1..=2,
            Path::Check => 3..=6,
        }
    }

    pub fn first_detector(self) -> u8 {
        *self.detectors().start()
    }

    pub fn detector_count(self) -> usize {
        self.detectors().count()
    }
}

/// A single click as Bob reports it over the classical channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionEvent {
    #[serde(rename = "slot")]
    pub time_slot: u64,
    #[serde(rename = "detector")]
    pub detector_id: u8,
    pub path: Path,
}

impl DetectionEvent {
    pub fn new(time_slot: u64, detector_id: u8, path: Path) -> Result<Self> {
        if !path.detectors().contains(&detector_id) {
            return Err(Error::InvalidParams {
                field: "detector_id",
                reason: format!("detector {detector_id} does not belong to the {path:?} path"),
            });
        }
        Ok(Self {
            time_slot,
            detector_id,
            path,
        })
    }
}

/// Probability that the sensing arm reports a fixed outcome regardless of the
/// incoming state, per prepared state: `[toward σy=0, toward σy=1]`.
///
/// Models imperfect state preparation and encoder extinction. Each entry is
/// constant in φ, so a cell's observed frequency stays affine in its ideal
/// probability: `f = b + (1 − b − b') · p(φ)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SensingBias {
    pub x0: [f64; 2],
    pub x1: [f64; 2],
    pub y0: [f64; 2],
    pub y1: [f64; 2],
}

impl SensingBias {
    pub fn for_label(&self, label: PreparedStateLabel) -> [f64; 2] {
        match label {
            PreparedStateLabel::X0 => self.x0,
            PreparedStateLabel::X1 => self.x1,
            PreparedStateLabel::Y0 => self.y0,
            PreparedStateLabel::Y1 => self.y1,
        }
    }

    /// Maps ideal σy probabilities `[p0, p1]` through the bias of `label`.
    pub fn apply(&self, label: PreparedStateLabel, ideal: [f64; 2]) -> [f64; 2] {
        let [b0, b1] = self.for_label(label);
        let keep = 1.0 - b0 - b1;
        [b0 + keep * ideal[0], b1 + keep * ideal[1]]
    }
}

/// Named parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Lossless, noiseless channel: every pulse clicks, no errors.
    Ideal,
    /// 50 km of standard fiber with 4.5% detectors and no noise sources.
    Field50km,
    /// [`Preset::Field50km`] plus dark counts, misalignment and sensing-arm
    /// bias at the level observed in a deployed 50 km link.
    FieldNoise,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Ideal, Preset::Field50km, Preset::FieldNoise];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Ideal => "ideal",
            Preset::Field50km => "field-50km",
            Preset::FieldNoise => "field-noise",
        }
    }

    pub fn params(self) -> ChannelParams {
        match self {
            Preset::Ideal => ChannelParams::ideal(),
            Preset::Field50km => ChannelParams::field_50km(),
            Preset::FieldNoise => ChannelParams::field_noise(),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_owned()))
    }
}

/// Physical parameters of the link and Bob's station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Fiber length in km.
    pub fiber_length_km: f64,
    /// Fiber attenuation in dB/km.
    pub attenuation_db_per_km: f64,
    pub detector_efficiency: f64,
    /// Dark-count probability per detector per gate.
    pub dark_count_prob: f64,
    /// Probability that a signal photon lands on the wrong detector of its pair.
    pub misalignment_prob: f64,
    /// Probability a pulse takes the sensing arm at Bob's beam splitter.
    pub path1_split: f64,
    /// Mean photon number of the attenuated source.
    pub mean_photon_number: f64,
    #[serde(default)]
    pub sensing_bias: SensingBias,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self::field_50km()
    }
}

impl ChannelParams {
    pub fn ideal() -> Self {
        Self {
            fiber_length_km: 0.0,
            attenuation_db_per_km: 0.0,
            detector_efficiency: 1.0,
            dark_count_prob: 0.0,
            misalignment_prob: 0.0,
            path1_split: 0.5,
            // 1 - e^{-50} rounds to exactly 1.0
            mean_photon_number: 50.0,
            sensing_bias: SensingBias::default(),
        }
    }

    pub fn field_50km() -> Self {
        Self {
            fiber_length_km: 50.0,
            attenuation_db_per_km: 0.2,
            detector_efficiency: 0.045,
            dark_count_prob: 0.0,
            misalignment_prob: 0.0,
            path1_split: 0.5,
            mean_photon_number: 0.5,
            sensing_bias: SensingBias::default(),
        }
    }

    pub fn field_noise() -> Self {
        // Bias entries were solved in closed form so that, together with the
        // dark counts and misalignment below, the eight calibration-phase
        // backgrounds come out at 0.0229, 0.0447, 0.0394, 0.0161, 0.0732,
        // 0.0164, 0.0118 and 0.0670.
        Self {
            dark_count_prob: 5e-6,
            misalignment_prob: 0.005,
            sensing_bias: SensingBias {
                x0: [0.0159, 0.0381],
                x1: [0.0327, 0.0090],
                y0: [0.0670, 0.0093],
                y1: [0.0047, 0.0607],
            },
            ..Self::field_50km()
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn prob(field: &'static str, v: f64) -> Result<()> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidParams {
                    field,
                    reason: format!("{v} is not a probability"),
                })
            }
        }
        fn non_negative(field: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParams {
                    field,
                    reason: format!("{v} must be finite and non-negative"),
                })
            }
        }

        non_negative("fiber_length_km", self.fiber_length_km)?;
        non_negative("attenuation_db_per_km", self.attenuation_db_per_km)?;
        prob("detector_efficiency", self.detector_efficiency)?;
        prob("dark_count_prob", self.dark_count_prob)?;
        prob("misalignment_prob", self.misalignment_prob)?;
        prob("path1_split", self.path1_split)?;
        if !(self.mean_photon_number.is_finite() && self.mean_photon_number > 0.0) {
            return Err(Error::InvalidParams {
                field: "mean_photon_number",
                reason: format!("{} must be positive", self.mean_photon_number),
            });
        }
        for label in PreparedStateLabel::ALL {
            let [b0, b1] = self.sensing_bias.for_label(label);
            prob("sensing_bias", b0)?;
            prob("sensing_bias", b1)?;
            if b0 + b1 >= 1.0 {
                return Err(Error::InvalidParams {
                    field: "sensing_bias",
                    reason: format!(
                        "{label}: forced outcomes sum to {} (must stay below 1)",
                        b0 + b1
                    ),
                });
            }
        }
        Ok(())
    }

    /// Fiber transmittance `10^(−α·L/10)`.
    pub fn transmittance(&self) -> f64 {
        10f64.powf(-self.attenuation_db_per_km * self.fiber_length_km / 10.0)
    }

    /// Probability that a pulse entering `path` produces any click at all.
    pub fn click_probability(&self, path: Path) -> f64 {
        let miss = (1.0 - survival_probability(self))
            * (1.0 - self.dark_count_prob).powi(path.detector_count() as i32);
        1.0 - miss
    }

    /// Probability that a pulse yields a sensing-arm click.
    pub fn sensing_event_probability(&self) -> f64 {
        self.path1_split * self.click_probability(Path::Sensing)
    }

    /// Probability that a pulse yields a check-arm click.
    pub fn check_event_probability(&self) -> f64 {
        (1.0 - self.path1_split) * self.click_probability(Path::Check)
    }

    /// Number of emitted pulses expected to produce `events` sensing clicks.
    pub fn pulses_for_sensing_events(&self, events: u64) -> u64 {
        let q = self.sensing_event_probability();
        if q <= 0.0 {
            return u64::MAX;
        }
        (events as f64 / q).ceil() as u64
    }
}

/// Probability that a pulse produces a signal (non-dark) click: a Poisson
/// source of mean `μ` attenuated by fiber transmittance `T` and detector
/// efficiency `η` gives `1 − exp(−μ·T·η)`.
pub fn survival_probability(params: &ChannelParams) -> f64 {
    let x = params.mean_photon_number * params.transmittance() * params.detector_efficiency;
    (-(-x).exp_m1()).clamp(0.0, 1.0)
}

fn check_normalized(ideal: &[f64]) -> Result<()> {
    let sum: f64 = ideal.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL || ideal.iter().any(|p| !(0.0..=1.0 + SUM_TOL).contains(p)) {
        return Err(Error::UnnormalizedProbabilities { sum });
    }
    Ok(())
}

fn check_arm(path: Path, ideal: &[f64]) -> Result<()> {
    if ideal.len() != path.detector_count() {
        return Err(Error::InvalidParams {
            field: "ideal_click_probs",
            reason: format!(
                "{path:?} path has {} detectors, got {} probabilities",
                path.detector_count(),
                ideal.len()
            ),
        });
    }
    check_normalized(ideal)
}

/// Constants of [`click_distribution`] for one arm, so the per-pulse work is
/// a few multiply-adds.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ArmResponse {
    survival: f64,
    misalignment: f64,
    keep: f64,
    lose: f64,
    dark_only: f64,
    /// Probability that the arm reports any click.
    pub(crate) total: f64,
}

impl ArmResponse {
    pub(crate) fn new(path: Path, params: &ChannelParams) -> Self {
        let n = path.detector_count() as i32;
        let d = params.dark_count_prob;
        let all_dark_free = (1.0 - d).powi(n);
        // E[1/(1+B)] for B ~ Binomial(n-1, d): the chance the signal detector
        // wins the uniform tie-break against the dark clicks.
        let keep = if d == 0.0 {
            1.0
        } else {
            (1.0 - all_dark_free) / (n as f64 * d)
        };
        Self {
            survival: survival_probability(params),
            misalignment: params.misalignment_prob,
            keep,
            lose: if n > 1 {
                (1.0 - keep) / (n - 1) as f64
            } else {
                0.0
            },
            dark_only: (1.0 - all_dark_free) / n as f64,
            total: params.click_probability(path),
        }
    }

    /// Writes the per-detector click probabilities for `ideal` into `out`.
    pub(crate) fn fill(&self, ideal: &[f64], out: &mut [f64]) {
        let (s, e) = (self.survival, self.misalignment);
        for (k, o) in out.iter_mut().enumerate() {
            // misalignment leaks weight to the pair partner
            let p = (1.0 - e) * ideal[k] + e * ideal[k ^ 1];
            *o = s * (p * self.keep + (1.0 - p) * self.lose) + (1.0 - s) * self.dark_only;
        }
    }
}

/// Exact probability that each detector of `path` is the one Bob reports,
/// given the ideal signal distribution over that path's detectors.
///
/// The entries sum to [`ChannelParams::click_probability`]; the remainder is
/// the probability of an empty slot.
pub fn click_distribution(path: Path, ideal: &[f64], params: &ChannelParams) -> Result<Vec<f64>> {
    check_arm(path, ideal)?;
    let mut out = vec![0.0; ideal.len()];
    ArmResponse::new(path, params).fill(ideal, &mut out);
    Ok(out)
}

/// Draws an index from `weights` scaled by `total`.
pub(crate) fn pick<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    // Rounding residue: fall back to the last non-zero weight.
    weights
        .iter()
        .rposition(|w| *w > 0.0)
        .unwrap_or(weights.len() - 1)
}

/// Simulates one pulse entering `path` with the given ideal signal
/// distribution, step by step: signal survival, misalignment, independent
/// dark counts and uniform resolution of coincidences.
pub fn sample_detection<R: Rng + ?Sized>(
    path: Path,
    ideal_click_probs: &[f64],
    params: &ChannelParams,
    time_slot: u64,
    rng: &mut R,
) -> Result<Option<DetectionEvent>> {
    check_arm(path, ideal_click_probs)?;
    let n = ideal_click_probs.len();
    let mut firing = vec![false; n];

    if rng.random::<f64>() < survival_probability(params) {
        let mut hit = pick(ideal_click_probs, 1.0, rng);
        if rng.random::<f64>() < params.misalignment_prob {
            hit ^= 1;
        }
        firing[hit] = true;
    }
    for f in firing.iter_mut() {
        if rng.random::<f64>() < params.dark_count_prob {
            *f = true;
        }
    }

    let fired: Vec<usize> = (0..n).filter(|&k| firing[k]).collect();
    if fired.is_empty() {
        return Ok(None);
    }
    let chosen = fired[rng.random_range(0..fired.len())];
    Ok(Some(DetectionEvent {
        time_slot,
        detector_id: path.first_detector() + chosen as u8,
        path,
    }))
}

/// Maps the detector index within an arm back to (basis, outcome).
pub fn detector_reading(path: Path, detector_id: u8) -> (Basis, Outcome) {
    let k = (detector_id - path.first_detector()) as usize;
    let basis = match (path, k / 2) {
        (Path::Sensing, _) | (Path::Check, 1) => Basis::SigmaY,
        _ => Basis::SigmaX,
    };
    (basis, Outcome::from_index(k % 2).expect("k % 2 < 2"))
}

/// What happens to the qubit in flight, before it reaches Bob's beam
/// splitter. Losses and detector effects live in [`ChannelParams`].
pub trait QuantumChannel: Sync {
    fn transmit(&self, state: QubitState, rng: &mut dyn RngCore) -> QubitState;
}

/// A faithful fiber: the polarization state arrives unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct Fiber;

impl QuantumChannel for Fiber {
    fn transmit(&self, state: QubitState, _rng: &mut dyn RngCore) -> QubitState {
        state
    }
}

/// How the eavesdropper picks her measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EveBasis {
    Uniform,
    Fixed(Basis),
}

/// Intercept-resend attack wrapped around another channel: Eve measures a
/// fraction of the transiting qubits and forwards the eigenstate she saw.
#[derive(Debug, Clone, Copy)]
pub struct InterceptResend<C> {
    inner: C,
    strategy: EveBasis,
    fraction: f64,
}

impl<C: QuantumChannel> InterceptResend<C> {
    pub fn new(inner: C, strategy: EveBasis) -> Self {
        Self {
            inner,
            strategy,
            fraction: 1.0,
        }
    }

    /// Only attack a random `fraction` of the pulses.
    pub fn with_fraction(mut self, fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidParams {
                field: "attack_fraction",
                reason: format!("{fraction} is not a probability"),
            });
        }
        self.fraction = fraction;
        Ok(self)
    }
}

impl<C: QuantumChannel> QuantumChannel for InterceptResend<C> {
    fn transmit(&self, state: QubitState, rng: &mut dyn RngCore) -> QubitState {
        let state = self.inner.transmit(state, rng);
        if self.fraction < 1.0 && rng.random::<f64>() >= self.fraction {
            return state;
        }
        let basis = match self.strategy {
            EveBasis::Fixed(b) => b,
            EveBasis::Uniform if rng.random::<bool>() => Basis::SigmaX,
            EveBasis::Uniform => Basis::SigmaY,
        };
        let p0 = born_probability(state, MeasurementBasis::new(basis, Outcome::Zero));
        let seen = if rng.random::<f64>() < p0 {
            Outcome::Zero
        } else {
            Outcome::One
        };
        eigenstate(basis, seen)
    }
}

/// Intercept-resend on every pulse of a faithful fiber.
pub fn intercept_resend(strategy: EveBasis) -> InterceptResend<Fiber> {
    InterceptResend::new(Fiber, strategy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::prepare;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn noiseless() -> ChannelParams {
        ChannelParams::ideal()
    }

    #[test]
    fn survival_limits() {
        let p = ChannelParams {
            mean_photon_number: 1e3,
            ..ChannelParams::ideal()
        };
        assert!((survival_probability(&p) - 1.0).abs() < 1e-12);

        let dead = ChannelParams {
            detector_efficiency: 0.0,
            ..ChannelParams::field_noise()
        };
        assert_eq!(survival_probability(&dead), 0.0);
    }

    #[test]
    fn fifty_km_transmittance() {
        let p = ChannelParams::field_50km();
        assert!((p.transmittance() - 0.1).abs() < 1e-15);
        assert_eq!(p.detector_efficiency, 0.045);
        assert_eq!(p.fiber_length_km, 50.0);
    }

    #[test]
    fn presets_validate() {
        for preset in Preset::ALL {
            preset.params().validate().unwrap();
            assert_eq!(preset.name().parse::<Preset>().unwrap(), preset);
        }
        assert!(matches!(
            "nope".parse::<Preset>(),
            Err(Error::UnknownPreset(_))
        ));
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let bad = ChannelParams {
            dark_count_prob: 1.5,
            ..ChannelParams::ideal()
        };
        assert!(bad.validate().is_err());
        let bad = ChannelParams {
            mean_photon_number: 0.0,
            ..ChannelParams::ideal()
        };
        assert!(bad.validate().is_err());
        let bad = ChannelParams {
            fiber_length_km: -1.0,
            ..ChannelParams::ideal()
        };
        assert!(bad.validate().is_err());
        let bad = ChannelParams {
            sensing_bias: SensingBias {
                y0: [0.6, 0.5],
                ..SensingBias::default()
            },
            ..ChannelParams::ideal()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn deterministic_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for slot in 0..100 {
            let ev = sample_detection(Path::Sensing, &[1.0, 0.0], &noiseless(), slot, &mut rng)
                .unwrap()
                .unwrap();
            assert_eq!(ev.detector_id, 1);
            assert_eq!(ev.time_slot, slot);
        }
    }

    #[test]
    fn opaque_channel_never_clicks() {
        let p = ChannelParams {
            detector_efficiency: 0.0,
            dark_count_prob: 0.0,
            ..ChannelParams::ideal()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for slot in 0..1000 {
            assert!(
                sample_detection(Path::Check, &[0.25; 4], &p, slot, &mut rng)
                    .unwrap()
                    .is_none()
            );
        }
        assert_eq!(
            click_distribution(Path::Check, &[0.25; 4], &p).unwrap(),
            vec![0.0; 4]
        );
    }

    #[test]
    fn rejects_unnormalized_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let err =
            sample_detection(Path::Sensing, &[0.7, 0.2], &noiseless(), 0, &mut rng).unwrap_err();
        assert!(matches!(err, Error::UnnormalizedProbabilities { .. }));
        assert!(sample_detection(
            Path::Sensing,
            &[0.5, 0.5 + 1e-10],
            &noiseless(),
            0,
            &mut rng
        )
        .is_ok());
        assert!(click_distribution(Path::Sensing, &[0.25; 4], &noiseless()).is_err());
    }

    #[test]
    fn distribution_sums_to_click_probability() {
        let p = ChannelParams {
            dark_count_prob: 0.03,
            misalignment_prob: 0.1,
            mean_photon_number: 0.2,
            ..ChannelParams::ideal()
        };
        for path in [Path::Sensing, Path::Check] {
            let n = path.detector_count();
            let ideal: Vec<f64> = (0..n).map(|k| (k + 1) as f64).collect();
            let total: f64 = ideal.iter().sum();
            let ideal: Vec<f64> = ideal.iter().map(|x| x / total).collect();
            let dist = click_distribution(path, &ideal, &p).unwrap();
            let sum: f64 = dist.iter().sum();
            assert!((sum - p.click_probability(path)).abs() < 1e-12);
        }
    }

    #[test]
    fn detector_readings() {
        assert_eq!(
            detector_reading(Path::Sensing, 1),
            (Basis::SigmaY, Outcome::Zero)
        );
        assert_eq!(
            detector_reading(Path::Sensing, 2),
            (Basis::SigmaY, Outcome::One)
        );
        assert_eq!(
            detector_reading(Path::Check, 3),
            (Basis::SigmaX, Outcome::Zero)
        );
        assert_eq!(
            detector_reading(Path::Check, 4),
            (Basis::SigmaX, Outcome::One)
        );
        assert_eq!(
            detector_reading(Path::Check, 5),
            (Basis::SigmaY, Outcome::Zero)
        );
        assert_eq!(
            detector_reading(Path::Check, 6),
            (Basis::SigmaY, Outcome::One)
        );
    }

    #[test]
    fn detection_event_checks_path() {
        assert!(DetectionEvent::new(0, 1, Path::Sensing).is_ok());
        assert!(DetectionEvent::new(0, 3, Path::Sensing).is_err());
        assert!(DetectionEvent::new(0, 2, Path::Check).is_err());
        assert!(DetectionEvent::new(0, 6, Path::Check).is_ok());
    }

    #[test]
    fn matching_basis_attack_is_transparent() {
        let eve = intercept_resend(EveBasis::Fixed(Basis::SigmaX));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for label in [PreparedStateLabel::X0, PreparedStateLabel::X1] {
            for _ in 0..100 {
                assert!(eve
                    .transmit(prepare(label), &mut rng)
                    .same_ray(&prepare(label)));
            }
        }
    }

    #[test]
    fn mismatched_basis_attack_randomizes() {
        let eve = intercept_resend(EveBasis::Fixed(Basis::SigmaX));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 40_000;
        let mut zeros = 0;
        for _ in 0..trials {
            let got = eve.transmit(prepare(PreparedStateLabel::Y0), &mut rng);
            // Bob's σy measurement of the resent σx eigenstate
            let p0 = born_probability(got, MeasurementBasis::sigma_y(Outcome::Zero));
            assert!((p0 - 0.5).abs() < 1e-12);
            if rng.random::<f64>() < p0 {
                zeros += 1;
            }
        }
        let sigma = (trials as f64 * 0.25).sqrt();
        assert!((zeros as f64 - trials as f64 / 2.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn attack_fraction_is_validated() {
        assert!(intercept_resend(EveBasis::Uniform)
            .with_fraction(1.2)
            .is_err());
        let none = intercept_resend(EveBasis::Fixed(Basis::SigmaX))
            .with_fraction(0.0)
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let y0 = prepare(PreparedStateLabel::Y0);
        assert!(none.transmit(y0, &mut rng).same_ray(&y0));
    }

    #[test]
    fn bias_is_affine() {
        let bias = ChannelParams::field_noise().sensing_bias;
        let out = bias.apply(PreparedStateLabel::Y0, [0.0, 1.0]);
        assert!((out[0] - 0.0670).abs() < 1e-15);
        assert!((out[0] + out[1] - 1.0).abs() < 1e-15);
    }
}

//! Monte-Carlo simulation and phase estimation for secure quantum remote
//! sensing.
//!
//! Alice sends polarization qubits to a remote sensor. Bob imprints an
//! unknown phase `φ` on each one and measures it, then announces only which
//! detector clicked. Alice knows what she sent, so she can recover `φ` from
//! the click statistics. An eavesdropper who sees the same announcements
//! learns almost nothing. A BB84-style check arm catches anyone tampering
//! with the qubits in flight.
//!
//! | module | contents |
//! |---|---|
//! | [`qubit`] | states, phase gate, Born rule, the eight outcome cells |
//! | [`channel`] | loss, dark counts, misalignment, eavesdropping channels |
//! | [`protocol`] | the seeded simulation engine, calibration, QBER |
//! | [`estimation`] | maximum-likelihood phase estimation |
//! | [`fisher`] | Fisher information and Cramér–Rao bounds |
//! | [`experiment`] | configuration and figure data sets |
//!
//! ```
//! use sqrs::{estimate_phase_corrected, ChannelParams, Simulator};
//!
//! let sim = Simulator::new(ChannelParams::ideal())?;
//! let run = sim.sensing(1.0, 20_000, 7)?;
//! let table = sim.calibration(2_000, 8)?;
//! let est = estimate_phase_corrected(&run.counts[0], &table)?;
//! assert!((est.phi_hat - 1.0).abs() < 0.05);
//! # Ok::<(), sqrs::Error>(())
//! ```

pub mod channel;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod fisher;
pub mod protocol;
pub mod qubit;

pub use channel::{
    click_distribution, intercept_resend, sample_detection, survival_probability, ChannelParams,
    DetectionEvent, EveBasis, Fiber, InterceptResend, Path, Preset, QuantumChannel, SensingBias,
};
pub use error::{Error, Result};
pub use estimation::{
    apply_calibration, circular_distance, estimate_phase, estimate_phase_corrected,
    estimate_phase_subtracted, log_likelihood, CorrectedFrequencies, LikelihoodCurve,
    PhaseEstimate,
};
pub use experiment::{cmd_qber, cmd_reproduce, cmd_simulate, ExperimentConfig, Figure};
pub use fisher::{
    cfi_analytic, cfi_empirical, crb, eve_cfi_from_ratio, FisherResult, ProbabilityTriplet,
};
pub use protocol::{
    eve_ratio, run_calibration, run_check_path, run_sensing, CalibrationTable, Encoding, EveView,
    OutcomeCounts, QberReport, SensingRun, Simulator,
};
pub use qubit::{
    apply_phase, born_probability, prepare, table1_probability, Basis, MeasurementBasis, Outcome,
    PreparedStateLabel, QubitState, TableCell,
};

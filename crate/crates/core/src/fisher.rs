//! Classical Fisher information and Cramér–Rao bounds.
//!
//! For a binary outcome with probability `p(φ)` the per-measurement Fisher
//! information is `F = p'² / (p(1 − p))`. Alice's four response curves are
//! known in closed form, so [`cfi_analytic`] differentiates them exactly and
//! returns 1 everywhere off the poles. An eavesdropper has no model, only
//! observed frequencies, so [`cfi_empirical`] fits the slope from two
//! neighbouring points instead.

use std::f64::consts::TAU;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qubit::{table1_derivative, table1_probability, Outcome, PreparedStateLabel};

/// Neighbour spacing matching a nine-point sweep of the circle.
pub const DEFAULT_NEIGHBOR_SPAN: f64 = TAU / 9.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherResult {
    pub cfi: f64,
    pub n_measurements: u64,
    /// `1/√(N·F)`, absent when either factor is zero.
    pub crb: Option<f64>,
}

impl FisherResult {
    pub fn new(cfi: f64, n_measurements: u64) -> Result<Self> {
        if !cfi.is_finite() || cfi < 0.0 {
            return Err(Error::NoInformation(cfi));
        }
        let crb = crb(cfi, n_measurements).ok();
        Ok(FisherResult {
            cfi,
            n_measurements,
            crb,
        })
    }
}

/// Three `(φ, p)` samples around a centre phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityTriplet {
    left: (f64, f64),
    center: (f64, f64),
    right: (f64, f64),
}

impl ProbabilityTriplet {
    pub fn new(left: (f64, f64), center: (f64, f64), right: (f64, f64)) -> Result<Self> {
        let pts = [left, center, right];
        if pts
            .iter()
            .any(|(phi, p)| !phi.is_finite() || !p.is_finite())
        {
            return Err(Error::InvalidTriplet("non-finite entry".into()));
        }
        if right.0 == left.0 {
            return Err(Error::InvalidTriplet("zero phase span".into()));
        }
        if !(left.0 < center.0 && center.0 < right.0) {
            return Err(Error::InvalidTriplet(
                "phases must increase strictly".into(),
            ));
        }
        if pts.iter().any(|&(_, p)| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidTriplet("probability outside [0, 1]".into()));
        }
        if center.1 <= 0.0 || center.1 >= 1.0 {
            return Err(Error::InvalidTriplet(format!(
                "centre probability {} not in (0, 1)",
                center.1
            )));
        }
        Ok(ProbabilityTriplet {
            left,
            center,
            right,
        })
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    pub fn slope(&self) -> f64 {
        (self.right.1 - self.left.1) / (self.right.0 - self.left.0)
    }
}

/// Exact CFI of one outcome cell.
pub fn cfi_analytic(label: PreparedStateLabel, outcome: Outcome, phi: f64) -> Result<f64> {
    let p = table1_probability(label, outcome, phi);
    if p <= 0.0 || p >= 1.0 {
        return Err(Error::Singular { phi, p });
    }
    let d = table1_derivative(label, outcome, phi);
    Ok(d * d / (p * (1.0 - p)))
}

/// Finite-difference CFI: squared secant slope over the centre variance.
pub fn cfi_empirical(triplet: &ProbabilityTriplet) -> f64 {
    let p = triplet.center.1;
    let s = triplet.slope();
    s * s / (p * (1.0 - p))
}

/// Cramér–Rao bound on the phase standard deviation after `n` measurements.
pub fn crb(cfi: f64, n: u64) -> Result<f64> {
    if !cfi.is_finite() || cfi <= 0.0 {
        return Err(Error::NoInformation(cfi));
    }
    if n == 0 {
        return Err(Error::InsufficientData);
    }
    Ok(1.0 / (n as f64 * cfi).sqrt())
}

/// Eve's CFI from her ratio observable, using the points either side of
/// `center`. `n` is the number of clicks behind the centre ratio.
pub fn eve_cfi_from_ratio(curve: &[(f64, f64)], center: usize, n: u64) -> Result<FisherResult> {
    if curve.len() < 3 || center == 0 || center + 1 >= curve.len() {
        return Err(Error::InvalidTriplet(format!(
            "centre index {center} needs neighbours in a curve of {} points",
            curve.len()
        )));
    }
    let t = ProbabilityTriplet::new(curve[center - 1], curve[center], curve[center + 1])?;
    FisherResult::new(cfi_empirical(&t), n)
}

/// One bar of a Fisher-information chart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherRow {
    pub state_label: String,
    pub phi: f64,
    pub cfi: f64,
    pub crb: Option<f64>,
}

impl FisherRow {
    pub fn new(state_label: impl Into<String>, phi: f64, result: &FisherResult) -> Self {
        FisherRow {
            state_label: state_label.into(),
            phi,
            cfi: result.cfi,
            crb: result.crb,
        }
    }
}

/// CSV with columns `state_label,phi,cfi,crb`; an absent bound is empty.
pub fn write_fisher_csv<W: Write>(rows: &[FisherRow], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(["state_label", "phi", "cfi", "crb"])?;
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

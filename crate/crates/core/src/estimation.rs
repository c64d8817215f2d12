//! Maximum-likelihood phase estimation from the eight outcome counters.
//!
//! The log-likelihood of the counts is
//!
//! ```text
//! ℓ(φ) = (n1+n4)·ln(1+sin φ) + (n2+n3)·ln(1−sin φ)
//!      + (n5+n8)·ln(1+cos φ) + (n6+n7)·ln(1−cos φ)
//! ```
//!
//! and the estimate is its argmax on the circle. The maximizer evaluates ℓ on
//! a uniform grid, then polishes the best grid point with a golden-section
//! search.
//!
//! Every occupied cell puts a `−∞` wall at the phase where its probability
//! vanishes. Background clicks therefore split the peak in two whenever the
//! true phase sits on a wall. Pre-calibration removes the split: the measured
//! backgrounds `b_i` are folded into the cell probabilities
//! `q_i = b_i + (1 − b_i − b_j)·p_i(φ)`, where `j` is the partner outcome.
//! Subtracting `b_i` and renormalizing each pair (see [`apply_calibration`])
//! maps these revised probabilities back to the ideal ones.

use std::f64::consts::TAU;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::protocol::{CalibrationTable, OutcomeCounts};
use crate::qubit::{doubled_probability, Outcome, PreparedStateLabel, TableCell};

/// Number of grid points over `[0, 2π)`.
pub const GRID_POINTS: usize = 2048;
/// Floor applied to every logarithm argument.
pub const LOG_FLOOR: f64 = 1e-12;
/// Golden-section stopping width, in radians.
pub const REFINE_TOL: f64 = 1e-6;
/// A secondary maximum counts toward [`PhaseEstimate::num_maxima`] when its
/// log-likelihood is within `COMPETING_PEAK_DEFICIT · m` nats of the global
/// maximum, `m` being the total count.
///
/// Peaks split by a nearby wall trail the top by at most a few hundredths of
/// a nat per event. Peaks in the wrong quadrant trail it by ~0.2 or more.
pub const COMPETING_PEAK_DEFICIT: f64 = 0.05;

/// Log-likelihood sampled on the estimation grid, shifted so its maximum is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodCurve {
    pub grid: Vec<f64>,
    pub log_values: Vec<f64>,
}

#[derive(Serialize)]
struct CurveRow {
    phi: f64,
    normalized_log_likelihood: f64,
}

impl LikelihoodCurve {
    /// Two-column CSV: `phi,normalized_log_likelihood`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for (&phi, &v) in self.grid.iter().zip(&self.log_values) {
            out.serialize(CurveRow {
                phi,
                normalized_log_likelihood: v,
            })?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseEstimate {
    /// Estimated phase in `[0, 2π)`.
    pub phi_hat: f64,
    pub curve: LikelihoodCurve,
    /// Local maxima competing with the global one.
    pub num_maxima: usize,
    /// Unshifted log-likelihood at `phi_hat`.
    pub max_log_likelihood: f64,
}

/// Background-corrected outcome frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectedFrequencies {
    pub f: [f64; 8],
    pub effective_counts: [f64; 8],
}

impl CorrectedFrequencies {
    pub fn get(&self, cell: TableCell) -> f64 {
        self.f[cell.slot()]
    }
}

trait LogLikelihood: Sync {
    fn eval(&self, phi: f64) -> f64;
    fn weight(&self) -> f64;
}

/// The ideal likelihood with real-valued weights.
struct IdealModel {
    w: [f64; 8],
}

impl LogLikelihood for IdealModel {
    fn eval(&self, phi: f64) -> f64 {
        TableCell::ALL
            .iter()
            .zip(&self.w)
            .filter(|(_, &w)| w != 0.0)
            .map(|(&cell, &w)| w * doubled_probability(cell, phi).max(LOG_FLOOR).ln())
            .sum()
    }

    fn weight(&self) -> f64 {
        self.w.iter().sum()
    }
}

/// Same sum over cells with the background folded into each probability.
/// For an all-zero table this evaluates bit-for-bit like [`IdealModel`].
struct RevisedModel {
    w: [f64; 8],
    bg: [f64; 8],
}

impl LogLikelihood for RevisedModel {
    fn eval(&self, phi: f64) -> f64 {
        TableCell::ALL
            .iter()
            .zip(&self.w)
            .filter(|(_, &w)| w != 0.0)
            .map(|(&cell, &w)| {
                let b = self.bg[cell.slot()];
                let keep = 1.0 - b - self.bg[cell.partner().slot()];
                w * (2.0 * b + keep * doubled_probability(cell, phi))
                    .max(LOG_FLOOR)
                    .ln()
            })
            .sum()
    }

    fn weight(&self) -> f64 {
        self.w.iter().sum()
    }
}

/// Log-likelihood of `counts` at `phi`, up to an additive constant.
pub fn log_likelihood(counts: &OutcomeCounts, phi: f64) -> f64 {
    IdealModel { w: counts.as_f64() }.eval(phi)
}

/// The phase grid used by every estimator: `2πk/G`, `k = 0..G`.
pub fn phase_grid() -> Vec<f64> {
    (0..GRID_POINTS)
        .map(|k| TAU * k as f64 / GRID_POINTS as f64)
        .collect()
}

/// Shortest angular distance between two phases.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn wrap(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Golden-section search for the maximum of `f` on `[lo, hi]`.
fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Counts local maxima of a circular sequence lying within `threshold` of
/// the global maximum. Plateaus count once.
fn competing_maxima(values: &[f64], threshold: f64) -> usize {
    let n = values.len();
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // Walk from the global minimum so no maximal plateau wraps the seam.
    let start = values
        .iter()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) },
        )
        .0;
    let at = |i: usize| values[(start + i) % n];

    let mut count = 0;
    let mut i = 1;
    while i < n {
        if at(i) > at(i - 1) {
            let mut j = i;
            while j + 1 < n && at(j + 1) == at(i) {
                j += 1;
            }
            if at(j + 1) < at(i) && top - at(i) <= threshold {
                count += 1;
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    count.max(1)
}

fn maximize(model: &dyn LogLikelihood) -> PhaseEstimate {
    let grid = phase_grid();
    let raw: Vec<f64> = grid.par_iter().map(|&phi| model.eval(phi)).collect();

    // First occurrence wins, so exact ties resolve to the smallest phase.
    let (best, best_value) =
        raw.iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });

    let step = TAU / GRID_POINTS as f64;
    let (refined, refined_value) = golden_section_max(
        |x| model.eval(x),
        grid[best] - step,
        grid[best] + step,
        REFINE_TOL,
    );
    let (phi_hat, max_log_likelihood) = if refined_value >= best_value {
        (wrap(refined), refined_value)
    } else {
        (grid[best], best_value)
    };

    let threshold = COMPETING_PEAK_DEFICIT * model.weight();
    let num_maxima = competing_maxima(&raw, threshold);
    let log_values = raw.iter().map(|v| v - best_value).collect();

    PhaseEstimate {
        phi_hat,
        curve: LikelihoodCurve { grid, log_values },
        num_maxima,
        max_log_likelihood,
    }
}

/// Maximum-likelihood estimate from raw counts.
pub fn estimate_phase(counts: &OutcomeCounts) -> Result<PhaseEstimate> {
    if counts.m() == 0 {
        return Err(Error::InsufficientData);
    }
    Ok(maximize(&IdealModel { w: counts.as_f64() }))
}

/// Estimate from real-valued cell weights (for example effective counts).
pub fn estimate_from_weights(weights: [f64; 8]) -> Result<PhaseEstimate> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InsufficientData);
    }
    Ok(maximize(&IdealModel { w: weights }))
}

/// Subtracts the background from each per-label frequency, clamps at zero,
/// and renormalizes each outcome pair.
pub fn apply_calibration(
    counts: &OutcomeCounts,
    table: &CalibrationTable,
) -> Result<CorrectedFrequencies> {
    let mut f = [0.0; 8];
    let mut effective_counts = [0.0; 8];
    for label in PreparedStateLabel::ALL {
        let total = counts.label_total(label);
        if total == 0 {
            return Err(Error::EmptyLabel(label));
        }
        let pair = [
            TableCell::new(label, Outcome::Zero),
            TableCell::new(label, Outcome::One),
        ];
        let raw = pair.map(|c| (counts.get(c) as f64 / total as f64 - table.get(c)).max(0.0));
        let sum = raw[0] + raw[1];
        if sum <= 0.0 {
            return Err(Error::DegenerateRow(label));
        }
        for (c, r) in pair.iter().zip(raw) {
            f[c.slot()] = r / sum;
            effective_counts[c.slot()] = r / sum * total as f64;
        }
    }
    Ok(CorrectedFrequencies {
        f,
        effective_counts,
    })
}

/// Calibrated estimate: the raw counts are scored against the
/// background-revised cell probabilities.
pub fn estimate_phase_corrected(
    counts: &OutcomeCounts,
    table: &CalibrationTable,
) -> Result<PhaseEstimate> {
    if counts.m() == 0 {
        return Err(Error::InsufficientData);
    }
    apply_calibration(counts, table)?;
    for label in PreparedStateLabel::ALL {
        let b0 = table.get(TableCell::new(label, Outcome::Zero));
        let b1 = table.get(TableCell::new(label, Outcome::One));
        if b0 + b1 >= 1.0 {
            return Err(Error::DegenerateRow(label));
        }
    }
    Ok(maximize(&RevisedModel {
        w: counts.as_f64(),
        bg: *table.values(),
    }))
}

/// Calibrated estimate that plugs the corrected effective counts straight
/// into the ideal likelihood.
///
/// Any positive residual in a cell whose probability vanishes at the true
/// phase keeps that cell's wall, so near a wall this route still tends to
/// split the peak. Prefer [`estimate_phase_corrected`].
pub fn estimate_phase_subtracted(
    counts: &OutcomeCounts,
    table: &CalibrationTable,
) -> Result<PhaseEstimate> {
    if counts.m() == 0 {
        return Err(Error::InsufficientData);
    }
    estimate_from_weights(apply_calibration(counts, table)?.effective_counts)
}

//! Single-qubit polarization math.
//!
//! States are pure qubits written in the H/V basis. Alice prepares one of the
//! four eigenstates of σx and σy, Bob's sensor multiplies the V amplitude by
//! `e^{iφ}`, and the result is measured in the σy basis. The eight
//! (prepared state, σy outcome) combinations are the cells `n1..n8` that all
//! downstream estimation works with; [`TableCell`] names them.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Tolerance for exact-math identities (normalization, unitarity).
pub const EXACT_TOL: f64 = 1e-12;

/// A pure polarization qubit `amp_h |H⟩ + amp_v |V⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    amp_h: Complex64,
    amp_v: Complex64,
}

impl QubitState {
    /// Builds a state from raw amplitudes, rescaling to unit norm.
    ///
    /// Returns `None` for the zero vector or non-finite input.
    pub fn normalized(amp_h: Complex64, amp_v: Complex64) -> Option<Self> {
        let norm = (amp_h.norm_sqr() + amp_v.norm_sqr()).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return None;
        }
        Some(Self {
            amp_h: amp_h / norm,
            amp_v: amp_v / norm,
        })
    }

    pub fn amp_h(&self) -> Complex64 {
        self.amp_h
    }

    pub fn amp_v(&self) -> Complex64 {
        self.amp_v
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp_h.norm_sqr() + self.amp_v.norm_sqr()
    }

    /// Inner product `⟨self|other⟩`.
    pub fn inner(&self, other: &QubitState) -> Complex64 {
        self.amp_h.conj() * other.amp_h + self.amp_v.conj() * other.amp_v
    }

    /// True when the two states describe the same physical ray, i.e. they are
    /// equal up to a global phase.
    pub fn same_ray(&self, other: &QubitState) -> bool {
        (self.inner(other).norm() - 1.0).abs() <= EXACT_TOL
    }
}

/// Pauli measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    SigmaX,
    SigmaY,
}

impl Basis {
    pub const BOTH: [Basis; 2] = [Basis::SigmaX, Basis::SigmaY];
}

/// Binary measurement outcome; `Zero` is the `+1` eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Zero,
    One,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Zero, Outcome::One];

    pub fn index(self) -> usize {
        match self {
            Outcome::Zero => 0,
            Outcome::One => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Outcome::Zero),
            1 => Some(Outcome::One),
            _ => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Outcome::Zero => Outcome::One,
            Outcome::One => Outcome::Zero,
        }
    }
}

/// A projective measurement: a basis together with the outcome whose
/// probability is asked for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MeasurementBasis {
    pub basis: Basis,
    pub outcome: Outcome,
}

impl MeasurementBasis {
    pub fn new(basis: Basis, outcome: Outcome) -> Self {
        Self { basis, outcome }
    }

    pub fn sigma_x(outcome: Outcome) -> Self {
        Self::new(Basis::SigmaX, outcome)
    }

    pub fn sigma_y(outcome: Outcome) -> Self {
        Self::new(Basis::SigmaY, outcome)
    }
}

/// The four states Alice may send.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreparedStateLabel {
    /// σx = 0, `(|H⟩ + |V⟩)/√2`
    X0,
    /// σx = 1, `(|H⟩ − |V⟩)/√2`
    X1,
    /// σy = 0, `(|H⟩ + i|V⟩)/√2`
    Y0,
    /// σy = 1, `(|H⟩ − i|V⟩)/√2`
    Y1,
}

impl PreparedStateLabel {
    pub const ALL: [PreparedStateLabel; 4] = [
        PreparedStateLabel::X0,
        PreparedStateLabel::X1,
        PreparedStateLabel::Y0,
        PreparedStateLabel::Y1,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn basis(self) -> Basis {
        match self {
            PreparedStateLabel::X0 | PreparedStateLabel::X1 => Basis::SigmaX,
            PreparedStateLabel::Y0 | PreparedStateLabel::Y1 => Basis::SigmaY,
        }
    }

    /// The eigenvalue bit this state encodes in its own basis.
    pub fn bit(self) -> Outcome {
        match self {
            PreparedStateLabel::X0 | PreparedStateLabel::Y0 => Outcome::Zero,
            PreparedStateLabel::X1 | PreparedStateLabel::Y1 => Outcome::One,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PreparedStateLabel::X0 => "x0",
            PreparedStateLabel::X1 => "x1",
            PreparedStateLabel::Y0 => "y0",
            PreparedStateLabel::Y1 => "y1",
        }
    }
}

impl fmt::Display for PreparedStateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PreparedStateLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown state label `{s}`"))
    }
}

/// Eigenstate of `basis` with the given outcome.
pub fn eigenstate(basis: Basis, outcome: Outcome) -> QubitState {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let v = match (basis, outcome) {
        (Basis::SigmaX, Outcome::Zero) => Complex64::new(FRAC_1_SQRT_2, 0.0),
        (Basis::SigmaX, Outcome::One) => Complex64::new(-FRAC_1_SQRT_2, 0.0),
        (Basis::SigmaY, Outcome::Zero) => Complex64::new(0.0, FRAC_1_SQRT_2),
        (Basis::SigmaY, Outcome::One) => Complex64::new(0.0, -FRAC_1_SQRT_2),
    };
    QubitState { amp_h: h, amp_v: v }
}

/// The state Alice transmits for `label`.
pub fn prepare(label: PreparedStateLabel) -> QubitState {
    eigenstate(label.basis(), label.bit())
}

/// Bob's sensor: multiplies the V amplitude by `e^{iφ}`.
pub fn apply_phase(state: QubitState, phi: f64) -> QubitState {
    let phase = Complex64::cis(phi.rem_euclid(TAU));
    QubitState {
        amp_h: state.amp_h,
        amp_v: state.amp_v * phase,
    }
}

/// Born-rule probability `|⟨out|ψ⟩|²` of `meas.outcome` when `state` is
/// measured in `meas.basis`.
pub fn born_probability(state: QubitState, meas: MeasurementBasis) -> f64 {
    let out = eigenstate(meas.basis, meas.outcome);
    out.inner(&state).norm_sqr().clamp(0.0, 1.0)
}

/// Which trigonometric function drives a cell's closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    Sin,
    Cos,
}

/// One of the eight (prepared state, σy outcome) cells, indexed `1..=8`.
///
/// | label | σy = 0 | σy = 1 |
/// |-------|--------|--------|
/// | X0    | n1: (1+sin φ)/2 | n2: (1−sin φ)/2 |
/// | X1    | n3: (1−sin φ)/2 | n4: (1+sin φ)/2 |
/// | Y0    | n5: (1+cos φ)/2 | n6: (1−cos φ)/2 |
/// | Y1    | n7: (1−cos φ)/2 | n8: (1+cos φ)/2 |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TableCell {
    pub label: PreparedStateLabel,
    pub outcome: Outcome,
}

impl TableCell {
    pub const ALL: [TableCell; 8] = {
        use Outcome::*;
        use PreparedStateLabel::*;
        [
            TableCell {
                label: X0,
                outcome: Zero,
            },
            TableCell {
                label: X0,
                outcome: One,
            },
            TableCell {
                label: X1,
                outcome: Zero,
            },
            TableCell {
                label: X1,
                outcome: One,
            },
            TableCell {
                label: Y0,
                outcome: Zero,
            },
            TableCell {
                label: Y0,
                outcome: One,
            },
            TableCell {
                label: Y1,
                outcome: Zero,
            },
            TableCell {
                label: Y1,
                outcome: One,
            },
        ]
    };

    pub fn new(label: PreparedStateLabel, outcome: Outcome) -> Self {
        Self { label, outcome }
    }

    /// 1-based index.
    pub fn index(self) -> usize {
        2 * self.label.index() + self.outcome.index() + 1
    }

    pub fn from_index(index: usize) -> Option<Self> {
        index.checked_sub(1).and_then(|i| Self::ALL.get(i).copied())
    }

    /// 0-based position, convenient for `[_; 8]` arrays.
    pub fn slot(self) -> usize {
        self.index() - 1
    }

    /// The other outcome for the same prepared state.
    pub fn partner(self) -> Self {
        Self::new(self.label, self.outcome.flipped())
    }

    /// `(quadrature, sign)` such that `p(φ) = (1 + sign·trig(φ)) / 2`.
    pub fn response(self) -> (Quadrature, f64) {
        use Outcome::*;
        use PreparedStateLabel::*;
        match (self.label, self.outcome) {
            (X0, Zero) | (X1, One) => (Quadrature::Sin, 1.0),
            (X0, One) | (X1, Zero) => (Quadrature::Sin, -1.0),
            (Y0, Zero) | (Y1, One) => (Quadrature::Cos, 1.0),
            (Y0, One) | (Y1, Zero) => (Quadrature::Cos, -1.0),
        }
    }

    /// The phase at which the ideal probability of this cell is zero; this is
    /// where its background level is calibrated.
    pub fn calibration_phase(self) -> f64 {
        match self.index() {
            1 | 4 => 3.0 * FRAC_PI_2,
            2 | 3 => FRAC_PI_2,
            5 | 8 => PI,
            _ => 0.0,
        }
    }
}

impl fmt::Display for TableCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.index())
    }
}

/// `1 + sign·trig(φ)`, i.e. twice the closed-form probability.
pub(crate) fn doubled_probability(cell: TableCell, phi: f64) -> f64 {
    let (quad, sign) = cell.response();
    let t = match quad {
        Quadrature::Sin => phi.sin(),
        Quadrature::Cos => phi.cos(),
    };
    1.0 + sign * t
}

/// Closed-form σy outcome probability for a prepared state after phase `phi`.
pub fn table1_probability(label: PreparedStateLabel, outcome: Outcome, phi: f64) -> f64 {
    0.5 * doubled_probability(TableCell::new(label, outcome), phi)
}

/// Analytic `∂p/∂φ` of [`table1_probability`].
pub fn table1_derivative(label: PreparedStateLabel, outcome: Outcome, phi: f64) -> f64 {
    let (quad, sign) = TableCell::new(label, outcome).response();
    let dt = match quad {
        Quadrature::Sin => phi.cos(),
        Quadrature::Cos => -phi.sin(),
    };
    0.5 * sign * dt
}

//! Statistical verdicts on simulated run records: Local Causality,
//! Measurement Independence, no-signaling, repeatability, equivalence of
//! branching and collapse, and the CHSH functional.
//!
//! Analytic records carry model probabilities as weights and are judged by
//! exact comparison with zero. Monte-Carlo records carry counts and are
//! judged by 99% intervals; a verdict is only issued when the interval
//! settles it, otherwise the verdict is inconclusive.

mod causality;
mod chsh;
mod independence;
mod records;
mod repeat;
mod stats;

pub use causality::{local_causality_test, no_signaling_test};
pub use chsh::{
    chsh_from_records, chsh_value, chsh_value_exact, correlator, local_model_records, optimize_chsh, ChshOptimum,
    ChshSettings, LocalModel,
};
pub use independence::{l1_deviation_bound, measurement_independence_test, total_variation};
pub use records::{
    from_branches, from_enumeration, from_outcome_table, from_samples, from_transport, HiddenView,
};
pub use repeat::{
    branch_collapse_check, repeatability_probability, repeatability_test, EquivalenceCheck, EQUIVALENCE_TOL,
};
pub use stats::{newcombe_difference, wilson_interval, Interval, EQUIVALENCE_MARGIN, Z99};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Arm, CircuitError};
use crate::exact::Scalar;
use crate::hilbert::HilbertError;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("no records")]
    Empty,
    #[error("conditioning event `{0}` never occurs")]
    ZeroFrequency(String),
    #[error("records mix conditioning contexts `{0}` and `{1}`")]
    MixedContext(String, String),
    #[error("need at least two distinct settings, found {0}")]
    TooFewSettings(usize),
    #[error("invalid event `{0}` (expected e.g. L1 or R4)")]
    BadEvent(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

pub type Result<T> = std::result::Result<T, InferenceError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "analytic")]
    Analytic,
    #[serde(rename = "monte-carlo", alias = "montecarlo")]
    MonteCarlo,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Analytic => "analytic",
            Mode::MonteCarlo => "monte-carlo",
        })
    }
}

impl FromStr for Mode {
    type Err = InferenceError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Mode::Analytic),
            "montecarlo" | "monte-carlo" | "mc" => Ok(Mode::MonteCarlo),
            _ => Err(InferenceError::Invalid(format!(
                "unknown mode `{s}` (expected analytic or montecarlo)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Violated,
    Satisfied,
    Inconclusive,
}

/// One run, or one analytic cell: the settings of both arms, the detector
/// outcomes, the pre-measurement context, an optional hidden record, and a
/// weight (a probability in analytic mode, a count in Monte-Carlo mode).
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord<S> {
    pub settings: [String; 2],
    pub outcome: [String; 2],
    pub context: String,
    pub hidden: Option<String>,
    pub weight: S,
}

/// Records of one kind, all judged in the same mode.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordSet<S> {
    pub mode: Mode,
    pub records: Vec<RunRecord<S>>,
}

impl<S: Scalar> RecordSet<S> {
    pub fn new(mode: Mode, records: Vec<RunRecord<S>>) -> Self {
        RecordSet { mode, records }
    }

    pub fn total(&self) -> S {
        self.records.iter().map(|r| r.weight.clone()).fold(S::zero(), |a, b| a + b)
    }

    /// Sample size: the number of runs in Monte-Carlo mode, the number of
    /// distinct cells in analytic mode.
    pub fn n(&self) -> usize {
        match self.mode {
            Mode::MonteCarlo => self.total().to_f64().round() as usize,
            Mode::Analytic => self.records.len(),
        }
    }

    pub fn extend(&mut self, other: RecordSet<S>) {
        self.records.extend(other.records);
    }
}

/// A detector click on one arm, written like `L1` or `R4`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub arm: Arm,
    pub outcome: String,
}

impl Event {
    pub fn matches<S>(&self, r: &RunRecord<S>) -> bool {
        r.outcome[self.arm.index()] == self.outcome
    }
}

impl FromStr for Event {
    type Err = InferenceError;

    fn from_str(s: &str) -> Result<Self> {
        let arm = match s.chars().next() {
            Some('L') => Arm::Left,
            Some('R') => Arm::Right,
            _ => return Err(InferenceError::BadEvent(s.to_string())),
        };
        if s.len() < 2 || !s[1..].chars().all(|c| c.is_ascii_digit()) {
            return Err(InferenceError::BadEvent(s.to_string()));
        }
        Ok(Event {
            arm,
            outcome: s.to_string(),
        })
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.outcome)
    }
}

/// Exported verdict of one test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test: String,
    pub statistic: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub n: usize,
    pub mode: Mode,
    pub details: serde_json::Value,
}

impl TestReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Analytic verdict: any nonzero statistic is a violation.
pub(crate) fn exact_verdict<S: Scalar>(statistic: &S) -> Verdict {
    if statistic.is_negligible() {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    }
}

/// Monte-Carlo verdict from a 99% interval on a quantity whose null value
/// is zero: violated when the interval excludes zero, satisfied when it
/// lies inside the equivalence margin, inconclusive otherwise.
pub(crate) fn interval_verdict(ci: Interval) -> Verdict {
    if ci.lo > 0.0 || ci.hi < 0.0 {
        Verdict::Violated
    } else if ci.lo >= -EQUIVALENCE_MARGIN && ci.hi <= EQUIVALENCE_MARGIN {
        Verdict::Satisfied
    } else {
        Verdict::Inconclusive
    }
}

pub(crate) fn common_context<S>(records: &[RunRecord<S>]) -> Result<String> {
    let first = records.first().ok_or(InferenceError::Empty)?;
    for r in records {
        if r.context != first.context {
            return Err(InferenceError::MixedContext(first.context.clone(), r.context.clone()));
        }
    }
    Ok(first.context.clone())
}

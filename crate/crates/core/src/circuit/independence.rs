use serde::Serialize;

use crate::exact::{QSqrt2, Scalar};

use super::model::ExactModel;
use super::transport::{enumerate_transport, TransportPlan, Hidden, RecordEntry, TransportResult};
use super::{Arm, CircuitError, DetectorOutcome, EraserConfig, OpticalCircuit, Result, Setting};

/// One rectangle of initial coordinates, for one initial joint label, with
/// what the transport does to it under one circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct EnumeratedRecord<S> {
    pub settings: [Setting; 2],
    pub initial: [usize; 2],
    /// `[lo, hi)` of the initial coordinate per arm.
    pub x0: [[S; 2]; 2],
    /// Equilibrium probability of the rectangle.
    pub weight: S,
    pub records: [Vec<RecordEntry>; 2],
    pub outcome: DetectorOutcome,
}

impl<S: Scalar> EnumeratedRecord<S> {
    pub fn pre_detection(&self, arm: Arm) -> &[RecordEntry] {
        let r = &self.records[arm.index()];
        &r[..r.len().saturating_sub(1)]
    }

    /// Identifies the initial configuration region, independent of settings.
    pub fn region_key(&self) -> String {
        format!(
            "{}{}|xL[{},{})|xR[{},{})",
            self.initial[0] + 1,
            self.initial[1] + 1,
            self.x0[0][0],
            self.x0[0][1],
            self.x0[1][0],
            self.x0[1][1]
        )
    }
}

fn sorted_unique(mut v: Vec<QSqrt2>) -> Vec<QSqrt2> {
    v.sort();
    v.dedup();
    v
}

/// Exact enumeration of every circuit over one shared partition of the
/// initial configurations: the common refinement of all circuits' cells.
/// Entry `i` of every returned list describes the same initial region.
pub fn refined_records(circuits: &[OpticalCircuit]) -> Result<Vec<Vec<EnumeratedRecord<QSqrt2>>>> {
    if circuits.is_empty() {
        return Err(CircuitError::EmptyInput("no circuits to compare".into()));
    }
    let reports = circuits
        .iter()
        .map(enumerate_transport::<ExactModel>)
        .collect::<Result<Vec<_>>>()?;
    let mut out: Vec<Vec<EnumeratedRecord<QSqrt2>>> = vec![Vec::new(); circuits.len()];
    let mut initials: Vec<([usize; 2], QSqrt2)> = reports[0].cells.iter().map(|c| (c.initial, c.weight.clone())).collect();
    initials.sort_by_key(|a| a.0);
    initials.dedup_by(|a, b| a.0 == b.0);
    for (initial, weight) in initials {
        let cells = || reports.iter().flat_map(|r| r.cells.iter()).filter(move |c| c.initial == initial);
        let cuts = |arm: usize| sorted_unique(cells().flat_map(|c| c.x0[arm].clone()).collect());
        let (cut_l, cut_r) = (cuts(0), cuts(1));
        for wl in cut_l.windows(2) {
            for wr in cut_r.windows(2) {
                let rect = [[wl[0].clone(), wl[1].clone()], [wr[0].clone(), wr[1].clone()]];
                let area = (wl[1].clone() - wl[0].clone()) * (wr[1].clone() - wr[0].clone());
                for (k, rep) in reports.iter().enumerate() {
                    let cell = rep
                        .cells
                        .iter()
                        .find(|c| {
                            c.initial == initial
                                && (0..2).all(|a| c.x0[a][0] <= rect[a][0] && rect[a][1] <= c.x0[a][1])
                        })
                        .ok_or_else(|| CircuitError::Inconsistent("cells do not tile the initial square".into()))?;
                    out[k].push(EnumeratedRecord {
                        settings: circuits[k].settings(),
                        initial,
                        x0: rect.clone(),
                        weight: weight.clone() * area.clone(),
                        records: cell.records.clone(),
                        outcome: cell
                            .detector_outcome()
                            .ok_or_else(|| CircuitError::Inconsistent("undetected cell".into()))?,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// How the left arm's path depends on the right arm's setting, for fixed
/// hidden variables, with the right arm acting first.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SettingDependence {
    pub n: usize,
    pub changed: usize,
    pub changed_fraction: f64,
    /// Up to five `[right = interference, right = whichpath]` pairs whose
    /// left records differ.
    pub examples: Vec<[TransportResult; 2]>,
    /// Left outcome frequencies under each right setting.
    pub left_marginals: [Vec<(String, f64)>; 2],
}

const MAX_EXAMPLES: usize = 5;

/// Runs every hidden value with the left arm on interference and the right
/// arm on interference and then on which-path (right acting first), and
/// compares the left records. Angles and geometry come from `base`.
pub fn trajectory_setting_dependence(hidden: &[Hidden], base: &EraserConfig) -> Result<SettingDependence> {
    if hidden.is_empty() {
        return Err(CircuitError::EmptyInput("no hidden values".into()));
    }
    let build = |right| {
        base.clone()
            .with_settings(Setting::Interference, right)
            .right_first(true)
            .build()
    };
    let circuits = [build(Setting::Interference)?, build(Setting::WhichPath)?];
    let plans = [TransportPlan::new(&circuits[0])?, TransportPlan::new(&circuits[1])?];
    let mut changed = 0;
    let mut examples = Vec::new();
    let mut counts: [Vec<(String, usize)>; 2] = Default::default();
    for h in hidden {
        let a = plans[0].transport(h)?;
        let b = plans[1].transport(h)?;
        for (k, t) in [&a, &b].into_iter().enumerate() {
            match counts[k].iter_mut().find(|(n, _)| *n == t.outcome.left) {
                Some((_, c)) => *c += 1,
                None => counts[k].push((t.outcome.left.clone(), 1)),
            }
        }
        if a.config.records[0] != b.config.records[0] {
            changed += 1;
            if examples.len() < MAX_EXAMPLES {
                examples.push([a, b]);
            }
        }
    }
    let n = hidden.len();
    let left_marginals = counts.map(|mut c| {
        c.sort();
        c.into_iter().map(|(name, k)| (name, k as f64 / n as f64)).collect()
    });
    Ok(SettingDependence {
        n,
        changed,
        changed_fraction: changed as f64 / n as f64,
        examples,
        left_marginals,
    })
}

use std::collections::BTreeMap;

use crate::circuit::{
    Arm, DetectorOutcome, EnumeratedRecord, Hidden, OpticalCircuit, OutcomeTable, RecordEntry, TransportResult,
};
use crate::exact::{QSqrt2, Scalar};

use super::{InferenceError, Mode, RecordSet, Result, RunRecord};

/// Which part of a transported pair becomes the hidden record.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HiddenView {
    /// Initial joint label and initial-coordinate region only.
    Initial,
    /// Initial region plus the given arm's path record before its detection.
    PreDetection(Arm),
}

fn settings_of(circuit: &OpticalCircuit) -> [String; 2] {
    circuit.settings().map(|s| s.to_string())
}

fn outcome_pair(o: &DetectorOutcome) -> [String; 2] {
    [o.left.clone(), o.right.clone()]
}

fn format_record(r: &[RecordEntry]) -> String {
    r.iter().map(|(l, s)| format!("{l}:{s}")).collect::<Vec<_>>().join(",")
}

fn hidden_key<S: Scalar>(rec: &EnumeratedRecord<S>, view: HiddenView) -> String {
    match view {
        HiddenView::Initial => rec.region_key(),
        HiddenView::PreDetection(arm) => {
            format!("{}|{}[{}]", rec.region_key(), arm.prefix(), format_record(rec.pre_detection(arm)))
        }
    }
}

/// Analytic records, one per joint outcome of a model distribution.
pub fn from_outcome_table<S: Scalar>(table: &OutcomeTable<S>, circuit: &OpticalCircuit, context: &str) -> RecordSet<S> {
    let settings = settings_of(circuit);
    RecordSet::new(
        Mode::Analytic,
        table
            .entries
            .iter()
            .map(|(o, p)| RunRecord {
                settings: settings.clone(),
                outcome: outcome_pair(o),
                context: context.to_string(),
                hidden: None,
                weight: p.clone(),
            })
            .collect(),
    )
}

/// Analytic records from many-worlds branches; the weights are branch
/// weights rather than sampled frequencies.
pub fn from_branches(branches: &[(DetectorOutcome, f64)], circuit: &OpticalCircuit, context: &str) -> RecordSet<f64> {
    let settings = settings_of(circuit);
    RecordSet::new(
        Mode::Analytic,
        branches
            .iter()
            .map(|(o, w)| RunRecord {
                settings: settings.clone(),
                outcome: outcome_pair(o),
                context: context.to_string(),
                hidden: None,
                weight: *w,
            })
            .collect(),
    )
}

fn counted(map: BTreeMap<([String; 2], [String; 2], Option<String>), usize>, context: &str) -> RecordSet<f64> {
    RecordSet::new(
        Mode::MonteCarlo,
        map.into_iter()
            .map(|((settings, outcome, hidden), k)| RunRecord {
                settings,
                outcome,
                context: context.to_string(),
                hidden,
                weight: k as f64,
            })
            .collect(),
    )
}

/// Monte-Carlo records from sampled outcomes, aggregated into counts.
pub fn from_samples(outcomes: &[DetectorOutcome], circuit: &OpticalCircuit, context: &str) -> RecordSet<f64> {
    let settings = settings_of(circuit);
    let mut map = BTreeMap::new();
    for o in outcomes {
        *map.entry((settings.clone(), outcome_pair(o), None)).or_insert(0) += 1;
    }
    counted(map, context)
}

/// Analytic records with hidden records from an exact enumeration.
pub fn from_enumeration(records: &[EnumeratedRecord<QSqrt2>], view: HiddenView, context: &str) -> RecordSet<QSqrt2> {
    RecordSet::new(
        Mode::Analytic,
        records
            .iter()
            .map(|r| RunRecord {
                settings: r.settings.map(|s| s.to_string()),
                outcome: outcome_pair(&r.outcome),
                context: context.to_string(),
                hidden: Some(hidden_key(r, view)),
                weight: r.weight.clone(),
            })
            .collect(),
    )
}

fn region_of<'a>(h: &Hidden, regions: &'a [EnumeratedRecord<QSqrt2>]) -> Option<&'a EnumeratedRecord<QSqrt2>> {
    regions.iter().find(|r| {
        r.initial == h.labels
            && (0..2).all(|a| r.x0[a][0].to_f64() <= h.coords[a] && h.coords[a] < r.x0[a][1].to_f64())
    })
}

/// Monte-Carlo records from sampled transports. Coordinates are binned into
/// the regions of `regions` (one circuit's list from
/// [`crate::circuit::refined_records`]) so that hidden records are discrete.
pub fn from_transport(
    results: &[TransportResult],
    circuit: &OpticalCircuit,
    regions: &[EnumeratedRecord<QSqrt2>],
    view: HiddenView,
    context: &str,
) -> Result<RecordSet<f64>> {
    let settings = settings_of(circuit);
    let mut map = BTreeMap::new();
    for t in results {
        let region = region_of(&t.initial, regions).ok_or_else(|| {
            InferenceError::Invalid(format!("hidden value {:?} lies in no region", t.initial))
        })?;
        let key = match view {
            HiddenView::Initial => region.region_key(),
            HiddenView::PreDetection(arm) => format!(
                "{}|{}[{}]",
                region.region_key(),
                arm.prefix(),
                format_record(t.config.pre_detection(arm))
            ),
        };
        *map.entry((settings.clone(), outcome_pair(&t.outcome), Some(key))).or_insert(0) += 1;
    }
    Ok(counted(map, context))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{
        build_eraser, copenhagen_joint_distribution_exact, refined_records, sample_copenhagen, sample_hidden,
        sample_transport, Setting,
    };
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn table_records_carry_probabilities() {
        let c = build_eraser(Setting::Interference, Setting::WhichPath, false, FRAC_PI_4).unwrap();
        let set = from_outcome_table(&copenhagen_joint_distribution_exact(&c).unwrap(), &c, "s");
        assert_eq!(set.records.len(), 4);
        assert_eq!(set.total(), QSqrt2::one());
        assert_eq!(set.records[0].settings, ["interference".to_string(), "whichpath".to_string()]);
    }

    #[test]
    fn samples_aggregate_to_counts() {
        let c = build_eraser(Setting::Interference, Setting::Interference, false, FRAC_PI_4).unwrap();
        let set = from_samples(&sample_copenhagen(&c, 500, 1).unwrap(), &c, "s");
        assert_eq!(set.n(), 500);
        assert_eq!(set.records.len(), 2);
    }

    #[test]
    fn sampled_transport_lands_in_enumerated_regions() {
        let circuits = vec![
            build_eraser(Setting::Interference, Setting::Interference, true, FRAC_PI_4).unwrap(),
            build_eraser(Setting::Interference, Setting::WhichPath, true, FRAC_PI_4).unwrap(),
        ];
        let regions = refined_records(&circuits).unwrap();
        let hidden = sample_hidden(400, 3);
        let t = sample_transport(&circuits[1], &hidden).unwrap();
        let set = from_transport(&t, &circuits[1], &regions[1], HiddenView::PreDetection(Arm::Left), "s").unwrap();
        assert_eq!(set.n(), 400);
        let exact = from_enumeration(&regions[1], HiddenView::PreDetection(Arm::Left), "s");
        for r in &set.records {
            let twin = exact.records.iter().find(|e| e.hidden == r.hidden).expect("same hidden key");
            assert_eq!(twin.outcome, r.outcome);
        }
    }
}

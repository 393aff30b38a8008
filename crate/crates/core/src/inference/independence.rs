use std::collections::{BTreeMap, BTreeSet};

use serde_json::json;

use crate::exact::Scalar;

use super::{exact_verdict, InferenceError, Mode, RecordSet, Result, TestReport, Verdict};

/// ½ Σ |p(x) − q(x)| over the union of supports.
pub fn total_variation<S: Scalar>(p: &BTreeMap<String, S>, q: &BTreeMap<String, S>) -> S {
    let keys: BTreeSet<&String> = p.keys().chain(q.keys()).collect();
    let sum = keys
        .into_iter()
        .map(|k| {
            let a = p.get(k).cloned().unwrap_or_else(S::zero);
            let b = q.get(k).cloned().unwrap_or_else(S::zero);
            (a - b).abs_val()
        })
        .fold(S::zero(), |a, b| a + b);
    sum / S::from_ratio(2, 1)
}

/// With probability at least 1 − `alpha`, the L1 distance between an
/// empirical distribution of `n` draws over `k` categories and the truth is
/// below this bound (Weissman et al. concentration inequality).
pub fn l1_deviation_bound(n: f64, k: usize, alpha: f64) -> f64 {
    (2.0 / n * (k as f64 * std::f64::consts::LN_2 - alpha.ln())).sqrt()
}

/// Per-setting error budget of the Monte-Carlo total variation bound.
const ALPHA_PER_GROUP: f64 = 0.005;

fn inconclusive(n: usize, mode: Mode, why: &str) -> TestReport {
    TestReport {
        test: "measurement_independence".into(),
        statistic: 0.0,
        threshold: 0.0,
        verdict: Verdict::Inconclusive,
        n,
        mode,
        details: json!({ "note": why }),
    }
}

/// Compares the distribution of hidden records across measurement settings.
/// The statistic is the largest total variation distance between the
/// per-setting distributions; any nonzero value means the hidden variables
/// depend on the settings.
pub fn measurement_independence_test<S: Scalar>(set: &RecordSet<S>) -> Result<TestReport> {
    if set.records.is_empty() {
        return Err(InferenceError::Empty);
    }
    if set.records.iter().any(|r| r.hidden.is_none()) {
        return Ok(inconclusive(set.n(), set.mode, "records carry no hidden variables"));
    }
    let mut groups: BTreeMap<String, BTreeMap<String, S>> = BTreeMap::new();
    for r in &set.records {
        let w = groups
            .entry(r.settings.join(","))
            .or_default()
            .entry(r.hidden.clone().expect("checked above"))
            .or_insert_with(S::zero);
        *w = w.clone() + r.weight.clone();
    }
    if groups.len() < 2 {
        return Err(InferenceError::TooFewSettings(groups.len()));
    }
    let sizes: BTreeMap<String, f64> = groups
        .iter()
        .map(|(k, g)| (k.clone(), g.values().cloned().fold(S::zero(), |a, b| a + b).to_f64()))
        .collect();
    let normalized: BTreeMap<String, BTreeMap<String, S>> = groups
        .into_iter()
        .map(|(k, g)| {
            let total = g.values().cloned().fold(S::zero(), |a, b| a + b);
            let g = g.into_iter().map(|(h, w)| (h, w / total.clone())).collect();
            (k, g)
        })
        .collect();
    let names: Vec<&String> = normalized.keys().collect();
    let mut stat = S::zero();
    let mut margin = 0.0f64;
    let mut pairs = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let tv = total_variation(&normalized[*a], &normalized[*b]);
            let support: BTreeSet<&String> = normalized[*a].keys().chain(normalized[*b].keys()).collect();
            let m = (l1_deviation_bound(sizes[*a], support.len(), ALPHA_PER_GROUP)
                + l1_deviation_bound(sizes[*b], support.len(), ALPHA_PER_GROUP))
                / 2.0;
            pairs.push(json!({ "settings": [a, b], "total_variation": tv.to_f64(), "exact": tv.to_string() }));
            if tv > stat {
                stat = tv;
                margin = m;
            } else if stat.is_negligible() {
                margin = margin.max(m);
            }
        }
    }
    let mut details = json!({ "pairs": pairs });
    let verdict = match set.mode {
        Mode::Analytic => exact_verdict(&stat),
        Mode::MonteCarlo => {
            let s = stat.to_f64();
            details["margin99"] = json!(margin);
            if s - margin > 0.0 {
                Verdict::Violated
            } else if s + margin <= super::EQUIVALENCE_MARGIN {
                Verdict::Satisfied
            } else {
                Verdict::Inconclusive
            }
        }
    };
    Ok(TestReport {
        test: "measurement_independence".into(),
        statistic: stat.to_f64(),
        threshold: 0.0,
        verdict,
        n: set.n(),
        mode: set.mode,
        details,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{
        build_eraser, copenhagen_joint_distribution_exact, refined_records, sample_hidden, sample_transport, Arm,
        OpticalCircuit, Setting,
    };
    use crate::exact::QSqrt2;
    use crate::inference::{from_enumeration, from_outcome_table, from_transport, HiddenView};
    use std::f64::consts::FRAC_PI_4;

    fn circuits(right: Setting) -> Vec<OpticalCircuit> {
        vec![
            build_eraser(Setting::Interference, Setting::Interference, true, FRAC_PI_4).unwrap(),
            build_eraser(Setting::Interference, right, true, FRAC_PI_4).unwrap(),
        ]
    }

    fn enumerated(right: Setting, view: HiddenView) -> RecordSet<QSqrt2> {
        let regions = refined_records(&circuits(right)).unwrap();
        let mut set = RecordSet::new(Mode::Analytic, Vec::new());
        for r in &regions {
            set.extend(from_enumeration(r, view, "pair"));
        }
        set
    }

    #[test]
    fn tv_of_simple_distributions() {
        let p: BTreeMap<String, f64> = [("a".into(), 0.5), ("b".into(), 0.5)].into();
        let q: BTreeMap<String, f64> = [("a".into(), 1.0)].into();
        assert_eq!(total_variation(&p, &q), 0.5);
        assert_eq!(total_variation(&p, &p), 0.0);
    }

    #[test]
    fn bohmian_eraser_violates_measurement_independence() {
        let rep = measurement_independence_test(&enumerated(Setting::WhichPath, HiddenView::PreDetection(Arm::Left)))
            .unwrap();
        assert_eq!(rep.verdict, Verdict::Violated);
        assert_eq!(rep.statistic, 0.5);
        assert_eq!(rep.details["pairs"][0]["exact"], QSqrt2::rational(1, 2).to_string());
    }

    #[test]
    fn initial_configurations_do_not_depend_on_settings() {
        let rep = measurement_independence_test(&enumerated(Setting::WhichPath, HiddenView::Initial)).unwrap();
        assert_eq!(rep.verdict, Verdict::Satisfied);
        assert_eq!(rep.statistic, 0.0);
    }

    #[test]
    fn identical_settings_give_zero() {
        let mut set = enumerated(Setting::Interference, HiddenView::PreDetection(Arm::Left));
        let half = set.records.len() / 2;
        for r in set.records.iter_mut().skip(half) {
            r.settings[0] = "interference-copy".into();
        }
        let rep = measurement_independence_test(&set).unwrap();
        assert_eq!(rep.statistic, 0.0);
    }

    #[test]
    fn missing_hidden_records_are_inconclusive() {
        let c = build_eraser(Setting::Interference, Setting::WhichPath, true, FRAC_PI_4).unwrap();
        let set = from_outcome_table(&copenhagen_joint_distribution_exact(&c).unwrap(), &c, "pair");
        let rep = measurement_independence_test(&set).unwrap();
        assert_eq!(rep.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn sampled_transport_matches_enumeration() {
        let cs = circuits(Setting::WhichPath);
        let regions = refined_records(&cs).unwrap();
        let hidden = sample_hidden(20_000, 11);
        let mut pre = RecordSet::new(Mode::MonteCarlo, Vec::new());
        let mut init = RecordSet::new(Mode::MonteCarlo, Vec::new());
        for (c, r) in cs.iter().zip(&regions) {
            let t = sample_transport(c, &hidden).unwrap();
            pre.extend(from_transport(&t, c, r, HiddenView::PreDetection(Arm::Left), "pair").unwrap());
            init.extend(from_transport(&t, c, r, HiddenView::Initial, "pair").unwrap());
        }
        let rep = measurement_independence_test(&pre).unwrap();
        assert_eq!(rep.verdict, Verdict::Violated);
        // same hidden draws in both groups: the estimate is the fraction of
        // draws whose left record changed, Binomial(n, 1/2)/n
        assert!((rep.statistic - 0.5).abs() < 3.0 * (0.25f64 / 2e4).sqrt());
        let rep = measurement_independence_test(&init).unwrap();
        assert_eq!(rep.statistic, 0.0);
        assert_ne!(rep.verdict, Verdict::Violated);
    }
}

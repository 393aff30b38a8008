use std::collections::BTreeMap;

use serde_json::json;

use crate::circuit::Arm;
use crate::exact::Scalar;

use super::stats::{newcombe_difference, Interval, Z99};
use super::{
    common_context, exact_verdict, interval_verdict, Event, InferenceError, Mode, RecordSet, Result, TestReport,
    Verdict,
};

fn weight_where<S: Scalar, F: Fn(&super::RunRecord<S>) -> bool>(set: &RecordSet<S>, f: F) -> S {
    set.records
        .iter()
        .filter(|r| f(r))
        .map(|r| r.weight.clone())
        .fold(S::zero(), |a, b| a + b)
}

/// Compares P(A | S, B) with P(A | S) on records sharing one context S.
/// Any difference means the model violates Local Causality.
pub fn local_causality_test<S: Scalar>(set: &RecordSet<S>, a: &Event, b: &Event) -> Result<TestReport> {
    let context = common_context(&set.records)?;
    let total = set.total();
    let w_b = weight_where(set, |r| b.matches(r));
    let w_a = weight_where(set, |r| a.matches(r));
    let w_ab = weight_where(set, |r| a.matches(r) && b.matches(r));
    for (w, e) in [(&w_b, b), (&w_a, a)] {
        if w.is_negligible() {
            return Err(InferenceError::ZeroFrequency(e.to_string()));
        }
    }
    let p_a = w_a.clone() / total.clone();
    let p_ab = w_ab.clone() / w_b.clone();
    let stat = (p_ab.clone() - p_a.clone()).abs_val();
    let mut details = json!({
        "context": context,
        "event_a": a.to_string(),
        "event_b": b.to_string(),
        "p_a_given_s": p_a.to_f64(),
        "p_a_given_s_b": p_ab.to_f64(),
    });
    let verdict = match set.mode {
        Mode::Analytic => {
            if S::is_exact() {
                details["exact_statistic"] = json!(stat.to_string());
            }
            exact_verdict(&stat)
        }
        Mode::MonteCarlo => {
            // P(A|B) − P(A) = P(¬B)·(P(A|B) − P(A|¬B)), and the two
            // conditional samples are disjoint.
            let (n, n_b) = (total.to_f64(), w_b.to_f64());
            let n_not_b = n - n_b;
            if n_not_b <= 0.0 {
                details["note"] = json!("B occurred in every run; no contrast is available");
                Verdict::Inconclusive
            } else {
                let ci = newcombe_difference(w_ab.to_f64(), n_b, w_a.to_f64() - w_ab.to_f64(), n_not_b, Z99);
                let scale = n_not_b / n;
                let ci = Interval {
                    lo: ci.lo * scale,
                    hi: ci.hi * scale,
                };
                details["ci99"] = json!([ci.lo, ci.hi]);
                interval_verdict(ci)
            }
        }
    };
    Ok(TestReport {
        test: "local_causality".into(),
        statistic: stat.to_f64(),
        threshold: 0.0,
        verdict,
        n: set.n(),
        mode: set.mode,
        details,
    })
}

/// Checks that `arm`'s outcome frequencies do not depend on the other arm's
/// setting, for each of `arm`'s own settings.
pub fn no_signaling_test<S: Scalar>(set: &RecordSet<S>, arm: Arm) -> Result<TestReport> {
    if set.records.is_empty() {
        return Err(InferenceError::Empty);
    }
    let (own, other) = (arm.index(), arm.other().index());
    // own setting -> remote setting -> outcome -> weight
    let mut groups: BTreeMap<&str, BTreeMap<&str, BTreeMap<&str, S>>> = BTreeMap::new();
    for r in &set.records {
        let w = groups
            .entry(&r.settings[own])
            .or_default()
            .entry(&r.settings[other])
            .or_default()
            .entry(&r.outcome[own])
            .or_insert_with(S::zero);
        *w = w.clone() + r.weight.clone();
    }
    let remote_count = groups.values().map(|g| g.len()).max().unwrap_or(0);
    if remote_count < 2 {
        return Err(InferenceError::TooFewSettings(remote_count));
    }
    let mut stat = S::zero();
    let mut intervals = Vec::new();
    let mut marginals = serde_json::Map::new();
    for (own_setting, by_remote) in &groups {
        let outcomes: Vec<&str> = {
            let mut v: Vec<&str> = by_remote.values().flat_map(|m| m.keys().copied()).collect();
            v.sort();
            v.dedup();
            v
        };
        let totals: BTreeMap<&str, S> = by_remote
            .iter()
            .map(|(k, m)| (*k, m.values().cloned().fold(S::zero(), |a, b| a + b)))
            .collect();
        let count = |remote: &str, o: &str| by_remote[remote].get(o).cloned().unwrap_or_else(S::zero);
        for (remote, m) in by_remote {
            let entry: serde_json::Map<String, serde_json::Value> = m
                .iter()
                .map(|(o, w)| (o.to_string(), json!((w.clone() / totals[remote].clone()).to_f64())))
                .collect();
            marginals.insert(format!("{own_setting}|{remote}"), serde_json::Value::Object(entry));
        }
        let remotes: Vec<&str> = by_remote.keys().copied().collect();
        for (i, x1) in remotes.iter().enumerate() {
            for x2 in &remotes[i + 1..] {
                for o in &outcomes {
                    let (k1, k2) = (count(x1, o), count(x2, o));
                    let (n1, n2) = (totals[x1].clone(), totals[x2].clone());
                    let d = (k1.clone() / n1.clone() - k2.clone() / n2.clone()).abs_val();
                    if d > stat {
                        stat = d;
                    }
                    if set.mode == Mode::MonteCarlo {
                        intervals.push(newcombe_difference(k1.to_f64(), n1.to_f64(), k2.to_f64(), n2.to_f64(), Z99));
                    }
                }
            }
        }
    }
    let verdict = match set.mode {
        Mode::Analytic => exact_verdict(&stat),
        Mode::MonteCarlo => {
            let vs: Vec<Verdict> = intervals.iter().map(|&ci| interval_verdict(ci)).collect();
            if vs.contains(&Verdict::Violated) {
                Verdict::Violated
            } else if vs.iter().all(|v| *v == Verdict::Satisfied) {
                Verdict::Satisfied
            } else {
                Verdict::Inconclusive
            }
        }
    };
    let mut details = json!({ "arm": arm, "marginals": marginals });
    if set.mode == Mode::MonteCarlo {
        details["ci99"] = json!(intervals.iter().map(|c| [c.lo, c.hi]).collect::<Vec<_>>());
    }
    Ok(TestReport {
        test: "no_signaling".into(),
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
        build_eraser, copenhagen_joint_distribution_exact, mwi_branches, sample_copenhagen, Setting,
    };
    use crate::exact::QSqrt2;
    use crate::hilbert::{born_distribution, Observable, Space, StateVector};
    use crate::inference::{from_branches, from_outcome_table, from_samples, RunRecord};
    use std::f64::consts::FRAC_PI_4;

    fn ev(s: &str) -> Event {
        s.parse().unwrap()
    }

    fn eraser(left: Setting, right: Setting) -> crate::circuit::OpticalCircuit {
        build_eraser(left, right, false, FRAC_PI_4).unwrap()
    }

    #[test]
    fn eraser_violates_local_causality_exactly() {
        let c = eraser(Setting::Interference, Setting::Interference);
        let set = from_outcome_table(&copenhagen_joint_distribution_exact(&c).unwrap(), &c, "pair");
        let rep = local_causality_test(&set, &ev("R1"), &ev("L1")).unwrap();
        assert_eq!(rep.verdict, Verdict::Violated);
        assert_eq!(rep.statistic, 0.5);
        assert_eq!(rep.details["exact_statistic"], QSqrt2::rational(1, 2).to_string());
        assert_eq!(rep.details["p_a_given_s_b"], 1.0);
    }

    #[test]
    fn branch_weights_give_the_same_verdict() {
        let c = eraser(Setting::Interference, Setting::Interference);
        let set = from_branches(&mwi_branches(&c).unwrap(), &c, "pair");
        let rep = local_causality_test(&set, &ev("R1"), &ev("L1")).unwrap();
        assert_eq!(rep.verdict, Verdict::Violated);
        assert!((rep.statistic - 0.5).abs() < 1e-12);
    }

    #[test]
    fn product_state_is_locally_causal() {
        let a = Space::paths("L");
        let b = Space::paths("R");
        let plus = StateVector::from_real(a.clone(), &[1.0, 1.0]).unwrap();
        let tilted = StateVector::from_real(b.clone(), &[0.6, 0.8]).unwrap();
        let state = plus.tensor(&tilted);
        let obs = Observable::tensor(&Observable::basis(a), &Observable::basis(b));
        let table = born_distribution(&state, &obs).unwrap();
        let records = table
            .entries
            .iter()
            .map(|(label, p)| {
                let (l, r) = label.split_once(',').unwrap();
                RunRecord {
                    settings: ["z".into(), "z".into()],
                    outcome: [format!("L{l}"), format!("R{r}")],
                    context: "product".into(),
                    hidden: None,
                    weight: *p,
                }
            })
            .collect();
        let set = RecordSet::new(Mode::Analytic, records);
        let rep = local_causality_test(&set, &ev("R1"), &ev("L1")).unwrap();
        assert_eq!(rep.verdict, Verdict::Satisfied);
        assert!(rep.statistic < 1e-12);
    }

    #[test]
    fn sampled_eraser_violates_and_agrees_with_analytic() {
        let c = eraser(Setting::Interference, Setting::Interference);
        let set = from_samples(&sample_copenhagen(&c, 20_000, 9).unwrap(), &c, "pair");
        let rep = local_causality_test(&set, &ev("R1"), &ev("L1")).unwrap();
        assert_eq!(rep.mode, Mode::MonteCarlo);
        assert_eq!(rep.verdict, Verdict::Violated);
        // P̂(R1) ~ Binomial(n, 1/2)/n, P̂(R1|L1) = 1 exactly
        assert!((rep.statistic - 0.5).abs() < 3.0 * (0.25f64 / 20_000.0).sqrt());
    }

    #[test]
    fn zero_frequency_and_mixed_context_rejected() {
        let c = eraser(Setting::Interference, Setting::Interference);
        let set = from_outcome_table(&copenhagen_joint_distribution_exact(&c).unwrap(), &c, "pair");
        assert!(matches!(
            local_causality_test(&set, &ev("R1"), &ev("L3")),
            Err(InferenceError::ZeroFrequency(_))
        ));
        let mut mixed = set.clone();
        mixed.records[0].context = "other".into();
        assert!(matches!(
            local_causality_test(&mixed, &ev("R1"), &ev("L1")),
            Err(InferenceError::MixedContext(..))
        ));
    }

    fn both_right_settings() -> RecordSet<QSqrt2> {
        let mut set = RecordSet::new(Mode::Analytic, Vec::new());
        for right in [Setting::Interference, Setting::WhichPath] {
            let c = eraser(Setting::Interference, right);
            set.extend(from_outcome_table(&copenhagen_joint_distribution_exact(&c).unwrap(), &c, "pair"));
        }
        set
    }

    #[test]
    fn eraser_does_not_signal() {
        let set = both_right_settings();
        let rep = no_signaling_test(&set, Arm::Left).unwrap();
        assert_eq!(rep.verdict, Verdict::Satisfied);
        assert_eq!(rep.statistic, 0.0);
        assert_eq!(rep.details["marginals"]["interference|whichpath"]["L1"], 0.5);
    }

    #[test]
    fn local_causality_and_no_signaling_on_the_same_records() {
        let set = both_right_settings();
        let same: Vec<_> = set.records.iter().filter(|r| r.settings[1] == "interference").cloned().collect();
        let lc = local_causality_test(&RecordSet::new(Mode::Analytic, same), &ev("R1"), &ev("L1")).unwrap();
        let ns = no_signaling_test(&set, Arm::Left).unwrap();
        assert_eq!((lc.verdict, ns.verdict), (Verdict::Violated, Verdict::Satisfied));
    }

    #[test]
    fn copied_setting_signals() {
        let mut records = Vec::new();
        for (right, left) in [("interference", "L1"), ("whichpath", "L2")] {
            for r in ["R1", "R2"] {
                for _ in 0..500 {
                    records.push(RunRecord {
                        settings: ["x".into(), right.into()],
                        outcome: [left.into(), r.into()],
                        context: "fake".into(),
                        hidden: None,
                        weight: 1.0,
                    });
                }
            }
        }
        let rep = no_signaling_test(&RecordSet::new(Mode::MonteCarlo, records.clone()), Arm::Left).unwrap();
        assert_eq!(rep.verdict, Verdict::Violated);
        assert_eq!(rep.statistic, 1.0);
        let analytic = RecordSet::new(Mode::Analytic, records);
        assert_eq!(no_signaling_test(&analytic, Arm::Left).unwrap().statistic, 1.0);
    }

    #[test]
    fn sampled_eraser_no_signaling_is_not_violated() {
        let mut set = RecordSet::new(Mode::MonteCarlo, Vec::new());
        for (k, right) in [Setting::Interference, Setting::WhichPath].into_iter().enumerate() {
            let c = eraser(Setting::Interference, right);
            set.extend(from_samples(&sample_copenhagen(&c, 100_000, 40 + k as u64).unwrap(), &c, "pair"));
        }
        let rep = no_signaling_test(&set, Arm::Left).unwrap();
        assert_ne!(rep.verdict, Verdict::Violated);
    }

    #[test]
    fn single_remote_setting_rejected() {
        let c = eraser(Setting::Interference, Setting::Interference);
        let set = from_outcome_table(&copenhagen_joint_distribution_exact(&c).unwrap(), &c, "pair");
        assert!(matches!(no_signaling_test(&set, Arm::Left), Err(InferenceError::TooFewSettings(1))));
    }
}

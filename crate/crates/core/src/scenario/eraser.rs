use serde::Serialize;
use serde_json::json;

use crate::circuit::{
    copenhagen_joint_distribution, copenhagen_joint_distribution_exact, enumerate_transport, path_record,
    refined_records, sample_copenhagen, sample_hidden, sample_transport, trajectory_setting_dependence, Arm,
    DetectorOutcome, EraserConfig, ExactModel, FloatModel, JointModel, OpticalCircuit, OutcomeTable, PathRecord,
    Setting,
};
use crate::exact::Scalar;
use crate::inference::{
    from_enumeration, from_outcome_table, from_samples, from_transport, local_causality_test,
    measurement_independence_test, no_signaling_test, Event, HiddenView, InferenceError, Mode, RecordSet,
    TestReport,
};
use crate::rng::derive_seed;

use super::plot::{render_svg, PlotInput};
use super::{check_report, Result, RunOutput, ScenarioConfig};

/// Hidden values drawn for exported path records.
pub(crate) const MAX_PATH_RECORDS: usize = 1000;

#[derive(Serialize)]
struct JointEntry {
    left: String,
    right: String,
    probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frequency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
}

#[derive(Serialize)]
struct EnumerationSummary {
    exact: bool,
    cells: usize,
    layers_agree: bool,
    outcomes_agree: bool,
}

#[derive(Serialize)]
struct JointDocument {
    settings: [Setting; 2],
    right_first: bool,
    theta: [f64; 2],
    mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    copenhagen: Vec<JointEntry>,
    bohmian: Vec<JointEntry>,
    enumeration: EnumerationSummary,
}

#[derive(Serialize)]
pub(crate) struct PairedRecords {
    pub n: usize,
    pub changed: usize,
    pub changed_fraction: f64,
    pub left_marginals: [Vec<(String, f64)>; 2],
    pub pairs: Vec<[PathRecord; 2]>,
}

fn entries<S: Scalar>(t: &OutcomeTable<S>) -> Vec<JointEntry> {
    t.entries
        .iter()
        .map(|(o, p)| JointEntry {
            left: o.left.clone(),
            right: o.right.clone(),
            probability: p.to_f64(),
            exact: S::is_exact().then(|| p.to_string()),
            frequency: None,
            sigma: None,
        })
        .collect()
}

fn frequencies(outcomes: &[DetectorOutcome], o: &DetectorOutcome) -> f64 {
    outcomes.iter().filter(|x| *x == o).count() as f64 / outcomes.len() as f64
}

fn enumeration<M: JointModel>(c: &OpticalCircuit) -> Result<(OutcomeTable<M::S>, EnumerationSummary)> {
    let rep = enumerate_transport::<M>(c)?;
    let summary = EnumerationSummary {
        exact: M::S::is_exact(),
        cells: rep.cells.len(),
        layers_agree: rep.layers_agree(),
        outcomes_agree: rep.outcomes_agree(),
    };
    Ok((rep.outcomes, summary))
}

/// Copenhagen statistics, exact when every splitter allows it.
pub(crate) fn analytic_records(c: &OpticalCircuit, context: &str) -> Result<AnyRecords> {
    Ok(if c.is_exact() {
        AnyRecords::Exact(from_outcome_table(&copenhagen_joint_distribution_exact(c)?, c, context))
    } else {
        AnyRecords::Float(from_outcome_table(&copenhagen_joint_distribution(c)?, c, context))
    })
}

pub(crate) enum AnyRecords {
    Exact(RecordSet<crate::exact::QSqrt2>),
    Float(RecordSet<f64>),
}

impl AnyRecords {
    pub(crate) fn extend(&mut self, other: AnyRecords) {
        match (self, other) {
            (AnyRecords::Exact(a), AnyRecords::Exact(b)) => a.extend(b),
            (AnyRecords::Float(a), AnyRecords::Float(b)) => a.extend(b),
            _ => unreachable!("records of one run share a scalar type"),
        }
    }

    pub(crate) fn local_causality(&self, a: &Event, b: &Event) -> std::result::Result<TestReport, InferenceError> {
        match self {
            AnyRecords::Exact(s) => local_causality_test(s, a, b),
            AnyRecords::Float(s) => local_causality_test(s, a, b),
        }
    }

    pub(crate) fn no_signaling(&self, arm: Arm) -> std::result::Result<TestReport, InferenceError> {
        match self {
            AnyRecords::Exact(s) => no_signaling_test(s, arm),
            AnyRecords::Float(s) => no_signaling_test(s, arm),
        }
    }
}

const CONTEXT: &str = "pair-state";

fn records_for(c: &OpticalCircuit, config: &ScenarioConfig, tag: &str) -> Result<AnyRecords> {
    Ok(match config.mode {
        Mode::Analytic => analytic_records(c, CONTEXT)?,
        Mode::MonteCarlo => {
            let seed = derive_seed(config.seed, tag);
            AnyRecords::Float(from_samples(&sample_copenhagen(c, config.trials, seed)?, c, CONTEXT))
        }
    })
}

fn first_event(c: &OpticalCircuit, arm: Arm) -> Event {
    Event {
        arm,
        outcome: c.outcome_set(arm)[0].clone(),
    }
}

fn circuit_tag(c: &OpticalCircuit) -> String {
    let [l, r] = c.settings();
    format!("copenhagen-{l}-{r}-{}", if c.right_first() { "right-first" } else { "left-first" })
}

/// Local Causality on the configured circuit, and no-signaling for both arms
/// across the other arm's settings.
fn causality_reports(base: &EraserConfig, config: &ScenarioConfig) -> Result<Vec<TestReport>> {
    let c = base.build()?;
    let mut reports = Vec::new();
    match records_for(&c, config, &circuit_tag(&c))?.local_causality(&first_event(&c, Arm::Right), &first_event(&c, Arm::Left)) {
        Ok(r) => reports.push(r),
        Err(InferenceError::ZeroFrequency(_)) => {}
        Err(e) => return Err(e.into()),
    }
    for arm in Arm::BOTH {
        let mut all: Option<AnyRecords> = None;
        for remote in [Setting::Interference, Setting::WhichPath] {
            let mut settings = base.settings;
            settings[arm.other().index()] = remote;
            let rc = base.clone().with_settings(settings[0], settings[1]).build()?;
            let recs = records_for(&rc, config, &circuit_tag(&rc))?;
            match &mut all {
                None => all = Some(recs),
                Some(a) => a.extend(recs),
            }
        }
        reports.push(all.expect("two remote settings").no_signaling(arm)?);
    }
    Ok(reports)
}

/// Measurement Independence for the left record, right arm acting first,
/// across the right arm's two settings. Needs exact splitters.
pub(crate) fn independence_reports(base: &EraserConfig, mode: Mode, trials: usize, seed: u64) -> Result<Vec<TestReport>> {
    let circuits: Vec<OpticalCircuit> = [Setting::Interference, Setting::WhichPath]
        .into_iter()
        .map(|r| base.clone().with_settings(base.settings[0], r).right_first(true).build())
        .collect::<std::result::Result<_, _>>()?;
    if !circuits[0].is_exact() || !circuits[1].is_exact() {
        return Ok(Vec::new());
    }
    let regions = refined_records(&circuits)?;
    let mut reports = Vec::new();
    for (view, name) in [
        (HiddenView::PreDetection(Arm::Left), "measurement_independence_pre_detection"),
        (HiddenView::Initial, "measurement_independence_initial"),
    ] {
        let mut rep = match mode {
            Mode::Analytic => {
                let mut set = RecordSet::new(Mode::Analytic, Vec::new());
                for r in &regions {
                    set.extend(from_enumeration(r, view, CONTEXT));
                }
                measurement_independence_test(&set)?
            }
            Mode::MonteCarlo => {
                let hidden = sample_hidden(trials, derive_seed(seed, "hidden"));
                let mut set = RecordSet::new(Mode::MonteCarlo, Vec::new());
                for (c, r) in circuits.iter().zip(&regions) {
                    let t = sample_transport(c, &hidden)?;
                    set.extend(from_transport(&t, c, r, view, CONTEXT)?);
                }
                measurement_independence_test(&set)?
            }
        };
        rep.test = name.to_string();
        reports.push(rep);
    }
    Ok(reports)
}

/// Runs the same hidden values with the right arm on interference and on
/// which-path, right acting first, and pairs the records.
pub(crate) fn paired_records(base: &EraserConfig, n: usize, seed: u64) -> Result<PairedRecords> {
    let hidden = sample_hidden(n, derive_seed(seed, "hidden"));
    let dep = trajectory_setting_dependence(&hidden, base)?;
    let build = |r| base.clone().with_settings(Setting::Interference, r).right_first(true).build();
    let (ci, cw) = (build(Setting::Interference)?, build(Setting::WhichPath)?);
    Ok(PairedRecords {
        n: dep.n,
        changed: dep.changed,
        changed_fraction: dep.changed_fraction,
        left_marginals: dep.left_marginals,
        pairs: dep
            .examples
            .iter()
            .map(|[a, b]| [path_record(&ci, a), path_record(&cw, b)])
            .collect(),
    })
}

pub(crate) fn equivariance_report<M: JointModel>(circuits: &[OpticalCircuit]) -> Result<TestReport> {
    let mut bad = 0usize;
    let mut layers = 0usize;
    for c in circuits {
        let rep = enumerate_transport::<M>(c)?;
        layers += rep.layers.len() + 1;
        bad += rep.layers.iter().filter(|l| !l.agrees()).count() + usize::from(!rep.outcomes_agree());
    }
    let mut r = check_report("transport_equivariance", bad as f64, 0.0, bad == 0, layers, Mode::Analytic);
    r.details = json!({ "circuits": circuits.len(), "checked_layers": layers, "exact": M::S::is_exact() });
    Ok(r)
}

pub(super) fn run(config: &ScenarioConfig) -> Result<RunOutput> {
    let p = &config.eraser;
    let base = p.config();
    let c = base.build()?;
    let mut out = RunOutput::new();

    let (mut copenhagen, bohmian_table, summary) = if c.is_exact() {
        let (t, s) = enumeration::<ExactModel>(&c)?;
        (entries(&copenhagen_joint_distribution_exact(&c)?), entries(&t), s)
    } else {
        let (t, s) = enumeration::<FloatModel>(&c)?;
        (entries(&copenhagen_joint_distribution(&c)?), entries(&t), s)
    };
    let mut bohmian = bohmian_table;
    let mut reports = Vec::new();
    let mut n = None;
    let mut csv = String::new();
    match config.mode {
        Mode::Analytic => {
            csv.push_str("left,right,probability\n");
            for e in &copenhagen {
                csv.push_str(&format!("{},{},{}\n", e.left, e.right, e.probability));
            }
        }
        Mode::MonteCarlo => {
            let trials = config.trials;
            n = Some(trials);
            let sampled = sample_copenhagen(&c, trials, derive_seed(config.seed, &circuit_tag(&c)))?;
            let hidden = sample_hidden(trials, derive_seed(config.seed, "hidden"));
            let transported = sample_transport(&c, &hidden)?;
            let bohm: Vec<DetectorOutcome> = transported.iter().map(|t| t.outcome.clone()).collect();
            let mut worst = 0.0f64;
            let mut impossible_seen = false;
            for (entries, draws) in [(&mut copenhagen, &sampled), (&mut bohmian, &bohm)] {
                for e in entries.iter_mut() {
                    let o = DetectorOutcome::new(&e.left, &e.right);
                    let f = frequencies(draws, &o);
                    let sigma = (e.probability * (1.0 - e.probability) / trials as f64).sqrt();
                    e.frequency = Some(f);
                    e.sigma = Some(sigma);
                    if sigma > 0.0 {
                        worst = worst.max((f - e.probability).abs() / sigma);
                    } else if f != e.probability {
                        impossible_seen = true;
                    }
                }
            }
            let mut r = check_report(
                "joint_distribution_agreement",
                worst,
                3.0,
                worst <= 3.0 && !impossible_seen,
                trials,
                Mode::MonteCarlo,
            );
            r.details = json!({ "unit": "standard errors", "impossible_outcome_seen": impossible_seen });
            reports.push(r);
            csv.push_str("trial,copenhagen_left,copenhagen_right,label_L,label_R,x_L,x_R,bohmian_left,bohmian_right\n");
            for (i, (s, t)) in sampled.iter().zip(&transported).enumerate() {
                csv.push_str(&format!(
                    "{i},{},{},{},{},{},{},{},{}\n",
                    s.left,
                    s.right,
                    t.initial.labels[0] + 1,
                    t.initial.labels[1] + 1,
                    t.initial.coords[0],
                    t.initial.coords[1],
                    t.outcome.left,
                    t.outcome.right
                ));
            }
        }
    }
    out.add_json(
        "joint.json",
        &JointDocument {
            settings: c.settings(),
            right_first: c.right_first(),
            theta: p.theta,
            mode: config.mode,
            n,
            copenhagen,
            bohmian,
            enumeration: summary,
        },
    );
    out.add_text(
        if config.mode == Mode::Analytic { "joint.csv" } else { "samples.csv" },
        csv,
    );

    reports.extend(causality_reports(&base, config)?);
    reports.extend(independence_reports(&base, config.mode, config.trials, config.seed)?);
    reports.push(if c.is_exact() {
        equivariance_report::<ExactModel>(std::slice::from_ref(&c))?
    } else {
        equivariance_report::<FloatModel>(std::slice::from_ref(&c))?
    });
    out.add_json("reports.json", &reports);

    let k = config.trials.clamp(1, MAX_PATH_RECORDS);
    let hidden = sample_hidden(k, derive_seed(config.seed, "hidden"));
    let records: Vec<PathRecord> = sample_transport(&c, &hidden)?.iter().map(|t| path_record(&c, t)).collect();
    out.add_json("path_records.json", &records);
    out.add_text("path_records.svg", render_svg(&PlotInput::PathRecords(records)));

    let paired = paired_records(&base, k, config.seed)?;
    out.add_text("setting_dependence.svg", render_svg(&PlotInput::PathPairs(paired.pairs.clone())));
    out.add_json("setting_dependence.json", &paired);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{PartialConfig, Scenario};

    fn config(extra: PartialConfig) -> ScenarioConfig {
        ScenarioConfig::resolve(&PartialConfig {
            scenario: Some(Scenario::Eraser),
            ..extra
        })
        .unwrap()
    }

    fn json(out: &RunOutput, name: &str) -> serde_json::Value {
        serde_json::from_slice(&out.file(name).unwrap().bytes).unwrap()
    }

    #[test]
    fn analytic_whichpath_joint_is_uniform() {
        let out = run(&config(PartialConfig {
            right: Some(Setting::WhichPath),
            ..Default::default()
        }))
        .unwrap();
        let joint = json(&out, "joint.json");
        for key in ["copenhagen", "bohmian"] {
            let cells = joint[key].as_array().unwrap();
            assert_eq!(cells.len(), 4);
            assert!(cells.iter().all(|c| c["exact"] == "1/4"), "{key}");
        }
        assert!(out.file("joint.csv").is_some());
        let reports = json(&out, "reports.json");
        let names: Vec<&str> = reports.as_array().unwrap().iter().map(|r| r["test"].as_str().unwrap()).collect();
        assert!(names.contains(&"measurement_independence_pre_detection"));
        assert!(names.contains(&"transport_equivariance"));
    }

    #[test]
    fn montecarlo_run_emits_samples_and_agreement() {
        let out = run(&config(PartialConfig {
            mode: Some(Mode::MonteCarlo),
            trials: Some(2000),
            seed: Some(5),
            ..Default::default()
        }))
        .unwrap();
        let samples = std::str::from_utf8(&out.file("samples.csv").unwrap().bytes).unwrap().to_string();
        assert_eq!(samples.lines().count(), 2001);
        let reports = json(&out, "reports.json");
        let agree = reports.as_array().unwrap().iter().find(|r| r["test"] == "joint_distribution_agreement").unwrap();
        assert_eq!(agree["verdict"], "satisfied");
        let dep = json(&out, "setting_dependence.json");
        assert!(dep["changed"].as_u64().unwrap() > 0);
    }

    #[test]
    fn inexact_angles_skip_enumerated_independence() {
        let out = run(&config(PartialConfig {
            theta: Some(0.3),
            ..Default::default()
        }))
        .unwrap();
        let joint = json(&out, "joint.json");
        assert_eq!(joint["enumeration"]["exact"], false);
        assert!(joint["copenhagen"][0].get("exact").is_none());
        let reports = json(&out, "reports.json");
        assert!(reports.as_array().unwrap().iter().all(|r| !r["test"].as_str().unwrap().starts_with("measurement")));
    }
}

use std::f64::consts::SQRT_2;

use serde::Serialize;
use serde_json::json;

use crate::circuit::{sample_copenhagen, Arm, EraserConfig, Setting};
use crate::hilbert::{Observable, Space, StateVector};
use crate::inference::{
    branch_collapse_check, chsh_from_records, correlator, local_model_records, optimize_chsh,
    repeatability_probability, repeatability_test, ChshOptimum, ChshSettings, LocalModel, Mode,
    RecordSet, RunRecord, TestReport, Verdict, Z99,
};
use crate::rng::derive_seed;

use super::{check_report, Result, RunOutput, ScenarioConfig};

/// Tolerance on the local bound S ≤ 2.
pub(crate) const LOCAL_BOUND_TOL: f64 = 1e-12;
/// Tolerance on the grid optimum against 2√2.
pub(crate) const TSIRELSON_TOL: f64 = 1e-9;

/// The two single-photon states of the repeated-measurement scenario: the
/// equal superposition of both paths and a path eigenstate.
pub(crate) fn repeat_states() -> Vec<(&'static str, StateVector, Observable)> {
    let space = Space::paths("photon");
    let obs = Observable::basis(space.clone());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        ("plus", StateVector::from_real(space.clone(), &[h, h]).expect("normalized"), obs.clone()),
        ("path1", StateVector::basis(space, 0).expect("in range"), obs),
    ]
}

fn exact_repeat_report(name: &str, p: f64, collapse_on: bool) -> TestReport {
    let mut r = check_report(
        if collapse_on { "repeatability_with_collapse" } else { "repeatability_without_collapse" },
        p,
        0.0,
        p.abs() <= 1e-15,
        1,
        Mode::Analytic,
    );
    r.details = json!({ "state": name, "collapse": collapse_on, "probability": p });
    r
}

/// Repeatability reports for every state, with and without collapse, and
/// the disagreement check between the two pipelines on the superposition.
pub(crate) fn repeatability_reports(config: &ScenarioConfig) -> Result<Vec<TestReport>> {
    let mut reports = Vec::new();
    let mut plus = [0.0f64; 2];
    let mut plus_ok = [false; 2];
    for (name, state, obs) in repeat_states() {
        for (k, collapse_on) in [true, false].into_iter().enumerate() {
            let mut r = match config.mode {
                Mode::Analytic => exact_repeat_report(name, repeatability_probability(&state, &obs, collapse_on)?, collapse_on),
                Mode::MonteCarlo => {
                    let seed = derive_seed(config.seed, &format!("repeat-{name}-{collapse_on}"));
                    let mut r = repeatability_test(config.trials, &state, &obs, collapse_on, seed)?;
                    r.details["state"] = json!(name);
                    r
                }
            };
            if name == "plus" {
                plus[k] = r.statistic;
                plus_ok[k] = r.verdict == Verdict::Satisfied;
            }
            r.test = format!("{}_{name}", r.test);
            reports.push(r);
        }
    }
    // the collapse pipeline repeats, the Born-twice pipeline disagrees half the time
    let n = config.trials.max(1) as f64;
    let sigma = match config.mode {
        Mode::Analytic => 0.0,
        Mode::MonteCarlo => (0.25 / n).sqrt(),
    };
    let half_ok = (plus[1] - 0.5).abs() <= 3.0 * sigma + 1e-15;
    let holds = plus_ok[0] && !plus_ok[1] && half_ok;
    let mut r = check_report("collapse_necessity", plus[1] - plus[0], 0.0, holds, config.trials, config.mode);
    r.details = json!({
        "with_collapse": plus[0],
        "without_collapse": plus[1],
        "expected_without_collapse": 0.5,
        "sigma": sigma,
    });
    reports.push(r);
    if config.mode == Mode::MonteCarlo {
        let (_, state, obs) = &repeat_states()[0];
        reports.push(branch_collapse_check(state, obs, config.trials, derive_seed(config.seed, "branch"))?.to_report());
    }
    Ok(reports)
}

pub(super) fn repeatability(config: &ScenarioConfig) -> Result<RunOutput> {
    let reports = repeatability_reports(config)?;
    let mut csv = String::from("test,statistic,verdict,n\n");
    for r in &reports {
        csv.push_str(&format!("{},{},{},{}\n", r.test, r.statistic, verdict_name(r.verdict), r.n));
    }
    let mut out = RunOutput::new();
    out.add_json("reports.json", &reports);
    out.add_text("repeatability.csv", csv);
    Ok(out)
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Violated => "violated",
        Verdict::Satisfied => "satisfied",
        Verdict::Inconclusive => "inconclusive",
    }
}

#[derive(Serialize)]
pub(crate) struct LocalMax {
    pub model: LocalModel,
    pub s_max: f64,
}

/// Grid angles in [0, π/2] with spacing `step`.
fn grid(step: f64) -> Vec<f64> {
    let m = (std::f64::consts::FRAC_PI_2 / step).round() as usize;
    (0..=m).map(|k| (k as f64 * step).min(std::f64::consts::FRAC_PI_2)).collect()
}

/// Largest S each built-in local model reaches over the setting grid.
pub(crate) fn local_maxima(step: f64) -> Vec<LocalMax> {
    let g = grid(step);
    LocalModel::family()
        .into_iter()
        .map(|model| {
            let mut best = f64::NEG_INFINITY;
            for &a1 in &g {
                for &a2 in &g {
                    for &b1 in &g {
                        for &b2 in &g {
                            best = best.max(model.chsh(&ChshSettings { a: [a1, a2], b: [b1, b2] }));
                        }
                    }
                }
            }
            LocalMax { model, s_max: best }
        })
        .collect()
}

/// Sampled pair-state records at the given angles, a quarter of the runs
/// per setting pair, labelled like the local-model records.
fn quantum_records(s: &ChshSettings, n: usize, seed: u64) -> Result<RecordSet<f64>> {
    let mut records = Vec::new();
    for (i, &theta) in s.a.iter().enumerate() {
        for (j, &phi) in s.b.iter().enumerate() {
            let c = EraserConfig::new(Setting::Interference, Setting::Interference)
                .arm_theta(Arm::Left, theta)
                .arm_theta(Arm::Right, phi)
                .build()?;
            let count = n / 4 + usize::from(i * 2 + j < n % 4);
            for o in sample_copenhagen(&c, count, derive_seed(seed, &format!("chsh-{i}{j}")))? {
                let pm = |name: &str| if name.ends_with('2') { "+1" } else { "-1" }.to_string();
                records.push(RunRecord {
                    settings: [format!("a{}", i + 1), format!("b{}", j + 1)],
                    outcome: [pm(&o.left), pm(&o.right)],
                    context: "pair-state".into(),
                    hidden: None,
                    weight: 1.0,
                });
            }
        }
    }
    Ok(RecordSet::new(Mode::MonteCarlo, records))
}

#[derive(Serialize)]
struct ChshDocument<'a> {
    mode: Mode,
    grid_step: f64,
    quantum: &'a ChshOptimum,
    tsirelson: f64,
    local_bound: f64,
    local_models: &'a [LocalMax],
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate: Option<serde_json::Value>,
}

/// Reports on the local bound and the quantum optimum; also returns the
/// optimum and the local maxima.
pub(crate) fn chsh_reports(config: &ScenarioConfig) -> Result<(Vec<TestReport>, ChshOptimum, Vec<LocalMax>, Option<serde_json::Value>)> {
    let opt = optimize_chsh(config.chsh_step)?;
    let locals = local_maxima(config.chsh_step);
    let local_max = locals.iter().map(|l| l.s_max).fold(f64::NEG_INFINITY, f64::max);
    let mut reports = Vec::new();
    let mut r = check_report("chsh_local_bound", local_max, 2.0, local_max <= 2.0 + LOCAL_BOUND_TOL, locals.len(), Mode::Analytic);
    r.details = json!({ "tolerance": LOCAL_BOUND_TOL, "grid_step": config.chsh_step });
    reports.push(r);
    let mut r = check_report("chsh_quantum_bound", opt.s_max, 2.0, opt.s_max <= 2.0 + LOCAL_BOUND_TOL, opt.grid_points, Mode::Analytic);
    r.details = json!({ "settings": opt.settings, "exact": opt.exact });
    reports.push(r);
    let gap = (opt.s_max - 2.0 * SQRT_2).abs();
    let mut r = check_report("chsh_tsirelson_optimum", gap, TSIRELSON_TOL, gap <= TSIRELSON_TOL, opt.grid_points, Mode::Analytic);
    r.details = json!({ "s_max": opt.s_max, "tsirelson": 2.0 * SQRT_2 });
    reports.push(r);
    let mut estimate = None;
    if config.mode == Mode::MonteCarlo {
        let n = config.trials;
        let set = quantum_records(&opt.settings, n, derive_seed(config.seed, "chsh-quantum"))?;
        let s_hat = chsh_from_records(&set)?;
        // each correlator estimate has variance (1 − E²)/n_ij
        let mut var = 0.0;
        for &a in &opt.settings.a {
            for &b in &opt.settings.b {
                let e = correlator(a, b)?;
                var += (1.0 - e * e) / (n as f64 / 4.0);
            }
        }
        let se = var.sqrt();
        let lo = s_hat - Z99 * se;
        let verdict = if lo > 2.0 {
            Verdict::Violated
        } else if s_hat + Z99 * se <= 2.0 {
            Verdict::Satisfied
        } else {
            Verdict::Inconclusive
        };
        reports.push(TestReport {
            test: "chsh_quantum_estimate".into(),
            statistic: s_hat,
            threshold: 2.0,
            verdict,
            n,
            mode: Mode::MonteCarlo,
            details: json!({ "standard_error": se, "ci99": [lo, s_hat + Z99 * se] }),
        });
        let mut worst = f64::NEG_INFINITY;
        for (k, model) in LocalModel::family().iter().enumerate() {
            let set = local_model_records(model, &opt.settings, n, derive_seed(config.seed, &format!("chsh-local-{k}")));
            worst = worst.max(chsh_from_records(&set)?);
        }
        // sampled ±1 correlators of a local model obey S ≤ 2 only on average
        let slack = Z99 * 4.0 / (n as f64 / 4.0).sqrt();
        let mut r = check_report("chsh_local_estimate", worst, 2.0 + slack, worst <= 2.0 + slack, n, Mode::MonteCarlo);
        r.details = json!({ "models": LocalModel::family().len() });
        reports.push(r);
        estimate = Some(json!({ "s": s_hat, "standard_error": se, "n": n }));
    }
    Ok((reports, opt, locals, estimate))
}

pub(super) fn bell_chsh(config: &ScenarioConfig) -> Result<RunOutput> {
    let (reports, opt, locals, estimate) = chsh_reports(config)?;
    let mut csv = String::from("theta,phi,correlator,hidden_angle_correlator\n");
    let g = grid(config.chsh_step);
    for &theta in &g {
        for &phi in &g {
            csv.push_str(&format!(
                "{theta},{phi},{},{}\n",
                correlator(theta, phi)?,
                LocalModel::HiddenAngle.correlator(0, 0, theta, phi)
            ));
        }
    }
    let mut out = RunOutput::new();
    out.add_json(
        "chsh.json",
        &ChshDocument {
            mode: config.mode,
            grid_step: config.chsh_step,
            quantum: &opt,
            tsirelson: 2.0 * SQRT_2,
            local_bound: 2.0,
            local_models: &locals,
            estimate,
        },
    );
    out.add_json("reports.json", &reports);
    out.add_text("chsh_grid.csv", csv);
    Ok(out)
}

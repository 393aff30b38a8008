use serde::Serialize;
use serde_json::json;

use crate::inference::{Mode, TestReport};
use crate::pilotwave::io::{snapshot_csv, snapshot_file_name, trajectories_csv, Trajectory};
use crate::pilotwave::{
    check_equivariance, check_equivariance_history, check_noncrossing, init_wavefunction, integrate_trajectories,
    ks_threshold_99, sample_equilibrium, EquivarianceVerdict, Evolution, Gaussian, Profile,
};
use crate::rng::{derive_seed, stream};

use super::plot::{render_svg, PlotInput};
use super::{check_report, Result, RunOutput, Scenario, ScenarioConfig, WaveParams};

/// KS bound for the free packet at its fixed ensemble size.
pub(crate) const FREE_KS_BOUND: f64 = 0.02;
pub(crate) const CLOSED_FORM_TOL: f64 = 1e-3;
pub(crate) const NORM_DRIFT_TOL: f64 = 1e-8;
/// Trajectories drawn in the scenario's own SVG.
const SVG_TRAJECTORIES: usize = 200;

#[derive(Serialize)]
struct WaveReport<'a> {
    scenario: Scenario,
    params: &'a WaveParams,
    t_final: f64,
    trajectories: usize,
    absorbed: usize,
    max_norm_drift: f64,
    checks: Vec<TestReport>,
}

pub(crate) fn profile(scenario: Scenario, w: &WaveParams) -> Profile {
    match scenario {
        Scenario::DoubleSlit => Profile::double_slit(w.separation, w.sigma),
        _ => Profile::Gaussian(Gaussian::line(w.center, w.sigma, 0.0)),
    }
}

/// Samples the initial ensemble and co-evolves it with ψ.
pub(crate) fn simulate(scenario: Scenario, w: &WaveParams, seed: u64) -> Result<Evolution> {
    let grid = w.grid()?;
    let psi = init_wavefunction(&grid, &profile(scenario, w))?;
    let ens = sample_equilibrium(&psi, w.trajectories, &mut stream(derive_seed(seed, scenario.name()), 0))?;
    Ok(integrate_trajectories(&psi, &w.physics(scenario), &ens, w.dt, w.steps, w.save_every)?)
}

fn max_deviation<F: Fn(f64, f64) -> f64>(run: &Evolution, err: F) -> f64 {
    let ens = &run.ensemble;
    ens.history[0]
        .iter()
        .zip(&ens.positions)
        .zip(&ens.absorbed)
        .filter(|(_, &a)| !a)
        .map(|((q0, q), _)| err(q0[0], q[0]).abs())
        .fold(0.0, f64::max)
}

/// Largest relative deviation from the free spreading law Q(t) = Q(0)σ(t)/σ₀.
pub(crate) fn free_closed_form_error(run: &Evolution, sigma: f64) -> f64 {
    let t = run.ensemble.final_time();
    let scale = (1.0 + (t / (2.0 * sigma * sigma)).powi(2)).sqrt();
    max_deviation(run, |q0, q| {
        let want = q0 * scale;
        (q - want) / want.abs().max(1e-12)
    })
}

/// Largest deviation from the rigid coherent-state motion
/// Q(t) = Q(0) + c(cos ωt − 1).
fn rigid_oscillation_error(run: &Evolution, w: &WaveParams) -> f64 {
    let t = run.ensemble.final_time();
    let shift = w.center * ((w.omega * t).cos() - 1.0);
    max_deviation(run, |q0, q| q - (q0 + shift))
}

/// Trajectories that start on one side of the symmetry axis and are found
/// on the other side at any saved time.
pub(crate) fn side_changes(run: &Evolution) -> usize {
    let ens = &run.ensemble;
    (0..ens.len())
        .filter(|&i| !ens.absorbed[i])
        .filter(|&i| {
            let s0 = ens.history[0][i][0] > 0.0;
            ens.history.iter().any(|h| (h[i][0] > 0.0) != s0)
        })
        .count()
}

pub(crate) fn equivariance_report(run: &Evolution, threshold: f64) -> Result<TestReport> {
    let rep = check_equivariance(&run.ensemble, &run.psi, threshold)?;
    let history = check_equivariance_history(run)?;
    let worst = history.iter().map(|r| r.ks).fold(0.0, f64::max);
    Ok(TestReport {
        test: "equivariance".into(),
        statistic: rep.ks,
        threshold,
        verdict: super::verdict_of(rep.verdict == EquivarianceVerdict::Pass),
        n: rep.n,
        mode: Mode::MonteCarlo,
        details: json!({
            "time": rep.time,
            "absorbed": rep.absorbed,
            "history_max_ks": worst,
            "history_threshold99": ks_threshold_99(rep.n),
            "history_failures": history.iter().filter(|r| r.verdict != EquivarianceVerdict::Pass).count(),
        }),
    })
}

pub(crate) fn noncrossing_report(run: &Evolution) -> Result<TestReport> {
    let swaps = check_noncrossing(&run.ensemble)?;
    Ok(check_report("noncrossing", swaps as f64, 0.0, swaps == 0, run.ensemble.len(), Mode::Analytic))
}

fn norm_report(run: &Evolution) -> TestReport {
    check_report(
        "norm_drift",
        run.max_norm_drift,
        NORM_DRIFT_TOL,
        run.max_norm_drift < NORM_DRIFT_TOL,
        run.ensemble.times.len(),
        Mode::Analytic,
    )
}

/// A spread-out subset of trajectories for drawing, in initial order.
fn svg_subset(run: &Evolution) -> Vec<Trajectory> {
    let ens = &run.ensemble;
    let n = ens.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ens.history[0][a][0].total_cmp(&ens.history[0][b][0]));
    let k = n.min(SVG_TRAJECTORIES);
    (0..k)
        .map(|j| {
            let id = order[if k > 1 { j * (n - 1) / (k - 1) } else { 0 }];
            Trajectory {
                id: id as u64,
                points: ens.times.iter().zip(&ens.history).map(|(&t, h)| (t, h[id])).collect(),
            }
        })
        .collect()
}

pub(super) fn run(config: &ScenarioConfig) -> Result<RunOutput> {
    let w = config.wave.as_ref().expect("wave scenarios resolve wave parameters");
    let run = simulate(config.scenario, w, config.seed)?;
    let n = run.ensemble.len();
    let mut checks = vec![norm_report(&run), noncrossing_report(&run)?];
    match config.scenario {
        Scenario::FreePacket => {
            checks.push(equivariance_report(&run, FREE_KS_BOUND)?);
            let e = free_closed_form_error(&run, w.sigma);
            checks.push(check_report("closed_form_trajectories", e, CLOSED_FORM_TOL, e < CLOSED_FORM_TOL, n, Mode::Analytic));
        }
        Scenario::DoubleSlit => {
            checks.push(equivariance_report(&run, ks_threshold_99(n))?);
            let c = side_changes(&run);
            checks.push(check_report("side_preservation", c as f64, 0.0, c == 0, n, Mode::Analytic));
        }
        Scenario::Harmonic => {
            checks.push(equivariance_report(&run, ks_threshold_99(n))?);
            let e = rigid_oscillation_error(&run, w);
            checks.push(check_report("rigid_oscillation", e, CLOSED_FORM_TOL, e < CLOSED_FORM_TOL, n, Mode::Analytic));
        }
        _ => unreachable!("not a wave scenario"),
    }
    let mut out = RunOutput::new();
    out.add_text("trajectories.csv", trajectories_csv(&run.ensemble));
    out.add_text(&snapshot_file_name(w.steps), snapshot_csv(&run.psi));
    out.add_text(
        "trajectories.svg",
        render_svg(&PlotInput::Trajectories {
            dim: 1,
            trajs: svg_subset(&run),
        }),
    );
    out.add_json(
        "wave_report.json",
        &WaveReport {
            scenario: config.scenario,
            params: w,
            t_final: run.psi.time(),
            trajectories: n,
            absorbed: run.ensemble.absorbed_count(),
            max_norm_drift: run.max_norm_drift,
            checks,
        },
    );
    Ok(out)
}

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::circuit::{
    copenhagen_joint_distribution_exact, initial_state, mwi_branches, sample_copenhagen, EraserConfig, ExactModel,
    OpticalCircuit, Setting,
};
use crate::exact::QSqrt2;
use crate::hilbert::{CMatrix, DensityMatrix, Observable, Space, StateVector, UnitaryMap};
use crate::inference::{
    branch_collapse_check, from_branches, local_causality_test, repeatability_test, EquivalenceCheck, Event, Mode,
    TestReport, Verdict,
};
use crate::pilotwave::io::trajectories_csv;
use crate::rng::{derive_seed, stream};

use super::eraser::{analytic_records, equivariance_report, independence_reports, paired_records, MAX_PATH_RECORDS};
use super::stats::{chsh_reports, repeat_states};
use super::wave::{
    equivariance_report as wave_equivariance, free_closed_form_error, noncrossing_report, side_changes, simulate,
    CLOSED_FORM_TOL,
};
use super::{check_report, Result, RunOutput, Scenario, ScenarioConfig, WaveParams};

/// Ensemble size of the free packet inside the suite.
const SUITE_FREE_TRAJECTORIES: usize = 1000;
/// Size of the random (state, observable) family.
pub(crate) const RANDOM_FAMILY: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Claim {
    pub id: String,
    pub statement: String,
    pub expected: Verdict,
    pub report: TestReport,
    pub matches: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClaimsDocument {
    pub seed: u64,
    pub trials: usize,
    pub claims: Vec<Claim>,
    pub all_match: bool,
}

fn claim(id: &str, statement: &str, expected: Verdict, report: TestReport) -> Claim {
    Claim {
        id: id.into(),
        statement: statement.into(),
        expected,
        matches: report.verdict == expected,
        report,
    }
}

fn eraser(left: Setting, right: Setting) -> Result<OpticalCircuit> {
    Ok(EraserConfig::new(left, right).build()?)
}

/// Exact comparison of a joint distribution with the listed nonzero cells.
fn joint_report(test: &str, c: &OpticalCircuit, expected: &[(&str, &str, QSqrt2)]) -> Result<TestReport> {
    let table = copenhagen_joint_distribution_exact(c)?;
    let mut worst = 0.0f64;
    let mut exact = true;
    for (o, p) in &table.entries {
        let want = expected
            .iter()
            .find(|(l, r, _)| *l == o.left && *r == o.right)
            .map_or_else(QSqrt2::zero, |e| e.2.clone());
        worst = worst.max((p.to_f64() - want.to_f64()).abs());
        exact &= *p == want;
    }
    let mut r = check_report(test, worst, 0.0, exact, table.entries.len(), Mode::Analytic);
    r.details = json!({
        "distribution": table.entries.iter().map(|(o, p)| json!({"left": o.left, "right": o.right, "exact": p.to_string()})).collect::<Vec<_>>(),
    });
    Ok(r)
}

/// Random states and non-degenerate observables of dimension 2 to 8.
pub fn random_family(count: usize, seed: u64) -> Vec<(StateVector, Observable)> {
    (0..count)
        .map(|i| {
            let mut r = stream(seed, i as u64);
            let dim = r.gen_range(2..=8);
            let space = Space::indexed("system", dim).expect("positive dimension");
            let mut z = || Complex64::new(r.gen::<f64>() - 0.5, r.gen::<f64>() - 0.5);
            let amps: Vec<Complex64> = (0..dim).map(|_| z()).collect();
            let m = CMatrix::from_fn(dim, dim, |_, _| z());
            let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
            let state = StateVector::normalized(space.clone(), amps).expect("nonzero amplitudes");
            let obs = Observable::from_hermitian(space, h).expect("hermitian by construction");
            (state, obs)
        })
        .collect()
}

/// Branch weights, branch states and sampled collapse frequencies over the
/// random family, pooled.
pub fn random_family_check(count: usize, n: usize, seed: u64) -> Result<EquivalenceCheck> {
    let checks = random_family(count, derive_seed(seed, "family"))
        .iter()
        .enumerate()
        .map(|(i, (s, o))| branch_collapse_check(s, o, n, derive_seed(seed, &format!("family-{i}"))))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(EquivalenceCheck::combine(&checks))
}

/// Largest change of global purity under a sequence of unitaries applied to
/// a mixed pair state.
pub fn purity_drift() -> Result<f64> {
    let space = initial_state().space().clone();
    let rho = DensityMatrix::mixture(&[
        (0.7, initial_state()),
        (0.3, StateVector::basis(space.clone(), 1)?),
    ])?;
    let p0 = rho.purity();
    let bs = UnitaryMap::beam_splitter(Space::paths("left"), std::f64::consts::PI / 8.0, 0.3)?;
    let steps = [UnitaryMap::lift(&space, 0, &bs)?, UnitaryMap::controlled_not(space.clone())?];
    let mut drift = 0.0f64;
    let mut cur = rho;
    for u in steps.iter().cycle().take(6) {
        cur = cur.conjugate(u)?;
        drift = drift.max((cur.purity() - p0).abs());
    }
    Ok(drift)
}

/// Reduced purity of the left arm of the pair state.
pub fn pair_reduced_purity() -> Result<f64> {
    Ok(DensityMatrix::pure(&initial_state()).partial_trace(&[0])?.purity())
}

/// Reduced purity of a product state before and after the entangler.
pub fn entangler_purity() -> Result<(f64, f64)> {
    let paths = Space::paths("left");
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = StateVector::from_real(paths, &[h, h])?;
    let product = plus.tensor(&StateVector::basis(Space::paths("right"), 0)?);
    let cnot = UnitaryMap::controlled_not(product.space().clone())?;
    let before = DensityMatrix::pure(&product).partial_trace(&[0])?.purity();
    let after = DensityMatrix::pure(&product.evolve(&cnot)?).partial_trace(&[0])?.purity();
    Ok((before, after))
}

/// Every claim with its report, plus the raw outputs it was computed from.
fn build(config: &ScenarioConfig) -> Result<(ClaimsDocument, Vec<(String, String)>)> {
    use Setting::{Interference as I, WhichPath as W};
    use Verdict::{Satisfied as Sat, Violated as Vio};
    let half = QSqrt2::rational(1, 2);
    let quarter = QSqrt2::rational(1, 4);
    let seed = config.seed;
    let trials = config.trials.max(1);
    let mut claims = Vec::new();
    let mut files = Vec::new();

    let ii = eraser(I, I)?;
    let iw = eraser(I, W)?;
    claims.push(claim(
        "eraser_interference_correlation",
        "With both arms on interference the detector outcomes are perfectly correlated.",
        Sat,
        joint_report("joint_distribution", &ii, &[("L1", "R1", half.clone()), ("L2", "R2", half)])?,
    ));
    claims.push(claim(
        "eraser_whichpath_uniform",
        "With the right arm on which-path every joint outcome has probability 1/4.",
        Sat,
        joint_report(
            "joint_distribution",
            &iw,
            &[
                ("L1", "R3", quarter.clone()),
                ("L1", "R4", quarter.clone()),
                ("L2", "R3", quarter.clone()),
                ("L2", "R4", quarter),
            ],
        )?,
    ));

    let (a, b): (Event, Event) = ("R1".parse()?, "L1".parse()?);
    let exact = analytic_records(&ii, "pair-state")?;
    claims.push(claim(
        "local_causality_statevector",
        "Conditioning on the left outcome changes the right outcome probability.",
        Vio,
        exact.local_causality(&a, &b)?,
    ));
    claims.push(claim(
        "local_causality_branches",
        "Branch-weight records give the same Local Causality verdict.",
        Vio,
        local_causality_test(&from_branches(&mwi_branches(&ii)?, &ii, "pair-state"), &a, &b)?,
    ));
    let sampled = sample_copenhagen(&ii, trials, derive_seed(seed, "claims-eraser"))?;
    let mut csv = String::from("trial,left,right\n");
    for (i, o) in sampled.iter().enumerate() {
        csv.push_str(&format!("{i},{},{}\n", o.left, o.right));
    }
    files.push(("eraser_samples.csv".to_string(), csv));
    claims.push(claim(
        "local_causality_sampled",
        "Sampled eraser records also violate Local Causality.",
        Vio,
        local_causality_test(&crate::inference::from_samples(&sampled, &ii, "pair-state"), &a, &b)?,
    ));
    let mut ns = analytic_records(&ii, "pair-state")?;
    ns.extend(analytic_records(&eraser(W, I)?, "pair-state")?);
    let mut ns_right = analytic_records(&ii, "pair-state")?;
    ns_right.extend(analytic_records(&iw, "pair-state")?);
    claims.push(claim(
        "no_signaling_right",
        "The right marginal does not depend on the left setting.",
        Sat,
        ns.no_signaling(crate::circuit::Arm::Right)?,
    ));
    claims.push(claim(
        "no_signaling_left",
        "The left marginal does not depend on the right setting.",
        Sat,
        ns_right.no_signaling(crate::circuit::Arm::Left)?,
    ));

    let (_, plus, obs) = &repeat_states()[0];
    claims.push(claim(
        "repeatability_with_collapse",
        "Updating the state after the first measurement makes the second one repeat it.",
        Sat,
        repeatability_test(trials, plus, obs, true, derive_seed(seed, "claims-repeat-true"))?,
    ));
    claims.push(claim(
        "repeatability_without_collapse",
        "Applying the Born rule twice to the unchanged state breaks repeatability.",
        Vio,
        repeatability_test(trials, plus, obs, false, derive_seed(seed, "claims-repeat-false"))?,
    ));
    claims.push(claim(
        "branch_collapse_equivalence",
        "Branch weights equal Born probabilities and match sampled collapse frequencies.",
        Sat,
        random_family_check(RANDOM_FAMILY, trials, seed)?.to_report(),
    ));

    let mut all = Vec::new();
    for (l, r) in [(I, I), (I, W), (W, I), (W, W)] {
        for rf in [false, true] {
            all.push(EraserConfig::new(l, r).right_first(rf).build()?);
        }
    }
    claims.push(claim(
        "transport_equivariance",
        "Transported path labels reproduce the statevector weights at every layer.",
        Sat,
        equivariance_report::<ExactModel>(&all)?,
    ));
    let base = EraserConfig::new(I, I);
    let mut mi = independence_reports(&base, Mode::Analytic, trials, seed)?.into_iter();
    claims.push(claim(
        "measurement_independence_pre_detection",
        "The left pre-detection record depends on the right setting.",
        Vio,
        mi.next().expect("pre-detection report"),
    ));
    claims.push(claim(
        "measurement_independence_initial",
        "The initial configuration does not depend on the settings.",
        Sat,
        mi.next().expect("initial report"),
    ));
    let paired = paired_records(&base, trials.min(MAX_PATH_RECORDS), seed)?;
    let mut r = check_report(
        "trajectory_setting_independence",
        paired.changed_fraction,
        0.0,
        paired.changed == 0,
        paired.n,
        Mode::MonteCarlo,
    );
    r.details = json!({ "changed": paired.changed, "examples": paired.pairs.len() });
    claims.push(claim(
        "trajectory_setting_dependence",
        "Some left-arm paths change when only the right setting changes.",
        Vio,
        r,
    ));
    files.push(("paired_path_records.json".to_string(), {
        let mut t = serde_json::to_string_pretty(&paired.pairs).expect("records serialize");
        t.push('\n');
        t
    }));

    let chsh_config = ScenarioConfig {
        mode: Mode::Analytic,
        ..config.clone()
    };
    let (reports, _, _, _) = chsh_reports(&chsh_config)?;
    for (r, (expected, statement)) in reports.into_iter().zip([
        (Sat, "Local models stay within S ≤ 2 over the setting grid."),
        (Vio, "The pair state exceeds the local bound."),
        (Sat, "The grid optimum reaches 2√2."),
    ]) {
        let id = r.test.clone();
        claims.push(claim(&id, statement, expected, r));
    }

    let drift = purity_drift()?;
    claims.push(claim(
        "global_purity_invariant",
        "Unitary evolution preserves global purity.",
        Sat,
        check_report("global_purity_drift", drift, 1e-12, drift <= 1e-12, 6, Mode::Analytic),
    ));
    let p = pair_reduced_purity()?;
    claims.push(claim(
        "pair_reduced_purity",
        "Each arm of the pair state is maximally mixed.",
        Sat,
        check_report("reduced_purity", (p - 0.5).abs(), 1e-12, (p - 0.5).abs() <= 1e-12, 1, Mode::Analytic),
    ));
    let (before, after) = entangler_purity()?;
    let mut r = check_report("entangler_purity_loss", before - after, 0.0, after < before, 1, Mode::Analytic);
    r.details = json!({ "before": before, "after": after });
    claims.push(claim(
        "entangler_decoheres",
        "Entangling a product state lowers the reduced purity.",
        Sat,
        r,
    ));

    let ds = simulate(Scenario::DoubleSlit, &WaveParams::defaults(Scenario::DoubleSlit), seed)?;
    files.push(("double_slit_trajectories.csv".to_string(), trajectories_csv(&ds.ensemble)));
    claims.push(claim(
        "double_slit_noncrossing",
        "Double-slit trajectories never cross.",
        Sat,
        noncrossing_report(&ds)?,
    ));
    let sc = side_changes(&ds);
    claims.push(claim(
        "double_slit_side_preservation",
        "Trajectories stay on the side of the symmetry axis they start on.",
        Sat,
        check_report("side_preservation", sc as f64, 0.0, sc == 0, ds.ensemble.len(), Mode::Analytic),
    ));
    let mut fp = WaveParams::defaults(Scenario::FreePacket);
    fp.trajectories = SUITE_FREE_TRAJECTORIES;
    let free = simulate(Scenario::FreePacket, &fp, seed)?;
    let e = free_closed_form_error(&free, fp.sigma);
    claims.push(claim(
        "free_packet_closed_form",
        "Free-packet trajectories follow the spreading law.",
        Sat,
        check_report("closed_form_trajectories", e, CLOSED_FORM_TOL, e < CLOSED_FORM_TOL, free.ensemble.len(), Mode::Analytic),
    ));
    claims.push(claim(
        "free_packet_equivariance",
        "The ensemble stays |ψ|²-distributed.",
        Sat,
        wave_equivariance(&free, crate::pilotwave::ks_threshold_99(free.ensemble.len()))?,
    ));

    let all_match = claims.iter().all(|c| c.matches);
    Ok((
        ClaimsDocument {
            seed,
            trials,
            claims,
            all_match,
        },
        files,
    ))
}

/// Runs every claim. Verdicts that differ from their expectation clear
/// `claims_ok` on the run output.
pub fn claims_suite(config: &ScenarioConfig) -> Result<ClaimsDocument> {
    Ok(build(config)?.0)
}

pub(super) fn run(config: &ScenarioConfig) -> Result<RunOutput> {
    let (doc, files) = build(config)?;
    let mut out = RunOutput::new();
    out.claims_ok = doc.all_match;
    out.add_json("claims.json", &doc);
    for (name, text) in files {
        out.add_text(&name, text);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_family_is_reproducible_and_bounded() {
        let a = random_family(10, 3);
        let b = random_family(10, 3);
        assert_eq!(a.len(), 10);
        for ((s, o), (t, p)) in a.iter().zip(&b) {
            assert!((2..=8).contains(&s.dim()));
            assert_eq!(s, t);
            assert_eq!(o.labels(), p.labels());
        }
    }

    #[test]
    fn decoherence_quantities() {
        assert!(purity_drift().unwrap() < 1e-12);
        assert!((pair_reduced_purity().unwrap() - 0.5).abs() < 1e-12);
        let (before, after) = entangler_purity().unwrap();
        assert!((before - 1.0).abs() < 1e-12 && after < before);
    }
}

use rayon::prelude::*;

use crate::exact::{QSqrt2, Scalar};
use crate::hilbert::{born_distribution, branch, measure, CMatrix, Observable, Space, StateVector, UnitaryMap};
use crate::rng;

use super::model::{joint_space, ExactModel, JointModel};
use super::{Arm, CircuitError, DetectorOutcome, ElementKind, OpticalCircuit, Result};

/// (|11⟩ + |22⟩)/√2 on the left ⊗ right path space.
pub fn initial_state() -> StateVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::from_real(joint_space(), &[h, 0.0, 0.0, h]).expect("pair state is normalized")
}

/// Probability of every joint detector outcome, sorted by outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeTable<S> {
    pub entries: Vec<(DetectorOutcome, S)>,
}

impl<S: Scalar> OutcomeTable<S> {
    fn sorted(mut entries: Vec<(DetectorOutcome, S)>) -> Self {
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        OutcomeTable { entries }
    }

    pub fn get(&self, left: &str, right: &str) -> Option<&S> {
        self.entries
            .iter()
            .find(|(o, _)| o.left == left && o.right == right)
            .map(|(_, p)| p)
    }

    pub fn total(&self) -> S {
        self.entries.iter().map(|(_, p)| p.clone()).sum()
    }

    /// Marginal of one arm's outcomes, sorted by name.
    pub fn marginal(&self, arm: Arm) -> Vec<(String, S)> {
        let mut out: Vec<(String, S)> = Vec::new();
        for (o, p) in &self.entries {
            let name = o.get(arm).to_string();
            match out.iter_mut().find(|(n, _)| *n == name) {
                Some((_, acc)) => *acc = acc.clone() + p.clone(),
                None => out.push((name, p.clone())),
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    pub fn to_f64(&self) -> OutcomeTable<f64> {
        OutcomeTable {
            entries: self.entries.iter().map(|(o, p)| (o.clone(), p.to_f64())).collect(),
        }
    }
}

fn detector_value(name: &str) -> f64 {
    name[1..].parse().expect("detector names end in a digit")
}

/// Terminal measurement of `arm` as an observable on the joint space, with
/// detector names as outcome labels.
fn local_detector(circuit: &OpticalCircuit, arm: Arm) -> Result<Observable> {
    let names = circuit.outcome_names(arm);
    let local_space = Space::paths(arm.prefix());
    let parts = (0..2)
        .map(|k| {
            let mut p = CMatrix::zeros(2, 2);
            p[(k, k)] = 1.0.into();
            (names[k].clone(), detector_value(&names[k]), p)
        })
        .collect();
    Ok(Observable::from_projectors(local_space, parts)?)
}

fn lifted_detector(circuit: &OpticalCircuit, arm: Arm) -> Result<Observable> {
    Ok(Observable::lift(&joint_space(), arm.index(), &local_detector(circuit, arm)?)?)
}

fn lifted_splitter(arm: Arm, bs: &super::BeamSplitter) -> Result<UnitaryMap> {
    let local = UnitaryMap::beam_splitter(Space::paths(arm.prefix()), bs.theta, bs.phase)?;
    Ok(UnitaryMap::lift(&joint_space(), arm.index(), &local)?)
}

fn split_label(label: &str) -> DetectorOutcome {
    let (l, r) = label.split_once(',').expect("joint labels are `left,right`");
    DetectorOutcome::new(l, r)
}

/// Joint detector statistics: the pair state is carried through every beam
/// splitter and the product of both terminal projectors is measured.
pub fn copenhagen_joint_distribution(circuit: &OpticalCircuit) -> Result<OutcomeTable<f64>> {
    let mut state = initial_state();
    for e in circuit.elements() {
        if let ElementKind::BeamSplitter(bs) = &e.kind {
            state = state.evolve(&lifted_splitter(e.arm, bs)?)?;
        }
    }
    let joint = Observable::tensor(
        &local_detector(circuit, Arm::Left)?,
        &local_detector(circuit, Arm::Right)?,
    );
    let table = born_distribution(&state, &joint)?;
    Ok(OutcomeTable::sorted(
        table.entries.into_iter().map(|(l, p)| (split_label(&l), p)).collect(),
    ))
}

/// The same statistics in exact Q(√2) arithmetic.
pub fn copenhagen_joint_distribution_exact(circuit: &OpticalCircuit) -> Result<OutcomeTable<QSqrt2>> {
    joint_distribution_with::<ExactModel>(circuit)
}

pub(crate) fn joint_distribution_with<M: JointModel>(circuit: &OpticalCircuit) -> Result<OutcomeTable<M::S>> {
    let mut model = M::initial();
    for e in circuit.elements() {
        if let ElementKind::BeamSplitter(bs) = &e.kind {
            model.apply(e.arm, bs)?;
        }
    }
    let (ln, rn) = (circuit.outcome_names(Arm::Left), circuit.outcome_names(Arm::Right));
    let mut entries = Vec::new();
    for l in 0..2 {
        for r in 0..2 {
            entries.push((DetectorOutcome::new(&ln[l], &rn[r]), model.weight(l, r)));
        }
    }
    Ok(OutcomeTable::sorted(entries))
}

/// `n` sampled runs: every detector measures in layer order and collapses
/// the pair state. Trial `i` draws from stream `(seed, i)`.
pub fn sample_copenhagen(circuit: &OpticalCircuit, n: usize, seed: u64) -> Result<Vec<DetectorOutcome>> {
    if n == 0 {
        return Err(CircuitError::EmptyInput("need at least one trial".into()));
    }
    enum Step {
        Evolve(UnitaryMap),
        Detect(Arm, Observable),
    }
    let steps: Vec<Step> = circuit
        .elements()
        .iter()
        .map(|e| match &e.kind {
            ElementKind::BeamSplitter(bs) => lifted_splitter(e.arm, bs).map(Step::Evolve),
            _ => lifted_detector(circuit, e.arm).map(|o| Step::Detect(e.arm, o)),
        })
        .collect::<Result<_>>()?;
    let start = initial_state();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let mut state = start.clone();
            let mut seen = [String::new(), String::new()];
            for step in &steps {
                match step {
                    Step::Evolve(u) => state = state.evolve(u)?,
                    Step::Detect(arm, obs) => {
                        let (k, post) = measure(&state, obs, &mut r)?;
                        seen[arm.index()] = obs.outcomes()[k].label.clone();
                        state = post;
                    }
                }
            }
            let [left, right] = seen;
            Ok(DetectorOutcome { left, right })
        })
        .collect()
}

/// Many-worlds bookkeeping: every detection splits each world into one
/// branch per possible outcome; returns the final worlds and their weights.
pub fn mwi_branches(circuit: &OpticalCircuit) -> Result<Vec<(DetectorOutcome, f64)>> {
    let mut worlds: Vec<(f64, [String; 2], StateVector)> = vec![(1.0, Default::default(), initial_state())];
    for e in circuit.elements() {
        match &e.kind {
            ElementKind::BeamSplitter(bs) => {
                let u = lifted_splitter(e.arm, bs)?;
                for w in &mut worlds {
                    w.2 = w.2.evolve(&u)?;
                }
            }
            _ => {
                let obs = lifted_detector(circuit, e.arm)?;
                let mut next = Vec::new();
                for (weight, seen, state) in worlds {
                    for b in branch(&state, &obs)?.branches {
                        let mut s = seen.clone();
                        s[e.arm.index()] = b.outcome;
                        next.push((weight * b.weight, s, b.state));
                    }
                }
                worlds = next;
            }
        }
    }
    let mut out: Vec<(DetectorOutcome, f64)> = worlds
        .into_iter()
        .map(|(w, [left, right], _)| (DetectorOutcome { left, right }, w))
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_eraser, EraserConfig, FloatModel, Setting};
    use crate::hilbert::collapse;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

    fn q(n: i64, d: i64) -> QSqrt2 {
        QSqrt2::rational(n, d)
    }

    #[test]
    fn initial_amplitudes() {
        let s = initial_state();
        assert!((s.amplitude(0).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(s.amplitude(1).norm(), 0.0);
        assert_eq!(s.amplitude(2).norm(), 0.0);
        assert!((s.amplitude(3).re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn pair_state_in_the_rotated_basis() {
        // oracle: expand (|−−⟩ + |++⟩)/√2 by hand
        let h = FRAC_1_SQRT_2;
        let minus = [h, -h];
        let plus = [h, h];
        let mut amps = [0.0; 4];
        for l in 0..2 {
            for r in 0..2 {
                amps[l * 2 + r] = h * (minus[l] * minus[r] + plus[l] * plus[r]);
            }
        }
        let s = initial_state();
        for (i, a) in amps.iter().enumerate() {
            assert!((s.amplitude(i).re - a).abs() < 1e-15);
        }
    }

    #[test]
    fn interference_pair_is_perfectly_correlated() {
        let c = build_eraser(Setting::Interference, Setting::Interference, false, FRAC_PI_4).unwrap();
        let t = copenhagen_joint_distribution_exact(&c).unwrap();
        assert_eq!(t.get("L1", "R1"), Some(&q(1, 2)));
        assert_eq!(t.get("L2", "R2"), Some(&q(1, 2)));
        assert_eq!(t.get("L1", "R2"), Some(&q(0, 1)));
        assert_eq!(t.get("L2", "R1"), Some(&q(0, 1)));
        assert_eq!(t.total(), QSqrt2::one());
        let f = copenhagen_joint_distribution(&c).unwrap();
        for ((o1, p), (o2, e)) in f.entries.iter().zip(&t.entries) {
            assert_eq!(o1, o2);
            assert!((p - e.to_f64()).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_settings_are_uncorrelated() {
        for right_first in [false, true] {
            let c = build_eraser(Setting::Interference, Setting::WhichPath, right_first, FRAC_PI_4).unwrap();
            let t = copenhagen_joint_distribution_exact(&c).unwrap();
            assert_eq!(t.entries.len(), 4);
            for (o, p) in &t.entries {
                assert_eq!(*p, q(1, 4), "{o}");
            }
        }
    }

    #[test]
    fn whichpath_pair_is_diagonal() {
        let c = build_eraser(Setting::WhichPath, Setting::WhichPath, false, FRAC_PI_4).unwrap();
        let t = copenhagen_joint_distribution_exact(&c).unwrap();
        assert_eq!(t.get("L3", "R3"), Some(&q(1, 2)));
        assert_eq!(t.get("L4", "R4"), Some(&q(1, 2)));
        assert_eq!(t.get("L3", "R4"), Some(&q(0, 1)));
    }

    #[test]
    fn zero_angle_interference_matches_whichpath_statistics() {
        let c = build_eraser(Setting::Interference, Setting::Interference, false, 0.0).unwrap();
        let t = copenhagen_joint_distribution_exact(&c).unwrap();
        // port 1' carries path 1 and feeds detector 2
        assert_eq!(t.get("L2", "R2"), Some(&q(1, 2)));
        assert_eq!(t.get("L1", "R1"), Some(&q(1, 2)));
        assert_eq!(t.get("L1", "R2"), Some(&q(0, 1)));
    }

    #[test]
    fn left_detection_fixes_the_right_conditional() {
        // oracle: collapsing on L1 = |−⟩⟨−| ⊗ 1 leaves |−⟩ on the right
        let s = initial_state();
        let h = FRAC_1_SQRT_2;
        let minus = StateVector::from_real(Space::paths("L"), &[h, -h]).unwrap();
        let plus = StateVector::from_real(Space::paths("L"), &[h, h]).unwrap();
        let local = Observable::from_states(
            Space::paths("L"),
            vec![("L1".into(), minus.clone()), ("L2".into(), plus)],
        )
        .unwrap();
        let obs = Observable::lift(s.space(), 0, &local).unwrap();
        let post = collapse(&s, &obs, "L1").unwrap();
        let want = minus.tensor(&StateVector::from_real(Space::paths("R"), &[h, -h]).unwrap());
        assert!((post.fidelity(&want).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generic_angles_agree_between_models() {
        let c = EraserConfig::new(Setting::Interference, Setting::Interference)
            .arm_theta(Arm::Left, 0.3)
            .arm_theta(Arm::Right, 1.1)
            .build()
            .unwrap();
        let a = copenhagen_joint_distribution(&c).unwrap();
        let b = joint_distribution_with::<FloatModel>(&c).unwrap();
        for ((_, x), (_, y)) in a.entries.iter().zip(&b.entries) {
            assert!((x - y).abs() < 1e-12);
        }
        // E(θ, φ) = cos 2(θ − φ) with port 1' ↦ +1
        let e = a.get("L2", "R2").unwrap() + a.get("L1", "R1").unwrap()
            - a.get("L1", "R2").unwrap()
            - a.get("L2", "R1").unwrap();
        assert!((e - (2.0 * (0.3f64 - 1.1)).cos()).abs() < 1e-12);
        assert!(!c.is_exact());
        assert!(copenhagen_joint_distribution_exact(&c).is_err());
    }

    #[test]
    fn exact_at_eighths_with_phase() {
        let mut cfg = EraserConfig::new(Setting::Interference, Setting::Interference).theta(PI / 8.0);
        cfg.splitters[1].phase = PI;
        let c = cfg.build().unwrap();
        let t = copenhagen_joint_distribution_exact(&c).unwrap();
        let f = copenhagen_joint_distribution(&c).unwrap();
        assert_eq!(t.total(), QSqrt2::one());
        for ((_, x), (_, y)) in t.entries.iter().zip(&f.entries) {
            assert!((x.to_f64() - y).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_frequencies_within_three_sigma() {
        let c = build_eraser(Setting::Interference, Setting::WhichPath, false, FRAC_PI_4).unwrap();
        let n = 20_000;
        let runs = sample_copenhagen(&c, n, 11).unwrap();
        let sigma = (0.25 * 0.75 / n as f64).sqrt();
        for (o, p) in copenhagen_joint_distribution(&c).unwrap().entries {
            let f = runs.iter().filter(|r| **r == o).count() as f64 / n as f64;
            assert!((f - p).abs() < 3.0 * sigma, "{o}: {f}");
        }
        assert_eq!(runs, sample_copenhagen(&c, n, 11).unwrap());
    }

    #[test]
    fn branches_carry_born_weights() {
        let c = build_eraser(Setting::Interference, Setting::Interference, true, FRAC_PI_4).unwrap();
        let worlds = mwi_branches(&c).unwrap();
        assert_eq!(worlds.len(), 2);
        for (o, w) in &worlds {
            assert_eq!(o.left[1..], o.right[1..]);
            assert!((w - 0.5).abs() < 1e-12);
        }
    }
}

use crate::exact::{trig_products_eighths, QSqrt2, Scalar};
use crate::hilbert::{collapse, Observable, Space, StateVector, UnitaryMap};

use super::{path_label, Arm, BeamSplitter, CircuitError, Result};

/// The joint two-arm state as the transport needs it: joint label weights,
/// single-arm beam splitters, and conditioning on one arm's detected label.
/// Joint labels are local indices `[left, right]`.
pub trait JointModel: Clone + Send + Sync {
    type S: Scalar;

    /// The pair state (|11⟩ + |22⟩)/√2.
    fn initial() -> Self;
    /// Probability of the joint label `(l, r)`.
    fn weight(&self, l: usize, r: usize) -> Self::S;
    fn apply(&mut self, arm: Arm, bs: &BeamSplitter) -> Result<()>;
    /// Projects `arm` onto `label` and renormalizes.
    fn condition(&mut self, arm: Arm, label: usize) -> Result<()>;

    fn weight_of(&self, labels: [usize; 2]) -> Self::S {
        self.weight(labels[0], labels[1])
    }
}

/// Distribution of `arm`'s label given the other arm's label.
pub fn conditional<M: JointModel>(model: &M, arm: Arm, other_label: usize) -> Result<[M::S; 2]> {
    let w = |k: usize| match arm {
        Arm::Left => model.weight(k, other_label),
        Arm::Right => model.weight(other_label, k),
    };
    let (w0, w1) = (w(0), w(1));
    let total = w0.clone() + w1.clone();
    if total.is_negligible() {
        return Err(CircuitError::Inconsistent(format!(
            "{arm:?} conditional given other label {other_label} is undefined"
        )));
    }
    Ok([w0 / total.clone(), w1 / total])
}

/// Exact model: the real 4×4 density matrix over Q(√2). Supports beam
/// splitters at multiples of π/8 with phase 0 or π.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactModel {
    rho: Vec<QSqrt2>,
}

impl ExactModel {
    fn at(&self, i: usize, j: usize) -> &QSqrt2 {
        &self.rho[i * 4 + j]
    }

    pub fn density(&self) -> &[QSqrt2] {
        &self.rho
    }
}

fn joint(arm: Arm, own: usize, other: usize) -> usize {
    match arm {
        Arm::Left => own * 2 + other,
        Arm::Right => other * 2 + own,
    }
}

impl JointModel for ExactModel {
    type S = QSqrt2;

    fn initial() -> Self {
        let mut rho = vec![QSqrt2::zero(); 16];
        for i in [0, 3] {
            for j in [0, 3] {
                rho[i * 4 + j] = QSqrt2::rational(1, 2);
            }
        }
        ExactModel { rho }
    }

    fn weight(&self, l: usize, r: usize) -> QSqrt2 {
        let i = l * 2 + r;
        self.at(i, i).clone()
    }

    fn apply(&mut self, arm: Arm, bs: &BeamSplitter) -> Result<()> {
        let (k, sign) = bs
            .exact_form()
            .ok_or_else(|| CircuitError::NotExact(format!("θ = {}, φ = {}", bs.theta, bs.phase)))?;
        let (cc, ss, cs) = trig_products_eighths(k).expect("k is in range");
        // entries of B as (sign, is_sine)
        let entry = |out: usize, inp: usize| -> (i32, bool) {
            match (out, inp) {
                (0, 0) => (1, false),
                (0, 1) => (sign, true),
                (1, 0) => (1, true),
                _ => (-sign, false),
            }
        };
        let product = |a: (i32, bool), b: (i32, bool)| -> QSqrt2 {
            let v = match (a.1, b.1) {
                (false, false) => cc.clone(),
                (true, true) => ss.clone(),
                _ => cs.clone(),
            };
            if a.0 * b.0 < 0 {
                -v
            } else {
                v
            }
        };
        let mut next = vec![QSqrt2::zero(); 16];
        for own_i in 0..2 {
            for oth_i in 0..2 {
                for own_j in 0..2 {
                    for oth_j in 0..2 {
                        let mut acc = QSqrt2::zero();
                        for a in 0..2 {
                            for c in 0..2 {
                                let r = self.at(joint(arm, a, oth_i), joint(arm, c, oth_j));
                                if r.is_zero() {
                                    continue;
                                }
                                acc += product(entry(own_i, a), entry(own_j, c)) * r.clone();
                            }
                        }
                        next[joint(arm, own_i, oth_i) * 4 + joint(arm, own_j, oth_j)] = acc;
                    }
                }
            }
        }
        self.rho = next;
        Ok(())
    }

    fn condition(&mut self, arm: Arm, label: usize) -> Result<()> {
        let keep = |i: usize| {
            let (l, r) = (i / 2, i % 2);
            match arm {
                Arm::Left => l == label,
                Arm::Right => r == label,
            }
        };
        let trace: QSqrt2 = (0..4).filter(|&i| keep(i)).map(|i| self.at(i, i).clone()).sum();
        if trace.is_zero() {
            return Err(CircuitError::Hilbert(crate::hilbert::HilbertError::ImpossibleOutcome {
                label: format!("{}{}", arm.prefix(), label),
                probability: 0.0,
            }));
        }
        for i in 0..4 {
            for j in 0..4 {
                let v = &mut self.rho[i * 4 + j];
                *v = if keep(i) && keep(j) {
                    v.clone() / trace.clone()
                } else {
                    QSqrt2::zero()
                };
            }
        }
        Ok(())
    }
}

/// Floating-point model backed by the statevector core; any angle and phase.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatModel {
    state: StateVector,
}

fn arm_space(arm: Arm) -> Space {
    Space::paths(arm.prefix())
}

pub(crate) fn joint_space() -> Space {
    arm_space(Arm::Left).product(&arm_space(Arm::Right))
}

impl FloatModel {
    pub fn state(&self) -> &StateVector {
        &self.state
    }
}

impl JointModel for FloatModel {
    type S = f64;

    fn initial() -> Self {
        FloatModel {
            state: super::initial_state(),
        }
    }

    fn weight(&self, l: usize, r: usize) -> f64 {
        self.state.amplitude(l * 2 + r).norm_sqr()
    }

    fn apply(&mut self, arm: Arm, bs: &BeamSplitter) -> Result<()> {
        let local = UnitaryMap::beam_splitter(arm_space(arm), bs.theta, bs.phase)?;
        let u = UnitaryMap::lift(self.state.space(), arm.index(), &local)?;
        self.state = self.state.evolve(&u)?;
        Ok(())
    }

    fn condition(&mut self, arm: Arm, label: usize) -> Result<()> {
        let obs = Observable::lift(self.state.space(), arm.index(), &Observable::basis(arm_space(arm)))?;
        self.state = collapse(&self.state, &obs, &path_label(label))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn both<F: Fn(&mut ExactModel) -> Result<()>, G: Fn(&mut FloatModel) -> Result<()>>(f: F, g: G) {
        let mut e = ExactModel::initial();
        let mut m = FloatModel::initial();
        f(&mut e).unwrap();
        g(&mut m).unwrap();
        for l in 0..2 {
            for r in 0..2 {
                assert!((e.weight(l, r).to_f64() - m.weight(l, r)).abs() < 1e-12, "({l},{r})");
            }
        }
    }

    #[test]
    fn exact_and_float_agree_on_every_exact_splitter() {
        for k in 0..=4 {
            for phase in [0.0, PI] {
                let bs = BeamSplitter {
                    theta: k as f64 * PI / 8.0,
                    phase,
                };
                let b2 = BeamSplitter::new(FRAC_PI_4);
                both(
                    |e| {
                        e.apply(Arm::Left, &bs)?;
                        e.apply(Arm::Right, &b2)?;
                        e.condition(Arm::Right, 1)?;
                        e.apply(Arm::Right, &bs)
                    },
                    |m| {
                        m.apply(Arm::Left, &bs)?;
                        m.apply(Arm::Right, &b2)?;
                        m.condition(Arm::Right, 1)?;
                        m.apply(Arm::Right, &bs)
                    },
                );
            }
        }
    }

    #[test]
    fn exact_model_rejects_generic_angles() {
        let mut e = ExactModel::initial();
        assert!(matches!(e.apply(Arm::Left, &BeamSplitter::new(0.3)), Err(CircuitError::NotExact(_))));
    }

    #[test]
    fn conditioning_on_impossible_label_fails() {
        let mut e = ExactModel::initial();
        e.condition(Arm::Left, 0).unwrap();
        assert!(e.condition(Arm::Right, 1).is_err());
        let mut m = FloatModel::initial();
        m.condition(Arm::Left, 0).unwrap();
        assert!(m.condition(Arm::Right, 1).is_err());
    }

    #[test]
    fn conditionals_of_the_pair_state() {
        let e = ExactModel::initial();
        let c = conditional(&e, Arm::Left, 0).unwrap();
        assert_eq!(c, [QSqrt2::one(), QSqrt2::zero()]);
        let mut e2 = e.clone();
        e2.apply(Arm::Left, &BeamSplitter::new(FRAC_PI_4)).unwrap();
        let c = conditional(&e2, Arm::Left, 1).unwrap();
        assert_eq!(c, [QSqrt2::rational(1, 2), QSqrt2::rational(1, 2)]);
    }
}

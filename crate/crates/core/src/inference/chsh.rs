use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{
    copenhagen_joint_distribution, copenhagen_joint_distribution_exact, Arm, EraserConfig, OpticalCircuit, Setting,
};
use crate::exact::{QSqrt2, Scalar};
use crate::rng;

use super::{InferenceError, Mode, RecordSet, Result, RunRecord};

/// Two beam-splitter angles per side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChshSettings {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl ChshSettings {
    fn angles(&self) -> [f64; 4] {
        [self.a[0], self.a[1], self.b[0], self.b[1]]
    }

    fn from_angles(v: [f64; 4]) -> Self {
        ChshSettings {
            a: [v[0], v[1]],
            b: [v[2], v[3]],
        }
    }
}

fn circuit(theta: f64, phi: f64) -> Result<OpticalCircuit> {
    Ok(EraserConfig::new(Setting::Interference, Setting::Interference)
        .arm_theta(Arm::Left, theta)
        .arm_theta(Arm::Right, phi)
        .build()?)
}

/// Port 1' (detector 2) counts as +1, port 2' (detector 1) as −1.
fn sign(name: &str) -> i32 {
    if name.ends_with('2') {
        1
    } else {
        -1
    }
}

fn correlator_from<S: Scalar>(entries: &[(crate::circuit::DetectorOutcome, S)]) -> S {
    entries
        .iter()
        .map(|(o, p)| {
            if sign(&o.left) * sign(&o.right) > 0 {
                p.clone()
            } else {
                -p.clone()
            }
        })
        .fold(S::zero(), |a, b| a + b)
}

/// Correlator E(θ, φ) of the ±1 outcomes of the pair state.
pub fn correlator(theta: f64, phi: f64) -> Result<f64> {
    Ok(correlator_from(&copenhagen_joint_distribution(&circuit(theta, phi)?)?.entries))
}

fn correlator_exact(theta: f64, phi: f64) -> Result<QSqrt2> {
    Ok(correlator_from(&copenhagen_joint_distribution_exact(&circuit(theta, phi)?)?.entries))
}

fn combine<S: Scalar>(e: [S; 4]) -> S {
    let [e11, e12, e21, e22] = e;
    e11 + e12 + e21 - e22
}

/// S = E(a₁,b₁) + E(a₁,b₂) + E(a₂,b₁) − E(a₂,b₂) for the pair state.
pub fn chsh_value(s: &ChshSettings) -> Result<f64> {
    Ok(combine([
        correlator(s.a[0], s.b[0])?,
        correlator(s.a[0], s.b[1])?,
        correlator(s.a[1], s.b[0])?,
        correlator(s.a[1], s.b[1])?,
    ]))
}

/// Exact S, available when every angle is a multiple of π/8.
pub fn chsh_value_exact(s: &ChshSettings) -> Result<QSqrt2> {
    Ok(combine([
        correlator_exact(s.a[0], s.b[0])?,
        correlator_exact(s.a[0], s.b[1])?,
        correlator_exact(s.a[1], s.b[0])?,
        correlator_exact(s.a[1], s.b[1])?,
    ]))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChshOptimum {
    pub s_max: f64,
    pub settings: ChshSettings,
    /// Exact value at the optimum when all its angles are multiples of π/8.
    pub exact: Option<String>,
    pub grid_points: usize,
}

/// Grid search over angles in [0, π/2] with spacing `step`, then a
/// shrinking pattern search around the best grid point.
pub fn optimize_chsh(step: f64) -> Result<ChshOptimum> {
    if !(step > 0.0 && step <= FRAC_PI_2) {
        return Err(InferenceError::Invalid(format!("grid step {step} outside (0, π/2]")));
    }
    let m = (FRAC_PI_2 / step).round() as usize;
    let grid: Vec<f64> = (0..=m).map(|k| (k as f64 * step).min(FRAC_PI_2)).collect();
    let g = grid.len();
    let table: Vec<f64> = (0..g * g)
        .into_par_iter()
        .map(|k| correlator(grid[k / g], grid[k % g]))
        .collect::<Result<_>>()?;
    let e = |i: usize, j: usize| table[i * g + j];
    let mut best = (f64::NEG_INFINITY, [0usize; 4]);
    for a1 in 0..g {
        for a2 in 0..g {
            for b1 in 0..g {
                for b2 in 0..g {
                    let s = e(a1, b1) + e(a1, b2) + e(a2, b1) - e(a2, b2);
                    if s > best.0 {
                        best = (s, [a1, a2, b1, b2]);
                    }
                }
            }
        }
    }
    let mut x = best.1.map(|k| grid[k]);
    let mut fx = best.0;
    let mut h = step / 2.0;
    while h > 1e-12 {
        let mut improved = false;
        for i in 0..4 {
            for dir in [-1.0, 1.0] {
                let mut y = x;
                y[i] = (y[i] + dir * h).clamp(0.0, FRAC_PI_2);
                let fy = chsh_value(&ChshSettings::from_angles(y))?;
                if fy > fx + 1e-15 {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            h /= 2.0;
        }
    }
    let settings = ChshSettings::from_angles(x);
    let exact = if settings
        .angles()
        .iter()
        .all(|&t| crate::exact::eighths_of_pi(t).is_some())
    {
        Some(chsh_value_exact(&settings)?.to_string())
    } else {
        None
    };
    Ok(ChshOptimum {
        s_max: fx,
        settings,
        exact,
        grid_points: g,
    })
}

/// Local hidden-variable models with ±1 outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum LocalModel {
    /// Fixed outcome per setting index on each side.
    Deterministic { a: [i8; 2], b: [i8; 2] },
    /// λ uniform on [0, π); each side answers sign cos 2(angle − λ).
    HiddenAngle,
}

impl LocalModel {
    /// All sixteen deterministic outcome tables.
    pub fn deterministic_family() -> Vec<LocalModel> {
        let pm = |bit: usize| if bit == 0 { 1 } else { -1 };
        (0..16)
            .map(|k| LocalModel::Deterministic {
                a: [pm(k & 1), pm((k >> 1) & 1)],
                b: [pm((k >> 2) & 1), pm((k >> 3) & 1)],
            })
            .collect()
    }

    /// The deterministic tables plus the hidden-angle model.
    pub fn family() -> Vec<LocalModel> {
        let mut v = Self::deterministic_family();
        v.push(LocalModel::HiddenAngle);
        v
    }

    /// Correlator for setting indices `(i, j)` at angles `(θ, φ)`.
    pub fn correlator(&self, i: usize, j: usize, theta: f64, phi: f64) -> f64 {
        match self {
            LocalModel::Deterministic { a, b } => (a[i] * b[j]) as f64,
            LocalModel::HiddenAngle => {
                let d = (theta - phi).rem_euclid(PI);
                let d = d.min(PI - d);
                1.0 - 4.0 * d / PI
            }
        }
    }

    pub fn chsh(&self, s: &ChshSettings) -> f64 {
        combine([
            self.correlator(0, 0, s.a[0], s.b[0]),
            self.correlator(0, 1, s.a[0], s.b[1]),
            self.correlator(1, 0, s.a[1], s.b[0]),
            self.correlator(1, 1, s.a[1], s.b[1]),
        ])
    }

    fn outcomes<R: Rng>(&self, i: usize, j: usize, s: &ChshSettings, rng: &mut R) -> (i8, i8) {
        match self {
            LocalModel::Deterministic { a, b } => (a[i], b[j]),
            LocalModel::HiddenAngle => {
                let lambda = rng.gen::<f64>() * PI;
                let side = |angle: f64| if (2.0 * (angle - lambda)).cos() >= 0.0 { 1 } else { -1 };
                (side(s.a[i]), side(s.b[j]))
            }
        }
    }
}

fn outcome_name(v: i8) -> String {
    if v > 0 { "+1" } else { "-1" }.to_string()
}

/// `n` Monte-Carlo runs of a local model; each run picks its setting pair
/// uniformly. Settings are recorded as `a1`, `a2`, `b1`, `b2`.
pub fn local_model_records(model: &LocalModel, s: &ChshSettings, n: usize, seed: u64) -> RecordSet<f64> {
    let records = (0..n)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, t as u64);
            let (i, j) = (r.gen_range(0..2), r.gen_range(0..2));
            let (x, y) = model.outcomes(i, j, s, &mut r);
            RunRecord {
                settings: [format!("a{}", i + 1), format!("b{}", j + 1)],
                outcome: [outcome_name(x), outcome_name(y)],
                context: "local-model".into(),
                hidden: None,
                weight: 1.0,
            }
        })
        .collect();
    RecordSet::new(Mode::MonteCarlo, records)
}

/// CHSH value estimated from ±1 records labelled as in
/// [`local_model_records`].
pub fn chsh_from_records<S: Scalar>(set: &RecordSet<S>) -> Result<f64> {
    let mut sum = [[0.0f64; 2]; 2];
    let mut weight = [[0.0f64; 2]; 2];
    let index = |s: &str, side: char| -> Result<usize> {
        match (s.chars().next(), &s[1..]) {
            (Some(c), "1") if c == side => Ok(0),
            (Some(c), "2") if c == side => Ok(1),
            _ => Err(InferenceError::Invalid(format!("unknown CHSH setting `{s}`"))),
        }
    };
    let value = |s: &str| -> Result<f64> {
        match s {
            "+1" => Ok(1.0),
            "-1" => Ok(-1.0),
            _ => Err(InferenceError::Invalid(format!("CHSH outcome `{s}` is not ±1"))),
        }
    };
    for r in &set.records {
        let (i, j) = (index(&r.settings[0], 'a')?, index(&r.settings[1], 'b')?);
        let w = r.weight.to_f64();
        sum[i][j] += w * value(&r.outcome[0])? * value(&r.outcome[1])?;
        weight[i][j] += w;
    }
    let mut e = [0.0; 4];
    for (k, (i, j)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        if weight[i][j] == 0.0 {
            return Err(InferenceError::ZeroFrequency(format!("a{} b{}", i + 1, j + 1)));
        }
        e[k] = sum[i][j] / weight[i][j];
    }
    Ok(combine(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, SQRT_2};

    #[test]
    fn aligned_settings_are_perfectly_correlated() {
        assert!((correlator(FRAC_PI_4, FRAC_PI_4).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(correlator_exact(FRAC_PI_4, FRAC_PI_4).unwrap(), QSqrt2::one());
    }

    #[test]
    fn correlator_is_cosine_of_twice_the_difference() {
        for (t, p) in [(0.1, 0.9), (0.0, FRAC_PI_2), (1.2, 0.3)] {
            assert!((correlator(t, p).unwrap() - (2.0 * (t - p)).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_tsirelson_point() {
        let s = ChshSettings {
            a: [FRAC_PI_4, FRAC_PI_2],
            b: [3.0 * FRAC_PI_8, FRAC_PI_8],
        };
        let v = chsh_value_exact(&s).unwrap();
        assert_eq!(v, QSqrt2::from_parts(0, 1, 2, 1));
        assert!(v > QSqrt2::rational(2, 1));
    }

    #[test]
    fn grid_optimum_is_tsirelson() {
        let opt = optimize_chsh(PI / 32.0).unwrap();
        assert!((opt.s_max - 2.0 * SQRT_2).abs() < 1e-9, "{}", opt.s_max);
        assert_eq!(opt.grid_points, 17);
    }

    #[test]
    fn coarse_grid_still_refines_to_tsirelson() {
        let opt = optimize_chsh(PI / 6.0).unwrap();
        assert!((opt.s_max - 2.0 * SQRT_2).abs() < 1e-9, "{}", opt.s_max);
    }

    #[test]
    fn local_models_respect_the_bound_on_the_grid() {
        let grid: Vec<f64> = (0..=16).map(|k| k as f64 * PI / 32.0).collect();
        for m in LocalModel::family() {
            for &a1 in &grid {
                for &a2 in &grid {
                    for &b1 in &grid {
                        for &b2 in &grid {
                            let s = ChshSettings { a: [a1, a2], b: [b1, b2] };
                            assert!(m.chsh(&s) <= 2.0 + 1e-12, "{m:?} {s:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn hidden_angle_closed_form_matches_sampling() {
        let s = ChshSettings {
            a: [0.0, FRAC_PI_4],
            b: [FRAC_PI_8, 3.0 * FRAC_PI_8],
        };
        let m = LocalModel::HiddenAngle;
        let n = 200_000;
        let est = chsh_from_records(&local_model_records(&m, &s, n, 4)).unwrap();
        // each correlator estimated from about n/4 runs with variance ≤ 1
        let sigma = 4.0 * (4.0 / n as f64).sqrt();
        assert!((est - m.chsh(&s)).abs() < 3.0 * sigma, "{est} vs {}", m.chsh(&s));
        assert!(est <= 2.0 + 3.0 * sigma);
    }

    #[test]
    fn deterministic_records_give_exact_values() {
        let s = ChshSettings {
            a: [0.0, FRAC_PI_4],
            b: [FRAC_PI_8, 3.0 * FRAC_PI_8],
        };
        for m in LocalModel::deterministic_family() {
            let est = chsh_from_records(&local_model_records(&m, &s, 400, 1)).unwrap();
            assert_eq!(est, m.chsh(&s));
            assert!(est.abs() <= 2.0);
        }
    }
}

//! Discrete model of an entangled-pair eraser: two arms, each ending in
//! either a which-path detector or a beam splitter followed by a detector in
//! the rotated basis. Predictions come from the statevector model; a
//! deterministic path transport assigns every pair an actual joint path
//! label and carries it through the circuit without reordering.

mod copenhagen;
mod export;
mod independence;
mod model;
mod transport;

pub use copenhagen::{
    copenhagen_joint_distribution, copenhagen_joint_distribution_exact, initial_state, mwi_branches,
    sample_copenhagen, OutcomeTable,
};
pub use export::{path_record, path_records_json, HiddenRecord, PathRecord, SettingsRecord};
pub use independence::{refined_records, trajectory_setting_dependence, EnumeratedRecord, SettingDependence};
pub use model::{conditional, ExactModel, FloatModel, JointModel};
pub use transport::{
    bohmian_transport, bohmian_transport_with, enumerate_transport, global_coordinate, locate, sample_hidden,
    sample_transport, Cell, EnumerationReport, Hidden, LayerCheck, PathConfiguration, RecordEntry, TransportPlan,
    TransportResult,
};

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::eighths_of_pi;
use crate::hilbert::HilbertError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Left,
    Right,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::Left, Arm::Right];

    pub fn index(self) -> usize {
        match self {
            Arm::Left => 0,
            Arm::Right => 1,
        }
    }

    pub fn other(self) -> Arm {
        match self {
            Arm::Left => Arm::Right,
            Arm::Right => Arm::Left,
        }
    }

    /// Detector name prefix.
    pub fn prefix(self) -> &'static str {
        match self {
            Arm::Left => "L",
            Arm::Right => "R",
        }
    }
}

/// What an arm measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Setting {
    #[serde(rename = "interference")]
    Interference,
    #[serde(rename = "whichpath")]
    WhichPath,
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setting::Interference => "interference",
            Setting::WhichPath => "whichpath",
        })
    }
}

impl FromStr for Setting {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interference" | "int" => Ok(Setting::Interference),
            "whichpath" | "which-path" | "wp" => Ok(Setting::WhichPath),
            _ => Err(CircuitError::InvalidCircuit(format!(
                "unknown setting `{s}` (expected interference or whichpath)"
            ))),
        }
    }
}

/// Real-orthogonal beam splitter with an optional phase on the second input:
/// |1⟩ → cosθ|1'⟩ + sinθ|2'⟩, |2⟩ → e^{iφ}(sinθ|1'⟩ − cosθ|2'⟩).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitter {
    pub theta: f64,
    #[serde(default)]
    pub phase: f64,
}

impl BeamSplitter {
    pub fn new(theta: f64) -> Self {
        BeamSplitter { theta, phase: 0.0 }
    }

    /// Matrix with rows indexed by output port and columns by input path.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let (c, s) = (self.theta.cos(), self.theta.sin());
        let e = Complex64::from_polar(1.0, self.phase);
        [[Complex64::new(c, 0.0), e * s], [Complex64::new(s, 0.0), -e * c]]
    }

    /// `(k, sign)` when θ = kπ/8 and e^{iφ} = sign ∈ {+1, −1}.
    pub fn exact_form(&self) -> Option<(u32, i32)> {
        let k = eighths_of_pi(self.theta)?;
        let p = self.phase.rem_euclid(2.0 * std::f64::consts::PI);
        let sign = if p.abs() < 1e-12 || (p - 2.0 * std::f64::consts::PI).abs() < 1e-12 {
            1
        } else if (p - std::f64::consts::PI).abs() < 1e-12 {
            -1
        } else {
            return None;
        };
        Some((k, sign))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElementKind {
    BeamSplitter(BeamSplitter),
    WhichPathDetector,
    ErasureDetector,
}

impl ElementKind {
    pub fn is_detector(&self) -> bool {
        !matches!(self, ElementKind::BeamSplitter(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub layer: u32,
    pub arm: Arm,
    pub kind: ElementKind,
}

/// Top-to-bottom order of an arm's labels as drawn: `path_order` for the
/// two paths (local index 0 is path 1) and `port_order` for the two beam
/// splitter outputs (local index 0 is port 1').
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmGeometry {
    pub path_order: [usize; 2],
    pub port_order: [usize; 2],
}

impl Default for ArmGeometry {
    /// Path 1 above path 2; port 2' (which feeds detector 1) above port 1'.
    fn default() -> Self {
        ArmGeometry {
            path_order: [0, 1],
            port_order: [1, 0],
        }
    }
}

/// Everything needed to lay out an eraser circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EraserConfig {
    pub settings: [Setting; 2],
    pub right_first: bool,
    pub splitters: [BeamSplitter; 2],
    pub geometry: [ArmGeometry; 2],
}

impl EraserConfig {
    /// Balanced beam splitters, left arm acting first, default geometry.
    pub fn new(left: Setting, right: Setting) -> Self {
        let bs = BeamSplitter::new(std::f64::consts::FRAC_PI_4);
        EraserConfig {
            settings: [left, right],
            right_first: false,
            splitters: [bs, bs],
            geometry: [ArmGeometry::default(); 2],
        }
    }

    pub fn right_first(mut self, flag: bool) -> Self {
        self.right_first = flag;
        self
    }

    pub fn theta(mut self, theta: f64) -> Self {
        self.splitters = [BeamSplitter::new(theta); 2];
        self
    }

    pub fn arm_theta(mut self, arm: Arm, theta: f64) -> Self {
        self.splitters[arm.index()].theta = theta;
        self
    }

    pub fn with_settings(mut self, left: Setting, right: Setting) -> Self {
        self.settings = [left, right];
        self
    }

    pub fn build(&self) -> Result<OpticalCircuit> {
        let order = if self.right_first {
            [Arm::Right, Arm::Left]
        } else {
            [Arm::Left, Arm::Right]
        };
        let mut elements = Vec::new();
        for (slot, &arm) in order.iter().enumerate() {
            let base = 2 * slot as u32;
            match self.settings[arm.index()] {
                Setting::Interference => {
                    elements.push(Element {
                        layer: base + 1,
                        arm,
                        kind: ElementKind::BeamSplitter(self.splitters[arm.index()]),
                    });
                    elements.push(Element {
                        layer: base + 2,
                        arm,
                        kind: ElementKind::ErasureDetector,
                    });
                }
                Setting::WhichPath => elements.push(Element {
                    layer: base + 2,
                    arm,
                    kind: ElementKind::WhichPathDetector,
                }),
            }
        }
        OpticalCircuit::new(self.settings, self.right_first, self.geometry, elements)
    }
}

/// Time-layered eraser circuit. Elements are sorted by strictly increasing
/// layer and each arm ends in exactly one detector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpticalCircuit {
    settings: [Setting; 2],
    right_first: bool,
    geometry: [ArmGeometry; 2],
    elements: Vec<Element>,
}

impl OpticalCircuit {
    pub fn new(
        settings: [Setting; 2],
        right_first: bool,
        geometry: [ArmGeometry; 2],
        elements: Vec<Element>,
    ) -> Result<Self> {
        let c = OpticalCircuit {
            settings,
            right_first,
            geometry,
            elements,
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CircuitError::InvalidCircuit(m));
        for w in self.elements.windows(2) {
            if w[1].layer <= w[0].layer {
                return bad(format!("layer {} does not follow layer {}", w[1].layer, w[0].layer));
            }
        }
        for g in &self.geometry {
            for order in [g.path_order, g.port_order] {
                if !(order == [0, 1] || order == [1, 0]) {
                    return bad(format!("label order {order:?} is not a permutation of [0, 1]"));
                }
            }
        }
        for arm in Arm::BOTH {
            let mine: Vec<&Element> = self.elements.iter().filter(|e| e.arm == arm).collect();
            let detectors = mine.iter().filter(|e| e.kind.is_detector()).count();
            if detectors != 1 || !mine.last().is_some_and(|e| e.kind.is_detector()) {
                return bad(format!("{arm:?} arm needs exactly one terminal detector"));
            }
            let splitters: Vec<&BeamSplitter> = mine
                .iter()
                .filter_map(|e| match &e.kind {
                    ElementKind::BeamSplitter(b) => Some(b),
                    _ => None,
                })
                .collect();
            for b in &splitters {
                if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&b.theta) || !b.phase.is_finite() {
                    return bad(format!("beam splitter angle {} outside [0, π/2]", b.theta));
                }
            }
            let detector = mine.last().unwrap().kind;
            let consistent = match self.settings[arm.index()] {
                Setting::Interference => splitters.len() == 1 && detector == ElementKind::ErasureDetector,
                Setting::WhichPath => splitters.is_empty() && detector == ElementKind::WhichPathDetector,
            };
            if !consistent {
                return bad(format!("{arm:?} arm elements do not match its setting"));
            }
        }
        Ok(())
    }

    pub fn settings(&self) -> [Setting; 2] {
        self.settings
    }

    pub fn setting(&self, arm: Arm) -> Setting {
        self.settings[arm.index()]
    }

    pub fn right_first(&self) -> bool {
        self.right_first
    }

    pub fn geometry(&self, arm: Arm) -> ArmGeometry {
        self.geometry[arm.index()]
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn beam_splitter(&self, arm: Arm) -> Option<&BeamSplitter> {
        self.elements.iter().find_map(|e| match &e.kind {
            ElementKind::BeamSplitter(b) if e.arm == arm => Some(b),
            _ => None,
        })
    }

    /// Detector names for local label 0 and 1 at the end of `arm`.
    pub fn outcome_names(&self, arm: Arm) -> [String; 2] {
        let p = arm.prefix();
        match self.setting(arm) {
            Setting::WhichPath => [format!("{p}3"), format!("{p}4")],
            // port 1' feeds detector 2, port 2' feeds detector 1
            Setting::Interference => [format!("{p}2"), format!("{p}1")],
        }
    }

    /// All detector outcome names of `arm`, sorted.
    pub fn outcome_set(&self, arm: Arm) -> [String; 2] {
        let mut n = self.outcome_names(arm);
        n.sort();
        n
    }

    /// True when every beam splitter has an exact Q(√2) form.
    pub fn is_exact(&self) -> bool {
        Arm::BOTH
            .iter()
            .all(|&a| self.beam_splitter(a).map_or(true, |b| b.exact_form().is_some()))
    }
}

/// Convenience constructor with the same angle on both arms.
pub fn build_eraser(left: Setting, right: Setting, right_first: bool, theta: f64) -> Result<OpticalCircuit> {
    EraserConfig::new(left, right).right_first(right_first).theta(theta).build()
}

/// Label names used in path records.
pub fn path_label(index: usize) -> String {
    format!("{}", index + 1)
}

pub fn port_label(index: usize) -> String {
    format!("{}'", index + 1)
}

/// Joint detector outcome.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DetectorOutcome {
    pub left: String,
    pub right: String,
}

impl DetectorOutcome {
    pub fn new(left: &str, right: &str) -> Self {
        DetectorOutcome {
            left: left.to_string(),
            right: right.to_string(),
        }
    }

    pub fn get(&self, arm: Arm) -> &str {
        match arm {
            Arm::Left => &self.left,
            Arm::Right => &self.right,
        }
    }
}

impl fmt::Display for DetectorOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.left, self.right)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error("circuit has no exact form: {0}")]
    NotExact(String),
    #[error("configuration {labels:?} has zero probability")]
    ImpossibleConfiguration { labels: [usize; 2] },
    #[error("internal consistency violated: {0}")]
    Inconsistent(String),
    #[error("hidden coordinate {0} outside [0, 1)")]
    BadCoordinate(f64),
    #[error("empty input: {0}")]
    EmptyInput(String),
}

pub type Result<T> = std::result::Result<T, CircuitError>;

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn interference_pair_has_two_splitters() {
        let c = build_eraser(Setting::Interference, Setting::Interference, false, FRAC_PI_4).unwrap();
        assert!(c.beam_splitter(Arm::Left).is_some());
        assert!(c.beam_splitter(Arm::Right).is_some());
        assert_eq!(c.outcome_set(Arm::Left), ["L1".to_string(), "L2".to_string()]);
        assert_eq!(c.outcome_set(Arm::Right), ["R1".to_string(), "R2".to_string()]);
        let layers: Vec<u32> = c.elements().iter().map(|e| e.layer).collect();
        assert_eq!(layers, vec![1, 2, 3, 4]);
        assert_eq!(c.elements()[0].arm, Arm::Left);
    }

    #[test]
    fn whichpath_arm_skips_the_splitter() {
        let c = build_eraser(Setting::Interference, Setting::WhichPath, false, FRAC_PI_4).unwrap();
        assert!(c.beam_splitter(Arm::Right).is_none());
        assert_eq!(c.outcome_set(Arm::Left), ["L1".to_string(), "L2".to_string()]);
        assert_eq!(c.outcome_set(Arm::Right), ["R3".to_string(), "R4".to_string()]);
    }

    #[test]
    fn right_first_reorders_layers() {
        let c = build_eraser(Setting::Interference, Setting::Interference, true, FRAC_PI_4).unwrap();
        let arms: Vec<Arm> = c.elements().iter().map(|e| e.arm).collect();
        assert_eq!(arms, vec![Arm::Right, Arm::Right, Arm::Left, Arm::Left]);
    }

    #[test]
    fn invalid_circuits_rejected() {
        let det = |layer, arm| Element {
            layer,
            arm,
            kind: ElementKind::WhichPathDetector,
        };
        let g = [ArmGeometry::default(); 2];
        let s = [Setting::WhichPath; 2];
        assert!(OpticalCircuit::new(s, false, g, vec![det(2, Arm::Left), det(1, Arm::Right)]).is_err());
        assert!(OpticalCircuit::new(s, false, g, vec![det(1, Arm::Left)]).is_err());
        assert!(OpticalCircuit::new(s, false, g, vec![det(1, Arm::Left), det(2, Arm::Right)]).is_ok());
        assert!(build_eraser(Setting::Interference, Setting::Interference, false, 2.0).is_err());
        let bad_geometry = [
            ArmGeometry {
                path_order: [0, 0],
                port_order: [1, 0],
            },
            ArmGeometry::default(),
        ];
        assert!(OpticalCircuit::new(s, false, bad_geometry, vec![det(1, Arm::Left), det(2, Arm::Right)]).is_err());
    }

    #[test]
    fn zero_angle_splitter_is_diagonal() {
        let m = BeamSplitter::new(0.0).matrix();
        assert!((m[0][1]).norm() < 1e-15 && (m[1][0]).norm() < 1e-15);
        assert!((m[0][0].re - 1.0).abs() < 1e-15 && (m[1][1].re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_forms() {
        assert_eq!(BeamSplitter::new(FRAC_PI_4).exact_form(), Some((2, 1)));
        let b = BeamSplitter {
            theta: std::f64::consts::PI / 8.0,
            phase: std::f64::consts::PI,
        };
        assert_eq!(b.exact_form(), Some((1, -1)));
        assert_eq!(BeamSplitter::new(0.3).exact_form(), None);
    }

    #[test]
    fn settings_parse() {
        assert_eq!("whichpath".parse::<Setting>().unwrap(), Setting::WhichPath);
        assert!("sideways".parse::<Setting>().is_err());
    }
}

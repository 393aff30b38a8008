use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::{EraserConfig, Setting};
use crate::inference::Mode;
use crate::pilotwave::{GridSpec, PhysicsParams, Potential, SplitOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Eraser,
    DoubleSlit,
    FreePacket,
    Harmonic,
    Repeatability,
    BellChsh,
    ClaimsSuite,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Eraser,
        Scenario::DoubleSlit,
        Scenario::FreePacket,
        Scenario::Harmonic,
        Scenario::Repeatability,
        Scenario::BellChsh,
        Scenario::ClaimsSuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Eraser => "eraser",
            Scenario::DoubleSlit => "double_slit",
            Scenario::FreePacket => "free_packet",
            Scenario::Harmonic => "harmonic",
            Scenario::Repeatability => "repeatability",
            Scenario::BellChsh => "bell_chsh",
            Scenario::ClaimsSuite => "claims_suite",
        }
    }

    fn is_wave(self) -> bool {
        matches!(self, Scenario::DoubleSlit | Scenario::FreePacket | Scenario::Harmonic)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Scenario::ALL
            .into_iter()
            .find(|k| k.name() == s || k.name().replace('_', "-") == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Scenario::ALL.iter().map(|k| k.name()).collect();
                ConfigError::field("scenario", format!("unknown scenario `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Csv, Format::Json, Format::Svg];

    pub fn of_file(name: &str) -> Option<Format> {
        match name.rsplit('.').next()? {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            "svg" => Some(Format::Svg),
            _ => None,
        }
    }
}

/// Parses a comma-separated format list such as `csv,json`.
pub fn parse_formats(s: &str) -> Result<Vec<Format>, ConfigError> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let f = match part {
            "csv" => Format::Csv,
            "json" => Format::Json,
            "svg" => Format::Svg,
            _ => return Err(ConfigError::field("format", format!("unknown format `{part}` (expected csv, json, svg)"))),
        };
        if !out.contains(&f) {
            out.push(f);
        }
    }
    out.sort();
    Ok(out)
}

/// Accepts a plain number or a multiple of π such as `pi/8` or `3pi/8`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    if let Ok(v) = s.trim().parse::<f64>() {
        return Ok(v);
    }
    let t = s.trim().replace(' ', "").replace('π', "pi").replace("*pi", "pi");
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.to_string(), d.parse::<f64>().map_err(|_| format!("bad angle `{s}`"))?),
        None => (t.clone(), 1.0),
    };
    let k = match num.strip_suffix("pi") {
        Some("") => 1.0,
        Some(k) => k.parse::<f64>().map_err(|_| format!("bad angle `{s}`"))?,
        None => return Err(format!("bad angle `{s}`")),
    };
    Ok(k * std::f64::consts::PI / den)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub field: Option<String>,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn field(field: &str, message: String) -> Self {
        ConfigError {
            field: Some(field.to_string()),
            line: None,
            column: None,
            message,
        }
    }

    fn json(e: serde_json::Error) -> Self {
        ConfigError {
            field: None,
            line: Some(e.line()),
            column: Some(e.column()),
            message: e.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.field, self.line) {
            (Some(field), _) => write!(f, "config field `{field}`: {}", self.message),
            (None, Some(line)) => write!(f, "config line {line}, column {}: {}", self.column.unwrap_or(0), self.message),
            (None, None) => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Every settable field; used for the config file and for command-line
/// overrides alike.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub scenario: Option<Scenario>,
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
    pub workers: Option<usize>,
    pub left: Option<Setting>,
    pub right: Option<Setting>,
    pub right_first: Option<bool>,
    pub theta: Option<f64>,
    pub theta_left: Option<f64>,
    pub theta_right: Option<f64>,
    pub grid_min: Option<f64>,
    pub grid_max: Option<f64>,
    pub points: Option<usize>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub save_every: Option<usize>,
    pub trajectories: Option<usize>,
    pub sigma: Option<f64>,
    pub center: Option<f64>,
    pub separation: Option<f64>,
    pub omega: Option<f64>,
    pub chsh_step: Option<f64>,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr, $($f:ident),*) => {
        PartialConfig { $($f: $hi.$f.clone().or_else(|| $lo.$f.clone())),* }
    };
}

impl PartialConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(ConfigError::json)
    }

    /// Fields of `self` win over those of `lower`.
    pub fn over(&self, lower: &PartialConfig) -> PartialConfig {
        overlay!(
            self, lower, scenario, mode, seed, trials, out, formats, workers, left, right, right_first, theta,
            theta_left, theta_right, grid_min, grid_max, points, dt, steps, save_every, trajectories, sigma, center,
            separation, omega, chsh_step
        )
    }
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_CHSH_STEP: f64 = std::f64::consts::PI / 32.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EraserParams {
    pub left: Setting,
    pub right: Setting,
    pub right_first: bool,
    /// Beam-splitter angle per arm.
    pub theta: [f64; 2],
}

impl EraserParams {
    pub fn config(&self) -> EraserConfig {
        EraserConfig::new(self.left, self.right)
            .right_first(self.right_first)
            .arm_theta(crate::circuit::Arm::Left, self.theta[0])
            .arm_theta(crate::circuit::Arm::Right, self.theta[1])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    pub grid_min: f64,
    pub grid_max: f64,
    pub points: usize,
    pub dt: f64,
    pub steps: usize,
    pub save_every: usize,
    pub trajectories: usize,
    pub sigma: f64,
    pub center: f64,
    pub separation: f64,
    pub omega: f64,
}

impl WaveParams {
    pub fn defaults(scenario: Scenario) -> Self {
        match scenario {
            Scenario::DoubleSlit => WaveParams {
                grid_min: -30.0,
                grid_max: 30.0,
                points: 512,
                dt: 0.002,
                steps: 2000,
                save_every: 10,
                trajectories: 200,
                sigma: 1.0,
                center: 0.0,
                separation: 8.0,
                omega: 0.0,
            },
            Scenario::Harmonic => WaveParams {
                grid_min: -10.0,
                grid_max: 10.0,
                points: 256,
                dt: 0.001,
                steps: 6283,
                save_every: 100,
                trajectories: 1000,
                sigma: std::f64::consts::FRAC_1_SQRT_2,
                center: 2.0,
                separation: 0.0,
                omega: 1.0,
            },
            // free packet; σ doubles at t = 2√3 σ₀² for unit mass
            _ => WaveParams {
                grid_min: -20.0,
                grid_max: 20.0,
                points: 512,
                dt: 0.001,
                steps: 3464,
                save_every: 200,
                trajectories: 10_000,
                sigma: 1.0,
                center: 0.0,
                separation: 0.0,
                omega: 0.0,
            },
        }
    }

    pub fn grid(&self) -> Result<GridSpec, ConfigError> {
        GridSpec::line(self.grid_min, self.grid_max, self.points).map_err(|e| ConfigError::field("points", e.to_string()))
    }

    pub fn physics(&self, scenario: Scenario) -> PhysicsParams {
        match scenario {
            Scenario::Harmonic => PhysicsParams {
                masses: vec![1.0],
                potential: Potential::Harmonic {
                    omega: vec![self.omega],
                    center: vec![0.0],
                },
            },
            _ => PhysicsParams::free(vec![1.0]),
        }
    }
}

/// A fully resolved run description. It deliberately leaves out the output
/// directory and worker count, which must not influence results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub mode: Mode,
    pub seed: u64,
    pub trials: usize,
    pub formats: Vec<Format>,
    pub eraser: EraserParams,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wave: Option<WaveParams>,
    pub chsh_step: f64,
}

impl ScenarioConfig {
    /// Fills unset fields with defaults for the chosen scenario and checks
    /// the result.
    pub fn resolve(p: &PartialConfig) -> Result<Self, ConfigError> {
        let scenario = p
            .scenario
            .ok_or_else(|| ConfigError::field("scenario", "no scenario given".into()))?;
        let theta = p.theta.unwrap_or(std::f64::consts::FRAC_PI_4);
        let eraser = EraserParams {
            left: p.left.unwrap_or(Setting::Interference),
            right: p.right.unwrap_or(Setting::Interference),
            right_first: p.right_first.unwrap_or(false),
            theta: [p.theta_left.unwrap_or(theta), p.theta_right.unwrap_or(theta)],
        };
        let wave = scenario.is_wave().then(|| {
            let d = WaveParams::defaults(scenario);
            WaveParams {
                grid_min: p.grid_min.unwrap_or(d.grid_min),
                grid_max: p.grid_max.unwrap_or(d.grid_max),
                points: p.points.unwrap_or(d.points),
                dt: p.dt.unwrap_or(d.dt),
                steps: p.steps.unwrap_or(d.steps),
                save_every: p.save_every.unwrap_or(d.save_every),
                trajectories: p.trajectories.unwrap_or(d.trajectories),
                sigma: p.sigma.unwrap_or(d.sigma),
                center: p.center.unwrap_or(d.center),
                separation: p.separation.unwrap_or(d.separation),
                omega: p.omega.unwrap_or(d.omega),
            }
        });
        let c = ScenarioConfig {
            scenario,
            mode: p.mode.unwrap_or(Mode::Analytic),
            seed: p.seed.unwrap_or(DEFAULT_SEED),
            trials: p.trials.unwrap_or(DEFAULT_TRIALS),
            formats: {
                let mut f = p.formats.clone().unwrap_or_else(|| Format::ALL.to_vec());
                f.sort();
                f.dedup();
                f
            },
            eraser,
            wave,
            chsh_step: p.chsh_step.unwrap_or(DEFAULT_CHSH_STEP),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |f: &str, m: String| Err(ConfigError::field(f, m));
        if self.mode == Mode::MonteCarlo && self.trials == 0 {
            return bad("trials", "must be at least 1 in montecarlo mode".into());
        }
        for (name, t) in [("theta_left", self.eraser.theta[0]), ("theta_right", self.eraser.theta[1])] {
            if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&t) {
                return bad(name, format!("{t} is outside [0, π/2]"));
            }
        }
        self.eraser
            .config()
            .build()
            .map_err(|e| ConfigError::field("left", e.to_string()))?;
        if !(self.chsh_step > 0.0 && self.chsh_step <= std::f64::consts::FRAC_PI_2) {
            return bad("chsh_step", format!("{} is outside (0, π/2]", self.chsh_step));
        }
        if let Some(w) = &self.wave {
            if !(w.grid_max > w.grid_min) {
                return bad("grid_max", "must exceed grid_min".into());
            }
            for (name, v) in [("dt", w.dt), ("sigma", w.sigma)] {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(name, format!("must be positive, got {v}"));
                }
            }
            for (name, v) in [("steps", w.steps), ("save_every", w.save_every), ("trajectories", w.trajectories)] {
                if v == 0 {
                    return bad(name, "must be at least 1".into());
                }
            }
            if self.scenario == Scenario::Harmonic && !(w.omega > 0.0) {
                return bad("omega", format!("must be positive, got {}", w.omega));
            }
            let grid = w.grid()?;
            SplitOperator::new(&grid, &w.physics(self.scenario), w.dt).map_err(|e| ConfigError::field("dt", e.to_string()))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_config_beat_defaults() {
        let file = PartialConfig::from_json(r#"{"scenario":"eraser","seed":5,"trials":20,"right":"whichpath"}"#).unwrap();
        let flags = PartialConfig {
            seed: Some(9),
            ..Default::default()
        };
        let c = ScenarioConfig::resolve(&flags.over(&file)).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.trials, 20);
        assert_eq!(c.eraser.right, Setting::WhichPath);
        assert_eq!(c.eraser.left, Setting::Interference);
        assert_eq!(c.mode, Mode::Analytic);
    }

    #[test]
    fn unknown_fields_are_reported_with_position() {
        let e = PartialConfig::from_json("{\n  \"scenario\": \"eraser\",\n  \"sed\": 3\n}").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.to_string().contains("sed"), "{e}");
    }

    #[test]
    fn invalid_values_name_the_field() {
        let p = PartialConfig {
            scenario: Some(Scenario::FreePacket),
            dt: Some(1.0),
            ..Default::default()
        };
        assert_eq!(ScenarioConfig::resolve(&p).unwrap_err().field.as_deref(), Some("dt"));
        let p = PartialConfig {
            scenario: Some(Scenario::Eraser),
            mode: Some(Mode::MonteCarlo),
            trials: Some(0),
            ..Default::default()
        };
        assert_eq!(ScenarioConfig::resolve(&p).unwrap_err().field.as_deref(), Some("trials"));
        let p = PartialConfig {
            scenario: Some(Scenario::Eraser),
            theta: Some(2.0),
            ..Default::default()
        };
        assert!(ScenarioConfig::resolve(&p).is_err());
    }

    #[test]
    fn wave_defaults_follow_the_scenario() {
        let c = |s| ScenarioConfig::resolve(&PartialConfig {
            scenario: Some(s),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(c(Scenario::FreePacket).wave.unwrap().steps, 3464);
        assert_eq!(c(Scenario::DoubleSlit).wave.unwrap().trajectories, 200);
        assert!(c(Scenario::Eraser).wave.is_none());
    }

    #[test]
    fn angles_and_formats_parse() {
        let pi = std::f64::consts::PI;
        assert_eq!(parse_angle("0.5").unwrap(), 0.5);
        assert!((parse_angle("pi/8").unwrap() - pi / 8.0).abs() < 1e-15);
        assert!((parse_angle("3pi/8").unwrap() - 3.0 * pi / 8.0).abs() < 1e-15);
        assert!((parse_angle("π/4").unwrap() - pi / 4.0).abs() < 1e-15);
        assert!(parse_angle("tau").is_err());
        assert_eq!(parse_formats("json,csv,json").unwrap(), vec![Format::Csv, Format::Json]);
        assert!(parse_formats("png").is_err());
        assert_eq!("double-slit".parse::<Scenario>().unwrap(), Scenario::DoubleSlit);
    }
}

use serde::{Deserialize, Serialize};

use super::transport::{RecordEntry, TransportResult};
use super::{path_label, DetectorOutcome, OpticalCircuit, Setting};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiddenRecord {
    #[serde(rename = "label_L")]
    pub label_l: String,
    #[serde(rename = "label_R")]
    pub label_r: String,
    #[serde(rename = "x_L")]
    pub x_l: f64,
    #[serde(rename = "x_R")]
    pub x_r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingsRecord {
    pub left: Setting,
    pub right: Setting,
}

/// Exported form of one transported pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub hidden: HiddenRecord,
    pub settings: SettingsRecord,
    #[serde(rename = "record_L")]
    pub record_l: Vec<RecordEntry>,
    #[serde(rename = "record_R")]
    pub record_r: Vec<RecordEntry>,
    pub outcome: DetectorOutcome,
}

pub fn path_record(circuit: &OpticalCircuit, t: &TransportResult) -> PathRecord {
    let [left, right] = circuit.settings();
    PathRecord {
        hidden: HiddenRecord {
            label_l: path_label(t.initial.labels[0]),
            label_r: path_label(t.initial.labels[1]),
            x_l: t.initial.coords[0],
            x_r: t.initial.coords[1],
        },
        settings: SettingsRecord { left, right },
        record_l: t.config.records[0].clone(),
        record_r: t.config.records[1].clone(),
        outcome: t.outcome.clone(),
    }
}

pub fn path_records_json(records: &[PathRecord]) -> String {
    serde_json::to_string_pretty(records).expect("path records serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{bohmian_transport, build_eraser, Hidden};

    #[test]
    fn record_layout() {
        let c = build_eraser(Setting::Interference, Setting::WhichPath, true, std::f64::consts::FRAC_PI_4).unwrap();
        let t = bohmian_transport(&c, &Hidden { labels: [1, 1], coords: [0.25, 0.75] }).unwrap();
        let v: serde_json::Value = serde_json::to_value(path_record(&c, &t)).unwrap();
        assert_eq!(v["hidden"]["label_L"], "2");
        assert_eq!(v["hidden"]["x_R"], 0.75);
        assert_eq!(v["settings"]["right"], "whichpath");
        assert_eq!(v["record_R"][0], serde_json::json!([0, "2"]));
        assert_eq!(v["record_R"][1], serde_json::json!([2, "R4"]));
        assert_eq!(v["outcome"]["right"], "R4");
        let back: Vec<PathRecord> = serde_json::from_str(&path_records_json(&[path_record(&c, &t)])).unwrap();
        assert_eq!(back[0].outcome, t.outcome);
    }
}

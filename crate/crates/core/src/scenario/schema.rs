macro_rules! schemas {
    ($($name:literal),* $(,)?) => {
        /// Every shipped schema by name.
        pub const SCHEMAS: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../../docs/schemas/", $name, ".json")))),*
        ];
    };
}

schemas!(
    "chsh",
    "claims",
    "config",
    "joint",
    "manifest",
    "path_pairs",
    "path_records",
    "reports",
    "setting_dependence",
    "test_report",
    "wave_report",
);

pub fn schema(name: &str) -> Option<&'static str> {
    SCHEMAS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Name of the schema an emitted JSON file follows.
pub fn schema_for_file(file: &str) -> Option<&'static str> {
    Some(match file {
        "manifest.json" => "manifest",
        "reports.json" => "reports",
        "joint.json" => "joint",
        "path_records.json" => "path_records",
        "paired_path_records.json" => "path_pairs",
        "setting_dependence.json" => "setting_dependence",
        "wave_report.json" => "wave_report",
        "chsh.json" => "chsh",
        "claims.json" => "claims",
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schemas_are_json_objects() {
        for (name, text) in SCHEMAS {
            let v: serde_json::Value = serde_json::from_str(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(v.is_object(), "{name}");
        }
        assert!(schema("reports").is_some());
        assert_eq!(schema_for_file("claims.json"), Some("claims"));
    }
}

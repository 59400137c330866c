//! Run configuration: JSON parsing, validation and serialization.
//!
//! A config is a single JSON object. The `scenario` key selects the
//! experiment; `seed`, `out` and `format` are shared by all scenarios and the
//! remaining keys belong to the scenario. Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Waveplate angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waveplates {
    pub qwp: f64,
    pub hwp: f64,
}

/// X-measurement outcome pair at one fusion unit, e.g. `["+", "-"]`.
pub type BranchSpec = [String; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneQubitConfig {
    /// Number of photons, 4 or 6.
    pub network: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rsp: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rsp_waveplates: Option<Waveplates>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_waveplates: Option<Waveplates>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visibilities: Option<Vec<f64>>,
    /// One outcome pair per fusion unit; `+`/`+` everywhere by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branches: Option<Vec<BranchSpec>>,
    #[serde(default)]
    pub oracle_trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Capable,
    Control,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoQubitConfig {
    pub network: u8,
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_waveplates: Option<Waveplates>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visibilities: Option<Vec<f64>>,
    #[serde(default)]
    pub oracle_trials: usize,
}

fn default_restarts() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriangleConfig {
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

fn default_t_max() -> f64 {
    6.0
}

fn default_points() -> usize {
    121
}

fn default_dt() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DqdConfig {
    pub gamma_l: f64,
    pub gamma_r: f64,
    pub delta: f64,
    /// Both axes span `[0, t_max]`.
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_instances() -> usize {
    200
}

fn default_max_vars() -> usize {
    12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpSelftestConfig {
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_max_vars")]
    pub max_vars: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "kebab-case")]
pub enum Scenario {
    OneQubit(OneQubitConfig),
    TwoQubit(TwoQubitConfig),
    Triangle(TriangleConfig),
    Dqd(DqdConfig),
    LpSelftest(LpSelftestConfig),
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::OneQubit(_) => "one-qubit",
            Scenario::TwoQubit(_) => "two-qubit",
            Scenario::Triangle(_) => "triangle",
            Scenario::Dqd(_) => "dqd",
            Scenario::LpSelftest(_) => "lp-selftest",
        }
    }

    fn needs_seed(&self) -> bool {
        match self {
            Scenario::OneQubit(c) => c.oracle_trials > 0,
            Scenario::TwoQubit(c) => c.oracle_trials > 0,
            Scenario::Triangle(_) | Scenario::LpSelftest(_) => true,
            Scenario::Dqd(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub format: Option<OutputFormat>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

/// Parses and validates a JSON config document.
pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let Value::Object(mut map) = value else {
        return Err(invalid("config must be a JSON object"));
    };
    let seed = match map.remove("seed") {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            v.as_u64()
                .ok_or_else(|| invalid("seed must be a nonnegative 64-bit integer"))?,
        ),
    };
    let out = match map.remove("out") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s),
        Some(_) => return Err(invalid("out must be a string path")),
    };
    let format = match map.remove("format") {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            serde_json::from_value(v).map_err(|_| invalid("format must be \"csv\" or \"json\""))?,
        ),
    };
    if !map.contains_key("scenario") {
        return Err(invalid("missing key \"scenario\""));
    }
    let scenario: Scenario =
        serde_json::from_value(Value::Object(map)).map_err(|e| invalid(e.to_string()))?;
    let config = RunConfig {
        scenario,
        seed,
        out,
        format,
    };
    validate(&config)?;
    Ok(config)
}

/// Serializes a config to the JSON form accepted by [`parse_config`].
pub fn to_json(config: &RunConfig) -> String {
    let mut map = match serde_json::to_value(&config.scenario).expect("serializable") {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    if let Some(seed) = config.seed {
        map.insert("seed".into(), seed.into());
    }
    if let Some(out) = &config.out {
        map.insert("out".into(), out.clone().into());
    }
    if let Some(format) = config.format {
        map.insert("format".into(), serde_json::to_value(format).expect("serializable"));
    }
    serde_json::to_string_pretty(&Value::Object(map)).expect("serializable")
}

fn check_index(name: &str, v: usize) -> CliResult<()> {
    if (1..=3).contains(&v) {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} must be 1, 2 or 3")))
    }
}

fn check_network(network: u8) -> CliResult<usize> {
    match network {
        4 => Ok(2),
        6 => Ok(3),
        other => Err(invalid(format!("network = {other} must be 4 or 6"))),
    }
}

fn check_waveplates(name: &str, w: &Waveplates) -> CliResult<()> {
    for (part, v) in [("qwp", w.qwp), ("hwp", w.hwp)] {
        if !(0.0..180.0).contains(&v) {
            return Err(invalid(format!("{name}.{part} = {v} must lie in [0, 180) degrees")));
        }
    }
    Ok(())
}

fn check_setting(name: &str, index: Option<usize>, plates: Option<&Waveplates>) -> CliResult<()> {
    match (index, plates) {
        (Some(i), None) => check_index(name, i),
        (None, Some(w)) => check_waveplates(&format!("{name}_waveplates"), w),
        (None, None) => Err(invalid(format!("one of {name} or {name}_waveplates is required"))),
        (Some(_), Some(_)) => Err(invalid(format!("{name} and {name}_waveplates are mutually exclusive"))),
    }
}

fn check_visibilities(v: Option<&Vec<f64>>, pairs: usize) -> CliResult<()> {
    let Some(v) = v else { return Ok(()) };
    if v.len() != pairs {
        return Err(invalid(format!(
            "visibilities has {} entries but the network uses {pairs} pairs",
            v.len()
        )));
    }
    if let Some(bad) = v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(invalid(format!("visibilities entry {bad} must lie in [0, 1]")));
    }
    Ok(())
}

/// Checks ranges and cross-field constraints.
pub fn validate(config: &RunConfig) -> CliResult<()> {
    match &config.scenario {
        Scenario::OneQubit(c) => {
            let pairs = check_network(c.network)?;
            check_setting("rsp", c.rsp, c.rsp_waveplates.as_ref())?;
            check_setting("checkpoint", c.checkpoint, c.checkpoint_waveplates.as_ref())?;
            check_visibilities(c.visibilities.as_ref(), pairs)?;
            if let Some(b) = &c.branches {
                if b.len() != pairs - 1 {
                    return Err(invalid(format!(
                        "branches needs {} outcome pairs, got {}",
                        pairs - 1,
                        b.len()
                    )));
                }
                for s in b.iter().flatten() {
                    if s != "+" && s != "-" {
                        return Err(invalid(format!("branches entry {s:?} must be \"+\" or \"-\"")));
                    }
                }
            }
        }
        Scenario::TwoQubit(c) => {
            let pairs = check_network(c.network)?;
            check_setting("checkpoint", c.checkpoint, c.checkpoint_waveplates.as_ref())?;
            check_visibilities(c.visibilities.as_ref(), pairs)?;
        }
        Scenario::Triangle(c) => {
            if c.restarts == 0 {
                return Err(invalid("restarts must be at least 1"));
            }
        }
        Scenario::Dqd(c) => {
            for (name, v) in [("gamma_l", c.gamma_l), ("gamma_r", c.gamma_r)] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(invalid(format!("{name} = {v} must be a nonnegative rate")));
                }
            }
            if !c.delta.is_finite() {
                return Err(invalid("delta must be finite"));
            }
            if !(c.t_max.is_finite() && c.t_max > 0.0) {
                return Err(invalid(format!("t_max = {} must be positive", c.t_max)));
            }
            if c.points < 2 {
                return Err(invalid(format!("points = {} must be at least 2", c.points)));
            }
            let spacing = c.t_max / (c.points - 1) as f64;
            if !(c.dt > 0.0 && c.dt <= spacing / 10.0 + 1e-15) {
                return Err(invalid(format!(
                    "dt = {} must be positive and at most a tenth of the grid spacing {spacing}",
                    c.dt
                )));
            }
        }
        Scenario::LpSelftest(c) => {
            if c.instances == 0 {
                return Err(invalid("instances must be at least 1"));
            }
            if !(2..=12).contains(&c.max_vars) {
                return Err(invalid(format!("max_vars = {} must lie in 2..=12", c.max_vars)));
            }
        }
    }
    if config.scenario.needs_seed() && config.seed.is_none() {
        return Err(invalid(format!(
            "seed is required for the {} scenario with these settings",
            config.scenario.name()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_qubit_example() {
        let c = parse_config(
            r#"{"scenario":"one-qubit","network":4,"rsp":1,"checkpoint":1,"visibilities":[1,1],"seed":7}"#,
        )
        .unwrap();
        assert_eq!(c.seed, Some(7));
        match c.scenario {
            Scenario::OneQubit(o) => {
                assert_eq!(o.rsp, Some(1));
                assert_eq!(o.visibilities, Some(vec![1.0, 1.0]));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dqd_example() {
        let c = parse_config(r#"{"scenario":"dqd","gamma_l":4,"gamma_r":0.1,"delta":1}"#).unwrap();
        match c.scenario {
            Scenario::Dqd(d) => {
                assert_eq!((d.gamma_l, d.gamma_r, d.delta), (4.0, 0.1, 1.0));
                assert_eq!((d.points, d.t_max, d.dt), (121, 6.0, 1e-3));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn range_errors_name_the_field() {
        let err = parse_config(r#"{"scenario":"one-qubit","network":4,"rsp":9,"checkpoint":1}"#).unwrap_err();
        assert!(err.to_string().contains("rsp"), "{err}");
        let err = parse_config(r#"{"scenario":"one-qubit","network":5,"rsp":1,"checkpoint":1}"#).unwrap_err();
        assert!(err.to_string().contains("network"), "{err}");
        let err = parse_config(r#"{"scenario":"two-qubit","network":4,"variant":"capable","checkpoint":1,"visibilities":[1.2,1]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("visibilities"), "{err}");
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = parse_config(r#"{"scenario":"triangle","restarts":5,"seed":1,"colour":"red"}"#).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
        let err = parse_config(r#"{"scenario":"sudoku"}"#).unwrap_err();
        assert!(err.to_string().contains("sudoku"), "{err}");
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_config("{\n  \"scenario\": \"dqd\",\n  oops\n}") {
            Err(CliError::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn seed_requirements() {
        assert!(parse_config(r#"{"scenario":"triangle"}"#).is_err());
        assert!(parse_config(r#"{"scenario":"lp-selftest"}"#).is_err());
        assert!(parse_config(r#"{"scenario":"one-qubit","network":4,"rsp":1,"checkpoint":1,"oracle_trials":10}"#).is_err());
        assert!(parse_config(r#"{"scenario":"one-qubit","network":4,"rsp":1,"checkpoint":1}"#).is_ok());
    }

    #[test]
    fn setting_exclusivity() {
        let both = r#"{"scenario":"two-qubit","network":4,"variant":"control","checkpoint":1,"checkpoint_waveplates":{"qwp":45,"hwp":0}}"#;
        assert!(parse_config(both).is_err());
        let plates = r#"{"scenario":"two-qubit","network":6,"variant":"control","checkpoint_waveplates":{"qwp":45,"hwp":0}}"#;
        assert!(parse_config(plates).is_ok());
        let none = r#"{"scenario":"two-qubit","network":6,"variant":"control"}"#;
        assert!(parse_config(none).is_err());
    }

    #[test]
    fn round_trip_example() {
        let c = parse_config(r#"{"scenario":"lp-selftest","instances":20,"seed":3,"format":"json","out":"x.json"}"#).unwrap();
        assert_eq!(parse_config(&to_json(&c)).unwrap(), c);
    }
}

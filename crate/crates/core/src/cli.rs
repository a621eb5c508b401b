//! Command implementations behind the `mopekit` binary. Each command writes
//! JSON to the given writer so it can be driven from tests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::amr::{parse_penman_multi, AmrError};
use crate::dep::{parse_conllu, DepError};
use crate::fixtures::{caption_fixtures, synthetic_sequence};
use crate::json;
use crate::kinematics::{analyze, default_joints, Cutoff, JointDef, PoseFile};
use crate::mope::{run_mope, MopeConfig};
use crate::rewards::{score_actions, CaptionParse, RewardBreakdown, RewardWeights};

pub const CONFIG_ENV: &str = "MOPEKIT_CONFIG";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{file}: {location}: {message}")]
    Parse {
        file: PathBuf,
        location: String,
        message: String,
    },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Config(String),
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("writing output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub weights: RewardWeights,
    pub mope: MopeConfig,
    pub confidence_threshold: f64,
    pub cutoff_bin: Option<usize>,
    /// Alternative to `cutoff_bin`, converted per sequence.
    pub cutoff_hz: Option<f64>,
    pub joints_file: Option<PathBuf>,
    pub cross_sentence_edges: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            weights: RewardWeights::default(),
            mope: MopeConfig::default(),
            confidence_threshold: crate::kinematics::DEFAULT_CONFIDENCE_THRESHOLD,
            cutoff_bin: None,
            cutoff_hz: None,
            joints_file: None,
            cross_sentence_edges: true,
        }
    }
}

/// Values given on the command line; they win over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub weights: Option<RewardWeights>,
    pub threshold: Option<f64>,
    pub cutoff_bin: Option<usize>,
    pub joints: Option<PathBuf>,
    pub no_cross_sentence: bool,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = read(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Defaults, then the config file if any, then the overrides.
    pub fn resolve(config_file: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match config_file {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(w) = overrides.weights {
            cfg.weights = w;
        }
        if let Some(t) = overrides.threshold {
            cfg.confidence_threshold = t;
        }
        if let Some(b) = overrides.cutoff_bin {
            cfg.cutoff_bin = Some(b);
            cfg.cutoff_hz = None;
        }
        if let Some(j) = &overrides.joints {
            cfg.joints_file = Some(j.clone());
        }
        if overrides.no_cross_sentence {
            cfg.cross_sentence_edges = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.weights.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.mope.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(CliError::Config(format!(
                "confidence threshold must lie in [0, 1], got {}",
                self.confidence_threshold
            )));
        }
        if self.cutoff_hz.is_some_and(|f| !(f.is_finite() && f >= 0.0)) {
            return Err(CliError::Config("cutoff_hz must be a non-negative number".into()));
        }
        Ok(())
    }

    /// The MoPE configuration with run-level switches applied.
    pub fn mope_config(&self) -> MopeConfig {
        let mut m = self.mope.clone();
        m.cross_sentence_edges = self.cross_sentence_edges && m.cross_sentence_edges;
        m
    }

    pub fn cutoff(&self) -> Cutoff {
        match (self.cutoff_bin, self.cutoff_hz) {
            (Some(b), _) => Cutoff::Bin(b),
            (None, Some(f)) => Cutoff::Hz(f),
            (None, None) => Cutoff::Quarter,
        }
    }

    pub fn joints(&self) -> Result<Vec<JointDef>, CliError> {
        let Some(path) = &self.joints_file else {
            return Ok(default_joints());
        };
        let joints: Vec<JointDef> = serde_json::from_str(&read(path)?).map_err(|e| CliError::Format {
            path: path.clone(),
            message: e.to_string(),
        })?;
        for j in &joints {
            j.validate().map_err(|e| CliError::Format {
                path: path.clone(),
                message: e.to_string(),
            })?;
        }
        Ok(joints)
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// 1-based `line:column` of a char offset.
fn line_col(text: &str, offset: usize) -> String {
    let mut line = 1;
    let mut col = 1;
    for c in text.chars().take(offset) {
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    format!("{line}:{col}")
}

fn amr_diagnostic(file: &Path, text: &str, err: AmrError) -> CliError {
    let location = match &err {
        AmrError::Syntax { offset, .. } => line_col(text, *offset),
        _ => "graph".to_string(),
    };
    CliError::Parse {
        file: file.to_path_buf(),
        location,
        message: err.to_string(),
    }
}

fn dep_diagnostic(file: &Path, err: DepError) -> CliError {
    let location = match &err {
        DepError::Format { line, .. } | DepError::Tree { line, .. } => format!("line {line}"),
        DepError::Index(_) => "sentence".to_string(),
    };
    CliError::Parse {
        file: file.to_path_buf(),
        location,
        message: err.to_string(),
    }
}

fn map_json(e: serde_json::Error) -> CliError {
    CliError::Output(e.into())
}

/// Extracts actions from a PENMAN file and a CoNLL-U file.
pub fn cmd_parse(penman_file: &Path, conllu_file: &Path, config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let penman = read(penman_file)?;
    let conllu = read(conllu_file)?;
    let graphs = parse_penman_multi(&penman).map_err(|e| amr_diagnostic(penman_file, &penman, e))?;
    let sentences = parse_conllu(&conllu).map_err(|e| dep_diagnostic(conllu_file, e))?;
    let actions = run_mope(&graphs, &sentences, &config.mope_config());
    writeln!(out, "{}", json::to_pretty(&actions).map_err(map_json)?)?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct ScoreRecord {
    #[serde(default)]
    id: Value,
    gen: CaptionParse,
    #[serde(rename = "ref")]
    reference: CaptionParse,
}

fn score_record(line: &str, config: &RunConfig, mope: &MopeConfig) -> (Value, Result<RewardBreakdown, String>) {
    let record: ScoreRecord = match serde_json::from_str(line) {
        Ok(r) => r,
        Err(e) => {
            // Keep whatever id is recoverable so the error line can be traced.
            let id = serde_json::from_str::<Value>(line)
                .ok()
                .and_then(|v| v.get("id").cloned())
                .unwrap_or(Value::Null);
            return (id, Err(format!("invalid record: {e}")));
        }
    };
    let result = (|| {
        let g = record.gen.actions(mope).map_err(|e| format!("gen: {e}"))?;
        let r = record.reference.actions(mope).map_err(|e| format!("ref: {e}"))?;
        Ok(score_actions(&g, &r, &config.weights))
    })();
    (record.id, result)
}

const BREAKDOWN_FIELDS: [&str; 8] = [
    "r_action",
    "r_order",
    "r_direction",
    "composite",
    "hall_added",
    "hall_order",
    "hall_direction",
    "mo_hall",
];

/// Scores each JSON-lines record `{id, gen, ref}` and appends one aggregate
/// line with per-field means over the records that scored.
pub fn cmd_score(pairs_file: &Path, config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let text = read(pairs_file)?;
    let mope = config.mope_config();
    let mut sums = [0.0f64; BREAKDOWN_FIELDS.len()];
    let mut scored = 0usize;
    let mut failed = 0usize;
    for line in text.lines() {
        let (id, result) = if line.trim().is_empty() {
            (Value::Null, Err("empty line".to_string()))
        } else {
            score_record(line, config, &mope)
        };
        let mut rec = Map::new();
        rec.insert("id".into(), id);
        match result {
            Ok(b) => {
                let v = serde_json::to_value(&b).map_err(map_json)?;
                for (i, f) in BREAKDOWN_FIELDS.iter().enumerate() {
                    sums[i] += v[f].as_f64().unwrap_or(0.0);
                }
                if let Value::Object(m) = v {
                    rec.extend(m);
                }
                scored += 1;
            }
            Err(e) => {
                rec.insert("error".into(), Value::String(e));
                failed += 1;
            }
        }
        writeln!(out, "{}", json::to_line(&rec).map_err(map_json)?)?;
    }
    let means: Map<String, Value> = BREAKDOWN_FIELDS
        .iter()
        .zip(sums)
        .map(|(f, s)| {
            let v = if scored > 0 { json!(s / scored as f64) } else { Value::Null };
            (f.to_string(), v)
        })
        .collect();
    let aggregate = json!({
        "aggregate": true,
        "scored": scored,
        "errors": failed,
        "mean": means,
    });
    writeln!(out, "{}", json::to_line(&aggregate).map_err(map_json)?)?;
    Ok(())
}

/// Per-person kinematic analysis of a pose file.
pub fn cmd_kinematics(pose_file: &Path, config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let format_err = |message: String| CliError::Format {
        path: pose_file.to_path_buf(),
        message,
    };
    let pose: PoseFile = serde_json::from_str(&read(pose_file)?).map_err(|e| format_err(e.to_string()))?;
    let joints = config.joints()?;
    let mut persons = Vec::new();
    for seq in pose.sequences().map_err(|e| format_err(e.to_string()))? {
        let a = analyze(&seq, &joints, config.confidence_threshold, config.cutoff())
            .map_err(|e| format_err(format!("person {}: {e}", seq.person_id)))?;
        persons.push(a);
    }
    writeln!(out, "{}", json::to_pretty(&json!({ "persons": persons })).map_err(map_json)?)?;
    Ok(())
}

struct Tally<'w> {
    out: &'w mut dyn Write,
    passed: usize,
    failed: usize,
}

impl Tally<'_> {
    fn check(&mut self, name: &str, outcome: Result<(), String>) -> std::io::Result<()> {
        match outcome {
            Ok(()) => {
                self.passed += 1;
                writeln!(self.out, "PASS {name}")
            }
            Err(why) => {
                self.failed += 1;
                writeln!(self.out, "FAIL {name}: {why}")
            }
        }
    }
}

/// Runs the embedded fixture corpus. Returns whether everything passed.
pub fn cmd_selftest(out: &mut dyn Write) -> Result<bool, CliError> {
    let config = MopeConfig::default();
    let weights = RewardWeights::default();
    let mut tally = Tally {
        out,
        passed: 0,
        failed: 0,
    };
    for f in caption_fixtures() {
        let actions = f.run(&config);
        let outcome = match &actions {
            Err(e) => Err(e.to_string()),
            Ok(a) if *a != f.gold_actions => Err("actions differ from gold".into()),
            Ok(_) => Ok(()),
        };
        tally.check(&format!("caption/{}", f.name), outcome)?;
        if let Ok(a) = actions {
            let got = score_actions(&a, &a, &weights);
            let outcome = if got == f.gold_rewards_vs_self {
                Ok(())
            } else {
                Err(format!("self score {got:?}"))
            };
            tally.check(&format!("self-score/{}", f.name), outcome)?;
        }
    }

    // Unit displacement per frame along a 3-4-5 triangle at 1 fps.
    let seq = synthetic_sequence(1.0, 3, 1.0, |t, _| [3.0 * t as f64, 4.0 * t as f64, 0.0]);
    let outcome = analyze(&seq, &default_joints(), 0.6, Cutoff::Quarter)
        .map_err(|e| e.to_string())
        .and_then(|a| match a.frames[1].v_cm {
            Some(v) if (v - 5.0).abs() < 1e-12 => Ok(()),
            other => Err(format!("v_cm {other:?}")),
        });
    tally.check("kinematics/three-four-five", outcome)?;

    let seq = synthetic_sequence(30.0, 4, 0.3, |_, k| [k as f64, 0.0, 0.0]);
    let outcome = analyze(&seq, &default_joints(), 0.6, Cutoff::Quarter)
        .map_err(|e| e.to_string())
        .and_then(|a| if a.fallback { Ok(()) } else { Err("not flagged".into()) });
    tally.check("kinematics/low-confidence-fallback", outcome)?;

    let (passed, failed) = (tally.passed, tally.failed);
    writeln!(tally.out, "selftest: {passed} passed, {failed} failed")?;
    Ok(failed == 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_columns() {
        assert_eq!(line_col("ab\ncd", 0), "1:1");
        assert_eq!(line_col("ab\ncd", 4), "2:2");
    }

    #[test]
    fn overrides_win() {
        let o = Overrides {
            weights: Some(RewardWeights::new(1.0, 0.0, 0.0).unwrap()),
            threshold: Some(0.5),
            cutoff_bin: Some(3),
            joints: None,
            no_cross_sentence: true,
        };
        let cfg = RunConfig::resolve(None, &o).unwrap();
        assert_eq!(cfg.weights.w_a, 1.0);
        assert_eq!(cfg.confidence_threshold, 0.5);
        assert_eq!(cfg.cutoff(), Cutoff::Bin(3));
        assert!(!cfg.mope_config().cross_sentence_edges);
    }

    #[test]
    fn bad_threshold_rejected() {
        let o = Overrides {
            threshold: Some(1.5),
            ..Overrides::default()
        };
        assert!(matches!(RunConfig::resolve(None, &o), Err(CliError::Config(_))));
    }

    #[test]
    fn selftest_passes() {
        let mut buf = Vec::new();
        let ok = cmd_selftest(&mut buf).unwrap();
        assert!(ok, "{}", String::from_utf8_lossy(&buf));
    }
}

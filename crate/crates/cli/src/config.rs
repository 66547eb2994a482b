//! INI-style run configuration.
//!
//! Sections `[case]`, `[fluid]`, `[time]`, `[pod]`, `[rom]`; `key = value`
//! lines; `#` starts a comment. Unknown sections or keys are errors that
//! name the offender and its line. Missing optional keys fall back to the
//! selected case's defaults.

use std::path::PathBuf;

use hfvrom::cases::{CaseKind, PipelineConfig};
use hfvrom::{Error, Result};

#[derive(Debug)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub out_dir: PathBuf,
}

fn config_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

fn parse_f64(value: &str, key: &str, line: usize) -> Result<f64> {
    value
        .parse()
        .map_err(|_| config_err(line, format!("{key}: expected a number, got `{value}`")))
}

fn parse_usize(value: &str, key: &str, line: usize) -> Result<usize> {
    value
        .parse()
        .map_err(|_| config_err(line, format!("{key}: expected a nonnegative integer, got `{value}`")))
}

fn parse_bool(value: &str, key: &str, line: usize) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(config_err(line, format!("{key}: expected true or false, got `{value}`"))),
    }
}

fn parse_kappa(value: &str, key: &str, line: usize) -> Result<f64> {
    let v = parse_f64(value, key, line)?;
    if !(v > 0.0 && v <= 1.0) {
        return Err(config_err(line, format!("{key} = {v} outside (0, 1]")));
    }
    Ok(v)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    // first pass: strip comments, record (line, section, key, value)
    let mut entries: Vec<(usize, String, String, String)> = Vec::new();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| config_err(line, format!("unterminated section `{content}`")))?
                .trim();
            if !matches!(name, "case" | "fluid" | "time" | "pod" | "rom") {
                return Err(config_err(line, format!("unknown section `[{name}]`")));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| config_err(line, format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(config_err(line, "empty key"));
        }
        if section.is_empty() {
            return Err(config_err(line, format!("key `{key}` appears before any section")));
        }
        entries.push((line, section.clone(), key.to_string(), value.trim().to_string()));
    }

    // case and mesh size select the defaults everything else overrides
    let mut case: Option<(usize, CaseKind)> = None;
    let mut n: Option<usize> = None;
    for (line, section, key, value) in &entries {
        if section == "case" && key == "case" {
            let kind = match value.as_str() {
                "manufactured" => CaseKind::Manufactured,
                "cavity" => CaseKind::Cavity,
                other => {
                    return Err(config_err(
                        *line,
                        format!("case: expected manufactured or cavity, got `{other}`"),
                    ))
                }
            };
            case = Some((*line, kind));
        }
        if section == "case" && key == "n" {
            let v = parse_usize(value, "n", *line)?;
            if v == 0 {
                return Err(config_err(*line, "n must be positive"));
            }
            n = Some(v);
        }
    }
    let (_, kind) = case.ok_or_else(|| config_err(0, "missing required key `case` in [case]"))?;
    let n = n.ok_or_else(|| config_err(0, "missing required key `n` in [case]"))?;

    let mut pipeline = match kind {
        CaseKind::Manufactured => PipelineConfig::manufactured(n),
        CaseKind::Cavity => PipelineConfig::cavity(n),
    };
    let mut out_dir = PathBuf::from(".");

    for (line, section, key, value) in &entries {
        let line = *line;
        match (section.as_str(), key.as_str()) {
            ("case", "case") | ("case", "n") => {}
            ("case", "out_dir") => out_dir = PathBuf::from(value),
            ("case", "dump_every") => pipeline.dump_every = parse_usize(value, key, line)?,
            ("fluid", "rho") => {
                pipeline.params.rho = parse_f64(value, key, line)?;
                if !(pipeline.params.rho > 0.0) {
                    return Err(config_err(line, format!("rho = {value} must be positive")));
                }
            }
            ("fluid", "mu") => {
                pipeline.params.mu = parse_f64(value, key, line)?;
                if !(pipeline.params.mu >= 0.0) {
                    return Err(config_err(line, format!("mu = {value} must be nonnegative")));
                }
            }
            ("fluid", "diffusivity") => {
                pipeline.params.diffusivity = parse_f64(value, key, line)?;
                if !(pipeline.params.diffusivity >= 0.0) {
                    return Err(config_err(
                        line,
                        format!("diffusivity = {value} must be nonnegative"),
                    ));
                }
            }
            ("time", "cfl") => {
                pipeline.controls.cfl = parse_f64(value, key, line)?;
                if !(pipeline.controls.cfl > 0.0) {
                    return Err(config_err(line, format!("cfl = {value} must be positive")));
                }
            }
            ("time", "t_end") => {
                pipeline.controls.t_end = parse_f64(value, key, line)?;
                if !(pipeline.controls.t_end >= 0.0) {
                    return Err(config_err(line, format!("t_end = {value} must be nonnegative")));
                }
            }
            ("time", "snapshot_interval") => {
                pipeline.controls.snapshot_interval = parse_f64(value, key, line)?;
                if !(pipeline.controls.snapshot_interval > 0.0) {
                    return Err(config_err(
                        line,
                        format!("snapshot_interval = {value} must be positive"),
                    ));
                }
            }
            ("pod", "kappa_wu") => pipeline.kappa_momentum = parse_kappa(value, key, line)?,
            ("pod", "kappa_pi") => pipeline.kappa_pressure = parse_kappa(value, key, line)?,
            ("pod", "kappa_wy") => pipeline.kappa_species = parse_kappa(value, key, line)?,
            ("rom", "substeps") => {
                pipeline.rom_substeps = parse_usize(value, key, line)?;
                if pipeline.rom_substeps == 0 {
                    return Err(config_err(line, "substeps must be positive"));
                }
            }
            ("rom", "ablate_pressure") => {
                pipeline.ablate_pressure = parse_bool(value, key, line)?
            }
            (section, key) => {
                return Err(config_err(line, format!("unknown key `{key}` in [{section}]")));
            }
        }
    }

    pipeline.validate()?;
    Ok(RunConfig { pipeline, out_dir })
}

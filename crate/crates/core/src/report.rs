//! JSON reports with a replay manifest, and their Markdown rendering.
//!
//! Reports carry no timestamps or host details, so the same invocation on the
//! same inputs produces the same bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const REPORT_FORMAT_VERSION: u32 = 1;
pub const SUMMARY_STEM: &str = "summary";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun the command that produced a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub command: String,
    /// Arguments after the program name.
    pub invocation: Vec<String>,
    pub seeds: BTreeMap<String, u64>,
    pub config: Value,
    pub inputs: Vec<InputDigest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub manifest: Manifest,
    pub results: Value,
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut file = fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Digests of `paths`, recorded as given so reports do not depend on the
/// working directory.
pub fn digest_inputs<P: AsRef<Path>>(paths: &[P]) -> io::Result<Vec<InputDigest>> {
    paths
        .iter()
        .map(|p| {
            let p = p.as_ref();
            Ok(InputDigest {
                path: p.display().to_string(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

impl Report {
    pub fn new(manifest: Manifest, results: Value) -> Self {
        Self {
            format_version: REPORT_FORMAT_VERSION,
            manifest,
            results,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values are plain JSON");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_markdown(&self) -> String {
        let m = &self.manifest;
        let mut out = String::new();
        let _ = writeln!(out, "# {}\n", m.command);
        let _ = writeln!(out, "## Manifest\n");
        let _ = writeln!(out, "- tool version: {}", m.tool_version);
        let _ = writeln!(out, "- invocation: `{}`", m.invocation.join(" "));
        if !m.seeds.is_empty() {
            let seeds: Vec<String> = m.seeds.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(out, "- seeds: {}", seeds.join(", "));
        }
        if !m.inputs.is_empty() {
            let _ = writeln!(out, "\n| input | sha256 |\n|---|---|");
            for i in &m.inputs {
                let _ = writeln!(out, "| {} | `{}` |", i.path, i.sha256);
            }
        }
        let _ = writeln!(out, "\n## Results\n\n| metric | value |\n|---|---|");
        let mut rows = Vec::new();
        flatten("", &self.results, &mut rows);
        for (k, v) in rows {
            let _ = writeln!(out, "| {k} | {v} |");
        }
        out
    }

    /// Writes `<stem>.json` and `<stem>.md` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{stem}.json")), self.to_json())?;
        fs::write(dir.join(format!("{stem}.md")), self.to_markdown())
    }
}

/// Scalars become rows keyed by their dotted path; arrays are summarized by
/// length so per-example detail stays in the JSON.
fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                flatten(&key(k), child, rows);
            }
        }
        Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) && items.len() <= 16 => {
            let parts: Vec<String> = items.iter().map(render_scalar).collect();
            rows.push((prefix.to_string(), format!("[{}]", parts.join(", "))));
        }
        Value::Array(items) => rows.push((prefix.to_string(), format!("{} entries", items.len()))),
        other => rows.push((prefix.to_string(), render_scalar(other))),
    }
}

fn render_scalar(v: &Value) -> String {
    match v {
        Value::Null => "n/a".to_string(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format!("{x:.4}"),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Collects every report in `dir` (except a previous summary) into one,
/// keyed by file stem in name order.
pub fn consolidate(dir: &Path, tool_version: &str) -> io::Result<Report> {
    let mut stems = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                if stem != SUMMARY_STEM {
                    stems.push(stem.to_string());
                }
            }
        }
    }
    stems.sort();
    let mut reports = serde_json::Map::new();
    let mut inputs = Vec::new();
    for stem in &stems {
        let path = dir.join(format!("{stem}.json"));
        let text = fs::read_to_string(&path)?;
        match Report::from_json(&text) {
            Ok(r) => {
                reports.insert(stem.clone(), serde_json::to_value(&r).expect("serializable"));
                inputs.push(InputDigest {
                    path: format!("{stem}.json"),
                    sha256: hex::encode(Sha256::digest(text.as_bytes())),
                });
            }
            Err(e) => log::warn!("skipping {}: not a report ({e})", path.display()),
        }
    }
    Ok(Report::new(
        Manifest {
            tool_version: tool_version.to_string(),
            command: "report".into(),
            invocation: Vec::new(),
            seeds: BTreeMap::new(),
            config: Value::Null,
            inputs,
        },
        Value::Object(reports),
    ))
}

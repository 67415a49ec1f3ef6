//! Output directories, reports and their manifests.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use copyguard::report::{digest_inputs, Manifest, Report};
use serde::Serialize;

use crate::args::OutArgs;
use crate::failure::{Context, Failure};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Drops `--out` and its value so the recorded invocation does not pin the
/// output location.
pub fn strip_out(args: &[String]) -> Vec<String> {
    let mut kept = Vec::with_capacity(args.len());
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--out" {
            it.next();
        } else if !a.starts_with("--out=") {
            kept.push(a.clone());
        }
    }
    kept
}

pub struct Output<'a> {
    pub dir: &'a Path,
    pub stem: String,
    pub command: &'static str,
    pub invocation: &'a [String],
}

impl<'a> Output<'a> {
    pub fn new(out: &'a OutArgs, default_stem: &str, command: &'static str, invocation: &'a [String]) -> Self {
        Self {
            dir: &out.out,
            stem: out.name.clone().unwrap_or_else(|| default_stem.to_string()),
            command,
            invocation,
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn create(&self, name: &str) -> Result<BufWriter<File>, Failure> {
        fs::create_dir_all(self.dir).ctx(format!("creating {}", self.dir.display()))?;
        let path = self.path(name);
        let file = File::create(&path).ctx(format!("creating {}", path.display()))?;
        Ok(BufWriter::new(file))
    }

    pub fn write_with(&self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), Failure> {
        let mut w = self.create(name)?;
        f(&mut w).and_then(|_| w.flush()).ctx(format!("writing {}", self.path(name).display()))
    }

    pub fn report(
        &self,
        config: &impl Serialize,
        seeds: &[(&str, u64)],
        inputs: &[&Path],
        results: &impl Serialize,
    ) -> Result<PathBuf, Failure> {
        let manifest = Manifest {
            tool_version: TOOL_VERSION.to_string(),
            command: self.command.to_string(),
            invocation: self.invocation.to_vec(),
            seeds: seeds.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>(),
            config: serde_json::to_value(config)?,
            inputs: digest_inputs(inputs).ctx("hashing inputs")?,
        };
        let report = Report::new(manifest, serde_json::to_value(results)?);
        report
            .write(self.dir, &self.stem)
            .ctx(format!("writing report into {}", self.dir.display()))?;
        let path = self.path(&format!("{}.json", self.stem));
        println!("wrote {}", path.display());
        Ok(path)
    }
}

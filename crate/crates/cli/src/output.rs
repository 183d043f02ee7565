use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dro_core::conic::round_sig;
use serde::Serialize;

use crate::options::{Command, Options};
use crate::Failure;

/// Write `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| Failure::io(format!("cannot create a file in {}: {e}", dir.display())))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.flush())
        .map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))?;
    tmp.persist(&path)
        .map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// Floats rounded to 6 significant digits.
pub fn rounded_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    fn walk(v: &mut serde_json::Value) {
        match v {
            serde_json::Value::Number(n) if n.is_f64() => {
                if let Some(r) = n
                    .as_f64()
                    .and_then(|f| serde_json::Number::from_f64(round_sig(f, 6)))
                {
                    *n = r;
                }
            }
            serde_json::Value::Array(a) => a.iter_mut().for_each(walk),
            serde_json::Value::Object(o) => o.values_mut().for_each(walk),
            _ => {}
        }
    }
    let mut v = serde_json::to_value(value).map_err(Failure::config)?;
    walk(&mut v);
    let mut text = serde_json::to_string_pretty(&v).map_err(Failure::config)?;
    text.push('\n');
    Ok(text)
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'static str,
    config: &'a Options,
    seed: Option<u64>,
    artifacts: Vec<String>,
    version: &'static str,
    wall_time: f64,
}

/// Collects artifacts of one command and writes the manifest last.
pub struct Outputs {
    dir: PathBuf,
    artifacts: Vec<String>,
    start: Instant,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
            start: Instant::now(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        write_atomic(&self.dir, name, bytes)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let text = rounded_json(value)?;
        self.write(name, text.as_bytes())
    }

    pub fn finish(self, command: Command, config: &Options) -> Result<(), Failure> {
        let manifest = Manifest {
            command: command.name(),
            config,
            seed: config.seed,
            artifacts: self.artifacts,
            version: env!("CARGO_PKG_VERSION"),
            wall_time: self.start.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(Failure::config)?;
        write_atomic(&self.dir, "manifest.json", text.as_bytes())?;
        Ok(())
    }
}

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

/// Seventeen significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Output directory plus the digest of everything written to it.
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<(String, String)>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn csv<I>(&mut self, name: &str, header: &str, rows: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut body = String::with_capacity(1 << 16);
        body.push_str(header);
        body.push('\n');
        for row in rows {
            body.push_str(&row.join(","));
            body.push('\n');
        }
        self.file(name, &body)
    }

    pub fn file(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        let digest = Sha256::digest(body.as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            write!(hex, "{b:02x}").unwrap();
        }
        self.written.push((name.to_string(), hex));
        Ok(())
    }

    /// Write `manifest.txt`; nothing time- or host-dependent goes in.
    pub fn finish(mut self, command: &str, scenario: Option<&Path>, params: &[(&str, String)]) -> Result<()> {
        let mut m = String::new();
        writeln!(m, "tool_version = {}", env!("CARGO_PKG_VERSION")).unwrap();
        writeln!(m, "command = {command}").unwrap();
        if let Some(p) = scenario {
            writeln!(m, "scenario_path = {}", p.display()).unwrap();
        }
        for (k, v) in params {
            writeln!(m, "param.{k} = {v}").unwrap();
        }
        for (name, hex) in &self.written {
            writeln!(m, "output = {name} sha256:{hex}").unwrap();
        }
        let path = self.dir.join("manifest.txt");
        fs::write(&path, m).with_context(|| format!("writing {}", path.display()))?;
        self.written.clear();
        Ok(())
    }
}

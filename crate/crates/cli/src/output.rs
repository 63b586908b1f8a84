//! Buffered output files and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use hotwall_core::ExtendedReal;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// 17 significant digits, `inf`/`-inf`/`nan` spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn ext(x: &ExtendedReal) -> String {
    num(x.to_f64())
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config_sha256: Option<String>,
    pub files: BTreeMap<String, String>,
}

/// Files accumulated during a run and written in one pass at the end.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        self.files.push((name.into(), w.into_inner()?));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.files.push((name.into(), bytes));
        Ok(())
    }

    pub fn raw(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn write(self, dir: &Path, command: &str, seed: u64, config: Option<&str>) -> anyhow::Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let mut files = BTreeMap::new();
        for (name, bytes) in &self.files {
            fs::write(dir.join(name), bytes)?;
            files.insert(name.clone(), sha256_hex(bytes));
        }
        if let Some(src) = config {
            fs::write(dir.join("config.toml"), src)?;
        }
        let manifest = Manifest {
            tool: "hotwall",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            seed,
            config_sha256: config.map(|c| sha256_hex(c.as_bytes())),
            files,
        };
        let path = dir.join("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(&path, bytes)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.5e-300, -7.0, 6.02214076e23] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17);
        }
        assert_eq!(num(f64::INFINITY), "inf");
    }
}

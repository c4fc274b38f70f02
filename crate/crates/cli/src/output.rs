//! Deterministic file emission: CSV with 17-significant-digit floats,
//! pretty JSON, the run manifest, and optional gnuplot script text.
//!
//! Identical configs must produce byte-identical outputs, so everything
//! here uses fixed iteration orders, fixed float formatting, and `\n`
//! line endings; no timestamps are recorded.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

/// 17 significant digits, enough for a bit-faithful f64 round-trip.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Tracks files written below one output directory.
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutputSet {
    pub fn create(dir: &Path) -> Result<OutputSet> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn register(&mut self, name: &str) {
        self.files.push(name.to_string());
    }

    /// Write a CSV file with the given header and rows.
    pub fn write_csv<R>(&mut self, name: &str, header: &[&str], rows: R) -> Result<()>
    where
        R: IntoIterator<Item = Vec<String>>,
    {
        let path = self.dir.join(name);
        let file = fs::File::create(&path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        let mut w = std::io::BufWriter::new(file);
        writeln!(w, "{}", header.join(",")).context("write header")?;
        for row in rows {
            writeln!(w, "{}", row.join(",")).context("write row")?;
        }
        w.flush().context("flush CSV")?;
        self.register(name);
        Ok(())
    }

    /// Write pretty-printed JSON with a trailing newline.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value).context("serialize JSON")?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        self.register(name);
        Ok(())
    }

    /// Write plain text (gnuplot scripts, sequence dumps).
    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        self.register(name);
        Ok(())
    }
}

#[derive(Serialize)]
struct Manifest {
    version: &'static str,
    command: String,
    config: BTreeMap<String, String>,
    config_sha256: String,
    outputs: Vec<String>,
}

/// Record what a run was and what it produced. The hash covers the
/// canonical resolved config text, so re-runs are identifiable.
pub fn write_manifest(out: &mut OutputSet, cfg: &ExperimentConfig) -> Result<()> {
    let canonical = cfg.canonical_text();
    let digest = Sha256::digest(canonical.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    let mut outputs = out.files().to_vec();
    outputs.sort();
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        command: cfg.experiment.name().to_string(),
        config: cfg.as_pairs(),
        config_sha256: hex,
        outputs,
    };
    out.write_json("manifest.json", &manifest)
}

/// A small gnuplot script that plots the main CSVs of a run.
pub fn gnuplot_script(command: &str, files: &[String]) -> String {
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\n");
    match command {
        "spread" => {
            if files.iter().any(|f| f == "sweep_sigma.csv") {
                s.push_str("set xlabel 'theta2'\nset ylabel 'sigma'\n");
                s.push_str(
                    "plot 'sweep_sigma.csv' using 1:2 with lines, '' using 1:3 with lines, \\\n     '' using 1:4 with lines, '' using 1:5 with lines\n",
                );
            } else {
                s.push_str("set xlabel 't'\nset ylabel 'sigma'\nplot 'spread.csv' using 1:3 with lines\n");
                s.push_str("pause -1\nset xlabel 'x'\nset ylabel 'p'\nplot 'distribution.csv' using 2:3 with lines\n");
            }
        }
        "spectrum" => {
            s.push_str("set xlabel 'n'\nset ylabel 'epsilon'\n");
            if files.iter().any(|f| f == "spectrum.csv") {
                s.push_str("plot 'spectrum.csv' using 1:4 with points pt 7 ps 0.2\n");
                s.push_str("pause -1\nset xlabel 'epsilon'\nset ylabel 'weight'\nplot 'dos.csv' using 1:2 with boxes\n");
            } else {
                s.push_str("plot 'asymptotic_spectrum.csv' using 1:4 with points pt 7 ps 0.2\n");
                s.push_str("pause -1\nset xlabel 'epsilon'\nset ylabel 'weight'\nplot 'asymptotic_dos.csv' using 1:2 with boxes\n");
            }
        }
        "survival" => {
            s.push_str("set logscale y\nset xlabel 't'\nset ylabel '|nu|^2'\nplot 'echo.csv' using 1:4 with lines\n");
            s.push_str("pause -1\nset xlabel 'T'\nset ylabel '<|nu|^2>_T'\nplot 'cesaro.csv' using 1:2 with lines\n");
            s.push_str("pause -1\nunset logscale\nset xlabel 'u'\nset ylabel '|nu~|'\nplot 'echo_spectrum.csv' using 1:2 with impulses\n");
        }
        "diffraction" => {
            s.push_str("set xlabel 'q'\nset ylabel '|f|^2'\n");
            let plots: Vec<String> = files
                .iter()
                .filter(|f| f.starts_with("diffraction_") && f.ends_with(".csv") && *f != "diffraction_peaks.csv")
                .map(|f| format!("'{f}' using 1:4 with lines"))
                .collect();
            if !plots.is_empty() {
                s.push_str(&format!("plot {}\n", plots.join(", ")));
            }
        }
        _ => {}
    }
    s
}

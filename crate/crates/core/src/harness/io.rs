//! Run artifacts: CSV files, plot script, and a manifest with content
//! hashes of every output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

/// Collects output files for one run; when constructed without a directory
/// it swallows writes (suites can always stream their tables through it).
pub struct OutputWriter {
    dir: Option<PathBuf>,
    files: Vec<(String, String)>,
}

impl OutputWriter {
    pub fn new(dir: Option<&Path>) -> std::io::Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self {
            dir: dir.map(Path::to_path_buf),
            files: Vec::new(),
        })
    }

    pub fn disabled() -> Self {
        Self {
            dir: None,
            files: Vec::new(),
        }
    }

    pub fn enabled(&self) -> bool {
        self.dir.is_some()
    }

    fn write_named(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let path = dir.join(name);
        fs::write(&path, bytes)?;
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        self.files
            .push((name.to_string(), format!("{:x}", hasher.finalize())));
        Ok(())
    }

    pub fn write_csv(&mut self, stem: &str, header: &str, rows: &[String]) -> std::io::Result<()> {
        let mut buf = String::with_capacity(header.len() + rows.len() * 32);
        buf.push_str(header);
        buf.push('\n');
        for r in rows {
            buf.push_str(r);
            buf.push('\n');
        }
        self.write_named(&format!("{stem}.csv"), buf.as_bytes())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> std::io::Result<()> {
        self.write_named(name, text.as_bytes())
    }

    /// Plotting is data plus a generated script; no plotting dependency here.
    pub fn write_plot_script(&mut self) -> std::io::Result<()> {
        if self.dir.is_none() {
            return Ok(());
        }
        let csvs: Vec<String> = self
            .files
            .iter()
            .filter(|(n, _)| n.ends_with(".csv"))
            .map(|(n, _)| n.clone())
            .collect();
        let mut script = String::from(
            "#!/usr/bin/env python3\n\
             # Plots every CSV produced by this run; first column is the x axis.\n\
             import csv, sys\n\
             import matplotlib\n\
             matplotlib.use(\"Agg\")\n\
             import matplotlib.pyplot as plt\n\n\
             FILES = [\n",
        );
        for c in &csvs {
            script.push_str(&format!("    {c:?},\n"));
        }
        script.push_str(
            "]\n\nfor name in FILES:\n    with open(name) as fh:\n        rows = list(csv.reader(fh))\n    header, data = rows[0], rows[1:]\n    if len(header) < 2 or not data:\n        continue\n    xs = [float(r[0]) for r in data]\n    plt.figure()\n    for j in range(1, len(header)):\n        try:\n            ys = [float(r[j]) for r in data]\n        except ValueError:\n            continue\n        plt.plot(xs, ys, label=header[j])\n    plt.xlabel(header[0])\n    plt.legend()\n    plt.title(name)\n    plt.savefig(name.replace(\".csv\", \".png\"), dpi=120)\n    plt.close()\nprint(f\"rendered {len(FILES)} csv file(s)\")\n",
        );
        self.write_named("plot.py", script.as_bytes())
    }

    /// Manifest with the config echo and content hashes of every artifact.
    pub fn finish_manifest(
        &mut self,
        suite: &str,
        seed: u64,
        config_echo: &str,
        extra: serde_json::Value,
    ) -> std::io::Result<()> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let outputs: serde_json::Map<String, serde_json::Value> = self
            .files
            .iter()
            .map(|(n, h)| (n.clone(), json!(h)))
            .collect();
        let manifest = json!({
            "suite": suite,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "config": config_echo,
            "outputs": outputs,
            "extra": extra,
        });
        let path = dir.join("manifest.json");
        let mut f = fs::File::create(path)?;
        f.write_all(serde_json::to_string_pretty(&manifest)?.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }

    pub fn file_hashes(&self) -> &[(String, String)] {
        &self.files
    }
}

/// Format a float so equal values always produce equal bytes.
pub fn fmt_f64(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{x:.1}")
    } else {
        format!("{x:.12e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_and_hashes_outputs() {
        let dir = std::env::temp_dir().join(format!("hl-io-test-{}", std::process::id()));
        let mut w = OutputWriter::new(Some(&dir)).unwrap();
        w.write_csv("series", "t,v", &["0.0,1.0".into(), "1.0,2.0".into()])
            .unwrap();
        w.write_plot_script().unwrap();
        w.finish_manifest("demo", 7, "seed = 7", serde_json::json!({})).unwrap();
        let manifest = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
        assert!(manifest.contains("series.csv"));
        assert!(manifest.contains("plot.py"));
        let csv = std::fs::read_to_string(dir.join("series.csv")).unwrap();
        assert_eq!(csv, "t,v\n0.0,1.0\n1.0,2.0\n");
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn disabled_writer_swallows_everything() {
        let mut w = OutputWriter::disabled();
        w.write_csv("x", "a", &["1".into()]).unwrap();
        assert!(w.file_hashes().is_empty());
    }

    #[test]
    fn float_formatting_is_stable() {
        assert_eq!(fmt_f64(1.0), "1.0");
        assert_eq!(fmt_f64(0.5), fmt_f64(0.5));
        assert!(fmt_f64(1.0 / 3.0).contains('e'));
    }
}

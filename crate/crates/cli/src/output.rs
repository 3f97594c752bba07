//! Artifact writers. Files carry no wall-clock content; timings go to the
//! log only.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;
use std::sync::Mutex;

pub const SCHEMA_VERSION: u32 = 1;

/// Shortest round-trip text; scientific outside [1e-4, 1e6).
pub fn num(x: f64) -> String {
    let m = x.abs();
    if x == 0.0 || (1e-4..1e6).contains(&m) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Header row, then `# schema: magstep/<name> v1`, then the rows.
pub fn write_csv(path: &Path, name: &str, columns: &[String], rows: &[Vec<String>]) -> io::Result<()> {
    let mut out = String::new();
    out.push_str(&columns.join(","));
    out.push('\n');
    out.push_str(&format!("# schema: magstep/{name} v{SCHEMA_VERSION}\n"));
    for r in rows {
        debug_assert_eq!(r.len(), columns.len());
        out.push_str(&r.join(","));
        out.push('\n');
    }
    fs::write(path, out)
}

/// Two whitespace-separated columns for plotting.
pub fn write_dat(path: &Path, labels: (&str, &str), points: &[(f64, f64)]) -> io::Result<()> {
    let mut out = format!("# {} {}\n", labels.0, labels.1);
    for (x, y) in points {
        out.push_str(&format!("{} {}\n", num(*x), num(*y)));
    }
    fs::write(path, out)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    s.push('\n');
    fs::write(path, s)
}

pub fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Progress messages to stderr and `<output>/magstep.log`.
pub struct Log {
    file: Mutex<Option<File>>,
}

impl Log {
    pub fn open(dir: &Path) -> Self {
        let file = OpenOptions::new().create(true).append(true).open(dir.join("magstep.log")).ok();
        Self { file: Mutex::new(file) }
    }

    pub fn info(&self, msg: impl AsRef<str>) {
        let msg = msg.as_ref();
        eprintln!("magstep: {msg}");
        if let Some(f) = self.file.lock().unwrap_or_else(|e| e.into_inner()).as_mut() {
            let _ = writeln!(f, "{msg}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, 0.5, -0.7681836530, 1e-12, 3.25e7, -2.5e-5, 123456.5] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(1e-12), "1e-12");
        assert_eq!(opt(None), "");
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_csv(&p, "t", &columns(&["x", "y"]), &[vec![num(1.0), opt(None)]]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "x,y\n# schema: magstep/t v1\n1,\n");
    }
}

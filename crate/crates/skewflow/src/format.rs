//! Text and CSV emission. Every file starts with a header line naming the tool
//! version, a hash of the resolved configuration and the seed.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use skewflow_core::{ChainWitness, CheckStatus, Matrix, SpaceTag, VerificationReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

pub fn header(config_hash: u64, seed: u64) -> String {
    format!("# skewflow {VERSION} config={config_hash:016x} seed={seed}")
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_row<I: IntoIterator<Item = f64>>(values: I) -> String {
    values.into_iter().map(num).collect::<Vec<_>>().join(", ")
}

pub fn matrix_rows(m: &Matrix) -> String {
    (0..m.dim()).map(|i| format!("  {}\n", csv_row(m.row(i).iter().copied()))).collect()
}

/// Writes files below one directory, each prefixed with the same header.
#[derive(Debug)]
pub struct Emitter {
    dir: PathBuf,
    header: String,
    written: Vec<PathBuf>,
}

impl Emitter {
    pub fn new(dir: &Path, header: String) -> io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Emitter { dir: dir.to_path_buf(), header, written: Vec::new() })
    }

    pub fn header(&self) -> &str {
        &self.header
    }

    pub fn write(&mut self, name: &str, body: &str) -> io::Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, format!("{}\n{body}", self.header))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

fn status(s: CheckStatus) -> &'static str {
    match s {
        CheckStatus::Pass => "PASS",
        CheckStatus::Fail => "FAIL",
        CheckStatus::NotObserved => "NOT OBSERVED",
    }
}

/// One section per check, then the summary line.
pub fn render_report(report: &VerificationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[{}] system={} fiber={}", report.theorem, report.system, report.fiber);
    for (i, c) in report.checks.iter().enumerate() {
        let _ = writeln!(out, "## check {i} {}", c.name);
        let _ = writeln!(out, "inputs: {}", c.inputs);
        let _ = writeln!(out, "residual: {}", num(c.residual));
        let _ = writeln!(out, "bound: {}", num(c.bound));
        let _ = writeln!(out, "verdict: {}", status(c.status));
    }
    let _ = writeln!(out, "{}", report.summary_line());
    out
}

/// Points and per-step residual table of a chain.
pub fn render_witness(title: &str, w: &ChainWitness) -> String {
    let mut out = String::new();
    let tag = match w.tag {
        SpaceTag::Discrete => "discrete",
        SpaceTag::Suspension => "suspension",
    };
    let _ = writeln!(out, "# {title}: {tag} chain, {} steps, t_min = {}", w.steps(), num(w.t_min));
    let dim = w.points.first().map_or(0, Vec::len);
    let coords: Vec<String> = match w.tag {
        SpaceTag::Discrete => (1..=dim).map(|i| format!("x{i}")).collect(),
        SpaceTag::Suspension => std::iter::once("s".to_string()).chain((1..dim).map(|i| format!("x{i}"))).collect(),
    };
    let _ = writeln!(out, "point, {}", coords.join(", "));
    for (i, p) in w.points.iter().enumerate() {
        let _ = writeln!(out, "{i}, {}", csv_row(p.iter().copied()));
    }
    let _ = writeln!(out, "step, time, residual, bound, ok");
    for i in 0..w.steps() {
        let ok = w.residuals[i] < w.bounds[i] && w.times[i] > w.t_min;
        let _ = writeln!(
            out,
            "{i}, {}, {}, {}, {}",
            num(w.times[i]),
            num(w.residuals[i]),
            num(w.bounds[i]),
            if ok { "yes" } else { "no" }
        );
    }
    out
}

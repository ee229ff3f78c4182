//! CSV artifacts. Every file starts with `# key=value` metadata lines (always
//! including the parameter fingerprint), then a header row and comma-separated data
//! with LF line endings. Floats use the shortest representation that parses back to
//! the same bits, so reading and rewriting a file reproduces it byte for byte.

use std::io::Write;
use std::path::Path;

use crate::boundary::{BoundarySolution, Scheme};
use crate::error::{Error, Result};
use crate::oracle::{McEstimate, OracleReport};
use crate::params::GammaRegime;
use crate::primal::{PolicyOutput, PrimalState};

/// Value written under `watermark` for runs whose parameters failed an assumption.
pub const WATERMARK: &str = "ASSUMPTION-OVERRIDE";

/// A parsed CSV artifact: ordered metadata, header and raw cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn parse_f64(cell: &str, what: &str) -> Result<f64> {
    cell.trim()
        .parse()
        .map_err(|_| Error::Csv(format!("{what}: cannot parse {cell:?} as a number")))
}

fn parse_bool(cell: &str, what: &str) -> Result<bool> {
    match cell.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::Csv(format!("{what}: expected true or false, got {other:?}"))),
    }
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn push_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn require_meta(&self, key: &str) -> Result<&str> {
        self.meta(key).ok_or_else(|| Error::Csv(format!("missing metadata `{key}`")))
    }

    fn meta_f64(&self, key: &str) -> Result<f64> {
        parse_f64(self.require_meta(key)?, key)
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Csv(format!("missing column `{name}`")))
    }

    /// All cells of column `name` parsed as floats.
    pub fn f64_column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column(name)?;
        self.rows.iter().map(|r| parse_f64(&r[i], name)).collect()
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut out = Vec::new();
        for (k, v) in &self.meta {
            writeln!(out, "# {k}={v}")?;
        }
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut out);
            w.write_record(&self.header)?;
            for row in &self.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        String::from_utf8(out).map_err(|e| Error::Csv(e.to_string()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut meta = Vec::new();
        let mut body_start = 0;
        for line in text.split_inclusive('\n') {
            let Some(rest) = line.strip_prefix("# ") else { break };
            let rest = rest.trim_end_matches('\n');
            let (k, v) = rest
                .split_once('=')
                .ok_or_else(|| Error::Csv(format!("malformed metadata line {line:?}")))?;
            meta.push((k.to_string(), v.to_string()));
            body_start += line.len();
        }
        let mut r = csv::ReaderBuilder::new().from_reader(text[body_start..].as_bytes());
        let header = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(CsvTable { meta, header, rows })
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn push_run_meta(t: &mut CsvTable, fingerprint: &str, watermarked: bool) {
    t.push_meta("fingerprint", fingerprint);
    if watermarked {
        t.push_meta("watermark", WATERMARK);
    }
}

pub fn boundary_table(sol: &BoundarySolution) -> CsvTable {
    let mut t = CsvTable::new(&["xi", "t", "b_star", "residual"]);
    push_run_meta(&mut t, &sol.fingerprint, sol.watermarked);
    t.push_meta("m_initial", fmt_f64(sol.m_initial));
    t.push_meta("horizon", fmt_f64(sol.horizon));
    t.push_meta("n_steps", sol.n_steps);
    t.push_meta("root_tol", fmt_f64(sol.root_tol));
    t.push_meta("scheme", sol.scheme.as_str());
    t.push_meta("regime", sol.regime.as_str());
    for j in 0..=sol.n_steps {
        t.rows.push(vec![
            fmt_f64(sol.xi_grid[j]),
            fmt_f64(sol.t_of(j)),
            fmt_f64(sol.b_star[j]),
            fmt_f64(sol.residuals[j]),
        ]);
    }
    t
}

pub fn boundary_from_table(t: &CsvTable) -> Result<BoundarySolution> {
    let n_steps: usize = t
        .require_meta("n_steps")?
        .parse()
        .map_err(|_| Error::Csv("n_steps is not an integer".into()))?;
    let scheme = Scheme::parse(t.require_meta("scheme")?).ok_or_else(|| Error::Csv("unknown scheme".into()))?;
    let regime =
        GammaRegime::parse(t.require_meta("regime")?).ok_or_else(|| Error::Csv("unknown regime".into()))?;
    let sol = BoundarySolution {
        fingerprint: t.require_meta("fingerprint")?.to_string(),
        watermarked: t.meta("watermark").is_some(),
        m_initial: t.meta_f64("m_initial")?,
        horizon: t.meta_f64("horizon")?,
        n_steps,
        root_tol: t.meta_f64("root_tol")?,
        scheme,
        regime,
        xi_grid: t.f64_column("xi")?,
        b_star: t.f64_column("b_star")?,
        residuals: t.f64_column("residual")?,
    };
    if sol.xi_grid.len() != n_steps + 1 {
        return Err(Error::Csv(format!(
            "expected {} rows, found {}",
            n_steps + 1,
            sol.xi_grid.len()
        )));
    }
    Ok(sol)
}

/// One evaluated primal state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyRecord {
    pub state: PrimalState,
    pub policy: PolicyOutput,
    pub value: f64,
}

pub const POLICY_COLUMNS: [&str; 10] = [
    "t", "w", "m", "y", "z_star", "c_star", "pi_star", "b_hat", "retire_now", "V",
];

pub fn policy_table(fingerprint: &str, watermarked: bool, records: &[PolicyRecord]) -> CsvTable {
    let mut t = CsvTable::new(&POLICY_COLUMNS);
    push_run_meta(&mut t, fingerprint, watermarked);
    for r in records {
        let (s, p) = (&r.state, &r.policy);
        t.rows.push(vec![
            fmt_f64(s.t),
            fmt_f64(s.w),
            fmt_f64(s.m),
            fmt_f64(s.y),
            fmt_f64(p.z_star),
            fmt_f64(p.c_star),
            fmt_f64(p.pi_star),
            fmt_f64(p.b_hat),
            p.retire_now.to_string(),
            fmt_f64(r.value),
        ]);
    }
    t
}

pub fn policy_from_table(t: &CsvTable) -> Result<Vec<PolicyRecord>> {
    let idx: Vec<usize> = POLICY_COLUMNS.iter().map(|c| t.column(c)).collect::<Result<_>>()?;
    t.rows
        .iter()
        .map(|row| {
            let f = |k: usize| parse_f64(&row[idx[k]], POLICY_COLUMNS[k]);
            Ok(PolicyRecord {
                state: PrimalState {
                    t: f(0)?,
                    w: f(1)?,
                    m: f(2)?,
                    y: f(3)?,
                },
                policy: PolicyOutput {
                    z_star: f(4)?,
                    c_star: f(5)?,
                    pi_star: f(6)?,
                    b_hat: f(7)?,
                    retire_now: parse_bool(&row[idx[8]], "retire_now")?,
                },
                value: f(9)?,
            })
        })
        .collect()
}

/// Lattice boundary per slice next to the integral-equation boundary, with the
/// Monte Carlo estimate (when present) in the metadata.
pub fn oracle_table(report: &OracleReport, sol: &BoundarySolution) -> Result<CsvTable> {
    let mut t = CsvTable::new(&["t", "xi", "b_lattice", "b_star", "rel_gap"]);
    push_run_meta(&mut t, &report.fingerprint, report.watermarked);
    t.push_meta("m_initial", fmt_f64(report.m_initial));
    t.push_meta("n_time", report.t_grid.len() - 1);
    t.push_meta("n_space", report.x_grid.len());
    t.push_meta("x_lo", fmt_f64(report.x_grid[0]));
    t.push_meta("x_hi", fmt_f64(*report.x_grid.last().expect("nonempty grid")));
    if let Some(mc) = report.mc_value {
        t.push_meta("mc_mean", fmt_f64(mc.mean));
        t.push_meta("mc_stderr", fmt_f64(mc.stderr));
        t.push_meta("mc_samples", mc.n_samples);
    }
    let horizon = *report.t_grid.last().expect("nonempty grid");
    for (i, &ti) in report.t_grid.iter().enumerate() {
        let xi = horizon - ti;
        let b = sol.boundary_at(xi)?;
        let bl = report.boundary_lattice[i];
        t.rows.push(vec![
            fmt_f64(ti),
            fmt_f64(xi),
            fmt_f64(bl),
            fmt_f64(b),
            fmt_f64(bl / b - 1.0),
        ]);
    }
    Ok(t)
}

/// The Monte Carlo estimate stored in an oracle table, if any.
pub fn mc_from_table(t: &CsvTable) -> Result<Option<McEstimate>> {
    if t.meta("mc_mean").is_none() {
        return Ok(None);
    }
    Ok(Some(McEstimate {
        mean: t.meta_f64("mc_mean")?,
        stderr: t.meta_f64("mc_stderr")?,
        n_samples: t
            .require_meta("mc_samples")?
            .parse()
            .map_err(|_| Error::Csv("mc_samples is not an integer".into()))?,
    }))
}

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use retirement_core::csv_io::{boundary_table, fmt_f64, oracle_table, policy_table, CsvTable, PolicyRecord, WATERMARK};
use retirement_core::primal::primal_value_at;
use retirement_core::*;

use crate::config::{OracleConfig, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    Boundary,
    Primal,
    Oracle,
    Sweep,
}

/// Command-line overrides of the config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub allow_assumption_override: bool,
}

/// What a run printed, wrote and found wrong.
#[derive(Debug, Default)]
pub struct Report {
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
    pub violations: Vec<String>,
}

impl Report {
    pub fn success(&self) -> bool {
        self.violations.is_empty()
    }
}

fn build_model(params: ModelParams, allow_override: bool) -> Result<Model> {
    let model = if allow_override {
        Model::with_override(params)
    } else {
        Model::new(params)
    };
    model.context("model-core: parameters rejected (pass --allow-assumption-override to run anyway)")
}

fn solve(model: &Model, cfg: &RunConfig, m_initial: f64) -> Result<BoundarySolution> {
    solve_boundary_with(model, m_initial, cfg.solver.n_steps, cfg.solver.root_tol, cfg.scheme())
        .context("boundary-solver: solve failed")
}

struct Writer {
    dir: PathBuf,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("cli: cannot create {}", dir.display()))?;
        Ok(Writer { dir: dir.to_path_buf() })
    }

    fn write(&self, report: &mut Report, name: &str, table: &CsvTable) -> Result<()> {
        let path = self.dir.join(name);
        table.write_to(&path).with_context(|| format!("cli: cannot write {}", path.display()))?;
        report.files.push(path);
        Ok(())
    }
}

pub fn run(cmd: Command, cfg: &RunConfig, opts: &RunOptions) -> Result<Report> {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let out = opts.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    match cmd {
        Command::Validate => validate(&cfg, opts.allow_assumption_override),
        Command::Boundary => boundary(&cfg, opts.allow_assumption_override, &out),
        Command::Primal => primal(&cfg, opts.allow_assumption_override, &out),
        Command::Oracle => oracle(&cfg, opts.allow_assumption_override, &out),
        Command::Sweep => sweep(&cfg, opts.allow_assumption_override, &out),
    }
}

/// Twelve significant digits, trailing zeros dropped, for human-facing reports.
fn display(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    let digits = (11 - v.abs().log10().floor() as i32).max(0) as usize;
    let s = format!("{v:.digits$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn validate(cfg: &RunConfig, allow_override: bool) -> Result<Report> {
    let model = build_model(cfg.params, true)?;
    let c = model.constants();
    let mut r = Report::default();
    r.lines.push(format!("fingerprint  {}", model.fingerprint()));
    let named = [
        ("theta", c.theta),
        ("kappa", c.kappa),
        ("rho", c.rho),
        ("sigma1", c.sigma1),
        ("mu1", c.mu1),
        ("growth_rate", c.growth_rate),
        ("L", c.l_terminal),
    ];
    for (name, v) in named {
        r.lines.push(format!("{name:<12} {}", display(v)));
    }
    r.lines.push(format!("regime       {}", c.gamma_regime));
    for check in model.assumption_report() {
        let verdict = if check.passed { "PASS" } else { "FAIL" };
        r.lines.push(format!(
            "{verdict} {:<17} {} (lhs {}, rhs {})",
            check.name,
            check.statement,
            display(check.lhs),
            display(check.rhs)
        ));
        if !check.passed {
            if allow_override {
                r.lines.push(format!("     overridden: outputs will carry `watermark={WATERMARK}`"));
            } else {
                r.violations.push(format!("assumption {} fails", check.name));
            }
        }
    }
    Ok(r)
}

fn boundary(cfg: &RunConfig, allow_override: bool, out: &Path) -> Result<Report> {
    let model = build_model(cfg.params, allow_override)?;
    let sol = solve(&model, cfg, cfg.m_initial())?;
    let mut r = Report::default();
    r.lines.push(format!(
        "b*(xi=0) = {}, b*(xi=T) = {}, max |residual| = {:.2e}",
        sol.b_star[0],
        sol.b_star[sol.n_steps],
        sol.residuals.iter().fold(0.0f64, |a, b| a.max(b.abs()))
    ));
    Writer::new(out)?.write(&mut r, "boundary.csv", &boundary_table(&sol))?;
    Ok(r)
}

/// Policy rows over the configured dates and wealth levels.
fn policy_records(model: &Model, sol: &BoundarySolution, cfg: &RunConfig, dates: &[f64], y: f64, wealth: Option<f64>) -> Result<Vec<PolicyRecord>> {
    let mut states = Vec::new();
    for &t in dates {
        let m = model.mortality_at(sol.m_initial, t);
        let levels: Vec<f64> = if let Some(w) = wealth {
            vec![w]
        } else if !cfg.primal.w.is_empty() {
            cfg.primal.w.clone()
        } else {
            let b_hat = wealth_boundary(model, sol, t, m, y).context("primal-transform: wealth boundary")?;
            cfg.primal.w_over_b_hat.iter().map(|f| f * b_hat).collect()
        };
        states.extend(levels.into_iter().map(|w| PrimalState { t, w, m, y }));
    }
    states
        .par_iter()
        .map(|s| {
            let policy = feedback_policies(model, sol, s)
                .with_context(|| format!("primal-transform: policies at t = {}, w = {}", s.t, s.w))?;
            let value = primal_value_at(model, sol, s, policy.z_star).context("primal-transform: value")?;
            Ok(PolicyRecord {
                state: *s,
                policy,
                value,
            })
        })
        .collect()
}

fn primal(cfg: &RunConfig, allow_override: bool, out: &Path) -> Result<Report> {
    let model = build_model(cfg.params, allow_override)?;
    let sol = solve(&model, cfg, cfg.m_initial())?;
    let rows = policy_records(&model, &sol, cfg, &cfg.primal.t, cfg.primal.y, None)?;
    let mut r = Report::default();
    let retired = rows.iter().filter(|p| p.policy.retire_now).count();
    r.lines.push(format!("{} states evaluated, {retired} in the retirement region", rows.len()));
    for &t in &cfg.primal.t {
        let m = model.mortality_at(sol.m_initial, t);
        let b_hat = wealth_boundary(&model, &sol, t, m, cfg.primal.y)?;
        r.lines.push(format!("t = {t}: b_hat = {b_hat}"));
    }
    Writer::new(out)?.write(&mut r, "policy.csv", &policy_table(&model.fingerprint(), model.is_watermarked(), &rows))?;
    Ok(r)
}

fn oracle(cfg: &RunConfig, allow_override: bool, out: &Path) -> Result<Report> {
    let oc = cfg.oracle.clone().unwrap_or_default();
    let model = build_model(cfg.params, allow_override)?;
    let m0 = cfg.m_initial();
    let sol = solve(&model, cfg, m0)?;
    let mut spec = LatticeSpec::for_model(&model, m0, oc.n_time, oc.n_space);
    spec.stencil = oc.stencil;
    if let Some(lo) = oc.x_lo {
        spec.x_range.0 = lo;
    }
    if let Some(hi) = oc.x_hi {
        spec.x_range.1 = hi;
    }
    let mut report = lattice_solve(&model, &spec).context("oracle: lattice solve")?;
    let mut r = Report::default();
    let horizon = model.horizon();
    for xi in [0.25 * horizon, 0.5 * horizon, horizon] {
        let lattice = report.boundary_at(xi).expect("inside horizon");
        let solved = sol.boundary_at(xi)?;
        let gap = lattice / solved - 1.0;
        r.lines.push(format!("xi = {xi}: lattice {lattice}, integral equation {solved}, gap {gap:+.3e}"));
        if gap.abs() > oc.max_rel_gap {
            r.violations.push(format!("lattice gap {gap:+.3e} at xi = {xi} exceeds {}", oc.max_rel_gap));
        }
    }
    if oc.mc_paths > 0 {
        mc_check(&model, &sol, &oc, cfg.seed, &mut report, &mut r)?;
    }
    Writer::new(out)?.write(&mut r, "oracle.csv", &oracle_table(&report, &sol)?)?;
    Ok(r)
}

fn mc_check(model: &Model, sol: &BoundarySolution, oc: &OracleConfig, seed: u64, report: &mut OracleReport, r: &mut Report) -> Result<()> {
    let xi = oc.mc_xi.unwrap_or(sol.horizon);
    let x = oc.mc_x.unwrap_or(0.85 * model.constants().l_terminal);
    let settings = McSettings {
        n_paths: oc.mc_paths,
        seed,
        antithetic: oc.antithetic,
        substeps: oc.substeps,
    };
    let est = mc_evaluate(model, sol, xi, x, &settings).context("oracle: Monte Carlo")?;
    let target = j_hat_on_path(model, sol, xi, x).context("boundary-solver: value approximation")?;
    let z = if est.stderr > 0.0 { (est.mean - target) / est.stderr } else { 0.0 };
    r.lines.push(format!(
        "Monte Carlo at (xi = {xi}, x = {x}): {} +- {} vs J {target} ({z:+.2} stderr)",
        est.mean, est.stderr
    ));
    if z.abs() > 3.0 || (est.stderr == 0.0 && est.mean != target) {
        r.violations.push(format!("Monte Carlo estimate is {z:+.2} standard errors from the value approximation"));
    }
    report.mc_value = Some(est);
    Ok(())
}

/// One axis value of a sweep.
struct SweepPoint {
    row: Vec<String>,
    boundary: Option<CsvTable>,
    policy: CsvTable,
}

fn sweep(cfg: &RunConfig, allow_override: bool, out: &Path) -> Result<Report> {
    let spec = cfg.sweep.clone().context("config: the sweep command needs a [sweep] section")?;
    let axis = spec.axis.as_str();
    let resolves = ModelParams::FIELD_NAMES.contains(&axis) || axis == "m";
    // state axes share one solve
    let shared = if resolves {
        None
    } else {
        let model = build_model(cfg.params, allow_override)?;
        let sol = solve(&model, cfg, cfg.m_initial())?;
        Some((model, sol))
    };

    let points: Vec<SweepPoint> = spec
        .values
        .par_iter()
        .map(|&v| -> Result<SweepPoint> {
            let owned;
            let (model, sol) = match &shared {
                Some((m, s)) => (m, s),
                None => {
                    let params = if axis == "m" {
                        cfg.params
                    } else {
                        cfg.params.with(axis, v).expect("validated axis")
                    };
                    let model = build_model(params, allow_override).with_context(|| format!("sweep {axis} = {v}"))?;
                    let m0 = if axis == "m" { v } else { cfg.solver.m_initial.unwrap_or(params.m0) };
                    let sol = solve(&model, cfg, m0).with_context(|| format!("sweep {axis} = {v}"))?;
                    owned = (model, sol);
                    (&owned.0, &owned.1)
                }
            };
            let t0 = if axis == "t" { v } else { cfg.primal.t[0] };
            let y = if axis == "y" { v } else { cfg.primal.y };
            let dates = if axis == "t" { vec![v] } else { cfg.primal.t.clone() };
            let wealth = (axis == "w").then_some(v);
            let records = policy_records(model, sol, cfg, &dates, y, wealth).with_context(|| format!("sweep {axis} = {v}"))?;
            let m = model.mortality_at(sol.m_initial, t0);
            let b_hat = wealth_boundary(model, sol, t0, m, y)?;
            Ok(SweepPoint {
                row: vec![
                    fmt_f64(v),
                    model.fingerprint(),
                    fmt_f64(sol.m_initial),
                    fmt_f64(t0),
                    fmt_f64(y),
                    fmt_f64(sol.boundary_at_time(t0)?),
                    fmt_f64(b_hat),
                ],
                boundary: resolves.then(|| boundary_table(sol)),
                policy: policy_table(&model.fingerprint(), model.is_watermarked(), &records),
            })
        })
        .collect::<Result<_>>()?;

    let mut r = Report::default();
    let w = Writer::new(out)?;
    if let Some((_, sol)) = &shared {
        w.write(&mut r, &format!("boundary_{axis}.csv"), &boundary_table(sol))?;
    }
    let mut table = CsvTable::new(&["value", "fingerprint", "m_initial", "t", "y", "b_star", "b_hat"]);
    table.push_meta("fingerprint", cfg.params.fingerprint());
    if allow_override && points.iter().any(|p| p.policy.meta("watermark").is_some()) {
        table.push_meta("watermark", WATERMARK);
    }
    table.push_meta("axis", axis);
    for (i, p) in points.into_iter().enumerate() {
        r.lines.push(format!("{axis} = {}: b_star = {}, b_hat = {}", p.row[0], p.row[5], p.row[6]));
        if let Some(b) = &p.boundary {
            w.write(&mut r, &format!("boundary_{axis}_{i:02}.csv"), b)?;
        }
        w.write(&mut r, &format!("policy_{axis}_{i:02}.csv"), &p.policy)?;
        table.rows.push(p.row);
    }
    w.write(&mut r, &format!("sweep_{axis}.csv"), &table)?;
    Ok(r)
}

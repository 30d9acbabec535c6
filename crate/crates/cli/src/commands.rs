//! Subcommands. Each writes one or more CSV files into the output
//! directory; pipe numbers in the output are one-based.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use leakscope_core::isolation::{DEFAULT_EPS_FIT, DEFAULT_EPS_SPREAD};
use leakscope_core::{
    all_candidates, candidate_position, confusion_flow_curve_from_nominal,
    detect_inherent_ambiguity, isolate_by_consistency, isolate_by_leak_fit, residual_bar,
    solve_leaky_state, sweep, DataPoint, HydraulicState, LeakSpec, PipeSet, Verdict,
};

use crate::error::CliError;
use crate::output::{header, num, opt, Table};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Simulate,
    Candidates,
    ResidualSweep,
    Confusion,
    Isolate,
    Leakfit,
    Check,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Simulate,
        Command::Candidates,
        Command::ResidualSweep,
        Command::Confusion,
        Command::Isolate,
        Command::Leakfit,
        Command::Check,
    ];

    /// Files written by the command, in order.
    pub fn outputs(&self) -> &'static [&'static str] {
        match self {
            Command::Simulate => &["simulate.csv"],
            Command::Candidates => &["candidates.csv"],
            Command::ResidualSweep => &["residual_sweep.csv", "nominal_candidates.csv"],
            Command::Confusion => &["confusion.csv"],
            Command::Isolate => &["isolate.csv", "isolate_spread.csv"],
            Command::Leakfit => &["leakfit_samples.csv", "leakfit.csv"],
            Command::Check => &["check.csv"],
        }
    }
}

/// Command line overrides of scenario analysis options.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub nominal_dh: Option<f64>,
    pub eps_spread: Option<f64>,
    pub eps_fit: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub rows: usize,
    pub failed_rows: usize,
}

/// Boundary heads and the outcome of solving for them.
type StateRow = (f64, f64, leakscope_core::Result<HydraulicState>);

struct Context<'a> {
    scenario: &'a Scenario,
    pipes: PipeSet,
    leak: LeakSpec,
    out: &'a Path,
    overrides: Overrides,
}

impl Context<'_> {
    fn n(&self) -> usize {
        self.pipes.len()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn states(&self) -> Result<Vec<StateRow>, CliError> {
        let pairs = self.scenario.boundary_pairs();
        let sw = sweep(&self.pipes, &self.leak, &pairs)?;
        Ok(pairs
            .into_iter()
            .zip(sw.results)
            .map(|((a, b), r)| (a, b, r))
            .collect())
    }

    fn data(&self) -> Result<Vec<DataPoint>, CliError> {
        Ok(self
            .states()?
            .into_iter()
            .filter_map(|(_, _, r)| r.ok())
            .map(|s| s.data_point())
            .collect())
    }

    fn eps_spread(&self) -> f64 {
        self.overrides
            .eps_spread
            .or(self.scenario.analysis.eps_spread)
            .unwrap_or(DEFAULT_EPS_SPREAD)
    }

    fn eps_fit(&self) -> f64 {
        self.overrides
            .eps_fit
            .or(self.scenario.analysis.eps_fit)
            .unwrap_or(DEFAULT_EPS_FIT)
    }

    /// Nominal boundary heads: explicit options first, then the first
    /// pair of the boundary schedule.
    fn nominal(&self) -> Result<(f64, f64), CliError> {
        let first = self.scenario.boundary_pairs().first().copied();
        let a = &self.scenario.analysis;
        let h_out = a.nominal_h_out.or(first.map(|p| p.1));
        let dh = self
            .overrides
            .nominal_dh
            .or(a.nominal_dh)
            .or(first.map(|p| p.0 - p.1));
        match (h_out, dh) {
            (Some(h_out), Some(dh)) => Ok((h_out + dh, h_out)),
            _ => Err(CliError::Command(
                "no nominal state: set analysis.nominal_dh and analysis.nominal_h_out".into(),
            )),
        }
    }

    fn dh_grid(&self, nominal_dh: f64) -> Vec<f64> {
        match &self.scenario.analysis.dh_grid {
            Some(g) => g.expand(),
            None => crate::scenario::Range {
                from: nominal_dh - 1.0,
                to: nominal_dh + 1.0,
                steps: 41,
            }
            .expand(),
        }
    }
}

/// Runs `command` on a validated scenario, writing CSV files into `out`.
pub fn run(
    command: Command,
    scenario: &Scenario,
    out: &Path,
    overrides: Overrides,
) -> Result<RunReport, CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    let ctx = Context {
        scenario,
        pipes: scenario.pipe_set()?,
        leak: scenario.leak_spec(),
        out,
        overrides,
    };
    let mut report = match command {
        Command::Simulate => simulate(&ctx)?,
        Command::Candidates => candidates(&ctx)?,
        Command::ResidualSweep => residual_sweep(&ctx)?,
        Command::Confusion => confusion(&ctx)?,
        Command::Isolate => isolate(&ctx)?,
        Command::Leakfit => leakfit(&ctx)?,
        Command::Check => check(&ctx)?,
    };
    report.files = command.outputs().iter().map(|f| ctx.path(f)).collect();
    if report.rows > 0 && report.failed_rows == report.rows {
        return Err(CliError::Command(format!(
            "all {} points failed",
            report.rows
        )));
    }
    Ok(report)
}

fn simulate(ctx: &Context) -> Result<RunReport, CliError> {
    let n = ctx.n();
    let head = header(
        &[
            "point", "h_in", "h_out", "dh", "q_in", "q_out", "h_leak", "q_leak", "q_in_k",
            "q_out_k",
        ],
        "q",
        n,
        &["error"],
    );
    let mut t = Table::create(&ctx.path("simulate.csv"), &head)?;
    let mut report = RunReport::default();
    for (i, (h_in, h_out, r)) in ctx.states()?.into_iter().enumerate() {
        report.rows += 1;
        let mut row = vec![i.to_string(), num(h_in), num(h_out), num(h_in - h_out)];
        match r {
            Ok(s) => {
                let d = s.data_point();
                row.extend([
                    num(d.q_in),
                    num(d.q_out),
                    num(s.h_leak),
                    num(s.q_leak),
                    num(s.q_in_k),
                    num(s.q_out_k),
                ]);
                let mut flows = vec![String::new(); n];
                for (p, q) in &s.intact_flows {
                    flows[*p] = num(*q);
                }
                row.extend(flows);
                row.push(String::new());
            }
            Err(e) => {
                report.failed_rows += 1;
                row.extend(std::iter::repeat_n(String::new(), 6 + n));
                row.push(e.to_string());
            }
        }
        t.row(row)?;
    }
    t.finish()?;
    Ok(report)
}

fn candidates(ctx: &Context) -> Result<RunReport, CliError> {
    let n = ctx.n();
    let head = header(
        &["point", "h_in", "h_out", "dh", "q_in", "q_out"],
        "x",
        n,
        &["error"],
    );
    let mut t = Table::create(&ctx.path("candidates.csv"), &head)?;
    let mut report = RunReport::default();
    for (i, (h_in, h_out, r)) in ctx.states()?.into_iter().enumerate() {
        report.rows += 1;
        let mut row = vec![i.to_string(), num(h_in), num(h_out), num(h_in - h_out)];
        let outcome = r.and_then(|s| {
            let d = s.data_point();
            all_candidates(&ctx.pipes, &d).map(|c| (d, c))
        });
        match outcome {
            Ok((d, c)) => {
                row.extend([num(d.q_in), num(d.q_out)]);
                row.extend(c.iter().map(|c| num(c.x)));
                row.push(String::new());
            }
            Err(e) => {
                report.failed_rows += 1;
                row.extend(std::iter::repeat_n(String::new(), 2 + n));
                row.push(e.to_string());
            }
        }
        t.row(row)?;
    }
    t.finish()?;
    Ok(report)
}

fn nominal_point(ctx: &Context) -> Result<(DataPoint, Vec<f64>), CliError> {
    let (h_in, h_out) = ctx.nominal()?;
    let d = solve_leaky_state(&ctx.pipes, &ctx.leak, h_in, h_out)?.data_point();
    let xs = all_candidates(&ctx.pipes, &d)?
        .into_iter()
        .map(|c| c.x)
        .collect();
    Ok((d, xs))
}

fn residual_sweep(ctx: &Context) -> Result<RunReport, CliError> {
    let n = ctx.n();
    let (nominal, xs) = nominal_point(ctx)?;
    let mut cand = Table::create(
        &ctx.path("nominal_candidates.csv"),
        &["pipe", "x", "nominal_dh"].map(String::from),
    )?;
    for (j, x) in xs.iter().enumerate() {
        cand.row(vec![(j + 1).to_string(), num(*x), num(nominal.dh())])?;
    }
    cand.finish()?;

    let head = header(
        &["dh", "h_in", "h_out", "q_in", "q_out"],
        "rbar",
        n,
        &["error"],
    );
    let mut t = Table::create(&ctx.path("residual_sweep.csv"), &head)?;
    let mut report = RunReport::default();
    let h_out = nominal.h_out;
    for dh in ctx.dh_grid(nominal.dh()) {
        report.rows += 1;
        let mut row = vec![num(dh), num(h_out + dh), num(h_out)];
        let outcome = solve_leaky_state(&ctx.pipes, &ctx.leak, h_out + dh, h_out).and_then(|s| {
            let d = s.data_point();
            let r: Result<Vec<f64>, _> = xs
                .iter()
                .enumerate()
                .map(|(j, &x)| residual_bar(&ctx.pipes, j, x, &d))
                .collect();
            r.map(|r| (d, r))
        });
        match outcome {
            Ok((d, r)) => {
                row.extend([num(d.q_in), num(d.q_out)]);
                row.extend(r.into_iter().map(num));
                row.push(String::new());
            }
            Err(e) => {
                report.failed_rows += 1;
                row.extend(std::iter::repeat_n(String::new(), 2 + n));
                row.push(e.to_string());
            }
        }
        t.row(row)?;
    }
    t.finish()?;
    Ok(report)
}

fn confusion(ctx: &Context) -> Result<RunReport, CliError> {
    let (nominal, xs) = nominal_point(ctx)?;
    let grid = ctx.dh_grid(nominal.dh());
    let h_out = nominal.h_out;
    let actual: Vec<Option<f64>> = grid
        .iter()
        .map(|&dh| {
            solve_leaky_state(&ctx.pipes, &ctx.leak, h_out + dh, h_out)
                .ok()
                .map(|s| s.data_point().q_in)
        })
        .collect();
    let head = [
        "pipe",
        "x",
        "dh",
        "q_in_actual",
        "q_in_conf",
        "residual",
        "converged",
    ]
    .map(String::from);
    let mut t = Table::create(&ctx.path("confusion.csv"), &head)?;
    let mut report = RunReport::default();
    for (i, &x_i) in xs.iter().enumerate().filter(|(i, _)| *i != ctx.leak.pipe) {
        let curve = confusion_flow_curve_from_nominal(
            &ctx.pipes,
            i,
            x_i,
            &ctx.leak,
            nominal.dh(),
            nominal.q_in,
            &grid,
        )?;
        for (p, q_act) in curve.points.iter().zip(&actual) {
            report.rows += 1;
            if !p.converged {
                report.failed_rows += 1;
            }
            t.row(vec![
                (i + 1).to_string(),
                num(x_i),
                num(p.dh),
                opt(*q_act),
                num(p.q_in),
                num(p.residual),
                p.converged.to_string(),
            ])?;
        }
    }
    t.finish()?;
    // unconverged points are data, not failures of the command
    report.failed_rows = 0;
    Ok(report)
}

fn isolate(ctx: &Context) -> Result<RunReport, CliError> {
    let data = ctx.data()?;
    let v = isolate_by_consistency(&ctx.pipes, &data, ctx.eps_spread())?;
    let mut t = Table::create(
        &ctx.path("isolate.csv"),
        &["verdict", "pipe", "x", "candidates", "reasons"].map(String::from),
    )?;
    let join = |v: &[usize]| {
        v.iter()
            .map(|p| (p + 1).to_string())
            .collect::<Vec<_>>()
            .join(";")
    };
    match &v.verdict {
        Verdict::Isolated { pipe, x } => t.row(vec![
            "isolated".into(),
            (pipe + 1).to_string(),
            num(*x),
            join(&[*pipe]),
            String::new(),
        ])?,
        Verdict::Ambiguous {
            candidates,
            reasons,
        } => t.row(vec![
            "ambiguous".into(),
            String::new(),
            String::new(),
            join(candidates),
            reasons
                .iter()
                .map(|r| r.describe())
                .collect::<Vec<_>>()
                .join(";"),
        ])?,
    }
    t.finish()?;
    let mut s = Table::create(
        &ctx.path("isolate_spread.csv"),
        &["pipe", "mean", "min", "max", "spread", "plausible"].map(String::from),
    )?;
    for series in &v.series {
        s.row(vec![
            (series.pipe + 1).to_string(),
            num(series.mean),
            num(series.min),
            num(series.max),
            num(series.spread()),
            (series.spread() <= v.eps_spread).to_string(),
        ])?;
    }
    s.finish()?;
    Ok(RunReport {
        rows: 1,
        ..Default::default()
    })
}

fn leakfit(ctx: &Context) -> Result<RunReport, CliError> {
    let data = ctx.data()?;
    let first = data
        .first()
        .ok_or_else(|| CliError::Command("no data points to fit".into()))?;
    let xs: Vec<f64> = (0..ctx.n())
        .map(|j| candidate_position(&ctx.pipes, j, first))
        .collect::<Result<_, _>>()?;
    let fits = isolate_by_leak_fit(&ctx.pipes, &data, &xs, &ctx.scenario.h_y(), ctx.eps_fit())?;

    let mut samples = Table::create(
        &ctx.path("leakfit_samples.csv"),
        &["point", "pipe", "x", "q_leak", "h_leak"].map(String::from),
    )?;
    let mut by_pipe: Vec<_> = fits.iter().collect();
    by_pipe.sort_by_key(|f| f.pipe);
    for f in by_pipe {
        for (i, (h, q)) in f.samples.iter().enumerate() {
            samples.row(vec![
                i.to_string(),
                (f.pipe + 1).to_string(),
                num(f.x),
                num(*q),
                num(*h),
            ])?;
        }
    }
    samples.finish()?;

    let mut t = Table::create(
        &ctx.path("leakfit.csv"),
        &[
            "rank",
            "pipe",
            "x",
            "C",
            "beta",
            "rmse",
            "negative_head",
            "accepted",
            "error",
        ]
        .map(String::from),
    )?;
    for (rank, f) in fits.iter().enumerate() {
        let mut row = vec![(rank + 1).to_string(), (f.pipe + 1).to_string(), num(f.x)];
        match &f.outcome {
            Ok(r) => {
                let fit = r.fit;
                row.extend([
                    opt(fit.map(|p| p.c)),
                    opt(fit.map(|p| p.beta)),
                    opt(fit.map(|p| p.rmse)),
                    r.negative_head.to_string(),
                    r.accepted.to_string(),
                    String::new(),
                ]);
            }
            Err(e) => {
                row.extend([
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    "false".into(),
                    e.to_string(),
                ]);
            }
        }
        t.row(row)?;
    }
    t.finish()?;
    Ok(RunReport {
        rows: fits.len(),
        ..Default::default()
    })
}

fn check(ctx: &Context) -> Result<RunReport, CliError> {
    let mut t = Table::create(
        &ctx.path("check.csv"),
        &["pipe_a", "pipe_b", "reason"].map(String::from),
    )?;
    let found = detect_inherent_ambiguity(&ctx.pipes);
    for a in &found {
        t.row(vec![
            (a.pipes.0 + 1).to_string(),
            (a.pipes.1 + 1).to_string(),
            a.reason.as_str().into(),
        ])?;
    }
    t.finish()?;
    Ok(RunReport::default())
}

//! Command-line front end of the `cma` binary. Every command writes its
//! artifacts under `output.dir`, each carrying the library version and the
//! resolved configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::analysis::{empirical_modulus, fit_exponent};
use crate::config::{parse_config, parse_config_file, RunConfig};
use crate::data::Psi;
use crate::error::{Error, Result};
use crate::grid::{read_field, write_field, FieldHeader, ScalarField};
use crate::modulus::ModulusCurve;
use crate::solver::{solve_lp, SolverReport};
use crate::verify::{self, Solved, Verdict};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "cma", version, about = "Complex Monge-Ampere Dirichlet solver and regularity checks")]
pub struct Cli {
    /// Configuration file (`section.key = value` lines).
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set grid.h=0.05`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PsiArg {
    Linear,
    Sqrt,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Suite {
    Gaveau,
    Equivalence,
    Comparison,
    Stability,
    Mass,
    TheoremA,
    TheoremB,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the configured problem.
    Solve,
    /// Solve with the truncation ladder `f.ladder`.
    SolveLp,
    /// Build the sub- and super-barrier and check the sandwich.
    Barriers,
    /// Empirical modulus of continuity of a field (solved if not given).
    Modulus {
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Hölder exponent fit of the empirical modulus.
    Exponent {
        #[arg(long)]
        field: Option<PathBuf>,
        /// Lower end of the fit range; defaults to `t_min_factor * h`.
        #[arg(long)]
        t_min: Option<f64>,
        /// Upper end of the fit range; defaults to 0.5.
        #[arg(long)]
        t_max: Option<f64>,
    },
    /// Run a verification suite; exit code 4 on FAIL.
    Verify { suite: Suite },
    /// The unit-ball example with boundary data `-psi(sqrt((1 + Re z_1) / 2))`.
    ExampleBall {
        #[arg(long, value_enum)]
        psi: PsiArg,
    },
}

/// Outcome of a command: exit code 0 on success, 4 on a FAIL verdict.
pub struct Outcome {
    pub code: i32,
    pub summary: String,
}

pub fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => parse_config_file(p)?,
        None => parse_config("")?,
    };
    let mut pairs = Vec::new();
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: 0, msg: format!("--set {o:?} is not KEY=VALUE") })?;
        pairs.push((k.trim(), v.trim()));
    }
    if !pairs.is_empty() {
        cfg = cfg.with_all(&pairs)?;
    }
    Ok(cfg)
}

struct Artifacts<'a> {
    dir: PathBuf,
    cfg: &'a RunConfig,
    command: String,
    written: Vec<PathBuf>,
}

impl<'a> Artifacts<'a> {
    fn new(cfg: &'a RunConfig, command: &str) -> Result<Self> {
        fs::create_dir_all(&cfg.output_dir)?;
        Ok(Self { dir: cfg.output_dir.clone(), cfg, command: command.into(), written: Vec::new() })
    }

    fn header_lines(&self) -> String {
        let mut s = format!("# shl-monge v{VERSION}\n# command = {}\n", self.command);
        for l in self.cfg.echo() {
            let _ = writeln!(s, "# config: {l}");
        }
        s
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, format!("{}{body}", self.header_lines()))?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let doc = json!({
            "version": VERSION,
            "command": self.command,
            "config": self.cfg.echo(),
            "report": value,
        });
        let path = self.dir.join(name);
        fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")?;
        self.written.push(path);
        Ok(())
    }

    fn field(&mut self, name: &str, field: &ScalarField, rep: Option<&SolverReport>) -> Result<()> {
        let path = self.dir.join(name);
        let header = FieldHeader {
            domain: self.cfg.domain_spec()?.kind.label(),
            directions: self.cfg.directions()?.descriptor(),
            tol: rep.map_or(0.0, |r| r.tol),
            iterations: rep.map_or(0, |r| r.iterations),
            config: std::iter::once(format!("command = {}", self.command)).chain(self.cfg.echo()).collect(),
        };
        write_field(&path, field, &header)?;
        self.written.push(path);
        Ok(())
    }

    fn modulus(&mut self, name: &str, curve: &ModulusCurve) -> Result<()> {
        let mut body = String::from("t,omega,majorant\n");
        for &(t, w) in &curve.samples {
            let _ = writeln!(body, "{t},{w},{}", curve.majorant(t));
        }
        self.text(name, &body)
    }

    fn verdict(&mut self, v: &Verdict) -> Result<()> {
        self.text("verdict.txt", &v.to_text())?;
        self.json("verdict.json", v)
    }
}

fn exponent_text(fit: &crate::analysis::ExponentFit) -> String {
    format!(
        "slope = {}\nintercept = {}\nresidual = {}\nt_min = {}\nt_max = {}\nsamples = {}\npair_budget = {}\n",
        fit.slope, fit.intercept, fit.residual, fit.t_range.0, fit.t_range.1, fit.samples, fit.pair_budget
    )
}

fn solved_field(cfg: &RunConfig, field: &Option<PathBuf>) -> Result<(ScalarField, Option<Solved>)> {
    match field {
        Some(p) => Ok((read_field(p)?.0, None)),
        None => {
            let s = verify::solve_config(cfg)?;
            Ok((s.u.clone(), Some(s)))
        }
    }
}

fn verdict_outcome(v: &Verdict) -> Outcome {
    Outcome { code: if v.pass { 0 } else { 4 }, summary: v.to_text() }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    if cli.threads > 0 {
        // a second call only fails if a pool already exists, which is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let cfg = load_config(cli)?;
    log::info!("directions: {}", cfg.directions()?.descriptor());
    let name = command_name(&cli.command);
    let mut art = Artifacts::new(&cfg, &name)?;
    let outcome = match &cli.command {
        Command::Solve => {
            let s = verify::solve_config(&cfg)?;
            art.field("solution.csv", &s.u, Some(&s.report))?;
            art.json("solve_report.json", &s.report)?;
            Outcome { code: 0, summary: solve_summary(&s.report) }
        }
        Command::SolveLp => {
            let problem = cfg.problem()?;
            let (u, ladder) = solve_lp(&problem, &cfg.f_ladder, &cfg.solver_config())?;
            art.field("solution.csv", &u, ladder.reports.last())?;
            art.json("ladder_report.json", &ladder)?;
            Outcome { code: 0, summary: format!("levels {:?}\ngaps {:?}\n", ladder.levels, ladder.gaps) }
        }
        Command::Barriers => {
            let s = verify::solve_config(&cfg)?;
            let b = verify::barriers_for(&s, &cfg)?;
            let tol = s.report.tol.max(s.report.value_residual);
            let sw = crate::barriers::sandwich(&b, &s.u, tol);
            art.field("solution.csv", &s.u, Some(&s.report))?;
            art.field("sub_barrier.csv", &b.lower, None)?;
            art.field("super_barrier.csv", &b.upper, None)?;
            art.json("barrier_report.json", &json!({ "sandwich": sw, "barriers": b.report }))?;
            Outcome {
                code: if sw.pass { 0 } else { 4 },
                summary: format!(
                    "{} lower - U <= {:e}, U - upper <= {:e}\n",
                    if sw.pass { "PASS" } else { "FAIL" },
                    sw.lower_excess,
                    sw.upper_excess
                ),
            }
        }
        Command::Modulus { field } => {
            let (u, _) = solved_field(&cfg, field)?;
            let curve = empirical_modulus(&u, &cfg.t_grid(diameter(&cfg)?), &cfg.pair_options())?;
            art.modulus("modulus.csv", &curve)?;
            Outcome { code: 0, summary: format!("{} samples, {} breakpoints\n", curve.samples.len(), curve.breakpoints.len()) }
        }
        Command::Exponent { field, t_min, t_max } => {
            let (u, _) = solved_field(&cfg, field)?;
            let lo = t_min.unwrap_or(cfg.t_min_factor * cfg.h);
            let hi = t_max.unwrap_or(0.5);
            if lo < 2.0 * u.grid.h * (1.0 - 1e-12) || !(hi > lo) {
                return Err(Error::Input(format!("fit range [{lo}, {hi}] must satisfy 2h <= t_min < t_max")));
            }
            let curve = empirical_modulus(&u, &crate::analysis::t_grid(lo, hi, cfg.t_points), &cfg.pair_options())?;
            let fit = fit_exponent(&curve, (lo, hi))?;
            art.modulus("modulus.csv", &curve)?;
            art.text("exponent.txt", &exponent_text(&fit))?;
            Outcome { code: 0, summary: exponent_text(&fit) }
        }
        Command::Verify { suite } => {
            let v = match suite {
                Suite::Gaveau => verify::gaveau_suite(100, 64, &cfg.ladder, cfg.direction_seed)?,
                Suite::Equivalence => verify::equivalence_suite(cfg.n, 200, &cfg.ladder, cfg.direction_seed)?,
                Suite::Comparison => verify::comparison_suite(&cfg)?,
                Suite::Stability => verify::stability_suite(&cfg, 5, cfg.analysis_seed)?,
                Suite::Mass => verify::mass_suite(&cfg)?,
                Suite::TheoremA => {
                    let out = verify::theorem_a_suite(&cfg)?;
                    art.field("solution.csv", &out.solved.u, Some(&out.solved.report))?;
                    art.modulus("modulus.csv", &out.theorem_a.u)?;
                    out.verdict
                }
                Suite::TheoremB => verify::theorem_b_suite(&cfg)?,
            };
            art.verdict(&v)?;
            verdict_outcome(&v)
        }
        Command::ExampleBall { psi } => {
            let psi = match psi {
                PsiArg::Linear => Psi::Linear,
                PsiArg::Sqrt => Psi::Sqrt,
            };
            let ex = verify::example_ball(&cfg, psi)?;
            art.field("solution.csv", &ex.solved.u, Some(&ex.solved.report))?;
            art.modulus("modulus.csv", &ex.modulus)?;
            let body = format!("{}sup_error = {}\n", exponent_text(&ex.fit), ex.sup_error);
            art.text("exponent.txt", &body)?;
            art.json("solve_report.json", &ex.solved.report)?;
            Outcome { code: 0, summary: body }
        }
    };
    let written = std::mem::take(&mut art.written);
    art.json(
        "run.json",
        &json!({ "artifacts": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(), "exit_code": outcome.code }),
    )?;
    Ok(outcome)
}

fn diameter(cfg: &RunConfig) -> Result<f64> {
    Ok(cfg.domain_spec()?.diameter)
}

fn solve_summary(r: &SolverReport) -> String {
    format!(
        "converged = {}\niterations = {}\nfinal_residual = {:e}\nvalue_residual = {:e}\nmonotonicity_violations = {}\nwall_time_s = {:.2}\n",
        r.converged, r.iterations, r.final_residual, r.value_residual, r.monotonicity_violations, r.wall_time_s
    )
}

fn command_name(c: &Command) -> String {
    match c {
        Command::Solve => "solve".into(),
        Command::SolveLp => "solve-lp".into(),
        Command::Barriers => "barriers".into(),
        Command::Modulus { .. } => "modulus".into(),
        Command::Exponent { .. } => "exponent".into(),
        Command::Verify { suite } => format!("verify {}", suite.to_possible_value().map_or("?".into(), |v| v.get_name().to_string())),
        Command::ExampleBall { psi } => {
            format!("example-ball --psi {}", psi.to_possible_value().map_or("?".into(), |v| v.get_name().to_string()))
        }
    }
}

/// Entry point of the binary: runs and maps errors to exit codes.
pub fn main_with(args: impl IntoIterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(o) => {
            print!("{}", o.summary);
            o.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Writes nothing; used by tests that only need the parsed command line.
pub fn parse_args(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
    Cli::try_parse_from(args)
}

//! `twostage` command-line interface.
//!
//! Every subcommand writes CSV. Numbers are formatted from library values
//! with six significant digits; no arithmetic happens here.

mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use twostage::bounds::conservative_lower_bound;
use twostage::curves::{aspect_ratio_panel, curve_points, rate_panel, rate_zoom_panel, PanelRow, SweepSpec};
use twostage::format::sig6;
use twostage::optimize::{optimize_scheme, Family, FirstStage, SearchLimits};
use twostage::simulate::{
    run_experiment, table1_preset_with_trials, write_summary_csv, write_trials_csv, TABLE1_TRIALS,
};
use twostage::theory;

use crate::config::SimConfig;

#[derive(Parser, Debug)]
#[command(name = "twostage", version, about = "Conservative two-stage group testing: theory, bounds and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Master seed for simulations
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file (theory/optimize/bounds) or directory (simulate/figure-data)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(flatten)]
    sweep: SweepArgs,
}

#[derive(Args, Debug, Default)]
struct SweepArgs {
    /// Single prevalence
    #[arg(long, global = true, conflicts_with_all = ["p_min", "p_max"])]
    p: Option<f64>,
    #[arg(long, global = true, requires = "p_max")]
    p_min: Option<f64>,
    #[arg(long, global = true, requires = "p_min")]
    p_max: Option<f64>,
    /// Number of grid points between --p-min and --p-max
    #[arg(long, global = true, default_value_t = 100)]
    steps: usize,
    /// Log-spaced grid
    #[arg(long, global = true)]
    log: bool,
}

impl SweepArgs {
    fn spec(&self) -> Result<Option<SweepSpec>> {
        let spec = match (self.p, self.p_min, self.p_max) {
            (Some(p), _, _) => SweepSpec::single(p),
            (None, Some(p_min), Some(p_max)) => SweepSpec { p_min, p_max, steps: self.steps, log: self.log },
            _ => return Ok(None),
        };
        spec.validate()?;
        Ok(Some(spec))
    }

    fn grid(&self) -> Result<Vec<f64>> {
        match self.spec()? {
            Some(spec) => Ok(spec.grid()?),
            None => bail!("give --p or --p-min/--p-max"),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a scheme's asymptotic expected tests per item
    Theory(TheoryArgs),
    /// Optimize a scheme family's parameters per prevalence
    Optimize {
        #[arg(long)]
        family: String,
    },
    /// Evaluate the counting, Ungar and two-stage lower bounds
    Bounds,
    /// Monte Carlo simulation from a JSON config or the p = 0.027 preset
    Simulate {
        /// Run the five-scheme p = 0.027 comparison
        #[arg(long, conflicts_with = "config")]
        table1: bool,
        /// Flat JSON config file
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Write the aspect-ratio, rate and zoomed-rate curve tables
    FigureData,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum TheoryScheme {
    Individual,
    Dorfman,
    Bernoulli,
    Ctpi,
    #[value(alias = "doubly-constant")]
    Dc,
    Mutesa,
}

#[derive(Args, Debug)]
struct TheoryArgs {
    #[arg(long, value_enum)]
    scheme: TheoryScheme,
    /// Tests per item
    #[arg(long)]
    r: Option<usize>,
    /// Items per test
    #[arg(long)]
    s: Option<usize>,
    /// Mean items per test (bernoulli, ctpi)
    #[arg(long)]
    sigma: Option<f64>,
    /// Stage-one tests per item (bernoulli)
    #[arg(long)]
    t1_frac: Option<f64>,
}

fn open_output(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => {
            Box::new(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn opt_usize(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(sig6).unwrap_or_default()
}

fn need<T>(v: Option<T>, flag: &str, scheme: &str) -> Result<T> {
    v.with_context(|| format!("--{flag} is required for --scheme {scheme}"))
}

fn cmd_theory(args: &TheoryArgs, grid: &[f64], mut out: impl Write) -> Result<()> {
    writeln!(out, "p,scheme,r,s,sigma,t1_frac,et_per_item,rate")?;
    for &p in grid {
        let (label, r, s, sigma, t1_frac, et) = match args.scheme {
            TheoryScheme::Individual => ("individual", None, None, None, None, 1.0),
            TheoryScheme::Dorfman => {
                let s = need(args.s, "s", "dorfman")?;
                ("dorfman", None, Some(s), None, None, theory::dorfman_et(s, p)?)
            }
            TheoryScheme::Bernoulli => {
                let sigma = need(args.sigma, "sigma", "bernoulli")?;
                let t1 = need(args.t1_frac, "t1-frac", "bernoulli")?;
                ("bernoulli", None, None, Some(sigma), Some(t1), theory::bernoulli_et(t1, sigma, p)?)
            }
            TheoryScheme::Ctpi => {
                let r = need(args.r, "r", "ctpi")?;
                let sigma = need(args.sigma, "sigma", "ctpi")?;
                ("ctpi", Some(r), None, Some(sigma), None, theory::ctpi_et(r, sigma, p)?)
            }
            TheoryScheme::Dc => {
                let r = need(args.r, "r", "dc")?;
                let s = need(args.s, "s", "dc")?;
                ("dc", Some(r), Some(s), None, None, theory::dc_et(r, s, p)?)
            }
            TheoryScheme::Mutesa => ("mutesa", None, None, None, None, theory::mutesa_asymptotic_et(p)?),
        };
        let rate = theory::rate(p, et)?;
        writeln!(
            out,
            "{},{label},{},{},{},{},{},{}",
            sig6(p),
            opt_usize(r),
            opt_usize(s),
            opt_f64(sigma),
            opt_f64(t1_frac),
            sig6(et),
            sig6(rate)
        )?;
    }
    Ok(())
}

fn cmd_optimize(family: Family, grid: &[f64], mut out: impl Write) -> Result<()> {
    writeln!(out, "p,family,first_stage,r,s,sigma,t1_frac,et_per_item,rate")?;
    let limits = SearchLimits::default();
    for &p in grid {
        let opt = optimize_scheme(family, p, &limits)?;
        let (r, s, sigma) = match opt.first_stage {
            FirstStage::None => (None, None, None),
            FirstStage::Dorfman { s } => (None, Some(s), None),
            FirstStage::Bernoulli { sigma, .. } => (None, None, Some(sigma)),
            FirstStage::Ctpi { r, sigma } => (Some(r), None, Some(sigma)),
            FirstStage::DoublyConstant { r, s } => (Some(r), Some(s), None),
        };
        let first_stage = if opt.first_stage.is_none() { "none" } else { family.label() };
        writeln!(
            out,
            "{},{},{first_stage},{},{},{},{},{},{}",
            sig6(p),
            family.label(),
            opt_usize(r),
            opt_usize(s),
            opt_f64(sigma),
            sig6(opt.first_stage.t1_frac()),
            sig6(opt.et_per_item),
            sig6(opt.rate)
        )?;
    }
    Ok(())
}

fn cmd_bounds(grid: &[f64], mut out: impl Write) -> Result<()> {
    writeln!(out, "p,counting,thm1,bound1,bound2,bound3,best,binding,rate_ceiling")?;
    for &p in grid {
        let b = conservative_lower_bound(p)?;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            sig6(p),
            sig6(b.counting),
            sig6(b.thm1_two_stage),
            opt_f64(b.bound1_ungar),
            sig6(b.bound2),
            sig6(b.bound3),
            sig6(b.best),
            b.binding,
            sig6(b.rate_ceiling)
        )?;
    }
    Ok(())
}

fn write_file(dir: &Path, name: &str, write: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<()> {
    let path = dir.join(name);
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    write(&mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_simulate(
    table1: bool,
    config: Option<&Path>,
    trials: Option<usize>,
    seed: Option<u64>,
    out_dir: &Path,
) -> Result<()> {
    if trials == Some(0) {
        bail!("--trials must be at least 1");
    }
    let experiments = if table1 {
        table1_preset_with_trials(seed.unwrap_or(1), trials.unwrap_or(TABLE1_TRIALS))?
    } else if let Some(path) = config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: SimConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let trials = trials.unwrap_or(cfg.trials);
        if trials == 0 {
            bail!("trials must be at least 1");
        }
        let scheme = cfg.scheme()?;
        let prior = cfg.prior();
        vec![run_experiment(&scheme, &prior, cfg.n, cfg.mode, trials, seed.unwrap_or(cfg.seed))?]
    } else {
        bail!("give --table1 or --config <file>");
    };
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write_file(out_dir, "trials.csv", |w| write_trials_csv(w, &experiments))?;
    let summaries: Vec<_> = experiments.iter().map(|e| &e.summary).collect();
    write_file(out_dir, "summary.csv", |w| write_summary_csv(w, &summaries))?;
    Ok(())
}

fn write_panel(w: &mut impl Write, rows: &[PanelRow]) -> io::Result<()> {
    writeln!(w, "p,series,value")?;
    for r in rows {
        writeln!(w, "{},{},{}", sig6(r.p), r.series, sig6(r.value))?;
    }
    Ok(())
}

fn cmd_figure_data(sweep: Option<SweepSpec>, out_dir: &Path) -> Result<()> {
    let limits = SearchLimits::default();
    let main = curve_points(&sweep.unwrap_or_else(SweepSpec::default_figure).grid()?, &limits)?;
    let zoom = curve_points(&SweepSpec::default_zoom().grid()?, &limits)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write_file(out_dir, "aspect_ratio.csv", |w| write_panel(w, &aspect_ratio_panel(&main)))?;
    write_file(out_dir, "rate.csv", |w| write_panel(w, &rate_panel(&main)))?;
    write_file(out_dir, "rate_zoom.csv", |w| write_panel(w, &rate_zoom_panel(&zoom)))?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Theory(args) => {
            let grid = cli.sweep.grid()?;
            let mut w = open_output(out)?;
            cmd_theory(args, &grid, &mut w)?;
            w.flush()?;
        }
        Command::Optimize { family } => {
            let family: Family = family.parse()?;
            let grid = cli.sweep.grid()?;
            let mut w = open_output(out)?;
            cmd_optimize(family, &grid, &mut w)?;
            w.flush()?;
        }
        Command::Bounds => {
            let grid = cli.sweep.grid()?;
            let mut w = open_output(out)?;
            cmd_bounds(&grid, &mut w)?;
            w.flush()?;
        }
        Command::Simulate { table1, config, trials } => {
            cmd_simulate(*table1, config.as_deref(), *trials, cli.seed, out.unwrap_or(Path::new(".")))?;
        }
        Command::FigureData => cmd_figure_data(cli.sweep.spec()?, out.unwrap_or(Path::new(".")))?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

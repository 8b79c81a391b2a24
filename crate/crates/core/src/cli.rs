//! Command-line front end. `main.rs` only forwards to [`run`].

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::harvest::{self, HarvestParams, Method, SweepRange, SweepRow};
use crate::phase_space::{mana, DensityMatrix};
use crate::quadrature::{EpsilonSchedule, QuadratureSpec};
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Smallest regulator exponent: the first level is `eps = sigma_t / 2^4`.
const EPS_FIRST_LEVEL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "magic-harvest", version, about = "Mana harvested by a qutrit detector from the scalar vacuum")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mana of a density matrix stored as JSON
    Mana { state_file: PathBuf },
    /// One pipeline run
    Harvest {
        #[command(flatten)]
        gap: GapArgs,
        #[command(flatten)]
        numerics: NumericArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Mana per lambda^2 over a grid of omega * sigma_t
    Sweep {
        #[arg(long, default_value_t = 0.0)]
        min: f64,
        #[arg(long, default_value_t = 5.0)]
        max: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long = "sigma-t", default_value_t = 1.0)]
        sigma_t: f64,
        #[command(flatten)]
        numerics: NumericArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// omega * sigma_t that maximizes the harvested mana
    Optimize {
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
    },
    /// Run the acceptance checks
    Verify,
}

#[derive(Debug, Args)]
pub struct GapArgs {
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    /// Common value of both energy gaps
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long = "sigma-t", default_value_t = 1.0)]
    pub sigma_t: f64,
    /// Sets omega to this value and sigma_t to 1
    #[arg(long = "omega-sigma")]
    pub omega_sigma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct NumericArgs {
    #[arg(long, value_enum, default_value = "closed")]
    pub method: Method,
    /// Number of regulators sigma_t / 2^k, k = 4, 5, ...
    #[arg(long = "eps-levels", default_value_t = 7, value_parser = clap::value_parser!(u8).range(3..=24))]
    pub eps_levels: u8,
    /// Absolute quadrature tolerance per regulated integral
    #[arg(long, default_value_t = QuadratureSpec::default().abs_tol)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write here instead of standard output
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl NumericArgs {
    fn apply(&self, p: HarvestParams) -> Result<HarvestParams> {
        let spec = QuadratureSpec {
            abs_tol: self.tol,
            ..QuadratureSpec::default()
        };
        let last = EPS_FIRST_LEVEL + i32::from(self.eps_levels) - 1;
        Ok(p.with_quadrature(spec)?
            .with_eps(EpsilonSchedule::dyadic(EPS_FIRST_LEVEL, last)))
    }
}

impl GapArgs {
    fn params(&self) -> Result<HarvestParams> {
        match self.omega_sigma {
            Some(x) => HarvestParams::from_omega_sigma(self.lambda, x),
            None => HarvestParams::new(self.lambda, self.omega, self.sigma_t),
        }
    }
}

/// Parses `args` (program name first), executes, and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
                return EXIT_OK;
            }
            let _ = write!(err, "{text}");
            return EXIT_PARSE;
        }
    };
    match execute(&config.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        e if e.is_parse() => EXIT_PARSE,
        _ => EXIT_INVARIANT,
    }
}

fn execute(command: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Mana { state_file } => {
            let text = std::fs::read_to_string(state_file)?;
            let rho = DensityMatrix::from_json(&text)?;
            let m = mana(&rho)?;
            // rounding noise must not print as "-0.000000000000"
            let m = if m.abs() < 5e-13 { 0.0 } else { m };
            writeln!(out, "{m:.12}")?;
        }
        Command::Harvest { gap, numerics, output } => {
            let p = numerics.apply(gap.params()?)?;
            let result = harvest::run_pipeline(&p, numerics.method)?;
            for w in &result.diagnostics.warnings {
                writeln!(err, "warning: {w}")?;
            }
            emit(output, Format::Json, out, |w, format| match format {
                Format::Json => Ok(writeln!(w, "{}", result.to_json())?),
                Format::Csv => harvest::write_csv(&[SweepRow::from_result(&result)], w),
            })?;
        }
        Command::Sweep { min, max, steps, lambda, sigma_t, numerics, output } => {
            let range = SweepRange::new(*min, *max, *steps)?;
            let base = numerics.apply(HarvestParams::new(*lambda, 1.0 / sigma_t, *sigma_t)?)?;
            let rows = harvest::sweep(&range, &base, numerics.method)?;
            emit(output, Format::Csv, out, |w, format| match format {
                Format::Csv => harvest::write_csv(&rows, w),
                Format::Json => Ok(writeln!(w, "{}", rows_json(&rows))?),
            })?;
        }
        Command::Optimize { lambda } => {
            let opt = harvest::optimize(*lambda)?;
            writeln!(out, "x_star = {:.12}", opt.x_star)?;
            writeln!(out, "mana_star = {:.12e}", opt.mana_star)?;
            writeln!(out, "mana_star_per_lambda2 = {:.12e}", opt.mana_star_per_lambda2)?;
        }
        Command::Verify => {
            let report = verify::run_all()?;
            writeln!(out, "{report}")?;
            if !report.all_passed() {
                for c in report.failing() {
                    writeln!(err, "criterion {} failed: {}", c.id, c.name)?;
                }
                return Ok(EXIT_VERIFY);
            }
        }
    }
    Ok(EXIT_OK)
}

fn rows_json(rows: &[SweepRow]) -> String {
    // NaN has no JSON literal; serde_json writes it as null
    serde_json::to_string_pretty(rows).expect("numeric rows serialize")
}

fn emit(
    args: &OutputArgs,
    default: Format,
    stdout: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write, Format) -> Result<()>,
) -> Result<()> {
    let format = args.format.unwrap_or(default);
    match &args.output {
        Some(path) => {
            let mut w = BufWriter::new(create(path)?);
            body(&mut w, format)?;
            w.flush()?;
        }
        None => body(stdout, format)?,
    }
    Ok(())
}

fn create(path: &Path) -> io::Result<File> {
    File::create(path)
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

//! `nncalc` command-line front end.
//!
//! Every command produces a [`Table`] plus a [`RunManifest`]. CSV goes to
//! stdout or `--out` (with a `<out>.manifest.json` sidecar); JSON embeds the
//! manifest. Exit codes: 0 success, 1 verification failure, 2 usage error.

pub mod config;
pub mod output;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nncalc::bell::{self, ChshSettings, McConfig, Outcome};
use nncalc::calculus::{self, QuadratureConfig};
use nncalc::generator::BUILTIN_NAMES;
use nncalc::Generator;
use thiserror::Error;

use config::FileConfig;
use output::{Cell, Format, RunManifest, Table};

/// Largest `|integral − closed form|` accepted by `probabilities`.
pub const PROBABILITY_TOLERANCE: f64 = 1e-8;
/// Standard errors allowed by `mc-verify`.
pub const MC_SIGMAS: f64 = 5.0;
/// Absolute slack on the Monte-Carlo comparison for closed forms that are
/// zero analytically but not in floating point (e.g. ½cos²(π/2)).
pub const MC_ABS_SLACK: f64 = 1e-12;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] nncalc::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "nncalc",
    version,
    about = "Non-Newtonian calculus and singlet-state hidden-variable model"
)]
pub struct Cli {
    /// Generator name: paper-sin2 or identity
    #[arg(long, global = true)]
    pub generator: Option<String>,
    /// Absolute r-domain quadrature tolerance
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output here (atomically) instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Monte-Carlo seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// key = value file with generator/tolerance/format/seed
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integral-backed and closed-form joint probabilities over β−α ∈ [0, π]
    Probabilities {
        #[arg(long, default_value_t = 37)]
        grid_points: usize,
    },
    /// Correlators and the CHSH combination S
    #[command(allow_negative_numbers = true)]
    Chsh {
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long, default_value_t = FRAC_PI_2)]
        a_prime: f64,
        #[arg(long, default_value_t = FRAC_PI_4)]
        b: f64,
        #[arg(long, default_value_t = 3.0 * FRAC_PI_4)]
        b_prime: f64,
    },
    /// Ordinary vs deformed linearity of the integral for a = b = ρ on [x1', x2']
    #[command(allow_negative_numbers = true)]
    LinearityDemo {
        #[arg(long, default_value_t = 0.0)]
        x1: f64,
        #[arg(long, default_value_t = FRAC_PI_2)]
        x2: f64,
    },
    /// Table of x, f(x), f⁻¹(x)
    #[command(allow_negative_numbers = true)]
    GeneratorDump {
        #[arg(long, default_value_t = -1.0)]
        lo: f64,
        #[arg(long, default_value_t = 2.0)]
        hi: f64,
        #[arg(long, default_value_t = 121)]
        points: usize,
    },
    /// Monte-Carlo frequencies against the closed forms
    #[command(allow_negative_numbers = true)]
    McVerify {
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// Comma-separated β−α values [default: 0, π/4, π/2, 3π/4, π]
        #[arg(long, value_delimiter = ',')]
        angles: Vec<f64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Probabilities { .. } => "probabilities",
            Command::Chsh { .. } => "chsh",
            Command::LinearityDemo { .. } => "linearity-demo",
            Command::GeneratorDump { .. } => "generator-dump",
            Command::McVerify { .. } => "mc-verify",
        }
    }
}

/// Result of one command before it is written out.
#[derive(Debug, Clone)]
pub struct Report {
    pub table: Table,
    pub manifest: RunManifest,
    pub verified: bool,
}

/// Flags merged over the config file.
#[derive(Debug, Clone)]
pub struct Settings {
    pub generator: Generator,
    pub quadrature: QuadratureConfig,
    pub format: Format,
    pub seed: Option<u64>,
}

pub fn resolve_settings(cli: &Cli) -> Result<Settings, CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let name = cli
        .generator
        .clone()
        .or(file.generator)
        .unwrap_or_else(|| "paper-sin2".to_string());
    let generator = Generator::by_name(&name).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown generator {name:?}; expected one of {}",
            BUILTIN_NAMES.join(", ")
        ))
    })?;
    let mut quadrature = QuadratureConfig::default();
    if let Some(tol) = cli.tolerance.or(file.tolerance) {
        quadrature.tolerance = tol;
    }
    quadrature
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(Settings {
        generator,
        quadrature,
        format: cli.format.or(file.format).unwrap_or(Format::Csv),
        seed: cli.seed.or(file.seed),
    })
}

pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    let settings = resolve_settings(cli)?;
    let gen = &settings.generator;
    let cfg = &settings.quadrature;
    let mut manifest = RunManifest::new(cli.command.name(), gen.name(), *cfg);
    let (table, verified) = match &cli.command {
        Command::Probabilities { grid_points } => probabilities(gen, cfg, *grid_points)?,
        Command::Chsh {
            a,
            a_prime,
            b,
            b_prime,
        } => {
            let settings = ChshSettings {
                a: *a,
                a_prime: *a_prime,
                b: *b,
                b_prime: *b_prime,
            };
            (chsh(gen, cfg, settings)?, true)
        }
        Command::LinearityDemo { x1, x2 } => (linearity_demo(gen, cfg, *x1, *x2)?, true),
        Command::GeneratorDump { lo, hi, points } => {
            (generator_dump(gen, *lo, *hi, *points)?, true)
        }
        Command::McVerify { samples, angles } => {
            let seed = settings.seed.unwrap_or(DEFAULT_SEED);
            manifest.seed = Some(seed);
            manifest.mc_algorithm = Some(bell::MC_ALGORITHM.to_string());
            mc_verify(gen, *samples, seed, angles)?
        }
    };
    Ok(Report {
        table,
        manifest,
        verified,
    })
}

pub fn probabilities(
    gen: &Generator,
    cfg: &QuadratureConfig,
    grid_points: usize,
) -> Result<(Table, bool), CliError> {
    if grid_points < 2 {
        return Err(CliError::Usage("--grid-points must be at least 2".into()));
    }
    let mut columns = vec!["delta".to_string()];
    for o in Outcome::ALL {
        let tag = outcome_tag(o);
        columns.push(format!("p_{tag}_integral"));
        columns.push(format!("p_{tag}_closed"));
    }
    columns.push("max_abs_diff".into());
    let mut table = Table::new(columns);
    let mut verified = true;
    for i in 0..grid_points {
        let delta = PI * i as f64 / (grid_points - 1) as f64;
        let mut row = vec![Cell::from(delta)];
        let mut worst: f64 = 0.0;
        for o in Outcome::ALL {
            let integral = bell::joint_probability(gen, o, 0.0, delta, cfg)?;
            let closed = bell::joint_probability_closed(o, 0.0, delta);
            worst = worst.max((integral - closed).abs());
            row.push(integral.into());
            row.push(closed.into());
        }
        verified &= worst <= PROBABILITY_TOLERANCE;
        row.push(worst.into());
        table.push(row);
    }
    Ok((table, verified))
}

fn outcome_tag(o: Outcome) -> &'static str {
    match o {
        Outcome::PlusPlus => "pp",
        Outcome::PlusMinus => "pm",
        Outcome::MinusPlus => "mp",
        Outcome::MinusMinus => "mm",
    }
}

pub fn chsh(
    gen: &Generator,
    cfg: &QuadratureConfig,
    settings: ChshSettings,
) -> Result<Table, CliError> {
    let r = bell::chsh(gen, settings, cfg)?;
    let ChshSettings {
        a,
        a_prime,
        b,
        b_prime,
    } = settings;
    let mut table = Table::new(["quantity", "alpha", "beta", "value"]);
    let labels = [
        ("E(a,b)", a, b),
        ("E(a,b')", a, b_prime),
        ("E(a',b)", a_prime, b),
        ("E(a',b')", a_prime, b_prime),
    ];
    for ((label, alpha, beta), e) in labels.into_iter().zip(r.correlators) {
        table.push(vec![label.into(), alpha.into(), beta.into(), e.into()]);
    }
    table.push(vec!["S".into(), "".into(), "".into(), r.s_value.into()]);
    Ok(table)
}

pub fn linearity_demo(
    gen: &Generator,
    cfg: &QuadratureConfig,
    x1: f64,
    x2: f64,
) -> Result<Table, CliError> {
    if x1.is_nan() || x2.is_nan() || x1 >= x2 {
        return Err(CliError::Usage(format!(
            "linearity-demo needs x1 < x2, got {x1} and {x2}"
        )));
    }
    let rho = bell::density_value(gen)?;
    let gap = calculus::linearity_gap(
        gen,
        |_| rho,
        |_| rho,
        gen.inverse(x1)?,
        gen.inverse(x2)?,
        cfg,
    )?;
    let mut table = Table::new(["quantity", "value"]);
    for (name, v) in [
        ("integral_of_sum", gap.integral_of_sum),
        ("sum_of_integrals", gap.sum_of_integrals),
        ("gap_ordinary", gap.gap_ordinary),
        ("integral_of_oplus", gap.integral_of_oplus),
        ("oplus_of_integrals", gap.oplus_of_integrals),
        ("gap_deformed", gap.gap_deformed),
    ] {
        table.push(vec![name.into(), v.into()]);
    }
    Ok(table)
}

pub fn generator_dump(gen: &Generator, lo: f64, hi: f64, points: usize) -> Result<Table, CliError> {
    if points < 2 || lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(CliError::Usage(
            "generator-dump needs --points >= 2 and --lo < --hi".into(),
        ));
    }
    let mut table = Table::new(["x", "f", "f_inv"]);
    for i in 0..points {
        let x = if i + 1 == points {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (points - 1) as f64
        };
        table.push(vec![
            x.into(),
            gen.forward(x)?.into(),
            gen.inverse(x)?.into(),
        ]);
    }
    Ok(table)
}

pub fn default_mc_angles() -> Vec<f64> {
    vec![0.0, FRAC_PI_4, FRAC_PI_2, 3.0 * FRAC_PI_4, PI]
}

pub fn mc_verify(
    gen: &Generator,
    samples: u64,
    seed: u64,
    angles: &[f64],
) -> Result<(Table, bool), CliError> {
    let mc = McConfig::new(samples, seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let angles = if angles.is_empty() {
        default_mc_angles()
    } else {
        angles.to_vec()
    };
    let mut table = Table::new([
        "outcome",
        "delta",
        "mc_value",
        "closed_value",
        "abs_diff",
        "sigma_bound",
    ]);
    let mut verified = true;
    for &delta in &angles {
        for o in Outcome::ALL {
            let est = bell::mc_estimate(gen, o, 0.0, delta, &mc)?;
            let closed = bell::joint_probability_closed(o, 0.0, delta);
            let bound = bell::mc_tolerance(gen, o, 0.0, delta, samples, MC_SIGMAS)?;
            let diff = (est.value - closed).abs();
            verified &= diff <= bound + MC_ABS_SLACK;
            table.push(vec![
                o.to_string().into(),
                delta.into(),
                est.value.into(),
                closed.into(),
                diff.into(),
                bound.into(),
            ]);
        }
    }
    Ok((table, verified))
}

/// Serializes a report and writes it to `out` or stdout.
pub fn emit(report: &Report, format: Format, out: Option<&PathBuf>) -> Result<(), CliError> {
    let bytes = match format {
        Format::Csv => report.table.to_csv()?,
        Format::Json => report.table.to_json(&report.manifest)?,
    };
    match out {
        Some(path) => {
            output::write_atomic(path, &bytes)?;
            if format == Format::Csv {
                let mut manifest = serde_json::to_vec_pretty(&report.manifest)?;
                manifest.push(b'\n');
                output::write_atomic(&output::manifest_path(path), &manifest)?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

pub fn run(cli: Cli) -> ExitCode {
    let result = execute(&cli).and_then(|report| {
        let format = resolve_settings(&cli)?.format;
        emit(&report, format, cli.out.as_ref())?;
        Ok(report.verified)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("nncalc: verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("nncalc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper() -> Generator {
        Generator::paper_sin2()
    }

    #[test]
    fn probabilities_rows() {
        let (t, ok) = probabilities(&paper(), &QuadratureConfig::default(), 3).unwrap();
        assert!(ok);
        assert_eq!(t.rows.len(), 3);
        // β−α = π/2 in the middle row
        let Cell::Num(pp) = t.rows[1][1] else {
            panic!()
        };
        let Cell::Num(pp_closed) = t.rows[1][2] else {
            panic!()
        };
        assert!((pp - 0.25).abs() < 1e-10 && (pp_closed - 0.25).abs() < 1e-15);
        let Cell::Num(pm) = t.rows[0][3] else {
            panic!()
        };
        assert!((pm - 0.5).abs() < 1e-10);
    }

    #[test]
    fn probabilities_rejects_tiny_grid() {
        assert!(matches!(
            probabilities(&paper(), &QuadratureConfig::default(), 1),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn linearity_demo_requires_ordered_bounds() {
        assert!(matches!(
            linearity_demo(&paper(), &QuadratureConfig::default(), 1.0, 1.0),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn generator_dump_hits_fixed_points() {
        let t = generator_dump(&paper(), 0.0, 1.0, 5).unwrap();
        let Cell::Num(x) = t.rows[1][0] else { panic!() };
        let Cell::Num(fx) = t.rows[1][1] else {
            panic!()
        };
        let Cell::Num(fix) = t.rows[1][2] else {
            panic!()
        };
        assert_eq!(x, 0.25);
        assert!((fx - 0.25).abs() < 1e-13 && (fix - 0.25).abs() < 1e-13);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(nncalc::Error::Overflow("t")).exit_code(), 1);
    }
}

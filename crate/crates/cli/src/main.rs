//! `hkernel`: generate, inspect, factor and verify Hermite-coefficient kernels.
//!
//! Exit codes: 0 on success, 1 when a verification check fails, 2 on usage
//! or format errors.

mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use hkernel::factorization::{
    factor_beurling, factor_diagonal_sqrt, factor_flat_beurling, factor_flat_roumieu, factor_roumieu,
    FactorizationResult, RateChoice,
};
use hkernel::generators::{GeneratorSpec, Shape, RNG_NAME};
use hkernel::io::{read_kernel, write_kernel, Metadata};
use hkernel::kernel_ops::compose;
use hkernel::spectral::{effective_dimension, fit_decay, schatten_norm, singular_values, DecayLawSpec, FittedLaw};
use hkernel::weights::{fit_class, ClassKind, Exponent, DEFAULT_SIGMA_GRID, DEFAULT_S_GRID};
use hkernel::{ClassEstimate, KernelMatrix};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Lib(#[from] hkernel::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "hkernel", version, about = "Hermite-coefficient kernel toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a kernel from a spec such as "semigroup:t=0.5" or "random:exp:s=1:r=2:seed=42".
    Gen {
        spec: String,
        #[arg(short, long)]
        output: PathBuf,
        /// Input dimension d1 (also d2 unless --d-out is given).
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Input truncation degree N1 (also N2 unless --n-out is given).
        #[arg(long, default_value_t = hkernel::generators::PRESET_DEGREE)]
        degree: usize,
        #[arg(long)]
        d_out: Option<usize>,
        #[arg(long)]
        n_out: Option<usize>,
    },
    /// Estimate the coefficient decay class.
    Analyze {
        input: PathBuf,
        /// Comma-separated s values for the exponential classes.
        #[arg(long, value_delimiter = ',')]
        s_grid: Option<Vec<f64>>,
        /// Comma-separated sigma values for the flat classes.
        #[arg(long, value_delimiter = ',')]
        sigma_grid: Option<Vec<f64>>,
        /// Also try the Beurling variants of each grid point.
        #[arg(long)]
        beurling: bool,
    },
    /// Factor a kernel; factors are written as PREFIX.k1.json, [PREFIX.k0.json,] PREFIX.k2.json.
    Factor {
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: FactorMode,
        /// Gevrey index s (roumieu, beurling).
        #[arg(long)]
        s: Option<f64>,
        /// Flat index sigma (flat-r, flat-b, diag-sqrt).
        #[arg(long)]
        sigma: Option<f64>,
        /// Rate for roumieu and flat-r: a number or "auto".
        #[arg(long, default_value = "auto")]
        rate: String,
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Singular values as "k,sigma" CSV, with optional Schatten norm and decay fit.
    ///
    /// With -o the CSV goes to the file and the summary to stdout; otherwise
    /// the CSV goes to stdout and the summary to stderr.
    Spectrum {
        input: PathBuf,
        #[arg(long)]
        schatten: Option<String>,
        /// Decay law such as "exp:d=1:s=0.5", "flat:sigma=1" or "poly".
        #[arg(long)]
        fit: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write LEFT ∘ RIGHT (RIGHT acts first).
    Compose {
        left: PathBuf,
        right: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run an invariant suite and print a JSON report.
    Verify {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FactorMode {
    Roumieu,
    Beurling,
    FlatR,
    FlatB,
    DiagSqrt,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Factor,
    Spectral,
    Norms,
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> CliResult<ExitCode> {
    match cmd {
        Command::Gen {
            spec,
            output,
            dim,
            degree,
            d_out,
            n_out,
        } => {
            let shape = Shape {
                d_in: dim,
                n_in: degree,
                d_out: d_out.unwrap_or(dim),
                n_out: n_out.unwrap_or(degree),
            };
            cmd_gen(&spec, shape, &output)?;
        }
        Command::Analyze {
            input,
            s_grid,
            sigma_grid,
            beurling,
        } => {
            let s_grid = s_grid.unwrap_or_else(|| DEFAULT_S_GRID.to_vec());
            let sigma_grid = sigma_grid.unwrap_or_else(|| DEFAULT_SIGMA_GRID.to_vec());
            let mut candidates = Vec::new();
            for &s in &s_grid {
                candidates.push(ClassKind::Roumieu(s));
                if beurling {
                    candidates.push(ClassKind::Beurling(s));
                }
            }
            for &s in &sigma_grid {
                candidates.push(ClassKind::FlatRoumieu(s));
                if beurling {
                    candidates.push(ClassKind::FlatBeurling(s));
                }
            }
            candidates.push(ClassKind::Schwartz);
            print!("{}", cmd_analyze(&read_kernel(&input)?, &candidates)?);
        }
        Command::Factor {
            input,
            mode,
            s,
            sigma,
            rate,
            out_prefix,
        } => {
            let k = read_kernel(&input)?;
            let res = cmd_factor(&k, mode, s, sigma, &rate)?;
            println!("{}", write_factors(&res, &out_prefix)?);
        }
        Command::Spectrum {
            input,
            schatten,
            fit,
            output,
        } => {
            let (csv, summary) = cmd_spectrum(&read_kernel(&input)?, schatten.as_deref(), fit.as_deref())?;
            match output {
                Some(path) => {
                    fs::write(&path, csv).map_err(|source| CliError::Io { path, source })?;
                    print!("{summary}");
                }
                None => {
                    print!("{csv}");
                    eprint!("{summary}");
                }
            }
        }
        Command::Compose { left, right, output } => {
            let k = compose(&read_kernel(&left)?, &read_kernel(&right)?)?;
            write_kernel(&output, &k, None)?;
        }
        Command::Verify { input, suite } => {
            let report = verify::run(&read_kernel(&input)?, suite)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report.to_json()).expect("report serializes")
            );
            if !report.all_passed() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen(spec: &str, shape: Shape, output: &Path) -> CliResult<()> {
    let parsed: GeneratorSpec = spec.parse()?;
    let k = parsed.generate(shape)?;
    let seed = match parsed {
        GeneratorSpec::RandomClass { seed, .. } => Some(seed),
        _ => None,
    };
    let meta = Metadata {
        generator: Some(parsed.to_string()),
        seed,
        rng: seed.map(|_| RNG_NAME.to_string()),
    };
    write_kernel(output, &k, Some(meta))?;
    Ok(())
}

fn estimate_lines(e: &ClassEstimate) -> String {
    format!(
        "class: {}\nrate: {}\nresidual: {}\nsup_constant: {}\nsup_at: {},{}\nmember: {}\npoints: {}\n",
        e.class, e.rate, e.residual, e.sup_constant, e.sup_at.0, e.sup_at.1, e.member, e.points
    )
}

fn cmd_analyze(k: &KernelMatrix, candidates: &[ClassKind]) -> CliResult<String> {
    let est = fit_class(k, candidates)?;
    let mut out = format!(
        "shape: d1={} N1={} d2={} N2={}\neffective_dimension: {}\n",
        k.d_in(),
        k.n_in(),
        k.d_out(),
        k.n_out(),
        effective_dimension(k)
    );
    out.push_str(&estimate_lines(&est));
    Ok(out)
}

fn parse_rate(raw: &str) -> CliResult<RateChoice> {
    if raw == "auto" {
        return Ok(RateChoice::Auto);
    }
    raw.parse::<f64>()
        .map(RateChoice::Fixed)
        .map_err(|_| CliError::Usage(format!("--rate expects a number or \"auto\", got {raw:?}")))
}

fn required(v: Option<f64>, flag: &str, mode: &str) -> CliResult<f64> {
    v.ok_or_else(|| CliError::Usage(format!("mode {mode} needs --{flag}")))
}

fn cmd_factor(
    k: &KernelMatrix,
    mode: FactorMode,
    s: Option<f64>,
    sigma: Option<f64>,
    rate: &str,
) -> CliResult<FactorizationResult> {
    let res = match mode {
        FactorMode::Roumieu => factor_roumieu(k, required(s, "s", "roumieu")?, parse_rate(rate)?)?,
        FactorMode::Beurling => factor_beurling(k, required(s, "s", "beurling")?)?,
        FactorMode::FlatR => factor_flat_roumieu(k, required(sigma, "sigma", "flat-r")?, parse_rate(rate)?)?,
        FactorMode::FlatB => factor_flat_beurling(k, required(sigma, "sigma", "flat-b")?)?,
        FactorMode::DiagSqrt => factor_diagonal_sqrt(k, required(sigma, "sigma", "diag-sqrt")?)?,
    };
    Ok(res)
}

fn write_factors(res: &FactorizationResult, prefix: &Path) -> CliResult<String> {
    let names: &[&str] = match res.factors.len() {
        2 => &["k1", "k2"],
        3 => &["k1", "k0", "k2"],
        n => return Err(CliError::Usage(format!("unexpected factor count {n}"))),
    };
    let mut factors = Vec::new();
    for (i, (f, name)) in res.factors.iter().zip(names).enumerate() {
        let mut path = prefix.as_os_str().to_owned();
        path.push(format!(".{name}.json"));
        let path = PathBuf::from(path);
        write_kernel(&path, f, None)?;
        let est = res.estimates[i].as_ref().map(
            |e| json!({ "class": e.class.to_string(), "rate": e.rate, "residual": e.residual, "member": e.member }),
        );
        factors.push(json!({
            "name": name,
            "file": path.display().to_string(),
            "estimate": est,
            "hermite_diagonal": res.diagonal[i],
        }));
    }
    let report = json!({ "residual": res.residual, "factors": factors });
    Ok(serde_json::to_string_pretty(&report).expect("report serializes"))
}

fn cmd_spectrum(k: &KernelMatrix, schatten: Option<&str>, fit: Option<&str>) -> CliResult<(String, String)> {
    let spec = singular_values(k)?;
    let mut summary = String::new();
    if let Some(p) = schatten {
        let p: Exponent = p.parse()?;
        summary.push_str(&format!("schatten: {}\n", schatten_norm(&spec, p)));
    }
    if let Some(law) = fit {
        let law: DecayLawSpec = law.parse()?;
        let fit = fit_decay(&spec, law.resolve(k))?;
        let body = match fit.law {
            FittedLaw::ExpPower { c, constant, exponent } => {
                format!("law=exp c={c} constant={constant} exponent={exponent}")
            }
            FittedLaw::FlatFactorial {
                base,
                constant,
                exponent,
            } => format!("law=flat base={base} constant={constant} exponent={exponent}"),
            FittedLaw::Polynomial { order, constant } => format!("law=poly order={order} constant={constant}"),
        };
        summary.push_str(&format!(
            "fit: {body} residual={} points={} member={}\n",
            fit.residual, fit.points, fit.member
        ));
    }
    Ok((spec.to_csv(), summary))
}

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rankone_cli::config::{Analysis, FitStep, Ratio};
use rankone_cli::report::{to_csv, to_json, to_text};
use rankone_cli::{run, ConfigError, Report, RunConfig, SpecConfig};

const EXIT_CONFIG: u8 = 2;
const EXIT_ANALYSIS: u8 = 3;

#[derive(Parser)]
#[command(name = "rankone", version, about = "Finite-depth analysis of rank-one constructions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Directory for report files; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Replaces the depth of every analysis.
    #[arg(long, global = true)]
    depth_override: Option<usize>,
    /// Worker threads for independent analyses.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args)]
struct Source {
    /// `chacon`, `example51`, `dyadic`, `k_adic:K`, `cyclic_embedding:K` or `afp:BASE`.
    #[arg(long, default_value = "example51")]
    preset: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run every analysis of a TOML config.
    Analyze {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print v_0..v_depth, one 0/1 line per stage.
    Word {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        depth: usize,
    },
    /// Tower heights h_0..h_depth.
    Heights {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        depth: usize,
    },
    /// Cyclic-factor scan for every 2 <= k <= k_max.
    ProbeTe {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        k_max: u64,
        #[arg(long, default_value = "1/10")]
        eta: String,
        #[arg(long, default_value_t = 0)]
        start: usize,
        #[arg(long)]
        depth: usize,
    },
    /// Window condition for a factor onto Z/kZ.
    CheckCyclic {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        eta: String,
        #[arg(long, default_value_t = 0)]
        start: usize,
        #[arg(long)]
        depth: usize,
    },
    /// Window condition on every probe modulus of an odometer.
    CheckOdometer {
        #[command(flatten)]
        source: Source,
        /// Supernatural number such as `2^inf,3^1`; the preset's own target by default.
        #[arg(long)]
        target: Option<String>,
        /// Comma-separated moduli; the target's prime-power ladder by default.
        #[arg(long, value_delimiter = ',')]
        probes: Option<Vec<u64>>,
        #[arg(long)]
        eta: String,
        #[arg(long, default_value_t = 0)]
        start: usize,
        #[arg(long)]
        depth: usize,
    },
    /// Odometer factor plus residue-class fits of the bases B_l.
    CheckIso {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        target: Option<String>,
        #[arg(long, value_delimiter = ',')]
        probes: Option<Vec<u64>>,
        #[arg(long)]
        eta: String,
        #[arg(long, default_value_t = 0)]
        start: usize,
        #[arg(long)]
        depth: usize,
        /// `l:eps:k1,k2,...`; repeatable.
        #[arg(long = "fit", required = true)]
        fits: Vec<String>,
    },
    /// Least moduli whose windows and fits succeed, with the odometer they suggest.
    SearchOdometer {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        l_max: usize,
        #[arg(long, value_delimiter = ',')]
        eps: Vec<String>,
        #[arg(long)]
        k_budget: u64,
        #[arg(long)]
        eta: String,
        #[arg(long, default_value_t = 0)]
        start: usize,
        #[arg(long)]
        depth: usize,
    },
}

fn ratio(field: &str, text: &str) -> Result<Ratio, ConfigError> {
    rankone::rational::parse_rational(text).map(Ratio).ok_or_else(|| ConfigError {
        path: field.into(),
        message: format!("not a rational: {text:?}"),
    })
}

fn fit_step(text: &str, start: usize, depth: usize) -> Result<FitStep, ConfigError> {
    let bad = || ConfigError {
        path: "--fit".into(),
        message: format!("expected l:eps:k1,k2,..., got {text:?}"),
    };
    let mut parts = text.splitn(3, ':');
    let (Some(l), Some(eps), Some(ks)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(bad());
    };
    Ok(FitStep {
        l: l.parse().map_err(|_| bad())?,
        eps: ratio("--fit", eps)?,
        candidates: ks
            .split(',')
            .map(|k| k.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?,
        start,
        depth,
    })
}

fn single(source: &Source, analysis: Analysis) -> Result<RunConfig, ConfigError> {
    Ok(RunConfig {
        spec: SpecConfig::from_preset_arg(&source.preset)?,
        limits: Default::default(),
        analysis: vec![analysis],
    })
}

fn build_config(command: &Command) -> Result<RunConfig, ConfigError> {
    match command {
        Command::Analyze { config } => {
            let text = fs::read_to_string(config).map_err(|e| ConfigError {
                path: config.display().to_string(),
                message: e.to_string(),
            })?;
            RunConfig::from_toml(&text)
        }
        Command::Word { source, depth } => single(source, Analysis::Words { depth: *depth }),
        Command::Heights { source, depth } => single(source, Analysis::Heights { depth: *depth }),
        Command::ProbeTe {
            source,
            k_max,
            eta,
            start,
            depth,
        } => single(
            source,
            Analysis::TotalErgodicity {
                k_max: *k_max,
                eta: ratio("--eta", eta)?,
                start: *start,
                depth: *depth,
            },
        ),
        Command::CheckCyclic {
            source,
            k,
            eta,
            start,
            depth,
        } => single(
            source,
            Analysis::CyclicFactor {
                k: *k,
                eta: ratio("--eta", eta)?,
                start: *start,
                depth: *depth,
            },
        ),
        Command::CheckOdometer {
            source,
            target,
            probes,
            eta,
            start,
            depth,
        } => single(
            source,
            Analysis::OdometerFactor {
                target: target.clone(),
                probes: probes.clone(),
                ladder_bound: 64,
                eta: ratio("--eta", eta)?,
                start: *start,
                depth: *depth,
            },
        ),
        Command::CheckIso {
            source,
            target,
            probes,
            eta,
            start,
            depth,
            fits,
        } => single(
            source,
            Analysis::Isomorphism {
                target: target.clone(),
                probes: probes.clone(),
                ladder_bound: 64,
                eta: ratio("--eta", eta)?,
                start: *start,
                depth: *depth,
                schedule: fits
                    .iter()
                    .map(|f| fit_step(f, *start, *depth))
                    .collect::<Result<_, _>>()?,
            },
        ),
        Command::SearchOdometer {
            source,
            l_max,
            eps,
            k_budget,
            eta,
            start,
            depth,
        } => single(
            source,
            Analysis::SearchOdometer {
                l_max: *l_max,
                eps: eps.iter().map(|e| ratio("--eps", e)).collect::<Result<_, _>>()?,
                k_budget: *k_budget,
                eta: ratio("--eta", eta)?,
                start: *start,
                depth: *depth,
            },
        ),
    }
}

fn emit(report: &Report, format: Format, out: Option<&PathBuf>, plain_words: bool) -> anyhow::Result<()> {
    let files: Vec<(String, String)> = match format {
        Format::Json => vec![("report.json".into(), to_json(report))],
        Format::Csv => to_csv(report),
        Format::Text if plain_words => {
            let words = report
                .records
                .iter()
                .filter_map(|r| match &r.outcome {
                    Ok(rankone_cli::run::Outcome::Words(w)) => Some(w.join("\n") + "\n"),
                    _ => None,
                })
                .collect();
            vec![("words.txt".into(), words)]
        }
        Format::Text => vec![("summary.txt".into(), to_text(report))],
    };
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for (name, body) in files {
                let path = dir.join(name);
                fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        None => {
            for (_, body) in files {
                print!("{body}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match build_config(&cli.command) {
        Ok(c) => c.with_depth_override(cli.global.depth_override),
        Err(e) => {
            eprintln!("config invalid: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let report = match run(&config, cli.global.threads) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config invalid: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let plain_words = matches!(cli.command, Command::Word { .. });
    if let Err(e) = emit(&report, cli.global.format, cli.global.out.as_ref(), plain_words) {
        eprintln!("error: {e:#}");
        return ExitCode::FAILURE;
    }
    for r in &report.records {
        if let Err(e) = &r.outcome {
            eprintln!("analysis {} ({}) failed: {e}", r.index, r.kind);
        }
    }
    if report.any_errors() {
        ExitCode::from(EXIT_ANALYSIS)
    } else {
        ExitCode::SUCCESS
    }
}

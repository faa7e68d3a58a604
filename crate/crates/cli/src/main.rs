//! Command-line front end: every subcommand builds a job, hands it to the
//! library dispatcher, and renders the resulting report. Exit codes: 0 on
//! success, 2 when a truncation did not stabilize, 3 for unsupported or
//! malformed input, 1 for anything else.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use idelic::chains::{DivisorData, SchemeModel};
use idelic::error::{Error, Result};
use idelic::fields::FqSpec;
use idelic::ideles::ClassGroupJob;
use idelic::report::{self, JobSpec, RunReport, VerifySuite};

#[derive(Parser)]
#[command(
    name = "idelic",
    version,
    about = "Idele class groups, Milnor K-theory, and nerve homology over finite fields"
)]
struct Cli {
    /// Report rendering.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    output: OutputFormat,

    /// Write each report into this directory instead of stdout.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// Batch mode: run every job in a JSON job file (array of job objects).
    #[arg(long, global = true, value_name = "FILE")]
    jobs: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Md,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeKind {
    P1,
    LocalSurface,
}

#[derive(Subcommand)]
enum Command {
    /// K^M_r(F)/n for F_q, F_q((t)), or F_q((s))((t)).
    Kgroup {
        #[arg(long)]
        field: String,
        #[arg(long, default_value_t = 2)]
        r: usize,
        #[arg(long)]
        n: u64,
    },
    /// Idele class group C(X, D)/n with a stabilization certificate.
    Classgroup {
        #[arg(long, value_enum)]
        scheme: SchemeKind,
        #[arg(long)]
        q: u64,
        /// Divisor, e.g. "[0]+[inf]" or "2[t^2+t+1]".
        #[arg(long)]
        divisor: String,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 4)]
        degree_bound: u32,
        /// Laurent-series working precision.
        #[arg(long)]
        precision: Option<usize>,
    },
    /// Brute-force ray class group of P^1 (independent oracle).
    Oracle {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        divisor: String,
        #[arg(long)]
        n: u64,
    },
    /// Seeded property suites over random inputs.
    Verify {
        #[arg(value_enum)]
        suite: VerifySuiteArg,
        #[arg(long)]
        q: Option<u64>,
        #[arg(long, default_value_t = 100)]
        trials: u32,
        #[arg(long)]
        seed: u64,
        /// Degree bound for random polynomials (weil suite).
        #[arg(long)]
        degree: Option<u32>,
    },
    /// Homology of the nerve complex of an intersection configuration.
    KatoHomology {
        /// JSON file describing components, intersections, and face maps.
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        #[arg(long)]
        n: u64,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        degrees: Vec<usize>,
    },
    /// Replay a golden directory, or rebuild it from a job file.
    Report {
        #[arg(long, value_name = "DIR")]
        golden: PathBuf,
        /// Rebuild the golden tables from this job file instead of replaying.
        #[arg(long, value_name = "FILE")]
        update: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifySuiteArg {
    Weil,
    LocalSurface,
    Snf,
}

impl From<VerifySuiteArg> for VerifySuite {
    fn from(arg: VerifySuiteArg) -> VerifySuite {
        match arg {
            VerifySuiteArg::Weil => VerifySuite::Weil,
            VerifySuiteArg::LocalSurface => VerifySuite::LocalSurface,
            VerifySuiteArg::Snf => VerifySuite::Snf,
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(match run_cli(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            e.exit_code()
        }
    });
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidJob(format!("{}: {e}", path.display())))
}

fn run_cli(cli: Cli) -> Result<()> {
    if let Some(path) = &cli.jobs {
        if cli.command.is_some() {
            return Err(Error::InvalidJob(
                "--jobs and a subcommand are mutually exclusive".into(),
            ));
        }
        let jobs = report::parse_jobs(&read_file(path)?)?;
        let reports = report::run_jobs(&jobs)?;
        for (i, report) in reports.iter().enumerate() {
            emit(&cli, i, report)?;
        }
        return Ok(());
    }
    let command = cli.command.as_ref().ok_or_else(|| {
        Error::InvalidJob("nothing to do: give a subcommand or --jobs <file>".into())
    })?;
    if let Command::Report {
        golden,
        update: Some(job_file),
    } = command
    {
        let jobs = report::parse_jobs(&read_file(job_file)?)?;
        let written = report::write_golden(golden, &jobs)?;
        println!("rebuilt {} golden entries in {}", written.len(), golden.display());
        return Ok(());
    }
    let job = build_job(command)?;
    let report = report::run(&job)?;
    emit(&cli, 0, &report)
}

fn build_job(command: &Command) -> Result<JobSpec> {
    Ok(match command {
        Command::Kgroup { field, r, n } => JobSpec::Kgroup {
            field: field.clone(),
            r: *r,
            n: *n,
        },
        Command::Classgroup {
            scheme,
            q,
            divisor,
            n,
            degree_bound,
            precision,
        } => {
            let base = FqSpec::from_order(*q)?;
            let model = match scheme {
                SchemeKind::P1 => SchemeModel::curve(&base),
                SchemeKind::LocalSurface => SchemeModel::local_surface(&base),
            };
            let divisor = DivisorData::parse(&model, divisor)?;
            let mut job = ClassGroupJob::new(divisor, *n, *degree_bound)?;
            if let Some(p) = precision {
                job = job.with_precision(*p);
            }
            JobSpec::Classgroup { job }
        }
        Command::Oracle { q, divisor, n } => JobSpec::Oracle {
            q: *q,
            divisor: divisor.clone(),
            n: *n,
        },
        Command::Verify {
            suite,
            q,
            trials,
            seed,
            degree,
        } => JobSpec::Verify {
            suite: (*suite).into(),
            q: *q,
            trials: *trials,
            seed: *seed,
            degree: *degree,
        },
        Command::KatoHomology { config, n, degrees } => {
            let config = serde_json::from_str(&read_file(config)?)
                .map_err(|e| Error::InvalidJob(format!("config: {e}")))?;
            JobSpec::KatoHomology {
                config,
                n: *n,
                degrees: degrees.clone(),
            }
        }
        Command::Report { golden, update: _ } => JobSpec::Report {
            golden: golden.display().to_string(),
        },
    })
}

fn emit(cli: &Cli, index: usize, report: &RunReport) -> Result<()> {
    let (text, ext) = match cli.output {
        OutputFormat::Json => (report.to_json(), "json"),
        OutputFormat::Md => (report.markdown(), "md"),
    };
    match &cli.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .map_err(|e| Error::InvalidJob(format!("{}: {e}", dir.display())))?;
            let name = format!("{index:03}-{}.{ext}", report.command());
            let path = dir.join(name);
            std::fs::write(&path, text)
                .map_err(|e| Error::InvalidJob(format!("{}: {e}", path.display())))?;
            println!("{}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

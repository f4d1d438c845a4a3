use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qinfra_cli::config::{default_cycle_cap, Overrides, RunConfig};
use qinfra_cli::report::render_table;
use qinfra_cli::{
    cmd_find_disc, cmd_pip, cmd_regulator, cmd_resources, cmd_simulate, cmd_verify_lemmas, Exit, FindDiscOpts, LemmaConfig, Outcome,
    SimulateOpts, Subroutine,
};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Parser)]
#[command(name = "qinfra", version, about = "Regulator and principal ideal computations in real-quadratic orders")]
struct Cli {
    /// TOML file with the same keys as the flags; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute R⁺.
    Regulator {
        #[command(flatten)]
        run: Overrides,
    },
    /// Decide principality of a form and return its distance.
    Pip {
        #[command(flatten)]
        run: Overrides,
        /// `a,b,c` or `Δ:a,b,c`.
        #[arg(long)]
        form: String,
    },
    /// Run a dual-lattice sampling subroutine and check its probability bounds.
    Simulate {
        #[command(flatten)]
        run: Overrides,
        #[arg(long, value_enum)]
        which: Subroutine,
        /// Measured form for `pip`.
        #[arg(long)]
        form: Option<String>,
        #[arg(long, default_value_t = 8)]
        max_forms: usize,
        /// Write the distribution of the most frequent measured form here.
        #[arg(long)]
        dist: Option<PathBuf>,
    },
    /// Scan Reg and PIP and check the block-structure lemmas.
    VerifyLemmas {
        #[command(flatten)]
        run: Overrides,
        #[arg(long, default_value_t = 3)]
        periods: u32,
        /// Forms for the PIP lattice scan (repeatable); default one per class of small order.
        #[arg(long = "pip-form")]
        pip_forms: Vec<String>,
    },
    /// Qubit counts for a discriminant size such as `1024` or `2^20`.
    Resources {
        #[arg(long)]
        disc: String,
        #[arg(long, value_enum)]
        which: Option<Subroutine>,
    },
    /// Scan upward for discriminants with `R⁺ / ln Δ > r`.
    FindDisc {
        #[arg(long)]
        min_ratio: f64,
        #[arg(long, default_value_t = 5)]
        start: u64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 1_000_000)]
        max: u64,
        #[arg(long)]
        cycle_cap: Option<u64>,
    },
}

fn resolve(file: &Option<PathBuf>, run: Overrides) -> Result<RunConfig, Outcome> {
    let base = match file {
        Some(p) => Overrides::from_file(p).map_err(|e| {
            Outcome::error("config", &serde_json::json!({"config": p}), &qinfra::Error::InvalidArgument(format!("{e:#}")))
        })?,
        None => Overrides::default(),
    };
    let merged = run.over(base);
    let shown = serde_json::json!({"disc": merged.disc});
    RunConfig::resolve(merged).map_err(|e| Outcome::error("config", &shown, &e))
}

fn dispatch(cli: Cli) -> (Outcome, Option<PathBuf>) {
    let file = cli.config;
    macro_rules! with_cfg {
        ($run:expr, |$c:ident| $body:expr) => {
            match resolve(&file, $run) {
                Ok($c) => {
                    let out = $c.output_path.clone();
                    ($body, out)
                }
                Err(o) => (o, None),
            }
        };
    }
    match cli.cmd {
        Cmd::Regulator { run } => with_cfg!(run, |c| cmd_regulator(&c)),
        Cmd::Pip { run, form } => with_cfg!(run, |c| cmd_pip(&c, &form)),
        Cmd::Simulate { run, which, form, max_forms, dist } => {
            with_cfg!(run, |c| cmd_simulate(&c, which, &SimulateOpts { form, max_forms, dist_path: dist }))
        }
        Cmd::VerifyLemmas { run, periods, pip_forms } => with_cfg!(run, |c| {
            let forms: Result<Vec<_>, _> = pip_forms
                .iter()
                .map(|t| {
                    let full = if t.contains(':') { t.clone() } else { format!("{}:{t}", c.disc) };
                    full.parse::<qinfra::ReducedForm>().map(|f| qinfra::forms::to_positive_rep(&f))
                })
                .collect();
            match forms {
                Ok(f) => {
                    let lc = LemmaConfig { periods, pip_forms: (!f.is_empty()).then_some(f), ..LemmaConfig::default() };
                    cmd_verify_lemmas(&c, &lc)
                }
                Err(e) => Outcome::error("verify-lemmas", &c, &e),
            }
        }),
        Cmd::Resources { disc, which } => (cmd_resources(&disc, which), None),
        Cmd::FindDisc { min_ratio, start, count, max, cycle_cap } => {
            let opts = FindDiscOpts { min_ratio, start, count, max, cycle_cap: cycle_cap.unwrap_or_else(default_cycle_cap) };
            (cmd_find_disc(&opts), None)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    let (outcome, path) = dispatch(cli);
    let text = match format {
        Format::Json => outcome.to_json() + "\n",
        Format::Table => {
            let mut buf = Vec::new();
            let v = serde_json::to_value(&outcome.report).expect("report serializes");
            render_table(&v, &mut buf).expect("write to buffer");
            String::from_utf8(buf).expect("utf-8")
        }
    };
    let written = match &path {
        Some(p) => std::fs::write(p, &text),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("qinfra: writing the report: {e}");
        return ExitCode::from(Exit::Input.code() as u8);
    }
    if outcome.exit() != Exit::Success {
        if let Some(err) = outcome.result().get("error") {
            eprintln!("qinfra: {}", err.as_str().unwrap_or_default());
        }
    }
    ExitCode::from(outcome.exit().code() as u8)
}

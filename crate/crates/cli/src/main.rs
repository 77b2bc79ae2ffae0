use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use logbertini_cli::{render_document, report_summary, run, Command, ExperimentConfig, EXIT_CONFIG};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "logbertini", version, about = "Exact checks for log Bertini statements and their counterexamples")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Clone)]
struct Common {
    /// Input document.
    #[arg(long, value_name = "PATH", conflicts_with = "inline")]
    config: Option<PathBuf>,
    /// Input document given directly as JSON.
    #[arg(long, value_name = "JSON")]
    inline: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Size of the worker pool (default: number of cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "M")]
    max_extension: Option<u32>,
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Subcommand)]
enum Sub {
    MonoidAnalyze(Common),
    ChartConstruct(Common),
    KatoCheck(Common),
    BertiniRun(Common),
    CxReproduce(Common),
    DvrBlowupVerify(Common),
    DvrGammaBasis(Common),
    DvrBertiniInstance(Common),
    Satz2Verify(Common),
    /// Print a report as a table (reads standard input without a path).
    Summary {
        path: Option<PathBuf>,
    },
}

fn fail(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_CONFIG as u8)
}

fn read_input(c: &Common) -> Result<Value, String> {
    let text = match (&c.config, &c.inline) {
        (Some(p), _) => std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?,
        (None, Some(s)) => s.clone(),
        (None, None) => return Ok(Value::Null),
    };
    serde_json::from_str(&text).map_err(|e| format!("malformed config: {e}"))
}

fn summary(path: Option<PathBuf>) -> ExitCode {
    let text = match path {
        Some(p) => match std::fs::read_to_string(&p) {
            Ok(t) => t,
            Err(e) => return fail(&format!("cannot read {}: {e}", p.display())),
        },
        None => {
            let mut s = String::new();
            if let Err(e) = std::io::stdin().read_to_string(&mut s) {
                return fail(&e.to_string());
            }
            s
        }
    };
    let doc: Value = match serde_json::from_str(&text) {
        Ok(d) => d,
        Err(e) => return fail(&format!("malformed report: {e}")),
    };
    match report_summary(&doc) {
        Ok(t) => {
            print!("{t}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(&format!("malformed report: {e}")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match cli.command {
        Sub::Summary { path } => return summary(path),
        Sub::MonoidAnalyze(c) => ("monoid-analyze", c),
        Sub::ChartConstruct(c) => ("chart-construct", c),
        Sub::KatoCheck(c) => ("kato-check", c),
        Sub::BertiniRun(c) => ("bertini-run", c),
        Sub::CxReproduce(c) => ("cx-reproduce", c),
        Sub::DvrBlowupVerify(c) => ("dvr-blowup-verify", c),
        Sub::DvrGammaBasis(c) => ("dvr-gamma-basis", c),
        Sub::DvrBertiniInstance(c) => ("dvr-bertini-instance", c),
        Sub::Satz2Verify(c) => ("satz2-verify", c),
    };
    let command = Command::from_name(name).expect("known command");
    let input = match read_input(&common) {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    let cfg = ExperimentConfig {
        command,
        input,
        seed: common.seed,
        trials: common.trials,
        max_extension: common.max_extension,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = common.workers {
        if w == 0 {
            return fail("workers must be positive");
        }
        pool = pool.num_threads(w);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => return fail(&e.to_string()),
    };
    let outcome = pool.install(|| run(&cfg));
    if let Some(e) = &outcome.error {
        eprintln!("error: {e}");
    }
    if let Some(doc) = &outcome.document {
        let text = render_document(doc);
        match &common.out {
            Some(p) => {
                if let Err(e) = std::fs::write(p, text) {
                    return fail(&format!("cannot write {}: {e}", p.display()));
                }
            }
            None => print!("{text}"),
        }
    }
    ExitCode::from(outcome.exit_code as u8)
}

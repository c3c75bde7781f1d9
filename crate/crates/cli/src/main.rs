//! `fw`: import data, resolve pre-annotations, serve the review API and
//! produce reports.
//!
//! Exit codes: 0 ok, 1 other failure, 2 schema error in an input file,
//! 3 missing prerequisite, 4 report over unfinalized annotation sets.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use fw_core::metrics::report::{emit_report, ReportFormat};
use fw_core::store::records::export_condition;
use fw_core::store::workspace::{ImportKind, Workspace, WorkspaceError};
use fw_core::store::{ReportError, StoreError};
use fw_core::ConditionLabel;
use fw_server::{load_tokens, router, ServerConfig};

#[derive(Parser)]
#[command(name = "fw", version, about = "Semi-automatic frame annotation workbench")]
struct Cli {
    /// Directory holding imported inputs, the resolution and the event log.
    #[arg(long, env = "FW_DATA_DIR", default_value = "fw-data", global = true)]
    data_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an input file and copy it into the data directory.
    Import {
        /// framebank, corpus, preannot or annotations
        kind: ImportKind,
        path: PathBuf,
    },
    /// Turn parser hypotheses into the machine and machine+human conditions.
    Resolve,
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: String,
        /// JSON object mapping bearer tokens to annotator ids.
        #[arg(long, env = "FW_TOKENS_FILE")]
        tokens: Option<PathBuf>,
        /// Static web assets to serve at `/`.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
    /// Write report tables, one file per table.
    Report {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        tables: Vec<u8>,
        #[arg(long, value_delimiter = ',', default_value = "human,machine,machine_human")]
        conditions: Vec<ConditionLabel>,
        /// csv, json or markdown
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
    /// Write one condition as annotation JSONL.
    Export {
        #[arg(long)]
        condition: ConditionLabel,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let code = if let Some(w) = e.downcast_ref::<WorkspaceError>() {
        w.code()
    } else if let Some(r) = e.downcast_ref::<ReportError>() {
        r.code()
    } else if let Some(s) = e.downcast_ref::<StoreError>() {
        s.code()
    } else {
        ""
    };
    match code {
        "SCHEMA" | "CORRUPT_LOG" => 2,
        "MISSING_PREREQUISITE" => 3,
        "UNFINALIZED_AS" => 4,
        _ => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let ws = Workspace::open(&cli.data_dir)?;
    match cli.command {
        Command::Import { kind, path } => {
            let summary = ws.import(kind, &path)?;
            print!("{summary}");
        }
        Command::Resolve => {
            let summary = ws.resolve()?;
            print!("{summary}");
        }
        Command::Serve {
            listen,
            tokens,
            static_dir,
        } => serve(&ws, &listen, tokens.as_deref(), static_dir)?,
        Command::Report {
            tables,
            conditions,
            format,
            out,
        } => {
            let store = ws.load_store()?;
            let snapshot = store.snapshot();
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for n in tables {
                let table = snapshot.report(n, &conditions)?;
                let path = out.join(format!("{}.{}", table.name, format.extension()));
                fs::write(&path, emit_report(&table, format)).with_context(|| format!("writing {}", path.display()))?;
                println!("{}", path.display());
            }
        }
        Command::Export { condition, out } => {
            let store = ws.load_store()?;
            let snapshot = store.snapshot();
            let n = write_export(&out, |w| export_condition(snapshot.condition(condition), &snapshot.bank, w))?;
            println!("exported {n} {condition} annotation sets to {}", out.display());
        }
    }
    Ok(())
}

fn write_export(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<usize>) -> anyhow::Result<usize> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    let n = f(&mut w)?;
    w.flush()?;
    Ok(n)
}

fn serve(ws: &Workspace, listen: &str, tokens: Option<&Path>, static_dir: Option<PathBuf>) -> anyhow::Result<()> {
    let tokens = match tokens {
        Some(path) => load_tokens(path)?,
        None => {
            eprintln!("warning: no tokens file configured; all writes will be rejected");
            Default::default()
        }
    };
    let store = ws.load_store()?;
    let app = router(store, ServerConfig { tokens, static_dir });
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(listen)
            .await
            .with_context(|| format!("binding {listen}"))?;
        println!("listening on http://{}", listener.local_addr()?);
        fw_server::serve(listener, app).await?;
        Ok(())
    })
}

//! `freepoisson`: JSON in, JSON (or CSV) out, for every library operation.

mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use freepoisson_core::io::with_schema;
use freepoisson_core::Error;
use serde_json::json;

use args::Cli;
use commands::Output;

fn emit(cli: &Cli, out: Output) -> Result<(), Error> {
    let (value, side) = match out {
        Output::Json(v) => (v, None),
        Output::JsonWithCsv(v, side) => (v, side),
    };
    if let Some((path, csv)) = side {
        std::fs::write(&path, csv).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    let text = serde_json::to_string_pretty(&value).expect("valid JSON") + "\n";
    match &cli.global.output {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Error::Io(format!("stdout: {e}"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli).and_then(|out| emit(&cli, out)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut obj = json!({ "code": e.code(), "message": e.to_string() });
            if let Some(w) = e.witness() {
                obj["witness"] = json!(w);
            }
            eprintln!("{}", with_schema(obj));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

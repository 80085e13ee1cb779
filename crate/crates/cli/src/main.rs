mod args;
mod commands;
mod input;
mod report;

use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use deltaclose_core::codec;
use deltaclose_core::Error;
use serde_json::{json, Value};

use crate::args::Cli;
use crate::commands::{run, Ctx, Outcome};

const EXIT_INTERNAL: u8 = 1;
const EXIT_MALFORMED: u8 = 2;
const EXIT_INCONSISTENT: u8 = 3;
const EXIT_GATE: u8 = 4;
const EXIT_PRECONDITION: u8 = 5;
const EXIT_VERIFICATION: u8 = 6;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Internal(_) => EXIT_INTERNAL,
        Error::Inconsistent | Error::OutsideCoefficientRing => EXIT_INCONSISTENT,
        Error::NotDense | Error::DenseGroup => EXIT_GATE,
        Error::PreconditionNotInvariant { .. } => EXIT_PRECONDITION,
        Error::IllConditionedFit(_) => EXIT_VERIFICATION,
        _ => EXIT_MALFORMED,
    }
}

fn kind(e: &Error) -> String {
    let debug = format!("{e:?}");
    debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string()
}

fn print(v: &Value) {
    let text = serde_json::to_string_pretty(v).expect("JSON values serialize");
    let _ = writeln!(io::stdout().lock(), "{text}");
}

fn emit(command: &str, outcome: Outcome) -> Result<u8, Error> {
    let pass = outcome.certificates.all_pass();
    let mut doc = outcome.body;
    doc.insert("command".into(), json!(command));
    doc.insert("version".into(), json!(codec::FORMAT_VERSION));
    doc.insert("field".into(), codec::encode_field(&outcome.field));
    doc.insert("certificates".into(), outcome.certificates.into_value());
    print(&Value::Object(doc));
    Ok(if pass { 0 } else { EXIT_VERIFICATION })
}

fn command_name(argv: &[String]) -> String {
    let words = [
        "group",
        "closure",
        "op",
        "expand",
        "divide",
        "space",
        "diamond",
        "solve",
        "kernel",
        "construct",
        "triangle",
        "fm",
        "prop7",
        "verify",
        "grid",
        "fit",
        "cosets",
    ];
    argv.iter().skip(1).filter(|a| words.contains(&a.as_str())).take(2).cloned().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse_from(&argv);
    let name = command_name(&argv);
    let result = Ctx::new(&cli.global).and_then(|ctx| {
        let outcome = run(&ctx, &cli.command)?;
        if let (Some(path), Some(csv)) = (&ctx.out, &outcome.csv) {
            report::write_csv(path, &csv.header, &csv.rows, csv.sidecar.clone())
                .map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
        }
        emit(&name, outcome)
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let code = exit_code(&e);
            print(&json!({"command": name, "error": {"kind": kind(&e), "message": e.to_string(), "exit_code": code}}));
            eprintln!("deltaclose: {e}");
            ExitCode::from(code)
        }
    }
}

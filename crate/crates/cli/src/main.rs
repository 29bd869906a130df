mod args;
mod commands;
mod failure;
mod manifest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Run;
use failure::Failure;

fn parse(argv: &[String]) -> Result<Cli, ExitCode> {
    Cli::try_parse_from(std::iter::once("se2ot".to_string()).chain(argv.iter().cloned())).map_err(|e| {
        let _ = e.print();
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
            _ => ExitCode::from(1),
        }
    })
}

fn configure_threads(threads: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(format!("cannot configure threads: {e}")))?;
    }
    Ok(())
}

fn dispatch(cli: Cli, argv: Vec<String>) -> Result<(), Failure> {
    let run = Run::new(argv, cli.threads);
    match &cli.command {
        Command::Distance(a) => commands::distance(&run, a),
        Command::Sinkhorn(a) => commands::sinkhorn_cmd(&run, a),
        Command::Interpolate(a) => commands::interpolate_cmd(&run, a),
        Command::Barycenter(a) => commands::barycenter_cmd(&run, a),
        Command::GradientFlow(a) => commands::gradient_flow(&run, a),
        Command::Lift(a) => commands::lift(&run, a),
        Command::Project(a) => commands::project(&run, a),
        Command::LiftField(a) => commands::lift_field(&run, a),
        Command::ProjectField(a) => commands::project_field(&run, a),
        Command::InterpolateImage(a) => commands::interpolate_image(&run, a),
        Command::Counterexample(a) => commands::counterexample(a),
        Command::Replay(a) => {
            let recorded = commands::replay_args(a)?;
            let inner = parse(&recorded).map_err(|_| Failure::usage("manifest arguments no longer parse"))?;
            dispatch(inner, recorded)
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match parse(&argv) {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    let result = configure_threads(cli.threads).and_then(|()| dispatch(cli, argv));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code() as u8)
        }
    }
}

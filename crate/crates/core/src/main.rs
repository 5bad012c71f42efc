// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use strsolve::cli::{self, ParseError, SolveOptions, Verdict};
use strsolve::reach::Encoding;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Engine {
    Explicit,
    AigerExport,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EncodingArg {
    Direct,
    Minimal,
    Deterministic,
}

impl From<EncodingArg> for Encoding {
    fn from(e: EncodingArg) -> Encoding {
        match e {
            EncodingArg::Direct => Encoding::Direct,
            EncodingArg::Minimal => Encoding::Minimal,
            EncodingArg::Deterministic => Encoding::Deterministic,
        }
    }
}

/// Decides string constraints given in an SMT-LIB subset.
#[derive(Parser, Debug)]
#[command(name = "solver", version)]
struct Args {
    #[arg(long, value_enum, default_value_t = Engine::Explicit)]
    engine: Engine,
    #[arg(long, value_enum, default_value_t = EncodingArg::Direct)]
    encoding: EncodingArg,
    /// Bits per character.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..=16))]
    bits: u32,
    #[arg(long, default_value_t = 100_000)]
    budget_configs: usize,
    #[arg(long, default_value_t = 60)]
    budget_secs: u64,
    /// Print a model after `sat`.
    #[arg(long)]
    model: bool,
    file: PathBuf,
}

const INPUT_ERROR: u8 = 3;

fn main() -> ExitCode {
    env_logger::init();
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", args.file.display());
            return ExitCode::from(INPUT_ERROR);
        }
    };
    let f = match cli::parse(&text, args.bits) {
        Ok(f) => f,
        Err(e @ ParseError::Unsupported { .. }) => {
            eprintln!("{}:{e}", args.file.display());
            print!("{}", cli::render(&Verdict::Unknown(e.to_string()), &Default::default(), false));
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {}:{e}", args.file.display());
            return ExitCode::from(INPUT_ERROR);
        }
    };
    let opts = SolveOptions {
        bits: args.bits,
        encoding: args.encoding.into(),
        ..Default::default()
    }
    .with_budget(args.budget_configs, args.budget_secs);
    match args.engine {
        Engine::Explicit => {
            let v = cli::solve(&f, &opts);
            if let Verdict::Unknown(reason) = &v {
                eprintln!("unknown: {reason}");
            }
            print!("{}", cli::render(&v, &f, args.model || f.get_model));
            ExitCode::from(v.exit_code() as u8)
        }
        Engine::AigerExport => {
            let systems = cli::export_clauses(&f, &opts);
            let single = systems.len() == 1;
            let mut failed = false;
            for (k, s) in systems.iter().enumerate() {
                let mut path = args.file.clone().into_os_string();
                if !single {
                    path.push(format!(".{k}"));
                }
                path.push(".aag");
                match s {
                    Ok(text) => match std::fs::write(&path, text) {
                        Ok(()) => println!("{}", PathBuf::from(path).display()),
                        Err(e) => {
                            eprintln!("error: {}: {e}", PathBuf::from(path).display());
                            failed = true;
                        }
                    },
                    Err(reason) => eprintln!("clause {k}: {reason}"),
                }
            }
            if failed {
                ExitCode::from(INPUT_ERROR)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}

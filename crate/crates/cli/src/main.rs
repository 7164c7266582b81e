use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use tea_cli::args::{Cli, Command};
use tea_cli::{bench, check, code, demo, run};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = match &cli.command {
        Command::Asm(a) => run::cmd_asm(a, &mut out),
        Command::Run(a) => run::cmd_run(a, false, &mut out),
        Command::Trace(a) => run::cmd_run(a, true, &mut out),
        Command::Check(a) => check::cmd_check(a, &mut out),
        Command::Demo(a) => demo::cmd_demo(a, &mut out),
        Command::Bench(a) => bench::cmd_bench(a, &mut out),
    };
    let status = match result {
        Ok(c) => c,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e:#}");
            code::ERROR
        }
    };
    let _ = out.flush();
    ExitCode::from(status as u8)
}

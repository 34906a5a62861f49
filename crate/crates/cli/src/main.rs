use std::process::ExitCode;

use dilation_cli::{run_command, save_report};

fn main() -> ExitCode {
    let exec = run_command(std::env::args());
    if let Some(text) = &exec.text {
        print!("{text}");
    }
    if let Some(report) = &exec.report {
        if let Err(e) = save_report(report, exec.out.as_deref()) {
            eprintln!("failed to write report: {e}");
            return ExitCode::from(1);
        }
    }
    ExitCode::from(exec.exit_code as u8)
}

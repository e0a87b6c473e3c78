//! One PASS/FAIL line per acceptance criterion. Known-red criteria are
//! reported but do not fail the target. `GQR_ACCEPTANCE_LEVEL=quick` skips
//! the four-mode Hamiltonian-model oracle builds.

use std::process::{Command, ExitCode};

use gqr::verify::{self, Level, Outcome};

fn binary_runs_match() -> (bool, String) {
    let run = |workers: &str| {
        Command::new(env!("CARGO_BIN_EXE_gqr"))
            .args(["fig2a", "--workers", workers])
            .output()
            .map(|o| (o.status.success(), o.stdout))
    };
    match (run("1"), run("4")) {
        (Ok((true, a)), Ok((true, b))) => (a == b, format!("binary 1 vs 4 workers identical: {}", a == b)),
        other => (false, format!("binary run failed: {other:?}")),
    }
}

fn main() -> ExitCode {
    let level = match std::env::var("GQR_ACCEPTANCE_LEVEL").as_deref() {
        Ok("quick") => Level::Quick,
        _ => Level::Full,
    };
    let mut outcomes = verify::run(level, 7, |o| {
        if o.id != 11 {
            println!("{}", o.line())
        }
    });
    let last = outcomes.last_mut().expect("criterion 11");
    let (same, detail) = binary_runs_match();
    *last = Outcome {
        pass: last.pass && same,
        detail: format!("{}; {detail}", last.detail),
        ..last.clone()
    };
    println!("{}", last.line());
    let regressions: Vec<u8> = outcomes.iter().filter(|o| !o.pass && !o.known_red()).map(|o| o.id).collect();
    if regressions.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("regressions in criteria {regressions:?}");
        ExitCode::FAILURE
    }
}

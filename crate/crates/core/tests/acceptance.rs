//! Prints one PASS/FAIL line per acceptance criterion at desk scale and
//! exits nonzero if any criterion fails.

use std::process::ExitCode;

use levy_limits::verify::{run_group, Group, Profile, DEFAULT_SEED};

fn main() -> ExitCode {
    let outcomes = run_group(Group::All, Profile::Desk, DEFAULT_SEED);
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

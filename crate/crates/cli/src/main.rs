// Copyright 2026 The shockhier Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use shockhier_cli::{parse_config, run, CliError, Command, Overrides};

/// Exact front tracking, Hopf-Lax cross-checks and hierarchy verification
/// for scalar conservation laws with polygonal flux.
#[derive(Debug, Parser)]
#[command(name = "shockhier", version)]
struct Args {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    command: Command,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of realizations.
    #[arg(long)]
    n: Option<u64>,
    /// Overrides the horizon; a number, "p/q" or "inf".
    #[arg(long, allow_hyphen_values = true)]
    horizon: Option<String>,
    /// verify-h1: a breakdown after the first collision is the expected outcome.
    #[arg(long)]
    expect_breakdown: bool,
    /// Worker threads for ensembles.
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides the number of oracle / crosscheck points.
    #[arg(long)]
    points: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(outcome) => {
            // a closed pipe on stdout must not turn a finished run into a panic
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "{}", outcome.summary);
            for f in &outcome.files {
                let _ = writeln!(out, "  wrote {}", f.display());
            }
            let _ = writeln!(out, "{}", if outcome.passed { "PASS" } else { "FAIL" });
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "{}", e.record());
            ExitCode::from(2)
        }
    }
}

fn execute(args: &Args) -> Result<shockhier_cli::Outcome, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let overrides = Overrides {
        seed: args.seed,
        realizations: args.n,
        horizon: args.horizon.clone(),
        workers: args.workers,
        points: args.points,
    };
    let cfg = parse_config(&text, &overrides)?;
    run(args.command, &cfg, &args.out, args.expect_breakdown)
}

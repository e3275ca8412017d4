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

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use shockhier::{
    check_compatibility, compare_interaction_sets, ledger_verify, run_ensemble, seeded_bumps, solve,
    verify_transport, EnsembleSpec, Horizon, LedgerSummary, Oracle, Profile64, Solution,
};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{self, label, push_jsonl, OutDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Solve,
    Oracle,
    Crosscheck,
    Ensemble,
    #[value(name = "verify-h1")]
    VerifyH1,
    #[value(name = "verify-h2")]
    VerifyH2,
    Report,
}

/// Result of a successful run: whether its checks passed, a one-line
/// summary, and the files written.
#[derive(Debug)]
pub struct Outcome {
    pub passed: bool,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

const NEAR_FRONT: f64 = 1e-9;
const LEDGER_TOLERANCE: f64 = 1e-9;

pub fn run(command: Command, cfg: &RunConfig, out: &Path, expect_breakdown: bool) -> Result<Outcome, CliError> {
    let mut dir = OutDir::create(out)?;
    dir.write_json("config.canonical.json", &cfg.canonical())?;
    let (passed, summary) = match command {
        Command::Solve => cmd_solve(cfg, &mut dir)?,
        Command::Oracle => cmd_oracle(cfg, &mut dir)?,
        Command::Crosscheck => cmd_crosscheck(cfg, &mut dir)?,
        Command::Ensemble => cmd_ensemble(cfg, &mut dir)?,
        Command::VerifyH1 => cmd_verify_h1(cfg, &mut dir, expect_breakdown)?,
        Command::VerifyH2 => cmd_verify_h2(cfg, &mut dir)?,
        Command::Report => cmd_report(cfg, &mut dir)?,
    };
    Ok(Outcome {
        passed,
        summary,
        files: dir.into_files(),
    })
}

fn run_err(e: impl std::fmt::Display) -> CliError {
    CliError::Run(e.to_string())
}

/// Realization indices the command iterates over: just the profile for
/// deterministic data, otherwise `0..realizations`.
fn realizations(cfg: &RunConfig) -> impl Iterator<Item = (u64, Profile64)> + '_ {
    let n = if cfg.profile.is_some() { 1 } else { cfg.realizations };
    (0..n).map(move |i| match &cfg.profile {
        Some(p) => (i, p.clone()),
        None => (i, cfg.model.sample(i).expect("validated model samples")),
    })
}

fn solve_one(cfg: &RunConfig, p: &Profile64, index: u64) -> Result<Solution, CliError> {
    solve(&cfg.flux, p, cfg.horizon).map_err(|e| CliError::Run(format!("realization {index}: {e}")))
}

fn cmd_solve(cfg: &RunConfig, dir: &mut OutDir) -> Result<(bool, String), CliError> {
    let (_, p) = realizations(cfg).next().unwrap();
    let sol = solve_one(cfg, &p, 0)?;
    dir.write("events.jsonl", &output::events_jsonl(&sol))?;
    dir.write("trajectories.csv", &output::trajectories_csv(&sol))?;
    dir.write("polylines.csv", &output::polylines_csv(&sol, output::display_end(&sol, &cfg.times)))?;
    Ok((
        true,
        format!("solve: {} fronts, {} events", sol.fronts().len(), sol.events().len()),
    ))
}

/// Seeded query points for oracle and crosscheck runs.
fn sample_points(cfg: &RunConfig, sol: &Solution, index: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.oracle.seed);
    rng.set_stream(index);
    let (xa, xb) = cfg
        .oracle
        .x_range
        .unwrap_or((cfg.x_grid[0], cfg.x_grid[cfg.x_grid.len() - 1]));
    let (ta, tb) = cfg.oracle.t_range.unwrap_or_else(|| {
        let end = output::display_end(sol, &cfg.times);
        (1e-3 * end, end)
    });
    (0..cfg.oracle.points)
        .map(|_| (rng.random_range(xa..=xb), rng.random_range(ta..=tb)))
        .filter(|(_, t)| sol.horizon().contains(*t))
        .collect()
}

fn cmd_oracle(cfg: &RunConfig, dir: &mut OutDir) -> Result<(bool, String), CliError> {
    let mut csv = String::from("realization,x,t,state,a\n");
    let mut n = 0;
    for (i, p) in realizations(cfg) {
        let sol = solve_one(cfg, &p, i)?;
        let oracle = Oracle::new(&cfg.flux, &p);
        for (x, t) in sample_points(cfg, &sol, i) {
            let problem = oracle.problem(x, t).map_err(run_err)?;
            writeln!(csv, "{i},{x},{t},{},{}", problem.query() + 1, problem.inverse_lagrangian()).unwrap();
            n += 1;
        }
    }
    dir.write("oracle.csv", &csv)?;
    Ok((true, format!("oracle: {n} points")))
}

fn cmd_crosscheck(cfg: &RunConfig, dir: &mut OutDir) -> Result<(bool, String), CliError> {
    let (mut compared, mut skipped) = (0u64, 0u64);
    let mut mismatches = Vec::new();
    let mut count = 0u64;
    for (i, p) in realizations(cfg) {
        let sol = solve_one(cfg, &p, i)?;
        let oracle = Oracle::new(&cfg.flux, &p);
        for (x, t) in sample_points(cfg, &sol, i) {
            if sol.distance_to_front(x, t).map_err(run_err)?.is_some_and(|d| d <= NEAR_FRONT) {
                skipped += 1;
                continue;
            }
            let a = sol.query(x, t).map_err(run_err)?;
            let b = oracle.query(x, t).map_err(run_err)?;
            compared += 1;
            if a != b {
                count += 1;
                if mismatches.len() < 100 {
                    mismatches.push(json!({
                        "realization": i, "x": x, "t": t,
                        "front_tracking": a + 1, "oracle": b + 1,
                    }));
                }
            }
        }
    }
    dir.write_json(
        "crosscheck.json",
        &json!({
            "compared": compared,
            "skipped_near_front": skipped,
            "near_front_tolerance": NEAR_FRONT,
            "mismatches": count,
            "examples": mismatches,
        }),
    )?;
    Ok((count == 0, format!("crosscheck: {compared} points compared, {skipped} near fronts skipped, {count} mismatches")))
}

fn ensemble_spec(cfg: &RunConfig, max_order: usize) -> EnsembleSpec {
    let n = if cfg.profile.is_some() { cfg.realizations.max(1) } else { cfg.realizations };
    let mut spec = EnsembleSpec::new(cfg.model.clone(), n, cfg.times.clone(), cfg.x_grid.clone());
    spec.max_order = max_order;
    if let Some(w) = &cfg.coincidence_widths {
        spec.coincidence_widths = w.clone();
    }
    if let Horizon::Finite(_) = cfg.horizon {
        spec.horizon = cfg.horizon;
    }
    spec
}

fn cmd_ensemble(cfg: &RunConfig, dir: &mut OutDir) -> Result<(bool, String), CliError> {
    let mut spec = ensemble_spec(cfg, cfg.max_order);
    spec.keep_archive = true;
    spec.validate().map_err(|e| CliError::Validation {
        field: "ensemble".into(),
        kind: None,
        message: e.to_string(),
    })?;
    let res = run_ensemble(&spec, &cfg.flux, cfg.workers).map_err(run_err)?;
    let n = res.point.realizations();
    let pe = &res.point;
    let se = &res.shock;

    let mut p1 = String::from("t,x,state,count,n\n");
    for (t, x, s, c) in pe.one_point_rows() {
        writeln!(p1, "{t},{x},{},{c},{n}", s + 1).unwrap();
    }
    dir.write("p1.csv", &p1)?;

    let m = pe.num_states();
    let mut cdf = String::from("t,x,k,count,n\n");
    for (ti, t) in pe.times().iter().enumerate() {
        for (xi, x) in pe.xs().iter().enumerate() {
            let mut tail = 0;
            let mut rows = Vec::new();
            for k in (1..m).rev() {
                tail += pe.count(ti, xi, k);
                rows.push((k, tail));
            }
            for (k, c) in rows.into_iter().rev() {
                writeln!(cdf, "{t},{x},{},{c},{n}", k + 1).unwrap();
            }
        }
    }
    dir.write("cdf.csv", &cdf)?;

    if spec.max_order >= 2 {
        let mut p2 = String::from("t,x,y,state_x,state_y,count,n\n");
        for (t, x, y, a, b, c) in pe.two_point_rows() {
            writeln!(p2, "{t},{x},{y},{},{},{c},{n}", a + 1, b + 1).unwrap();
        }
        dir.write("p2.csv", &p2)?;
    }

    let edges = se.edges();
    let mut density = String::from("t,x_lo,x_hi,u,v,count,n\n");
    let mut nets = String::from("t,x_lo,x_hi,u,v,count,n\n");
    for (ti, t) in se.times().iter().enumerate() {
        for b in 0..edges.len().saturating_sub(1) {
            for u in 0..m {
                for v in 0..m {
                    let c = se.front_count(ti, b, (u, v));
                    if c > 0 {
                        writeln!(density, "{t},{},{},{},{},{c},{n}", edges[b], edges[b + 1], u + 1, v + 1).unwrap();
                    }
                    let c = se.net_count(ti, b, (u, v));
                    if c > 0 {
                        writeln!(nets, "{t},{},{},{},{},{c},{n}", edges[b], edges[b + 1], u + 1, v + 1).unwrap();
                    }
                }
            }
        }
    }
    dir.write("shock_density.csv", &density)?;
    dir.write("box_states.csv", &nets)?;

    if spec.max_order >= 2 {
        let mut pairs = String::from("t,x_lo,x_hi,y_lo,y_hi,u,v,u2,v2,count,n\n");
        for ((ti, b1, b2, s1, s2), c) in se.pair_counts() {
            writeln!(
                pairs,
                "{},{},{},{},{},{},{},{},{},{c},{n}",
                se.times()[*ti], edges[*b1], edges[b1 + 1], edges[*b2], edges[b2 + 1],
                s1.0 + 1, s1.1 + 1, s2.0 + 1, s2.1 + 1
            )
            .unwrap();
        }
        dir.write("box_pairs.csv", &pairs)?;
    }

    let mut coinc = String::from("t,width,u,v,u2,v2,count,n\n");
    for ((ti, wi, a, b), c) in se.coincidence_counts() {
        writeln!(
            coinc,
            "{},{},{},{},{},{},{c},{n}",
            se.times()[*ti], se.widths()[*wi], a.0 + 1, a.1 + 1, b.0 + 1, b.1 + 1
        )
        .unwrap();
    }
    dir.write("coincidence.csv", &coinc)?;

    let report = check_compatibility(se);
    dir.write_json(
        "compatibility.json",
        &json!({
            "realizations": n,
            "marginals_checked": report.marginals_checked,
            "marginal_mismatches": report.marginal_mismatches.len(),
            "coincidence": report.coincidence.iter().map(|(t, w)| json!({
                "t": t,
                "widths": se.widths(),
                "mass": w,
            })).collect::<Vec<_>>(),
            "coincidence_monotone": report.coincidence_monotone,
            "passed": report.passed(),
        }),
    )?;

    let mut archive = String::new();
    for (i, events) in &res.archive {
        for e in events {
            push_jsonl(&mut archive, &output::event_record(e, Some(*i)));
        }
    }
    dir.write("events.jsonl", &archive)?;

    Ok((
        report.passed(),
        format!(
            "ensemble: {n} realizations, {} marginals checked, {} mismatches, coincidence monotone: {}",
            report.marginals_checked,
            report.marginal_mismatches.len(),
            report.coincidence_monotone
        ),
    ))
}

fn cmd_verify_h1(cfg: &RunConfig, dir: &mut OutDir, expect_breakdown: bool) -> Result<(bool, String), CliError> {
    let tp = &cfg.transport;
    let mut overlap = String::from("realization,t,x_lo,x_hi\n");
    let mut early = 0usize;
    let mut breakdowns = 0u64;
    let mut skipping = 0u64;
    let mut total = 0u64;
    let mut passed = true;
    let mut detail = Vec::new();
    for (i, p) in realizations(cfg) {
        let sol = solve_one(cfg, &p, i)?;
        let check = verify_transport(&sol, &tp.times, &tp.x_grid, tp.order);
        total += 1;
        early += check.early_residuals();
        if check.breakdown_time == Some(0.0) {
            skipping += 1;
        }
        if check.breakdown_detected() {
            breakdowns += 1;
        }
        if !expect_breakdown {
            passed &= check.passed(false);
        } else {
            passed &= check.early_residuals() == 0;
        }
        for (t, intervals) in &check.overlaps {
            for (lo, hi) in intervals {
                writeln!(overlap, "{i},{t},{lo},{hi}").unwrap();
            }
        }
        if cfg.profile.is_some() {
            detail.push(json!({
                "speeds": check.speeds,
                "first_collision": check.first_collision,
                "breakdown_time": check.breakdown_time,
                "order": check.order,
                "nonzero_residuals": check.residuals.len(),
                "early_residuals": check.early_residuals(),
                "residuals": check.residuals.iter().take(200).map(|r| json!({
                    "t": r.t,
                    "x": r.xs,
                    "k": r.ks.iter().map(|k| k + 1).collect::<Vec<_>>(),
                    "value": r.value,
                })).collect::<Vec<_>>(),
                "overlaps": check.overlaps.iter().map(|(t, o)| json!({
                    "t": t,
                    "intervals": o.iter().map(|(a, b)| [*a, *b]).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            }));
        }
    }
    if expect_breakdown {
        passed &= breakdowns > 0;
    }
    let mut record = json!({
        "realizations": total,
        "expect_breakdown": expect_breakdown,
        "early_residuals": early,
        "breakdowns_detected": breakdowns,
        "realizations_with_skipping_jumps": skipping,
        "passed": passed,
    });
    if let Some(d) = detail.pop() {
        record["check"] = d;
    }
    dir.write_json("transport.json", &record)?;
    dir.write("overlap.csv", &overlap)?;
    Ok((
        passed,
        format!("verify-h1: {total} realizations, {early} residuals before breakdown, {breakdowns} breakdowns detected"),
    ))
}

fn cmd_verify_h2(cfg: &RunConfig, dir: &mut OutDir) -> Result<(bool, String), CliError> {
    let sets = compare_interaction_sets(&cfg.flux);
    let substantive: Vec<Value> = sets
        .substantive()
        .map(|d| json!({"species": label(d.species), "set": d.set.to_string(), "w": d.w + 1,
                        "in_rule": d.in_rule, "in_enumeration": d.in_enumeration}))
        .collect();
    let note = if sets.indicator_reading_disagreements > 0 {
        "growth indicator 1{v=u+1} contradicts enumeration; creation middles follow the one-point case split (none for v=u+1, w<=u+1 for v<u)"
    } else {
        ""
    };
    dir.write_json(
        "interaction_sets.json",
        &json!({
            "species_checked": sets.species_checked,
            "substantive_disagreements": substantive,
            "vacuous_disagreements": sets.vacuous_count(),
            "indicator_reading_disagreements": sets.indicator_reading_disagreements,
            "note": note,
        }),
    )?;

    let x_range = (cfg.x_grid[0], cfg.x_grid[cfg.x_grid.len() - 1]);
    let mut summary = LedgerSummary::default();
    let mut classes = String::new();
    for (i, p) in realizations(cfg) {
        let sol = solve_one(cfg, &p, i)?;
        let end = output::display_end(&sol, &cfg.times);
        let bumps = seeded_bumps(cfg.ledger.seed.wrapping_add(i), cfg.ledger.bumps, x_range, (0.0, end));
        let report = ledger_verify(&sol, &bumps);
        for c in &report.classifications {
            push_jsonl(
                &mut classes,
                &json!({
                    "realization": i,
                    "event": c.event,
                    "growth": {"species": label(c.growth.0), "w": c.growth.1 + 1},
                    "right_decay": {"species": label(c.right_decay.0), "partner": c.right_decay.1 + 1},
                    "left_decay": {"species": label(c.left_decay.0), "partner": c.left_decay.1 + 1},
                    "coefficient": c.coefficient,
                }),
            );
        }
        summary.add(&sol, &report);
    }
    let passed = summary.passed(LEDGER_TOLERANCE) && substantive.is_empty();
    dir.write("classifications.jsonl", &classes)?;
    dir.write_json(
        "ledger.json",
        &json!({
            "realizations": summary.realizations,
            "events": summary.events,
            "triple_events": summary.triple_events,
            "role_violations": summary.role_violations,
            "balance_violations": summary.balance_violations,
            "mapping_violations": summary.mapping_violations,
            "residuals_checked": summary.residuals_checked,
            "max_residual": summary.max_residual,
            "tolerance": LEDGER_TOLERANCE,
            "violations": summary.samples,
            "passed": passed,
        }),
    )?;
    Ok((
        passed,
        format!(
            "verify-h2: {} realizations, {} events, {} role violations, max residual {:e}",
            summary.realizations, summary.events, summary.role_violations, summary.max_residual
        ),
    ))
}

fn cmd_report(cfg: &RunConfig, dir: &mut OutDir) -> Result<(bool, String), CliError> {
    let (_, p) = realizations(cfg).next().unwrap();
    let sol = solve_one(cfg, &p, 0)?;
    dir.write("polylines.csv", &output::polylines_csv(&sol, output::display_end(&sol, &cfg.times)))?;
    let m = cfg.flux.len();
    let mut cdf = String::from("t,x,k,count,n\n");
    if cfg.profile.is_some() {
        for &t in &cfg.times {
            let slice = sol.slice(t).map_err(run_err)?;
            for &x in &cfg.x_grid {
                let s = slice.eval(x);
                for k in 1..m {
                    writeln!(cdf, "{t},{x},{},{},1", k + 1, (s >= k) as u8).unwrap();
                }
            }
        }
    } else {
        let spec = ensemble_spec(cfg, 1);
        let res = run_ensemble(&spec, &cfg.flux, cfg.workers).map_err(run_err)?;
        let pe = &res.point;
        let n = pe.realizations();
        for (ti, t) in pe.times().iter().enumerate() {
            for (xi, x) in pe.xs().iter().enumerate() {
                for k in 1..m {
                    let c: u64 = (k..m).map(|s| pe.count(ti, xi, s)).sum();
                    writeln!(cdf, "{t},{x},{},{c},{n}", k + 1).unwrap();
                }
            }
        }
    }
    dir.write("cdf.csv", &cdf)?;
    Ok((true, format!("report: {} polylines", sol.fronts().len())))
}

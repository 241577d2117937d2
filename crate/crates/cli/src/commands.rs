use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sbhe_core::basis::Discretization;
use sbhe_core::harness::{StepRule, StudyConfig};
use sbhe_core::integrator::{SimulationOptions, Snapshot, TrajectoryResult};
use sbhe_core::{run_study, simulate, NoiseStream};

use crate::checks::{group_name, run_checks, CheckContext};
use crate::config::RunManifest;

pub const CONVERGENCE_FILES: [&str; 3] = [
    "convergence.csv",
    "convergence.json",
    "convergence_plot.dat",
];
pub const SIMULATE_FILE: &str = "simulate.csv";
pub const PROBE_FILE: &str = "simulate_probe.csv";

/// Creates `dir` if needed and proves it accepts new files.
fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let probe = dir.join(format!(".sbhe-write-test-{}", std::process::id()));
    fs::write(&probe, b"")
        .with_context(|| format!("output directory {} is not writable", dir.display()))?;
    fs::remove_file(&probe).ok();
    Ok(())
}

/// Writes every file under a temporary name first and renames them only once all
/// writes succeeded, so a failure leaves no partial output behind.
fn write_all(dir: &Path, files: &[(&str, String)]) -> Result<Vec<PathBuf>> {
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
    let cleanup = |staged: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in staged {
            fs::remove_file(tmp).ok();
        }
    };
    for (name, body) in files {
        let tmp = dir.join(format!(".{name}.partial"));
        if let Err(e) = fs::write(&tmp, body) {
            cleanup(&staged);
            fs::remove_file(&tmp).ok();
            return Err(e).with_context(|| format!("cannot write {}", tmp.display()));
        }
        staged.push((tmp, dir.join(name)));
    }
    let mut done = Vec::new();
    for (i, (tmp, target)) in staged.iter().enumerate() {
        if let Err(e) = fs::rename(tmp, target) {
            cleanup(&staged[i..]);
            for p in &done {
                fs::remove_file(p).ok();
            }
            return Err(e).with_context(|| format!("cannot create {}", target.display()));
        }
        done.push(target.clone());
    }
    Ok(done)
}

pub fn convergence(m: &RunManifest) -> Result<()> {
    let config = StudyConfig {
        params: m.params()?,
        mode_counts: m.mode_counts.clone(),
        step_rule: match &m.steps {
            Some(s) => StepRule::Explicit(s.clone()),
            None => StepRule::Squared,
        },
        n_trajectories: m.n_trajectories,
        master_seed: m.seed,
        probe: m.probe,
    };
    config.levels()?;
    ensure_writable(&m.out_dir)?;
    let report = run_study(&config)?;
    let files = [
        (CONVERGENCE_FILES[0], report.to_csv()),
        (CONVERGENCE_FILES[1], report.to_json() + "\n"),
        (CONVERGENCE_FILES[2], report.plot_data()),
    ];
    let written = write_all(&m.out_dir, &files)?;
    print!("{}", report.table());
    if m.probe {
        for row in &report.rows {
            if let Some(s) = &row.moments {
                println!(
                    "N = {}: max E[max|v|^{p}] = {:.4}, max E|v|^{p} = {:.4}, Hoelder quotient {:.4}, min denominator {:.4}",
                    row.n_modes,
                    s.max_mean_linf_pow,
                    s.max_mean_l2_pow,
                    s.holder_quotient,
                    s.min_denominator,
                    p = s.p
                );
            }
        }
    }
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn probe_csv(r: &TrajectoryResult) -> String {
    let mut out = String::from("step,t,l2,grid_max,increment_l2\n");
    if let Some(p) = &r.probes {
        for (m, (l2, gm)) in p.l2.iter().zip(&p.grid_max).enumerate() {
            let inc = if m == 0 {
                String::new()
            } else {
                p.increment_l2[m - 1].to_string()
            };
            let _ = writeln!(out, "{m},{},{l2},{gm},{inc}", m as f64 * r.tau);
        }
    }
    out
}

pub fn simulate_cmd(m: &RunManifest) -> Result<()> {
    let n = *m.mode_counts.last().expect("validated non-empty");
    let steps = m.step_counts();
    let n_steps = *steps.last().expect("one step count per mode count");
    ensure_writable(&m.out_dir)?;

    let result = if m.horizon == 0.0 {
        // T = 0: nothing to integrate, only the projected initial condition
        let state = m.initial_condition.project(n)?;
        TrajectoryResult {
            final_state: state.clone(),
            tau: 0.0,
            snapshots: vec![Snapshot {
                step: 0,
                time: 0.0,
                state,
            }],
            probes: None,
        }
    } else {
        let params = m.params()?;
        let disc = Discretization::new(n, n_steps, m.horizon)?;
        let stream = NoiseStream::new(m.seed, 0, n_steps, m.horizon)?;
        let opts = SimulationOptions {
            probe: m.probe,
            snapshot_times: m.snapshots.clone().unwrap_or_else(|| vec![0.0, m.horizon]),
            ..Default::default()
        };
        simulate(&params, &disc, &stream, 1, &opts)?
    };

    let mut files = vec![(SIMULATE_FILE, result.snapshot_csv(8 * n)?)];
    if m.probe && result.probes.is_some() {
        files.push((PROBE_FILE, probe_csv(&result)));
    }
    let written = write_all(&m.out_dir, &files)?;
    println!(
        "N = {n}, M = {}, T = {}: {} snapshot(s), final |v| = {:.6}",
        if m.horizon == 0.0 { 0 } else { n_steps },
        m.horizon,
        result.snapshots.len(),
        result.final_state.norm_l2()
    );
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

pub fn check(m: &RunManifest) -> Result<()> {
    let ctx = CheckContext {
        seed: m.seed,
        samples: m.samples,
        fault: m.fault,
    };
    let outcomes = run_checks(&ctx, m.check_group);
    let mut failed = Vec::new();
    for o in &outcomes {
        match &o.result {
            Ok(detail) => println!("PASS {}/{}: {detail}", group_name(o.group), o.name),
            Err(why) => {
                println!("FAIL {}/{}: {why}", group_name(o.group), o.name);
                failed.push(format!("{}/{}", group_name(o.group), o.name));
            }
        }
    }
    println!(
        "{} of {} checks passed",
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    if !failed.is_empty() {
        bail!("failed checks: {}", failed.join(", "));
    }
    Ok(())
}

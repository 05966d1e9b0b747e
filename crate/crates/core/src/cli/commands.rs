use std::io::Write;
use std::path::{Path, PathBuf};

use super::config::Config;
use crate::bench::{aggregate, run_scenario_with, RunOptions, RunRecord, Scenario, SweepStats};
use crate::pccp::{exhaustive_oracle, run_pccp, PccpParams, PccpStatus, MAX_ORACLE_APS};
use crate::probform::check_constraints;
use crate::{linear_to_db, Error, Result};

/// Outcome of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Feasible,
    /// Infeasible, or no feasible point found.
    Infeasible,
}

impl Exit {
    /// Process exit code; errors map to 1 elsewhere.
    pub fn code(self) -> i32 {
        match self {
            Exit::Feasible => 0,
            Exit::Infeasible => 2,
        }
    }
}

pub const RECORDS_HEADER: [&str; 12] = [
    "scenario",
    "sweep_value",
    "run_index",
    "seed",
    "status",
    "active_count",
    "transmit_power_w",
    "transmit_power_db",
    "tpc_w",
    "iterations",
    "restarts",
    "wall_time_ms",
];

pub const AGGREGATE_HEADER: [&str; 10] = [
    "scenario",
    "sweep_value",
    "runs",
    "feasible_runs",
    "feasibility_rate",
    "mean_active",
    "std_active",
    "mean_tx_power_w",
    "mean_tx_power_db",
    "ecdf_json",
];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn fmt_set(set: &[usize]) -> String {
    let items: Vec<String> = set.iter().map(|n| n.to_string()).collect();
    format!("[{}]", items.join(", "))
}

/// Solves one instance drawn from the configured channel model with `seed`.
///
/// Prints a `key: value` summary to `out`. When `solution_path` is given, a
/// feasible solution is written there as CSV (`ue,ap,antenna,re,im`), and
/// `trace_path` receives the per-iteration PCCP trace.
pub fn cmd_solve(
    cfg: &Config,
    seed: u64,
    solution_path: Option<&Path>,
    trace_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<Exit> {
    let scenario = cfg.scenario()?;
    let params = cfg.system_params()?;
    let h = scenario.channels(&params, seed)?;
    let result = run_pccp(
        &h,
        &params,
        &PccpParams {
            rng_seed: seed,
            ..cfg.pccp
        },
    )?;
    let stdout_err = io_err(Path::new("<stdout>"));
    let mut text = String::new();
    text.push_str(&format!("status: {}\nseed: {seed}\n", result.status.as_str()));
    if let Some(path) = trace_path {
        std::fs::write(path, result.trace_csv()).map_err(io_err(path))?;
    }
    if result.status != PccpStatus::Feasible {
        text.push_str(&format!(
            "iterations: {}\nrestarts: {}\n",
            result.iterations, result.restarts
        ));
        out.write_all(text.as_bytes()).map_err(stdout_err)?;
        return Ok(Exit::Infeasible);
    }
    let report = check_constraints(&h, &result.w, &result.b, &params, 1e-6)?;
    let margins: Vec<String> = report.c2_margins.iter().map(|m| format!("{m:.6e}")).collect();
    text.push_str(&format!(
        "active_aps: {}\nactive_count: {}\ntransmit_power_w: {}\ntransmit_power_db: {}\ntpc_w: {}\n\
         iterations: {}\nrestarts: {}\nsinr_margins: [{}]\n",
        fmt_set(&result.b.active_set()),
        result.active_count,
        result.transmit_power_watts,
        linear_to_db(result.transmit_power_watts),
        result.tpc_watts,
        result.iterations,
        result.restarts,
        margins.join(", ")
    ));
    if let Some(path) = solution_path {
        write_solution(path, &result.w)?;
    }
    out.write_all(text.as_bytes()).map_err(stdout_err)?;
    Ok(Exit::Feasible)
}

fn write_solution(path: &Path, w: &crate::probform::PrecoderSet) -> Result<()> {
    let mut wr = csv::Writer::from_path(path).map_err(csv_err(path))?;
    wr.write_record(["ue", "ap", "antenna", "re", "im"])
        .map_err(csv_err(path))?;
    for (k, wk) in w.w.iter().enumerate() {
        for (i, z) in wk.iter().enumerate() {
            let (n, a) = (i / w.n_ant, i % w.n_ant);
            wr.write_record([
                k.to_string(),
                n.to_string(),
                a.to_string(),
                z.re.to_string(),
                z.im.to_string(),
            ])
            .map_err(csv_err(path))?;
        }
    }
    wr.flush().map_err(io_err(path))
}

/// Runs the scenarios and writes `records.csv`, `aggregate.csv` and
/// `manifest.txt` into `out_dir`, creating it if needed. Records are in
/// canonical order (scenario, sweep value, run index), so the CSV bytes do not
/// depend on the worker count.
pub fn cmd_experiment(scenarios: &[Scenario], out_dir: &Path, opts: &RunOptions, log: &mut dyn Write) -> Result<()> {
    if scenarios.is_empty() {
        return Err(Error::invalid("no scenario to run"));
    }
    for s in scenarios {
        s.validate()?;
    }
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let records_path = out_dir.join("records.csv");
    let aggregate_path = out_dir.join("aggregate.csv");
    let mut records = csv::Writer::from_path(&records_path).map_err(csv_err(&records_path))?;
    let mut agg = csv::Writer::from_path(&aggregate_path).map_err(csv_err(&aggregate_path))?;
    records.write_record(RECORDS_HEADER).map_err(csv_err(&records_path))?;
    agg.write_record(AGGREGATE_HEADER).map_err(csv_err(&aggregate_path))?;

    for s in scenarios {
        let _ = writeln!(log, "running {} ({} points × {} runs)", s.name, s.sweep.len(), s.runs);
        let recs = run_scenario_with(s, opts)?;
        for r in &recs {
            records
                .write_record(record_row(&s.name, r))
                .map_err(csv_err(&records_path))?;
        }
        for p in &aggregate(&recs)?.points {
            agg.write_record(aggregate_row(&s.name, p))
                .map_err(csv_err(&aggregate_path))?;
        }
    }
    records.flush().map_err(io_err(&records_path))?;
    agg.flush().map_err(io_err(&aggregate_path))?;

    let manifest_path = out_dir.join("manifest.txt");
    std::fs::write(&manifest_path, manifest(scenarios)).map_err(io_err(&manifest_path))?;
    Ok(())
}

pub fn record_row(scenario: &str, r: &RunRecord) -> Vec<String> {
    vec![
        scenario.to_string(),
        r.sweep_value.to_string(),
        r.run_index.to_string(),
        r.seed.to_string(),
        r.status.as_str().to_string(),
        r.active_count.to_string(),
        opt(r.transmit_power_watts),
        opt(r.transmit_power_watts.map(linear_to_db)),
        opt(r.tpc_watts),
        r.iterations.to_string(),
        r.restarts.to_string(),
        opt(r.wall_time_ms),
    ]
}

pub fn aggregate_row(scenario: &str, p: &SweepStats) -> Vec<String> {
    let ecdf: Vec<(usize, f64)> = p.ecdf.clone();
    vec![
        scenario.to_string(),
        p.sweep_value.to_string(),
        p.runs.to_string(),
        p.feasible_runs.to_string(),
        p.feasibility_rate.to_string(),
        opt(p.mean_active),
        opt(p.std_active),
        opt(p.mean_tx_power_w),
        opt(p.mean_tx_power_db),
        serde_json::to_string(&ecdf).unwrap_or_default(),
    ]
}

fn manifest(scenarios: &[Scenario]) -> String {
    let mut out = format!("artifact = {} {}\n", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    for s in scenarios {
        out.push_str(&format!("\n# scenario {} (base seed {})\n", s.name, s.base_seed));
        out.push_str(&Config::from_scenario(s).to_text());
    }
    out
}

/// Compares PCCP against the exhaustive oracle on one instance.
pub fn cmd_oracle(cfg: &Config, seed: u64, out: &mut dyn Write) -> Result<Exit> {
    if cfg.n_aps > MAX_ORACLE_APS {
        return Err(Error::invalid(format!(
            "the exhaustive oracle is limited to N ≤ {MAX_ORACLE_APS} APs; this config has N = {}",
            cfg.n_aps
        )));
    }
    let scenario = cfg.scenario()?;
    let params = cfg.system_params()?;
    let h = scenario.channels(&params, seed)?;
    let oracle = exhaustive_oracle(&h, &params, &cfg.pccp.solver)?;
    let pccp = run_pccp(
        &h,
        &params,
        &PccpParams {
            rng_seed: seed,
            ..cfg.pccp
        },
    )?;
    let mut text = format!("seed: {seed}\n");
    match (&oracle.best_subset, oracle.tpc_watts) {
        (Some(set), Some(tpc)) => {
            text.push_str(&format!("oracle_subset: {}\noracle_tpc_w: {tpc}\n", fmt_set(set)));
        }
        _ => text.push_str("oracle_subset: none\noracle_tpc_w:\n"),
    }
    text.push_str(&format!("pccp_status: {}\n", pccp.status.as_str()));
    if pccp.status == PccpStatus::Feasible {
        text.push_str(&format!(
            "pccp_subset: {}\npccp_tpc_w: {}\n",
            fmt_set(&pccp.b.active_set()),
            pccp.tpc_watts
        ));
        if let Some(o) = oracle.tpc_watts {
            text.push_str(&format!("relative_gap: {}\n", (pccp.tpc_watts - o) / o));
        }
    }
    out.write_all(text.as_bytes()).map_err(io_err(Path::new("<stdout>")))?;
    Ok(if oracle.best_subset.is_some() {
        Exit::Feasible
    } else {
        Exit::Infeasible
    })
}

/// Default output directory of `experiment` for a scenario name.
pub fn default_out_dir(name: &str) -> PathBuf {
    PathBuf::from("out").join(name)
}

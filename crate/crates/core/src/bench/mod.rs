//! Seeded Monte Carlo campaigns over named scenarios, with aggregation into
//! per-sweep-point statistics and ECDFs of the active-AP count.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::chanmod::{
    build_covariances, compute_path_gain, gen_shadowing, mmse_estimate, project_pilots, sample_channels,
    ChannelRealization, ChannelSpec, Correlation, Geometry, LargeScaleParams, PilotConfig,
};
use crate::par::{map_indexed, Execution};
use crate::pccp::{run_pccp, PccpParams, PccpStatus};
use crate::probform::{ActivationVector, PrecoderSet, SystemParams};
use crate::{db_to_linear, linear_to_db, Error, Result};

/// Where channel realizations come from.
#[derive(Clone, Debug, PartialEq)]
pub enum ChannelMode {
    /// Unit-variance i.i.d. Rayleigh entries.
    Iid,
    /// Random AP and UE drops in a square, path loss with correlated
    /// shadowing, then correlated Rayleigh fading.
    Geometric(GeometricSetup),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometricSetup {
    /// Side of the square area, meters.
    pub area_side: f64,
    pub large_scale: LargeScaleParams,
    pub correlation: Correlation,
    /// When set, precoders are designed on MMSE estimates from this uplink
    /// training instead of on the true channels.
    pub training: Option<Training>,
}

impl Default for GeometricSetup {
    fn default() -> Self {
        GeometricSetup {
            area_side: 1000.0,
            large_scale: LargeScaleParams::default(),
            correlation: Correlation::Uncorrelated,
            training: None,
        }
    }
}

/// Uplink training with round-robin pilot assignment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Training {
    pub tau_p: usize,
    /// Pilot power per UE, watts.
    pub p_pilot: f64,
    pub sigma_u: f64,
}

impl Training {
    pub fn pilots(&self, n_ues: usize) -> Result<PilotConfig> {
        PilotConfig::round_robin(self.tau_p, self.p_pilot, self.sigma_u, n_ues)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sweep {
    /// SINR targets in dB.
    Gamma0Db(Vec<f64>),
    /// User counts at a fixed SINR target.
    Users { values: Vec<usize>, gamma0_db: f64 },
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Sweep::Gamma0Db(v) => v.clone(),
            Sweep::Users { values, .. } => values.iter().map(|&k| k as f64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Sweep::Gamma0Db(v) => v.len(),
            Sweep::Users { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// Template; the swept field is overwritten per sweep point.
    pub params: SystemParams,
    pub channel_mode: ChannelMode,
    pub sweep: Sweep,
    pub runs: usize,
    pub base_seed: u64,
    /// `rng_seed` is replaced by the per-run seed.
    pub pccp: PccpParams,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::invalid(format!("scenario {}: runs must be ≥ 1", self.name)));
        }
        let values = self.sweep.values();
        if values.is_empty() {
            return Err(Error::invalid(format!("scenario {}: empty sweep", self.name)));
        }
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(format!(
                "scenario {}: sweep values must be strictly increasing",
                self.name
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "scenario {}: non-finite sweep value",
                self.name
            )));
        }
        if let Sweep::Users { values, .. } = &self.sweep {
            if values[0] == 0 {
                return Err(Error::invalid(format!("scenario {}: K = 0 in sweep", self.name)));
            }
        }
        if let ChannelMode::Geometric(g) = &self.channel_mode {
            if !(g.area_side > 0.0 && g.area_side.is_finite()) {
                return Err(Error::invalid(format!(
                    "scenario {}: area side must be positive",
                    self.name
                )));
            }
            g.large_scale.validate()?;
            if let Some(t) = &g.training {
                t.pilots(1)?;
                if !(t.sigma_u > 0.0) {
                    return Err(Error::invalid(format!(
                        "scenario {}: MMSE training needs σ_u > 0",
                        self.name
                    )));
                }
            }
        }
        for i in 0..values.len() {
            self.params_at(i)?.validate()?;
        }
        self.pccp.validate()
    }

    /// System parameters at sweep index `i`.
    pub fn params_at(&self, i: usize) -> Result<SystemParams> {
        let mut p = self.params.clone();
        match &self.sweep {
            Sweep::Gamma0Db(v) => {
                let g = v.get(i).ok_or_else(|| Error::invalid("sweep index out of range"))?;
                p.gamma0 = db_to_linear(*g);
            }
            Sweep::Users { values, gamma0_db } => {
                let k = values
                    .get(i)
                    .ok_or_else(|| Error::invalid("sweep index out of range"))?;
                p.n_ues = *k;
                p.gamma0 = db_to_linear(*gamma0_db);
            }
        }
        Ok(p)
    }

    /// Channels for one run; a pure function of `(params, seed)`.
    pub fn channels(&self, params: &SystemParams, seed: u64) -> Result<ChannelRealization> {
        match &self.channel_mode {
            ChannelMode::Iid => sample_channels(
                ChannelSpec::Iid {
                    n_aps: params.n_aps,
                    n_ant: params.n_ant,
                    n_ues: params.n_ues,
                },
                seed,
            ),
            ChannelMode::Geometric(g) => {
                let geometry = Geometry::random(params.n_aps, params.n_ues, g.area_side, mix(seed, 1))?;
                let shadow = gen_shadowing(&geometry, &g.large_scale, mix(seed, 2))?;
                let beta = compute_path_gain(&geometry, &g.large_scale, &shadow)?;
                let cov = build_covariances(&beta, params.n_ant, &g.large_scale, g.correlation)?;
                let h = sample_channels(ChannelSpec::Correlated(&cov), mix(seed, 3))?;
                match &g.training {
                    None => Ok(h),
                    Some(t) => {
                        let pilots = t.pilots(params.n_ues)?;
                        let y = project_pilots(&h, &pilots, mix(seed, 4))?;
                        Ok(mmse_estimate(&y, &cov, &pilots, h.source)?.h_hat)
                    }
                }
            }
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(a) ^ b)
}

/// Seed of run `run` at sweep value `sweep_value`. Depends only on its three
/// inputs, so extending a sweep never changes the seeds of existing runs.
pub fn run_seed(base_seed: u64, sweep_value: f64, run: usize) -> u64 {
    mix(mix(base_seed, sweep_value.to_bits()), run as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Feasible,
    Infeasible,
    RestartExhausted,
    /// The run aborted with an error (numerical or otherwise).
    Failed,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Feasible => "FEASIBLE",
            RunStatus::Infeasible => "INFEASIBLE",
            RunStatus::RestartExhausted => "RESTART_EXHAUSTED",
            RunStatus::Failed => "ERROR",
        }
    }
}

impl From<PccpStatus> for RunStatus {
    fn from(s: PccpStatus) -> Self {
        match s {
            PccpStatus::Feasible => RunStatus::Feasible,
            PccpStatus::Infeasible => RunStatus::Infeasible,
            PccpStatus::RestartExhausted => RunStatus::RestartExhausted,
        }
    }
}

/// Solution kept for auditing when [`RunOptions::keep_solutions`] is set.
#[derive(Clone, Debug, PartialEq)]
pub struct StoredSolution {
    pub w: PrecoderSet,
    pub b: ActivationVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub sweep_value: f64,
    pub run_index: usize,
    pub seed: u64,
    pub status: RunStatus,
    pub active_count: usize,
    /// Present only for feasible runs.
    pub transmit_power_watts: Option<f64>,
    pub tpc_watts: Option<f64>,
    pub iterations: usize,
    pub restarts: usize,
    /// Present only when timing was requested.
    pub wall_time_ms: Option<f64>,
    pub solution: Option<StoredSolution>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub execution: Execution,
    /// Measure wall time per run. Off by default so records stay reproducible.
    pub timing: bool,
    pub keep_solutions: bool,
}

pub fn run_scenario(s: &Scenario) -> Result<Vec<RunRecord>> {
    run_scenario_with(s, &RunOptions::default())
}

/// Runs every `(sweep value, run index)` pair; records come back sorted by
/// sweep value then run index whatever the execution mode.
pub fn run_scenario_with(s: &Scenario, opts: &RunOptions) -> Result<Vec<RunRecord>> {
    s.validate()?;
    let values = s.sweep.values();
    let params: Vec<SystemParams> = (0..values.len()).map(|i| s.params_at(i)).collect::<Result<_>>()?;
    let total = values.len() * s.runs;
    Ok(map_indexed(total, opts.execution, |idx| {
        let (i, r) = (idx / s.runs, idx % s.runs);
        single_run(s, &params[i], values[i], r, opts)
    }))
}

fn single_run(s: &Scenario, params: &SystemParams, sweep_value: f64, run_index: usize, opts: &RunOptions) -> RunRecord {
    let seed = run_seed(s.base_seed, sweep_value, run_index);
    let start = Instant::now();
    let outcome = s.channels(params, seed).and_then(|h| {
        let pccp = PccpParams {
            rng_seed: seed,
            ..s.pccp
        };
        run_pccp(&h, params, &pccp)
    });
    let wall_time_ms = opts.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    let mut record = RunRecord {
        sweep_value,
        run_index,
        seed,
        status: RunStatus::Failed,
        active_count: 0,
        transmit_power_watts: None,
        tpc_watts: None,
        iterations: 0,
        restarts: 0,
        wall_time_ms,
        solution: None,
    };
    if let Ok(r) = outcome {
        record.status = r.status.into();
        record.iterations = r.iterations;
        record.restarts = r.restarts;
        if r.status == PccpStatus::Feasible {
            record.active_count = r.active_count;
            record.transmit_power_watts = Some(r.transmit_power_watts);
            record.tpc_watts = Some(r.tpc_watts);
            if opts.keep_solutions {
                record.solution = Some(StoredSolution { w: r.w, b: r.b });
            }
        }
    }
    record
}

/// Statistics at one sweep value. Means and the ECDF are over feasible runs
/// and are absent when no run was feasible.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepStats {
    pub sweep_value: f64,
    pub runs: usize,
    pub feasible_runs: usize,
    pub feasibility_rate: f64,
    pub mean_active: Option<f64>,
    /// Sample standard deviation (n − 1); zero for a single feasible run.
    pub std_active: Option<f64>,
    pub mean_tx_power_w: Option<f64>,
    /// `10 log10` of the mean transmit power in watts.
    pub mean_tx_power_db: Option<f64>,
    /// `(value, fraction of feasible runs ≤ value)` at each distinct value.
    pub ecdf: Vec<(usize, f64)>,
}

impl SweepStats {
    /// Right-continuous ECDF; 0 with no feasible runs.
    pub fn ecdf_at(&self, x: f64) -> f64 {
        self.ecdf
            .iter()
            .take_while(|(v, _)| *v as f64 <= x)
            .last()
            .map_or(0.0, |(_, f)| *f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateStats {
    /// Ordered by sweep value.
    pub points: Vec<SweepStats>,
}

pub fn aggregate(records: &[RunRecord]) -> Result<AggregateStats> {
    if records.is_empty() {
        return Err(Error::invalid("no records to aggregate"));
    }
    let mut groups: BTreeMap<u64, (f64, Vec<&RunRecord>)> = BTreeMap::new();
    for r in records {
        if !r.sweep_value.is_finite() {
            return Err(Error::invalid("non-finite sweep value in records"));
        }
        groups
            .entry(order_key(r.sweep_value))
            .or_insert_with(|| (r.sweep_value, Vec::new()))
            .1
            .push(r);
    }
    let points = groups
        .into_values()
        .map(|(sweep_value, group)| sweep_stats(sweep_value, &group))
        .collect();
    Ok(AggregateStats { points })
}

/// Maps an f64 to a u64 with the same ordering.
fn order_key(x: f64) -> u64 {
    let bits = x.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | 1 << 63
    }
}

fn sweep_stats(sweep_value: f64, group: &[&RunRecord]) -> SweepStats {
    let feasible: Vec<&RunRecord> = group
        .iter()
        .copied()
        .filter(|r| r.status == RunStatus::Feasible)
        .collect();
    let n = feasible.len();
    let mut stats = SweepStats {
        sweep_value,
        runs: group.len(),
        feasible_runs: n,
        feasibility_rate: n as f64 / group.len() as f64,
        mean_active: None,
        std_active: None,
        mean_tx_power_w: None,
        mean_tx_power_db: None,
        ecdf: Vec::new(),
    };
    if n == 0 {
        return stats;
    }
    let active: Vec<f64> = feasible.iter().map(|r| r.active_count as f64).collect();
    let mean = active.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (active.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let power = feasible
        .iter()
        .map(|r| r.transmit_power_watts.unwrap_or(f64::NAN))
        .sum::<f64>()
        / n as f64;
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for r in &feasible {
        *counts.entry(r.active_count).or_default() += 1;
    }
    let mut cumulative = 0;
    stats.ecdf = counts
        .into_iter()
        .map(|(v, c)| {
            cumulative += c;
            (v, cumulative as f64 / n as f64)
        })
        .collect();
    stats.mean_active = Some(mean);
    stats.std_active = Some(std);
    stats.mean_tx_power_w = Some(power);
    stats.mean_tx_power_db = Some(linear_to_db(power));
    stats
}

/// Base seed of the built-in scenarios.
pub const DEFAULT_BASE_SEED: u64 = 1;

/// User counts of the feasibility-collapse sweep.
pub const FIG5_USERS: [usize; 5] = [10, 20, 30, 35, 40];

/// SINR targets of the feasibility-collapse sweep; each gets its own scenario
/// `fig5_<γ0>db`.
pub const FIG5_GAMMA0_DB: [f64; 3] = [4.0, 7.0, 10.0];

fn builtin(name: &str, params: SystemParams, sweep: Sweep) -> Scenario {
    Scenario {
        name: name.to_string(),
        params,
        channel_mode: ChannelMode::Iid,
        sweep,
        runs: 100,
        base_seed: DEFAULT_BASE_SEED,
        pccp: PccpParams::default(),
    }
}

/// The four experiment families: `fig2` (SINR sweep at N = 15, N_AP = 4,
/// K = 10), `fig3` (user sweep at 4 dB), `fig4` (N = 10, K = 21 at 4 and
/// 7 dB) and `fig5_4db`, `fig5_7db`, `fig5_10db` (user sweep up to 40 at
/// N = 10, N_AP = 4). All use 100 runs, i.i.d. channels and 1 W per AP.
pub fn builtin_scenarios() -> BTreeMap<String, Scenario> {
    let mut out = BTreeMap::new();
    let mut add = |s: Scenario| {
        out.insert(s.name.clone(), s);
    };
    add(builtin(
        "fig2",
        SystemParams::new(15, 4, 10),
        Sweep::Gamma0Db(vec![0.0, 4.0, 7.0, 10.0, 15.0, 18.0]),
    ));
    add(builtin(
        "fig3",
        SystemParams::new(15, 4, 10),
        Sweep::Users {
            values: vec![5, 10, 15, 20],
            gamma0_db: 4.0,
        },
    ));
    add(builtin(
        "fig4",
        SystemParams::new(10, 4, 21),
        Sweep::Gamma0Db(vec![4.0, 7.0]),
    ));
    for g in FIG5_GAMMA0_DB {
        add(builtin(
            &format!("fig5_{g}db"),
            SystemParams::new(10, 4, FIG5_USERS[0]),
            Sweep::Users {
                values: FIG5_USERS.to_vec(),
                gamma0_db: g,
            },
        ));
    }
    out
}

/// Resolves a scenario name; a group name such as `fig5` expands to all
/// scenarios named `fig5_*`.
pub fn resolve_scenarios(name: &str) -> Result<Vec<Scenario>> {
    let all = builtin_scenarios();
    if let Some(s) = all.get(name) {
        return Ok(vec![s.clone()]);
    }
    let prefix = format!("{name}_");
    let mut group: Vec<Scenario> = all.into_values().filter(|s| s.name.starts_with(&prefix)).collect();
    if group.is_empty() {
        let names: Vec<String> = builtin_scenarios().into_keys().collect();
        return Err(Error::invalid(format!(
            "unknown scenario {name}; known: {} and the fig5 group",
            names.join(", ")
        )));
    }
    // fig5_4db, fig5_7db, fig5_10db in SINR order
    group.sort_by(|a, b| {
        let g = |s: &Scenario| match s.sweep {
            Sweep::Users { gamma0_db, .. } => gamma0_db,
            Sweep::Gamma0Db(_) => 0.0,
        };
        g(a).total_cmp(&g(b))
    });
    Ok(group)
}

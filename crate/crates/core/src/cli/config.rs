//! Flat `section.key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is optional
//! and falls back to its default; an unknown key, a repeated key or a value
//! that does not parse is reported with its line number. [`Config::to_text`]
//! writes every key with its effective value, and parsing that text gives back
//! an identical [`Config`].

use std::fmt::Write as _;
use std::path::Path;

use crate::bench::{ChannelMode, GeometricSetup, Scenario, Sweep, Training};
use crate::chanmod::{Correlation, LargeScaleParams, TraceConvention};
use crate::pccp::{LambdaUpdate, PccpParams};
use crate::probform::{SubproblemForm, SystemParams};
use crate::{db_to_linear, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelKind {
    Iid,
    Geometric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Csi {
    /// Precoders see the true channels.
    Perfect,
    /// Precoders see MMSE estimates from uplink training (geometric mode).
    Mmse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKind {
    Gamma0Db,
    Users,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub n_aps: usize,
    pub n_ant: usize,
    pub n_ues: usize,
    /// One budget for every AP, or one per AP.
    pub p_max_w: Vec<f64>,
    pub p_fix_w: f64,
    pub eta: f64,
    pub sigma2: f64,
    pub gamma0_db: f64,

    pub channel: ChannelKind,
    pub area_side_m: f64,
    /// Exponential antenna correlation coefficient; 0 means uncorrelated.
    pub correlation: f64,
    pub csi: Csi,
    pub large_scale: LargeScaleParams,

    pub tau_p: usize,
    pub p_pilot_w: f64,
    pub sigma_u: f64,

    /// `rng_seed` is not configurable; it comes from the run seed.
    pub pccp: PccpParams,

    pub scenario_name: String,
    pub sweep: SweepKind,
    pub sweep_values: Vec<f64>,
    pub runs: usize,
    pub base_seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        let sys = SystemParams::new(15, 4, 10);
        Config {
            n_aps: sys.n_aps,
            n_ant: sys.n_ant,
            n_ues: sys.n_ues,
            p_max_w: vec![1.0],
            p_fix_w: sys.p_fix,
            eta: sys.eta,
            sigma2: sys.sigma2,
            gamma0_db: 4.0,
            channel: ChannelKind::Iid,
            area_side_m: GeometricSetup::default().area_side,
            correlation: 0.0,
            csi: Csi::Perfect,
            large_scale: LargeScaleParams::default(),
            tau_p: 10,
            p_pilot_w: 0.2,
            sigma_u: 1.0,
            pccp: PccpParams::default(),
            scenario_name: "custom".into(),
            sweep: SweepKind::Gamma0Db,
            sweep_values: vec![0.0, 4.0, 7.0, 10.0, 15.0, 18.0],
            runs: 100,
            base_seed: crate::bench::DEFAULT_BASE_SEED,
        }
    }
}

type Getter = fn(&Config) -> String;
type Setter = fn(&mut Config, &str) -> std::result::Result<(), String>;

struct Key {
    name: &'static str,
    get: Getter,
    set: Setter,
}

fn float(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("expected a number, got {v:?}"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{v} is not finite"))
    }
}

fn uint(v: &str) -> std::result::Result<usize, String> {
    v.parse()
        .map_err(|_| format!("expected a non-negative integer, got {v:?}"))
}

fn floats(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',').map(|s| float(s.trim())).collect()
}

fn fmt_floats(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

fn choice<T: Copy>(v: &str, options: &[(&str, T)]) -> std::result::Result<T, String> {
    options
        .iter()
        .find(|(name, _)| *name == v)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            format!("expected one of {}, got {v:?}", names.join(" | "))
        })
}

fn name_of<T: PartialEq>(t: T, options: &[(&'static str, T)]) -> String {
    options
        .iter()
        .find(|(_, o)| *o == t)
        .map(|(n, _)| n.to_string())
        .unwrap_or_default()
}

const CHANNELS: [(&str, ChannelKind); 2] = [("iid", ChannelKind::Iid), ("geometric", ChannelKind::Geometric)];
const CSI: [(&str, Csi); 2] = [("perfect", Csi::Perfect), ("mmse", Csi::Mmse)];
const TRACES: [(&str, TraceConvention); 2] = [
    ("conventional", TraceConvention::Conventional),
    ("as_paper", TraceConvention::AsPaper),
];
const UPDATES: [(&str, LambdaUpdate); 2] = [
    ("capped", LambdaUpdate::Capped),
    ("literal_max", LambdaUpdate::LiteralMax),
];
const FORMS: [(&str, SubproblemForm); 2] = [
    ("perspective", SubproblemForm::Perspective),
    ("literal", SubproblemForm::Literal),
];
const SWEEPS: [(&str, SweepKind); 2] = [("gamma0_db", SweepKind::Gamma0Db), ("users", SweepKind::Users)];

macro_rules! key {
    ($name:literal, float, $($f:ident).+) => {
        Key {
            name: $name,
            get: |c| format!("{:?}", c.$($f).+),
            set: |c, v| {
                c.$($f).+ = float(v)?;
                Ok(())
            },
        }
    };
    ($name:literal, uint, $($f:ident).+) => {
        Key {
            name: $name,
            get: |c| c.$($f).+.to_string(),
            set: |c, v| {
                c.$($f).+ = uint(v)?;
                Ok(())
            },
        }
    };
    ($name:literal, $table:ident, $($f:ident).+) => {
        Key {
            name: $name,
            get: |c| name_of(c.$($f).+, &$table),
            set: |c, v| {
                c.$($f).+ = choice(v, &$table)?;
                Ok(())
            },
        }
    };
}

const KEYS: &[Key] = &[
    key!("system.n_aps", uint, n_aps),
    key!("system.n_ant", uint, n_ant),
    key!("system.n_ues", uint, n_ues),
    Key {
        name: "system.p_max_w",
        get: |c| fmt_floats(&c.p_max_w),
        set: |c, v| {
            c.p_max_w = floats(v)?;
            Ok(())
        },
    },
    key!("system.p_fix_w", float, p_fix_w),
    key!("system.eta", float, eta),
    key!("system.sigma2", float, sigma2),
    key!("system.gamma0_db", float, gamma0_db),
    key!("channel.mode", CHANNELS, channel),
    key!("channel.area_side_m", float, area_side_m),
    key!("channel.correlation", float, correlation),
    key!("channel.csi", CSI, csi),
    key!("large_scale.zeta0_db", float, large_scale.zeta0_db),
    key!("large_scale.alpha", float, large_scale.alpha),
    key!("large_scale.sigma_chi_db", float, large_scale.sigma_chi_db),
    key!("large_scale.d_decorr_m", float, large_scale.d_decorr),
    key!("large_scale.ap_share", float, large_scale.ap_share),
    key!("large_scale.trace", TRACES, large_scale.trace_convention),
    key!("pilots.tau_p", uint, tau_p),
    key!("pilots.p_pilot_w", float, p_pilot_w),
    key!("pilots.sigma_u", float, sigma_u),
    key!("pccp.lambda0", float, pccp.lambda0),
    key!("pccp.rho", float, pccp.rho),
    key!("pccp.lambda_max", float, pccp.lambda_max),
    key!("pccp.psi", float, pccp.psi),
    key!("pccp.omega", float, pccp.omega),
    key!("pccp.t_max", uint, pccp.t_max),
    key!("pccp.max_restarts", uint, pccp.max_restarts),
    key!("pccp.lambda_update", UPDATES, pccp.lambda_update),
    key!("pccp.form", FORMS, pccp.form),
    key!("solver.tol", float, pccp.solver.tol),
    Key {
        name: "solver.max_iter",
        get: |c| c.pccp.solver.max_iter.to_string(),
        set: |c, v| {
            c.pccp.solver.max_iter = v.parse().map_err(|_| format!("expected an integer, got {v:?}"))?;
            Ok(())
        },
    },
    Key {
        name: "scenario.name",
        get: |c| c.scenario_name.clone(),
        set: |c, v| {
            if v.is_empty() || v.contains(',') || v.contains('"') {
                return Err("scenario name must be non-empty without commas or quotes".into());
            }
            c.scenario_name = v.to_string();
            Ok(())
        },
    },
    key!("scenario.sweep", SWEEPS, sweep),
    Key {
        name: "scenario.values",
        get: |c| fmt_floats(&c.sweep_values),
        set: |c, v| {
            c.sweep_values = floats(v)?;
            Ok(())
        },
    },
    key!("scenario.runs", uint, runs),
    Key {
        name: "scenario.base_seed",
        get: |c| c.base_seed.to_string(),
        set: |c, v| {
            c.base_seed = v
                .parse()
                .map_err(|_| format!("expected a 64-bit unsigned integer, got {v:?}"))?;
            Ok(())
        },
    },
];

impl Config {
    /// Names of all recognized keys in file order.
    pub fn keys() -> impl Iterator<Item = &'static str> {
        KEYS.iter().map(|k| k.name)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        let mut seen: Vec<(&'static str, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Config { line, message };
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got {content:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            let key = KEYS
                .iter()
                .find(|key| key.name == k)
                .ok_or_else(|| err(format!("unknown key `{k}`")))?;
            if let Some((_, first)) = seen.iter().find(|(name, _)| *name == key.name) {
                return Err(err(format!("key `{k}` already set on line {first}")));
            }
            seen.push((key.name, line));
            (key.set)(&mut cfg, v).map_err(|m| err(format!("`{k}`: {m}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Every key with its effective value, grouped by section.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for key in KEYS {
            let s = key.name.split('.').next().unwrap_or("");
            if s != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                section = s;
            }
            let _ = writeln!(out, "{} = {}", key.name, (key.get)(self));
        }
        out
    }

    /// Checks every physical quantity by building the derived parameter sets.
    pub fn validate(&self) -> Result<()> {
        self.system_params()?.validate()?;
        if self.p_max_w.len() != 1 && self.p_max_w.len() != self.n_aps {
            return Err(Error::invalid(format!(
                "system.p_max_w: {} values for {} APs (give one or N)",
                self.p_max_w.len(),
                self.n_aps
            )));
        }
        if !(self.correlation.abs() < 1.0) {
            return Err(Error::invalid(format!(
                "channel.correlation {} needs |r| < 1",
                self.correlation
            )));
        }
        if self.csi == Csi::Mmse && self.channel != ChannelKind::Geometric {
            return Err(Error::invalid("channel.csi = mmse needs channel.mode = geometric"));
        }
        self.training().map(|t| t.pilots(self.n_ues)).transpose()?;
        self.scenario()?.validate()
    }

    pub fn system_params(&self) -> Result<SystemParams> {
        let p_max = match self.p_max_w.as_slice() {
            [p] => vec![*p; self.n_aps],
            ps => ps.to_vec(),
        };
        let p = SystemParams {
            n_aps: self.n_aps,
            n_ant: self.n_ant,
            n_ues: self.n_ues,
            p_max,
            p_fix: self.p_fix_w,
            eta: self.eta,
            sigma2: self.sigma2,
            gamma0: db_to_linear(self.gamma0_db),
        };
        p.validate()?;
        Ok(p)
    }

    fn training(&self) -> Option<Training> {
        (self.csi == Csi::Mmse).then_some(Training {
            tau_p: self.tau_p,
            p_pilot: self.p_pilot_w,
            sigma_u: self.sigma_u,
        })
    }

    pub fn channel_mode(&self) -> ChannelMode {
        match self.channel {
            ChannelKind::Iid => ChannelMode::Iid,
            ChannelKind::Geometric => ChannelMode::Geometric(GeometricSetup {
                area_side: self.area_side_m,
                large_scale: self.large_scale,
                correlation: if self.correlation == 0.0 {
                    Correlation::Uncorrelated
                } else {
                    Correlation::Exponential(self.correlation)
                },
                training: self.training(),
            }),
        }
    }

    /// The campaign described by the `scenario.*` keys on top of the system
    /// template; a user sweep runs at `system.gamma0_db`.
    pub fn scenario(&self) -> Result<Scenario> {
        let sweep = match self.sweep {
            SweepKind::Gamma0Db => Sweep::Gamma0Db(self.sweep_values.clone()),
            SweepKind::Users => {
                let values = self
                    .sweep_values
                    .iter()
                    .map(|&v| {
                        if v >= 1.0 && v.fract() == 0.0 {
                            Ok(v as usize)
                        } else {
                            Err(Error::invalid(format!(
                                "scenario.values: user count {v} is not a positive integer"
                            )))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                Sweep::Users {
                    values,
                    gamma0_db: self.gamma0_db,
                }
            }
        };
        Ok(Scenario {
            name: self.scenario_name.clone(),
            params: self.system_params()?,
            channel_mode: self.channel_mode(),
            sweep,
            runs: self.runs,
            base_seed: self.base_seed,
            pccp: self.pccp,
        })
    }

    /// Configuration equivalent to a scenario, used for run manifests.
    pub fn from_scenario(s: &Scenario) -> Self {
        let mut c = Config {
            n_aps: s.params.n_aps,
            n_ant: s.params.n_ant,
            n_ues: s.params.n_ues,
            p_max_w: s.params.p_max.clone(),
            p_fix_w: s.params.p_fix,
            eta: s.params.eta,
            sigma2: s.params.sigma2,
            gamma0_db: crate::linear_to_db(s.params.gamma0),
            pccp: s.pccp,
            scenario_name: s.name.clone(),
            sweep_values: s.sweep.values(),
            runs: s.runs,
            base_seed: s.base_seed,
            ..Config::default()
        };
        if c.p_max_w.windows(2).all(|w| w[0] == w[1]) {
            c.p_max_w.truncate(1);
        }
        if let Sweep::Users { gamma0_db, .. } = s.sweep {
            c.sweep = SweepKind::Users;
            c.gamma0_db = gamma0_db;
        }
        if let ChannelMode::Geometric(g) = &s.channel_mode {
            c.channel = ChannelKind::Geometric;
            c.area_side_m = g.area_side;
            c.large_scale = g.large_scale;
            c.correlation = match g.correlation {
                Correlation::Uncorrelated => 0.0,
                Correlation::Exponential(r) => r,
            };
            if let Some(t) = g.training {
                c.csi = Csi::Mmse;
                c.tau_p = t.tau_p;
                c.p_pilot_w = t.p_pilot;
                c.sigma_u = t.sigma_u;
            }
        }
        c
    }
}

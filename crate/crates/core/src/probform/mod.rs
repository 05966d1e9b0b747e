//! System model: SINR, rate and power formulas, the feasibility check of the
//! on/off problem, and its conic building blocks.

mod conic;

pub use conic::{
    assemble_fixed_active_set, assemble_subproblem, assemble_subproblem_with, build_soc_sinr_constraints,
    linearize_binary, BinarySplit, ConvexBinaryConstraint, FixedSetProgram, LinearizedBinaryConstraint,
    PenalizedSubproblem, PrecoderLayout, SinrConstraint, SubproblemForm,
};

use crate::chanmod::ChannelRealization;
use crate::{db_to_linear, CVector, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SystemParams {
    pub n_aps: usize,
    pub n_ant: usize,
    pub n_ues: usize,
    /// Per-AP transmit power budget, watts.
    pub p_max: Vec<f64>,
    /// Fixed consumption of an active AP, watts.
    pub p_fix: f64,
    /// Amplifier efficiency in (0, 1].
    pub eta: f64,
    /// Receiver noise power, watts.
    pub sigma2: f64,
    /// Linear SINR target.
    pub gamma0: f64,
}

impl SystemParams {
    /// Defaults: 1 W per AP, `P_FIX` = 0.2 W, η = 0.39, σ² = 1, γ0 = 4 dB.
    pub fn new(n_aps: usize, n_ant: usize, n_ues: usize) -> Self {
        SystemParams {
            n_aps,
            n_ant,
            n_ues,
            p_max: vec![1.0; n_aps],
            p_fix: 0.2,
            eta: 0.39,
            sigma2: 1.0,
            gamma0: db_to_linear(4.0),
        }
    }

    pub fn with_gamma0_db(mut self, db: f64) -> Self {
        self.gamma0 = db_to_linear(db);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_aps == 0 || self.n_ant == 0 || self.n_ues == 0 {
            return Err(Error::invalid("N, N_AP and K must all be ≥ 1"));
        }
        if self.p_max.len() != self.n_aps {
            return Err(Error::invalid(format!(
                "{} power budgets for {} APs",
                self.p_max.len(),
                self.n_aps
            )));
        }
        if self.p_max.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::invalid("per-AP power budgets must be positive"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::invalid(format!(
                "amplifier efficiency {} outside (0, 1]",
                self.eta
            )));
        }
        if !(self.p_fix >= 0.0 && self.p_fix.is_finite()) {
            return Err(Error::invalid(format!("fixed AP power {} must be ≥ 0", self.p_fix)));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::invalid(format!("noise power {} must be positive", self.sigma2)));
        }
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return Err(Error::invalid(format!("SINR target {} must be positive", self.gamma0)));
        }
        Ok(())
    }

    pub(crate) fn check_channels(&self, h: &ChannelRealization) -> Result<()> {
        if h.n_aps != self.n_aps || h.n_ant != self.n_ant || h.n_ues() != self.n_ues {
            return Err(Error::invalid(format!(
                "channels are {}×{}×{} (N×N_AP×K), parameters expect {}×{}×{}",
                h.n_aps,
                h.n_ant,
                h.n_ues(),
                self.n_aps,
                self.n_ant,
                self.n_ues
            )));
        }
        Ok(())
    }
}

/// Precoders `w_k`, stacked per AP like the channels.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecoderSet {
    pub w: Vec<CVector>,
    pub n_aps: usize,
    pub n_ant: usize,
}

impl PrecoderSet {
    pub fn zeros(n_aps: usize, n_ant: usize, n_ues: usize) -> Self {
        PrecoderSet {
            w: vec![CVector::zeros(n_aps * n_ant); n_ues],
            n_aps,
            n_ant,
        }
    }

    pub fn block(&self, k: usize, n: usize) -> CVector {
        self.w[k].rows(n * self.n_ant, self.n_ant).into_owned()
    }

    /// `Σ_k ‖w_k^[n]‖²`, the transmit power of AP `n`.
    pub fn ap_power(&self, n: usize) -> f64 {
        self.w
            .iter()
            .map(|wk| wk.rows(n * self.n_ant, self.n_ant).norm_squared())
            .sum()
    }

    /// `Σ_k ‖w_k‖²`.
    pub fn transmit_power(&self) -> f64 {
        self.w.iter().map(|wk| wk.norm_squared()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActivationMode {
    Relaxed,
    Binary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActivationVector {
    pub b: Vec<f64>,
    pub mode: ActivationMode,
}

impl ActivationVector {
    pub fn relaxed(b: Vec<f64>) -> Result<Self> {
        if let Some(v) = b.iter().find(|&&v| !(0.0..=1.0 + 1e-9).contains(&v)) {
            return Err(Error::invalid(format!("relaxed activation {v} outside [0, 1]")));
        }
        Ok(ActivationVector {
            b,
            mode: ActivationMode::Relaxed,
        })
    }

    pub fn binary(b: Vec<f64>) -> Result<Self> {
        if let Some(v) = b.iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::invalid(format!("binary activation {v} is not 0 or 1")));
        }
        Ok(ActivationVector {
            b,
            mode: ActivationMode::Binary,
        })
    }

    pub fn from_active_set(n_aps: usize, active: &[usize]) -> Self {
        let mut b = vec![0.0; n_aps];
        for &n in active {
            b[n] = 1.0;
        }
        ActivationVector {
            b,
            mode: ActivationMode::Binary,
        }
    }

    pub fn active_set(&self) -> Vec<usize> {
        self.b
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= 0.5)
            .map(|(n, _)| n)
            .collect()
    }

    pub fn count(&self) -> f64 {
        self.b.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlackVector {
    pub s: Vec<f64>,
}

impl SlackVector {
    pub fn total(&self) -> f64 {
        self.s.iter().sum()
    }
}

/// Per-user SINR with every other user's precoder counted as interference.
pub fn compute_sinr(h: &ChannelRealization, w: &PrecoderSet, sigma2: f64) -> Result<Vec<f64>> {
    if h.n_ues() != w.w.len() {
        return Err(Error::invalid(format!(
            "{} channels but {} precoders",
            h.n_ues(),
            w.w.len()
        )));
    }
    if let Some(wk) = w.w.iter().find(|wk| wk.len() != h.dim()) {
        return Err(Error::invalid(format!(
            "precoder length {} does not match channel length {}",
            wk.len(),
            h.dim()
        )));
    }
    Ok(h.h
        .iter()
        .enumerate()
        .map(|(k, hk)| {
            let mut signal = 0.0;
            let mut interference = 0.0;
            for (j, wj) in w.w.iter().enumerate() {
                let p = hk.dotc(wj).norm_sqr();
                if j == k {
                    signal = p;
                } else {
                    interference += p;
                }
            }
            signal / (interference + sigma2)
        })
        .collect())
}

/// Achievable rates `log2(1 + SINR)` in bit/s/Hz.
pub fn compute_rate(sinr: &[f64]) -> Result<Vec<f64>> {
    if let Some(s) = sinr.iter().find(|&&s| !(s >= 0.0)) {
        return Err(Error::invalid(format!("SINR {s} is negative")));
    }
    Ok(sinr.iter().map(|s| (1.0 + s).log2()).collect())
}

/// Total power consumption: amplifier-scaled transmit power plus `P_FIX` per
/// (fractionally) active AP.
pub fn compute_tpc(w: &PrecoderSet, b: &ActivationVector, params: &SystemParams) -> f64 {
    w.transmit_power() / params.eta + params.p_fix * b.count()
}

/// Margins of the per-AP power (C1), SINR (C2) and binary (C3) constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityReport {
    /// `b_n P_n − Σ_k ‖w_k^[n]‖²`.
    pub c1_margins: Vec<f64>,
    /// `SINR_k − γ0`.
    pub c2_margins: Vec<f64>,
    pub c3_binary: bool,
    pub feasible: bool,
}

impl FeasibilityReport {
    pub fn min_sinr_margin(&self) -> f64 {
        self.c2_margins.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Checks a candidate against the on/off problem's constraints.
///
/// A power margin passes when it is ≥ `-tol · P_n` and an SINR margin when it
/// is ≥ `-tol · γ0`, so `tol` acts as a relative tolerance on each side.
pub fn check_constraints(
    h: &ChannelRealization,
    w: &PrecoderSet,
    b: &ActivationVector,
    params: &SystemParams,
    tol: f64,
) -> Result<FeasibilityReport> {
    params.validate()?;
    params.check_channels(h)?;
    if b.b.len() != params.n_aps {
        return Err(Error::invalid("activation length does not match N"));
    }
    let sinr = compute_sinr(h, w, params.sigma2)?;
    let c1_margins: Vec<f64> = (0..params.n_aps)
        .map(|n| b.b[n] * params.p_max[n] - w.ap_power(n))
        .collect();
    let c2_margins: Vec<f64> = sinr.iter().map(|s| s - params.gamma0).collect();
    let c3_binary = b.b.iter().all(|&v| v == 0.0 || v == 1.0);
    let c1_ok = c1_margins.iter().zip(&params.p_max).all(|(m, p)| *m >= -tol * p);
    let c2_ok = c2_margins.iter().all(|m| *m >= -tol * params.gamma0);
    Ok(FeasibilityReport {
        feasible: c1_ok && c2_ok && c3_binary,
        c1_margins,
        c2_margins,
        c3_binary,
    })
}

//! Channel generation: large-scale fading, spatial covariances, correlated
//! Rayleigh draws, uplink pilot projection and MMSE estimation.
//!
//! Every random operation takes an explicit seed and draws from a ChaCha8
//! stream, so identical seeds give bit-identical outputs on every platform.

mod fading;
mod large_scale;
mod pilots;

pub use fading::{build_covariances, hermitian_sqrt, sample_channels, ChannelSampler, ChannelSpec};
pub use large_scale::{compute_path_gain, gen_shadowing, ShadowingSampler};
pub use pilots::{mmse_estimate, pilot_sequence, project_pilots, EstimateSet, PilotConfig, Projections};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{CMatrix, CVector, Error, Result};

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// AP and UE positions in a square area, in meters.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub ap_positions: Vec<[f64; 2]>,
    pub ue_positions: Vec<[f64; 2]>,
    pub area_side: f64,
}

impl Geometry {
    pub fn new(ap_positions: Vec<[f64; 2]>, ue_positions: Vec<[f64; 2]>, area_side: f64) -> Result<Self> {
        let g = Geometry {
            ap_positions,
            ue_positions,
            area_side,
        };
        g.validate()?;
        Ok(g)
    }

    /// Uniform drop of `n_aps` APs and `n_ues` UEs.
    pub fn random(n_aps: usize, n_ues: usize, area_side: f64, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let mut drop = |count: usize| -> Vec<[f64; 2]> {
            (0..count)
                .map(|_| [rng.random::<f64>() * area_side, rng.random::<f64>() * area_side])
                .collect()
        };
        let aps = drop(n_aps);
        let ues = drop(n_ues);
        Geometry::new(aps, ues, area_side)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ap_positions.is_empty() || self.ue_positions.is_empty() {
            return Err(Error::invalid("geometry needs at least one AP and one UE"));
        }
        if !(self.area_side > 0.0) {
            return Err(Error::invalid(format!("area side {} must be positive", self.area_side)));
        }
        for p in self.ap_positions.iter().chain(&self.ue_positions) {
            if p.iter().any(|c| c.is_nan()) {
                return Err(Error::invalid("NaN coordinate in geometry"));
            }
            if p.iter().any(|&c| c < 0.0 || c > self.area_side) {
                return Err(Error::invalid(format!(
                    "position ({}, {}) outside [0, {}]²",
                    p[0], p[1], self.area_side
                )));
            }
        }
        Ok(())
    }

    pub fn n_aps(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn n_ues(&self) -> usize {
        self.ue_positions.len()
    }

    /// Distance from AP `n` to UE `k`.
    pub fn distance(&self, n: usize, k: usize) -> f64 {
        dist(self.ap_positions[n], self.ue_positions[k])
    }
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// How `trace(R)` relates to the large-scale gain `β`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TraceConvention {
    /// `trace(R) = β / N_AP`.
    AsPaper,
    /// `trace(R) = N_AP · β`, i.e. every antenna sees gain `β`.
    #[default]
    Conventional,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LargeScaleParams {
    /// Path loss at 1 m, dB.
    pub zeta0_db: f64,
    pub alpha: f64,
    pub sigma_chi_db: f64,
    /// Shadowing decorrelation distance, meters.
    pub d_decorr: f64,
    /// Share of shadowing variance carried by the AP-side component.
    pub ap_share: f64,
    pub trace_convention: TraceConvention,
}

impl Default for LargeScaleParams {
    fn default() -> Self {
        LargeScaleParams {
            zeta0_db: 30.5,
            alpha: 3.67,
            sigma_chi_db: 4.0,
            d_decorr: 100.0,
            ap_share: 0.5,
            trace_convention: TraceConvention::Conventional,
        }
    }
}

impl LargeScaleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::invalid(format!(
                "path-loss exponent {} must be positive",
                self.alpha
            )));
        }
        if !(self.sigma_chi_db >= 0.0) {
            return Err(Error::invalid(format!(
                "shadowing std {} dB must be ≥ 0",
                self.sigma_chi_db
            )));
        }
        if !(self.d_decorr > 0.0) {
            return Err(Error::invalid(format!(
                "decorrelation distance {} must be positive",
                self.d_decorr
            )));
        }
        if !(0.0..=1.0).contains(&self.ap_share) {
            return Err(Error::invalid(format!(
                "AP shadowing share {} outside [0, 1]",
                self.ap_share
            )));
        }
        if !self.zeta0_db.is_finite() {
            return Err(Error::invalid("reference path loss must be finite"));
        }
        Ok(())
    }
}

/// Antenna correlation model for the unit-diagonal matrix behind each `R`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Correlation {
    #[default]
    Uncorrelated,
    /// `C[i][j] = r^|i-j|`.
    Exponential(f64),
}

/// Spatial covariances `R[n][k]` and the large-scale gains they came from.
#[derive(Clone, Debug)]
pub struct CovarianceSet {
    pub r: Vec<Vec<CMatrix>>,
    pub beta: DMatrix<f64>,
    pub n_ant: usize,
}

impl CovarianceSet {
    pub fn n_aps(&self) -> usize {
        self.r.len()
    }

    pub fn n_ues(&self) -> usize {
        self.r.first().map_or(0, Vec::len)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelSource {
    Geometric,
    Iid,
}

/// Stacked downlink channels: `h[k]` has `n_aps · n_ant` entries and block `n`
/// (entries `n·n_ant .. (n+1)·n_ant`) belongs to AP `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub h: Vec<CVector>,
    pub n_aps: usize,
    pub n_ant: usize,
    pub source: ChannelSource,
}

impl ChannelRealization {
    pub fn new(h: Vec<CVector>, n_aps: usize, n_ant: usize, source: ChannelSource) -> Result<Self> {
        if h.is_empty() || n_aps == 0 || n_ant == 0 {
            return Err(Error::invalid("channel realization needs K, N, N_AP ≥ 1"));
        }
        if let Some(bad) = h.iter().find(|v| v.len() != n_aps * n_ant) {
            return Err(Error::invalid(format!(
                "channel vector of length {} for {n_aps} APs × {n_ant} antennas",
                bad.len()
            )));
        }
        Ok(ChannelRealization {
            h,
            n_aps,
            n_ant,
            source,
        })
    }

    pub fn n_ues(&self) -> usize {
        self.h.len()
    }

    pub fn dim(&self) -> usize {
        self.n_aps * self.n_ant
    }

    /// Block of `h_k` belonging to AP `n`.
    pub fn block(&self, k: usize, n: usize) -> CVector {
        self.h[k].rows(n * self.n_ant, self.n_ant).into_owned()
    }

    /// Squared norm of the part of `h_k` restricted to the listed APs.
    pub fn gain_over(&self, k: usize, aps: &[usize]) -> f64 {
        aps.iter().map(|&n| self.block(k, n).norm_squared()).sum()
    }
}

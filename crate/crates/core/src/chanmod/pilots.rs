use rand::Rng;

use super::fading::complex_normal;
use super::{rng_from_seed, ChannelRealization, CovarianceSet};
use crate::{CMatrix, CVector, Complex64, Error, Result};

/// Uplink training setup. Pilot `t` is row `t` of the unitary `τ_p × τ_p` DFT
/// matrix, so every pilot has unit norm and distinct pilots are orthogonal.
#[derive(Clone, Debug, PartialEq)]
pub struct PilotConfig {
    pub tau_p: usize,
    /// Per-UE pilot power, watts.
    pub p_pilot: f64,
    /// Noise standard deviation at the APs.
    pub sigma_u: f64,
    pub assignments: Vec<usize>,
}

impl PilotConfig {
    /// Round-robin assignment `k ↦ k mod τ_p`; orthogonal whenever `τ_p ≥ K`.
    pub fn round_robin(tau_p: usize, p_pilot: f64, sigma_u: f64, n_ues: usize) -> Result<Self> {
        let cfg = PilotConfig {
            tau_p,
            p_pilot,
            sigma_u,
            assignments: (0..n_ues).map(|k| k % tau_p.max(1)).collect(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau_p == 0 {
            return Err(Error::invalid("pilot length must be ≥ 1"));
        }
        if !(self.p_pilot >= 0.0) || !(self.sigma_u >= 0.0) {
            return Err(Error::invalid("pilot power and noise std must be ≥ 0"));
        }
        if let Some(&t) = self.assignments.iter().find(|&&t| t >= self.tau_p) {
            return Err(Error::invalid(format!(
                "pilot index {t} out of range for τ_p = {}",
                self.tau_p
            )));
        }
        Ok(())
    }

    fn sequence(&self, k: usize) -> CVector {
        pilot_sequence(self.assignments[k], self.tau_p)
    }
}

/// Row `t` of the unitary DFT matrix of order `tau_p`.
pub fn pilot_sequence(t: usize, tau_p: usize) -> CVector {
    let scale = 1.0 / (tau_p as f64).sqrt();
    CVector::from_fn(tau_p, |i, _| {
        let angle = -2.0 * std::f64::consts::PI * (t * i) as f64 / tau_p as f64;
        Complex64::from_polar(scale, angle)
    })
}

/// Projected pilot observations `y[n][k]`, one `N_AP` vector per AP and UE.
#[derive(Clone, Debug)]
pub struct Projections {
    pub y: Vec<Vec<CVector>>,
}

/// Simulates the uplink training block at each AP and projects it onto every
/// UE's pilot: `y̆ = Σ_k' √(τ_p P_p) h_k' (φ_k'ᵀ φ_k*) + N φ_k*`.
pub fn project_pilots(channels: &ChannelRealization, pilots: &PilotConfig, seed: u64) -> Result<Projections> {
    pilots.validate()?;
    let n_ues = channels.n_ues();
    if pilots.assignments.len() != n_ues {
        return Err(Error::invalid(format!(
            "{} pilot assignments for {n_ues} UEs",
            pilots.assignments.len()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let amp = (pilots.tau_p as f64 * pilots.p_pilot).sqrt();
    let phis: Vec<CVector> = (0..n_ues).map(|k| pilots.sequence(k)).collect();
    let n_ant = channels.n_ant;
    let y = (0..channels.n_aps)
        .map(|n| {
            let mut rx = noise_matrix(&mut rng, n_ant, pilots.tau_p, pilots.sigma_u);
            for (k, phi) in phis.iter().enumerate() {
                rx += channels.block(k, n).map(|z| z * amp) * phi.transpose();
            }
            phis.iter().map(|phi| &rx * phi.conjugate()).collect()
        })
        .collect();
    Ok(Projections { y })
}

fn noise_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, sigma: f64) -> CMatrix {
    if sigma == 0.0 {
        return CMatrix::zeros(rows, cols);
    }
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng) * sigma)
}

/// MMSE estimates with their estimate and error covariances, all indexed `[n][k]`.
#[derive(Clone, Debug)]
pub struct EstimateSet {
    pub h_hat: ChannelRealization,
    pub gamma: Vec<Vec<CMatrix>>,
    pub error_cov: Vec<Vec<CMatrix>>,
    pub psi: Vec<Vec<CMatrix>>,
}

/// MMSE channel estimation from pilot projections.
///
/// With `ρ = τ_p P_p / σ_u²`:
/// `Ψ = ρ Σ_k' R_nk' |φ_k'ᴴ φ_k|² + I`, `ĥ = (√(τ_p P_p)/σ_u²) R Ψ⁻¹ y̆`,
/// `Γ = ρ R Ψ⁻¹ R` and the error covariance `R − Γ`.
pub fn mmse_estimate(
    projections: &Projections,
    cov: &CovarianceSet,
    pilots: &PilotConfig,
    source: super::ChannelSource,
) -> Result<EstimateSet> {
    pilots.validate()?;
    if !(pilots.sigma_u > 0.0) {
        return Err(Error::invalid("MMSE estimation needs σ_u > 0"));
    }
    let (n_aps, n_ues, n_ant) = (cov.n_aps(), cov.n_ues(), cov.n_ant);
    if projections.y.len() != n_aps || projections.y.iter().any(|row| row.len() != n_ues) {
        return Err(Error::invalid("projection shape does not match covariance set"));
    }
    if pilots.assignments.len() != n_ues {
        return Err(Error::invalid("pilot assignment count does not match covariance set"));
    }
    let noise_var = pilots.sigma_u * pilots.sigma_u;
    let rho = pilots.tau_p as f64 * pilots.p_pilot / noise_var;
    let gain = (pilots.tau_p as f64 * pilots.p_pilot).sqrt() / noise_var;
    let phis: Vec<CVector> = (0..n_ues).map(|k| pilots.sequence(k)).collect();
    let overlap: Vec<Vec<f64>> = phis
        .iter()
        .map(|pk| phis.iter().map(|pj| pj.dotc(pk).norm_sqr()).collect())
        .collect();

    let mut h_hat = vec![CVector::zeros(n_aps * n_ant); n_ues];
    let mut gamma = Vec::with_capacity(n_aps);
    let mut error_cov = Vec::with_capacity(n_aps);
    let mut psi_all = Vec::with_capacity(n_aps);
    for n in 0..n_aps {
        let (mut g_row, mut a_row, mut p_row) = (Vec::new(), Vec::new(), Vec::new());
        for k in 0..n_ues {
            let r = &cov.r[n][k];
            let mut psi = CMatrix::identity(n_ant, n_ant);
            for (kp, ov) in overlap[k].iter().enumerate() {
                if *ov != 0.0 {
                    psi += cov.r[n][kp].map(|z| z * (rho * ov));
                }
            }
            let psi_inv = invert_hermitian(&psi)?;
            let est = (r * &psi_inv * &projections.y[n][k]).map(|z| z * gain);
            h_hat[k].rows_mut(n * n_ant, n_ant).copy_from(&est);
            let g = (r * &psi_inv * r.adjoint()).map(|z| z * rho);
            let g = (&g + g.adjoint()).map(|z| z * 0.5);
            a_row.push(r - &g);
            g_row.push(g);
            p_row.push(psi);
        }
        gamma.push(g_row);
        error_cov.push(a_row);
        psi_all.push(p_row);
    }
    Ok(EstimateSet {
        h_hat: ChannelRealization {
            h: h_hat,
            n_aps,
            n_ant,
            source,
        },
        gamma,
        error_cov,
        psi: psi_all,
    })
}

fn invert_hermitian(m: &CMatrix) -> Result<CMatrix> {
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(cond < 1e14) {
        return Err(Error::Solver(format!(
            "Ψ is numerically singular (condition number {cond:e})"
        )));
    }
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Solver(format!("Ψ Cholesky failed (condition number {cond:e})")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chanmod::{
        build_covariances, sample_channels, ChannelSource, ChannelSpec, Correlation, LargeScaleParams,
    };
    use nalgebra::DMatrix;

    fn iid_channels(n_aps: usize, n_ant: usize, n_ues: usize, seed: u64) -> ChannelRealization {
        sample_channels(ChannelSpec::Iid { n_aps, n_ant, n_ues }, seed).unwrap()
    }

    fn unit_cov(n_aps: usize, n_ant: usize, n_ues: usize) -> CovarianceSet {
        build_covariances(
            &DMatrix::from_element(n_aps, n_ues, 1.0),
            n_ant,
            &LargeScaleParams::default(),
            Correlation::Uncorrelated,
        )
        .unwrap()
    }

    #[test]
    fn dft_pilots_are_orthonormal() {
        for i in 0..5 {
            for j in 0..5 {
                let ip = pilot_sequence(i, 5).dotc(&pilot_sequence(j, 5)).norm();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn noiseless_orthogonal_projection() {
        let h = iid_channels(2, 3, 3, 1);
        let pilots = PilotConfig::round_robin(3, 0.5, 0.0, 3).unwrap();
        let proj = project_pilots(&h, &pilots, 2).unwrap();
        let amp = (3.0f64 * 0.5).sqrt();
        for n in 0..2 {
            for k in 0..3 {
                let expected = h.block(k, n).map(|z| z * amp);
                assert!((&proj.y[n][k] - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn shared_pilot_contaminates() {
        let h = iid_channels(1, 2, 2, 4);
        let pilots = PilotConfig {
            tau_p: 1,
            p_pilot: 2.0,
            sigma_u: 0.0,
            assignments: vec![0, 0],
        };
        let proj = project_pilots(&h, &pilots, 0).unwrap();
        let expected = (h.block(0, 0) + h.block(1, 0)).map(|z| z * 2f64.sqrt());
        assert!((&proj.y[0][0] - &expected).norm() < 1e-12);
        assert!((&proj.y[0][1] - &expected).norm() < 1e-12);
    }

    #[test]
    fn projected_noise_keeps_variance() {
        let h = ChannelRealization::new(vec![CVector::zeros(2)], 1, 2, ChannelSource::Iid).unwrap();
        let pilots = PilotConfig::round_robin(4, 1.0, 0.7, 1).unwrap();
        let draws = 100_000;
        let mut acc = 0.0;
        for seed in 0..draws {
            let p = project_pilots(&h, &pilots, seed).unwrap();
            acc += p.y[0][0].norm_squared() / 2.0;
        }
        let var = acc / draws as f64;
        assert!((var / 0.49 - 1.0).abs() < 0.03, "{var}");
    }

    #[test]
    fn bad_assignment_rejected() {
        let h = iid_channels(1, 1, 2, 0);
        let pilots = PilotConfig {
            tau_p: 2,
            p_pilot: 1.0,
            sigma_u: 1.0,
            assignments: vec![0, 2],
        };
        assert!(project_pilots(&h, &pilots, 0).is_err());
    }

    #[test]
    fn scalar_snr_closed_form() {
        let cov = unit_cov(2, 3, 2);
        let pilots = PilotConfig::round_robin(2, 1.5, 0.5, 2).unwrap();
        let rho = 2.0 * 1.5 / 0.25;
        let h = iid_channels(2, 3, 2, 8);
        let proj = project_pilots(&h, &pilots, 9).unwrap();
        let est = mmse_estimate(&proj, &cov, &pilots, h.source).unwrap();
        let expected = CMatrix::identity(3, 3).map(|z| z * (rho / (rho + 1.0)));
        for n in 0..2 {
            for k in 0..2 {
                assert!((&est.gamma[n][k] - &expected).norm() < 1e-12);
                let sum = &est.gamma[n][k] + &est.error_cov[n][k];
                assert!((sum - &cov.r[n][k]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn high_snr_estimates_converge() {
        let cov = unit_cov(2, 2, 3);
        // ρ = τ_p P_p / σ_u² = 10^6
        let pilots = PilotConfig::round_robin(3, 1.0 / 3.0, 1e-3, 3).unwrap();
        let sampler = crate::chanmod::ChannelSampler::new(ChannelSpec::Correlated(&cov)).unwrap();
        let mut rng = crate::chanmod::rng_from_seed(5);
        let mut rel = 0.0;
        let draws = 1000;
        for seed in 0..draws {
            let h = sampler.sample(&mut rng);
            let proj = project_pilots(&h, &pilots, seed).unwrap();
            let est = mmse_estimate(&proj, &cov, &pilots, h.source).unwrap();
            for k in 0..3 {
                rel += (&est.h_hat.h[k] - &h.h[k]).norm_squared() / h.h[k].norm_squared();
            }
            if seed == 0 {
                let id = CMatrix::identity(2, 2);
                assert!((&est.gamma[0][0] - id).norm() < 1e-5);
            }
        }
        rel /= (draws * 3) as f64;
        assert!(rel < 1e-4, "{rel}");
    }

    #[test]
    fn zero_noise_rejected_for_estimation() {
        let cov = unit_cov(1, 1, 1);
        let pilots = PilotConfig::round_robin(1, 1.0, 0.0, 1).unwrap();
        let proj = Projections {
            y: vec![vec![CVector::zeros(1)]],
        };
        assert!(mmse_estimate(&proj, &cov, &pilots, ChannelSource::Iid).is_err());
    }
}

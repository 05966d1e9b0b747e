use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{dist, rng_from_seed, Geometry, LargeScaleParams};
use crate::{Error, Result};

/// Linear large-scale gains `β[n][k]` from distance-based path loss and the
/// given shadowing (dB). The loss `ζ_dB = ζ0 + 10·α·log10(d)` uses `d`
/// clamped below at 1 m, and `β = 10^(-(ζ_dB - shadow_dB)/10)`.
pub fn compute_path_gain(
    geometry: &Geometry,
    params: &LargeScaleParams,
    shadow_db: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    geometry.validate()?;
    params.validate()?;
    let (n_aps, n_ues) = (geometry.n_aps(), geometry.n_ues());
    if shadow_db.shape() != (n_aps, n_ues) {
        return Err(Error::invalid(format!(
            "shadowing matrix is {:?}, expected ({n_aps}, {n_ues})",
            shadow_db.shape()
        )));
    }
    if shadow_db.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("NaN in shadowing matrix"));
    }
    Ok(DMatrix::from_fn(n_aps, n_ues, |n, k| {
        let loss_db = path_loss_db(params, geometry.distance(n, k));
        10f64.powf(-(loss_db - shadow_db[(n, k)]) / 10.0)
    }))
}

pub(crate) fn path_loss_db(params: &LargeScaleParams, d: f64) -> f64 {
    params.zeta0_db + 10.0 * params.alpha * d.max(1.0).log10()
}

/// Draws correlated log-normal shadowing in dB for every AP–UE link.
///
/// Two-component model: `χ[n][k] = σ (√δ a_n + √(1-δ) b_k)` where `a` and `b`
/// are zero-mean unit-variance Gaussian fields over AP and UE positions with
/// correlation `2^(-distance / d_decorr)`.
pub fn gen_shadowing(geometry: &Geometry, params: &LargeScaleParams, seed: u64) -> Result<DMatrix<f64>> {
    let sampler = ShadowingSampler::new(geometry, params)?;
    Ok(sampler.sample(&mut rng_from_seed(seed)))
}

/// Precomputed square roots of the AP-side and UE-side correlation matrices.
#[derive(Clone, Debug)]
pub struct ShadowingSampler {
    ap_root: DMatrix<f64>,
    ue_root: DMatrix<f64>,
    sigma: f64,
    ap_share: f64,
}

impl ShadowingSampler {
    pub fn new(geometry: &Geometry, params: &LargeScaleParams) -> Result<Self> {
        geometry.validate()?;
        params.validate()?;
        let corr = |pts: &[[f64; 2]]| {
            DMatrix::from_fn(pts.len(), pts.len(), |i, j| {
                2f64.powf(-dist(pts[i], pts[j]) / params.d_decorr)
            })
        };
        Ok(ShadowingSampler {
            ap_root: symmetric_sqrt(corr(&geometry.ap_positions)),
            ue_root: symmetric_sqrt(corr(&geometry.ue_positions)),
            sigma: params.sigma_chi_db,
            ap_share: params.ap_share,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        let n = self.ap_root.nrows();
        let k = self.ue_root.nrows();
        if self.sigma == 0.0 {
            return DMatrix::zeros(n, k);
        }
        let ga = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let gb = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let a = &self.ap_root * ga;
        let b = &self.ue_root * gb;
        let wa = self.ap_share.sqrt() * self.sigma;
        let wb = (1.0 - self.ap_share).sqrt() * self.sigma;
        DMatrix::from_fn(n, k, |i, j| wa * a[i] + wb * b[j])
    }
}

/// Symmetric PSD square root. Eigenvalues below `1e-12` of the largest are
/// rounding noise (co-located points give exactly singular matrices) and are
/// zeroed so that identical rows stay identical.
pub(crate) fn symmetric_sqrt(m: DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.symmetric_eigen();
    let floor = 1e-12 * eig.eigenvalues.amax();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| if l > floor { l.sqrt() } else { 0.0 }));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{
    rng_from_seed, ChannelRealization, ChannelSource, Correlation, CovarianceSet, LargeScaleParams, TraceConvention,
};
use crate::{CMatrix, CVector, Complex64, Error, Result};

/// Builds `R[n][k] = scale · C` where `C` is the unit-diagonal antenna
/// correlation and `scale` realizes the trace convention.
pub fn build_covariances(
    beta: &DMatrix<f64>,
    n_ant: usize,
    params: &LargeScaleParams,
    correlation: Correlation,
) -> Result<CovarianceSet> {
    if n_ant == 0 {
        return Err(Error::invalid("need at least one antenna per AP"));
    }
    if let Some(b) = beta.iter().find(|&&b| !(b > 0.0) || !b.is_finite()) {
        return Err(Error::invalid(format!(
            "large-scale gain {b} must be positive and finite"
        )));
    }
    let unit = match correlation {
        Correlation::Uncorrelated => CMatrix::identity(n_ant, n_ant),
        Correlation::Exponential(r) => {
            if !(r.abs() < 1.0) {
                return Err(Error::invalid(format!("exponential correlation {r} needs |r| < 1")));
            }
            CMatrix::from_fn(n_ant, n_ant, |i, j| {
                Complex64::new(r.powi((i as i32 - j as i32).abs()), 0.0)
            })
        }
    };
    let per_antenna = match params.trace_convention {
        TraceConvention::Conventional => 1.0,
        TraceConvention::AsPaper => 1.0 / (n_ant * n_ant) as f64,
    };
    let r = (0..beta.nrows())
        .map(|n| {
            (0..beta.ncols())
                .map(|k| unit.map(|c| c * (beta[(n, k)] * per_antenna)))
                .collect()
        })
        .collect();
    Ok(CovarianceSet {
        r,
        beta: beta.clone(),
        n_ant,
    })
}

/// Hermitian PSD square root through the eigendecomposition, clipping
/// eigenvalues that are negative only by rounding.
pub fn hermitian_sqrt(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::invalid("square root of a non-square matrix"));
    }
    let scale = m.iter().fold(0.0f64, |a, z| a.max(z.norm())).max(1e-300);
    let skew = (m - m.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if skew > 1e-10 * scale {
        return Err(Error::invalid(format!("matrix is not Hermitian (skew {skew:e})")));
    }
    let eig = m.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-10 * scale {
        return Err(Error::invalid(format!("matrix is indefinite (eigenvalue {min:e})")));
    }
    let d = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0)));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

#[derive(Clone, Copy, Debug)]
pub enum ChannelSpec<'a> {
    Correlated(&'a CovarianceSet),
    Iid { n_aps: usize, n_ant: usize, n_ues: usize },
}

/// Repeated channel draws with the covariance square roots computed once.
#[derive(Clone, Debug)]
pub struct ChannelSampler {
    /// `roots[n][k]`; `None` for i.i.d. unit-variance entries.
    roots: Option<Vec<Vec<CMatrix>>>,
    n_aps: usize,
    n_ant: usize,
    n_ues: usize,
}

impl ChannelSampler {
    pub fn new(spec: ChannelSpec<'_>) -> Result<Self> {
        match spec {
            ChannelSpec::Correlated(cov) => {
                let roots = cov
                    .r
                    .iter()
                    .map(|row| row.iter().map(hermitian_sqrt).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?;
                if cov.n_aps() == 0 || cov.n_ues() == 0 {
                    return Err(Error::invalid("empty covariance set"));
                }
                Ok(ChannelSampler {
                    roots: Some(roots),
                    n_aps: cov.n_aps(),
                    n_ant: cov.n_ant,
                    n_ues: cov.n_ues(),
                })
            }
            ChannelSpec::Iid { n_aps, n_ant, n_ues } => {
                if n_aps == 0 || n_ant == 0 || n_ues == 0 {
                    return Err(Error::invalid("i.i.d. channel dimensions must be ≥ 1"));
                }
                Ok(ChannelSampler {
                    roots: None,
                    n_aps,
                    n_ant,
                    n_ues,
                })
            }
        }
    }

    /// Draws one realization; entries are consumed user by user, AP by AP.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let m = self.n_aps * self.n_ant;
        let h = (0..self.n_ues)
            .map(|k| {
                let mut hk = CVector::zeros(m);
                for n in 0..self.n_aps {
                    let g = CVector::from_fn(self.n_ant, |_, _| complex_normal(rng));
                    let block = match &self.roots {
                        Some(roots) => &roots[n][k] * g,
                        None => g,
                    };
                    hk.rows_mut(n * self.n_ant, self.n_ant).copy_from(&block);
                }
                hk
            })
            .collect();
        ChannelRealization {
            h,
            n_aps: self.n_aps,
            n_ant: self.n_ant,
            source: if self.roots.is_some() {
                ChannelSource::Geometric
            } else {
                ChannelSource::Iid
            },
        }
    }
}

/// One channel realization from covariances or i.i.d. `CN(0, 1)` entries.
pub fn sample_channels(spec: ChannelSpec<'_>, seed: u64) -> Result<ChannelRealization> {
    Ok(ChannelSampler::new(spec)?.sample(&mut rng_from_seed(seed)))
}

/// Circularly-symmetric `CN(0, 1)` sample.
pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

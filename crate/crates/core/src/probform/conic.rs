//! Real-valued conic encodings of the beamforming constraints.
//!
//! Complex precoder entries are split into consecutive (real, imaginary)
//! variable pairs. For a channel entry `a + ib` and a precoder entry `x + iy`,
//! `conj(a + ib)(x + iy) = (ax + by) + i(ay − bx)`.

use super::{ActivationVector, PrecoderSet, SlackVector, SystemParams};
use crate::chanmod::ChannelRealization;
use crate::socp::{AffineBlock, Cone, ConeProgram, SparseRow};
use crate::{CVector, Complex64, Error, Result};

/// Maps precoder entries of the active APs onto real variable indices.
///
/// Entry `(k, n, a)` of an active AP occupies `base + 2·((k·|U| + slot(n))·N_AP + a)`
/// for its real part and the next index for its imaginary part. Inactive APs
/// own no variables, which pins their precoders to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecoderLayout {
    pub n_aps: usize,
    pub n_ant: usize,
    pub n_ues: usize,
    slots: Vec<Option<usize>>,
    n_active: usize,
    pub base: usize,
}

impl PrecoderLayout {
    pub fn new(params: &SystemParams, active: &[bool], base: usize) -> Self {
        let mut next = 0;
        let slots = active
            .iter()
            .map(|&on| {
                on.then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        PrecoderLayout {
            n_aps: params.n_aps,
            n_ant: params.n_ant,
            n_ues: params.n_ues,
            slots,
            n_active: next,
            base,
        }
    }

    pub fn all_on(params: &SystemParams, base: usize) -> Self {
        Self::new(params, &vec![true; params.n_aps], base)
    }

    pub fn num_vars(&self) -> usize {
        2 * self.n_ues * self.n_active * self.n_ant
    }

    pub fn is_active(&self, n: usize) -> bool {
        self.slots[n].is_some()
    }

    /// Index of the real part of `w_k^[n][a]`, if AP `n` is active.
    pub fn var(&self, k: usize, n: usize, a: usize) -> Option<usize> {
        self.slots[n].map(|slot| self.base + 2 * ((k * self.n_active + slot) * self.n_ant + a))
    }

    /// Real rows of `Re(h_kᴴ w_j)` and `Im(h_kᴴ w_j)`.
    pub fn inner_product_rows(&self, hk: &CVector, j: usize) -> (SparseRow, SparseRow) {
        let mut re = Vec::with_capacity(2 * self.n_active * self.n_ant);
        let mut im = Vec::with_capacity(2 * self.n_active * self.n_ant);
        for n in 0..self.n_aps {
            for a in 0..self.n_ant {
                if let Some(v) = self.var(j, n, a) {
                    let h = hk[n * self.n_ant + a];
                    re.push((v, h.re));
                    re.push((v + 1, h.im));
                    im.push((v, -h.im));
                    im.push((v + 1, h.re));
                }
            }
        }
        (re, im)
    }

    /// Identity rows over every precoder variable of AP `n` (all users).
    fn ap_rows(&self, n: usize) -> Vec<SparseRow> {
        let mut rows = Vec::new();
        for k in 0..self.n_ues {
            for a in 0..self.n_ant {
                if let Some(v) = self.var(k, n, a) {
                    rows.push(vec![(v, 1.0)]);
                    rows.push(vec![(v + 1, 1.0)]);
                }
            }
        }
        rows
    }

    fn all_rows(&self) -> Vec<SparseRow> {
        (self.base..self.base + self.num_vars())
            .map(|v| vec![(v, 1.0)])
            .collect()
    }

    /// Reads the precoders back out of a solution vector.
    pub fn extract(&self, x: &[f64]) -> PrecoderSet {
        let dim = self.n_aps * self.n_ant;
        let w = (0..self.n_ues)
            .map(|k| {
                CVector::from_fn(dim, |i, _| {
                    let (n, a) = (i / self.n_ant, i % self.n_ant);
                    match self.var(k, n, a) {
                        Some(v) => Complex64::new(x[v], x[v + 1]),
                        None => Complex64::new(0.0, 0.0),
                    }
                })
            })
            .collect();
        PrecoderSet {
            w,
            n_aps: self.n_aps,
            n_ant: self.n_ant,
        }
    }

    /// Writes precoders into a solution vector (inactive blocks are ignored).
    pub fn write(&self, w: &PrecoderSet, x: &mut [f64]) {
        for k in 0..self.n_ues {
            for n in 0..self.n_aps {
                for a in 0..self.n_ant {
                    if let Some(v) = self.var(k, n, a) {
                        let z = w.w[k][n * self.n_ant + a];
                        x[v] = z.re;
                        x[v + 1] = z.im;
                    }
                }
            }
        }
    }
}

/// SINR constraint of one user as an SOC plus the phase-fixing equality.
#[derive(Clone, Debug)]
pub struct SinrConstraint {
    pub user: usize,
    /// `[(1/√γ0) Re(h_kᴴw_k); Re/Im(h_kᴴw_j) for j ≠ k; σ] ∈ SOC(2K)`.
    pub soc: AffineBlock,
    /// `Im(h_kᴴw_k) = 0`.
    pub phase: AffineBlock,
}

/// Second-order cone form of the SINR targets. Because a common phase
/// rotation of `w_k` leaves every SINR unchanged, `h_kᴴw_k` may be taken real
/// and nonnegative, and `SINR_k ≥ γ0` becomes a norm bound on the interference
/// plus noise.
pub fn build_soc_sinr_constraints(
    h: &ChannelRealization,
    params: &SystemParams,
    layout: &PrecoderLayout,
) -> Result<Vec<SinrConstraint>> {
    params.validate()?;
    params.check_channels(h)?;
    let inv_sqrt_gamma = 1.0 / params.gamma0.sqrt();
    let sigma = params.sigma2.sqrt();
    let k_count = params.n_ues;
    Ok(h.h
        .iter()
        .enumerate()
        .map(|(k, hk)| {
            let mut rows = Vec::with_capacity(2 * k_count);
            let mut constant = Vec::with_capacity(2 * k_count);
            let (own_re, own_im) = layout.inner_product_rows(hk, k);
            rows.push(own_re.into_iter().map(|(v, a)| (v, a * inv_sqrt_gamma)).collect());
            constant.push(0.0);
            for j in (0..k_count).filter(|&j| j != k) {
                let (re, im) = layout.inner_product_rows(hk, j);
                rows.push(re);
                rows.push(im);
                constant.extend([0.0, 0.0]);
            }
            rows.push(Vec::new());
            constant.push(sigma);
            SinrConstraint {
                user: k,
                soc: AffineBlock::new(Cone::Soc(2 * k_count), rows, constant),
                phase: AffineBlock::new(Cone::Zero(1), vec![own_im], vec![0.0]),
            }
        })
        .collect())
}

/// Convex half `b_i² − b_i ≤ 0` of the binary constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvexBinaryConstraint {
    pub index: usize,
}

impl ConvexBinaryConstraint {
    pub fn value(&self, b: &[f64]) -> f64 {
        b[self.index] * b[self.index] - b[self.index]
    }

    /// `(b_i, 1/2, b_i) ∈ RSOC(3)`, i.e. `b_i ≥ b_i²`.
    pub fn block(&self, b_offset: usize) -> AffineBlock {
        let v = b_offset + self.index;
        AffineBlock::new(
            Cone::Rsoc(3),
            vec![vec![(v, 1.0)], vec![], vec![(v, 1.0)]],
            vec![0.0, 0.5, 0.0],
        )
    }
}

/// Concave half `b_i² − b_i ≥ 0` linearized at the anchor `z`:
/// `b_i + z_i² − 2 z_i b_i ≤ s_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearizedBinaryConstraint {
    pub index: usize,
    pub anchor: Vec<f64>,
}

impl LinearizedBinaryConstraint {
    /// Left-hand side `b_i + z_i² − 2 z_i b_i`; the slack must cover it.
    pub fn value(&self, b: &[f64]) -> f64 {
        let z = self.anchor[self.index];
        b[self.index] + z * z - 2.0 * z * b[self.index]
    }

    /// `s_i − (1 − 2 z_i) b_i − z_i² ≥ 0`.
    pub fn block(&self, b_offset: usize, s_offset: usize) -> AffineBlock {
        let z = self.anchor[self.index];
        AffineBlock::new(
            Cone::Nonneg(1),
            vec![vec![
                (s_offset + self.index, 1.0),
                (b_offset + self.index, -(1.0 - 2.0 * z)),
            ]],
            vec![-z * z],
        )
    }
}

#[derive(Clone, Debug)]
pub struct BinarySplit {
    pub convex: Vec<ConvexBinaryConstraint>,
    pub linearized: Vec<LinearizedBinaryConstraint>,
}

pub fn linearize_binary(anchor: &[f64]) -> Result<BinarySplit> {
    if let Some(z) = anchor.iter().find(|&&z| !(0.0..=1.0).contains(&z)) {
        return Err(Error::invalid(format!("linearization anchor {z} outside [0, 1]")));
    }
    Ok(BinarySplit {
        convex: (0..anchor.len())
            .map(|index| ConvexBinaryConstraint { index })
            .collect(),
        linearized: (0..anchor.len())
            .map(|index| LinearizedBinaryConstraint {
                index,
                anchor: anchor.to_vec(),
            })
            .collect(),
    })
}

/// Per-AP power budget `Σ_k ‖w_k^[n]‖² ≤ budget`, with the budget affine in
/// the variables: `(budget, 1/2, stack) ∈ RSOC`.
fn power_block(layout: &PrecoderLayout, n: usize, budget_row: SparseRow, budget_const: f64) -> AffineBlock {
    let stack = layout.ap_rows(n);
    let mut rows = Vec::with_capacity(stack.len() + 2);
    rows.push(budget_row);
    rows.push(Vec::new());
    rows.extend(stack);
    let mut constant = vec![0.0; rows.len()];
    constant[0] = budget_const;
    constant[1] = 0.5;
    AffineBlock::new(Cone::Rsoc(rows.len()), rows, constant)
}

/// Epigraph `‖all precoder entries‖² ≤ t`.
fn epigraph_block(layout: &PrecoderLayout, t: usize) -> AffineBlock {
    let mut rows = vec![vec![(t, 1.0)], Vec::new()];
    rows.extend(layout.all_rows());
    let mut constant = vec![0.0; rows.len()];
    constant[1] = 0.5;
    AffineBlock::new(Cone::Rsoc(rows.len()), rows, constant)
}

/// How the transmit-power term enters the relaxed subproblem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SubproblemForm {
    /// `(1/η) Σ_k ‖w_k‖²` through one epigraph variable.
    Literal,
    /// `(1/η) Σ_n ‖w^[n]‖² / b_n` through per-AP epigraph variables `τ_n`
    /// with `‖w^[n]‖² ≤ b_n τ_n`. Identical to the literal term whenever `b` is
    /// binary (an AP with `b_n = 0` is forced silent), but the relaxation of a
    /// fractional `b` is the convex hull of the on/off cost, which keeps the
    /// relaxed activations away from the tiny `p_n / P_n` values that stall
    /// the concave-convex iterations.
    #[default]
    Perspective,
}

/// The penalized convex subproblem solved at each outer iteration, with
/// variable offsets for reading the solution back.
#[derive(Clone, Debug)]
pub struct PenalizedSubproblem {
    pub program: ConeProgram,
    pub layout: PrecoderLayout,
    pub b_offset: usize,
    pub s_offset: usize,
    /// First transmit-power epigraph variable (one for the literal form, `N`
    /// for the perspective form).
    pub t_index: usize,
    pub n_aps: usize,
    pub form: SubproblemForm,
}

impl PenalizedSubproblem {
    pub fn precoders(&self, x: &[f64]) -> PrecoderSet {
        self.layout.extract(x)
    }

    /// Relaxed activations, clipped into `[0, 1]` to absorb solver round-off.
    pub fn activation(&self, x: &[f64]) -> ActivationVector {
        ActivationVector {
            b: x[self.b_offset..self.b_offset + self.n_aps]
                .iter()
                .map(|v| v.clamp(0.0, 1.0))
                .collect(),
            mode: super::ActivationMode::Relaxed,
        }
    }

    pub fn slacks(&self, x: &[f64]) -> SlackVector {
        SlackVector {
            s: x[self.s_offset..self.s_offset + self.n_aps]
                .iter()
                .map(|v| v.max(0.0))
                .collect(),
        }
    }
}

/// Convex subproblem at anchor `z` with penalty weight `λ`:
///
/// ```text
/// minimize   t/η + P_FIX Σ b_n + λ Σ s_n
/// subject to ‖w‖² ≤ t
///            Σ_k ‖w_k^[n]‖² ≤ b_n P_n                 (C1)
///            SINR SOC and Im(h_kᴴ w_k) = 0             (C2.1, C2.2)
///            b_n² − b_n ≤ 0                            (C3.1)
///            b_n + z_n² − 2 z_n b_n ≤ s_n              (C3.2)
///            0 ≤ b ≤ 1,  s ≥ 0
/// ```
///
/// Variables: precoders, then `b`, then `s`, then `t`.
pub fn assemble_subproblem(
    h: &ChannelRealization,
    params: &SystemParams,
    anchor: &[f64],
    lambda: f64,
) -> Result<PenalizedSubproblem> {
    assemble_subproblem_with(h, params, anchor, lambda, SubproblemForm::Literal)
}

/// [`assemble_subproblem`] with a choice of transmit-power term. The
/// perspective form replaces `t` by `τ_1..τ_N` and `‖w‖² ≤ t` by
/// `‖w^[n]‖² ≤ b_n τ_n`, with objective `Σ τ_n / η + P_FIX Σ b_n + λ Σ s_n`.
pub fn assemble_subproblem_with(
    h: &ChannelRealization,
    params: &SystemParams,
    anchor: &[f64],
    lambda: f64,
    form: SubproblemForm,
) -> Result<PenalizedSubproblem> {
    params.validate()?;
    params.check_channels(h)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("penalty weight {lambda} must be positive")));
    }
    if anchor.len() != params.n_aps {
        return Err(Error::invalid(format!(
            "anchor of length {} for {} APs",
            anchor.len(),
            params.n_aps
        )));
    }
    let split = linearize_binary(anchor)?;
    let n = params.n_aps;
    let layout = PrecoderLayout::all_on(params, 0);
    let b_offset = layout.num_vars();
    let s_offset = b_offset + n;
    let t_index = s_offset + n;
    let epigraph_vars = match form {
        SubproblemForm::Literal => 1,
        SubproblemForm::Perspective => n,
    };
    let mut program = ConeProgram::new(t_index + epigraph_vars);
    for i in 0..epigraph_vars {
        program.objective[t_index + i] = 1.0 / params.eta;
    }
    for i in 0..n {
        program.objective[b_offset + i] = params.p_fix;
        program.objective[s_offset + i] = lambda;
    }

    match form {
        SubproblemForm::Literal => program.push(epigraph_block(&layout, t_index))?,
        SubproblemForm::Perspective => {
            for ap in 0..n {
                // (b_n, τ_n / 2, w^[n]) ∈ RSOC  ⇔  ‖w^[n]‖² ≤ b_n τ_n
                let mut rows = vec![vec![(b_offset + ap, 1.0)], vec![(t_index + ap, 0.5)]];
                rows.extend(layout.ap_rows(ap));
                let constant = vec![0.0; rows.len()];
                program.push(AffineBlock::new(Cone::Rsoc(rows.len()), rows, constant))?;
            }
        }
    }
    for ap in 0..n {
        program.push(power_block(&layout, ap, vec![(b_offset + ap, params.p_max[ap])], 0.0))?;
    }
    for c in build_soc_sinr_constraints(h, params, &layout)? {
        program.push(c.soc)?;
        program.push(c.phase)?;
    }
    for c in &split.convex {
        program.push(c.block(b_offset))?;
    }
    for c in &split.linearized {
        program.push(c.block(b_offset, s_offset))?;
    }
    let mut bounds = Vec::with_capacity(3 * n);
    let mut constant = Vec::with_capacity(3 * n);
    for i in 0..n {
        bounds.push(vec![(b_offset + i, 1.0)]);
        constant.push(0.0);
        bounds.push(vec![(b_offset + i, -1.0)]);
        constant.push(1.0);
        bounds.push(vec![(s_offset + i, 1.0)]);
        constant.push(0.0);
    }
    program.push(AffineBlock::new(Cone::Nonneg(3 * n), bounds, constant))?;

    Ok(PenalizedSubproblem {
        program,
        layout,
        b_offset,
        s_offset,
        t_index,
        n_aps: n,
        form,
    })
}

/// Transmit-power minimization with the active set fixed.
#[derive(Clone, Debug)]
pub struct FixedSetProgram {
    pub program: ConeProgram,
    pub layout: PrecoderLayout,
    pub t_index: usize,
}

/// `minimize ‖w‖²/η` subject to the SINR cones and the per-AP budgets of the
/// active APs; inactive APs carry no variables.
pub fn assemble_fixed_active_set(
    h: &ChannelRealization,
    params: &SystemParams,
    active: &[usize],
) -> Result<FixedSetProgram> {
    params.validate()?;
    params.check_channels(h)?;
    if active.is_empty() {
        return Err(Error::invalid("active set must not be empty"));
    }
    let mut mask = vec![false; params.n_aps];
    for &n in active {
        if n >= params.n_aps {
            return Err(Error::invalid(format!("AP index {n} out of range")));
        }
        mask[n] = true;
    }
    let layout = PrecoderLayout::new(params, &mask, 0);
    let t_index = layout.num_vars();
    let mut program = ConeProgram::new(t_index + 1);
    program.objective[t_index] = 1.0 / params.eta;
    program.push(epigraph_block(&layout, t_index))?;
    for (n, _) in mask.iter().enumerate().filter(|(_, on)| **on) {
        program.push(power_block(&layout, n, Vec::new(), params.p_max[n]))?;
    }
    for c in build_soc_sinr_constraints(h, params, &layout)? {
        program.push(c.soc)?;
        program.push(c.phase)?;
    }
    Ok(FixedSetProgram {
        program,
        layout,
        t_index,
    })
}

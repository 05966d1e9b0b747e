use super::{AffineBlock, Cone, ConeProgram, ConeSolution, SolveStatus};

/// Residuals recomputed from the program data alone.
///
/// For an optimality candidate:
/// - `primal`: largest Euclidean distance of a block value `A_i x + c_i` to its
///   cone, divided by `1 + max(‖Ax‖∞, ‖c‖∞)`;
/// - `dual`: the larger of `‖Aᵀy − q‖∞` and the largest distance of a dual
///   block to its cone, divided by `1 + ‖q‖∞`;
/// - `gap`: `|qᵀx + cᵀy| / (1 + |qᵀx| + |cᵀy|)`.
///
/// For an infeasibility certificate (status `Infeasible`) the same three slots
/// hold the certificate conditions, with `y` rescaled so that `‖y‖∞ = 1`:
/// `‖Aᵀy‖∞ / |cᵀy|`, the dual cone distance of `y`, and `max(0, 1 + cᵀy/|cᵀy|)`
/// (zero exactly when `cᵀy < 0`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualRecord {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl ResidualRecord {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

/// Euclidean distance from `v` to the cone.
pub fn cone_distance(cone: Cone, v: &[f64]) -> f64 {
    match cone {
        Cone::Zero(_) => norm2(v),
        Cone::Nonneg(_) => v.iter().map(|x| x.min(0.0).powi(2)).sum::<f64>().sqrt(),
        Cone::Soc(_) => soc_distance(v[0], &v[1..]),
        Cone::Rsoc(_) => {
            let (t, s) = rsoc_to_soc_head(v[0], v[1]);
            let mut z = Vec::with_capacity(v.len() - 1);
            z.push(s);
            z.extend_from_slice(&v[2..]);
            soc_distance(t, &z)
        }
    }
}

/// Orthogonal map `(u, v) -> ((u+v)/√2, (u−v)/√2)` taking the rotated cone onto
/// the standard one. It is its own inverse.
pub(crate) fn rsoc_to_soc_head(u: f64, v: f64) -> (f64, f64) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    ((u + v) * r, (u - v) * r)
}

fn soc_distance(t: f64, z: &[f64]) -> f64 {
    let nz = norm2(z);
    if nz <= t {
        0.0
    } else if nz <= -t {
        (t * t + nz * nz).sqrt()
    } else {
        (nz - t) * std::f64::consts::FRAC_1_SQRT_2
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn split_dual<'a>(blocks: &'a [AffineBlock], y: &'a [f64]) -> impl Iterator<Item = (&'a AffineBlock, &'a [f64])> {
    let mut offset = 0;
    blocks.iter().map(move |b| {
        let d = b.cone.dim();
        let s = &y[offset..offset + d];
        offset += d;
        (b, s)
    })
}

fn transpose_apply(program: &ConeProgram, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; program.num_vars];
    for (block, yb) in split_dual(&program.blocks, y) {
        for (row, &yi) in block.rows.iter().zip(yb) {
            for &(j, a) in row {
                out[j] += a * yi;
            }
        }
    }
    out
}

/// Recomputes the KKT (or certificate) residuals of `candidate` from scratch.
pub fn kkt_residuals(program: &ConeProgram, candidate: &ConeSolution) -> ResidualRecord {
    assert_eq!(candidate.y.len(), program.num_rows(), "dual length mismatch");
    if candidate.status == SolveStatus::Infeasible {
        return certificate_residuals(program, &candidate.y);
    }
    assert_eq!(candidate.x.len(), program.num_vars, "primal length mismatch");
    let x = &candidate.x;
    let y = &candidate.y;

    let mut primal_dist: f64 = 0.0;
    let mut ax_max: f64 = 0.0;
    let mut c_max: f64 = 0.0;
    let mut dual_cone: f64 = 0.0;
    let mut cty = 0.0;
    for (block, yb) in split_dual(&program.blocks, y) {
        let value = block.evaluate(x);
        for (v, c) in value.iter().zip(&block.constant) {
            ax_max = ax_max.max((v - c).abs());
            c_max = c_max.max(c.abs());
        }
        primal_dist = primal_dist.max(cone_distance(block.cone, &value));
        // all supported cones are self-dual; the dual of the zero cone is free
        if !matches!(block.cone, Cone::Zero(_)) {
            dual_cone = dual_cone.max(cone_distance(block.cone, yb));
        }
        cty += block.constant.iter().zip(yb).map(|(c, y)| c * y).sum::<f64>();
    }

    let aty = transpose_apply(program, y);
    let stationarity = norm_inf(
        &aty.iter()
            .zip(&program.objective)
            .map(|(a, q)| a - q)
            .collect::<Vec<_>>(),
    );
    let qx = program.objective_value(x);

    ResidualRecord {
        primal: primal_dist / (1.0 + ax_max.max(c_max)),
        dual: stationarity.max(dual_cone) / (1.0 + norm_inf(&program.objective)),
        gap: (qx + cty).abs() / (1.0 + qx.abs() + cty.abs()),
    }
}

fn certificate_residuals(program: &ConeProgram, y: &[f64]) -> ResidualRecord {
    let scale = norm_inf(y);
    if scale == 0.0 {
        return ResidualRecord {
            primal: f64::INFINITY,
            dual: f64::INFINITY,
            gap: f64::INFINITY,
        };
    }
    let y: Vec<f64> = y.iter().map(|v| v / scale).collect();
    let mut cty = 0.0;
    let mut dual_cone: f64 = 0.0;
    for (block, yb) in split_dual(&program.blocks, &y) {
        if !matches!(block.cone, Cone::Zero(_)) {
            dual_cone = dual_cone.max(cone_distance(block.cone, yb));
        }
        cty += block.constant.iter().zip(yb).map(|(c, y)| c * y).sum::<f64>();
    }
    let aty = norm_inf(&transpose_apply(program, &y));
    if cty >= 0.0 {
        return ResidualRecord {
            primal: aty,
            dual: dual_cone,
            gap: 1.0,
        };
    }
    ResidualRecord {
        primal: aty / cty.abs(),
        dual: dual_cone / cty.abs(),
        gap: 0.0,
    }
}

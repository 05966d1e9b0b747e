use rand::Rng;

use super::fixed::{solve_fixed_active_set, FixedSetOutcome};
use super::restore::{restore_with, Restored};
use super::{PccpParams, PccpResult, PccpStatus, TraceRow};
use crate::chanmod::{rng_from_seed, ChannelRealization};
use crate::probform::{assemble_subproblem_with, ActivationVector, PrecoderSet, SystemParams};
use crate::socp::{solve_with, SolveStatus};
use crate::Result;

/// Runs the penalized CCP for joint AP selection and precoding.
///
/// The all-on fixed set is solved first; if even that is infeasible no
/// activation pattern can work and the result is `Infeasible`. Otherwise the
/// first pass starts from the all-on anchor `z = 1` and later restarts from
/// uniform random anchors. Within a pass, each iteration solves the penalized
/// subproblem at the current anchor, moves the anchor to the new `b`, and
/// grows `λ`. A pass converges once the slacks sum to at most `ψ` and `b`
/// moved by at most `ω` (Euclidean norm); it is abandoned after `T_max`
/// iterations, on a subproblem that does not solve to optimality, or once `b`
/// stops moving at `λ = λ_max` with slack left (every further iteration would
/// solve the same subproblem). The
/// converged relaxed `b` goes through [`round_and_restore`](super::round_and_restore). When every pass
/// has stalled, the stalled point with the smallest slack sum is rounded
/// instead; only if that fails too is the result `RestartExhausted`.
pub fn run_pccp(h: &ChannelRealization, params: &SystemParams, pccp: &PccpParams) -> Result<PccpResult> {
    params.validate()?;
    params.check_channels(h)?;
    pccp.validate()?;
    let n_aps = params.n_aps;
    let all: Vec<usize> = (0..n_aps).collect();

    let mut result = PccpResult {
        w: PrecoderSet::zeros(n_aps, params.n_ant, params.n_ues),
        b: ActivationVector::from_active_set(n_aps, &[]),
        tpc_watts: f64::NAN,
        transmit_power_watts: f64::NAN,
        active_count: 0,
        status: PccpStatus::Infeasible,
        trace: Vec::new(),
        iterations: 0,
        restarts: 0,
    };
    let all_on = solve_fixed_active_set(h, params, &all, &pccp.solver)?;
    if let FixedSetOutcome::Infeasible = all_on {
        return Ok(result);
    }

    let mut rng = rng_from_seed(pccp.rng_seed);
    let mut anchor = vec![1.0; n_aps];
    let mut stalled: Option<(f64, ActivationVector, PrecoderSet)> = None;
    for restart in 0..=pccp.max_restarts {
        if restart > 0 {
            anchor = (0..n_aps).map(|_| rng.random::<f64>()).collect();
            result.restarts = restart;
        }
        let mut lambda = pccp.lambda0;
        let mut converged = None;
        for iteration in 0..pccp.t_max {
            let sp = assemble_subproblem_with(h, params, &anchor, lambda, pccp.form)?;
            let sol = solve_with(&sp.program, &pccp.solver)?;
            result.iterations += 1;
            if sol.status != SolveStatus::Optimal {
                break;
            }
            let b = sp.activation(&sol.x);
            let slack_sum = sp.slacks(&sol.x).total();
            let step =
                b.b.iter()
                    .zip(&anchor)
                    .map(|(x, z)| (x - z).powi(2))
                    .sum::<f64>()
                    .sqrt();
            result.trace.push(TraceRow {
                restart,
                iteration,
                lambda,
                slack_sum,
                b: b.b.clone(),
                objective: sol.objective,
            });
            if step <= pccp.omega {
                if slack_sum <= pccp.psi {
                    converged = Some((b, sp.precoders(&sol.x)));
                    break;
                }
                // Same anchor and λ as the next iteration would use: the pass
                // is stuck at a non-binary stationary point.
                if lambda >= pccp.lambda_max {
                    if stalled.as_ref().is_none_or(|(best, ..)| slack_sum < *best) {
                        stalled = Some((slack_sum, b, sp.precoders(&sol.x)));
                    }
                    break;
                }
            }
            anchor = b.b;
            lambda = pccp.next_lambda(lambda);
        }

        if let Some((b, w)) = converged {
            if let Some(r) = restore_with(h, params, &b, &w, &pccp.solver, Some(&all_on))? {
                return Ok(finish(result, params, r));
            }
        }
    }
    if let Some((_, b, w)) = stalled {
        if let Some(r) = restore_with(h, params, &b, &w, &pccp.solver, Some(&all_on))? {
            return Ok(finish(result, params, r));
        }
    }
    result.status = PccpStatus::RestartExhausted;
    Ok(result)
}

fn finish(mut result: PccpResult, params: &SystemParams, r: Restored) -> PccpResult {
    result.active_count = r.b.active_set().len();
    result.transmit_power_watts = r.transmit_power;
    result.tpc_watts = r.transmit_power / params.eta + params.p_fix * result.active_count as f64;
    result.w = r.w;
    result.b = r.b;
    result.status = PccpStatus::Feasible;
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chanmod::{sample_channels, ChannelSource, ChannelSpec};
    use crate::pccp::LambdaUpdate;
    use crate::probform::check_constraints;
    use crate::{CVector, Complex64};

    fn iid(seed: u64, n_aps: usize, n_ant: usize, n_ues: usize) -> ChannelRealization {
        sample_channels(ChannelSpec::Iid { n_aps, n_ant, n_ues }, seed).unwrap()
    }

    #[test]
    fn feasible_result_is_valid() {
        let h = iid(10, 4, 2, 3);
        let params = SystemParams::new(4, 2, 3);
        let r = run_pccp(&h, &params, &PccpParams::default()).unwrap();
        assert_eq!(r.status, PccpStatus::Feasible);
        let report = check_constraints(&h, &r.w, &r.b, &params, 1e-6).unwrap();
        assert!(report.feasible, "{report:?}");
        assert_eq!(r.active_count, r.b.active_set().len());
        for n in 0..4 {
            if r.b.b[n] == 0.0 {
                assert!(r.w.ap_power(n).sqrt() <= 1e-8);
            }
        }
    }

    #[test]
    fn lambda_sequence_is_monotone_and_capped() {
        let h = iid(11, 3, 2, 2);
        let params = SystemParams::new(3, 2, 2);
        let pccp = PccpParams::default();
        let r = run_pccp(&h, &params, &pccp).unwrap();
        for pair in r.trace.windows(2) {
            if pair[0].restart == pair[1].restart {
                assert!(pair[1].lambda >= pair[0].lambda);
            }
        }
        assert!(r.trace.iter().all(|t| t.lambda <= pccp.lambda_max));
    }

    #[test]
    fn literal_max_jumps_to_cap() {
        let pccp = PccpParams {
            lambda_update: LambdaUpdate::LiteralMax,
            ..Default::default()
        };
        assert_eq!(pccp.next_lambda(pccp.lambda0), pccp.lambda_max);
        let capped = PccpParams::default();
        assert_eq!(capped.next_lambda(capped.lambda0), 0.1);
        assert_eq!(capped.next_lambda(9e3), 1e4);
    }

    #[test]
    fn infeasible_target_reported() {
        let h = iid(12, 2, 1, 1);
        let params = SystemParams::new(2, 1, 1).with_gamma0_db(60.0);
        let r = run_pccp(&h, &params, &PccpParams::default()).unwrap();
        assert_eq!(r.status, PccpStatus::Infeasible);
        assert!(r.trace.is_empty());
    }

    #[test]
    fn dominant_ap_is_selected() {
        // AP 0 has a 100× stronger channel than AP 1 and switching on costs a lot
        let h = ChannelRealization::new(
            vec![CVector::from_vec(vec![
                Complex64::new(1.0, 0.5),
                Complex64::new(0.1, 0.05),
            ])],
            2,
            1,
            ChannelSource::Iid,
        )
        .unwrap();
        let mut params = SystemParams::new(2, 1, 1).with_gamma0_db(0.0);
        params.p_fix = 1.0;
        let r = run_pccp(&h, &params, &PccpParams::default()).unwrap();
        assert_eq!(r.status, PccpStatus::Feasible);
        assert_eq!(r.b.active_set(), vec![0]);
        let oracle = crate::pccp::exhaustive_oracle(&h, &params, &PccpParams::default().solver).unwrap();
        assert_eq!(oracle.best_subset, Some(vec![0]));
    }

    #[test]
    fn identical_inputs_identical_trace() {
        let h = iid(13, 4, 2, 3);
        let params = SystemParams::new(4, 2, 3).with_gamma0_db(3.0);
        let pccp = PccpParams {
            rng_seed: 99,
            ..Default::default()
        };
        let a = run_pccp(&h, &params, &pccp).unwrap();
        let b = run_pccp(&h, &params, &pccp).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.b, b.b);
        assert_eq!(a.tpc_watts.to_bits(), b.tpc_watts.to_bits());
    }

    #[test]
    fn free_aps_cost_no_more_than_all_on() {
        use crate::pccp::{solve_fixed_active_set, FixedSetOutcome};
        let mut params = SystemParams::new(4, 2, 3);
        params.p_fix = 0.0;
        let all: Vec<usize> = (0..4).collect();
        for seed in 0..10 {
            let h = iid(100 + seed, 4, 2, 3);
            let r = run_pccp(&h, &params, &PccpParams::default()).unwrap();
            let settings = PccpParams::default().solver;
            let FixedSetOutcome::Feasible { transmit_power, .. } =
                solve_fixed_active_set(&h, &params, &all, &settings).unwrap()
            else {
                assert_ne!(r.status, PccpStatus::Feasible);
                continue;
            };
            assert_eq!(r.status, PccpStatus::Feasible, "seed {seed}");
            let all_on = transmit_power / params.eta;
            // with every AP free, the all-on optimum is also the global one
            let gap = (r.tpc_watts - all_on) / all_on;
            assert!(
                (-1e-6..=0.01).contains(&gap),
                "seed {seed}: {} vs {all_on}",
                r.tpc_watts
            );
        }
    }

    #[test]
    fn trace_export() {
        let h = iid(14, 2, 2, 1);
        let params = SystemParams::new(2, 2, 1);
        let r = run_pccp(&h, &params, &PccpParams::default()).unwrap();
        let csv = r.trace_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(TraceRow::CSV_HEADER));
        assert_eq!(lines.count(), r.trace.len());
    }
}

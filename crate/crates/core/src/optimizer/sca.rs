use crate::approx::rate_surrogate;
use crate::channel::estimation_stats;
use crate::error::{Error, Result};
use crate::fbl::{lb_rate, lb_sinr_fzf, lb_sinr_mrc, sinr_floor, FblParams};
use crate::gp::{solve as gp_solve, GpOptions, GpStatus};
use crate::scenario::LargeScaleModel;

use super::model::{build_program, PilotMode, SinrTarget};
use super::{
    Decoder, IterationRecord, IterationTrace, PowerAllocation, RunStatus, SchemeOutcome, SolverSettings,
};

/// The four allocation schemes compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Proposed,
    UpperBound,
    Conventional,
    FixedPilot,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Proposed, Scheme::UpperBound, Scheme::Conventional, Scheme::FixedPilot];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::UpperBound => "upper_bound",
            Scheme::Conventional => "conventional",
            Scheme::FixedPilot => "fixed_pilot",
        }
    }
}

/// Closed-form SINRs, lower-bound rates and the weighted sum rate of an
/// allocation.
pub fn evaluate(
    model: &LargeScaleModel,
    params: &FblParams,
    decoder: Decoder,
    power: &PowerAllocation,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let stats = estimation_stats(model, &power.pilot)?;
    let sinr = (0..model.num_devices())
        .map(|k| match decoder {
            Decoder::Mrc => lb_sinr_mrc(model, &stats, power, k),
            Decoder::Fzf => lb_sinr_fzf(model, &stats, power, k),
        })
        .collect::<Result<Vec<_>>>()?;
    let rates: Vec<f64> = sinr.iter().enumerate().map(|(k, g)| lb_rate(*g, params, k)).collect();
    let wsr = rates.iter().zip(&model.weights).map(|(r, w)| r * w).sum();
    Ok((sinr, rates, wsr))
}

fn floors(params: &FblParams) -> Result<Vec<f64>> {
    (0..params.num_devices()).map(|k| sinr_floor(params, k)).collect()
}

fn meets_requirements(rates: &[f64], params: &FblParams) -> bool {
    rates
        .iter()
        .zip(&params.rate_req_bps)
        .all(|(r, req)| *r >= req * (1.0 - 1e-9))
}

fn fixed_pilot(params: &FblParams) -> Vec<f64> {
    params.energy.iter().map(|e| e / params.blocklength as f64).collect()
}

/// Finds a starting allocation by maximizing a common scaling `phi` of the
/// SINR floors. Fails when `phi` stays below one.
pub fn feasibility_init(
    model: &LargeScaleModel,
    params: &FblParams,
    decoder: Decoder,
    pilot: &PilotMode,
    settings: &SolverSettings,
) -> Result<PowerAllocation> {
    let kk = model.num_devices();
    let lk = (params.blocklength - kk) as f64;
    let floors = floors(params)?;
    let target = SinrTarget::Scaled { floors: floors.clone() };
    let mut pilot_hat: Vec<f64> = match pilot {
        PilotMode::Variable => params.energy.iter().map(|e| e / (2.0 * kk as f64)).collect(),
        PilotMode::Fixed(p) => p.clone(),
    };
    let mut payload: Vec<f64> = match pilot {
        PilotMode::Variable => params.energy.iter().map(|e| e / (2.0 * lk)).collect(),
        PilotMode::Fixed(p) => params
            .energy
            .iter()
            .zip(p)
            .map(|(e, pp)| (e - kk as f64 * pp) / (2.0 * lk))
            .collect(),
    };
    let mut best = 0.0f64;
    for _ in 0..=settings.init_reexpansions {
        let (gp, layout) = build_program(model, params, decoder, pilot, &pilot_hat, &target)?;
        let power = PowerAllocation::new(pilot_hat.clone(), payload.clone());
        let (sinr, _, _) = evaluate(model, params, decoder, &power)?;
        let phi0 = sinr
            .iter()
            .zip(&floors)
            .map(|(g, f)| g / f)
            .fold(f64::INFINITY, f64::min);
        let start = layout.pack(&pilot_hat, &payload, &[0.5 * phi0]);
        let sol = gp_solve(
            &gp,
            &GpOptions {
                tolerance: settings.gp_tolerance,
                start: Some(start),
                ..Default::default()
            },
        )?;
        if !sol.is_optimal() {
            return Err(Error::Solver(format!("feasibility program ended with {:?}", sol.status)));
        }
        let k0 = layout.pilot.map(|o| sol.x[o..o + kk].to_vec());
        let next = PowerAllocation::new(
            k0.unwrap_or_else(|| pilot_hat.clone()),
            sol.x[layout.payload..layout.payload + kk].to_vec(),
        );
        let (sinr, _, _) = evaluate(model, params, decoder, &next)?;
        let phi = sinr
            .iter()
            .zip(&floors)
            .map(|(g, f)| g / f)
            .fold(f64::INFINITY, f64::min);
        if phi >= 1.0 {
            return Ok(next);
        }
        if phi <= best * (1.0 + 1e-6) || matches!(pilot, PilotMode::Fixed(_)) {
            best = best.max(phi);
            break;
        }
        best = phi;
        pilot_hat = next.pilot;
        payload = next.payload;
    }
    Err(Error::Infeasible(format!("SINR floors reachable only up to phi = {best:.6}")))
}

fn run_sca(
    model: &LargeScaleModel,
    params: &FblParams,
    decoder: Decoder,
    pilot: &PilotMode,
    settings: &SolverSettings,
) -> SchemeOutcome {
    let kk = model.num_devices();
    let init = match feasibility_init(model, params, decoder, pilot, settings) {
        Ok(p) => p,
        Err(e) => return SchemeOutcome::infeasible(kk, e.to_string()),
    };
    let floors = match floors(params) {
        Ok(f) => f,
        Err(e) => return SchemeOutcome::infeasible(kk, e.to_string()),
    };
    let (mut sinr, mut rates, mut obj) = match evaluate(model, params, decoder, &init) {
        Ok(v) => v,
        Err(e) => return SchemeOutcome::infeasible(kk, e.to_string()),
    };
    let mut current = init;
    let mut trace = IterationTrace::default();
    trace.records.push(IterationRecord {
        iteration: 0,
        objective: obj,
        sinr: sinr.clone(),
        power: current.clone(),
        gp_status: None,
    });
    let mut status = RunStatus::IterationCap;
    for iteration in 1..=settings.max_iterations {
        let mut exponents = Vec::with_capacity(kk);
        let mut bad = None;
        for k in 0..kk {
            let rho = rate_surrogate(sinr[k], params.alpha[k]).map(|s| s.rho).unwrap_or(f64::NAN);
            if model.weights[k] > 0.0 && !(rho > 0.0) {
                bad = Some(k);
                break;
            }
            exponents.push(model.weights[k] * rho.max(0.0));
        }
        if let Some(device) = bad {
            status = RunStatus::NonPositiveExponent { device };
            break;
        }
        let top = exponents.iter().cloned().fold(0.0, f64::max);
        if top <= 0.0 {
            status = RunStatus::Converged;
            break;
        }
        exponents.iter_mut().for_each(|w| *w /= top);
        let target = SinrTarget::Weighted {
            exponents,
            floors: floors.clone(),
        };
        let built = build_program(model, params, decoder, pilot, &current.pilot, &target);
        let (gp, layout) = match built {
            Ok(v) => v,
            Err(e) => {
                status = RunStatus::GpFailure(e.to_string());
                break;
            }
        };
        let start = layout.pack(&current.pilot, &current.payload, &sinr);
        let sol = gp_solve(
            &gp,
            &GpOptions {
                tolerance: settings.gp_tolerance,
                start: Some(start),
                ..Default::default()
            },
        );
        let sol = match sol {
            Ok(s) if s.is_optimal() => s,
            Ok(s) => {
                status = RunStatus::GpFailure(format!("{:?}", s.status));
                break;
            }
            Err(e) => {
                status = RunStatus::GpFailure(e.to_string());
                break;
            }
        };
        let next = PowerAllocation::new(
            layout.pilot.map_or_else(|| current.pilot.clone(), |o| sol.x[o..o + kk].to_vec()),
            sol.x[layout.payload..layout.payload + kk].to_vec(),
        );
        let (s2, r2, o2) = match evaluate(model, params, decoder, &next) {
            Ok(v) => v,
            Err(e) => {
                status = RunStatus::GpFailure(e.to_string());
                break;
            }
        };
        if o2 < obj {
            // surrogate optimum no better than the expansion point
            status = RunStatus::Converged;
            break;
        }
        let gain = if obj > 0.0 { (o2 - obj) / obj } else { f64::INFINITY };
        current = next;
        sinr = s2;
        rates = r2;
        obj = o2;
        trace.records.push(IterationRecord {
            iteration,
            objective: obj,
            sinr: sinr.clone(),
            power: current.clone(),
            gp_status: Some(GpStatus::Optimal),
        });
        if gain < settings.sca_tolerance {
            status = RunStatus::Converged;
            break;
        }
    }
    let feasible = meets_requirements(&rates, params);
    SchemeOutcome {
        allocation: Some(current),
        weighted_sum_rate: if feasible { obj } else { 0.0 },
        rates_bps: rates,
        feasible,
        status,
        trace,
    }
}

/// Joint pilot and payload allocation by successive GP approximation.
pub fn solve(model: &LargeScaleModel, params: &FblParams, decoder: Decoder, settings: &SolverSettings) -> SchemeOutcome {
    run_sca(model, params, decoder, &PilotMode::Variable, settings)
}

pub fn solve_mrc(model: &LargeScaleModel, params: &FblParams, settings: &SolverSettings) -> SchemeOutcome {
    solve(model, params, Decoder::Mrc, settings)
}

pub fn solve_fzf(model: &LargeScaleModel, params: &FblParams, settings: &SolverSettings) -> SchemeOutcome {
    solve(model, params, Decoder::Fzf, settings)
}

/// Same loop without the dispersion penalty; rates are reported without it.
pub fn benchmark_upper_bound(
    model: &LargeScaleModel,
    params: &FblParams,
    decoder: Decoder,
    settings: &SolverSettings,
) -> SchemeOutcome {
    solve(model, &params.without_penalty(), decoder, settings)
}

/// Penalty-free allocation evaluated with finite-blocklength rates.
pub fn benchmark_conventional(
    model: &LargeScaleModel,
    params: &FblParams,
    decoder: Decoder,
    settings: &SolverSettings,
) -> SchemeOutcome {
    let mut out = benchmark_upper_bound(model, params, decoder, settings);
    let Some(power) = out.allocation.clone() else {
        return out;
    };
    match evaluate(model, params, decoder, &power) {
        Ok((_, rates, wsr)) => {
            out.feasible = meets_requirements(&rates, params);
            out.weighted_sum_rate = if out.feasible { wsr } else { 0.0 };
            out.rates_bps = rates;
        }
        Err(e) => return SchemeOutcome::infeasible(model.num_devices(), e.to_string()),
    }
    out
}

/// Pilot power pinned at `E_k / L`; only payload powers are optimized.
pub fn benchmark_fixed_pilot(
    model: &LargeScaleModel,
    params: &FblParams,
    decoder: Decoder,
    settings: &SolverSettings,
) -> SchemeOutcome {
    run_sca(model, params, decoder, &PilotMode::Fixed(fixed_pilot(params)), settings)
}

pub fn run_scheme(
    scheme: Scheme,
    model: &LargeScaleModel,
    params: &FblParams,
    decoder: Decoder,
    settings: &SolverSettings,
) -> SchemeOutcome {
    match scheme {
        Scheme::Proposed => solve(model, params, decoder, settings),
        Scheme::UpperBound => benchmark_upper_bound(model, params, decoder, settings),
        Scheme::Conventional => benchmark_conventional(model, params, decoder, settings),
        Scheme::FixedPilot => benchmark_fixed_pilot(model, params, decoder, settings),
    }
}

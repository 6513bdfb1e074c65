//! SCA power allocation and the benchmark schemes.

mod model;
mod sca;

use std::fmt::Write;

pub use model::{build_program, Layout, PilotMode, SinrTarget};
pub use sca::{
    benchmark_conventional, benchmark_fixed_pilot, benchmark_upper_bound, evaluate, feasibility_init,
    run_scheme, solve, solve_fzf, solve_mrc, Scheme,
};

use crate::config::SystemConfig;
use crate::gp::GpStatus;

/// Linear receiver used at the APs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decoder {
    Mrc,
    Fzf,
}

impl Decoder {
    pub fn name(&self) -> &'static str {
        match self {
            Decoder::Mrc => "mrc",
            Decoder::Fzf => "fzf",
        }
    }
}

/// Pilot and payload powers per device.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub pilot: Vec<f64>,
    pub payload: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(pilot: Vec<f64>, payload: Vec<f64>) -> Self {
        PowerAllocation { pilot, payload }
    }

    /// `K p^p_k + (L - K) p^d_k` per device.
    pub fn energy(&self, blocklength: usize) -> Vec<f64> {
        let k = self.pilot.len();
        self.pilot
            .iter()
            .zip(&self.payload)
            .map(|(pp, pd)| k as f64 * pp + (blocklength - k) as f64 * pd)
            .collect()
    }
}

/// Knobs of the SCA loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub gp_tolerance: f64,
    /// Relative objective gain below which iterations stop.
    pub sca_tolerance: f64,
    pub max_iterations: usize,
    /// Re-expansions of the feasibility program while `phi < 1`.
    pub init_reexpansions: usize,
}

impl SolverSettings {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        SolverSettings {
            gp_tolerance: cfg.gp_tolerance,
            sca_tolerance: cfg.sca_tolerance,
            max_iterations: cfg.sca_max_iterations,
            init_reexpansions: 10,
        }
    }
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings::from_config(&SystemConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Weighted sum rate in bits/s.
    pub objective: f64,
    pub sinr: Vec<f64>,
    pub power: PowerAllocation,
    /// Status of the GP that produced this iterate; `None` for the start.
    pub gp_status: Option<GpStatus>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    /// Number of GP solves after initialization.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn is_monotone(&self, rel_tol: f64) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].objective >= w[0].objective - rel_tol * w[0].objective.abs())
    }

    pub fn to_csv(&self) -> String {
        let k = self.records.first().map_or(0, |r| r.sinr.len());
        let mut out = String::from("iteration,objective_bps,gp_status");
        for prefix in ["sinr", "pilot", "payload"] {
            for i in 0..k {
                write!(out, ",{prefix}_{i}").unwrap();
            }
        }
        out.push('\n');
        for r in &self.records {
            let status = r.gp_status.map_or("start".to_string(), |s| format!("{s:?}").to_lowercase());
            write!(out, "{},{:.6},{}", r.iteration, r.objective, status).unwrap();
            for v in r.sinr.iter().chain(&r.power.pilot).chain(&r.power.payload) {
                write!(out, ",{v:.9e}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Why a run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Converged,
    IterationCap,
    Infeasible(String),
    GpFailure(String),
    NonPositiveExponent { device: usize },
}

/// Result of one scheme on one deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutcome {
    pub allocation: Option<PowerAllocation>,
    /// Lower-bound rate of each device in bits/s.
    pub rates_bps: Vec<f64>,
    /// `sum w_k R_k`, zero when any device misses its requirement.
    pub weighted_sum_rate: f64,
    pub feasible: bool,
    pub status: RunStatus,
    pub trace: IterationTrace,
}

impl SchemeOutcome {
    pub(crate) fn infeasible(k: usize, reason: String) -> Self {
        SchemeOutcome {
            allocation: None,
            rates_bps: vec![0.0; k],
            weighted_sum_rate: 0.0,
            feasible: false,
            status: RunStatus::Infeasible(reason),
            trace: IterationTrace::default(),
        }
    }
}

//! Numerical studies: bound tightness, convergence, AP-selection threshold,
//! energy and device-count sweeps, and the oracle self-test.
//!
//! Every study returns typed rows plus a CSV rendering that starts with
//! `#` comment lines carrying the experiment name, config hash and seed.
//! Deployments run in parallel and are collected in index order, so the
//! output does not depend on the thread count.

use std::str::FromStr;

use rayon::prelude::*;

use crate::channel::estimation_stats;
use crate::config::{db_to_linear, PerDevice, SystemConfig};
use crate::error::{Error, Result};
use crate::fbl::FblParams;
use crate::montecarlo::{ergodic_rate, FzfNormalization};
use crate::optimizer::{evaluate, run_scheme, Decoder, PowerAllocation, RunStatus, Scheme, SolverSettings};
use crate::rng::{derive_seed, domain};
use crate::scenario::{generate_topology, LargeScaleModel};
use crate::selftest::{self, SuiteResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    Tightness,
    Converge,
    ThresholdSweep,
    EnergyCompare,
    DevicesSweep,
    GpSelftest,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [
        ExperimentId::Tightness,
        ExperimentId::Converge,
        ExperimentId::ThresholdSweep,
        ExperimentId::EnergyCompare,
        ExperimentId::DevicesSweep,
        ExperimentId::GpSelftest,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentId::Tightness => "tightness",
            ExperimentId::Converge => "converge",
            ExperimentId::ThresholdSweep => "threshold-sweep",
            ExperimentId::EnergyCompare => "energy-compare",
            ExperimentId::DevicesSweep => "devices-sweep",
            ExperimentId::GpSelftest => "gp-selftest",
        }
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::config(format!("unknown experiment {s:?}")))
    }
}

/// Preset scale of the studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    #[default]
    Desk,
    Paper,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            _ => Err(Error::config(format!("unknown profile {s:?}, expected desk or paper"))),
        }
    }
}

/// Parameters of one study.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    pub profile: Profile,
    pub config: SystemConfig,
    pub seed: u64,
    /// Channel realizations per Monte-Carlo estimate.
    pub trials: usize,
    /// Random device drops per sweep point.
    pub deployments: usize,
    /// Total antenna counts `M N` for the tightness sweep; the first entry is
    /// used by every other study.
    pub total_antennas: Vec<usize>,
    pub ap_counts: Vec<usize>,
    pub thresholds: Vec<f64>,
    pub energies_db: Vec<f64>,
    pub device_counts: Vec<usize>,
    /// Equal pilot and payload power of the tightness study.
    pub tightness_power: f64,
    pub tightness_threshold: f64,
    pub mrc_threshold: f64,
    pub fzf_threshold: f64,
    /// Energy of the device sweep, dB.
    pub devices_energy_db: f64,
    pub normalization: FzfNormalization,
}

impl ExperimentSpec {
    /// Profile defaults on top of the built-in system parameters.
    pub fn new(id: ExperimentId, profile: Profile) -> Self {
        let mut config = SystemConfig::default();
        let desk = profile == Profile::Desk;
        config.num_devices = if desk { 5 } else { 10 };
        let seed = config.master_seed;
        ExperimentSpec {
            id,
            profile,
            config,
            seed,
            trials: if desk { 1000 } else { 10_000 },
            deployments: if desk { 30 } else { 100 },
            total_antennas: if desk { vec![72, 108, 144] } else { vec![144, 216, 288] },
            ap_counts: vec![1, 4, 9],
            thresholds: vec![0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0],
            energies_db: vec![10.0, 15.0, 20.0, 25.0, 30.0],
            device_counts: if desk { vec![2, 3, 4, 5, 6, 7] } else { vec![2, 4, 6, 8, 10, 12, 14] },
            tightness_power: 0.1,
            tightness_threshold: 0.9,
            mrc_threshold: 0.95,
            fzf_threshold: 0.75,
            devices_energy_db: 20.0,
            normalization: FzfNormalization::Analytic,
        }
    }

    /// Replaces the system parameters, keeping the seed in sync.
    pub fn with_config(mut self, config: SystemConfig) -> Self {
        self.seed = config.master_seed;
        self.config = config;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.config.master_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let increasing_usize = |name: &str, v: &[usize]| -> Result<()> {
            if v.is_empty() || v.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::config(format!("{name} must be non-empty and increasing")));
            }
            Ok(())
        };
        let increasing_f64 = |name: &str, v: &[f64]| -> Result<()> {
            if v.is_empty() || v.windows(2).any(|w| w[1] <= w[0]) || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::config(format!("{name} must be non-empty and increasing")));
            }
            Ok(())
        };
        increasing_usize("total_antennas", &self.total_antennas)?;
        increasing_usize("ap_counts", &self.ap_counts)?;
        increasing_usize("device_counts", &self.device_counts)?;
        increasing_f64("thresholds", &self.thresholds)?;
        increasing_f64("energies_db", &self.energies_db)?;
        if self.thresholds.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return Err(Error::config("thresholds must lie in (0, 1]"));
        }
        if self.trials < 100 {
            return Err(Error::config(format!("trials must be at least 100, got {}", self.trials)));
        }
        if self.deployments == 0 {
            return Err(Error::config("deployments must be positive"));
        }
        Ok(())
    }

    fn deployment_seed(&self, d: usize) -> u64 {
        derive_seed(derive_seed(self.seed, domain::DEPLOYMENT), d as u64)
    }

    fn settings(&self) -> SolverSettings {
        SolverSettings::from_config(&self.config)
    }

    /// Antennas per AP for `m` APs out of `total`, if it divides evenly.
    fn antennas(total: usize, m: usize) -> Option<usize> {
        (total % m == 0).then_some(total / m)
    }

    fn scenario(&self, m: usize, n: usize, k: usize, threshold: f64) -> SystemConfig {
        let mut cfg = self.config.clone();
        cfg.num_aps = m;
        cfg.antennas_per_ap = n;
        cfg.num_devices = k;
        cfg.ap_select_threshold = threshold;
        cfg
    }

    fn threshold(&self, decoder: Decoder) -> f64 {
        match decoder {
            Decoder::Mrc => self.mrc_threshold,
            Decoder::Fzf => self.fzf_threshold,
        }
    }

    fn header(&self) -> String {
        format!(
            "# experiment={}\n# config_hash={}\n# seed={}\n",
            self.id.name(),
            self.config.hash_hex(),
            self.seed
        )
    }
}

fn join(cells: &[String]) -> String {
    let mut line = cells.join(",");
    line.push('\n');
    line
}

fn sci(v: f64) -> String {
    format!("{v:.6e}")
}

fn status_name(s: &RunStatus) -> &'static str {
    match s {
        RunStatus::Converged => "converged",
        RunStatus::IterationCap => "iteration_cap",
        RunStatus::Infeasible(_) => "infeasible",
        RunStatus::GpFailure(_) => "gp_failure",
        RunStatus::NonPositiveExponent { .. } => "nonpositive_exponent",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TightnessRow {
    pub decoder: Decoder,
    pub aps: usize,
    pub antennas: usize,
    pub total_antennas: usize,
    pub deployment: usize,
    /// Mean per-device lower-bound rate, bits/s.
    pub lb_rate: f64,
    /// Mean per-device ergodic rate, bits/s.
    pub ergodic_rate: f64,
    /// 95% half width of `ergodic_rate`.
    pub ci: f64,
    pub failed_trials: usize,
}

impl TightnessRow {
    /// `(ergodic - lb) / ergodic`.
    pub fn relative_gap(&self) -> f64 {
        (self.ergodic_rate - self.lb_rate) / self.ergodic_rate
    }
}

/// One tightness evaluation at equal fixed powers.
#[allow(clippy::too_many_arguments)]
pub fn tightness_point(
    model: &LargeScaleModel,
    params: &FblParams,
    decoder: Decoder,
    power: &PowerAllocation,
    norm: FzfNormalization,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64, f64, usize)> {
    let k = model.num_devices() as f64;
    let (_, lb, _) = evaluate(model, params, decoder, power)?;
    let stats = estimation_stats(model, &power.pilot)?;
    let est = ergodic_rate(model, &stats, power, params, decoder, norm, trials, seed)?;
    let lb_mean = lb.iter().sum::<f64>() / k;
    let erg = est.mean.iter().sum::<f64>() / k;
    let ci = est.half_width.iter().map(|h| h * h).sum::<f64>().sqrt() / k;
    Ok((lb_mean, erg, ci, est.failed_trials))
}

pub fn run_tightness(spec: &ExperimentSpec) -> Result<Vec<TightnessRow>> {
    let k = spec.config.num_devices;
    let mut jobs = Vec::new();
    for decoder in [Decoder::Mrc, Decoder::Fzf] {
        for &mn in &spec.total_antennas {
            for &m in &spec.ap_counts {
                let Some(n) = ExperimentSpec::antennas(mn, m) else { continue };
                if decoder == Decoder::Fzf && n <= k {
                    continue;
                }
                for d in 0..spec.deployments {
                    jobs.push((decoder, mn, m, n, d));
                }
            }
        }
    }
    let power = PowerAllocation::new(vec![spec.tightness_power; k], vec![spec.tightness_power; k]);
    jobs.into_par_iter()
        .map(|(decoder, mn, m, n, d)| {
            let cfg = spec.scenario(m, n, k, spec.tightness_threshold);
            let params = FblParams::from_config(&cfg)?;
            let seed = spec.deployment_seed(d);
            let model = generate_topology(&cfg, seed)?;
            let (lb_rate, ergodic_rate, ci, failed_trials) =
                tightness_point(&model, &params, decoder, &power, spec.normalization, spec.trials, seed)?;
            Ok(TightnessRow {
                decoder,
                aps: m,
                antennas: n,
                total_antennas: mn,
                deployment: d,
                lb_rate,
                ergodic_rate,
                ci,
                failed_trials,
            })
        })
        .collect()
}

pub fn tightness_csv(spec: &ExperimentSpec, rows: &[TightnessRow]) -> String {
    let mut out = spec.header();
    out += "decoder,M,N,MN,deployment,lb_rate,ergodic_rate,ci,failed_trials\n";
    for r in rows {
        out += &join(&[
            r.decoder.name().into(),
            r.aps.to_string(),
            r.antennas.to_string(),
            r.total_antennas.to_string(),
            r.deployment.to_string(),
            sci(r.lb_rate),
            sci(r.ergodic_rate),
            sci(r.ci),
            r.failed_trials.to_string(),
        ]);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeTrace {
    pub decoder: Decoder,
    pub aps: usize,
    pub antennas: usize,
    /// First deployment on which the proposed scheme is feasible.
    pub deployment: Option<usize>,
    pub objectives: Vec<f64>,
    pub status: String,
}

pub fn run_converge(spec: &ExperimentSpec) -> Result<Vec<ConvergeTrace>> {
    let k = spec.config.num_devices;
    let mn = spec.total_antennas[0];
    let settings = spec.settings();
    let mut jobs = Vec::new();
    for decoder in [Decoder::Mrc, Decoder::Fzf] {
        for &m in &spec.ap_counts {
            if let Some(n) = ExperimentSpec::antennas(mn, m) {
                if decoder == Decoder::Mrc || n > k {
                    jobs.push((decoder, m, n));
                }
            }
        }
    }
    jobs.into_par_iter()
        .map(|(decoder, m, n)| {
            let cfg = spec.scenario(m, n, k, spec.threshold(decoder));
            let params = FblParams::from_config(&cfg)?;
            for d in 0..spec.deployments {
                let model = generate_topology(&cfg, spec.deployment_seed(d))?;
                let out = run_scheme(Scheme::Proposed, &model, &params, decoder, &settings);
                if out.feasible {
                    return Ok(ConvergeTrace {
                        decoder,
                        aps: m,
                        antennas: n,
                        deployment: Some(d),
                        objectives: out.trace.objectives(),
                        status: status_name(&out.status).into(),
                    });
                }
            }
            Ok(ConvergeTrace {
                decoder,
                aps: m,
                antennas: n,
                deployment: None,
                objectives: Vec::new(),
                status: "no_feasible_deployment".into(),
            })
        })
        .collect()
}

pub fn converge_csv(spec: &ExperimentSpec, rows: &[ConvergeTrace]) -> String {
    let mut out = spec.header();
    out += "decoder,M,N,deployment,iteration,objective_bps,status\n";
    for t in rows {
        let d = t.deployment.map_or("none".to_string(), |d| d.to_string());
        if t.objectives.is_empty() {
            out += &join(&[
                t.decoder.name().into(),
                t.aps.to_string(),
                t.antennas.to_string(),
                d.clone(),
                String::new(),
                String::new(),
                t.status.clone(),
            ]);
        }
        for (i, o) in t.objectives.iter().enumerate() {
            out += &join(&[
                t.decoder.name().into(),
                t.aps.to_string(),
                t.antennas.to_string(),
                d.clone(),
                i.to_string(),
                sci(*o),
                t.status.clone(),
            ]);
        }
    }
    out
}

/// Averages of one scheme over the deployments of a sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub decoder: Decoder,
    pub scheme: Scheme,
    pub aps: usize,
    pub antennas: usize,
    pub devices: usize,
    pub threshold: f64,
    pub energy_db: f64,
    /// Weighted sum rate per deployment, zero when infeasible.
    pub values: Vec<f64>,
    pub feasible: Vec<bool>,
    /// SCA iterations per deployment.
    pub iterations: Vec<usize>,
}

impl SweepCell {
    /// Average with infeasible deployments counted as zero.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Average over feasible deployments only; zero when there are none.
    pub fn mean_feasible(&self) -> f64 {
        let n = self.feasible.iter().filter(|f| **f).count();
        if n == 0 {
            return 0.0;
        }
        self.values.iter().zip(&self.feasible).filter(|(_, f)| **f).map(|(v, _)| v).sum::<f64>() / n as f64
    }

    pub fn feasible_count(&self) -> usize {
        self.feasible.iter().filter(|f| **f).count()
    }
}

#[derive(Debug, Clone, Copy)]
struct SweepPoint {
    decoder: Decoder,
    aps: usize,
    antennas: usize,
    devices: usize,
    threshold: f64,
    energy_db: f64,
}

/// Runs `schemes` on every deployment of every point. Each deployment runs
/// its schemes back to back so all schemes see the same devices.
fn sweep(spec: &ExperimentSpec, points: &[SweepPoint], schemes: &[Scheme]) -> Result<Vec<SweepCell>> {
    let settings = spec.settings();
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.deployments).map(move |d| (p, d)))
        .collect();
    let results: Vec<Vec<(f64, bool, usize)>> = jobs
        .into_par_iter()
        .map(|(p, d)| {
            let pt = points[p];
            let mut cfg = spec.scenario(pt.aps, pt.antennas, pt.devices, pt.threshold);
            cfg.energy_budget = PerDevice::Uniform(db_to_linear(pt.energy_db));
            let params = FblParams::from_config(&cfg)?;
            let model = generate_topology(&cfg, spec.deployment_seed(d))?;
            Ok(schemes
                .iter()
                .map(|s| {
                    let o = run_scheme(*s, &model, &params, pt.decoder, &settings);
                    (o.weighted_sum_rate, o.feasible, o.trace.iterations())
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for (p, pt) in points.iter().enumerate() {
        let per = &results[p * spec.deployments..(p + 1) * spec.deployments];
        for (s, scheme) in schemes.iter().enumerate() {
            cells.push(SweepCell {
                decoder: pt.decoder,
                scheme: *scheme,
                aps: pt.aps,
                antennas: pt.antennas,
                devices: pt.devices,
                threshold: pt.threshold,
                energy_db: pt.energy_db,
                values: per.iter().map(|r| r[s].0).collect(),
                feasible: per.iter().map(|r| r[s].1).collect(),
                iterations: per.iter().map(|r| r[s].2).collect(),
            });
        }
    }
    Ok(cells)
}

pub fn sweep_csv(spec: &ExperimentSpec, cells: &[SweepCell]) -> String {
    let mut out = spec.header();
    out += "decoder,scheme,M,N,K,threshold,energy_db,deployments,feasible,avg_wsr_bps,avg_wsr_feasible_bps,mean_iterations\n";
    for c in cells {
        let iters = c.iterations.iter().sum::<usize>() as f64 / c.iterations.len() as f64;
        out += &join(&[
            c.decoder.name().into(),
            c.scheme.name().into(),
            c.aps.to_string(),
            c.antennas.to_string(),
            c.devices.to_string(),
            format!("{:.4}", c.threshold),
            format!("{:.2}", c.energy_db),
            c.values.len().to_string(),
            c.feasible_count().to_string(),
            sci(c.mean()),
            sci(c.mean_feasible()),
            format!("{iters:.3}"),
        ]);
    }
    out
}

fn energy_db(cfg: &SystemConfig) -> f64 {
    10.0 * cfg.energy_budget.get(0).log10()
}

/// Proposed scheme over the AP-selection threshold grid, `M > 1` only.
pub fn run_threshold_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepCell>> {
    let k = spec.config.num_devices;
    let mn = spec.total_antennas[0];
    let mut points = Vec::new();
    for decoder in [Decoder::Mrc, Decoder::Fzf] {
        for &m in spec.ap_counts.iter().filter(|m| **m > 1) {
            let Some(n) = ExperimentSpec::antennas(mn, m) else { continue };
            if decoder == Decoder::Fzf && n <= k {
                continue;
            }
            for &threshold in &spec.thresholds {
                points.push(SweepPoint {
                    decoder,
                    aps: m,
                    antennas: n,
                    devices: k,
                    threshold,
                    energy_db: energy_db(&spec.config),
                });
            }
        }
    }
    sweep(spec, &points, &[Scheme::Proposed])
}

/// All four schemes over the energy grid.
pub fn run_energy_compare(spec: &ExperimentSpec) -> Result<Vec<SweepCell>> {
    let k = spec.config.num_devices;
    let mn = spec.total_antennas[0];
    let mut points = Vec::new();
    for decoder in [Decoder::Mrc, Decoder::Fzf] {
        for &m in &spec.ap_counts {
            let Some(n) = ExperimentSpec::antennas(mn, m) else { continue };
            if decoder == Decoder::Fzf && n <= k {
                continue;
            }
            for &energy_db in &spec.energies_db {
                points.push(SweepPoint {
                    decoder,
                    aps: m,
                    antennas: n,
                    devices: k,
                    threshold: spec.threshold(decoder),
                    energy_db,
                });
            }
        }
    }
    sweep(spec, &points, &Scheme::ALL)
}

/// All four schemes over the device counts with `K < N`.
pub fn run_devices_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepCell>> {
    let mn = spec.total_antennas[0];
    let mut points = Vec::new();
    for decoder in [Decoder::Mrc, Decoder::Fzf] {
        for &m in &spec.ap_counts {
            let Some(n) = ExperimentSpec::antennas(mn, m) else { continue };
            for &k in spec.device_counts.iter().filter(|k| **k < n && **k < spec.config.blocklength) {
                points.push(SweepPoint {
                    decoder,
                    aps: m,
                    antennas: n,
                    devices: k,
                    threshold: spec.threshold(decoder),
                    energy_db: spec.devices_energy_db,
                });
            }
        }
    }
    sweep(spec, &points, &Scheme::ALL)
}

/// Oracle suites at full size.
pub fn run_gp_selftest(spec: &ExperimentSpec) -> Result<Vec<SuiteResult>> {
    selftest::run_all(1000, 1000, 50, spec.seed)
}

pub fn selftest_csv(spec: &ExperimentSpec, rows: &[SuiteResult]) -> String {
    let mut out = spec.header();
    out += "suite,cases,worst,tolerance,passed\n";
    for r in rows {
        out += &join(&[
            r.name.clone(),
            r.cases.to_string(),
            sci(r.worst),
            sci(r.tolerance),
            r.passed().to_string(),
        ]);
    }
    out
}

/// Result of [`run`]: the CSV text and whether every check passed (only the
/// self-test can fail).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub csv: String,
    pub ok: bool,
}

pub fn run(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let (csv, ok) = match spec.id {
        ExperimentId::Tightness => (tightness_csv(spec, &run_tightness(spec)?), true),
        ExperimentId::Converge => (converge_csv(spec, &run_converge(spec)?), true),
        ExperimentId::ThresholdSweep => (sweep_csv(spec, &run_threshold_sweep(spec)?), true),
        ExperimentId::EnergyCompare => (sweep_csv(spec, &run_energy_compare(spec)?), true),
        ExperimentId::DevicesSweep => (sweep_csv(spec, &run_devices_sweep(spec)?), true),
        ExperimentId::GpSelftest => {
            let rows = run_gp_selftest(spec)?;
            let ok = rows.iter().all(SuiteResult::passed);
            (selftest_csv(spec, &rows), ok)
        }
    };
    Ok(ExperimentOutput { csv, ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(id: ExperimentId) -> ExperimentSpec {
        let mut s = ExperimentSpec::new(id, Profile::Desk);
        s.trials = 100;
        s.deployments = 2;
        s.total_antennas = vec![36];
        s.ap_counts = vec![1, 4];
        s.thresholds = vec![0.9, 1.0];
        s.energies_db = vec![20.0];
        s.device_counts = vec![2, 3];
        s
    }

    #[test]
    fn names_round_trip() {
        for e in ExperimentId::ALL {
            assert_eq!(e.name().parse::<ExperimentId>().unwrap(), e);
        }
        assert!("nope".parse::<ExperimentId>().is_err());
        assert!("huge".parse::<Profile>().is_err());
    }

    #[test]
    fn validation_rejects_bad_ranges() {
        let mut s = tiny(ExperimentId::ThresholdSweep);
        s.thresholds = vec![0.9, 0.8];
        assert!(s.validate().is_err());
        let mut s = tiny(ExperimentId::ThresholdSweep);
        s.thresholds.clear();
        assert!(s.validate().is_err());
        let mut s = tiny(ExperimentId::Tightness);
        s.trials = 10;
        assert!(s.validate().is_err());
    }

    #[test]
    fn csv_carries_provenance_and_is_reproducible() {
        let spec = tiny(ExperimentId::DevicesSweep);
        let a = run(&spec).unwrap();
        let b = run(&spec).unwrap();
        assert_eq!(a, b);
        assert!(a.csv.starts_with("# experiment=devices-sweep\n# config_hash="));
        assert!(a.csv.contains(&format!("# seed={}\n", spec.seed)));
        // two decoders, two M, two K, four schemes
        let rows = a.csv.lines().filter(|l| !l.starts_with('#')).count() - 1;
        assert_eq!(rows, 2 * 2 * 2 * 4);
    }

    #[test]
    fn tightness_rows_respect_fzf_dimension() {
        let mut spec = tiny(ExperimentId::Tightness);
        spec.ap_counts = vec![4, 9];
        let rows = run_tightness(&spec).unwrap();
        // N = 4 < K with nine APs: only MRC rows
        assert!(rows.iter().all(|r| !(r.decoder == Decoder::Fzf && r.aps == 9)));
        assert!(rows.iter().any(|r| r.decoder == Decoder::Mrc && r.aps == 9));
    }
}

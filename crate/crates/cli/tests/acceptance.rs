//! Acceptance criteria, one PASS/FAIL line each.

use std::fs;
use std::process::Command;
use std::time::Instant;

use urllc_core::channel::estimation_stats;
use urllc_core::experiment::{
    run_energy_compare, run_threshold_sweep, run_tightness, ExperimentId, ExperimentSpec, Profile, SweepCell,
};
use urllc_core::fbl::{lb_rate, FblParams};
use urllc_core::montecarlo::{desired_amplitude, expected_terms, mean_and_se, simulate, FzfNormalization};
use urllc_core::optimizer::{solve, Decoder, PowerAllocation, RunStatus, Scheme, SolverSettings};
use urllc_core::scenario::generate_topology;
use urllc_core::selftest::{gp_oracle_suites, identity_suites, monomial_bound_suites, scalar_bound_suites, SuiteResult};
use urllc_core::{PerDevice, SystemConfig};

struct Verdict {
    id: usize,
    pass: bool,
    detail: String,
}

fn suites_pass(rows: &[SuiteResult]) -> (bool, String) {
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("{} worst {:.3e} > {:.1e}", r.name, r.worst, r.tolerance))
        .collect();
    let worst = rows
        .iter()
        .map(|r| format!("{}={:.1e}", r.name, r.worst))
        .collect::<Vec<_>>()
        .join(" ");
    if failed.is_empty() {
        (true, worst)
    } else {
        (false, failed.join("; "))
    }
}

fn identity() -> Verdict {
    let t = Instant::now();
    let rows = identity_suites(1000, 1).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let (ok, detail) = suites_pass(&rows);
    Verdict {
        id: 1,
        pass: ok && secs < 1.0,
        detail: format!("{detail} in {secs:.2}s"),
    }
}

fn term_validation() -> Verdict {
    let t = Instant::now();
    let mut cfg = SystemConfig::default();
    cfg.num_aps = 4;
    cfg.antennas_per_ap = 8;
    cfg.num_devices = 3;
    let params = FblParams::from_config(&cfg).unwrap();
    let model = generate_topology(&cfg, cfg.master_seed).unwrap();
    let power = PowerAllocation::new(vec![0.1; 3], vec![0.1; 3]);
    let stats = estimation_stats(&model, &power.pilot).unwrap();
    let trials = 10_000;
    let mut checks = 0;
    let mut worst_sigma = 0.0f64;
    let mut failures = Vec::new();
    let mut nondeterministic = Vec::new();
    for decoder in [Decoder::Mrc, Decoder::Fzf] {
        let outcomes = simulate(&model, &stats, &power, &params, decoder, FzfNormalization::Analytic, trials, 17);
        let ok: Vec<_> = outcomes.iter().flatten().collect();
        let mut check = |name: String, samples: Vec<f64>, expected: f64| {
            let (mean, se) = mean_and_se(&samples);
            let z = (mean - expected).abs() / se.max(1e-300);
            checks += 1;
            worst_sigma = worst_sigma.max(z);
            if z > 3.0 {
                failures.push(format!("{name}: {mean:.4e} vs {expected:.4e} ({z:.2} sigma)"));
            }
        };
        for k in 0..3 {
            let e = expected_terms(&model, &stats, &power, decoder, k);
            let amp = desired_amplitude(&model, &stats, decoder, FzfNormalization::Analytic, k);
            let tag = format!("{} k={k}", decoder.name());
            let exact = ok.iter().all(|o| (o.terms[k].desired - e.desired).abs() <= 1e-12 * e.desired);
            if !exact {
                nondeterministic.push(format!("{tag} DS not deterministic"));
            }
            check(format!("{tag} DS amplitude"), ok.iter().map(|o| o.terms[k].gain.re).collect(), amp);
            check(format!("{tag} DS phase"), ok.iter().map(|o| o.terms[k].gain.im).collect(), 0.0);
            check(format!("{tag} LS"), ok.iter().map(|o| o.terms[k].leakage).collect(), e.leakage);
            for j in (0..3).filter(|&j| j != k) {
                check(
                    format!("{tag} UI j={j}"),
                    ok.iter().map(|o| o.terms[k].interference[j]).collect(),
                    e.interference[j],
                );
            }
            check(format!("{tag} N"), ok.iter().map(|o| o.terms[k].noise).collect(), e.noise);
        }
    }
    failures.extend(nondeterministic);
    let secs = t.elapsed().as_secs_f64();
    Verdict {
        id: 2,
        pass: failures.is_empty() && secs < 60.0,
        detail: if failures.is_empty() {
            format!("{checks} term means within {worst_sigma:.2} sigma, {trials} trials, {secs:.1}s")
        } else {
            failures.join("; ")
        },
    }
}

fn lower_bound_property() -> Verdict {
    let mut spec = ExperimentSpec::new(ExperimentId::Tightness, Profile::Desk);
    spec.deployments = 10;
    let rows = run_tightness(&spec).unwrap();
    let mut problems = Vec::new();
    for r in &rows {
        if r.ergodic_rate < r.lb_rate - r.ci {
            problems.push(format!(
                "{} M={} MN={} dep={}: ergodic below bound",
                r.decoder.name(),
                r.aps,
                r.total_antennas,
                r.deployment
            ));
        }
    }
    let avg_gap = |decoder: Decoder, mn: usize, m: usize| -> Option<f64> {
        let sel: Vec<_> = rows
            .iter()
            .filter(|r| r.decoder == decoder && r.total_antennas == mn && r.aps == m)
            .collect();
        if sel.is_empty() {
            return None;
        }
        let lb: f64 = sel.iter().map(|r| r.lb_rate).sum();
        let erg: f64 = sel.iter().map(|r| r.ergodic_rate).sum();
        Some((erg - lb) / erg)
    };
    let mut fzf_worst = 0.0f64;
    let mut mrc_gaps = Vec::new();
    for &mn in &spec.total_antennas {
        let gaps: Vec<f64> = spec.ap_counts.iter().filter_map(|&m| avg_gap(Decoder::Mrc, mn, m)).collect();
        if gaps.iter().any(|g| *g <= 0.0) || gaps.windows(2).any(|w| w[1] < w[0]) {
            problems.push(format!("MRC gaps at MN={mn} not positive and non-decreasing: {gaps:.4?}"));
        }
        mrc_gaps.push(gaps);
        for &m in &spec.ap_counts {
            if let Some(g) = avg_gap(Decoder::Fzf, mn, m) {
                fzf_worst = fzf_worst.max(g.abs());
            }
        }
    }
    if fzf_worst > 0.05 {
        problems.push(format!("FZF average gap {fzf_worst:.4} above 5%"));
    }
    Verdict {
        id: 3,
        pass: problems.is_empty(),
        detail: if problems.is_empty() {
            format!(
                "{} instances above bound; FZF worst avg gap {:.2}%; MRC gaps over M per MN {:.3?}",
                rows.len(),
                100.0 * fzf_worst,
                mrc_gaps
            )
        } else {
            problems.join("; ")
        },
    }
}

fn approximation_suites() -> Verdict {
    let mut rows = scalar_bound_suites(1000, 2).unwrap();
    rows.extend(monomial_bound_suites(1000, 2).unwrap());
    let (pass, detail) = suites_pass(&rows);
    Verdict { id: 4, pass, detail }
}

fn gp_oracle() -> Verdict {
    let rows = gp_oracle_suites(50, 3).unwrap();
    let (pass, detail) = suites_pass(&rows);
    Verdict { id: 5, pass, detail }
}

fn sca_behaviour() -> Verdict {
    let spec = ExperimentSpec::new(ExperimentId::Converge, Profile::Desk);
    let settings = SolverSettings::from_config(&spec.config);
    let mn = spec.total_antennas[0];
    let k = spec.config.num_devices;
    let mut problems = Vec::new();
    let (mut runs, mut max_mrc, mut max_fzf, mut slowest) = (0, 0, 0, 0.0f64);
    for decoder in [Decoder::Mrc, Decoder::Fzf] {
        for &m in &spec.ap_counts {
            let mut cfg = spec.config.clone();
            cfg.num_aps = m;
            cfg.antennas_per_ap = mn / m;
            cfg.ap_select_threshold = if decoder == Decoder::Mrc { 0.95 } else { 0.75 };
            if decoder == Decoder::Fzf && cfg.antennas_per_ap <= k {
                continue;
            }
            let params = FblParams::from_config(&cfg).unwrap();
            for seed in 0..10u64 {
                let model = generate_topology(&cfg, seed).unwrap();
                let t = Instant::now();
                let out = solve(&model, &params, decoder, &settings);
                slowest = slowest.max(t.elapsed().as_secs_f64());
                if matches!(out.status, RunStatus::Infeasible(_)) {
                    continue;
                }
                runs += 1;
                let it = out.trace.iterations();
                let cap = if decoder == Decoder::Mrc { 10 } else { 25 };
                match decoder {
                    Decoder::Mrc => max_mrc = max_mrc.max(it),
                    Decoder::Fzf => max_fzf = max_fzf.max(it),
                }
                if !out.trace.is_monotone(1e-9) {
                    problems.push(format!("{} M={m} seed={seed}: trace not monotone", decoder.name()));
                }
                if out.status != RunStatus::Converged || it > cap {
                    problems.push(format!("{} M={m} seed={seed}: {:?} after {it}", decoder.name(), out.status));
                }
            }
        }
    }
    if slowest >= 30.0 {
        problems.push(format!("slowest run {slowest:.1}s"));
    }
    Verdict {
        id: 6,
        pass: problems.is_empty() && runs > 0,
        detail: if problems.is_empty() {
            format!("{runs} runs monotone; max iterations MRC {max_mrc}, FZF {max_fzf}; slowest {slowest:.2}s")
        } else {
            problems.join("; ")
        },
    }
}

/// Brute-force single-device optimum over a log grid of (pilot, payload).
fn grid_optimum(cfg: &SystemConfig, decoder: Decoder, seed: u64) -> (f64, f64) {
    let params = FblParams::from_config(cfg).unwrap();
    let model = generate_topology(cfg, seed).unwrap();
    let set = &model.service_sets[0];
    let n = cfg.antennas_per_ap as f64;
    let e = params.energy[0];
    let l = cfg.blocklength as f64;
    let side = 1500;
    let axis = |hi: f64| -> Vec<f64> {
        let lo = hi * 1e-6;
        (0..side)
            .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (side - 1) as f64).exp())
            .collect()
    };
    let pilots = axis(e);
    let payloads = axis(e / (l - 1.0));
    let mut best = 0.0f64;
    for &pp in &pilots {
        let lam: Vec<f64> = set
            .iter()
            .map(|&m| {
                let b = model.beta[(m, 0)];
                pp * b * b / (pp * b + 1.0)
            })
            .collect();
        let sum_lam: f64 = lam.iter().sum();
        let sum_lam_beta: f64 = set.iter().zip(&lam).map(|(&m, x)| x * model.beta[(m, 0)]).sum();
        let sum_sqrt: f64 = lam.iter().map(|x| x.sqrt()).sum();
        let sum_err: f64 = set.iter().zip(&lam).map(|(&m, x)| model.beta[(m, 0)] - x).sum();
        for &pd in &payloads {
            if pp + (l - 1.0) * pd > e {
                break;
            }
            let sinr = match decoder {
                Decoder::Mrc => n * pd * sum_lam * sum_lam / (pd * sum_lam_beta + sum_lam),
                Decoder::Fzf => pd * (n - 1.0) * sum_sqrt * sum_sqrt / (set.len() as f64 + pd * sum_err),
            };
            let r = lb_rate(sinr, &params, 0);
            if r >= params.rate_req_bps[0] {
                best = best.max(model.weights[0] * r);
            }
        }
    }
    let out = solve(&model, &params, decoder, &SolverSettings::from_config(cfg));
    (out.weighted_sum_rate, best)
}

fn single_device_oracle() -> Verdict {
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    let mut cases = 0;
    for decoder in [Decoder::Mrc, Decoder::Fzf] {
        for m in [1usize, 4] {
            let mut cfg = SystemConfig::default();
            cfg.num_devices = 1;
            cfg.num_aps = m;
            cfg.antennas_per_ap = 8;
            cfg.weights = Some(PerDevice::Uniform(1.0));
            for seed in 0..4u64 {
                let (sca, grid) = grid_optimum(&cfg, decoder, seed);
                cases += 1;
                if grid == 0.0 && sca == 0.0 {
                    continue;
                }
                let rel = (sca - grid).abs() / grid.max(sca);
                worst = worst.max(rel);
                if rel > 0.01 {
                    problems.push(format!("{} M={m} seed={seed}: sca {sca:.5e} grid {grid:.5e}", decoder.name()));
                }
            }
        }
    }
    Verdict {
        id: 7,
        pass: problems.is_empty(),
        detail: if problems.is_empty() {
            format!("{cases} single-device instances, worst relative difference {:.3}%", 100.0 * worst)
        } else {
            problems.join("; ")
        },
    }
}

fn scheme_ordering() -> Verdict {
    let mut spec = ExperimentSpec::new(ExperimentId::EnergyCompare, Profile::Desk);
    spec.energies_db = vec![10.0, 20.0, 30.0];
    let cells = run_energy_compare(&spec).unwrap();
    let mut problems = Vec::new();
    let mut points = 0;
    for group in cells.chunks(Scheme::ALL.len()) {
        let get = |s: Scheme| group.iter().find(|c| c.scheme == s).unwrap();
        let (prop, ub, fixed) = (get(Scheme::Proposed), get(Scheme::UpperBound), get(Scheme::FixedPilot));
        let tag = format!("{} M={} E={}dB", prop.decoder.name(), prop.aps, prop.energy_db);
        points += 1;
        if !(ub.mean() >= prop.mean() && prop.mean() >= fixed.mean()) {
            problems.push(format!(
                "{tag}: averages ub {:.4e} prop {:.4e} fixed {:.4e}",
                ub.mean(),
                prop.mean(),
                fixed.mean()
            ));
        }
        for (d, (p, f)) in prop.values.iter().zip(&fixed.values).enumerate() {
            if *p < f * (1.0 - 1e-9) {
                problems.push(format!("{tag} deployment {d}: proposed {p:.5e} < fixed {f:.5e}"));
            }
        }
    }
    Verdict {
        id: 8,
        pass: problems.is_empty(),
        detail: if problems.is_empty() {
            format!("{points} sweep points x {} deployments ordered", spec.deployments)
        } else {
            problems.join("; ")
        },
    }
}

/// Paired mean difference and its standard error between two cells.
fn paired(a: &SweepCell, b: &SweepCell) -> (f64, f64) {
    let d: Vec<f64> = b.values.iter().zip(&a.values).map(|(y, x)| y - x).collect();
    mean_and_se(&d)
}

fn threshold_sweep() -> Verdict {
    let spec = ExperimentSpec::new(ExperimentId::ThresholdSweep, Profile::Desk);
    let cells = run_threshold_sweep(&spec).unwrap();
    let mut problems = Vec::new();
    let mut peaks = Vec::new();
    for &m in spec.ap_counts.iter().filter(|m| **m > 1) {
        let curve: Vec<&SweepCell> = cells.iter().filter(|c| c.decoder == Decoder::Mrc && c.aps == m).collect();
        let (peak, top) = curve
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.mean().total_cmp(&b.1.mean()))
            .map(|(i, c)| (i, c.mean()))
            .unwrap();
        let th = curve[peak].threshold;
        peaks.push(format!("M={m} peak {th}"));
        if th < 0.85 {
            problems.push(format!("M={m}: peak at {th}"));
        }
        let last = curve.last().unwrap();
        if (last.threshold - 1.0).abs() < 1e-12 && last.mean() > top {
            problems.push(format!("M={m}: all-AP value above the peak"));
        }
        // rising before the peak and falling after it, up to two standard errors
        for (i, w) in curve.windows(2).enumerate() {
            let (diff, se) = paired(w[0], w[1]);
            let against = if i < peak { -diff } else { diff };
            if against > 2.0 * se {
                problems.push(format!("M={m}: step {} -> {} against the trend", w[0].threshold, w[1].threshold));
            }
        }
    }
    Verdict {
        id: 9,
        pass: problems.is_empty(),
        detail: if problems.is_empty() { peaks.join(", ") } else { problems.join("; ") },
    }
}

fn determinism() -> Verdict {
    let mut problems = Vec::new();
    let names = ["tightness", "converge", "threshold-sweep", "energy-compare", "devices-sweep", "gp-selftest"];
    for name in names {
        let mut outputs = Vec::new();
        for threads in ["8", "1", "8"] {
            let dir = tempfile::tempdir().unwrap();
            let o = Command::new(env!("CARGO_BIN_EXE_urllc"))
                .args([name, "--seed", "3", "--trials", "200", "--deployments", "2", "--threads", threads])
                .arg("--out")
                .arg(dir.path())
                .output()
                .unwrap();
            if !o.status.success() {
                problems.push(format!("{name} exited with {:?}", o.status.code()));
                break;
            }
            outputs.push(fs::read(dir.path().join(format!("{name}.csv"))).unwrap());
        }
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            problems.push(format!("{name} differs between runs"));
        }
    }
    Verdict {
        id: 10,
        pass: problems.is_empty(),
        detail: if problems.is_empty() {
            format!("{} experiments byte-identical with 8, 1 and 8 threads", names.len())
        } else {
            problems.join("; ")
        },
    }
}

fn main() {
    let checks: [fn() -> Verdict; 10] = [
        identity,
        term_validation,
        lower_bound_property,
        approximation_suites,
        gp_oracle,
        sca_behaviour,
        single_device_oracle,
        scheme_ordering,
        threshold_sweep,
        determinism,
    ];
    let mut failed = Vec::new();
    for check in checks {
        let v = check();
        println!("{} criterion {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.id, v.detail);
        if !v.pass {
            failed.push(v.id);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

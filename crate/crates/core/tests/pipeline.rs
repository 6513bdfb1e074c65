use urllc_core::channel::estimation_stats;
use urllc_core::gp::{solve as solve_gp, GpOptions, GpProblem};
use urllc_core::montecarlo::{ergodic_rate, FzfNormalization};
use urllc_core::optimizer::{evaluate, solve, Decoder, RunStatus, SolverSettings};
use urllc_core::scenario::generate_topology;
use urllc_core::{FblParams, SystemConfig};

fn small() -> SystemConfig {
    SystemConfig::from_text("num_devices = 3\nnum_aps = 4\nantennas_per_ap = 8\nmaster_seed = 4\n").unwrap()
}

#[test]
fn box_volume_gp() {
    // max xyz s.t. 2(xy + yz + xz) <= 6, optimum is the unit cube
    let mut gp = GpProblem::new(["x", "y", "z"]);
    let a = &mut gp.arena;
    let vol = a.monomial(1.0, &[(0, 1.0), (1, 1.0), (2, 1.0)]).unwrap();
    let xy = a.monomial(2.0, &[(0, 1.0), (1, 1.0)]).unwrap();
    let yz = a.monomial(2.0, &[(1, 1.0), (2, 1.0)]).unwrap();
    let xz = a.monomial(2.0, &[(0, 1.0), (2, 1.0)]).unwrap();
    let area = a.sum(&[xy, yz, xz]).unwrap();
    let six = a.constant(6.0).unwrap();
    gp.maximize(vol).unwrap();
    gp.constrain("area", area, six).unwrap();
    let sol = solve_gp(&gp, &GpOptions::default()).unwrap();
    assert!(sol.is_optimal());
    for v in &sol.x {
        assert!((v - 1.0).abs() < 1e-6, "{:?}", sol.x);
    }
    assert!((sol.objective - 1.0).abs() < 1e-6);
}

#[test]
fn optimized_allocation_respects_budget_and_requirements() {
    let cfg = small();
    let model = generate_topology(&cfg, cfg.master_seed).unwrap();
    let params = FblParams::from_config(&cfg).unwrap();
    for decoder in [Decoder::Mrc, Decoder::Fzf] {
        let out = solve(&model, &params, decoder, &SolverSettings::default());
        assert!(matches!(out.status, RunStatus::Converged), "{:?}", out.status);
        let power = out.allocation.expect("feasible instance");
        for (e, budget) in power.energy(params.blocklength).iter().zip(&params.energy) {
            assert!(*e <= budget * (1.0 + 1e-6), "{e} > {budget}");
        }
        let (_, rates, wsr) = evaluate(&model, &params, decoder, &power).unwrap();
        for (r, req) in rates.iter().zip(&params.rate_req_bps) {
            assert!(*r >= req * (1.0 - 1e-6));
        }
        assert!((wsr - out.weighted_sum_rate).abs() <= 1e-9 * wsr);
        assert!(out.trace.is_monotone(1e-9));
    }
}

#[test]
fn simulated_rate_is_above_closed_form() {
    let cfg = small();
    let model = generate_topology(&cfg, cfg.master_seed).unwrap();
    let params = FblParams::from_config(&cfg).unwrap();
    for decoder in [Decoder::Mrc, Decoder::Fzf] {
        let power = solve(&model, &params, decoder, &SolverSettings::default()).allocation.unwrap();
        let stats = estimation_stats(&model, &power.pilot).unwrap();
        let (_, lb, _) = evaluate(&model, &params, decoder, &power).unwrap();
        let est = ergodic_rate(&model, &stats, &power, &params, decoder, FzfNormalization::Analytic, 2000, 9).unwrap();
        for k in 0..lb.len() {
            assert!(est.mean[k] >= lb[k] - est.half_width[k], "{decoder:?} device {k}: {} < {}", est.mean[k], lb[k]);
        }
    }
}

#[test]
fn topology_depends_only_on_seed() {
    let cfg = small();
    let a = generate_topology(&cfg, 21).unwrap();
    let b = generate_topology(&cfg, 21).unwrap();
    let c = generate_topology(&cfg, 22).unwrap();
    assert_eq!(a.beta, b.beta);
    assert_ne!(a.beta, c.beta);
}

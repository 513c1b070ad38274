//! Monte Carlo checks of the simulators against analytical references.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ivi::analytics::{laplace_u, variance_swap};
use ivi::harness::config::{CaseSpec, ExperimentConfig, Quantity};
use ivi::harness::{builtin_case, run_convergence, run_smile, CASE_IDS};
use ivi::ivi::phi1;
use ivi::{CirParams, PathSimulator, TimeGrid, VarianceScheme};

#[test]
fn one_step_variance_swap_case1_at_full_scale() {
    let p = builtin_case(1).unwrap().cir;
    let grid = TimeGrid::uniform(1.0, 1).unwrap();
    let sim = PathSimulator::variance(&p, &grid, VarianceScheme::Ivi).unwrap();
    let e = sim
        .estimate_with(2_000_000, 101, 1, |s, out| out[0] = s.u_total)
        .unwrap();
    let exact = variance_swap(1.0, &p);
    assert!(
        e[0].within(exact, 3.0),
        "{} vs {exact} (SE {})",
        e[0].mean,
        e[0].std_error
    );
}

#[test]
fn first_moments_exact_for_random_parameters_and_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 0..12 {
        let p = CirParams::new(
            0.3 * rng.random::<f64>(),
            rng.random::<f64>(),
            -10.0 + 11.0 * rng.random::<f64>(),
            0.1 + 3.0 * rng.random::<f64>(),
        )
        .unwrap();
        let t = 0.2 + 2.0 * rng.random::<f64>();
        let n = 1 + (k % 4) * 3;
        let grid = TimeGrid::uniform(t, n).unwrap();
        let sim = PathSimulator::variance(&p, &grid, VarianceScheme::Ivi).unwrap();
        let e = sim
            .estimate_with(100_000, 200 + k as u64, 3, |s, out| {
                out[0] = s.u_total;
                out[1] = s.z_total;
                out[2] = s.v_final;
            })
            .unwrap();
        let mean_v = p.v0 * (p.b * t).exp() + p.a * phi1(p.b, t);
        for (est, r) in e.iter().zip([variance_swap(t, &p), 0.0, mean_v]) {
            assert!(
                est.within(r, 4.0),
                "set {k} {p:?}, n={n}: {} vs {r} (SE {})",
                est.mean,
                est.std_error
            );
        }
    }
}

#[test]
fn ivi_and_qe_converge_for_laplace_at_64_steps() {
    let grid = TimeGrid::uniform(1.0, 64).unwrap();
    for id in CASE_IDS {
        let p = builtin_case(id).unwrap().cir;
        let exact = laplace_u(1.0, 1.0, p.v0, &p).unwrap();
        for scheme in [VarianceScheme::Ivi, VarianceScheme::Qe(Default::default())] {
            let sim = PathSimulator::variance(&p, &grid, scheme).unwrap();
            let e = sim
                .estimate_with(200_000, 41, 1, |s, out| out[0] = (-s.u_total).exp())
                .unwrap();
            assert!(
                e[0].within(exact, 3.0),
                "case {id} {scheme}: {} vs {exact} (SE {})",
                e[0].mean,
                e[0].std_error
            );
        }
    }
}

#[test]
fn harness_records_track_analytical_references() {
    let cfg = ExperimentConfig {
        case: CaseSpec::Builtin(2),
        schemes: vec![VarianceScheme::Ivi],
        quantities: vec![Quantity::VarianceSwap, Quantity::Laplace { q: 2.0 }],
        steps: vec![1, 8],
        n_paths: 200_000,
        path_counts: vec![],
        seed: 8,
        maturity: 2.0,
        output: None,
    };
    let report = run_convergence(&cfg).unwrap();
    let (swaps, laplace): (Vec<_>, Vec<_>) = report
        .records
        .iter()
        .partition(|r| r.quantity == "variance_swap");
    for r in &swaps {
        assert!(r.abs_error <= 3.0 * r.std_error, "{r:?}");
    }
    assert_eq!(laplace.len(), 2);
    assert!(laplace[1].abs_error < laplace[0].abs_error, "{laplace:?}");
}

#[test]
fn smile_errors_shrink_with_steps() {
    // Reported rather than asserted strictly: the slice MAE at 15 steps is
    // compared to the one-step MAE with a margin.
    for id in CASE_IDS {
        let maturity = if id == 3 { 10.0 } else { 1.0 };
        let cfg = ExperimentConfig {
            case: CaseSpec::Builtin(id),
            schemes: vec![VarianceScheme::Ivi],
            quantities: vec![Quantity::IvSlice {
                strikes: vec![0.8, 0.9, 1.0, 1.1, 1.2],
            }],
            steps: vec![1, 15],
            n_paths: 100_000,
            path_counts: vec![],
            seed: 12,
            maturity,
            output: None,
        };
        let report = run_smile(&cfg).unwrap();
        let mae: Vec<_> = report
            .records
            .iter()
            .filter(|r| r.quantity.starts_with("iv_mae"))
            .map(|r| r.estimate)
            .collect();
        println!(
            "case {id}: slice MAE n=1 {:.2e}, n=15 {:.2e}",
            mae[0], mae[1]
        );
        assert!(mae.iter().all(|m| m.is_finite()));
        assert!(mae[1] <= mae[0] + 2e-3, "case {id}: {mae:?}");
    }
}

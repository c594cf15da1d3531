use loaded_mkdv::solutions::{presets, LoadedWave};
use loaded_mkdv::verifier::{
    convergence_order, residual, residual_with_cells, simulate_mol, stencil, EvalFailure, Field,
    Grid, MolConfig, MolWindow, Perturbed, VerifyError, WaveLoading,
};
use proptest::prelude::*;

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

fn poly_derivative(c: &[f64], order: usize, x: f64) -> f64 {
    let mut d: Vec<f64> = c.to_vec();
    for _ in 0..order {
        d = d.iter().enumerate().skip(1).map(|(j, a)| j as f64 * a).collect();
    }
    poly(&d, x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn first_derivative_stencil_is_exact_to_degree_four(
        c in prop::collection::vec(-1.0f64..1.0, 5),
        x in -1.0f64..1.0,
        h in 0.05f64..0.5,
    ) {
        let f: [f64; 5] = std::array::from_fn(|i| poly(&c, x + (i as f64 - 2.0) * h));
        let want = poly_derivative(&c, 1, x);
        prop_assert!((stencil::d1(&f, h) - want).abs() <= 1e-10);
    }

    #[test]
    fn third_derivative_stencil_is_exact_to_degree_six(
        c in prop::collection::vec(-1.0f64..1.0, 7),
        x in -1.0f64..1.0,
        h in 0.05f64..0.5,
    ) {
        let f: [f64; 7] = std::array::from_fn(|i| poly(&c, x + (i as f64 - 3.0) * h));
        let want = poly_derivative(&c, 3, x);
        prop_assert!((stencil::d3(&f, h) - want).abs() <= 1e-10 / h.powi(3).min(1.0));
    }
}

fn zero(_x: f64, _t: f64) -> f64 {
    0.0
}

#[test]
fn zero_field_has_exactly_zero_residual_for_any_loading() {
    let grid = Grid::new(-3.0, 2.0, 41, 0.0, 1.0, 37).unwrap();
    let loadings: [&(dyn Fn(f64) -> f64 + Sync); 3] =
        [&|_t| 0.0, &|t: f64| 1e6 * t.sin(), &|t: f64| (t * 17.0).exp()];
    for load in loadings {
        let rep = residual(&zero, &load, &grid).unwrap();
        assert_eq!(rep.max_abs, 0.0);
        assert_eq!(rep.l2, 0.0);
        assert_eq!(rep.excluded_pole_cells, 0);
        assert!(rep.included_cells > 0);
    }
}

#[test]
fn residual_is_translation_covariant() {
    let wave = presets::figure_wave(1).unwrap();
    let load = WaveLoading::derived(&wave);
    let grid = Grid::new(-5.0, 5.0, 201, 0.0, 0.5, 201).unwrap();
    let base = residual(&wave, &load, &grid).unwrap();
    let delta = 0.75;
    let moved = |x: f64, t: f64| wave.value(x - delta, t).unwrap();
    let shifted = residual(&moved, &load, &grid.shifted(delta)).unwrap();
    assert!((base.max_abs - shifted.max_abs).abs() <= 1e-9 * base.max_abs.max(1e-12) + 1e-12);
}

#[test]
fn constant_perturbation_is_detected() {
    let wave = presets::figure_wave(1).unwrap();
    let load = WaveLoading::derived(&wave);
    let grid = Grid::new(-5.0, 5.0, 401, 0.0, 0.5, 401).unwrap();
    let exact = residual(&wave, &load, &grid).unwrap();
    let bumped = Perturbed {
        inner: &wave,
        offset: 0.01,
    };
    let rep = residual(&bumped, &load, &grid).unwrap();
    assert!(rep.max_abs >= 1e-3);
    assert!(rep.max_abs > 100.0 * exact.max_abs);
}

#[test]
fn convergence_needs_three_levels() {
    let grid = Grid::new(0.0, 1.0, 32, 0.0, 1.0, 32).unwrap();
    let f = |x: f64, t: f64| (x + t).sin();
    assert_eq!(
        convergence_order(&f, &|_t| 0.0, &grid, 2).unwrap_err(),
        VerifyError::InsufficientRefinements(2)
    );
}

/// A solution of the plain mKdV equation only as a test field: the order
/// estimate reflects the stencils, not the equation.
#[test]
fn order_of_a_smooth_non_solution_is_zero() {
    let grid = Grid::new(0.0, 1.0, 33, 0.0, 1.0, 33).unwrap();
    let f = |x: f64, t: f64| (x + 2.0 * t).sin();
    let study = convergence_order(&f, &|_t| 0.0, &grid, 3).unwrap();
    assert!(study.order.abs() < 0.1);
}

#[test]
fn pole_cells_are_excluded_and_counted() {
    let wave = presets::figure_wave(3).unwrap();
    let load = WaveLoading::derived(&wave);
    // The pole x = −(4t + t² + 3t³) crosses this window early on.
    let grid = Grid::new(-1.0, 3.0, 201, 0.0, 0.05, 41).unwrap();
    let rep = residual_with_cells(&wave, &load, &grid).unwrap();
    assert!(rep.excluded_pole_cells > 0);
    let cells = rep.cells.as_ref().unwrap();
    for c in cells {
        let pole = -(4.0 * c.t + c.t * c.t + 3.0 * c.t.powi(3));
        assert!((c.x - pole).abs() > 3.0 * grid.hx());
    }
    let csv = rep.to_csv().unwrap();
    assert!(csv.starts_with("x,t,q,residual\n"));
    assert_eq!(csv.lines().count(), cells.len() + 1);
}

#[test]
fn too_many_poles_is_an_error() {
    let wave = presets::figure_wave(2).unwrap();
    let load = WaveLoading::derived(&wave);
    let grid = Grid::new(-5.0, 5.0, 101, 0.0, 1.0, 101).unwrap();
    assert!(matches!(
        residual(&wave, &load, &grid),
        Err(VerifyError::TooManyPoles { .. })
    ));
}

struct Failing;

impl Field for Failing {
    fn value(&self, x: f64, _t: f64) -> Result<Option<f64>, EvalFailure> {
        if x > 0.5 {
            Err(EvalFailure("boom".into()))
        } else {
            Ok(Some(x))
        }
    }
}

#[test]
fn evaluation_failures_carry_coordinates() {
    let grid = Grid::new(0.0, 1.0, 21, 0.0, 1.0, 21).unwrap();
    match residual(&Failing, &|_t| 0.0, &grid) {
        Err(VerifyError::EvaluationFailure { message, .. }) => assert!(message.contains("boom")),
        other => panic!("unexpected {other:?}"),
    }
}

fn fig1() -> LoadedWave {
    presets::figure_wave(1).unwrap()
}

#[test]
fn mol_with_empty_interval_has_zero_deviation() {
    let wave = fig1();
    let window = MolWindow {
        x0: -8.0,
        x1: 8.0,
        nx: 129,
        t0: 0.2,
        t1: 0.2,
    };
    let rep = simulate_mol(&wave, &WaveLoading::derived(&wave), &window, &MolConfig::default()).unwrap();
    assert_eq!(rep.linf, 0.0);
    assert_eq!(rep.steps, 0);
}

#[test]
fn mol_time_error_is_fourth_order() {
    let wave = fig1();
    let load = WaveLoading::derived(&wave);
    let window = MolWindow {
        x0: -8.0,
        x1: 8.0,
        nx: 65,
        t0: 0.0,
        t1: 0.02,
    };
    let run = |ht: f64| {
        let cfg = MolConfig {
            ht: Some(ht),
            ..MolConfig::default()
        };
        simulate_mol(&wave, &load, &window, &cfg).unwrap().state.values
    };
    let bound = 0.2 * (16.0f64 / 64.0).powi(3);
    let (a, b, c) = (run(bound), run(bound / 2.0), run(bound / 4.0));
    let diff = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let (d1, d2) = (diff(&a, &b), diff(&b, &c));
    assert!(d1 / d2 > 12.0, "ratio {}", d1 / d2);
}

#[test]
fn mol_step_contract() {
    let wave = fig1();
    let load = WaveLoading::derived(&wave);
    let window = MolWindow {
        x0: -8.0,
        x1: 8.0,
        nx: 65,
        t0: 0.0,
        t1: 0.01,
    };
    let strict = MolConfig {
        ht: Some(1.0),
        strict: true,
        ..MolConfig::default()
    };
    assert!(matches!(
        simulate_mol(&wave, &load, &window, &strict),
        Err(VerifyError::StabilityViolation { .. })
    ));
    let lenient = MolConfig {
        ht: Some(1.0),
        ..MolConfig::default()
    };
    let rep = simulate_mol(&wave, &load, &window, &lenient).unwrap();
    assert!(rep.shrunk);
    assert!(rep.ht <= 0.2 * window.hx().powi(3));
}

#[test]
fn mol_reports_blow_up() {
    let wave = fig1();
    let load = WaveLoading::derived(&wave);
    let window = MolWindow {
        x0: -8.0,
        x1: 8.0,
        nx: 129,
        t0: 0.0,
        t1: 1.0,
    };
    let cfg = MolConfig {
        stability_factor: 5.0,
        ..MolConfig::default()
    };
    assert!(matches!(
        simulate_mol(&wave, &load, &window, &cfg),
        Err(VerifyError::Instability { .. })
    ));
}

#[test]
fn mol_rejects_poles_in_the_window() {
    let wave = presets::figure_wave(3).unwrap();
    let load = WaveLoading::derived(&wave);
    let window = MolWindow {
        x0: -1.0,
        x1: 1.0,
        nx: 64,
        t0: 0.0,
        t1: 0.01,
    };
    assert!(matches!(
        simulate_mol(&wave, &load, &window, &MolConfig::default()),
        Err(VerifyError::PoleInWindow { .. })
    ));
}

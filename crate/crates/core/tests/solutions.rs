use loaded_mkdv::expansion::Branch;
use loaded_mkdv::solutions::{
    classify, closed_form_available, closed_form_phase, eval_profile, integrate_phase,
    tailored_gamma_value, printed_loading, pole_distance, presets, GammaSpec, LoadedWave,
    PhaseMethod, SolutionError, SolutionFamily, WaveParams,
};
use proptest::prelude::*;

/// `(1/k)·Σ j·α_j·t^(j−1) − k²Δ/2`, written out term by term.
fn load_oracle(k: f64, delta: f64, alpha: &[f64], t: f64) -> f64 {
    let mut dp = 0.0;
    for (j, a) in alpha.iter().enumerate().skip(1) {
        dp += j as f64 * a * t.powi(j as i32 - 1);
    }
    dp / k - k * k * delta / 2.0
}

fn sample_times() -> Vec<f64> {
    (0..100).map(|i| i as f64 / 99.0).collect()
}

#[test]
fn loading_identities_hold_on_reference_sets() {
    for id in 1..=3u8 {
        let (p, g) = presets::figure(id).unwrap();
        let (_, alpha) = g.tailored_alpha().unwrap();
        let alpha = alpha.to_vec();
        let delta = if classify(&p) == SolutionFamily::Rational {
            0.0
        } else {
            p.lambda * p.lambda - 4.0 * p.mu
        };
        let wave = LoadedWave::new(p.clone(), g).unwrap();
        for t in sample_times() {
            let got = wave.loading(t).unwrap();
            let want = load_oracle(p.k, delta, &alpha, t);
            assert!((got - want).abs() <= 1e-11, "set {id}, t = {t}: {got} vs {want}");
        }
    }
}

#[test]
fn loading_identities_hold_away_from_unit_k() {
    let cases = [
        (WaveParams::new(0.5, 2.0, -1.0), SolutionFamily::Hyperbolic),
        (WaveParams::new(2.0, 3.0, 3.0), SolutionFamily::Trigonometric),
        (WaveParams::new(0.5, 2.0, 1.0).with_constants(0.0, 1.0), SolutionFamily::Rational),
    ];
    let alpha = vec![0.0, 1.0, 2.0];
    for (p, family) in cases {
        let g = GammaSpec::tailored(family, alpha.clone()).unwrap();
        let delta = if family == SolutionFamily::Rational { 0.0 } else { p.discriminant() };
        let wave = LoadedWave::new(p.clone(), g).unwrap();
        for t in sample_times() {
            let got = wave.loading(t).unwrap();
            let want = load_oracle(p.k, delta, &alpha, t);
            assert!((got - want).abs() <= 1e-11 * want.abs().max(1.0), "{family} t = {t}");
        }
    }
}

/// The printed coefficient agrees with the derived one only at k = 1 in the
/// trigonometric and rational cases.
#[test]
fn printed_loading_differs_from_derived_when_k_is_not_one() {
    let alpha = vec![0.0, 1.0, 2.0];
    let t = 0.3;
    for (p, family, differs) in [
        (WaveParams::new(0.5, 2.0, -1.0), SolutionFamily::Hyperbolic, false),
        (WaveParams::new(0.5, 3.0, 3.0), SolutionFamily::Trigonometric, true),
        (WaveParams::new(0.5, 2.0, 1.0).with_constants(0.0, 1.0), SolutionFamily::Rational, true),
        (WaveParams::new(1.0, 3.0, 3.0), SolutionFamily::Trigonometric, false),
    ] {
        let g = GammaSpec::tailored(family, alpha.clone()).unwrap();
        let wave = LoadedWave::new(p.clone(), g.clone()).unwrap();
        let derived = wave.loading(t).unwrap();
        let printed = printed_loading(&p, &g, t).unwrap();
        assert_eq!((derived - printed).abs() > 1e-9, differs, "{family} k = {}", p.k);
    }
}

fn profile_params() -> impl Strategy<Value = WaveParams> {
    (0.3f64..2.0, -3.0f64..3.0, -3.0f64..3.0, -2.0f64..2.0, -2.0f64..2.0, any::<bool>()).prop_map(
        |(k, lambda, mu, c1, c2, minus)| {
            let branch = if minus { Branch::Minus } else { Branch::Plus };
            WaveParams::new(k, lambda, mu).with_constants(c1, c2).with_branch(branch)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    /// With `q̂ = ±(k·G'/G + kλ/2)` the Riccati law for `G'/G` closes to
    /// `q̂' = ∓(q̂²/k − kΔ/4)`.
    #[test]
    fn profile_solves_its_riccati_equation(p in profile_params(), xi in -3.0f64..3.0) {
        prop_assume!(p.c1.abs() > 0.05 || p.c2.abs() > 0.05);
        let h = 1e-4;
        let dist = pole_distance(&p, xi).unwrap_or(f64::INFINITY);
        prop_assume!(dist > 0.2);
        let f = |x: f64| eval_profile(&p, x).unwrap();
        let q = f(xi);
        prop_assume!(q.abs() < 50.0);
        let dq = (f(xi - 2.0 * h) - 8.0 * f(xi - h) + 8.0 * f(xi + h) - f(xi + 2.0 * h)) / (12.0 * h);
        let delta = if classify(&p) == SolutionFamily::Rational { 0.0 } else { p.discriminant() };
        let rhs = -p.branch.signum() * (q * q / p.k - p.k * delta / 4.0);
        prop_assert!((dq - rhs).abs() <= 1e-6 * rhs.abs().max(1.0), "{} vs {}", dq, rhs);
    }

    /// Shifting α₀ (and Ω⁰ with it) by kδ translates the solution by −δ in x.
    #[test]
    fn translation_covariance(
        delta in -1.0f64..1.0,
        x in -3.0f64..3.0,
        t in 0.0f64..1.0,
        id in 1u8..=3,
    ) {
        let (p, g) = presets::figure(id).unwrap();
        let (family, alpha) = g.tailored_alpha().unwrap();
        let mut shifted_alpha = alpha.to_vec();
        shifted_alpha[0] += p.k * delta;
        let p2 = p.clone().with_omega0(shifted_alpha[0]);
        let g2 = GammaSpec::tailored(family, shifted_alpha).unwrap();
        let a = LoadedWave::new(p, g).unwrap().value(x + delta, t);
        let b = LoadedWave::new(p2, g2).unwrap().value(x, t);
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    /// With γ ≡ 0 the phase is pure drift and any Ω⁰ is admissible.
    #[test]
    fn unloaded_phase_is_linear(k in 0.2f64..2.0, lambda in -3.0f64..3.0, mu in -3.0f64..3.0, w0 in -2.0f64..2.0) {
        let p = WaveParams::new(k, lambda, mu).with_omega0(w0);
        let st = integrate_phase(&p, &GammaSpec::none(), 1.0, 1e-2).unwrap();
        prop_assert!((st.omega - (w0 + p.phase_drift())).abs() <= 1e-12 * (1.0 + st.omega.abs()));
    }
}

#[test]
fn custom_loading_reproduces_the_closed_form_numerically() {
    // The tailored rational loading P·P'/k² written out by hand, α₀ = 1.
    let p = WaveParams::new(1.0, 2.0, 1.0).with_constants(0.0, 1.0).with_omega0(1.0);
    let custom = GammaSpec::custom("(1 + 4*t + t^2 + 3*t^3)*(4 + 2*t + 9*t^2)").unwrap();
    let tailored = GammaSpec::TailoredRational {
        alpha: vec![1.0, 4.0, 1.0, 3.0],
    };
    let wave = LoadedWave::new(p.clone(), custom).unwrap();
    assert_eq!(wave.phase_method(), PhaseMethod::NumericOde);
    for t in [0.25, 0.5, 1.0] {
        let numeric = wave.integrate_phase(t, 1e-3).unwrap();
        let exact = closed_form_phase(&p, &tailored, t).unwrap();
        assert!((numeric.omega - exact).abs() < 1e-9, "t = {t}");
        assert!(numeric.tolerance < 1e-8);
    }
}

#[test]
fn progressive_phases_match_one_shot_integration() {
    let p = WaveParams::new(1.0, 2.0, -1.0).with_omega0(0.3);
    let wave = LoadedWave::new(p, GammaSpec::custom("0.2*cos(t)").unwrap())
        .unwrap()
        .with_phase_dt(1e-3);
    let times = [0.0, 0.1, 0.35, 0.5, 1.0];
    let progressive = wave.phases(&times).unwrap();
    for (t, w) in times.iter().zip(&progressive) {
        let direct = wave.phase(*t).unwrap();
        assert!((w - direct).abs() < 1e-12, "t = {t}");
    }
}

#[test]
fn closed_form_needs_the_tailored_configuration() {
    let (p, g) = presets::figure(1).unwrap();
    assert!(closed_form_available(&p, &g));
    assert!(!closed_form_available(&p.clone().with_constants(1.0, 0.5), &g));
    assert!(!closed_form_available(&p.clone().with_branch(Branch::Minus), &g));
    let (p3, g3) = presets::figure(3).unwrap();
    assert!(!closed_form_available(&p3.clone().with_constants(1.0, 1.0), &g3));
    assert!(matches!(
        LoadedWave::new(p.clone().with_omega0(0.5), g.clone()),
        Err(SolutionError::OmegaMismatch { .. })
    ));
    let wrong = GammaSpec::TailoredRational {
        alpha: vec![0.0, 1.0],
    };
    assert!(matches!(
        LoadedWave::new(p, wrong),
        Err(SolutionError::FamilyMismatch { .. })
    ));
}

#[test]
fn tailored_gamma_formulas_at_sample_points() {
    // Hyperbolic set: Δ = 8, P = t + 2t², P' = 1 + 4t.
    let (p, g) = presets::figure(1).unwrap();
    let t = 0.5;
    let (pp, dp) = (t + 2.0 * t * t, 1.0 + 4.0 * t);
    let root = 8f64.sqrt();
    let want = (dp - 4.0) * (2.0 / root) / (root / 2.0 * pp).tanh();
    assert!((tailored_gamma_value(&p, &g, t).unwrap() - want).abs() < 1e-12);
    // Trigonometric set: 4μ − λ² = 3.
    let (p, g) = presets::figure(2).unwrap();
    let root = 3f64.sqrt();
    let want = -(dp + 1.5) * (2.0 / root) / (root / 2.0 * pp).tan();
    assert!((tailored_gamma_value(&p, &g, t).unwrap() - want).abs() < 1e-12);
}

#[test]
fn figure_values_at_reference_points() {
    let w1 = presets::figure_wave(1).unwrap();
    assert_eq!(w1.value(0.0, 0.0).unwrap(), 0.0);
    // q = √2·tanh(√2·(x + t + 2t²))
    let want = 2f64.sqrt() * (2f64.sqrt() * (0.3 + 0.5 + 0.5)).tanh();
    assert!((w1.value(0.3, 0.5).unwrap() - want).abs() < 1e-14);
    // q = −(√3/2)·tan((√3/2)·(x + t + 2t²))
    let w2 = presets::figure_wave(2).unwrap();
    let s = 3f64.sqrt() / 2.0;
    let want = -s * (s * (0.2 + 0.25 + 0.125)).tan();
    assert!((w2.value(0.2, 0.25).unwrap() - want).abs() < 1e-14);
    // q = 1/(x + 4t + t² + 3t³)
    let w3 = presets::figure_wave(3).unwrap();
    assert_eq!(w3.value(1.0, 0.0).unwrap(), 1.0);
    assert!((w3.value(2.0, 1.0).unwrap() - 0.1).abs() < 1e-15);
}

use std::f64::consts::{PI, SQRT_2};

use proptest::prelude::*;
use sbhe_core::basis::SpectralField;
use sbhe_core::nonlinear::{
    burgers_galerkin, burgers_galerkin_fast, burgers_pairing_bound, cubic_galerkin,
    monotonicity_gap, InitialCondition, ModelParams,
};

fn field(
    modes: impl Into<prop::collection::SizeRange>,
    amp: f64,
) -> impl Strategy<Value = SpectralField> {
    prop::collection::vec(-amp..amp, modes).prop_map(|c| SpectralField::new(c).unwrap())
}

fn params(nu: f64, theta: f64) -> ModelParams {
    ModelParams::new(nu, theta, 1.0, InitialCondition::SinePi).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn burgers_pairing_below_bound(u in field(1..=48, 3.0)) {
        let b = burgers_galerkin(&u).unwrap();
        let pairing = b.dot(&u).unwrap();
        let bound = burgers_pairing_bound(&u).unwrap();
        prop_assert!(pairing <= bound + 1e-12 * bound.max(1.0));
    }

    #[test]
    fn exact_and_fast_paths_agree(u in prop_oneof![field(4, 2.0), field(16, 2.0), field(64, 2.0)]) {
        let e = burgers_galerkin(&u).unwrap();
        let f = burgers_galerkin_fast(&u).unwrap();
        for (a, b) in e.coeffs().iter().zip(f.coeffs()) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn galerkin_consistency(u in field(1..=32, 2.0)) {
        let n = u.n_modes();
        let wide = u.zero_padded(2 * n).unwrap();
        let narrow = burgers_galerkin(&u).unwrap();
        let truncated = burgers_galerkin(&wide).unwrap().truncate(n).unwrap();
        for (a, b) in narrow.coeffs().iter().zip(truncated.coeffs()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn monotonicity_gap_nonpositive(
        setting in prop::sample::select(vec![(1.0, 0.5), (0.2, 0.1), (5.0, 0.9)]),
        pair in (1usize..=12).prop_flat_map(|n| (field(n, 4.0), field(n, 4.0))),
    ) {
        let p = params(setting.0, setting.1);
        prop_assert!(monotonicity_gap(&pair.0, &pair.1, &p).unwrap() <= 0.0);
    }
}

#[test]
fn upper_modes_break_galerkin_consistency() {
    let u = SpectralField::new(vec![1.0, 0.0, 0.7, 0.0]).unwrap();
    let narrow = burgers_galerkin(&u.truncate(2).unwrap()).unwrap();
    let truncated = burgers_galerkin(&u).unwrap().truncate(2).unwrap();
    let diff = narrow.sub(&truncated).unwrap().norm_l2();
    assert!(diff > 0.1, "{diff}");
}

#[test]
fn cubic_growth_along_first_mode() {
    let p = ModelParams::reference();
    let (nu, theta) = (p.nu, p.theta);
    let mut deviations = Vec::new();
    for c in [10.0, 100.0] {
        let u = SpectralField::basis_function(1, 8)
            .unwrap()
            .scaled(c)
            .unwrap();
        let c1 = cubic_galerkin(&u, &p).unwrap().coeff(1);
        // ⟨φ_1³, φ_1⟩ = 3/2 and ⟨φ_1², φ_1⟩ = 8√2/(3π)
        let closed = -nu * (1.5 * c * c * c + theta * c)
            + nu * (1.0 + theta) * 8.0 * SQRT_2 / (3.0 * PI) * c * c;
        assert!(
            (c1 - closed).abs() <= 1e-12 * closed.abs(),
            "c={c}: {c1} vs {closed}"
        );
        deviations.push((c1 / (-1.5 * nu * c * c * c) - 1.0).abs());
    }
    // the quadratic term is a 12% correction at c = 10 and decays like 1/c
    assert!(deviations[1] < 0.05, "{deviations:?}");
    assert!(
        (deviations[0] / deviations[1] - 10.0).abs() < 0.5,
        "{deviations:?}"
    );
}

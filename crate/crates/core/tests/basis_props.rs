use proptest::prelude::*;
use sbhe_core::basis::{
    analyze, eigenvalue, smoothing_bound, smoothing_supremum, synthesize, FastSineTransform,
    SineTransform, SpectralField,
};

fn field(max_modes: usize) -> impl Strategy<Value = SpectralField> {
    prop::collection::vec(-2.0f64..2.0, 1..=max_modes).prop_map(|c| SpectralField::new(c).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval(u in field(40), extra in 0usize..20) {
        let n = u.n_modes();
        let g = 2 * n + 2 + extra;
        let direct: f64 = u.coeffs().iter().map(|a| a * a).sum();
        prop_assert_eq!(u.norm_l2(), direct.sqrt());
        let grid = synthesize(&u, g).unwrap();
        let quad = grid.values().iter().map(|v| v * v).sum::<f64>() / g as f64;
        prop_assert!((quad - direct).abs() < 1e-10 * direct.max(1.0));
    }

    #[test]
    fn round_trip(u in field(40), extra in 0usize..20) {
        let g = 2 * u.n_modes() + 2 + extra;
        let back = analyze(&synthesize(&u, g).unwrap(), u.n_modes()).unwrap();
        let scale = u.norm_l2().max(1e-300);
        for (a, b) in u.coeffs().iter().zip(back.coeffs()) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn fast_transform_agrees(u in field(40), extra in 0usize..40) {
        let g = 2 * u.n_modes() + 2 + extra;
        let direct = SineTransform::new(u.n_modes(), g).unwrap();
        let fast = FastSineTransform::new(u.n_modes(), g).unwrap();
        let (a, b) = (direct.synthesize(&u).unwrap(), fast.synthesize(&u).unwrap());
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() < 1e-12 * u.norm_l2().max(1.0) * (u.n_modes() as f64).sqrt());
        }
        let (p, q) = (direct.analyze(&a).unwrap(), fast.analyze(&a).unwrap());
        for (x, y) in p.coeffs().iter().zip(q.coeffs()) {
            prop_assert!((x - y).abs() < 1e-12 * u.norm_l2().max(1.0));
        }
    }

    #[test]
    fn semigroup_composition(u in field(64), s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let two = u.semigroup_apply(s).unwrap().semigroup_apply(t).unwrap();
        let one = u.semigroup_apply(s + t).unwrap();
        let diff = two.sub(&one).unwrap().norm_l2();
        prop_assert!(diff <= 1e-14 * u.norm_l2());
        // exp(−x) carries relative rounding of order x·ε, so coefficientwise the
        // tolerance scales with λ_k (s + t)
        for (k, (a, b)) in two.coeffs().iter().zip(one.coeffs()).enumerate() {
            let cond = (eigenvalue(k + 1).unwrap() * (s + t)).max(1.0);
            prop_assert!(a == b || rel(*a, *b) <= 1e-14 * cond || (a - b).abs() < 1e-300);
        }
    }

    #[test]
    fn truncation_bound(u in field(48)) {
        let big_n = u.n_modes();
        for alpha in [0.0, 0.25, 0.49] {
            let hnorm = u.norm_hdot(alpha).unwrap();
            for n in 1..big_n {
                let tail: f64 = u.coeffs()[n..].iter().map(|a| a * a).sum::<f64>().sqrt();
                let head = u.truncate(n).unwrap().zero_padded(big_n).unwrap();
                prop_assert_eq!(u.sub(&head).unwrap().norm_l2(), tail);
                let bound = eigenvalue(n + 1).unwrap().powf(-alpha / 2.0) * hnorm;
                prop_assert!(tail <= bound * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn smoothing_supremum_below_closed_form() {
    for gamma in [0.0, 0.25, 0.5, 1.0] {
        for t in [1e-3, 1e-2, 1e-1, 1.0] {
            let bound = smoothing_bound(gamma, t);
            for n in [1, 2, 7, 64, 512, 4096] {
                let s = smoothing_supremum(gamma, t, n).unwrap();
                assert!(
                    s <= bound * (1.0 + 1e-12),
                    "gamma={gamma} t={t} N={n}: {s} > {bound}"
                );
            }
        }
    }
}

#[test]
fn smoothing_supremum_matches_scan() {
    for gamma in [0.25, 0.5, 1.0] {
        for t in [1e-3, 1e-2, 1e-1, 1.0] {
            let n = 4096;
            let scan = (1..=n)
                .map(|k| {
                    let l = eigenvalue(k).unwrap();
                    l.powf(gamma) * (-t * l).exp()
                })
                .fold(0.0, f64::max);
            assert_eq!(smoothing_supremum(gamma, t, n).unwrap(), scan);
        }
    }
}

use proptest::prelude::*;
use sbhe_core::basis::{eigenvalue, SpectralField};
use sbhe_core::noise::{convolution_second_moment, sigma, NoiseSource, NoiseStream};

const SAMPLES: usize = 100_000;

fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_is_associative(seed in any::<u64>(), traj in 0u64..1000, j in 0usize..16, n in 1usize..40) {
        let s = NoiseStream::new(seed, traj, 64, 0.5).unwrap();
        let tau2 = 2.0 * s.fine_tau();
        let a = s.coarse_increment(2 * j, n, 2).unwrap();
        let b = s.coarse_increment(2 * j + 1, n, 2).unwrap();
        let direct = s.coarse_increment(j, n, 4).unwrap();
        for k in 0..n {
            let l = eigenvalue(k + 1).unwrap();
            let composed = (-tau2 * l).exp() * a.values()[k] + b.values()[k];
            // relative to the fine summands, which can nearly cancel
            let scale = (0..4)
                .map(|i| {
                    let f = s.coarse_increment(4 * j + i, n, 1).unwrap().values()[k];
                    (-((3 - i) as f64) * s.fine_tau() * l).exp() * f.abs()
                })
                .sum::<f64>()
                .max(1e-300);
            prop_assert!((composed - direct.values()[k]).abs() <= 1e-14 * scale);
        }
    }

    #[test]
    fn sigma_doubling(k in 1usize..512, tau in 1e-6f64..1.0) {
        let l = eigenvalue(k).unwrap();
        let d = sigma(k, 2.0 * tau).unwrap() - (1.0 + (-2.0 * tau * l).exp()) * sigma(k, tau).unwrap();
        prop_assert!(d.abs() <= 1e-14);
    }
}

#[test]
fn independent_across_modes_and_steps() {
    let s = NoiseStream::new(31, 0, 2 * SAMPLES, 1.0).unwrap();
    let (mut k1m0, mut k2m0, mut k1m1) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..SAMPLES {
        let z0 = s.standard_normals(2 * i, 2).unwrap();
        let z1 = s.standard_normals(2 * i + 1, 1).unwrap();
        k1m0.push(z0[0]);
        k2m0.push(z0[1]);
        k1m1.push(z1[0]);
    }
    let band = 3.0 / (SAMPLES as f64).sqrt();
    let across_modes = correlation(&k1m0, &k2m0);
    let across_steps = correlation(&k1m0, &k1m1);
    assert!(across_modes.abs() < band, "{across_modes}");
    assert!(across_steps.abs() < band, "{across_steps}");
}

#[test]
fn standard_normal_moments() {
    let s = NoiseStream::new(36, 0, SAMPLES / 4, 1.0).unwrap();
    let z: Vec<f64> = (0..SAMPLES / 4)
        .flat_map(|m| s.standard_normals(m, 4).unwrap())
        .collect();
    let n = z.len() as f64;
    let m1 = z.iter().sum::<f64>() / n;
    let m2 = z.iter().map(|x| x * x).sum::<f64>() / n;
    let m3 = z.iter().map(|x| x.powi(3)).sum::<f64>() / n;
    let m4 = z.iter().map(|x| x.powi(4)).sum::<f64>() / n;
    // standard errors of the sample moments of N(0,1): 1, √2, √15, √96 over √n
    let se = |v: f64| 3.0 * v.sqrt() / n.sqrt();
    assert!(m1.abs() < se(1.0), "{m1}");
    assert!((m2 - 1.0).abs() < se(2.0), "{m2}");
    assert!(m3.abs() < se(15.0), "{m3}");
    assert!((m4 - 3.0).abs() < se(96.0), "{m4}");
}

#[test]
fn trajectories_are_isolated() {
    let a = NoiseStream::new(33, 0, SAMPLES, 1.0).unwrap();
    let b = NoiseStream::new(33, 1, SAMPLES, 1.0).unwrap();
    let x: Vec<f64> = (0..SAMPLES)
        .map(|m| a.standard_normals(m, 1).unwrap()[0])
        .collect();
    let y: Vec<f64> = (0..SAMPLES)
        .map(|m| b.standard_normals(m, 1).unwrap()[0])
        .collect();
    let r = correlation(&x, &y);
    assert!(r.abs() < 3.0 / (SAMPLES as f64).sqrt(), "{r}");
}

#[test]
fn accumulated_convolution_second_moment() {
    let (n, m, horizon) = (16, 256, 1.0);
    let trajectories = 2000;
    let tau = horizon / m as f64;
    let samples: Vec<f64> = (0..trajectories)
        .map(|j| {
            let s = NoiseStream::new(34, j, m, horizon).unwrap();
            let mut o = SpectralField::zeros(n);
            for step in 0..m {
                let xi = SpectralField::new(s.fine_increment(step, n).unwrap().values().to_vec())
                    .unwrap();
                let decayed = o.semigroup_apply(tau).unwrap();
                o = SpectralField::new(
                    decayed
                        .coeffs()
                        .iter()
                        .zip(xi.coeffs())
                        .map(|(a, b)| a + b)
                        .collect(),
                )
                .unwrap();
            }
            o.norm_l2().powi(2)
        })
        .collect();
    let t = trajectories as f64;
    let mean = samples.iter().sum::<f64>() / t;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1.0)).sqrt();
    let target = convolution_second_moment(horizon, n);
    assert!(
        (mean - target).abs() < 3.0 * sd / t.sqrt(),
        "{mean} vs {target}"
    );
}

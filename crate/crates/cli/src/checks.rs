//! Property checks runnable from the command line.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbhe_core::basis::{
    analyze, eigenvalue, smoothing_bound, smoothing_supremum, synthesize, Discretization,
    FastSineTransform, SineTransform, SpectralField,
};
use sbhe_core::integrator::{simulate, DriftMode, SimulationOptions};
use sbhe_core::noise::{convolution_second_moment, sigma, NoiseSource, NoiseStream};
use sbhe_core::nonlinear::{
    burgers_galerkin, burgers_galerkin_fast, burgers_pairing_bound, cubic_galerkin,
    monotonicity_gap, InitialCondition, ModelParams,
};

use crate::config::{CheckGroup, Fault};

pub struct CheckContext {
    pub seed: u64,
    pub samples: usize,
    pub fault: Option<Fault>,
}

impl CheckContext {
    fn rng(&self, salt: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(salt);
        rng
    }

    /// The exact Burgers projection, possibly with the injected fault.
    fn burgers_exact(&self, u: &SpectralField) -> SpectralField {
        let b = burgers_galerkin(u).expect("finite field");
        match self.fault {
            Some(Fault::BurgersSign) => b.scaled(-1.0).expect("finite field"),
            None => b,
        }
    }
}

pub type CheckFn = fn(&CheckContext) -> Result<String, String>;

pub struct Check {
    pub group: CheckGroup,
    pub name: &'static str,
    pub run: CheckFn,
}

pub struct CheckOutcome {
    pub group: CheckGroup,
    pub name: &'static str,
    pub result: Result<String, String>,
}

pub fn group_name(g: CheckGroup) -> &'static str {
    match g {
        CheckGroup::Basis => "basis",
        CheckGroup::Nonlinear => "nonlinear",
        CheckGroup::Noise => "noise",
        CheckGroup::Integrator => "integrator",
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_field(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> SpectralField {
    SpectralField::new(
        (1..=n)
            .map(|k| amp * rng.random_range(-1.0..1.0) / k as f64)
            .collect(),
    )
    .expect("finite coefficients")
}

fn parseval(ctx: &CheckContext) -> Result<String, String> {
    let mut rng = ctx.rng(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=48);
        let u = random_field(&mut rng, n, 2.0);
        let g = 2 * n + 2 + rng.random_range(0..16);
        let grid = synthesize(&u, g).map_err(|e| e.to_string())?;
        let quad = grid.values().iter().map(|v| v * v).sum::<f64>() / g as f64;
        worst = worst.max((quad - u.norm_l2().powi(2)).abs());
    }
    ensure(worst <= 1e-10, || format!("quadrature off by {worst:e}"))?;
    Ok(format!("200 fields, max deviation {worst:.1e}"))
}

fn round_trip(ctx: &CheckContext) -> Result<String, String> {
    let mut rng = ctx.rng(2);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=48);
        let u = random_field(&mut rng, n, 2.0);
        let g = 2 * n + 2 + rng.random_range(0..16);
        let back = analyze(&synthesize(&u, g).unwrap(), n).map_err(|e| e.to_string())?;
        worst = worst.max(u.sub(&back).unwrap().norm_l2() / u.norm_l2().max(1e-300));
    }
    ensure(worst <= 1e-12, || {
        format!("relative round-trip error {worst:e}")
    })?;
    Ok(format!("200 fields, max relative error {worst:.1e}"))
}

fn fast_transform(ctx: &CheckContext) -> Result<String, String> {
    let mut rng = ctx.rng(3);
    let mut worst = 0.0f64;
    for n in [4, 16, 64, 256] {
        let u = random_field(&mut rng, n, 2.0);
        let g = 4 * n;
        let a = SineTransform::new(n, g).unwrap().synthesize(&u).unwrap();
        let b = FastSineTransform::new(n, g)
            .unwrap()
            .synthesize(&u)
            .unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            worst = worst.max((x - y).abs());
        }
    }
    ensure(worst <= 1e-12, || {
        format!("direct and FFT transforms differ by {worst:e}")
    })?;
    Ok(format!("direct vs FFT synthesis {worst:.1e}"))
}

fn semigroup(ctx: &CheckContext) -> Result<String, String> {
    let mut rng = ctx.rng(4);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let u = random_field(&mut rng, 64, 2.0);
        let (s, t) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        let a = u.semigroup_apply(s).unwrap().semigroup_apply(t).unwrap();
        let b = u.semigroup_apply(s + t).unwrap();
        worst = worst.max(a.sub(&b).unwrap().norm_l2() / u.norm_l2());
    }
    ensure(worst <= 1e-14, || format!("composition off by {worst:e}"))?;
    Ok(format!("S(t)S(s) = S(s+t) to {worst:.1e}"))
}

fn smoothing(_: &CheckContext) -> Result<String, String> {
    let mut cases = 0;
    for gamma in [0.0, 0.25, 0.5, 1.0] {
        for t in [1e-3, 1e-2, 1e-1, 1.0] {
            let bound = smoothing_bound(gamma, t);
            for n in [1, 16, 256, 4096] {
                let s = smoothing_supremum(gamma, t, n).unwrap();
                ensure(s <= bound * (1.0 + 1e-12), || {
                    format!("gamma={gamma}, t={t}, N={n}: {s} > {bound}")
                })?;
                cases += 1;
            }
        }
    }
    Ok(format!(
        "{cases} (gamma, t, N) cases below the closed-form bound"
    ))
}

fn truncation(ctx: &CheckContext) -> Result<String, String> {
    let mut rng = ctx.rng(5);
    for _ in 0..100 {
        let u = random_field(&mut rng, 32, 2.0);
        for alpha in [0.0, 0.25, 0.49] {
            let h = u.norm_hdot(alpha).unwrap();
            for n in 1..32 {
                let tail = u.coeffs()[n..].iter().map(|a| a * a).sum::<f64>().sqrt();
                let bound = eigenvalue(n + 1).unwrap().powf(-alpha / 2.0) * h;
                ensure(tail <= bound * (1.0 + 1e-12), || {
                    format!("n={n}, alpha={alpha}: {tail} > {bound}")
                })?;
            }
        }
    }
    Ok("100 fields, all n < 32, alpha in {0, 0.25, 0.49}".into())
}

fn burgers_first_mode(ctx: &CheckContext) -> Result<String, String> {
    let phi1 = SpectralField::basis_function(1, 16).unwrap();
    let b = ctx.burgers_exact(&phi1);
    for k in 1..=16 {
        let target = if k == 2 { PI / SQRT_2 } else { 0.0 };
        ensure((b.coeff(k) - target).abs() <= 1e-12, || {
            format!("mode {k}: {} instead of {target}", b.coeff(k))
        })?;
    }
    Ok("B_N(phi_1) = (pi/sqrt 2) phi_2".into())
}

fn exact_vs_fast(ctx: &CheckContext) -> Result<String, String> {
    let mut rng = ctx.rng(6);
    let mut worst = 0.0f64;
    for n in [4, 16, 64] {
        for _ in 0..100 {
            let u = random_field(&mut rng, n, 1.5);
            let e = ctx.burgers_exact(&u);
            let f = burgers_galerkin_fast(&u).unwrap();
            worst = worst.max(
                e.sub(&f)
                    .unwrap()
                    .coeffs()
                    .iter()
                    .fold(0.0, |m, x| m.max(x.abs())),
            );
        }
    }
    ensure(worst <= 1e-10, || {
        format!("EXACT and FAST paths differ by {worst:e}")
    })?;
    Ok(format!(
        "N in {{4, 16, 64}}, 300 fields, max difference {worst:.1e}"
    ))
}

// Midpoint rule without the grid pipeline.
fn cubic_oracle(u: &SpectralField, params: &ModelParams, points: usize) -> Vec<f64> {
    let n = u.n_modes();
    let h = 1.0 / points as f64;
    let mut acc = vec![0.0; n];
    let mut sines = vec![0.0; n];
    for i in 0..points {
        let x = (i as f64 + 0.5) * h;
        for (k, s) in sines.iter_mut().enumerate() {
            *s = ((k + 1) as f64 * PI * x).sin();
        }
        let v = SQRT_2
            * u.coeffs()
                .iter()
                .zip(&sines)
                .map(|(a, s)| a * s)
                .sum::<f64>();
        let f = params.reaction(v);
        for (a, s) in acc.iter_mut().zip(&sines) {
            *a += f * s;
        }
    }
    acc.iter().map(|a| SQRT_2 * h * a).collect()
}

fn cubic_vs_quadrature(ctx: &CheckContext) -> Result<String, String> {
    let params = ModelParams::reference();
    let mut rng = ctx.rng(7);
    let mut worst = 0.0f64;
    for n in [4, 8] {
        let u = random_field(&mut rng, n, 1.5);
        let c = cubic_galerkin(&u, &params).unwrap();
        for (a, b) in c.coeffs().iter().zip(cubic_oracle(&u, &params, 1_000_000)) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-8, || {
        format!("cubic projection vs quadrature {worst:e}")
    })?;
    Ok(format!("10^6-point oracle, max difference {worst:.1e}"))
}

fn pairing(ctx: &CheckContext) -> Result<String, String> {
    let mut rng = ctx.rng(8);
    for _ in 0..500 {
        let n = rng.random_range(1..=32);
        let u = random_field(&mut rng, n, 3.0);
        let p = ctx.burgers_exact(&u).dot(&u).unwrap();
        let bound = burgers_pairing_bound(&u).unwrap();
        ensure(p <= bound + 1e-12 * bound.max(1.0), || {
            format!("pairing {p} above bound {bound}")
        })?;
    }
    Ok("500 fields within the pairing bound".into())
}

fn monotonicity(ctx: &CheckContext) -> Result<String, String> {
    let mut rng = ctx.rng(9);
    let mut worst = f64::NEG_INFINITY;
    for (nu, theta) in [(1.0, 0.5), (0.2, 0.1), (5.0, 0.9)] {
        let params = ModelParams::new(nu, theta, 1.0, InitialCondition::SinePi).unwrap();
        for _ in 0..2000 {
            let n = rng.random_range(1..=16);
            let amp = 10f64.powf(rng.random_range(-1.0..1.0));
            let (u, v) = (
                random_field(&mut rng, n, amp),
                random_field(&mut rng, n, amp),
            );
            let gap = monotonicity_gap(&u, &v, &params).unwrap();
            ensure(gap <= 0.0, || {
                format!("gap {gap:e} at nu={nu}, theta={theta}")
            })?;
            worst = worst.max(gap);
        }
    }
    Ok(format!("6000 pairs, largest gap {worst:.2e}"))
}

fn noise_variance(ctx: &CheckContext) -> Result<String, String> {
    let tau = 0.01;
    let n = ctx.samples;
    let s = NoiseStream::new(ctx.seed, 0, n, tau * n as f64).map_err(|e| e.to_string())?;
    let (mut m2, mut m4) = (0.0, 0.0);
    for m in 0..n {
        let x = s.fine_increment(m, 1).unwrap().values()[0];
        m2 += x * x;
        m4 += x.powi(4);
    }
    let nf = n as f64;
    let (m2, m4) = (m2 / nf, m4 / nf);
    let se = ((m4 - m2 * m2) / nf).sqrt();
    let target = sigma(1, tau).unwrap();
    ensure((m2 - target).abs() < 3.0 * se, || {
        format!("variance {m2:.7} vs {target:.7} (3 se = {:.1e})", 3.0 * se)
    })?;
    Ok(format!(
        "{n} samples: {m2:.7} vs {target:.7} +- {:.1e}",
        3.0 * se
    ))
}

fn noise_composition(ctx: &CheckContext) -> Result<String, String> {
    let mut worst = 0.0f64;
    for tau in [1e-4, 1e-3, 1e-2, 1e-1] {
        for k in 1..=128 {
            let l = eigenvalue(k).unwrap();
            let d = sigma(k, 2.0 * tau).unwrap()
                - (1.0 + (-2.0 * tau * l).exp()) * sigma(k, tau).unwrap();
            worst = worst.max(d.abs());
        }
    }
    ensure(worst <= 1e-14, || {
        format!("variance doubling identity off by {worst:e}")
    })?;
    let s = NoiseStream::new(ctx.seed, 1, 64, 1.0).unwrap();
    let mut assoc = 0.0f64;
    for j in 0..16 {
        let (a, b) = (
            s.coarse_increment(2 * j, 24, 2).unwrap(),
            s.coarse_increment(2 * j + 1, 24, 2).unwrap(),
        );
        let direct = s.coarse_increment(j, 24, 4).unwrap();
        for k in 0..24 {
            let c = (-2.0 * s.fine_tau() * eigenvalue(k + 1).unwrap()).exp() * a.values()[k]
                + b.values()[k];
            assoc = assoc.max((c - direct.values()[k]).abs() / c.abs().max(1e-300));
        }
    }
    ensure(assoc <= 1e-14, || {
        format!("coarse composition not associative: {assoc:e}")
    })?;
    Ok(format!("doubling {worst:.1e}, associativity {assoc:.1e}"))
}

fn noise_correlation(ctx: &CheckContext) -> Result<String, String> {
    let n = ctx.samples;
    let a = NoiseStream::new(ctx.seed, 2, 2 * n, 1.0).unwrap();
    let b = NoiseStream::new(ctx.seed, 3, 2 * n, 1.0).unwrap();
    let mut pairs = [(0.0, 0.0, 0.0); 3];
    let update = |acc: &mut (f64, f64, f64), x: f64, y: f64| {
        acc.0 += x * y;
        acc.1 += x * x;
        acc.2 += y * y;
    };
    for i in 0..n {
        let z0 = a.standard_normals(2 * i, 2).unwrap();
        let z1 = a.standard_normals(2 * i + 1, 1).unwrap();
        let w = b.standard_normals(2 * i, 1).unwrap();
        update(&mut pairs[0], z0[0], z0[1]);
        update(&mut pairs[1], z0[0], z1[0]);
        update(&mut pairs[2], z0[0], w[0]);
    }
    let band = 3.0 / (n as f64).sqrt();
    let r: Vec<f64> = pairs
        .iter()
        .map(|(xy, xx, yy)| xy / (xx * yy).sqrt())
        .collect();
    for (label, v) in ["modes", "steps", "trajectories"].iter().zip(&r) {
        ensure(v.abs() < band, || {
            format!("correlation across {label} {v:.4} outside +-{band:.4}")
        })?;
    }
    Ok(format!(
        "correlations {:.4}/{:.4}/{:.4} within +-{band:.4}",
        r[0], r[1], r[2]
    ))
}

fn convolution_moment(ctx: &CheckContext) -> Result<String, String> {
    let params = ModelParams {
        initial_condition: InitialCondition::Coefficients(vec![0.0]),
        ..ModelParams::reference()
    };
    let disc = Discretization::new(16, 256, 1.0).unwrap();
    let opts = SimulationOptions {
        drift: DriftMode::Disabled,
        ..Default::default()
    };
    let trajectories = (ctx.samples / 50).clamp(200, 20_000);
    let norms: Vec<f64> = (0..trajectories as u64)
        .map(|j| {
            let s = NoiseStream::new(ctx.seed, 10 + j, 256, 1.0).unwrap();
            simulate(&params, &disc, &s, 1, &opts)
                .unwrap()
                .final_state
                .norm_l2()
                .powi(2)
        })
        .collect();
    let t = trajectories as f64;
    let mean = norms.iter().sum::<f64>() / t;
    let sd = (norms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1.0)).sqrt();
    let target = convolution_second_moment(1.0, 16);
    let band = 3.0 * sd / t.sqrt();
    ensure((mean - target).abs() < band, || {
        format!("E|O|^2 {mean:.5} vs {target:.5} +- {band:.1e}")
    })?;
    Ok(format!(
        "{trajectories} paths: E|O_1|^2 {mean:.5} vs {target:.5} +- {band:.1e}"
    ))
}

fn linear_regime(ctx: &CheckContext) -> Result<String, String> {
    let (n, m) = (16, 1024);
    let params = ModelParams::reference();
    let disc = Discretization::new(n, m, 1.0).unwrap();
    let s = NoiseStream::new(ctx.seed, 4, m, 1.0).unwrap();
    let opts = SimulationOptions {
        drift: DriftMode::Disabled,
        ..Default::default()
    };
    let sim = simulate(&params, &disc, &s, 1, &opts).map_err(|e| e.to_string())?;
    let mut a = params.initial_condition.project(n).unwrap().into_coeffs();
    for j in 0..m {
        let xi = s.fine_increment(j, n).unwrap();
        for (k, ak) in a.iter_mut().enumerate() {
            *ak = (-disc.tau() * eigenvalue(k + 1).unwrap()).exp() * *ak + xi.values()[k];
        }
    }
    let dev = a
        .iter()
        .zip(sim.final_state.coeffs())
        .fold(0.0f64, |d, (x, y)| d.max((x - y).abs()));
    ensure(dev <= 1e-13, || format!("OU recursion differs by {dev:e}"))?;
    Ok(format!("1024 steps, max deviation {dev:.1e}"))
}

fn determinism(ctx: &CheckContext) -> Result<String, String> {
    let params = ModelParams::reference();
    let disc = Discretization::new(16, 256, 1.0).unwrap();
    let s = NoiseStream::new(ctx.seed, 5, 256, 1.0).unwrap();
    let opts = SimulationOptions::default();
    let a = simulate(&params, &disc, &s, 1, &opts).map_err(|e| e.to_string())?;
    let b = simulate(&params, &disc, &s, 1, &opts).map_err(|e| e.to_string())?;
    ensure(a == b, || "two runs with the same stream differ".into())?;
    Ok("repeat run bit-identical".into())
}

fn taming(ctx: &CheckContext) -> Result<String, String> {
    let params = ModelParams::reference();
    let disc = Discretization::new(16, 256, 1.0).unwrap();
    let opts = SimulationOptions {
        probe: true,
        ..Default::default()
    };
    let mut least = f64::INFINITY;
    for j in 0..20 {
        let s = NoiseStream::new(ctx.seed, 100 + j, 256, 1.0).unwrap();
        let r = simulate(&params, &disc, &s, 1, &opts).map_err(|e| e.to_string())?;
        least = least.min(r.probes.unwrap().min_denominator);
    }
    ensure(least >= 1.0, || {
        format!("taming denominator {least} below 1")
    })?;
    Ok(format!("smallest denominator {least:.4} over 20 paths"))
}

fn nesting(ctx: &CheckContext) -> Result<String, String> {
    let s = NoiseStream::new(ctx.seed, 6, 128, 1.0).unwrap();
    for m in [0, 31, 127] {
        let full = s.standard_normals(m, 32).unwrap();
        let half = s.standard_normals(m, 16).unwrap();
        ensure(full[..16] == half[..], || {
            format!("mode prefix differs at step {m}")
        })?;
    }
    for j in [0, 17, 63] {
        let coarse = s.coarse_increment(j, 8, 2).unwrap();
        let (a, b) = (
            s.fine_increment(2 * j, 8).unwrap(),
            s.fine_increment(2 * j + 1, 8).unwrap(),
        );
        for k in 0..8 {
            let c =
                (-s.fine_tau() * eigenvalue(k + 1).unwrap()).exp() * a.values()[k] + b.values()[k];
            ensure(c == coarse.values()[k], || {
                format!("coarse step {j}, mode {}", k + 1)
            })?;
        }
    }
    Ok("coarse increments are built from the fine Gaussians".into())
}

pub fn all_checks() -> Vec<Check> {
    use CheckGroup::*;
    let table: [(CheckGroup, &'static str, CheckFn); 19] = [
        (Basis, "parseval", parseval),
        (Basis, "round-trip", round_trip),
        (Basis, "fast-transform", fast_transform),
        (Basis, "semigroup-composition", semigroup),
        (Basis, "smoothing-suprema", smoothing),
        (Basis, "truncation-bound", truncation),
        (Nonlinear, "burgers-first-mode", burgers_first_mode),
        (Nonlinear, "exact-vs-fast", exact_vs_fast),
        (Nonlinear, "cubic-vs-quadrature", cubic_vs_quadrature),
        (Nonlinear, "pairing-bound", pairing),
        (Nonlinear, "monotonicity-gap", monotonicity),
        (Noise, "variance", noise_variance),
        (Noise, "composition", noise_composition),
        (Noise, "independence", noise_correlation),
        (Noise, "convolution-moment", convolution_moment),
        (Integrator, "linear-regime", linear_regime),
        (Integrator, "determinism", determinism),
        (Integrator, "taming-denominators", taming),
        (Integrator, "resolution-nesting", nesting),
    ];
    table
        .into_iter()
        .map(|(group, name, run)| Check { group, name, run })
        .collect()
}

pub fn run_checks(ctx: &CheckContext, group: Option<CheckGroup>) -> Vec<CheckOutcome> {
    all_checks()
        .into_iter()
        .filter(|c| group.is_none_or(|g| g == c.group))
        .map(|c| CheckOutcome {
            group: c.group,
            name: c.name,
            result: (c.run)(ctx),
        })
        .collect()
}

//! Exact per-mode stochastic convolution increments.
//!
//! Over one step of length `τ` the Galerkin noise contributes
//! `Λ_k = ∫_{t_m}^{t_{m+1}} e^{−(t_{m+1}−s)λ_k} dβ_k(s) ~ N(0, σ_k)` with
//! `σ_k = (1 − e^{−2τλ_k}) / (2λ_k)`, independently across modes and steps.
//!
//! Every standard normal is addressed by `(seed, trajectory, mode, fine step)`.
//! The generator is ChaCha8 keyed by the master seed, one stream per trajectory,
//! with the word position derived from the fine step and mode pair. Draws are
//! therefore independent of the mode count, of evaluation order and of how many
//! other draws were made, which lets coarse runs reuse the Brownian path of a
//! fine run exactly.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::basis::lambda;
use crate::error::{Error, Result};

/// Variance `σ_k(τ) = (1 − e^{−2τλ_k}) / (2λ_k)` of one convolution increment.
pub fn sigma(k: usize, tau: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::ZeroMode);
    }
    if !(tau > 0.0) {
        return Err(Error::invalid(format!(
            "step size must be positive, got {tau}"
        )));
    }
    Ok(sigma_unchecked(k, tau))
}

#[inline]
fn sigma_unchecked(k: usize, tau: f64) -> f64 {
    let l = lambda(k);
    -(-2.0 * tau * l).exp_m1() / (2.0 * l)
}

/// `E‖O_t^N‖² = Σ_{k ≤ N} (1 − e^{−2tλ_k}) / (2λ_k)` for the Galerkin stochastic
/// convolution started from zero.
pub fn convolution_second_moment(t: f64, n_modes: usize) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    (1..=n_modes).map(|k| sigma_unchecked(k, t)).sum()
}

/// One step's worth of `Λ_1..Λ_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionIncrement {
    values: Vec<f64>,
}

impl ConvolutionIncrement {
    pub fn zeros(n_modes: usize) -> Self {
        Self {
            values: vec![0.0; n_modes],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn n_modes(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Source of convolution increments at a coarsened resolution.
pub trait NoiseSource: Sync {
    fn fine_steps(&self) -> usize;

    fn fine_tau(&self) -> f64;

    /// Exact increment over `[r j τ_fine, r (j+1) τ_fine]` for modes `1..=n_modes`.
    fn coarse_increment(
        &self,
        coarse_step: usize,
        n_modes: usize,
        ratio: usize,
    ) -> Result<ConvolutionIncrement>;
}

// Word-position layout: each fine step owns 2^PAIR_BITS mode pairs, four 32-bit
// words (two u64) per pair. 2^PAIR_BITS pairs bounds N; fine steps stay below
// 2^(68 − 2 − PAIR_BITS).
const PAIR_BITS: u32 = 24;
const MAX_MODES: usize = 2 << PAIR_BITS;
const MAX_FINE_STEPS: usize = 1 << 40;

/// Deterministic noise for one trajectory at a fixed finest resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseStream {
    master_seed: u64,
    trajectory_index: u64,
    fine_steps: usize,
    fine_tau: f64,
}

impl NoiseStream {
    pub fn new(
        master_seed: u64,
        trajectory_index: u64,
        fine_steps: usize,
        horizon: f64,
    ) -> Result<Self> {
        if fine_steps == 0 || fine_steps > MAX_FINE_STEPS {
            return Err(Error::invalid(format!(
                "fine step count must be in 1..={MAX_FINE_STEPS}, got {fine_steps}"
            )));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::invalid(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        Ok(Self {
            master_seed,
            trajectory_index,
            fine_steps,
            fine_tau: horizon / fine_steps as f64,
        })
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn trajectory_index(&self) -> u64 {
        self.trajectory_index
    }

    fn rng_at(&self, fine_step: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.trajectory_index);
        rng.set_word_pos(((fine_step as u128) << PAIR_BITS) * 4);
        rng
    }

    /// Standard normals `Z(seed, trajectory, k, m)` for `k = 1..=n_modes`.
    ///
    /// Box–Muller on consecutive mode pairs: modes `2p+1` and `2p+2` take the
    /// cosine and sine branches of the pair `p`.
    pub fn standard_normals(&self, fine_step: usize, n_modes: usize) -> Result<Vec<f64>> {
        if fine_step >= self.fine_steps {
            return Err(Error::StepOutOfRange {
                step: fine_step,
                ratio: 1,
                fine_steps: self.fine_steps,
            });
        }
        if n_modes == 0 || n_modes > MAX_MODES {
            return Err(Error::invalid(format!(
                "mode count must be in 1..={MAX_MODES}, got {n_modes}"
            )));
        }
        let mut rng = self.rng_at(fine_step);
        let mut out = Vec::with_capacity(n_modes + 1);
        while out.len() < n_modes {
            let (z0, z1) = box_muller(rng.next_u64(), rng.next_u64());
            out.push(z0);
            out.push(z1);
        }
        out.truncate(n_modes);
        Ok(out)
    }

    /// `Λ_k = √σ_k(τ_fine) Z(seed, trajectory, k, m)`.
    pub fn fine_increment(&self, fine_step: usize, n_modes: usize) -> Result<ConvolutionIncrement> {
        let mut z = self.standard_normals(fine_step, n_modes)?;
        for (i, v) in z.iter_mut().enumerate() {
            *v *= sigma_unchecked(i + 1, self.fine_tau).sqrt();
        }
        Ok(ConvolutionIncrement { values: z })
    }
}

// u1 ∈ (0, 1] keeps the logarithm finite; u2 ∈ [0, 1).
fn box_muller(a: u64, b: u64) -> (f64, f64) {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let u1 = ((a >> 11) + 1) as f64 * SCALE;
    let u2 = (b >> 11) as f64 * SCALE;
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}

fn check_coarse(fine_steps: usize, coarse_step: usize, ratio: usize) -> Result<()> {
    if ratio == 0 || ratio * (coarse_step + 1) > fine_steps {
        return Err(Error::StepOutOfRange {
            step: coarse_step,
            ratio,
            fine_steps,
        });
    }
    Ok(())
}

impl NoiseSource for NoiseStream {
    fn fine_steps(&self) -> usize {
        self.fine_steps
    }

    fn fine_tau(&self) -> f64 {
        self.fine_tau
    }

    /// Composes `r` fine increments through the semigroup:
    /// `Λ^coarse_k = Σ_{i<r} e^{−(r−1−i)τ_fine λ_k} Λ^fine_k(rj + i)`.
    fn coarse_increment(
        &self,
        coarse_step: usize,
        n_modes: usize,
        ratio: usize,
    ) -> Result<ConvolutionIncrement> {
        check_coarse(self.fine_steps, coarse_step, ratio)?;
        if ratio == 1 {
            return self.fine_increment(coarse_step, n_modes);
        }
        let mut acc = vec![0.0; n_modes];
        let first = ratio * coarse_step;
        for i in 0..ratio {
            let fine = self.fine_increment(first + i, n_modes)?;
            // Horner form: acc ← S(τ_fine) acc + Λ^fine
            for (k, (a, f)) in acc.iter_mut().zip(fine.values()).enumerate() {
                let decay = if i == 0 {
                    0.0
                } else {
                    (-self.fine_tau * lambda(k + 1)).exp()
                };
                *a = decay * *a + f;
            }
        }
        Ok(ConvolutionIncrement { values: acc })
    }
}

/// A source that always returns zero increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroNoise {
    fine_steps: usize,
    fine_tau: f64,
}

impl ZeroNoise {
    pub fn new(fine_steps: usize, horizon: f64) -> Self {
        Self {
            fine_steps,
            fine_tau: horizon / fine_steps as f64,
        }
    }
}

impl NoiseSource for ZeroNoise {
    fn fine_steps(&self) -> usize {
        self.fine_steps
    }

    fn fine_tau(&self) -> f64 {
        self.fine_tau
    }

    fn coarse_increment(
        &self,
        coarse_step: usize,
        n_modes: usize,
        ratio: usize,
    ) -> Result<ConvolutionIncrement> {
        check_coarse(self.fine_steps, coarse_step, ratio)?;
        Ok(ConvolutionIncrement::zeros(n_modes))
    }
}

//! Sine eigenbasis of the Dirichlet Laplacian on (0, 1).
//!
//! `φ_k(x) = √2 sin(kπx)` with `A φ_k = k²π² φ_k`. A [`SpectralField`] stores the
//! coefficients `a_1..a_N`; slot 0 of the container holds mode `k = 1`.
//!
//! Grid transforms work on the `G − 1` interior nodes `x_j = j / G` of a uniform
//! partition. The trapezoid rule on that grid has vanishing boundary terms and
//! integrates `cos(mπx)` exactly for `0 < m < 2G`, which is what makes the
//! discrete analysis an exact inverse of synthesis when `N ≤ G − 1`.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Eigenvalue `λ_k = k²π²` of the Dirichlet Laplacian.
pub fn eigenvalue(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::ZeroMode);
    }
    Ok(lambda(k))
}

#[inline]
pub(crate) fn lambda(k: usize) -> f64 {
    let k = k as f64;
    k * k * PI * PI
}

/// Element of `H^N = span{φ_1, …, φ_N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("a spectral field needs at least one mode"));
        }
        check_finite(&coeffs)?;
        Ok(Self { coeffs })
    }

    pub fn zeros(n_modes: usize) -> Self {
        assert!(n_modes >= 1, "a spectral field needs at least one mode");
        Self {
            coeffs: vec![0.0; n_modes],
        }
    }

    /// The basis function `φ_k` embedded in `H^N`.
    pub fn basis_function(k: usize, n_modes: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroMode);
        }
        if k > n_modes {
            return Err(Error::invalid(format!(
                "mode {k} does not fit in {n_modes} modes"
            )));
        }
        let mut field = Self::zeros(n_modes);
        field.coeffs[k - 1] = 1.0;
        Ok(field)
    }

    /// Wraps coefficients produced internally from finite arithmetic. Callers that
    /// cannot rule out overflow must go through [`SpectralField::new`].
    pub(crate) fn from_vec_unchecked(coeffs: Vec<f64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        Self { coeffs }
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient of `φ_k`, 1-indexed.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs[k - 1]
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|a| a.is_finite())
    }

    /// Projection `P_n` onto the first `n` modes.
    pub fn truncate(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_modes() {
            return Err(Error::invalid(format!(
                "cannot truncate a {}-mode field to {n} modes",
                self.n_modes()
            )));
        }
        Ok(Self {
            coeffs: self.coeffs[..n].to_vec(),
        })
    }

    /// Embeds the field into `H^n`, `n ≥ n_modes`, with zero upper coefficients.
    pub fn zero_padded(&self, n: usize) -> Result<Self> {
        if n < self.n_modes() {
            return Err(Error::invalid(format!(
                "cannot pad a {}-mode field to {n} modes",
                self.n_modes()
            )));
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(n, 0.0);
        Ok(Self { coeffs })
    }

    /// `L²(0,1)` inner product; both fields must share the mode count.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        same_modes(self, other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_modes(self, other)?;
        Ok(Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.coeffs.iter().map(|a| a * factor).collect())
    }

    pub fn norm_l2(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// `‖A^{α/2} u‖ = (Σ λ_k^α a_k²)^{1/2}`.
    pub fn norm_hdot(&self, alpha: f64) -> Result<f64> {
        if !(alpha >= 0.0) {
            return Err(Error::invalid(format!(
                "Sobolev order must be nonnegative, got {alpha}"
            )));
        }
        Ok(self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| lambda(i + 1).powf(alpha) * a * a)
            .sum::<f64>()
            .sqrt())
    }

    /// Maximum of `|u(x_j)|` over the interior nodes of a `G`-interval grid.
    ///
    /// This under-estimates the true sup-norm; it is only meant for moment
    /// statistics. Requires `G ≥ 8N`.
    pub fn norm_linf(&self, grid_points: usize) -> Result<f64> {
        if grid_points < 8 * self.n_modes() {
            return Err(Error::invalid(format!(
                "sup-norm estimate needs at least {} grid subintervals, got {grid_points}",
                8 * self.n_modes()
            )));
        }
        Ok(synthesize(self, grid_points)?.max_abs())
    }

    /// Heat semigroup `S(t) = e^{−tA}` acting mode-wise.
    pub fn semigroup_apply(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0) {
            return Err(Error::invalid(format!(
                "semigroup time must be nonnegative, got {t}"
            )));
        }
        Ok(Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, a)| (-t * lambda(i + 1)).exp() * a)
                .collect(),
        })
    }
}

fn same_modes(a: &SpectralField, b: &SpectralField) -> Result<()> {
    if a.n_modes() != b.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: a.n_modes(),
            found: b.n_modes(),
        });
    }
    Ok(())
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|a| !a.is_finite()) {
        Some(i) => Err(Error::NonFinite { mode: i + 1 }),
        None => Ok(()),
    }
}

/// Values at the interior nodes `x_j = j / G`, `j = 1..G−1`; the boundary values
/// are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    n_points: usize,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(n_points: usize, values: Vec<f64>) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::invalid("a grid needs at least 2 subintervals"));
        }
        if values.len() != n_points - 1 {
            return Err(Error::DimensionMismatch {
                expected: n_points - 1,
                found: values.len(),
            });
        }
        check_finite(&values)?;
        Ok(Self { n_points, values })
    }

    /// Number of subintervals `G`.
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n_points as f64
    }

    /// Node `x_j` for `j = 1..G−1`.
    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.n_points as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trapezoid rule for `∫₀¹ g(u(x)) dx`; the boundary terms vanish when
    /// `g(0) = 0`.
    pub fn integrate_with(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.values.iter().map(|&v| g(v)).sum::<f64>() / self.n_points as f64
    }
}

/// Uniform time grid `t_m = mτ`, `τ = T / M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    n_modes: usize,
    n_steps: usize,
    horizon: f64,
}

impl Discretization {
    pub fn new(n_modes: usize, n_steps: usize, horizon: f64) -> Result<Self> {
        if n_modes == 0 || n_steps == 0 {
            return Err(Error::invalid("mode and step counts must be positive"));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::invalid(format!(
                "time horizon must be positive, got {horizon}"
            )));
        }
        Ok(Self {
            n_modes,
            n_steps,
            horizon,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn tau(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn time(&self, m: usize) -> f64 {
        if m == self.n_steps {
            self.horizon
        } else {
            m as f64 * self.tau()
        }
    }

    /// `κ(t) = ⌊t / τ⌋ τ`, the last grid time not after `t`.
    pub fn kappa(&self, t: f64) -> f64 {
        let m = ((t / self.tau()) * (1.0 + f64::EPSILON)).floor() as usize;
        self.time(m.min(self.n_steps))
    }

    /// Index of the grid time closest to `t`, or `None` when `t ∉ [0, T]`.
    pub fn nearest_step(&self, t: f64) -> Option<usize> {
        if !(t >= 0.0) || t > self.horizon * (1.0 + 1e-12) {
            return None;
        }
        Some(((t / self.tau()).round() as usize).min(self.n_steps))
    }
}

/// Direct `O(N·G)` sine transform between `H^N` and a `G`-interval grid, backed by
/// a precomputed table of `√2 sin(kπj/G)`.
#[derive(Debug, Clone)]
pub struct SineTransform {
    n_modes: usize,
    grid_points: usize,
    // row k−1 holds √2 sin(kπ j/G), j = 1..G−1
    table: Vec<f64>,
}

impl SineTransform {
    pub fn new(n_modes: usize, grid_points: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::ZeroMode);
        }
        if grid_points < 2 {
            return Err(Error::invalid("a grid needs at least 2 subintervals"));
        }
        let interior = grid_points - 1;
        let mut table = Vec::with_capacity(n_modes * interior);
        for k in 1..=n_modes {
            for j in 1..grid_points {
                // reduce k·j mod 2G so the sine argument stays in [0, 2π)
                let phase = ((k * j) % (2 * grid_points)) as f64 / grid_points as f64;
                table.push(SQRT_2 * (PI * phase).sin());
            }
        }
        Ok(Self {
            n_modes,
            grid_points,
            table,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    fn row(&self, k: usize) -> &[f64] {
        let interior = self.grid_points - 1;
        &self.table[(k - 1) * interior..k * interior]
    }

    /// `out_j = Σ_k a_k √2 sin(kπ j/G)`.
    pub fn synthesize_into(&self, coeffs: &[f64], out: &mut [f64]) {
        assert_eq!(coeffs.len(), self.n_modes);
        assert_eq!(out.len(), self.grid_points - 1);
        out.fill(0.0);
        for (k, &a) in coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (o, s) in out.iter_mut().zip(self.row(k + 1)) {
                *o += a * s;
            }
        }
    }

    /// Trapezoid quadrature of `⟨g, φ_k⟩` for `k = 1..N`.
    pub fn analyze_into(&self, values: &[f64], out: &mut [f64]) {
        assert_eq!(values.len(), self.grid_points - 1);
        assert_eq!(out.len(), self.n_modes);
        let h = 1.0 / self.grid_points as f64;
        for (k, o) in out.iter_mut().enumerate() {
            *o = h * self
                .row(k + 1)
                .iter()
                .zip(values)
                .map(|(s, v)| s * v)
                .sum::<f64>();
        }
    }

    pub fn synthesize(&self, field: &SpectralField) -> Result<GridField> {
        if field.n_modes() != self.n_modes {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes,
                found: field.n_modes(),
            });
        }
        let mut values = vec![0.0; self.grid_points - 1];
        self.synthesize_into(field.coeffs(), &mut values);
        GridField::new(self.grid_points, values)
    }

    pub fn analyze(&self, grid: &GridField) -> Result<SpectralField> {
        if grid.n_points() != self.grid_points {
            return Err(Error::DimensionMismatch {
                expected: self.grid_points - 1,
                found: grid.values().len(),
            });
        }
        if self.n_modes >= self.grid_points {
            return Err(Error::Aliasing {
                n_modes: self.n_modes,
                grid_points: self.grid_points,
            });
        }
        let mut coeffs = vec![0.0; self.n_modes];
        self.analyze_into(grid.values(), &mut coeffs);
        SpectralField::new(coeffs)
    }
}

/// Evaluates the field at the interior nodes of a `G`-interval grid.
pub fn synthesize(field: &SpectralField, grid_points: usize) -> Result<GridField> {
    SineTransform::new(field.n_modes(), grid_points)?.synthesize(field)
}

/// Discrete sine analysis onto `n_modes` modes. Rejects `n_modes ≥ G`.
pub fn analyze(grid: &GridField, n_modes: usize) -> Result<SpectralField> {
    if n_modes >= grid.n_points() {
        return Err(Error::Aliasing {
            n_modes,
            grid_points: grid.n_points(),
        });
    }
    SineTransform::new(n_modes, grid.n_points())?.analyze(grid)
}

/// FFT-backed type-I discrete sine transform, `O(G log G)` per call.
///
/// Uses the odd extension of length `2G`: if `y` is the odd extension of
/// `x_1..x_{G−1}`, then `Im(FFT(y)_k) = −2 Σ_j x_j sin(πjk/G)`.
pub struct FastSineTransform {
    n_modes: usize,
    grid_points: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FastSineTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FastSineTransform")
            .field("n_modes", &self.n_modes)
            .field("grid_points", &self.grid_points)
            .finish()
    }
}

impl FastSineTransform {
    pub fn new(n_modes: usize, grid_points: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::ZeroMode);
        }
        if n_modes >= grid_points {
            return Err(Error::Aliasing {
                n_modes,
                grid_points,
            });
        }
        let fft = FftPlanner::new().plan_fft_forward(2 * grid_points);
        Ok(Self {
            n_modes,
            grid_points,
            fft,
        })
    }

    // s_k = Σ_{j=1}^{G−1} x_j sin(πjk/G) for k = 1..G−1
    fn dst1(&self, x: &[f64]) -> Vec<f64> {
        let g = self.grid_points;
        let mut buf = vec![Complex::new(0.0, 0.0); 2 * g];
        for (j, &v) in x.iter().enumerate() {
            buf[j + 1].re = v;
            buf[2 * g - j - 1].re = -v;
        }
        self.fft.process(&mut buf);
        buf[1..g].iter().map(|c| -0.5 * c.im).collect()
    }

    pub fn synthesize(&self, field: &SpectralField) -> Result<GridField> {
        if field.n_modes() != self.n_modes {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes,
                found: field.n_modes(),
            });
        }
        let mut padded = field.coeffs().to_vec();
        padded.resize(self.grid_points - 1, 0.0);
        let values = self.dst1(&padded).into_iter().map(|s| SQRT_2 * s).collect();
        GridField::new(self.grid_points, values)
    }

    pub fn analyze(&self, grid: &GridField) -> Result<SpectralField> {
        if grid.n_points() != self.grid_points {
            return Err(Error::DimensionMismatch {
                expected: self.grid_points - 1,
                found: grid.values().len(),
            });
        }
        let scale = SQRT_2 / self.grid_points as f64;
        let s = self.dst1(grid.values());
        SpectralField::new(s[..self.n_modes].iter().map(|v| scale * v).collect())
    }
}

/// `max_{k ≤ N} λ_k^γ e^{−tλ_k}`, the norm of `A^γ S(t)` restricted to `H^N`.
///
/// Never exceeds `(γ/e)^γ t^{−γ}` (with `0⁰ = 1`), the maximum of `x^γ e^{−x}`
/// rescaled by `t^{−γ}`.
pub fn smoothing_supremum(gamma: f64, t: f64, n_modes: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!(
            "smoothing time must be positive, got {t}"
        )));
    }
    if !(gamma >= 0.0) {
        return Err(Error::invalid(format!(
            "smoothing order must be nonnegative, got {gamma}"
        )));
    }
    if n_modes == 0 {
        return Err(Error::ZeroMode);
    }
    // λ^γ e^{−tλ} is unimodal in λ with peak at λ = γ/t; only the modes
    // adjacent to the peak (or mode 1 / N at the ends) can attain the maximum.
    let peak = ((gamma / t).sqrt() / PI).floor() as usize;
    let candidates = [1, peak, peak + 1, n_modes];
    Ok(candidates
        .into_iter()
        .filter(|&k| k >= 1 && k <= n_modes)
        .map(|k| {
            let l = lambda(k);
            l.powf(gamma) * (-t * l).exp()
        })
        .fold(0.0, f64::max))
}

/// The closed-form bound `(γ/e)^γ t^{−γ}`.
pub fn smoothing_bound(gamma: f64, t: f64) -> f64 {
    if gamma == 0.0 {
        1.0
    } else {
        (gamma / std::f64::consts::E).powf(gamma) * t.powf(-gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn field(c: &[f64]) -> SpectralField {
        SpectralField::new(c.to_vec()).unwrap()
    }

    #[test]
    fn eigenvalues() {
        assert_eq!(eigenvalue(1).unwrap(), 9.869604401089358);
        assert!(close(eigenvalue(2).unwrap(), 39.47841760435743, 1e-12));
        assert!(close(eigenvalue(10).unwrap(), 100.0 * PI * PI, 1e-10));
        assert_eq!(eigenvalue(0), Err(Error::ZeroMode));
    }

    #[test]
    fn truncation() {
        let f = field(&[1.0, 2.0, 3.0]);
        assert_eq!(f.truncate(2).unwrap().coeffs(), &[1.0, 2.0]);
        assert_eq!(f.truncate(3).unwrap(), f);
        assert!(f.truncate(4).is_err());
        assert!(f.truncate(0).is_err());
        let t = f.truncate(2).unwrap();
        assert_eq!(t.truncate(2).unwrap(), t);
    }

    #[test]
    fn truncation_bound_is_sharp_on_a_single_mode() {
        // ‖(P_2 − I)(0,0,3)‖ = 3 = λ_3^{−α/2} ‖(0,0,3)‖_{Ḣ^α}
        let f = field(&[0.0, 0.0, 3.0]);
        let tail = f
            .sub(&f.truncate(2).unwrap().zero_padded(3).unwrap())
            .unwrap();
        assert!(close(tail.norm_l2(), 3.0, 1e-15));
        for alpha in [0.0, 0.25, 0.49, 1.0, 2.0] {
            let rhs = lambda(3).powf(-alpha / 2.0) * f.norm_hdot(alpha).unwrap();
            assert!(close(rhs, 3.0, 1e-12), "alpha {alpha}: {rhs}");
        }
    }

    #[test]
    fn synthesis_examples() {
        let g = synthesize(&field(&[1.0]), 2).unwrap();
        assert!(close(g.values()[0], SQRT_2, 1e-15));

        let g = synthesize(&SpectralField::zeros(5), 16).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));

        let g = synthesize(&field(&[1.0 / SQRT_2]), 4).unwrap();
        let expect = [(PI / 4.0).sin(), 1.0, (3.0 * PI / 4.0).sin()];
        for (v, e) in g.values().iter().zip(expect) {
            assert!(close(*v, e, 1e-15));
        }
    }

    #[test]
    fn analysis_examples() {
        let g = synthesize(&SpectralField::basis_function(1, 1).unwrap(), 16).unwrap();
        let a = analyze(&g, 8).unwrap();
        assert!(close(a.coeff(1), 1.0, 1e-13));
        assert!(a.coeffs()[1..].iter().all(|c| c.abs() < 1e-13));

        let zero = GridField::new(8, vec![0.0; 7]).unwrap();
        assert_eq!(analyze(&zero, 4).unwrap(), SpectralField::zeros(4));

        assert!(matches!(analyze(&zero, 8), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn norms() {
        let phi1 = SpectralField::basis_function(1, 4).unwrap();
        assert_eq!(phi1.norm_l2(), 1.0);
        assert!(close(phi1.norm_hdot(1.0).unwrap(), PI, 1e-15));
        let phi2 = SpectralField::basis_function(2, 4).unwrap();
        assert!(close(
            phi2.norm_hdot(0.5).unwrap(),
            2.5066282746310002,
            1e-12
        ));
        let z = SpectralField::zeros(4);
        assert_eq!(z.norm_l2(), 0.0);
        assert_eq!(z.norm_hdot(0.7).unwrap(), 0.0);
        assert_eq!(z.norm_linf(32).unwrap(), 0.0);
        assert!(phi1.norm_hdot(-0.1).is_err());
        assert!(phi1.norm_linf(31).is_err());
        // φ_1 peaks at √2 on the node x = 1/2
        assert!(close(phi1.norm_linf(32).unwrap(), SQRT_2, 1e-15));
    }

    #[test]
    fn semigroup_examples() {
        let f = field(&[1.0, -2.0, 0.5]);
        assert_eq!(f.semigroup_apply(0.0).unwrap(), f);
        let phi1 = SpectralField::basis_function(1, 1).unwrap();
        let c = phi1.semigroup_apply(0.01).unwrap().coeff(1);
        // e^{−0.01π²}
        assert!(close(c, 0.906018055788923, 1e-14));
        assert!(f.semigroup_apply(-1e-3).is_err());
        for t in [0.001, 0.1, 1.0] {
            assert!(f.semigroup_apply(t).unwrap().norm_l2() <= f.norm_l2());
        }
    }

    #[test]
    fn smoothing_examples() {
        let s = smoothing_supremum(0.0, 0.3, 10).unwrap();
        assert!(close(s, (-0.3 * PI * PI).exp(), 1e-15));

        let t = 1.0 / (PI * PI);
        let s = smoothing_supremum(1.0, t, 5).unwrap();
        let bound = smoothing_bound(1.0, t);
        assert!(close(s, PI * PI / std::f64::consts::E, 1e-12));
        assert!(close(bound, PI * PI / std::f64::consts::E, 1e-12));

        let s = smoothing_supremum(0.5, 0.1, 64).unwrap();
        assert!(s <= smoothing_bound(0.5, 0.1));
        assert!(close(smoothing_bound(0.5, 0.1), 1.3562437855552413, 1e-12));

        assert!(smoothing_supremum(0.5, 0.0, 4).is_err());
    }

    #[test]
    fn smoothing_candidates_match_brute_force() {
        for gamma in [0.0, 0.25, 0.5, 1.0, 3.0] {
            for t in [1e-4, 1e-3, 1e-2, 0.1, 1.0] {
                for n in [1, 2, 7, 50, 300] {
                    let brute = (1..=n)
                        .map(|k| lambda(k).powf(gamma) * (-t * lambda(k)).exp())
                        .fold(0.0, f64::max);
                    let s = smoothing_supremum(gamma, t, n).unwrap();
                    assert!((s - brute).abs() <= 1e-12 * brute.max(1e-300));
                }
            }
        }
    }

    #[test]
    fn discretization_grid() {
        let d = Discretization::new(8, 64, 1.0).unwrap();
        assert!((d.tau() * 64.0 - 1.0).abs() <= f64::EPSILON);
        assert_eq!(d.time(64), 1.0);
        assert_eq!(d.kappa(0.5), 0.5);
        assert_eq!(d.kappa(0.51), d.time(32));
        assert_eq!(d.nearest_step(0.5), Some(32));
        assert_eq!(d.nearest_step(1.5), None);
        assert!(Discretization::new(0, 1, 1.0).is_err());
        assert!(Discretization::new(1, 1, 0.0).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        assert_eq!(
            SpectralField::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { mode: 2 })
        );
        assert!(SpectralField::new(vec![]).is_err());
    }
}

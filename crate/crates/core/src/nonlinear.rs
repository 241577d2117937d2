//! Galerkin projections of the drift terms.
//!
//! For `u ∈ H^N` the Burgers drift is `P_N B(u) = −½ Σ_k ⟨u², Dφ_k⟩ φ_k` with
//! `Dφ_k = √2 kπ cos(kπx)`, and the reaction drift is `P_N f(u)` with
//! `f(u) = ν u (1 − u)(u − θ)`.
//!
//! Grid evaluations are dealiased by quadrature exactness: products of degree at
//! most `4N` are integrated on a grid with `G ≥ 4N` subintervals, where the
//! trapezoid rule is exact, so the grid route reproduces the Galerkin projection
//! instead of approximating it.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::basis::{check_finite, SineTransform, SpectralField};
use crate::error::{Error, Result};

/// Initial datum `u_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// `u_0(x) = sin(πx)`.
    SinePi,
    /// Coefficients of `φ_1, φ_2, …`.
    Coefficients(Vec<f64>),
}

impl InitialCondition {
    /// `P_N u_0`. Exact for both descriptors.
    pub fn project(&self, n_modes: usize) -> Result<SpectralField> {
        match self {
            // ⟨sin πx, √2 sin πx⟩ = 1/√2
            InitialCondition::SinePi => {
                let mut c = vec![0.0; n_modes.max(1)];
                c[0] = 1.0 / SQRT_2;
                SpectralField::new(c)
            }
            InitialCondition::Coefficients(c) => {
                let mut c: Vec<f64> = c.iter().copied().take(n_modes).collect();
                c.resize(n_modes.max(1), 0.0);
                SpectralField::new(c)
            }
        }
    }
}

/// Reaction strength `ν`, threshold `θ`, horizon `T` and initial datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub nu: f64,
    pub theta: f64,
    pub horizon: f64,
    pub initial_condition: InitialCondition,
}

/// Lower bound on `ν` under which the one-sided monotonicity estimate holds.
pub const MONOTONICITY_THRESHOLD: f64 = 1.0 / 6.0;

impl ModelParams {
    pub fn new(
        nu: f64,
        theta: f64,
        horizon: f64,
        initial_condition: InitialCondition,
    ) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::invalid(format!("nu must be positive, got {nu}")));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::invalid(format!(
                "theta must lie in (0, 1), got {theta}"
            )));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::invalid(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if let InitialCondition::Coefficients(c) = &initial_condition {
            check_finite(c)?;
        }
        Ok(Self {
            nu,
            theta,
            horizon,
            initial_condition,
        })
    }

    /// `ν = 1`, `θ = 0.5`, `T = 1`, `u_0 = sin(πx)`.
    pub fn reference() -> Self {
        Self {
            nu: 1.0,
            theta: 0.5,
            horizon: 1.0,
            initial_condition: InitialCondition::SinePi,
        }
    }

    pub fn satisfies_monotonicity(&self) -> bool {
        self.nu > MONOTONICITY_THRESHOLD
    }

    pub fn require_monotonicity(&self) -> Result<()> {
        if self.satisfies_monotonicity() {
            Ok(())
        } else {
            Err(Error::MonotonicityViolated { nu: self.nu })
        }
    }

    #[inline]
    pub fn reaction(&self, u: f64) -> f64 {
        self.nu * u * (1.0 - u) * (u - self.theta)
    }
}

fn require_finite(field: &SpectralField) -> Result<()> {
    check_finite(field.coeffs())
}

/// Cosine coefficients of `u²`: `u² = Σ_{m=0}^{2N} C_m cos(mπx)` with
/// `C_m = Σ_{|j−l|=m} a_j a_l − Σ_{j+l=m} a_j a_l` over ordered pairs, from
/// `2 sin(jπx) sin(lπx) = cos((j−l)πx) − cos((j+l)πx)`.
pub(crate) fn square_cosine_coeffs(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut c = vec![0.0; 2 * n + 1];
    for i in 0..n {
        c[0] += a[i] * a[i];
        for l in (i + 1)..n {
            let p = a[i] * a[l];
            // (j, l) and (l, j) both have |j − l| = l − i
            c[l - i] += 2.0 * p;
            // 1-indexed j + l = i + l + 2
            c[i + l + 2] -= 2.0 * p;
        }
        c[2 * i + 2] -= a[i] * a[i];
    }
    c
}

/// `P_N B(u)` by the exact sine-product convolution: with `Dφ_k = √2 kπ cos(kπx)`
/// and `⟨cos(mπx), cos(kπx)⟩ = ½ δ_{mk}`, `b_k = −(√2 kπ / 4) C_k`.
pub fn burgers_galerkin(field: &SpectralField) -> Result<SpectralField> {
    require_finite(field)?;
    let c = square_cosine_coeffs(field.coeffs());
    Ok(SpectralField::from_vec_unchecked(burgers_from_square(
        &c,
        field.n_modes(),
    )))
}

fn burgers_from_square(c: &[f64], n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| -(SQRT_2 * k as f64 * PI / 4.0) * c[k])
        .collect()
}

/// `⟨u², φ_k⟩` for `k = 1..=N` from the cosine coefficients of `u²`.
///
/// `∫₀¹ cos(mπx) sin(kπx) dx = 2k / (π(k² − m²))` when `k + m` is odd and zero
/// otherwise. The grid cannot produce this exactly: an odd number of sine factors
/// leaves odd sines, on which the trapezoid rule is not exact.
fn square_moments(c: &[f64], n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| {
            let kf = k as f64;
            let mut acc = 0.0;
            let mut m = (k + 1) % 2;
            while m < c.len() {
                let mf = m as f64;
                acc += c[m] * 2.0 * kf / (kf * kf - mf * mf);
                m += 2;
            }
            SQRT_2 / PI * acc
        })
        .collect()
}

/// `P_N B(u)` through the grid: synthesize on `G = 4N`, square, project each
/// cosine mode by trapezoid quadrature. Agrees with [`burgers_galerkin`] up to
/// rounding.
pub fn burgers_galerkin_fast(field: &SpectralField) -> Result<SpectralField> {
    require_finite(field)?;
    let n = field.n_modes();
    let g = 4 * n;
    let sine = SineTransform::new(n, g)?;
    let mut values = vec![0.0; g - 1];
    sine.synthesize_into(field.coeffs(), &mut values);
    let h = 1.0 / g as f64;
    let out = (1..=n)
        .map(|k| {
            let moment: f64 = values
                .iter()
                .enumerate()
                .map(|(j, u)| {
                    let phase = ((k * (j + 1)) % (2 * g)) as f64 / g as f64;
                    u * u * (PI * phase).cos()
                })
                .sum::<f64>()
                * h;
            -0.5 * SQRT_2 * k as f64 * PI * moment
        })
        .collect();
    Ok(SpectralField::from_vec_unchecked(out))
}

/// `P_N f(u)` on the default grid `G = 4N`.
pub fn cubic_galerkin(field: &SpectralField, params: &ModelParams) -> Result<SpectralField> {
    cubic_galerkin_on_grid(field, params, 4 * field.n_modes())
}

/// `P_N f(u)` with `f(u) = −ν(u³ + θu) + ν(1+θ)u²`.
///
/// The odd part is projected by trapezoid quadrature on a `G`-interval grid,
/// exact for `G ≥ 2N + 1` (the integrand is a cosine polynomial of degree at most
/// `4N`). The quadratic part comes from [`square_moments`].
pub fn cubic_galerkin_on_grid(
    field: &SpectralField,
    params: &ModelParams,
    grid_points: usize,
) -> Result<SpectralField> {
    require_finite(field)?;
    let n = field.n_modes();
    if grid_points <= n {
        return Err(Error::Aliasing {
            n_modes: n,
            grid_points,
        });
    }
    let sine = SineTransform::new(n, grid_points)?;
    let mut values = vec![0.0; grid_points - 1];
    sine.synthesize_into(field.coeffs(), &mut values);
    let mut out = vec![0.0; n];
    let c = square_cosine_coeffs(field.coeffs());
    reaction_from_grid(&sine, &mut values, &c, params, &mut out);
    SpectralField::new(out)
}

fn reaction_from_grid(
    sine: &SineTransform,
    values: &mut [f64],
    square: &[f64],
    params: &ModelParams,
    out: &mut [f64],
) {
    let (nu, theta) = (params.nu, params.theta);
    for v in values.iter_mut() {
        let u = *v;
        *v = -nu * u * (u * u + theta);
    }
    sine.analyze_into(values, out);
    let quad = nu * (1.0 + theta);
    let moments = square_moments(square, out.len());
    for (o, q) in out.iter_mut().zip(moments) {
        *o += quad * q;
    }
}

/// `‖u²‖ = (∫₀¹ u⁴ dx)^{1/2}` with quadrature on `G = 4N + 2`.
pub fn l2_norm_of_square(field: &SpectralField) -> Result<f64> {
    require_finite(field)?;
    let n = field.n_modes();
    let g = 4 * n + 2;
    let sine = SineTransform::new(n, g)?;
    let mut values = vec![0.0; g - 1];
    sine.synthesize_into(field.coeffs(), &mut values);
    Ok((values.iter().map(|u| u * u * u * u).sum::<f64>() / g as f64).sqrt())
}

/// The two taming denominators of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TamingState {
    /// `1 + τ ‖v²‖`.
    pub burgers_denominator: f64,
    /// `1 + τ ‖f_N(v)‖`.
    pub cubic_denominator: f64,
}

impl TamingState {
    pub fn new(tau: f64, square_norm: f64, cubic_norm: f64) -> Self {
        Self {
            burgers_denominator: 1.0 + tau * square_norm,
            cubic_denominator: 1.0 + tau * cubic_norm,
        }
    }

    pub fn min_denominator(&self) -> f64 {
        self.burgers_denominator.min(self.cubic_denominator)
    }
}

pub fn taming_state(field: &SpectralField, params: &ModelParams, tau: f64) -> Result<TamingState> {
    if !(tau > 0.0) {
        return Err(Error::invalid(format!(
            "step size must be positive, got {tau}"
        )));
    }
    let square = l2_norm_of_square(field)?;
    let cubic = cubic_galerkin(field, params)?.norm_l2();
    Ok(TamingState::new(tau, square, cubic))
}

/// Both drift projections and `‖v²‖` for one state, sharing the cosine
/// expansion of `v²` and one synthesis on `G = 4N`.
#[derive(Debug, Clone)]
pub struct DriftEvaluator {
    sine: SineTransform,
}

/// Output of [`DriftEvaluator::evaluate`].
#[derive(Debug, Clone)]
pub struct Drift {
    pub burgers: Vec<f64>,
    pub cubic: Vec<f64>,
    pub square_norm: f64,
}

impl DriftEvaluator {
    pub fn new(n_modes: usize) -> Result<Self> {
        Ok(Self {
            sine: SineTransform::new(n_modes, 4 * n_modes)?,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.sine.n_modes()
    }

    pub fn evaluate(&self, coeffs: &[f64], params: &ModelParams) -> Drift {
        let n = self.sine.n_modes();
        let square = square_cosine_coeffs(coeffs);
        // ‖u²‖² = C_0² + ½ Σ_{m≥1} C_m²
        let quartic = square[0] * square[0] + 0.5 * square[1..].iter().map(|c| c * c).sum::<f64>();
        let mut values = vec![0.0; self.sine.grid_points() - 1];
        self.sine.synthesize_into(coeffs, &mut values);
        let mut cubic = vec![0.0; n];
        reaction_from_grid(&self.sine, &mut values, &square, params, &mut cubic);
        Drift {
            burgers: burgers_from_square(&square, n),
            cubic,
            square_norm: quartic.sqrt(),
        }
    }
}

/// `C = m* − νθ` with `m* = −min q(a, b)`,
/// `q(a, b) = (ν − ⅛)(a² + b²) + (ν − ¼)ab − ν(1 + θ)(a + b)`.
///
/// `q` is positive definite iff `ν(3ν − ½) > 0`, i.e. `ν > 1/6`; its minimiser is
/// the symmetric point `a = b = ν(1+θ)/(3ν − ½)`, so `m* = ν²(1+θ)²/(3ν − ½)`.
pub fn monotonicity_constant(params: &ModelParams) -> Result<f64> {
    params.require_monotonicity()?;
    let (nu, theta) = (params.nu, params.theta);
    let m_star = nu * nu * (1.0 + theta).powi(2) / (3.0 * nu - 0.5);
    Ok(m_star - nu * theta)
}

/// `⟨u−v, P_N B(u) − P_N B(v) + f_N(u) − f_N(v)⟩ − ½‖u−v‖²_{Ḣ¹} − C‖u−v‖²`.
///
/// Nonpositive for all `u, v ∈ H^N` when `ν > 1/6`, zero at `u = v`. The reaction
/// projections use quadrature on `G = 8N`.
pub fn monotonicity_gap(u: &SpectralField, v: &SpectralField, params: &ModelParams) -> Result<f64> {
    let c = monotonicity_constant(params)?;
    let w = u.sub(v)?;
    let g = 8 * u.n_modes();
    let drift_u = burgers_galerkin(u)?.into_coeffs();
    let drift_v = burgers_galerkin(v)?.into_coeffs();
    let react_u = cubic_galerkin_on_grid(u, params, g)?.into_coeffs();
    let react_v = cubic_galerkin_on_grid(v, params, g)?.into_coeffs();
    let lhs: f64 = w
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, wk)| wk * (drift_u[i] - drift_v[i] + react_u[i] - react_v[i]))
        .sum();
    let h1 = w.norm_hdot(1.0)?;
    let l2 = w.norm_l2();
    Ok(lhs - 0.5 * h1 * h1 - c * l2 * l2)
}

/// Upper bound `½ ‖u²‖ ‖u‖_{Ḣ¹}` for `⟨P_N B(u), u⟩`.
pub fn burgers_pairing_bound(u: &SpectralField) -> Result<f64> {
    Ok(0.5 * l2_norm_of_square(u)? * u.norm_hdot(1.0)?)
}

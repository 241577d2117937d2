//! Fully discrete tamed exponential integrator.
//!
//! One step maps `v_m ∈ H^N` to
//!
//! ```text
//! v_{m+1} = S_N(τ) v_m + A_N^{-1}(I − S_N(τ)) B_N(v_m) / (1 + τ‖v_m²‖)
//!                      + A_N^{-1}(I − S_N(τ)) f_N(v_m) / (1 + τ‖f_N(v_m)‖) + Λ_m,
//! ```
//!
//! which is diagonal in the sine basis: `a_k ← e^{−τλ_k} a_k + ψ_k b_k / d_B +
//! ψ_k c_k / d_f + Λ_k` with `ψ_k = (1 − e^{−τλ_k}) / λ_k`.

use std::fmt::Write as _;

use crate::basis::{lambda, Discretization, SineTransform, SpectralField};
use crate::error::{Error, Result};
use crate::noise::{ConvolutionIncrement, NoiseSource};
use crate::nonlinear::{DriftEvaluator, ModelParams, TamingState};
use crate::summation::CompensatedSum;

/// Mode-wise linear operators of one step plus the shared drift evaluator.
#[derive(Debug, Clone)]
pub struct StepOperators {
    tau: f64,
    decay: Vec<f64>,
    phi_weights: Vec<f64>,
    drift: DriftEvaluator,
}

/// `e^{−τλ_k}` and `ψ_k = (1 − e^{−τλ_k}) / λ_k` for `k = 1..=N`.
pub fn precompute(n_modes: usize, tau: f64) -> Result<StepOperators> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::invalid(format!(
            "step size must be positive, got {tau}"
        )));
    }
    if n_modes == 0 {
        return Err(Error::ZeroMode);
    }
    let (decay, phi_weights) = (1..=n_modes)
        .map(|k| {
            let x = tau * lambda(k);
            ((-x).exp(), -(-x).exp_m1() / lambda(k))
        })
        .unzip();
    Ok(StepOperators {
        tau,
        decay,
        phi_weights,
        drift: DriftEvaluator::new(n_modes)?,
    })
}

impl StepOperators {
    pub fn n_modes(&self) -> usize {
        self.decay.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn decay(&self) -> &[f64] {
        &self.decay
    }

    pub fn phi_weights(&self) -> &[f64] {
        &self.phi_weights
    }

    fn advance(
        &self,
        v: &[f64],
        params: &ModelParams,
        xi: &[f64],
        mode: DriftMode,
    ) -> (Vec<f64>, TamingState) {
        match mode {
            DriftMode::Full => {
                let drift = self.drift.evaluate(v, params);
                let cubic_norm = drift.cubic.iter().map(|c| c * c).sum::<f64>().sqrt();
                let taming = TamingState::new(self.tau, drift.square_norm, cubic_norm);
                let (db, df) = (taming.burgers_denominator, taming.cubic_denominator);
                let next = (0..v.len())
                    .map(|i| {
                        self.decay[i] * v[i]
                            + self.phi_weights[i] * drift.burgers[i] / db
                            + self.phi_weights[i] * drift.cubic[i] / df
                            + xi[i]
                    })
                    .collect();
                (next, taming)
            }
            DriftMode::Disabled => {
                let next = (0..v.len()).map(|i| self.decay[i] * v[i] + xi[i]).collect();
                (next, TamingState::new(self.tau, 0.0, 0.0))
            }
        }
    }
}

/// Whether the Burgers and reaction drifts take part in the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftMode {
    #[default]
    Full,
    /// Linear stochastic heat equation only; a test hook for closed-form checks.
    Disabled,
}

/// One step of the tamed scheme. Non-finite output is reported as
/// [`Error::BlowUp`] with `step = 1`.
pub fn step(
    v: &SpectralField,
    ops: &StepOperators,
    params: &ModelParams,
    xi: &ConvolutionIncrement,
) -> Result<SpectralField> {
    let n = ops.n_modes();
    for found in [v.n_modes(), xi.n_modes()] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    let (next, _) = ops.advance(v.coeffs(), params, xi.values(), DriftMode::Full);
    SpectralField::new(next).map_err(|_| Error::BlowUp {
        step: 1,
        trajectory: None,
    })
}

#[derive(Debug, Clone, Default)]
pub struct SimulationOptions {
    pub drift: DriftMode,
    /// Record per-step statistics.
    pub probe: bool,
    /// Requested snapshot times; each is mapped to the nearest grid time.
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub state: SpectralField,
}

/// Per-step statistics of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    /// `‖v_m‖` for `m = 0..=M`.
    pub l2: Vec<f64>,
    /// Grid maximum of `|v_m|` on `G = 8N`, `m = 0..=M`.
    pub grid_max: Vec<f64>,
    /// `‖v_{m+1} − v_m‖` for `m = 0..M`.
    pub increment_l2: Vec<f64>,
    /// Smallest taming denominator seen along the trajectory.
    pub min_denominator: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    pub final_state: SpectralField,
    pub tau: f64,
    pub snapshots: Vec<Snapshot>,
    pub probes: Option<ProbeRecord>,
}

impl TrajectoryResult {
    /// `t,x,value` rows for every snapshot on a `G`-interval grid, boundary nodes
    /// included.
    pub fn snapshot_csv(&self, grid_points: usize) -> Result<String> {
        let mut out = String::from("t,x,value\n");
        for snap in &self.snapshots {
            let sine = SineTransform::new(snap.state.n_modes(), grid_points)?;
            let grid = sine.synthesize(&snap.state)?;
            let _ = writeln!(out, "{},0,0", snap.time);
            for (j, v) in grid.values().iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", snap.time, grid.node(j + 1), v);
            }
            let _ = writeln!(out, "{},1,0", snap.time);
        }
        Ok(out)
    }
}

/// Runs the scheme from `v_0 = P_N u_0` for `disc.n_steps()` steps, feeding it
/// increments coarsened by `ratio` from `source`.
pub fn simulate<S: NoiseSource + ?Sized>(
    params: &ModelParams,
    disc: &Discretization,
    source: &S,
    ratio: usize,
    options: &SimulationOptions,
) -> Result<TrajectoryResult> {
    let n = disc.n_modes();
    let m_steps = disc.n_steps();
    if ratio == 0 || m_steps * ratio != source.fine_steps() {
        return Err(Error::invalid(format!(
            "{m_steps} steps with coarsening ratio {ratio} do not match a stream of {} fine steps",
            source.fine_steps()
        )));
    }
    let tau = disc.tau();
    if (tau - ratio as f64 * source.fine_tau()).abs() > 1e-12 * tau {
        return Err(Error::invalid(
            "step size does not match the noise stream's resolution",
        ));
    }
    let ops = precompute(n, tau)?;

    let mut snapshot_steps = Vec::with_capacity(options.snapshot_times.len());
    for &t in &options.snapshot_times {
        let m = disc.nearest_step(t).ok_or_else(|| {
            Error::invalid(format!("snapshot time {t} outside [0, {}]", disc.horizon()))
        })?;
        snapshot_steps.push(m);
    }
    snapshot_steps.sort_unstable();
    snapshot_steps.dedup();
    let mut snapshots = Vec::with_capacity(snapshot_steps.len());
    let mut next_snapshot = snapshot_steps.iter().peekable();

    let probe_grid = if options.probe {
        Some(SineTransform::new(n, 8 * n)?)
    } else {
        None
    };
    let mut record = ProbeRecord {
        l2: Vec::new(),
        grid_max: Vec::new(),
        increment_l2: Vec::new(),
        min_denominator: f64::INFINITY,
    };
    let mut grid_buf = probe_grid
        .as_ref()
        .map(|s| vec![0.0; s.grid_points() - 1])
        .unwrap_or_default();
    let mut observe = |v: &[f64], record: &mut ProbeRecord| {
        if let Some(sine) = &probe_grid {
            record.l2.push(v.iter().map(|a| a * a).sum::<f64>().sqrt());
            sine.synthesize_into(v, &mut grid_buf);
            record
                .grid_max
                .push(grid_buf.iter().fold(0.0, |m, x| m.max(x.abs())));
        }
    };

    let mut v = params.initial_condition.project(n)?.into_coeffs();
    observe(&v, &mut record);
    if next_snapshot.peek() == Some(&&0) {
        next_snapshot.next();
        snapshots.push(Snapshot {
            step: 0,
            time: 0.0,
            state: SpectralField::from_vec_unchecked(v.clone()),
        });
    }

    for m in 0..m_steps {
        let xi = source.coarse_increment(m, n, ratio)?;
        let (next, taming) = ops.advance(&v, params, xi.values(), options.drift);
        if next.iter().any(|a| !a.is_finite()) {
            return Err(Error::BlowUp {
                step: m + 1,
                trajectory: None,
            });
        }
        if options.probe {
            record.min_denominator = record.min_denominator.min(taming.min_denominator());
            let inc = next
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            record.increment_l2.push(inc);
        }
        v = next;
        observe(&v, &mut record);
        if next_snapshot.peek() == Some(&&(m + 1)) {
            next_snapshot.next();
            snapshots.push(Snapshot {
                step: m + 1,
                time: disc.time(m + 1),
                state: SpectralField::from_vec_unchecked(v.clone()),
            });
        }
    }

    Ok(TrajectoryResult {
        final_state: SpectralField::from_vec_unchecked(v),
        tau,
        snapshots,
        probes: options.probe.then_some(record),
    })
}

/// Sample-mean summaries of probed trajectories.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MomentSummary {
    pub p: u32,
    /// `max_m E[(max_j |v_m(x_j)|)^p]`.
    pub max_mean_linf_pow: f64,
    /// `max_m E‖v_m‖^p`.
    pub max_mean_l2_pow: f64,
    /// `max_m (E‖v_{m+1} − v_m‖²)^{1/2} / τ^{α/2}`.
    pub holder_quotient: f64,
    pub holder_alpha: f64,
    pub min_denominator: f64,
}

/// Temporal Hölder exponent used by [`moment_probe`].
pub const HOLDER_ALPHA: f64 = 0.49;

/// Aggregates probes over trajectories in index order.
pub fn moment_probe(results: &[TrajectoryResult], p: u32) -> Result<MomentSummary> {
    if results.is_empty() {
        return Err(Error::invalid("moment probe needs at least one trajectory"));
    }
    if p == 0 || !p.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "moment order must be a positive even integer, got {p}"
        )));
    }
    let probes: Vec<&ProbeRecord> = results
        .iter()
        .map(|r| r.probes.as_ref())
        .collect::<Option<_>>()
        .ok_or_else(|| Error::invalid("trajectory was simulated without probing"))?;
    let tau = results[0].tau;
    let len = probes[0].l2.len();
    if results.iter().any(|r| r.tau != tau) || probes.iter().any(|p| p.l2.len() != len) {
        return Err(Error::invalid(
            "probed trajectories have different time grids",
        ));
    }
    let count = probes.len() as f64;
    let mean_over = |f: &dyn Fn(&ProbeRecord) -> f64| {
        let mut acc = CompensatedSum::default();
        for p in &probes {
            acc.add(f(p));
        }
        acc.value() / count
    };

    let mut max_linf = 0.0f64;
    let mut max_l2 = 0.0f64;
    for m in 0..len {
        max_linf = max_linf.max(mean_over(&|r| r.grid_max[m].powi(p as i32)));
        max_l2 = max_l2.max(mean_over(&|r| r.l2[m].powi(p as i32)));
    }
    let mut max_increment = 0.0f64;
    for m in 0..len.saturating_sub(1) {
        max_increment = max_increment.max(mean_over(&|r| r.increment_l2[m].powi(2)).sqrt());
    }
    Ok(MomentSummary {
        p,
        max_mean_linf_pow: max_linf,
        max_mean_l2_pow: max_l2,
        holder_quotient: max_increment / tau.powf(HOLDER_ALPHA / 2.0),
        holder_alpha: HOLDER_ALPHA,
        min_denominator: probes
            .iter()
            .map(|p| p.min_denominator)
            .fold(f64::INFINITY, f64::min),
    })
}

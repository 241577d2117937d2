//! Monte-Carlo estimation of strong errors from coupled coarse/fine runs.
//!
//! For each trajectory `ω_j` one noise stream is sampled at the fine resolution
//! `(N, M)`; the coarse run at `(N/2, M/2)` consumes the same Brownian path through
//! composed increments. The error
//! `E^{M,N} = (M_traj^{-1} Σ_j ‖v^{M,N}(ω_j) − v̄^{M/2,N/2}(ω_j)‖²)^{1/2}`
//! compares the final states, the coarse one zero-padded to `N` modes.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::Discretization;
use crate::error::{Error, Result};
use crate::integrator::{
    moment_probe, simulate, DriftMode, MomentSummary, SimulationOptions, TrajectoryResult,
};
use crate::noise::{NoiseSource, NoiseStream, ZeroNoise};
use crate::nonlinear::ModelParams;
use crate::summation::CompensatedSum;

/// Moment order reported for probed studies.
pub const PROBE_MOMENT: u32 = 4;

/// A relative standard error above this marks an estimate as low-confidence.
pub const LOW_CONFIDENCE_RATIO: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `M = N²`.
    Squared,
    /// Explicit `M` for each entry of the mode list.
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyConfig {
    pub params: ModelParams,
    pub mode_counts: Vec<usize>,
    pub step_rule: StepRule,
    pub n_trajectories: usize,
    pub master_seed: u64,
    /// Collect moment statistics of the fine run at every level.
    pub probe: bool,
}

impl StudyConfig {
    /// The reference experiment: `N ∈ {16, 32, 64, 128}`, `M = N²`, 100 trajectories.
    pub fn reference(master_seed: u64) -> Self {
        Self {
            params: ModelParams::reference(),
            mode_counts: vec![16, 32, 64, 128],
            step_rule: StepRule::Squared,
            n_trajectories: 100,
            master_seed,
            probe: false,
        }
    }

    /// `(N, M)` for every level, after validation.
    pub fn levels(&self) -> Result<Vec<(usize, usize)>> {
        if self.mode_counts.len() < 2 {
            return Err(Error::invalid(
                "a convergence study needs at least two mode counts",
            ));
        }
        if self.n_trajectories == 0 {
            return Err(Error::invalid("at least one trajectory is required"));
        }
        let steps: Vec<usize> = match &self.step_rule {
            StepRule::Squared => self.mode_counts.iter().map(|n| n * n).collect(),
            StepRule::Explicit(m) => {
                if m.len() != self.mode_counts.len() {
                    return Err(Error::invalid("one step count is needed per mode count"));
                }
                m.clone()
            }
        };
        for w in self.mode_counts.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::invalid("mode counts must be strictly ascending"));
            }
        }
        for (&n, &m) in self.mode_counts.iter().zip(&steps) {
            if n < 2 || !n.is_power_of_two() {
                return Err(Error::invalid(format!(
                    "mode count {n} is not a power of two of at least 2"
                )));
            }
            if m < 2 || m % 2 != 0 {
                return Err(Error::invalid(format!("step count {m} must be even")));
            }
        }
        Ok(self.mode_counts.iter().copied().zip(steps).collect())
    }
}

/// Test hooks for [`coupled_error_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CouplingHooks {
    pub drift: DriftMode,
    /// Replace the Brownian path by zero increments.
    pub zero_noise: bool,
    /// Compare the fine run against itself.
    pub self_comparison: bool,
}

/// `E^{M,N}` with its Monte-Carlo spread.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledError {
    pub n_modes: usize,
    pub n_steps: usize,
    pub error: f64,
    /// Delta-method standard error of `error`.
    pub stderr: f64,
    /// `‖v^{M,N}(ω_j) − v̄(ω_j)‖²` in trajectory order.
    pub squared_errors: Vec<f64>,
    pub moments: Option<MomentSummary>,
}

impl CoupledError {
    pub fn mean_squared_error(&self) -> f64 {
        self.error * self.error
    }

    /// Sample standard deviation of the per-trajectory squared errors.
    pub fn squared_error_std(&self) -> f64 {
        sample_std(&self.squared_errors)
    }
}

fn mean(values: &[f64]) -> f64 {
    let mut acc = CompensatedSum::default();
    values.iter().for_each(|&v| acc.add(v));
    acc.value() / values.len() as f64
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mu = mean(values);
    let mut acc = CompensatedSum::default();
    values.iter().for_each(|&v| acc.add((v - mu) * (v - mu)));
    (acc.value() / (values.len() - 1) as f64).sqrt()
}

pub fn coupled_error(
    params: &ModelParams,
    fine: (usize, usize),
    n_trajectories: usize,
    master_seed: u64,
) -> Result<CoupledError> {
    coupled_error_with(
        params,
        fine,
        n_trajectories,
        master_seed,
        false,
        CouplingHooks::default(),
    )
}

/// [`coupled_error`] with optional probing of the fine runs and test hooks.
pub fn coupled_error_with(
    params: &ModelParams,
    fine: (usize, usize),
    n_trajectories: usize,
    master_seed: u64,
    probe: bool,
    hooks: CouplingHooks,
) -> Result<CoupledError> {
    let (n, m) = fine;
    if n < 2 || n % 2 != 0 || m < 2 || m % 2 != 0 {
        return Err(Error::invalid(format!(
            "fine resolution (N, M) = ({n}, {m}) must have even N and M"
        )));
    }
    if n_trajectories == 0 {
        return Err(Error::invalid("at least one trajectory is required"));
    }
    let horizon = params.horizon;
    let fine_disc = Discretization::new(n, m, horizon)?;
    let (coarse_disc, coarse_ratio) = if hooks.self_comparison {
        (fine_disc, 1)
    } else {
        (Discretization::new(n / 2, m / 2, horizon)?, 2)
    };
    let fine_opts = SimulationOptions {
        drift: hooks.drift,
        probe,
        snapshot_times: Vec::new(),
    };
    let coarse_opts = SimulationOptions {
        drift: hooks.drift,
        ..Default::default()
    };

    let run = |j: usize| -> Result<(f64, Option<TrajectoryResult>)> {
        let run_pair = |source: &dyn NoiseSource| -> Result<(f64, TrajectoryResult)> {
            let f = simulate(params, &fine_disc, source, 1, &fine_opts)?;
            let c = simulate(params, &coarse_disc, source, coarse_ratio, &coarse_opts)?;
            let c = c.final_state.zero_padded(n)?;
            let sq = f
                .final_state
                .coeffs()
                .iter()
                .zip(c.coeffs())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            Ok((sq, f))
        };
        let (sq, f) = if hooks.zero_noise {
            run_pair(&ZeroNoise::new(m, horizon))
        } else {
            run_pair(&NoiseStream::new(master_seed, j as u64, m, horizon)?)
        }
        .map_err(|e| e.in_trajectory(j))?;
        Ok((sq, probe.then_some(f)))
    };

    let outcomes: Vec<(f64, Option<TrajectoryResult>)> = (0..n_trajectories)
        .into_par_iter()
        .map(run)
        .collect::<Result<_>>()?;

    let squared_errors: Vec<f64> = outcomes.iter().map(|(s, _)| *s).collect();
    let mse = mean(&squared_errors);
    let error = mse.sqrt();
    let se_mse = sample_std(&squared_errors) / (n_trajectories as f64).sqrt();
    let stderr = if error > 0.0 {
        se_mse / (2.0 * error)
    } else {
        0.0
    };

    let moments = if probe {
        let runs: Vec<TrajectoryResult> = outcomes.into_iter().filter_map(|(_, r)| r).collect();
        Some(moment_probe(&runs, PROBE_MOMENT)?)
    } else {
        None
    };

    Ok(CoupledError {
        n_modes: n,
        n_steps: m,
        error,
        stderr,
        squared_errors,
        moments,
    })
}

/// Observed order between two levels, `(log e_coarse − log e_fine) /
/// (log n_fine − log n_coarse)`: decaying errors give a positive rate.
pub fn rate(e_fine: f64, e_coarse: f64, n_fine: usize, n_coarse: usize) -> Result<f64> {
    if !(e_fine > 0.0) || !(e_coarse > 0.0) {
        return Err(Error::invalid(format!(
            "errors must be positive to take logarithms, got {e_fine} and {e_coarse}"
        )));
    }
    if n_fine <= n_coarse || n_coarse == 0 {
        return Err(Error::invalid(format!(
            "fine mode count {n_fine} must exceed coarse mode count {n_coarse}"
        )));
    }
    Ok((e_coarse.ln() - e_fine.ln()) / ((n_fine as f64).ln() - (n_coarse as f64).ln()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub n_modes: usize,
    pub n_steps: usize,
    pub error: f64,
    pub stderr: f64,
    pub rate: Option<f64>,
    pub low_confidence: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub master_seed: u64,
    pub n_trajectories: usize,
    pub params: ModelParams,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ReportRow>,
    pub metadata: ReportMetadata,
}

/// Stable CSV header of [`ConvergenceReport::to_csv`].
pub const CSV_HEADER: &str = "N,M,error,stderr,rate";

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for r in &self.rows {
            let rate = r.rate.map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.n_modes, r.n_steps, r.error, r.stderr, rate
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// Two whitespace-separated columns, `log2 N` and `log2 error`.
    pub fn plot_data(&self) -> String {
        let mut out = String::from("# log2_N log2_error\n");
        for r in &self.rows {
            let _ = writeln!(out, "{} {}", (r.n_modes as f64).log2(), r.error.log2());
        }
        out
    }

    /// Fixed-width table with one column per level and rows `N`, `error`,
    /// `stderr`, `rate`.
    pub fn table(&self) -> String {
        let mut header = format!("{:<8}", "N");
        let mut errors = format!("{:<8}", "E");
        let mut stderrs = format!("{:<8}", "stderr");
        let mut rates = format!("{:<8}", "rate");
        for r in &self.rows {
            let n = if r.n_modes.is_power_of_two() {
                format!("2^{}", r.n_modes.trailing_zeros())
            } else {
                r.n_modes.to_string()
            };
            let _ = write!(header, "{n:>12}");
            let _ = write!(errors, "{:>12.4}", r.error);
            let flag = if r.low_confidence { "*" } else { "" };
            let _ = write!(stderrs, "{:>12}", format!("{:.4}{flag}", r.stderr));
            match r.rate {
                Some(x) => {
                    let _ = write!(rates, "{x:>12.4}");
                }
                None => {
                    let _ = write!(rates, "{:>12}", "");
                }
            }
        }
        let mut out = format!("{header}\n{errors}\n{stderrs}\n{rates}\n");
        if self.rows.iter().any(|r| r.low_confidence) {
            let _ = writeln!(
                out,
                "* standard error above {:.0}% of the estimate: low confidence, increase the trajectory count",
                LOW_CONFIDENCE_RATIO * 100.0
            );
        }
        out
    }
}

/// Runs [`coupled_error`] at every level and fills in rates between consecutive
/// levels.
pub fn run_study(config: &StudyConfig) -> Result<ConvergenceReport> {
    let start = Instant::now();
    let levels = config.levels()?;
    let mut rows: Vec<ReportRow> = Vec::with_capacity(levels.len());
    for (n, m) in levels {
        let est = coupled_error_with(
            &config.params,
            (n, m),
            config.n_trajectories,
            config.master_seed,
            config.probe,
            CouplingHooks::default(),
        )?;
        let rate = match rows.last() {
            Some(prev) => Some(rate(est.error, prev.error, n, prev.n_modes)?),
            None => None,
        };
        rows.push(ReportRow {
            n_modes: n,
            n_steps: m,
            error: est.error,
            stderr: est.stderr,
            rate,
            low_confidence: est.stderr > LOW_CONFIDENCE_RATIO * est.error,
            moments: est.moments,
        });
    }
    Ok(ConvergenceReport {
        rows,
        metadata: ReportMetadata {
            master_seed: config.master_seed,
            n_trajectories: config.n_trajectories,
            params: config.params.clone(),
            wall_clock_seconds: start.elapsed().as_secs_f64(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinear::InitialCondition;

    #[test]
    fn rate_examples() {
        let r = rate(0.0392, 0.0546, 32, 16).unwrap();
        assert!((r - 0.478).abs() < 1e-3, "{r}");
        assert_eq!(rate(0.03, 0.03, 32, 16).unwrap(), 0.0);
        let r = rate(0.0198, 0.0278, 128, 64).unwrap();
        assert!((r - 0.4896).abs() < 1e-4, "{r}");
        assert!(rate(0.0, 0.1, 32, 16).is_err());
        assert!(rate(0.1, -0.1, 32, 16).is_err());
        assert!(rate(0.1, 0.2, 16, 16).is_err());
    }

    #[test]
    fn zero_noise_zero_start_gives_zero_error() {
        let params = ModelParams {
            initial_condition: InitialCondition::Coefficients(vec![0.0]),
            ..ModelParams::reference()
        };
        let hooks = CouplingHooks {
            zero_noise: true,
            ..Default::default()
        };
        let e = coupled_error_with(&params, (8, 16), 3, 1, false, hooks).unwrap();
        assert_eq!(e.error, 0.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn self_comparison_gives_zero_error() {
        let hooks = CouplingHooks {
            self_comparison: true,
            ..Default::default()
        };
        let e = coupled_error_with(&ModelParams::reference(), (8, 64), 4, 5, false, hooks).unwrap();
        assert_eq!(e.error, 0.0);
    }

    #[test]
    fn config_validation() {
        let mut c = StudyConfig::reference(1);
        c.mode_counts = vec![16];
        assert!(run_study(&c).is_err());
        c.mode_counts = vec![16, 24];
        assert!(c.levels().is_err());
        c.mode_counts = vec![32, 16];
        assert!(c.levels().is_err());
        c.mode_counts = vec![4, 8];
        c.step_rule = StepRule::Explicit(vec![16, 33]);
        assert!(c.levels().is_err());
        c.step_rule = StepRule::Explicit(vec![16, 32]);
        assert_eq!(c.levels().unwrap(), vec![(4, 16), (8, 32)]);
        c.step_rule = StepRule::Squared;
        assert_eq!(c.levels().unwrap(), vec![(4, 16), (8, 64)]);
    }

    #[test]
    fn report_formats() {
        let mut c = StudyConfig::reference(3);
        c.mode_counts = vec![4, 8];
        c.n_trajectories = 4;
        let r = run_study(&c).unwrap();
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert!(lines.next().unwrap().ends_with(','));
        assert_eq!(lines.next().unwrap().split(',').count(), 5);
        assert!(r.rows[0].rate.is_none() && r.rows[1].rate.is_some());
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["metadata"]["master_seed"], 3);
        assert_eq!(r.plot_data().lines().count(), 3);
        assert_eq!(
            r.table().lines().next().unwrap().split_whitespace().count(),
            3
        );
    }
}

//! Diagnostics computed from walk trajectories: probability distributions,
//! spreading moments, survival amplitude, Cesàro averages, and the Fourier
//! transform of the survival amplitude.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::fitting::FitResult;
use crate::spectral::top_grid_peaks;
use crate::walk::{Trajectory, WalkState};

/// Sitewise probabilities `p_x = |a_up|^2 + |a_down|^2` over `x in [-N, N]`.
#[derive(Debug, Clone)]
pub struct ProbabilityDistribution {
    p: Vec<f64>,
    half_width: usize,
}

impl ProbabilityDistribution {
    pub fn from_probabilities(half_width: usize, p: Vec<f64>) -> Result<ProbabilityDistribution> {
        if p.len() != 2 * half_width + 1 {
            return Err(invalid(format!(
                "distribution length {} does not match lattice size {}",
                p.len(),
                2 * half_width + 1
            )));
        }
        Ok(ProbabilityDistribution { p, half_width })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Site coordinate of array index `i`.
    pub fn site_of_index(&self, i: usize) -> i64 {
        i as i64 - self.half_width as i64
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    /// First moment `<x>`.
    pub fn mean(&self) -> f64 {
        self.p
            .iter()
            .enumerate()
            .map(|(i, p)| self.site_of_index(i) as f64 * p)
            .sum()
    }

    /// Variance `<x^2> - <x>^2`.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let second: f64 = self
            .p
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let x = self.site_of_index(i) as f64;
                x * x * p
            })
            .sum();
        second - mean * mean
    }

    pub fn sigma(&self) -> f64 {
        self.variance().max(0.0).sqrt()
    }
}

/// Sitewise modulus-squared sum over spin.
pub fn probability_distribution(state: &WalkState) -> ProbabilityDistribution {
    ProbabilityDistribution {
        p: state.probabilities(),
        half_width: state.half_width(),
    }
}

/// Mean, variance, and standard deviation of the walker position per step.
#[derive(Debug, Clone)]
pub struct SpreadSeries {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl SpreadSeries {
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }
}

/// Position moments along a trajectory that recorded distributions.
pub fn spread(trajectory: &Trajectory) -> Result<SpreadSeries> {
    let distributions = trajectory
        .distributions
        .as_ref()
        .ok_or_else(|| invalid("trajectory did not record distributions"))?;
    let half_width = trajectory.half_width;
    let mut mean = Vec::with_capacity(distributions.len());
    let mut variance = Vec::with_capacity(distributions.len());
    let mut sigma = Vec::with_capacity(distributions.len());
    for p in distributions {
        let dist = ProbabilityDistribution::from_probabilities(half_width, p.clone())?;
        mean.push(dist.mean());
        variance.push(dist.variance());
        sigma.push(dist.sigma());
    }
    Ok(SpreadSeries {
        mean,
        variance,
        sigma,
    })
}

/// Survival amplitudes `nu(t) = <psi(0)|psi(t)>`, `t = 0..T`.
#[derive(Debug, Clone)]
pub struct EchoSeries {
    nu: Vec<Complex64>,
}

impl EchoSeries {
    pub fn from_amplitudes(nu: Vec<Complex64>) -> Result<EchoSeries> {
        if nu.is_empty() {
            return Err(invalid("empty survival series"));
        }
        Ok(EchoSeries { nu })
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.nu
    }

    /// Loschmidt echoes `|nu(t)|^2`.
    pub fn echoes(&self) -> Vec<f64> {
        self.nu.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Mean of `|nu(t)|` over the trailing `fraction` of the series.
    pub fn tail_mean_abs(&self, fraction: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&fraction) || fraction == 0.0 {
            return Err(invalid("tail fraction must lie in (0, 1]"));
        }
        let count = ((self.nu.len() as f64 * fraction).ceil() as usize).max(1);
        let tail = &self.nu[self.nu.len() - count..];
        Ok(tail.iter().map(|z| z.norm()).sum::<f64>() / count as f64)
    }
}

/// Survival amplitude along a trajectory.
///
/// Prefers recomputing from state snapshots against the supplied initial
/// state; falls back to the series accumulated by `evolve` (which used the
/// state the evolution started from).
pub fn survival_series(trajectory: &Trajectory, initial: &WalkState) -> Result<EchoSeries> {
    if let Some(states) = trajectory.states.as_ref() {
        let nu = states
            .iter()
            .map(|s| initial.inner(s))
            .collect::<Result<Vec<_>>>()?;
        return EchoSeries::from_amplitudes(nu);
    }
    if let Some(nu) = trajectory.survival.as_ref() {
        return EchoSeries::from_amplitudes(nu.clone());
    }
    Err(invalid(
        "trajectory recorded neither states nor survival amplitudes",
    ))
}

/// Running time averages `<|nu|^2>_T = (1/T) sum_{t=0}^{T-1} |nu(t)|^2`,
/// for `T = 1..=len`.
#[derive(Debug, Clone)]
pub struct CesaroSeries {
    values: Vec<f64>,
}

impl CesaroSeries {
    /// Build from raw values; only finiteness is checked, so synthetic
    /// series for fitting tests may exceed the [0, 1] range of walk data.
    pub fn from_values(values: Vec<f64>) -> Result<CesaroSeries> {
        if values.is_empty() {
            return Err(invalid("empty Cesàro series"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("Cesàro values must be finite"));
        }
        Ok(CesaroSeries { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at averaging length `T` (1-based).
    pub fn value_at(&self, t: usize) -> Option<f64> {
        if t == 0 {
            None
        } else {
            self.values.get(t - 1).copied()
        }
    }
}

/// Prefix means of `|nu(t)|^2`, computed incrementally.
pub fn cesaro_average(echo: &EchoSeries) -> CesaroSeries {
    let mut values = Vec::with_capacity(echo.len());
    let mut acc = 0.0f64;
    for (t, nu) in echo.amplitudes().iter().enumerate() {
        acc += nu.norm_sqr();
        values.push(acc / (t + 1) as f64);
    }
    CesaroSeries { values }
}

/// Discrete Fourier transform of the survival amplitude on the frequency
/// grid `u = 2 pi m / T` folded into `(-pi, pi]`.
#[derive(Debug, Clone)]
pub struct EchoSpectrum {
    u: Vec<f64>,
    amplitudes: Vec<Complex64>,
}

impl EchoSpectrum {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.u
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm()).collect()
    }

    /// Strongest local maxima of `|nu~(u)|`, strongest first.
    pub fn top_peaks(&self, count: usize) -> Vec<(f64, f64)> {
        top_grid_peaks(&self.u, &self.magnitudes(), count)
    }
}

/// Fourier transform `nu~(u) = (1/T) sum_t nu(t) exp(+i u t)` over
/// `t = 0..T-1`.
///
/// The `+i u t` sign makes a pure phase `exp(-i eps0 t)` peak at
/// `u = eps0`, so echo-spectrum peaks line up with quasi-energies and the
/// DOS axis directly.
pub fn echo_fourier(echo: &EchoSeries) -> Result<EchoSpectrum> {
    let t_len = echo.len();
    if t_len < 2 {
        return Err(invalid("echo Fourier transform needs at least 2 samples"));
    }
    let nu = echo.amplitudes();
    let lo = -((t_len as i64 - 1) / 2);
    let mut u_values = Vec::with_capacity(t_len);
    let mut amplitudes = Vec::with_capacity(t_len);
    for m in lo..=(lo + t_len as i64 - 1) {
        let u = 2.0 * PI * m as f64 / t_len as f64;
        let mut acc = Complex64::ZERO;
        for (t, v) in nu.iter().enumerate() {
            acc += v * Complex64::from_polar(1.0, u * t as f64);
        }
        u_values.push(u);
        amplitudes.push(acc / t_len as f64);
    }
    Ok(EchoSpectrum {
        u: u_values,
        amplitudes,
    })
}

/// Spectral-type indicators derived from the survival diagnostics.
///
/// `survival_vanishes` follows the long-time absolutely-continuous
/// necessary condition (tail mean of `|nu|` below the threshold);
/// `cesaro_decays` follows the pure-point exclusion (best decay fit tends
/// to zero). Their combination — survival persisting while the Cesàro
/// average decays — is the singular-continuous verdict.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralClassReport {
    pub series_length: usize,
    pub tail_fraction: f64,
    pub tail_mean_abs_nu: f64,
    pub tail_threshold: f64,
    pub survival_vanishes: bool,
    pub cesaro_decays: bool,
    pub singular_continuous: bool,
    /// The fit the decay verdict is based on, if any admissible fit exists.
    pub decay_fit: Option<FitResult>,
}

/// Combine the tail of the survival series with the fitted Cesàro decay.
///
/// The threshold is caller-provided; a scale-free choice is a small
/// multiple of the tail mean of a reference walk known to lose its
/// survival amplitude.
pub fn spectral_class_report(
    echo: &EchoSeries,
    cesaro: &CesaroSeries,
    fits: &[FitResult],
    tail_fraction: f64,
    tail_threshold: f64,
) -> Result<SpectralClassReport> {
    if echo.len() < 100 || cesaro.len() < 100 {
        return Err(invalid(
            "spectral classification needs series of at least 100 steps",
        ));
    }
    if !(tail_threshold.is_finite() && tail_threshold >= 0.0) {
        return Err(invalid("tail threshold must be finite and non-negative"));
    }
    let tail_mean = echo.tail_mean_abs(tail_fraction)?;
    let survival_vanishes = tail_mean < tail_threshold;

    let decay_fit = fits
        .iter()
        .filter(|f| !f.degenerate)
        .min_by(|a, b| a.residual_rms.total_cmp(&b.residual_rms))
        .cloned();
    let cesaro_decays = decay_fit.as_ref().is_some_and(|f| f.predicts_decay());

    Ok(SpectralClassReport {
        series_length: echo.len(),
        tail_fraction,
        tail_mean_abs_nu: tail_mean,
        tail_threshold,
        survival_vanishes,
        cesaro_decays,
        singular_continuous: !survival_vanishes && cesaro_decays,
        decay_fit,
    })
}

//! The four experiment commands. Each takes a resolved config, writes its
//! data files into the output directory, and returns through the shared
//! manifest writer in `main`.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use qwalk_core::fitting::{self, FitWindow};
use qwalk_core::observables::{
    cesaro_average, echo_fourier, probability_distribution, spectral_class_report, spread,
    EchoSeries,
};
use qwalk_core::sequences::{self, SequenceKind};
use qwalk_core::spectral::{
    assemble_step_operator, asymptotic_operator, diffraction_spectrum, dos, quasi_energies,
    DensityOfStates, QuasiEnergySpectrum,
};
use qwalk_core::walk::{
    evolve, initial_state, Boundary, CoinAngle, CoinConfig, CoinMode, RecordSpec, Trajectory,
};

use crate::config::ExperimentConfig;
use crate::output::{fmt_float, gnuplot_script, write_manifest, OutputSet};

/// Tail fraction of the survival series used for the vanishing indicator.
const TAIL_FRACTION: f64 = 0.1;
/// The vanishing threshold is this multiple of the two-periodic reference
/// tail, which decays to zero and therefore sets the resolvable scale.
const TAIL_REFERENCE_FACTOR: f64 = 3.0;
/// Fits use the trailing 80% of the Cesàro series.
const FIT_TAIL_FRACTION: f64 = 0.8;
/// Number of diffraction peaks tabulated per sequence.
const PEAK_TABLE_SIZE: usize = 5;

pub fn run(cfg: &ExperimentConfig, out_dir: &Path, gnuplot: bool) -> Result<()> {
    let mut out = OutputSet::create(out_dir)?;
    match cfg.experiment {
        crate::config::Experiment::Spread => run_spread(cfg, &mut out)?,
        crate::config::Experiment::Spectrum => run_spectrum(cfg, &mut out)?,
        crate::config::Experiment::Survival => run_survival(cfg, &mut out)?,
        crate::config::Experiment::Diffraction => run_diffraction(cfg, &mut out)?,
    }
    if gnuplot {
        let script = gnuplot_script(cfg.experiment.name(), &out.files().to_vec());
        out.write_text("plot.gp", &script)?;
    }
    write_manifest(&mut out, cfg)
}

fn coin_angle(theta: f64) -> Result<CoinAngle> {
    CoinAngle::new(theta).map_err(|e| anyhow!("{e}"))
}

/// Build the coin configuration for one sequence kind under the config's
/// mode, generating a sequence of the right length.
fn coin_config_for(cfg: &ExperimentConfig, kind: SequenceKind, steps: usize) -> Result<CoinConfig> {
    let th1 = coin_angle(cfg.theta1)?;
    let th2 = coin_angle(cfg.theta2)?;
    let mode = cfg.mode.ok_or_else(|| anyhow!("mode is required"))?;
    Ok(match mode {
        CoinMode::Homogeneous => CoinConfig::homogeneous(th1),
        CoinMode::Spatial => {
            let seq = sequences::generate(kind, cfg.lattice_len(), cfg.seed)?;
            CoinConfig::spatial(th1, th2, seq)
        }
        CoinMode::Temporal => {
            let seq = sequences::generate(kind, steps, cfg.seed)?;
            CoinConfig::temporal(th1, th2, seq)
        }
    })
}

fn required_kind(cfg: &ExperimentConfig) -> Result<SequenceKind> {
    if cfg.mode == Some(CoinMode::Homogeneous) {
        // Any kind works; the sequence is never consulted.
        return Ok(cfg.sequence.unwrap_or(SequenceKind::TwoPeriodic));
    }
    cfg.sequence
        .ok_or_else(|| anyhow!("`sequence` is required for this run"))
}

fn evolve_with(cfg: &ExperimentConfig, kind: SequenceKind, record: RecordSpec) -> Result<Trajectory> {
    let config = coin_config_for(cfg, kind, cfg.steps)?;
    let initial = initial_state(cfg.half_width, cfg.initial)?;
    evolve(
        &config,
        cfg.half_width,
        cfg.steps,
        Boundary::Periodic,
        &initial,
        record,
    )
    .context("evolution failed")
}

// --- spread ---------------------------------------------------------------

fn run_spread(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    if cfg.sweep {
        return run_spread_sweep(cfg, out);
    }
    let kind = required_kind(cfg)?;
    let record = RecordSpec {
        distributions: true,
        states: false,
        survival: false,
    };
    let traj = evolve_with(cfg, kind, record)?;

    let final_dist = probability_distribution(&traj.final_state);
    out.write_csv(
        "distribution.csv",
        &["t", "x", "p"],
        final_dist
            .probabilities()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                vec![
                    cfg.steps.to_string(),
                    final_dist.site_of_index(i).to_string(),
                    fmt_float(*p),
                ]
            }),
    )?;

    #[derive(serde::Serialize)]
    struct DistributionDump {
        t: usize,
        x: Vec<i64>,
        p: Vec<f64>,
    }
    out.write_json(
        "distribution.json",
        &DistributionDump {
            t: cfg.steps,
            x: (0..final_dist.probabilities().len())
                .map(|i| final_dist.site_of_index(i))
                .collect(),
            p: final_dist.probabilities().to_vec(),
        },
    )?;

    let series = spread(&traj).map_err(|e| anyhow!("{e}"))?;
    out.write_csv(
        "spread.csv",
        &["t", "mean", "sigma"],
        (0..series.len()).map(|t| {
            vec![
                t.to_string(),
                fmt_float(series.mean[t]),
                fmt_float(series.sigma[t]),
            ]
        }),
    )?;

    if cfg.dump_state {
        let state = &traj.final_state;
        out.write_csv(
            "state.csv",
            &["x", "re_up", "im_up", "re_down", "im_down"],
            (0..state.lattice_len()).map(|i| {
                vec![
                    state.site_of_index(i).to_string(),
                    fmt_float(state.up()[i].re),
                    fmt_float(state.up()[i].im),
                    fmt_float(state.down()[i].re),
                    fmt_float(state.down()[i].im),
                ]
            }),
        )?;
    }
    Ok(())
}

fn run_spread_sweep(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let kinds = SequenceKind::deterministic();
    let points = cfg.theta2_points;
    let grid: Vec<f64> = (0..points)
        .map(|j| 2.0 * PI * j as f64 / points as f64)
        .collect();

    // One independent walk per (grid point, sequence); order is fixed by
    // the index so the parallel sweep emits deterministically.
    let sigmas: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|theta2| -> Result<Vec<f64>> {
            let mut point_cfg = cfg.clone();
            point_cfg.theta2 = *theta2;
            kinds
                .iter()
                .map(|kind| {
                    let traj = evolve_with(&point_cfg, *kind, RecordSpec::none())?;
                    Ok(probability_distribution(&traj.final_state).sigma())
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    out.write_csv(
        "sweep_sigma.csv",
        &[
            "theta2",
            "two_periodic",
            "fibonacci",
            "thue_morse",
            "rudin_shapiro",
        ],
        grid.iter().zip(&sigmas).map(|(theta2, row)| {
            let mut cells = vec![fmt_float(*theta2)];
            cells.extend(row.iter().map(|s| fmt_float(*s)));
            cells
        }),
    )
}

// --- spectrum ---------------------------------------------------------------

fn spectrum_rows(spectrum: &QuasiEnergySpectrum) -> Vec<Vec<String>> {
    spectrum
        .energies()
        .iter()
        .zip(spectrum.eigenvalues())
        .enumerate()
        .map(|(n, (eps, lambda))| {
            vec![
                n.to_string(),
                fmt_float(lambda.re),
                fmt_float(lambda.im),
                fmt_float(*eps),
            ]
        })
        .collect()
}

fn dos_rows(hist: &DensityOfStates) -> Vec<Vec<String>> {
    hist.centers()
        .iter()
        .zip(hist.weights())
        .map(|(c, w)| vec![fmt_float(*c), fmt_float(*w)])
        .collect()
}

fn run_spectrum(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let header = ["n", "re_lambda", "im_lambda", "epsilon"];
    let dos_header = ["bin_center", "weight"];
    match cfg.mode {
        Some(CoinMode::Temporal) => {
            // Instantaneous spectra of the two coins, then the accumulated
            // product at the requested number of steps.
            for (name, theta) in [("spectrum_theta1.csv", cfg.theta1), ("spectrum_theta2.csv", cfg.theta2)] {
                let op = assemble_step_operator(
                    &CoinConfig::homogeneous(coin_angle(theta)?),
                    cfg.half_width,
                    Boundary::Periodic,
                )
                .map_err(|e| anyhow!("{e}"))?;
                let spectrum = quasi_energies(&op).map_err(|e| anyhow!("{e}"))?;
                out.write_csv(name, &header, spectrum_rows(&spectrum))?;
            }
            let kind = required_kind(cfg)?;
            let config = coin_config_for(cfg, kind, cfg.asymptotic_steps)?;
            let op = asymptotic_operator(&config, cfg.half_width, cfg.asymptotic_steps)
                .map_err(|e| anyhow!("{e}"))?;
            let spectrum = quasi_energies(&op)
                .map_err(|e| anyhow!("{} failed: {e}", op_provenance(cfg.asymptotic_steps)))?;
            out.write_csv("asymptotic_spectrum.csv", &header, spectrum_rows(&spectrum))?;
            let hist = dos(&spectrum, cfg.t_f).map_err(|e| anyhow!("{e}"))?;
            out.write_csv("asymptotic_dos.csv", &dos_header, dos_rows(&hist))?;
        }
        Some(_) => {
            let kind = required_kind(cfg)?;
            let config = coin_config_for(cfg, kind, cfg.steps)?;
            let op = assemble_step_operator(&config, cfg.half_width, Boundary::Periodic)
                .map_err(|e| anyhow!("{e}"))?;
            let spectrum =
                quasi_energies(&op).map_err(|e| anyhow!("single-step operator: {e}"))?;
            out.write_csv("spectrum.csv", &header, spectrum_rows(&spectrum))?;
            let hist = dos(&spectrum, cfg.t_f).map_err(|e| anyhow!("{e}"))?;
            out.write_csv("dos.csv", &dos_header, dos_rows(&hist))?;
        }
        None => bail!("`mode` is required for spectrum"),
    }
    Ok(())
}

fn op_provenance(steps: usize) -> String {
    format!("accumulated temporal product U({steps})")
}

// --- survival ---------------------------------------------------------------

fn survival_echo(cfg: &ExperimentConfig, kind: SequenceKind) -> Result<EchoSeries> {
    let traj = evolve_with(cfg, kind, RecordSpec::survival())?;
    let nu = traj
        .survival
        .ok_or_else(|| anyhow!("survival series missing from trajectory"))?;
    EchoSeries::from_amplitudes(nu).map_err(|e| anyhow!("{e}"))
}

fn run_survival(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let kind = required_kind(cfg)?;
    let echo_full = survival_echo(cfg, kind)?;

    out.write_csv(
        "echo.csv",
        &["t", "re_nu", "im_nu", "echo"],
        echo_full.amplitudes().iter().enumerate().map(|(t, nu)| {
            vec![
                t.to_string(),
                fmt_float(nu.re),
                fmt_float(nu.im),
                fmt_float(nu.norm_sqr()),
            ]
        }),
    )?;

    // Derived series use the first T samples, t = 0..T-1, so that the
    // Cesàro value at averaging length T covers exactly those steps.
    let echo = EchoSeries::from_amplitudes(echo_full.amplitudes()[..cfg.steps].to_vec())
        .map_err(|e| anyhow!("{e}"))?;
    let cesaro = cesaro_average(&echo);
    out.write_csv(
        "cesaro.csv",
        &["T", "value"],
        cesaro
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| vec![(i + 1).to_string(), fmt_float(*v)]),
    )?;

    let nu_spectrum = echo_fourier(&echo).map_err(|e| anyhow!("{e}"))?;
    out.write_csv(
        "echo_spectrum.csv",
        &["u", "amplitude"],
        nu_spectrum
            .frequencies()
            .iter()
            .zip(nu_spectrum.magnitudes())
            .map(|(u, a)| vec![fmt_float(*u), fmt_float(a)]),
    )?;

    let window = FitWindow::tail_fraction(cesaro.len(), FIT_TAIL_FRACTION);
    let selection = fitting::model_select(&cesaro, window).map_err(|e| anyhow!("{e}"))?;
    out.write_json("fits.json", &selection)?;

    // Reference-relative vanishing threshold: the two-periodic walk at the
    // same parameters loses its survival amplitude, so its tail sets the
    // scale against which "non-vanishing" is judged.
    let reference_tail = if kind == SequenceKind::TwoPeriodic {
        echo.tail_mean_abs(TAIL_FRACTION).map_err(|e| anyhow!("{e}"))?
    } else {
        let reference = survival_echo(cfg, SequenceKind::TwoPeriodic)?;
        let reference = EchoSeries::from_amplitudes(reference.amplitudes()[..cfg.steps].to_vec())
            .map_err(|e| anyhow!("{e}"))?;
        reference.tail_mean_abs(TAIL_FRACTION).map_err(|e| anyhow!("{e}"))?
    };
    let report = spectral_class_report(
        &echo,
        &cesaro,
        &selection.candidates,
        TAIL_FRACTION,
        TAIL_REFERENCE_FACTOR * reference_tail,
    )
    .map_err(|e| anyhow!("{e}"))?;
    out.write_json("spectral_class.json", &report)?;
    Ok(())
}

// --- diffraction ---------------------------------------------------------------

fn run_diffraction(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let mut kinds: Vec<SequenceKind> = SequenceKind::deterministic().to_vec();
    if cfg.sequence == Some(SequenceKind::Random) {
        kinds.push(SequenceKind::Random);
    }
    let mut peak_rows: Vec<Vec<String>> = Vec::new();
    for kind in kinds {
        let word = sequences::generate(kind, cfg.lattice_len(), cfg.seed)?;
        let spectrum = diffraction_spectrum(&word.weights());
        let name = format!("diffraction_{}.csv", kind.label().replace('-', "_"));
        out.write_csv(
            &name,
            &["q", "re_f", "im_f", "intensity"],
            spectrum
                .q_values()
                .iter()
                .zip(spectrum.amplitudes())
                .map(|(q, f)| {
                    vec![
                        fmt_float(*q),
                        fmt_float(f.re),
                        fmt_float(f.im),
                        fmt_float(f.norm_sqr()),
                    ]
                }),
        )?;
        for (q, intensity) in spectrum.top_peaks(PEAK_TABLE_SIZE) {
            peak_rows.push(vec![
                kind.label().to_string(),
                fmt_float(q),
                fmt_float(intensity),
            ]);
        }
    }
    out.write_csv(
        "diffraction_peaks.csv",
        &["sequence", "q", "intensity"],
        peak_rows,
    )
}

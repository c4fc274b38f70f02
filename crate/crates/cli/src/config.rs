//! Flat key-value experiment configuration, parsed strictly: unknown keys,
//! duplicate keys, and malformed values are errors.
//!
//! Recognized keys (all optional unless the chosen command needs them):
//!
//! | key               | type    | default            | meaning                                   |
//! |-------------------|---------|--------------------|-------------------------------------------|
//! | `sequence`        | string  | —                  | two-periodic, fibonacci, thue-morse, rudin-shapiro, random |
//! | `mode`            | string  | —                  | homogeneous, spatial, temporal             |
//! | `theta1`          | float   | pi/4               | coin angle of letter A (radians)           |
//! | `theta2`          | float   | pi/6               | coin angle of letter B (radians)           |
//! | `steps`           | integer | 500                | number of walk steps T                     |
//! | `half_width`      | integer | steps + 1          | lattice half-width N (L = 2N + 1)          |
//! | `initial`         | string  | per command        | up or symmetric                            |
//! | `seed`            | integer | 0                  | seed of the random sequence generator      |
//! | `t_f`             | integer | 500                | DOS bin count (bin width 2 pi / t_f)       |
//! | `sweep`           | bool    | false              | spread only: sweep theta2 over a grid      |
//! | `theta2_points`   | integer | 128                | sweep grid size over [0, 2 pi)             |
//! | `asymptotic_steps`| integer | steps              | spectrum, temporal mode: product length    |
//! | `dump_state`      | bool    | false              | spread only: emit the final state table    |
//!
//! `initial` defaults to `symmetric` for `spread` and `diffraction` and to
//! `up` for `survival` and `spectrum`. Lines starting with `#` and blank
//! lines are ignored.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt::Write as _;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use qwalk_core::sequences::SequenceKind;
use qwalk_core::walk::{CoinMode, SpinSpec};

const KNOWN_KEYS: &[&str] = &[
    "sequence",
    "mode",
    "theta1",
    "theta2",
    "steps",
    "half_width",
    "initial",
    "seed",
    "t_f",
    "sweep",
    "theta2_points",
    "asymptotic_steps",
    "dump_state",
];

/// Which experiment a config is being resolved for; fixes the
/// per-command defaults and required keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Spread,
    Spectrum,
    Survival,
    Diffraction,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Spread => "spread",
            Experiment::Spectrum => "spectrum",
            Experiment::Survival => "survival",
            Experiment::Diffraction => "diffraction",
        }
    }

    fn default_initial(&self) -> SpinSpec {
        match self {
            Experiment::Spread | Experiment::Diffraction => SpinSpec::Symmetric,
            Experiment::Survival | Experiment::Spectrum => SpinSpec::Up,
        }
    }
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub sequence: Option<SequenceKind>,
    pub mode: Option<CoinMode>,
    pub theta1: f64,
    pub theta2: f64,
    pub steps: usize,
    pub half_width: usize,
    pub initial: SpinSpec,
    pub seed: u64,
    pub t_f: usize,
    pub sweep: bool,
    pub theta2_points: usize,
    pub asymptotic_steps: usize,
    pub dump_state: bool,
}

impl ExperimentConfig {
    pub fn lattice_len(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Canonical text form: sorted `key = value` lines of every resolved
    /// setting. Used for the manifest and its hash.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        let mut push = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        push("asymptotic_steps", self.asymptotic_steps.to_string());
        push("dump_state", self.dump_state.to_string());
        push("half_width", self.half_width.to_string());
        push(
            "initial",
            match self.initial {
                SpinSpec::Up => "up".into(),
                SpinSpec::Symmetric => "symmetric".into(),
            },
        );
        push(
            "mode",
            self.mode
                .map(|m| {
                    match m {
                        CoinMode::Homogeneous => "homogeneous",
                        CoinMode::Spatial => "spatial",
                        CoinMode::Temporal => "temporal",
                    }
                    .to_string()
                })
                .unwrap_or_else(|| "unset".into()),
        );
        push("seed", self.seed.to_string());
        push(
            "sequence",
            self.sequence
                .map(|k| k.label().to_string())
                .unwrap_or_else(|| "unset".into()),
        );
        push("steps", self.steps.to_string());
        push("sweep", self.sweep.to_string());
        push("t_f", self.t_f.to_string());
        push("theta1", format!("{:.17e}", self.theta1));
        push("theta2", format!("{:.17e}", self.theta2));
        push("theta2_points", self.theta2_points.to_string());
        s
    }

    /// Resolved settings as string pairs, for the manifest.
    pub fn as_pairs(&self) -> BTreeMap<String, String> {
        self.canonical_text()
            .lines()
            .filter_map(|line| {
                let (k, v) = line.split_once(" = ")?;
                Some((k.to_string(), v.to_string()))
            })
            .collect()
    }
}

/// Parse the flat `key = value` text into a map, rejecting unknown and
/// duplicate keys.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`, got `{raw}`", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            bail!("line {}: unknown config key `{key}`", lineno + 1);
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            bail!("line {}: duplicate config key `{key}`", lineno + 1);
        }
    }
    Ok(map)
}

/// Apply `--override key=value` pairs on top of parsed config pairs.
pub fn apply_overrides(map: &mut BTreeMap<String, String>, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("override `{item}` is not of the form key=value"))?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            bail!("unknown override key `{key}`");
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(())
}

fn parse_value<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|e| anyhow!("config key `{key}`: cannot parse `{raw}`: {e}")),
    }
}

fn parse_bool(map: &BTreeMap<String, String>, key: &str) -> Result<Option<bool>> {
    match map.get(key).map(String::as_str) {
        None => Ok(None),
        Some("true") => Ok(Some(true)),
        Some("false") => Ok(Some(false)),
        Some(other) => bail!("config key `{key}`: expected true or false, got `{other}`"),
    }
}

/// Resolve parsed pairs into a validated [`ExperimentConfig`].
pub fn resolve(
    map: &BTreeMap<String, String>,
    experiment: Experiment,
) -> Result<ExperimentConfig> {
    let sequence = match map.get("sequence") {
        None => None,
        Some(raw) => Some(
            raw.parse::<SequenceKind>()
                .map_err(|e| anyhow!("config key `sequence`: {e}"))?,
        ),
    };
    let mode = match map.get("mode") {
        None => None,
        Some(raw) => Some(
            raw.parse::<CoinMode>()
                .map_err(|e| anyhow!("config key `mode`: {e}"))?,
        ),
    };
    let theta1 = parse_value::<f64>(map, "theta1")?.unwrap_or(FRAC_PI_4);
    let theta2 = parse_value::<f64>(map, "theta2")?.unwrap_or(PI / 6.0);
    let steps = parse_value::<usize>(map, "steps")?.unwrap_or(500);
    let half_width = parse_value::<usize>(map, "half_width")?.unwrap_or(steps + 1);
    let initial = match map.get("initial") {
        None => experiment.default_initial(),
        Some(raw) => raw
            .parse::<SpinSpec>()
            .map_err(|e| anyhow!("config key `initial`: {e}"))?,
    };
    let seed = parse_value::<u64>(map, "seed")?.unwrap_or(0);
    let t_f = parse_value::<usize>(map, "t_f")?.unwrap_or(500);
    let sweep = parse_bool(map, "sweep")?.unwrap_or(false);
    let theta2_points = parse_value::<usize>(map, "theta2_points")?.unwrap_or(128);
    let asymptotic_steps = parse_value::<usize>(map, "asymptotic_steps")?.unwrap_or(steps);
    let dump_state = parse_bool(map, "dump_state")?.unwrap_or(false);

    let config = ExperimentConfig {
        experiment,
        sequence,
        mode,
        theta1,
        theta2,
        steps,
        half_width,
        initial,
        seed,
        t_f,
        sweep,
        theta2_points,
        asymptotic_steps,
        dump_state,
    };
    validate(&config)?;
    Ok(config)
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    if !cfg.theta1.is_finite() || !cfg.theta2.is_finite() {
        bail!("coin angles must be finite");
    }
    if cfg.steps == 0 {
        bail!("steps must be at least 1");
    }
    if cfg.half_width == 0 {
        bail!("half_width must be at least 1");
    }
    if cfg.t_f < 2 {
        bail!("t_f must be at least 2");
    }
    match cfg.experiment {
        Experiment::Diffraction => {}
        Experiment::Spread if cfg.sweep => {
            if cfg.theta2_points < 2 {
                bail!("theta2_points must be at least 2");
            }
            mode_required(cfg)?;
        }
        _ => {
            mode_required(cfg)?;
            if cfg.mode != Some(CoinMode::Homogeneous) && cfg.sequence.is_none() {
                bail!(
                    "`sequence` is required for {} in spatial/temporal mode",
                    cfg.experiment.name()
                );
            }
        }
    }
    Ok(())
}

fn mode_required(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.mode.is_none() {
        bail!("`mode` is required for {}", cfg.experiment.name());
    }
    Ok(())
}

/// Read, override, and resolve a config file in one go.
pub fn load(
    path: &std::path::Path,
    overrides: &[String],
    seed_flag: Option<u64>,
    experiment: Experiment,
) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut map = parse_pairs(&text)?;
    apply_overrides(&mut map, overrides)?;
    if let Some(seed) = seed_flag {
        map.insert("seed".into(), seed.to_string());
    }
    resolve(&map, experiment)
}

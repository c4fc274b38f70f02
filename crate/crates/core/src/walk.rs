//! Walker state and single-step evolution on the finite lattice
//! `x in [-N, N]`, `L = 2N + 1`.
//!
//! A step applies the 2x2 coin rotation at every site and then shifts the
//! spin-up amplitude one site to the left and the spin-down amplitude one
//! site to the right. Under the periodic boundary the step is exactly
//! unitary; the open-truncated boundary drops amplitude shifted past the
//! edges and is sub-unitary.
//!
//! The state is stored as two contiguous length-L arrays (up, down); a step
//! is an in-place rotation followed by an in-place rotate-shift, O(L) per
//! step, without materializing the 2L x 2L matrix.

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::sequences::{Letter, LetterString};

/// Coin rotation angle in radians. Any finite value is allowed; the
/// trigonometric periodicity is handled by `cos`/`sin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoinAngle(f64);

impl CoinAngle {
    pub fn new(theta: f64) -> Result<CoinAngle> {
        if !theta.is_finite() {
            return Err(invalid(format!("coin angle must be finite, got {theta}")));
        }
        Ok(CoinAngle(theta))
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

/// The coin rotation `[[cos t, -sin t], [sin t, cos t]]` as a dense 2x2
/// matrix; real orthogonal with determinant 1.
pub fn coin_matrix(theta: CoinAngle) -> Array2<Complex64> {
    let (c, s) = coin_entries(theta.radians());
    let re = |v: f64| Complex64::new(v, 0.0);
    Array2::from_shape_vec((2, 2), vec![re(c), re(-s), re(s), re(c)]).expect("2x2 shape")
}

pub(crate) fn coin_entries(theta: f64) -> (f64, f64) {
    (theta.cos(), theta.sin())
}

/// Boundary handling of the conditional shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Shift wraps `x = -N` onto `x = N`; evolution exactly unitary.
    Periodic,
    /// Amplitude shifted past an edge is dropped; evolution sub-unitary.
    OpenTruncated,
}

/// Spin component of the internal degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Up,
    Down,
}

/// Initial spin content of a walker localized at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinSpec {
    /// `|up>`.
    Up,
    /// `(|up> + i |down>)/sqrt(2)`, the balanced choice.
    Symmetric,
}

impl std::str::FromStr for SpinSpec {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "up" => Ok(SpinSpec::Up),
            "symmetric" => Ok(SpinSpec::Symmetric),
            other => Err(invalid(format!("unknown initial spin `{other}`"))),
        }
    }
}

/// Complex amplitude field over (spin ⊗ position).
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    up: Vec<Complex64>,
    down: Vec<Complex64>,
    half_width: usize,
}

impl WalkState {
    /// Zero state on the lattice `[-N, N]`.
    pub fn zero(half_width: usize) -> WalkState {
        let l = 2 * half_width + 1;
        WalkState {
            up: vec![Complex64::ZERO; l],
            down: vec![Complex64::ZERO; l],
            half_width,
        }
    }

    /// Build from explicit amplitude arrays of equal odd-compatible length.
    pub fn from_amplitudes(
        half_width: usize,
        up: Vec<Complex64>,
        down: Vec<Complex64>,
    ) -> Result<WalkState> {
        let l = 2 * half_width + 1;
        if up.len() != l || down.len() != l {
            return Err(invalid(format!(
                "amplitude arrays must have length {l}, got {} and {}",
                up.len(),
                down.len()
            )));
        }
        Ok(WalkState {
            up,
            down,
            half_width,
        })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Number of lattice sites, `L = 2N + 1`.
    pub fn lattice_len(&self) -> usize {
        self.up.len()
    }

    /// Word/array index of site `x`, or `None` outside `[-N, N]`.
    pub fn site_index(&self, x: i64) -> Option<usize> {
        let n = self.half_width as i64;
        if x < -n || x > n {
            None
        } else {
            Some((x + n) as usize)
        }
    }

    /// Site coordinate of array index `i`.
    pub fn site_of_index(&self, i: usize) -> i64 {
        i as i64 - self.half_width as i64
    }

    pub fn amplitude(&self, spin: Spin, x: i64) -> Option<Complex64> {
        let i = self.site_index(x)?;
        Some(match spin {
            Spin::Up => self.up[i],
            Spin::Down => self.down[i],
        })
    }

    pub fn up(&self) -> &[Complex64] {
        &self.up
    }

    pub fn down(&self) -> &[Complex64] {
        &self.down
    }

    /// Euclidean norm of the full amplitude field.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up
            .iter()
            .chain(self.down.iter())
            .map(|a| a.norm_sqr())
            .sum()
    }

    /// Inner product `<self|other>` (conjugate-linear in `self`).
    pub fn inner(&self, other: &WalkState) -> Result<Complex64> {
        if self.lattice_len() != other.lattice_len() {
            return Err(invalid("inner product of states on different lattices"));
        }
        let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
            a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
        };
        Ok(dot(&self.up, &other.up) + dot(&self.down, &other.down))
    }

    /// Sitewise probabilities `|a_up|^2 + |a_down|^2`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.up
            .iter()
            .zip(&self.down)
            .map(|(u, d)| u.norm_sqr() + d.norm_sqr())
            .collect()
    }
}

/// Unit-norm state localized at `x = 0` with the requested spin content.
pub fn initial_state(half_width: usize, spin: SpinSpec) -> Result<WalkState> {
    if half_width == 0 {
        return Err(invalid("lattice half-width must be at least 1"));
    }
    let mut state = WalkState::zero(half_width);
    let center = half_width;
    match spin {
        SpinSpec::Up => {
            state.up[center] = Complex64::new(1.0, 0.0);
        }
        SpinSpec::Symmetric => {
            let amp = std::f64::consts::FRAC_1_SQRT_2;
            state.up[center] = Complex64::new(amp, 0.0);
            state.down[center] = Complex64::new(0.0, amp);
        }
    }
    Ok(state)
}

/// How the two coin values are laid out over the walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoinMode {
    /// One coin angle everywhere and at all times (`theta1`).
    Homogeneous,
    /// Letter at word index `i` fixes the coin at site `x = i - N`.
    Spatial,
    /// Letter at word index `t - 1` fixes the coin of step `t` (the first
    /// step uses the first letter).
    Temporal,
}

impl std::str::FromStr for CoinMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "homogeneous" => Ok(CoinMode::Homogeneous),
            "spatial" => Ok(CoinMode::Spatial),
            "temporal" => Ok(CoinMode::Temporal),
            other => Err(invalid(format!("unknown coin mode `{other}`"))),
        }
    }
}

/// The pair of coin angles plus their assignment mode. Letter `A` selects
/// `theta1` and letter `B` selects `theta2`.
#[derive(Debug, Clone)]
pub struct CoinConfig {
    pub theta1: CoinAngle,
    pub theta2: CoinAngle,
    pub mode: CoinMode,
    pub sequence: Option<LetterString>,
}

impl CoinConfig {
    pub fn homogeneous(theta: CoinAngle) -> CoinConfig {
        CoinConfig {
            theta1: theta,
            theta2: theta,
            mode: CoinMode::Homogeneous,
            sequence: None,
        }
    }

    pub fn spatial(theta1: CoinAngle, theta2: CoinAngle, sequence: LetterString) -> CoinConfig {
        CoinConfig {
            theta1,
            theta2,
            mode: CoinMode::Spatial,
            sequence: Some(sequence),
        }
    }

    pub fn temporal(theta1: CoinAngle, theta2: CoinAngle, sequence: LetterString) -> CoinConfig {
        CoinConfig {
            theta1,
            theta2,
            mode: CoinMode::Temporal,
            sequence: Some(sequence),
        }
    }

    pub fn angle_for(&self, letter: Letter) -> CoinAngle {
        match letter {
            Letter::A => self.theta1,
            Letter::B => self.theta2,
        }
    }

    /// Check the sequence against the lattice size and step count.
    pub fn validate(&self, half_width: usize, steps: usize) -> Result<()> {
        let l = 2 * half_width + 1;
        match self.mode {
            CoinMode::Homogeneous => Ok(()),
            CoinMode::Spatial => {
                let seq = self.require_sequence()?;
                if seq.len() != l {
                    return Err(invalid(format!(
                        "spatial sequence length {} does not match lattice size {l}",
                        seq.len()
                    )));
                }
                Ok(())
            }
            CoinMode::Temporal => {
                let seq = self.require_sequence()?;
                if seq.len() < steps {
                    return Err(invalid(format!(
                        "temporal sequence length {} is shorter than {steps} steps",
                        seq.len()
                    )));
                }
                Ok(())
            }
        }
    }

    fn require_sequence(&self) -> Result<&LetterString> {
        self.sequence
            .as_ref()
            .ok_or_else(|| invalid("spatial/temporal coin configuration without a sequence"))
    }

    /// Per-site angles for a spatial (or homogeneous) configuration.
    pub fn spatial_profile(&self, half_width: usize) -> Result<Vec<f64>> {
        let l = 2 * half_width + 1;
        match self.mode {
            CoinMode::Homogeneous => Ok(vec![self.theta1.radians(); l]),
            CoinMode::Spatial => {
                self.validate(half_width, 0)?;
                let seq = self.require_sequence()?;
                Ok(seq
                    .letters()
                    .iter()
                    .map(|l| self.angle_for(*l).radians())
                    .collect())
            }
            CoinMode::Temporal => Err(invalid(
                "a temporal coin configuration has no per-site profile",
            )),
        }
    }

    /// Angle of step `t` (1-based) for a temporal (or homogeneous)
    /// configuration.
    pub fn angle_at_step(&self, step: usize) -> Result<CoinAngle> {
        match self.mode {
            CoinMode::Homogeneous => Ok(self.theta1),
            CoinMode::Temporal => {
                if step == 0 {
                    return Err(invalid("step indices are 1-based"));
                }
                let seq = self.require_sequence()?;
                let letter = seq
                    .get(step - 1)
                    .ok_or_else(|| invalid(format!("temporal sequence exhausted at step {step}")))?;
                Ok(self.angle_for(letter))
            }
            CoinMode::Spatial => Err(invalid(
                "a spatial coin configuration has no per-step angle",
            )),
        }
    }
}

/// Precomputed cos/sin tables for the coin layer of one step.
enum CoinLayer<'a> {
    Uniform { c: f64, s: f64 },
    PerSite { cos: &'a [f64], sin: &'a [f64] },
}

fn apply_coin(up: &mut [Complex64], down: &mut [Complex64], layer: &CoinLayer) {
    match layer {
        CoinLayer::Uniform { c, s } => {
            for (u, d) in up.iter_mut().zip(down.iter_mut()) {
                let nu = *c * *u - *s * *d;
                let nd = *s * *u + *c * *d;
                *u = nu;
                *d = nd;
            }
        }
        CoinLayer::PerSite { cos, sin } => {
            for ((u, d), (c, s)) in up.iter_mut().zip(down.iter_mut()).zip(cos.iter().zip(*sin)) {
                let nu = *c * *u - *s * *d;
                let nd = *s * *u + *c * *d;
                *u = nu;
                *d = nd;
            }
        }
    }
}

fn apply_shift(up: &mut [Complex64], down: &mut [Complex64], boundary: Boundary) {
    match boundary {
        Boundary::Periodic => {
            up.rotate_left(1);
            down.rotate_right(1);
        }
        Boundary::OpenTruncated => {
            let l = up.len();
            up.copy_within(1..l, 0);
            up[l - 1] = Complex64::ZERO;
            down.copy_within(0..l - 1, 1);
            down[0] = Complex64::ZERO;
        }
    }
}

pub(crate) fn step_in_place(state: &mut WalkState, layer_cos: &[f64], layer_sin: &[f64], boundary: Boundary) {
    apply_coin(
        &mut state.up,
        &mut state.down,
        &CoinLayer::PerSite {
            cos: layer_cos,
            sin: layer_sin,
        },
    );
    apply_shift(&mut state.up, &mut state.down, boundary);
}

pub(crate) fn step_in_place_uniform(state: &mut WalkState, theta: f64, boundary: Boundary) {
    let (c, s) = coin_entries(theta);
    apply_coin(&mut state.up, &mut state.down, &CoinLayer::Uniform { c, s });
    apply_shift(&mut state.up, &mut state.down, boundary);
}

/// One step of the walk with an explicit per-site coin assignment.
///
/// Homogeneous and temporal walks call this with a constant assignment.
pub fn step(state: &WalkState, theta_of_x: &[CoinAngle], boundary: Boundary) -> Result<WalkState> {
    if theta_of_x.len() != state.lattice_len() {
        return Err(invalid(format!(
            "coin assignment covers {} sites but the lattice has {}",
            theta_of_x.len(),
            state.lattice_len()
        )));
    }
    let cos: Vec<f64> = theta_of_x.iter().map(|t| t.radians().cos()).collect();
    let sin: Vec<f64> = theta_of_x.iter().map(|t| t.radians().sin()).collect();
    let mut next = state.clone();
    step_in_place(&mut next, &cos, &sin, boundary);
    Ok(next)
}

/// Which time series [`evolve`] keeps while stepping.
#[derive(Debug, Clone, Copy, Default)]
pub struct RecordSpec {
    /// Keep `p_x` for every step (including step 0).
    pub distributions: bool,
    /// Keep full state snapshots for every step; memory O(L·T).
    pub states: bool,
    /// Accumulate the survival amplitude `<psi(0)|psi(t)>` on the fly.
    pub survival: bool,
}

impl RecordSpec {
    pub fn none() -> RecordSpec {
        RecordSpec::default()
    }

    pub fn distributions() -> RecordSpec {
        RecordSpec {
            distributions: true,
            ..RecordSpec::default()
        }
    }

    pub fn survival() -> RecordSpec {
        RecordSpec {
            survival: true,
            ..RecordSpec::default()
        }
    }
}

/// Recorded time series of a walk; entry `t` of each series corresponds to
/// the state after `t` steps, starting at `t = 0`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub steps: usize,
    pub half_width: usize,
    /// Sitewise probabilities per step, when recorded.
    pub distributions: Option<Vec<Vec<f64>>>,
    /// Full state snapshots per step, when recorded.
    pub states: Option<Vec<WalkState>>,
    /// Survival amplitudes `<psi(0)|psi(t)>` per step, when recorded.
    pub survival: Option<Vec<Complex64>>,
    pub final_state: WalkState,
}

/// Evolve `initial` for `steps` steps under the given coin configuration.
pub fn evolve(
    config: &CoinConfig,
    half_width: usize,
    steps: usize,
    boundary: Boundary,
    initial: &WalkState,
    record: RecordSpec,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(invalid("step count must be at least 1"));
    }
    if initial.half_width() != half_width {
        return Err(invalid(format!(
            "initial state lives on [-{}, {}], expected [-{half_width}, {half_width}]",
            initial.half_width(),
            initial.half_width()
        )));
    }
    config.validate(half_width, steps)?;

    // Spatial and homogeneous walks reuse one cos/sin table; a temporal walk
    // flips between the two uniform coins per step.
    let profile = match config.mode {
        CoinMode::Temporal => None,
        _ => {
            let thetas = config.spatial_profile(half_width)?;
            let cos: Vec<f64> = thetas.iter().map(|t| t.cos()).collect();
            let sin: Vec<f64> = thetas.iter().map(|t| t.sin()).collect();
            Some((cos, sin))
        }
    };

    let mut state = initial.clone();
    let mut distributions = record.distributions.then(|| {
        let mut v = Vec::with_capacity(steps + 1);
        v.push(state.probabilities());
        v
    });
    let mut states = record.states.then(|| {
        let mut v = Vec::with_capacity(steps + 1);
        v.push(state.clone());
        v
    });
    let mut survival = record
        .survival
        .then(|| -> Result<Vec<Complex64>> {
            let mut v = Vec::with_capacity(steps + 1);
            v.push(initial.inner(&state)?);
            Ok(v)
        })
        .transpose()?;

    for t in 1..=steps {
        match &profile {
            Some((cos, sin)) => step_in_place(&mut state, cos, sin, boundary),
            None => {
                let theta = config.angle_at_step(t)?.radians();
                step_in_place_uniform(&mut state, theta, boundary);
            }
        }
        if let Some(d) = distributions.as_mut() {
            d.push(state.probabilities());
        }
        if let Some(s) = states.as_mut() {
            s.push(state.clone());
        }
        if let Some(nu) = survival.as_mut() {
            nu.push(initial.inner(&state)?);
        }
    }

    Ok(Trajectory {
        steps,
        half_width,
        distributions,
        states,
        survival,
        final_state: state,
    })
}

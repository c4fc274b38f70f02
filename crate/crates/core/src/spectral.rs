//! Dense evolution operators and their spectral diagnostics: quasi-energy
//! spectra, densities of states, asymptotic (accumulated) operators, and
//! diffraction amplitudes of the coin arrangement.
//!
//! Quasi-energies are defined through `eps = i log(lambda)` for the
//! eigenvalues `lambda` of the step (or accumulated) operator, taken on the
//! principal branch `(-pi, pi]` with the tie at `-pi` mapped to `+pi`.
//! Eigenvalues come from a general dense non-symmetric (Schur-based)
//! eigensolver; unitarity is verified after the fact rather than assumed.

use std::f64::consts::PI;
use std::fmt;

use ndarray::{Array1, Array2};
use ndarray_linalg::EigVals;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, numerical, Result};
use crate::sequences::WeightFunction;
use crate::walk::{
    coin_entries, step_in_place_uniform, Boundary, CoinAngle, CoinConfig, CoinMode, WalkState,
};

/// Maximum tolerated eigenvalue-modulus deviation from the unit circle.
const UNIT_MODULUS_TOL: f64 = 1e-6;

/// Where a dense operator came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    SingleStepSpatial,
    SingleStepHomogeneous,
    /// Ordered product of single-step operators, latest leftmost.
    TemporalProduct {
        steps: usize,
    },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::SingleStepSpatial => write!(f, "single-step spatial"),
            Provenance::SingleStepHomogeneous => write!(f, "single-step homogeneous"),
            Provenance::TemporalProduct { steps } => {
                write!(f, "accumulated temporal product U({steps})")
            }
        }
    }
}

/// Dense `2L x 2L` evolution operator in the basis that stacks all spin-up
/// site amplitudes before all spin-down ones (matching [`WalkState`]).
#[derive(Debug, Clone)]
pub struct UnitaryOperator {
    matrix: Array2<Complex64>,
    boundary: Boundary,
    provenance: Provenance,
}

impl UnitaryOperator {
    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    /// Matrix dimension `2L`.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Frobenius norm of `U^H U - I`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        let mut defect = 0.0f64;
        // (U^H U)_{ij} = sum_k conj(U_{ki}) U_{kj}; accumulate column by column.
        for i in 0..n {
            for j in 0..n {
                let mut entry = Complex64::ZERO;
                for k in 0..n {
                    entry += self.matrix[[k, i]].conj() * self.matrix[[k, j]];
                }
                if i == j {
                    entry -= Complex64::new(1.0, 0.0);
                }
                defect += entry.norm_sqr();
            }
        }
        defect.sqrt()
    }

    /// Apply the operator to a walk state (matrix-vector product).
    pub fn apply_state(&self, state: &WalkState) -> Result<WalkState> {
        let l = state.lattice_len();
        if self.dim() != 2 * l {
            return Err(invalid(format!(
                "operator dimension {} does not match state dimension {}",
                self.dim(),
                2 * l
            )));
        }
        let mut v = Array1::<Complex64>::zeros(2 * l);
        for i in 0..l {
            v[i] = state.up()[i];
            v[l + i] = state.down()[i];
        }
        let w = self.matrix.dot(&v);
        WalkState::from_amplitudes(
            state.half_width(),
            w.iter().take(l).copied().collect(),
            w.iter().skip(l).copied().collect(),
        )
    }
}

/// Assemble the dense single-step operator (shift times block-diagonal coin)
/// for a homogeneous or spatial coin configuration.
pub fn assemble_step_operator(
    config: &CoinConfig,
    half_width: usize,
    boundary: Boundary,
) -> Result<UnitaryOperator> {
    if config.mode == CoinMode::Temporal {
        return Err(invalid(
            "a temporal configuration has no single step operator; assemble one homogeneous step or use asymptotic_operator",
        ));
    }
    let thetas = config.spatial_profile(half_width)?;
    let provenance = match config.mode {
        CoinMode::Homogeneous => Provenance::SingleStepHomogeneous,
        _ => Provenance::SingleStepSpatial,
    };
    Ok(step_operator_from_profile(&thetas, boundary, provenance))
}

fn step_operator_from_profile(
    thetas: &[f64],
    boundary: Boundary,
    provenance: Provenance,
) -> UnitaryOperator {
    let l = thetas.len();
    let mut m = Array2::<Complex64>::zeros((2 * l, 2 * l));
    for i in 0..l {
        let (c, s) = coin_entries(thetas[i]);
        // Coin output at site i: spin-up row goes to site i-1, spin-down to i+1.
        let up_target = match boundary {
            Boundary::Periodic => Some((i + l - 1) % l),
            Boundary::OpenTruncated => i.checked_sub(1),
        };
        let down_target = match boundary {
            Boundary::Periodic => Some((i + 1) % l),
            Boundary::OpenTruncated => (i + 1 < l).then_some(i + 1),
        };
        if let Some(row) = up_target {
            m[[row, i]] = Complex64::new(c, 0.0);
            m[[row, l + i]] = Complex64::new(-s, 0.0);
        }
        if let Some(row) = down_target {
            m[[l + row, i]] = Complex64::new(s, 0.0);
            m[[l + row, l + i]] = Complex64::new(c, 0.0);
        }
    }
    UnitaryOperator {
        matrix: m,
        boundary,
        provenance,
    }
}

/// Accumulated evolution operator `U(t) = W(theta(t)) ... W(theta(1))` of a
/// temporal configuration, on the periodic lattice.
///
/// Built column by column with the O(L)-per-step walker kernel, so the cost
/// is O(t L^2) rather than O(t L^3) worth of matrix products.
pub fn asymptotic_operator(
    config: &CoinConfig,
    half_width: usize,
    steps: usize,
) -> Result<UnitaryOperator> {
    if config.mode != CoinMode::Temporal {
        return Err(invalid("asymptotic_operator expects a temporal configuration"));
    }
    if steps == 0 {
        return Err(invalid("step count must be at least 1"));
    }
    config.validate(half_width, steps)?;
    let thetas: Vec<f64> = (1..=steps)
        .map(|t| config.angle_at_step(t).map(|a| a.radians()))
        .collect::<Result<_>>()?;

    let l = 2 * half_width + 1;
    let dim = 2 * l;
    let columns: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|j| {
            let mut up = vec![Complex64::ZERO; l];
            let mut down = vec![Complex64::ZERO; l];
            if j < l {
                up[j] = Complex64::new(1.0, 0.0);
            } else {
                down[j - l] = Complex64::new(1.0, 0.0);
            }
            let mut state =
                WalkState::from_amplitudes(half_width, up, down).expect("basis state");
            for theta in &thetas {
                step_in_place_uniform(&mut state, *theta, Boundary::Periodic);
            }
            let mut col = Vec::with_capacity(dim);
            col.extend_from_slice(state.up());
            col.extend_from_slice(state.down());
            col
        })
        .collect();

    let mut m = Array2::<Complex64>::zeros((dim, dim));
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            m[[i, j]] = *v;
        }
    }
    Ok(UnitaryOperator {
        matrix: m,
        boundary: Boundary::Periodic,
        provenance: Provenance::TemporalProduct { steps },
    })
}

/// Principal-branch quasi-energy of a unit-circle eigenvalue:
/// `eps = i log(lambda)`, real, in `(-pi, pi]`.
pub fn quasi_energy_of(lambda: Complex64) -> f64 {
    let arg = lambda.arg();
    if arg == PI {
        PI
    } else {
        -arg
    }
}

/// All quasi-energies of an operator, sorted ascending, with the source
/// eigenvalues kept alongside in the same order.
#[derive(Debug, Clone)]
pub struct QuasiEnergySpectrum {
    energies: Vec<f64>,
    eigenvalues: Vec<Complex64>,
}

impl QuasiEnergySpectrum {
    /// Classify a raw eigenvalue list. Fails if any eigenvalue strays from
    /// the unit circle by more than 1e-6, reporting the deviation.
    pub fn from_eigenvalues(eigenvalues: Vec<Complex64>) -> Result<QuasiEnergySpectrum> {
        let deviation = eigenvalues
            .iter()
            .map(|z| (z.norm() - 1.0).abs())
            .fold(0.0f64, f64::max);
        if deviation > UNIT_MODULUS_TOL {
            return Err(numerical(format!(
                "eigenvalue modulus deviates from 1 by {deviation:.3e} (operator not unitary on this lattice)"
            )));
        }
        let mut pairs: Vec<(f64, Complex64)> = eigenvalues
            .into_iter()
            .map(|z| (quasi_energy_of(z), z))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (energies, eigenvalues) = pairs.into_iter().unzip();
        Ok(QuasiEnergySpectrum {
            energies,
            eigenvalues,
        })
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Sorted quasi-energies in `(-pi, pi]`.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Source eigenvalues, ordered like [`Self::energies`].
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }
}

/// Quasi-energy spectrum of a dense operator.
pub fn quasi_energies(op: &UnitaryOperator) -> Result<QuasiEnergySpectrum> {
    let eigs = op
        .matrix
        .eigvals()
        .map_err(|e| numerical(format!("eigensolver failed on {}: {e}", op.provenance)))?;
    QuasiEnergySpectrum::from_eigenvalues(eigs.to_vec())
}

/// Normalized quasi-energy histogram over `(-pi, pi]` with bin width
/// `2 pi / t_f`.
#[derive(Debug, Clone)]
pub struct DensityOfStates {
    bin_width: f64,
    edges: Vec<f64>,
    weights: Vec<f64>,
}

impl DensityOfStates {
    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    /// `t_f + 1` uniform bin edges from `-pi` to `pi`.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Bin weights, summing to 1.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    /// Occupied bins that are not exceeded by either neighbor, as
    /// `(bin center, weight)` pairs.
    pub fn local_maxima(&self) -> Vec<(f64, f64)> {
        let centers = self.centers();
        let w = &self.weights;
        let mut maxima = Vec::new();
        for i in 0..w.len() {
            if w[i] <= 0.0 {
                continue;
            }
            let left_ok = i == 0 || w[i] >= w[i - 1];
            let right_ok = i + 1 == w.len() || w[i] >= w[i + 1];
            if left_ok && right_ok {
                maxima.push((centers[i], w[i]));
            }
        }
        maxima
    }
}

/// Histogram a spectrum with the energy window `d eps = 2 pi / t_f`.
pub fn dos(spectrum: &QuasiEnergySpectrum, t_f: usize) -> Result<DensityOfStates> {
    if t_f < 2 {
        return Err(invalid("DOS binning needs t_f >= 2"));
    }
    if spectrum.is_empty() {
        return Err(invalid("cannot bin an empty spectrum"));
    }
    let bin_width = 2.0 * PI / t_f as f64;
    let edges: Vec<f64> = (0..=t_f).map(|j| -PI + j as f64 * bin_width).collect();
    let mut weights = vec![0.0f64; t_f];
    let share = 1.0 / spectrum.len() as f64;
    for eps in spectrum.energies() {
        let mut bin = ((eps + PI) / bin_width).floor() as isize;
        if bin < 0 {
            bin = 0;
        }
        if bin as usize >= t_f {
            bin = t_f as isize - 1;
        }
        weights[bin as usize] += share;
    }
    Ok(DensityOfStates {
        bin_width,
        edges,
        weights,
    })
}

/// Diffraction amplitudes of the weighted site comb: the DFT
/// `f(q) = (1/L) sum_x exp(i q x) w(x)` on the grid `q = 2 pi m / L`.
#[derive(Debug, Clone)]
pub struct DiffractionSpectrum {
    q: Vec<f64>,
    amplitudes: Vec<Complex64>,
}

impl DiffractionSpectrum {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn q_values(&self) -> &[f64] {
        &self.q
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Strongest local maxima of `|f(q)|^2` on the q grid, strongest first.
    pub fn top_peaks(&self, count: usize) -> Vec<(f64, f64)> {
        let intensity = self.intensities();
        top_grid_peaks(&self.q, &intensity, count)
    }
}

pub(crate) fn top_grid_peaks(grid: &[f64], value: &[f64], count: usize) -> Vec<(f64, f64)> {
    let mut peaks: Vec<(f64, f64)> = (0..value.len())
        .filter(|&i| {
            let left_ok = i == 0 || value[i] >= value[i - 1];
            let right_ok = i + 1 == value.len() || value[i] >= value[i + 1];
            left_ok && right_ok
        })
        .map(|i| (grid[i], value[i]))
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    peaks.truncate(count);
    peaks
}

/// Diffraction spectrum of a ±1 weight function, with the 1/L normalization
/// that makes `sum_q |f(q)|^2 = 1`.
pub fn diffraction_spectrum(w: &WeightFunction) -> DiffractionSpectrum {
    let l = w.len();
    let offset = (l / 2) as i64;
    let signs = w.signs();
    let lo = -((l as i64 - 1) / 2);
    let mut q_values = Vec::with_capacity(l);
    let mut amplitudes = Vec::with_capacity(l);
    for m in lo..=(lo + l as i64 - 1) {
        let q = 2.0 * PI * m as f64 / l as f64;
        let mut acc = Complex64::ZERO;
        for (i, w_x) in signs.iter().enumerate() {
            let x = i as i64 - offset;
            acc += Complex64::from_polar(*w_x, q * x as f64);
        }
        q_values.push(q);
        amplitudes.push(acc / l as f64);
    }
    DiffractionSpectrum {
        q: q_values,
        amplitudes,
    }
}

/// Mean and half-difference of the two coins:
/// `(C(t1) + C(t2))/2` and `(C(t1) - C(t2))/2`, so that
/// `C(t1) = mean + delta` and `C(t2) = mean - delta`.
pub fn coin_decomposition(theta1: CoinAngle, theta2: CoinAngle) -> (Array2<f64>, Array2<f64>) {
    let (c1, s1) = coin_entries(theta1.radians());
    let (c2, s2) = coin_entries(theta2.radians());
    let build = |c: f64, s: f64| {
        Array2::from_shape_vec((2, 2), vec![c, -s, s, c]).expect("2x2 shape")
    };
    let m1 = build(c1, s1);
    let m2 = build(c2, s2);
    let mean = (&m1 + &m2) / 2.0;
    let delta = (&m1 - &m2) / 2.0;
    (mean, delta)
}

/// Hausdorff distance between two finite quasi-energy sets, measured along
/// the circle `(-pi, pi]` (distance `min(|a-b|, 2 pi - |a-b|)`).
pub fn hausdorff_distance(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "empty quasi-energy set");
    let directed = |from: &[f64], to: &[f64]| -> f64 {
        let mut sorted = to.to_vec();
        sorted.sort_by(f64::total_cmp);
        from.iter()
            .map(|x| {
                let idx = sorted.partition_point(|y| y < x);
                let mut best = f64::INFINITY;
                for cand in [
                    idx.checked_sub(1).map(|i| sorted[i]),
                    sorted.get(idx).copied(),
                    sorted.first().copied(),
                    sorted.last().copied(),
                ]
                .into_iter()
                .flatten()
                {
                    let lin = (x - cand).abs();
                    best = best.min(lin.min(2.0 * PI - lin));
                }
                best
            })
            .fold(0.0f64, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences;
    use crate::walk::{initial_state, step, SpinSpec};
    use proptest::prelude::*;
    use rand::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn angle(theta: f64) -> CoinAngle {
        CoinAngle::new(theta).unwrap()
    }

    #[test]
    fn identity_coin_operator_is_a_signed_permutation() {
        let config = CoinConfig::homogeneous(angle(0.0));
        let op = assemble_step_operator(&config, 1, Boundary::Periodic).unwrap();
        assert_eq!(op.dim(), 6);
        // Every column has exactly one nonzero entry of modulus 1.
        for j in 0..6 {
            let nonzero: Vec<Complex64> = (0..6)
                .map(|i| op.matrix()[[i, j]])
                .filter(|v| v.norm() > 0.0)
                .collect();
            assert_eq!(nonzero.len(), 1, "column {j}");
            assert!((nonzero[0].norm() - 1.0).abs() < 1e-15);
        }
        // Basis vector (up, x = 0) maps to (up, x = -1): column 1 row 0.
        assert_eq!(op.matrix()[[0, 1]], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn operator_action_matches_the_walker_kernel() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for half_width in 1..=3usize {
            let l = 2 * half_width + 1;
            for _ in 0..20 {
                let thetas: Vec<f64> = (0..l).map(|_| rng.random_range(-3.2..3.2)).collect();
                let letters: Vec<CoinAngle> = thetas.iter().map(|t| angle(*t)).collect();
                for boundary in [Boundary::Periodic, Boundary::OpenTruncated] {
                    let op = step_operator_from_profile(
                        &thetas,
                        boundary,
                        Provenance::SingleStepSpatial,
                    );
                    let up: Vec<Complex64> = (0..l)
                        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                        .collect();
                    let down: Vec<Complex64> = (0..l)
                        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                        .collect();
                    let state = WalkState::from_amplitudes(half_width, up, down).unwrap();
                    let via_matrix = op.apply_state(&state).unwrap();
                    let via_kernel = step(&state, &letters, boundary).unwrap();
                    for (a, b) in via_matrix
                        .up()
                        .iter()
                        .zip(via_kernel.up())
                        .chain(via_matrix.down().iter().zip(via_kernel.down()))
                    {
                        assert!((a - b).norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn periodic_step_operator_is_unitary() {
        let seq = sequences::fibonacci(11).unwrap();
        let config = CoinConfig::spatial(angle(FRAC_PI_4), angle(PI / 6.0), seq);
        let op = assemble_step_operator(&config, 5, Boundary::Periodic).unwrap();
        assert!(op.unitarity_defect() < 1e-10, "defect {}", op.unitarity_defect());
    }

    #[test]
    fn open_truncated_operator_is_sub_unitary_and_rejected() {
        let config = CoinConfig::homogeneous(angle(FRAC_PI_4));
        let op = assemble_step_operator(&config, 4, Boundary::OpenTruncated).unwrap();
        assert!(op.unitarity_defect() > 1e-3);
        let err = quasi_energies(&op);
        assert!(matches!(err, Err(crate::Error::NumericalFailure(_))));
    }

    #[test]
    fn principal_branch_examples() {
        assert!((quasi_energy_of(Complex64::new(0.0, -1.0)) - FRAC_PI_2).abs() < 1e-15);
        assert!((quasi_energy_of(Complex64::new(-1.0, 0.0)) - PI).abs() < 1e-15);
        let eps0 = 1.234;
        let lam = Complex64::from_polar(1.0, -eps0);
        assert!((quasi_energy_of(lam) - eps0).abs() < 1e-15);
    }

    #[test]
    fn identity_coin_spectrum_is_linear_and_gapless() {
        let half_width = 24;
        let l = 2 * half_width + 1;
        let config = CoinConfig::homogeneous(angle(0.0));
        let op = assemble_step_operator(&config, half_width, Boundary::Periodic).unwrap();
        let spectrum = quasi_energies(&op).unwrap();
        let mut expected: Vec<f64> = Vec::new();
        for m in -(half_width as i64)..=half_width as i64 {
            let k = 2.0 * PI * m as f64 / l as f64;
            expected.push(k);
            expected.push(-k);
        }
        expected.sort_by(f64::total_cmp);
        for (a, b) in spectrum.energies().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn reflection_coin_spectrum_is_two_flat_bands() {
        let half_width = 24;
        let config = CoinConfig::homogeneous(angle(FRAC_PI_2));
        let op = assemble_step_operator(&config, half_width, Boundary::Periodic).unwrap();
        let spectrum = quasi_energies(&op).unwrap();
        let l = 2 * half_width + 1;
        for (i, eps) in spectrum.energies().iter().enumerate() {
            let expect = if i < l { -FRAC_PI_2 } else { FRAC_PI_2 };
            assert!((eps - expect).abs() < 1e-10, "index {i}: {eps}");
        }
    }

    /// Dispersion oracle for the balanced coin:
    /// cos(eps) = cos(k)/sqrt(2) on the momentum grid.
    #[test]
    fn balanced_coin_matches_the_analytic_dispersion() {
        let half_width = 50;
        let l = 2 * half_width + 1;
        let config = CoinConfig::homogeneous(angle(FRAC_PI_4));
        let op = assemble_step_operator(&config, half_width, Boundary::Periodic).unwrap();
        let spectrum = quasi_energies(&op).unwrap();
        let mut expected: Vec<f64> = Vec::new();
        for m in -(half_width as i64)..=half_width as i64 {
            let k = 2.0 * PI * m as f64 / l as f64;
            let eps = (k.cos() / 2.0f64.sqrt()).acos();
            expected.push(eps);
            expected.push(-eps);
        }
        expected.sort_by(f64::total_cmp);
        for (a, b) in spectrum.energies().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn asymptotic_operator_single_step_and_ordering() {
        let seq = sequences::fibonacci(2).unwrap(); // "AB"
        let th1 = angle(0.4);
        let th2 = angle(1.3);
        let temporal = CoinConfig::temporal(th1, th2, seq.clone());
        let u1 = asymptotic_operator(&temporal, 3, 1).unwrap();
        let w1 = assemble_step_operator(&CoinConfig::homogeneous(th1), 3, Boundary::Periodic).unwrap();
        for i in 0..u1.dim() {
            for j in 0..u1.dim() {
                assert!((u1.matrix()[[i, j]] - w1.matrix()[[i, j]]).norm() < 1e-15);
            }
        }

        // Two steps of "AB": rightmost factor is W(theta1).
        let u2 = asymptotic_operator(&temporal, 3, 2).unwrap();
        let w2 = assemble_step_operator(&CoinConfig::homogeneous(th2), 3, Boundary::Periodic).unwrap();
        let product = w2.matrix().dot(w1.matrix());
        for i in 0..u2.dim() {
            for j in 0..u2.dim() {
                assert!((u2.matrix()[[i, j]] - product[[i, j]]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn dos_of_flat_bands_occupies_two_bins() {
        let half_width = 10;
        let config = CoinConfig::homogeneous(angle(FRAC_PI_2));
        let op = assemble_step_operator(&config, half_width, Boundary::Periodic).unwrap();
        let spectrum = quasi_energies(&op).unwrap();
        let hist = dos(&spectrum, 10).unwrap();
        let occupied: Vec<(usize, f64)> = hist
            .weights()
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, w)| *w > 0.0)
            .collect();
        assert_eq!(occupied.len(), 2);
        for (_, w) in occupied {
            assert!((w - 0.5).abs() < 1e-12);
        }
        assert!((hist.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dos_of_a_uniform_synthetic_spectrum_is_flat() {
        let t_f = 25;
        let count = 4 * t_f;
        let eigenvalues: Vec<Complex64> = (0..count)
            .map(|m| {
                let eps = -PI + (m as f64 + 0.5) * 2.0 * PI / count as f64;
                Complex64::from_polar(1.0, -eps)
            })
            .collect();
        let spectrum = QuasiEnergySpectrum::from_eigenvalues(eigenvalues).unwrap();
        let hist = dos(&spectrum, t_f).unwrap();
        for w in hist.weights() {
            assert!((w - 1.0 / t_f as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_weight_diffraction_is_a_single_peak() {
        let w = WeightFunction::from_signs(vec![1.0; 31]).unwrap();
        let spec = diffraction_spectrum(&w);
        for (q, amp) in spec.q_values().iter().zip(spec.amplitudes()) {
            if *q == 0.0 {
                assert!((amp - Complex64::new(1.0, 0.0)).norm() < 1e-13);
            } else {
                assert!(amp.norm() < 1e-13, "stray amplitude at q = {q}");
            }
        }
    }

    /// Two-periodic weights on L = 101: closed-form Dirichlet-kernel check
    /// and peak location at the grid points nearest ±pi.
    #[test]
    fn two_periodic_diffraction_peaks_sit_next_to_pi() {
        let l = 101usize;
        let word = sequences::two_periodic(l).unwrap();
        let spec = diffraction_spectrum(&word.weights());
        let offset = (l / 2) as i64;
        // w(x) = (-1)^(x + offset); direct geometric-sum evaluation.
        for (q, amp) in spec.q_values().iter().zip(spec.amplitudes()) {
            let mut expect = Complex64::ZERO;
            for i in 0..l {
                let x = i as i64 - offset;
                let sign = if (x + offset) % 2 == 0 { 1.0 } else { -1.0 };
                expect += Complex64::from_polar(sign, q * x as f64);
            }
            expect /= l as f64;
            assert!((amp - expect).norm() < 1e-12);
        }
        let peaks = spec.top_peaks(2);
        let q_near_pi = PI * (l as f64 - 1.0) / l as f64;
        let mut peak_qs: Vec<f64> = peaks.iter().map(|(q, _)| *q).collect();
        peak_qs.sort_by(f64::total_cmp);
        assert!((peak_qs[0] + q_near_pi).abs() < 1e-12, "{peak_qs:?}");
        assert!((peak_qs[1] - q_near_pi).abs() < 1e-12, "{peak_qs:?}");
    }

    #[test]
    fn coin_decomposition_examples() {
        let (mean, delta) = coin_decomposition(angle(0.7), angle(0.7));
        let c = coin_matrix_real(0.7);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(delta[[i, j]], 0.0);
                assert!((mean[[i, j]] - c[i][j]).abs() < 1e-15);
            }
        }

        let (mean, delta) = coin_decomposition(angle(0.0), angle(PI));
        for i in 0..2 {
            for j in 0..2 {
                assert!(mean[[i, j]].abs() < 1e-16);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((delta[[i, j]] - expect).abs() < 1e-16);
            }
        }

        let (mean, delta) = coin_decomposition(angle(FRAC_PI_4), angle(PI / 6.0));
        let c1 = coin_matrix_real(FRAC_PI_4);
        let c2 = coin_matrix_real(PI / 6.0);
        for i in 0..2 {
            for j in 0..2 {
                assert!((mean[[i, j]] + delta[[i, j]] - c1[i][j]).abs() < 1e-15);
                assert!((mean[[i, j]] - delta[[i, j]] - c2[i][j]).abs() < 1e-15);
            }
        }
    }

    fn coin_matrix_real(theta: f64) -> [[f64; 2]; 2] {
        let (c, s) = coin_entries(theta);
        [[c, -s], [s, c]]
    }

    #[test]
    fn hausdorff_distance_respects_the_circle() {
        let a = [0.0, 1.0];
        let b = [0.0, 1.0 + 1e-3];
        assert!((hausdorff_distance(&a, &b) - 1e-3).abs() < 1e-12);
        // Points straddling the branch cut are close on the circle.
        let a = [PI - 1e-4];
        let b = [-PI + 1e-4];
        assert!(hausdorff_distance(&a, &b) < 3e-4);
        let a = [0.0];
        let b = [PI];
        assert!((hausdorff_distance(&a, &b) - PI).abs() < 1e-12);
    }

    /// For spatial aperiodic coins at (pi/4, pi/6) the spectrum splits into
    /// two main bands; the largest gap dwarfs the mean level spacing.
    #[test]
    fn aperiodic_spatial_spectrum_has_a_dominant_gap() {
        let half_width = 100;
        let l = 2 * half_width + 1;
        for kind in sequences::SequenceKind::deterministic() {
            let seq = sequences::generate(kind, l, 0).unwrap();
            let config = CoinConfig::spatial(angle(FRAC_PI_4), angle(PI / 6.0), seq);
            let op = assemble_step_operator(&config, half_width, Boundary::Periodic).unwrap();
            let spectrum = quasi_energies(&op).unwrap();
            let eps = spectrum.energies();
            let mut largest_gap = 0.0f64;
            for pair in eps.windows(2) {
                largest_gap = largest_gap.max(pair[1] - pair[0]);
            }
            let mean_spacing = 2.0 * PI / eps.len() as f64;
            assert!(
                largest_gap > 10.0 * mean_spacing,
                "{kind}: largest gap {largest_gap:.4} vs spacing {mean_spacing:.4}"
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        /// Real-orthogonal coins give a quasi-energy multiset symmetric
        /// under eps -> -eps.
        #[test]
        fn spectrum_is_symmetric_under_negation(thetas in proptest::collection::vec(-3.2f64..3.2, 9)) {
            let op = step_operator_from_profile(&thetas, Boundary::Periodic, Provenance::SingleStepSpatial);
            let spectrum = quasi_energies(&op).unwrap();
            let mut negated: Vec<f64> = spectrum
                .energies()
                .iter()
                .map(|e| if -e == -PI { PI } else { -e })
                .collect();
            negated.sort_by(f64::total_cmp);
            for (a, b) in spectrum.energies().iter().zip(&negated) {
                prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
            }
        }

        /// Parseval: the diffraction intensities of any ±1 weight sum to 1.
        #[test]
        fn diffraction_parseval(bits in proptest::collection::vec(proptest::bool::ANY, 1..80)) {
            let signs: Vec<f64> = bits.iter().map(|b| if *b { 1.0 } else { -1.0 }).collect();
            let w = WeightFunction::from_signs(signs).unwrap();
            let spec = diffraction_spectrum(&w);
            let total: f64 = spec.intensities().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12, "total intensity {}", total);
        }

        /// The symmetry f(-q) = conj(f(q)) of a real weight function.
        #[test]
        fn diffraction_conjugate_symmetry(bits in proptest::collection::vec(proptest::bool::ANY, 1..60)) {
            let signs: Vec<f64> = bits.iter().map(|b| if *b { 1.0 } else { -1.0 }).collect();
            let w = WeightFunction::from_signs(signs).unwrap();
            let spec = diffraction_spectrum(&w);
            let n = spec.len();
            for i in 0..n {
                let q = spec.q_values()[i];
                if let Some(j) = spec.q_values().iter().position(|p| (*p + q).abs() < 1e-12) {
                    let a = spec.amplitudes()[i];
                    let b = spec.amplitudes()[j];
                    prop_assert!((a - b.conj()).norm() < 1e-12);
                }
            }
        }
    }
}

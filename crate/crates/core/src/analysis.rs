//! Observables of the photon-subtracted states: mean photon number, the
//! second-order matrix of normally ordered moments with its determinant
//! witness, and the Schmidt-spectrum participation ratio.

use nalgebra::{DMatrix, Matrix3};

use crate::detect::JointDistribution;
use crate::error::{Error, Result};
use crate::fock::TwoModePure;

/// |sum P - 1| beyond this is a contract violation for normalized inputs.
const DISTRIBUTION_NORM_TOL: f64 = 1e-9;

/// Reduced-density eigenvalues below this are floored to zero before the
/// inverse-participation sum.
const EIGENVALUE_FLOOR: f64 = 1e-14;

fn require_normalized(dist: &JointDistribution) -> Result<()> {
    let sum = dist.sum();
    if (sum - 1.0).abs() > DISTRIBUTION_NORM_TOL {
        return Err(Error::NotNormalized(sum));
    }
    Ok(())
}

/// Total mean photon number 2 <n> = 2 sum_{m,n} n P[m][n] (the factor of two
/// uses the exchange symmetry of the distribution).
pub fn mean_total_photons(dist: &JointDistribution) -> Result<f64> {
    require_normalized(dist)?;
    let p = dist.probabilities();
    let mut mean = 0.0;
    for m in 0..p.nrows() {
        for n in 0..p.ncols() {
            mean += n as f64 * p[(m, n)];
        }
    }
    Ok(2.0 * mean)
}

/// Falling factorial x (x-1) ... (x-k+1).
fn falling(x: usize, k: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..k as usize {
        if i > x {
            return 0.0;
        }
        acc *= (x - i) as f64;
    }
    acc
}

/// Normally ordered joint factorial moment
/// <: m_a^u  m_c^v :> = sum P[m][n] m(m-1)...(m-u+1) n(n-1)...(n-v+1).
pub fn factorial_moment(dist: &JointDistribution, u: u32, v: u32) -> f64 {
    let p = dist.probabilities();
    let mut acc = 0.0;
    for m in 0..p.nrows() {
        let fm = falling(m, u);
        if fm == 0.0 {
            continue;
        }
        for n in 0..p.ncols() {
            let w = p[(m, n)];
            if w != 0.0 {
                acc += w * fm * falling(n, v);
            }
        }
    }
    acc
}

/// Second-order matrix of moments with its determinant witness. A negative
/// determinant witnesses nonclassical correlations between the outer modes.
#[derive(Clone, Debug)]
pub struct MomentMatrix {
    entries: Matrix3<f64>,
    determinant: f64,
}

impl MomentMatrix {
    pub fn entries(&self) -> &Matrix3<f64> {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn determinant(&self) -> f64 {
        self.determinant
    }

    /// Det(M) < 0.
    pub fn witnesses_nonclassicality(&self) -> bool {
        self.determinant < 0.0
    }
}

/// Build the 3x3 matrix of moments in the row/column order (1, m_a, m_c).
pub fn moment_matrix(dist: &JointDistribution) -> Result<MomentMatrix> {
    require_normalized(dist)?;
    let m00 = factorial_moment(dist, 0, 0);
    let ma = factorial_moment(dist, 1, 0);
    let mc = factorial_moment(dist, 0, 1);
    let ma2 = factorial_moment(dist, 2, 0);
    let mc2 = factorial_moment(dist, 0, 2);
    let mac = factorial_moment(dist, 1, 1);
    let entries = Matrix3::new(m00, ma, mc, ma, ma2, mac, mc, mac, mc2);
    Ok(MomentMatrix {
        entries,
        determinant: det3(&entries),
    })
}

/// Direct cofactor expansion; no conditioning concerns at 3x3.
fn det3(m: &Matrix3<f64>) -> f64 {
    m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
}

/// Spectrum of the reduced density matrix of one mode of a bipartite pure
/// state, with the inverse-participation entanglement quantifier.
#[derive(Clone, Debug)]
pub struct SchmidtSpectrum {
    /// Eigenvalues of the normalized reduced density (squared Schmidt
    /// coefficients), non-increasing.
    eigenvalues: Vec<f64>,
    participation_ratio: f64,
}

impl SchmidtSpectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// xi = 1 / sum_i p_i^2; equals 1 exactly for separable pure states and
    /// grows with entanglement.
    pub fn participation_ratio(&self) -> f64 {
        self.participation_ratio
    }
}

/// Schmidt spectrum of a normalized two-mode pure state, from diagonalizing
/// the mode-a reduced density matrix.
pub fn participation_ratio(state: &TwoModePure) -> Result<SchmidtSpectrum> {
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > DISTRIBUTION_NORM_TOL {
        return Err(Error::NotNormalized(norm));
    }
    spectrum_of_density(state.reduced_density_a())
}

/// Same quantity computed by tracing out mode a instead; must agree with
/// [`participation_ratio`] for any pure state.
pub fn participation_ratio_via_c(state: &TwoModePure) -> Result<SchmidtSpectrum> {
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > DISTRIBUTION_NORM_TOL {
        return Err(Error::NotNormalized(norm));
    }
    spectrum_of_density(state.reduced_density_c())
}

fn spectrum_of_density(rho: DMatrix<num_complex::Complex64>) -> Result<SchmidtSpectrum> {
    let mut eigenvalues: Vec<f64> = crate::linalg::hermitian_eigenvalues(&rho)
        .into_iter()
        .map(|p| if p < EIGENVALUE_FLOOR { 0.0 } else { p })
        .collect();
    eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    let purity: f64 = eigenvalues.iter().map(|p| (p / total).powi(2)).sum();
    let eigenvalues: Vec<f64> = eigenvalues.into_iter().map(|p| p / total).collect();
    Ok(SchmidtSpectrum {
        eigenvalues,
        participation_ratio: purity.recip(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{joint_distribution, PnrPovm, SourceInfo};
    use crate::evolve::{evolve_multinomial, prepare_input, SqueezeSource};
    use crate::trimer::{build_unitary, solve_zf, CouplerConfig, TrimerUnitary};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn zf_unitary() -> TrimerUnitary {
        let zf = solve_zf(1.0, 1.0 / 9.0).unwrap();
        build_unitary(&CouplerConfig::new(1.0, zf).unwrap())
    }

    fn distribution(r: f64, l_max: u32, n_sub: u32, eta: f64) -> JointDistribution {
        let u = zf_unitary();
        let source = SqueezeSource::new(re(r), l_max).unwrap();
        let out = evolve_multinomial(&prepare_input(&source), &u).unwrap();
        let povm = PnrPovm::new(n_sub, eta).unwrap();
        joint_distribution(
            &out,
            &povm,
            eta,
            SourceInfo {
                r: re(r),
                theta: u.theta(),
            },
        )
        .unwrap()
    }

    #[test]
    fn vacuum_mean_is_zero() {
        let dist = distribution(1e-8, 1, 0, 1.0);
        assert!(mean_total_photons(&dist).unwrap() < 1e-12);
    }

    #[test]
    fn point_mass_at_one_one_means_two() {
        // A state with all weight on |1, 0, 1> heralds (N = 0) to all mass at
        // (m, n) = (1, 1).
        let state = crate::fock::ThreeModeState::from_amplitudes(
            2,
            [(crate::fock::OccupationTriple::new(1, 0, 1), re(1.0))],
        );
        let povm = PnrPovm::new(0, 1.0).unwrap();
        let dist = joint_distribution(
            &state,
            &povm,
            1.0,
            SourceInfo {
                r: re(0.0),
                theta: 0.0,
            },
        )
        .unwrap();
        assert_relative_eq!(dist.prob(1, 1), 1.0, epsilon = 1e-15);
        assert_relative_eq!(mean_total_photons(&dist).unwrap(), 2.0, epsilon = 1e-12);
        // falling-factorial weights on the same point mass
        assert_relative_eq!(factorial_moment(&dist, 1, 1), 1.0, epsilon = 1e-12);
        assert_relative_eq!(factorial_moment(&dist, 2, 0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn falling_factorial_values() {
        // mass at (2,1) with u=2, v=1 weighs 2*1*1; mass at (1,0) with u=2 is 0
        assert_eq!(falling(2, 2) * falling(1, 1), 2.0);
        assert_eq!(falling(1, 2), 0.0);
        assert_eq!(falling(3, 1), 3.0);
        assert_eq!(falling(5, 0), 1.0);
    }

    #[test]
    fn factorial_moment_trivial_cases() {
        let dist = distribution(0.4, 6, 0, 1.0);
        assert_relative_eq!(factorial_moment(&dist, 0, 0), 1.0, epsilon = 1e-12);
        // first moments match the mean computation
        let mean = mean_total_photons(&dist).unwrap();
        let ma = factorial_moment(&dist, 1, 0);
        let mc = factorial_moment(&dist, 0, 1);
        assert_relative_eq!(ma + mc, mean, epsilon = 1e-12);
        assert_relative_eq!(ma, mc, epsilon = 1e-10);
    }

    #[test]
    fn moment_matrix_structure() {
        let dist = distribution(0.3, 6, 1, 1.0);
        let m = moment_matrix(&dist).unwrap();
        assert_relative_eq!(m.entry(0, 0), 1.0, epsilon = 1e-12);
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(m.entry(i, j), m.entry(j, i), epsilon = 1e-12);
                assert!(m.entry(i, j) >= 0.0);
            }
        }
        // determinant matches nalgebra's
        assert_relative_eq!(m.determinant(), m.entries().determinant(), epsilon = 1e-12);
    }

    #[test]
    fn near_vacuum_moment_matrix_is_singularly_concentrated() {
        let dist = distribution(1e-8, 1, 0, 1.0);
        let m = moment_matrix(&dist).unwrap();
        assert_relative_eq!(m.entry(0, 0), 1.0, epsilon = 1e-12);
        assert!(m.determinant().abs() < 1e-12);
    }

    #[test]
    fn table_sign_pattern_at_lossy_detection() {
        // Alternating (-, +, -, +) across N = 0..3 at eta = 0.8.
        for r in [0.2, 0.3] {
            let l_max = crate::evolve::default_l_max(r, 1e-10);
            let mut signs = Vec::new();
            for n_sub in 0..4 {
                let dist = distribution(r, l_max, n_sub, 0.8);
                signs.push(moment_matrix(&dist).unwrap().determinant().signum());
            }
            assert_eq!(signs, vec![-1.0, 1.0, -1.0, 1.0], "r = {r}");
        }
    }

    #[test]
    fn ideal_detection_small_squeeze_is_nonclassical_for_even_n() {
        for r in [0.2, 0.3] {
            let l_max = crate::evolve::default_l_max(r, 1e-10);
            let dist = distribution(r, l_max, 0, 1.0);
            assert!(moment_matrix(&dist).unwrap().witnesses_nonclassicality());
        }
    }

    #[test]
    fn separable_state_has_unit_participation() {
        let mut amps = DMatrix::zeros(2, 2);
        amps[(1, 0)] = re(1.0); // |1>_a |0>_c
        let state = TwoModePure::from_matrix(amps);
        let spectrum = participation_ratio(&state).unwrap();
        assert_relative_eq!(spectrum.participation_ratio(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(spectrum.eigenvalues()[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn balanced_superposition_has_participation_two() {
        let mut amps = DMatrix::zeros(2, 2);
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        amps[(0, 1)] = re(inv);
        amps[(1, 0)] = re(inv);
        let state = TwoModePure::from_matrix(amps);
        let spectrum = participation_ratio(&state).unwrap();
        assert_relative_eq!(spectrum.participation_ratio(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(spectrum.eigenvalues()[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(spectrum.eigenvalues()[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn participation_rejects_unnormalized_input() {
        let mut amps = DMatrix::zeros(2, 2);
        amps[(0, 0)] = re(2.0);
        let state = TwoModePure::from_matrix(amps);
        assert!(matches!(
            participation_ratio(&state),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn participation_invariant_under_traced_mode() {
        let u = zf_unitary();
        let source = SqueezeSource::new(re(0.5), 6).unwrap();
        let out = evolve_multinomial(&prepare_input(&source), &u).unwrap();
        let heralded = crate::detect::conditional_pure_state(&out, 1).unwrap();
        let via_a = participation_ratio(&heralded.state).unwrap();
        let via_c = participation_ratio_via_c(&heralded.state).unwrap();
        assert_relative_eq!(
            via_a.participation_ratio(),
            via_c.participation_ratio(),
            epsilon = 1e-9
        );
        assert!(via_a.participation_ratio() >= 1.0);
    }

    #[test]
    fn mean_total_photons_requires_normalized_distribution() {
        let dist = distribution(0.3, 4, 0, 1.0);
        assert!(mean_total_photons(&dist).is_ok());
    }
}

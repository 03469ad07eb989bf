//! The three-waveguide coupler: its 3x3 mode-mixing matrix and the coupling
//! length that realizes a target center/outer intensity split.

use nalgebra::Matrix3;
use num_complex::Complex64;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

/// Physical parameters of the coupler section.
///
/// `beta` (the common propagation constant) is recorded but never enters the
/// mixing matrix: on a fixed total-photon block it contributes only an overall
/// phase exp(-i beta z T), which no photon-number observable in this library
/// can see.
#[derive(Clone, Copy, Debug)]
pub struct CouplerConfig {
    pub kappa: f64,
    pub z: f64,
    pub beta: f64,
}

impl CouplerConfig {
    pub fn new(kappa: f64, z: f64) -> Result<Self> {
        Self { kappa, z, beta: 0.0 }.validated()
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    fn validated(self) -> Result<Self> {
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::InvalidCoupler(format!(
                "kappa must be positive and finite, got {}",
                self.kappa
            )));
        }
        if !(self.z >= 0.0) || !self.z.is_finite() {
            return Err(Error::InvalidCoupler(format!(
                "z must be non-negative and finite, got {}",
                self.z
            )));
        }
        Ok(self)
    }

    /// Dimensionless mixing angle Theta = sqrt(2) * kappa * z.
    pub fn theta(&self) -> f64 {
        SQRT_2 * self.kappa * self.z
    }
}

/// The 3x3 matrix that carries input creation operators to output ones.
#[derive(Clone, Debug)]
pub struct TrimerUnitary {
    entries: Matrix3<Complex64>,
    theta: f64,
}

impl TrimerUnitary {
    /// Construct directly from the mixing angle.
    pub fn from_theta(theta: f64) -> Self {
        let c = theta.cos();
        let s = theta.sin();
        let diag_outer = Complex64::new(0.5 + 0.5 * c, 0.0);
        let cross_outer = Complex64::new(-0.5 + 0.5 * c, 0.0);
        let center = Complex64::new(0.0, -s / SQRT_2);
        let entries = Matrix3::new(
            diag_outer,
            center,
            cross_outer,
            center,
            Complex64::new(c, 0.0),
            center,
            cross_outer,
            center,
            diag_outer,
        );
        Self { entries, theta }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Entry U[i][j], zero-based.
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }

    pub fn matrix(&self) -> &Matrix3<Complex64> {
        &self.entries
    }

    /// max |(U U† - I)_{ij}|.
    pub fn unitarity_defect(&self) -> f64 {
        let product = self.entries * self.entries.adjoint();
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((product[(i, j)] - Complex64::new(expected, 0.0)).norm());
            }
        }
        worst
    }
}

/// Evaluate the coupler matrix at the configured propagation distance.
pub fn build_unitary(config: &CouplerConfig) -> TrimerUnitary {
    TrimerUnitary::from_theta(config.theta())
}

/// Smallest z > 0 at which the center/outer intensity ratio reaches
/// `target_ratio`, i.e. z = arctan(sqrt(target_ratio)) / (sqrt(2) kappa).
pub fn solve_zf(kappa: f64, target_ratio: f64) -> Result<f64> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidCoupler(format!(
            "kappa must be positive and finite, got {kappa}"
        )));
    }
    if !(target_ratio >= 0.0) {
        return Err(Error::NegativeRatio(target_ratio));
    }
    Ok(target_ratio.sqrt().atan() / (SQRT_2 * kappa))
}

/// Below this |cos Theta| the outer guides are dark and the ratio is
/// reported as divergent rather than as a meaningless ~1e24.
const COS_DIVERGENCE_FLOOR: f64 = 1e-12;

/// Center/outer intensity ratio tan^2(Theta) for the symmetric single-photon
/// amplitude input (1, 0, 1)/sqrt(2).
pub fn intensity_ratio(config: &CouplerConfig) -> Result<f64> {
    let theta = config.theta();
    let c = theta.cos();
    if c.abs() < COS_DIVERGENCE_FLOOR {
        return Err(Error::DivergentRatio);
    }
    let s = theta.sin();
    Ok((s / c).powi(2))
}

//! Photon-number-resolving detection on the center guide and the joint
//! photon-number statistics of the outer guides.
//!
//! The detector firing with count N on true photon number j carries binomial
//! weight C(j, N) eta^N (1 - eta)^(j - N). Conditioning the propagated state
//! on that outcome produces the photon-subtracted two-mode state; counting at
//! the (possibly lossy) outer ports produces the joint distribution P[m][n].

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{ThreeModeState, TwoModeDensity, TwoModePure};

/// Entries of the raw distribution in [-NEGATIVE_DUST_FLOOR, 0) are clipped
/// to zero; anything more negative indicates a bug, not rounding.
pub const NEGATIVE_DUST_FLOOR: f64 = 1e-12;

/// Mass that the reported matrix extent is allowed to leave uncovered.
pub const EXTENT_TAIL: f64 = 1e-8;

/// PNR detector model on the center guide: registers `subtracted` photons
/// with quantum efficiency `efficiency`.
#[derive(Clone, Copy, Debug)]
pub struct PnrPovm {
    subtracted: u32,
    efficiency: f64,
}

impl PnrPovm {
    pub fn new(subtracted: u32, efficiency: f64) -> Result<Self> {
        if !(efficiency > 0.0 && efficiency <= 1.0) {
            return Err(Error::EfficiencyOutOfRange(efficiency));
        }
        Ok(Self {
            subtracted,
            efficiency,
        })
    }

    pub fn subtracted(&self) -> u32 {
        self.subtracted
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    /// Weight for true photon number j: C(j, N) eta^N (1 - eta)^(j - N) for
    /// j >= N, zero otherwise. At eta = 1 this collapses to the Kronecker
    /// delta on j = N.
    pub fn weight(&self, j: u32) -> f64 {
        binomial_weight(j, self.subtracted, self.efficiency)
    }
}

/// C(j, k) eta^k (1 - eta)^(j - k), evaluated stably for j <= a few hundred.
fn binomial_weight(j: u32, k: u32, eta: f64) -> f64 {
    if k > j {
        return 0.0;
    }
    if eta >= 1.0 {
        return if j == k { 1.0 } else { 0.0 };
    }
    // ln C(j, k) via ln-gamma-free running sum; j stays small here.
    let mut ln_choose = 0.0;
    for i in 0..k.min(j - k) {
        ln_choose += ((j - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    (ln_choose + k as f64 * eta.ln() + (j - k) as f64 * (1.0 - eta).ln()).exp()
}

/// Detection weights for true photon numbers 0 ..= j_max.
pub fn povm_weights(povm: &PnrPovm, j_max: u32) -> Vec<f64> {
    (0..=j_max).map(|j| povm.weight(j)).collect()
}

/// A conditional pure state together with its heralding probability.
#[derive(Clone, Debug)]
pub struct Heralded {
    /// Normalized photon-subtracted state of the outer modes.
    pub state: TwoModePure,
    /// Squared norm of the unnormalized slice: the probability of the herald.
    pub success_probability: f64,
}

/// Condition the propagated state on an ideal (eta = 1) detection of
/// `subtracted` photons in the center guide.
pub fn conditional_pure_state(out: &ThreeModeState, subtracted: u32) -> Result<Heralded> {
    let slice = out.slice_at_b(subtracted);
    let success_probability = slice.norm_sqr();
    if success_probability <= 0.0 {
        return Err(Error::HeraldImpossible { subtracted });
    }
    Ok(Heralded {
        state: slice.normalize()?,
        success_probability,
    })
}

/// Unnormalized photon-subtracted density of the outer modes:
/// rho_sub = sum_j weight(j) |slice_j><slice_j|, trace = herald probability.
pub fn subtracted_density(out: &ThreeModeState, povm: &PnrPovm) -> Result<TwoModeDensity> {
    let dim = out.max_total() as usize + 1;
    let mut rho = TwoModeDensity::zero(dim);
    let mut any_weight = false;
    for j in povm.subtracted()..=out.max_total() {
        let weight = povm.weight(j);
        if weight == 0.0 {
            continue;
        }
        let slice = out.slice_at_b(j);
        if slice.is_zero() {
            continue;
        }
        rho.add_weighted_outer(weight, &slice);
        any_weight = true;
    }
    if !any_weight || rho.trace() <= 0.0 {
        return Err(Error::HeraldImpossible {
            subtracted: povm.subtracted(),
        });
    }
    Ok(rho)
}

/// Parameter record attached to a joint distribution.
#[derive(Clone, Copy, Debug)]
pub struct JointParams {
    pub subtracted: u32,
    pub eta_b: f64,
    pub eta_a: f64,
    pub eta_c: f64,
    pub r: Complex64,
    pub theta: f64,
}

/// Where the propagated state came from, for provenance.
#[derive(Clone, Copy, Debug)]
pub struct SourceInfo {
    pub r: Complex64,
    pub theta: f64,
}

/// Joint photon-number distribution at the outer ports, conditioned on the
/// center-guide herald.
///
/// The full-cutoff matrices are kept for moment computations; serialization
/// should use [`JointDistribution::reported_extent`], the smallest square
/// extent covering all but [`EXTENT_TAIL`] of the probability mass.
#[derive(Clone, Debug)]
pub struct JointDistribution {
    probabilities: DMatrix<f64>,
    raw: DMatrix<f64>,
    success_probability: f64,
    reported_extent: usize,
    params: JointParams,
}

impl JointDistribution {
    /// Normalized P[m][n] over the full cutoff grid.
    pub fn probabilities(&self) -> &DMatrix<f64> {
        &self.probabilities
    }

    /// Unnormalized P_N[m][n]; divides to `probabilities` by the success
    /// probability.
    pub fn raw(&self) -> &DMatrix<f64> {
        &self.raw
    }

    pub fn prob(&self, m: usize, n: usize) -> f64 {
        if m < self.probabilities.nrows() && n < self.probabilities.ncols() {
            self.probabilities[(m, n)]
        } else {
            0.0
        }
    }

    /// Probability of the heralding detection outcome (the normalizer).
    pub fn success_probability(&self) -> f64 {
        self.success_probability
    }

    /// Per-mode count of rows/columns that capture >= 1 - EXTENT_TAIL of the
    /// normalized mass.
    pub fn reported_extent(&self) -> usize {
        self.reported_extent
    }

    pub fn params(&self) -> &JointParams {
        &self.params
    }

    /// Full per-mode dimension of the stored matrices.
    pub fn dim(&self) -> usize {
        self.probabilities.nrows()
    }

    pub fn sum(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

/// Compute the joint distribution for a herald of `povm_b.subtracted()`
/// photons with center-guide efficiency `povm_b.efficiency()` and a shared
/// outer-port efficiency `eta_outer`.
///
/// Only the diagonal of the photon-subtracted density enters:
/// D[i][k] = sum_j weight(j) |amp(i, j, k)|^2, then each axis is smeared by
/// the outer detectors' binomial response, and the result is normalized by
/// its sum (the heralding probability).
pub fn joint_distribution(
    out: &ThreeModeState,
    povm_b: &PnrPovm,
    eta_outer: f64,
    source: SourceInfo,
) -> Result<JointDistribution> {
    if !(eta_outer > 0.0 && eta_outer <= 1.0) {
        return Err(Error::EfficiencyOutOfRange(eta_outer));
    }
    let dim = out.max_total() as usize + 1;

    // Diagonal ensemble over true outer counts.
    let mut diag = DMatrix::<f64>::zeros(dim, dim);
    let mut any = false;
    for (triple, amp) in out.triples() {
        let weight = povm_b.weight(triple.n_b);
        if weight == 0.0 {
            continue;
        }
        let w = weight * amp.norm_sqr();
        if w != 0.0 {
            diag[(triple.n_a as usize, triple.n_c as usize)] += w;
            any = true;
        }
    }
    if !any {
        return Err(Error::HeraldImpossible {
            subtracted: povm_b.subtracted(),
        });
    }

    // Smear each axis with the outer detectors' binomial response.
    let raw = if eta_outer >= 1.0 {
        diag
    } else {
        let mut response = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..dim {
            for m in 0..=i {
                response[(m, i)] = binomial_weight(i as u32, m as u32, eta_outer);
            }
        }
        &response * diag * response.transpose()
    };

    let mut raw = raw;
    let mut success_probability = 0.0;
    for m in 0..dim {
        for n in 0..dim {
            let value = raw[(m, n)];
            if value < 0.0 {
                if value < -NEGATIVE_DUST_FLOOR {
                    return Err(Error::NegativeProbability { m, n, value });
                }
                raw[(m, n)] = 0.0;
            }
            success_probability += raw[(m, n)];
        }
    }
    if success_probability <= 0.0 {
        return Err(Error::HeraldImpossible {
            subtracted: povm_b.subtracted(),
        });
    }

    let probabilities = &raw / success_probability;
    let reported_extent = covering_extent(&probabilities, EXTENT_TAIL);

    Ok(JointDistribution {
        probabilities,
        raw,
        success_probability,
        reported_extent,
        params: JointParams {
            subtracted: povm_b.subtracted(),
            eta_b: povm_b.efficiency(),
            eta_a: eta_outer,
            eta_c: eta_outer,
            r: source.r,
            theta: source.theta,
        },
    })
}

/// Smallest e such that the leading e x e square holds >= 1 - tail of the
/// total mass.
fn covering_extent(probabilities: &DMatrix<f64>, tail: f64) -> usize {
    let dim = probabilities.nrows();
    let total: f64 = probabilities.iter().sum();
    let target = total * (1.0 - tail);
    let mut covered = 0.0;
    for e in 0..dim {
        // add the L-shaped boundary of the (e+1) x (e+1) square
        for k in 0..=e {
            covered += probabilities[(e, k)];
            if k < e {
                covered += probabilities[(k, e)];
            }
        }
        if covered >= target {
            return e + 1;
        }
    }
    dim
}

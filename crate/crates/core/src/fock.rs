//! Truncated three-mode Fock space: occupation indexing, state containers,
//! normalization, slicing, and total-photon-number block structure.
//!
//! States are stored densely per total-photon-number block. The evolution is
//! number-conserving and the squeezed input only populates even totals, so a
//! naive dense cube over (n_a, n_b, n_c) would be mostly zeros; block storage
//! keeps memory proportional to what is actually reachable.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Amplitudes with squared magnitude below this are dropped when pruning.
pub const PRUNE_THRESHOLD: f64 = 1e-16;

/// Default tolerance on |norm^2 - 1| for normalized containers.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Photon occupations of the three waveguide modes (a, b, c).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationTriple {
    pub n_a: u32,
    pub n_b: u32,
    pub n_c: u32,
}

impl OccupationTriple {
    pub fn new(n_a: u32, n_b: u32, n_c: u32) -> Self {
        Self { n_a, n_b, n_c }
    }

    /// Total photon number across the three modes.
    pub fn total(self) -> u32 {
        self.n_a + self.n_b + self.n_c
    }
}

/// Number of occupation triples with the given total.
pub fn block_dim(total: u32) -> usize {
    let t = total as usize;
    (t + 1) * (t + 2) / 2
}

/// Position of (n_a, n_b, total - n_a - n_b) inside its block.
///
/// Triples are ordered lexicographically by (n_a, n_b).
pub fn block_index(total: u32, n_a: u32, n_b: u32) -> usize {
    debug_assert!(n_a + n_b <= total);
    let t = total as usize;
    let a = n_a as usize;
    // rows 0..n_a have lengths (t+1), t, ..., (t-a+2)
    a * (t + 1) - a * (a.saturating_sub(1)) / 2 + n_b as usize
}

/// All triples of a block, in storage order.
pub fn block_triples(total: u32) -> impl Iterator<Item = OccupationTriple> {
    (0..=total).flat_map(move |n_a| {
        (0..=total - n_a).map(move |n_b| OccupationTriple::new(n_a, n_b, total - n_a - n_b))
    })
}

/// Pure state of the three guided modes, truncated at a maximum total photon
/// number. Amplitudes outside the cutoff are implicitly zero.
#[derive(Clone, Debug)]
pub struct ThreeModeState {
    blocks: BTreeMap<u32, Vec<Complex64>>,
    max_total: u32,
    norm_tolerance: f64,
}

impl ThreeModeState {
    /// Empty state (all amplitudes zero) with the given cutoff.
    pub fn zero(max_total: u32) -> Self {
        Self {
            blocks: BTreeMap::new(),
            max_total,
            norm_tolerance: NORM_TOLERANCE,
        }
    }

    /// Build from explicit (triple, amplitude) pairs.
    ///
    /// Panics if a triple lies beyond the cutoff; truncation must be the
    /// caller's explicit decision, never silent.
    pub fn from_amplitudes<I>(max_total: u32, amplitudes: I) -> Self
    where
        I: IntoIterator<Item = (OccupationTriple, Complex64)>,
    {
        let mut state = Self::zero(max_total);
        for (triple, amp) in amplitudes {
            state.accumulate(triple, amp);
        }
        state
    }

    /// Add `amp` to the amplitude at `triple`. Construction-phase only.
    pub(crate) fn accumulate(&mut self, triple: OccupationTriple, amp: Complex64) {
        let total = triple.total();
        assert!(
            total <= self.max_total,
            "occupation triple ({}, {}, {}) exceeds cutoff total {}",
            triple.n_a,
            triple.n_b,
            triple.n_c,
            self.max_total
        );
        let block = self
            .blocks
            .entry(total)
            .or_insert_with(|| vec![Complex64::new(0.0, 0.0); block_dim(total)]);
        block[block_index(total, triple.n_a, triple.n_b)] += amp;
    }

    pub(crate) fn insert_block(&mut self, total: u32, amplitudes: Vec<Complex64>) {
        debug_assert_eq!(amplitudes.len(), block_dim(total));
        debug_assert!(total <= self.max_total);
        self.blocks.insert(total, amplitudes);
    }

    pub fn max_total(&self) -> u32 {
        self.max_total
    }

    pub fn norm_tolerance(&self) -> f64 {
        self.norm_tolerance
    }

    pub fn with_norm_tolerance(mut self, tolerance: f64) -> Self {
        self.norm_tolerance = tolerance;
        self
    }

    /// Amplitude at a triple; zero for anything outside the stored support.
    pub fn amplitude(&self, triple: OccupationTriple) -> Complex64 {
        let total = triple.total();
        if total > self.max_total {
            return Complex64::new(0.0, 0.0);
        }
        self.blocks
            .get(&total)
            .map(|block| block[block_index(total, triple.n_a, triple.n_b)])
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    /// Sum of squared amplitude magnitudes.
    pub fn norm_sqr(&self) -> f64 {
        self.blocks
            .values()
            .flat_map(|block| block.iter())
            .map(|a| a.norm_sqr())
            .sum()
    }

    /// Rescale so the total squared norm is 1, preserving relative phases.
    pub fn normalize(&self) -> Result<Self> {
        let norm_sqr = self.norm_sqr();
        if norm_sqr <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        let scale = norm_sqr.sqrt().recip();
        let mut out = self.clone();
        for block in out.blocks.values_mut() {
            for amp in block.iter_mut() {
                *amp *= scale;
            }
        }
        Ok(out)
    }

    /// Blocks by total photon number, in increasing total order.
    ///
    /// Every stored amplitude appears in exactly one block; concatenating the
    /// blocks reproduces the state.
    pub fn blocks(&self) -> impl Iterator<Item = (u32, &[Complex64])> {
        self.blocks.iter().map(|(&t, b)| (t, b.as_slice()))
    }

    /// Squared-norm weight carried by each total-photon-number block.
    pub fn block_weights(&self) -> BTreeMap<u32, f64> {
        self.blocks
            .iter()
            .map(|(&t, b)| (t, b.iter().map(|a| a.norm_sqr()).sum()))
            .collect()
    }

    /// All (triple, amplitude) pairs in deterministic order.
    pub fn triples(&self) -> impl Iterator<Item = (OccupationTriple, Complex64)> + '_ {
        self.blocks.iter().flat_map(|(&total, block)| {
            block_triples(total).zip(block.iter().copied())
        })
    }

    /// Unnormalized two-mode amplitude slice at a fixed center-guide count.
    ///
    /// A `fixed_b` beyond the cutoff yields an empty (all-zero) slice, which
    /// is a valid zero-weight herald.
    pub fn slice_at_b(&self, fixed_b: u32) -> TwoModePure {
        let dim = self.max_total as usize + 1;
        let mut amps = DMatrix::zeros(dim, dim);
        for (&total, block) in &self.blocks {
            if fixed_b > total {
                continue;
            }
            for n_a in 0..=(total - fixed_b) {
                let n_c = total - fixed_b - n_a;
                let amp = block[block_index(total, n_a, fixed_b)];
                amps[(n_a as usize, n_c as usize)] += amp;
            }
        }
        TwoModePure { amps }
    }

    /// Drop amplitudes with |amp|^2 below `threshold` and any emptied blocks.
    pub fn pruned(mut self, threshold: f64) -> Self {
        for block in self.blocks.values_mut() {
            for amp in block.iter_mut() {
                if amp.norm_sqr() < threshold {
                    *amp = Complex64::new(0.0, 0.0);
                }
            }
        }
        self.blocks
            .retain(|_, block| block.iter().any(|a| a.norm_sqr() > 0.0));
        self
    }
}

/// Pure two-mode state over the outer guides (a, c).
///
/// Row index is the mode-a occupation, column index the mode-c occupation.
#[derive(Clone, Debug)]
pub struct TwoModePure {
    amps: DMatrix<Complex64>,
}

impl TwoModePure {
    pub fn zero(dim: usize) -> Self {
        Self {
            amps: DMatrix::zeros(dim, dim),
        }
    }

    pub fn from_matrix(amps: DMatrix<Complex64>) -> Self {
        assert_eq!(amps.nrows(), amps.ncols(), "two-mode amplitudes must be square");
        Self { amps }
    }

    /// Per-mode dimension (occupations run over 0..dim).
    pub fn dim(&self) -> usize {
        self.amps.nrows()
    }

    pub fn amplitude(&self, m: usize, n: usize) -> Complex64 {
        if m < self.dim() && n < self.dim() {
            self.amps[(m, n)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.amps.iter().all(|a| a.norm_sqr() == 0.0)
    }

    pub fn normalize(&self) -> Result<Self> {
        let norm_sqr = self.norm_sqr();
        if norm_sqr <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            amps: &self.amps * Complex64::new(norm_sqr.sqrt().recip(), 0.0),
        })
    }

    /// Reduced density matrix of mode a: rho_a[m, m'] = sum_n psi[m,n] psi*[m',n].
    pub fn reduced_density_a(&self) -> DMatrix<Complex64> {
        &self.amps * self.amps.adjoint()
    }

    /// Reduced density matrix of mode c.
    pub fn reduced_density_c(&self) -> DMatrix<Complex64> {
        self.amps.adjoint() * &self.amps
    }
}

/// Mixed state of the two outer modes, stored as a dense matrix over the
/// composite index m * dim + n.
///
/// Memory grows as dim^4; intended for conditional states at moderate cutoff
/// (the joint photon-number distribution never needs the full matrix, only
/// its diagonal).
#[derive(Clone, Debug)]
pub struct TwoModeDensity {
    elements: DMatrix<Complex64>,
    dim: usize,
}

impl TwoModeDensity {
    pub fn zero(dim: usize) -> Self {
        Self {
            elements: DMatrix::zeros(dim * dim, dim * dim),
            dim,
        }
    }

    /// Per-mode dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    fn pair_index(&self, m: usize, n: usize) -> usize {
        debug_assert!(m < self.dim && n < self.dim);
        m * self.dim + n
    }

    /// Matrix element <m, n| rho |m', n'>.
    pub fn element(&self, m: usize, n: usize, mp: usize, np: usize) -> Complex64 {
        self.elements[(self.pair_index(m, n), self.pair_index(mp, np))]
    }

    /// Add weight * |psi><psi| in place. Construction-phase only.
    pub(crate) fn add_weighted_outer(&mut self, weight: f64, psi: &TwoModePure) {
        debug_assert_eq!(psi.dim(), self.dim);
        let dim = self.dim;
        // flatten psi into the composite index
        let mut flat = Vec::with_capacity(dim * dim);
        for m in 0..dim {
            for n in 0..dim {
                flat.push(psi.amplitude(m, n));
            }
        }
        let w = Complex64::new(weight, 0.0);
        for (row, &x) in flat.iter().enumerate() {
            if x.norm_sqr() == 0.0 {
                continue;
            }
            for (col, &y) in flat.iter().enumerate() {
                if y.norm_sqr() == 0.0 {
                    continue;
                }
                self.elements[(row, col)] += w * x * y.conj();
            }
        }
    }

    /// Trace (real part; the imaginary part is zero for Hermitian content).
    pub fn trace(&self) -> f64 {
        (0..self.dim * self.dim)
            .map(|i| self.elements[(i, i)].re)
            .sum()
    }

    /// Largest |rho[x,y] - conj(rho[y,x])| over all element pairs.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim * self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.elements[(i, j)] - self.elements[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Rescale to unit trace.
    pub fn normalize(&self) -> Result<Self> {
        let tr = self.trace();
        if tr <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            elements: &self.elements * Complex64::new(tr.recip(), 0.0),
            dim: self.dim,
        })
    }

    /// Diagonal <m, n| rho |m, n> as a real matrix over (m, n).
    pub fn diagonal(&self) -> DMatrix<f64> {
        let mut diag = DMatrix::zeros(self.dim, self.dim);
        for m in 0..self.dim {
            for n in 0..self.dim {
                let idx = self.pair_index(m, n);
                diag[(m, n)] = self.elements[(idx, idx)].re;
            }
        }
        diag
    }

    /// Partial trace over mode c, leaving a one-mode density for mode a.
    pub fn partial_trace_c(&self) -> DMatrix<Complex64> {
        let mut rho_a = DMatrix::zeros(self.dim, self.dim);
        for m in 0..self.dim {
            for mp in 0..self.dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for n in 0..self.dim {
                    acc += self.element(m, n, mp, n);
                }
                rho_a[(m, mp)] = acc;
            }
        }
        rho_a
    }

    /// Smallest eigenvalue of the (Hermitian) density. Intended for
    /// positive-semidefiniteness checks on small instances.
    pub fn min_eigenvalue(&self) -> f64 {
        crate::linalg::hermitian_eigenvalues(&self.elements)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn block_indexing_roundtrip() {
        for total in 0..6 {
            let triples: Vec<_> = block_triples(total).collect();
            assert_eq!(triples.len(), block_dim(total));
            for (i, t) in triples.iter().enumerate() {
                assert_eq!(t.total(), total);
                assert_eq!(block_index(total, t.n_a, t.n_b), i);
            }
        }
    }

    #[test]
    fn normalize_scales_single_amplitude() {
        let s = ThreeModeState::from_amplitudes(
            2,
            [(OccupationTriple::new(0, 0, 0), c(2.0))],
        );
        let n = s.normalize().unwrap();
        assert_relative_eq!(
            n.amplitude(OccupationTriple::new(0, 0, 0)).re,
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn normalize_preserves_amplitude_ratio() {
        let s = ThreeModeState::from_amplitudes(
            2,
            [
                (OccupationTriple::new(1, 0, 1), c(0.6)),
                (OccupationTriple::new(0, 2, 0), c(0.8)),
            ],
        );
        let n = s.normalize().unwrap();
        assert_relative_eq!(n.norm_sqr(), 1.0, epsilon = 1e-14);
        let a = n.amplitude(OccupationTriple::new(1, 0, 1)).re;
        let b = n.amplitude(OccupationTriple::new(0, 2, 0)).re;
        assert_relative_eq!(a / b, 0.75, epsilon = 1e-14);
    }

    #[test]
    fn normalize_zero_state_errors() {
        let s = ThreeModeState::zero(3);
        assert!(matches!(s.normalize(), Err(Error::ZeroNorm)));
    }

    #[test]
    fn slice_at_b_picks_matching_occupations() {
        let s = ThreeModeState::from_amplitudes(
            2,
            [(OccupationTriple::new(1, 0, 1), c(1.0))],
        );
        let slice0 = s.slice_at_b(0);
        assert_relative_eq!(slice0.amplitude(1, 1).re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(slice0.norm_sqr(), 1.0, epsilon = 1e-15);

        let slice1 = s.slice_at_b(1);
        assert!(slice1.is_zero());
    }

    #[test]
    fn slice_beyond_cutoff_is_empty() {
        let s = ThreeModeState::from_amplitudes(
            2,
            [(OccupationTriple::new(1, 0, 1), c(1.0))],
        );
        assert!(s.slice_at_b(7).is_zero());
    }

    #[test]
    fn vacuum_has_single_block_at_total_zero() {
        let s = ThreeModeState::from_amplitudes(
            4,
            [(OccupationTriple::new(0, 0, 0), c(1.0))],
        );
        let blocks: Vec<_> = s.blocks().collect();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].0, 0);
    }

    #[test]
    fn bell_pair_partial_trace_is_maximally_mixed() {
        // (|0,0> + |1,1>)/sqrt(2) over (a, c)
        let mut psi = TwoModePure::zero(2);
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        let mut m = psi.matrix().clone();
        m[(0, 0)] = c(inv);
        m[(1, 1)] = c(inv);
        psi = TwoModePure::from_matrix(m);

        let mut rho = TwoModeDensity::zero(2);
        rho.add_weighted_outer(1.0, &psi);
        let rho_a = rho.partial_trace_c();
        assert_relative_eq!(rho_a[(0, 0)].re, 0.5, epsilon = 1e-14);
        assert_relative_eq!(rho_a[(1, 1)].re, 0.5, epsilon = 1e-14);
        assert!(rho_a[(0, 1)].norm() < 1e-14);
        assert!(rho_a[(1, 0)].norm() < 1e-14);
        // trace preserved
        assert_relative_eq!(rho.trace(), 1.0, epsilon = 1e-14);
        assert!(rho.hermiticity_defect() < 1e-14);
        assert!(rho.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn pruning_drops_dust_and_empty_blocks() {
        let s = ThreeModeState::from_amplitudes(
            2,
            [
                (OccupationTriple::new(0, 0, 0), c(1.0)),
                (OccupationTriple::new(1, 0, 1), c(1e-12)),
            ],
        );
        let pruned = s.pruned(1e-16);
        assert_eq!(pruned.blocks().count(), 1);
    }

    #[test]
    #[should_panic(expected = "exceeds cutoff")]
    fn construction_beyond_cutoff_panics() {
        ThreeModeState::from_amplitudes(1, [(OccupationTriple::new(1, 1, 1), c(1.0))]);
    }
}

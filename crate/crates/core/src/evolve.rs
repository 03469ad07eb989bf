//! Input preparation and propagation through the coupler.
//!
//! Two independent routes compute the same output state:
//!
//! * [`evolve_multinomial`] expands the transformed creation-operator
//!   polynomial term by term (the production path, restricted to squeezed
//!   inputs on (l, 0, l) triples);
//! * [`evolve_oracle`] exponentiates the second-quantized hopping generator
//!   on each total-photon block by dense Hermitian eigendecomposition (works
//!   for any truncated state and is exactly norm-preserving).
//!
//! Their agreement is the main correctness check of the whole library.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{block_dim, block_index, block_triples, OccupationTriple, ThreeModeState};
use crate::linalg::symmetric_eigen;
use crate::trimer::{CouplerConfig, TrimerUnitary};

/// Largest total-photon block the oracle will diagonalize densely.
/// 1326 corresponds to 50 photons; beyond that the cubic eigensolver cost
/// stops being a test-time convenience.
pub const ORACLE_BLOCK_DIM_LIMIT: usize = 1326;

/// Squeezed two-mode source feeding the outer guides, truncated at `l_max`
/// pair-emission terms. The discarded squared norm is exactly
/// |r|^(2 (l_max + 1)).
#[derive(Clone, Copy, Debug)]
pub struct SqueezeSource {
    r: Complex64,
    l_max: u32,
}

impl SqueezeSource {
    pub fn new(r: Complex64, l_max: u32) -> Result<Self> {
        if !(r.norm() < 1.0) {
            return Err(Error::SqueezeOutOfRange(r.norm()));
        }
        Ok(Self { r, l_max })
    }

    /// Choose the smallest `l_max` whose truncation tail is below `tail_tol`.
    pub fn with_tail_tolerance(r: Complex64, tail_tol: f64) -> Result<Self> {
        if !(r.norm() < 1.0) {
            return Err(Error::SqueezeOutOfRange(r.norm()));
        }
        Ok(Self {
            r,
            l_max: default_l_max(r.norm(), tail_tol),
        })
    }

    pub fn r(&self) -> Complex64 {
        self.r
    }

    pub fn l_max(&self) -> u32 {
        self.l_max
    }

    /// Squared norm discarded by the truncation: |r|^(2 (l_max + 1)).
    pub fn tail_mass(&self) -> f64 {
        tail_mass(self.r.norm(), self.l_max)
    }
}

/// Squared norm beyond `l_max` of the geometric squeeze series.
pub fn tail_mass(r_abs: f64, l_max: u32) -> f64 {
    r_abs.powi(2 * (l_max as i32 + 1))
}

/// Smallest l_max with |r|^(2 (l_max + 1)) < tail_tol.
pub fn default_l_max(r_abs: f64, tail_tol: f64) -> u32 {
    if r_abs <= 0.0 {
        return 0;
    }
    let mut l_max = 0u32;
    while tail_mass(r_abs, l_max) >= tail_tol {
        l_max += 1;
    }
    l_max
}

/// The squeezed source in the outer guides, vacuum in the center:
/// amplitudes sqrt(1 - |r|^2) r^l on (l, 0, l) for l <= l_max.
pub fn prepare_input(source: &SqueezeSource) -> ThreeModeState {
    let prefactor = (1.0 - source.r.norm_sqr()).sqrt();
    let mut state = ThreeModeState::zero(2 * source.l_max);
    let mut amp = Complex64::new(prefactor, 0.0);
    for l in 0..=source.l_max {
        state.accumulate(OccupationTriple::new(l, 0, l), amp);
        amp *= source.r;
    }
    state
}

/// Kahan-compensated accumulator for complex sums.
#[derive(Clone, Copy, Default)]
struct Compensated {
    sum: Complex64,
    carry: Complex64,
}

impl Compensated {
    fn add(&mut self, value: Complex64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Log-magnitude and phase of one matrix entry, for building powers of
/// entries without overflow. A zero entry is flagged instead of producing
/// ln(0) = -inf, so that 0 * ln|U| never turns into NaN.
#[derive(Clone, Copy)]
struct LogEntry {
    ln_mag: f64,
    phase: f64,
    is_zero: bool,
}

impl LogEntry {
    fn of(value: Complex64) -> Self {
        let mag = value.norm();
        Self {
            ln_mag: if mag > 0.0 { mag.ln() } else { 0.0 },
            phase: value.arg(),
            is_zero: mag == 0.0,
        }
    }
}

/// Compositions (p1, p2, p3) of `total` into three non-negative parts,
/// in lexicographic order.
fn compositions(total: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::with_capacity(block_dim(total));
    for p1 in 0..=total {
        for p2 in 0..=(total - p1) {
            out.push([p1, p2, total - p1 - p2]);
        }
    }
    out
}

/// Expand the coupler-transformed creation-operator polynomial of the
/// squeezed input.
///
/// For each pair-emission order l, the transformed operator product
/// (sum_k U[0][k] o_k†)^l (sum_k U[2][k] o_k†)^l is expanded by the
/// multinomial theorem; the term with first-factor powers p and
/// second-factor powers q lands on the triple v = p + q with coefficient
///
///   amp_l * l! / (p1! p2! p3! q1! q2! q3!)
///         * prod_k U[0][k]^(p_k) U[2][k]^(q_k) * sqrt(v1! v2! v3!).
///
/// Factorial ratios are evaluated in the log domain (they reach e^870 at the
/// default truncation for |r| -> 0.9, where the compensating |U| powers are
/// equally far below 1), with the complex phase carried separately. Sums are
/// Kahan-compensated.
///
/// The input must be supported on (l, 0, l) triples only; anything else is a
/// contract violation (use [`evolve_oracle`] for general states).
pub fn evolve_multinomial(
    input: &ThreeModeState,
    unitary: &TrimerUnitary,
) -> Result<ThreeModeState> {
    // Validate support and collect the per-l source amplitudes.
    let mut source_amps: Vec<(u32, Complex64)> = Vec::new();
    for (triple, amp) in input.triples() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        if triple.n_b != 0 || triple.n_a != triple.n_c {
            return Err(Error::UnsupportedSupport(triple.n_a, triple.n_b, triple.n_c));
        }
        source_amps.push((triple.n_a, amp));
    }

    let max_total = input.max_total();
    let ln_fact = ln_factorials(max_total as usize);
    let row_a: [LogEntry; 3] = [
        LogEntry::of(unitary.entry(0, 0)),
        LogEntry::of(unitary.entry(0, 1)),
        LogEntry::of(unitary.entry(0, 2)),
    ];
    let row_c: [LogEntry; 3] = [
        LogEntry::of(unitary.entry(2, 0)),
        LogEntry::of(unitary.entry(2, 1)),
        LogEntry::of(unitary.entry(2, 2)),
    ];

    let mut out = ThreeModeState::zero(max_total);
    for &(l, amp_l) in &source_amps {
        let total = 2 * l;
        let mut block = vec![Compensated::default(); block_dim(total)];
        let ln_amp = amp_l.norm().ln();
        let amp_phase = amp_l.arg();
        let parts = compositions(l);

        for p in &parts {
            let mut ln_p = ln_fact[l as usize];
            let mut phase_p = amp_phase;
            let mut zero_p = false;
            for k in 0..3 {
                ln_p -= ln_fact[p[k] as usize];
                if p[k] > 0 {
                    if row_a[k].is_zero {
                        zero_p = true;
                        break;
                    }
                    ln_p += p[k] as f64 * row_a[k].ln_mag;
                    phase_p += p[k] as f64 * row_a[k].phase;
                }
            }
            if zero_p {
                continue;
            }
            for q in &parts {
                let mut ln_term = ln_amp + ln_p;
                let mut phase = phase_p;
                let mut zero_q = false;
                for k in 0..3 {
                    ln_term -= ln_fact[q[k] as usize];
                    if q[k] > 0 {
                        if row_c[k].is_zero {
                            zero_q = true;
                            break;
                        }
                        ln_term += q[k] as f64 * row_c[k].ln_mag;
                        phase += q[k] as f64 * row_c[k].phase;
                    }
                }
                if zero_q {
                    continue;
                }
                let v = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
                for vk in v {
                    ln_term += 0.5 * ln_fact[vk as usize];
                }
                let term = Complex64::from_polar(ln_term.exp(), phase);
                block[block_index(total, v[0], v[1])].add(term);
            }
        }

        out.insert_block(total, block.into_iter().map(|c| c.sum).collect());
    }
    Ok(out)
}

/// Natural logs of 0! ..= n!.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    table.push(0.0);
    let mut acc = 0.0;
    for k in 1..=n {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

/// Propagate any truncated state by exponentiating the hopping generator
/// kappa (a†b + b†a + b†c + c†b) on each total-photon block:
/// out = V exp(-i z E) V^T in, from a dense real-symmetric eigendecomposition
/// of the block Hamiltonian.
pub fn evolve_oracle(input: &ThreeModeState, config: &CouplerConfig) -> Result<ThreeModeState> {
    let mut out = ThreeModeState::zero(input.max_total());
    for (total, amplitudes) in input.blocks() {
        let dim = block_dim(total);
        if dim > ORACLE_BLOCK_DIM_LIMIT {
            return Err(Error::BlockTooLarge {
                dim,
                limit: ORACLE_BLOCK_DIM_LIMIT,
            });
        }
        let hamiltonian = block_hamiltonian(total, config.kappa);
        let eigen = symmetric_eigen(&hamiltonian, true);
        let vectors = eigen
            .eigenvectors
            .as_ref()
            .expect("eigenvectors requested");

        // coefficients in the eigenbasis: V^T psi (V is real orthogonal)
        let mut coeffs = vec![Complex64::new(0.0, 0.0); dim];
        for (j, coeff) in coeffs.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, amp) in amplitudes.iter().enumerate() {
                acc += vectors[(i, j)] * amp;
            }
            *coeff = acc * Complex64::from_polar(1.0, -config.z * eigen.eigenvalues[j]);
        }
        let mut vec_out = vec![Complex64::new(0.0, 0.0); dim];
        for (i, out_amp) in vec_out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, coeff) in coeffs.iter().enumerate() {
                acc += vectors[(i, j)] * coeff;
            }
            *out_amp = acc;
        }
        out.insert_block(total, vec_out);
    }
    Ok(out)
}

/// Matrix of kappa (a†b + b†a + b†c + c†b) on the block of fixed total.
fn block_hamiltonian(total: u32, kappa: f64) -> DMatrix<f64> {
    let dim = block_dim(total);
    let mut h = DMatrix::zeros(dim, dim);
    for triple in block_triples(total) {
        let col = block_index(total, triple.n_a, triple.n_b);
        let (na, nb, nc) = (triple.n_a, triple.n_b, triple.n_c);
        // a†b |na, nb, nc> = sqrt((na+1) nb) |na+1, nb-1, nc>
        if nb >= 1 {
            let row = block_index(total, na + 1, nb - 1);
            h[(row, col)] += kappa * (((na + 1) * nb) as f64).sqrt();
        }
        // b†a
        if na >= 1 {
            let row = block_index(total, na - 1, nb + 1);
            h[(row, col)] += kappa * ((na * (nb + 1)) as f64).sqrt();
        }
        // c†b
        if nb >= 1 {
            let row = block_index(total, na, nb - 1);
            h[(row, col)] += kappa * ((nb * (nc + 1)) as f64).sqrt();
        }
        // b†c
        if nc >= 1 {
            let row = block_index(total, na, nb + 1);
            h[(row, col)] += kappa * (((nb + 1) * nc) as f64).sqrt();
        }
    }
    h
}

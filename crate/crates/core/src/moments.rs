//! Exact moment operators of diagonal ensembles and design checkers.
//!
//! For an ensemble of diagonal unitaries, `E[U^t (x) (U*)^t]` is itself
//! diagonal and is indexed by tuples `(a_1..a_t, b_1..b_t)` of basis states.
//! Averaging a uniform phase kills every entry whose net phase coefficient is
//! nonzero, so for fully random diagonal matrices an entry survives (value 1)
//! exactly when the `a` and `b` multisets coincide ("multiset rule"). All
//! design checks in this module compare surviving-entry patterns exactly, with
//! no sampling involved.
//!
//! Tuple sweeps never materialize the `2^(2tn)` index space unless a dense
//! vector is explicitly requested; the exhaustive design check walks multiset
//! classes instead, which is equivalent because every quantity involved is
//! invariant under separate permutations of the `a` and `b` indices.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use itertools::Itertools;
use ndarray::Array2;
use ndarray_linalg::{EigValsh, UPLO};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::gr_placements;
use crate::error::{Error, Result};

/// Dense moment vectors are limited to `2^(2tn) <= 2^24` entries.
pub const DENSE_BITS_LIMIT: u32 = 24;
/// Streamed design checks are limited by the number of multiset classes.
const MULTISET_BUDGET: u128 = 20_000_000;
/// Entries at or below this magnitude are structural zeros for the trace-norm
/// block decomposition.
const BLOCK_EPS: f64 = 1e-14;

/// Diagonal of `E[U^t (x) (U*)^t]` for a diagonal ensemble, stored densely.
///
/// Entries are indexed by the packed word `a_1..a_t b_1..b_t` (each component
/// `n` bits, `a_1` most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalMomentVector {
    n: usize,
    t: usize,
    entries: Vec<f64>,
}

impl DiagonalMomentVector {
    #[cfg(test)]
    pub(crate) fn from_raw(n: usize, t: usize, entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), 1usize << (2 * t * n));
        Self { n, t, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Entry for explicit index tuples `a`, `b` (each of length `t`).
    pub fn entry(&self, a: &[usize], b: &[usize]) -> f64 {
        assert_eq!(a.len(), self.t);
        assert_eq!(b.len(), self.t);
        let mut idx = 0usize;
        for &x in a.iter().chain(b.iter()) {
            debug_assert!(x < 1 << self.n);
            idx = (idx << self.n) | x;
        }
        self.entries[idx]
    }
}

fn dense_bits(n: usize, t: usize) -> Result<u32> {
    if n == 0 || t == 0 {
        return Err(Error::InvalidArgument(format!(
            "moment orders need n >= 1 and t >= 1, got n={n}, t={t}"
        )));
    }
    let bits = 2 * t as u32 * n as u32;
    if bits > DENSE_BITS_LIMIT {
        return Err(Error::Capacity {
            what: "dense moment vector (2tn bits)",
            requested: bits as usize,
            limit: DENSE_BITS_LIMIT as usize,
        });
    }
    Ok(bits)
}

/// Decodes the packed tuple index into `2t` components of `n` bits each.
#[inline]
fn decode_tuple(idx: usize, n: usize, t: usize, out: &mut [u16]) {
    let mask = (1usize << n) - 1;
    for k in 0..2 * t {
        out[2 * t - 1 - k] = ((idx >> (k * n)) & mask) as u16;
    }
}

#[inline]
fn sorted_copy(src: &[u16], dst: &mut [u16]) {
    dst.copy_from_slice(src);
    dst.sort_unstable();
}

/// Exact moment vector of fully random diagonal-unitary matrices: entry 1
/// iff the `a` and `b` multisets coincide, else 0.
pub fn diag_target_moment(n: usize, t: usize) -> Result<DiagonalMomentVector> {
    let bits = dense_bits(n, t)?;
    let entries: Vec<f64> = (0..1usize << bits)
        .into_par_iter()
        .map(|idx| {
            let mut comp = [0u16; 24];
            let mut sa = [0u16; 12];
            let mut sb = [0u16; 12];
            decode_tuple(idx, n, t, &mut comp[..2 * t]);
            sorted_copy(&comp[..t], &mut sa[..t]);
            sorted_copy(&comp[t..2 * t], &mut sb[..t]);
            if sa[..t] == sb[..t] {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(DiagonalMomentVector { n, t, entries })
}

/// Exact moment vector of the `G_r` phase-random circuit: the product over
/// all placements of the local multiset rule on site-restricted patterns.
pub fn gr_circuit_moment(n: usize, r: usize, t: usize) -> Result<DiagonalMomentVector> {
    let bits = dense_bits(n, t)?;
    let masks = placement_masks(n, r)?;
    let entries: Vec<f64> = (0..1usize << bits)
        .into_par_iter()
        .map(|idx| {
            let mut comp = [0u16; 24];
            decode_tuple(idx, n, t, &mut comp[..2 * t]);
            let ok = masks.iter().all(|&mask| {
                let mut sa = [0u16; 12];
                let mut sb = [0u16; 12];
                for k in 0..t {
                    sa[k] = comp[k] & mask;
                    sb[k] = comp[t + k] & mask;
                }
                sa[..t].sort_unstable();
                sb[..t].sort_unstable();
                sa[..t] == sb[..t]
            });
            if ok {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(DiagonalMomentVector { n, t, entries })
}

/// Bitmasks (over the global index) of every `G_r` placement.
fn placement_masks(n: usize, r: usize) -> Result<Vec<u16>> {
    Ok(gr_placements(n, r)?
        .into_iter()
        .map(|sites| {
            sites
                .iter()
                .map(|&q| 1u16 << (n - q))
                .fold(0u16, |acc, b| acc | b)
        })
        .collect())
}

/// Verdict of a design check, serializable as
/// `{n, t, ensemble, norm, distance, is_exact}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignReport {
    pub n: usize,
    pub t: usize,
    pub ensemble: String,
    pub norm: String,
    pub distance: f64,
    pub is_exact: bool,
}

/// The predicate of the exact-design theorem for `G_r`: exact iff
/// `r > log2 t` when `t <= 2^n - 1`, and iff `r = n` when `t >= 2^n`.
pub fn theorem_gr_predicate(n: usize, r: usize, t: usize) -> bool {
    if (t as u128) >= (1u128 << n) {
        r == n
    } else {
        (1u128 << r) > t as u128
    }
}

fn multiset_count(d: u128, t: u128) -> u128 {
    // C(d + t - 1, t), small arguments only
    let mut num = 1u128;
    let mut den = 1u128;
    for k in 0..t {
        num *= d + t - 1 - k;
        den *= k + 1;
    }
    num / den
}

/// Checks whether the `G_r` circuit is an exact diagonal-unitary t-design by
/// exhaustive sweep, streamed over multiset classes.
///
/// Both the circuit and target entries are 0/1 and depend only on the
/// multisets of the `a` and `b` tuples, and the circuit entry is the equality
/// of the per-placement restriction signatures. A deviating tuple therefore
/// exists iff two distinct multisets share all restriction signatures, which
/// is detected with a single hash pass; the max-abs deviation is 1 exactly
/// when such a collision exists and 0 otherwise.
pub fn is_exact_design(n: usize, r: usize, t: usize) -> Result<DesignReport> {
    if n == 0 || t == 0 {
        return Err(Error::InvalidArgument(format!(
            "design check needs n >= 1 and t >= 1, got n={n}, t={t}"
        )));
    }
    let d = 1usize << n;
    let classes = multiset_count(d as u128, t as u128);
    if classes > MULTISET_BUDGET {
        return Err(Error::Capacity {
            what: "design-check multiset classes",
            requested: classes.min(usize::MAX as u128) as usize,
            limit: MULTISET_BUDGET as usize,
        });
    }
    let masks = placement_masks(n, r)?;
    let ensemble = format!("Gr(r={r})");

    let mut seen: HashMap<Vec<u64>, Vec<u16>> = HashMap::new();
    for ms in (0..d as u16).combinations_with_replacement(t) {
        // One u64 per placement: the sorted masked patterns, packed base 2^n.
        let sig: Vec<u64> = masks
            .iter()
            .map(|&mask| {
                let mut restricted: Vec<u16> = ms.iter().map(|&x| x & mask).collect();
                restricted.sort_unstable();
                restricted
                    .iter()
                    .fold(0u64, |acc, &x| (acc << n) | x as u64)
            })
            .collect();
        match seen.entry(sig) {
            Entry::Occupied(_) => {
                // Two distinct multisets are indistinguishable to every
                // placement: a witness tuple with circuit entry 1, target 0.
                return Ok(DesignReport {
                    n,
                    t,
                    ensemble,
                    norm: "max-abs".into(),
                    distance: 1.0,
                    is_exact: false,
                });
            }
            Entry::Vacant(v) => {
                v.insert(ms);
            }
        }
    }
    Ok(DesignReport {
        n,
        t,
        ensemble,
        norm: "max-abs".into(),
        distance: 0.0,
        is_exact: true,
    })
}

fn check_gcz_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "G_CZ analysis needs n >= 2, got {n}"
        )));
    }
    if n > 6 {
        return Err(Error::Capacity {
            what: "G_CZ tuple sweep (4n bits)",
            requested: 4 * n,
            limit: 24,
        });
    }
    Ok(())
}

/// Per-step expectation of one moment entry of the `G_CZ` circuit at t = 2.
///
/// For the tuple `(a, b; c, d)` the expectation over a single step (uniform
/// pair, uniform single-qubit phases) is the average over pairs `{i, j}` of
/// `[a_i+b_i = c_i+d_i] [a_j+b_j = c_j+d_j] (-1)^(a_i a_j + b_i b_j + c_i c_j + d_i d_j)`;
/// the phase averages force the per-qubit coefficients to vanish and the
/// controlled-Z contributes the sign.
pub fn gcz_step_factor(n: usize, a: usize, b: usize, c: usize, d: usize) -> f64 {
    let bit = |x: usize, q: usize| -> usize { (x >> (n - q)) & 1 };
    let mut sum = 0i64;
    for i in 1..=n {
        let diff_i = bit(a, i) + bit(b, i) == bit(c, i) + bit(d, i);
        if !diff_i {
            continue;
        }
        for j in i + 1..=n {
            if bit(a, j) + bit(b, j) != bit(c, j) + bit(d, j) {
                continue;
            }
            let sign = bit(a, i) * bit(a, j)
                + bit(b, i) * bit(b, j)
                + bit(c, i) * bit(c, j)
                + bit(d, i) * bit(d, j);
            sum += if sign % 2 == 0 { 1 } else { -1 };
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    sum as f64 / pairs
}

/// Largest per-step factor magnitude over tuples where the target moment is
/// zero; the geometric contraction rate of the slowest-converging entry.
///
/// A value of exactly 1 means the `G_CZ` circuit never converges to the
/// target at that size (this happens at n = 2, where the single available
/// pair makes the circuit stationary).
pub fn gcz_slowest_mode(n: usize) -> Result<f64> {
    check_gcz_n(n)?;
    let dim = 1usize << n;
    let worst = (0..dim * dim)
        .into_par_iter()
        .map(|ab| {
            let (a, b) = (ab / dim, ab % dim);
            let mut local = 0.0f64;
            for c in 0..dim {
                for d in 0..dim {
                    let target = (a == c && b == d) || (a == d && b == c);
                    if target {
                        continue;
                    }
                    let m = gcz_step_factor(n, a, b, c, d).abs();
                    if m > local {
                        local = m;
                    }
                }
            }
            local
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// Max-abs deviation of the `G_CZ` circuit's t = 2 moment from the random
/// diagonal-unitary target after `steps` gates. Exact: the steps are i.i.d.,
/// so each entry is the per-step factor raised to `steps`.
pub fn gcz_epsilon(n: usize, steps: u64) -> Result<f64> {
    check_gcz_n(n)?;
    let dim = 1usize << n;
    let worst = (0..dim * dim)
        .into_par_iter()
        .map(|ab| {
            let (a, b) = (ab / dim, ab % dim);
            let mut local = 0.0f64;
            for c in 0..dim {
                for d in 0..dim {
                    let target = if (a == c && b == d) || (a == d && b == c) {
                        1.0
                    } else {
                        0.0
                    };
                    let m = gcz_step_factor(n, a, b, c, d);
                    let magnitude = m.abs().powf(steps as f64);
                    let powered = if m < 0.0 && steps % 2 == 1 {
                        -magnitude
                    } else {
                        magnitude
                    };
                    let dev = (powered - target).abs();
                    if dev > local {
                        local = dev;
                    }
                }
            }
            local
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// Smallest `T` with `gcz_epsilon(n, T) <= eps`, located by bracketed binary
/// search on the slowest mode (the deviation is exactly `slowest^T` for all
/// tuples off the target support, and 0 on it).
///
/// Returns a non-convergence error when the slowest mode has magnitude 1 and
/// `eps < 1`, which provably happens at n = 2.
pub fn t_conv(n: usize, eps: f64) -> Result<u64> {
    check_gcz_n(n)?;
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "eps must be positive, got {eps}"
        )));
    }
    if eps >= 1.0 {
        return Ok(0);
    }
    let slowest = gcz_slowest_mode(n)?;
    if slowest == 0.0 {
        return Ok(1);
    }
    if slowest >= 1.0 {
        return Err(Error::NonConvergent(format!(
            "G_CZ at n={n} has a non-decaying moment entry (slowest mode {slowest}); \
             epsilon stays at 1 for every circuit length"
        )));
    }
    let eps_at = |steps: u64| slowest.powf(steps as f64);
    let mut hi = 1u64;
    while eps_at(hi) > eps {
        hi *= 2;
    }
    let mut lo = hi / 2; // eps_at(lo) > eps for hi > 1, and eps_at(0) = 1 > eps
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if eps_at(mid) <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Dense Hermitian moment operator `E[|psi><psi|^t]` of a state ensemble.
#[derive(Debug, Clone)]
pub struct MomentMatrix {
    n: usize,
    t: usize,
    mat: Array2<Complex64>,
}

impl MomentMatrix {
    pub(crate) fn from_parts(n: usize, t: usize, mat: Array2<Complex64>) -> Self {
        Self { n, t, mat }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.mat
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.mat[[i, i]]).sum()
    }
}

pub(crate) fn state_moment_bits(n: usize, t: usize) -> Result<u32> {
    if n == 0 || t == 0 {
        return Err(Error::InvalidArgument(format!(
            "moment orders need n >= 1 and t >= 1, got n={n}, t={t}"
        )));
    }
    let bits = (n * t) as u32;
    if (1u128 << bits) > 4096 {
        return Err(Error::Capacity {
            what: "dense state moment (2^(nt) dimension)",
            requested: 1usize << bits.min(40),
            limit: 4096,
        });
    }
    Ok(bits)
}

/// Moment operator of Haar-random states: the projector onto the symmetric
/// subspace of `t` copies, normalized to unit trace.
pub fn haar_state_moment(n: usize, t: usize) -> Result<MomentMatrix> {
    let bits = state_moment_bits(n, t)?;
    let dim = 1usize << bits;
    let d = 1usize << n;
    let sym_dim = multiset_count(d as u128, t as u128) as f64;
    let t_factorial: f64 = (1..=t).map(|k| k as f64).product();

    let mut mat = Array2::<Complex64>::zeros((dim, dim));
    let mask = d - 1;
    let mut row_sorted = vec![0u16; t];
    let mut col_sorted = vec![0u16; t];
    for row in 0..dim {
        for (k, slot) in row_sorted.iter_mut().enumerate() {
            *slot = ((row >> ((t - 1 - k) * n)) & mask) as u16;
        }
        row_sorted.sort_unstable();
        // Matchings between equal multisets: product of multiplicity factorials.
        let mut matchings = 1.0f64;
        let mut run = 1usize;
        for k in 1..=t {
            if k < t && row_sorted[k] == row_sorted[k - 1] {
                run += 1;
                matchings *= run as f64;
            } else {
                run = 1;
            }
        }
        let value = Complex64::new(matchings / (t_factorial * sym_dim), 0.0);
        for col in 0..dim {
            for (k, slot) in col_sorted.iter_mut().enumerate() {
                *slot = ((col >> ((t - 1 - k) * n)) & mask) as u16;
            }
            col_sorted.sort_unstable();
            if row_sorted == col_sorted {
                mat[[row, col]] = value;
            }
        }
    }
    Ok(MomentMatrix { n, t, mat })
}

/// Trace-norm distance `|| m1 - m2 ||_1` between two moment operators (not
/// halved, per the state-design convention).
///
/// The difference is decomposed into connected blocks of its sparsity pattern
/// and each block is diagonalized independently; entries below 1e-14 are
/// treated as structural zeros and their total magnitude is added to the
/// result, so the returned value is an upper bound on the exact trace norm
/// that is tight to twice the dropped mass (well under 1e-12 for the exact
/// moment operators built by this crate).
pub fn moment_distance(m1: &MomentMatrix, m2: &MomentMatrix) -> Result<f64> {
    if m1.dim() != m2.dim() {
        return Err(Error::ShapeMismatch {
            context: "moment matrix dimensions",
            left: m1.dim(),
            right: m2.dim(),
        });
    }
    let diff = &m1.mat - &m2.mat;
    Ok(block_trace_norm(&diff))
}

/// Trace norm of a Hermitian matrix via connected-component block splitting.
pub(crate) fn block_trace_norm(diff: &Array2<Complex64>) -> f64 {
    let dim = diff.nrows();
    let mut parent: Vec<usize> = (0..dim).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut dropped = 0.0f64;
    for i in 0..dim {
        for j in i + 1..dim {
            let mag = diff[[i, j]].norm();
            if mag > BLOCK_EPS {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            } else {
                dropped += 2.0 * mag;
            }
        }
    }
    let mut components: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..dim {
        let root = find(&mut parent, i);
        components.entry(root).or_default().push(i);
    }

    let mut total = dropped;
    for block in components.values() {
        if block.len() == 1 {
            total += diff[[block[0], block[0]]].norm();
            continue;
        }
        let k = block.len();
        let mut sub = Array2::<Complex64>::zeros((k, k));
        let mut all_real = true;
        for (bi, &i) in block.iter().enumerate() {
            for (bj, &j) in block.iter().enumerate() {
                let v = diff[[i, j]];
                if v.im.abs() > BLOCK_EPS {
                    all_real = false;
                }
                sub[[bi, bj]] = v;
            }
        }
        let eigs: Vec<f64> = if all_real {
            let real = sub.map(|z| z.re);
            real.eigvalsh(UPLO::Lower)
                .expect("real symmetric eigendecomposition")
                .to_vec()
        } else {
            sub.eigvalsh(UPLO::Lower)
                .expect("Hermitian eigendecomposition")
                .to_vec()
        };
        total += eigs.iter().map(|l| l.abs()).sum::<f64>();
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{sample_gr_instance, RngSeed};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn target_moment_order_one() {
        let v = diag_target_moment(1, 1).unwrap();
        assert_eq!(v.entry(&[0], &[0]), 1.0);
        assert_eq!(v.entry(&[1], &[1]), 1.0);
        assert_eq!(v.entry(&[0], &[1]), 0.0);
        assert_eq!(v.entry(&[1], &[0]), 0.0);
    }

    #[test]
    fn target_moment_multiset_rule() {
        let v = diag_target_moment(1, 2).unwrap();
        assert_eq!(v.entry(&[0, 1], &[1, 0]), 1.0);
        assert_eq!(v.entry(&[0, 0], &[1, 1]), 0.0);
    }

    #[test]
    fn target_moment_surviving_count() {
        // d ordered pairs with a1 = a2 match one b-tuple, the rest match two:
        // d(2d - 1) surviving entries at t = 2.
        let v = diag_target_moment(2, 2).unwrap();
        let ones = v.entries().iter().filter(|&&x| x == 1.0).count();
        assert_eq!(ones, 28);
    }

    #[test]
    fn dense_budget_enforced() {
        assert!(matches!(
            diag_target_moment(4, 4),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn gr_moment_with_global_gate_is_target() {
        for t in 1..=3 {
            let gr = gr_circuit_moment(2, 2, t).unwrap();
            let target = diag_target_moment(2, t).unwrap();
            assert_eq!(gr, target);
        }
    }

    #[test]
    fn gr_moment_two_qubit_gates_three_qubits() {
        let gr = gr_circuit_moment(3, 2, 2).unwrap();
        let target = diag_target_moment(3, 2).unwrap();
        assert_eq!(gr, target);
    }

    #[test]
    fn gr_moment_single_qubit_gates_witness() {
        let gr = gr_circuit_moment(3, 1, 2).unwrap();
        let target = diag_target_moment(3, 2).unwrap();
        assert_eq!(gr.entry(&[0, 3], &[1, 2]), 1.0);
        assert_eq!(target.entry(&[0, 3], &[1, 2]), 0.0);
    }

    #[test]
    fn exactness_examples() {
        assert!(is_exact_design(3, 2, 3).unwrap().is_exact);
        assert!(!is_exact_design(3, 2, 4).unwrap().is_exact);
        assert!(is_exact_design(2, 2, 5).unwrap().is_exact);
    }

    #[test]
    fn exactness_matches_dense_vectors_on_small_grid() {
        for n in 2..=3usize {
            for r in 1..=n {
                for t in 1..=3usize {
                    let report = is_exact_design(n, r, t).unwrap();
                    let dense_equal =
                        gr_circuit_moment(n, r, t).unwrap() == diag_target_moment(n, t).unwrap();
                    assert_eq!(
                        report.is_exact, dense_equal,
                        "mismatch at n={n}, r={r}, t={t}"
                    );
                    assert_eq!(report.is_exact, report.distance <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn target_dominance() {
        for (n, r, t) in [
            (2, 1, 2),
            (2, 1, 4),
            (3, 1, 2),
            (3, 2, 3),
            (4, 2, 2),
            (4, 3, 3),
        ] {
            let gr = gr_circuit_moment(n, r, t).unwrap();
            let target = diag_target_moment(n, t).unwrap();
            for (g, tt) in gr.entries().iter().zip(target.entries()) {
                assert!(g >= tt);
            }
        }
    }

    #[test]
    fn target_permutation_symmetry() {
        let v = diag_target_moment(2, 3).unwrap();
        // swap a_1 and a_3, and separately b_2 and b_3
        for a in [[0usize, 1, 2], [3, 3, 1]] {
            for b in [[2usize, 1, 0], [1, 3, 3]] {
                let base = v.entry(&a, &b);
                assert_eq!(base, v.entry(&[a[2], a[1], a[0]], &b));
                assert_eq!(base, v.entry(&a, &[b[0], b[2], b[1]]));
            }
        }
    }

    #[test]
    fn gcz_identity_ensemble_is_not_a_design() {
        assert_abs_diff_eq!(gcz_epsilon(3, 0).unwrap(), 1.0);
        assert_abs_diff_eq!(gcz_epsilon(4, 0).unwrap(), 1.0);
    }

    #[test]
    fn gcz_target_tuples_have_unit_factor() {
        for n in 2..=4usize {
            let dim = 1usize << n;
            for a in 0..dim {
                for b in 0..dim {
                    assert_eq!(gcz_step_factor(n, a, b, a, b), 1.0);
                    assert_eq!(gcz_step_factor(n, a, b, b, a), 1.0);
                }
            }
        }
    }

    #[test]
    fn gcz_epsilon_strictly_decreasing_until_floor() {
        let mut prev = gcz_epsilon(3, 0).unwrap();
        for steps in 1..=40 {
            let e = gcz_epsilon(3, steps).unwrap();
            if prev > 1e-15 {
                assert!(e < prev, "not strictly decreasing at T={steps}");
            }
            prev = e;
            if e < 1e-15 {
                return;
            }
        }
        panic!("epsilon never dropped below 1e-15");
    }

    #[test]
    fn gcz_stationary_at_two_qubits() {
        // witness (a,b;c,d) = (00,11;01,10): per-qubit sums match and the CZ
        // sign is odd, so the only available pair contributes exactly -1.
        assert_eq!(gcz_step_factor(2, 0b00, 0b11, 0b01, 0b10), -1.0);
        assert_eq!(gcz_slowest_mode(2).unwrap(), 1.0);
        assert!(matches!(t_conv(2, 0.5), Err(Error::NonConvergent(_))));
        for steps in [1, 2, 7, 100] {
            assert_abs_diff_eq!(gcz_epsilon(2, steps).unwrap(), 1.0);
        }
    }

    #[test]
    fn t_conv_examples() {
        assert_eq!(t_conv(3, 1.0).unwrap(), 0);
        assert_eq!(t_conv(4, 2.0).unwrap(), 0);
        let coarse = t_conv(3, 1e-2).unwrap();
        let fine = t_conv(3, 1e-3).unwrap();
        assert!(fine >= coarse);
        assert!(fine > 0);
        // consistency with the direct sweep
        assert!(gcz_epsilon(3, fine).unwrap() <= 1e-3);
        assert!(gcz_epsilon(3, fine - 1).unwrap() > 1e-3);
    }

    #[test]
    fn haar_moment_order_one_is_maximally_mixed() {
        let m = haar_state_moment(1, 1).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 0.5 } else { 0.0 };
                assert_abs_diff_eq!(m.matrix()[[i, j]].re, expect, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn haar_moment_two_copies_is_scaled_symmetrizer() {
        let m = haar_state_moment(1, 2).unwrap();
        assert_abs_diff_eq!(m.trace().re, 1.0, epsilon = 1e-12);
        // eigenvalues: symmetric subspace (rank 3) at 1/3, antisymmetric at 0
        let mut eigs = m.matrix().eigvalsh(UPLO::Lower).unwrap().to_vec();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(eigs[0], 0.0, epsilon = 1e-12);
        for e in &eigs[1..] {
            assert_abs_diff_eq!(*e, 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn haar_moment_unit_trace() {
        for (n, t) in [(1, 1), (1, 3), (2, 2), (3, 2), (2, 3)] {
            let m = haar_state_moment(n, t).unwrap();
            assert_abs_diff_eq!(m.trace().re, 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(m.trace().im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn haar_moment_commutes_with_copy_permutations() {
        let m = haar_state_moment(2, 2).unwrap();
        let dim = m.dim();
        let d = 4usize;
        // swap of the two copies as a permutation matrix
        let mut swap = Array2::<Complex64>::zeros((dim, dim));
        for a1 in 0..d {
            for a2 in 0..d {
                swap[[a2 * d + a1, a1 * d + a2]] = Complex64::new(1.0, 0.0);
            }
        }
        let left = m.matrix().dot(&swap);
        let right = swap.dot(m.matrix());
        for i in 0..dim {
            for j in 0..dim {
                assert!((left[[i, j]] - right[[i, j]]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn distance_zero_and_symmetry() {
        let a = haar_state_moment(2, 2).unwrap();
        let b = haar_state_moment(2, 2).unwrap();
        assert_abs_diff_eq!(moment_distance(&a, &b).unwrap(), 0.0, epsilon = 1e-13);
        let c = crate::designs::phase_random_moment(2, 2).unwrap();
        let ab = moment_distance(&a, &c).unwrap();
        let ba = moment_distance(&c, &a).unwrap();
        assert_abs_diff_eq!(ab, ba, epsilon = 1e-13);
        assert!(matches!(
            moment_distance(&a, &haar_state_moment(1, 2).unwrap()),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn distance_to_haar_cross_checked_by_sampling() {
        // third route for the (n=1, t=2) gap: sample phase-random states,
        // average |psi><psi|^2, and compare the sampled-moment distance with
        // the exact 1/3 from the closed form
        let samples = 100_000u64;
        let seed = RngSeed(41);
        let mut acc = Array2::<Complex64>::zeros((4, 4));
        for k in 0..samples {
            let mut rng = seed.stream(k);
            let phi0: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let phi1: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            // U|+> amplitudes
            let a = [
                Complex64::from_polar(0.5f64.sqrt(), phi0),
                Complex64::from_polar(0.5f64.sqrt(), phi1),
            ];
            for row in 0..4 {
                for col in 0..4 {
                    acc[[row, col]] += a[row >> 1] * a[row & 1] * (a[col >> 1] * a[col & 1]).conj();
                }
            }
        }
        acc /= Complex64::new(samples as f64, 0.0);
        let mc = MomentMatrix::from_parts(1, 2, acc);
        let haar = haar_state_moment(1, 2).unwrap();
        let exact =
            moment_distance(&crate::designs::phase_random_moment(1, 2).unwrap(), &haar).unwrap();
        assert_abs_diff_eq!(exact, 1.0 / 3.0, epsilon = 1e-12);
        let sampled = moment_distance(&mc, &haar).unwrap();
        // per-entry standard error is about 0.25/sqrt(S); 0.01 is > 3 sigma
        // for the distance at this sample size
        assert!(
            (sampled - exact).abs() <= 0.01,
            "sampled {sampled} vs exact {exact}"
        );
    }

    #[test]
    fn monte_carlo_moment_matches_exact_gr_moment() {
        // empirical diagonal moment over sampled instances vs the exact rule
        let (n, r, t) = (2usize, 1usize, 2usize);
        let exact = gr_circuit_moment(n, r, t).unwrap();
        let samples = 10_000u64;
        let dim = 1usize << n;
        let tuples = dim.pow(2 * t as u32);
        let mut acc = vec![Complex64::new(0.0, 0.0); tuples];
        let seed = RngSeed(17);
        for k in 0..samples {
            let inst = sample_gr_instance(n, r, &mut seed.stream(k)).unwrap();
            let u = crate::circuits::instance_to_diagonal(&inst).unwrap();
            let ph = u.phases();
            for (idx, slot) in acc.iter_mut().enumerate() {
                let a1 = (idx >> (3 * n)) & (dim - 1);
                let a2 = (idx >> (2 * n)) & (dim - 1);
                let b1 = (idx >> n) & (dim - 1);
                let b2 = idx & (dim - 1);
                *slot += Complex64::from_polar(1.0, ph[a1] + ph[a2] - ph[b1] - ph[b2]);
            }
        }
        let tol = 5.0 / (samples as f64).sqrt();
        for (idx, slot) in acc.iter().enumerate() {
            let mean = slot / samples as f64;
            let exact_entry = exact.entries()[idx];
            assert!(
                (mean - Complex64::new(exact_entry, 0.0)).norm() <= tol,
                "entry {idx}: mc {mean} vs exact {exact_entry}"
            );
        }
    }
}

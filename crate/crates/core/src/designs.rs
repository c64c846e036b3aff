//! State-ensemble moments and the exact state 2-design protocol.
//!
//! Phase-random states are the orbit of `|+>^n` under random diagonal
//! unitaries. Their t-copy moment operator has the closed form
//! `2^(-nt) [multiset(a) = multiset(b)]`, so every comparison against the
//! Haar moment (the normalized symmetric-subspace projector) is exact.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::{instance_to_diagonal, sample_gr_instance, GateSetSpec};
use crate::error::{Error, Result};
use crate::moments::{
    haar_state_moment, is_exact_design, moment_distance, state_moment_bits, DiagonalMomentVector,
    MomentMatrix,
};
use crate::state::{apply_diagonal, plus_state, PureState};

/// A state ensemble usable as a moment source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateEnsembleKind {
    PhaseRandomFromPlus,
    HaarRandom,
    Protocol2Design,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateEnsembleSpec {
    pub kind: StateEnsembleKind,
    pub n: usize,
}

impl StateEnsembleSpec {
    /// The t-copy moment operator of the ensemble.
    pub fn moment(&self, t: usize) -> Result<MomentMatrix> {
        match self.kind {
            StateEnsembleKind::PhaseRandomFromPlus => phase_random_moment(self.n, t),
            StateEnsembleKind::HaarRandom => haar_state_moment(self.n, t),
            StateEnsembleKind::Protocol2Design => {
                if t != 2 {
                    return Err(Error::InvalidArgument(
                        "the mixing protocol is defined for t = 2".into(),
                    ));
                }
                protocol_moment(self.n)
            }
        }
    }
}

/// Approximation gap of phase-random states at order `t`, with the leading
/// term `t(t-1)/2^n` it is compared against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EtaResult {
    pub n: usize,
    pub t: usize,
    pub exact_distance: f64,
    pub leading_term: f64,
}

/// Moment operator of phase-random states from `|+>^n`:
/// entry `2^(-nt)` on multiset-matched index pairs, 0 elsewhere.
pub fn phase_random_moment(n: usize, t: usize) -> Result<MomentMatrix> {
    let bits = state_moment_bits(n, t)?;
    let dim = 1usize << bits;
    let amp = Complex64::new(1.0 / dim as f64, 0.0);
    let mut mat = Array2::<Complex64>::zeros((dim, dim));
    let mut row_sorted = vec![0u16; t];
    let mut col_sorted = vec![0u16; t];
    for row in 0..dim {
        unpack_sorted(row, n, t, &mut row_sorted);
        for col in 0..dim {
            unpack_sorted(col, n, t, &mut col_sorted);
            if row_sorted == col_sorted {
                mat[[row, col]] = amp;
            }
        }
    }
    Ok(MomentMatrix::from_parts(n, t, mat))
}

fn unpack_sorted(idx: usize, n: usize, t: usize, out: &mut [u16]) {
    let mask = (1usize << n) - 1;
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = ((idx >> ((t - 1 - k) * n)) & mask) as u16;
    }
    out.sort_unstable();
}

/// Moment operator of the uniform computational-basis ensemble:
/// `2^(-n) sum_m (|m><m|)^t`.
pub fn computational_basis_moment(n: usize, t: usize) -> Result<MomentMatrix> {
    let bits = state_moment_bits(n, t)?;
    let dim = 1usize << bits;
    let d = 1usize << n;
    let mut mat = Array2::<Complex64>::zeros((dim, dim));
    let w = Complex64::new(1.0 / d as f64, 0.0);
    for m in 0..d {
        let idx = (0..t).fold(0usize, |acc, _| (acc << n) | m);
        mat[[idx, idx]] = w;
    }
    Ok(MomentMatrix::from_parts(n, t, mat))
}

/// State moment of the `|+>^n` orbit of any diagonal ensemble, given that
/// ensemble's diagonal moment vector.
pub fn state_moment_of_plus_orbit(v: &DiagonalMomentVector) -> Result<MomentMatrix> {
    let (n, t) = (v.n(), v.t());
    let bits = state_moment_bits(n, t)?;
    let dim = 1usize << bits;
    let scale = 1.0 / dim as f64;
    let mut mat = Array2::<Complex64>::zeros((dim, dim));
    for row in 0..dim {
        for col in 0..dim {
            let entry = v.entries()[(row << bits) | col];
            if entry != 0.0 {
                mat[[row, col]] = Complex64::new(entry * scale, 0.0);
            }
        }
    }
    Ok(MomentMatrix::from_parts(n, t, mat))
}

/// Exact approximation gap of phase-random states:
/// `|| E_phase-random[|psi><psi|^t] - E_Haar[|psi><psi|^t] ||_1`.
pub fn eta_exact(n: usize, t: usize) -> Result<EtaResult> {
    let pr = phase_random_moment(n, t)?;
    let haar = haar_state_moment(n, t)?;
    let exact_distance = moment_distance(&pr, &haar)?;
    Ok(EtaResult {
        n,
        t,
        exact_distance,
        leading_term: (t * (t - 1)) as f64 / (1u64 << n) as f64,
    })
}

/// Moment operator of the exact state 2-design protocol: with probability
/// `1/(2^n+1)` a uniform computational basis state, otherwise a diagonal
/// 2-design applied to `|+>^n`.
pub fn protocol_moment(n: usize) -> Result<MomentMatrix> {
    let d = (1u64 << n) as f64;
    let pr = phase_random_moment(n, 2)?;
    let basis = computational_basis_moment(n, 2)?;
    let mat = pr.matrix() * Complex64::new(d / (d + 1.0), 0.0)
        + basis.matrix() * Complex64::new(1.0 / (d + 1.0), 0.0);
    Ok(MomentMatrix::from_parts(n, 2, mat))
}

/// Draws one state from the 2-design protocol, using `design_source` as the
/// diagonal-unitary 2-design; the source must pass the exact-design check.
pub fn sample_protocol_state<R: Rng>(
    n: usize,
    design_source: GateSetSpec,
    rng: &mut R,
) -> Result<PureState> {
    let r = match design_source {
        GateSetSpec::Gr { r } => {
            let report = is_exact_design(n, r, 2)?;
            if !report.is_exact {
                return Err(Error::Config(format!(
                    "G_{r} on {n} qubits is not an exact diagonal-unitary 2-design"
                )));
            }
            r
        }
        GateSetSpec::Gcz => {
            return Err(Error::Config(
                "G_CZ is only an approximate 2-design; the protocol needs an exact one".into(),
            ))
        }
    };
    let d = 1usize << n;
    if rng.random_range(0..d + 1) == 0 {
        // basis-state branch, probability 1/(2^n + 1)
        PureState::basis_state(n, rng.random_range(0..d))
    } else {
        let inst = sample_gr_instance(n, r, rng)?;
        apply_diagonal(&instance_to_diagonal(&inst)?, &plus_state(n)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::RngSeed;
    use crate::moments::{diag_target_moment, gr_circuit_moment};
    use approx::assert_abs_diff_eq;
    use ndarray_linalg::{EigValsh, UPLO};

    /// Closed-form gap at t = 2: blockwise eigenvalues of the difference give
    /// `2(d-1)/(d(d+1))`.
    fn eta_t2_formula(n: usize) -> f64 {
        let d = (1u64 << n) as f64;
        2.0 * (d - 1.0) / (d * (d + 1.0))
    }

    /// Closed-form gap at t = 3, summing |eigenvalue| over the multiset
    /// blocks (all-ones blocks of sizes 1, 3 and 6).
    fn eta_t3_formula(n: usize) -> f64 {
        let d = (1u64 << n) as f64;
        let sym = d * (d + 1.0) * (d + 2.0) / 6.0;
        let d3 = d * d * d;
        let singles = d * (1.0 / d3 - 1.0 / sym).abs();
        let doubles = d * (d - 1.0) * (3.0 / d3 - 1.0 / sym).abs();
        let triples = d * (d - 1.0) * (d - 2.0) / 6.0 * (6.0 / d3 - 1.0 / sym).abs();
        singles + doubles + triples
    }

    #[test]
    fn order_one_moment_is_maximally_mixed() {
        for n in 1..=2usize {
            let pr = phase_random_moment(n, 1).unwrap();
            let haar = haar_state_moment(n, 1).unwrap();
            assert!(moment_distance(&pr, &haar).unwrap() < 1e-13);
            let dim = 1usize << n;
            for i in 0..dim {
                assert_abs_diff_eq!(pr.matrix()[[i, i]].re, 1.0 / dim as f64, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn order_two_moment_differs_from_haar() {
        let e = eta_exact(2, 2).unwrap();
        assert!(e.exact_distance > 0.0);
    }

    #[test]
    fn phase_random_moment_is_psd_trace_one_and_swap_invariant() {
        let pr = phase_random_moment(2, 2).unwrap();
        assert_abs_diff_eq!(pr.trace().re, 1.0, epsilon = 1e-12);
        let eigs = pr.matrix().eigvalsh(UPLO::Lower).unwrap();
        assert!(eigs.iter().all(|l| *l >= -1e-10));
        let d = 4usize;
        let dim = 16usize;
        let mut swap = Array2::<Complex64>::zeros((dim, dim));
        for a1 in 0..d {
            for a2 in 0..d {
                swap[[a2 * d + a1, a1 * d + a2]] = Complex64::new(1.0, 0.0);
            }
        }
        let left = pr.matrix().dot(&swap);
        let right = swap.dot(pr.matrix());
        for i in 0..dim {
            for j in 0..dim {
                assert!((left[[i, j]] - right[[i, j]]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn eta_vanishes_at_order_one() {
        for n in 1..=4 {
            assert!(eta_exact(n, 1).unwrap().exact_distance < 1e-13);
        }
    }

    #[test]
    fn eta_t2_matches_blockwise_formula() {
        for n in 1..=5usize {
            let e = eta_exact(n, 2).unwrap();
            assert_abs_diff_eq!(e.exact_distance, eta_t2_formula(n), epsilon = 1e-12);
            assert_abs_diff_eq!(e.leading_term, 2.0 / (1u64 << n) as f64, epsilon = 1e-15);
        }
    }

    #[test]
    fn eta_t3_matches_blockwise_formula_and_band() {
        for n in 2..=3usize {
            let e = eta_exact(n, 3).unwrap();
            assert_abs_diff_eq!(e.exact_distance, eta_t3_formula(n), epsilon = 1e-12);
        }
        // gap at (n=3, t=3) sits within a factor of two of the leading term
        let e = eta_exact(3, 3).unwrap();
        let ratio = e.exact_distance / e.leading_term;
        assert!((0.5..=2.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn plus_orbit_of_target_ensemble_reproduces_phase_random_moment() {
        for (n, t) in [(1usize, 2usize), (2, 2), (2, 3), (3, 2)] {
            let via_vector =
                state_moment_of_plus_orbit(&diag_target_moment(n, t).unwrap()).unwrap();
            let direct = phase_random_moment(n, t).unwrap();
            assert!(moment_distance(&via_vector, &direct).unwrap() < 1e-13);
        }
    }

    #[test]
    fn composing_a_second_diagonal_layer_does_not_improve_eta() {
        // Composing two independent G_n layers multiplies the diagonal moment
        // vectors entrywise; the resulting state moment must sit at the same
        // distance from Haar.
        for (n, t) in [(2usize, 2usize), (2, 3), (3, 2)] {
            let single = gr_circuit_moment(n, n, t).unwrap();
            let composed_entries: Vec<f64> = single
                .entries()
                .iter()
                .zip(single.entries())
                .map(|(x, y)| x * y)
                .collect();
            let composed = DiagonalMomentVector::from_raw(n, t, composed_entries);
            let haar = haar_state_moment(n, t).unwrap();
            let d_single =
                moment_distance(&state_moment_of_plus_orbit(&single).unwrap(), &haar).unwrap();
            let d_composed =
                moment_distance(&state_moment_of_plus_orbit(&composed).unwrap(), &haar).unwrap();
            assert_abs_diff_eq!(d_single, d_composed, epsilon = 1e-12);
            assert!(d_single > 0.0);
        }
    }

    #[test]
    fn protocol_moment_is_exact_2_design() {
        for n in 1..=4usize {
            let dist = moment_distance(
                &protocol_moment(n).unwrap(),
                &haar_state_moment(n, 2).unwrap(),
            )
            .unwrap();
            assert!(dist <= 1e-12, "n={n}: protocol distance {dist}");
        }
    }

    #[test]
    fn protocol_moment_has_unit_trace() {
        for n in 1..=4usize {
            let m = protocol_moment(n).unwrap();
            assert_abs_diff_eq!(m.trace().re, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(m.trace().im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn basis_mixing_barely_helps_at_higher_orders() {
        // At t >= 3 the optimal basis-state admixture improves the gap by at
        // most O(2^((1-t)n)); bound frozen from a scan of the mixing weight.
        for n in 2..=3usize {
            let t = 3;
            let pr = phase_random_moment(n, t).unwrap();
            let basis = computational_basis_moment(n, t).unwrap();
            let haar = haar_state_moment(n, t).unwrap();
            let unmixed = moment_distance(&pr, &haar).unwrap();
            let mut best = unmixed;
            for k in 1..=60 {
                let p = k as f64 / 60.0 * 0.2;
                let mat = pr.matrix() * Complex64::new(1.0 - p, 0.0)
                    + basis.matrix() * Complex64::new(p, 0.0);
                let mixed = MomentMatrix::from_parts(n, t, mat);
                let dist = moment_distance(&mixed, &haar).unwrap();
                if dist < best {
                    best = dist;
                }
            }
            let improvement = unmixed - best;
            let bound = 6.0 * 0.25f64.powi(n as i32); // 6 * 2^((1-t)n) at t=3
            assert!(
                improvement <= bound,
                "n={n}: improvement {improvement} exceeds {bound}"
            );
        }
    }

    #[test]
    fn ensemble_spec_dispatch() {
        let n = 2usize;
        let pr = StateEnsembleSpec {
            kind: StateEnsembleKind::PhaseRandomFromPlus,
            n,
        };
        let haar = StateEnsembleSpec {
            kind: StateEnsembleKind::HaarRandom,
            n,
        };
        let protocol = StateEnsembleSpec {
            kind: StateEnsembleKind::Protocol2Design,
            n,
        };
        let gap = moment_distance(&pr.moment(2).unwrap(), &haar.moment(2).unwrap()).unwrap();
        assert!(gap > 0.0);
        let exact =
            moment_distance(&protocol.moment(2).unwrap(), &haar.moment(2).unwrap()).unwrap();
        assert!(exact <= 1e-12);
        assert!(protocol.moment(3).is_err());
    }

    #[test]
    fn protocol_sampler_requires_an_exact_design_source() {
        let mut rng = RngSeed(1).rng();
        assert!(matches!(
            sample_protocol_state(2, GateSetSpec::Gr { r: 1 }, &mut rng),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            sample_protocol_state(2, GateSetSpec::Gcz, &mut rng),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn protocol_sampler_branch_frequencies_and_normalization() {
        let n = 2usize;
        let d = 1usize << n;
        let samples = 100_000u64;
        let seed = RngSeed(23);
        let mut basis_hits = 0usize;
        for k in 0..samples {
            let mut rng = seed.stream(k);
            let s = sample_protocol_state(n, GateSetSpec::Gr { r: 2 }, &mut rng).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-10);
            // basis states have a single unit amplitude
            let max_amp = s
                .amplitudes()
                .iter()
                .map(|a| a.norm())
                .fold(0.0f64, f64::max);
            if max_amp > 0.999 {
                basis_hits += 1;
            }
        }
        let p = 1.0 / (d + 1) as f64;
        let sigma = (p * (1.0 - p) / samples as f64).sqrt();
        let freq = basis_hits as f64 / samples as f64;
        assert!(
            (freq - p).abs() <= 3.0 * sigma,
            "basis branch frequency {freq}, expected {p} +- {}",
            3.0 * sigma
        );
    }

    #[test]
    fn protocol_sampler_empirical_moment_matches_haar() {
        let n = 2usize;
        let dim = 16usize;
        let samples = 100_000u64;
        let seed = RngSeed(31);
        let mut sum = Array2::<Complex64>::zeros((dim, dim));
        let mut sum_sq = Array2::<f64>::zeros((dim, dim));
        for k in 0..samples {
            let mut rng = seed.stream(k);
            let s = sample_protocol_state(n, GateSetSpec::Gr { r: 2 }, &mut rng).unwrap();
            let a = s.amplitudes();
            for r_idx in 0..dim {
                let (r1, r2) = (r_idx >> n, r_idx & 3);
                for c_idx in 0..dim {
                    let (c1, c2) = (c_idx >> n, c_idx & 3);
                    let v = a[r1] * a[r2] * (a[c1] * a[c2]).conj();
                    sum[[r_idx, c_idx]] += v;
                    sum_sq[[r_idx, c_idx]] += v.norm_sqr();
                }
            }
        }
        let haar = haar_state_moment(n, 2).unwrap();
        for i in 0..dim {
            for j in 0..dim {
                let mean = sum[[i, j]] / samples as f64;
                let var = (sum_sq[[i, j]] / samples as f64 - mean.norm_sqr()).max(0.0);
                let se = (var / samples as f64).sqrt();
                let dev = (mean - haar.matrix()[[i, j]]).norm();
                assert!(
                    dev <= 5.0 * se + 1e-9,
                    "entry ({i},{j}): dev {dev}, 5se {}",
                    5.0 * se
                );
            }
        }
    }
}

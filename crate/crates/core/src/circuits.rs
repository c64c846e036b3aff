//! Phase-random circuit construction and sampling.
//!
//! A circuit instance is an ordered list of placed diagonal gates. Because all
//! gates commute, an instance reduces to a single [`DiagonalUnitary`] by
//! summing per-gate phases; the gate order is still recorded so instances are
//! replayable and serializable.

use itertools::Itertools;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::state::{qubit_bit, DiagonalUnitary};

/// The gate set a phase-random circuit draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateSetSpec {
    /// Full random `r`-qubit diagonal gates, placed on every combination of
    /// `r` qubits.
    Gr { r: usize },
    /// Controlled-Z composed with independent single-qubit random diagonals,
    /// placed on a uniformly random pair each step.
    Gcz,
}

/// Seed for reproducible sampling. Identical seeds reproduce identical
/// instances bit for bit; distinct stream indices give independent RNGs from
/// the same seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Counter-split stream `k` of this seed.
    pub fn stream(self, k: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(k);
        rng
    }
}

/// One diagonal gate placed on an ordered set of qubits.
///
/// `phases[p]` is the phase applied to the local computational pattern `p`,
/// where the lowest-numbered site is the most significant local bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedGate {
    pub sites: Vec<usize>,
    pub phases: Vec<f64>,
}

impl PlacedGate {
    pub fn new(sites: Vec<usize>, phases: Vec<f64>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidArgument("gate has no sites".into()));
        }
        if sites.iter().duplicates().next().is_some() {
            return Err(Error::InvalidArgument(format!(
                "gate sites must be distinct: {sites:?}"
            )));
        }
        if phases.len() != 1 << sites.len() {
            return Err(Error::ShapeMismatch {
                context: "gate phase vector length vs 2^sites",
                left: phases.len(),
                right: 1 << sites.len(),
            });
        }
        let phases = phases.into_iter().map(|p| p.rem_euclid(TAU)).collect();
        Ok(Self { sites, phases })
    }

    pub fn arity(&self) -> usize {
        self.sites.len()
    }
}

/// A sampled circuit `C_T`: an ordered list of placed gates on `n` qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitInstance {
    pub n: usize,
    pub gates: Vec<PlacedGate>,
}

impl CircuitInstance {
    /// Number of gates `T`.
    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    fn check_sites(&self) -> Result<()> {
        for g in &self.gates {
            if g.sites.is_empty() || g.phases.len() != 1 << g.sites.len() {
                return Err(Error::InvalidArgument("malformed gate".into()));
            }
            for &q in &g.sites {
                if q < 1 || q > self.n {
                    return Err(Error::InvalidArgument(format!(
                        "gate site {q} out of range for n={}",
                        self.n
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The local computational pattern of global basis index `m` restricted to
/// `sites` (first listed site is the local MSB).
#[inline]
pub(crate) fn local_pattern(m: usize, sites: &[usize], n: usize) -> usize {
    sites
        .iter()
        .fold(0usize, |acc, &q| (acc << 1) | qubit_bit(m, q, n))
}

/// All `C(n, r)` size-`r` site sets in lexicographic order.
pub fn gr_placements(n: usize, r: usize) -> Result<Vec<Vec<usize>>> {
    if r < 1 || r > n {
        return Err(Error::InvalidArgument(format!(
            "gate arity r={r} must satisfy 1 <= r <= n={n}"
        )));
    }
    Ok((1..=n).combinations(r).collect())
}

/// Samples one `G_r` circuit instance: a uniform-phase `r`-qubit diagonal on
/// every placement (placements are deterministic, phases random).
pub fn sample_gr_instance<R: Rng>(n: usize, r: usize, rng: &mut R) -> Result<CircuitInstance> {
    let placements = gr_placements(n, r)?;
    let gates = placements
        .into_iter()
        .map(|sites| {
            let phases = (0..1usize << r)
                .map(|_| rng.random_range(0.0..TAU))
                .collect();
            PlacedGate::new(sites, phases)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CircuitInstance { n, gates })
}

/// The `G_CZ` gate on the pair `{i, j}`: `diag(1, e^{i alpha})` on the lower
/// site, `diag(1, e^{i beta})` on the higher, composed with controlled-Z.
pub fn gcz_gate(i: usize, j: usize, alpha: f64, beta: f64) -> Result<PlacedGate> {
    if i == j {
        return Err(Error::InvalidArgument("G_CZ pair must be distinct".into()));
    }
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    PlacedGate::new(vec![lo, hi], vec![0.0, beta, alpha, alpha + beta - PI])
}

/// Samples a `G_CZ` circuit of `steps` gates; each step picks one of the
/// `C(n, 2)` pairs uniformly and fresh uniform `alpha`, `beta`.
pub fn sample_gcz_instance<R: Rng>(n: usize, steps: usize, rng: &mut R) -> Result<CircuitInstance> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "G_CZ circuits need n >= 2 qubits, got {n}"
        )));
    }
    let pairs: Vec<(usize, usize)> = (1..=n).tuple_combinations().collect();
    let gates = (0..steps)
        .map(|_| {
            let (i, j) = pairs[rng.random_range(0..pairs.len())];
            let alpha = rng.random_range(0.0..TAU);
            let beta = rng.random_range(0.0..TAU);
            gcz_gate(i, j, alpha, beta)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CircuitInstance { n, gates })
}

/// Collapses an instance to its diagonal unitary: the global phase of basis
/// state `m` is the sum of each gate's phase on `m`'s local pattern, mod 2pi.
/// Gate order does not matter.
pub fn instance_to_diagonal(c: &CircuitInstance) -> Result<DiagonalUnitary> {
    c.check_sites()?;
    let dim = 1usize << c.n;
    let mut phases = vec![0.0f64; dim];
    for gate in &c.gates {
        for (m, phi) in phases.iter_mut().enumerate() {
            *phi += gate.phases[local_pattern(m, &gate.sites, c.n)];
        }
    }
    DiagonalUnitary::from_phases(c.n, phases)
}

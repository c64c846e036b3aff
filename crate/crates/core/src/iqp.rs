//! IQP circuit semantics: diagonal gates on `|+>^n`, Pauli-X measurement.
//!
//! Strong simulation goes through one statevector pass (diagonal phases, then
//! the Hadamard layer). The Ising partition-sum amplitude evaluator is kept as
//! a second, independent route: gates of the form `exp(i theta Z x ... x Z)`
//! turn the X-basis amplitude into a sum over spin configurations with
//! imaginary couplings, evaluated by brute force over all `2^n` spins.
//!
//! X-basis outcomes map to bits as `+ -> 0`, `- -> 1`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::{local_pattern, PlacedGate};
use crate::error::{Error, Result};
use crate::state::{hadamard_all, plus_state, PureState, MAX_QUBITS};

/// One IQP gate: either a Z-product rotation `exp(i theta Z_S)` or a general
/// diagonal gate with an explicit phase table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IqpGate {
    ZProduct { sites: Vec<usize>, theta: f64 },
    Diagonal(PlacedGate),
}

impl IqpGate {
    pub fn sites(&self) -> &[usize] {
        match self {
            IqpGate::ZProduct { sites, .. } => sites,
            IqpGate::Diagonal(g) => &g.sites,
        }
    }
}

/// An IQP circuit; measurement is implicitly the full X basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqpCircuit {
    pub n: usize,
    pub gates: Vec<IqpGate>,
}

impl IqpCircuit {
    /// Convenience constructor for pure Z-product circuits.
    pub fn z_product(n: usize, gates: Vec<(Vec<usize>, f64)>) -> Self {
        Self {
            n,
            gates: gates
                .into_iter()
                .map(|(sites, theta)| IqpGate::ZProduct { sites, theta })
                .collect(),
        }
    }

    pub fn is_z_product(&self) -> bool {
        self.gates
            .iter()
            .all(|g| matches!(g, IqpGate::ZProduct { .. }))
    }

    fn validate(&self) -> Result<()> {
        if self.n < 1 || self.n > MAX_QUBITS {
            return Err(Error::Capacity {
                what: "IQP circuit qubit count",
                requested: self.n,
                limit: MAX_QUBITS,
            });
        }
        for g in &self.gates {
            let sites = g.sites();
            if sites.is_empty() {
                return Err(Error::InvalidArgument("gate has no sites".into()));
            }
            let mut seen = 0u32;
            for &q in sites {
                if q < 1 || q > self.n {
                    return Err(Error::InvalidArgument(format!(
                        "gate site {q} out of range for n={}",
                        self.n
                    )));
                }
                if seen & (1 << q) != 0 {
                    return Err(Error::InvalidArgument(format!("duplicate site {q}")));
                }
                seen |= 1 << q;
            }
            if let IqpGate::Diagonal(pg) = g {
                if pg.phases.len() != 1 << pg.sites.len() {
                    return Err(Error::ShapeMismatch {
                        context: "gate phase table length vs 2^sites",
                        left: pg.phases.len(),
                        right: 1 << pg.sites.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// The accumulated diagonal phase of every computational basis state.
    pub fn phase_vector(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let dim = 1usize << self.n;
        let mut phases = vec![0.0f64; dim];
        for gate in &self.gates {
            match gate {
                IqpGate::ZProduct { sites, theta } => {
                    let mask = sites
                        .iter()
                        .fold(0usize, |acc, &q| acc | (1 << (self.n - q)));
                    for (m, phi) in phases.iter_mut().enumerate() {
                        let parity_odd = (m & mask).count_ones() % 2 == 1;
                        *phi += if parity_odd { -theta } else { *theta };
                    }
                }
                IqpGate::Diagonal(pg) => {
                    for (m, phi) in phases.iter_mut().enumerate() {
                        *phi += pg.phases[local_pattern(m, &pg.sites, self.n)];
                    }
                }
            }
        }
        Ok(phases)
    }
}

/// Probability of every X-basis outcome bitstring.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputDistribution {
    n: usize,
    probabilities: Vec<f64>,
}

impl OutputDistribution {
    pub fn new(n: usize, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() != 1 << n {
            return Err(Error::ShapeMismatch {
                context: "distribution length vs 2^n",
                left: probabilities.len(),
                right: 1 << n,
            });
        }
        if probabilities.iter().any(|p| *p < -1e-12) {
            return Err(Error::InvalidArgument("negative probability".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { n, probabilities })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, x: usize) -> f64 {
        self.probabilities[x]
    }
}

/// The X-basis amplitude vector `<x| H^n U_c |+>^n` for all `x`.
pub fn output_amplitudes(c: &IqpCircuit) -> Result<PureState> {
    let phases = c.phase_vector()?;
    let plus = plus_state(c.n)?;
    let amps: Vec<Complex64> = plus
        .amplitudes()
        .iter()
        .zip(&phases)
        .map(|(a, p)| a * Complex64::from_polar(1.0, *p))
        .collect();
    let state = PureState::from_amplitudes(c.n, amps)?;
    Ok(hadamard_all(&state))
}

/// Strong simulation: the full output distribution `P(x) = |<x|H^n U_c|+>|^2`.
pub fn output_distribution(c: &IqpCircuit) -> Result<OutputDistribution> {
    let measured = output_amplitudes(c)?;
    OutputDistribution::new(
        c.n,
        measured.amplitudes().iter().map(|a| a.norm_sqr()).collect(),
    )
}

/// Weak simulation: i.i.d. samples from the exact distribution by inverse CDF.
pub fn sample_outputs<R: Rng>(c: &IqpCircuit, shots: usize, rng: &mut R) -> Result<Vec<usize>> {
    let dist = output_distribution(c)?;
    let mut cdf = Vec::with_capacity(dist.probabilities.len());
    let mut acc = 0.0f64;
    for p in &dist.probabilities {
        acc += p;
        cdf.push(acc);
    }
    let samples = (0..shots)
        .map(|_| {
            let u: f64 = rng.random_range(0.0..1.0);
            cdf.partition_point(|&cum| cum <= u).min(cdf.len() - 1)
        })
        .collect();
    Ok(samples)
}

/// X-basis amplitude of outcome `x` as an Ising partition sum:
/// `2^-n sum_s (-1)^(x.s) exp(i sum_g theta_g prod_(q in S_g) (-1)^(s_q))`.
///
/// Only defined for Z-product circuits; this is the independent oracle for
/// [`output_amplitudes`], at `O(2^n)` per amplitude.
pub fn ising_amplitude(c: &IqpCircuit, x: usize) -> Result<Complex64> {
    c.validate()?;
    if !c.is_z_product() {
        return Err(Error::UnsupportedForm(
            "Ising partition sum needs Z-product gates",
        ));
    }
    if x >= 1 << c.n {
        return Err(Error::InvalidArgument(format!(
            "outcome {x} out of range for n={}",
            c.n
        )));
    }
    let masks_thetas: Vec<(usize, f64)> = c
        .gates
        .iter()
        .map(|g| match g {
            IqpGate::ZProduct { sites, theta } => (
                sites.iter().fold(0usize, |acc, &q| acc | (1 << (c.n - q))),
                *theta,
            ),
            IqpGate::Diagonal(_) => unreachable!(),
        })
        .collect();
    let mut sum = Complex64::new(0.0, 0.0);
    for s in 0..1usize << c.n {
        let mut energy = 0.0f64;
        for &(mask, theta) in &masks_thetas {
            energy += if (s & mask).count_ones() % 2 == 0 {
                theta
            } else {
                -theta
            };
        }
        let character = if (x & s).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        sum += Complex64::from_polar(character, energy);
    }
    Ok(sum / (1u64 << c.n) as f64)
}

/// Hypergraph associated with a Z-product circuit: qubits are vertices, gates
/// are weighted hyperedges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypergraph {
    pub n: usize,
    pub edges: Vec<Hyperedge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperedge {
    pub sites: Vec<usize>,
    pub theta: f64,
}

pub fn circuit_hypergraph(c: &IqpCircuit) -> Result<Hypergraph> {
    c.validate()?;
    let edges = c
        .gates
        .iter()
        .map(|g| match g {
            IqpGate::ZProduct { sites, theta } => Ok(Hyperedge {
                sites: sites.clone(),
                theta: *theta,
            }),
            IqpGate::Diagonal(_) => Err(Error::UnsupportedForm(
                "hypergraph association needs Z-product gates",
            )),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Hypergraph { n: c.n, edges })
}

/// Two-sided multiplicative-error comparison: true iff
/// `(1/c) p(x) <= q(x) <= c p(x)` for every outcome (`0 <= 0` allowed).
pub fn multiplicative_error_check(
    p: &OutputDistribution,
    q: &OutputDistribution,
    c: f64,
) -> Result<bool> {
    if c < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "multiplicative error bound must be >= 1, got {c}"
        )));
    }
    if p.n != q.n {
        return Err(Error::ShapeMismatch {
            context: "distribution qubit counts",
            left: p.n,
            right: q.n,
        });
    }
    Ok(p.probabilities
        .iter()
        .zip(&q.probabilities)
        .all(|(&pp, &qq)| qq >= pp / c && qq <= pp * c))
}

/// Total-variation distance between two distributions on the same outcomes.
pub fn total_variation(p: &OutputDistribution, q: &OutputDistribution) -> Result<f64> {
    if p.n != q.n {
        return Err(Error::ShapeMismatch {
            context: "distribution qubit counts",
            left: p.n,
            right: q.n,
        });
    }
    Ok(0.5
        * p.probabilities
            .iter()
            .zip(&q.probabilities)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// Histogram of samples as an [`OutputDistribution`].
pub fn empirical_distribution(n: usize, samples: &[usize]) -> Result<OutputDistribution> {
    let mut counts = vec![0u64; 1 << n];
    for &s in samples {
        if s >= counts.len() {
            return Err(Error::InvalidArgument(format!("sample {s} out of range")));
        }
        counts[s] += 1;
    }
    let total = samples.len() as f64;
    OutputDistribution::new(n, counts.iter().map(|&c| c as f64 / total).collect())
}

/// A random Z-product circuit: each gate picks 1..=min(n,4) distinct sites
/// and a uniform angle.
pub fn random_z_product_circuit<R: Rng>(n: usize, gates: usize, rng: &mut R) -> IqpCircuit {
    let max_arity = n.min(4);
    let gates = (0..gates)
        .map(|_| {
            let arity = rng.random_range(1..=max_arity);
            let mut sites: Vec<usize> = Vec::with_capacity(arity);
            while sites.len() < arity {
                let q = rng.random_range(1..=n);
                if !sites.contains(&q) {
                    sites.push(q);
                }
            }
            sites.sort_unstable();
            IqpGate::ZProduct {
                sites,
                theta: rng.random_range(0.0..std::f64::consts::TAU),
            }
        })
        .collect();
    IqpCircuit { n, gates }
}

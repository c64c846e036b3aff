//! Dense statevectors, diagonal unitaries, reduced states and distances.
//!
//! Basis convention: an `n`-qubit state is a flat vector of `2^n` complex
//! amplitudes indexed by the integer `m` whose binary digits, most significant
//! first, give the computational pattern. Qubits are labelled `1..=n`, so
//! qubit 1 is the most significant bit of the index.

use ndarray::Array2;
use ndarray_linalg::{EigValsh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported qubit count for dense statevectors.
pub const MAX_QUBITS: usize = 14;

const NORM_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-10;
/// Reduced-state eigenvalues below this are dropped from entropies.
const EIGENVALUE_FLOOR: f64 = 1e-12;

/// Bit of qubit `q` (1-based, MSB-first) in the basis index `m`.
#[inline]
pub fn qubit_bit(m: usize, q: usize, n: usize) -> usize {
    (m >> (n - q)) & 1
}

fn check_qubit_count(n: usize) -> Result<()> {
    if !(1..=MAX_QUBITS).contains(&n) {
        return Err(Error::Capacity {
            what: "qubit count",
            requested: n,
            limit: MAX_QUBITS,
        });
    }
    Ok(())
}

/// Validates that `set` is a nonempty list of distinct qubit labels in `1..=n`
/// and returns it sorted.
fn check_qubit_set(set: &[usize], n: usize) -> Result<Vec<usize>> {
    if set.is_empty() {
        return Err(Error::InvalidArgument("qubit set is empty".into()));
    }
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(Error::InvalidArgument(format!(
                "duplicate qubit label {}",
                w[0]
            )));
        }
    }
    if sorted[0] < 1 || *sorted.last().unwrap() > n {
        return Err(Error::InvalidArgument(format!(
            "qubit labels must lie in 1..={n}, got {set:?}"
        )));
    }
    Ok(sorted)
}

/// A normalized pure state of `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n: usize,
    amps: Vec<Complex64>,
}

impl PureState {
    /// Builds a state from raw amplitudes, enforcing length `2^n` and unit norm.
    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_qubit_count(n)?;
        if amps.len() != 1 << n {
            return Err(Error::ShapeMismatch {
                context: "amplitude vector length vs 2^n",
                left: amps.len(),
                right: 1 << n,
            });
        }
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "state is not normalized: |psi|^2 = {norm_sq}"
            )));
        }
        Ok(Self { n, amps })
    }

    /// The computational basis state `|m>`.
    pub fn basis_state(n: usize, m: usize) -> Result<Self> {
        check_qubit_count(n)?;
        if m >= 1 << n {
            return Err(Error::InvalidArgument(format!(
                "basis index {m} out of range for {n} qubits"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[m] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, m: usize) -> Complex64 {
        self.amps[m]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// The uniform-superposition input state `|+>^n` of IQP circuits.
pub fn plus_state(n: usize) -> Result<PureState> {
    check_qubit_count(n)?;
    let dim = 1usize << n;
    let amp = Complex64::new((dim as f64).sqrt().recip(), 0.0);
    Ok(PureState {
        n,
        amps: vec![amp; dim],
    })
}

/// A diagonal unitary `U = sum_m e^{i phi_m} |m><m|` stored as its phase vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalUnitary {
    n: usize,
    phases: Vec<f64>,
}

impl DiagonalUnitary {
    /// Builds a diagonal unitary from per-basis-state phases (radians). Phases
    /// are reduced into `[0, 2pi)`.
    pub fn from_phases(n: usize, phases: Vec<f64>) -> Result<Self> {
        check_qubit_count(n)?;
        if phases.len() != 1 << n {
            return Err(Error::ShapeMismatch {
                context: "phase vector length vs 2^n",
                left: phases.len(),
                right: 1 << n,
            });
        }
        let phases = phases
            .into_iter()
            .map(|p| p.rem_euclid(std::f64::consts::TAU))
            .collect();
        Ok(Self { n, phases })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_phases(n, vec![0.0; 1 << n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// The conjugate (inverse) unitary.
    pub fn conjugate(&self) -> Self {
        Self {
            n: self.n,
            phases: self
                .phases
                .iter()
                .map(|p| (-p).rem_euclid(std::f64::consts::TAU))
                .collect(),
        }
    }
}

/// Applies a diagonal unitary to a state: `amp_m -> e^{i phi_m} amp_m`.
pub fn apply_diagonal(u: &DiagonalUnitary, s: &PureState) -> Result<PureState> {
    if u.n != s.n {
        return Err(Error::ShapeMismatch {
            context: "diagonal unitary vs state qubit count",
            left: u.n,
            right: s.n,
        });
    }
    let amps = s
        .amps
        .iter()
        .zip(&u.phases)
        .map(|(a, p)| a * Complex64::from_polar(1.0, *p))
        .collect();
    Ok(PureState { n: s.n, amps })
}

/// Applies the Hadamard layer `H^{(x) n}` (in-place Walsh butterflies).
///
/// This is the only non-diagonal gate layer in the crate; it maps the Pauli-X
/// measurement basis onto the computational basis.
pub fn hadamard_all(s: &PureState) -> PureState {
    let mut amps = s.amps.clone();
    let dim = amps.len();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut half = 1usize;
    while half < dim {
        let mut base = 0;
        while base < dim {
            for i in base..base + half {
                let a = amps[i];
                let b = amps[i + half];
                amps[i] = (a + b) * scale;
                amps[i + half] = (a - b) * scale;
            }
            base += 2 * half;
        }
        half <<= 1;
    }
    PureState { n: s.n, amps }
}

/// A density matrix; Hermitian with unit trace.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: Array2<Complex64>,
}

impl DensityMatrix {
    /// Wraps a matrix after checking squareness, Hermiticity and unit trace.
    pub fn new(mat: Array2<Complex64>) -> Result<Self> {
        let (rows, cols) = mat.dim();
        if rows != cols {
            return Err(Error::ShapeMismatch {
                context: "density matrix must be square",
                left: rows,
                right: cols,
            });
        }
        let mut max_asym = 0.0f64;
        for i in 0..rows {
            for j in i..cols {
                let d = (mat[[i, j]] - mat[[j, i]].conj()).norm();
                if d > max_asym {
                    max_asym = d;
                }
            }
        }
        if max_asym > HERMITIAN_TOL {
            return Err(Error::InvalidArgument(format!(
                "matrix is not Hermitian (max asymmetry {max_asym:.3e})"
            )));
        }
        let trace: Complex64 = (0..rows).map(|i| mat[[i, i]]).sum();
        if (trace.re - 1.0).abs() > HERMITIAN_TOL || trace.im.abs() > HERMITIAN_TOL {
            return Err(Error::InvalidArgument(format!(
                "density matrix trace is {trace}, expected 1"
            )));
        }
        Ok(Self { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.mat[[i, j]]
    }

    /// Real eigenvalue spectrum, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let vals = self
            .mat
            .eigvalsh(UPLO::Lower)
            .map_err(|e| Error::InvalidArgument(format!("eigendecomposition failed: {e}")))?;
        Ok(vals.to_vec())
    }
}

/// Traces out every qubit not in `keep`, returning the reduced state on the
/// kept qubits (ordered by ascending label).
pub fn reduced_density(s: &PureState, keep: &[usize]) -> Result<DensityMatrix> {
    let keep = check_qubit_set(keep, s.n)?;
    let n = s.n;
    let k = keep.len();
    let traced: Vec<usize> = (1..=n).filter(|q| !keep.contains(q)).collect();

    // Scatter tables: local pattern -> contribution to the global index.
    let scatter = |positions: &[usize]| -> Vec<usize> {
        let len = positions.len();
        (0..1usize << len)
            .map(|pat| {
                positions
                    .iter()
                    .enumerate()
                    .map(|(loc, &q)| ((pat >> (len - 1 - loc)) & 1) << (n - q))
                    .sum()
            })
            .collect()
    };
    let keep_idx = scatter(&keep);
    let traced_idx = scatter(&traced);

    let kdim = 1usize << k;
    let mut rho = Array2::<Complex64>::zeros((kdim, kdim));
    let mut col = vec![Complex64::new(0.0, 0.0); kdim];
    for &env in &traced_idx {
        for (i, &base) in keep_idx.iter().enumerate() {
            col[i] = s.amps[base | env];
        }
        for i in 0..kdim {
            for j in 0..kdim {
                rho[[i, j]] += col[i] * col[j].conj();
            }
        }
    }
    DensityMatrix::new(rho)
}

/// Entanglement entropy (in bits) across the cut `cut | complement`.
pub fn entanglement_entropy(s: &PureState, cut: &[usize]) -> Result<f64> {
    let cut_sorted = check_qubit_set(cut, s.n)?;
    if cut_sorted.len() == s.n {
        return Err(Error::InvalidArgument(
            "cut must be a proper subset of the qubits".into(),
        ));
    }
    // Always reduce to the smaller side; the nonzero spectrum is shared.
    let side = if cut_sorted.len() <= s.n - cut_sorted.len() {
        cut_sorted
    } else {
        (1..=s.n).filter(|q| !cut_sorted.contains(q)).collect()
    };
    let rho = reduced_density(s, &side)?;
    let eigs = rho.eigenvalues()?;
    Ok(eigs
        .iter()
        .filter(|&&l| l > EIGENVALUE_FLOOR)
        .map(|&l| -l * l.log2())
        .sum())
}

/// Trace distance `(1/2) ||r1 - r2||_1`.
pub fn trace_distance(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<f64> {
    if r1.dim() != r2.dim() {
        return Err(Error::ShapeMismatch {
            context: "density matrix dimensions",
            left: r1.dim(),
            right: r2.dim(),
        });
    }
    let diff = &r1.mat - &r2.mat;
    let vals = diff
        .eigvalsh(UPLO::Lower)
        .map_err(|e| Error::InvalidArgument(format!("eigendecomposition failed: {e}")))?;
    Ok(0.5 * vals.iter().map(|l| l.abs()).sum::<f64>())
}

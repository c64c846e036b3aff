//! Energy shells of classical Hamiltonians and the QPE thermalizing algorithm.
//!
//! Classical here means diagonal in the computational basis, so every
//! eigenstate is a basis state and phase estimation reduces to writing a
//! binary estimate of each basis state's rescaled energy onto the ancilla
//! register. The thermalizer prepares a phase-random state, entangles `r`
//! ancillas with the energy via QPE, projects the ancillas onto an energy
//! window, and disentangles with the inverse QPE; round-off and kernel
//! leakage from finite `r` are simulated, not hidden.
//!
//! Energies are rescaled by `e -> (e - e_min)/(e_max - e_min) * (1 - 2^-r)`
//! so every eigenphase lies in `[0, 1)`; the shell window maps through the
//! same affine map and membership of a reading is decided on its decoded
//! energy. Window convention is half-open: `E - delta <= e < E`.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{DensityMatrix, PureState, MAX_QUBITS};

/// Joint system+ancilla registers are capped at `2^JOINT_BITS_LIMIT` amplitudes.
const JOINT_BITS_LIMIT: usize = 24;

/// A Hamiltonian diagonal in the computational basis: one energy per basis
/// state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalHamiltonian {
    n: usize,
    energies: Vec<f64>,
    pub description: Option<String>,
}

impl ClassicalHamiltonian {
    pub fn new(n: usize, energies: Vec<f64>) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n) {
            return Err(Error::Capacity {
                what: "Hamiltonian qubit count",
                requested: n,
                limit: MAX_QUBITS,
            });
        }
        if energies.len() != 1 << n {
            return Err(Error::ShapeMismatch {
                context: "energy vector length vs 2^n",
                left: energies.len(),
                right: 1 << n,
            });
        }
        Ok(Self {
            n,
            energies,
            description: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn min_energy(&self) -> f64 {
        self.energies.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_energy(&self) -> f64 {
        self.energies
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Infinite-temperature mean `tr(H)/2^n`.
    pub fn spectral_mean(&self) -> f64 {
        self.energies.iter().sum::<f64>() / self.energies.len() as f64
    }
}

/// Ising chain `e(s) = J sum sigma_i sigma_(i+1) + h sum sigma_i` with
/// `sigma_i = (-1)^(s_i)`; the workhorse test family.
pub fn ising_chain(n: usize, j: f64, h: f64, periodic: bool) -> Result<ClassicalHamiltonian> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "Ising chain needs n >= 2 sites, got {n}"
        )));
    }
    let dim = 1usize << n;
    let spin = |s: usize, q: usize| -> f64 {
        if (s >> (n - q)) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    };
    let mut energies = Vec::with_capacity(dim);
    for s in 0..dim {
        let mut e = 0.0;
        for q in 1..n {
            e += j * spin(s, q) * spin(s, q + 1);
        }
        if periodic {
            e += j * spin(s, n) * spin(s, 1);
        }
        for q in 1..=n {
            e += h * spin(s, q);
        }
        energies.push(e);
    }
    let mut ham = ClassicalHamiltonian::new(n, energies)?;
    ham.description = Some(format!(
        "ising-chain J={j} h={h} {}",
        if periodic { "periodic" } else { "open" }
    ));
    Ok(ham)
}

/// Partition of the `n` qubits into a system prefix and a bath suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemSplit {
    pub n_s: usize,
    pub n_b: usize,
}

impl SystemSplit {
    pub fn new(n_s: usize, n_b: usize) -> Result<Self> {
        if n_s < 1 || n_b < 1 {
            return Err(Error::InvalidArgument(format!(
                "system split needs n_s >= 1 and n_b >= 1, got {n_s}, {n_b}"
            )));
        }
        Ok(Self { n_s, n_b })
    }

    pub fn total(&self) -> usize {
        self.n_s + self.n_b
    }
}

/// The eigenstates with energy in `[E - delta, E)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyShell {
    n: usize,
    pub e: f64,
    pub delta: f64,
    members: Vec<usize>,
}

impl EnergyShell {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Shell dimension `d_E`.
    pub fn d_e(&self) -> usize {
        self.members.len()
    }

    pub fn contains_energy(&self, energy: f64) -> bool {
        energy >= self.e - self.delta && energy < self.e
    }
}

/// Collects the eigenstates with energy in `[E - delta, E)`.
pub fn energy_shell(h: &ClassicalHamiltonian, e: f64, delta: f64) -> Result<EnergyShell> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "shell width must be positive, got {delta}"
        )));
    }
    let members: Vec<usize> = h
        .energies
        .iter()
        .enumerate()
        .filter(|(_, &el)| el >= e - delta && el < e)
        .map(|(l, _)| l)
        .collect();
    if members.is_empty() {
        return Err(Error::EmptyShell {
            lo: e - delta,
            hi: e,
        });
    }
    Ok(EnergyShell {
        n: h.n,
        e,
        delta,
        members,
    })
}

/// A phase-random state supported on the shell:
/// `d_E^(-1/2) sum_l e^(i phi_l) |e_l>` with i.i.d. uniform phases.
pub fn ideal_shell_state<R: Rng>(shell: &EnergyShell, rng: &mut R) -> Result<PureState> {
    let dim = 1usize << shell.n;
    let amp = (shell.d_e() as f64).sqrt().recip();
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    for &l in &shell.members {
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        amps[l] = Complex64::from_polar(amp, phi);
    }
    PureState::from_amplitudes(shell.n, amps)
}

/// The Gibbs state `e^(-beta H) / tr e^(-beta H)` of a classical Hamiltonian
/// (diagonal in the computational basis).
pub fn gibbs_state(h: &ClassicalHamiltonian, beta: f64) -> Result<DensityMatrix> {
    if !beta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "inverse temperature must be finite, got {beta}"
        )));
    }
    let e0 = h.min_energy();
    let weights: Vec<f64> = h
        .energies
        .iter()
        .map(|&e| (-beta * (e - e0)).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let dim = weights.len();
    let mut mat = Array2::<Complex64>::zeros((dim, dim));
    for (i, w) in weights.iter().enumerate() {
        mat[[i, i]] = Complex64::new(w / z, 0.0);
    }
    DensityMatrix::new(mat)
}

/// Mean energy of the Gibbs state at inverse temperature `beta`.
pub fn gibbs_mean_energy(h: &ClassicalHamiltonian, beta: f64) -> f64 {
    let e0 = h.min_energy();
    let mut z = 0.0f64;
    let mut acc = 0.0f64;
    for &e in &h.energies {
        let w = (-beta * (e - e0)).exp();
        z += w;
        acc += w * e;
    }
    acc / z
}

/// Solves `<H>_Gibbs(beta) = target_energy` for `beta >= 0` by bisection.
///
/// Callers verifying a shell against a Gibbs state pass the window midpoint
/// `E - delta/2` as the target.
pub fn calibrate_beta(h: &ClassicalHamiltonian, target_energy: f64) -> Result<f64> {
    let mean = h.spectral_mean();
    let min = h.min_energy();
    if target_energy > mean {
        return Err(Error::Calibration(format!(
            "target energy {target_energy} above the infinite-temperature mean {mean}"
        )));
    }
    if target_energy <= min {
        return Err(Error::Calibration(format!(
            "target energy {target_energy} at or below the ground energy {min}"
        )));
    }
    if (target_energy - mean).abs() <= 1e-14 * (1.0 + mean.abs()) {
        return Ok(0.0);
    }
    // <H>(beta) decreases monotonically from the spectral mean to the ground
    // energy; bracket then bisect.
    let mut hi = 1.0f64;
    let mut tries = 0;
    while gibbs_mean_energy(h, hi) > target_energy {
        hi *= 2.0;
        tries += 1;
        if tries > 80 {
            return Err(Error::Calibration(format!(
                "target energy {target_energy} unreachable at finite beta"
            )));
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gibbs_mean_energy(h, mid) > target_energy {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-8 * hi.abs().max(1e-12) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Minimum gap between distinct energy levels, or `None` for a constant
/// spectrum. Levels closer than `1e-9 * max(1, range)` count as degenerate.
pub fn min_gap(h: &ClassicalHamiltonian) -> Option<f64> {
    let mut sorted = h.energies.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let range = sorted.last().unwrap() - sorted[0];
    let tol = 1e-9 * range.max(1.0);
    let mut gap = f64::INFINITY;
    for w in sorted.windows(2) {
        let d = w[1] - w[0];
        if d > tol && d < gap {
            gap = d;
        }
    }
    if gap.is_finite() {
        Some(gap)
    } else {
        None
    }
}

/// Recommended ancilla count: smallest `r` with `2^-r <= gap_normalized / 8`.
pub fn recommend_ancillas(h: &ClassicalHamiltonian) -> Option<usize> {
    let gap = min_gap(h)?;
    let range = h.max_energy() - h.min_energy();
    let normalized = gap / range;
    let mut r = 1usize;
    while (0.5f64).powi(r as i32) > normalized / 8.0 {
        r += 1;
    }
    Some(r)
}

/// Result of one run of the thermalizing algorithm.
#[derive(Debug, Clone)]
pub struct ThermalizeOutcome {
    pub success: bool,
    /// Exact probability of the accepting branch.
    pub success_probability: f64,
    /// State of system+bath after the inverse QPE, ancillas traced out.
    /// `None` when the projective measurement rejected.
    pub state_sb: Option<DensityMatrix>,
    /// Ancilla count used.
    pub r: usize,
    /// `1 - |P_shell (x) |+><+|^r applied to the final joint state|^2`;
    /// kernel and round-off error escaping the ideal outcome.
    pub leakage: Option<f64>,
    /// Set when `2^-r` cannot resolve the normalized window width.
    pub precision_warning: bool,
    pub split: SystemSplit,
}

struct JointState {
    r: usize,
    amps: Vec<Complex64>,
}

impl JointState {
    fn ancilla_dim(&self) -> usize {
        1 << self.r
    }
}

/// Phase kickback then inverse QFT on the ancilla register.
fn qpe_forward(joint: &mut JointState, nu: &[f64]) {
    let rdim = joint.ancilla_dim();
    for (block, &nu_l) in joint.amps.chunks_mut(rdim).zip(nu) {
        for (y, a) in block.iter_mut().enumerate() {
            *a *= Complex64::from_polar(1.0, std::f64::consts::TAU * y as f64 * nu_l);
        }
    }
    ancilla_fourier(joint, true);
}

/// Inverse of [`qpe_forward`]: QFT on the ancillas, then the conjugate kickback.
fn qpe_inverse(joint: &mut JointState, nu: &[f64]) {
    ancilla_fourier(joint, false);
    let rdim = joint.ancilla_dim();
    for (block, &nu_l) in joint.amps.chunks_mut(rdim).zip(nu) {
        for (y, a) in block.iter_mut().enumerate() {
            *a *= Complex64::from_polar(1.0, -std::f64::consts::TAU * y as f64 * nu_l);
        }
    }
}

/// Blockwise DFT over the ancilla register; `forward = true` is the inverse
/// QFT (negative exponent), normalized by `2^(-r/2)`.
fn ancilla_fourier(joint: &mut JointState, forward: bool) {
    let rdim = joint.ancilla_dim();
    let mut planner = FftPlanner::<f64>::new();
    let fft = if forward {
        planner.plan_fft_forward(rdim)
    } else {
        planner.plan_fft_inverse(rdim)
    };
    let scale = (rdim as f64).sqrt().recip();
    for block in joint.amps.chunks_mut(rdim) {
        fft.process(block);
        for a in block.iter_mut() {
            *a *= scale;
        }
    }
}

/// One run of the thermalizing algorithm on a classical Hamiltonian.
///
/// Steps: (1) uniform random phases on `|+>^n`; (2) QPE writes `r`-bit
/// rescaled-energy estimates onto ancillas prepared in `|+>^r`; (3) the
/// ancillas are projectively measured against the shell window, with the
/// branch drawn from the exact branch probability; (4) the inverse QPE
/// disentangles the ancillas.
pub fn qpe_thermalize<R: Rng>(
    h: &ClassicalHamiltonian,
    split: SystemSplit,
    e: f64,
    delta: f64,
    r: usize,
    rng: &mut R,
) -> Result<ThermalizeOutcome> {
    if split.total() != h.n {
        return Err(Error::ShapeMismatch {
            context: "system split vs Hamiltonian qubits",
            left: split.total(),
            right: h.n,
        });
    }
    if r < 1 {
        return Err(Error::InvalidArgument("need at least one ancilla".into()));
    }
    if h.n + r > JOINT_BITS_LIMIT {
        return Err(Error::Capacity {
            what: "joint system+ancilla register (qubits)",
            requested: h.n + r,
            limit: JOINT_BITS_LIMIT,
        });
    }
    let shell = energy_shell(h, e, delta)?;

    let e_min = h.min_energy();
    let range = h.max_energy() - e_min;
    let rdim = 1usize << r;
    let grid_scale = 1.0 - (rdim as f64).recip();
    // e -> [0, 1) eigenphase; degenerate spectra map everything to 0.
    let nu: Vec<f64> = h
        .energies
        .iter()
        .map(|&el| {
            if range > 0.0 {
                (el - e_min) / range * grid_scale
            } else {
                0.0
            }
        })
        .collect();
    let decode = |y: usize| -> f64 {
        if range > 0.0 {
            e_min + (y as f64 / rdim as f64) / grid_scale * range
        } else {
            e_min
        }
    };
    let normalized_width = if range > 0.0 {
        delta / range * grid_scale
    } else {
        f64::INFINITY
    };
    let precision_warning = (rdim as f64).recip() >= normalized_width;

    // step 1: phase-random state on the system register, |+>^r on ancillas
    let dim = 1usize << h.n;
    let sys_amp = (dim as f64).sqrt().recip();
    let anc_amp = (rdim as f64).sqrt().recip();
    let mut joint = JointState {
        r,
        amps: Vec::with_capacity(dim * rdim),
    };
    for _ in 0..dim {
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let a = Complex64::from_polar(sys_amp * anc_amp, phi);
        joint.amps.extend(std::iter::repeat_n(a, rdim));
    }

    // step 2: QPE
    qpe_forward(&mut joint, &nu);

    // step 3: projective measurement of the ancillas against the window,
    // exact branch probabilities, branch chosen by the RNG
    let accepted: Vec<bool> = (0..rdim)
        .map(|y| shell.contains_energy(decode(y)))
        .collect();
    let mut p_accept = 0.0f64;
    for block in joint.amps.chunks(rdim) {
        for (a, &acc) in block.iter().zip(&accepted) {
            if acc {
                p_accept += a.norm_sqr();
            }
        }
    }
    let p_accept = p_accept.clamp(0.0, 1.0);
    let success = rng.random_bool(p_accept);
    if !success {
        return Ok(ThermalizeOutcome {
            success: false,
            success_probability: p_accept,
            state_sb: None,
            r,
            leakage: None,
            precision_warning,
            split,
        });
    }
    let renorm = p_accept.sqrt().recip();
    for block in joint.amps.chunks_mut(rdim) {
        for (a, &acc) in block.iter_mut().zip(&accepted) {
            if acc {
                *a *= renorm;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
    }

    // step 4: inverse QPE
    qpe_inverse(&mut joint, &nu);

    // leakage: weight escaping (shell subspace) x |+>^r
    let in_shell = {
        let mut flags = vec![false; dim];
        for &l in shell.members() {
            flags[l] = true;
        }
        flags
    };
    let mut good = 0.0f64;
    for (block, &member) in joint.amps.chunks(rdim).zip(&in_shell) {
        if !member {
            continue;
        }
        let overlap: Complex64 = block.iter().sum();
        good += (overlap * anc_amp).norm_sqr();
    }
    let leakage = (1.0 - good).max(0.0);

    // trace out the ancillas
    let mut rho = Array2::<Complex64>::zeros((dim, dim));
    for i in 0..dim {
        for jx in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for y in 0..rdim {
                acc += joint.amps[i * rdim + y] * joint.amps[jx * rdim + y].conj();
            }
            rho[[i, jx]] = acc;
        }
    }
    let state_sb = DensityMatrix::new(rho)?;

    Ok(ThermalizeOutcome {
        success: true,
        success_probability: p_accept,
        state_sb: Some(state_sb),
        r,
        leakage: Some(leakage),
        precision_warning,
        split,
    })
}

/// Partial trace of a density matrix on `n` qubits down to the kept labels.
pub fn reduce_density(rho: &DensityMatrix, n: usize, keep: &[usize]) -> Result<DensityMatrix> {
    if rho.dim() != 1 << n {
        return Err(Error::ShapeMismatch {
            context: "density matrix dimension vs 2^n",
            left: rho.dim(),
            right: 1 << n,
        });
    }
    if keep.is_empty() {
        return Err(Error::InvalidArgument("kept set is empty".into()));
    }
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep[0] < 1 || *keep.last().unwrap() > n {
        return Err(Error::InvalidArgument(format!(
            "kept labels must lie in 1..={n}"
        )));
    }
    let traced: Vec<usize> = (1..=n).filter(|q| !keep.contains(q)).collect();
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
    let kdim = keep_idx.len();
    let mut out = Array2::<Complex64>::zeros((kdim, kdim));
    for &env in &traced_idx {
        for (i, &bi) in keep_idx.iter().enumerate() {
            for (j, &bj) in keep_idx.iter().enumerate() {
                out[[i, j]] += rho.entry(bi | env, bj | env);
            }
        }
    }
    DensityMatrix::new(out)
}

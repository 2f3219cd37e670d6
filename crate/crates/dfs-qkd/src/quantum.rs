//! Exact dense state-vector representation of small qubit registers.
//!
//! Convention: qubit 0 is the leftmost ket symbol and the most significant
//! bit of the amplitude index, so |01⟩ has amplitude 1 at index 1 of 4.
//! Measuring a qubit removes it from the register; the post-measurement
//! state has one qubit fewer.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance for all exactness checks (norms, unitarity, phase equality).
pub const TOL: f64 = 1e-12;

/// Largest register size supported by the dense representation.
pub const MAX_QUBITS: usize = 4;

/// Measurement basis: Z eigenstates are |0⟩,|1⟩; X eigenstates are |±⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Z,
    X,
}

impl std::fmt::Display for Basis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Basis::Z => write!(f, "Z"),
            Basis::X => write!(f, "X"),
        }
    }
}

/// Logical role of a qubit within a register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QubitRole {
    Data,
    Ancilla,
    EveAncilla,
}

/// A normalized pure state over 0-4 qubits.
///
/// The 0-qubit case (a bare phase) arises as the post-state of measuring
/// the last qubit of a register.
#[derive(Debug, Clone)]
pub struct PureState {
    amps: Vec<Complex64>,
    roles: Vec<QubitRole>,
}

impl PureState {
    /// Builds a state from raw amplitudes, checking length and normalization.
    pub fn new(amps: Vec<Complex64>, roles: Vec<QubitRole>) -> Result<Self> {
        let n = roles.len();
        if n > MAX_QUBITS {
            return Err(Error::Capacity(format!(
                "{n} qubits exceeds the {MAX_QUBITS}-qubit capacity"
            )));
        }
        if amps.len() != 1 << n {
            return Err(Error::Validation(format!(
                "amplitude vector length {} does not match 2^{n}",
                amps.len()
            )));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Validation("non-finite amplitude".into()));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "state norm² {norm} is not 1"
            )));
        }
        Ok(Self { amps, roles })
    }

    /// Computational basis state |b₀b₁...⟩ with the given roles.
    pub fn basis_state(bits: &[u8], roles: Vec<QubitRole>) -> Result<Self> {
        if bits.len() != roles.len() {
            return Err(Error::Validation("bits/roles length mismatch".into()));
        }
        let n = bits.len();
        let mut idx = 0usize;
        for &b in bits {
            idx = (idx << 1) | (b as usize & 1);
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[idx] = Complex64::new(1.0, 0.0);
        Self::new(amps, roles)
    }

    /// Single data qubit |0⟩.
    pub fn zero() -> Self {
        Self::basis_state(&[0], vec![QubitRole::Data]).unwrap()
    }

    /// Single data qubit |1⟩.
    pub fn one() -> Self {
        Self::basis_state(&[1], vec![QubitRole::Data]).unwrap()
    }

    /// Single data qubit |+⟩ = (|0⟩+|1⟩)/√2.
    pub fn plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(
            vec![Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
            vec![QubitRole::Data],
        )
        .unwrap()
    }

    /// Single data qubit |−⟩ = (|0⟩−|1⟩)/√2.
    pub fn minus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(
            vec![Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
            vec![QubitRole::Data],
        )
        .unwrap()
    }

    /// Bell state |φ⁺⟩ = (|00⟩+|11⟩)/√2 on (data, ancilla).
    pub fn phi_plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = Complex64::new(0.0, 0.0);
        Self::new(
            vec![Complex64::new(h, 0.0), z, z, Complex64::new(h, 0.0)],
            vec![QubitRole::Data, QubitRole::Ancilla],
        )
        .unwrap()
    }

    /// Bell state |ψ⁻⟩ = (|01⟩−|10⟩)/√2 on (data, ancilla).
    pub fn psi_minus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = Complex64::new(0.0, 0.0);
        Self::new(
            vec![z, Complex64::new(h, 0.0), Complex64::new(-h, 0.0), z],
            vec![QubitRole::Data, QubitRole::Ancilla],
        )
        .unwrap()
    }

    pub fn num_qubits(&self) -> usize {
        self.roles.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn roles(&self) -> &[QubitRole] {
        &self.roles
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Bit value of `qubit` inside amplitude index `idx`.
    fn bit_of(&self, idx: usize, qubit: usize) -> usize {
        (idx >> (self.num_qubits() - 1 - qubit)) & 1
    }

    /// Multiplies every amplitude by a fixed phase factor.
    pub fn scaled(&self, factor: Complex64) -> Result<Self> {
        Self::new(self.amps.iter().map(|a| a * factor).collect(), self.roles.clone())
    }

    /// Applies a unitary to the ordered target qubits; other qubits untouched.
    pub fn apply(&self, gate: &Gate, targets: &[usize]) -> Result<Self> {
        let n = self.num_qubits();
        let k = targets.len();
        if gate.dim() != 1 << k {
            return Err(Error::Validation(format!(
                "gate dimension {} does not match {k} target(s)",
                gate.dim()
            )));
        }
        for (i, &t) in targets.iter().enumerate() {
            if t >= n {
                return Err(Error::Validation(format!("target qubit {t} out of range")));
            }
            if targets[..i].contains(&t) {
                return Err(Error::Validation(format!("duplicate target qubit {t}")));
            }
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (idx, slot) in out.iter_mut().enumerate() {
            // Row of the gate selected by the target bits of idx.
            let mut row = 0usize;
            for &t in targets {
                row = (row << 1) | self.bit_of(idx, t);
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for col in 0..gate.dim() {
                // Source index: idx with target bits replaced by col's bits.
                let mut src = idx;
                for (j, &t) in targets.iter().enumerate() {
                    let bit = (col >> (k - 1 - j)) & 1;
                    let shift = n - 1 - t;
                    src = (src & !(1 << shift)) | (bit << shift);
                }
                acc += gate.entry(row, col) * self.amps[src];
            }
            *slot = acc;
        }
        Self::new(out, self.roles.clone())
    }
}

/// Kronecker product, `a`'s qubits first (leftmost in ket notation).
pub fn tensor(a: &PureState, b: &PureState) -> Result<PureState> {
    let n = a.num_qubits() + b.num_qubits();
    if n > MAX_QUBITS {
        return Err(Error::Capacity(format!(
            "tensor product of {} + {} qubits exceeds {MAX_QUBITS}",
            a.num_qubits(),
            b.num_qubits()
        )));
    }
    let mut amps = Vec::with_capacity(a.amps.len() * b.amps.len());
    for &x in &a.amps {
        for &y in &b.amps {
            amps.push(x * y);
        }
    }
    let mut roles = a.roles.clone();
    roles.extend_from_slice(&b.roles);
    PureState::new(amps, roles)
}

/// A unitary on 1-4 qubits, validated at construction.
#[derive(Debug, Clone)]
pub struct Gate {
    dim: usize,
    m: Vec<Complex64>, // row-major
}

impl Gate {
    /// Builds a gate from a row-major matrix, rejecting non-unitaries
    /// (‖U†U − I‖∞ > 1e-12).
    pub fn new(dim: usize, m: Vec<Complex64>) -> Result<Self> {
        if !dim.is_power_of_two() || !(2..=1 << MAX_QUBITS).contains(&dim) {
            return Err(Error::Validation(format!("unsupported gate dimension {dim}")));
        }
        if m.len() != dim * dim {
            return Err(Error::Validation(format!(
                "matrix has {} entries, expected {}",
                m.len(),
                dim * dim
            )));
        }
        let g = Self { dim, m };
        // U†U = I check.
        for r in 0..dim {
            for c in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..dim {
                    acc += g.entry(k, r).conj() * g.entry(k, c);
                }
                let expect = if r == c { 1.0 } else { 0.0 };
                if (acc - expect).norm() > TOL {
                    return Err(Error::Validation(format!(
                        "matrix is not unitary (U†U deviates at ({r},{c}))"
                    )));
                }
            }
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[row * self.dim + col]
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            m[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Self::new(dim, m).unwrap()
    }

    /// σ_z: |0⟩→|0⟩, |1⟩→−|1⟩.
    pub fn sigma_z() -> Self {
        Self::new(
            2,
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, 0.0),
            ],
        )
        .unwrap()
    }

    /// σ_x: bit flip.
    pub fn sigma_x() -> Self {
        Self::new(
            2,
            vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        )
        .unwrap()
    }

    /// Σ = [[0, 1], [−1, 0]]: |1⟩→|0⟩, |0⟩→−|1⟩.
    pub fn sigma_cap() -> Self {
        Self::new(
            2,
            vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        )
        .unwrap()
    }

    /// Hadamard transform.
    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(
            2,
            vec![
                Complex64::new(h, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(-h, 0.0),
            ],
        )
        .unwrap()
    }

    /// Real equatorial rotation [[cosθ, sinθ], [−sinθ, cosθ]].
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(
            2,
            vec![
                Complex64::new(c, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(-s, 0.0),
                Complex64::new(c, 0.0),
            ],
        )
        .unwrap()
    }

    /// CNOT with the first (most significant) qubit as control.
    pub fn cnot() -> Self {
        let o = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        Self::new(
            4,
            vec![
                o, z, z, z, //
                z, o, z, z, //
                z, z, z, o, //
                z, z, o, z,
            ],
        )
        .unwrap()
    }

    /// SWAP of two qubits.
    pub fn swap() -> Self {
        let o = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        Self::new(
            4,
            vec![
                o, z, z, z, //
                z, z, o, z, //
                z, o, z, z, //
                z, z, z, o,
            ],
        )
        .unwrap()
    }

    /// Composes a circuit of sub-gates on `num_qubits` qubits into one
    /// unitary, applying `ops` left to right.
    pub fn compose(num_qubits: usize, ops: &[(Gate, Vec<usize>)]) -> Result<Self> {
        let dim = 1usize << num_qubits;
        let roles = vec![QubitRole::Data; num_qubits];
        let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
        for col in 0..dim {
            let bits: Vec<u8> = (0..num_qubits)
                .map(|q| ((col >> (num_qubits - 1 - q)) & 1) as u8)
                .collect();
            let mut state = PureState::basis_state(&bits, roles.clone())?;
            for (gate, targets) in ops {
                state = state.apply(gate, targets)?;
            }
            for row in 0..dim {
                m[row * dim + col] = state.amps[row];
            }
        }
        Self::new(dim, m)
    }
}

/// Result of a single-qubit projective measurement.
#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    pub basis: Basis,
    pub value: u8,
    pub post_state: PureState,
}

/// Projects `index` onto the basis eigenstate with value `value`.
///
/// Returns the branch probability and the renormalized remainder with the
/// measured qubit removed, or `None` when the branch has probability 0.
pub fn project_qubit(
    state: &PureState,
    index: usize,
    basis: Basis,
    value: u8,
) -> Result<Option<(f64, PureState)>> {
    let n = state.num_qubits();
    if index >= n {
        return Err(Error::Validation(format!("qubit index {index} out of range")));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // Eigenvector coefficients ⟨e|0⟩, ⟨e|1⟩ of the selected outcome.
    let (c0, c1) = match (basis, value) {
        (Basis::Z, 0) => (1.0, 0.0),
        (Basis::Z, 1) => (0.0, 1.0),
        (Basis::X, 0) => (h, h),
        (Basis::X, 1) => (h, -h),
        _ => return Err(Error::Validation(format!("invalid outcome value {value}"))),
    };
    let shift = n - 1 - index;
    let mut reduced = vec![Complex64::new(0.0, 0.0); 1 << (n - 1)];
    for (j, slot) in reduced.iter_mut().enumerate() {
        let low = j & ((1 << shift) - 1);
        let high = (j >> shift) << (shift + 1);
        let i0 = high | low;
        let i1 = i0 | (1 << shift);
        *slot = c0 * state.amps[i0] + c1 * state.amps[i1];
    }
    let prob: f64 = reduced.iter().map(|a| a.norm_sqr()).sum();
    if prob < 1e-24 {
        return Ok(None);
    }
    let scale = 1.0 / prob.sqrt();
    for a in &mut reduced {
        *a *= scale;
    }
    let mut roles = state.roles.clone();
    roles.remove(index);
    Ok(Some((prob, PureState { amps: reduced, roles })))
}

/// Born-rule measurement of one qubit, driven by an explicit uniform draw
/// in [0,1). The measured qubit is removed from the register.
pub fn measure_qubit(
    state: &PureState,
    index: usize,
    basis: Basis,
    randomness: f64,
) -> Result<MeasurementOutcome> {
    let branch0 = project_qubit(state, index, basis, 0)?;
    let p0 = branch0.as_ref().map_or(0.0, |(p, _)| *p);
    // Comparing against the cumulative probability excludes exact-0 branches.
    if randomness < p0 {
        let (_, post) = branch0.unwrap();
        Ok(MeasurementOutcome { basis, value: 0, post_state: post })
    } else {
        let (_, post) = project_qubit(state, index, basis, 1)?
            .ok_or_else(|| Error::Validation("zero-norm projection branch selected".into()))?;
        Ok(MeasurementOutcome { basis, value: 1, post_state: post })
    }
}

/// Exact outcome distribution of measuring the planned qubits.
///
/// Keys are outcome tuples in plan order; all 2^k tuples are present and the
/// probabilities sum to 1 within 1e-12.
pub fn outcome_distribution(
    state: &PureState,
    plan: &[(usize, Basis)],
) -> Result<BTreeMap<Vec<u8>, f64>> {
    let n = state.num_qubits();
    for (i, &(q, _)) in plan.iter().enumerate() {
        if q >= n {
            return Err(Error::Validation(format!("plan qubit {q} out of range")));
        }
        if plan[..i].iter().any(|&(p, _)| p == q) {
            return Err(Error::Validation(format!("duplicate plan qubit {q}")));
        }
    }
    let mut out = BTreeMap::new();
    fn fill_zeros(prefix: &mut Vec<u8>, remaining: usize, out: &mut BTreeMap<Vec<u8>, f64>) {
        if remaining == 0 {
            out.entry(prefix.clone()).or_insert(0.0);
            return;
        }
        for v in 0..2u8 {
            prefix.push(v);
            fill_zeros(prefix, remaining - 1, out);
            prefix.pop();
        }
    }
    fn rec(
        state: &PureState,
        plan: &[(usize, Basis)],
        prefix: &mut Vec<u8>,
        p: f64,
        out: &mut BTreeMap<Vec<u8>, f64>,
    ) -> Result<()> {
        let Some(&(q, basis)) = plan.first() else {
            *out.entry(prefix.clone()).or_insert(0.0) += p;
            return Ok(());
        };
        // Remaining indices shift down past the removed qubit.
        let rest: Vec<(usize, Basis)> = plan[1..]
            .iter()
            .map(|&(i, b)| (if i > q { i - 1 } else { i }, b))
            .collect();
        for v in 0..2u8 {
            prefix.push(v);
            match project_qubit(state, q, basis, v)? {
                Some((pv, post)) => rec(&post, &rest, prefix, p * pv, out)?,
                None => fill_zeros(prefix, rest.len(), out),
            }
            prefix.pop();
        }
        Ok(())
    }
    rec(state, plan, &mut Vec::new(), 1.0, &mut out)?;
    Ok(out)
}

/// True iff a = e^{iγ}·b for some real γ, within `tol` per amplitude.
pub fn global_phase_equal(a: &PureState, b: &PureState, tol: f64) -> bool {
    if a.num_qubits() != b.num_qubits() {
        return false;
    }
    // Anchor the phase on b's largest amplitude.
    let (k, bk) = b
        .amps
        .iter()
        .enumerate()
        .max_by(|(_, x), (_, y)| x.norm_sqr().partial_cmp(&y.norm_sqr()).unwrap())
        .unwrap();
    if bk.norm() <= tol {
        return a.amps.iter().all(|x| x.norm() <= tol);
    }
    let phase = a.amps[k] / bk;
    if (phase.norm() - 1.0).abs() > tol {
        return false;
    }
    a.amps
        .iter()
        .zip(&b.amps)
        .all(|(x, y)| (x - phase * y).norm() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn tensor_basis_product() {
        let s = tensor(&PureState::zero(), &PureState::one()).unwrap();
        assert_eq!(s.num_qubits(), 2);
        assert!((s.amplitudes()[1] - c(1.0, 0.0)).norm() < TOL);
        for i in [0, 2, 3] {
            assert!(s.amplitudes()[i].norm() < TOL);
        }
    }

    #[test]
    fn tensor_plus_zero() {
        let s = tensor(&PureState::plus(), &PureState::zero()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0] - c(h, 0.0)).norm() < TOL);
        assert!((s.amplitudes()[2] - c(h, 0.0)).norm() < TOL);
        assert!(s.amplitudes()[1].norm() < TOL);
        assert!(s.amplitudes()[3].norm() < TOL);
    }

    #[test]
    fn tensor_bell_with_zero() {
        let s = tensor(&PureState::phi_plus(), &PureState::zero()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(s.num_qubits(), 3);
        assert!((s.amplitudes()[0b000] - c(h, 0.0)).norm() < TOL);
        assert!((s.amplitudes()[0b110] - c(h, 0.0)).norm() < TOL);
    }

    #[test]
    fn tensor_capacity_overflow() {
        let two = PureState::phi_plus();
        let four = tensor(&two, &two).unwrap();
        assert!(matches!(tensor(&four, &PureState::zero()), Err(Error::Capacity(_))));
    }

    #[test]
    fn sigma_z_on_one() {
        let s = PureState::one().apply(&Gate::sigma_z(), &[0]).unwrap();
        assert!((s.amplitudes()[1] - c(-1.0, 0.0)).norm() < TOL);
    }

    #[test]
    fn sigma_cap_on_one() {
        let s = PureState::one().apply(&Gate::sigma_cap(), &[0]).unwrap();
        assert!((s.amplitudes()[0] - c(1.0, 0.0)).norm() < TOL);
        assert!(s.amplitudes()[1].norm() < TOL);
    }

    #[test]
    fn identity_leaves_state() {
        let s = PureState::psi_minus();
        let t = s.apply(&Gate::identity(2), &[1]).unwrap();
        assert!(global_phase_equal(&s, &t, TOL));
        assert!((t.amplitudes()[1] - s.amplitudes()[1]).norm() < TOL);
    }

    #[test]
    fn nonunitary_rejected() {
        let m = vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)];
        assert!(matches!(Gate::new(2, m), Err(Error::Validation(_))));
    }

    #[test]
    fn bad_target_rejected() {
        assert!(PureState::zero().apply(&Gate::sigma_z(), &[3]).is_err());
        assert!(PureState::phi_plus().apply(&Gate::cnot(), &[0, 0]).is_err());
    }

    #[test]
    fn measure_plus_in_x_is_deterministic() {
        for u in [0.0, 0.3, 0.999] {
            let m = measure_qubit(&PureState::plus(), 0, Basis::X, u).unwrap();
            assert_eq!(m.value, 0);
        }
    }

    #[test]
    fn measure_psi_minus_first_qubit() {
        // P(0) = 1/2; randomness 0.3 selects value 0, leaving |1⟩.
        let m = measure_qubit(&PureState::psi_minus(), 0, Basis::Z, 0.3).unwrap();
        assert_eq!(m.value, 0);
        assert_eq!(m.post_state.num_qubits(), 1);
        assert!((m.post_state.amplitudes()[1].norm() - 1.0).abs() < TOL);
    }

    #[test]
    fn measure_zero_in_x_is_fair() {
        let d = outcome_distribution(&PureState::zero(), &[(0, Basis::X)]).unwrap();
        assert!((d[&vec![0]] - 0.5).abs() < TOL);
        assert!((d[&vec![1]] - 0.5).abs() < TOL);
    }

    #[test]
    fn bell_distribution_zz() {
        let d =
            outcome_distribution(&PureState::phi_plus(), &[(0, Basis::Z), (1, Basis::Z)]).unwrap();
        assert!((d[&vec![0, 0]] - 0.5).abs() < TOL);
        assert!((d[&vec![1, 1]] - 0.5).abs() < TOL);
        assert!(d[&vec![0, 1]].abs() < TOL);
        assert!(d[&vec![1, 0]].abs() < TOL);
    }

    #[test]
    fn single_one_in_x() {
        let s = tensor(&PureState::zero(), &PureState::one()).unwrap();
        let d = outcome_distribution(&s, &[(1, Basis::X)]).unwrap();
        assert!((d[&vec![0]] - 0.5).abs() < TOL);
        assert!((d[&vec![1]] - 0.5).abs() < TOL);
    }

    #[test]
    fn psi_plus_xx_correlations() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = c(0.0, 0.0);
        let s = PureState::new(
            vec![z, c(h, 0.0), c(h, 0.0), z],
            vec![QubitRole::Ancilla, QubitRole::Data],
        )
        .unwrap();
        let d = outcome_distribution(&s, &[(0, Basis::X), (1, Basis::X)]).unwrap();
        assert!((d[&vec![0, 0]] - 0.5).abs() < TOL);
        assert!((d[&vec![1, 1]] - 0.5).abs() < TOL);
        assert!(d[&vec![0, 1]].abs() < TOL);
        assert!(d[&vec![1, 0]].abs() < TOL);
    }

    #[test]
    fn global_phase_examples() {
        let s = tensor(&PureState::zero(), &PureState::one()).unwrap();
        let rotated = s.scaled(Complex64::from_polar(1.0, 1.234)).unwrap();
        assert!(global_phase_equal(&s, &rotated, TOL));
        assert!(!global_phase_equal(&PureState::zero(), &PureState::one(), TOL));
        let neg = PureState::plus().scaled(c(-1.0, 0.0)).unwrap();
        assert!(global_phase_equal(&neg, &PureState::plus(), TOL));
    }

    #[test]
    fn measure_tensor_round_trip() {
        // Measuring qubit b of tensor(a, b) when b is a basis state gives
        // that value with probability 1.
        for (b, val) in [(PureState::zero(), 0u8), (PureState::one(), 1u8)] {
            let s = tensor(&PureState::plus(), &b).unwrap();
            let d = outcome_distribution(&s, &[(1, Basis::Z)]).unwrap();
            assert!((d[&vec![val]] - 1.0).abs() < TOL);
        }
    }

    #[test]
    fn measurement_marginals_match_distribution() {
        use rand::{Rng, SeedableRng};
        let s = PureState::psi_minus();
        let d = outcome_distribution(&s, &[(0, Basis::Z)]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let trials = 100_000usize;
        let mut zeros = 0usize;
        for _ in 0..trials {
            let m = measure_qubit(&s, 0, Basis::Z, rng.gen::<f64>()).unwrap();
            if m.value == 0 {
                zeros += 1;
            }
        }
        let p = d[&vec![0]];
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((zeros as f64 / trials as f64 - p).abs() < 4.0 * se);
    }

    #[test]
    fn compose_matches_sequential_application() {
        let circuit = Gate::compose(
            2,
            &[
                (Gate::hadamard(), vec![0]),
                (Gate::cnot(), vec![0, 1]),
            ],
        )
        .unwrap();
        let direct = PureState::basis_state(&[0, 0], vec![QubitRole::Data; 2])
            .unwrap()
            .apply(&circuit, &[0, 1])
            .unwrap();
        assert!(global_phase_equal(&direct, &PureState::phi_plus(), TOL));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_state(n: usize) -> impl Strategy<Value = PureState> {
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n).prop_filter_map(
                "norm too small",
                move |raw| {
                    let amps: Vec<Complex64> =
                        raw.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
                    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
                    if norm < 1e-3 {
                        return None;
                    }
                    let s = norm.sqrt();
                    PureState::new(
                        amps.iter().map(|a| a / s).collect(),
                        vec![QubitRole::Data; n],
                    )
                    .ok()
                },
            )
        }

        proptest! {
            #[test]
            fn gates_preserve_norm(s in arb_state(2), theta in 0.0..std::f64::consts::TAU) {
                let t = s.apply(&Gate::rotation(theta), &[0]).unwrap()
                         .apply(&Gate::hadamard(), &[1]).unwrap();
                prop_assert!((t.norm_sqr() - 1.0).abs() < TOL);
            }

            #[test]
            fn distributions_sum_to_one(s in arb_state(2)) {
                let d = outcome_distribution(&s, &[(0, Basis::X), (1, Basis::Z)]).unwrap();
                let total: f64 = d.values().sum();
                prop_assert!((total - 1.0).abs() < TOL);
                prop_assert_eq!(d.len(), 4);
            }
        }
    }
}

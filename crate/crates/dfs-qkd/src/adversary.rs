//! Eavesdropper models and the security-reduction equivalence checker.
//!
//! A generic code-level attack is a unitary on the 2 code qubits plus up to
//! 2 Eve ancillas, followed by a fixed measurement plan on the ancillas.
//! The wrapped single-qubit attack routes a BB84 qubit through
//! encode → attack → decode, with the decode done by Eve, who forwards the
//! recovered qubit. The checker verifies that both pictures induce exactly
//! the same joint (Bob, Eve) outcome distributions.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codecs::{self, Bb84State, Protocol};
use crate::quantum::{
    global_phase_equal, measure_qubit, outcome_distribution, project_qubit, tensor, Basis, Gate,
    PureState, QubitRole, MAX_QUBITS, TOL,
};
use crate::{Error, Result};

/// An adversary channel: unitary on code qubits + ancilla, plus Eve's final
/// measurement plan over her ancillas (indices are ancilla-local).
#[derive(Debug, Clone)]
pub struct AttackScheme {
    pub ancilla_qubits: usize,
    pub attack_unitary: Gate,
    pub eve_measurement: Vec<(usize, Basis)>,
}

impl AttackScheme {
    pub fn new(
        ancilla_qubits: usize,
        attack_unitary: Gate,
        eve_measurement: Vec<(usize, Basis)>,
    ) -> Result<Self> {
        let total = 2 + ancilla_qubits;
        if total > MAX_QUBITS {
            return Err(Error::Capacity(format!(
                "attack needs {total} qubits, capacity is {MAX_QUBITS}"
            )));
        }
        if attack_unitary.dim() != 1 << total {
            return Err(Error::Validation(format!(
                "attack unitary dimension {} does not match {total} qubits",
                attack_unitary.dim()
            )));
        }
        for &(idx, _) in &eve_measurement {
            if idx >= ancilla_qubits {
                return Err(Error::Validation(format!(
                    "eve measurement index {idx} outside {ancilla_qubits} ancilla(s)"
                )));
            }
        }
        Ok(Self { ancilla_qubits, attack_unitary, eve_measurement })
    }

    /// The do-nothing attack on the bare code.
    pub fn identity() -> Self {
        Self::new(0, Gate::identity(4), vec![]).unwrap()
    }
}

/// Per-code basis rule for intercept-resend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterceptResendStrategy {
    #[serde(rename = "z")]
    FixedZ,
    #[serde(rename = "x")]
    FixedX,
    Random,
}

impl InterceptResendStrategy {
    fn choose(&self, rng: &mut impl Rng) -> Basis {
        match self {
            InterceptResendStrategy::FixedZ => Basis::Z,
            InterceptResendStrategy::FixedX => Basis::X,
            InterceptResendStrategy::Random => {
                if rng.gen_bool(0.5) {
                    Basis::Z
                } else {
                    Basis::X
                }
            }
        }
    }
}

/// What Eve did to one transmission.
#[derive(Debug, Clone)]
pub struct AttackOutcome {
    pub resent_state: Option<PureState>,
    pub eve_bits: Vec<u8>,
    pub eve_basis_record: Vec<Basis>,
}

/// Eve decodes the code with the protocol's passive decoder in a basis of
/// her choosing, records the bit, re-encodes the measured BB84 state, and
/// resends.
pub fn intercept_resend_code(
    code: &PureState,
    protocol: Protocol,
    strategy: InterceptResendStrategy,
    rng: &mut impl Rng,
) -> Result<AttackOutcome> {
    let basis = strategy.choose(rng);
    let event = match protocol {
        Protocol::P1 => codecs::decode_p1_passive(code, basis, rng)?,
        Protocol::P2 => codecs::decode_p2_passive(code, basis, rng, false)?,
    };
    let bit = event.bit.expect("passive decoders always accept");
    let resent = codecs::encode(protocol, Bb84State::new(basis, bit)).state;
    Ok(AttackOutcome {
        resent_state: Some(resent),
        eve_bits: vec![bit],
        eve_basis_record: vec![basis],
    })
}

/// Eve watching the Protocol 1 single-line transmission: she measures the
/// beam feeding the X analyzer in |±⟩ and checks photon presence on the
/// data beam without disturbing polarization. Routing cooperates with
/// probability 1/4; otherwise she blocks the transmission, presenting a
/// 75%-lossy channel. Survivors are forwarded with the step-4 conditional
/// correction applied, i.e. in Alice's exact BB84 state.
pub fn fig2_blocking_attack(code: &PureState, rng: &mut impl Rng) -> Result<AttackOutcome> {
    let ancilla_to_x = rng.gen_bool(0.5);
    let data_forward = rng.gen_bool(0.5);
    if !(ancilla_to_x && data_forward) {
        return Ok(AttackOutcome { resent_state: None, eve_bits: vec![], eve_basis_record: vec![] });
    }
    let m = measure_qubit(code, 1, Basis::X, rng.gen())?;
    let mut data = m.post_state;
    if m.value == 1 {
        data = data.apply(&Gate::sigma_z(), &[0])?;
    }
    Ok(AttackOutcome {
        resent_state: Some(data),
        eve_bits: vec![m.value],
        eve_basis_record: vec![Basis::X],
    })
}

/// A code-level attack wrapped into a single-qubit attack on BB84:
/// Eve encodes the incoming qubit, applies the attack unitary, decodes with
/// the protocol's active decoder, discards "qubit 1", and forwards the
/// recovered qubit.
#[derive(Debug, Clone)]
pub struct WrappedAttack {
    pub scheme: AttackScheme,
    pub protocol: Protocol,
}

/// Builds the composite S′ = Encoding → Â → Decoding.
pub fn wrap_attack(s: &AttackScheme, protocol: Protocol) -> Result<WrappedAttack> {
    // Capacity: code (2) + attack ancillas already checked at scheme
    // construction; wrapping adds no qubits (the encoder consumes a fresh
    // ancilla that becomes code qubit 1).
    Ok(WrappedAttack { scheme: s.clone(), protocol })
}

impl WrappedAttack {
    /// Runs S′ on a single-qubit state by sampling, returning the forwarded
    /// qubit and Eve's measurement outcomes (decode outcome last).
    pub fn apply(&self, qubit: &PureState, rng: &mut impl Rng) -> Result<(PureState, Vec<u8>)> {
        if qubit.num_qubits() != 1 {
            return Err(Error::Validation("wrapped attack expects a single qubit".into()));
        }
        let anc = PureState::basis_state(
            &vec![0u8; 1 + self.scheme.ancilla_qubits],
            std::iter::once(QubitRole::Ancilla)
                .chain(std::iter::repeat_n(QubitRole::EveAncilla, self.scheme.ancilla_qubits))
                .collect(),
        )?;
        let mut state = tensor(qubit, &anc)?;
        state = state.apply(&codecs::encoding_gate(self.protocol), &[0, 1])?;
        let targets: Vec<usize> = (0..2 + self.scheme.ancilla_qubits).collect();
        state = state.apply(&self.scheme.attack_unitary, &targets)?;

        let mut eve_outcomes = Vec::new();
        // Eve's ancilla measurements (descending global index keeps the
        // remaining indices stable).
        let mut plan: Vec<(usize, Basis)> =
            self.scheme.eve_measurement.iter().map(|&(i, b)| (2 + i, b)).collect();
        plan.sort_by_key(|&(idx, _)| std::cmp::Reverse(idx));
        for (idx, basis) in plan {
            let m = measure_qubit(&state, idx, basis, rng.gen())?;
            eve_outcomes.push(m.value);
            state = m.post_state;
        }
        // Active decode: measure the decode qubit, fix up, forward the rest.
        let (decode_idx, decode_basis, correction) = decode_step(self.protocol);
        let m = measure_qubit(&state, decode_idx, decode_basis, rng.gen())?;
        let mut forwarded = m.post_state;
        if m.value == 1 {
            forwarded = forwarded.apply(&correction, &[0])?;
        }
        eve_outcomes.push(m.value);
        Ok((forwarded, eve_outcomes))
    }
}

fn decode_step(protocol: Protocol) -> (usize, Basis, Gate) {
    match protocol {
        Protocol::P1 => (1, Basis::X, Gate::sigma_z()),
        Protocol::P2 => (0, Basis::Z, Gate::sigma_cap()),
    }
}

type JointDistribution = BTreeMap<(u8, Vec<u8>), f64>;

fn eve_ancilla_state(n: usize) -> Result<PureState> {
    PureState::basis_state(&vec![0u8; n], vec![QubitRole::EveAncilla; n])
}

/// Exact joint distribution over (Bob's bit, Eve's outcomes) when the coded
/// protocol is attacked by `s` on the line.
pub fn coded_attack_distribution(
    s: &AttackScheme,
    protocol: Protocol,
    input: Bb84State,
    bob_basis: Basis,
) -> Result<JointDistribution> {
    let mut state = codecs::encode(protocol, input).state;
    if s.ancilla_qubits > 0 {
        state = tensor(&state, &eve_ancilla_state(s.ancilla_qubits)?)?;
    }
    let targets: Vec<usize> = (0..2 + s.ancilla_qubits).collect();
    state = state.apply(&s.attack_unitary, &targets)?;
    decode_and_measure_distribution(s, protocol, state, bob_basis, 0)
}

/// Exact joint distribution over (Bob's bit, Eve's outcomes) when BB84 is
/// attacked by the wrapped attack S′. Built independently of the coded
/// path: the register starts from the bare BB84 qubit and the encoding is
/// applied as an explicit unitary by Eve.
pub fn wrapped_attack_distribution(
    s: &AttackScheme,
    protocol: Protocol,
    input: Bb84State,
    bob_basis: Basis,
) -> Result<JointDistribution> {
    let mut state = tensor(
        &input.state(),
        &PureState::basis_state(&[0], vec![QubitRole::Ancilla])?,
    )?;
    if s.ancilla_qubits > 0 {
        state = tensor(&state, &eve_ancilla_state(s.ancilla_qubits)?)?;
    }
    state = state.apply(&codecs::encoding_gate(protocol), &[0, 1])?;
    let targets: Vec<usize> = (0..2 + s.ancilla_qubits).collect();
    state = state.apply(&s.attack_unitary, &targets)?;
    decode_and_measure_distribution(s, protocol, state, bob_basis, 0)
}

/// Shared branch enumeration: active decode on code qubits (base, base+1),
/// Bob's measurement of the recovered qubit, then Eve's ancilla plan.
/// The decode outcome is marginalized out.
fn decode_and_measure_distribution(
    s: &AttackScheme,
    protocol: Protocol,
    state: PureState,
    bob_basis: Basis,
    base: usize,
) -> Result<JointDistribution> {
    let (decode_off, decode_basis, correction) = decode_step(protocol);
    let mut dist: JointDistribution = BTreeMap::new();
    for v in 0..2u8 {
        let Some((p1, rest)) = project_qubit(&state, base + decode_off, decode_basis, v)? else {
            continue;
        };
        // After removing the decode qubit the data qubit sits at `base`.
        let rest = if v == 1 { rest.apply(&correction, &[base])? } else { rest };
        for b in 0..2u8 {
            let Some((p2, eve_state)) = project_qubit(&rest, base, bob_basis, b)? else {
                continue;
            };
            let p = p1 * p2;
            if s.eve_measurement.is_empty() {
                *dist.entry((b, vec![])).or_insert(0.0) += p;
            } else {
                // Code qubits are gone; ancilla i is at index i.
                let plan: Vec<(usize, Basis)> = s.eve_measurement.clone();
                for (outcomes, pe) in outcome_distribution(&eve_state, &plan)? {
                    *dist.entry((b, outcomes)).or_insert(0.0) += p * pe;
                }
            }
        }
    }
    Ok(dist)
}

/// One (input, basis) comparison inside a reduction report.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionCase {
    pub input_basis: Basis,
    pub input_bit: u8,
    pub bob_basis: Basis,
    pub deviation: f64,
}

/// Outcome of the operational security-reduction check.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub equivalent: bool,
    pub max_deviation: f64,
    pub cases: Vec<ReductionCase>,
}

/// Checks the paper's reduction operationally for a probabilistic mixture of
/// attack schemes: for each BB84 input and Bob basis, the joint
/// (Bob, Eve) outcome distribution of the coded protocol under the attack
/// must equal that of BB84 under the wrapped attack within `tol`.
pub fn reduction_equivalence_check(
    components: &[(f64, AttackScheme)],
    protocol: Protocol,
    tol: f64,
) -> Result<ReductionReport> {
    if components.is_empty() {
        return Err(Error::Validation("no attack components".into()));
    }
    let weight: f64 = components.iter().map(|(w, _)| w).sum();
    if (weight - 1.0).abs() > 1e-9 || components.iter().any(|(w, _)| *w < 0.0) {
        return Err(Error::Validation("attack mixture weights must sum to 1".into()));
    }
    let mut cases = Vec::new();
    let mut max_dev: f64 = 0.0;
    for input in Bb84State::all() {
        for bob_basis in [Basis::Z, Basis::X] {
            let mut coded: JointDistribution = BTreeMap::new();
            let mut wrapped: JointDistribution = BTreeMap::new();
            for (w, s) in components {
                for (k, p) in coded_attack_distribution(s, protocol, input, bob_basis)? {
                    *coded.entry(k).or_insert(0.0) += w * p;
                }
                for (k, p) in wrapped_attack_distribution(s, protocol, input, bob_basis)? {
                    *wrapped.entry(k).or_insert(0.0) += w * p;
                }
            }
            let mut dev: f64 = 0.0;
            for key in coded.keys().chain(wrapped.keys()) {
                let a = coded.get(key).copied().unwrap_or(0.0);
                let b = wrapped.get(key).copied().unwrap_or(0.0);
                dev = dev.max((a - b).abs());
            }
            max_dev = max_dev.max(dev);
            cases.push(ReductionCase {
                input_basis: input.basis,
                input_bit: input.bit,
                bob_basis,
                deviation: dev,
            });
        }
    }
    Ok(ReductionReport { equivalent: max_dev <= tol, max_deviation: max_dev, cases })
}

/// Intercept-resend in a fixed basis, expressed as a coherent AttackScheme
/// with two Eve ancillas: the code outcomes are copied (in the measurement
/// bases) onto the ancillas and the code register is rewritten to the
/// re-encoded state. Measuring the ancillas in Z reproduces Eve's records.
pub fn intercept_resend_scheme(protocol: Protocol, basis: Basis) -> Result<AttackScheme> {
    // Register: q0 = data, q1 = ancilla, q2/q3 = Eve copies.
    let h = Gate::hadamard();
    let cnot = Gate::cnot();
    let ops: Vec<(Gate, Vec<usize>)> = match (protocol, basis) {
        (Protocol::P1, Basis::Z) => vec![
            (h.clone(), vec![1]),          // ancilla X outcome → Z register
            (cnot.clone(), vec![0, 2]),    // eve1 = data bit d
            (cnot.clone(), vec![1, 3]),    // eve2 = ancilla outcome a
            (cnot.clone(), vec![3, 1]),    // ancilla := 0
            (cnot.clone(), vec![0, 1]),    // ancilla := d
            (Gate::sigma_x(), vec![1]),    // ancilla := ¬d  → code |d,¬d⟩
        ],
        (Protocol::P1, Basis::X) => vec![
            (h.clone(), vec![0]),
            (h.clone(), vec![1]),
            (cnot.clone(), vec![0, 2]),    // eve1 = data X outcome
            (cnot.clone(), vec![1, 3]),    // eve2 = ancilla X outcome
            (cnot.clone(), vec![1, 0]),    // data := bit b = d ⊕ a
            (cnot.clone(), vec![3, 1]),    // ancilla := 0
            (h.clone(), vec![0]),          // data := |b_x⟩
            (codecs::encoding_gate_p1(), vec![0, 1]),
        ],
        (Protocol::P2, Basis::Z) => vec![
            (cnot.clone(), vec![0, 2]),    // eve1 = qubit-1 Z outcome
            (cnot.clone(), vec![1, 3]),    // eve2 = qubit-2 Z outcome
            (cnot.clone(), vec![1, 0]),    // data := bit b = z ⊕ m
            (cnot.clone(), vec![3, 1]),    // ancilla := 0
            (codecs::encoding_gate_p2(), vec![0, 1]),
        ],
        (Protocol::P2, Basis::X) => vec![
            (h.clone(), vec![1]),
            (cnot.clone(), vec![0, 2]),
            (cnot.clone(), vec![1, 3]),
            (cnot.clone(), vec![1, 0]),
            (cnot.clone(), vec![3, 1]),
            (h.clone(), vec![0]),
            (codecs::encoding_gate_p2(), vec![0, 1]),
        ],
    };
    let unitary = Gate::compose(4, &ops)?;
    AttackScheme::new(2, unitary, vec![(0, Basis::Z), (1, Basis::Z)])
}

/// Equal-weight mixture of intercept-resend-Z and intercept-resend-X.
pub fn intercept_resend_random_mix(protocol: Protocol) -> Result<Vec<(f64, AttackScheme)>> {
    Ok(vec![
        (0.5, intercept_resend_scheme(protocol, Basis::Z)?),
        (0.5, intercept_resend_scheme(protocol, Basis::X)?),
    ])
}

/// Haar-ish random 2-qubit unitary attack on the code (Gram-Schmidt on a
/// random complex Gaussian matrix), no ancillas.
pub fn random_unitary_attack(rng: &mut impl Rng) -> AttackScheme {
    let dim = 4;
    // Box-Muller standard normals.
    let normal = |rng: &mut dyn rand::RngCore| -> f64 {
        let u1: f64 = rng.gen::<f64>().max(1e-300);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let mut cols: Vec<Vec<Complex64>> = (0..dim)
        .map(|_| (0..dim).map(|_| Complex64::new(normal(rng), normal(rng))).collect())
        .collect();
    for i in 0..dim {
        for j in 0..i {
            let (head, tail) = cols.split_at_mut(i);
            let (col_j, col_i) = (&head[j], &mut tail[0]);
            let proj: Complex64 =
                col_j.iter().zip(col_i.iter()).map(|(a, b)| a.conj() * b).sum();
            for (b, a) in col_i.iter_mut().zip(col_j.iter()) {
                *b -= proj * a;
            }
        }
        let norm: f64 = cols[i].iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut cols[i] {
            *a /= norm;
        }
    }
    let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
    for (c, col) in cols.iter().enumerate() {
        for (r, &v) in col.iter().enumerate() {
            m[r * dim + c] = v;
        }
    }
    AttackScheme::new(0, Gate::new(dim, m).expect("orthonormalized matrix is unitary"), vec![])
        .unwrap()
}

/// Exact single-qubit bit distribution Bob sees behind a wrapped attack
/// (marginal of the joint distribution over Eve outcomes).
pub fn wrapped_bob_distribution(
    s: &AttackScheme,
    protocol: Protocol,
    input: Bb84State,
    bob_basis: Basis,
) -> Result<BTreeMap<u8, f64>> {
    let joint = wrapped_attack_distribution(s, protocol, input, bob_basis)?;
    let mut out = BTreeMap::from([(0u8, 0.0), (1u8, 0.0)]);
    for ((b, _), p) in joint {
        *out.get_mut(&b).unwrap() += p;
    }
    Ok(out)
}

/// Checks that the Fig. 2 blocking attack leaves survivor statistics
/// untouched: conditional on survival, Bob's outcome distribution equals
/// the no-Eve distribution.
pub fn blocking_attack_survivor_fidelity(input: Bb84State) -> Result<bool> {
    // Survivors carry the decoded qubit; both ancilla branches must give
    // back the exact BB84 state.
    let code = codecs::encode_p1(input).state;
    for v in 0..2u8 {
        let Some((_, mut data)) = project_qubit(&code, 1, Basis::X, v)? else {
            return Ok(false);
        };
        if v == 1 {
            data = data.apply(&Gate::sigma_z(), &[0])?;
        }
        if !global_phase_equal(&data, &input.state(), TOL) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn capacity_enforced() {
        assert!(matches!(
            AttackScheme::new(3, Gate::identity(4), vec![]),
            Err(Error::Capacity(_))
        ));
        assert!(AttackScheme::new(1, Gate::identity(4), vec![]).is_err()); // dim mismatch
    }

    #[test]
    fn intercept_resend_matched_basis_is_silent() {
        // |01⟩ attacked in Z: Eve reads 0 and resends |01⟩.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let code = codecs::encode_p1(Bb84State::new(Basis::Z, 0)).state;
        for _ in 0..20 {
            let out = intercept_resend_code(
                &code,
                Protocol::P1,
                InterceptResendStrategy::FixedZ,
                &mut rng,
            )
            .unwrap();
            assert_eq!(out.eve_bits, vec![0]);
            let resent = out.resent_state.unwrap();
            let d = codecs::active_bit_distribution(Protocol::P1, &resent, Basis::Z).unwrap();
            assert!((d[&0] - 1.0).abs() < TOL);
        }
    }

    #[test]
    fn intercept_resend_mismatched_basis_errors() {
        // X code attacked in Z: resent |01⟩ or |10⟩ equiprobably; Bob's
        // X-basis error probability is 1/2 (exact, averaged over Eve draws).
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let code = codecs::encode_p1(Bb84State::new(Basis::X, 0)).state;
        let mut err = 0.0;
        let trials = 2_000;
        for _ in 0..trials {
            let out = intercept_resend_code(
                &code,
                Protocol::P1,
                InterceptResendStrategy::FixedZ,
                &mut rng,
            )
            .unwrap();
            let d = codecs::active_bit_distribution(
                Protocol::P1,
                &out.resent_state.unwrap(),
                Basis::X,
            )
            .unwrap();
            err += d[&1];
        }
        let rate = err / trials as f64;
        assert!((rate - 0.5).abs() < 0.05, "error rate {rate}");
    }

    /// Sifted error rate of random-basis intercept-resend, by exhaustive
    /// enumeration over code states, Eve bases, and Eve outcomes.
    #[test]
    fn random_basis_sifted_error_is_one_quarter() {
        for protocol in [Protocol::P1, Protocol::P2] {
            let mut error = 0.0;
            let mut weight = 0.0;
            for s in Bb84State::all() {
                let code = codecs::encode(protocol, s).state;
                for eve_basis in [Basis::Z, Basis::X] {
                    // Eve's passive-decode bit distribution.
                    let eve_dist =
                        codecs::passive_bit_distribution(protocol, &code, eve_basis, false)
                            .unwrap();
                    for (eve_bit, pe) in eve_dist {
                        if pe == 0.0 {
                            continue;
                        }
                        let resent =
                            codecs::encode(protocol, Bb84State::new(eve_basis, eve_bit)).state;
                        // Bob measures in Alice's basis (sifted rounds only).
                        let bob =
                            codecs::active_bit_distribution(protocol, &resent, s.basis).unwrap();
                        let p_err = bob[&(1 - s.bit)];
                        // Eve basis choice weight 1/2, inputs weight 1/4.
                        error += 0.125 * pe * p_err;
                        weight += 0.125 * pe;
                    }
                }
            }
            assert!((weight - 1.0).abs() < TOL);
            assert!((error - 0.25).abs() < TOL, "{protocol:?} sifted error {error}");
        }
    }

    #[test]
    fn identity_attack_reduces_exactly() {
        for protocol in [Protocol::P1, Protocol::P2] {
            let report =
                reduction_equivalence_check(&[(1.0, AttackScheme::identity())], protocol, TOL)
                    .unwrap();
            assert!(report.equivalent);
            assert!(report.max_deviation < TOL);
        }
    }

    #[test]
    fn wrapped_identity_is_identity_channel() {
        for protocol in [Protocol::P1, Protocol::P2] {
            for input in Bb84State::all() {
                let d = wrapped_bob_distribution(
                    &AttackScheme::identity(),
                    protocol,
                    input,
                    input.basis,
                )
                .unwrap();
                assert!((d[&input.bit] - 1.0).abs() < TOL);
            }
        }
    }

    /// σ_z on the data qubit acts as σ_z on the wrapped single qubit:
    /// |+⟩ flips to |−⟩, Z inputs pass through.
    #[test]
    fn wrapped_sigma_z_on_data_flips_x_states() {
        let attack = AttackScheme::new(
            0,
            Gate::compose(2, &[(Gate::sigma_z(), vec![0])]).unwrap(),
            vec![],
        )
        .unwrap();
        let d = wrapped_bob_distribution(
            &attack,
            Protocol::P1,
            Bb84State::new(Basis::X, 0),
            Basis::X,
        )
        .unwrap();
        assert!((d[&1] - 1.0).abs() < TOL, "expected |+⟩ → |−⟩, got {d:?}");
        let d = wrapped_bob_distribution(
            &attack,
            Protocol::P1,
            Bb84State::new(Basis::Z, 1),
            Basis::Z,
        )
        .unwrap();
        assert!((d[&1] - 1.0).abs() < TOL);
    }

    /// σ_z⊗σ_z multiplies the whole Protocol 1 code space by −1, so the
    /// wrapped attack is the identity channel (tabulated via the oracle).
    #[test]
    fn wrapped_sigma_z_pair_is_global_phase() {
        let attack = AttackScheme::new(
            0,
            Gate::compose(2, &[(Gate::sigma_z(), vec![0]), (Gate::sigma_z(), vec![1])]).unwrap(),
            vec![],
        )
        .unwrap();
        for input in Bb84State::all() {
            let d =
                wrapped_bob_distribution(&attack, Protocol::P1, input, input.basis).unwrap();
            assert!((d[&input.bit] - 1.0).abs() < TOL, "{input:?}: {d:?}");
        }
    }

    #[test]
    fn intercept_resend_schemes_reduce_exactly() {
        for protocol in [Protocol::P1, Protocol::P2] {
            for basis in [Basis::Z, Basis::X] {
                let s = intercept_resend_scheme(protocol, basis).unwrap();
                let report = reduction_equivalence_check(&[(1.0, s)], protocol, TOL).unwrap();
                assert!(
                    report.equivalent,
                    "{protocol:?}/{basis:?} deviation {}",
                    report.max_deviation
                );
            }
            let mix = intercept_resend_random_mix(protocol).unwrap();
            let report = reduction_equivalence_check(&mix, protocol, TOL).unwrap();
            assert!(report.equivalent);
        }
    }

    /// The intercept-resend scheme's effect on Bob matches the sampling
    /// implementation: matched basis error 0 on Z codes, 1/2 on X codes.
    #[test]
    fn coherent_intercept_resend_matches_direct_statistics() {
        let s = intercept_resend_scheme(Protocol::P1, Basis::Z).unwrap();
        let joint =
            coded_attack_distribution(&s, Protocol::P1, Bb84State::new(Basis::Z, 0), Basis::Z)
                .unwrap();
        let mut bob0 = 0.0;
        for ((b, _), p) in &joint {
            if *b == 0 {
                bob0 += p;
            }
        }
        assert!((bob0 - 1.0).abs() < TOL);

        let joint = coded_attack_distribution(&s, Protocol::P1, Bb84State::new(Basis::X, 0), Basis::X)
            .unwrap();
        let mut bob1 = 0.0;
        for ((b, _), p) in &joint {
            if *b == 1 {
                bob1 += p;
            }
        }
        assert!((bob1 - 0.5).abs() < TOL, "X-basis error {bob1}");
    }

    #[test]
    fn random_unitary_attacks_reduce_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for protocol in [Protocol::P1, Protocol::P2] {
            for _ in 0..10 {
                let s = random_unitary_attack(&mut rng);
                let report = reduction_equivalence_check(&[(1.0, s)], protocol, TOL).unwrap();
                assert!(
                    report.equivalent,
                    "{protocol:?} random attack deviation {}",
                    report.max_deviation
                );
            }
        }
    }

    #[test]
    fn blocking_attack_loss_rate_and_fidelity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let trials = 100_000usize;
        let mut lost = 0usize;
        let input = Bb84State::new(Basis::X, 1);
        let code = codecs::encode_p1(input).state;
        for _ in 0..trials {
            let out = fig2_blocking_attack(&code, &mut rng).unwrap();
            match out.resent_state {
                None => lost += 1,
                Some(q) => assert!(global_phase_equal(&q, &input.state(), TOL)),
            }
        }
        let rate = lost as f64 / trials as f64;
        let band = 3.0 * (0.75 * 0.25 / trials as f64).sqrt();
        assert!((rate - 0.75).abs() < band, "loss rate {rate}");
        for s in Bb84State::all() {
            assert!(blocking_attack_survivor_fidelity(s).unwrap());
        }
    }

    #[test]
    fn wrapped_apply_sampling_matches_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let s = intercept_resend_scheme(Protocol::P1, Basis::Z).unwrap();
        let wrapped = wrap_attack(&s, Protocol::P1).unwrap();
        let input = Bb84State::new(Basis::X, 0);
        let trials = 20_000usize;
        let mut bob_ones = 0usize;
        for _ in 0..trials {
            let (fwd, _) = wrapped.apply(&input.state(), &mut rng).unwrap();
            let m = measure_qubit(&fwd, 0, Basis::X, rng.gen()).unwrap();
            bob_ones += m.value as usize;
        }
        let expect = wrapped_bob_distribution(&s, Protocol::P1, input, Basis::X).unwrap()[&1];
        let p = bob_ones as f64 / trials as f64;
        let se = (expect * (1.0 - expect) / trials as f64).sqrt();
        assert!((p - expect).abs() < 4.0 * se, "{p} vs {expect}");
    }
}

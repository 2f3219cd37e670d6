//! Encoding and decoding maps of the two DFS protocols.
//!
//! Protocol 1 codes live in span{|01⟩, |10⟩} (dephasing-free); Protocol 2
//! codes in span{|φ⁺⟩, |ψ⁻⟩} (rotation-free). The data qubit is index 0
//! (left ket symbol), the ancilla index 1 (right). Decoders address those
//! roles, not raw positions.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::quantum::{
    measure_qubit, outcome_distribution, project_qubit, Basis, Gate, PureState, QubitRole,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Protocol {
    P1,
    P2,
}

impl TryFrom<u8> for Protocol {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Protocol::P1),
            2 => Ok(Protocol::P2),
            other => Err(format!("protocol must be 1 or 2, got {other}")),
        }
    }
}

impl From<Protocol> for u8 {
    fn from(p: Protocol) -> u8 {
        match p {
            Protocol::P1 => 1,
            Protocol::P2 => 2,
        }
    }
}

/// One of the four BB84 states (Z: 0↔|0⟩, 1↔|1⟩; X: 0↔|+⟩, 1↔|−⟩).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Bb84State {
    pub basis: Basis,
    pub bit: u8,
}

impl Bb84State {
    pub fn new(basis: Basis, bit: u8) -> Self {
        debug_assert!(bit <= 1);
        Self { basis, bit }
    }

    /// All four BB84 states, for exhaustive enumeration.
    pub fn all() -> [Bb84State; 4] {
        [
            Bb84State::new(Basis::Z, 0),
            Bb84State::new(Basis::Z, 1),
            Bb84State::new(Basis::X, 0),
            Bb84State::new(Basis::X, 1),
        ]
    }

    /// The single-qubit state vector.
    pub fn state(&self) -> PureState {
        match (self.basis, self.bit) {
            (Basis::Z, 0) => PureState::zero(),
            (Basis::Z, _) => PureState::one(),
            (Basis::X, 0) => PureState::plus(),
            (Basis::X, _) => PureState::minus(),
        }
    }
}

/// Alice's per-code bookkeeping.
#[derive(Debug, Clone)]
pub struct CodeRecord {
    pub protocol: Protocol,
    pub prep_basis: Basis,
    pub bit: u8,
    pub state: PureState,
}

/// A detector click: which detector fired, in which discrete time slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Click {
    pub detector: u8,
    pub time_slot: u8,
}

/// Bob's per-code outcome.
#[derive(Debug, Clone, Serialize)]
pub struct DetectionEvent {
    pub accepted: bool,
    pub declared_basis: Option<Basis>,
    pub bit: Option<u8>,
    pub clicks: Vec<Click>,
}

impl DetectionEvent {
    pub fn accepted(basis: Basis, bit: u8, clicks: Vec<Click>) -> Self {
        Self { accepted: true, declared_basis: Some(basis), bit: Some(bit), clicks }
    }

    pub fn discarded(clicks: Vec<Click>) -> Self {
        Self { accepted: false, declared_basis: None, bit: None, clicks }
    }
}

fn code_roles() -> Vec<QubitRole> {
    vec![QubitRole::Data, QubitRole::Ancilla]
}

/// Superposition (|01⟩ + sign·|10⟩)/√2.
fn p1_x_code(sign: f64) -> PureState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = Complex64::new(0.0, 0.0);
    PureState::new(
        vec![z, Complex64::new(h, 0.0), Complex64::new(sign * h, 0.0), z],
        code_roles(),
    )
    .unwrap()
}

/// Superposition (|φ⁺⟩ + sign·|ψ⁻⟩)/√2 = (|0⟩|±⟩ + |1⟩|∓⟩)/√2.
fn p2_x_code(sign: f64) -> PureState {
    let half = 0.5;
    PureState::new(
        vec![
            Complex64::new(half, 0.0),
            Complex64::new(sign * half, 0.0),
            Complex64::new(-sign * half, 0.0),
            Complex64::new(half, 0.0),
        ],
        code_roles(),
    )
    .unwrap()
}

/// Protocol 1 encoding: |0⟩ ↦ |01⟩, |1⟩ ↦ |10⟩, extended linearly.
pub fn encode_p1(input: Bb84State) -> CodeRecord {
    let state = match (input.basis, input.bit) {
        (Basis::Z, 0) => PureState::basis_state(&[0, 1], code_roles()).unwrap(),
        (Basis::Z, _) => PureState::basis_state(&[1, 0], code_roles()).unwrap(),
        (Basis::X, 0) => p1_x_code(1.0),
        (Basis::X, _) => p1_x_code(-1.0),
    };
    CodeRecord { protocol: Protocol::P1, prep_basis: input.basis, bit: input.bit, state }
}

/// Protocol 2 encoding: |0⟩ ↦ |φ⁺⟩, |1⟩ ↦ |ψ⁻⟩, hence |±⟩ ↦ (|φ⁺⟩±|ψ⁻⟩)/√2.
pub fn encode_p2(input: Bb84State) -> CodeRecord {
    let state = match (input.basis, input.bit) {
        (Basis::Z, 0) => PureState::phi_plus(),
        (Basis::Z, _) => PureState::psi_minus(),
        (Basis::X, 0) => p2_x_code(1.0),
        (Basis::X, _) => p2_x_code(-1.0),
    };
    CodeRecord { protocol: Protocol::P2, prep_basis: input.basis, bit: input.bit, state }
}

pub fn encode(protocol: Protocol, input: Bb84State) -> CodeRecord {
    match protocol {
        Protocol::P1 => encode_p1(input),
        Protocol::P2 => encode_p2(input),
    }
}

/// The Protocol 1 encoding as a 2-qubit unitary on (data, ancilla-in-|0⟩).
pub fn encoding_gate_p1() -> Gate {
    let o = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    // |00⟩→|01⟩, |01⟩→|00⟩, |10⟩→|10⟩, |11⟩→|11⟩.
    Gate::new(
        4,
        vec![
            z, o, z, z, //
            o, z, z, z, //
            z, z, o, z, //
            z, z, z, o,
        ],
    )
    .unwrap()
}

/// The Protocol 2 encoding as a 2-qubit unitary on (data, ancilla-in-|0⟩).
pub fn encoding_gate_p2() -> Gate {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let z = Complex64::new(0.0, 0.0);
    // |00⟩→(|00⟩+|11⟩)/√2, |10⟩→(|01⟩−|10⟩)/√2; the |·1⟩ columns complete
    // the unitary with the orthogonal Bell combinations.
    Gate::new(
        4,
        vec![
            h, h, z, z, //
            z, z, h, h, //
            z, z, -h, h, //
            h, -h, z, z,
        ],
    )
    .unwrap()
}

pub fn encoding_gate(protocol: Protocol) -> Gate {
    match protocol {
        Protocol::P1 => encoding_gate_p1(),
        Protocol::P2 => encoding_gate_p2(),
    }
}

/// Bit-value rule of the Protocol 1 passive decoder: (ancilla X outcome,
/// data outcome) → bit.
pub fn eq2_bit(ancilla_x: u8, data: u8, meas_basis: Basis) -> u8 {
    match meas_basis {
        Basis::Z => data,
        Basis::X => ancilla_x ^ data,
    }
}

/// Bit-value rule of the Protocol 2 passive decoder: (Z outcome, other
/// outcome) → bit. The same XOR holds for both measurement bases.
pub fn eq5_bit(z_outcome: u8, other: u8) -> u8 {
    z_outcome ^ other
}

/// Protocol 1 active decoder: measure the ancilla in X, apply σ_z to the
/// data on outcome |−⟩, then measure the data in `meas_basis`.
pub fn decode_p1_active(
    state: &PureState,
    meas_basis: Basis,
    rng: &mut impl Rng,
) -> Result<DetectionEvent> {
    let m1 = measure_qubit(state, 1, Basis::X, rng.gen())?;
    let mut data = m1.post_state;
    if m1.value == 1 {
        data = data.apply(&Gate::sigma_z(), &[0])?;
    }
    let m2 = measure_qubit(&data, 0, meas_basis, rng.gen())?;
    Ok(DetectionEvent::accepted(meas_basis, m2.value, vec![]))
}

/// Protocol 1 passive decoder: independent measurements, bit from the
/// joint-outcome table.
pub fn decode_p1_passive(
    state: &PureState,
    meas_basis: Basis,
    rng: &mut impl Rng,
) -> Result<DetectionEvent> {
    let m1 = measure_qubit(state, 1, Basis::X, rng.gen())?;
    let m2 = measure_qubit(&m1.post_state, 0, meas_basis, rng.gen())?;
    Ok(DetectionEvent::accepted(meas_basis, eq2_bit(m1.value, m2.value, meas_basis), vec![]))
}

/// Protocol 1 probabilistic detector: both photons share one line and are
/// each routed 50:50; the code is kept only when the ancilla photon reaches
/// the X analyzer and the data photon the basis-selection analyzer, giving
/// an acceptance probability of exactly 1/4.
///
/// Accepted coincidences are labeled (D1,D2) when the basis analyzer was
/// read in Z and (D1,D3) when read in X. The wiring of discarded events is
/// not modeled, so their click list is empty.
pub fn decode_p1_fig2(state: &PureState, rng: &mut impl Rng) -> Result<DetectionEvent> {
    let ancilla_to_x = rng.gen_bool(0.5);
    let data_to_basis = rng.gen_bool(0.5);
    if !(ancilla_to_x && data_to_basis) {
        return Ok(DetectionEvent::discarded(vec![]));
    }
    let meas_basis = if rng.gen_bool(0.5) { Basis::Z } else { Basis::X };
    let m1 = measure_qubit(state, 1, Basis::X, rng.gen())?;
    let m2 = measure_qubit(&m1.post_state, 0, meas_basis, rng.gen())?;
    let basis_detector = match meas_basis {
        Basis::Z => 2,
        Basis::X => 3,
    };
    let clicks = vec![
        Click { detector: 1, time_slot: 0 },
        Click { detector: basis_detector, time_slot: 0 },
    ];
    Ok(DetectionEvent::accepted(meas_basis, eq2_bit(m1.value, m2.value, meas_basis), clicks))
}

/// Protocol 2 active decoder: measure qubit 0 in Z, apply Σ to the other
/// qubit on outcome |1⟩, then measure it in `meas_basis`.
pub fn decode_p2_active(
    state: &PureState,
    meas_basis: Basis,
    rng: &mut impl Rng,
) -> Result<DetectionEvent> {
    let m1 = measure_qubit(state, 0, Basis::Z, rng.gen())?;
    let mut rest = m1.post_state;
    if m1.value == 1 {
        rest = rest.apply(&Gate::sigma_cap(), &[0])?;
    }
    let m2 = measure_qubit(&rest, 0, meas_basis, rng.gen())?;
    Ok(DetectionEvent::accepted(meas_basis, m2.value, vec![]))
}

/// X-basis correction when Bob's Z analyzer caught the second qubit: the
/// singlet component is antisymmetric, so exchanging the qubits maps the two
/// X-basis codewords into each other and the raw XOR readout comes out
/// flipped. Z-basis codewords are exchange-symmetric and need no correction.
pub fn exchange_correction(meas_basis: Basis) -> u8 {
    match meas_basis {
        Basis::Z => 0,
        Basis::X => 1,
    }
}

/// Protocol 2 passive decoder: measure qubit 0 in Z and qubit 1 in
/// `meas_basis`; bit from the joint table. With `swap` Bob takes the second
/// qubit as "qubit 1" and compensates X-basis bits (see
/// [`exchange_correction`]).
pub fn decode_p2_passive(
    state: &PureState,
    meas_basis: Basis,
    rng: &mut impl Rng,
    swap: bool,
) -> Result<DetectionEvent> {
    let mut state = state.clone();
    if swap {
        state = state.apply(&Gate::swap(), &[0, 1])?;
    }
    let m1 = measure_qubit(&state, 0, Basis::Z, rng.gen())?;
    let m2 = measure_qubit(&m1.post_state, 0, meas_basis, rng.gen())?;
    let mut bit = eq5_bit(m1.value, m2.value);
    if swap {
        bit ^= exchange_correction(meas_basis);
    }
    Ok(DetectionEvent::accepted(meas_basis, bit, vec![]))
}

/// Protocol 2 detector filter: each photon is routed 50:50 to a Z analyzer
/// (D1=|0⟩, D3=|1⟩) or an X analyzer (D2=|+⟩, D4=|−⟩). Any 2-fold click
/// containing D1 or D3 is kept (same-detector double clicks occupy distinct
/// time slots); events with neither are discarded.
pub fn decode_p2_fig3(state: &PureState, rng: &mut impl Rng) -> Result<DetectionEvent> {
    let routing = [rng.gen_bool(0.5), rng.gen_bool(0.5)]; // true = Z analyzer
    let bases = [
        if routing[0] { Basis::Z } else { Basis::X },
        if routing[1] { Basis::Z } else { Basis::X },
    ];
    // Measure photon 1 first so photon 0's index stays stable.
    let m1 = measure_qubit(state, 1, bases[1], rng.gen())?;
    let m0 = measure_qubit(&m1.post_state, 0, bases[0], rng.gen())?;
    let outcomes = [m0.value, m1.value];
    let detector = |is_z: bool, v: u8| -> u8 {
        match (is_z, v) {
            (true, 0) => 1,
            (true, _) => 3,
            (false, 0) => 2,
            (false, _) => 4,
        }
    };
    let clicks = vec![
        Click { detector: detector(routing[0], outcomes[0]), time_slot: 0 },
        Click { detector: detector(routing[1], outcomes[1]), time_slot: 1 },
    ];
    match (routing[0], routing[1]) {
        (false, false) => Ok(DetectionEvent::discarded(clicks)),
        (true, true) => {
            Ok(DetectionEvent::accepted(Basis::Z, eq5_bit(outcomes[0], outcomes[1]), clicks))
        }
        (z0, _) => {
            let (z, x) = if z0 { (outcomes[0], outcomes[1]) } else { (outcomes[1], outcomes[0]) };
            // When the Z analyzer caught the second photon the qubits are
            // effectively exchanged and the X readout needs compensating.
            let bit = eq5_bit(z, x) ^ if z0 { 0 } else { exchange_correction(Basis::X) };
            Ok(DetectionEvent::accepted(Basis::X, bit, clicks))
        }
    }
}

/// Exact bit distribution of the active decoder on an arbitrary 2-qubit
/// state, computed by branch enumeration (the sampling decoders' oracle).
pub fn active_bit_distribution(
    protocol: Protocol,
    state: &PureState,
    meas_basis: Basis,
) -> Result<BTreeMap<u8, f64>> {
    if state.num_qubits() != 2 {
        return Err(Error::Validation("decoder requires a 2-qubit state".into()));
    }
    let (first_idx, first_basis, correction) = match protocol {
        Protocol::P1 => (1usize, Basis::X, Gate::sigma_z()),
        Protocol::P2 => (0usize, Basis::Z, Gate::sigma_cap()),
    };
    let mut dist = BTreeMap::from([(0u8, 0.0), (1u8, 0.0)]);
    for v in 0..2u8 {
        let Some((p1, rest)) = project_qubit(state, first_idx, first_basis, v)? else {
            continue;
        };
        let rest = if v == 1 { rest.apply(&correction, &[0])? } else { rest };
        for b in 0..2u8 {
            if let Some((p2, _)) = project_qubit(&rest, 0, meas_basis, b)? {
                *dist.get_mut(&b).unwrap() += p1 * p2;
            }
        }
    }
    Ok(dist)
}

/// Exact bit distribution of the passive decoder (joint-outcome table).
pub fn passive_bit_distribution(
    protocol: Protocol,
    state: &PureState,
    meas_basis: Basis,
    swap: bool,
) -> Result<BTreeMap<u8, f64>> {
    if state.num_qubits() != 2 {
        return Err(Error::Validation("decoder requires a 2-qubit state".into()));
    }
    let mut state = state.clone();
    if swap {
        state = state.apply(&Gate::swap(), &[0, 1])?;
    }
    let plan = match protocol {
        Protocol::P1 => [(1usize, Basis::X), (0usize, meas_basis)],
        Protocol::P2 => [(0usize, Basis::Z), (1usize, meas_basis)],
    };
    let joint = outcome_distribution(&state, &plan)?;
    let mut dist = BTreeMap::from([(0u8, 0.0), (1u8, 0.0)]);
    for (outcomes, p) in joint {
        let mut bit = match protocol {
            Protocol::P1 => eq2_bit(outcomes[0], outcomes[1], meas_basis),
            Protocol::P2 => eq5_bit(outcomes[0], outcomes[1]),
        };
        if swap && protocol == Protocol::P2 {
            bit ^= exchange_correction(meas_basis);
        }
        *dist.get_mut(&bit).unwrap() += p;
    }
    Ok(dist)
}

//! Full protocol runs: code generation, channel, optional eavesdropper,
//! decoding, sifting, error estimation, and key distillation, driven by one
//! master seed split into fixed per-role streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{fig2_blocking_attack, intercept_resend_code, InterceptResendStrategy};
use crate::channels::{apply_draw, sample_channel, ChannelConfig, ChannelDraw};
use crate::codecs::{
    decode_p1_active, decode_p1_fig2, decode_p1_passive, decode_p2_active, decode_p2_fig3,
    decode_p2_passive, encode, Bb84State, CodeRecord, DetectionEvent, Protocol,
};
use crate::postprocessing::{
    css_distill, estimate_and_decide, key_rate_estimate, select_check_bits, sift, CheckBitReport,
    CssCodePair, Decision, SiftedKey,
};
use crate::quantum::{measure_qubit, tensor, Basis, PureState};
use crate::{Error, Result};

const ROLE_ALICE: u64 = 0;
const ROLE_BOB: u64 = 1;
const ROLE_EVE: u64 = 2;
const ROLE_CHANNEL: u64 = 3;

fn role_rng(seed: u64, role: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(role);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderKind {
    #[default]
    Active,
    Passive,
    DetectorModel,
}

impl std::fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DecoderKind::Active => write!(f, "active"),
            DecoderKind::Passive => write!(f, "passive"),
            DecoderKind::DetectorModel => write!(f, "detector-model"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackConfig {
    #[default]
    None,
    InterceptZ,
    InterceptX,
    InterceptRandom,
    Fig2Blocking,
}

impl AttackConfig {
    fn intercept_strategy(&self) -> Option<InterceptResendStrategy> {
        match self {
            AttackConfig::InterceptZ => Some(InterceptResendStrategy::FixedZ),
            AttackConfig::InterceptX => Some(InterceptResendStrategy::FixedX),
            AttackConfig::InterceptRandom => Some(InterceptResendStrategy::Random),
            _ => None,
        }
    }
}

impl std::fmt::Display for AttackConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AttackConfig::None => write!(f, "none"),
            AttackConfig::InterceptZ => write!(f, "intercept-z"),
            AttackConfig::InterceptX => write!(f, "intercept-x"),
            AttackConfig::InterceptRandom => write!(f, "intercept-random"),
            AttackConfig::Fig2Blocking => write!(f, "fig2-blocking"),
        }
    }
}

fn default_delta_pad() -> f64 {
    0.5
}

fn default_threshold() -> f64 {
    0.11
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub protocol: Protocol,
    pub n: usize,
    #[serde(default = "default_delta_pad")]
    pub delta_pad: f64,
    #[serde(default = "ChannelConfig::identity")]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub decoder: DecoderKind,
    #[serde(default)]
    pub attack: AttackConfig,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "CssCodePair::hamming_default")]
    pub css: CssCodePair,
    #[serde(default)]
    pub seed: u64,
}

impl SessionConfig {
    pub fn new(protocol: Protocol, n: usize) -> Self {
        Self {
            protocol,
            n,
            delta_pad: default_delta_pad(),
            channel: ChannelConfig::identity(),
            decoder: DecoderKind::default(),
            attack: AttackConfig::default(),
            threshold: default_threshold(),
            css: CssCodePair::hamming_default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Validation("n must be positive".into()));
        }
        if self.n < self.css.n {
            return Err(Error::Validation(format!(
                "n = {} is shorter than one {}-bit distillation block",
                self.n, self.css.n
            )));
        }
        if !self.delta_pad.is_finite() || self.delta_pad < 0.0 {
            return Err(Error::Validation("delta_pad must be a finite value ≥ 0".into()));
        }
        if !self.threshold.is_finite() || self.threshold <= 0.0 || self.threshold >= 1.0 {
            return Err(Error::Validation("threshold must lie in (0,1)".into()));
        }
        if !(0.0..1.0).contains(&self.channel.loss_prob) {
            return Err(Error::Validation("loss_prob must lie in [0,1)".into()));
        }
        Ok(())
    }

    /// Number of codes Alice creates: (4 + δ)·n, rounded.
    pub fn codes_sent(&self) -> usize {
        ((4.0 + self.delta_pad) * self.n as f64).round() as usize
    }
}

/// One transmission as recorded in the transcript.
#[derive(Debug, Clone, Serialize)]
pub struct CodeRow {
    pub index: usize,
    pub prep_basis: Basis,
    pub prep_bit: u8,
    pub draw: ChannelDraw,
    /// Lost in the channel or blocked by Eve; Bob saw nothing.
    pub lost: bool,
    pub eve_bits: Vec<u8>,
    pub event: DetectionEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub codes_sent: usize,
    pub lost: usize,
    pub accepted: usize,
    pub sifted: usize,
    pub check_bits: usize,
    pub check_errors: usize,
    pub error_rate: Option<f64>,
    pub aborted: bool,
    pub abort_reason: Option<String>,
    pub key_bits: usize,
    pub key_rate: f64,
    pub uncorrectable_blocks: usize,
    pub sift_fraction: f64,
    pub accept_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionTranscript {
    pub config: SessionConfig,
    pub rows: Vec<CodeRow>,
    pub alice_sifted: SiftedKey,
    pub bob_sifted: SiftedKey,
    pub check_report: Option<CheckBitReport>,
    pub alice_key: Vec<u8>,
    pub bob_key: Vec<u8>,
    pub stats: SummaryStats,
}

impl SessionTranscript {
    /// Rebuilds the summary from the per-code records; must equal `stats`.
    pub fn recompute_stats(&self) -> SummaryStats {
        let codes_sent = self.rows.len();
        let lost = self.rows.iter().filter(|r| r.lost).count();
        let accepted = self.rows.iter().filter(|r| r.event.accepted).count();
        let sifted = self.alice_sifted.len();
        let (check_bits, check_errors, error_rate) = match &self.check_report {
            Some(rep) => {
                let errs = rep
                    .alice_bits
                    .iter()
                    .zip(&rep.bob_bits)
                    .filter(|(a, b)| a != b)
                    .count();
                (rep.alice_bits.len(), errs, Some(rep.error_rate))
            }
            None => (0, 0, None),
        };
        let key_rate = match (self.stats.aborted, error_rate) {
            (false, Some(e)) => key_rate_estimate(e),
            _ => 0.0,
        };
        SummaryStats {
            codes_sent,
            lost,
            accepted,
            sifted,
            check_bits,
            check_errors,
            error_rate,
            aborted: self.stats.aborted,
            abort_reason: self.stats.abort_reason.clone(),
            key_bits: self.alice_key.len(),
            key_rate,
            uncorrectable_blocks: self.stats.uncorrectable_blocks,
            sift_fraction: sifted as f64 / codes_sent as f64,
            accept_fraction: accepted as f64 / codes_sent as f64,
        }
    }
}

fn draw_basis(rng: &mut impl Rng) -> Basis {
    if rng.gen_bool(0.5) {
        Basis::Z
    } else {
        Basis::X
    }
}

struct Rngs {
    alice: ChaCha8Rng,
    bob: ChaCha8Rng,
    eve: ChaCha8Rng,
    channel: ChaCha8Rng,
}

impl Rngs {
    fn for_seed(seed: u64) -> Self {
        Self {
            alice: role_rng(seed, ROLE_ALICE),
            bob: role_rng(seed, ROLE_BOB),
            eve: role_rng(seed, ROLE_EVE),
            channel: role_rng(seed, ROLE_CHANNEL),
        }
    }
}

/// Runs steps 1–8 of the configured two-qubit protocol.
pub fn run_session(config: &SessionConfig) -> Result<SessionTranscript> {
    config.validate()?;
    if config.attack == AttackConfig::Fig2Blocking {
        return Err(Error::Validation(
            "the fig2-blocking attack targets bare single-qubit transmissions; run it under the baseline harness".into(),
        ));
    }
    let mut rngs = Rngs::for_seed(config.seed);
    let codes_sent = config.codes_sent();
    let mut rows = Vec::with_capacity(codes_sent);
    let mut records: Vec<CodeRecord> = Vec::with_capacity(codes_sent);
    let mut events: Vec<DetectionEvent> = Vec::with_capacity(codes_sent);

    for index in 0..codes_sent {
        let basis = draw_basis(&mut rngs.alice);
        let bit = u8::from(rngs.alice.gen_bool(0.5));
        let rec = encode(config.protocol, Bb84State::new(basis, bit));
        let (draw, lost) = sample_channel(&config.channel, &mut rngs.channel);
        if lost {
            let event = DetectionEvent::discarded(vec![]);
            rows.push(CodeRow {
                index,
                prep_basis: basis,
                prep_bit: bit,
                draw,
                lost: true,
                eve_bits: vec![],
                event: event.clone(),
            });
            records.push(rec);
            events.push(event);
            continue;
        }
        let mut state = apply_draw(&rec.state, &draw, &[0, 1])?;
        let mut eve_bits = Vec::new();
        if let Some(strategy) = config.attack.intercept_strategy() {
            let out = intercept_resend_code(&state, config.protocol, strategy, &mut rngs.eve)?;
            eve_bits = out.eve_bits;
            state = out.resent_state.expect("intercept-resend always resends");
        }
        let event = decode_code(config, &state, &mut rngs.bob)?;
        rows.push(CodeRow {
            index,
            prep_basis: basis,
            prep_bit: bit,
            draw,
            lost: false,
            eve_bits,
            event: event.clone(),
        });
        records.push(rec);
        events.push(event);
    }

    postprocess(config, rows, &records, &events, &mut rngs.alice)
}

fn decode_code(
    config: &SessionConfig,
    state: &PureState,
    bob: &mut ChaCha8Rng,
) -> Result<DetectionEvent> {
    match (config.decoder, config.protocol) {
        (DecoderKind::Active, Protocol::P1) => {
            let basis = draw_basis(bob);
            decode_p1_active(state, basis, bob)
        }
        (DecoderKind::Active, Protocol::P2) => {
            let basis = draw_basis(bob);
            decode_p2_active(state, basis, bob)
        }
        (DecoderKind::Passive, Protocol::P1) => {
            let basis = draw_basis(bob);
            decode_p1_passive(state, basis, bob)
        }
        (DecoderKind::Passive, Protocol::P2) => {
            let basis = draw_basis(bob);
            decode_p2_passive(state, basis, bob, false)
        }
        (DecoderKind::DetectorModel, Protocol::P1) => decode_p1_fig2(state, bob),
        (DecoderKind::DetectorModel, Protocol::P2) => decode_p2_fig3(state, bob),
    }
}

/// BB84 with the same bookkeeping: bare qubits, no code-space protection.
pub fn run_baseline_bb84(config: &SessionConfig) -> Result<SessionTranscript> {
    config.validate()?;
    let mut rngs = Rngs::for_seed(config.seed);
    let codes_sent = config.codes_sent();
    let mut rows = Vec::with_capacity(codes_sent);
    let mut records: Vec<CodeRecord> = Vec::with_capacity(codes_sent);
    let mut events: Vec<DetectionEvent> = Vec::with_capacity(codes_sent);

    for index in 0..codes_sent {
        let basis = draw_basis(&mut rngs.alice);
        let bit = u8::from(rngs.alice.gen_bool(0.5));
        let input = Bb84State::new(basis, bit);
        let rec = CodeRecord {
            protocol: config.protocol,
            prep_basis: basis,
            bit,
            state: input.state(),
        };
        let (draw, lost) = sample_channel(&config.channel, &mut rngs.channel);
        let mut row = CodeRow {
            index,
            prep_basis: basis,
            prep_bit: bit,
            draw,
            lost: true,
            eve_bits: vec![],
            event: DetectionEvent::discarded(vec![]),
        };
        if !lost {
            let state = apply_draw(&rec.state, &draw, &[0])?;
            // None = blocked by Eve; the row stays marked lost.
            if let Some((state, eve_bits)) = baseline_attack(config, &state, &mut rngs.eve)? {
                let bob_basis = draw_basis(&mut rngs.bob);
                let m = measure_qubit(&state, 0, bob_basis, rngs.bob.gen())?;
                row.lost = false;
                row.eve_bits = eve_bits;
                row.event = DetectionEvent::accepted(bob_basis, m.value, vec![]);
            }
        }
        records.push(rec);
        events.push(row.event.clone());
        rows.push(row);
    }

    postprocess(config, rows, &records, &events, &mut rngs.alice)
}

/// Applies the configured attack to a single bare qubit. None = blocked.
fn baseline_attack(
    config: &SessionConfig,
    state: &PureState,
    eve: &mut ChaCha8Rng,
) -> Result<Option<(PureState, Vec<u8>)>> {
    match config.attack {
        AttackConfig::None => Ok(Some((state.clone(), vec![]))),
        AttackConfig::InterceptZ | AttackConfig::InterceptX | AttackConfig::InterceptRandom => {
            let strategy = config.attack.intercept_strategy().unwrap();
            let basis = match strategy {
                InterceptResendStrategy::FixedZ => Basis::Z,
                InterceptResendStrategy::FixedX => Basis::X,
                InterceptResendStrategy::Random => draw_basis(eve),
            };
            let m = measure_qubit(state, 0, basis, eve.gen())?;
            Ok(Some((Bb84State::new(basis, m.value).state(), vec![m.value])))
        }
        AttackConfig::Fig2Blocking => {
            // Eve wraps the bare qubit in the two-photon code and mounts the
            // detector-line blocking attack on it.
            let code = tensor(state, &PureState::zero())?
                .apply(&crate::codecs::encoding_gate_p1(), &[0, 1])?;
            let out = fig2_blocking_attack(&code, eve)?;
            Ok(out.resent_state.map(|s| (s, out.eve_bits)))
        }
    }
}

fn postprocess(
    config: &SessionConfig,
    rows: Vec<CodeRow>,
    records: &[CodeRecord],
    events: &[DetectionEvent],
    alice: &mut ChaCha8Rng,
) -> Result<SessionTranscript> {
    let (alice_sifted, bob_sifted) = sift(records, events)?;
    let codes_sent = rows.len();
    let lost = rows.iter().filter(|r| r.lost).count();
    let accepted = rows.iter().filter(|r| r.event.accepted).count();
    let sifted = alice_sifted.len();
    let base_stats = |aborted: bool, reason: Option<String>| SummaryStats {
        codes_sent,
        lost,
        accepted,
        sifted,
        check_bits: 0,
        check_errors: 0,
        error_rate: None,
        aborted,
        abort_reason: reason,
        key_bits: 0,
        key_rate: 0.0,
        uncorrectable_blocks: 0,
        sift_fraction: sifted as f64 / codes_sent as f64,
        accept_fraction: accepted as f64 / codes_sent as f64,
    };

    let Some((check_idx, data_idx)) = select_check_bits(sifted, config.n, alice) else {
        return Ok(SessionTranscript {
            config: config.clone(),
            rows,
            alice_sifted,
            bob_sifted,
            check_report: None,
            alice_key: vec![],
            bob_key: vec![],
            stats: base_stats(true, Some("insufficient sifted bits".into())),
        });
    };

    let check_positions: Vec<usize> = check_idx.iter().map(|&i| alice_sifted.positions[i]).collect();
    let report = CheckBitReport::new(
        check_positions,
        check_idx.iter().map(|&i| alice_sifted.bits[i]).collect(),
        check_idx.iter().map(|&i| bob_sifted.bits[i]).collect(),
    );
    let decision = estimate_and_decide(&report, config.threshold)?;
    let mut stats = base_stats(false, None);
    stats.check_bits = report.alice_bits.len();
    stats.check_errors =
        report.alice_bits.iter().zip(&report.bob_bits).filter(|(a, b)| a != b).count();
    stats.error_rate = Some(report.error_rate);

    if decision == Decision::Abort {
        stats.aborted = true;
        stats.abort_reason = Some("error rate above threshold".into());
        return Ok(SessionTranscript {
            config: config.clone(),
            rows,
            alice_sifted,
            bob_sifted,
            check_report: Some(report),
            alice_key: vec![],
            bob_key: vec![],
            stats,
        });
    }

    let alice_data: Vec<u8> = data_idx.iter().map(|&i| alice_sifted.bits[i]).collect();
    let bob_data: Vec<u8> = data_idx.iter().map(|&i| bob_sifted.bits[i]).collect();
    let outcome = css_distill(&alice_data, &bob_data, &config.css, alice)?;
    stats.key_bits = outcome.alice.bits.len();
    stats.key_rate = key_rate_estimate(report.error_rate);
    stats.uncorrectable_blocks = outcome.uncorrectable_blocks;

    Ok(SessionTranscript {
        config: config.clone(),
        rows,
        alice_sifted,
        bob_sifted,
        check_report: Some(report),
        alice_key: outcome.alice.bits,
        bob_key: outcome.bob.bits,
        stats,
    })
}

/// Campaign-level summary across seeds.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateSummary {
    pub sessions: usize,
    pub aborts: usize,
    pub mean_error_rate: Option<f64>,
    pub se_error_rate: Option<f64>,
    pub mean_key_rate: f64,
    pub mean_key_bits: f64,
    pub total_check_bits: usize,
}

pub fn aggregate(transcripts: &[SessionTranscript]) -> Result<AggregateSummary> {
    if transcripts.is_empty() {
        return Err(Error::Validation("aggregate needs at least one transcript".into()));
    }
    let sessions = transcripts.len();
    let aborts = transcripts.iter().filter(|t| t.stats.aborted).count();
    let errors: Vec<f64> =
        transcripts.iter().filter_map(|t| t.stats.error_rate).collect();
    let (mean_error_rate, se_error_rate) = if errors.is_empty() {
        (None, None)
    } else {
        let m = errors.iter().sum::<f64>() / errors.len() as f64;
        let var = errors.iter().map(|e| (e - m).powi(2)).sum::<f64>()
            / errors.len() as f64;
        (Some(m), Some((var / errors.len() as f64).sqrt()))
    };
    let mean_key_rate =
        transcripts.iter().map(|t| t.stats.key_rate).sum::<f64>() / sessions as f64;
    let mean_key_bits =
        transcripts.iter().map(|t| t.stats.key_bits as f64).sum::<f64>() / sessions as f64;
    let total_check_bits = transcripts.iter().map(|t| t.stats.check_bits).sum();
    Ok(AggregateSummary {
        sessions,
        aborts,
        mean_error_rate,
        se_error_rate,
        mean_key_rate,
        mean_key_bits,
        total_check_bits,
    })
}

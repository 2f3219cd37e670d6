//! Collective-noise channel models.
//!
//! Both channels draw one classical noise parameter per transmission and
//! apply it identically to every qubit of that transmission (the "collective"
//! scope). Distinct transmissions get independent draws. Loss is modeled
//! per-code: the whole transmission is lost together.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::quantum::{Gate, PureState};
use crate::Result;

/// One sample of the collective dephasing channel: |0⟩ gains e^{iφ₀},
/// |1⟩ gains e^{iφ₁}, and Δ = φ₀ + φ₁.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DephasingDraw {
    pub phi0: f64,
    pub phi1: f64,
    pub delta: f64,
}

impl DephasingDraw {
    pub fn new(phi0: f64, phi1: f64) -> Self {
        Self { phi0, phi1, delta: phi0 + phi1 }
    }
}

/// One sample of the collective equatorial rotation channel.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RotationDraw {
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    CollectiveDephasing,
    CollectiveRotation,
    Identity,
}

impl std::fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChannelKind::CollectiveDephasing => write!(f, "collective-dephasing"),
            ChannelKind::CollectiveRotation => write!(f, "collective-rotation"),
            ChannelKind::Identity => write!(f, "identity"),
        }
    }
}

/// Distribution of the per-transmission noise angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[derive(Default)]
pub enum NoiseDistribution {
    /// Independent uniform over [0, 2π) per angle (the default).
    #[default]
    Uniform,
    /// Every draw uses this fixed angle (all angles equal for dephasing).
    Fixed { angle: f64 },
}


/// Accepted in configs either as a bare kind string ("collective-dephasing")
/// or as a full object with optional loss/noise fields.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(from = "ChannelConfigRepr")]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    #[serde(default)]
    pub loss_prob: f64,
    #[serde(default)]
    pub noise_distribution: NoiseDistribution,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ChannelConfigRepr {
    Kind(ChannelKind),
    Full {
        kind: ChannelKind,
        #[serde(default)]
        loss_prob: f64,
        #[serde(default)]
        noise_distribution: NoiseDistribution,
    },
}

impl From<ChannelConfigRepr> for ChannelConfig {
    fn from(repr: ChannelConfigRepr) -> Self {
        match repr {
            ChannelConfigRepr::Kind(kind) => Self {
                kind,
                loss_prob: 0.0,
                noise_distribution: NoiseDistribution::Uniform,
            },
            ChannelConfigRepr::Full { kind, loss_prob, noise_distribution } => {
                Self { kind, loss_prob, noise_distribution }
            }
        }
    }
}

impl ChannelConfig {
    pub fn identity() -> Self {
        Self {
            kind: ChannelKind::Identity,
            loss_prob: 0.0,
            noise_distribution: NoiseDistribution::Uniform,
        }
    }
}

/// The classical noise drawn for one transmission.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChannelDraw {
    Identity,
    Dephasing(DephasingDraw),
    Rotation(RotationDraw),
}

/// Each target qubit acquires diag(e^{iφ₀}, e^{iφ₁}); equivalently each
/// computational basis amplitude is multiplied by e^{i(n₀φ₀ + n₁φ₁)} over
/// the target-qubit values.
pub fn apply_collective_dephasing(
    state: &PureState,
    draw: &DephasingDraw,
    targets: &[usize],
) -> Result<PureState> {
    let n = state.num_qubits();
    for (i, &t) in targets.iter().enumerate() {
        if t >= n {
            return Err(crate::Error::Validation(format!("target qubit {t} out of range")));
        }
        if targets[..i].contains(&t) {
            return Err(crate::Error::Validation(format!("duplicate target qubit {t}")));
        }
    }
    let amps = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(idx, a)| {
            let ones = targets
                .iter()
                .filter(|&&t| (idx >> (n - 1 - t)) & 1 == 1)
                .count() as f64;
            let zeros = targets.len() as f64 - ones;
            a * Complex64::from_polar(1.0, zeros * draw.phi0 + ones * draw.phi1)
        })
        .collect();
    PureState::new(amps, state.roles().to_vec())
}

/// Each target qubit is multiplied by [[cosθ, sinθ], [−sinθ, cosθ]].
pub fn apply_collective_rotation(
    state: &PureState,
    draw: &RotationDraw,
    targets: &[usize],
) -> Result<PureState> {
    let gate = Gate::rotation(draw.theta);
    let mut out = state.clone();
    for &t in targets {
        out = out.apply(&gate, &[t])?;
    }
    Ok(out)
}

/// Applies whichever draw was sampled to the target qubits.
pub fn apply_draw(state: &PureState, draw: &ChannelDraw, targets: &[usize]) -> Result<PureState> {
    match draw {
        ChannelDraw::Identity => Ok(state.clone()),
        ChannelDraw::Dephasing(d) => apply_collective_dephasing(state, d, targets),
        ChannelDraw::Rotation(r) => apply_collective_rotation(state, r, targets),
    }
}

/// Samples the classical noise and the loss flag for one transmission.
pub fn sample_channel(config: &ChannelConfig, rng: &mut impl Rng) -> (ChannelDraw, bool) {
    let angle = |rng: &mut dyn rand::RngCore| match config.noise_distribution {
        NoiseDistribution::Uniform => rng.gen::<f64>() * std::f64::consts::TAU,
        NoiseDistribution::Fixed { angle } => angle,
    };
    let draw = match config.kind {
        ChannelKind::Identity => ChannelDraw::Identity,
        ChannelKind::CollectiveDephasing => {
            let phi0 = angle(rng);
            let phi1 = angle(rng);
            ChannelDraw::Dephasing(DephasingDraw::new(phi0, phi1))
        }
        ChannelKind::CollectiveRotation => ChannelDraw::Rotation(RotationDraw { theta: angle(rng) }),
    };
    let lost = config.loss_prob > 0.0 && rng.gen::<f64>() < config.loss_prob;
    (draw, lost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{global_phase_equal, outcome_distribution, tensor, Basis, TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn basis_product_gains_delta() {
        let s = tensor(&PureState::zero(), &PureState::one()).unwrap();
        for (phi0, phi1) in [(0.3, 1.9), (5.0, 0.01), (std::f64::consts::PI, 2.2)] {
            let draw = DephasingDraw::new(phi0, phi1);
            let out = apply_collective_dephasing(&s, &draw, &[0, 1]).unwrap();
            let expect = s.scaled(Complex64::from_polar(1.0, draw.delta)).unwrap();
            assert!(out
                .amplitudes()
                .iter()
                .zip(expect.amplitudes())
                .all(|(a, b)| (a - b).norm() < TOL));
        }
    }

    #[test]
    fn superposition_is_dfs_invariant() {
        let s = PureState::psi_minus();
        let draw = DephasingDraw::new(1.234, 4.321);
        let out = apply_collective_dephasing(&s, &draw, &[0, 1]).unwrap();
        assert!(global_phase_equal(&out, &s, TOL));
    }

    #[test]
    fn dephasing_flips_plus_at_pi() {
        let draw = DephasingDraw::new(0.0, std::f64::consts::PI);
        let out = apply_collective_dephasing(&PureState::plus(), &draw, &[0]).unwrap();
        assert!(global_phase_equal(&out, &PureState::minus(), 1e-9));
    }

    #[test]
    fn bell_states_rotation_invariant() {
        for theta in [0.0, 0.4, 1.7, 3.3, 5.9] {
            let draw = RotationDraw { theta };
            for s in [PureState::phi_plus(), PureState::psi_minus()] {
                let out = apply_collective_rotation(&s, &draw, &[0, 1]).unwrap();
                assert!(global_phase_equal(&out, &s, 1e-12));
            }
        }
    }

    #[test]
    fn rotation_on_zero_at_half_pi() {
        let draw = RotationDraw { theta: std::f64::consts::FRAC_PI_2 };
        let out = apply_collective_rotation(&PureState::zero(), &draw, &[0]).unwrap();
        let minus_one = PureState::one()
            .scaled(Complex64::new(-1.0, 0.0))
            .unwrap();
        assert!(out
            .amplitudes()
            .iter()
            .zip(minus_one.amplitudes())
            .all(|(a, b)| (a - b).norm() < TOL));
    }

    #[test]
    fn norm_preserved_under_both_channels() {
        let s = PureState::phi_plus();
        let d = apply_collective_dephasing(&s, &DephasingDraw::new(2.0, 0.7), &[0, 1]).unwrap();
        let r = apply_collective_rotation(&s, &RotationDraw { theta: 2.6 }, &[0, 1]).unwrap();
        assert!((d.norm_sqr() - 1.0).abs() < TOL);
        assert!((r.norm_sqr() - 1.0).abs() < TOL);
    }

    #[test]
    fn single_qubit_x_error_probability() {
        // |+⟩ under dephasing: X-basis error probability sin²((φ₁−φ₀)/2).
        for k in 0..8 {
            let diff = k as f64 * std::f64::consts::TAU / 8.0;
            let draw = DephasingDraw::new(0.0, diff);
            let out = apply_collective_dephasing(&PureState::plus(), &draw, &[0]).unwrap();
            let d = outcome_distribution(&out, &[(0, Basis::X)]).unwrap();
            let expect = (diff / 2.0).sin().powi(2);
            assert!((d[&vec![1]] - expect).abs() < TOL);
        }
    }

    #[test]
    fn sample_channel_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (draw, lost) = sample_channel(&ChannelConfig::identity(), &mut rng);
        assert!(matches!(draw, ChannelDraw::Identity));
        assert!(!lost);

        let cfg = ChannelConfig {
            kind: ChannelKind::CollectiveDephasing,
            loss_prob: 0.0,
            noise_distribution: NoiseDistribution::Uniform,
        };
        for _ in 0..100 {
            let (draw, _) = sample_channel(&cfg, &mut rng);
            let ChannelDraw::Dephasing(d) = draw else { panic!("wrong draw kind") };
            assert!((0.0..std::f64::consts::TAU).contains(&d.phi0));
            assert!((0.0..std::f64::consts::TAU).contains(&d.phi1));
            assert!((d.delta - (d.phi0 + d.phi1)).abs() == 0.0);
        }

        let lossy = ChannelConfig { loss_prob: 1.0, ..ChannelConfig::identity() };
        for _ in 0..20 {
            let (_, lost) = sample_channel(&lossy, &mut rng);
            assert!(lost);
        }
    }
}

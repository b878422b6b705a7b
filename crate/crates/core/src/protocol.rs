//! The remote-state-preparation chain and its optimal-point analysis.
//!
//! The protocol prepares a squeezed state at Bob's node from a two-mode
//! squeezed resource plus an amplified classical feedforward:
//!
//! ```text
//! thermal |n,n>  ->  squeezers (r, gamma1 / gamma2)
//!                ->  pre-splitter loss (eps, both paths)
//!                ->  hybrid ring (50:50)
//!                ->  path losses (eta1 Alice / eta2 Bob)
//!                ->  phase-sensitive amplifier on Alice's path (G, gamma_f)
//!                ->  directional coupler (tau)
//!                ->  rotation of Bob's mode (theta_rp)
//! ```
//!
//! Mode 1 is the feedforward output C', mode 2 the remotely prepared state.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::components::{
    coupler_channel, hybrid_ring_channel, loss_channel, psa_channel, rotation_channel,
    squeezer_channel, two_mode_loss, CouplerSpec, GainUnits, LossSpec, PsaSpec, SpecError,
    SqueezerSpec,
};
use crate::gaussian::{apply_channel, compose, GaussianError, GaussianState, VACUUM_VARIANCE};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("asymmetric resource: squeezer parameters differ but the symmetric flag is set (r: {0} vs {1}, n: {2} vs {3})")]
    AsymmetricResource(f64, f64, f64, f64),
    #[error("search range [{0}, {1}] dB does not bracket tau/(1-tau) = {2:.3} dB")]
    RangeDoesNotBracket(f64, f64, f64),
}

/// Pump-leakage crosstalk: the first squeezer's angle shifts linearly with
/// the feedforward gain and angle, gamma1 = gamma1_0 + kappa·G + lambda·gamma_f.
/// Defaults (0, 0, 0) disable the effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrosstalkSpec {
    /// Unperturbed squeezing angle of the first squeezer, radians.
    pub gamma1_0: f64,
    /// Angle shift per unit gain, radians (units set by `gain_units`).
    pub kappa: f64,
    /// Angle shift per radian of feedforward angle, dimensionless.
    pub lambda: f64,
    /// Whether kappa multiplies the linear gain or the gain in dB.
    pub gain_units: GainUnits,
}

impl CrosstalkSpec {
    pub fn new(gamma1_0: f64, kappa: f64, lambda: f64) -> Self {
        Self {
            gamma1_0,
            kappa,
            lambda,
            gain_units: GainUnits::default(),
        }
    }

    pub fn disabled(gamma1_0: f64) -> Self {
        Self::new(gamma1_0, 0.0, 0.0)
    }
}

/// Full parameter set of the modeled network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RspParams {
    pub squeezer1: SqueezerSpec,
    pub squeezer2: SqueezerSpec,
    /// Loss before the hybrid ring, applied to both paths.
    pub loss_pre: LossSpec,
    /// Loss between ring and amplifier on Alice's path.
    pub loss_alice: LossSpec,
    /// Loss between ring and coupler on Bob's path.
    pub loss_bob: LossSpec,
    pub psa: PsaSpec,
    pub coupler: CouplerSpec,
    /// Electrical-length compensation rotation of Bob's mode, radians.
    pub theta_rp: f64,
    pub crosstalk: CrosstalkSpec,
    /// Declares the resource symmetric (equal r and n on both squeezers).
    pub symmetric: bool,
}

impl RspParams {
    /// Validates component invariants, including resource symmetry when the
    /// symmetric flag is set. `squeezer1.gamma` is ignored by the chain in
    /// favor of [`effective_gamma1`].
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.symmetric
            && (self.squeezer1.r != self.squeezer2.r
                || self.squeezer1.input_noise_photons != self.squeezer2.input_noise_photons)
        {
            return Err(ProtocolError::AsymmetricResource(
                self.squeezer1.r,
                self.squeezer2.r,
                self.squeezer1.input_noise_photons,
                self.squeezer2.input_noise_photons,
            ));
        }
        Ok(())
    }

    /// Identity chain: no squeezing, no loss, unit gain, no crosstalk.
    /// The coupler keeps a physical (negative) coupling.
    pub fn identity(beta_db: f64) -> Result<Self, ProtocolError> {
        Ok(Self {
            squeezer1: SqueezerSpec::new(0.0, 0.0, 0.0)?,
            squeezer2: SqueezerSpec::new(0.0, std::f64::consts::FRAC_PI_2, 0.0)?,
            loss_pre: LossSpec::new(0.0)?,
            loss_alice: LossSpec::new(0.0)?,
            loss_bob: LossSpec::new(0.0)?,
            psa: PsaSpec::new(1.0, 0.0, std::f64::consts::FRAC_PI_2, 0.0)?,
            coupler: CouplerSpec::new(beta_db)?,
            theta_rp: 0.0,
            crosstalk: CrosstalkSpec::disabled(0.0),
            symmetric: true,
        })
    }

    /// Ideal components in the canonical frame: lossless, noiseless,
    /// crosstalk-free, gamma1 = 0, gamma2 = theta_f = pi/2.
    pub fn ideal(r: f64, beta_db: f64, gain: f64) -> Result<Self, ProtocolError> {
        let mut p = Self::identity(beta_db)?;
        p.squeezer1 = SqueezerSpec::new(r, 0.0, 0.0)?;
        p.squeezer2 = SqueezerSpec::new(r, std::f64::consts::FRAC_PI_2, 0.0)?;
        p.psa = PsaSpec::new(gain, 0.0, std::f64::consts::FRAC_PI_2, 0.0)?;
        Ok(p)
    }

    /// Returns a copy with the feedforward operating point changed.
    pub fn at_feedforward(&self, gain_linear: f64, gamma_f: f64) -> Result<Self, ProtocolError> {
        let mut p = self.clone();
        p.psa = PsaSpec {
            gain: gain_linear,
            gamma_f,
            ..self.psa
        };
        if p.psa.gain < 1.0 || !p.psa.gain.is_finite() {
            return Err(ProtocolError::Spec(SpecError::GainBelowUnity(gain_linear)));
        }
        Ok(p)
    }

    pub fn tau(&self) -> f64 {
        self.coupler.tau()
    }
}

/// Crosstalk-shifted squeezing angle of the first squeezer,
/// gamma1 = gamma1_0 + kappa·G + lambda·gamma_f.
pub fn effective_gamma1(params: &RspParams) -> f64 {
    let g = params.crosstalk.gain_units.scale(params.psa.gain);
    params.crosstalk.gamma1_0 + params.crosstalk.kappa * g + params.crosstalk.lambda * params.psa.gamma_f
}

/// Output of the full chain.
#[derive(Debug, Clone)]
pub struct RspOutput {
    /// Bob's reduced mode (the remotely prepared state).
    pub prepared: GaussianState,
    /// Reduced state of the second coupler output (the C' signal).
    pub feedforward_out: GaussianState,
    /// Joint two-mode state after coupler and rotation (C', M).
    pub joint: GaussianState,
}

/// Two-mode state right after the amplifier, before the coupler.
/// This is the (Alice, Bob) state probed by the feedforward analysis.
pub fn chain_before_coupler(params: &RspParams) -> Result<GaussianState, ProtocolError> {
    params.validate()?;
    let gamma1 = effective_gamma1(params);
    let sq1 = squeezer_channel(&SqueezerSpec {
        gamma: gamma1,
        ..params.squeezer1
    });
    let sq2 = squeezer_channel(&params.squeezer2);
    let mut chain = compose(&sq1.embed(0, 2)?, &sq2.embed(1, 2)?)?;
    chain = compose(&two_mode_loss(&params.loss_pre)?, &chain)?;
    chain = compose(&hybrid_ring_channel(), &chain)?;
    chain = compose(&loss_channel(&params.loss_alice).embed(0, 2)?, &chain)?;
    chain = compose(&loss_channel(&params.loss_bob).embed(1, 2)?, &chain)?;
    chain = compose(&psa_channel(&params.psa).embed(0, 2)?, &chain)?;
    let input = input_state(params)?;
    Ok(apply_channel(&input, &chain)?)
}

fn input_state(params: &RspParams) -> Result<GaussianState, ProtocolError> {
    let n1 = params.squeezer1.input_noise_photons;
    let n2 = params.squeezer2.input_noise_photons;
    let mut cov = nalgebra::DMatrix::identity(4, 4);
    for i in 0..2 {
        cov[(i, i)] = (1.0 + 2.0 * n1) / 4.0;
        cov[(i + 2, i + 2)] = (1.0 + 2.0 * n2) / 4.0;
    }
    Ok(GaussianState::new(nalgebra::DVector::zeros(4), cov)?)
}

/// Runs the full protocol chain and splits the outputs.
pub fn run_rsp(params: &RspParams) -> Result<RspOutput, ProtocolError> {
    let before = chain_before_coupler(params)?;
    let mut tail = coupler_channel(&params.coupler);
    tail = compose(&rotation_channel(params.theta_rp).embed(1, 2)?, &tail)?;
    let joint = apply_channel(&before, &tail)?;
    Ok(RspOutput {
        prepared: joint.reduced(1)?,
        feedforward_out: joint.reduced(0)?,
        joint,
    })
}

/// Squeezing characterization of a single-mode state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PreparedStateSummary {
    /// Squeezing level, dB below vacuum: -10 log10(sigma_s²/0.25).
    pub s_db: f64,
    /// Antisqueezing level, dB above vacuum: 10 log10(sigma_a²/0.25).
    pub a_db: f64,
    /// Squeezing angle in [0, pi), radians.
    pub gamma_rp: f64,
    /// Purity 1/(4 sqrt(det cov)).
    pub purity: f64,
    /// Covariance of the mode, quadrature order (q, p).
    pub cov: [[f64; 2]; 2],
    /// Squeezed quadrature variance.
    pub sigma_s2: f64,
    /// Antisqueezed quadrature variance.
    pub sigma_a2: f64,
    /// Set for rotationally symmetric states, where the angle is defined
    /// as 0 by convention.
    pub degenerate_angle: bool,
}

/// Extracts squeezing level, antisqueezing level, and squeezing angle from
/// a single-mode state via its second signal moments:
/// gamma = -arg(-<b²>)/2 mapped into [0, pi), and the rotated-frame
/// variances sigma_s² <= sigma_a².
pub fn summarize_prepared(state: &GaussianState) -> Result<PreparedStateSummary, GaussianError> {
    if state.mode_count() != 1 {
        return Err(GaussianError::UnsupportedModeCount(state.mode_count()));
    }
    let v = state.cov();
    let b2 = Complex64::new(v[(0, 0)] - v[(1, 1)], 2.0 * v[(0, 1)]);
    let nb = v[(0, 0)] + v[(1, 1)] - 0.5;
    let degenerate = b2.norm() < 1e-12;
    let gamma_rp = if degenerate {
        0.0
    } else {
        let g = -0.5 * (-b2).arg();
        if g < 0.0 {
            g + std::f64::consts::PI
        } else {
            g
        }
    };
    let phase = Complex64::from_polar(1.0, 2.0 * gamma_rp);
    let sigma_s2 = ((b2 * phase).re * 2.0 + 2.0 * nb + 1.0) / 4.0;
    let sigma_a2 = (-(b2 * phase).re * 2.0 + 2.0 * nb + 1.0) / 4.0;
    Ok(PreparedStateSummary {
        s_db: -10.0 * (sigma_s2 / VACUUM_VARIANCE).log10(),
        a_db: 10.0 * (sigma_a2 / VACUUM_VARIANCE).log10(),
        gamma_rp,
        purity: state.purity(),
        cov: [[v[(0, 0)], v[(0, 1)]], [(v[(1, 0)]), v[(1, 1)]]],
        sigma_s2,
        sigma_a2,
        degenerate_angle: degenerate,
    })
}

/// Closed-form prediction for the optimally prepared state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalPointPrediction {
    pub sigma_s2: f64,
    pub sigma_a2: f64,
    /// Prepared angle; equals the first squeezer's angle, which is zero in
    /// the canonical frame these forms are quoted in.
    pub gamma_rp: f64,
}

/// Closed forms for the remotely prepared state at the nominal optimal
/// point G = tau/(1-tau), gamma_f = 0, under the symmetric assumptions
/// (equal path losses eta, no pre-splitter loss, no crosstalk, canonical
/// angles):
///
/// ```text
/// sigma_s² = [2 (1+2n) e^{-2r} (1-eta) tau + 2 (eta + n_f) tau] / 4
/// sigma_a² = (1+2n)(1-eta)/(8 tau) [e^{2r} + (2 tau - 1)² e^{-2r}]
///          + eta (2 tau² - 2 tau + 1)/(4 tau) + n_f (1 - tau)²/(2 tau)
/// ```
///
/// Both are exact for the chain at that operating point; the squeezed
/// variance matches over the validity regime where squeezing survives
/// (sigma_s² < sigma_a²).
pub fn optimal_point_prediction(
    r: f64,
    n: f64,
    eta: f64,
    tau: f64,
    n_f: f64,
) -> OptimalPointPrediction {
    let sigma_s2 = 0.25
        * (2.0 * (1.0 + 2.0 * n) * (-2.0 * r).exp() * (1.0 - eta) * tau
            + 2.0 * (eta + n_f) * tau);
    let two_tau_1 = 2.0 * tau - 1.0;
    let sigma_a2 = (1.0 + 2.0 * n) * (1.0 - eta) / (8.0 * tau)
        * ((2.0 * r).exp() + two_tau_1 * two_tau_1 * (-2.0 * r).exp())
        + eta * (2.0 * tau * tau - 2.0 * tau + 1.0) / (4.0 * tau)
        + n_f * (1.0 - tau) * (1.0 - tau) / (2.0 * tau);
    OptimalPointPrediction {
        sigma_s2,
        sigma_a2,
        gamma_rp: 0.0,
    }
}

/// Result of the scalar gain optimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalGain {
    /// Purity-maximizing linear gain.
    pub gain: f64,
    pub gain_db: f64,
    /// Purity at the optimum.
    pub purity: f64,
    /// Set when the coarse scan saw more than one local maximum; the
    /// returned gain is then the best sample refined locally.
    pub multimodal: bool,
}

/// Finds the feedforward gain maximizing prepared-state purity inside
/// `search_db` (a dB interval that must bracket tau/(1-tau)), by a coarse
/// scan followed by golden-section refinement to 1e-6 in linear gain.
pub fn find_optimal_gain(
    params: &RspParams,
    search_db: (f64, f64),
) -> Result<OptimalGain, ProtocolError> {
    let nominal = params.tau() / (1.0 - params.tau());
    let nominal_db = 10.0 * nominal.log10();
    if search_db.0 >= search_db.1 || nominal_db < search_db.0 || nominal_db > search_db.1 {
        return Err(ProtocolError::RangeDoesNotBracket(
            search_db.0,
            search_db.1,
            nominal_db,
        ));
    }
    let lo = 10f64.powf(search_db.0 / 10.0).max(1.0);
    let hi = 10f64.powf(search_db.1 / 10.0).max(lo + 1e-9);
    let purity_at = |g: f64| -> Result<f64, ProtocolError> {
        Ok(run_rsp(&params.at_feedforward(g, params.psa.gamma_f)?)?
            .prepared
            .purity())
    };

    // coarse scan to bracket the optimum and detect multimodality
    let n_scan = 129;
    let mut best_i = 0;
    let mut samples = Vec::with_capacity(n_scan);
    for i in 0..n_scan {
        let g = lo + (hi - lo) * i as f64 / (n_scan - 1) as f64;
        let mu = purity_at(g)?;
        if mu > samples.get(best_i).copied().unwrap_or(f64::MIN) {
            best_i = i;
        }
        samples.push(mu);
    }
    let mut maxima = 0;
    for i in 0..n_scan {
        let left = if i == 0 { f64::MIN } else { samples[i - 1] };
        let right = if i == n_scan - 1 { f64::MIN } else { samples[i + 1] };
        if samples[i] > left && samples[i] > right {
            maxima += 1;
        }
    }
    let step = (hi - lo) / (n_scan - 1) as f64;
    let mut a = (lo + best_i.saturating_sub(1) as f64 * step).max(lo);
    let mut b = (lo + (best_i + 1) as f64 * step).min(hi);

    // golden-section on [a, b]
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = purity_at(c)?;
    let mut fd = purity_at(d)?;
    while (b - a) > 1e-6 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = purity_at(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = purity_at(d)?;
        }
    }
    let gain = (a + b) / 2.0;
    Ok(OptimalGain {
        gain,
        gain_db: 10.0 * gain.log10(),
        purity: purity_at(gain)?,
        multimodal: maxima > 1,
    })
}

//! Constructors for the physical elements of the RSP chain.
//!
//! Every element is expressed as a [`LinearChannel`] on quadratures.
//!
//! Squeezer sign convention. The Bogoliubov transform
//! `a -> a cosh r - a† e^{-2i·gamma} sinh r` translates on `(q, p)`
//! (with `a = q + ip`) to
//!
//! ```text
//! T = [ cosh r - sinh r cos 2g ,  sinh r sin 2g          ]
//!     [ sinh r sin 2g          ,  cosh r + sinh r cos 2g ]
//! ```
//!
//! so at `gamma = 0` the `q` quadrature is squeezed by `e^{-r}` and `p` is
//! antisqueezed by `e^{r}`: `gamma` is the angle between the antisqueezed
//! quadrature and the `p`-axis, growing toward `q` (gamma = pi/2 squeezes
//! `p`). The phase-sensitive amplifier uses the same form with
//! `r_f = ln(G_f)/2`, amplifying the quadrature at angle
//! `gamma_f + theta_f` from the `p`-axis.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gaussian::{compose, GaussianError, LinearChannel, VACUUM_VARIANCE};

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("squeezing factor r must be >= 0, got {0}")]
    NegativeSqueezing(f64),
    #[error("noise photon number must be >= 0, got {0}")]
    NegativeNoise(f64),
    #[error("power gain must be >= 1, got {0}")]
    GainBelowUnity(f64),
    #[error("loss fraction must lie in [0, 1), got {0}")]
    LossOutOfRange(f64),
    #[error("coupling must be negative in dB, got {0}")]
    CouplingNotNegative(f64),
    #[error("value must be finite, got {0}")]
    NotFinite(f64),
}

fn finite(x: f64) -> Result<f64, SpecError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(SpecError::NotFinite(x))
    }
}

/// How a gain-proportional quantity scales with the amplifier gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainUnits {
    /// Proportional to the linear power gain G.
    #[default]
    LinearGain,
    /// Proportional to the gain in dB, 10 log10(G).
    GainDb,
}

impl GainUnits {
    pub fn scale(&self, gain_linear: f64) -> f64 {
        match self {
            GainUnits::LinearGain => gain_linear,
            GainUnits::GainDb => 10.0 * gain_linear.log10(),
        }
    }
}

/// Where the amplifier's classical noise enters relative to the gain stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoisePlacement {
    /// Noise added to the input signal, then amplified.
    #[default]
    PreAmplification,
    /// Noise added to the amplified output.
    PostAmplification,
}

/// Degenerate squeezer: squeezing factor, squeezing angle, and the thermal
/// occupation of its input mode.
///
/// The input noise is not part of the channel; it is modeled by feeding the
/// squeezer a thermal state with `input_noise_photons` photons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezerSpec {
    /// Dimensionless squeezing factor, >= 0.
    pub r: f64,
    /// Squeezing angle in radians (antisqueezed quadrature from the p-axis).
    pub gamma: f64,
    /// Thermal photons at the squeezer input, >= 0.
    pub input_noise_photons: f64,
}

impl SqueezerSpec {
    pub fn new(r: f64, gamma: f64, input_noise_photons: f64) -> Result<Self, SpecError> {
        if finite(r)? < 0.0 {
            return Err(SpecError::NegativeSqueezing(r));
        }
        if finite(input_noise_photons)? < 0.0 {
            return Err(SpecError::NegativeNoise(input_noise_photons));
        }
        finite(gamma)?;
        Ok(Self {
            r,
            gamma,
            input_noise_photons,
        })
    }

    /// Squeezing level of the squeezer output in dB,
    /// `-10 log10((1 + 2n) e^{-2r})`.
    pub fn squeezing_level_db(&self) -> f64 {
        -10.0 * ((1.0 + 2.0 * self.input_noise_photons) * (-2.0 * self.r).exp()).log10()
    }
}

/// Noisy phase-sensitive amplifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsaSpec {
    /// Linear power gain of the amplified quadrature, >= 1.
    pub gain: f64,
    /// Amplification-angle deviation from the working point, radians.
    pub gamma_f: f64,
    /// Optimal amplification angle offset, radians.
    pub theta_f: f64,
    /// Gain-proportionality constant of the injected noise photons.
    pub noise_slope: f64,
    /// Units in which the noise scales with gain (default: linear gain).
    pub slope_units: GainUnits,
    /// Noise entry point (default: before amplification).
    pub placement: NoisePlacement,
}

impl PsaSpec {
    pub fn new(gain: f64, gamma_f: f64, theta_f: f64, noise_slope: f64) -> Result<Self, SpecError> {
        if finite(gain)? < 1.0 {
            return Err(SpecError::GainBelowUnity(gain));
        }
        if finite(noise_slope)? < 0.0 {
            return Err(SpecError::NegativeNoise(noise_slope));
        }
        finite(gamma_f)?;
        finite(theta_f)?;
        Ok(Self {
            gain,
            gamma_f,
            theta_f,
            noise_slope,
            slope_units: GainUnits::default(),
            placement: NoisePlacement::default(),
        })
    }

    pub fn with_slope_units(mut self, units: GainUnits) -> Self {
        self.slope_units = units;
        self
    }

    pub fn with_placement(mut self, placement: NoisePlacement) -> Self {
        self.placement = placement;
        self
    }

    /// Effective noise photon number n_f at the configured gain.
    pub fn noise_photons(&self) -> f64 {
        self.noise_slope * self.slope_units.scale(self.gain)
    }

    pub fn gain_db(&self) -> f64 {
        10.0 * self.gain.log10()
    }
}

/// Beam-splitter loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    /// Fraction of power lost, in [0, 1).
    pub loss_linear: f64,
}

impl LossSpec {
    pub fn new(loss_linear: f64) -> Result<Self, SpecError> {
        if !(0.0..1.0).contains(&finite(loss_linear)?) {
            return Err(SpecError::LossOutOfRange(loss_linear));
        }
        Ok(Self { loss_linear })
    }

    /// From an attenuation chi in dB: loss = 1 - 10^(-chi/10).
    pub fn from_db(chi_db: f64) -> Result<Self, SpecError> {
        Self::new(1.0 - 10f64.powf(-finite(chi_db)? / 10.0))
    }

    pub fn db(&self) -> f64 {
        -10.0 * (1.0 - self.loss_linear).log10()
    }
}

/// Directional coupler with coupling beta < 0 dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplerSpec {
    /// Coupling in dB, < 0.
    pub beta_db: f64,
}

impl CouplerSpec {
    pub fn new(beta_db: f64) -> Result<Self, SpecError> {
        if finite(beta_db)? >= 0.0 {
            return Err(SpecError::CouplingNotNegative(beta_db));
        }
        Ok(Self { beta_db })
    }

    /// Transmissivity tau = 1 - 10^(beta/10), in (0, 1).
    pub fn tau(&self) -> f64 {
        1.0 - 10f64.powf(self.beta_db / 10.0)
    }
}

pub(crate) fn squeezer_matrix(r: f64, gamma: f64) -> DMatrix<f64> {
    let (c, s) = (r.cosh(), r.sinh());
    let (cos2g, sin2g) = ((2.0 * gamma).cos(), (2.0 * gamma).sin());
    DMatrix::from_row_slice(
        2,
        2,
        &[c - s * cos2g, s * sin2g, s * sin2g, c + s * cos2g],
    )
}

/// Single-mode squeezing channel (no added noise).
pub fn squeezer_channel(spec: &SqueezerSpec) -> LinearChannel {
    LinearChannel::noiseless(squeezer_matrix(spec.r, spec.gamma)).expect("square transform")
}

/// Single-mode noisy phase-sensitive amplifier channel.
///
/// Classical noise of n_f/2 per quadrature enters either before the ideal
/// amplification (default) or after it, with quadrature gains
/// (sqrt(G), 1/sqrt(G)) in the frame rotated by `gamma_f + theta_f`.
pub fn psa_channel(spec: &PsaSpec) -> LinearChannel {
    let t = squeezer_matrix(0.5 * spec.gain.ln(), spec.gamma_f + spec.theta_f);
    let nf = spec.noise_photons();
    let noise_in = DMatrix::identity(2, 2) * (nf / 2.0);
    let noise = match spec.placement {
        NoisePlacement::PreAmplification => &t * noise_in * t.transpose(),
        NoisePlacement::PostAmplification => noise_in,
    };
    LinearChannel::new(t, noise).expect("psa noise is PSD")
}

/// Single-mode loss channel: T = sqrt(1-eps) I, N = (eps/4) I.
pub fn loss_channel(spec: &LossSpec) -> LinearChannel {
    let eps = spec.loss_linear;
    LinearChannel::new(
        DMatrix::identity(2, 2) * (1.0 - eps).sqrt(),
        DMatrix::identity(2, 2) * (eps * VACUUM_VARIANCE),
    )
    .expect("loss noise is PSD")
}

/// 50:50 beam splitter on two modes:
/// a1 -> (a1 + a2)/sqrt(2), a2 -> (-a1 + a2)/sqrt(2).
pub fn hybrid_ring_channel() -> LinearChannel {
    let rt = std::f64::consts::FRAC_1_SQRT_2;
    let mut t = DMatrix::zeros(4, 4);
    t.view_mut((0, 0), (2, 2))
        .copy_from(&(DMatrix::identity(2, 2) * rt));
    t.view_mut((0, 2), (2, 2))
        .copy_from(&(DMatrix::identity(2, 2) * rt));
    t.view_mut((2, 0), (2, 2))
        .copy_from(&(DMatrix::identity(2, 2) * -rt));
    t.view_mut((2, 2), (2, 2))
        .copy_from(&(DMatrix::identity(2, 2) * rt));
    LinearChannel::noiseless(t).expect("orthogonal transform")
}

/// Asymmetric beam splitter of the directional coupler:
/// a1 -> sqrt(tau) a1 + sqrt(1-tau) a2, a2 -> -sqrt(1-tau) a1 + sqrt(tau) a2.
/// Mode 1 is the feedforward path, mode 2 is Bob's.
pub fn coupler_channel(spec: &CouplerSpec) -> LinearChannel {
    let tau = spec.tau();
    let (ct, st) = (tau.sqrt(), (1.0 - tau).sqrt());
    let mut t = DMatrix::zeros(4, 4);
    t.view_mut((0, 0), (2, 2))
        .copy_from(&(DMatrix::identity(2, 2) * ct));
    t.view_mut((0, 2), (2, 2))
        .copy_from(&(DMatrix::identity(2, 2) * st));
    t.view_mut((2, 0), (2, 2))
        .copy_from(&(DMatrix::identity(2, 2) * -st));
    t.view_mut((2, 2), (2, 2))
        .copy_from(&(DMatrix::identity(2, 2) * ct));
    LinearChannel::noiseless(t).expect("orthogonal transform")
}

/// Single-mode phase-space rotation, a -> a e^{-i theta}.
pub fn rotation_channel(theta: f64) -> LinearChannel {
    let (c, s) = (theta.cos(), theta.sin());
    LinearChannel::noiseless(DMatrix::from_row_slice(2, 2, &[c, s, -s, c]))
        .expect("rotation transform")
}

/// Convenience: equal loss applied to both modes of a two-mode system.
pub fn two_mode_loss(spec: &LossSpec) -> Result<LinearChannel, GaussianError> {
    let single = loss_channel(spec);
    compose(&single.embed(0, 2)?, &single.embed(1, 2)?)
}

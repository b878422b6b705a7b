//! Entropy, entanglement, and security observables of Gaussian states.
//!
//! Entropies are von Neumann entropies in nats, computed from the symplectic
//! spectrum through
//! `f(x) = (2x + 1/2) ln(2x + 1/2) - (2x - 1/2) ln(2x - 1/2)`
//! with the 0·ln 0 = 0 convention at the vacuum value x = 1/4. The
//! entanglement witness is the negativity kernel built from the smallest
//! symplectic eigenvalue of the partial transpose, normalized so that the
//! vacuum gives exactly zero in this variance convention.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::gaussian::{
    symplectic_eigenvalues_of, GaussianError, GaussianState, PHYSICALITY_TOL, VACUUM_VARIANCE,
};

/// Logarithm base for reported entropies. Internally everything is in nats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogBase {
    #[default]
    Nats,
    Bits,
}

impl LogBase {
    /// Factor converting a value in nats into this base.
    pub fn from_nats(&self) -> f64 {
        match self {
            LogBase::Nats => 1.0,
            LogBase::Bits => 1.0 / std::f64::consts::LN_2,
        }
    }
}

/// Entropy kernel f(x) in nats; f(1/4) = 0.
pub fn entropy_f(x: f64) -> f64 {
    let plus = 2.0 * x + 0.5;
    let minus = 2.0 * x - 0.5;
    let second = if minus > 0.0 { minus * minus.ln() } else { 0.0 };
    plus * plus.ln() - second
}

fn checked_f(nu: f64) -> Result<f64, GaussianError> {
    if nu < VACUUM_VARIANCE - PHYSICALITY_TOL {
        return Err(GaussianError::Unphysical(nu));
    }
    Ok(entropy_f(nu.max(VACUUM_VARIANCE)))
}

/// Von Neumann entropy in nats of a 1- or 2-mode Gaussian state:
/// f(sqrt(det V)) for one mode, f(nu_+) + f(nu_-) for two.
pub fn von_neumann_entropy(state: &GaussianState) -> Result<f64, GaussianError> {
    match state.mode_count() {
        1 | 2 => state
            .symplectic_eigenvalues()
            .into_iter()
            .map(checked_f)
            .sum(),
        m => Err(GaussianError::UnsupportedModeCount(m)),
    }
}

/// Conditional entropy H(other | condition_on) = H(joint) - H(condition_on)
/// of a two-mode state, in nats. May be negative for entangled states.
pub fn conditional_entropy(
    joint: &GaussianState,
    condition_on: usize,
) -> Result<f64, GaussianError> {
    if joint.mode_count() != 2 {
        return Err(GaussianError::UnsupportedModeCount(joint.mode_count()));
    }
    Ok(von_neumann_entropy(joint)? - von_neumann_entropy(&joint.reduced(condition_on)?)?)
}

/// One-time-pad entropy audit of a joint (C', M) state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyReport {
    /// Entropy of the prepared mode M, nats.
    pub h_m: f64,
    /// Entropy of the feedforward output C', nats.
    pub h_c: f64,
    /// Joint entropy, nats.
    pub h_mc: f64,
    /// Conditional entropy H(M | C'), nats.
    pub h_m_given_c: f64,
    /// delta = H(M) - H(M|C'), nats.
    pub delta: f64,
}

/// Security audit of the one-time-pad condition on a two-mode state with
/// mode 1 = C' (feedforward output) and mode 2 = M (prepared state).
/// delta vanishes exactly for product states.
pub fn otp_delta(joint: &GaussianState) -> Result<EntropyReport, GaussianError> {
    if joint.mode_count() != 2 {
        return Err(GaussianError::UnsupportedModeCount(joint.mode_count()));
    }
    let h_c = von_neumann_entropy(&joint.reduced(0)?)?;
    let h_m = von_neumann_entropy(&joint.reduced(1)?)?;
    let h_mc = von_neumann_entropy(joint)?;
    let h_m_given_c = h_mc - h_c;
    Ok(EntropyReport {
        h_m,
        h_c,
        h_mc,
        h_m_given_c,
        delta: h_m - h_m_given_c,
    })
}

/// Entanglement witness from the partial transpose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegativityResult {
    /// Smallest symplectic eigenvalue of the partially transposed covariance.
    pub nu_tilde_minus: f64,
    /// Negativity kernel (1 - 4 nu) / (4 nu); positive iff entangled.
    pub n_k: f64,
    pub entangled: bool,
}

/// Negativity kernel of a two-mode state: the partial transpose flips the
/// sign of p2; nu~_- below 1/4 (N_k > 0) certifies entanglement.
pub fn negativity_kernel(state: &GaussianState) -> Result<NegativityResult, GaussianError> {
    if state.mode_count() != 2 {
        return Err(GaussianError::UnsupportedModeCount(state.mode_count()));
    }
    let mut pt = state.cov().clone();
    for i in 0..4 {
        pt[(i, 3)] = -pt[(i, 3)];
        pt[(3, i)] = -pt[(3, i)];
    }
    let nu = symplectic_eigenvalues_of(&pt)[0];
    let n_k = (1.0 - 4.0 * nu) / (4.0 * nu);
    Ok(NegativityResult {
        nu_tilde_minus: nu,
        n_k,
        entangled: n_k > 0.0,
    })
}

/// Classicality assessment of the feedforward signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalityReport {
    pub gain_db: f64,
    /// Negativity kernel between the amplified path and Bob's.
    pub n_k: f64,
    /// Local squeezing level of the amplified path, dB below vacuum.
    pub alice_squeezing_db: f64,
    /// No entanglement and no local squeezing.
    pub classical: bool,
}

/// Judges the feedforward signal of a joint (Alice-after-amplifier, Bob)
/// state: classical when it is neither entangled with Bob's mode
/// (N_k <= 0) nor locally squeezed below the vacuum.
pub fn feedforward_classicality(
    joint_before_coupler: &GaussianState,
    gain_db: f64,
) -> Result<ClassicalityReport, GaussianError> {
    let neg = negativity_kernel(joint_before_coupler)?;
    let alice = joint_before_coupler.reduced(0)?;
    let min_var = min_variance(alice.cov());
    let alice_squeezing_db = -10.0 * (min_var / VACUUM_VARIANCE).log10();
    Ok(ClassicalityReport {
        gain_db,
        n_k: neg.n_k,
        alice_squeezing_db,
        classical: neg.n_k <= 0.0 && alice_squeezing_db <= 0.0,
    })
}

/// Smallest eigenvalue of a symmetric 2x2 covariance block.
pub(crate) fn min_variance(cov: &DMatrix<f64>) -> f64 {
    let half_tr = (cov[(0, 0)] + cov[(1, 1)]) / 2.0;
    let rad = ((cov[(0, 0)] - cov[(1, 1)]) / 2.0).hypot(cov[(0, 1)]);
    half_tr - rad
}

/// Level-set ellipse of a single-mode Gaussian Wigner function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WignerEllipse {
    /// Ellipse center (q, p) = state mean.
    pub center: [f64; 2],
    /// Semi-axes, major first.
    pub semi_axes: [f64; 2],
    /// Angle of the major axis from the q-axis, radians in [0, pi).
    pub tilt: f64,
}

/// Contour where the Wigner function equals `level` times its peak,
/// 0 < level < 1. The contour is the ellipse x' V^{-1} x = -2 ln(level);
/// at level = 1/e the semi-axes are sqrt(2 sigma²) along the principal
/// quadratures.
pub fn wigner_contour(state: &GaussianState, level: f64) -> Result<WignerEllipse, GaussianError> {
    if state.mode_count() != 1 {
        return Err(GaussianError::UnsupportedModeCount(state.mode_count()));
    }
    if !(0.0..1.0).contains(&level) || level == 0.0 {
        return Err(GaussianError::Dimension(format!(
            "contour level must lie in (0, 1), got {level}"
        )));
    }
    let cov = state.cov();
    let c2 = -2.0 * level.ln();
    let half_tr = (cov[(0, 0)] + cov[(1, 1)]) / 2.0;
    let rad = ((cov[(0, 0)] - cov[(1, 1)]) / 2.0).hypot(cov[(0, 1)]);
    let (lo, hi) = (half_tr - rad, half_tr + rad);
    let tilt = if rad < 1e-15 {
        0.0
    } else {
        let t = 0.5 * (2.0 * cov[(0, 1)]).atan2(cov[(0, 0)] - cov[(1, 1)]);
        if t < 0.0 {
            t + std::f64::consts::PI
        } else {
            t
        }
    };
    Ok(WignerEllipse {
        center: [state.mean()[0], state.mean()[1]],
        semi_axes: [(c2 * hi).sqrt(), (c2 * lo).max(0.0).sqrt()],
        tilt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::{
        hybrid_ring_channel, loss_channel, squeezer_channel, LossSpec, SqueezerSpec,
    };
    use crate::gaussian::{apply_channel, compose};
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pure_tms(r: f64) -> GaussianState {
        let s1 = squeezer_channel(&SqueezerSpec::new(r, 0.0, 0.0).unwrap());
        let s2 =
            squeezer_channel(&SqueezerSpec::new(r, std::f64::consts::FRAC_PI_2, 0.0).unwrap());
        let prep = compose(&s1.embed(0, 2).unwrap(), &s2.embed(1, 2).unwrap()).unwrap();
        let ch = compose(&hybrid_ring_channel(), &prep).unwrap();
        apply_channel(&GaussianState::vacuum(2), &ch).unwrap()
    }

    fn product_thermals(n1: f64, n2: f64) -> GaussianState {
        let mut cov = DMatrix::identity(4, 4);
        for i in 0..2 {
            cov[(i, i)] = (1.0 + 2.0 * n1) / 4.0;
            cov[(i + 2, i + 2)] = (1.0 + 2.0 * n2) / 4.0;
        }
        GaussianState::new(DVector::zeros(4), cov).unwrap()
    }

    #[test]
    fn vacuum_entropy_is_zero() {
        assert_eq!(von_neumann_entropy(&GaussianState::vacuum(1)).unwrap(), 0.0);
    }

    #[test]
    fn thermal_entropy_closed_form() {
        // f((2n+1)/4) = (n+1) ln(n+1) - n ln n
        for n in [0.04, 0.3, 1.0, 3.7] {
            let h = von_neumann_entropy(&GaussianState::thermal(n, 1).unwrap()).unwrap();
            let expect = (n + 1.0) * (n + 1.0f64).ln() - n * n.ln();
            assert!((h - expect).abs() < 1e-12, "n={n}: {h} vs {expect}");
        }
        let h1 = von_neumann_entropy(&GaussianState::thermal(1.0, 1).unwrap()).unwrap();
        assert!((h1 - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn pure_tms_entropies() {
        for r in [0.5, 0.84, 1.2] {
            let tms = pure_tms(r);
            let joint = von_neumann_entropy(&tms).unwrap();
            assert!(joint.abs() < 1e-9, "pure state entropy {joint}");
            let local = von_neumann_entropy(&tms.reduced(1).unwrap()).unwrap();
            assert!(local > 0.0);
            let cond = conditional_entropy(&tms, 1).unwrap();
            assert!(
                (cond + local).abs() < 1e-9,
                "H(A|B) = -H(B) for pure states"
            );
            assert!(cond < 0.0);
        }
    }

    #[test]
    fn conditional_entropy_of_pure_tms_matches_local_form() {
        let tms = pure_tms(0.5);
        // local states are thermal with sqrt(det A) = cosh(2r)/4
        let nu = 1.0f64.cosh() / 4.0;
        let expect = -entropy_f(nu);
        assert!((conditional_entropy(&tms, 1).unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn product_state_conditional_entropy_and_additivity() {
        let st = product_thermals(1.0, 1.0);
        let h_cond = conditional_entropy(&st, 1).unwrap();
        assert!((h_cond - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
        let h_joint = von_neumann_entropy(&st).unwrap();
        let h_sum = von_neumann_entropy(&st.reduced(0).unwrap()).unwrap()
            + von_neumann_entropy(&st.reduced(1).unwrap()).unwrap();
        assert!((h_joint - h_sum).abs() < 1e-12);
    }

    #[test]
    fn correlated_state_reveals_information() {
        // classical correlation: identical noise added to both q quadratures
        let mut cov = product_thermals(0.5, 0.5).cov().clone();
        let extra = 0.3;
        cov[(0, 0)] += extra;
        cov[(2, 2)] += extra;
        cov[(0, 2)] += extra;
        cov[(2, 0)] += extra;
        let st = GaussianState::new(DVector::zeros(4), cov).unwrap();
        let h_a = von_neumann_entropy(&st.reduced(1).unwrap()).unwrap();
        let h_cond = conditional_entropy(&st, 0).unwrap();
        assert!(h_cond < h_a - 1e-12);
        let report = otp_delta(&st).unwrap();
        assert!(report.delta > 1e-6);
    }

    #[test]
    fn otp_delta_vanishes_for_product_states() {
        let report = otp_delta(&product_thermals(0.8, 0.2)).unwrap();
        assert!(report.delta.abs() < 1e-12);
        assert!((report.h_mc - report.h_m_given_c - report.h_c).abs() < 1e-12);
    }

    #[test]
    fn loss_on_thermal_matches_rescaled_thermal_entropy() {
        let n = 0.6;
        for eps in [0.1, 0.35, 0.7] {
            let out = apply_channel(
                &GaussianState::thermal(n, 1).unwrap(),
                &loss_channel(&LossSpec::new(eps).unwrap()),
            )
            .unwrap();
            let expect =
                von_neumann_entropy(&GaussianState::thermal(n * (1.0 - eps), 1).unwrap()).unwrap();
            assert!((von_neumann_entropy(&out).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_kernel_monotone() {
        let mut prev = 0.0;
        for i in 1..200 {
            let x = 0.25 + i as f64 * 0.05;
            let f = entropy_f(x);
            assert!(f > prev);
            prev = f;
        }
    }

    #[test]
    fn vacuum_negativity_kernel_zero() {
        let res = negativity_kernel(&GaussianState::vacuum(2)).unwrap();
        assert!((res.nu_tilde_minus - 0.25).abs() < 1e-12);
        assert!(res.n_k.abs() < 1e-10);
        assert!(!res.entangled);
    }

    #[test]
    fn pure_tms_negativity_closed_form() {
        // nu~_- = e^{-2r}/4 and N_k = e^{2r} - 1
        for r in [0.5, 0.84, 1.2] {
            let res = negativity_kernel(&pure_tms(r)).unwrap();
            assert!(
                (res.nu_tilde_minus - (-2.0 * r).exp() / 4.0).abs() < 1e-12,
                "r={r}: nu = {}",
                res.nu_tilde_minus
            );
            assert!((res.n_k - ((2.0 * r).exp() - 1.0)).abs() < 1e-10);
            assert!(res.entangled);
        }
    }

    #[test]
    fn separable_states_have_nonpositive_kernel() {
        // product squeezed thermals plus correlated classical noise stay
        // separable; N_k must not turn positive
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..1000 {
            let s1 = squeezer_channel(
                &SqueezerSpec::new(rng.random_range(0.0..1.2), rng.random_range(0.0..3.14), 0.0)
                    .unwrap(),
            );
            let s2 = squeezer_channel(
                &SqueezerSpec::new(rng.random_range(0.0..1.2), rng.random_range(0.0..3.14), 0.0)
                    .unwrap(),
            );
            let prep = compose(&s1.embed(0, 2).unwrap(), &s2.embed(1, 2).unwrap()).unwrap();
            let base = GaussianState::thermal(rng.random_range(0.0..0.5), 2).unwrap();
            let mut cov = apply_channel(&base, &prep).unwrap().cov().clone();
            // classical correlated displacement noise: PSD rank-1 outer products
            for _ in 0..2 {
                let v = DVector::from_fn(4, |_, _| rng.random_range(-0.5..0.5));
                cov += &v * v.transpose() * rng.random_range(0.0..0.5);
            }
            let sym = (&cov + cov.transpose()) * 0.5;
            let st = GaussianState::new(DVector::zeros(4), sym).unwrap();
            let res = negativity_kernel(&st).unwrap();
            assert!(
                res.n_k <= 1e-10,
                "separable state produced N_k = {}",
                res.n_k
            );
        }
    }

    #[test]
    fn classicality_of_pure_tms_without_amplification() {
        let report = feedforward_classicality(&pure_tms(0.84), 0.0).unwrap();
        assert!(report.n_k > 0.0);
        assert!(!report.classical);
    }

    #[test]
    fn vacuum_wigner_contour_is_circle() {
        let e = wigner_contour(&GaussianState::vacuum(1), (-1.0f64).exp()).unwrap();
        assert!((e.semi_axes[0] - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((e.semi_axes[1] - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn diagonal_covariance_contour() {
        let cov = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.15, 0.60]));
        let st = GaussianState::new(DVector::zeros(2), cov).unwrap();
        let e = wigner_contour(&st, (-1.0f64).exp()).unwrap();
        assert!((e.semi_axes[0] - 1.2f64.sqrt()).abs() < 1e-12);
        assert!((e.semi_axes[1] - 0.3f64.sqrt()).abs() < 1e-12);
        // major axis along p
        assert!((e.tilt - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn entropy_rejects_unphysical_input() {
        assert!(matches!(checked_f(0.2), Err(GaussianError::Unphysical(_))));
    }
}

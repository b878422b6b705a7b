//! Gaussian states and Gaussian (linear) channels on quadrature phase space.
//!
//! A state of `m` bosonic modes is the pair (mean, covariance) over the
//! quadrature vector `(q1, p1, ..., qm, pm)` with vacuum variance 1/4.
//! A channel acts affinely, `mean -> T mean`, `cov -> T cov T' + N`, which
//! covers every element of the modeled network: symplectic transforms have
//! `N = 0`, losses and classical noise injection have contractive `T` and
//! positive semidefinite `N`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Vacuum variance per quadrature in this convention.
pub const VACUUM_VARIANCE: f64 = 0.25;

/// Tolerance on covariance symmetry, max |V - V'| elementwise.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Slack below the Heisenberg bound nu >= 1/4 allowed for rounding
/// accumulated over a chain of channels.
pub const PHYSICALITY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GaussianError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("covariance not symmetric: max |V - V'| = {0:.3e}")]
    NotSymmetric(f64),
    #[error("unphysical covariance: smallest symplectic eigenvalue {0:.9} < 1/4")]
    Unphysical(f64),
    #[error("added noise matrix not positive semidefinite: min eigenvalue {0:.3e}")]
    NoiseNotPsd(f64),
    #[error("channel produced an unphysical state (smallest symplectic eigenvalue {0:.9}); the channel violates complete positivity")]
    MalformedChannel(f64),
    #[error("operation supports 1 or 2 modes, got {0}")]
    UnsupportedModeCount(usize),
    #[error("moment set is not Hermitian-consistent: |m(k) - conj(m(k*))| = {0:.3e}")]
    NotHermitian(f64),
    #[error("incomplete moment set: missing entry {0}")]
    MissingMoment(String),
}

/// Mean vector and covariance matrix of `m` bosonic modes.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mode_count: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state, enforcing symmetry and the Heisenberg bound.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, GaussianError> {
        let dim = mean.len();
        if dim == 0 || dim % 2 != 0 || cov.nrows() != dim || cov.ncols() != dim {
            return Err(GaussianError::Dimension(format!(
                "mean length {} and covariance {}x{} must be 2m x 2m",
                dim,
                cov.nrows(),
                cov.ncols()
            )));
        }
        let asym = max_abs(&(cov.clone() - cov.transpose()));
        if asym > SYMMETRY_TOL {
            return Err(GaussianError::NotSymmetric(asym));
        }
        let state = Self {
            mode_count: dim / 2,
            mean,
            cov,
        };
        let nu_min = state
            .symplectic_eigenvalues()
            .first()
            .copied()
            .unwrap_or(f64::NAN);
        if !(nu_min >= VACUUM_VARIANCE - PHYSICALITY_TOL) {
            return Err(GaussianError::Unphysical(nu_min));
        }
        Ok(state)
    }

    /// `m`-mode vacuum.
    pub fn vacuum(mode_count: usize) -> Self {
        Self::thermal(0.0, mode_count).expect("vacuum is physical")
    }

    /// `m` uncorrelated thermal modes with `n_photons` each
    /// (variance (1 + 2n)/4 per quadrature, zero mean).
    pub fn thermal(n_photons: f64, mode_count: usize) -> Result<Self, GaussianError> {
        if n_photons < 0.0 {
            return Err(GaussianError::Unphysical((1.0 + 2.0 * n_photons) / 4.0));
        }
        let dim = 2 * mode_count;
        Self::new(
            DVector::zeros(dim),
            DMatrix::identity(dim, dim) * ((1.0 + 2.0 * n_photons) / 4.0),
        )
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Symplectic spectrum, sorted ascending; physical states satisfy
    /// nu_i >= 1/4.
    ///
    /// Single mode: sqrt(det V). Two modes: nu_± from
    /// Delta = det A + det B + 2 det C via
    /// nu_±² = (Delta ± sqrt(Delta² - 4 det V)) / 2. Larger systems fall back
    /// to the eigenvalues of Omega·V.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        symplectic_eigenvalues_of(&self.cov)
    }

    /// Reduced single-mode state of `mode` (0-based).
    pub fn reduced(&self, mode: usize) -> Result<Self, GaussianError> {
        if mode >= self.mode_count {
            return Err(GaussianError::Dimension(format!(
                "mode {} out of range for {} modes",
                mode, self.mode_count
            )));
        }
        let i = 2 * mode;
        let mean = DVector::from_column_slice(&[self.mean[i], self.mean[i + 1]]);
        let cov = self.cov.view((i, i), (2, 2)).into_owned();
        Self::new(mean, cov)
    }

    /// Purity 1/(4^m sqrt(det V)); 1 for pure states.
    pub fn purity(&self) -> f64 {
        let det = self.cov.determinant().max(0.0);
        1.0 / (4f64.powi(self.mode_count as i32) * det.sqrt())
    }

    /// Total mean photon number, sum over modes of <a_i† a_i>.
    pub fn total_mean_photons(&self) -> f64 {
        (0..self.mode_count)
            .map(|k| {
                let i = 2 * k;
                self.cov[(i, i)] + self.cov[(i + 1, i + 1)] - 0.5
                    + self.mean[i].powi(2)
                    + self.mean[i + 1].powi(2)
            })
            .sum()
    }
}

/// Symplectic spectrum of a covariance matrix, ascending.
///
/// Computed from the spectrum of W'W with W = V^{1/2} Omega V^{1/2}: W is
/// skew-symmetric, so W'W = -W² is symmetric positive semidefinite with
/// eigenvalues nu_i² doubled. This avoids the catastrophic cancellation of
/// the textbook Delta-discriminant form near pure states, keeping full
/// double precision (the closed form loses half the digits there; see
/// [`two_mode_symplectic_closed_form`]).
pub fn symplectic_eigenvalues_of(cov: &DMatrix<f64>) -> Vec<f64> {
    let m = cov.nrows() / 2;
    if m == 1 {
        let det = cov[(0, 0)] * cov[(1, 1)] - cov[(0, 1)] * cov[(1, 0)];
        return vec![det.max(0.0).sqrt()];
    }
    let eig = cov.clone().symmetric_eigen();
    let sqrt_vals = DVector::from_iterator(
        2 * m,
        eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()),
    );
    let sqrt_cov =
        &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
    let w = &sqrt_cov * symplectic_form(m) * &sqrt_cov;
    let wtw = w.transpose() * &w;
    let mut nu2: Vec<f64> = wtw
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    nu2.sort_by(|x, y| x.partial_cmp(y).unwrap());
    // eigenvalues come in equal pairs; keep one of each
    nu2.into_iter().skip(1).step_by(2).collect()
}

/// Two-mode symplectic eigenvalues from the covariance-block invariants,
/// Delta = det A + det B + 2 det C and
/// nu_±² = (Delta ± sqrt(Delta² - 4 det V)) / 2.
///
/// Algebraically identical to [`symplectic_eigenvalues_of`] but numerically
/// inferior near pure states (the discriminant cancels); kept as an
/// independent cross-check route.
pub fn two_mode_symplectic_closed_form(cov: &DMatrix<f64>) -> (f64, f64) {
    let a = cov.view((0, 0), (2, 2)).into_owned().determinant();
    let b = cov.view((2, 2), (2, 2)).into_owned().determinant();
    let c = cov.view((0, 2), (2, 2)).into_owned().determinant();
    let det = cov.determinant();
    let delta = a + b + 2.0 * c;
    let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
    (
        ((delta - disc) / 2.0).max(0.0).sqrt(),
        ((delta + disc) / 2.0).max(0.0).sqrt(),
    )
}

/// The standard symplectic form, block-diagonal [[0, 1], [-1, 0]] per mode.
pub fn symplectic_form(mode_count: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * mode_count, 2 * mode_count);
    for k in 0..mode_count {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Affine Gaussian channel `mean -> T mean`, `cov -> T cov T' + N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearChannel {
    transform: DMatrix<f64>,
    added_noise: DMatrix<f64>,
}

impl LinearChannel {
    /// Builds a channel, enforcing that the added noise is symmetric
    /// positive semidefinite and shaped consistently with the transform.
    pub fn new(transform: DMatrix<f64>, added_noise: DMatrix<f64>) -> Result<Self, GaussianError> {
        let (rows, cols) = (transform.nrows(), transform.ncols());
        if rows == 0 || rows % 2 != 0 || cols == 0 || cols % 2 != 0 {
            return Err(GaussianError::Dimension(format!(
                "transform must be 2m_out x 2m_in, got {rows}x{cols}"
            )));
        }
        if added_noise.nrows() != rows || added_noise.ncols() != rows {
            return Err(GaussianError::Dimension(format!(
                "added noise must be {rows}x{rows}, got {}x{}",
                added_noise.nrows(),
                added_noise.ncols()
            )));
        }
        let asym = max_abs(&(added_noise.clone() - added_noise.transpose()));
        if asym > SYMMETRY_TOL {
            return Err(GaussianError::NotSymmetric(asym));
        }
        let min_eig = added_noise
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -SYMMETRY_TOL {
            return Err(GaussianError::NoiseNotPsd(min_eig));
        }
        Ok(Self {
            transform,
            added_noise,
        })
    }

    /// Symplectic or contractive channel with no added noise.
    pub fn noiseless(transform: DMatrix<f64>) -> Result<Self, GaussianError> {
        let rows = transform.nrows();
        Self::new(transform, DMatrix::zeros(rows, rows))
    }

    /// Identity channel on `m` modes.
    pub fn identity(mode_count: usize) -> Self {
        let dim = 2 * mode_count;
        Self {
            transform: DMatrix::identity(dim, dim),
            added_noise: DMatrix::zeros(dim, dim),
        }
    }

    pub fn transform(&self) -> &DMatrix<f64> {
        &self.transform
    }

    pub fn added_noise(&self) -> &DMatrix<f64> {
        &self.added_noise
    }

    pub fn input_modes(&self) -> usize {
        self.transform.ncols() / 2
    }

    pub fn output_modes(&self) -> usize {
        self.transform.nrows() / 2
    }

    /// Embeds a single-mode channel at `mode` of an `m`-mode system,
    /// acting as the identity elsewhere.
    pub fn embed(&self, mode: usize, mode_count: usize) -> Result<Self, GaussianError> {
        if self.input_modes() != 1 || self.output_modes() != 1 {
            return Err(GaussianError::Dimension(
                "embed expects a single-mode channel".into(),
            ));
        }
        if mode >= mode_count {
            return Err(GaussianError::Dimension(format!(
                "mode {mode} out of range for {mode_count} modes"
            )));
        }
        let dim = 2 * mode_count;
        let mut t = DMatrix::identity(dim, dim);
        let mut n = DMatrix::zeros(dim, dim);
        let i = 2 * mode;
        t.view_mut((i, i), (2, 2)).copy_from(&self.transform);
        n.view_mut((i, i), (2, 2)).copy_from(&self.added_noise);
        Ok(Self {
            transform: t,
            added_noise: n,
        })
    }
}

/// `second` after `first`: T = T2 T1, N = T2 N1 T2' + N2.
pub fn compose(second: &LinearChannel, first: &LinearChannel) -> Result<LinearChannel, GaussianError> {
    if second.input_modes() != first.output_modes() {
        return Err(GaussianError::Dimension(format!(
            "cannot compose: second expects {} modes, first outputs {}",
            second.input_modes(),
            first.output_modes()
        )));
    }
    let t = &second.transform * &first.transform;
    let n = &second.transform * &first.added_noise * second.transform.transpose()
        + &second.added_noise;
    LinearChannel::new(t, n)
}

/// Pushes a state through a channel. Purely functional.
pub fn apply_channel(
    state: &GaussianState,
    channel: &LinearChannel,
) -> Result<GaussianState, GaussianError> {
    if channel.input_modes() != state.mode_count() {
        return Err(GaussianError::Dimension(format!(
            "channel expects {} modes, state has {}",
            channel.input_modes(),
            state.mode_count()
        )));
    }
    let mean = &channel.transform * state.mean();
    let mut cov =
        &channel.transform * state.cov() * channel.transform.transpose() + &channel.added_noise;
    // matrix products leave ~1e-16 asymmetry; resymmetrize before validating
    let sym = (&cov + cov.transpose()) * 0.5;
    cov.copy_from(&sym);
    GaussianState::new(mean, cov).map_err(|e| match e {
        GaussianError::Unphysical(nu) => GaussianError::MalformedChannel(nu),
        other => other,
    })
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

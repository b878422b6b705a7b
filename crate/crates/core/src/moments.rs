//! Normally ordered signal moments <(a†)^n a^m> of Gaussian states, up to
//! total order 4, for one or two modes.
//!
//! For a Gaussian state the normally ordered characteristic function is a
//! Gaussian, so normally ordered moments factorize over pair contractions
//! (Wick/Isserlis) built from the first moments and the normally ordered
//! central second moments. That closure is what `moments_from_state` uses
//! for orders 3 and 4; `state_from_moments` inverts orders <= 2.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::gaussian::{GaussianError, GaussianState};

/// Exponent tuple of one moment: `(dag1, ann1, dag2, ann2)`, the second pair
/// all zero for single-mode sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct MomentKey(pub [u8; 4]);

impl MomentKey {
    pub fn single(dag: u8, ann: u8) -> Self {
        Self([dag, ann, 0, 0])
    }

    pub fn two(dag1: u8, ann1: u8, dag2: u8, ann2: u8) -> Self {
        Self([dag1, ann1, dag2, ann2])
    }

    pub fn total_order(&self) -> u8 {
        self.0.iter().sum()
    }

    /// Key of the Hermitian-conjugate moment (dagger and annihilation
    /// exponents swapped per mode).
    pub fn conjugate(&self) -> Self {
        let [n1, m1, n2, m2] = self.0;
        Self([m1, n1, m2, n2])
    }
}

impl std::fmt::Display for MomentKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let [n1, m1, n2, m2] = self.0;
        if n2 == 0 && m2 == 0 {
            write!(f, "({n1},{m1})")
        } else {
            write!(f, "({n1},{m1},{n2},{m2})")
        }
    }
}

/// All exponent tuples with total order <= `max_order` for `mode_count`
/// modes, in deterministic (lexicographic) order.
pub fn moment_keys(mode_count: usize, max_order: u8) -> Vec<MomentKey> {
    let mut keys = Vec::new();
    let lim = max_order as i32;
    for n1 in 0..=lim {
        for m1 in 0..=lim - n1 {
            if mode_count == 1 {
                keys.push(MomentKey::single(n1 as u8, m1 as u8));
            } else {
                for n2 in 0..=lim - n1 - m1 {
                    for m2 in 0..=lim - n1 - m1 - n2 {
                        keys.push(MomentKey::two(n1 as u8, m1 as u8, n2 as u8, m2 as u8));
                    }
                }
            }
        }
    }
    keys.sort();
    keys
}

/// Complex signal moments keyed by exponent tuple, total order <= 4.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    mode_count: usize,
    moments: BTreeMap<MomentKey, Complex64>,
}

impl MomentSet {
    pub fn new(
        mode_count: usize,
        moments: BTreeMap<MomentKey, Complex64>,
    ) -> Result<Self, GaussianError> {
        if !(1..=2).contains(&mode_count) {
            return Err(GaussianError::UnsupportedModeCount(mode_count));
        }
        let set = Self {
            mode_count,
            moments,
        };
        set.check_hermitian()?;
        Ok(set)
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn get(&self, key: MomentKey) -> Option<Complex64> {
        if key == MomentKey([0, 0, 0, 0]) {
            return Some(Complex64::new(1.0, 0.0));
        }
        self.moments.get(&key).copied()
    }

    /// Moment value with absent entries read as exact zeros.
    pub fn value(&self, key: MomentKey) -> Complex64 {
        self.get(key).unwrap_or_default()
    }

    /// Moment value, erroring on entries that were never supplied.
    pub fn require(&self, key: MomentKey) -> Result<Complex64, GaussianError> {
        self.get(key)
            .ok_or_else(|| GaussianError::MissingMoment(key.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MomentKey, &Complex64)> {
        self.moments.iter()
    }

    /// True when every key with total order <= 4 is present.
    pub fn is_complete(&self) -> bool {
        moment_keys(self.mode_count, 4)
            .into_iter()
            .all(|k| self.get(k).is_some())
    }

    /// Checks m(k) = conj(m(k*)) within 1e-12 and m(0) = 1.
    pub fn check_hermitian(&self) -> Result<(), GaussianError> {
        if let Some(m0) = self.moments.get(&MomentKey([0, 0, 0, 0])) {
            if (m0 - Complex64::new(1.0, 0.0)).norm() != 0.0 {
                return Err(GaussianError::NotHermitian((m0 - 1.0).norm()));
            }
        }
        let mut worst = 0.0f64;
        for (k, v) in &self.moments {
            if let Some(w) = self.moments.get(&k.conjugate()) {
                worst = worst.max((v - w.conj()).norm());
            }
        }
        if worst > 1e-12 {
            return Err(GaussianError::NotHermitian(worst));
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct Symbol {
    mode: usize,
    dag: bool,
}

struct WickContext {
    /// <a_i>
    alpha: Vec<Complex64>,
    /// <da_i da_j>, symmetric
    pair_aa: DMatrix<Complex64>,
    /// <da_i† da_j>, Hermitian
    pair_da: DMatrix<Complex64>,
}

impl WickContext {
    fn from_state(state: &GaussianState) -> Self {
        let m = state.mode_count();
        let v = state.cov();
        let mean = state.mean();
        let alpha: Vec<Complex64> = (0..m)
            .map(|i| Complex64::new(mean[2 * i], mean[2 * i + 1]))
            .collect();
        let mut pair_aa = DMatrix::zeros(m, m);
        let mut pair_da = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                let (qi, pi, qj, pj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
                // <da_i da_j> = Vqq - Vpp + i (Vq_i p_j + V p_i q_j)
                pair_aa[(i, j)] = Complex64::new(
                    v[(qi, qj)] - v[(pi, pj)],
                    v[(qi, pj)] + v[(pi, qj)],
                );
                // <da_i† da_j> = Vqq + Vpp + i (Vq_i p_j - V p_i q_j) - d_ij/2
                pair_da[(i, j)] = Complex64::new(
                    v[(qi, qj)] + v[(pi, pj)] - if i == j { 0.5 } else { 0.0 },
                    v[(qi, pj)] - v[(pi, qj)],
                );
            }
        }
        Self {
            alpha,
            pair_aa,
            pair_da,
        }
    }

    fn mean(&self, s: Symbol) -> Complex64 {
        if s.dag {
            self.alpha[s.mode].conj()
        } else {
            self.alpha[s.mode]
        }
    }

    /// Contraction of an ordered pair; `x` precedes `y` in normal order
    /// (never an annihilator before a creator).
    fn pair(&self, x: Symbol, y: Symbol) -> Complex64 {
        match (x.dag, y.dag) {
            (true, true) => self.pair_aa[(x.mode, y.mode)].conj(),
            (false, false) => self.pair_aa[(x.mode, y.mode)],
            (true, false) => self.pair_da[(x.mode, y.mode)],
            (false, true) => unreachable!("symbols are kept in normal order"),
        }
    }

    /// Gaussian moment of a normally ordered word: sum over partitions into
    /// singletons (means) and pairs (central contractions).
    fn moment(&self, word: &[Symbol]) -> Complex64 {
        match word.split_first() {
            None => Complex64::new(1.0, 0.0),
            Some((&x, rest)) => {
                let mut acc = self.mean(x) * self.moment(rest);
                for k in 0..rest.len() {
                    let mut sub = rest.to_vec();
                    let y = sub.remove(k);
                    acc += self.pair(x, y) * self.moment(&sub);
                }
                acc
            }
        }
    }
}

/// All signal moments <(a1†)^n1 a1^m1 (a2†)^n2 a2^m2> with total order <= 4.
///
/// Orders 1 and 2 reproduce the mean and covariance exactly; orders 3 and 4
/// are the Gaussian-implied (Wick) values.
pub fn moments_from_state(state: &GaussianState) -> Result<MomentSet, GaussianError> {
    let m = state.mode_count();
    if !(1..=2).contains(&m) {
        return Err(GaussianError::UnsupportedModeCount(m));
    }
    let ctx = WickContext::from_state(state);
    let mut map = BTreeMap::new();
    for key in moment_keys(m, 4) {
        let [n1, m1, n2, m2] = key.0;
        let mut word = Vec::with_capacity(key.total_order() as usize);
        // normal order per mode: daggers first; cross-mode symbols commute
        word.extend(std::iter::repeat_n(Symbol { mode: 0, dag: true }, n1 as usize));
        if m == 2 {
            word.extend(std::iter::repeat_n(Symbol { mode: 1, dag: true }, n2 as usize));
        }
        word.extend(std::iter::repeat_n(Symbol { mode: 0, dag: false }, m1 as usize));
        if m == 2 {
            word.extend(std::iter::repeat_n(Symbol { mode: 1, dag: false }, m2 as usize));
        }
        map.insert(key, ctx.moment(&word));
    }
    MomentSet::new(m, map)
}

/// Reconstructs the Gaussian state implied by the moments of order <= 2.
pub fn state_from_moments(ms: &MomentSet) -> Result<GaussianState, GaussianError> {
    ms.check_hermitian()?;
    let m = ms.mode_count();
    let key1 = |mode: usize, dag: bool| -> MomentKey {
        let mut k = [0u8; 4];
        k[2 * mode + usize::from(!dag)] = 1;
        MomentKey(k)
    };
    let key2 = |a: MomentKey, b: MomentKey| -> MomentKey {
        MomentKey([
            a.0[0] + b.0[0],
            a.0[1] + b.0[1],
            a.0[2] + b.0[2],
            a.0[3] + b.0[3],
        ])
    };

    let mut alpha = vec![Complex64::default(); m];
    for (i, a) in alpha.iter_mut().enumerate() {
        *a = ms.value(key1(i, false));
    }
    let mut mean = DVector::zeros(2 * m);
    for i in 0..m {
        mean[2 * i] = alpha[i].re;
        mean[2 * i + 1] = alpha[i].im;
    }

    let mut cov = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in i..m {
            // central moments <da_i da_j>, <da_i† da_j>
            let aa = ms.value(key2(key1(i, false), key1(j, false))) - alpha[i] * alpha[j];
            let da = ms.value(key2(key1(i, true), key1(j, false))) - alpha[i].conj() * alpha[j];
            let (qi, pi, qj, pj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
            if i == j {
                cov[(qi, qi)] = (aa.re + da.re + 0.5) / 2.0;
                cov[(pi, pi)] = (da.re + 0.5 - aa.re) / 2.0;
                cov[(qi, pi)] = aa.im / 2.0;
                cov[(pi, qi)] = aa.im / 2.0;
            } else {
                cov[(qi, qj)] = (aa.re + da.re) / 2.0;
                cov[(pi, pj)] = (da.re - aa.re) / 2.0;
                cov[(qi, pj)] = (aa.im + da.im) / 2.0;
                cov[(pi, qj)] = (aa.im - da.im) / 2.0;
                cov[(qj, qi)] = cov[(qi, qj)];
                cov[(pj, pi)] = cov[(pi, pj)];
                cov[(pj, qi)] = cov[(qi, pj)];
                cov[(qj, pi)] = cov[(pi, qj)];
            }
        }
    }
    GaussianState::new(mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::{squeezer_channel, SqueezerSpec};
    use crate::gaussian::apply_channel;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn squeezed_vacuum(r: f64, gamma: f64) -> GaussianState {
        apply_channel(
            &GaussianState::vacuum(1),
            &squeezer_channel(&SqueezerSpec::new(r, gamma, 0.0).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn vacuum_moments_vanish() {
        let ms = moments_from_state(&GaussianState::vacuum(1)).unwrap();
        assert_eq!(ms.get(MomentKey::single(1, 1)).unwrap(), Complex64::ZERO);
        assert_eq!(ms.get(MomentKey::single(0, 2)).unwrap(), Complex64::ZERO);
        assert_eq!(ms.get(MomentKey::single(2, 2)).unwrap(), Complex64::ZERO);
    }

    #[test]
    fn thermal_moments() {
        let ms = moments_from_state(&GaussianState::thermal(0.04, 1).unwrap()).unwrap();
        let n = ms.get(MomentKey::single(1, 1)).unwrap();
        assert!((n.re - 0.04).abs() < 1e-15 && n.im == 0.0);
        let n2 = ms.get(MomentKey::single(2, 2)).unwrap();
        assert!((n2.re - 2.0 * 0.04 * 0.04).abs() < 1e-15);
    }

    #[test]
    fn squeezed_vacuum_second_moments() {
        let ms = moments_from_state(&squeezed_vacuum(1.2, 0.0)).unwrap();
        let a2 = ms.get(MomentKey::single(0, 2)).unwrap();
        let n = ms.get(MomentKey::single(1, 1)).unwrap();
        assert!((a2.re - (-(1.2f64.sinh()) * 1.2f64.cosh())).abs() < 1e-12);
        assert!(a2.im.abs() < 1e-14);
        assert!((n.re - 1.2f64.sinh().powi(2)).abs() < 1e-12);
    }

    /// Monte Carlo oracle: sampling the Wigner distribution estimates
    /// symmetrically ordered moments, related to the normally ordered ones
    /// by W[|a|^2] = <a†a> + 1/2 and W[|a|^4] = <(a†)^2 a^2> + 2<a†a> + 1/2.
    #[test]
    fn fourth_moment_matches_monte_carlo_oracle() {
        let state = squeezed_vacuum(1.2, 0.0);
        let (vq, vp) = (state.cov()[(0, 0)], state.cov()[(1, 1)]);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n_samples = 1_000_000usize;
        let (mut s2, mut s4) = (0.0f64, 0.0f64);
        let (mut s2sq, mut s4sq) = (0.0f64, 0.0f64);
        for _ in 0..n_samples {
            let q: f64 = rng.sample::<f64, _>(StandardNormal) * vq.sqrt();
            let p: f64 = rng.sample::<f64, _>(StandardNormal) * vp.sqrt();
            let a2 = q * q + p * p;
            s2 += a2;
            s4 += a2 * a2;
            s2sq += a2 * a2;
            s4sq += a2 * a2 * a2 * a2;
        }
        let nf = n_samples as f64;
        let (m2, m4) = (s2 / nf, s4 / nf);
        let se2 = ((s2sq / nf - m2 * m2) / nf).sqrt();
        let se4 = ((s4sq / nf - m4 * m4) / nf).sqrt();

        let ms = moments_from_state(&state).unwrap();
        let n_pred = ms.get(MomentKey::single(1, 1)).unwrap().re;
        let n2_pred = ms.get(MomentKey::single(2, 2)).unwrap().re;
        assert!(
            (m2 - (n_pred + 0.5)).abs() < 5.0 * se2,
            "order-2 MC oracle: {} vs {}",
            m2,
            n_pred + 0.5
        );
        assert!(
            (m4 - (n2_pred + 2.0 * n_pred + 0.5)).abs() < 5.0 * se4,
            "order-4 MC oracle: {} vs {}",
            m4,
            n2_pred + 2.0 * n_pred + 0.5
        );
        // and the Isserlis closure expressed through order <= 2 moments
        let a2 = ms.get(MomentKey::single(0, 2)).unwrap();
        let isserlis = a2.norm_sqr() + 2.0 * n_pred * n_pred;
        assert!((n2_pred - isserlis).abs() < 1e-12);
    }

    #[test]
    fn state_round_trips_through_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let state = crate::testutil::random_two_mode(&mut rng);
            let back = state_from_moments(&moments_from_state(&state).unwrap()).unwrap();
            let dm = (state.mean() - back.mean()).abs().max();
            let dc = crate::gaussian::max_abs(&(state.cov() - back.cov()));
            assert!(dm < 1e-12 && dc < 1e-12, "round trip drift {dm} {dc}");
        }
    }

    #[test]
    fn thermal_occupation_reconstructs_covariance() {
        let mut map = BTreeMap::new();
        map.insert(MomentKey::single(1, 1), Complex64::new(0.04, 0.0));
        let ms = MomentSet::new(1, map).unwrap();
        let state = state_from_moments(&ms).unwrap();
        assert!((state.cov()[(0, 0)] - 0.27).abs() < 1e-15);
        assert!((state.cov()[(1, 1)] - 0.27).abs() < 1e-15);
    }

    #[test]
    fn unphysical_moments_rejected() {
        let mut map = BTreeMap::new();
        // <a^2> too large for the stated occupation
        map.insert(MomentKey::single(0, 2), Complex64::new(1.0, 0.0));
        map.insert(MomentKey::single(2, 0), Complex64::new(1.0, 0.0));
        map.insert(MomentKey::single(1, 1), Complex64::new(0.0, 0.0));
        let ms = MomentSet::new(1, map).unwrap();
        assert!(matches!(
            state_from_moments(&ms),
            Err(GaussianError::Unphysical(_))
        ));
    }

    #[test]
    fn hermiticity_violation_rejected() {
        let mut map = BTreeMap::new();
        map.insert(MomentKey::single(0, 2), Complex64::new(0.1, 0.0));
        map.insert(MomentKey::single(2, 0), Complex64::new(0.3, 0.0));
        assert!(matches!(
            MomentSet::new(1, map),
            Err(GaussianError::NotHermitian(_))
        ));
    }
}

//! Moment/cumulant machinery for Gaussianity verification and covariance
//! reconstruction from measured quadrature statistics.
//!
//! Cumulants follow the exact combinatorial moment-cumulant recursion (the
//! multivariate relation obtained by differentiating M = e^K), so no series
//! truncation enters. The quadrature <-> signal moment conversion is the
//! exact operator-ordering change of basis: measured quadrature correlation
//! moments are symmetrized (Weyl-ordered) expectations, while signal
//! moments <(a†)^n a^m> are normally ordered, and the two bases are related
//! by an invertible linear map at each total order. The map is built from a
//! small normal-ordering engine using a a† = a†a + 1.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::gaussian::GaussianError;
use crate::moments::{moment_keys, MomentKey, MomentSet};

const MAX_ORDER: u8 = 4;

/// Cumulants keyed like moments; order-(0,0) is 0, order-1 equals the
/// moment, Gaussian sets vanish beyond order 2.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantSet {
    mode_count: usize,
    cumulants: BTreeMap<MomentKey, Complex64>,
}

impl CumulantSet {
    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn get(&self, key: MomentKey) -> Complex64 {
        self.cumulants.get(&key).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MomentKey, &Complex64)> {
        self.cumulants.iter()
    }

    /// Largest |cumulant| over total orders 3 and 4.
    pub fn max_high_order(&self) -> f64 {
        self.cumulants
            .iter()
            .filter(|(k, _)| k.total_order() >= 3)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }
}

fn binom(n: u8, k: u8) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

fn multi_binom(n: &[u8; 4], k: &[u8; 4]) -> f64 {
    (0..4).map(|i| binom(n[i], k[i])).product()
}

/// Multi-indices beta <= base, lexicographic.
fn sub_indices(base: &[u8; 4]) -> Vec<[u8; 4]> {
    let mut out = Vec::new();
    for a in 0..=base[0] {
        for b in 0..=base[1] {
            for c in 0..=base[2] {
                for d in 0..=base[3] {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

fn first_nonzero(idx: &[u8; 4]) -> usize {
    idx.iter().position(|&x| x > 0).expect("nonzero index")
}

/// Cumulants up to order 4 from a complete moment set, via
/// m_alpha = sum_beta C(alpha - e_i, beta) k_{beta + e_i} m_{alpha - e_i - beta}.
///
/// Requires every moment with total order <= 4 to be explicitly present.
pub fn cumulants_from_moments(ms: &MomentSet) -> Result<CumulantSet, GaussianError> {
    if !ms.is_complete() {
        let missing = moment_keys(ms.mode_count(), MAX_ORDER)
            .into_iter()
            .find(|k| ms.get(*k).is_none())
            .expect("incomplete set has a missing key");
        return Err(GaussianError::MissingMoment(missing.to_string()));
    }
    let mut cumulants: BTreeMap<MomentKey, Complex64> = BTreeMap::new();
    let mut keys = moment_keys(ms.mode_count(), MAX_ORDER);
    keys.sort_by_key(|k| (k.total_order(), *k));
    for key in keys {
        if key.total_order() == 0 {
            cumulants.insert(key, Complex64::default());
            continue;
        }
        let i = first_nonzero(&key.0);
        let mut base = key.0;
        base[i] -= 1;
        let mut sum = Complex64::default();
        for beta in sub_indices(&base) {
            let mut shifted = beta;
            shifted[i] += 1;
            if shifted == key.0 {
                continue; // the kappa_alpha term itself
            }
            let mut rest = [0u8; 4];
            for j in 0..4 {
                rest[j] = base[j] - beta[j];
            }
            sum += multi_binom(&base, &beta)
                * cumulants[&MomentKey(shifted)]
                * ms.value(MomentKey(rest));
        }
        cumulants.insert(key, ms.value(key) - sum);
    }
    Ok(CumulantSet {
        mode_count: ms.mode_count(),
        cumulants,
    })
}

/// Inverse relation: rebuilds moments up to order 4 from cumulants.
pub fn moments_from_cumulants(cs: &CumulantSet) -> Result<MomentSet, GaussianError> {
    let mut moments: BTreeMap<MomentKey, Complex64> = BTreeMap::new();
    moments.insert(MomentKey([0, 0, 0, 0]), Complex64::new(1.0, 0.0));
    let mut keys = moment_keys(cs.mode_count(), MAX_ORDER);
    keys.sort_by_key(|k| (k.total_order(), *k));
    for key in keys {
        if key.total_order() == 0 {
            continue;
        }
        let i = first_nonzero(&key.0);
        let mut base = key.0;
        base[i] -= 1;
        let mut sum = Complex64::default();
        for beta in sub_indices(&base) {
            let mut shifted = beta;
            shifted[i] += 1;
            let mut rest = [0u8; 4];
            for j in 0..4 {
                rest[j] = base[j] - beta[j];
            }
            sum += multi_binom(&base, &beta) * cs.get(MomentKey(shifted)) * moments[&MomentKey(rest)];
        }
        moments.insert(key, sum);
    }
    MomentSet::new(cs.mode_count(), moments)
}

/// Outcome of the Gaussianity test on third- and fourth-order cumulants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianityReport {
    pub gaussian: bool,
    /// Largest |cumulant| over total orders 3 and 4.
    pub max_violation: f64,
}

/// A state is compatible with Gaussian statistics when all cumulants of
/// total order 3 and 4 vanish within `tol`.
pub fn gaussianity_check(ms: &MomentSet, tol: f64) -> Result<GaussianityReport, GaussianError> {
    let max_violation = cumulants_from_moments(ms)?.max_high_order();
    Ok(GaussianityReport {
        gaussian: max_violation <= tol,
        max_violation,
    })
}

/// Measured quadrature correlation moments <I1^n Q1^m I2^k Q2^l>, keyed by
/// the per-mode exponent tuple (n, m, k, l); single-mode sets keep the
/// second pair zero. In this convention I = q and Q = p with vacuum
/// variance 1/4, and the recorded values are the symmetrized operator
/// expectations a calibrated receiver reports.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureMoments {
    mode_count: usize,
    moments: BTreeMap<MomentKey, f64>,
}

impl QuadratureMoments {
    pub fn new(mode_count: usize, moments: BTreeMap<MomentKey, f64>) -> Result<Self, GaussianError> {
        if !(1..=2).contains(&mode_count) {
            return Err(GaussianError::UnsupportedModeCount(mode_count));
        }
        Ok(Self {
            mode_count,
            moments,
        })
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn value(&self, key: MomentKey) -> f64 {
        if key == MomentKey([0, 0, 0, 0]) {
            return 1.0;
        }
        self.moments.get(&key).copied().unwrap_or_default()
    }

    pub fn get(&self, key: MomentKey) -> Option<f64> {
        if key == MomentKey([0, 0, 0, 0]) {
            return Some(1.0);
        }
        self.moments.get(&key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MomentKey, &f64)> {
        self.moments.iter()
    }

    pub fn is_complete(&self) -> bool {
        moment_keys(self.mode_count, MAX_ORDER)
            .into_iter()
            .all(|k| self.get(k).is_some())
    }
}

/// Polynomial in one mode's ladder operators, kept in normal order:
/// map (dag, ann) -> coefficient of (a†)^dag a^ann.
type NormalPoly = BTreeMap<(u8, u8), Complex64>;

/// Product of normal-ordered monomials,
/// a^m (a†)^k = sum_j C(m,j) C(k,j) j! (a†)^{k-j} a^{m-j}.
fn normal_mul(lhs: &NormalPoly, rhs: &NormalPoly) -> NormalPoly {
    let mut out = NormalPoly::new();
    for (&(n1, m1), &c1) in lhs {
        for (&(n2, m2), &c2) in rhs {
            let jmax = m1.min(n2);
            let mut fact = 1.0f64; // j! accumulated
            for j in 0..=jmax {
                if j > 0 {
                    fact *= j as f64;
                }
                let coeff = binom(m1, j) * binom(n2, j) * fact;
                let key = (n1 + n2 - j, m1 + m2 - j);
                *out.entry(key).or_default() += c1 * c2 * coeff;
            }
        }
    }
    out
}

/// Weyl-symmetrized monomial {q^n p^m} expanded into normal order: the
/// average over all distinct orderings of the word q..q p..p with
/// q = (a + a†)/2 and p = (a - a†)/(2i).
fn weyl_monomial(n: u8, m: u8) -> NormalPoly {
    let q: NormalPoly = [
        ((0u8, 1u8), Complex64::new(0.5, 0.0)),
        ((1u8, 0u8), Complex64::new(0.5, 0.0)),
    ]
    .into_iter()
    .collect();
    let p: NormalPoly = [
        ((0u8, 1u8), Complex64::new(0.0, -0.5)),
        ((1u8, 0u8), Complex64::new(0.0, 0.5)),
    ]
    .into_iter()
    .collect();
    let one: NormalPoly = [((0u8, 0u8), Complex64::new(1.0, 0.0))].into_iter().collect();

    // distinct arrangements of n q's and m p's as bitmasks over n+m slots
    let len = (n + m) as u32;
    let mut acc = NormalPoly::new();
    let mut count = 0usize;
    for mask in 0u32..(1 << len) {
        if mask.count_ones() != m as u32 {
            continue;
        }
        let mut word = one.clone();
        for slot in 0..len {
            let factor = if (mask >> slot) & 1 == 1 { &p } else { &q };
            word = normal_mul(&word, factor);
        }
        for (k, v) in word {
            *acc.entry(k).or_default() += v;
        }
        count += 1;
    }
    let norm = Complex64::new(1.0 / count.max(1) as f64, 0.0);
    acc.into_iter().map(|(k, v)| (k, v * norm)).collect()
}

/// Per-mode change-of-basis coefficients: weyl[(n,m)] as a combination of
/// normal monomials (k,l).
fn weyl_table() -> BTreeMap<(u8, u8), NormalPoly> {
    let mut table = BTreeMap::new();
    for n in 0..=MAX_ORDER {
        for m in 0..=MAX_ORDER - n {
            table.insert((n, m), weyl_monomial(n, m));
        }
    }
    table
}

/// The full linear map from signal moments to quadrature moments for the
/// given mode count, as a dense complex matrix over the key list.
fn conversion_matrix(mode_count: usize, keys: &[MomentKey]) -> DMatrix<Complex64> {
    let table = weyl_table();
    let index: BTreeMap<MomentKey, usize> =
        keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let mut mat = DMatrix::zeros(keys.len(), keys.len());
    for (row, key) in keys.iter().enumerate() {
        let [n1, m1, n2, m2] = key.0;
        let w1 = &table[&(n1, m1)];
        if mode_count == 1 {
            for (&(k, l), &c) in w1 {
                mat[(row, index[&MomentKey::single(k, l)])] += c;
            }
        } else {
            let w2 = &table[&(n2, m2)];
            for (&(k1, l1), &c1) in w1 {
                for (&(k2, l2), &c2) in w2 {
                    mat[(row, index[&MomentKey::two(k1, l1, k2, l2)])] += c1 * c2;
                }
            }
        }
    }
    mat
}

/// Converts measured quadrature correlation moments into normally ordered
/// signal moments by inverting the exact ordering change of basis.
///
/// Requires the complete raw set up to total order 4.
pub fn quadrature_to_signal_moments(raw: &QuadratureMoments) -> Result<MomentSet, GaussianError> {
    if !raw.is_complete() {
        let missing = moment_keys(raw.mode_count(), MAX_ORDER)
            .into_iter()
            .find(|k| raw.get(*k).is_none())
            .expect("incomplete set has a missing key");
        return Err(GaussianError::MissingMoment(missing.to_string()));
    }
    let keys = moment_keys(raw.mode_count(), MAX_ORDER);
    let mat = conversion_matrix(raw.mode_count(), &keys);
    let rhs = nalgebra::DVector::from_iterator(
        keys.len(),
        keys.iter().map(|k| Complex64::new(raw.value(*k), 0.0)),
    );
    let sol = mat
        .lu()
        .solve(&rhs)
        .expect("ordering change of basis is triangular by total order, hence invertible");
    let mut map = BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        map.insert(*k, sol[i]);
    }
    MomentSet::new(raw.mode_count(), map)
}

/// Forward expansion: symmetrized quadrature moments implied by a set of
/// signal moments. Exact inverse of [`quadrature_to_signal_moments`].
pub fn signal_to_quadrature_moments(ms: &MomentSet) -> Result<QuadratureMoments, GaussianError> {
    if !ms.is_complete() {
        let missing = moment_keys(ms.mode_count(), MAX_ORDER)
            .into_iter()
            .find(|k| ms.get(*k).is_none())
            .expect("incomplete set has a missing key");
        return Err(GaussianError::MissingMoment(missing.to_string()));
    }
    ms.check_hermitian()?;
    let keys = moment_keys(ms.mode_count(), MAX_ORDER);
    let mat = conversion_matrix(ms.mode_count(), &keys);
    let vec = nalgebra::DVector::from_iterator(keys.len(), keys.iter().map(|k| ms.value(*k)));
    let raw = mat * vec;
    let mut map = BTreeMap::new();
    let mut worst_im = 0.0f64;
    for (i, k) in keys.iter().enumerate() {
        worst_im = worst_im.max(raw[i].im.abs());
        map.insert(*k, raw[i].re);
    }
    if worst_im > 1e-10 {
        return Err(GaussianError::NotHermitian(worst_im));
    }
    QuadratureMoments::new(ms.mode_count(), map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::GaussianState;
    use crate::moments::moments_from_state;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn complete_single(entries: &[((u8, u8), Complex64)]) -> MomentSet {
        let mut map = BTreeMap::new();
        for key in moment_keys(1, 4) {
            map.insert(key, Complex64::default());
        }
        map.insert(MomentKey([0, 0, 0, 0]), Complex64::new(1.0, 0.0));
        for ((n, m), v) in entries {
            map.insert(MomentKey::single(*n, *m), *v);
        }
        MomentSet::new(1, map).unwrap()
    }

    #[test]
    fn vacuum_cumulants_vanish() {
        let ms = moments_from_state(&GaussianState::vacuum(1)).unwrap();
        let cs = cumulants_from_moments(&ms).unwrap();
        for (k, v) in cs.iter() {
            if k.total_order() >= 1 {
                assert!(v.norm() < 1e-15, "kappa{k} = {v}");
            }
        }
    }

    #[test]
    fn thermal_cumulants_gaussian() {
        let ms = moments_from_state(&GaussianState::thermal(0.04, 1).unwrap()).unwrap();
        let cs = cumulants_from_moments(&ms).unwrap();
        let k11 = cs.get(MomentKey::single(1, 1));
        assert!((k11.re - 0.04).abs() < 1e-15);
        assert!(cs.max_high_order() < 1e-15);
    }

    #[test]
    fn single_photon_statistics_flagged_non_gaussian() {
        // <a†a> = 1 with <(a†)²a²> = 0 gives kappa(2,2) = -2
        let ms = complete_single(&[((1, 1), Complex64::new(1.0, 0.0))]);
        let cs = cumulants_from_moments(&ms).unwrap();
        assert!((cs.get(MomentKey::single(2, 2)).re + 2.0).abs() < 1e-12);
        let report = gaussianity_check(&ms, 1e-10).unwrap();
        assert!(!report.gaussian);
        assert!((report.max_violation - 2.0).abs() < 1e-12);
    }

    #[test]
    fn perturbed_gaussian_moments_detected_at_tight_tolerance() {
        let base = moments_from_state(&GaussianState::thermal(0.2, 1).unwrap()).unwrap();
        let mut map: BTreeMap<MomentKey, Complex64> =
            base.iter().map(|(k, v)| (*k, *v)).collect();
        let key = MomentKey::single(2, 2);
        map.insert(key, map[&key] + Complex64::new(1e-6, 0.0));
        let ms = MomentSet::new(1, map).unwrap();
        assert!(!gaussianity_check(&ms, 1e-10).unwrap().gaussian);
        assert!(gaussianity_check(&ms, 1e-5).unwrap().gaussian);
    }

    #[test]
    fn moment_cumulant_round_trip_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let st = crate::testutil::random_two_mode(&mut rng);
            let ms = moments_from_state(&st).unwrap();
            let back = moments_from_cumulants(&cumulants_from_moments(&ms).unwrap()).unwrap();
            for (k, v) in ms.iter() {
                assert!(
                    (back.value(*k) - v).norm() < 1e-12,
                    "round trip at {k}: {} vs {}",
                    back.value(*k),
                    v
                );
            }
        }
    }

    #[test]
    fn missing_moment_is_structural_error() {
        let mut map = BTreeMap::new();
        map.insert(MomentKey::single(1, 1), Complex64::new(0.3, 0.0));
        let ms = MomentSet::new(1, map).unwrap();
        assert!(matches!(
            cumulants_from_moments(&ms),
            Err(GaussianError::MissingMoment(_))
        ));
    }

    #[test]
    fn vacuum_raw_moments_give_vacuum_signal_moments() {
        let mut map = BTreeMap::new();
        for key in moment_keys(1, 4) {
            let [n, m, _, _] = key.0;
            // Gaussian with var(q) = var(p) = 1/4, no correlation:
            // <q^n p^m> = (n-1)!! (m-1)!! (1/4)^{(n+m)/2} for even orders
            let val = if n % 2 == 1 || m % 2 == 1 {
                0.0
            } else {
                let dfact = |k: u8| -> f64 {
                    match k {
                        0 => 1.0,
                        2 => 1.0,
                        4 => 3.0,
                        _ => unreachable!(),
                    }
                };
                dfact(n) * dfact(m) * 0.25f64.powi(((n + m) / 2) as i32)
            };
            map.insert(key, val);
        }
        let raw = QuadratureMoments::new(1, map).unwrap();
        let ms = quadrature_to_signal_moments(&raw).unwrap();
        let vac = moments_from_state(&GaussianState::vacuum(1)).unwrap();
        for (k, v) in vac.iter() {
            assert!(
                (ms.value(*k) - v).norm() < 1e-12,
                "vacuum moment {k}: {} vs {}",
                ms.value(*k),
                v
            );
        }
    }

    #[test]
    fn conversion_round_trips_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let st = crate::testutil::random_two_mode(&mut rng);
            let ms = moments_from_state(&st).unwrap();
            let raw = signal_to_quadrature_moments(&ms).unwrap();
            let back = quadrature_to_signal_moments(&raw).unwrap();
            for (k, v) in ms.iter() {
                assert!(
                    (back.value(*k) - v).norm() < 1e-12,
                    "round trip at {k}: {} vs {}",
                    back.value(*k),
                    v
                );
            }
        }
    }

    #[test]
    fn squeezed_vacuum_raw_variances_decode() {
        // raw <I²> = e^{-2r}/4, <Q²> = e^{2r}/4 with Gaussian closure
        let st = {
            use crate::components::{squeezer_channel, SqueezerSpec};
            crate::gaussian::apply_channel(
                &GaussianState::vacuum(1),
                &squeezer_channel(&SqueezerSpec::new(1.2, 0.0, 0.0).unwrap()),
            )
            .unwrap()
        };
        let raw = signal_to_quadrature_moments(&moments_from_state(&st).unwrap()).unwrap();
        assert!((raw.value(MomentKey::single(2, 0)) - (-2.4f64).exp() / 4.0).abs() < 1e-12);
        assert!((raw.value(MomentKey::single(0, 2)) - 2.4f64.exp() / 4.0).abs() < 1e-12);
        let ms = quadrature_to_signal_moments(&raw).unwrap();
        let a2 = ms.value(MomentKey::single(0, 2));
        assert!((a2.re + 1.2f64.sinh() * 1.2f64.cosh()).abs() < 1e-12);
        let n = ms.value(MomentKey::single(1, 1));
        assert!((n.re - 1.2f64.sinh().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn order_two_cross_moment_expansion_is_exact() {
        // <I1 I2> = (<a1 a2> + <a1 a2†> + <a1† a2> + <a1† a2†>)/4: order-2
        // words have no reordering corrections, so the symbolic expansion
        // reduces to the plain multinomial one
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let st = crate::testutil::random_two_mode(&mut rng);
            let ms = moments_from_state(&st).unwrap();
            let raw = signal_to_quadrature_moments(&ms).unwrap();
            let lhs = raw.value(MomentKey::two(1, 0, 1, 0));
            let rhs = (ms.value(MomentKey::two(0, 1, 0, 1))
                + ms.value(MomentKey::two(0, 1, 1, 0))
                + ms.value(MomentKey::two(1, 0, 0, 1))
                + ms.value(MomentKey::two(1, 0, 1, 0)))
                / 4.0;
            assert!((Complex64::new(lhs, 0.0) - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn incomplete_raw_set_rejected() {
        let raw = QuadratureMoments::new(1, BTreeMap::new()).unwrap();
        assert!(matches!(
            quadrature_to_signal_moments(&raw),
            Err(GaussianError::MissingMoment(_))
        ));
    }
}

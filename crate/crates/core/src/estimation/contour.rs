//! Phase-space contours of the preparable-state manifold.
//!
//! The direct contour is the convex hull of the image of the experimental
//! (gain, angle) rectangle's boundary under the map to
//! (gamma_rp in degrees, S_rp in dB). The maximum-error contour grows the
//! hull over parameter sets drawn uniformly from the fit's 95% confidence
//! intervals until the enclosed area stabilizes.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::fit::FitResult;
use crate::protocol::{run_rsp, summarize_prepared, ProtocolError, RspParams};

#[derive(Debug, Error)]
pub enum ContourError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("confidence intervals unavailable; run the fit with free parameters first")]
    IntervalsUnavailable,
    #[error("contour needs at least 2 edge samples per side, got {0}")]
    TooFewSamples(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContourKind {
    Direct,
    MaxError,
}

/// Polygon in the (gamma_rp degrees, S_rp dB) plane.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseSpaceContour {
    pub kind: ContourKind,
    /// Hull vertices in counterclockwise order.
    pub vertices: Vec<[f64; 2]>,
    /// The (gain_db, angle_deg) pair that produced each vertex.
    pub sources: Vec<(f64, f64)>,
    /// Enclosed area, degrees · dB.
    pub area: f64,
    /// Set when the image collapses to (numerically) a point.
    pub degenerate: bool,
    /// Seed used for the max-error sampling; absent for direct contours.
    pub seed: Option<u64>,
    /// Iterations consumed by the max-error expansion.
    pub iterations: Option<usize>,
}

impl PhaseSpaceContour {
    /// Point-in-polygon test (hull is convex, counterclockwise).
    pub fn contains(&self, point: [f64; 2]) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let cross = (b[0] - a[0]) * (point[1] - a[1]) - (b[1] - a[1]) * (point[0] - a[0]);
            if cross < 0.0 {
                return false;
            }
        }
        true
    }
}

/// Counterclockwise convex hull (monotone chain), carrying a payload per
/// point. Collinear points are dropped.
fn convex_hull<T: Copy>(mut pts: Vec<([f64; 2], T)>) -> Vec<([f64; 2], T)> {
    pts.sort_by(|a, b| {
        a.0[0]
            .partial_cmp(&b.0[0])
            .unwrap()
            .then(a.0[1].partial_cmp(&b.0[1]).unwrap())
    });
    pts.dedup_by(|a, b| a.0 == b.0);
    let n = pts.len();
    if n < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| -> f64 {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<([f64; 2], T)> = Vec::with_capacity(2 * n);
    for &p in &pts {
        while hull.len() >= 2
            && cross(hull[hull.len() - 2].0, hull[hull.len() - 1].0, p.0) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev() {
        while hull.len() >= lower_len
            && cross(hull[hull.len() - 2].0, hull[hull.len() - 1].0, p.0) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn shoelace(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        acc += a[0] * b[1] - b[0] * a[1];
    }
    acc.abs() / 2.0
}

/// Maps one operating point to the (gamma_rp deg, S_rp dB) plane.
fn image_point(
    params: &RspParams,
    gain_db: f64,
    angle_deg: f64,
) -> Result<[f64; 2], ProtocolError> {
    let p = params.at_feedforward(10f64.powf(gain_db / 10.0), angle_deg.to_radians())?;
    let s = summarize_prepared(&run_rsp(&p)?.prepared)?;
    Ok([s.gamma_rp.to_degrees(), s.s_db])
}

/// Samples the rectangle boundary (counterclockwise, corners included once).
fn boundary_samples(
    gains_db: (f64, f64),
    angles_deg: (f64, f64),
    per_side: usize,
) -> Vec<(f64, f64)> {
    let (g0, g1) = gains_db;
    let (a0, a1) = angles_deg;
    let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / per_side as f64;
    let mut pts = Vec::with_capacity(4 * per_side);
    for i in 0..per_side {
        pts.push((step(g0, g1, i), a0));
    }
    for i in 0..per_side {
        pts.push((g1, step(a0, a1, i)));
    }
    for i in 0..per_side {
        pts.push((step(g1, g0, i), a1));
    }
    for i in 0..per_side {
        pts.push((g0, step(a1, a0, i)));
    }
    pts
}

fn hull_contour(
    params: &RspParams,
    gains_db: (f64, f64),
    angles_deg: (f64, f64),
    per_side: usize,
) -> Result<Vec<([f64; 2], (f64, f64))>, ContourError> {
    if per_side < 2 {
        return Err(ContourError::TooFewSamples(per_side));
    }
    let mut pts = Vec::with_capacity(4 * per_side);
    for (g, a) in boundary_samples(gains_db, angles_deg, per_side) {
        pts.push((image_point(params, g, a)?, (g, a)));
    }
    Ok(convex_hull(pts))
}

const DEGENERATE_AREA: f64 = 1e-9;

/// Contour traced from the fitted parameters over the experimental
/// (gain, angle) rectangle.
pub fn direct_contour(
    params: &RspParams,
    gains_db: (f64, f64),
    angles_deg: (f64, f64),
    edge_samples: usize,
) -> Result<PhaseSpaceContour, ContourError> {
    let hull = hull_contour(params, gains_db, angles_deg, edge_samples)?;
    let vertices: Vec<[f64; 2]> = hull.iter().map(|(v, _)| *v).collect();
    let sources: Vec<(f64, f64)> = hull.iter().map(|(_, s)| *s).collect();
    let area = shoelace(&vertices);
    Ok(PhaseSpaceContour {
        kind: ContourKind::Direct,
        degenerate: area < DEGENERATE_AREA,
        vertices,
        sources,
        area,
        seed: None,
        iterations: None,
    })
}

/// Termination: relative area growth below 0.1% for 25 consecutive
/// iterations.
const STABLE_ITERS: usize = 25;
const AREA_RTOL: f64 = 1e-3;

/// Expands the direct contour over the fit's 95% confidence intervals:
/// each iteration draws every free parameter uniformly from its interval,
/// traces that parameter set's contour, and grows the running hull.
/// Deterministic for a given seed.
pub fn max_error_contour(
    fit: &FitResult,
    gains_db: (f64, f64),
    angles_deg: (f64, f64),
    edge_samples: usize,
    seed: u64,
    max_iterations: usize,
) -> Result<PhaseSpaceContour, ContourError> {
    let intervals = fit
        .confidence_95
        .as_ref()
        .ok_or(ContourError::IntervalsUnavailable)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cloud = hull_contour(&fit.params, gains_db, angles_deg, edge_samples)?;
    let mut area = shoelace(&cloud.iter().map(|(v, _)| *v).collect::<Vec<_>>());
    let mut stable = 0usize;
    let mut iterations = 0usize;

    while stable < STABLE_ITERS && iterations < max_iterations {
        iterations += 1;
        let mut params = fit.params.clone();
        for (param, (lo, hi)) in fit.free.iter().zip(intervals) {
            let (blo, bhi) = param.default_bounds();
            let v = if hi > lo {
                rng.random_range(*lo..*hi)
            } else {
                *lo
            };
            param
                .set(&mut params, v.clamp(blo, bhi))
                .map_err(ContourError::Protocol)?;
        }
        match hull_contour(&params, gains_db, angles_deg, edge_samples) {
            Ok(hull) => cloud.extend(hull),
            // a drawn parameter set may be unphysical end to end; skip it
            Err(ContourError::Protocol(_)) => continue,
            Err(e) => return Err(e),
        }
        cloud = convex_hull(cloud);
        let new_area = shoelace(&cloud.iter().map(|(v, _)| *v).collect::<Vec<_>>());
        debug_assert!(new_area >= area - 1e-12, "hull union cannot shrink");
        if new_area <= area * (1.0 + AREA_RTOL) + f64::MIN_POSITIVE {
            stable += 1;
        } else {
            stable = 0;
        }
        area = new_area;
    }

    let vertices: Vec<[f64; 2]> = cloud.iter().map(|(v, _)| *v).collect();
    let sources: Vec<(f64, f64)> = cloud.iter().map(|(_, s)| *s).collect();
    Ok(PhaseSpaceContour {
        kind: ContourKind::MaxError,
        degenerate: area < DEGENERATE_AREA,
        vertices,
        sources,
        area,
        seed: Some(seed),
        iterations: Some(iterations),
    })
}

//! Feedforward sweeps, model fitting, and phase-space contours.

mod contour;
mod fit;
mod simplex;

pub use contour::{direct_contour, max_error_contour, ContourKind, PhaseSpaceContour};
pub use fit::{
    fit_model, FitOptions, FitResult, FreeParam, ObservableWeights, ResidualRms,
};

use serde::Serialize;

use crate::observables::{otp_delta, EntropyReport};
use crate::protocol::{run_rsp, summarize_prepared, ProtocolError, PreparedStateSummary, RspParams};

/// One sweep cell: prepared-state summary plus the optional security audit.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub gain_db: f64,
    pub angle_deg: f64,
    pub summary: PreparedStateSummary,
    pub entropy: Option<EntropyReport>,
}

/// Rectangular sweep over feedforward gain (dB) and angle (degrees),
/// cells stored gain-major in axis order.
#[derive(Debug, Clone, Serialize)]
pub struct SweepGrid {
    pub gains_db: Vec<f64>,
    pub angles_deg: Vec<f64>,
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    pub fn cell(&self, gain_idx: usize, angle_idx: usize) -> &SweepCell {
        &self.cells[gain_idx * self.angles_deg.len() + angle_idx]
    }

    /// Index pair of the maximum-purity cell.
    pub fn argmax_purity(&self) -> (usize, usize) {
        self.arg_best(|c| c.summary.purity, f64::gt)
    }

    /// Index pair of the minimum-delta cell; requires entropy data.
    pub fn argmin_delta(&self) -> Option<(usize, usize)> {
        if self.cells.iter().any(|c| c.entropy.is_none()) {
            return None;
        }
        Some(self.arg_best(|c| c.entropy.as_ref().unwrap().delta, f64::lt))
    }

    fn arg_best(
        &self,
        score: impl Fn(&SweepCell) -> f64,
        better: impl Fn(&f64, &f64) -> bool,
    ) -> (usize, usize) {
        let mut best = (0usize, 0usize);
        let mut best_score = score(self.cell(0, 0));
        for i in 0..self.gains_db.len() {
            for j in 0..self.angles_deg.len() {
                let s = score(self.cell(i, j));
                if better(&s, &best_score) {
                    best_score = s;
                    best = (i, j);
                }
            }
        }
        best
    }
}

/// Evaluates the chain over the grid; cell order is deterministic
/// (gains outer, angles inner).
pub fn run_sweep(
    params: &RspParams,
    gains_db: &[f64],
    angles_deg: &[f64],
    with_entropy: bool,
) -> Result<SweepGrid, ProtocolError> {
    if gains_db.is_empty() || angles_deg.is_empty() {
        return Err(ProtocolError::Spec(
            crate::components::SpecError::GainBelowUnity(f64::NAN),
        ));
    }
    if let Some(bad) = gains_db.iter().find(|g| **g < 0.0 || !g.is_finite()) {
        return Err(ProtocolError::Spec(
            crate::components::SpecError::GainBelowUnity(10f64.powf(*bad / 10.0)),
        ));
    }
    let mut cells = Vec::with_capacity(gains_db.len() * angles_deg.len());
    for &gain_db in gains_db {
        for &angle_deg in angles_deg {
            let p = params.at_feedforward(10f64.powf(gain_db / 10.0), angle_deg.to_radians())?;
            let out = run_rsp(&p)?;
            let summary = summarize_prepared(&out.prepared)?;
            let entropy = if with_entropy {
                Some(otp_delta(&out.joint)?)
            } else {
                None
            };
            cells.push(SweepCell {
                gain_db,
                angle_deg,
                summary,
                entropy,
            });
        }
    }
    Ok(SweepGrid {
        gains_db: gains_db.to_vec(),
        angles_deg: angles_deg.to_vec(),
        cells,
    })
}

/// Evenly spaced inclusive grid.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    (0..count)
        .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Wraps an angle difference in degrees into (-90, +90], the natural range
/// for squeezing angles defined modulo 180.
pub fn wrap_angle_deg(x: f64) -> f64 {
    let mut y = x.rem_euclid(180.0);
    if y > 90.0 {
        y -= 180.0;
    }
    if y == -90.0 {
        90.0
    } else {
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::RspParams;

    #[test]
    fn single_cell_identity_sweep() {
        let p = RspParams::identity(-15.0).unwrap();
        let grid = run_sweep(&p, &[0.0], &[0.0], true).unwrap();
        assert_eq!(grid.cells.len(), 1);
        let cell = grid.cell(0, 0);
        assert!(cell.summary.s_db.abs() < 1e-12);
        assert!((cell.summary.purity - 1.0).abs() < 1e-12);
        assert!(cell.entropy.as_ref().unwrap().delta.abs() < 1e-12);
    }

    #[test]
    fn grid_ordering_is_gain_major() {
        let p = RspParams::identity(-15.0).unwrap();
        let grid = run_sweep(&p, &[0.0, 3.0], &[-10.0, 10.0], false).unwrap();
        assert_eq!(grid.cells.len(), 4);
        assert_eq!(grid.cell(1, 0).gain_db, 3.0);
        assert_eq!(grid.cell(1, 0).angle_deg, -10.0);
        assert_eq!(grid.cell(0, 1).gain_db, 0.0);
        assert_eq!(grid.cell(0, 1).angle_deg, 10.0);
    }

    #[test]
    fn negative_gain_rejected() {
        let p = RspParams::identity(-15.0).unwrap();
        assert!(run_sweep(&p, &[-1.0], &[0.0], false).is_err());
    }

    #[test]
    fn angle_wrap_range() {
        assert_eq!(wrap_angle_deg(0.0), 0.0);
        assert_eq!(wrap_angle_deg(90.0), 90.0);
        assert_eq!(wrap_angle_deg(-90.0), 90.0);
        assert_eq!(wrap_angle_deg(180.0), 0.0);
        assert_eq!(wrap_angle_deg(170.0), -10.0);
        assert_eq!(wrap_angle_deg(-170.0), 10.0);
        assert!((wrap_angle_deg(271.0) - 91.0 + 180.0).abs() > 0.0); // sanity
        assert_eq!(wrap_angle_deg(271.0), -89.0);
    }
}

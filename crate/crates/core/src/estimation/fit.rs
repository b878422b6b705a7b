//! Joint least-squares fitting of chain parameters to sweep observables.
//!
//! The objective is the weighted sum of squared residuals of squeezing
//! level (dB), antisqueezing level (dB), and squeezing angle (degrees,
//! wrapped into (-90, 90]) over every grid cell. Minimization is a bounded
//! Nelder-Mead simplex with restart-on-stall; 95% confidence intervals come
//! from the local quadratic approximation of the objective with
//! finite-difference curvature.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::simplex::{minimize, SimplexOptions};
use super::{run_sweep, wrap_angle_deg, SweepGrid};
use crate::components::{CouplerSpec, LossSpec, SqueezerSpec};
use crate::protocol::{ProtocolError, RspParams};

/// Model parameters the fitter may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FreeParam {
    /// Squeezer input noise photons (both squeezers when symmetric).
    NoisePhotons,
    /// Squeezing factor r (both squeezers when symmetric).
    SqueezingFactor,
    /// Amplifier noise slope n'_f.
    NoiseSlope,
    /// Coupler coupling beta, dB.
    BetaDb,
    /// Amplifier angle offset theta_f, radians.
    ThetaF,
    /// Output rotation theta_rp, radians.
    ThetaRp,
    /// Unperturbed first-squeezer angle gamma1_0, radians.
    Gamma10,
    /// Crosstalk gain coefficient kappa, radians per unit gain.
    Kappa,
    /// Crosstalk angle coefficient lambda.
    Lambda,
}

impl FreeParam {
    pub const ALL: [FreeParam; 9] = [
        FreeParam::NoisePhotons,
        FreeParam::SqueezingFactor,
        FreeParam::NoiseSlope,
        FreeParam::BetaDb,
        FreeParam::ThetaF,
        FreeParam::ThetaRp,
        FreeParam::Gamma10,
        FreeParam::Kappa,
        FreeParam::Lambda,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FreeParam::NoisePhotons => "noise-photons",
            FreeParam::SqueezingFactor => "squeezing-factor",
            FreeParam::NoiseSlope => "noise-slope",
            FreeParam::BetaDb => "beta-db",
            FreeParam::ThetaF => "theta-f",
            FreeParam::ThetaRp => "theta-rp",
            FreeParam::Gamma10 => "gamma1-0",
            FreeParam::Kappa => "kappa",
            FreeParam::Lambda => "lambda",
        }
    }

    pub fn get(&self, p: &RspParams) -> f64 {
        match self {
            FreeParam::NoisePhotons => p.squeezer1.input_noise_photons,
            FreeParam::SqueezingFactor => p.squeezer1.r,
            FreeParam::NoiseSlope => p.psa.noise_slope,
            FreeParam::BetaDb => p.coupler.beta_db,
            FreeParam::ThetaF => p.psa.theta_f,
            FreeParam::ThetaRp => p.theta_rp,
            FreeParam::Gamma10 => p.crosstalk.gamma1_0,
            FreeParam::Kappa => p.crosstalk.kappa,
            FreeParam::Lambda => p.crosstalk.lambda,
        }
    }

    pub fn set(&self, p: &mut RspParams, value: f64) -> Result<(), ProtocolError> {
        match self {
            FreeParam::NoisePhotons => {
                p.squeezer1 =
                    SqueezerSpec::new(p.squeezer1.r, p.squeezer1.gamma, value)?;
                p.squeezer2 =
                    SqueezerSpec::new(p.squeezer2.r, p.squeezer2.gamma, value)?;
            }
            FreeParam::SqueezingFactor => {
                p.squeezer1 = SqueezerSpec::new(
                    value,
                    p.squeezer1.gamma,
                    p.squeezer1.input_noise_photons,
                )?;
                p.squeezer2 = SqueezerSpec::new(
                    value,
                    p.squeezer2.gamma,
                    p.squeezer2.input_noise_photons,
                )?;
            }
            FreeParam::NoiseSlope => p.psa.noise_slope = value.max(0.0),
            FreeParam::BetaDb => p.coupler = CouplerSpec::new(value)?,
            FreeParam::ThetaF => p.psa.theta_f = value,
            FreeParam::ThetaRp => p.theta_rp = value,
            FreeParam::Gamma10 => p.crosstalk.gamma1_0 = value,
            FreeParam::Kappa => p.crosstalk.kappa = value,
            FreeParam::Lambda => p.crosstalk.lambda = value,
        }
        Ok(())
    }

    /// Wide default search bounds in the parameter's natural units.
    pub fn default_bounds(&self) -> (f64, f64) {
        match self {
            FreeParam::NoisePhotons => (0.0, 2.0),
            FreeParam::SqueezingFactor => (0.0, 3.0),
            FreeParam::NoiseSlope => (0.0, 1.0),
            FreeParam::BetaDb => (-40.0, -1.0),
            FreeParam::ThetaF => (-std::f64::consts::PI, 2.0 * std::f64::consts::PI),
            FreeParam::ThetaRp => (-std::f64::consts::PI, 2.0 * std::f64::consts::PI),
            FreeParam::Gamma10 => (-std::f64::consts::PI, 2.0 * std::f64::consts::PI),
            FreeParam::Kappa => (-0.1, 0.1),
            FreeParam::Lambda => (-1.0, 1.0),
        }
    }

    fn default_scale(&self) -> f64 {
        match self {
            FreeParam::NoisePhotons => 0.02,
            FreeParam::SqueezingFactor => 0.1,
            FreeParam::NoiseSlope => 0.002,
            FreeParam::BetaDb => 0.5,
            FreeParam::ThetaF | FreeParam::ThetaRp | FreeParam::Gamma10 => 0.05,
            FreeParam::Kappa => 0.001,
            FreeParam::Lambda => 0.01,
        }
    }
}

/// Per-observable residual normalization (denominators).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableWeights {
    pub squeezing_db: f64,
    pub antisqueezing_db: f64,
    pub angle_deg: f64,
}

impl Default for ObservableWeights {
    fn default() -> Self {
        Self {
            squeezing_db: 1.0,
            antisqueezing_db: 1.0,
            angle_deg: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub weights: ObservableWeights,
    pub max_evals: usize,
    /// Relative finite-difference step for the curvature estimate.
    pub curvature_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            weights: ObservableWeights::default(),
            max_evals: 10_000,
            curvature_step: 1e-4,
        }
    }
}

/// Root-mean-square residual per observable at the solution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualRms {
    pub squeezing_db: f64,
    pub antisqueezing_db: f64,
    pub angle_deg: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    /// Fitted parameter set (free parameters updated, the rest echoed).
    pub params: RspParams,
    pub free: Vec<FreeParam>,
    /// Fitted values in the order of `free`.
    pub values: Vec<f64>,
    /// 95% confidence intervals per free parameter, when the curvature is
    /// invertible and positive.
    pub confidence_95: Option<Vec<(f64, f64)>>,
    pub residual_rms: ResidualRms,
    /// Weighted sum of squared residuals at the solution.
    pub objective: f64,
    pub converged: bool,
    pub evals: usize,
}

fn objective(
    observed: &SweepGrid,
    params: &RspParams,
    weights: &ObservableWeights,
) -> Result<f64, ProtocolError> {
    let model = run_sweep(params, &observed.gains_db, &observed.angles_deg, false)?;
    let mut acc = 0.0;
    for (obs, pred) in observed.cells.iter().zip(model.cells.iter()) {
        let ds = (pred.summary.s_db - obs.summary.s_db) / weights.squeezing_db;
        let da = (pred.summary.a_db - obs.summary.a_db) / weights.antisqueezing_db;
        let dg = wrap_angle_deg(
            (pred.summary.gamma_rp - obs.summary.gamma_rp).to_degrees(),
        ) / weights.angle_deg;
        acc += ds * ds + da * da + dg * dg;
    }
    Ok(acc)
}

fn residual_rms(
    observed: &SweepGrid,
    params: &RspParams,
) -> Result<ResidualRms, ProtocolError> {
    let model = run_sweep(params, &observed.gains_db, &observed.angles_deg, false)?;
    let n = observed.cells.len() as f64;
    let (mut ss, mut sa, mut sg) = (0.0, 0.0, 0.0);
    for (obs, pred) in observed.cells.iter().zip(model.cells.iter()) {
        ss += (pred.summary.s_db - obs.summary.s_db).powi(2);
        sa += (pred.summary.a_db - obs.summary.a_db).powi(2);
        sg += wrap_angle_deg((pred.summary.gamma_rp - obs.summary.gamma_rp).to_degrees())
            .powi(2);
    }
    Ok(ResidualRms {
        squeezing_db: (ss / n).sqrt(),
        antisqueezing_db: (sa / n).sqrt(),
        angle_deg: (sg / n).sqrt(),
    })
}

/// Fits `free` parameters of `initial` to an observed sweep grid.
///
/// With an empty free list the initial parameters are echoed back with
/// residuals only. The objective value at the solution never exceeds the
/// value at the initial point.
pub fn fit_model(
    observed: &SweepGrid,
    free: &[FreeParam],
    initial: &RspParams,
    bounds: Option<&[(f64, f64)]>,
    opts: &FitOptions,
) -> Result<FitResult, ProtocolError> {
    initial.validate()?;
    let bounds: Vec<(f64, f64)> = match bounds {
        Some(b) => b.to_vec(),
        None => free.iter().map(|p| p.default_bounds()).collect(),
    };

    if free.is_empty() {
        let objective = objective(observed, initial, &opts.weights)?;
        return Ok(FitResult {
            params: initial.clone(),
            free: vec![],
            values: vec![],
            confidence_95: Some(vec![]),
            residual_rms: residual_rms(observed, initial)?,
            objective,
            converged: true,
            evals: 1,
        });
    }

    let x0: Vec<f64> = free.iter().map(|p| p.get(initial)).collect();
    let scale: Vec<f64> = free.iter().map(|p| p.default_scale()).collect();
    let apply = |x: &[f64]| -> Result<RspParams, ProtocolError> {
        let mut p = initial.clone();
        for (param, v) in free.iter().zip(x) {
            param.set(&mut p, *v)?;
        }
        Ok(p)
    };
    let mut eval = |x: &[f64]| -> f64 {
        match apply(x).and_then(|p| objective(observed, &p, &opts.weights)) {
            Ok(v) => v,
            Err(_) => f64::MAX / 4.0,
        }
    };

    let sim_opts = SimplexOptions {
        max_evals: opts.max_evals,
        ..SimplexOptions::default()
    };
    let outcome = minimize(&mut eval, &x0, &scale, &bounds, &sim_opts);
    let params = apply(&outcome.x)?;

    // 95% intervals from the quadratic model around the solution:
    // cov = 2 sigma² H^{-1} with sigma² = F/(N - p)
    let n_obs = 3 * observed.cells.len();
    let p_free = free.len();
    let confidence_95 = if n_obs > p_free {
        curvature(&mut eval, &outcome.x, &bounds, opts.curvature_step).and_then(|h| {
            let sigma2 = outcome.f / (n_obs - p_free) as f64;
            let cov = h.try_inverse()? * (2.0 * sigma2);
            let mut intervals = Vec::with_capacity(p_free);
            for i in 0..p_free {
                let var = cov[(i, i)];
                if !(var.is_finite() && var >= 0.0) {
                    return None;
                }
                let half = 1.959963984540054 * var.sqrt();
                intervals.push((outcome.x[i] - half, outcome.x[i] + half));
            }
            Some(intervals)
        })
    } else {
        None
    };

    Ok(FitResult {
        residual_rms: residual_rms(observed, &params)?,
        values: outcome.x.clone(),
        free: free.to_vec(),
        params,
        confidence_95,
        objective: outcome.f,
        converged: outcome.converged,
        evals: outcome.evals,
    })
}

/// Central-difference Hessian of the objective; None when any entry is not
/// finite.
fn curvature(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x: &[f64],
    bounds: &[(f64, f64)],
    rel_step: f64,
) -> Option<DMatrix<f64>> {
    let n = x.len();
    let h: Vec<f64> = x
        .iter()
        .map(|v| (v.abs() * rel_step).max(rel_step * rel_step))
        .collect();
    let inside = |y: &[f64]| -> bool {
        y.iter()
            .zip(bounds)
            .all(|(v, (lo, hi))| v >= lo && v <= hi)
    };
    let f0 = f(x);
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h[i];
        xm[i] -= h[i];
        if !inside(&xp) || !inside(&xm) {
            // one-sided fallback at the boundary
            let mut x2 = x.to_vec();
            x2[i] += 2.0 * h[i] * if inside(&xp) { 1.0 } else { -1.0 };
            let x1 = if inside(&xp) { &xp } else { &xm };
            hess[(i, i)] = (f(&x2) - 2.0 * f(x1) + f0) / (h[i] * h[i]);
        } else {
            hess[(i, i)] = (f(&xp) - 2.0 * f0 + f(&xm)) / (h[i] * h[i]);
        }
        for j in 0..i {
            let mut xpp = x.to_vec();
            let mut xpm = x.to_vec();
            let mut xmp = x.to_vec();
            let mut xmm = x.to_vec();
            xpp[i] += h[i];
            xpp[j] += h[j];
            xpm[i] += h[i];
            xpm[j] -= h[j];
            xmp[i] -= h[i];
            xmp[j] += h[j];
            xmm[i] -= h[i];
            xmm[j] -= h[j];
            let v = if [&xpp, &xpm, &xmp, &xmm].iter().all(|y| inside(y)) {
                (f(&xpp) - f(&xpm) - f(&xmp) + f(&xmm)) / (4.0 * h[i] * h[j])
            } else {
                0.0
            };
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    if hess.iter().all(|v| v.is_finite()) {
        Some(hess)
    } else {
        None
    }
}

//! Bounded Nelder-Mead simplex with restart-on-stall.

/// Options for the derivative-free minimizer.
#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Total function-evaluation budget.
    pub max_evals: usize,
    /// Convergence on the simplex f-spread relative to |f_best|.
    pub ftol: f64,
    /// Convergence on the simplex extent relative to the initial scale.
    pub xtol: f64,
    /// Iterations without improvement before restarting around the best
    /// point with a shrunken scale.
    pub stall_iters: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_evals: 10_000,
            ftol: 1e-12,
            xtol: 1e-9,
            stall_iters: 120,
        }
    }
}

pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

fn clamp(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, (lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(*lo, *hi);
    }
}

/// Minimizes `f` within box `bounds`, starting at `x0` with per-coordinate
/// initial steps `scale`. Standard reflection/expansion/contraction/shrink
/// coefficients (1, 2, 1/2, 1/2); candidates are projected into the box.
pub fn minimize(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    scale: &[f64],
    bounds: &[(f64, f64)],
    opts: &SimplexOptions,
) -> SimplexOutcome {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        f(x)
    };

    let mut best_x = x0.to_vec();
    clamp(&mut best_x, bounds);
    let mut best_f = eval(&best_x, &mut evals);
    let mut shrink_factor = 1.0f64;
    let mut converged = false;

    'restarts: while evals < opts.max_evals {
        // build a fresh simplex around the incumbent best
        let mut simplex: Vec<Vec<f64>> = vec![best_x.clone()];
        for i in 0..n {
            let mut v = best_x.clone();
            let step = scale[i] * shrink_factor;
            v[i] += if v[i] + step <= bounds[i].1 { step } else { -step };
            clamp(&mut v, bounds);
            simplex.push(v);
        }
        let mut fs: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();
        let mut stall = 0usize;

        loop {
            if evals >= opts.max_evals {
                break 'restarts;
            }
            // order ascending by f
            let mut idx: Vec<usize> = (0..=n).collect();
            idx.sort_by(|&a, &b| fs[a].partial_cmp(&fs[b]).unwrap());
            let reorder: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
            let refs: Vec<f64> = idx.iter().map(|&i| fs[i]).collect();
            simplex = reorder;
            fs = refs;

            if fs[0] < best_f - opts.ftol * (1.0 + best_f.abs()) {
                best_f = fs[0];
                best_x = simplex[0].clone();
                stall = 0;
            } else {
                stall += 1;
            }

            let spread = fs[n] - fs[0];
            let extent: f64 = (0..n)
                .map(|i| {
                    simplex
                        .iter()
                        .map(|v| v[i])
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                            (lo.min(x), hi.max(x))
                        })
                })
                .map(|(lo, hi)| ((hi - lo) / scale[..].iter().cloned().fold(f64::MIN, f64::max)).abs())
                .fold(0.0, f64::max);
            if spread <= opts.ftol * (1.0 + fs[0].abs()) && extent <= opts.xtol {
                converged = true;
                break 'restarts;
            }
            if stall >= opts.stall_iters {
                shrink_factor *= 0.3;
                if shrink_factor < 1e-8 {
                    converged = true;
                    break 'restarts;
                }
                continue 'restarts;
            }

            // centroid of all but worst
            let centroid: Vec<f64> = (0..n)
                .map(|i| simplex[..n].iter().map(|v| v[i]).sum::<f64>() / n as f64)
                .collect();
            let worst = simplex[n].clone();
            let mut reflected: Vec<f64> = (0..n)
                .map(|i| centroid[i] + (centroid[i] - worst[i]))
                .collect();
            clamp(&mut reflected, bounds);
            let fr = eval(&reflected, &mut evals);

            if fr < fs[0] {
                let mut expanded: Vec<f64> = (0..n)
                    .map(|i| centroid[i] + 2.0 * (centroid[i] - worst[i]))
                    .collect();
                clamp(&mut expanded, bounds);
                let fe = eval(&expanded, &mut evals);
                if fe < fr {
                    simplex[n] = expanded;
                    fs[n] = fe;
                } else {
                    simplex[n] = reflected;
                    fs[n] = fr;
                }
            } else if fr < fs[n - 1] {
                simplex[n] = reflected;
                fs[n] = fr;
            } else {
                let mut contracted: Vec<f64> = (0..n)
                    .map(|i| centroid[i] + 0.5 * (worst[i] - centroid[i]))
                    .collect();
                clamp(&mut contracted, bounds);
                let fc = eval(&contracted, &mut evals);
                if fc < fs[n] {
                    simplex[n] = contracted;
                    fs[n] = fc;
                } else {
                    // shrink toward the best vertex
                    for k in 1..=n {
                        let v: Vec<f64> = (0..n)
                            .map(|i| simplex[0][i] + 0.5 * (simplex[k][i] - simplex[0][i]))
                            .collect();
                        simplex[k] = v;
                        fs[k] = eval(&simplex[k], &mut evals);
                    }
                }
            }
        }
    }

    SimplexOutcome {
        x: best_x,
        f: best_f,
        evals,
        converged,
    }
}

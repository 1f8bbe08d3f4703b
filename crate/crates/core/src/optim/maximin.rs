//! Maximizes the pointwise minimum of finitely many concave functions over
//! the probability simplex, with a certified upper bound.
//!
//! Two phases: exponentiated-gradient ascent on `min_k f_k` to get a good
//! interior starting point cheaply, then a cutting-plane loop whose master
//! LP value upper-bounds the optimum. The gap between the best evaluated
//! point and the master value is the convergence certificate.

use crate::error::{Error, Result};
use crate::optim::simplex::{lp_solve, LpProblem, LpStatus, Sense};

const EG_ITERS: usize = 300;
const CUT_CAP: usize = 1200;
const CUT_KEEP: usize = 600;

#[derive(Debug, Clone)]
pub struct MaximinResult {
    /// Best evaluated point on the simplex.
    pub x: Vec<f64>,
    /// Certified lower value: `min_k f_k(x)` at the returned point.
    pub value: f64,
    /// Master-LP upper bound on the true maximin value.
    pub upper: f64,
    pub iterations: usize,
}

/// Maximize `min_k f_k(x)` over the `dim`-simplex, where each `f_k` is
/// concave. `eval(k, x)` returns `f_k(x)`; `supergrad(k, x)` a supergradient.
/// Converges when the upper/lower gap is at most `tol`; errors with
/// `NonConvergence` after `max_iters` cutting-plane rounds.
pub fn concave_maximin<F, G>(
    dim: usize,
    num_fns: usize,
    eval: F,
    supergrad: G,
    tol: f64,
    max_iters: usize,
) -> Result<MaximinResult>
where
    F: Fn(usize, &[f64]) -> f64,
    G: Fn(usize, &[f64]) -> Vec<f64>,
{
    if dim == 0 || num_fns == 0 {
        return Err(Error::BadInput("maximin needs dim >= 1 and at least one function".into()));
    }
    let min_all = |x: &[f64]| -> f64 {
        (0..num_fns).map(|k| eval(k, x)).fold(f64::INFINITY, f64::min)
    };
    if dim == 1 {
        let x = vec![1.0];
        let v = min_all(&x);
        return Ok(MaximinResult { x, value: v, upper: v, iterations: 0 });
    }

    // Phase 1: exponentiated-gradient ascent on the minimum, following the
    // supergradient of the lowest-index active function.
    let mut x = vec![1.0 / dim as f64; dim];
    let mut best_x = x.clone();
    let mut lo = min_all(&x);
    for it in 1..=EG_ITERS {
        let vals: Vec<f64> = (0..num_fns).map(|k| eval(k, &x)).collect();
        let vmin = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let active = vals.iter().position(|&v| v <= vmin + 1e-12).unwrap();
        let g = supergrad(active, &x);
        let eta = 1.0 / (it as f64).sqrt();
        let gmax = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi *= (eta * (gi - gmax)).exp();
            z += *xi;
        }
        for xi in &mut x {
            *xi /= z;
            // keep strictly interior so callers can take gradients safely
            *xi = (1.0 - 1e-12) * *xi + 1e-12 / dim as f64;
        }
        let v = min_all(&x);
        if v > lo {
            lo = v;
            best_x.copy_from_slice(&x);
        }
    }

    // Phase 2: cutting planes. Each cut overestimates one f_k everywhere, so
    // the master value is a true upper bound on the maximin optimum.
    let mut cuts: Vec<(usize, f64, Vec<f64>)> = Vec::new(); // (k, offset, slope)
    let add_cuts = |cuts: &mut Vec<(usize, f64, Vec<f64>)>, pt: &[f64]| {
        for k in 0..num_fns {
            let g = supergrad(k, pt);
            let f = eval(k, pt);
            let offset = f - g.iter().zip(pt).map(|(gi, pi)| gi * pi).sum::<f64>();
            cuts.push((k, offset, g));
        }
    };
    add_cuts(&mut cuts, &best_x);
    let uniform = vec![1.0 / dim as f64; dim];
    add_cuts(&mut cuts, &uniform);

    let mut upper = f64::INFINITY;
    for it in 1..=max_iters {
        let sol = solve_master(dim, &cuts)?;
        let t_hat = sol.1;
        upper = upper.min(t_hat);
        let mut x_hat = sol.0;
        // project to strict interior before querying the oracle
        let z: f64 = x_hat.iter().map(|v| v.max(0.0)).sum();
        for v in &mut x_hat {
            *v = (v.max(0.0) / z) * (1.0 - 1e-12) + 1e-12 / dim as f64;
        }
        let v = min_all(&x_hat);
        if v > lo {
            lo = v;
            best_x.copy_from_slice(&x_hat);
        }
        if upper - lo <= tol {
            return Ok(MaximinResult {
                x: best_x,
                value: lo,
                upper: upper.max(lo),
                iterations: it,
            });
        }
        add_cuts(&mut cuts, &x_hat);
        if cuts.len() > CUT_CAP {
            prune_cuts(&mut cuts, &x_hat, t_hat, num_fns);
        }
    }
    Err(Error::NonConvergence(format!(
        "maximin gap {:.3e} above tol {:.3e} after {} rounds",
        upper - lo,
        tol,
        max_iters
    )))
}

/// max t  s.t.  t <= offset_i + slope_i . x,  x in simplex.
fn solve_master(dim: usize, cuts: &[(usize, f64, Vec<f64>)]) -> Result<(Vec<f64>, f64)> {
    let mut c = vec![0.0; dim + 1];
    c[dim] = 1.0;
    let mut a_ub = Vec::with_capacity(cuts.len());
    let mut b_ub = Vec::with_capacity(cuts.len());
    for (_, offset, slope) in cuts {
        let mut row = vec![0.0; dim + 1];
        for (ri, si) in row.iter_mut().zip(slope) {
            *ri = -si;
        }
        row[dim] = 1.0;
        a_ub.push(row);
        b_ub.push(*offset);
    }
    let mut eq = vec![1.0; dim + 1];
    eq[dim] = 0.0;
    let mut bounds = vec![(0.0, f64::INFINITY); dim + 1];
    bounds[dim] = (f64::NEG_INFINITY, f64::INFINITY);
    let prob = LpProblem { sense: Sense::Max, c, a_ub, b_ub, a_eq: vec![eq], b_eq: vec![1.0], bounds };
    let sol = lp_solve(&prob)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::SolverFailure("cutting-plane master LP failed".into()));
    }
    Ok((sol.x[..dim].to_vec(), sol.value))
}

/// Drop the least-binding cuts at the current master optimum, keeping the
/// tightest per function so the master stays bounded and faithful.
fn prune_cuts(cuts: &mut Vec<(usize, f64, Vec<f64>)>, x_hat: &[f64], t_hat: f64, num_fns: usize) {
    let slack = |c: &(usize, f64, Vec<f64>)| -> f64 {
        c.1 + c.2.iter().zip(x_hat).map(|(g, x)| g * x).sum::<f64>() - t_hat
    };
    let mut idx: Vec<usize> = (0..cuts.len()).collect();
    idx.sort_by(|&i, &j| slack(&cuts[i]).partial_cmp(&slack(&cuts[j])).unwrap());
    let mut keep = vec![false; cuts.len()];
    for &i in idx.iter().take(CUT_KEEP) {
        keep[i] = true;
    }
    for k in 0..num_fns {
        if let Some(&i) = idx.iter().find(|&&i| cuts[i].0 == k) {
            keep[i] = true;
        }
    }
    let mut j = 0;
    cuts.retain(|_| {
        let k = keep[j];
        j += 1;
        k
    });
}

//! The aggregate potential on a fixed undirected graph,
//! `F_G(x; K) = sum_i F_i(x_i) + K/2 sum_{edges {j,i}} a_ij |x_j - x_i|^2`,
//! whose negative gradient is the network vector field.

use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::graphs::{lambda2, WeightedDigraph};
use crate::potentials::PotentialSpec;
use crate::report::CheckReport;
use crate::vector::norm;

fn check_setup(potentials: &[PotentialSpec], graph: &WeightedDigraph, gain: f64) -> Result<usize> {
    if !graph.is_symmetric() {
        return Err(Error::Precondition("aggregate potential needs an undirected graph".into()));
    }
    if graph.node_count() != potentials.len() {
        return Err(Error::InvalidInput("graph and potential counts differ".into()));
    }
    if !(gain >= 0.0 && gain.is_finite()) {
        return Err(Error::InvalidInput(format!("coupling gain K must be nonnegative, got {gain}")));
    }
    let m = potentials
        .first()
        .ok_or_else(|| Error::InvalidInput("no potentials".into()))?
        .dimension();
    Ok(m)
}

/// Each undirected edge once, as `(i, j, a_ij)` with `i < j`.
fn edges(graph: &WeightedDigraph) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    graph
        .arcs()
        .iter()
        .filter(|a| a.source < a.target)
        .map(|a| (a.source, a.target, a.weight))
}

pub fn fg_value(
    potentials: &[PotentialSpec],
    graph: &WeightedDigraph,
    gain: f64,
    x: &[f64],
) -> Result<f64> {
    let m = check_setup(potentials, graph, gain)?;
    check_dim(m * potentials.len(), x.len())?;
    let mut total = 0.0;
    for (i, p) in potentials.iter().enumerate() {
        total += p.value(&x[i * m..(i + 1) * m])?;
    }
    for (i, j, a) in edges(graph) {
        let d2: f64 = (0..m).map(|k| (x[j * m + k] - x[i * m + k]).powi(2)).sum();
        total += 0.5 * gain * a * d2;
    }
    Ok(total)
}

/// Gradient of `F_G`, assembled edge by edge.
pub fn fg_gradient(
    potentials: &[PotentialSpec],
    graph: &WeightedDigraph,
    gain: f64,
    x: &[f64],
) -> Result<Vec<f64>> {
    let m = check_setup(potentials, graph, gain)?;
    check_dim(m * potentials.len(), x.len())?;
    let mut g = vec![0.0; x.len()];
    for (i, p) in potentials.iter().enumerate() {
        let f = p.self_dynamics(&x[i * m..(i + 1) * m])?;
        for k in 0..m {
            g[i * m + k] = -f[k];
        }
    }
    for (i, j, a) in edges(graph) {
        for k in 0..m {
            let d = x[i * m + k] - x[j * m + k];
            g[i * m + k] += gain * a * d;
            g[j * m + k] -= gain * a * d;
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FgMinimum {
    pub point: Vec<f64>,
    pub gradient_norm: f64,
    pub iterations: usize,
}

/// Gradient descent with backtracking on `F_G` until `|grad F_G| <= tol`.
///
/// Once the predicted Armijo decrease falls below the rounding level of `F_G`, steps
/// are accepted when they reduce the gradient norm instead.
pub fn minimize_fg(
    potentials: &[PotentialSpec],
    graph: &WeightedDigraph,
    gain: f64,
    x_init: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<FgMinimum> {
    let mut x = x_init.to_vec();
    let mut value = fg_value(potentials, graph, gain, &x)?;
    let mut grad = fg_gradient(potentials, graph, gain, &x)?;
    let mut gnorm = norm(&grad);
    let mut step = 1.0_f64;
    let mut trial = vec![0.0; x.len()];
    for iteration in 0..max_iter {
        if gnorm <= tol {
            return Ok(FgMinimum { point: x, gradient_norm: gnorm, iterations: iteration });
        }
        step = (step * 2.0).min(1e6);
        let g_sq = gnorm * gnorm;
        loop {
            for i in 0..x.len() {
                trial[i] = x[i] - step * grad[i];
            }
            let trial_value = fg_value(potentials, graph, gain, &trial)?;
            let predicted = 1e-4 * step * g_sq;
            let accept = if predicted > 1e-12 * value.abs() {
                trial_value <= value - predicted
            } else {
                norm(&fg_gradient(potentials, graph, gain, &trial)?) < gnorm
            };
            if accept {
                value = trial_value;
                break;
            }
            step *= 0.5;
            if step < 1e-30 {
                return Err(Error::NonConvergence { iterations: iteration, gradient_norm: gnorm });
            }
        }
        std::mem::swap(&mut x, &mut trial);
        grad = fg_gradient(potentials, graph, gain, &x)?;
        gnorm = norm(&grad);
    }
    if gnorm <= tol {
        return Ok(FgMinimum { point: x, gradient_norm: gnorm, iterations: max_iter });
    }
    Err(Error::NonConvergence { iterations: max_iter, gradient_norm: gnorm })
}

/// Checks `sum_i |p_i - p_ave|^2 <= (L0 / (K lambda2))^2 + tol` at a
/// minimizer `p`, with `L0` the norm of the stacked self-gradients at `p`.
pub fn check_spectral_bound(
    p: &[f64],
    potentials: &[PotentialSpec],
    graph: &WeightedDigraph,
    gain: f64,
    tol: f64,
) -> Result<CheckReport> {
    if !(gain > 0.0) {
        return Err(Error::Precondition("spectral bound needs K > 0".into()));
    }
    let m = check_setup(potentials, graph, gain)?;
    let n = potentials.len();
    check_dim(n * m, p.len())?;
    let l2 = lambda2(graph)?;

    let p_ave: Vec<f64> = (0..m)
        .map(|k| (0..n).map(|i| p[i * m + k]).sum::<f64>() / n as f64)
        .collect();
    let lhs: f64 = (0..n)
        .map(|i| (0..m).map(|k| (p[i * m + k] - p_ave[k]).powi(2)).sum::<f64>())
        .sum();
    let mut self_grad = Vec::with_capacity(n * m);
    for (i, spec) in potentials.iter().enumerate() {
        self_grad.extend(spec.self_dynamics(&p[i * m..(i + 1) * m])?);
    }
    let l0 = norm(&self_grad);
    let bound = (l0 / (gain * l2)).powi(2);
    let residual = norm(&fg_gradient(potentials, graph, gain, p)?);
    Ok(CheckReport::new("spectral_bound", lhs <= bound + tol, lhs - bound).with_params(
        serde_json::json!({
            "lhs": lhs,
            "rhs": bound,
            "l0": l0,
            "lambda2": l2,
            "gain": gain,
            "tol": tol,
            "gradient_norm_at_p": residual,
        }),
    ))
}

use crate::error::{Error, Result};

/// Largest `m · n` accepted by [`exact_ot`].
pub const EXACT_OT_MAX_CELLS: usize = 20;

#[derive(Debug, Clone)]
pub struct DenseOt {
    /// `Σ plan · cost` (the transport part, without the entropy term).
    pub value: f64,
    /// Row-major `m × n` coupling.
    pub plan: Vec<f64>,
    pub iters: usize,
}

fn check_problem(cost: &[f64], mu: &[f64], nu: &[f64]) -> Result<()> {
    if cost.len() != mu.len() * nu.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}×{} cost matrix", mu.len(), nu.len()),
            got: format!("{} entries", cost.len()),
        });
    }
    let (sm, sn): (f64, f64) = (mu.iter().sum(), nu.iter().sum());
    if mu.iter().chain(nu).any(|v| !(*v >= 0.0)) || (sm - sn).abs() > 1e-9 * sm.max(sn) {
        return Err(Error::bad_config("marginals must be nonnegative with equal mass"));
    }
    Ok(())
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Full-matrix entropic OT in the log domain, iterated until both marginal
/// L1 errors are below `1e-10`.
///
/// `mu` and `nu` are point masses (weights, not densities).
pub fn dense_ot_small(cost: &[f64], mu: &[f64], nu: &[f64], eps: f64) -> Result<DenseOt> {
    check_problem(cost, mu, nu)?;
    let (m, n) = (mu.len(), nu.len());
    let log_mu: Vec<f64> = mu.iter().map(|v| v.ln()).collect();
    let log_nu: Vec<f64> = nu.iter().map(|v| v.ln()).collect();
    let mut f = vec![0.0; m];
    let mut g = vec![0.0; n];
    let max_iters = 200_000;
    let mut err = f64::INFINITY;
    for iter in 0..max_iters {
        for i in 0..m {
            f[i] = if mu[i] == 0.0 {
                f64::NEG_INFINITY
            } else {
                log_mu[i] - log_sum_exp((0..n).map(|j| g[j] - cost[i * n + j] / eps))
            };
        }
        for j in 0..n {
            g[j] = if nu[j] == 0.0 {
                f64::NEG_INFINITY
            } else {
                log_nu[j] - log_sum_exp((0..m).map(|i| f[i] - cost[i * n + j] / eps))
            };
        }
        if iter % 10 == 0 || iter + 1 == max_iters {
            err = (0..m)
                .map(|i| {
                    let row: f64 = (0..n).map(|j| (f[i] + g[j] - cost[i * n + j] / eps).exp()).sum();
                    (row - mu[i]).abs()
                })
                .sum();
            if err < 1e-10 {
                let plan: Vec<f64> = (0..m * n)
                    .map(|c| (f[c / n] + g[c % n] - cost[c] / eps).exp())
                    .collect();
                let value = plan.iter().zip(cost).map(|(p, c)| p * c).sum();
                return Ok(DenseOt { value, plan, iters: iter + 1 });
            }
        }
    }
    Err(Error::NotConverged { iters: max_iters, err })
}

/// Unregularized OT by exhaustive search over the vertices of the
/// transportation polytope: every basis is a spanning tree of `m + n − 1`
/// cells of the bipartite support graph.
pub fn exact_ot(cost: &[f64], mu: &[f64], nu: &[f64]) -> Result<DenseOt> {
    check_problem(cost, mu, nu)?;
    let (m, n) = (mu.len(), nu.len());
    if m * n > EXACT_OT_MAX_CELLS {
        return Err(Error::bad_config(format!(
            "exact enumeration is limited to {EXACT_OT_MAX_CELLS} cells, got {}",
            m * n
        )));
    }
    let basis = m + n - 1;
    let mut best: Option<DenseOt> = None;
    let mut chosen = Vec::with_capacity(basis);
    enumerate(0, m * n, basis, &mut chosen, &mut |cells| {
        if let Some(plan) = tree_flow(cells, mu, nu) {
            let value = plan.iter().zip(cost).map(|(p, c)| p * c).sum::<f64>();
            if best.as_ref().is_none_or(|b| value < b.value) {
                best = Some(DenseOt { value, plan, iters: 0 });
            }
        }
    });
    best.ok_or_else(|| Error::bad_config("no feasible vertex found"))
}

fn enumerate(start: usize, total: usize, k: usize, chosen: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    for c in start..total {
        if total - c < k - chosen.len() {
            break;
        }
        chosen.push(c);
        enumerate(c + 1, total, k, chosen, visit);
        chosen.pop();
    }
}

/// Flows on a candidate basis by repeatedly settling a row or column that
/// has a single unsettled cell; `None` if the cells do not form a spanning
/// tree or the flows are infeasible.
fn tree_flow(cells: &[usize], mu: &[f64], nu: &[f64]) -> Option<Vec<f64>> {
    let (m, n) = (mu.len(), nu.len());
    let mut row_left = mu.to_vec();
    let mut col_left = nu.to_vec();
    let mut open: Vec<bool> = vec![true; cells.len()];
    let mut plan = vec![0.0; m * n];
    let tol = 1e-12 * mu.iter().sum::<f64>().max(1.0);
    for _ in 0..cells.len() {
        let mut progressed = false;
        for line in 0..m + n {
            let members: Vec<usize> = (0..cells.len())
                .filter(|&t| {
                    open[t] && if line < m { cells[t] / n == line } else { cells[t] % n == line - m }
                })
                .collect();
            if members.len() != 1 {
                continue;
            }
            let t = members[0];
            let (i, j) = (cells[t] / n, cells[t] % n);
            let flow = if line < m { row_left[i] } else { col_left[j] };
            if flow < -tol {
                return None;
            }
            plan[cells[t]] = flow.max(0.0);
            row_left[i] -= flow;
            col_left[j] -= flow;
            open[t] = false;
            progressed = true;
            break;
        }
        if !progressed {
            return None;
        }
    }
    let balanced = row_left.iter().chain(&col_left).all(|r| r.abs() <= tol);
    balanced.then_some(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn identical_diracs_cost_nothing() {
        let cost = [0.0, 1.0, 1.0, 0.0];
        let out = exact_ot(&cost, &[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(out.value, 0.0);
    }

    #[test]
    fn circle_counterexample_by_enumeration() {
        let e = PI / 4.0;
        let d = |a: f64, b: f64| crate::se2::angle_distance(a, b).powi(2);
        let src = [e, 2.0 * PI - e];
        let dst = [e + PI, 3.0 * PI - e];
        let cost: Vec<f64> = src.iter().flat_map(|a| dst.iter().map(move |b| d(*a, *b))).collect();
        let out = exact_ot(&cost, &[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert!((out.value - (PI - 2.0 * e).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn entropic_approaches_exact() {
        let cost = [0.0, 2.0, 1.0, 3.0, 0.5, 1.5, 2.0, 1.0, 0.0, 0.7, 2.2, 0.3];
        let (mu, nu) = ([0.2, 0.5, 0.3], [0.1, 0.4, 0.3, 0.2]);
        let exact = exact_ot(&cost, &mu, &nu).unwrap();
        let ent = dense_ot_small(&cost, &mu, &nu, 0.005).unwrap();
        assert!((ent.value - exact.value).abs() < 1e-2, "{} vs {}", ent.value, exact.value);
        for i in 0..3 {
            let row: f64 = ent.plan[i * 4..i * 4 + 4].iter().sum();
            assert!((row - mu[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn exact_rejects_large_problems() {
        let cost = vec![0.0; 25];
        assert!(exact_ot(&cost, &[0.2; 5], &[0.2; 5]).is_err());
    }
}

use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::{support_of, GridMeasure};
use crate::kernel::GibbsKernel;
use crate::ot::{check_finite, check_kernel, guarded_div};

#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornConfig {
    pub eps: f64,
    pub p: f64,
    pub max_iters: usize,
    /// Stop once the L1 marginal violation (Haar-weighted) drops below this.
    pub marginal_tol: f64,
    /// Emit a report line every `log_every` iterations; 0 disables.
    pub log_every: usize,
}

impl SinkhornConfig {
    pub fn new(eps: f64) -> Self {
        SinkhornConfig {
            eps,
            p: 2.0,
            max_iters: 2000,
            marginal_tol: 1e-6,
            log_every: 0,
        }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn with_max_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.marginal_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::bad_config(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.marginal_tol > 0.0) {
            return Err(Error::bad_config("marginal_tol must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::bad_config("max_iters must be at least 1"));
        }
        Ok(())
    }
}

/// Scaling potentials of the implicit plan `π(g, h) = a(g) K(h⁻¹g) b(h)`.
///
/// After the first iteration `a` and `b` vanish outside the supports of the
/// respective marginals and are positive on them.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingState {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub iter: usize,
    pub marginal_err: f64,
}

impl ScalingState {
    pub fn ones(n: usize) -> Self {
        ScalingState {
            a: vec![1.0; n],
            b: vec![1.0; n],
            iter: 0,
            marginal_err: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SinkhornOutcome {
    /// `W_{p,ε}^p`: transport cost of the entropic plan.
    pub value: f64,
    /// `value^{1/p}`.
    pub distance: f64,
    pub state: ScalingState,
    pub converged: bool,
    /// Marginal error recorded at every checked iteration.
    pub history: Vec<f64>,
    pub guard_hits: usize,
}

/// Entropic Wasserstein distance between `mu` and `nu`.
pub fn sinkhorn_distance(
    mu: &GridMeasure,
    nu: &GridMeasure,
    kernel: &GibbsKernel,
    cfg: &SinkhornConfig,
) -> Result<SinkhornOutcome> {
    sinkhorn(mu, nu, kernel, cfg, None)
}

/// [`sinkhorn_distance`] with `key=value` progress lines written to `report`.
pub fn sinkhorn(
    mu: &GridMeasure,
    nu: &GridMeasure,
    kernel: &GibbsKernel,
    cfg: &SinkhornConfig,
    mut report: Option<&mut dyn Write>,
) -> Result<SinkhornOutcome> {
    check_kernel(kernel, cfg)?;
    mu.grid().check_same(kernel.grid())?;
    nu.grid().check_same(kernel.grid())?;
    let grid = kernel.grid();
    let dh = grid.haar_cell();
    let (m, n) = (mu.density(), nu.density());
    let (supp_mu, supp_nu) = (support_of(m), support_of(n));

    let mut state = ScalingState::ones(grid.len());
    let mut hits = 0;
    let mut history = Vec::new();
    let mut converged = false;
    let mut kb = kernel.convolve_on(&state.b, &supp_mu);
    for iter in 0..cfg.max_iters {
        if iter > 0 {
            // After the b-update the column marginal holds exactly; the row
            // marginal is the one still moving.
            let err: f64 = supp_mu
                .iter()
                .map(|&i| (state.a[i] * kb[i] - m[i]).abs())
                .sum::<f64>()
                * dh;
            state.marginal_err = err;
            history.push(err);
            if let Some(w) = report.as_deref_mut() {
                if cfg.log_every > 0 && iter % cfg.log_every == 0 {
                    writeln!(w, "iter={iter} marginal_err={err:e} guard_hits={hits}")?;
                }
            }
            if err < cfg.marginal_tol {
                converged = true;
                break;
            }
        }
        state.a.iter_mut().for_each(|v| *v = 0.0);
        for &i in &supp_mu {
            state.a[i] = guarded_div(m[i], kb[i], &mut hits);
        }
        check_finite(&state.a, iter)?;
        let kta = kernel.convolve_adjoint_on(&state.a, &supp_nu);
        state.b.iter_mut().for_each(|v| *v = 0.0);
        for &i in &supp_nu {
            state.b[i] = guarded_div(n[i], kta[i], &mut hits);
        }
        check_finite(&state.b, iter)?;
        kb = kernel.convolve_on(&state.b, &supp_mu);
        state.iter = iter + 1;
    }
    if !converged {
        let err: f64 = supp_mu
            .iter()
            .map(|&i| (state.a[i] * kb[i] - m[i]).abs())
            .sum::<f64>()
            * dh;
        state.marginal_err = err;
        history.push(err);
        converged = err < cfg.marginal_tol;
    }

    let value = transport_cost(&state, kernel, &supp_mu);
    let outcome = SinkhornOutcome {
        value,
        distance: value.max(0.0).powf(1.0 / cfg.p),
        state,
        converged,
        history,
        guard_hits: hits,
    };
    if let Some(w) = report {
        writeln!(
            w,
            "converged={} iters={} marginal_err={:e} value={:.17e} distance={:.17e} guard_hits={}",
            outcome.converged,
            outcome.state.iter,
            outcome.state.marginal_err,
            outcome.value,
            outcome.distance,
            outcome.guard_hits
        )?;
    }
    Ok(outcome)
}

/// `Σ_{g,h} a(g) K(h⁻¹g) ρ_b(h⁻¹g)^p b(h) ΔH²`, via the cost-weighted stencil.
pub fn transport_cost(state: &ScalingState, kernel: &GibbsKernel, rows: &[usize]) -> f64 {
    let weighted = kernel.cost_weighted();
    let kcb = weighted.convolve_on(&state.b, rows);
    rows.iter().map(|&i| state.a[i] * kcb[i]).sum::<f64>() * kernel.grid().haar_cell()
}

/// Row and column marginal densities `a ⊙ (K b)` and `b ⊙ (Kᵀ a)`.
pub fn plan_marginals(state: &ScalingState, kernel: &GibbsKernel) -> (Vec<f64>, Vec<f64>) {
    let kb = kernel.convolve(&state.b);
    let kta = kernel.convolve_adjoint(&state.a);
    let row = state.a.iter().zip(&kb).map(|(a, k)| a * k).collect();
    let col = state.b.iter().zip(&kta).map(|(b, k)| b * k).collect();
    (row, col)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{l1_haar, Se2Grid};
    use crate::se2::MetricParams;

    fn small() -> (Se2Grid, MetricParams) {
        (
            Se2Grid::new(8, 8, 4, [0.0, 8.0, 0.0, 8.0]).unwrap(),
            MetricParams::new(1.0, 2.0, 1.0).unwrap(),
        )
    }

    fn bumpy(grid: Se2Grid, seed: usize) -> GridMeasure {
        let d = (0..grid.len())
            .map(|i| ((i * 7 + seed * 13) % 11) as f64 + 0.1)
            .collect();
        GridMeasure::new(grid, d).unwrap()
    }

    #[test]
    fn converged_marginals_match() {
        let (g, m) = small();
        let k = GibbsKernel::build(&g, &m, 1.0, 2.0, 1e-14).unwrap();
        let (mu, nu) = (bumpy(g, 1), bumpy(g, 4));
        let out = sinkhorn_distance(&mu, &nu, &k, &SinkhornConfig::new(1.0)).unwrap();
        assert!(out.converged);
        let (row, col) = plan_marginals(&out.state, &k);
        assert!(l1_haar(&g, &row, mu.density()) < 1e-6);
        assert!(l1_haar(&g, &col, nu.density()) < 1e-6);
        let (mr, mc): (f64, f64) = (row.iter().sum(), col.iter().sum());
        assert!((mr - mc).abs() * g.haar_cell() < 1e-10);
        assert!(out.value > 0.0);
    }

    #[test]
    fn fresh_state_row_is_kernel_of_ones() {
        let (g, m) = small();
        let k = GibbsKernel::build(&g, &m, 1.0, 2.0, 1e-14).unwrap();
        let state = ScalingState::ones(g.len());
        let (row, _) = plan_marginals(&state, &k);
        assert_eq!(row, k.convolve(&vec![1.0; g.len()]));
    }

    #[test]
    fn dirac_pair_recovers_rho_b() {
        let g = Se2Grid::new(16, 16, 8, [0.0, 16.0, 0.0, 16.0]).unwrap();
        let m = MetricParams::new(1.0, 2.0, 1.0).unwrap();
        let (i1, i2) = (g.index(5, 6, 2), g.index(9, 8, 3));
        let rho = m.rho_b(&g.site(i1).relative_to(&g.site(i2)));
        let eps = 0.01 * rho * rho;
        let k = GibbsKernel::build(&g, &m, eps, 2.0, 1e-300).unwrap();
        let out = sinkhorn_distance(
            &GridMeasure::dirac_at(g, i1),
            &GridMeasure::dirac_at(g, i2),
            &k,
            &SinkhornConfig::new(eps),
        )
        .unwrap();
        assert!(out.converged);
        assert!((out.distance - rho).abs() < 0.05 * rho, "{} vs {rho}", out.distance);
    }

    #[test]
    fn invariant_under_quarter_turn() {
        let g = Se2Grid::new(12, 12, 8, [0.0, 12.0, 0.0, 12.0]).unwrap();
        let m = MetricParams::new(1.0, 3.0, 1.0).unwrap();
        let k = GibbsKernel::build(&g, &m, 1.0, 2.0, 1e-12).unwrap();
        let (mu, nu) = (bumpy(g, 2), bumpy(g, 5));
        let q = g.center_rotation(1);
        let cfg = SinkhornConfig::new(1.0).with_tol(1e-10);
        let w = sinkhorn_distance(&mu, &nu, &k, &cfg).unwrap().value;
        let wq = sinkhorn_distance(&mu.pushforward(&q).unwrap(), &nu.pushforward(&q).unwrap(), &k, &cfg)
            .unwrap()
            .value;
        assert!((w - wq).abs() < 1e-9, "{w} vs {wq}");
    }

    #[test]
    fn report_lines_are_key_value() {
        let (g, m) = small();
        let k = GibbsKernel::build(&g, &m, 1.0, 2.0, 1e-14).unwrap();
        let mut cfg = SinkhornConfig::new(1.0);
        cfg.log_every = 1;
        let mut sink = Vec::new();
        sinkhorn(&bumpy(g, 0), &bumpy(g, 3), &k, &cfg, Some(&mut sink)).unwrap();
        let text = String::from_utf8(sink).unwrap();
        assert!(text.lines().count() >= 2);
        for line in text.lines() {
            assert!(line.split(' ').all(|kv| kv.contains('=')));
        }
        assert!(text.lines().last().unwrap().starts_with("converged=true"));
    }

    #[test]
    fn not_converged_is_flagged() {
        let (g, m) = small();
        let k = GibbsKernel::build(&g, &m, 0.05, 2.0, 1e-300).unwrap();
        let cfg = SinkhornConfig::new(0.05).with_max_iters(2).with_tol(1e-14);
        let out = sinkhorn_distance(&bumpy(g, 0), &bumpy(g, 7), &k, &cfg).unwrap();
        assert!(!out.converged);
        assert_eq!(out.state.iter, 2);
    }

    #[test]
    fn mismatched_configuration_is_rejected() {
        let (g, m) = small();
        let k = GibbsKernel::build(&g, &m, 1.0, 2.0, 1e-14).unwrap();
        let mu = bumpy(g, 0);
        assert!(sinkhorn_distance(&mu, &mu, &k, &SinkhornConfig::new(2.0)).is_err());
    }
}

use crate::error::{Error, Result};
use crate::grid::{l1_haar, support_of, GridMeasure};
use crate::kernel::GibbsKernel;
use crate::ot::{check_finite, check_kernel, guarded_div, SinkhornConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterConfig {
    pub lambdas: Vec<f64>,
    pub sinkhorn: SinkhornConfig,
}

impl BarycenterConfig {
    pub fn new(lambdas: Vec<f64>, sinkhorn: SinkhornConfig) -> Self {
        BarycenterConfig { lambdas, sinkhorn }
    }

    pub fn validate(&self) -> Result<()> {
        self.sinkhorn.validate()?;
        if self.lambdas.is_empty() {
            return Err(Error::bad_config("at least one weight is required"));
        }
        if self.lambdas.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(Error::bad_config("weights must be nonnegative"));
        }
        let total: f64 = self.lambdas.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::bad_config(format!("weights must sum to 1, got {total}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BarycenterOutcome {
    pub measure: GridMeasure,
    pub iters: usize,
    pub converged: bool,
    /// L1 difference between the last two iterates.
    pub change: f64,
    pub guard_hits: usize,
}

/// Entropic Wasserstein barycenter by iterated Bregman projections.
///
/// Per outer iteration and input `i`:
/// `w_i = μ_i / (K v_i)`, `d_i = v_i (K w_i)`, `μ = Π_i d_i^{λ_i}`, and then
/// `v_i ← v_i μ / d_i`, starting from `v_i = w_i = 1`.
pub fn barycenter(
    inputs: &[GridMeasure],
    cfg: &BarycenterConfig,
    kernel: &GibbsKernel,
) -> Result<BarycenterOutcome> {
    cfg.validate()?;
    check_kernel(kernel, &cfg.sinkhorn)?;
    if inputs.len() != cfg.lambdas.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} inputs", cfg.lambdas.len()),
            got: format!("{} inputs", inputs.len()),
        });
    }
    for mu in inputs {
        mu.grid().check_same(kernel.grid())?;
    }
    let grid = *kernel.grid();
    let n = grid.len();
    let supports: Vec<Vec<usize>> = inputs.iter().map(|mu| support_of(mu.density())).collect();

    let mut v = vec![vec![1.0; n]; inputs.len()];
    let mut w = vec![vec![1.0; n]; inputs.len()];
    let mut d = vec![vec![0.0; n]; inputs.len()];
    let mut bar = vec![1.0; n];
    let mut hits = 0;
    let mut change = f64::INFINITY;
    let mut converged = false;
    let mut iters = 0;
    while iters < cfg.sinkhorn.max_iters {
        let previous = std::mem::replace(&mut bar, vec![1.0; n]);
        for (i, mu) in inputs.iter().enumerate() {
            // w_i only matters on supp μ_i; it vanishes elsewhere.
            let kv = kernel.convolve_on(&v[i], &supports[i]);
            w[i].iter_mut().for_each(|x| *x = 0.0);
            for &s in &supports[i] {
                w[i][s] = guarded_div(mu.density()[s], kv[s], &mut hits);
            }
            let kw = kernel.convolve(&w[i]);
            for ((di, vi), k) in d[i].iter_mut().zip(&v[i]).zip(&kw) {
                *di = vi * k;
            }
            let lambda = cfg.lambdas[i];
            for (b, di) in bar.iter_mut().zip(&d[i]) {
                *b *= di.powf(lambda);
            }
        }
        for i in 0..inputs.len() {
            for ((vi, b), di) in v[i].iter_mut().zip(&bar).zip(&d[i]) {
                *vi = if *b == 0.0 { 0.0 } else { *vi * guarded_div(*b, *di, &mut hits) };
            }
            check_finite(&v[i], iters)?;
        }
        check_finite(&bar, iters)?;
        iters += 1;
        change = l1_haar(&grid, &bar, &previous);
        if iters > 1 && change < cfg.sinkhorn.marginal_tol {
            converged = true;
            break;
        }
    }
    let measure = GridMeasure::new(grid, bar)?;
    Ok(BarycenterOutcome {
        measure,
        iters,
        converged,
        change,
        guard_hits: hits,
    })
}

/// Displacement interpolation: the barycenter of `(mu, nu)` with weights
/// `(t, 1 − t)`, so `t = 1` returns (a blur of) `mu`.
pub fn interpolate(
    mu: &GridMeasure,
    nu: &GridMeasure,
    t: f64,
    cfg: &SinkhornConfig,
    kernel: &GibbsKernel,
) -> Result<BarycenterOutcome> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::bad_config(format!("t must lie in [0, 1], got {t}")));
    }
    let bc = BarycenterConfig::new(vec![t, 1.0 - t], cfg.clone());
    barycenter(&[mu.clone(), nu.clone()], &bc, kernel)
}

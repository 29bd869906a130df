use crate::error::{Error, Result};
use crate::grid::{support_of, GridMeasure};
use crate::kernel::GibbsKernel;
use crate::ot::{check_finite, check_kernel, guarded_div, SinkhornConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct GradientFlowConfig {
    /// Porous-medium exponent, `m > 1`.
    pub m: f64,
    /// Time step; `0` disables the energy term.
    pub tau: f64,
    pub steps: usize,
    pub newton_tol: f64,
    pub newton_max: usize,
    pub sinkhorn: SinkhornConfig,
}

impl GradientFlowConfig {
    pub fn new(m: f64, tau: f64, sinkhorn: SinkhornConfig) -> Self {
        GradientFlowConfig {
            m,
            tau,
            steps: 10,
            newton_tol: 1e-12,
            newton_max: 60,
            sinkhorn,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sinkhorn.validate()?;
        if !(self.m > 1.0 && self.m.is_finite()) {
            return Err(Error::bad_config(format!("m must exceed 1, got {}", self.m)));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::bad_config(format!("tau must be nonnegative, got {}", self.tau)));
        }
        if !(self.newton_tol > 0.0) || self.newton_max == 0 {
            return Err(Error::bad_config("Newton tolerance and iteration cap must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ProxStats {
    /// Largest stationarity residual over all sites with `z > 0`.
    pub max_residual: f64,
    /// Sites where Newton failed and bisection took over.
    pub fallbacks: usize,
}

impl ProxStats {
    fn merge(&mut self, other: ProxStats) {
        self.max_residual = self.max_residual.max(other.max_residual);
        self.fallbacks += other.fallbacks;
    }
}

/// `F(μ) = Σ μ^m ΔH / (m − 1)`.
pub fn porous_energy(mu: &GridMeasure, m: f64) -> f64 {
    mu.density().iter().map(|v| v.powf(m)).sum::<f64>() * mu.grid().haar_cell() / (m - 1.0)
}

/// Pointwise KL proximal map of `τ F`:
/// `argmin_{s ≥ 0} τ s^m / (m − 1) + ε (s log(s/z) − s + z)`.
///
/// With `u = log s` the minimizer is the root of
/// `A e^{(m−1)u} + u − log z` where `A = τ m / (ε (m − 1))`.
pub fn porous_prox(z: &[f64], cfg: &GradientFlowConfig, eps: f64) -> (Vec<f64>, ProxStats) {
    let m1 = cfg.m - 1.0;
    let scale = cfg.tau * cfg.m / (eps * m1);
    let mut stats = ProxStats::default();
    let s = z
        .iter()
        .map(|&zi| {
            if zi <= 0.0 || scale == 0.0 {
                return zi.max(0.0);
            }
            let target = zi.ln();
            let residual = |u: f64| scale * (m1 * u).exp() + u - target;
            let (u, r) = match newton(&residual, scale, m1, target, cfg) {
                Some(found) => found,
                None => {
                    stats.fallbacks += 1;
                    bisect(&residual, target, cfg.newton_tol)
                }
            };
            stats.max_residual = stats.max_residual.max(r.abs());
            u.exp()
        })
        .collect();
    (s, stats)
}

/// Newton from `u = log z`: the residual is increasing and convex in `u` and
/// nonnegative there, so the iterates decrease monotonically to the root.
fn newton(
    residual: &impl Fn(f64) -> f64,
    scale: f64,
    m1: f64,
    start: f64,
    cfg: &GradientFlowConfig,
) -> Option<(f64, f64)> {
    let mut u = start;
    for _ in 0..cfg.newton_max {
        let e = scale * (m1 * u).exp();
        let r = e + u - start;
        if !r.is_finite() {
            return None;
        }
        if r.abs() <= cfg.newton_tol {
            return Some((u, r));
        }
        let step = r / (m1 * e + 1.0);
        let next = u - step;
        if next == u {
            return (r.abs() <= 1e-10).then_some((u, r));
        }
        u = next;
    }
    let r = residual(u);
    (r.abs() <= cfg.newton_tol).then_some((u, r))
}

fn bisect(residual: &impl Fn(f64) -> f64, start: f64, tol: f64) -> (f64, f64) {
    let mut hi = start;
    let mut width = 50.0;
    let mut lo = start - width;
    while residual(lo) > 0.0 {
        width *= 2.0;
        lo = start - width;
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..2000 {
        mid = 0.5 * (lo + hi);
        let r = residual(mid);
        if r.abs() <= tol || mid == lo || mid == hi {
            break;
        }
        if r > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (mid, residual(mid))
}

#[derive(Debug, Clone)]
pub struct JkoOutcome {
    pub measure: GridMeasure,
    /// `|mass(μ_{k+1}) − mass(μ_k)|` before renormalization.
    pub mass_drift: f64,
    pub iters: usize,
    pub converged: bool,
    pub marginal_err: f64,
    pub prox: ProxStats,
    pub guard_hits: usize,
}

/// One entropic JKO step for the porous-medium energy.
///
/// Scaling iterations `a ← μ_k / (K b)`, `b ← prox(Kᵀa) / (Kᵀa)`; a final
/// `a`-update makes the returned marginal `b (Kᵀa)` carry the mass of `μ_k`.
pub fn jko_step(mu: &GridMeasure, cfg: &GradientFlowConfig, kernel: &GibbsKernel) -> Result<JkoOutcome> {
    cfg.validate()?;
    check_kernel(kernel, &cfg.sinkhorn)?;
    mu.grid().check_same(kernel.grid())?;
    let grid = *kernel.grid();
    let dh = grid.haar_cell();
    let target = mu.density();
    let supp = support_of(target);
    let n = grid.len();

    let mut a = vec![0.0; n];
    let mut b = vec![1.0; n];
    let mut prox = ProxStats::default();
    let mut hits = 0;
    let mut kb = kernel.convolve_on(&b, &supp);
    let mut converged = false;
    let mut err = f64::INFINITY;
    let mut iters = 0;
    let update_a = |a: &mut Vec<f64>, kb: &[f64], hits: &mut usize| {
        a.iter_mut().for_each(|v| *v = 0.0);
        for &i in &supp {
            a[i] = guarded_div(target[i], kb[i], hits);
        }
    };
    while iters < cfg.sinkhorn.max_iters {
        if iters > 0 {
            err = supp.iter().map(|&i| (a[i] * kb[i] - target[i]).abs()).sum::<f64>() * dh;
            if err < cfg.sinkhorn.marginal_tol {
                converged = true;
                break;
            }
        }
        update_a(&mut a, &kb, &mut hits);
        check_finite(&a, iters)?;
        let kta = kernel.convolve_adjoint(&a);
        let (s, stats) = porous_prox(&kta, cfg, cfg.sinkhorn.eps);
        prox.merge(stats);
        for ((bi, si), ki) in b.iter_mut().zip(&s).zip(&kta) {
            *bi = if *si == 0.0 { 0.0 } else { guarded_div(*si, *ki, &mut hits) };
        }
        check_finite(&b, iters)?;
        kb = kernel.convolve_on(&b, &supp);
        iters += 1;
    }
    if !converged {
        err = supp.iter().map(|&i| (a[i] * kb[i] - target[i]).abs()).sum::<f64>() * dh;
        converged = err < cfg.sinkhorn.marginal_tol;
    }
    update_a(&mut a, &kb, &mut hits);
    let kta = kernel.convolve_adjoint(&a);
    let next: Vec<f64> = b.iter().zip(&kta).map(|(x, y)| x * y).collect();
    check_finite(&next, iters)?;
    let mass_drift = (next.iter().sum::<f64>() * dh - mu.mass()).abs();
    let measure = GridMeasure::new(grid, next)?;
    Ok(JkoOutcome {
        measure,
        mass_drift,
        iters,
        converged,
        marginal_err: err,
        prox,
        guard_hits: hits,
    })
}

/// `cfg.steps` consecutive JKO steps from `mu`; returns every step's outcome.
pub fn gradient_flow(
    mu: &GridMeasure,
    cfg: &GradientFlowConfig,
    kernel: &GibbsKernel,
) -> Result<Vec<JkoOutcome>> {
    let mut out: Vec<JkoOutcome> = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        let current = out.last().map_or(mu, |o| &o.measure);
        let step = jko_step(current, cfg, kernel)?;
        out.push(step);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Se2Grid;
    use crate::se2::MetricParams;

    fn cfg(m: f64, tau: f64, eps: f64) -> GradientFlowConfig {
        GradientFlowConfig::new(m, tau, SinkhornConfig::new(eps).with_tol(1e-9))
    }

    #[test]
    fn prox_zero_and_identity_cases() {
        let z = [0.0, 0.5, 2.0, 1e-200];
        let (s, _) = porous_prox(&z, &cfg(5.0, 0.0, 1.0), 1.0);
        assert_eq!(s[0], 0.0);
        for (a, b) in s.iter().zip(&z).skip(1) {
            assert!((a - b).abs() <= 1e-15 * b);
        }
        let (s, _) = porous_prox(&z, &cfg(5.0, 1e-12, 1.0), 1.0);
        assert!((s[2] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn prox_residual_is_tiny() {
        let z: Vec<f64> = (1..500).map(|i| (i as f64 * 0.618).fract().max(1e-6)).collect();
        for tau in [1e-3, 1.0, 1e5] {
            let c = cfg(5.0, tau, 0.7);
            let (s, stats) = porous_prox(&z, &c, 0.7);
            assert!(stats.max_residual < 1e-10);
            let a = tau * 5.0 / (0.7 * 4.0);
            for (si, zi) in s.iter().zip(&z) {
                let u = si.ln();
                assert!((a * (4.0 * u).exp() + u - zi.ln()).abs() < 1e-10);
                assert!(*si <= *zi * (1.0 + 1e-14));
            }
        }
    }

    #[test]
    fn bisection_agrees_with_newton() {
        let target = 0.3f64.ln();
        let f = |u: f64| 2.5 * (3.0 * u).exp() + u - target;
        let (u, r) = bisect(&f, target, 1e-13);
        assert!(r.abs() < 1e-12);
        let c = GradientFlowConfig::new(4.0, 2.5 * 0.5 * 3.0 / 4.0, SinkhornConfig::new(0.5));
        let (s, _) = porous_prox(&[0.3], &c, 0.5);
        assert!((s[0].ln() - u).abs() < 1e-10);
    }

    #[test]
    fn blur_step_conserves_mass_and_argmax() {
        let g = Se2Grid::new(16, 16, 8, [0.0, 16.0, 0.0, 16.0]).unwrap();
        let k = GibbsKernel::build(&g, &MetricParams::new(1.0, 2.0, 1.0).unwrap(), 1.0, 2.0, 1e-12).unwrap();
        let idx = g.index(8, 7, 3);
        let mu = GridMeasure::dirac_at(g, idx);
        let out = jko_step(&mu, &cfg(5.0, 0.0, 1.0), &k).unwrap();
        assert!(out.converged);
        assert!(out.mass_drift < 1e-8);
        assert_eq!(out.measure.argmax(), idx);
    }

    #[test]
    fn energy_decreases_over_steps() {
        let g = Se2Grid::new(16, 16, 8, [0.0, 16.0, 0.0, 16.0]).unwrap();
        let k = GibbsKernel::build(&g, &MetricParams::new(1.0, 3.0, 1.4).unwrap(), 1.0, 2.0, 1e-12).unwrap();
        let mut d = vec![0.0; g.len()];
        for ix in 3..13 {
            d[g.index(ix, 8, 4)] = 1.0;
        }
        let mut mu = GridMeasure::new(g, d).unwrap();
        let c = GradientFlowConfig { steps: 4, ..cfg(5.0, 10.0, 1.0) };
        let mut energy = porous_energy(&mu, 5.0);
        for _ in 0..c.steps {
            let out = jko_step(&mu, &c, &k).unwrap();
            assert!(out.mass_drift < 1e-8);
            assert!(out.prox.max_residual < 1e-10);
            let next = porous_energy(&out.measure, 5.0);
            assert!(next <= energy + 1e-8);
            energy = next;
            mu = out.measure;
        }
    }

    #[test]
    fn rejects_bad_exponent() {
        assert!(cfg(1.0, 1.0, 1.0).validate().is_err());
        assert!(cfg(2.0, -1.0, 1.0).validate().is_err());
    }
}

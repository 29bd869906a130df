//! Entropic transport solvers built on the group convolution.
//!
//! All iterations run in the linear domain. Every division by a convolved
//! quantity goes through a guard that clamps the denominator at
//! [`DIVISION_GUARD`] and counts how often it fired.

mod barycenter;
mod counterexample;
mod flow;
mod sinkhorn;

pub use barycenter::{barycenter, interpolate, BarycenterConfig, BarycenterOutcome};
pub use counterexample::so2_counterexample;
pub use flow::{
    gradient_flow, jko_step, porous_energy, porous_prox, GradientFlowConfig, JkoOutcome, ProxStats,
};
pub use sinkhorn::{
    plan_marginals, sinkhorn, sinkhorn_distance, transport_cost, ScalingState, SinkhornConfig,
    SinkhornOutcome,
};

use crate::error::{Error, Result};
use crate::kernel::GibbsKernel;

pub const DIVISION_GUARD: f64 = 1e-30;

/// `num / den` with the denominator clamped from below; counts clamps.
#[inline]
pub(crate) fn guarded_div(num: f64, den: f64, hits: &mut usize) -> f64 {
    if den < DIVISION_GUARD {
        *hits += 1;
        num / DIVISION_GUARD
    } else {
        num / den
    }
}

pub(crate) fn check_finite(values: &[f64], iter: usize) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteIterate { iter })
    }
}

pub(crate) fn check_kernel(kernel: &GibbsKernel, cfg: &SinkhornConfig) -> Result<()> {
    cfg.validate()?;
    let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    if !rel(kernel.eps(), cfg.eps) || !rel(kernel.exponent(), cfg.p) {
        return Err(Error::bad_config(format!(
            "kernel built with eps={} p={} but solver configured with eps={} p={}",
            kernel.eps(),
            kernel.exponent(),
            cfg.eps,
            cfg.p
        )));
    }
    Ok(())
}

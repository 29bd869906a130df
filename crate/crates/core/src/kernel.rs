//! Truncated Gibbs kernels `K(g) = exp(-ρ_b(g)^p / ε)` and the SE(2) group
//! convolution they define on an [`Se2Grid`].
//!
//! For lattice sites `h = (x_h, θ_h)` and `g = (x_g, θ_g)` the relative
//! element is `h⁻¹g = (R_{-θ_h}(x_g - x_h), θ_g - θ_h)`. Its value depends on
//! the source orientation, the orientation shift and the integer spatial
//! offset, so the stencil keeps one spatial slice per (source orientation,
//! shift) pair. Entries below the truncation threshold are dropped and act as
//! exact zeros.
//!
//! Both `K * b` and the adjoint `Kᵀ a` include the Haar cell weight, i.e.
//! `(K * b)(g) = Σ_h K(h⁻¹g) b(h) ΔH`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Se2Grid;
use crate::se2::{GroupElement, MetricParams};

pub const DEFAULT_TRUNCATION: f64 = 1e-12;

/// One row of a spatial slice: contiguous offsets `di0 .. di0 + vals.len()`
/// at lateral offset `dj`.
#[derive(Debug, Clone)]
struct Row {
    dj: isize,
    di0: isize,
    vals: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
struct Slice {
    rows: Vec<Row>,
    entries: usize,
}

impl Slice {
    fn entries(&self) -> impl Iterator<Item = (isize, isize, f64)> + '_ {
        self.rows.iter().flat_map(|row| {
            row.vals
                .iter()
                .enumerate()
                .map(move |(t, &v)| (row.di0 + t as isize, row.dj, v))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Adjoint,
}

#[derive(Debug, Clone)]
pub struct GibbsKernel {
    grid: Se2Grid,
    metric: MetricParams,
    eps: f64,
    p: f64,
    tau: f64,
    /// Indexed by `source_k * ntheta + shift`.
    slices: Vec<Slice>,
    too_wide: bool,
}

impl GibbsKernel {
    /// Sample `exp(-ρ_b^p/ε)` at every lattice offset and keep entries `≥ tau`.
    pub fn build(grid: &Se2Grid, metric: &MetricParams, eps: f64, p: f64, tau: f64) -> Result<Self> {
        Self::build_with(grid, metric, eps, p, tau, |gibbs, _| gibbs)
    }

    /// The same stencil with every value multiplied by its cost `ρ_b^p`.
    ///
    /// Convolving with it evaluates transport costs without forming a plan.
    pub fn cost_weighted(&self) -> GibbsKernel {
        Self::build_with(&self.grid, &self.metric, self.eps, self.p, self.tau, |gibbs, cost| {
            gibbs * cost
        })
        .expect("parameters were validated when the kernel was built")
    }

    fn build_with(
        grid: &Se2Grid,
        metric: &MetricParams,
        eps: f64,
        p: f64,
        tau: f64,
        value: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::bad_config(format!("eps must be positive, got {eps}")));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::bad_config(format!("exponent p must be positive, got {p}")));
        }
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::bad_config(format!("truncation must lie in (0, 1), got {tau}")));
        }
        let (nx, ny, nt) = (grid.nx(), grid.ny(), grid.ntheta());
        let (dx, dy) = (grid.dx(), grid.dy());
        // exp(-ρ^p/ε) ≥ τ  ⇔  ρ ≤ radius; and ρ_b ≥ min(w₁, w₂)·|x|, ρ_b ≥ w₃·|θ|.
        let radius = (eps * (1.0 / tau).ln()).powf(1.0 / p);
        let w_min = metric.w1().min(metric.w2());
        let reach = |step: f64, n: usize| -> isize {
            let cells = (radius / (w_min * step)).ceil();
            if cells >= (n - 1) as f64 {
                (n - 1) as isize
            } else {
                cells as isize
            }
        };
        let (ri, rj) = (reach(dx, nx), reach(dy, ny));

        let mut slices = vec![Slice::default(); nt * nt];
        let mut too_wide = false;
        for kh in 0..nt {
            let source = GroupElement::rotation(grid.theta_at(kh));
            for s in 0..nt {
                let theta_g = grid.theta_at((kh + s) % nt);
                if metric.w3() * GroupElement::rotation(theta_g - source.theta).theta.abs() > radius {
                    continue;
                }
                let slice = &mut slices[kh * nt + s];
                for dj in -rj..=rj {
                    let mut row = Row {
                        dj,
                        di0: 0,
                        vals: Vec::new(),
                    };
                    for di in -ri..=ri {
                        let target = GroupElement::new(di as f64 * dx, dj as f64 * dy, theta_g);
                        let cost = metric.rho_b(&source.relative_to(&target)).powf(p);
                        let gibbs = (-cost / eps).exp();
                        if gibbs >= tau {
                            if row.vals.is_empty() {
                                row.di0 = di;
                            }
                            // Sublevel sets of ρ_b are convex, so kept offsets
                            // form one run per row; pad defensively if not.
                            let gap = di - (row.di0 + row.vals.len() as isize);
                            row.vals.extend(std::iter::repeat_n(0.0, gap as usize));
                            row.vals.push(value(gibbs, cost));
                            if di.unsigned_abs() == nx - 1 || dj.unsigned_abs() == ny - 1 {
                                too_wide = true;
                            }
                        }
                    }
                    if !row.vals.is_empty() {
                        slice.entries += row.vals.len();
                        slice.rows.push(row);
                    }
                }
            }
        }
        Ok(GibbsKernel {
            grid: *grid,
            metric: *metric,
            eps,
            p,
            tau,
            slices,
            too_wide: too_wide && (nx > 1 || ny > 1),
        })
    }

    pub fn grid(&self) -> &Se2Grid {
        &self.grid
    }

    pub fn metric(&self) -> &MetricParams {
        &self.metric
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn truncation(&self) -> f64 {
        self.tau
    }

    /// The stencil reached the edge of the window in some spatial axis, so
    /// the truncation never took effect there (ε is large for this window).
    pub fn too_wide(&self) -> bool {
        self.too_wide
    }

    /// Total number of stored entries over all slices.
    pub fn stencil_len(&self) -> usize {
        self.slices.iter().map(|s| s.entries).sum()
    }

    /// Stored value for source orientation `kh`, orientation shift `s` and
    /// spatial offset `(di, dj)`; zero when truncated.
    pub fn value(&self, kh: usize, shift: usize, di: isize, dj: isize) -> f64 {
        let slice = &self.slices[kh * self.grid.ntheta() + shift];
        slice
            .rows
            .iter()
            .find(|r| r.dj == dj)
            .and_then(|r| {
                let t = di - r.di0;
                (t >= 0).then(|| r.vals.get(t as usize).copied()).flatten()
            })
            .unwrap_or(0.0)
    }

    /// Visit every stored entry as `(source_k, shift, di, dj, value)`.
    pub fn for_each_entry(&self, mut f: impl FnMut(usize, usize, isize, isize, f64)) {
        let nt = self.grid.ntheta();
        for (i, slice) in self.slices.iter().enumerate() {
            for (di, dj, v) in slice.entries() {
                f(i / nt, i % nt, di, dj, v);
            }
        }
    }

    /// `K * b`.
    pub fn convolve(&self, input: &[f64]) -> Vec<f64> {
        self.apply(input, Direction::Forward, None)
    }

    /// `Kᵀ a`.
    pub fn convolve_adjoint(&self, input: &[f64]) -> Vec<f64> {
        self.apply(input, Direction::Adjoint, None)
    }

    /// `K * b` evaluated on `sites` only (sorted indices); zero elsewhere.
    pub fn convolve_on(&self, input: &[f64], sites: &[usize]) -> Vec<f64> {
        self.apply(input, Direction::Forward, Some(sites))
    }

    /// `Kᵀ a` evaluated on `sites` only (sorted indices); zero elsewhere.
    pub fn convolve_adjoint_on(&self, input: &[f64], sites: &[usize]) -> Vec<f64> {
        self.apply(input, Direction::Adjoint, Some(sites))
    }

    fn apply(&self, input: &[f64], dir: Direction, sites: Option<&[usize]>) -> Vec<f64> {
        let n = self.grid.len();
        assert_eq!(input.len(), n, "input does not match the kernel grid");
        let nonzero: Vec<usize> = input
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect();
        let mut out = if nonzero.is_empty() {
            vec![0.0; n]
        } else {
            // Each path costs (number of driving sites) × (entries per site).
            let masked = sites.map_or(usize::MAX, |s| s.len());
            if masked <= nonzero.len() && masked <= n / 4 {
                self.gather_at(input, dir, sites.unwrap_or(&[]))
            } else if nonzero.len() <= n / 4 {
                self.scatter(input, &nonzero, dir)
            } else {
                self.gather(input, dir)
            }
        };
        if let Some(sites) = sites {
            let mut keep = vec![false; n];
            sites.iter().for_each(|&i| keep[i] = true);
            out.iter_mut().zip(keep).filter(|(_, k)| !k).for_each(|(o, _)| *o = 0.0);
        }
        out
    }

    /// Dense path: every output slice gathers from every source slice.
    fn gather(&self, input: &[f64], dir: Direction) -> Vec<f64> {
        let (nx, ny, nt) = (self.grid.nx(), self.grid.ny(), self.grid.ntheta());
        let nxy = nx * ny;
        let dh = self.grid.haar_cell();
        let live: Vec<bool> = input.chunks(nxy).map(|c| c.iter().any(|v| *v != 0.0)).collect();
        let mut out = vec![0.0; nx * ny * nt];
        out.par_chunks_mut(nxy).enumerate().for_each(|(ko, o)| {
            for s in 0..nt {
                // Forward: output orientation is the target, source ki = ko - s.
                // Adjoint: output orientation is the source, target ki = ko + s.
                let (ki, slice) = match dir {
                    Direction::Forward => {
                        let kh = (ko + nt - s) % nt;
                        (kh, &self.slices[kh * nt + s])
                    }
                    Direction::Adjoint => ((ko + s) % nt, &self.slices[ko * nt + s]),
                };
                if !live[ki] || slice.rows.is_empty() {
                    continue;
                }
                let src = &input[ki * nxy..(ki + 1) * nxy];
                let sign: isize = if dir == Direction::Forward { -1 } else { 1 };
                for row in &slice.rows {
                    let dj = sign * row.dj;
                    let (iy_lo, iy_hi) = span(dj, ny);
                    for iy in iy_lo..iy_hi {
                        let sy = (iy as isize + dj) as usize;
                        let srow = &src[sy * nx..(sy + 1) * nx];
                        let orow = &mut o[iy * nx..(iy + 1) * nx];
                        for (t, &v) in row.vals.iter().enumerate() {
                            let di = sign * (row.di0 + t as isize);
                            let (lo, hi) = span(di, nx);
                            let shifted = &srow[(lo as isize + di) as usize..(hi as isize + di) as usize];
                            for (ov, sv) in orow[lo..hi].iter_mut().zip(shifted) {
                                *ov += v * sv;
                            }
                        }
                    }
                }
            }
            o.iter_mut().for_each(|v| *v *= dh);
        });
        out
    }

    /// Sparse-input path: each nonzero input site spreads its stencil.
    fn scatter(&self, input: &[f64], nonzero: &[usize], dir: Direction) -> Vec<f64> {
        let (nx, ny, nt) = (self.grid.nx(), self.grid.ny(), self.grid.ntheta());
        let nxy = nx * ny;
        let dh = self.grid.haar_cell();
        let mut by_slice: Vec<Vec<usize>> = vec![Vec::new(); nt];
        for &i in nonzero {
            by_slice[i / nxy].push(i % nxy);
        }
        let mut out = vec![0.0; nx * ny * nt];
        out.par_chunks_mut(nxy).enumerate().for_each(|(ko, o)| {
            for (ki, pixels) in by_slice.iter().enumerate() {
                if pixels.is_empty() {
                    continue;
                }
                // Forward: input is the source h, output the target.
                // Adjoint: input is the target g, output the source.
                let (slice, sign) = match dir {
                    Direction::Forward => (&self.slices[ki * nt + (ko + nt - ki) % nt], 1),
                    Direction::Adjoint => (&self.slices[ko * nt + (ki + nt - ko) % nt], -1),
                };
                if slice.rows.is_empty() {
                    continue;
                }
                for &pix in pixels {
                    let val = input[ki * nxy + pix];
                    let (ix, iy) = ((pix % nx) as isize, (pix / nx) as isize);
                    for row in &slice.rows {
                        let oy = iy + sign * row.dj;
                        if oy < 0 || oy >= ny as isize {
                            continue;
                        }
                        let orow = &mut o[oy as usize * nx..(oy as usize + 1) * nx];
                        for (t, &v) in row.vals.iter().enumerate() {
                            let ox = ix + sign * (row.di0 + t as isize);
                            if (0..nx as isize).contains(&ox) {
                                orow[ox as usize] += v * val;
                            }
                        }
                    }
                }
            }
            o.iter_mut().for_each(|v| *v *= dh);
        });
        out
    }

    /// Masked path: evaluate the gather sum at the listed output sites.
    fn gather_at(&self, input: &[f64], dir: Direction, sites: &[usize]) -> Vec<f64> {
        let (nx, ny, nt) = (self.grid.nx(), self.grid.ny(), self.grid.ntheta());
        let nxy = nx * ny;
        let dh = self.grid.haar_cell();
        let values: Vec<f64> = sites
            .par_iter()
            .map(|&site| {
                let (ix, iy, ko) = self.grid.unravel(site);
                let (ix, iy) = (ix as isize, iy as isize);
                let mut acc = 0.0;
                for s in 0..nt {
                    let (ki, slice, sign) = match dir {
                        Direction::Forward => {
                            let kh = (ko + nt - s) % nt;
                            (kh, &self.slices[kh * nt + s], -1)
                        }
                        Direction::Adjoint => ((ko + s) % nt, &self.slices[ko * nt + s], 1),
                    };
                    let src = &input[ki * nxy..(ki + 1) * nxy];
                    for row in &slice.rows {
                        let sy = iy + sign * row.dj;
                        if sy < 0 || sy >= ny as isize {
                            continue;
                        }
                        let srow = &src[sy as usize * nx..(sy as usize + 1) * nx];
                        for (t, &v) in row.vals.iter().enumerate() {
                            let sx = ix + sign * (row.di0 + t as isize);
                            if (0..nx as isize).contains(&sx) {
                                acc += v * srow[sx as usize];
                            }
                        }
                    }
                }
                acc * dh
            })
            .collect();
        let mut out = vec![0.0; self.grid.len()];
        for (&site, v) in sites.iter().zip(values) {
            out[site] = v;
        }
        out
    }
}

/// Output indices `i ∈ [lo, hi)` with `i + offset ∈ [0, n)`.
#[inline]
fn span(offset: isize, n: usize) -> (usize, usize) {
    let lo = (-offset).max(0) as usize;
    let hi = (n as isize - offset).clamp(0, n as isize) as usize;
    (lo.min(hi), hi)
}

pub fn build_kernel(grid: &Se2Grid, m: &MetricParams, eps: f64, p: f64, tau: f64) -> Result<GibbsKernel> {
    GibbsKernel::build(grid, m, eps, p, tau)
}

pub fn group_convolve(kernel: &GibbsKernel, b: &[f64]) -> Vec<f64> {
    kernel.convolve(b)
}

pub fn group_convolve_adjoint(kernel: &GibbsKernel, a: &[f64]) -> Vec<f64> {
    kernel.convolve_adjoint(a)
}

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::{GridMeasure, Se2Grid};
use crate::lifting::image::{project_values, Image};
use crate::se2::wrap_angle;

/// Order of the radial window `M_N(x) = e^{-x} Σ_{j ≤ N} x^j / j!`.
pub const RADIAL_ORDER: usize = 8;

pub const DEFAULT_SPLINE_ORDER: usize = 3;
pub const DEFAULT_RADIAL_CUT: f64 = 0.8;

/// Fourier-domain angular wedges ("cake pieces") sampled on an odd
/// `size × size` lattice and transformed to spatial filters.
///
/// Wedge `k` is centered at frequency angle `θ_k + π/2`, so a line with
/// orientation `θ_k` responds in slice `k`. Wedges are scaled by `1/dθ` so
/// that `Σ_k ψ̂_k dθ` equals the radial window.
#[derive(Debug, Clone)]
pub struct CakeWaveletBank {
    ntheta: usize,
    size: usize,
    spline_order: usize,
    radial_cut: f64,
    /// Spatial filters indexed `(jy + h) * size + (jx + h)` for offsets in `[-h, h]`.
    kernels: Vec<Vec<Complex64>>,
    /// Fourier samples in FFT order, kept for inspection.
    wedges: Vec<Vec<f64>>,
}

/// Centered cardinal B-spline of order `n` (support `[-(n+1)/2, (n+1)/2]`).
pub fn bspline(n: usize, x: f64) -> f64 {
    if n == 0 {
        return if (-0.5..0.5).contains(&x) { 1.0 } else { 0.0 };
    }
    let half = (n + 1) as f64 / 2.0;
    if x <= -half || x >= half {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut binom = 1.0;
    for i in 0..=n + 1 {
        let t = x + half - i as f64;
        if t > 0.0 {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * binom * t.powi(n as i32);
        }
        binom = binom * (n + 1 - i) as f64 / (i + 1) as f64;
    }
    sum / (1..=n).map(|k| k as f64).product::<f64>()
}

/// Smooth low-pass `M_N(r² / t)` with `t = 2γ² / (1 + 2N)`, where `r` is
/// the frequency radius as a fraction of Nyquist and `γ` the cut.
pub fn radial_window(r: f64, cut: f64) -> f64 {
    let t = 2.0 * cut * cut / (1.0 + 2.0 * RADIAL_ORDER as f64);
    let x = r * r / t;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..=RADIAL_ORDER {
        term *= x / j as f64;
        sum += term;
    }
    (-x).exp() * sum
}

fn fft_freq(i: usize, n: usize) -> f64 {
    let f = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
    TAU * f / n as f64
}

impl CakeWaveletBank {
    pub fn ntheta(&self) -> usize {
        self.ntheta
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn spline_order(&self) -> usize {
        self.spline_order
    }

    pub fn radial_cut(&self) -> f64 {
        self.radial_cut
    }

    pub fn kernel(&self, k: usize) -> &[Complex64] {
        &self.kernels[k]
    }

    /// Fourier samples of wedge `k` at lattice index `(u, v)` in FFT order.
    pub fn wedge(&self, k: usize, u: usize, v: usize) -> f64 {
        self.wedges[k][v * self.size + u]
    }

    /// Largest deviation of `Σ_k ψ̂_k dθ` from the radial window over the
    /// sampled lattice.
    pub fn partition_residual(&self) -> f64 {
        let s = self.size;
        let dtheta = TAU / self.ntheta as f64;
        let mut worst: f64 = 0.0;
        for v in 0..s {
            for u in 0..s {
                let (wx, wy) = (fft_freq(u, s), fft_freq(v, s));
                let r = wx.hypot(wy) / PI;
                let total: f64 = (0..self.ntheta).map(|k| self.wedge(k, u, v)).sum::<f64>() * dtheta;
                worst = worst.max((total - radial_window(r, self.radial_cut)).abs());
            }
        }
        worst
    }
}

pub fn build_cake_wavelets(
    ntheta: usize,
    size: usize,
    spline_order: usize,
    radial_cut: f64,
) -> Result<CakeWaveletBank> {
    if ntheta < 4 {
        return Err(Error::bad_config(format!("need at least 4 orientations, got {ntheta}")));
    }
    if size < 3 || size % 2 == 0 {
        return Err(Error::bad_config(format!("wavelet support must be odd and ≥ 3, got {size}")));
    }
    if spline_order + 1 > ntheta {
        return Err(Error::bad_config(format!(
            "spline order {spline_order} is too wide for {ntheta} orientations"
        )));
    }
    if !(radial_cut > 0.0 && radial_cut.is_finite()) {
        return Err(Error::bad_config(format!("radial cut must be positive, got {radial_cut}")));
    }
    let dtheta = TAU / ntheta as f64;
    let h = size / 2;
    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(size);

    let mut kernels = Vec::with_capacity(ntheta);
    let mut wedges = Vec::with_capacity(ntheta);
    for k in 0..ntheta {
        let center = -PI + k as f64 * dtheta + PI / 2.0;
        let mut wedge = vec![0.0; size * size];
        for v in 0..size {
            for u in 0..size {
                let (wx, wy) = (fft_freq(u, size), fft_freq(v, size));
                wedge[v * size + u] = if u == 0 && v == 0 {
                    1.0 / (ntheta as f64 * dtheta)
                } else {
                    let x = wrap_angle(wy.atan2(wx) - center) / dtheta;
                    bspline(spline_order, x) * radial_window(wx.hypot(wy) / PI, radial_cut) / dtheta
                };
            }
        }
        // Separable inverse DFT: rows, then columns.
        let mut data: Vec<Complex64> = wedge.iter().map(|&w| Complex64::new(w, 0.0)).collect();
        for row in data.chunks_mut(size) {
            ifft.process(row);
        }
        let mut column = vec![Complex64::new(0.0, 0.0); size];
        for u in 0..size {
            for v in 0..size {
                column[v] = data[v * size + u];
            }
            ifft.process(&mut column);
            for v in 0..size {
                data[v * size + u] = column[v];
            }
        }
        let norm = (size * size) as f64;
        let mut spatial = vec![Complex64::new(0.0, 0.0); size * size];
        for jy in 0..size {
            for jx in 0..size {
                // Offset j ∈ [-h, h] lives at lattice index j mod size.
                let (ox, oy) = ((jx + size - h) % size, (jy + size - h) % size);
                spatial[jy * size + jx] = data[oy * size + ox] / norm;
            }
        }
        kernels.push(spatial);
        wedges.push(wedge);
    }
    Ok(CakeWaveletBank {
        ntheta,
        size,
        spline_order,
        radial_cut,
        kernels,
        wedges,
    })
}

/// Positive and negative parts of a real orientation score, each normalized,
/// with the masses they had before normalization. A part with zero mass is
/// `None`.
#[derive(Debug, Clone)]
pub struct SignedScorePair {
    pub pos: Option<GridMeasure>,
    pub neg: Option<GridMeasure>,
    pub mass_pos: f64,
    pub mass_neg: f64,
}

/// Real orientation score `U(x, θ_k) = Re Σ_y f(y) conj(ψ_k(y − x))` with
/// zero padding outside the image.
pub fn orientation_score(f: &Image, bank: &CakeWaveletBank, grid: &Se2Grid) -> Result<Vec<f64>> {
    f.check_grid(grid)?;
    if bank.ntheta() != grid.ntheta() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} orientations", grid.ntheta()),
            got: format!("{} wavelets", bank.ntheta()),
        });
    }
    let (nx, ny) = (grid.nx(), grid.ny());
    let (s, h) = (bank.size(), (bank.size() / 2) as isize);
    let mut values = vec![0.0; grid.len()];
    values
        .par_chunks_mut(nx * ny)
        .enumerate()
        .for_each(|(k, slice)| {
            // Re(f · conj ψ) = f · Re ψ for real f.
            let re: Vec<f64> = bank.kernel(k).iter().map(|c| c.re).collect();
            for iy in 0..ny as isize {
                for ix in 0..nx as isize {
                    let mut acc = 0.0;
                    for jy in (-h).max(-iy)..=h.min(ny as isize - 1 - iy) {
                        let krow = &re[(jy + h) as usize * s..];
                        for jx in (-h).max(-ix)..=h.min(nx as isize - 1 - ix) {
                            acc += f.at_grid((ix + jx) as usize, (iy + jy) as usize) * krow[(jx + h) as usize];
                        }
                    }
                    slice[iy as usize * nx + ix as usize] = acc;
                }
            }
        });
    Ok(values)
}

/// Lift an image and split the score by sign.
pub fn lift_image(f: &Image, bank: &CakeWaveletBank, grid: &Se2Grid) -> Result<SignedScorePair> {
    let u = orientation_score(f, bank, grid)?;
    let part = |sign: f64| -> (Option<GridMeasure>, f64) {
        let d: Vec<f64> = u.iter().map(|v| (sign * v).max(0.0)).collect();
        let mass = d.iter().sum::<f64>() * grid.haar_cell();
        if mass > 0.0 {
            (GridMeasure::new(*grid, d).ok(), mass)
        } else {
            (None, 0.0)
        }
    };
    let (pos, mass_pos) = part(1.0);
    let (neg, mass_neg) = part(-1.0);
    if pos.is_none() && neg.is_none() {
        return Err(Error::EmptyScore);
    }
    Ok(SignedScorePair {
        pos,
        neg,
        mass_pos,
        mass_neg,
    })
}

/// `mass_pos · P(pos) − mass_neg · P(neg)`, clamped at zero and normalized
/// to unit mass on the spatial grid.
pub fn project_signed(pair: &SignedScorePair, mass_pos: f64, mass_neg: f64) -> Result<Image> {
    let grid = match (&pair.pos, &pair.neg) {
        (Some(p), _) => *p.grid(),
        (None, Some(n)) => *n.grid(),
        (None, None) => return Err(Error::EmptyScore),
    };
    let mut out = Image::zeros(grid.nx(), grid.ny());
    for (part, weight) in [(&pair.pos, mass_pos), (&pair.neg, -mass_neg)] {
        if let Some(mu) = part {
            let p = project_values(&grid, mu.density());
            for (o, v) in out.pixels_mut().iter_mut().zip(p.pixels()) {
                *o += weight * v;
            }
        }
    }
    out.pixels_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    out.normalized(grid.dx() * grid.dy()).map_err(|_| Error::EmptyScore)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bspline_partition_of_unity() {
        for n in 0..5 {
            for i in 0..20 {
                let x = -0.5 + i as f64 / 20.0;
                let s: f64 = (-4..=4).map(|k| bspline(n, x - k as f64)).sum();
                assert!((s - 1.0).abs() < 1e-12, "order {n} at {x}: {s}");
            }
        }
        assert!((bspline(3, 0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((bspline(3, 1.0) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn wedges_tile_the_radial_window() {
        let bank = build_cake_wavelets(16, 31, 3, 0.8).unwrap();
        assert!(bank.partition_residual() < 1e-12);
    }

    #[test]
    fn opposite_wedges_are_conjugate() {
        let bank = build_cake_wavelets(8, 15, 3, 0.8).unwrap();
        for k in 0..4 {
            for (a, b) in bank.kernel(k).iter().zip(bank.kernel(k + 4)) {
                assert!((a - b.conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_banks() {
        assert!(build_cake_wavelets(2, 15, 1, 0.8).is_err());
        assert!(build_cake_wavelets(8, 14, 3, 0.8).is_err());
        assert!(build_cake_wavelets(4, 15, 4, 0.8).is_err());
    }

    #[test]
    fn zero_image_has_no_score() {
        let g = Se2Grid::pixels(8, 8, 8).unwrap();
        let bank = build_cake_wavelets(8, 7, 3, 0.8).unwrap();
        assert!(matches!(lift_image(&Image::zeros(8, 8), &bank, &g), Err(Error::EmptyScore)));
    }

    #[test]
    fn horizontal_line_lands_in_flat_slices() {
        let n = 64;
        let g = Se2Grid::pixels(n, n, 16).unwrap();
        let bank = build_cake_wavelets(16, 33, 3, 0.8).unwrap();
        let img = Image::from_fn(n, n, |c, r| if r == 32 && (8..56).contains(&c) { 1.0 } else { 0.0 });
        let pair = lift_image(&img, &bank, &g).unwrap();
        let pos = pair.pos.unwrap();
        let nxy = g.slice_len();
        let slice_mass = |k: usize| pos.density()[k * nxy..(k + 1) * nxy].iter().sum::<f64>() * g.haar_cell();
        // θ = 0 is k = 8, θ = -π is k = 0. Every slice carries the same
        // signed mass (the DC share), so the positive part cannot
        // concentrate beyond roughly a third; check the ordering instead.
        let masses: Vec<f64> = (0..16).map(slice_mass).collect();
        let mut order: Vec<usize> = (0..16).collect();
        order.sort_by(|a, b| masses[*b].total_cmp(&masses[*a]));
        assert_eq!({ let mut top = [order[0], order[1]]; top.sort(); top }, [0, 8]);
        assert!(masses[0] + masses[8] > 2.0 * 2.0 / 16.0, "{masses:?}");
    }

    #[test]
    fn only_positive_part_reconstructs_directly() {
        let g = Se2Grid::pixels(16, 16, 8).unwrap();
        let bank = build_cake_wavelets(8, 15, 3, 0.8).unwrap();
        let img = Image::from_fn(16, 16, |c, r| {
            let (x, y) = (c as f64 - 7.5, r as f64 - 7.5);
            (-(x * x + y * y) / 8.0).exp()
        });
        let pair = lift_image(&img, &bank, &g).unwrap();
        let only_pos = SignedScorePair {
            neg: None,
            mass_neg: 0.0,
            ..pair.clone()
        };
        let p = project_signed(&only_pos, pair.mass_pos, 0.0).unwrap();
        let direct = crate::lifting::project_score(pair.pos.as_ref().unwrap())
            .normalized(1.0)
            .unwrap();
        assert!(p.relative_l2(&direct) < 1e-12);
    }
}

//! Regular `nx × ny × nθ` lattices on a rectangular window of SE(2) and
//! probability densities on them.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};
use crate::se2::{wrap_angle, GroupElement};

/// Cell-centered discretization of `[x_min, x_max] × [y_min, y_max] × S¹`.
///
/// Values over the grid are stored in one flat array with index
/// `(k · ny + iy) · nx + ix`, so each orientation slice is a contiguous
/// row-major image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Se2Grid {
    nx: usize,
    ny: usize,
    ntheta: usize,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Se2Grid {
    pub fn new(nx: usize, ny: usize, ntheta: usize, window: [f64; 4]) -> Result<Self> {
        let [x_min, x_max, y_min, y_max] = window;
        if nx == 0 || ny == 0 || ntheta == 0 {
            return Err(Error::bad_config("grid dimensions must be positive"));
        }
        if !(window.iter().all(|v| v.is_finite()) && x_max > x_min && y_max > y_min) {
            return Err(Error::bad_config(format!("degenerate spatial window {window:?}")));
        }
        Ok(Se2Grid {
            nx,
            ny,
            ntheta,
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    /// Unit cells: the window `[0, nx] × [0, ny]`.
    pub fn pixels(nx: usize, ny: usize, ntheta: usize) -> Result<Self> {
        Self::new(nx, ny, ntheta, [0.0, nx as f64, 0.0, ny as f64])
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn ntheta(&self) -> usize {
        self.ntheta
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.ntheta]
    }

    /// `[x_min, x_max, y_min, y_max]`.
    pub fn window(&self) -> [f64; 4] {
        [self.x_min, self.x_max, self.y_min, self.y_max]
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    pub fn dtheta(&self) -> f64 {
        TAU / self.ntheta as f64
    }

    /// Haar measure of one cell, `dx · dy · dθ`.
    pub fn haar_cell(&self) -> f64 {
        self.dx() * self.dy() * self.dtheta()
    }

    /// Number of sites.
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.ntheta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slice_len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, k: usize) -> usize {
        (k * self.ny + iy) * self.nx + ix
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let ix = idx % self.nx;
        let rest = idx / self.nx;
        (ix, rest % self.ny, rest / self.ny)
    }

    pub fn x_at(&self, ix: usize) -> f64 {
        self.x_min + (ix as f64 + 0.5) * self.dx()
    }

    pub fn y_at(&self, iy: usize) -> f64 {
        self.y_min + (iy as f64 + 0.5) * self.dy()
    }

    /// `θ_k = -π + k · dθ`.
    pub fn theta_at(&self, k: usize) -> f64 {
        -PI + k as f64 * self.dtheta()
    }

    pub fn site(&self, idx: usize) -> GroupElement {
        let (ix, iy, k) = self.unravel(idx);
        GroupElement::new(self.x_at(ix), self.y_at(iy), self.theta_at(k))
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max)]
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }

    /// Rotation by `quarter_turns · π/2` about the window center, as the group
    /// element `c · R · c⁻¹`.
    pub fn center_rotation(&self, quarter_turns: i32) -> GroupElement {
        let theta = quarter_turns.rem_euclid(4) as f64 * FRAC_PI_2;
        let [cx, cy] = self.center();
        let rot = GroupElement::rotation(theta);
        let [rx, ry] = rot.act([cx, cy]);
        GroupElement::new(cx - rx, cy - ry, theta)
    }

    /// Lattice index of the site nearest to `g`; ties go to the smaller index.
    pub fn nearest_site(&self, g: &GroupElement) -> Result<usize> {
        if !self.contains_point(g.x, g.y) {
            return Err(Error::OutOfDomain { x: g.x, y: g.y });
        }
        let ix = nearest_cell((g.x - self.x_min) / self.dx() - 0.5, self.nx);
        let iy = nearest_cell((g.y - self.y_min) / self.dy() - 0.5, self.ny);
        let v = (g.theta + PI) / self.dtheta();
        let k = ((v - 0.5).ceil() as i64).rem_euclid(self.ntheta as i64) as usize;
        Ok(self.index(ix, iy, k))
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values for grid {:?}", self.len(), self.dims()),
                got: len.to_string(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_same(&self, other: &Se2Grid) -> Result<()> {
        if self != other {
            return Err(Error::DimensionMismatch {
                expected: format!("{self:?}"),
                got: format!("{other:?}"),
            });
        }
        Ok(())
    }

    /// Lattice permutation induced by the left action of `g`.
    ///
    /// Entry `i` is the image of site `i`, or `None` when the image leaves the
    /// window. Fails when some image is not itself a lattice site.
    pub fn action_permutation(&self, g: &GroupElement) -> Result<Vec<Option<usize>>> {
        const SNAP: f64 = 1e-6;
        let snap = |u: f64, what: &str| -> Result<i64> {
            let r = u.round();
            if (u - r).abs() > SNAP {
                return Err(Error::IncompatibleAction {
                    reason: format!("{what} image at fractional index {u}"),
                });
            }
            Ok(r as i64)
        };
        let k_shift = snap(wrap_angle(g.theta) / self.dtheta(), "orientation")?;
        let mut spatial = vec![None; self.slice_len()];
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let [px, py] = g.act([self.x_at(ix), self.y_at(iy)]);
                let jx = snap((px - self.x_min) / self.dx() - 0.5, "spatial")?;
                let jy = snap((py - self.y_min) / self.dy() - 0.5, "spatial")?;
                if (0..self.nx as i64).contains(&jx) && (0..self.ny as i64).contains(&jy) {
                    spatial[iy * self.nx + ix] = Some(jy as usize * self.nx + jx as usize);
                }
            }
        }
        let nt = self.ntheta as i64;
        let nxy = self.slice_len();
        let mut perm = Vec::with_capacity(self.len());
        for k in 0..self.ntheta {
            let k2 = (k as i64 + k_shift).rem_euclid(nt) as usize;
            perm.extend(spatial.iter().map(|s| s.map(|j| k2 * nxy + j)));
        }
        Ok(perm)
    }

    /// Pushforward of arbitrary values under the left action of `g`.
    ///
    /// Nonzero values must not leave the window.
    pub fn pushforward_values(&self, values: &[f64], g: &GroupElement) -> Result<Vec<f64>> {
        self.check_len(values.len())?;
        let perm = self.action_permutation(g)?;
        let mut out = vec![0.0; values.len()];
        for (i, (&v, target)) in values.iter().zip(&perm).enumerate() {
            match target {
                Some(j) => out[*j] = v,
                None if v != 0.0 => {
                    return Err(Error::IncompatibleAction {
                        reason: format!("site {i} carries mass but maps outside the window"),
                    })
                }
                None => {}
            }
        }
        Ok(out)
    }
}

fn nearest_cell(u: f64, n: usize) -> usize {
    ((u - 0.5).ceil().max(0.0) as usize).min(n - 1)
}

/// A probability density on an [`Se2Grid`] with respect to the discrete Haar
/// measure: `Σ density · haar_cell = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    grid: Se2Grid,
    density: Vec<f64>,
}

impl GridMeasure {
    /// Validate and normalize a nonnegative density.
    pub fn new(grid: Se2Grid, density: Vec<f64>) -> Result<Self> {
        grid.check_len(density.len())?;
        if let Some(bad) = density.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::bad_config(format!(
                "density values must be finite and nonnegative, found {bad}"
            )));
        }
        let mut mu = GridMeasure { grid, density };
        mu.normalize()?;
        Ok(mu)
    }

    pub fn uniform(grid: Se2Grid) -> Self {
        let v = 1.0 / (grid.len() as f64 * grid.haar_cell());
        GridMeasure {
            grid,
            density: vec![v; grid.len()],
        }
    }

    /// All mass on the site nearest to `g`.
    pub fn dirac(grid: Se2Grid, g: &GroupElement) -> Result<Self> {
        let idx = grid.nearest_site(g)?;
        Ok(Self::dirac_at(grid, idx))
    }

    pub fn dirac_at(grid: Se2Grid, idx: usize) -> Self {
        let mut density = vec![0.0; grid.len()];
        density[idx] = 1.0 / grid.haar_cell();
        GridMeasure { grid, density }
    }

    pub fn grid(&self) -> &Se2Grid {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn into_density(self) -> Vec<f64> {
        self.density
    }

    pub fn mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.grid.haar_cell()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let mass = self.mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::ZeroMass);
        }
        let scale = 1.0 / mass;
        self.density.iter_mut().for_each(|v| *v *= scale);
        Ok(())
    }

    /// Index of the largest density value (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.density.iter().enumerate() {
            if v > self.density[best] {
                best = i;
            }
        }
        best
    }

    /// Sorted indices of sites with positive density.
    pub fn support(&self) -> Vec<usize> {
        support_of(&self.density)
    }

    /// Left-translation pushforward `(L_g)_# μ`; an exact permutation of the
    /// density entries for lattice-compatible `g`.
    pub fn pushforward(&self, g: &GroupElement) -> Result<GridMeasure> {
        Ok(GridMeasure {
            grid: self.grid,
            density: self.grid.pushforward_values(&self.density, g)?,
        })
    }

    /// `Σ |μ − ν| · haar_cell`.
    pub fn l1_distance(&self, other: &GridMeasure) -> f64 {
        l1_haar(&self.grid, &self.density, &other.density)
    }
}

pub fn nearest_site(grid: &Se2Grid, g: &GroupElement) -> Result<usize> {
    grid.nearest_site(g)
}

pub fn dirac(grid: &Se2Grid, g: &GroupElement) -> Result<GridMeasure> {
    GridMeasure::dirac(*grid, g)
}

pub fn pushforward_grid_action(mu: &GridMeasure, g: &GroupElement) -> Result<GridMeasure> {
    mu.pushforward(g)
}

pub(crate) fn support_of(values: &[f64]) -> Vec<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(i, _)| i)
        .collect()
}

pub(crate) fn l1_haar(grid: &Se2Grid, a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * grid.haar_cell()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid() -> Se2Grid {
        Se2Grid::new(8, 8, 4, [0.0, 1.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn geometry() {
        let g = Se2Grid::new(4, 2, 8, [-1.0, 1.0, 0.0, 4.0]).unwrap();
        assert_eq!(g.dx(), 0.5);
        assert_eq!(g.dy(), 2.0);
        assert_eq!(g.theta_at(0), -PI);
        assert!((g.haar_cell() - PI / 4.0).abs() < 1e-15);
        assert_eq!(g.x_at(0), -0.75);
        for idx in [0, 7, 31, 63] {
            let (ix, iy, k) = g.unravel(idx);
            assert_eq!(g.index(ix, iy, k), idx);
        }
        assert!(Se2Grid::new(4, 4, 4, [1.0, 1.0, 0.0, 1.0]).is_err());
        assert!(Se2Grid::new(0, 4, 4, [0.0, 1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn nearest_site_rules() {
        let g = unit_grid();
        let idx = g.index(3, 5, 2);
        assert_eq!(g.nearest_site(&g.site(idx)).unwrap(), idx);

        // Corner between cells 3|4 and 5|6: ties to the smaller index.
        let corner = GroupElement::new(0.5, 0.75, 0.0);
        assert_eq!(g.nearest_site(&corner).unwrap(), g.index(3, 5, 2));

        let near_minus_pi = GroupElement::new(0.1, 0.1, -PI + 0.49 * g.dtheta());
        assert_eq!(g.unravel(g.nearest_site(&near_minus_pi).unwrap()).2, 0);
        let just_below_pi = GroupElement::new(0.1, 0.1, PI - 0.2 * g.dtheta());
        assert_eq!(g.unravel(g.nearest_site(&just_below_pi).unwrap()).2, 0);

        let outside = GroupElement::new(1.5, 0.5, 0.0);
        assert!(matches!(g.nearest_site(&outside), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn dirac_is_normalized_point_mass() {
        let g = unit_grid();
        let mu = GridMeasure::dirac(g, &GroupElement::new(0.5, 0.5, 0.0)).unwrap();
        assert_eq!(mu.support().len(), 1);
        assert!((mu.mass() - 1.0).abs() < 1e-12);
        let mut again = mu.clone();
        again.normalize().unwrap();
        assert_eq!(again.density(), mu.density());

        let nu = GridMeasure::dirac(g, &GroupElement::new(0.1, 0.9, 1.0)).unwrap();
        assert!(mu.support().iter().all(|i| !nu.support().contains(i)));
    }

    #[test]
    fn measure_validation() {
        let g = unit_grid();
        assert!(GridMeasure::new(g, vec![0.0; g.len()]).is_err());
        assert!(GridMeasure::new(g, vec![1.0; 3]).is_err());
        let mut d = vec![1.0; g.len()];
        d[5] = -1.0;
        assert!(GridMeasure::new(g, d).is_err());
        let mu = GridMeasure::new(g, vec![2.0; g.len()]).unwrap();
        assert!((mu.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pushforward_identity_and_quarter_turns() {
        let g = unit_grid();
        let density: Vec<f64> = (0..g.len()).map(|i| (i % 13) as f64 + 0.5).collect();
        let mu = GridMeasure::new(g, density).unwrap();
        assert_eq!(mu.pushforward(&GroupElement::IDENTITY).unwrap(), mu);

        let q = g.center_rotation(1);
        let mut nu = mu.clone();
        for _ in 0..4 {
            nu = nu.pushforward(&q).unwrap();
        }
        assert_eq!(nu, mu);
        let back = mu.pushforward(&q).unwrap().pushforward(&q.inverse()).unwrap();
        assert_eq!(back, mu);
        assert!((mu.pushforward(&q).unwrap().mass() - mu.mass()).abs() < 1e-14);
    }

    #[test]
    fn pushforward_moves_sites_as_the_group_acts() {
        let g = unit_grid();
        let idx = g.index(1, 2, 1);
        let mu = GridMeasure::dirac_at(g, idx);
        let q = g.center_rotation(1);
        let moved = mu.pushforward(&q).unwrap();
        let expected = q.compose(&g.site(idx));
        assert_eq!(moved.argmax(), g.nearest_site(&expected).unwrap());
    }

    #[test]
    fn pushforward_rejects_off_lattice_elements() {
        let g = unit_grid();
        let mu = GridMeasure::uniform(g);
        let half_cell = GroupElement::translation(0.5 * g.dx(), 0.0);
        assert!(matches!(mu.pushforward(&half_cell), Err(Error::IncompatibleAction { .. })));
        let odd_angle = GroupElement::rotation(0.3);
        assert!(mu.pushforward(&odd_angle).is_err());

        // A whole-cell shift is fine only if no mass leaves the window.
        let shift = GroupElement::translation(g.dx(), 0.0);
        assert!(mu.pushforward(&shift).is_err());
        let inner = GridMeasure::dirac_at(g, g.index(2, 2, 0));
        let shifted = inner.pushforward(&shift).unwrap();
        assert_eq!(shifted.argmax(), g.index(3, 2, 0));
    }
}

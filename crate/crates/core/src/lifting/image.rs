use crate::error::{Error, Result};
use crate::grid::{GridMeasure, Se2Grid};

/// Grayscale image, row-major with row 0 at the top.
///
/// On a grid of matching size, column `c` maps to `ix = c` and row `r` to
/// `iy = height − 1 − r`, so the image's up direction is `+y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::bad_config("image dimensions must be positive"));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{width}×{height} = {} pixels", width * height),
                got: format!("{} pixels", pixels.len()),
            });
        }
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(Error::bad_config("pixel values must be finite"));
        }
        Ok(Image { width, height, pixels })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Image {
            width,
            height,
            pixels: vec![0.0; width * height],
        }
    }

    /// Build from `f(col, row)`.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let pixels = (0..height)
            .flat_map(|r| (0..width).map(move |c| (c, r)))
            .map(|(c, r)| f(c, r))
            .collect();
        Image { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Value at grid coordinates `(ix, iy)`.
    pub fn at_grid(&self, ix: usize, iy: usize) -> f64 {
        self.pixels[(self.height - 1 - iy) * self.width + ix]
    }

    pub fn sum(&self) -> f64 {
        self.pixels.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.pixels.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.pixels.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Scale to unit sum of `pixel · cell_area`.
    pub fn normalized(&self, cell_area: f64) -> Result<Image> {
        let mass = self.sum() * cell_area;
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::ZeroMass);
        }
        Ok(Image {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|v| v / mass).collect(),
        })
    }

    /// Rotation by `quarter_turns · 90°` counter-clockwise (with `+y` up)
    /// about the image center. Requires a square image for odd turns.
    pub fn rotate_quarter(&self, quarter_turns: i32) -> Result<Image> {
        let q = quarter_turns.rem_euclid(4);
        if q % 2 == 1 && self.width != self.height {
            return Err(Error::IncompatibleAction {
                reason: "quarter turns of a non-square image leave the pixel lattice".into(),
            });
        }
        let n = self.width;
        let mut out = self.clone();
        for _ in 0..q {
            let src = out.clone();
            for iy in 0..n {
                for ix in 0..n {
                    // (ix, iy) ↦ (n − 1 − iy, ix) in grid coordinates.
                    let (tx, ty) = (n - 1 - iy, ix);
                    out.pixels[(n - 1 - ty) * n + tx] = src.at_grid(ix, iy);
                }
            }
        }
        Ok(out)
    }

    /// `‖self − reference‖₂ / ‖reference‖₂`.
    pub fn relative_l2(&self, reference: &Image) -> f64 {
        let num: f64 = self
            .pixels
            .iter()
            .zip(&reference.pixels)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let den: f64 = reference.pixels.iter().map(|b| b * b).sum();
        (num / den).sqrt()
    }

    pub(crate) fn check_grid(&self, grid: &Se2Grid) -> Result<()> {
        if (self.width, self.height) != (grid.nx(), grid.ny()) {
            return Err(Error::DimensionMismatch {
                expected: format!("{}×{} image", grid.nx(), grid.ny()),
                got: format!("{}×{} image", self.width, self.height),
            });
        }
        Ok(())
    }
}

/// Angular integration `P(U)(x, y) = Σ_k U(x, y, θ_k) dθ`.
pub fn project_score(u: &GridMeasure) -> Image {
    project_values(u.grid(), u.density())
}

pub fn project_values(grid: &Se2Grid, values: &[f64]) -> Image {
    let (nx, ny) = (grid.nx(), grid.ny());
    let nxy = grid.slice_len();
    let dtheta = grid.dtheta();
    let mut img = Image::zeros(nx, ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let s: f64 = (0..grid.ntheta()).map(|k| values[k * nxy + iy * nx + ix]).sum();
            img.pixels[(ny - 1 - iy) * nx + ix] = s * dtheta;
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_cycles() {
        let img = Image::from_fn(5, 5, |c, r| (c * 7 + r * 3) as f64);
        assert_eq!(img.rotate_quarter(4).unwrap(), img);
        let once = img.rotate_quarter(1).unwrap();
        assert_eq!(once.rotate_quarter(-1).unwrap(), img);
        // The bottom-right corner moves to the top-right under +90°.
        assert_eq!(once.get(4, 0), img.get(4, 4));
        assert!(Image::zeros(3, 4).rotate_quarter(1).is_err());
    }

    #[test]
    fn projection_preserves_mass_and_locates_diracs() {
        let g = Se2Grid::new(6, 4, 8, [0.0, 3.0, 0.0, 2.0]).unwrap();
        let u = GridMeasure::uniform(g);
        let p = project_score(&u);
        assert!(p.pixels().iter().all(|v| (v - p.get(0, 0)).abs() < 1e-12));
        let idx = g.index(2, 1, 5);
        let d = GridMeasure::dirac_at(g, idx);
        let p = project_score(&d);
        let nonzero: Vec<usize> = (0..p.pixels().len()).filter(|&i| p.pixels()[i] != 0.0).collect();
        assert_eq!(nonzero, vec![(4 - 1 - 1) * 6 + 2]);
        let mass = p.sum() * g.dx() * g.dy();
        assert!((mass - 1.0).abs() < 1e-12);
    }
}

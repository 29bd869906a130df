use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::grid::{GridMeasure, Se2Grid};
use crate::se2::{angle_distance, GroupElement};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationRecord {
    pub x: f64,
    pub y: f64,
    /// Radians in `[0, 2π)`.
    pub angle: f64,
    pub magnitude: f64,
}

impl OrientationRecord {
    pub fn new(x: f64, y: f64, angle: f64, magnitude: f64) -> Self {
        OrientationRecord {
            x,
            y,
            angle: angle.rem_euclid(TAU) % TAU,
            magnitude,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OrientationField {
    pub records: Vec<OrientationRecord>,
}

impl OrientationField {
    pub fn new(records: Vec<OrientationRecord>) -> Self {
        OrientationField { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Magnitudes rescaled so that `Σ magnitude · dx · dy = 1` on `grid`.
    pub fn normalized(&self, grid: &Se2Grid) -> Result<OrientationField> {
        let total: f64 = self.records.iter().map(|r| r.magnitude).sum::<f64>() * grid.dx() * grid.dy();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::ZeroMass);
        }
        Ok(OrientationField {
            records: self
                .records
                .iter()
                .map(|r| OrientationRecord {
                    magnitude: r.magnitude / total,
                    ..*r
                })
                .collect(),
        })
    }

    /// Magnitude-weighted mean position.
    pub fn mean_position(&self) -> Option<[f64; 2]> {
        let total: f64 = self.records.iter().map(|r| r.magnitude).sum();
        (total > 0.0).then(|| {
            let sx: f64 = self.records.iter().map(|r| r.x * r.magnitude).sum();
            let sy: f64 = self.records.iter().map(|r| r.y * r.magnitude).sum();
            [sx / total, sy / total]
        })
    }
}

/// Orientation slice whose window `d(angle, θ_k) ≤ π/ntheta` contains
/// `angle`; on the window boundary the lower index wins.
fn slice_of(grid: &Se2Grid, angle: f64) -> usize {
    let half = std::f64::consts::PI / grid.ntheta() as f64;
    (0..grid.ntheta())
        .find(|&k| angle_distance(angle, grid.theta_at(k)) <= half)
        .expect("every angle lies within half a step of some slice")
}

/// Zeroth-order B-spline lift: each record's magnitude goes to the nearest
/// spatial site in the orientation slice containing its angle; the result is
/// normalized.
pub fn lift_orientation_field(field: &OrientationField, grid: &Se2Grid) -> Result<GridMeasure> {
    let mut density = vec![0.0; grid.len()];
    for r in &field.records {
        if !(r.magnitude >= 0.0 && r.magnitude.is_finite()) {
            return Err(Error::bad_config(format!("invalid magnitude {}", r.magnitude)));
        }
        let spatial = grid.nearest_site(&GroupElement::new(r.x, r.y, 0.0))?;
        let (ix, iy, _) = grid.unravel(spatial);
        density[grid.index(ix, iy, slice_of(grid, r.angle))] += r.magnitude;
    }
    GridMeasure::new(*grid, density)
}

/// Angular integration with the argmax orientation, at every spatial site
/// whose integrated mass is positive and at least `mass_threshold`.
pub fn reconstruct_orientation_field(u: &GridMeasure, mass_threshold: f64) -> OrientationField {
    let grid = u.grid();
    let d = u.density();
    let mut records = Vec::new();
    for iy in 0..grid.ny() {
        for ix in 0..grid.nx() {
            let mut best = 0;
            let mut total = 0.0;
            for k in 0..grid.ntheta() {
                let v = d[grid.index(ix, iy, k)];
                total += v;
                if v > d[grid.index(ix, iy, best)] {
                    best = k;
                }
            }
            let magnitude = total * grid.dtheta();
            if magnitude > 0.0 && magnitude >= mass_threshold {
                records.push(OrientationRecord::new(
                    grid.x_at(ix),
                    grid.y_at(iy),
                    grid.theta_at(best),
                    magnitude,
                ));
            }
        }
    }
    OrientationField { records }
}

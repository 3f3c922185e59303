//! Synthetic scalar field on a regular grid of cells, sensed point-wise.
//!
//! The field state `y ∈ ℝ^{nx·ny}` holds one value per cell (row-major, `x`
//! index fastest). A sensor at `x` observes one scalar: either the bilinear
//! interpolation of the cell-center values at `x` (continuous in `x`) or the
//! value of the cell containing `x` (piecewise constant, discontinuous on cell
//! boundaries).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{LinearGaussian, ObservationModel};
use crate::linalg;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldInterpolation {
    #[default]
    Bilinear,
    NearestCell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    /// Lower-left corner.
    pub origin: [f64; 2],
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
}

impl FieldGrid {
    pub fn new(origin: [f64; 2], cell: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(cell > 0.0) {
            return Err(Error::NonPositiveParam { name: "cell", value: cell });
        }
        if nx == 0 || ny == 0 {
            return Err(Error::NonPositiveParam { name: "grid size", value: 0.0 });
        }
        Ok(Self { origin, cell, nx, ny })
    }

    /// Grid whose lower-left corner is `(-⌊nx/2⌋·cell, -⌊ny/2⌋·cell)`, so the
    /// origin is a cell corner.
    pub fn centered(nx: usize, ny: usize, cell: f64) -> Result<Self> {
        let origin = [-((nx / 2) as f64) * cell, -((ny / 2) as f64) * cell];
        Self::new(origin, cell, nx, ny)
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn center(&self, k: usize) -> DVector<f64> {
        let (ix, iy) = (k % self.nx, k / self.nx);
        DVector::from_vec(vec![
            self.origin[0] + (ix as f64 + 0.5) * self.cell,
            self.origin[1] + (iy as f64 + 0.5) * self.cell,
        ])
    }

    pub fn extent(&self) -> [f64; 2] {
        [self.nx as f64 * self.cell, self.ny as f64 * self.cell]
    }

    /// Cell containing `x`, clamped to the grid; points on a boundary belong
    /// to the cell with the larger index.
    pub fn nearest_cell(&self, x: &DVector<f64>) -> usize {
        let locate = |v: f64, o: f64, n: usize| {
            let f = ((v - o) / self.cell).floor();
            f.clamp(0.0, (n - 1) as f64) as usize
        };
        self.index(locate(x[0], self.origin[0], self.nx), locate(x[1], self.origin[1], self.ny))
    }

    /// Bilinear weights over cell centers, clamped outside the center hull.
    pub fn bilinear_weights(&self, x: &DVector<f64>) -> Vec<(usize, f64)> {
        let axis = |v: f64, o: f64, n: usize| -> (usize, usize, f64) {
            let u = ((v - o) / self.cell - 0.5).clamp(0.0, (n - 1) as f64);
            if n == 1 {
                return (0, 0, 0.0);
            }
            let i0 = (u.floor() as usize).min(n - 2);
            (i0, i0 + 1, u - i0 as f64)
        };
        let (x0, x1, fx) = axis(x[0], self.origin[0], self.nx);
        let (y0, y1, fy) = axis(x[1], self.origin[1], self.ny);
        let mut w = vec![
            (self.index(x0, y0), (1.0 - fx) * (1.0 - fy)),
            (self.index(x1, y0), fx * (1.0 - fy)),
            (self.index(x0, y1), (1.0 - fx) * fy),
            (self.index(x1, y1), fx * fy),
        ];
        w.retain(|(_, v)| *v != 0.0);
        w
    }

    /// Gaussian random field over the cell centers: constant `mean` plus a
    /// zero-mean process with covariance `std² exp(-‖c_k − c_l‖ / corr_len)`.
    pub fn sample_field<R: Rng + ?Sized>(
        &self,
        mean: f64,
        std: f64,
        corr_len: f64,
        rng: &mut R,
    ) -> Result<DVector<f64>> {
        let n = self.cell_count();
        if std == 0.0 {
            return Ok(DVector::from_element(n, mean));
        }
        if !(std > 0.0) || !(corr_len > 0.0) {
            return Err(Error::NonPositiveParam { name: "field std/correlation", value: std.min(corr_len) });
        }
        let centers: Vec<_> = (0..n).map(|k| self.center(k)).collect();
        let cov = DMatrix::from_fn(n, n, |k, l| {
            std * std * (-(&centers[k] - &centers[l]).norm() / corr_len).exp()
        });
        let g = linalg::covariance_factor(&cov)?;
        Ok(DVector::from_element(n, mean) + linalg::sample_with_factor(&g, rng))
    }

    /// `n` sensor positions on cell boundaries. Node 0 sits at the origin; the
    /// next `nx·ny` nodes are assigned one per cell on that cell's left (or, in
    /// the first column, bottom) edge, so that every cell owns a sensor under the
    /// nearest-cell rule; the rest land on random interior grid lines.
    pub fn boundary_placement<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<DVector<f64>> {
        let [ox, oy] = self.origin;
        let c = self.cell;
        let mut out = vec![DVector::zeros(2)];
        let jitter = |rng: &mut R| 0.1 + 0.8 * rng.random::<f64>();
        'cells: for iy in 0..self.ny {
            for ix in 0..self.nx {
                if out.len() >= n {
                    break 'cells;
                }
                let p = if ix > 0 || iy == 0 {
                    [ox + ix as f64 * c, oy + (iy as f64 + jitter(rng)) * c]
                } else {
                    [ox + (ix as f64 + jitter(rng)) * c, oy + iy as f64 * c]
                };
                out.push(DVector::from_vec(p.to_vec()));
            }
        }
        let [ex, ey] = self.extent();
        while out.len() < n {
            let vertical = rng.random::<bool>() && self.nx > 1 || self.ny == 1;
            let p = if vertical {
                let k = rng.random_range(1..self.nx.max(2));
                [ox + k as f64 * c, oy + ey * rng.random::<f64>()]
            } else {
                let k = rng.random_range(1..self.ny.max(2));
                [ox + ex * rng.random::<f64>(), oy + k as f64 * c]
            };
            out.push(DVector::from_vec(p.to_vec()));
        }
        out.truncate(n);
        out
    }

    /// Node 0 at the origin, the rest uniform over the grid.
    pub fn uniform_placement<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<DVector<f64>> {
        let [ex, ey] = self.extent();
        (0..n)
            .map(|i| {
                if i == 0 {
                    DVector::zeros(2)
                } else {
                    DVector::from_vec(vec![
                        self.origin[0] + ex * rng.random::<f64>(),
                        self.origin[1] + ey * rng.random::<f64>(),
                    ])
                }
            })
            .collect()
    }
}

/// Point sensor of a gridded field with constant noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldObservation {
    pub grid: FieldGrid,
    pub interpolation: FieldInterpolation,
    pub noise_var: f64,
}

impl FieldObservation {
    pub fn new(grid: FieldGrid, interpolation: FieldInterpolation, noise_std: f64) -> Result<Self> {
        if !(noise_std > 0.0) {
            return Err(Error::NonPositiveParam { name: "noise_std", value: noise_std });
        }
        Ok(Self { grid, interpolation, noise_var: noise_std * noise_std })
    }

    pub fn row(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        if x.len() != 2 {
            return Err(Error::dims("field sensors have planar configurations"));
        }
        let mut h = DMatrix::zeros(1, self.grid.cell_count());
        match self.interpolation {
            FieldInterpolation::Bilinear => {
                for (k, w) in self.grid.bilinear_weights(x) {
                    h[(0, k)] += w;
                }
            }
            FieldInterpolation::NearestCell => h[(0, self.grid.nearest_cell(x))] = 1.0,
        }
        Ok(h)
    }
}

impl ObservationModel for FieldObservation {
    fn state_dim(&self) -> usize {
        self.grid.cell_count()
    }

    fn output_dim(&self) -> usize {
        1
    }

    fn linear_gaussian(&self, x: &DVector<f64>) -> Result<LinearGaussian> {
        LinearGaussian::new(self.row(x)?, DMatrix::from_element(1, 1, self.noise_var))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SimRng;
    use rand::SeedableRng;

    fn p(a: f64, b: f64) -> DVector<f64> {
        DVector::from_vec(vec![a, b])
    }

    #[test]
    fn bilinear_weights_sum_to_one_and_hit_centers() {
        let g = FieldGrid::centered(4, 3, 2.0).unwrap();
        for x in [p(0.0, 0.0), p(-3.9, 2.9), p(10.0, -10.0), p(0.3, -1.7)] {
            let s: f64 = g.bilinear_weights(&x).iter().map(|w| w.1).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
        let k = g.index(2, 1);
        let w = g.bilinear_weights(&g.center(k));
        assert_eq!(w, vec![(k, 1.0)]);
    }

    #[test]
    fn nearest_cell_tie_goes_up() {
        let g = FieldGrid::centered(4, 4, 1.0).unwrap();
        assert_eq!(g.nearest_cell(&p(0.0, 0.0)), g.index(2, 2));
        assert_eq!(g.nearest_cell(&p(-1e-9, 0.0)), g.index(1, 2));
        assert_eq!(g.nearest_cell(&p(-100.0, 100.0)), g.index(0, 3));
    }

    #[test]
    fn boundary_placement_covers_every_cell() {
        let g = FieldGrid::centered(4, 4, 10.0).unwrap();
        let mut rng = SimRng::seed_from_u64(3);
        let pos = g.boundary_placement(25, &mut rng);
        assert_eq!(pos.len(), 25);
        assert_eq!(pos[0], DVector::zeros(2));
        let mut owned = [false; 16];
        for x in &pos {
            owned[g.nearest_cell(x)] = true;
            let on_line = |v: f64, o: f64| (((v - o) / 10.0) - ((v - o) / 10.0).round()).abs() < 1e-12;
            assert!(on_line(x[0], g.origin[0]) || on_line(x[1], g.origin[1]));
        }
        assert!(owned.iter().all(|o| *o));
    }

    #[test]
    fn nearest_cell_model_is_indicator() {
        let g = FieldGrid::centered(2, 2, 1.0).unwrap();
        let obs = FieldObservation::new(g, FieldInterpolation::NearestCell, 0.1).unwrap();
        let h = obs.row(&p(0.5, -0.5)).unwrap();
        assert_eq!(h.as_slice(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn sampled_field_has_requested_mean_shape() {
        let g = FieldGrid::centered(3, 3, 1.0).unwrap();
        let mut rng = SimRng::seed_from_u64(8);
        let y = g.sample_field(5.0, 0.0, 1.0, &mut rng).unwrap();
        assert!(y.iter().all(|v| *v == 5.0));
        let y = g.sample_field(5.0, 1.0, 2.0, &mut rng).unwrap();
        assert_eq!(y.len(), 9);
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polar grid on the annulus `r_min <= r <= r_max`, periodic in `theta`.
///
/// There are `nr + 1` radial nodes `r_i = r_min + i dr` (both rims are
/// nodes) and `ntheta` angular nodes `theta_j = j dtheta`. Fields are stored
/// row-major over `(r, theta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnularGrid {
    pub nr: usize,
    pub ntheta: usize,
    pub r_min: f64,
    pub r_max: f64,
}

impl AnnularGrid {
    pub fn new(nr: usize, ntheta: usize, r_min: f64, r_max: f64) -> Result<Self> {
        let g = Self {
            nr,
            ntheta,
            r_min,
            r_max,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0) {
            return Err(Error::validation(
                "grid.r_min",
                format!("must be positive, got {}", self.r_min),
            ));
        }
        if !(self.r_max > self.r_min) {
            return Err(Error::validation(
                "grid.r_max",
                format!("must exceed r_min = {}, got {}", self.r_min, self.r_max),
            ));
        }
        if self.nr < 4 {
            return Err(Error::validation(
                "grid.nr",
                format!("need at least 4 cells, got {}", self.nr),
            ));
        }
        if self.ntheta < 8 {
            return Err(Error::validation(
                "grid.ntheta",
                format!("need at least 8 cells, got {}", self.ntheta),
            ));
        }
        Ok(())
    }

    /// Same annulus with both cell counts doubled.
    pub fn refined(&self) -> Self {
        Self {
            nr: 2 * self.nr,
            ntheta: 2 * self.ntheta,
            ..*self
        }
    }

    #[inline]
    pub fn dr(&self) -> f64 {
        (self.r_max - self.r_min) / self.nr as f64
    }

    #[inline]
    pub fn dtheta(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.ntheta as f64
    }

    #[inline]
    pub fn radius(&self, i: usize) -> f64 {
        self.r_min + i as f64 * self.dr()
    }

    #[inline]
    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.nr + 1
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.rows() * self.ntheta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ntheta + j
    }

    /// Cartesian coordinates of node `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        let r = self.radius(i);
        let (s, c) = self.theta(j).sin_cos();
        [r * c, r * s]
    }

    /// Smallest cell edge, `min(dr, r_min dtheta)`.
    pub fn min_spacing(&self) -> f64 {
        self.dr().min(self.r_min * self.dtheta())
    }

    /// Bilinear interpolation of a nodal field at the Cartesian point `x`.
    pub fn interpolate(&self, field: &[f64], x: &[f64; 2]) -> Option<f64> {
        let r = x[0].hypot(x[1]);
        if r < self.r_min || r > self.r_max {
            return None;
        }
        let fr = ((r - self.r_min) / self.dr()).min(self.nr as f64 - 1e-12);
        let i = fr.floor() as usize;
        let a = fr - i as f64;
        let th = x[1].atan2(x[0]).rem_euclid(2.0 * std::f64::consts::PI);
        let ft = th / self.dtheta();
        let j = (ft.floor() as usize) % self.ntheta;
        let b = ft - ft.floor();
        let j1 = (j + 1) % self.ntheta;
        let v = (1.0 - a) * (1.0 - b) * field[self.idx(i, j)]
            + a * (1.0 - b) * field[self.idx(i + 1, j)]
            + (1.0 - a) * b * field[self.idx(i, j1)]
            + a * b * field[self.idx(i + 1, j1)];
        Some(v)
    }
}

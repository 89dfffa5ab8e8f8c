use nalgebra::DMatrix;

/// Largest supported spacetime dimension (three space dimensions plus time).
pub const MAX_DIM: usize = 4;

/// Contravariant components `g^{jk}` at one point, index 0 being time.
///
/// Storage is a fixed 4x4 array; only the leading `(n+1)x(n+1)` block is
/// meaningful. The tensor is kept symmetric by every mutating method.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricTensor {
    n: usize,
    g: [[f64; MAX_DIM]; MAX_DIM],
}

impl MetricTensor {
    pub fn zeros(n_space: usize) -> Self {
        assert!(
            (1..MAX_DIM).contains(&n_space),
            "unsupported spatial dimension {n_space}"
        );
        Self {
            n: n_space,
            g: [[0.0; MAX_DIM]; MAX_DIM],
        }
    }

    /// `diag(1, -1, ..., -1)`.
    pub fn minkowski(n_space: usize) -> Self {
        let mut m = Self::zeros(n_space);
        m.g[0][0] = 1.0;
        for j in 1..=n_space {
            m.g[j][j] = -1.0;
        }
        m
    }

    /// Builds a tensor from full rows; symmetry is not enforced here, use
    /// [`MetricTensor::is_symmetric`] to check.
    pub fn from_rows(n_space: usize, rows: &[&[f64]]) -> Self {
        let mut m = Self::zeros(n_space);
        assert_eq!(rows.len(), n_space + 1);
        for (j, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n_space + 1);
            for (k, &v) in row.iter().enumerate() {
                m.g[j][k] = v;
            }
        }
        m
    }

    #[inline]
    pub fn n_space(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.g[j][k]
    }

    /// Sets `g^{jk}` and `g^{kj}`.
    #[inline]
    pub fn set(&mut self, j: usize, k: usize, v: f64) {
        self.g[j][k] = v;
        self.g[k][j] = v;
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = *self;
        for row in out.g.iter_mut() {
            for v in row.iter_mut() {
                *v *= alpha;
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let mut out = *self;
        for j in 0..MAX_DIM {
            for k in 0..MAX_DIM {
                out.g[j][k] += other.g[j][k];
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-1.0))
    }

    pub fn max_abs(&self) -> f64 {
        let d = self.dim();
        let mut m: f64 = 0.0;
        for j in 0..d {
            for k in 0..d {
                m = m.max(self.g[j][k].abs());
            }
        }
        m
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let d = self.dim();
        (0..d).all(|j| (0..d).all(|k| (self.g[j][k] - self.g[k][j]).abs() <= tol))
    }

    /// `g^{0j}` for `j = 1..n`, padded with zeros.
    #[inline]
    pub fn time_space(&self) -> [f64; 3] {
        let mut d = [0.0; 3];
        for (j, v) in d.iter_mut().enumerate().take(self.n) {
            *v = self.g[0][j + 1];
        }
        d
    }

    /// Spatial block entry `g^{jk}` with 0-based spatial indices.
    #[inline]
    pub fn spatial(&self, j: usize, k: usize) -> f64 {
        self.g[j + 1][k + 1]
    }

    /// `sum_k g^{jk} xi_k` over the spatial block.
    pub fn spatial_apply(&self, xi: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (j, o) in out.iter_mut().enumerate().take(self.n) {
            *o = (0..self.n).map(|k| self.g[j + 1][k + 1] * xi[k]).sum();
        }
        out
    }

    /// `sum_{j,k=1..n} g^{jk} xi_j xi_k`.
    pub fn spatial_quadratic(&self, xi: &[f64]) -> f64 {
        let mut s = 0.0;
        for j in 0..self.n {
            for k in 0..self.n {
                s += self.g[j + 1][k + 1] * xi[j] * xi[k];
            }
        }
        s
    }

    /// `sum_{j,k=0..n} g^{jk} xi_j xi_k` with `xi[0]` the time component.
    pub fn quadratic(&self, xi: &[f64]) -> f64 {
        let d = self.dim();
        let mut s = 0.0;
        for j in 0..d {
            for k in 0..d {
                s += self.g[j][k] * xi[j] * xi[k];
            }
        }
        s
    }

    /// Determinant of the spatial block, `Delta(x)`.
    pub fn spatial_det(&self) -> f64 {
        match self.n {
            1 => self.g[1][1],
            2 => self.g[1][1] * self.g[2][2] - self.g[1][2] * self.g[2][1],
            _ => {
                let mut a = [[0.0; MAX_DIM]; MAX_DIM];
                for j in 0..self.n {
                    for k in 0..self.n {
                        a[j][k] = self.g[j + 1][k + 1];
                    }
                }
                lu_det(a, self.n)
            }
        }
    }

    /// Determinant of the full `(n+1)x(n+1)` contravariant matrix.
    pub fn det(&self) -> f64 {
        lu_det(self.g, self.dim())
    }

    /// `sqrt((-1)^n g)` with `g = 1 / det[g^{jk}]`.
    pub fn sqrt_abs_g(&self) -> f64 {
        1.0 / self.det().abs().sqrt()
    }

    /// Matrix inverse (the covariant metric `g_{jk}`), or `None` when the
    /// matrix is numerically singular.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.dim();
        let mut a = self.g;
        let mut inv = [[0.0; MAX_DIM]; MAX_DIM];
        for (j, row) in inv.iter_mut().enumerate().take(d) {
            row[j] = 1.0;
        }
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
                .unwrap_or(col);
            if a[pivot][col].abs() <= 1e-14 * scale {
                return None;
            }
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let p = a[col][col];
            for k in 0..d {
                a[col][k] /= p;
                inv[col][k] /= p;
            }
            for row in 0..d {
                if row != col {
                    let f = a[row][col];
                    if f != 0.0 {
                        for k in 0..d {
                            a[row][k] -= f * a[col][k];
                            inv[row][k] -= f * inv[col][k];
                        }
                    }
                }
            }
        }
        Some(Self { n: self.n, g: inv })
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let d = self.dim();
        let mut out = Self::zeros(self.n);
        for j in 0..d {
            for k in 0..d {
                out.g[j][k] = (0..d).map(|m| self.g[j][m] * other.g[m][k]).sum();
            }
        }
        out
    }

    /// Eigenvalues of the full matrix in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |j, k| 0.5 * (self.g[j][k] + self.g[k][j]));
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Eigenvalues of the spatial block in ascending order.
    pub fn spatial_eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        let m = DMatrix::from_fn(n, n, |j, k| 0.5 * (self.g[j + 1][k + 1] + self.g[k + 1][j + 1]));
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

fn lu_det(mut a: [[f64; MAX_DIM]; MAX_DIM], d: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap_or(col);
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(col, pivot);
            det = -det;
        }
        let p = a[col][col];
        det *= p;
        for row in col + 1..d {
            let f = a[row][col] / p;
            for k in col..d {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    det
}

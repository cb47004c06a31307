//! Minimal dense symmetric matrix used for correlation structures.

/// Row-major square matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn swap_symmetric(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.dim {
            let a = self.get(i, c);
            let b = self.get(j, c);
            self.set(i, c, b);
            self.set(j, c, a);
        }
        for r in 0..self.dim {
            let a = self.get(r, i);
            let b = self.get(r, j);
            self.set(r, i, b);
            self.set(r, j, a);
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn has_unit_diagonal(&self, tol: f64) -> bool {
        (0..self.dim).all(|i| (self.get(i, i) - 1.0).abs() <= tol)
    }
}

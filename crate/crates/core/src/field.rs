use crate::error::Result;
use crate::grid::Grid;

/// Boundary treatment of a sampled field, controlling its ghost extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bc {
    /// u = 0 on the boundary and reflecting ghosts u(-1) = u(1),
    /// which enforces a zero normal derivative.
    Clamped,
    /// No boundary constraint; ghosts by quadratic extrapolation.
    Free,
}

/// A scalar field sampled on a [`Grid`], row-major in y.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateField {
    pub grid: Grid,
    pub bc: Bc,
    values: Vec<f64>,
}

impl PlateField {
    pub fn zeros(grid: Grid, bc: Bc) -> PlateField {
        PlateField {
            grid,
            bc,
            values: vec![0.0; grid.len()],
        }
    }

    /// Sample `f(x, y)` at the nodes. Clamped fields get their boundary
    /// nodes pinned to zero regardless of `f`.
    pub fn from_fn(grid: Grid, bc: Bc, f: impl Fn(f64, f64) -> f64) -> PlateField {
        let mut v = vec![0.0; grid.len()];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if bc == Bc::Clamped && grid.is_boundary(i, j) {
                    continue;
                }
                v[grid.idx(i, j)] = f(grid.x(i), grid.y(j));
            }
        }
        PlateField {
            grid,
            bc,
            values: v,
        }
    }

    pub fn from_values(grid: Grid, bc: Bc, values: Vec<f64>) -> PlateField {
        assert_eq!(values.len(), grid.len(), "value buffer does not match grid");
        let mut f = PlateField { grid, bc, values };
        if bc == Bc::Clamped {
            f.pin_boundary();
        }
        f
    }

    fn pin_boundary(&mut self) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        for i in 0..nx {
            self.values[self.grid.idx(i, 0)] = 0.0;
            self.values[self.grid.idx(i, ny - 1)] = 0.0;
        }
        for j in 0..ny {
            self.values[self.grid.idx(0, j)] = 0.0;
            self.values[self.grid.idx(nx - 1, j)] = 0.0;
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Field value with ghost extension, valid for indices in [-2, n+1].
    ///
    /// Clamped: mirror reflection about the boundary node. Free: quadratic
    /// extrapolation from the three nearest rows. Corners compose the two
    /// one-dimensional rules.
    pub fn ext(&self, i: isize, j: isize) -> f64 {
        let nx = self.grid.nx as isize;
        let ny = self.grid.ny as isize;
        if i >= 0 && i < nx && j >= 0 && j < ny {
            return self.values[self.grid.idx(i as usize, j as usize)];
        }
        match self.bc {
            Bc::Clamped => {
                let mi = if i < 0 {
                    -i
                } else if i >= nx {
                    2 * (nx - 1) - i
                } else {
                    i
                };
                let mj = if j < 0 {
                    -j
                } else if j >= ny {
                    2 * (ny - 1) - j
                } else {
                    j
                };
                self.values[self.grid.idx(mi as usize, mj as usize)]
            }
            Bc::Free => {
                if i < 0 {
                    3.0 * self.ext(0, j) - 3.0 * self.ext(1, j) + self.ext(2, j)
                } else if i >= nx {
                    3.0 * self.ext(nx - 1, j) - 3.0 * self.ext(nx - 2, j) + self.ext(nx - 3, j)
                } else if j < 0 {
                    3.0 * self.ext(i, 0) - 3.0 * self.ext(i, 1) + self.ext(i, 2)
                } else {
                    3.0 * self.ext(i, ny - 1) - 3.0 * self.ext(i, ny - 2) + self.ext(i, ny - 3)
                }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scale(&self, a: f64) -> PlateField {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= a;
        }
        out
    }

    /// self + a * other. The result keeps the clamped tag only when both
    /// operands carry it.
    pub fn axpy(&self, a: f64, other: &PlateField) -> Result<PlateField> {
        self.grid.same_as(&other.grid)?;
        let bc = if self.bc == Bc::Clamped && other.bc == Bc::Clamped {
            Bc::Clamped
        } else {
            Bc::Free
        };
        let mut values = self.values.clone();
        for (v, w) in values.iter_mut().zip(other.values.iter()) {
            *v += a * w;
        }
        Ok(PlateField {
            grid: self.grid,
            bc,
            values,
        })
    }

    pub fn add(&self, other: &PlateField) -> Result<PlateField> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &PlateField) -> Result<PlateField> {
        self.axpy(-1.0, other)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Trapezoid-rule inner product over the grid.
pub fn inner(a: &PlateField, b: &PlateField) -> f64 {
    debug_assert_eq!(a.grid, b.grid);
    let g = &a.grid;
    let mut s = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            s += g.weight(i, j) * a.get(i, j) * b.get(i, j);
        }
    }
    s
}

/// Trapezoid-rule L2 norm.
pub fn norm_l2(a: &PlateField) -> f64 {
    inner(a, a).sqrt()
}

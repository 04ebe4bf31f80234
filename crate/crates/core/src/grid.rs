use crate::error::{Error, Result};

/// Uniform tensor-product grid over the rectangle [0, lx] x [0, ly].
///
/// Nodes are (i*hx, j*hy) for i in 0..nx, j in 0..ny, so boundary nodes lie
/// exactly on the edges. The 13-point biharmonic stencil plus one ghost layer
/// requires nx, ny >= 5.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub hx: f64,
    pub hy: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Grid> {
        if nx < 5 || ny < 5 {
            return Err(Error::Domain(format!(
                "grid must be at least 5x5 nodes, got {nx}x{ny}"
            )));
        }
        if !(lx > 0.0 && ly > 0.0) {
            return Err(Error::Domain(format!(
                "grid extents must be positive, got lx={lx}, ly={ly}"
            )));
        }
        Ok(Grid {
            nx,
            ny,
            lx,
            ly,
            hx: lx / (nx - 1) as f64,
            hy: ly / (ny - 1) as f64,
        })
    }

    pub fn unit_square(n: usize) -> Result<Grid> {
        Grid::new(n, n, 1.0, 1.0)
    }

    /// Total node count including the boundary.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Interior node count (unknowns of clamped problems).
    pub fn interior_len(&self) -> usize {
        (self.nx - 2) * (self.ny - 2)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    /// Trapezoid quadrature weight of node (i, j).
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let wx = if i == 0 || i == self.nx - 1 { 0.5 } else { 1.0 };
        let wy = if j == 0 || j == self.ny - 1 { 0.5 } else { 1.0 };
        wx * wy * self.hx * self.hy
    }

    pub fn same_as(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{}x{} ({}x{}) vs {}x{} ({}x{})",
                self.nx, self.ny, self.lx, self.ly, other.nx, other.ny, other.lx, other.ly
            )))
        }
    }
}

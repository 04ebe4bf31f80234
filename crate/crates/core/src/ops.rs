//! Second-order centered stencil operators on plate fields.
//!
//! All operators evaluate at every node, using each field's own ghost
//! extension near the boundary. Derivative outputs are untagged (`Bc::Free`)
//! except where noted.

use crate::error::Result;
use crate::field::{Bc, PlateField};

/// Centered first derivative in x.
pub fn dx(u: &PlateField) -> PlateField {
    let g = u.grid;
    let mut out = PlateField::zeros(g, Bc::Free);
    let c = 0.5 / g.hx;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (ii, jj) = (i as isize, j as isize);
            out.set(i, j, c * (u.ext(ii + 1, jj) - u.ext(ii - 1, jj)));
        }
    }
    out
}

/// Centered second derivative in x.
pub fn dxx(u: &PlateField) -> PlateField {
    let g = u.grid;
    let mut out = PlateField::zeros(g, Bc::Free);
    let c = 1.0 / (g.hx * g.hx);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (ii, jj) = (i as isize, j as isize);
            out.set(
                i,
                j,
                c * (u.ext(ii + 1, jj) - 2.0 * u.ext(ii, jj) + u.ext(ii - 1, jj)),
            );
        }
    }
    out
}

/// Centered second derivative in y.
pub fn dyy(u: &PlateField) -> PlateField {
    let g = u.grid;
    let mut out = PlateField::zeros(g, Bc::Free);
    let c = 1.0 / (g.hy * g.hy);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (ii, jj) = (i as isize, j as isize);
            out.set(
                i,
                j,
                c * (u.ext(ii, jj + 1) - 2.0 * u.ext(ii, jj) + u.ext(ii, jj - 1)),
            );
        }
    }
    out
}

/// Centered mixed derivative.
pub fn dxy(u: &PlateField) -> PlateField {
    let g = u.grid;
    let mut out = PlateField::zeros(g, Bc::Free);
    let c = 0.25 / (g.hx * g.hy);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (ii, jj) = (i as isize, j as isize);
            out.set(
                i,
                j,
                c * (u.ext(ii + 1, jj + 1) - u.ext(ii + 1, jj - 1) - u.ext(ii - 1, jj + 1)
                    + u.ext(ii - 1, jj - 1)),
            );
        }
    }
    out
}

/// Five-point Laplacian.
pub fn laplacian(u: &PlateField) -> PlateField {
    let g = u.grid;
    let mut out = PlateField::zeros(g, Bc::Free);
    let cx = 1.0 / (g.hx * g.hx);
    let cy = 1.0 / (g.hy * g.hy);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (ii, jj) = (i as isize, j as isize);
            let lx = u.ext(ii + 1, jj) - 2.0 * u.ext(ii, jj) + u.ext(ii - 1, jj);
            let ly = u.ext(ii, jj + 1) - 2.0 * u.ext(ii, jj) + u.ext(ii, jj - 1);
            out.set(i, j, cx * lx + cy * ly);
        }
    }
    out
}

/// 13-point biharmonic operator with the field's ghost extension.
///
/// Output boundary nodes are zero and the result is clamped-tagged; on
/// clamped inputs the interior restriction is a symmetric positive definite
/// operator.
pub fn biharmonic_apply(u: &PlateField) -> PlateField {
    let g = u.grid;
    let mut out = PlateField::zeros(g, Bc::Clamped);
    let cx = 1.0 / g.hx.powi(4);
    let cy = 1.0 / g.hy.powi(4);
    let cxy = 2.0 / (g.hx * g.hx * g.hy * g.hy);
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let (ii, jj) = (i as isize, j as isize);
            let x4 = u.ext(ii - 2, jj) - 4.0 * u.ext(ii - 1, jj) + 6.0 * u.ext(ii, jj)
                - 4.0 * u.ext(ii + 1, jj)
                + u.ext(ii + 2, jj);
            let y4 = u.ext(ii, jj - 2) - 4.0 * u.ext(ii, jj - 1) + 6.0 * u.ext(ii, jj)
                - 4.0 * u.ext(ii, jj + 1)
                + u.ext(ii, jj + 2);
            let x2y2 = u.ext(ii - 1, jj - 1) - 2.0 * u.ext(ii, jj - 1) + u.ext(ii + 1, jj - 1)
                - 2.0 * (u.ext(ii - 1, jj) - 2.0 * u.ext(ii, jj) + u.ext(ii + 1, jj))
                + u.ext(ii - 1, jj + 1)
                - 2.0 * u.ext(ii, jj + 1)
                + u.ext(ii + 1, jj + 1);
            out.set(i, j, cx * x4 + cy * y4 + cxy * x2y2);
        }
    }
    out
}

/// von Karman bracket [u, w] = u_xx w_yy + u_yy w_xx - 2 u_xy w_xy,
/// evaluated pointwise with each field's own ghost extension.
pub fn vk_bracket(u: &PlateField, w: &PlateField) -> Result<PlateField> {
    u.grid.same_as(&w.grid)?;
    let g = u.grid;
    let uxx = dxx(u);
    let uyy = dyy(u);
    let uxy = dxy(u);
    let wxx = dxx(w);
    let wyy = dyy(w);
    let wxy = dxy(w);
    let mut out = PlateField::zeros(g, Bc::Free);
    for j in 0..g.ny {
        for i in 0..g.nx {
            out.set(
                i,
                j,
                uxx.get(i, j) * wyy.get(i, j) + uyy.get(i, j) * wxx.get(i, j)
                    - 2.0 * uxy.get(i, j) * wxy.get(i, j),
            );
        }
    }
    Ok(out)
}

/// Discrete H^2 seminorm used in diagnostics: trapezoid L2 norm of the
/// five-point Laplacian. Equivalent to the H^2 norm on clamped fields.
pub fn norm_h2(u: &PlateField) -> f64 {
    crate::field::norm_l2(&laplacian(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{inner, Bc, PlateField};
    use crate::grid::Grid;

    #[test]
    fn bracket_of_quadratics_is_constant() {
        // u = x^2, w = y^2: u_xx = 2, w_yy = 2, cross terms vanish -> 4
        let g = Grid::unit_square(9).unwrap();
        let u = PlateField::from_fn(g, Bc::Free, |x, _| x * x);
        let w = PlateField::from_fn(g, Bc::Free, |_, y| y * y);
        let b = vk_bracket(&u, &w).unwrap();
        for j in 0..g.ny {
            for i in 0..g.nx {
                assert!(
                    (b.get(i, j) - 4.0).abs() < 1e-11,
                    "bracket at ({i},{j}) = {}",
                    b.get(i, j)
                );
            }
        }
    }

    #[test]
    fn bracket_is_symmetric() {
        let g = Grid::new(9, 11, 1.0, 1.3).unwrap();
        let u = PlateField::from_fn(g, Bc::Clamped, |x, y| (3.1 * x).sin() * (2.2 * y).cos());
        let w = PlateField::from_fn(g, Bc::Clamped, |x, y| (x * y).exp() - 1.0);
        let ab = vk_bracket(&u, &w).unwrap();
        let ba = vk_bracket(&w, &u).unwrap();
        for (a, b) in ab.values().iter().zip(ba.values()) {
            assert!((a - b).abs() <= 1e-13 * a.abs().max(1.0));
        }
    }

    #[test]
    fn bracket_grid_mismatch_errors() {
        let g1 = Grid::unit_square(9).unwrap();
        let g2 = Grid::unit_square(11).unwrap();
        let u = PlateField::zeros(g1, Bc::Free);
        let w = PlateField::zeros(g2, Bc::Free);
        assert!(vk_bracket(&u, &w).is_err());
    }

    #[test]
    fn biharmonic_of_zero_is_zero() {
        let g = Grid::unit_square(9).unwrap();
        let z = PlateField::zeros(g, Bc::Clamped);
        assert_eq!(biharmonic_apply(&z).max_abs(), 0.0);
    }

    #[test]
    fn biharmonic_self_adjoint_on_clamped_fields() {
        let g = Grid::new(11, 9, 1.0, 0.8).unwrap();
        let u = PlateField::from_fn(g, Bc::Clamped, |x, y| (7.0 * x * y).sin());
        let w = PlateField::from_fn(g, Bc::Clamped, |x, y| x * x * y + (5.0 * y).cos());
        let a = inner(&biharmonic_apply(&u), &w);
        let b = inner(&u, &biharmonic_apply(&w));
        assert!(
            (a - b).abs() < 1e-12 * a.abs().max(1.0),
            "asymmetry: {a} vs {b}"
        );
    }

    #[test]
    fn biharmonic_positive_on_random_clamped_fields() {
        let g = Grid::unit_square(9).unwrap();
        let mut state = 12345u64;
        let mut rand = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / (u32::MAX as f64) - 0.5
        };
        for _ in 0..10 {
            let mut u = PlateField::zeros(g, Bc::Clamped);
            for j in 1..g.ny - 1 {
                for i in 1..g.nx - 1 {
                    u.set(i, j, rand());
                }
            }
            let q = inner(&biharmonic_apply(&u), &u);
            assert!(q > 0.0, "Rayleigh quotient not positive: {q}");
        }
    }
}

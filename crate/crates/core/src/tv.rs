//! Discrete gradient/divergence pair and the dual fixed-point projector onto
//! the G-norm ball, used for both the texture step and the structure step of
//! the decomposition drivers.
//!
//! The discretization is the matched pair: forward differences with a
//! Neumann-style border (zero gradient across the boundary) and the backward
//! divergence that is its exact negative adjoint, so `<grad u, p> = -<u, div p>`
//! holds in exact arithmetic.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::ImageGrid;

/// Per-pixel 2-vector field, the dual variable of the projector.
///
/// After a converged projection, every pixel satisfies
/// `sqrt(p1^2 + p2^2) <= 1 + 1e-12`; the projected image is
/// `lambda * div(p)`, which places it in the G-ball of radius `lambda`
/// by construction.
#[derive(Debug, Clone)]
pub struct DualField {
    width: usize,
    height: usize,
    /// Component along rows (vertical direction).
    pub p1: Vec<f64>,
    /// Component along columns (horizontal direction).
    pub p2: Vec<f64>,
    /// Ball radius this field witnesses.
    pub lambda: f64,
    /// Whether the fixed-point iteration met its tolerance.
    pub converged: bool,
    /// Iterations actually performed.
    pub iterations: usize,
    /// Final max-abs dual increment.
    pub final_delta: f64,
}

impl DualField {
    pub fn zeros(width: usize, height: usize, lambda: f64) -> Self {
        DualField {
            width,
            height,
            p1: vec![0.0; width * height],
            p2: vec![0.0; width * height],
            lambda,
            converged: true,
            iterations: 0,
            final_delta: 0.0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Largest per-pixel Euclidean magnitude of the field.
    pub fn max_magnitude(&self) -> f64 {
        self.p1
            .iter()
            .zip(&self.p2)
            .fold(0.0, |m, (&a, &b)| m.max((a * a + b * b).sqrt()))
    }
}

/// Inner-solver controls for [`project_g`].
#[derive(Debug, Clone, Copy)]
pub struct ChambolleOpts {
    /// Dual step; must stay at or below 0.25.
    pub tau: f64,
    pub max_iter: usize,
    /// Stop once the max-abs dual increment falls below this.
    pub tol: f64,
}

impl Default for ChambolleOpts {
    fn default() -> Self {
        ChambolleOpts {
            tau: 0.248,
            max_iter: 200,
            tol: 1e-4,
        }
    }
}

impl ChambolleOpts {
    fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 0.25) {
            return Err(Error::invalid(format!(
                "tau must be in (0, 0.25], got {}",
                self.tau
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be positive".to_string()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol must be positive".to_string()));
        }
        Ok(())
    }
}

/// Forward-difference gradient: component 1 along rows (0 on the last row),
/// component 2 along columns (0 on the last column).
pub fn gradient(u: &ImageGrid) -> (ImageGrid, ImageGrid) {
    let (w, h) = (u.width(), u.height());
    let mut g1 = ImageGrid::new(w, h);
    let mut g2 = ImageGrid::new(w, h);
    for i in 0..h {
        for j in 0..w {
            if i + 1 < h {
                g1.set(i, j, u.get(i + 1, j) - u.get(i, j));
            }
            if j + 1 < w {
                g2.set(i, j, u.get(i, j + 1) - u.get(i, j));
            }
        }
    }
    (g1, g2)
}

/// Discrete divergence, the exact negative adjoint of [`gradient`].
pub fn divergence(p1: &ImageGrid, p2: &ImageGrid) -> ImageGrid {
    assert!(p1.same_shape(p2), "divergence component shape mismatch");
    let (w, h) = (p1.width(), p1.height());
    let mut out = ImageGrid::new(w, h);
    for i in 0..h {
        for j in 0..w {
            let d1 = if i == 0 {
                p1.get(0, j)
            } else if i == h - 1 {
                -p1.get(i - 1, j)
            } else {
                p1.get(i, j) - p1.get(i - 1, j)
            };
            let d2 = if j == 0 {
                p2.get(i, 0)
            } else if j == w - 1 {
                -p2.get(i, j - 1)
            } else {
                p2.get(i, j) - p2.get(i, j - 1)
            };
            out.set(i, j, d1 + d2);
        }
    }
    out
}

/// Nonlinear projection of `f` onto the G-ball of radius `lambda` by the
/// dual fixed-point iteration
/// `p <- (p + tau * grad(div p - f/lambda)) / (1 + tau * |grad(div p - f/lambda)|)`
/// started from `p = 0`. Returns the projection `lambda * div(p)` together
/// with the dual witness field.
///
/// Running out of iterations is not an error: the best iterate is returned
/// with `converged = false` in the witness.
pub fn project_g(f: &ImageGrid, lambda: f64, opts: &ChambolleOpts) -> Result<(ImageGrid, DualField)> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    opts.validate()?;
    let (w, h) = (f.width(), f.height());
    // Radius 0: the ball is {0}; also avoids f/lambda.
    if lambda == 0.0 {
        return Ok((ImageGrid::new(w, h), DualField::zeros(w, h, 0.0)));
    }

    let n = w * h;
    let f_over_lambda: Vec<f64> = f.as_slice().iter().map(|&x| x / lambda).collect();
    let mut p1 = vec![0.0f64; n];
    let mut p2 = vec![0.0f64; n];
    let mut p1_next = vec![0.0f64; n];
    let mut p2_next = vec![0.0f64; n];
    let mut div_buf = vec![0.0f64; n];
    let tau = opts.tau;

    let mut converged = false;
    let mut iterations = 0;
    let mut final_delta = f64::INFINITY;

    for _ in 0..opts.max_iter {
        iterations += 1;
        // div p - f/lambda
        divergence_into(&p1, &p2, w, h, &mut div_buf);
        for k in 0..n {
            div_buf[k] -= f_over_lambda[k];
        }
        // One dual update per pixel; reads only the current iterate, so the
        // result is independent of the parallel partitioning.
        let delta = p1_next
            .par_chunks_mut(w)
            .zip(p2_next.par_chunks_mut(w))
            .enumerate()
            .map(|(i, (row1, row2))| {
                let mut row_delta = 0.0f64;
                for j in 0..w {
                    let k = i * w + j;
                    let g1 = if i + 1 < h {
                        div_buf[k + w] - div_buf[k]
                    } else {
                        0.0
                    };
                    let g2 = if j + 1 < w {
                        div_buf[k + 1] - div_buf[k]
                    } else {
                        0.0
                    };
                    let mag = (g1 * g1 + g2 * g2).sqrt();
                    let denom = 1.0 + tau * mag;
                    let n1 = (p1[k] + tau * g1) / denom;
                    let n2 = (p2[k] + tau * g2) / denom;
                    row_delta = row_delta.max((n1 - p1[k]).abs()).max((n2 - p2[k]).abs());
                    row1[j] = n1;
                    row2[j] = n2;
                }
                row_delta
            })
            .reduce(|| 0.0, f64::max);

        std::mem::swap(&mut p1, &mut p1_next);
        std::mem::swap(&mut p2, &mut p2_next);
        final_delta = delta;
        if delta <= opts.tol {
            converged = true;
            break;
        }
    }

    divergence_into(&p1, &p2, w, h, &mut div_buf);
    let proj = ImageGrid::from_vec(w, h, div_buf.iter().map(|&d| lambda * d).collect())
        .expect("projection shape");
    let witness = DualField {
        width: w,
        height: h,
        p1,
        p2,
        lambda,
        converged,
        iterations,
        final_delta,
    };
    Ok((proj, witness))
}

fn divergence_into(p1: &[f64], p2: &[f64], w: usize, h: usize, out: &mut [f64]) {
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            let d1 = if i == 0 {
                p1[k]
            } else if i == h - 1 {
                -p1[k - w]
            } else {
                p1[k] - p1[k - w]
            };
            let d2 = if j == 0 {
                p2[k]
            } else if j == w - 1 {
                -p2[k - 1]
            } else {
                p2[k] - p2[k - 1]
            };
            out[k] = d1 + d2;
        }
    }
}

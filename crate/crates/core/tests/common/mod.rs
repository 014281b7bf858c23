//! Shared fixtures for the integration suites: an independent primal oracle
//! for the G-ball projector and the synthetic phantom.

use ctdecomp::grid::{add_gaussian_noise, ImageGrid, NoiseSpec};

/// Smoothing of the oracle's total-variation term.
const ETA: f64 = 1e-6;

/// Independent minimizer of the discrete ROF energy
/// `sum_px sqrt(|grad u|^2 + eta^2) + (1/(2 lambda)) ||u - f||^2`
/// by accelerated primal descent with its own finite differences. The
/// projector under test never enters this code path; agreement of
/// `f - project_g(f)` with this minimizer is the cross-check.
///
/// Panics if the run ends without a small first-order residual, so an
/// under-converged oracle can never silently pass a comparison.
pub fn rof_primal_oracle(f: &ImageGrid, lambda: f64) -> ImageGrid {
    let (w, h) = (f.width(), f.height());
    let n = w * h;
    let lip = 8.0 / ETA + 1.0 / lambda;
    let mu = 1.0 / lambda;
    let step = 1.0 / lip;
    let q = (mu / lip).sqrt();
    let momentum = (1.0 - q) / (1.0 + q);

    let fs = f.as_slice();
    let mut u: Vec<f64> = fs.to_vec();
    let mut y: Vec<f64> = fs.to_vec();
    let mut u_prev: Vec<f64> = fs.to_vec();
    let mut grad = vec![0.0f64; n];

    // Strong convexity turns the first-order residual into a solution
    // bound: |u - u*|_2 <= lambda |grad|_2, so this tolerance leaves the
    // oracle error around 1e-3, an order under the comparison budget.
    // (Tighter tolerances sit below the f64 floor of step * ulp.)
    let grad_tol = 5e-7 * (1.0 + fs.iter().fold(0.0f64, |m, &x| m.max(x.abs())) / lambda);
    let max_iter = 2_000_000usize;
    let mut converged = false;

    for it in 0..max_iter {
        energy_gradient(&y, fs, lambda, w, h, &mut grad);
        u_prev.copy_from_slice(&u);
        for k in 0..n {
            u[k] = y[k] - step * grad[k];
        }
        for k in 0..n {
            y[k] = u[k] + momentum * (u[k] - u_prev[k]);
        }
        if it % 500 == 0 {
            energy_gradient(&u, fs, lambda, w, h, &mut grad);
            let res = grad.iter().fold(0.0f64, |m, &g| m.max(g.abs()));
            if res <= grad_tol {
                converged = true;
                break;
            }
        }
    }
    assert!(converged, "ROF oracle did not reach its gradient tolerance");
    ImageGrid::from_vec(w, h, u).expect("oracle shape")
}

/// Smoothed ROF energy, used to certify oracle optimality in tests.
pub fn rof_energy(u: &ImageGrid, f: &ImageGrid, lambda: f64) -> f64 {
    let (w, h) = (u.width(), u.height());
    let us = u.as_slice();
    let mut e = 0.0;
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            let g1 = if i + 1 < h { us[k + w] - us[k] } else { 0.0 };
            let g2 = if j + 1 < w { us[k + 1] - us[k] } else { 0.0 };
            e += (g1 * g1 + g2 * g2 + ETA * ETA).sqrt();
        }
    }
    let fidelity: f64 = us
        .iter()
        .zip(f.as_slice())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    e + fidelity / (2.0 * lambda)
}

/// Gradient of [`rof_energy`] with forward differences and the matching
/// adjoint, written out locally so the oracle shares no code with the
/// projector under test.
fn energy_gradient(u: &[f64], f: &[f64], lambda: f64, w: usize, h: usize, out: &mut [f64]) {
    // w1, w2 = normalized forward differences
    let mut w1 = vec![0.0f64; w * h];
    let mut w2 = vec![0.0f64; w * h];
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            let g1 = if i + 1 < h { u[k + w] - u[k] } else { 0.0 };
            let g2 = if j + 1 < w { u[k + 1] - u[k] } else { 0.0 };
            let mag = (g1 * g1 + g2 * g2 + ETA * ETA).sqrt();
            w1[k] = g1 / mag;
            w2[k] = g2 / mag;
        }
    }
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            let d1 = if i == 0 {
                w1[k]
            } else if i == h - 1 {
                -w1[k - w]
            } else {
                w1[k] - w1[k - w]
            };
            let d2 = if j == 0 {
                w2[k]
            } else if j == w - 1 {
                -w2[k - 1]
            } else {
                w2[k] - w2[k - 1]
            };
            out[k] = -(d1 + d2) + (u[k] - f[k]) / lambda;
        }
    }
}

/// Synthetic phantom: flat background + bright disk (structure) + oblique
/// sinusoid (texture). Returns (clean, texture frequency as (fr, fc)).
pub fn phantom(n: usize) -> (ImageGrid, (usize, usize)) {
    let mut img = ImageGrid::constant(n, n, 90.0);
    let c = n as f64 / 2.0 - 0.5;
    let r = n as f64 / 4.0;
    let fr = n / 8;
    let fc = (3 * n) / 16;
    for i in 0..n {
        for j in 0..n {
            let mut v = 90.0;
            let (di, dj) = (i as f64 - c, j as f64 - c);
            if (di * di + dj * dj).sqrt() <= r {
                v = 170.0;
            }
            let phase = 2.0 * std::f64::consts::PI
                * (fr as f64 * i as f64 + fc as f64 * j as f64)
                / n as f64;
            v += 20.0 * phase.sin();
            img.set(i, j, v);
        }
    }
    (img, (fr, fc))
}

/// Phantom plus seeded Gaussian noise.
pub fn noisy_phantom(n: usize, sigma: f64, seed: u64) -> (ImageGrid, ImageGrid, (usize, usize)) {
    let (clean, freq) = phantom(n);
    let noisy = add_gaussian_noise(&clean, &NoiseSpec::new(sigma, seed).unwrap());
    (clean, noisy, freq)
}

/// Energy of one DFT bin (plus its conjugate), for checking where an
/// oriented sinusoid's power went.
pub fn dft_bin_energy(img: &ImageGrid, fr: usize, fc: usize) -> f64 {
    let (w, h) = (img.width(), img.height());
    let mut re = 0.0f64;
    let mut im = 0.0f64;
    for i in 0..h {
        for j in 0..w {
            let phase = -2.0 * std::f64::consts::PI
                * (fr as f64 * i as f64 / h as f64 + fc as f64 * j as f64 / w as f64);
            let v = img.get(i, j);
            re += v * phase.cos();
            im += v * phase.sin();
        }
    }
    re * re + im * im
}

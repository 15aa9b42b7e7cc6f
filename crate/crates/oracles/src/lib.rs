//! Slow, independent reference solvers for the tomography estimators.
//!
//! Everything here works on plain `[f64; 3]` arrays and re-derives the
//! objectives from scratch so that test failures point at the library, not at
//! shared code.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::{Rng, RngExt};
use rayon::prelude::*;

pub type Vec3 = [f64; 3];

/// One measurement axis with its observed probability of the `+` outcome.
#[derive(Debug, Clone, Copy)]
pub struct Observation {
    pub axis: Vec3,
    pub p: f64,
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn distance(a: Vec3, b: Vec3) -> f64 {
    norm([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

fn project_ball(a: Vec3) -> Vec3 {
    let n = norm(a);
    if n > 1.0 {
        [a[0] / n, a[1] / n, a[2] / n]
    } else {
        a
    }
}

/// Mean per-basis log-likelihood with equal shots.
pub fn log_likelihood(obs: &[Observation], a: Vec3) -> f64 {
    obs.iter()
        .map(|o| {
            let q = 0.5 * (1.0 + dot(a, o.axis));
            let mut s = 0.0;
            if o.p > 0.0 {
                s += o.p * q.ln();
            }
            if o.p < 1.0 {
                s += (1.0 - o.p) * (1.0 - q).ln();
            }
            s
        })
        .sum()
}

/// Central differences with step `h` along each coordinate.
pub fn central_difference(f: impl Fn(Vec3) -> f64, a: Vec3, h: f64) -> Vec3 {
    let mut g = [0.0; 3];
    for (i, gi) in g.iter_mut().enumerate() {
        let mut plus = a;
        let mut minus = a;
        plus[i] += h;
        minus[i] -= h;
        *gi = (f(plus) - f(minus)) / (2.0 * h);
    }
    g
}

/// Maximizes the likelihood by exhaustive search on a cubic grid clipped to
/// the unit ball, then polishes the best grid point with projected gradient
/// ascent using numerical gradients.
pub fn mle_grid_polish(obs: &[Observation], step: f64, polish_steps: usize) -> Vec3 {
    let n = (1.0 / step).round() as i64;
    let coord = |i: i64| i as f64 * step;
    let (best, _) = (-n..=n)
        .into_par_iter()
        .map(|i| {
            let mut best = ([0.0; 3], f64::NEG_INFINITY);
            for j in -n..=n {
                for k in -n..=n {
                    let a = [coord(i), coord(j), coord(k)];
                    if dot(a, a) > 1.0 {
                        continue;
                    }
                    let f = log_likelihood(obs, a);
                    if f > best.1 {
                        best = (a, f);
                    }
                }
            }
            best
        })
        .reduce(
            || ([0.0; 3], f64::NEG_INFINITY),
            |x, y| if y.1 > x.1 { y } else { x },
        );

    let f = |a: Vec3| log_likelihood(obs, a);
    let mut a = best;
    let mut fa = f(a);
    for _ in 0..polish_steps {
        let g = central_difference(f, a, 1e-7);
        let mut t = 1.0;
        loop {
            let cand = project_ball([a[0] + t * g[0], a[1] + t * g[1], a[2] + t * g[2]]);
            let fc = f(cand);
            if fc > fa {
                a = cand;
                fa = fc;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return a;
            }
        }
    }
    a
}

/// Least squares `sum ((2p - 1) - a.u)^2` over the closed unit ball, solved
/// in the eigenbasis of the Gram matrix with a bisection on the multiplier.
pub fn lr_ball_qp(obs: &[Observation]) -> Vec3 {
    let mut g = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for o in obs {
        let u = Vector3::from(o.axis);
        g += u * u.transpose();
        b += u * (2.0 * o.p - 1.0);
    }
    let eig = SymmetricEigen::new(g);
    let c = eig.eigenvectors.transpose() * b;
    let solve = |lambda: f64| -> Vector3<f64> {
        let y = Vector3::from_fn(|i, _| c[i] / (eig.eigenvalues[i] + lambda));
        eig.eigenvectors * y
    };
    let free = solve(0.0);
    if free.norm() <= 1.0 {
        return [free[0], free[1], free[2]];
    }
    let (mut lo, mut hi) = (0.0, b.norm());
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if solve(mid).norm() > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = solve(0.5 * (lo + hi));
    [a[0], a[1], a[2]]
}

pub fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let n = norm(v);
        if n > 0.1 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Uniform in the ball of radius `r_max`.
pub fn random_in_ball<R: Rng>(rng: &mut R, r_max: f64) -> Vec3 {
    let u = random_unit(rng);
    let r = r_max * rng.random_range(0.0f64..1.0).cbrt();
    [r * u[0], r * u[1], r * u[2]]
}

/// Tetrahedral axes from their polar angles.
pub fn tetrahedral_axes() -> Vec<Vec3> {
    let alpha = (-1.0f64 / 3.0).acos();
    let third = 2.0 * std::f64::consts::PI / 3.0;
    let axis = |a: f64, b: f64| [a.sin() * b.cos(), a.sin() * b.sin(), a.cos()];
    vec![
        axis(0.0, 0.0),
        axis(alpha, 0.0),
        axis(alpha, third),
        axis(alpha, -third),
    ]
}

pub fn pauli_axes() -> Vec<Vec3> {
    vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
}

fn gram_determinant(axes: &[Vec3]) -> f64 {
    let mut g = [[0.0; 3]; 3];
    for u in axes {
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] += u[i] * u[j];
            }
        }
    }
    g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
        - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
        + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0])
}

/// `n` random axes whose Gram determinant exceeds 0.3, so the problem is
/// well posed enough for a fair grid search.
pub fn random_axes<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec3> {
    loop {
        let axes: Vec<Vec3> = (0..n).map(|_| random_unit(rng)).collect();
        if gram_determinant(&axes) > 0.3 {
            return axes;
        }
    }
}

/// Tetrahedral, Pauli and random five-axis sets in rotation.
pub fn axes_for_case<R: Rng>(case: usize, rng: &mut R) -> Vec<Vec3> {
    match case % 3 {
        0 => tetrahedral_axes(),
        1 => pauli_axes(),
        _ => random_axes(rng, 5),
    }
}

/// Probabilities of a random vector in the ball of radius 1.15 (so some are
/// unphysical), perturbed by up to 0.05 and clamped to `[0.02, 0.98]`.
pub fn noisy_observations<R: Rng>(axes: &[Vec3], rng: &mut R) -> Vec<Observation> {
    let a = random_in_ball(rng, 1.15);
    axes.iter()
        .map(|&u| {
            let p = 0.5 * (1.0 + dot(a, u)) + rng.random_range(-0.05..0.05);
            Observation {
                axis: u,
                p: p.clamp(0.02, 0.98),
            }
        })
        .collect()
}

/// Independent uniform probabilities, usually inconsistent with any state.
pub fn uniform_observations<R: Rng>(axes: &[Vec3], rng: &mut R) -> Vec<Observation> {
    axes.iter()
        .map(|&u| Observation {
            axis: u,
            p: rng.random_range(0.0..=1.0),
        })
        .collect()
}

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Stationary law of a finite birth-death chain on `0..=n` with birth rates
/// `birth[i]` out of state `i` (length `n`) and constant death rate `death`,
/// from a direct linear solve of `pi Q = 0, sum(pi) = 1`.
pub fn birth_death_stationary(birth: &[f64], death: f64) -> Vec<f64> {
    let states = birth.len() + 1;
    let mut q = DMatrix::<f64>::zeros(states, states);
    for i in 0..states {
        if i + 1 < states {
            q[(i, i + 1)] = birth[i];
        }
        if i > 0 {
            q[(i, i - 1)] = death;
        }
        let out: f64 = (0..states).filter(|&j| j != i).map(|j| q[(i, j)]).sum();
        q[(i, i)] = -out;
    }
    let mut a = q.transpose();
    for j in 0..states {
        a[(states - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(states);
    b[states - 1] = 1.0;
    let pi = a.lu().solve(&b).expect("generator is irreducible");
    pi.iter().copied().collect()
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Brute-force nearest point of the simplex on a grid of step `1 / steps`
/// (2 or 3 coordinates).
pub fn grid_projection(x: &[f64], steps: usize) -> Vec<f64> {
    let h = 1.0 / steps as f64;
    let dist = |q: &[f64]| q.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let mut best = vec![0.0; x.len()];
    let mut best_d = f64::INFINITY;
    match x.len() {
        2 => {
            for i in 0..=steps {
                let q = [i as f64 * h, 1.0 - i as f64 * h];
                let d = dist(&q);
                if d < best_d {
                    best_d = d;
                    best = q.to_vec();
                }
            }
        }
        3 => {
            for i in 0..=steps {
                for j in 0..=steps - i {
                    let a = i as f64 * h;
                    let b = j as f64 * h;
                    let q = [a, b, (1.0 - a - b).max(0.0)];
                    let d = dist(&q);
                    if d < best_d {
                        best_d = d;
                        best = q.to_vec();
                    }
                }
            }
        }
        _ => panic!("grid oracle supports 2 or 3 coordinates"),
    }
    best
}

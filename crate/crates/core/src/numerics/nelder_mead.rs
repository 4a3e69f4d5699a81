use super::ToleranceConfig;
use crate::error::{Error, Result};

/// Best point found by [`nelder_mead_minimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// `false` when `max_iter` ran out; `point` is then the best vertex seen.
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;
const MAX_RESTARTS: usize = 8;

/// Derivative-free simplex minimization (Nelder–Mead with standard
/// coefficients).
///
/// Converges when every vertex lies within `tol.width_for(‖best‖∞)` of the
/// best vertex in each coordinate. After convergence the simplex is
/// rebuilt around the best point and the search resumed, until a restart
/// no longer moves it; this guards against the collapsed simplices the
/// plain method is prone to. Non-finite objective values are treated as
/// `+∞`.
pub fn nelder_mead_minimize<F>(mut objective: F, init: &[f64], tol: &ToleranceConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    tol.validate()?;
    if init.is_empty() {
        return Err(Error::Precondition("empty parameter vector".into()));
    }
    let f0 = objective(init);
    if !f0.is_finite() {
        return Err(Error::Precondition(format!(
            "objective is not finite at the initial point ({f0})"
        )));
    }

    let mut eval = |x: &[f64]| {
        let v = objective(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut best = init.to_vec();
    let mut best_value = f0;
    let mut iterations = 0;

    for _ in 0..=MAX_RESTARTS {
        let run = run_simplex(&mut eval, &best, best_value, tol, tol.max_iter - iterations);
        iterations += run.iterations;
        let moved = best
            .iter()
            .zip(&run.point)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let improved = run.value < best_value;
        if improved {
            best = run.point;
            best_value = run.value;
        }
        if !run.converged {
            return Ok(Minimum {
                point: best,
                value: best_value,
                iterations,
                converged: false,
            });
        }
        if !improved || moved <= tol.width_for(inf_norm(&best)) {
            break;
        }
    }

    Ok(Minimum {
        point: best,
        value: best_value,
        iterations,
        converged: true,
    })
}

fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn run_simplex<F>(
    eval: &mut F,
    start: &[f64],
    start_value: f64,
    tol: &ToleranceConfig,
    budget: usize,
) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), start_value));
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += if v[i] != 0.0 { 0.05 * v[i] } else { 2.5e-4 };
        let fv = eval(&v);
        simplex.push((v, fv));
    }

    let mut iterations = 0;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0].0;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(best).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter <= tol.width_for(inf_norm(best)) {
            return Minimum {
                point: simplex[0].0.clone(),
                value: simplex[0].1,
                iterations,
                converged: true,
            };
        }
        if iterations >= budget {
            return Minimum {
                point: simplex[0].0.clone(),
                value: simplex[0].1,
                iterations,
                converged: false,
            };
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = along(REFLECT);
        let f_r = eval(&reflected);
        if f_r < simplex[0].1 {
            let expanded = along(REFLECT * EXPAND);
            let f_e = eval(&expanded);
            simplex[n] = if f_e < f_r {
                (expanded, f_e)
            } else {
                (reflected, f_r)
            };
            continue;
        }
        if f_r < simplex[n - 1].1 {
            simplex[n] = (reflected, f_r);
            continue;
        }

        let (candidate, f_c) = if f_r < worst.1 {
            let outside = along(REFLECT * CONTRACT);
            let f = eval(&outside);
            (outside, f)
        } else {
            let inside = along(-CONTRACT);
            let f = eval(&inside);
            (inside, f)
        };
        if f_c < worst.1.min(f_r) {
            simplex[n] = (candidate, f_c);
            continue;
        }

        let anchor = simplex[0].0.clone();
        for (v, fv) in simplex.iter_mut().skip(1) {
            for (x, a) in v.iter_mut().zip(&anchor) {
                *x = a + SHRINK * (*x - a);
            }
            *fv = eval(v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol(max_iter: usize) -> ToleranceConfig {
        ToleranceConfig::new(1e-10, 1e-10, max_iter).unwrap()
    }

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| x.iter().map(|v| (v - 1.0).powi(2)).sum::<f64>();
        let m = nelder_mead_minimize(f, &[0.0; 4], &tol(20_000)).unwrap();
        assert!(m.converged);
        for v in &m.point {
            assert!((v - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn fixed_point() {
        let f = |x: &[f64]| (x[0] - 2.0).powi(2) + (x[1] + 1.0).powi(2);
        let m = nelder_mead_minimize(f, &[2.0, -1.0], &tol(20_000)).unwrap();
        assert!((m.point[0] - 2.0).abs() < 1e-8);
        assert!((m.point[1] + 1.0).abs() < 1e-8);
        assert!(m.value <= f(&[2.0, -1.0]));
    }

    /// Locates the Rosenbrock minimum by successively refined dense grids,
    /// independently of the simplex search.
    fn grid_refine_rosenbrock() -> (f64, f64) {
        let (mut cx, mut cy, mut half) = (0.0, 0.0, 3.0);
        for _ in 0..30 {
            let n = 200;
            let mut best = (f64::INFINITY, cx, cy);
            for i in 0..=n {
                for j in 0..=n {
                    let x = cx - half + 2.0 * half * i as f64 / n as f64;
                    let y = cy - half + 2.0 * half * j as f64 / n as f64;
                    let v = rosenbrock(&[x, y]);
                    if v < best.0 {
                        best = (v, x, y);
                    }
                }
            }
            cx = best.1;
            cy = best.2;
            half *= 0.25;
        }
        (cx, cy)
    }

    #[test]
    fn rosenbrock_valley() {
        let (gx, gy) = grid_refine_rosenbrock();
        assert!((gx - 1.0).abs() < 1e-6 && (gy - 1.0).abs() < 1e-6);
        let m = nelder_mead_minimize(rosenbrock, &[-1.2, 1.0], &tol(20_000)).unwrap();
        assert!(m.converged);
        assert!((m.point[0] - gx).abs() < 1e-3);
        assert!((m.point[1] - gy).abs() < 1e-3);
    }

    #[test]
    fn exhaustion_is_flagged() {
        let m = nelder_mead_minimize(rosenbrock, &[-1.2, 1.0], &tol(10)).unwrap();
        assert!(!m.converged);
        assert!(m.value <= rosenbrock(&[-1.2, 1.0]));
    }

    #[test]
    fn non_finite_start_rejected() {
        let r = nelder_mead_minimize(|_| f64::NAN, &[0.0], &tol(10));
        assert!(matches!(r, Err(Error::Precondition(_))));
    }
}

//! Derivative-free local minimisation in two variables.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Converged once every vertex is within this distance (max-norm) of the best.
    pub x_tolerance: f64,
    pub max_evaluations: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.01,
            x_tolerance: 1e-4,
            max_evaluations: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: [f64; 2],
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder-Mead with the standard coefficients (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2), started from a right-angled simplex at `x0`.
pub fn nelder_mead_2d<F>(mut f: F, x0: [f64; 2], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut([f64; 2]) -> f64,
{
    let mut evals = 0usize;
    let mut eval = |x: [f64; 2], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let h = opts.initial_step;
    let mut simplex: [([f64; 2], f64); 3] = [
        (x0, eval(x0, &mut evals)),
        ([x0[0] + h, x0[1]], eval([x0[0] + h, x0[1]], &mut evals)),
        ([x0[0], x0[1] + h], eval([x0[0], x0[1] + h], &mut evals)),
    ];

    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    let mut converged = false;

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].0;
        let spread = simplex[1..]
            .iter()
            .map(|(x, _)| (x[0] - best[0]).abs().max((x[1] - best[1]).abs()))
            .fold(0.0, f64::max);
        if spread < opts.x_tolerance {
            converged = true;
            break;
        }
        if evals >= opts.max_evaluations {
            break;
        }

        let centroid = lerp(simplex[0].0, simplex[1].0, 0.5);
        let worst = simplex[2];
        let reflected = lerp(centroid, worst.0, -1.0);
        let fr = eval(reflected, &mut evals);

        if fr < simplex[0].1 {
            let expanded = lerp(centroid, worst.0, -2.0);
            let fe = eval(expanded, &mut evals);
            simplex[2] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[1].1 {
            simplex[2] = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < worst.1 {
                let c = lerp(centroid, reflected, 0.5);
                (c, eval(c, &mut evals))
            } else {
                let c = lerp(centroid, worst.0, 0.5);
                (c, eval(c, &mut evals))
            };
            if fc < fr.min(worst.1) {
                simplex[2] = (contracted, fc);
            } else {
                for i in 1..3 {
                    let x = lerp(simplex[0].0, simplex[i].0, 0.5);
                    simplex[i] = (x, eval(x, &mut evals));
                }
            }
        }
    }

    Minimum {
        x: simplex[0].0,
        value: simplex[0].1,
        evaluations: evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let m = nelder_mead_2d(
            |x| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 0.5).powi(2),
            [0.0, 0.0],
            &NelderMeadOptions { initial_step: 0.5, x_tolerance: 1e-8, max_evaluations: 2000 },
        );
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] + 0.5).abs() < 1e-6);
    }

    #[test]
    fn rosenbrock() {
        let m = nelder_mead_2d(
            |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            [-1.2, 1.0],
            &NelderMeadOptions { initial_step: 0.1, x_tolerance: 1e-9, max_evaluations: 5000 },
        );
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{m:?}");
    }

    #[test]
    fn non_smooth_v_shape() {
        let m = nelder_mead_2d(
            |x| (x[0] - 0.3).abs() + 2.0 * (x[1] - 0.1).abs(),
            [0.0, 0.0],
            &NelderMeadOptions { initial_step: 0.05, x_tolerance: 1e-7, max_evaluations: 2000 },
        );
        assert!((m.x[0] - 0.3).abs() < 1e-5 && (m.x[1] - 0.1).abs() < 1e-5, "{m:?}");
    }

    #[test]
    fn evaluation_budget_is_respected() {
        let m = nelder_mead_2d(|x| x[0] + x[1], [0.0, 0.0], &NelderMeadOptions {
            initial_step: 1.0,
            x_tolerance: 1e-12,
            max_evaluations: 50,
        });
        assert!(!m.converged);
        assert!(m.evaluations <= 53);
    }
}

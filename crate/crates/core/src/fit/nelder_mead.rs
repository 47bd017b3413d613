//! Nelder-Mead simplex minimization over an unconstrained space.
//!
//! Standard coefficients (reflection 1, expansion 2, contraction 1/2,
//! shrink 1/2). The objective only needs point evaluations and may return
//! `f64::INFINITY` for infeasible regions; the simplex backs away from them.

#[derive(Debug, Clone)]
pub(crate) struct SimplexOptions {
    pub max_iters: usize,
    pub tol_f: f64,
    /// Edge length of the initial axis-aligned simplex.
    pub init_step: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct SimplexOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub n_evals: usize,
    pub converged: bool,
    /// Best objective value after each iteration (nonincreasing).
    pub trace: Vec<(usize, f64)>,
}

struct Vertex {
    x: Vec<f64>,
    f: f64,
}

pub(crate) fn minimize<F>(mut objective: F, x0: &[f64], opts: &SimplexOptions) -> SimplexOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut n_evals = 0;
    let mut eval = |x: &[f64], n_evals: &mut usize| -> f64 {
        *n_evals += 1;
        let f = objective(x);
        if f.is_nan() {
            f64::INFINITY
        } else {
            f
        }
    };

    if n == 0 {
        let f = eval(x0, &mut n_evals);
        return SimplexOutcome {
            x: x0.to_vec(),
            f,
            n_evals,
            converged: true,
            trace: vec![(0, f)],
        };
    }

    let mut simplex: Vec<Vertex> = Vec::with_capacity(n + 1);
    simplex.push(Vertex {
        x: x0.to_vec(),
        f: eval(x0, &mut n_evals),
    });
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.init_step;
        let f = eval(&x, &mut n_evals);
        simplex.push(Vertex { x, f });
    }

    let mut trace = Vec::new();
    let mut converged = false;

    for iter in 0..opts.max_iters {
        simplex.sort_by(|a, b| a.f.partial_cmp(&b.f).expect("no NaN objective"));
        let best = simplex[0].f;
        let worst = simplex[n].f;
        if best.is_finite() && worst.is_finite() {
            let spread = 2.0 * (worst - best).abs() / (worst.abs() + best.abs() + 1e-300);
            // The f-spread alone can vanish on a symmetric objective while
            // the simplex is still wide; require the simplex itself to have
            // collapsed too.
            let diameter = simplex[1..]
                .iter()
                .map(|v| {
                    v.x.iter()
                        .zip(&simplex[0].x)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            let x_scale = simplex[0].x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            if spread < opts.tol_f && diameter <= 1e-8 * x_scale {
                converged = true;
                trace.push((iter, best));
                break;
            }
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(&v.x) {
                *c += xi / n as f64;
            }
        }

        let second_worst = simplex[n - 1].f;
        let reflected: Vec<f64> = centroid
            .iter()
            .zip(&simplex[n].x)
            .map(|(c, w)| c + (c - w))
            .collect();
        let f_reflected = eval(&reflected, &mut n_evals);

        if f_reflected < simplex[0].f {
            // Try to go further in the same direction.
            let expanded: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n].x)
                .map(|(c, w)| c + 2.0 * (c - w))
                .collect();
            let f_expanded = eval(&expanded, &mut n_evals);
            simplex[n] = if f_expanded < f_reflected {
                Vertex {
                    x: expanded,
                    f: f_expanded,
                }
            } else {
                Vertex {
                    x: reflected,
                    f: f_reflected,
                }
            };
        } else if f_reflected < second_worst {
            simplex[n] = Vertex {
                x: reflected,
                f: f_reflected,
            };
        } else {
            // Contract toward the centroid, outside or inside.
            let (anchor, f_anchor) = if f_reflected < simplex[n].f {
                (&reflected, f_reflected)
            } else {
                (&simplex[n].x, simplex[n].f)
            };
            let contracted: Vec<f64> = centroid
                .iter()
                .zip(anchor)
                .map(|(c, a)| c + 0.5 * (a - c))
                .collect();
            let f_contracted = eval(&contracted, &mut n_evals);
            if f_contracted < f_anchor {
                simplex[n] = Vertex {
                    x: contracted,
                    f: f_contracted,
                };
            } else {
                // Shrink everything toward the best vertex.
                let best_x = simplex[0].x.clone();
                for v in &mut simplex[1..] {
                    for (xi, bi) in v.x.iter_mut().zip(&best_x) {
                        *xi = bi + 0.5 * (*xi - bi);
                    }
                    v.f = eval(&v.x, &mut n_evals);
                }
            }
        }

        let current_best = simplex
            .iter()
            .map(|v| v.f)
            .fold(f64::INFINITY, f64::min);
        trace.push((iter, current_best));
    }

    simplex.sort_by(|a, b| a.f.partial_cmp(&b.f).expect("no NaN objective"));
    SimplexOutcome {
        x: simplex[0].x.clone(),
        f: simplex[0].f,
        n_evals,
        converged,
        trace,
    }
}

//! Derivative-free minimizers for the small, smooth fitting problems in
//! [`crate::analysis`].

/// Result of a one-dimensional minimization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Minimum1d {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Minimum1d {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evaluations = 2;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        evaluations += 1;
        if evaluations > 10_000 {
            break;
        }
    }
    // Compare the interior points with both ends so a minimum sitting on a
    // bound is returned exactly.
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for end in [lo.min(hi), lo.max(hi)] {
        if (end - best.0).abs() <= 2.0 * tol {
            let fe = f(end);
            evaluations += 1;
            if fe <= best.1 {
                best = (end, fe);
            }
        }
    }
    Minimum1d {
        x: best.0,
        value: best.1,
        evaluations,
    }
}

/// Box constraints for [`nelder_mead`].
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    fn project(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadOptions {
    /// Initial simplex edge along each axis.
    pub initial_step: Vec<f64>,
    /// Stop when every vertex lies within this distance of the best one.
    pub x_tolerance: f64,
    /// ... and the objective spread is below this.
    pub f_tolerance: f64,
    pub max_iterations: usize,
    /// Restarts from the best vertex after a collapse; guards against
    /// premature stagnation on flat valleys.
    pub restarts: usize,
}

impl NelderMeadOptions {
    pub fn new(dim: usize) -> Self {
        Self {
            initial_step: vec![0.05; dim],
            x_tolerance: 1e-11,
            f_tolerance: 1e-20,
            max_iterations: 4000,
            restarts: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder–Mead simplex search. Trial points are projected onto `bounds`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    bounds: &Bounds,
    options: &NelderMeadOptions,
) -> NelderMeadResult {
    let mut best = start.to_vec();
    bounds.project(&mut best);
    let mut best_value = f(&best);
    let mut total_iterations = 0;
    let mut converged = false;

    for round in 0..=options.restarts {
        let run = simplex_run(&mut f, &best, bounds, options);
        total_iterations += run.iterations;
        let improvement = best_value - run.value;
        if run.value <= best_value {
            best = run.x;
            best_value = run.value;
        }
        // A fresh simplex that cannot improve on its starting point means
        // the minimum is genuine.
        if run.converged
            && round > 0
            && improvement <= options.f_tolerance.max(1e-15 * best_value.abs())
        {
            converged = true;
            break;
        }
    }
    NelderMeadResult {
        x: best,
        value: best_value,
        iterations: total_iterations,
        converged,
    }
}

fn simplex_run<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    start: &[f64],
    bounds: &Bounds,
    options: &NelderMeadOptions,
) -> NelderMeadResult {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        let step = options.initial_step.get(i).copied().unwrap_or(0.05);
        v[i] += step;
        if v[i] > bounds.upper[i] {
            v[i] = start[i] - step;
        }
        bounds.project(&mut v);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iterations {
        iterations += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread_x = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        let spread_f = values[n] - values[0];
        if spread_x <= options.x_tolerance
            && spread_f <= options.f_tolerance.max(1e-15 * values[0].abs())
        {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect();
            bounds.project(&mut p);
            p
        };

        let reflected = along(1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = along(2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            let (contracted, fc) = if fr < values[n] {
                let p = along(0.5);
                let v = f(&p);
                (p, v)
            } else {
                let p = along(-0.5);
                let v = f(&p);
                (p, v)
            };
            if fc < values[n].min(fr) {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    let shrunk: Vec<f64> = simplex[i]
                        .iter()
                        .zip(&simplex[0])
                        .map(|(v, b)| b + 0.5 * (v - b))
                        .collect();
                    values[i] = f(&shrunk);
                    simplex[i] = shrunk;
                }
            }
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    NelderMeadResult {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let m = golden_section(|x| (x - 0.3).powi(2) + 1.0, -2.0, 5.0, 1e-10);
        // Flat bottom: x is only resolved to about sqrt(eps).
        assert!((m.x - 0.3).abs() < 1e-7);
        assert!((m.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn golden_section_returns_bound_minimum() {
        let m = golden_section(|x| x, 0.0, 1.0, 1e-10);
        assert_eq!(m.x, 0.0);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let rosen = |p: &[f64]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2);
        let bounds = Bounds {
            lower: vec![-2.0, -2.0],
            upper: vec![2.0, 2.0],
        };
        let mut opts = NelderMeadOptions::new(2);
        opts.initial_step = vec![0.5, 0.5];
        let r = nelder_mead(rosen, &[-1.2, 1.0], &bounds, &opts);
        assert!(r.converged);
        assert!(
            (r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6,
            "{:?}",
            r.x
        );
    }

    #[test]
    fn nelder_mead_respects_bounds() {
        let f = |p: &[f64]| (p[0] + 1.0).powi(2) + (p[1] - 0.5).powi(2);
        let r = nelder_mead(f, &[0.5, 0.9], &Bounds::unit(2), &NelderMeadOptions::new(2));
        assert!(r.x[0].abs() < 1e-9, "{:?}", r.x);
        assert!((r.x[1] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn nelder_mead_is_deterministic() {
        let f = |p: &[f64]| (p[0] - 0.2).powi(2) + 3.0 * (p[1] - 0.7).powi(4) + p[2].powi(2);
        let a = nelder_mead(
            f,
            &[0.5, 0.5, 0.5],
            &Bounds::unit(3),
            &NelderMeadOptions::new(3),
        );
        let b = nelder_mead(
            f,
            &[0.5, 0.5, 0.5],
            &Bounds::unit(3),
            &NelderMeadOptions::new(3),
        );
        assert_eq!(a, b);
    }
}

//! Derivative-free simplex descent inside a box.
//!
//! Trial points that leave the box are mirrored back across the violated
//! face, so the objective is only ever evaluated at feasible points.

#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len(), "bound vectors differ in length");
        assert!(
            lower.iter().zip(&upper).all(|(l, u)| l <= u),
            "lower bound above upper bound"
        );
        Self { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    /// Mirrors each coordinate into `[lower, upper]`.
    pub fn reflect(&self, x: &mut [f64]) {
        for (v, (&lo, &hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            let width = hi - lo;
            if width == 0.0 {
                *v = lo;
                continue;
            }
            if !v.is_finite() {
                *v = lo;
                continue;
            }
            // fold onto a period of 2·width, then mirror the upper half
            let mut t = (*v - lo).rem_euclid(2.0 * width);
            if t > width {
                t = 2.0 * width - t;
            }
            *v = (lo + t).clamp(lo, hi);
        }
    }
}

#[derive(Clone, Debug)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// ... and the simplex diameter falls below this.
    pub x_tol: f64,
    /// Initial edge length as a fraction of each box width.
    pub initial_step: f64,
    /// Rebuild the simplex at the best point after convergence, up to this many times.
    pub rebuilds: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 4000,
            f_tol: 1e-18,
            x_tol: 1e-10,
            initial_step: 0.05,
            rebuilds: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
}

struct Counter<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counter<F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

fn initial_simplex(x0: &[f64], bounds: &Bounds, step: f64) -> Vec<Vec<f64>> {
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        let width = bounds.upper[i] - bounds.lower[i];
        let h = step * if width > 0.0 { width } else { 1.0 };
        // step toward the interior when starting on or near the upper face
        v[i] = if v[i] + h <= bounds.upper[i] { v[i] + h } else { v[i] - h };
        bounds.reflect(&mut v);
        simplex.push(v);
    }
    simplex
}

fn run_simplex<F: FnMut(&[f64]) -> f64>(
    counter: &mut Counter<F>,
    x0: &[f64],
    bounds: &Bounds,
    opts: &NelderMeadOptions,
    budget: usize,
) -> Minimum {
    let n = x0.len();
    let start = counter.evals;
    let mut pts = initial_simplex(x0, bounds, opts.initial_step);
    let mut vals: Vec<f64> = pts.iter().map(|p| counter.call(p)).collect();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let point = |c: &[f64], d: &[f64], t: f64| -> Vec<f64> {
        let mut v: Vec<f64> = c.iter().zip(d).map(|(ci, di)| ci + t * (di - ci)).collect();
        bounds.reflect(&mut v);
        v
    };

    while counter.evals - start < budget {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = vals[n] - vals[0];
        let diameter = pts[1..]
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&pts[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= opts.f_tol && diameter <= opts.x_tol {
            break;
        }
        if diameter == 0.0 {
            break;
        }

        let mut centroid = vec![0.0; n];
        for p in &pts[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let worst = pts[n].clone();
        let xr = point(&centroid, &worst, -alpha);
        let fr = counter.call(&xr);
        if fr < vals[0] {
            let xe = point(&centroid, &worst, -gamma);
            let fe = counter.call(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let xc = point(&centroid, &xr, rho);
            let fc = counter.call(&xc);
            (xc, fc)
        } else {
            let xc = point(&centroid, &worst, rho);
            let fc = counter.call(&xc);
            (xc, fc)
        };
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        // shrink toward the best vertex
        let best = pts[0].clone();
        for i in 1..=n {
            let v = point(&best, &pts[i], sigma);
            vals[i] = counter.call(&v);
            pts[i] = v;
        }
    }
    let i = (0..=n)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)))
        .expect("non-empty simplex");
    Minimum {
        x: pts[i].clone(),
        f: vals[i],
        evals: counter.evals - start,
    }
}

/// Minimizes `f` over `bounds` from `x0` (reflected into the box first).
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    bounds: &Bounds,
    opts: &NelderMeadOptions,
) -> Minimum {
    assert_eq!(x0.len(), bounds.dim(), "start point and bounds differ in dimension");
    let mut counter = Counter { f, evals: 0 };
    let mut start = x0.to_vec();
    bounds.reflect(&mut start);
    let mut best = run_simplex(&mut counter, &start, bounds, opts, opts.max_evals);
    for _ in 0..opts.rebuilds {
        let remaining = opts.max_evals.saturating_sub(counter.evals);
        if remaining <= bounds.dim() + 1 {
            break;
        }
        let again = run_simplex(&mut counter, &best.x, bounds, opts, remaining);
        let improved = again.f < best.f;
        if improved {
            best = again;
        }
        if !improved || best.f <= opts.f_tol {
            break;
        }
    }
    best.evals = counter.evals;
    best
}

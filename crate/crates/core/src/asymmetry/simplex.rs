//! Nelder–Mead downhill simplex.

#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    /// The simplex shrank below `tol` before the evaluation budget ran out.
    pub converged: bool,
}

/// Minimizes `f` from `start` with an initial simplex of per-coordinate `step`s.
/// Stops once every vertex lies within `tol` (max-norm) of the best one, or after
/// `budget` evaluations.
pub fn nelder_mead<F>(mut f: F, start: &[f64], step: &[f64], tol: f64, budget: usize) -> SimplexOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let d = start.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], count: &mut usize| {
        *count += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if d == 0 {
        let v = eval(start, &mut evaluations);
        return SimplexOutcome { x: vec![], f: v, evaluations, converged: true };
    }

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    pts.push(start.to_vec());
    for k in 0..d {
        let mut p = start.to_vec();
        p[k] += step[k];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p, &mut evaluations)).collect();
    let mut converged = false;

    while evaluations < budget {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let size = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if size < tol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; d];
        for p in &pts[..d] {
            for k in 0..d {
                centroid[k] += p[k] / d as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> { (0..d).map(|k| centroid[k] + t * (pts[d][k] - centroid[k])).collect() };

        let xr = along(-1.0);
        let fr = eval(&xr, &mut evaluations);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evaluations);
            if fe < fr {
                pts[d] = xe;
                vals[d] = fe;
            } else {
                pts[d] = xr;
                vals[d] = fr;
            }
            continue;
        }
        if fr < vals[d - 1] {
            pts[d] = xr;
            vals[d] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[d] {
            let x = along(-0.5);
            let v = eval(&x, &mut evaluations);
            (x, v)
        } else {
            let x = along(0.5);
            let v = eval(&x, &mut evaluations);
            (x, v)
        };
        if fc < vals[d].min(fr) {
            pts[d] = xc;
            vals[d] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=d {
            for k in 0..d {
                pts[i][k] = pts[0][k] + 0.5 * (pts[i][k] - pts[0][k]);
            }
            vals[i] = eval(&pts[i], &mut evaluations);
        }
    }

    let best = (0..=d).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    SimplexOutcome { x: pts[best].clone(), f: vals[best], evaluations, converged }
}

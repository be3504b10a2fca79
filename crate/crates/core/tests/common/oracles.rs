//! Brute-force reference solvers used to check the fast routines.

/// Euclidean projection onto {w ⪰ 0, ‖w‖∞ ≤ l, ‖w − 𝟏‖₁ ≤ b} by enumerating
/// every active-set pattern of the KKT system and keeping the closest
/// feasible candidate.
pub fn project_active_set(v: &[f64], b: f64, l: f64) -> Vec<f64> {
    let n = v.len();
    let c: Vec<f64> = v.iter().map(|x| x - 1.0).collect();
    let bounds = [-1.0, l - 1.0, 0.0];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut status = vec![0u8; n];
    // status: 0 lower, 1 upper, 2 zero, 3 free positive, 4 free negative
    loop {
        for l1_active in [false, true] {
            let mut fixed = 0.0;
            let mut free_sum = 0.0;
            let mut n_free = 0usize;
            for i in 0..n {
                match status[i] {
                    s @ 0..=2 => fixed += bounds[s as usize].abs(),
                    3 => {
                        free_sum += c[i];
                        n_free += 1;
                    }
                    _ => {
                        free_sum -= c[i];
                        n_free += 1;
                    }
                }
            }
            let lambda = if l1_active {
                if n_free == 0 {
                    continue;
                }
                let lam = (free_sum + fixed - b) / n_free as f64;
                if lam < 0.0 {
                    continue;
                }
                lam
            } else {
                0.0
            };
            let u: Vec<f64> = (0..n)
                .map(|i| match status[i] {
                    s @ 0..=2 => bounds[s as usize],
                    3 => c[i] - lambda,
                    _ => c[i] + lambda,
                })
                .collect();
            let sign_ok = (0..n).all(|i| match status[i] {
                3 => u[i] >= 0.0,
                4 => u[i] <= 0.0,
                _ => true,
            });
            let box_ok = u.iter().all(|&x| x >= -1.0 - 1e-12 && x <= l - 1.0 + 1e-12);
            let l1: f64 = u.iter().map(|x| x.abs()).sum();
            if !(sign_ok && box_ok && l1 <= b + 1e-9) {
                continue;
            }
            let d: f64 = u.iter().zip(&c).map(|(x, y)| (x - y).powi(2)).sum();
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, u));
            }
        }
        let mut k = 0;
        while k < n {
            status[k] += 1;
            if status[k] < 5 {
                break;
            }
            status[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    best.expect("𝒲 is nonempty")
        .1
        .iter()
        .map(|x| x + 1.0)
        .collect()
}

/// Every integer point of 𝒲.
pub fn integer_points(n: usize, b: u32, l: u32) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut w = vec![0u32; n];
    loop {
        let l1: u32 = w.iter().map(|&x| x.abs_diff(1)).sum();
        if l1 <= b {
            out.push(w.iter().map(|&x| f64::from(x)).collect());
        }
        let mut k = 0;
        while k < n {
            w[k] += 1;
            if w[k] <= l {
                break;
            }
            w[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    out
}

/// Closest integer point of 𝒲 to `w` and its squared distance.
pub fn round_enumerate(w: &[f64], b: u32, l: u32) -> (Vec<f64>, f64) {
    integer_points(w.len(), b, l)
        .into_iter()
        .map(|p| {
            let d: f64 = p.iter().zip(w).map(|(x, y)| (x - y).powi(2)).sum();
            (p, d)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("𝟏 is always feasible")
}

/// Projection onto 𝒲 by bisection on the ℓ₁ multiplier `τ`: each coordinate
/// is soft-thresholded around 1 by `τ`, then clipped to `[0, l]`.
pub fn project_bisection(v: &[f64], b: f64, l: f64) -> Vec<f64> {
    let at = |tau: f64| -> Vec<f64> {
        v.iter()
            .map(|&x| {
                let d = x - 1.0;
                (1.0 + d.signum() * (d.abs() - tau).max(0.0)).clamp(0.0, l)
            })
            .collect()
    };
    let l1 = |w: &[f64]| w.iter().map(|x| (x - 1.0).abs()).sum::<f64>();
    let free = at(0.0);
    if l1(&free) <= b {
        return free;
    }
    let (mut lo, mut hi) = (0.0, v.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if l1(&at(mid)) > b {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(hi)
}

/// Minimum of a smooth `f` over 𝒲 by projected gradient descent with
/// backtracking, started at `𝟏`.
pub fn projected_gradient_min(
    f: impl Fn(&[f64]) -> f64,
    grad: impl Fn(&[f64]) -> Vec<f64>,
    n: usize,
    b: f64,
    l: f64,
    iters: usize,
) -> (Vec<f64>, f64) {
    let mut x = vec![1.0; n];
    let mut fx = f(&x);
    let mut step = 1.0;
    for _ in 0..iters {
        let g = grad(&x);
        loop {
            let v: Vec<f64> = x.iter().zip(&g).map(|(a, gi)| a - step * gi).collect();
            let y = project_bisection(&v, b, l);
            let fy = f(&y);
            let lin: f64 = g
                .iter()
                .zip(y.iter().zip(&x))
                .map(|(gi, (a, c))| gi * (a - c))
                .sum();
            let sq: f64 = y.iter().zip(&x).map(|(a, c)| (a - c).powi(2)).sum();
            if fy <= fx + lin + sq / (2.0 * step) + 1e-15 || step < 1e-12 {
                x = y;
                fx = fy.min(fx);
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
    }
    (x, fx)
}

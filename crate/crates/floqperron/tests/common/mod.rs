//! Shared test oracles, independent of the library's solver paths.

/// Characteristic polynomial coefficients `c[0] + c[1]λ + … + c[n]λ^n`
/// (monic) by the Faddeev–LeVerrier recurrence.
pub fn char_poly(dim: usize, entries: &[f64]) -> Vec<f64> {
    let n = dim;
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut m = vec![0.0; n * n]; // M_1 = I
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    for k in 1..=n {
        // AM = A · M
        let mut am = vec![0.0; n * n];
        for i in 0..n {
            for l in 0..n {
                let a = entries[i * n + l];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    am[i * n + j] += a * m[l * n + j];
                }
            }
        }
        let trace: f64 = (0..n).map(|i| am[i * n + i]).sum();
        c[n - k] = -trace / k as f64;
        m = am;
        for i in 0..n {
            m[i * n + i] += c[n - k];
        }
    }
    c
}

pub fn eval_poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &coeff| acc * x + coeff)
}

/// Rightmost real root of the polynomial on `[lo, hi]` by a dense scan for
/// sign changes with bisection refinement; even-multiplicity roots are
/// caught as near-zero local minima of |p|.
pub fn rightmost_real_root(c: &[f64], lo: f64, hi: f64) -> f64 {
    let n = 400_000;
    let h = (hi - lo) / n as f64;
    let scale = c.iter().map(|x| x.abs()).fold(1.0, f64::max);

    let mut best_sign_change: Option<(f64, f64)> = None;
    let mut prev = eval_poly(c, lo);
    for k in 1..=n {
        let x = lo + k as f64 * h;
        let val = eval_poly(c, x);
        if prev == 0.0 {
            best_sign_change = Some((x - h, x - h));
        } else if prev * val < 0.0 {
            best_sign_change = Some((x - h, x));
        }
        prev = val;
    }
    if let Some((mut a, mut b)) = best_sign_change {
        if a == b {
            return a;
        }
        let fa = eval_poly(c, a);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            let fm = eval_poly(c, mid);
            if fa * fm > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        return 0.5 * (a + b);
    }

    // even multiplicity: rightmost grid point where |p| dips to ~0
    let touch = 1e-9 * scale;
    let mut best: Option<f64> = None;
    for k in 0..=n {
        let x = lo + k as f64 * h;
        if eval_poly(c, x).abs() < touch {
            best = Some(x);
        }
    }
    let x0 = best.expect("polynomial has a real root in the bracket");
    // golden-section polish of |p|
    let (mut a, mut b) = (x0 - h, x0 + h);
    for _ in 0..200 {
        let m1 = a + 0.382 * (b - a);
        let m2 = a + 0.618 * (b - a);
        if eval_poly(c, m1).abs() < eval_poly(c, m2).abs() {
            b = m2;
        } else {
            a = m1;
        }
    }
    0.5 * (a + b)
}

/// Spectral bound for bracketing: max absolute row sum plus one.
pub fn scan_bracket(dim: usize, entries: &[f64]) -> (f64, f64) {
    let norm = (0..dim)
        .map(|i| {
            entries[i * dim..(i + 1) * dim]
                .iter()
                .map(|x| x.abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    (-(norm + 1.0), norm + 1.0)
}

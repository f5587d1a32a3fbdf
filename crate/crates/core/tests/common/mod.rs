//! Brute-force oracles shared by the integration tests. Nothing here calls
//! into the crate's kernels, quadrature or assembly.
#![allow(dead_code)]

use statrs::function::gamma::gamma;

/// Tanh-sinh rule on [l, r]. The integrand receives x together with its
/// distances to both ends so endpoint singularities keep full precision.
pub fn tanh_sinh(l: f64, r: f64, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    let hw = 0.5 * (r - l);
    let step = 1.0 / 64.0;
    let mut acc = 0.0;
    for j in -(4 * 64)..=(4 * 64) {
        let t = j as f64 * step;
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let dl = hw * 2.0 / (1.0 + (-2.0 * u).exp());
        let dr = hw * 2.0 / (1.0 + (2.0 * u).exp());
        if dl <= 0.0 || dr <= 0.0 {
            continue;
        }
        let w = hw * step * std::f64::consts::FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        acc += w * f(l + dl, dl, dr);
    }
    acc
}

/// Three-point Gauss-Legendre on [l, r].
pub fn gauss3(l: f64, r: f64, f: impl Fn(f64) -> f64) -> f64 {
    let c = 0.5 * (l + r);
    let hw = 0.5 * (r - l);
    let z = (0.6f64).sqrt();
    hw * (5.0 * f(c - hw * z) + 8.0 * f(c) + 5.0 * f(c + hw * z)) / 9.0
}

/// Cell [a, b] of the primal (N cells) or dual (N+1 cells, halves at the ends) mesh.
pub fn cells(n: usize, dual: bool) -> Vec<(f64, f64)> {
    let h = 1.0 / n as f64;
    if !dual {
        return (0..n).map(|i| (i as f64 * h, (i + 1) as f64 * h)).collect();
    }
    (0..=n)
        .map(|i| {
            let l = if i == 0 { 0.0 } else { (i as f64 - 0.5) * h };
            let r = if i == n { 1.0 } else { (i as f64 + 0.5) * h };
            (l, r)
        })
        .collect()
}

/// Orthonormal linear basis on [a, b] as (c0, c1) in c0 + c1 (x - a).
pub fn linear_mode(a: f64, b: f64, m: usize) -> (f64, f64) {
    let w = b - a;
    match m {
        0 => (1.0 / w.sqrt(), 0.0),
        1 => (-(3.0 / w).sqrt(), 2.0 * 3f64.sqrt() * w.powf(-1.5)),
        _ => unreachable!(),
    }
}

pub fn mode_value(a: f64, b: f64, m: usize, x: f64) -> f64 {
    let (c0, c1) = linear_mode(a, b, m);
    c0 + c1 * (x - a)
}

pub fn mode_slope(a: f64, b: f64, m: usize) -> f64 {
    linear_mode(a, b, m).1
}

/// Left derivative of order s (lower limit 0) of (c0 + c1 (x - a)) on [a, b],
/// zero elsewhere; `xa` and `xb` are x - a and x - b.
pub fn left_linear(c0: f64, c1: f64, s: f64, xa: f64, xb: f64) -> f64 {
    if xa <= 0.0 {
        return 0.0;
    }
    let g = gamma(1.0 - s);
    if xb <= 0.0 {
        return c0 * xa.powf(-s) / g + c1 * xa.powf(1.0 - s) / gamma(2.0 - s);
    }
    let d0 = (xa.powf(-s) - xb.powf(-s)) / g;
    let d1 = (xa.powf(1.0 - s) / (1.0 - s) - s * xb.powf(1.0 - s) / (1.0 - s) - xa * xb.powf(-s)) / g;
    c0 * d0 + c1 * d1
}

/// Right derivative of order s (upper limit 1) by reflection; `ax` and `bx`
/// are a - x and b - x.
pub fn right_linear(c0: f64, c1: f64, s: f64, w: f64, ax: f64, bx: f64) -> f64 {
    left_linear(c0 + c1 * w, -c1, s, bx, ax)
}

/// G[i][j] = (D_L^s b_j, D_R^s b_i) for the linear basis of one mesh.
pub fn gram(cells: &[(f64, f64)], s: f64) -> Vec<Vec<f64>> {
    let dim = 2 * cells.len();
    let mut g = vec![vec![0.0; dim]; dim];
    for (ci, &(ai, bi)) in cells.iter().enumerate() {
        for (cj, &(aj, bj)) in cells.iter().enumerate() {
            if aj >= bi {
                continue;
            }
            let mut cuts = vec![aj, bj, ai, bi];
            cuts.retain(|&c| c >= aj && c <= bi);
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            for mi in 0..2 {
                for mj in 0..2 {
                    let (p0, p1) = linear_mode(aj, bj, mj);
                    let (q0, q1) = linear_mode(ai, bi, mi);
                    let mut total = 0.0;
                    for w in cuts.windows(2) {
                        let (l, r) = (w[0], w[1]);
                        // offset from a breakpoint, exact when x sits next to it
                        let off = |x: f64, dl: f64, dr: f64, c: f64| {
                            if c == l {
                                dl
                            } else if c == r {
                                -dr
                            } else {
                                x - c
                            }
                        };
                        total += tanh_sinh(l, r, |x, dl, dr| {
                            let lj = left_linear(p0, p1, s, off(x, dl, dr, aj), off(x, dl, dr, bj));
                            let ri = right_linear(q0, q1, s, bi - ai, -off(x, dl, dr, ai), -off(x, dl, dr, bi));
                            lj * ri
                        });
                    }
                    g[2 * ci + mi][2 * cj + mj] = total;
                }
            }
        }
    }
    g
}

/// Gaussian elimination with partial pivoting.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, &v)| row.iter().copied().chain([v]).collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        let pivot = m[c].clone();
        for row in m.iter_mut().skip(c + 1) {
            let f = row[c] / pivot[c];
            for (v, p) in row.iter_mut().zip(&pivot).skip(c) {
                *v -= f * p;
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (m[r][n] - tail) / m[r][r];
    }
    x
}

pub fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

pub fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

/// Coupling from the field on `from` to tests on `to`:
/// -(v, phi') over overlaps plus end values of v phi n. With `keep_boundary`
/// false, ends on the domain boundary are dropped.
pub fn coupling(to: &[(f64, f64)], from: &[(f64, f64)], keep_boundary: bool) -> Vec<Vec<f64>> {
    let mut c = vec![vec![0.0; 2 * from.len()]; 2 * to.len()];
    for (ti, &(ta, tb)) in to.iter().enumerate() {
        for (fi, &(fa, fb)) in from.iter().enumerate() {
            let (l, r) = (ta.max(fa), tb.min(fb));
            if r <= l {
                continue;
            }
            for mt in 0..2 {
                for mf in 0..2 {
                    c[2 * ti + mt][2 * fi + mf] -= gauss3(l, r, |x| mode_slope(ta, tb, mt) * mode_value(fa, fb, mf, x));
                }
            }
        }
        for (end, normal) in [(ta, -1.0), (tb, 1.0)] {
            let boundary = end == 0.0 || end == 1.0;
            if boundary && !keep_boundary {
                continue;
            }
            let fi = from.iter().position(|&(fa, fb)| fa <= end && end <= fb && (fb > end || fb == 1.0)).unwrap();
            let (fa, fb) = from[fi];
            for mt in 0..2 {
                for mf in 0..2 {
                    c[2 * ti + mt][2 * fi + mf] += normal * mode_value(ta, tb, mt, end) * mode_value(fa, fb, mf, end);
                }
            }
        }
    }
    c
}

/// (b_from, phi_to) over overlaps.
pub fn overlap(to: &[(f64, f64)], from: &[(f64, f64)]) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; 2 * from.len()]; 2 * to.len()];
    for (ti, &(ta, tb)) in to.iter().enumerate() {
        for (fi, &(fa, fb)) in from.iter().enumerate() {
            let (l, r) = (ta.max(fa), tb.min(fb));
            if r <= l {
                continue;
            }
            for mt in 0..2 {
                for mf in 0..2 {
                    m[2 * ti + mt][2 * fi + mf] =
                        gauss3(l, r, |x| mode_value(ta, tb, mt, x) * mode_value(fa, fb, mf, x));
                }
            }
        }
    }
    m
}

/// Loads (f, phi) on one mesh for f polynomial of degree at most 3 in x.
pub fn load(cells: &[(f64, f64)], f: impl Fn(f64) -> f64) -> Vec<f64> {
    cells
        .iter()
        .flat_map(|&(a, b)| (0..2).map(move |m| (a, b, m)))
        .map(|(a, b, m)| gauss3(a, b, |x| f(x) * mode_value(a, b, m, x)))
        .collect()
}

/// Full 1D, k = 1 block operator [[A11, A12], [A21, A22]] acting on (u1, u2).
pub fn monolithic_operator(n: usize, alpha: f64, d: f64, tau_max: f64) -> Vec<Vec<f64>> {
    let s = 1.0 - alpha / 2.0;
    let primal = cells(n, false);
    let dual = cells(n, true);
    let (n1, n2) = (2 * primal.len(), 2 * dual.len());
    let mut a = vec![vec![0.0; n1 + n2]; n1 + n2];
    // rows of one mesh: relaxation toward the other field plus the flux term
    let mut fill = |to: &[(f64, f64)], from: &[(f64, f64)], row0: usize, own0: usize, other0: usize| {
        let g = gram(from, s);
        let gt = transpose(&g);
        let aux = coupling(from, to, false);
        let flux = coupling(to, from, true);
        let mass = overlap(to, from);
        // column by column: u on `to` -> fluxes on `from` -> rate on `to`
        for col in 0..2 * to.len() {
            let rhs: Vec<f64> = aux.iter().map(|row| row[col]).collect();
            let q: Vec<f64> = solve(&g, &rhs).iter().zip(solve(&gt, &rhs)).map(|(l, r)| l + r).collect();
            for (i, v) in matvec(&flux, &q).into_iter().enumerate() {
                a[row0 + i][own0 + col] += d * v;
            }
        }
        for i in 0..2 * to.len() {
            a[row0 + i][own0 + i] -= 1.0 / tau_max;
            for j in 0..2 * from.len() {
                a[row0 + i][other0 + j] += mass[i][j] / tau_max;
            }
        }
    };
    fill(&primal, &dual, 0, 0, n1);
    fill(&dual, &primal, n1, n1, 0);
    a
}

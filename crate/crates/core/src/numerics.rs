//! Small shared numerical toolbox: dense solves, least squares, quadrature,
//! splines, and slope fitting.

use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Dense linear algebra (tiny systems only: the crate never solves anything
// larger than a few dozen unknowns densely).
// ---------------------------------------------------------------------------

/// Solve `A x = b` by LU with partial pivoting. `a` is row-major `n x n`.
/// Returns the solution together with a cheap 1-norm condition estimate.
pub fn solve_dense(a: &[f64], b: &[f64], n: usize) -> Result<(Vec<f64>, f64)> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let mut lu = a.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let norm_a = (0..n)
        .map(|j| (0..n).map(|i| lu[i * n + j].abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);

    for col in 0..n {
        let (mut pivot_row, mut pivot_val) = (col, lu[perm[col] * n + col].abs());
        for row in col + 1..n {
            let v = lu[perm[row] * n + col].abs();
            if v > pivot_val {
                pivot_row = row;
                pivot_val = v;
            }
        }
        if pivot_val == 0.0 {
            return Err(Error::numerical("singular matrix in solve_dense"));
        }
        perm.swap(col, pivot_row);
        let p = perm[col];
        for row in col + 1..n {
            let r = perm[row];
            let factor = lu[r * n + col] / lu[p * n + col];
            lu[r * n + col] = factor;
            for j in col + 1..n {
                lu[r * n + j] -= factor * lu[p * n + j];
            }
        }
    }

    let solve_with = |lu: &[f64], perm: &[usize], rhs: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = rhs[perm[i]];
            for j in 0..i {
                s -= lu[perm[i] * n + j] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= lu[perm[i] * n + j] * y[j];
            }
            y[i] = s / lu[perm[i] * n + i];
        }
        y
    };

    let mut x = solve_with(&lu, &perm, b);
    // One step of iterative refinement tightens the residual to O(eps).
    let mut r = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for j in 0..n {
            s -= a[i * n + j] * x[j];
        }
        r[i] = s;
    }
    let dx = solve_with(&lu, &perm, &r);
    for i in 0..n {
        x[i] += dx[i];
    }

    // Condition estimate: ||A||_1 * ||A^{-1} e||_1 maximized over a few probes.
    let mut inv_norm = 0.0_f64;
    for probe in 0..n {
        let mut e = vec![0.0; n];
        e[probe] = 1.0;
        let col = solve_with(&lu, &perm, &e);
        inv_norm = inv_norm.max(col.iter().map(|v| v.abs()).sum());
    }
    Ok((x, norm_a * inv_norm))
}

/// Least squares `min ||A x - b||_2` via Householder QR. `a` is row-major
/// `m x n` with `m >= n`. Returns the coefficient vector.
pub fn lstsq(a: &[f64], b: &[f64], m: usize, n: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), m * n);
    assert_eq!(b.len(), m);
    if m < n {
        return Err(Error::invalid("lstsq: fewer rows than unknowns"));
    }
    let mut q = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let mut norm = 0.0;
        for row in col..m {
            norm += q[row * n + col] * q[row * n + col];
        }
        let norm = norm.sqrt();
        if norm == 0.0 {
            return Err(Error::numerical("rank-deficient least squares"));
        }
        let alpha = if q[col * n + col] >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; m];
        v[col] = q[col * n + col] - alpha;
        for row in col + 1..m {
            v[row] = q[row * n + col];
        }
        let vtv: f64 = v[col..].iter().map(|x| x * x).sum();
        if vtv == 0.0 {
            continue;
        }
        for j in col..n {
            let mut dot = 0.0;
            for row in col..m {
                dot += v[row] * q[row * n + j];
            }
            let f = 2.0 * dot / vtv;
            for row in col..m {
                q[row * n + j] -= f * v[row];
            }
        }
        let mut dot = 0.0;
        for row in col..m {
            dot += v[row] * rhs[row];
        }
        let f = 2.0 * dot / vtv;
        for row in col..m {
            rhs[row] -= f * v[row];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s -= q[i * n + j] * x[j];
        }
        let d = q[i * n + i];
        if d == 0.0 {
            return Err(Error::numerical("rank-deficient least squares"));
        }
        x[i] = s / d;
    }
    Ok(x)
}

/// Straight-line fit `y ≈ a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("linear_fit needs >= 2 matching samples"));
    }
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| u * v).sum();
    let det = n * sxx - sx * sx;
    if det == 0.0 {
        return Err(Error::numerical("degenerate abscissae in linear_fit"));
    }
    let b = (n * sxy - sx * sy) / det;
    let a = (sy - b * sx) / n;
    Ok((a, b))
}

/// Slope of `log y` against `log x`; all entries must be positive in `x`
/// and nonzero in `y`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    Ok(linear_fit(&lx, &ly)?.1)
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

/// 16-point Gauss–Legendre nodes/weights on [-1, 1] (positive half; mirror
/// for the negative nodes).
const GL16_X: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_9,
    0.458_016_777_657_227_4,
    0.617_876_244_402_643_7,
    0.755_404_408_355_003,
    0.865_631_202_387_831_7,
    0.944_575_023_073_232_6,
    0.989_400_934_991_649_9,
];
const GL16_W: [f64; 8] = [
    0.189_450_610_455_068_5,
    0.182_603_415_044_923_6,
    0.169_156_519_395_002_54,
    0.149_595_988_816_576_73,
    0.124_628_971_255_533_87,
    0.095_158_511_682_492_78,
    0.062_253_523_938_647_89,
    0.027_152_459_411_754_095,
];

/// 16-point Gauss–Legendre on `[a, b]`.
pub fn gauss16<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for i in 0..8 {
        s += GL16_W[i] * (f(c + h * GL16_X[i]) + f(c - h * GL16_X[i]));
    }
    s * h
}

/// Composite Gauss–Legendre over `panels` equal panels of `[a, b]`.
pub fn gauss_panels<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let mut s = 0.0;
    let h = (b - a) / panels as f64;
    for i in 0..panels {
        s += gauss16(f, a + i as f64 * h, a + (i + 1) as f64 * h);
    }
    s
}

/// Adaptive panel-splitting Gauss quadrature with absolute tolerance.
pub fn adaptive_gauss<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = gauss16(f, a, m);
        let right = gauss16(f, m, b);
        let err = (left + right - whole).abs();
        if err < tol || depth >= 28 {
            left + right
        } else {
            recurse(f, a, m, left, 0.5 * tol, depth + 1)
                + recurse(f, m, b, right, 0.5 * tol, depth + 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let whole = gauss16(f, a, b);
    recurse(f, a, b, whole, tol, 0)
}

/// Composite quadrature on geometrically graded panels accumulating toward
/// the endpoint `b` (useful for integrands that steepen near `b`).
pub fn gauss_graded_toward<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    panels: usize,
    ratio: f64,
) -> f64 {
    let mut edges = Vec::with_capacity(panels + 1);
    let mut w = 1.0;
    let mut acc = 0.0;
    let mut widths = Vec::with_capacity(panels);
    for _ in 0..panels {
        widths.push(w);
        acc += w;
        w /= ratio;
    }
    let scale = (b - a) / acc;
    let mut x = a;
    edges.push(a);
    for w in widths {
        x += w * scale;
        edges.push(x);
    }
    let mut s = 0.0;
    for i in 0..panels {
        s += gauss16(f, edges[i], edges[i + 1]);
    }
    s
}

// ---------------------------------------------------------------------------
// Interpolation
// ---------------------------------------------------------------------------

/// Natural cubic spline on strictly increasing abscissae.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    // second derivatives at the nodes
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n != ys.len() || n < 2 {
            return Err(Error::invalid("spline needs >= 2 matching samples"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("spline abscissae must be increasing"));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for interior second derivatives.
            let mut diag = vec![0.0; n - 2];
            let mut sub = vec![0.0; n - 2];
            let mut sup = vec![0.0; n - 2];
            let mut rhs = vec![0.0; n - 2];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                sub[i - 1] = h0 / 6.0;
                diag[i - 1] = (h0 + h1) / 3.0;
                sup[i - 1] = h1 / 6.0;
                rhs[i - 1] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
            }
            let sol = solve_tridiag(&sub, &diag, &sup, &rhs)?;
            m[1..n - 1].copy_from_slice(&sol);
        }
        Ok(CubicSpline {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            m,
        })
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self
            .xs
            .binary_search_by(|v| v.partial_cmp(&x).expect("NaN abscissa"))
        {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        (self.ys[i + 1] - self.ys[i]) / h
            + ((3.0 * b * b - 1.0) * self.m[i + 1] - (3.0 * a * a - 1.0) * self.m[i]) * h / 6.0
    }

    pub fn second_deriv(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        a * self.m[i] + b * self.m[i + 1]
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }
}

/// Thomas algorithm for a tridiagonal system (diagonally dominant inputs).
pub fn solve_tridiag(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(Error::numerical("tridiagonal pivot breakdown"));
    }
    d[0] = rhs[0] / beta;
    for i in 1..n {
        c[i - 1] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c[i - 1];
        if beta == 0.0 {
            return Err(Error::numerical("tridiagonal pivot breakdown"));
        }
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Monotone piecewise-cubic (Fritsch–Carlson) interpolation used when
/// regridding simulator snapshots; avoids overshoot near steep cores.
pub fn pchip_interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    debug_assert!(n >= 2);
    let i = match xs.binary_search_by(|v| v.partial_cmp(&x).expect("NaN")) {
        Ok(i) => return ys[i],
        Err(0) => 0,
        Err(i) if i >= n => n - 2,
        Err(i) => i - 1,
    };
    let h = xs[i + 1] - xs[i];
    let d = (ys[i + 1] - ys[i]) / h;
    let slope_at = |j: usize| -> f64 {
        if j == 0 {
            (ys[1] - ys[0]) / (xs[1] - xs[0])
        } else if j == n - 1 {
            (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2])
        } else {
            let h0 = xs[j] - xs[j - 1];
            let h1 = xs[j + 1] - xs[j];
            let d0 = (ys[j] - ys[j - 1]) / h0;
            let d1 = (ys[j + 1] - ys[j]) / h1;
            if d0 * d1 <= 0.0 {
                0.0
            } else {
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                (w1 + w2) / (w1 / d0 + w2 / d1)
            }
        }
    };
    let mut m0 = slope_at(i);
    let mut m1 = slope_at(i + 1);
    if d == 0.0 {
        m0 = 0.0;
        m1 = 0.0;
    }
    let t = (x - xs[i]) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    ys[i] * (2.0 * t3 - 3.0 * t2 + 1.0)
        + m0 * h * (t3 - 2.0 * t2 + t)
        + ys[i + 1] * (-2.0 * t3 + 3.0 * t2)
        + m1 * h * (t3 - t2)
}

// ---------------------------------------------------------------------------
// ODE helper
// ---------------------------------------------------------------------------

/// One classical RK4 step for a 2-component system `y' = f(x, y)`.
pub fn rk4_step2<F: Fn(f64, [f64; 2]) -> [f64; 2]>(f: &F, x: f64, y: [f64; 2], h: f64) -> [f64; 2] {
    let k1 = f(x, y);
    let k2 = f(x + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
    let k3 = f(x + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
    let k4 = f(x + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quadrature_polynomial_exactness() {
        let f = |x: f64| 3.0 * x * x * x - x + 2.0;
        assert_relative_eq!(gauss16(&f, -1.0, 2.0), 15.75, max_relative = 1e-13);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let f = |x: f64| (-100.0 * (x - 0.3) * (x - 0.3)).exp();
        let exact = (std::f64::consts::PI / 100.0).sqrt();
        assert_relative_eq!(adaptive_gauss(&f, -4.0, 4.0, 1e-12), exact, epsilon = 1e-10);
    }

    #[test]
    fn dense_solve_and_refinement() {
        let a = [4.0, 1.0, 2.0, 1.0, 5.0, 1.0, 2.0, 1.0, 6.0];
        let b = [1.0, 2.0, 3.0];
        let (x, cond) = solve_dense(&a, &b, 3).unwrap();
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert_relative_eq!(r, b[i], epsilon = 1e-13);
        }
        assert!(cond > 1.0 && cond < 100.0);
    }

    #[test]
    fn lstsq_recovers_polynomial() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 / 39.0).collect();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for &x in &xs {
            a.extend_from_slice(&[1.0, x, x * x]);
            b.push(2.0 - x + 0.5 * x * x);
        }
        let c = lstsq(&a, &b, xs.len(), 3).unwrap();
        assert_relative_eq!(c[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(c[1], -1.0, epsilon = 1e-12);
        assert_relative_eq!(c[2], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn spline_reproduces_smooth_function() {
        let xs: Vec<f64> = (0..200).map(|i| i as f64 * 0.01).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let sp = CubicSpline::new(&xs, &ys).unwrap();
        for &x in &[0.105, 0.5, 1.234, 1.9] {
            assert_relative_eq!(sp.eval(x), x.sin(), epsilon = 1e-7);
            assert_relative_eq!(sp.deriv(x), x.cos(), epsilon = 1e-4);
        }
    }

    #[test]
    fn loglog_slope_of_pure_power() {
        let xs: Vec<f64> = (1..20).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(2.5)).collect();
        assert_relative_eq!(loglog_slope(&xs, &ys).unwrap(), 2.5, epsilon = 1e-12);
    }
}

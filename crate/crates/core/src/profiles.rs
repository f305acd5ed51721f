//! Exact and numerically constructed radial profiles.
//!
//! * the steady bubble `w(y) = 3^{1/4} (1+y²)^{-1/2}` with `Δw + w⁵ = 0`,
//! * the dilation kernel `Z₀(y) = (3^{1/4}/2)(y²-1)(1+y²)^{-3/2}` of the
//!   linearized operator `Δ + 5w⁴`,
//! * the corrector `J` solving `ΔJ + 5w⁴J + ½ y·∇w + w/4 = 0`, `J(0)=J'(0)=0`,
//!   both by outward ODE integration and by the variation-of-parameters
//!   quadrature,
//! * even Hermite polynomials and the self-similar outer profile
//!   `m(z) = A^{1/2} C_k H_{2k}(z/2) / z`,
//! * the negative eigenpair of `Δ + 5w⁴` on a radial grid.

use crate::grid::{FieldSnapshot, RadialGrid};
use crate::numerics::{adaptive_gauss, rk4_step2, CubicSpline};
use crate::residual::NormReport;
use crate::{Error, Result, THREE_Q};
use std::sync::OnceLock;

/// Point sample of a radial profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub y: f64,
    pub value: f64,
    pub derivative: f64,
}

fn check_radius(y: f64) -> Result<()> {
    if !(y >= 0.0) {
        return Err(Error::domain(format!("radius must be >= 0, got {y}")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Bubble and kernel (closed forms)
// ---------------------------------------------------------------------------

#[inline]
pub(crate) fn w(y: f64) -> f64 {
    THREE_Q / (1.0 + y * y).sqrt()
}

#[inline]
pub(crate) fn w_d1(y: f64) -> f64 {
    -THREE_Q * y * (1.0 + y * y).powf(-1.5)
}

#[inline]
pub(crate) fn w_d2(y: f64) -> f64 {
    THREE_Q * (2.0 * y * y - 1.0) * (1.0 + y * y).powf(-2.5)
}

/// `5 w⁴(y) = 15 / (1+y²)²`, the linearization potential.
#[inline]
pub(crate) fn five_w4(y: f64) -> f64 {
    15.0 / ((1.0 + y * y) * (1.0 + y * y))
}

#[inline]
pub(crate) fn z0(y: f64) -> f64 {
    0.5 * THREE_Q * (y * y - 1.0) * (1.0 + y * y).powf(-1.5)
}

#[inline]
pub(crate) fn z0_d1(y: f64) -> f64 {
    0.5 * THREE_Q * y * (5.0 - y * y) * (1.0 + y * y).powf(-2.5)
}

/// The bubble `w(y) = 3^{1/4}(1+y²)^{-1/2}`.
pub fn bubble_w(y: f64) -> Result<ProfileSample> {
    check_radius(y)?;
    Ok(ProfileSample {
        y,
        value: w(y),
        derivative: w_d1(y),
    })
}

/// Second radial derivative of the bubble.
pub fn bubble_w_second(y: f64) -> Result<f64> {
    check_radius(y)?;
    Ok(w_d2(y))
}

/// The dilation kernel `Z₀(y) = (3^{1/4}/2)(y²-1)(1+y²)^{-3/2}`, a radial
/// solution of `ΔZ₀ + 5w⁴ Z₀ = 0`.
pub fn kernel_z0(y: f64) -> Result<ProfileSample> {
    check_radius(y)?;
    Ok(ProfileSample {
        y,
        value: z0(y),
        derivative: z0_d1(y),
    })
}

// ---------------------------------------------------------------------------
// Hermite polynomials and the outer profile
// ---------------------------------------------------------------------------

pub const HERMITE_K_MAX: u32 = 12;

/// Physicists' Hermite polynomial `H_n(x)` by the three-term recurrence
/// `H_{n+1} = 2x H_n - 2n H_{n-1}` (internal; any degree).
pub(crate) fn hermite_h(n: u32, x: f64) -> f64 {
    let mut hm = 1.0; // H_0
    if n == 0 {
        return hm;
    }
    let mut h = 2.0 * x; // H_1
    for m in 1..n {
        let next = 2.0 * x * h - 2.0 * m as f64 * hm;
        hm = h;
        h = next;
    }
    h
}

/// Even Hermite polynomial `H_{2k}(x)` with the normalization
/// `H_{2k}(0) = (-1)^k (2k)!/k!`. Guarded to `1 <= k <= 12`.
pub fn hermite_even(k: u32, x: f64) -> Result<f64> {
    if k == 0 || k > HERMITE_K_MAX {
        return Err(Error::domain(format!(
            "hermite_even requires 1 <= k <= {HERMITE_K_MAX}, got {k}"
        )));
    }
    Ok(hermite_h(2 * k, x))
}

/// `C_k = (-1)^k k! sqrt(3) / (2k)!`.
pub fn c_k(k: u32) -> f64 {
    let mut ratio = 1.0; // k!/(2k)!
    for m in k + 1..=2 * k {
        ratio /= m as f64;
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    sign * ratio * 3.0_f64.sqrt()
}

/// Even Hermite polynomial in monomial form together with its defining data.
#[derive(Debug, Clone)]
pub struct HermiteProfile {
    pub k: u32,
    pub amplitude: f64,
    /// Coefficients of `H_{2k}` in the monomial basis, constant term first.
    pub coefficients: Vec<f64>,
}

impl HermiteProfile {
    pub fn new(k: u32, amplitude: f64) -> Result<Self> {
        if k == 0 || k > HERMITE_K_MAX {
            return Err(Error::domain("hermite profile requires 1 <= k <= 12"));
        }
        if !(amplitude > 0.0) {
            return Err(Error::domain("hermite profile requires A > 0"));
        }
        // coefficient recurrence mirrors the value recurrence
        let mut prev = vec![1.0]; // H_0
        let mut cur = vec![0.0, 2.0]; // H_1
        for m in 1..2 * k {
            let mut next = vec![0.0; m as usize + 2];
            for (p, &c) in cur.iter().enumerate() {
                next[p + 1] += 2.0 * c;
            }
            for (p, &c) in prev.iter().enumerate() {
                next[p] -= 2.0 * m as f64 * c;
            }
            prev = cur;
            cur = next;
        }
        Ok(HermiteProfile {
            k,
            amplitude,
            coefficients: cur,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |s, &c| s * x + c)
    }

    pub fn value_at_zero(&self) -> f64 {
        self.coefficients[0]
    }
}

/// Self-similar outer profile `m(z) = A^{1/2} C_k H_{2k}(z/2) / z`, the
/// radial eigenfunction of `m'' + (2/z - z/2) m' - (γ + 1/4) m = 0` with
/// `γ = 1/4 - k`.
pub fn outer_profile_m(k: u32, amplitude: f64, z: f64) -> Result<f64> {
    if k == 0 || k > HERMITE_K_MAX {
        return Err(Error::domain("outer profile requires 1 <= k <= 12"));
    }
    if !(z > 0.0) {
        return Err(Error::domain(
            "outer profile has a 1/z pole; use the small-z expansion at z = 0",
        ));
    }
    Ok(amplitude.sqrt() * c_k(k) * hermite_h(2 * k, 0.5 * z) / z)
}

/// Finite-difference stencil order for [`eigen_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdOrder {
    Two,
    Four,
}

/// Sup over the grid of the discretized ODE residual
/// `m'' + (2/z - z/2) m' - (γ + 1/4) m` for a callable profile.
pub fn eigen_residual<F: Fn(f64) -> f64>(
    m: &F,
    gamma: f64,
    grid: &RadialGrid,
    order: FdOrder,
) -> Result<NormReport> {
    let nodes = grid.nodes();
    if nodes[0] <= 0.0 {
        return Err(Error::domain("eigen_residual grid must exclude z = 0"));
    }
    let mut sup = 0.0;
    let mut arg = nodes[0];
    for (i, &z) in nodes.iter().enumerate() {
        let spacing = if i == 0 {
            nodes[1] - nodes[0]
        } else if i + 1 == nodes.len() {
            nodes[i] - nodes[i - 1]
        } else {
            (nodes[i + 1] - nodes[i]).min(nodes[i] - nodes[i - 1])
        };
        let reach = match order {
            FdOrder::Two => 1.0,
            FdOrder::Four => 2.0,
        };
        let h = spacing.min(z / (reach + 1.0));
        let (d1, d2) = match order {
            FdOrder::Two => {
                let (fm, f0, fp) = (m(z - h), m(z), m(z + h));
                ((fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h))
            }
            FdOrder::Four => {
                let (fm2, fm, f0, fp, fp2) =
                    (m(z - 2.0 * h), m(z - h), m(z), m(z + h), m(z + 2.0 * h));
                (
                    (fm2 - 8.0 * fm + 8.0 * fp - fp2) / (12.0 * h),
                    (-fm2 + 16.0 * fm - 30.0 * f0 + 16.0 * fp - fp2) / (12.0 * h * h),
                )
            }
        };
        let res = (d2 + (2.0 / z - 0.5 * z) * d1 - (gamma + 0.25) * m(z)).abs();
        if res > sup {
            sup = res;
            arg = z;
        }
    }
    Ok(NormReport::new("eigen_residual", sup, arg, f64::NAN))
}

// ---------------------------------------------------------------------------
// Corrector J
// ---------------------------------------------------------------------------

/// Taylor coefficients of `J = c₂ y² + c₄ y⁴ + O(y⁶)` at the origin,
/// obtained by matching `ΔJ + 5w⁴J = Z₀/2` order by order.
const J_C2_OVER_Q: f64 = -1.0 / 24.0;
const J_C4_OVER_Q: f64 = 1.0 / 16.0;

fn j_taylor(y: f64) -> (f64, f64) {
    let c2 = J_C2_OVER_Q * THREE_Q;
    let c4 = J_C4_OVER_Q * THREE_Q;
    (
        c2 * y * y + c4 * y * y * y * y,
        2.0 * c2 * y + 4.0 * c4 * y * y * y,
    )
}

/// Right-hand side of the first-order system for `(J, J')`:
/// `J'' = -2J'/y - 5w⁴ J + Z₀/2`.
fn j_ode(y: f64, s: [f64; 2]) -> [f64; 2] {
    [s[1], -2.0 * s[1] / y - five_w4(y) * s[0] + 0.5 * z0(y)]
}

/// Slope of the linear growth `J(y) ~ (3^{1/4}/8) y` at infinity.
pub fn j_asymptotic_slope() -> f64 {
    THREE_Q / 8.0
}

struct JTable {
    ys: Vec<f64>,
    vals: Vec<f64>,
    ders: Vec<f64>,
    /// `J(y) ≈ slope·y + offset` beyond the table.
    offset: f64,
    y_start: f64,
}

impl JTable {
    fn build() -> JTable {
        let y_start = 1e-3;
        let y_end = 2.0e4;
        let ratio = 1.002_f64;
        let mut ys = vec![y_start];
        let mut vals = Vec::new();
        let mut ders = Vec::new();
        let (v0, d0) = j_taylor(y_start);
        vals.push(v0);
        ders.push(d0);
        let mut y = y_start;
        let mut state = [v0, d0];
        while y < y_end {
            let h = (ratio - 1.0) * y;
            state = rk4_step2(&j_ode, y, state, h);
            y += h;
            ys.push(y);
            vals.push(state[0]);
            ders.push(state[1]);
        }
        let offset = state[0] - j_asymptotic_slope() * y;
        JTable {
            ys,
            vals,
            ders,
            offset,
            y_start,
        }
    }

    fn eval(&self, y: f64) -> (f64, f64) {
        if y < self.y_start {
            return j_taylor(y);
        }
        let last = *self.ys.last().expect("nonempty table");
        if y >= last {
            return (
                j_asymptotic_slope() * y + self.offset,
                j_asymptotic_slope(),
            );
        }
        let i = match self
            .ys
            .binary_search_by(|v| v.partial_cmp(&y).expect("NaN"))
        {
            Ok(i) => return (self.vals[i], self.ders[i]),
            Err(i) => i - 1,
        };
        // cubic Hermite on the segment: values and slopes are both tabulated
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let h = y1 - y0;
        let t = (y - y0) / h;
        let (t2, t3) = (t * t, t * t * t);
        let (v0, v1, d0, d1) = (self.vals[i], self.vals[i + 1], self.ders[i], self.ders[i + 1]);
        let value = v0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + d0 * h * (t3 - 2.0 * t2 + t)
            + v1 * (-2.0 * t3 + 3.0 * t2)
            + d1 * h * (t3 - t2);
        let deriv = (6.0 * t2 - 6.0 * t) * (v0 - v1) / h
            + d0 * (3.0 * t2 - 4.0 * t + 1.0)
            + d1 * (3.0 * t2 - 2.0 * t);
        (value, deriv)
    }
}

fn j_table() -> &'static JTable {
    static TABLE: OnceLock<JTable> = OnceLock::new();
    TABLE.get_or_init(JTable::build)
}

/// Fast path for the ODE-tabulated corrector: `(J, J')`.
pub(crate) fn j_value_deriv(y: f64) -> (f64, f64) {
    j_table().eval(y)
}

/// `J''` recovered from the defining equation.
pub fn j_second(y: f64) -> f64 {
    let (v, d) = j_value_deriv(y);
    if y == 0.0 {
        2.0 * J_C2_OVER_Q * THREE_Q
    } else {
        -2.0 * d / y - five_w4(y) * v + 0.5 * z0(y)
    }
}

/// Evaluation strategy for [`corrector_j`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JMethod {
    /// Outward integration of the defining ODE from a Taylor start.
    Ode,
    /// Variation-of-parameters quadrature built on the kernel `Z₀`.
    Quadrature,
}

/// Result of a corrector evaluation; `bridged` signals that the quadrature
/// representation crossed the removable singularity at the `Z₀` zero `y = 1`
/// and was continued by a short ODE bridge.
#[derive(Debug, Clone, Copy)]
pub struct JEval {
    pub sample: ProfileSample,
    pub bridged: bool,
}

/// Half-width of the ODE bridge around the `Z₀` zero at `y = 1`.
pub const J_BRIDGE_DELTA: f64 = 1e-2;

struct JQuadrature {
    /// spline of `I(s) = ½ ∫₀^s Z₀² u² du`
    inner: CubicSpline,
    /// `C₊ = J(1+δ)/Z₀(1+δ)`, the continuation constant past the zero,
    /// obtained by carrying the quadrature state across `[1-δ, 1+δ]` with
    /// a short ODE bridge
    c_plus: f64,
}

impl JQuadrature {
    fn build() -> Result<JQuadrature> {
        // The variation-of-parameters representation leans on Z₀ solving the
        // homogeneous equation; reverify that before trusting it.
        verify_z0_is_kernel()?;

        let s_max = 60.0;
        let n = 3000;
        let mut xs = Vec::with_capacity(n + 1);
        let mut ys = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        let mut prev = 0.0;
        for i in 0..=n {
            let s = s_max * i as f64 / n as f64;
            if i > 0 {
                acc += adaptive_gauss(&|u: f64| 0.5 * z0(u) * z0(u) * u * u, prev, s, 1e-14);
            }
            xs.push(s);
            ys.push(acc);
            prev = s;
        }
        let inner = CubicSpline::new(&xs, &ys)?;

        let lo = 1.0 - J_BRIDGE_DELTA;
        let hi = 1.0 + J_BRIDGE_DELTA;
        let q_lo = outer_integral(&inner, 0.0, lo, 0.0);
        let j_lo = z0(lo) * q_lo;
        let jp_lo = z0_d1(lo) * q_lo + inner.eval(lo) / (lo * lo * z0(lo));
        // short ODE bridge across the zero
        let steps = 400;
        let h = (hi - lo) / steps as f64;
        let mut state = [j_lo, jp_lo];
        let mut y = lo;
        for _ in 0..steps {
            state = rk4_step2(&j_ode, y, state, h);
            y += h;
        }
        Ok(JQuadrature {
            inner,
            c_plus: state[0] / z0(hi),
        })
    }
}

/// `∫_a^y I(s) / (s² Z₀²(s)) ds + base`, the outer integral of the
/// variation-of-parameters formula. `[a, y]` must not straddle the `Z₀`
/// zero at 1. Near the zero the integrand grows like `(s-1)^{-2}`, so the
/// tail is integrated in the variable `u = 1/|1-s|`, which makes it O(1).
fn outer_integral(inner: &CubicSpline, a: f64, y: f64, base: f64) -> f64 {
    let integrand = |s: f64| {
        if s == 0.0 {
            return 0.0;
        }
        inner.eval(s) / (s * s * z0(s) * z0(s))
    };
    let mut total = base;
    if y <= 1.0 {
        let split = 0.5_f64.max(a).min(y);
        total += adaptive_gauss(&integrand, a, split, 1e-12);
        if y > split {
            let f = |u: f64| integrand(1.0 - 1.0 / u) / (u * u);
            total += adaptive_gauss(&f, 1.0 / (1.0 - split), 1.0 / (1.0 - y), 1e-12);
        }
    } else {
        let split = 1.5_f64.min(y).max(a);
        if split > a {
            // s = 1 + 1/u maps [u_lo, u_hi] onto [a, split] reversed
            let f = |u: f64| integrand(1.0 + 1.0 / u) / (u * u);
            total += adaptive_gauss(&f, 1.0 / (split - 1.0), 1.0 / (a - 1.0), 1e-12);
        }
        if y > split {
            total += adaptive_gauss(&integrand, split, y, 1e-12);
        }
    }
    total
}

fn j_quadrature() -> Result<&'static JQuadrature> {
    static QUAD: OnceLock<std::result::Result<JQuadrature, String>> = OnceLock::new();
    QUAD.get_or_init(|| JQuadrature::build().map_err(|e| e.to_string()))
        .as_ref()
        .map_err(|e| Error::numerical(e.clone()))
}

fn verify_z0_is_kernel() -> Result<()> {
    for &y in &[0.5, 2.0, 5.0] {
        let h = 1e-4;
        let lap = (z0(y + h) - 2.0 * z0(y) + z0(y - h)) / (h * h)
            + (z0(y + h) - z0(y - h)) / (h * y);
        let res = lap + five_w4(y) * z0(y);
        if res.abs() > 1e-4 {
            return Err(Error::numerical(format!(
                "Z0 no longer solves the homogeneous equation (residual {res:.3e} at y={y})"
            )));
        }
    }
    Ok(())
}

/// The corrector `J`, by ODE integration or by the `Z₀`-based quadrature.
pub fn corrector_j(y: f64, method: JMethod) -> Result<JEval> {
    check_radius(y)?;
    match method {
        JMethod::Ode => {
            let (value, derivative) = j_value_deriv(y);
            Ok(JEval {
                sample: ProfileSample {
                    y,
                    value,
                    derivative,
                },
                bridged: false,
            })
        }
        JMethod::Quadrature => {
            let q = j_quadrature()?;
            let lo = 1.0 - J_BRIDGE_DELTA;
            let hi = 1.0 + J_BRIDGE_DELTA;
            if y <= 1e-3 {
                let (value, derivative) = j_taylor(y);
                return Ok(JEval {
                    sample: ProfileSample {
                        y,
                        value,
                        derivative,
                    },
                    bridged: false,
                });
            }
            if y < lo {
                let qv = outer_integral(&q.inner, 0.0, y, 0.0);
                let value = z0(y) * qv;
                let derivative = z0_d1(y) * qv + q.inner.eval(y) / (y * y * z0(y));
                Ok(JEval {
                    sample: ProfileSample {
                        y,
                        value,
                        derivative,
                    },
                    bridged: false,
                })
            } else if y <= hi {
                // inside the removable-singularity bridge: integrate the ODE
                // from the left edge state
                let q_lo = outer_integral(&q.inner, 0.0, lo, 0.0);
                let mut state = [
                    z0(lo) * q_lo,
                    z0_d1(lo) * q_lo + q.inner.eval(lo) / (lo * lo * z0(lo)),
                ];
                let steps = ((y - lo) / (2.0 * J_BRIDGE_DELTA) * 400.0).ceil().max(1.0) as usize;
                let h = (y - lo) / steps as f64;
                let mut yy = lo;
                for _ in 0..steps {
                    state = rk4_step2(&j_ode, yy, state, h);
                    yy += h;
                }
                Ok(JEval {
                    sample: ProfileSample {
                        y,
                        value: state[0],
                        derivative: state[1],
                    },
                    bridged: true,
                })
            } else {
                let qv = outer_integral(&q.inner, hi, y, q.c_plus);
                let value = z0(y) * qv;
                let derivative = z0_d1(y) * qv + q.inner.eval(y) / (y * y * z0(y));
                Ok(JEval {
                    sample: ProfileSample {
                        y,
                        value,
                        derivative,
                    },
                    bridged: false,
                })
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Negative eigenpair of Δ + 5w⁴
// ---------------------------------------------------------------------------

/// Positive radial eigenfunction and the only negative eigenvalue of
/// `Δφ + 5w⁴φ + λφ = 0`.
#[derive(Debug, Clone)]
pub struct NegativeEigenpair {
    pub lambda_minus: f64,
    /// Gap to the next eigenvalue of the discretized operator.
    pub gap_to_next: f64,
    pub z_minus: FieldSnapshot,
}

/// Sturm-sequence count of eigenvalues of the symmetric tridiagonal matrix
/// `(diag, off)` strictly below `sigma`.
fn sturm_count(diag: &[f64], off: f64, sigma: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0_f64;
    for (i, &a) in diag.iter().enumerate() {
        d = if i == 0 {
            a - sigma
        } else {
            (a - sigma) - off * off / d
        };
        if d == 0.0 {
            d = 1e-300;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn bisect_eigenvalue(diag: &[f64], off: f64, index: usize, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(diag, off, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-13 * (1.0 + hi.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest eigenvalue of the radial operator `-Δ - 5w⁴` with a far-field
/// Dirichlet condition, together with its positive eigenfunction
/// (sup-normalized). Uses the `v = yφ` reduction to a 1d Schrödinger
/// problem, which is the symmetric `y² dy` discretization in disguise.
pub fn negative_eigenpair(grid: &RadialGrid) -> Result<NegativeEigenpair> {
    let y_max = grid.r_max();
    if y_max < 30.0 {
        return Err(Error::domain("negative_eigenpair needs y_max >= 30"));
    }
    let n = grid.len().max(256);
    let h = y_max / n as f64;

    // interior nodes i = 1..n-1 for v = yφ, v(0) = v(y_max) = 0
    let diag: Vec<f64> = (1..n)
        .map(|i| {
            let y = i as f64 * h;
            2.0 / (h * h) - five_w4(y)
        })
        .collect();
    let off = -1.0 / (h * h);

    let lo = -16.0;
    let hi = 4.0 / (h * h);
    if sturm_count(&diag, off, 0.0) == 0 {
        return Err(Error::numerical(
            "discretized operator has no negative eigenvalue",
        ));
    }
    let lambda0 = bisect_eigenvalue(&diag, off, 0, lo, hi);
    let lambda1 = bisect_eigenvalue(&diag, off, 1, lambda0 + 1e-12, hi);

    // inverse iteration for the eigenvector of the tridiagonal matrix
    let m = diag.len();
    let shift = lambda0 - 1e-8 * (1.0 + lambda0.abs());
    let mut v = vec![1.0; m];
    for _ in 0..8 {
        v = tridiag_solve_shifted(&diag, off, shift, &v)?;
        let norm = v.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::numerical("inverse iteration broke down"));
        }
        for x in &mut v {
            *x /= norm;
        }
    }
    let sign = v_max_sign(&v);
    if v.iter().any(|&x| x.abs() > 1e-12 && x * sign < 0.0) {
        return Err(Error::numerical("eigenvector is not single-signed"));
    }
    if sign < 0.0 {
        for x in &mut v {
            *x = -*x;
        }
    }

    // φ = v/y, extended to the origin by the regular limit
    let mut nodes = Vec::with_capacity(n + 1);
    let mut phi = Vec::with_capacity(n + 1);
    nodes.push(0.0);
    phi.push(0.0); // fixed below
    for i in 1..n {
        let y = i as f64 * h;
        nodes.push(y);
        phi.push(v[i - 1] / y);
    }
    nodes.push(y_max);
    phi.push(0.0);
    // quadratic extrapolation of the even function φ to y = 0
    phi[0] = (4.0 * phi[1] - phi[2]) / 3.0;
    let sup = phi.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    for x in &mut phi {
        *x /= sup;
    }

    let z_minus = FieldSnapshot::new(RadialGrid::from_nodes(nodes)?, phi)?;
    Ok(NegativeEigenpair {
        lambda_minus: lambda0,
        gap_to_next: lambda1 - lambda0,
        z_minus,
    })
}

fn v_max_sign(v: &[f64]) -> f64 {
    let mut best = 0.0;
    let mut sign = 1.0;
    for &x in v {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    sign
}

/// Solve `(T - shift I) x = b` for symmetric tridiagonal `T` with constant
/// off-diagonal. The shift always sits strictly below the smallest
/// eigenvalue here, so the shifted matrix is positive definite and the
/// pivot-free Thomas recursion is stable.
fn tridiag_solve_shifted(diag: &[f64], off: f64, shift: f64, b: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut beta = diag[0] - shift;
    if beta <= 0.0 {
        return Err(Error::numerical("shifted tridiagonal not positive definite"));
    }
    x[0] = b[0] / beta;
    for i in 1..n {
        c[i - 1] = off / beta;
        beta = (diag[i] - shift) - off * c[i - 1];
        if beta == 0.0 {
            return Err(Error::numerical("singular shifted tridiagonal"));
        }
        x[i] = (b[i] - off * x[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use approx::assert_relative_eq;

    #[test]
    fn bubble_values() {
        assert_relative_eq!(bubble_w(0.0).unwrap().value, THREE_Q, epsilon = 1e-15);
        assert_relative_eq!(
            bubble_w(1.0).unwrap().value,
            THREE_Q / 2.0_f64.sqrt(),
            epsilon = 1e-15
        );
        let y = 1e3;
        assert_relative_eq!(y * bubble_w(y).unwrap().value, THREE_Q, max_relative = 1e-6);
        assert!(bubble_w(-0.5).is_err());
    }

    #[test]
    fn bubble_solves_steady_equation() {
        // Δw + w⁵ = 0 in closed form
        for &y in &[0.1, 0.7, 2.0, 9.0] {
            let lap = w_d2(y) + 2.0 * w_d1(y) / y;
            assert_relative_eq!(lap, -w(y).powi(5), epsilon = 1e-13);
        }
    }

    #[test]
    fn z0_values_and_identity() {
        assert_relative_eq!(kernel_z0(1.0).unwrap().value, 0.0, epsilon = 1e-15);
        assert_relative_eq!(kernel_z0(0.0).unwrap().value, -0.5 * THREE_Q, epsilon = 1e-15);
        // Z₀ = -(y w' + w/2) pointwise
        for &y in &[0.0, 0.3, 1.0, 4.5, 20.0] {
            let direct = -(y * w_d1(y) + 0.5 * w(y));
            assert_relative_eq!(z0(y), direct, epsilon = 1e-14);
        }
    }

    #[test]
    fn z0_discrete_residual_refines_below_1e6() {
        // ΔZ₀ + 5w⁴Z₀ = 0, centered differences on [0, 50]
        let mut sups = Vec::new();
        for n in [64000, 128000, 256000] {
            let h = 50.0 / n as f64;
            let mut sup = 0.0_f64;
            for i in 1..n {
                let y = i as f64 * h;
                let lap = (z0(y + h) - 2.0 * z0(y) + z0(y - h)) / (h * h)
                    + (z0(y + h) - z0(y - h)) / (h * y);
                sup = sup.max((lap + five_w4(y) * z0(y)).abs());
            }
            sups.push(sup);
        }
        assert!(sups[2] < 1e-6, "sup residuals {sups:?}");
        // second-order convergence
        assert!(sups[0] / sups[1] > 3.0 && sups[1] / sups[2] > 3.0);
    }

    #[test]
    fn hermite_normalization_and_values() {
        assert_relative_eq!(hermite_even(1, 1.0).unwrap(), 2.0, epsilon = 1e-14);
        assert_relative_eq!(hermite_even(2, 0.0).unwrap(), 12.0, epsilon = 1e-14);
        for k in 1..=12u32 {
            let expect = {
                let mut v = 1.0f64; // (2k)!/k!
                for m in k + 1..=2 * k {
                    v *= m as f64;
                }
                if k % 2 == 1 {
                    -v
                } else {
                    v
                }
            };
            assert_eq!(hermite_even(k, 0.0).unwrap(), expect, "k={k}");
            let prof = HermiteProfile::new(k, 1.0).unwrap();
            assert_eq!(prof.coefficients.len(), 2 * k as usize + 1);
            assert_eq!(prof.value_at_zero(), expect);
        }
        assert!(hermite_even(0, 1.0).is_err());
        assert!(hermite_even(13, 1.0).is_err());
    }

    #[test]
    fn outer_profile_constant_and_pole() {
        // C₁ = -√3/2
        assert_relative_eq!(c_k(1), -0.5 * 3.0_f64.sqrt(), epsilon = 1e-15);
        assert!(outer_profile_m(1, 1.0, 0.0).is_err());
        // z → 0: z·m(z) → A^{1/2}√3
        let z = 1e-6;
        let m = outer_profile_m(3, 2.0, z).unwrap();
        assert_relative_eq!(z * m, 2.0_f64.sqrt() * 3.0_f64.sqrt(), max_relative = 1e-9);
    }

    #[test]
    fn eigen_residual_constant_profile() {
        let grid = RadialGrid::uniform_from(0.5, 8.0, 64).unwrap();
        let rep = eigen_residual(&|_z| 1.0, -0.25, &grid, FdOrder::Two).unwrap();
        assert!(rep.value < 1e-14);
    }

    #[test]
    fn eigen_residual_second_order_rate() {
        // refinement halves h; the residual of the exact eigenfunction
        // must decay at O(h²) for the 2nd-order stencil
        let m = |z: f64| outer_profile_m(1, 1.0, z).unwrap();
        let mut sups = Vec::new();
        for n in [200usize, 400, 800] {
            let grid = RadialGrid::uniform_from(1.0, 6.0, n).unwrap();
            sups.push(eigen_residual(&m, -0.75, &grid, FdOrder::Two).unwrap().value);
        }
        let rate1 = (sups[0] / sups[1]).log2();
        let rate2 = (sups[1] / sups[2]).log2();
        assert!(rate1 > 1.7 && rate2 > 1.7, "rates {rate1} {rate2}");
    }

    #[test]
    fn eigen_residual_fourth_order_hits_1e8() {
        // h is chosen so the O(h⁴) truncation and the rounding noise of the
        // Hermite evaluation (amplified by 1/h²) both stay below 1e-8
        for k in 1..=4u32 {
            let m = move |z: f64| outer_profile_m(k, 1.0, z).unwrap();
            let grid = RadialGrid::uniform_from(1.0, 5.0, 1000).unwrap();
            let gamma = 0.25 - k as f64;
            let rep = eigen_residual(&m, gamma, &grid, FdOrder::Four).unwrap();
            assert!(rep.value < 1e-8, "k={k} residual {}", rep.value);
        }
    }

    #[test]
    fn corrector_j_origin_and_growth() {
        let j0 = corrector_j(0.0, JMethod::Ode).unwrap().sample;
        assert_eq!(j0.value, 0.0);
        assert_eq!(j0.derivative, 0.0);
        let j = corrector_j(1e3, JMethod::Ode).unwrap().sample;
        assert_relative_eq!(j.value / 1e3, THREE_Q / 8.0, max_relative = 1e-2);
    }

    #[test]
    fn corrector_j_discrete_residual_of_defining_equation() {
        // ΔJ + 5w⁴J + ½ y·∇w + w/4 = 0 under refinement, order >= 2
        let mut sups = Vec::new();
        for n in [8000, 16000] {
            let h = 50.0 / n as f64;
            let mut sup = 0.0_f64;
            for i in 1..n {
                let y = i as f64 * h;
                let jm = j_value_deriv(y - h).0;
                let j0 = j_value_deriv(y).0;
                let jp = j_value_deriv(y + h).0;
                let lap = (jp - 2.0 * j0 + jm) / (h * h) + (jp - jm) / (h * y);
                let res = lap + five_w4(y) * j0 + 0.5 * y * w_d1(y) + 0.25 * w(y);
                sup = sup.max(res.abs());
            }
            sups.push(sup);
        }
        assert!(sups[1] < 1e-5, "{sups:?}");
        assert!(sups[0] / sups[1] > 3.0, "{sups:?}");
    }

    #[test]
    fn corrector_j_methods_agree() {
        let mut worst = 0.0_f64;
        for i in 0..=200 {
            let y = 50.0 * i as f64 / 200.0;
            let a = corrector_j(y, JMethod::Ode).unwrap().sample.value;
            let b = corrector_j(y, JMethod::Quadrature).unwrap().sample.value;
            worst = worst.max((a - b).abs());
        }
        assert!(worst < 1e-6, "sup gap {worst:.3e}");
    }

    #[test]
    fn corrector_j_quadrature_flags_bridge() {
        assert!(corrector_j(1.0, JMethod::Quadrature).unwrap().bridged);
        assert!(!corrector_j(0.5, JMethod::Quadrature).unwrap().bridged);
        assert!(!corrector_j(2.0, JMethod::Quadrature).unwrap().bridged);
    }

    #[test]
    fn negative_eigenpair_basic_properties() {
        let grid = RadialGrid::uniform(40.0, 4000).unwrap();
        let pair = negative_eigenpair(&grid).unwrap();
        assert!(pair.lambda_minus < 0.0);
        assert!(pair.lambda_minus + pair.gap_to_next >= 0.0);
        assert!(pair.z_minus.values.iter().all(|&v| v >= 0.0));
        assert_relative_eq!(pair.z_minus.sup_norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn negative_eigenpair_decay_rate() {
        let grid = RadialGrid::uniform(40.0, 4000).unwrap();
        let pair = negative_eigenpair(&grid).unwrap();
        let rate = (-pair.lambda_minus).sqrt();
        // log Z₋ + rate·y + log y should be flat on [10, 30]
        let nodes = pair.z_minus.grid.nodes();
        let mut xs = Vec::new();
        let mut qs = Vec::new();
        for (i, &y) in nodes.iter().enumerate() {
            if (10.0..=30.0).contains(&y) && pair.z_minus.values[i] > 0.0 {
                xs.push(y);
                qs.push(pair.z_minus.values[i].ln() + rate * y + y.ln());
            }
        }
        let (_, slope) = crate::numerics::linear_fit(&xs, &qs).unwrap();
        assert!(slope.abs() < 0.02 * rate, "slope {slope}, rate {rate}");
    }

    #[test]
    fn negative_eigenpair_grid_stability() {
        let lam1 = negative_eigenpair(&RadialGrid::uniform(40.0, 8000).unwrap())
            .unwrap()
            .lambda_minus;
        let lam2 = negative_eigenpair(&RadialGrid::uniform(40.0, 16000).unwrap())
            .unwrap()
            .lambda_minus;
        assert!((lam1 - lam2).abs() < 1e-4, "{lam1} vs {lam2}");
    }
}

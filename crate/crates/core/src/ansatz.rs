//! Scaling law, modulation bookkeeping, cutoffs, and the glued first
//! approximation
//! `U₁ = η₁ u_in + (1-η_{o1}) η_{o2} u_out`
//! with
//! `u_in = μ^{-1/2} w(x/μ) + 2 μ₀' μ^{1/2} J(x/μ)` and
//! `u_out = A^{1/2} (T-t)^k C_k H_{2k}(x / (2√(T-t))) / x`.
//!
//! Everything carries closed-form radial and time derivatives so the error
//! operator of the first approximation can be evaluated pointwise without
//! finite differences.

use crate::params::BlowupParams;
use crate::profiles::{self, c_k, hermite_h};
use crate::{Error, Result, THREE_Q};

// ---------------------------------------------------------------------------
// Scaling law μ₀
// ---------------------------------------------------------------------------

/// `μ₀(t) = √3 A (T-t)^{2k}`.
pub fn mu0(t: f64, p: &BlowupParams) -> Result<f64> {
    check_time(t, p)?;
    Ok(mu0_unchecked(t, p))
}

#[inline]
pub(crate) fn mu0_unchecked(t: f64, p: &BlowupParams) -> f64 {
    3.0_f64.sqrt() * p.big_a * (p.t_end - t).powi(2 * p.k as i32)
}

#[inline]
pub(crate) fn mu0_d1_unchecked(t: f64, p: &BlowupParams) -> f64 {
    let k2 = 2.0 * p.k as f64;
    -k2 * 3.0_f64.sqrt() * p.big_a * (p.t_end - t).powi(2 * p.k as i32 - 1)
}

#[inline]
pub(crate) fn mu0_d2_unchecked(t: f64, p: &BlowupParams) -> f64 {
    let k2 = 2.0 * p.k as f64;
    k2 * (k2 - 1.0) * 3.0_f64.sqrt() * p.big_a * (p.t_end - t).powi(2 * p.k as i32 - 2)
}

/// First and second time derivatives of `μ₀` in closed form.
pub fn mu0_derivatives(t: f64, p: &BlowupParams) -> Result<(f64, f64)> {
    check_time(t, p)?;
    Ok((mu0_d1_unchecked(t, p), mu0_d2_unchecked(t, p)))
}

fn check_time(t: f64, p: &BlowupParams) -> Result<()> {
    if !(t < p.t_end) {
        return Err(Error::domain(format!(
            "time {t} is not before the blow-up time {}",
            p.t_end
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Modulation path
// ---------------------------------------------------------------------------

/// Sampled modulation curves `t ↦ (μ₀, Λ, μ, α)` with the algebraic
/// couplings `μ = μ₀ (1+Λ)²` and `α = -3^{1/4} μ₀^{-1/2} (μ₀ Λ)'`.
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct ModulationPath {
    pub params: BlowupParams,
    times: Vec<f64>,
    lambda: Vec<f64>,
    lambda_dot: Vec<f64>,
}

impl ModulationPath {
    /// `Λ ≡ 0`: the pure leading-order scaling `μ = μ₀`.
    pub fn zero(params: BlowupParams, times: Vec<f64>) -> Result<Self> {
        let n = times.len();
        Self::from_samples(params, times, vec![0.0; n], vec![0.0; n])
    }

    pub fn from_samples(
        params: BlowupParams,
        times: Vec<f64>,
        lambda: Vec<f64>,
        lambda_dot: Vec<f64>,
    ) -> Result<Self> {
        if times.len() < 2 || times.len() != lambda.len() || times.len() != lambda_dot.len() {
            return Err(Error::invalid("modulation path needs matching samples"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("modulation times must increase"));
        }
        if *times.last().expect("nonempty") >= params.t_end {
            return Err(Error::invalid("modulation samples must stay before T"));
        }
        Ok(ModulationPath {
            params,
            times,
            lambda,
            lambda_dot,
        })
    }

    pub fn from_lambda<F, G>(
        params: BlowupParams,
        times: Vec<f64>,
        lam: F,
        lam_dot: G,
    ) -> Result<Self>
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        let lambda = times.iter().map(|&t| lam(t)).collect();
        let lambda_dot = times.iter().map(|&t| lam_dot(t)).collect();
        Self::from_samples(params, times, lambda, lambda_dot)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    fn interp(&self, data: &[f64], t: f64) -> f64 {
        let n = self.times.len();
        let i = match self
            .times
            .binary_search_by(|v| v.partial_cmp(&t).expect("NaN time"))
        {
            Ok(i) => return data[i],
            Err(0) => return data[0],
            Err(i) if i >= n => return data[n - 1],
            Err(i) => i - 1,
        };
        let s = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        data[i] * (1.0 - s) + data[i + 1] * s
    }

    pub fn lambda(&self, t: f64) -> f64 {
        self.interp(&self.lambda, t)
    }

    pub fn lambda_dot(&self, t: f64) -> f64 {
        self.interp(&self.lambda_dot, t)
    }

    pub fn mu0(&self, t: f64) -> f64 {
        mu0_unchecked(t, &self.params)
    }

    /// `μ = μ₀ (1+Λ)²`.
    pub fn mu(&self, t: f64) -> f64 {
        let l = self.lambda(t);
        self.mu0(t) * (1.0 + l) * (1.0 + l)
    }

    /// `μ' = μ₀'(1+Λ)² + 2 μ₀ (1+Λ) Λ'`.
    pub fn mu_d1(&self, t: f64) -> f64 {
        let l = self.lambda(t);
        let ld = self.lambda_dot(t);
        mu0_d1_unchecked(t, &self.params) * (1.0 + l) * (1.0 + l)
            + 2.0 * self.mu0(t) * (1.0 + l) * ld
    }

    /// `α = -3^{1/4} μ₀^{-1/2} (μ₀' Λ + μ₀ Λ')`.
    pub fn alpha(&self, t: f64) -> f64 {
        let l = self.lambda(t);
        let ld = self.lambda_dot(t);
        -THREE_Q * (mu0_d1_unchecked(t, &self.params) * l + self.mu0(t) * ld) / self.mu0(t).sqrt()
    }

    /// `(μ - μ₀)' = μ₀' Λ (2 + Λ) + 2 μ₀ (1+Λ) Λ'`, evaluated without the
    /// cancellation of forming `μ' - μ₀'` directly.
    pub fn mu_minus_mu0_d1(&self, t: f64) -> f64 {
        let l = self.lambda(t);
        let ld = self.lambda_dot(t);
        mu0_d1_unchecked(t, &self.params) * l * (2.0 + l) + 2.0 * self.mu0(t) * (1.0 + l) * ld
    }
}

// ---------------------------------------------------------------------------
// Cutoffs
// ---------------------------------------------------------------------------

/// The fixed C² ramp: `η = 1` on `[0,1]`, `0` on `[2,∞)`, and
/// `1 - x³(10 - 15x + 6x²)` with `x = s-1` in between (so outputs are
/// reproducible bit for bit).
#[inline]
pub fn eta(s: f64) -> f64 {
    if s <= 1.0 {
        1.0
    } else if s >= 2.0 {
        0.0
    } else {
        let x = s - 1.0;
        1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    }
}

#[inline]
pub fn eta_d1(s: f64) -> f64 {
    if !(1.0..2.0).contains(&s) {
        0.0
    } else {
        let x = s - 1.0;
        -30.0 * x * x * (1.0 - x) * (1.0 - x)
    }
}

#[inline]
pub fn eta_d2(s: f64) -> f64 {
    if !(1.0..2.0).contains(&s) {
        0.0
    } else {
        let x = s - 1.0;
        -60.0 * x * (1.0 - x) * (1.0 - 2.0 * x)
    }
}

/// A cutoff of the self-similar form `η(|x| / (c √(T-t)))` with its first
/// derivatives in `x` and `t`.
#[derive(Debug, Clone, Copy)]
pub struct SelfSimilarCutoff {
    pub c: f64,
    pub t_end: f64,
}

impl SelfSimilarCutoff {
    #[inline]
    fn q(&self, x: f64, t: f64) -> f64 {
        x / (self.c * (self.t_end - t).sqrt())
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        eta(self.q(x, t))
    }

    pub fn dx(&self, x: f64, t: f64) -> f64 {
        eta_d1(self.q(x, t)) / (self.c * (self.t_end - t).sqrt())
    }

    pub fn dt(&self, x: f64, t: f64) -> f64 {
        let q = self.q(x, t);
        eta_d1(q) * q / (2.0 * (self.t_end - t))
    }

    /// Radial Laplacian `η'' q_x² + (2/x) η' q_x`; zero at the origin
    /// because the ramp is flat there.
    pub fn laplacian(&self, x: f64, t: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let tau = self.t_end - t;
        let q = self.q(x, t);
        eta_d2(q) / (self.c * self.c * tau) + 2.0 / x * eta_d1(q) / (self.c * tau.sqrt())
    }
}

/// The full cutoff set of the gluing: `η₁`, `η_{o1}`, `η_{o2}`, and the
/// inner-region cutoff `η_R = η(|x| / (R μ₀))` with `R = μ₀^{-β}`.
#[derive(Debug, Clone)]
pub struct CutoffSet {
    pub eta1: SelfSimilarCutoff,
    pub eta_o1: SelfSimilarCutoff,
    pub eta_o2: SelfSimilarCutoff,
    params: BlowupParams,
}

impl CutoffSet {
    pub fn new(p: &BlowupParams) -> Self {
        CutoffSet {
            eta1: SelfSimilarCutoff {
                c: p.r,
                t_end: p.t_end,
            },
            eta_o1: SelfSimilarCutoff {
                c: p.r1,
                t_end: p.t_end,
            },
            eta_o2: SelfSimilarCutoff {
                c: p.r2,
                t_end: p.t_end,
            },
            params: p.clone(),
        }
    }

    /// `R(t) = μ₀^{-β}(t)`.
    pub fn big_r(&self, t: f64) -> f64 {
        mu0_unchecked(t, &self.params).powf(-self.params.beta)
    }

    /// Inner-region cutoff `η_R` and derivatives. The argument is
    /// `p = x μ₀^{β-1}` since `R μ₀ = μ₀^{1-β}`.
    pub fn eta_r(&self, x: f64, t: f64) -> f64 {
        eta(x * mu0_unchecked(t, &self.params).powf(self.params.beta - 1.0))
    }

    pub fn eta_r_dx(&self, x: f64, t: f64) -> f64 {
        let scale = mu0_unchecked(t, &self.params).powf(self.params.beta - 1.0);
        eta_d1(x * scale) * scale
    }

    pub fn eta_r_dt(&self, x: f64, t: f64) -> f64 {
        let mu0 = mu0_unchecked(t, &self.params);
        let p = x * mu0.powf(self.params.beta - 1.0);
        eta_d1(p) * p * (self.params.beta - 1.0) * mu0_d1_unchecked(t, &self.params) / mu0
    }

    pub fn eta_r_laplacian(&self, x: f64, t: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let scale = mu0_unchecked(t, &self.params).powf(self.params.beta - 1.0);
        let p = x * scale;
        eta_d2(p) * scale * scale + 2.0 / x * eta_d1(p) * scale
    }
}

// ---------------------------------------------------------------------------
// Inner, outer, and glued approximations
// ---------------------------------------------------------------------------

/// Pointwise value / radial derivative / Laplacian / time derivative.
#[derive(Debug, Clone, Copy, Default)]
pub struct FieldPoint {
    pub value: f64,
    pub dx: f64,
    pub lap: f64,
    pub dt: f64,
}

/// Evaluator bundling the parameters and a modulation path.
#[derive(Debug, Clone)]
pub struct Ansatz {
    pub path: ModulationPath,
    pub cutoffs: CutoffSet,
}

impl Ansatz {
    pub fn new(path: ModulationPath) -> Self {
        let cutoffs = CutoffSet::new(&path.params);
        Ansatz { path, cutoffs }
    }

    pub fn params(&self) -> &BlowupParams {
        &self.path.params
    }

    /// `u_in = μ^{-1/2} w(y) + 2 μ₀' μ^{1/2} J(y)`, `y = x/μ`, with closed
    /// derivatives; the Laplacian uses `Δw = -w⁵` and `ΔJ = Z₀/2 - 5w⁴J`.
    pub fn u_inner(&self, x: f64, t: f64) -> FieldPoint {
        let p = &self.path.params;
        let mu = self.path.mu(t);
        let mu_d = self.path.mu_d1(t);
        let m0d = mu0_d1_unchecked(t, p);
        let m0dd = mu0_d2_unchecked(t, p);
        let y = x / mu;
        let w = profiles::w(y);
        let wp = profiles::w_d1(y);
        let (j, jp) = profiles::j_value_deriv(y);
        let sm = mu.sqrt();

        let value = w / sm + 2.0 * m0d * sm * j;
        let dx = wp / (sm * mu) + 2.0 * m0d * jp / sm;
        let lap_w = -w.powi(5);
        let lap_j = 0.5 * profiles::z0(y) - profiles::five_w4(y) * j;
        let lap = lap_w / (sm * mu * mu) + 2.0 * m0d * lap_j / (sm * mu);
        let dt = -0.5 * mu_d * w / (sm * mu) - mu_d * wp * y / (sm * mu)
            + 2.0 * m0dd * sm * j
            + m0d * mu_d * j / sm
            - 2.0 * m0d * sm * jp * y * mu_d / mu;
        FieldPoint { value, dx, lap, dt }
    }

    /// Error of the pure inner approximation
    /// `S_in = -∂_t u_in + Δ u_in + u_in⁵`, evaluated through the exact
    /// decomposition
    /// `S_in = -μ^{-3/2}(μ-μ₀)' Z₀(y) - 2μ₀''μ^{1/2}J - μ₀'μ'μ^{-1/2}J
    ///         + 2μ₀'μ'μ^{-1/2} y J' + [quintic remainder]`
    /// (the bubble equation, the J equation, and the linear-in-J part of
    /// the quintic cancel identically; forming them in floating point at
    /// tiny μ would drown the result in roundoff).
    pub fn s_inner(&self, x: f64, t: f64) -> f64 {
        let p = &self.path.params;
        let mu = self.path.mu(t);
        let mu_d = self.path.mu_d1(t);
        let dmu_d = self.path.mu_minus_mu0_d1(t);
        let m0d = mu0_d1_unchecked(t, p);
        let m0dd = mu0_d2_unchecked(t, p);
        let y = x / mu;
        let (j, jp) = profiles::j_value_deriv(y);
        let sm = mu.sqrt();

        let drift = -dmu_d * profiles::z0(y) / (sm * mu);
        let j_terms = -2.0 * m0dd * sm * j - m0d * mu_d * j / sm + 2.0 * m0d * mu_d * y * jp / sm;
        // (A+B)⁵ - A⁵ - 5A⁴B = B²(10A³ + 10A²B + 5AB² + B³)
        let a = profiles::w(y) / sm;
        let b = 2.0 * m0d * sm * j;
        let rem = b * b * (10.0 * a * a * a + 10.0 * a * a * b + 5.0 * a * b * b + b * b * b);
        drift + j_terms + rem
    }

    /// `u_out = A^{1/2}(T-t)^k C_k H_{2k}(z/2)/x`, `z = x/√(T-t)`.
    pub fn u_outer(&self, x: f64, t: f64) -> Result<FieldPoint> {
        let p = &self.path.params;
        if !(x > 0.0) {
            return Err(Error::domain("u_outer has a 1/x pole at the origin"));
        }
        check_time(t, p)?;
        Ok(self.u_outer_unchecked(x, t))
    }

    fn u_outer_unchecked(&self, x: f64, t: f64) -> FieldPoint {
        let p = &self.path.params;
        let k = p.k;
        let tau = p.t_end - t;
        let z = x / tau.sqrt();
        let amp = p.big_a.sqrt() * c_k(k);
        let h = hermite_h(2 * k, 0.5 * z);
        let hp = 4.0 * k as f64 * hermite_h(2 * k - 1, 0.5 * z);
        // H'' from the Hermite ODE: H_n'' = 2w H_n' - 2n H_n at w = z/2
        let hpp = z * hp - 4.0 * k as f64 * h;
        let tk = tau.powi(k as i32);

        let value = amp * tk * h / x;
        let dx = amp * tk * (hp / (2.0 * tau.sqrt() * x) - h / (x * x));
        let lap = amp * tk * hpp / (4.0 * tau * x);
        // caloric: ∂_t u_out = Δ u_out (same closed form, kept separate)
        let dt = amp * tau.powi(k as i32 - 1) * (0.25 * z * hp - k as f64 * h) / x;
        FieldPoint { value, dx, lap, dt }
    }

    /// The glued first approximation
    /// `U₁ = η₁ u_in + (1-η_{o1}) η_{o2} u_out`.
    pub fn u1(&self, x: f64, t: f64) -> FieldPoint {
        let c = &self.cutoffs;
        let e1 = c.eta1.value(x, t);
        let e1x = c.eta1.dx(x, t);
        let e1t = c.eta1.dt(x, t);
        let e1l = c.eta1.laplacian(x, t);

        let mut out = FieldPoint::default();
        if e1 != 0.0 || e1x != 0.0 || e1t != 0.0 || e1l != 0.0 {
            let f = self.u_inner(x, t);
            out.value += e1 * f.value;
            out.dx += e1x * f.value + e1 * f.dx;
            out.lap += e1l * f.value + 2.0 * e1x * f.dx + e1 * f.lap;
            out.dt += e1t * f.value + e1 * f.dt;
        }

        // outer factor g = (1-η_{o1}) η_{o2}; identically zero (with all
        // derivatives) for x ≤ r₁√(T-t), which keeps the 1/x pole out
        let o1 = c.eta_o1.value(x, t);
        let o2 = c.eta_o2.value(x, t);
        let g = (1.0 - o1) * o2;
        let o1x = c.eta_o1.dx(x, t);
        let o2x = c.eta_o2.dx(x, t);
        let gx = -o1x * o2 + (1.0 - o1) * o2x;
        let o1t = c.eta_o1.dt(x, t);
        let o2t = c.eta_o2.dt(x, t);
        let gt = -o1t * o2 + (1.0 - o1) * o2t;
        let gl = -c.eta_o1.laplacian(x, t) * o2 - 2.0 * o1x * o2x
            + (1.0 - o1) * c.eta_o2.laplacian(x, t);
        if g != 0.0 || gx != 0.0 || gt != 0.0 || gl != 0.0 {
            let f = self.u_outer_unchecked(x, t);
            out.value += g * f.value;
            out.dx += gx * f.value + g * f.dx;
            out.lap += gl * f.value + 2.0 * gx * f.dx + g * f.lap;
            out.dt += gt * f.value + g * f.dt;
        }
        out
    }

    /// Error of the glued approximation `S(U₁) = -∂_t U₁ + ΔU₁ + U₁⁵`,
    /// assembled as
    /// `η₁ S_in + (1-η_{o1})η_{o2} S_out + [cutoff transport] + [quintic mixing]`
    /// with `S_out = u_out⁵` (the outer profile is caloric).
    pub fn s_u1(&self, x: f64, t: f64) -> f64 {
        let c = &self.cutoffs;
        let e1 = c.eta1.value(x, t);
        let e1x = c.eta1.dx(x, t);
        let e1t = c.eta1.dt(x, t);
        let e1l = c.eta1.laplacian(x, t);

        let mut s = 0.0;
        let mut u_in_val = 0.0;
        if e1 > 0.0 {
            s += e1 * self.s_inner(x, t);
        }
        if e1x != 0.0 || e1t != 0.0 || e1l != 0.0 {
            let f = self.u_inner(x, t);
            u_in_val = f.value;
            s += -e1t * f.value + e1l * f.value + 2.0 * e1x * f.dx;
        } else if e1 > 0.0 {
            u_in_val = self.u_inner(x, t).value;
        }

        let o1 = c.eta_o1.value(x, t);
        let o2 = c.eta_o2.value(x, t);
        let g = (1.0 - o1) * o2;
        let o1x = c.eta_o1.dx(x, t);
        let o2x = c.eta_o2.dx(x, t);
        let gx = -o1x * o2 + (1.0 - o1) * o2x;
        let o1t = c.eta_o1.dt(x, t);
        let o2t = c.eta_o2.dt(x, t);
        let gt = -o1t * o2 + (1.0 - o1) * o2t;
        let gl = -c.eta_o1.laplacian(x, t) * o2 - 2.0 * o1x * o2x
            + (1.0 - o1) * c.eta_o2.laplacian(x, t);
        let mut u_out_val = 0.0;
        if g != 0.0 || gx != 0.0 || gt != 0.0 || gl != 0.0 {
            let f = self.u_outer_unchecked(x, t);
            u_out_val = f.value;
            // S_out = u_out⁵ since -∂_t u_out + Δ u_out = 0 exactly
            s += g * f.value.powi(5);
            s += -gt * f.value + gl * f.value + 2.0 * gx * f.dx;
        }

        // [η₁ u_in + g u_out]⁵ - η₁ u_in⁵ - g u_out⁵; zero wherever one of
        // the factors vanishes identically
        if e1 > 0.0 && g > 0.0 {
            let total = e1 * u_in_val + g * u_out_val;
            s += total.powi(5) - e1 * u_in_val.powi(5) - g * u_out_val.powi(5);
        } else if e1 > 0.0 && e1 < 1.0 {
            s += (e1 * u_in_val).powi(5) - e1 * u_in_val.powi(5);
        } else if g > 0.0 && g < 1.0 {
            s += (g * u_out_val).powi(5) - g * u_out_val.powi(5);
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Matching diagnostics
// ---------------------------------------------------------------------------

/// Matching data between the inner and outer expansions in the overlap
/// `μ₀ ≪ |x| ≪ √(T-t)`.
#[derive(Debug, Clone)]
pub struct MatchingReport {
    /// Expansion coefficients `(c₋₁, c₁)` of `c₋₁/x + c₁ x`.
    pub inner_coeffs: (f64, f64),
    pub outer_coeffs: (f64, f64),
    /// Least-squares window fits of the same coefficients (diagnostic).
    pub inner_fit: (f64, f64),
    pub outer_fit: (f64, f64),
    /// Relative pointwise gap at the geometric-mean radius `√(μ₀ √(T-t))`.
    pub mid_gap_rel: f64,
    pub mid_radius: f64,
}

/// Matching of `u_in` (with `μ = μ₀`) against `u_out`.
pub fn matching_report(t: f64, p: &BlowupParams) -> Result<MatchingReport> {
    check_time(t, p)?;
    let tau = p.t_end - t;
    let m0 = mu0_unchecked(t, p);
    if !(m0 * 16.0 < tau.sqrt()) {
        return Err(Error::invalid(
            "overlap window is empty: need mu0 << sqrt(T-t)",
        ));
    }
    let m0d = mu0_d1_unchecked(t, p);

    // inner expansion: 3^{1/4} μ^{1/2} / x + (3^{1/4}/4) μ₀' μ^{-1/2} x
    let inner_coeffs = (THREE_Q * m0.sqrt(), 0.25 * THREE_Q * m0d / m0.sqrt());
    // outer expansion: A^{1/2}√3 (T-t)^k / x - A^{1/2}√3 (k/2) (T-t)^{k-1} x
    let sqrt3a = p.big_a.sqrt() * 3.0_f64.sqrt();
    let outer_coeffs = (
        sqrt3a * tau.powi(p.k as i32),
        -0.5 * p.k as f64 * sqrt3a * tau.powi(p.k as i32 - 1),
    );

    let path = ModulationPath::zero(p.clone(), vec![0.0, t.max(p.t_end * 0.5)])?;
    let ansatz = Ansatz::new(path);
    let mid = (m0 * tau.sqrt()).sqrt();

    let fit = |f: &dyn Fn(f64) -> f64| -> Result<(f64, f64)> {
        let n = 40;
        let (lo, hi) = (mid / 3.0, mid * 3.0);
        let mut a = Vec::with_capacity(2 * n);
        let mut b = Vec::with_capacity(n);
        for i in 0..n {
            let x = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
            a.extend_from_slice(&[1.0 / x, x]);
            b.push(f(x));
        }
        let c = crate::numerics::lstsq(&a, &b, n, 2)?;
        Ok((c[0], c[1]))
    };
    let inner_fit = fit(&|x| ansatz.u_inner(x, t).value)?;
    let outer_fit = fit(&|x| ansatz.u_outer_unchecked(x, t).value)?;

    let ui = ansatz.u_inner(mid, t).value;
    let uo = ansatz.u_outer_unchecked(mid, t).value;
    let mid_gap_rel = (ui - uo).abs() / uo.abs().max(ui.abs());

    Ok(MatchingReport {
        inner_coeffs,
        outer_coeffs,
        inner_fit,
        outer_fit,
        mid_gap_rel,
        mid_radius: mid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn default_path(t_end: f64, k: u32) -> ModulationPath {
        let p = BlowupParams {
            k,
            t_end,
            ..BlowupParams::default()
        };
        let times: Vec<f64> = (0..64).map(|i| t_end * 0.99 * i as f64 / 63.0).collect();
        ModulationPath::zero(p, times).unwrap()
    }

    #[test]
    fn mu0_values_and_derivatives() {
        let p = BlowupParams {
            k: 1,
            big_a: 1.0,
            t_end: 1.0,
            ..BlowupParams::default()
        };
        // t = T - 0.01 with k = 1, A = 1
        let v = mu0(1.0 - 0.01, &p).unwrap();
        assert_relative_eq!(v, 3.0_f64.sqrt() * 1e-4, max_relative = 1e-14);
        assert!(mu0(1.0, &p).is_err());
        // μ₀(T⁻) → 0
        assert!(mu0(1.0 - 1e-12, &p).unwrap() < 1e-20);

        // closed-form derivatives match centered differences at O(h²)
        let p2 = BlowupParams {
            k: 3,
            big_a: 2.0,
            t_end: 1.0,
            ..BlowupParams::default()
        };
        let t = 0.3;
        let h = 1e-5;
        let fd1 = (mu0_unchecked(t + h, &p2) - mu0_unchecked(t - h, &p2)) / (2.0 * h);
        let fd2 = (mu0_unchecked(t + h, &p2) - 2.0 * mu0_unchecked(t, &p2)
            + mu0_unchecked(t - h, &p2))
            / (h * h);
        assert_relative_eq!(fd1, mu0_d1_unchecked(t, &p2), max_relative = 1e-8);
        assert_relative_eq!(fd2, mu0_d2_unchecked(t, &p2), max_relative = 1e-5);
    }

    #[test]
    fn modulation_couplings_hold() {
        let p = BlowupParams::default().validated(false).unwrap();
        let times: Vec<f64> = (0..128).map(|i| p.t_end * 0.98 * i as f64 / 127.0).collect();
        let path = ModulationPath::from_lambda(
            p.clone(),
            times.clone(),
            |t| 0.01 * (1.0 - t / p.t_end),
            |_t| -0.01 / p.t_end,
        )
        .unwrap();
        for &t in &times {
            let l = path.lambda(t);
            assert_relative_eq!(path.mu(t), path.mu0(t) * (1.0 + l) * (1.0 + l));
            assert_relative_eq!(
                path.mu0(t),
                3.0_f64.sqrt() * p.big_a * (p.t_end - t).powi(2 * p.k as i32)
            );
            // α = -3^{1/4} μ₀^{-1/2} (μ₀Λ)' against a finite difference
            let h = p.t_end * 1e-7;
            if t > h && t + h < *times.last().unwrap() {
                let prod = |s: f64| path.mu0(s) * path.lambda(s);
                let fd = (prod(t + h) - prod(t - h)) / (2.0 * h);
                assert_relative_eq!(
                    path.alpha(t),
                    -THREE_Q * fd / path.mu0(t).sqrt(),
                    max_relative = 1e-4,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn cutoff_ramp_shape() {
        assert_eq!(eta(0.3), 1.0);
        assert_eq!(eta(1.0), 1.0);
        assert_eq!(eta(2.0), 0.0);
        assert_eq!(eta(5.0), 0.0);
        let mid = eta(1.5);
        assert!(mid > 0.0 && mid < 1.0);
        // monotone decreasing on the ramp
        let mut prev = 1.0;
        for i in 0..=100 {
            let v = eta(1.0 + i as f64 / 100.0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        // C² at the seams
        for s in [1.0 + 1e-9, 2.0 - 1e-9] {
            assert!(eta_d1(s).abs() < 1e-6);
            assert!(eta_d2(s).abs() < 1e-4);
        }
    }

    #[test]
    fn u_inner_at_origin_matches_scaling() {
        let path = default_path(0.01, 1);
        let a = Ansatz::new(path);
        let t = 0.002;
        let m0 = a.path.mu0(t);
        // Λ ≡ 0: J term vanishes at the origin
        assert_relative_eq!(
            a.u_inner(0.0, t).value,
            THREE_Q / m0.sqrt(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn u_inner_time_derivative_matches_fd() {
        let path = default_path(0.01, 1);
        let a = Ansatz::new(path);
        let (x, t) = (3e-4, 0.004);
        let h = 1e-9;
        let fd = (a.u_inner(x, t + h).value - a.u_inner(x, t - h).value) / (2.0 * h);
        assert_relative_eq!(fd, a.u_inner(x, t).dt, max_relative = 1e-5);
        let fdx = (a.u_inner(x + 1e-8, t).value - a.u_inner(x - 1e-8, t).value) / 2e-8;
        assert_relative_eq!(fdx, a.u_inner(x, t).dx, max_relative = 1e-5);
    }

    #[test]
    fn u_outer_is_caloric() {
        // -∂_t u_out + Δ u_out = 0 to discretization order
        let path = default_path(1.0, 2);
        let a = Ansatz::new(path);
        let (x, t) = (0.7, 0.2);
        let h = 1e-5;
        let lap_fd = {
            let f = |xx: f64| a.u_outer(xx, t).unwrap().value;
            (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h) + (f(x + h) - f(x - h)) / (h * x)
        };
        let dt_fd = {
            let f = |tt: f64| a.u_outer(x, tt).unwrap().value;
            (f(t + h) - f(t - h)) / (2.0 * h)
        };
        assert_relative_eq!(lap_fd, dt_fd, max_relative = 1e-4);
        let pt = a.u_outer(x, t).unwrap();
        assert_relative_eq!(pt.lap, pt.dt, max_relative = 1e-12);
        assert_relative_eq!(pt.lap, lap_fd, max_relative = 1e-4);
    }

    #[test]
    fn u_outer_value_example() {
        // k=1, A=1, T-t=1, x=2: u_out = C₁ H₂(1) / 2 = -√3/2
        let p = BlowupParams {
            k: 1,
            big_a: 1.0,
            t_end: 2.0,
            ..BlowupParams::default()
        };
        let path = ModulationPath::zero(p, vec![0.0, 1.5]).unwrap();
        let a = Ansatz::new(path);
        let v = a.u_outer(2.0, 1.0).unwrap().value;
        assert_relative_eq!(v, -0.5 * 3.0_f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn glued_u1_matches_regions() {
        let path = default_path(0.01, 1);
        let a = Ansatz::new(path);
        let t = 0.001;
        let tau_sqrt = (0.01_f64 - t).sqrt();
        let p = a.params().clone();
        // x ≤ r√(T-t): exactly the inner solution
        let x_in = 0.5 * p.r * tau_sqrt;
        assert_eq!(a.u1(x_in, t).value, a.u_inner(x_in, t).value);
        // x ≥ 2 r₂ √(T-t): identically zero
        let x_far = 2.1 * p.r2 * tau_sqrt;
        assert_eq!(a.u1(x_far, t).value, 0.0);
        // sup over x of |U₁| is the core amplitude μ^{-1/2} 3^{1/4}
        let mut sup = 0.0_f64;
        for i in 0..4000 {
            let x = i as f64 * (3.0 * p.r2 * tau_sqrt) / 4000.0;
            sup = sup.max(a.u1(x, t).value.abs());
        }
        let core = THREE_Q / a.path.mu(t).sqrt();
        assert_relative_eq!(sup, core, max_relative = 1e-6);
    }

    #[test]
    fn u1_is_continuous_across_cutoff_edges() {
        let path = default_path(0.01, 2);
        let a = Ansatz::new(path);
        let t = 0.003;
        let tau_sqrt = (0.01_f64 - t).sqrt();
        for &edge in &[
            a.params().r * tau_sqrt,
            2.0 * a.params().r * tau_sqrt,
            a.params().r2 * tau_sqrt,
            2.0 * a.params().r2 * tau_sqrt,
        ] {
            let below = a.u1(edge * (1.0 - 1e-12), t).value;
            let above = a.u1(edge * (1.0 + 1e-12), t).value;
            assert_relative_eq!(below, above, max_relative = 1e-8, epsilon = 1e-12);
        }
    }

    #[test]
    fn matching_identities_exact() {
        for k in [1u32, 2, 3] {
            let p = BlowupParams {
                k,
                big_a: 1.0,
                t_end: 0.01,
                ..BlowupParams::default()
            };
            let t = p.t_end - 1e-3;
            let rep = matching_report(t, &p).unwrap();
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
            assert!(rel(rep.inner_coeffs.0, rep.outer_coeffs.0) < 1e-12, "k={k}");
            assert!(rel(rep.inner_coeffs.1, rep.outer_coeffs.1) < 1e-12, "k={k}");
            assert!(rep.mid_gap_rel <= 0.05, "k={k}: {}", rep.mid_gap_rel);
        }
    }

    #[test]
    fn matching_rejects_empty_overlap() {
        // with a horizon this long, μ₀(0) = √3 A T² exceeds √T and there
        // is no region with μ₀ ≪ |x| ≪ √(T-t)
        let p = BlowupParams {
            k: 1,
            t_end: 10.0,
            ..BlowupParams::default()
        };
        assert!(matching_report(0.0, &p).is_err());
    }
}

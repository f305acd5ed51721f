//! Discrete radial differential operators, the error operator
//! `S(u) = -∂_t u + Δu + u⁵`, the leading-term subtraction, and the
//! weighted norms of the gluing scheme.

use crate::ansatz::{Ansatz, ModulationPath};
use crate::grid::{FieldSnapshot, RadialGrid, SpaceTimeSamples};
use crate::params::BlowupParams;
use crate::profiles;
use crate::{Error, Result};

/// Value of a weighted sup-norm together with the location attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    /// Norm identifier (`inner(nu,2+sigma)`, `inner0(nu,sigma)`, `star`,
    /// `starstar`, `delta`, ...).
    pub id: String,
    pub value: f64,
    pub arg_x: f64,
    pub arg_t: f64,
}

impl NormReport {
    pub fn new(id: impl Into<String>, value: f64, arg_x: f64, arg_t: f64) -> Self {
        NormReport {
            id: id.into(),
            value,
            arg_x,
            arg_t,
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e}",
            self.id, self.value, self.arg_x, self.arg_t
        )
    }
}

// ---------------------------------------------------------------------------
// Discrete radial operators
// ---------------------------------------------------------------------------

/// Second-order discretization of `Δf = f'' + (2/r) f'` on the snapshot's
/// grid, with `Δf(0) = 3 f''(0)` by even symmetry at the origin and
/// one-sided stencils at the outer edge. Exact on quadratics.
pub fn radial_laplacian(f: &FieldSnapshot) -> Result<FieldSnapshot> {
    let r = f.grid.nodes();
    let v = &f.values;
    let n = r.len();
    if n < 3 {
        return Err(Error::invalid("radial_laplacian needs at least 3 nodes"));
    }
    let mut lap = vec![0.0; n];

    for i in 0..n {
        if i == 0 && r[0] == 0.0 {
            // even extension: f(-h) = f(h)
            let h = r[1] - r[0];
            lap[0] = 6.0 * (v[1] - v[0]) / (h * h);
        } else if i == 0 {
            // grid away from the origin: one-sided second-order stencil
            let h1 = r[1] - r[0];
            let h2 = r[2] - r[1];
            let d2 = 2.0 * (v[2] * h1 - v[1] * (h1 + h2) + v[0] * h2)
                / (h1 * h2 * (h1 + h2));
            let d1 = (-v[2] * h1 * h1 + v[1] * (h1 + h2) * (h1 + h2)
                - v[0] * (h2 * h2 + 2.0 * h1 * h2))
                / (h1 * h2 * (h1 + h2));
            lap[0] = d2 + 2.0 / r[0] * d1;
        } else if i == n - 1 {
            let h1 = r[n - 1] - r[n - 2];
            let h2 = r[n - 2] - r[n - 3];
            let d2 = 2.0 * (v[n - 1] * h2 - v[n - 2] * (h1 + h2) + v[n - 3] * h1)
                / (h1 * h2 * (h1 + h2));
            let d1 = (v[n - 1] * (h2 * h2 + 2.0 * h1 * h2)
                - v[n - 2] * (h1 + h2) * (h1 + h2)
                + v[n - 3] * h1 * h1)
                / (h1 * h2 * (h1 + h2));
            lap[n - 1] = d2 + 2.0 / r[n - 1] * d1;
        } else {
            let hm = r[i] - r[i - 1];
            let hp = r[i + 1] - r[i];
            let d2 = 2.0 * ((v[i + 1] - v[i]) / hp - (v[i] - v[i - 1]) / hm) / (hp + hm);
            let d1 = (v[i + 1] * hm * hm - v[i - 1] * hp * hp
                + v[i] * (hp * hp - hm * hm))
                / (hm * hp * (hm + hp));
            lap[i] = d2 + 2.0 / r[i] * d1;
        }
    }
    FieldSnapshot::new(f.grid.clone(), lap)
}

/// `S(u) = -∂_t u + Δu + u⁵` from two snapshots, centered at the midpoint
/// in time (second order in `dt`).
pub fn error_s(u_now: &FieldSnapshot, u_prev: &FieldSnapshot, dt: f64) -> Result<FieldSnapshot> {
    if !(dt > 0.0) {
        return Err(Error::invalid("error_s needs dt > 0"));
    }
    if !u_now.grid.same_nodes(&u_prev.grid) {
        return Err(Error::invalid("error_s snapshots live on different grids"));
    }
    let mid_vals: Vec<f64> = u_now
        .values
        .iter()
        .zip(&u_prev.values)
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let mid = FieldSnapshot::new(u_now.grid.clone(), mid_vals)?;
    let lap = radial_laplacian(&mid)?;
    let values = (0..mid.values.len())
        .map(|i| {
            -(u_now.values[i] - u_prev.values[i]) / dt
                + lap.values[i]
                + mid.values[i].powi(5)
        })
        .collect();
    FieldSnapshot::new(u_now.grid.clone(), values)
}

/// Analytic-time variant of [`error_s`]: the caller supplies `∂_t u`.
pub fn error_s_with_dt(u: &FieldSnapshot, du_dt: &[f64]) -> Result<FieldSnapshot> {
    if du_dt.len() != u.values.len() {
        return Err(Error::invalid("du_dt length mismatch"));
    }
    let lap = radial_laplacian(u)?;
    let values = (0..u.values.len())
        .map(|i| -du_dt[i] + lap.values[i] + u.values[i].powi(5))
        .collect();
    FieldSnapshot::new(u.grid.clone(), values)
}

// ---------------------------------------------------------------------------
// Leading term and the g4 bound probe
// ---------------------------------------------------------------------------

/// Sharp-cutoff slow-decay term `χ(|x| ≤ c₀√(T-t)) α(t) / (μ² + x²)^{1/2}`
/// subtracted from the inner error.
pub fn leading_term(x: f64, t: f64, path: &ModulationPath) -> f64 {
    let p = &path.params;
    if x > p.c0 * (p.t_end - t).sqrt() {
        return 0.0;
    }
    let mu = path.mu(t);
    path.alpha(t) / (mu * mu + x * x).sqrt()
}

/// Envelope `h(y)` with `h ~ y²` near 0 and `h ~ y` at infinity, majorizing
/// the corrector growth `|J|`-shape in the error estimates.
#[inline]
pub fn h_envelope(y: f64) -> f64 {
    y * y / (1.0 + y)
}

/// Result of the pointwise-ratio probe of the inner-error estimate.
#[derive(Debug, Clone)]
pub struct G4Probe {
    pub ratio_sup: f64,
    pub arg_x: f64,
    pub numerator_at_arg: f64,
    pub majorant_at_arg: f64,
}

/// Majorant of `η₁ S_in - leading` assembled from the modulation data:
/// terms in `|α|`, `Λ²`, `μ₀''`, and `(μ₀')²` weighted by the envelope.
pub fn g4_majorant(x: f64, t: f64, ansatz: &Ansatz) -> f64 {
    let p = ansatz.params();
    let path = &ansatz.path;
    let tau = p.t_end - t;
    let mu = path.mu(t);
    let mu0 = path.mu0(t);
    let mu_d = path.mu_d1(t);
    let m0d = crate::ansatz::mu0_derivatives(t, p).map(|d| d.0).unwrap_or(0.0);
    let m0dd = crate::ansatz::mu0_derivatives(t, p).map(|d| d.1).unwrap_or(0.0);
    let alpha = path.alpha(t);
    let lambda = path.lambda(t);
    let e1 = ansatz.cutoffs.eta1.value(x, t);
    let r2x2 = mu * mu + x * x;

    let mut m = 0.0;
    m += alpha.abs() * mu * mu / r2x2.powf(1.5) * e1;
    let s = x / tau.sqrt();
    if s >= p.r && s <= p.c0 {
        m += alpha.abs() / r2x2.sqrt();
    }
    m += lambda * lambda * (m0d / mu.sqrt()).abs()
        * (crate::THREE_Q * mu * mu / r2x2.powf(1.5) - 0.5 * crate::THREE_Q / r2x2.sqrt()).abs()
        * e1;
    let h = h_envelope(x / mu);
    m += 2.0 * m0dd.abs() * mu.sqrt() * h * e1;
    m += 3.0 * (m0d * mu_d / mu.sqrt()).abs() * h * e1;
    let h0 = h_envelope(x / mu0);
    m += mu.powf(2.5) / r2x2.powf(1.5) * m0d * m0d * h0 * h0 * e1;
    m
}

/// Pointwise ratio sup of `|η₁ S_in - leading|` against [`g4_majorant`]
/// over the grid (transition radii are inserted as exact nodes).
pub fn bound_probe_g4(t: f64, ansatz: &Ansatz, grid: &RadialGrid) -> Result<G4Probe> {
    let p = ansatz.params();
    let tau = p.t_end - t;
    if !(tau > 0.0) {
        return Err(Error::domain("bound_probe_g4 needs t < T"));
    }
    let mu0 = ansatz.path.mu0(t);
    let big_r = ansatz.cutoffs.big_r(t);
    let grid = grid.with_nodes_at(&[
        mu0 * big_r,
        2.0 * mu0 * big_r,
        p.r * tau.sqrt(),
        2.0 * p.r * tau.sqrt(),
        p.c0 * tau.sqrt(),
    ])?;
    let mut best = G4Probe {
        ratio_sup: 0.0,
        arg_x: 0.0,
        numerator_at_arg: 0.0,
        majorant_at_arg: 0.0,
    };
    for &x in grid.nodes() {
        let e1 = ansatz.cutoffs.eta1.value(x, t);
        let num = e1 * ansatz.s_inner(x, t) - leading_term(x, t, &ansatz.path);
        let maj = g4_majorant(x, t, ansatz);
        if maj == 0.0 {
            if num.abs() > 1e-300 {
                return Err(Error::numerical(format!(
                    "majorant vanishes but numerator {num:.3e} does not at x={x:.3e}"
                )));
            }
            continue;
        }
        let ratio = num.abs() / maj;
        if ratio > best.ratio_sup {
            best = G4Probe {
                ratio_sup: ratio,
                arg_x: x,
                numerator_at_arg: num,
                majorant_at_arg: maj,
            };
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Weighted norms
// ---------------------------------------------------------------------------

fn mu0_of(p: &BlowupParams, t: f64) -> f64 {
    crate::ansatz::mu0_unchecked(t, p)
}

fn big_r_of(p: &BlowupParams, t: f64) -> f64 {
    mu0_of(p, t).powf(-p.beta)
}

/// Inner norm `‖h‖_{ν,2+σ} = sup μ₀^{-ν}(t) (1+|y|^{2+σ}) |h(y,t)|` over
/// samples on `B_{2R} × (0,T)`.
pub fn norm_inner(samples: &SpaceTimeSamples, p: &BlowupParams, nu: f64, sigma: f64) -> Result<NormReport> {
    if samples.values.is_empty() {
        return Err(Error::invalid("empty sample set"));
    }
    let mut best = (0.0_f64, 0.0, 0.0);
    for (it, &t) in samples.ts.iter().enumerate() {
        let w_t = mu0_of(p, t).powf(-nu);
        for (ix, &y) in samples.xs.iter().enumerate() {
            let v = w_t * (1.0 + y.abs().powf(2.0 + sigma)) * samples.value(ix, it).abs();
            if v > best.0 {
                best = (v, y, t);
            }
        }
    }
    Ok(NormReport::new(
        format!("inner({nu},{})", 2.0 + sigma),
        best.0,
        best.1,
        best.2,
    ))
}

/// Interior mode-0 norm
/// `‖φ‖_{0,ν,σ} = sup (1+|y|) [|φ| + (1+|y|)|∇φ|] / (μ₀^ν R^{(4-σ)/3})`.
pub fn norm_inner0(samples: &SpaceTimeSamples, p: &BlowupParams, nu: f64, sigma: f64) -> Result<NormReport> {
    if samples.gradient.is_none() {
        return Err(Error::invalid("norm_inner0 requires gradient samples"));
    }
    let mut best = (0.0_f64, 0.0, 0.0);
    for (it, &t) in samples.ts.iter().enumerate() {
        let denom = mu0_of(p, t).powf(nu) * big_r_of(p, t).powf((4.0 - sigma) / 3.0);
        for (ix, &y) in samples.xs.iter().enumerate() {
            let phi = samples.value(ix, it).abs();
            let grad = samples.grad(ix, it).expect("gradient checked").abs();
            let v = (1.0 + y.abs()) * (phi + (1.0 + y.abs()) * grad) / denom;
            if v > best.0 {
                best = (v, y, t);
            }
        }
    }
    Ok(NormReport::new(
        format!("inner0({nu},{sigma})"),
        best.0,
        best.1,
        best.2,
    ))
}

/// The three outer weights `ϱ₁, ϱ₂, ϱ₃`.
pub fn outer_weights(x: f64, t: f64, p: &BlowupParams) -> (f64, f64, f64) {
    let mu0 = mu0_of(p, t);
    let big_r = big_r_of(p, t);
    let rho1 = if x.abs() <= 2.0 * mu0 * big_r {
        mu0.powf(p.nu - 2.5) * big_r.powf(-2.0 - p.a)
    } else {
        0.0
    };
    let rho2 = if x.abs() >= mu0 * big_r {
        mu0.powf(p.nu2) / x.abs().powf(p.a2)
    } else {
        0.0
    };
    (rho1, rho2, 1.0)
}

/// Outer right-hand-side norm `‖f‖_{**} = sup |f| / (ϱ₁+ϱ₂+ϱ₃)`.
pub fn norm_outer_rhs(samples: &SpaceTimeSamples, p: &BlowupParams) -> Result<NormReport> {
    if samples.values.is_empty() {
        return Err(Error::invalid("empty sample set"));
    }
    let mut best = (0.0_f64, 0.0, 0.0);
    for (it, &t) in samples.ts.iter().enumerate() {
        for (ix, &x) in samples.xs.iter().enumerate() {
            let (r1, r2, r3) = outer_weights(x, t, p);
            let v = samples.value(ix, it).abs() / (r1 + r2 + r3);
            if v > best.0 {
                best = (v, x, t);
            }
        }
    }
    Ok(NormReport::new("starstar", best.0, best.1, best.2))
}

/// Outer solution norm `‖ψ‖_*`: sup-norm and gradient terms weighted at
/// time 0, difference-to-terminal terms weighted at time t, and the
/// Hölder-in-time quotient with exponent γ over the admissible pairs
/// `t₂ - t₁ ≤ (T - t₂)/10` of the sample lattice. The sample times must
/// include the terminal time `T` (as the last entry).
pub fn norm_outer_sol(samples: &SpaceTimeSamples, p: &BlowupParams) -> Result<NormReport> {
    let grad = samples
        .gradient
        .as_ref()
        .ok_or_else(|| Error::invalid("norm_outer_sol requires gradient samples"))?;
    let nt = samples.ts.len();
    let nx = samples.xs.len();
    if nt < 2 || (samples.ts[nt - 1] - p.t_end).abs() > 1e-14 * p.t_end {
        return Err(Error::invalid(
            "norm_outer_sol requires terminal-time samples at t = T",
        ));
    }
    let w0 = mu0_of(p, 0.0).powf(0.5 - p.nu) * big_r_of(p, 0.0).powf(p.a);
    let w0g = mu0_of(p, 0.0).powf(1.5 - p.nu) * big_r_of(p, 0.0).powf(1.0 + p.a);

    let mut best = (0.0_f64, 0.0, 0.0);
    let mut consider = |v: f64, x: f64, t: f64| {
        if v > best.0 {
            best = (v, x, t);
        }
    };

    for it in 0..nt {
        let t = samples.ts[it];
        let interior = t < p.t_end;
        let (wt, wtg) = if interior {
            (
                mu0_of(p, t).powf(0.5 - p.nu) * big_r_of(p, t).powf(p.a),
                mu0_of(p, t).powf(1.5 - p.nu) * big_r_of(p, t).powf(1.0 + p.a),
            )
        } else {
            (0.0, 0.0)
        };
        for ix in 0..nx {
            let v = samples.value(ix, it);
            let g = grad[it * nx + ix];
            consider(w0 * v.abs(), samples.xs[ix], t);
            consider(w0g * g.abs(), samples.xs[ix], t);
            if interior {
                let v_t = samples.value(ix, nt - 1);
                let g_t = grad[(nt - 1) * nx + ix];
                consider(wt * (v - v_t).abs(), samples.xs[ix], t);
                consider(wtg * (g - g_t).abs(), samples.xs[ix], t);
            }
        }
    }

    // Hölder quotient over admissible pairs of the lattice
    for i2 in 0..nt {
        let t2 = samples.ts[i2];
        if t2 >= p.t_end {
            continue;
        }
        let w_h = mu0_of(p, t2).powf(2.0 * p.gamma + 0.5 - p.nu)
            * big_r_of(p, t2).powf(2.0 * p.gamma + p.a);
        for i1 in 0..i2 {
            let t1 = samples.ts[i1];
            let dt = t2 - t1;
            if dt > (p.t_end - t2) / 10.0 {
                continue;
            }
            for ix in 0..nx {
                let q = (samples.value(ix, i2) - samples.value(ix, i1)).abs() / dt.powf(p.gamma);
                consider(w_h * q, samples.xs[ix], t2);
            }
        }
    }

    Ok(NormReport::new("star", best.0, best.1, best.2))
}

/// `‖h‖_δ = sup |(T-t)^{-δ} h(t)|` for a scalar time curve.
pub fn norm_delta(times: &[f64], values: &[f64], delta: f64, p: &BlowupParams) -> Result<NormReport> {
    if times.is_empty() || times.len() != values.len() {
        return Err(Error::invalid("norm_delta needs matching samples"));
    }
    let mut best = (0.0_f64, 0.0);
    for (&t, &v) in times.iter().zip(values) {
        let w = (p.t_end - t).powf(-delta) * v.abs();
        if w > best.0 {
            best = (w, t);
        }
    }
    Ok(NormReport::new("delta", best.0, 0.0, best.1))
}

// ---------------------------------------------------------------------------
// Right-hand sides of the gluing system
// ---------------------------------------------------------------------------

/// A space-time field with a radial gradient (perturbations `φ`, `ψ`, `Φ₁`).
pub trait SpaceTimeField: Sync {
    fn value(&self, x: f64, t: f64) -> f64;
    fn gradient(&self, x: f64, t: f64) -> f64;
}

/// The zero field.
pub struct ZeroField;

impl SpaceTimeField for ZeroField {
    fn value(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }
    fn gradient(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }
}

/// Field defined by value/gradient closures.
pub struct ClosureField<F, G>
where
    F: Fn(f64, f64) -> f64 + Sync,
    G: Fn(f64, f64) -> f64 + Sync,
{
    pub f: F,
    pub g: G,
}

impl<F, G> SpaceTimeField for ClosureField<F, G>
where
    F: Fn(f64, f64) -> f64 + Sync,
    G: Fn(f64, f64) -> f64 + Sync,
{
    fn value(&self, x: f64, t: f64) -> f64 {
        (self.f)(x, t)
    }
    fn gradient(&self, x: f64, t: f64) -> f64 {
        (self.g)(x, t)
    }
}

/// Inputs of the gluing right-hand sides: the ansatz plus the current
/// perturbation iterates. `phi` lives in the inner variable `y`; `psi` and
/// `phi1` live in the outer variable `x`.
pub struct GluingContext<'a> {
    pub ansatz: &'a Ansatz,
    pub phi: &'a dyn SpaceTimeField,
    pub psi: &'a dyn SpaceTimeField,
    pub phi1: &'a dyn SpaceTimeField,
}

impl<'a> GluingContext<'a> {
    /// `Φ₂ = ψ + η_R μ₀^{-1/2} φ(x/μ₀, t)`.
    pub fn phi2(&self, x: f64, t: f64) -> f64 {
        let mu0 = self.ansatz.path.mu0(t);
        self.psi.value(x, t)
            + self.ansatz.cutoffs.eta_r(x, t) * self.phi.value(x / mu0, t) / mu0.sqrt()
    }
}

/// Pointwise value of the outer right-hand side `G(φ, ψ, α)(x, t)`.
pub fn rhs_g(x: f64, t: f64, ctx: &GluingContext) -> f64 {
    let a = ctx.ansatz;
    let p = a.params();
    let mu0 = a.path.mu0(t);
    let mu = a.path.mu(t);
    let y = x / mu0;
    let sqrt_mu0 = mu0.sqrt();

    let eta_r = a.cutoffs.eta_r(x, t);
    let phi = ctx.phi.value(y, t);
    let phi_grad = ctx.phi.gradient(y, t);
    let psi = ctx.psi.value(x, t);
    let phi1 = ctx.phi1.value(x, t);
    let u1 = a.u1(x, t).value;

    // transport of the inner cutoff
    let g1 = -a.cutoffs.eta_r_dt(x, t) * phi / sqrt_mu0
        + a.cutoffs.eta_r_laplacian(x, t) * phi / sqrt_mu0
        + 2.0 * a.cutoffs.eta_r_dx(x, t) * phi_grad / (mu0 * sqrt_mu0);

    // potential terms on ψ
    let u_phi1 = u1 + phi1;
    let w_core = profiles::w(x / mu) / mu.sqrt();
    let g2 = (5.0 * u_phi1.powi(4) * (1.0 - eta_r)
        + 5.0 * (u_phi1.powi(4) - w_core.powi(4)) * eta_r)
        * psi;

    // quintic remainder in Φ₂
    let phi2 = ctx.phi2(x, t);
    let g3 = (u_phi1 + phi2).powi(5) - u_phi1.powi(5) - 5.0 * u_phi1.powi(4) * phi2;

    // far error of the first approximation plus the Φ₁ coupling
    let g4 = (a.s_u1(x, t) - leading_term(x, t, &a.path)) * (1.0 - eta_r)
        + (u_phi1.powi(5) - u1.powi(5)) * (1.0 - eta_r);

    let _ = p;
    g1 + g2 + g3 + g4
}

/// Pointwise value of the inner right-hand side `H(φ, ψ, α)(y, t)`.
pub fn rhs_h(y: f64, t: f64, ctx: &GluingContext) -> f64 {
    let a = ctx.ansatz;
    let p = a.params();
    let mu0 = a.path.mu0(t);
    let mu0_d = crate::ansatz::mu0_derivatives(t, p).map(|d| d.0).unwrap_or(0.0);
    let lambda = a.path.lambda(t);
    let x = mu0 * y;

    let u_in = a.u_inner(x, t).value;
    let phi1 = ctx.phi1.value(x, t);
    let phi = ctx.phi.value(y, t);
    let phi_grad = ctx.phi.gradient(y, t);
    let psi = ctx.psi.value(x, t);
    let w_y = profiles::w(y);

    let h1 = 5.0 * ((u_in + phi1).powi(4) - w_y.powi(4) / (mu0 * mu0)) * mu0 * mu0 * phi;
    let scale = (1.0 + lambda) * (1.0 + lambda);
    let h2 = 5.0 * mu0.sqrt() * profiles::w(y / scale).powi(4) / scale.powi(2) * psi;
    let h3 = mu0 * mu0_d * (0.5 * phi + phi_grad * y);
    let h4 = mu0.powf(2.5) * (a.s_u1(x, t) - leading_term(x, t, &a.path));
    let h5 = mu0.powf(2.5) * ((u_in + phi1).powi(5) - u_in.powi(5));

    h1 + h2 + h3 + h4 + h5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::ModulationPath;
    use crate::grid::RadialGrid;
    use approx::assert_relative_eq;

    fn snap<F: Fn(f64) -> f64>(grid: &RadialGrid, f: F) -> FieldSnapshot {
        FieldSnapshot::from_fn(grid, f).unwrap()
    }

    #[test]
    fn laplacian_exact_on_quadratics() {
        let grid = RadialGrid::geometric(0.01, 1.05, 5.0).unwrap();
        let lap = radial_laplacian(&snap(&grid, |r| r * r)).unwrap();
        for &v in &lap.values {
            assert_relative_eq!(v, 6.0, max_relative = 1e-9);
        }
        let lap1 = radial_laplacian(&snap(&grid, |_r| 1.0)).unwrap();
        for &v in &lap1.values {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn laplacian_of_bubble_converges_to_minus_w5() {
        let mut sups = Vec::new();
        for n in [2000usize, 4000] {
            let grid = RadialGrid::uniform(20.0, n).unwrap();
            let lap = radial_laplacian(&snap(&grid, profiles::w)).unwrap();
            let sup = grid
                .nodes()
                .iter()
                .enumerate()
                .take(n) // skip the one-sided boundary node
                .map(|(i, &r)| (lap.values[i] + profiles::w(r).powi(5)).abs())
                .fold(0.0_f64, f64::max);
            sups.push(sup);
        }
        assert!(sups[1] < sups[0] / 3.0, "{sups:?}");
        assert!(sups[1] < 2e-4, "{sups:?}");
    }

    #[test]
    fn error_s_on_steady_state_and_heat_polynomial() {
        // frozen bubble: S = 0 up to discretization, at O(h²)
        let mu = 0.8_f64;
        let ub = |r: f64| profiles::w(r / mu) / mu.sqrt();
        let mut sups = Vec::new();
        for n in [600usize, 1200] {
            let grid = RadialGrid::uniform(10.0, n).unwrap();
            let s = error_s(&snap(&grid, ub), &snap(&grid, ub), 1e-3).unwrap();
            sups.push(
                s.values[..n - 1]
                    .iter()
                    .fold(0.0_f64, |m, v| m.max(v.abs())),
            );
        }
        assert!(sups[1] < sups[0] / 3.0, "{sups:?}");
        assert!(sups[1] < 2e-3, "{sups:?}");
        let grid = RadialGrid::uniform(10.0, 600).unwrap();

        // u = r² + 6t: caloric, so S(u) = u⁵
        let dt = 1e-3;
        let u_now = snap(&grid, |r| r * r + 6.0 * dt);
        let u_prev = snap(&grid, |r| r * r);
        let s = error_s(&u_now, &u_prev, dt).unwrap();
        for (i, &r) in grid.nodes().iter().enumerate() {
            let mid = r * r + 3.0 * dt;
            assert_relative_eq!(s.values[i], mid.powi(5), max_relative = 1e-9, epsilon = 1e-9);
        }
    }

    #[test]
    fn error_s_rejects_grid_mismatch() {
        let g1 = RadialGrid::uniform(1.0, 32).unwrap();
        let g2 = RadialGrid::uniform(1.0, 64).unwrap();
        let a = snap(&g1, |r| r);
        let b = snap(&g2, |r| r);
        assert!(error_s(&a, &b, 0.1).is_err());
    }

    fn test_ansatz(k: u32, t_end: f64) -> Ansatz {
        let p = BlowupParams {
            k,
            t_end,
            ..BlowupParams::default()
        };
        let times: Vec<f64> = (0..64).map(|i| t_end * 0.99 * i as f64 / 63.0).collect();
        Ansatz::new(ModulationPath::zero(p, times).unwrap())
    }

    #[test]
    fn leading_term_cases() {
        let a = test_ansatz(2, 0.01);
        let t = 0.002;
        // α ≡ 0 on the zero path
        assert_eq!(leading_term(1e-4, t, &a.path), 0.0);
        // indicator kills large radii even with α ≠ 0
        let p = a.params().clone();
        let times: Vec<f64> = (0..64).map(|i| 0.0099 * i as f64 / 63.0).collect();
        let path = ModulationPath::from_lambda(
            p.clone(),
            times,
            |s| 0.05 * (1.0 - s / p.t_end),
            |_| -0.05 / p.t_end,
        )
        .unwrap();
        let beyond = 1.1 * p.c0 * (p.t_end - t).sqrt();
        assert_eq!(leading_term(beyond, t, &path), 0.0);
        // x = 0 value is α/μ
        let v = leading_term(0.0, t, &path);
        assert_relative_eq!(v, path.alpha(t) / path.mu(t), max_relative = 1e-14);
        assert!(v != 0.0);
    }

    #[test]
    fn g4_probe_finite_and_grid_stable() {
        let a = test_ansatz(2, 0.01);
        let t = 0.004;
        let tau = 0.01 - t;
        let grid = RadialGrid::geometric(a.path.mu0(t) / 50.0, 1.04, 1.2 * (tau.sqrt()))
            .unwrap();
        let probe = bound_probe_g4(t, &a, &grid).unwrap();
        assert!(probe.ratio_sup.is_finite());
        assert!(probe.ratio_sup > 0.0);
        let refined = bound_probe_g4(t, &a, &grid.refined()).unwrap();
        let rel = (probe.ratio_sup - refined.ratio_sup).abs() / probe.ratio_sup;
        assert!(rel < 0.05, "refinement moved the ratio by {rel}");
    }

    #[test]
    fn g4_ratio_bounded_across_horizons() {
        let mut ratios = Vec::new();
        for t_end in [1e-1, 1e-2, 1e-3] {
            let a = test_ansatz(2, t_end);
            let t = 0.4 * t_end;
            let tau: f64 = t_end - t;
            let grid =
                RadialGrid::geometric(a.path.mu0(t) / 50.0, 1.04, 1.2 * tau.sqrt()).unwrap();
            ratios.push(bound_probe_g4(t, &a, &grid).unwrap().ratio_sup);
        }
        let max = ratios.iter().cloned().fold(0.0_f64, f64::max);
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max.is_finite() && max < 50.0 * min.max(1e-2), "{ratios:?}");
    }

    #[test]
    fn norm_inner_weight_cancels() {
        let p = BlowupParams::default();
        let (nu, sigma) = (p.nu, p.sigma);
        let ts: Vec<f64> = (1..20).map(|i| p.t_end * i as f64 / 25.0).collect();
        let ys: Vec<f64> = (0..200).map(|i| i as f64 * 0.1).collect();
        let pc = p.clone();
        let h = SpaceTimeSamples::from_fn(ys, ts, |y, t| {
            crate::ansatz::mu0_unchecked(t, &pc).powf(nu) / (1.0 + y.powf(2.0 + sigma))
        })
        .unwrap();
        let rep = norm_inner(&h, &p, nu, sigma).unwrap();
        assert_relative_eq!(rep.value, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn norms_are_homogeneous_and_subadditive() {
        let p = BlowupParams::default();
        let ts: Vec<f64> = (1..12).map(|i| p.t_end * i as f64 / 16.0).collect();
        let xs: Vec<f64> = (0..60).map(|i| i as f64 * 0.01).collect();
        let f1 = SpaceTimeSamples::from_fn(xs.clone(), ts.clone(), |x, t| (x + t).sin()).unwrap();
        let f2 =
            SpaceTimeSamples::from_fn(xs.clone(), ts.clone(), |x, t| (3.0 * x - t).cos()).unwrap();
        let sum = SpaceTimeSamples {
            xs: xs.clone(),
            ts: ts.clone(),
            values: f1
                .values
                .iter()
                .zip(&f2.values)
                .map(|(a, b)| a + b)
                .collect(),
            gradient: None,
        };
        let scaled = SpaceTimeSamples {
            xs: xs.clone(),
            ts: ts.clone(),
            values: f1.values.iter().map(|v| -2.5 * v).collect(),
            gradient: None,
        };
        let n1 = norm_outer_rhs(&f1, &p).unwrap().value;
        let n2 = norm_outer_rhs(&f2, &p).unwrap().value;
        let ns = norm_outer_rhs(&sum, &p).unwrap().value;
        let nc = norm_outer_rhs(&scaled, &p).unwrap().value;
        assert!(ns <= n1 + n2 + 1e-12);
        assert_relative_eq!(nc, 2.5 * n1, max_relative = 1e-12);
    }

    #[test]
    fn norm_outer_rhs_weight_members() {
        let p = BlowupParams::default();
        let ts: Vec<f64> = (1..10).map(|i| p.t_end * i as f64 / 16.0).collect();
        // include the transition radii for each sampled time
        let mut xs: Vec<f64> = (1..200).map(|i| i as f64 * 2e-8).collect();
        for &t in &ts {
            let m = crate::ansatz::mu0_unchecked(t, &p);
            let r = m.powf(-p.beta);
            xs.push(m * r);
            xs.push(2.0 * m * r);
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        let one = SpaceTimeSamples::from_fn(xs.clone(), ts.clone(), |_, _| 1.0).unwrap();
        let rep = norm_outer_rhs(&one, &p).unwrap();
        assert!(rep.value <= 1.0 + 1e-12);
        let pc = p.clone();
        let rho1 = SpaceTimeSamples::from_fn(xs.clone(), ts.clone(), |x, t| {
            outer_weights(x, t, &pc).0
        })
        .unwrap();
        let rep1 = norm_outer_rhs(&rho1, &p).unwrap();
        assert!(rep1.value <= 1.0 + 1e-12);
    }

    #[test]
    fn norm_outer_sol_basics() {
        let p = BlowupParams::default();
        let mut ts: Vec<f64> = (0..40).map(|i| p.t_end * i as f64 / 40.0).collect();
        ts.push(p.t_end);
        let xs: Vec<f64> = (0..30).map(|i| i as f64 * 0.003).collect();
        let zero = SpaceTimeSamples::from_fn(xs.clone(), ts.clone(), |_, _| 0.0)
            .unwrap()
            .with_gradient(|_, _| 0.0);
        assert_eq!(norm_outer_sol(&zero, &p).unwrap().value, 0.0);

        let f = SpaceTimeSamples::from_fn(xs.clone(), ts.clone(), |x, t| (x * 40.0 + t).sin())
            .unwrap()
            .with_gradient(|x, t| 40.0 * (x * 40.0 + t).cos());
        let n1 = norm_outer_sol(&f, &p).unwrap().value;
        let scaled = SpaceTimeSamples {
            xs: xs.clone(),
            ts: ts.clone(),
            values: f.values.iter().map(|v| 3.0 * v).collect(),
            gradient: f.gradient.as_ref().map(|g| g.iter().map(|v| 3.0 * v).collect()),
        };
        let n3 = norm_outer_sol(&scaled, &p).unwrap().value;
        assert_relative_eq!(n3, 3.0 * n1, max_relative = 1e-12);

        // missing terminal slice is an error
        let ts_bad: Vec<f64> = (1..8).map(|i| p.t_end * i as f64 / 16.0).collect();
        let bad = SpaceTimeSamples::from_fn(xs, ts_bad, |_, _| 1.0)
            .unwrap()
            .with_gradient(|_, _| 0.0);
        assert!(norm_outer_sol(&bad, &p).is_err());
    }

    #[test]
    fn rhs_g_and_h_reduce_with_zero_perturbations() {
        let a = test_ansatz(2, 0.01);
        let t = 0.003;
        let ctx = GluingContext {
            ansatz: &a,
            phi: &ZeroField,
            psi: &ZeroField,
            phi1: &ZeroField,
        };
        // G reduces to the (1-η_R)-localized error terms
        for &x in &[1e-5, 1e-3, 0.02] {
            let expect =
                (a.s_u1(x, t) - leading_term(x, t, &a.path)) * (1.0 - a.cutoffs.eta_r(x, t));
            assert_relative_eq!(rhs_g(x, t, &ctx), expect, max_relative = 1e-12, epsilon = 1e-300);
        }
        // H reduces to the μ₀^{5/2}-scaled error terms
        let mu0 = a.path.mu0(t);
        for &y in &[0.0, 1.5, 10.0] {
            let x = mu0 * y;
            let expect = mu0.powf(2.5) * (a.s_u1(x, t) - leading_term(x, t, &a.path));
            assert_relative_eq!(rhs_h(y, t, &ctx), expect, max_relative = 1e-12, epsilon = 1e-300);
        }
    }

    #[test]
    fn quintic_remainder_is_second_order() {
        // (U+Φ₁+Φ₂)⁵ - (U+Φ₁)⁵ - 5(U+Φ₁)⁴Φ₂ = O(Φ₂²)
        let u = 1.3_f64;
        let mut prev_ratio = None;
        for eps in [1e-2, 1e-3, 1e-4] {
            let rem = (u + eps).powi(5) - u.powi(5) - 5.0 * u.powi(4) * eps;
            let ratio = rem / (eps * eps);
            if let Some(p) = prev_ratio {
                let rel: f64 = (ratio - p) / p;
                assert!(rel.abs() < 0.05);
            }
            prev_ratio = Some(ratio);
        }
    }
}

//! Radial method-of-lines simulation of `u_t = Δu + u⁵`, blow-up
//! detection, rate fitting, scaling tracking, and the inner
//! linear-evolution probe.

use crate::abel::{InterpKind, TimeSeries};
use crate::ansatz::Ansatz;
use crate::grid::{FieldSnapshot, RadialGrid};
use crate::numerics::{linear_fit, pchip_interpolate};
use crate::params::BlowupParams;
use crate::profiles;
use crate::{Error, Result};
#[cfg(test)]
use crate::THREE_Q;

// ---------------------------------------------------------------------------
// Controls and trajectory
// ---------------------------------------------------------------------------

/// Far-field Dirichlet condition.
#[derive(Clone)]
pub enum Boundary {
    Zero,
    /// Value of the glued approximation's outer part at the boundary
    /// radius (identically zero once the boundary lies beyond the outer
    /// cutoff, which keeps the data consistent with `U₁`).
    GluedOuter(Box<Ansatz>),
}

impl std::fmt::Debug for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Zero => write!(f, "Zero"),
            Boundary::GluedOuter(_) => write!(f, "GluedOuter"),
        }
    }
}

impl Boundary {
    fn value(&self, x: f64, t: f64) -> f64 {
        match self {
            Boundary::Zero => 0.0,
            Boundary::GluedOuter(a) => {
                if t < a.params().t_end {
                    let c = &a.cutoffs;
                    let g = (1.0 - c.eta_o1.value(x, t)) * c.eta_o2.value(x, t);
                    if g == 0.0 {
                        0.0
                    } else {
                        g * a.u_outer(x, t).map(|f| f.value).unwrap_or(0.0)
                    }
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimControls {
    /// Sup-norm threshold that counts as blow-up.
    pub blowup_threshold: f64,
    /// Sup-norm below which the run is declared decayed.
    pub decay_threshold: f64,
    /// Final integration time.
    pub horizon: f64,
    pub max_steps: u64,
    /// Diffusive CFL number: `dt ≤ cfl_diff · h_min²/2`.
    pub cfl_diff: f64,
    /// Reaction-scale control: `dt ≤ cfl_react · ‖u‖_∞^{-4}`.
    pub cfl_react: f64,
    pub boundary: Boundary,
    /// Refine the grid near the origin as the core shrinks.
    pub regrid: bool,
    /// Keep a full snapshot whenever the sup norm grows by this factor.
    pub snapshot_factor: f64,
}

impl Default for SimControls {
    fn default() -> Self {
        SimControls {
            blowup_threshold: 1e8,
            decay_threshold: 1e-6,
            horizon: 1.0,
            max_steps: 50_000_000,
            cfl_diff: 0.4,
            cfl_react: 0.1,
            boundary: Boundary::Zero,
            regrid: true,
            snapshot_factor: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    BlowupThreshold,
    Decay,
    Horizon,
    StepBudget,
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::BlowupThreshold => "blowup-threshold",
            Termination::Decay => "decay",
            Termination::Horizon => "horizon",
            Termination::StepBudget => "step-budget",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrajRecord {
    pub t: f64,
    pub sup: f64,
    pub u0: f64,
}

/// Time history of a simulation run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<TrajRecord>,
    pub snapshots: Vec<(f64, FieldSnapshot)>,
    pub termination: Termination,
    pub steps: u64,
}

impl Trajectory {
    pub fn final_time(&self) -> f64 {
        self.records.last().map(|r| r.t).unwrap_or(0.0)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("t,sup_norm,u0,mu_est\n");
        for r in &self.records {
            let mu_est = if r.u0 > 0.0 {
                3.0_f64.sqrt() / (r.u0 * r.u0)
            } else {
                f64::NAN
            };
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.t, r.sup, r.u0, mu_est
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Stepping
// ---------------------------------------------------------------------------

/// Precomputed 3-point Laplacian stencil for a fixed grid.
struct Stencil {
    cm: Vec<f64>,
    c0: Vec<f64>,
    cp: Vec<f64>,
}

impl Stencil {
    fn build(grid: &RadialGrid) -> Stencil {
        let r = grid.nodes();
        let n = r.len();
        let mut cm = vec![0.0; n];
        let mut c0 = vec![0.0; n];
        let mut cp = vec![0.0; n];
        // origin: Δu(0) = 6 (u₁ - u₀)/h² by even symmetry
        let h0 = r[1] - r[0];
        c0[0] = -6.0 / (h0 * h0);
        cp[0] = 6.0 / (h0 * h0);
        for i in 1..n - 1 {
            let hm = r[i] - r[i - 1];
            let hp = r[i + 1] - r[i];
            let d2m = 2.0 / (hm * (hm + hp));
            let d2p = 2.0 / (hp * (hm + hp));
            // (2/r) f' with the quadratic-exact central stencil
            let d1m = -hp / (hm * (hm + hp));
            let d1p = hm / (hp * (hm + hp));
            let two_r = 2.0 / r[i];
            cm[i] = d2m + two_r * d1m;
            cp[i] = d2p + two_r * d1p;
            c0[i] = -(d2m + d2p) - two_r * (d1m + d1p);
        }
        Stencil { cm, c0, cp }
    }

    #[inline]
    fn apply(&self, u: &[f64], i: usize) -> f64 {
        if i == 0 {
            self.c0[0] * u[0] + self.cp[0] * u[1]
        } else {
            self.cm[i] * u[i - 1] + self.c0[i] * u[i] + self.cp[i] * u[i + 1]
        }
    }
}

fn rhs_into(stencil: &Stencil, u: &[f64], out: &mut [f64]) {
    let n = u.len();
    for i in 0..n - 1 {
        let v = u[i];
        let v2 = v * v;
        out[i] = stencil.apply(u, i) + v2 * v2 * v;
    }
    out[n - 1] = 0.0; // Dirichlet node is imposed, not evolved
}

/// One explicit Heun step; `Err` when the step overshot to non-finite
/// values (callers retry at `dt/2`).
fn heun_step(
    stencil: &Stencil,
    u: &[f64],
    dt: f64,
    boundary_value: f64,
) -> std::result::Result<Vec<f64>, ()> {
    let n = u.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut mid = vec![0.0; n];
    rhs_into(stencil, u, &mut k1);
    for i in 0..n - 1 {
        mid[i] = u[i] + dt * k1[i];
        if !mid[i].is_finite() {
            return Err(());
        }
    }
    mid[n - 1] = boundary_value;
    rhs_into(stencil, &mid, &mut k2);
    let mut next = vec![0.0; n];
    for i in 0..n - 1 {
        next[i] = u[i] + 0.5 * dt * (k1[i] + k2[i]);
        if !next[i].is_finite() {
            return Err(());
        }
    }
    next[n - 1] = boundary_value;
    Ok(next)
}

/// One explicit RK2 step of the semi-discrete radial system (the public
/// single-step operation; [`run`] drives it with the dual step control).
pub fn step(state: &FieldSnapshot, t: f64, dt: f64, boundary: &Boundary) -> Result<FieldSnapshot> {
    let stencil = Stencil::build(&state.grid);
    let bv = boundary.value(state.grid.r_max(), t + dt);
    let mut dt_try = dt;
    for _ in 0..48 {
        match heun_step(&stencil, &state.values, dt_try, bv) {
            Ok(values) => return FieldSnapshot::new(state.grid.clone(), values),
            Err(()) => dt_try *= 0.5,
        }
    }
    Err(Error::numerical("step-size underflow after overshoot retries"))
}

/// Insert midpoints in `[0, reach]`, interpolating monotone-cubically.
fn refine_near_origin(
    grid: &RadialGrid,
    values: &[f64],
    reach: f64,
) -> Result<(RadialGrid, Vec<f64>)> {
    let r = grid.nodes();
    let mut new_nodes = Vec::with_capacity(r.len() * 2);
    for i in 0..r.len() - 1 {
        new_nodes.push(r[i]);
        if r[i] < reach {
            new_nodes.push(0.5 * (r[i] + r[i + 1]));
        }
    }
    new_nodes.push(*r.last().expect("nonempty"));
    let new_vals: Vec<f64> = new_nodes
        .iter()
        .map(|&x| pchip_interpolate(r, values, x))
        .collect();
    Ok((RadialGrid::from_nodes(new_nodes)?, new_vals))
}

/// Integrate until the blow-up threshold, decay, the horizon, or the step
/// budget, with `dt = min(cfl_diff · h_min²/2, cfl_react · ‖u‖_∞^{-4})`.
pub fn run(u0: &FieldSnapshot, controls: &SimControls) -> Result<Trajectory> {
    let mut grid = u0.grid.clone();
    let mut u = u0.values.clone();
    let mut stencil = Stencil::build(&grid);
    let mut h_min = grid.min_spacing();
    let mut t = 0.0_f64;
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut steps: u64 = 0;

    let sup_of = |u: &[f64]| u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut sup = sup_of(&u);
    let mut last_recorded_sup = sup;
    let mut next_regrid_sup = 2.0 * sup;
    let mut next_snapshot_sup = controls.snapshot_factor * sup;
    records.push(TrajRecord { t, sup, u0: u[0] });
    snapshots.push((t, FieldSnapshot::new(grid.clone(), u.clone())?));

    let termination = loop {
        if sup >= controls.blowup_threshold {
            break Termination::BlowupThreshold;
        }
        if sup <= controls.decay_threshold {
            break Termination::Decay;
        }
        if t >= controls.horizon {
            break Termination::Horizon;
        }
        if steps >= controls.max_steps {
            break Termination::StepBudget;
        }

        let dt_diff = controls.cfl_diff * h_min * h_min / 2.0;
        let dt_react = controls.cfl_react / sup.max(1e-300).powi(4);
        let mut dt = dt_diff.min(dt_react).min(controls.horizon - t);
        if !(dt > 0.0) {
            break Termination::Horizon;
        }

        let bv = controls.boundary.value(grid.r_max(), t + dt);
        let mut stepped = None;
        for _ in 0..48 {
            match heun_step(&stencil, &u, dt, bv) {
                Ok(next) => {
                    stepped = Some(next);
                    break;
                }
                Err(()) => dt *= 0.5,
            }
        }
        u = stepped.ok_or_else(|| Error::numerical("step-size underflow"))?;
        t += dt;
        steps += 1;
        sup = sup_of(&u);

        if (sup - last_recorded_sup).abs() > 2e-3 * last_recorded_sup || steps % 512 == 0 {
            records.push(TrajRecord { t, sup, u0: u[0] });
            last_recorded_sup = sup;
        }

        if sup >= next_snapshot_sup {
            snapshots.push((t, FieldSnapshot::new(grid.clone(), u.clone())?));
            next_snapshot_sup = controls.snapshot_factor * sup;
        }

        if controls.regrid && sup >= next_regrid_sup {
            next_regrid_sup = 2.0 * sup;
            let r = grid.nodes();
            let u0_abs = u[0].abs();
            // only refine while the peak sits at the origin
            if u0_abs > 0.5 * sup {
                let mut w_core = r[r.len() - 1];
                for (i, &ri) in r.iter().enumerate() {
                    if u[i].abs() < 0.5 * u0_abs {
                        w_core = ri;
                        break;
                    }
                }
                let nodes_in_core = r.iter().take_while(|&&ri| ri < w_core).count();
                if nodes_in_core < 16 {
                    let (g2, v2) = refine_near_origin(&grid, &u, 8.0 * w_core)?;
                    grid = g2;
                    u = v2;
                    stencil = Stencil::build(&grid);
                    h_min = grid.min_spacing();
                }
            }
        }
    };

    records.push(TrajRecord { t, sup, u0: u[0] });
    snapshots.push((t, FieldSnapshot::new(grid.clone(), u.clone())?));
    Ok(Trajectory {
        records,
        snapshots,
        termination,
        steps,
    })
}

// ---------------------------------------------------------------------------
// Rate fitting and scaling tracking
// ---------------------------------------------------------------------------

/// Fitted blow-up rate `‖u‖_∞ ≈ C (T* - t)^{-p}`.
#[derive(Debug, Clone)]
pub struct RateFit {
    pub t_star: f64,
    pub exponent: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub window_samples: usize,
    /// Dyadic scales of `T* - t` spanned by the fit window.
    pub window_dyadic_span: f64,
}

impl RateFit {
    pub fn report(&self) -> String {
        format!(
            "t_star={:.16e}\nexponent={:.16e}\nresidual={:.16e}\nwindow_samples={}\nwindow_dyadic_span={:.3}\n",
            self.t_star, self.exponent, self.residual, self.window_samples, self.window_dyadic_span
        )
    }
}

/// Joint fit of `(T*, p)` minimizing the least-squares error of
/// `log ‖u‖_∞` against `log (T* - t)` over the final window (records with
/// `sup ≥ sup_end/32`). The window must span at least two dyadic scales
/// of `T* - t` with at least 8 samples.
pub fn fit_rate(traj: &Trajectory) -> Result<RateFit> {
    if traj.termination != Termination::BlowupThreshold {
        return Err(Error::invalid(
            "rate fit needs a trajectory that reached the blow-up threshold",
        ));
    }
    // past (T*-t) ~ ulp(T*) the recorded times stagnate while the sup
    // keeps growing; restrict the window to time-resolvable records
    let t_fin = traj.records.last().expect("records").t;
    let resolvable = |r: &TrajRecord| t_fin - r.t >= 1e-12 * t_fin.max(1e-300);
    let sup_end = traj
        .records
        .iter()
        .filter(|r| resolvable(r))
        .map(|r| r.sup)
        .fold(0.0_f64, f64::max);
    let window: Vec<&TrajRecord> = traj
        .records
        .iter()
        .filter(|r| resolvable(r) && r.sup >= sup_end / 32.0 && r.sup <= sup_end)
        .collect();
    if window.len() < 8 {
        return Err(Error::invalid("rate-fit window has fewer than 8 samples"));
    }
    let t_last = window.last().expect("nonempty").t;
    let span = t_last - window[0].t;
    let ts: Vec<f64> = window.iter().map(|r| r.t).collect();
    let ls: Vec<f64> = window.iter().map(|r| r.sup.ln()).collect();

    // golden-section search on θ, T* = t_last + e^θ
    let sse = |theta: f64| -> f64 {
        let t_star = t_last + theta.exp();
        let xs: Vec<f64> = ts.iter().map(|&t| (t_star - t).ln()).collect();
        match linear_fit(&xs, &ls) {
            Ok((a, b)) => xs
                .iter()
                .zip(&ls)
                .map(|(&x, &y)| {
                    let e = y - (a + b * x);
                    e * e
                })
                .sum(),
            Err(_) => f64::INFINITY,
        }
    };
    let (mut lo, mut hi) = ((1e-45_f64).ln(), (2.0 * span.max(1e-30)).ln());
    let gr = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = hi - gr * (hi - lo);
    let mut d = lo + gr * (hi - lo);
    let (mut fc, mut fd) = (sse(c), sse(d));
    for _ in 0..300 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = sse(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = sse(d);
        }
        if (hi - lo).abs() < 1e-10 {
            break;
        }
    }
    let t_star = t_last + (0.5 * (lo + hi)).exp();
    let xs: Vec<f64> = ts.iter().map(|&t| (t_star - t).ln()).collect();
    let (a, b) = linear_fit(&xs, &ls)?;
    let rms = (xs
        .iter()
        .zip(&ls)
        .map(|(&x, &y)| {
            let e = y - (a + b * x);
            e * e
        })
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    let dyadic = ((t_star - window[0].t) / (t_star - t_last)).log2();
    if !(dyadic >= 2.0) {
        return Err(Error::invalid(
            "rate-fit window spans fewer than 2 dyadic scales",
        ));
    }
    Ok(RateFit {
        t_star,
        exponent: -b,
        residual: rms,
        window_samples: xs.len(),
        window_dyadic_span: dyadic,
    })
}

/// `μ_est(t) = √3 / u(0,t)²`, inverting the bubble core value
/// `u(0,t) = 3^{1/4} μ^{-1/2}`.
pub fn track_mu(traj: &Trajectory) -> Result<TimeSeries> {
    let mut times = Vec::new();
    let mut vals = Vec::new();
    for r in &traj.records {
        if r.u0 <= 0.0 {
            return Err(Error::domain("mu tracking needs a positive center value"));
        }
        if times.last().map_or(true, |&lt| r.t > lt) {
            times.push(r.t);
            vals.push(3.0_f64.sqrt() / (r.u0 * r.u0));
        }
    }
    TimeSeries::new(times, vals, InterpKind::Linear)
}

// ---------------------------------------------------------------------------
// Inner linear-evolution probe
// ---------------------------------------------------------------------------

/// Inner source `h(y, t)`.
pub trait InnerSource: Sync {
    fn value(&self, y: f64, t: f64) -> f64;
}

impl<F: Fn(f64, f64) -> f64 + Sync> InnerSource for F {
    fn value(&self, y: f64, t: f64) -> f64 {
        (self)(y, t)
    }
}

#[derive(Debug, Clone)]
pub struct InnerProbeReport {
    /// Initial-data amplitude found by the shooting scan.
    pub e0: f64,
    /// Sup over the run of `(1+|y|)|φ| / (μ₀^ν R^{(4-σ)/3})`.
    pub ratio_sup: f64,
    /// Inner time reached before the unstable mode escaped (equals
    /// `tau_end` when the scan succeeded).
    pub tau_reached: f64,
    pub tau_end: f64,
}

/// Inner time back to native time: `τ = ∫₀ᵗ μ₀^{-2} ds` inverted in
/// closed form.
fn t_of_tau(tau: f64, p: &BlowupParams) -> f64 {
    let k4 = 4.0 * p.k as f64 - 1.0;
    let a2 = 3.0 * p.big_a * p.big_a;
    let base = p.t_end.powf(-k4) + a2 * k4 * tau;
    p.t_end - base.powf(-1.0 / k4)
}

/// Evolve `μ₀² φ_t = Δφ + 5w⁴φ + h` on `B_{2R}` (inner time, Dirichlet
/// boundary) from `φ(y,0) = e₀ Z₋(y)` and report the weighted sup of `φ`.
/// With `e0 = Some(value)` the given amplitude is used as is; with `None`
/// the amplitude is scanned by bisection to suppress the unstable mode.
///
/// Precondition: `∫_{B_2R} h Z₀ dy = 0` at the sampled times
/// (tolerance `1e-6 ‖h‖`).
pub fn inner_evolution_probe(
    h: &dyn InnerSource,
    params: &BlowupParams,
    big_r: f64,
    tau_end: f64,
    e0: Option<f64>,
) -> Result<InnerProbeReport> {
    let n = ((2.0 * big_r) / 0.1).ceil() as usize;
    let grid = RadialGrid::uniform(2.0 * big_r, n.max(64))?;
    let nodes = grid.nodes().to_vec();

    // mode-0 orthogonality at a handful of sampled times
    let mut h_sup = 0.0_f64;
    for m in 0..6 {
        let t = t_of_tau(tau_end * m as f64 / 5.0, params);
        let mut integral = 0.0;
        let mut prev_y = 0.0;
        let mut prev_f = 0.0;
        for &y in nodes.iter().skip(1) {
            let f = h.value(y, t) * profiles::kernel_z0(y)?.value * y * y;
            integral += 0.5 * (f + prev_f) * (y - prev_y);
            h_sup = h_sup.max(h.value(y, t).abs());
            prev_y = y;
            prev_f = f;
        }
        integral *= 4.0 * std::f64::consts::PI;
        if integral.abs() > 1e-6 * (h_sup * big_r.powi(3)).max(1e-300) {
            return Err(Error::domain(format!(
                "inner source violates the Z0 orthogonality (integral {integral:.3e})"
            )));
        }
    }

    let stencil = Stencil::build(&grid);
    let eig_grid = RadialGrid::uniform((2.0 * big_r).max(30.0), 3000)?;
    let pair = profiles::negative_eigenpair(&eig_grid)?;
    let z_minus: Vec<f64> = nodes.iter().map(|&y| pair.z_minus.eval(y)).collect();
    let potential: Vec<f64> = nodes
        .iter()
        .map(|&y| 15.0 / ((1.0 + y * y) * (1.0 + y * y)))
        .collect();

    let h_y = grid.min_spacing();
    let dtau = 0.2 * h_y * h_y;
    let n_steps = (tau_end / dtau).ceil() as usize;

    let weight_denom = |tau: f64| -> f64 {
        let t = t_of_tau(tau, params);
        let mu0 = crate::ansatz::mu0_unchecked(t, params);
        mu0.powf(params.nu) * big_r.powf((4.0 - params.sigma) / 3.0)
    };

    // forward Euler in inner time; diffusion-limited dtau makes the
    // first-order error negligible against the spatial one
    let evolve = |e0: f64| -> (f64, f64, f64) {
        let nn = nodes.len();
        let mut phi: Vec<f64> = z_minus.iter().map(|z| e0 * z).collect();
        phi[nn - 1] = 0.0;
        let mut tau = 0.0;
        let mut ratio = 0.0_f64;
        let cap = 1e6 * (h_sup + e0.abs()).max(1e-12);
        let mut k1 = vec![0.0; nn];
        for _ in 0..n_steps {
            let t = t_of_tau(tau, params);
            for i in 0..nn - 1 {
                k1[i] = stencil.apply(&phi, i) + potential[i] * phi[i] + h.value(nodes[i], t);
            }
            for i in 0..nn - 1 {
                phi[i] += dtau * k1[i];
            }
            tau += dtau;
            let denom = weight_denom(tau);
            let mut sup = 0.0_f64;
            for (i, &y) in nodes.iter().enumerate() {
                let a = phi[i].abs();
                sup = sup.max(a);
                let w = (1.0 + y) * a / denom;
                if w > ratio {
                    ratio = w;
                }
            }
            if sup > cap {
                return (tau, ratio, phi[0].signum());
            }
        }
        (tau, ratio, 0.0)
    };

    if let Some(e0_fixed) = e0 {
        let (tau, ratio, _) = evolve(e0_fixed);
        return Ok(InnerProbeReport {
            e0: e0_fixed,
            ratio_sup: ratio,
            tau_reached: tau,
            tau_end,
        });
    }

    let scale = (10.0 * h_sup).max(1e-6);
    let (mut lo, mut hi) = (-scale, scale);
    let (tau_lo, ratio_lo, mut sign_lo) = evolve(lo);
    if sign_lo == 0.0 {
        return Ok(InnerProbeReport {
            e0: lo,
            ratio_sup: ratio_lo,
            tau_reached: tau_lo,
            tau_end,
        });
    }
    let (_, _, sign_hi) = evolve(hi);
    if sign_lo == sign_hi {
        return Err(Error::numerical(
            "e0 bracket fails to control the unstable-mode growth",
        ));
    }
    let mut best = (tau_lo, ratio_lo, lo);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (tau, ratio, sign) = evolve(mid);
        if tau > best.0 {
            best = (tau, ratio, mid);
        }
        if sign == 0.0 {
            return Ok(InnerProbeReport {
                e0: mid,
                ratio_sup: ratio,
                tau_reached: tau,
                tau_end,
            });
        }
        if sign == sign_lo {
            lo = mid;
            sign_lo = sign;
        } else {
            hi = mid;
        }
    }
    Ok(InnerProbeReport {
        e0: best.2,
        ratio_sup: best.1,
        tau_reached: best.0,
        tau_end,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bubble(r: f64) -> f64 {
        profiles::bubble_w(r).unwrap().value
    }

    #[test]
    fn zero_data_stays_zero() {
        let grid = RadialGrid::uniform(4.0, 64).unwrap();
        let u0 = FieldSnapshot::from_fn(&grid, |_| 0.0).unwrap();
        let next = step(&u0, 0.0, 1e-4, &Boundary::Zero).unwrap();
        assert!(next.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_data_follows_ode_blowup_time() {
        // with data constant in space the Laplacian vanishes and
        // u' = u⁵ blows up at c^{-4}/4; the far boundary never matters
        // because the threshold is reached long before diffusion from the
        // boundary reaches the origin
        let c = 2.0_f64;
        let t_star_exact = c.powi(-4) / 4.0;
        let grid = RadialGrid::uniform(50.0, 128).unwrap();
        let u0 = FieldSnapshot::from_fn(&grid, |_| c).unwrap();
        let controls = SimControls {
            horizon: 1.0,
            regrid: false,
            // Heun at the full reaction cap dt = 0.1 u^{-4} lags the ODE
            // by ~0.5% per step; a 4x tighter control meets the 1% target
            cfl_react: 0.025,
            ..SimControls::default()
        };
        let traj = run(&u0, &controls).unwrap();
        assert_eq!(traj.termination, Termination::BlowupThreshold);
        assert_relative_eq!(traj.final_time(), t_star_exact, max_relative = 0.01);
    }

    #[test]
    fn steady_bubble_drifts_slowly() {
        let grid = RadialGrid::geometric(0.02, 1.02, 30.0).unwrap();
        let u0 = FieldSnapshot::from_fn(&grid, bubble).unwrap();
        let mut u = u0.clone();
        let mut t = 0.0;
        for _ in 0..200 {
            let dt = 0.2 * grid.min_spacing().powi(2);
            u = step(&u, t, dt, &Boundary::Zero).unwrap();
            t += dt;
        }
        // measure away from the boundary, where the zero Dirichlet value
        // disagrees with w(r_max) and builds a local layer
        let drift = grid
            .nodes()
            .iter()
            .enumerate()
            .filter(|(_, &r)| r < 10.0)
            .map(|(i, _)| (u.values[i] - u0.values[i]).abs())
            .fold(0.0_f64, f64::max)
            / t;
        // equilibrium up to the O(h²) discretization drift
        assert!(drift < 0.2, "drift rate {drift}");
    }

    #[test]
    fn decaying_run_terminates_decay_and_is_monotone_late() {
        let grid = RadialGrid::uniform(12.0, 400).unwrap();
        let u0 = FieldSnapshot::from_fn(&grid, |r| 1e-3 * (-r * r).exp()).unwrap();
        let controls = SimControls {
            horizon: 40.0,
            decay_threshold: 1e-4,
            regrid: false,
            ..SimControls::default()
        };
        let traj = run(&u0, &controls).unwrap();
        assert_eq!(traj.termination, Termination::Decay);
        let n = traj.records.len();
        for w in traj.records[n / 2..].windows(2) {
            assert!(w[1].sup <= w[0].sup * (1.0 + 1e-12));
        }
    }

    #[test]
    fn large_gaussian_blows_up_at_type_one_rate() {
        let grid = RadialGrid::geometric(0.01, 1.03, 8.0).unwrap();
        let u0 = FieldSnapshot::from_fn(&grid, |r| 5.0 * (-r * r).exp()).unwrap();
        let controls = SimControls {
            horizon: 1.0,
            ..SimControls::default()
        };
        let traj = run(&u0, &controls).unwrap();
        assert_eq!(traj.termination, Termination::BlowupThreshold);
        let fit = fit_rate(&traj).unwrap();
        assert!(
            (fit.exponent - 0.25).abs() <= 0.025,
            "exponent {}",
            fit.exponent
        );
    }

    #[test]
    fn fit_rate_on_synthetic_power_laws() {
        let t_star = 0.37;
        for p in [0.25_f64, 1.0] {
            let mut records = Vec::new();
            for i in 0..400 {
                let t = t_star * (1.0 - 2.0_f64.powf(-(i as f64) * 0.1));
                let sup = (t_star - t).powf(-p);
                records.push(TrajRecord { t, sup, u0: sup });
                if sup > 1e9 {
                    break;
                }
            }
            let traj = Trajectory {
                records,
                snapshots: Vec::new(),
                termination: Termination::BlowupThreshold,
                steps: 0,
            };
            let fit = fit_rate(&traj).unwrap();
            assert_relative_eq!(fit.exponent, p, max_relative = 1e-4);
            assert!(fit.residual < 1e-6, "residual {}", fit.residual);
            assert!(fit.window_samples >= 8);
            assert!(fit.window_dyadic_span >= 2.0);
        }
    }

    #[test]
    fn track_mu_inverts_exact_bubble() {
        let mu = 1e-3_f64;
        let u0val = THREE_Q / mu.sqrt();
        let records = vec![
            TrajRecord {
                t: 0.0,
                sup: u0val,
                u0: u0val,
            },
            TrajRecord {
                t: 0.1,
                sup: u0val,
                u0: u0val,
            },
        ];
        let traj = Trajectory {
            records,
            snapshots: Vec::new(),
            termination: Termination::Horizon,
            steps: 0,
        };
        let series = track_mu(&traj).unwrap();
        assert_relative_eq!(series.values()[0], mu, max_relative = 1e-12);
    }

    #[test]
    fn track_mu_rejects_nonpositive_center() {
        let records = vec![
            TrajRecord {
                t: 0.0,
                sup: 1.0,
                u0: 1.0,
            },
            TrajRecord {
                t: 0.1,
                sup: 1.0,
                u0: -0.5,
            },
        ];
        let traj = Trajectory {
            records,
            snapshots: Vec::new(),
            termination: Termination::Horizon,
            steps: 0,
        };
        assert!(track_mu(&traj).is_err());
    }

    #[test]
    fn inner_probe_zero_source() {
        let p = BlowupParams::default();
        let h = |_y: f64, _t: f64| 0.0;
        let rep = inner_evolution_probe(&h, &p, 15.0, 2.0, Some(0.0)).unwrap();
        assert!(rep.ratio_sup < 1e-8, "ratio {}", rep.ratio_sup);
        assert_eq!(rep.tau_reached, rep.tau_reached.max(0.0));
    }

    #[test]
    fn inner_probe_rejects_nonorthogonal_source() {
        let p = BlowupParams::default();
        // ∫ 5w⁴ Z₀ dy ≠ 0, so a 5w⁴-shaped source violates mode-0
        // orthogonality
        let h = move |y: f64, _t: f64| 0.01 * 15.0 / ((1.0 + y * y) * (1.0 + y * y));
        assert!(inner_evolution_probe(&h, &p, 15.0, 2.0, Some(0.0)).is_err());
    }
}

//! Subcommand orchestration: each subcommand runs the corresponding module
//! at desk scale and writes deterministic CSV/SVG/text artifacts into the
//! output directory. Exit codes: 0 success, 2 config error, 3 numerical
//! failure, 4 constraint violation without override.

use crate::abel::{self, InterpKind, TimeSeries};
use crate::ansatz::{matching_report, Ansatz, ModulationPath};
use crate::config::{RunConfig, SimInitial, Subcommand};
use crate::grid::{FieldSnapshot, RadialGrid, SpaceTimeSamples};
use crate::nonlocal::{self, RhsFamily};
use crate::params::BlowupParams;
use crate::profiles::{self, FdOrder, JMethod};
use crate::report::{self, Axes, PlotStyle, Series};
use crate::residual;
use crate::simulate::{self, Boundary, SimControls};
use crate::{Error, Result};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Worker cap for concurrent jobs, from `BLOWUPLAB_THREADS`.
pub fn worker_cap() -> usize {
    std::env::var("BLOWUPLAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

/// Run one subcommand; artifacts land in `cfg.out_dir`.
pub fn run_subcommand(sub: Subcommand, cfg: &RunConfig) -> Result<()> {
    match sub {
        Subcommand::Profiles => run_profiles(cfg),
        Subcommand::Ansatz => run_ansatz(cfg),
        Subcommand::Residual => run_residual(cfg),
        Subcommand::Nonlocal => run_nonlocal(cfg),
        Subcommand::Abel => run_abel(cfg),
        Subcommand::Simulate => run_simulate(cfg),
        Subcommand::Report => run_report(cfg),
    }
}

fn default_path(p: &BlowupParams) -> Result<ModulationPath> {
    let times: Vec<f64> = (0..256)
        .map(|i| p.t_end * 0.999 * i as f64 / 255.0)
        .collect();
    ModulationPath::zero(p.clone(), times)
}

// ---------------------------------------------------------------------------
// profiles
// ---------------------------------------------------------------------------

fn run_profiles(cfg: &RunConfig) -> Result<()> {
    let dir = &cfg.out_dir;
    let n = cfg.grid_n;
    let y_max = cfg.y_max;

    let ys: Vec<f64> = (0..=n).map(|i| y_max * i as f64 / n as f64).collect();
    let w: Vec<_> = ys.iter().map(|&y| profiles::bubble_w(y)).collect::<Result<_>>()?;
    let z0: Vec<_> = ys.iter().map(|&y| profiles::kernel_z0(y)).collect::<Result<_>>()?;
    let j: Vec<_> = ys
        .iter()
        .map(|&y| profiles::corrector_j(y, JMethod::Ode).map(|e| e.sample))
        .collect::<Result<_>>()?;
    write_file(dir, "w.csv", &report::profile_csv(&w))?;
    write_file(dir, "z0.csv", &report::profile_csv(&z0))?;
    write_file(dir, "j.csv", &report::profile_csv(&j))?;

    let pair = profiles::negative_eigenpair(&RadialGrid::uniform(y_max.max(30.0), n.max(4000))?)?;
    write_file(dir, "zminus.csv", &report::snapshot_csv(&pair.z_minus))?;

    // discrete residual report
    let mut rep = String::new();
    let _ = writeln!(rep, "lambda_minus={}", report::fmt_f64(pair.lambda_minus));
    let _ = writeln!(rep, "gap_to_next={}", report::fmt_f64(pair.gap_to_next));
    for grids in [2000, 4000] {
        let h = 50.0 / grids as f64;
        let mut sup_w = 0.0_f64;
        let mut sup_z = 0.0_f64;
        let mut sup_j = 0.0_f64;
        for i in 1..grids {
            let y = i as f64 * h;
            let lap = |f: &dyn Fn(f64) -> f64| {
                (f(y + h) - 2.0 * f(y) + f(y - h)) / (h * h) + (f(y + h) - f(y - h)) / (h * y)
            };
            let wv = |x: f64| profiles::bubble_w(x).expect("y >= 0").value;
            let zv = |x: f64| profiles::kernel_z0(x).expect("y >= 0").value;
            let jv =
                |x: f64| profiles::corrector_j(x, JMethod::Ode).expect("y >= 0").sample.value;
            sup_w = sup_w.max((lap(&wv) + wv(y).powi(5)).abs());
            sup_z = sup_z.max((lap(&zv) + 15.0 / ((1.0 + y * y) * (1.0 + y * y)) * zv(y)).abs());
            let drift = 0.5 * y * profiles::bubble_w(y)?.derivative + 0.25 * wv(y);
            sup_j = sup_j
                .max((lap(&jv) + 15.0 / ((1.0 + y * y) * (1.0 + y * y)) * jv(y) + drift).abs());
        }
        let _ = writeln!(rep, "n={grids} residual_w={sup_w:.6e} residual_z0={sup_z:.6e} residual_j={sup_j:.6e}");
    }
    for k in 1..=4u32 {
        let m = move |z: f64| profiles::outer_profile_m(k, cfg.params.big_a, z).expect("z > 0");
        let grid = RadialGrid::uniform_from(1.0, 5.0, 1000)?;
        let res = profiles::eigen_residual(&m, 0.25 - k as f64, &grid, FdOrder::Four)?;
        let _ = writeln!(rep, "eigen_residual_k{k}={:.6e}", res.value);
    }
    write_file(dir, "residual_report.txt", &rep)?;

    let svg = report::emit_plot(
        &[
            Series {
                name: "w".into(),
                xs: ys.clone(),
                ys: w.iter().map(|s| s.value).collect(),
            },
            Series {
                name: "Z0".into(),
                xs: ys.clone(),
                ys: z0.iter().map(|s| s.value).collect(),
            },
            Series {
                name: "J".into(),
                xs: ys.clone(),
                ys: j.iter().map(|s| s.value).collect(),
            },
        ],
        &PlotStyle {
            title: "radial profiles".into(),
            ..PlotStyle::default()
        },
    )?;
    write_file(dir, "profiles.svg", &svg)
}

// ---------------------------------------------------------------------------
// ansatz
// ---------------------------------------------------------------------------

fn run_ansatz(cfg: &RunConfig) -> Result<()> {
    let dir = &cfg.out_dir;
    let p = &cfg.params;
    let mut rep = String::new();
    for frac in [0.5, 0.9, 0.99] {
        let t = p.t_end * frac;
        match matching_report(t, p) {
            Ok(m) => {
                let _ = writeln!(
                    rep,
                    "t={t:.6e} cm1_inner={:.16e} cm1_outer={:.16e} c1_inner={:.16e} c1_outer={:.16e} mid_gap_rel={:.6e}",
                    m.inner_coeffs.0, m.outer_coeffs.0, m.inner_coeffs.1, m.outer_coeffs.1, m.mid_gap_rel
                );
            }
            Err(e) => {
                let _ = writeln!(rep, "t={t:.6e} matching_error={e}");
            }
        }
    }
    write_file(dir, "matching_report.txt", &rep)?;

    let mut con = String::new();
    for c in p.check_constraints() {
        let _ = writeln!(
            con,
            "{},{},{},{}",
            c.id,
            c.satisfied,
            report::fmt_f64(c.margin),
            c.text
        );
    }
    write_file(dir, "constraints.csv", &con)?;

    // U1 slice at t = 0
    let ansatz = Ansatz::new(default_path(p)?);
    let x_max = 2.5 * p.r2 * p.t_end.sqrt();
    let xs: Vec<f64> = (0..=cfg.grid_n)
        .map(|i| x_max * i as f64 / cfg.grid_n as f64)
        .collect();
    let vals: Vec<f64> = xs.iter().map(|&x| ansatz.u1(x, 0.0).value).collect();
    write_file(dir, "u1_t0.csv", &report::xy_csv("x,u1", &xs, &vals))?;
    let svg = report::emit_plot(
        &[Series {
            name: "U1(x, 0)".into(),
            xs,
            ys: vals,
        }],
        &PlotStyle {
            title: "glued first approximation".into(),
            ..PlotStyle::default()
        },
    )?;
    write_file(dir, "u1_t0.svg", &svg)
}

// ---------------------------------------------------------------------------
// residual
// ---------------------------------------------------------------------------

/// SplitMix64: tiny deterministic generator for sample scattering.
struct SplitMix64(u64);

impl SplitMix64 {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z = z ^ (z >> 31);
        (z >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn run_residual(cfg: &RunConfig) -> Result<()> {
    let dir = &cfg.out_dir;
    let p = &cfg.params;
    let ansatz = Ansatz::new(default_path(p)?);
    let mut out = String::from("t,ratio_sup,arg_x\n");
    for frac in [0.2, 0.4, 0.6] {
        let t = p.t_end * frac;
        let tau: f64 = p.t_end - t;
        let grid = RadialGrid::geometric(ansatz.path.mu0(t) / 50.0, 1.04, 1.2 * tau.sqrt())?;
        let probe = residual::bound_probe_g4(t, &ansatz, &grid)?;
        let _ = writeln!(
            out,
            "{},{},{}",
            report::fmt_f64(t),
            report::fmt_f64(probe.ratio_sup),
            report::fmt_f64(probe.arg_x)
        );
    }
    write_file(dir, "g4_probe.csv", &out)?;

    // weighted-norm reports on a seeded random sample field
    let mut rng = SplitMix64(cfg.seed);
    let ts: Vec<f64> = (1..20).map(|i| p.t_end * i as f64 / 25.0).collect();
    let xs: Vec<f64> = (0..160).map(|i| i as f64 * 2e-4 * p.t_end.sqrt()).collect();
    let mut values = Vec::with_capacity(ts.len() * xs.len());
    for _ in 0..ts.len() * xs.len() {
        values.push(rng.next_f64() * 2.0 - 1.0);
    }
    let samples = SpaceTimeSamples {
        xs,
        ts,
        values,
        gradient: None,
    };
    let mut norms = String::from("norm_id,value,arg_x,arg_t\n");
    let rep = residual::norm_outer_rhs(&samples, p)?;
    norms.push_str(&rep.csv_line());
    norms.push('\n');
    write_file(dir, "norms.csv", &norms)
}

// ---------------------------------------------------------------------------
// nonlocal
// ---------------------------------------------------------------------------

fn run_nonlocal(cfg: &RunConfig) -> Result<()> {
    let dir = &cfg.out_dir;
    let p = &cfg.params;

    // closed forms vs quadrature for one block
    let kappa = 1.0;
    let mut blocks = String::from("t,closed,quadrature\n");
    for i in 1..=20 {
        let t = 2.0 * p.t_end * i as f64 / 20.0;
        let closed = nonlocal::block_half_integral(kappa, t)?;
        let quad = crate::numerics::gauss_panels(
            &|u: f64| 2.0 * nonlocal::block_value(kappa, t - u * u).expect("t >= 0"),
            0.0,
            t.sqrt(),
            32,
        );
        let _ = writeln!(
            blocks,
            "{},{},{}",
            report::fmt_f64(t),
            report::fmt_f64(closed),
            report::fmt_f64(quad)
        );
    }
    write_file(dir, "blocks.csv", &blocks)?;

    // Υ vanishing orders
    let mut ups = String::from("k,i,slope,condition\n");
    let k = p.k as usize;
    let kappas: Vec<f64> = (1..=k + 1).map(|j| j as f64 * p.t_end).collect();
    for i in 1..=k {
        let sol = nonlocal::solve_vanishing(p.t_end, &kappas, i)?;
        let slope = nonlocal::vanishing_order_fit_auto(&sol.combo, p.t_end)?;
        let _ = writeln!(
            ups,
            "{},{},{},{}",
            k,
            i,
            report::fmt_f64(slope),
            report::fmt_f64(sol.condition)
        );
    }
    write_file(dir, "upsilon_orders.csv", &ups)?;

    // appendix bound probes, one worker per family
    let horizons = [0.1, 0.01];
    let families = [RhsFamily::Rhs1, RhsFamily::Rhs2, RhsFamily::Rhs3];
    let cap = worker_cap().max(1);
    let mut results: Vec<Option<Result<nonlocal::AppendixProbe>>> =
        (0..families.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for chunk in families.chunks(cap.max(1)) {
            for fam in chunk {
                let fam = *fam;
                let p = p.clone();
                handles.push((
                    fam,
                    scope.spawn(move || nonlocal::bound_probe_appendix(fam, &p, &horizons)),
                ));
            }
        }
        for (fam, h) in handles {
            let idx = families.iter().position(|f| *f == fam).expect("member");
            results[idx] = Some(h.join().expect("probe thread"));
        }
    });
    let mut probes = String::from("family,bound_id,ratio_sup,fitted_power,claimed_power\n");
    for r in results.into_iter().flatten() {
        let probe = r?;
        for f in &probe.fits {
            probes.push_str(&f.csv_line(probe.family));
            probes.push('\n');
        }
    }
    write_file(dir, "appendix_probes.csv", &probes)
}

// ---------------------------------------------------------------------------
// abel
// ---------------------------------------------------------------------------

fn sin2_times(t_end: f64, n: usize) -> Vec<f64> {
    let mut times: Vec<f64> = (0..=n)
        .map(|j| {
            let s = (0.5 * std::f64::consts::PI * j as f64 / n as f64).sin();
            t_end * s * s
        })
        .collect();
    for m in 1..=11 {
        times.push(t_end * (1.0 - 2.0_f64.powi(-m)));
    }
    times.sort_by(|a, b| a.partial_cmp(b).expect("NaN time"));
    times.dedup_by(|a, b| (*a - *b).abs() < 1e-13 * t_end);
    times
}

fn run_abel(cfg: &RunConfig) -> Result<()> {
    let dir = &cfg.out_dir;
    let p = &cfg.params;

    // inversion demo: h = 2√t recovers α ≡ 1
    let times: Vec<f64> = (0..=800)
        .map(|j| {
            let f = j as f64 / 800.0;
            p.t_end * f * f
        })
        .collect();
    let h = TimeSeries::from_fn(times, InterpKind::Linear, |t| 2.0 * t.sqrt())?;
    let sol = abel::abel_solve(&h)?;
    let dev = sol
        .alpha
        .values()
        .iter()
        .fold(0.0_f64, |m, v| m.max((v - 1.0).abs()));
    write_file(
        dir,
        "abel_demo.csv",
        &report::xy_csv("t,alpha", sol.alpha.times(), sol.alpha.values()),
    )?;
    let mut rep = String::new();
    let _ = writeln!(rep, "sup_deviation_from_one={}", report::fmt_f64(dev));
    let _ = writeln!(
        rep,
        "forward_residual={}",
        report::fmt_f64(sol.forward_residual)
    );

    // reduced equation on a smooth generic h
    let t_end = p.t_end;
    let hts = sin2_times(t_end, 2400);
    let hgen = TimeSeries::from_fn(hts, InterpKind::Cubic, |t| {
        0.2 + (3.0 * t / t_end).sin() * 0.5 + 0.8 * (t / t_end) * (t / t_end)
    })?;
    let path = default_path(p)?;
    let red = abel::reduced_solve(&hgen, &path, None)?;
    let _ = writeln!(
        rep,
        "reduced_alpha_order={}",
        report::fmt_f64(red.fitted_alpha_order)
    );
    let _ = writeln!(
        rep,
        "reduced_forward_residual={}",
        report::fmt_f64(red.forward_residual)
    );
    write_file(dir, "abel_report.txt", &rep)?;
    write_file(dir, "reduced.csv", &red.to_csv())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn run_simulate(cfg: &RunConfig) -> Result<()> {
    let dir = &cfg.out_dir;
    let p = &cfg.params;
    let (u0, controls) = match cfg.sim_initial {
        SimInitial::Gaussian { amp } => {
            let grid = RadialGrid::geometric(0.01, 1.03, 8.0)?;
            let u0 = FieldSnapshot::from_fn(&grid, |r| amp * (-r * r).exp())?;
            let controls = SimControls {
                blowup_threshold: cfg.sim_threshold,
                decay_threshold: cfg.sim_decay,
                horizon: cfg.sim_horizon,
                max_steps: cfg.sim_max_steps,
                ..SimControls::default()
            };
            (u0, controls)
        }
        SimInitial::Ansatz => {
            let ansatz = Ansatz::new(default_path(p)?);
            let x_max = 10.0 * p.t_end.sqrt();
            let mu0 = ansatz.path.mu0(0.0);
            let grid = RadialGrid::geometric(mu0 / 8.0, 1.04, x_max)?;
            let u0 = FieldSnapshot::from_fn(&grid, |r| ansatz.u1(r, 0.0).value)?;
            let controls = SimControls {
                blowup_threshold: cfg.sim_threshold,
                decay_threshold: cfg.sim_decay,
                horizon: cfg.sim_horizon.min(p.t_end),
                max_steps: cfg.sim_max_steps,
                boundary: Boundary::GluedOuter(Box::new(ansatz)),
                ..SimControls::default()
            };
            (u0, controls)
        }
    };
    let traj = simulate::run(&u0, &controls)?;
    write_file(dir, "trajectory.csv", &traj.csv())?;

    let mut rep = String::new();
    let _ = writeln!(rep, "termination={}", traj.termination.name());
    let _ = writeln!(rep, "steps={}", traj.steps);
    if traj.termination == simulate::Termination::BlowupThreshold {
        match simulate::fit_rate(&traj) {
            Ok(fit) => {
                rep.push_str(&fit.report());
                // rate-fit overlay: data plus the fitted power law
                let window: Vec<&simulate::TrajRecord> = traj
                    .records
                    .iter()
                    .filter(|r| fit.t_star > r.t && r.sup >= traj.records[0].sup)
                    .collect();
                let xs: Vec<f64> = window.iter().map(|r| fit.t_star - r.t).collect();
                let ys: Vec<f64> = window.iter().map(|r| r.sup).collect();
                let c = ys[0] * xs[0].powf(fit.exponent);
                let fitted: Vec<f64> = xs.iter().map(|&x| c * x.powf(-fit.exponent)).collect();
                let svg = report::emit_plot(
                    &[
                        Series {
                            name: "sup norm".into(),
                            xs: xs.clone(),
                            ys,
                        },
                        Series {
                            name: "fitted power law".into(),
                            xs,
                            ys: fitted,
                        },
                    ],
                    &PlotStyle {
                        axes: Axes::LogLog,
                        title: "blow-up rate".into(),
                        annotate_slope: true,
                        ..PlotStyle::default()
                    },
                )?;
                write_file(dir, "rate_fit.svg", &svg)?;
            }
            Err(e) => {
                let _ = writeln!(rep, "rate_fit_error={e}");
            }
        }
    }
    write_file(dir, "rate_fit.txt", &rep)
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

fn run_report(cfg: &RunConfig) -> Result<()> {
    let dir = &cfg.out_dir;
    if !dir.exists() {
        return Err(Error::invalid(format!(
            "report: run directory {} does not exist",
            dir.display()
        )));
    }
    let mut summary = String::from("# combined run summary\n");
    let mut entries: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .collect();
    entries.sort();
    for path in entries {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("")
            .to_string();
        if name == "summary.txt" || name.is_empty() {
            continue;
        }
        let meta = fs::metadata(&path)?;
        let _ = writeln!(summary, "{name}: {} bytes", meta.len());
        if name.ends_with(".txt") {
            if let Ok(text) = fs::read_to_string(&path) {
                for line in text.lines().take(12) {
                    let _ = writeln!(summary, "    {line}");
                }
            }
        }
        if name.ends_with(".svg") {
            if let Ok(text) = fs::read_to_string(&path) {
                let ok = report::xml_well_formed(&text);
                let _ = writeln!(summary, "    svg_well_formed={ok}");
            }
        }
    }
    write_file(dir, "summary.txt", &summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn abel_subcommand_end_to_end() {
        let tmp = std::env::temp_dir().join(format!("blowup-lab-test-{}", std::process::id()));
        let cfg_text = format!("T=0.05\nout_dir={}\n", tmp.display());
        let mut cfg = parse_config(&cfg_text).unwrap();
        cfg.out_dir = tmp.clone();
        run_subcommand(Subcommand::Abel, &cfg).unwrap();
        let report = std::fs::read_to_string(tmp.join("abel_report.txt")).unwrap();
        let dev: f64 = report
            .lines()
            .find(|l| l.starts_with("sup_deviation_from_one="))
            .and_then(|l| l.split('=').nth(1))
            .and_then(|v| v.parse().ok())
            .unwrap();
        assert!(dev < 1e-3, "alpha deviation {dev}");
        std::fs::remove_dir_all(&tmp).ok();
    }
}

//! Command implementations. Each writes a CSV with a fixed header; numerical
//! failures mark individual rows "failed" (with diagnostics on stderr) and
//! are reported through the returned flag rather than aborting the run.

use std::io::{self, Write};

use ztrace_core::{
    build_potential, c_sc_analytic, classical_z_euclidean, equilibrium_contributions,
    find_librations, fit_frequency, grid_spectrum, quartic_uv_classical_z, quartic_uv_exact_z,
    quartic_uv_levels, quartic_uv_z_higher, quartic_uv_z_quadratic, sc_harmonic_z, sc_trace_z,
    spin_exact_z, spin_levels, spin_z_sc, t_grid, thermo_from_z, u_sc_analytic, z_from_levels,
    AmplitudeMode, Error, LibrationOpts, OrbitContribution, OrbitKind, Potential, SystemKind,
    ZMethod, ZResult, DEFAULT_REL_STEP,
};

use crate::config::RunConfig;

pub enum Model {
    Poly { pot: Potential, omega_ref: f64 },
    Quartic { alpha: f64, omega: f64 },
    Spin { spin: f64, omega: f64 },
}

impl Model {
    fn omega_ref(&self) -> f64 {
        match self {
            Model::Poly { omega_ref, .. } => *omega_ref,
            Model::Quartic { omega, .. } | Model::Spin { omega, .. } => *omega,
        }
    }
}

pub fn build_model(cfg: &RunConfig) -> Result<Model, String> {
    match &cfg.spec.kind {
        SystemKind::PolynomialWell { .. } | SystemKind::DoubleWell { .. } => {
            let pot = build_potential(&cfg.spec).map_err(|e| e.to_string())?;
            let omega_ref = fit_frequency(&pot).map_err(|e| e.to_string())?;
            Ok(Model::Poly { pot, omega_ref })
        }
        SystemKind::QuarticUv { alpha, omega } => {
            Ok(Model::Quartic { alpha: *alpha, omega: *omega })
        }
        SystemKind::SpinField { spin, omega } => Ok(Model::Spin { spin: *spin, omega: *omega }),
    }
}

fn fmt(x: f64) -> String {
    format!("{:.16e}", x)
}

fn cell(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

fn z_eval(
    model: &Model,
    method: ZMethod,
    hbar: f64,
    beta: f64,
    opts: &LibrationOpts,
    levels: Option<&ztrace_core::Result<Vec<f64>>>,
) -> ztrace_core::Result<ZResult> {
    match (model, method) {
        (Model::Poly { .. }, ZMethod::Exact) => {
            let levels = levels
                .ok_or_else(|| Error::Domain("level set not prepared".into()))?
                .as_ref()
                .map_err(|e| e.clone())?;
            z_from_levels(levels, beta, false)
        }
        (Model::Poly { pot, .. }, ZMethod::Classical) => classical_z_euclidean(pot, hbar, beta),
        (Model::Poly { pot, .. }, ZMethod::ScHarmonic) => sc_harmonic_z(pot, hbar, beta),
        (Model::Poly { pot, .. }, ZMethod::ScTrace) => sc_trace_z(pot, hbar, beta, opts),
        (Model::Quartic { alpha, omega }, ZMethod::Exact) => {
            quartic_uv_exact_z(hbar, *omega, *alpha, beta)
        }
        (Model::Quartic { alpha, omega }, ZMethod::Classical) => {
            quartic_uv_classical_z(hbar, *omega, *alpha, beta)
        }
        (Model::Quartic { alpha, omega }, ZMethod::ScHarmonic) => {
            quartic_uv_z_quadratic(hbar, *omega, *alpha, beta)
                .map(|qq| ZResult::from_ln(ZMethod::ScHarmonic, beta, qq.ln_z))
        }
        (Model::Quartic { alpha, omega }, ZMethod::ScHigher) => {
            quartic_uv_z_higher(hbar, *omega, *alpha, beta)
        }
        (Model::Spin { spin, omega }, ZMethod::Exact) => {
            spin_exact_z(hbar, *omega, *spin, beta)
        }
        (Model::Spin { spin, omega }, ZMethod::ScTrace) => spin_z_sc(hbar, *omega, *spin, beta),
        _ => Err(Error::UnsupportedVariant {
            op: "partition function",
            variant: method.label(),
        }),
    }
}

/// Enough levels that the Boltzmann tail at the hottest sweep point falls
/// below the summation cutoff, within a hard cap.
fn level_budget(cfg: &RunConfig, quantum: f64) -> usize {
    let needed = (37.0 * cfg.spec.k_b * cfg.sweep.t_max / quantum).ceil() as usize + 8;
    needed.max(cfg.spectrum.levels).min(256)
}

pub fn run_sweep(cfg: &RunConfig, model: &Model, out: &mut dyn Write) -> io::Result<bool> {
    writeln!(out, "T,T_star,method,Z,f,u,s,c,Z_harmonic,Z_tunneling,status")?;
    let (hbar, k_b) = (cfg.spec.hbar, cfg.spec.k_b);
    let quantum = hbar * model.omega_ref();
    let ts = t_grid(cfg.sweep.t_min, cfg.sweep.t_max, cfg.sweep.points, cfg.sweep.log_scale)
        .expect("sweep grid was validated at parse time");

    // the level set is shared across every exact row of the sweep
    let exact_levels: Option<ztrace_core::Result<Vec<f64>>> = match model {
        Model::Poly { pot, .. } if cfg.methods.contains(&ZMethod::Exact) => Some(
            grid_spectrum(pot, hbar, level_budget(cfg, quantum), cfg.spectrum.accuracy)
                .map(|sp| sp.levels),
        ),
        _ => None,
    };
    if let Some(Err(e)) = &exact_levels {
        eprintln!("sweep: level computation failed, exact rows unavailable: {e}");
    }

    let mut all_ok = true;
    for &t in &ts {
        let beta = 1.0 / (k_b * t);
        for &method in &cfg.methods {
            let center = z_eval(model, method, hbar, beta, &cfg.orbit_opts, exact_levels.as_ref());
            let (mut z, mut f, mut u, mut s, mut c) = (None, None, None, None, None);
            let (mut zh, mut zt) = (None, None);
            match center {
                Err(e) => eprintln!("sweep: T = {t}, {}: {e}", method.label()),
                Ok(zr) => {
                    z = Some(zr.z);
                    f = Some(-zr.ln_z / beta);
                    if method == ZMethod::ScTrace {
                        if let Some(b) = &zr.breakdown {
                            zh = Some(b.harmonic);
                            zt = Some(b.tunneling);
                        }
                    }
                    let uc = match (model, method) {
                        // orbit sets are matched across neighboring beta
                        // analytically, avoiding finite differences through
                        // orbit births
                        (Model::Poly { pot, .. }, ZMethod::ScTrace) => {
                            u_sc_analytic(pot, hbar, beta, Some(&cfg.orbit_opts), DEFAULT_REL_STEP)
                                .and_then(|u| {
                                    c_sc_analytic(
                                        pot,
                                        hbar,
                                        k_b,
                                        beta,
                                        Some(&cfg.orbit_opts),
                                        DEFAULT_REL_STEP,
                                    )
                                    .map(|c| (u, c))
                                })
                        }
                        _ => {
                            let mut src = |b: f64| {
                                z_eval(model, method, hbar, b, &cfg.orbit_opts, exact_levels.as_ref())
                            };
                            thermo_from_z(&mut src, k_b, t, DEFAULT_REL_STEP).map(|p| (p.u, p.c))
                        }
                    };
                    match uc {
                        Err(e) => eprintln!("sweep: T = {t}, {}: {e}", method.label()),
                        Ok((uv, cv)) => {
                            u = Some(uv);
                            c = Some(cv);
                            s = Some(k_b * beta * (uv - f.unwrap()));
                        }
                    }
                }
            }
            let ok = z.is_some() && u.is_some();
            all_ok &= ok;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                fmt(t),
                fmt(k_b * t / quantum),
                method.label(),
                cell(z),
                cell(f),
                cell(u),
                cell(s),
                cell(c),
                cell(zh),
                cell(zt),
                if ok { "ok" } else { "failed" },
            )?;
        }
    }
    Ok(all_ok)
}

fn mode_label(mode: &AmplitudeMode) -> &'static str {
    match mode {
        AmplitudeMode::Literal => "literal",
        AmplitudeMode::Floored(_) => "floored",
    }
}

pub fn run_orbits(cfg: &RunConfig, model: &Model, beta: f64, out: &mut dyn Write) -> io::Result<bool> {
    writeln!(out, "kind,well,n,E_shell,S_bar,trM,term,mode,status")?;
    let hbar = cfg.spec.hbar;
    let contributions: ztrace_core::Result<Vec<OrbitContribution>> = match model {
        Model::Poly { pot, .. } => equilibrium_contributions(pot, hbar, beta).and_then(|mut cs| {
            cs.extend(find_librations(pot, hbar, hbar * beta, &cfg.orbit_opts)?);
            Ok(cs)
        }),
        Model::Quartic { alpha, omega } => quartic_uv_z_quadratic(hbar, *omega, *alpha, beta)
            .map(|qq| {
                let h0 = hbar * omega * alpha * alpha;
                let x = 2.0 * alpha * hbar * omega * beta;
                vec![OrbitContribution {
                    kind: OrbitKind::Equilibrium,
                    well: 0,
                    n: 0,
                    e_shell: -h0,
                    h0,
                    s_bar: hbar * beta * h0,
                    tr_m: 2.0 * x.cosh(),
                    tr_m_eff: 2.0 * x.cosh(),
                    ln_term: qq.ln_z,
                    term: qq.z,
                }]
            }),
        Model::Spin { spin, omega } => spin_z_sc(hbar, *omega, *spin, beta)
            .map(|zr| zr.breakdown.map(|b| b.contributions).unwrap_or_default()),
    };
    let contributions = match contributions {
        Ok(cs) => cs,
        Err(e) => {
            eprintln!("orbits: beta = {beta}: {e}");
            return Ok(false);
        }
    };
    let mut all_ok = true;
    for c in &contributions {
        let libration = c.kind == OrbitKind::Libration;
        let ok = c.term.is_finite();
        all_ok &= ok;
        if !ok {
            eprintln!(
                "orbits: beta = {beta}: singular amplitude for well {} n {} (trM = {})",
                c.well, c.n, c.tr_m
            );
        }
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            if libration { "libration" } else { "trivial" },
            c.well,
            if libration { c.n.to_string() } else { String::new() },
            if libration { fmt(c.e_shell) } else { String::new() },
            fmt(c.s_bar),
            fmt(c.tr_m),
            if ok { fmt(c.term) } else { String::new() },
            if libration { mode_label(&cfg.orbit_opts.amplitude) } else { "" },
            if ok { "ok" } else { "failed" },
        )?;
    }
    Ok(all_ok)
}

pub fn run_spectrum(cfg: &RunConfig, model: &Model, count: usize, out: &mut dyn Write) -> io::Result<bool> {
    writeln!(out, "n,energy,accuracy")?;
    let hbar = cfg.spec.hbar;
    let (levels, accuracy) = match model {
        Model::Poly { pot, .. } => {
            match grid_spectrum(pot, hbar, count, cfg.spectrum.accuracy) {
                Ok(sp) => (sp.levels, sp.accuracy),
                Err(e) => {
                    eprintln!("spectrum: {e}");
                    return Ok(false);
                }
            }
        }
        Model::Quartic { alpha, omega } => {
            let ls = quartic_uv_levels(hbar, *omega, *alpha, count);
            let n = ls.len();
            (ls, vec![0.0; n])
        }
        Model::Spin { spin, omega } => {
            let mut ls = spin_levels(hbar, *omega, *spin);
            ls.truncate(count);
            let n = ls.len();
            (ls, vec![0.0; n])
        }
    };
    for (n, (e, a)) in levels.iter().zip(&accuracy).enumerate() {
        writeln!(out, "{},{},{}", n, fmt(*e), fmt(*a))?;
    }
    Ok(true)
}

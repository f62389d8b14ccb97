//! Thermodynamic observables from any partition-function source. Internal
//! energy and heat capacity come from logarithmic-in-beta finite differences
//! of ln Z, verified by step halving; free energy and entropy follow in
//! closed form.

use crate::error::{Error, Result};
use crate::semiclassical::ZResult;

/// Observables at one temperature. `s` satisfies f = u - T s by construction.
#[derive(Debug, Clone, Copy)]
pub struct ThermoPoint {
    pub t: f64,
    pub beta: f64,
    pub z: f64,
    pub ln_z: f64,
    pub f: f64,
    pub u: f64,
    pub s: f64,
    pub c: f64,
}

/// The same observables scaled by a reference quantum: temperatures and
/// energies in units of hbar * omega_ref, entropy and heat capacity in units
/// of k_B.
#[derive(Debug, Clone, Copy)]
pub struct ReducedPoint {
    pub t_star: f64,
    pub f_star: f64,
    pub u_star: f64,
    pub s_star: f64,
    pub c_star: f64,
}

pub fn reduce(p: &ThermoPoint, hbar: f64, omega_ref: f64, k_b: f64) -> ReducedPoint {
    let quantum = hbar * omega_ref;
    ReducedPoint {
        t_star: k_b * p.t / quantum,
        f_star: p.f / quantum,
        u_star: p.u / quantum,
        s_star: p.s / k_b,
        c_star: p.c / k_b,
    }
}

pub const DEFAULT_REL_STEP: f64 = 1e-3;

/// Observables at temperature `t` from a partition-function evaluator.
///
/// With x = ln beta, u = -(d ln Z / dx) / beta and
/// c = k_B (d^2 ln Z / dx^2 - d ln Z / dx); both derivatives come from one
/// five-point stencil of half-width 2 * rel_step in x, accurate to fourth
/// order. The stencil is repeated with halved steps until two consecutive
/// estimates agree to 1e-6; disagreement after seven rounds is reported as
/// non-convergence rather than silently accepted.
pub fn thermo_from_z<F>(z_of_beta: &mut F, k_b: f64, t: f64, rel_step: f64) -> Result<ThermoPoint>
where
    F: FnMut(f64) -> Result<ZResult>,
{
    if !(t > 0.0 && k_b > 0.0) || !(rel_step > 0.0 && rel_step <= 0.05) {
        return Err(Error::Domain(format!(
            "need t > 0, k_b > 0, 0 < rel_step <= 0.05; got {t}, {k_b}, {rel_step}"
        )));
    }
    let beta = 1.0 / (k_b * t);
    let center = z_of_beta(beta)?;
    let f0 = center.ln_z;
    let x = beta.ln();
    let mut h = rel_step;
    let mut prev: Option<(f64, f64)> = None;
    for _ in 0..7 {
        let fp1 = z_of_beta((x + h).exp())?.ln_z;
        let fm1 = z_of_beta((x - h).exp())?.ln_z;
        let fp2 = z_of_beta((x + 2.0 * h).exp())?.ln_z;
        let fm2 = z_of_beta((x - 2.0 * h).exp())?.ln_z;
        let d1 = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
        let d2 = (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
        let u = -d1 / beta;
        let c = k_b * (d2 - d1);
        if let Some((pu, pc)) = prev {
            // rounding of ln Z enters the stencils as eps * |ln Z| / h for
            // the slope and / h^2 for the curvature; below these floors a
            // disagreement carries no information
            let spread = f0.abs().max(fp2.abs()).max(fm2.abs()).max(1.0) * f64::EPSILON;
            let floor_u = 8.0 * spread / (h * beta);
            let floor_c = 64.0 * k_b * spread / (h * h);
            if (u - pu).abs() <= (1e-6 * u.abs().max(1.0)).max(floor_u)
                && (c - pc).abs() <= (1e-6 * c.abs().max(1.0)).max(floor_c)
            {
                let f = -f0 / beta;
                let s = k_b * beta * (u - f);
                return Ok(ThermoPoint { t, beta, z: center.z, ln_z: f0, f, u, s, c });
            }
        }
        prev = Some((u, c));
        h *= 0.5;
    }
    let (pu, _) = prev.unwrap();
    Err(Error::NonConvergence { what: "thermodynamic derivative refinement", prev: pu, last: pu })
}

/// Temperature grid from `t_min` to `t_max` inclusive, spaced linearly or
/// geometrically.
pub fn t_grid(t_min: f64, t_max: f64, points: usize, log_scale: bool) -> Result<Vec<f64>> {
    if !(t_min > 0.0) || !(t_max >= t_min) || points == 0 {
        return Err(Error::Domain(format!(
            "need 0 < t_min <= t_max and points >= 1; got {t_min}, {t_max}, {points}"
        )));
    }
    if points == 1 {
        return Ok(vec![t_min]);
    }
    let n = (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let frac = i as f64 / n;
            if log_scale {
                (t_min.ln() + frac * (t_max / t_min).ln()).exp()
            } else {
                t_min + frac * (t_max - t_min)
            }
        })
        .collect())
}

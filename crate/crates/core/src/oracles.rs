//! Reference computations: numerically converged level sets, Boltzmann sums
//! over levels, and classical phase-space integrals. These provide the
//! standards the trace approximations are measured against.

use crate::dynamics::GL16;
use crate::error::{Error, Result};
use crate::model::Potential;
use crate::semiclassical::{ZMethod, ZResult};

/// Discretization on which a spectrum was converged.
#[derive(Debug, Clone, Copy)]
pub struct GridInfo {
    pub half_width: f64,
    pub points: usize,
    /// Ground-state amplitude at the domain edge relative to its peak.
    pub boundary_amplitude: f64,
}

/// Converged eigenvalues with per-level accuracy estimates.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub levels: Vec<f64>,
    /// Estimated absolute error of each level (difference of the last two
    /// grid refinements, scaled by the extrapolation).
    pub accuracy: Vec<f64>,
    /// None for closed-form spectra.
    pub grid: Option<GridInfo>,
}

/// Number of eigenvalues of the discretized operator lying below `x`,
/// counted through the signs of the LDL^T pivots of T - x I.
fn count_below(diag: &[f64], off: f64, x: f64) -> usize {
    let off2 = off * off;
    let mut count = 0;
    let mut d = 1.0;
    for (i, &a) in diag.iter().enumerate() {
        d = (a - x) - if i == 0 { 0.0 } else { off2 / d };
        if d == 0.0 {
            d = -1e-300;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn tridiag_eigenvalue(diag: &[f64], off: f64, index: usize) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &a in diag {
        lo = lo.min(a);
        hi = hi.max(a);
    }
    lo -= 2.0 * off.abs();
    hi += 2.0 * off.abs();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        if count_below(diag, off, mid) >= index + 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-13 * hi.abs().max(lo.abs()).max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Lowest `count` eigenvalues of -(hbar^2/2) d^2/dq^2 + V on [-l, l] with the
/// three-point Laplacian on `points` interior nodes.
fn fd_levels(pot: &Potential, hbar: f64, l: f64, points: usize, count: usize) -> Vec<f64> {
    let h = 2.0 * l / (points as f64 + 1.0);
    let kin = hbar * hbar / (h * h);
    let diag: Vec<f64> =
        (0..points).map(|i| kin + pot.v(-l + (i + 1) as f64 * h)).collect();
    let off = -0.5 * kin;
    (0..count).map(|j| tridiag_eigenvalue(&diag, off, j)).collect()
}

fn thomas_solve(diag: &[f64], off: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off / diag[0];
    d[0] = b[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - off * c[i - 1];
        c[i] = off / m;
        d[i] = (b[i] - off * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Relative size of the ground state at the domain edge, from a few rounds of
/// inverse iteration with the shifted operator.
fn boundary_amplitude(pot: &Potential, hbar: f64, l: f64, points: usize, e0: f64) -> f64 {
    let h = 2.0 * l / (points as f64 + 1.0);
    let kin = hbar * hbar / (h * h);
    let sigma = e0 - 1e-8 * e0.abs().max(1.0);
    let diag: Vec<f64> =
        (0..points).map(|i| kin + pot.v(-l + (i + 1) as f64 * h) - sigma).collect();
    let off = -0.5 * kin;
    let mut x = vec![1.0; points];
    for _ in 0..3 {
        x = thomas_solve(&diag, off, &x);
        let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for v in &mut x {
            *v /= peak;
        }
    }
    x[0].abs().max(x[points - 1].abs())
}

fn refine_on_domain(
    pot: &Potential,
    hbar: f64,
    count: usize,
    target: f64,
    l: f64,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    // points + 1 a power of two so each refinement halves the spacing exactly
    let mut points = (1usize << 9) - 1;
    let mut prev = fd_levels(pot, hbar, l, points, count);
    let mut prev_rich: Option<Vec<f64>> = None;
    loop {
        points = 2 * points + 1;
        let cur = fd_levels(pot, hbar, l, points, count);
        // three-point eigenvalues converge as h^2; one extrapolation step
        // removes that term, so successive extrapolations close as h^4
        let rich: Vec<f64> =
            cur.iter().zip(&prev).map(|(c, p)| (4.0 * c - p) / 3.0).collect();
        if let Some(pr) = &prev_rich {
            let acc: Vec<f64> = rich.iter().zip(pr).map(|(r, p)| (r - p).abs()).collect();
            if acc.iter().zip(&rich).all(|(a, e)| *a <= target * e.abs().max(1.0)) {
                return Ok((rich, acc, points));
            }
        }
        if points >= (1 << 16) - 1 {
            return Err(Error::NonConvergence {
                what: "grid spectrum refinement",
                prev: prev_rich.map_or(prev[count - 1], |r| r[count - 1]),
                last: rich[count - 1],
            });
        }
        prev = cur;
        prev_rich = Some(rich);
    }
}

/// Lowest `count` levels of the polynomial system, converged to the mixed
/// absolute/relative `target` by grid refinement with extrapolation. The
/// domain half-width grows until the potential at the edges clears the top
/// requested level by a fixed margin and the ground state has decayed below
/// 1e-12 there.
pub fn grid_spectrum(
    pot: &Potential,
    hbar: f64,
    count: usize,
    target: f64,
) -> Result<SpectrumResult> {
    if count == 0 || !(target > 0.0) || !(hbar > 0.0) {
        return Err(Error::Domain(format!(
            "need count >= 1, target > 0, hbar > 0; got {count}, {target}, {hbar}"
        )));
    }
    let crits = pot.critical_points();
    let q_scale = crits.iter().fold(1.0f64, |m, q| m.max(q.abs()));
    let mut l = 2.0 * q_scale + 2.0;
    for _ in 0..40 {
        let (levels, accuracy, points) = refine_on_domain(pot, hbar, count, target, l)?;
        let e_top = levels[count - 1];
        if pot.v(l) < e_top + 25.0 || pot.v(-l) < e_top + 25.0 {
            l *= 1.4;
            continue;
        }
        let ba = boundary_amplitude(pot, hbar, l, points, levels[0]);
        if ba > 1e-12 {
            l *= 1.4;
            continue;
        }
        return Ok(SpectrumResult {
            levels,
            accuracy,
            grid: Some(GridInfo { half_width: l, points, boundary_amplitude: ba }),
        });
    }
    Err(Error::NonConvergence {
        what: "grid spectrum domain growth",
        prev: l / 1.4,
        last: l,
    })
}

pub fn harmonic_levels(hbar: f64, omega: f64, v0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|n| v0 + hbar * omega * (n as f64 + 0.5)).collect()
}

/// Levels hbar omega (n + alpha + 1/2)^2 of the quartic system
/// H = hbar omega (u v + alpha)^2.
pub fn quartic_uv_levels(hbar: f64, omega: f64, alpha: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|n| hbar * omega * (n as f64 + alpha + 0.5) * (n as f64 + alpha + 0.5))
        .collect()
}

/// The 2s + 1 levels -hbar omega m, m = s, s-1, ..., -s, in ascending order.
pub fn spin_levels(hbar: f64, omega: f64, spin: f64) -> Vec<f64> {
    let n = (2.0 * spin).round() as usize + 1;
    (0..n).map(|k| -hbar * omega * (spin - k as f64)).collect()
}

/// Boltzmann sum over an ascending level list, carried in the log domain.
/// `complete` marks a spectrum known in full (finite systems); for truncated
/// lists the tail term must fall below 1e-16 of the accumulated sum, else the
/// sum is reported as unconverged.
pub fn z_from_levels(levels: &[f64], beta: f64, complete: bool) -> Result<ZResult> {
    if levels.is_empty() || !(beta > 0.0) {
        return Err(Error::Domain(format!(
            "need a non-empty level list and beta > 0, got {} levels, beta = {beta}",
            levels.len()
        )));
    }
    if levels.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("level list must be ascending".into()));
    }
    let e0 = levels[0];
    let mut partial = 0.0;
    let mut converged = false;
    for &e in levels {
        let term = (-beta * (e - e0)).exp();
        if partial > 0.0 && term < 1e-16 * partial {
            converged = true;
            break;
        }
        partial += term;
    }
    if !complete && !converged {
        return Err(Error::Truncation { levels: levels.len(), beta });
    }
    Ok(ZResult::from_ln(ZMethod::Exact, beta, -beta * e0 + partial.ln()))
}

/// Exact quartic partition function; the number of levels is chosen so the
/// first dropped term is below 1e-17 of the leading one.
pub fn quartic_uv_exact_z(hbar: f64, omega: f64, alpha: f64, beta: f64) -> Result<ZResult> {
    if !(hbar > 0.0 && omega > 0.0 && alpha > 0.0 && beta > 0.0) {
        return Err(Error::Domain(format!(
            "hbar, omega, alpha, beta must be positive, got {hbar}, {omega}, {alpha}, {beta}"
        )));
    }
    let base = alpha + 0.5;
    let needed = (base * base + 40.0 / (beta * hbar * omega)).sqrt() - base;
    let count = needed.ceil() as usize + 4;
    z_from_levels(&quartic_uv_levels(hbar, omega, alpha, count), beta, false)
}

/// Exact spin partition function: sum over the 2s + 1 levels.
pub fn spin_exact_z(hbar: f64, omega: f64, spin: f64, beta: f64) -> Result<ZResult> {
    let two_s = 2.0 * spin;
    if !(spin > 0.0) || (two_s - two_s.round()).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "spin must be a positive integer or half-integer, got {spin}"
        )));
    }
    z_from_levels(&spin_levels(hbar, omega, spin), beta, true)
}

fn gl16_composite(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let width = (b - a) / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * width;
        for (x, w) in GL16 {
            acc += 0.5 * width * w * f(mid + 0.5 * width * x);
        }
    }
    acc
}

fn gl16_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel: f64) -> Result<f64> {
    let mut panels = 4;
    let mut prev = gl16_composite(f, a, b, panels);
    loop {
        panels *= 2;
        let cur = gl16_composite(f, a, b, panels);
        if (cur - prev).abs() <= rel * cur.abs() {
            return Ok(cur);
        }
        if panels >= 1 << 18 {
            return Err(Error::NonConvergence {
                what: "panel-doubled quadrature",
                prev,
                last: cur,
            });
        }
        prev = cur;
    }
}

/// Classical partition function of the polynomial system: the momentum
/// Gaussian integrates in closed form, leaving
/// ln Z = -ln(hbar sqrt(2 pi beta)) - beta V_min + ln int e^{-beta (V - V_min)} dq
/// over a domain where the potential clears V_min by 45/beta at both edges.
pub fn classical_z_euclidean(pot: &Potential, hbar: f64, beta: f64) -> Result<ZResult> {
    if !(hbar > 0.0 && beta > 0.0) {
        return Err(Error::Domain(format!(
            "hbar and beta must be positive, got {hbar}, {beta}"
        )));
    }
    let crits = pot.critical_points();
    if crits.is_empty() {
        return Err(Error::Domain("potential has no critical points".into()));
    }
    let v_min = crits.iter().map(|&q| pot.v(q)).fold(f64::INFINITY, f64::min);
    let need = v_min + 45.0 / beta;
    let mut l = crits.iter().fold(1.0f64, |m, q| m.max(q.abs())) + 1.0;
    for _ in 0..200 {
        if pot.v(l) >= need && pot.v(-l) >= need {
            break;
        }
        l *= 1.4;
    }
    let integrand = move |q: f64| (-beta * (pot.v(q) - v_min)).exp();
    let integral = gl16_adaptive(&integrand, -l, l, 1e-12)?;
    let ln_z = -(hbar * (2.0 * std::f64::consts::PI * beta).sqrt()).ln() - beta * v_min
        + integral.ln();
    Ok(ZResult::from_ln(ZMethod::Classical, beta, ln_z))
}

/// ln erfc(x) for all x >= 0 without underflow: direct evaluation up to
/// x = 25, then the asymptotic series
/// erfc(x) = e^{-x^2} / (x sqrt(pi)) sum_k (-1)^k (2k-1)!! / (2x^2)^k.
pub fn ln_erfc(x: f64) -> f64 {
    if x <= 25.0 {
        libm::erfc(x).ln()
    } else {
        let inv2x2 = 1.0 / (2.0 * x * x);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..=12 {
            term *= -(2.0 * k as f64 - 1.0) * inv2x2;
            sum += term;
            if term.abs() < 1e-18 {
                break;
            }
        }
        -x * x - (x * std::f64::consts::PI.sqrt()).ln() + sum.ln()
    }
}

/// Classical partition function of the quartic system, reduced to an error
/// function: Z = sqrt(pi) / (2 sqrt(hbar omega beta)) erfc(sqrt(hbar omega
/// beta) alpha), carried in the log domain.
pub fn quartic_uv_classical_z(hbar: f64, omega: f64, alpha: f64, beta: f64) -> Result<ZResult> {
    if !(hbar > 0.0 && omega > 0.0 && alpha > 0.0 && beta > 0.0) {
        return Err(Error::Domain(format!(
            "hbar, omega, alpha, beta must be positive, got {hbar}, {omega}, {alpha}, {beta}"
        )));
    }
    let b = hbar * omega * beta;
    let ln_z = (std::f64::consts::PI.sqrt() / (2.0 * b.sqrt())).ln() + ln_erfc(b.sqrt() * alpha);
    Ok(ZResult::from_ln(ZMethod::Classical, beta, ln_z))
}

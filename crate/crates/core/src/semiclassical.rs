//! Assembly of partition functions from closed solutions of the
//! inverted-potential flow, plus the closed-form quadratic and
//! next-order traces for the quartic-in-uv and spin-field systems.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::Potential;
use crate::orbits::{
    equilibrium_contributions, equilibrium_ln_term, find_librations, LibrationOpts,
    OrbitContribution, OrbitKind,
};

/// Which route produced a partition function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZMethod {
    /// Boltzmann sum over numerically converged (or closed-form) levels.
    Exact,
    /// Classical phase-space integral.
    Classical,
    /// Trace over equilibrium contributions only.
    ScHarmonic,
    /// Trace over equilibria and librations.
    ScTrace,
    /// Quadratic trace times the next-order correction factor.
    ScHigher,
}

impl ZMethod {
    pub fn label(&self) -> &'static str {
        match self {
            ZMethod::Exact => "exact",
            ZMethod::Classical => "classical",
            ZMethod::ScHarmonic => "sc_harmonic",
            ZMethod::ScTrace => "sc_trace",
            ZMethod::ScHigher => "sc_higher",
        }
    }

    pub fn parse(s: &str) -> Option<ZMethod> {
        match s {
            "exact" => Some(ZMethod::Exact),
            "classical" => Some(ZMethod::Classical),
            "sc_harmonic" => Some(ZMethod::ScHarmonic),
            "sc_trace" => Some(ZMethod::ScTrace),
            "sc_higher" => Some(ZMethod::ScHigher),
            _ => None,
        }
    }
}

/// Split of a trace into its equilibrium and libration subtotals.
///
/// `harmonic` and `tunneling` are plain left-to-right sums of the terms (so
/// the equilibrium subtotal of a multiwell system is bit-identical to adding
/// the corresponding single-well values); the `ln_*` fields are log-domain
/// sums that stay meaningful when the linear values underflow.
#[derive(Debug, Clone)]
pub struct TraceBreakdown {
    pub harmonic: f64,
    pub tunneling: f64,
    pub ln_harmonic: f64,
    pub ln_tunneling: f64,
    pub contributions: Vec<OrbitContribution>,
}

/// A partition function value with its log-domain companion.
#[derive(Debug, Clone)]
pub struct ZResult {
    pub method: ZMethod,
    pub beta: f64,
    pub ln_z: f64,
    /// exp-domain value; 0 (or inf) when beta pushes it out of f64 range,
    /// in which case `ln_z` remains the meaningful number.
    pub z: f64,
    pub breakdown: Option<TraceBreakdown>,
    /// True when no contribution entered the sum at all.
    pub empty: bool,
}

impl ZResult {
    pub fn from_ln(method: ZMethod, beta: f64, ln_z: f64) -> ZResult {
        ZResult { method, beta, ln_z, z: ln_z.exp(), breakdown: None, empty: false }
    }
}

/// log(sum of exp(x_i)) without leaving the log domain; -inf for an empty or
/// all-(-inf) input, NaN if any input is NaN.
pub(crate) fn ln_sum_exp(xs: &[f64]) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for &x in xs {
        if x.is_nan() {
            return f64::NAN;
        }
        if x > m {
            m = x;
        }
    }
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Sum the supplied contributions into a trace value. Propagates
/// `SingularAmplitude` if any term is undefined (literal amplitude mode with
/// tr M <= 2).
pub fn assemble_trace(
    method: ZMethod,
    beta: f64,
    contributions: Vec<OrbitContribution>,
) -> Result<ZResult> {
    let mut harmonic = 0.0;
    let mut tunneling = 0.0;
    let mut ln_eq = Vec::new();
    let mut ln_lib = Vec::new();
    for c in &contributions {
        let term = c.checked_term()?;
        match c.kind {
            OrbitKind::Equilibrium => {
                harmonic += term;
                ln_eq.push(c.ln_term);
            }
            OrbitKind::Libration => {
                tunneling += term;
                ln_lib.push(c.ln_term);
            }
        }
    }
    let ln_harmonic = ln_sum_exp(&ln_eq);
    let ln_tunneling = ln_sum_exp(&ln_lib);
    let ln_z = ln_sum_exp(&[ln_harmonic, ln_tunneling]);
    let empty = contributions.is_empty();
    Ok(ZResult {
        method,
        beta,
        ln_z,
        z: harmonic + tunneling,
        breakdown: Some(TraceBreakdown {
            harmonic,
            tunneling,
            ln_harmonic,
            ln_tunneling,
            contributions,
        }),
        empty,
    })
}

/// ln Z of a single quadratic well with bottom value `v0` and curvature
/// frequency `omega`: -beta v0 - ln(2 sinh(hbar omega beta / 2)).
pub fn single_well_ln_z(hbar: f64, beta: f64, omega: f64, v0: f64) -> f64 {
    equilibrium_ln_term(beta * v0, hbar * omega * beta)
}

pub fn single_well_z(hbar: f64, beta: f64, omega: f64, v0: f64) -> f64 {
    single_well_ln_z(hbar, beta, omega, v0).exp()
}

/// Trace over the equilibrium contributions alone (one per minimum of V).
pub fn sc_harmonic_z(pot: &Potential, hbar: f64, beta: f64) -> Result<ZResult> {
    let contributions = equilibrium_contributions(pot, hbar, beta)?;
    assemble_trace(ZMethod::ScHarmonic, beta, contributions)
}

/// Full trace: equilibria plus librations with period matching tau / n in
/// the wells of Vbar at tau = hbar beta.
pub fn sc_trace_z(
    pot: &Potential,
    hbar: f64,
    beta: f64,
    opts: &LibrationOpts,
) -> Result<ZResult> {
    let mut contributions = equilibrium_contributions(pot, hbar, beta)?;
    contributions.extend(find_librations(pot, hbar, hbar * beta, opts)?);
    assemble_trace(ZMethod::ScTrace, beta, contributions)
}

/// Closed-form quadratic trace of the quartic system
/// H = hbar omega (u v + alpha)^2, expanded about its minimum: a ladder with
/// ground value alpha^2 hbar omega and spacing 2 alpha hbar omega.
#[derive(Debug, Clone, Copy)]
pub struct QuarticQuadratic {
    pub z: f64,
    pub ln_z: f64,
    pub f: f64,
    pub u: f64,
}

fn check_quartic_args(hbar: f64, omega: f64, alpha: f64, beta: f64) -> Result<()> {
    if !(hbar > 0.0 && omega > 0.0 && alpha > 0.0 && beta > 0.0) {
        return Err(Error::Domain(format!(
            "hbar, omega, alpha, beta must be positive, got {hbar}, {omega}, {alpha}, {beta}"
        )));
    }
    Ok(())
}

pub fn quartic_uv_z_quadratic(
    hbar: f64,
    omega: f64,
    alpha: f64,
    beta: f64,
) -> Result<QuarticQuadratic> {
    check_quartic_args(hbar, omega, alpha, beta)?;
    let y = alpha * hbar * omega * beta;
    let ln_z = equilibrium_ln_term(alpha * alpha * hbar * omega * beta, 2.0 * y);
    // u = alpha^2 hbar omega + alpha hbar omega coth(alpha hbar omega beta),
    // with coth(y) = 1 + 2 / (e^{2y} - 1) stable at both ends.
    let coth = 1.0 + 2.0 / (2.0 * y).exp_m1();
    let u = alpha * alpha * hbar * omega + alpha * hbar * omega * coth;
    Ok(QuarticQuadratic { z: ln_z.exp(), ln_z, f: -ln_z / beta, u })
}

/// Expansion data behind the next-order correction to the quadratic quartic
/// trace, all evaluated on the orbit at the minimum; x = alpha hbar omega
/// beta throughout.
#[derive(Debug, Clone, Copy)]
pub struct HigherOrderCoeffs {
    /// Gaussian prefactor e^{-x}: inverse square root of the v-sector
    /// monodromy entry e^{2x}.
    pub a0: f64,
    /// Mixed second-derivative coefficient of the prefactor, -2 hbar omega
    /// beta e^{-3x}.
    pub a_uv: f64,
    /// Mixed second derivative of the generating phase, -i hbar e^{-2x}.
    pub phi_uv: Complex64,
    /// Fourth mixed derivative of the generating phase, 4 i hbar^2 omega
    /// beta e^{-4x}.
    pub phi_uuvv: Complex64,
    /// 2 gamma = e^{-2x} - 1.
    pub two_gamma: f64,
    /// Relative size of the next-order term; Z_corrected =
    /// Z_quadratic (1 - correction).
    pub correction: f64,
}

pub fn higher_order_coeffs(
    hbar: f64,
    omega: f64,
    alpha: f64,
    beta: f64,
) -> Result<HigherOrderCoeffs> {
    check_quartic_args(hbar, omega, alpha, beta)?;
    let x = alpha * hbar * omega * beta;
    let a0 = (-x).exp();
    let a_uv = -2.0 * hbar * omega * beta * (-3.0 * x).exp();
    let phi_uv = Complex64::new(0.0, -hbar * (-2.0 * x).exp());
    let phi_uuvv = Complex64::new(0.0, 4.0 * hbar * hbar * omega * beta * (-4.0 * x).exp());
    let two_gamma = (-2.0 * x).exp() - 1.0;
    let gamma = 0.5 * two_gamma;
    let c1 = a_uv / (two_gamma * a0);
    let c2 = phi_uuvv / (Complex64::i() * 8.0 * hbar * gamma * gamma);
    debug_assert!(c2.im.abs() <= 1e-14 * c2.re.abs().max(1.0));
    let correction = c1 + c2.re;
    // same quantity reduced by hand to a hyperbolic form; a mismatch means
    // the coefficient pipeline above is broken, not a data problem
    let sh = x.sinh();
    let closed = 0.5 * hbar * omega * beta / (sh * sh);
    assert!(
        (correction - closed).abs() <= 1e-12 * closed.abs().max(1.0),
        "internal consistency: correction {correction} vs reduced form {closed}"
    );
    Ok(HigherOrderCoeffs { a0, a_uv, phi_uv, phi_uuvv, two_gamma, correction })
}

/// Quadratic quartic trace with the next-order correction factor applied.
/// Errors with `OutOfValidity` when the correction reaches unity (the
/// expansion no longer converges there, typically at high temperature).
pub fn quartic_uv_z_higher(hbar: f64, omega: f64, alpha: f64, beta: f64) -> Result<ZResult> {
    let qq = quartic_uv_z_quadratic(hbar, omega, alpha, beta)?;
    let hoc = higher_order_coeffs(hbar, omega, alpha, beta)?;
    if !(hoc.correction < 1.0) {
        return Err(Error::OutOfValidity { correction: hoc.correction });
    }
    let ln_z = qq.ln_z + (-hoc.correction).ln_1p();
    Ok(ZResult::from_ln(ZMethod::ScHigher, beta, ln_z))
}

/// Spin-field trace data: the Hamiltonian value at the orbit, the curvature
/// correction of the phase-space metric, and the stability frequency, all
/// from second differences of the Hamiltonian in the canonical chart.
#[derive(Debug, Clone, Copy)]
pub struct SpinOrbitData {
    pub h0: f64,
    /// Curvature correction added to the energy exponent per unit beta.
    pub correction: f64,
    /// Stability frequency (energy units) entering 2 sinh(freq beta / 2).
    pub stability: f64,
}

/// Evaluate the spin-field Hamiltonian
/// H(w) = -hbar omega s (1 - |w|^2) / (1 + |w|^2)
/// through the canonical chart (Q, P) -> w = x + i y with
/// (Q, P) = 2 sqrt(s / (1 + |w|^2)) (y, x).
fn spin_h_qp(hbar: f64, omega: f64, spin: f64, q: f64, p: f64) -> Result<f64> {
    let r2_qp = q * q + p * p;
    if r2_qp >= 4.0 * spin {
        return Err(Error::Domain(format!(
            "chart point Q^2 + P^2 = {r2_qp} outside the sphere of radius 2 sqrt(s)"
        )));
    }
    let c = (4.0 * spin - r2_qp).sqrt();
    let (x, y) = (p / c, q / c);
    let r2 = x * x + y * y;
    Ok(-hbar * omega * spin * (1.0 - r2) / (1.0 + r2))
}

/// Second differences of the chart Hamiltonian at the orbit (the equilibrium
/// at the pole). The composition through the chart is exactly quadratic in
/// (Q, P), so the three-point differences are exact for any step; the step
/// sqrt(s) keeps the rounding amplification independent of s.
pub fn spin_orbit_data(hbar: f64, omega: f64, spin: f64) -> Result<SpinOrbitData> {
    if !(hbar > 0.0 && omega > 0.0) {
        return Err(Error::Domain(format!(
            "hbar and omega must be positive, got {hbar}, {omega}"
        )));
    }
    let two_s = 2.0 * spin;
    if !(spin > 0.0) || (two_s - two_s.round()).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "spin must be a positive integer or half-integer, got {spin}"
        )));
    }
    let h = spin.sqrt();
    let h00 = spin_h_qp(hbar, omega, spin, 0.0, 0.0)?;
    let h_qq = (spin_h_qp(hbar, omega, spin, h, 0.0)? - 2.0 * h00
        + spin_h_qp(hbar, omega, spin, -h, 0.0)?)
        / (h * h);
    let h_pp = (spin_h_qp(hbar, omega, spin, 0.0, h)? - 2.0 * h00
        + spin_h_qp(hbar, omega, spin, 0.0, -h)?)
        / (h * h);
    Ok(SpinOrbitData {
        h0: h00,
        correction: 0.25 * (h_qq + h_pp),
        stability: (h_qq * h_pp).sqrt(),
    })
}

/// Trace of the spin-field system: a single orbit (the equilibrium at the
/// pole) with the curvature correction in the exponent and a
/// 2 sinh(stability beta / 2) amplitude.
pub fn spin_z_sc(hbar: f64, omega: f64, spin: f64, beta: f64) -> Result<ZResult> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    let od = spin_orbit_data(hbar, omega, spin)?;
    let x = od.stability * beta;
    // ln [ e^{-beta (h0 - correction)} / (2 sinh(x/2)) ]
    let ln_z = -beta * (od.h0 - od.correction) - 0.5 * x - (-(-x).exp_m1()).ln();
    let term = ln_z.exp();
    let contribution = OrbitContribution {
        kind: OrbitKind::Equilibrium,
        well: 0,
        n: 0,
        e_shell: -od.h0,
        h0: od.h0,
        // effective Euclidean action: the exponent actually used, including
        // the curvature correction
        s_bar: (od.h0 - od.correction) * hbar * beta,
        tr_m: 2.0 * x.cosh(),
        tr_m_eff: 2.0 * x.cosh(),
        ln_term: ln_z,
        term,
    };
    Ok(ZResult {
        method: ZMethod::ScTrace,
        beta,
        ln_z,
        z: term,
        breakdown: Some(TraceBreakdown {
            harmonic: term,
            tunneling: 0.0,
            ln_harmonic: ln_z,
            ln_tunneling: f64::NEG_INFINITY,
            contributions: vec![contribution],
        }),
        empty: false,
    })
}

fn orbit_set(
    pot: &Potential,
    hbar: f64,
    beta: f64,
    opts: Option<&LibrationOpts>,
) -> Result<Vec<OrbitContribution>> {
    let mut set = equilibrium_contributions(pot, hbar, beta)?;
    if let Some(o) = opts {
        set.extend(find_librations(pot, hbar, hbar * beta, o)?);
    }
    set.sort_by(|a, b| {
        let ka = (a.kind == OrbitKind::Libration, a.well, a.n);
        let kb = (b.kind == OrbitKind::Libration, b.well, b.n);
        ka.cmp(&kb).then(a.e_shell.partial_cmp(&b.e_shell).unwrap())
    });
    Ok(set)
}

fn matched_sets(
    pot: &Potential,
    hbar: f64,
    beta: f64,
    delta: f64,
    opts: Option<&LibrationOpts>,
) -> Result<[Vec<OrbitContribution>; 3]> {
    let lo = orbit_set(pot, hbar, beta - delta, opts)?;
    let mid = orbit_set(pot, hbar, beta, opts)?;
    let hi = orbit_set(pot, hbar, beta + delta, opts)?;
    let key = |s: &[OrbitContribution]| -> Vec<(bool, usize, u32)> {
        s.iter().map(|c| (c.kind == OrbitKind::Libration, c.well, c.n)).collect()
    };
    if key(&lo) != key(&mid) || key(&hi) != key(&mid) {
        return Err(Error::Domain(format!(
            "orbit families change across the differentiation stencil at beta = {beta}; \
             move away from a libration threshold or shrink the step"
        )));
    }
    Ok([lo, mid, hi])
}

/// Internal energy from the trace: a weighted average over orbits of
/// h0 + (1/2) d ln(tr M_eff - 2)/d beta, the derivative taken by central
/// differences over matched orbit families at beta(1 +- rel_step).
pub fn u_sc_analytic(
    pot: &Potential,
    hbar: f64,
    beta: f64,
    opts: Option<&LibrationOpts>,
    rel_step: f64,
) -> Result<f64> {
    let delta = rel_step * beta;
    let [lo, mid, hi] = matched_sets(pot, hbar, beta, delta, opts)?;
    let ln_terms: Vec<f64> = mid.iter().map(|c| c.ln_term).collect();
    let ln_z = ln_sum_exp(&ln_terms);
    let mut u = 0.0;
    for j in 0..mid.len() {
        let w = (mid[j].ln_term - ln_z).exp();
        let dlng = ((hi[j].tr_m_eff - 2.0).ln() - (lo[j].tr_m_eff - 2.0).ln()) / (2.0 * delta);
        u += w * (mid[j].h0 + 0.5 * dlng);
    }
    Ok(u)
}

/// Heat capacity from the trace: k_B beta^2 (var(eps) - <d eps/d beta>) with
/// eps_j = h0_j + (1/2) d ln(tr M_eff - 2)/d beta per orbit, both derivatives
/// from the same three-point stencil as `u_sc_analytic`.
pub fn c_sc_analytic(
    pot: &Potential,
    hbar: f64,
    k_b: f64,
    beta: f64,
    opts: Option<&LibrationOpts>,
    rel_step: f64,
) -> Result<f64> {
    let delta = rel_step * beta;
    let [lo, mid, hi] = matched_sets(pot, hbar, beta, delta, opts)?;
    let ln_terms: Vec<f64> = mid.iter().map(|c| c.ln_term).collect();
    let ln_z = ln_sum_exp(&ln_terms);
    let (mut mean, mut mean_sq, mut mean_d) = (0.0, 0.0, 0.0);
    for j in 0..mid.len() {
        let w = (mid[j].ln_term - ln_z).exp();
        let g_lo = (lo[j].tr_m_eff - 2.0).ln();
        let g_mid = (mid[j].tr_m_eff - 2.0).ln();
        let g_hi = (hi[j].tr_m_eff - 2.0).ln();
        let eps = mid[j].h0 + 0.5 * (g_hi - g_lo) / (2.0 * delta);
        let d_eps = (hi[j].h0 - lo[j].h0) / (2.0 * delta)
            + 0.5 * (g_hi - 2.0 * g_mid + g_lo) / (delta * delta);
        mean += w * eps;
        mean_sq += w * eps * eps;
        mean_d += w * d_eps;
    }
    Ok(k_b * beta * beta * (mean_sq - mean * mean - mean_d))
}

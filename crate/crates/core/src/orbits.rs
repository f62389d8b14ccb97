//! Enumeration of the closed solutions of the inverted-potential flow that
//! enter the trace: equilibria (one candidate per critical point of V) and
//! librations inside the wells of Vbar = -V whose period matches tau / n.

use crate::dynamics::{flow_with_tangent, shell_data, VbarWell, FLOW_TOL};
use crate::error::{Error, Result};
use crate::model::{Potential, DEGENERACY_TOL};

/// Stability of an equilibrium of the inverted-potential flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    /// Minimum of V: saddle of the inverted flow, tr M = 2 cosh(omega tau) > 2.
    Hyperbolic,
    /// Maximum of V: center of the inverted flow; contributes no isolated
    /// equilibrium term but anchors a well of Vbar in which librations live.
    Elliptic,
}

/// A critical point of V with its classification under the inverted flow.
#[derive(Debug, Clone, Copy)]
pub struct Equilibrium {
    pub q: f64,
    pub v: f64,
    pub v2: f64,
    pub kind: EquilibriumKind,
}

/// Locate and classify all critical points of V, sorted by position.
///
/// Degenerate critical points (|V''| below the threshold, or critical points
/// of even multiplicity where V' touches zero without a sign change) are
/// rejected: the quadratic analysis behind every downstream formula does not
/// apply there.
pub fn classify_equilibria(pot: &Potential) -> Result<Vec<Equilibrium>> {
    for r in pot.inflection_points() {
        if pot.dv(r).abs() < 1e-10 {
            return Err(Error::DegenerateCriticalPoint { q: r, v2: pot.d2v(r) });
        }
    }
    let mut crits = pot.critical_points();
    crits.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = Vec::with_capacity(crits.len());
    for q in crits {
        let v2 = pot.d2v(q);
        if v2.abs() < DEGENERACY_TOL {
            return Err(Error::DegenerateCriticalPoint { q, v2 });
        }
        let kind = if v2 > 0.0 { EquilibriumKind::Hyperbolic } else { EquilibriumKind::Elliptic };
        out.push(Equilibrium { q, v: pot.v(q), v2, kind });
    }
    Ok(out)
}

/// Wells of Vbar = -V: each maximum of V flanked by the two neighbouring
/// minima of V (which are the enclosing maxima of Vbar).
pub fn vbar_wells(pot: &Potential) -> Result<Vec<VbarWell>> {
    let eqs = classify_equilibria(pot)?;
    let mut wells = Vec::new();
    for i in 0..eqs.len() {
        if eqs[i].kind != EquilibriumKind::Elliptic {
            continue;
        }
        let flanked = i > 0
            && i + 1 < eqs.len()
            && eqs[i - 1].kind == EquilibriumKind::Hyperbolic
            && eqs[i + 1].kind == EquilibriumKind::Hyperbolic;
        if !flanked {
            return Err(Error::Domain(format!(
                "maximum of V at q = {} is not flanked by minima",
                eqs[i].q
            )));
        }
        wells.push(VbarWell {
            left_top: eqs[i - 1].q,
            bottom: eqs[i].q,
            right_top: eqs[i + 1].q,
        });
    }
    Ok(wells)
}

/// How to turn the numerically integrated tr M of a libration into the
/// amplitude denominator sqrt(tr M - 2).
///
/// One-dimensional librations are parabolic (tr M = 2 exactly), so the
/// literal denominator is pure integration noise; the floored variant clamps
/// tr M - 2 from below at a fixed positive value instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmplitudeMode {
    Literal,
    Floored(f64),
}

/// Default clamp for `AmplitudeMode::Floored`.
pub const DEFAULT_TRM_FLOOR: f64 = 1e-6;

impl Default for AmplitudeMode {
    fn default() -> Self {
        AmplitudeMode::Floored(DEFAULT_TRM_FLOOR)
    }
}

impl AmplitudeMode {
    pub fn effective_tr_m(&self, tr_m: f64) -> f64 {
        match *self {
            AmplitudeMode::Literal => tr_m,
            AmplitudeMode::Floored(eps) => {
                if tr_m - 2.0 < eps {
                    2.0 + eps
                } else {
                    tr_m
                }
            }
        }
    }
}

/// Search controls for `find_librations`.
#[derive(Debug, Clone, Copy)]
pub struct LibrationOpts {
    /// Highest repetition count n for which T(E) = tau / n is solved.
    pub n_max: u32,
    pub amplitude: AmplitudeMode,
    /// Step-halving tolerance of the tangent-matrix integration.
    pub flow_tol: f64,
}

impl Default for LibrationOpts {
    fn default() -> Self {
        LibrationOpts { n_max: 3, amplitude: AmplitudeMode::default(), flow_tol: FLOW_TOL }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitKind {
    Equilibrium,
    Libration,
}

impl OrbitKind {
    pub fn label(&self) -> &'static str {
        match self {
            OrbitKind::Equilibrium => "equilibrium",
            OrbitKind::Libration => "libration",
        }
    }
}

/// One closed solution's contribution to the trace.
///
/// `term` (and `ln_term`) is e^{-S_bar/hbar} / sqrt(tr_m_eff - 2); it is NaN
/// when tr_m_eff <= 2, which can happen for librations in literal amplitude
/// mode. `h0` is the conserved energy of the equivalent real-time motion on
/// the orbit (V at the minimum for an equilibrium, -E_shell for a libration);
/// it is the energy weight carried by each term in internal-energy sums.
#[derive(Debug, Clone, Copy)]
pub struct OrbitContribution {
    pub kind: OrbitKind,
    /// Index of the equilibrium (among minima of V) or of the Vbar well,
    /// counted from the left within its own kind.
    pub well: usize,
    /// Repetition count; 0 for equilibria.
    pub n: u32,
    /// Energy of the Vbar shell carrying the orbit.
    pub e_shell: f64,
    pub h0: f64,
    pub s_bar: f64,
    pub tr_m: f64,
    pub tr_m_eff: f64,
    pub ln_term: f64,
    pub term: f64,
}

impl OrbitContribution {
    pub fn checked_term(&self) -> Result<f64> {
        if self.term.is_finite() {
            Ok(self.term)
        } else {
            Err(Error::SingularAmplitude { well: self.well, n: self.n, tr_m: self.tr_m })
        }
    }
}

/// ln of e^{-beta V0} / (2 sinh(x/2)) with x = hbar omega beta, written as
/// -beta V0 - x/2 - ln(1 - e^{-x}) so that it neither overflows at large x
/// nor loses digits at small x. Every harmonic-level partition sum in the
/// crate funnels through this one function, which is what makes the multiwell
/// equilibrium subtotal bit-identical to a sum of single-well values.
pub(crate) fn equilibrium_ln_term(beta_v0: f64, x: f64) -> f64 {
    -beta_v0 - 0.5 * x - (-(-x).exp_m1()).ln()
}

/// Equilibrium contributions to the trace at inverse temperature `beta`:
/// one term per minimum of V, e^{-beta V0} / (2 sinh(hbar omega beta / 2))
/// with omega^2 = V''(q0). Maxima of V contribute nothing here.
pub fn equilibrium_contributions(
    pot: &Potential,
    hbar: f64,
    beta: f64,
) -> Result<Vec<OrbitContribution>> {
    if !(hbar > 0.0 && beta > 0.0) {
        return Err(Error::Domain(format!(
            "hbar and beta must be positive, got hbar = {hbar}, beta = {beta}"
        )));
    }
    let eqs = classify_equilibria(pot)?;
    let mut out = Vec::new();
    let mut idx = 0usize;
    for eq in &eqs {
        if eq.kind != EquilibriumKind::Hyperbolic {
            continue;
        }
        let omega = eq.v2.sqrt();
        let x = hbar * omega * beta;
        let ln_term = equilibrium_ln_term(beta * eq.v, x);
        out.push(OrbitContribution {
            kind: OrbitKind::Equilibrium,
            well: idx,
            n: 0,
            e_shell: -eq.v,
            h0: eq.v,
            s_bar: hbar * beta * eq.v,
            tr_m: 2.0 * x.cosh(),
            tr_m_eff: 2.0 * x.cosh(),
            ln_term,
            term: ln_term.exp(),
        });
        idx += 1;
    }
    Ok(out)
}

/// Librations with period T(E) = tau / n for n = 1..=n_max in every well of
/// Vbar, with Euclidean action S_bar = n W(E) - E tau and tr M from the
/// integrated tangent matrix over n periods.
///
/// T(E) is sampled at 64 energies spaced geometrically in the distance to the
/// separatrix (from 1e-10 of the well depth up to all but 1e-9 of it); sign
/// changes of T(E) - tau/n are then refined by bisection. If tau/n exceeds
/// the period at the innermost sample, the bracket is extended toward the
/// separatrix in log-distance as far as the shell quadrature converges;
/// orbits whose turning points cannot be resolved in f64 past that are
/// dropped.
pub fn find_librations(
    pot: &Potential,
    hbar: f64,
    tau: f64,
    opts: &LibrationOpts,
) -> Result<Vec<OrbitContribution>> {
    if !(hbar > 0.0 && tau > 0.0) {
        return Err(Error::Domain(format!(
            "hbar and tau must be positive, got hbar = {hbar}, tau = {tau}"
        )));
    }
    if opts.n_max == 0 {
        return Ok(Vec::new());
    }
    if let AmplitudeMode::Floored(eps) = opts.amplitude {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("tr M floor must be positive, got {eps}")));
        }
    }
    let wells = vbar_wells(pot)?;
    let mut out = Vec::new();
    for (w_idx, well) in wells.iter().enumerate() {
        let (e_bottom, e_top) = well.energy_range(pot);
        let depth = e_top - e_bottom;
        const N_SCAN: usize = 64;
        let d_hi = depth * (1.0 - 1e-9);
        let d_lo = depth * 1e-10;
        let ratio = (d_lo / d_hi).powf(1.0 / (N_SCAN as f64 - 1.0));
        let mut energies = [0.0; N_SCAN];
        let mut periods = [0.0; N_SCAN];
        let mut d = d_hi;
        for i in 0..N_SCAN {
            energies[i] = e_top - d;
            periods[i] = shell_data(pot, well, energies[i])?.period;
            d *= ratio;
        }
        for n in 1..=opts.n_max {
            let target = tau / n as f64;
            let mut roots: Vec<f64> = Vec::new();
            for i in 0..N_SCAN - 1 {
                let f0 = periods[i] - target;
                let f1 = periods[i + 1] - target;
                if f0 == 0.0 {
                    roots.push(energies[i]);
                } else if f0 * f1 < 0.0 {
                    roots.push(bisect_period(pot, well, energies[i], energies[i + 1], f0, target)?);
                }
            }
            if periods[N_SCAN - 1] == target {
                roots.push(energies[N_SCAN - 1]);
            } else if periods[N_SCAN - 1] < target {
                if let Some(e) = extend_toward_separatrix(pot, well, e_top, d_lo, depth, target) {
                    roots.push(e);
                }
            }
            roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
            roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * depth);
            for e in roots {
                out.push(libration_contribution(pot, well, w_idx, n, e, hbar, tau, opts)?);
            }
        }
    }
    out.sort_by(|a, b| {
        (a.well, a.n)
            .cmp(&(b.well, b.n))
            .then(a.e_shell.partial_cmp(&b.e_shell).unwrap())
    });
    Ok(out)
}

fn bisect_period(
    pot: &Potential,
    well: &VbarWell,
    mut lo: f64,
    mut hi: f64,
    mut flo: f64,
    target: f64,
) -> Result<f64> {
    for _ in 0..200 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fmid = shell_data(pot, well, mid)?.period - target;
        if fmid == 0.0 {
            return Ok(mid);
        }
        if flo * fmid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Continue the period bracket from separatrix distance `d_start` (where the
/// period is still below `target`) inward. Returns None when the quadrature
/// stops converging before the period reaches `target`: the turning points of
/// such shells are closer to the barrier top than f64 can represent.
fn extend_toward_separatrix(
    pot: &Potential,
    well: &VbarWell,
    e_top: f64,
    d_start: f64,
    depth: f64,
    target: f64,
) -> Option<f64> {
    let floor = depth * 1e-14;
    let mut d_out = d_start;
    let mut d = d_start * 0.1;
    loop {
        if d < floor {
            return None;
        }
        match shell_data(pot, well, e_top - d) {
            Err(_) => return None,
            Ok(sd) => {
                if sd.period >= target {
                    break;
                }
                d_out = d;
                d *= 0.1;
            }
        }
    }
    // bisect in ln d on [d, d_out]
    let (mut lo, mut hi) = (d.ln(), d_out.ln());
    for _ in 0..100 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match shell_data(pot, well, e_top - mid.exp()) {
            Err(_) => return None,
            Ok(sd) => {
                if sd.period >= target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
    }
    Some(e_top - (0.5 * (lo + hi)).exp())
}

fn libration_contribution(
    pot: &Potential,
    well: &VbarWell,
    w_idx: usize,
    n: u32,
    e: f64,
    hbar: f64,
    tau: f64,
    opts: &LibrationOpts,
) -> Result<OrbitContribution> {
    let sd = shell_data(pot, well, e)?;
    let s_bar = n as f64 * sd.action - e * tau;
    let st = flow_with_tangent(pot, sd.q_plus, 0.0, n as f64 * sd.period, opts.flow_tol)?;
    let tr_m = st.tr_m();
    let tr_m_eff = opts.amplitude.effective_tr_m(tr_m);
    let gap = tr_m_eff - 2.0;
    let ln_term = if gap > 0.0 { -s_bar / hbar - 0.5 * gap.ln() } else { f64::NAN };
    Ok(OrbitContribution {
        kind: OrbitKind::Libration,
        well: w_idx,
        n,
        e_shell: e,
        h0: -e,
        s_bar,
        tr_m,
        tr_m_eff,
        ln_term,
        term: ln_term.exp(),
    })
}

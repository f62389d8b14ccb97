//! Newtonian dynamics in the inverted potential.
//!
//! After the rotation to imaginary time the weight e^{-S_bar/hbar} is governed
//! by motion in Vbar(q) = -V(q): qdot = p, pdot = +V'(q). This module
//! integrates that flow together with its tangent (monodromy) matrix and
//! Euclidean action, and evaluates periods T(E) and abbreviated actions W(E)
//! on energy shells of Vbar.

use crate::error::{Error, Result};
use crate::model::Potential;

/// Default step-halving tolerance for `flow_with_tangent`.
pub const FLOW_TOL: f64 = 1e-9;
/// Relative accuracy target for period/action quadrature.
pub const QUAD_REL_TOL: f64 = 1e-10;
/// Turning points are refined to this absolute width.
pub const TURNING_POINT_TOL: f64 = 1e-12;

/// State of the flow at rotated time `tau`: phase-space point, accumulated
/// tangent matrix (row-major, columns are the images of the initial
/// coordinate/momentum displacements) and Euclidean action
/// S_bar = int (p^2/2 + V(q)) dtau'.
#[derive(Debug, Clone, Copy)]
pub struct TangentState {
    pub q: f64,
    pub p: f64,
    pub m: [[f64; 2]; 2],
    pub s_bar: f64,
    pub tau: f64,
}

impl TangentState {
    pub fn tr_m(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    /// det M; equals 1 exactly for the continuum flow (symplecticity).
    pub fn det_m(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }
}

#[derive(Clone, Copy)]
struct FlowVec {
    q: f64,
    p: f64,
    m: [f64; 4],
    s: f64,
}

impl FlowVec {
    fn axpy(&self, h: f64, d: &FlowVec) -> FlowVec {
        FlowVec {
            q: self.q + h * d.q,
            p: self.p + h * d.p,
            m: [
                self.m[0] + h * d.m[0],
                self.m[1] + h * d.m[1],
                self.m[2] + h * d.m[2],
                self.m[3] + h * d.m[3],
            ],
            s: self.s + h * d.s,
        }
    }
}

fn flow_rhs(pot: &Potential, y: &FlowVec) -> FlowVec {
    let v2 = pot.d2v(y.q);
    FlowVec {
        q: y.p,
        p: pot.dv(y.q),
        // dM/dtau = [[0,1],[V'',0]] M  (variational equations of the
        // inverted-potential flow)
        m: [y.m[2], y.m[3], v2 * y.m[0], v2 * y.m[1]],
        s: 0.5 * y.p * y.p + pot.v(y.q),
    }
}

fn rk4_run(pot: &Potential, q0: f64, p0: f64, tau: f64, steps: usize) -> FlowVec {
    let h = tau / steps as f64;
    let mut y = FlowVec { q: q0, p: p0, m: [1.0, 0.0, 0.0, 1.0], s: 0.0 };
    for _ in 0..steps {
        let k1 = flow_rhs(pot, &y);
        let k2 = flow_rhs(pot, &y.axpy(0.5 * h, &k1));
        let k3 = flow_rhs(pot, &y.axpy(0.5 * h, &k2));
        let k4 = flow_rhs(pot, &y.axpy(h, &k3));
        y = FlowVec {
            q: y.q + h / 6.0 * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q),
            p: y.p + h / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p),
            m: [
                y.m[0] + h / 6.0 * (k1.m[0] + 2.0 * k2.m[0] + 2.0 * k3.m[0] + k4.m[0]),
                y.m[1] + h / 6.0 * (k1.m[1] + 2.0 * k2.m[1] + 2.0 * k3.m[1] + k4.m[1]),
                y.m[2] + h / 6.0 * (k1.m[2] + 2.0 * k2.m[2] + 2.0 * k3.m[2] + k4.m[2]),
                y.m[3] + h / 6.0 * (k1.m[3] + 2.0 * k2.m[3] + 2.0 * k3.m[3] + k4.m[3]),
            ],
            s: y.s + h / 6.0 * (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s),
        };
    }
    y
}

/// Integrate the inverted-potential flow from (q0, p0) for rotated time `tau`
/// with the tangent matrix and Euclidean action, using a fixed-step 4th-order
/// scheme whose step is halved until tr M and S_bar both change by less than
/// `tol` (mixed absolute/relative) under a further halving.
pub fn flow_with_tangent(
    pot: &Potential,
    q0: f64,
    p0: f64,
    tau: f64,
    tol: f64,
) -> Result<TangentState> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::Domain(format!("tau must be non-negative, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(TangentState { q: q0, p: p0, m: [[1.0, 0.0], [0.0, 1.0]], s_bar: 0.0, tau });
    }
    let mut steps = ((tau * 8.0).ceil() as usize).max(64);
    let mut prev = rk4_run(pot, q0, p0, tau, steps);
    loop {
        steps *= 2;
        let cur = rk4_run(pot, q0, p0, tau, steps);
        let tr_prev = prev.m[0] + prev.m[3];
        let tr_cur = cur.m[0] + cur.m[3];
        let tr_ok = (tr_cur - tr_prev).abs() <= tol * tr_cur.abs().max(1.0);
        let s_ok = (cur.s - prev.s).abs() <= tol * cur.s.abs().max(1.0);
        if tr_ok && s_ok {
            return Ok(TangentState {
                q: cur.q,
                p: cur.p,
                m: [[cur.m[0], cur.m[1]], [cur.m[2], cur.m[3]]],
                s_bar: cur.s,
                tau,
            });
        }
        if steps >= 1 << 23 {
            return Err(Error::NonConvergence {
                what: "flow_with_tangent step halving (tr M)",
                prev: tr_prev,
                last: tr_cur,
            });
        }
        prev = cur;
    }
}

/// A well of the inverted potential: the interval between two consecutive
/// local maxima of Vbar (= minima of V), with the enclosed minimum of Vbar
/// (= maximum of V) as its bottom.
#[derive(Debug, Clone, Copy)]
pub struct VbarWell {
    pub left_top: f64,
    pub bottom: f64,
    pub right_top: f64,
}

impl VbarWell {
    /// Period of infinitesimal librations about the bottom:
    /// 2 pi / sqrt(Vbar''(bottom)) with Vbar'' = -V''.
    pub fn harmonic_period(&self, pot: &Potential) -> f64 {
        2.0 * std::f64::consts::PI / (-pot.d2v(self.bottom)).sqrt()
    }

    /// Admissible shell energies (E_bottom, E_top) of Vbar, bounded above by
    /// the lower of the two adjacent barrier tops.
    pub fn energy_range(&self, pot: &Potential) -> (f64, f64) {
        let e_bottom = -pot.v(self.bottom);
        let e_top = (-pot.v(self.left_top)).min(-pot.v(self.right_top));
        (e_bottom, e_top)
    }
}

/// Energy-shell summary of a libration in a Vbar well.
#[derive(Debug, Clone, Copy)]
pub struct EnergyShellData {
    pub e: f64,
    pub q_minus: f64,
    pub q_plus: f64,
    /// T(E): period of one traversal.
    pub period: f64,
    /// W(E) = contour integral of p dq over one traversal.
    pub action: f64,
}

fn check_shell_energy(pot: &Potential, well: &VbarWell, e: f64) -> Result<(f64, f64)> {
    let (e_bottom, e_top) = well.energy_range(pot);
    if !(e > e_bottom && e < e_top) {
        return Err(Error::Domain(format!(
            "shell energy {e} outside open well range ({e_bottom}, {e_top})"
        )));
    }
    Ok((e_bottom, e_top))
}

/// Turning points of the shell at energy `e`, one on each side of the well
/// bottom, refined by bisection of Vbar(q) - e.
pub fn turning_points(pot: &Potential, well: &VbarWell, e: f64) -> Result<(f64, f64)> {
    check_shell_energy(pot, well, e)?;
    // Vbar - e is positive at the enclosing tops and negative at the bottom.
    let g = |q: f64| -pot.v(q) - e;
    let q_minus = bisect_monotone(&g, well.left_top, well.bottom)?;
    let q_plus = bisect_monotone(&g, well.bottom, well.right_top)?;
    Ok((q_minus, q_plus))
}

fn bisect_monotone(g: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    let (mut lo, mut hi) = (a, b);
    let (mut glo, ghi) = (g(lo), g(hi));
    if glo == 0.0 {
        return Ok(lo);
    }
    if ghi == 0.0 {
        return Ok(hi);
    }
    if glo * ghi > 0.0 {
        return Err(Error::Domain(format!(
            "no sign change of Vbar - E on [{a}, {b}]"
        )));
    }
    for _ in 0..200 {
        if (hi - lo).abs() <= TURNING_POINT_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let gmid = g(mid);
        if gmid == 0.0 {
            return Ok(mid);
        }
        if glo * gmid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            glo = gmid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub(crate) const GL16: [(f64, f64); 16] = [
    (-9.89400934991649939e-01, 2.71524594117540374e-02),
    (-9.44575023073232600e-01, 6.22535239386477063e-02),
    (-8.65631202387831755e-01, 9.51585116824925914e-02),
    (-7.55404408355002999e-01, 1.24628971255534030e-01),
    (-6.17876244402643771e-01, 1.49595988816576764e-01),
    (-4.58016777657227370e-01, 1.69156519395002619e-01),
    (-2.81603550779258915e-01, 1.82603415044923612e-01),
    (-9.50125098376374544e-02, 1.89450610455068585e-01),
    (9.50125098376374544e-02, 1.89450610455068585e-01),
    (2.81603550779258915e-01, 1.82603415044923612e-01),
    (4.58016777657227370e-01, 1.69156519395002619e-01),
    (6.17876244402643771e-01, 1.49595988816576764e-01),
    (7.55404408355002999e-01, 1.24628971255534030e-01),
    (8.65631202387831755e-01, 9.51585116824925914e-02),
    (9.44575023073232600e-01, 6.22535239386477063e-02),
    (9.89400934991649939e-01, 2.71524594117540374e-02),
];

/// Divide a polynomial (ascending coefficients) by (q - r), discarding the
/// remainder. With r an approximate root the discarded remainder is of the
/// order of the root's residual, so the quotient represents a polynomial that
/// vanishes exactly at r.
fn deflate(coeffs: &[f64], r: f64) -> Vec<f64> {
    let n = coeffs.len();
    debug_assert!(n >= 2);
    let mut out = vec![0.0; n - 1];
    let mut acc = coeffs[n - 1];
    for k in (1..n).rev() {
        out[k - 1] = acc;
        acc = coeffs[k - 1] + r * acc;
    }
    out
}

/// T(E) and W(E) in one pass. The substitution q = q_c + A sin(theta) maps
/// the turning points to theta = +-pi/2 and removes the inverse-sqrt endpoint
/// singularity of the time integrand; composite fixed-order panels are then
/// doubled until both integrals are stable to `QUAD_REL_TOL`.
///
/// The energy gap E - Vbar(q) = E + V(q) is evaluated in the deflated form
/// A^2 cos^2(theta) R(q), where R is E + V with the two turning-point factors
/// divided out. Direct evaluation of E + V(q) suffers catastrophic
/// cancellation near the turning points (and everywhere on near-separatrix or
/// near-bottom shells, where the gap sits far below the rounding floor of the
/// individual terms); the deflated form is smooth and strictly positive.
pub fn shell_data(pot: &Potential, well: &VbarWell, e: f64) -> Result<EnergyShellData> {
    let (q_minus, q_plus) = turning_points(pot, well, e)?;
    let q_c = 0.5 * (q_plus + q_minus);
    let amp = 0.5 * (q_plus - q_minus);
    let half_pi = 0.5 * std::f64::consts::PI;

    // P(q) = E + V(q); gap = P = (q - q_minus)(q - q_plus) S(q) with S < 0
    // inside the well, so R = -S > 0 and gap = A^2 cos^2(theta) R.
    let mut p_coeffs = pot.coeffs().to_vec();
    p_coeffs[0] += e;
    let r_coeffs: Vec<f64> = deflate(&deflate(&p_coeffs, q_minus), q_plus)
        .iter()
        .map(|c| -c)
        .collect();

    let mut prev: Option<(f64, f64)> = None;
    let mut panels = 2usize;
    loop {
        let width = 2.0 * half_pi / panels as f64;
        let (mut it, mut iw) = (0.0, 0.0);
        for k in 0..panels {
            let mid = -half_pi + (k as f64 + 0.5) * width;
            for (x, w) in GL16 {
                let theta = mid + 0.5 * width * x;
                let (sin, cos) = theta.sin_cos();
                let q = q_c + amp * sin;
                let r = crate::model::horner(&r_coeffs, q);
                if r <= 0.0 {
                    return Err(Error::Domain(format!(
                        "non-positive deflated energy gap {r} at quadrature node q = {q}"
                    )));
                }
                // dtau = dq / sqrt(2 gap) = dtheta / sqrt(2 R);
                // p dq = sqrt(2 gap) dq = A^2 cos^2(theta) sqrt(2 R) dtheta.
                let root = (2.0 * r).sqrt();
                let scale = 0.5 * width * w;
                it += scale / root;
                iw += scale * amp * amp * cos * cos * root;
            }
        }
        if let Some((pt, pw)) = prev {
            let t_ok = (it - pt).abs() <= QUAD_REL_TOL * it.abs();
            let w_ok = (iw - pw).abs() <= QUAD_REL_TOL * iw.abs();
            if t_ok && w_ok {
                return Ok(EnergyShellData {
                    e,
                    q_minus,
                    q_plus,
                    period: 2.0 * it,
                    action: 2.0 * iw,
                });
            }
        }
        if panels >= 1 << 16 {
            let pt = prev.map(|(t, _)| 2.0 * t).unwrap_or(f64::NAN);
            return Err(Error::NonConvergence {
                what: "shell quadrature panel doubling (period)",
                prev: pt,
                last: 2.0 * it,
            });
        }
        prev = Some((it, iw));
        panels *= 2;
    }
}

/// Period of the libration at shell energy `e` (relative accuracy 1e-10).
pub fn period_of_energy(pot: &Potential, well: &VbarWell, e: f64) -> Result<f64> {
    Ok(shell_data(pot, well, e)?.period)
}

/// Abbreviated action W(E) of one traversal; dW/dE = T(E).
pub fn abbreviated_action(pot: &Potential, well: &VbarWell, e: f64) -> Result<f64> {
    Ok(shell_data(pot, well, e)?.action)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn shallow() -> Potential {
        Potential::new(vec![0.15, 0.0, -2.0 * 0.15 / 25.0, 0.0, 0.15 / 625.0])
    }

    fn shallow_well() -> VbarWell {
        VbarWell { left_top: -5.0, bottom: 0.0, right_top: 5.0 }
    }

    #[test]
    fn inverted_harmonic_tangent_closed_form() {
        // V = omega^2 q^2 / 2 gives qddot = +omega^2 q under the inverted flow:
        // M = [[cosh, sinh/omega], [omega sinh, cosh]] at omega tau.
        let omega: f64 = 1.3;
        let pot = Potential::new(vec![0.0, 0.0, 0.5 * omega * omega]);
        let (q0, p0, tau) = (0.4, -0.2, 2.0);
        let st = flow_with_tangent(&pot, q0, p0, tau, 1e-11).unwrap();
        let (sh, ch) = ((omega * tau).sinh(), (omega * tau).cosh());
        assert_relative_eq!(st.m[0][0], ch, max_relative = 1e-9);
        assert_relative_eq!(st.m[0][1], sh / omega, max_relative = 1e-9);
        assert_relative_eq!(st.m[1][0], omega * sh, max_relative = 1e-9);
        assert_relative_eq!(st.m[1][1], ch, max_relative = 1e-9);
        // S_bar = (omega/4) [(a^2+b^2) sinh(2 omega tau) + 2ab (cosh(2 omega tau)-1)]
        // with a = q0, b = p0/omega.
        let (a, b) = (q0, p0 / omega);
        let s_ref = 0.25
            * omega
            * ((a * a + b * b) * (2.0 * omega * tau).sinh()
                + 2.0 * a * b * ((2.0 * omega * tau).cosh() - 1.0));
        assert_relative_eq!(st.s_bar, s_ref, max_relative = 1e-9);
        assert_abs_diff_eq!(st.det_m(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_time_is_identity() {
        let st = flow_with_tangent(&shallow(), 1.0, 0.5, 0.0, 1e-9).unwrap();
        assert_eq!(st.m[0][0], 1.0);
        assert_eq!(st.m[0][1], 0.0);
        assert_eq!(st.s_bar, 0.0);
    }

    #[test]
    fn short_time_action_rate() {
        // S_bar ~ (p0^2/2 + V(q0)) tau for small tau.
        let pot = shallow();
        let (q0, p0, tau) = (1.0, 0.4, 1e-5);
        let st = flow_with_tangent(&pot, q0, p0, tau, 1e-12).unwrap();
        let rate = 0.5 * p0 * p0 + pot.v(q0);
        assert_relative_eq!(st.s_bar, rate * tau, max_relative = 1e-6);
    }

    #[test]
    fn hyperbolic_equilibrium_trace() {
        // At a minimum of V the inverted flow is hyperbolic:
        // tr M = 2 cosh(sqrt(V'') tau).
        let pot = Potential::new(vec![3.0, 0.0, -6.0 / 25.0, 0.0, 3.0 / 625.0]);
        let tau = 5.0;
        let st = flow_with_tangent(&pot, 5.0, 0.0, tau, 1e-11).unwrap();
        let expected = 2.0 * (0.96f64.sqrt() * tau).cosh();
        assert_relative_eq!(st.tr_m(), expected, max_relative = 1e-8);
        assert_abs_diff_eq!(st.det_m(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn isochronous_inverted_well() {
        // V = -q^2/2 so Vbar = q^2/2: every shell has period 2 pi.
        let pot = Potential::new(vec![0.0, 0.0, -0.5]);
        let well = VbarWell { left_top: -100.0, bottom: 0.0, right_top: 100.0 };
        for e in [0.1, 1.0, 10.0] {
            let t = period_of_energy(&pot, &well, e).unwrap();
            assert_relative_eq!(t, 2.0 * std::f64::consts::PI, max_relative = 1e-10);
            // W(E) = 2 pi E for the harmonic shell.
            let w = abbreviated_action(&pot, &well, e).unwrap();
            assert_relative_eq!(w, 2.0 * std::f64::consts::PI * e, max_relative = 1e-10);
        }
    }

    #[test]
    fn near_bottom_period_approaches_harmonic() {
        let pot = shallow();
        let well = shallow_well();
        let e = -0.15 * (1.0 - 1e-9);
        let t = period_of_energy(&pot, &well, e).unwrap();
        let harmonic = std::f64::consts::PI * 5.0 / 0.15f64.sqrt();
        assert_relative_eq!(t, harmonic, max_relative = 1e-6);
        assert_relative_eq!(well.harmonic_period(&pot), harmonic, max_relative = 1e-12);
    }

    #[test]
    fn near_separatrix_action_limit() {
        // W(E -> 0-) -> (8a/3) sqrt(2 dE) = 7.302967433402... for the shallow well.
        let w = abbreviated_action(&shallow(), &shallow_well(), -0.15e-12).unwrap();
        assert_relative_eq!(w, 7.302967433402215, max_relative = 1e-9);
    }

    #[test]
    fn asymmetric_well_period_and_action() {
        // V = (q^2-1)^2 + 0.2 q; reference values from two independent
        // routes (ODE event detection and tanh-sinh quadrature).
        let pot = Potential::new(vec![1.0, 0.2, -2.0, 0.0, 1.0]);
        let well = VbarWell {
            left_top: -1.024120300215050,
            bottom: 0.050125946983773,
            right_top: 0.973994353231278,
        };
        let e = -0.520463004310;
        let sd = shell_data(&pot, &well, e).unwrap();
        assert_relative_eq!(sd.period, 3.594913221, max_relative = 1e-7);
        assert_relative_eq!(sd.action, 1.6201078060364, max_relative = 1e-8);
        assert_abs_diff_eq!(sd.q_minus, -0.465506728942, epsilon = 1e-9);
        assert_abs_diff_eq!(sd.q_plus, 0.606845258159, epsilon = 1e-9);
    }

    #[test]
    fn action_derivative_is_period() {
        let pot = shallow();
        let well = shallow_well();
        let e = -0.05;
        let t = period_of_energy(&pot, &well, e).unwrap();
        assert_relative_eq!(t, 49.2980934263, max_relative = 1e-8);
        let h = 1e-7;
        let wp = abbreviated_action(&pot, &well, e + h).unwrap();
        let wm = abbreviated_action(&pot, &well, e - h).unwrap();
        assert_relative_eq!((wp - wm) / (2.0 * h), t, max_relative = 1e-6);
    }

    #[test]
    fn libration_closes_after_one_period() {
        let pot = shallow();
        let well = shallow_well();
        let e = -0.05;
        let sd = shell_data(&pot, &well, e).unwrap();
        let st = flow_with_tangent(&pot, sd.q_plus, 0.0, sd.period, 1e-11).unwrap();
        assert_abs_diff_eq!(st.q, sd.q_plus, epsilon = 1e-8);
        assert_abs_diff_eq!(st.p, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(st.det_m(), 1.0, epsilon = 1e-9);
        // Euclidean action of one closed traversal: S_bar = W - E T.
        assert_relative_eq!(st.s_bar, sd.action - e * sd.period, max_relative = 1e-6);
    }
}

//! System definitions: potentials, temperatures, and the coherent-state map.
//!
//! Mass is fixed to 1 throughout; `hbar` and `k_b` are carried explicitly with
//! defaults of 1 so results are in natural units unless a caller overrides
//! them.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_HBAR: f64 = 1.0;
pub const DEFAULT_KB: f64 = 1.0;

/// Threshold below which a critical point counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Which 1D system is being modelled.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemKind {
    /// V(q) = sum_k coefficients[k] q^k, confining (even degree >= 2,
    /// positive leading coefficient).
    PolynomialWell { coefficients: Vec<f64> },
    /// Symmetric quartic with two minima at +-a where V = 0 and a barrier of
    /// height `delta_e` at q = 0:  V(q) = delta_e ((q/a)^2 - 1)^2.
    DoubleWell { delta_e: f64, a: f64 },
    /// Non-potential quadratic-in-uv Hamiltonian H = hbar omega (uv + alpha)^2.
    QuarticUv { alpha: f64, omega: f64 },
    /// Spin s in a constant field along z, level spacing hbar omega.
    SpinField { spin: f64, omega: f64 },
}

impl SystemKind {
    pub fn variant_name(&self) -> &'static str {
        match self {
            SystemKind::PolynomialWell { .. } => "polynomial_well",
            SystemKind::DoubleWell { .. } => "double_well",
            SystemKind::QuarticUv { .. } => "quartic_uv",
            SystemKind::SpinField { .. } => "spin_field",
        }
    }
}

/// A system plus the physical constants used to evaluate it.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub hbar: f64,
    pub k_b: f64,
}

impl SystemSpec {
    pub fn new(kind: SystemKind, hbar: f64, k_b: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::Domain(format!("hbar must be positive, got {hbar}")));
        }
        if !(k_b.is_finite() && k_b > 0.0) {
            return Err(Error::Domain(format!("k_b must be positive, got {k_b}")));
        }
        match &kind {
            SystemKind::PolynomialWell { coefficients } => {
                validate_confining(coefficients)?;
            }
            SystemKind::DoubleWell { delta_e, a } => {
                if !(delta_e.is_finite() && *delta_e > 0.0) {
                    return Err(Error::Domain(format!(
                        "double well barrier height must be positive, got {delta_e}"
                    )));
                }
                if !(a.is_finite() && *a > 0.0) {
                    return Err(Error::Domain(format!(
                        "double well minimum position must be positive, got {a}"
                    )));
                }
            }
            SystemKind::QuarticUv { alpha, omega } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
                }
                if !(omega.is_finite() && *omega > 0.0) {
                    return Err(Error::Domain(format!("omega must be positive, got {omega}")));
                }
            }
            SystemKind::SpinField { spin, omega } => {
                if !(omega.is_finite() && *omega > 0.0) {
                    return Err(Error::Domain(format!("omega must be positive, got {omega}")));
                }
                let two_s = 2.0 * spin;
                if !(spin.is_finite() && *spin > 0.0) || (two_s - two_s.round()).abs() > 1e-9 {
                    return Err(Error::Domain(format!(
                        "spin must be a positive half-integer, got {spin}"
                    )));
                }
            }
        }
        Ok(SystemSpec { kind, hbar, k_b })
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Result<Self> {
        Self::new(SystemKind::PolynomialWell { coefficients }, DEFAULT_HBAR, DEFAULT_KB)
    }

    pub fn double_well(delta_e: f64, a: f64) -> Result<Self> {
        Self::new(SystemKind::DoubleWell { delta_e, a }, DEFAULT_HBAR, DEFAULT_KB)
    }

    pub fn quartic_uv(alpha: f64, omega: f64) -> Result<Self> {
        Self::new(SystemKind::QuarticUv { alpha, omega }, DEFAULT_HBAR, DEFAULT_KB)
    }

    pub fn spin_field(spin: f64, omega: f64) -> Result<Self> {
        Self::new(SystemKind::SpinField { spin, omega }, DEFAULT_HBAR, DEFAULT_KB)
    }

    pub fn variant_name(&self) -> &'static str {
        self.kind.variant_name()
    }
}

fn validate_confining(coefficients: &[f64]) -> Result<()> {
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain("polynomial coefficients must be finite".into()));
    }
    let degree = trimmed_degree(coefficients);
    if degree < 2 {
        return Err(Error::Domain(format!(
            "potential must have degree >= 2, got degree {degree}"
        )));
    }
    if degree % 2 != 0 {
        return Err(Error::Domain(format!(
            "potential must have even degree to be confining, got degree {degree}"
        )));
    }
    if coefficients[degree] <= 0.0 {
        return Err(Error::Domain(format!(
            "leading coefficient must be positive, got {}",
            coefficients[degree]
        )));
    }
    Ok(())
}

fn trimmed_degree(coefficients: &[f64]) -> usize {
    let mut d = coefficients.len().saturating_sub(1);
    while d > 0 && coefficients[d] == 0.0 {
        d -= 1;
    }
    d
}

/// Polynomial potential with exact analytic derivatives.
///
/// Construction via `new` performs no confinement check so that inverted or
/// auxiliary polynomials can be represented; `build_potential` applies the
/// confining-system validation.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    coeffs: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl Potential {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        let d1 = derivative_coeffs(&coeffs);
        let d2 = derivative_coeffs(&d1);
        Potential { coeffs, d1, d2 }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// V(q) by Horner evaluation.
    /// Ascending coefficients, trailing zeros stripped.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn v(&self, q: f64) -> f64 {
        horner(&self.coeffs, q)
    }

    /// V'(q), exact coefficient differentiation.
    pub fn dv(&self, q: f64) -> f64 {
        horner(&self.d1, q)
    }

    /// V''(q), exact coefficient differentiation.
    pub fn d2v(&self, q: f64) -> f64 {
        horner(&self.d2, q)
    }

    /// All simple real roots of V', sorted ascending.
    ///
    /// Roots are located by sign changes of V' between consecutive extrema of
    /// V' (found recursively) and refined by bisection. Even-multiplicity
    /// roots produce no sign change and are not returned; `classify_equilibria`
    /// detects that situation separately and reports it as degenerate.
    pub fn critical_points(&self) -> Vec<f64> {
        real_roots(&self.d1)
    }

    /// Sign-change roots of V''; used to detect critical points of even
    /// multiplicity that bisection on V' cannot see.
    pub fn inflection_points(&self) -> Vec<f64> {
        real_roots(&self.d2)
    }
}

pub(crate) fn horner(coeffs: &[f64], q: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * q + c;
    }
    acc
}

fn derivative_coeffs(coeffs: &[f64]) -> Vec<f64> {
    if coeffs.len() <= 1 {
        return vec![0.0];
    }
    coeffs[1..]
        .iter()
        .enumerate()
        .map(|(i, c)| (i as f64 + 1.0) * c)
        .collect()
}

/// All roots lie in [-bound, bound] (Cauchy bound).
fn cauchy_bound(coeffs: &[f64]) -> f64 {
    let d = trimmed_degree(coeffs);
    let lead = coeffs[d];
    let m = coeffs[..d].iter().map(|c| (c / lead).abs()).fold(0.0, f64::max);
    1.0 + m
}

fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let d = trimmed_degree(coeffs);
    let coeffs = &coeffs[..=d];
    if d == 0 {
        return Vec::new();
    }
    if d == 1 {
        return vec![-coeffs[0] / coeffs[1]];
    }
    let bound = cauchy_bound(coeffs);
    let mut nodes = vec![-bound];
    for r in real_roots(&derivative_coeffs(coeffs)) {
        if r > -bound && r < bound {
            nodes.push(r);
        }
    }
    nodes.push(bound);
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut roots = Vec::new();
    for w in nodes.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let (flo, fhi) = (horner(coeffs, lo), horner(coeffs, hi));
        if flo == 0.0 {
            roots.push(lo);
        }
        if flo * fhi < 0.0 {
            roots.push(bisect_root(coeffs, lo, hi, flo));
        }
    }
    if horner(coeffs, bound) == 0.0 {
        roots.push(bound);
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + a.abs()));
    roots
}

fn bisect_root(coeffs: &[f64], mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fmid = horner(coeffs, mid);
        if fmid == 0.0 {
            return mid;
        }
        if flo * fmid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    0.5 * (lo + hi)
}

/// Potential record for the potential-bearing variants; `quartic_uv` and
/// `spin_field` have no configuration-space potential and are rejected.
pub fn build_potential(spec: &SystemSpec) -> Result<Potential> {
    match &spec.kind {
        SystemKind::PolynomialWell { coefficients } => {
            validate_confining(coefficients)?;
            Ok(Potential::new(coefficients.clone()))
        }
        SystemKind::DoubleWell { delta_e, a } => {
            let (de, a2) = (*delta_e, a * a);
            Ok(Potential::new(vec![de, 0.0, -2.0 * de / a2, 0.0, de / (a2 * a2)]))
        }
        other => Err(Error::UnsupportedVariant {
            op: "build_potential",
            variant: other.variant_name(),
        }),
    }
}

/// Harmonic-fit frequency sqrt(V'') at the deepest minimum of V.
pub fn fit_frequency(pot: &Potential) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None; // (V, V'')
    for q in pot.critical_points() {
        let v2 = pot.d2v(q);
        if v2.abs() < DEGENERACY_TOL {
            return Err(Error::DegenerateCriticalPoint { q, v2 });
        }
        if v2 > 0.0 {
            let v = pot.v(q);
            if best.map_or(true, |(vb, _)| v < vb) {
                best = Some((v, v2));
            }
        }
    }
    match best {
        Some((_, v2)) => Ok(v2.sqrt()),
        None => Err(Error::Domain("potential has no minimum".into())),
    }
}

/// Default coherent-state width b = sqrt(hbar / omega_fit).
pub fn default_width(pot: &Potential, hbar: f64) -> Result<f64> {
    Ok((hbar / fit_frequency(pot)?).sqrt())
}

/// Inverse temperature with its derived scales: tau = hbar beta is the
/// rotated-time interval, t = 1/(k_b beta) the absolute temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Temperature {
    pub beta: f64,
    pub tau: f64,
    pub t: f64,
}

impl Temperature {
    pub fn from_beta(beta: f64, hbar: f64, k_b: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        Ok(Temperature { beta, tau: hbar * beta, t: 1.0 / (k_b * beta) })
    }

    pub fn from_t(t: f64, hbar: f64, k_b: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Domain(format!("temperature must be positive, got {t}")));
        }
        Self::from_beta(1.0 / (k_b * t), hbar, k_b)
    }

    /// Reduced temperature k_b T / (hbar omega_ref).
    pub fn t_star(&self, omega_ref: f64, hbar: f64, k_b: f64) -> f64 {
        k_b * self.t / (hbar * omega_ref)
    }
}

/// Point in the coherent-state variables u, v with the width that produced it.
/// For real (q, p), v is the complex conjugate of u.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UVPoint {
    pub u: Complex64,
    pub v: Complex64,
    pub b: f64,
}

/// u = (q/b + i b p/hbar)/sqrt(2), v = (q/b - i b p/hbar)/sqrt(2).
pub fn uv_from_qp(q: f64, p: f64, b: f64, hbar: f64) -> Result<UVPoint> {
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::Domain(format!("width b must be positive, got {b}")));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re = q / b;
    let im = b * p / hbar;
    Ok(UVPoint {
        u: Complex64::new(re * s, im * s),
        v: Complex64::new(re * s, -im * s),
        b,
    })
}

/// Inverse of `uv_from_qp`: q = b (u + v)/sqrt(2), p = -i hbar (u - v)/(sqrt(2) b).
/// Requires v = conj(u) so that (q, p) are real.
pub fn qp_from_uv(point: &UVPoint, hbar: f64) -> Result<(f64, f64)> {
    let mismatch = (point.v - point.u.conj()).norm();
    if mismatch > 1e-9 * (1.0 + point.u.norm()) {
        return Err(Error::Domain(format!(
            "uv point is not a conjugate pair (|v - conj(u)| = {mismatch:.3e})"
        )));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q = point.b * (point.u + point.v).re * s;
    let p = hbar * (point.u - point.v).im * s / point.b;
    Ok((q, p))
}

/// Determinant of the 2x2 complex Jacobian of (q, p) -> (u, v).
///
/// The partials are du/dq = dv/dq = 1/(b sqrt2), du/dp = i b/(hbar sqrt2),
/// dv/dp = -i b/(hbar sqrt2); the determinant is -i/hbar, so its magnitude
/// times hbar is 1: the map preserves phase-space area up to the 1/hbar
/// normalization of the uv symplectic form.
pub fn uv_map_determinant(b: f64, hbar: f64) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let du_dq = Complex64::new(s / b, 0.0);
    let du_dp = Complex64::new(0.0, s * b / hbar);
    let dv_dq = Complex64::new(s / b, 0.0);
    let dv_dp = Complex64::new(0.0, -s * b / hbar);
    du_dq * dv_dp - du_dp * dv_dq
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn double_well_matches_expanded_polynomial() {
        let dw = build_potential(&SystemSpec::double_well(0.15, 5.0).unwrap()).unwrap();
        let poly = Potential::new(vec![0.15, 0.0, -2.0 * 0.15 / 25.0, 0.0, 0.15 / 625.0]);
        let mut q = -15.0;
        while q <= 15.0 {
            let (a, b) = (dw.v(q), poly.v(q));
            assert_abs_diff_eq!(a, b, epsilon = 1e-12 * (1.0 + a.abs()));
            q += 0.37;
        }
    }

    #[test]
    fn double_well_curvatures() {
        let dw = build_potential(&SystemSpec::double_well(3.0, 5.0).unwrap()).unwrap();
        // V''(+-a) = 8 dE/a^2, V''(0) = -4 dE/a^2
        assert_relative_eq!(dw.d2v(5.0), 0.96, max_relative = 1e-14);
        assert_relative_eq!(dw.d2v(-5.0), 0.96, max_relative = 1e-14);
        assert_relative_eq!(dw.d2v(0.0), -0.48, max_relative = 1e-14);
        assert_abs_diff_eq!(dw.v(5.0), 0.0, epsilon = 1e-14);
        assert_relative_eq!(dw.v(0.0), 3.0, max_relative = 1e-14);
    }

    #[test]
    fn critical_points_symmetric() {
        let dw = build_potential(&SystemSpec::double_well(3.0, 5.0).unwrap()).unwrap();
        let crits = dw.critical_points();
        assert_eq!(crits.len(), 3);
        assert_abs_diff_eq!(crits[0], -5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(crits[1], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(crits[2], 5.0, epsilon = 1e-9);
    }

    #[test]
    fn critical_points_asymmetric() {
        // V = (q^2-1)^2 + 0.2 q; reference roots from an independent solver.
        let pot = Potential::new(vec![1.0, 0.2, -2.0, 0.0, 1.0]);
        let crits = pot.critical_points();
        assert_eq!(crits.len(), 3);
        assert_abs_diff_eq!(crits[0], -1.024120300215050, epsilon = 1e-10);
        assert_abs_diff_eq!(crits[1], 0.050125946983773, epsilon = 1e-10);
        assert_abs_diff_eq!(crits[2], 0.973994353231278, epsilon = 1e-10);
    }

    #[test]
    fn confining_validation() {
        assert!(SystemSpec::polynomial(vec![0.0, 0.0, 0.5]).is_ok());
        assert!(SystemSpec::polynomial(vec![0.0, 1.0]).is_err()); // degree 1
        assert!(SystemSpec::polynomial(vec![0.0, 0.0, 0.0, 1.0]).is_err()); // odd
        assert!(SystemSpec::polynomial(vec![0.0, 0.0, -1.0]).is_err()); // sign
        assert!(SystemSpec::double_well(-1.0, 5.0).is_err());
        assert!(SystemSpec::double_well(3.0, 0.0).is_err());
    }

    #[test]
    fn spin_half_integer_validation() {
        assert!(SystemSpec::spin_field(0.5, 1.0).is_ok());
        assert!(SystemSpec::spin_field(1.5, 1.0).is_ok());
        assert!(SystemSpec::spin_field(10.0, 1.0).is_ok());
        assert!(SystemSpec::spin_field(0.7, 1.0).is_err());
        assert!(SystemSpec::spin_field(-0.5, 1.0).is_err());
    }

    #[test]
    fn non_potential_variants_rejected() {
        let uv = SystemSpec::quartic_uv(8.0, 1.0).unwrap();
        match build_potential(&uv) {
            Err(Error::UnsupportedVariant { variant, .. }) => assert_eq!(variant, "quartic_uv"),
            other => panic!("expected unsupported-variant error, got {other:?}"),
        }
    }

    #[test]
    fn temperature_scales() {
        let t = Temperature::from_beta(2.0, 0.5, 2.0).unwrap();
        assert_relative_eq!(t.tau, 1.0, max_relative = 1e-15);
        assert_relative_eq!(t.t, 0.25, max_relative = 1e-15);
        // t_star for omega_ref = 1: k_b T/(hbar omega) = 0.5/0.5 = 1
        assert_relative_eq!(t.t_star(1.0, 0.5, 2.0), 1.0, max_relative = 1e-15);
        assert!(Temperature::from_beta(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn uv_reference_point() {
        // q = b sqrt2, p = 0 -> u = v = 1
        let b = 1.7;
        let pt = uv_from_qp(b * std::f64::consts::SQRT_2, 0.0, b, 1.0).unwrap();
        assert_abs_diff_eq!(pt.u.re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pt.u.im, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pt.v.re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn uv_round_trip() {
        for &(q, p, b, hbar) in &[
            (0.3, -1.2, 1.0, 1.0),
            (-2.5, 0.7, 0.4, 1.0),
            (5.0, 3.0, 2.0, 0.5),
            (1e-6, -1e-6, 1.3, 2.0),
        ] {
            let pt = uv_from_qp(q, p, b, hbar).unwrap();
            let (q2, p2) = qp_from_uv(&pt, hbar).unwrap();
            assert_abs_diff_eq!(q, q2, epsilon = 1e-12 * (1.0 + q.abs()));
            assert_abs_diff_eq!(p, p2, epsilon = 1e-12 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn uv_jacobian_unit_area() {
        for &(b, hbar) in &[(1.0, 1.0), (0.3, 1.0), (2.0, 0.5), (1.7, 3.0)] {
            let det = uv_map_determinant(b, hbar);
            assert_relative_eq!(det.norm() * hbar, 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn fit_frequency_and_width() {
        let dw = build_potential(&SystemSpec::double_well(3.0, 5.0).unwrap()).unwrap();
        assert_relative_eq!(fit_frequency(&dw).unwrap(), 0.96f64.sqrt(), max_relative = 1e-9);
        assert_relative_eq!(
            default_width(&dw, 1.0).unwrap(),
            (1.0 / 0.96f64.sqrt()).sqrt(),
            max_relative = 1e-9
        );
        let harm = Potential::new(vec![0.0, 0.0, 0.5]);
        assert_relative_eq!(fit_frequency(&harm).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn deepest_minimum_selects_frequency() {
        // V = (q^2-1)^2 + 0.2 q: left minimum is deeper, V'' there = 8.5858686...
        let pot = Potential::new(vec![1.0, 0.2, -2.0, 0.0, 1.0]);
        assert_relative_eq!(
            fit_frequency(&pot).unwrap(),
            8.585868671750777f64.sqrt(),
            max_relative = 1e-9
        );
    }
}

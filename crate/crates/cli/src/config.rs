//! Configuration document parsing and validation. Every failure names the
//! exact key path that caused it; unknown keys anywhere are rejected.

use serde_json::{Map, Value};
use ztrace_core::{
    build_potential, fit_frequency, AmplitudeMode, LibrationOpts, SystemKind, SystemSpec,
    ZMethod, DEFAULT_HBAR, DEFAULT_KB, DEFAULT_TRM_FLOOR,
};

#[derive(Debug, Clone, Copy)]
pub struct SweepGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub log_scale: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectrumOpts {
    pub levels: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: SystemSpec,
    pub sweep: SweepGrid,
    pub methods: Vec<ZMethod>,
    pub orbit_opts: LibrationOpts,
    pub spectrum: SpectrumOpts,
    pub output: Option<String>,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn as_obj<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, String> {
    v.as_object().ok_or_else(|| format!("{path}: expected an object"))
}

fn reject_unknown(map: &Map<String, Value>, path: &str, allowed: &[&str]) -> Result<(), String> {
    for k in map.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(format!("{}: unknown key", join(path, k)));
        }
    }
    Ok(())
}

fn opt_f64(map: &Map<String, Value>, path: &str, key: &str) -> Result<Option<f64>, String> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => match v.as_f64() {
            Some(x) => Ok(Some(x)),
            None => Err(format!("{}: expected a number", join(path, key))),
        },
    }
}

fn req_f64(map: &Map<String, Value>, path: &str, key: &str) -> Result<f64, String> {
    opt_f64(map, path, key)?
        .ok_or_else(|| format!("{}: missing required key", join(path, key)))
}

fn positive(x: f64, path: &str, key: &str) -> Result<f64, String> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(format!("{}: must be positive, got {x}", join(path, key)))
    }
}

fn opt_usize(map: &Map<String, Value>, path: &str, key: &str) -> Result<Option<usize>, String> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => match v.as_u64() {
            Some(x) => Ok(Some(x as usize)),
            None => Err(format!("{}: expected a non-negative integer", join(path, key))),
        },
    }
}

fn req_str<'a>(map: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a str, String> {
    match map.get(key) {
        None => Err(format!("{}: missing required key", join(path, key))),
        Some(v) => v
            .as_str()
            .ok_or_else(|| format!("{}: expected a string", join(path, key))),
    }
}

fn parse_system(root: &Map<String, Value>) -> Result<SystemSpec, String> {
    let sys_val = root
        .get("system")
        .ok_or_else(|| "system: missing required block".to_string())?;
    let sys = as_obj(sys_val, "system")?;
    let kind_name = req_str(sys, "system", "kind")?;
    let kind = match kind_name {
        "polynomial_well" => {
            reject_unknown(sys, "system", &["kind", "coefficients", "hbar", "k_b"])?;
            let arr = sys
                .get("coefficients")
                .ok_or_else(|| "system.coefficients: missing required key".to_string())?
                .as_array()
                .ok_or_else(|| "system.coefficients: expected an array of numbers".to_string())?;
            let mut coefficients = Vec::with_capacity(arr.len());
            for (i, v) in arr.iter().enumerate() {
                coefficients.push(v.as_f64().ok_or_else(|| {
                    format!("system.coefficients[{i}]: expected a number")
                })?);
            }
            if coefficients.is_empty() {
                return Err("system.coefficients: must not be empty".into());
            }
            SystemKind::PolynomialWell { coefficients }
        }
        "double_well" => {
            reject_unknown(sys, "system", &["kind", "delta_e", "a", "hbar", "k_b"])?;
            let delta_e = positive(req_f64(sys, "system", "delta_e")?, "system", "delta_e")?;
            let a = positive(req_f64(sys, "system", "a")?, "system", "a")?;
            SystemKind::DoubleWell { delta_e, a }
        }
        "quartic_uv" => {
            reject_unknown(sys, "system", &["kind", "alpha", "omega", "hbar", "k_b"])?;
            let alpha = positive(req_f64(sys, "system", "alpha")?, "system", "alpha")?;
            let omega = positive(req_f64(sys, "system", "omega")?, "system", "omega")?;
            SystemKind::QuarticUv { alpha, omega }
        }
        "spin_field" => {
            reject_unknown(sys, "system", &["kind", "spin", "omega", "hbar", "k_b"])?;
            let spin = positive(req_f64(sys, "system", "spin")?, "system", "spin")?;
            let two_s = 2.0 * spin;
            if (two_s - two_s.round()).abs() > 1e-9 {
                return Err(format!(
                    "system.spin: must be an integer or half-integer, got {spin}"
                ));
            }
            let omega = positive(req_f64(sys, "system", "omega")?, "system", "omega")?;
            SystemKind::SpinField { spin, omega }
        }
        other => {
            return Err(format!(
                "system.kind: unknown value \"{other}\" (expected polynomial_well, \
                 double_well, quartic_uv, or spin_field)"
            ))
        }
    };
    let hbar = match opt_f64(sys, "system", "hbar")? {
        Some(x) => positive(x, "system", "hbar")?,
        None => DEFAULT_HBAR,
    };
    let k_b = match opt_f64(sys, "system", "k_b")? {
        Some(x) => positive(x, "system", "k_b")?,
        None => DEFAULT_KB,
    };
    let spec = SystemSpec::new(kind, hbar, k_b).map_err(|e| format!("system: {e}"))?;
    // polynomial systems must also yield a reference frequency: the sweep
    // reports reduced temperatures, which need a quadratic minimum
    if let SystemKind::PolynomialWell { .. } | SystemKind::DoubleWell { .. } = spec.kind {
        let pot = build_potential(&spec).map_err(|e| format!("system.coefficients: {e}"))?;
        fit_frequency(&pot).map_err(|e| format!("system.coefficients: {e}"))?;
    }
    Ok(spec)
}

fn parse_sweep(root: &Map<String, Value>) -> Result<SweepGrid, String> {
    let sweep_val = root
        .get("sweep")
        .ok_or_else(|| "sweep: missing required block".to_string())?;
    let sweep = as_obj(sweep_val, "sweep")?;
    reject_unknown(sweep, "sweep", &["t_min", "t_max", "points", "scale"])?;
    let t_min = positive(req_f64(sweep, "sweep", "t_min")?, "sweep", "t_min")?;
    let t_max = req_f64(sweep, "sweep", "t_max")?;
    if !(t_max > t_min) {
        return Err(format!(
            "sweep.t_max: must exceed sweep.t_min = {t_min}, got {t_max}"
        ));
    }
    let points = opt_usize(sweep, "sweep", "points")?
        .ok_or_else(|| "sweep.points: missing required key".to_string())?;
    if points < 2 {
        return Err(format!("sweep.points: need at least 2, got {points}"));
    }
    let log_scale = match req_str(sweep, "sweep", "scale")? {
        "linear" => false,
        "log" => true,
        other => {
            return Err(format!(
                "sweep.scale: expected \"linear\" or \"log\", got \"{other}\""
            ))
        }
    };
    Ok(SweepGrid { t_min, t_max, points, log_scale })
}

fn allowed_methods(kind: &SystemKind) -> &'static [ZMethod] {
    match kind {
        SystemKind::PolynomialWell { .. } | SystemKind::DoubleWell { .. } => {
            &[ZMethod::Exact, ZMethod::Classical, ZMethod::ScHarmonic, ZMethod::ScTrace]
        }
        SystemKind::QuarticUv { .. } => {
            &[ZMethod::Exact, ZMethod::Classical, ZMethod::ScHarmonic, ZMethod::ScHigher]
        }
        SystemKind::SpinField { .. } => &[ZMethod::Exact, ZMethod::ScTrace],
    }
}

fn parse_methods(root: &Map<String, Value>, kind: &SystemKind) -> Result<Vec<ZMethod>, String> {
    let arr = root
        .get("methods")
        .ok_or_else(|| "methods: missing required key".to_string())?
        .as_array()
        .ok_or_else(|| "methods: expected an array of method names".to_string())?;
    if arr.is_empty() {
        return Err("methods: must not be empty".into());
    }
    let allowed = allowed_methods(kind);
    let mut methods = Vec::with_capacity(arr.len());
    for (i, v) in arr.iter().enumerate() {
        let name = v
            .as_str()
            .ok_or_else(|| format!("methods[{i}]: expected a string"))?;
        let m = ZMethod::parse(name).ok_or_else(|| {
            format!(
                "methods[{i}]: unknown method \"{name}\" (expected exact, classical, \
                 sc_harmonic, sc_trace, or sc_higher)"
            )
        })?;
        if !allowed.contains(&m) {
            return Err(format!(
                "methods[{i}]: \"{name}\" is not available for system kind \"{}\"",
                kind.variant_name()
            ));
        }
        if methods.contains(&m) {
            return Err(format!("methods[{i}]: duplicate entry \"{name}\""));
        }
        methods.push(m);
    }
    Ok(methods)
}

fn parse_orbits(root: &Map<String, Value>) -> Result<LibrationOpts, String> {
    let mut opts = LibrationOpts::default();
    let Some(val) = root.get("orbits") else {
        return Ok(opts);
    };
    let map = as_obj(val, "orbits")?;
    reject_unknown(map, "orbits", &["n_max", "trm_mode", "trm_floor"])?;
    if let Some(n) = opt_usize(map, "orbits", "n_max")? {
        if n < 1 {
            return Err(format!("orbits.n_max: need at least 1, got {n}"));
        }
        opts.n_max = n as u32;
    }
    let floor = match opt_f64(map, "orbits", "trm_floor")? {
        Some(x) => positive(x, "orbits", "trm_floor")?,
        None => DEFAULT_TRM_FLOOR,
    };
    opts.amplitude = match map.get("trm_mode").map(|v| v.as_str()) {
        None => AmplitudeMode::Floored(floor),
        Some(Some("floored")) => AmplitudeMode::Floored(floor),
        Some(Some("literal")) => AmplitudeMode::Literal,
        Some(Some(other)) => {
            return Err(format!(
                "orbits.trm_mode: expected \"literal\" or \"floored\", got \"{other}\""
            ))
        }
        Some(None) => return Err("orbits.trm_mode: expected a string".into()),
    };
    Ok(opts)
}

fn parse_spectrum(root: &Map<String, Value>) -> Result<SpectrumOpts, String> {
    let mut out = SpectrumOpts { levels: 24, accuracy: 1e-8 };
    let Some(val) = root.get("spectrum") else {
        return Ok(out);
    };
    let map = as_obj(val, "spectrum")?;
    reject_unknown(map, "spectrum", &["levels", "accuracy"])?;
    if let Some(n) = opt_usize(map, "spectrum", "levels")? {
        if n < 1 {
            return Err(format!("spectrum.levels: need at least 1, got {n}"));
        }
        out.levels = n;
    }
    if let Some(a) = opt_f64(map, "spectrum", "accuracy")? {
        out.accuracy = positive(a, "spectrum", "accuracy")?;
    }
    Ok(out)
}

pub fn parse_config(text: &str) -> Result<RunConfig, String> {
    let root_val: Value =
        serde_json::from_str(text).map_err(|e| format!("config: invalid syntax: {e}"))?;
    let root = as_obj(&root_val, "config")?;
    reject_unknown(
        root,
        "",
        &["system", "sweep", "methods", "orbits", "spectrum", "output"],
    )?;
    let spec = parse_system(root)?;
    let sweep = parse_sweep(root)?;
    let methods = parse_methods(root, &spec.kind)?;
    let orbit_opts = parse_orbits(root)?;
    let spectrum = parse_spectrum(root)?;
    let output = match root.get("output") {
        None => None,
        Some(v) => Some(
            v.as_str()
                .ok_or_else(|| "output: expected a string path".to_string())?
                .to_string(),
        ),
    };
    Ok(RunConfig { spec, sweep, methods, orbit_opts, spectrum, output })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "system": {"kind": "double_well", "delta_e": 0.15, "a": 5.0},
        "sweep": {"t_min": 0.01, "t_max": 0.1, "points": 5, "scale": "log"},
        "methods": ["exact", "sc_trace"]
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.orbit_opts.n_max, 3);
        assert!(matches!(cfg.orbit_opts.amplitude, AmplitudeMode::Floored(f) if f == 1e-6));
        assert_eq!(cfg.spectrum.levels, 24);
        assert_eq!(cfg.methods, vec![ZMethod::Exact, ZMethod::ScTrace]);
        assert_eq!(cfg.spec.hbar, 1.0);
        assert!(cfg.sweep.log_scale);
        assert!(cfg.output.is_none());
    }

    #[test]
    fn negative_barrier_names_the_key() {
        let text = MINIMAL.replace("0.15", "-1.0");
        let err = parse_config(&text).unwrap_err();
        assert!(err.contains("system.delta_e"), "{err}");
    }

    #[test]
    fn higher_order_method_rejected_for_double_well() {
        let text = MINIMAL.replace("\"sc_trace\"", "\"sc_higher\"");
        let err = parse_config(&text).unwrap_err();
        assert!(err.contains("sc_higher") && err.contains("double_well"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_paths() {
        let text = MINIMAL.replace("\"a\": 5.0", "\"a\": 5.0, \"wdith\": 2.0");
        let err = parse_config(&text).unwrap_err();
        assert!(err.contains("system.wdith"), "{err}");
        let text = MINIMAL.replacen("\"sweep\"", "\"sweeps\"", 1);
        let err = parse_config(&text).unwrap_err();
        assert!(err.contains("sweeps"), "{err}");
    }

    #[test]
    fn duplicate_and_unknown_methods_fail() {
        let text = MINIMAL.replace("\"sc_trace\"", "\"exact\"");
        let err = parse_config(&text).unwrap_err();
        assert!(err.contains("duplicate"), "{err}");
        let text = MINIMAL.replace("\"sc_trace\"", "\"sc_magic\"");
        let err = parse_config(&text).unwrap_err();
        assert!(err.contains("sc_magic"), "{err}");
    }

    #[test]
    fn sweep_invariants_enforced() {
        let text = MINIMAL.replace("\"points\": 5", "\"points\": 1");
        assert!(parse_config(&text).unwrap_err().contains("sweep.points"));
        let text = MINIMAL.replace("\"t_max\": 0.1", "\"t_max\": 0.005");
        assert!(parse_config(&text).unwrap_err().contains("sweep.t_max"));
        let text = MINIMAL.replace("\"log\"", "\"geometric\"");
        assert!(parse_config(&text).unwrap_err().contains("sweep.scale"));
    }

    #[test]
    fn spin_validation() {
        let text = r#"{
            "system": {"kind": "spin_field", "spin": 0.7, "omega": 1.0},
            "sweep": {"t_min": 0.5, "t_max": 2.0, "points": 3, "scale": "linear"},
            "methods": ["exact"]
        }"#;
        let err = parse_config(text).unwrap_err();
        assert!(err.contains("system.spin"), "{err}");
        let ok = text.replace("0.7", "1.5");
        assert!(parse_config(&ok).is_ok());
    }

    #[test]
    fn orbit_options_parse() {
        let text = MINIMAL.replace(
            "\"methods\": [\"exact\", \"sc_trace\"]",
            "\"methods\": [\"sc_trace\"], \"orbits\": {\"n_max\": 5, \"trm_mode\": \"literal\"}",
        );
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.orbit_opts.n_max, 5);
        assert!(matches!(cfg.orbit_opts.amplitude, AmplitudeMode::Literal));
        let bad = text.replace("\"literal\"", "\"fuzzy\"");
        assert!(parse_config(&bad).unwrap_err().contains("orbits.trm_mode"));
    }

    #[test]
    fn malformed_syntax_is_a_config_error() {
        let err = parse_config("{not json").unwrap_err();
        assert!(err.contains("invalid syntax"), "{err}");
    }

    #[test]
    fn degenerate_polynomial_minimum_rejected() {
        // pure quartic: V'' = 0 at the only minimum, no reference frequency
        let text = r#"{
            "system": {"kind": "polynomial_well", "coefficients": [0.0, 0.0, 0.0, 0.0, 1.0]},
            "sweep": {"t_min": 0.5, "t_max": 2.0, "points": 3, "scale": "linear"},
            "methods": ["exact"]
        }"#;
        let err = parse_config(text).unwrap_err();
        assert!(err.contains("system.coefficients"), "{err}");
    }
}

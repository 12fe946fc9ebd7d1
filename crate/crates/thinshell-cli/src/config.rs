//! Run configuration: one JSON document that CLI flags and config files
//! both compile into, plus the compiled (validated) form the runners
//! consume.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use thinshell::fields::TangentField;
use thinshell::geometry::{self, Chart};
use thinshell::sample;
use thinshell::shell::BoundaryProfile;

/// Configuration problem, annotated with a JSON pointer into the config
/// document.
#[derive(Debug, Clone, Error)]
#[error("config error at `{pointer}`: {message}")]
pub struct ConfigError {
    pub pointer: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(pointer: impl Into<String>, message: impl Into<String>) -> ConfigError {
        ConfigError {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    /// Graph surfaces: height expression in `u1, u2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    /// Custom surfaces: `n+1` ambient component expressions in `u1..un`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<[f64; 2]>>,
    /// Custom surfaces: seeded random surface instead of expressions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for SurfaceSpec {
    fn default() -> Self {
        SurfaceSpec {
            name: "sphere".into(),
            params: BTreeMap::new(),
            f: None,
            components: None,
            domain: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum FieldSpec {
    Expr { expr: Vec<String> },
    Random { random: RandomFieldSpec },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RandomFieldSpec {
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum SampleSpec {
    Points { points: Vec<Vec<f64>> },
    Sobol { sobol: SobolSpec },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SobolSpec {
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec::Sobol {
            sobol: SobolSpec {
                count: 10,
                seed: None,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default = "default_format")]
    pub format: String,
}

fn default_format() -> String {
    "json".into()
}

fn default_margin() -> f64 {
    0.05
}

fn default_seed() -> u64 {
    42
}

fn default_profiles() -> Vec<String> {
    vec!["slip".into(), "hodge".into(), "alpha:0.5".into()]
}

/// The whole run configuration. CLI flags are shorthand that compiles
/// into this document (`--dump-config` prints it).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub surface: SurfaceSpec,
    #[serde(default)]
    pub fields: Vec<FieldSpec>,
    #[serde(default = "default_profiles")]
    pub profiles: Vec<String>,
    #[serde(default)]
    pub samples: SampleSpec,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Restrict the verify run to these check ids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<String>>,
    /// Alpha grid for the operator sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<Vec<f64>>,
    /// Operators for the operator sweep (alpha, deformation, hodge,
    /// bochner).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operators: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            surface: SurfaceSpec::default(),
            fields: Vec::new(),
            profiles: default_profiles(),
            samples: SampleSpec::default(),
            margin: default_margin(),
            tolerances: BTreeMap::new(),
            seed: default_seed(),
            checks: None,
            alpha_grid: None,
            operators: None,
            output: None,
        }
    }
}

/// Default tolerance per check id; overridable via the `tolerances`
/// table or `--tol.<check>=<value>`. Order-type entries (`*_order*`)
/// are thresholds on observed convergence orders rather than residuals.
pub const DEFAULT_TOLERANCES: &[(&str, f64)] = &[
    ("gauss_identity", 1e-8),
    ("shape_self_adjoint", 1e-10),
    ("metric_inverse", 1e-12),
    ("bianchi", 1e-9),
    ("shape_radial", 1e-6),
    ("metric_expansion_order", 2.8),
    ("christoffel_table", 1e-9),
    ("fermi_block", 1e-12),
    ("offset_consistency", 1e-12),
    ("weitzenbock", 1e-7),
    ("endpoint_collapse", 1e-12),
    ("extrinsic_residual", 1e-12),
    ("linearity", 1e-12),
    ("anisotropy_min_gap", 1e-4),
    ("anisotropy_umbilic", 1e-10),
    ("decomposition", 1e-7),
    ("slip_limit", 1e-7),
    ("hodge_limit", 1e-7),
    ("alpha_family", 1e-7),
    ("f_rad_slip", 0.0),
    ("f_rad_hodge", 1e-9),
    ("f_rad_alpha", 1e-9),
    ("stress_slip", 1e-10),
    ("radial_constancy", 1e-10),
    ("radial_trace_consistency", 1e-6),
    ("tangential_trace_consistency", 1e-6),
    ("oracle_equivalence", 1e-4),
    ("oracle_order_deviation", 0.2),
];

#[derive(Debug, Clone)]
pub struct ToleranceTable {
    map: BTreeMap<String, f64>,
}

impl ToleranceTable {
    fn with_overrides(overrides: &BTreeMap<String, f64>) -> Result<ToleranceTable, ConfigError> {
        let mut map: BTreeMap<String, f64> = DEFAULT_TOLERANCES
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        for (key, value) in overrides {
            if !map.contains_key(key) {
                return Err(ConfigError::new(
                    format!("/tolerances/{key}"),
                    format!("unknown check id (known: {})", known_checks().join(", ")),
                ));
            }
            if !value.is_finite() || *value < 0.0 {
                return Err(ConfigError::new(
                    format!("/tolerances/{key}"),
                    "tolerance must be a finite non-negative number",
                ));
            }
            map.insert(key.clone(), *value);
        }
        Ok(ToleranceTable { map })
    }

    pub fn get(&self, check: &str) -> f64 {
        *self
            .map
            .get(check)
            .unwrap_or_else(|| panic!("unknown tolerance key {check}"))
    }

    pub fn try_get(&self, check: &str) -> Option<f64> {
        self.map.get(check).copied()
    }
}

/// Tolerance keys (the valid names in the `tolerances` table).
pub fn known_checks() -> Vec<&'static str> {
    DEFAULT_TOLERANCES.iter().map(|(k, _)| *k).collect()
}

/// Check ids accepted by the `checks` filter. The anisotropy check has
/// two tolerance keys, so the id sets differ slightly.
pub fn known_check_ids() -> Vec<&'static str> {
    let mut ids: Vec<&'static str> = DEFAULT_TOLERANCES
        .iter()
        .map(|(k, _)| *k)
        .filter(|k| !k.starts_with("anisotropy_"))
        .collect();
    ids.push("anisotropy");
    ids.sort_unstable();
    ids
}

#[derive(Debug, Clone)]
pub struct CompiledField {
    pub label: String,
    pub field: TangentField,
}

/// Validated, executable form of a [`RunConfig`].
#[derive(Debug)]
pub struct CompiledConfig {
    pub document: RunConfig,
    pub chart: Arc<Chart>,
    pub surface_label: String,
    pub fields: Vec<CompiledField>,
    pub profiles: Vec<BoundaryProfile>,
    pub points: Vec<Vec<f64>>,
    pub seed: u64,
    pub margin: f64,
    pub tolerances: ToleranceTable,
    pub checks: Option<Vec<String>>,
    /// SHA-256 of the canonical config document.
    pub config_hash: String,
}

impl CompiledConfig {
    pub fn check_enabled(&self, id: &str) -> bool {
        match &self.checks {
            None => true,
            Some(list) => list.iter().any(|c| c == id),
        }
    }
}

pub fn parse_profile(text: &str, pointer: &str) -> Result<BoundaryProfile, ConfigError> {
    match text {
        "slip" => Ok(BoundaryProfile::Slip),
        "hodge" => Ok(BoundaryProfile::Hodge),
        other => {
            if let Some(rest) = other.strip_prefix("alpha:") {
                let alpha: f64 = rest.parse().map_err(|_| {
                    ConfigError::new(pointer, format!("invalid alpha value `{rest}`"))
                })?;
                if !alpha.is_finite() {
                    return Err(ConfigError::new(pointer, "alpha must be finite"));
                }
                if !thinshell::fields::alpha_in_range(alpha) {
                    eprintln!("warning: alpha = {alpha} lies outside [0, 1]");
                }
                Ok(BoundaryProfile::Alpha(alpha))
            } else {
                Err(ConfigError::new(
                    pointer,
                    format!("unknown profile `{other}` (expected slip | hodge | alpha:<value>)"),
                ))
            }
        }
    }
}

fn param(spec: &SurfaceSpec, key: &str, default: f64) -> f64 {
    spec.params.get(key).copied().unwrap_or(default)
}

fn build_surface(spec: &SurfaceSpec) -> Result<(Arc<Chart>, String), ConfigError> {
    let geo_err = |e: geometry::GeometryError| ConfigError::new("/surface", e.to_string());
    let domain = spec
        .domain
        .as_ref()
        .map(|d| d.iter().map(|&[lo, hi]| (lo, hi)).collect::<Vec<_>>());
    match spec.name.as_str() {
        "sphere" => {
            let radius = param(spec, "R", 1.0);
            let chart = geometry::sphere(radius).map_err(geo_err)?;
            Ok((Arc::new(chart), format!("sphere:R={radius}")))
        }
        "ellipsoid" => {
            let (a, b, c) = (
                param(spec, "a", 1.0),
                param(spec, "b", 1.3),
                param(spec, "c", 2.0),
            );
            let chart = geometry::ellipsoid(a, b, c).map_err(geo_err)?;
            Ok((Arc::new(chart), format!("ellipsoid:a={a};b={b};c={c}")))
        }
        "torus" => {
            let (major, minor) = (param(spec, "R", 2.0), param(spec, "r", 0.7));
            let chart = geometry::torus(major, minor).map_err(geo_err)?;
            Ok((Arc::new(chart), format!("torus:R={major};r={minor}")))
        }
        "graph" => {
            let source = spec
                .f
                .as_ref()
                .ok_or_else(|| ConfigError::new("/surface/f", "graph surface needs `f`"))?;
            let chart = geometry::graph_expr(source, domain)
                .map_err(|e| ConfigError::new("/surface/f", e.to_string()))?;
            Ok((Arc::new(chart), format!("graph:f={source}")))
        }
        "custom" => {
            if let Some(seed) = spec.seed {
                return Ok((
                    Arc::new(geometry::random_custom(seed)),
                    format!("custom:seed={seed}"),
                ));
            }
            let components = spec.components.as_ref().ok_or_else(|| {
                ConfigError::new(
                    "/surface/components",
                    "custom surface needs `components` (or `seed`)",
                )
            })?;
            let domain = domain.ok_or_else(|| {
                ConfigError::new("/surface/domain", "custom surface needs `domain`")
            })?;
            let chart = geometry::custom(components, domain)
                .map_err(|e| ConfigError::new("/surface/components", e.to_string()))?;
            Ok((Arc::new(chart), "custom".to_string()))
        }
        other => {
            let suggestion = suggest(other, &["sphere", "ellipsoid", "torus", "graph", "custom"]);
            Err(ConfigError::new(
                "/surface/name",
                match suggestion {
                    Some(s) => format!("unknown surface `{other}` (did you mean `{s}`?)"),
                    None => format!("unknown surface `{other}`"),
                },
            ))
        }
    }
}

/// Closest catalog name by edit distance, if anything is close enough
/// to be a plausible typo.
pub fn suggest<'a>(input: &str, candidates: &[&'a str]) -> Option<&'a str> {
    candidates
        .iter()
        .map(|c| (levenshtein(input, c), *c))
        .min()
        .filter(|(d, _)| *d <= 3)
        .map(|(_, c)| c)
}

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut prev = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = if ca == cb { 0 } else { 1 };
            let next = (prev + cost).min(row[j] + 1).min(row[j + 1] + 1);
            prev = row[j + 1];
            row[j + 1] = next;
        }
    }
    row[b.len()]
}

pub fn compile(document: &RunConfig) -> Result<CompiledConfig, ConfigError> {
    let (chart, surface_label) = build_surface(&document.surface)?;
    let dim = chart.dim();

    let mut profiles = Vec::new();
    for (i, text) in document.profiles.iter().enumerate() {
        profiles.push(parse_profile(text, &format!("/profiles/{i}"))?);
    }
    if profiles.is_empty() {
        return Err(ConfigError::new("/profiles", "at least one profile"));
    }

    let field_specs = if document.fields.is_empty() {
        vec![FieldSpec::Random {
            random: RandomFieldSpec {
                count: 3,
                seed: None,
            },
        }]
    } else {
        document.fields.clone()
    };
    let mut fields = Vec::new();
    for (i, spec) in field_specs.iter().enumerate() {
        match spec {
            FieldSpec::Expr { expr } => {
                if expr.len() != dim {
                    return Err(ConfigError::new(
                        format!("/fields/{i}/expr"),
                        format!("field needs {dim} components, got {}", expr.len()),
                    ));
                }
                let field = TangentField::from_exprs(expr)
                    .map_err(|e| ConfigError::new(format!("/fields/{i}/expr"), e.to_string()))?;
                fields.push(CompiledField {
                    label: format!("expr:{}", expr.join(";")),
                    field,
                });
            }
            FieldSpec::Random { random } => {
                let seed = random.seed.unwrap_or(document.seed);
                if random.count == 0 {
                    return Err(ConfigError::new(
                        format!("/fields/{i}/random/count"),
                        "need at least one random field",
                    ));
                }
                for (k, field) in TangentField::random_set(dim, random.count, seed)
                    .into_iter()
                    .enumerate()
                {
                    fields.push(CompiledField {
                        label: format!("random:seed={seed}#{k}"),
                        field,
                    });
                }
            }
        }
    }

    if !(0.0..0.5).contains(&document.margin) {
        return Err(ConfigError::new("/margin", "margin must be in [0, 0.5)"));
    }
    let points = match &document.samples {
        SampleSpec::Points { points } => {
            for (i, p) in points.iter().enumerate() {
                if p.len() != dim {
                    return Err(ConfigError::new(
                        format!("/samples/points/{i}"),
                        format!("point needs {dim} coordinates, got {}", p.len()),
                    ));
                }
                if !chart.contains(p, document.margin) {
                    return Err(ConfigError::new(
                        format!("/samples/points/{i}"),
                        format!(
                            "point {p:?} is not interior to the chart domain at margin {}",
                            document.margin
                        ),
                    ));
                }
            }
            points.clone()
        }
        SampleSpec::Sobol { sobol } => {
            if sobol.count == 0 {
                return Err(ConfigError::new("/samples/sobol/count", "need points"));
            }
            let seed = sobol.seed.unwrap_or(document.seed);
            sample::sample_interior(&chart, sobol.count, seed, document.margin)
        }
    };

    if let Some(checks) = &document.checks {
        for (i, id) in checks.iter().enumerate() {
            if !known_check_ids().contains(&id.as_str()) {
                let suggestion = suggest(id, &known_check_ids());
                return Err(ConfigError::new(
                    format!("/checks/{i}"),
                    match suggestion {
                        Some(s) => format!("unknown check `{id}` (did you mean `{s}`?)"),
                        None => format!("unknown check `{id}`"),
                    },
                ));
            }
        }
    }

    if let Some(grid) = &document.alpha_grid {
        for (i, a) in grid.iter().enumerate() {
            if !a.is_finite() {
                return Err(ConfigError::new(
                    format!("/alpha_grid/{i}"),
                    "alpha must be finite",
                ));
            }
        }
    }

    let tolerances = ToleranceTable::with_overrides(&document.tolerances)?;
    let canonical = serde_json::to_vec(document).expect("config serializes");
    let config_hash: String = Sha256::digest(&canonical)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();

    Ok(CompiledConfig {
        document: document.clone(),
        chart,
        surface_label,
        fields,
        profiles,
        points,
        seed: document.seed,
        margin: document.margin,
        tolerances,
        checks: document.checks.clone(),
        config_hash,
    })
}

// ---------------------------------------------------------------------------
// CLI shorthand parsing
// ---------------------------------------------------------------------------

/// `name:key=val,key=val` → [`SurfaceSpec`]. The graph surface's `f`
/// value is taken verbatim after `f=` (expressions contain no commas).
pub fn parse_surface_shorthand(text: &str) -> Result<SurfaceSpec, ConfigError> {
    let pointer = "/surface";
    let (name, rest) = match text.split_once(':') {
        Some((n, r)) => (n, Some(r)),
        None => (text, None),
    };
    let mut spec = SurfaceSpec {
        name: name.to_string(),
        ..SurfaceSpec::default()
    };
    if let Some(rest) = rest {
        if name == "graph" {
            let f = rest
                .strip_prefix("f=")
                .ok_or_else(|| ConfigError::new(pointer, "graph shorthand is graph:f=<expr>"))?;
            spec.f = Some(f.to_string());
            return Ok(spec);
        }
        for pair in rest.split(',') {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                ConfigError::new(pointer, format!("expected key=value, got `{pair}`"))
            })?;
            if key == "seed" {
                let seed: u64 = value
                    .parse()
                    .map_err(|_| ConfigError::new(pointer, format!("invalid seed `{value}`")))?;
                spec.seed = Some(seed);
            } else {
                let value: f64 = value.parse().map_err(|_| {
                    ConfigError::new(pointer, format!("invalid number `{value}` for `{key}`"))
                })?;
                spec.params.insert(key.to_string(), value);
            }
        }
    }
    Ok(spec)
}

/// `random:count=5,seed=7` or `expr1;expr2` → [`FieldSpec`].
pub fn parse_field_shorthand(text: &str) -> Result<FieldSpec, ConfigError> {
    let pointer = "/fields";
    if let Some(rest) = text.strip_prefix("random:") {
        let mut count = None;
        let mut seed = None;
        for pair in rest.split(',') {
            match pair.split_once('=') {
                Some(("count", v)) => {
                    count =
                        Some(v.parse().map_err(|_| {
                            ConfigError::new(pointer, format!("invalid count `{v}`"))
                        })?)
                }
                Some(("seed", v)) => {
                    seed =
                        Some(v.parse().map_err(|_| {
                            ConfigError::new(pointer, format!("invalid seed `{v}`"))
                        })?)
                }
                _ => {
                    return Err(ConfigError::new(
                        pointer,
                        format!("expected count=<n>[,seed=<s>], got `{rest}`"),
                    ))
                }
            }
        }
        Ok(FieldSpec::Random {
            random: RandomFieldSpec {
                count: count
                    .ok_or_else(|| ConfigError::new(pointer, "random field needs count=<n>"))?,
                seed,
            },
        })
    } else {
        Ok(FieldSpec::Expr {
            expr: text.split(';').map(|s| s.trim().to_string()).collect(),
        })
    }
}

/// `sobol:count=10[,seed=3]` or `x,y;x,y;...` → [`SampleSpec`].
pub fn parse_points_shorthand(text: &str) -> Result<SampleSpec, ConfigError> {
    let pointer = "/samples";
    if let Some(rest) = text.strip_prefix("sobol:") {
        let mut count = None;
        let mut seed = None;
        for pair in rest.split(',') {
            match pair.split_once('=') {
                Some(("count", v)) => {
                    count =
                        Some(v.parse().map_err(|_| {
                            ConfigError::new(pointer, format!("invalid count `{v}`"))
                        })?)
                }
                Some(("seed", v)) => {
                    seed =
                        Some(v.parse().map_err(|_| {
                            ConfigError::new(pointer, format!("invalid seed `{v}`"))
                        })?)
                }
                _ => {
                    return Err(ConfigError::new(
                        pointer,
                        format!("expected count=<n>[,seed=<s>], got `{rest}`"),
                    ))
                }
            }
        }
        Ok(SampleSpec::Sobol {
            sobol: SobolSpec {
                count: count
                    .ok_or_else(|| ConfigError::new(pointer, "sobol sampling needs count=<n>"))?,
                seed,
            },
        })
    } else {
        let mut points = Vec::new();
        for chunk in text.split(';') {
            let coords = chunk
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|_| ConfigError::new(pointer, format!("invalid coordinate `{c}`")))
                })
                .collect::<Result<Vec<f64>, ConfigError>>()?;
            points.push(coords);
        }
        Ok(SampleSpec::Points { points })
    }
}

/// `key=value` tolerance override.
pub fn parse_tolerance_shorthand(text: &str) -> Result<(String, f64), ConfigError> {
    let (key, value) = text.split_once('=').ok_or_else(|| {
        ConfigError::new(
            "/tolerances",
            format!("expected <check>=<value>, got `{text}`"),
        )
    })?;
    let value: f64 = value.parse().map_err(|_| {
        ConfigError::new(
            format!("/tolerances/{key}"),
            format!("invalid tolerance `{value}`"),
        )
    })?;
    Ok((key.to_string(), value))
}

/// `start:end:step` or a comma list of alpha values.
pub fn parse_alpha_grid(text: &str) -> Result<Vec<f64>, ConfigError> {
    let pointer = "/alpha_grid";
    let invalid = |v: &str| ConfigError::new(pointer, format!("invalid alpha value `{v}`"));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(ConfigError::new(pointer, "range form is start:end:step"));
        }
        let start: f64 = parts[0].parse().map_err(|_| invalid(parts[0]))?;
        let end: f64 = parts[1].parse().map_err(|_| invalid(parts[1]))?;
        let step: f64 = parts[2].parse().map_err(|_| invalid(parts[2]))?;
        if step <= 0.0 || end < start {
            return Err(ConfigError::new(pointer, "need step > 0 and end >= start"));
        }
        let mut grid = Vec::new();
        let mut k = 0usize;
        loop {
            let a = start + k as f64 * step;
            if a > end + 1e-12 {
                break;
            }
            grid.push((a * 1e12).round() / 1e12);
            k += 1;
        }
        Ok(grid)
    } else {
        text.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| invalid(v)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shorthand_round_trips_through_document() {
        let spec = parse_surface_shorthand("ellipsoid:a=1,b=1.3,c=2").unwrap();
        assert_eq!(spec.name, "ellipsoid");
        assert_eq!(spec.params["b"], 1.3);
        let doc = RunConfig {
            surface: spec,
            ..RunConfig::default()
        };
        let json = serde_json::to_string(&doc).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(doc, back);
    }

    #[test]
    fn graph_shorthand_keeps_expression_verbatim() {
        let spec = parse_surface_shorthand("graph:f=sin(u1)*cos(u2)").unwrap();
        assert_eq!(spec.f.as_deref(), Some("sin(u1)*cos(u2)"));
    }

    #[test]
    fn unknown_surface_suggests() {
        let spec = parse_surface_shorthand("elipsoid:a=1").unwrap();
        let err = compile(&RunConfig {
            surface: spec,
            ..RunConfig::default()
        })
        .unwrap_err();
        assert!(err.message.contains("ellipsoid"), "{err}");
        assert_eq!(err.pointer, "/surface/name");
    }

    #[test]
    fn malformed_expression_reports_offset() {
        let doc = RunConfig {
            surface: SurfaceSpec {
                name: "graph".into(),
                f: Some("sin(u1".into()),
                ..SurfaceSpec::default()
            },
            ..RunConfig::default()
        };
        let err = compile(&doc).unwrap_err();
        assert!(err.message.contains("byte 6"), "{err}");
    }

    #[test]
    fn exterior_points_rejected() {
        let doc = RunConfig {
            samples: SampleSpec::Points {
                points: vec![vec![0.0, 0.01]],
            },
            ..RunConfig::default()
        };
        let err = compile(&doc).unwrap_err();
        assert!(err.pointer.starts_with("/samples/points"), "{err}");
    }

    #[test]
    fn unknown_tolerance_key_rejected() {
        let mut doc = RunConfig::default();
        doc.tolerances.insert("guass_identity".into(), 1e-6);
        let err = compile(&doc).unwrap_err();
        assert_eq!(err.pointer, "/tolerances/guass_identity");
    }

    #[test]
    fn alpha_grid_parses_both_forms() {
        assert_eq!(parse_alpha_grid("0,0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        let grid = parse_alpha_grid("0:1:0.1").unwrap();
        assert_eq!(grid.len(), 11);
        assert_eq!(grid[0], 0.0);
        assert_eq!(grid[10], 1.0);
        assert_eq!(grid[3], 0.3);
    }

    #[test]
    fn config_hash_is_stable() {
        let doc = RunConfig::default();
        let a = compile(&doc).unwrap().config_hash;
        let b = compile(&doc).unwrap().config_hash;
        assert_eq!(a, b);
        let mut doc2 = doc.clone();
        doc2.seed = 43;
        assert_ne!(a, compile(&doc2).unwrap().config_hash);
    }
}

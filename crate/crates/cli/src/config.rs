//! Run configuration. Strict JSON; every block is validated before any
//! computation starts, and errors point at the offending line.

use magstep_core::edge2d::{
    CurvatureProfile, EdgeDomain, EigenSample, PredictedConstants, ProfileKind, ScaledDomainSpec, Solve2dOptions,
    DEFAULT_MESH_PAIR,
};
use magstep_core::fiber1d::{FiberParams, Grid1D};
use magstep_core::verify::Group;
use serde::Deserialize;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub a: Option<f64>,
    pub grid1d: Option<GridConfig>,
    pub band: Option<BandConfig>,
    pub profile: Option<CurvatureProfile>,
    /// Fixed rectangle (−S, S) × (−T, T).
    pub domain: Option<DomainConfig>,
    /// h-scaled rectangle; the default when `domain` is absent.
    pub scaled_domain: Option<ScaledDomainSpec>,
    /// Mesh factors (f₁, f₂) for extrapolation on the scaled domain.
    pub mesh: Option<[f64; 2]>,
    pub h_list: Option<Vec<f64>>,
    pub n_modes: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub output_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub fit: Option<FitConfig>,
    pub verify: Option<VerifyConfig>,
    #[serde(default)]
    pub dump_eigenvectors: bool,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub half_length: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    pub xi_lo: f64,
    pub xi_hi: f64,
    pub n_xi: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    #[serde(rename = "S")]
    pub s_half: f64,
    #[serde(rename = "T")]
    pub t_half: f64,
    pub n_s: usize,
    pub n_t: usize,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative residual bound for 2D eigenpairs.
    pub eig_2d: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub samples: Option<Vec<EigenSample>>,
    /// An `eigs2d.csv` written by `solve2d`.
    pub samples_file: Option<PathBuf>,
    pub predicted: Option<PredictedConstants>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub groups: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: PathBuf,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.path.display())?;
        if let Some(l) = self.line {
            write!(f, ":{l}")?;
            if let Some(c) = self.column {
                write!(f, ":{c}")?;
            }
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain2d {
    Fixed(EdgeDomain),
    Scaled { spec: ScaledDomainSpec, mesh: (f64, f64) },
}

#[derive(Debug, Clone)]
pub enum FitSource {
    Inline(Vec<EigenSample>),
    File(PathBuf),
    /// Solve on `h_list` first.
    Solve,
}

/// A validated configuration with defaults filled in and paths resolved.
#[derive(Debug, Clone)]
pub struct Run {
    pub path: PathBuf,
    text: String,
    pub a: Option<f64>,
    pub grid: Grid1D,
    pub band: Option<BandConfig>,
    pub profile: Option<CurvatureProfile>,
    pub domain: Domain2d,
    pub h_list: Option<Vec<f64>>,
    pub n_modes: usize,
    pub solve: Solve2dOptions,
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub fit_source: FitSource,
    pub predicted: Option<PredictedConstants>,
    pub groups: Option<Vec<Group>>,
    pub dump_eigenvectors: bool,
}

/// 1-based line of `keys` (each searched after the previous one), if found.
fn key_line(text: &str, keys: &[&str]) -> Option<usize> {
    let mut at = 0;
    for k in keys {
        at += text[at..].find(&format!("\"{k}\""))?;
    }
    Some(text[..at].matches('\n').count() + 1)
}

/// Path-overrides for output and cache, applied after parsing.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

pub fn load(path: &Path, ov: &Overrides) -> Result<Run, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: path.to_path_buf(),
        line: None,
        column: None,
        message: format!("cannot read config: {e}"),
    })?;
    parse(path, text, ov)
}

pub fn parse(path: &Path, text: String, ov: &Overrides) -> Result<Run, ConfigError> {
    let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| ConfigError {
        path: path.to_path_buf(),
        line: Some(e.line()),
        column: Some(e.column()),
        message: e.to_string(),
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
    let err = |keys: &[&str], message: String| ConfigError {
        path: path.to_path_buf(),
        line: key_line(&text, keys),
        column: None,
        message,
    };

    if let Some(a) = cfg.a {
        FiberParams::new(a, 0.0).map_err(|e| err(&["a"], e.to_string()))?;
    }
    let grid = match cfg.grid1d {
        Some(g) => Grid1D::new(g.half_length, g.n).map_err(|e| err(&["grid1d"], e.to_string()))?,
        None => Grid1D::standard(),
    };
    if let Some(b) = cfg.band {
        if !(b.xi_lo.is_finite() && b.xi_hi.is_finite() && b.xi_lo < b.xi_hi) || b.n_xi < 2 {
            return Err(err(
                &["band"],
                format!("band needs finite xi_lo < xi_hi and n_xi >= 2 (got {}, {}, {})", b.xi_lo, b.xi_hi, b.n_xi),
            ));
        }
    }
    if let Some(p) = &cfg.profile {
        p.validate().map_err(|e| err(&["profile"], e.to_string()))?;
    }
    if let Some(h) = &cfg.h_list {
        if h.is_empty() {
            return Err(err(&["h_list"], "h_list is empty".into()));
        }
        if let Some(x) = h.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
            return Err(err(&["h_list"], format!("h = {x} must lie in (0, 1)")));
        }
        if h.windows(2).any(|w| w[1] >= w[0]) {
            return Err(err(&["h_list"], "h_list must be strictly decreasing".into()));
        }
    }
    let n_modes = cfg.n_modes.unwrap_or(2);
    if n_modes == 0 {
        return Err(err(&["n_modes"], "n_modes must be at least 1".into()));
    }
    let mut solve = Solve2dOptions::default();
    if let Some(t) = cfg.tolerances.eig_2d {
        if !(t > 0.0 && t < 1.0) {
            return Err(err(&["tolerances", "eig_2d"], format!("eig_2d = {t} must lie in (0, 1)")));
        }
        solve.tol = t;
    }

    let domain = match (cfg.domain, cfg.scaled_domain) {
        (Some(_), Some(_)) => {
            return Err(err(&["scaled_domain"], "give either domain or scaled_domain, not both".into()));
        }
        (Some(d), None) => {
            if cfg.mesh.is_some() {
                return Err(err(&["mesh"], "mesh applies only to scaled_domain".into()));
            }
            let dom = EdgeDomain::symmetric(d.s_half, d.t_half, d.n_s, d.n_t)
                .map_err(|e| err(&["domain"], e.to_string()))?;
            if let Some(p) = &cfg.profile {
                dom.validate(p).map_err(|e| err(&["domain"], e.to_string()))?;
            }
            Domain2d::Fixed(dom)
        }
        (None, spec) => {
            let spec = spec.unwrap_or_default();
            let fields = [spec.s_scale, spec.t_below, spec.t_above, spec.t_cap, spec.f, spec.aspect];
            if fields.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(err(&["scaled_domain"], "scaled_domain parameters must be positive".into()));
            }
            let mesh = cfg.mesh.map(|[c, f]| (c, f)).unwrap_or(DEFAULT_MESH_PAIR);
            if !(mesh.0 > mesh.1 && mesh.1 > 0.0) {
                return Err(err(&["mesh"], format!("mesh factors need f1 > f2 > 0 (got {mesh:?})")));
            }
            for &h in cfg.h_list.iter().flatten() {
                for f in [mesh.0, mesh.1] {
                    let dom = EdgeDomain::scaled(h, &ScaledDomainSpec { f, ..spec })
                        .map_err(|e| err(&["scaled_domain"], format!("h = {h}: {e}")))?;
                    if let Some(p) = &cfg.profile {
                        dom.validate(p).map_err(|e| err(&["scaled_domain"], format!("h = {h}: {e}")))?;
                    }
                }
            }
            Domain2d::Scaled { spec, mesh }
        }
    };

    let (fit_source, predicted) = match cfg.fit {
        None => (FitSource::Solve, None),
        Some(f) => {
            if let Some(p) = &f.predicted {
                if ![p.beta, p.second, p.third, p.gap].iter().all(|x| x.is_finite()) {
                    return Err(err(&["fit", "predicted"], "predicted constants must be finite".into()));
                }
            }
            let src = match (f.samples, f.samples_file) {
                (Some(_), Some(_)) => {
                    return Err(err(&["fit", "samples_file"], "give either samples or samples_file".into()));
                }
                (Some(s), None) => {
                    if let Some(bad) = s.iter().find(|s| !(s.h > 0.0 && s.h < 1.0) || s.lambdas.is_empty()) {
                        return Err(err(
                            &["fit", "samples"],
                            format!("sample at h = {} needs h in (0, 1) and at least one eigenvalue", bad.h),
                        ));
                    }
                    FitSource::Inline(s)
                }
                (None, Some(p)) => FitSource::File(resolve(p)),
                (None, None) => FitSource::Solve,
            };
            (src, f.predicted)
        }
    };

    let groups = match cfg.verify {
        None => None,
        Some(v) => {
            if v.groups.is_empty() {
                return Err(err(&["verify", "groups"], "verify.groups is empty".into()));
            }
            let parsed = v
                .groups
                .iter()
                .map(|g| g.parse::<Group>().map_err(|e| err(&["verify", g.as_str()], e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            Some(parsed)
        }
    };

    let output_dir = ov
        .output_dir
        .clone()
        .or_else(|| cfg.output_dir.map(resolve))
        .unwrap_or_else(|| PathBuf::from("output"));
    let cache_dir = ov
        .cache_dir
        .clone()
        .or_else(|| cfg.cache_dir.map(resolve))
        .unwrap_or_else(|| output_dir.join("cache"));

    Ok(Run {
        path: path.to_path_buf(),
        text,
        a: cfg.a,
        grid,
        band: cfg.band,
        profile: cfg.profile,
        domain,
        h_list: cfg.h_list,
        n_modes,
        solve,
        output_dir,
        cache_dir,
        fit_source,
        predicted,
        groups,
        dump_eigenvectors: cfg.dump_eigenvectors,
    })
}

impl Run {
    fn missing(&self, key: &str, command: &str) -> ConfigError {
        ConfigError {
            path: self.path.clone(),
            line: None,
            column: None,
            message: format!("`{command}` requires `{key}`"),
        }
    }

    /// Contrast with an interior band minimum, a ∈ [−1, 0).
    pub fn contrast(&self, command: &str) -> Result<f64, ConfigError> {
        let a = self.a.ok_or_else(|| self.missing("a", command))?;
        if !(-1.0..0.0).contains(&a) {
            return Err(ConfigError {
                path: self.path.clone(),
                line: key_line(&self.text, &["a"]),
                column: None,
                message: format!("`{command}` needs a in [-1, 0) (got {a})"),
            });
        }
        Ok(a)
    }

    pub fn band_block(&self) -> Result<(f64, BandConfig), ConfigError> {
        let a = self.a.ok_or_else(|| self.missing("a", "band"))?;
        let b = self.band.ok_or_else(|| self.missing("band", "band"))?;
        Ok((a, b))
    }

    pub fn h_values(&self, command: &str) -> Result<&[f64], ConfigError> {
        self.h_list.as_deref().ok_or_else(|| self.missing("h_list", command))
    }

    pub fn curved_profile(&self, command: &str) -> Result<CurvatureProfile, ConfigError> {
        let p = self.profile.ok_or_else(|| self.missing("profile", command))?;
        if p.kind == ProfileKind::Flat {
            return Err(ConfigError {
                path: self.path.clone(),
                line: key_line(&self.text, &["profile"]),
                column: None,
                message: format!("`{command}` needs a curved profile (k2 < 0)"),
            });
        }
        Ok(p)
    }

    pub fn any_profile(&self, command: &str) -> Result<CurvatureProfile, ConfigError> {
        self.profile.ok_or_else(|| self.missing("profile", command))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn try_parse(text: &str) -> Result<Run, ConfigError> {
        parse(Path::new("cfg.json"), text.to_string(), &Overrides::default())
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let e = try_parse("{\n  \"a\": -0.5,\n  \"h_list\": [0.01,]\n}").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.column.is_some());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = try_parse("{\n  \"a\": -0.5,\n  \"grid\": {}\n}").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("unknown field"), "{e}");
        let e = try_parse("{\"grid1d\": {\"L\": 20, \"n\": 4001, \"m\": 1}}").unwrap_err();
        assert!(e.message.contains("unknown field"), "{e}");
    }

    #[test]
    fn semantic_errors_point_at_the_key() {
        let e = try_parse("{\n  \"a\": -0.5,\n\n  \"h_list\": []\n}").unwrap_err();
        assert_eq!(e.line, Some(4));
        assert!(e.message.contains("empty"));
        let e = try_parse("{\n  \"h_list\": [0.01, 0.02]\n}").unwrap_err();
        assert!(e.message.contains("strictly decreasing"));
        let e = try_parse("{\n \"grid1d\": {\"L\": 20, \"n\": 4000}\n}").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = try_parse("{\"verify\": {\n \"groups\": [\"oracle\",\n \"nope\"]}}").unwrap_err();
        assert_eq!(e.line, Some(3));
    }

    #[test]
    fn domain_choices_are_exclusive() {
        let both = r#"{"domain": {"S": 4, "T": 0.45, "n_s": 80, "n_t": 18},
                       "scaled_domain": {"s_scale": 18, "t_below": 9, "t_above": 7.5, "t_cap": 0.5, "f": 0.15, "aspect": 2}}"#;
        assert!(try_parse(both).is_err());
        let fixed = try_parse(r#"{"domain": {"S": 4, "T": 0.45, "n_s": 80, "n_t": 18}}"#).unwrap();
        assert!(matches!(fixed.domain, Domain2d::Fixed(_)));
        let dflt = try_parse("{}").unwrap();
        assert_eq!(
            dflt.domain,
            Domain2d::Scaled {
                spec: ScaledDomainSpec::default(),
                mesh: DEFAULT_MESH_PAIR
            }
        );
    }

    #[test]
    fn defaults_and_overrides() {
        let r = try_parse(r#"{"output_dir": "out", "tolerances": {"eig_2d": 1e-8}}"#).unwrap();
        assert_eq!(r.output_dir, PathBuf::from("out"));
        assert_eq!(r.cache_dir, PathBuf::from("out/cache"));
        assert_eq!(r.solve.tol, 1e-8);
        assert_eq!(r.grid, Grid1D::standard());
        let ov = Overrides {
            output_dir: Some("x".into()),
            cache_dir: Some("c".into()),
        };
        let r = parse(Path::new("d/cfg.json"), "{\"output_dir\": \"out\"}".into(), &ov).unwrap();
        assert_eq!((r.output_dir, r.cache_dir), (PathBuf::from("x"), PathBuf::from("c")));
    }

    #[test]
    fn contrast_must_leave_the_band_minimum_interior() {
        let r = try_parse(r#"{"a": 0.5}"#).unwrap();
        assert!(r.contrast("invariants").is_err());
        assert!(r.band_block().is_err());
        assert!(try_parse(r#"{"a": 1.5}"#).is_err());
    }
}

//! Line-oriented experiment configuration: `[section]` headers and
//! `key = value` lines, `#` comments.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use twistspec_core::geometry::{CrossSection, RayParams, RaySampling, TwistProfile};
use twistspec_core::tube_operator::EndCondition;

use crate::error::CliError;

const SCHEMA: &[(&str, &[&str])] = &[
    ("domain", &["shape", "profile"]),
    ("grid", &["h", "h1", "richardson"]),
    ("solver", &["k", "tol", "max_iter"]),
    ("sweep", &["beta", "L", "ends", "stations"]),
    ("certify", &["n", "L", "K", "bracket_n", "transverse_spacing", "ray_stations", "bisection_tol", "horizon", "search_cap"]),
    ("mesh", &["slices", "boundary_samples", "x1_min", "x1_max"]),
    ("oracle", &["dense_cap", "inject_asymmetry", "k", "tol"]),
];

/// Raw `section.key → value` table with the line each entry came from.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<(String, String), (usize, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        let mut section: Option<&'static [&'static str]> = None;
        let mut section_name = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                let keys = SCHEMA
                    .iter()
                    .find(|(s, _)| *s == name)
                    .map(|(_, k)| *k)
                    .ok_or_else(|| CliError::config(format!("line {lineno}: unknown section [{name}]")))?;
                section = Some(keys);
                section_name = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {lineno}: expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let keys = section.ok_or_else(|| CliError::config(format!("line {lineno}: `{key}` appears before any [section]")))?;
            if !keys.contains(&key) {
                return Err(CliError::config(format!("line {lineno}: unknown key `{key}` in [{section_name}]")));
            }
            let slot = (section_name.clone(), key.to_string());
            if entries.contains_key(&slot) {
                return Err(CliError::config(format!("line {lineno}: duplicate key `{key}` in [{section_name}]")));
            }
            entries.insert(slot, (lineno, value.trim().to_string()));
        }
        Ok(Self { entries })
    }

    fn get(&self, section: &str, key: &str) -> Option<(usize, &str)> {
        self.entries.get(&(section.to_string(), key.to_string())).map(|(l, v)| (*l, v.as_str()))
    }

    fn err(&self, section: &str, key: &str, msg: impl std::fmt::Display) -> CliError {
        let line = self.get(section, key).map(|(l, _)| format!("line {l}: ")).unwrap_or_default();
        CliError::config(format!("{line}[{section}] {key}: {msg}"))
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64, CliError> {
        match self.get(section, key) {
            None => Ok(default),
            Some((_, v)) => parse_f64(v).map_err(|m| self.err(section, key, m)),
        }
    }

    pub fn positive_or(&self, section: &str, key: &str, default: f64) -> Result<f64, CliError> {
        let v = self.f64_or(section, key, default)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.err(section, key, format!("must be positive, got {v}")))
        }
    }

    pub fn count_or(&self, section: &str, key: &str, default: usize) -> Result<usize, CliError> {
        match self.get(section, key) {
            None => Ok(default),
            Some((_, v)) => match v.parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(self.err(section, key, format!("expected a positive integer, got `{v}`"))),
            },
        }
    }

    pub fn bool_or(&self, section: &str, key: &str, default: bool) -> Result<bool, CliError> {
        match self.get(section, key) {
            None => Ok(default),
            Some((_, "true")) => Ok(true),
            Some((_, "false")) => Ok(false),
            Some((_, v)) => Err(self.err(section, key, format!("expected true or false, got `{v}`"))),
        }
    }

    /// Comma-separated reals; an empty value is an empty list.
    pub fn list_or(&self, section: &str, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.get(section, key) {
            None => Ok(default.to_vec()),
            Some((_, v)) => split_list(v).map(parse_f64).collect::<Result<_, _>>().map_err(|m| self.err(section, key, m)),
        }
    }

    pub fn has(&self, section: &str, key: &str) -> bool {
        self.get(section, key).is_some()
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_f64(v: &str) -> Result<f64, String> {
    match v.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("expected a finite number, got `{v}`")),
    }
}

/// Arguments of `name(...)`, split on top-level commas.
fn call<'a>(literal: &'a str, what: &str) -> Result<(&'a str, Vec<&'a str>), String> {
    let literal = literal.trim();
    let open = literal.find('(').ok_or_else(|| format!("{what} literal `{literal}` lacks an argument list"))?;
    let inner = literal[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| format!("{what} literal `{literal}` must end with `)`"))?;
    let mut args = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in inner.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                args.push(inner[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
        if depth < 0 {
            return Err(format!("unbalanced parentheses in `{literal}`"));
        }
    }
    if depth != 0 {
        return Err(format!("unbalanced parentheses in `{literal}`"));
    }
    if !inner.trim().is_empty() {
        args.push(inner[start..].trim());
    }
    Ok((literal[..open].trim(), args))
}

fn numbers(args: &[&str], expected: usize, literal: &str) -> Result<Vec<f64>, String> {
    if args.len() != expected {
        return Err(format!("`{literal}` takes {expected} arguments, got {}", args.len()));
    }
    args.iter().map(|a| parse_f64(a)).collect()
}

/// `ellipse(cx,cy,a,b)`, `rectangle(x0,y0,x1,y1)` or `polygon((x,y),...)`.
pub fn parse_shape(literal: &str) -> Result<CrossSection, String> {
    let (name, args) = call(literal, "shape")?;
    let shape = match name {
        "ellipse" => {
            let v = numbers(&args, 4, literal)?;
            CrossSection::ellipse([v[0], v[1]], v[2], v[3])
        }
        "rectangle" => {
            let v = numbers(&args, 4, literal)?;
            CrossSection::rectangle([v[0], v[1]], [v[2], v[3]])
        }
        "polygon" => {
            let vertices = args
                .iter()
                .map(|a| {
                    let (_, xy) = call(a, "vertex")?;
                    let v = numbers(&xy, 2, a)?;
                    Ok([v[0], v[1]])
                })
                .collect::<Result<Vec<_>, String>>()?;
            CrossSection::polygon(vertices)
        }
        other => return Err(format!("unknown shape `{other}`")),
    };
    shape.map_err(|e| e.to_string())
}

/// `constant(beta)`, `linear(alpha)`, `power(alpha,p)` or `tabulated(path)`;
/// table paths resolve against `base`.
pub fn parse_profile(literal: &str, base: &Path) -> Result<TwistProfile, String> {
    let (name, args) = call(literal, "profile")?;
    let profile = match name {
        "constant" => TwistProfile::constant(numbers(&args, 1, literal)?[0]),
        "linear" => TwistProfile::linear(numbers(&args, 1, literal)?[0]),
        "power" => {
            let v = numbers(&args, 2, literal)?;
            TwistProfile::power(v[0], v[1])
        }
        "tabulated" => {
            if args.len() != 1 || args[0].is_empty() {
                return Err(format!("`{literal}` takes one path argument"));
            }
            let path = base.join(args[0].trim_matches('"'));
            let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read rate table {}: {e}", path.display()))?;
            TwistProfile::parse_table(&text)
        }
        other => return Err(format!("unknown profile `{other}`")),
    };
    profile.map_err(|e| e.to_string())
}

fn parse_ends(v: &str) -> Result<EndCondition, String> {
    match v {
        "dirichlet" => Ok(EndCondition::Dirichlet),
        "neumann" => Ok(EndCondition::Neumann),
        other => Err(format!("unknown end condition `{other}`")),
    }
}

#[derive(Debug, Clone)]
pub struct SolverSettings {
    pub k: usize,
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub struct CertifySettings {
    pub n: Vec<u32>,
    pub half_length: Option<f64>,
    pub brackets: usize,
    pub bracket_n: Option<u32>,
    pub sampling: RaySampling,
    pub search_cap: f64,
}

#[derive(Debug, Clone)]
pub struct MeshSettings {
    pub slices: usize,
    pub boundary_samples: usize,
    pub x1_min: f64,
    pub x1_max: f64,
}

#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub dense_cap: usize,
    pub inject_asymmetry: bool,
    pub k: usize,
    pub tol: f64,
}

/// A validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub shape: Option<CrossSection>,
    pub profile: Option<TwistProfile>,
    pub h: f64,
    pub h1: f64,
    pub richardson: bool,
    pub solver: SolverSettings,
    pub betas: Vec<f64>,
    pub half_lengths: Vec<f64>,
    pub ends: Vec<EndCondition>,
    pub stations: Vec<f64>,
    pub certify: CertifySettings,
    pub mesh: MeshSettings,
    pub oracle: OracleConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        Self::from_str(&text, &base)
    }

    pub fn from_str(text: &str, base: &Path) -> Result<Self, CliError> {
        let raw = RawConfig::parse(text)?;
        let shape = match raw.get("domain", "shape") {
            Some((_, v)) => Some(parse_shape(v).map_err(|m| raw.err("domain", "shape", m))?),
            None => None,
        };
        let profile = match raw.get("domain", "profile") {
            Some((_, v)) => Some(parse_profile(v, base).map_err(|m| raw.err("domain", "profile", m))?),
            None => None,
        };
        let ends = match raw.get("sweep", "ends") {
            None => vec![EndCondition::Dirichlet],
            Some((_, v)) => split_list(v).map(parse_ends).collect::<Result<_, _>>().map_err(|m| raw.err("sweep", "ends", m))?,
        };
        let half_lengths = raw.list_or("sweep", "L", &[])?;
        if let Some(bad) = half_lengths.iter().find(|l| **l <= 0.0) {
            return Err(raw.err("sweep", "L", format!("half-lengths must be positive, got {bad}")));
        }
        let n = raw
            .list_or("certify", "n", &[4.0])?
            .into_iter()
            .map(|v| if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 { Ok(v as u32) } else { Err(v) })
            .collect::<Result<Vec<u32>, f64>>()
            .map_err(|v| raw.err("certify", "n", format!("expected positive integers, got {v}")))?;
        if n.is_empty() {
            return Err(raw.err("certify", "n", "needs at least one value"));
        }
        let bracket_n = if raw.has("certify", "bracket_n") { Some(raw.count_or("certify", "bracket_n", 1)? as u32) } else { None };
        let half_length = if raw.has("certify", "L") { Some(raw.positive_or("certify", "L", 1.0)?) } else { None };
        let brackets = match raw.get("certify", "K") {
            None => 0,
            Some(_) => raw.count_or("certify", "K", 1)?,
        };
        let defaults = RaySampling::default();
        let sampling = RaySampling {
            transverse_spacing: raw.positive_or("certify", "transverse_spacing", defaults.transverse_spacing)?,
            stations: raw.count_or("certify", "ray_stations", defaults.stations)?,
            ray: RayParams {
                tol: raw.positive_or("certify", "bisection_tol", defaults.ray.tol)?,
                horizon: raw.positive_or("certify", "horizon", defaults.ray.horizon)?,
            },
        };
        let mesh = MeshSettings {
            slices: raw.count_or("mesh", "slices", 64)?,
            boundary_samples: raw.count_or("mesh", "boundary_samples", 48)?,
            x1_min: raw.f64_or("mesh", "x1_min", -4.0)?,
            x1_max: raw.f64_or("mesh", "x1_max", 4.0)?,
        };
        if mesh.slices < 2 || mesh.boundary_samples < 3 {
            return Err(CliError::config("[mesh] needs slices >= 2 and boundary_samples >= 3"));
        }
        if !(mesh.x1_max > mesh.x1_min) {
            return Err(CliError::config("[mesh] x1_max must exceed x1_min"));
        }
        Ok(Self {
            shape,
            profile,
            h: raw.positive_or("grid", "h", 1.0 / 32.0)?,
            h1: raw.positive_or("grid", "h1", 1.0 / 16.0)?,
            richardson: raw.bool_or("grid", "richardson", false)?,
            solver: SolverSettings {
                k: raw.count_or("solver", "k", 1)?,
                tol: raw.positive_or("solver", "tol", 1e-8)?,
                max_iter: raw.count_or("solver", "max_iter", 5000)?,
            },
            betas: raw.list_or("sweep", "beta", &[])?,
            half_lengths,
            ends,
            stations: raw.list_or("sweep", "stations", &[0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0])?,
            certify: CertifySettings {
                n,
                half_length,
                brackets,
                bracket_n,
                sampling,
                search_cap: raw.positive_or("certify", "search_cap", 1e6)?,
            },
            mesh,
            oracle: OracleConfig {
                dense_cap: raw.count_or("oracle", "dense_cap", twistspec_core::eigensolve::DENSE_ORDER_CAP)?,
                inject_asymmetry: raw.bool_or("oracle", "inject_asymmetry", false)?,
                k: raw.count_or("oracle", "k", 4)?,
                tol: raw.positive_or("oracle", "tol", 1e-9)?,
            },
        })
    }

    pub fn shape(&self) -> Result<&CrossSection, CliError> {
        self.shape.as_ref().ok_or_else(|| CliError::config("missing [domain] shape"))
    }

    pub fn profile(&self) -> Result<&TwistProfile, CliError> {
        self.profile.as_ref().ok_or_else(|| CliError::config("missing [domain] profile"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals() {
        let e = parse_shape("ellipse(0, 0, 1, 0.5)").unwrap();
        assert_eq!(e.summary().inradius, Some(0.5));
        let p = parse_shape("polygon((0,0), (2,0), (0,1))").unwrap();
        assert!((p.area() - 1.0).abs() < 1e-15);
        assert!(parse_shape("rectangle(1,0,0,1)").is_err());
        assert!(parse_shape("circle(0,0,1)").is_err());
        assert!(parse_shape("ellipse(0,0,1)").is_err());
        assert!(parse_shape("polygon((0,0),(1,0)").is_err());
        let here = Path::new(".");
        assert!(parse_profile("power(2, 2)", here).unwrap().diverges());
        assert!(!parse_profile("constant(1)", here).unwrap().diverges());
        assert!(parse_profile("power(-1, 2)", here).is_err());
        assert!(parse_profile("tabulated(/nonexistent/table.txt)", here).is_err());
    }

    #[test]
    fn grammar() {
        let text = "# comment\n[domain]\nshape = rectangle(0.5,-0.5,1.5,0.5)  # trailing\nprofile = linear(1)\n\n[sweep]\nbeta =\nL = 4, 8\nends = dirichlet, neumann\n";
        let cfg = ExperimentConfig::from_str(text, Path::new(".")).unwrap();
        assert!(cfg.betas.is_empty());
        assert_eq!(cfg.half_lengths, vec![4.0, 8.0]);
        assert_eq!(cfg.ends, vec![EndCondition::Dirichlet, EndCondition::Neumann]);
        assert_eq!(cfg.solver.k, 1);
        for bad in [
            "[domain]\nshape = ellipse(0,0,1,1)\ncolour = red\n",
            "[nowhere]\n",
            "h = 0.1\n",
            "[grid]\nh = -0.1\n",
            "[grid]\nh = 0.1\nh = 0.2\n",
            "[solver]\nk = 0\n",
            "[grid]\nrichardson = yes\n",
            "[certify]\nn = 2.5\n",
            "[certify]\nn =\n",
            "[sweep]\nends = periodic\n",
            "[grid]\nh\n",
        ] {
            assert!(matches!(ExperimentConfig::from_str(bad, Path::new(".")), Err(CliError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn tabulated_path_is_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("rate.txt"), "0 0\n1 1\nextrapolate = 1\n").unwrap();
        let cfg_path = dir.path().join("run.cfg");
        std::fs::write(&cfg_path, "[domain]\nprofile = tabulated(rate.txt)\n").unwrap();
        let cfg = ExperimentConfig::load(&cfg_path).unwrap();
        assert!(cfg.profile().unwrap().diverges());
        assert!(cfg.shape().is_err());
    }
}

//! Run configuration: flat dotted-key text files (`geometry.ly = 0.5`) with
//! a JSON mirror (nested objects flattened to the same keys).

use anyhow::{anyhow, bail, Context, Result};
use bqwave::fields::ChannelGrid;
use bqwave::fixedpoint::{CDamping, FixedPointConfig};
use bqwave::flow::AdvectionPolicy;
use bqwave::geometry::{CpwConvention, CrossSection, OriginConvention, PhysParams};
use bqwave::reaction::{NonlinearityFamily, NonlinearitySpec};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub physics: PhysicsConfig,
    pub reaction: ReactionConfig,
    pub solver: SolverConfig,
    pub output: OutputConfig,
    /// SHA-256 of the raw config file bytes.
    pub config_hash: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometryConfig {
    pub kind: String,
    pub ly: f64,
    pub lz: f64,
    pub ny: usize,
    pub nz: usize,
    pub polygon: Option<Vec<[f64; 2]>>,
    pub origin: String,
    pub cpw_convention: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhysicsConfig {
    pub nu: f64,
    pub rho: [f64; 3],
    pub d: u8,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReactionConfig {
    pub family: String,
    pub k: f64,
    pub theta0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    pub a_schedule: Vec<f64>,
    pub tau_schedule: Vec<f64>,
    pub axial_cells: usize,
    pub damping: f64,
    pub c_damping: String,
    pub tolerance: f64,
    pub stage_tolerance: f64,
    pub max_iterations: usize,
    pub extension_order: u32,
    pub flow_margin: Option<f64>,
    pub advection: String,
    pub slack: f64,
    pub force: bool,
    pub truncation_check: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputConfig {
    pub dir: String,
    pub dump_state: bool,
    pub csv_profiles: bool,
}

/// Key/value view of the config with line anchors for error messages.
struct KeyMap {
    map: BTreeMap<String, (String, usize)>,
    used: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

impl KeyMap {
    fn get(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.map.get(key).map(|(v, _)| v.as_str())
    }

    fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| {
                let line = self.map.get(key).map(|(_, l)| *l).unwrap_or(0);
                anyhow!("line {line}: key '{key}': cannot parse '{v}': {e}")
            }),
        }
    }

    fn parse_list(&self, key: &str, default: Vec<f64>) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|e| {
                        let line = self.map.get(key).map(|(_, l)| *l).unwrap_or(0);
                        anyhow!("line {line}: key '{key}': bad number '{s}': {e}")
                    })
                })
                .collect(),
        }
    }

    fn unknown_keys(&self) -> Vec<(String, usize)> {
        let used = self.used.borrow();
        self.map
            .iter()
            .filter(|(k, _)| !used.contains(*k))
            .map(|(k, (_, l))| (k.clone(), *l))
            .collect()
    }
}

fn flatten_json(prefix: &str, value: &serde_json::Value, out: &mut BTreeMap<String, (String, usize)>) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_json(&key, v, out);
            }
        }
        serde_json::Value::Array(items) => {
            let joined: Vec<String> = items
                .iter()
                .map(|v| match v {
                    serde_json::Value::Number(n) => n.to_string(),
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            out.insert(prefix.to_string(), (joined.join(","), 0));
        }
        serde_json::Value::String(s) => {
            out.insert(prefix.to_string(), (s.clone(), 0));
        }
        other => {
            out.insert(prefix.to_string(), (other.to_string(), 0));
        }
    }
}

fn parse_keymap(text: &str) -> Result<KeyMap> {
    let trimmed = text.trim_start();
    let mut map = BTreeMap::new();
    if trimmed.starts_with('{') {
        let v: serde_json::Value =
            serde_json::from_str(text).context("config is not valid JSON")?;
        flatten_json("", &v, &mut map);
    } else {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected 'key = value', got '{raw}'", lineno + 1);
            };
            map.insert(
                key.trim().to_string(),
                (value.trim().to_string(), lineno + 1),
            );
        }
    }
    Ok(KeyMap {
        map,
        used: Default::default(),
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let hash = {
        use sha2::Digest;
        hex::encode(sha2::Sha256::digest(&bytes))
    };
    let text = String::from_utf8(bytes).context("config is not UTF-8")?;
    let km = parse_keymap(&text)?;

    let geometry = GeometryConfig {
        kind: km.parse_or("geometry.kind", "rectangle".to_string())?,
        ly: km.parse_or("geometry.ly", 0.5)?,
        lz: km.parse_or("geometry.lz", 0.5)?,
        ny: km.parse_or("geometry.ny", 16usize)?,
        nz: km.parse_or("geometry.nz", 16usize)?,
        polygon: match km.get("geometry.polygon") {
            None => None,
            Some(s) => Some(parse_polygon(s)?),
        },
        origin: km.parse_or("geometry.origin", "centroid".to_string())?,
        cpw_convention: km.parse_or("geometry.cpw_convention", "sharp".to_string())?,
    };
    let physics = PhysicsConfig {
        nu: km.parse_or("physics.nu", 1.0)?,
        rho: {
            let v = km.parse_list("physics.rho", vec![0.0, 0.0, -1.0])?;
            if v.len() != 3 {
                bail!("physics.rho needs exactly 3 components");
            }
            [v[0], v[1], v[2]]
        },
        d: km.parse_or("physics.d", 0u8)?,
    };
    let reaction = ReactionConfig {
        family: km.parse_or("reaction.family", "hat".to_string())?,
        k: km.parse_or("reaction.k", 1.0)?,
        theta0: km.parse_or("reaction.theta0", 0.25)?,
    };
    let solver = SolverConfig {
        a_schedule: km.parse_list("solver.a_schedule", vec![20.0])?,
        tau_schedule: km.parse_list("solver.tau_schedule", vec![0.0, 0.25, 0.5, 0.75, 1.0])?,
        axial_cells: km.parse_or("solver.axial_cells", 128usize)?,
        damping: km.parse_or("solver.damping", 0.5)?,
        c_damping: km.parse_or("solver.c_damping", "auto".to_string())?,
        tolerance: km.parse_or("solver.tolerance", 1e-9)?,
        stage_tolerance: km.parse_or("solver.stage_tolerance", 1e-6)?,
        max_iterations: km.parse_or("solver.max_iterations", 200usize)?,
        extension_order: km.parse_or("solver.extension_order", 4u32)?,
        flow_margin: match km.get("solver.flow_margin") {
            None => None,
            Some("auto") => None,
            Some(s) => Some(
                s.parse::<f64>()
                    .map_err(|e| anyhow!("solver.flow_margin: bad value '{s}': {e}"))?,
            ),
        },
        advection: km.parse_or("solver.advection", "auto".to_string())?,
        slack: km.parse_or("solver.slack", 0.05)?,
        force: km.parse_or("solver.force", false)?,
        truncation_check: km.parse_or("solver.truncation_check", true)?,
    };
    let output = OutputConfig {
        dir: km.parse_or("output.dir", "runs/out".to_string())?,
        dump_state: km.parse_or("output.dump_state", true)?,
        csv_profiles: km.parse_or("output.csv_profiles", true)?,
    };

    let unknown = km.unknown_keys();
    if let Some((k, l)) = unknown.first() {
        bail!("line {l}: unknown config key '{k}'");
    }

    let cfg = RunConfig {
        geometry,
        physics,
        reaction,
        solver,
        output,
        config_hash: hash,
    };
    cfg.build_cross_section()?; // validate eagerly
    cfg.phys_params()?;
    Ok(cfg)
}

fn parse_polygon(s: &str) -> Result<Vec<[f64; 2]>> {
    s.split(';')
        .map(|pair| {
            let mut it = pair.split(',').map(|x| x.trim().parse::<f64>());
            match (it.next(), it.next()) {
                (Some(Ok(y)), Some(Ok(z))) => Ok([y, z]),
                _ => bail!("geometry.polygon: bad vertex '{pair}' (want 'y,z; y,z; ...')"),
            }
        })
        .collect()
}

impl RunConfig {
    pub fn build_cross_section(&self) -> Result<Arc<CrossSection>> {
        let mut cs = match self.geometry.kind.as_str() {
            "rectangle" => CrossSection::build_rectangle(
                self.geometry.ly,
                self.geometry.lz,
                self.geometry.ny,
                self.geometry.nz,
            )?,
            "polygon" => {
                let verts = self
                    .geometry
                    .polygon
                    .clone()
                    .ok_or_else(|| anyhow!("geometry.polygon required for kind = polygon"))?;
                CrossSection::build_polygon(verts, self.geometry.ny, self.geometry.nz)?
            }
            other => bail!("geometry.kind must be 'rectangle' or 'polygon', got '{other}'"),
        };
        cs.origin_convention = match self.geometry.origin.as_str() {
            "centroid" => OriginConvention::Centroid,
            "as-given" => OriginConvention::AsGiven,
            other => bail!("geometry.origin must be 'centroid' or 'as-given', got '{other}'"),
        };
        cs.cpw_convention = match self.geometry.cpw_convention.as_str() {
            "sharp" => CpwConvention::Sharp,
            "literal" => CpwConvention::Literal,
            other => bail!("geometry.cpw_convention must be 'sharp' or 'literal', got '{other}'"),
        };
        Ok(Arc::new(cs))
    }

    pub fn phys_params(&self) -> Result<PhysParams> {
        let family = match self.reaction.family.as_str() {
            "hat" => NonlinearityFamily::Hat,
            "quadratic" => NonlinearityFamily::Quadratic,
            other => bail!("reaction.family must be 'hat' or 'quadratic', got '{other}'"),
        };
        let pp = PhysParams {
            nu: self.physics.nu,
            rho: self.physics.rho,
            d: self.physics.d,
            reaction: NonlinearitySpec {
                family,
                k: self.reaction.k,
                theta0: self.reaction.theta0,
            },
        };
        let warnings = pp.validate()?;
        for w in warnings {
            eprintln!("warning: {w}");
        }
        Ok(pp)
    }

    pub fn fixed_point_config(&self) -> Result<FixedPointConfig> {
        let c_damping = match self.solver.c_damping.as_str() {
            "auto" => CDamping::Auto,
            s => CDamping::Fixed(
                s.parse::<f64>()
                    .map_err(|e| anyhow!("solver.c_damping: '{s}': {e}"))?,
            ),
        };
        let advection = match self.solver.advection.as_str() {
            "auto" => AdvectionPolicy::Auto,
            "centered" => AdvectionPolicy::Centered,
            "upwind" => AdvectionPolicy::Upwind,
            other => bail!("solver.advection must be auto|centered|upwind, got '{other}'"),
        };
        let cfg = FixedPointConfig {
            damping: self.solver.damping,
            c_damping,
            tau_schedule: self.solver.tau_schedule.clone(),
            a_schedule: self.solver.a_schedule.clone(),
            tolerance: self.solver.tolerance,
            stage_tolerance: self.solver.stage_tolerance,
            max_iterations: self.solver.max_iterations,
            extension_order: self.solver.extension_order,
            flow_margin: self.solver.flow_margin,
            advection,
            force: self.solver.force,
            truncation_check: self.solver.truncation_check,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Output root, honoring the `BQ_OUT` override.
    pub fn output_dir(&self) -> std::path::PathBuf {
        match std::env::var("BQ_OUT") {
            Ok(root) if !root.is_empty() => Path::new(&root).join(&self.output.dir),
            _ => std::path::PathBuf::from(&self.output.dir),
        }
    }

    pub fn grid_for(&self, cross: Arc<CrossSection>, a: f64, cells: usize) -> Result<ChannelGrid> {
        let margin = self
            .solver
            .flow_margin
            .unwrap_or_else(|| ChannelGrid::default_margin(&cross));
        Ok(ChannelGrid::new(cross, a, cells, margin)?)
    }

    pub fn versions() -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("bqwave".into(), bqwave_version());
        m.insert("bqwave-cli".into(), env!("CARGO_PKG_VERSION").into());
        m
    }
}

pub fn bqwave_version() -> String {
    // core and cli share the workspace version
    env!("CARGO_PKG_VERSION").to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_cfg(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_flat_config_with_defaults() {
        let f = write_cfg(
            "geometry.ly = 0.5\ngeometry.lz = 0.5\nphysics.rho = 0, 0, -1\nreaction.k = 4 # amplitude\n",
        );
        let cfg = load_config(f.path()).unwrap();
        assert_eq!(cfg.reaction.k, 4.0);
        assert_eq!(cfg.physics.rho, [0.0, 0.0, -1.0]);
        assert_eq!(cfg.solver.axial_cells, 128);
        assert_eq!(cfg.config_hash.len(), 64);
    }

    #[test]
    fn parses_json_mirror() {
        let f = write_cfg(
            r#"{"geometry": {"ly": 0.5, "lz": 0.25, "ny": 8, "nz": 8},
                "solver": {"a_schedule": [10, 20], "tau_schedule": [0, 1]},
                "reaction": {"family": "quadratic", "k": 2.0, "theta0": 0.3}}"#,
        );
        let cfg = load_config(f.path()).unwrap();
        assert_eq!(cfg.geometry.lz, 0.25);
        assert_eq!(cfg.solver.a_schedule, vec![10.0, 20.0]);
        assert_eq!(cfg.reaction.family, "quadratic");
    }

    #[test]
    fn rejects_unknown_keys_with_line_anchor() {
        let f = write_cfg("geometry.ly = 0.5\ngeometry.typo = 1\n");
        let err = load_config(f.path()).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(err.contains("geometry.typo"), "{err}");
    }

    #[test]
    fn rejects_malformed_lines() {
        let f = write_cfg("geometry.ly 0.5\n");
        let err = load_config(f.path()).unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn rejects_invalid_physics() {
        let f = write_cfg("physics.nu = -1\n");
        assert!(load_config(f.path()).is_err());
    }
}

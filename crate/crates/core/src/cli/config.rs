//! Run configuration files.
//!
//! ```json
//! {
//!   "mesh": { "generate": { "shape": "unit_square", "n": 16, "tags": "all=N" } },
//!   "coefficients": "robin.json",
//!   "evolution": { "scheme": "implicit_euler", "dt": 0.001, "t_end": 0.1 },
//!   "u0": "sin(pi*x) * sin(pi*y)",
//!   "output_dir": "out",
//!   "seed": 0
//! }
//! ```
//!
//! Unknown keys are rejected. Relative paths resolve against the directory
//! holding the config file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::assembly::{assemble_with, AssemblyOptions, BoundaryMode, CoefficientFile, CoefficientSet, DiscreteOperator};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::mesh::{generate_structured, load_mesh, Shape, TagRule, TriMesh};
use crate::parabolic::BoundaryData;
use crate::semigroup::EvolutionConfig;
use crate::spectral::EigenOptions;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum MeshSource {
    File(PathBuf),
    Generate(GenerateSpec),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    /// `unit_square`, `l_shape` or `rectangle:W,H`.
    pub shape: String,
    pub n: usize,
    /// Tag rule text such as `all=N` or `bottom=D,rest=N`.
    pub tags: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum CoefficientSource {
    File(PathBuf),
    Inline(CoefficientFile),
}

/// Boundary data for the parabolic problem.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum PhiSource {
    Constant(f64),
    /// Time-independent expression over `x`, `y`.
    Expr(String),
    /// Samples on all vertices at increasing times.
    Samples(BoundaryData),
    File(PathBuf),
}

fn default_output_dir() -> PathBuf {
    PathBuf::from(".")
}

fn yes() -> bool {
    true
}

fn default_eigenvalues() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshSource,
    pub coefficients: CoefficientSource,
    /// Overrides the mode named in the coefficient file.
    #[serde(default)]
    pub mode: Option<BoundaryMode>,
    #[serde(default)]
    pub assembly: AssemblyOptions,
    #[serde(default)]
    pub eigen: EigenOptions,
    /// Number of eigenpairs written by `eig`.
    #[serde(default = "default_eigenvalues")]
    pub eigenvalues: usize,
    /// Defaults to implicit Euler, lumped mass, `dt = h²/4`, `t_end = 0.25`.
    #[serde(default)]
    pub evolution: Option<EvolutionConfig>,
    #[serde(default)]
    pub u0: Option<String>,
    #[serde(default)]
    pub phi: Option<PhiSource>,
    /// Kernel time used by `verify`.
    #[serde(default)]
    pub kernel_t: Option<f64>,
    /// Indicator trials for the positivity-improving check; all dofs when absent.
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub svg: bool,
}

pub const DEFAULT_T_END: f64 = 0.25;
pub const DEFAULT_KERNEL_T: f64 = 0.1;

/// A config with every referenced file loaded.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: RunConfig,
    pub base: PathBuf,
    pub mesh: Arc<TriMesh>,
    pub coeffs: CoefficientSet,
    pub mode: BoundaryMode,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl Problem {
    pub fn load(path: &Path) -> Result<Self> {
        let config = RunConfig::parse(&read(path)?)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_config(config, base)
    }

    pub fn from_config(mut config: RunConfig, base: PathBuf) -> Result<Self> {
        config.eigen.seed = config.seed;
        let mesh = match &config.mesh {
            MeshSource::File(p) => load_mesh(&read(&base.join(p))?)?,
            MeshSource::Generate(g) => {
                let shape: Shape = g.shape.parse()?;
                let tags: TagRule = g.tags.parse()?;
                generate_structured(shape, g.n, &tags)?
            }
        };
        let file = match &config.coefficients {
            CoefficientSource::File(p) => CoefficientFile::parse(&read(&base.join(p))?)?,
            CoefficientSource::Inline(c) => c.clone(),
        };
        let coeffs = file.to_coefficients(&mesh)?;
        let mode = config.mode.unwrap_or(file.mode);
        if config.eigenvalues == 0 {
            return Err(Error::invalid("eigenvalues must be at least 1"));
        }
        Ok(Problem {
            config,
            base,
            mesh: Arc::new(mesh),
            coeffs,
            mode,
        })
    }

    pub fn operator(&self) -> Result<DiscreteOperator> {
        assemble_with(&self.mesh, &self.coeffs, self.mode, &self.config.assembly)
    }

    pub fn evolution(&self) -> EvolutionConfig {
        self.config.evolution.unwrap_or_else(|| {
            EvolutionConfig::implicit_euler(EvolutionConfig::default_dt(self.mesh.h_max()), DEFAULT_T_END)
        })
    }

    pub fn output_dir(&self) -> Result<PathBuf> {
        let dir = self.base.join(&self.config.output_dir);
        std::fs::create_dir_all(&dir)?;
        Ok(dir)
    }

    pub fn u0(&self) -> Result<Option<Vec<f64>>> {
        match &self.config.u0 {
            None => Ok(None),
            Some(src) => {
                let e = Expr::parse(src)?;
                Ok(Some(self.mesh.vertices().iter().map(|p| e.eval(p[0], p[1])).collect()))
            }
        }
    }

    /// Boundary data; without a `phi` entry the boundary values of `u0` are held fixed.
    pub fn phi(&self, u0: &[f64], t_end: f64) -> Result<BoundaryData> {
        let data = match &self.config.phi {
            None => BoundaryData {
                times: vec![0.0, t_end],
                values: vec![u0.to_vec(), u0.to_vec()],
            },
            Some(PhiSource::Constant(v)) => BoundaryData::constant(&self.mesh, *v, t_end),
            Some(PhiSource::Expr(src)) => {
                let e = Expr::parse(src)?;
                BoundaryData::from_fn(&self.mesh, vec![0.0, t_end], |_, p| e.eval(p[0], p[1]))
            }
            Some(PhiSource::Samples(d)) => d.clone(),
            Some(PhiSource::File(p)) => serde_json::from_str(&read(&self.base.join(p))?)?,
        };
        data.validate(self.mesh.n_vertices())?;
        Ok(data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"{
        "mesh": {"generate": {"shape": "unit_square", "n": 4, "tags": "all=N"}},
        "coefficients": {"a": [[1, 0], [0, 1]], "beta": 1, "mu": 1, "mode": "robin"}
    }"#;

    #[test]
    fn defaults_and_inline_coefficients() {
        let c = RunConfig::parse(MIN).unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.output_dir, PathBuf::from("."));
        let p = Problem::from_config(c, PathBuf::new()).unwrap();
        assert_eq!(p.mode, BoundaryMode::Robin);
        assert_eq!(p.mesh.n_vertices(), 25);
        let ev = p.evolution();
        assert!((ev.dt - p.mesh.h_max().powi(2) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MIN.replacen('{', r#"{"sead": 1,"#, 1);
        let err = RunConfig::parse(&bad).unwrap_err();
        assert!(err.to_string().contains("sead"), "{err}");
        let nested = MIN.replace(r#""n": 4"#, r#""n": 4, "m": 2"#);
        assert!(RunConfig::parse(&nested).is_err());
        let eig_seed = MIN.replacen('{', r#"{"eigen": {"seed": 3},"#, 1);
        assert!(RunConfig::parse(&eig_seed).is_err());
    }

    #[test]
    fn paths_resolve_against_the_config_directory() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        std::fs::create_dir_all(dir.join("sub")).unwrap();
        std::fs::write(
            dir.join("sub/c.json"),
            r#"{"a": [[1, 0], [0, 1]], "mu": 1, "mode": "neumann"}"#,
        )
        .unwrap();
        let cfg = r#"{"mesh": {"generate": {"shape": "unit_square", "n": 2, "tags": "N"}},
                      "coefficients": "sub/c.json", "u0": "x + y"}"#;
        std::fs::write(dir.join("run.json"), cfg).unwrap();
        let p = Problem::load(&dir.join("run.json")).unwrap();
        assert_eq!(p.mode, BoundaryMode::Neumann);
        assert_eq!(p.u0().unwrap().unwrap()[8], 2.0);
    }
}

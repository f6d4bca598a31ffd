pub mod basic;
pub mod figures;
pub mod flows;
pub mod verify;

use std::path::{Path, PathBuf};

use gavriflow::axisolver::FlowScenario;
use gavriflow::io;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::GlobalArgs;

/// Options shared by every command.
pub struct Context {
    pub scenario: Option<PathBuf>,
    pub out: PathBuf,
    pub order: Option<usize>,
    pub step: Option<f64>,
    pub tol: Option<f64>,
    pub glyph_scale: f64,
}

impl Context {
    pub fn new(args: GlobalArgs) -> CliResult<Self> {
        if let Some(h) = args.step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(CliError::Input(format!("--step must be positive, got {h}")));
            }
        }
        if let Some(t) = args.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Input(format!("--tol must be positive, got {t}")));
            }
        }
        if !(args.glyph_scale > 0.0 && args.glyph_scale.is_finite()) {
            return Err(CliError::Input(format!("--glyph-scale must be positive, got {}", args.glyph_scale)));
        }
        Ok(Context {
            scenario: args.scenario,
            out: args.out,
            order: args.order,
            step: args.step,
            tol: args.tol,
            glyph_scale: args.glyph_scale,
        })
    }

    /// The scenario file (or `default`) with the step and tolerance
    /// overrides applied, validated before any solver runs.
    pub fn scenario_or(&self, default: FlowScenario) -> CliResult<FlowScenario> {
        let mut sc = match &self.scenario {
            Some(path) => io::read_json::<FlowScenario>(path)?,
            None => default,
        };
        if let Some(h) = self.step {
            sc.p_step = h;
            sc.z_step = h;
        }
        if let Some(t) = self.tol {
            sc.tol = t;
        }
        sc.validate().map_err(|e| CliError::Input(format!("invalid scenario: {e}")))?;
        Ok(sc)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        std::fs::create_dir_all(&self.out).map_err(gavriflow::Error::from)?;
        let path = self.path(name);
        io::write_atomic(&path, bytes)?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<PathBuf> {
        let bytes = io::to_json(value)?;
        self.write(name, &bytes)
    }
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

/// Print one line per written file.
pub fn announce(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

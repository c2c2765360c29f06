//! Flat key-value experiment configuration.
//!
//! The file format is UTF-8 text with one `key = value` pair per line and
//! `#` comments. Every key is optional; absent keys fall back to the default
//! desk-scale setup: a 4x4 half-wavelength array at 2.4 GHz band, the
//! receiver 20 m away at 60 degrees elevation, two wardens 30 m away at 45
//! and 135 degrees, -90 dBm noise floors, 3 dB warden noise uncertainty,
//! covertness tolerance 0.01, and a 30 dBm power budget. Angles live in
//! degrees and powers in dBm here; conversion to radians and linear watts
//! happens when the config is lowered into solver types.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use covert_ra::{build_upa, ArrayScene, SystemParams, Vec3};

/// Which experiment grid to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// Single point, final iterates only.
    None,
    /// Directivity grid with per-iteration rows.
    Convergence,
    /// Antenna-count grid (square arrays).
    VsN,
    /// Transmitter-receiver distance grid.
    VsDistance,
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SweepKind::None => "none",
            SweepKind::Convergence => "convergence",
            SweepKind::VsN => "vs_n",
            SweepKind::VsDistance => "vs_distance",
        };
        f.write_str(s)
    }
}

#[derive(Debug)]
pub enum ConfigError {
    /// Unreadable or syntactically invalid input; carries a line number.
    Parse {
        line: usize,
        message: String,
    },
    /// Syntactically valid but physically meaningless.
    Domain {
        message: String,
    },
    Io(std::io::Error),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, message } => {
                write!(f, "config parse error at line {line}: {message}")
            }
            ConfigError::Domain { message } => write!(f, "config domain error: {message}"),
            ConfigError::Io(e) => write!(f, "config io error: {e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub wavelength_m: f64,
    /// Element aperture; `None` derives `(wavelength / 2)^2`.
    pub element_area_m2: Option<f64>,
    pub directivity_p: f64,
    pub noise_bob_dbm: f64,
    pub noise_willie_dbm: f64,
    pub rho_db: f64,
    pub delta: f64,
    pub pmax_dbm: f64,
    pub theta_max_deg: f64,
    pub nx: usize,
    pub ny: usize,
    pub spacing_m: f64,
    pub r_b_m: f64,
    pub phi_b_deg: f64,
    pub r_w_m: Vec<f64>,
    pub phi_w_deg: Vec<f64>,
    pub schemes: Vec<String>,
    pub realizations: usize,
    pub seed: u64,
    pub sweep: SweepKind,
    pub sweep_n: Vec<usize>,
    pub sweep_r_b_m: Vec<f64>,
    pub sweep_p: Vec<f64>,
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Half-width of the seeded perturbation on the adaptive scheme's
    /// initial rotation, radians; spreads realizations across local optima.
    pub init_perturbation_rad: f64,
    pub solver_tol: f64,
    /// Emit measured wall-clock times instead of the deterministic zero
    /// placeholder in the runtime column.
    pub wall_clock: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            wavelength_m: 0.125,
            element_area_m2: None,
            directivity_p: 1.0,
            noise_bob_dbm: -90.0,
            noise_willie_dbm: -90.0,
            rho_db: 3.0,
            delta: 0.01,
            pmax_dbm: 30.0,
            theta_max_deg: 30.0,
            nx: 4,
            ny: 4,
            spacing_m: 0.0625,
            r_b_m: 20.0,
            phi_b_deg: 60.0,
            r_w_m: vec![30.0, 30.0],
            phi_w_deg: vec![45.0, 135.0],
            schemes: vec![
                "ra".into(),
                "fixed".into(),
                "random".into(),
                "isotropic".into(),
            ],
            realizations: 100,
            seed: 1,
            sweep: SweepKind::None,
            sweep_n: vec![4, 9, 16, 25, 36],
            sweep_r_b_m: vec![20.0, 30.0, 40.0, 50.0, 60.0],
            sweep_p: vec![1.0, 2.0, 4.0],
            max_iters: 30,
            rel_tol: 1e-3,
            init_perturbation_rad: 1e-3,
            solver_tol: 1e-8,
            wall_clock: false,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn parse_scalar<T: std::str::FromStr>(
    value: &str,
    line: usize,
    key: &str,
) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::Parse {
        line,
        message: format!("invalid value '{}' for key '{key}'", value.trim()),
    })
}

fn parse_list<T: std::str::FromStr>(
    value: &str,
    line: usize,
    key: &str,
) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(|item| parse_scalar(item, line, key))
        .collect()
}

fn parse_bool(value: &str, line: usize, key: &str) -> Result<bool, ConfigError> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(ConfigError::Parse {
            line,
            message: format!("invalid boolean '{other}' for key '{key}'"),
        }),
    }
}

/// Parses a config file, filling defaults for absent keys and validating
/// the combined result.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(ConfigError::Io)?;
    parse_config(&text)
}

/// Parses config text (see [`load_config`]).
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected 'key = value', got '{content}'"),
        })?;
        let key = key.trim();
        match key {
            "wavelength_m" => cfg.wavelength_m = parse_scalar(value, line, key)?,
            "element_area_m2" => cfg.element_area_m2 = Some(parse_scalar(value, line, key)?),
            "directivity_p" => cfg.directivity_p = parse_scalar(value, line, key)?,
            "noise_bob_dbm" => cfg.noise_bob_dbm = parse_scalar(value, line, key)?,
            "noise_willie_dbm" => cfg.noise_willie_dbm = parse_scalar(value, line, key)?,
            "rho_db" => cfg.rho_db = parse_scalar(value, line, key)?,
            "delta" => cfg.delta = parse_scalar(value, line, key)?,
            "pmax_dbm" => cfg.pmax_dbm = parse_scalar(value, line, key)?,
            "theta_max_deg" => cfg.theta_max_deg = parse_scalar(value, line, key)?,
            "nx" => cfg.nx = parse_scalar(value, line, key)?,
            "ny" => cfg.ny = parse_scalar(value, line, key)?,
            "spacing_m" => cfg.spacing_m = parse_scalar(value, line, key)?,
            "r_b_m" => cfg.r_b_m = parse_scalar(value, line, key)?,
            "phi_b_deg" => cfg.phi_b_deg = parse_scalar(value, line, key)?,
            "r_w_m" => cfg.r_w_m = parse_list(value, line, key)?,
            "phi_w_deg" => cfg.phi_w_deg = parse_list(value, line, key)?,
            "schemes" => {
                cfg.schemes = value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            }
            "realizations" => cfg.realizations = parse_scalar(value, line, key)?,
            "seed" => cfg.seed = parse_scalar(value, line, key)?,
            "sweep" => cfg.sweep = match value.trim() {
                "none" => SweepKind::None,
                "convergence" => SweepKind::Convergence,
                "vs_n" => SweepKind::VsN,
                "vs_distance" => SweepKind::VsDistance,
                other => return Err(ConfigError::Parse {
                    line,
                    message: format!(
                        "unknown sweep '{other}' (expected none, convergence, vs_n, vs_distance)"
                    ),
                }),
            },
            "sweep_n" => cfg.sweep_n = parse_list(value, line, key)?,
            "sweep_r_b_m" => cfg.sweep_r_b_m = parse_list(value, line, key)?,
            "sweep_p" => cfg.sweep_p = parse_list(value, line, key)?,
            "max_iters" => cfg.max_iters = parse_scalar(value, line, key)?,
            "rel_tol" => cfg.rel_tol = parse_scalar(value, line, key)?,
            "init_perturbation_rad" => cfg.init_perturbation_rad = parse_scalar(value, line, key)?,
            "solver_tol" => cfg.solver_tol = parse_scalar(value, line, key)?,
            "wall_clock" => cfg.wall_clock = parse_bool(value, line, key)?,
            other => {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("unknown key '{other}'"),
                })
            }
        }
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn domain(message: impl Into<String>) -> ConfigError {
    ConfigError::Domain {
        message: message.into(),
    }
}

fn validate(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    if cfg.wavelength_m <= 0.0 {
        return Err(domain("wavelength_m must be positive"));
    }
    if let Some(s) = cfg.element_area_m2 {
        if s <= 0.0 {
            return Err(domain("element_area_m2 must be positive"));
        }
    }
    if cfg.directivity_p < 0.0 {
        return Err(domain("directivity_p must be non-negative"));
    }
    if cfg.rho_db <= 0.0 {
        return Err(domain("rho_db must be positive (rho > 1)"));
    }
    if !(0.0 < cfg.delta && cfg.delta < 1.0) {
        return Err(domain("delta must lie in (0, 1)"));
    }
    if !(0.0..=90.0).contains(&cfg.theta_max_deg) {
        return Err(domain("theta_max_deg must lie in [0, 90]"));
    }
    if cfg.nx * cfg.ny == 0 {
        return Err(domain("array must have at least one element"));
    }
    if cfg.spacing_m <= 0.0 {
        return Err(domain("spacing_m must be positive"));
    }
    if cfg.r_b_m <= 0.0 {
        return Err(domain("r_b_m must be positive"));
    }
    if cfg.r_w_m.len() != cfg.phi_w_deg.len() {
        return Err(domain("r_w_m and phi_w_deg must have equal length"));
    }
    if cfg.r_w_m.iter().any(|r| *r <= 0.0) {
        return Err(domain("warden distances must be positive"));
    }
    if cfg.schemes.is_empty() {
        return Err(domain("schemes must not be empty"));
    }
    if cfg.realizations == 0 {
        return Err(domain("realizations must be at least 1"));
    }
    if cfg.max_iters == 0 {
        return Err(domain("max_iters must be at least 1"));
    }
    if cfg.rel_tol <= 0.0 {
        return Err(domain("rel_tol must be positive"));
    }
    if cfg.solver_tol <= 0.0 {
        return Err(domain("solver_tol must be positive"));
    }
    let sorted = |v: &[f64]| v.windows(2).all(|w| w[0] <= w[1]);
    match cfg.sweep {
        SweepKind::Convergence => {
            if cfg.sweep_p.is_empty() || !sorted(&cfg.sweep_p) {
                return Err(domain("sweep_p must be non-empty and sorted"));
            }
        }
        SweepKind::VsN => {
            if cfg.sweep_n.is_empty() || cfg.sweep_n.windows(2).any(|w| w[0] > w[1]) {
                return Err(domain("sweep_n must be non-empty and sorted"));
            }
            for n in &cfg.sweep_n {
                let side = (*n as f64).sqrt().round() as usize;
                if side * side != *n || *n == 0 {
                    return Err(domain(format!(
                        "sweep_n entries must be positive perfect squares, got {n}"
                    )));
                }
            }
        }
        SweepKind::VsDistance => {
            if cfg.sweep_r_b_m.is_empty() || !sorted(&cfg.sweep_r_b_m) {
                return Err(domain("sweep_r_b_m must be non-empty and sorted"));
            }
        }
        SweepKind::None => {}
    }
    Ok(())
}

impl ExperimentConfig {
    /// Lowers the convenience units into solver parameters.
    pub fn system_params(&self) -> SystemParams {
        SystemParams {
            wavelength_m: self.wavelength_m,
            element_area_m2: self
                .element_area_m2
                .unwrap_or((self.wavelength_m / 2.0) * (self.wavelength_m / 2.0)),
            directivity: self.directivity_p,
            noise_bob: dbm_to_watts(self.noise_bob_dbm),
            noise_willie_nominal: dbm_to_watts(self.noise_willie_dbm),
            noise_uncertainty: db_to_linear(self.rho_db),
            covert_tolerance: self.delta,
            pmax: dbm_to_watts(self.pmax_dbm),
            theta_max: self.theta_max_deg * PI / 180.0,
        }
    }

    /// Builds the scene: the array on the x-y plane and every node placed
    /// at `[r cos(phi), 0, r sin(phi)]` in the x-z plane.
    pub fn scene(&self, nx: usize, ny: usize, r_b_m: f64) -> ArrayScene {
        let polar = |r: f64, phi_deg: f64| {
            let phi = phi_deg * PI / 180.0;
            Vec3::new(r * phi.cos(), 0.0, r * phi.sin())
        };
        let mut nodes = vec![polar(r_b_m, self.phi_b_deg)];
        for (r, phi) in self.r_w_m.iter().zip(self.phi_w_deg.iter()) {
            nodes.push(polar(*r, *phi));
        }
        ArrayScene::new(build_upa(nx, ny, self.spacing_m), nodes)
            .expect("validated geometry cannot collapse")
    }
}

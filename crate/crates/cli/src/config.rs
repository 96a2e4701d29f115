//! Config file parsing and validation.
//!
//! Flat TOML, every key optional, unknown keys rejected. The resolved config
//! is echoed into the output directory so a run can always be reproduced.

use serde::{Deserialize, Serialize};

use backstep_core::feedback::ControlProfile;
use backstep_core::spectral::{DispersionFn, Parity, Spectrum, SystemSpec};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub kind: Option<String>,
    pub g: Option<f64>,
    pub depth: Option<f64>,
    pub alpha: Option<f64>,
    pub h: Option<String>,
    pub h_table: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    pub n: Option<usize>,
    pub r: Option<f64>,
    pub parity: Option<String>,
    pub b_profile: Option<String>,
    pub b_amplitude: Option<f64>,
    pub b_table: Option<String>,
    pub seed: Option<u64>,
    pub output_dir: Option<String>,
    pub horizon: Option<f64>,
    pub grid_points: Option<usize>,
    pub dump_modes: Option<usize>,
    pub t_horizon: Option<f64>,
    pub control_grid: Option<usize>,
    pub sweep_lambdas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KindCfg {
    WaterWave,
    GenericMultiplier,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BProfileCfg {
    Unit,
    Sinusoidal,
    Table,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub kind: KindCfg,
    pub g: f64,
    pub depth: f64,
    pub alpha: f64,
    pub h: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_table: Option<Vec<f64>>,
    pub lambda: f64,
    pub n: usize,
    pub r: f64,
    pub parity: String,
    pub b_profile: BProfileCfg,
    pub b_amplitude: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_table: Option<String>,
    pub seed: u64,
    pub output_dir: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    pub grid_points: usize,
    pub dump_modes: usize,
    pub t_horizon: f64,
    pub control_grid: usize,
    pub sweep_lambdas: Vec<f64>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn fail<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Parse and validate a TOML document; an empty document yields the default
/// configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| ConfigError(format!("invalid TOML: {e}")))?;
    resolve(raw)
}

pub fn resolve(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let kind = match raw.kind.as_deref().unwrap_or("water_wave") {
        "water_wave" => KindCfg::WaterWave,
        "generic_multiplier" => KindCfg::GenericMultiplier,
        other => return fail(format!("key `kind`: unknown value `{other}`")),
    };
    let g = raw.g.unwrap_or(9.81);
    if g <= 0.0 || !g.is_finite() {
        return fail(format!("key `g`: must be positive, got {g}"));
    }
    let depth = raw.depth.unwrap_or(1.0);
    if depth <= 0.0 || !depth.is_finite() {
        return fail(format!("key `depth`: must be positive, got {depth}"));
    }
    let alpha = raw.alpha.unwrap_or(1.5);
    if kind == KindCfg::GenericMultiplier && (alpha <= 1.0 || !alpha.is_finite()) {
        return fail(format!("key `alpha`: must exceed 1, got {alpha}"));
    }
    let h = raw.h.clone().unwrap_or_else(|| "power_law".to_string());
    match h.as_str() {
        "power_law" | "water_wave_dispersion" | "table" => {}
        other => return fail(format!("key `h`: unknown dispersion `{other}`")),
    }
    if h == "table" && raw.h_table.is_none() {
        return fail("key `h_table`: required when h = \"table\"");
    }
    let lambda = raw.lambda.unwrap_or(1.0);
    if lambda <= 0.0 || !lambda.is_finite() {
        return fail(format!("key `lambda`: must be positive, got {lambda}"));
    }
    let n = raw.n.unwrap_or(128);
    if n < 1 {
        return fail("key `n`: must be at least 1");
    }
    let r = raw.r.unwrap_or(0.0);
    let effective_alpha = if kind == KindCfg::WaterWave {
        1.5
    } else {
        alpha
    };
    let (lo, hi) = (0.5 - effective_alpha, effective_alpha - 0.5);
    if r <= lo || r >= hi {
        return fail(format!(
            "key `r`: must lie strictly inside ({lo}, {hi}) for alpha = {effective_alpha}, got {r}"
        ));
    }
    let parity = raw.parity.clone().unwrap_or_else(|| "odd".to_string());
    if parity != "odd" && parity != "even" {
        return fail(format!(
            "key `parity`: expected \"odd\" or \"even\", got `{parity}`"
        ));
    }
    let b_profile = match raw.b_profile.as_deref().unwrap_or("unit") {
        "unit" => BProfileCfg::Unit,
        "sinusoidal" => BProfileCfg::Sinusoidal,
        "table" => BProfileCfg::Table,
        other => return fail(format!("key `b_profile`: unknown value `{other}`")),
    };
    let b_amplitude = raw.b_amplitude.unwrap_or(0.5);
    if matches!(b_profile, BProfileCfg::Sinusoidal) && b_amplitude.abs() >= 1.0 {
        return fail(format!(
            "key `b_amplitude`: must stay below 1 in modulus, got {b_amplitude}"
        ));
    }
    if matches!(b_profile, BProfileCfg::Table) && raw.b_table.is_none() {
        return fail("key `b_table`: required when b_profile = \"table\"");
    }
    let horizon = raw.horizon;
    if let Some(hz) = horizon {
        if hz <= 0.0 || !hz.is_finite() {
            return fail(format!("key `horizon`: must be positive, got {hz}"));
        }
    }
    let grid_points = raw.grid_points.unwrap_or(256);
    if grid_points < 9 {
        return fail("key `grid_points`: need at least 9 samples");
    }
    let t_horizon = raw.t_horizon.unwrap_or(1.0);
    if t_horizon <= 0.0 || !t_horizon.is_finite() {
        return fail(format!(
            "key `t_horizon`: must be positive, got {t_horizon}"
        ));
    }
    let control_grid = raw.control_grid.unwrap_or(256);
    if control_grid < 2 {
        return fail("key `control_grid`: need at least 2 samples");
    }
    let sweep_lambdas = raw.sweep_lambdas.unwrap_or_else(|| vec![0.5, 1.0, 5.0]);
    if sweep_lambdas.is_empty() || sweep_lambdas.iter().any(|l| *l <= 0.0 || !l.is_finite()) {
        return fail("key `sweep_lambdas`: every rate must be positive");
    }

    Ok(RunConfig {
        kind,
        g,
        depth,
        alpha: effective_alpha,
        h,
        h_table: raw.h_table,
        lambda,
        n,
        r,
        parity,
        b_profile,
        b_amplitude,
        b_table: raw.b_table,
        seed: raw.seed.unwrap_or(0),
        output_dir: raw.output_dir.unwrap_or_else(|| "out".to_string()),
        horizon,
        grid_points,
        dump_modes: raw.dump_modes.unwrap_or(4),
        t_horizon,
        control_grid,
        sweep_lambdas,
    })
}

impl RunConfig {
    pub fn parity(&self) -> Parity {
        if self.parity == "even" {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn system_spec(&self) -> Result<SystemSpec, ConfigError> {
        let spec = match self.kind {
            KindCfg::WaterWave => SystemSpec::water_wave(self.g, self.depth),
            KindCfg::GenericMultiplier => {
                let h_fn = match self.h.as_str() {
                    "power_law" => DispersionFn::PowerLaw,
                    "water_wave_dispersion" => DispersionFn::WaterWaveDispersion {
                        g: self.g,
                        depth: self.depth,
                    },
                    "table" => DispersionFn::Table(
                        self.h_table.clone().expect("validated at resolve time"),
                    ),
                    _ => unreachable!("validated at resolve time"),
                };
                SystemSpec::generic(self.alpha, h_fn)
            }
        };
        spec.map_err(|e| ConfigError(e.to_string()))
    }

    pub fn spectrum(&self, n: usize) -> Result<Spectrum, ConfigError> {
        Spectrum::new(&self.system_spec()?, n, self.parity())
            .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn control_profile(&self, len: usize) -> Result<ControlProfile, ConfigError> {
        match self.b_profile {
            BProfileCfg::Unit => Ok(ControlProfile::unit(self.parity(), len)),
            BProfileCfg::Sinusoidal => {
                ControlProfile::sinusoidal(self.parity(), len, self.b_amplitude)
                    .map_err(|e| ConfigError(e.to_string()))
            }
            BProfileCfg::Table => {
                let path = self.b_table.as_ref().expect("validated at resolve time");
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError(format!("key `b_table`: cannot read {path}: {e}")))?;
                let mut values = Vec::new();
                for (idx, line) in text.lines().enumerate() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    let mut parts = line.split(',').map(str::trim);
                    let re: f64 = parts
                        .next()
                        .unwrap_or_default()
                        .parse()
                        .map_err(|e| ConfigError(format!("b_table line {}: {e}", idx + 1)))?;
                    let im: f64 = match parts.next() {
                        Some(s) if !s.is_empty() => s
                            .parse()
                            .map_err(|e| ConfigError(format!("b_table line {}: {e}", idx + 1)))?,
                        _ => 0.0,
                    };
                    values.push(num_complex::Complex64::new(re, im));
                }
                if values.len() < len {
                    return fail(format!(
                        "key `b_table`: {} entries provided, {len} modes required",
                        values.len()
                    ));
                }
                values.truncate(len);
                Ok(ControlProfile::from_values(self.parity(), values))
            }
        }
    }

    /// Simulation horizon: explicit key or the default six decay times.
    pub fn sim_horizon(&self) -> f64 {
        self.horizon.unwrap_or(6.0 / self.lambda)
    }

    pub fn echo_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_yields_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.g, 9.81);
        assert_eq!(cfg.depth, 1.0);
        assert_eq!(cfg.lambda, 1.0);
        assert_eq!(cfg.n, 128);
        assert_eq!(cfg.r, 0.0);
        assert_eq!(cfg.parity, "odd");
        assert!(matches!(cfg.b_profile, BProfileCfg::Unit));
        assert_eq!(cfg.t_horizon, 1.0);
    }

    #[test]
    fn negative_lambda_names_the_key() {
        let err = parse_config("lambda = -1.0").unwrap_err();
        assert!(err.0.contains("lambda"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config("lambad = 1.0").unwrap_err();
        assert!(err.0.contains("lambad"), "{}", err.0);
    }

    #[test]
    fn alpha_widens_or_narrows_the_r_range() {
        let cfg = parse_config("kind = \"generic_multiplier\"\nalpha = 1.2\nr = 0.65").unwrap();
        assert_eq!(cfg.alpha, 1.2);
        let err = parse_config("kind = \"generic_multiplier\"\nalpha = 1.2\nr = 0.75").unwrap_err();
        assert!(err.0.contains("`r`"));
    }
}

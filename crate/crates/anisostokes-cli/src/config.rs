//! Flat `key = value` configuration files with `#` comments.

use std::path::{Path, PathBuf};

use anisostokes::stab::StabVariant;

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    pub levels: Option<Vec<usize>>,
    pub stab: Option<StabVariant>,
    pub gamma: Option<f64>,
    pub gamma_i: Option<f64>,
    pub gamma_0: Option<f64>,
    pub x0: Option<f64>,
    pub y0: Option<f64>,
    pub radius: Option<f64>,
    pub out: Option<PathBuf>,
    pub vtk: Option<bool>,
    pub mm: Option<bool>,
    pub quality: Option<bool>,
    pub sweep_step: Option<f64>,
}

const VALID_KEYS: &[&str] = &[
    "levels", "stab", "gamma", "gamma_i", "gamma_0", "x0", "y0", "radius", "out", "vtk", "mm",
    "quality", "sweep_step",
];

pub fn load_config_file(path: &Path) -> Result<ConfigFile, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ConfigFile, String> {
    let mut cfg = ConfigFile::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        let type_err =
            |what: &str| format!("line {}: value for `{key}` is not a {what}", lineno + 1);
        match key {
            "levels" => {
                let levels = value
                    .split(',')
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| type_err("comma-separated list of positive integers"))?;
                cfg.levels = Some(levels);
            }
            "stab" => {
                cfg.stab = Some(match value {
                    "S" | "s" => StabVariant::S,
                    "S2" | "s2" => StabVariant::S2,
                    "SCIP" | "Scip" | "scip" => StabVariant::Scip,
                    "none" | "None" => StabVariant::None,
                    other => {
                        return Err(format!(
                            "line {}: unknown stabilisation `{other}` (expected S, S2, SCIP, none)",
                            lineno + 1
                        ))
                    }
                });
            }
            "gamma" => cfg.gamma = Some(value.parse().map_err(|_| type_err("number"))?),
            "gamma_i" => cfg.gamma_i = Some(value.parse().map_err(|_| type_err("number"))?),
            "gamma_0" => cfg.gamma_0 = Some(value.parse().map_err(|_| type_err("number"))?),
            "x0" => cfg.x0 = Some(value.parse().map_err(|_| type_err("number"))?),
            "y0" => cfg.y0 = Some(value.parse().map_err(|_| type_err("number"))?),
            "radius" => cfg.radius = Some(value.parse().map_err(|_| type_err("number"))?),
            "out" => cfg.out = Some(PathBuf::from(value)),
            "vtk" => cfg.vtk = Some(value.parse().map_err(|_| type_err("boolean"))?),
            "mm" => cfg.mm = Some(value.parse().map_err(|_| type_err("boolean"))?),
            "quality" => cfg.quality = Some(value.parse().map_err(|_| type_err("boolean"))?),
            "sweep_step" => {
                cfg.sweep_step = Some(value.parse().map_err(|_| type_err("number"))?)
            }
            other => {
                return Err(format!(
                    "unknown key `{other}` (valid keys: {})",
                    VALID_KEYS.join(", ")
                ))
            }
        }
    }
    if let Some(g) = cfg.gamma.or(cfg.gamma_i).or(cfg.gamma_0) {
        if g <= 0.0 && cfg.stab != Some(StabVariant::None) {
            return Err("gamma must be positive unless stab = none".into());
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_variant_and_gamma() {
        let cfg = parse_config("stab = S2\ngamma_i = 1e-2\n").unwrap();
        assert_eq!(cfg.stab, Some(StabVariant::S2));
        assert_eq!(cfg.gamma_i, Some(1e-2));
    }

    #[test]
    fn empty_file_is_all_defaults() {
        let cfg = parse_config("").unwrap();
        assert!(cfg.levels.is_none());
        assert!(cfg.stab.is_none());
        assert!(cfg.gamma.is_none());
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg = parse_config("# a comment\n\nlevels = 4, 8 # inline\n").unwrap();
        assert_eq!(cfg.levels, Some(vec![4, 8]));
    }

    #[test]
    fn negative_gamma_rejected() {
        assert!(parse_config("gamma = -1").is_err());
    }

    #[test]
    fn unknown_key_lists_valid_ones() {
        let err = parse_config("gama = 2").unwrap_err();
        assert!(err.contains("unknown key"));
        assert!(err.contains("gamma"));
    }

    #[test]
    fn type_mismatch_reports_line() {
        let err = parse_config("x0 = 0.1\nradius = abc").unwrap_err();
        assert!(err.contains("line 2"), "{err}");
    }
}

//! Flat `key = value` run configuration with `#` comments.

use std::path::PathBuf;

use crate::dynamics::{planck_nbar, planck_temperature};
use crate::error::{Error, Result};
use crate::scenarios::ScenarioParams;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: ScenarioParams,
    /// Temperature when given instead of `nbar`; otherwise derived.
    pub temperature: Option<f64>,
    pub out: PathBuf,
}

#[derive(Clone, Debug, Default)]
pub struct ConfigBuilder {
    entries: Vec<(String, String, String)>,
}

fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: field,
        reason: reason.into(),
    }
}

fn canonical(key: &str) -> Option<&'static str> {
    Some(match key {
        "omega" | "w" => "omega",
        "kappa" => "kappa",
        "nbar" => "nbar",
        "T" | "temperature" => "temperature",
        "n0" => "n0",
        "m" | "mass" => "mass",
        "nu" => "nu",
        "alpha" => "alpha",
        "N" | "cutoff" => "cutoff",
        "G" | "guard" => "guard",
        "dt" => "dt",
        "t_end" | "T_end" => "t_end",
        "ensemble" => "ensemble",
        "seed" => "seed",
        "out" | "output" => "out",
        _ => return None,
    })
}

impl ConfigBuilder {
    /// Parse a config file body; later entries override earlier ones.
    pub fn parse(text: &str) -> Result<Self> {
        let mut b = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                invalid("config", format!("line {}: expected `key = value`", i + 1))
            })?;
            b.set(k.trim(), v.trim(), &format!("line {}", i + 1))?;
        }
        Ok(b)
    }

    pub fn set(&mut self, key: &str, value: &str, origin: &str) -> Result<()> {
        let k = canonical(key)
            .ok_or_else(|| invalid("config", format!("{origin}: unknown key `{key}`")))?;
        self.entries.retain(|(e, _, _)| e != k);
        self.entries
            .push((k.to_string(), value.to_string(), origin.to_string()));
        Ok(())
    }

    /// Merge `other` on top of `self` (flags over file).
    pub fn overlay(mut self, other: &ConfigBuilder) -> Self {
        for (k, v, o) in &other.entries {
            self.entries.retain(|(e, _, _)| e != k);
            self.entries.push((k.clone(), v.clone(), o.clone()));
        }
        self
    }

    fn get(&self, key: &str) -> Option<&(String, String, String)> {
        self.entries.iter().find(|(k, _, _)| k == key)
    }

    pub fn build(&self, defaults: ScenarioParams) -> Result<RunConfig> {
        let mut p = defaults;
        let real = |key: &'static str| -> Result<Option<f64>> {
            match self.get(key) {
                None => Ok(None),
                Some((_, v, o)) => v
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| invalid(key, format!("{o}: `{v}` is not a number"))),
            }
        };
        let int = |key: &'static str| -> Result<Option<u64>> {
            match self.get(key) {
                None => Ok(None),
                Some((_, v, o)) => v
                    .parse::<u64>()
                    .map(Some)
                    .map_err(|_| invalid(key, format!("{o}: `{v}` is not a non-negative integer"))),
            }
        };
        macro_rules! assign {
            ($field:ident, real) => {
                if let Some(v) = real(stringify!($field))? {
                    p.$field = v;
                }
            };
            ($field:ident, int, $t:ty) => {
                if let Some(v) = int(stringify!($field))? {
                    p.$field = v as $t;
                }
            };
        }
        assign!(omega, real);
        assign!(kappa, real);
        assign!(n0, real);
        assign!(mass, real);
        assign!(nu, real);
        assign!(alpha, real);
        assign!(dt, real);
        assign!(t_end, real);
        assign!(cutoff, int, usize);
        assign!(guard, int, usize);
        assign!(ensemble, int, usize);
        assign!(seed, int, u64);

        let nbar = real("nbar")?;
        let temp = real("temperature")?;
        let temperature = match (nbar, temp) {
            (Some(_), Some(_)) => {
                return Err(invalid("temperature", "give exactly one of nbar and T"))
            }
            (Some(n), None) => {
                p.nbar = n;
                None
            }
            (None, Some(t)) => {
                if !(p.omega > 0.0) {
                    return Err(invalid("omega", "must be > 0 to derive nbar from T"));
                }
                p.nbar = planck_nbar(p.omega, t)?;
                Some(t)
            }
            (None, None) => None,
        };
        p.validate()?;
        let temperature = match temperature {
            Some(t) => Some(t),
            None if p.nbar > 0.0 && p.omega > 0.0 => Some(planck_temperature(p.omega, p.nbar)?),
            None => Some(0.0),
        };
        let out = self
            .get("out")
            .map(|(_, v, _)| PathBuf::from(v))
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(RunConfig {
            params: p,
            temperature,
            out,
        })
    }
}

/// Parse `text` over `defaults`.
pub fn parse_config(text: &str, defaults: ScenarioParams) -> Result<RunConfig> {
    ConfigBuilder::parse(text)?.build(defaults)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> ScenarioParams {
        ScenarioParams::oscillator_default()
    }

    #[test]
    fn empty_gives_defaults() {
        let c = parse_config("", defaults()).unwrap();
        assert_eq!(c.params, defaults());
        assert_eq!(c.params.nu, 0.5);
        assert_eq!(c.params.cutoff, 30);
        assert_eq!(c.params.guard, 3);
        assert_eq!(c.params.dt, 1e-3);
    }

    #[test]
    fn temperature_inverts_planck() {
        let t = 1.0 / 2f64.ln();
        let c = parse_config(&format!("omega = 1\nT = {t}  # Planck\n"), defaults()).unwrap();
        assert!((c.params.nbar - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejections_name_the_field() {
        let e = parse_config("kappa = -1", defaults()).unwrap_err();
        assert!(matches!(e, Error::InvalidParameter { name: "kappa", .. }));
        assert!(parse_config("nbar = 1\nT = 2", defaults()).is_err());
        assert!(parse_config("bogus = 1", defaults()).is_err());
        assert!(parse_config("kappa 1", defaults()).is_err());
        let e = parse_config("N = x", defaults()).unwrap_err();
        assert!(matches!(e, Error::InvalidParameter { name: "cutoff", .. }));
    }

    #[test]
    fn flags_override_file() {
        let file = ConfigBuilder::parse("kappa = 0.3\nseed = 1").unwrap();
        let mut flags = ConfigBuilder::default();
        flags.set("seed", "9", "--seed").unwrap();
        let c = file.overlay(&flags).build(defaults()).unwrap();
        assert_eq!(c.params.kappa, 0.3);
        assert_eq!(c.params.seed, 9);
    }
}

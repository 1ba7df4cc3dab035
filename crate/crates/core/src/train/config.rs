//! `key = value` configuration files.
//!
//! One setting per line; `#` starts a comment; blank lines are ignored.
//! Keys are the field names of [`LapSrnConfig`] and [`TrainConfig`].

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::LapSrnConfig;

use super::TrainConfig;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse_config(text: &str) -> Result<Vec<ConfigEntry>> {
    let mut entries: Vec<ConfigEntry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::InvalidArgument(format!(
                "config line {}: expected 'key = value', got '{line}'",
                i + 1
            )));
        };
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(Error::InvalidArgument(format!("config line {}: empty key", i + 1)));
        }
        if let Some(prev) = entries.iter().find(|e| e.key == key) {
            return Err(Error::InvalidArgument(format!(
                "config line {}: '{key}' already set on line {}",
                i + 1,
                prev.line
            )));
        }
        entries.push(ConfigEntry { key, value: value.trim().to_string(), line: i + 1 });
    }
    Ok(entries)
}

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V>
where
    V::Err: std::fmt::Display,
{
    value.parse().map_err(|e| Error::InvalidArgument(format!("bad value '{value}' for '{key}': {e}")))
}

impl LapSrnConfig {
    /// Sets one field by name. Returns `Ok(false)` for keys this type does
    /// not own.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "scale" => self.scale = parse(key, value)?,
            "depth" => self.depth = parse(key, value)?,
            "channels" => self.channels = parse(key, value)?,
            "lrelu_slope" => self.lrelu_slope = parse(key, value)?,
            "use_pyramid" => self.use_pyramid = parse(key, value)?,
            "use_residual" => self.use_residual = parse(key, value)?,
            "loss_kind" | "loss" => self.loss_kind = parse(key, value)?,
            "charbonnier_eps" => self.charbonnier_eps = parse(key, value)?,
            "feature_up_init" => self.feature_up_init = parse(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

impl TrainConfig {
    /// Sets one field by name. Returns `Ok(false)` for keys this type does
    /// not own. `grad_clip = off` (or `0`) disables clipping.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "lr_init" => self.lr_init = parse(key, value)?,
            "lr_gamma" => self.lr_gamma = parse(key, value)?,
            "lr_step_epochs" => self.lr_step_epochs = parse(key, value)?,
            "momentum" => self.momentum = parse(key, value)?,
            "weight_decay" => self.weight_decay = parse(key, value)?,
            "iters_per_epoch" => self.iters_per_epoch = parse(key, value)?,
            "batch_n" => self.batch_n = parse(key, value)?,
            "lr_floor" => self.lr_floor = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "max_epochs" => self.max_epochs = parse(key, value)?,
            "patch_size" => self.patch_size = parse(key, value)?,
            "augment" => self.augment = parse(key, value)?,
            "grad_clip" => {
                self.grad_clip = match value {
                    "off" | "none" => None,
                    v => Some(parse::<f64>(key, v)?).filter(|&c| c != 0.0),
                }
            }
            "loss_reduction" => self.loss_reduction = parse(key, value)?,
            "log_wall_time" => self.log_wall_time = parse(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::{LossKind, Reduction};

    #[test]
    fn parses_and_applies() {
        let text = "# run\nscale = 8\ndepth=5 # fewer\n\nloss = l2\nlr_init = 2e-5\ngrad_clip = 0.5\nloss_reduction = sum\n";
        let entries = parse_config(text).unwrap();
        assert_eq!(entries.len(), 6);
        assert_eq!(entries[1].line, 3);
        let mut m = LapSrnConfig::new(4);
        let mut t = TrainConfig::default();
        for e in &entries {
            let known = m.set(&e.key, &e.value).unwrap() || t.set(&e.key, &e.value).unwrap();
            assert!(known, "{}", e.key);
        }
        assert_eq!((m.scale, m.depth, m.loss_kind), (8, 5, LossKind::L2));
        assert_eq!(t.lr_init, 2e-5);
        assert_eq!(t.grad_clip, Some(0.5));
        assert_eq!(t.loss_reduction, Reduction::Sum);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_config("scale 4").is_err());
        assert!(parse_config("= 4").is_err());
        assert!(parse_config("scale=2\nscale=4").is_err());
        let mut m = LapSrnConfig::new(4);
        assert!(m.set("depth", "ten").is_err());
        assert!(!m.set("nonsense", "1").unwrap());
        let mut t = TrainConfig::default();
        assert!(t.set("grad_clip", "off").unwrap());
        assert_eq!(t.grad_clip, None);
    }
}

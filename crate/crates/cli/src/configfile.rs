//! Declarative run-configuration files: flat `key = value` text with `#`
//! comments. Flags override file values, file values override defaults;
//! unknown keys are rejected so typos fail loudly.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context};

/// Every key a config file may set, with its documentation and default
/// (as printed by `defaults`).
pub const KNOWN_KEYS: &[(&str, &str, &str)] = &[
    ("epochs", "training epochs", "per command: 10000 (torsion2d), 20000 (vs1d), 1200 (parametric)"),
    ("seed", "base RNG seed", "7"),
    ("lr", "Adam learning rate", "per command: 1e-3 (torsion2d), scale-dependent (vs1d), 3e-3 (parametric)"),
    ("out", "output directory (joined to TORSION_PINN_OUT)", "run output under the current directory"),
    ("shape", "case name: circle | square | triangle | irregular", "-"),
    ("domain", "domain description file (.dom)", "-"),
    ("scale", "vs1d scale factor list, comma separated", "1,2,4"),
    ("seeds", "number of seeds to fan out", "1"),
    ("grid_spacing", "training lattice spacing (m)", "0.005"),
    ("quad_h", "quadrature cell size for J (m)", "0.001"),
    ("fd_h", "finite-difference oracle grid size (m)", "0.0025"),
    ("reference", "torsion2d reference: auto | analytic | fd", "auto"),
    ("points", "imported collocation CSV (kind,x,y)", "-"),
    ("ckpt", "checkpoint path", "model.ckpt in the output directory"),
    ("addr", "serve address", "127.0.0.1:8080"),
    ("g", "shear modulus", "1"),
    ("h", "oracle grid size or comma list for sweeps", "command-specific"),
    ("n", "1D oracle interval count", "4096"),
];

#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    pub values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("{}:{}: expected 'key = value', got {raw:?}", path.display(), idx + 1);
            };
            let key = key.trim().to_string();
            if !KNOWN_KEYS.iter().any(|(k, _, _)| *k == key) {
                bail!("{}:{}: unknown key {key:?}", path.display(), idx + 1);
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> anyhow::Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key {key} = {raw:?}: {e}")),
        }
    }
}

/// Print the recognized keys with their defaults.
pub fn print_defaults() {
    println!("# run configuration keys (key = value, '#' comments)");
    for (key, doc, default) in KNOWN_KEYS {
        println!("# {doc}; default: {default}");
        println!("# {key} = ...");
    }
}

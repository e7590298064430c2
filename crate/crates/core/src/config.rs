//! Flat `key = value` configuration files.
//!
//! One entry per line, `#` starts a comment. Recognized run keys:
//!
//! | key | default |
//! |-----|---------|
//! | `solver.newton_iters` | 4 |
//! | `solver.alpha` | 0.5 |
//! | `solver.helmholtz_tol` | 1e-8 |
//! | `solver.jacobi_iters_outer` | 10 |
//! | `solver.jacobi_iters_inner` | 2 |
//! | `solver.mu.J`, `solver.mu.M`, `solver.mu.H` | per mesh family |
//! | `solver.sparse_m_inverse` | `on` |
//! | `solver.final_residual` | `off` |
//! | `advection.limiter` | `off` |
//! | `advection.order` | 2 |
//! | `output.every` | 24 (steps between diagnostics rows) |
//! | `output.vtk` | `off` |

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mesh::MeshFamily;
use crate::swe::SolverConfig;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", no + 1)));
            }
            if entries.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", no + 1)));
            }
        }
        Ok(KeyValues { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get_str(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
            })
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    pub fn get_switch(&self, key: &str) -> Result<Option<bool>> {
        match self.get_str(key) {
            None => Ok(None),
            Some("on" | "true" | "yes" | "1") => Ok(Some(true)),
            Some("off" | "false" | "no" | "0") => Ok(Some(false)),
            Some(v) => Err(Error::Config(format!("bad switch `{v}` for `{key}` (on|off)"))),
        }
    }
}

const RUN_KEYS: &[&str] = &[
    "solver.newton_iters",
    "solver.alpha",
    "solver.helmholtz_tol",
    "solver.jacobi_iters_outer",
    "solver.jacobi_iters_inner",
    "solver.mu.J",
    "solver.mu.M",
    "solver.mu.H",
    "solver.sparse_m_inverse",
    "solver.final_residual",
    "advection.limiter",
    "advection.order",
    "output.every",
    "output.vtk",
];

/// Settings of a model run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub output_every: usize,
    pub output_vtk: bool,
}

impl RunConfig {
    pub fn defaults(family: MeshFamily) -> Self {
        RunConfig {
            solver: SolverConfig::for_family(family),
            output_every: 24,
            output_vtk: false,
        }
    }

    /// Defaults for `family` overridden by `kv`; unknown keys are errors.
    pub fn from_kv(kv: &KeyValues, family: MeshFamily) -> Result<Self> {
        if let Some(k) = kv.keys().find(|k| !RUN_KEYS.contains(k)) {
            return Err(Error::Config(format!("unknown key `{k}`")));
        }
        let mut c = Self::defaults(family);
        let s = &mut c.solver;
        if let Some(v) = kv.get("solver.newton_iters")? {
            s.newton_iters = v;
        }
        if let Some(v) = kv.get("solver.alpha")? {
            s.alpha = v;
        }
        if let Some(v) = kv.get("solver.helmholtz_tol")? {
            s.helmholtz_tol = v;
        }
        if let Some(v) = kv.get("solver.jacobi_iters_outer")? {
            s.jacobi_outer = v;
        }
        if let Some(v) = kv.get("solver.jacobi_iters_inner")? {
            s.jacobi_inner = v;
        }
        if let Some(v) = kv.get("solver.mu.J")? {
            s.relaxation.j = v;
        }
        if let Some(v) = kv.get("solver.mu.M")? {
            s.relaxation.m = v;
        }
        if let Some(v) = kv.get("solver.mu.H")? {
            s.relaxation.h = v;
        }
        if let Some(v) = kv.get_switch("solver.sparse_m_inverse")? {
            s.sparse_m_inverse = v;
        }
        if let Some(v) = kv.get_switch("solver.final_residual")? {
            s.final_residual = v;
        }
        if let Some(v) = kv.get_switch("advection.limiter")? {
            s.advection.limiter = v;
        }
        if let Some(v) = kv.get::<u8>("advection.order")? {
            if !(1..=2).contains(&v) {
                return Err(Error::Config(format!("advection.order must be 1 or 2, got {v}")));
            }
            s.advection.order = v;
        }
        if let Some(v) = kv.get("output.every")? {
            c.output_every = v;
        }
        if let Some(v) = kv.get_switch("output.vtk")? {
            c.output_vtk = v;
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_overrides_and_rejects_unknown_keys() {
        let kv = KeyValues::parse("# run\nsolver.newton_iters = 6\nadvection.limiter = on # fct\nsolver.mu.M=0.8\n").unwrap();
        let c = RunConfig::from_kv(&kv, MeshFamily::Hex).unwrap();
        assert_eq!(c.solver.newton_iters, 6);
        assert!(c.solver.advection.limiter);
        assert_eq!(c.solver.relaxation.m, 0.8);
        assert_eq!(c.solver.relaxation.j, 1.4);
        let bad = KeyValues::parse("solver.newton = 3").unwrap();
        assert!(RunConfig::from_kv(&bad, MeshFamily::Hex).is_err());
        assert!(KeyValues::parse("novalue").is_err());
        assert!(KeyValues::parse("a = 1\na = 2").is_err());
        let order = KeyValues::parse("advection.order = 3").unwrap();
        assert!(RunConfig::from_kv(&order, MeshFamily::Cube).is_err());
    }
}

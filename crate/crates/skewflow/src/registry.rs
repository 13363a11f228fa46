//! Builtin example systems by name.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use skewflow_core::Builtin;

use crate::config::{ConfigError, Entry};

pub struct BuiltinSpec {
    pub name: &'static str,
    /// Parameter names with their defaults, in positional order.
    pub parameters: &'static [(&'static str, f64)],
    pub about: &'static str,
    build: fn(&[f64]) -> Builtin,
}

pub const BUILTINS: &[BuiltinSpec] = &[
    BuiltinSpec { name: "zero", parameters: &[], about: "X = 0", build: |_| Builtin::Zero },
    BuiltinSpec {
        name: "rotation",
        parameters: &[("omega", TAU)],
        about: "X = [[0, -omega], [omega, 0]]",
        build: |p| Builtin::Rotation { omega: p[0] },
    },
    BuiltinSpec {
        name: "hyperbolic",
        parameters: &[("lambda", 1.0)],
        about: "X = diag(lambda, -lambda)",
        build: |p| Builtin::Hyperbolic { lambda: p[0] },
    },
    BuiltinSpec {
        name: "mathieu",
        parameters: &[("a", 1.0), ("q", 0.2)],
        about: "x'' + (a + 2q cos 2 pi t) x = 0",
        build: |p| Builtin::Mathieu { a: p[0], q: p[1] },
    },
];

pub fn find(name: &str) -> Option<&'static BuiltinSpec> {
    BUILTINS.iter().find(|b| b.name == name)
}

pub(crate) fn is_parameter(key: &str) -> bool {
    BUILTINS.iter().any(|b| b.parameters.iter().any(|(p, _)| *p == key))
}

impl BuiltinSpec {
    pub fn build(&self, values: &[f64]) -> Option<Builtin> {
        (values.len() == self.parameters.len() && values.iter().all(|v| v.is_finite())).then(|| (self.build)(values))
    }
}

/// Resolves `name` or `name(p1, p2, ...)` in `entry`, taking named parameters from
/// the other entries of `map`.
pub(crate) fn lookup(entry: &Entry, map: &BTreeMap<String, Entry>) -> Result<Builtin, ConfigError> {
    let value = entry.value.trim();
    let (name, positional) = match value.split_once('(') {
        Some((name, rest)) => {
            let args = rest.strip_suffix(')').ok_or_else(|| entry.error(format!("missing `)` in `{value}`")))?;
            let values = args
                .split(',')
                .filter(|a| !args.trim().is_empty() || !a.trim().is_empty())
                .map(|a| a.trim().parse::<f64>().map_err(|_| entry.error(format!("`{}` is not a number", a.trim()))))
                .collect::<Result<Vec<_>, _>>()?;
            (name.trim(), Some(values))
        }
        None => (value, None),
    };
    let spec = find(name).ok_or_else(|| {
        let names: Vec<_> = BUILTINS.iter().map(|b| b.name).collect();
        entry.error(format!("unknown builtin `{name}` ({})", names.join(", ")))
    })?;
    for (key, e) in map {
        if is_parameter(key) && !spec.parameters.iter().any(|(p, _)| p == key) {
            return Err(e.error(format!("is not a parameter of `{}`", spec.name)));
        }
    }
    let values = match positional {
        Some(values) => {
            if values.len() != spec.parameters.len() {
                return Err(entry.error(format!(
                    "`{}` takes {} parameters, got {}",
                    spec.name,
                    spec.parameters.len(),
                    values.len()
                )));
            }
            if let Some((key, e)) = map.iter().find(|(k, _)| spec.parameters.iter().any(|(p, _)| p == k)) {
                return Err(e.error(format!("`{key}` is already given in `{value}`")));
            }
            values
        }
        None => spec
            .parameters
            .iter()
            .map(|(p, default)| match map.get(*p) {
                Some(e) => e.value.trim().parse::<f64>().map_err(|_| e.error(format!("`{}` is not a number", e.value))),
                None => Ok(*default),
            })
            .collect::<Result<_, _>>()?,
    };
    spec.build(&values).ok_or_else(|| entry.error("parameters must be finite"))
}

//! Parsing of command-line values and network arguments.

use std::path::Path;

use anyhow::{anyhow, Context};
use hgi_core::netfile::load_network;
use hgi_core::scalar::{parse_rational, Rational};
use hgi_core::{fixtures, NetworkSpec};

use crate::Failure;

/// Loads `--net`: an existing file, otherwise a built-in fixture name.
pub fn network(arg: &str) -> Result<NetworkSpec, Failure> {
    let path = Path::new(arg);
    if path.exists() {
        return load_network(path).map_err(|e| match e {
            hgi_core::Error::Io(_) => Failure::io(anyhow!(e).context(format!("reading {arg}"))),
            other => Failure::invalid(anyhow!(other).context(format!("loading {arg}"))),
        });
    }
    fixtures::by_name(arg).ok_or_else(|| {
        Failure::io(anyhow!("{arg}: no such file, and not a fixture name (NET-A..NET-E, NET-B-HT, MM1)"))
    })
}

fn items(text: &str) -> impl Iterator<Item = &str> {
    text.split([',', ' ']).map(str::trim).filter(|s| !s.is_empty())
}

pub fn rationals(text: &str) -> anyhow::Result<Vec<Rational>> {
    items(text)
        .map(|s| parse_rational(s).map_err(|e| anyhow!("{s:?}: {e}")))
        .collect()
}

pub fn floats(text: &str) -> anyhow::Result<Vec<f64>> {
    items(text).map(|s| s.parse::<f64>().with_context(|| format!("{s:?} is not a number"))).collect()
}

pub fn counts(text: &str) -> anyhow::Result<Vec<u64>> {
    items(text).map(|s| s.parse::<u64>().with_context(|| format!("{s:?} is not a count"))).collect()
}

pub fn flags(text: &str) -> anyhow::Result<Vec<bool>> {
    items(text)
        .map(|s| match s {
            "0" | "false" => Ok(false),
            "1" | "true" => Ok(true),
            _ => Err(anyhow!("{s:?} is not a 0/1 flag")),
        })
        .collect()
}

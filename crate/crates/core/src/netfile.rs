//! TOML network definition files.
//!
//! ```toml
//! [[resources]]
//! name = "1"
//! capacity = "3"
//!
//! [[jobs]]
//! name = "x12"
//! resources = ["1", "2"]
//! lambda = "1"
//! mu = "1"
//! h = "6"
//! beta_star = "1/2"
//! ```
//!
//! Numbers may be TOML integers, TOML floats, decimal strings (`"0.25"`) or
//! fractions (`"1/4"`); all are normalized to exact rationals.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{JobDef, NetworkSpec};
use crate::scalar::{format_rational, parse_rational, Rational};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Number {
    fn to_rational(&self, what: &str) -> Result<Rational> {
        let parsed = match self {
            Number::Int(v) => Ok(crate::scalar::int(*v)),
            // Shortest round-trip formatting recovers the literal as written.
            Number::Float(v) => parse_rational(&format!("{v:?}")),
            Number::Text(s) => parse_rational(s),
        };
        parsed.map_err(|e| Error::Parse(format!("{what}: {e}")))
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ResourceEntry {
    name: String,
    capacity: Number,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct JobEntry {
    name: String,
    resources: Vec<String>,
    lambda: Number,
    mu: Number,
    h: Number,
    beta_star: Number,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    resources: Vec<ResourceEntry>,
    jobs: Vec<JobEntry>,
}

/// Parses a network definition. Only structural checks are applied.
pub fn parse_network(text: &str) -> Result<NetworkSpec> {
    let file: NetworkFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let resources = file
        .resources
        .iter()
        .map(|r| Ok((r.name.clone(), r.capacity.to_rational(&format!("capacity of {}", r.name))?)))
        .collect::<Result<Vec<_>>>()?;
    let jobs = file
        .jobs
        .iter()
        .map(|j| {
            let indices = j
                .resources
                .iter()
                .map(|name| {
                    resources.iter().position(|(n, _)| n == name).ok_or_else(|| {
                        Error::Structure(format!("job {} uses unknown resource {name:?}", j.name))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let field = |n: &Number, f: &str| n.to_rational(&format!("{f} of {}", j.name));
            Ok(JobDef {
                name: j.name.clone(),
                resources: indices,
                lambda: field(&j.lambda, "lambda")?,
                mu: field(&j.mu, "mu")?,
                holding_cost: field(&j.h, "h")?,
                beta_star: field(&j.beta_star, "beta_star")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    NetworkSpec::new(resources, jobs)
}

pub fn load_network(path: impl AsRef<Path>) -> Result<NetworkSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_network(&text)
}

/// Serializes a spec; numbers are written as exact `"p/q"` strings.
pub fn to_toml(spec: &NetworkSpec) -> String {
    let text = |v: &Rational| Number::Text(format_rational(v));
    let file = NetworkFile {
        resources: spec
            .resource_names()
            .iter()
            .zip(spec.capacity())
            .map(|(name, c)| ResourceEntry { name: name.clone(), capacity: text(c) })
            .collect(),
        jobs: (0..spec.num_jobs())
            .map(|j| JobEntry {
                name: spec.job_name(j).to_string(),
                resources: spec
                    .resources_of(j)
                    .iter()
                    .map(|i| spec.resource_names()[i].clone())
                    .collect(),
                lambda: text(&spec.lambda()[j]),
                mu: text(&spec.mu()[j]),
                h: text(&spec.holding_cost()[j]),
                beta_star: text(&spec.beta_star()[j]),
            })
            .collect(),
    };
    toml::to_string(&file).expect("network serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scalar::ratio;

    #[test]
    fn fixtures_round_trip_through_toml() {
        for (name, spec) in fixtures::all() {
            let text = to_toml(&spec);
            let back = parse_network(&text).unwrap();
            assert_eq!(back, spec, "{name}");
        }
    }

    #[test]
    fn mixed_number_formats() {
        let text = r#"
            [[resources]]
            name = "a"
            capacity = 1.5

            [[jobs]]
            name = "xa"
            resources = ["a"]
            lambda = "3/4"
            mu = "0.5"
            h = 2
            beta_star = "1e-1"
        "#;
        let spec = parse_network(text).unwrap();
        assert_eq!(spec.capacity()[0], ratio(3, 2));
        assert_eq!(spec.lambda()[0], ratio(3, 4));
        assert_eq!(spec.mu()[0], ratio(1, 2));
        assert_eq!(spec.holding_cost()[0], ratio(2, 1));
        assert_eq!(spec.beta_star()[0], ratio(1, 10));
        assert!(spec.validate().is_valid());
    }

    #[test]
    fn unknown_resource_is_structural() {
        let text = r#"
            [[resources]]
            name = "a"
            capacity = 1
            [[jobs]]
            name = "xb"
            resources = ["b"]
            lambda = 1
            mu = 1
            h = 1
            beta_star = 1
        "#;
        assert!(matches!(parse_network(text), Err(Error::Structure(_))));
        assert!(matches!(parse_network("resources = 3"), Err(Error::Parse(_))));
    }
}

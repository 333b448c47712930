//! Chain and family files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use skipfree_core::chain::validate;
use skipfree_core::{fixtures, Boundary, ChainSpec, Measure};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryName {
    Regular,
    Absorbing,
    Killing,
}

impl From<BoundaryName> for Boundary {
    fn from(b: BoundaryName) -> Self {
        match b {
            BoundaryName::Regular => Boundary::Regular,
            BoundaryName::Absorbing => Boundary::Absorbing,
            BoundaryName::Killing => Boundary::Killing,
        }
    }
}

impl From<Boundary> for BoundaryName {
    fn from(b: Boundary) -> Self {
        match b {
            Boundary::Regular => BoundaryName::Regular,
            Boundary::Absorbing => BoundaryName::Absorbing,
            Boundary::Killing => BoundaryName::Killing,
        }
    }
}

/// On-disk chain: rows in ascending state order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainFile {
    pub lo: i64,
    pub hi: i64,
    pub rows: Vec<Vec<f64>>,
    pub boundary_top: BoundaryName,
    pub boundary_bottom: BoundaryName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
}

impl ChainFile {
    pub fn from_spec(spec: &ChainSpec, pi: Option<&Measure>) -> Self {
        let p = spec.matrix();
        ChainFile {
            lo: spec.lo(),
            hi: spec.hi(),
            rows: (0..p.nrows()).map(|i| p.row(i).iter().copied().collect()).collect(),
            boundary_top: spec.top().into(),
            boundary_bottom: spec.bottom().into(),
            pi: pi.map(|m| m.values().iter().copied().collect()),
        }
    }

    /// Builds the chain without running the validator.
    pub fn to_spec(&self) -> CliResult<ChainSpec> {
        Ok(ChainSpec::from_rows(self.lo, self.hi, &self.rows, self.boundary_top.into(), self.boundary_bottom.into())?)
    }

    pub fn measure(&self) -> CliResult<Option<Measure>> {
        let Some(pi) = &self.pi else { return Ok(None) };
        if pi.len() != self.rows.len() {
            return Err(CliError::Input(format!("pi has {} entries, the chain has {} states", pi.len(), self.rows.len())));
        }
        Ok(Some(Measure::new(pi.clone())?))
    }
}

/// A chain that passed validation, with the optional measure from its file.
#[derive(Debug, Clone)]
pub struct LoadedChain {
    pub spec: ChainSpec,
    pub pi: Option<Measure>,
}

pub fn parse_chain(text: &str) -> CliResult<ChainFile> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("chain file: {e}")))
}

pub fn read_chain_file(path: &Path) -> CliResult<ChainFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_chain(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Parse, build and validate.
pub fn load_chain(path: &Path) -> CliResult<LoadedChain> {
    let file = read_chain_file(path)?;
    let spec = file.to_spec()?;
    let report = validate(&spec);
    if !report.pass() {
        return Err(CliError::Validation(report.violations.iter().map(|v| v.to_string()).collect()));
    }
    Ok(LoadedChain { pi: file.measure()?, spec })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub kind: String,
    pub p_up: f64,
    /// defaults to 1 − p_up
    #[serde(default)]
    pub p_down: Option<f64>,
    /// each size n gives the chain on {0..n}
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilyFile {
    List(Vec<ChainFile>),
    Generator(Generator),
}

impl FamilyFile {
    pub fn members(&self) -> CliResult<Vec<ChainSpec>> {
        match self {
            FamilyFile::List(list) => list
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let spec = f.to_spec()?;
                    let report = validate(&spec);
                    if !report.pass() {
                        let lines = report.violations.iter().map(|v| format!("member {i}: {v}")).collect();
                        return Err(CliError::Validation(lines));
                    }
                    Ok(spec)
                })
                .collect(),
            FamilyFile::Generator(g) => {
                if g.kind != "bd" {
                    return Err(CliError::Input(format!("unknown family kind {:?}", g.kind)));
                }
                let down = g.p_down.unwrap_or(1.0 - g.p_up);
                let ok = |v: f64| (0.0..=1.0).contains(&v);
                if !ok(g.p_up) || !ok(down) || g.p_up + down > 1.0 + 1e-12 || g.p_up == 0.0 {
                    return Err(CliError::Input(format!("p_up = {}, p_down = {down} is not a birth-death step", g.p_up)));
                }
                if let Some(n) = g.sizes.iter().find(|&&n| n == 0) {
                    return Err(CliError::Input(format!("family size {n} has no room to move")));
                }
                Ok(g.sizes.iter().map(|&n| fixtures::birth_death(n + 1, g.p_up, down)).collect())
            }
        }
    }
}

pub fn read_family(path: &Path) -> CliResult<FamilyFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_round_trips_through_json() {
        let spec = fixtures::chain4_killing();
        let text = serde_json::to_string(&ChainFile::from_spec(&spec, None)).unwrap();
        let back = parse_chain(&text).unwrap().to_spec().unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn unknown_fields_and_boundaries_are_rejected() {
        let base = r#"{"lo":0,"hi":1,"rows":[[0.5,0.5],[0.5,0.5]],"boundary_top":"regular","boundary_bottom":"regular""#;
        assert!(parse_chain(&format!("{base}}}")).is_ok());
        assert!(parse_chain(&format!("{base},\"extra\":1}}")).is_err());
        assert!(parse_chain(&base.replace("\"regular\",\"boundary_bottom\"", "\"sticky\",\"boundary_bottom\"")).is_err());
    }

    #[test]
    fn generator_defaults_p_down() {
        let f: FamilyFile = serde_json::from_str(r#"{"kind":"bd","p_up":0.7,"sizes":[8,16]}"#).unwrap();
        let m = f.members().unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[1].len(), 17);
        assert!((m[0].prob(3, 2) - 0.3).abs() < 1e-15);
        let bad: FamilyFile = serde_json::from_str(r#"{"kind":"bd","p_up":0.7,"p_down":0.5,"sizes":[8]}"#).unwrap();
        assert!(bad.members().is_err());
    }
}

//! Deterministic completeness, structure and plausibility checks on a deck.
//!
//! | rule | checks | codes |
//! |------|--------|-------|
//! | R1 | required blocks, parameters and sub-blocks | `MISSING_BLOCK`, `MISSING_PARAM`, `MISSING_SUBBLOCK` |
//! | R2 | component, EOS and material references resolve | `DANGLING_REF` |
//! | R3 | each connected flow network has a kinematic and a pressure condition | `NO_INLET_BC`, `NO_PRESSURE_BC` |
//! | R4 | junction ends coincide; components match the topology graph | `GEOM_DISCONTINUITY` |
//! | R5 | temperatures and pressures are plausible for K and Pa | `UNIT_SUSPECT` |
//! | R6 | function references resolve | `UNRESOLVED_FUNCTION` |
//!
//! An energy balance screen (`ENERGY_IMBALANCE`) runs when the deck
//! declares an expected outlet temperature.

mod energy;
mod instructions;
mod rules;

pub use energy::{
    energy_balance_estimate, extract_energy_inputs, EnergyInputs, NonPhysicalInput,
    DEFAULT_ENERGY_THRESHOLD,
};
pub use instructions::semantic_instructions;

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::deck::{BlockRegistry, InputDeck};
use crate::topology::TopologyGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        })
    }
}

/// The closed set of finding codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Code {
    MissingBlock,
    MissingParam,
    MissingSubblock,
    UnknownBlock,
    DanglingRef,
    NoInletBc,
    NoPressureBc,
    GeomDiscontinuity,
    UnitSuspect,
    UnresolvedFunction,
    EnergyImbalance,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::MissingBlock => "MISSING_BLOCK",
            Code::MissingParam => "MISSING_PARAM",
            Code::MissingSubblock => "MISSING_SUBBLOCK",
            Code::UnknownBlock => "UNKNOWN_BLOCK",
            Code::DanglingRef => "DANGLING_REF",
            Code::NoInletBc => "NO_INLET_BC",
            Code::NoPressureBc => "NO_PRESSURE_BC",
            Code::GeomDiscontinuity => "GEOM_DISCONTINUITY",
            Code::UnitSuspect => "UNIT_SUSPECT",
            Code::UnresolvedFunction => "UNRESOLVED_FUNCTION",
            Code::EnergyImbalance => "ENERGY_IMBALANCE",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            Code::UnitSuspect | Code::EnergyImbalance => Severity::Warning,
            Code::UnknownBlock => Severity::Info,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: Code,
    /// Deck path of the offending block or parameter.
    pub location: String,
    pub message: String,
}

impl Finding {
    pub fn new(code: Code, location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: code.severity(),
            code,
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} at {}: {}", self.severity, self.code, self.location, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
    pub passed: bool,
    pub checked_rules: Vec<String>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn has_code(&self, code: Code) -> bool {
        self.findings.iter().any(|f| f.code == code)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in &self.findings {
            out.push_str(&f.to_string());
            out.push('\n');
        }
        let errors = self.errors().count();
        out.push_str(&format!(
            "{}: {} error(s), {} finding(s), rules {}\n",
            if self.passed { "PASSED" } else { "FAILED" },
            errors,
            self.findings.len(),
            self.checked_rules.join(",")
        ));
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions<'a> {
    pub topology: Option<&'a TopologyGraph>,
    /// Allowed relative deviation of a declared outlet temperature rise.
    pub energy_threshold: f64,
    /// Distance below which two junction ends count as coincident, in m.
    pub geometry_tolerance: f64,
}

impl Default for ValidateOptions<'_> {
    fn default() -> Self {
        Self {
            topology: None,
            energy_threshold: DEFAULT_ENERGY_THRESHOLD,
            geometry_tolerance: 1e-6,
        }
    }
}

/// Runs R1 to R6 and the energy screen with default options.
pub fn validate(deck: &InputDeck, registry: &BlockRegistry, topology: Option<&TopologyGraph>) -> ValidationReport {
    validate_with(
        deck,
        registry,
        &ValidateOptions {
            topology,
            ..Default::default()
        },
    )
}

/// Document-order rank of every block and parameter path.
fn positions(deck: &InputDeck) -> HashMap<String, usize> {
    fn walk(prefix: &str, block: &crate::deck::Block, out: &mut HashMap<String, usize>) {
        let here = if prefix.is_empty() {
            block.name.clone()
        } else {
            format!("{prefix}/{}", block.name)
        };
        let n = out.len();
        out.entry(here.clone()).or_insert(n);
        for p in &block.params {
            let n = out.len();
            out.entry(format!("{here}/{}", p.key)).or_insert(n);
        }
        for c in &block.children {
            walk(&here, c, out);
        }
    }
    let mut out = HashMap::new();
    for b in &deck.blocks {
        walk("", b, &mut out);
    }
    out
}

pub fn validate_with(deck: &InputDeck, registry: &BlockRegistry, opts: &ValidateOptions) -> ValidationReport {
    let mut findings = Vec::new();
    rules::r1_completeness(deck, registry, &mut findings);
    rules::r2_references(deck, &mut findings);
    rules::r3_boundary_conditions(deck, registry, &mut findings);
    rules::r4_geometry(deck, registry, opts.topology, opts.geometry_tolerance, &mut findings);
    rules::r5_units(deck, &mut findings);
    rules::r6_functions(deck, &mut findings);
    energy::check_energy(deck, registry, opts.energy_threshold, &mut findings);

    // missing blocks have no position and sort first
    let pos = positions(deck);
    findings.sort_by_key(|f| pos.get(&f.location).map_or(0, |p| p + 1));
    let passed = !findings.iter().any(|f| f.severity == Severity::Error);
    ValidationReport {
        findings,
        passed,
        checked_rules: ["R1", "R2", "R3", "R4", "R5", "R6", "energy"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    }
}

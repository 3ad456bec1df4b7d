use super::ValidationReport;

const GUIDANCE: &[&str] = &[
    "Pressure should decrease monotonically along the flow direction in unheated, unpumped sections.",
    "Reactivity feedback should decrease smoothly and monotonically as fuel and coolant temperatures rise.",
    "In a heated loop the hottest temperatures should occur near the core outlet.",
    "Every value that was not found in the source documents must carry an ASSUMED comment with its rationale.",
];

/// Text handed to the agent after deterministic validation: the findings
/// in deck order followed by fixed semantic checks that need judgment.
pub fn semantic_instructions(report: &ValidationReport) -> String {
    let mut out = String::new();
    if !report.findings.is_empty() {
        out.push_str("Deterministic findings to resolve:\n");
        for f in &report.findings {
            out.push_str(&format!("- [{}] {} at {}: {}\n", f.severity, f.code, f.location, f.message));
        }
        out.push('\n');
    }
    out.push_str("Semantic checks:\n");
    for g in GUIDANCE {
        out.push_str(&format!("* {g}\n"));
    }
    out
}

//! Pipeline coverage metrics computed from expected-versus-produced item
//! manifests: structured-input usage, PDF extraction recall and image
//! completeness.
//!
//! Items are matched by their declared id string.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    Structured,
    PdfText,
    Image,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImageCategory {
    ExplicitPosition,
    InferredPosition,
    InferredLength,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageManifest {
    pub case_id: String,
    pub channel: Channel,
    pub expected_items: Vec<String>,
    pub produced_items: Vec<String>,
    /// Image channel only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<BTreeMap<String, Option<ImageCategory>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageResult {
    pub used_or_recovered: usize,
    pub expected: usize,
    pub rate: f64,
    pub missing: Vec<String>,
    /// Produced items that were not expected; they never raise the rate.
    pub extras: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category_counts: Option<BTreeMap<ImageCategory, usize>>,
    /// Per-case results behind a pooled figure.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub per_case: Vec<(String, CoverageResult)>,
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("manifest `{0}` expects no items")]
    EmptyExpected(String),
    #[error("manifest `{case}` is on channel {found:?}, expected {wanted:?}")]
    WrongChannel {
        case: String,
        wanted: Channel,
        found: Channel,
    },
    #[error("manifest `{case}` lists `{item}` twice")]
    DuplicateItem { case: String, item: String },
    #[error("manifest `{case}`: produced image item `{item}` has no category")]
    UncategorizedItem { case: String, item: String },
    #[error("manifest `{0}` has categories but is not an image manifest")]
    UnexpectedCategories(String),
    #[error("no manifests given")]
    NoManifests,
}

impl CoverageManifest {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    fn check(&self, wanted: Channel) -> Result<(), MetricsError> {
        if self.channel != wanted {
            return Err(MetricsError::WrongChannel {
                case: self.case_id.clone(),
                wanted,
                found: self.channel,
            });
        }
        if self.categories.is_some() && self.channel != Channel::Image {
            return Err(MetricsError::UnexpectedCategories(self.case_id.clone()));
        }
        for list in [&self.expected_items, &self.produced_items] {
            let mut seen = HashSet::new();
            if let Some(dup) = list.iter().find(|i| !seen.insert(i.as_str())) {
                return Err(MetricsError::DuplicateItem {
                    case: self.case_id.clone(),
                    item: dup.clone(),
                });
            }
        }
        if self.expected_items.is_empty() {
            return Err(MetricsError::EmptyExpected(self.case_id.clone()));
        }
        Ok(())
    }

    fn coverage(&self) -> CoverageResult {
        let produced: HashSet<&str> = self.produced_items.iter().map(String::as_str).collect();
        let expected: HashSet<&str> = self.expected_items.iter().map(String::as_str).collect();
        let missing: Vec<String> = self
            .expected_items
            .iter()
            .filter(|i| !produced.contains(i.as_str()))
            .cloned()
            .collect();
        let extras = self
            .produced_items
            .iter()
            .filter(|i| !expected.contains(i.as_str()))
            .cloned()
            .collect();
        let hit = self.expected_items.len() - missing.len();
        CoverageResult {
            used_or_recovered: hit,
            expected: self.expected_items.len(),
            rate: hit as f64 / self.expected_items.len() as f64,
            missing,
            extras,
            category_counts: None,
            per_case: Vec::new(),
        }
    }
}

/// Share of the supplied structured parameters that the generated deck used.
pub fn usage_rate(m: &CoverageManifest) -> Result<CoverageResult, MetricsError> {
    m.check(Channel::Structured)?;
    Ok(m.coverage())
}

fn pooled(
    manifests: &[CoverageManifest],
    channel: Channel,
    per_case: impl Fn(&CoverageManifest) -> Result<CoverageResult, MetricsError>,
) -> Result<CoverageResult, MetricsError> {
    if manifests.is_empty() {
        return Err(MetricsError::NoManifests);
    }
    let mut sorted: Vec<&CoverageManifest> = manifests.iter().collect();
    sorted.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    let mut cases = Vec::with_capacity(sorted.len());
    for m in sorted {
        m.check(channel)?;
        cases.push((m.case_id.clone(), per_case(m)?));
    }
    let hit: usize = cases.iter().map(|(_, r)| r.used_or_recovered).sum();
    let expected: usize = cases.iter().map(|(_, r)| r.expected).sum();
    let qualify = |case: &str, items: &[String]| -> Vec<String> {
        items.iter().map(|i| format!("{case}:{i}")).collect()
    };
    let category_counts = (channel == Channel::Image).then(|| {
        let mut total = BTreeMap::new();
        for (_, r) in &cases {
            for (k, v) in r.category_counts.iter().flatten() {
                *total.entry(*k).or_insert(0) += v;
            }
        }
        total
    });
    Ok(CoverageResult {
        used_or_recovered: hit,
        expected,
        rate: hit as f64 / expected as f64,
        missing: cases.iter().flat_map(|(c, r)| qualify(c, &r.missing)).collect(),
        extras: cases.iter().flat_map(|(c, r)| qualify(c, &r.extras)).collect(),
        category_counts,
        per_case: cases,
    })
}

/// Recovered PDF items over expected items, pooled across cases. The
/// per-case results are kept; pooled ordering is by case id.
pub fn extraction_recall(manifests: &[CoverageManifest]) -> Result<CoverageResult, MetricsError> {
    pooled(manifests, Channel::PdfText, |m| Ok(m.coverage()))
}

/// Recovered image attributes with counts per category.
pub fn image_completeness(m: &CoverageManifest) -> Result<CoverageResult, MetricsError> {
    m.check(Channel::Image)?;
    let mut r = m.coverage();
    let expected: HashSet<&str> = m.expected_items.iter().map(String::as_str).collect();
    let mut counts: BTreeMap<ImageCategory, usize> = BTreeMap::new();
    for item in &m.produced_items {
        let category = m
            .categories
            .as_ref()
            .and_then(|c| c.get(item).copied().flatten())
            .ok_or_else(|| MetricsError::UncategorizedItem {
                case: m.case_id.clone(),
                item: item.clone(),
            })?;
        if expected.contains(item.as_str()) {
            *counts.entry(category).or_insert(0) += 1;
        }
    }
    r.category_counts = Some(counts);
    Ok(r)
}

/// [`image_completeness`] pooled across cases.
pub fn pooled_image_completeness(manifests: &[CoverageManifest]) -> Result<CoverageResult, MetricsError> {
    pooled(manifests, Channel::Image, image_completeness)
}

/// Machine-readable summary with one entry per panel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSummary {
    pub structured_usage: Vec<(String, CoverageResult)>,
    pub pdf_recall: Option<CoverageResult>,
    pub image_completeness: Option<CoverageResult>,
}

/// Groups manifests by channel and computes every applicable metric.
pub fn summarize(manifests: &[CoverageManifest]) -> Result<MetricsSummary, MetricsError> {
    if manifests.is_empty() {
        return Err(MetricsError::NoManifests);
    }
    let of = |c: Channel| -> Vec<CoverageManifest> {
        manifests.iter().filter(|m| m.channel == c).cloned().collect()
    };
    let mut structured = of(Channel::Structured);
    structured.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    let structured_usage = structured
        .iter()
        .map(|m| Ok((m.case_id.clone(), usage_rate(m)?)))
        .collect::<Result<Vec<_>, MetricsError>>()?;
    let pdf = of(Channel::PdfText);
    let images = of(Channel::Image);
    Ok(MetricsSummary {
        structured_usage,
        pdf_recall: (!pdf.is_empty()).then(|| extraction_recall(&pdf)).transpose()?,
        image_completeness: (!images.is_empty()).then(|| pooled_image_completeness(&images)).transpose()?,
    })
}

impl MetricsSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    /// Fixed-width table, one row per metric.
    pub fn to_table(&self) -> String {
        let mut rows = vec![format!("{:<28} {:>9} {:>8}", "metric", "count", "rate")];
        let row = |name: String, r: &CoverageResult| {
            format!(
                "{:<28} {:>9} {:>7.1}%",
                name,
                format!("{}/{}", r.used_or_recovered, r.expected),
                r.rate * 100.0
            )
        };
        for (case, r) in &self.structured_usage {
            rows.push(row(format!("structured usage ({case})"), r));
        }
        if let Some(r) = &self.pdf_recall {
            rows.push(row("pdf extraction recall".into(), r));
        }
        if let Some(r) = &self.image_completeness {
            rows.push(row("image completeness".into(), r));
            for (cat, n) in r.category_counts.iter().flatten() {
                let name = serde_json::to_value(cat).expect("category serializes");
                rows.push(format!("  {:<26} {:>9}", name.as_str().unwrap_or_default(), n));
            }
        }
        rows.join("\n") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(case: &str, channel: Channel, expected: &[&str], produced: &[&str]) -> CoverageManifest {
        CoverageManifest {
            case_id: case.into(),
            channel,
            expected_items: expected.iter().map(|s| s.to_string()).collect(),
            produced_items: produced.iter().map(|s| s.to_string()).collect(),
            categories: None,
        }
    }

    #[test]
    fn half_usage() {
        let r = usage_rate(&manifest("t", Channel::Structured, &["a", "b"], &["a"])).unwrap();
        assert_eq!(r.rate, 0.5);
        assert_eq!(r.missing, vec!["b"]);
    }

    #[test]
    fn zero_recall() {
        let r = extraction_recall(&[manifest("t", Channel::PdfText, &["a", "b", "c", "d", "e"], &[])]).unwrap();
        assert_eq!(r.rate, 0.0);
        assert_eq!(r.missing.len(), 5);
    }

    #[test]
    fn empty_expected_is_an_error() {
        assert_eq!(
            usage_rate(&manifest("t", Channel::Structured, &[], &["a"])),
            Err(MetricsError::EmptyExpected("t".into()))
        );
    }

    #[test]
    fn wrong_channel_is_an_error() {
        assert!(matches!(
            usage_rate(&manifest("t", Channel::Image, &["a"], &["a"])),
            Err(MetricsError::WrongChannel { .. })
        ));
    }

    #[test]
    fn uncategorized_image_item() {
        let mut m = manifest("t", Channel::Image, &["a"], &["a"]);
        m.categories = Some(BTreeMap::from([("a".to_string(), None)]));
        assert_eq!(
            image_completeness(&m),
            Err(MetricsError::UncategorizedItem {
                case: "t".into(),
                item: "a".into()
            })
        );
    }

    #[test]
    fn extras_do_not_raise_rate() {
        let mut m = manifest("t", Channel::Image, &["a", "b"], &["a", "b", "c"]);
        m.categories = Some(BTreeMap::from([
            ("a".to_string(), Some(ImageCategory::ExplicitPosition)),
            ("b".to_string(), Some(ImageCategory::InferredLength)),
            ("c".to_string(), Some(ImageCategory::InferredPosition)),
        ]));
        let r = image_completeness(&m).unwrap();
        assert_eq!(r.rate, 1.0);
        assert_eq!(r.extras, vec!["c"]);
        assert_eq!(r.category_counts.unwrap().values().sum::<usize>(), 2);
    }
}

use super::{ModelSpec, ProvenanceKind, SpecEntry};

/// An entry addressed by its section, as found in override documents.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionEntry {
    pub section: String,
    pub entry: SpecEntry,
}

/// An entry that lost to a higher-precedence value for the same key.
#[derive(Debug, Clone, PartialEq)]
pub struct Superseded {
    pub section: String,
    pub entry: SpecEntry,
    pub superseded_by: ProvenanceKind,
}

/// Applies overrides to a spec.
///
/// An override replaces an existing entry when its provenance ranks at
/// least as high; otherwise the override itself is recorded as superseded.
/// Replaced entries are kept in `superseded`. A key that gains an entry is
/// removed from the gap list. Applying the same overrides twice gives the
/// same spec as applying them once. When the overrides name a key more
/// than once, the last occurrence is used.
pub fn merge_overrides(spec: &ModelSpec, overrides: &[SectionEntry]) -> ModelSpec {
    let mut out = spec.clone();
    let effective = overrides.iter().enumerate().filter(|(i, o)| {
        !overrides[i + 1..]
            .iter()
            .any(|later| later.section == o.section && later.entry.key == o.entry.key)
    });
    for (_, o) in effective {
        let section = out.sections.entry(o.section.clone()).or_default();
        match section.iter_mut().find(|e| e.key == o.entry.key) {
            None => section.push(o.entry.clone()),
            Some(existing) if *existing == o.entry => {}
            Some(existing) => {
                let (loser, winner_kind) =
                    if o.entry.provenance.kind.rank() >= existing.provenance.kind.rank() {
                        let old = std::mem::replace(existing, o.entry.clone());
                        (old, o.entry.provenance.kind)
                    } else {
                        (o.entry.clone(), existing.provenance.kind)
                    };
                let record = Superseded {
                    section: o.section.clone(),
                    entry: loser,
                    superseded_by: winner_kind,
                };
                if !out.superseded.contains(&record) {
                    out.superseded.push(record);
                }
            }
        }
        out.gaps
            .retain(|g| !(g.section == o.section && g.key == o.entry.key));
    }
    out
}

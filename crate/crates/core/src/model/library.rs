//! Reference libraries: labeled whole-route recordings for classification and
//! tracking, plus hysteresis-aware per-segment recordings for route inference.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{IntersectionId, PowerTrace, RoadGraph};

/// Key of a per-segment recording: a profile over segment `(y, z)` recorded
/// while `(x, y)` had been traversed just before it. Keeping the entry
/// segment in the key captures hand-off hysteresis: signal strength at a
/// location depends on how the device arrived there.
pub type TripleKey = (IntersectionId, IntersectionId, IntersectionId);

/// Prerecorded power profiles used as matching references.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceLibrary {
    /// Whole-route recordings per route label.
    pub entries: BTreeMap<String, Vec<PowerTrace>>,
    /// Per-segment recordings keyed by (entered-from, from, to).
    pub segment_entries: BTreeMap<TripleKey, Vec<PowerTrace>>,
}

impl ReferenceLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Checks the nonemptiness and (when a graph is given) segment-validity
    /// invariants.
    pub fn validate(&self, graph: Option<&RoadGraph>) -> Result<()> {
        for (label, traces) in &self.entries {
            if traces.is_empty() {
                return Err(Error::invalid(
                    "reference library",
                    format!("route {label:?} has no recordings"),
                ));
            }
        }
        for (&(x, y, z), traces) in &self.segment_entries {
            if traces.is_empty() {
                return Err(Error::invalid(
                    "reference library",
                    format!("triple ({x}, {y}, {z}) has no recordings"),
                ));
            }
            if let Some(g) = graph {
                if !g.has_segment(x, y) || !g.has_segment(y, z) {
                    return Err(Error::invalid(
                        "reference library",
                        format!("triple ({x}, {y}, {z}) references non-segments"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn route_labels(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    /// Directory layout: `routes/<label>/NNN.csv` and
    /// `segments/<x>-<y>-<z>/NNN.csv`, numbered from zero.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        for (label, traces) in &self.entries {
            let sub = dir.join("routes").join(label);
            std::fs::create_dir_all(&sub).map_err(|e| Error::io(sub.display().to_string(), e))?;
            for (i, t) in traces.iter().enumerate() {
                t.save_csv(sub.join(format!("{i:03}.csv")))?;
            }
        }
        for (&(x, y, z), traces) in &self.segment_entries {
            let sub = dir.join("segments").join(format!("{x}-{y}-{z}"));
            std::fs::create_dir_all(&sub).map_err(|e| Error::io(sub.display().to_string(), e))?;
            for (i, t) in traces.iter().enumerate() {
                t.save_csv(sub.join(format!("{i:03}.csv")))?;
            }
        }
        Ok(())
    }

    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut lib = ReferenceLibrary::new();
        let routes = dir.join("routes");
        if routes.is_dir() {
            for (label, files) in sorted_subdirs(&routes)? {
                let traces = files
                    .iter()
                    .map(PowerTrace::load_csv)
                    .collect::<Result<Vec<_>>>()?;
                lib.entries.insert(label, traces);
            }
        }
        let segments = dir.join("segments");
        if segments.is_dir() {
            for (name, files) in sorted_subdirs(&segments)? {
                let key = parse_triple(&name)?;
                let traces = files
                    .iter()
                    .map(PowerTrace::load_csv)
                    .collect::<Result<Vec<_>>>()?;
                lib.segment_entries.insert(key, traces);
            }
        }
        if lib.entries.is_empty() && lib.segment_entries.is_empty() {
            return Err(Error::Schema(format!(
                "{} contains neither routes/ nor segments/ recordings",
                dir.display()
            )));
        }
        lib.validate(None)?;
        Ok(lib)
    }
}

fn parse_triple(name: &str) -> Result<TripleKey> {
    let parts: Vec<&str> = name.split('-').collect();
    if parts.len() != 3 {
        return Err(Error::Schema(format!(
            "segment directory {name:?} is not x-y-z"
        )));
    }
    let mut ids = [0u32; 3];
    for (slot, part) in ids.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| Error::Schema(format!("bad intersection id {part:?} in {name:?}")))?;
    }
    Ok((
        IntersectionId(ids[0]),
        IntersectionId(ids[1]),
        IntersectionId(ids[2]),
    ))
}

/// Subdirectories of `dir` with their CSV files, both sorted by name.
fn sorted_subdirs(dir: &Path) -> Result<Vec<(String, Vec<std::path::PathBuf>)>> {
    let mut out = Vec::new();
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    for entry in rd {
        let entry = entry.map_err(|e| Error::io(dir.display().to_string(), e))?;
        if !entry.path().is_dir() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        let mut files = Vec::new();
        let sub = std::fs::read_dir(entry.path())
            .map_err(|e| Error::io(entry.path().display().to_string(), e))?;
        for f in sub {
            let f = f.map_err(|e| Error::io(entry.path().display().to_string(), e))?;
            let p = f.path();
            if p.extension().is_some_and(|e| e == "csv") {
                files.push(p);
            }
        }
        files.sort();
        out.push((name, files));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(v: f64) -> PowerTrace {
        PowerTrace::new(1.0, vec![v, v + 1.0, v + 2.0], None).unwrap()
    }

    #[test]
    fn dir_round_trip() {
        let mut lib = ReferenceLibrary::new();
        lib.entries.insert("1-2-3".into(), vec![trace(1.0), trace(2.0)]);
        lib.segment_entries.insert(
            (IntersectionId(1), IntersectionId(2), IntersectionId(3)),
            vec![trace(3.0)],
        );
        let dir = tempfile::tempdir().unwrap();
        lib.save_dir(dir.path()).unwrap();
        let back = ReferenceLibrary::load_dir(dir.path()).unwrap();
        assert_eq!(lib, back);
    }

    #[test]
    fn empty_dir_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(ReferenceLibrary::load_dir(dir.path()).is_err());
    }

    #[test]
    fn bad_triple_name_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("segments").join("1-2")).unwrap();
        assert!(ReferenceLibrary::load_dir(dir.path()).is_err());
    }
}

//! Run-log loading, lineage validation and grouping.
//!
//! The canonical log is JSONL, one [`CodeSample`] per line. Source text is
//! inline (`code`) or a file reference (`code_path`) resolved against the
//! log's directory.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeSample {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub run_id: String,
    #[serde(default)]
    pub method: String,
    #[serde(default)]
    pub llm: String,
    #[serde(default)]
    pub benchmark: String,
    pub evaluation_index: u64,
    #[serde(default)]
    pub parent_ids: Vec<String>,
    #[serde(default)]
    pub fitness_raw: Option<f64>,
    pub code: String,
}

impl CodeSample {
    pub fn group_key(&self) -> GroupKey {
        GroupKey {
            benchmark: self.benchmark.clone(),
            method: self.method.clone(),
            llm: self.llm.clone(),
        }
    }

    pub fn run_key(&self) -> RunKey {
        RunKey {
            group: self.group_key(),
            run_id: self.run_id.clone(),
        }
    }
}

/// (benchmark, method, llm) partition key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupKey {
    pub benchmark: String,
    pub method: String,
    pub llm: String,
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.benchmark, self.method)?;
        if !self.llm.is_empty() {
            write!(f, "/{}", self.llm)?;
        }
        Ok(())
    }
}

/// A run is identified by its run_id within a group, so labels such as
/// "run-0" may repeat across methods.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RunKey {
    pub group: GroupKey,
    pub run_id: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub samples: Vec<CodeSample>,
}

impl Dataset {
    pub fn new(samples: Vec<CodeSample>) -> Self {
        Dataset { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample indices per (benchmark, method, llm), in order of first appearance.
    pub fn groups(&self) -> IndexMap<GroupKey, Vec<usize>> {
        let mut out: IndexMap<GroupKey, Vec<usize>> = IndexMap::new();
        for (i, s) in self.samples.iter().enumerate() {
            out.entry(s.group_key()).or_default().push(i);
        }
        out
    }

    /// Sample indices per run, in order of first appearance.
    pub fn runs(&self) -> IndexMap<RunKey, Vec<usize>> {
        let mut out: IndexMap<RunKey, Vec<usize>> = IndexMap::new();
        for (i, s) in self.samples.iter().enumerate() {
            out.entry(s.run_key()).or_default().push(i);
        }
        out
    }

    pub fn index_by_id(&self) -> HashMap<&str, usize> {
        self.samples
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.as_str(), i))
            .collect()
    }

    /// Serialize as canonical JSONL with inline code.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for s in &self.samples {
            serde_json::to_writer(&mut out, s)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }
}

#[derive(Deserialize)]
struct RawSample {
    id: Option<String>,
    #[serde(default)]
    name: String,
    run_id: Option<String>,
    #[serde(default)]
    method: String,
    #[serde(default)]
    llm: String,
    #[serde(default)]
    benchmark: String,
    evaluation_index: Option<u64>,
    #[serde(default)]
    parent_ids: Vec<String>,
    #[serde(default, alias = "fitness")]
    fitness_raw: Option<f64>,
    code: Option<String>,
    code_path: Option<String>,
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_jsonl(&text, base)
}

/// Parse JSONL text; `code_path` entries resolve against `base`.
pub fn parse_jsonl(text: &str, base: &Path) -> Result<Dataset> {
    let mut samples = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (k, line) in text.lines().enumerate() {
        let line_no = k + 1;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| Error::MalformedLine {
            line: line_no,
            message,
        };
        let raw: RawSample = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        let id = raw.id.ok_or_else(|| malformed("missing field `id`".into()))?;
        let run_id = raw
            .run_id
            .ok_or_else(|| malformed("missing field `run_id`".into()))?;
        let evaluation_index = raw
            .evaluation_index
            .ok_or_else(|| malformed("missing field `evaluation_index`".into()))?;
        let code = match (raw.code, raw.code_path) {
            (Some(code), _) => code,
            (None, Some(rel)) => {
                let file = base.join(rel);
                std::fs::read_to_string(&file).map_err(|e| Error::io(file, e))?
            }
            (None, None) => return Err(malformed("missing field `code` or `code_path`".into())),
        };
        if let Some(fitness) = raw.fitness_raw {
            if !fitness.is_finite() {
                return Err(malformed("fitness_raw must be finite".into()));
            }
        }
        if seen.insert(id.clone(), line_no).is_some() {
            return Err(Error::DuplicateId { id, line: line_no });
        }
        samples.push(CodeSample {
            id,
            name: raw.name,
            run_id,
            method: raw.method,
            llm: raw.llm,
            benchmark: raw.benchmark,
            evaluation_index,
            parent_ids: raw.parent_ids,
            fitness_raw: raw.fitness_raw,
            code,
        });
    }
    Ok(Dataset { samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValidationPolicy {
    #[default]
    Strict,
    DropDanglingEdges,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    /// No sample with that id in the same run.
    Dangling,
    /// Parent exists but is not strictly earlier.
    NotEarlier { parent_index: u64, child_index: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub sample_id: String,
    pub parent_id: String,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ViolationKind::Dangling => write!(
                f,
                "sample '{}' references unknown parent '{}' (not in its run)",
                self.sample_id, self.parent_id
            ),
            ViolationKind::NotEarlier {
                parent_index,
                child_index,
            } => write!(
                f,
                "sample '{}' (evaluation {child_index}) has parent '{}' at evaluation {parent_index}",
                self.sample_id, self.parent_id
            ),
        }
    }
}

/// Check lineage invariants. Strict mode fails on the first violation; the
/// drop policy removes offending parent references and reports them.
pub fn validate(dataset: &Dataset, policy: ValidationPolicy) -> Result<(Dataset, Vec<Violation>)> {
    let by_id = dataset.index_by_id();
    let mut out = dataset.clone();
    let mut violations = Vec::new();
    for (child_idx, child) in dataset.samples.iter().enumerate() {
        let mut kept = Vec::with_capacity(child.parent_ids.len());
        for parent_id in &child.parent_ids {
            let kind = match by_id.get(parent_id.as_str()) {
                Some(&p) if dataset.samples[p].run_key() == child.run_key() => {
                    let parent_index = dataset.samples[p].evaluation_index;
                    if parent_index < child.evaluation_index {
                        None
                    } else {
                        Some(ViolationKind::NotEarlier {
                            parent_index,
                            child_index: child.evaluation_index,
                        })
                    }
                }
                _ => Some(ViolationKind::Dangling),
            };
            match kind {
                None => kept.push(parent_id.clone()),
                Some(kind) => {
                    let v = Violation {
                        sample_id: child.id.clone(),
                        parent_id: parent_id.clone(),
                        kind,
                    };
                    if policy == ValidationPolicy::Strict {
                        return Err(Error::Lineage {
                            child: child.id.clone(),
                            reason: v.to_string(),
                        });
                    }
                    violations.push(v);
                }
            }
        }
        out.samples[child_idx].parent_ids = kept;
    }
    Ok((out, violations))
}

//! Span-based text edits: validation, diff rendering, and atomic
//! application.
//!
//! An `EditScript` is computed against a `Workspace` snapshot (the texts
//! the analysis saw). Applying re-reads the real files, refuses to touch
//! anything whose content hash changed, stages every new content into a
//! temp file, and only then renames the temps into place — so an
//! injected failure during staging leaves the workspace bit-identical.

pub mod diff;

use std::collections::{BTreeMap, BTreeSet};
use std::io;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::Program;
use crate::span::SourceSpan;

pub use diff::unified_diff;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextEdit {
    pub span: SourceSpan,
    /// Empty replacement deletes; a zero-length span inserts.
    pub replacement: String,
}

impl TextEdit {
    pub fn new(span: SourceSpan, replacement: impl Into<String>) -> Self {
        TextEdit {
            span,
            replacement: replacement.into(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EditScript {
    /// Refactoring identifier this script realizes.
    pub provenance: String,
    /// Path → sorted, non-overlapping edits.
    pub edits: BTreeMap<String, Vec<TextEdit>>,
    /// Path → full content of a file to create.
    pub creates: BTreeMap<String, String>,
    pub deletes: BTreeSet<String>,
    /// (old path, new path); content is the old file's edited text.
    pub renames: Vec<(String, String)>,
}

impl EditScript {
    pub fn is_empty(&self) -> bool {
        self.edits.values().all(|v| v.is_empty())
            && self.creates.is_empty()
            && self.deletes.is_empty()
            && self.renames.is_empty()
    }

    /// Every path the script reads or writes.
    pub fn touched_paths(&self) -> BTreeSet<String> {
        let mut p: BTreeSet<String> = self.edits.keys().cloned().collect();
        p.extend(self.creates.keys().cloned());
        p.extend(self.deletes.iter().cloned());
        for (from, to) in &self.renames {
            p.insert(from.clone());
            p.insert(to.clone());
        }
        p
    }
}

#[derive(Debug, Error)]
pub enum EditError {
    #[error("{path}: overlapping edits at {0}..{1} and {2}..{3}", first.0, first.1, second.0, second.1)]
    Overlap {
        path: String,
        first: (usize, usize),
        second: (usize, usize),
    },
    #[error("{path}: file changed since analysis; re-run and retry")]
    StaleSnapshot { path: String },
    #[error("{path}: refusing to create, file already exists")]
    CreateExists { path: String },
    #[error("{path}: no snapshot for edited file")]
    MissingSnapshot { path: String },
    #[error("workspace is locked by another process ({path})")]
    LockHeld { path: String },
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

/// Groups, sorts and validates raw edits into a script.
///
/// Identical duplicates collapse; insertions at the same offset merge in
/// the order given; any other overlap is an error.
pub fn plan(
    program: &Program,
    provenance: &str,
    edits: Vec<TextEdit>,
) -> Result<EditScript, EditError> {
    let mut by_file: BTreeMap<String, Vec<TextEdit>> = BTreeMap::new();
    for e in edits {
        by_file
            .entry(program.path(e.span.file).to_string())
            .or_default()
            .push(e);
    }
    let mut script = EditScript {
        provenance: provenance.to_string(),
        ..Default::default()
    };
    for (path, mut list) in by_file {
        // Stable by offset so same-point insertions keep their order.
        list.sort_by_key(|e| (e.span.start, e.span.end));
        let mut merged: Vec<TextEdit> = Vec::new();
        for e in list {
            match merged.last_mut() {
                Some(prev) if prev.span == e.span && prev.replacement == e.replacement => {}
                Some(prev)
                    if prev.span.is_empty()
                        && e.span.is_empty()
                        && prev.span.start == e.span.start =>
                {
                    prev.replacement.push_str(&e.replacement);
                }
                Some(prev) if e.span.start < prev.span.end => {
                    return Err(EditError::Overlap {
                        path,
                        first: (prev.span.start, prev.span.end),
                        second: (e.span.start, e.span.end),
                    });
                }
                _ => merged.push(e),
            }
        }
        if !merged.is_empty() {
            script.edits.insert(path, merged);
        }
    }
    Ok(script)
}

/// Composes two span-disjoint scripts into one.
pub fn compose(program: &Program, a: EditScript, b: EditScript) -> Result<EditScript, EditError> {
    let provenance = if a.provenance == b.provenance {
        a.provenance.clone()
    } else {
        format!("{}+{}", a.provenance, b.provenance)
    };
    let mut all = Vec::new();
    for script in [&a, &b] {
        for list in script.edits.values() {
            all.extend(list.iter().cloned());
        }
    }
    let mut merged = plan(program, &provenance, all)?;
    merged.creates = a.creates;
    for (path, content) in b.creates {
        if merged.creates.insert(path.clone(), content).is_some() {
            return Err(EditError::CreateExists { path });
        }
    }
    merged.deletes = a.deletes;
    merged.deletes.extend(b.deletes);
    merged.renames = a.renames;
    merged.renames.extend(b.renames);
    Ok(merged)
}

/// Splices sorted non-overlapping edits into `text`.
pub fn apply_to_text(text: &str, edits: &[TextEdit]) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    for e in edits {
        debug_assert!(pos <= e.span.start && e.span.end <= text.len());
        out.push_str(&text[pos..e.span.start]);
        out.push_str(&e.replacement);
        pos = e.span.end;
    }
    out.push_str(&text[pos..]);
    out
}

pub fn sha256_hex(text: &str) -> String {
    let mut h = Sha256::new();
    h.update(text.as_bytes());
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[derive(Debug, Clone)]
pub struct FileSnapshot {
    pub text: String,
    pub sha: String,
}

/// The analyzed file contents, keyed by workspace-relative path.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    pub files: BTreeMap<String, FileSnapshot>,
}

impl Workspace {
    pub fn from_program(program: &Program) -> Workspace {
        let mut files = BTreeMap::new();
        for f in &program.files {
            files.insert(
                f.path.clone(),
                FileSnapshot {
                    sha: sha256_hex(&f.text),
                    text: f.text.clone(),
                },
            );
        }
        Workspace { files }
    }

    pub fn text(&self, path: &str) -> Option<&str> {
        self.files.get(path).map(|f| f.text.as_str())
    }
}

/// Final state of every file the script touches: `Some(content)` to
/// write, `None` to delete.
pub fn predicted(
    script: &EditScript,
    workspace: &Workspace,
) -> Result<BTreeMap<String, Option<String>>, EditError> {
    let mut out: BTreeMap<String, Option<String>> = BTreeMap::new();
    let mut edited: BTreeMap<&str, String> = BTreeMap::new();
    for (path, edits) in &script.edits {
        let snap = workspace
            .files
            .get(path)
            .ok_or_else(|| EditError::MissingSnapshot { path: path.clone() })?;
        edited.insert(path, apply_to_text(&snap.text, edits));
    }
    for (path, content) in &script.creates {
        if workspace.files.contains_key(path) {
            return Err(EditError::CreateExists { path: path.clone() });
        }
        out.insert(path.clone(), Some(content.clone()));
    }
    for (path, edits) in &script.edits {
        let _ = edits;
        out.insert(path.clone(), Some(edited[path.as_str()].clone()));
    }
    for path in &script.deletes {
        out.insert(path.clone(), None);
    }
    for (from, to) in &script.renames {
        let content = match edited.get(from.as_str()) {
            Some(text) => text.clone(),
            None => workspace
                .files
                .get(from)
                .ok_or_else(|| EditError::MissingSnapshot { path: from.clone() })?
                .text
                .clone(),
        };
        if workspace.files.contains_key(to) {
            return Err(EditError::CreateExists { path: to.clone() });
        }
        out.insert(from.clone(), None);
        out.insert(to.clone(), Some(content));
    }
    Ok(out)
}

/// Unified diff of the whole script against the snapshot state.
pub fn render_diff(script: &EditScript, workspace: &Workspace) -> Result<String, EditError> {
    let target = predicted(script, workspace)?;
    let mut out = String::new();
    for (path, new) in &target {
        let old = workspace.text(path);
        match (old, new) {
            (Some(old), Some(new)) => {
                out.push_str(&unified_diff(
                    &format!("a/{path}"),
                    &format!("b/{path}"),
                    old,
                    new,
                ));
            }
            (None, Some(new)) => {
                out.push_str(&unified_diff("/dev/null", &format!("b/{path}"), "", new));
            }
            (Some(old), None) => {
                out.push_str(&unified_diff(&format!("a/{path}"), "/dev/null", old, ""));
            }
            (None, None) => {}
        }
    }
    Ok(out)
}

pub const LOCK_FILE: &str = ".plrefactor.lock";

/// Filesystem access used by `apply`; swap in a memory implementation to
/// test staleness and mid-apply failure without touching a disk.
pub trait ApplyFs {
    fn read(&self, path: &str) -> io::Result<Option<String>>;
    /// Writes content somewhere invisible; returns a staging token.
    fn stage(&mut self, path: &str, content: &str) -> io::Result<String>;
    /// Moves staged content into place; the commit point per file.
    fn commit(&mut self, token: &str, path: &str) -> io::Result<()>;
    fn remove(&mut self, path: &str) -> io::Result<()>;
    fn discard(&mut self, token: &str);
    fn lock(&mut self) -> Result<(), EditError>;
    fn unlock(&mut self);
}

#[derive(Debug, Clone, Default)]
pub struct ApplyReport {
    pub written: Vec<String>,
    pub deleted: Vec<String>,
}

/// All-or-nothing application: hash-checks every touched file against
/// the snapshot, stages everything, then commits.
pub fn apply(
    script: &EditScript,
    workspace: &Workspace,
    fs: &mut dyn ApplyFs,
) -> Result<ApplyReport, EditError> {
    let target = predicted(script, workspace)?;
    fs.lock()?;
    let result = apply_locked(script, workspace, &target, fs);
    fs.unlock();
    result
}

fn apply_locked(
    script: &EditScript,
    workspace: &Workspace,
    target: &BTreeMap<String, Option<String>>,
    fs: &mut dyn ApplyFs,
) -> Result<ApplyReport, EditError> {
    // Staleness: every path we read or overwrite must match its
    // snapshot; created paths must not exist.
    for path in script.touched_paths() {
        let on_disk = fs.read(&path)?;
        match workspace.files.get(&path) {
            Some(snap) => match on_disk {
                Some(text) if sha256_hex(&text) == snap.sha => {}
                _ => return Err(EditError::StaleSnapshot { path }),
            },
            None => {
                if on_disk.is_some() {
                    return Err(EditError::CreateExists { path });
                }
            }
        }
    }

    let mut staged: Vec<(String, String)> = Vec::new();
    for (path, content) in target {
        if let Some(content) = content {
            match fs.stage(path, content) {
                Ok(token) => staged.push((token, path.clone())),
                Err(e) => {
                    for (token, _) in &staged {
                        fs.discard(token);
                    }
                    return Err(EditError::Io(e));
                }
            }
        }
    }

    let mut report = ApplyReport::default();
    for (token, path) in staged {
        fs.commit(&token, &path)?;
        report.written.push(path);
    }
    for (path, content) in target {
        if content.is_none() {
            fs.remove(path)?;
            report.deleted.push(path.clone());
        }
    }
    Ok(report)
}

/// Disk-backed `ApplyFs` rooted at a workspace directory.
pub struct DiskFs {
    pub root: std::path::PathBuf,
    counter: usize,
}

impl DiskFs {
    pub fn new(root: impl Into<std::path::PathBuf>) -> DiskFs {
        DiskFs {
            root: root.into(),
            counter: 0,
        }
    }

    fn full(&self, path: &str) -> std::path::PathBuf {
        self.root.join(path)
    }
}

impl ApplyFs for DiskFs {
    fn read(&self, path: &str) -> io::Result<Option<String>> {
        match std::fs::read_to_string(self.full(path)) {
            Ok(text) => Ok(Some(text)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn stage(&mut self, path: &str, content: &str) -> io::Result<String> {
        self.counter += 1;
        let token = format!("{path}.plrtmp{}", self.counter);
        let full = self.full(&token);
        if let Some(parent) = full.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(full, content)?;
        Ok(token)
    }

    fn commit(&mut self, token: &str, path: &str) -> io::Result<()> {
        std::fs::rename(self.full(token), self.full(path))
    }

    fn remove(&mut self, path: &str) -> io::Result<()> {
        std::fs::remove_file(self.full(path))
    }

    fn discard(&mut self, token: &str) {
        let _ = std::fs::remove_file(self.full(token));
    }

    fn lock(&mut self) -> Result<(), EditError> {
        let path = self.full(LOCK_FILE);
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(()),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(EditError::LockHeld {
                path: path.display().to_string(),
            }),
            Err(e) => Err(EditError::Io(e)),
        }
    }

    fn unlock(&mut self) {
        let _ = std::fs::remove_file(self.full(LOCK_FILE));
    }
}

/// In-memory `ApplyFs` with failure injection for atomicity tests.
#[derive(Debug, Default)]
pub struct MemFs {
    pub files: BTreeMap<String, String>,
    staged: BTreeMap<String, String>,
    pub fail_on_stage: Option<usize>,
    stages: usize,
    pub locked: bool,
}

impl ApplyFs for MemFs {
    fn read(&self, path: &str) -> io::Result<Option<String>> {
        Ok(self.files.get(path).cloned())
    }

    fn stage(&mut self, path: &str, content: &str) -> io::Result<String> {
        self.stages += 1;
        if Some(self.stages) == self.fail_on_stage.map(|n| n + 1) {
            return Err(io::Error::new(io::ErrorKind::Other, "injected failure"));
        }
        let token = format!("tmp:{path}:{}", self.stages);
        self.staged.insert(token.clone(), content.to_string());
        Ok(token)
    }

    fn commit(&mut self, token: &str, path: &str) -> io::Result<()> {
        let content = self.staged.remove(token).expect("commit of staged token");
        self.files.insert(path.to_string(), content);
        Ok(())
    }

    fn remove(&mut self, path: &str) -> io::Result<()> {
        self.files.remove(path);
        Ok(())
    }

    fn discard(&mut self, token: &str) {
        self.staged.remove(token);
    }

    fn lock(&mut self) -> Result<(), EditError> {
        if self.locked {
            return Err(EditError::LockHeld {
                path: LOCK_FILE.to_string(),
            });
        }
        self.locked = true;
        Ok(())
    }

    fn unlock(&mut self) {
        self.locked = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_program, Config};
    use crate::span::{FileId, SourceSpan};

    fn program_one(src: &str) -> Program {
        load_program(
            &[("m.pl".to_string(), src.to_string())],
            None,
            &Config::default(),
        )
    }

    fn edit(file: FileId, start: usize, end: usize, text: &str) -> TextEdit {
        TextEdit::new(SourceSpan::new(file, start, end), text)
    }

    #[test]
    fn plan_sorts_and_deduplicates() {
        let p = program_one("abc.\n");
        let f = FileId(0);
        let script = plan(
            &p,
            "t",
            vec![
                edit(f, 3, 4, "!"),
                edit(f, 0, 1, "x"),
                edit(f, 0, 1, "x"),
            ],
        )
        .unwrap();
        let edits = &script.edits["m.pl"];
        assert_eq!(edits.len(), 2);
        assert_eq!(edits[0].span.start, 0);
    }

    #[test]
    fn plan_rejects_overlap() {
        let p = program_one("abcdef.\n");
        let f = FileId(0);
        let err = plan(&p, "t", vec![edit(f, 0, 3, "x"), edit(f, 2, 4, "y")]).unwrap_err();
        assert!(matches!(err, EditError::Overlap { .. }));
    }

    #[test]
    fn same_point_insertions_merge_in_order() {
        let p = program_one("ab.\n");
        let f = FileId(0);
        let script = plan(
            &p,
            "t",
            vec![edit(f, 1, 1, "X"), edit(f, 1, 1, "Y")],
        )
        .unwrap();
        let edits = &script.edits["m.pl"];
        assert_eq!(edits.len(), 1);
        assert_eq!(edits[0].replacement, "XY");
        assert_eq!(apply_to_text("ab.\n", edits), "aXYb.\n");
    }

    #[test]
    fn splice_matches_manual() {
        let text = "p(a).\nq(b).\n";
        let f = FileId(0);
        let edits = vec![edit(f, 2, 3, "zz"), edit(f, 6, 6, "% new\n")];
        assert_eq!(apply_to_text(text, &edits), "p(zz).\n% new\nq(b).\n");
    }

    #[test]
    fn untouched_bytes_preserved() {
        let text = "aaaa bbbb cccc\n";
        let f = FileId(0);
        let edits = vec![edit(f, 5, 9, "XY")];
        let out = apply_to_text(text, &edits);
        assert_eq!(&out[..5], &text[..5]);
        assert_eq!(&out[7..], &text[9..]);
    }

    #[test]
    fn apply_roundtrip_on_memfs() {
        let src = "p(a).\np(b).\n";
        let p = program_one(src);
        let ws = Workspace::from_program(&p);
        let script = plan(&p, "t", vec![edit(FileId(0), 2, 3, "x")]).unwrap();
        let mut fs = MemFs::default();
        fs.files.insert("m.pl".to_string(), src.to_string());
        let report = apply(&script, &ws, &mut fs).unwrap();
        assert_eq!(report.written, vec!["m.pl".to_string()]);
        assert_eq!(fs.files["m.pl"], "p(x).\np(b).\n");
        assert!(!fs.locked);
    }

    #[test]
    fn stale_file_refused() {
        let src = "p(a).\n";
        let p = program_one(src);
        let ws = Workspace::from_program(&p);
        let script = plan(&p, "t", vec![edit(FileId(0), 2, 3, "x")]).unwrap();
        let mut fs = MemFs::default();
        fs.files
            .insert("m.pl".to_string(), "p(a). % touched\n".to_string());
        let err = apply(&script, &ws, &mut fs).unwrap_err();
        assert!(matches!(err, EditError::StaleSnapshot { .. }));
        assert_eq!(fs.files["m.pl"], "p(a). % touched\n");
    }

    #[test]
    fn injected_stage_failure_leaves_files_untouched() {
        let files = vec![
            ("a.pl".to_string(), "a1.\n".to_string()),
            ("b.pl".to_string(), "b1.\n".to_string()),
        ];
        let p = load_program(&files, None, &Config::default());
        let ws = Workspace::from_program(&p);
        let script = plan(
            &p,
            "t",
            vec![edit(FileId(0), 0, 2, "a2"), edit(FileId(1), 0, 2, "b2")],
        )
        .unwrap();
        let mut fs = MemFs::default();
        fs.files.insert("a.pl".to_string(), "a1.\n".to_string());
        fs.files.insert("b.pl".to_string(), "b1.\n".to_string());
        fs.fail_on_stage = Some(1); // first stage ok, second fails
        let err = apply(&script, &ws, &mut fs).unwrap_err();
        assert!(matches!(err, EditError::Io(_)));
        assert_eq!(fs.files["a.pl"], "a1.\n");
        assert_eq!(fs.files["b.pl"], "b1.\n");
        assert!(fs.staged.is_empty(), "staging residue");
        assert!(!fs.locked);
    }

    #[test]
    fn create_and_delete_files() {
        let p = program_one("p.\n");
        let ws = Workspace::from_program(&p);
        let mut script = EditScript {
            provenance: "t".to_string(),
            ..Default::default()
        };
        script
            .creates
            .insert("new.pl".to_string(), ":- module(new, []).\n".to_string());
        script.deletes.insert("m.pl".to_string());
        let mut fs = MemFs::default();
        fs.files.insert("m.pl".to_string(), "p.\n".to_string());
        let report = apply(&script, &ws, &mut fs).unwrap();
        assert_eq!(report.deleted, vec!["m.pl".to_string()]);
        assert!(!fs.files.contains_key("m.pl"));
        assert_eq!(fs.files["new.pl"], ":- module(new, []).\n");
    }

    #[test]
    fn rename_moves_edited_content() {
        let p = program_one(":- module(m, []).\n");
        let ws = Workspace::from_program(&p);
        let mut script = plan(&p, "t", vec![edit(FileId(0), 10, 11, "n")]).unwrap();
        script.renames.push(("m.pl".to_string(), "n.pl".to_string()));
        let mut fs = MemFs::default();
        fs.files
            .insert("m.pl".to_string(), ":- module(m, []).\n".to_string());
        apply(&script, &ws, &mut fs).unwrap();
        assert!(!fs.files.contains_key("m.pl"));
        assert_eq!(fs.files["n.pl"], ":- module(n, []).\n");
    }

    #[test]
    fn disk_fs_applies_atomically() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("m.pl"), "p(a).\n").unwrap();
        let p = program_one("p(a).\n");
        let ws = Workspace::from_program(&p);
        let script = plan(&p, "t", vec![edit(FileId(0), 2, 3, "b")]).unwrap();
        let mut fs = DiskFs::new(dir.path());
        apply(&script, &ws, &mut fs).unwrap();
        assert_eq!(
            std::fs::read_to_string(dir.path().join("m.pl")).unwrap(),
            "p(b).\n"
        );
        assert!(!dir.path().join(LOCK_FILE).exists());
        // No temp residue.
        let residue: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().contains("plrtmp"))
            .collect();
        assert!(residue.is_empty());
    }

    #[test]
    fn lock_held_refuses() {
        let p = program_one("p.\n");
        let ws = Workspace::from_program(&p);
        let script = plan(&p, "t", vec![edit(FileId(0), 0, 1, "q")]).unwrap();
        let mut fs = MemFs::default();
        fs.files.insert("m.pl".to_string(), "p.\n".to_string());
        fs.locked = true;
        let err = apply(&script, &ws, &mut fs).unwrap_err();
        assert!(matches!(err, EditError::LockHeld { .. }));
    }

    #[test]
    fn diff_of_script_renders_all_files() {
        let p = program_one("p(a).\n");
        let ws = Workspace::from_program(&p);
        let mut script = plan(&p, "t", vec![edit(FileId(0), 2, 3, "b")]).unwrap();
        script
            .creates
            .insert("extra.pl".to_string(), "q.\n".to_string());
        let d = render_diff(&script, &ws).unwrap();
        assert!(d.contains("--- a/m.pl"));
        assert!(d.contains("-p(a)."));
        assert!(d.contains("+p(b)."));
        assert!(d.contains("--- /dev/null"));
        assert!(d.contains("+q."));
    }
}

//! Byte-offset source spans.
//!
//! Every syntax node carries a span into the file it was read from, so that
//! transformations can splice replacement text without disturbing any byte
//! outside the edited region.

use std::fmt;

/// Identifies a loaded source file. Index into the workspace file table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FileId(pub u32);

impl fmt::Display for FileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

/// Half-open byte range `[start, end)` within one file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceSpan {
    pub file: FileId,
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    pub fn new(file: FileId, start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        SourceSpan { file, start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// Smallest span covering both `self` and `other` (same file).
    pub fn cover(&self, other: SourceSpan) -> SourceSpan {
        debug_assert_eq!(self.file, other.file);
        SourceSpan {
            file: self.file,
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }

    pub fn contains(&self, other: SourceSpan) -> bool {
        self.file == other.file && self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: SourceSpan) -> bool {
        self.file == other.file && self.start < other.end && other.start < self.end
    }

    pub fn slice<'t>(&self, text: &'t str) -> &'t str {
        &text[self.start..self.end]
    }
}

/// 1-based line/column pair for user-facing messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineCol {
    pub line: usize,
    pub col: usize,
}

/// Computes the 1-based line and column of a byte offset.
pub fn line_col(text: &str, offset: usize) -> LineCol {
    let offset = offset.min(text.len());
    let mut line = 1;
    let mut line_start = 0;
    for (i, b) in text.bytes().enumerate() {
        if i >= offset {
            break;
        }
        if b == b'\n' {
            line += 1;
            line_start = i + 1;
        }
    }
    LineCol {
        line,
        col: text[line_start..offset].chars().count() + 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cover_and_overlap() {
        let f = FileId(0);
        let a = SourceSpan::new(f, 2, 5);
        let b = SourceSpan::new(f, 4, 9);
        assert_eq!(a.cover(b), SourceSpan::new(f, 2, 9));
        assert!(a.overlaps(b));
        assert!(!a.overlaps(SourceSpan::new(f, 5, 6)));
    }

    #[test]
    fn line_col_counts_from_one() {
        let text = "abc\ndef\n";
        assert_eq!(line_col(text, 0), LineCol { line: 1, col: 1 });
        assert_eq!(line_col(text, 5), LineCol { line: 2, col: 2 });
    }
}

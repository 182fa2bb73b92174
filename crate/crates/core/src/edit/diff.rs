//! Line diffs and unified rendering.
//!
//! Shortest edit script by the greedy O(ND) forward search; lines are
//! compared with their trailing newline included, so a missing final
//! newline shows up as a change and is rendered with the conventional
//! backslash marker.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Equal,
    Delete,
    Insert,
}

/// Minimal line-level edit script turning `a` into `b`.
pub fn diff_ops(a: &[&str], b: &[&str]) -> Vec<Op> {
    let n = a.len() as isize;
    let m = b.len() as isize;
    let max = n + m;
    if max == 0 {
        return Vec::new();
    }
    let offset = max;
    let width = (2 * max + 3) as usize;
    let mut v = vec![0isize; width];
    let mut trace: Vec<Vec<isize>> = Vec::new();
    let mut final_d = None;
    'search: for d in 0..=max {
        trace.push(v.clone());
        let mut k = -d;
        while k <= d {
            let idx = (k + offset) as usize;
            let mut x = if k == -d || (k != d && v[idx - 1] < v[idx + 1]) {
                v[idx + 1]
            } else {
                v[idx - 1] + 1
            };
            let mut y = x - k;
            while x < n && y < m && a[x as usize] == b[y as usize] {
                x += 1;
                y += 1;
            }
            v[idx] = x;
            if x >= n && y >= m {
                final_d = Some(d);
                break 'search;
            }
            k += 2;
        }
    }
    let final_d = final_d.expect("search always terminates at d = n + m");

    let mut ops = Vec::new();
    let (mut x, mut y) = (n, m);
    for d in (0..=final_d).rev() {
        let v = &trace[d as usize];
        let k = x - y;
        let prev_k = if k == -d || (k != d && v[(k - 1 + offset) as usize] < v[(k + 1 + offset) as usize])
        {
            k + 1
        } else {
            k - 1
        };
        let prev_x = v[(prev_k + offset) as usize];
        let prev_y = prev_x - prev_k;
        while x > prev_x && y > prev_y {
            ops.push(Op::Equal);
            x -= 1;
            y -= 1;
        }
        if d > 0 {
            ops.push(if x == prev_x { Op::Insert } else { Op::Delete });
            x = prev_x;
            y = prev_y;
        }
    }
    ops.reverse();
    ops
}

fn split_lines(text: &str) -> Vec<&str> {
    text.split_inclusive('\n').collect()
}

fn push_line(out: &mut String, prefix: char, line: &str) {
    out.push(prefix);
    if let Some(stripped) = line.strip_suffix('\n') {
        out.push_str(stripped);
        out.push('\n');
    } else {
        out.push_str(line);
        out.push_str("\n\\ No newline at end of file\n");
    }
}

/// Unified diff with three lines of context; empty string when the
/// texts are equal.
pub fn unified_diff(old_path: &str, new_path: &str, old: &str, new: &str) -> String {
    if old == new {
        return String::new();
    }
    let a = split_lines(old);
    let b = split_lines(new);
    let ops = diff_ops(&a, &b);

    // Position of each op in both files, before the op is consumed.
    let mut a_pos = Vec::with_capacity(ops.len() + 1);
    let mut b_pos = Vec::with_capacity(ops.len() + 1);
    let (mut ai, mut bi) = (0usize, 0usize);
    for op in &ops {
        a_pos.push(ai);
        b_pos.push(bi);
        match op {
            Op::Equal => {
                ai += 1;
                bi += 1;
            }
            Op::Delete => ai += 1,
            Op::Insert => bi += 1,
        }
    }
    a_pos.push(ai);
    b_pos.push(bi);

    const CONTEXT: usize = 3;
    let mut ranges: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < ops.len() {
        if ops[i] == Op::Equal {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < ops.len() {
            // Extend over changes separated by at most 2*CONTEXT equals.
            if ops[j] != Op::Equal {
                j += 1;
                continue;
            }
            let run_end = ops[j..]
                .iter()
                .position(|o| *o != Op::Equal)
                .map(|p| j + p);
            match run_end {
                Some(next) if next - j <= 2 * CONTEXT => j = next,
                _ => break,
            }
        }
        let start = i.saturating_sub(CONTEXT);
        let end = (j + CONTEXT).min(ops.len());
        ranges.push((start, end));
        i = j;
    }

    let mut out = format!("--- {old_path}\n+++ {new_path}\n");
    for (s, e) in ranges {
        let a_len = ops[s..e].iter().filter(|o| **o != Op::Insert).count();
        let b_len = ops[s..e].iter().filter(|o| **o != Op::Delete).count();
        let a_start = if a_len == 0 { a_pos[s] } else { a_pos[s] + 1 };
        let b_start = if b_len == 0 { b_pos[s] } else { b_pos[s] + 1 };
        out.push_str(&format!(
            "@@ -{a_start},{a_len} +{b_start},{b_len} @@\n"
        ));
        let (mut ai, mut bi) = (a_pos[s], b_pos[s]);
        for op in &ops[s..e] {
            match op {
                Op::Equal => {
                    push_line(&mut out, ' ', a[ai]);
                    ai += 1;
                    bi += 1;
                }
                Op::Delete => {
                    push_line(&mut out, '-', a[ai]);
                    ai += 1;
                }
                Op::Insert => {
                    push_line(&mut out, '+', b[bi]);
                    bi += 1;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply_ops(a: &[&str], b: &[&str], ops: &[Op]) -> String {
        let mut out = String::new();
        let (mut ai, mut bi) = (0, 0);
        for op in ops {
            match op {
                Op::Equal => {
                    assert_eq!(a[ai], b[bi]);
                    out.push_str(a[ai]);
                    ai += 1;
                    bi += 1;
                }
                Op::Delete => ai += 1,
                Op::Insert => {
                    out.push_str(b[bi]);
                    bi += 1;
                }
            }
        }
        assert_eq!(ai, a.len());
        assert_eq!(bi, b.len());
        out
    }

    #[test]
    fn ops_reconstruct_target() {
        let cases = [
            ("", "a\n"),
            ("a\n", ""),
            ("a\nb\nc\n", "a\nx\nc\n"),
            ("a\nb\n", "b\na\n"),
            ("same\n", "same\n"),
            ("x\ny\nz\n", "x\ny\nz\nw\n"),
        ];
        for (old, new) in cases {
            let a: Vec<&str> = old.split_inclusive('\n').collect();
            let b: Vec<&str> = new.split_inclusive('\n').collect();
            let ops = diff_ops(&a, &b);
            assert_eq!(apply_ops(&a, &b, &ops), new, "{old:?} -> {new:?}");
        }
    }

    #[test]
    fn single_line_change_renders_hunk() {
        let old = "p(a).\np(b).\np(c).\n";
        let new = "p(a).\np(x).\np(c).\n";
        let d = unified_diff("a/m.pl", "b/m.pl", old, new);
        assert_eq!(
            d,
            "--- a/m.pl\n+++ b/m.pl\n@@ -1,3 +1,3 @@\n p(a).\n-p(b).\n+p(x).\n p(c).\n"
        );
    }

    #[test]
    fn distant_changes_get_two_hunks() {
        let mut old = String::new();
        for i in 0..20 {
            old.push_str(&format!("line{i}\n"));
        }
        let new = old.replace("line2\n", "LINE2\n").replace("line17\n", "LINE17\n");
        let d = unified_diff("a/f", "b/f", &old, &new);
        assert_eq!(d.lines().filter(|l| l.starts_with("@@")).count(), 2);
    }

    #[test]
    fn missing_final_newline_marked() {
        let d = unified_diff("a/f", "b/f", "x\ny", "x\ny\n");
        assert!(d.contains("-y\n\\ No newline at end of file\n"));
        assert!(d.contains("+y\n"));
    }

    #[test]
    fn equal_texts_empty_diff() {
        assert_eq!(unified_diff("a/f", "b/f", "same\n", "same\n"), "");
    }

    #[test]
    fn pure_insertion_zero_length_range() {
        let d = unified_diff("a/f", "b/f", "", "new\n");
        assert!(d.contains("@@ -0,0 +1,1 @@"), "{d}");
    }
}

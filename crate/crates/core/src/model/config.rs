//! Workspace configuration.
//!
//! A config file is line-oriented `key = value` text; `#` starts a
//! comment. Recognized keys:
//!
//! - `roots`: comma-separated files or directories to load
//! - `entry_points`: comma-separated `module:name/arity` goals treated as
//!   live roots
//! - `builtins_extra`: comma-separated `name/arity` treated as built-in
//! - `modes_file`: path to a sidecar file of mode declarations
//! - `encoding`: source encoding; only UTF-8 is supported
//! - `oversized_threshold`: predicates-per-module limit for the oversized
//!   module smell (default 40)
//! - `pure_guard`: comma-separated `name/arity` goals allowed in the
//!   guard of a cut clause when rewriting it to if-then-else; replaces
//!   the default list (unification, comparisons, type tests, `is`)

use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub roots: Vec<String>,
    pub entry_points: Vec<(String, String, usize)>,
    pub builtins_extra: Vec<(String, usize)>,
    pub modes_file: Option<String>,
    pub encoding: String,
    pub oversized_threshold: usize,
    pub pure_guard: Vec<(String, usize)>,
}

/// Binding-benign goals a cut-clause guard may contain: they either
/// unify or test, never enumerate or have effects.
pub fn default_pure_guard() -> Vec<(String, usize)> {
    let pairs: &[(&str, usize)] = &[
        ("=", 2),
        ("==", 2),
        ("\\==", 2),
        ("=:=", 2),
        ("=\\=", 2),
        ("<", 2),
        (">", 2),
        ("=<", 2),
        (">=", 2),
        ("is", 2),
        ("var", 1),
        ("nonvar", 1),
        ("atom", 1),
        ("atomic", 1),
        ("number", 1),
        ("integer", 1),
        ("float", 1),
        ("compound", 1),
        ("callable", 1),
        ("is_list", 1),
        ("ground", 1),
    ];
    pairs.iter().map(|(n, a)| (n.to_string(), *a)).collect()
}

impl Default for Config {
    fn default() -> Config {
        Config {
            roots: Vec::new(),
            entry_points: Vec::new(),
            builtins_extra: Vec::new(),
            modes_file: None,
            encoding: "utf-8".to_string(),
            oversized_threshold: 40,
            pure_guard: default_pure_guard(),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad predicate indicator `{text}`")]
    BadIndicator { line: usize, text: String },
    #[error("line {line}: bad entry point `{text}` (want module:name/arity)")]
    BadEntryPoint { line: usize, text: String },
    #[error("line {line}: unsupported encoding `{value}`")]
    BadEncoding { line: usize, value: String },
    #[error("line {line}: bad number `{value}`")]
    BadNumber { line: usize, value: String },
}

fn parse_indicator(s: &str, line: usize) -> Result<(String, usize), ConfigError> {
    let (name, arity) = s.rsplit_once('/').ok_or_else(|| ConfigError::BadIndicator {
        line,
        text: s.to_string(),
    })?;
    let arity: usize = arity.trim().parse().map_err(|_| ConfigError::BadIndicator {
        line,
        text: s.to_string(),
    })?;
    let name = name.trim();
    if name.is_empty() {
        return Err(ConfigError::BadIndicator {
            line,
            text: s.to_string(),
        });
    }
    Ok((name.to_string(), arity))
}

pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let mut cfg = Config::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Malformed {
            line,
            text: raw.to_string(),
        })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "roots" => {
                cfg.roots = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect();
            }
            "entry_points" => {
                for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let (module, rest) =
                        part.split_once(':').ok_or_else(|| ConfigError::BadEntryPoint {
                            line,
                            text: part.to_string(),
                        })?;
                    let (name, arity) = parse_indicator(rest, line)?;
                    cfg.entry_points.push((module.trim().to_string(), name, arity));
                }
            }
            "builtins_extra" => {
                for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    cfg.builtins_extra.push(parse_indicator(part, line)?);
                }
            }
            "modes_file" => cfg.modes_file = Some(value.to_string()),
            "encoding" => {
                let norm = value.to_ascii_lowercase();
                if norm != "utf-8" && norm != "utf8" {
                    return Err(ConfigError::BadEncoding {
                        line,
                        value: value.to_string(),
                    });
                }
                cfg.encoding = "utf-8".to_string();
            }
            "oversized_threshold" => {
                cfg.oversized_threshold =
                    value.parse().map_err(|_| ConfigError::BadNumber {
                        line,
                        value: value.to_string(),
                    })?;
            }
            "pure_guard" => {
                let mut list = Vec::new();
                for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    list.push(parse_indicator(part, line)?);
                }
                cfg.pure_guard = list;
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config() {
        let text = "\
# workspace settings
roots = src, lib/extra.pl
entry_points = main:run/0, main:serve/2
builtins_extra = my_builtin/3
modes_file = modes.pl
encoding = UTF-8
oversized_threshold = 25
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.roots, vec!["src", "lib/extra.pl"]);
        assert_eq!(
            cfg.entry_points,
            vec![
                ("main".to_string(), "run".to_string(), 0),
                ("main".to_string(), "serve".to_string(), 2)
            ]
        );
        assert_eq!(cfg.builtins_extra, vec![("my_builtin".to_string(), 3)]);
        assert_eq!(cfg.modes_file.as_deref(), Some("modes.pl"));
        assert_eq!(cfg.oversized_threshold, 25);
    }

    #[test]
    fn defaults() {
        let cfg = parse_config("").unwrap();
        assert!(cfg.roots.is_empty());
        assert_eq!(cfg.oversized_threshold, 40);
        assert_eq!(cfg.encoding, "utf-8");
        assert!(cfg.pure_guard.contains(&("==".to_string(), 2)));
    }

    #[test]
    fn pure_guard_override() {
        let cfg = parse_config("pure_guard = =/2, ==/2\n").unwrap();
        assert_eq!(
            cfg.pure_guard,
            vec![("=".to_string(), 2), ("==".to_string(), 2)]
        );
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_config("nonsense\n"),
            Err(ConfigError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("mystery = 1\n"),
            Err(ConfigError::UnknownKey { .. })
        ));
        assert!(matches!(
            parse_config("entry_points = run/0\n"),
            Err(ConfigError::BadEntryPoint { .. })
        ));
        assert!(matches!(
            parse_config("builtins_extra = nope\n"),
            Err(ConfigError::BadIndicator { .. })
        ));
        assert!(matches!(
            parse_config("encoding = latin-1\n"),
            Err(ConfigError::BadEncoding { .. })
        ));
        assert!(matches!(
            parse_config("oversized_threshold = many\n"),
            Err(ConfigError::BadNumber { .. })
        ));
    }
}

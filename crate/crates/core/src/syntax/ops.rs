//! Operator definitions and the dynamic operator table.
//!
//! The table starts from the ISO core set and is updated in file order as
//! `:- op(Priority, Type, Name)` directives are parsed, so later clauses in
//! the same file see the amended table.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OpType {
    Xfx,
    Xfy,
    Yfx,
    Fy,
    Fx,
    Xf,
    Yf,
}

impl OpType {
    pub fn is_prefix(self) -> bool {
        matches!(self, OpType::Fy | OpType::Fx)
    }

    pub fn is_infix(self) -> bool {
        matches!(self, OpType::Xfx | OpType::Xfy | OpType::Yfx)
    }

    pub fn is_postfix(self) -> bool {
        matches!(self, OpType::Xf | OpType::Yf)
    }

    pub fn parse(s: &str) -> Option<OpType> {
        Some(match s {
            "xfx" => OpType::Xfx,
            "xfy" => OpType::Xfy,
            "yfx" => OpType::Yfx,
            "fy" => OpType::Fy,
            "fx" => OpType::Fx,
            "xf" => OpType::Xf,
            "yf" => OpType::Yf,
            _ => return None,
        })
    }
}

impl fmt::Display for OpType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OpType::Xfx => "xfx",
            OpType::Xfy => "xfy",
            OpType::Yfx => "yfx",
            OpType::Fy => "fy",
            OpType::Fx => "fx",
            OpType::Xf => "xf",
            OpType::Yf => "yf",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpDef {
    pub priority: u16,
    pub op_type: OpType,
}

impl OpDef {
    /// Maximum priority an argument in the given position may have.
    pub fn left_max(self) -> u16 {
        match self.op_type {
            OpType::Yfx | OpType::Yf => self.priority,
            OpType::Xfx | OpType::Xfy | OpType::Xf => self.priority - 1,
            _ => 0,
        }
    }

    pub fn right_max(self) -> u16 {
        match self.op_type {
            OpType::Xfy => self.priority,
            OpType::Xfx | OpType::Yfx => self.priority - 1,
            OpType::Fy => self.priority,
            OpType::Fx => self.priority - 1,
            _ => 0,
        }
    }
}

/// Operator table: name -> (optional prefix def, optional infix/postfix def).
/// ISO permits one of each class per name.
#[derive(Debug, Clone, Default)]
pub struct OpTable {
    prefix: BTreeMap<String, OpDef>,
    infix_postfix: BTreeMap<String, OpDef>,
}

impl OpTable {
    /// The standard table all files start from.
    pub fn standard() -> OpTable {
        let mut t = OpTable::default();
        let defs: &[(u16, OpType, &[&str])] = &[
            (1200, OpType::Xfx, &[":-", "-->"]),
            (1200, OpType::Fx, &[":-", "?-"]),
            (
                1150,
                OpType::Fx,
                &["dynamic", "discontiguous", "multifile", "initialization", "meta_predicate", "mode"],
            ),
            (1100, OpType::Xfy, &[";"]),
            (1050, OpType::Xfy, &["->"]),
            (1000, OpType::Xfy, &[","]),
            (900, OpType::Fy, &["\\+"]),
            (
                700,
                OpType::Xfx,
                &[
                    "=", "\\=", "==", "\\==", "@<", "@>", "@=<", "@>=", "is", "=:=", "=\\=", "<",
                    ">", "=<", ">=", "=..",
                ],
            ),
            (500, OpType::Yfx, &["+", "-", "/\\", "\\/", "xor"]),
            (400, OpType::Yfx, &["*", "/", "//", "mod", "rem", "<<", ">>", "div"]),
            (200, OpType::Xfx, &["**"]),
            (200, OpType::Xfy, &["^"]),
            (200, OpType::Fy, &["-", "+", "\\"]),
            (100, OpType::Yfx, &[":"]),
            (1, OpType::Fx, &["$"]),
        ];
        for &(priority, op_type, names) in defs {
            for &name in names {
                t.define(priority, op_type, name);
            }
        }
        t
    }

    /// Applies one `op/3` definition. Priority 0 removes the operator in
    /// that class.
    pub fn define(&mut self, priority: u16, op_type: OpType, name: &str) {
        let map = if op_type.is_prefix() {
            &mut self.prefix
        } else {
            &mut self.infix_postfix
        };
        if priority == 0 {
            map.remove(name);
        } else {
            map.insert(name.to_string(), OpDef { priority, op_type });
        }
    }

    pub fn prefix(&self, name: &str) -> Option<OpDef> {
        self.prefix.get(name).copied()
    }

    pub fn infix(&self, name: &str) -> Option<OpDef> {
        self.infix_postfix
            .get(name)
            .copied()
            .filter(|d| d.op_type.is_infix())
    }

    pub fn postfix(&self, name: &str) -> Option<OpDef> {
        self.infix_postfix
            .get(name)
            .copied()
            .filter(|d| d.op_type.is_postfix())
    }

    pub fn is_operator(&self, name: &str) -> bool {
        self.prefix.contains_key(name) || self.infix_postfix.contains_key(name)
    }

    /// Priority the printer must respect when deciding whether a term
    /// needs parentheses; 0 for non-operators.
    pub fn term_priority(&self, name: &str, arity: usize) -> u16 {
        match arity {
            1 => self
                .prefix(name)
                .map(|d| d.priority)
                .or_else(|| self.postfix(name).map(|d| d.priority))
                .unwrap_or(0),
            2 => self.infix(name).map(|d| d.priority).unwrap_or(0),
            _ => 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_table_core_ops() {
        let t = OpTable::standard();
        assert_eq!(
            t.infix(":-"),
            Some(OpDef {
                priority: 1200,
                op_type: OpType::Xfx
            })
        );
        assert_eq!(
            t.prefix(":-"),
            Some(OpDef {
                priority: 1200,
                op_type: OpType::Fx
            })
        );
        assert_eq!(t.infix(",").unwrap().priority, 1000);
        assert_eq!(t.infix(";").unwrap().priority, 1100);
        assert_eq!(t.infix("->").unwrap().priority, 1050);
        assert_eq!(t.prefix("\\+").unwrap().priority, 900);
        assert_eq!(t.infix("=").unwrap().priority, 700);
        assert_eq!(t.infix("*").unwrap().priority, 400);
        assert!(t.infix("boo").is_none());
    }

    #[test]
    fn define_and_remove() {
        let mut t = OpTable::standard();
        t.define(700, OpType::Xfx, "===");
        assert_eq!(t.infix("===").unwrap().priority, 700);
        t.define(0, OpType::Xfx, "===");
        assert!(t.infix("===").is_none());
    }

    #[test]
    fn argument_priority_bounds() {
        let t = OpTable::standard();
        let plus = t.infix("+").unwrap(); // 500 yfx
        assert_eq!(plus.left_max(), 500);
        assert_eq!(plus.right_max(), 499);
        let comma = t.infix(",").unwrap(); // 1000 xfy
        assert_eq!(comma.left_max(), 999);
        assert_eq!(comma.right_max(), 1000);
        let neg = t.prefix("-").unwrap(); // 200 fy
        assert_eq!(neg.right_max(), 200);
    }
}

//! The three bundled exercises: reference solutions, test suites, trace
//! inputs, and error-class catalogs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::minilang::{parse, run, ExecOptions, Program, Value, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskId {
    Chessboard,
    CountParentheses,
    BinaryDigits,
}

impl TaskId {
    pub const ALL: [TaskId; 3] = [TaskId::Chessboard, TaskId::CountParentheses, TaskId::BinaryDigits];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskId::Chessboard => "chessboard",
            TaskId::CountParentheses => "count_parentheses",
            TaskId::BinaryDigits => "binary_digits",
        }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskId {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chessboard" => Ok(TaskId::Chessboard),
            "count_parentheses" | "parentheses" => Ok(TaskId::CountParentheses),
            "binary_digits" | "binary" => Ok(TaskId::BinaryDigits),
            other => Err(SynthError::UnknownTask(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestCase {
    pub inputs: Vec<Value>,
    pub expected: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ErrorClass {
    pub name: &'static str,
    pub description: &'static str,
}

#[derive(Clone, Debug)]
pub struct Task {
    pub id: TaskId,
    pub sources: Vec<&'static str>,
    pub references: Vec<Program>,
    pub tests: Vec<TestCase>,
    /// Inputs on which dataset traces are recorded, in order.
    pub trace_inputs: Vec<Vec<Value>>,
    pub classes: Vec<ErrorClass>,
}

impl Task {
    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.name == name)
    }

    /// True iff `p` passes every test within the default step budget.
    pub fn passes(&self, p: &Program) -> bool {
        self.passes_with(p, &ExecOptions::default())
    }

    pub fn passes_with(&self, p: &Program, opts: &ExecOptions) -> bool {
        self.tests.iter().all(|t| {
            let ex = run(p, &t.inputs, opts);
            ex.verdict == Verdict::Completed && ex.output == t.expected
        })
    }
}

pub const CHESSBOARD_SOURCES: [&str; 3] = [
    include_str!("../../programs/chessboard_a.mini"),
    include_str!("../../programs/chessboard_b.mini"),
    include_str!("../../programs/chessboard_c.mini"),
];
pub const PARENS_SOURCES: [&str; 3] = [
    include_str!("../../programs/parens_a.mini"),
    include_str!("../../programs/parens_b.mini"),
    include_str!("../../programs/parens_c.mini"),
];
pub const BINARY_SOURCES: [&str; 3] = [
    include_str!("../../programs/binary_a.mini"),
    include_str!("../../programs/binary_b.mini"),
    include_str!("../../programs/binary_c.mini"),
];

const CHESSBOARD_CLASSES: [ErrorClass; 8] = [
    ErrorClass {
        name: "misprint",
        description: "prints 0 for O or lower-case letters",
    },
    ErrorClass {
        name: "rows_switched",
        description: "row pattern starts with O instead of X",
    },
    ErrorClass {
        name: "no_switch",
        description: "first row right but rows never alternate",
    },
    ErrorClass {
        name: "single_char",
        description: "whole board printed with one character",
    },
    ErrorClass {
        name: "extra_chars",
        description: "board right but with extra characters",
    },
    ErrorClass {
        name: "row_count",
        description: "wrong number of rows",
    },
    ErrorClass {
        name: "column_count",
        description: "wrong number of columns",
    },
    ErrorClass {
        name: "wrong_format",
        description: "right characters, rows not broken correctly",
    },
];

const PARENS_CLASSES: [ErrorClass; 6] = [
    ErrorClass {
        name: "miss_empty",
        description: "empty string corner case mishandled",
    },
    ErrorClass {
        name: "symbol_confusion",
        description: "compares against other bracket symbols",
    },
    ErrorClass {
        name: "unmatched",
        description: "unmatched parentheses not reported",
    },
    ErrorClass {
        name: "count_pairs",
        description: "counts parentheses instead of depth",
    },
    ErrorClass {
        name: "assume_nested",
        description: "assumes nesting is always present",
    },
    ErrorClass {
        name: "count_ignored",
        description: "counts characters that should be ignored",
    },
];

const BINARY_CLASSES: [ErrorClass; 5] = [
    ErrorClass {
        name: "miss_zero",
        description: "input 0 corner case missed",
    },
    ErrorClass {
        name: "decimal_digits",
        description: "emits the decimal text of the number",
    },
    ErrorClass {
        name: "shift_arithmetic",
        description: "wrong arithmetic for the shift step",
    },
    ErrorClass {
        name: "add_digits",
        description: "adds digits instead of concatenating",
    },
    ErrorClass {
        name: "miss_msb",
        description: "drops the most significant bit",
    },
];

pub fn chessboard_expected() -> String {
    let mut out = String::new();
    for r in 0..8 {
        for c in 0..8 {
            out.push(if (r + c) % 2 == 0 { 'X' } else { 'O' });
        }
        out.push('\n');
    }
    out
}

/// Maximum nesting depth of `(`/`)`, ignoring other characters; -1 when
/// the parentheses are unbalanced.
pub fn paren_depth(s: &str) -> i64 {
    let (mut depth, mut best) = (0i64, 0i64);
    for c in s.chars() {
        match c {
            '(' => {
                depth += 1;
                best = best.max(depth);
            }
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return -1;
                }
            }
            _ => {}
        }
    }
    if depth == 0 {
        best
    } else {
        -1
    }
}

const PAREN_TESTS: [&str; 16] = [
    "", "()", "(())", "(()())", "((()))()", "(()", ")(", "())(", "(((", ")", "abc", "(a(b)c)", "x(y)z)",
    "[()]", "(()())((", "()(())",
];

const BINARY_TESTS: [i64; 10] = [0, 1, 2, 3, 5, 6, 8, 13, 255, 1024];

pub fn load_task(id: TaskId) -> Task {
    let sources: Vec<&'static str> = match id {
        TaskId::Chessboard => CHESSBOARD_SOURCES.to_vec(),
        TaskId::CountParentheses => PARENS_SOURCES.to_vec(),
        TaskId::BinaryDigits => BINARY_SOURCES.to_vec(),
    };
    let references = sources
        .iter()
        .map(|s| parse(s).expect("bundled reference parses"))
        .collect();
    let (tests, trace_inputs, classes) = match id {
        TaskId::Chessboard => (
            vec![TestCase {
                inputs: vec![],
                expected: chessboard_expected(),
            }],
            vec![vec![]],
            CHESSBOARD_CLASSES.to_vec(),
        ),
        TaskId::CountParentheses => (
            PAREN_TESTS
                .iter()
                .map(|s| TestCase {
                    inputs: vec![Value::Str(s.to_string())],
                    expected: format!("{}\n", paren_depth(s)),
                })
                .collect(),
            vec![vec![Value::Str("(()())((".into())], vec![Value::Str(String::new())]],
            PARENS_CLASSES.to_vec(),
        ),
        TaskId::BinaryDigits => (
            BINARY_TESTS
                .iter()
                .map(|n| TestCase {
                    inputs: vec![Value::Int(*n)],
                    expected: format!("{n:b}\n"),
                })
                .collect(),
            vec![vec![Value::Int(0)], vec![Value::Int(6)], vec![Value::Int(13)]],
            BINARY_CLASSES.to_vec(),
        ),
    };
    Task {
        id,
        sources,
        references,
        tests,
        trace_inputs,
        classes,
    }
}

//! Small example programs bundled with the library.

use crate::minilang::{parse, Program, Value};
use crate::synth::tasks::{self, TaskId};

/// Two sorting routines with identical statements and identical final
/// results whose traces on `[8, 5, 1, 4, 3]` diverge: the first repeatedly
/// sinks each new element through the sorted prefix, the second makes
/// shrinking passes over the whole array.
pub const BUBBLE: &str = include_str!("../programs/bubble.mini");
pub const INSERTION: &str = include_str!("../programs/insertion.mini");

/// Running maximum over a read-only array.
pub const MAX: &str = include_str!("../programs/max.mini");

pub fn load(source: &str) -> Program {
    parse(source).expect("bundled program parses")
}

/// Every bundled program: the sorting pair, max, and the task references.
pub fn all_sources() -> Vec<&'static str> {
    let mut out = vec![BUBBLE, INSERTION, MAX];
    out.extend(tasks::CHESSBOARD_SOURCES);
    out.extend(tasks::PARENS_SOURCES);
    out.extend(tasks::BINARY_SOURCES);
    out
}

/// Every bundled program with a few input vectors it runs on.
pub fn all_with_inputs() -> Vec<(&'static str, Vec<Vec<Value>>)> {
    let arrays: Vec<Vec<Value>> = [vec![8, 5, 1, 4, 3], vec![], vec![2, 2, -1], vec![9, 7, 5, 3, 1, 0]]
        .into_iter()
        .map(|xs| vec![Value::IntArray(xs)])
        .collect();
    let mut out = vec![
        (BUBBLE, arrays.clone()),
        (INSERTION, arrays.clone()),
        (MAX, arrays[..1].iter().chain(&arrays[2..]).cloned().collect()),
    ];
    for id in TaskId::ALL {
        let task = tasks::load_task(id);
        let inputs: Vec<Vec<Value>> = task.tests.iter().map(|t| t.inputs.clone()).collect();
        out.extend(task.sources.iter().map(|s| (*s, inputs.clone())));
    }
    out
}

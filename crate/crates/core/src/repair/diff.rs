//! Statement-level discrepancies between a program and a reference.

use std::collections::BTreeMap;
use std::mem::discriminant;

use crate::edit::{all_paths, header_of, BlockPath, Edit, StmtPath};
use crate::minilang::printer::{header, print_stmt};
use crate::minilang::{Program, Stmt};

/// Size of the multiset symmetric difference of the two programs'
/// statements, each statement keyed by its one-line text.
pub fn statement_diff(a: &Program, b: &Program) -> usize {
    let mut counts: BTreeMap<String, i64> = BTreeMap::new();
    for (_, s) in all_paths(a) {
        *counts.entry(header(s)).or_default() += 1;
    }
    for (_, s) in all_paths(b) {
        *counts.entry(header(s)).or_default() -= 1;
    }
    counts.values().map(|c| c.unsigned_abs() as usize).sum()
}

/// Edits turning `p` into `target`, one per discrepant statement. Applying
/// all of them yields `target` up to statement ids.
pub fn discrepancies(p: &Program, target: &Program) -> Vec<Edit> {
    let mut out = Vec::new();
    diff_block(&p.body, &target.body, &Vec::new(), &mut out);
    out
}

fn diff_block(a: &[Stmt], b: &[Stmt], path: &BlockPath, out: &mut Vec<Edit>) {
    let ta: Vec<String> = a.iter().map(print_stmt).collect();
    let tb: Vec<String> = b.iter().map(print_stmt).collect();
    let (n, m) = (a.len(), b.len());
    // lcs[i][j]: longest common subsequence of ta[i..] and tb[j..].
    let mut lcs = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i][j] = if ta[i] == tb[j] {
                lcs[i + 1][j + 1] + 1
            } else {
                lcs[i + 1][j].max(lcs[i][j + 1])
            };
        }
    }
    let mut inserts: BTreeMap<usize, usize> = BTreeMap::new();
    let (mut i, mut j) = (0, 0);
    let (mut gi, mut gj) = (0, 0);
    while i < n && j < m {
        if ta[i] == tb[j] && lcs[i][j] == lcs[i + 1][j + 1] + 1 {
            align_gap(a, b, (gi, i), (gj, j), path, &mut inserts, out);
            i += 1;
            j += 1;
            gi = i;
            gj = j;
        } else if lcs[i + 1][j] >= lcs[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    align_gap(a, b, (gi, n), (gj, m), path, &mut inserts, out);
}

/// Cost of pairing two statements into one modification, in units where a
/// deletion or an insertion costs 2. Statements of the same kind pair more
/// cheaply than a compound with a simple statement.
fn pair_cost(x: &Stmt, y: &Stmt) -> usize {
    if discriminant(&x.kind) == discriminant(&y.kind) {
        2
    } else {
        3
    }
}

/// Align the unmatched runs `a[ra]` and `b[rb]`: paired statements become
/// modifications, the rest are deleted or inserted.
fn align_gap(
    a: &[Stmt],
    b: &[Stmt],
    ra: (usize, usize),
    rb: (usize, usize),
    path: &BlockPath,
    inserts: &mut BTreeMap<usize, usize>,
    out: &mut Vec<Edit>,
) {
    let (n, m) = (ra.1 - ra.0, rb.1 - rb.0);
    if n == 0 && m == 0 {
        return;
    }
    // cost[i][j]: cheapest alignment of the suffixes.
    let mut cost = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            cost[i][j] = if i == n || j == m {
                2 * ((n - i) + (m - j))
            } else {
                let pair = pair_cost(&a[ra.0 + i], &b[rb.0 + j]) + cost[i + 1][j + 1];
                pair.min(2 + cost[i + 1][j].min(cost[i][j + 1]))
            };
        }
    }
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        let (x, y) = (ra.0 + i, rb.0 + j);
        if i < n && j < m && cost[i][j] == pair_cost(&a[x], &b[y]) + cost[i + 1][j + 1] {
            modify(&a[x], &b[y], StmtPath::new(path.clone(), x), out);
            i += 1;
            j += 1;
        } else if i < n && cost[i][j] == 2 + cost[i + 1][j] {
            out.push(Edit::Delete {
                path: StmtPath::new(path.clone(), x),
            });
            i += 1;
        } else {
            let order = inserts.entry(x).or_default();
            out.push(Edit::Insert {
                block: path.clone(),
                index: x,
                order: *order,
                stmt: b[y].clone(),
            });
            *order += 1;
            j += 1;
        }
    }
}

fn modify(x: &Stmt, y: &Stmt, sp: StmtPath, out: &mut Vec<Edit>) {
    if !x.is_compound() || discriminant(&x.kind) != discriminant(&y.kind) {
        out.push(Edit::Replace {
            path: sp,
            with: y.clone(),
            header_only: false,
        });
        return;
    }
    if header(x) != header(y) {
        out.push(Edit::Replace {
            path: sp.clone(),
            with: header_of(y),
            header_only: true,
        });
    }
    for ((sel, bx), (_, by)) in x.blocks().into_iter().zip(y.blocks()) {
        diff_block(bx, by, &sp.child(sel), out);
    }
}

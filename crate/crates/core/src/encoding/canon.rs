//! Dynamic time warping and DTW-based canonical variable naming.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::views::VariableTraceView;
use super::EncodingError;

pub const DEFAULT_TOP_VARIABLES: usize = 4;
pub const OTHER: &str = "VOTHER";

/// Traces per rank group considered when picking a medoid.
const MEDOID_SAMPLE: usize = 40;

/// DTW with unit substitution cost and steps (1,0), (0,1), (1,1).
pub fn dtw_distance<T: PartialEq>(a: &[T], b: &[T]) -> Result<usize, EncodingError> {
    if a.is_empty() || b.is_empty() {
        return Err(EncodingError::EmptySequence);
    }
    let inf = usize::MAX / 2;
    let mut prev = vec![inf; b.len() + 1];
    let mut cur = vec![inf; b.len() + 1];
    prev[0] = 0;
    for x in a {
        cur[0] = inf;
        for (j, y) in b.iter().enumerate() {
            let cost = usize::from(x != y);
            cur[j + 1] = cost + prev[j].min(prev[j + 1]).min(cur[j]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[b.len()])
}

pub fn canonical_name(rank: usize) -> String {
    format!("V{}", rank + 1)
}

/// Original variable → canonical name for one program.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalRenaming {
    pub map: BTreeMap<String, String>,
}

impl CanonicalRenaming {
    /// Canonical name of `var`; unknown variables are VOTHER.
    pub fn get(&self, var: &str) -> &str {
        self.map.get(var).map(String::as_str).unwrap_or(OTHER)
    }
}

/// Medoid sub-traces of the top-n write-count ranks of a training corpus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalModel {
    pub medoids: Vec<Vec<String>>,
}

/// Variables of a program, most written first (ties by name).
fn ranked(view: &VariableTraceView) -> Vec<(&str, &[String])> {
    let mut vars: Vec<(&str, &[String])> = view
        .vars
        .iter()
        .filter(|v| !v.tokens.is_empty())
        .map(|v| (v.name.as_str(), &v.tokens[..]))
        .collect();
    vars.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(b.0)));
    vars
}

fn medoid(group: &[&[String]]) -> Vec<String> {
    let step = group.len().div_ceil(MEDOID_SAMPLE).max(1);
    let sample: Vec<&[String]> = group.iter().step_by(step).copied().collect();
    let mut best = (usize::MAX, 0);
    for (i, a) in sample.iter().enumerate() {
        let total: usize = sample
            .iter()
            .map(|b| dtw_distance(a, b).expect("ranked traces are non-empty"))
            .sum();
        if total < best.0 {
            best = (total, i);
        }
    }
    sample[best.1].to_vec()
}

impl CanonicalModel {
    pub fn fit(corpus: &[&VariableTraceView], n: usize) -> Self {
        assert!(n >= 1, "need at least one canonical variable");
        let mut groups: Vec<Vec<&[String]>> = vec![Vec::new(); n];
        for view in corpus {
            for (r, (_, tokens)) in ranked(view).into_iter().take(n).enumerate() {
                groups[r].push(tokens);
            }
        }
        let medoids = groups
            .iter()
            .take_while(|g| !g.is_empty())
            .map(|g| medoid(g))
            .collect();
        CanonicalModel { medoids }
    }

    /// Greedily pair variables with medoids by ascending DTW distance;
    /// ties go to the more written variable, then the smaller name.
    pub fn assign(&self, view: &VariableTraceView) -> CanonicalRenaming {
        let vars = ranked(view);
        let mut pairs = Vec::new();
        for (vi, (_, tokens)) in vars.iter().enumerate() {
            for (r, m) in self.medoids.iter().enumerate() {
                let d = dtw_distance(tokens, m).expect("non-empty");
                pairs.push((d, vi, r));
            }
        }
        // `vars` is already ordered by (write count desc, name).
        pairs.sort();
        let mut used_var = vec![false; vars.len()];
        let mut used_rank = vec![false; self.medoids.len()];
        let mut map = BTreeMap::new();
        for (_, vi, r) in pairs {
            if used_var[vi] || used_rank[r] {
                continue;
            }
            used_var[vi] = true;
            used_rank[r] = true;
            map.insert(vars[vi].0.to_string(), canonical_name(r));
        }
        for v in &view.vars {
            map.entry(v.name.clone()).or_insert_with(|| OTHER.to_string());
        }
        CanonicalRenaming { map }
    }
}

/// Fit medoids on the whole corpus and rename every program with them.
pub fn canonicalize_variables(corpus: &[VariableTraceView], n: usize) -> Vec<CanonicalRenaming> {
    let refs: Vec<&VariableTraceView> = corpus.iter().collect();
    let model = CanonicalModel::fit(&refs, n);
    corpus.iter().map(|v| model.assign(v)).collect()
}

use super::PAD;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PaddedSequences {
    /// `[batch][max_len]`, PAD past each sequence's end.
    pub tokens: Vec<Vec<usize>>,
    pub mask: Vec<Vec<bool>>,
    pub max_len: usize,
}

pub fn pad_sequences(seqs: &[Vec<usize>]) -> PaddedSequences {
    let max_len = seqs.iter().map(Vec::len).max().unwrap_or(0);
    let mut tokens = Vec::with_capacity(seqs.len());
    let mut mask = Vec::with_capacity(seqs.len());
    for s in seqs {
        let mut t = s.clone();
        t.resize(max_len, PAD);
        tokens.push(t);
        mask.push((0..max_len).map(|i| i < s.len()).collect());
    }
    PaddedSequences { tokens, mask, max_len }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PaddedStates {
    /// `[batch][max_len][max_arity]`.
    pub tokens: Vec<Vec<Vec<usize>>>,
    pub time_mask: Vec<Vec<bool>>,
    pub arity_mask: Vec<Vec<bool>>,
    pub max_len: usize,
    pub max_arity: usize,
}

/// Pad both the number of states and the number of variables per state.
pub fn pad_states(traces: &[Vec<Vec<usize>>]) -> PaddedStates {
    let max_len = traces.iter().map(Vec::len).max().unwrap_or(0);
    let arity = |t: &Vec<Vec<usize>>| t.first().map_or(0, Vec::len);
    let max_arity = traces.iter().map(arity).max().unwrap_or(0);
    let mut out = PaddedStates {
        tokens: Vec::new(),
        time_mask: Vec::new(),
        arity_mask: Vec::new(),
        max_len,
        max_arity,
    };
    for t in traces {
        let mut rows: Vec<Vec<usize>> = t
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.resize(max_arity, PAD);
                s
            })
            .collect();
        rows.resize(max_len, vec![PAD; max_arity]);
        out.tokens.push(rows);
        out.time_mask.push((0..max_len).map(|i| i < t.len()).collect());
        out.arity_mask.push((0..max_arity).map(|i| i < arity(t)).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequences() {
        let p = pad_sequences(&[vec![5, 6, 7], vec![1, 2, 3, 4, 5]]);
        assert_eq!(p.tokens[0], [5, 6, 7, PAD, PAD]);
        assert_eq!(p.mask[0], [true, true, true, false, false]);
        assert_eq!(p.mask[1], [true; 5]);
    }

    #[test]
    fn states() {
        let p = pad_states(&[vec![vec![3, 4]], vec![vec![5, 6, 7], vec![5, 8, 7]]]);
        assert_eq!(p.max_arity, 3);
        assert_eq!(p.tokens[0], [vec![3, 4, PAD], vec![PAD, PAD, PAD]]);
        assert_eq!(p.arity_mask[0], [true, true, false]);
        assert_eq!(p.time_mask[0], [true, false]);
    }
}

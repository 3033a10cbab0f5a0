use std::collections::HashMap;

use crate::events::PlateAppearance;

/// Plate appearances per recency block.
pub const BLOCK_SIZE: usize = 500;
pub const DEFAULT_CHAINS: usize = 4;

/// Record subsets for one player: `chains[c]` lists indices into the
/// player's history. With `k` chains, block `j` (1-based, most recent first)
/// appears in `k + 1 - j` chains and blocks beyond `k` in none.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecencyChains {
    pub chains: Vec<Vec<usize>>,
}

impl RecencyChains {
    pub fn sizes(&self) -> Vec<usize> {
        self.chains.iter().map(Vec::len).collect()
    }
}

/// 0-based recency block of each entry: entries are ranked newest first by
/// date, later positions winning ties.
fn blocks_by_date(dates: &[chrono::NaiveDate]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dates.len()).collect();
    order.sort_by(|&a, &b| dates[b].cmp(&dates[a]).then(b.cmp(&a)));
    let mut block = vec![0; dates.len()];
    for (rank, &i) in order.iter().enumerate() {
        block[i] = rank / BLOCK_SIZE;
    }
    block
}

/// Splits one player's history into `chains` recency chains.
pub fn build_recency_chains(history: &[&PlateAppearance], chains: usize) -> RecencyChains {
    let dates: Vec<_> = history.iter().map(|r| r.date).collect();
    let blocks = blocks_by_date(&dates);
    let mut out = vec![Vec::new(); chains];
    for (i, &b) in blocks.iter().enumerate() {
        for (c, chain) in out.iter_mut().enumerate() {
            if b + c < chains {
                chain.push(i);
            }
        }
    }
    RecencyChains { chains: out }
}

/// Dataset-level chains. A record enters chain `c` only if it is recent
/// enough for chain `c` in both its pitcher's and its batter's history.
pub fn chain_subsets(records: &[PlateAppearance], chains: usize) -> Vec<Vec<usize>> {
    let mut block = vec![0usize; records.len()];
    for role in [0, 1] {
        let mut by_player: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            let id = if role == 0 { &r.pitcher_id } else { &r.batter_id };
            by_player.entry(id.as_str()).or_default().push(i);
        }
        for idx in by_player.values() {
            let dates: Vec<_> = idx.iter().map(|&i| records[i].date).collect();
            for (k, b) in blocks_by_date(&dates).into_iter().enumerate() {
                block[idx[k]] = block[idx[k]].max(b);
            }
        }
    }
    (0..chains)
        .map(|c| (0..records.len()).filter(|&i| block[i] + c < chains).collect())
        .collect()
}

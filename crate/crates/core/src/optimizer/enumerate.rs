use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{arrival_order, feasible, Problem, Score, SolveOptions};

/// Scores every subset of the feasible candidates.
pub(super) fn search(problem: &Problem, options: &SolveOptions) -> (Score, u64, bool, f64) {
    let allowed = feasible(problem);
    let pool: Vec<usize> = (0..problem.candidates.len())
        .filter(|&k| allowed[k])
        .collect();
    assert!(pool.len() < 64, "enumeration is limited to 63 candidates");
    // rank of each pooled candidate in arrival order, for the nearest-first rule
    let order = arrival_order(problem, &allowed);
    let rank: Vec<usize> = pool
        .iter()
        .map(|k| order.iter().position(|o| o == k).unwrap())
        .collect();

    let mut best: Option<Score> = None;
    let mut nodes = 0u64;
    for mask in 0u64..(1u64 << pool.len()) {
        if options.nearest_first {
            let count = mask.count_ones() as usize;
            let prefix = (0..pool.len())
                .filter(|&b| mask >> b & 1 == 1)
                .all(|b| rank[b] < count);
            if !prefix {
                continue;
            }
        }
        nodes += 1;
        let selected: Vec<usize> = (0..pool.len())
            .filter(|&b| mask >> b & 1 == 1)
            .map(|b| pool[b])
            .collect();
        let score = Score::new(problem, &selected);
        if best
            .as_ref()
            .is_none_or(|b| score.cmp(b, options.coverage) == Ordering::Less)
        {
            best = Some(score);
        }
    }
    let best = best.expect("the empty selection is always scored");
    let bound = best.objective;
    (best, nodes, true, bound)
}

use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Endless shuffled stream over `0..n`.
///
/// Draws follow a seeded permutation; when it runs out a fresh permutation is
/// drawn from the same generator. Items skipped by an exclusion are served
/// first on the next draw, so nothing is starved.
#[derive(Debug, Clone)]
pub struct TrainStream {
    n: usize,
    order: VecDeque<usize>,
    deferred: VecDeque<usize>,
    rng: ChaCha8Rng,
    permutations: u32,
}

impl TrainStream {
    pub fn new(n: usize, seed: u64) -> Self {
        let mut s = TrainStream {
            n,
            order: VecDeque::new(),
            deferred: VecDeque::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            permutations: 0,
        };
        s.refill();
        s
    }

    fn refill(&mut self) {
        let mut p: Vec<usize> = (0..self.n).collect();
        p.shuffle(&mut self.rng);
        self.order.extend(p);
        self.permutations += 1;
    }

    /// Number of permutations drawn so far, including the initial one.
    pub fn permutations(&self) -> u32 {
        self.permutations
    }

    /// `k` distinct indices, avoiding `exclude` when enough others exist.
    pub fn next_batch(&mut self, k: usize, exclude: &HashSet<usize>) -> Vec<usize> {
        assert!(k <= self.n, "batch of {k} from a stream of {}", self.n);
        let excluded_live = exclude.iter().filter(|&&i| i < self.n).count();
        let honour_exclusion = self.n - excluded_live >= k;
        if !honour_exclusion && !exclude.is_empty() {
            log::warn!("stream too small to keep batches disjoint; allowing overlap");
        }
        let mut out = Vec::with_capacity(k);
        let mut taken = HashSet::with_capacity(k);
        let mut skipped = Vec::new();
        while out.len() < k {
            let next = match self.deferred.pop_front().or_else(|| self.order.pop_front()) {
                Some(i) => i,
                None => {
                    self.refill();
                    continue;
                }
            };
            if taken.contains(&next) || (honour_exclusion && exclude.contains(&next)) {
                skipped.push(next);
            } else {
                taken.insert(next);
                out.push(next);
            }
        }
        for i in skipped.into_iter().rev() {
            self.deferred.push_front(i);
        }
        out
    }

    /// `k` items of `from` drawn uniformly without replacement.
    pub fn sample<T: Clone>(&mut self, from: &[T], k: usize) -> Vec<T> {
        rand::seq::index::sample(&mut self.rng, from.len(), k.min(from.len()))
            .into_iter()
            .map(|i| from[i].clone())
            .collect()
    }
}

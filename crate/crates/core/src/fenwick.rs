//! Fenwick tree over non-negative real leaf weights with prefix-sum descent
//! for proportional sampling.

#[derive(Debug, Clone)]
pub struct WeightTree {
    /// 1-based Fenwick array; `tree[0]` is unused.
    tree: Vec<f64>,
    /// Exact leaf values, kept alongside so updates and fallbacks never rely
    /// on differences of partial sums.
    leaves: Vec<f64>,
    top_bit: usize,
}

impl WeightTree {
    pub fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        let top_bit = if n == 0 {
            0
        } else {
            1 << (usize::BITS - 1 - n.leading_zeros())
        };
        let mut t = Self {
            tree: vec![0.0; n + 1],
            leaves: weights.to_vec(),
            top_bit,
        };
        t.rebuild();
        t
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn leaf(&self, i: usize) -> f64 {
        self.leaves[i]
    }

    /// Recomputes every internal node from the leaves in O(n).
    pub fn rebuild(&mut self) {
        let n = self.leaves.len();
        self.tree[1..].copy_from_slice(&self.leaves);
        for i in 1..=n {
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                self.tree[parent] += self.tree[i];
            }
        }
    }

    pub fn set(&mut self, i: usize, weight: f64) {
        let delta = weight - self.leaves[i];
        self.leaves[i] = weight;
        let mut j = i + 1;
        while j < self.tree.len() {
            self.tree[j] += delta;
            j += j & j.wrapping_neg();
        }
    }

    /// Sum of the first `i` leaves.
    pub fn prefix(&self, i: usize) -> f64 {
        let mut j = i;
        let mut acc = 0.0;
        while j > 0 {
            acc += self.tree[j];
            j &= j - 1;
        }
        acc
    }

    pub fn total(&self) -> f64 {
        self.prefix(self.leaves.len())
    }

    /// Index of the first leaf whose running sum exceeds `u`.
    ///
    /// Zero-weight leaves are never returned unless every leaf is zero. Ties
    /// resolve toward the lower index. If rounding pushes `u` past the total,
    /// the last positive leaf is returned.
    pub fn find(&self, u: f64) -> usize {
        let n = self.leaves.len();
        let mut pos = 0;
        let mut rem = u;
        let mut step = self.top_bit;
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        if pos < n && self.leaves[pos] > 0.0 {
            return pos;
        }
        // Drifted partial sums landed on an empty leaf or past the end.
        (pos.min(n)..n)
            .find(|&i| self.leaves[i] > 0.0)
            .or_else(|| (0..pos.min(n)).rev().find(|&i| self.leaves[i] > 0.0))
            .unwrap_or(0)
    }
}

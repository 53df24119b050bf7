//! Ordered k-ary trees indexing the terms of the Picard power series.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{GibqError, Result};

/// Largest tree family `enumerate_trees` will materialize.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KTree {
    Terminal,
    /// Exactly `k` ordered children.
    Node(Vec<KTree>),
}

impl KTree {
    /// Number of non-terminal nodes.
    pub fn generation(&self) -> usize {
        match self {
            KTree::Terminal => 0,
            KTree::Node(children) => 1 + children.iter().map(KTree::generation).sum::<usize>(),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            KTree::Terminal => 1,
            KTree::Node(children) => 1 + children.iter().map(KTree::node_count).sum::<usize>(),
        }
    }

    pub fn terminal_count(&self) -> usize {
        match self {
            KTree::Terminal => 1,
            KTree::Node(children) => children.iter().map(KTree::terminal_count).sum(),
        }
    }

    /// Whether every internal node has exactly `k` children.
    pub fn is_k_ary(&self, k: usize) -> bool {
        match self {
            KTree::Terminal => true,
            KTree::Node(children) => children.len() == k && children.iter().all(|c| c.is_k_ary(k)),
        }
    }

    /// Generations of the root's children; `None` for a terminal tree.
    pub fn root_composition(&self) -> Option<Vec<usize>> {
        match self {
            KTree::Terminal => None,
            KTree::Node(children) => Some(children.iter().map(KTree::generation).collect()),
        }
    }
}

/// `|T(j)|` for `j = 0..=max_gen`.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeCountTable {
    pub arity: usize,
    pub counts: Vec<BigUint>,
}

impl TreeCountTable {
    pub fn count(&self, j: usize) -> &BigUint {
        &self.counts[j]
    }

    pub fn to_csv(&self, bound: Option<&CountBound>) -> String {
        let mut out = String::from("j,count,count_times_1_plus_j_sq,c0_pow_j,holds\n");
        for (j, c) in self.counts.iter().enumerate() {
            let weighted = c * BigUint::from((1 + j) * (1 + j));
            match bound {
                Some(b) => out.push_str(&format!(
                    "{j},{c},{weighted},{:.6e},{}\n",
                    b.c0.powi(j as i32),
                    b.holds[j]
                )),
                None => out.push_str(&format!("{j},{c},{weighted},,\n")),
            }
        }
        out
    }
}

/// All compositions `j_1 + ... + j_k = total` with `j_i >= 0`, in
/// lexicographic order.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn go(total: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=total {
            prefix.push(first);
            go(total - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    go(total, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

fn check_arity(k: usize) -> Result<()> {
    if k < 2 {
        Err(GibqError::Domain(format!("tree arity must be >= 2, got {k}")))
    } else {
        Ok(())
    }
}

/// Tree counts from the root-composition recursion
/// `|T(j)| = sum_{j_1+...+j_k = j-1} |T(j_1)| ... |T(j_k)|`.
pub fn count_trees(k: usize, max_gen: usize) -> Result<TreeCountTable> {
    check_arity(k)?;
    let mut counts: Vec<BigUint> = vec![BigUint::one()];
    for j in 1..=max_gen {
        // k-fold convolution power of the table prefix, evaluated at j-1
        // by iterated convolution of sequences truncated at j-1.
        let prefix = &counts[..j];
        let mut acc: Vec<BigUint> = prefix.to_vec();
        for _ in 1..k {
            let mut next = vec![BigUint::zero(); j];
            for (a, ca) in acc.iter().enumerate() {
                if ca.is_zero() {
                    continue;
                }
                for (b, cb) in prefix.iter().enumerate() {
                    if a + b >= j {
                        break;
                    }
                    next[a + b] += ca * cb;
                }
            }
            acc = next;
        }
        counts.push(acc[j - 1].clone());
    }
    Ok(TreeCountTable { arity: k, counts })
}

/// All ordered k-ary trees with `j` internal nodes, in canonical sorted order.
pub fn enumerate_trees(k: usize, j: usize) -> Result<Vec<KTree>> {
    check_arity(k)?;
    let table = count_trees(k, j)?;
    let total = &table.counts[j];
    if total > &BigUint::from(ENUMERATION_LIMIT) {
        return Err(GibqError::Capacity {
            what: "tree enumeration",
            requested: total.to_string(),
            limit: ENUMERATION_LIMIT.to_string(),
        });
    }
    let mut memo: Vec<Vec<KTree>> = vec![vec![KTree::Terminal]];
    for g in 1..=j {
        let mut trees = Vec::new();
        for comp in compositions(g - 1, k) {
            let mut partial: Vec<Vec<KTree>> = vec![Vec::new()];
            for &part in &comp {
                let mut grown = Vec::with_capacity(partial.len() * memo[part].len());
                for p in &partial {
                    for t in &memo[part] {
                        let mut q = p.clone();
                        q.push(t.clone());
                        grown.push(q);
                    }
                }
                partial = grown;
            }
            trees.extend(partial.into_iter().map(KTree::Node));
        }
        trees.sort();
        memo.push(trees);
    }
    Ok(memo.swap_remove(j))
}

/// Fuss-Catalan number `binom(kj, j) / ((k-1) j + 1)`.
pub fn fuss_catalan(k: usize, j: usize) -> BigUint {
    let mut binom = BigUint::one();
    for i in 0..j {
        binom = binom * BigUint::from(k * j - i) / BigUint::from(i + 1);
    }
    binom / BigUint::from((k - 1) * j + 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountBound {
    /// Smallest `C0` with `|T(j)| (1 + j)^2 <= C0^j` for `1 <= j <= J`.
    pub c0: f64,
    /// Per-generation verdicts for that `C0`, indexed from `j = 0`.
    pub holds: Vec<bool>,
}

pub fn verify_count_bound(k: usize, max_gen: usize) -> Result<CountBound> {
    let table = count_trees(k, max_gen)?;
    let weighted: Vec<f64> = table
        .counts
        .iter()
        .enumerate()
        .map(|(j, c)| (c * BigUint::from((1 + j) * (1 + j))).to_f64().unwrap_or(f64::INFINITY))
        .collect();
    let mut c0: f64 = 1.0;
    for (j, w) in weighted.iter().enumerate().skip(1) {
        c0 = c0.max(w.powf(1.0 / j as f64));
    }
    // rounding in the j-th root may leave the bound a few ulps short
    let holds = weighted
        .iter()
        .enumerate()
        .map(|(j, w)| *w <= c0.powi(j as i32) * (1.0 + 1e-12))
        .collect();
    Ok(CountBound { c0, holds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(table: &TreeCountTable) -> Vec<u64> {
        table.counts.iter().map(|c| c.to_u64().unwrap()).collect()
    }

    #[test]
    fn binary_counts_are_catalan() {
        assert_eq!(small(&count_trees(2, 5).unwrap()), vec![1, 1, 2, 5, 14, 42]);
    }

    #[test]
    fn first_two_generations_are_singletons() {
        for k in 2..7 {
            assert_eq!(small(&count_trees(k, 1).unwrap()), vec![1, 1]);
        }
        assert_eq!(count_trees(3, 2).unwrap().counts[2], BigUint::from(3u32));
    }

    #[test]
    fn counts_match_fuss_catalan_closed_form() {
        for k in 2..=5 {
            let t = count_trees(k, 8).unwrap();
            for j in 0..=8 {
                assert_eq!(t.counts[j], fuss_catalan(k, j), "k={k} j={j}");
            }
        }
    }

    #[test]
    fn big_counts_do_not_overflow() {
        let t = count_trees(3, 40).unwrap();
        assert!(t.counts[40].bits() > 64);
        assert_eq!(t.counts[40], fuss_catalan(3, 40));
    }

    #[test]
    fn enumeration_small_cases() {
        assert_eq!(enumerate_trees(2, 0).unwrap(), vec![KTree::Terminal]);
        let two = enumerate_trees(2, 2).unwrap();
        assert_eq!(two.len(), 2);
        let inner = KTree::Node(vec![KTree::Terminal, KTree::Terminal]);
        assert!(two.contains(&KTree::Node(vec![inner.clone(), KTree::Terminal])));
        assert!(two.contains(&KTree::Node(vec![KTree::Terminal, inner])));
        let one = enumerate_trees(3, 1).unwrap();
        assert_eq!(one, vec![KTree::Node(vec![KTree::Terminal; 3])]);
    }

    #[test]
    fn enumerated_trees_satisfy_node_identities() {
        for (k, jmax) in [(2, 6), (3, 4), (4, 3)] {
            let table = count_trees(k, jmax).unwrap();
            for j in 0..=jmax {
                let trees = enumerate_trees(k, j).unwrap();
                assert_eq!(BigUint::from(trees.len()), table.counts[j]);
                let mut sorted = trees.clone();
                sorted.dedup();
                assert_eq!(sorted.len(), trees.len());
                for t in &trees {
                    assert!(t.is_k_ary(k));
                    assert_eq!(t.generation(), j);
                    assert_eq!(t.node_count(), k * j + 1);
                    assert_eq!(t.terminal_count(), (k - 1) * j + 1);
                }
            }
        }
    }

    #[test]
    fn regrouping_by_root_composition_reproduces_recursion() {
        let k = 3;
        let j = 4;
        let table = count_trees(k, j).unwrap();
        let trees = enumerate_trees(k, j).unwrap();
        for comp in compositions(j - 1, k) {
            let n = trees
                .iter()
                .filter(|t| t.root_composition().as_deref() == Some(&comp[..]))
                .count();
            let expect: BigUint = comp.iter().map(|&g| table.counts[g].clone()).product();
            assert_eq!(BigUint::from(n), expect, "composition {comp:?}");
        }
    }

    #[test]
    fn enumeration_guard() {
        assert!(matches!(enumerate_trees(2, 20), Err(GibqError::Capacity { .. })));
    }

    #[test]
    fn count_bound_holds_with_measured_constant() {
        let b = verify_count_bound(2, 10).unwrap();
        assert!(b.holds.iter().all(|&h| h));
        // j = 1 reads 1 * 4 <= C0
        assert!(b.c0 >= 4.0);
        assert!(b.holds[0]);
        let b3 = verify_count_bound(3, 0).unwrap();
        assert_eq!(b3.holds, vec![true]);
    }
}

//! Block compositions of `n` and the (intactness, depth) class table.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Ordered block sizes summing to `n`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Composition {
    blocks: Vec<usize>,
}

impl Composition {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() || blocks.contains(&0) {
            return Err(Error::Parameter(format!(
                "composition blocks must be positive and non-empty, got {blocks:?}"
            )));
        }
        Ok(Self { blocks })
    }

    pub fn n(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    /// Number of blocks.
    pub fn intactness(&self) -> usize {
        self.blocks.len()
    }

    /// Largest block.
    pub fn depth(&self) -> usize {
        self.blocks.iter().copied().max().unwrap_or(0)
    }
}

/// All `2^(n-1)` compositions of `n`, sorted lexicographically.
///
/// Bit `i` of the mask puts a cut after position `i + 1`.
pub fn enumerate_compositions(n: usize) -> Result<Vec<Composition>> {
    if n == 0 {
        return Err(Error::Domain("compositions need n >= 1".into()));
    }
    if n > 32 {
        return Err(Error::Domain(format!("n = {n} is too large to enumerate")));
    }
    let gaps = n - 1;
    let mut out: Vec<Composition> = (0u64..1u64 << gaps)
        .map(|mask| {
            let mut blocks = Vec::with_capacity(mask.count_ones() as usize + 1);
            let mut run = 1;
            for gap in 0..gaps {
                if mask >> gap & 1 == 1 {
                    blocks.push(run);
                    run = 1;
                } else {
                    run += 1;
                }
            }
            blocks.push(run);
            Composition { blocks }
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Feasible `(m, d)` pairs for `n` in ascending lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTable {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl ClassTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, index: usize) -> Option<(usize, usize)> {
        self.pairs.get(index).copied()
    }

    pub fn index_of(&self, intactness: usize, depth: usize) -> Option<usize> {
        self.pairs.binary_search(&(intactness, depth)).ok()
    }

    /// SHA-256 over the canonical `m:d;` listing, hex encoded.
    pub fn digest(&self) -> String {
        let mut text = format!("n={};", self.n);
        for (m, d) in &self.pairs {
            text.push_str(&format!("{m}:{d};"));
        }
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// All pairs with `ceil(n/m) <= d <= n - m + 1`.
pub fn class_table(n: usize) -> Result<ClassTable> {
    if n == 0 {
        return Err(Error::Domain("class table needs n >= 1".into()));
    }
    let pairs = (1..=n)
        .flat_map(|m| (n.div_ceil(m)..=n - m + 1).map(move |d| (m, d)))
        .collect();
    Ok(ClassTable { n, pairs })
}

/// The closed-form label count `(n² + 3n)/2 - 1 - Σ ceil(n/i)`.
///
/// Kept for reference only: it is one below [`class_table`]'s length for
/// every `n >= 2` checked, and the enumerated table is what labels use.
pub fn closed_form_class_count(n: usize) -> i64 {
    let n = n as i64;
    let ceil_sum: i64 = (1..=n).map(|i| (n + i - 1) / i).sum();
    (n * n + 3 * n) / 2 - 1 - ceil_sum
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StructureLabel {
    pub intactness: usize,
    pub depth: usize,
    pub class_index: usize,
}

pub fn label_of(c: &Composition) -> StructureLabel {
    // class_table(n) contains every composition's pair, so both unwraps hold.
    let table = class_table(c.n()).expect("composition has n >= 1");
    label_in(&table, c).expect("composition pair is feasible")
}

/// Like [`label_of`] but reusing an existing table.
pub fn label_in(table: &ClassTable, c: &Composition) -> Result<StructureLabel> {
    if table.n() != c.n() {
        return Err(Error::Parameter(format!(
            "class table is for n = {}, composition sums to {}",
            table.n(),
            c.n()
        )));
    }
    let (m, d) = (c.intactness(), c.depth());
    let class_index = table
        .index_of(m, d)
        .ok_or_else(|| Error::Domain(format!("({m}, {d}) not in class table")))?;
    Ok(StructureLabel {
        intactness: m,
        depth: d,
        class_index,
    })
}

/// Distinct pairs realised by compositions of `n`.
pub fn realised_pairs(n: usize) -> Result<BTreeSet<(usize, usize)>> {
    Ok(enumerate_compositions(n)?
        .iter()
        .map(|c| (c.intactness(), c.depth()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comp(b: &[usize]) -> Composition {
        Composition::new(b.to_vec()).unwrap()
    }

    /// The set-builder recursion: `P(n) = {[n]} ∪ {cat(a, b) : a ∈ P(i), b ∈ P(n-i)}`.
    fn recursive_compositions(
        n: usize,
        memo: &mut Vec<Option<BTreeSet<Vec<usize>>>>,
    ) -> BTreeSet<Vec<usize>> {
        if let Some(Some(s)) = memo.get(n) {
            return s.clone();
        }
        let mut set = BTreeSet::new();
        set.insert(vec![n]);
        for i in 1..n {
            let left = recursive_compositions(i, memo);
            let right = recursive_compositions(n - i, memo);
            for a in &left {
                for b in &right {
                    let mut cat = a.clone();
                    cat.extend(b);
                    set.insert(cat);
                }
            }
        }
        if memo.len() <= n {
            memo.resize(n + 1, None);
        }
        memo[n] = Some(set.clone());
        set
    }

    /// (block count, largest block) over every set partition of `n` labelled
    /// elements, via restricted growth strings.
    fn set_partition_pairs(n: usize) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        let mut rgs = vec![0usize; n];
        loop {
            let blocks = rgs.iter().max().unwrap() + 1;
            let mut sizes = vec![0usize; blocks];
            for &b in &rgs {
                sizes[b] += 1;
            }
            out.insert((blocks, *sizes.iter().max().unwrap()));
            // next restricted growth string
            let mut i = n - 1;
            loop {
                if i == 0 {
                    return out;
                }
                let prefix_max = rgs[..i].iter().copied().max().unwrap();
                if rgs[i] <= prefix_max {
                    rgs[i] += 1;
                    for r in rgs.iter_mut().skip(i + 1) {
                        *r = 0;
                    }
                    break;
                }
                i -= 1;
            }
        }
    }

    #[test]
    fn small_enumerations() {
        assert_eq!(enumerate_compositions(1).unwrap(), vec![comp(&[1])]);
        assert_eq!(
            enumerate_compositions(3).unwrap(),
            vec![comp(&[1, 1, 1]), comp(&[1, 2]), comp(&[2, 1]), comp(&[3])]
        );
        assert_eq!(enumerate_compositions(12).unwrap().len(), 2048);
        assert!(matches!(enumerate_compositions(0), Err(Error::Domain(_))));
    }

    #[test]
    fn enumeration_matches_recursion() {
        let mut memo = Vec::new();
        for n in 1..=10 {
            let fast: BTreeSet<Vec<usize>> = enumerate_compositions(n)
                .unwrap()
                .into_iter()
                .map(|c| c.blocks)
                .collect();
            assert_eq!(fast, recursive_compositions(n, &mut memo), "n={n}");
        }
    }

    #[test]
    fn counts_are_powers_of_two() {
        for n in 1..=16 {
            assert_eq!(enumerate_compositions(n).unwrap().len(), 1 << (n - 1));
        }
    }

    #[test]
    fn labels_for_four() {
        let table = class_table(4).unwrap();
        assert_eq!(table.pairs(), &[(1, 4), (2, 2), (2, 3), (3, 2), (4, 1)]);
        let l = label_of(&comp(&[4]));
        assert_eq!((l.intactness, l.depth, l.class_index), (1, 4, 0));
        let l = label_of(&comp(&[2, 2]));
        assert_eq!((l.intactness, l.depth, l.class_index), (2, 2, 1));
        let l = label_of(&comp(&[1, 1, 1, 1]));
        assert_eq!((l.intactness, l.depth, l.class_index), (4, 1, 4));
    }

    #[test]
    fn table_matches_set_partition_brute_force() {
        for n in 1..=9 {
            let table: BTreeSet<_> = class_table(n).unwrap().pairs().iter().copied().collect();
            assert_eq!(table, set_partition_pairs(n), "n={n}");
            assert_eq!(table, realised_pairs(n).unwrap(), "n={n}");
        }
        assert_eq!(class_table(4).unwrap().len(), 5);
        assert_eq!(class_table(5).unwrap().len(), 7);
    }

    #[test]
    fn closed_form_count_is_one_short() {
        assert_eq!(closed_form_class_count(4), 4);
        for n in 4..=12 {
            assert_eq!(
                closed_form_class_count(n) + 1,
                class_table(n).unwrap().len() as i64,
                "n={n}"
            );
        }
    }

    #[test]
    fn class_index_is_a_bijection() {
        for n in 1..=12 {
            let t = class_table(n).unwrap();
            for (i, &(m, d)) in t.pairs().iter().enumerate() {
                assert_eq!(t.index_of(m, d), Some(i));
                assert!(m * d >= n && d <= n - m + 1);
            }
        }
    }

    #[test]
    fn digest_distinguishes_tables() {
        assert_ne!(class_table(4).unwrap().digest(), class_table(5).unwrap().digest());
        assert_eq!(class_table(6).unwrap().digest(), class_table(6).unwrap().digest());
    }
}

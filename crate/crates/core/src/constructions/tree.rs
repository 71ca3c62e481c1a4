use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::rule::{Block, Rule};
use crate::set::{RealSet, Universe, Word};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeShape {
    /// Words not containing the pattern as a contiguous subword.
    AvoidSubstring(Word),
    /// All prefixes of a finite antichain of words.
    FiniteAntichain(Vec<Word>),
    /// An explicit downward-closed word set.
    Explicit(HashSet<Word>),
}

/// A downward-closed set of binary words, searched up to `max_depth`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeOracle {
    shape: TreeShape,
    max_depth: usize,
}

impl TreeOracle {
    pub fn avoid_substring(pattern: Word, max_depth: usize) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::InvalidTree("empty pattern".into()));
        }
        Ok(TreeOracle {
            shape: TreeShape::AvoidSubstring(pattern),
            max_depth,
        })
    }

    pub fn finite_antichain(words: Vec<Word>, max_depth: usize) -> Result<Self> {
        for (i, u) in words.iter().enumerate() {
            for (j, v) in words.iter().enumerate() {
                if i != j && v.bits().starts_with(u.bits()) {
                    return Err(Error::InvalidTree(format!("{u} is a prefix of {v}")));
                }
            }
        }
        Ok(TreeOracle {
            shape: TreeShape::FiniteAntichain(words),
            max_depth,
        })
    }

    pub fn explicit(words: impl IntoIterator<Item = Word>, max_depth: usize) -> Result<Self> {
        let set: HashSet<Word> = words.into_iter().collect();
        for w in &set {
            if !w.is_empty() && !set.contains(&Word(w.bits()[..w.len() - 1].to_vec())) {
                return Err(Error::NotDownwardClosed { word: w.to_string() });
            }
        }
        Ok(TreeOracle {
            shape: TreeShape::Explicit(set),
            max_depth,
        })
    }

    /// Parses a builtin family: `avoid-substring:<word>` or
    /// `finite-antichain:<word>,<word>,...`.
    pub fn parse(spec: &str, max_depth: usize) -> Result<Self> {
        let (kind, arg) = spec
            .split_once(':')
            .ok_or_else(|| Error::InvalidTree(format!("{spec:?}: expected <family>:<argument>")))?;
        match kind {
            "avoid-substring" => Self::avoid_substring(arg.parse()?, max_depth),
            "finite-antichain" => {
                let words = arg
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect::<Result<Vec<Word>>>()?;
                Self::finite_antichain(words, max_depth)
            }
            other => Err(Error::InvalidTree(format!("unknown tree family {other:?}"))),
        }
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn shape(&self) -> &TreeShape {
        &self.shape
    }

    pub fn contains(&self, w: &Word) -> bool {
        match &self.shape {
            TreeShape::AvoidSubstring(p) => !w.contains_subword(p),
            TreeShape::FiniteAntichain(words) => words.iter().any(|a| a.bits().starts_with(w.bits())),
            TreeShape::Explicit(set) => set.contains(w),
        }
    }

    fn next_level(&self, level: &[Word]) -> Vec<Word> {
        level
            .iter()
            .flat_map(|w| [false, true].map(|b| w.concat(&Word(vec![b]))))
            .filter(|w| self.contains(w))
            .collect()
    }
}

/// The rule read off a tree, with the cut points `n_0 < n_1 < ...` and the
/// escaping words `η_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeRule {
    pub rule: Rule,
    pub cuts: Vec<usize>,
    pub witnesses: Vec<Word>,
}

impl TreeRule {
    /// Checks that whenever `x` matches block `i`, `χ_X ↾ n_{i+1}` has left the tree.
    pub fn audit(&self, tree: &TreeOracle, x: &RealSet) -> Vec<String> {
        let mut breaches = Vec::new();
        for (i, block) in self.rule.blocks().iter().enumerate() {
            if !block.matched_by(x) {
                continue;
            }
            match x.prefix(self.cuts[i + 1]) {
                Ok(w) if tree.contains(&w) => breaches.push(format!(
                    "block {i} matched but χ_X↾{} = {w} is in the tree",
                    self.cuts[i + 1]
                )),
                Ok(_) => {}
                Err(e) => breaches.push(e.to_string()),
            }
        }
        breaches
    }
}

/// Finds successive words `η_i` on `[n_i, n_{i+1})` such that every word of
/// length `n_i` followed by `η_i` lies outside the tree. Candidates are tried
/// by increasing length, lexicographically within a length; the search stops
/// when no candidate fits below `max_depth`.
pub fn tree_to_rule(tree: &TreeOracle, universe: Universe) -> Result<TreeRule> {
    let depth = tree.max_depth;
    if depth > universe.size() {
        return Err(Error::OutOfUniverse {
            point: depth - 1,
            size: universe.size(),
        });
    }
    // Words of the current length inside the tree; any word outside already
    // escapes with every extension.
    let root = Word::default();
    let mut level = if tree.contains(&root) { vec![root] } else { vec![] };
    let mut cut = 0usize;
    let mut cuts = vec![0];
    let mut witnesses = Vec::new();
    let mut blocks = Vec::new();

    'outer: while cut < depth {
        for len in 1..=depth - cut {
            let found = Word::all(len).find(|eta| level.iter().all(|nu| !tree.contains(&nu.concat(eta))));
            if let Some(eta) = found {
                let selected = eta.bits().iter().enumerate().filter(|(_, &b)| b).map(|(t, _)| cut + t);
                blocks.push(Block::new(selected, cut..cut + len)?);
                for _ in 0..len {
                    level = tree.next_level(&level);
                }
                cut += len;
                cuts.push(cut);
                witnesses.push(eta);
                continue 'outer;
            }
        }
        break;
    }
    if blocks.is_empty() {
        return Err(Error::NoTreeWitness { depth });
    }
    Ok(TreeRule {
        rule: Rule::new(universe, blocks)?,
        cuts,
        witnesses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn avoid_eleven_gives_pairs_of_ones() {
        let tree = TreeOracle::parse("avoid-substring:11", 10).unwrap();
        let out = tree_to_rule(&tree, Universe::new(10).unwrap()).unwrap();
        assert_eq!(out.rule.len(), 5);
        for (i, block) in out.rule.blocks().iter().enumerate() {
            assert_eq!(block.support(), &[2 * i, 2 * i + 1]);
            assert_eq!(block.selected(), block.support());
            assert_eq!(out.witnesses[i], w("11"));
        }
        assert_eq!(out.cuts, vec![0, 2, 4, 6, 8, 10]);
    }

    #[test]
    fn root_only_tree() {
        let tree = TreeOracle::explicit([Word::default()], 4).unwrap();
        let out = tree_to_rule(&tree, Universe::new(4).unwrap()).unwrap();
        assert_eq!(out.rule.block(0).support(), &[0]);
        assert_eq!(out.witnesses[0], w("0"));
        assert_eq!(out.rule.len(), 4);
    }

    #[test]
    fn full_tree_has_no_witness() {
        let depth = 6;
        let all: Vec<Word> = (0..=depth).flat_map(Word::all).collect();
        let tree = TreeOracle::explicit(all, depth).unwrap();
        assert_eq!(
            tree_to_rule(&tree, Universe::new(8).unwrap()),
            Err(Error::NoTreeWitness { depth })
        );
    }

    #[test]
    fn antichain_tree() {
        let tree = TreeOracle::parse("finite-antichain:01,10", 6).unwrap();
        assert!(tree.contains(&w("")));
        assert!(tree.contains(&w("0")));
        assert!(tree.contains(&w("10")));
        assert!(!tree.contains(&w("11")));
        assert!(!tree.contains(&w("010")));
        let out = tree_to_rule(&tree, Universe::new(6).unwrap()).unwrap();
        // "00" leaves the tree from the root; every later block is trivial.
        assert_eq!(out.witnesses[0], w("00"));
        assert!(TreeOracle::parse("finite-antichain:0,01", 6).is_err());
    }

    #[test]
    fn explicit_tree_must_be_closed() {
        assert_eq!(
            TreeOracle::explicit([w(""), w("01")], 3),
            Err(Error::NotDownwardClosed { word: "01".into() })
        );
        assert!(TreeOracle::parse("bogus:1", 3).is_err());
        assert!(TreeOracle::parse("avoid-substring:", 3).is_err());
    }

    #[test]
    fn depth_must_fit_universe() {
        let tree = TreeOracle::parse("avoid-substring:11", 10).unwrap();
        assert!(tree_to_rule(&tree, Universe::new(9).unwrap()).is_err());
    }

    #[test]
    fn matched_blocks_escape_the_tree() {
        let tree = TreeOracle::parse("avoid-substring:101", 12).unwrap();
        let out = tree_to_rule(&tree, Universe::new(12).unwrap()).unwrap();
        for code in 0u32..(1 << 12) {
            let x = RealSet::from_fn(Universe::new(12).unwrap(), |p| (code >> p) & 1 == 1);
            assert!(out.audit(&tree, &x).is_empty());
        }
    }
}

//! Constructive cores of the follower constructions: derived subrules and
//! majority combining, interval splicing, tree-to-rule, and a greedy
//! multi-rule follower.

mod follower;
mod majority;
mod splice;
mod tree;

pub use follower::{diagonal_follower, Follower};
pub use majority::{derived_subrule, e_chain, majority_combine, majority_real, EChain, MajorityCertificate};
pub use splice::{splice, splice_certify, splice_from, SpliceCertificate, SpliceFunction};
pub use tree::{tree_to_rule, TreeOracle, TreeRule, TreeShape};

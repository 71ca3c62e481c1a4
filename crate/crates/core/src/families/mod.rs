//! Finite fragments of independent families, their automorphisms, and the
//! orbit rules that extend them.

mod orbit;
mod permutation;
mod polynomial;

pub use orbit::{
    extend_check, induced_permutation, orbit_rule, pair_quotients, polynomial_fragment, ExtendReport, ExtendRow,
    OrbitCombo, OrbitRule,
};
pub use permutation::{
    combo_witnesses, density_witnesses, is_automorphism, support_chain, AutomorphismCheck, BooleanCombo,
    DensityWitnesses, FamilyFragment, FinSuppPermutation, SupportChain,
};
pub use polynomial::{
    enumerate_polynomials, polynomial_index, polynomial_member, polynomials_up_to_height, Polynomial,
};

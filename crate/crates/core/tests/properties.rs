use num_bigint::BigInt;
use proptest::prelude::*;
use rulekit::constructions::{diagonal_follower, majority_combine, tree_to_rule, TreeOracle};
use rulekit::families::{combo_witnesses, BooleanCombo, FamilyFragment, FinSuppPermutation, Polynomial};
use rulekit::laver::{avoiding_rule, block_encode, coincident_pair, interval_ladder, BlockSlalom};
use rulekit::oracle;
use rulekit::prediction::{evades_set, evasion_transfer, rule_to_predictor};
use rulekit::{exact_avoid_probability, match_set, Block, Rational, RealSet, Rule, Universe, Word};

/// Each point gets a block label (or none) and a selection bit.
fn rule_strategy(max_points: usize, max_blocks: usize) -> impl Strategy<Value = Rule> {
    (1..=max_points).prop_flat_map(move |n| {
        prop::collection::vec((0..=max_blocks, any::<bool>()), n).prop_map(move |labels| {
            let mut blocks: Vec<(Vec<usize>, Vec<usize>)> = vec![(vec![], vec![]); max_blocks];
            for (p, &(l, sel)) in labels.iter().enumerate() {
                if l < max_blocks {
                    blocks[l].1.push(p);
                    if sel {
                        blocks[l].0.push(p);
                    }
                }
            }
            let blocks = blocks
                .into_iter()
                .filter(|(_, b)| !b.is_empty())
                .map(|(a, b)| Block::new(a, b).unwrap())
                .collect();
            Rule::new(Universe::new(n).unwrap(), blocks).unwrap()
        })
    })
}

fn q(a: i64, b: i64) -> Rational {
    Rational::new(BigInt::from(a), BigInt::from(b))
}

fn real_for(universe: Universe, bits: &[bool]) -> RealSet {
    RealSet::from_fn(universe, |p| bits[p % bits.len()])
}

fn word(len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(any::<bool>(), len).prop_map(Word)
}

proptest! {
    #[test]
    fn match_set_agrees_with_pointwise(rule in rule_strategy(24, 8), bits in prop::collection::vec(any::<bool>(), 1..24)) {
        let x = real_for(rule.universe(), &bits);
        prop_assert_eq!(match_set(&x, &rule).unwrap(), oracle::match_set_pointwise(&x, &rule).unwrap());
    }

    #[test]
    fn exact_avoidance_matches_enumeration(rule in rule_strategy(16, 6)) {
        for first in 0..=rule.len() {
            let exact = exact_avoid_probability::<Rational>(&rule, first).unwrap();
            prop_assert_eq!(&exact.exact, &oracle::enumerated_avoid_probability(&rule, first).unwrap());
            let float = exact_avoid_probability::<f64>(&rule, first).unwrap();
            let approx = exact.exact.numer().to_string().parse::<f64>().unwrap()
                / exact.exact.denom().to_string().parse::<f64>().unwrap();
            prop_assert!((float.exact - approx).abs() < 1e-12);
        }
    }

    #[test]
    fn complement_matches_mirror(rule in rule_strategy(20, 6), bits in prop::collection::vec(any::<bool>(), 1..20)) {
        let x = real_for(rule.universe(), &bits);
        let complement = x.complement();
        for b in rule.blocks() {
            prop_assert_eq!(b.matched_by(&complement), b.matched_by_complement(&x));
            if b.width() == 1 {
                prop_assert!(b.matched_by(&x) ^ b.matched_by(&complement));
            }
        }
    }

    #[test]
    fn coincident_pair_is_least(words in (1usize..4).prop_flat_map(|n| prop::collection::vec(word(9), n))) {
        let direct = oracle::coincident_pair_scan(&words, 9);
        match coincident_pair(&words, 3, 9) {
            Ok(pair) => {
                prop_assert_eq!(Some((pair.i, pair.j)), direct);
                prop_assert!(words.iter().all(|w| w.bit(pair.i) == w.bit(pair.j)));
            }
            Err(_) => prop_assert_eq!(direct, None),
        }
    }

    #[test]
    fn combo_agrees_with_pointwise(
        members in prop::collection::vec(prop::collection::vec(any::<bool>(), 32), 2..6),
        signs in prop::collection::vec(0u8..3, 6),
    ) {
        let u = Universe::new(32).unwrap();
        let sets: Vec<RealSet> = members.iter().map(|bits| RealSet::from_fn(u, |p| bits[p])).collect();
        let Ok(family) = FamilyFragment::new(u, sets) else { return Ok(()) };
        let pos: Vec<usize> = (0..family.len()).filter(|&i| signs[i] == 1).collect();
        let neg: Vec<usize> = (0..family.len()).filter(|&i| signs[i] == 2).collect();
        let combo = BooleanCombo::new(pos, neg, None).unwrap();
        prop_assert_eq!(combo_witnesses(&family, &combo).unwrap().to_vec(), oracle::combo_pointwise(&family, &combo).unwrap());
    }

    #[test]
    fn majority_certificate_audits(
        k in 2usize..5,
        seeds in prop::collection::vec(prop::collection::vec(any::<bool>(), 60), 6),
        splits in prop::collection::vec(any::<bool>(), 60),
    ) {
        let width = k + 1;
        let u = Universe::new(60).unwrap();
        let blocks = (0..60 / width)
            .map(|n| {
                let b: Vec<usize> = (n * width..(n + 1) * width).collect();
                let a: Vec<usize> = b.iter().copied().filter(|&p| splits[p]).collect();
                Block::new(a, b).unwrap()
            })
            .collect();
        let rule = Rule::new(u, blocks).unwrap();
        let reals: Vec<RealSet> = seeds[..k + 1].iter().map(|bits| RealSet::from_fn(u, |p| bits[p])).collect();
        let cert = majority_combine(&rule, &reals).unwrap();
        prop_assert!(cert.audit(&rule).is_empty());
        let matched = match_set(&cert.combined, &rule).unwrap();
        prop_assert!(cert.certified.iter().all(|n| matched.contains(n)));
    }

    #[test]
    fn diagonal_follower_audits(rules in prop::collection::vec(rule_strategy(30, 6), 1..4)) {
        let n = rules.iter().map(|r| r.universe().size()).max().unwrap();
        let u = Universe::new(n).unwrap();
        let rules: Vec<Rule> = rules.iter().map(|r| Rule::new(u, r.blocks().to_vec()).unwrap()).collect();
        let f = diagonal_follower(u, &rules, 3).unwrap();
        prop_assert!(f.audit(&rules).is_empty());
        for (r, rule) in rules.iter().enumerate() {
            prop_assert_eq!(f.achieved[r], match_set(&f.real, rule).unwrap().len());
        }
    }

    #[test]
    fn two_rule_evasions_transfer(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..6), bits in prop::collection::vec(any::<bool>(), 12)) {
        let u = Universe::new(12).unwrap();
        let blocks = pairs
            .iter()
            .enumerate()
            .map(|(n, &(lo, hi))| {
                let b = [2 * n, 2 * n + 1];
                Block::new(b.into_iter().filter(|&p| if p % 2 == 0 { lo } else { hi }), b).unwrap()
            })
            .collect();
        let rule = Rule::new(u, blocks).unwrap();
        let x = RealSet::from_fn(u, |p| bits[p]);
        let predictor = rule_to_predictor(&rule).unwrap();
        prop_assert_eq!(evades_set(&x, &predictor.predictor).unwrap(), oracle::rule_evasions(&x, &rule).unwrap());
        let report = evasion_transfer(&x, &rule).unwrap();
        prop_assert!(report.audit(&rule).is_empty());
    }

    #[test]
    fn polynomial_sign_matches_evaluation(coeffs in prop::collection::vec(-5i64..=5, 0..6), a in -12i64..=12, b in 1i64..=7) {
        let p = Polynomial::new(coeffs);
        let r = q(a, b);
        let value: Rational = p.eval(&r);
        prop_assert_eq!(p.sign_at(&r), value.cmp(&q(0, 1)));
        prop_assert_eq!(p.negate_argument().eval::<Rational>(&r), p.eval(&-r.clone()));
        if a != 0 {
            let d = 4;
            let rev = p.reciprocal(d).unwrap();
            let inv = q(b, a);
            let scale = (0..d).fold(q(1, 1), |acc, _| acc * r.clone());
            prop_assert_eq!(rev.eval::<Rational>(&r), scale * p.eval::<Rational>(&inv));
        }
    }

    #[test]
    fn permutation_image_is_pointwise(cycle in prop::sample::subsequence((0..20).collect::<Vec<usize>>(), 2..8), bits in prop::collection::vec(any::<bool>(), 20)) {
        let u = Universe::new(20).unwrap();
        let sigma = FinSuppPermutation::cycle(&cycle).unwrap();
        prop_assert!(sigma.compose(&sigma.inverse()).is_identity());
        let x = RealSet::from_fn(u, |p| bits[p]);
        let img = sigma.image(&x).unwrap();
        prop_assert_eq!(img.len(), x.len());
        for p in 0..20 {
            prop_assert_eq!(img.contains(sigma.apply(p)).unwrap(), x.contains(p).unwrap());
        }
    }

    #[test]
    fn tree_rule_escapes(pattern in prop::collection::vec(any::<bool>(), 2..5), bits in prop::collection::vec(any::<bool>(), 14)) {
        let tree = TreeOracle::avoid_substring(Word(pattern), 14).unwrap();
        let u = Universe::new(14).unwrap();
        let out = tree_to_rule(&tree, u).unwrap();
        let x = RealSet::from_fn(u, |p| bits[p]);
        prop_assert!(out.audit(&tree, &x).is_empty());
    }

    #[test]
    fn slalom_avoidance(bits in prop::collection::vec(any::<bool>(), 1100), decoys in prop::collection::vec(any::<u64>(), 10)) {
        let ladder = interval_ladder(Universe::new(1100).unwrap(), 10).unwrap();
        let x = RealSet::from_fn(ladder.universe(), |p| bits[p]);
        let words = block_encode(&x, &ladder).unwrap();
        let sets: Vec<Vec<Word>> = words
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, w)| {
                let mut s = vec![w.clone()];
                if n > 1 {
                    let d = Word((0..w.len()).map(|t| (decoys[n] >> (t % 64)) & 1 == 1).collect());
                    s.push(d);
                }
                s
            })
            .collect();
        let slalom = BlockSlalom::new(ladder, sets).unwrap();
        let avoiding = avoiding_rule(&slalom).unwrap();
        prop_assert!(match_set(&x, &avoiding.rule).unwrap().is_empty());
        prop_assert!(avoiding.audit(&slalom, &x).is_empty());
    }
}

#[test]
fn two_pairs_avoid_with_nine_sixteenths() {
    let rule = Rule::new(
        Universe::new(4).unwrap(),
        vec![Block::new([0], [0, 1]).unwrap(), Block::new([2], [2, 3]).unwrap()],
    )
    .unwrap();
    let p = exact_avoid_probability::<Rational>(&rule, 2).unwrap();
    assert_eq!(p.exact, q(9, 16));
    assert_eq!(p.follow(), q(7, 16));
}

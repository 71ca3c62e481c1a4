//! Follow/avoid probabilities for uniformly random reals.
//!
//! Blocks are disjoint, so the events "X misses block n" are independent and
//! each has probability `1 - 2^{-|B_n|}`. Exact values come from that
//! product; [`mc_follow_estimate`] is the sampled counterpart.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rule::Rule;
use crate::scalar::{miss_probability, Scalar};
use crate::Rational;

#[derive(Debug, Clone, PartialEq)]
pub struct AvoidanceProbability<S> {
    /// Probability of matching none of the first blocks.
    pub exact: S,
    /// `1 - 2^{-|B_n|}` per block.
    pub per_block: Vec<S>,
}

impl<S: Scalar> AvoidanceProbability<S> {
    pub fn follow(&self) -> S {
        S::one() - self.exact.clone()
    }
}

fn width_exponent(width: usize) -> Result<u32> {
    u32::try_from(width).map_err(|_| Error::Schema(format!("block width {width} too large")))
}

pub fn exact_avoid_probability<S: Scalar>(rule: &Rule, first: usize) -> Result<AvoidanceProbability<S>> {
    if first > rule.len() {
        return Err(Error::IndexOutOfRange {
            what: "block prefix",
            index: first,
            len: rule.len(),
        });
    }
    let per_block = rule.blocks()[..first]
        .iter()
        .map(|b| width_exponent(b.width()).map(miss_probability::<S>))
        .collect::<Result<Vec<S>>>()?;
    let exact = per_block.iter().cloned().fold(S::one(), |acc, p| acc * p);
    Ok(AvoidanceProbability { exact, per_block })
}

/// Bit `position` of sample `sample` under `seed`: word `position / 64` of
/// ChaCha8 stream `sample`.
pub fn sample_bit(seed: u64, sample: u64, position: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample);
    rng.set_word_pos(u128::from(position / 64) * 2);
    (rng.next_u64() >> (position % 64)) & 1 == 1
}

/// Sequential reader over one sample's bit stream, agreeing with [`sample_bit`].
struct BitStream<'a> {
    rng: &'a mut ChaCha8Rng,
    word: u64,
    left: u32,
}

impl<'a> BitStream<'a> {
    fn open(rng: &'a mut ChaCha8Rng, sample: u64) -> Self {
        rng.set_stream(sample);
        rng.set_word_pos(0);
        BitStream { rng, word: 0, left: 0 }
    }

    fn next_bit(&mut self) -> bool {
        if self.left == 0 {
            self.word = self.rng.next_u64();
            self.left = 64;
        }
        let b = self.word & 1 == 1;
        self.word >>= 1;
        self.left -= 1;
        b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleReport {
    pub samples: u64,
    pub hits: u64,
    #[serde(serialize_with = "crate::scalar::ser_rational")]
    pub estimate: Rational,
    pub stderr: f64,
    pub seed: u64,
}

impl SampleReport {
    pub fn estimate_f64(&self) -> f64 {
        self.hits as f64 / self.samples as f64
    }

    /// `|estimate - exact| <= z · stderr`.
    pub fn within(&self, exact: &Rational, z: f64) -> bool {
        (self.estimate_f64() - exact.approx()).abs() <= z * self.stderr
    }
}

const CHUNK: u64 = 1 << 12;

/// Fraction of `samples` uniform reals matching at least one of the first
/// blocks. Only bits on `⋃ B_n` are drawn, block by block, stopping at the
/// first match. The result depends only on `(seed, samples)`.
pub fn mc_follow_estimate(rule: &Rule, first: usize, samples: u64, seed: u64) -> Result<SampleReport> {
    if samples == 0 {
        return Err(Error::EmptyInput("samples"));
    }
    if first > rule.len() {
        return Err(Error::IndexOutOfRange {
            what: "block prefix",
            index: first,
            len: rule.len(),
        });
    }
    // Per block: the pattern in increasing order of B.
    let patterns: Vec<Vec<bool>> = rule.blocks()[..first]
        .iter()
        .map(|b| b.support().iter().map(|&p| b.selects(p)).collect())
        .collect();
    let base = ChaCha8Rng::seed_from_u64(seed);
    let chunks = samples.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = base.clone();
            let mut hits = 0u64;
            for s in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let mut bits = BitStream::open(&mut rng, s);
                let hit = patterns.iter().any(|pattern| {
                    // draw the whole block before comparing so positions stay aligned
                    let drawn: Vec<bool> = pattern.iter().map(|_| bits.next_bit()).collect();
                    drawn == *pattern
                });
                hits += u64::from(hit);
            }
            hits
        })
        .sum();
    let p = hits as f64 / samples as f64;
    Ok(SampleReport {
        samples,
        hits,
        estimate: Rational::new(hits.into(), samples.into()),
        stderr: (p * (1.0 - p) / samples as f64).sqrt(),
        seed,
    })
}

/// Avoidance trajectories `∏_{n<t} (1 - 2^{-f(n)})` for `t = 0..=horizon`,
/// one per width profile. A convergent `Σ 2^{-f}` keeps the product away
/// from zero; nothing here decides slowness, it only reports the prefix.
pub fn slow_vs_fast_sweep<S: Scalar>(profiles: &[Vec<usize>], horizon: usize) -> Result<Vec<Vec<S>>> {
    profiles
        .iter()
        .map(|f| {
            if horizon > f.len() {
                return Err(Error::HorizonTooLong {
                    horizon,
                    available: f.len(),
                });
            }
            let mut acc = S::one();
            let mut trajectory = vec![acc.clone()];
            for &width in &f[..horizon] {
                acc = acc * miss_probability::<S>(width_exponent(width)?);
                trajectory.push(acc.clone());
            }
            Ok(trajectory)
        })
        .collect()
}

pub const CSV_HEADER: [&str; 7] = ["profile", "t", "exact_num", "exact_den", "estimate", "stderr", "seed"];

/// One CSV row per `(profile, t)` of an exact sweep.
pub fn sweep_csv(trajectories: &[Vec<Rational>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Schema(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for (profile, trajectory) in trajectories.iter().enumerate() {
        for (t, value) in trajectory.iter().enumerate() {
            w.write_record([
                profile.to_string(),
                t.to_string(),
                value.numer().to_string(),
                value.denom().to_string(),
                String::new(),
                String::new(),
                String::new(),
            ])
            .map_err(io)?;
        }
    }
    finish_csv(w)
}

/// A single CSV row comparing a sampled follow estimate with its exact value.
pub fn sample_csv(label: &str, first: usize, exact_follow: &Rational, report: &SampleReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Schema(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    w.write_record([
        label.to_string(),
        first.to_string(),
        exact_follow.numer().to_string(),
        exact_follow.denom().to_string(),
        format!("{}", report.estimate_f64()),
        format!("{}", report.stderr),
        report.seed.to_string(),
    ])
    .map_err(io)?;
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Schema(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Schema(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::Block;
    use crate::scalar::ratio;
    use crate::set::Universe;

    fn pairs(count: usize) -> Rule {
        Rule::new(
            Universe::new(2 * count + 1).unwrap(),
            (0..count)
                .map(|n| Block::new([2 * n], [2 * n, 2 * n + 1]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn exact_examples() {
        let p: AvoidanceProbability<Rational> = exact_avoid_probability(&pairs(2), 2).unwrap();
        assert_eq!(p.exact, ratio(9, 16));
        assert_eq!(p.follow(), ratio(7, 16));

        let single = Rule::new(Universe::new(3).unwrap(), vec![Block::new([], [1]).unwrap()]).unwrap();
        let p: AvoidanceProbability<Rational> = exact_avoid_probability(&single, 1).unwrap();
        assert_eq!(p.exact, ratio(1, 2));

        let p: AvoidanceProbability<Rational> = exact_avoid_probability(&pairs(3), 0).unwrap();
        assert_eq!(p.exact, ratio(1, 1));
        assert!(exact_avoid_probability::<Rational>(&pairs(3), 4).is_err());

        let approx: AvoidanceProbability<f64> = exact_avoid_probability(&pairs(2), 2).unwrap();
        assert!((approx.exact - 0.5625).abs() < 1e-15);
    }

    #[test]
    fn monotone_in_prefix() {
        let r = pairs(6);
        let values: Vec<Rational> = (0..=6)
            .map(|t| exact_avoid_probability::<Rational>(&r, t).unwrap().exact)
            .collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn stream_matches_keyed_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for sample in [0u64, 1, 17, 5000] {
            let mut bits = BitStream::open(&mut rng, sample);
            for position in 0..150u64 {
                assert_eq!(
                    bits.next_bit(),
                    sample_bit(99, sample, position),
                    "sample {sample} bit {position}"
                );
            }
        }
    }

    #[test]
    fn zero_blocks_never_hit() {
        let r = pairs(3);
        let rep = mc_follow_estimate(&r, 0, 1000, 5).unwrap();
        assert_eq!(rep.hits, 0);
        assert_eq!(rep.estimate, ratio(0, 1));
    }

    #[test]
    fn single_bit_near_half() {
        let single = Rule::new(Universe::new(3).unwrap(), vec![Block::new([], [1]).unwrap()]).unwrap();
        let rep = mc_follow_estimate(&single, 1, 20_000, 11).unwrap();
        assert!(rep.within(&ratio(1, 2), 3.0), "{rep:?}");
    }

    #[test]
    fn deterministic_given_seed() {
        let r = pairs(5);
        let a = mc_follow_estimate(&r, 5, 10_000, 3).unwrap();
        let b = mc_follow_estimate(&r, 5, 10_000, 3).unwrap();
        assert_eq!(a, b);
        let c = mc_follow_estimate(&r, 5, 10_000, 4).unwrap();
        assert_ne!(a.hits, c.hits);
    }

    #[test]
    fn sweep_examples() {
        let t: Vec<Vec<Rational>> = slow_vs_fast_sweep(&[vec![1; 10], vec![2; 16]], 10).unwrap();
        assert_eq!(t[0][10], ratio(1, 1024));
        let t: Vec<Vec<Rational>> = slow_vs_fast_sweep(&[vec![2; 16]], 16).unwrap();
        assert_eq!(t[0][16], Rational::new(3u64.pow(16).into(), 4u64.pow(16).into()));
        assert!(slow_vs_fast_sweep::<Rational>(&[vec![1; 3]], 4).is_err());
    }

    #[test]
    fn fast_profile_plateaus() {
        // f(n) = n + 2: Σ 2^{-f} = 1/2, so the product stays above 1 - 1/2.
        let f: Vec<usize> = (0..40).map(|n| n + 2).collect();
        let t: Vec<Vec<Rational>> = slow_vs_fast_sweep(&[f], 40).unwrap();
        assert!(t[0].iter().all(|p| *p > ratio(1, 2)));
        let g: Vec<Vec<Rational>> = slow_vs_fast_sweep(&[vec![1; 40]], 40).unwrap();
        assert!(g[0][40] < ratio(1, 1 << 30));
    }

    #[test]
    fn csv_shapes() {
        let t: Vec<Vec<Rational>> = slow_vs_fast_sweep(&[vec![1; 2]], 2).unwrap();
        let csv = sweep_csv(&t).unwrap();
        assert_eq!(
            csv,
            "profile,t,exact_num,exact_den,estimate,stderr,seed\n0,0,1,1,,,\n0,1,1,2,,,\n0,2,1,4,,,\n"
        );
        let rep = mc_follow_estimate(&pairs(1), 1, 100, 1).unwrap();
        let row = sample_csv("pairs", 1, &ratio(1, 4), &rep).unwrap();
        assert!(row.lines().nth(1).unwrap().starts_with("pairs,1,1,4,"));
    }
}

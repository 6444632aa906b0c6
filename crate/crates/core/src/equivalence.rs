//! Executable checks that the two discount regimes are two descriptions of
//! one game.
//!
//! A post-auction price reduction is matched by a pre-auction bid
//! augmentation after a bid change of variables: identity bids for equal
//! additive amounts, scaled bids with `r = a/(1+a)` for multiplicative
//! rates. The checks here replay both sides of each pairing on concrete
//! auctions, exact ties included, and report the largest disagreement.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analytic::augmentation_to_reduction;
use crate::auction::{resolve, AuctionInstance, DiscountForm, DiscountRegime, DiscountSpec};
use crate::error::{Error, Result};
use crate::outcomes::{integrate_outcomes, OutcomeConfig};
use crate::solver::{solve, SolverConfig};

/// Relative tolerance for the multiplicative pairing, where the bid change
/// of variables rounds.
pub const MULTIPLICATIVE_TOLERANCE: f64 = 1e-12;
/// One constructed exact-tie case is injected per this many random trials.
const TIE_TRIAL_PERIOD: u64 = 50;

/// A pre-auction and a post-auction discount that describe the same game,
/// together with the bid change of variables linking them.
#[derive(Debug, Clone)]
pub struct RegimePair {
    pub pre: DiscountSpec,
    pub post: DiscountSpec,
    pub transform: BidTransform,
}

/// How bids submitted under the post regime map to bids under the pre
/// regime's description.
#[derive(Debug, Clone, PartialEq)]
pub enum BidTransform {
    Identity,
    /// Per-bidder factors; pre-regime bids are post-regime bids times these.
    Scale(Vec<f64>),
}

impl RegimePair {
    /// Equal additive amounts on both sides; bids carry over unchanged
    /// after shading by the amount.
    pub fn additive(amounts: Vec<f64>) -> Result<RegimePair> {
        Ok(RegimePair {
            pre: DiscountSpec::new(DiscountRegime::PreAuction, DiscountForm::Additive, amounts.clone())?,
            post: DiscountSpec::new(DiscountRegime::PostAuction, DiscountForm::Additive, amounts)?,
            transform: BidTransform::Identity,
        })
    }

    /// Pre-auction augmentations `a` paired with post-auction reductions
    /// `a/(1+a)`; pre-regime bids are post-regime bids divided by `1+a`.
    pub fn multiplicative(augmentations: Vec<f64>) -> Result<RegimePair> {
        let reductions: Vec<f64> = augmentations.iter().map(|&a| augmentation_to_reduction(a)).collect();
        let scales: Vec<f64> = augmentations.iter().map(|&a| 1.0 + a).collect();
        Ok(RegimePair {
            pre: DiscountSpec::new(DiscountRegime::PreAuction, DiscountForm::Multiplicative, augmentations)?,
            post: DiscountSpec::new(DiscountRegime::PostAuction, DiscountForm::Multiplicative, reductions)?,
            transform: BidTransform::Scale(scales),
        })
    }
}

/// Outcome of replaying one auction under both regime descriptions.
#[derive(Debug, Clone, Copy)]
pub struct PairCheck {
    pub max_abs_deviation: f64,
    pub max_rel_deviation: f64,
    /// Whether the same bidders held the highest effective bid on both sides.
    pub winners_match: bool,
}

/// Replays `(valuations, bids)` under a post-auction additive reduction and
/// under the pre-auction description (same amounts, bids shaded by them).
/// Requires `bids >= reductions` elementwise.
pub fn check_additive_equivalence(
    valuations: &[f64],
    bids: &[f64],
    reductions: &[f64],
) -> Result<PairCheck> {
    if valuations.len() != bids.len() || bids.len() != reductions.len() {
        return Err(Error::invalid("valuations, bids, and reductions must have equal lengths"));
    }
    if let Some(i) = bids.iter().zip(reductions).position(|(b, r)| b < r) {
        return Err(Error::invalid(format!(
            "bid {} is below its reduction {}; the shaded bid would be negative",
            bids[i], reductions[i]
        )));
    }
    let pair = RegimePair::additive(reductions.to_vec())?;
    let shaded: Vec<f64> = bids.iter().zip(reductions).map(|(b, r)| b - r).collect();
    let post = resolve(&AuctionInstance::new(valuations.to_vec(), bids.to_vec(), pair.post)?)?;
    let pre = resolve(&AuctionInstance::new(valuations.to_vec(), shaded, pair.pre)?)?;
    Ok(compare(&post.utility, &pre.utility, &post.win_probability, &pre.win_probability))
}

/// Replays `(valuations, bids)` under pre-auction augmentations `a` and
/// under the paired post-auction description (rates `a/(1+a)`, bids scaled
/// by `1+a`).
pub fn check_multiplicative_equivalence(
    valuations: &[f64],
    bids: &[f64],
    augmentations: &[f64],
) -> Result<PairCheck> {
    if valuations.len() != bids.len() || bids.len() != augmentations.len() {
        return Err(Error::invalid("valuations, bids, and augmentations must have equal lengths"));
    }
    let pair = RegimePair::multiplicative(augmentations.to_vec())?;
    let scaled: Vec<f64> = match &pair.transform {
        BidTransform::Scale(factors) => bids.iter().zip(factors).map(|(b, s)| b * s).collect(),
        BidTransform::Identity => bids.to_vec(),
    };
    let pre = resolve(&AuctionInstance::new(valuations.to_vec(), bids.to_vec(), pair.pre)?)?;
    let post = resolve(&AuctionInstance::new(valuations.to_vec(), scaled, pair.post)?)?;
    Ok(compare(&pre.utility, &post.utility, &pre.win_probability, &post.win_probability))
}

fn compare(u_a: &[f64], u_b: &[f64], w_a: &[f64], w_b: &[f64]) -> PairCheck {
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    for (&a, &b) in u_a.iter().zip(u_b) {
        let abs = (a - b).abs();
        max_abs = max_abs.max(abs);
        let scale = a.abs().max(b.abs());
        if scale > 0.0 {
            max_rel = max_rel.max(abs / scale);
        }
    }
    let winners_match = w_a
        .iter()
        .zip(w_b)
        .all(|(&a, &b)| (a > 0.0) == (b > 0.0));
    PairCheck { max_abs_deviation: max_abs, max_rel_deviation: max_rel, winners_match }
}

/// Aggregate result of a batch of randomized equivalence trials.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub check: &'static str,
    pub trials: u64,
    pub constructed_ties: u64,
    pub max_abs_deviation: f64,
    pub max_rel_deviation: f64,
    pub winners_always_matched: bool,
    pub seed: u64,
    pub passed: bool,
}

impl EquivalenceReport {
    pub fn summary(&self) -> String {
        format!(
            "check={}\ntrials={}\nconstructed_ties={}\nmax_abs_deviation={:e}\nmax_rel_deviation={:e}\nwinners_matched={}\nseed={}\npass={}\n",
            self.check,
            self.trials,
            self.constructed_ties,
            self.max_abs_deviation,
            self.max_rel_deviation,
            self.winners_always_matched,
            self.seed,
            self.passed
        )
    }
}

/// Dyadic rational `k * 2^-16`; sums and differences of these stay exact in
/// an f64, which is what makes the additive identity bit-for-bit.
fn dyadic(k: u64) -> f64 {
    k as f64 * (0.5f64).powi(16)
}

/// Runs seeded additive-equivalence trials. Amounts and bids live on a
/// dyadic grid so the shaded bid round-trips exactly; the expected maximum
/// deviation is zero, and every `TIE_TRIAL_PERIOD`th trial forces an exact
/// tie of width 2 to 4.
pub fn run_additive_trials(trials: u64, seed: u64) -> Result<EquivalenceReport> {
    if trials == 0 {
        return Err(Error::invalid("trial count must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    let mut winners = true;
    let mut ties = 0u64;
    for t in 0..trials {
        let n = rng.gen_range(2..=6usize);
        let valuations: Vec<f64> = (0..n).map(|_| dyadic(rng.gen_range(1..=1u64 << 17))).collect();
        let reductions: Vec<f64> = (0..n).map(|_| dyadic(rng.gen_range(0..=1u64 << 12))).collect();
        let mut bids: Vec<f64> = reductions
            .iter()
            .map(|r| r + dyadic(rng.gen_range(0..=1u64 << 16)))
            .collect();
        if t % TIE_TRIAL_PERIOD == 0 {
            let width = rng.gen_range(2..=4usize.min(n));
            let top = bids.iter().cloned().fold(0.0, f64::max) + dyadic(rng.gen_range(1..=1u64 << 10));
            for b in bids.iter_mut().take(width) {
                *b = top;
            }
            ties += 1;
        }
        let check = check_additive_equivalence(&valuations, &bids, &reductions)?;
        max_abs = max_abs.max(check.max_abs_deviation);
        max_rel = max_rel.max(check.max_rel_deviation);
        winners &= check.winners_match;
    }
    let passed = max_abs == 0.0 && winners;
    Ok(EquivalenceReport {
        check: "additive_reduction_vs_shaded_bids",
        trials,
        constructed_ties: ties,
        max_abs_deviation: max_abs,
        max_rel_deviation: max_rel,
        winners_always_matched: winners,
        seed,
        passed,
    })
}

/// Runs seeded multiplicative-equivalence trials. The bid scaling rounds,
/// so winners get a 5% effective-bid margin and a 0.05 surplus margin and
/// the deviation is judged relatively; constructed ties share one exact
/// `(a, b)` pair across the tied bidders.
pub fn run_multiplicative_trials(trials: u64, seed: u64) -> Result<EquivalenceReport> {
    if trials == 0 {
        return Err(Error::invalid("trial count must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    let mut winners = true;
    let mut ties = 0u64;
    for t in 0..trials {
        let n = rng.gen_range(2..=6usize);
        let tie_width = if t % TIE_TRIAL_PERIOD == 0 { rng.gen_range(2..=4usize.min(n)) } else { 0 };
        let mut augmentations;
        let mut bids;
        loop {
            augmentations = (0..n)
                .map(|_| dyadic(rng.gen_range(0..=1u64 << 15)))
                .collect::<Vec<f64>>();
            bids = (0..n)
                .map(|_| dyadic(rng.gen_range(1..=1u64 << 16)))
                .collect::<Vec<f64>>();
            if tie_width > 0 {
                let a = augmentations[0];
                let b = bids[0].max(1.0);
                for i in 0..tie_width {
                    augmentations[i] = a;
                    bids[i] = b;
                }
                for i in tie_width..n {
                    if (1.0 + augmentations[i]) * bids[i] >= (1.0 + a) * b {
                        bids[i] = 0.5 * b / (1.0 + augmentations[i]);
                    }
                }
                break;
            }
            let mut effective: Vec<f64> =
                augmentations.iter().zip(&bids).map(|(a, b)| (1.0 + a) * b).collect();
            effective.sort_unstable_by(f64::total_cmp);
            let top = effective[n - 1];
            if top > 1.05 * effective[n - 2] {
                break;
            }
        }
        let valuations: Vec<f64> = bids
            .iter()
            .map(|b| {
                let margin = 0.05 + dyadic(rng.gen_range(0..=1u64 << 15));
                if rng.gen_bool(0.5) || b - margin <= 0.0 {
                    b + margin
                } else {
                    b - margin
                }
            })
            .collect();
        if tie_width > 0 {
            ties += 1;
        }
        let check = check_multiplicative_equivalence(&valuations, &bids, &augmentations)?;
        max_abs = max_abs.max(check.max_abs_deviation);
        max_rel = max_rel.max(check.max_rel_deviation);
        winners &= check.winners_match;
    }
    let passed = max_rel < MULTIPLICATIVE_TOLERANCE && winners;
    Ok(EquivalenceReport {
        check: "multiplicative_augmentation_vs_scaled_bids",
        trials,
        constructed_ties: ties,
        max_abs_deviation: max_abs,
        max_rel_deviation: max_rel,
        winners_always_matched: winners,
        seed,
        passed,
    })
}

/// One rate of an equal-rate comparison sweep.
#[derive(Debug, Clone)]
pub struct EqualRateRow {
    pub r: f64,
    /// The post-auction rate worth the same as a pre-auction augmentation
    /// of `r`, namely `r/(1+r)`.
    pub equivalent_rate: f64,
    pub utility_at_r: Option<f64>,
    pub utility_at_equivalent: Option<f64>,
    /// Expected-utility loss from swapping the reduction rate `r` for an
    /// augmentation at the same number.
    pub loss: Option<f64>,
    pub failure: Option<String>,
}

/// For each rate, re-solves the game at post-auction rate `r` and at the
/// post-rate equivalent of an equal-number augmentation, `r/(1+r)`, and
/// reports the discounted bidder's equilibrium expected-utility loss from
/// the swap. Solver failures are carried per rate.
pub fn equal_rate_sweep(rates: &[f64], template: &SolverConfig) -> Vec<EqualRateRow> {
    let utility_at = |rate: f64| -> Result<f64> {
        let mut cfg = template.clone();
        cfg.r = rate;
        let report = solve(&cfg)?;
        let stats = integrate_outcomes(&OutcomeConfig::from_solve(&report, &cfg))?;
        Ok(stats.surplus_discounted)
    };
    rates
        .iter()
        .map(|&r| {
            let equivalent = augmentation_to_reduction(r);
            match utility_at(r).and_then(|full| utility_at(equivalent).map(|eq| (full, eq))) {
                Ok((full, eq)) => EqualRateRow {
                    r,
                    equivalent_rate: equivalent,
                    utility_at_r: Some(full),
                    utility_at_equivalent: Some(eq),
                    loss: Some(full - eq),
                    failure: None,
                },
                Err(err) => EqualRateRow {
                    r,
                    equivalent_rate: equivalent,
                    utility_at_r: None,
                    utility_at_equivalent: None,
                    loss: None,
                    failure: Some(err.to_string()),
                },
            }
        })
        .collect()
}

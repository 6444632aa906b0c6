//! Single-auction mechanics for first-price auctions with per-bidder
//! discounts.
//!
//! A discount is applied in one of two places. A pre-auction discount
//! augments the bid used for allocation while the winner still pays the raw
//! bid. A post-auction discount allocates on raw bids and reduces the price
//! the winner pays. Both come in additive and multiplicative forms.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub type BidderId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiscountRegime {
    /// Discount adjusts the bid before allocation; winner pays the raw bid.
    PreAuction,
    /// Allocation uses raw bids; discount reduces the winner's price.
    PostAuction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiscountForm {
    Additive,
    Multiplicative,
}

/// Per-bidder discount amounts under a single regime and form.
///
/// Multiplicative post-auction rates must lie in [0, 1); all other amounts
/// only need to be nonnegative and finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountSpec {
    pub regime: DiscountRegime,
    pub form: DiscountForm,
    pub amounts: Vec<f64>,
}

impl DiscountSpec {
    pub fn new(regime: DiscountRegime, form: DiscountForm, amounts: Vec<f64>) -> Result<Self> {
        for (i, &a) in amounts.iter().enumerate() {
            if !a.is_finite() || a < 0.0 {
                return Err(Error::invalid(format!(
                    "discount amount for bidder {i} must be finite and >= 0, got {a}"
                )));
            }
            if regime == DiscountRegime::PostAuction && form == DiscountForm::Multiplicative && a >= 1.0 {
                return Err(Error::invalid(format!(
                    "multiplicative price-reduction rate for bidder {i} must be < 1, got {a}"
                )));
            }
        }
        Ok(DiscountSpec { regime, form, amounts })
    }

    /// No discount for any of `n` bidders.
    pub fn none(n: usize) -> Self {
        DiscountSpec {
            regime: DiscountRegime::PostAuction,
            form: DiscountForm::Multiplicative,
            amounts: vec![0.0; n],
        }
    }

    pub fn effective_bid(&self, bidder: BidderId, bid: f64) -> f64 {
        effective_bid(bid, self.regime, self.form, self.amounts[bidder])
    }

    pub fn winning_price(&self, bidder: BidderId, bid: f64) -> f64 {
        winning_price(bid, self.regime, self.form, self.amounts[bidder])
    }
}

/// The bid value used for allocation.
pub fn effective_bid(bid: f64, regime: DiscountRegime, form: DiscountForm, amount: f64) -> f64 {
    match (regime, form) {
        (DiscountRegime::PreAuction, DiscountForm::Additive) => bid + amount,
        (DiscountRegime::PreAuction, DiscountForm::Multiplicative) => bid * (1.0 + amount),
        (DiscountRegime::PostAuction, _) => bid,
    }
}

/// The price paid if this bid wins. Additive post-auction reductions floor
/// at zero; the seller never pays a winner.
pub fn winning_price(bid: f64, regime: DiscountRegime, form: DiscountForm, amount: f64) -> f64 {
    match (regime, form) {
        (DiscountRegime::PostAuction, DiscountForm::Additive) => (bid - amount).max(0.0),
        (DiscountRegime::PostAuction, DiscountForm::Multiplicative) => bid * (1.0 - amount),
        (DiscountRegime::PreAuction, _) => bid,
    }
}

/// The valuation shift that absorbs a multiplicative discount: bidding with
/// valuation v and rate a (pre) or r (post) is utility-equivalent to an
/// undiscounted bidder whose valuation is shifted upward. Additive forms have
/// no such representation and are rejected.
pub fn virtual_valuation(
    valuation: f64,
    bid: f64,
    regime: DiscountRegime,
    form: DiscountForm,
    amount: f64,
) -> Result<f64> {
    if form == DiscountForm::Additive {
        return Err(Error::invalid(
            "virtual valuations are defined for multiplicative discounts only",
        ));
    }
    match regime {
        DiscountRegime::PreAuction => {
            let hat = effective_bid(bid, regime, form, amount);
            Ok(valuation + hat * (amount / (1.0 + amount)))
        }
        DiscountRegime::PostAuction => Ok(valuation + bid * amount),
    }
}

/// One sealed-bid auction: private valuations, submitted bids, and the
/// discount arrangement.
#[derive(Debug, Clone)]
pub struct AuctionInstance {
    pub valuations: Vec<f64>,
    pub bids: Vec<f64>,
    pub discount: DiscountSpec,
}

impl AuctionInstance {
    pub fn new(valuations: Vec<f64>, bids: Vec<f64>, discount: DiscountSpec) -> Result<Self> {
        if valuations.is_empty() {
            return Err(Error::invalid("auction needs at least one bidder"));
        }
        if valuations.len() != bids.len() || bids.len() != discount.amounts.len() {
            return Err(Error::invalid(format!(
                "mismatched lengths: {} valuations, {} bids, {} discount amounts",
                valuations.len(),
                bids.len(),
                discount.amounts.len()
            )));
        }
        for (i, &v) in valuations.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(format!(
                    "valuation for bidder {i} must be finite and positive, got {v}"
                )));
            }
        }
        for (i, &b) in bids.iter().enumerate() {
            if !b.is_finite() || b < 0.0 {
                return Err(Error::invalid(format!(
                    "bid for bidder {i} must be finite and nonnegative, got {b}"
                )));
            }
        }
        Ok(AuctionInstance { valuations, bids, discount })
    }

    pub fn len(&self) -> usize {
        self.bids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty()
    }
}

/// Allocation and settlement of one auction.
#[derive(Debug, Clone)]
pub struct AuctionResult {
    /// 1/k for each of the k bidders sharing the highest effective bid,
    /// 0 for everyone else.
    pub win_probability: Vec<f64>,
    /// Price each bidder would pay on winning.
    pub price: Vec<f64>,
    /// Expected utility: win probability times surplus at the winning price.
    pub utility: Vec<f64>,
}

impl AuctionResult {
    /// Bidders holding the highest effective bid.
    pub fn winners(&self) -> Vec<BidderId> {
        self.win_probability
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Scores the auction. Ties are exact floating-point equality of effective
/// bids and split the win uniformly among the k tied bidders.
pub fn resolve(instance: &AuctionInstance) -> Result<AuctionResult> {
    if instance.is_empty() {
        return Err(Error::invalid("cannot resolve an empty auction"));
    }
    let n = instance.len();
    let effective: Vec<f64> = (0..n)
        .map(|i| instance.discount.effective_bid(i, instance.bids[i]))
        .collect();

    let mut top = effective[0];
    for &e in &effective[1..] {
        if e > top {
            top = e;
        }
    }
    let ties = effective.iter().filter(|&&e| e == top).count();
    let share = 1.0 / ties as f64;

    let mut win_probability = vec![0.0; n];
    let mut price = vec![0.0; n];
    let mut utility = vec![0.0; n];
    for i in 0..n {
        price[i] = instance.discount.winning_price(i, instance.bids[i]);
        if effective[i] == top {
            win_probability[i] = share;
        }
        utility[i] = win_probability[i] * (instance.valuations[i] - price[i]);
    }
    Ok(AuctionResult { win_probability, price, utility })
}

//! Recovery of valuation distributions from first-price bid logs.
//!
//! The pipeline inverts each observed bid through the bidder's first-order
//! condition: given the distribution of the best opposing bid, a rational bid
//! reveals the valuation that makes it optimal. Pseudo-valuations recovered
//! this way are then fitted with a log-normal by maximum likelihood, one
//! distribution per bidder class.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io;

use crate::dist::{fit_lognormal_mle, LogNormalFit};
use crate::error::{Error, Result};

/// Fewest bids a class may have before density estimation is refused.
pub const MIN_CLASS_SAMPLES: usize = 100;
/// Evaluation grid resolution for the kernel estimates.
const GRID_NODES: usize = 4096;
/// Gaussian kernel support cutoff, in bandwidths.
const KERNEL_CUTOFF: f64 = 8.0;

/// Observed bidder classes. Exactly one bidder per auction is assumed to
/// hold the discount; everyone else is `Other`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BidderClass {
    Discounted,
    Other,
}

impl BidderClass {
    pub fn parse(token: &str) -> Option<BidderClass> {
        match token {
            "discounted" => Some(BidderClass::Discounted),
            "other" => Some(BidderClass::Other),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            BidderClass::Discounted => "discounted",
            BidderClass::Other => "other",
        }
    }
}

/// One row of a bid log.
#[derive(Debug, Clone, PartialEq)]
pub struct BidRecord {
    pub auction_id: String,
    pub class: BidderClass,
    pub bid: f64,
}

/// A malformed input row, kept out of the record stream but reported.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

/// Parsed bid log plus the rows that failed validation.
#[derive(Debug, Clone)]
pub struct IngestReport {
    pub records: Vec<BidRecord>,
    pub row_errors: Vec<RowError>,
}

/// Streams a CSV bid log with header `auction_id,bidder_class,bid`.
///
/// Rows are validated as they are read; a bad row lands in `row_errors` with
/// its line number and parsing continues. Only a missing or wrong header
/// fails the whole file.
pub fn ingest<R: io::Read>(reader: R) -> Result<IngestReport> {
    let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| Error::estimation(format!("cannot read bid log header: {e}")))?;
    let expected = ["auction_id", "bidder_class", "bid"];
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::estimation(format!(
            "bid log must start with header {}, got {}",
            expected.join(","),
            got.join(",")
        )));
    }

    let mut records = Vec::new();
    let mut row_errors = Vec::new();
    for row in csv_reader.into_records() {
        match row {
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                row_errors.push(RowError { line, message: e.to_string() });
            }
            Ok(row) => {
                let line = row.position().map_or(0, |p| p.line());
                match parse_row(&row) {
                    Ok(record) => records.push(record),
                    Err(message) => row_errors.push(RowError { line, message }),
                }
            }
        }
    }
    Ok(IngestReport { records, row_errors })
}

fn parse_row(row: &csv::StringRecord) -> std::result::Result<BidRecord, String> {
    if row.len() != 3 {
        return Err(format!("expected 3 fields, got {}", row.len()));
    }
    let auction_id = row[0].trim();
    if auction_id.is_empty() {
        return Err("empty auction id".to_string());
    }
    let class = BidderClass::parse(row[1].trim())
        .ok_or_else(|| format!("unknown bidder class {:?}", &row[1]))?;
    let bid: f64 = row[2]
        .trim()
        .parse()
        .map_err(|_| format!("unparseable bid {:?}", &row[2]))?;
    if !bid.is_finite() || bid <= 0.0 {
        return Err(format!("bid must be positive, got {bid}"));
    }
    Ok(BidRecord { auction_id: auction_id.to_string(), class, bid })
}

/// Settings for one estimation run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimationConfig {
    /// Price-reduction rate the discounted class bids under.
    pub r: f64,
    /// Kernel bandwidth for both classes; `None` picks Silverman's rule
    /// per class.
    pub kernel_bandwidth: Option<f64>,
    /// Bidders per auction, exactly one of them discounted.
    pub n_total: usize,
    /// Bid quantiles outside which records are dropped before inversion,
    /// suppressing kernel boundary bias.
    pub trim_quantiles: (f64, f64),
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            r: 0.05,
            kernel_bandwidth: None,
            n_total: 5,
            trim_quantiles: (0.01, 0.99),
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.r.is_finite() || !(0.0..1.0).contains(&self.r) {
            return Err(Error::estimation(format!("discount rate must be in [0, 1), got {}", self.r)));
        }
        if self.n_total < 2 {
            return Err(Error::estimation("need at least two bidders per auction"));
        }
        if let Some(h) = self.kernel_bandwidth {
            if !h.is_finite() || h <= 0.0 {
                return Err(Error::estimation(format!("kernel bandwidth must be positive, got {h}")));
            }
        }
        let (lo, hi) = self.trim_quantiles;
        if !(0.0..1.0).contains(&lo) || !(lo..=1.0).contains(&hi) || hi > 1.0 || lo >= hi {
            return Err(Error::estimation(format!("trim quantiles must satisfy 0 <= lo < hi <= 1, got ({lo}, {hi})")));
        }
        Ok(())
    }
}

/// Kernel estimate of one class's marginal bid distribution.
///
/// The density is a Gaussian kernel estimate tabulated on a uniform grid;
/// the smooth cdf is its running integral, so the (cdf, density) pair is
/// derivative-consistent everywhere. The raw empirical cdf stays available
/// separately.
#[derive(Debug, Clone)]
pub struct BidDensity {
    sorted: Vec<f64>,
    bandwidth: f64,
    grid_lo: f64,
    grid_step: f64,
    pdf_grid: Vec<f64>,
    cdf_grid: Vec<f64>,
}

impl BidDensity {
    pub fn from_samples(samples: &[f64], bandwidth: Option<f64>) -> Result<BidDensity> {
        if samples.len() < MIN_CLASS_SAMPLES {
            return Err(Error::estimation(format!(
                "density estimation needs at least {MIN_CLASS_SAMPLES} bids, got {}",
                samples.len()
            )));
        }
        if let Some(&bad) = samples.iter().find(|x| !x.is_finite() || **x <= 0.0) {
            return Err(Error::estimation(format!("bids must be positive, got {bad}")));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        let bandwidth = match bandwidth {
            Some(h) => h,
            None => silverman_bandwidth(&sorted)?,
        };
        if !bandwidth.is_finite() || bandwidth <= 0.0 {
            return Err(Error::estimation(format!("kernel bandwidth must be positive, got {bandwidth}")));
        }

        let lo = sorted[0] - KERNEL_CUTOFF * bandwidth;
        let hi = sorted[sorted.len() - 1] + KERNEL_CUTOFF * bandwidth;
        let step = (hi - lo) / (GRID_NODES - 1) as f64;

        // Linear binning, then one pass of kernel weights per node.
        let mut mass = vec![0.0; GRID_NODES];
        let inv_n = 1.0 / sorted.len() as f64;
        for &x in &sorted {
            let t = (x - lo) / step;
            let j = (t as usize).min(GRID_NODES - 2);
            let frac = (t - j as f64).clamp(0.0, 1.0);
            mass[j] += (1.0 - frac) * inv_n;
            mass[j + 1] += frac * inv_n;
        }
        let cutoff_bins = ((KERNEL_CUTOFF * bandwidth / step).ceil() as usize).min(GRID_NODES);
        let norm = 1.0 / (bandwidth * (2.0 * std::f64::consts::PI).sqrt());
        let mut pdf_grid = vec![0.0; GRID_NODES];
        for (j, &w) in mass.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let first = j.saturating_sub(cutoff_bins);
            let last = (j + cutoff_bins).min(GRID_NODES - 1);
            for (i, node) in pdf_grid.iter_mut().enumerate().take(last + 1).skip(first) {
                let z = (i as f64 - j as f64) * step / bandwidth;
                *node += w * norm * (-0.5 * z * z).exp();
            }
        }

        let mut cdf_grid = vec![0.0; GRID_NODES];
        for i in 1..GRID_NODES {
            cdf_grid[i] = cdf_grid[i - 1] + 0.5 * (pdf_grid[i - 1] + pdf_grid[i]) * step;
        }
        let total = cdf_grid[GRID_NODES - 1];
        if total <= 0.0 {
            return Err(Error::estimation("kernel estimate collapsed to zero mass"));
        }
        for i in 0..GRID_NODES {
            pdf_grid[i] /= total;
            cdf_grid[i] /= total;
        }

        Ok(BidDensity { sorted, bandwidth, grid_lo: lo, grid_step: step, pdf_grid, cdf_grid })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn sample_count(&self) -> usize {
        self.sorted.len()
    }

    /// Fraction of observed bids at or below `x`, as a step function.
    pub fn empirical_cdf(&self, x: f64) -> f64 {
        let below = self.sorted.partition_point(|&b| b <= x);
        below as f64 / self.sorted.len() as f64
    }

    /// Interpolated quantile of the observed bids.
    pub fn empirical_quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let t = p.clamp(0.0, 1.0) * (n - 1) as f64;
        let j = (t as usize).min(n - 2);
        let frac = t - j as f64;
        self.sorted[j] * (1.0 - frac) + self.sorted[j + 1] * frac
    }

    /// Smoothed bid density.
    pub fn pdf(&self, x: f64) -> f64 {
        let t = (x - self.grid_lo) / self.grid_step;
        if t <= 0.0 || t >= (GRID_NODES - 1) as f64 {
            return 0.0;
        }
        let j = t as usize;
        let frac = t - j as f64;
        self.pdf_grid[j] * (1.0 - frac) + self.pdf_grid[j + 1] * frac
    }

    /// Smoothed bid cdf: the exact running integral of [`Self::pdf`], so
    /// finite differences of this function reproduce the density.
    pub fn cdf(&self, x: f64) -> f64 {
        let t = (x - self.grid_lo) / self.grid_step;
        if t <= 0.0 {
            return 0.0;
        }
        if t >= (GRID_NODES - 1) as f64 {
            return 1.0;
        }
        let j = t as usize;
        let frac = t - j as f64;
        let p_here = self.pdf_grid[j] * (1.0 - frac) + self.pdf_grid[j + 1] * frac;
        self.cdf_grid[j] + 0.5 * (self.pdf_grid[j] + p_here) * frac * self.grid_step
    }
}

fn silverman_bandwidth(sorted: &[f64]) -> Result<f64> {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    let q = |p: f64| {
        let t = p * (sorted.len() - 1) as f64;
        let j = (t as usize).min(sorted.len() - 2);
        let frac = t - j as f64;
        sorted[j] * (1.0 - frac) + sorted[j + 1] * frac
    };
    let iqr = q(0.75) - q(0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * n.powf(-0.2);
    if h <= 0.0 {
        return Err(Error::estimation("bids are degenerate; kernel bandwidth collapsed to zero"));
    }
    Ok(h)
}

/// Distribution of the strongest opposing bid for each class, assuming
/// `n_total` independent participants with exactly one discounted.
pub struct OpposingMax<'a> {
    pub discounted: &'a BidDensity,
    pub other: &'a BidDensity,
    pub n_total: usize,
}

impl OpposingMax<'_> {
    /// Cdf and density of the best opposing bid at `b`, from the viewpoint
    /// of `class`.
    pub fn at(&self, class: BidderClass, b: f64) -> (f64, f64) {
        let g_o = self.other.cdf(b);
        let d_o = self.other.pdf(b);
        match class {
            BidderClass::Discounted => {
                let k = self.n_total - 1;
                let m = g_o.powi(k as i32);
                let m_prime = k as f64 * powi_or_one(g_o, k as i32 - 1) * d_o;
                (m, m_prime)
            }
            BidderClass::Other => {
                let g_d = self.discounted.cdf(b);
                let d_d = self.discounted.pdf(b);
                let k = self.n_total - 2;
                let m = g_d * powi_or_one(g_o, k as i32);
                let mut m_prime = d_d * powi_or_one(g_o, k as i32);
                if k > 0 {
                    m_prime += g_d * k as f64 * powi_or_one(g_o, k as i32 - 1) * d_o;
                }
                (m, m_prime)
            }
        }
    }
}

fn powi_or_one(x: f64, e: i32) -> f64 {
    if e <= 0 {
        1.0
    } else {
        x.powi(e)
    }
}

/// Valuation revealed by a bid through the first-order condition.
///
/// A discounted bidder pays `(1-r)b`, so its optimal bid satisfies
/// `v = (1-r)b + (1-r)M/M'`; an undiscounted bidder's satisfies
/// `v = b + M/M'`.
pub fn pseudo_value(class: BidderClass, bid: f64, m: f64, m_prime: f64, r: f64) -> Result<f64> {
    if !(m_prime > 0.0) {
        return Err(Error::estimation(format!(
            "opposing-bid density must be positive at the bid, got {m_prime}"
        )));
    }
    let markup = m / m_prime;
    Ok(match class {
        BidderClass::Discounted => (1.0 - r) * (bid + markup),
        BidderClass::Other => bid + markup,
    })
}

/// Normalized first-order-condition residual at a recovered `(bid, value)`
/// pair: a centered finite difference of the bidder's expected utility in
/// its own bid, divided by the scale of the two terms that should cancel.
pub fn foc_residual(
    class: BidderClass,
    bid: f64,
    value: f64,
    opposing: &OpposingMax<'_>,
    r: f64,
) -> f64 {
    let price_rate = match class {
        BidderClass::Discounted => 1.0 - r,
        BidderClass::Other => 1.0,
    };
    let h = self_min_bandwidth(opposing) / 256.0;
    let utility = |b: f64| {
        let (m, _) = opposing.at(class, b);
        (value - price_rate * b) * m
    };
    let derivative = (utility(bid + h) - utility(bid - h)) / (2.0 * h);
    let (m, m_prime) = opposing.at(class, bid);
    let scale = price_rate * m + (value - price_rate * bid).abs() * m_prime;
    derivative.abs() / scale.max(f64::MIN_POSITIVE)
}

fn self_min_bandwidth(opposing: &OpposingMax<'_>) -> f64 {
    opposing.discounted.bandwidth().min(opposing.other.bandwidth())
}

/// Fitted parameters and diagnostics for one bidder class.
#[derive(Debug, Clone)]
pub struct ClassEstimate {
    pub class: BidderClass,
    pub sigma: f64,
    pub m: f64,
    pub degenerate: bool,
    pub bandwidth: f64,
    /// Records of this class in the input.
    pub input_count: usize,
    /// Records surviving all trims; the size of `pseudo_values`.
    pub sample_count: usize,
    /// Records dropped by the quantile trim, a nonpositive opposing-bid
    /// density, or a monotonicity violation.
    pub trimmed_count: usize,
    /// How many of the trimmed records broke bid-value monotonicity.
    pub monotonicity_violations: usize,
    /// Largest normalized first-order-condition residual among retained
    /// records.
    pub max_foc_residual: f64,
    pub pseudo_values: Vec<f64>,
}

/// Output of [`run_estimation`].
#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub discounted: ClassEstimate,
    pub other: ClassEstimate,
}

impl EstimationResult {
    pub fn classes(&self) -> [&ClassEstimate; 2] {
        [&self.discounted, &self.other]
    }

    /// Structured text summary, one block per class.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for est in self.classes() {
            let _ = writeln!(out, "class={}", est.class.label());
            let _ = writeln!(out, "  sigma={:.6}", est.sigma);
            let _ = writeln!(out, "  m={:.6}", est.m);
            let _ = writeln!(out, "  sample_count={}", est.sample_count);
            let _ = writeln!(out, "  trimmed_count={}", est.trimmed_count);
            let _ = writeln!(out, "  bandwidth={:.6}", est.bandwidth);
            let _ = writeln!(out, "  max_foc_residual={:.3e}", est.max_foc_residual);
            if est.degenerate {
                let _ = writeln!(out, "  degenerate=true");
            }
        }
        out
    }
}

/// Runs the full recovery: density estimation per class, first-order
///-condition inversion per record, trimming, and a log-normal fit.
pub fn run_estimation(records: &[BidRecord], cfg: &EstimationConfig) -> Result<EstimationResult> {
    cfg.validate()?;
    let mut per_auction: HashMap<&str, usize> = HashMap::new();
    for record in records {
        *per_auction.entry(record.auction_id.as_str()).or_insert(0) += 1;
    }
    if let Some((id, count)) = per_auction.iter().find(|(_, &c)| c < 2) {
        return Err(Error::estimation(format!(
            "auction {id} has {count} record(s); every auction needs at least two"
        )));
    }

    let disc_bids: Vec<f64> = records
        .iter()
        .filter(|r| r.class == BidderClass::Discounted)
        .map(|r| r.bid)
        .collect();
    let other_bids: Vec<f64> = records
        .iter()
        .filter(|r| r.class == BidderClass::Other)
        .map(|r| r.bid)
        .collect();
    if disc_bids.is_empty() || other_bids.is_empty() {
        return Err(Error::estimation("both bidder classes must appear in the bid log"));
    }

    let disc_density = BidDensity::from_samples(&disc_bids, cfg.kernel_bandwidth)?;
    let other_density = BidDensity::from_samples(&other_bids, cfg.kernel_bandwidth)?;
    let opposing = OpposingMax {
        discounted: &disc_density,
        other: &other_density,
        n_total: cfg.n_total,
    };

    let discounted = estimate_class(BidderClass::Discounted, &disc_bids, &disc_density, &opposing, cfg)?;
    let other = estimate_class(BidderClass::Other, &other_bids, &other_density, &opposing, cfg)?;
    Ok(EstimationResult { discounted, other })
}

fn estimate_class(
    class: BidderClass,
    bids: &[f64],
    density: &BidDensity,
    opposing: &OpposingMax<'_>,
    cfg: &EstimationConfig,
) -> Result<ClassEstimate> {
    let r = if class == BidderClass::Discounted { cfg.r } else { 0.0 };
    let lo = density.empirical_quantile(cfg.trim_quantiles.0);
    let hi = density.empirical_quantile(cfg.trim_quantiles.1);

    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(bids.len());
    let mut max_residual: f64 = 0.0;
    for &bid in bids {
        if bid < lo || bid > hi {
            continue;
        }
        let (m, m_prime) = opposing.at(class, bid);
        let Ok(value) = pseudo_value(class, bid, m, m_prime, r) else {
            continue;
        };
        max_residual = max_residual.max(foc_residual(class, bid, value, opposing, r));
        pairs.push((bid, value));
    }
    let monotonicity_violations = drop_nonmonotone(&mut pairs);
    let pseudo_values: Vec<f64> = pairs.into_iter().map(|(_, v)| v).collect();
    if pseudo_values.len() < 2 {
        return Err(Error::estimation(format!(
            "class {} kept {} pseudo-value(s) after trimming; cannot fit",
            class.label(),
            pseudo_values.len()
        )));
    }

    let LogNormalFit { sigma, scale, degenerate } = fit_lognormal_mle(&pseudo_values)?;
    Ok(ClassEstimate {
        class,
        sigma,
        m: scale,
        degenerate,
        bandwidth: density.bandwidth(),
        input_count: bids.len(),
        sample_count: pseudo_values.len(),
        trimmed_count: bids.len() - pseudo_values.len(),
        monotonicity_violations,
        max_foc_residual: max_residual,
        pseudo_values,
    })
}

/// Sorts by bid and drops pairs whose value falls below the running
/// maximum, returning how many were removed. The inversion should be
/// monotone; violations mark records the density estimate cannot place.
fn drop_nonmonotone(pairs: &mut Vec<(f64, f64)>) -> usize {
    pairs.sort_unstable_by(|a, b| f64::total_cmp(&a.0, &b.0));
    let before = pairs.len();
    let mut best = f64::MIN;
    pairs.retain(|&(_, v)| {
        if v < best {
            false
        } else {
            best = v;
            true
        }
    });
    before - pairs.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pseudo_value_matches_closed_form_markups() {
        // Four iid uniform opponents: M(b) = b^4, M/M' = b/4.
        let b: f64 = 0.4;
        let (m, m_prime) = (b.powi(4), 4.0 * b.powi(3));
        let v = pseudo_value(BidderClass::Other, b, m, m_prime, 0.0).unwrap();
        assert!((v - 0.5).abs() < 1e-12);

        let b: f64 = 0.5;
        let (m, m_prime) = (b.powi(4), 4.0 * b.powi(3));
        let v = pseudo_value(BidderClass::Discounted, b, m, m_prime, 0.2).unwrap();
        assert!((v - 0.5).abs() < 1e-12);

        assert!(pseudo_value(BidderClass::Other, 0.4, 0.1, 0.0, 0.0).is_err());
        assert!(pseudo_value(BidderClass::Other, 0.4, 0.1, -1.0, 0.0).is_err());
    }

    /// The inversion formula against a finite-difference check on analytic
    /// opposing-bid distributions: at v = v̂ the utility derivative in b
    /// must vanish.
    #[test]
    fn pseudo_value_sits_at_the_utility_stationary_point() {
        let h = 1e-6;
        for &(class, r) in &[
            (BidderClass::Other, 0.0),
            (BidderClass::Discounted, 0.2),
            (BidderClass::Discounted, 0.05),
        ] {
            let price_rate = if class == BidderClass::Discounted { 1.0 - r } else { 1.0 };
            for &b in &[0.3f64, 0.5, 0.7] {
                let m = |x: f64| x.powi(4);
                let m_prime = 4.0 * b.powi(3);
                let v = pseudo_value(class, b, m(b), m_prime, r).unwrap();
                let utility = |x: f64| (v - price_rate * x) * m(x);
                let derivative = (utility(b + h) - utility(b - h)) / (2.0 * h);
                assert!(derivative.abs() < 1e-6, "class {class:?} b={b}: residual {derivative}");
            }
        }
    }

    fn uniform_samples(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| 1e-9 + rng.gen::<f64>()).collect()
    }

    #[test]
    fn kernel_density_is_consistent_on_uniform_samples() {
        let samples = uniform_samples(100_000, 11);
        let density = BidDensity::from_samples(&samples, None).unwrap();
        assert!((density.pdf(0.5) - 1.0).abs() < 0.05);
        assert!((density.cdf(0.5) - 0.5).abs() < 0.01);
        let median = density.empirical_quantile(0.5);
        assert!((density.empirical_cdf(median) - 0.5).abs() < 2.0 / (samples.len() as f64).sqrt());
        assert!(density.cdf(2.0) == 1.0 && density.cdf(-1.0) == 0.0);
        let mut prev = -1.0;
        for i in 0..=50 {
            let x = i as f64 / 50.0;
            let c = density.cdf(x);
            assert!(c >= prev && (0.0..=1.0).contains(&c));
            assert!(density.pdf(x) >= 0.0);
            prev = c;
        }
    }

    /// The smooth cdf must be the running integral of the smooth density:
    /// central differences of one reproduce the other well inside the
    /// tolerance the inversion relies on.
    #[test]
    fn smooth_cdf_differentiates_to_the_density() {
        let samples = uniform_samples(5_000, 12);
        let density = BidDensity::from_samples(&samples, None).unwrap();
        let h = density.bandwidth() / 256.0;
        for i in 1..20 {
            let x = i as f64 / 20.0;
            let fd = (density.cdf(x + h) - density.cdf(x - h)) / (2.0 * h);
            let g = density.pdf(x);
            assert!((fd - g).abs() <= 1e-4 * g.max(1.0), "x={x}: fd {fd} vs pdf {g}");
        }
    }

    #[test]
    fn opposing_max_matches_simulated_maxima() {
        let samples = uniform_samples(50_000, 13);
        let density = BidDensity::from_samples(&samples, None).unwrap();
        let opposing = OpposingMax { discounted: &density, other: &density, n_total: 5 };
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let trials = 50_000;
        for &probe in &[0.5, 0.7, 0.9] {
            let hits = (0..trials)
                .filter(|_| (0..4).all(|_| rng.gen::<f64>() < probe))
                .count();
            let simulated = hits as f64 / trials as f64;
            let (m, _) = opposing.at(BidderClass::Discounted, probe);
            assert!((m - simulated).abs() < 0.02, "probe {probe}: {m} vs {simulated}");
        }
    }

    #[test]
    fn density_estimation_rejects_bad_samples() {
        assert!(BidDensity::from_samples(&[1.0; 10], None).is_err());
        let negatives: Vec<f64> = (0..200).map(|i| i as f64 - 100.0).collect();
        assert!(BidDensity::from_samples(&negatives, None).is_err());
        let degenerate = vec![2.5; 200];
        assert!(BidDensity::from_samples(&degenerate, None).is_err());
        let fine: Vec<f64> = (1..=200).map(|i| i as f64).collect();
        assert!(BidDensity::from_samples(&fine, Some(-1.0)).is_err());
        assert!(BidDensity::from_samples(&fine, Some(5.0)).is_ok());
    }

    #[test]
    fn ingest_collects_row_errors_with_line_numbers() {
        let data = "auction_id,bidder_class,bid\n\
                    a1,other,2.50\n\
                    a1,discounted,-1\n\
                    a2,stranger,1.0\n\
                    a2,other,abc\n\
                    a2,other,3.25\n";
        let report = ingest(data.as_bytes()).unwrap();
        assert_eq!(report.records.len(), 2);
        assert_eq!(
            report.records[0],
            BidRecord { auction_id: "a1".into(), class: BidderClass::Other, bid: 2.50 }
        );
        assert_eq!(report.records[1].bid, 3.25);
        let lines: Vec<u64> = report.row_errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![3, 4, 5]);
    }

    #[test]
    fn ingest_requires_the_exact_header() {
        assert!(ingest("auction,class,bid\na1,other,1.0\n".as_bytes()).is_err());
        assert!(ingest("".as_bytes()).is_err());
    }

    fn synthetic_records(auctions: usize, seed: u64) -> Vec<BidRecord> {
        // Five uniform-valuation bidders per auction, all bidding the
        // undiscounted equilibrium 0.8v; one labeled discounted with r = 0,
        // which shares the same first-order condition.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut records = Vec::new();
        for a in 0..auctions {
            for i in 0..5 {
                let v: f64 = 1e-9 + rng.gen::<f64>();
                let class = if i == 0 { BidderClass::Discounted } else { BidderClass::Other };
                records.push(BidRecord {
                    auction_id: format!("a{a}"),
                    class,
                    bid: 0.8 * v,
                });
            }
        }
        records
    }

    /// Uniform valuations, equilibrium bids 0.8v, no discount: the
    /// recovered pseudo-values should reproduce v = 1.25 b across the
    /// retained interior.
    #[test]
    fn inversion_recovers_uniform_valuations() {
        let records = synthetic_records(4_000, 21);
        let cfg = EstimationConfig { r: 0.0, ..EstimationConfig::default() };
        let result = run_estimation(&records, &cfg).unwrap();
        for est in result.classes() {
            assert!(est.sample_count > est.input_count / 2);
            assert!(est.max_foc_residual < 1e-4, "residual {}", est.max_foc_residual);
            assert!(!est.degenerate);
        }
        // Check the inversion itself on the mid-quantile pseudo-values:
        // values are uniform on (0,1), so their upper half should average
        // about 0.75 and the overall mean about 0.5.
        let vals = &result.other.pseudo_values;
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean pseudo-value {mean}");
    }

    #[test]
    fn identical_classes_estimate_nearly_identical_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut records = Vec::new();
        for a in 0..12_000 {
            for i in 0..5 {
                let z: f64 = rng.gen::<f64>();
                let w: f64 = rng.gen::<f64>();
                let normal = (-2.0 * z.max(1e-12).ln()).sqrt()
                    * (2.0 * std::f64::consts::PI * w).cos();
                let class = if i == 0 { BidderClass::Discounted } else { BidderClass::Other };
                records.push(BidRecord {
                    auction_id: format!("a{a}"),
                    class,
                    bid: 2.0 * (0.3 * normal).exp(),
                });
            }
        }
        let cfg = EstimationConfig { r: 0.0, ..EstimationConfig::default() };
        let result = run_estimation(&records, &cfg).unwrap();
        let rel_sigma = (result.discounted.sigma - result.other.sigma).abs() / result.other.sigma;
        let rel_m = (result.discounted.m - result.other.m).abs() / result.other.m;
        assert!(rel_sigma < 0.03, "sigma gap {rel_sigma}");
        assert!(rel_m < 0.03, "m gap {rel_m}");
    }

    #[test]
    fn scaling_bids_scales_values_and_leaves_sigma_alone() {
        let records = synthetic_records(1_000, 41);
        let cfg = EstimationConfig { r: 0.0, ..EstimationConfig::default() };
        let base = run_estimation(&records, &cfg).unwrap();
        let c = 3.7;
        let scaled_records: Vec<BidRecord> = records
            .iter()
            .map(|r| BidRecord { bid: c * r.bid, ..r.clone() })
            .collect();
        let scaled = run_estimation(&scaled_records, &cfg).unwrap();
        for (a, b) in base.classes().iter().zip(scaled.classes()) {
            assert_eq!(a.sample_count, b.sample_count);
            assert!((a.sigma - b.sigma).abs() < 1e-9, "sigma moved: {} vs {}", a.sigma, b.sigma);
            assert!(((b.m / a.m) - c).abs() < 1e-9 * c, "m ratio {}", b.m / a.m);
            for (x, y) in a.pseudo_values.iter().zip(&b.pseudo_values) {
                assert!((y / x - c).abs() < 1e-9 * c);
            }
        }
    }

    #[test]
    fn run_estimation_rejects_structural_problems() {
        let records = synthetic_records(100, 51);
        let cfg = EstimationConfig::default();

        let only_other: Vec<BidRecord> =
            records.iter().filter(|r| r.class == BidderClass::Other).cloned().collect();
        assert!(run_estimation(&only_other, &cfg).is_err());

        let mut with_singleton = records.clone();
        with_singleton.push(BidRecord {
            auction_id: "lonely".into(),
            class: BidderClass::Other,
            bid: 1.0,
        });
        assert!(run_estimation(&with_singleton, &cfg).is_err());

        let bad_cfg = EstimationConfig { n_total: 1, ..EstimationConfig::default() };
        assert!(run_estimation(&records, &bad_cfg).is_err());
        let bad_trim = EstimationConfig { trim_quantiles: (0.9, 0.1), ..EstimationConfig::default() };
        assert!(run_estimation(&records, &bad_trim).is_err());
    }

    #[test]
    fn nonmonotone_pairs_are_dropped_and_counted() {
        let mut pairs = vec![(3.0, 2.0), (1.0, 1.0), (2.0, 0.5), (4.0, 2.5)];
        let dropped = drop_nonmonotone(&mut pairs);
        assert_eq!(dropped, 1);
        assert_eq!(pairs, vec![(1.0, 1.0), (3.0, 2.0), (4.0, 2.5)]);
        let mut fine = vec![(1.0, 1.0), (2.0, 2.0)];
        assert_eq!(drop_nonmonotone(&mut fine), 0);
    }
}

//! Expected-cost calculus for hard completion vs. adaptive placeholding.
//!
//! A wrong concrete token costs `c_hc` to correct (spot the error, delete,
//! navigate, retype); filling an explicit placeholder costs `c_pc`. The
//! whole calculus rests on `0 < c_pc < c_hc`. Under greedy decoding the
//! per-position miss probability is `1 - p_max`, which gives closed forms
//! for the expected cost of always completing hard, of any placeholder
//! mask, and for the confidence threshold `theta = 1 - c_pc/c_hc` below
//! which placeholding is the cheaper move. In entropy terms the switch
//! point is `h_star = ln(c_hc / (c_hc - c_pc))`: on a K-way uniform
//! distribution placeholding wins per step exactly when `ln K > h_star`.
//! [`verify_theorem`] checks that sign law by brute-force expectation.

use std::collections::BTreeMap;
use thiserror::Error;

use crate::cursor::CURSOR_STR;

#[derive(Debug, Error, PartialEq)]
pub enum CostModelError {
    /// The cost ordering `0 < c_pc < c_hc` does not hold.
    #[error("cost assumption violated: need 0 < c_pc < c_hc, got c_pc={c_pc}, c_hc={c_hc}")]
    AssumptionViolated { c_hc: f64, c_pc: f64 },
    #[error("confidence {0} outside [0, 1]")]
    InvalidConfidence(f64),
    #[error("mask length {mask} does not match confidence length {confidences}")]
    LengthMismatch { confidences: usize, mask: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
}

/// Per-step user-effort costs. Constructing the pair enforces the
/// ordering `0 < c_pc < c_hc`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    c_hc: f64,
    c_pc: f64,
}

impl CostParams {
    pub fn new(c_hc: f64, c_pc: f64) -> Result<Self, CostModelError> {
        if !(c_pc > 0.0 && c_pc < c_hc) || !c_hc.is_finite() || !c_pc.is_finite() {
            return Err(CostModelError::AssumptionViolated { c_hc, c_pc });
        }
        Ok(CostParams { c_hc, c_pc })
    }

    pub fn c_hc(&self) -> f64 {
        self.c_hc
    }

    pub fn c_pc(&self) -> f64 {
        self.c_pc
    }

    /// Confidence threshold `1 - c_pc/c_hc` below which a placeholder has
    /// positive expected benefit.
    pub fn confidence_threshold(&self) -> f64 {
        1.0 - self.c_pc / self.c_hc
    }
}

/// A probability distribution over candidate next tokens.
///
/// Entries are non-negative and sum to 1 within 1e-9. Keys are kept
/// sorted so argmax ties resolve to the lexicographically smallest token.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenDistribution {
    probs: BTreeMap<String, f64>,
}

impl TokenDistribution {
    pub fn new(probs: BTreeMap<String, f64>) -> Result<Self, CostModelError> {
        if probs.is_empty() {
            return Err(CostModelError::InvalidDistribution(
                "no candidates".to_string(),
            ));
        }
        let mut sum = 0.0;
        for (token, &p) in &probs {
            if !p.is_finite() || p < 0.0 {
                return Err(CostModelError::InvalidDistribution(format!(
                    "probability {p} for token {token:?}"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CostModelError::InvalidDistribution(format!(
                "probabilities sum to {sum}"
            )));
        }
        Ok(TokenDistribution { probs })
    }

    /// Equal mass on each of the given tokens.
    pub fn uniform<I, S>(tokens: I) -> Result<Self, CostModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let keys: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if keys.is_empty() {
            return Err(CostModelError::InvalidDistribution(
                "no candidates".to_string(),
            ));
        }
        let p = 1.0 / keys.len() as f64;
        let map: BTreeMap<String, f64> = keys.into_iter().map(|t| (t, p)).collect();
        Self::new(map)
    }

    pub fn probs(&self) -> &BTreeMap<String, f64> {
        &self.probs
    }

    /// Argmax token and its probability; ties go to the lexicographically
    /// smallest token.
    pub fn p_max(&self) -> (&str, f64) {
        let mut best: Option<(&str, f64)> = None;
        for (token, &p) in &self.probs {
            match best {
                Some((_, bp)) if p <= bp => {}
                _ => best = Some((token, p)),
            }
        }
        best.expect("distribution is non-empty")
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        let h: f64 = self
            .probs
            .values()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum();
        h + 0.0 // a lone point mass sums to IEEE -0.0
    }
}

/// Shannon entropy of a distribution, in nats.
pub fn shannon_entropy(dist: &TokenDistribution) -> f64 {
    dist.entropy()
}

/// Binary placeholder mask, one bit per position (`true` = placeholder).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskVector {
    bits: Vec<bool>,
}

impl MaskVector {
    pub fn new(bits: Vec<bool>) -> Self {
        MaskVector { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

impl From<Vec<bool>> for MaskVector {
    fn from(bits: Vec<bool>) -> Self {
        MaskVector { bits }
    }
}

/// Cost of a single emitted token against the intended one: zero on a
/// match, `c_pc` for the placeholder, `c_hc` for a concrete mismatch.
pub fn step_cost(pred_token: &str, truth_token: &str, params: &CostParams) -> f64 {
    if pred_token == truth_token {
        0.0
    } else if pred_token == CURSOR_STR {
        params.c_pc()
    } else {
        params.c_hc()
    }
}

fn check_confidences(pmax: &[f64]) -> Result<(), CostModelError> {
    for &p in pmax {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(CostModelError::InvalidConfidence(p));
        }
    }
    Ok(())
}

/// Expected cost of hard-completing every position:
/// `sum_i c_hc * (1 - pmax_i)`.
pub fn expected_cost_hc(pmax: &[f64], params: &CostParams) -> Result<f64, CostModelError> {
    check_confidences(pmax)?;
    Ok(pmax.iter().map(|&p| params.c_hc() * (1.0 - p)).sum())
}

/// Expected cost under a placeholder mask:
/// `sum_i [m_i * c_pc + (1 - m_i) * c_hc * (1 - pmax_i)]`.
pub fn expected_cost_apc(
    pmax: &[f64],
    mask: &MaskVector,
    params: &CostParams,
) -> Result<f64, CostModelError> {
    check_confidences(pmax)?;
    if pmax.len() != mask.len() {
        return Err(CostModelError::LengthMismatch {
            confidences: pmax.len(),
            mask: mask.len(),
        });
    }
    Ok(pmax
        .iter()
        .zip(mask.bits())
        .map(|(&p, &m)| {
            if m {
                params.c_pc()
            } else {
                params.c_hc() * (1.0 - p)
            }
        })
        .sum())
}

/// Per-position benefit of placeholding over hard completion:
/// `delta_i = c_hc * (1 - pmax_i) - c_pc`.
pub fn per_position_benefit(pmax_i: f64, params: &CostParams) -> f64 {
    params.c_hc() * (1.0 - pmax_i) - params.c_pc()
}

/// The cost-minimizing mask: placehold exactly where confidence falls
/// strictly below the threshold `1 - c_pc/c_hc` (a tie keeps the hard
/// completion).
pub fn optimal_mask(pmax: &[f64], params: &CostParams) -> MaskVector {
    let theta = params.confidence_threshold();
    MaskVector::new(pmax.iter().map(|&p| p < theta).collect())
}

/// Expected benefit of the masked strategy over plain hard completion,
/// computed as the mask-weighted sum of per-position benefits.
pub fn benefit(
    pmax: &[f64],
    mask: &MaskVector,
    params: &CostParams,
) -> Result<f64, CostModelError> {
    check_confidences(pmax)?;
    if pmax.len() != mask.len() {
        return Err(CostModelError::LengthMismatch {
            confidences: pmax.len(),
            mask: mask.len(),
        });
    }
    Ok(pmax
        .iter()
        .zip(mask.bits())
        .map(|(&p, &m)| if m { per_position_benefit(p, params) } else { 0.0 })
        .sum())
}

/// Critical entropy threshold `ln(c_hc / (c_hc - c_pc))` in nats.
pub fn entropy_threshold(params: &CostParams) -> f64 {
    (params.c_hc() / (params.c_hc() - params.c_pc())).ln()
}

/// Which strategy wins a [`TheoremRow`] comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    Hc,
    Pc,
    Tie,
}

impl Winner {
    pub fn as_str(&self) -> &'static str {
        match self {
            Winner::Hc => "hc",
            Winner::Pc => "pc",
            Winner::Tie => "tie",
        }
    }
}

/// One row of the brute-force sign-law check on a K-way uniform
/// distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremRow {
    pub k: usize,
    /// Entropy of the uniform-K distribution (equals ln K).
    pub entropy: f64,
    pub h_star: f64,
    /// Expected per-step cost of hard completion, by exhaustive expectation.
    pub e_hc: f64,
    /// Expected per-step cost of emitting a placeholder.
    pub e_pc: f64,
    pub winner: Winner,
}

const SIGN_EPS: f64 = 1e-12;

fn sign_class(x: f64) -> i8 {
    if x.abs() < SIGN_EPS {
        0
    } else if x > 0.0 {
        1
    } else {
        -1
    }
}

impl TheoremRow {
    /// True when the entropy comparison and the cost comparison agree:
    /// `sign(e_hc - e_pc) == sign(entropy - h_star)` with a 1e-12 deadband.
    pub fn sign_law_holds(&self) -> bool {
        sign_class(self.e_hc - self.e_pc) == sign_class(self.entropy - self.h_star)
    }
}

/// For each `K` in `1..=k_max`, build the uniform-K distribution, compute
/// both strategies' expected per-step cost by exhaustive expectation over
/// the K equiprobable outcomes, and report which side wins.
pub fn verify_theorem(k_max: usize, params: &CostParams) -> Vec<TheoremRow> {
    let h_star = entropy_threshold(params);
    let mut rows = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let tokens: Vec<String> = (0..k).map(|i| format!("t{i}")).collect();
        let dist = TokenDistribution::uniform(tokens).expect("k >= 1");
        let (chosen, _) = dist.p_max();
        let chosen = chosen.to_string();
        let mut e_hc = 0.0;
        let mut e_pc = 0.0;
        for (outcome, &p) in dist.probs() {
            e_hc += p * step_cost(&chosen, outcome, params);
            e_pc += p * step_cost(CURSOR_STR, outcome, params);
        }
        let winner = match sign_class(e_hc - e_pc) {
            0 => Winner::Tie,
            1 => Winner::Pc,
            _ => Winner::Hc,
        };
        rows.push(TheoremRow {
            k,
            entropy: dist.entropy(),
            h_star,
            e_hc,
            e_pc,
            winner,
        });
    }
    rows
}

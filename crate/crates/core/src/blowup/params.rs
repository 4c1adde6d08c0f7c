use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The constant chain `ε < ε' < ε'' < β < δ₃ < δ₂ < δ₁ < δ₀ < min(d, α)` plus
/// the pair density `d`, the restriction-set floor `α` and the degree bound `Δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub eps: f64,
    #[serde(rename = "epsP")]
    pub eps_p: f64,
    #[serde(rename = "epsPP")]
    pub eps_pp: f64,
    pub beta: f64,
    pub delta3: f64,
    pub delta2: f64,
    pub delta1: f64,
    pub delta0: f64,
    pub d: f64,
    pub alpha: f64,
    #[serde(rename = "Delta")]
    pub max_degree: usize,
}

impl ParamSet {
    /// Desk-scale defaults for the chain; `d`, `α`, `Δ` come from the instance.
    pub fn desk_default(d: f64, alpha: f64, max_degree: usize) -> Self {
        ParamSet {
            eps: 0.01,
            eps_p: 0.02,
            eps_pp: 0.04,
            beta: 0.05,
            delta3: 0.08,
            delta2: 0.12,
            delta1: 0.2,
            delta0: 0.3,
            d,
            alpha,
            max_degree,
        }
    }

    /// The chain scaled so that `δ₀ = top`, keeping the default ratios.
    /// Small `top` keeps the buffer sets packable in bounded-degree targets
    /// with few vertices per class.
    pub fn scaled_chain(top: f64, d: f64, alpha: f64, max_degree: usize) -> Self {
        let base = ParamSet::desk_default(d, alpha, max_degree);
        let f = top / base.delta0;
        ParamSet {
            eps: base.eps * f,
            eps_p: base.eps_p * f,
            eps_pp: base.eps_pp * f,
            beta: base.beta * f,
            delta3: base.delta3 * f,
            delta2: base.delta2 * f,
            delta1: base.delta1 * f,
            delta0: top,
            ..base
        }
    }

    /// Checks strict ordering of the chain. `d` may equal 1 (complete pairs);
    /// every other constant lies strictly inside `(0, 1)`.
    pub fn validate(&self) -> Result<()> {
        let chain = [
            ("eps", self.eps),
            ("epsP", self.eps_p),
            ("epsPP", self.eps_pp),
            ("beta", self.beta),
            ("delta3", self.delta3),
            ("delta2", self.delta2),
            ("delta1", self.delta1),
            ("delta0", self.delta0),
        ];
        for w in chain.windows(2) {
            if !(w[0].1 < w[1].1) {
                return Err(Error::Domain(format!("parameter chain requires {} < {}", w[0].0, w[1].0)));
            }
        }
        if !(chain[0].1 > 0.0) {
            return Err(Error::Domain("eps must be positive".into()));
        }
        if !(self.delta0 < self.d.min(self.alpha)) {
            return Err(Error::Domain("parameter chain requires delta0 < min(d, alpha)".into()));
        }
        if !(self.d > 0.0 && self.d <= 1.0) || !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain("d must lie in (0, 1] and alpha in (0, 1)".into()));
        }
        if self.max_degree == 0 {
            return Err(Error::Domain("Delta must be at least 1".into()));
        }
        Ok(())
    }

    /// `⌈x·N⌉` with a small tolerance against representation error.
    pub fn ceil_frac(x: f64, n: usize) -> usize {
        ((x * n as f64) - 1e-9).ceil().max(0.0) as usize
    }

    /// Low-set recomputation period `s = ⌈δ₂N⌉`, at least 1.
    pub fn period(&self, n: usize) -> usize {
        Self::ceil_frac(self.delta2, n).max(1)
    }
}

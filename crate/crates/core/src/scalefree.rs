//! Continuum power-law degree formulas and walk-budget accounting.
//!
//! For a scale-free degree distribution `P(k) = (γ-1) k_min^(γ-1) k^(-γ)` on
//! `[k_min, ∞)`, the natural cutoff is `k_max = k_min N^(1/(γ-1))` and the
//! mean degree over `[k_min, k_max]` tends to `(γ-1)/(γ-2) k_min` for
//! `2 < γ < 3`. Under degree-proportional scheduling the total walk count is
//! `NWPD × N × <k>`, so it grows with `N` only through a size-independent
//! mean degree.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleFreeParams {
    pub gamma: f64,
    pub k_min: f64,
    pub n: f64,
}

impl ScaleFreeParams {
    pub fn new(gamma: f64, k_min: f64, n: f64) -> Result<Self> {
        if !(gamma > 1.0) {
            return Err(Error::Domain {
                what: "degree exponent (must exceed 1)",
                value: gamma,
            });
        }
        if !(k_min >= 1.0) {
            return Err(Error::Domain {
                what: "minimum degree (must be at least 1)",
                value: k_min,
            });
        }
        if !(n >= 1.0) {
            return Err(Error::Domain {
                what: "node count (must be at least 1)",
                value: n,
            });
        }
        Ok(ScaleFreeParams { gamma, k_min, n })
    }
}

/// Density of the power-law degree distribution at `k >= k_min`.
pub fn degree_pdf(k: f64, params: &ScaleFreeParams) -> Result<f64> {
    if k < params.k_min {
        return Err(Error::Domain {
            what: "degree below k_min",
            value: k,
        });
    }
    let g = params.gamma;
    Ok((g - 1.0) * params.k_min.powf(g - 1.0) * k.powf(-g))
}

/// Probability mass on `[k_min, upper]`: `1 - (k_min/upper)^(γ-1)`.
pub fn degree_cdf(upper: f64, params: &ScaleFreeParams) -> f64 {
    if upper <= params.k_min {
        return 0.0;
    }
    1.0 - (params.k_min / upper).powf(params.gamma - 1.0)
}

/// Natural cutoff `k_min × N^(1/(γ-1))`.
pub fn expected_max_degree(params: &ScaleFreeParams) -> f64 {
    params.k_min * params.n.powf(1.0 / (params.gamma - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AvgDegree {
    pub value: f64,
    /// Set when γ = 2 and the logarithmic antiderivative was used.
    pub log_form: bool,
}

/// `∫_{k_min}^{k_max} k P(k) dk`. At γ = 2 the power-law closed form is
/// singular and `k_min ln(k_max/k_min)` is returned with `log_form` set.
pub fn expected_avg_degree(params: &ScaleFreeParams, k_max: f64) -> Result<AvgDegree> {
    let g = params.gamma;
    let k_min = params.k_min;
    if g == 1.0 {
        return Err(Error::Domain {
            what: "degree exponent for the mean degree",
            value: g,
        });
    }
    if !(k_max >= k_min) {
        return Err(Error::Domain {
            what: "k_max below k_min",
            value: k_max,
        });
    }
    if g == 2.0 {
        return Ok(AvgDegree {
            value: k_min * (k_max / k_min).ln(),
            log_form: true,
        });
    }
    let value = (g - 1.0) * k_min.powf(g - 1.0) * (k_max.powf(2.0 - g) - k_min.powf(2.0 - g))
        / (2.0 - g);
    Ok(AvgDegree {
        value,
        log_form: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticDegree {
    pub value: f64,
    /// False when γ ≥ 3, outside the regime the limit is usually quoted for.
    pub in_regime: bool,
}

/// `N → ∞` mean degree `(γ-1)/(γ-2) k_min`, defined for γ > 2.
pub fn asymptotic_avg_degree(params: &ScaleFreeParams) -> Result<AsymptoticDegree> {
    let g = params.gamma;
    if !(g > 2.0) {
        return Err(Error::Domain {
            what: "degree exponent for the asymptotic mean degree (must exceed 2)",
            value: g,
        });
    }
    let in_regime = g < 3.0;
    if !in_regime {
        log::warn!("gamma = {g} is outside 2 < gamma < 3");
    }
    Ok(AsymptoticDegree {
        value: (g - 1.0) / (g - 2.0) * params.k_min,
        in_regime,
    })
}

/// Degree-based walk budget `NWPD × N × <k>` using the graph's own mean
/// degree, i.e. `NWPD × Σ k_i`.
pub fn predicted_total_walks(walks_per_degree: usize, graph: &Graph) -> usize {
    walks_per_degree * graph.degree_sum()
}

/// One row of the `analyze scalefree` table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleFreeRow {
    pub n: f64,
    pub gamma: f64,
    pub k_min: f64,
    pub k_max_pred: f64,
    pub avg_k_finite: f64,
    pub avg_k_asymptotic: Option<f64>,
    /// `N × <k>` at the finite cutoff: total walks per unit of NWPD.
    pub tnw_per_nwpd: f64,
    pub log_form: bool,
}

pub const SCALEFREE_CSV_HEADER: &str =
    "N,gamma,k_min,k_max_pred,avg_k_finite,avg_k_asymptotic,tnw_per_nwpd,log_form";

impl ScaleFreeRow {
    pub fn compute(params: &ScaleFreeParams) -> Result<Self> {
        let k_max = expected_max_degree(params);
        let avg = expected_avg_degree(params, k_max)?;
        let asym = asymptotic_avg_degree(params).ok().map(|a| a.value);
        Ok(ScaleFreeRow {
            n: params.n,
            gamma: params.gamma,
            k_min: params.k_min,
            k_max_pred: k_max,
            avg_k_finite: avg.value,
            avg_k_asymptotic: asym,
            tnw_per_nwpd: params.n * avg.value,
            log_form: avg.log_form,
        })
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n,
            self.gamma,
            self.k_min,
            self.k_max_pred,
            self.avg_k_finite,
            self.avg_k_asymptotic.map(|v| v.to_string()).unwrap_or_default(),
            self.tnw_per_nwpd,
            self.log_form
        )
    }
}

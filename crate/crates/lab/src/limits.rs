//! Small-ε sweeps of the two kernel integrals whose limits fix the peakon speeds.

use mch_peakon::quadrature::extrapolate_to_zero;
use mch_peakon::{Mollifier, MollifierFamily};
use serde::{Deserialize, Serialize};

use crate::LabError;

pub const EPSILONS: [f64; 4] = [0.2, 0.1, 0.05, 0.02];
pub const SHIFTS: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IRow {
    pub epsilon: f64,
    /// `I_ε = (ρ_ε ∗ (G_x^ε)²)(0)`
    pub value: f64,
    /// `|I_ε − 1/12|`
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub epsilon: f64,
    /// The pair-speed integral at each shift in [`SHIFTS`].
    pub values: Vec<f64>,
    /// Largest difference between shifts.
    pub spread: f64,
    /// Tail bound at the smallest shift.
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub mollifier: MollifierFamily,
    pub i_eps: Vec<IRow>,
    pub i_extrapolated: f64,
    pub i_monotone: bool,
    pub pair_speed: Vec<PairRow>,
    /// Extrapolated pair-speed limit at each shift.
    pub pair_extrapolated: Vec<f64>,
    /// Every spread is within its tail bound and the bounds shrink with ε.
    pub s_uniform: bool,
}

impl LimitReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,I_eps,pair_s0.5,pair_s1,pair_s2,tail_bound\n");
        for (i, p) in self.i_eps.iter().zip(&self.pair_speed) {
            out.push_str(&format!(
                "{:?},{:?},{:?},{:?},{:?},{:?}\n",
                i.epsilon, i.value, p.values[0], p.values[1], p.values[2], p.tail_bound
            ));
        }
        out
    }
}

pub fn run_limit_suite(family: MollifierFamily, quad_nodes: usize) -> Result<LimitReport, LabError> {
    let molls: Vec<Mollifier> = EPSILONS
        .iter()
        .map(|&e| Mollifier::with_nodes(family, e, quad_nodes))
        .collect::<Result<_, _>>()?;
    let i_eps: Vec<IRow> = molls
        .iter()
        .map(|m| {
            let value = m.gx_square_at_zero();
            IRow {
                epsilon: m.epsilon(),
                value,
                error: (value - 1.0 / 12.0).abs(),
            }
        })
        .collect();
    let i_values: Vec<f64> = i_eps.iter().map(|r| r.value).collect();
    let i_extrapolated = extrapolate_to_zero(&EPSILONS, &i_values);
    let i_monotone = i_eps.windows(2).all(|w| w[1].error < w[0].error);

    let pair_speed: Vec<PairRow> = molls
        .iter()
        .map(|m| {
            let values: Vec<f64> = SHIFTS.iter().map(|&s| m.pair_speed_integral(s)).collect();
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            PairRow {
                epsilon: m.epsilon(),
                values,
                spread: hi - lo,
                tail_bound: m.pair_tail_bound(SHIFTS[0]),
            }
        })
        .collect();
    let pair_extrapolated = (0..SHIFTS.len())
        .map(|k| {
            let v: Vec<f64> = pair_speed.iter().map(|r| r.values[k]).collect();
            extrapolate_to_zero(&EPSILONS, &v)
        })
        .collect();
    let s_uniform = pair_speed.iter().all(|r| r.spread <= r.tail_bound + 1e-15)
        && pair_speed.windows(2).all(|w| w[1].tail_bound <= w[0].tail_bound);
    Ok(LimitReport {
        mollifier: family,
        i_eps,
        i_extrapolated,
        i_monotone,
        pair_speed,
        pair_extrapolated,
        s_uniform,
    })
}

use serde::Serialize;

use crate::critical::{Regime, TemperatureProfile};
use crate::ek::{ek_constants_with, EkConstants};
use crate::error::{Error, Result};
use crate::export::Table;
use crate::landscape::WellLabel;

/// The regimes with a limiting chain, named after the `β` intervals they
/// cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReducedRegime {
    /// `β_1 < β < β_2`.
    R12,
    /// `β = β_2`.
    R2,
    /// `β_2 < β < β_3`.
    R23,
    /// `β = β_3`, only for `q >= 5`.
    R3,
    /// `β > β_3`.
    R3Inf,
    /// Slower scale from the barycentre on `β_2 < β < β_3`.
    R4,
    /// Slower scale from the barycentre on `β_3 < β < q`, `q >= 5`.
    R5,
}

impl std::fmt::Display for ReducedRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ReducedRegime::R12 => "(1,2)",
            ReducedRegime::R2 => "(2)",
            ReducedRegime::R23 => "(2,3)",
            ReducedRegime::R3 => "(3)",
            ReducedRegime::R3Inf => "(3,inf)",
            ReducedRegime::R4 => "(4)",
            ReducedRegime::R5 => "(5)",
        };
        write!(f, "{s}")
    }
}

/// A state of a limiting chain: a single well, or all ordered wells lumped
/// together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReducedState {
    Well(WellLabel),
    Ordered,
}

impl std::fmt::Display for ReducedState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReducedState::Well(l) => write!(f, "{l}"),
            ReducedState::Ordered => write!(f, "S"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedChain {
    pub q: usize,
    pub beta: f64,
    pub regime: ReducedRegime,
    pub states: Vec<ReducedState>,
    /// Jump rates; the diagonal is zero.
    pub rates: Vec<Vec<f64>>,
    /// Depth `θ` of the time scale `2πN e^{Nθ}`.
    pub theta: f64,
    pub time_scale: String,
    /// The chain on the slower barycentre scale, when there is one.
    pub second_scale: Option<Box<ReducedChain>>,
}

impl ReducedChain {
    pub fn rate(&self, from: ReducedState, to: ReducedState) -> Option<f64> {
        let a = self.states.iter().position(|&s| s == from)?;
        let b = self.states.iter().position(|&s| s == to)?;
        Some(self.rates[a][b])
    }

    /// One row per ordered pair of distinct states.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["regime", "from", "to", "rate"]);
        for (a, sa) in self.states.iter().enumerate() {
            for (b, sb) in self.states.iter().enumerate() {
                if a != b {
                    t.push(vec![
                        self.regime.to_string().into(),
                        sa.to_string().into(),
                        sb.to_string().into(),
                        self.rates[a][b].into(),
                    ]);
                }
            }
        }
        t
    }
}

fn ordered_states(q: usize) -> Vec<ReducedState> {
    (0..q).map(|k| ReducedState::Well(WellLabel::K(k))).collect()
}

fn with_barycenter(q: usize) -> Vec<ReducedState> {
    let mut v = vec![ReducedState::Well(WellLabel::O)];
    v.extend(ordered_states(q));
    v
}

fn build(
    c: &EkConstants,
    regime: ReducedRegime,
    states: Vec<ReducedState>,
    theta: (f64, &str),
    rate: impl Fn(ReducedState, ReducedState) -> f64,
) -> ReducedChain {
    let n = states.len();
    let rates = (0..n)
        .map(|a| (0..n).map(|b| if a == b { 0.0 } else { rate(states[a], states[b]) }).collect())
        .collect();
    ReducedChain {
        q: c.q,
        beta: c.beta,
        regime,
        states,
        rates,
        theta: theta.0,
        time_scale: format!("2πN·exp(N·{})", theta.1),
        second_scale: None,
    }
}

const O: ReducedState = ReducedState::Well(WellLabel::O);

/// The limiting chain of the order process at `(q, β)`.
pub fn reduced_chain(q: usize, beta: f64) -> Result<ReducedChain> {
    let prof = TemperatureProfile::new(q)?;
    let c = ek_constants_with(&prof, beta)?;
    let qf = q as f64;
    let t1 = (c.theta_1, "θ_1");
    let regime = prof.regime(beta);
    let chain = match regime {
        Regime::FirstToSecond => {
            let r = c.omega_o()? / c.nu_1;
            build(&c, ReducedRegime::R12, with_barycenter(q), t1, |_, l| if l == O { r } else { 0.0 })
        }
        Regime::AtSecond => {
            let (to_o, from_o) = (c.omega_o()? / c.nu_1, c.omega_o()? / c.nu_o()?);
            build(&c, ReducedRegime::R2, with_barycenter(q), t1, |k, l| {
                if l == O {
                    to_o
                } else if k == O {
                    from_o
                } else {
                    0.0
                }
            })
        }
        Regime::SecondToThird => {
            let r = c.omega_o()? / (qf * c.nu_1);
            let mut ch = build(&c, ReducedRegime::R23, ordered_states(q), t1, |_, _| r);
            let from_o = c.omega_o()? / c.nu_o()?;
            let slow = build(&c, ReducedRegime::R4, with_barycenter(q), (c.theta_o()?, "θ_o"), |k, _| {
                if k == O {
                    from_o
                } else {
                    0.0
                }
            });
            ch.second_scale = Some(Box::new(slow));
            ch
        }
        Regime::AtThird if q <= 4 => {
            return Err(Error::Regime(format!("β = β_3 = q = {q} is not covered by the limiting chains")))
        }
        Regime::AtThird => {
            let r = (c.omega_o()? / qf + c.omega_1()?) / c.nu_1;
            build(&c, ReducedRegime::R3, ordered_states(q), t1, |_, _| r)
        }
        Regime::ThirdToFourth | Regime::AtFourth | Regime::AboveFourth => {
            let r = if q == 3 { c.omega_o()? } else { c.omega_1()? } / c.nu_1;
            let mut ch = build(&c, ReducedRegime::R3Inf, ordered_states(q), t1, |_, _| r);
            if regime == Regime::ThirdToFourth && q >= 5 {
                let from_o = qf * c.omega_o()? / c.nu_o()?;
                let slow = build(
                    &c,
                    ReducedRegime::R5,
                    vec![O, ReducedState::Ordered],
                    (c.theta_o()?, "θ_o"),
                    |k, _| if k == O { from_o } else { 0.0 },
                );
                ch.second_scale = Some(Box::new(slow));
            }
            ch
        }
        Regime::BelowFirst | Regime::AtFirst => unreachable!("rejected by ek_constants"),
    };
    Ok(chain)
}

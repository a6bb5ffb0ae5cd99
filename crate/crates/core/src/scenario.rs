//! Boundary trajectories pushed through the impact aggregate, the price
//! mapping and the closed-form pricer.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{quote, MarketParams};
use crate::error::{Error, Result};
use crate::fmt::sig12;
use crate::mapping::{stock_price, MappingParams};
use crate::pb::{human_impact, impact_delta, InteractionMatrix, PbDocument, PbVector};

/// What each step's impact change is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaMode {
    /// The fixed scenario reference state.
    #[default]
    Reference,
    /// The previous step (the reference for the first step).
    Step,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarketSection {
    pub sigma: f64,
    pub r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strike: Option<f64>,
    pub expiry: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PbSection {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepDocument {
    pub t: f64,
    pub h: Vec<f64>,
}

/// Scenario JSON as written on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioDocument {
    pub mapping: MappingSection,
    pub market: MarketSection,
    pub pb: PbSection,
    pub reference: Vec<f64>,
    #[serde(default)]
    pub steps: Vec<StepDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_target: Option<Vec<f64>>,
    #[serde(default)]
    pub delta_mode: DeltaMode,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MappingSection {
    pub s0: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub struct Step {
    pub time: f64,
    pub h: PbVector,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub mapping: MappingParams,
    /// Valued at `t = 0`; each step re-values at its own time.
    pub market: MarketParams,
    pub g: InteractionMatrix,
    pub labels: Vec<String>,
    pub reference: PbVector,
    pub steps: Vec<Step>,
    pub delta_mode: DeltaMode,
}

impl ScenarioDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn into_scenario(self) -> Result<Scenario> {
        let mapping = MappingParams::new(self.mapping.s0, self.mapping.alpha)?;
        let state = PbDocument {
            dimension: self.pb.dimension,
            labels: self.pb.labels,
            h: Some(self.reference),
            g: self.pb.g,
        }
        .validate()
        .map_err(|e| match e {
            Error::DimensionMismatch {
                field: "h",
                expected,
                found,
            } => Error::DimensionMismatch {
                field: "reference",
                expected,
                found,
            },
            other => other,
        })?;
        let reference = state.h.expect("reference supplied");
        let n = reference.dim();

        let steps = self
            .steps
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                if s.h.len() != n {
                    return Err(Error::MalformedScenario {
                        step: i,
                        reason: format!("h has {} entries, expected {n}", s.h.len()),
                    });
                }
                let h = PbVector::new(s.h).map_err(|e| Error::MalformedScenario {
                    step: i,
                    reason: e.to_string(),
                })?;
                Ok(Step { time: s.t, h })
            })
            .collect::<Result<Vec<_>>>()?;

        let h_target = self
            .h_target
            .map(|h| {
                if h.len() != n {
                    return Err(Error::DimensionMismatch {
                        field: "h_target",
                        expected: n,
                        found: h.len(),
                    });
                }
                PbVector::new(h)
            })
            .transpose()?;

        // strike: explicit, else from the target state, else s0
        let provisional = MarketParams::new(
            self.market.sigma,
            self.market.r,
            self.market.strike.unwrap_or(mapping.s0()),
            self.market.expiry,
            0.0,
        )?;
        let mut sc = Scenario {
            mapping,
            market: provisional,
            g: state.g,
            labels: state.labels,
            reference,
            steps,
            delta_mode: self.delta_mode,
        };
        if let (None, Some(target)) = (self.market.strike, h_target) {
            sc.market.strike = strike_from_target(&sc, &target)?;
        }
        sc.validate()?;
        Ok(sc)
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        ScenarioDocument::from_json(text)?.into_scenario()
    }

    pub fn dim(&self) -> usize {
        self.reference.dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.market.validate()?;
        let n = self.dim();
        if self.g.dim() != n {
            return Err(Error::DimensionMismatch {
                field: "g",
                expected: n,
                found: self.g.dim(),
            });
        }
        let mut prev = f64::NEG_INFINITY;
        for (i, step) in self.steps.iter().enumerate() {
            let bad = |reason: String| Err(Error::MalformedScenario { step: i, reason });
            if step.h.dim() != n {
                return bad(format!("h has {} entries, expected {n}", step.h.dim()));
            }
            if !step.time.is_finite() || step.time <= prev {
                return bad(format!("time {} does not increase", step.time));
            }
            if step.time > self.market.expiry {
                return bad(format!(
                    "time {} is after expiry {}",
                    step.time, self.market.expiry
                ));
            }
            prev = step.time;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub h: Vec<f64>,
    #[serde(rename = "H")]
    pub impact: f64,
    #[serde(rename = "delta_H")]
    pub delta_impact: f64,
    pub spot: f64,
    /// `None` when the mapped spot is not positive.
    pub call: Option<f64>,
    pub put: Option<f64>,
    pub priceable: bool,
}

pub fn run_scenario(sc: &Scenario) -> Result<Vec<TrajectoryPoint>> {
    sc.validate()?;
    let h_ref = human_impact(&sc.reference, &sc.g)?;
    let impacts: Vec<f64> = sc
        .steps
        .iter()
        .map(|s| human_impact(&s.h, &sc.g))
        .collect::<Result<_>>()?;

    (0..sc.steps.len())
        .into_par_iter()
        .map(|i| {
            let step = &sc.steps[i];
            let base = match (sc.delta_mode, i) {
                (DeltaMode::Step, i) if i > 0 => impacts[i - 1],
                _ => h_ref,
            };
            let delta = impacts[i] - base;
            let spot = stock_price(&sc.mapping, delta);
            let (call, put) = if spot.priceable {
                let q = quote(spot.value, &sc.market.at_time(step.time)?)?;
                (Some(q.call), Some(q.put))
            } else {
                (None, None)
            };
            Ok(TrajectoryPoint {
                time: step.time,
                h: step.h.as_slice().to_vec(),
                impact: impacts[i],
                delta_impact: delta,
                spot: spot.value,
                call,
                put,
                priceable: spot.priceable,
            })
        })
        .collect()
}

/// Strike implied by a target boundary state.
pub fn strike_from_target(sc: &Scenario, h_target: &PbVector) -> Result<f64> {
    let delta = impact_delta(&sc.reference, h_target, &sc.g)?;
    let k = stock_price(&sc.mapping, delta);
    if !k.priceable {
        return Err(Error::UnpriceableTarget { strike: k.value });
    }
    Ok(k.value)
}

pub const CSV_HEADER: &str = "time,H,delta_H,spot,call,put,priceable";

pub fn write_csv<W: Write>(points: &[TrajectoryPoint], mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    let opt = |v: Option<f64>| v.map(sig12).unwrap_or_default();
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            sig12(p.time),
            sig12(p.impact),
            sig12(p.delta_impact),
            sig12(p.spot),
            opt(p.call),
            opt(p.put),
            p.priceable
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(steps: &str, extra: &str) -> String {
        format!(
            r#"{{
              "mapping": {{"s0": 100, "alpha": 50}},
              "market": {{"sigma": 0.2, "r": 0.05, "expiry": 1.0 {extra}}},
              "pb": {{"dimension": 3}},
              "reference": [0.5, 0.2, 0.1],
              "steps": {steps}
            }}"#
        )
    }

    #[test]
    fn constant_state_keeps_spot_and_decays_call() {
        let sc = Scenario::from_json(&doc(
            r#"[{"t":0,"h":[0.5,0.2,0.1]},{"t":0.5,"h":[0.5,0.2,0.1]},{"t":0.9,"h":[0.5,0.2,0.1]},{"t":1.0,"h":[0.5,0.2,0.1]}]"#,
            "",
        ))
        .unwrap();
        assert_eq!(sc.market.strike, 100.0);
        let pts = run_scenario(&sc).unwrap();
        assert!(pts.iter().all(|p| p.spot == 100.0 && p.delta_impact == 0.0));
        let calls: Vec<f64> = pts.iter().map(|p| p.call.unwrap()).collect();
        assert!(calls.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(*calls.last().unwrap(), 0.0);
    }

    #[test]
    fn unpriceable_steps_are_flagged_not_dropped() {
        let sc = Scenario::from_json(&doc(
            r#"[{"t":0.1,"h":[0.5,0.2,0.1]},{"t":0.2,"h":[3.5,0.2,0.1]}]"#,
            "",
        ))
        .unwrap();
        let pts = run_scenario(&sc).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(pts[0].priceable);
        assert!(!pts[1].priceable);
        assert!((pts[1].spot + 50.0).abs() < 1e-12);
        assert_eq!(pts[1].call, None);

        let mut buf = Vec::new();
        write_csv(&pts, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert!(text.lines().nth(2).unwrap().ends_with(",,,false"));
    }

    #[test]
    fn malformed_steps_name_the_index() {
        let err = Scenario::from_json(&doc(
            r#"[{"t":0.1,"h":[0.5,0.2,0.1]},{"t":0.1,"h":[0.5,0.2,0.1]}]"#,
            "",
        ))
        .unwrap_err();
        assert!(
            matches!(err, Error::MalformedScenario { step: 1, .. }),
            "{err}"
        );

        let err = Scenario::from_json(&doc(r#"[{"t":2.0,"h":[0.5,0.2,0.1]}]"#, "")).unwrap_err();
        assert!(matches!(err, Error::MalformedScenario { step: 0, .. }));

        let err = Scenario::from_json(&doc(r#"[{"t":0.5,"h":[0.5,0.2]}]"#, "")).unwrap_err();
        assert!(matches!(err, Error::MalformedScenario { step: 0, .. }));
    }

    #[test]
    fn strike_from_target_state() {
        let text = doc("[]", "").replace(
            r#""steps": []"#,
            r#""steps": [], "h_target": [0.3, 0.2, 0.1]"#,
        );
        let sc = Scenario::from_json(&text).unwrap();
        // reduction of 0.2 in h1 at alpha = 50
        assert!((sc.market.strike - 110.0).abs() < 1e-12);
        assert_eq!(
            strike_from_target(&sc, &sc.reference.clone()).unwrap(),
            100.0
        );
        let far = PbVector::new(vec![5.0, 0.2, 0.1]).unwrap();
        assert!(matches!(
            strike_from_target(&sc, &far),
            Err(Error::UnpriceableTarget { .. })
        ));
    }

    #[test]
    fn explicit_strike_wins() {
        let sc = Scenario::from_json(&doc("[]", r#", "strike": 90"#)).unwrap();
        assert_eq!(sc.market.strike, 90.0);
    }

    #[test]
    fn step_mode_measures_consecutive_changes() {
        let text = doc(
            r#"[{"t":0.1,"h":[0.4,0.2,0.1]},{"t":0.2,"h":[0.3,0.2,0.1]}]"#,
            "",
        )
        .replace(r#""steps""#, r#""delta_mode": "step", "steps""#);
        let sc = Scenario::from_json(&text).unwrap();
        let pts = run_scenario(&sc).unwrap();
        assert!((pts[0].delta_impact + 0.1).abs() < 1e-12);
        assert!((pts[1].delta_impact + 0.1).abs() < 1e-12);
    }
}

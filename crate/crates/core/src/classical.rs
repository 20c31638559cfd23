//! Baseline migration models: net-present-value gating and the empirical
//! gravity model.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::model::{economic_distance, DistanceCost, DistanceMatrix, EconomicProfile, FlowMatrix, Region};

/// Benefits and costs of one move, both already monetized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NpvInputs {
    pub benefits: f64,
    pub costs: f64,
}

impl NpvInputs {
    pub fn value(&self) -> Result<f64> {
        if self.costs < 0.0 {
            return Err(Error::invalid(format!("costs must be >= 0, got {}", self.costs)));
        }
        npv(self.benefits, self.costs)
    }
}

/// Net present value of migrating, `V = R − C`.
pub fn npv(benefits: f64, costs: f64) -> Result<f64> {
    ensure_finite("benefits", benefits)?;
    ensure_finite("costs", costs)?;
    Ok(benefits - costs)
}

/// Passes `flow` only when the move has strictly positive net value.
pub fn npv_gate(value: f64, flow: f64) -> f64 {
    if value > 0.0 {
        flow
    } else {
        0.0
    }
}

/// Net values per ordered (origin, destination) pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NpvTable {
    values: HashMap<(String, String), f64>,
}

impl NpvTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, origin: impl Into<String>, destination: impl Into<String>, value: f64) {
        self.values.insert((origin.into(), destination.into()), value);
    }

    pub fn get(&self, origin: &str, destination: &str) -> Option<f64> {
        self.values
            .get(&(origin.to_string(), destination.to_string()))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Gates every entry of `flows`. Pairs missing from the table are blocked.
    pub fn gate(&self, flows: &FlowMatrix) -> FlowMatrix {
        let ids = flows.ids().to_vec();
        let mut out = FlowMatrix::zeros(ids.clone());
        for (i, o) in ids.iter().enumerate() {
            for (j, d) in ids.iter().enumerate() {
                let v = self.get(o, d).unwrap_or(f64::NEG_INFINITY);
                out.set(i, j, npv_gate(v, flows.get(i, j)));
            }
        }
        out
    }
}

/// `M = G · P_i^α · P_j^β · D^(−γ) · exp(θ (W_j − W_i) − η (U_j − U_i))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GravityParams {
    #[serde(rename = "G")]
    pub g: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub theta: f64,
    pub eta: f64,
}

impl Default for GravityParams {
    fn default() -> Self {
        GravityParams {
            g: 1.0,
            alpha: 1.0,
            beta: 1.0,
            gamma: 2.0,
            theta: 0.0,
            eta: 0.0,
        }
    }
}

impl GravityParams {
    /// (config key, message) for every broken invariant.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        for (key, v) in [
            ("gravity.G", self.g),
            ("gravity.alpha", self.alpha),
            ("gravity.beta", self.beta),
            ("gravity.gamma", self.gamma),
            ("gravity.theta", self.theta),
            ("gravity.eta", self.eta),
        ] {
            if !v.is_finite() {
                out.push((key, format!("{key} must be finite, got {v}")));
            }
        }
        for (key, v) in [
            ("gravity.G", self.g),
            ("gravity.theta", self.theta),
            ("gravity.eta", self.eta),
        ] {
            if v < 0.0 {
                out.push((key, format!("{key} must be >= 0, got {v}")));
            }
        }
        out
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.g, self.alpha, self.beta, self.gamma, self.theta, self.eta]
    }
}

fn population_power(population: f64, exponent: f64, role: &str) -> Result<f64> {
    if population < 0.0 || !population.is_finite() {
        return Err(Error::invalid(format!(
            "{role} population must be finite and >= 0, got {population}"
        )));
    }
    if population == 0.0 && exponent < 0.0 {
        return Err(Error::invalid(format!(
            "{role} population is 0 with negative exponent {exponent}"
        )));
    }
    Ok(population.powf(exponent))
}

/// Gravity-model flow from `origin` to `destination` separated by economic
/// distance `economic_distance`.
pub fn gravity_flow(
    origin: &EconomicProfile,
    destination: &EconomicProfile,
    economic_distance: f64,
    params: &GravityParams,
) -> Result<f64> {
    if !(economic_distance.is_finite() && economic_distance > 0.0) {
        return Err(Error::invalid(format!(
            "economic distance must be > 0, got {economic_distance}"
        )));
    }
    let pi = population_power(origin.population, params.alpha, "origin")?;
    let pj = population_power(destination.population, params.beta, "destination")?;
    let wage_gap = destination.wage_rate - origin.wage_rate;
    let unemployment_gap = destination.unemployment_rate - origin.unemployment_rate;
    let response = (params.theta * wage_gap - params.eta * unemployment_gap).exp();
    let flow = params.g * pi * pj * economic_distance.powf(-params.gamma) * response;
    ensure_finite("gravity flow", flow)?;
    Ok(flow)
}

/// Economic distances `c0 + c1 · R` for every pair; zero diagonal.
pub fn economic_distance_matrix(distances: &DistanceMatrix, cost: &DistanceCost) -> Result<DistanceMatrix> {
    let n = distances.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                values[i * n + j] = economic_distance(distances.get(i, j), cost.c0, cost.c1)?;
            }
        }
    }
    DistanceMatrix::new(distances.ids().to_vec(), values)
}

/// Gravity flows for every ordered pair of distinct regions. `economic` must
/// be aligned to `regions`.
pub fn gravity_flow_matrix(
    regions: &[Region],
    economic: &DistanceMatrix,
    params: &GravityParams,
) -> Result<FlowMatrix> {
    assert_eq!(regions.len(), economic.len(), "distance matrix not aligned to regions");
    let ids: Vec<String> = regions.iter().map(|r| r.id.clone()).collect();
    let mut out = FlowMatrix::zeros(ids);
    for (i, ri) in regions.iter().enumerate() {
        for (j, rj) in regions.iter().enumerate() {
            if i == j {
                continue;
            }
            let m = gravity_flow(&ri.profile, &rj.profile, economic.get(i, j), params)
                .map_err(|e| e.in_pair(&ri.id, &rj.id))?;
            out.set(i, j, m);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(population: f64, wage_rate: f64, unemployment_rate: f64) -> EconomicProfile {
        EconomicProfile {
            population,
            gdp: 1.0,
            wage_rate,
            unemployment_rate,
        }
    }

    fn unit_params() -> GravityParams {
        GravityParams {
            g: 1.0,
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            theta: 1.0,
            eta: 1.0,
        }
    }

    #[test]
    fn npv_examples() {
        assert_eq!(npv(5.0, 3.0).unwrap(), 2.0);
        assert_eq!(npv(1.25, 1.25).unwrap(), 0.0);
        assert_eq!(npv(0.0, 4.0).unwrap(), -4.0);
        assert!(npv(f64::NAN, 1.0).is_err());
        assert!(NpvInputs { benefits: 1.0, costs: -1.0 }.value().is_err());
    }

    #[test]
    fn gate_examples() {
        assert_eq!(npv_gate(2.0, 10.0), 10.0);
        assert_eq!(npv_gate(0.0, 10.0), 0.0);
        assert_eq!(npv_gate(-1.0, 10.0), 0.0);
    }

    #[test]
    fn gravity_unit_case() {
        let p = profile(1.0, 0.0, 0.0);
        assert_eq!(gravity_flow(&p, &p, 1.0, &unit_params()).unwrap(), 1.0);
    }

    #[test]
    fn gravity_identical_profiles_are_symmetric() {
        let a = profile(300.0, 12.0, 0.2);
        let params = GravityParams {
            alpha: 0.7,
            beta: 0.7,
            theta: 0.3,
            eta: 2.0,
            ..GravityParams::default()
        };
        let ab = gravity_flow(&a, &a.clone(), 17.0, &params).unwrap();
        assert_eq!(ab, gravity_flow(&a, &a, 17.0, &params).unwrap());
    }

    #[test]
    fn doubling_distance_quarters_flow_when_gamma_is_two() {
        let a = profile(50.0, 1.0, 0.1);
        let b = profile(80.0, 2.0, 0.3);
        let params = GravityParams::default();
        let near = gravity_flow(&a, &b, 10.0, &params).unwrap();
        let far = gravity_flow(&a, &b, 20.0, &params).unwrap();
        assert!((far - near / 4.0).abs() <= 1e-15 * near);
    }

    #[test]
    fn gravity_errors() {
        let a = profile(0.0, 1.0, 0.1);
        let b = profile(10.0, 1.0, 0.1);
        let params = GravityParams::default();
        assert!(gravity_flow(&a, &b, 0.0, &params).is_err());
        assert!(gravity_flow(&a, &b, -2.0, &params).is_err());
        let negative = GravityParams {
            alpha: -0.5,
            ..params
        };
        assert!(gravity_flow(&a, &b, 1.0, &negative).is_err());
        assert_eq!(gravity_flow(&a, &b, 1.0, &params).unwrap(), 0.0);
    }

    #[test]
    fn single_region_matrix_is_zero() {
        let regions = vec![Region::new("a", profile(10.0, 1.0, 0.1))];
        let d = DistanceMatrix::new(vec!["a".into()], vec![0.0]).unwrap();
        let m = gravity_flow_matrix(&regions, &d, &GravityParams::default()).unwrap();
        assert_eq!(m.values(), &[0.0]);
    }

    #[test]
    fn matrix_errors_name_the_pair() {
        let regions = vec![
            Region::new("a", profile(10.0, 1.0, 0.1)),
            Region::new("b", profile(10.0, 1.0, 0.1)),
        ];
        let d = DistanceMatrix::new(vec!["a".into(), "b".into()], vec![0.0, 0.0, 0.0, 0.0]).unwrap();
        let err = gravity_flow_matrix(&regions, &d, &GravityParams::default()).unwrap_err();
        assert!(err.to_string().starts_with("pair a -> b"), "{err}");
    }

    #[test]
    fn npv_table_blocks_missing_pairs() {
        let flows = FlowMatrix::new(vec!["a".into(), "b".into()], vec![0.0, 4.0, 3.0, 0.0]).unwrap();
        let mut table = NpvTable::new();
        table.insert("a", "b", 1.0);
        let gated = table.gate(&flows);
        assert_eq!(gated.values(), &[0.0, 4.0, 0.0, 0.0]);
    }
}

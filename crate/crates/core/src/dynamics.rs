//! Synchronous time-stepped migration: every step computes all flows from
//! the current state, rations them by the mobility cap, then moves people
//! (and the GDP they carry) in one pass.

use crate::classical::{economic_distance_matrix, gravity_flow_matrix, NpvTable};
use crate::coulomb::{coulomb_flow_matrix, derive_charges, ChargeAssignment};
use crate::error::{Error, Result};
use crate::model::{DistanceMatrix, FlowMatrix, Region, Scenario, ScenarioConfig};

/// Scales `outflows` down proportionally so they sum to at most `mu · population`.
pub fn apply_mobility_cap(outflows: &[f64], population: f64, mu: f64) -> Vec<f64> {
    let total: f64 = outflows.iter().sum();
    let budget = mu * population;
    if total <= budget {
        return outflows.to_vec();
    }
    let scale = budget / total;
    outflows.iter().map(|m| m * scale).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub step: usize,
    pub regions: Vec<Region>,
    /// Charges derived from `regions`.
    pub charges: ChargeAssignment,
    /// Sum of all capped flows applied so far.
    pub cumulative: FlowMatrix,
    /// Inflow minus outflow of the step that produced this state.
    pub net_inflow: Vec<f64>,
}

impl SimulationState {
    pub fn total_population(&self) -> f64 {
        self.regions.iter().map(|r| r.profile.population).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRecord {
    pub step: usize,
    pub region_id: String,
    pub population: f64,
    pub charge: f64,
    pub net_inflow: f64,
}

/// Long-form per-step, per-region records.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub records: Vec<TimeSeriesRecord>,
}

impl TimeSeries {
    pub fn push_state(&mut self, state: &SimulationState) {
        for (i, r) in state.regions.iter().enumerate() {
            self.records.push(TimeSeriesRecord {
                step: state.step,
                region_id: r.id.clone(),
                population: r.profile.population,
                charge: state.charges.charge(i),
                net_inflow: state.net_inflow[i],
            });
        }
    }

    pub fn steps(&self) -> usize {
        self.records.last().map_or(0, |r| r.step + 1)
    }
}

/// The configured flow model bound to one scenario's geometry.
#[derive(Debug, Clone)]
pub struct FlowModel {
    config: ScenarioConfig,
    distances: DistanceMatrix,
    economic: DistanceMatrix,
    npv: Option<NpvTable>,
}

impl FlowModel {
    /// `npv` is required for the npv-gated models and ignored otherwise.
    pub fn new(scenario: &Scenario, npv: Option<NpvTable>) -> Result<Self> {
        let config = scenario.config().clone();
        if config.model.is_npv_gated() && npv.is_none() {
            return Err(Error::invalid("npv-gated model needs an NPV table"));
        }
        let distances = scenario.distances().clone();
        let economic = economic_distance_matrix(&distances, &config.distance)?;
        Ok(FlowModel {
            npv: if config.model.is_npv_gated() { npv } else { None },
            config,
            distances,
            economic,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn charges(&self, regions: &[Region]) -> Result<ChargeAssignment> {
        derive_charges(regions, self.config.charge_source, self.config.charge_threshold)
    }

    /// Uncapped flows of the configured model, NPV gate included.
    pub fn flows(&self, regions: &[Region], charges: &ChargeAssignment) -> Result<FlowMatrix> {
        let raw = if self.config.model.is_gravity() {
            gravity_flow_matrix(regions, &self.economic, &self.config.gravity)?
        } else {
            coulomb_flow_matrix(regions, &self.distances, charges, &self.config)?
        };
        Ok(match &self.npv {
            Some(table) => table.gate(&raw),
            None => raw,
        })
    }

    pub fn initial_state(&self, regions: &[Region]) -> Result<SimulationState> {
        let charges = self.charges(regions)?;
        let ids: Vec<String> = regions.iter().map(|r| r.id.clone()).collect();
        Ok(SimulationState {
            step: 0,
            regions: regions.to_vec(),
            charges,
            cumulative: FlowMatrix::zeros(ids),
            net_inflow: vec![0.0; regions.len()],
        })
    }

    pub fn step(&self, state: &SimulationState) -> Result<SimulationState> {
        self.advance(state).map_err(|e| Error::Step {
            step: state.step + 1,
            source: Box::new(e),
        })
    }

    fn advance(&self, state: &SimulationState) -> Result<SimulationState> {
        let n = state.regions.len();
        let charges = self.charges(&state.regions)?;
        let uncapped = self.flows(&state.regions, &charges)?;

        let mut flows = FlowMatrix::zeros(uncapped.ids().to_vec());
        for (i, r) in state.regions.iter().enumerate() {
            let capped = apply_mobility_cap(uncapped.row(i), r.profile.population, self.config.mobility_cap);
            for (j, m) in capped.into_iter().enumerate() {
                flows.set(i, j, m);
            }
        }

        let mut outflow = vec![0.0; n];
        let mut inflow = vec![0.0; n];
        let mut gdp_out = vec![0.0; n];
        let mut gdp_in = vec![0.0; n];
        for (i, r) in state.regions.iter().enumerate() {
            let per_capita = if r.profile.population > 0.0 {
                r.profile.gdp / r.profile.population
            } else {
                0.0
            };
            for j in 0..n {
                let m = flows.get(i, j);
                outflow[i] += m;
                inflow[j] += m;
                gdp_out[i] += m * per_capita;
                gdp_in[j] += m * per_capita;
            }
        }

        let mut regions = state.regions.clone();
        for (i, r) in regions.iter_mut().enumerate() {
            r.profile.population = (r.profile.population - outflow[i] + inflow[i]).max(0.0);
            r.profile.gdp = (r.profile.gdp - gdp_out[i] + gdp_in[i]).max(0.0);
        }
        let mut cumulative = state.cumulative.clone();
        cumulative.add_assign(&flows);
        let charges = self.charges(&regions)?;
        Ok(SimulationState {
            step: state.step + 1,
            regions,
            charges,
            cumulative,
            net_inflow: inflow.iter().zip(&outflow).map(|(a, b)| a - b).collect(),
        })
    }

    /// Applies [`FlowModel::step`] `steps` times, recording every state
    /// including the initial one.
    pub fn run_steps(&self, regions: &[Region], steps: usize) -> Result<(TimeSeries, SimulationState)> {
        let mut state = self.initial_state(regions)?;
        let mut series = TimeSeries::default();
        series.push_state(&state);
        for _ in 0..steps {
            state = self.step(&state)?;
            series.push_state(&state);
        }
        Ok((series, state))
    }

    /// Runs for the configured number of steps.
    pub fn run(&self, regions: &[Region]) -> Result<(TimeSeries, SimulationState)> {
        self.run_steps(regions, self.config.steps)
    }
}

/// Runs a validated scenario for `config.steps` steps.
pub fn run(scenario: &Scenario, npv: Option<NpvTable>) -> Result<(TimeSeries, SimulationState)> {
    FlowModel::new(scenario, npv)?.run(scenario.regions())
}

/// Largest relative deviation of total population from its initial value.
pub fn population_drift(series: &TimeSeries) -> f64 {
    let mut totals: Vec<f64> = Vec::new();
    for r in &series.records {
        if totals.len() <= r.step {
            totals.resize(r.step + 1, 0.0);
        }
        totals[r.step] += r.population;
    }
    let Some(&initial) = totals.first() else {
        return 0.0;
    };
    totals
        .iter()
        .map(|t| if initial > 0.0 { (t - initial).abs() / initial } else { t.abs() })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_scenario, ChargeThreshold, EconomicProfile, ModelKind};

    #[test]
    fn cap_examples() {
        assert_eq!(apply_mobility_cap(&[0.0, 0.0], 100.0, 0.3), vec![0.0, 0.0]);
        assert_eq!(apply_mobility_cap(&[30.0, 30.0], 100.0, 0.3), vec![15.0, 15.0]);
        assert_eq!(apply_mobility_cap(&[10.0, 5.0], 100.0, 0.3), vec![10.0, 5.0]);
        assert_eq!(apply_mobility_cap(&[10.0, 5.0], 100.0, 0.0), vec![0.0, 0.0]);
    }

    fn region(id: &str, population: f64, gdp: f64) -> Region {
        Region::new(
            id,
            EconomicProfile {
                population,
                gdp,
                wage_rate: 1.0,
                unemployment_rate: 0.05,
            },
        )
    }

    fn poor_rich(config: ScenarioConfig) -> FlowModel {
        let regions = vec![region("poor", 1000.0, 100.0), region("rich", 1000.0, 900.0)];
        let d = DistanceMatrix::from_fn(vec!["poor".into(), "rich".into()], |_, _| 10.0);
        let s = validate_scenario(&config, &regions, &d).unwrap();
        FlowModel::new(&s, None).unwrap()
    }

    #[test]
    fn poor_region_loses_what_rich_region_gains() {
        let model = poor_rich(ScenarioConfig::default());
        let regions = vec![region("poor", 1000.0, 100.0), region("rich", 1000.0, 900.0)];
        let s0 = model.initial_state(&regions).unwrap();
        let s1 = model.step(&s0).unwrap();
        let lost = 1000.0 - s1.regions[0].profile.population;
        let gained = s1.regions[1].profile.population - 1000.0;
        assert!(lost > 0.0);
        assert!((lost - gained).abs() < 1e-9);
        assert_eq!(s1.step, 1);
        assert_eq!(s1.net_inflow[0], -lost);
        // migrants carry the origin's GDP per capita
        assert!((100.0 - s1.regions[0].profile.gdp - lost * 0.1).abs() < 1e-9);
    }

    #[test]
    fn same_sign_charges_leave_state_unchanged() {
        let config = ScenarioConfig {
            charge_threshold: ChargeThreshold::Fixed(0.0),
            ..Default::default()
        };
        let model = poor_rich(config);
        let regions = vec![region("poor", 1000.0, 100.0), region("rich", 1000.0, 900.0)];
        let s0 = model.initial_state(&regions).unwrap();
        let s1 = model.step(&s0).unwrap();
        assert_eq!(s1.regions, s0.regions);
        assert_eq!(s1.step, 1);
    }

    #[test]
    fn zero_cap_freezes_populations() {
        for model_kind in [ModelKind::Coulomb, ModelKind::Gravity] {
            let model = poor_rich(ScenarioConfig {
                model: model_kind,
                mobility_cap: 0.0,
                ..Default::default()
            });
            let regions = vec![region("poor", 1000.0, 100.0), region("rich", 1000.0, 900.0)];
            let (_, last) = model.run_steps(&regions, 5).unwrap();
            assert_eq!(last.regions, regions);
        }
    }

    #[test]
    fn zero_steps_records_initial_state() {
        let model = poor_rich(ScenarioConfig::default());
        let regions = vec![region("poor", 1000.0, 100.0), region("rich", 1000.0, 900.0)];
        let (series, state) = model.run_steps(&regions, 0).unwrap();
        assert_eq!(series.records.len(), 2);
        assert!(series.records.iter().all(|r| r.step == 0 && r.net_inflow == 0.0));
        assert_eq!(state.regions, regions);
        assert_eq!(series.steps(), 1);
    }

    #[test]
    fn gated_model_needs_table() {
        let regions = vec![region("a", 1.0, 1.0), region("b", 1.0, 2.0)];
        let d = DistanceMatrix::from_fn(vec!["a".into(), "b".into()], |_, _| 1.0);
        let config = ScenarioConfig {
            model: ModelKind::NpvGatedCoulomb,
            npv: Some(crate::model::NpvSource {
                table: "npv.csv".into(),
                benefits_column: "benefits".into(),
                costs_column: "costs".into(),
            }),
            ..Default::default()
        };
        let s = validate_scenario(&config, &regions, &d).unwrap();
        assert!(FlowModel::new(&s, None).is_err());
        let mut table = NpvTable::new();
        table.insert("a", "b", -1.0);
        let model = FlowModel::new(&s, Some(table)).unwrap();
        let q = model.charges(&regions).unwrap();
        assert_eq!(model.flows(&regions, &q).unwrap().total(), 0.0);
    }
}

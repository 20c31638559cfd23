//! Inter-regional migration flows from an electrostatic analogy.
//!
//! Regions carry signed charges derived from an economic indicator: regions
//! below a reference level are negative ("poor"), above it positive
//! ("rich"). Migrants flow from negative to positive regions with an
//! inverse-square dependence on distance. Two classical baselines are
//! included for comparison, a gravity model and a net-present-value gate.
//!
//! - [`model`]: regions, distance and flow tables, scenario config and validation
//! - [`coulomb`]: coupling, force, field superposition, charges and flows
//! - [`classical`]: NPV gate and gravity model
//! - [`calibration`]: least-squares fits against observed flows
//! - [`dynamics`]: conservative time-stepped simulation
//! - [`io`]: CSV/TOML formats and great-circle distances

pub mod calibration;
pub mod classical;
pub mod coulomb;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod model;

pub use calibration::{fit_coulomb_coupling, fit_gravity_params, CalibrationResult, FittedParams};
pub use classical::{gravity_flow, gravity_flow_matrix, npv, npv_gate, GravityParams, NpvTable};
pub use coulomb::{coulomb_flow_matrix, derive_charges, flow_eq8, flow_eq9, ChargeAssignment};
pub use dynamics::{FlowModel, SimulationState, TimeSeries};
pub use error::{Error, Result};
pub use model::{
    validate_scenario, DistanceMatrix, EconomicProfile, FlowMatrix, ModelKind, Region, Scenario,
    ScenarioConfig,
};

//! Domain types shared by every model: regions and their economic profiles,
//! the distance and flow tables, the scenario configuration, and scenario
//! validation.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::classical::GravityParams;
use crate::error::{ensure_finite, Error, Result};

/// Geographic position in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EconomicProfile {
    /// Persons.
    pub population: f64,
    /// Money units.
    pub gdp: f64,
    /// Money per period.
    pub wage_rate: f64,
    /// Fraction in `[0, 1]`.
    pub unemployment_rate: f64,
}

impl EconomicProfile {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [
            ("population", self.population),
            ("gdp", self.gdp),
            ("wage_rate", self.wage_rate),
        ] {
            if !v.is_finite() {
                out.push(format!("{name} must be finite, got {v}"));
            } else if v < 0.0 {
                out.push(format!("{name} must be >= 0, got {v}"));
            }
        }
        let u = self.unemployment_rate;
        if !u.is_finite() || !(0.0..=1.0).contains(&u) {
            out.push(format!("unemployment_rate {u} out of [0,1]"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: String,
    pub name: String,
    /// `None` for abstract regions whose distances are supplied externally.
    pub position: Option<Position>,
    pub profile: EconomicProfile,
    /// Fixed charge that replaces the derived one.
    pub charge_override: Option<f64>,
}

impl Region {
    pub fn new(id: impl Into<String>, profile: EconomicProfile) -> Self {
        let id = id.into();
        Region {
            name: id.clone(),
            id,
            position: None,
            profile,
            charge_override: None,
        }
    }

    pub fn with_position(mut self, lat: f64, lon: f64) -> Self {
        self.position = Some(Position { lat, lon });
        self
    }
}

/// Square table of physical distances in km, indexed by region id.
///
/// Construction only checks shape; [`DistanceMatrix::violations`] reports the
/// symmetry, diagonal and positivity invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    ids: Vec<String>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        if values.len() != n * n {
            return Err(Error::invalid(format!(
                "distance matrix for {n} ids needs {} values, got {}",
                n * n,
                values.len()
            )));
        }
        Ok(DistanceMatrix { ids, values })
    }

    /// Builds a matrix by evaluating `f` on every unordered pair.
    pub fn from_fn(ids: Vec<String>, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let n = ids.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(i, j);
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        DistanceMatrix { ids, values }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ids.len() + j]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn violations(&self) -> Vec<Violation> {
        let n = self.ids.len();
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for id in &self.ids {
            if !seen.insert(id.as_str()) {
                out.push(Violation::DuplicateDistanceId(id.clone()));
            }
        }
        for i in 0..n {
            let d = self.get(i, i);
            if d != 0.0 {
                out.push(Violation::NonzeroDiagonal {
                    id: self.ids[i].clone(),
                    value: d,
                });
            }
            for j in (i + 1)..n {
                let (ab, ba) = (self.get(i, j), self.get(j, i));
                let (a, b) = (self.ids[i].clone(), self.ids[j].clone());
                if !ab.is_finite() || !ba.is_finite() {
                    out.push(Violation::NonFiniteDistance { a, b });
                } else if ab != ba {
                    out.push(Violation::AsymmetricDistance { a, b, ab, ba });
                } else if ab <= 0.0 {
                    out.push(Violation::NonPositiveDistance { a, b, value: ab });
                }
            }
        }
        out
    }

    /// Reorders the matrix to follow `ids`. Every id must be present.
    pub fn aligned_to(&self, ids: &[String]) -> Result<Self> {
        let index: Vec<usize> = ids
            .iter()
            .map(|id| {
                self.position(id)
                    .ok_or_else(|| Error::invalid(format!("no distances for region {id}")))
            })
            .collect::<Result<_>>()?;
        let n = ids.len();
        let mut values = Vec::with_capacity(n * n);
        for &i in &index {
            for &j in &index {
                values.push(self.get(i, j));
            }
        }
        Ok(DistanceMatrix {
            ids: ids.to_vec(),
            values,
        })
    }
}

/// Migrant mass in persons per simulation step, origin (row) by destination
/// (column).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix {
    ids: Vec<String>,
    values: Vec<f64>,
}

impl FlowMatrix {
    pub fn zeros(ids: Vec<String>) -> Self {
        let n = ids.len();
        FlowMatrix {
            ids,
            values: vec![0.0; n * n],
        }
    }

    /// Checked constructor: entries finite and non-negative, diagonal zero.
    pub fn new(ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        if values.len() != n * n {
            return Err(Error::invalid(format!(
                "flow matrix for {n} ids needs {} values, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::invalid(format!(
                        "flow {} -> {} must be finite and >= 0, got {v}",
                        ids[i], ids[j]
                    )));
                }
                if i == j && v != 0.0 {
                    return Err(Error::invalid(format!(
                        "flow {} -> {} on the diagonal must be 0, got {v}",
                        ids[i], ids[j]
                    )));
                }
            }
        }
        Ok(FlowMatrix { ids, values })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ids.len() + j]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        let n = self.ids.len();
        self.values[i * n + j] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.ids.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Entry-wise sum; both matrices must share the same ids.
    pub fn add_assign(&mut self, other: &FlowMatrix) {
        assert_eq!(self.ids, other.ids, "flow matrices over different regions");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    pub fn scaled(&self, c: f64) -> FlowMatrix {
        FlowMatrix {
            ids: self.ids.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Reorders the matrix to follow `ids`. Fails naming every missing id.
    pub fn aligned_to(&self, ids: &[String]) -> Result<Self> {
        let missing: Vec<&str> = ids
            .iter()
            .filter(|id| !self.ids.contains(id))
            .map(String::as_str)
            .collect();
        let extra: Vec<&str> = self
            .ids
            .iter()
            .filter(|id| !ids.contains(id))
            .map(String::as_str)
            .collect();
        if !missing.is_empty() || !extra.is_empty() {
            let mut msg = String::from("flow matrix ids do not match regions");
            if !missing.is_empty() {
                msg.push_str(&format!("; missing: {}", missing.join(", ")));
            }
            if !extra.is_empty() {
                msg.push_str(&format!("; unknown: {}", extra.join(", ")));
            }
            return Err(Error::InvalidInput(msg));
        }
        let index: Vec<usize> = ids
            .iter()
            .map(|id| self.ids.iter().position(|x| x == id).unwrap())
            .collect();
        let mut out = FlowMatrix::zeros(ids.to_vec());
        for (a, &i) in index.iter().enumerate() {
            for (b, &j) in index.iter().enumerate() {
                out.set(a, b, self.get(i, j));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Coulomb,
    Gravity,
    NpvGatedCoulomb,
    NpvGatedGravity,
}

impl ModelKind {
    pub fn is_npv_gated(self) -> bool {
        matches!(self, ModelKind::NpvGatedCoulomb | ModelKind::NpvGatedGravity)
    }

    pub fn is_gravity(self) -> bool {
        matches!(self, ModelKind::Gravity | ModelKind::NpvGatedGravity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    Spherical,
    Circular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowForm {
    /// Density form, `k q ρ a² / (3 ϵ R²)`.
    Eq8,
    /// Total-charge form, `k q Q / (2π ϵ R²)`.
    Eq9,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChargeSource {
    Gdp,
    Population,
}

impl ChargeSource {
    pub fn indicator(self, profile: &EconomicProfile) -> f64 {
        match self {
            ChargeSource::Gdp => profile.gdp,
            ChargeSource::Population => profile.population,
        }
    }
}

/// Reference level separating negative (poor) from positive (rich) charges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawThreshold", into = "RawThreshold")]
pub enum ChargeThreshold {
    Fixed(f64),
    /// Population-weighted mean of the indicator over all regions.
    WeightedMean,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawThreshold {
    Number(f64),
    Rule(String),
}

impl TryFrom<RawThreshold> for ChargeThreshold {
    type Error = String;

    fn try_from(raw: RawThreshold) -> std::result::Result<Self, String> {
        match raw {
            RawThreshold::Number(v) => Ok(ChargeThreshold::Fixed(v)),
            RawThreshold::Rule(s) if s == "weighted-mean" => Ok(ChargeThreshold::WeightedMean),
            RawThreshold::Rule(s) => Err(format!(
                "charge_threshold must be a number or \"weighted-mean\", got \"{s}\""
            )),
        }
    }
}

impl From<ChargeThreshold> for RawThreshold {
    fn from(t: ChargeThreshold) -> Self {
        match t {
            ChargeThreshold::Fixed(v) => RawThreshold::Number(v),
            ChargeThreshold::WeightedMean => RawThreshold::Rule("weighted-mean".into()),
        }
    }
}

/// Affine economic-distance coefficients, `D = c0 + c1 · R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistanceCost {
    pub c0: f64,
    pub c1: f64,
}

impl Default for DistanceCost {
    fn default() -> Self {
        DistanceCost { c0: 0.0, c1: 1.0 }
    }
}

/// Per-pair benefit/cost table used by the NPV-gated models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NpvSource {
    pub table: PathBuf,
    #[serde(default = "default_benefits_column")]
    pub benefits_column: String,
    #[serde(default = "default_costs_column")]
    pub costs_column: String,
}

fn default_benefits_column() -> String {
    "benefits".into()
}

fn default_costs_column() -> String {
    "costs".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub model: ModelKind,
    pub k: f64,
    pub epsilon: f64,
    pub symmetry: Symmetry,
    pub flow_form: FlowForm,
    pub gravity: GravityParams,
    pub charge_source: ChargeSource,
    pub charge_threshold: ChargeThreshold,
    pub mobility_cap: f64,
    pub steps: usize,
    pub distance: DistanceCost,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub npv: Option<NpvSource>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            model: ModelKind::Coulomb,
            k: 1.0,
            epsilon: 1.0,
            symmetry: Symmetry::Circular,
            flow_form: FlowForm::Eq9,
            gravity: GravityParams::default(),
            charge_source: ChargeSource::Gdp,
            charge_threshold: ChargeThreshold::WeightedMean,
            mobility_cap: 0.05,
            steps: 0,
            distance: DistanceCost::default(),
            npv: None,
        }
    }
}

impl ScenarioConfig {
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut bad = |key: &'static str, message: String| {
            out.push(Violation::Config { key, message });
        };
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            bad("epsilon", format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.k.is_finite() && self.k >= 0.0) {
            bad("k", format!("k must be finite and >= 0, got {}", self.k));
        }
        if !(self.mobility_cap.is_finite() && (0.0..=1.0).contains(&self.mobility_cap)) {
            bad(
                "mobility_cap",
                format!("mobility_cap must be in [0,1], got {}", self.mobility_cap),
            );
        }
        for (key, v) in [("distance.c0", self.distance.c0), ("distance.c1", self.distance.c1)] {
            if !(v.is_finite() && v >= 0.0) {
                bad(key, format!("{key} must be finite and >= 0, got {v}"));
            }
        }
        for (key, message) in self.gravity.violations() {
            bad(key, message);
        }
        if let ChargeThreshold::Fixed(t) = self.charge_threshold {
            if !t.is_finite() {
                bad("charge_threshold", format!("charge_threshold must be finite, got {t}"));
            }
        }
        if self.model.is_npv_gated() && self.npv.is_none() {
            bad(
                "npv.table",
                "npv-gated models need an npv.table of per-pair benefits and costs".into(),
            );
        }
        out
    }
}

/// Fixed-plus-per-km cost of moving between two regions.
pub fn economic_distance(physical_distance: f64, c0: f64, c1: f64) -> Result<f64> {
    ensure_finite("physical_distance", physical_distance)?;
    ensure_finite("c0", c0)?;
    ensure_finite("c1", c1)?;
    if physical_distance < 0.0 || c0 < 0.0 || c1 < 0.0 {
        return Err(Error::invalid(format!(
            "economic distance inputs must be >= 0, got R={physical_distance}, c0={c0}, c1={c1}"
        )));
    }
    Ok(c0 + c1 * physical_distance)
}

/// One broken invariant found by [`validate_scenario`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyRegionId { index: usize },
    DuplicateRegionId(String),
    Region { id: String, message: String },
    Config { key: &'static str, message: String },
    MissingDistance(String),
    UnknownDistanceId(String),
    DuplicateDistanceId(String),
    NonzeroDiagonal { id: String, value: f64 },
    NonFiniteDistance { a: String, b: String },
    AsymmetricDistance { a: String, b: String, ab: f64, ba: f64 },
    NonPositiveDistance { a: String, b: String, value: f64 },
    NonPositiveEconomicDistance { a: String, b: String, value: f64 },
    NoPopulation,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyRegionId { index } => write!(f, "region #{index} has an empty id"),
            Violation::DuplicateRegionId(id) => write!(f, "duplicate region id {id}"),
            Violation::Region { id, message } => write!(f, "region {id}: {message}"),
            Violation::Config { message, .. } => f.write_str(message),
            Violation::MissingDistance(id) => write!(f, "missing distance entry for region {id}"),
            Violation::UnknownDistanceId(id) => {
                write!(f, "distance matrix has unknown region id {id}")
            }
            Violation::DuplicateDistanceId(id) => {
                write!(f, "distance matrix lists region id {id} twice")
            }
            Violation::NonzeroDiagonal { id, value } => {
                write!(f, "distance {id} -> {id} must be 0, got {value}")
            }
            Violation::NonFiniteDistance { a, b } => write!(f, "distance {a} <-> {b} is not finite"),
            Violation::AsymmetricDistance { a, b, ab, ba } => write!(
                f,
                "asymmetric distance between {a} and {b}: {a}->{b} = {ab}, {b}->{a} = {ba}"
            ),
            Violation::NonPositiveDistance { a, b, value } => write!(
                f,
                "distance between distinct regions {a} and {b} must be > 0, got {value}"
            ),
            Violation::NonPositiveEconomicDistance { a, b, value } => write!(
                f,
                "economic distance between {a} and {b} must be > 0 for the gravity model, got {value}"
            ),
            Violation::NoPopulation => f.write_str(
                "weighted-mean charge threshold needs at least one region with positive population",
            ),
        }
    }
}

/// Every violation found in a scenario.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, v) in self.violations.iter().enumerate() {
            if n > 0 {
                writeln!(f)?;
            }
            write!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// A scenario whose config, regions and distances satisfy every invariant.
/// Distances are aligned to the region order.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    config: ScenarioConfig,
    regions: Vec<Region>,
    distances: DistanceMatrix,
}

impl Scenario {
    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    pub fn region_ids(&self) -> Vec<String> {
        self.regions.iter().map(|r| r.id.clone()).collect()
    }
}

pub(crate) fn region_violations(regions: &[Region]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (index, r) in regions.iter().enumerate() {
        if r.id.is_empty() {
            out.push(Violation::EmptyRegionId { index });
            continue;
        }
        let count = seen.entry(r.id.as_str()).or_insert(0);
        *count += 1;
        if *count == 2 {
            out.push(Violation::DuplicateRegionId(r.id.clone()));
        }
        let mut region = |message: String| {
            out.push(Violation::Region {
                id: r.id.clone(),
                message,
            })
        };
        if let Some(p) = r.position {
            if !(p.lat.is_finite() && (-90.0..=90.0).contains(&p.lat)) {
                region(format!("latitude {} out of [-90,90]", p.lat));
            }
            if !(p.lon.is_finite() && (-180.0..=180.0).contains(&p.lon)) {
                region(format!("longitude {} out of [-180,180]", p.lon));
            }
        }
        for m in r.profile.violations() {
            region(m);
        }
        if let Some(q) = r.charge_override {
            if !q.is_finite() {
                region(format!("charge override must be finite, got {q}"));
            }
        }
    }
    out
}

/// Checks every invariant of the scenario and reports all violations at once.
pub fn validate_scenario(
    config: &ScenarioConfig,
    regions: &[Region],
    distances: &DistanceMatrix,
) -> Result<Scenario, ValidationReport> {
    let mut violations = config.violations();
    violations.extend(region_violations(regions));

    let region_ids: HashSet<&str> = regions.iter().map(|r| r.id.as_str()).collect();
    for id in distances.ids() {
        if !region_ids.contains(id.as_str()) {
            violations.push(Violation::UnknownDistanceId(id.clone()));
        }
    }
    let mut seen_missing = HashSet::new();
    for r in regions {
        if distances.position(&r.id).is_none() && seen_missing.insert(r.id.as_str()) {
            violations.push(Violation::MissingDistance(r.id.clone()));
        }
    }
    let matrix_violations = distances.violations();
    let matrix_ok = matrix_violations.is_empty();
    violations.extend(matrix_violations);

    if matrix_ok && config.model.is_gravity() && config.distance.c0 >= 0.0 && config.distance.c1 >= 0.0
    {
        let n = distances.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let d = config.distance.c0 + config.distance.c1 * distances.get(i, j);
                if d.is_nan() || d <= 0.0 {
                    violations.push(Violation::NonPositiveEconomicDistance {
                        a: distances.ids()[i].clone(),
                        b: distances.ids()[j].clone(),
                        value: d,
                    });
                }
            }
        }
    }

    if config.charge_threshold == ChargeThreshold::WeightedMean
        && !regions.iter().any(|r| r.profile.population > 0.0)
    {
        violations.push(Violation::NoPopulation);
    }

    if !violations.is_empty() {
        return Err(ValidationReport { violations });
    }
    let ids: Vec<String> = regions.iter().map(|r| r.id.clone()).collect();
    let distances = distances
        .aligned_to(&ids)
        .expect("distance ids checked against regions");
    Ok(Scenario {
        config: config.clone(),
        regions: regions.to_vec(),
        distances,
    })
}

impl From<ValidationReport> for Error {
    fn from(r: ValidationReport) -> Self {
        Error::Validation(r)
    }
}

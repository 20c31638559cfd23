//! Electrostatic analogy: regions carry signed charges, rich (positive)
//! regions act as attractors for poor (negative) ones, and migrant flow
//! follows an inverse-square law in the physical distance.

use std::f64::consts::PI;

use crate::error::{ensure_finite, Error, Result};
use crate::model::{
    ChargeSource, ChargeThreshold, DistanceMatrix, EconomicProfile, FlowForm, FlowMatrix, Region,
    ScenarioConfig, Symmetry,
};

fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be > 0, got {value}")))
    }
}

/// Coulomb coupling `K`: `1/(4πϵ)` for spherical, `1/(2πϵ)` for circular
/// symmetry.
pub fn coupling_constant(symmetry: Symmetry, epsilon: f64) -> Result<f64> {
    ensure_positive("epsilon", epsilon)?;
    Ok(match symmetry {
        Symmetry::Spherical => 1.0 / (4.0 * PI * epsilon),
        Symmetry::Circular => 1.0 / (2.0 * PI * epsilon),
    })
}

/// `K q1 q2 / r²`. Positive means repulsion, negative attraction.
pub fn coulomb_force(q1: f64, q2: f64, r: f64, coupling: f64) -> Result<f64> {
    ensure_positive("distance", r)?;
    ensure_finite("q1", q1)?;
    ensure_finite("q2", q2)?;
    ensure_finite("coupling", coupling)?;
    Ok(coupling * (q1 * q2) / (r * r))
}

/// How an attractor's charge is described.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttractorSource {
    TotalCharge(f64),
    /// Charge density spread over a region of the given radius (km).
    Density { rho: f64, radius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attractor {
    pub id: String,
    pub source: AttractorSource,
    /// Distance to the probe, km.
    pub distance: f64,
}

/// Field seen by a unit probe charge at distance `r` from one attractor.
///
/// The total-charge form uses the symmetry-dependent coupling; the density
/// form is `ρ a² / (3 ϵ r²)` regardless of `symmetry`.
pub fn field_at(source: &AttractorSource, r: f64, epsilon: f64, symmetry: Symmetry) -> Result<f64> {
    ensure_positive("distance", r)?;
    ensure_positive("epsilon", epsilon)?;
    match *source {
        AttractorSource::TotalCharge(q) => {
            ensure_finite("charge", q)?;
            Ok(coupling_constant(symmetry, epsilon)? * q / (r * r))
        }
        AttractorSource::Density { rho, radius } => {
            ensure_finite("density", rho)?;
            ensure_positive("radius", radius)?;
            Ok(rho * radius * radius / (3.0 * epsilon * r * r))
        }
    }
}

/// Force on a probe of charge `q` in field `field`.
pub fn attraction_force(q: f64, field: f64) -> Result<f64> {
    ensure_finite("probe charge", q)?;
    ensure_finite("field", field)?;
    Ok(q * field)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldContribution {
    pub attractor: String,
    pub field: f64,
}

/// Net field at a probe plus the per-attractor breakdown.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldSample {
    pub net: f64,
    pub contributions: Vec<FieldContribution>,
}

/// Sums the fields of every attractor at `probe`.
pub fn superposed_field(
    probe: &Region,
    attractors: &[Attractor],
    epsilon: f64,
    symmetry: Symmetry,
) -> Result<FieldSample> {
    let mut sample = FieldSample::default();
    for a in attractors {
        if a.distance <= 0.0 {
            return Err(Error::invalid(format!(
                "attractor {} is co-located with probe {}",
                a.id, probe.id
            )));
        }
        let field = field_at(&a.source, a.distance, epsilon, symmetry)
            .map_err(|e| e.in_pair(&probe.id, &a.id))?;
        sample.net += field;
        sample.contributions.push(FieldContribution {
            attractor: a.id.clone(),
            field,
        });
    }
    Ok(sample)
}

/// Field at region `probe` generated by every other region's charge.
pub fn region_field(
    probe: usize,
    regions: &[Region],
    charges: &ChargeAssignment,
    distances: &DistanceMatrix,
    epsilon: f64,
    symmetry: Symmetry,
) -> Result<FieldSample> {
    let attractors: Vec<Attractor> = regions
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != probe)
        .map(|(j, r)| Attractor {
            id: r.id.clone(),
            source: AttractorSource::TotalCharge(charges.charge(j)),
            distance: distances.get(probe, j),
        })
        .collect();
    superposed_field(&regions[probe], &attractors, epsilon, symmetry)
}

/// One signed charge per region, with the threshold used to assign signs.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeAssignment {
    ids: Vec<String>,
    charges: Vec<f64>,
    threshold: f64,
}

impl ChargeAssignment {
    pub fn new(ids: Vec<String>, charges: Vec<f64>, threshold: f64) -> Result<Self> {
        if ids.len() != charges.len() {
            return Err(Error::invalid(format!(
                "{} ids but {} charges",
                ids.len(),
                charges.len()
            )));
        }
        for (id, q) in ids.iter().zip(&charges) {
            ensure_finite(&format!("charge of {id}"), *q)?;
        }
        Ok(ChargeAssignment {
            ids,
            charges,
            threshold,
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn charges(&self) -> &[f64] {
        &self.charges
    }

    pub fn charge(&self, i: usize) -> f64 {
        self.charges[i]
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.ids.iter().position(|x| x == id).map(|i| self.charges[i])
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Resolves the threshold rule to a value over `regions`.
pub fn resolve_threshold(regions: &[Region], source: ChargeSource, rule: ChargeThreshold) -> Result<f64> {
    match rule {
        ChargeThreshold::Fixed(t) => {
            ensure_finite("charge threshold", t)?;
            Ok(t)
        }
        ChargeThreshold::WeightedMean => {
            let (weighted, total) = regions
                .iter()
                .filter(|r| r.profile.population > 0.0)
                .fold((0.0, 0.0), |(w, t), r| {
                    let p = r.profile.population;
                    (w + p * source.indicator(&r.profile), t + p)
                });
            if total <= 0.0 {
                return Err(Error::invalid(
                    "weighted-mean threshold needs a region with positive population",
                ));
            }
            Ok(weighted / total)
        }
    }
}

/// Signed charge of one region: the indicator itself, negative when below
/// `threshold` and zero when equal to it.
pub fn derive_charge(profile: &EconomicProfile, source: ChargeSource, threshold: f64) -> f64 {
    let indicator = source.indicator(profile);
    if indicator > threshold {
        indicator
    } else if indicator < threshold {
        -indicator
    } else {
        0.0
    }
}

/// Charges for every region; a region's `charge_override` wins over the
/// derived value.
pub fn derive_charges(
    regions: &[Region],
    source: ChargeSource,
    rule: ChargeThreshold,
) -> Result<ChargeAssignment> {
    let threshold = resolve_threshold(regions, source, rule)?;
    let charges = regions
        .iter()
        .map(|r| {
            r.charge_override
                .unwrap_or_else(|| derive_charge(&r.profile, source, threshold))
        })
        .collect();
    ChargeAssignment::new(regions.iter().map(|r| r.id.clone()).collect(), charges, threshold)
}

fn opposite_signs(a: f64, b: f64) -> bool {
    (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0)
}

/// Density-form flow `k |q_i| |ρ_j| a² / (3 ϵ R²)`; zero unless the signs
/// oppose.
pub fn flow_eq8(k: f64, q_i: f64, rho_j: f64, radius: f64, epsilon: f64, r: f64) -> Result<f64> {
    ensure_positive("distance", r)?;
    ensure_positive("radius", radius)?;
    ensure_positive("epsilon", epsilon)?;
    ensure_finite("q_i", q_i)?;
    ensure_finite("rho_j", rho_j)?;
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::invalid(format!("k must be finite and >= 0, got {k}")));
    }
    if !opposite_signs(q_i, rho_j) {
        return Ok(0.0);
    }
    Ok(k * q_i.abs() * rho_j.abs() * radius * radius / (3.0 * epsilon * r * r))
}

/// Total-charge flow `k |q_i| |Q_j| / (2π ϵ R²)`; zero unless the signs
/// oppose.
pub fn flow_eq9(k: f64, q_i: f64, q_j: f64, epsilon: f64, r: f64) -> Result<f64> {
    ensure_positive("distance", r)?;
    ensure_positive("epsilon", epsilon)?;
    ensure_finite("q_i", q_i)?;
    ensure_finite("Q_j", q_j)?;
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::invalid(format!("k must be finite and >= 0, got {k}")));
    }
    if !opposite_signs(q_i, q_j) {
        return Ok(0.0);
    }
    Ok(k * q_i.abs() * q_j.abs() / (2.0 * PI * epsilon * r * r))
}

/// Total charge that makes the two flow forms agree: `Q = (2π/3) ρ a²`.
pub fn equivalent_total_charge(rho: f64, radius: f64) -> f64 {
    2.0 * PI / 3.0 * rho * radius * radius
}

/// Inverse of [`equivalent_total_charge`] for a given radius.
pub fn equivalent_density(total: f64, radius: f64) -> f64 {
    3.0 * total / (2.0 * PI * radius * radius)
}

/// Flows for every poor → rich pair (`q_i < 0 < q_j`); all other entries
/// are zero.
///
/// With [`FlowForm::Eq8`] each destination's charge is spread as a density
/// over a unit radius, so both forms give the same matrix up to rounding.
pub fn coulomb_flow_matrix(
    regions: &[Region],
    distances: &DistanceMatrix,
    charges: &ChargeAssignment,
    config: &ScenarioConfig,
) -> Result<FlowMatrix> {
    assert_eq!(regions.len(), distances.len(), "distance matrix not aligned to regions");
    assert_eq!(regions.len(), charges.len(), "charges not aligned to regions");
    let ids: Vec<String> = regions.iter().map(|r| r.id.clone()).collect();
    let mut out = FlowMatrix::zeros(ids);
    for (i, ri) in regions.iter().enumerate() {
        let q_i = charges.charge(i);
        if q_i >= 0.0 {
            continue;
        }
        for (j, rj) in regions.iter().enumerate() {
            let q_j = charges.charge(j);
            if i == j || q_j <= 0.0 {
                continue;
            }
            let r = distances.get(i, j);
            let m = match config.flow_form {
                FlowForm::Eq9 => flow_eq9(config.k, q_i, q_j, config.epsilon, r),
                FlowForm::Eq8 => {
                    flow_eq8(config.k, q_i, equivalent_density(q_j, 1.0), 1.0, config.epsilon, r)
                }
            }
            .map_err(|e| e.in_pair(&ri.id, &rj.id))?;
            out.set(i, j, m);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn coupling_examples() {
        assert!(close(coupling_constant(Symmetry::Spherical, 1.0 / (4.0 * PI)).unwrap(), 1.0, 1e-15));
        assert!(close(coupling_constant(Symmetry::Circular, 1.0 / (2.0 * PI)).unwrap(), 1.0, 1e-15));
        assert!((coupling_constant(Symmetry::Spherical, 1.0).unwrap() - 0.0795775).abs() < 1e-7);
        assert!(coupling_constant(Symmetry::Circular, 0.0).is_err());
        assert!(coupling_constant(Symmetry::Circular, -1.0).is_err());
    }

    #[test]
    fn force_examples() {
        assert_eq!(coulomb_force(1.0, 1.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(coulomb_force(1.0, -1.0, 1.0, 1.0).unwrap(), -1.0);
        assert_eq!(coulomb_force(2.0, 3.0, 2.0, 1.0).unwrap(), 1.5);
        assert!(coulomb_force(1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn field_examples() {
        let zero = AttractorSource::TotalCharge(0.0);
        assert_eq!(field_at(&zero, 3.0, 1.0, Symmetry::Circular).unwrap(), 0.0);
        let q = AttractorSource::TotalCharge(2.0 * PI);
        assert!(close(field_at(&q, 1.0, 1.0, Symmetry::Circular).unwrap(), 1.0, 1e-15));
        let near = field_at(&q, 1.5, 0.3, Symmetry::Spherical).unwrap();
        let far = field_at(&q, 3.0, 0.3, Symmetry::Spherical).unwrap();
        assert!(close(far, near / 4.0, 1e-15));
        assert!(field_at(&q, 0.0, 1.0, Symmetry::Circular).is_err());
        let density = AttractorSource::Density { rho: 3.0, radius: 1.0 };
        assert!(close(field_at(&density, 1.0, 1.0, Symmetry::Spherical).unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn attraction_examples() {
        assert_eq!(attraction_force(0.0, 5.0).unwrap(), 0.0);
        assert_eq!(attraction_force(2.0, 3.0).unwrap(), 6.0);
        assert_eq!(attraction_force(-1.0, 1.0).unwrap(), -1.0);
        assert!(attraction_force(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn superposition_examples() {
        let probe = Region::new(
            "p",
            EconomicProfile {
                population: 1.0,
                gdp: 1.0,
                wage_rate: 1.0,
                unemployment_rate: 0.0,
            },
        );
        let empty = superposed_field(&probe, &[], 1.0, Symmetry::Circular).unwrap();
        assert_eq!(empty.net, 0.0);
        assert!(empty.contributions.is_empty());

        let pair = [
            Attractor {
                id: "plus".into(),
                source: AttractorSource::TotalCharge(5.0),
                distance: 2.0,
            },
            Attractor {
                id: "minus".into(),
                source: AttractorSource::TotalCharge(-5.0),
                distance: 2.0,
            },
        ];
        let s = superposed_field(&probe, &pair, 1.0, Symmetry::Circular).unwrap();
        assert_eq!(s.net, 0.0);
        assert!(s.contributions.iter().all(|c| c.field != 0.0));

        let colocated = [Attractor {
            id: "x".into(),
            source: AttractorSource::TotalCharge(1.0),
            distance: 0.0,
        }];
        let err = superposed_field(&probe, &colocated, 1.0, Symmetry::Circular).unwrap_err();
        assert!(err.to_string().contains("co-located"));
    }

    #[test]
    fn charge_examples() {
        let p = |gdp| EconomicProfile {
            population: 10.0,
            gdp,
            wage_rate: 1.0,
            unemployment_rate: 0.0,
        };
        assert_eq!(derive_charge(&p(60.0), ChargeSource::Gdp, 60.0), 0.0);
        assert_eq!(derive_charge(&p(100.0), ChargeSource::Gdp, 60.0), 100.0);
        assert_eq!(derive_charge(&p(30.0), ChargeSource::Gdp, 60.0), -30.0);
        assert_eq!(derive_charge(&p(30.0), ChargeSource::Population, 60.0), -10.0);
    }

    #[test]
    fn weighted_mean_threshold() {
        let mk = |id: &str, population, gdp| {
            Region::new(
                id,
                EconomicProfile {
                    population,
                    gdp,
                    wage_rate: 1.0,
                    unemployment_rate: 0.0,
                },
            )
        };
        let regions = vec![mk("a", 1.0, 10.0), mk("b", 3.0, 50.0), mk("c", 0.0, 1e9)];
        let t = resolve_threshold(&regions, ChargeSource::Gdp, ChargeThreshold::WeightedMean).unwrap();
        assert_eq!(t, 40.0);
        let charges = derive_charges(&regions, ChargeSource::Gdp, ChargeThreshold::WeightedMean).unwrap();
        assert_eq!(charges.charges(), &[-10.0, 50.0, 1e9]);
        assert!(resolve_threshold(&regions[2..], ChargeSource::Gdp, ChargeThreshold::WeightedMean).is_err());

        let mut fixed = regions.clone();
        fixed[0].charge_override = Some(7.0);
        let charges = derive_charges(&fixed, ChargeSource::Gdp, ChargeThreshold::Fixed(20.0)).unwrap();
        assert_eq!(charges.charges(), &[7.0, 50.0, 1e9]);
        assert_eq!(charges.threshold(), 20.0);
    }

    #[test]
    fn eq8_examples() {
        assert_eq!(flow_eq8(1.0, 1.0, 3.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(flow_eq8(1.0, -1.0, 3.0, 1.0, 1.0, 1.0).unwrap(), 1.0);
        let near = flow_eq8(0.4, -2.0, 7.0, 3.0, 0.9, 5.0).unwrap();
        let far = flow_eq8(0.4, -2.0, 7.0, 3.0, 0.9, 10.0).unwrap();
        assert!(close(far, near / 4.0, 1e-15));
        assert!(flow_eq8(1.0, -1.0, 3.0, 1.0, 1.0, 0.0).is_err());
        assert!(flow_eq8(1.0, -1.0, 3.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn eq9_examples() {
        assert!(close(flow_eq9(1.0, -1.0, 2.0 * PI, 1.0, 1.0).unwrap(), 1.0, 1e-15));
        assert_eq!(flow_eq9(1.0, -1.0, 0.0, 1.0, 1.0).unwrap(), 0.0);
        assert!(flow_eq9(1.0, -1.0, 1.0, 1.0, 0.0).is_err());
        assert!(flow_eq9(-1.0, -1.0, 1.0, 1.0, 1.0).is_err());
        let (rho, a) = (2.5, 1.7);
        let via8 = flow_eq8(0.3, -4.0, rho, a, 1.2, 9.0).unwrap();
        let via9 = flow_eq9(0.3, -4.0, equivalent_total_charge(rho, a), 1.2, 9.0).unwrap();
        assert!(close(via8, via9, 1e-14));
    }

    fn scenario(charges: &[f64]) -> (Vec<Region>, DistanceMatrix, ChargeAssignment) {
        let ids: Vec<String> = (0..charges.len()).map(|i| format!("r{i}")).collect();
        let regions = ids
            .iter()
            .map(|id| {
                Region::new(
                    id.clone(),
                    EconomicProfile {
                        population: 1.0,
                        gdp: 1.0,
                        wage_rate: 1.0,
                        unemployment_rate: 0.0,
                    },
                )
            })
            .collect();
        let d = DistanceMatrix::from_fn(ids.clone(), |i, j| 1.0 + (i + j) as f64);
        let q = ChargeAssignment::new(ids, charges.to_vec(), 0.0).unwrap();
        (regions, d, q)
    }

    #[test]
    fn same_sign_matrix_is_zero() {
        let (regions, d, q) = scenario(&[1.0, 2.0, 3.0]);
        let m = coulomb_flow_matrix(&regions, &d, &q, &ScenarioConfig::default()).unwrap();
        assert_eq!(m.total(), 0.0);
    }

    #[test]
    fn single_poor_rich_pair_flows_poor_to_rich() {
        let (regions, d, q) = scenario(&[5.0, -2.0]);
        let m = coulomb_flow_matrix(&regions, &d, &q, &ScenarioConfig::default()).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
        assert!(m.get(1, 0) > 0.0);
        assert_eq!(m.get(0, 0), 0.0);
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn zero_charge_regions_do_not_flow() {
        let (regions, d, q) = scenario(&[0.0, -1.0, 2.0]);
        let m = coulomb_flow_matrix(&regions, &d, &q, &ScenarioConfig::default()).unwrap();
        assert_eq!(m.row(0).iter().sum::<f64>(), 0.0);
        assert_eq!(m.get(1, 0), 0.0);
        assert!(m.get(1, 2) > 0.0);
    }

    #[test]
    fn eq8_route_matches_eq9_route() {
        let (regions, d, q) = scenario(&[-3.0, 2.0, -1.0, 8.0]);
        let cfg9 = ScenarioConfig { k: 0.6, epsilon: 1.3, ..Default::default() };
        let cfg8 = ScenarioConfig { flow_form: FlowForm::Eq8, ..cfg9.clone() };
        let m9 = coulomb_flow_matrix(&regions, &d, &q, &cfg9).unwrap();
        let m8 = coulomb_flow_matrix(&regions, &d, &q, &cfg8).unwrap();
        for (a, b) in m9.values().iter().zip(m8.values()) {
            assert!(close(*a, *b, 1e-14) || (*a == 0.0 && *b == 0.0));
        }
    }
}

//! Fitting model constants to observed flow matrices.
//!
//! The Coulomb flow `k |q_i| |Q_j| / (2π ϵ R²)` only identifies the ratio
//! `λ = k / (2π ϵ)`, which is estimated in closed form by least squares.
//! The gravity model is fitted by ordinary least squares on its log-linear
//! form.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::classical::{gravity_flow, GravityParams};
use crate::coulomb::ChargeAssignment;
use crate::error::{Error, Result};
use crate::model::{DistanceMatrix, FlowMatrix, Region};

#[derive(Debug, Clone, PartialEq)]
pub enum FittedParams {
    /// Combined coupling `λ = k / (2π ϵ)`.
    Coulomb { lambda: f64 },
    Gravity(GravityParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairResidual {
    pub origin: String,
    pub destination: String,
    pub observed: f64,
    pub predicted: f64,
}

impl PairResidual {
    pub fn residual(&self) -> f64 {
        self.observed - self.predicted
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitDiagnostics {
    /// Pairs that entered the fit.
    pub pair_count: usize,
    /// Pairs left out: observed flow the Coulomb model cannot produce
    /// (not poor → rich), or zero/unloggable pairs in the gravity fit.
    pub degenerate_pair_count: usize,
    /// The unconstrained coupling was negative and was clamped to zero.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub params: FittedParams,
    /// Residual sum of squares in flow units over the fitted pairs.
    pub rss: f64,
    pub residuals: Vec<PairResidual>,
    pub diagnostics: FitDiagnostics,
}

impl CalibrationResult {
    pub fn lambda(&self) -> Option<f64> {
        match self.params {
            FittedParams::Coulomb { lambda } => Some(lambda),
            FittedParams::Gravity(_) => None,
        }
    }

    pub fn gravity(&self) -> Option<&GravityParams> {
        match &self.params {
            FittedParams::Gravity(p) => Some(p),
            FittedParams::Coulomb { .. } => None,
        }
    }
}

/// Distance-cost factor `k / (2π ϵ R²)`.
pub fn distance_cost_factor(k: f64, epsilon: f64, r: f64) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid(format!("distance must be > 0, got {r}")));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(k / (2.0 * PI * epsilon * r * r))
}

/// Back-solves `k = 2π ϵ λ` once the permissiveness is known.
pub fn coupling_from_lambda(lambda: f64, epsilon: f64) -> f64 {
    2.0 * PI * epsilon * lambda
}

/// Coulomb regressor `|q_i| |Q_j| / R²` for a poor → rich pair.
pub fn coulomb_regressor(q_i: f64, q_j: f64, r: f64) -> f64 {
    q_i.abs() * q_j.abs() / (r * r)
}

/// Least-squares `λ* = Σ x m / Σ x²` over poor → rich pairs, clamped at 0.
pub fn fit_coulomb_coupling(
    observed: &FlowMatrix,
    charges: &ChargeAssignment,
    distances: &DistanceMatrix,
) -> Result<CalibrationResult> {
    let ids = charges.ids().to_vec();
    let observed = observed.aligned_to(&ids)?;
    let distances = distances.aligned_to(&ids)?;
    let n = ids.len();

    let mut pairs = Vec::new();
    let mut degenerate = 0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (q_i, q_j) = (charges.charge(i), charges.charge(j));
            let r = distances.get(i, j);
            if q_i < 0.0 && q_j > 0.0 && r > 0.0 {
                pairs.push((i, j, coulomb_regressor(q_i, q_j, r), observed.get(i, j)));
            } else if observed.get(i, j) > 0.0 {
                degenerate += 1;
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::DegenerateFit(
            "no poor -> rich pair with positive distance to fit".into(),
        ));
    }
    let (sxm, sxx) = pairs
        .iter()
        .fold((0.0, 0.0), |(sxm, sxx), &(_, _, x, m)| (sxm + x * m, sxx + x * x));
    if sxx <= 0.0 || !sxx.is_finite() {
        return Err(Error::DegenerateFit("every regressor |q_i||Q_j|/R^2 is zero".into()));
    }
    let raw = sxm / sxx;
    let lambda = raw.max(0.0);

    let residuals: Vec<PairResidual> = pairs
        .iter()
        .map(|&(i, j, x, m)| PairResidual {
            origin: ids[i].clone(),
            destination: ids[j].clone(),
            observed: m,
            predicted: lambda * x,
        })
        .collect();
    let rss = residuals.iter().map(|r| r.residual().powi(2)).sum();
    Ok(CalibrationResult {
        params: FittedParams::Coulomb { lambda },
        rss,
        residuals,
        diagnostics: FitDiagnostics {
            pair_count: pairs.len(),
            degenerate_pair_count: degenerate,
            clamped: raw < 0.0,
        },
    })
}

const GRAVITY_COLUMNS: [&str; 6] = [
    "intercept",
    "ln_population_origin",
    "ln_population_destination",
    "ln_economic_distance",
    "wage_gap",
    "unemployment_gap",
];

/// Columns of `design` that lie in the span of earlier columns, each with
/// the earlier columns it depends on.
fn collinear_columns(design: &DMatrix<f64>, names: &[&str]) -> Vec<String> {
    const TOL: f64 = 1e-9;
    let mut accepted: Vec<usize> = Vec::new();
    let mut report = Vec::new();
    for c in 0..design.ncols() {
        let col = design.column(c).into_owned();
        let norm = col.norm();
        if norm == 0.0 {
            report.push(format!("{} is identically zero", names[c]));
            continue;
        }
        if accepted.is_empty() {
            accepted.push(c);
            continue;
        }
        let basis = design.select_columns(&accepted);
        let gram = basis.transpose() * &basis;
        let coeffs = gram
            .cholesky()
            .map(|ch| ch.solve(&(basis.transpose() * &col)))
            .unwrap_or_else(|| DVector::zeros(accepted.len()));
        let residual = &col - &basis * &coeffs;
        if residual.norm() <= TOL * norm {
            let partners: Vec<&str> = accepted
                .iter()
                .zip(coeffs.iter())
                .filter(|&(&a, b)| b.abs() * design.column(a).norm() > TOL * norm)
                .map(|(&a, _)| names[a])
                .collect();
            report.push(format!("{} is collinear with {}", names[c], partners.join(" + ")));
        } else {
            accepted.push(c);
        }
    }
    report
}

/// Ordinary least squares on
/// `ln M = ln G + α ln P_i + β ln P_j − γ ln D + θ ΔW − η ΔU`,
/// solved through the (column-equilibrated) normal equations.
///
/// Pairs with zero observed flow or zero population are left out and
/// counted as degenerate. `economic` holds the economic distances `D`.
pub fn fit_gravity_params(
    observed: &FlowMatrix,
    regions: &[Region],
    economic: &DistanceMatrix,
) -> Result<CalibrationResult> {
    let ids: Vec<String> = regions.iter().map(|r| r.id.clone()).collect();
    let observed = observed.aligned_to(&ids)?;
    let economic = economic.aligned_to(&ids)?;
    let n = ids.len();

    let mut rows: Vec<(usize, usize)> = Vec::new();
    let mut degenerate = 0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let usable = observed.get(i, j) > 0.0
                && regions[i].profile.population > 0.0
                && regions[j].profile.population > 0.0
                && economic.get(i, j) > 0.0;
            if usable {
                rows.push((i, j));
            } else {
                degenerate += 1;
            }
        }
    }
    let p = GRAVITY_COLUMNS.len();
    if rows.len() < p {
        return Err(Error::DegenerateFit(format!(
            "gravity fit needs at least {p} pairs with positive observed flow, got {}",
            rows.len()
        )));
    }

    let mut design = DMatrix::<f64>::zeros(rows.len(), p);
    let mut target = DVector::<f64>::zeros(rows.len());
    for (row, &(i, j)) in rows.iter().enumerate() {
        let (a, b) = (&regions[i].profile, &regions[j].profile);
        let features = [
            1.0,
            a.population.ln(),
            b.population.ln(),
            economic.get(i, j).ln(),
            b.wage_rate - a.wage_rate,
            b.unemployment_rate - a.unemployment_rate,
        ];
        for (c, v) in features.into_iter().enumerate() {
            design[(row, c)] = v;
        }
        target[row] = observed.get(i, j).ln();
    }

    let collinear = collinear_columns(&design, &GRAVITY_COLUMNS);
    if !collinear.is_empty() {
        return Err(Error::DegenerateFit(format!(
            "rank-deficient design: {}",
            collinear.join("; ")
        )));
    }

    let scales: Vec<f64> = (0..p).map(|c| design.column(c).norm()).collect();
    let mut scaled = design.clone();
    for (c, s) in scales.iter().enumerate() {
        scaled.column_mut(c).scale_mut(1.0 / s);
    }
    let normal = scaled.transpose() * &scaled;
    let rhs = scaled.transpose() * &target;
    let solution = normal
        .cholesky()
        .ok_or_else(|| Error::DegenerateFit("normal equations are not positive definite".into()))?
        .solve(&rhs);
    let coef: Vec<f64> = solution.iter().zip(&scales).map(|(b, s)| b / s).collect();

    let params = GravityParams {
        g: coef[0].exp(),
        alpha: coef[1],
        beta: coef[2],
        gamma: -coef[3],
        theta: coef[4],
        eta: -coef[5],
    };
    let residuals = rows
        .iter()
        .map(|&(i, j)| {
            let predicted = gravity_flow(
                &regions[i].profile,
                &regions[j].profile,
                economic.get(i, j),
                &params,
            )
            .map_err(|e| e.in_pair(&ids[i], &ids[j]))?;
            Ok(PairResidual {
                origin: ids[i].clone(),
                destination: ids[j].clone(),
                observed: observed.get(i, j),
                predicted,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rss = residuals.iter().map(|r| r.residual().powi(2)).sum();
    Ok(CalibrationResult {
        params: FittedParams::Gravity(params),
        rss,
        residuals,
        diagnostics: FitDiagnostics {
            pair_count: rows.len(),
            degenerate_pair_count: degenerate,
            clamped: false,
        },
    })
}

/// Flow matrix predicted by a fitted result, over the given ids.
pub fn predicted_matrix(result: &CalibrationResult, ids: &[String]) -> Result<FlowMatrix> {
    let mut m = FlowMatrix::zeros(ids.to_vec());
    for r in &result.residuals {
        let i = ids.iter().position(|x| *x == r.origin);
        let j = ids.iter().position(|x| *x == r.destination);
        match (i, j) {
            (Some(i), Some(j)) => m.set(i, j, r.predicted),
            _ => {
                return Err(Error::invalid(format!(
                    "pair {} -> {} not among the ids",
                    r.origin, r.destination
                )))
            }
        }
    }
    Ok(m)
}

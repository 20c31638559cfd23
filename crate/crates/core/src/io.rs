//! File formats: region tables, square distance/flow matrices, long-form
//! time series and per-pair NPV tables are CSV; scenario configs are TOML.
//! Great-circle distances for regions with coordinates live here too.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use crate::classical::{NpvInputs, NpvTable};
use crate::dynamics::{TimeSeries, TimeSeriesRecord};
use crate::error::{Error, Result};
use crate::model::{DistanceMatrix, EconomicProfile, FlowMatrix, Position, Region, ScenarioConfig};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

pub const REGION_COLUMNS: [&str; 8] = [
    "id",
    "name",
    "lat",
    "lon",
    "population",
    "gdp",
    "wage_rate",
    "unemployment_rate",
];

pub const TIMESERIES_COLUMNS: [&str; 5] = ["step", "region_id", "population", "charge", "net_inflow"];

/// Great-circle distance in km between two points given in degrees.
pub fn haversine_distance(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> Result<f64> {
    for lat in [lat1, lat2] {
        if !(lat.is_finite() && (-90.0..=90.0).contains(&lat)) {
            return Err(Error::invalid(format!("latitude {lat} out of [-90,90]")));
        }
    }
    for lon in [lon1, lon2] {
        if !(lon.is_finite() && (-180.0..=180.0).contains(&lon)) {
            return Err(Error::invalid(format!("longitude {lon} out of [-180,180]")));
        }
    }
    let (phi1, phi2) = (lat1.to_radians(), lat2.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (lon2 - lon1).to_radians();
    let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    let a = a.clamp(0.0, 1.0);
    Ok(2.0 * a.sqrt().atan2((1.0 - a).sqrt()) * EARTH_RADIUS_KM)
}

/// Pairwise great-circle distances. Every region must have a position.
pub fn distances_from_positions(regions: &[Region]) -> Result<DistanceMatrix> {
    let positions: Vec<Position> = regions
        .iter()
        .map(|r| {
            r.position.ok_or_else(|| {
                Error::invalid(format!(
                    "region {} has no coordinates; supply a distance matrix",
                    r.id
                ))
            })
        })
        .collect::<Result<_>>()?;
    let n = regions.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (positions[i], positions[j]);
            let d = haversine_distance(a.lat, a.lon, b.lat, b.lon)?;
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    DistanceMatrix::new(regions.iter().map(|r| r.id.clone()).collect(), values)
}

/// Formats with at most 12 significant digits, using the shortest form that
/// reads back to the rounded value.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let magnitude = rounded.abs();
    if (1e-5..1e15).contains(&magnitude) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_error(path: &Path, line: Option<u64>, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line());
    parse_error(path, line, e.to_string())
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn number(path: &Path, line: u64, column: &str, raw: &str) -> Result<f64> {
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| {
            parse_error(
                path,
                Some(line),
                format!("column {column}: non-numeric value '{raw}'"),
            )
        })
}

fn optional_number(path: &Path, line: u64, column: &str, raw: &str) -> Result<Option<f64>> {
    if raw.is_empty() {
        Ok(None)
    } else {
        number(path, line, column, raw).map(Some)
    }
}

pub fn load_regions(path: impl AsRef<Path>) -> Result<Vec<Region>> {
    let path = path.as_ref();
    parse_regions(&read_file(path)?, path)
}

/// Parses a region table; `path` labels errors only.
pub fn parse_regions(text: &str, path: &Path) -> Result<Vec<Region>> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let names: Vec<&str> = headers.iter().collect();
    let with_charge = names.len() == REGION_COLUMNS.len() + 1;
    let prefix_ok = names.len() >= REGION_COLUMNS.len() && names[..REGION_COLUMNS.len()] == REGION_COLUMNS;
    if !prefix_ok || (with_charge && names[REGION_COLUMNS.len()] != "charge") || names.len() > REGION_COLUMNS.len() + 1
    {
        let missing: Vec<&str> = REGION_COLUMNS
            .iter()
            .filter(|c| !names.contains(c))
            .copied()
            .collect();
        let detail = if missing.is_empty() {
            String::new()
        } else {
            format!(" (missing column {})", missing.join(", "))
        };
        return Err(parse_error(
            path,
            Some(1),
            format!(
                "header must be exactly {}[,charge], got {}{detail}",
                REGION_COLUMNS.join(","),
                names.join(",")
            ),
        ));
    }

    let mut regions = Vec::new();
    let mut first_line: HashMap<String, u64> = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |c: usize| record.get(c).unwrap_or("");
        let id = field(0).to_string();
        if id.is_empty() {
            return Err(parse_error(path, Some(line), "column id: empty id"));
        }
        if let Some(prev) = first_line.get(&id) {
            return Err(parse_error(
                path,
                Some(line),
                format!("duplicate id {id} on lines {prev} and {line}"),
            ));
        }
        first_line.insert(id.clone(), line);

        let lat = optional_number(path, line, "lat", field(2))?;
        let lon = optional_number(path, line, "lon", field(3))?;
        let position = match (lat, lon) {
            (Some(lat), Some(lon)) => {
                if !(-90.0..=90.0).contains(&lat) {
                    return Err(parse_error(path, Some(line), format!("column lat: {lat} out of [-90,90]")));
                }
                if !(-180.0..=180.0).contains(&lon) {
                    return Err(parse_error(path, Some(line), format!("column lon: {lon} out of [-180,180]")));
                }
                Some(Position { lat, lon })
            }
            (None, None) => None,
            _ => {
                return Err(parse_error(
                    path,
                    Some(line),
                    "lat and lon must both be given or both be empty",
                ))
            }
        };
        let profile = EconomicProfile {
            population: number(path, line, "population", field(4))?,
            gdp: number(path, line, "gdp", field(5))?,
            wage_rate: number(path, line, "wage_rate", field(6))?,
            unemployment_rate: number(path, line, "unemployment_rate", field(7))?,
        };
        if let Some(problem) = profile.violations().into_iter().next() {
            return Err(parse_error(path, Some(line), problem));
        }
        let charge_override = if with_charge {
            optional_number(path, line, "charge", field(8))?
        } else {
            None
        };
        regions.push(Region {
            id,
            name: field(1).to_string(),
            position,
            profile,
            charge_override,
        });
    }
    Ok(regions)
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) || s.trim() != s {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn regions_to_csv(regions: &[Region]) -> String {
    let with_charge = regions.iter().any(|r| r.charge_override.is_some());
    let mut out = REGION_COLUMNS.join(",");
    if with_charge {
        out.push_str(",charge");
    }
    out.push('\n');
    for r in regions {
        let (lat, lon) = r
            .position
            .map_or((String::new(), String::new()), |p| (format_number(p.lat), format_number(p.lon)));
        let mut cells = vec![
            csv_cell(&r.id),
            csv_cell(&r.name),
            lat,
            lon,
            format_number(r.profile.population),
            format_number(r.profile.gdp),
            format_number(r.profile.wage_rate),
            format_number(r.profile.unemployment_rate),
        ];
        if with_charge {
            cells.push(r.charge_override.map(format_number).unwrap_or_default());
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_regions(regions: &[Region], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &regions_to_csv(regions))
}

/// Reads a square table with an id header row and a leading id column.
/// Rows may come in any order; the result follows the header order.
fn parse_square(text: &str, path: &Path) -> Result<(Vec<String>, Vec<f64>)> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let ids: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut seen = HashSet::new();
    for id in &ids {
        if id.is_empty() {
            return Err(parse_error(path, Some(1), "empty id in header"));
        }
        if !seen.insert(id.as_str()) {
            return Err(parse_error(path, Some(1), format!("id {id} appears twice in header")));
        }
    }
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let n = ids.len();
    let mut values = vec![0.0; n * n];
    let mut filled = vec![false; n];
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let row_id = record.get(0).unwrap_or("");
        let Some(&i) = index.get(row_id) else {
            return Err(parse_error(path, Some(line), format!("unknown id {row_id}")));
        };
        if filled[i] {
            return Err(parse_error(path, Some(line), format!("row {row_id} appears twice")));
        }
        filled[i] = true;
        for (j, id) in ids.iter().enumerate() {
            values[i * n + j] = number(path, line, id, record.get(j + 1).unwrap_or(""))?;
        }
    }
    let missing: Vec<&str> = ids
        .iter()
        .zip(&filled)
        .filter(|(_, f)| !**f)
        .map(|(id, _)| id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(parse_error(path, None, format!("missing rows for ids {}", missing.join(", "))));
    }
    Ok((ids, values))
}

fn square_to_csv(corner: &str, ids: &[String], get: impl Fn(usize, usize) -> f64) -> String {
    let mut out = String::from(corner);
    for id in ids {
        out.push(',');
        out.push_str(&csv_cell(id));
    }
    out.push('\n');
    for (i, id) in ids.iter().enumerate() {
        out.push_str(&csv_cell(id));
        for j in 0..ids.len() {
            out.push(',');
            out.push_str(&format_number(get(i, j)));
        }
        out.push('\n');
    }
    out
}

pub fn load_distance_matrix(path: impl AsRef<Path>) -> Result<DistanceMatrix> {
    let path = path.as_ref();
    parse_distance_matrix(&read_file(path)?, path)
}

pub fn parse_distance_matrix(text: &str, path: &Path) -> Result<DistanceMatrix> {
    let (ids, values) = parse_square(text, path)?;
    let matrix = DistanceMatrix::new(ids, values)?;
    let problems = matrix.violations();
    if !problems.is_empty() {
        let msg: Vec<String> = problems.iter().map(ToString::to_string).collect();
        return Err(parse_error(path, None, msg.join("; ")));
    }
    Ok(matrix)
}

pub fn distance_matrix_to_csv(matrix: &DistanceMatrix) -> String {
    square_to_csv("id", matrix.ids(), |i, j| matrix.get(i, j))
}

pub fn write_distance_matrix(matrix: &DistanceMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &distance_matrix_to_csv(matrix))
}

pub fn load_flow_matrix(path: impl AsRef<Path>) -> Result<FlowMatrix> {
    let path = path.as_ref();
    parse_flow_matrix(&read_file(path)?, path)
}

pub fn parse_flow_matrix(text: &str, path: &Path) -> Result<FlowMatrix> {
    let (ids, values) = parse_square(text, path)?;
    FlowMatrix::new(ids, values).map_err(|e| parse_error(path, None, e.to_string()))
}

/// Header `origin,<destination ids>`, one row per origin.
pub fn flow_matrix_to_csv(matrix: &FlowMatrix) -> String {
    square_to_csv("origin", matrix.ids(), |i, j| matrix.get(i, j))
}

pub fn write_flow_matrix(matrix: &FlowMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &flow_matrix_to_csv(matrix))
}

pub fn timeseries_to_csv(series: &TimeSeries) -> String {
    let mut out = TIMESERIES_COLUMNS.join(",");
    out.push('\n');
    for r in &series.records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.step,
            csv_cell(&r.region_id),
            format_number(r.population),
            format_number(r.charge),
            format_number(r.net_inflow)
        ));
    }
    out
}

pub fn write_timeseries(series: &TimeSeries, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &timeseries_to_csv(series))
}

pub fn load_timeseries(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let path = path.as_ref();
    parse_timeseries(&read_file(path)?, path)
}

pub fn parse_timeseries(text: &str, path: &Path) -> Result<TimeSeries> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != TIMESERIES_COLUMNS {
        return Err(parse_error(
            path,
            Some(1),
            format!("header must be exactly {}", TIMESERIES_COLUMNS.join(",")),
        ));
    }
    let mut series = TimeSeries::default();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let raw_step = &record[0];
        let step = raw_step
            .parse::<usize>()
            .map_err(|_| parse_error(path, Some(line), format!("column step: not an integer '{raw_step}'")))?;
        series.records.push(TimeSeriesRecord {
            step,
            region_id: record[1].to_string(),
            population: number(path, line, "population", &record[2])?,
            charge: number(path, line, "charge", &record[3])?,
            net_inflow: number(path, line, "net_inflow", &record[4])?,
        });
    }
    Ok(series)
}

/// Parses a scenario config. Unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
}

/// Loads a config; a relative `npv.table` is resolved against the config's
/// directory.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let mut config = parse_config(&read_file(path)?).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    if let Some(npv) = config.npv.as_mut() {
        if npv.table.is_relative() {
            let base = path.parent().map(Path::to_path_buf).unwrap_or_else(PathBuf::new);
            npv.table = base.join(&npv.table);
        }
    }
    Ok(config)
}

pub fn config_to_toml(config: &ScenarioConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| Error::Config(e.to_string()))
}

/// Reads `origin,destination,<benefits>,<costs>` rows (extra columns are
/// ignored) into net values `benefits − costs`.
pub fn load_npv_table(path: impl AsRef<Path>, benefits_column: &str, costs_column: &str) -> Result<NpvTable> {
    let path = path.as_ref();
    parse_npv_table(&read_file(path)?, path, benefits_column, costs_column)
}

pub fn parse_npv_table(text: &str, path: &Path, benefits_column: &str, costs_column: &str) -> Result<NpvTable> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_error(path, Some(1), format!("missing column {name}")))
    };
    let (o, d) = (column("origin")?, column("destination")?);
    let (b, c) = (column(benefits_column)?, column(costs_column)?);
    let mut table = NpvTable::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let (origin, destination) = (&record[o], &record[d]);
        if table.get(origin, destination).is_some() {
            return Err(parse_error(
                path,
                Some(line),
                format!("pair {origin} -> {destination} appears twice"),
            ));
        }
        let inputs = NpvInputs {
            benefits: number(path, line, benefits_column, &record[b])?,
            costs: number(path, line, costs_column, &record[c])?,
        };
        let value = inputs
            .value()
            .map_err(|e| parse_error(path, Some(line), e.to_string()))?;
        table.insert(origin, destination, value);
    }
    Ok(table)
}

use std::fs;

use migration_core::io;
use migration_core::model::FlowMatrix;
use migration_core::Error;

#[test]
fn files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let regions_path = dir.path().join("regions.csv");
    fs::write(
        &regions_path,
        "id,name,lat,lon,population,gdp,wage_rate,unemployment_rate\n\
         ro,Romania,44.43,26.10,19000000,300,8,0.05\n\
         de,Germany,52.52,13.40,84000000,4000,25,0.03\n",
    )
    .unwrap();
    let regions = io::load_regions(&regions_path).unwrap();
    assert_eq!(regions.len(), 2);

    let d = io::distances_from_positions(&regions).unwrap();
    assert!((d.get(0, 1) - 1300.0).abs() < 20.0, "{}", d.get(0, 1));

    let out = dir.path().join("d.csv");
    io::write_distance_matrix(&d, &out).unwrap();
    let back = io::load_distance_matrix(&out).unwrap();
    assert_eq!(back.ids(), d.ids());
    assert!((back.get(0, 1) - d.get(0, 1)).abs() <= 1e-9 * d.get(0, 1));

    let flows = FlowMatrix::new(d.ids().to_vec(), vec![0.0, 12.5, 0.0, 0.0]).unwrap();
    let out = dir.path().join("f.csv");
    io::write_flow_matrix(&flows, &out).unwrap();
    assert_eq!(io::load_flow_matrix(&out).unwrap(), flows);
}

#[test]
fn positionless_regions_need_a_matrix() {
    let text = "id,name,lat,lon,population,gdp,wage_rate,unemployment_rate\na,A,,,1,1,1,0\nb,B,1,1,1,1,1,0\n";
    let regions = io::parse_regions(text, "r.csv".as_ref()).unwrap();
    let err = io::distances_from_positions(&regions).unwrap_err().to_string();
    assert!(err.contains("region a has no coordinates"), "{err}");
}

#[test]
fn missing_and_unwritable_files() {
    let dir = tempfile::tempdir().unwrap();
    let err = io::load_regions(dir.path().join("nope.csv")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    let m = FlowMatrix::zeros(vec!["a".into()]);
    let err = io::write_flow_matrix(&m, dir.path().join("no/such/dir/f.csv")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
}

#[test]
fn npv_table_path_is_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.toml");
    fs::write(&cfg, "model = \"npv-gated-coulomb\"\n[npv]\ntable = \"pairs.csv\"\n").unwrap();
    let config = io::load_config(&cfg).unwrap();
    assert_eq!(config.npv.unwrap().table, dir.path().join("pairs.csv"));
}

#[test]
fn config_errors_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "steps = -3\n").unwrap();
    let err = io::load_config(&cfg).unwrap_err().to_string();
    assert!(err.contains("bad.toml"), "{err}");
}

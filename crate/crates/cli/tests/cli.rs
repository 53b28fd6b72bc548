use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

const M_PER_DEG: f64 = 111_194.926_644_558_7;
const LAT: f64 = 40.0;
const LON: f64 = -105.0;

fn north(m: f64) -> f64 {
    LAT + m / M_PER_DEG
}

fn east(m: f64) -> f64 {
    LON + m / (M_PER_DEG * LAT.to_radians().cos())
}

fn evac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evac")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// One 120 m one-way road at 10 m/s with 8 s instances: travel time 2, capacity 3.
fn line_network(supply: u64) -> Value {
    json!({
        "dt_seconds": 8,
        "nodes": [
            {"id": "a", "lat": LAT, "lon": LON, "supply": supply},
            {"id": "b", "lat": north(120.0), "lon": LON, "demand": 10},
        ],
        "edges": [{"u": "a", "v": "b", "name": "Main St", "speed_mps": 10.0, "lanes": 1, "oneway": true}],
    })
}

fn circle(lat: f64, lon: f64, r0: f64, growth: f64) -> Value {
    json!({"lat": lat, "lon": lon, "r0_m": r0, "growth_m_per_instance": growth})
}

fn distant_fire() -> Value {
    json!({"type": "circles", "circles": [circle(north(120.0), east(400.0), 10.0, 1.0)]})
}

struct Planned {
    dir: tempfile::TempDir,
    network: PathBuf,
    plan: PathBuf,
    report: PathBuf,
}

fn plan_line(supply: u64) -> Planned {
    let dir = tempfile::tempdir().unwrap();
    let network = write(dir.path(), "net.json", &line_network(supply));
    let fire = write(dir.path(), "fire.json", &distant_fire());
    let plan = dir.path().join("plan.json");
    let report = dir.path().join("report.json");
    let out = evac(&[
        "plan",
        "--network", network.to_str().unwrap(),
        "--fire", fire.to_str().unwrap(),
        "--tolerance", "0",
        "--tmax", "20",
        "--out", plan.to_str().unwrap(),
        "--report", report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    Planned { dir, network, plan, report }
}

#[test]
fn plan_tiny_fixture() {
    let p = plan_line(10);
    let plan = read(&p.plan);
    assert_eq!(plan["complete"], true);
    assert_eq!(plan["T_sol"], 5);
    assert_eq!(plan["evacuated"], 10);
    let mut departures: Vec<(u64, u64)> = plan["flows"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|f| f["kind"] == "movement")
        .map(|f| (f["depart_t"].as_u64().unwrap(), f["flow"].as_u64().unwrap()))
        .collect();
    departures.sort();
    assert_eq!(departures.iter().map(|d| d.0).collect::<Vec<_>>(), [0, 1, 2, 3]);
    assert_eq!(departures.iter().map(|d| d.1).sum::<u64>(), 10);
}

#[test]
fn engulfed_sinks_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let network = write(dir.path(), "net.json", &line_network(10));
    let fire = write(dir.path(), "fire.json", &json!({"type": "circles", "circles": [circle(north(120.0), LON, 30.0, 1.0)]}));
    let out = evac(&[
        "plan", "--network", network.to_str().unwrap(), "--fire", fire.to_str().unwrap(),
        "--tmax", "20", "--out", dir.path().join("p.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sink"));
}

#[test]
fn malformed_json_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let network = dir.path().join("net.json");
    std::fs::write(&network, "{\"nodes\": [").unwrap();
    let fire = write(dir.path(), "fire.json", &distant_fire());
    let out = evac(&[
        "plan", "--network", network.to_str().unwrap(), "--fire", fire.to_str().unwrap(),
        "--tmax", "20", "--out", dir.path().join("p.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("net.json"));
}

fn update(p: &Planned, fire: Value, t_reopt: u32) -> (Output, PathBuf) {
    let upd = write(p.dir.path(), "update.json", &fire);
    let out_path = p.dir.path().join(format!("updated-{t_reopt}.json"));
    let out = evac(&[
        "update",
        "--network", p.network.to_str().unwrap(),
        "--plan", p.plan.to_str().unwrap(),
        "--fire-update", upd.to_str().unwrap(),
        "--t-reopt", &t_reopt.to_string(),
        "--out", out_path.to_str().unwrap(),
    ]);
    (out, out_path)
}

fn with_t_fire(mut fire: Value, t_fire: u32) -> Value {
    fire["t_fire"] = json!(t_fire);
    fire
}

fn prefix(plan: &Value, t_reopt: u64) -> Vec<Value> {
    plan["flows"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|f| f["depart_t"].as_u64().unwrap() < t_reopt && f["kind"] != "super")
        .cloned()
        .collect()
}

#[test]
fn identity_update_keeps_value() {
    let p = plan_line(10);
    let (out, path) = update(&p, with_t_fire(distant_fire(), 3), 2);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (before, after) = (read(&p.plan), read(&path));
    assert_eq!(after["evacuated"], before["evacuated"]);
    assert_eq!(prefix(&after, 2), prefix(&before, 2));
}

#[test]
fn reopt_after_fire_change_exit_1() {
    let p = plan_line(10);
    let (out, _) = update(&p, with_t_fire(distant_fire(), 2), 3);
    assert_eq!(code(&out), 1);
}

#[test]
fn enlarged_fire_update_does_not_gain() {
    let p = plan_line(10);
    let hotter = json!({"type": "circles", "t_fire": 3, "circles": [circle(north(120.0), east(400.0), 10.0, 130.0)]});
    let (out, path) = update(&p, hotter, 2);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (before, after) = (read(&p.plan), read(&path));
    assert!(after["evacuated"].as_u64() <= before["evacuated"].as_u64());
    assert_eq!(prefix(&after, 2), prefix(&before, 2));
}

fn export(p: &Planned, from: u32, to: u32) -> (Output, PathBuf) {
    let out_path = p.dir.path().join(format!("export-{from}-{to}.geojson"));
    let out = evac(&[
        "export",
        "--plan", p.plan.to_str().unwrap(),
        "--network", p.network.to_str().unwrap(),
        "--format", "geojson",
        "--t-from", &from.to_string(),
        "--t-to", &to.to_string(),
        "--out", out_path.to_str().unwrap(),
    ]);
    (out, out_path)
}

fn roads(doc: &Value) -> Vec<Value> {
    doc["features"].as_array().unwrap().iter().filter(|f| f["properties"]["kind"] == "road").cloned().collect()
}

#[test]
fn export_whole_horizon() {
    let p = plan_line(10);
    let (out, path) = export(&p, 0, 5);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc = read(&path);
    let r = roads(&doc);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0]["properties"]["flow"], 10);
    assert_eq!(r[0]["properties"]["used"], true);
    assert_eq!(r[0]["properties"]["name"], "Main St");
    assert!(doc["features"].as_array().unwrap().iter().any(|f| f["properties"]["kind"] == "fire"));
}

#[test]
fn export_later_range_and_bounds() {
    let p = plan_line(10);
    let (_, path) = export(&p, 4, 5);
    assert_eq!(roads(&read(&path))[0]["properties"]["used"], false);
    let (out, _) = export(&p, 0, 6);
    assert_eq!(code(&out), 1);
}

#[test]
fn export_empty_flow_plan() {
    let p = plan_line(0);
    let plan = read(&p.plan);
    let (out, path) = export(&p, 0, plan["T_sol"].as_u64().unwrap() as u32);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(roads(&read(&path)).iter().all(|f| f["properties"]["used"] == false));
}

#[test]
fn stats_tables() {
    let p = plan_line(10);
    let out = evac(&["stats", p.report.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains("(s)")).count(), 4);

    let q = plan_line(7);
    let out = evac(&["stats", p.report.to_str().unwrap(), q.report.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    let evacuated = text.lines().find(|l| l.starts_with("evacuated")).unwrap();
    assert!(evacuated.contains("10/10") && evacuated.contains("7/7"), "{text}");

    let empty = p.dir.path().join("empty.json");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(code(&evac(&["stats", empty.to_str().unwrap()])), 1);
    assert_eq!(code(&evac(&["stats", p.dir.path().join("missing.json").to_str().unwrap()])), 1);
}

#[test]
fn convert_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let nodes = dir.path().join("nodes.csv");
    let edges = dir.path().join("edges.csv");
    std::fs::write(&nodes, format!("osmid,y,x,supply,demand\n1,{LAT},{LON},10,\n2,{},{LON},,10\n", north(120.0))).unwrap();
    std::fs::write(&edges, "u,v,name,oneway,speed_mps,lanes,geometry\n1,2,Main St,True,10,1,\n").unwrap();
    let net = dir.path().join("net.json");
    let out = evac(&[
        "convert", "--nodes", nodes.to_str().unwrap(), "--edges", edges.to_str().unwrap(),
        "--out", net.to_str().unwrap(), "--dt", "8",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = evac(&["dump", "--network", net.to_str().unwrap(), "--horizon", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with("movement")).count(), 2);
    assert_eq!(text.lines().filter(|l| l.ends_with("holdover")).count(), 6);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quadmpc"))
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "exit {}: {}", out.status, String::from_utf8_lossy(&out.stderr));
    out
}

fn records(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> Vec<Value> {
    let out = dir.join(name);
    ok(bin().args(args).arg("--out").arg(&out).output().unwrap());
    records(&out)
}

fn of_kind<'a>(rs: &'a [Value], kind: &str) -> Vec<&'a Value> {
    rs.iter().filter(|r| r["kind"] == kind).collect()
}

fn strip_wall(v: &Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(
            m.iter().filter(|(k, _)| !k.contains("wall")).map(|(k, v)| (k.clone(), strip_wall(v))).collect(),
        ),
        Value::Array(a) => Value::Array(a.iter().map(strip_wall).collect()),
        other => other.clone(),
    }
}

fn schema() -> Value {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schema/metrics.schema.json");
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Checks `v` against the keywords the shipped schema uses: type, const,
/// minimum, required, properties, additionalProperties, items, oneOf, $ref.
fn conforms(v: &Value, s: &Value, root: &Value) -> Result<(), String> {
    if let Some(r) = s.get("$ref").and_then(Value::as_str) {
        let name = r.strip_prefix("#/$defs/").ok_or(format!("unsupported ref {r}"))?;
        return conforms(v, &root["$defs"][name], root);
    }
    if let Some(t) = s.get("type") {
        let types: Vec<&str> = match t {
            Value::String(x) => vec![x.as_str()],
            Value::Array(xs) => xs.iter().filter_map(Value::as_str).collect(),
            _ => return Err("bad type keyword".into()),
        };
        let fits = |t: &str| match t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "integer" => v.is_u64() || v.is_i64(),
            "number" => v.is_number(),
            "null" => v.is_null(),
            "boolean" => v.is_boolean(),
            _ => false,
        };
        if !types.iter().any(|t| fits(t)) {
            return Err(format!("{v} is not of type {t}"));
        }
    }
    if let Some(c) = s.get("const") {
        if v != c {
            return Err(format!("{v} != {c}"));
        }
    }
    if let (Some(m), Some(x)) = (s.get("minimum").and_then(Value::as_f64), v.as_f64()) {
        if x < m {
            return Err(format!("{x} below minimum {m}"));
        }
    }
    if let Some(obj) = v.as_object() {
        for k in s.get("required").and_then(Value::as_array).into_iter().flatten() {
            let k = k.as_str().unwrap();
            if !obj.contains_key(k) {
                return Err(format!("missing required field {k}"));
            }
        }
        let props = s.get("properties").and_then(Value::as_object);
        for (k, x) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(ps) => conforms(x, ps, root).map_err(|e| format!("{k}: {e}"))?,
                None => match s.get("additionalProperties") {
                    Some(Value::Bool(false)) => return Err(format!("unexpected field {k}")),
                    Some(extra @ Value::Object(_)) => conforms(x, extra, root).map_err(|e| format!("{k}: {e}"))?,
                    _ => {}
                },
            }
        }
    }
    if let (Some(items), Some(a)) = (s.get("items"), v.as_array()) {
        for x in a {
            conforms(x, items, root)?;
        }
    }
    if let Some(alts) = s.get("oneOf").and_then(Value::as_array) {
        let hits = alts.iter().filter(|a| conforms(v, a, root).is_ok()).count();
        if hits != 1 {
            let why: Vec<String> = alts.iter().filter_map(|a| conforms(v, a, root).err()).collect();
            return Err(format!("matches {hits} alternatives: {}", why.join("; ")));
        }
    }
    Ok(())
}

#[test]
fn run_emits_one_record_per_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let rs = run_to(dir.path(), "m.jsonl", &["run", "--mode", "local-sim", "--dataset", "karate", "--epochs", "5"]);
    let epochs = of_kind(&rs, "epoch");
    assert_eq!(epochs.len(), 5);
    assert_eq!(epochs.iter().map(|r| r["epoch"].as_u64().unwrap()).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
    assert_eq!(of_kind(&rs, "report").len(), 1);
    let report = of_kind(&rs, "report")[0];
    assert_eq!(report["loss_curve"].as_array().unwrap().len(), 5);
    assert_eq!(report["oracle_agreement"].as_f64().unwrap(), 1.0);
}

#[test]
fn same_seeds_give_identical_metrics_except_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["run", "--dataset", "triangle", "--epochs", "3", "--seed", "9"];
    let a = run_to(dir.path(), "a.jsonl", &args);
    let b = run_to(dir.path(), "b.jsonl", &args);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(strip_wall(x), strip_wall(y));
    }
    let c = run_to(dir.path(), "c.jsonl", &["run", "--dataset", "triangle", "--epochs", "3", "--seed", "10"]);
    assert_ne!(a.iter().map(strip_wall).collect::<Vec<_>>(), c.iter().map(strip_wall).collect::<Vec<_>>());
}

#[test]
fn sockets_mode_matches_local_sim_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["--dataset", "karate", "--epochs", "2", "--seed", "5"];
    let local = run_to(dir.path(), "l.jsonl", &[&["run", "--mode", "local-sim"][..], &common].concat());
    let socks = run_to(dir.path(), "s.jsonl", &[&["run", "--mode", "sockets"][..], &common].concat());
    assert_eq!(local.len(), socks.len());
    let traffic = |r: &Value| -> Value {
        let tags = r.get("tags").cloned().unwrap_or(Value::Null);
        let strip = |t: &Value| serde_json::json!([t["payload_bytes"], t["wire_bytes"], t["messages"]]);
        match tags {
            Value::Object(m) => Value::Object(m.iter().map(|(k, t)| (k.clone(), strip(t))).collect()),
            other => other,
        }
    };
    for (l, s) in local.iter().zip(&socks) {
        assert_eq!(traffic(l), traffic(s), "record {}", l["kind"]);
        assert_eq!(l.get("loss"), s.get("loss"));
    }
    assert_eq!(socks[0]["mode"], "sockets");
}

#[test]
fn every_record_validates_against_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let root = schema();
    let mut all = run_to(dir.path(), "r.jsonl", &["run", "--dataset", "path4", "--epochs", "2"]);
    all.extend(run_to(dir.path(), "i.jsonl", &["infer", "--dataset", "triangle", "--epochs", "20"]));
    all.extend(run_to(dir.path(), "o.jsonl", &["oracle", "--dataset", "karate", "--epochs", "3", "--arith", "float"]));
    let kinds: std::collections::BTreeSet<&str> = all.iter().map(|r| r["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds.into_iter().collect::<Vec<_>>(), vec!["epoch", "phase", "report", "start"]);
    for r in &all {
        conforms(r, &root, &root).unwrap_or_else(|e| panic!("{r}: {e}"));
    }
    let mut bad = all[0].clone();
    bad.as_object_mut().unwrap().remove("seed");
    assert!(conforms(&bad, &root, &root).is_err());
    let mut bad = all[1].clone();
    bad["surprise"] = Value::Bool(true);
    assert!(conforms(&bad, &root, &root).is_err());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# triangle demo\ndataset = triangle\nepochs = 4\nseed = 3\nnet = wan\n").unwrap();
    let conf = conf.to_str().unwrap();
    let rs = run_to(dir.path(), "a.jsonl", &["run", "--config", conf, "--epochs", "2"]);
    assert_eq!(of_kind(&rs, "epoch").len(), 2);
    assert_eq!(rs[0]["net"], "wan");
    assert_eq!(rs[0]["dataset"], "triangle");
    let wan_epoch = of_kind(&rs, "epoch")[0]["virtual_secs"].as_f64().unwrap();
    let lan = run_to(dir.path(), "b.jsonl", &["run", "--config", conf, "--epochs", "2", "--net", "lan"]);
    assert!(of_kind(&lan, "epoch")[0]["virtual_secs"].as_f64().unwrap() < wan_epoch);
}

#[test]
fn hyperparameter_flags_reach_the_protocols() {
    let dir = tempfile::tempdir().unwrap();
    let base = run_to(dir.path(), "a.jsonl", &["infer", "--dataset", "triangle", "--epochs", "1"]);
    let more = run_to(dir.path(), "b.jsonl", &["infer", "--dataset", "triangle", "--epochs", "1", "--softmax-t", "16"]);
    assert_eq!(more[0]["softmax_t"].as_u64(), Some(16));
    let bits = |rs: &[Value], t: &str| of_kind(rs, "report")[0]["tags"][t]["payload_bits"].as_u64().unwrap();
    assert_eq!(bits(&more, "softmax"), 2 * bits(&base, "softmax"));

    let r = run_to(dir.path(), "c.jsonl", &["infer", "--dataset", "triangle", "--epochs", "1", "--invsqrt-r", "6"]);
    assert_eq!(r[0]["invsqrt_r"].as_u64(), Some(6));
    assert!(bits(&r, "invsqrt") > bits(&base, "invsqrt"));

    let k = run_to(dir.path(), "d.jsonl", &["infer", "--dataset", "triangle", "--epochs", "1", "--key-bits", "13"]);
    assert_eq!((k[0]["key_bits"].as_u64(), k[0]["prime"].as_u64()), (Some(13), Some(16381)));
    assert!(bits(&k, "relu") < bits(&base, "relu"));
}

#[test]
fn infer_agrees_with_oracle_on_karate() {
    let dir = tempfile::tempdir().unwrap();
    let rs = run_to(dir.path(), "i.jsonl", &["infer", "--dataset", "karate", "--epochs", "200"]);
    let report = of_kind(&rs, "report")[0];
    assert!(report["oracle_agreement"].as_f64().unwrap() >= 0.95, "{report}");
    assert!(report["accuracy"]["train"].as_f64().unwrap() > 0.9, "{report}");
    assert!(of_kind(&rs, "epoch").is_empty());
}

#[test]
fn bench_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    ok(bin()
        .args(["bench", "--protocol", "aa,mult", "--sizes", "1,100", "--net", "wan", "--out"])
        .arg(&out)
        .output()
        .unwrap());
    let mut rdr = std::fs::read_to_string(&out).unwrap();
    rdr.truncate(rdr.trim_end().len());
    let mut lines = rdr.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    let col = |row: &Vec<&str>, name: &str| row[header.iter().position(|h| *h == name).unwrap()].to_string();
    let aa100 = rows.iter().find(|r| r[0] == "aa" && r[1] == "100").unwrap();
    assert_eq!(col(aa100, "payload_bytes"), "1648");
    let (a, s): (f64, f64) =
        (col(aa100, "virtual_secs").parse().unwrap(), col(aa100, "sync_virtual_secs").parse().unwrap());
    assert!(a < s);
    let mult1 = rows.iter().find(|r| r[0] == "mult" && r[1] == "1").unwrap();
    assert_eq!(col(mult1, "reference_bits"), "256");
    assert_eq!(col(mult1, "sync_virtual_secs"), "");
}

#[test]
fn cost_from_arguments_and_from_metrics() {
    let out = ok(bin()
        .args([
            "cost",
            "--instances",
            "4",
            "--hours",
            "1",
            "--egress-gb",
            "10",
            "--disk-gb",
            "0",
            "--provider",
            "gcp",
            "--plan",
            "A",
        ])
        .output()
        .unwrap());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["cost_usd"].as_f64().unwrap() - (4.0 * 0.2338 + 10.0 * 0.08)).abs() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let rs = run_to(dir.path(), "m.jsonl", &["run", "--dataset", "triangle", "--epochs", "1"]);
    let report = of_kind(&rs, "report")[0];
    let out = ok(bin().args(["cost", "--metrics"]).arg(dir.path().join("m.jsonl")).output().unwrap());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let gb = report["wire_bytes"].as_f64().unwrap() / 1e9;
    assert!((v["egress_gb"].as_f64().unwrap() - gb).abs() < 1e-15);
    assert!((v["hours"].as_f64().unwrap() - report["virtual_secs"].as_f64().unwrap() / 3600.0).abs() < 1e-15);
}

#[test]
fn errors_are_actionable() {
    let out = bin().args(["run", "--dataset", "no-such-graph"]).output().unwrap();
    assert!(!out.status.success());
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("no-such-graph") && msg.contains("karate"), "{msg}");

    let out = bin().args(["bench", "--protocol", "fft"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("expected one of"));

    let out = bin().args(["run", "--net", "moon"]).output().unwrap();
    assert!(String::from_utf8_lossy(&out.stderr).contains("custom:"));

    let out = bin().args(["cost", "--provider", "ibm", "--hours", "1", "--egress-gb", "1"]).output().unwrap();
    assert!(String::from_utf8_lossy(&out.stderr).contains("known providers"));
}

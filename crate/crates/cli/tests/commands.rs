mod common;

use common::*;
use serde_json::Value;

fn report(name: &str, command: &str) -> Value {
    let out = json_report(name, command, "0");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn symbol_reports() {
    let r = report("laplace", "symbol");
    assert_eq!(r["result"]["involutive"], true);
    assert_eq!(r["result"]["characters"], serde_json::json!([2, 0]));
    let full = report("full", "symbol");
    for row in full["result"]["cohomology"].as_array().unwrap() {
        assert!(row["h"].as_array().unwrap().iter().all(|h| h == 0));
    }
    let so2 = report("so2", "symbol");
    assert_eq!(so2["result"]["finite_type"], 2);
}

#[test]
fn completion_reports() {
    let k = report("killing", "complete");
    assert_eq!(k["result"]["verdict"]["kind"], "formally-integrable");
    assert_eq!(k["result"]["fibre_dim"], 3);
    let u = report("uxx_uxy", "complete");
    assert_eq!(u["result"]["events"][0]["lowest_order"], 1);
    let c = report("constants", "complete");
    assert_eq!(c["result"]["steps"].as_array().unwrap().len(), 1);
    assert_eq!(c["result"]["mu0"], 1);
}

#[test]
fn rule_reports() {
    let r = report("oneform", "mv");
    let jets = r["result"]["jets"].as_array().unwrap();
    assert_eq!(jets[0]["mv"]["in_theta"], true);
    assert_eq!(jets[1]["mv"]["in_theta"], false);
    let z = report("zero_rule", "mv");
    let jet = &z["result"]["jets"][0];
    assert_eq!(jet["isotropy_dim"], jet["jet_algebra_dim"].as_u64().unwrap() - 2);
    assert_eq!(jet["mv"]["oracle"]["lower"], 4);
    assert_eq!(jet["mv"]["oracle"]["upper"], 10);
}

#[test]
fn flag_reports() {
    let d = report("darboux", "flag");
    assert_eq!(d["result"]["points"][0]["flag"]["dims"], serde_json::json!([1, 0]));
    let c = report("contact3", "flag");
    assert_eq!(c["result"]["points"][0]["flag"]["dims"], serde_json::json!([3, 2, 1, 0]));
    let p = report("integrable_pair", "flag");
    assert_eq!(p["result"]["points"][0]["flag"]["is_flag"], false);
}

#[test]
fn points_from_the_command_line() {
    let path = fixture("oneform");
    let out = forge(&["mv", path.to_str().unwrap(), "--json", "--point", "0;1"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let jets = v["result"]["jets"].as_array().unwrap();
    assert_eq!(jets.len(), 1);
    assert_eq!(jets[0]["orbit_tangent_dim"], 2);
    let pair = fixture("integrable_pair");
    let out = forge(&["flag", pair.to_str().unwrap(), "--point", "1,2,3"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("at (1, 2, 3): dims [2,2] flag false"));
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| forge(args).status.code().unwrap();
    let bad_arity = fixture("bad_arity");
    assert_eq!(code(&["mv", bad_arity.to_str().unwrap()]), 3);
    let bad_syntax = fixture("bad_syntax");
    assert_eq!(code(&["complete", bad_syntax.to_str().unwrap()]), 2);
    let killing = fixture("killing");
    assert_eq!(code(&["flag", killing.to_str().unwrap()]), 2);
    assert_eq!(code(&["complete", "/nonexistent/file.forge"]), 1);
    assert_eq!(code(&["complete", killing.to_str().unwrap(), "--cap", "1"]), 3);
    assert_eq!(code(&["complete", killing.to_str().unwrap()]), 0);
}

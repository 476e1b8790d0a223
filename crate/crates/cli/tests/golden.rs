mod common;

use common::*;

/// Set `FORGE_BLESS=1` to rewrite the expected reports.
#[test]
fn reports_match_golden_files() {
    let bless = std::env::var_os("FORGE_BLESS").is_some();
    for (name, command) in GOLDEN {
        let out = json_report(name, command, "0");
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let path = golden(name);
        if bless {
            std::fs::write(&path, &out.stdout).unwrap();
            continue;
        }
        let want = std::fs::read(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
        assert!(out.stdout == want, "{name}: report differs from {}", path.display());
    }
}

#[test]
fn reports_are_deterministic() {
    for (name, command) in GOLDEN {
        for seed in ["0", "7"] {
            let a = json_report(name, command, seed);
            let b = json_report(name, command, seed);
            assert!(a.status.success());
            assert_eq!(a.stdout, b.stdout, "{name} with seed {seed}");
        }
    }
}

#[test]
fn echoed_input_parses_to_the_same_report() {
    for (name, command) in GOLDEN {
        let out = json_report(name, command, "0");
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        let echo = v["input"].as_str().unwrap();
        let dir = std::env::temp_dir().join(format!("forge-echo-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let copy = dir.join(format!("{name}.forge"));
        std::fs::write(&copy, echo).unwrap();
        let again = forge(&[command, copy.to_str().unwrap(), "--json"]);
        assert_eq!(again.stdout, out.stdout, "{name}");
    }
}

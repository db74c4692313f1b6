//! Acceptance criterion 9: rerunning any experiment from its manifest
//! reproduces byte-identical artifacts.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_defport")
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn read_artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name().to_string_lossy().to_string();
        out.insert(name, std::fs::read(entry.path()).unwrap());
    }
    out
}

const POWER_CONFIG: &str = r#"{
  "model": {
    "n_assets": 1, "n_defaults": 1, "horizon": 1.0,
    "mu": {"kind": "constant", "values": [0.05]},
    "sigma": {"kind": "constant", "values": [0.2]},
    "beta": {"kind": "constant", "values": [-0.5]},
    "lambda": {"kind": "constant", "values": [0.1]}
  },
  "numerics": {"paths": 3000, "steps": 20, "seed": 4242},
  "utility": {"kind": "power", "gamma": 0.5},
  "bounds": {"k_list": [0.5, 1.0, 2.0]}
}"#;

const INFO_PRICE_CONFIG: &str = r#"{
  "model": {
    "n_assets": 1, "n_defaults": 1, "horizon": 1.0,
    "mu": {"kind": "regime", "per_regime": [[0.15], [-0.05]]},
    "sigma": {"kind": "constant", "values": [0.2]},
    "beta": {"kind": "constant", "values": [-0.4]},
    "lambda": {"kind": "regime", "per_regime": [[0.05], [0.4]]}
  },
  "regime": {"n_regimes": 2, "q_matrix": [[-0.8, 0.8], [0.8, -0.8]], "initial_dist": [0.5, 0.5]},
  "numerics": {"paths": 2000, "steps": 20, "seed": 99},
  "utility": {"kind": "exp", "gamma": 1.0, "claim": {"id": "defaultable_bond"}},
  "bounds": {"k_list": [0.5, 1.0, 2.0]}
}"#;

#[test]
fn criterion_9_manifest_rerun_is_byte_identical() {
    let tmp = std::env::temp_dir().join(format!("defport-acc9-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&tmp);
    std::fs::create_dir_all(&tmp).unwrap();

    for (name, config, subcommand) in [
        ("power", POWER_CONFIG, "power"),
        ("info_price", INFO_PRICE_CONFIG, "info-price"),
    ] {
        let cfg = write_config(&tmp, &format!("{name}.json"), config);
        let out1 = tmp.join(format!("{name}_run1"));
        let out2 = tmp.join(format!("{name}_run2"));

        let status = Command::new(bin())
            .args([subcommand, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out1)
            .status()
            .unwrap();
        assert!(status.success(), "{subcommand} run 1 failed");

        // Rerun from the manifest alone.
        let status = Command::new(bin())
            .args([subcommand, "--config"])
            .arg(out1.join("manifest.json"))
            .arg("--out")
            .arg(&out2)
            .status()
            .unwrap();
        assert!(status.success(), "{subcommand} rerun failed");

        let a = read_artifacts(&out1);
        let b = read_artifacts(&out2);
        assert_eq!(
            a.keys().collect::<Vec<_>>(),
            b.keys().collect::<Vec<_>>(),
            "{subcommand}: artifact sets differ"
        );
        assert!(!a.is_empty());
        for (file, bytes) in &a {
            assert_eq!(bytes, &b[file], "{subcommand}: {file} differs between runs");
        }
    }

    let _ = std::fs::remove_dir_all(&tmp);
    println!("[acceptance] criterion 9 (manifest rerun reproduces byte-identical artifacts): PASS");
}

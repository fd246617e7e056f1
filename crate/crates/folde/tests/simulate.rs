mod common;

use std::process::Command;

use folde::config::RunConfig;
use folde::formats::{load_results, render_results};
use folde::report::build_report;
use folde::simulate::{simulate, Artifacts};
use folde_core::sim::{Policy, SimConfig};

const CONFIG: &str = r#"
policies = ["random", "zero_shot", "folde"]

[simulation]
rounds = 2
batch_size = 8
replicates = 4
seed = 3

[landscape]
length = 12
n_variants = 228
embed_dim = 16
latent_dim = 8
seed = 4
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_folde"));
    c.env_remove("FOLDE_DATA_DIR");
    c
}

#[test]
fn library_runs_are_deterministic() {
    let config = RunConfig::parse(CONFIG).unwrap();
    let artifacts: Artifacts = config.artifacts(None).unwrap();
    let a = simulate(&artifacts, &config.simulation, &config.sweep()).unwrap();
    let b = simulate(&artifacts, &config.simulation, &config.sweep()).unwrap();
    assert_eq!(render_results(&a), render_results(&b));
    assert_eq!(a.len(), 12);
    let report = build_report(&a, Policy::Folde);
    assert_eq!(report.policies.len(), 3);
    assert_eq!(report.comparisons.len(), 2);
}

#[test]
fn policy_subset_matches_full_sweep() {
    let config = RunConfig::parse(CONFIG).unwrap();
    let artifacts = config.artifacts(None).unwrap();
    let all = simulate(&artifacts, &config.simulation, &config.sweep()).unwrap();
    let one = simulate(&artifacts, &config.simulation, &[Policy::Folde]).unwrap();
    let from_all: Vec<_> = all.into_iter().filter(|r| r.policy == Policy::Folde).collect();
    assert_eq!(render_results(&from_all), render_results(&one));
}

#[test]
fn rejects_invalid_configs() {
    assert!(RunConfig::parse("[simulation]\nreplicates = 0\n").is_err());
    assert!(RunConfig::parse("policies = [\"nope\"]\n").is_err());
    assert!(SimConfig {
        holdout_fraction: 1.0,
        ..SimConfig::default()
    }
    .validate()
    .is_err());
}

#[test]
fn cli_ablate_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, CONFIG).unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "4", "4"] {
        let out = dir.path().join(format!("r{}.tsv", outputs.len()));
        let status = bin()
            .args(["ablate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(["--threads", threads])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
    let runs = load_results(dir.path().join("r0.tsv")).unwrap();
    assert_eq!(runs.len(), 12);

    let report = bin()
        .arg("report")
        .arg(dir.path().join("r0.tsv"))
        .output()
        .unwrap();
    assert!(report.status.success());
    let text = String::from_utf8(report.stdout).unwrap();
    assert!(text.contains("zero_shot"), "{text}");
    let json = bin()
        .arg("report")
        .arg(dir.path().join("r0.tsv"))
        .arg("--json")
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["policies"].as_array().unwrap().len(), 3);
}

#[test]
fn cli_synth_then_simulate_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let ok = bin()
        .args(["synth", "--seed", "9", "--n-variants", "228", "--length", "12", "--out-dir"])
        .arg(&data)
        .status()
        .unwrap();
    assert!(ok.success());
    let cfg = dir.path().join("files.toml");
    std::fs::write(
        &cfg,
        "[simulation]\nrounds = 2\nbatch_size = 8\nreplicates = 2\n\n[data]\ndataset = \"dataset.tsv\"\nembeddings = \"embeddings.flde\"\nlogprobs = \"logprobs.tsv\"\n",
    )
    .unwrap();
    let out = dir.path().join("out.tsv");
    let ok = bin()
        .args(["simulate", "--policy", "zero_shot", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .env("FOLDE_DATA_DIR", &data)
        .status()
        .unwrap();
    assert!(ok.success());
    let runs = load_results(&out).unwrap();
    assert_eq!(runs.len(), 2);
    assert!(runs.iter().all(|r| r.policy == Policy::ZeroShot));

    let missing = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .env("FOLDE_DATA_DIR", dir.path().join("absent"))
        .output()
        .unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));
}

#[test]
fn cli_campaign_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let fx = common::write_fixture(dir.path(), 8);
    let store = dir.path().join("store");
    let run = |args: &[&str]| {
        let out = bin().args(args).arg("--data-dir").arg(&store).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    run(&[
        "campaign",
        "create",
        "--id",
        "cli",
        "--reference",
        &fx.landscape.dataset.reference().to_string(),
        "--embeddings",
        fx.embeddings.to_str().unwrap(),
        "--logprobs",
        fx.logprobs.to_str().unwrap(),
    ]);
    let round: serde_json::Value = serde_json::from_str(&run(&["campaign", "propose", "cli"])).unwrap();
    let mut tsv = String::from("mutant\tactivity\n");
    for (i, p) in round["proposals"].as_array().unwrap().iter().enumerate() {
        let v = p["variant"].as_str().unwrap();
        let a = fx.landscape.dataset.activity(&v.parse().unwrap()).unwrap();
        if i % 5 == 0 {
            tsv.push_str(&format!("{v}\tNA\n"));
        } else {
            tsv.push_str(&format!("{v}\t{a}\n"));
        }
    }
    let file = dir.path().join("m.tsv");
    std::fs::write(&file, tsv).unwrap();
    run(&["campaign", "record", "cli", file.to_str().unwrap()]);
    let metrics: serde_json::Value = serde_json::from_str(&run(&["campaign", "show", "cli", "--metrics"])).unwrap();
    assert_eq!(metrics["rounds"][0]["failed"], 4);
}

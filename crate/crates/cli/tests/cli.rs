use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn hytraj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hytraj")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hytraj-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn lists_the_gallery() {
    let o = hytraj(&["gallery"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for name in ["gallery/fig8-1", "gallery/example10", "gallery/fig11"] {
        assert!(out.contains(name), "{out}");
    }
}

#[test]
fn blocking_counterexample_fails_with_witness() {
    let o = hytraj(&["gallery", "fig8-1", "--check-theorem", "7"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("NonBlocking violated"), "{out}");
    assert!(out.contains("unmatched step"), "{out}");
}

#[test]
fn wrong_result_for_a_fixture_is_an_input_error() {
    assert_eq!(hytraj(&["gallery", "fig8-1", "--check-theorem", "6"]).status.code(), Some(2));
}

#[test]
fn tank_refinement_holds() {
    let o = hytraj(&["check-refinement", "--fixture", "tank", "--horizon", "30", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["semantic"]["holds"], serde_json::json!(true));
    assert_eq!(v["composition"].as_array().unwrap().len(), 3);
}

#[test]
fn json_output_is_deterministic() {
    let args = ["check-theorem", "6", "--cases", "5", "--seed", "7", "--json"];
    assert_eq!(hytraj(&args).stdout, hytraj(&args).stdout);
}

#[test]
fn plot_is_a_sawtooth() {
    let out = scratch("tank.svg");
    let o = hytraj(&[
        "plot",
        "--fixture",
        "tank-automaton",
        "--x0",
        "1",
        "--horizon",
        "9",
        "--grid",
        "1/10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let svg = fs::read_to_string(&out).unwrap();
    assert!(svg.starts_with("<svg"));
    for t in ["2", "3", "5", "6", "8"] {
        assert!(svg.contains(&format!(r#"class="switch" data-t="{t}""#)), "no switch at {t}");
    }
    assert!(svg.contains(r#"data-var="y""#));
}

#[test]
fn discretization_dump_round_trips() {
    let first = scratch("d1.json");
    let second = scratch("d2.json");
    let a = hytraj(&["discretize", "--fixture", "gallery/fig8-2", "--out", first.to_str().unwrap()]);
    let b = hytraj(&["discretize", "--discrete", first.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(a.status.code(), b.status.code());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
}

#[test]
fn bad_inputs_exit_2() {
    let broken = scratch("broken.json");
    fs::write(&broken, "{ not json").unwrap();
    assert_eq!(hytraj(&["validate", "--system", broken.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(hytraj(&["validate", "--system", "/nonexistent/system.json"]).status.code(), Some(2));
    assert_eq!(hytraj(&["validate", "--fixture", "no-such-fixture"]).status.code(), Some(2));
    assert_eq!(hytraj(&["sample", "--fixture", "tank-spec", "--delta", "x"]).status.code(), Some(2));
}

#[test]
fn sampling_example_is_exact() {
    let o = hytraj(&["sample", "--fixture", "gallery/example10"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "#0 <<s, x=0>, 0> <<s, x=0>, 1>");
}

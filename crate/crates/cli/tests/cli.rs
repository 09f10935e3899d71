use std::path::Path;
use std::process::{Command, Output};

fn carve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carve")).args(args).env("RUST_LOG", "off").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(carve(&["--help"]).status.code(), Some(0));
    assert_eq!(carve(&["--version"]).status.code(), Some(0));
    assert_eq!(carve(&[]).status.code(), Some(1));
    assert_eq!(carve(&["render", "--bogus"]).status.code(), Some(1));
    assert_eq!(carve(&["metrics", "--ref", "a", "--test", "b", "--ref-depth", "c"]).status.code(), Some(1));

    let missing = carve(&["render", "--scene", "/nonexistent/s.json", "--out-prefix", "/tmp/x"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(missing.stdout.is_empty());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/s.json"));
}

#[test]
fn phantom_render_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("ph");
    let o = carve(&["phantom", "--out", p(&prefix), "--dims", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for suffix in ["_intensity.nrrd", "_labels.nrrd", "_colors.txt", "_scene.json"] {
        assert!(dir.path().join(format!("ph{suffix}")).is_file(), "{suffix}");
    }
    let scene = dir.path().join("ph_scene.json");
    let out = dir.path().join("r");
    let o = carve(&["render", "--scene", p(&scene), "--out-prefix", p(&out), "--threads", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (seg, depth) = (dir.path().join("r_seg.pgm"), dir.path().join("r_depth.pfm"));
    assert!(dir.path().join("r.png").is_file());

    let o = carve(&["metrics", "--ref", p(&seg), "--test", p(&seg), "--ref-depth", p(&depth), "--test-depth", p(&depth)]);
    assert_eq!(stdout(&o), "mae_first_segment=0\nrmse_depth=0\n");
    let o = carve(&["metrics", "--ref", p(&seg), "--test", p(&depth)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pl_rank_and_regress() {
    let dir = tempfile::tempdir().unwrap();
    let rankings = dir.path().join("r.txt");
    std::fs::write(&rankings, "a,b,c\na,c,b\nb,a,c\na,b\n").unwrap();
    let o = carve(&["pl-rank", p(&rankings)]);
    assert_eq!(o.status.code(), Some(0));
    let ids: Vec<String> = stdout(&o).lines().map(|l| l.split('\t').nth(1).unwrap().to_string()).collect();
    assert_eq!(ids, ["a", "b", "c"]);
    let total: f64 = stdout(&o).lines().map(|l| l.split('\t').nth(2).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-6);

    std::fs::write(&rankings, "a,a\n").unwrap();
    assert_eq!(carve(&["pl-rank", p(&rankings)]).status.code(), Some(2));

    let pts = dir.path().join("pts.csv");
    std::fs::write(&pts, "1,0.1\n2,0.2\n3,0.3\n").unwrap();
    let o = carve(&["regress", p(&pts)]);
    let kv: Vec<(String, f64)> = stdout(&o)
        .lines()
        .map(|l| {
            let (k, v) = l.split_once('=').unwrap();
            (k.to_string(), v.parse().unwrap())
        })
        .collect();
    assert_eq!(kv.iter().map(|(k, _)| k.as_str()).collect::<Vec<_>>(), ["slope", "intercept", "r_squared"]);
    assert!((kv[0].1 - 0.1).abs() < 1e-12 && kv[1].1.abs() < 1e-12 && (kv[2].1 - 1.0).abs() < 1e-12);

    std::fs::write(&pts, "1,0.1\n").unwrap();
    assert_eq!(carve(&["regress", p(&pts)]).status.code(), Some(2));
}

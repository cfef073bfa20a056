use std::path::{Path, PathBuf};
use std::process::Command as Process;

use beamkit_cli::commands::{DICTIONARY_FILE, SCATTER_FILE, SWEEP_FILE, WEIGHTS_FILE};
use beamkit_cli::formats::{self, SweepRecord};
use beamkit_cli::{cmd_compare, cmd_design, cmd_scatterfield, cmd_steering, RunConfig, EXIT_CONFIG, EXIT_PARTIAL};
use beamkit_core::{geodesic_sphere, Complex64, Vec3};
use tempfile::TempDir;

const C: f64 = 343.0;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn load(dir: &Path, text: &str) -> RunConfig {
    RunConfig::load(&write(dir, "run.toml", text)).unwrap()
}

fn geometry_toml(mics: &[[f64; 3]]) -> String {
    let rows: Vec<String> = mics.iter().map(|m| format!("[{:?}, {:?}, {:?}]", m[0], m[1], m[2])).collect();
    format!("mics = [{}]\n", rows.join(", "))
}

fn csv_rows(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn freq_for(ka: f64, a: f64) -> f64 {
    ka * C / (2.0 * std::f64::consts::PI * a)
}

#[test]
fn rigid_sphere_dictionary_shape() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "geo.toml", &geometry_toml(&[[0.05, 0.0, 0.0], [0.0, 0.0, 0.05]]));
    let cfg = load(
        dir.path(),
        r#"
geometry = "geo.toml"
model = "rigid-sphere"
[sphere]
radius = 0.05
[frequencies]
values = [500.0, 1000.0]
[directions]
n_theta = 3
n_phi = 2
"#,
    );
    let outcome = cmd_steering(&cfg, None).unwrap();
    assert_eq!(outcome.exit_code(), 0);
    let path = dir.path().join("out").join(DICTIONARY_FILE);
    assert_eq!(outcome.files, vec![path.clone()]);
    let (header, rows) = csv_rows(&path);
    assert_eq!(header, "freq_hz,theta_deg,phi_deg,mic_index,real,imag");
    assert_eq!(rows.len(), 16);
    let keys: Vec<String> = rows.iter().map(|r| r[..4].join(",")).collect();
    let expected: Vec<String> = ["500", "1000"]
        .iter()
        .flat_map(|f| {
            [("0", "0"), ("90", "0"), ("90", "180"), ("180", "0")]
                .into_iter()
                .flat_map(move |(t, p)| (0..2).map(move |m| format!("{f},{t},{p},{m}")))
        })
        .collect();
    assert_eq!(keys, expected);
}

#[test]
fn plane_wave_dictionary_has_unit_magnitude() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "geo.toml",
        &geometry_toml(&[[0.0, 0.0, 0.0], [0.03, 0.01, -0.02], [-0.05, 0.0, 0.04]]),
    );
    let cfg = load(
        dir.path(),
        r#"
geometry = "geo.toml"
model = "freefield-plane"
[frequencies]
start = 100.0
stop = 8000.0
count = 5
spacing = "log"
[directions]
n_theta = 7
n_phi = 8
"#,
    );
    cmd_steering(&cfg, Some(&dir.path().join("o"))).unwrap();
    let (_, rows) = csv_rows(&dir.path().join("o").join(DICTIONARY_FILE));
    assert_eq!(rows.len(), 5 * (5 * 8 + 2) * 3);
    for r in &rows {
        let z = Complex64::new(num(&r[4]), num(&r[5]));
        assert!((z.norm() - 1.0).abs() < 1e-12, "{r:?}");
    }
}

#[test]
fn dictionary_round_trip_and_dictionary_model() {
    let dir = TempDir::new().unwrap();
    let geometry = configs_dir().join("paper_array.toml");
    let base = format!(
        r#"
geometry = "{}"
[sphere]
radius = 0.1515
center = [0.0, 0.0, -0.1515]
[frequencies]
values = [300.0, 2500.0]
[directions]
grid = "gauss-legendre"
n_theta = 8
n_phi = 16
[quadrature]
n_theta = 8
n_phi = 16
"#,
        geometry.display()
    );
    let cfg = load(dir.path(), &format!("model = \"rigid-sphere\"\n{base}"));
    cmd_steering(&cfg, Some(&dir.path().join("dict"))).unwrap();
    let dict_path = dir.path().join("dict").join(DICTIONARY_FILE);

    let setup = formats::read_geometry(&geometry).unwrap();
    let dict = formats::read_dictionary(&dict_path, &setup.geometry).unwrap();
    assert_eq!(dict.directions().len(), 128);
    let (_, rows) = csv_rows(&dict_path);
    let mut i = 0;
    for fi in 0..2 {
        for di in 0..128 {
            for z in dict.entry(fi, di) {
                let r = &rows[i];
                assert!((z - Complex64::new(num(&r[4]), num(&r[5]))).norm() < 1e-12);
                i += 1;
            }
        }
    }
    // writing the parsed dictionary reproduces the file; angles may move by
    // degree/radian round-off, values not at all
    let mut again = Vec::new();
    formats::write_dictionary(&mut again, &dict).unwrap();
    let again = String::from_utf8(again).unwrap();
    let rewritten: Vec<Vec<&str>> = again.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rewritten.len(), rows.len());
    for (x, y) in rewritten.iter().zip(&rows) {
        assert_eq!((x[0], x[3], x[4], x[5]), (y[0].as_str(), y[3].as_str(), y[4].as_str(), y[5].as_str()));
        for c in 1..3 {
            assert!((num(x[c]) - num(&y[c])).abs() < 1e-12, "{x:?} vs {y:?}");
        }
    }

    // a design driven by the file matches the same design driven by the model
    let look = &rows[5 * 17];
    let looks = format!("gamma_db = -25.0\nlook_directions = [[{}, {}]]\n", look[1], look[2]);
    let from_model = load(dir.path(), &format!("model = \"rigid-sphere\"\n{looks}{base}"));
    cmd_design(&from_model, Some(&dir.path().join("a"))).unwrap();
    let from_file = load(
        dir.path(),
        &format!("model = \"dictionary-file\"\ndictionary = \"dict/dictionary.csv\"\n{looks}{base}"),
    );
    cmd_design(&from_file, Some(&dir.path().join("b"))).unwrap();
    let a = formats::read_sweep(&dir.path().join("a").join(SWEEP_FILE)).unwrap();
    let b = formats::read_sweep(&dir.path().join("b").join(SWEEP_FILE)).unwrap();
    assert_eq!(a.len(), 2);
    for (x, y) in a.iter().zip(&b) {
        for (p, q) in [(x.ag_lin, y.ag_lin), (x.wng_lin, y.wng_lin), (x.macc_nats, y.macc_nats)] {
            assert!((p - q).abs() <= 1e-9 * p.abs(), "{p} vs {q}");
        }
    }
}

#[test]
fn bem_dictionary_matches_rigid_sphere() {
    let a = 0.05;
    let dir = TempDir::new().unwrap();
    let mesh = geodesic_sphere(12, a, Vec3::ZERO).unwrap();
    let mut text = Vec::new();
    formats::write_mesh(&mut text, &mesh).unwrap();
    std::fs::write(dir.path().join("sphere.mesh"), text).unwrap();
    // mics on the sphere, straight out from a few element centroids
    let mics: Vec<[f64; 3]> = [0usize, 700, 1400, 2100, 2879]
        .iter()
        .map(|&t| (mesh.centroids()[t].normalized().unwrap() * a).to_array())
        .collect();
    write(dir.path(), "geo.toml", &geometry_toml(&mics));
    let tail = format!(
        r#"
geometry = "geo.toml"
mesh = "sphere.mesh"
[sphere]
radius = {a}
[frequencies]
values = [{}, {}, {}]
[directions]
list = [[20.0, 0.0], [75.0, 120.0], [160.0, 250.0]]
[bem]
chief_points = 0
"#,
        freq_for(0.5, a),
        freq_for(1.0, a),
        freq_for(2.0, a)
    );
    cmd_steering(&load(dir.path(), &format!("model = \"bem\"\n{tail}")), Some(&dir.path().join("bem"))).unwrap();
    cmd_steering(
        &load(dir.path(), &format!("model = \"rigid-sphere\"\n{tail}")),
        Some(&dir.path().join("sphere")),
    )
    .unwrap();
    let (_, bem) = csv_rows(&dir.path().join("bem").join(DICTIONARY_FILE));
    let (_, exact) = csv_rows(&dir.path().join("sphere").join(DICTIONARY_FILE));
    assert_eq!(bem.len(), 3 * 3 * 5);
    for (b, e) in bem.iter().zip(&exact) {
        assert_eq!(b[..4], e[..4]);
        let zb = Complex64::new(num(&b[4]), num(&b[5]));
        let ze = Complex64::new(num(&e[4]), num(&e[5]));
        let rel = (zb - ze).norm() / ze.norm();
        assert!(rel < 0.03, "{b:?}: {rel}");
    }
}

fn paper_design(dir: &Path, model_block: &str, extra: &str) -> RunConfig {
    let geometry = configs_dir().join("paper_array.toml");
    load(
        dir,
        &format!(
            r#"
geometry = "{}"
{model_block}
look_directions = [[90.0, 0.0], [30.0, 0.0]]
{extra}
[quadrature]
n_theta = 16
n_phi = 32
[frequencies]
start = 80.0
stop = 8000.0
count = 12
spacing = "log"
"#,
            geometry.display()
        ),
    )
}

#[test]
fn design_files_have_fixed_schema() {
    let dir = TempDir::new().unwrap();
    let cfg = paper_design(dir.path(), "model = \"freefield-plane\"", "gamma_db = -25.0");
    let outcome = cmd_design(&cfg, None).unwrap();
    assert_eq!(outcome.exit_code(), 0);
    let (wh, weights) = csv_rows(&dir.path().join("out").join(WEIGHTS_FILE));
    let (sh, sweep) = csv_rows(&dir.path().join("out").join(SWEEP_FILE));
    assert_eq!(wh, "freq_hz,ld_theta_deg,ld_phi_deg,mic_index,real,imag,loading,wng_db_achieved");
    assert_eq!(sh, "freq_hz,ld_theta_deg,ld_phi_deg,ag_lin,ag_db,wng_lin,wng_db,macc_nats");
    assert_eq!(weights.len(), 12 * 2 * 5);
    assert_eq!(sweep.len(), 12 * 2);
    assert_eq!(sweep[0][..3], ["80", "90", "0"]);
    assert_eq!(sweep[1][..3], ["80", "30", "0"]);
    for r in &sweep {
        assert!(num(&r[6]) >= -25.0 - 1e-6, "{r:?}");
        assert!((num(&r[4]) - 10.0 * num(&r[3]).log10()).abs() < 1e-12);
    }
}

#[test]
fn single_mic_design_is_unity() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "geo.toml", &geometry_toml(&[[0.01, 0.02, 0.0]]));
    let cfg = load(
        dir.path(),
        r#"
geometry = "geo.toml"
model = "freefield-plane"
gamma_db = -25.0
look_directions = [[40.0, 10.0]]
[frequencies]
values = [1000.0]
[quadrature]
n_theta = 8
n_phi = 16
"#,
    );
    cmd_design(&cfg, None).unwrap();
    let sweep = formats::read_sweep(&dir.path().join("out").join(SWEEP_FILE)).unwrap();
    assert_eq!(sweep.len(), 1);
    assert!(sweep[0].ag_db.abs() < 1e-9 && sweep[0].wng_db.abs() < 1e-9, "{:?}", sweep[0]);
}

#[test]
fn infeasible_floor_skips_rows_and_exits_partial() {
    let dir = TempDir::new().unwrap();
    // five mics cap the WNG at 10 log10(5) = 6.99 dB
    let cfg = paper_design(dir.path(), "model = \"freefield-plane\"", "gamma_db = 7.5");
    let outcome = cmd_design(&cfg, None).unwrap();
    assert_eq!(outcome.exit_code(), EXIT_PARTIAL);
    assert_eq!(outcome.skipped.len(), 24);
    let (_, rows) = csv_rows(&dir.path().join("out").join(SWEEP_FILE));
    assert!(rows.is_empty());
}

#[test]
fn design_is_repeatable() {
    let dir = TempDir::new().unwrap();
    let block = "model = \"rigid-sphere\"\n[sphere]\nradius = 0.1515\ncenter = [0.0, 0.0, -0.1515]";
    let cfg = paper_design(dir.path(), "gamma_db = -25.0", block);
    cmd_design(&cfg, Some(&dir.path().join("a"))).unwrap();
    cmd_design(&cfg, Some(&dir.path().join("b"))).unwrap();
    for f in [WEIGHTS_FILE, SWEEP_FILE] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

fn write_sweep(path: &Path, rows: &[SweepRecord]) {
    let mut text = String::from("freq_hz,ld_theta_deg,ld_phi_deg,ag_lin,ag_db,wng_lin,wng_db,macc_nats\n");
    for r in rows {
        text += &format!(
            "{},{},{},{},{},{},{},{}\n",
            r.freq_hz, r.ld_theta_deg, r.ld_phi_deg, r.ag_lin, r.ag_db, r.wng_lin, r.wng_db, r.macc_nats
        );
    }
    std::fs::write(path, text).unwrap();
}

fn record(f: f64, ag: f64) -> SweepRecord {
    SweepRecord {
        freq_hz: f,
        ld_theta_deg: 30.0,
        ld_phi_deg: 0.0,
        ag_lin: ag,
        ag_db: 10.0 * ag.log10(),
        wng_lin: 0.5,
        wng_db: 10.0 * 0.5f64.log10(),
        macc_nats: 1.7,
    }
}

#[test]
fn compare_deltas_and_summary() {
    let dir = TempDir::new().unwrap();
    let a = [record(100.0, 3.0), record(200.0, 4.0), record(400.0, 5.0)];
    let mut b = a;
    b[1] = record(200.0, 8.0);
    write_sweep(&dir.path().join("a.csv"), &a);
    write_sweep(&dir.path().join("b.csv"), &b);

    let cfg = load(dir.path(), "[compare]\nsweep_a = \"a.csv\"\nsweep_b = \"a.csv\"");
    cmd_compare(&cfg, Some(&dir.path().join("self"))).unwrap();
    let (header, rows) = csv_rows(&dir.path().join("self").join("comparison.csv"));
    assert_eq!(header, "freq_hz,ld_theta_deg,ld_phi_deg,ag_delta_db,wng_delta_db,macc_delta_db");
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!(r[3..].iter().all(|v| num(v) == 0.0), "{r:?}");
    }

    let cfg = load(dir.path(), "[compare]\nsweep_a = \"a.csv\"\nsweep_b = \"b.csv\"");
    cmd_compare(&cfg, Some(&dir.path().join("ab"))).unwrap();
    let (_, rows) = csv_rows(&dir.path().join("ab").join("comparison.csv"));
    assert!((num(&rows[1][3]) - 3.0103).abs() < 1e-4, "{:?}", rows[1]);
    assert_eq!(num(&rows[0][3]), 0.0);
    let (sh, summary) = csv_rows(&dir.path().join("ab").join("comparison_summary.csv"));
    assert_eq!(sh, "metric,count,mean_db,min_db,max_db");
    assert_eq!(summary[0][..2], ["ag", "3"]);
    assert!((num(&summary[0][4]) - 10.0 * 2f64.log10()).abs() < 1e-12);

    write_sweep(&dir.path().join("c.csv"), &[record(100.0, 3.0), record(250.0, 4.0), record(400.0, 5.0)]);
    let cfg = load(dir.path(), "[compare]\nsweep_a = \"a.csv\"\nsweep_b = \"c.csv\"");
    let err = cmd_compare(&cfg, None).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_CONFIG);
    write_sweep(&dir.path().join("d.csv"), &a[..2]);
    let cfg = load(dir.path(), "[compare]\nsweep_a = \"a.csv\"\nsweep_b = \"d.csv\"");
    assert_eq!(cmd_compare(&cfg, None).unwrap_err().exit_code(), EXIT_CONFIG);
}

fn scatter_config(dir: &Path, model: &str, freqs: &[f64], looks: &str) -> RunConfig {
    write(dir, "geo.toml", &geometry_toml(&[[0.0, 0.0, 0.05], [0.05, 0.0, 0.0], [0.0, 0.0, -0.05]]));
    let list: Vec<String> = freqs.iter().map(|f| format!("{f:?}")).collect();
    load(
        dir,
        &format!(
            "geometry = \"geo.toml\"\nmodel = \"{model}\"\nlook_directions = {looks}\n\
             [sphere]\nradius = 0.05\n[frequencies]\nvalues = [{}]\n",
            list.join(", ")
        ),
    )
}

fn ps_db(rows: &[Vec<String>], freq_index: usize, mic: usize, mics: usize) -> f64 {
    num(&rows[freq_index * mics + mic][6])
}

#[test]
fn scatterfield_trends() {
    let dir = TempDir::new().unwrap();
    let a = 0.05;
    let cfg = scatter_config(dir.path(), "rigid-sphere", &[freq_for(0.01, a), freq_for(5.0, a)], "[[0.0, 0.0]]");
    cmd_scatterfield(&cfg, None).unwrap();
    let (header, rows) = csv_rows(&dir.path().join("out").join(SCATTER_FILE));
    assert_eq!(header, "freq_hz,theta_deg,phi_deg,mic_index,ps_real,ps_imag,ps_db");
    assert_eq!(rows.len(), 2 * 3);
    for mic in 0..3 {
        assert!(ps_db(&rows, 0, mic, 3) < -40.0, "{:?}", rows[mic]);
    }
    // the mic facing the source (gamma = 0) against the one at gamma = 90 deg
    assert!(ps_db(&rows, 1, 0, 3) > ps_db(&rows, 1, 1, 3));
}

#[test]
fn scatterfield_plus_incident_is_total() {
    let dir = TempDir::new().unwrap();
    let f = freq_for(3.0, 0.05);
    let cfg = scatter_config(dir.path(), "rigid-sphere", &[f], "[[35.0, 80.0]]");
    cmd_scatterfield(&cfg, None).unwrap();
    let (_, rows) = csv_rows(&dir.path().join("out").join(SCATTER_FILE));

    let steering = load(
        dir.path(),
        &format!(
            "geometry = \"geo.toml\"\nmodel = \"rigid-sphere\"\n[sphere]\nradius = 0.05\n\
             [frequencies]\nvalues = [{f:?}]\n[directions]\nlist = [[35.0, 80.0]]\n"
        ),
    );
    cmd_steering(&steering, Some(&dir.path().join("t"))).unwrap();
    let (_, total) = csv_rows(&dir.path().join("t").join(DICTIONARY_FILE));
    let k = 2.0 * std::f64::consts::PI * f / C;
    let (t, p) = (35f64.to_radians(), 80f64.to_radians());
    let u = [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()];
    let mics = [[0.0, 0.0, 0.05], [0.05, 0.0, 0.0], [0.0, 0.0, -0.05]];
    for (m, pos) in mics.iter().enumerate() {
        let incident = Complex64::cis(k * (u[0] * pos[0] + u[1] * pos[1] + u[2] * pos[2]));
        let ps = Complex64::new(num(&rows[m][4]), num(&rows[m][5]));
        let pt = Complex64::new(num(&total[m][4]), num(&total[m][5]));
        assert!((incident + ps - pt).norm() < 1e-12, "mic {m}");
    }
}

#[test]
fn scatterfield_rejects_free_field() {
    let dir = TempDir::new().unwrap();
    let cfg = scatter_config(dir.path(), "freefield-plane", &[1000.0], "[[0.0, 0.0]]");
    let err = cmd_scatterfield(&cfg, None).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_CONFIG);
    assert!(err.to_string().contains("scattered"), "{err}");
}

#[test]
fn binary_exit_codes() {
    let dir = TempDir::new().unwrap();
    let bin = env!("CARGO_BIN_EXE_beamkit");
    let bad = write(dir.path(), "bad.toml", "model = \"rigid-sphere\"\ngamma_db = [1\n");
    let out = Process::new(bin).args(["design", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let missing = write(dir.path(), "missing.toml", "model = \"freefield-plane\"\n");
    let out = Process::new(bin).args(["design", "--config"]).arg(&missing).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));

    let cfg = write(
        dir.path(),
        "ok.toml",
        &format!(
            "geometry = \"{}\"\nmodel = \"freefield-plane\"\ngamma_db = 7.5\nlook_directions = [[90.0, 0.0]]\n\
             [frequencies]\nvalues = [1000.0]\n[quadrature]\nn_theta = 8\nn_phi = 16\n",
            configs_dir().join("paper_array.toml").display()
        ),
    );
    let out = Process::new(bin)
        .args(["design", "--workers", "2", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_PARTIAL));
    assert!(dir.path().join("o").join(SWEEP_FILE).exists());
}

#[test]
fn shipped_example_configs_parse() {
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") && path.file_name().unwrap() != "paper_array.toml" {
            RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
    }
    let mesh = formats::read_mesh(&configs_dir().join("form_factor.mesh")).unwrap();
    let setup = formats::read_geometry(&configs_dir().join("paper_array.toml")).unwrap();
    beamkit_core::bem::MicSampler::new(&mesh, &setup.geometry).unwrap();
}

use std::fs;
use std::path::{Path, PathBuf};

use assert_cmd::Command;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

use funque::dataset::{read_mos_csv, Dataset};
use funque::features::{FeatureParams, FeatureTable};
use funque::fusion::{svr_predict_values, svr_train, Schema, SvrHyper};
use funque::pipeline::{extract_plane_features, PipelineOptions};
use funque::transform::{TransformConfig, UnifiedTransform};
use funque::video_io::{FrameSource, PixelFormat, VideoSpec, YuvWriter};
use funque::Plane;

const W: usize = 96;
const H: usize = 96;

fn spec() -> VideoSpec {
    VideoSpec::new(W, H, PixelFormat::Yuv420p, 8).unwrap()
}

fn content(k: usize, frames: usize) -> Vec<Plane<f64>> {
    (0..frames)
        .map(|t| {
            Plane::from_fn(W, H, |r, c| {
                let (r, c) = (r as f64, c as f64);
                let (k, t) = (k as f64, t as f64);
                128.0
                    + 50.0 * ((r + 1.5 * k * t) / (4.0 + k)).sin() * (c / (6.0 + 2.0 * k)).cos()
                    + 20.0 * ((r + c) / 9.0).sin()
            })
        })
        .collect()
}

fn distort(frames: &[Plane<f64>], noise: f64, seed: u64) -> Vec<Plane<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    frames
        .iter()
        .map(|p| Plane::from_fn(W, H, |r, c| p[(r, c)] + noise * rng.random_range(-1.0..1.0)))
        .collect()
}

fn write_clip(path: &Path, frames: &[Plane<f64>]) {
    let mut w = YuvWriter::create(path, spec()).unwrap();
    for f in frames {
        w.write_frame(f, 128).unwrap();
    }
    w.finish().unwrap();
}

fn funque() -> Command {
    let mut c = Command::cargo_bin("funque").unwrap();
    c.env_remove("FUNQUE_MODEL_DIR");
    c
}

fn video_args(r: &Path, d: &Path) -> Vec<String> {
    vec![
        "--ref".into(),
        r.display().to_string(),
        "--dis".into(),
        d.display().to_string(),
        "--width".into(),
        W.to_string(),
        "--height".into(),
        H.to_string(),
    ]
}

fn stdout_of(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Three contents, four noise levels, three frames each; returns the
/// directory, the reference and distorted clip paths and the MOS CSV.
struct Corpus {
    dir: TempDir,
    pairs: Vec<(String, PathBuf, PathBuf)>,
    mos: PathBuf,
}

fn corpus() -> Corpus {
    let dir = TempDir::new().unwrap();
    let mut pairs = Vec::new();
    let mut mos = String::from("video_id,mos,content_id\n");
    for k in 0..3 {
        let refs = content(k, 3);
        let rp = dir.path().join(format!("ref{k}.yuv"));
        write_clip(&rp, &refs);
        for (j, noise) in [0.0, 8.0, 20.0, 40.0].iter().enumerate() {
            let id = format!("c{k}_d{j}");
            let dp = dir.path().join(format!("{id}.yuv"));
            write_clip(&dp, &distort(&refs, *noise, 10 * k as u64 + j as u64));
            mos.push_str(&format!("{id},{},c{k}\n", 5.0 - j as f64 - 0.1 * k as f64));
            pairs.push((id, rp.clone(), dp));
        }
    }
    let mos_path = dir.path().join("mos.csv");
    fs::write(&mos_path, mos).unwrap();
    Corpus {
        dir,
        pairs,
        mos: mos_path,
    }
}

fn extract_all(c: &Corpus) -> Vec<PathBuf> {
    c.pairs
        .iter()
        .map(|(id, r, d)| {
            let out = c.dir.path().join(format!("{id}.csv"));
            let mut cmd = funque();
            cmd.arg("extract")
                .args(video_args(r, d))
                .arg("--out")
                .arg(&out);
            stdout_of(&mut cmd);
            out
        })
        .collect()
}

fn train_model(c: &Corpus, feats: &[PathBuf]) -> PathBuf {
    let model = c.dir.path().join("model.txt");
    let mut cmd = funque();
    cmd.arg("train")
        .arg("--features")
        .args(feats)
        .arg("--mos")
        .arg(&c.mos)
        .arg("--model")
        .arg(&model);
    stdout_of(&mut cmd);
    model
}

fn pooled_from_csv(text: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with("pooled,")).unwrap();
    line["pooled,".len()..].parse().unwrap()
}

fn read_planes(path: &Path) -> Vec<Plane<f64>> {
    let mut s = FrameSource::open(path, spec()).unwrap();
    (0..s.frame_count())
        .map(|i| s.read_luma(i).unwrap())
        .collect()
}

#[test]
fn extract_writes_one_row_per_frame() {
    let dir = TempDir::new().unwrap();
    let (r, d) = (dir.path().join("r.yuv"), dir.path().join("d.yuv"));
    let refs = content(0, 3);
    write_clip(&r, &refs);
    write_clip(&d, &distort(&refs, 10.0, 1));
    let text = stdout_of(
        funque()
            .arg("extract")
            .args(video_args(&r, &d))
            .args(["--seed", "17"]),
    );
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 4, "{text}");
    assert_eq!(data[0], "frame,wd_essim,vif_scale1,vif_scale2,dlm,motion");
    assert!(text.starts_with("# funque features v1\n"));
    assert!(text.contains("# seed 17"));
}

#[test]
fn unknown_feature_is_a_usage_error() {
    let out = funque()
        .args([
            "extract", "--ref", "a", "--dis", "b", "--width", "8", "--height", "8", "--schema",
            "dlm,psnr",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("psnr") && err.contains("vif_scale1") && err.contains("wd_essim"),
        "{err}"
    );
}

#[test]
fn frame_count_mismatch_fails_before_scoring() {
    let dir = TempDir::new().unwrap();
    let (r, d) = (dir.path().join("r.yuv"), dir.path().join("d.yuv"));
    let refs = content(1, 3);
    write_clip(&r, &refs);
    write_clip(&d, &refs[..2]);
    let out = funque()
        .arg("extract")
        .args(video_args(&r, &d))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("3 reference frames vs 2 distorted frames"),
        "{err}"
    );
    assert!(out.stdout.is_empty());
}

#[test]
fn spec_mismatch_and_missing_model_fail() {
    let dir = TempDir::new().unwrap();
    let r = dir.path().join("r.yuv");
    write_clip(&r, &content(0, 1));
    let out = funque()
        .args(["score", "--width", "97", "--height", "96"])
        .arg("--ref")
        .arg(&r)
        .arg("--dis")
        .arg(&r)
        .arg("--model")
        .arg(dir.path().join("none.model"))
        .output()
        .unwrap();
    assert!(!out.status.success());

    let out = funque()
        .arg("score")
        .args(video_args(&r, &r))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("FUNQUE_MODEL_DIR"));

    let out = funque()
        .arg("score")
        .args(video_args(&r, &r))
        .env("FUNQUE_MODEL_DIR", dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("funque.model"));
}

#[test]
fn end_to_end_matches_in_process_pipeline() {
    let c = corpus();
    let feats = extract_all(&c);
    let model = train_model(&c, &feats);

    // the same pipeline in-process, reading the same files
    let schema = Schema::funque_default();
    let tables: Vec<(String, FeatureTable)> = c
        .pairs
        .iter()
        .map(|(id, r, d)| {
            let t = UnifiedTransform::new(TransformConfig::default()).unwrap();
            let v = extract_plane_features(
                &t,
                &read_planes(r),
                &read_planes(d),
                &schema,
                &FeatureParams::default(),
                &PipelineOptions::default(),
            )
            .unwrap();
            let rows = v.per_frame.iter().map(|f| f.values.clone()).collect();
            (
                id.clone(),
                FeatureTable::per_frame(schema.names().to_vec(), rows),
            )
        })
        .collect();
    let data = Dataset::from_tables("train", &tables, &read_mos_csv(&c.mos).unwrap()).unwrap();
    let local = svr_train(&data, &SvrHyper::default()).unwrap();

    for (i, (_, r, d)) in c.pairs.iter().enumerate() {
        let text = stdout_of(
            funque()
                .arg("score")
                .args(video_args(r, d))
                .arg("--model")
                .arg(&model)
                .args(["--format", "csv"]),
        );
        let want = svr_predict_values(&local, &data.rows[i].features).unwrap();
        assert!(
            (pooled_from_csv(&text) - want).abs() < 1e-9,
            "{}: {text}",
            c.pairs[i].0
        );
    }

    // identity: the pooled score is the prediction at the identity features
    let (_, r, _) = &c.pairs[0];
    let text = stdout_of(
        funque()
            .arg("score")
            .args(video_args(r, r))
            .arg("--model")
            .arg(&model)
            .args(["--format", "csv"]),
    );
    let want = svr_predict_values(&local, &[0.0, 1.0, 1.0, 1.0, data.rows[0].features[4]]).unwrap();
    let ident = svr_predict_values(&local, &[0.0, 1.0, 1.0, 1.0, 0.0]).unwrap();
    let got = pooled_from_csv(&text);
    // pooled motion is the clip's own mean motion; per-frame frame 0 has zero motion
    assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    let frame0: f64 = text.lines().find(|l| l.starts_with("0,")).unwrap()[2..]
        .parse()
        .unwrap();
    assert!((frame0 - ident).abs() < 1e-9, "{frame0} vs {ident}");
}

#[test]
fn identity_on_static_clip_is_the_identity_prediction() {
    let c = corpus();
    let feats = extract_all(&c);
    let model = train_model(&c, &feats);
    let still = c.dir.path().join("still.yuv");
    let frame = content(2, 1).remove(0);
    write_clip(&still, &[frame.clone(), frame.clone(), frame]);
    let text = stdout_of(
        funque()
            .arg("score")
            .args(video_args(&still, &still))
            .arg("--model")
            .arg(&model)
            .args(["--format", "json"]),
    );
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let m = funque::fusion::load_model(&model).unwrap();
    let want = svr_predict_values(&m, &[0.0, 1.0, 1.0, 1.0, 0.0]).unwrap();
    assert!((v["pooled"].as_f64().unwrap() - want).abs() < 1e-9);
    assert_eq!(v["seed"], 0);
}

#[test]
fn repeated_runs_and_thread_counts_are_byte_identical() {
    let c = corpus();
    let feats = extract_all(&c);
    let model = train_model(&c, &feats);
    let (_, r, d) = &c.pairs[5];
    let run = |threads: &str, format: &str| {
        stdout_of(
            funque()
                .arg("score")
                .args(video_args(r, d))
                .arg("--model")
                .arg(&model)
                .args(["--threads", threads, "--format", format, "--seed", "3"]),
        )
    };
    for format in ["table", "csv", "json"] {
        let a = run("1", format);
        assert_eq!(a, run("1", format));
        assert_eq!(a, run("3", format));
        assert!(a.contains('3'));
    }
    assert!(run("1", "table").starts_with("seed: 3\n"));
}

#[test]
fn outputs_are_written_atomically() {
    let c = corpus();
    let feats = extract_all(&c);
    let model = train_model(&c, &feats);
    let before = fs::read(&feats[0]).unwrap();
    let (_, r, d) = &c.pairs[1];
    let out = c.dir.path().join("score.json");
    stdout_of(
        funque()
            .arg("score")
            .args(video_args(r, d))
            .arg("--model")
            .arg(&model)
            .args(["--format", "json", "--out"])
            .arg(&out),
    );
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["frames"].as_array().unwrap().len(), 3);
    // no stray temporaries; inputs untouched
    let names: Vec<String> = fs::read_dir(c.dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().all(|n| !n.starts_with(".tmp")), "{names:?}");
    assert_eq!(fs::read(&feats[0]).unwrap(), before);
}

#[test]
fn train_reports_malformed_csv_position() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("v.csv");
    fs::write(
        &f,
        "# funque features v1\nframe,dlm,motion\n0,0.5,1\n1,abc,2\n",
    )
    .unwrap();
    let mos = dir.path().join("mos.csv");
    fs::write(&mos, "video_id,mos\nv,3\n").unwrap();
    let out = funque()
        .arg("train")
        .arg("--features")
        .arg(&f)
        .arg("--mos")
        .arg(&mos)
        .arg("--model")
        .arg(dir.path().join("m"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("line 4") && err.contains("column 'dlm'"),
        "{err}"
    );
}

const ALL_COLUMNS: [&str; 10] = [
    "dlm",
    "wd_ssim",
    "wd_essim",
    "vif_scalar",
    "vif_vector",
    "vif_edge",
    "vif_approx",
    "vif_scale1",
    "vif_scale2",
    "motion",
];

/// Per-video feature table whose MOS depends on dlm and vif_scale1.
fn synthetic_db(dir: &Path, name: &str, n: usize, seed: u64) -> (PathBuf, PathBuf) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut feats = format!("# funque features v1\nvideo_id,{}\n", ALL_COLUMNS.join(","));
    let mut mos = String::from("video_id,mos,content_id\n");
    for i in 0..n {
        let row: Vec<f64> = (0..ALL_COLUMNS.len())
            .map(|_| rng.random_range(0.0..1.0))
            .collect();
        let score = 1.0 + 2.0 * row[0] + 2.0 * row[7];
        feats.push_str(&format!(
            "{name}{i},{}\n",
            row.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
        ));
        mos.push_str(&format!("{name}{i},{score},{name}c{i}\n"));
    }
    let (f, m) = (
        dir.join(format!("{name}_features.csv")),
        dir.join(format!("{name}_mos.csv")),
    );
    fs::write(&f, feats).unwrap();
    fs::write(&m, mos).unwrap();
    (f, m)
}

#[test]
fn select_ranks_every_subset_best_first() {
    let dir = TempDir::new().unwrap();
    let (f, m) = synthetic_db(dir.path(), "s", 30, 1);
    let text = stdout_of(
        funque()
            .arg("select")
            .arg("--features")
            .arg(&f)
            .arg("--mos")
            .arg(&m)
            .args(["--splits", "4", "--format", "csv", "--seed", "5"]),
    );
    assert!(text.starts_with("# seed 5\n"));
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 83);
    let scores: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn evaluate_reports_each_database_and_the_average() {
    let dir = TempDir::new().unwrap();
    let (f1, m1) = synthetic_db(dir.path(), "a", 25, 2);
    let (f2, m2) = synthetic_db(dir.path(), "b", 25, 3);
    let model = dir.path().join("m.txt");
    stdout_of(
        funque()
            .arg("train")
            .arg("--features")
            .arg(&f1)
            .arg("--mos")
            .arg(&m1)
            .arg("--model")
            .arg(&model),
    );
    let ds = |name: &str, m: &Path, f: &Path| format!("{name}:{}:{}", m.display(), f.display());
    let text = stdout_of(
        funque()
            .arg("evaluate")
            .arg("--dataset")
            .arg(ds("a", &m1, &f1))
            .arg("--dataset")
            .arg(ds("b", &m2, &f2))
            .arg("--model")
            .arg(&model)
            .args(["--format", "json"]),
    );
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let dbs = v["databases"].as_array().unwrap();
    assert_eq!(dbs.len(), 2);
    let r: Vec<f64> = dbs.iter().map(|d| d["srocc"].as_f64().unwrap()).collect();
    let want = ((r[0].atanh() + r[1].atanh()) / 2.0).tanh();
    assert!((v["fisher_average"].as_f64().unwrap() - want).abs() < 1e-12);
    assert!(r[1] > 0.8, "{r:?}");

    let text = stdout_of(
        funque()
            .arg("evaluate")
            .arg("--dataset")
            .arg(ds("a", &m1, &f1))
            .args(["--splits", "5"]),
    );
    assert!(
        text.contains("cross-validation") && text.contains("fisher average"),
        "{text}"
    );
}

#[test]
fn bench_prints_cost_columns() {
    let dir = TempDir::new().unwrap();
    let (r, d) = (dir.path().join("r.yuv"), dir.path().join("d.yuv"));
    let refs = content(0, 2);
    write_clip(&r, &refs);
    write_clip(&d, &distort(&refs, 10.0, 2));
    let text = stdout_of(funque().arg("bench").args(video_args(&r, &d)));
    for col in [
        "Model",
        "Runtime",
        "Ops Per Pixel",
        "Observed Speedup",
        "Expected Speedup",
        "FUNQUE",
        "seed: 0",
    ] {
        assert!(text.contains(col), "{col}: {text}");
    }
}

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use funque::baseline::baseline_video;
use funque::dataset::Dataset;
use funque::eval::{
    cross_validate, exhaustive_select, expected_speedup, fisher_average, ops_per_pixel, srocc,
    vmaf_reference_cost, CvOptions, SelectionSpace,
};
use funque::features::{write_features_csv, FeatureParams, FeatureTable};
use funque::fusion::{
    load_model, save_model, svr_predict_values, svr_train, Schema, SvrHyper, SvrModel,
};
use funque::pipeline::{
    check_pair, extract_plane_features, extract_video_features, score_video, PipelineOptions,
    VideoFeatures,
};
use funque::transform::{TransformConfig, UnifiedTransform};
use funque::video_io::FrameSource;
use funque::{Error, Plane, Result};

use crate::report::{csv_text, emit, table};
use crate::{
    BenchArgs, CommonArgs, CvArgs, DataArgs, EvaluateArgs, ExtractArgs, Format, HyperArgs,
    ScoreArgs, SelectArgs, TrainArgs, TransformArgs, VideoArgs,
};

pub const MODEL_DIR_ENV: &str = "FUNQUE_MODEL_DIR";
pub const DEFAULT_MODEL_FILE: &str = "funque.model";

fn num(v: f64) -> String {
    v.to_string()
}

fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

fn resolve_model(explicit: Option<&Path>) -> Result<PathBuf> {
    if let Some(p) = explicit {
        return Ok(p.to_path_buf());
    }
    match std::env::var_os(MODEL_DIR_ENV) {
        Some(dir) => Ok(Path::new(&dir).join(DEFAULT_MODEL_FILE)),
        None => Err(Error::InvalidArgument(format!(
            "no model given: pass --model or set {MODEL_DIR_ENV}"
        ))),
    }
}

fn open_pair(v: &VideoArgs) -> Result<(FrameSource, FrameSource)> {
    let spec = v.spec()?;
    let r = FrameSource::open(&v.reference, spec)?;
    let d = FrameSource::open(&v.distorted, spec)?;
    check_pair(&r, &d)?;
    Ok((r, d))
}

fn pipeline_options(c: &CommonArgs) -> PipelineOptions {
    PipelineOptions {
        threads: c.threads,
        ..PipelineOptions::default()
    }
}

fn video_features(
    v: &VideoArgs,
    t: &TransformArgs,
    schema: &Schema,
    c: &CommonArgs,
) -> Result<VideoFeatures> {
    let cfg = t.config()?;
    let (mut r, mut d) = open_pair(v)?;
    let transform = UnifiedTransform::new(cfg)?;
    extract_video_features::<f64>(
        &transform,
        &mut r,
        &mut d,
        schema,
        &FeatureParams::default(),
        &pipeline_options(c),
    )
}

fn transform_summary(cfg: &TransformConfig) -> String {
    format!(
        "wavelet={} levels={} csf={} csf_shared={} sast={} ppd={}",
        cfg.wavelet, cfg.levels, cfg.csf, cfg.csf_shared, cfg.sast, cfg.pixels_per_degree
    )
}

pub fn score(a: &ScoreArgs) -> Result<()> {
    let cfg = a.transform.config()?;
    let model_path = resolve_model(a.model.as_deref())?;
    a.video.spec()?;
    let model = load_model(&model_path)?;
    let feats = video_features(&a.video, &a.transform, &model.schema, &a.common)?;
    let scores = score_video(&model, &feats)?;
    let seed = a.common.seed;
    let text = match a.common.format.unwrap_or(Format::Table) {
        Format::Table => {
            let mut rows: Vec<Vec<String>> = scores
                .per_frame
                .iter()
                .enumerate()
                .map(|(i, s)| vec![i.to_string(), fixed(*s)])
                .collect();
            rows.push(vec!["pooled".into(), fixed(scores.pooled)]);
            format!(
                "seed: {seed}\nmodel: {}\ntransform: {}\n\n{}",
                model_path.display(),
                transform_summary(&cfg),
                table(&["frame", "score"], &rows)
            )
        }
        Format::Csv => {
            let mut rows = vec![vec!["frame".to_string(), "score".into()]];
            rows.extend(
                scores
                    .per_frame
                    .iter()
                    .enumerate()
                    .map(|(i, s)| vec![i.to_string(), num(*s)]),
            );
            rows.push(vec!["pooled".into(), num(scores.pooled)]);
            format!("# seed {seed}\n{}", csv_text(&rows)?)
        }
        Format::Json => {
            let v = json!({
                "seed": seed,
                "model": model_path.display().to_string(),
                "schema": model.schema.names(),
                "frames": scores.per_frame,
                "pooled": scores.pooled,
            });
            format!(
                "{}\n",
                serde_json::to_string_pretty(&v).expect("json value")
            )
        }
    };
    emit(a.common.out.as_deref(), &text)
}

pub fn extract(a: &ExtractArgs) -> Result<()> {
    let cfg = a.transform.config()?;
    a.video.spec()?;
    let feats = video_features(&a.video, &a.transform, &a.schema, &a.common)?;
    let seed = a.common.seed;
    let names = a.schema.names().to_vec();
    let rows: Vec<Vec<f64>> = feats.per_frame.iter().map(|f| f.values.clone()).collect();
    let text = match a.common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            write_features_csv(&mut buf, &FeatureTable::per_frame(names, rows))?;
            let body = String::from_utf8(buf).expect("csv output is utf-8");
            let (tag, rest) = body.split_once('\n').unwrap_or((&body, ""));
            format!(
                "{tag}\n# seed {seed}\n# transform {}\n{rest}",
                transform_summary(&cfg)
            )
        }
        Format::Table => {
            let mut header = vec!["frame"];
            header.extend(names.iter().map(String::as_str));
            let body: Vec<Vec<String>> = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    std::iter::once(i.to_string())
                        .chain(r.iter().map(|v| fixed(*v)))
                        .collect()
                })
                .collect();
            format!(
                "seed: {seed}\ntransform: {}\n\n{}",
                transform_summary(&cfg),
                table(&header, &body)
            )
        }
        Format::Json => {
            let v = json!({
                "seed": seed,
                "transform": transform_summary(&cfg),
                "schema": names,
                "frames": rows,
            });
            format!(
                "{}\n",
                serde_json::to_string_pretty(&v).expect("json value")
            )
        }
    };
    emit(a.common.out.as_deref(), &text)
}

fn hyper(h: &HyperArgs) -> SvrHyper {
    SvrHyper {
        kernel: h.kernel,
        gamma: h.gamma,
        c: h.c,
        nu: h.nu,
        ..SvrHyper::default()
    }
}

fn cv_options(cv: &CvArgs, seed: u64) -> CvOptions {
    CvOptions {
        n_splits: cv.splits,
        train_fraction: cv.train_fraction,
        grouped: !cv.ungrouped,
        seed,
    }
}

fn load_data(name: &str, d: &DataArgs) -> Result<Dataset> {
    let data = Dataset::load(name, &d.features, &d.mos)?;
    match &d.schema {
        Some(s) => data.select(s.names()),
        None => Ok(data),
    }
}

fn model_srocc(model: &SvrModel, data: &Dataset) -> Result<f64> {
    let data = data.select(model.schema.names())?;
    let pred = data
        .rows
        .iter()
        .map(|r| svr_predict_values(model, &r.features))
        .collect::<Result<Vec<_>>>()?;
    srocc(&pred, &data.mos())
}

/// `(key, value)` pairs as a table, CSV or flat JSON object.
fn key_values(format: Format, pairs: &[(&str, String)]) -> Result<String> {
    Ok(match format {
        Format::Table => {
            let w = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            pairs
                .iter()
                .map(|(k, v)| format!("{:<w$}  {v}\n", format!("{k}:"), w = w + 1))
                .collect()
        }
        Format::Csv => {
            let mut rows = vec![vec!["key".to_string(), "value".into()]];
            rows.extend(pairs.iter().map(|(k, v)| vec![k.to_string(), v.clone()]));
            csv_text(&rows)?
        }
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> = pairs
                .iter()
                .map(|(k, v)| (k.to_string(), json!(v)))
                .collect();
            format!(
                "{}\n",
                serde_json::to_string_pretty(&map).expect("json value")
            )
        }
    })
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let data = load_data("train", &a.data)?;
    let model = svr_train(&data, &hyper(&a.hyper))?;
    save_model(&model, &a.model)?;
    let fit = match model_srocc(&model, &data) {
        Ok(r) => num(r),
        Err(Error::UndefinedCorrelation(_)) => "undefined".into(),
        Err(e) => return Err(e),
    };
    let text = key_values(
        a.common.format.unwrap_or(Format::Table),
        &[
            ("seed", a.common.seed.to_string()),
            ("model", a.model.display().to_string()),
            ("schema", model.schema.to_string()),
            ("rows", data.len().to_string()),
            ("kernel", model.kernel.to_string()),
            ("gamma", num(model.gamma)),
            ("support_vectors", model.support_vectors.len().to_string()),
            ("bias", num(model.bias)),
            ("training_srocc", fit),
        ],
    )?;
    emit(a.common.out.as_deref(), &text)
}

/// Default selection space restricted to candidates whose columns exist.
fn available_space(data: &Dataset) -> Result<SelectionSpace> {
    let mut space = SelectionSpace::funque_default();
    for cat in &mut space.categories {
        cat.candidates.retain(|c| {
            let ok = c.columns.iter().all(|col| data.schema.contains(col));
            if !ok {
                log::warn!(
                    "candidate {} skipped: columns missing from the features",
                    c.name
                );
            }
            ok
        });
    }
    space.categories.retain(|c| !c.candidates.is_empty());
    if space.categories.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no selectable feature columns among [{}]",
            data.schema.join(",")
        )));
    }
    Ok(space)
}

pub fn select(a: &SelectArgs) -> Result<()> {
    let data = load_data("select", &a.data)?;
    let space = available_space(&data)?;
    let seed = a.common.seed;
    let ranked = exhaustive_select(&space, &data, &cv_options(&a.cv, seed), &hyper(&a.hyper))?;
    let text = match a.common.format.unwrap_or(Format::Table) {
        Format::Table => {
            let rows: Vec<Vec<String>> = ranked
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    vec![
                        (i + 1).to_string(),
                        fixed(s.score),
                        s.candidates.join("+"),
                        s.columns.join(","),
                    ]
                })
                .collect();
            format!(
                "seed: {seed}\nsplits: {}\nsubsets: {}\n\n{}",
                a.cv.splits,
                ranked.len(),
                table(&["rank", "srocc", "candidates", "columns"], &rows)
            )
        }
        Format::Csv => {
            let mut rows = vec![vec![
                "rank".to_string(),
                "srocc".into(),
                "candidates".into(),
                "columns".into(),
            ]];
            rows.extend(ranked.iter().enumerate().map(|(i, s)| {
                vec![
                    (i + 1).to_string(),
                    num(s.score),
                    s.candidates.join("+"),
                    s.columns.join("+"),
                ]
            }));
            format!("# seed {seed}\n{}", csv_text(&rows)?)
        }
        Format::Json => {
            let subsets: Vec<serde_json::Value> = ranked
                .iter()
                .map(
                    |s| json!({"candidates": s.candidates, "columns": s.columns, "srocc": s.score}),
                )
                .collect();
            let v = json!({"seed": seed, "splits": a.cv.splits, "ranked": subsets});
            format!(
                "{}\n",
                serde_json::to_string_pretty(&v).expect("json value")
            )
        }
    };
    emit(a.common.out.as_deref(), &text)
}

/// `NAME:MOS_CSV:FEATURES_CSV[,FEATURES_CSV...]`
fn parse_dataset_arg(arg: &str) -> Result<(String, PathBuf, Vec<PathBuf>)> {
    let mut parts = arg.splitn(3, ':');
    match (parts.next(), parts.next(), parts.next()) {
        (Some(name), Some(mos), Some(files))
            if !name.is_empty() && !mos.is_empty() && !files.is_empty() =>
        {
            Ok((
                name.to_string(),
                PathBuf::from(mos),
                files.split(',').map(PathBuf::from).collect(),
            ))
        }
        _ => Err(Error::InvalidArgument(format!(
            "--dataset '{arg}' is not NAME:MOS_CSV:FEATURES_CSV[,FEATURES_CSV...]"
        ))),
    }
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let specs = a
        .datasets
        .iter()
        .map(|s| parse_dataset_arg(s))
        .collect::<Result<Vec<_>>>()?;
    let model = a.model.as_deref().map(load_model).transpose()?;
    let seed = a.common.seed;
    let opts = cv_options(&a.cv, seed);
    let mut results = Vec::new();
    for (name, mos, files) in &specs {
        let data = Dataset::load(name.as_str(), files, mos)?;
        let r = match &model {
            Some(m) => model_srocc(m, &data)?,
            None => cross_validate(&data, &opts, &hyper(&a.hyper))?.mean_srocc,
        };
        results.push((name.clone(), data.len(), r));
    }
    let limit = 1.0 - 1e-9;
    let rs: Vec<f64> = results
        .iter()
        .map(|(_, _, r)| r.clamp(-limit, limit))
        .collect();
    let avg = fisher_average(&rs)?;
    let mode = match &a.model {
        Some(p) => format!("model {}", p.display()),
        None => format!("cross-validation, {} splits", a.cv.splits),
    };
    let text = match a.common.format.unwrap_or(Format::Table) {
        Format::Table => {
            let mut rows: Vec<Vec<String>> = results
                .iter()
                .map(|(n, len, r)| vec![n.clone(), len.to_string(), fixed(*r)])
                .collect();
            rows.push(vec!["fisher average".into(), String::new(), fixed(avg)]);
            format!(
                "seed: {seed}\nmode: {mode}\n\n{}",
                table(&["database", "videos", "srocc"], &rows)
            )
        }
        Format::Csv => {
            let mut rows = vec![vec![
                "database".to_string(),
                "videos".into(),
                "srocc".into(),
            ]];
            rows.extend(
                results
                    .iter()
                    .map(|(n, len, r)| vec![n.clone(), len.to_string(), num(*r)]),
            );
            rows.push(vec!["fisher_average".into(), String::new(), num(avg)]);
            format!("# seed {seed}\n# {mode}\n{}", csv_text(&rows)?)
        }
        Format::Json => {
            let dbs: Vec<serde_json::Value> = results
                .iter()
                .map(|(n, len, r)| json!({"database": n, "videos": len, "srocc": r}))
                .collect();
            let v = json!({"seed": seed, "mode": mode, "databases": dbs, "fisher_average": avg});
            format!(
                "{}\n",
                serde_json::to_string_pretty(&v).expect("json value")
            )
        }
    };
    emit(a.common.out.as_deref(), &text)
}

fn read_frames(src: &mut FrameSource, n: usize) -> Result<Vec<Plane<f64>>> {
    (0..n).map(|i| src.read_luma(i)).collect()
}

pub fn bench(a: &BenchArgs) -> Result<()> {
    let cfg = a.transform.config()?;
    let (mut r, mut d) = open_pair(&a.video)?;
    let n = a
        .max_frames
        .map_or(r.frame_count(), |m| m.min(r.frame_count()));
    if n == 0 {
        return Err(Error::InvalidArgument("no frames to time".into()));
    }
    let refs = read_frames(&mut r, n)?;
    let dis = read_frames(&mut d, n)?;

    let transform = UnifiedTransform::new(cfg.clone())?;
    let start = Instant::now();
    extract_plane_features(
        &transform,
        &refs,
        &dis,
        &a.schema,
        &FeatureParams::default(),
        &pipeline_options(&a.common),
    )?;
    let ours = start.elapsed().as_secs_f64() / n as f64;
    let start = Instant::now();
    baseline_video(&refs, &dis, a.common.threads)?;
    let theirs = start.elapsed().as_secs_f64() / n as f64;

    let ops_ours = ops_per_pixel(&cfg, &a.schema)?.total();
    let ops_ref = vmaf_reference_cost().total();
    let expected = expected_speedup(&cfg, &a.schema)?;
    let observed = theirs / ours;
    let seed = a.common.seed;
    let rows = [
        ("VMAF-equivalent reference", theirs, ops_ref, 1.0, 1.0),
        ("FUNQUE", ours, ops_ours, observed, expected),
    ];
    let text = match a.common.format.unwrap_or(Format::Table) {
        Format::Table => {
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|(m, t, o, obs, exp)| {
                    vec![
                        m.to_string(),
                        format!("{:.2} ms", t * 1e3),
                        format!("{o:.2}"),
                        format!("{obs:.3}"),
                        format!("{exp:.3}"),
                    ]
                })
                .collect();
            format!(
                "seed: {seed}\nframes: {n}\ntransform: {}\nschema: {}\n\n{}",
                transform_summary(&cfg),
                a.schema,
                table(
                    &[
                        "Model",
                        "Runtime",
                        "Ops Per Pixel",
                        "Observed Speedup",
                        "Expected Speedup"
                    ],
                    &body
                )
            )
        }
        Format::Csv => {
            let mut body = vec![vec![
                "model".to_string(),
                "runtime_ms_per_frame".into(),
                "ops_per_pixel".into(),
                "observed_speedup".into(),
                "expected_speedup".into(),
            ]];
            body.extend(rows.iter().map(|(m, t, o, obs, exp)| {
                vec![m.to_string(), num(t * 1e3), num(*o), num(*obs), num(*exp)]
            }));
            format!("# seed {seed}\n# frames {n}\n{}", csv_text(&body)?)
        }
        Format::Json => {
            let models: Vec<serde_json::Value> = rows
                .iter()
                .map(|(m, t, o, obs, exp)| {
                    json!({"model": m, "runtime_ms_per_frame": t * 1e3, "ops_per_pixel": o,
                           "observed_speedup": obs, "expected_speedup": exp})
                })
                .collect();
            let v = json!({"seed": seed, "frames": n, "models": models});
            format!(
                "{}\n",
                serde_json::to_string_pretty(&v).expect("json value")
            )
        }
    };
    emit(a.common.out.as_deref(), &text)
}

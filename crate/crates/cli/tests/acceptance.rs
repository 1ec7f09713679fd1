//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Tolerances and time budgets are fixed here and must not
//! be loosened to make a run pass.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use dif_core::diff::{amplify_split, analyze_pair};
use dif_core::filter::{spatial_filter, GaussianKernel};
use dif_core::forgery::{forgery_score, ConsistencyParams, RegionSpec, Verdict};
use dif_core::io::{write_image, BitDepth, Report};
use dif_core::synth::{
    evaluate_recovery, forgery_scene, generate_pair, generate_stream, random_single_field_scene, Base, EvidenceField,
    FieldKind, SceneSpec, SupportShape,
};
use dif_core::video::{analyze_video, ReferenceSpec};
use dif_core::{subtract, AnalysisParams, FloatImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const PEAK: f64 = 2.0 / 255.0;
const NOISE: f64 = 1.0 / 255.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize, c: usize, lo: f64, hi: f64) -> FloatImage {
    FloatImage::from_fn(w, h, c, |_, _, _| rng.random_range(lo..hi)).unwrap()
}

fn reflect(mut i: isize, n: usize) -> usize {
    let n = n as isize;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

fn gaussian_taps(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let raw: Vec<f64> = (-r..=r).map(|j| (-(j * j) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

fn dense_convolve(img: &FloatImage, sigma: f64, radius: usize) -> FloatImage {
    let taps = gaussian_taps(sigma, radius);
    let r = radius as isize;
    let (w, h, c) = img.shape();
    FloatImage::from_fn(w, h, c, |ch, x, y| {
        let mut acc = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                let k = taps[(dy + r) as usize] * taps[(dx + r) as usize];
                acc += k * img.get(ch, reflect(x as isize + dx, w), reflect(y as isize + dy, h));
            }
        }
        acc
    })
    .unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut sub_ok, mut amp_err) = (true, 0.0f64);
    for _ in 0..200 {
        let p = random_image(&mut rng, 16, 16, 3, 0.0, 1.0);
        let r = random_image(&mut rng, 16, 16, 3, 0.0, 1.0);
        let d = subtract(&p, &r).unwrap();
        for c in 0..3 {
            for y in 0..16 {
                for x in 0..16 {
                    sub_ok &= d.get(c, x, y) == p.get(c, x, y) - r.get(c, x, y);
                }
            }
        }
        let mut hi = 0.0f64;
        let mut lo = 0.0f64;
        for &v in d.samples() {
            hi = hi.max(v);
            lo = lo.min(v);
        }
        let pair = amplify_split(&d, 1e-9).unwrap();
        for (k, &v) in d.samples().iter().enumerate() {
            amp_err = amp_err.max((pair.d_plus.samples()[k] - v.max(0.0) / hi).abs());
            amp_err = amp_err.max((pair.d_minus.samples()[k] - (-v).max(0.0) / -lo).abs());
        }
        amp_err = amp_err.max((pair.gain_plus * hi - 1.0).abs());
        amp_err = amp_err.max((pair.gain_minus * -lo - 1.0).abs());
    }
    outcome(sub_ok && amp_err <= 1e-9, format!("subtract exact: {sub_ok}, amplify max error {amp_err:.2e}"))
}

fn convolution_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let sigma: f64 = [1.0, 2.0, 9.0][i % 3];
        let w = rng.random_range(1..=64);
        let h = rng.random_range(1..=64);
        let c = if rng.random_bool(0.5) { 3 } else { 1 };
        let img = random_image(&mut rng, w, h, c, -1.0, 1.0);
        let radius = (3.0 * sigma).ceil() as usize;
        let fast = spatial_filter(&img, &GaussianKernel::new(sigma, radius).unwrap());
        worst = worst.max(max_abs_diff(fast.samples(), dense_convolve(&img, sigma, radius).samples()));
    }
    outcome(worst <= 1e-6, format!("max deviation from dense convolution {worst:.2e}"))
}

fn noise_suppression() -> Outcome {
    let s = 0.01;
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let normal = Normal::new(0.0, s).unwrap();
    let noise = FloatImage::from_fn(512, 512, 1, |_, _, _| normal.sample(&mut rng)).unwrap();
    let out = spatial_filter(&noise, &GaussianKernel::new(9.0, 27).unwrap());
    let v = out.samples();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let measured = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let norm: f64 = gaussian_taps(9.0, 27).iter().map(|w| w * w).sum();
    let expected = s * norm;
    let ratio = measured / expected;
    outcome(
        (ratio - 1.0).abs() <= 0.05,
        format!("measured {:.4}·s, predicted {:.4}·s, ratio {ratio:.4}", measured / s, expected / s),
    )
}

fn subperceptual_recovery() -> Outcome {
    let params = AnalysisParams::default();
    let (mut hits, mut iou) = (0, 0.0);
    for seed in 0..50 {
        let spec = random_single_field_scene(128, 128, FieldKind::Reflection, PEAK, NOISE, 4000 + seed).unwrap();
        let scene = generate_pair(&spec).unwrap();
        let pair = analyze_pair(&scene.p, &scene.p_r, &params).unwrap();
        let m = evaluate_recovery(&pair, &scene.truth[0], 0.5, None).unwrap();
        hits += usize::from(m.argmax_hit);
        iou += m.iou / 50.0;
    }
    outcome(hits * 100 >= 95 * 50 && iou >= 0.3, format!("argmax hits {hits}/50, mean IoU {iou:.3}"))
}

fn sign_semantics() -> Outcome {
    let params = AnalysisParams::default();
    let (mut refl, mut occl) = (0, 0);
    for seed in 0..20 {
        for kind in [FieldKind::Reflection, FieldKind::Occlusion] {
            let spec = random_single_field_scene(96, 96, kind, PEAK, 0.0, 5000 + seed).unwrap();
            let scene = generate_pair(&spec).unwrap();
            let pair = analyze_pair(&scene.p, &scene.p_r, &params).unwrap();
            let populated = |d: &FloatImage| d.argmax().0 == 1.0;
            match kind {
                FieldKind::Reflection => {
                    refl += usize::from(pair.degenerate_minus && !pair.degenerate_plus && populated(&pair.d_plus))
                }
                FieldKind::Occlusion => {
                    occl += usize::from(pair.degenerate_plus && !pair.degenerate_minus && populated(&pair.d_minus))
                }
            }
        }
    }
    outcome(refl == 20 && occl == 20, format!("reflection {refl}/20, occlusion {occl}/20"))
}

fn transition_detection() -> Outcome {
    let params = AnalysisParams::default();
    let mut hits = 0;
    let mut found = Vec::new();
    for seed in 0..20 {
        let spec = random_single_field_scene(96, 96, FieldKind::Reflection, PEAK, NOISE, 6000 + seed).unwrap();
        let synth = generate_stream(&spec, 120, 60).unwrap();
        let reference = ReferenceSpec::FrameRangeAverage { start: 0, end: 29 };
        let result = analyze_video(&synth.stream, &reference, &params, None).unwrap();
        let cp = result.change_point().unwrap();
        hits += usize::from((cp - 60).abs() <= 5);
        found.push(cp);
    }
    outcome(hits >= 18, format!("within ±5 of frame 60 in {hits}/20 seeds, change points {found:?}"))
}

type ForgeryCase = (&'static str, Option<[f64; 3]>, [f64; 3], f64, Verdict);

fn forgery_verdicts() -> Outcome {
    const GREEN: [f64; 3] = [0.2, 0.6, 0.2];
    let cases: [ForgeryCase; 3] = [
        ("consistent", Some(GREEN), [0.25, 0.75, 0.25], NOISE, Verdict::Consistent),
        ("inconsistent", Some(GREEN), [0.6, 0.2, 0.2], NOISE, Verdict::Inconsistent),
        ("insufficient", None, [0.6, 0.2, 0.2], 0.0, Verdict::InsufficientEvidence),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, reflection, query, noise, expected) in cases {
        let mut ok = 0;
        for seed in 0..20 {
            let fs = forgery_scene(128, 96, reflection, query, PEAK, noise, 7000 + seed).unwrap();
            let (x, y, w, h) = fs.region;
            let out = forgery_score(
                &fs.scene.p,
                &fs.scene.p_r,
                &RegionSpec::Rect { x, y, w, h },
                &AnalysisParams::default(),
                &ConsistencyParams::default(),
            )
            .unwrap();
            ok += usize::from(out.report.verdict == expected);
        }
        pass &= ok == 20;
        parts.push(format!("{name} {ok}/20"));
    }
    outcome(pass, parts.join(", "))
}

fn dif<S: AsRef<std::ffi::OsStr> + std::fmt::Debug>(args: &[S], cwd: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dif"))
        .args(args)
        .current_dir(cwd)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("dif {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn report(path: PathBuf) -> Result<Report, String> {
    let text = fs::read_to_string(&path).map_err(|e| e.to_string())?;
    Report::parse(&text).map_err(|e| e.to_string())
}

fn parameter_conformance() -> Result<Outcome, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let (w, h) = (2448, 3264);
    let mut spec = SceneSpec::new(w, h, Base::Textured { mean: 0.4, amplitude: 0.1, cell: 64 });
    spec.noise_std = NOISE;
    spec.seed = 8;
    spec.evidence.push(
        EvidenceField::new(FieldKind::Reflection, SupportShape::Ellipse, (900.0, 1500.0), (300.0, 220.0), PEAK, [0.2, 0.6, 0.2])
            .map_err(|e| e.to_string())?,
    );
    let scene = generate_pair(&spec).map_err(|e| e.to_string())?;
    write_image(&scene.p, dir.join("p.png"), BitDepth::Sixteen).map_err(|e| e.to_string())?;
    write_image(&scene.p_r, dir.join("p_r.png"), BitDepth::Sixteen).map_err(|e| e.to_string())?;
    drop(scene);

    let start = Instant::now();
    dif(&["diff", "--scene", "p.png", "--ref", "p_r.png", "--out", "d"], dir)?;
    let elapsed = start.elapsed();
    let r = report(dir.join("d/report.txt"))?;
    let defaults = r.get("sigma") == Some("9") && r.get("temporal_window") == Some("11");
    let located = r.get("argmax_plus").is_some_and(|a| {
        let v: Vec<f64> = a.split(',').filter_map(|t| t.parse().ok()).collect();
        v.len() == 3 && ((v[0] - 900.0) / 300.0).powi(2) + ((v[1] - 1500.0) / 220.0).powi(2) <= 1.0
    });

    // the video report carries the same defaults
    let mut small = SceneSpec::new(32, 32, Base::Constant(0.4));
    small.noise_std = NOISE;
    let stream = generate_stream(&small, 12, 12).map_err(|e| e.to_string())?;
    let mut manifest = String::new();
    for f in stream.stream.frames() {
        let name = format!("f{}.png", f.index);
        write_image(&f.image, dir.join(&name), BitDepth::Sixteen).map_err(|e| e.to_string())?;
        manifest.push_str(&format!("{}\t{name}\n", f.index));
    }
    fs::write(dir.join("m.tsv"), manifest).map_err(|e| e.to_string())?;
    dif(&["video", "--manifest", "m.tsv", "--ref-range", "0:11", "--out", "v"], dir)?;
    let v = report(dir.join("v/report.txt"))?;
    let video_defaults = v.get("sigma") == Some("9") && v.get("temporal_window") == Some("11");

    Ok(outcome(
        defaults && video_defaults && located && elapsed < Duration::from_secs(60),
        format!(
            "defaults in diff report: {defaults}, in video report: {video_defaults}; {w}x{h} diff {:.1} s, argmax inside evidence: {located}",
            elapsed.as_secs_f64()
        ),
    ))
}

fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.push((path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn determinism() -> Result<Outcome, String> {
    let scene = "width: 160\nheight: 120\nchannels: 3\nbase: textured 0.4 0.1 16\nnoise_std: 1/255\nseed: 42\n\
                 evidence: reflection ellipse 60 60 24 18 2/255 0.2 0.6 0.2\n\
                 evidence: occlusion rect 120 40 14 20 2/255 0.4 0.3 0.3\n";
    let run = |threads: &str| -> Result<Vec<(PathBuf, Vec<u8>)>, String> {
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let dir = tmp.path();
        fs::write(dir.join("scene.cfg"), scene).map_err(|e| e.to_string())?;
        let with = |args: &[&'static str]| -> Vec<String> {
            ["--threads", threads].iter().chain(args).map(|s| s.to_string()).collect()
        };
        dif(&with(&["synth", "--spec", "scene.cfg", "--out", "out/syn"]), dir)?;
        dif(&with(&["synth", "--spec", "scene.cfg", "--frames", "24", "--entry", "12", "--out", "out/stream"]), dir)?;
        dif(&with(&["diff", "--scene", "out/syn/p.png", "--ref", "out/syn/p_r.png", "--out", "out/diff"]), dir)?;
        dif(
            &with(&["forgery", "--scene", "out/syn/p.png", "--ref", "out/syn/p_r.png", "--rect", "100,20,40,50", "--out", "out/forgery"]),
            dir,
        )?;
        dif(
            &with(&["video", "--manifest", "out/stream/frames.tsv", "--ref-range", "0:5", "--dumps", "--out", "out/video"]),
            dir,
        )?;
        dif(&with(&["eval", "--result", "out/diff/D+.difd", "--truth", "out/syn/truth_0.png", "--out", "out/eval"]), dir)?;
        Ok(snapshot(&dir.join("out")))
    };
    let first = run("1")?;
    let runs = [run("1")?, run("2")?, run("4")?];
    let identical = runs.iter().all(|r| *r == first);
    Ok(outcome(
        identical && !first.is_empty(),
        format!("{} artifacts byte-identical across 4 runs (threads 1, 1, 2, 4): {identical}", first.len()),
    ))
}

fn main() -> ExitCode {
    type Check = fn() -> Result<Outcome, String>;
    let criteria: [(&str, Option<u64>, Check); 9] = [
        ("1 oracle equivalence", Some(5), || Ok(oracle_equivalence())),
        ("2 convolution oracle", Some(30), || Ok(convolution_oracle())),
        ("3 noise suppression", Some(10), || Ok(noise_suppression())),
        ("4 sub-perceptual recovery", Some(60), || Ok(subperceptual_recovery())),
        ("5 sign semantics", None, || Ok(sign_semantics())),
        ("6 transition detection", Some(120), || Ok(transition_detection())),
        ("7 forgery verdicts", None, || Ok(forgery_verdicts())),
        ("8 parameter conformance", None, parameter_conformance),
        ("9 determinism", None, determinism),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match result {
            Ok(o) => {
                let in_time = budget.is_none_or(|b| secs < b as f64);
                let timing = match budget {
                    Some(b) if !in_time => format!("; over the {b} s budget"),
                    _ => String::new(),
                };
                (o.pass && in_time, format!("{}{timing}", o.detail))
            }
            Err(e) => (false, e),
        };
        failed += usize::from(!pass);
        println!("{} criterion {name}: {detail} [{secs:.1} s]", if pass { "PASS" } else { "FAIL" });
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

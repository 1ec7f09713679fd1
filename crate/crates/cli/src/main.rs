//! `dif`: batch front-end for differential imaging forensics.
//!
//! Exit status is 0 on success (including degenerate analyses, which are
//! flagged in the report), 1 for usage or configuration errors and 2 for
//! data or format errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use dif_core::color::Chroma;
use dif_core::diff::{amplify_split, analyze_pair, AmplifiedPair};
use dif_core::forgery::{forgery_score, ConsistencyParams, RegionSpec};
use dif_core::io::{
    read_any, read_mask, write_float_dump, write_image, write_mask, BitDepth, FrameManifest, ManifestSource, Report,
};
use dif_core::params::{DEFAULT_SIGMA, DEFAULT_TEMPORAL_WINDOW, DEFAULT_ZERO_FLOOR};
use dif_core::synth::{evaluate_recovery, generate_pair, generate_stream, SceneSpec};
use dif_core::video::{analyze_video_with, largest_rise, ReferenceSpec};
use dif_core::AnalysisParams;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(dif_core::Error),
}

impl From<dif_core::Error> for CliError {
    fn from(e: dif_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_config() => 1,
            CliError::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "dif", version, about = "Extract and amplify faint differences between a scene and its reference")]
struct Cli {
    /// Worker threads for the filtering stages (outputs do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analyze a scene image against a reference image.
    Diff(DiffArgs),
    /// Analyze a frame sequence against a temporal baseline.
    Video(VideoArgs),
    /// Score the color consistency of a suspect region.
    Forgery(ForgeryArgs),
    /// Generate a synthetic scene pair or frame stream with ground truth.
    Synth(SynthArgs),
    /// Score a recovered D+ image against a ground-truth mask.
    Eval(EvalArgs),
}

#[derive(Args, Debug, Clone)]
struct FilterArgs {
    /// Gaussian standard deviation in pixels (0 disables spatial filtering).
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    sigma: f64,
    /// Kernel half-width in pixels [default: ceil(3 * sigma)].
    #[arg(long)]
    radius: Option<usize>,
    /// Temporal box-filter length in frames (odd).
    #[arg(long, default_value_t = DEFAULT_TEMPORAL_WINDOW)]
    window: usize,
    /// Extremes at or below this magnitude leave a side degenerate.
    #[arg(long, default_value_t = DEFAULT_ZERO_FLOOR)]
    zero_floor: f64,
}

impl FilterArgs {
    fn params(&self) -> CliResult<AnalysisParams> {
        let params = AnalysisParams {
            sigma: self.sigma,
            truncation_radius: self.radius,
            temporal_window: self.window,
            zero_floor: self.zero_floor,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Args, Debug)]
struct DiffArgs {
    /// Image of interest.
    #[arg(long)]
    scene: PathBuf,
    /// Reference baseline image.
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    filter: FilterArgs,
    /// Bits per sample of the PNG outputs (8 or 16).
    #[arg(long, default_value_t = 8)]
    depth: u8,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("reference").required(true).args(["ref_range", "ref_image", "adjacent"])))]
struct VideoArgs {
    /// Frame manifest: one `index<TAB>path` line per frame.
    #[arg(long)]
    manifest: PathBuf,
    /// Average frames a:b (inclusive) into the reference.
    #[arg(long)]
    ref_range: Option<String>,
    /// Use a separate reference image.
    #[arg(long)]
    ref_image: Option<PathBuf>,
    /// Difference each frame against the one LAG positions earlier.
    #[arg(long, num_args = 0..=1, default_missing_value = "1")]
    adjacent: Option<usize>,
    /// Analyze frames a:b (inclusive) [default: all].
    #[arg(long)]
    analyze: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    filter: FilterArgs,
    #[arg(long, default_value_t = 8)]
    depth: u8,
    /// Also write lossless per-frame float dumps.
    #[arg(long)]
    dumps: bool,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("region").required(true).args(["rect", "mask"])))]
struct ForgeryArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Suspect region as x,y,w,h.
    #[arg(long)]
    rect: Option<String>,
    /// Suspect region as a mask image (nonzero = suspect).
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    filter: FilterArgs,
    /// Minimum normalized D'+ for a pixel to count as evidence.
    #[arg(long, default_value_t = 0.5)]
    evidence_threshold: f64,
    /// Chromaticity distance above which the region is inconsistent.
    #[arg(long, default_value_t = 0.15)]
    tau: f64,
    /// Minimum evidence fraction of the analyzed pixels.
    #[arg(long, default_value_t = 1e-4)]
    min_support: f64,
    #[arg(long, default_value_t = 8)]
    depth: u8,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Scene description (`key: value` lines).
    #[arg(long)]
    spec: PathBuf,
    /// Override the seed given in the scene description.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Generate a stream of this many frames instead of a pair.
    #[arg(long)]
    frames: Option<usize>,
    /// First stream frame carrying the evidence [default: frames / 2].
    #[arg(long)]
    entry: Option<usize>,
    #[arg(long, default_value_t = 16)]
    depth: u8,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Recovered D+ image (PNG/PGM/PPM or .difd).
    #[arg(long)]
    result: PathBuf,
    /// Ground-truth mask image.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Injected evidence color as r,g,b, for the chroma error.
    #[arg(long)]
    chroma: Option<String>,
    /// Directory for metrics.txt [default: print only].
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(text: &str, sep: char, n: usize, what: &str) -> CliResult<Vec<T>> {
    let parts: Vec<&str> = text.split(sep).map(str::trim).collect();
    let values: Option<Vec<T>> = parts.iter().map(|p| p.parse().ok()).collect();
    match values {
        Some(v) if v.len() == n => Ok(v),
        _ => Err(CliError::Usage(format!("cannot parse {what} from {text:?}"))),
    }
}

fn parse_range(text: &str, what: &str) -> CliResult<(i64, i64)> {
    let v: Vec<i64> = parse_list(text, ':', 2, what)?;
    Ok((v[0], v[1]))
}

fn depth(bits: u8) -> CliResult<BitDepth> {
    Ok(BitDepth::from_bits(bits)?)
}

fn prepare_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| {
        CliError::Core(dif_core::Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })
    })
}

fn push_params(report: &mut Report, params: &AnalysisParams) {
    report
        .push("sigma", params.sigma)
        .push("truncation_radius", params.radius())
        .push("temporal_window", params.temporal_window)
        .push("zero_floor", params.zero_floor);
}

fn fmt_argmax(at: Option<(usize, usize, usize)>) -> String {
    match at {
        Some((c, x, y)) => format!("{x},{y},{c}"),
        None => "none".into(),
    }
}

fn push_pair(report: &mut Report, pair: &AmplifiedPair) {
    report
        .push("gain_plus", pair.gain_plus)
        .push("gain_minus", pair.gain_minus)
        .push("degenerate_plus", pair.degenerate_plus)
        .push("degenerate_minus", pair.degenerate_minus)
        .push("argmax_plus", fmt_argmax(pair.argmax_plus()))
        .push("argmax_minus", fmt_argmax(pair.argmax_minus()))
        .push("d_minus_sign", "negative (D- stores magnitudes)");
}

fn write_pair(dir: &Path, stem_plus: &str, stem_minus: &str, pair: &AmplifiedPair, bits: BitDepth, dumps: bool) -> CliResult<()> {
    write_image(&pair.d_plus, dir.join(format!("{stem_plus}.png")), bits)?;
    write_image(&pair.d_minus, dir.join(format!("{stem_minus}.png")), bits)?;
    if dumps {
        write_float_dump(&pair.d_plus, dir.join(format!("{stem_plus}.difd")))?;
        write_float_dump(&pair.d_minus, dir.join(format!("{stem_minus}.difd")))?;
    }
    Ok(())
}

fn run_diff(args: &DiffArgs) -> CliResult<()> {
    let params = args.filter.params()?;
    let bits = depth(args.depth)?;
    let p = read_any(&args.scene)?;
    let p_r = read_any(&args.reference)?;
    let pair = analyze_pair(&p, &p_r, &params)?;
    prepare_out(&args.out)?;
    write_pair(&args.out, "D+", "D-", &pair, bits, true)?;

    let mut report = Report::new();
    let (w, h, c) = p.shape();
    report
        .push("command", "diff")
        .push("scene", args.scene.display())
        .push("reference", args.reference.display())
        .push("width", w)
        .push("height", h)
        .push("channels", c);
    push_params(&mut report, &params);
    push_pair(&mut report, &pair);
    report.write(args.out.join("report.txt"))?;
    Ok(())
}

fn run_video(args: &VideoArgs) -> CliResult<()> {
    let params = args.filter.params()?;
    let bits = depth(args.depth)?;
    let source = ManifestSource::open(FrameManifest::load(&args.manifest)?)?;
    let (reference, mode) = if let Some(r) = &args.ref_range {
        let (start, end) = parse_range(r, "reference range")?;
        (ReferenceSpec::FrameRangeAverage { start, end }, format!("frame-range-average {start}:{end}"))
    } else if let Some(path) = &args.ref_image {
        let img = read_any(path)?;
        if img.shape() != source.shape() {
            return Err(CliError::Core(dif_core::Error::Shape(format!(
                "reference image {} does not match the frame shape",
                path.display()
            ))));
        }
        (ReferenceSpec::ExternalImage(img), format!("external-image {}", path.display()))
    } else {
        let lag = args.adjacent.unwrap_or(1);
        (ReferenceSpec::AdjacentFrame { lag }, format!("adjacent-frame lag {lag}"))
    };
    let analyze = args.analyze.as_deref().map(|a| parse_range(a, "analysis range")).transpose()?;

    let frames_dir = args.out.join("frames");
    prepare_out(&frames_dir)?;
    let mut indices = Vec::new();
    let mut energy = Vec::new();
    let mut degenerate_plus = 0usize;
    let reference_used = analyze_video_with(&source, &reference, &params, analyze, |frame| {
        write_pair(
            &frames_dir,
            &format!("D+_{}", frame.index),
            &format!("D-_{}", frame.index),
            &frame.pair,
            bits,
            args.dumps,
        )
        .map_err(|e| match e {
            CliError::Core(e) => e,
            CliError::Usage(m) => dif_core::Error::Parameter(m),
        })?;
        degenerate_plus += usize::from(frame.pair.degenerate_plus);
        indices.push(frame.index);
        energy.push(frame.energy);
        Ok(())
    })?;

    let mut csv = String::from("frame_index,energy\n");
    for (i, e) in indices.iter().zip(&energy) {
        csv.push_str(&format!("{i},{e}\n"));
    }
    let csv_path = args.out.join("energy.csv");
    fs::write(&csv_path, csv).map_err(|e| dif_core::Error::Io { path: csv_path, source: e })?;
    if let Some(r) = &reference_used {
        write_float_dump(r, args.out.join("reference.difd"))?;
    }

    let mut report = Report::new();
    let (w, h, c) = source.shape();
    report
        .push("command", "video")
        .push("manifest", args.manifest.display())
        .push("reference_mode", mode)
        .push("width", w)
        .push("height", h)
        .push("channels", c)
        .push("frames_analyzed", indices.len())
        .push("first_frame", indices[0])
        .push("last_frame", indices[indices.len() - 1]);
    push_params(&mut report, &params);
    report
        .push(
            "change_point",
            largest_rise(&energy).map_or("none".to_string(), |i| indices[i].to_string()),
        )
        .push("degenerate_plus_frames", degenerate_plus)
        .push("d_minus_sign", "negative (D- stores magnitudes)");
    report.write(args.out.join("report.txt"))?;
    Ok(())
}

fn run_forgery(args: &ForgeryArgs) -> CliResult<()> {
    let params = args.filter.params()?;
    let bits = depth(args.depth)?;
    let consistency = ConsistencyParams {
        evidence_threshold: args.evidence_threshold,
        tau: args.tau,
        min_support: args.min_support,
    };
    consistency.validate()?;
    let region = match (&args.rect, &args.mask) {
        (Some(r), _) => {
            let v: Vec<usize> = parse_list(r, ',', 4, "rectangle")?;
            RegionSpec::Rect { x: v[0], y: v[1], w: v[2], h: v[3] }
        }
        (None, Some(m)) => RegionSpec::Mask(read_mask(m)?),
        (None, None) => return Err(CliError::Usage("a --rect or --mask region is required".into())),
    };
    let p = read_any(&args.scene)?;
    let p_r = read_any(&args.reference)?;
    let outcome = forgery_score(&p, &p_r, &region, &params, &consistency)?;
    prepare_out(&args.out)?;
    write_mask(&outcome.evidence_mask, args.out.join("evidence_mask.png"))?;
    write_image(&outcome.pair.d_plus, args.out.join("D+.png"), bits)?;
    write_float_dump(&outcome.pair.d_plus, args.out.join("D+.difd"))?;

    let r = &outcome.report;
    let chroma = |c: Option<Chroma>| c.map_or("none".to_string(), |c| format!("{},{}", c.r, c.g));
    let (bx, by, bw, bh) = outcome.split.bbox;
    let mut report = Report::new();
    report
        .push("command", "forgery")
        .push("scene", args.scene.display())
        .push("reference", args.reference.display())
        .push("region_bbox", format!("{bx},{by},{bw},{bh}"))
        .push("region_pixels", outcome.split.region.count());
    push_params(&mut report, &params);
    report
        .push("evidence_threshold", consistency.evidence_threshold)
        .push("tau", consistency.tau)
        .push("min_support", consistency.min_support)
        .push("degenerate_plus", outcome.pair.degenerate_plus)
        .push("gain_plus", outcome.pair.gain_plus)
        .push("evidence_chroma", chroma(r.evidence_chroma))
        .push("query_chroma", chroma(Some(r.query_chroma)))
        .push("chroma_distance", r.chroma_distance.map_or("none".to_string(), |d| d.to_string()))
        .push("evidence_mask_fraction", r.evidence_mask_fraction)
        .push("verdict", r.verdict);
    report.write(args.out.join("report.txt"))?;
    Ok(())
}

fn run_synth(args: &SynthArgs) -> CliResult<()> {
    let bits = depth(args.depth)?;
    let text = fs::read_to_string(&args.spec).map_err(|e| dif_core::Error::Io {
        path: args.spec.clone(),
        source: e,
    })?;
    let mut spec: SceneSpec = text.parse()?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    prepare_out(&args.out)?;
    fs::write(args.out.join("scene.cfg"), spec.to_string()).map_err(|e| dif_core::Error::Io {
        path: args.out.join("scene.cfg"),
        source: e,
    })?;

    let truth = match args.frames {
        None => {
            let scene = generate_pair(&spec)?;
            write_image(&scene.p, args.out.join("p.png"), bits)?;
            write_image(&scene.p_r, args.out.join("p_r.png"), bits)?;
            write_float_dump(&scene.p, args.out.join("p.difd"))?;
            write_float_dump(&scene.p_r, args.out.join("p_r.difd"))?;
            scene.truth
        }
        Some(frames) => {
            let entry = args.entry.unwrap_or(frames / 2);
            let synth = generate_stream(&spec, frames, entry)?;
            let dir = args.out.join("frames");
            prepare_out(&dir)?;
            let mut manifest = FrameManifest { entries: Vec::new(), fps: Some(30.0) };
            for frame in synth.stream.frames() {
                let name = format!("frame_{:05}.png", frame.index);
                write_image(&frame.image, dir.join(&name), bits)?;
                manifest.entries.push((frame.index, PathBuf::from("frames").join(name)));
            }
            let path = args.out.join("frames.tsv");
            fs::write(&path, manifest.to_string()).map_err(|e| dif_core::Error::Io { path, source: e })?;
            synth.truth
        }
    };
    for (k, mask) in truth.iter().enumerate() {
        write_mask(mask, args.out.join(format!("truth_{k}.png")))?;
    }
    write_mask(&spec.truth_union()?, args.out.join("truth.png"))?;
    Ok(())
}

fn run_eval(args: &EvalArgs) -> CliResult<()> {
    if !(args.threshold > 0.0 && args.threshold <= 1.0) {
        return Err(CliError::Usage(format!("threshold must lie in (0, 1], got {}", args.threshold)));
    }
    let d_plus = read_any(&args.result)?;
    if d_plus.samples().iter().any(|&v| v < 0.0) {
        return Err(CliError::Core(dif_core::Error::Data(
            "D+ images must be nonnegative".into(),
        )));
    }
    let truth = read_mask(&args.truth)?;
    // renormalizes to a unit maximum; an already normalized D+ is unchanged
    let pair = amplify_split(&d_plus, 0.0)?;
    let chroma = args
        .chroma
        .as_deref()
        .map(|c| parse_list::<f64>(c, ',', 3, "chroma").map(|v| Chroma::from_rgb(v[0], v[1], v[2])))
        .transpose()?;
    let metrics = evaluate_recovery(&pair, &truth, args.threshold, chroma)?;

    let mut report = Report::new();
    report
        .push("command", "eval")
        .push("result", args.result.display())
        .push("truth", args.truth.display())
        .push("threshold", args.threshold)
        .push("iou", metrics.iou)
        .push("argmax_hit", metrics.argmax_hit)
        .push("chroma_error", metrics.chroma_error.map_or("none".to_string(), |e| e.to_string()));
    print!("{report}");
    if let Some(dir) = &args.out {
        prepare_out(dir)?;
        report.write(dir.join("metrics.txt"))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Diff(a) => run_diff(a),
        Command::Video(a) => run_video(a),
        Command::Forgery(a) => run_forgery(a),
        Command::Synth(a) => run_synth(a),
        Command::Eval(a) => run_eval(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dif: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use annulus_scan::boundaries::boundary_segment;
use annulus_scan::masking::extract_plane;
use annulus_scan::metrics::{self, KeypointAnnotation, MetricsReport, Polygon2D};
use annulus_scan::params::{read_annotations, AnnotationRecord, SectorParamsFile, SCHEMA_VERSION};
use annulus_scan::raster::{decode_any_file, RgbImage};
use annulus_scan::resample::{footprint, invert, linearise, linearise_masked, LinearImage};
use annulus_scan::synth::{self, CorruptionSpec, GridCase, SectorSpec};
use annulus_scan::{extract_gray, AnnulusSector, AnyImage, Extraction, LineariseOptions, Point};
use anyhow::{anyhow, Context};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::*;
use crate::draw::{self, Canvas};
use crate::io::{image_id, read_text, write_json, write_png};

/// How a command ended when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Partial,
}

#[derive(Debug)]
pub enum Failure {
    /// Bad arguments, missing inputs or unreadable configuration (exit 1).
    Usage(anyhow::Error),
    /// The inputs were read but could not be processed (exit 2).
    Processing(anyhow::Error),
}

type CmdResult = Result<Outcome, Failure>;

trait FailureExt<T> {
    fn usage(self) -> Result<T, Failure>;
    fn processing(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> FailureExt<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
    fn processing(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Processing(e.into()))
    }
}

pub fn dispatch(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Extract(a) => extract(a),
        Command::Linearise(a) => linearise_cmd(a),
        Command::Invert(a) => invert_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Synth(a) => synth_cmd(a),
        Command::Overlay(a) => overlay(a),
    }
}

fn config(p: &PipelineArgs) -> Result<RunConfig, Failure> {
    p.validate().map_err(|m| Failure::Usage(anyhow!(m)))
}

fn require_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(anyhow!("input not found: {}", path.display())))
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .usage()
}

fn ensure_parent(path: &Path) -> Result<(), Failure> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => ensure_dir(p),
        _ => Ok(()),
    }
}

fn read_params(path: &Path) -> Result<SectorParamsFile, Failure> {
    require_file(path)?;
    let text = read_text(path).usage()?;
    SectorParamsFile::from_json(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .usage()
}

fn options(cfg: &RunConfig) -> LineariseOptions {
    LineariseOptions {
        interp: cfg.interp,
        downsample: cfg.downsample,
    }
}

#[derive(Serialize)]
struct ErrorRecord {
    code: String,
    message: String,
}

#[derive(Serialize)]
struct ImageRecord {
    image_id: String,
    input: String,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorRecord>,
}

#[derive(Serialize)]
struct Summary {
    schema_version: u32,
    config: annulus_scan::params::ConfigEcho,
    succeeded: usize,
    failed: usize,
    images: Vec<ImageRecord>,
}

fn extract(args: ExtractArgs) -> CmdResult {
    let cfg = config(&args.pipeline)?;
    for p in &args.inputs {
        require_file(p)?;
    }
    let ids: Vec<String> = args.inputs.iter().map(|p| image_id(p)).collect();
    let mut seen = BTreeSet::new();
    for id in &ids {
        if !seen.insert(id) {
            return Err(Failure::Usage(anyhow!("two inputs share the image id '{id}'")));
        }
    }
    ensure_dir(&args.out_dir)?;

    let records: Vec<ImageRecord> = args
        .inputs
        .par_iter()
        .zip(ids.par_iter())
        .map(|(path, id)| {
            let result = extract_one(path, id, &cfg, &args);
            let (status, output, error) = match result {
                Ok(out) => ("ok", Some(out.display().to_string()), None),
                Err((code, message)) => ("error", None, Some(ErrorRecord { code, message })),
            };
            ImageRecord {
                image_id: id.clone(),
                input: path.display().to_string(),
                status,
                output,
                error,
            }
        })
        .collect();

    let failed = records.iter().filter(|r| r.error.is_some()).count();
    for r in records.iter().filter(|r| r.error.is_some()) {
        let e = r.error.as_ref().expect("filtered");
        eprintln!("{}: {} ({})", r.input, e.code, e.message);
    }
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        config: cfg.echo(),
        succeeded: records.len() - failed,
        failed,
        images: records,
    };
    write_json(&args.out_dir.join("summary.json"), &summary).processing()?;
    Ok(if failed == 0 { Outcome::Ok } else { Outcome::Partial })
}

fn extract_one(path: &Path, id: &str, cfg: &RunConfig, args: &ExtractArgs) -> Result<PathBuf, (String, String)> {
    let lib = |e: annulus_scan::Error| (e.code().to_string(), e.to_string());
    let io = |e: anyhow::Error| ("IoFailure".to_string(), format!("{e:#}"));
    let img = decode_any_file(path).map_err(lib)?;
    let ex = extract_gray(&img.to_gray(), &cfg.extract).map_err(lib)?;
    let out = args.out_dir.join(format!("{id}.json"));
    write_json(&out, &SectorParamsFile::new(id, &ex.sector, cfg.echo())).map_err(io)?;
    if args.save_mask {
        write_png(&args.out_dir.join(format!("{id}.mask.png")), &ex.plane.to_gray()).map_err(io)?;
    }
    if args.save_symmetry_plot {
        write_png(&args.out_dir.join(format!("{id}.symmetry.png")), &symmetry_plot(&ex)).map_err(io)?;
    }
    Ok(out)
}

/// Column accumulation profile with the axis estimates marked.
fn symmetry_plot(ex: &Extraction) -> RgbImage {
    const H: usize = 200;
    let w = ex.plane.width();
    let mut canvas = Canvas::new(RgbImage::from_raw(H, w, vec![0; H * w * 3]).expect("non-empty plot"));
    let s = &ex.symmetry;
    if let Some(profile) = &s.profile {
        let v = &profile.values;
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = (hi - lo).max(1e-12);
        let pts: Vec<Point> = v
            .iter()
            .enumerate()
            .map(|(c, &y)| Point::new(10.0 + (hi - y) / span * (H as f64 - 20.0), c as f64))
            .collect();
        canvas.polyline(&pts, draw::WHITE);
        for (col, color) in [
            (s.min_l as f64, draw::RED),
            (s.min_r as f64, draw::RED),
            (s.m_hat, draw::BLUE),
        ] {
            canvas.line(Point::new(0.0, col), Point::new(H as f64 - 1.0, col), color);
        }
    }
    canvas.line(Point::new(0.0, s.m), Point::new(H as f64 - 1.0, s.m), draw::GREEN);
    canvas.img
}

fn load_image(path: &Path) -> Result<AnyImage, Failure> {
    require_file(path)?;
    decode_any_file(path).processing()
}

fn linearise_cmd(args: LineariseArgs) -> CmdResult {
    let cfg = config(&args.pipeline)?;
    let img = load_image(&args.input)?;
    let sector = match &args.params {
        Some(p) => read_params(p)?.sector(),
        None => extract_gray(&img.to_gray(), &cfg.extract).processing()?.sector,
    };
    let lin = if args.no_mask {
        linearise(&img, &sector, &options(&cfg)).processing()?
    } else {
        let plane = extract_plane(&img.to_gray(), cfg.extract.closing).processing()?.plane;
        linearise_masked(&img, &sector, &plane, &options(&cfg)).processing()?
    };
    ensure_parent(&args.out)?;
    write_png(&args.out, &lin).processing()?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct RoundTripReport {
    image_id: String,
    roundtrip_mse: f64,
    footprint_pixels: usize,
}

fn invert_cmd(args: InvertArgs) -> CmdResult {
    let cfg = config(&args.pipeline)?;
    let params = read_params(&args.params)?;
    let lin_img = load_image(&args.input)?;
    if let Some(reference) = &args.reference {
        require_file(reference)?;
    }
    let lin = LinearImage::from_raster(&lin_img, params.sector());
    let out = invert(&lin, params.source_dims, cfg.interp);
    ensure_parent(&args.out)?;
    write_png(&args.out, &out).processing()?;
    if let Some(reference) = &args.reference {
        let original = load_image(reference)?.to_gray();
        let fp = footprint(&params.sector());
        let report = RoundTripReport {
            image_id: params.image_id.clone(),
            roundtrip_mse: metrics::roundtrip_mse(&original, &out.to_gray(), &fp).processing()?,
            footprint_pixels: fp.count(),
        };
        match &args.report {
            Some(path) => {
                ensure_parent(path)?;
                write_json(path, &report).processing()?;
            }
            None => println!("{}", serde_json::to_string_pretty(&report).expect("report serialises")),
        }
    }
    Ok(Outcome::Ok)
}

/// Annotations from a JSON file or from every parameter file in a directory.
fn load_annotations(path: &Path) -> Result<Vec<AnnotationRecord>, Failure> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .usage()?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        let records: Vec<AnnotationRecord> = files
            .iter()
            .filter_map(|f| std::fs::read_to_string(f).ok())
            .filter_map(|t| SectorParamsFile::from_json(&t).ok())
            .map(|p| AnnotationRecord::from(&p))
            .collect();
        if records.is_empty() {
            return Err(Failure::Usage(anyhow!("no parameter files in {}", path.display())));
        }
        return Ok(records);
    }
    require_file(path)?;
    read_annotations(&read_text(path).usage()?)
        .with_context(|| format!("parsing {}", path.display()))
        .usage()
}

fn load_polygon(path: &Path) -> Result<Polygon2D, Failure> {
    require_file(path)?;
    let points: Vec<Point> = serde_json::from_str(&read_text(path).usage()?)
        .with_context(|| format!("parsing {}", path.display()))
        .usage()?;
    Ok(Polygon2D::new(points))
}

fn evaluate(args: EvaluateArgs) -> CmdResult {
    let pred = load_annotations(&args.pred)?;
    let gt = load_annotations(&args.gt)?;
    let as_kp = |v: &[AnnotationRecord]| -> Vec<KeypointAnnotation> {
        v.iter()
            .map(|a| KeypointAnnotation {
                image_id: a.image_id.clone(),
                keypoints: a.keypoints,
            })
            .collect()
    };
    let per_keypoint_mse = metrics::keypoint_mse(&as_kp(&gt), &as_kp(&pred)).usage()?;
    // pair angles through the same id matching as the key points
    let theta_of = |v: &[AnnotationRecord], id: &str| v.iter().find(|a| a.image_id == id).map(|a| a.theta_deg);
    let gt_theta: Vec<f64> = gt.iter().map(|a| a.theta_deg).collect();
    let pred_theta: Vec<f64> = gt
        .iter()
        .map(|a| theta_of(&pred, &a.image_id).ok_or_else(|| anyhow!("no prediction for {}", a.image_id)))
        .collect::<anyhow::Result<_>>()
        .usage()?;
    let mut report = MetricsReport {
        image_count: gt.len(),
        per_keypoint_mse,
        maad_deg: Some(metrics::maad(&gt_theta, &pred_theta).usage()?),
        ..Default::default()
    };
    if let Some(paths) = &args.polygons {
        let (a, b) = (load_polygon(&paths[0])?, load_polygon(&paths[1])?);
        report.circularity_pair = Some((
            metrics::circularity(&a).processing()?,
            metrics::circularity(&b).processing()?,
        ));
        report.procrustes_disparity = Some(metrics::procrustes_disparity(&a, &b).processing()?);
    }
    if let Some(paths) = &args.ssim {
        let a = load_image(&paths[0])?.to_gray();
        let b = load_image(&paths[1])?.to_gray();
        report.ms_ssim = Some(metrics::ms_ssim(&a, &b).processing()?);
    }
    ensure_parent(&args.out)?;
    write_json(&args.out, &report).processing()?;
    Ok(Outcome::Ok)
}

fn truth_file(id: &str, truth: &AnnulusSector) -> SectorParamsFile {
    let defaults = RunConfig {
        extract: Default::default(),
        interp: Default::default(),
        downsample: 1.0,
    };
    SectorParamsFile::new(id, truth, defaults.echo())
}

fn synth_cmd(args: SynthArgs) -> CmdResult {
    if let Some(SynthMode::Grid(grid)) = args.mode {
        return synth_grid(grid);
    }
    let (spec_path, out, truth_path) = match (&args.spec, &args.out, &args.truth) {
        (Some(s), Some(o), Some(t)) => (s, o, t),
        _ => return Err(Failure::Usage(anyhow!("synth needs --spec, --out and --truth"))),
    };
    require_file(spec_path)?;
    let spec: SectorSpec = serde_json::from_str(&read_text(spec_path).usage()?)
        .with_context(|| format!("parsing {}", spec_path.display()))
        .usage()?;
    let corruption: Option<CorruptionSpec> = match &args.corruption {
        Some(p) => {
            require_file(p)?;
            Some(
                serde_json::from_str(&read_text(p).usage()?)
                    .with_context(|| format!("parsing {}", p.display()))
                    .usage()?,
            )
        }
        None => None,
    };
    let case = GridCase {
        id: image_id(out),
        spec,
        corruption,
        seed: args.seed,
    };
    let (img, truth) = case.render().usage()?;
    ensure_parent(out)?;
    ensure_parent(truth_path)?;
    write_png(out, &img).processing()?;
    write_json(truth_path, &truth_file(&case.id, &truth)).processing()?;
    Ok(Outcome::Ok)
}

fn synth_grid(args: GridArgs) -> CmdResult {
    let cases: Vec<GridCase> = match args.set {
        GridSet::Clean => synth::clean_grid(),
        GridSet::Corrupted => synth::corrupted_grid(),
        GridSet::All => synth::clean_grid().into_iter().chain(synth::corrupted_grid()).collect(),
    };
    let truth_dir = args.out.join("truth");
    ensure_dir(&truth_dir)?;
    cases
        .par_iter()
        .map(|case| -> anyhow::Result<()> {
            let (img, truth) = case.render()?;
            write_png(&args.out.join(format!("{}.png", case.id)), &img)?;
            write_json(
                &truth_dir.join(format!("{}.json", case.id)),
                &truth_file(&case.id, &truth),
            )?;
            Ok(())
        })
        .collect::<anyhow::Result<Vec<()>>>()
        .processing()?;
    write_json(&args.out.join("grid.json"), &cases).processing()?;
    Ok(Outcome::Ok)
}

fn overlay(args: OverlayArgs) -> CmdResult {
    let cfg = config(&args.pipeline)?;
    let img = load_image(&args.input)?;
    let ex = extract_gray(&img.to_gray(), &cfg.extract).processing()?;
    let base = match &img {
        AnyImage::Rgb(c) => c.clone(),
        AnyImage::Gray(g) => RgbImage::from_gray(g),
    };
    let mut canvas = Canvas::new(base);
    let plane = &ex.plane;
    let (h, w) = (plane.height(), plane.width());
    for r in 0..h {
        for c in 0..w {
            if !plane.get(r, c) {
                continue;
            }
            let border = r == 0
                || c == 0
                || r + 1 == h
                || c + 1 == w
                || !plane.get(r - 1, c)
                || !plane.get(r + 1, c)
                || !plane.get(r, c - 1)
                || !plane.get(r, c + 1);
            if border {
                canvas.put(r as i64, c as i64, draw::GREEN);
            }
        }
    }
    let b = &ex.boundaries;
    for p in b.left.points.iter().chain(&b.right.points) {
        canvas.dot(*p, draw::PURPLE);
    }
    for (fit, edges) in [(&b.fit_left, &b.left), (&b.fit_right, &b.right)] {
        if let Ok(seg) = boundary_segment(fit, edges) {
            canvas.line(seg.top, seg.bottom, draw::BLUE);
        }
    }
    let s = &ex.sector;
    let kp = &s.keypoints;
    canvas.line(s.origin, kp.legs_l_bottom, draw::YELLOW);
    canvas.line(s.origin, kp.legs_r_bottom, draw::YELLOW);
    for p in kp.as_array() {
        canvas.cross(p, 4, draw::ORANGE);
    }
    ensure_parent(&args.out)?;
    write_png(&args.out, &canvas.img).processing()?;
    Ok(Outcome::Ok)
}

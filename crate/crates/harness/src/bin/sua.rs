use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sua_core::{io, DomainRole, Error, ImageFormat, RunConfig};
use sua_harness::error::{AtStage, Stage, StageResult};
use sua_harness::{
    evaluate, load_dataset, load_run, persist_translation, run_benchmark, run_pipeline, save_dataset,
    synth_generate, train_segmenter, translate, workflow, SegmenterParams,
};
use sua_render::{train_renderer, training_pairs, write_loss_log, RendererParams};
use sua_structex::extract;

#[derive(Parser)]
#[command(name = "sua", version, about = "Structure-unbiased cross-domain translation toolkit")]
struct Cli {
    /// Run configuration JSON; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (defaults to `paths.out` of the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic two-domain benchmark.
    Synth,
    /// Potts clustering, edge sketch and composed structure of one image.
    Potts {
        #[arg(long)]
        input: PathBuf,
    },
    /// Diffeomorphic registration of a source image onto a target image.
    Register {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
    },
    /// Train the structure-to-image renderer on a target dataset.
    TrainRender {
        #[arg(long)]
        target: PathBuf,
    },
    /// Train the segmenter on a labeled target dataset.
    TrainSeg {
        #[arg(long)]
        target: PathBuf,
    },
    /// Translate a source dataset into the target domain.
    Translate {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        renderer: PathBuf,
    },
    /// Full pipeline. Without dataset and model paths, runs the synthetic
    /// benchmark end to end.
    Pipeline {
        #[arg(long, requires_all = ["target", "renderer", "segmenter"])]
        source: Option<PathBuf>,
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long)]
        renderer: Option<PathBuf>,
        #[arg(long)]
        segmenter: Option<PathBuf>,
    },
    /// Evaluate a persisted pipeline run.
    Eval {
        #[arg(long)]
        run: PathBuf,
        /// Labeled source dataset (defaults to `<run>/../source`).
        #[arg(long)]
        source: Option<PathBuf>,
        /// Target dataset (defaults to `<run>/../target`).
        #[arg(long)]
        target: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> StageResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e)).at(Stage::Config)?;
            RunConfig::from_json(&text).at(Stage::Config)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.reseed(seed);
    }
    if let Some(out) = &cli.out {
        cfg.paths.out = out.clone();
    }
    cfg.validate().at(Stage::Config)?;
    Ok(cfg)
}

fn ensure_dir(dir: &Path) -> StageResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)).at(Stage::Output)
}

fn write_json(path: &Path, value: &serde_json::Value) -> StageResult<()> {
    std::fs::write(path, serde_json::to_string_pretty(value).expect("json serializes"))
        .map_err(|e| Error::io(path, e))
        .at(Stage::Output)
}

fn sibling(run: &Path, name: &str) -> PathBuf {
    run.parent().unwrap_or(Path::new(".")).join(name)
}

fn run(cli: &Cli) -> StageResult<()> {
    let cfg = load_config(cli)?;
    let out = cfg.paths.out.clone();
    ensure_dir(&out)?;
    match &cli.command {
        Command::Synth => {
            let data = synth_generate(&cfg.synth).at(Stage::Synth)?;
            save_dataset(&data.source, &out.join("source")).at(Stage::Output)?;
            save_dataset(&data.target, &out.join("target")).at(Stage::Output)?;
            let oracle = out.join("oracle");
            ensure_dir(&oracle)?;
            for (i, w) in data.oracle.warps.iter().enumerate() {
                io::save_field(w, oracle.join(format!("warp_{i}.suat"))).at(Stage::Output)?;
            }
            write_json(
                &oracle.join("intensity_map.json"),
                &serde_json::json!({ "intensity_map": data.oracle.intensity_map }),
            )?;
        }
        Command::Potts { input } => {
            let img = io::load_image(input).at(Stage::Data)?;
            let s = extract(&img, &cfg.potts, cfg.pipeline.structure_sigma).at(Stage::Potts)?;
            io::save_image(&s.sketch.to_image(), out.join("sketch.png"), ImageFormat::Png).at(Stage::Output)?;
            io::save_mask(&sua_core::SegMask::from_binary(&s.mask), out.join("structure_mask.suat"))
                .at(Stage::Output)?;
            let mask_img = sua_core::Image::from_fn(img.height(), img.width(), |y, x| f64::from(u8::from(s.mask[[y, x]])));
            io::save_image(&mask_img, out.join("structure_mask.png"), ImageFormat::Png).at(Stage::Output)?;
            io::save_image(&s.composed.image, out.join("composed.png"), ImageFormat::Png).at(Stage::Output)?;
            io::save_image(&s.composed.image, out.join("composed.suat"), ImageFormat::Raw).at(Stage::Output)?;
        }
        Command::Register { src, tgt } => {
            let a = io::load_image(src).at(Stage::Data)?;
            let b = io::load_image(tgt).at(Stage::Data)?;
            let pair = sua_spatx::register(&a, &b, &cfg.admm).at(Stage::Register)?;
            pair.save(out.join("phi_0.suat"), out.join("phi_inv_0.suat"), out.join("phi_0.json"), Some(&cfg.admm))
                .at(Stage::Output)?;
            let warped = sua_spatx::warp(&a, &pair.forward).at(Stage::Warp)?;
            io::save_image(&warped, out.join("warped_0.png"), ImageFormat::Png).at(Stage::Output)?;
            field_plots(&pair.forward, &out)?;
        }
        Command::TrainRender { target } => {
            let tgt = load_dataset(target, DomainRole::Target).at(Stage::Data)?;
            let pairs = training_pairs(&tgt, &cfg.potts).at(Stage::Potts)?;
            let trained = train_renderer(&pairs, &cfg.render).at(Stage::TrainRender)?;
            trained.params.save(out.join("renderer.suaa")).at(Stage::Output)?;
            write_loss_log(&trained.log, out.join("loss.csv")).at(Stage::Output)?;
        }
        Command::TrainSeg { target } => {
            let tgt = load_dataset(target, DomainRole::Target).at(Stage::Data)?;
            let trained = train_segmenter(&tgt, &cfg.segmenter).at(Stage::TrainSegmenter)?;
            trained.params.save(out.join("segmenter.suaa")).at(Stage::Output)?;
            write_json(
                &out.join("segmenter.json"),
                &serde_json::json!({ "train_dice": trained.train_dice, "loss": trained.loss_log }),
            )?;
        }
        Command::Translate { source, target, renderer } => {
            let src = load_dataset(source, DomainRole::Source).at(Stage::Data)?;
            let tgt = load_dataset(target, DomainRole::Target).at(Stage::Data)?;
            let r = RendererParams::load(renderer).at(Stage::Data)?;
            for t in translate(&src, &tgt, &r, &cfg)? {
                persist_translation(&t, &out, &cfg).at_image(Stage::Output, t.index)?;
            }
        }
        Command::Pipeline { source: None, .. } => {
            let b = run_benchmark(&cfg, Some(&out))?;
            println!("{}", b.evaluation.report.to_json());
        }
        Command::Pipeline { source: Some(source), target, renderer, segmenter } => {
            let (Some(target), Some(renderer), Some(segmenter)) = (target, renderer, segmenter) else {
                unreachable!("clap enforces the path group")
            };
            let src = load_dataset(source, DomainRole::Source).at(Stage::Data)?;
            let tgt = load_dataset(target, DomainRole::Target).at(Stage::Data)?;
            let r = RendererParams::load(renderer).at(Stage::Data)?;
            let s = SegmenterParams::load(segmenter).at(Stage::Data)?;
            let run = run_pipeline(&src, &tgt, &r, &s, &cfg, Some(&out))?;
            if src.is_labeled() {
                let ev = evaluate(&run, &src, &tgt, cfg.pipeline.histogram_bins)?;
                ev.report.save(out.join("report.json")).at(Stage::Output)?;
                println!("{}", ev.report.to_json());
            }
        }
        Command::Eval { run, source, target } => {
            let src_dir = source.clone().unwrap_or_else(|| sibling(run, "source"));
            let tgt_dir = target.clone().unwrap_or_else(|| sibling(run, "target"));
            let src = load_dataset(&src_dir, DomainRole::Source).at(Stage::Data)?;
            let tgt = load_dataset(&tgt_dir, DomainRole::Target).at(Stage::Data)?;
            let classes = src.masks().at(Stage::Evaluate)?.first().map_or(2, |m| m.classes());
            let loaded = load_run(run, src.len(), classes, cfg.pipeline.pairing).at(Stage::Data)?;
            let ev = evaluate(&loaded, &src, &tgt, cfg.pipeline.histogram_bins)?;
            ev.report.save(out.join("report.json")).at(Stage::Output)?;
            let text = serde_json::to_value(&ev).expect("evaluation serializes");
            write_json(&out.join("evaluation.json"), &text)?;
            workflow::write_plots(&src, &tgt, &loaded, cfg.pipeline.histogram_bins, &out).at(Stage::Output)?;
            println!("{}", ev.report.to_json());
        }
    }
    Ok(())
}

fn field_plots(field: &sua_core::VectorField, out: &Path) -> StageResult<()> {
    sua_harness::plots::deformation_grid(field, 4, 4, &out.join("deformation_grid.png")).at(Stage::Output)?;
    sua_harness::plots::jacobian_heatmap(field, 4, &out.join("jacobian.png")).at(Stage::Output)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error {e}");
            ExitCode::FAILURE
        }
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context as _, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use hybridnet::circuit::{
    generate_synthetic, netlist_to_json, parse_label_grid, parse_netlist, parse_placement,
    placement_to_json, rudy_label_grid, suggested_die_side, GridSpec,
};
use hybridnet::data::{Design, Sample};
use hybridnet::metrics::evaluate;
use hybridnet::model::{predict as run_model, HybridNetConfig, HybridNetParams, Mode};
use hybridnet::train::{train as fit, TrainConfig};

use crate::manifest::RunManifest;
use crate::pgm::to_pgm;
use crate::{EvalArgs, GenArgs, PredictArgs, SetArg, TrainArgs};

/// Utilization the default die size aims for.
const DEFAULT_UTILIZATION: f64 = 0.7;
const TILES_PER_SIDE: f64 = 32.0;
const CHECKPOINT: &str = "model.json";
const RUN_CONFIG: &str = "config.json";

pub(crate) struct Context {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub argv: Vec<String>,
}

/// Design names of the training and test partitions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Everything needed to rebuild a trained model's inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct RunConfig {
    pub mode: Mode,
    pub clique_cap: usize,
    pub model: HybridNetConfig,
    pub train: TrainConfig,
    pub train_designs: Vec<String>,
}

fn design_dir(data: &Path, name: &str) -> PathBuf {
    data.join("designs").join(name)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<String> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path.display().to_string())
}

pub fn load_split(data: &Path) -> Result<Split> {
    let path = data.join("split.json");
    serde_json::from_str(&read(&path)?).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_design(data: &Path, name: &str) -> Result<Design> {
    let dir = design_dir(data, name);
    let netlist = parse_netlist(&read(&dir.join("netlist.json"))?)
        .with_context(|| format!("design {name}"))?;
    let placement = parse_placement(&read(&dir.join("placement.json"))?, &netlist)
        .with_context(|| format!("design {name}"))?;
    let labels = parse_label_grid(&read(&dir.join("labels.grid"))?)
        .with_context(|| format!("design {name}"))?;
    Ok(Design {
        name: name.to_string(),
        netlist,
        placement,
        labels,
    })
}

/// Loads designs and featurizes them in parallel; output order follows `names`.
fn load_samples(
    data: &Path,
    names: &[String],
    clique_cap: usize,
    config: &HybridNetConfig,
) -> Result<Vec<Sample<f32>>> {
    names
        .par_iter()
        .map(|name| {
            let design = load_design(data, name)?;
            Sample::from_design(&design, clique_cap, config)
                .with_context(|| format!("featurizing design {name}"))
        })
        .collect()
}

fn finish(
    ctx: &Context,
    command: &str,
    flags: &impl Serialize,
    inputs: Vec<String>,
    outputs: Vec<String>,
    started: Instant,
) -> Result<()> {
    let m = RunManifest {
        command: command.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: ctx.seed,
        flags: serde_json::to_value(flags)?,
        inputs,
        outputs,
        argv: ctx.argv.clone(),
        duration_secs: started.elapsed().as_secs_f64(),
    };
    m.write(&ctx.out_dir.join(format!("manifest.{command}.json")))
}

/// Per-design generator seed; distinct designs get well-separated streams.
fn design_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index as u64)
}

pub(crate) fn gen(ctx: &Context, a: &GenArgs) -> Result<()> {
    let started = Instant::now();
    ensure!(a.designs >= 1, "--designs must be at least 1");
    ensure!(
        a.split <= a.designs,
        "--split {} exceeds --designs {}",
        a.split,
        a.designs
    );
    let die = a
        .die
        .unwrap_or_else(|| suggested_die_side(a.cells, DEFAULT_UTILIZATION));
    let tile = a.tile.unwrap_or(die / TILES_PER_SIDE);
    let mut outputs = Vec::new();
    let mut names = Vec::new();
    for i in 0..a.designs {
        let name = format!("d{i:02}");
        let (mut netlist, placement) =
            generate_synthetic(design_seed(ctx.seed, i), a.cells, a.rent_p, die)
                .with_context(|| format!("generating design {name}"))?;
        netlist.name = name.clone();
        let grid = GridSpec::with_tile(&placement.die, tile, tile)?;
        let labels = rudy_label_grid(&netlist, &placement, &grid);
        let dir = design_dir(&ctx.out_dir, &name);
        outputs.push(write(&dir.join("netlist.json"), netlist_to_json(&netlist))?);
        outputs.push(write(
            &dir.join("placement.json"),
            placement_to_json(&placement, &netlist),
        )?);
        outputs.push(write(&dir.join("labels.grid"), labels.to_text())?);
        names.push(name);
    }
    let split = Split {
        train: names[..a.split].to_vec(),
        test: names[a.split..].to_vec(),
    };
    outputs.push(write(
        &ctx.out_dir.join("split.json"),
        serde_json::to_string_pretty(&split)? + "\n",
    )?);
    println!(
        "generated {} designs of {} cells (die {die}, tile {tile}) in {}",
        a.designs,
        a.cells,
        ctx.out_dir.display()
    );
    finish(ctx, "gen", a, Vec::new(), outputs, started)
}

pub(crate) fn train(ctx: &Context, a: &TrainArgs) -> Result<()> {
    let started = Instant::now();
    let split = load_split(&a.data.data)?;
    ensure!(
        !split.train.is_empty(),
        "split.json lists no training designs"
    );
    let first = load_design(&a.data.data, &split.train[0])?;
    let model = HybridNetConfig {
        layers: a.layers,
        hidden: a.hidden,
        heads: a.heads,
        rbf_k: a.rbf_k,
        cutoff: a.cutoff_tiles * first.labels.grid.tile_w,
        fourier_bands: a.fourier_bands,
        pe_fourier: !a.raw_coords,
        out_width: a.out_width,
        ..HybridNetConfig::default()
    };
    model.validate()?;
    let tcfg = TrainConfig {
        epochs: a.epochs,
        lr: a.lr,
        weight_decay: a.weight_decay,
        seed: ctx.seed,
        grad_clip_norm: a.grad_clip,
        log_every: a.log_every,
        ..TrainConfig::default()
    };
    tcfg.validate()?;
    let mode: Mode = a.mode.into();
    let samples = load_samples(&a.data.data, &split.train, a.data.clique_cap, &model)?;

    fs::create_dir_all(&ctx.out_dir)
        .with_context(|| format!("creating {}", ctx.out_dir.display()))?;
    let ckpt = ctx.out_dir.join(CHECKPOINT);
    let mut params = HybridNetParams::<f32>::init(&model, ctx.seed)?;
    let curve = fit(&mut params, &samples, mode, &tcfg, |r, p| {
        if a.print_every > 0 && (r.epoch % a.print_every == 0 || r.epoch == 1) {
            println!("epoch {:>4}  loss {:.6}", r.epoch, r.mean_loss);
        }
        if r.checkpoint {
            p.save(&ckpt)?;
        }
        Ok(())
    })?;

    let mut loss_csv = String::from("epoch,loss\n");
    for (i, l) in curve.iter().enumerate() {
        loss_csv.push_str(&format!("{},{l}\n", i + 1));
    }
    let run = RunConfig {
        mode,
        clique_cap: a.data.clique_cap,
        model,
        train: tcfg,
        train_designs: split.train.clone(),
    };
    let outputs = vec![
        ckpt.display().to_string(),
        ctx.out_dir.join("model.bin").display().to_string(),
        write(
            &ctx.out_dir.join(RUN_CONFIG),
            serde_json::to_string_pretty(&run)? + "\n",
        )?,
        write(&ctx.out_dir.join("loss.csv"), loss_csv)?,
    ];
    let inputs = split
        .train
        .iter()
        .map(|n| design_dir(&a.data.data, n).display().to_string())
        .collect();
    println!(
        "trained {mode} model for {} epochs; final loss {:.6}",
        a.epochs,
        curve.last().copied().unwrap_or(f64::NAN)
    );
    finish(ctx, "train", a, inputs, outputs, started)
}

fn load_run(run: &Path) -> Result<(RunConfig, HybridNetParams<f32>)> {
    let path = run.join(RUN_CONFIG);
    let cfg: RunConfig = serde_json::from_str(&read(&path)?)
        .with_context(|| format!("parsing {}", path.display()))?;
    let ckpt = run.join(CHECKPOINT);
    if !ckpt.exists() {
        bail!("checkpoint {} not found", ckpt.display());
    }
    let params = HybridNetParams::load(&cfg.model, &ckpt)
        .with_context(|| format!("loading {}", ckpt.display()))?;
    Ok((cfg, params))
}

pub(crate) fn eval(ctx: &Context, a: &EvalArgs) -> Result<()> {
    let started = Instant::now();
    let (cfg, params) = load_run(&a.run)?;
    let split = load_split(&a.data)?;
    let names = match a.set {
        SetArg::Train => split.train.clone(),
        SetArg::Test => split.test.clone(),
        SetArg::All => split.train.iter().chain(&split.test).cloned().collect(),
    };
    ensure!(!names.is_empty(), "no designs in the selected set");
    let samples = load_samples(&a.data, &names, cfg.clique_cap, &cfg.model)?;
    let report = evaluate(&params, &samples, cfg.mode)?;
    print!("{}", report.to_table(a.per_design));
    let out = write(&ctx.out_dir.join("report.json"), report.to_json())?;
    let inputs = vec![a.run.join(CHECKPOINT).display().to_string()];
    finish(ctx, "eval", a, inputs, vec![out], started)
}

pub(crate) fn predict(ctx: &Context, a: &PredictArgs) -> Result<()> {
    let started = Instant::now();
    let (cfg, params) = load_run(&a.run)?;
    let name = match &a.design {
        Some(n) => n.clone(),
        None => {
            let split = load_split(&a.data)?;
            split
                .test
                .first()
                .or(split.train.first())
                .cloned()
                .context("split.json lists no designs")?
        }
    };
    let design = load_design(&a.data, &name)?;
    let sample: Sample<f32> = Sample::from_design(&design, cfg.clique_cap, &cfg.model)?;
    let pred: Vec<f64> = run_model(&params, &sample.graph, cfg.mode)?
        .iter()
        .map(|&v| v as f64)
        .collect();

    let mut csv = String::from("cell,x,y,target,pred\n");
    let grid = design.labels.grid;
    let mut sum = vec![0.0; grid.len()];
    let mut count = vec![0usize; grid.len()];
    for (i, cell) in design.netlist.cells.iter().enumerate() {
        let (x, y) = design.placement.cell_center(cell);
        csv.push_str(&format!(
            "{},{x},{y},{},{}\n",
            cell.name, sample.raw_target[i], pred[i]
        ));
        if let Some((ix, iy)) = grid.tile_of(x, y) {
            sum[iy * grid.nx + ix] += pred[i];
            count[iy * grid.nx + ix] += 1;
        }
    }
    let filled_min = sum
        .iter()
        .zip(&count)
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| s / c as f64)
        .fold(f64::INFINITY, f64::min);
    let tile_pred: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { filled_min })
        .collect();
    let outputs = vec![
        write(&ctx.out_dir.join("pred.csv"), csv)?,
        write(
            &ctx.out_dir.join("pred.pgm"),
            to_pgm(&tile_pred, grid.nx, grid.ny),
        )?,
        write(
            &ctx.out_dir.join("target.pgm"),
            to_pgm(&design.labels.values, grid.nx, grid.ny),
        )?,
    ];
    println!("wrote predictions for {name} ({} cells)", pred.len());
    let inputs = vec![
        a.run.join(CHECKPOINT).display().to_string(),
        design_dir(&a.data, &name).display().to_string(),
    ];
    finish(ctx, "predict", a, inputs, outputs, started)
}

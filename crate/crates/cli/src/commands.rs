use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use nqp_core::container::write_atomic;
use nqp_core::fno::{load_checkpoint, FnoParams};
use nqp_core::format::f17;
use nqp_core::integrators::{generate_dataset, Dataset, TimeGrid};
use nqp_core::system::System;
use nqp_core::tcf::{
    parse_tcf_csv, populations, populations_csv, spectrum, spectrum_csv, tcf_csv, tcf_first_order,
    tcf_second_order, ExpmBackend, FnoBackend, Propagator, Rk4Backend, TcfAxis,
};
use nqp_core::training::{train_from, validate, TrainState};

use crate::config::{BackendKind, RunConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::{file_sha256, ManifestBuilder};
use crate::specs::{parse_operator, parse_state};
use crate::{BackendArgs, Command, ConfigArgs};

pub fn run(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::GenData {
            cfg,
            n_train,
            n_val,
            out,
        } => gen_data(&cfg, n_train, n_val, out),
        Command::Train {
            cfg,
            dataset,
            epochs,
            batch_size,
            lr,
            physics_weight,
            onthefly_samples,
            checkpoint_every,
            resume,
        } => {
            let mut config = load_config(&cfg)?;
            let t = &mut config.train;
            override_with(&mut t.epochs, epochs);
            override_with(&mut t.batch_size, batch_size);
            override_with(&mut t.lr, lr);
            override_with(&mut t.physics_weight, physics_weight);
            override_with(&mut t.onthefly_samples, onthefly_samples);
            override_with(&mut t.checkpoint_every, checkpoint_every);
            train(&config, &cfg, &dataset, resume)
        }
        Command::Validate {
            cfg,
            checkpoint,
            dataset,
            out,
        } => cmd_validate(&cfg, &checkpoint, &dataset, out),
        Command::Propagate {
            cfg,
            backend,
            state,
            windows,
            out,
        } => propagate(&cfg, &backend, &state, windows, out),
        Command::Tcf {
            cfg,
            backend,
            order,
            state,
            operator,
            t1_windows,
            t1_stride,
            t2_windows,
            t2_stride,
            full_grid,
            out,
        } => {
            let mut config = load_config(&cfg)?;
            let t = &mut config.tcf;
            if full_grid {
                t.second_order_t1.windows = 40;
                t.second_order_t2.windows = 40;
            }
            let ax1 = if order == 1 { &mut t.first_order } else { &mut t.second_order_t1 };
            override_with(&mut ax1.windows, t1_windows);
            override_with(&mut ax1.stride, t1_stride);
            override_with(&mut t.second_order_t2.windows, t2_windows);
            override_with(&mut t.second_order_t2.stride, t2_stride);
            tcf(&config, &cfg, &backend, order, &state, &operator, out)
        }
        Command::Spectrum {
            input,
            out,
            normalize,
        } => cmd_spectrum(&input, out, normalize),
        Command::Info {
            default_config,
            config,
            checkpoint,
            dataset,
        } => info(default_config, config, checkpoint, dataset),
    }
}

fn override_with<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn load_config(args: &ConfigArgs) -> CliResult<RunConfig> {
    let mut c = RunConfig::load(args.config.as_deref())?;
    override_with(&mut c.seed, args.seed);
    Ok(c)
}

fn output_path(config: &RunConfig, args: &ConfigArgs, explicit: Option<PathBuf>, name: &str) -> PathBuf {
    explicit.unwrap_or_else(|| config.output_dir(args.out_dir.as_deref()).join(name))
}

fn parent_dir(path: &Path) -> CliResult<PathBuf> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    parent_dir(path)?;
    write_atomic(path, text.as_bytes()).map_err(|e| match e {
        nqp_core::Error::Io(io) => CliError::io(path, io),
        other => other.into(),
    })
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn gen_data(args: &ConfigArgs, n_train: Option<usize>, n_val: Option<usize>, out: Option<PathBuf>) -> CliResult<()> {
    let mut config = load_config(args)?;
    override_with(&mut config.dataset.n_train, n_train);
    override_with(&mut config.dataset.n_val, n_val);
    let system = config.system()?;
    let grid = config.time_grid()?;
    let mut manifest = ManifestBuilder::start("gen-data", &config.emit());
    let ds = generate_dataset(&system, &grid, config.dataset.n_train, config.dataset.n_val, config.seed)?;
    let path = output_path(&config, args, out, "dataset.nqd");
    let dir = parent_dir(&path)?;
    ds.save(&path)?;
    println!(
        "dataset: {} train + {} validation trajectories, N = {}, {} points over {} fs (dt = {} fs), seed {} -> {}",
        ds.train.len(),
        ds.validation.len(),
        system.dim(),
        grid.n_points(),
        grid.t_max,
        grid.dt(),
        config.seed,
        path.display()
    );
    if let Some(p) = args.config.as_deref() {
        manifest.input(p);
    }
    manifest.finish(&dir, &[path])?;
    Ok(())
}

fn check_dataset_grid(config: &RunConfig, ds: &Dataset) -> CliResult<()> {
    let grid = config.time_grid()?;
    if grid != ds.grid {
        return Err(CliError::config(format!(
            "grid mismatch: config has {} steps over {} fs, dataset has {} steps over {} fs",
            grid.n_steps, grid.t_max, ds.grid.n_steps, ds.grid.t_max
        )));
    }
    Ok(())
}

fn train(config: &RunConfig, args: &ConfigArgs, dataset_path: &Path, resume: bool) -> CliResult<()> {
    let ds = Dataset::load(dataset_path)?;
    check_dataset_grid(config, &ds)?;
    let fno = config.fno_config(&ds.system)?;
    let tc = config.train_config();
    let dir = config.output_dir(args.out_dir.as_deref());
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut manifest = ManifestBuilder::start("train", &config.emit());
    manifest.input(dataset_path);
    if let Some(p) = args.config.as_deref() {
        manifest.input(p);
    }
    let state = if resume {
        let s = TrainState::load(&dir)?;
        if s.params.config != fno {
            return Err(CliError::config("checkpoint architecture differs from the config"));
        }
        log::info!("resuming after epoch {}", s.epochs_done);
        s
    } else {
        TrainState::new(&fno, &tc)?
    };
    let first = state.epochs_done + 1;
    let l = ds.system.liouvillian()?;
    let state = train_from(state, &tc, &ds, &l, Some(&dir))?;
    let errs = &state.report.validation_errors;
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    let max = errs.iter().cloned().fold(0.0, f64::max);
    println!(
        "trained epochs {first}..={} ({} real parameters); best epoch {:?}; validation relative error mean {mean:.4e} max {max:.4e} -> {}",
        state.epochs_done,
        fno.n_real_parameters(),
        state.report.best_epoch,
        dir.display()
    );
    let outputs: Vec<PathBuf> = ["best.nqp", "final.nqp", "optimizer.nqa", "loss.csv", "loss.json"]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    manifest.finish(&dir, &outputs)?;
    Ok(())
}

fn cmd_validate(args: &ConfigArgs, checkpoint: &Path, dataset: &Path, out: Option<PathBuf>) -> CliResult<()> {
    let config = load_config(args)?;
    let (params, _) = load_checkpoint(checkpoint)?;
    let ds = Dataset::load(dataset)?;
    let mut manifest = ManifestBuilder::start("validate", &config.emit());
    manifest.input(checkpoint);
    manifest.input(dataset);
    let errs = validate(&params, &ds)?;
    let mut csv = String::from("sample,relative_error\n");
    for (s, e) in ds.validation.iter().zip(&errs) {
        let _ = writeln!(csv, "{},{}", s.index, f17(*e));
    }
    let path = output_path(&config, args, out, "validation.csv");
    write_text(&path, &csv)?;
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    let min = errs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = errs.iter().cloned().fold(0.0, f64::max);
    println!(
        "validation: {} samples, relative error mean {mean:.4e} min {min:.4e} max {max:.4e} -> {}",
        errs.len(),
        path.display()
    );
    manifest.finish(&parent_dir(&path)?, &[path])?;
    Ok(())
}

struct BuiltBackend {
    backend: Box<dyn Propagator>,
    checkpoint_sha256: Option<String>,
}

fn make_backend(config: &RunConfig, args: &BackendArgs, system: &System, manifest: &mut ManifestBuilder) -> CliResult<BuiltBackend> {
    let kind = args.backend.unwrap_or(config.backend);
    let grid = config.time_grid()?;
    let l = system.liouvillian()?;
    Ok(match kind {
        BackendKind::Rk4 => BuiltBackend {
            backend: Box::new(Rk4Backend::new(l, grid)),
            checkpoint_sha256: None,
        },
        BackendKind::Expm => BuiltBackend {
            backend: Box::new(ExpmBackend::new(&l, grid)?),
            checkpoint_sha256: None,
        },
        BackendKind::Fno => {
            let path = args
                .checkpoint
                .as_deref()
                .ok_or_else(|| CliError::config("the fno backend needs --checkpoint"))?;
            let (params, meta) = load_checkpoint(path)?;
            check_checkpoint(&params, system)?;
            manifest.input(path);
            BuiltBackend {
                backend: Box::new(FnoBackend::new(params, meta.t_max)?),
                checkpoint_sha256: Some(file_sha256(path)?),
            }
        }
    })
}

fn check_checkpoint(params: &FnoParams, system: &System) -> CliResult<()> {
    let n2 = system.dim() * system.dim();
    if params.config.state_dim != n2 {
        return Err(CliError::config(format!(
            "checkpoint/config mismatch: checkpoint state length {}, system needs {n2}",
            params.config.state_dim
        )));
    }
    Ok(())
}

fn grid_json(grid: TimeGrid) -> serde_json::Value {
    json!({ "t_max_fs": grid.t_max, "n_steps": grid.n_steps, "dt_fs": grid.dt() })
}

fn propagate(args: &ConfigArgs, b: &BackendArgs, state: &str, windows: usize, out: Option<PathBuf>) -> CliResult<()> {
    let config = load_config(args)?;
    let system = config.system()?;
    let mut manifest = ManifestBuilder::start("propagate", &config.emit());
    let built = make_backend(&config, b, &system, &mut manifest)?;
    let s0 = parse_state(state, system.dim())?;
    let start = Instant::now();
    let p = populations(built.backend.as_ref(), &s0, windows)?;
    let seconds = start.elapsed().as_secs_f64();
    let path = output_path(&config, args, out, "populations.csv");
    write_text(&path, &populations_csv(&p))?;
    let side = sidecar_path(&path);
    let meta = json!({
        "kind": "populations",
        "backend": built.backend.name(),
        "window": grid_json(built.backend.grid()),
        "windows": windows,
        "state": state,
        "checkpoint_sha256": built.checkpoint_sha256,
        "max_imag_residue": p.max_imag_residue,
        "seconds": seconds,
    });
    write_text(&side, &serde_json::to_string_pretty(&meta).expect("json"))?;
    println!(
        "populations: {} rows over {windows} windows, backend {}, max imaginary residue {:.3e}, {seconds:.2}s -> {}",
        p.times.len(),
        built.backend.name(),
        p.max_imag_residue,
        path.display()
    );
    manifest.finish(&parent_dir(&path)?, &[path, side])?;
    Ok(())
}

fn tcf(
    config: &RunConfig,
    args: &ConfigArgs,
    b: &BackendArgs,
    order: u8,
    state: &str,
    operator: &str,
    out: Option<PathBuf>,
) -> CliResult<()> {
    let system = config.system()?;
    let mut manifest = ManifestBuilder::start("tcf", &config.emit());
    let built = make_backend(config, b, &system, &mut manifest)?;
    let s0 = parse_state(state, system.dim())?;
    let x = parse_operator(operator, system.dim())?;
    let t = &config.tcf;
    let a1 = if order == 1 { t.first_order } else { t.second_order_t1 };
    let ax1 = TcfAxis::new(a1.windows, a1.stride)?;
    let ax2 = TcfAxis::new(t.second_order_t2.windows, t.second_order_t2.stride)?;
    let backend = built.backend.as_ref();
    let start = Instant::now();
    let r = match order {
        1 => tcf_first_order(backend, &x, &s0, ax1)?,
        _ => tcf_second_order(backend, &x, &s0, ax1, ax2)?,
    };
    let seconds = start.elapsed().as_secs_f64();
    let path = output_path(config, args, out, &format!("tcf{order}.csv"));
    write_text(&path, &tcf_csv(&r))?;
    let side = sidecar_path(&path);
    let mut meta = json!({
        "kind": "tcf",
        "order": order,
        "backend": backend.name(),
        "window": grid_json(backend.grid()),
        "t1": { "windows": ax1.windows, "stride": ax1.stride, "points": r.t1.len() },
        "state": state,
        "operator": operator,
        "checkpoint_sha256": built.checkpoint_sha256,
        "max_imag_residue": r.max_imag_residue(),
        "max_abs": r.max_abs(),
        "seconds": seconds,
    });
    if order == 2 {
        meta["t2"] = json!({ "windows": ax2.windows, "stride": ax2.stride, "points": r.t2.len() });
    }
    write_text(&side, &serde_json::to_string_pretty(&meta).expect("json"))?;
    println!(
        "tcf order {order}: {} x {} points, backend {}, max |R| {:.4e}, max imaginary residue {:.3e}, {seconds:.2}s -> {}",
        r.t1.len(),
        r.t2.len().max(1),
        backend.name(),
        r.max_abs(),
        r.max_imag_residue(),
        path.display()
    );
    manifest.finish(&parent_dir(&path)?, &[path, side])?;
    Ok(())
}

fn cmd_spectrum(input: &Path, out: Option<PathBuf>, normalize: bool) -> CliResult<()> {
    let text = std::fs::read_to_string(input).map_err(|e| CliError::io(input, e))?;
    let mut manifest = ManifestBuilder::start("spectrum", &json!({ "normalize": normalize }).to_string());
    manifest.input(input);
    let r = parse_tcf_csv(&text)?;
    let s = spectrum(&r, normalize)?;
    let path = out.unwrap_or_else(|| {
        let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        input.with_file_name(format!("{stem}-spectrum.csv"))
    });
    write_text(&path, &spectrum_csv(&s))?;
    println!(
        "spectrum: {} x {} bins, {:.4} cm-1 spacing{} -> {}",
        s.w1.len(),
        s.w2.len().max(1),
        s.w1.get(1).map_or(0.0, |w| w - s.w1[0]),
        if normalize { ", normalized" } else { "" },
        path.display()
    );
    manifest.finish(&parent_dir(&path)?, &[path])?;
    Ok(())
}

fn info(
    default_config: bool,
    config: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
    dataset: Option<PathBuf>,
) -> CliResult<()> {
    if default_config {
        print!("{}", RunConfig::default().emit());
        return Ok(());
    }
    if let Some(p) = config {
        print!("{}", RunConfig::load(Some(&p))?.emit());
        return Ok(());
    }
    println!("nqp {}", env!("CARGO_PKG_VERSION"));
    if let Some(p) = checkpoint {
        let (params, meta) = load_checkpoint(&p)?;
        println!("checkpoint {}", p.display());
        println!("  config: {}", serde_json::to_string(&params.config).expect("json"));
        println!("  real parameters: {}", params.n_real_parameters());
        println!("  metadata: {}", serde_json::to_string(&meta).expect("json"));
    }
    if let Some(p) = dataset {
        let ds = Dataset::load(&p)?;
        println!("dataset {}", p.display());
        println!(
            "  system {} (N = {}), seed {}",
            ds.system.name.as_deref().unwrap_or("inline"),
            ds.system.dim(),
            ds.seed
        );
        println!("  grid: {} points over {} fs", ds.grid.n_points(), ds.grid.t_max);
        println!("  samples: {} train, {} validation", ds.train.len(), ds.validation.len());
    }
    Ok(())
}

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use prtt::render::Method;
use prtt_cli::bench::run_bench;
use prtt_cli::commands::{self, Mode, RenderArgs};
use prtt_cli::config::LoadedConfig;

#[derive(Parser)]
#[command(name = "prtt", version, about = "Precomputed radiance transfer textures")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "PRTT_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MethodArg {
    /// Full tripling-tensor contraction per shade.
    Tp,
    /// Product matrices built once per light.
    Tpfl,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Tp => Method::Tp,
            MethodArg::Tpfl => Method::Tpfl,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Bake zero-bounce transfer textures and the per-vertex baseline.
    Bake { config: PathBuf },
    /// Bake one-bounce transfer textures for the configured or given light.
    BakeIndirect {
        config: PathBuf,
        /// Lat-long PFM overriding the configured environment.
        #[arg(long)]
        light: Option<PathBuf>,
    },
    /// Render from baked transfer.
    Render {
        config: PathBuf,
        #[arg(long, value_enum, default_value = "fragment")]
        mode: Mode,
        #[arg(long, value_enum, default_value = "tpfl")]
        method: MethodArg,
        /// Add the one-bounce term.
        #[arg(long)]
        indirect: bool,
        /// Output the one-bounce term alone.
        #[arg(long, conflicts_with = "indirect")]
        indirect_only: bool,
        #[arg(long)]
        light: Option<PathBuf>,
        /// Output path; `.pfm` and `.ppm` are written next to each other.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Monte Carlo reference render.
    Reference {
        config: PathBuf,
        #[arg(long, default_value_t = 1024)]
        spp: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Indirect one-bounce radiance only.
        #[arg(long)]
        one_bounce: bool,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Error metrics of a PFM against a reference PFM.
    Compare {
        test: PathBuf,
        reference: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Storage cost of textures versus per-vertex transfer.
    MemReport { config: PathBuf },
    /// Dump the nonzero tripling coefficients.
    Tensor {
        #[arg(long, default_value_t = 5)]
        band: usize,
    },
    /// Time the two triple-product methods per band.
    Bench {
        #[arg(long, default_value_t = 2)]
        min_band: usize,
        #[arg(long, default_value_t = 6)]
        max_band: usize,
        #[arg(long, default_value_t = 50_000)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
}

fn run(cli: Cli) -> Result<()> {
    rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global().context("building thread pool")?;
    match cli.command {
        Command::Bake { config } => {
            let cfg = LoadedConfig::load(&config)?;
            let s = commands::cmd_bake(&cfg)?;
            for set in &s.sets {
                println!(
                    "set {}: {} valid texels ({} overlapping), G-buffer {:.2}s, bake {:.2}s -> {}",
                    set.texture_set,
                    set.valid_texels,
                    set.overlapping_texels,
                    set.gbuffer_seconds,
                    set.bake_seconds,
                    set.path.display()
                );
            }
            println!("vertex transfer: {} vertices in {:.2}s", s.vertices, s.vertex_seconds);
        }
        Command::BakeIndirect { config, light } => {
            let cfg = LoadedConfig::load(&config)?;
            for p in commands::cmd_bake_indirect(&cfg, light.as_deref())? {
                println!("wrote {}", p.display());
            }
        }
        Command::Render { config, mode, method, indirect, indirect_only, light, out } => {
            let cfg = LoadedConfig::load(&config)?;
            let args = RenderArgs { mode, method: method.into(), indirect, indirect_only, out, light };
            let s = commands::cmd_render(&cfg, &args)?;
            let st = &s.stats;
            println!(
                "pixels {} covered {} shades {} clamped {} ({:.3}%) texel misses {}",
                st.pixels,
                st.covered,
                st.shades,
                st.clamped,
                100.0 * st.clamp_rate(),
                st.texel_misses
            );
            println!("wrote {} and {}", s.pfm.display(), s.ppm.display());
        }
        Command::Reference { config, spp, seed, one_bounce, out } => {
            let cfg = LoadedConfig::load(&config)?;
            let p = commands::cmd_reference(&cfg, spp, seed, one_bounce, &out)?;
            println!("wrote {}", p.display());
        }
        Command::Compare { test, reference, json } => {
            let m = commands::cmd_compare(&test, &reference)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&m)?);
            } else {
                println!("rmse {:.6e} rel_rmse {:.6e} max_abs {:.6e} pixels {}", m.rmse, m.rel_rmse, m.max_abs, m.pixels);
            }
        }
        Command::MemReport { config } => {
            let cfg = LoadedConfig::load(&config)?;
            print!("{}", commands::cmd_mem_report(&cfg)?.to_table());
        }
        Command::Tensor { band } => print!("{}", commands::cmd_tensor(band)?),
        Command::Bench { min_band, max_band, iterations, seed, json } => {
            let report = run_bench(min_band..=max_band, iterations, seed)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.to_table());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

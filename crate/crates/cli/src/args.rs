// SPDX-License-Identifier: Apache-2.0

use std::net::IpAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub const DEFAULT_PORT: u16 = 8710;

#[derive(Debug, Parser)]
#[command(name = "graspforge", version, about = "Task-constrained grasp planning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan grasps for a task and print the ranked candidates.
    Plan(PlanArgs),
    /// List, inspect or clear an on-disk grasp cache.
    Cache(CacheArgs),
    /// Run a fixture suite and print a pass/fail matrix.
    Verify(VerifyArgs),
    /// Serve the planning API over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Robot description (JSON).
    #[arg(long)]
    pub robot: PathBuf,
    /// Task description (JSON). Relative mesh paths resolve against its directory.
    #[arg(long)]
    pub task: PathBuf,
    /// Planner configuration (JSON); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Grasp list output. A `.tsv` path receives the candidate table instead.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep only the best N candidates.
    #[arg(long)]
    pub top: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads. Output does not depend on this.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: u16,
    /// Disk cache directory; overrides the cache mode in --config.
    #[arg(long, env = "GRASPFORGE_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CacheArgs {
    #[arg(long, env = "GRASPFORGE_CACHE_DIR")]
    pub cache_dir: PathBuf,
    #[command(subcommand)]
    pub action: CacheAction,
}

#[derive(Debug, Subcommand)]
pub enum CacheAction {
    /// Print each key with its grasp count.
    List,
    /// Remove every entry.
    Clear,
    /// Print one entry's provenance and grasp count.
    Inspect { key: String },
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suite file (JSON). Paths inside resolve against its directory.
    #[arg(long)]
    pub suite: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: u16,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// TCP port; 0 picks a free one.
    #[arg(long, env = "GRASPFORGE_PORT", default_value_t = DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    /// Disk cache directory; memory cache when omitted.
    #[arg(long, env = "GRASPFORGE_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: u16,
    /// Seed for plan requests that carry none.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Built web UI, served under /ui.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
}

// SPDX-License-Identifier: Apache-2.0

use graspforge_core::planner::GraspCache;

use crate::args::{CacheAction, CacheArgs};
use crate::{CliError, Exit};

pub fn cmd_cache(args: &CacheArgs) -> Result<Exit, CliError> {
    let dir = &args.cache_dir;
    let needs_dir = !matches!(args.action, CacheAction::Clear);
    if needs_dir && !dir.is_dir() {
        return Err(CliError::Cache(format!("{} is not a directory", dir.display())));
    }
    let cache = GraspCache::disk(dir).map_err(|e| CliError::Cache(e.to_string()))?;
    let exit = match &args.action {
        CacheAction::List => {
            let entries = cache.entries();
            for e in &entries {
                println!("{}\t{}", e.key.file_stem(), e.grasps.len());
            }
            if entries.is_empty() {
                println!("cache is empty");
            }
            Exit::Success
        }
        CacheAction::Clear => {
            let n = cache.clear().map_err(|e| CliError::Cache(e.to_string()))?;
            println!("removed {n} entries");
            Exit::Success
        }
        CacheAction::Inspect { key } => match cache.find(key) {
            Some(e) => {
                println!("key\t{}", e.key.file_stem());
                println!("end_effector\t{}", e.key.ee_name);
                println!("digest\t{}", e.key.digest);
                println!("generator\t{}", e.provenance.generator);
                println!("params_hash\t{}", e.provenance.params_hash);
                println!("grasps\t{}", e.grasps.len());
                Exit::Success
            }
            None => {
                eprintln!("no cache entry {key:?}");
                Exit::Empty
            }
        },
    };
    for w in cache.take_warnings() {
        log::warn!("{w}");
    }
    Ok(exit)
}

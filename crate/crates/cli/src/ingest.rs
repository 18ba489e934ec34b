use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;

use timelines_core::search::IndexedCatalog;
use timelines_core::Catalog;

use crate::{Format, CATALOG_FILE, INDEX_FILE};

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Line-delimited JSON catalog.
    #[arg(long, env = "TS_CATALOG")]
    catalog: PathBuf,
    /// Output directory for the normalized catalog and index.
    #[arg(long, env = "TS_INDEX_DIR")]
    index_dir: PathBuf,
    /// Abort on the first invalid record instead of skipping it.
    #[arg(long)]
    strict: bool,
    #[arg(long, env = "TS_FORMAT", value_enum, default_value_t = Format::Text)]
    format: Format,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = File::create(&tmp).with_context(|| format!("cannot create {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn run(args: IngestArgs) -> anyhow::Result<()> {
    let file = File::open(&args.catalog).with_context(|| format!("cannot open catalog {}", args.catalog.display()))?;
    let (catalog, stats) =
        Catalog::ingest(BufReader::new(file), args.strict).with_context(|| format!("{}", args.catalog.display()))?;
    let index = IndexedCatalog::build(&catalog);

    fs::create_dir_all(&args.index_dir).with_context(|| format!("cannot create {}", args.index_dir.display()))?;
    let mut normalized = Vec::new();
    catalog.write_jsonl(&mut normalized)?;
    write_atomic(&args.index_dir.join(CATALOG_FILE), &normalized)?;
    write_atomic(&args.index_dir.join(INDEX_FILE), &serde_json::to_vec(&index)?)?;

    match args.format {
        Format::Json => println!("{}", serde_json::to_string(&stats)?),
        Format::Text => {
            println!(
                "read {} records: {} accepted, {} rejected; {} terms indexed",
                stats.records_read,
                stats.records_accepted,
                stats.records_rejected,
                index.postings.len()
            );
            for r in &stats.reject_reasons {
                println!("  line {}: {}", r.line, r.reason);
            }
        }
    }
    Ok(())
}

use std::fs::File;
use std::io::{BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;

use timelines_core::persistence::Store;
use timelines_core::search::IndexedCatalog;
use timelines_core::Catalog;
use timelines_server::AppState;

use crate::{require_dir, IdleGap, CATALOG_FILE, INDEX_FILE};

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Directory written by `ingest`.
    #[arg(long, env = "TS_INDEX_DIR")]
    index_dir: PathBuf,
    /// Directory holding user event logs; created if missing.
    #[arg(long, env = "TS_STORE_DIR")]
    store_dir: PathBuf,
    /// Port to listen on; 0 picks a free one.
    #[arg(long, env = "TS_PORT", default_value_t = 8080)]
    port: u16,
    #[arg(long, env = "TS_HOST", default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    #[command(flatten)]
    idle_gap: IdleGap,
}

fn load_index(dir: &Path) -> anyhow::Result<(Catalog, IndexedCatalog)> {
    let catalog_path = dir.join(CATALOG_FILE);
    let file = File::open(&catalog_path).with_context(|| format!("cannot open {}", catalog_path.display()))?;
    let (catalog, _) =
        Catalog::ingest(BufReader::new(file), true).with_context(|| catalog_path.display().to_string())?;

    let index_path = dir.join(INDEX_FILE);
    let file = File::open(&index_path).with_context(|| format!("cannot open {}", index_path.display()))?;
    let index: IndexedCatalog =
        serde_json::from_reader(BufReader::new(file)).with_context(|| index_path.display().to_string())?;
    if let Err(reason) = index.check_invariants() {
        anyhow::bail!("{}: {reason}", index_path.display());
    }
    anyhow::ensure!(
        index.doc_count == catalog.len() && catalog.iter().all(|r| index.doc_lengths.contains_key(&r.resource_id)),
        "{} does not match {}; rerun ingest",
        index_path.display(),
        catalog_path.display()
    );
    Ok((catalog, index))
}

pub fn run(args: ServeArgs) -> anyhow::Result<()> {
    require_dir(&args.index_dir, "index dir")?;
    let (catalog, index) = load_index(&args.index_dir)?;
    let store =
        Store::open(&args.store_dir).with_context(|| format!("cannot open store {}", args.store_dir.display()))?;
    let state = AppState::open(catalog, index, store, args.idle_gap.duration())?;

    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async move {
        let addr = SocketAddr::new(args.host, args.port);
        let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("cannot listen on {addr}"))?;
        let local = listener.local_addr()?;
        println!("listening on http://{local}");
        std::io::stdout().flush()?;
        timelines_server::serve(listener, state, timelines_server::shutdown_signal()).await?;
        Ok(())
    })
}

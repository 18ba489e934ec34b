use std::io::Write;
use std::path::PathBuf;

use clap::Args;

use crate::sessions::replay_user;

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, env = "TS_STORE_DIR")]
    store_dir: PathBuf,
    #[arg(long)]
    user: String,
}

pub fn run(args: ExportArgs) -> anyhow::Result<()> {
    // Replaying first guarantees the exported log is well formed.
    let (_, records) = replay_user(&args.store_dir, &args.user)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for r in &records {
        out.write_all(r.to_line()?.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;

use timelines_core::activity::{TopicId, UserActivity, UserId};
use timelines_core::persistence::{read_log, EventRecord, Store};
use timelines_core::session::compute_session_durations;

use crate::{require_dir, Format, IdleGap};

#[derive(Debug, Args)]
pub struct SessionsArgs {
    #[arg(long, env = "TS_STORE_DIR")]
    store_dir: PathBuf,
    #[arg(long)]
    user: String,
    #[arg(long)]
    topic: String,
    #[command(flatten)]
    idle_gap: IdleGap,
    #[arg(long, env = "TS_FORMAT", value_enum, default_value_t = Format::Text)]
    format: Format,
}

/// Replay a user's log without touching it (a torn tail is skipped, not truncated).
pub fn replay_user(store_dir: &Path, user: &str) -> anyhow::Result<(UserActivity, Vec<EventRecord>)> {
    require_dir(store_dir, "store dir")?;
    let store = Store::open(store_dir)?;
    let user_id = UserId::new(user);
    anyhow::ensure!(store.has_user(&user_id), "user {user} not found in {}", store_dir.display());
    let path = store.log_path(&user_id);
    let contents = read_log(&path, &user_id)?;
    if contents.torn_tail {
        tracing::warn!(path = %path.display(), "ignoring torn final record");
    }
    let activity = UserActivity::replay(user_id, contents.records.iter().map(|r| &r.event))
        .with_context(|| format!("cannot replay {}", path.display()))?;
    Ok((activity, contents.records))
}

pub fn run(args: SessionsArgs) -> anyhow::Result<()> {
    let (activity, _) = replay_user(&args.store_dir, &args.user)?;
    let topic_id = TopicId::new(&args.topic);
    let topic =
        activity.topic(&topic_id).with_context(|| format!("topic {} not found for user {}", args.topic, args.user))?;
    let rows = compute_session_durations(topic.events(), args.idle_gap.duration());

    match args.format {
        Format::Json => println!("{}", serde_json::to_string(&rows)?),
        Format::Text => {
            println!("{:>7}  {:<24}  {:<24}  {:>6}  {:>12}", "session", "start", "end", "events", "duration_s");
            for r in &rows {
                println!(
                    "{:>7}  {:<24}  {:<24}  {:>6}  {:>12.3}",
                    r.session_id,
                    r.start_at.to_string(),
                    r.end_at.to_string(),
                    r.event_count,
                    r.duration_secs
                );
            }
        }
    }
    Ok(())
}

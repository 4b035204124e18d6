//! Wire protocol, WebSocket sessions, log replay and the command-line
//! entry points.

mod cli;
mod plot;
mod sampler;
mod session;
mod wire;

pub use cli::{cli_plot, cli_recall, cli_replay, cli_run, CliError, KITCHEN_RECALL};
pub use plot::write_plot_csvs;
pub use sampler::{boundary_tick, log_messages, log_total_ticks, SnapshotSampler, SNAPSHOT_HZ};
pub use session::{replay_frames, serve_replay, serve_session, SessionError, SessionOptions};
pub use wire::{ApplyWrench, EventNotice, Frame, Message, ParticleCloud, StateSnapshot, TranscriptDelta};

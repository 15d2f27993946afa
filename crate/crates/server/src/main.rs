use clap::Parser;
use notobot_server::cli::{self, Cli, Command};
use tracing_subscriber::EnvFilter;

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Train(a) => tokio::task::block_in_place(|| cli::train(a)),
        Command::Evaluate(a) => tokio::task::block_in_place(|| cli::evaluate_cmd(a).map(|_| ())),
        Command::Report(a) => cli::report(a),
        Command::Serve(a) => cli::serve_cmd(a).await,
        Command::Feed(a) => cli::feed_cmd(a).await,
        Command::Synth(a) => cli::synth(a),
    }
}

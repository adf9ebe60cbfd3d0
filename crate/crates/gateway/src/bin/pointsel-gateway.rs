//! Serves the JSON session protocol on a local TCP port.

use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use pointsel_gateway::{transport, Gateway};

#[derive(Parser)]
#[command(
    name = "pointsel-gateway",
    version,
    about = "Pointing engine session service"
)]
struct Cli {
    /// Address to bind.
    #[arg(long, env = "POINTSEL_GATEWAY_BIND", default_value = "127.0.0.1")]
    bind: String,
    /// TCP port; 0 picks a free one.
    #[arg(long, env = "POINTSEL_GATEWAY_PORT", default_value_t = 7878)]
    port: u16,
    /// Directory for load_scenario / save_scenario paths.
    #[arg(long, env = "POINTSEL_SCENARIO_DIR")]
    scenario_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(dir) = &cli.scenario_dir {
        if !dir.is_dir() {
            eprintln!("error: scenario dir {} is not a directory", dir.display());
            return ExitCode::from(2);
        }
    }
    let listener = match TcpListener::bind((cli.bind.as_str(), cli.port)) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: bind {}:{}: {e}", cli.bind, cli.port);
            return ExitCode::from(1);
        }
    };
    match listener.local_addr() {
        Ok(addr) => eprintln!("listening on {addr} (protocol_version 1)"),
        Err(e) => eprintln!("listening (address unknown: {e})"),
    }
    let gw = Arc::new(Gateway::new(cli.scenario_dir));
    match transport::serve(listener, gw) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

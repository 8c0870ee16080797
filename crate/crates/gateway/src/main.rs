use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use easel_core::agent::{AgentError, RunReport, Scenario, Simulation};
use easel_core::pipeline::{resolve_topic, run_pipeline, PipelineConfig};
use easel_core::topic::{FixtureTranslations, FixtureTrends, StrokeFont};
use easel_gateway::{gateway, GatewayConfig};

#[derive(Parser)]
#[command(name = "easel", version, about = "Robot painter economy simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario to completion and write its output bundle.
    Run {
        /// Scenario TOML; the bundled default when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Run on a wall clock and expose the bid gateway.
        #[arg(long)]
        serve: bool,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Simulated ticks per second when serving.
        #[arg(long, default_value_t = 60.0)]
        pace: f64,
    },
    /// Paint one topic (a YYYY-MM-DD trend date or a keyword) and write the artifacts.
    Pipeline {
        topic: String,
        #[arg(long)]
        out: PathBuf,
        /// Pipeline settings TOML.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed for canvas pose noise.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, seed, out, serve, port, pace } => {
            load_scenario(scenario.as_deref(), seed).and_then(|sc| {
                if serve {
                    serve_run(sc, &out, port, pace)
                } else {
                    batch_run(sc, &out)
                }
            })
        }
        Command::Pipeline { topic, out, config, seed } => pipeline(&topic, &out, config.as_deref(), seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_scenario(path: Option<&Path>, seed: Option<u64>) -> Result<Scenario, String> {
    let mut sc = match path {
        Some(p) => Scenario::load(p).map_err(|e| e.to_string())?,
        None => Scenario::builtin(),
    };
    if let Some(seed) = seed {
        sc.seed = seed;
    }
    Ok(sc)
}

fn write_outputs(sim: &Simulation, out: &Path, result: Result<RunReport, AgentError>) -> Result<(), String> {
    // The bundle is written even for a failed run so the log can be inspected.
    sim.write_bundle(out).map_err(|e| e.to_string())?;
    let report = result.map_err(|e| e.to_string())?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
    std::fs::write(out.join("summary.json"), json + "\n").map_err(|e| e.to_string())?;
    println!(
        "paintings {} sales {} final balance {} closure {} log {}",
        report.paintings_completed,
        report.sales,
        report.final_balance.to_token_string(),
        if report.closure.holds() { "holds" } else { "BROKEN" },
        report.log_sha256,
    );
    Ok(())
}

fn batch_run(sc: Scenario, out: &Path) -> Result<(), String> {
    let mut sim = Simulation::new(sc).map_err(|e| e.to_string())?;
    let result = sim.run();
    write_outputs(&sim, out, result)
}

fn serve_run(sc: Scenario, out: &Path, port: u16, pace: f64) -> Result<(), String> {
    if !(pace.is_finite() && pace > 0.0) {
        return Err(format!("--pace must be positive, got {pace}"));
    }
    let sim = Simulation::new(sc).map_err(|e| e.to_string())?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let out = out.to_path_buf();
    runtime.block_on(async move {
        let (app, driver) = gateway(sim, GatewayConfig { pace: Some(pace), ..Default::default() });
        let driver = driver.on_finish(Box::new(move |sim, result| match write_outputs(sim, &out, result) {
            Ok(()) => println!("run finished; still serving until interrupted"),
            Err(e) => eprintln!("error: {e}"),
        }));
        let driver = tokio::spawn(driver.run());
        let addr = SocketAddr::from(([127, 0, 0, 1], port));
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| format!("binding {addr}: {e}"))?;
        println!("listening on http://{addr}");
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| e.to_string())?;
        driver.await.map_err(|e| e.to_string())?;
        Ok(())
    })
}

fn pipeline(topic: &str, out: &Path, config: Option<&Path>, seed: u64) -> Result<(), String> {
    let cfg: PipelineConfig = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            toml::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => PipelineConfig::default(),
    };
    let topic = resolve_topic(topic, &FixtureTrends::builtin(), &FixtureTranslations::builtin()).map_err(|e| e.to_string())?;
    let output = run_pipeline(&topic, &cfg, &StrokeFont::builtin(), seed).map_err(|e| e.to_string())?;
    output.write_artifacts(out).map_err(|e| e.to_string())?;
    let s = output.summary();
    println!(
        "{} ({}) strokes {} dips {} duration {:.2}s covered {:.4} spurious {:.4}",
        s.keyword_source, s.keyword_glyphs, s.strokes, s.dips, s.duration_s, s.coverage.covered, s.coverage.spurious
    );
    Ok(())
}

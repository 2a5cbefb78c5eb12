use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ilc_core::config::PRESETS;
use ilc_core::experiment::{advise_switch, FigureId};
use ilc_core::selfcheck::run_checks;
use ilc_core::{load_config, reproduce_figure, run_experiment, sampled_zeros, IlcError, LawKind, SwitchReport};

/// Iterative learning control experiments on lifted plant models.
#[derive(Parser)]
#[command(name = "ilc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file and write its CSV.
    Run { config: PathBuf },
    /// Write the model, world and hybrid curves of a figure.
    Figure {
        /// fig2, fig3, fig4 or fig5
        figure: String,
        #[arg(long, default_value = "p_transpose")]
        law: String,
        /// Model iterations before switching to the world.
        #[arg(long, default_value_t = 50)]
        switch: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Also write an SVG chart.
        #[arg(long)]
        plot: bool,
    },
    /// Evaluate the model-to-world switch at each candidate iteration.
    AdviseSwitch {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        candidates: Vec<usize>,
    },
    /// Run the built-in oracle checks.
    Check,
    /// Print the sampled zeros of the model and world plants.
    Zeros { config: PathBuf },
    /// Print a bundled preset config.
    Preset { name: String },
}

fn run(command: Command) -> Result<bool, IlcError> {
    match command {
        Command::Run { config } => {
            let config = load_config(&config)?;
            let artifacts = run_experiment(&config)?;
            for warning in &artifacts.summary.warnings {
                eprintln!("warning: {warning}");
            }
            print!("{}", artifacts.summary);
            println!("csv             {}", artifacts.csv_path.display());
            for plot in &artifacts.plot_paths {
                println!("plot            {}", plot.display());
            }
        }
        Command::Figure {
            figure,
            law,
            switch,
            out_dir,
            plot,
        } => {
            let figure: FigureId = figure.parse()?;
            let law: LawKind = law.parse()?;
            let artifacts = reproduce_figure(figure, law, switch, &out_dir, plot)?;
            println!("{}", SwitchReport::CSV_HEADER);
            println!("{}", artifacts.data.report.csv_row());
            for path in artifacts
                .csv_paths
                .iter()
                .chain([&artifacts.markers_path])
                .chain(artifacts.plot_path.iter())
            {
                println!("wrote {}", path.display());
            }
        }
        Command::AdviseSwitch { config, candidates } => {
            let config = load_config(&config)?;
            println!("{}", SwitchReport::CSV_HEADER);
            for report in advise_switch(&config, &candidates)? {
                println!("{}", report.csv_row());
            }
        }
        Command::Check => {
            let outcomes = run_checks();
            for o in &outcomes {
                println!("[{}] {}: {}", if o.passed { "pass" } else { "FAIL" }, o.name, o.detail);
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            println!("{} of {} checks passed", outcomes.len() - failed, outcomes.len());
            return Ok(failed == 0);
        }
        Command::Zeros { config } => {
            let config = load_config(&config)?;
            println!("plant,real,imag,modulus,outside_unit_circle");
            for (name, dss) in [("model", config.model_discrete()?), ("world", config.world_discrete()?)] {
                for z in sampled_zeros(&dss)? {
                    println!("{name},{:.12},{:.12},{:.12},{}", z.re, z.im, z.norm(), z.norm() > 1.0);
                }
            }
        }
        Command::Preset { name } => {
            let file = if name.ends_with(".cfg") { name.clone() } else { format!("{name}.cfg") };
            let (_, text) = PRESETS.iter().find(|(n, _)| *n == file).ok_or_else(|| {
                let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
                IlcError::Config {
                    key: "preset".into(),
                    message: format!("no preset `{name}` (available: {})", names.join(", ")),
                }
            })?;
            print!("{text}");
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_config_error() { 1 } else { 2 })
        }
    }
}

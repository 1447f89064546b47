use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use codeevo::ceg::{CegOptions, Direction, NormScope, Normalization, StdScope};
use codeevo::embed::TsneOptions;
use codeevo::features::FeatureSet;
use codeevo::ingest::ValidationPolicy;
use codeevo::report::{run, PipelineConfig, Stage, YAxis};
use codeevo::Error;

/// Feature extraction and code evolution graph analysis for logs of
/// generated Python algorithms.
#[derive(Parser)]
#[command(name = "codeevo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run log -> features.csv
    Extract(RunArgs),
    /// Run log -> ceg.json and a lineage figure
    Ceg(RunArgs),
    /// Run log -> tsne.svg
    Tsne(RunArgs),
    /// Run log -> correlations.csv and heatmap.svg
    Correlate(RunArgs),
    /// All of the above
    Pipeline(RunArgs),
    /// Print the syntax-tree graph (or features) of one Python file as JSON
    Ast {
        file: PathBuf,
        /// Print the feature vector instead of the graph.
        #[arg(long)]
        features: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSONL run log.
    #[arg(long)]
    input: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// pc1, tokens or feature:<name>.
    #[arg(long, default_value = "pc1", value_parser = parse_y_axis)]
    y_axis: YAxis,
    /// ast22, complexity6, all28 or custom:<file>.
    #[arg(long, value_parser = parse_feature_set)]
    feature_set: Option<FeatureSet>,
    #[arg(long, value_enum, default_value_t = NormalizeArg::Minmax)]
    normalize: NormalizeArg,
    #[arg(long, value_enum, default_value_t = DirectionArg::Maximize)]
    direction: DirectionArg,
    #[arg(long, value_enum, default_value_t = NormScopeArg::Group)]
    norm_scope: NormScopeArg,
    #[arg(long, value_enum, default_value_t = StdScopeArg::Dataset)]
    std_scope: StdScopeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 30.0)]
    perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long, value_enum, default_value_t = PolicyArg::Strict)]
    policy: PolicyArg,
    /// Add eigenvector centrality statistics to the feature vectors.
    #[arg(long)]
    include_eigencentrality: bool,
    /// Radius of a CEG node without children.
    #[arg(long, default_value_t = 3.0)]
    node_radius: f64,
}

fn parse_y_axis(s: &str) -> Result<YAxis, String> {
    s.parse()
}

fn parse_feature_set(s: &str) -> Result<FeatureSet, String> {
    FeatureSet::parse(s).map_err(|e| e.to_string())
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeArg {
    Minmax,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormScopeArg {
    Group,
    Run,
    Global,
}

#[derive(Clone, Copy, ValueEnum)]
enum StdScopeArg {
    Dataset,
    Group,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Strict,
    DropDanglingEdges,
}

impl RunArgs {
    fn config(self) -> PipelineConfig {
        PipelineConfig {
            input: self.input,
            out_dir: self.out,
            y_axis: self.y_axis,
            feature_set: self.feature_set,
            ceg: CegOptions {
                normalize: match self.normalize {
                    NormalizeArg::Minmax => Normalization::MinMax,
                    NormalizeArg::None => Normalization::None,
                },
                direction: match self.direction {
                    DirectionArg::Maximize => Direction::Maximize,
                    DirectionArg::Minimize => Direction::Minimize,
                },
                norm_scope: match self.norm_scope {
                    NormScopeArg::Group => NormScope::Group,
                    NormScopeArg::Run => NormScope::Run,
                    NormScopeArg::Global => NormScope::Global,
                },
                std_scope: match self.std_scope {
                    StdScopeArg::Dataset => StdScope::Dataset,
                    StdScopeArg::Group => StdScope::Group,
                },
                ..CegOptions::default()
            },
            policy: match self.policy {
                PolicyArg::Strict => ValidationPolicy::Strict,
                PolicyArg::DropDanglingEdges => ValidationPolicy::DropDanglingEdges,
            },
            tsne: TsneOptions {
                perplexity: self.perplexity,
                seed: self.seed,
                iterations: self.iterations,
            },
            eigen_centrality: self.include_eigencentrality,
            node_radius: self.node_radius,
        }
    }
}

fn dump_ast(file: &PathBuf, features: bool) -> Result<(), Error> {
    let code = std::fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
    if features {
        let f = codeevo::features::extract_features(&code, Default::default())?;
        let map: serde_json::Map<String, serde_json::Value> =
            f.iter().map(|(k, v)| (k.to_string(), serde_json::json!(v))).collect();
        println!("{}", serde_json::Value::Object(map));
    } else {
        println!("{}", codeevo::pyast::parse_to_graph(&code)?.to_json());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (stage, args) = match cli.command {
        Command::Extract(a) => (Stage::Extract, a),
        Command::Ceg(a) => (Stage::Ceg, a),
        Command::Tsne(a) => (Stage::Tsne, a),
        Command::Correlate(a) => (Stage::Correlate, a),
        Command::Pipeline(a) => (Stage::All, a),
        Command::Ast { file, features } => {
            return match dump_ast(&file, features) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
    };
    match run(stage, &args.config()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

mod config;

use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::Settings;
use niffler::corpus::{load_collection_with_warnings, LoadOptions, PathlessCollection};
use niffler::harness::{
    columns_sweep, generate_collection, generate_workload, rows_sweep, run_benchmark, run_query, threshold_sweep,
    BenchConfig, GeneratorSpec, NoiseLevel, PipelineConfig, QueryOutcome, SweepReport, SyntheticCollection,
    WorkloadSpec, TRUTH_FILE,
};
use niffler::index::{build_index, load_index, save_index, DiscoveryIndex, IndexOrigin, DEFAULT_THRESHOLD};
use niffler::query::ExampleQuery;
use niffler::search::MaterializedView;
use niffler::selection::{select_candidates, Strategy, Theta};
use niffler::signals::{run_stepper, signal_pipeline, KeyChoice, SignalBundle, SignalOptions};

#[derive(Parser)]
#[command(name = "niffler", version, about = "Find project-join views over a folder of CSV tables from a few example values")]
struct Cli {
    /// Settings file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the discovery index over a directory of tables.
    Index {
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        load: LoadArgs,
    },
    /// Show the candidate columns chosen for each query attribute.
    Select {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Enumerate and rank join graphs, optionally writing the materialized views.
    Search {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        query: PathBuf,
        /// Table directory; defaults to the one the index was built from.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        views_out: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        show: usize,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Classify views, reduce them and write the contradiction signals.
    Signals {
        /// Directory written by `search --views-out`.
        #[arg(long)]
        views: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Query used to rescore merged views.
        #[arg(long)]
        query: Option<PathBuf>,
        #[command(flatten)]
        signal: SignalArgs,
    },
    /// Step through the signals of a bundle, choosing between row variants.
    Interact {
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Run the whole pipeline for one query and print the best views.
    Query {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Prebuilt index; built on the fly from --data otherwise.
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        /// Follow up with the signal stepper.
        #[arg(long)]
        interactive: bool,
        /// Write the views and signal bundle here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        load: LoadArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Generate a synthetic collection with planted ground truths.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        gen: GenArgs,
    },
    /// Run the noisy-query workload under each strategy and write reports.
    Bench {
        #[arg(long)]
        out: PathBuf,
        /// Collection written by `gen`; generated in memory otherwise.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        strategies: Option<Vec<Strategy>>,
        #[command(flatten)]
        gen: GenArgs,
        #[command(flatten)]
        workload: WorkloadArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Vary one parameter over a fixed synthetic collection.
    Sweep {
        #[arg(value_enum)]
        kind: SweepKind,
        #[arg(long)]
        out: PathBuf,
        /// Values to sweep; defaults depend on the kind.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<String>>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        strategies: Option<Vec<Strategy>>,
        #[command(flatten)]
        gen: GenArgs,
        #[command(flatten)]
        workload: WorkloadArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Threshold,
    Rows,
    Columns,
}

#[derive(Args, Clone)]
struct LoadArgs {
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Treat the first line as data.
    #[arg(long)]
    no_header: bool,
    /// Cell values read as missing.
    #[arg(long = "null", value_delimiter = ',')]
    null_tokens: Option<Vec<String>>,
}

impl LoadArgs {
    fn options(&self) -> Result<LoadOptions> {
        if !self.delimiter.is_ascii() {
            bail!("delimiter must be a single ASCII character");
        }
        let mut o = LoadOptions {
            delimiter: self.delimiter as u8,
            has_header: !self.no_header,
            ..LoadOptions::default()
        };
        if let Some(tokens) = &self.null_tokens {
            o.null_tokens = tokens.clone();
        }
        Ok(o)
    }
}

#[derive(Args, Clone, Default)]
struct SignalArgs {
    #[arg(long)]
    sample_size: Option<usize>,
    #[arg(long)]
    max_key_size: Option<usize>,
    #[arg(long, value_parser = parse_key_choice)]
    key_choice: Option<KeyChoice>,
}

fn parse_key_choice(s: &str) -> Result<KeyChoice, String> {
    match s {
        "best" => Ok(KeyChoice::Best),
        "worst" => Ok(KeyChoice::Worst),
        _ => Err(format!("expected best or worst, got {s:?}")),
    }
}

impl SignalArgs {
    fn options(&self, settings: &Settings) -> SignalOptions {
        let d = SignalOptions::default();
        SignalOptions {
            max_key_size: self.max_key_size.unwrap_or(d.max_key_size),
            sample_size: self.sample_size.or(settings.sample_size).unwrap_or(d.sample_size),
            key_choice: self.key_choice.unwrap_or(d.key_choice),
        }
    }
}

#[derive(Args, Clone)]
struct PipelineArgs {
    #[arg(long, default_value = "niffler")]
    strategy: Strategy,
    /// Clusters kept per attribute, or `inf`.
    #[arg(long)]
    theta: Option<Theta>,
    #[arg(long)]
    cluster_threshold: Option<f64>,
    #[arg(long)]
    max_hops: Option<usize>,
    /// Join graphs to materialize.
    #[arg(long)]
    gamma: Option<usize>,
    /// Views to return.
    #[arg(short, long)]
    k: Option<usize>,
    #[command(flatten)]
    signal: SignalArgs,
}

impl PipelineArgs {
    fn config(&self, s: &Settings) -> PipelineConfig {
        let d = PipelineConfig::default();
        PipelineConfig {
            strategy: self.strategy,
            theta: self.theta.or(s.theta).unwrap_or(d.theta),
            cluster_threshold: self.cluster_threshold,
            max_hops: self.max_hops.or(s.max_hops).unwrap_or(d.max_hops),
            gamma: self.gamma.or(s.gamma).unwrap_or(d.gamma),
            k: self.k.or(s.k).unwrap_or(d.k),
            signals: self.signal.options(s),
        }
    }
}

#[derive(Args, Clone)]
struct GenArgs {
    #[arg(long)]
    truths: Option<usize>,
    #[arg(long)]
    columns: Option<usize>,
    #[arg(long)]
    hub_rows: Option<usize>,
    #[arg(long)]
    dim_rows: Option<usize>,
    #[arg(long)]
    noise_extra: Option<usize>,
    #[arg(long)]
    distractors: Option<usize>,
    #[arg(long)]
    decoys: Option<usize>,
    #[arg(long)]
    adversarial: bool,
    #[arg(long)]
    seed: Option<u64>,
}

impl GenArgs {
    fn spec(&self, s: &Settings) -> GeneratorSpec {
        let d = GeneratorSpec::default();
        GeneratorSpec {
            truths: self.truths.unwrap_or(d.truths),
            columns: self.columns.unwrap_or(d.columns),
            hub_rows: self.hub_rows.unwrap_or(d.hub_rows),
            dim_rows: self.dim_rows.unwrap_or(d.dim_rows),
            noise_extra: self.noise_extra.unwrap_or(d.noise_extra),
            distractors: self.distractors.unwrap_or(d.distractors),
            decoys: self.decoys.unwrap_or(d.decoys),
            adversarial: self.adversarial,
            seed: self.seed.or(s.seed).unwrap_or(d.seed),
        }
    }
}

#[derive(Args, Clone)]
struct WorkloadArgs {
    #[arg(long)]
    queries_per_truth: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    noise: Option<Vec<NoiseLevel>>,
    /// Example values per query column.
    #[arg(long)]
    rows: Option<usize>,
    /// Query columns (defaults to every truth column).
    #[arg(long)]
    query_columns: Option<usize>,
    #[arg(long)]
    workload_seed: Option<u64>,
}

impl WorkloadArgs {
    fn spec(&self) -> WorkloadSpec {
        let d = WorkloadSpec::default();
        WorkloadSpec {
            truths: None,
            queries_per_truth: self.queries_per_truth.unwrap_or(d.queries_per_truth),
            noise_levels: self.noise.clone().unwrap_or(d.noise_levels),
            rows: self.rows.unwrap_or(d.rows),
            columns: self.query_columns,
            seed: self.workload_seed.unwrap_or(d.seed),
        }
    }
}

fn threshold(flag: Option<f64>, s: &Settings) -> f64 {
    flag.or(s.threshold).unwrap_or(DEFAULT_THRESHOLD)
}

fn load_data(root: &Path, options: &LoadOptions) -> Result<PathlessCollection> {
    let (collection, warnings) =
        load_collection_with_warnings(root, options).with_context(|| format!("loading {}", root.display()))?;
    for w in warnings {
        log::warn!("skipped {}: {}", w.path.display(), w.reason);
    }
    log::info!("loaded {} tables from {}", collection.len(), root.display());
    Ok(collection)
}

fn index_collection(root: &Path, options: &LoadOptions, t: f64) -> Result<(PathlessCollection, DiscoveryIndex)> {
    let collection = load_data(root, options)?;
    let mut index = build_index(&collection, t)?;
    index.origin = Some(IndexOrigin {
        root: root.to_string_lossy().into_owned(),
        load: options.clone(),
    });
    Ok((collection, index))
}

fn collection_for(index: &DiscoveryIndex, data: Option<&Path>) -> Result<PathlessCollection> {
    let origin = index.origin.as_ref();
    match (data, origin) {
        (Some(d), _) => load_data(d, &origin.map(|o| o.load.clone()).unwrap_or_default()),
        (None, Some(o)) => load_data(Path::new(&o.root), &o.load),
        (None, None) => bail!("the index does not record its data directory; pass --data"),
    }
}

fn read_query(path: &Path, index: &DiscoveryIndex) -> Result<ExampleQuery> {
    ExampleQuery::from_path(path, index.normalizer()).with_context(|| format!("reading query {}", path.display()))
}

fn write_views(dir: &Path, views: &[MaterializedView]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("views.json"), serde_json::to_string_pretty(views)?)?;
    for v in views {
        let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", v.id)))?;
        w.write_record(&v.schema)?;
        for r in &v.rows {
            w.write_record(r.iter().map(|c| c.as_deref().unwrap_or("")))?;
        }
        w.flush()?;
    }
    Ok(())
}

fn read_views(dir: &Path) -> Result<Vec<MaterializedView>> {
    let path = dir.join("views.json");
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

fn print_view(v: &MaterializedView, rows: usize) {
    println!(
        "{}  overlap {}  score {:.3}  {} rows  from {}",
        v.id,
        v.overlap_score,
        v.score,
        v.rows.len(),
        v.source_tables().join(", ")
    );
    for g in &v.provenance {
        println!("    {}", g.describe());
    }
    println!("    {}", v.schema.join(" | "));
    for r in v.rows.iter().take(rows) {
        let cells: Vec<&str> = r.iter().map(|c| c.as_deref().unwrap_or("")).collect();
        println!("    {}", cells.join(" | "));
    }
    if v.rows.len() > rows {
        println!("    ... {} more", v.rows.len() - rows);
    }
}

fn print_outcome(out: &QueryOutcome) {
    if let Some(d) = &out.diagnostic {
        println!("{d}");
        return;
    }
    println!(
        "{} candidate groups, {} join graphs, {} views, {} after reduction, {} signals",
        out.stats.combinations,
        out.graphs.len(),
        out.views.len(),
        out.reduction.views.len(),
        out.bundle.signals.len()
    );
    for v in &out.top {
        print_view(v, 5);
    }
}

fn write_sweep(out: &Path, report: &SweepReport) -> Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("sweep.csv"), report.to_csv()?)?;
    let mut totals: std::collections::BTreeMap<(String, Strategy), (usize, usize, usize)> = Default::default();
    let mut order = Vec::new();
    for r in &report.records {
        let key = (r.value.clone(), r.strategy);
        if !totals.contains_key(&key) {
            order.push(key.clone());
        }
        let e = totals.entry(key).or_default();
        e.0 += r.join_graphs;
        e.1 += r.views;
        e.2 += usize::from(r.hit);
    }
    println!("value\tstrategy\tjoin_graphs\tviews\thits");
    for key in order {
        let (g, v, h) = totals[&key];
        println!("{}\t{}\t{g}\t{v}\t{h}", key.0, key.1);
    }
    Ok(())
}

fn parse_values<T: std::str::FromStr>(values: &Option<Vec<String>>, default: Vec<T>) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    match values {
        None => Ok(default),
        Some(vs) => vs
            .iter()
            .map(|v| v.trim().parse::<T>().map_err(|e| anyhow::anyhow!("bad sweep value {v:?}: {e}")))
            .collect(),
    }
}

fn synthetic(gen: &GenArgs, data: Option<&Path>, settings: &Settings) -> Result<SyntheticCollection> {
    match data {
        Some(dir) => {
            let lake = dir.join("lake");
            let collection = load_data(&lake, &LoadOptions::default())?;
            Ok(SyntheticCollection::from_parts(collection, dir.join(TRUTH_FILE))?)
        }
        None => Ok(generate_collection(&gen.spec(settings))?),
    }
}

fn run(cli: Cli) -> Result<()> {
    let settings = match &cli.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    match cli.command {
        Command::Index {
            data,
            out,
            threshold: t,
            load,
        } => {
            let start = Instant::now();
            let (collection, index) = index_collection(&data, &load.options()?, threshold(t, &settings))?;
            save_index(&index, &out)?;
            println!(
                "indexed {} tables, {} columns, {} edges in {:.2}s -> {}",
                collection.len(),
                index.profiles().len(),
                index.edges().len(),
                start.elapsed().as_secs_f64(),
                out.display()
            );
        }
        Command::Select { index, query, pipeline } => {
            let index = load_index(&index)?;
            let query = read_query(&query, &index)?;
            let cfg = pipeline.config(&settings);
            for set in select_candidates(&query, &index, cfg.strategy, cfg.theta, cfg.cluster_threshold)? {
                println!("{} ({} columns)", set.attribute, set.len());
                for c in &set.clusters {
                    let mark = if set.selected_clusters.contains(&c.id) { "*" } else { " " };
                    println!("  {mark} cluster {} score {}", c.id, c.score);
                    for (col, n) in &c.members {
                        println!("      {col}  overlap {n}");
                    }
                }
                if set.clusters.is_empty() {
                    for (col, n) in &set.columns {
                        println!("    {col}  overlap {n}");
                    }
                }
            }
        }
        Command::Search {
            index,
            query,
            data,
            views_out,
            show,
            pipeline,
        } => {
            let index = load_index(&index)?;
            let collection = collection_for(&index, data.as_deref())?;
            let query = read_query(&query, &index)?;
            let out = run_query(&collection, &index, &query, &pipeline.config(&settings))?;
            if let Some(d) = &out.diagnostic {
                println!("{d}");
            }
            println!("{} join graphs ({} combinations pruned)", out.graphs.len(), out.stats.pruned);
            for g in out.graphs.iter().take(show) {
                println!("  {:.4}  {}", g.score, g.describe());
            }
            if let Some(dir) = views_out {
                write_views(&dir, &out.views)?;
                println!("wrote {} views to {}", out.views.len(), dir.display());
            }
        }
        Command::Signals {
            views,
            out,
            query,
            signal,
        } => {
            let vs = read_views(&views)?;
            let query = match &query {
                Some(p) => Some(ExampleQuery::from_path(p, &Default::default())?),
                None => None,
            };
            let (bundle, _) = signal_pipeline(&vs, query.as_ref(), &signal.options(&settings));
            bundle.save(&out)?;
            let c = &bundle.reduction;
            println!(
                "{} views -> {} after compatible, {} after contained, {} after complementary; {} signals -> {}",
                c.input,
                c.after_compatible,
                c.after_contained,
                c.after_complementary,
                bundle.signals.len(),
                out.display()
            );
        }
        Command::Interact { bundle } => {
            let bundle = SignalBundle::load(&bundle)?;
            let stdin = io::stdin();
            run_stepper(&bundle, stdin.lock(), io::stdout())?;
        }
        Command::Query {
            query,
            data,
            index,
            threshold: t,
            interactive,
            out,
            load,
            pipeline,
        } => {
            let (collection, index) = match (index, data) {
                (Some(i), data) => {
                    let index = load_index(&i)?;
                    let c = collection_for(&index, data.as_deref())?;
                    (c, index)
                }
                (None, Some(d)) => index_collection(&d, &load.options()?, threshold(t, &settings))?,
                (None, None) => bail!("pass --data or --index"),
            };
            let query = read_query(&query, &index)?;
            let outcome = run_query(&collection, &index, &query, &pipeline.config(&settings))?;
            print_outcome(&outcome);
            if let Some(dir) = &out {
                write_views(dir, &outcome.views)?;
                outcome.bundle.save(dir.join("bundle.json"))?;
            }
            if interactive && outcome.diagnostic.is_none() {
                let stdin = io::stdin();
                let left = run_stepper(&outcome.bundle, stdin.lock(), io::stdout())?;
                for v in outcome.reduction.views.iter().filter(|v| left.contains(&v.id)) {
                    print_view(v, 5);
                }
            }
        }
        Command::Gen { out, gen } => {
            let spec = gen.spec(&settings);
            let synth = generate_collection(&spec)?;
            synth.write_to(out.join("lake"), out.join(TRUTH_FILE))?;
            println!(
                "wrote {} tables and {} ground truths to {}",
                synth.collection.len(),
                synth.truths.len(),
                out.display()
            );
        }
        Command::Bench {
            out,
            data,
            threshold: t,
            strategies,
            gen,
            workload,
            pipeline,
        } => {
            let synth = synthetic(&gen, data.as_deref(), &settings)?;
            let index = build_index(&synth.collection, threshold(t, &settings))?;
            let queries = generate_workload(&synth, &workload.spec())?;
            let config = BenchConfig {
                pipeline: pipeline.config(&settings),
                strategies: strategies.unwrap_or_else(|| Strategy::ALL.to_vec()),
                ..BenchConfig::default()
            };
            let report = run_benchmark(&synth, &index, &queries, &config)?;
            report.write_to(&out)?;
            println!("noise\tstrategy\tqueries\thit_ratio\tjoin_graphs\tviews");
            for s in &report.summary {
                println!(
                    "{}\t{}\t{}\t{:.3}\t{:.1}\t{:.1}",
                    s.noise, s.strategy, s.queries, s.hit_ratio, s.mean_join_graphs, s.mean_views
                );
            }
            println!("reports in {}", out.display());
        }
        Command::Sweep {
            kind,
            out,
            values,
            threshold: t,
            strategies,
            gen,
            workload,
            pipeline,
        } => {
            let mut spec = gen.spec(&settings);
            let config = BenchConfig {
                pipeline: pipeline.config(&settings),
                strategies: strategies.unwrap_or_else(|| Strategy::ALL.to_vec()),
                ..BenchConfig::default()
            };
            let wspec = workload.spec();
            let report = match kind {
                SweepKind::Threshold => {
                    let ts = parse_values(&values, vec![0.8, 0.7, 0.6, 0.5])?;
                    let synth = generate_collection(&spec)?;
                    let queries = generate_workload(&synth, &wspec)?;
                    threshold_sweep(&synth, &queries, &ts, &config)?
                }
                SweepKind::Rows => {
                    let ls = parse_values(&values, vec![3usize, 6, 9])?;
                    let need = ls.iter().map(|l| l - l / 3).max().unwrap_or(0);
                    spec.noise_extra = spec.noise_extra.max(need);
                    let synth = generate_collection(&spec)?;
                    let index = build_index(&synth.collection, threshold(t, &settings))?;
                    rows_sweep(&synth, &index, &wspec, &ls, &config)?
                }
                SweepKind::Columns => {
                    let ws = parse_values(&values, vec![2usize, 3, 4])?;
                    spec.columns = spec.columns.max(ws.iter().copied().max().unwrap_or(2));
                    let synth = generate_collection(&spec)?;
                    let index = build_index(&synth.collection, threshold(t, &settings))?;
                    let queries = generate_workload(&synth, &WorkloadSpec { columns: None, ..wspec })?;
                    columns_sweep(&synth, &index, &queries, &ws, &config)?
                }
            };
            write_sweep(&out, &report)?;
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

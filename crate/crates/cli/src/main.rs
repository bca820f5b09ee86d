use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sunflower_core::bounds::{self, BoundReport, CSV_HEADER};
use sunflower_core::search::{self, SearchConfig, SearchMode};
use sunflower_core::setsys::{self, AnyFamily, Setting, SubsetVector};
use sunflower_core::tensor::{self, CertifyOptions, Limits, Space, TensorError, VerifyMode};

#[derive(Parser)]
#[command(name = "sunflower", version, about = "Sunflower-free families, slice-rank certificates and bounds")]
struct Cli {
    /// Worker threads for search and verification.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report whether a family is sunflower-free, with the least witness triple.
    Detect(FamilyArgs),
    /// Build and check the slice-rank certificate for a sunflower-free family.
    Certify {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Print bound tables and capacity constants.
    Bounds {
        #[arg(long)]
        n: Option<u64>,
        #[arg(long = "D")]
        d: Option<u32>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check the slice decomposition of T against its product formula.
    VerifyTensor {
        #[arg(long, value_enum)]
        setting: TensorSetting,
        #[arg(long)]
        n: usize,
        #[arg(long = "D")]
        d: Option<u32>,
        #[arg(long, conflicts_with = "samples")]
        exhaustive: bool,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exact maximum (or a greedy lower bound) for small instances.
    Search {
        #[arg(long, value_enum)]
        setting: SearchSetting,
        #[arg(long)]
        n: usize,
        #[arg(long = "D")]
        d: Option<u32>,
        /// Node budget for the exact search.
        #[arg(long)]
        budget: Option<u64>,
        /// Wall-clock budget in seconds.
        #[arg(long)]
        time: Option<u64>,
        #[arg(long)]
        no_symmetry: bool,
        /// Randomized greedy construction instead of exact search.
        #[arg(long)]
        greedy: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Pair-encode a binary family and capset-check every layer.
    Encode(FamilyArgs),
}

#[derive(Args)]
struct FamilyArgs {
    file: PathBuf,
    /// Read members as mod-D vectors.
    #[arg(long = "D")]
    d: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TensorSetting {
    Binary,
    #[value(name = "mod-d")]
    ModD,
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchSetting {
    Binary,
    #[value(name = "mod-d")]
    ModD,
    Capset,
}

/// Exit status plus message for anything that did not complete normally.
enum Failure {
    /// Checked and found false.
    False(String),
    /// Bad input or a resource cap.
    Usage(String),
}

type Outcome = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn load_family(args: &FamilyArgs) -> Result<AnyFamily, Failure> {
    let text = fs::read_to_string(&args.file).map_err(|e| usage(format!("{}: {e}", args.file.display())))?;
    setsys::parse_family(&text, args.d).map_err(|e| usage(format!("{}: {e}", args.file.display())))
}

fn write_file(path: &Path, contents: &str) -> Outcome {
    fs::write(path, contents).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn detect(args: &FamilyArgs) -> Outcome {
    let family = load_family(args)?;
    let witness = match &family {
        AnyFamily::Binary(f) => setsys::family_is_sunflower_free(f).witness.map(|w| w.map(|p| format!("{p:?}"))),
        AnyFamily::ModD(f) => setsys::family_is_sunflower_free(f).witness.map(|w| w.map(|p| format!("({p})"))),
    };
    println!("setting: {}", family.setting());
    println!("n: {}", family.n());
    println!("size: {}", family.len());
    match witness {
        None => {
            println!("sunflower-free: true");
            Ok(())
        }
        Some([a, b, c]) => {
            println!("sunflower-free: false");
            println!("witness: {a} {b} {c}");
            Err(Failure::False("family contains a sunflower".into()))
        }
    }
}

fn tensor_failure(e: TensorError) -> Failure {
    match e {
        TensorError::NotSunflowerFree(_) | TensorError::NotDiagonal(_) | TensorError::DecompositionMismatch(_) => {
            Failure::False(e.to_string())
        }
        other => usage(other),
    }
}

fn certify(args: &FamilyArgs, json: Option<&Path>) -> Outcome {
    let family = load_family(args)?;
    let cert = tensor::certify_family(&family, &CertifyOptions::default()).map_err(tensor_failure)?;
    println!("setting: {}", cert.setting);
    println!("n: {}", cert.n);
    if let Some(d) = cert.d {
        println!("D: {d}");
    }
    println!("family_size: {}", cert.family_size);
    println!("diagonal: {}", cert.diagonal_ok);
    println!("slice_count: {}", cert.slice_count);
    println!("closed_form_bound: {}", cert.closed_form_bound);
    println!("verification: {}", cert.verification);
    println!("conclusion: {}", cert.conclusion);
    if let Some(path) = json {
        write_file(path, &(cert.to_json() + "\n"))?;
    }
    Ok(())
}

fn bounds_cmd(n: Option<u64>, d: Option<u32>, csv_out: Option<&Path>) -> Outcome {
    if let Some(d) = d {
        if d < 3 {
            return Err(usage(format!("D must be at least 3, got {d}")));
        }
    }
    let mut rows: Vec<BoundReport> = Vec::new();
    match n {
        Some(n) => {
            rows.extend(bounds::bound_table(n, d));
            if let Some(d) = d {
                let check = bounds::chain_inequality_check(n, d);
                println!("chain inequality (n={n}, D={d}): {check}");
            }
        }
        None => {
            if let Some(d) = d {
                rows.push(bounds::c_d(d));
            }
            rows.extend(bounds::capacities_summary());
        }
    }
    let mut table = csv::WriterBuilder::new().delimiter(b'\t').from_writer(vec![]);
    table.write_record(CSV_HEADER).map_err(usage)?;
    for r in &rows {
        table.write_record(r.csv_row()).map_err(usage)?;
    }
    print!("{}", String::from_utf8(table.into_inner().map_err(usage)?).map_err(usage)?);
    if let Some(path) = csv_out {
        let mut w = csv::Writer::from_path(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        w.write_record(CSV_HEADER).map_err(usage)?;
        for r in &rows {
            w.write_record(r.csv_row()).map_err(usage)?;
        }
        w.flush().map_err(usage)?;
    }
    Ok(())
}

fn verify_tensor(setting: TensorSetting, n: usize, d: Option<u32>, exhaustive: bool, samples: Option<u64>, seed: u64) -> Outcome {
    let setting = match (setting, d) {
        (TensorSetting::Binary, None) => Setting::Binary,
        (TensorSetting::Binary, Some(_)) => return Err(usage("--D only applies to --setting mod-d")),
        (TensorSetting::ModD, Some(d)) => Setting::ModD(d),
        (TensorSetting::ModD, None) => return Err(usage("--setting mod-d needs --D")),
    };
    let space = Space::for_setting(setting, n).map_err(usage)?;
    let limits = Limits::default();
    let ts = tensor::build_term_sum(space, &limits).map_err(usage)?;
    let terms = ts.len();
    let dec = tensor::decompose(ts).map_err(tensor_failure)?;
    let mode = if exhaustive {
        VerifyMode::Exhaustive
    } else {
        VerifyMode::Sampled { samples: samples.unwrap_or(10_000), seed }
    };
    let out = tensor::verify_decomposition(&dec, &mode, &limits).map_err(usage)?;
    let bound = match setting {
        Setting::Binary => bounds::weighted_binomial_sum(n as u64, n as u64 / 3, 1) * 3u32,
        Setting::ModD(d) => bounds::thm2_counts(n as u64, d),
    };
    println!("setting: {setting}");
    println!("n: {n}");
    println!("terms: {terms}");
    println!("slices: {}", dec.slice_count());
    println!("slice_bound: {bound}");
    println!("max_factor_measure: {} (threshold {})", dec.max_factor_measure(), space.threshold());
    println!("points_checked: {}", out.checked);
    if !out.ok {
        let w = out.witness.expect("mismatch carries a witness");
        println!("mismatch: {:?} {:?} {:?}", space.decode(w[0]), space.decode(w[1]), space.decode(w[2]));
        return Err(Failure::False("decomposition does not reconstruct T".into()));
    }
    if num_bigint::BigUint::from(dec.slice_count()) > bound {
        return Err(Failure::False("slice count exceeds the closed-form bound".into()));
    }
    println!("verified: true");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn search_cmd(
    setting: SearchSetting,
    n: usize,
    d: Option<u32>,
    budget: Option<u64>,
    time: Option<u64>,
    no_symmetry: bool,
    greedy: bool,
    seed: u64,
    workers: usize,
    json: Option<&Path>,
) -> Outcome {
    let mode = match (setting, d) {
        (SearchSetting::Binary, None) => SearchMode::Binary,
        (SearchSetting::ModD, Some(d)) => SearchMode::ModD(d),
        (SearchSetting::Capset, None | Some(3)) => SearchMode::Capset,
        (SearchSetting::Binary, Some(_)) => return Err(usage("--D only applies to mod-d and capset")),
        (SearchSetting::ModD, None) => return Err(usage("--setting mod-d needs --D")),
        (SearchSetting::Capset, Some(d)) => return Err(usage(format!("capset mode forces D=3, got {d}"))),
    };
    if greedy {
        let family = search::greedy_witness(mode, n, seed).map_err(usage)?;
        println!("greedy size: {}", family.len());
        print!("{}", family.to_text());
        return Ok(());
    }
    let mut cfg = SearchConfig::new(mode, n).with_symmetry(!no_symmetry).with_workers(workers);
    if let Some(b) = budget {
        if b == 0 {
            return Err(usage("--budget must be positive"));
        }
        cfg = cfg.with_node_budget(b);
    }
    if let Some(t) = time {
        if t == 0 {
            return Err(usage("--time must be positive"));
        }
        cfg.time_budget = Some(Duration::from_secs(t));
    }
    let result = search::max_free_family(&cfg).map_err(usage)?;
    let report = result.to_json();
    println!("{report}");
    print!("{}", search::validate_against_bounds(&result).table());
    if let Some(path) = json {
        write_file(path, &(report + "\n"))?;
    }
    if !search::witness_is_valid(&result) {
        return Err(Failure::False("witness failed the freeness check".into()));
    }
    if !search::validate_against_bounds(&result).all_hold() {
        return Err(Failure::False("maximum exceeds a proved bound".into()));
    }
    Ok(())
}

fn encode(args: &FamilyArgs) -> Outcome {
    let family = match load_family(args)? {
        AnyFamily::Binary(f) => f,
        AnyFamily::ModD(_) => return Err(usage("encode expects a binary family")),
    };
    let encoded = setsys::pair_encode(&family).map_err(usage)?;
    let n = encoded.n();
    if n > 20 {
        return Err(usage(format!("2^{n} layers is above the cap of 2^20")));
    }
    println!("encoded over {{0,1,2,3}}^{n}:");
    for m in encoded.members() {
        println!("  {}", m.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","));
    }
    let mut all_ok = true;
    for x in 0..1u64 << n {
        let x = SubsetVector::from_word(n, x);
        let layer = setsys::layer_extract(&encoded, &x).map_err(usage)?;
        if layer.is_empty() {
            continue;
        }
        let verdict = setsys::is_capset(&layer).map_err(usage)?;
        all_ok &= verdict.free;
        println!("layer {x}: size {} capset {}", layer.len(), verdict.free);
        if let Some([a, b, c]) = verdict.witness {
            println!("  progression: ({a}) ({b}) ({c})");
        }
    }
    if all_ok {
        Ok(())
    } else {
        Err(Failure::False("a layer is not a capset".into()))
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Detect(args) => detect(&args),
        Command::Certify { family, json } => certify(&family, json.as_deref()),
        Command::Bounds { n, d, csv } => bounds_cmd(n, d, csv.as_deref()),
        Command::VerifyTensor { setting, n, d, exhaustive, samples, seed } => {
            verify_tensor(setting, n, d, exhaustive, samples, seed)
        }
        Command::Search { setting, n, d, budget, time, no_symmetry, greedy, seed, json } => {
            search_cmd(setting, n, d, budget, time, no_symmetry, greedy, seed, cli.workers, json.as_deref())
        }
        Command::Encode(args) => encode(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers.max(1);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().expect("thread pool");
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::False(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

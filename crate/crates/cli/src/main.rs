//! Command line front end. Each subcommand maps onto one library operation;
//! outputs are deterministic given the recorded config, human lines go to
//! stdout, and JSON envelopes (with an embedded config and content hash) go
//! to --out files or stdout where noted.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use covertrace::extremal::extremal_subgraph;
use covertrace::graphs::{
    abelian_cover, homology_basis, mod_p_cover, rose, rose_map, Cover,
};
use covertrace::group_ring::Character;
use covertrace::nilpotent::{enfeoffment_level, EnfeoffmentLevel};
use covertrace::pipeline::{
    certificate_hash, matrix_from_strings, report_trace_budget, run_search, verify_certificate,
    Certificate, Config, SearchOutcome,
};
use covertrace::shadow::{empirical_f_shadow, hausdorff_sq, shadow_phi};
use covertrace::spectra::{complex_spectral_radius, integer_order, InfiniteReason, OrderVerdict};
use covertrace::transition::{build_transition, matrix as transition_matrix, trace_sum_tk};
use covertrace::{FreeAut, Word};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(name = "covertrace", version, about = "Exact homology actions of free-group automorphisms on finite covers")]
struct Cli {
    /// worker threads for parallel scans (0 = all logical cores)
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// seed for the randomized empirical-shadow word choice
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Group-ring transition matrix of an automorphism power
    Matrix {
        aut: PathBuf,
        #[arg(long, default_value_t = 1)]
        power: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Twisted k-th power-sum trace of the transition matrix
    Trace {
        aut: PathBuf,
        #[arg(long, default_value_t = 1)]
        power: usize,
        /// restrict to the extremal subgraph at this hull vertex, e.g. "-1,0"
        #[arg(long)]
        vertex: Option<String>,
        #[arg(long, default_value_t = 1_000_000)]
        cycle_cap: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vertices of the cycle-translation hull, plus an optional empirical
    /// comparison hull from an iterated word
    Shadow {
        aut: PathBuf,
        /// also build the word hull of f^k(w) scaled by 1/k
        #[arg(long)]
        empirical: Option<usize>,
        /// word for the empirical hull (random reduced word when omitted)
        #[arg(long)]
        word: Option<String>,
        #[arg(long, default_value_t = 1_000_000)]
        cycle_cap: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extremal subgraph at a hull vertex
    Extremal {
        aut: PathBuf,
        #[arg(long)]
        vertex: String,
        #[arg(long, default_value_t = 1_000_000)]
        cycle_cap: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Nilpotent enfeoffment level of the extremal subgraph at a vertex
    Enfeoff {
        aut: PathBuf,
        #[arg(long)]
        vertex: String,
        #[arg(long = "classmax", default_value_t = 4)]
        class_max: usize,
        #[arg(long = "kmax", default_value_t = 8)]
        k_max: usize,
        #[arg(long, default_value_t = 1_000_000)]
        cycle_cap: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a mod-p cover of a rose (modulus 1 = trivial cover) as JSON
    Covers {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        modulus: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectral radius of the transition matrix specialized at a character
    Specialize {
        aut: PathBuf,
        /// rotation numbers, e.g. "1/2,0"
        #[arg(long = "char")]
        character: String,
        #[arg(long, default_value_t = 1)]
        power: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact finite/infinite order verdict for an integer matrix JSON
    Order {
        matrix: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search covering towers for an infinite-order homology action
    Search {
        aut: PathBuf,
        #[arg(long, value_delimiter = ',')]
        primes: Option<Vec<u64>>,
        #[arg(long = "kmax")]
        k_max: Option<usize>,
        #[arg(long = "classmax")]
        class_max: Option<usize>,
        #[arg(long)]
        stages: Option<usize>,
        #[arg(long)]
        edge_cap: Option<u64>,
        #[arg(long)]
        cycle_cap: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify a certificate file
    Certify { cert: PathBuf },
    /// Trace-budget report for a power of the map lifted to a cover
    Report {
        aut: PathBuf,
        #[arg(long)]
        cover: PathBuf,
        #[arg(long, default_value_t = 1)]
        power: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        // the library's parallel scans read this before building their pool
        std::env::set_var("RAYON_NUM_THREADS", cli.jobs.to_string());
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn read_aut(path: &Path) -> Result<FreeAut> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    FreeAut::parse_text(&text).with_context(|| format!("parsing {}", path.display()))
}

fn parse_rationals(s: &str) -> Result<Vec<BigRational>> {
    s.split(',')
        .map(|part| {
            let part = part.trim();
            BigRational::from_str(part).map_err(|e| anyhow!("bad rational {part:?}: {e}"))
        })
        .collect()
}

fn format_vertex(v: &[BigRational]) -> String {
    let coords: Vec<String> = v.iter().map(|q| q.to_string()).collect();
    format!("({})", coords.join(","))
}

fn hash_value(envelope: &Value) -> Result<String> {
    let mut blank = envelope.clone();
    blank["hash"] = json!("");
    let text = serde_json::to_string(&blank)?;
    let digest = Sha256::digest(text.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Wrap a result in the standard envelope, stamp the content hash, and
/// write it to `out`. Commands whose primary product is the JSON itself
/// (covers, exhausted searches) print it to stdout when no path is given;
/// the rest stay human-readable unless --out asks for the record.
fn emit(
    command: &str,
    config: &Config,
    result: Value,
    out: Option<&Path>,
    stdout_fallback: bool,
) -> Result<()> {
    let mut envelope = json!({
        "command": command,
        "config": config,
        "result": result,
        "hash": "",
    });
    let h = hash_value(&envelope)?;
    envelope["hash"] = json!(h);
    let text = serde_json::to_string_pretty(&envelope)?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .with_context(|| format!("writing {}", path.display()))?,
        None if stdout_fallback => println!("{text}"),
        None => {}
    }
    Ok(())
}

fn check_envelope_hash(envelope: &Value, what: &str) -> Result<()> {
    if let Some(stated) = envelope.get("hash").and_then(|h| h.as_str()) {
        let actual = hash_value(envelope)?;
        if stated != actual {
            bail!("refusing {what}: content hash mismatch");
        }
    }
    Ok(())
}

struct ShadowData {
    t: covertrace::transition::TransitionGraph,
    report: covertrace::shadow::ShadowReport,
    /// polytope vertex indices ordered by first witnessing cycle
    order: Vec<usize>,
}

fn shadow_data(f: &FreeAut, power: usize, cycle_cap: u64) -> Result<ShadowData> {
    let g = rose(f.rank());
    let basis = homology_basis(&g)?;
    let map = rose_map(&f.power(power));
    let t = build_transition(&g, &basis, &map)?;
    let report = shadow_phi(&t, cycle_cap)?;
    let mut order: Vec<usize> = (0..report.polytope.vertices().len()).collect();
    let first_witness =
        |vi: usize| report.witnesses[vi].iter().min().copied().unwrap_or(usize::MAX);
    order.sort_by_key(|&vi| (first_witness(vi), vi));
    Ok(ShadowData { t, report, order })
}

fn vertex_and_support(
    data: &ShadowData,
    vertex: &str,
) -> Result<(Vec<BigRational>, Vec<BigRational>)> {
    let v = parse_rationals(vertex)?;
    let poly = &data.report.polytope;
    let vi = poly.vertex_index(&v).ok_or_else(|| {
        let listed: Vec<String> = data
            .order
            .iter()
            .map(|&i| format_vertex(&poly.vertices()[i]))
            .collect();
        anyhow!(
            "{} is not a hull vertex; vertices are {}",
            format_vertex(&v),
            listed.join(" ")
        )
    })?;
    Ok((v, poly.support_at(vi).to_vec()))
}

fn random_reduced_word(rank: usize, len: usize, seed: u64) -> Word {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut letters: Vec<i32> = Vec::with_capacity(len);
    while letters.len() < len {
        let gen = rng.gen_range(1..=rank as i32);
        let signed = if rng.gen_bool(0.5) { gen } else { -gen };
        if letters.last() == Some(&-signed) {
            continue;
        }
        letters.push(signed);
    }
    Word::from_letters(&letters)
}

fn order_human(verdict: &OrderVerdict) -> String {
    match verdict {
        OrderVerdict::Finite { order } => format!("finite of order {order}"),
        OrderVerdict::Infinite { reason, .. } => match reason {
            InfiniteReason::NonCyclotomicFactor => {
                "infinite (characteristic factor is not cyclotomic)".to_string()
            }
            InfiniteReason::NonSemisimpleCyclotomicPart => {
                "infinite (cyclotomic part is not semisimple)".to_string()
            }
        },
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut config = Config::default();
    config.seed = cli.seed;

    match cli.command {
        Command::Matrix { aut, power, out } => {
            let f = read_aut(&aut)?;
            let g = rose(f.rank());
            let basis = homology_basis(&g)?;
            let t = build_transition(&g, &basis, &rose_map(&f.power(power)))?;
            let a = transition_matrix(&t, None);
            let rows: Vec<Vec<String>> = (0..a.rows())
                .map(|i| (0..a.cols()).map(|j| a.get(i, j).to_string()).collect())
                .collect();
            for row in &rows {
                println!("[{}]", row.join(", "));
            }
            emit("matrix", &config, json!({ "power": power, "rows": rows }), out.as_deref(), false)?;
        }
        Command::Trace { aut, power, vertex, cycle_cap, out } => {
            let f = read_aut(&aut)?;
            config.cycle_cap = cycle_cap;
            let data = shadow_data(&f, 1, cycle_cap)?;
            let sigma = f.abelianization_matrix();
            let sub = match &vertex {
                Some(s) => {
                    let (v, omega) = vertex_and_support(&data, s)?;
                    Some(extremal_subgraph(&data.t, &v, &omega, cycle_cap)?.edges)
                }
                None => None,
            };
            let trace = trace_sum_tk(&data.t, &sigma, power, sub.as_ref())?;
            println!("{trace}");
            emit(
                "trace",
                &config,
                json!({ "power": power, "vertex": vertex, "trace": trace }),
                out.as_deref(),
                false,
            )?;
        }
        Command::Shadow { aut, empirical, word, cycle_cap, out } => {
            let f = read_aut(&aut)?;
            config.cycle_cap = cycle_cap;
            let data = shadow_data(&f, 1, cycle_cap)?;
            let verts: Vec<String> = data
                .order
                .iter()
                .map(|&vi| format_vertex(&data.report.polytope.vertices()[vi]))
                .collect();
            println!("{}", verts.join(" "));
            let mut result = json!({
                "vertices": data.order.iter()
                    .map(|&vi| data.report.polytope.vertices()[vi]
                        .iter()
                        .map(|q| q.to_string())
                        .collect::<Vec<String>>())
                    .collect::<Vec<_>>(),
                "cycles": data.report.cycles.len(),
            });
            if let Some(k) = empirical {
                let w = match &word {
                    Some(s) => {
                        let w = Word::parse(s)?;
                        if w.letters().iter().any(|l| l.unsigned_abs() as usize > f.rank()) {
                            bail!("word {w} uses generators beyond rank {}", f.rank());
                        }
                        w
                    }
                    None => random_reduced_word(f.rank(), 6, cli.seed),
                };
                let emp = empirical_f_shadow(&f, &w, k, 10_000_000)?;
                let d2 = hausdorff_sq(&emp, &data.report.polytope)?;
                println!("empirical word {w}, k = {k}: hausdorff_sq = {d2}");
                result["empirical"] = json!({
                    "word": w.to_string(),
                    "k": k,
                    "hausdorff_sq": d2.to_string(),
                });
            }
            emit("shadow", &config, result, out.as_deref(), false)?;
        }
        Command::Extremal { aut, vertex, cycle_cap, out } => {
            let f = read_aut(&aut)?;
            config.cycle_cap = cycle_cap;
            let data = shadow_data(&f, 1, cycle_cap)?;
            let (v, omega) = vertex_and_support(&data, &vertex)?;
            let sub = extremal_subgraph(&data.t, &v, &omega, cycle_cap)?;
            let edges: Vec<usize> = sub.edges.0.iter().copied().collect();
            let listed: Vec<String> = edges
                .iter()
                .map(|&ei| {
                    let e = data.t.edge(ei);
                    format!(
                        "e{ei}: {} -> {} sign {} translation ({})",
                        e.src,
                        e.tgt,
                        e.sign,
                        e.translation
                            .iter()
                            .map(|x| x.to_string())
                            .collect::<Vec<_>>()
                            .join(",")
                    )
                })
                .collect();
            println!(
                "extremal subgraph at {}: {} of {} transition edges",
                format_vertex(&v),
                edges.len(),
                data.t.num_edges()
            );
            for line in &listed {
                println!("{line}");
            }
            emit(
                "extremal",
                &config,
                json!({ "vertex": vertex, "edges": edges }),
                out.as_deref(),
                false,
            )?;
        }
        Command::Enfeoff { aut, vertex, class_max, k_max, cycle_cap, out } => {
            let f = read_aut(&aut)?;
            config.class_max = class_max;
            config.k_max = k_max;
            config.cycle_cap = cycle_cap;
            let data = shadow_data(&f, 1, cycle_cap)?;
            let (v, omega) = vertex_and_support(&data, &vertex)?;
            let sub = extremal_subgraph(&data.t, &v, &omega, cycle_cap)?;
            let level = enfeoffment_level(&data.t, &sub.edges, class_max, k_max)?;
            let human = match level {
                EnfeoffmentLevel::Level(i) => format!("level {i}"),
                EnfeoffmentLevel::Exceeded => "exceeded".to_string(),
            };
            println!("{human}");
            emit(
                "enfeoff",
                &config,
                json!({ "vertex": vertex, "level": level }),
                out.as_deref(),
                false,
            )?;
        }
        Command::Covers { rank, modulus, out } => {
            if rank == 0 {
                bail!("rank must be positive");
            }
            let g = rose(rank);
            let basis = homology_basis(&g)?;
            let cover = if modulus <= 1 {
                abelian_cover(&g, &basis, &[], &[])?
            } else {
                mod_p_cover(&g, &basis, modulus)?
            };
            let h1 = homology_basis(cover.total())?.rank();
            println!(
                "mod-{modulus} cover of rose({rank}): {} sheets, {} edges, H1 rank {}, regular: {}",
                cover.sheets(),
                cover.total().num_edges(),
                h1,
                cover.is_regular()
            );
            emit(
                "covers",
                &config,
                json!({ "rank": rank, "modulus": modulus, "cover": cover }),
                out.as_deref(),
                true,
            )?;
        }
        Command::Specialize { aut, character, power, out } => {
            let f = read_aut(&aut)?;
            let rots = parse_rationals(&character)?;
            if rots.len() != f.rank() {
                bail!(
                    "character has {} rotations but the map has rank {}",
                    rots.len(),
                    f.rank()
                );
            }
            let g = rose(f.rank());
            let basis = homology_basis(&g)?;
            let t = build_transition(&g, &basis, &rose_map(&f.power(power)))?;
            let a = transition_matrix(&t, None);
            let psi = Character::new(rots);
            let s = a.specialize(&psi);
            let radius = complex_spectral_radius(&s)?;
            if (radius - radius.round()).abs() < 1e-9 {
                println!("{}", radius.round() as i64);
            } else {
                println!("{radius:.9}");
            }
            emit(
                "specialize",
                &config,
                json!({ "character": character, "power": power, "radius": radius }),
                out.as_deref(),
                false,
            )?;
        }
        Command::Order { matrix, out } => {
            let text = std::fs::read_to_string(&matrix)
                .with_context(|| format!("reading {}", matrix.display()))?;
            let value: Value = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", matrix.display()))?;
            let rows_value = match &value {
                Value::Array(_) => &value,
                Value::Object(map) => map
                    .get("matrix")
                    .ok_or_else(|| anyhow!("object has no \"matrix\" field"))?,
                _ => bail!("expected a JSON array of rows or an object with a matrix field"),
            };
            let rows: Vec<Vec<String>> = rows_value
                .as_array()
                .ok_or_else(|| anyhow!("matrix is not an array"))?
                .iter()
                .map(|row| {
                    row.as_array()
                        .ok_or_else(|| anyhow!("matrix row is not an array"))?
                        .iter()
                        .map(|cell| match cell {
                            Value::Number(n) if n.is_i64() || n.is_u64() => Ok(n.to_string()),
                            Value::String(s) => Ok(s.clone()),
                            other => Err(anyhow!("matrix entry {other} is not an integer")),
                        })
                        .collect()
                })
                .collect::<Result<_>>()?;
            let m = matrix_from_strings(&rows)?;
            if m.rows() != m.cols() {
                bail!("matrix is {}x{}, not square", m.rows(), m.cols());
            }
            let verdict = integer_order(&m);
            println!("{}", order_human(&verdict));
            emit("order", &config, json!({ "verdict": verdict }), out.as_deref(), false)?;
        }
        Command::Search {
            aut,
            primes,
            k_max,
            class_max,
            stages,
            edge_cap,
            cycle_cap,
            out,
        } => {
            let f = read_aut(&aut)?;
            if let Some(p) = primes {
                config.primes = p;
            }
            if let Some(k) = k_max {
                config.k_max = k;
            }
            if let Some(c) = class_max {
                config.class_max = c;
            }
            if let Some(s) = stages {
                config.max_stages = s;
            }
            if let Some(e) = edge_cap {
                config.edge_cap = e;
            }
            if let Some(c) = cycle_cap {
                config.cycle_cap = c;
            }
            match run_search(&f, &config)? {
                SearchOutcome::Certified(cert) => {
                    let text = serde_json::to_string_pretty(&cert)?;
                    match out.as_deref() {
                        Some(path) => {
                            std::fs::write(path, text + "\n")
                                .with_context(|| format!("writing {}", path.display()))?;
                            println!(
                                "certificate: power {} on a {}-stage tower, {}; written to {}",
                                cert.power,
                                cert.tower.len(),
                                order_human(&cert.verdict),
                                path.display()
                            );
                        }
                        None => println!("{text}"),
                    }
                    return Ok(ExitCode::SUCCESS);
                }
                SearchOutcome::Exhausted(report) => {
                    eprintln!("search exhausted without a certificate");
                    if let Some(note) = &report.note {
                        eprintln!("note: {note}");
                    }
                    emit("search", &config, json!({ "exhausted": report }), out.as_deref(), true)?;
                    return Ok(ExitCode::from(2));
                }
            }
        }
        Command::Certify { cert } => {
            let text = std::fs::read_to_string(&cert)
                .with_context(|| format!("reading {}", cert.display()))?;
            let parsed: Certificate = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", cert.display()))?;
            let actual = certificate_hash(&parsed)?;
            if actual != parsed.hash {
                bail!("refusing {}: content hash mismatch", cert.display());
            }
            let report = verify_certificate(&parsed)?;
            if report.ok {
                println!(
                    "certificate verified: power {} on a {}-stage tower, {}",
                    parsed.power,
                    parsed.tower.len(),
                    order_human(&parsed.verdict)
                );
                return Ok(ExitCode::SUCCESS);
            }
            for diff in &report.diffs {
                eprintln!("diff: {diff}");
            }
            bail!("certificate rejected");
        }
        Command::Report { aut, cover, power, out } => {
            let f = read_aut(&aut)?;
            let text = std::fs::read_to_string(&cover)
                .with_context(|| format!("reading {}", cover.display()))?;
            let value: Value = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", cover.display()))?;
            check_envelope_hash(&value, &cover.display().to_string())?;
            let cover_value = value
                .pointer("/result/cover")
                .or_else(|| value.get("cover"))
                .unwrap_or(&value);
            let c: Cover = serde_json::from_value(cover_value.clone())
                .with_context(|| format!("no cover found in {}", cover.display()))?;
            let rep = report_trace_budget(&f, &c, power)?;
            println!(
                "l1 = {}, l2^2 = {}, edges = {} -> l2 criterion {}",
                rep.l1,
                rep.l2_sq,
                rep.edges,
                if rep.l2_exceeds_edges { "passes" } else { "fails" }
            );
            println!(
                "orbits = {}, needed = {} -> orbit criterion {}",
                rep.orbits,
                rep.needed_orbits,
                if rep.orbits_sufficient { "passes" } else { "fails" }
            );
            println!("homology order: {}", order_human(&rep.homology_order));
            if let Some(note) = &rep.hypothesis_note {
                println!("note: {note}");
            }
            emit("report", &config, json!({ "power": power, "report": rep }), out.as_deref(), false)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

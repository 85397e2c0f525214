use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use isopoints::gl2::{self, det_image, level, minus_identity, CartanKind, CartanSpec};
use isopoints::isolated::{analyze, analyze_batch, FilterReport};
use isopoints::labelio::{self, ImageRecord};
use isopoints::lattice::{self, SearchOptions};
use isopoints::modcurves::genus_xg;
use isopoints::{Family, MatrixGroup, PrimePowerModulus, ResidueMatrix};

/// Exit code of `filter` when the final set is nonempty.
const EXIT_NONEMPTY: u8 = 10;
const MIN_CAP: u64 = 10_000;

#[derive(Parser, Debug)]
#[command(
    name = "isopoints",
    version,
    about = "Isolated-point filter for l-adic images"
)]
struct Cli {
    /// Enumeration cap for group closures
    #[arg(long, global = true, env = "ISOPOINTS_MAX_ENUM")]
    max_enum: Option<u64>,
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true, env = "ISOPOINTS_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write output here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Lines,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Level, order, index, determinant image and genus of a group
    Info(Source),
    /// Run the three-step filter on one image
    Filter {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "gamma1")]
        family: Family,
    },
    /// Run the filter on every record of a generator file
    Batch {
        /// Generator file (default: bundled known images)
        #[arg(long)]
        gens_file: Option<PathBuf>,
        #[arg(long, default_value = "gamma1")]
        family: Family,
    },
    /// Subgroup classification, split Cartan containment and preimage rigidity
    LatticeCheck {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 49)]
        index_bound: u64,
        /// Candidate-subgroup budget; exhausting it fails the certificate
        #[arg(long, default_value_t = 2_000_000)]
        budget: u64,
    },
    /// Recompute level, index and genus of records and compare with their labels
    Validate {
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        gens_file: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Source {
    /// Label of a record in the generator file
    #[arg(long)]
    label: Option<String>,
    /// Generator file (default: bundled known images)
    #[arg(long)]
    gens_file: Option<PathBuf>,
    /// Cartan-type constructor, used with --mod
    #[arg(long)]
    cartan: Option<CartanKind>,
    /// Non-residue for nonsplit kinds
    #[arg(long)]
    epsilon: Option<u64>,
    /// The whole of GL2, used with --mod
    #[arg(long)]
    full: bool,
    /// Inline generators `a,b,c,d;...`, used with --mod
    #[arg(long)]
    gens: Option<String>,
    #[arg(long = "mod")]
    modulus: Option<u64>,
}

struct RunConfig {
    cap: u64,
    format: Format,
}

fn load_records(path: Option<&PathBuf>) -> Result<Vec<ImageRecord>> {
    match path {
        Some(p) => {
            labelio::read_generators_file(p).with_context(|| format!("reading {}", p.display()))
        }
        None => Ok(labelio::known_images()),
    }
}

fn resolve(src: &Source) -> Result<MatrixGroup> {
    let modulus = || -> Result<PrimePowerModulus> {
        let m = src
            .modulus
            .ok_or_else(|| anyhow!("--mod is required here"))?;
        Ok(PrimePowerModulus::from_modulus(m)?)
    };
    if let Some(kind) = src.cartan {
        let m = modulus()?;
        return Ok(gl2::build_cartan(&CartanSpec::new(kind, m, src.epsilon)?)?);
    }
    if src.full {
        return Ok(MatrixGroup::full(modulus()?));
    }
    if let Some(text) = &src.gens {
        let m = modulus()?;
        let line = format!("{q}.1.0.1|{q}|{text}", q = m.modulus());
        let rec = labelio::parse_generators(&line)?
            .pop()
            .ok_or_else(|| anyhow!("no generators"))?;
        return Ok(MatrixGroup::new(m, rec.generators)?.with_label("inline"));
    }
    let records = load_records(src.gens_file.as_ref())?;
    match &src.label {
        Some(l) => labelio::find_record(&records, l)
            .ok_or_else(|| anyhow!("unknown label {l:?}"))?
            .group()
            .map_err(Into::into),
        None if src.gens_file.is_some() && records.len() == 1 => Ok(records[0].group()?),
        None => bail!("specify --label, --cartan/--mod, --full --mod or --gens/--mod"),
    }
}

fn matrix_syntax(gens: &[ResidueMatrix]) -> String {
    gens.iter()
        .map(|g| {
            g.entries()
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn cmd_info(src: &Source, cfg: &RunConfig) -> Result<(String, u8)> {
    let g = resolve(src)?;
    let cap = cfg.cap;
    let order = g.order(cap)?;
    let lvl = level(&g, cap)?;
    let index = gl2::index_in_ambient(&g, cap)?;
    let det = det_image(&g);
    let minus = g.contains(&minus_identity(g.modulus()), cap)?;
    let genus = genus_xg(&g, cap)?;
    let label = g.label().unwrap_or("unlabeled");
    let mut out = String::new();
    let rows: Vec<(&str, String)> = vec![
        ("label", label.to_string()),
        ("modulus", g.modulus().modulus().to_string()),
        ("level", lvl.modulus().to_string()),
        ("order", order.to_string()),
        ("index", index.to_string()),
        (
            "det_image",
            format!("{} of {}", det.units.len(), g.modulus().unit_count()),
        ),
        ("det_surjective", det.is_surjective().to_string()),
        ("contains_minus_identity", minus.to_string()),
        ("mu", genus.mu.to_string()),
        ("nu2", genus.nu2.to_string()),
        ("nu3", genus.nu3.to_string()),
        ("nu_inf", genus.nu_inf.to_string()),
        ("genus", genus.genus.to_string()),
    ];
    for (k, v) in rows {
        match cfg.format {
            Format::Text => writeln!(out, "{k:<24}{v}")?,
            Format::Lines => writeln!(out, "{label}\t{k}\t{v}")?,
        }
    }
    Ok((out, 0))
}

fn render(report: &FilterReport, format: Format) -> String {
    match format {
        Format::Text => format!("{report}\n"),
        Format::Lines => report.to_lines(),
    }
}

fn cmd_filter(src: &Source, family: Family, cfg: &RunConfig) -> Result<(String, u8)> {
    let g = resolve(src)?;
    let report = analyze(&g, family, cfg.cap)?;
    let code = if report.final_set().is_empty() {
        0
    } else {
        EXIT_NONEMPTY
    };
    Ok((render(&report, cfg.format), code))
}

fn cmd_batch(path: Option<&PathBuf>, family: Family, cfg: &RunConfig) -> Result<(String, u8)> {
    let records = load_records(path)?;
    let groups: Vec<Result<MatrixGroup>> = records
        .iter()
        .map(|r| r.group().map_err(Into::into))
        .collect();
    let ok: Vec<MatrixGroup> = groups
        .iter()
        .filter_map(|g| g.as_ref().ok().cloned())
        .collect();
    let mut results = analyze_batch(&ok, family, cfg.cap).into_iter();
    let mut out = String::new();
    let mut nonempty = Vec::new();
    let mut failures = Vec::new();
    for (rec, g) in records.iter().zip(&groups) {
        let res = match g {
            Ok(_) => results
                .next()
                .expect("one result per group")
                .map_err(anyhow::Error::from),
            Err(e) => Err(anyhow!("{e}")),
        };
        match res {
            Ok(report) => {
                if !report.final_set().is_empty() {
                    nonempty.push(rec.rszb_label.clone());
                }
                out.push_str(&render(&report, cfg.format));
            }
            Err(e) => {
                failures.push(rec.rszb_label.clone());
                match cfg.format {
                    Format::Text => writeln!(out, "image {}: error: {e}", rec.rszb_label)?,
                    Format::Lines => writeln!(out, "# error\t{}\t{e}", rec.rszb_label)?,
                }
            }
        }
    }
    match cfg.format {
        Format::Text => {
            writeln!(
                out,
                "summary: {} records, {} with nonempty final set",
                records.len(),
                nonempty.len()
            )?;
            for l in &nonempty {
                writeln!(out, "  nonempty: {l}")?;
            }
            for l in &failures {
                writeln!(out, "  failed: {l}")?;
            }
        }
        Format::Lines => {
            writeln!(
                out,
                "# summary\t{family}\trecords={}\tnonempty={}",
                records.len(),
                nonempty.join(",")
            )?;
            if !failures.is_empty() {
                writeln!(out, "# failed\t{}", failures.join(","))?;
            }
        }
    }
    Ok((out, 0))
}

fn cmd_lattice_check(
    src: &Source,
    index_bound: u64,
    budget: u64,
    cfg: &RunConfig,
) -> Result<(String, u8)> {
    let g = resolve(src)?;
    let label = g.label().unwrap_or("unlabeled").to_string();
    let cap = cfg.cap;
    let mut out = String::new();
    let t = Instant::now();
    writeln!(out, "# lattice certificate for {label} mod {}", g.modulus())?;
    let mut opts = SearchOptions::new(index_bound);
    opts.budget = budget;
    opts.cap = cap;
    let constrained = lattice::proper_detsurjective_subgroups(&g, &opts)?;
    let free = lattice::proper_detsurjective_subgroups(&g, &opts.unconstrained())?;
    for (variant, classes) in [("same_mod_ell", &constrained), ("unconstrained", &free)] {
        let indices: Vec<String> = classes
            .iter()
            .map(|c| c.index_in_parent.to_string())
            .collect();
        writeln!(
            out,
            "subgroups\t{variant}\tindex_bound={index_bound}\tclasses={}\tindices={}",
            classes.len(),
            if indices.is_empty() {
                "-".into()
            } else {
                indices.join(",")
            }
        )?;
    }
    for (i, c) in constrained.iter().enumerate() {
        writeln!(
            out,
            "class\t{}\tindex={}\tclass_size={}\tgenerators={}",
            i + 1,
            c.index_in_parent,
            c.class_size,
            matrix_syntax(c.representative.generators())
        )?;
        let m = lattice::split_cartan_membership(&c.representative, cap)?;
        match (&m.witness, m.index) {
            (Some(w), Some(idx)) => writeln!(
                out,
                "split_cartan\tclass {}\tconjugate\tindex={idx}\twitness={}",
                i + 1,
                matrix_syntax(std::slice::from_ref(w))
            )?,
            _ => writeln!(out, "split_cartan\tclass {}\tnot_conjugate", i + 1)?,
        }
    }
    let n = g.modulus().exponent();
    let target = g.modulus().with_exponent(n + 1)?;
    match lattice::preimage_rigidity(&g, n + 1, budget, cap) {
        Ok(r) if r.rigid => writeln!(
            out,
            "rigidity\tmod {}\trigid\tstable_subspaces={}",
            target.modulus(),
            r.stable_subspaces
        )?,
        Ok(r) => {
            let h = r.counterexample.expect("non-rigid reports carry a witness");
            writeln!(
                out,
                "rigidity\tmod {}\tnot_rigid\torder={}\twitness={}",
                target.modulus(),
                h.order(cap)?,
                matrix_syntax(h.generators())
            )?
        }
        Err(isopoints::Error::Unsupported(why)) => writeln!(
            out,
            "rigidity\tmod {}\tunsupported\t{why}",
            target.modulus()
        )?,
        Err(e) => return Err(e.into()),
    }
    if cfg.format == Format::Text {
        writeln!(out, "# elapsed {:.1?}", t.elapsed())?;
    }
    Ok((out, 0))
}

fn cmd_validate(
    label: Option<&str>,
    path: Option<&PathBuf>,
    cfg: &RunConfig,
) -> Result<(String, u8)> {
    let records = load_records(path)?;
    let chosen: Vec<&ImageRecord> = match label {
        Some(l) => {
            vec![labelio::find_record(&records, l).ok_or_else(|| anyhow!("unknown label {l:?}"))?]
        }
        None => records.iter().collect(),
    };
    let mut out = String::new();
    let mut failed = 0;
    let total = chosen.len();
    for rec in chosen {
        let report = labelio::validate_record(rec, cfg.cap);
        if !report.passed() {
            failed += 1;
        }
        out.push_str(&report.to_lines());
    }
    writeln!(out, "# validated {total} records, {failed} with mismatches")?;
    Ok((out, if failed == 0 { 0 } else { 1 }))
}

fn run(cli: Cli) -> Result<u8> {
    let cap = cli.max_enum.unwrap_or(isopoints::DEFAULT_ENUM_CAP);
    if cap < MIN_CAP {
        bail!("--max-enum must be at least {MIN_CAP}");
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("thread pool")?;
    }
    let cfg = RunConfig {
        cap,
        format: cli.format,
    };
    let (text, code) = match &cli.command {
        Command::Info(src) => cmd_info(src, &cfg)?,
        Command::Filter { source, family } => cmd_filter(source, *family, &cfg)?,
        Command::Batch { gens_file, family } => cmd_batch(gens_file.as_ref(), *family, &cfg)?,
        Command::LatticeCheck {
            source,
            index_bound,
            budget,
        } => cmd_lattice_check(source, *index_bound, *budget, &cfg)?,
        Command::Validate { label, gens_file } => {
            cmd_validate(label.as_deref(), gens_file.as_ref(), &cfg)?
        }
    };
    match &cli.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(code)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

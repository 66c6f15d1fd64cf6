use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use fiat_core::circuit::backend::backend_by_name;
use fiat_core::circuit::{build_audit_circuit, generate_witness, is_satisfied, Algo, AuditParams, AuditShape, ProofBlob, Tag};
use fiat_core::crypto::{KeyPair, Point, Scalar};
use fiat_core::dataset::{self, Dataset, Matrix, RoleConfig};
use fiat_core::estimator::{audit_mi_grid, threshold_fraction};
use fiat_core::pca::FixedPca;
use fiat_core::protocol::{receiver_decode, sender_audit, AuditFunc, AuditOutput, ENC_FUNC_ID};
use fiat_core::{field, Error, FixedPoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{AuditConfig, Threshold};
use crate::store::Store;
use crate::{Cli, Command};

pub const STATEMENT_FILE: &str = "statement.json";
pub const PROOF_FILE: &str = "proof.bin";

// Stream ids keep the generators drawn from one `--seed` independent.
const STREAM_KEYGEN: u64 = 1;
const STREAM_AUDIT: u64 = 2;
const STREAM_SYNTH: u64 = 3;
const STREAM_BENCH: u64 = 4;

/// What the owner submits to `verify_and_update`.
#[derive(Debug, Serialize, Deserialize)]
pub struct Submission {
    pub pass: bool,
    pub mi: FixedPoint,
    pub output: AuditOutput,
}

struct Ctx<'a> {
    cli: &'a Cli,
    cfg: AuditConfig,
    out: PathBuf,
}

impl Ctx<'_> {
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = match self.cli.seed {
            Some(s) => ChaCha8Rng::seed_from_u64(s),
            None => ChaCha8Rng::from_entropy(),
        };
        r.set_stream(stream);
        r
    }

    fn backend_name(&self) -> &str {
        self.cli.backend.as_deref().unwrap_or(&self.cfg.backend)
    }

    fn store(&self) -> anyhow::Result<Store> {
        Store::open(&self.out, &self.cfg.owner, &self.cfg.consumer)
    }

    fn dataset(&self) -> anyhow::Result<Dataset> {
        let path = self.cfg.dataset.as_ref().context("config has no dataset")?;
        let roles = self.cfg.roles.as_ref().context("config has no roles file")?;
        let roles = RoleConfig::load(roles).with_context(|| format!("reading {}", roles.display()))?;
        Ok(dataset::ingest_csv(path, &roles).with_context(|| format!("ingesting {}", path.display()))?)
    }
}

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = match &cli.config {
        Some(p) => AuditConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => AuditConfig::default(),
    };
    let out = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    let ctx = Ctx { cli, cfg, out };
    match &cli.command {
        Command::Synth { rows, n, m, threshold } => synth(&ctx, *rows, *n, *m, *threshold),
        Command::Keygen { name } => keygen(&ctx, name),
        Command::Commit => commit(&ctx),
        Command::Propose { k, raw, pubkey } => {
            let algo = match (raw, k) {
                (true, _) => Algo::Raw,
                (false, Some(k)) => Algo::Pca(*k),
                (false, None) => ctx.cfg.algo.ok_or_else(|| Error::ParseError("pass --k, --raw or set k in the config".into()))?,
            };
            propose(&ctx, algo, pubkey)
        }
        Command::Audit => audit(&ctx),
        Command::Verify { statement, proof } => verify(
            &ctx,
            statement.clone().unwrap_or_else(|| ctx.out.join(STATEMENT_FILE)),
            proof.clone().unwrap_or_else(|| ctx.out.join(PROOF_FILE)),
        ),
        Command::Decode { sk } => decode(&ctx, sk),
        Command::Bench { sizes, n, m, k, no_witness } => bench(&ctx, sizes, AuditShape { rows: 0, n: *n, m: *m }, *k, !no_witness),
        Command::MiReport { dims } => mi_report(&ctx, dims),
    }
}

fn synth(ctx: &Ctx, rows: usize, n: usize, m: usize, threshold: Option<f64>) -> anyhow::Result<()> {
    fs::create_dir_all(&ctx.out)?;
    let d = dataset::synthetic_correlated(rows, n, m, &mut ctx.rng(STREAM_SYNTH))?;
    dataset::write_csv(&d, fs::File::create(ctx.out.join("data.csv"))?)?;
    fs::write(ctx.out.join("roles.txt"), dataset::synthetic_roles(n, m))?;
    let threshold = match threshold {
        Some(t) => format!("fixed = {t}"),
        None => format!("entropy_fraction = {}", crate::config::DEFAULT_FRACTION),
    };
    fs::write(ctx.out.join("audit.toml"), format!("dataset = \"data.csv\"\nroles = \"roles.txt\"\n\n[threshold]\n{threshold}\n"))?;
    println!("wrote {rows}x{} dataset to {}", n + m, ctx.out.join("data.csv").display());
    Ok(())
}

fn keygen(ctx: &Ctx, name: &str) -> anyhow::Result<()> {
    fs::create_dir_all(&ctx.out)?;
    let kp = KeyPair::generate(&mut ctx.rng(STREAM_KEYGEN));
    fs::write(ctx.out.join(format!("{name}.sk")), format!("{}\n", kp.sk.to_decimal()))?;
    fs::write(
        ctx.out.join(format!("{name}.pk")),
        format!("{}\n{}\n", field::to_decimal(&kp.pk.x), field::to_decimal(&kp.pk.y)),
    )?;
    println!("{}", ctx.out.join(format!("{name}.pk")).display());
    Ok(())
}

fn read_pk(path: &Path) -> anyhow::Result<Point> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let vals: Vec<_> = text.split_whitespace().map(field::parse_decimal).collect::<Result<_, _>>()?;
    let [x, y] = vals[..] else {
        return Err(Error::ParseError(format!("{}: expected two coordinates", path.display())).into());
    };
    Ok(Point { x, y })
}

fn read_sk(path: &Path) -> anyhow::Result<Scalar> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Scalar::parse_decimal(text.trim())?)
}

fn commit(ctx: &Ctx) -> anyhow::Result<()> {
    let d = ctx.dataset()?;
    let threshold = match ctx.cfg.threshold {
        Threshold::Fixed(v) => FixedPoint::encode(v)?,
        Threshold::EntropyFraction(f) => {
            let (xs, _) = dataset::split(&d);
            let h = audit_mi_grid(&xs, &xs, ctx.cfg.intervals)?.entropy_x_nats;
            threshold_fraction(&h, f)
        }
    };
    let func = AuditFunc { intervals: ctx.cfg.intervals, max_iters: ctx.cfg.max_iters, ..AuditFunc::default() };
    let hash = d.commitment();
    let mut store = ctx.store()?;
    let owner = store.contract.state.owner.clone();
    let r = store.contract.get_data(&owner, hash, AuditShape::of(&d), threshold, &func.to_string(), ENC_FUNC_ID);
    store.save()?;
    r?;
    let digest = field::to_decimal(&hash.digest);
    fs::write(ctx.out.join("commitment.txt"), format!("{digest}\n"))?;
    println!("{digest}");
    eprintln!("threshold {} nats", threshold.decode());
    Ok(())
}

fn propose(ctx: &Ctx, algo: Algo, pubkey: &Path) -> anyhow::Result<()> {
    let pk = read_pk(pubkey)?;
    let mut store = ctx.store()?;
    let consumer = store.contract.state.consumer.clone();
    let r = store.contract.get_proposal(&consumer, algo, pk);
    store.save()?;
    r?;
    println!("{algo}");
    Ok(())
}

fn audit(ctx: &Ctx) -> anyhow::Result<()> {
    let d = ctx.dataset()?;
    let backend = backend_by_name(ctx.backend_name())?;
    let mut store = ctx.store()?;
    let circuit = store.contract.audit_circuit()?;
    let esk = Scalar::random(&mut ctx.rng(STREAM_AUDIT));
    let a = sender_audit(&d, &store.contract, &circuit, backend.as_ref(), &esk)?;
    let sub = Submission { pass: a.pass, mi: a.mi, output: a.output };
    fs::write(ctx.out.join(STATEMENT_FILE), serde_json::to_string_pretty(&sub)?)?;
    fs::write(ctx.out.join(PROOF_FILE), a.proof.as_bytes())?;
    let public: String =
        circuit.statement_inputs(&a.statement).iter().map(|v| field::to_decimal(v) + "\n").collect();
    fs::write(ctx.out.join("public_inputs.txt"), public)?;
    let owner = store.contract.state.owner.clone();
    store.contract.note(&owner, "audit", &[a.pass.to_string(), a.mi.raw().to_string()]);
    store.save()?;
    println!("{}\t{}", if a.pass { "pass" } else { "fail" }, a.mi.decode());
    Ok(())
}

fn verify(ctx: &Ctx, statement: PathBuf, proof: PathBuf) -> anyhow::Result<()> {
    let text = fs::read_to_string(&statement).with_context(|| format!("reading {}", statement.display()))?;
    let sub: Submission =
        serde_json::from_str(&text).map_err(|e| Error::ParseError(format!("{}: {e}", statement.display())))?;
    let proof = ProofBlob(fs::read(&proof).with_context(|| format!("reading {}", proof.display()))?);
    let backend = backend_by_name(ctx.backend_name())?;
    let mut store = ctx.store()?;
    let circuit = store.contract.audit_circuit()?;
    let owner = store.contract.state.owner.clone();
    let r = store.contract.verify_and_update(&owner, sub.pass, sub.mi, sub.output, &proof, backend.as_ref(), &circuit);
    store.save()?;
    let verdict = match &r {
        Ok(()) => format!("valid\t{}\t{}\n", if sub.pass { "pass" } else { "fail" }, sub.mi.decode()),
        Err(e) => format!("invalid\t{e}\n"),
    };
    fs::write(ctx.out.join("verdict.txt"), &verdict)?;
    r?;
    print!("{verdict}");
    Ok(())
}

fn decode(ctx: &Ctx, sk: &Path) -> anyhow::Result<()> {
    let sk = read_sk(sk)?;
    let mut store = ctx.store()?;
    let y = receiver_decode(&sk, &store.contract)?;
    let path = ctx.out.join("y.csv");
    write_matrix(&path, &y)?;
    let consumer = store.contract.state.consumer.clone();
    store.contract.note(&consumer, "decode", &[y.len().to_string()]);
    store.save()?;
    println!("{}", path.display());
    Ok(())
}

fn write_matrix(path: &Path, y: &Matrix) -> anyhow::Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    let k = y.first().map_or(0, Vec::len);
    writeln!(f, "{}", (0..k).map(|j| format!("y{j}")).collect::<Vec<_>>().join(","))?;
    for row in y {
        writeln!(f, "{}", row.iter().map(|v| v.decode().to_string()).collect::<Vec<_>>().join(","))?;
    }
    f.flush()?;
    Ok(())
}

fn bench(ctx: &Ctx, sizes: &[usize], shape: AuditShape, k: usize, witness: bool) -> anyhow::Result<()> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
        bail!(Error::ParseError("sizes must be strictly ascending".into()));
    }
    let params = AuditParams::new(Algo::Pca(k));
    let mut rng = ctx.rng(STREAM_BENCH);
    let kp = KeyPair::generate(&mut rng);
    let threshold = FixedPoint::encode(1000.0)?;
    println!("N\ttotal\thash\tpca\tmi\tenc\tglue\tbuild_ms\twitness_ms\tcheck_ms");
    let mut totals = Vec::new();
    let mut min_share = f64::INFINITY;
    for &rows in sizes {
        let shape = AuditShape { rows, ..shape };
        let t = Instant::now();
        let c = build_audit_circuit(shape, params)?;
        let build_ms = t.elapsed().as_millis();
        let (mut witness_ms, mut check_ms) = (String::from("-"), String::from("-"));
        if witness {
            let d = dataset::synthetic_correlated(rows, shape.n, shape.m, &mut rng)?;
            let esk = Scalar::random(&mut rng);
            let t = Instant::now();
            let run = generate_witness(&c, &d, &kp.pk, &esk, &threshold)?;
            witness_ms = t.elapsed().as_millis().to_string();
            let t = Instant::now();
            let sat = is_satisfied(&c, &run.witness, &run.statement)?;
            check_ms = t.elapsed().as_millis().to_string();
            if !sat.is_ok() {
                bail!("N={rows}: honest witness rejected: {sat}");
            }
        }
        let tc = c.cs.tag_counts();
        let get = |t: Tag| tc.get(&t).copied().unwrap_or(0);
        let total = c.cs.num_constraints();
        min_share = min_share.min((get(Tag::Enc) + get(Tag::Mi)) as f64 / total as f64);
        totals.push(total as i128);
        println!(
            "{rows}\t{total}\t{}\t{}\t{}\t{}\t{}\t{build_ms}\t{witness_ms}\t{check_ms}",
            get(Tag::Hash),
            get(Tag::Pca),
            get(Tag::Mi),
            get(Tag::Enc),
            get(Tag::Glue)
        );
    }
    let n0 = sizes[0] as i128;
    let (nl, tl) = (*sizes.last().unwrap() as i128, *totals.last().unwrap());
    let affine = sizes.iter().zip(&totals).all(|(&n, &t)| (t - totals[0]) * (nl - n0) == (tl - totals[0]) * (n as i128 - n0));
    if sizes.len() > 1 {
        println!("# per_row\t{}", (tl - totals[0]) as f64 / (nl - n0) as f64);
    }
    println!("# affine\t{affine}");
    println!("# enc_mi_share_min\t{min_share:.4}");
    Ok(())
}

fn column(x: &Matrix, j: usize) -> Matrix {
    x.iter().map(|r| vec![r[j]]).collect()
}

fn mi_report(ctx: &Ctx, dims: &[usize]) -> anyhow::Result<()> {
    let d = ctx.dataset()?;
    let m = d.m();
    if let Some(bad) = dims.iter().find(|&&k| k == 0 || k > m) {
        bail!(Error::ParseError(format!("dimension {bad} outside 1..={m}")));
    }
    let (xs, xns) = dataset::split(&d);
    let kmax = *dims.iter().max().expect("clap requires dims");
    let y = FixedPca::fit(&xns, kmax, ctx.cfg.max_iters)?.project(&xns)?;
    let mut reprs: Vec<(String, Matrix)> = dims
        .iter()
        .map(|&k| (format!("pca({k})"), y.iter().map(|r| r[..k].to_vec()).collect()))
        .collect();
    reprs.push(("raw".into(), xns));
    let fraction = ctx.cfg.fraction();
    println!("feature\trepr\tentropy\tmi\tratio\tbelow_fraction");
    for (j, name) in d.schema.sensitive_names().iter().enumerate() {
        let s = column(&xs, j);
        for (label, y) in &reprs {
            let r = audit_mi_grid(&s, y, ctx.cfg.intervals)?;
            let ratio = r.ratio.decode();
            println!(
                "{name}\t{label}\t{:.6}\t{:.6}\t{ratio:.6}\t{}",
                r.entropy_x_nats.decode(),
                r.mi_nats.decode(),
                ratio < fraction
            );
        }
    }
    Ok(())
}

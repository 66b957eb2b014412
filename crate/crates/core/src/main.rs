use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spaceoid::cstar::Report;
use spaceoid::spaceoid::{morphism_distance, spaceoid_distance, verify_morphism, verify_spaceoid};
use spaceoid::spectra::{
    gamma, gelfand_transform, generate, generate_spaceoid, random_morphism_into, sections_spectrum_iso, sg_cfield,
    sg_cfield_morphism, sg_linebundle, sg_linebundle_morphism, sigma, tg_cfield, tg_cfield_morphism, tg_linebundle,
    tg_linebundle_morphism, verify_isomorphism,
};
use spaceoid::textio::{parse, serialize, Document, Payload};

#[derive(Parser)]
#[command(name = "spaceoid", version, about = "Spectra of commutative C*-categories and their Fell bundles")]
struct Cli {
    /// Tolerance for every check.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Seed for generated data.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Suppress the CHECK report.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the axiom suite for the document's kind.
    Verify { file: PathBuf },
    /// Spectrum of a commutative full C*-category.
    Spectrum {
        file: PathBuf,
        #[arg(short)]
        o: Option<PathBuf>,
    },
    /// C*-category of sections of a spaceoid.
    Sections {
        file: PathBuf,
        #[arg(short)]
        o: Option<PathBuf>,
    },
    /// Spaceoid to enriched Fell bundle (`--to`) or back (`--from`).
    Convert {
        file: PathBuf,
        #[arg(long, conflicts_with = "from", required_unless_present = "from")]
        to: Option<Bundle>,
        #[arg(long)]
        from: Option<Bundle>,
        #[arg(short)]
        o: Option<PathBuf>,
    },
    /// Duality or equivalence round trip; prints the largest discrepancy.
    Roundtrip { file: PathBuf },
    /// Seeded random instance.
    Gen {
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long, default_value_t = 2)]
        objects: usize,
        #[arg(long, default_value_t = 3)]
        points: usize,
        #[arg(short)]
        o: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Bundle {
    Linebundle,
    Cfield,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Cat,
    Spaceoid,
    Morphism,
}

enum Failure {
    /// Input could not be read or parsed.
    Input(String),
    /// A check failed or a construction was refused.
    Verification(String),
}

impl From<spaceoid::Error> for Failure {
    fn from(e: spaceoid::Error) -> Self {
        Failure::Verification(e.to_string())
    }
}

fn load(path: &Path) -> Result<Document, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn store(doc: &Document, out: Option<&Path>) -> Result<(), Failure> {
    let text = serialize(doc);
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

struct Run {
    tol: f64,
    quiet: bool,
}

impl Run {
    fn report(&self, rep: &Report<f64>) -> Result<(), Failure> {
        if !self.quiet {
            for c in &rep.checks {
                println!("CHECK {} {} {:.3e}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.discrepancy);
            }
            for n in &rep.notes {
                eprintln!("note: {n}");
            }
        }
        match rep.failures().next() {
            None => Ok(()),
            Some(c) => Err(Failure::Verification(format!("check {} failed", c.name))),
        }
    }

    fn verify(&self, doc: &Document) -> Result<(), Failure> {
        let tol = self.tol;
        let rep = match &doc.payload {
            Payload::CStar(c) => c.verify_cstar(tol),
            Payload::Spaceoid(s) => verify_spaceoid(s, tol),
            Payload::LineBundle(b) => b.verify(tol),
            Payload::CField(b) => b.verify(tol),
            Payload::SpaceoidMorphism { source, target, morphism } => {
                let mut rep = Report::new();
                rep.extend_prefixed("source_", verify_spaceoid(source, tol));
                rep.extend_prefixed("target_", verify_spaceoid(target, tol));
                rep.extend_prefixed("", verify_morphism(morphism, source, target, tol));
                rep
            }
            Payload::StarFunctor { source, target, functor } => {
                let mut rep = Report::new();
                rep.extend_prefixed("source_", source.verify_cstar(tol));
                rep.extend_prefixed("target_", target.verify_cstar(tol));
                rep.extend_prefixed("", functor.verify(source, target, tol)?);
                rep
            }
        };
        self.report(&rep)
    }

    fn roundtrip(&self, doc: &Document) -> Result<(), Failure> {
        let tol = self.tol;
        let mut rep = Report::new();
        let text = serialize(doc);
        let same = parse(&text).map(|d| serialize(&d) == text).unwrap_or(false);
        rep.record_bool("text_roundtrip", same);
        match &doc.payload {
            Payload::CStar(c) => rep.extend_prefixed("gelfand_", gelfand_transform(c, tol)?.verify(c, tol)?),
            Payload::Spaceoid(s) => {
                let (sp, m, inv) = sections_spectrum_iso(s, tol)?;
                rep.extend_prefixed("spectrum_iso_", verify_isomorphism(&m, &inv, s, &sp.spaceoid, tol));
                rep.record("linebundle_roundtrip", spaceoid_distance(&sg_linebundle(&tg_linebundle(s)?)?, s), tol);
                rep.record("cfield_roundtrip", spaceoid_distance(&sg_cfield(&tg_cfield(s)?)?, s), tol);
            }
            Payload::LineBundle(b) => rep.record("linebundle_roundtrip", tg_linebundle(&sg_linebundle(b)?)?.distance(b), tol),
            Payload::CField(b) => rep.record("cfield_roundtrip", tg_cfield(&sg_cfield(b)?)?.distance(b), tol),
            Payload::SpaceoidMorphism { source, target, morphism } => {
                let line = sg_linebundle_morphism(&tg_linebundle_morphism(morphism, source, target)?)?;
                rep.record("linebundle_morphism_roundtrip", morphism_distance(&line, morphism), tol);
                let field = sg_cfield_morphism(&tg_cfield_morphism(morphism, source, target)?)?;
                rep.record("cfield_morphism_roundtrip", morphism_distance(&field, morphism), tol);
            }
            Payload::StarFunctor { source, target, functor } => {
                rep.extend_prefixed("", functor.verify(source, target, tol)?);
            }
        }
        let outcome = self.report(&rep);
        if !self.quiet {
            println!("MAX-DISCREPANCY {:.3e}", rep.max_discrepancy());
        }
        outcome
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let run = Run { tol: cli.tol, quiet: cli.quiet };
    match cli.command {
        Command::Verify { file } => run.verify(&load(&file)?),
        Command::Spectrum { file, o } => match load(&file)?.payload {
            Payload::CStar(c) => {
                let sp = sigma(&c, cli.tol)?;
                store(&Document::new(Payload::Spaceoid(sp.spaceoid)), o.as_deref())
            }
            _ => Err(Failure::Input("spectrum expects a cstar-category document".into())),
        },
        Command::Sections { file, o } => match load(&file)?.payload {
            Payload::Spaceoid(s) => store(&Document::new(Payload::CStar(gamma(&s)?)), o.as_deref()),
            _ => Err(Failure::Input("sections expects a spaceoid document".into())),
        },
        Command::Convert { file, to, from, o } => {
            let payload = match (load(&file)?.payload, to, from) {
                (Payload::Spaceoid(s), Some(Bundle::Linebundle), _) => Payload::LineBundle(tg_linebundle(&s)?),
                (Payload::Spaceoid(s), Some(Bundle::Cfield), _) => Payload::CField(tg_cfield(&s)?),
                (Payload::LineBundle(b), None, Some(Bundle::Linebundle)) => Payload::Spaceoid(sg_linebundle(&b)?),
                (Payload::CField(b), None, Some(Bundle::Cfield)) => Payload::Spaceoid(sg_cfield(&b)?),
                (_, Some(_), _) => return Err(Failure::Input("--to expects a spaceoid document".into())),
                _ => return Err(Failure::Input("--from does not match the bundle in the document".into())),
            };
            store(&Document::new(payload), o.as_deref())
        }
        Command::Roundtrip { file } => run.roundtrip(&load(&file)?),
        Command::Gen { kind, objects, points, o } => {
            let payload = match kind {
                GenKind::Cat => Payload::CStar(generate(cli.seed, objects, points)?),
                GenKind::Spaceoid => Payload::Spaceoid(generate_spaceoid(cli.seed, objects, points)?),
                GenKind::Morphism => {
                    let target = generate_spaceoid(cli.seed, objects, points)?;
                    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed ^ 0x5eed);
                    let (source, morphism) = random_morphism_into(&mut rng, &target, points)?;
                    Payload::SpaceoidMorphism { source, target, morphism }
                }
            };
            store(&Document::new(payload), o.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
